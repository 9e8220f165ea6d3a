//! The `spectra` subcommands. Each writes its report to `out` and returns
//! the process exit code, or an error carrying one.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use spectra_core::metrics::{
    estimate_kappa, fit_linear_rate, fit_sublinear_rate, mean_curve, min_alignment, FitWindow,
    DIST_FLOOR,
};
use spectra_core::problems::{derive_seed, rip_estimate};
use spectra_core::theory::{brute_force_descent_min, tsd_lower_bound};
use spectra_core::{Problem, ProblemSpec, Trace};

use crate::config::RunConfig;
use crate::error::{HarnessError, Result};
use crate::runner::{
    build_instance, execute, parallel_map, rip_ranks, run_metrics, worker_count, Experiment, FStar,
    RecoveryReport, RunMetrics, RIP_TAG,
};

/// Largest dimension accepted by `verify-lemma`.
pub const LEMMA_MAX_N: usize = 5;
/// Largest tolerated gap between a closed-form bound and its oracle.
pub const LEMMA_TOLERANCE: f64 = 2e-3;
pub const LEMMA_KAPPAS: [f64; 3] = [0.6, 0.8, 0.95];
/// Feasibility threshold on δ_{5r*} reported by `rip-check`.
pub const RIP_FEASIBILITY: f64 = 0.08;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |e| HarnessError::io(path, e)
}

fn stdout_err(e: std::io::Error) -> HarnessError {
    HarnessError::io("<stdout>", e)
}

#[derive(Serialize)]
pub struct InstanceSummary {
    pub seed: u64,
    pub instance_seed: u64,
    pub f_star: FStar,
    pub best_variant: Option<String>,
    pub recovery: Option<RecoveryReport>,
}

#[derive(Serialize)]
pub struct VariantSummary {
    pub label: Option<String>,
    pub mean_f_final: f64,
    pub runs: Vec<RunMetrics>,
}

/// Pointwise arithmetic mean over seeds of the best variant's traces.
#[derive(Serialize)]
pub struct MeanCurve {
    pub variant: Option<String>,
    pub t: Vec<usize>,
    pub f: Vec<f64>,
    pub dist: Option<Vec<f64>>,
}

#[derive(Serialize)]
pub struct Summary {
    pub name: String,
    pub workers: usize,
    pub config: RunConfig,
    pub instances: Vec<InstanceSummary>,
    pub variants: Vec<VariantSummary>,
    pub best_variant: Option<String>,
    pub mean_curve: MeanCurve,
}

/// Per-run metrics and the mean curve of an executed experiment.
pub fn summarize(cfg: &RunConfig, exp: &Experiment) -> Summary {
    let n = exp.instances.len();
    let floor_of = |i: usize| {
        cfg.floor.unwrap_or_else(|| {
            exp.recovery[i]
                .as_ref()
                .filter(|r| r.xi > 0.0)
                .and_then(|r| r.floor)
                .unwrap_or(0.0)
        })
    };
    let variants = exp
        .variants
        .iter()
        .enumerate()
        .map(|(v, variant)| VariantSummary {
            label: variant.label.clone(),
            mean_f_final: exp.mean_final_f(v),
            runs: (0..n)
                .map(|i| {
                    let inst = &exp.instances[i];
                    run_metrics(
                        inst,
                        exp.run(v, i),
                        cfg.csv_name(variant, inst.seed),
                        exp.f_stars[i].value,
                        floor_of(i),
                    )
                })
                .collect(),
        })
        .collect();
    let instances = (0..n)
        .map(|i| InstanceSummary {
            seed: exp.instances[i].seed,
            instance_seed: exp.instances[i].instance_seed,
            f_star: exp.f_stars[i].clone(),
            best_variant: exp.variants[exp.best_variant_for(i)].label.clone(),
            recovery: exp.recovery[i].clone(),
        })
        .collect();
    let best = exp.best_variant();
    let traces: Vec<&Trace> = (0..n).map(|i| &exp.run(best, i).output.trace).collect();
    let f = mean_curve(
        &traces
            .iter()
            .map(|t| t.records.iter().map(|r| r.f).collect())
            .collect::<Vec<_>>(),
    );
    let dists: Option<Vec<Vec<f64>>> = traces
        .iter()
        .map(|t| {
            t.records
                .iter()
                .map(|r| r.dist)
                .collect::<Option<Vec<f64>>>()
        })
        .collect();
    Summary {
        name: cfg.name.clone(),
        workers: exp.workers,
        config: cfg.clone(),
        instances,
        variants,
        best_variant: exp.variants[best].label.clone(),
        mean_curve: MeanCurve {
            variant: exp.variants[best].label.clone(),
            t: (0..f.len()).collect(),
            f,
            dist: dists.map(|d| mean_curve(&d)),
        },
    }
}

/// Writes one CSV per run and `summary.json` under the output directory.
pub fn write_outputs(cfg: &RunConfig, exp: &Experiment) -> Result<Summary> {
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for (v, variant) in exp.variants.iter().enumerate() {
        for (i, inst) in exp.instances.iter().enumerate() {
            let path = dir.join(cfg.csv_name(variant, inst.seed));
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            let mut w = std::io::BufWriter::new(file);
            exp.run(v, i)
                .output
                .trace
                .write_csv(&mut w)
                .map_err(io_err(&path))?;
            w.flush().map_err(io_err(&path))?;
        }
    }
    let summary = summarize(cfg, exp);
    let path = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    fs::write(&path, text + "\n").map_err(io_err(&path))?;
    Ok(summary)
}

/// `spectra run <config.json>`.
pub fn cmd_run(config_path: &Path, out: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::from_path(config_path)?;
    let jobs = cfg.variants().len() * cfg.seeds.len();
    let workers = worker_count(jobs)?;
    let exp = execute(&cfg, workers)?;
    let summary = write_outputs(&cfg, &exp)?;
    for v in &summary.variants {
        for r in &v.runs {
            let rel = r
                .rel_error
                .map(|e| format!("{e:.3e}"))
                .unwrap_or_else(|| "-".into());
            writeln!(
                out,
                "{}  f={:.6e}  gap={:.3e}  rel_error={rel}  {:.2}s",
                r.csv, r.f_final, r.gap_final, r.seconds
            )
            .map_err(stdout_err)?;
        }
    }
    if let Some(best) = &summary.best_variant {
        writeln!(out, "best variant: {best}").map_err(stdout_err)?;
    }
    writeln!(
        out,
        "wrote {}",
        cfg.output_dir.join("summary.json").display()
    )
    .map_err(stdout_err)?;
    Ok(0)
}

/// One row of the bound-versus-oracle table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaRow {
    pub n: usize,
    pub s: usize,
    pub kappa: f64,
    pub closed_form: f64,
    pub brute_force: f64,
    pub gap: f64,
}

/// Closed-form descent bounds against the grid oracle with `R = L = 1`.
pub fn lemma_table(n_max: usize, grid: usize) -> Result<Vec<LemmaRow>> {
    if n_max == 0 || n_max > LEMMA_MAX_N {
        return Err(HarnessError::config(
            "--n-max",
            format!("must lie in 1..={LEMMA_MAX_N}, got {n_max}"),
        ));
    }
    let cases: Vec<(usize, usize, f64)> = (1..=n_max)
        .flat_map(|n| (1..=n).flat_map(move |s| LEMMA_KAPPAS.iter().map(move |&k| (n, s, k))))
        .collect();
    let workers = worker_count(cases.len())?;
    parallel_map(&cases, workers, |&(n, s, kappa)| {
        let closed_form = tsd_lower_bound(kappa, 1.0, s, n)?;
        let brute_force = brute_force_descent_min(kappa, 1.0, 1.0, n, s, grid)?.value;
        Ok(LemmaRow {
            n,
            s,
            kappa,
            closed_form,
            brute_force,
            gap: (brute_force - closed_form).abs(),
        })
    })
    .into_iter()
    .collect::<spectra_core::Result<_>>()
    .map_err(|e| HarnessError::config("--grid", e.to_string()))
}

/// `spectra verify-lemma`: exit 1 when any gap exceeds the tolerance.
pub fn cmd_verify_lemma(n_max: usize, grid: usize, out: &mut dyn Write) -> Result<i32> {
    let rows = lemma_table(n_max, grid)?;
    writeln!(
        out,
        "{:>2} {:>2} {:>5} {:>22} {:>22} {:>10}",
        "n", "s", "kappa", "closed_form", "brute_force", "gap"
    )
    .map_err(stdout_err)?;
    let mut worst: f64 = 0.0;
    for r in &rows {
        writeln!(
            out,
            "{:>2} {:>2} {:>5} {:>22.17} {:>22.17} {:>10.3e}",
            r.n, r.s, r.kappa, r.closed_form, r.brute_force, r.gap
        )
        .map_err(stdout_err)?;
        worst = worst.max(r.gap);
    }
    let ok = worst <= LEMMA_TOLERANCE;
    writeln!(
        out,
        "max gap {worst:.3e} (tolerance {LEMMA_TOLERANCE:e}): {}",
        if ok { "PASS" } else { "FAIL" }
    )
    .map_err(stdout_err)?;
    Ok(if ok { 0 } else { 1 })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RipRow {
    pub seed: u64,
    pub label: &'static str,
    pub rank: usize,
    pub ratio_min: f64,
    pub ratio_max: f64,
    pub delta_hat: f64,
}

/// `δ̂` at ranks `r*, 3r*, 5r*` for every seed of a sensing config.
pub fn rip_table(cfg: &RunConfig) -> Result<Vec<RipRow>> {
    let ProblemSpec::Sensing { r, .. } = cfg.problem else {
        return Err(HarnessError::config(
            "problem.kind",
            "rip-check needs a sensing problem",
        ));
    };
    if cfg.rip_trials == 0 {
        return Err(HarnessError::config(
            "rip_trials",
            "must be positive for rip-check",
        ));
    }
    let ranks = rip_ranks(r, cfg.problem.shape());
    let mut rows = Vec::new();
    for &seed in &cfg.seeds {
        let inst = build_instance(cfg, seed)?;
        let Problem::Sensing(p) = &inst.problem else {
            unreachable!("sensing spec builds a sensing problem")
        };
        let rip_seed = derive_seed(inst.instance_seed, RIP_TAG);
        for (label, rank) in ["r*", "3r*", "5r*"].into_iter().zip(ranks) {
            let est = rip_estimate(p.operator(), rank, cfg.rip_trials, rip_seed)?;
            rows.push(RipRow {
                seed,
                label,
                rank,
                ratio_min: est.ratio_min,
                ratio_max: est.ratio_max,
                delta_hat: est.delta_hat,
            });
        }
    }
    Ok(rows)
}

/// `spectra rip-check <config.json>`; reports feasibility, exits 0.
pub fn cmd_rip_check(config_path: &Path, out: &mut dyn Write) -> Result<i32> {
    let cfg = RunConfig::from_path(config_path)?;
    let rows = rip_table(&cfg)?;
    writeln!(
        out,
        "{:>6} {:>4} {:>5} {:>12} {:>12} {:>12}",
        "seed", "rank", "r", "ratio_min", "ratio_max", "delta_hat"
    )
    .map_err(stdout_err)?;
    for r in &rows {
        writeln!(
            out,
            "{:>6} {:>4} {:>5} {:>12.6} {:>12.6} {:>12.6}",
            r.seed, r.label, r.rank, r.ratio_min, r.ratio_max, r.delta_hat
        )
        .map_err(stdout_err)?;
        if r.label == "5r*" {
            let ok = r.delta_hat < RIP_FEASIBILITY;
            writeln!(
                out,
                "seed {}: δ_{{5r*}} < {RIP_FEASIBILITY}: {}",
                r.seed,
                if ok { "feasible" } else { "INFEASIBLE" }
            )
            .map_err(stdout_err)?;
        }
    }
    Ok(0)
}

/// Output of `spectra analyze`; `null` marks an undefined statistic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Analysis {
    /// `exp(slope)` of the linear-rate fit.
    pub gamma_hat: Option<f64>,
    /// Slope of the sublinear fit `log(dist − floor)` against `log t`.
    pub slope: Option<f64>,
    /// Coefficient of determination of the linear-rate fit.
    pub r_squared: Option<f64>,
    pub mu_hat: Option<f64>,
    #[serde(rename = "L_hat")]
    pub l_hat: Option<f64>,
    pub kappa_hat: Option<f64>,
    pub min_alignment: Option<f64>,
}

pub fn analyze_trace(trace: &Trace, f_star: Option<f64>, floor: f64) -> Analysis {
    let window = FitWindow::default();
    let linear = fit_linear_rate(trace, &window).ok();
    let kappa = estimate_kappa(trace, f_star, DIST_FLOOR).ok();
    let finite = |v: f64| v.is_finite().then_some(v);
    Analysis {
        gamma_hat: linear.as_ref().map(|f| f.gamma_hat()),
        slope: fit_sublinear_rate(trace, &window, floor)
            .ok()
            .map(|f| f.slope),
        r_squared: linear.map(|f| f.r_squared),
        mu_hat: kappa.as_ref().and_then(|k| finite(k.mu_hat)),
        l_hat: kappa.as_ref().and_then(|k| finite(k.l_hat)),
        kappa_hat: kappa.as_ref().and_then(|k| finite(k.kappa_hat)),
        min_alignment: min_alignment(trace, DIST_FLOOR),
    }
}

/// `spectra analyze <trace.csv> [--fstar V] [--floor V]`.
pub fn cmd_analyze(
    trace_path: &Path,
    f_star: Option<f64>,
    floor: f64,
    out: &mut dyn Write,
) -> Result<i32> {
    let text = fs::read_to_string(trace_path).map_err(io_err(trace_path))?;
    let trace = Trace::from_csv_str(&text)?;
    let a = analyze_trace(&trace, f_star, floor);
    writeln!(
        out,
        "{}",
        serde_json::to_string_pretty(&a).expect("analysis serializes")
    )
    .map_err(stdout_err)?;
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;
    use spectra_core::TraceRecord;

    fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
        let out = dir.join("out");
        let text = body.replace("OUT", &out.to_string_lossy());
        let path = dir.join("config.json");
        fs::write(&path, text).unwrap();
        path
    }

    const SENSING: &str = r#"{"name":"demo","problem":{"kind":"sensing","n1":6,"n2":6,"r":1,"m":100,"p":0.05,
        "sparse_std":10.0,"dense_std":0.0,"seed":9},
        "optimizer":{"algorithm":"rtsd_wd","s":1,"lambda":"inverse_nuclear",
          "schedule":{"kind":"frank_wolfe","lambda":"inverse_nuclear"},"T":80},
        "seeds":[0,1],"output_dir":"OUT","init":{"kind":"gaussian","scale":1e-4},"f_star":"trace_min","rip_trials":10}"#;

    #[test]
    fn run_writes_traces_and_summary_reproducibly() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), SENSING);
        let mut sink = Vec::new();
        assert_eq!(cmd_run(&cfg, &mut sink).unwrap(), 0);
        let out = dir.path().join("out");
        let first: Vec<Vec<u8>> = [0, 1]
            .iter()
            .map(|k| fs::read(out.join(format!("demo_seed{k}.csv"))).unwrap())
            .collect();
        let text = String::from_utf8(first[0].clone()).unwrap();
        assert!(text.starts_with(spectra_core::optimizers::TRACE_HEADER));
        assert_eq!(text.lines().count(), 82);
        let summary: Value =
            serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
        let run = &summary["variants"][0]["runs"][1];
        assert_eq!(run["csv"], "demo_seed1.csv");
        for key in [
            "f0",
            "f_final",
            "f_star",
            "rel_error",
            "seconds_per_iter",
            "linear_fit",
            "sublinear_fit",
        ] {
            assert!(!run[key].is_null(), "{key}");
        }
        assert_eq!(summary["instances"][0]["f_star"]["source"], "trace_min");
        assert!(
            summary["instances"][0]["recovery"]["delta5_hat"]
                .as_f64()
                .unwrap()
                > 0.0
        );
        assert_eq!(summary["mean_curve"]["f"].as_array().unwrap().len(), 81);
        // same config and seeds: byte-identical traces
        cmd_run(&cfg, &mut sink).unwrap();
        for (k, bytes) in first.iter().enumerate() {
            assert_eq!(
                &fs::read(out.join(format!("demo_seed{k}.csv"))).unwrap(),
                bytes
            );
        }
    }

    #[test]
    fn mean_curve_is_the_linear_space_mean() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = RunConfig::from_path(&write_config(dir.path(), SENSING)).unwrap();
        let exp = execute(&cfg, 1).unwrap();
        let s = summarize(&cfg, &exp);
        let t = 40;
        let expect = 0.5
            * (exp.run(0, 0).output.trace.records[t].f + exp.run(0, 1).output.trace.records[t].f);
        assert_eq!(s.mean_curve.f[t], expect);
        let d = s.mean_curve.dist.as_ref().unwrap()[t];
        let dd = 0.5
            * (exp.run(0, 0).output.trace.records[t].dist.unwrap()
                + exp.run(0, 1).output.trace.records[t].dist.unwrap());
        assert_eq!(d, dd);
    }

    #[test]
    fn run_reports_bad_config_key() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            &SENSING.replace(r#""T":80"#, r#""T":80,"momentum":0.9"#),
        );
        let err = cmd_run(&cfg, &mut Vec::new()).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("`optimizer.momentum`"), "{err}");
        let missing = cmd_run(&dir.path().join("nope.json"), &mut Vec::new()).unwrap_err();
        assert_eq!(missing.exit_code(), 1);
    }

    #[test]
    fn verify_lemma_small_table() {
        let mut out = Vec::new();
        assert_eq!(cmd_verify_lemma(2, 50, &mut out).unwrap(), 0);
        let text = String::from_utf8(out).unwrap();
        assert!(text.contains("PASS"));
        assert_eq!(text.lines().count(), 1 + 3 * 3 + 1);
        for row in lemma_table(1, 50).unwrap() {
            assert!((row.brute_force - row.kappa).abs() < 1e-12 && row.gap < 1e-12);
        }
        assert_eq!(lemma_table(6, 50).unwrap_err().exit_code(), 2);
        assert_eq!(lemma_table(0, 50).unwrap_err().exit_code(), 2);
        assert_eq!(lemma_table(2, 3).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn rip_check_flags_tiny_instances() {
        let dir = tempfile::tempdir().unwrap();
        let body = SENSING
            .replace(r#""m":100"#, r#""m":10"#)
            .replace(r#""p":0.05"#, r#""p":0.0"#);
        let cfg = write_config(dir.path(), &body);
        let mut a = Vec::new();
        assert_eq!(cmd_rip_check(&cfg, &mut a).unwrap(), 0);
        let text = String::from_utf8(a.clone()).unwrap();
        assert_eq!(text.matches("INFEASIBLE").count(), 2, "{text}");
        let mut b = Vec::new();
        cmd_rip_check(&cfg, &mut b).unwrap();
        assert_eq!(a, b);
        let rows = rip_table(&RunConfig::from_path(&cfg).unwrap()).unwrap();
        assert_eq!(
            rows.iter().map(|r| r.rank).collect::<Vec<_>>(),
            [1, 3, 5, 1, 3, 5]
        );
    }

    #[test]
    fn rip_check_needs_sensing() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(
            dir.path(),
            r#"{"name":"lp","problem":{"kind":"regression","N":30,"n1":3,"n2":3,"seed":1},
            "optimizer":{"algorithm":"sd","schedule":{"kind":"constant","eta0":0.1},"T":3},"seeds":[0],"output_dir":"OUT"}"#,
        );
        let err = cmd_rip_check(&cfg, &mut Vec::new()).unwrap_err();
        assert!(err.to_string().contains("problem.kind"));
    }

    #[test]
    fn analyze_emits_every_key() {
        let dir = tempfile::tempdir().unwrap();
        let records = (0..60)
            .map(|t| {
                let mut r = TraceRecord::new(t, 2.0 * 0.9f64.powi(t as i32));
                r.dist = Some(0.9f64.powi(t as i32));
                r.grad_fro = Some(4.0);
                r.alignment = Some(0.5 + 0.01 * t as f64);
                r
            })
            .collect();
        let path = dir.path().join("t.csv");
        fs::write(
            &path,
            Trace {
                records,
                ..Default::default()
            }
            .to_csv_string(),
        )
        .unwrap();
        let mut out = Vec::new();
        cmd_analyze(&path, Some(0.0), 0.0, &mut out).unwrap();
        let v: Value = serde_json::from_slice(&out).unwrap();
        assert!((v["gamma_hat"].as_f64().unwrap() - 0.9).abs() < 1e-12);
        assert!((v["r_squared"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert!((v["mu_hat"].as_f64().unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(v["L_hat"].as_f64().unwrap(), 4.0);
        assert!((v["kappa_hat"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(v["min_alignment"].as_f64().unwrap(), 0.5);
        assert!(v["slope"].as_f64().unwrap() < 0.0);
        assert_eq!(v.as_object().unwrap().len(), 7);
    }

    #[test]
    fn analyze_without_reference_yields_nulls() {
        let trace = Trace {
            records: (0..20)
                .map(|t| TraceRecord::new(t, 1.0 / (t + 1) as f64))
                .collect(),
            ..Default::default()
        };
        let a = analyze_trace(&trace, None, 0.0);
        assert_eq!(a.gamma_hat, None);
        assert_eq!(a.kappa_hat, None);
        assert_eq!(a.min_alignment, None);
        let json = serde_json::to_value(&a).unwrap();
        assert!(json["gamma_hat"].is_null());
    }
}
