//! Run configuration: parsing with key-level diagnostics, grid expansion and
//! per-instance resolution of the optimizer block.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Number, Value};
use spectra_core::{OptimizerSpec, Problem, ProblemSpec};

use crate::error::{HarnessError, Result};

/// Placeholder accepted for any `lambda` key: `1/‖X*‖_*` of the instance.
pub const INVERSE_NUCLEAR: &str = "inverse_nuclear";

fn default_rip_trials() -> usize {
    200
}

fn default_true() -> bool {
    true
}

fn is_true(v: &bool) -> bool {
    *v
}

/// A complete experiment: one problem family, an optimizer block with an
/// optional grid over its numeric fields, and a list of seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub name: String,
    pub problem: ProblemSpec,
    /// An optimizer spec in which `lambda` keys may be `"inverse_nuclear"`.
    pub optimizer: Value,
    /// Dotted optimizer paths (`"schedule.eta0"`) to value lists; the
    /// Cartesian product defines the variants.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub grid: BTreeMap<String, Vec<f64>>,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default)]
    pub init: InitSpec,
    #[serde(default)]
    pub f_star: FStarPolicy,
    /// Error floor subtracted by the sublinear fit; defaults to the predicted
    /// `ξ/μ` for noisy sensing and 0 otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    /// Monte Carlo trials per rank for the RIP estimates (0 disables them).
    #[serde(default = "default_rip_trials")]
    pub rip_trials: usize,
    /// Record `‖X‖₂` and `‖X‖_*` in the traces (one SVD per iteration).
    #[serde(default = "default_true", skip_serializing_if = "is_true")]
    pub track_norms: bool,
}

/// Point the traces measure `dist` and `alignment` against.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Reference {
    None,
    #[default]
    GroundTruth,
    /// Matrix in the whitespace text format.
    File(PathBuf),
}

impl From<String> for Reference {
    fn from(s: String) -> Self {
        match s.as_str() {
            "none" => Self::None,
            "ground_truth" => Self::GroundTruth,
            _ => Self::File(PathBuf::from(s)),
        }
    }
}

impl From<Reference> for String {
    fn from(r: Reference) -> Self {
        match r {
            Reference::None => "none".into(),
            Reference::GroundTruth => "ground_truth".into(),
            Reference::File(p) => p.to_string_lossy().into_owned(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    /// I.i.d. `𝒩(0, scale²)` entries.
    Gaussian {
        scale: f64,
    },
    Zeros,
}

impl Default for InitSpec {
    fn default() -> Self {
        Self::Gaussian { scale: 1.0 }
    }
}

/// How the optimal value used by the gap metrics is obtained.
#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum FStarPolicy {
    /// The known optimum when the instance is noiseless, otherwise a
    /// reference run three times longer.
    #[default]
    Auto,
    /// Smallest value recorded by any variant on the same instance.
    TraceMin,
    Value(f64),
    /// Re-run the best variant for `factor × T` iterations; `f*` is the
    /// smallest value seen in that run or any variant.
    ReferenceRun {
        factor: usize,
    },
}

/// Multiplier of the reference run used by [`FStarPolicy::Auto`].
pub const AUTO_REFERENCE_FACTOR: usize = 3;

/// One point of the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Variant {
    /// `None` without a grid; otherwise e.g. `eta0-0.8_gamma-0.99`.
    pub label: Option<String>,
    pub optimizer: Value,
}

fn parse_err(e: serde_path_to_error::Error<serde_json::Error>) -> HarnessError {
    let path = e.path().to_string();
    let inner = e.into_inner();
    let msg = inner.to_string();
    // unknown / missing keys live on the parent path; name them directly
    let key = match backticked(&msg) {
        Some(k) if msg.starts_with("unknown field") || msg.starts_with("missing field") => {
            if path == "." {
                k
            } else if path == k || path.ends_with(&format!(".{k}")) {
                path
            } else {
                format!("{path}.{k}")
            }
        }
        _ => path,
    };
    HarnessError::config(key, msg)
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

fn json_number(v: f64) -> Value {
    if v.fract() == 0.0 && v.abs() < 9.0e15 {
        if v >= 0.0 {
            Value::Number(Number::from(v as u64))
        } else {
            Value::Number(Number::from(v as i64))
        }
    } else {
        Number::from_f64(v)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }
}

/// Sets a dotted path, creating the leaf in an existing parent object.
fn set_path(root: &mut Value, path: &str, value: Value) -> bool {
    let (parent, leaf) = match path.rsplit_once('.') {
        Some((p, l)) => (
            p.split('.')
                .try_fold(&mut *root, |v, k| v.as_object_mut()?.get_mut(k)),
            l,
        ),
        None => (Some(root), path),
    };
    match parent.and_then(Value::as_object_mut) {
        Some(obj) => {
            obj.insert(leaf.to_string(), value);
            true
        }
        None => false,
    }
}

fn parse_optimizer(mut value: Value) -> std::result::Result<OptimizerSpec, HarnessError> {
    substitute_lambda(&mut value, Some(1.0)).expect("a concrete lambda always substitutes");
    serde_path_to_error::deserialize::<_, OptimizerSpec>(value).map_err(|e| {
        let HarnessError::Config { key, msg } = parse_err(e) else {
            unreachable!()
        };
        let key = if key == "." {
            "optimizer".to_string()
        } else {
            format!("optimizer.{key}")
        };
        HarnessError::config(key, msg)
    })
}

/// Replaces every `lambda` placeholder, recursively.
fn substitute_lambda(v: &mut Value, lambda: Option<f64>) -> std::result::Result<(), String> {
    match v {
        Value::Object(map) => {
            for (k, child) in map.iter_mut() {
                if k == "lambda" && child.as_str() == Some(INVERSE_NUCLEAR) {
                    let l = lambda
                        .ok_or("`inverse_nuclear` needs a sensing problem with a ground truth")?;
                    *child = json_number(l);
                } else {
                    substitute_lambda(child, lambda)?;
                }
            }
            Ok(())
        }
        Value::Array(items) => items
            .iter_mut()
            .try_for_each(|c| substitute_lambda(c, lambda)),
        _ => Ok(()),
    }
}

fn format_grid_value(v: f64) -> String {
    format!("{v}")
}

impl RunConfig {
    /// Parses and validates a config; errors name the offending key.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(parse_err)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(HarnessError::config(
                "name",
                "must be a non-empty file-name stem",
            ));
        }
        if self.seeds.is_empty() {
            return Err(HarnessError::config(
                "seeds",
                "at least one seed is required",
            ));
        }
        let mut seen = self.seeds.clone();
        seen.sort_unstable();
        if seen.windows(2).any(|w| w[0] == w[1]) {
            return Err(HarnessError::config("seeds", "seeds must be distinct"));
        }
        if let InitSpec::Gaussian { scale } = self.init {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(HarnessError::config(
                    "init.scale",
                    format!("must be positive and finite, got {scale}"),
                ));
            }
        }
        match self.f_star {
            FStarPolicy::Value(v) if !v.is_finite() => {
                return Err(HarnessError::config("f_star.value", "must be finite"));
            }
            FStarPolicy::ReferenceRun { factor: 0 } => {
                return Err(HarnessError::config(
                    "f_star.reference_run.factor",
                    "must be at least 1",
                ));
            }
            _ => {}
        }
        if let Some(f) = self.floor {
            if !(f >= 0.0 && f.is_finite()) {
                return Err(HarnessError::config(
                    "floor",
                    "must be non-negative and finite",
                ));
            }
        }
        if self.reference == Reference::GroundTruth
            && matches!(self.problem, ProblemSpec::Classification { .. })
        {
            return Err(HarnessError::config(
                "reference",
                "classification instances have no ground-truth minimizer; use \"none\" or a file",
            ));
        }
        for (key, values) in &self.grid {
            let k = format!("grid.{key}");
            if values.is_empty() {
                return Err(HarnessError::config(k, "value list is empty"));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(HarnessError::config(k, "values must be finite"));
            }
            let mut probe = self.optimizer.clone();
            if !set_path(&mut probe, key, json_number(values[0])) {
                return Err(HarnessError::config(
                    k,
                    "parent path does not exist in the optimizer block",
                ));
            }
            if let Err(HarnessError::Config { msg, .. }) = parse_optimizer(probe) {
                return Err(HarnessError::config(k, msg));
            }
        }
        parse_optimizer(self.optimizer.clone())?;
        // every variant must parse once placeholders are filled
        for v in self.variants() {
            parse_optimizer(v.optimizer)?;
        }
        Ok(())
    }

    /// Grid points in lexicographic key order (the last key varies fastest).
    pub fn variants(&self) -> Vec<Variant> {
        if self.grid.is_empty() {
            return vec![Variant {
                label: None,
                optimizer: self.optimizer.clone(),
            }];
        }
        let mut out = vec![(Vec::<String>::new(), self.optimizer.clone())];
        for (key, values) in &self.grid {
            let short = key.rsplit('.').next().unwrap_or(key);
            out = out
                .into_iter()
                .flat_map(|(label, opt)| {
                    values.iter().map(move |&v| {
                        let mut opt = opt.clone();
                        set_path(&mut opt, key, json_number(v));
                        let mut label = label.clone();
                        label.push(format!("{short}-{}", format_grid_value(v)));
                        (label, opt)
                    })
                })
                .collect();
        }
        out.into_iter()
            .map(|(label, optimizer)| Variant {
                label: Some(label.join("_")),
                optimizer,
            })
            .collect()
    }

    /// Trace file name of one variant and seed.
    pub fn csv_name(&self, variant: &Variant, seed: u64) -> String {
        match &variant.label {
            None => format!("{}_seed{seed}.csv", self.name),
            Some(l) => format!("{}_{l}_seed{seed}.csv", self.name),
        }
    }
}

/// Fills the placeholders of `variant` against `problem` and parses it.
pub fn resolve_optimizer(variant: &Variant, problem: &Problem) -> Result<OptimizerSpec> {
    let lambda = match problem {
        Problem::Sensing(p) if p.radius() > 0.0 => Some(1.0 / p.radius()),
        _ => None,
    };
    let mut value = variant.optimizer.clone();
    substitute_lambda(&mut value, lambda)
        .map_err(|msg| HarnessError::config("optimizer.lambda", msg))?;
    let spec: OptimizerSpec = serde_json::from_value(value)
        .map_err(|e| HarnessError::config("optimizer", e.to_string()))?;
    spec.validate().map_err(|e| {
        let where_ = variant
            .label
            .as_deref()
            .map(|l| format!(" (variant {l})"))
            .unwrap_or_default();
        HarnessError::config("optimizer", format!("{e}{where_}"))
    })?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{"name":"x","problem":{"kind":"regression","N":50,"n1":3,"n2":4,"seed":1},
        "optimizer":{"algorithm":"tsd","s":2,"schedule":{"kind":"geometric","eta0":0.5,"gamma":0.9},"T":10},
        "seeds":[0,1],"output_dir":"out"}"#;

    fn with(key: &str, value: &str) -> String {
        let mut v: Value = serde_json::from_str(BASE).unwrap();
        let mut parts: Vec<&str> = key.split('.').collect();
        let last = parts.pop().unwrap();
        let parent = parts.iter().fold(&mut v, |v, k| v.get_mut(*k).unwrap());
        parent[last] = serde_json::from_str(value).unwrap();
        v.to_string()
    }

    fn key_of(text: &str) -> String {
        match RunConfig::from_json(text).unwrap_err() {
            HarnessError::Config { key, .. } => key,
            other => panic!("{other}"),
        }
    }

    fn presets() -> Vec<(PathBuf, String)> {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut out: Vec<_> = std::fs::read_dir(&dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .map(|p| {
                let text = std::fs::read_to_string(&p).unwrap();
                (p, text)
            })
            .collect();
        out.sort();
        out
    }

    #[test]
    fn presets_parse_and_round_trip() {
        let all = presets();
        assert!(all.len() >= 10);
        for (path, text) in all {
            let cfg =
                RunConfig::from_json(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            let once = cfg.to_json();
            let again = RunConfig::from_json(&once).unwrap();
            assert_eq!(again, cfg);
            assert_eq!(again.to_json(), once, "{}", path.display());
        }
    }

    #[test]
    fn errors_name_the_offending_key() {
        assert_eq!(key_of(&with("bogus", "1")), "bogus");
        assert_eq!(key_of(&with("seeds", "[]")), "seeds");
        assert_eq!(key_of(&with("seeds", "[1,1]")), "seeds");
        assert_eq!(key_of(&with("seeds", r#""all""#)), "seeds");
        assert_eq!(key_of(&with("name", r#""a/b""#)), "name");
        assert_eq!(
            key_of(&with("init", r#"{"kind":"gaussian","scale":-1}"#)),
            "init.scale"
        );
        assert_eq!(key_of(&with("optimizer.bogus", "1")), "optimizer.bogus");
        // tagged blocks are buffered whole, so the innermost named key is the block
        assert_eq!(
            key_of(&with("optimizer.schedule.eta0", r#""fast""#)),
            "optimizer.schedule"
        );
        assert_eq!(key_of(&with("optimizer.T", "-3")), "optimizer.T");
        assert_eq!(
            key_of(&with("optimizer.algorithm", r#""adam""#)),
            "optimizer.algorithm"
        );
        assert_eq!(
            key_of(&with("grid", r#"{"schedule.eta1":[1]}"#)),
            "grid.schedule.eta1"
        );
        assert_eq!(
            key_of(&with("grid", r#"{"schedule.eta0":[]}"#)),
            "grid.schedule.eta0"
        );
        assert_eq!(
            key_of(&with("f_star", r#"{"reference_run":{"factor":0}}"#)),
            "f_star.reference_run.factor"
        );
        assert_eq!(key_of(&with("floor", "-1")), "floor");
        assert!(key_of(&with("problem.bogus", "1")).starts_with("problem"));
        let missing = BASE.replace(r#""output_dir":"out""#, r#""reference":"none""#);
        assert_eq!(key_of(&missing), "output_dir");
    }

    #[test]
    fn ground_truth_is_rejected_for_classification() {
        let text = with(
            "problem",
            r#"{"kind":"classification","N":30,"n1":3,"n2":3,"seed":1,"flip_fraction":0.1}"#,
        );
        assert_eq!(key_of(&text), "reference");
        let ok = serde_json::from_str::<Value>(&text).map(|mut v| {
            v["reference"] = "none".into();
            v.to_string()
        });
        assert!(RunConfig::from_json(&ok.unwrap()).is_ok());
    }

    #[test]
    fn grid_expands_to_cartesian_product() {
        let text = with(
            "grid",
            r#"{"schedule.eta0":[0.8,1],"schedule.gamma":[0.9,0.99,0.5]}"#,
        );
        let cfg = RunConfig::from_json(&text).unwrap();
        let v = cfg.variants();
        assert_eq!(v.len(), 6);
        assert_eq!(v[0].label.as_deref(), Some("eta0-0.8_gamma-0.9"));
        assert_eq!(v[5].label.as_deref(), Some("eta0-1_gamma-0.5"));
        assert_eq!(v[5].optimizer["schedule"]["eta0"], 1);
        assert_eq!(cfg.csv_name(&v[1], 3), "x_eta0-0.8_gamma-0.99_seed3.csv");
        let plain = RunConfig::from_json(BASE).unwrap();
        assert_eq!(plain.csv_name(&plain.variants()[0], 3), "x_seed3.csv");
    }

    #[test]
    fn integer_grid_values_fill_integer_fields() {
        let cfg = RunConfig::from_json(&with("grid", r#"{"s":[1,3]}"#)).unwrap();
        let problem = cfg.problem.build().unwrap();
        let specs: Vec<_> = cfg
            .variants()
            .iter()
            .map(|v| resolve_optimizer(v, &problem).unwrap().s)
            .collect();
        assert_eq!(specs, [1, 3]);
    }

    #[test]
    fn inverse_nuclear_resolves_per_instance() {
        let text = r#"{"name":"x","problem":{"kind":"sensing","n1":5,"n2":4,"r":1,"m":40,"p":0,"sparse_std":0,
            "dense_std":0,"seed":2},"optimizer":{"algorithm":"rtsd_wd","lambda":"inverse_nuclear",
            "schedule":{"kind":"frank_wolfe","lambda":"inverse_nuclear"},"T":10},"seeds":[0],"output_dir":"o"}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let problem = cfg.problem.build().unwrap();
        let Problem::Sensing(p) = &problem else {
            unreachable!()
        };
        let spec = resolve_optimizer(&cfg.variants()[0], &problem).unwrap();
        assert_eq!(spec.lambda, 1.0 / p.radius());
        assert_eq!(
            spec.schedule,
            spectra_core::Schedule::FrankWolfe {
                lambda: 1.0 / p.radius()
            }
        );
        // the placeholder needs a ground truth
        let lp = RunConfig::from_json(BASE).unwrap().problem.build().unwrap();
        let v = Variant {
            label: None,
            optimizer: cfg.optimizer.clone(),
        };
        match resolve_optimizer(&v, &lp).unwrap_err() {
            HarnessError::Config { key, .. } => assert_eq!(key, "optimizer.lambda"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn schedule_violations_are_config_errors() {
        let text = r#"{"name":"x","problem":{"kind":"sensing","n1":5,"n2":4,"r":1,"m":40,"p":0,"sparse_std":0,
            "dense_std":0,"seed":2},"optimizer":{"algorithm":"rsd_wd","lambda":"inverse_nuclear",
            "schedule":{"kind":"constant","eta0":1e9},"T":10},"seeds":[0],"output_dir":"o"}"#;
        let cfg = RunConfig::from_json(text).unwrap();
        let problem = cfg.problem.build().unwrap();
        let err = resolve_optimizer(&cfg.variants()[0], &problem).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("lambda * eta"), "{err}");
    }

    #[test]
    fn reference_strings_round_trip() {
        for s in ["none", "ground_truth", "refs/w_star.txt"] {
            let r = Reference::from(s.to_string());
            assert_eq!(String::from(r), s);
        }
        assert_eq!(Reference::from("none".to_string()), Reference::None);
    }
}
