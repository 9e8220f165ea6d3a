use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::mat::fmt_f64;

pub const TRACE_HEADER: &str = "t,f,dist,grad_fro,alignment,spec_norm,nuc_norm,eta";

/// One row of a run trace. Optional cells are empty in CSV form.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub t: usize,
    pub f: f64,
    pub dist: Option<f64>,
    pub grad_fro: Option<f64>,
    pub alignment: Option<f64>,
    pub spec_norm: Option<f64>,
    pub nuc_norm: Option<f64>,
    pub eta: Option<f64>,
}

impl TraceRecord {
    pub fn new(t: usize, f: f64) -> Self {
        Self {
            t,
            f,
            dist: None,
            grad_fro: None,
            alignment: None,
            spec_norm: None,
            nuc_norm: None,
            eta: None,
        }
    }
}

/// Per-iteration history of a run, `t = 0 … T` (shorter after an early stop).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trace {
    pub records: Vec<TraceRecord>,
    /// Iteration at which a zero subgradient ended the run.
    pub stopped_early: Option<usize>,
    /// Rank of each applied direction (`‖D_t‖_F²` rounded).
    pub direction_ranks: Vec<usize>,
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

fn parse_cell(s: &str, line: usize) -> Result<Option<f64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|e| Error::Parse {
        line,
        msg: format!("bad number {s:?}: {e}"),
    })
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    /// Largest applied direction rank: the a-posteriori `r̄`.
    pub fn max_direction_rank(&self) -> Option<usize> {
        self.direction_ranks.iter().copied().max()
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TRACE_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.t,
                fmt_f64(r.f),
                cell(r.dist),
                cell(r.grad_fro),
                cell(r.alignment),
                cell(r.spec_norm),
                cell(r.nuc_norm),
                cell(r.eta)
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("trace CSV is ASCII")
    }

    /// Parses the CSV layout produced by [`write_csv`](Self::write_csv).
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, h)) if h.trim() == TRACE_HEADER => {}
            Some((i, h)) => {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: format!("unexpected header {h:?}"),
                })
            }
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: "empty trace".into(),
                })
            }
        }
        let mut records = Vec::new();
        for (i, line) in lines {
            let n = i + 1;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 8 {
                return Err(Error::Parse {
                    line: n,
                    msg: format!("expected 8 cells, got {}", cells.len()),
                });
            }
            let t = cells[0].trim().parse().map_err(|e| Error::Parse {
                line: n,
                msg: format!("bad t: {e}"),
            })?;
            let f = parse_cell(cells[1], n)?.ok_or(Error::Parse {
                line: n,
                msg: "missing f".into(),
            })?;
            records.push(TraceRecord {
                t,
                f,
                dist: parse_cell(cells[2], n)?,
                grad_fro: parse_cell(cells[3], n)?,
                alignment: parse_cell(cells[4], n)?,
                spec_norm: parse_cell(cells[5], n)?,
                nuc_norm: parse_cell(cells[6], n)?,
                eta: parse_cell(cells[7], n)?,
            });
        }
        Ok(Self {
            records,
            stopped_early: None,
            direction_ranks: Vec::new(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_with_empty_cells() {
        let mut a = TraceRecord::new(0, 1.0 / 3.0);
        a.eta = Some(0.1);
        a.grad_fro = Some(2.5e-17);
        let mut b = TraceRecord::new(1, 0.25);
        b.dist = Some(std::f64::consts::PI);
        b.alignment = Some(-0.5);
        let trace = Trace {
            records: vec![a, b],
            ..Default::default()
        };
        let text = trace.to_csv_string();
        assert!(text.starts_with(
            "t,f,dist,grad_fro,alignment,spec_norm,nuc_norm,eta\n0,3.3333333333333331e-1,,"
        ));
        let back = Trace::from_csv_str(&text).unwrap();
        assert_eq!(back.records, trace.records);
    }

    #[test]
    fn bad_csv_is_reported_with_line() {
        let err =
            Trace::from_csv_str("t,f,dist,grad_fro,alignment,spec_norm,nuc_norm,eta\n0,x,,,,,,\n")
                .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
        assert!(Trace::from_csv_str("a,b\n").is_err());
    }
}
