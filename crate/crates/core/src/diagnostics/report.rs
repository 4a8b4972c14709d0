use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::ess::{ess, EssEstimate};
use crate::engine::EventTrace;
use crate::error::Result;

/// Posterior summary of one scalar functional.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionalSummary {
    pub name: String,
    pub mean: f64,
    pub se: f64,
    pub ess: EssEstimate,
    /// ESS per wall-clock second; `None` when no time was recorded.
    pub ess_per_sec: Option<f64>,
}

/// One row of a comparison: a sampler run and its functionals.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSummary {
    pub method: String,
    pub wall_seconds: f64,
    pub events: BTreeMap<String, u64>,
    pub functionals: Vec<FunctionalSummary>,
}

impl MethodSummary {
    /// Summarizes equally spaced samples of each functional.
    pub fn from_samples(
        method: &str,
        samples: &[(String, Vec<f64>)],
        wall_seconds: f64,
        events: BTreeMap<String, u64>,
    ) -> Result<Self> {
        let mut functionals = Vec::with_capacity(samples.len());
        for (name, x) in samples {
            let e = ess(x)?;
            let n = x.len() as f64;
            let mean = x.iter().sum::<f64>() / n;
            let se = (e.variance / e.ess).sqrt();
            functionals.push(FunctionalSummary {
                name: name.clone(),
                mean,
                se,
                ess: e,
                ess_per_sec: (wall_seconds > 0.0).then(|| e.ess / wall_seconds),
            });
        }
        Ok(Self {
            method: method.to_string(),
            wall_seconds,
            events,
            functionals,
        })
    }

    /// Whether any functional failed the mixing heuristic.
    pub fn flagged(&self) -> bool {
        self.functionals.iter().any(|f| f.ess.flagged())
    }

    pub fn functional(&self, name: &str) -> Option<&FunctionalSummary> {
        self.functionals.iter().find(|f| f.name == name)
    }
}

/// Named scalar functional of `(mode, coordinates)`.
pub type NamedFunctional<'a, M> = (&'a str, &'a dyn Fn(&M, &[f64]) -> f64);

/// Event counts by kind; interleaved moves are split by sub-kind.
pub fn event_counts<M: Clone>(trace: &EventTrace<M, f64>) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for e in &trace.events {
        let key = match e.kind {
            crate::engine::EventKind::MhMove { kind, .. } => format!("mh_{}", kind.as_str()),
            k => k.name().to_string(),
        };
        *out.entry(key).or_insert(0) += 1;
    }
    out
}

/// Summarizes a trace on a grid of `grid` equally spaced samples.
pub fn summarize_trace<M: Clone>(
    method: &str,
    trace: &EventTrace<M, f64>,
    functionals: &[NamedFunctional<'_, M>],
    grid: usize,
    wall_seconds: f64,
) -> Result<MethodSummary> {
    let states = trace.discretize(grid);
    let samples: Vec<(String, Vec<f64>)> = functionals
        .iter()
        .map(|(name, f)| (name.to_string(), states.iter().map(|s| f(&s.mode, &s.coords)).collect()))
        .collect();
    MethodSummary::from_samples(method, &samples, wall_seconds, event_counts(trace))
}

/// Comparison table across methods, printable as aligned text or CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryReport {
    pub rows: Vec<MethodSummary>,
}

pub fn compare_report(rows: Vec<MethodSummary>) -> SummaryReport {
    SummaryReport { rows }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"))
}

impl SummaryReport {
    fn names(&self) -> Vec<String> {
        let mut names: Vec<String> = Vec::new();
        for r in &self.rows {
            for f in &r.functionals {
                if !names.contains(&f.name) {
                    names.push(f.name.clone());
                }
            }
        }
        names
    }

    /// Aligned table; ESS entries of poorly mixing chains carry a `*`.
    pub fn to_text(&self) -> String {
        let names = self.names();
        let mut header = vec!["method".to_string()];
        for n in &names {
            header.extend([
                format!("mean({n})"),
                format!("se({n})"),
                format!("ess({n})"),
                format!("ess/s({n})"),
            ]);
        }
        header.extend(["time(s)".to_string(), "events".to_string()]);
        let mut table = vec![header];
        for r in &self.rows {
            let mut row = vec![r.method.clone()];
            for n in &names {
                match r.functional(n) {
                    Some(f) => {
                        let star = if f.ess.flagged() { "*" } else { "" };
                        row.extend([
                            format!("{:.5}", f.mean),
                            format!("{:.5}", f.se),
                            format!("{:.1}{star}", f.ess.ess),
                            fmt_opt(f.ess_per_sec),
                        ]);
                    }
                    None => row.extend(std::iter::repeat_n("-".to_string(), 4)),
                }
            }
            row.push(format!("{:.3}", r.wall_seconds));
            row.push(r.events.values().sum::<u64>().to_string());
            table.push(row);
        }
        let widths: Vec<usize> = (0..table[0].len())
            .map(|j| table.iter().map(|r| r[j].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &table {
            let line: Vec<String> = row
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(j, (c, &w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            let _ = writeln!(out, "{}", line.join("  ").trim_end());
        }
        if self.rows.iter().any(MethodSummary::flagged) {
            out.push_str("* unreliable ESS (degenerate or unstable across batch sizes)\n");
        }
        out
    }

    /// One CSV row per (method, functional).
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "method",
            "functional",
            "mean",
            "se",
            "ess",
            "ess_per_sec",
            "samples",
            "flagged",
            "wall_seconds",
            "events",
        ])?;
        for r in &self.rows {
            let events = r.events.values().sum::<u64>().to_string();
            for f in &r.functionals {
                w.write_record([
                    r.method.clone(),
                    f.name.clone(),
                    format!("{}", f.mean),
                    format!("{}", f.se),
                    format!("{}", f.ess.ess),
                    f.ess_per_sec.map_or_else(String::new, |v| format!("{v}")),
                    f.ess.samples.to_string(),
                    f.ess.flagged().to_string(),
                    format!("{}", r.wall_seconds),
                    events.clone(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| crate::Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
