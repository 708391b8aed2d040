//! Machine-readable report envelope shared by all experiment subcommands.
//!
//! Reports with identical flags and seed are byte-identical except for the
//! single `timestamp` field, which carries both the start time and the wall
//! clock.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde_json::{json, Value};

pub const SCHEMA: &str = "regsat-report/1";

pub fn version_string() -> String {
    format!("{} ({})", env!("CARGO_PKG_VERSION"), env!("REGSAT_GIT_HASH"))
}

/// One acceptance claim; `band` documents the acceptance region in words.
#[derive(Clone, Debug)]
pub struct Claim {
    pub name: String,
    pub observed: f64,
    pub band: String,
    pub pass: bool,
}

impl Claim {
    /// |observed - target| <= tolerance.
    pub fn within(name: impl Into<String>, observed: f64, target: f64, tolerance: f64) -> Self {
        Claim {
            name: name.into(),
            observed,
            band: format!("|x - {target}| <= {tolerance}"),
            pass: (observed - target).abs() <= tolerance,
        }
    }

    /// observed >= threshold.
    pub fn at_least(name: impl Into<String>, observed: f64, threshold: f64) -> Self {
        Claim {
            name: name.into(),
            observed,
            band: format!("x >= {threshold}"),
            pass: observed >= threshold,
        }
    }

    /// lo <= observed <= hi.
    pub fn in_range(name: impl Into<String>, observed: f64, lo: f64, hi: f64) -> Self {
        Claim {
            name: name.into(),
            observed,
            band: format!("{lo} <= x <= {hi}"),
            pass: (lo..=hi).contains(&observed),
        }
    }

    fn to_value(&self) -> Value {
        json!({
            "name": self.name,
            "observed": self.observed,
            "band": self.band,
            "pass": self.pass,
        })
    }
}

pub struct Report {
    experiment: String,
    config: Value,
    started: SystemTime,
    t0: Instant,
    pub results: Value,
    pub claims: Vec<Claim>,
}

impl Report {
    pub fn new(experiment: &str, config: Value) -> Self {
        Report {
            experiment: experiment.into(),
            config,
            started: SystemTime::now(),
            t0: Instant::now(),
            results: Value::Null,
            claims: Vec::new(),
        }
    }

    /// Records execution-context fields (worker pool, output format) in the
    /// config block.
    pub fn set_context(&mut self, workers: Option<usize>, format: &str) {
        if let Value::Object(map) = &mut self.config {
            map.insert(
                "workers".into(),
                workers.map(Into::into).unwrap_or(Value::String("auto".into())),
            );
            map.insert("format".into(), format.into());
        }
    }

    pub fn all_pass(&self) -> bool {
        self.claims.iter().all(|c| c.pass)
    }

    pub fn failing(&self) -> Vec<&Claim> {
        self.claims.iter().filter(|c| !c.pass).collect()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "schema": SCHEMA,
            "experiment": self.experiment,
            "version": version_string(),
            "config": self.config,
            "results": self.results,
            "claims": self.claims.iter().map(Claim::to_value).collect::<Vec<_>>(),
            "pass": self.all_pass(),
            "timestamp": {
                "started_unix_s": self
                    .started
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0),
                "wall_clock_s": self.t0.elapsed().as_secs_f64(),
            },
        })
    }
}

/// Escapes a CSV field if needed (statistic names stay plain in practice).
fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Flattens per-replicate statistics into `replicate,statistic,value` rows.
pub fn to_csv(rows: &[(u64, String, f64)]) -> String {
    let mut out = String::from("replicate,statistic,value\n");
    for (rep, stat, value) in rows {
        out.push_str(&format!("{rep},{},{value}\n", csv_field(stat)));
    }
    out
}
