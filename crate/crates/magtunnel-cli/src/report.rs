//! JSON envelope and CSV tables.

use crate::config::RunConfig;
use magtunnel::params::{check_ordering, derive_parameters};
use magtunnel::tunneling::SweepResult;
use serde_json::{json, Value};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

pub const SWEEP_HEADER: &str = "ybar,rho_re,rho_im,S,Delta,E_even,E_odd,predicted_cos";

/// Report document shared by all commands.
pub fn envelope(command: &str, cfg: &RunConfig, timestamp: bool, result: Value) -> Value {
    let t = &cfg.tunneling;
    let mut doc = json!({
        "tool": "magtunnel",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg.echo,
        "grid": {
            "n": t.grid.n,
            "L": t.grid.half_width,
            "h": t.grid.spacing,
            "auto": cfg.grid_auto,
        },
        "result": result,
    });
    if let Ok(dp) = derive_parameters(&t.params, &t.overrides) {
        let snapped = t.grid.snap_half_separation(dp.d1);
        doc["regime"] = json!({
            "moderate_regime": dp.moderate_regime,
            "ordering": check_ordering(&t.params, &dp),
            "d1_snapped": snapped,
        });
    }
    if timestamp {
        let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        doc["timestamp_unix"] = json!(secs);
    }
    doc
}

fn num(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

/// Sweep table; failed points are left out.
pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for p in &sweep.points {
        let Some(r) = &p.report else { continue };
        let row = [p.ybar, r.hopping.rho.re, r.hopping.rho.im, r.s, r.delta, r.e_even, r.e_odd, r.predicted_cos];
        for (i, v) in row.into_iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            num(&mut out, v);
        }
        out.push('\n');
    }
    out
}

/// `index,E,parity,boundary_weight`.
pub fn spectrum_csv(values: &[f64], parity: &[Option<f64>], boundary: &[f64]) -> String {
    let mut out = String::from("index,E,parity,boundary_weight\n");
    for (i, e) in values.iter().enumerate() {
        let _ = write!(out, "{i},");
        num(&mut out, *e);
        out.push(',');
        if let Some(p) = parity[i] {
            num(&mut out, p);
        }
        out.push(',');
        num(&mut out, boundary[i]);
        out.push('\n');
    }
    out
}

/// `<output>` with its extension replaced by `.csv`.
pub fn csv_path(output: &Path) -> PathBuf {
    output.with_extension("csv")
}

pub fn to_pretty(doc: &Value) -> String {
    let mut s = serde_json::to_string_pretty(doc).expect("report serializes");
    s.push('\n');
    s
}
