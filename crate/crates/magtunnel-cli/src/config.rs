//! Flat `key = value` run configuration.

use magtunnel::eigensolve::{EigenRequest, Method, Preconditioner};
use magtunnel::grid::Grid2D;
use magtunnel::params::{DeskOverrides, ModelParams};
use magtunnel::quadrature::QuadratureSpec;
use magtunnel::tunneling::{auto_grid, OmegaOptions, TunnelingConfig};
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("line {line}: expected `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    Duplicate { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {msg}")]
    BadValue { line: usize, key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WellChoice {
    Single,
    Double,
    Free,
    Sho,
}

/// Every key with its default. Values are parsed after overlaying the file.
const DEFAULTS: &[(&str, &str)] = &[
    ("lambda", "6"),
    ("M", "1"),
    ("D", "2.25"),
    ("ybar", "0.1"),
    ("nu_max", "4"),
    ("r0", "1"),
    ("delta_override", "0.25"),
    ("tau_override", "1"),
    ("d1_override", "none"),
    ("n", "auto"),
    ("L", "auto"),
    ("k", "4"),
    ("tol", "1e-11"),
    ("single_well_tol", "1e-13"),
    ("max_iter", "1000"),
    ("seed", "1"),
    ("guard", "3"),
    ("method", "chebyshev"),
    ("cheb_degree", "30"),
    ("preconditioner", "diagonal"),
    ("magnetic", "true"),
    ("operator_form_check", "false"),
    ("omega", "false"),
    ("omega_radial_nodes", "32"),
    ("omega_angular_nodes", "32"),
    ("gamma_probe", "1.5"),
    ("quad_rel_tol", "1e-9"),
    ("quad_abs_tol", "1e-30"),
    ("ybar_list", "none"),
    ("ybar_range", "0,1,41"),
    ("bracket", "none"),
    ("annulus", "1.5,3.0"),
    ("decay_compare_lambda", "none"),
    ("well", "double"),
    ("sho_omega", "4"),
    ("series_terms", "200000"),
    ("kernel_agreement_tol", "1e-6"),
];

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub tunneling: TunnelingConfig,
    pub grid_auto: bool,
    pub ybars: Vec<f64>,
    pub bracket: Option<[f64; 2]>,
    pub annulus: [f64; 2],
    pub decay_compare_lambda: Option<f64>,
    pub well: WellChoice,
    pub sho_omega: f64,
    pub series_terms: usize,
    pub kernel_agreement_tol: f64,
    /// Resolved value of every key, defaults included.
    pub echo: BTreeMap<String, String>,
}

struct Raw {
    values: BTreeMap<String, String>,
    lines: BTreeMap<String, usize>,
}

impl Raw {
    fn get(&self, key: &str) -> &str {
        &self.values[key]
    }

    fn bad(&self, key: &str, msg: impl Into<String>) -> ConfigError {
        ConfigError::BadValue { line: self.lines.get(key).copied().unwrap_or(0), key: key.into(), msg: msg.into() }
    }

    fn f64(&self, key: &str) -> Result<f64, ConfigError> {
        self.get(key).parse::<f64>().map_err(|e| self.bad(key, e.to_string()))
    }

    fn usize(&self, key: &str) -> Result<usize, ConfigError> {
        self.get(key).parse::<usize>().map_err(|e| self.bad(key, e.to_string()))
    }

    fn bool(&self, key: &str) -> Result<bool, ConfigError> {
        match self.get(key) {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            v => Err(self.bad(key, format!("expected true/false, got `{v}`"))),
        }
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        match self.get(key) {
            "none" => Ok(None),
            _ => self.f64(key).map(Some),
        }
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, ConfigError> {
        let v = self.get(key);
        if v.trim().is_empty() {
            return Ok(Vec::new());
        }
        v.split(',').map(|s| s.trim().parse::<f64>().map_err(|e| self.bad(key, e.to_string()))).collect()
    }

    fn pair(&self, key: &str) -> Result<Option<[f64; 2]>, ConfigError> {
        if self.get(key) == "none" {
            return Ok(None);
        }
        match self.list(key)?[..] {
            [a, b] => Ok(Some([a, b])),
            _ => Err(self.bad(key, "expected two comma-separated numbers")),
        }
    }
}

pub fn parse_str(text: &str) -> Result<RunConfig, ConfigError> {
    let mut values: BTreeMap<String, String> = DEFAULTS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let mut lines = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let Some((k, v)) = body.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: body.into() });
        };
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(ConfigError::Syntax { line, text: body.into() });
        }
        if !values.contains_key(k) {
            return Err(ConfigError::UnknownKey { line, key: k.into() });
        }
        if lines.insert(k.to_string(), line).is_some() {
            return Err(ConfigError::Duplicate { line, key: k.into() });
        }
        values.insert(k.to_string(), v.to_string());
    }
    let raw = Raw { values, lines };
    build(raw)
}

pub fn parse_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_str(&text)
}

fn build(raw: Raw) -> Result<RunConfig, ConfigError> {
    let mut params = ModelParams::new(raw.f64("lambda")?, raw.f64("M")?, raw.f64("D")?, raw.f64("ybar")?);
    params.nu_max = raw.usize("nu_max")?;
    params.r0 = raw.f64("r0")?;
    let overrides = DeskOverrides {
        delta_override: raw.opt_f64("delta_override")?,
        tau_override: raw.opt_f64("tau_override")?,
        d1_override: raw.opt_f64("d1_override")?,
    };
    params.validate().map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let grid_auto;
    let grid = match (raw.get("n"), raw.get("L")) {
        ("auto", "auto") => {
            grid_auto = true;
            auto_grid(&params, &overrides).map_err(|e| ConfigError::Invalid(e.to_string()))?
        }
        ("auto", _) | (_, "auto") => {
            return Err(ConfigError::Invalid("`n` and `L` must both be numbers or both `auto`".into()))
        }
        _ => {
            grid_auto = false;
            let n = raw.usize("n")?;
            let l = raw.f64("L")?;
            Grid2D::new(n, l).map_err(|e| raw.bad("n", e.to_string()))?
        }
    };

    let method = match raw.get("method") {
        "chebyshev" => Method::ChebyshevFiltered { degree: raw.usize("cheb_degree")? },
        "lobpcg" => Method::Lobpcg,
        v => return Err(raw.bad("method", format!("expected chebyshev or lobpcg, got `{v}`"))),
    };
    let preconditioner = match raw.get("preconditioner") {
        "diagonal" => Preconditioner::InverseDiagonal,
        "none" => Preconditioner::None,
        v => return Err(raw.bad("preconditioner", format!("expected diagonal or none, got `{v}`"))),
    };
    let solver = EigenRequest {
        k: raw.usize("k")?,
        tol: raw.f64("tol")?,
        max_iter: raw.usize("max_iter")?,
        seed: raw.get("seed").parse().map_err(|e: std::num::ParseIntError| raw.bad("seed", e.to_string()))?,
        guard: raw.usize("guard")?,
        method,
        preconditioner,
    };
    for key in ["tol", "single_well_tol", "quad_rel_tol"] {
        let v = raw.f64(key)?;
        if !(v > 0.0 && v < 1.0) {
            return Err(raw.bad(key, "must lie in (0, 1)"));
        }
    }
    if solver.k == 0 {
        return Err(raw.bad("k", "must be at least 1"));
    }

    let quad = QuadratureSpec { rel_tol: raw.f64("quad_rel_tol")?, abs_tol: raw.f64("quad_abs_tol")?, ..Default::default() };
    let omega = OmegaOptions {
        radial_nodes: raw.usize("omega_radial_nodes")?,
        angular_nodes: raw.usize("omega_angular_nodes")?,
        gamma_probe: raw.f64("gamma_probe")?,
        ..OmegaOptions::default()
    };
    let tunneling = TunnelingConfig {
        params,
        overrides,
        grid,
        solver,
        single_well_tol: raw.f64("single_well_tol")?,
        magnetic: raw.bool("magnetic")?,
        quad,
        operator_form_check: raw.bool("operator_form_check")?,
        with_omega: raw.bool("omega")?,
        omega,
    };

    let ybars = if raw.get("ybar_list") != "none" {
        if raw.lines.contains_key("ybar_range") {
            return Err(ConfigError::Invalid("give either `ybar_list` or `ybar_range`, not both".into()));
        }
        raw.list("ybar_list")?
    } else {
        match raw.list("ybar_range")?[..] {
            [lo, hi, count] if count >= 1.0 && count.fract() == 0.0 && lo <= hi => {
                let m = count as usize;
                if m == 1 {
                    vec![lo]
                } else {
                    (0..m).map(|i| lo + (hi - lo) * i as f64 / (m - 1) as f64).collect()
                }
            }
            _ => return Err(raw.bad("ybar_range", "expected `lo,hi,count` with lo <= hi and integer count >= 1")),
        }
    };

    let well = match raw.get("well") {
        "single" => WellChoice::Single,
        "double" => WellChoice::Double,
        "free" => WellChoice::Free,
        "sho" => WellChoice::Sho,
        v => return Err(raw.bad("well", format!("expected single, double, free or sho, got `{v}`"))),
    };

    let mut echo = raw.values.clone();
    echo.insert("n".into(), grid.n.to_string());
    echo.insert("L".into(), grid.half_width.to_string());
    Ok(RunConfig {
        tunneling,
        grid_auto,
        ybars,
        bracket: raw.pair("bracket")?,
        annulus: raw.pair("annulus")?.ok_or_else(|| raw.bad("annulus", "required"))?,
        decay_compare_lambda: raw.opt_f64("decay_compare_lambda")?,
        well,
        sho_omega: raw.f64("sho_omega")?,
        series_terms: raw.usize("series_terms")?,
        kernel_agreement_tol: raw.f64("kernel_agreement_tol")?,
        echo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_the_standard_preset() {
        let c = parse_str("").unwrap();
        assert_eq!(c.tunneling, TunnelingConfig::standard_preset());
        assert_eq!(c.ybars.len(), 41);
        assert!(c.grid_auto);
    }

    #[test]
    fn comments_and_overrides() {
        let c = parse_str("# header\nlambda = 4   # field\n\nn = 61\nL = 5\nybar_list = 0.1, 0.2\n").unwrap();
        assert_eq!(c.tunneling.params.lambda, 4.0);
        assert_eq!(c.tunneling.grid.n, 61);
        assert_eq!(c.ybars, vec![0.1, 0.2]);
        assert_eq!(c.echo["lambda"], "4");
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse_str("lambda = 6\nfoo = 1\n") {
            Err(ConfigError::UnknownKey { line: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_str("\n\nlambda 6\n") {
            Err(ConfigError::Syntax { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
        match parse_str("tol = x\n") {
            Err(ConfigError::BadValue { line: 1, .. }) => {}
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_str("k = 2\nk = 3\n"), Err(ConfigError::Duplicate { line: 2, .. })));
        assert!(parse_str("n = 61\n").is_err());
        assert!(parse_str("ybar_list = 0.1\nybar_range = 0,1,3\n").is_err());
    }
}
