//! Plain-text run configuration.
//!
//! One `key = value` assignment per line; `#` starts a comment line; blank
//! lines are ignored. Keys:
//!
//! ```text
//! model        path to the model file, relative to this config file
//! phi          linear | cubic | septic | odd:<c1,c3,c5,...>  (repeatable)
//! r2           band-width parameter; epsilon = r2^2
//! epsilon      alternative to r2 (exactly one of the two may appear)
//! mu           switching parameter: value, comma list, or start:step:end
//! mu2          chart parameter, same forms; mu = r2 * mu2
//! x0 y0        initial state            (simulate)
//! t0 t1        time span, t0 default 0  (simulate)
//! sample_dt    output sample spacing    (simulate)
//! rtol atol    integrator tolerances    (simulate)
//! window       switching-line half-width scanned for sliding regions
//! ds0 ds_max amp_target max_points seed_amp t_cap     (continue)
//! mu2_min mu2_max      continuation parameter window  (continue)
//! explosion_lo explosion_hi   bisection bracket for the amplitude wall
//! bracket_tol t_max rho       wall-location controls
//! svg          true | false (default true)
//! out          output directory (the --out flag wins)
//! ```
//!
//! Unknown or duplicated keys are rejected with their line number; `phi` is
//! the one repeatable key.

use std::collections::HashMap;
use std::fmt;
use std::path::{Path, PathBuf};

use twofold_core::{ContinueOptions, ExplosionOptions, NormalFormModel, Phi};

use crate::output::fnv1a64;

#[derive(Debug)]
pub struct ConfigError {
    /// 1-based config line, when the failure points at one.
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    pub fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), message: message.into() }
    }

    pub fn whole(message: impl Into<String>) -> Self {
        ConfigError { line: None, message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(n) => write!(f, "config line {n}: {}", self.message),
            None => write!(f, "config: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

pub struct RunConfig {
    pub model: NormalFormModel,
    pub model_path: PathBuf,
    /// (label as written, parsed function); empty when the config names none.
    pub phis: Vec<(String, Phi)>,
    pub r2: Option<f64>,
    mu: Option<Vec<f64>>,
    mu2: Option<Vec<f64>>,
    pub x0: Option<f64>,
    pub y0: Option<f64>,
    pub t0: f64,
    pub t1: Option<f64>,
    pub sample_dt: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub window: f64,
    pub ds0: Option<f64>,
    pub ds_max: Option<f64>,
    pub amp_target: Option<f64>,
    pub max_points: Option<usize>,
    pub seed_amp: Option<f64>,
    pub t_cap: Option<f64>,
    pub mu2_min: Option<f64>,
    pub mu2_max: Option<f64>,
    pub explosion: Option<(f64, f64)>,
    pub bracket_tol: Option<f64>,
    pub t_max: Option<f64>,
    pub rho: Option<f64>,
    pub svg: bool,
    pub out: Option<PathBuf>,
    pub hash: u64,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::whole(format!("cannot read {}: {e}", path.display())))?;
        let dir = path.parent().unwrap_or(Path::new("."));

        let mut entries: HashMap<&str, (usize, String)> = HashMap::new();
        let mut phis: Vec<(usize, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| ConfigError::at(line, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim().to_string());
            if value.is_empty() {
                return Err(ConfigError::at(line, format!("key `{key}` has no value")));
            }
            if key == "phi" {
                phis.push((line, value));
                continue;
            }
            let known = [
                "model", "r2", "epsilon", "mu", "mu2", "x0", "y0", "t0", "t1", "sample_dt",
                "rtol", "atol", "window", "ds0", "ds_max", "amp_target", "max_points",
                "seed_amp", "t_cap", "mu2_min", "mu2_max", "explosion_lo", "explosion_hi",
                "bracket_tol", "t_max", "rho", "svg", "out",
            ];
            let Some(&canon) = known.iter().find(|&&k| k == key) else {
                return Err(ConfigError::at(line, format!("unknown key `{key}`")));
            };
            if let Some((prev, _)) = entries.insert(canon, (line, value)) {
                return Err(ConfigError::at(
                    line,
                    format!("key `{key}` already set on line {prev}"),
                ));
            }
        }

        let take = |key: &str| entries.get(key).cloned();
        let num = |key: &str| -> Result<Option<f64>, ConfigError> {
            take(key).map(|(line, v)| parse_f64(&v, line)).transpose()
        };

        let (model, model_path) = match take("model") {
            Some((line, v)) => {
                let mp = dir.join(&v);
                let mtext = std::fs::read_to_string(&mp).map_err(|e| {
                    ConfigError::at(line, format!("cannot read model {}: {e}", mp.display()))
                })?;
                let model = twofold_core::parse_model(&mtext).map_err(|e| {
                    ConfigError::at(line, format!("model {}: {e}", mp.display()))
                })?;
                model.coefficients().map_err(|e| {
                    ConfigError::at(line, format!("model {}: {e}", mp.display()))
                })?;
                (model, mp)
            }
            None => return Err(ConfigError::whole("missing required key `model`")),
        };

        let r2 = match (num("r2")?, num("epsilon")?) {
            (Some(_), Some(_)) => {
                return Err(ConfigError::whole("give exactly one of `r2` and `epsilon`"))
            }
            (Some(r), None) if r >= 0.0 => Some(r),
            (None, Some(e)) if e >= 0.0 => Some(e.sqrt()),
            (None, None) => None,
            _ => return Err(ConfigError::whole("`r2`/`epsilon` must be nonnegative")),
        };

        let mu = take("mu").map(|(line, v)| parse_values(&v, line)).transpose()?;
        let mu2 = take("mu2").map(|(line, v)| parse_values(&v, line)).transpose()?;
        if mu.is_some() && mu2.is_some() {
            return Err(ConfigError::whole("give `mu` or `mu2`, not both"));
        }

        let mut parsed_phis = Vec::new();
        for (line, v) in phis {
            parsed_phis.push((v.clone(), parse_phi(&v, line)?));
        }

        let svg = match take("svg") {
            None => true,
            Some((line, v)) => match v.as_str() {
                "true" => true,
                "false" => false,
                other => {
                    return Err(ConfigError::at(line, format!("svg = {other}: use true or false")))
                }
            },
        };

        let explosion = match (num("explosion_lo")?, num("explosion_hi")?) {
            (Some(lo), Some(hi)) if lo < hi => Some((lo, hi)),
            (Some(_), Some(_)) => {
                return Err(ConfigError::whole("explosion bracket needs explosion_lo < explosion_hi"))
            }
            (None, None) => None,
            _ => {
                return Err(ConfigError::whole(
                    "explosion_lo and explosion_hi must be given together",
                ))
            }
        };

        let max_points = take("max_points")
            .map(|(line, v)| {
                v.parse::<usize>()
                    .map_err(|_| ConfigError::at(line, format!("max_points = {v}: not a count")))
            })
            .transpose()?;

        Ok(RunConfig {
            model,
            model_path,
            phis: parsed_phis,
            r2,
            mu,
            mu2,
            x0: num("x0")?,
            y0: num("y0")?,
            t0: num("t0")?.unwrap_or(0.0),
            t1: num("t1")?,
            sample_dt: num("sample_dt")?,
            rtol: num("rtol")?,
            atol: num("atol")?,
            window: num("window")?.unwrap_or(1.5),
            ds0: num("ds0")?,
            ds_max: num("ds_max")?,
            amp_target: num("amp_target")?,
            max_points,
            seed_amp: num("seed_amp")?,
            t_cap: num("t_cap")?,
            mu2_min: num("mu2_min")?,
            mu2_max: num("mu2_max")?,
            explosion,
            bracket_tol: num("bracket_tol")?,
            t_max: num("t_max")?,
            rho: num("rho")?,
            svg,
            out: take("out").map(|(_, v)| PathBuf::from(v)),
            hash: fnv1a64(text.as_bytes()),
        })
    }

    pub fn need_r2(&self) -> Result<f64, ConfigError> {
        self.r2.ok_or_else(|| ConfigError::whole("this command needs `r2` or `epsilon`"))
    }

    /// Whether the config supplies parameter values in either form.
    pub fn has_mu(&self) -> bool {
        self.mu.is_some() || self.mu2.is_some()
    }

    /// Physical switching-parameter values; `mu2` entries are scaled by r2.
    pub fn mu_values(&self) -> Result<Vec<f64>, ConfigError> {
        if let Some(mu) = &self.mu {
            return Ok(mu.clone());
        }
        if let Some(mu2) = &self.mu2 {
            let r2 = self.need_r2()?;
            return Ok(mu2.iter().map(|m| m * r2).collect());
        }
        Err(ConfigError::whole("this command needs `mu` or `mu2`"))
    }

    pub fn continue_options(&self) -> ContinueOptions {
        let d = ContinueOptions::default();
        ContinueOptions {
            ds0: self.ds0.unwrap_or(d.ds0),
            ds_max: self.ds_max.unwrap_or(d.ds_max),
            max_points: self.max_points.unwrap_or(d.max_points),
            amp_target: self.amp_target.unwrap_or(d.amp_target),
            t_cap: self.t_cap.unwrap_or(d.t_cap),
            mu2_window: (
                self.mu2_min.unwrap_or(d.mu2_window.0),
                self.mu2_max.unwrap_or(d.mu2_window.1),
            ),
            seed_amp: self.seed_amp.unwrap_or(d.seed_amp),
        }
    }

    pub fn explosion_options(&self) -> ExplosionOptions {
        let d = ExplosionOptions::default();
        ExplosionOptions {
            t_max: self.t_max.unwrap_or(d.t_max),
            bracket_tol: self.bracket_tol.unwrap_or(d.bracket_tol),
            rho: self.rho.unwrap_or(d.rho),
        }
    }
}

fn parse_f64(v: &str, line: usize) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| ConfigError::at(line, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(ConfigError::at(line, format!("`{v}` is not finite")));
    }
    Ok(x)
}

/// Single value, comma list, or inclusive `start:step:end` range.
fn parse_values(v: &str, line: usize) -> Result<Vec<f64>, ConfigError> {
    if v.contains(':') {
        let parts: Vec<&str> = v.split(':').collect();
        if parts.len() != 3 {
            return Err(ConfigError::at(line, format!("range `{v}`: use start:step:end")));
        }
        let a = parse_f64(parts[0].trim(), line)?;
        let step = parse_f64(parts[1].trim(), line)?;
        let b = parse_f64(parts[2].trim(), line)?;
        if step == 0.0 || (b - a) * step < 0.0 {
            return Err(ConfigError::at(line, format!("range `{v}` is empty")));
        }
        let mut out = Vec::new();
        let tol = 1e-9 * step.abs();
        let mut k = 0u64;
        loop {
            let x = a + k as f64 * step;
            if (step > 0.0 && x > b + tol) || (step < 0.0 && x < b - tol) {
                break;
            }
            out.push(x);
            k += 1;
            if k > 100_000 {
                return Err(ConfigError::at(line, format!("range `{v}` has over 100000 points")));
            }
        }
        return Ok(out);
    }
    let vals: Result<Vec<f64>, _> = v.split(',').map(|p| parse_f64(p.trim(), line)).collect();
    let vals = vals?;
    if vals.is_empty() {
        return Err(ConfigError::at(line, "empty value list"));
    }
    Ok(vals)
}

fn parse_phi(v: &str, line: usize) -> Result<Phi, ConfigError> {
    match v {
        "linear" => return Ok(Phi::linear()),
        "cubic" => return Ok(Phi::cubic()),
        "septic" => return Ok(Phi::septic()),
        _ => {}
    }
    if let Some(list) = v.strip_prefix("odd:") {
        let odd: Result<Vec<f64>, _> = list.split(',').map(|p| parse_f64(p.trim(), line)).collect();
        return Phi::from_odd_coefficients(odd?)
            .map_err(|e| ConfigError::at(line, format!("phi = {v}: {e}")));
    }
    Err(ConfigError::at(
        line,
        format!("phi = {v}: use linear, cubic, septic, or odd:<c1,c3,...>"),
    ))
}

/// Filesystem-safe tag for a transition-function label.
pub fn slug(label: &str) -> String {
    let s: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect();
    s.trim_matches('_').chars().take(24).collect()
}
