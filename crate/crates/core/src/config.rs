//! Run configuration: flat `key = value` files plus command-line overrides.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::kernel::BlurKernel;
use crate::regularizers::{ModelKind, DEFAULT_SSAHTV_MU};
use crate::solver::{AdmmConfig, SolveReport};

/// Every knob of a pipeline run. `max_iter = None` picks the denoising or
/// deblurring default from the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub lambda: f64,
    pub alpha: f64,
    pub mu: f64,
    pub r0: f64,
    pub rho: f64,
    pub r_max: f64,
    pub max_iter: Option<usize>,
    pub rel_tol: f64,
    pub seed: u64,
    pub sigma: f64,
    pub noise_std: f64,
    pub bands: (usize, usize, usize),
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Gottv,
            lambda: 10.0,
            alpha: 0.3,
            mu: DEFAULT_SSAHTV_MU,
            r0: AdmmConfig::DEFAULT_R0,
            rho: AdmmConfig::DEFAULT_RHO,
            r_max: AdmmConfig::DEFAULT_R_MAX,
            max_iter: None,
            rel_tol: AdmmConfig::DEFAULT_REL_TOL,
            seed: 0,
            sigma: 0.0,
            noise_std: 0.0,
            bands: (1, 1, 1),
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value for '{key}': '{value}'")))
}

/// Parses `r,g,b` one-based band indices.
pub fn parse_bands(value: &str) -> Result<(usize, usize, usize)> {
    let parts: Vec<usize> = value
        .split(',')
        .map(|s| parse("bands", s.trim()))
        .collect::<Result<_>>()?;
    match parts[..] {
        [r, g, b] => Ok((r, g, b)),
        _ => Err(Error::Config(format!(
            "bands needs three indices, got '{value}'"
        ))),
    }
}

impl RunConfig {
    /// Sets one key. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "model" => self.model = parse(key, value)?,
            "lambda" => self.lambda = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "mu" => self.mu = parse(key, value)?,
            "r0" => self.r0 = parse(key, value)?,
            "rho" => self.rho = parse(key, value)?,
            "r_max" => self.r_max = parse(key, value)?,
            "maxitr" | "max_iter" => self.max_iter = Some(parse(key, value)?),
            "relerr" | "rel_tol" => self.rel_tol = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "noise_std" => self.noise_std = parse(key, value)?,
            "bands" => self.bands = parse_bands(value)?,
            other => return Err(Error::Config(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = Self::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_text(&text)
    }

    pub fn kernel(&self) -> Result<BlurKernel> {
        if self.sigma == 0.0 {
            Ok(BlurKernel::delta())
        } else {
            BlurKernel::gaussian(self.sigma)
        }
    }

    pub fn admm(&self) -> Result<AdmmConfig> {
        let base = if self.sigma == 0.0 {
            AdmmConfig::denoise(self.lambda)
        } else {
            AdmmConfig::deblur(self.lambda)
        };
        let c = AdmmConfig {
            r0: self.r0,
            rho: self.rho,
            r_max: self.r_max,
            max_iter: self.max_iter.unwrap_or(base.max_iter),
            rel_tol: self.rel_tol,
            ..base
        };
        c.validate()?;
        if self.model.uses_alpha() && !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::Config(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        Ok(c)
    }

    /// The effective configuration as `key = value` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let max_iter = self
            .admm()
            .map(|c| c.max_iter.to_string())
            .unwrap_or_else(|_| "invalid".into());
        let _ = writeln!(s, "model = {}", self.model);
        let _ = writeln!(s, "lambda = {}", self.lambda);
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "mu = {}", self.mu);
        let _ = writeln!(s, "r0 = {}", self.r0);
        let _ = writeln!(s, "rho = {}", self.rho);
        let _ = writeln!(s, "r_max = {}", self.r_max);
        let _ = writeln!(s, "maxitr = {max_iter}");
        let _ = writeln!(s, "relerr = {}", self.rel_tol);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "sigma = {}", self.sigma);
        let _ = writeln!(s, "noise_std = {}", self.noise_std);
        let _ = writeln!(
            s,
            "bands = {},{},{}",
            self.bands.0, self.bands.1, self.bands.2
        );
        s
    }
}

/// Sidecar text for a finished solve: report keys first, then the
/// effective configuration.
pub fn report_sidecar(report: &SolveReport, config: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "iterations = {}", report.iterations);
    let _ = writeln!(s, "final_relerr = {:e}", report.final_relerr());
    let objective = report
        .final_objective()
        .map_or_else(|| "nan".to_string(), |v| format!("{v:.12e}"));
    let _ = writeln!(s, "objective_final = {objective}");
    let _ = writeln!(s, "seconds = {:.6}", report.seconds);
    let _ = writeln!(s, "converged = {}", report.converged);
    let _ = writeln!(s, "final_r = {:e}", report.final_r);
    let _ = writeln!(s, "primal_residual = {:e}", report.primal_residual);
    s.push_str(&config.to_text());
    s
}

/// Reads a sidecar or config file back into key/value pairs.
pub fn parse_key_values(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| {
            let l = l.split('#').next()?.trim();
            let (k, v) = l.split_once('=')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}
