//! Command-line front end.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_bands, report_sidecar, RunConfig};
use crate::degrade::{degrade, DegradeSpec};
use crate::error::{Error, Result};
use crate::io::{read_msi, write_msi, Dtype};
use crate::metrics::{channel_metrics, pseudo_color};
use crate::opponent::{
    check_eigenstructure, enumerate_qd, verify_h_decomposition, verify_opponent,
};
use crate::regularizers::{ModelKind, Regularizer};
use crate::render::write_png;
use crate::solver::admm_restore;
use crate::sweep::{parse_grid, sweep};

/// Environment variable capping the worker pool (0 = automatic).
pub const THREADS_ENV: &str = "MSI_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gottv",
    version,
    about = "Multispectral image restoration with opponent-transform TV"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Blur and add seeded Gaussian noise.
    Degrade(DegradeArgs),
    /// Restore a degraded image.
    Restore(RestoreArgs),
    /// Per-channel PSNR/SSIM and their means.
    Metrics(MetricsArgs),
    /// Enumerate and check the opponent bases for `d` channels.
    VerifyBasis(VerifyArgs),
    /// Export a pseudo-color PNG.
    Render(RenderArgs),
    /// Grid-search regularization parameters by MPSNR.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct DegradeArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Gaussian blur width; 0 disables blur.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "f64")]
    pub dtype: Dtype,
}

#[derive(Debug, Args)]
pub struct RestoreArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub model: Option<ModelKind>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    /// Blur width of the degradation; 0 means denoising.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long)]
    pub maxitr: Option<usize>,
    #[arg(long)]
    pub relerr: Option<f64>,
    /// Flat `key = value` file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sidecar path; defaults to `<out>.report`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long, default_value = "f64")]
    pub dtype: Dtype,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub test: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub d: usize,
}

#[derive(Debug, Args)]
pub struct RenderArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// One-based `r,g,b` band indices.
    #[arg(long, value_parser = parse_bands_arg)]
    pub bands: (usize, usize, usize),
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub model: ModelKind,
    #[arg(long)]
    pub lambda_grid: String,
    #[arg(long, default_value = "1")]
    pub alpha_grid: String,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long)]
    pub maxitr: Option<usize>,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

fn parse_bands_arg(s: &str) -> std::result::Result<(usize, usize, usize), String> {
    parse_bands(s).map_err(|e| e.to_string())
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    path.map_or_else(|| Ok(RunConfig::default()), RunConfig::from_file)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs one parsed command, writing human output to `out`.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<()> {
    let io_err = |source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    };
    match cli.command {
        Command::Degrade(a) => {
            let clean = read_msi(&a.input)?;
            let spec = DegradeSpec::with_sigma(a.sigma, a.noise_std, a.seed)?;
            write_msi(&a.out, &degrade(&clean, &spec)?, a.dtype)?;
        }
        Command::Restore(a) => {
            let mut cfg = load_config(a.config.as_deref())?;
            if let Some(v) = a.model {
                cfg.model = v;
            }
            if let Some(v) = a.lambda {
                cfg.lambda = v;
            }
            if let Some(v) = a.alpha {
                cfg.alpha = v;
            }
            if let Some(v) = a.mu {
                cfg.mu = v;
            }
            if let Some(v) = a.sigma {
                cfg.sigma = v;
            }
            if let Some(v) = a.maxitr {
                cfg.max_iter = Some(v);
            }
            if let Some(v) = a.relerr {
                cfg.rel_tol = v;
            }
            let admm = cfg.admm()?;
            let observed = read_msi(&a.input)?;
            let reg = Regularizer::for_kind(cfg.model, &observed, cfg.alpha, cfg.mu)?;
            let (restored, report) = admm_restore(&observed, &cfg.kernel()?, &reg, &admm)?;
            write_msi(&a.out, &restored, a.dtype)?;
            let sidecar = a.report.unwrap_or_else(|| {
                let mut p = a.out.clone().into_os_string();
                p.push(".report");
                PathBuf::from(p)
            });
            write_text(&sidecar, &report_sidecar(&report, &cfg))?;
            writeln!(
                out,
                "{}: {} iterations, relerr {:.3e}, {:.3} s",
                cfg.model,
                report.iterations,
                report.final_relerr(),
                report.seconds
            )
            .map_err(io_err)?;
        }
        Command::Metrics(a) => {
            let reference = read_msi(&a.reference)?;
            let test = read_msi(&a.test)?;
            let (lo, hi) = reference
                .as_slice()
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                    (l.min(v), h.max(v))
                });
            if lo < -0.01 || hi > 1.01 {
                eprintln!(
                    "warning: reference range [{lo:.4}, {hi:.4}] is outside [0, 1]; metrics assume unit peak"
                );
            }
            let m = channel_metrics(&reference, &test)?;
            writeln!(out, "band\tpsnr\tssim").map_err(io_err)?;
            for (k, (p, s)) in m.psnr.iter().zip(&m.ssim).enumerate() {
                writeln!(out, "{}\t{:.4}\t{:.4}", k + 1, p, s).map_err(io_err)?;
            }
            writeln!(out, "MPSNR\t{:.4}", m.mpsnr()).map_err(io_err)?;
            writeln!(out, "MSSIM\t{:.4}", m.mssim()).map_err(io_err)?;
        }
        Command::VerifyBasis(a) => {
            let bases = enumerate_qd(a.d)?;
            let mut max_residual = 0.0f64;
            for b in &bases {
                let report = verify_opponent(b.matrix());
                if !report.is_valid() {
                    return Err(Error::Config(format!(
                        "basis {} failed: {}",
                        b.permutation_label(),
                        report
                            .violations
                            .iter()
                            .map(ToString::to_string)
                            .collect::<Vec<_>>()
                            .join("; ")
                    )));
                }
                max_residual = max_residual.max(check_eigenstructure(b));
            }
            writeln!(out, "{} bases verified", bases.len()).map_err(io_err)?;
            writeln!(out, "max eigen residual {max_residual:.3e}").map_err(io_err)?;
            if a.d >= 3 {
                let r = verify_h_decomposition(a.d)?;
                writeln!(out, "H decomposition residual {r}").map_err(io_err)?;
            }
        }
        Command::Render(a) => {
            let image = read_msi(&a.input)?;
            write_png(&a.out, &pseudo_color(&image, a.bands)?)?;
        }
        Command::Sweep(a) => {
            let mut cfg = load_config(a.config.as_deref())?;
            cfg.model = a.model;
            cfg.sigma = a.sigma;
            if let Some(v) = a.mu {
                cfg.mu = v;
            }
            if let Some(v) = a.maxitr {
                cfg.max_iter = Some(v);
            }
            let lambdas = parse_grid(&a.lambda_grid)?;
            let alphas = parse_grid(&a.alpha_grid)?;
            let observed = read_msi(&a.input)?;
            let reference = read_msi(&a.reference)?;
            let result = sweep(
                &observed,
                &reference,
                &cfg.kernel()?,
                cfg.model,
                &lambdas,
                &alphas,
                cfg.mu,
                &cfg.admm()?,
            )?;
            writeln!(out, "lambda\talpha\tmpsnr\titerations").map_err(io_err)?;
            for p in &result.points {
                writeln!(
                    out,
                    "{}\t{}\t{:.4}\t{}",
                    p.lambda, p.alpha, p.mpsnr, p.iterations
                )
                .map_err(io_err)?;
            }
            let b = &result.best;
            writeln!(
                out,
                "best lambda = {} alpha = {} mpsnr = {:.4}",
                b.lambda, b.alpha, b.mpsnr
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

/// Sizes the global rayon pool from `MSI_THREADS`.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("{THREADS_ENV} must be a count, got '{value}'")))?;
    // A pool that already exists is kept.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|()| run(cli, &mut std::io::stdout().lock()));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
