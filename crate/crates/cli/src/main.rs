use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use einkrylov::imaging::{
    blur_and_noise, init_thread_pool, load_input, psnr, relative_error, run_experiment, save_output, snr,
    synthetic_scene, synthetic_video, ExperimentSpec, ImageTensor, PsfSource, RestoreSettings,
};
use einkrylov::operators::{build_gaussian_psf, PsfBlurOperator};
use einkrylov::regularization::{GcvVariant, GCV_BRACKET};
use einkrylov::solvers::{GmresConfig, Method, MuRule};

/// Tikhonov-regularized Krylov restoration of blurred color images and videos.
///
/// Set EINKRYLOV_THREADS to cap the number of worker threads.
#[derive(Parser)]
#[command(name = "einkrylov", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print a Gaussian PSF as rows of space-separated values.
    Psf {
        #[arg(long, default_value_t = 9)]
        size: usize,
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
        /// Zero-based center as ROW,COL (default: middle pixel).
        #[arg(long, value_parser = parse_center)]
        center: Option<(usize, usize)>,
        /// Rescale the kernel to unit sum.
        #[arg(long)]
        normalize: bool,
        /// Write to a file instead of stdout.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Blur an image (or frame directory) and add Gaussian noise.
    Blur {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        degrade: DegradeArgs,
    },
    /// Degrade a sharp input, restore it and report the metrics.
    Deblur {
        /// Sharp reference image or directory of frame_NNNN.png files.
        #[arg(short, long)]
        input: PathBuf,
        /// Restored image file or frame directory.
        #[arg(short, long)]
        output: PathBuf,
        /// Also save the blurred and noisy observation.
        #[arg(long)]
        observed: Option<PathBuf>,
        #[arg(long, default_value = "ggkb", value_parser = parse_method)]
        method: Method,
        #[command(flatten)]
        degrade: DegradeArgs,
        /// Discrepancy safety factor for GGKB.
        #[arg(long, default_value_t = 1.1)]
        eta: f64,
        /// Maximum bidiagonalization steps for GGKB.
        #[arg(long, default_value_t = 200)]
        ell_max: usize,
        /// GMRES restart length.
        #[arg(long, default_value_t = 10)]
        m: usize,
        /// Maximum number of GMRES restarts.
        #[arg(long, default_value_t = 10)]
        maxit: usize,
        /// GMRES stopping threshold on the residual estimate.
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value = "truncated", value_parser = parse_gcv)]
        gcv_variant: GcvVariant,
        /// Use a fixed GMRES Tikhonov parameter instead of GCV.
        #[arg(long)]
        mu: Option<f64>,
        /// Metrics JSON path.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Residual history CSV path.
        #[arg(long)]
        residuals: Option<PathBuf>,
    },
    /// Compare a restoration against its reference.
    Metrics {
        #[arg(long)]
        reference: PathBuf,
        #[arg(long)]
        restored: PathBuf,
    },
    /// Write the built-in synthetic test scene or video.
    Synth {
        #[arg(long, default_value_t = 256)]
        size: usize,
        /// Number of frames; writes a frame directory when given.
        #[arg(long)]
        frames: Option<usize>,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long, default_value_t = 2.0)]
    sigma: f64,
    #[arg(long, default_value_t = 9)]
    psf_size: usize,
    /// Read the PSF from a text file instead of building a Gaussian.
    #[arg(long, conflicts_with_all = ["sigma", "psf_size"])]
    psf_file: Option<PathBuf>,
    /// Rescale the PSF to unit sum.
    #[arg(long)]
    psf_normalize: bool,
    /// Noise level ‖N‖/‖A X‖.
    #[arg(long, default_value_t = 1e-3)]
    noise_level: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl DegradeArgs {
    fn psf(&self) -> PsfSource {
        match &self.psf_file {
            Some(p) => PsfSource::File(p.clone()),
            None => PsfSource::Gaussian {
                size: self.psf_size,
                sigma: self.sigma,
            },
        }
    }
}

fn parse_center(s: &str) -> std::result::Result<(usize, usize), String> {
    let (r, c) = s.split_once(',').ok_or("expected ROW,COL")?;
    Ok((
        r.trim().parse().map_err(|e| format!("{e}"))?,
        c.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    s.parse().map_err(|e: einkrylov::Error| e.to_string())
}

fn parse_gcv(s: &str) -> std::result::Result<GcvVariant, String> {
    s.parse().map_err(|e: einkrylov::Error| e.to_string())
}

fn write_or_print(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Psf {
            size,
            sigma,
            center,
            normalize,
            output,
        } => {
            let mut k = build_gaussian_psf(size, sigma, center)?;
            if normalize {
                k = k.normalized()?;
            }
            write_or_print(&k.to_text(), output.as_deref())
        }
        Command::Blur { input, output, degrade } => {
            let settings = RestoreSettings {
                psf: degrade.psf(),
                psf_normalize: degrade.psf_normalize,
                ..RestoreSettings::default()
            };
            let x = load_input(&input)?;
            let op = PsfBlurOperator::new(settings.kernel()?, x.side())?;
            let (c, eps) = blur_and_noise(x.tensor(), &op, degrade.noise_level, degrade.seed)?;
            save_output(&ImageTensor::new(c)?, &output)?;
            println!("{}", serde_json::json!({ "eps": eps, "noise_level": degrade.noise_level }));
            Ok(())
        }
        Command::Deblur {
            input,
            output,
            observed,
            method,
            degrade,
            eta,
            ell_max,
            m,
            maxit,
            tol,
            gcv_variant,
            mu,
            metrics,
            residuals,
        } => {
            let mu_rule = match mu {
                Some(v) => MuRule::Fixed(v),
                None => MuRule::Gcv {
                    lo: GCV_BRACKET.0,
                    hi: GCV_BRACKET.1,
                },
            };
            let spec = ExperimentSpec {
                input,
                output,
                observed,
                metrics,
                residuals,
                settings: RestoreSettings {
                    psf: degrade.psf(),
                    psf_normalize: degrade.psf_normalize,
                    noise_level: degrade.noise_level,
                    seed: degrade.seed,
                    method,
                    gmres: GmresConfig {
                        restart: m,
                        maxit,
                        tol,
                        gcv_variant,
                        mu_rule,
                        ..GmresConfig::default()
                    },
                    eta,
                    ell_max,
                },
            };
            let (record, _) = run_experiment(&spec)?;
            if !record.converged {
                log::warn!("{method} stopped before its convergence test was met");
            }
            println!("{}", einkrylov::imaging::metrics_json(&record));
            Ok(())
        }
        Command::Metrics { reference, restored } => {
            let a = load_input(&reference)?;
            let b = load_input(&restored)?;
            if a.tensor().shape() != b.tensor().shape() {
                bail!("shape mismatch: {} vs {}", a.tensor().shape(), b.tensor().shape());
            }
            let (x, y) = (a.tensor(), b.tensor());
            let out = serde_json::json!({
                "re": relative_error(x, y)?,
                "snr": snr(x, y)?,
                "psnr": psnr(x, y)?,
            });
            println!("{}", serde_json::to_string_pretty(&out)?);
            Ok(())
        }
        Command::Synth { size, frames, output } => {
            let img = match frames {
                Some(k) => synthetic_video(size, k)?,
                None => synthetic_scene(size)?,
            };
            save_output(&img, &output)?;
            Ok(())
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let threads = init_thread_pool();
    log::debug!("using {threads} worker threads");
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
