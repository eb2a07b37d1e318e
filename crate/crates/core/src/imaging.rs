//! Image and video I/O, degradation, metrics and the deblurring experiment.
//!
//! Images are `N x N x 3` tensors with values in `[0, 1]`; videos stack `k`
//! frames along a fourth mode (`N x N x 3 x k`). The blur acts on the two
//! spatial modes and maps every channel and frame independently.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder, ImageFormat, RgbImage};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{dim_err, Error, Result};
use crate::operators::{build_gaussian_psf, random_tensor, LinearTensorOperator, PsfBlurOperator, PsfKernel};
use crate::solvers::{ggkb_tikhonov, tg_gmres_tikhonov, GgkbConfig, GmresConfig, Method, SolveReport};
use crate::tensor::{fro_norm, DenseTensor, Shape};

/// Environment variable capping the worker threads of the global pool.
pub const THREADS_ENV: &str = "EINKRYLOV_THREADS";

/// Configures the global rayon pool from [`THREADS_ENV`].
///
/// Returns the thread count in effect. Later calls have no effect once the
/// pool exists.
pub fn init_thread_pool() -> usize {
    if let Some(n) = std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 && rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            log::debug!("thread pool already initialized");
        }
    }
    rayon::current_num_threads()
}

/// Color image (`N x N x 3`) or video (`N x N x 3 x k`).
#[derive(Debug, Clone, PartialEq)]
pub struct ImageTensor {
    data: DenseTensor,
}

impl ImageTensor {
    pub fn new(data: DenseTensor) -> Result<Self> {
        let d = data.dims();
        let ok = matches!(d.len(), 3 | 4) && d[0] == d[1] && d[2] == 3;
        if !ok {
            return Err(dim_err(format!(
                "expected N x N x 3 or N x N x 3 x k, got {}",
                data.shape()
            )));
        }
        Ok(ImageTensor { data })
    }

    pub fn side(&self) -> usize {
        self.data.dims()[0]
    }

    pub fn frames(&self) -> usize {
        self.data.dims().get(3).copied().unwrap_or(1)
    }

    pub fn is_video(&self) -> bool {
        self.data.order() == 4
    }

    pub fn tensor(&self) -> &DenseTensor {
        &self.data
    }

    pub fn into_tensor(self) -> DenseTensor {
        self.data
    }

    /// Frame `f` as an `N x N x 3` image.
    pub fn frame(&self, f: usize) -> ImageTensor {
        if !self.is_video() {
            assert_eq!(f, 0, "still image has a single frame");
            return self.clone();
        }
        let (n, k) = (self.side(), self.frames());
        let src = self.data.data();
        let mut out = Vec::with_capacity(n * n * 3);
        for p in 0..n * n * 3 {
            out.push(src[p * k + f]);
        }
        let data = DenseTensor::from_vec(Shape::new(vec![n, n, 3]).unwrap(), out).unwrap();
        ImageTensor { data }
    }

    /// Stacks same-size frames into a video tensor.
    pub fn stack(frames: &[ImageTensor]) -> Result<ImageTensor> {
        let first = frames.first().ok_or_else(|| Error::Parameter("no frames".into()))?;
        let n = first.side();
        let k = frames.len();
        if frames.iter().any(|f| f.is_video() || f.side() != n) {
            return Err(dim_err("frames must be still images of equal size"));
        }
        let mut out = vec![0.0; n * n * 3 * k];
        for (f, frame) in frames.iter().enumerate() {
            for (p, &v) in frame.data.data().iter().enumerate() {
                out[p * k + f] = v;
            }
        }
        ImageTensor::new(DenseTensor::from_vec(Shape::new(vec![n, n, 3, k])?, out)?)
    }

    fn to_rgb8(&self) -> RgbImage {
        let n = self.side() as u32;
        let bytes = self.data.data().iter().map(|&v| quantize(v)).collect();
        RgbImage::from_raw(n, n, bytes).expect("buffer matches image size")
    }

    fn from_rgb8(img: &RgbImage) -> ImageTensor {
        let n = img.width() as usize;
        let data = img.as_raw().iter().map(|&b| f64::from(b) / 255.0).collect();
        ImageTensor {
            data: DenseTensor::from_vec(Shape::new(vec![n, n, 3]).unwrap(), data).unwrap(),
        }
    }
}

/// Clamps to `[0, 1]` and rounds half up to 8 bits.
pub fn quantize(v: f64) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * 255.0 + 0.5).floor() as u8
}

/// Reads an 8-bit RGB PNG or binary PPM.
///
/// Non-square images are center-cropped to a square.
pub fn load_image(path: &Path) -> Result<ImageTensor> {
    let img = image::open(path)
        .map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?
        .to_rgb8();
    let (w, h) = img.dimensions();
    let img = if w != h {
        let s = w.min(h);
        log::warn!("{}: {w}x{h} image center-cropped to {s}x{s}", path.display());
        image::imageops::crop_imm(&img, (w - s) / 2, (h - s) / 2, s, s).to_image()
    } else {
        img
    };
    Ok(ImageTensor::from_rgb8(&img))
}

fn format_for(path: &Path) -> Result<ImageFormat> {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => Ok(ImageFormat::Png),
        Some("ppm") | Some("pnm") => Ok(ImageFormat::Pnm),
        _ => Err(Error::Format(format!("{}: expected a .png or .ppm file", path.display()))),
    }
}

/// Writes a still image as PNG or binary PPM, chosen by extension.
pub fn save_image(img: &ImageTensor, path: &Path) -> Result<()> {
    if img.is_video() {
        return Err(dim_err("use save_frames for video tensors"));
    }
    let format = format_for(path)?;
    let rgb = img.to_rgb8();
    let image_err = |source| Error::Image {
        path: path.to_path_buf(),
        source,
    };
    match format {
        ImageFormat::Pnm => {
            let file = fs::File::create(path).map_err(|source| Error::Io {
                path: path.to_path_buf(),
                source,
            })?;
            // the default PNM subtype is PAM; force binary PPM
            PnmEncoder::new(std::io::BufWriter::new(file))
                .with_subtype(PnmSubtype::Pixmap(SampleEncoding::Binary))
                .write_image(rgb.as_raw(), rgb.width(), rgb.height(), ExtendedColorType::Rgb8)
                .map_err(image_err)
        }
        _ => rgb.save_with_format(path, format).map_err(image_err),
    }
}

fn frame_name(f: usize) -> String {
    format!("frame_{:04}.png", f + 1)
}

/// Reads `frame_0001.png`, `frame_0002.png`, ... from a directory.
pub fn load_frames(dir: &Path) -> Result<ImageTensor> {
    let entries = fs::read_dir(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.file_name()
                .and_then(|n| n.to_str())
                .is_some_and(|n| n.starts_with("frame_") && n.ends_with(".png"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::Format(format!("{}: no frame_*.png files", dir.display())));
    }
    let frames = paths.iter().map(|p| load_image(p)).collect::<Result<Vec<_>>>()?;
    ImageTensor::stack(&frames)
}

pub fn save_frames(video: &ImageTensor, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for f in 0..video.frames() {
        save_image(&video.frame(f), &dir.join(frame_name(f)))?;
    }
    Ok(())
}

/// Loads a single image file or a directory of frames.
pub fn load_input(path: &Path) -> Result<ImageTensor> {
    if path.is_dir() {
        load_frames(path)
    } else {
        load_image(path)
    }
}

/// Saves a still image to a file or a video to a directory of frames.
pub fn save_output(img: &ImageTensor, path: &Path) -> Result<()> {
    if img.is_video() {
        save_frames(img, path)
    } else {
        save_image(img, path)
    }
}

/// Returns `C = A X̂ + N` with `‖N‖ = ν ‖A X̂‖` and `ε = ‖N‖`.
pub fn blur_and_noise(
    xhat: &DenseTensor,
    op: &dyn LinearTensorOperator,
    nu: f64,
    seed: u64,
) -> Result<(DenseTensor, f64)> {
    if !(nu >= 0.0) {
        return Err(Error::Parameter(format!("noise level must be ≥ 0, got {nu}")));
    }
    let clean = op.apply(xhat)?;
    if nu == 0.0 {
        return Ok((clean, 0.0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise = random_tensor(clean.shape().clone(), &mut rng);
    noise.scale_mut(nu * fro_norm(&clean) / fro_norm(&noise));
    let eps = fro_norm(&noise);
    let mut c = clean;
    c.axpy(1.0, &noise)?;
    Ok((c, eps))
}

/// `‖X̂ - X_r‖ / ‖X̂‖`.
pub fn relative_error(xhat: &DenseTensor, xr: &DenseTensor) -> Result<f64> {
    let den = fro_norm(xhat);
    if den == 0.0 {
        return Err(Error::Metric("relative error of a zero reference"));
    }
    Ok(fro_norm(&xhat.sub(xr)?) / den)
}

/// `10 log10(‖X̂ - mean(X̂)‖² / ‖X_r - X̂‖²)`; `+∞` for an exact restoration.
pub fn snr(xhat: &DenseTensor, xr: &DenseTensor) -> Result<f64> {
    let err = xhat.sub(xr)?;
    let e2 = fro_norm(&err).powi(2);
    if e2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    let data = xhat.data();
    let mean = data.iter().sum::<f64>() / data.len() as f64;
    let s2: f64 = data.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok(10.0 * (s2 / e2).log10())
}

/// Peak signal-to-noise ratio for unit peak: `10 log10(n / ‖X_r - X̂‖²)`.
pub fn psnr(xhat: &DenseTensor, xr: &DenseTensor) -> Result<f64> {
    let e2 = fro_norm(&xhat.sub(xr)?).powi(2);
    if e2 == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (xhat.len() as f64 / e2).log10())
}

fn smoothstep_edge(d: f64, width: f64) -> f64 {
    // d is the signed distance in pixels, positive inside
    1.0 / (1.0 + (-d / width).exp())
}

struct Blob {
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
    angle: f64,
    color: [f64; 3],
}

const BLOBS: [Blob; 7] = [
    Blob { cx: 0.30, cy: 0.34, rx: 0.24, ry: 0.19, angle: 0.4, color: [0.78, 0.10, 0.08] },
    Blob { cx: 0.70, cy: 0.30, rx: 0.20, ry: 0.23, angle: -0.3, color: [0.22, 0.58, 0.14] },
    Blob { cx: 0.55, cy: 0.66, rx: 0.27, ry: 0.18, angle: 0.1, color: [0.86, 0.22, 0.06] },
    Blob { cx: 0.20, cy: 0.75, rx: 0.16, ry: 0.20, angle: -0.6, color: [0.90, 0.72, 0.12] },
    Blob { cx: 0.86, cy: 0.74, rx: 0.12, ry: 0.22, angle: 0.7, color: [0.55, 0.12, 0.30] },
    Blob { cx: 0.47, cy: 0.17, rx: 0.10, ry: 0.07, angle: 0.0, color: [0.95, 0.55, 0.15] },
    Blob { cx: 0.62, cy: 0.47, rx: 0.08, ry: 0.12, angle: 1.1, color: [0.30, 0.45, 0.10] },
];

fn scene_pixel(x: f64, y: f64, n: f64, shift: (f64, f64)) -> [f64; 3] {
    let (u, v) = (x / n, y / n);
    let mut px = [
        0.18 + 0.10 * u + 0.04 * (9.0 * v).sin(),
        0.14 + 0.12 * v + 0.03 * (7.0 * u + 2.0 * v).cos(),
        0.22 + 0.06 * (5.0 * u * v).sin(),
    ];
    for (k, b) in BLOBS.iter().enumerate() {
        let dir = if k % 2 == 0 { 1.0 } else { -1.0 };
        let (cx, cy) = (b.cx + dir * shift.0, b.cy + shift.1 * dir);
        let (dx, dy) = (u - cx, v - cy);
        let (s, c) = b.angle.sin_cos();
        let (a, bb) = ((c * dx + s * dy) / b.rx, (-s * dx + c * dy) / b.ry);
        let r = (a * a + bb * bb).sqrt();
        // approximate signed distance in pixels
        let dist = (1.0 - r) * b.rx.min(b.ry) * n;
        let mask = smoothstep_edge(dist, 1.2);
        if mask < 1e-6 {
            continue;
        }
        let shade = 0.55 + 0.45 * (1.0 - r * r).max(0.0);
        let (hx, hy) = (a + 0.35, bb + 0.4);
        let spec = 0.45 * (-(hx * hx + hy * hy) / 0.05).exp();
        for (p, c) in px.iter_mut().zip(b.color) {
            let val = (c * shade + spec).min(1.0);
            *p = mask * val + (1.0 - mask) * *p;
        }
    }
    px.map(|c| c.clamp(0.0, 1.0))
}

fn render(n: usize, shift: (f64, f64)) -> Vec<f64> {
    let mut out = Vec::with_capacity(n * n * 3);
    for i in 0..n {
        for j in 0..n {
            let px = scene_pixel(j as f64 + 0.5, i as f64 + 0.5, n as f64, shift);
            out.extend(px.iter().map(|&c| f64::from(quantize(c)) / 255.0));
        }
    }
    out
}

/// Deterministic 8-bit RGB still life of smooth, shaded, overlapping
/// ellipses used as a public stand-in test image.
pub fn synthetic_scene(n: usize) -> Result<ImageTensor> {
    let shape = Shape::new(vec![n, n, 3])?;
    ImageTensor::new(DenseTensor::from_vec(shape, render(n, (0.0, 0.0)))?)
}

/// `k` frames of the synthetic scene with objects drifting between frames.
pub fn synthetic_video(n: usize, k: usize) -> Result<ImageTensor> {
    if k == 0 {
        return Err(Error::Parameter("a video needs at least one frame".into()));
    }
    let frames = (0..k)
        .map(|f| {
            let t = f as f64;
            let data = render(n, (0.004 * t, 0.0025 * t));
            ImageTensor::new(DenseTensor::from_vec(Shape::new(vec![n, n, 3])?, data)?)
        })
        .collect::<Result<Vec<_>>>()?;
    ImageTensor::stack(&frames)
}

/// How the blur kernel is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PsfSource {
    Gaussian { size: usize, sigma: f64 },
    File(PathBuf),
}

/// Degradation and solver settings shared by the in-memory and file-based
/// experiment drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct RestoreSettings {
    pub psf: PsfSource,
    pub psf_normalize: bool,
    pub noise_level: f64,
    pub seed: u64,
    pub method: Method,
    pub gmres: GmresConfig,
    pub eta: f64,
    pub ell_max: usize,
}

impl Default for RestoreSettings {
    fn default() -> Self {
        RestoreSettings {
            psf: PsfSource::Gaussian { size: 9, sigma: 2.0 },
            psf_normalize: false,
            noise_level: 1e-3,
            seed: 0,
            method: Method::Ggkb,
            gmres: GmresConfig::default(),
            eta: 1.1,
            ell_max: 200,
        }
    }
}

impl RestoreSettings {
    pub fn kernel(&self) -> Result<PsfKernel> {
        let k = match &self.psf {
            PsfSource::Gaussian { size, sigma } => build_gaussian_psf(*size, *sigma, None)?,
            PsfSource::File(p) => PsfKernel::read(p)?,
        };
        if self.psf_normalize {
            k.normalized()
        } else {
            Ok(k)
        }
    }
}

/// Scalar outcome of one restoration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub method: Method,
    pub mu: f64,
    pub re: f64,
    pub snr: f64,
    pub psnr: f64,
    pub seconds: f64,
    pub iterations: usize,
    pub converged: bool,
    pub psf_size: usize,
    pub noise_level: f64,
    pub eps: f64,
}

#[derive(Debug, Clone)]
pub struct Restoration {
    pub observed: DenseTensor,
    pub eps: f64,
    pub restored: DenseTensor,
    pub report: SolveReport,
    pub metrics: MetricsRecord,
}

/// Blurs and perturbs `xhat`, then restores it with the selected solver.
pub fn restore(xhat: &ImageTensor, settings: &RestoreSettings) -> Result<Restoration> {
    let kernel = settings.kernel()?;
    let psf_size = kernel.rows();
    let op = PsfBlurOperator::new(kernel, xhat.side())?;
    let truth = xhat.tensor();
    let (observed, eps) = blur_and_noise(truth, &op, settings.noise_level, settings.seed)?;
    let (restored, report) = match settings.method {
        Method::Gmres => {
            let x0 = DenseTensor::zeros(observed.shape().clone());
            tg_gmres_tikhonov(&op, &observed, &x0, &settings.gmres)?
        }
        Method::Ggkb => {
            let cfg = GgkbConfig {
                eta: settings.eta,
                ell_max: settings.ell_max,
                ..GgkbConfig::new(eps)
            };
            ggkb_tikhonov(&op, &observed, &cfg)?
        }
    };
    let metrics = MetricsRecord {
        method: report.method,
        mu: report.mu,
        re: relative_error(truth, &restored)?,
        snr: snr(truth, &restored)?,
        psnr: psnr(truth, &restored)?,
        seconds: report.seconds,
        iterations: report.iterations,
        converged: report.converged,
        psf_size,
        noise_level: settings.noise_level,
        eps,
    };
    Ok(Restoration {
        observed,
        eps,
        restored,
        report,
        metrics,
    })
}

/// File-based experiment: reads the sharp input, writes the restoration and
/// optional observation, metrics JSON and residual CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    /// Sharp image file or directory of frames.
    pub input: PathBuf,
    /// Restored image file or frame directory.
    pub output: PathBuf,
    pub observed: Option<PathBuf>,
    pub metrics: Option<PathBuf>,
    pub residuals: Option<PathBuf>,
    pub settings: RestoreSettings,
}

pub fn metrics_json(metrics: &MetricsRecord) -> String {
    serde_json::to_string_pretty(metrics).expect("metrics serialize")
}

/// `iteration,residual` rows, one per restart or bidiagonalization step.
pub fn residual_csv(report: &SolveReport) -> String {
    let mut out = String::from("iteration,residual\n");
    for (i, r) in report.residuals.iter().enumerate() {
        out.push_str(&format!("{},{:e}\n", i + 1, r));
    }
    out
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    fs::File::create(path)
        .and_then(|mut f| f.write_all(text.as_bytes()))
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<(MetricsRecord, SolveReport)> {
    let xhat = load_input(&spec.input)?;
    let out = restore(&xhat, &spec.settings)?;
    save_output(&ImageTensor::new(out.restored)?, &spec.output)?;
    if let Some(p) = &spec.observed {
        save_output(&ImageTensor::new(out.observed)?, p)?;
    }
    if let Some(p) = &spec.metrics {
        write_text(p, &metrics_json(&out.metrics))?;
    }
    if let Some(p) = &spec.residuals {
        write_text(p, &residual_csv(&out.report))?;
    }
    Ok((out.metrics, out.report))
}
