use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use pvlab_core::blur::make_blur_video;
use pvlab_core::heat::make_heat_video;
use pvlab_core::markov::{first_order_markov_noise, high_order_markov_noise};
use pvlab_core::{linear_beta_schedule, BlurSchedule, Frame, HeatSchedule, PseudoVideo, RngSpec};

use crate::config::{AugmentConfig, Augmentation};
use crate::error::{IoError, RunError};
use crate::format::fmt_g12;
use crate::image::read_image;
use crate::output::{sha256_hex, OutputDir};
use crate::tensor::encode_video;

pub const MANIFEST_CSV: &str = "manifest.csv";

/// Images in `dir` with a `.pgm` or `.ppm` extension, sorted by name.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>, RunError> {
    let entries = fs::read_dir(dir).map_err(|e| IoError::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| IoError::io(dir, e))?.path();
        let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
        if path.is_file() && matches!(ext.as_deref(), Some("pgm" | "ppm")) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Stream id of an image, derived from its stem so that adding or removing
/// other files leaves it unchanged.
pub fn stream_for(stem: &str) -> u64 {
    let digest = sha256_hex(stem.as_bytes());
    u64::from_str_radix(&digest[..16], 16).expect("hex digest")
}

fn join(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|&v| fmt_g12(v)).collect();
    format!("[{}]", parts.join(" "))
}

/// Builds the video for one image and a description of the schedule.
pub fn augment_image(image: &Frame, aug: &Augmentation, rng: RngSpec) -> Result<(PseudoVideo, String), RunError> {
    Ok(match aug {
        Augmentation::Blur { n_frames, kernel_size, sigma0, rate } => {
            let s = BlurSchedule::new(*n_frames, *kernel_size, *sigma0, *rate)?;
            (make_blur_video(image, &s)?, format!("kernel_size={kernel_size} sigmas={}", join(&s.sigmas())))
        }
        Augmentation::Heat { times, sigma_h } => {
            let s = HeatSchedule::new(times.clone(), *sigma_h)?;
            (make_heat_video(image, &s, rng)?, format!("times={} sigma_h={}", join(times), fmt_g12(*sigma_h)))
        }
        Augmentation::NoiseFirstOrder { n_frames, beta_start, beta_end } => {
            let s = linear_beta_schedule(*n_frames, *beta_start, *beta_end)?;
            (first_order_markov_noise(image, &s, rng)?, format!("betas={}", join(s.betas())))
        }
        Augmentation::NoiseHighOrder { n_frames, beta_start, beta_end } => {
            let s = linear_beta_schedule(*n_frames, *beta_start, *beta_end)?;
            (high_order_markov_noise(image, &s, rng)?, format!("betas={}", join(s.betas())))
        }
    })
}

struct Done {
    name: String,
    bytes: Vec<u8>,
    row: [String; 6],
}

/// Converts every image of the input directory to a `.pvid` pseudo video.
/// Files that fail are logged and skipped; the run then ends with an I/O
/// error after all other files were written.
pub fn augment(cfg: &AugmentConfig, out: &mut OutputDir) -> Result<(), RunError> {
    let images = list_images(&cfg.input_dir)?;
    if images.is_empty() {
        return Err(RunError::Config(format!("no .pgm or .ppm images in {}", cfg.input_dir.display())));
    }
    // schedule errors are configuration errors, not per-file failures
    let probe = Frame::filled(pvlab_core::Shape::new(1, 1, 1)?, 0.0)?;
    augment_image(&probe, &cfg.augmentation, RngSpec::default())?;

    log::info!("augmenting {} images ({})", images.len(), cfg.augmentation.family());
    let results: Vec<Result<Done, String>> = images
        .par_iter()
        .map(|path| {
            let stem = path.file_stem().and_then(|s| s.to_str()).ok_or_else(|| format!("{}: unusable file name", path.display()))?;
            let stream = stream_for(stem);
            let image = read_image(path).map_err(|e| e.to_string())?;
            let (video, params) = augment_image(&image, &cfg.augmentation, RngSpec::new(cfg.seed, stream)).map_err(|e| format!("{}: {e}", path.display()))?;
            let name = format!("{stem}.pvid");
            let file = path.file_name().unwrap().to_string_lossy().into_owned();
            let row = [file, video.len().to_string(), cfg.augmentation.family().to_string(), params, cfg.seed.to_string(), stream.to_string()];
            Ok(Done { name, bytes: encode_video(&video), row })
        })
        .collect();

    let mut table = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| RunError::Io(e.to_string());
    table.write_record(["file", "T", "family", "schedule_params", "seed", "stream_id"]).map_err(io)?;
    let mut failures = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for r in results {
        match r {
            Ok(done) if !seen.insert(done.name.clone()) => {
                failures.push(format!("{}: output {} already written by another image", done.row[0], done.name));
            }
            Ok(done) => {
                out.write(&done.name, &done.bytes)?;
                table.write_record(&done.row).map_err(io)?;
            }
            Err(msg) => failures.push(msg),
        }
    }
    for f in &failures {
        log::error!("{f}");
    }
    let bytes = table.into_inner().map_err(|e| RunError::Io(e.to_string()))?;
    out.write(MANIFEST_CSV, &bytes)?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(RunError::Io(format!("{} of {} images failed", failures.len(), images.len())))
    }
}
