//! Command-line front end.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use eyeloc_core::closure::{cross_validate, eye_descriptor, svm_train, EyeState};
use eyeloc_core::gaze::{angular_accuracy, estimate_pog, fit_poly_eye, fit_rbf, CalibrationModel, GazeModels};
use eyeloc_core::pipeline::Locator;
use eyeloc_core::seed::derive_seed;
use eyeloc_core::synth::CorpusKind;
use eyeloc_core::{Point2, Rect, Side};

use crate::config::{extract_overrides, ModelKind, RunConfig};
use crate::dataset::{load_custom, load_dataset, manifest_index, DatasetKind};
use crate::error::{CliError, Result};
use crate::eval::{curves, evaluate_items, resolution_sweep};
use crate::formats::{self, f6};
use crate::imageio::load_gray;
use crate::sequence::{load_sequence, run_sequence};
use crate::synthio::{self, SyntheticMapping};

#[derive(Debug, Parser)]
#[command(name = "eyeloc", version, about = "Iris-centre localization, tracking and gaze estimation")]
#[command(after_help = "Any configuration value can be overridden with its dotted name, e.g. --pipeline.beta 2.5")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Top-level seed; every randomized stage derives its seed from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "eyeloc_out")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SynthKind {
    Clean,
    Hard,
    Closed,
    Closure,
    Sequence,
    Calibration,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Locate both iris centres in an image or every image of a directory.
    Locate {
        input: PathBuf,
        /// Face box `x,y,w,h` in pixels.
        #[arg(long)]
        face: Option<String>,
    },
    /// Benchmark a labelled dataset.
    Evaluate {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "custom")]
        dataset: DatasetKind,
        /// Comma-separated normalized-error thresholds.
        #[arg(long)]
        thresholds: Option<String>,
    },
    /// Accuracy at e <= 0.05 over downscaled copies of a dataset.
    Sweep {
        path: PathBuf,
        #[arg(long, value_enum, default_value = "custom")]
        dataset: DatasetKind,
        /// Comma-separated scales in (0, 1].
        #[arg(long)]
        scales: Option<String>,
    },
    /// Write a synthetic corpus.
    Synth {
        #[arg(long, value_enum)]
        kind: SynthKind,
        /// Faces, frames or samples per target, depending on the kind.
        #[arg(long)]
        count: Option<usize>,
        #[arg(long, value_enum, default_value = "quadratic")]
        mapping: SyntheticMapping,
        /// EC-IC noise in pixels for calibration data.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Train the open/closed classifier from `open/` and `closed/` folders.
    TrainClosure {
        dir: PathBuf,
        /// Also report repeated k-fold cross-validation accuracy.
        #[arg(long)]
        cv: bool,
    },
    /// Fit per-eye gaze models from a calibration CSV.
    Calibrate {
        csv: PathBuf,
        #[arg(long, value_enum)]
        model: Option<ModelKind>,
    },
    /// Apply gaze models to a CSV of samples and report angular error.
    Gaze { model: PathBuf, csv: PathBuf },
    /// Track iris centres and corners through a frame sequence.
    Track {
        manifest: PathBuf,
        /// Closure model from `train-closure`; without it every eye counts as open.
        #[arg(long)]
        closure_model: Option<PathBuf>,
    },
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Config(format!("bad {what} value {t:?}"))))
        .collect()
}

fn parse_rect(s: &str) -> Result<Rect> {
    match parse_list(s, "face")?.as_slice() {
        [x, y, w, h] if *w > 0.0 && *h > 0.0 => Ok(Rect::new(*x, *y, *w, *h)),
        _ => Err(CliError::Config(format!("--face needs x,y,w,h with positive size, got {s:?}"))),
    }
}

/// Loads the run configuration and applies the top-level seed.
pub fn build_config(cli: &Cli, overrides: &[(String, String)]) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), overrides)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.pipeline.refine.ransac.seed = derive_seed(cfg.seed, "ransac");
    cfg.closure.svm.seed = derive_seed(cfg.seed, "svm");
    Ok(cfg)
}

fn is_image(p: &Path) -> bool {
    p.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| ["pgm", "png", "jpg", "jpeg"].contains(&e.to_ascii_lowercase().as_str()))
}

fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_image(p))
        .collect();
    v.sort();
    Ok(v)
}

fn out_file(cli: &Cli, name: &str) -> PathBuf {
    cli.out.join(name)
}

fn cmd_locate(cli: &Cli, cfg: &RunConfig, input: &Path, face: Option<&str>) -> Result<()> {
    let forced = face.map(parse_rect).transpose()?;
    let (files, manifest) = if input.is_dir() {
        let m = input.join("manifest.csv");
        let idx = if m.is_file() { Some(manifest_index(&load_custom(&m)?)) } else { None };
        (list_images(input)?, idx)
    } else {
        (vec![input.to_path_buf()], None)
    };
    if files.is_empty() {
        return Err(CliError::NoDetections(format!("{}: no images to process", input.display())));
    }
    let mut loc = Locator::new(cfg.pipeline)?;
    let mut csv = String::from(formats::detections_header());
    let (mut read, mut accepted) = (0usize, 0usize);
    for f in &files {
        let img = match load_gray(f) {
            Ok(i) => i,
            Err(e) => {
                log::error!("{e}");
                continue;
            }
        };
        read += 1;
        let name = f.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let fb = match (forced, manifest.as_ref().and_then(|m| m.get(&name))) {
            (Some(r), _) => r,
            (None, Some(it)) => crate::eval::face_box(it, &cfg.pipeline)?,
            (None, None) => {
                let s = img.width().min(img.height()) as f64;
                Rect::new((img.width() as f64 - s) / 2.0, (img.height() as f64 - s) / 2.0, s, s)
            }
        };
        match loc.locate_eyes(&img, &fb) {
            Ok(dets) => {
                for d in &dets {
                    accepted += d.accepted() as usize;
                    csv.push_str(&formats::detection_row(&name, d));
                }
            }
            Err(e) => log::error!("{}: {e}", f.display()),
        }
    }
    formats::write_text(&out_file(cli, "detections.csv"), &csv)?;
    if read == 0 {
        return Err(CliError::io(input, std::io::Error::other("no input could be read")));
    }
    println!("{} image(s), {accepted} accepted eye(s)", read);
    if accepted == 0 {
        return Err(CliError::NoDetections(format!("no accepted detection in {read} image(s)")));
    }
    Ok(())
}

fn cmd_evaluate(cli: &Cli, cfg: &RunConfig, path: &Path, kind: DatasetKind, thresholds: Option<&str>) -> Result<()> {
    let thresholds = match thresholds {
        Some(t) => parse_list(t, "threshold")?,
        None => cfg.eval.thresholds.clone(),
    };
    let items = load_dataset(kind, path, &cfg.eval.gi4e)?;
    if items.is_empty() {
        return Err(CliError::NoDetections(format!("{}: dataset is empty", path.display())));
    }
    let recs = evaluate_items(&items, &cfg.pipeline, 1.0)?
        .ok_or_else(|| CliError::Config("images are too small for the configured radius range".into()))?;
    let plain: Vec<_> = recs.iter().map(|(_, r)| *r).collect();
    let c = curves(&plain, &thresholds)?;
    formats::write_text(&out_file(cli, "items.csv"), &formats::items_csv(&recs))?;
    formats::write_text(&out_file(cli, "summary.csv"), &formats::summary_csv(&c))?;
    print!("{} images\n{}", items.len(), formats::summary_table(&c));
    if plain.iter().all(Option::is_none) {
        return Err(CliError::NoDetections("no image had both eyes located".into()));
    }
    Ok(())
}

fn cmd_sweep(cli: &Cli, cfg: &RunConfig, path: &Path, kind: DatasetKind, scales: Option<&str>) -> Result<()> {
    let scales = match scales {
        Some(s) => parse_list(s, "scale")?,
        None => cfg.eval.scales.clone(),
    };
    if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
        return Err(CliError::Config("scales must lie in (0, 1]".into()));
    }
    let items = load_dataset(kind, path, &cfg.eval.gi4e)?;
    if items.is_empty() {
        return Err(CliError::NoDetections(format!("{}: dataset is empty", path.display())));
    }
    let rows = resolution_sweep(&items, &scales, &cfg.pipeline)?;
    let text = formats::sweep_csv(&rows);
    formats::write_text(&out_file(cli, "sweep.csv"), &text)?;
    print!("{text}");
    Ok(())
}

fn cmd_synth(
    cli: &Cli,
    cfg: &RunConfig,
    kind: SynthKind,
    count: Option<usize>,
    mapping: SyntheticMapping,
    noise: f64,
) -> Result<()> {
    let layout = cfg.pipeline.layout;
    let dir = &cli.out;
    match kind {
        SynthKind::Clean | SynthKind::Hard | SynthKind::Closed => {
            let k = match kind {
                SynthKind::Clean => CorpusKind::Clean,
                SynthKind::Hard => CorpusKind::Hard,
                _ => CorpusKind::Closed,
            };
            let n = count.unwrap_or(k.default_size());
            synthio::write_face_corpus(dir, k, n, cfg.seed, &layout)?;
            println!("wrote {n} {} faces to {}", k.name(), dir.display());
        }
        SynthKind::Closure => {
            let n = count.unwrap_or(100);
            let s = synthio::closure_samples(cfg.seed, &layout, n, n)?;
            synthio::write_closure_corpus(dir, &s)?;
            println!("wrote {} eye crops to {}", s.len(), dir.display());
        }
        SynthKind::Sequence => {
            let n = count.unwrap_or(30);
            let blinks: Vec<usize> = if n >= 8 { (n / 2..n / 2 + 3).collect() } else { Vec::new() };
            let specs = synthio::face_sequence(cfg.seed, &layout, n, Point2::new(0.3, -0.1), &blinks);
            synthio::write_sequence(dir, &specs)?;
            println!("wrote {n} frames to {}", dir.display());
        }
        SynthKind::Calibration => {
            let g = &cfg.gaze;
            let side = if g.grid_side == 0 { 3 } else { g.grid_side };
            let per = count.unwrap_or(5);
            let grid = g.screen.grid(side, g.grid_margin);
            let cal = synthio::synthetic_calibration(
                &grid,
                mapping,
                &g.screen,
                per,
                noise,
                derive_seed(cfg.seed, "calibration"),
            )?;
            let targets = synthio::random_targets(20, &g.screen, g.grid_margin, derive_seed(cfg.seed, "targets"));
            let test =
                synthio::synthetic_calibration(&targets, mapping, &g.screen, 1, noise, derive_seed(cfg.seed, "test"))?;
            formats::write_calibration_rows(&dir.join("calibration.csv"), &cal)?;
            formats::write_calibration_rows(&dir.join("test.csv"), &test)?;
            println!("wrote {}x{side} calibration and 20 test targets to {}", side, dir.display());
        }
    }
    Ok(())
}

fn cmd_train_closure(cli: &Cli, cfg: &RunConfig, dir: &Path, cv: bool) -> Result<()> {
    let c = &cfg.closure;
    let (mut feats, mut labels) = (Vec::new(), Vec::new());
    for (sub, state) in [("open", EyeState::Open), ("closed", EyeState::Closed)] {
        let d = dir.join(sub);
        if !d.is_dir() {
            return Err(CliError::io(&d, std::io::Error::from(std::io::ErrorKind::NotFound)));
        }
        for f in list_images(&d)? {
            feats.push(eye_descriptor(&load_gray(&f)?, &c.hog)?);
            labels.push(state.label());
        }
    }
    let m = svm_train(&feats, &labels, c.svm.c, c.svm.epochs, c.svm.seed)?;
    formats::save_svm(&out_file(cli, "closure.svm"), &m, &c.hog)?;
    println!("trained on {} eye crops", feats.len());
    if cv {
        let r = cross_validate(&feats, &labels, c.folds, c.repeats, &c.svm)?;
        println!("{}x{}-fold accuracy {:.4} (std {:.4})", c.repeats, c.folds, r.mean, r.std);
    }
    Ok(())
}

fn cmd_calibrate(cli: &Cli, cfg: &RunConfig, csv: &Path, model: Option<ModelKind>) -> Result<()> {
    let g = &cfg.gaze;
    let rows = formats::read_calibration_rows(csv)?;
    let set = formats::calibration_set(&rows, &g.screen, g.grid_side, g.grid_margin, g.baseline_angle)?;
    let fit = |side: Side| -> Result<CalibrationModel> {
        Ok(match model.unwrap_or(g.model) {
            ModelKind::Poly => CalibrationModel::Poly(fit_poly_eye(&set, side)?),
            ModelKind::Rbf => CalibrationModel::Rbf(fit_rbf(&set, side, g.sigma_k)?),
        })
    };
    let models = GazeModels { left: fit(Side::Left)?, right: fit(Side::Right)?, baseline_angle: g.baseline_angle };
    formats::save_gaze_models(&out_file(cli, "gaze_model.json"), &models)?;
    println!("calibrated on {} targets", set.grid.len());
    Ok(())
}

fn cmd_gaze(cli: &Cli, cfg: &RunConfig, model: &Path, csv: &Path) -> Result<()> {
    let models = formats::load_gaze_models(model)?;
    let geom = &cfg.gaze.screen;
    let rows = formats::read_calibration_rows(csv)?;
    let mut out = String::from("frame_index,target_x,target_y,pog_x,pog_y,error_px,error_deg\n");
    let mut errs = Vec::new();
    for g in formats::group_rows(&rows) {
        for (frame, pair) in &g.frames {
            let p = estimate_pog(pair.left, pair.right, &models, 0.0, geom)?.point;
            let e = p.distance(g.target);
            let deg = angular_accuracy(e, geom);
            errs.push(deg);
            out.push_str(&format!(
                "{frame},{},{},{},{},{},{}\n",
                f6(g.target.x),
                f6(g.target.y),
                f6(p.x),
                f6(p.y),
                f6(e),
                f6(deg)
            ));
        }
    }
    if errs.is_empty() {
        return Err(CliError::NoDetections(format!("{}: no samples", csv.display())));
    }
    formats::write_text(&out_file(cli, "pog.csv"), &out)?;
    println!("mean angular error {:.6} deg over {} samples", errs.iter().sum::<f64>() / errs.len() as f64, errs.len());
    Ok(())
}

fn cmd_track(cli: &Cli, cfg: &RunConfig, manifest: &Path, closure: Option<&Path>) -> Result<()> {
    let (base, rows) = load_sequence(manifest)?;
    let model = closure.map(formats::load_svm).transpose()?;
    let rep = run_sequence(&base, &rows, cfg, model, load_gray)?;
    formats::write_text(&out_file(cli, "track.csv"), &rep.csv)?;
    println!("{} frames", rep.frames);
    if let (Some(r), Some(k)) = (rep.raw_rmse, rep.kf_rmse) {
        println!("rmse raw {r:.6} px, kalman {k:.6} px");
    }
    Ok(())
}

pub fn execute(cli: &Cli, cfg: &RunConfig) -> Result<()> {
    match &cli.command {
        Command::Locate { input, face } => cmd_locate(cli, cfg, input, face.as_deref()),
        Command::Evaluate { path, dataset, thresholds } => {
            cmd_evaluate(cli, cfg, path, *dataset, thresholds.as_deref())
        }
        Command::Sweep { path, dataset, scales } => cmd_sweep(cli, cfg, path, *dataset, scales.as_deref()),
        Command::Synth { kind, count, mapping, noise } => cmd_synth(cli, cfg, *kind, *count, *mapping, *noise),
        Command::TrainClosure { dir, cv } => cmd_train_closure(cli, cfg, dir, *cv),
        Command::Calibrate { csv, model } => cmd_calibrate(cli, cfg, csv, *model),
        Command::Gaze { model, csv } => cmd_gaze(cli, cfg, model, csv),
        Command::Track { manifest, closure_model } => cmd_track(cli, cfg, manifest, closure_model.as_deref()),
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run(args: Vec<String>) -> i32 {
    let (rest, overrides) = match extract_overrides(args) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("error: {e}");
            return e.exit_code();
        }
    };
    let cli = match Cli::try_parse_from(rest) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = build_config(&cli, &overrides).and_then(|cfg| execute(&cli, &cfg));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
