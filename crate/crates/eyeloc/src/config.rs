//! Run configuration: a TOML file with one table per stage, overridable by
//! dotted command-line keys such as `--pipeline.beta 2.5`.

use std::path::Path;

use eyeloc_core::closure::{HogConfig, SvmConfig};
use eyeloc_core::gaze::{CornerConfig, ScreenGeometry};
use eyeloc_core::metrics::DEFAULT_THRESHOLDS;
use eyeloc_core::pipeline::{Locator, PipelineConfig};
use eyeloc_core::seed::DEFAULT_SEED;
use eyeloc_core::track::{KfConfig, DEFAULT_NCC_THRESHOLD, DEFAULT_PATCH_SIDE, DEFAULT_SEARCH_RADIUS};
use serde::{Deserialize, Serialize};

use crate::dataset::Gi4eColumns;
use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    pub kalman: KfConfig,
    pub patch_side: usize,
    pub ncc_threshold: f64,
    pub search_radius: usize,
    pub corner: CornerConfig,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            kalman: KfConfig::default(),
            patch_side: DEFAULT_PATCH_SIDE,
            ncc_threshold: DEFAULT_NCC_THRESHOLD,
            search_radius: DEFAULT_SEARCH_RADIUS,
            corner: CornerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClosureConfig {
    pub hog: HogConfig,
    pub svm: SvmConfig,
    pub folds: usize,
    pub repeats: usize,
}

impl Default for ClosureConfig {
    fn default() -> Self {
        Self { hog: HogConfig::default(), svm: SvmConfig::default(), folds: 10, repeats: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum, Default)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Poly,
    #[default]
    Rbf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GazeConfig {
    pub screen: ScreenGeometry,
    pub model: ModelKind,
    /// RBF kernel width; the mean nearest-landmark distance when unset.
    pub sigma_k: Option<f64>,
    /// Expected calibration grid side (3 for 9 points, 4 for 16); 0 accepts
    /// whatever targets the calibration file holds.
    pub grid_side: usize,
    /// Grid inset from the screen border, as a fraction of each dimension.
    pub grid_margin: f64,
    pub baseline_angle: f64,
}

impl Default for GazeConfig {
    fn default() -> Self {
        Self {
            screen: ScreenGeometry::default(),
            model: ModelKind::Rbf,
            sigma_k: None,
            grid_side: 0,
            grid_margin: 0.1,
            baseline_angle: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub thresholds: Vec<f64>,
    pub scales: Vec<f64>,
    pub gi4e: Gi4eColumns,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { thresholds: DEFAULT_THRESHOLDS.to_vec(), scales: vec![1.0, 0.8, 0.6, 0.4], gi4e: Gi4eColumns::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub tracker: TrackerConfig,
    pub closure: ClosureConfig,
    pub gaze: GazeConfig,
    pub eval: EvalConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            pipeline: PipelineConfig::default(),
            tracker: TrackerConfig::default(),
            closure: ClosureConfig::default(),
            gaze: GazeConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    }
}

/// Sets `key` (dotted) in `table`, creating intermediate tables.
pub fn set_dotted(table: &mut toml::Table, key: &str, raw: &str) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!("malformed key {key:?}")));
    }
    let mut t = table;
    for p in &parts[..parts.len() - 1] {
        let entry = t.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        t = entry.as_table_mut().ok_or_else(|| CliError::Config(format!("{key}: {p} is not a table")))?;
    }
    t.insert(parts[parts.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

fn unknown_keys(user: &toml::Table, known: &toml::Table, prefix: &str, out: &mut Vec<String>) {
    for (k, v) in user {
        let path = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match (v, known.get(k)) {
            (_, None) => out.push(path),
            (toml::Value::Table(u), Some(toml::Value::Table(d))) => unknown_keys(u, d, &path, out),
            _ => {}
        }
    }
}

impl RunConfig {
    /// Builds a config from optional TOML text plus `(key, value)` overrides.
    pub fn from_parts(text: Option<&str>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = match text {
            Some(t) => t.parse().map_err(|e| CliError::Config(format!("{e}")))?,
            None => toml::Table::new(),
        };
        for (k, v) in overrides {
            set_dotted(&mut table, k, v)?;
        }
        let cfg: RunConfig =
            toml::Value::Table(table.clone()).try_into().map_err(|e| CliError::Config(format!("{e}")))?;
        let known = toml::Table::try_from(&cfg).map_err(|e| CliError::Config(format!("{e}")))?;
        let mut bad = Vec::new();
        unknown_keys(&table, &known, "", &mut bad);
        // optional keys are absent from the serialized defaults
        bad.retain(|k| k != "gaze.sigma_k");
        if !bad.is_empty() {
            return Err(CliError::Config(format!("unknown keys: {}", bad.join(", "))));
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let text = match path {
            Some(p) => Some(std::fs::read_to_string(p).map_err(|e| CliError::io(p, e))?),
            None => None,
        };
        Self::from_parts(text.as_deref(), overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(CliError::Config(m));
        Locator::new(self.pipeline).map_err(|e| CliError::Config(e.to_string()))?;
        self.closure.hog.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.gaze.screen.validate().map_err(|e| CliError::Config(e.to_string()))?;
        let p = &self.pipeline;
        if !(0.0..=1.0).contains(&p.lambda) || !(p.beta > 0.0) {
            return cfg_err(format!("pipeline.lambda must lie in [0, 1] and beta > 0, got {} / {}", p.lambda, p.beta));
        }
        if !(p.face_ratios.rho_min > 0.0 && p.face_ratios.rho_min < p.face_ratios.rho_max) {
            return cfg_err("pipeline.face_ratios needs 0 < rho_min < rho_max".into());
        }
        if p.candidates == 0 || !(0.0..=1.0).contains(&p.candidate_floor) {
            return cfg_err("pipeline.candidates must be positive and candidate_floor in [0, 1]".into());
        }
        let r = &p.refine.ransac;
        if r.iterations == 0 || !(r.dist_thresh > 0.0) || !(0.0..=1.0).contains(&r.min_inlier_ratio) {
            return cfg_err(
                "pipeline.refine.ransac: iterations > 0, dist_thresh > 0, min_inlier_ratio in [0, 1]".into(),
            );
        }
        if p.refine.trace.n_rays < 5 {
            return cfg_err("pipeline.refine.trace.n_rays must be at least 5".into());
        }
        let t = &self.tracker;
        if t.patch_side.is_multiple_of(2) || t.patch_side < 3 || !(-1.0..=1.0).contains(&t.ncc_threshold) {
            return cfg_err("tracker: patch_side must be odd >= 3 and ncc_threshold in [-1, 1]".into());
        }
        if t.kalman.q_diag.iter().any(|v| *v < 0.0) || t.kalman.r[0] <= 0.0 || t.kalman.r[3] <= 0.0 {
            return cfg_err("tracker.kalman: q_diag must be non-negative and r positive definite".into());
        }
        let c = &self.closure;
        if !(c.svm.c > 0.0) || c.svm.epochs == 0 || c.folds < 2 || c.repeats == 0 {
            return cfg_err("closure: svm.c > 0, svm.epochs > 0, folds >= 2, repeats >= 1".into());
        }
        if self.gaze.sigma_k.is_some_and(|s| !(s > 0.0)) || !(0.0..0.5).contains(&self.gaze.grid_margin) {
            return cfg_err("gaze: sigma_k must be positive and grid_margin in [0, 0.5)".into());
        }
        let e = &self.eval;
        if e.thresholds.is_empty() || e.thresholds.iter().any(|t| !(*t >= 0.0)) {
            return cfg_err("eval.thresholds must be a non-empty list of non-negative values".into());
        }
        if e.scales.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return cfg_err("eval.scales must lie in (0, 1]".into());
        }
        Ok(())
    }
}

/// Splits `--a.b value` / `--a.b=value` pairs out of an argument list.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>)> {
    let mut rest = Vec::new();
    let mut over = Vec::new();
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        let Some(body) = a.strip_prefix("--").filter(|b| b.split('=').next().is_some_and(|k| k.contains('.'))) else {
            rest.push(a);
            continue;
        };
        if let Some((k, v)) = body.split_once('=') {
            over.push((k.to_string(), v.to_string()));
        } else {
            let v = it.next().ok_or_else(|| CliError::Config(format!("--{body} needs a value")))?;
            over.push((body.to_string(), v));
        }
    }
    Ok((rest, over))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_round_trip() {
        let c = RunConfig::default();
        let back = RunConfig::from_parts(Some(&c.to_toml()), &[]).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn partial_sections_and_overrides() {
        let text = "seed = 9\n[pipeline]\nbeta = 3.0\n[pipeline.refine.ransac]\niterations = 50\n";
        let over = vec![("pipeline.lambda".to_string(), "0.5".to_string()), ("gaze.model".into(), "poly".into())];
        let c = RunConfig::from_parts(Some(text), &over).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.pipeline.beta, 3.0);
        assert_eq!(c.pipeline.lambda, 0.5);
        assert_eq!(c.pipeline.refine.ransac.iterations, 50);
        assert_eq!(c.pipeline.refine.ransac.dist_thresh, RunConfig::default().pipeline.refine.ransac.dist_thresh);
        assert_eq!(c.gaze.model, ModelKind::Poly);
        let s = RunConfig::from_parts(None, &[("gaze.sigma_k".into(), "2.5".into())]).unwrap();
        assert_eq!(s.gaze.sigma_k, Some(2.5));
    }

    #[test]
    fn rejects_bad_values_and_keys() {
        assert!(RunConfig::from_parts(None, &[("pipeline.lambda".into(), "1.5".into())]).is_err());
        assert!(RunConfig::from_parts(None, &[("pipeline.bogus".into(), "1".into())]).is_err());
        assert!(RunConfig::from_parts(None, &[("eval.scales".into(), "[1.2]".into())]).is_err());
        assert!(RunConfig::from_parts(Some("[pipeline\n"), &[]).is_err());
    }

    #[test]
    fn override_extraction() {
        let args = ["eyeloc", "locate", "--pipeline.beta", "2", "--seed", "3", "--eval.thresholds=[0.1]"];
        let (rest, over) = extract_overrides(args.iter().map(|s| s.to_string()).collect()).unwrap();
        assert_eq!(rest, ["eyeloc", "locate", "--seed", "3"]);
        assert_eq!(over, [("pipeline.beta".to_string(), "2".to_string()), ("eval.thresholds".into(), "[0.1]".into())]);
        assert!(extract_overrides(vec!["--a.b".into()]).is_err());
    }
}
