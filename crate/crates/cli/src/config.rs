//! Run configuration: a TOML file with `[curve]`, `[params]` and `[run]`
//! sections, overridden by command-line flags.

use std::path::{Path, PathBuf};

use refrabill_core::jacobi::Mode;
use refrabill_core::{BilliardParams, CurveSpec};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub curve: Option<CurveSpec>,
    #[serde(default)]
    pub params: ParamsSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub omega2: Option<f64>,
    pub mu: Option<f64>,
    #[serde(rename = "calE")]
    pub cal_e: Option<f64>,
    pub h: Option<f64>,
    pub h_grid: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub half_width: Option<f64>,
    pub words: Option<Vec<String>>,
    pub mode: Option<Mode>,
    pub endpoints: Option<[f64; 2]>,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub seeds: Option<usize>,
    pub samples_per_arc: Option<usize>,
    pub xi: Option<f64>,
    pub alpha: Option<f64>,
    pub velocity: Option<[f64; 2]>,
    pub steps: Option<usize>,
    pub backward: Option<usize>,
    pub permissive: Option<bool>,
    pub cc: Option<usize>,
    pub from: Option<usize>,
    pub to: Option<usize>,
    pub pad: Option<Vec<usize>>,
    pub bridges: Option<Vec<String>>,
    pub scan_max_length: Option<usize>,
}

/// Fully resolved configuration, embedded in every JSON report.
#[derive(Debug, Clone, Serialize)]
pub struct ResolvedConfig {
    pub command: String,
    pub curve: CurveSpec,
    pub params: BilliardParams,
    pub h_grid: Vec<f64>,
    pub half_width: f64,
    pub output: PathBuf,
    pub run: ResolvedRun,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolvedRun {
    pub words: Vec<String>,
    pub mode: Mode,
    pub endpoints: Option<[f64; 2]>,
    pub seed: u64,
    pub seeds: usize,
    pub samples_per_arc: usize,
    pub xi: Option<f64>,
    pub alpha: Option<f64>,
    pub velocity: Option<[f64; 2]>,
    pub steps: usize,
    pub backward: usize,
    pub permissive: bool,
    pub cc: Option<usize>,
    pub from: usize,
    pub to: usize,
    pub pad: Vec<usize>,
    pub bridges: Vec<String>,
    pub scan_max_length: usize,
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, String> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))
}

pub fn default_h_grid() -> Vec<f64> {
    refrabill_core::analysis::log_grid(1.0, 1000.0, 8)
}

impl ResolvedConfig {
    pub fn resolve(command: &str, file: FileConfig) -> Result<Self, String> {
        let p = file.params;
        let base = BilliardParams::default();
        let params = BilliardParams {
            omega2: p.omega2.unwrap_or(base.omega2),
            mu: p.mu.unwrap_or(base.mu),
            cal_e: p.cal_e.unwrap_or(base.cal_e),
            h: p.h.unwrap_or(base.h),
        };
        params.validate().map_err(|e| e.to_string())?;
        let h_grid = p.h_grid.unwrap_or_else(default_h_grid);
        if h_grid.is_empty() || h_grid.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err("h_grid must hold positive values".into());
        }
        let r = file.run;
        let half_width = r.half_width.unwrap_or(refrabill_core::words::DEFAULT_HALF_WIDTH);
        if !(half_width > 0.0 && half_width < 0.25) {
            return Err(format!("half_width {half_width} must lie in (0, 0.25)"));
        }
        let curve = file.curve.unwrap_or_else(|| CurveSpec::ellipse(1.5, 1.0));
        let run = ResolvedRun {
            words: r.words.unwrap_or_default(),
            mode: r.mode.unwrap_or(Mode::Periodic),
            endpoints: r.endpoints,
            seed: r.seed.unwrap_or(0),
            seeds: r.seeds.unwrap_or(10),
            samples_per_arc: r.samples_per_arc.unwrap_or(64).max(2),
            xi: r.xi,
            alpha: r.alpha,
            velocity: r.velocity,
            steps: r.steps.unwrap_or(10),
            backward: r.backward.unwrap_or(0),
            permissive: r.permissive.unwrap_or(false),
            cc: r.cc,
            from: r.from.unwrap_or(1),
            to: r.to.unwrap_or(2),
            pad: r.pad.unwrap_or_else(|| vec![2, 4, 6]),
            bridges: r.bridges.unwrap_or_else(|| vec![String::new()]),
            scan_max_length: r.scan_max_length.unwrap_or(2),
        };
        Ok(Self {
            command: command.to_string(),
            curve,
            params,
            h_grid,
            half_width,
            output: r.output.unwrap_or_else(|| PathBuf::from("refrabill-out")),
            run,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_parse() {
        let f: FileConfig = toml::from_str(
            r#"
            [curve]
            family = "ellipse"
            a = 2.0
            b = 1.0
            [params]
            h = 50.0
            calE = 3.0
            [run]
            words = ["1,2"]
            mode = "fixed_ends"
            "#,
        )
        .unwrap();
        let r = ResolvedConfig::resolve("realize", f).unwrap();
        assert_eq!(r.params.h, 50.0);
        assert_eq!(r.params.cal_e, 3.0);
        assert_eq!(r.run.mode, Mode::FixedEnds);
        assert_eq!(r.curve, CurveSpec::ellipse(2.0, 1.0));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(toml::from_str::<FileConfig>("[params]\nhh = 1.0\n").is_err());
        assert!(toml::from_str::<FileConfig>("[other]\nx = 1\n").is_err());
        assert!(toml::from_str::<FileConfig>("[curve]\nfamily = \"ellipse\"\na = 1.0\nb = 1.0\nc = 2.0\n").is_err());
    }
}
