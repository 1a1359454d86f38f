use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use refrabill_core::analysis::{
    heteroclinic_realize, saddle_spectrum, threshold_scan, HeteroclinicReport, SaddleReport, ThresholdReport,
};
use refrabill_core::dynamics::{trace, write_trajectory_csv, DynamicsOptions, SurfaceState};
use refrabill_core::export::{format_float, to_json_string};
use refrabill_core::jacobi::Mode;
use refrabill_core::shooting::{miranda_check, realize_fixed_ends, realize_periodic, ShootingError};
use refrabill_core::words::{build_interval_system, IntervalSystem, Word, WordKind};
use refrabill_core::{BoundaryCurve, CentralConfiguration};
use serde::Serialize;

use crate::config::ResolvedConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Code {
    Ok = 0,
    Config = 1,
    Inadmissible = 2,
    Solver = 3,
    Dynamics = 4,
}

pub struct Outcome {
    pub code: Code,
    pub message: Option<String>,
}

impl Outcome {
    fn ok() -> Self {
        Self { code: Code::Ok, message: None }
    }

    fn fail(code: Code, message: impl Into<String>) -> Self {
        Self { code, message: Some(message.into()) }
    }
}

#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a ResolvedConfig,
    /// Companion files written next to this report.
    files: Vec<String>,
    result: T,
}

fn write_report<T: Serialize>(cfg: &ResolvedConfig, name: &str, files: &[&str], result: T) -> Result<PathBuf, String> {
    fs::create_dir_all(&cfg.output).map_err(|e| format!("cannot create {}: {e}", cfg.output.display()))?;
    let path = cfg.output.join(name);
    let report = Report { config: cfg, files: files.iter().map(|s| s.to_string()).collect(), result };
    let text = to_json_string(&report).map_err(|e| e.to_string())?;
    fs::write(&path, text).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    Ok(path)
}

fn csv_writer(cfg: &ResolvedConfig, name: &str) -> Result<BufWriter<File>, String> {
    fs::create_dir_all(&cfg.output).map_err(|e| e.to_string())?;
    let path = cfg.output.join(name);
    File::create(&path).map(BufWriter::new).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

macro_rules! try_or {
    ($e:expr, $code:expr) => {
        match $e {
            Ok(v) => v,
            Err(err) => return Outcome::fail($code, err.to_string()),
        }
    };
}

fn curve(cfg: &ResolvedConfig) -> Result<BoundaryCurve, Outcome> {
    let c = BoundaryCurve::new(cfg.curve.clone()).map_err(|e| Outcome::fail(Code::Config, e.to_string()))?;
    cfg.params.check_curve(&c).map_err(|e| Outcome::fail(Code::Config, e.to_string()))?;
    Ok(c)
}

fn system(cfg: &ResolvedConfig, c: &BoundaryCurve) -> Result<(Vec<CentralConfiguration>, IntervalSystem), Outcome> {
    let ccs = c.find_central_configurations();
    let s = build_interval_system(c, &ccs, cfg.half_width).map_err(|e| Outcome::fail(Code::Inadmissible, e.to_string()))?;
    Ok((ccs, s))
}

#[derive(Serialize)]
struct CcsResult<'a> {
    configurations: &'a [CentralConfiguration],
    admissible: bool,
    reason: Option<String>,
    system: Option<&'a IntervalSystem>,
}

pub fn ccs(cfg: &ResolvedConfig) -> Outcome {
    let c = match BoundaryCurve::new(cfg.curve.clone()) {
        Ok(c) => c,
        Err(e) => return Outcome::fail(Code::Config, e.to_string()),
    };
    let ccs = c.find_central_configurations();
    println!("{:>3} {:>22} {:>11} {:>22} {:>4}", "#", "xi_bar", "kind", "r''", "lsc");
    for (k, cc) in ccs.iter().enumerate() {
        println!(
            "{:>3} {:>22} {:>11} {:>22} {:>4}",
            k + 1,
            format_float(cc.xi_bar),
            format!("{:?}", cc.kind),
            format_float(cc.second_derivative),
            if cc.lsc_ok { "yes" } else { "no" }
        );
        if let Some(p) = cc.plateau {
            println!("    plateau of r' = 0 on [{}, {}]", format_float(p.lo), format_float(p.hi));
        }
    }
    let built = build_interval_system(&c, &ccs, cfg.half_width);
    if let Ok(s) = &built {
        for i in 1..=s.len() {
            println!("NA({i}) = {:?}", s.na(i));
        }
    }
    let result = CcsResult {
        configurations: &ccs,
        admissible: built.is_ok(),
        reason: built.as_ref().err().map(|e| e.to_string()),
        system: built.as_ref().ok(),
    };
    try_or!(write_report(cfg, "ccs.json", &[], result), Code::Config);
    match built {
        Ok(_) => Outcome::ok(),
        Err(e) => Outcome::fail(Code::Inadmissible, e.to_string()),
    }
}

#[derive(Serialize)]
struct RealizeResult<'a, T: Serialize, M: Serialize> {
    concatenation: &'a T,
    realized: bool,
    radial_arcs: usize,
    symmetry: refrabill_core::words::SymmetryReport,
    miranda: M,
}

pub fn realize(cfg: &ResolvedConfig) -> Outcome {
    let c = match curve(cfg) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let (_, sys) = match system(cfg, &c) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let Some(text) = cfg.run.words.first() else {
        return Outcome::fail(Code::Config, "realize needs a word (--word or run.words)");
    };
    let kind = if cfg.run.mode == Mode::Periodic { WordKind::Periodic } else { WordKind::Finite };
    let word = try_or!(Word::parse(text, kind), Code::Config);
    if !word.is_admissible(&sys) {
        return Outcome::fail(Code::Config, format!("word {word} is not admissible for this interval system"));
    }
    let ends = match cfg.run.mode {
        Mode::Periodic => None,
        Mode::FixedEnds => Some(match cfg.run.endpoints {
            Some([a, b]) => (a, b),
            None => (sys.center(word.symbols[0]), sys.center(*word.symbols.last().unwrap())),
        }),
    };
    let miranda = miranda_check(&c, &cfg.params, &sys, &word, cfg.run.mode, ends);
    let result = match ends {
        None => realize_periodic(&c, &cfg.params, &sys, &word),
        Some((a, b)) => realize_fixed_ends(&c, &cfg.params, &sys, &word, a, b),
    };
    match result {
        Ok(conc) => {
            let per_arc = cfg.run.samples_per_arc;
            let samples = conc.samples(per_arc);
            let w = try_or!(csv_writer(cfg, "trajectory.csv"), Code::Config);
            try_or!(write_trajectory_csv(&samples, per_arc, w), Code::Config);
            let realized = conc.is_realized();
            let report = RealizeResult {
                concatenation: &conc,
                realized,
                radial_arcs: conc.radial_arcs(),
                symmetry: word.symmetry(),
                miranda: miranda.as_ref().ok(),
            };
            try_or!(write_report(cfg, "realization.json", &["trajectory.csv"], report), Code::Config);
            println!(
                "word {} realized: max Snell residual {}, length {}, collisions {:?}",
                word,
                format_float(conc.max_snell_residual),
                format_float(conc.total_length),
                conc.collisions
            );
            if realized {
                Outcome::ok()
            } else {
                Outcome::fail(Code::Solver, "residual check failed")
            }
        }
        Err(e) => {
            #[derive(Serialize)]
            struct Diagnostics {
                error: String,
                best_nodes: Option<Vec<f64>>,
                best_gradient: Option<f64>,
                miranda_pass: Option<bool>,
            }
            let (best_nodes, best_gradient) = match &e {
                ShootingError::NoConvergence { best_gradient, best_nodes, .. } => (Some(best_nodes.clone()), Some(*best_gradient)),
                _ => (None, None),
            };
            let d = Diagnostics {
                error: e.to_string(),
                best_nodes,
                best_gradient,
                miranda_pass: miranda.as_ref().ok().map(|m| m.pass),
            };
            try_or!(write_report(cfg, "diagnostics.json", &[], d), Code::Config);
            Outcome::fail(Code::Solver, e.to_string())
        }
    }
}

pub fn simulate(cfg: &ResolvedConfig) -> Outcome {
    let c = match curve(cfg) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let (_, sys) = match system(cfg, &c) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let Some(xi) = cfg.run.xi else {
        return Outcome::fail(Code::Config, "simulate needs xi");
    };
    let state = match cfg.run.velocity {
        Some([vx, vy]) => try_or!(
            SurfaceState::checked(&c, &cfg.params, xi, refrabill_core::Vec2::new(vx, vy)),
            Code::Config
        ),
        None => SurfaceState::outward_at_angle(&c, &cfg.params, xi, cfg.run.alpha.unwrap_or(0.0)),
    };
    let opts = DynamicsOptions { permissive: cfg.run.permissive };
    let t = trace(&c, &cfg.params, &sys, &state, cfg.run.steps, cfg.run.backward, &opts);
    let per_arc = cfg.run.samples_per_arc;
    let w = try_or!(csv_writer(cfg, "trajectory.csv"), Code::Config);
    try_or!(write_trajectory_csv(&t.samples(per_arc), per_arc, w), Code::Config);
    try_or!(write_report(cfg, "simulate.json", &["trajectory.csv"], &t), Code::Config);
    let window: Vec<String> = t.window.iter().map(|s| s.map_or("?".to_string(), |v| v.to_string())).collect();
    println!("window (offset {}): {}", t.offset, window.join(","));
    if let Some(f) = t.forward_failure.as_ref().or(t.backward_failure.as_ref()) {
        return Outcome::fail(Code::Dynamics, format!("terminated at step {}: {}", f.step, f.error));
    }
    Outcome::ok()
}

pub fn scan(cfg: &ResolvedConfig) -> Outcome {
    let c = match curve(cfg) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let (_, sys) = match system(cfg, &c) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let words: Vec<Word> = if cfg.run.words.is_empty() {
        (1..=cfg.run.scan_max_length).flat_map(|n| sys.periodic_words(n)).collect()
    } else {
        let mut out = Vec::new();
        for text in &cfg.run.words {
            let w = try_or!(Word::parse(text, WordKind::Periodic), Code::Config);
            if !w.is_admissible(&sys) {
                return Outcome::fail(Code::Config, format!("word {w} is not admissible"));
            }
            out.push(w);
        }
        out
    };
    let report: ThresholdReport = threshold_scan(&c, &cfg.params, &sys, &words, &cfg.h_grid);
    let mut w = csv::Writer::from_writer(try_or!(csv_writer(cfg, "scan.csv"), Code::Config));
    try_or!(w.write_record(["h", "criterion", "pass"]), Code::Config);
    for r in &report.rows {
        try_or!(w.write_record([format_float(r.h), r.criterion.name().to_string(), r.pass.to_string()]), Code::Config);
    }
    try_or!(w.flush(), Code::Config);
    try_or!(write_report(cfg, "scan.json", &["scan.csv"], &report), Code::Config);
    for t in &report.thresholds {
        println!(
            "{:<12} threshold {:>24}  violations {}",
            t.criterion.name(),
            t.threshold.map_or("none".to_string(), format_float),
            t.monotonicity_violations.len()
        );
    }
    Outcome::ok()
}

pub fn saddle(cfg: &ResolvedConfig) -> Outcome {
    let c = match curve(cfg) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let (_, sys) = match system(cfg, &c) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let indices: Vec<usize> = match cfg.run.cc {
        Some(k) => vec![k],
        None => (1..=sys.len()).collect(),
    };
    let mut reports: Vec<SaddleReport> = Vec::new();
    for k in indices {
        let r = try_or!(saddle_spectrum(&c, &cfg.params, &sys, k), Code::Solver);
        println!(
            "cc {k}: {:?}, eigenvalues {:?}, det {}",
            r.classification,
            r.eigenvalues.map(|e| [format_float(e[0]), format_float(e[1])]),
            format_float(r.determinant)
        );
        reports.push(r);
    }
    try_or!(write_report(cfg, "saddle.json", &[], &reports), Code::Config);
    Outcome::ok()
}

pub fn heteroclinic(cfg: &ResolvedConfig) -> Outcome {
    let c = match curve(cfg) {
        Ok(c) => c,
        Err(o) => return o,
    };
    let (_, sys) = match system(cfg, &c) {
        Ok(s) => s,
        Err(o) => return o,
    };
    let mut bridges = Vec::new();
    for b in &cfg.run.bridges {
        if b.trim().is_empty() {
            bridges.push(Vec::new());
        } else {
            bridges.push(try_or!(Word::parse(b, WordKind::Finite), Code::Config).symbols);
        }
    }
    let saddle = saddle_spectrum(&c, &cfg.params, &sys, cfg.run.to).ok();
    let mut reports: Vec<HeteroclinicReport> = Vec::new();
    let mut failure = None;
    println!("{:>8} {:>4} {:>24} {:>24}", "bridge", "pad", "last free distance", "trailing rate");
    for bridge in &bridges {
        for &pad in &cfg.run.pad {
            match heteroclinic_realize(&c, &cfg.params, &sys, cfg.run.from, cfg.run.to, pad, bridge) {
                Ok(r) => {
                    let last = r.trailing_distances.iter().rev().nth(1).copied();
                    println!(
                        "{:>8} {:>4} {:>24} {:>24}",
                        format!("{bridge:?}"),
                        pad,
                        last.map_or("-".into(), format_float),
                        r.trailing_rate.map_or("-".into(), format_float)
                    );
                    reports.push(r);
                }
                Err(e) => {
                    println!("{:>8} {:>4} failed: {e}", format!("{bridge:?}"), pad);
                    failure.get_or_insert(e.to_string());
                }
            }
        }
    }
    if let Some(r) = saddle.as_ref().and_then(|s| s.lambda()) {
        println!("1/|lambda| at configuration {}: {}", cfg.run.to, format_float(1.0 / r.abs()));
    }
    #[derive(Serialize)]
    struct Out<'a> {
        saddle: Option<SaddleReport>,
        realizations: &'a [HeteroclinicReport],
    }
    try_or!(write_report(cfg, "heteroclinic.json", &[], Out { saddle, realizations: &reports }), Code::Config);
    match failure {
        Some(e) => Outcome::fail(Code::Solver, e),
        None => Outcome::ok(),
    }
}
