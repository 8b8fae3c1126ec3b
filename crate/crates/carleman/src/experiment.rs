//! Config-driven batch experiments: parse a TOML config, run one of the
//! experiment kinds, emit CSV data + JSON summaries, and evaluate the
//! config's assertion block.

use crate::corpus;
use crate::error::{Error, Result};
use crate::extension::{fit_decay, residual_sups, ExtensionOperator, GrowthMode};
use crate::fbi::decay::{ClassifierParams, DecayClass, EnvelopeNorm};
use crate::fbi::inversion::{default_eps_ladder, inversion, InversionOptions};
use crate::fbi::scan::{default_ladder, wavefront_scan};
use crate::fbi::{distribution_by_name, distribution_catalog, ChiCutoff, Distribution, FbiOptions};
use crate::jets::{class_constant_fit, VectorFrame};
use crate::manifold::{chart_catalog, check_well_positioned, MaximallyRealChart};
use crate::nonlinear::{admit, system_catalog, wf_inclusion_experiment, ExactSolution, NonlinearSystem};
use crate::sequence::{validate, AssociatedEvaluator, RegularSequence};
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Seq,
    Extend,
    Fbi,
    Wf,
    Invert,
    Nonlinear,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SequenceSpec {
    Gevrey { s: f64, k_max: Option<usize> },
    Table { log_m: Vec<f64> },
}

impl SequenceSpec {
    pub fn build(&self) -> Result<RegularSequence> {
        match self {
            SequenceSpec::Gevrey { s, k_max } => {
                RegularSequence::gevrey(*s, k_max.unwrap_or(crate::sequence::DEFAULT_K_MAX))
            }
            SequenceSpec::Table { log_m } => RegularSequence::from_log_table(log_m.clone()),
        }
    }
}

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<String>,
    pub sequence: Option<SequenceSpec>,
    /// corpus member (function, distribution or system, depending on kind)
    #[serde(default)]
    pub corpus: Option<String>,
    /// chart name + box half-width
    #[serde(default)]
    pub chart: Option<String>,
    #[serde(default)]
    pub chart_half_width: Option<f64>,
    /// scan/extension controls, all optional with paper-faithful defaults
    #[serde(default)]
    pub eps: Option<f64>,
    #[serde(default)]
    pub kappa: Option<u32>,
    #[serde(default)]
    pub shells: Option<usize>,
    #[serde(default)]
    pub k_test: Option<usize>,
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub directions: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub ladder: Option<Vec<f64>>,
    #[serde(default)]
    pub chi_r1: Option<f64>,
    #[serde(default)]
    pub chi_r2: Option<f64>,
    #[serde(default)]
    pub assertions: Option<Assertions>,
}

#[derive(Debug, Clone, Default, Deserialize)]
pub struct Assertions {
    /// seq: every validation condition passes
    pub all_pass: Option<bool>,
    /// extend: residual envelope conformance
    pub conformant: Option<bool>,
    pub max_q: Option<f64>,
    /// fbi / wf
    pub regular_everywhere: Option<bool>,
    pub flagged_count: Option<usize>,
    /// invert
    pub max_rel_error: Option<f64>,
    /// nonlinear
    pub inclusion_pass: Option<bool>,
}

#[derive(Debug, Serialize)]
pub struct Outcome {
    pub kind: String,
    pub passed: bool,
    pub failures: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{e}")))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut f = std::fs::File::create(&path)?;
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Config(format!("serialize {name}: {e}")))?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(path)
}

fn chi_from(cfg: &ExperimentConfig) -> ChiCutoff {
    ChiCutoff {
        r1: cfg.chi_r1.unwrap_or(0.45),
        r2: cfg.chi_r2.unwrap_or(0.8),
    }
}

fn seq_from(cfg: &ExperimentConfig) -> Result<RegularSequence> {
    cfg.sequence
        .as_ref()
        .ok_or_else(|| Error::Config("missing [sequence] section".into()))?
        .build()
}

fn chart_from(cfg: &ExperimentConfig) -> Result<MaximallyRealChart> {
    let name = cfg.chart.as_deref().unwrap_or("chart_flat1");
    let hw = cfg.chart_half_width.unwrap_or(1.2);
    MaximallyRealChart::by_name(name, hw)
        .ok_or_else(|| Error::Config(format!("unknown chart `{name}`")))
}

fn smooth_corpus(cfg: &ExperimentConfig) -> Result<crate::jets::JetFunction> {
    let name = cfg
        .corpus
        .as_deref()
        .ok_or_else(|| Error::Config("missing `corpus` entry".into()))?;
    corpus::by_name(name).ok_or_else(|| Error::Config(format!("unknown corpus function `{name}`")))
}

fn distribution_corpus(cfg: &ExperimentConfig) -> Result<Distribution> {
    let name = cfg
        .corpus
        .as_deref()
        .ok_or_else(|| Error::Config("missing `corpus` entry".into()))?;
    distribution_by_name(name)
        .ok_or_else(|| Error::Config(format!("unknown corpus distribution `{name}`")))
}

/// Run an experiment; artifacts land in `out_dir`. Deterministic given
/// (config, seed): reports are bytewise reproducible.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<Outcome> {
    std::fs::create_dir_all(out_dir)?;
    let mut failures = Vec::new();
    let mut artifacts = Vec::new();
    let asserts = cfg.assertions.clone().unwrap_or_default();

    match cfg.kind {
        ExperimentKind::Seq => {
            let seq = seq_from(cfg)?;
            let report = validate(&seq, seq.k_max)?;
            let ev = AssociatedEvaluator::new(&seq);
            let mut wtr = csv::Writer::from_path(out_dir.join("associated.csv"))
                .map_err(|e| Error::Config(e.to_string()))?;
            wtr.write_record(["r", "h", "h1", "N"]).ok();
            for i in 0..100 {
                let r = 10f64.powf(-3.0 + 3.3 * i as f64 / 99.0);
                wtr.write_record([
                    format!("{r:.12e}"),
                    format!("{:.12e}", ev.h_value(r)?),
                    format!("{:.12e}", ev.h1_value(r)?),
                    format!("{}", ev.big_n(r)?),
                ])
                .ok();
            }
            wtr.flush().ok();
            artifacts.push(out_dir.join("associated.csv"));
            artifacts.push(write_json(out_dir, "validation.json", &report)?);
            if asserts.all_pass == Some(true) && !report.all_pass() {
                failures.push("sequence validation did not pass all conditions".into());
            }
        }
        ExperimentKind::Extend => {
            let seq = seq_from(cfg)?;
            let f = smooth_corpus(cfg)?;
            let eps = cfg.eps.unwrap_or(0.1);
            let mode = match cfg.kappa {
                Some(k) => GrowthMode::FixedKappa(k),
                None => GrowthMode::Moderate,
            };
            let frame = VectorFrame::coordinate(f.dim);
            let grid: Vec<Vec<f64>> = cfg
                .points
                .clone()
                .unwrap_or_else(|| vec![vec![-0.3], vec![0.0], vec![0.3]]);
            let fit = class_constant_fit(&f, &frame, &seq, 8.min(f.max_order), &grid)?;
            let v_box = vec![(-0.5, 0.5); f.dim];
            let op = ExtensionOperator::new(&seq, frame, f, eps, fit.c, mode, v_box)?;
            let dirs: Vec<Vec<f64>> = cfg
                .directions
                .clone()
                .unwrap_or_else(|| vec![vec![1.0], vec![-1.0]]);
            let shells = op.shells(cfg.shells.unwrap_or(8));
            let sups = residual_sups(&op, &grid, &dirs, &shells)?;
            let k_test = cfg.k_test.unwrap_or(8);
            let report = fit_decay(&sups, &seq, k_test)?;
            let field = crate::extension::assemble_field(&op, &grid, &dirs, shells.len())?;
            let mut wtr = csv::Writer::from_path(out_dir.join("field.csv"))
                .map_err(|e| Error::Config(e.to_string()))?;
            wtr.write_record(["u", "re_v", "im_v", "re_f", "im_f"]).ok();
            for s in &field.samples {
                wtr.write_record([
                    format!("{:.12e}", s.u[0]),
                    format!("{:.12e}", s.v[0]),
                    "0".into(),
                    format!("{:.12e}", s.value.re),
                    format!("{:.12e}", s.value.im),
                ])
                .ok();
            }
            wtr.flush().ok();
            artifacts.push(out_dir.join("field.csv"));
            artifacts.push(write_json(out_dir, "decay_report.json", &report)?);
            if asserts.conformant == Some(true) && !report.conformant {
                failures.push("extension residuals do not conform to the envelope".into());
            }
            if let Some(max_q) = asserts.max_q {
                if report.q > max_q {
                    failures.push(format!("fitted Q = {} exceeds {max_q}", report.q));
                }
            }
        }
        ExperimentKind::Fbi | ExperimentKind::Wf => {
            let seq = seq_from(cfg)?;
            let u = distribution_corpus(cfg)?;
            let chart = chart_from(cfg)?;
            let points = cfg.points.clone().unwrap_or_else(|| vec![vec![0.0]]);
            let dirs = cfg
                .directions
                .clone()
                .unwrap_or_else(|| vec![vec![1.0], vec![-1.0]]);
            let ladder = cfg.ladder.clone().unwrap_or_else(default_ladder);
            let opts = FbiOptions {
                chi: chi_from(cfg),
                ..Default::default()
            };
            let report = wavefront_scan(
                &u,
                &chart,
                &points,
                &dirs,
                &seq,
                &ladder,
                &opts,
                &ClassifierParams::default(),
            )?;
            let mut wtr = csv::Writer::from_path(out_dir.join("samples.csv"))
                .map_err(|e| Error::Config(e.to_string()))?;
            wtr.write_record(["x", "direction", "zeta_abs", "re_f", "im_f"]).ok();
            for (pi, p) in report.samples.points.iter().enumerate() {
                for (di, d) in report.samples.dirs.iter().enumerate() {
                    for (ri, rung) in report.samples.ladder.iter().enumerate() {
                        let v = report.samples.values[pi][di][ri];
                        wtr.write_record([
                            format!("{:.6e}", p[0]),
                            format!("{:.3}", d[0]),
                            format!("{rung:.6e}"),
                            format!("{:.12e}", v.re),
                            format!("{:.12e}", v.im),
                        ])
                        .ok();
                    }
                }
            }
            wtr.flush().ok();
            artifacts.push(out_dir.join("samples.csv"));
            #[derive(Serialize)]
            struct ScanSummary {
                norm: EnvelopeNorm,
                flagged: Vec<(usize, usize)>,
                classes: Vec<Vec<String>>,
            }
            let classes = report
                .classification
                .per_cell
                .iter()
                .map(|row| {
                    row.iter()
                        .map(|cell| match cell.class {
                            DecayClass::MRegular { a } => format!("m-regular(A={a:.3})"),
                            DecayClass::Exponential { rate } => {
                                format!("exponential(rate={rate:.3})")
                            }
                            DecayClass::Irregular => "none".into(),
                        })
                        .collect()
                })
                .collect();
            let summary = ScanSummary {
                norm: report.classification.norm,
                flagged: report.flagged.clone(),
                classes,
            };
            artifacts.push(write_json(out_dir, "classification.json", &summary)?);
            if asserts.regular_everywhere == Some(true) && !report.flagged.is_empty() {
                failures.push(format!("directions flagged: {:?}", report.flagged));
            }
            if let Some(count) = asserts.flagged_count {
                if report.flagged.len() != count {
                    failures.push(format!(
                        "expected {count} flagged directions, found {}",
                        report.flagged.len()
                    ));
                }
            }
        }
        ExperimentKind::Invert => {
            let u = distribution_corpus(cfg)?;
            let chart = chart_from(cfg)?;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
            let cert = check_well_positioned(&chart, 1.0, 2000, &mut rng)?;
            let opts = InversionOptions {
                chi: chi_from(cfg),
                fbi: FbiOptions {
                    chi: chi_from(cfg),
                    ..Default::default()
                },
                ..Default::default()
            };
            let ladder = cfg
                .ladder
                .clone()
                .unwrap_or_else(|| default_eps_ladder(0.5));
            let points = cfg.points.clone().unwrap_or_else(|| vec![vec![0.0]]);
            #[derive(Serialize)]
            struct InvRow {
                x: f64,
                reconstructed_re: f64,
                reconstructed_im: f64,
                expected: f64,
                rel_error: f64,
            }
            let mut rows = Vec::new();
            let mut worst: f64 = 0.0;
            let sup = match &u {
                Distribution::Smooth(f) => {
                    let mut s: f64 = 0.0;
                    for i in 0..=50 {
                        let x = -1.0 + 2.0 * i as f64 / 50.0;
                        s = s.max(f.eval(&[x]).norm());
                    }
                    s
                }
                _ => 1.0,
            };
            for p in &points {
                let got = inversion(&u, &chart, p, &ladder, &cert, &opts)?;
                let expected = match &u {
                    Distribution::Smooth(f) => (f.eval(p) * opts.chi.value(p)).re,
                    _ => 0.0,
                };
                let rel = (got.re - expected).abs() / sup.max(1e-300);
                worst = worst.max(rel);
                rows.push(InvRow {
                    x: p[0],
                    reconstructed_re: got.re,
                    reconstructed_im: got.im,
                    expected,
                    rel_error: rel,
                });
            }
            artifacts.push(write_json(out_dir, "inversion.json", &rows)?);
            if let Some(tol) = asserts.max_rel_error {
                if worst > tol {
                    failures.push(format!("reconstruction error {worst:.3e} exceeds {tol}"));
                }
            }
        }
        ExperimentKind::Nonlinear => {
            let seq = seq_from(cfg)?;
            let name = cfg
                .corpus
                .as_deref()
                .ok_or_else(|| Error::Config("missing `corpus` (system name)".into()))?;
            let system = NonlinearSystem::by_name(name)
                .ok_or_else(|| Error::Config(format!("unknown system `{name}`")))?;
            let solution = ExactSolution::for_system(&system);
            let grid: Vec<(Vec<f64>, Vec<f64>)> = (-2..=2)
                .flat_map(|i| {
                    (-2..=2).map(move |j| (vec![0.15 * i as f64], vec![0.15 * j as f64]))
                })
                .collect();
            let sample = admit(&system, &solution, &grid)?;
            let points = cfg.points.clone().unwrap_or_else(|| vec![vec![0.0, 0.0]]);
            let dirs = cfg.directions.clone().unwrap_or_else(|| {
                (0..16)
                    .map(|k| {
                        let th = 2.0 * std::f64::consts::PI * k as f64 / 16.0;
                        vec![th.cos(), th.sin()]
                    })
                    .collect()
            });
            let opts = FbiOptions {
                chi: chi_from(cfg),
                ..Default::default()
            };
            let report = wf_inclusion_experiment(&system, &sample, &points, &dirs, &seq, &opts, 0.05)?;
            artifacts.push(write_json(out_dir, "inclusion.json", &report)?);
            if asserts.inclusion_pass == Some(true) && !report.pass {
                failures.push("a flagged direction is not characteristic".into());
            }
        }
    }

    let passed = failures.is_empty();
    if !passed {
        #[derive(Serialize)]
        struct Manifest<'a> {
            failures: &'a [String],
        }
        artifacts.push(write_json(
            out_dir,
            "failure_manifest.json",
            &Manifest {
                failures: &failures,
            },
        )?);
    }
    Ok(Outcome {
        kind: format!("{:?}", cfg.kind).to_lowercase(),
        passed,
        failures,
        artifacts,
    })
}

/// Stable, sorted corpus table: (name, category, dim, exact-jet order).
pub fn list_corpus(filter: &str) -> Vec<(String, String, usize, String)> {
    let mut rows: Vec<(String, String, usize, String)> = Vec::new();
    for (name, dim, order) in corpus::function_catalog() {
        let order = if order > 900 {
            "any".to_string()
        } else {
            order.to_string()
        };
        rows.push((name.to_string(), "function".into(), dim, order));
    }
    for (name, dim) in distribution_catalog() {
        rows.push((name.to_string(), "distribution".into(), dim, "pairing".into()));
    }
    for (name, m) in chart_catalog() {
        rows.push((name.to_string(), "chart".into(), m, "3".into()));
    }
    for (name, d, n) in system_catalog() {
        rows.push((name.to_string(), "system".into(), d + n, format!("d={d},n={n}")));
    }
    rows.sort();
    rows.retain(|(name, cat, _, _)| filter.is_empty() || name.contains(filter) || cat.contains(filter));
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_listing_is_stable_and_filterable() {
        let all = list_corpus("");
        let names: Vec<&str> = all.iter().map(|r| r.0.as_str()).collect();
        for expected in ["gevrey_bump", "heaviside", "chart_quadratic", "sys_burgers"] {
            assert!(names.contains(&expected), "missing {expected}");
        }
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
        let charts = list_corpus("chart");
        assert!(charts.iter().all(|r| r.1 == "chart"));
        assert_eq!(charts.len(), 4);
    }

    #[test]
    fn seq_config_runs_and_passes() {
        let cfg: ExperimentConfig = toml::from_str(
            r#"
            kind = "seq"
            [sequence]
            kind = "gevrey"
            s = 2.0
            k_max = 60
            [assertions]
            all_pass = true
            "#,
        )
        .unwrap();
        let dir = std::env::temp_dir().join("carleman_seq_test");
        let out = run(&cfg, &dir).unwrap();
        assert!(out.passed, "{:?}", out.failures);
        assert!(dir.join("validation.json").exists());
        assert!(dir.join("associated.csv").exists());
    }

    #[test]
    fn malformed_config_is_a_config_error() {
        let cfg: std::result::Result<ExperimentConfig, _> = toml::from_str(
            r#"
            kind = "frobnicate"
            "#,
        );
        assert!(cfg.is_err());
        // unknown corpus name surfaces as Error::Config from run()
        let cfg: ExperimentConfig = toml::from_str(
            r#"
            kind = "extend"
            corpus = "does_not_exist"
            [sequence]
            kind = "gevrey"
            s = 2.0
            "#,
        )
        .unwrap();
        let dir = std::env::temp_dir().join("carleman_badcfg_test");
        assert!(matches!(run(&cfg, &dir), Err(Error::Config(_))));
    }
}
