use std::time::Instant;

use kawa_core::kmc::{run_batch, BatchSpec, BatchStatistics, Instrumentation, TransitionRecord, DEFAULT_CACHE};
use kawa_core::potential::SolverOptions;
use kawa_core::srw::{escape_probability, kasymp_trend, Escape, KasympRow};
use kawa_core::study::{CapacityReport, LandscapeSummary, Study};
use kawa_core::verify::{check_metastable_region, find_negative_checkerboard, HypothesisVerdict, NegativeCheckerboard};
use kawa_core::ModelParams;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{self, ExperimentConfig, PRESETS};
use crate::output::OutputDir;
use crate::{CliError, Command, Common};

/// Relative disagreement of the two capacity representations that fails `capacity`.
pub const CAPACITY_GAP_LIMIT: f64 = 1e-8;

pub fn resolve_config(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match (&common.config, &common.preset) {
        (Some(_), Some(_)) => return Err(CliError::Usage("give either --config or --preset, not both".into())),
        (Some(path), None) => config::load(path)?,
        (None, Some(name)) => config::preset(name).ok_or_else(|| {
            CliError::Usage(format!("unknown preset {name:?}; available: {}", PRESETS.join(", ")))
        })?,
        (None, None) => return Err(CliError::Usage("a config is required: --config PATH or --preset NAME".into())),
    };
    if let Some(b) = &common.beta {
        cfg.run.beta_grid = b.clone();
    }
    if let Some(s) = common.seed_base {
        cfg.run.seeds = s;
    }
    if let Some(d) = &common.out {
        cfg.output.directory = d.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn run(command: Command, common: &Common) -> Result<(), CliError> {
    let cfg = resolve_config(common)?;
    if let Some(n) = common.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        // a second initialisation only happens in tests and is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let enabled = match command {
        Command::Verify => cfg.analysis.verify,
        Command::Landscape => cfg.analysis.landscape,
        Command::Capacity => cfg.analysis.capacity,
        Command::Srw => cfg.analysis.srw.enabled,
        Command::Simulate => cfg.analysis.simulate,
        Command::Report => true,
    };
    if !enabled {
        return Err(CliError::Usage(format!("{} is disabled in the config's analysis section", command.name())));
    }
    let mut out = OutputDir::open(cfg.output.directory.as_ref(), &cfg)?;
    let start = Instant::now();
    let result = match command {
        Command::Verify => landscape(&cfg, &mut out).and_then(|v| {
            let v = v.expect("verify is enabled");
            if v.hypotheses_pass() && v.consistent() {
                Ok(())
            } else {
                Err(CliError::Check(verdict_message(&v)))
            }
        }),
        Command::Landscape => landscape(&cfg, &mut out).map(|_| ()),
        Command::Capacity => capacity(&cfg, &mut out),
        Command::Srw => srw(&cfg, &mut out),
        Command::Simulate => simulate(&cfg, &mut out),
        Command::Report => report(&cfg, &mut out),
    };
    // outputs written before a check failure are still recorded
    if matches!(result, Ok(()) | Err(CliError::Check(_))) {
        out.finish(command.name(), start.elapsed().as_secs_f64())?;
    }
    result
}

fn verdict_message(v: &HypothesisVerdict) -> String {
    let failed: Vec<&str> = [("H1", &v.h1), ("H2", &v.h2), ("H3a", &v.h3a), ("H3b", &v.h3b), ("H3c", &v.h3c)]
        .into_iter()
        .filter(|(_, c)| !c.pass)
        .map(|(n, _)| n)
        .collect();
    let mut m = if failed.is_empty() { "all hypotheses pass".to_string() } else { format!("failed: {}", failed.join(", ")) };
    if !v.consistent() {
        m.push_str("; verdict is inconsistent");
    }
    m
}

fn build(cfg: &ExperimentConfig) -> Result<Study, CliError> {
    Ok(Study::build(cfg.geometry()?, cfg.params()?)?)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Region {
    metastable: bool,
    proper: bool,
    /// Smallest box whose checkerboard beats the empty box, if any.
    negative_checkerboard: Option<NegativeCheckerboard>,
}

fn region(params: &ModelParams) -> Region {
    let (metastable, proper) = check_metastable_region(params);
    Region { metastable, proper, negative_checkerboard: find_negative_checkerboard(params) }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LandscapeFile {
    summary: LandscapeSummary,
    region: Region,
    verdict: Option<HypothesisVerdict>,
}

fn landscape(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<Option<HypothesisVerdict>, CliError> {
    let study = build(cfg)?;
    let verdict = cfg.analysis.verify.then(|| study.verdict(cfg.analysis.h1_mode));
    let file = LandscapeFile { summary: study.summary(), region: region(&cfg.params()?), verdict };
    out.write_json("landscape.json", &file)?;
    Ok(file.verdict)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CapacityFile {
    gamma_star: f64,
    #[serde(flatten)]
    report: CapacityReport,
}

fn capacity(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let study = build(cfg)?;
    let report = study.capacity_report(&cfg.run.beta_grid, &SolverOptions::default())?;
    let mut bad = Vec::new();
    for r in &report.rows {
        if !r.sandwich.holds {
            bad.push(format!("sandwich fails at β={}", r.beta));
        }
        if r.relative_gap.is_nan() || r.relative_gap > CAPACITY_GAP_LIMIT {
            bad.push(format!("representations differ by {:.3e} at β={}", r.relative_gap, r.beta));
        }
    }
    out.write_json("capacity.json", &CapacityFile { gamma_star: study.gamma_star(), report })?;
    if bad.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(bad.join("; ")))
    }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct SrwFile {
    n_star: usize,
    epsilon: f64,
    rows: Vec<KasympRow>,
    escape: Vec<Escape>,
}

fn srw(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let study = build(cfg)?;
    let shapes = &study.gate.shapes;
    if shapes.is_empty() {
        return Err(CliError::Check("the gate has no critical droplet shapes".into()));
    }
    let s = &cfg.analysis.srw;
    let opts = SolverOptions::default();
    let rows = kasymp_trend(shapes, &s.m_list, s.epsilon)?;
    let escape = s.m_list.iter().map(|&m| escape_probability(m, &opts)).collect::<Result<Vec<_>, _>>()?;
    if cfg.csv() {
        let header = [
            "M",
            "theta1",
            "theta2",
            "interiorTheta1",
            "interiorTheta2",
            "escapeProbability",
            "escapeRatio",
            "kasympRatio1",
            "kasympRatio2",
            "scaledTheta1",
            "scaledTheta2",
        ];
        let table: Vec<Vec<String>> = rows
            .iter()
            .zip(&escape)
            .map(|(r, e)| {
                let b = &r.bounds;
                [
                    b.theta1,
                    b.theta2,
                    b.interior_theta1,
                    b.interior_theta2,
                    e.probability,
                    e.ratio,
                    r.ratio_theta1,
                    r.ratio_theta2,
                    r.scaled_theta1,
                    r.scaled_theta2,
                ]
                .iter()
                .fold(vec![r.m.to_string()], |mut v, x| {
                    v.push(x.to_string());
                    v
                })
            })
            .collect();
        out.write_csv("srw.csv", &header, &table)?;
    }
    out.write_json("srw.json", &SrwFile { n_star: study.gate.n_star, epsilon: s.epsilon, rows, escape })
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Batch {
    beta: f64,
    seed: u64,
    statistics: Option<BatchStatistics>,
    error: Option<String>,
    /// Complete hitting times over their mean, ascending.
    normalized_times: Vec<f64>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct StatsFile {
    gamma_star: f64,
    theta: Option<f64>,
    entrance_cells: usize,
    batches: Vec<Batch>,
}

fn simulate(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let study = build(cfg)?;
    let (geom, params) = (cfg.geometry()?, cfg.params()?);
    let start = study.space.config(study.empty());
    let target = study.space.config(study.plus());
    let watch = Instrumentation::from_gate(&study.gate);
    let cells: Vec<u64> = study.gate.entrance.iter().map(|&s| s as u64).collect();
    let theta = study.theta().ok().map(|t| t.theta);
    let gamma_star = study.gamma_star();
    let mut trace = Vec::new();
    let mut batches = Vec::new();
    for (i, &beta) in cfg.run.beta_grid.iter().enumerate() {
        let seed = cfg.run.seeds + i as u64;
        let spec = BatchSpec { beta, runs: cfg.run.run_count, seed, budget: cfg.run.budget, cache: DEFAULT_CACHE };
        let records = run_batch(&geom, &params, start, target, &spec, &watch);
        trace.extend(records.iter().map(|r| trace_row(beta, r)));
        let batch = match BatchStatistics::compute(&records, &cells, beta, gamma_star, theta) {
            Ok(s) => {
                let mut t: Vec<f64> = records.iter().filter(|r| r.complete).map(|r| r.hitting_time / s.mean_time).collect();
                t.sort_by(f64::total_cmp);
                Batch { beta, seed, statistics: Some(s), error: None, normalized_times: t }
            }
            Err(e) => Batch { beta, seed, statistics: None, error: Some(e.to_string()), normalized_times: Vec::new() },
        };
        batches.push(batch);
    }
    if cfg.csv() {
        let header = [
            "beta",
            "seed",
            "stream",
            "hittingTime",
            "gateEntranceCode",
            "excursionCount",
            "passedThroughCstar",
            "events",
            "complete",
        ];
        out.write_csv("trace.csv", &header, &trace)?;
    }
    let failed: Vec<String> =
        batches.iter().filter_map(|b| b.error.as_ref().map(|e| format!("β={}: {e}", b.beta))).collect();
    out.write_json("stats.json", &StatsFile { gamma_star, theta, entrance_cells: cells.len(), batches })?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Check(failed.join("; ")))
    }
}

fn trace_row(beta: f64, r: &TransitionRecord) -> Vec<String> {
    vec![
        beta.to_string(),
        r.seed.to_string(),
        r.stream.to_string(),
        r.hitting_time.to_string(),
        r.gate_entrance.map(|c| c.to_string()).unwrap_or_default(),
        r.excursion_count.to_string(),
        r.passed_through_cstar.to_string(),
        r.events.to_string(),
        r.complete.to_string(),
    ]
}

const SECTIONS: [(&str, &str); 4] =
    [("landscape", "landscape.json"), ("capacity", "capacity.json"), ("srw", "srw.json"), ("simulation", "stats.json")];

fn report(cfg: &ExperimentConfig, out: &mut OutputDir) -> Result<(), CliError> {
    let mut sections = Map::new();
    let mut missing = Vec::new();
    for (key, file) in SECTIONS {
        match out.read_section(file)? {
            Some(v) => {
                sections.insert(key.into(), v);
            }
            None => missing.push(Value::String(file.into())),
        }
    }
    for file in ["srw.csv", "trace.csv"] {
        // only the hash line is checked; the tables stay in their own files
        if out.read_csv(file)?.is_none() && cfg.csv() {
            missing.push(Value::String(file.into()));
        }
    }
    let mut report = Map::new();
    report.insert("config".into(), serde_json::to_value(cfg).expect("config serialises"));
    report.insert("sections".into(), Value::Object(sections));
    report.insert("missing".into(), Value::Array(missing));
    out.write_json("report.json", &Value::Object(report))
}
