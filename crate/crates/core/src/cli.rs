//! Command implementations behind the `lvswitch` binary. Each command reads a
//! validated [`RunConfig`], writes its artifacts into an output directory and
//! finishes with `manifest.json`.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bracket::{strong_bracket_check, BracketReport};
use crate::classify::{
    classify, dichotomy_check, extinction_probability, DichotomyTable, ExtinctionConfig, ExtinctionStats, Verdict,
    VerdictReport,
};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::invasion::{
    averaged_prediction, estimate_invasion_rate, fast_switching_sweep, occupation_histogram, InvasionEstimate, SweepRow,
};
use crate::io::{self, write_atomic, write_json};
use crate::model::{AssumptionReport, AveragedRates, FaceId, Prey, Species, SwitchedSystem};
use crate::rng::with_threads;
use crate::sim::simulate;
use crate::svg;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Simulate,
    Invade,
    Classify,
    Density,
    Bracket,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Invade => "invade",
            Command::Classify => "classify",
            Command::Density => "density",
            Command::Bracket => "bracket",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    rng: &'static str,
    config: &'a RunConfig,
    outputs: &'a [String],
}

/// Loads, validates and resolves a config file, applying a seed override.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Param(format!("cannot read config {}: {e}", path.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.resolve();
    Ok(cfg)
}

/// Where a run writes: the explicit override, else the config's `output`, else `out`.
pub fn output_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf)
        .or_else(|| cfg.output.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

/// Runs `cmd` and returns the names of the files written (manifest last).
pub fn run(cmd: Command, cfg: &RunConfig, out: &Path, threads: Option<usize>) -> Result<Vec<String>> {
    let sys = cfg.system()?;
    // Everything is computed before the directory is touched.
    let files = match cmd {
        Command::Simulate => cmd_simulate(cfg, &sys)?,
        Command::Invade => cmd_invade(cfg, &sys, threads)?,
        Command::Classify => cmd_classify(cfg, &sys, threads)?,
        Command::Density => cmd_density(cfg, &sys, threads)?,
        Command::Bracket => cmd_bracket(cfg, &sys)?,
        Command::Sweep => cmd_sweep(cfg, &sys, threads)?,
    };
    std::fs::create_dir_all(out)?;
    let mut names = Vec::new();
    for (name, bytes) in &files {
        write_atomic(&out.join(name), bytes)?;
        names.push(name.clone());
    }
    names.push("manifest.json".into());
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: cmd.name(),
        seed: cfg.seed,
        rng: "ChaCha8Rng::seed_from_u64(seed), stream i for replicate or grid point i",
        config: cfg,
        outputs: &names,
    };
    write_json(&out.join("manifest.json"), &manifest)?;
    Ok(names)
}

type Files = Vec<(String, Vec<u8>)>;

fn json<T: Serialize>(name: &str, value: &T) -> Result<(String, Vec<u8>)> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(std::io::Error::other(e)))?;
    text.push('\n');
    Ok((name.to_string(), text.into_bytes()))
}

#[derive(Debug, Serialize)]
struct SimulateSummary {
    env0: usize,
    env0_sampled: bool,
    n_switches: usize,
    final_time: f64,
    final_state: [f64; 3],
    final_env: usize,
    assumptions: AssumptionReport,
}

fn cmd_simulate(cfg: &RunConfig, sys: &SwitchedSystem) -> Result<Files> {
    let sc = cfg.sim_config(cfg.sim.t_end)?;
    let traj = simulate(sys, cfg.sim.x0, cfg.env0(cfg.sim.env0)?, &sc, &mut ())?;
    let last = traj.last();
    let summary = SimulateSummary {
        env0: traj.env0 + 1,
        env0_sampled: traj.env0_sampled,
        n_switches: traj.switches.len(),
        final_time: last.t,
        final_state: last.x,
        final_env: last.env + 1,
        assumptions: sys.params.check_assumptions(&sys.law),
    };
    Ok(vec![
        ("trajectory.csv".into(), io::trajectory_csv(&traj)?),
        ("switches.csv".into(), io::switches_csv(&traj)?),
        json("summary.json", &summary)?,
    ])
}

#[derive(Debug, Serialize)]
struct FixedEnvRates {
    env: usize,
    lambda2_delta13: Option<f64>,
    lambda1_delta23: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct ClosedForms {
    stationary: Vec<f64>,
    fixed_env: Vec<FixedEnvRates>,
    averaged: Option<AveragedRates>,
    lambda3_mu1: f64,
    lambda3_mu2: f64,
    lambda3_mu12: Option<f64>,
}

fn closed_forms(sys: &SwitchedSystem) -> Result<ClosedForms> {
    let p = &sys.params;
    let pi = sys.stationary()?;
    Ok(ClosedForms {
        fixed_env: (0..p.n_envs())
            .map(|j| FixedEnvRates {
                env: j + 1,
                lambda2_delta13: p.fixed_env_invasion_rate(j, Prey::Two).ok(),
                lambda1_delta23: p.fixed_env_invasion_rate(j, Prey::One).ok(),
            })
            .collect(),
        averaged: p.averaged_invasion_rates(&pi).ok(),
        lambda3_mu1: p.lambda3_on_prey_axis(&pi, Prey::One)?,
        lambda3_mu2: p.lambda3_on_prey_axis(&pi, Prey::Two)?,
        lambda3_mu12: p.lambda3_mu12(&pi).ok(),
        stationary: pi,
    })
}

/// Prey 2 on the prey 1/predator face and prey 1 on the prey 2/predator face,
/// each on stream 0 of the seed.
pub fn prey_invasion_estimates(
    cfg: &RunConfig,
    sys: &SwitchedSystem,
    threads: Option<usize>,
) -> Result<(InvasionEstimate, InvasionEstimate)> {
    let c13 = cfg.estimator(FaceId::Prey1Predator)?;
    let c23 = cfg.estimator(FaceId::Prey2Predator)?;
    let (a, b) = with_threads(threads, || {
        rayon::join(
            || estimate_invasion_rate(sys, Species::Prey2, &c13),
            || estimate_invasion_rate(sys, Species::Prey1, &c23),
        )
    });
    Ok((a?, b?))
}

#[derive(Debug, Serialize)]
struct InvasionReport {
    lambda2_mu13: InvasionEstimate,
    lambda1_mu23: InvasionEstimate,
    closed_forms: ClosedForms,
    assumptions: AssumptionReport,
}

fn estimate_rows(sys: &SwitchedSystem, ests: [&InvasionEstimate; 2]) -> Result<Vec<SweepRow>> {
    let pi = sys.stationary()?;
    ests.iter()
        .map(|e| {
            Ok(SweepRow {
                face: e.face,
                invader: e.species,
                q_scale: 1.0,
                lambda: e.value,
                stderr: e.std_error,
                lambda_avg: averaged_prediction(&sys.params, &pi, e.face, e.species)?,
                collapsed: e.collapsed,
            })
        })
        .collect()
}

fn cmd_invade(cfg: &RunConfig, sys: &SwitchedSystem, threads: Option<usize>) -> Result<Files> {
    let (e13, e23) = prey_invasion_estimates(cfg, sys, threads)?;
    let rows = estimate_rows(sys, [&e13, &e23])?;
    let report = InvasionReport {
        closed_forms: closed_forms(sys)?,
        assumptions: sys.params.check_assumptions(&sys.law),
        lambda2_mu13: e13,
        lambda1_mu23: e23,
    };
    Ok(vec![json("invasion.json", &report)?, ("invasion.csv".into(), io::sweep_csv(&rows)?)])
}

#[derive(Debug, Serialize)]
struct ClassifyReport {
    verdict: VerdictReport,
    estimates: [InvasionEstimate; 2],
    extinction: Option<ExtinctionStats>,
    dichotomy: Option<DichotomyTable>,
}

fn cmd_classify(cfg: &RunConfig, sys: &SwitchedSystem, threads: Option<usize>) -> Result<Files> {
    let (e13, e23) = prey_invasion_estimates(cfg, sys, threads)?;
    let verdict = classify(&e13, &e23, cfg.classify.z)?.with_boundary_checks(&sys.params, &sys.stationary()?)?;
    let mut files = Vec::new();
    let mut extinction = None;
    let mut dichotomy = None;
    if let Some(ext) = &cfg.classify.extinction {
        let x0 = ext.x0.unwrap_or(cfg.sim.x0);
        let mut sim = cfg.sim_config(ext.t_end)?;
        sim.face = FaceId::of_state(&x0)
            .ok_or_else(|| Error::param(format!("extinction x0 {x0:?} is not on a supported face")))?;
        let ec = ExtinctionConfig { sim, n: ext.replicates, threshold: ext.threshold, slope_window: ext.slope_window };
        if let Some(grid) = &cfg.classify.dichotomy_grid {
            let mut gc = ec.clone();
            gc.sim.face = FaceId::Interior;
            let table = dichotomy_check(sys, &verdict, grid, None, &gc, threads)?;
            files.push(json("dichotomy.json", &table)?);
            dichotomy = Some(table);
        }
        if matches!(verdict.verdict, Verdict::Prey1Extinct | Verdict::Prey2Extinct | Verdict::Bistable) {
            let stats = extinction_probability(sys, x0, cfg.env0(cfg.sim.env0)?, &ec, threads)?;
            files.push(("extinction.csv".into(), io::extinction_csv(&stats)?));
            extinction = Some(stats);
        }
    }
    let report = ClassifyReport { verdict, estimates: [e13, e23], extinction, dichotomy };
    files.insert(0, json("verdict.json", &report)?);
    Ok(files)
}

#[derive(Debug, Serialize)]
struct DensitySidecar<'a> {
    spec: &'a crate::invasion::HistogramSpec,
    x_edges: Vec<f64>,
    y_edges: Vec<f64>,
    replicates: usize,
    burn_in: f64,
    t_end: f64,
    elapsed: f64,
    env_time: &'a [f64],
    env_fractions: Vec<f64>,
    overflow: Vec<f64>,
    files: Vec<String>,
}

fn cmd_density(cfg: &RunConfig, sys: &SwitchedSystem, threads: Option<usize>) -> Result<Files> {
    let d = &cfg.density;
    let face = FaceId::of_state(&d.x0)
        .ok_or_else(|| Error::param(format!("density x0 {:?} has no invariant dynamics of interest", d.x0)))?;
    let sc = cfg.sim_config(d.t_end)?.with_face(face);
    let rec = occupation_histogram(sys, d.x0, cfg.env0(d.env0)?, &sc, d.burn_in, &d.histogram, d.replicates, threads)
        .map_err(|e| match e {
        Error::Precondition(m) => Error::Param(m),
        e => e,
    })?;
    let hists = rec.normalized().expect("occupation_histogram always records histograms");
    let spec = &d.histogram;
    let label = |s: Species| match s {
        Species::Prey1 => "Prey 1 (x1)",
        Species::Prey2 => "Prey 2 (x2)",
        Species::Predator => "Predator (x3)",
    };
    let mut files = Vec::new();
    let mut names = Vec::new();
    for (k, h) in hists.iter().enumerate() {
        let csv = format!("density_env{}.csv", k + 1);
        let svg_name = format!("density_env{}.svg", k + 1);
        files.push((csv.clone(), io::histogram_csv(h, spec)?));
        let title = format!("State {} (time fraction {:.3})", k + 1, rec.env_fractions()[k]);
        files.push((
            svg_name.clone(),
            svg::heatmap(h, spec, &title, label(spec.pair[0]), label(spec.pair[1])).into_bytes(),
        ));
        names.push(csv);
        names.push(svg_name);
    }
    let sidecar = DensitySidecar {
        spec,
        x_edges: spec.x_edges(),
        y_edges: spec.y_edges(),
        replicates: d.replicates,
        burn_in: d.burn_in,
        t_end: d.t_end,
        elapsed: rec.elapsed,
        env_time: &rec.env_time,
        env_fractions: rec.env_fractions(),
        overflow: hists.iter().map(|h| h.overflow).collect(),
        files: names,
    };
    files.push(json("density.json", &sidecar)?);
    Ok(files)
}

#[derive(Debug, Serialize)]
struct BracketOutput {
    pass: bool,
    faces: Vec<BracketReport>,
}

fn cmd_bracket(cfg: &RunConfig, sys: &SwitchedSystem) -> Result<Files> {
    let faces = [FaceId::Prey1Predator, FaceId::Prey2Predator]
        .into_iter()
        .map(|f| strong_bracket_check(&sys.params, f, &cfg.bracket.grid))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for rep in &faces {
        for pair in &rep.pairs {
            for s in &pair.samples {
                rows.push(vec![
                    rep.face.to_string(),
                    (pair.constants.envs[0] + 1).to_string(),
                    (pair.constants.envs[1] + 1).to_string(),
                    io::fmt_f64(s.x_prey),
                    io::fmt_f64(s.x3),
                    io::fmt_f64(s.det01),
                    io::fmt_f64(s.det02),
                    s.spans.to_string(),
                ]);
            }
        }
    }
    let csv = io::csv_bytes(&["face", "env_i", "env_j", "x_prey", "x3", "det01", "det02", "spans"], rows)?;
    let out = BracketOutput { pass: faces.iter().all(|f| f.pass), faces };
    Ok(vec![json("bracket.json", &out)?, ("bracket_samples.csv".into(), csv)])
}

#[derive(Debug, Serialize)]
struct SweepOutput<'a> {
    rows: &'a [SweepRow],
    stationary: Vec<f64>,
}

fn cmd_sweep(cfg: &RunConfig, sys: &SwitchedSystem, threads: Option<usize>) -> Result<Files> {
    let est = cfg.estimator(cfg.sweep.face)?;
    let rows = fast_switching_sweep(sys, &cfg.sweep.scales, cfg.sweep.invader, &est, threads)?;
    Ok(vec![
        ("sweep.csv".into(), io::sweep_csv(&rows)?),
        json("sweep.json", &SweepOutput { rows: &rows, stationary: sys.stationary()? })?,
    ])
}

/// Process exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Param(_) | Error::EnvOutOfRange { .. } | Error::Structural(_) | Error::Singular(_) => 2,
        Error::NonFinite { .. } | Error::ZeroDensity { .. } => 3,
        Error::Precondition(_) => 4,
        Error::Io(_) | Error::Replicate { .. } => 1,
    }
}
