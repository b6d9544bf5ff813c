//! Persistence and extinction verdicts from the two prey invasion rates,
//! log-slope measurements and extinction Monte Carlo.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::invasion::InvasionEstimate;
use crate::model::{FaceId, Prey, Species, SwitchedSystem, SystemParams};
use crate::rng::with_threads;
use crate::sim::{IntegrationMode, SimConfig, Simulator, Trajectory};

use rayon::prelude::*;

pub const DEFAULT_Z: f64 = 3.0;
pub const DEFAULT_THRESHOLD: f64 = 1e-8;
pub const DEFAULT_LOG_THRESHOLD: f64 = -50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Coexistence,
    Prey2Extinct,
    Prey1Extinct,
    Bistable,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Verdict::Coexistence => "coexistence",
            Verdict::Prey2Extinct => "prey 2 extinct",
            Verdict::Prey1Extinct => "prey 1 extinct",
            Verdict::Bistable => "bistable",
            Verdict::Inconclusive => "inconclusive",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Sign {
    Pos,
    Neg,
    Zero,
}

fn sign(value: f64, se: f64, z: f64) -> Sign {
    if value.abs() > z * se {
        if value > 0.0 {
            Sign::Pos
        } else {
            Sign::Neg
        }
    } else {
        Sign::Zero
    }
}

/// The verdict as a function of `λ2(μ13)`, `λ1(μ23)`, their standard errors
/// and the z multiplier.
pub fn verdict_from(l2: f64, se2: f64, l1: f64, se1: f64, z: f64) -> Verdict {
    match (sign(l2, se2, z), sign(l1, se1, z)) {
        (Sign::Pos, Sign::Pos) => Verdict::Coexistence,
        (Sign::Neg, Sign::Pos) => Verdict::Prey2Extinct,
        (Sign::Pos, Sign::Neg) => Verdict::Prey1Extinct,
        (Sign::Neg, Sign::Neg) => Verdict::Bistable,
        _ => Verdict::Inconclusive,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub value: f64,
    pub std_error: f64,
    pub collapsed: bool,
}

impl From<&InvasionEstimate> for RateSummary {
    fn from(e: &InvasionEstimate) -> Self {
        Self { value: e.value, std_error: e.std_error, collapsed: e.collapsed }
    }
}

/// Predator invasion rates against the three boundary equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryChecks {
    pub lambda3_mu1: f64,
    pub lambda3_mu2: f64,
    pub lambda3_mu12: Option<f64>,
    pub all_positive: bool,
}

impl BoundaryChecks {
    pub fn evaluate(params: &SystemParams, pi: &[f64]) -> Result<Self> {
        let l1 = params.lambda3_on_prey_axis(pi, Prey::One)?;
        let l2 = params.lambda3_on_prey_axis(pi, Prey::Two)?;
        let l12 = params.lambda3_mu12(pi).ok();
        Ok(Self {
            lambda3_mu1: l1,
            lambda3_mu2: l2,
            lambda3_mu12: l12,
            all_positive: l1 > 0.0 && l2 > 0.0 && l12.is_some_and(|v| v > 0.0),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictReport {
    pub verdict: Verdict,
    pub lambda2_mu13: RateSummary,
    pub lambda1_mu23: RateSummary,
    pub z: f64,
    pub boundary: Option<BoundaryChecks>,
    /// Accessibility of the extinction sets is assumed, not checked.
    pub accessibility_assumed: bool,
    pub notes: Vec<String>,
}

/// `est13` must be prey 2 on the prey 1/predator face and `est23` prey 1 on
/// the prey 2/predator face.
pub fn classify(est13: &InvasionEstimate, est23: &InvasionEstimate, z: f64) -> Result<VerdictReport> {
    if est13.face != FaceId::Prey1Predator || est13.species != Species::Prey2 {
        return Err(Error::structural(format!(
            "first estimate must be prey 2 on {}, got {} on {}",
            FaceId::Prey1Predator,
            est13.species,
            est13.face
        )));
    }
    if est23.face != FaceId::Prey2Predator || est23.species != Species::Prey1 {
        return Err(Error::structural(format!(
            "second estimate must be prey 1 on {}, got {} on {}",
            FaceId::Prey2Predator,
            est23.species,
            est23.face
        )));
    }
    if !(z > 0.0 && z.is_finite()) {
        return Err(Error::param(format!("z must be positive, got {z}")));
    }
    let verdict = verdict_from(est13.value, est13.std_error, est23.value, est23.std_error, z);
    let mut notes = Vec::new();
    for e in [est13, est23] {
        if let Some(d) = &e.diagnostic {
            notes.push(d.clone());
        }
    }
    Ok(VerdictReport {
        verdict,
        lambda2_mu13: est13.into(),
        lambda1_mu23: est23.into(),
        z,
        boundary: None,
        accessibility_assumed: matches!(verdict, Verdict::Prey1Extinct | Verdict::Prey2Extinct | Verdict::Bistable),
        notes,
    })
}

impl VerdictReport {
    /// Records the predator's boundary invasion rates; a coexistence verdict
    /// with a nonpositive one gets a note.
    pub fn with_boundary_checks(mut self, params: &SystemParams, pi: &[f64]) -> Result<Self> {
        let b = BoundaryChecks::evaluate(params, pi)?;
        if self.verdict == Verdict::Coexistence && !b.all_positive {
            self.notes.push("coexistence verdict but a predator boundary invasion rate is not positive".into());
        }
        self.boundary = Some(b);
        Ok(self)
    }
}

/// Least-squares line through `(t, y)` points, accumulated one at a time.
#[derive(Debug, Clone, Copy, Default)]
pub struct LineFit {
    n: f64,
    st: f64,
    sy: f64,
    stt: f64,
    sty: f64,
    syy: f64,
}

impl LineFit {
    pub fn push(&mut self, t: f64, y: f64) {
        self.n += 1.0;
        self.st += t;
        self.sy += y;
        self.stt += t * t;
        self.sty += t * y;
        self.syy += y * y;
    }

    pub fn len(&self) -> usize {
        self.n as usize
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0.0
    }

    /// `(slope, r²)`, or `None` with fewer than two distinct times or a
    /// non-finite ordinate.
    pub fn fit(&self) -> Option<(f64, f64)> {
        if self.n < 2.0 || !self.sy.is_finite() {
            return None;
        }
        let sxx = self.stt - self.st * self.st / self.n;
        let sxy = self.sty - self.st * self.sy / self.n;
        let syy = self.syy - self.sy * self.sy / self.n;
        if !(sxx > 0.0) {
            return None;
        }
        let slope = sxy / sxx;
        let r2 = if syy > 0.0 { (sxy * sxy / (sxx * syy)).min(1.0) } else { 1.0 };
        Some((slope, r2))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub r2: f64,
    pub n_points: usize,
}

/// Slope of `ln x_species` against `t` over the trailing `window` of the
/// trajectory.
pub fn log_slope(traj: &Trajectory, species: Species, window: f64) -> Result<SlopeFit> {
    if !(window > 0.0) {
        return Err(Error::param("slope window must be > 0"));
    }
    let t_end = traj.last().t;
    let i = species.index();
    let mut fit = LineFit::default();
    for s in traj.samples.iter().filter(|s| s.t >= t_end - window) {
        if s.ln_x[i] == f64::NEG_INFINITY {
            return Err(Error::ZeroDensity { species: i + 1 });
        }
        fit.push(s.t, s.ln_x[i]);
    }
    let (slope, r2) =
        fit.fit().ok_or_else(|| Error::param(format!("fewer than two samples in the trailing window {window}")))?;
    Ok(SlopeFit { slope, r2, n_points: fit.len() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub x: [f64; 3],
    pub ln_x: [f64; 3],
    pub extinct: [bool; 3],
    /// Trailing-window log-slopes; `None` when the density hit zero.
    pub slopes: [Option<f64>; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionStats {
    pub n: usize,
    pub threshold: f64,
    pub ln_threshold: f64,
    pub horizon: f64,
    pub slope_window: f64,
    pub replicates: Vec<ReplicateOutcome>,
    pub fraction_extinct: [f64; 3],
    /// Over replicates extinct in that species with a finite slope.
    pub mean_slope: [Option<f64>; 3],
    pub std_slope: [Option<f64>; 3],
    pub slope_count: [usize; 3],
    /// Replicates with all three species above threshold at the horizon.
    pub all_persist: usize,
}

impl ExtinctionStats {
    fn from_outcomes(
        outcomes: Vec<ReplicateOutcome>,
        threshold: f64,
        ln_threshold: f64,
        horizon: f64,
        window: f64,
    ) -> Self {
        let n = outcomes.len();
        let mut fraction_extinct = [0.0; 3];
        let mut mean_slope = [None; 3];
        let mut std_slope = [None; 3];
        let mut slope_count = [0; 3];
        for i in 0..3 {
            fraction_extinct[i] = outcomes.iter().filter(|o| o.extinct[i]).count() as f64 / n as f64;
            let slopes: Vec<f64> = outcomes.iter().filter(|o| o.extinct[i]).filter_map(|o| o.slopes[i]).collect();
            slope_count[i] = slopes.len();
            if !slopes.is_empty() {
                let m = slopes.iter().sum::<f64>() / slopes.len() as f64;
                mean_slope[i] = Some(m);
                if slopes.len() > 1 {
                    let v = slopes.iter().map(|s| (s - m).powi(2)).sum::<f64>() / (slopes.len() - 1) as f64;
                    std_slope[i] = Some(v.sqrt());
                }
            }
        }
        let all_persist = outcomes.iter().filter(|o| o.extinct.iter().all(|e| !e)).count();
        Self {
            n,
            threshold,
            ln_threshold,
            horizon,
            slope_window: window,
            replicates: outcomes,
            fraction_extinct,
            mean_slope,
            std_slope,
            slope_count,
            all_persist,
        }
    }

    /// Standard error of the mean slope for `species`.
    pub fn slope_std_error(&self, species: Species) -> Option<f64> {
        let i = species.index();
        self.std_slope[i].map(|s| s / (self.slope_count[i] as f64).sqrt())
    }
}

/// Extinction settings. `threshold` defaults to 1e-8, or `e^-50` in log mode;
/// `slope_window` defaults to the last 90% of the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionConfig {
    pub sim: SimConfig,
    pub n: usize,
    pub threshold: Option<f64>,
    pub slope_window: Option<f64>,
}

impl ExtinctionConfig {
    pub fn new(sim: SimConfig, n: usize) -> Self {
        Self { sim, n, threshold: None, slope_window: None }
    }

    pub fn ln_threshold(&self) -> f64 {
        match (self.threshold, self.sim.mode) {
            (Some(t), _) => t.ln(),
            (None, IntegrationMode::Linear) => DEFAULT_THRESHOLD.ln(),
            (None, IntegrationMode::Log) => DEFAULT_LOG_THRESHOLD,
        }
    }

    pub fn slope_window(&self) -> f64 {
        self.slope_window.unwrap_or(0.9 * self.sim.t_end)
    }

    fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.n == 0 {
            return Err(Error::param("need at least one replicate"));
        }
        if let Some(t) = self.threshold {
            if !(t > 0.0 && t.is_finite()) {
                return Err(Error::param(format!("extinction threshold must be > 0, got {t}")));
            }
        }
        let w = self.slope_window();
        if !(w > 0.0 && w <= self.sim.t_end) {
            return Err(Error::param(format!("slope window must lie in (0, t_end], got {w}")));
        }
        Ok(())
    }
}

/// One replicate on `stream`, fitting log-slopes on the fly at the sampling
/// stride so no trajectory is stored.
fn run_replicate(
    sys: &SwitchedSystem,
    x0: [f64; 3],
    env0: Option<usize>,
    cfg: &ExtinctionConfig,
    stream: u64,
) -> Result<ReplicateOutcome> {
    let sc = &cfg.sim;
    let mut sim = Simulator::new(sys, x0, env0, sc, stream)?.without_switch_log();
    let t_from = sc.t_end - cfg.slope_window();
    let mut fits = [LineFit::default(); 3];
    let mut zero = [false; 3];
    let mut record = |s: &crate::sim::Sample| {
        if s.t >= t_from {
            for i in 0..3 {
                if s.ln_x[i] == f64::NEG_INFINITY {
                    zero[i] = true;
                } else {
                    fits[i].push(s.t, s.ln_x[i]);
                }
            }
        }
    };
    record(&sim.sample());
    let mut k = 1u64;
    loop {
        let t = (k as f64 * sc.sample_every).min(sc.t_end);
        sim.advance_to(t, &mut ())?;
        record(&sim.sample());
        if t >= sc.t_end {
            break;
        }
        k += 1;
    }
    let last = sim.sample();
    let ln_thr = cfg.ln_threshold();
    Ok(ReplicateOutcome {
        x: last.x,
        ln_x: last.ln_x,
        extinct: last.ln_x.map(|l| l < ln_thr),
        slopes: std::array::from_fn(|i| if zero[i] { None } else { fits[i].fit().map(|f| f.0) }),
    })
}

fn run_many(
    sys: &SwitchedSystem,
    starts: &[[f64; 3]],
    env0: Option<usize>,
    cfg: &ExtinctionConfig,
    threads: Option<usize>,
) -> Result<Vec<Vec<ReplicateOutcome>>> {
    let n = cfg.n;
    let flat: Vec<Result<ReplicateOutcome>> = with_threads(threads, || {
        (0..starts.len() * n)
            .into_par_iter()
            .map(|g| {
                run_replicate(sys, starts[g / n], env0, cfg, g as u64)
                    .map_err(|e| Error::Replicate { index: g, source: Box::new(e) })
            })
            .collect()
    });
    let flat: Vec<ReplicateOutcome> = flat.into_iter().collect::<Result<_>>()?;
    Ok(flat.chunks(n).map(|c| c.to_vec()).collect())
}

/// `cfg.n` replicates from `x0`; replicate `i` uses stream `i`.
pub fn extinction_probability(
    sys: &SwitchedSystem,
    x0: [f64; 3],
    env0: Option<usize>,
    cfg: &ExtinctionConfig,
    threads: Option<usize>,
) -> Result<ExtinctionStats> {
    cfg.validate()?;
    let ln_thr = cfg.ln_threshold();
    if x0.iter().any(|&v| v > 0.0 && v.ln() <= ln_thr) {
        return Err(Error::precondition(format!(
            "initial state {x0:?} already has a positive density below the extinction threshold"
        )));
    }
    let out = run_many(sys, &[x0], env0, cfg, threads)?.pop().expect("one start");
    Ok(ExtinctionStats::from_outcomes(
        out,
        cfg.threshold.unwrap_or(ln_thr.exp()),
        ln_thr,
        cfg.sim.t_end,
        cfg.slope_window(),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyRow {
    pub x0: [f64; 3],
    pub fraction_prey1_extinct: f64,
    pub fraction_prey2_extinct: f64,
    pub sum: f64,
    /// Replicates keeping all three species above threshold.
    pub all_persist: usize,
    pub both_prey_extinct: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomyTable {
    pub rows: Vec<DichotomyRow>,
    /// Grid points not in the open orthant, skipped.
    pub excluded: Vec<[f64; 3]>,
    pub n: usize,
    pub threshold: f64,
}

/// Over interior grid points, measures how often each prey goes extinct when
/// both prey invasion rates are negative. Grid point `g` replicate `i` uses
/// stream `g * n + i` (counting interior points only).
pub fn dichotomy_check(
    sys: &SwitchedSystem,
    report: &VerdictReport,
    grid: &[[f64; 3]],
    env0: Option<usize>,
    cfg: &ExtinctionConfig,
    threads: Option<usize>,
) -> Result<DichotomyTable> {
    if report.verdict != Verdict::Bistable {
        return Err(Error::precondition(format!(
            "the dichotomy check needs both prey invasion rates negative; verdict is {}",
            report.verdict
        )));
    }
    cfg.validate()?;
    let (interior, excluded): (Vec<[f64; 3]>, Vec<[f64; 3]>) = grid.iter().partition(|x| FaceId::Interior.contains(x));
    if interior.is_empty() {
        return Err(Error::precondition("no interior initial conditions in the grid"));
    }
    let ln_thr = cfg.ln_threshold();
    let outcomes = run_many(sys, &interior, env0, cfg, threads)?;
    let rows = interior
        .iter()
        .zip(outcomes)
        .map(|(x0, out)| {
            let n = out.len() as f64;
            let f1 = out.iter().filter(|o| o.extinct[0]).count() as f64 / n;
            let f2 = out.iter().filter(|o| o.extinct[1]).count() as f64 / n;
            DichotomyRow {
                x0: *x0,
                fraction_prey1_extinct: f1,
                fraction_prey2_extinct: f2,
                sum: f1 + f2,
                all_persist: out.iter().filter(|o| o.extinct.iter().all(|e| !e)).count(),
                both_prey_extinct: out.iter().filter(|o| o.extinct[0] && o.extinct[1]).count(),
            }
        })
        .collect();
    Ok(DichotomyTable { rows, excluded, n: cfg.n, threshold: cfg.threshold.unwrap_or(ln_thr.exp()) })
}
