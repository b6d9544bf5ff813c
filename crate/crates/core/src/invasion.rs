//! Invasion rates as long-run time averages of per-capita growth rates on
//! boundary faces, with batch-means standard errors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FaceId, Prey, Species, SwitchLaw, SwitchedSystem, SystemParams};
use crate::rng::with_threads;
use crate::sim::{Observer, SimConfig, Simulator, StepInfo};

use rayon::prelude::*;

pub const DEFAULT_BURN_IN_FRACTION: f64 = 0.1;
pub const DEFAULT_BATCHES: usize = 20;

/// Estimator settings. The face is taken from `sim.face`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub sim: SimConfig,
    /// Defaults to 10% of the horizon.
    pub burn_in: Option<f64>,
    pub n_batches: usize,
    /// Defaults to [`default_start`] for the face.
    pub x0: Option<[f64; 3]>,
    /// `None` draws the initial environment from π.
    pub env0: Option<usize>,
}

impl EstimatorConfig {
    pub fn new(sim: SimConfig) -> Self {
        Self { sim, burn_in: None, n_batches: DEFAULT_BATCHES, x0: None, env0: None }
    }

    pub fn burn_in(&self) -> f64 {
        self.burn_in.unwrap_or(DEFAULT_BURN_IN_FRACTION * self.sim.t_end)
    }

    fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let b = self.burn_in();
        if !(b >= 0.0 && b < self.sim.t_end) {
            return Err(Error::param(format!("burn_in must lie in [0, t_end), got {b}")));
        }
        if self.n_batches < 2 {
            return Err(Error::param("n_batches must be at least 2"));
        }
        Ok(())
    }
}

/// A start point on `face`: the axis equilibria for the axes, the planar
/// competition equilibrium for the prey-prey face (when it exists), and
/// `(2/3, 2/3, 3/2)` restricted to the face otherwise.
pub fn default_start(params: &SystemParams, face: FaceId) -> [f64; 3] {
    let r = params.r;
    match face {
        FaceId::Prey1Axis => [r, 0.0, 0.0],
        FaceId::Prey2Axis => [0.0, r, 0.0],
        FaceId::Prey1Prey2 => match params.planar_competition_equilibrium() {
            Ok((x, y)) if x > 0.0 && y > 0.0 => [x, y, 0.0],
            _ => [0.5 * r, 0.5 * r, 0.0],
        },
        _ => face.project([2.0 / 3.0, 2.0 / 3.0, 1.5]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvasionEstimate {
    pub species: Species,
    pub face: FaceId,
    pub value: f64,
    pub std_error: f64,
    pub horizon: f64,
    pub burn_in: f64,
    pub n_batches: usize,
    /// Time averages of all three per-capita rates over the same window.
    pub face_averages: [f64; 3],
    pub face_std_errors: [f64; 3],
    pub env_fractions: Vec<f64>,
    pub final_state: [f64; 3],
    pub env0: usize,
    pub seed: u64,
    pub stream: u64,
    /// A species living on the face decayed instead of persisting.
    pub collapsed: bool,
    pub diagnostic: Option<String>,
}

/// Mean and batch-means standard error of equal-length batch averages.
pub fn batch_means(batches: &[f64]) -> (f64, f64) {
    let n = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / n;
    if batches.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug)]
struct BatchObserver {
    active: bool,
    current: [f64; 3],
    env_time: Vec<f64>,
}

impl Observer for BatchObserver {
    fn on_step(&mut self, s: &StepInfo) {
        if self.active {
            for i in 0..3 {
                self.current[i] += s.integral[i];
            }
            self.env_time[s.env] += s.h;
        }
    }
}

/// Time-averages `f_invader` on the face given by `cfg.sim.face`. The invader
/// may also be a species living on the face, in which case the long-run
/// average is zero.
pub fn estimate_invasion_rate(
    sys: &SwitchedSystem,
    invader: Species,
    cfg: &EstimatorConfig,
) -> Result<InvasionEstimate> {
    estimate_on_stream(sys, invader, cfg, 0)
}

pub(crate) fn estimate_on_stream(
    sys: &SwitchedSystem,
    invader: Species,
    cfg: &EstimatorConfig,
    stream: u64,
) -> Result<InvasionEstimate> {
    cfg.validate()?;
    let face = cfg.sim.face;
    let x0 = cfg.x0.unwrap_or_else(|| default_start(&sys.params, face));
    let mut sim = Simulator::new(sys, x0, cfg.env0, &cfg.sim, stream)?.without_switch_log();
    let env0 = sim.state().env;
    let burn = cfg.burn_in();
    let t_end = cfg.sim.t_end;
    let nb = cfg.n_batches;
    let mut obs = BatchObserver { active: false, current: [0.0; 3], env_time: vec![0.0; sys.params.n_envs()] };
    sim.advance_to(burn, &mut obs)?;
    obs.active = true;
    let len = (t_end - burn) / nb as f64;
    let mut batches: Vec<[f64; 3]> = Vec::with_capacity(nb);
    for k in 1..=nb {
        let t = if k == nb { t_end } else { burn + k as f64 * len };
        sim.advance_to(t, &mut obs)?;
        batches.push(obs.current.map(|v| v / len));
        obs.current = [0.0; 3];
    }
    let mut face_averages = [0.0; 3];
    let mut face_std_errors = [0.0; 3];
    for i in 0..3 {
        let col: Vec<f64> = batches.iter().map(|b| b[i]).collect();
        (face_averages[i], face_std_errors[i]) = batch_means(&col);
    }
    let total: f64 = obs.env_time.iter().sum();
    let env_fractions = obs.env_time.iter().map(|t| t / total).collect();
    let final_state = sim.state().x;

    let mut problems = Vec::new();
    for s in Species::ALL {
        let i = s.index();
        if face.is_pinned(s) {
            continue;
        }
        if final_state[i] == 0.0 {
            problems.push(format!("{s} underflowed to 0 on face {face}"));
        } else if face_averages[i] < -3.0 * face_std_errors[i] && face_averages[i] < -1e-3 {
            problems.push(format!(
                "{s} has mean per-capita rate {:.4e} (se {:.1e}) on face {face}; the face dynamics are not persistent",
                face_averages[i], face_std_errors[i]
            ));
        }
    }
    let collapsed = !problems.is_empty();
    if collapsed {
        log::warn!("{}", problems.join("; "));
    }
    let i = invader.index();
    Ok(InvasionEstimate {
        species: invader,
        face,
        value: face_averages[i],
        std_error: face_std_errors[i],
        horizon: t_end,
        burn_in: burn,
        n_batches: nb,
        face_averages,
        face_std_errors,
        env_fractions,
        final_state,
        env0,
        seed: cfg.sim.seed,
        stream,
        collapsed,
        diagnostic: collapsed.then(|| problems.join("; ")),
    })
}

/// Closed-form predator invasion rates against the two axis equilibria.
pub fn estimate_axis_rates(params: &SystemParams, law: &SwitchLaw) -> Result<(f64, f64)> {
    let pi = law.stationary()?;
    Ok((params.lambda3_on_prey_axis(&pi, Prey::One)?, params.lambda3_on_prey_axis(&pi, Prey::Two)?))
}

/// Closed-form comparator for `invader` on `face` with π-averaged
/// coefficients: exact for the axis and prey-prey faces, the fast-switching
/// limit on the prey-predator faces, and zero for species living on the face.
pub fn averaged_prediction(params: &SystemParams, pi: &[f64], face: FaceId, invader: Species) -> Result<Option<f64>> {
    if !face.is_pinned(invader) {
        return Ok(Some(0.0));
    }
    Ok(match (face, invader) {
        (FaceId::Prey1Predator, Species::Prey2) => Some(params.averaged_invasion_rates(pi)?.lambda2_mu13),
        (FaceId::Prey2Predator, Species::Prey1) => Some(params.averaged_invasion_rates(pi)?.lambda1_mu23),
        (FaceId::Prey1Axis, Species::Predator) => Some(params.lambda3_on_prey_axis(pi, Prey::One)?),
        (FaceId::Prey2Axis, Species::Predator) => Some(params.lambda3_on_prey_axis(pi, Prey::Two)?),
        (FaceId::Prey1Prey2, Species::Predator) => Some(params.lambda3_mu12(pi)?),
        (FaceId::Prey1Axis, Species::Prey2) => Some(params.r * (1.0 - params.b2)),
        (FaceId::Prey2Axis, Species::Prey1) => Some(params.r * (1.0 - params.b1)),
        _ => None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub face: FaceId,
    pub invader: Species,
    pub q_scale: f64,
    pub lambda: f64,
    pub stderr: f64,
    pub lambda_avg: Option<f64>,
    pub collapsed: bool,
}

/// Re-estimates the invasion rate with all switching rates multiplied by each
/// scale. Point `i` of the grid draws from stream `i`.
pub fn fast_switching_sweep(
    sys: &SwitchedSystem,
    scales: &[f64],
    invader: Species,
    cfg: &EstimatorConfig,
    threads: Option<usize>,
) -> Result<Vec<SweepRow>> {
    if scales.is_empty() {
        return Err(Error::param("scale grid is empty"));
    }
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) || scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::param("scale grid must be positive and strictly increasing"));
    }
    let pi = sys.stationary()?;
    let avg = averaged_prediction(&sys.params, &pi, cfg.sim.face, invader)?;
    let rows: Vec<Result<SweepRow>> = with_threads(threads, || {
        scales
            .par_iter()
            .enumerate()
            .map(|(i, &scale)| {
                let scaled = sys.with_law(sys.law.scaled(scale)?)?;
                let est = estimate_on_stream(&scaled, invader, cfg, i as u64)?;
                Ok(SweepRow {
                    face: cfg.sim.face,
                    invader,
                    q_scale: scale,
                    lambda: est.value,
                    stderr: est.std_error,
                    lambda_avg: avg,
                    collapsed: est.collapsed,
                })
            })
            .collect()
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HistogramSpec {
    /// Coordinates on the horizontal and vertical axes.
    pub pair: [Species; 2],
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub bins: [usize; 2],
}

impl HistogramSpec {
    pub fn validate(&self) -> Result<()> {
        if self.pair[0] == self.pair[1] {
            return Err(Error::param("histogram pair must name two different species"));
        }
        for r in [self.x_range, self.y_range] {
            if !(r[0].is_finite() && r[1].is_finite() && r[0] < r[1]) {
                return Err(Error::param(format!("histogram range {r:?} must be finite and increasing")));
            }
        }
        if self.bins[0] == 0 || self.bins[1] == 0 {
            return Err(Error::param("histogram needs at least one bin per axis"));
        }
        Ok(())
    }

    pub fn x_edges(&self) -> Vec<f64> {
        edges(self.x_range, self.bins[0])
    }

    pub fn y_edges(&self) -> Vec<f64> {
        edges(self.y_range, self.bins[1])
    }

    fn locate(&self, x: &[f64; 3]) -> Option<(usize, usize)> {
        let bin = |v: f64, r: [f64; 2], n: usize| -> Option<usize> {
            if !(v >= r[0] && v <= r[1]) {
                return None;
            }
            Some((((v - r[0]) / (r[1] - r[0]) * n as f64) as usize).min(n - 1))
        };
        Some((
            bin(x[self.pair[0].index()], self.x_range, self.bins[0])?,
            bin(x[self.pair[1].index()], self.y_range, self.bins[1])?,
        ))
    }
}

fn edges(r: [f64; 2], n: usize) -> Vec<f64> {
    (0..=n).map(|k| r[0] + (r[1] - r[0]) * k as f64 / n as f64).collect()
}

/// Time-weighted 2D histogram; `mass[ix][iy]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram2d {
    pub mass: Vec<Vec<f64>>,
    pub overflow: f64,
}

impl Histogram2d {
    fn new(spec: &HistogramSpec) -> Self {
        Self { mass: vec![vec![0.0; spec.bins[1]]; spec.bins[0]], overflow: 0.0 }
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().flatten().sum::<f64>() + self.overflow
    }

    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for (i, row) in self.mass.iter().enumerate() {
            for (j, &m) in row.iter().enumerate() {
                if m > self.mass[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }
}

/// Streaming occupation statistics after burn-in: time and integrals of the
/// per-capita rates per environment, plus optional per-environment histograms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationRecord {
    pub elapsed: f64,
    pub env_time: Vec<f64>,
    pub env_integrals: Vec<[f64; 3]>,
    pub spec: Option<HistogramSpec>,
    pub histograms: Option<Vec<Histogram2d>>,
    #[serde(skip)]
    active: bool,
}

impl OccupationRecord {
    pub fn new(k: usize, spec: Option<HistogramSpec>) -> Self {
        Self {
            elapsed: 0.0,
            env_time: vec![0.0; k],
            env_integrals: vec![[0.0; 3]; k],
            spec,
            histograms: spec.map(|s| vec![Histogram2d::new(&s); k]),
            active: true,
        }
    }

    fn inactive(mut self) -> Self {
        self.active = false;
        self
    }

    pub fn env_fractions(&self) -> Vec<f64> {
        self.env_time.iter().map(|t| t / self.elapsed).collect()
    }

    /// Time averages of the per-capita rates over all environments.
    pub fn averages(&self) -> [f64; 3] {
        std::array::from_fn(|i| self.env_integrals.iter().map(|v| v[i]).sum::<f64>() / self.elapsed)
    }

    pub fn merge(&mut self, other: &OccupationRecord) -> Result<()> {
        if self.env_time.len() != other.env_time.len() || self.spec != other.spec {
            return Err(Error::structural("cannot merge occupation records with different layouts"));
        }
        self.elapsed += other.elapsed;
        for k in 0..self.env_time.len() {
            self.env_time[k] += other.env_time[k];
            for i in 0..3 {
                self.env_integrals[k][i] += other.env_integrals[k][i];
            }
        }
        if let (Some(a), Some(b)) = (&mut self.histograms, &other.histograms) {
            for (ha, hb) in a.iter_mut().zip(b) {
                ha.overflow += hb.overflow;
                for (ra, rb) in ha.mass.iter_mut().zip(&hb.mass) {
                    for (ma, mb) in ra.iter_mut().zip(rb) {
                        *ma += mb;
                    }
                }
            }
        }
        Ok(())
    }

    /// Histograms divided by the elapsed time, so all masses (overflow
    /// included) sum to one across environments.
    pub fn normalized(&self) -> Option<Vec<Histogram2d>> {
        let t = self.elapsed;
        self.histograms.as_ref().map(|hs| {
            hs.iter()
                .map(|h| Histogram2d {
                    mass: h.mass.iter().map(|row| row.iter().map(|m| m / t).collect()).collect(),
                    overflow: h.overflow / t,
                })
                .collect()
        })
    }
}

impl Observer for OccupationRecord {
    fn on_step(&mut self, s: &StepInfo) {
        if !self.active {
            return;
        }
        self.elapsed += s.h;
        self.env_time[s.env] += s.h;
        for i in 0..3 {
            self.env_integrals[s.env][i] += s.integral[i];
        }
        if let (Some(spec), Some(hs)) = (&self.spec, &mut self.histograms) {
            // Right-endpoint rule: the step's duration goes to the bin it ends in.
            match spec.locate(&s.x1) {
                Some((i, j)) => hs[s.env].mass[i][j] += s.h,
                None => hs[s.env].overflow += s.h,
            }
        }
    }
}

/// Occupation record over `[burn_in, t_end]` merged over `n` replicates in
/// replicate order.
#[allow(clippy::too_many_arguments)]
pub fn occupation_histogram(
    sys: &SwitchedSystem,
    x0: [f64; 3],
    env0: Option<usize>,
    cfg: &SimConfig,
    burn_in: f64,
    spec: &HistogramSpec,
    n: usize,
    threads: Option<usize>,
) -> Result<OccupationRecord> {
    spec.validate()?;
    if !(burn_in >= 0.0 && burn_in < cfg.t_end) {
        return Err(Error::param(format!("burn_in must lie in [0, t_end), got {burn_in}")));
    }
    if spec.pair.iter().all(|&s| cfg.face.is_pinned(s)) {
        return Err(Error::precondition(format!(
            "both histogram coordinates are identically zero on face {}",
            cfg.face
        )));
    }
    let k = sys.params.n_envs();
    if n == 0 {
        return Err(Error::param("need at least one replicate"));
    }
    let run = |i: usize| -> Result<OccupationRecord> {
        let mut sim = Simulator::new(sys, x0, env0, cfg, i as u64)?.without_switch_log();
        let mut rec = OccupationRecord::new(k, Some(*spec)).inactive();
        sim.advance_to(burn_in, &mut rec)?;
        rec.active = true;
        sim.advance_to(cfg.t_end, &mut rec)?;
        Ok(rec)
    };
    let parts: Vec<Result<OccupationRecord>> = with_threads(threads, || {
        (0..n).into_par_iter().map(|i| run(i).map_err(|e| Error::Replicate { index: i, source: Box::new(e) })).collect()
    });
    let mut total = OccupationRecord::new(k, Some(*spec));
    for p in parts {
        total.merge(&p?)?;
    }
    Ok(total)
}

/// Total-variation distance between the normalized histograms of two records
/// with the same layout (overflow counted as one more cell).
pub fn total_variation(a: &OccupationRecord, b: &OccupationRecord) -> Result<f64> {
    let (Some(ha), Some(hb)) = (a.normalized(), b.normalized()) else {
        return Err(Error::precondition("total variation needs histograms on both records"));
    };
    if a.spec != b.spec || ha.len() != hb.len() {
        return Err(Error::structural("histogram layouts differ"));
    }
    let mut tv = 0.0;
    for (x, y) in ha.iter().zip(&hb) {
        tv += (x.overflow - y.overflow).abs();
        for (rx, ry) in x.mass.iter().zip(&y.mass) {
            tv += rx.iter().zip(ry).map(|(p, q)| (p - q).abs()).sum::<f64>();
        }
    }
    Ok(0.5 * tv)
}

/// Convenience wrapper collecting `n` replicate estimates (replicate `i` on stream `i`).
pub fn estimate_replicates(
    sys: &SwitchedSystem,
    invader: Species,
    cfg: &EstimatorConfig,
    n: usize,
    threads: Option<usize>,
) -> Result<Vec<InvasionEstimate>> {
    let out: Vec<Result<InvasionEstimate>> = with_threads(threads, || {
        (0..n)
            .into_par_iter()
            .map(|i| {
                estimate_on_stream(sys, invader, cfg, i as u64)
                    .map_err(|e| Error::Replicate { index: i, source: Box::new(e) })
            })
            .collect()
    });
    out.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SwitchLaw;

    fn sys51(q: f64) -> SwitchedSystem {
        SwitchedSystem::new(SystemParams::example_51(), SwitchLaw::two_state(q, q).unwrap()).unwrap()
    }

    fn est_cfg(p: &SystemParams, face: FaceId, t: f64, seed: u64) -> EstimatorConfig {
        EstimatorConfig::new(SimConfig::new(p, t, seed).with_face(face).with_dt(0.01))
    }

    #[test]
    fn batch_means_of_constant_has_zero_error() {
        assert_eq!(batch_means(&[2.0; 10]), (2.0, 0.0));
        let (m, se) = batch_means(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }

    #[test]
    fn axis_face_estimate_is_exact() {
        let s = sys51(1.0);
        let cfg = est_cfg(&s.params, FaceId::Prey1Axis, 200.0, 1);
        let est = estimate_invasion_rate(&s, Species::Predator, &cfg).unwrap();
        let (l1, _) = estimate_axis_rates(&s.params, &s.law).unwrap();
        assert!((est.value - l1).abs() < 3.0 * est.std_error + 0.02, "{} vs {l1}", est.value);
        assert!(!est.collapsed);
    }

    #[test]
    fn mu12_estimate_from_equilibrium() {
        let s = sys51(5.0);
        let cfg = est_cfg(&s.params, FaceId::Prey1Prey2, 500.0, 2);
        let est = estimate_invasion_rate(&s, Species::Predator, &cfg).unwrap();
        let pi = s.stationary().unwrap();
        let exact = s.params.lambda3_mu12(&pi).unwrap();
        assert!((est.value - exact).abs() <= 3.0 * est.std_error + 1e-9, "{est:?} vs {exact}");
    }

    #[test]
    fn rejects_bad_windows() {
        let s = sys51(1.0);
        let mut cfg = est_cfg(&s.params, FaceId::Prey1Axis, 10.0, 1);
        cfg.burn_in = Some(10.0);
        assert!(estimate_invasion_rate(&s, Species::Predator, &cfg).is_err());
        cfg.burn_in = None;
        cfg.n_batches = 1;
        assert!(estimate_invasion_rate(&s, Species::Predator, &cfg).is_err());
    }

    #[test]
    fn predator_collapse_is_diagnosed() {
        // e * r < d in both environments: the predator dies out on its face.
        let envs = vec![
            crate::model::EnvCoeffs::new(0.5, 0.5, 0.05, 0.05).unwrap(),
            crate::model::EnvCoeffs::new(0.4, 0.4, 0.06, 0.06).unwrap(),
        ];
        let p = SystemParams::new(1.0, 0.5, 0.5, 0.5, envs).unwrap();
        let s = SwitchedSystem::new(p, SwitchLaw::two_state(1.0, 1.0).unwrap()).unwrap();
        let cfg = est_cfg(&s.params, FaceId::Prey1Predator, 400.0, 3);
        let est = estimate_invasion_rate(&s, Species::Prey2, &cfg).unwrap();
        assert!(est.collapsed);
        assert!(est.diagnostic.unwrap().contains("predator"));
    }

    #[test]
    fn averaged_prediction_covers_faces() {
        let p = SystemParams::example_52();
        let pi = [0.5, 0.5];
        let avg = p.averaged_invasion_rates(&pi).unwrap();
        assert_eq!(
            averaged_prediction(&p, &pi, FaceId::Prey1Predator, Species::Prey2).unwrap(),
            Some(avg.lambda2_mu13)
        );
        assert_eq!(averaged_prediction(&p, &pi, FaceId::Prey1Predator, Species::Prey1).unwrap(), Some(0.0));
        assert_eq!(averaged_prediction(&p, &pi, FaceId::Prey1Prey2, Species::Prey1).unwrap(), Some(0.0));
        assert_eq!(averaged_prediction(&p, &pi, FaceId::Interior, Species::Prey1).unwrap(), Some(0.0));
    }

    #[test]
    fn histogram_locates_edges() {
        let spec = HistogramSpec {
            pair: [Species::Prey1, Species::Predator],
            x_range: [0.0, 1.0],
            y_range: [0.0, 2.0],
            bins: [4, 2],
        };
        assert_eq!(spec.locate(&[0.0, 9.0, 0.0]), Some((0, 0)));
        assert_eq!(spec.locate(&[1.0, 9.0, 2.0]), Some((3, 1)));
        assert_eq!(spec.locate(&[0.3, 9.0, 1.5]), Some((1, 1)));
        assert_eq!(spec.locate(&[1.1, 0.0, 0.5]), None);
        assert_eq!(spec.x_edges(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn point_mass_lands_in_one_bin() {
        let p = SystemParams::example_51();
        let s = SwitchedSystem::new(p.clone(), SwitchLaw::two_state(0.0, 0.0).unwrap()).unwrap();
        let (x1, x3) = p.prey_predator_equilibrium(0, Prey::One).unwrap();
        let cfg = SimConfig::new(&p, 50.0, 0).with_face(FaceId::Prey1Predator).with_dt(0.01);
        let spec = HistogramSpec {
            pair: [Species::Prey1, Species::Predator],
            x_range: [0.0, 1.0],
            y_range: [0.0, 10.0],
            bins: [20, 20],
        };
        let rec = occupation_histogram(&s, [x1, 0.0, x3], Some(0), &cfg, 5.0, &spec, 2, Some(2)).unwrap();
        assert!((rec.elapsed - 90.0).abs() < 1e-9);
        let h = &rec.normalized().unwrap()[0];
        let (i, j) = h.argmax();
        assert!((h.mass[i][j] - 1.0).abs() < 1e-12);
        assert_eq!(rec.env_time[1], 0.0);
    }

    #[test]
    fn merge_rejects_mismatched_layouts() {
        let mut a = OccupationRecord::new(2, None);
        let b = OccupationRecord::new(3, None);
        assert!(a.merge(&b).is_err());
    }
}
