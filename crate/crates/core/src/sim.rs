//! Event-exact simulation of the switched system.
//!
//! Holding times are drawn up front, so the deterministic flow is integrated
//! with fixed RK4 steps of at most `dt_max` that land exactly on every switch
//! time (and on every sampling or batch boundary requested by the caller).
//! Coordinates that start at zero are never touched, so boundary faces are
//! preserved exactly rather than by clamping.

use rand::Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EnvCoeffs, FaceId, SwitchLaw, SwitchedSystem, SystemParams};
use crate::rng::{stream_rng, with_threads, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegrationMode {
    /// RK4 on the densities.
    #[default]
    Linear,
    /// RK4 on `ln x_i` for the positive coordinates; densities can decay far
    /// below the smallest positive double without losing the logarithm.
    Log,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub dt_max: f64,
    pub t_end: f64,
    pub seed: u64,
    pub face: FaceId,
    /// A warning is logged once per species when its density drops below this.
    pub floor_warn: f64,
    pub sample_every: f64,
    pub mode: IntegrationMode,
}

impl SimConfig {
    /// Defaults: `dt_max = 1e-3 / r`, one sample per unit time (or per step if
    /// steps are longer), interior face, linear mode.
    pub fn new(params: &SystemParams, t_end: f64, seed: u64) -> Self {
        let dt_max = default_dt(params);
        Self {
            dt_max,
            t_end,
            seed,
            face: FaceId::Interior,
            floor_warn: 1e-300,
            sample_every: dt_max.max(1.0),
            mode: IntegrationMode::Linear,
        }
    }

    pub fn with_face(mut self, face: FaceId) -> Self {
        self.face = face;
        self
    }

    pub fn with_mode(mut self, mode: IntegrationMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_dt(mut self, dt_max: f64) -> Self {
        self.dt_max = dt_max;
        self.sample_every = self.sample_every.max(dt_max);
        self
    }

    pub fn with_sample_every(mut self, sample_every: f64) -> Self {
        self.sample_every = sample_every;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_max.is_finite() && self.dt_max > 0.0) {
            return Err(Error::param(format!("dt_max must be > 0, got {}", self.dt_max)));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::param(format!("t_end must be > 0, got {}", self.t_end)));
        }
        if !(self.sample_every.is_finite() && self.sample_every >= self.dt_max) {
            return Err(Error::param(format!(
                "sample_every ({}) must be >= dt_max ({})",
                self.sample_every, self.dt_max
            )));
        }
        if !(self.floor_warn >= 0.0) {
            return Err(Error::param("floor_warn must be >= 0"));
        }
        Ok(())
    }
}

pub fn default_dt(params: &SystemParams) -> f64 {
    1e-3 / params.r
}

/// One point of the piecewise deterministic process.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HybridState {
    pub x: [f64; 3],
    pub env: usize,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: [f64; 3],
    /// `ln x`; stays finite in log mode after `x` underflows.
    pub ln_x: [f64; 3],
    pub env: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchEvent {
    pub t: f64,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub switches: Vec<SwitchEvent>,
    pub env0: usize,
    /// `true` when the initial environment was drawn from π.
    pub env0_sampled: bool,
    pub seed: u64,
    pub stream: u64,
}

impl Trajectory {
    pub fn last(&self) -> &Sample {
        self.samples.last().expect("trajectories hold at least the initial sample")
    }
}

/// One RK4 step as seen by observers. `integral` holds the quadrature of the
/// per-capita rates over the step, computed from the same stages as the step.
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub t0: f64,
    pub h: f64,
    pub env: usize,
    pub x0: [f64; 3],
    pub x1: [f64; 3],
    pub integral: [f64; 3],
}

pub trait Observer {
    fn on_step(&mut self, _step: &StepInfo) {}
    fn on_switch(&mut self, _event: &SwitchEvent) {}
}

impl Observer for () {}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn on_step(&mut self, step: &StepInfo) {
        self.0.on_step(step);
        self.1.on_step(step);
    }

    fn on_switch(&mut self, event: &SwitchEvent) {
        self.0.on_switch(event);
        self.1.on_switch(event);
    }
}

impl<O: Observer + ?Sized> Observer for &mut O {
    fn on_step(&mut self, step: &StepInfo) {
        (**self).on_step(step);
    }

    fn on_switch(&mut self, event: &SwitchEvent) {
        (**self).on_switch(event);
    }
}

/// Draws the time spent in `env` and the environment entered afterwards.
pub fn sample_holding_time<R: Rng + ?Sized>(rng: &mut R, env: usize, law: &SwitchLaw) -> Result<(f64, usize)> {
    let k = law.n_envs();
    if env >= k {
        return Err(Error::EnvOutOfRange { env, k });
    }
    let rate = law.exit_rate(env);
    if !(rate > 0.0) {
        return Err(Error::structural(format!("environment {} is absorbing (exit rate 0)", env + 1)));
    }
    let dt = Exp::new(rate).map_err(|e| Error::param(e.to_string()))?.sample(rng);
    let next = if k == 2 {
        1 - env
    } else {
        let mut u = rng.random::<f64>() * rate;
        let mut chosen = None;
        for j in (0..k).filter(|&j| j != env) {
            let q = law.rate(env, j);
            if q > 0.0 {
                chosen = Some(j);
                if u < q {
                    break;
                }
                u -= q;
            }
        }
        chosen.expect("positive exit rate implies a positive off-diagonal entry")
    };
    Ok((dt, next))
}

fn sample_from<R: Rng + ?Sized>(rng: &mut R, probs: &[f64]) -> usize {
    let mut u = rng.random::<f64>();
    for (i, p) in probs.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    probs.len() - 1
}

/// One classical RK4 step of the drift in a fixed environment.
pub fn flow_step(x: &[f64; 3], env: usize, params: &SystemParams, h: f64) -> Result<[f64; 3]> {
    if !(h > 0.0) {
        return Err(Error::param(format!("step size must be > 0, got {h}")));
    }
    let c = params.env(env)?;
    let (next, _) = rk4_linear(params, c, x, h);
    if next.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { t: f64::NAN, env, state: next });
    }
    Ok(next)
}

#[inline]
fn axpy(x: &[f64; 3], a: f64, k: &[f64; 3]) -> [f64; 3] {
    [x[0] + a * k[0], x[1] + a * k[1], x[2] + a * k[2]]
}

#[inline]
fn rk4_combine(k1: &[f64; 3], k2: &[f64; 3], k3: &[f64; 3], k4: &[f64; 3], h: f64) -> [f64; 3] {
    std::array::from_fn(|i| h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Returns the new state and the quadrature of the per-capita rates.
#[inline]
fn rk4_linear(p: &SystemParams, c: &EnvCoeffs, x: &[f64; 3], h: f64) -> ([f64; 3], [f64; 3]) {
    let f1 = p.per_capita_in(x, c);
    let k1 = mul(x, &f1);
    let x2 = axpy(x, 0.5 * h, &k1);
    let f2 = p.per_capita_in(&x2, c);
    let k2 = mul(&x2, &f2);
    let x3 = axpy(x, 0.5 * h, &k2);
    let f3 = p.per_capita_in(&x3, c);
    let k3 = mul(&x3, &f3);
    let x4 = axpy(x, h, &k3);
    let f4 = p.per_capita_in(&x4, c);
    let k4 = mul(&x4, &f4);
    let dx = rk4_combine(&k1, &k2, &k3, &k4, h);
    let integral = rk4_combine(&f1, &f2, &f3, &f4, h);
    ([x[0] + dx[0], x[1] + dx[1], x[2] + dx[2]], integral)
}

#[inline]
fn mul(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] * b[0], a[1] * b[1], a[2] * b[2]]
}

/// RK4 on `y = ln x` for active coordinates. Returns the new logarithms and
/// the quadrature of the per-capita rates (equal to the increment of `y`).
#[inline]
fn rk4_log(p: &SystemParams, c: &EnvCoeffs, y: &[f64; 3], active: &[bool; 3], h: f64) -> ([f64; 3], [f64; 3]) {
    let dens = |y: &[f64; 3]| -> [f64; 3] { std::array::from_fn(|i| if active[i] { y[i].exp() } else { 0.0 }) };
    let mask = |f: [f64; 3]| -> [f64; 3] { std::array::from_fn(|i| if active[i] { f[i] } else { 0.0 }) };
    let k1 = mask(p.per_capita_in(&dens(y), c));
    let k2 = mask(p.per_capita_in(&dens(&axpy(y, 0.5 * h, &k1)), c));
    let k3 = mask(p.per_capita_in(&dens(&axpy(y, 0.5 * h, &k2)), c));
    let k4 = mask(p.per_capita_in(&dens(&axpy(y, h, &k3)), c));
    let dy = rk4_combine(&k1, &k2, &k3, &k4, h);
    ([y[0] + dy[0], y[1] + dy[1], y[2] + dy[2]], dy)
}

/// Stateful integrator for one realization.
pub struct Simulator<'a> {
    sys: &'a SwitchedSystem,
    x: [f64; 3],
    ln_x: [f64; 3],
    active: [bool; 3],
    env: usize,
    t: f64,
    next_switch: f64,
    next_env: usize,
    rng: SimRng,
    dt_max: f64,
    mode: IntegrationMode,
    floor_warn: f64,
    warned: [bool; 3],
    record_switches: bool,
    switches: Vec<SwitchEvent>,
    env0: usize,
    env0_sampled: bool,
    seed: u64,
    stream: u64,
}

impl<'a> Simulator<'a> {
    /// `x0` must lie on `cfg.face`. With `env0 = None` the initial environment
    /// is drawn from the stationary distribution.
    pub fn new(
        sys: &'a SwitchedSystem,
        x0: [f64; 3],
        env0: Option<usize>,
        cfg: &SimConfig,
        stream: u64,
    ) -> Result<Self> {
        cfg.validate()?;
        if !cfg.face.contains(&x0) {
            return Err(Error::precondition(format!(
                "initial state {x0:?} is not on face {} (pinned coordinates must be 0, others > 0)",
                cfg.face
            )));
        }
        let k = sys.params.n_envs();
        let mut rng = stream_rng(cfg.seed, stream);
        let (env, env0_sampled) = match env0 {
            Some(e) if e < k => (e, false),
            Some(e) => return Err(Error::EnvOutOfRange { env: e, k }),
            None => (sample_from(&mut rng, &sys.law.stationary()?), true),
        };
        let active = [x0[0] > 0.0, x0[1] > 0.0, x0[2] > 0.0];
        let mut sim = Self {
            sys,
            x: x0,
            ln_x: x0.map(f64::ln),
            active,
            env,
            t: 0.0,
            next_switch: f64::INFINITY,
            next_env: env,
            rng,
            dt_max: cfg.dt_max,
            mode: cfg.mode,
            floor_warn: cfg.floor_warn,
            warned: [false; 3],
            record_switches: true,
            switches: Vec::new(),
            env0: env,
            env0_sampled,
            seed: cfg.seed,
            stream,
        };
        sim.schedule_switch()?;
        Ok(sim)
    }

    /// Stop keeping the switch log (observers still see every event).
    pub fn without_switch_log(mut self) -> Self {
        self.record_switches = false;
        self
    }

    fn schedule_switch(&mut self) -> Result<()> {
        if self.sys.law.exit_rate(self.env) > 0.0 {
            let (dt, next) = sample_holding_time(&mut self.rng, self.env, &self.sys.law)?;
            self.next_switch = self.t + dt;
            self.next_env = next;
        } else {
            self.next_switch = f64::INFINITY;
        }
        Ok(())
    }

    pub fn state(&self) -> HybridState {
        HybridState { x: self.x, env: self.env, t: self.t }
    }

    pub fn sample(&self) -> Sample {
        Sample { t: self.t, x: self.x, ln_x: self.ln_x, env: self.env }
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn switches(&self) -> &[SwitchEvent] {
        &self.switches
    }

    /// Integrates up to exactly `t_target`, switching environments on the way.
    pub fn advance_to<O: Observer + ?Sized>(&mut self, t_target: f64, obs: &mut O) -> Result<()> {
        while self.t < t_target {
            if self.next_switch <= t_target {
                let t_switch = self.next_switch;
                self.integrate_until(t_switch, obs)?;
                let event = SwitchEvent { t: t_switch, from: self.env, to: self.next_env };
                self.env = self.next_env;
                obs.on_switch(&event);
                if self.record_switches {
                    self.switches.push(event);
                }
                self.schedule_switch()?;
            } else {
                self.integrate_until(t_target, obs)?;
            }
        }
        Ok(())
    }

    fn integrate_until<O: Observer + ?Sized>(&mut self, b: f64, obs: &mut O) -> Result<()> {
        let params = &self.sys.params;
        let coeffs = params.envs[self.env];
        while self.t < b {
            let remaining = b - self.t;
            let h = remaining.min(self.dt_max);
            let x0 = self.x;
            let integral = match self.mode {
                IntegrationMode::Linear => {
                    let (x1, integral) = rk4_linear(params, &coeffs, &self.x, h);
                    self.x = x1;
                    for i in 0..3 {
                        self.ln_x[i] = x1[i].ln();
                    }
                    integral
                }
                IntegrationMode::Log => {
                    let (y1, integral) = rk4_log(params, &coeffs, &self.ln_x, &self.active, h);
                    for i in 0..3 {
                        if self.active[i] {
                            self.ln_x[i] = y1[i];
                            self.x[i] = y1[i].exp();
                        }
                    }
                    integral
                }
            };
            let t0 = self.t;
            self.t = if h == remaining { b } else { self.t + h };
            if self.x.iter().chain(&integral).any(|v| !v.is_finite())
                || (self.mode == IntegrationMode::Log && self.ln_x.iter().any(|v| v.is_nan()))
            {
                return Err(Error::NonFinite { t: self.t, env: self.env, state: self.x });
            }
            self.check_floor();
            obs.on_step(&StepInfo { t0, h, env: self.env, x0, x1: self.x, integral });
        }
        Ok(())
    }

    fn check_floor(&mut self) {
        for i in 0..3 {
            if self.active[i] && !self.warned[i] && self.x[i] < self.floor_warn {
                self.warned[i] = true;
                if self.x[i] == 0.0 && self.mode == IntegrationMode::Linear {
                    log::warn!(
                        "species {} underflowed to 0 at t = {} (absorbing); use log-space mode for deep decay",
                        i + 1,
                        self.t
                    );
                } else {
                    log::warn!("species {} fell below {:e} at t = {}", i + 1, self.floor_warn, self.t);
                }
            }
        }
    }

    pub fn into_trajectory(self, samples: Vec<Sample>) -> Trajectory {
        Trajectory {
            samples,
            switches: self.switches,
            env0: self.env0,
            env0_sampled: self.env0_sampled,
            seed: self.seed,
            stream: self.stream,
        }
    }
}

/// Runs one realization on stream 0 of `cfg.seed`.
pub fn simulate<O: Observer + ?Sized>(
    sys: &SwitchedSystem,
    x0: [f64; 3],
    env0: Option<usize>,
    cfg: &SimConfig,
    obs: &mut O,
) -> Result<Trajectory> {
    simulate_stream(sys, x0, env0, cfg, 0, obs)
}

/// Samples are taken at `k * sample_every` and at `t_end`.
pub fn simulate_stream<O: Observer + ?Sized>(
    sys: &SwitchedSystem,
    x0: [f64; 3],
    env0: Option<usize>,
    cfg: &SimConfig,
    stream: u64,
    obs: &mut O,
) -> Result<Trajectory> {
    let mut sim = Simulator::new(sys, x0, env0, cfg, stream)?;
    let mut samples = vec![sim.sample()];
    let mut k = 1u64;
    loop {
        let t_next = (k as f64 * cfg.sample_every).min(cfg.t_end);
        sim.advance_to(t_next, obs)?;
        samples.push(sim.sample());
        if t_next >= cfg.t_end {
            break;
        }
        k += 1;
    }
    Ok(sim.into_trajectory(samples))
}

/// `n` independent replicates; replicate `i` draws from stream `i`. Results are
/// returned in replicate order whatever the thread count, with failures
/// tagged by replicate index.
#[allow(clippy::too_many_arguments)]
pub fn simulate_ensemble<O, R, MO, F>(
    sys: &SwitchedSystem,
    x0: [f64; 3],
    env0: Option<usize>,
    cfg: &SimConfig,
    n: usize,
    threads: Option<usize>,
    make_observer: MO,
    finish: F,
) -> Result<Vec<Result<R>>>
where
    O: Observer + Send,
    R: Send,
    MO: Fn(usize) -> O + Sync + Send,
    F: Fn(usize, Trajectory, O) -> Result<R> + Sync + Send,
{
    if n == 0 {
        return Err(Error::param("ensemble needs at least one replicate"));
    }
    cfg.validate()?;
    Ok(with_threads(threads, || {
        (0..n)
            .into_par_iter()
            .map(|i| {
                let mut obs = make_observer(i);
                simulate_stream(sys, x0, env0, cfg, i as u64, &mut obs)
                    .and_then(|traj| finish(i, traj, obs))
                    .map_err(|e| Error::Replicate { index: i, source: Box::new(e) })
            })
            .collect()
    }))
}

/// Observer counting time spent in each environment.
#[derive(Debug, Clone, Default)]
pub struct EnvTime {
    pub per_env: Vec<f64>,
}

impl EnvTime {
    pub fn new(k: usize) -> Self {
        Self { per_env: vec![0.0; k] }
    }

    pub fn fractions(&self) -> Vec<f64> {
        let total: f64 = self.per_env.iter().sum();
        self.per_env.iter().map(|t| t / total).collect()
    }
}

impl Observer for EnvTime {
    fn on_step(&mut self, step: &StepInfo) {
        self.per_env[step.env] += step.h;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SwitchLaw;
    use crate::rng::stream_rng;

    fn sys(q12: f64, q21: f64) -> SwitchedSystem {
        SwitchedSystem::new(SystemParams::example_51(), SwitchLaw::two_state(q12, q21).unwrap()).unwrap()
    }

    #[test]
    fn holding_time_mean_matches_rate() {
        let law = SwitchLaw::two_state(2.0, 1.0).unwrap();
        let mut rng = stream_rng(11, 0);
        let n = 1_000_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let (dt, next) = sample_holding_time(&mut rng, 0, &law).unwrap();
            assert_eq!(next, 1);
            sum += dt;
        }
        let mean = sum / n as f64;
        // Exp(2): sd 0.5, standard error 0.5 / 1000.
        assert!((mean - 0.5).abs() < 3.0 * 0.5 / 1000.0, "mean {mean}");
    }

    #[test]
    fn holding_time_rejects_absorbing_row() {
        let law = SwitchLaw::two_state(0.0, 1.0).unwrap();
        let mut rng = stream_rng(1, 0);
        assert!(matches!(sample_holding_time(&mut rng, 0, &law), Err(Error::Structural(_))));
        assert!(sample_holding_time(&mut rng, 1, &law).is_ok());
    }

    #[test]
    fn three_state_jump_chain_follows_rates() {
        let law = SwitchLaw::new(vec![vec![0.0, 1.0, 3.0], vec![1.0, 0.0, 1.0], vec![1.0, 1.0, 0.0]]).unwrap();
        let mut rng = stream_rng(5, 0);
        let n = 200_000;
        let to2 = (0..n).filter(|_| sample_holding_time(&mut rng, 0, &law).unwrap().1 == 2).count();
        let frac = to2 as f64 / n as f64;
        assert!((frac - 0.75).abs() < 0.005, "{frac}");
    }

    #[test]
    fn axis_equilibrium_is_fixed() {
        let p = SystemParams::example_51();
        for h in [1e-3, 0.1, 1.0] {
            assert_eq!(flow_step(&[p.r, 0.0, 0.0], 1, &p, h).unwrap(), [p.r, 0.0, 0.0]);
        }
    }

    #[test]
    fn flow_step_keeps_zero_coordinates() {
        let p = SystemParams::example_52();
        let x = flow_step(&[0.3, 0.0, 0.7], 0, &p, 0.01).unwrap();
        assert_eq!(x[1], 0.0);
        assert!(x[0] > 0.0 && x[2] > 0.0);
    }

    #[test]
    fn flow_step_reports_blow_up() {
        let p = SystemParams::example_52();
        assert!(matches!(flow_step(&[1e200, 1e200, 1e200], 0, &p, 1.0), Err(Error::NonFinite { .. })));
        assert!(flow_step(&[1.0; 3], 0, &p, 0.0).is_err());
    }

    #[test]
    fn zero_rates_reduce_to_flow_composition() {
        let s = sys(0.0, 0.0);
        let cfg = SimConfig::new(&s.params, 2.0, 3).with_dt(0.01).with_sample_every(0.5);
        let x0 = [0.4, 0.3, 0.2];
        let traj = simulate(&s, x0, Some(1), &cfg, &mut ()).unwrap();
        assert!(traj.switches.is_empty());
        // Replay the same partition: 50 steps of 0.01 between samples.
        let mut x = x0;
        let mut t = 0.0;
        for k in 1..=4 {
            let b = k as f64 * 0.5;
            while t < b {
                let rem = b - t;
                let h = rem.min(0.01);
                x = flow_step(&x, 1, &s.params, h).unwrap();
                t = if h == rem { b } else { t + h };
            }
            assert_eq!(traj.samples[k].x, x);
        }
    }

    #[test]
    fn sampling_times_increase_and_end_at_horizon() {
        let s = sys(3.0, 3.0);
        let cfg = SimConfig::new(&s.params, 10.25, 9).with_dt(0.01);
        let traj = simulate(&s, [0.5, 0.5, 0.5], Some(0), &cfg, &mut ()).unwrap();
        assert!(traj.samples.windows(2).all(|w| w[0].t < w[1].t));
        assert_eq!(traj.last().t, 10.25);
        assert_eq!(traj.samples.len(), 12);
        // environment only changes at recorded switches
        let mut env = traj.env0;
        let mut sw = traj.switches.iter().peekable();
        for s in &traj.samples {
            while sw.peek().is_some_and(|e| e.t <= s.t) {
                let e = sw.next().unwrap();
                assert_eq!(e.from, env);
                env = e.to;
            }
            assert_eq!(s.env, env);
        }
    }

    #[test]
    fn switch_times_are_exact_increment_sums() {
        let s = sys(2.0, 5.0);
        let cfg = SimConfig::new(&s.params, 20.0, 77).with_dt(0.01);
        let traj = simulate(&s, [0.5, 0.5, 0.5], Some(0), &cfg, &mut ()).unwrap();
        let mut rng = stream_rng(77, 0);
        let mut t = 0.0;
        let mut env = 0;
        for ev in &traj.switches {
            let (dt, next) = sample_holding_time(&mut rng, env, &s.law).unwrap();
            t += dt;
            assert_eq!(ev.t, t);
            assert_eq!(ev.to, next);
            env = next;
        }
        assert!(!traj.switches.is_empty());
    }

    #[test]
    fn seed_determinism() {
        let s = sys(1.0, 2.0);
        let cfg = SimConfig::new(&s.params, 50.0, 1234).with_dt(0.01);
        let a = simulate(&s, [0.2, 0.3, 0.4], None, &cfg, &mut ()).unwrap();
        let b = simulate(&s, [0.2, 0.3, 0.4], None, &cfg, &mut ()).unwrap();
        assert_eq!(a, b);
        assert!(a.env0_sampled);
        let other = SimConfig { seed: 1235, ..cfg };
        let c = simulate(&s, [0.2, 0.3, 0.4], None, &other, &mut ()).unwrap();
        assert_ne!(a.switches, c.switches);
    }

    #[test]
    fn rejects_state_off_face() {
        let s = sys(1.0, 1.0);
        let cfg = SimConfig::new(&s.params, 1.0, 0).with_face(FaceId::Prey1Predator);
        assert!(matches!(simulate(&s, [0.5, 0.1, 0.5], Some(0), &cfg, &mut ()), Err(Error::Precondition(_))));
    }

    #[test]
    fn config_validation() {
        let p = SystemParams::example_51();
        assert!(SimConfig::new(&p, 1.0, 0).validate().is_ok());
        assert!(SimConfig::new(&p, 0.0, 0).validate().is_err());
        assert!(SimConfig::new(&p, 1.0, 0).with_sample_every(1e-5).validate().is_err());
        assert!(SimConfig { dt_max: -1.0, ..SimConfig::new(&p, 1.0, 0) }.validate().is_err());
    }

    #[test]
    fn log_mode_tracks_linear_mode() {
        let s = sys(2.0, 2.0);
        let cfg = SimConfig::new(&s.params, 30.0, 5).with_dt(0.005);
        let lin = simulate(&s, [0.5, 0.5, 0.5], Some(0), &cfg, &mut ()).unwrap();
        let log =
            simulate(&s, [0.5, 0.5, 0.5], Some(0), &cfg.clone().with_mode(IntegrationMode::Log), &mut ()).unwrap();
        assert_eq!(lin.switches, log.switches);
        for (a, b) in lin.samples.iter().zip(&log.samples) {
            for i in 0..3 {
                assert!((a.x[i] - b.x[i]).abs() <= 1e-8 * a.x[i].max(1.0), "{a:?} {b:?}");
            }
        }
    }

    #[test]
    fn ensemble_matches_single_run_and_ignores_thread_count() {
        let s = sys(1.0, 1.0);
        let cfg = SimConfig::new(&s.params, 20.0, 99).with_dt(0.01);
        let x0 = [0.5, 0.5, 0.5];
        let single = simulate(&s, x0, None, &cfg, &mut ()).unwrap();
        let one = simulate_ensemble(&s, x0, None, &cfg, 1, Some(1), |_| (), |_, t, _| Ok(t)).unwrap();
        assert_eq!(one[0].as_ref().unwrap(), &single);

        let mean_x3 = |threads| {
            let out =
                simulate_ensemble(&s, x0, None, &cfg, 24, Some(threads), |_| (), |_, t, _| Ok(t.last().x[2])).unwrap();
            let v: Vec<f64> = out.into_iter().map(|r| r.unwrap()).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        assert_eq!(mean_x3(1).to_bits(), mean_x3(4).to_bits());
    }

    #[test]
    fn ensemble_tags_failing_replicates() {
        let s = sys(1.0, 1.0);
        let cfg = SimConfig::new(&s.params, 1.0, 1).with_dt(0.01);
        let out = simulate_ensemble(
            &s,
            [0.5, 0.5, 0.5],
            Some(0),
            &cfg,
            3,
            Some(2),
            |_| (),
            |i, t, _| if i == 1 { Err(Error::param("boom")) } else { Ok(t.samples.len()) },
        )
        .unwrap();
        assert!(out[0].is_ok() && out[2].is_ok());
        assert!(matches!(out[1], Err(Error::Replicate { index: 1, .. })));
    }

    #[test]
    fn env_occupancy_follows_stationary_distribution() {
        let s = sys(1.0, 3.0);
        let cfg = SimConfig::new(&s.params, 1e4, 2024).with_dt(0.01).with_sample_every(1e4);
        let mut occ = EnvTime::new(2);
        simulate(&s, [0.5, 0.5, 0.5], Some(0), &cfg, &mut occ).unwrap();
        let f = occ.fractions();
        assert!((f[0] - 0.75).abs() < 0.01, "{f:?}");
    }
}
