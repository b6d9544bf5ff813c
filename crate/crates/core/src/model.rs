//! Coefficient sets, the switched vector field and its closed-form boundary
//! quantities.
//!
//! Species are indexed `0 = prey 1`, `1 = prey 2`, `2 = predator` throughout.
//! Per-capita rates in environment `j`:
//!
//! ```text
//! f1 = r - x1 - b1 x2 - c1(j) x3
//! f2 = r - x2 - b2 x1 - c2(j) x3
//! f3 = e1(j) x1 + e2(j) x2 - d
//! ```

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance below which a cross term `c_k(i)e_k(j) - c_k(j)e_k(i)`
/// is treated as numerically zero.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Species {
    Prey1,
    Prey2,
    Predator,
}

impl Species {
    pub const ALL: [Species; 3] = [Species::Prey1, Species::Prey2, Species::Predator];

    pub fn index(self) -> usize {
        match self {
            Species::Prey1 => 0,
            Species::Prey2 => 1,
            Species::Predator => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Species::Prey1 => "prey1",
            Species::Prey2 => "prey2",
            Species::Predator => "predator",
        })
    }
}

/// One of the two prey species.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Prey {
    One,
    Two,
}

impl Prey {
    pub fn species(self) -> Species {
        match self {
            Prey::One => Species::Prey1,
            Prey::Two => Species::Prey2,
        }
    }

    pub fn other(self) -> Prey {
        match self {
            Prey::One => Prey::Two,
            Prey::Two => Prey::One,
        }
    }
}

/// Invariant subsets of the nonnegative orthant, identified by which
/// coordinates are held at exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaceId {
    /// `x2 = x3 = 0`
    Prey1Axis,
    /// `x1 = x3 = 0`
    Prey2Axis,
    /// `x3 = 0`
    Prey1Prey2,
    /// `x2 = 0`
    Prey1Predator,
    /// `x1 = 0`
    Prey2Predator,
    Interior,
}

impl FaceId {
    pub const ALL: [FaceId; 6] = [
        FaceId::Prey1Axis,
        FaceId::Prey2Axis,
        FaceId::Prey1Prey2,
        FaceId::Prey1Predator,
        FaceId::Prey2Predator,
        FaceId::Interior,
    ];

    /// `true` for coordinates pinned to zero on this face.
    pub fn pinned(self) -> [bool; 3] {
        match self {
            FaceId::Prey1Axis => [false, true, true],
            FaceId::Prey2Axis => [true, false, true],
            FaceId::Prey1Prey2 => [false, false, true],
            FaceId::Prey1Predator => [false, true, false],
            FaceId::Prey2Predator => [true, false, false],
            FaceId::Interior => [false, false, false],
        }
    }

    pub fn is_pinned(self, species: Species) -> bool {
        self.pinned()[species.index()]
    }

    /// Zeroes the pinned coordinates of `x`.
    pub fn project(self, x: [f64; 3]) -> [f64; 3] {
        let pinned = self.pinned();
        std::array::from_fn(|i| if pinned[i] { 0.0 } else { x[i] })
    }

    /// Pinned coordinates exactly zero, the others strictly positive and finite.
    pub fn contains(self, x: &[f64; 3]) -> bool {
        self.pinned().iter().zip(x).all(|(&p, &v)| if p { v == 0.0 } else { v > 0.0 && v.is_finite() })
    }

    /// The face on which exactly the given coordinates are positive.
    pub fn of_state(x: &[f64; 3]) -> Option<FaceId> {
        let zero = [x[0] == 0.0, x[1] == 0.0, x[2] == 0.0];
        FaceId::ALL.into_iter().find(|f| f.pinned() == zero)
    }
}

impl std::fmt::Display for FaceId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FaceId::Prey1Axis => "prey1_axis",
            FaceId::Prey2Axis => "prey2_axis",
            FaceId::Prey1Prey2 => "prey1_prey2",
            FaceId::Prey1Predator => "prey1_predator",
            FaceId::Prey2Predator => "prey2_predator",
            FaceId::Interior => "interior",
        })
    }
}

/// Predator-prey coefficients of one environment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvCoeffs {
    pub c1: f64,
    pub c2: f64,
    pub e1: f64,
    pub e2: f64,
}

impl EnvCoeffs {
    pub fn new(c1: f64, c2: f64, e1: f64, e2: f64) -> Result<Self> {
        let env = Self { c1, c2, e1, e2 };
        env.validate()?;
        Ok(env)
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [("c1", self.c1), ("c2", self.c2), ("e1", self.e1), ("e2", self.e2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Predation rate on the given prey.
    pub fn c(&self, prey: Prey) -> f64 {
        match prey {
            Prey::One => self.c1,
            Prey::Two => self.c2,
        }
    }

    /// Conversion efficiency of the given prey.
    pub fn e(&self, prey: Prey) -> f64 {
        match prey {
            Prey::One => self.e1,
            Prey::Two => self.e2,
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    r: f64,
    d: f64,
    b1: f64,
    b2: f64,
    envs: Vec<EnvCoeffs>,
}

impl TryFrom<RawParams> for SystemParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        SystemParams::new(raw.r, raw.d, raw.b1, raw.b2, raw.envs)
    }
}

/// Full coefficient set of the switched system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams")]
pub struct SystemParams {
    pub r: f64,
    pub d: f64,
    pub b1: f64,
    pub b2: f64,
    pub envs: Vec<EnvCoeffs>,
}

impl SystemParams {
    /// Rejects non-positive coefficients and fewer than two environments.
    /// Assumption checks are separate, see [`SystemParams::check_assumptions`].
    pub fn new(r: f64, d: f64, b1: f64, b2: f64, envs: Vec<EnvCoeffs>) -> Result<Self> {
        for (name, v) in [("r", r), ("d", d), ("b1", b1), ("b2", b2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if envs.len() < 2 {
            return Err(Error::param(format!("at least two environments are required, got {}", envs.len())));
        }
        for env in &envs {
            env.validate()?;
        }
        Ok(Self { r, d, b1, b2, envs })
    }

    /// Bundled example 51: two environments that each exclude prey 2.
    pub fn example_51() -> Self {
        Self {
            r: 1.0,
            d: 0.1,
            b1: 0.55,
            b2: 0.95,
            envs: vec![
                EnvCoeffs { c1: 0.15, c2: 0.178, e1: 0.6, e2: 0.45 },
                EnvCoeffs { c1: 0.4, c2: 0.45, e1: 0.85, e2: 0.15 },
            ],
        }
    }

    /// Bundled example 52: both environments support coexistence but
    /// fast switching excludes prey 2.
    pub fn example_52() -> Self {
        Self {
            r: 1.0,
            d: 0.1,
            b1: 0.9,
            b2: 0.5,
            envs: vec![
                EnvCoeffs { c1: 0.15, c2: 0.28, e1: 0.15, e2: 0.15 },
                EnvCoeffs { c1: 0.4, c2: 0.4, e1: 0.85, e2: 0.4 },
            ],
        }
    }

    pub fn n_envs(&self) -> usize {
        self.envs.len()
    }

    pub fn env(&self, env: usize) -> Result<&EnvCoeffs> {
        self.envs.get(env).ok_or(Error::EnvOutOfRange { env, k: self.envs.len() })
    }

    pub(crate) fn per_capita_in(&self, x: &[f64; 3], c: &EnvCoeffs) -> [f64; 3] {
        [
            self.r - x[0] - self.b1 * x[1] - c.c1 * x[2],
            self.r - x[1] - self.b2 * x[0] - c.c2 * x[2],
            c.e1 * x[0] + c.e2 * x[1] - self.d,
        ]
    }

    #[inline]
    pub(crate) fn drift_in(&self, x: &[f64; 3], c: &EnvCoeffs) -> [f64; 3] {
        let f = self.per_capita_in(x, c);
        [x[0] * f[0], x[1] * f[1], x[2] * f[2]]
    }

    /// Per-capita growth rates `(f1, f2, f3)`; defined on the boundary too.
    pub fn per_capita(&self, x: &[f64; 3], env: usize) -> Result<[f64; 3]> {
        Ok(self.per_capita_in(x, self.env(env)?))
    }

    /// The vector field `(x1 f1, x2 f2, x3 f3)`. Component `i` is exactly zero
    /// whenever `x[i] == 0`.
    pub fn drift(&self, x: &[f64; 3], env: usize) -> Result<[f64; 3]> {
        Ok(self.drift_in(x, self.env(env)?))
    }

    /// π-weighted mean of an environment coefficient.
    pub fn weighted_mean(&self, pi: &[f64], g: impl Fn(&EnvCoeffs) -> f64) -> Result<f64> {
        self.check_weights(pi)?;
        Ok(self.envs.iter().zip(pi).map(|(e, w)| g(e) * w).sum())
    }

    fn check_weights(&self, pi: &[f64]) -> Result<()> {
        if pi.len() != self.envs.len() {
            return Err(Error::param(format!("distribution has {} entries, expected {}", pi.len(), self.envs.len())));
        }
        Ok(())
    }

    /// Interior equilibrium of the predator-free competition subsystem.
    pub fn planar_competition_equilibrium(&self) -> Result<(f64, f64)> {
        competition_equilibrium(self.r, self.b1, self.b2)
    }

    /// `λ3(μ12) = ē1 x_- + ē2 y_- - d`, the predator's invasion rate at the
    /// competition equilibrium.
    pub fn lambda3_mu12(&self, pi: &[f64]) -> Result<f64> {
        let (xm, ym) = self.planar_competition_equilibrium()?;
        let e1 = self.weighted_mean(pi, |e| e.e1)?;
        let e2 = self.weighted_mean(pi, |e| e.e2)?;
        Ok(e1 * xm + e2 * ym - self.d)
    }

    /// `λ3(μ_i) = r Σ_j e_i(j) π_j - d`.
    pub fn lambda3_on_prey_axis(&self, pi: &[f64], prey: Prey) -> Result<f64> {
        let e = self.weighted_mean(pi, |c| c.e(prey))?;
        Ok(self.r * e - self.d)
    }

    /// Equilibrium `(prey*, predator*)` of the planar prey-predator system in a
    /// fixed environment.
    pub fn prey_predator_equilibrium(&self, env: usize, prey: Prey) -> Result<(f64, f64)> {
        let c = self.env(env)?;
        planar_prey_predator(self.r, self.d, c.c(prey), c.e(prey)).ok_or_else(|| {
            Error::precondition(format!(
                "e{}({}) r = {} <= d = {}: no interior prey-predator equilibrium",
                prey.species().index() + 1,
                env + 1,
                c.e(prey) * self.r,
                self.d
            ))
        })
    }

    /// Invasion rate of `invader` against the fixed-environment equilibrium of
    /// the other prey and the predator.
    pub fn fixed_env_invasion_rate(&self, env: usize, invader: Prey) -> Result<f64> {
        let c = self.env(env)?;
        let resident = invader.other();
        let b = self.competition_on(invader);
        invasion_closed_form(self.r, self.d, b, c.c(resident), c.e(resident), c.c(invader)).ok_or_else(|| {
            Error::precondition(format!("resident prey cannot support the predator in environment {}", env + 1))
        })
    }

    /// The same closed forms evaluated at π-averaged coefficients: the
    /// fast-switching limits of `λ2(μ13)` and `λ1(μ23)`.
    pub fn averaged_invasion_rates(&self, pi: &[f64]) -> Result<AveragedRates> {
        let c1 = self.weighted_mean(pi, |e| e.c1)?;
        let c2 = self.weighted_mean(pi, |e| e.c2)?;
        let e1 = self.weighted_mean(pi, |e| e.e1)?;
        let e2 = self.weighted_mean(pi, |e| e.e2)?;
        let lambda2_mu13 = invasion_closed_form(self.r, self.d, self.b2, c1, e1, c2)
            .ok_or_else(|| Error::precondition("averaged e1 r <= d: no averaged equilibrium"))?;
        let lambda1_mu23 = invasion_closed_form(self.r, self.d, self.b1, c2, e2, c1)
            .ok_or_else(|| Error::precondition("averaged e2 r <= d: no averaged equilibrium"))?;
        Ok(AveragedRates { lambda2_mu13, lambda1_mu23 })
    }

    /// Competition coefficient felt by the given prey from the other prey.
    pub fn competition_on(&self, prey: Prey) -> f64 {
        match prey {
            Prey::One => self.b1,
            Prey::Two => self.b2,
        }
    }

    /// Forward-invariant attracting set `x1 + x2 + ε̂ x3 <= R̂ / (d ε̂)`.
    ///
    /// `ε̂` is the smallest `c_k(j) / e_k(j)`, capped at `min(1, (r/d)²)`;
    /// above that cap `d W` on the boundary no longer dominates `(r + d)²/2`.
    pub fn absorbing_set(&self) -> AbsorbingSet {
        let cap = 1f64.min((self.r / self.d).powi(2));
        let eps_hat = self.envs.iter().flat_map(|e| [e.c1 / e.e1, e.c2 / e.e2]).fold(cap, f64::min);
        let r_hat = (self.r + self.d * eps_hat).powi(2) / 2.0;
        AbsorbingSet { eps_hat, r_hat, bound: r_hat / (self.d * eps_hat) }
    }

    pub fn check_assumptions(&self, law: &SwitchLaw) -> AssumptionReport {
        self.check_assumptions_with_tol(law, DEGENERACY_TOL)
    }

    /// Evaluates the four standing assumptions. Items 3/4 hold when some
    /// environment pair has a cross term larger than `tol` relative to the
    /// magnitude of its products.
    pub fn check_assumptions_with_tol(&self, law: &SwitchLaw, tol: f64) -> AssumptionReport {
        let stationary = law.stationary().ok();
        let predator_margin = stationary.as_ref().and_then(|pi| {
            Some([self.lambda3_on_prey_axis(pi, Prey::One).ok()?, self.lambda3_on_prey_axis(pi, Prey::Two).ok()?])
        });
        let item3 = self.cross_term_check(Prey::One, tol);
        let item4 = self.cross_term_check(Prey::Two, tol);
        AssumptionReport {
            item1: self.b1 < 1.0 && self.b2 < 1.0,
            b: [self.b1, self.b2],
            item2: predator_margin.is_some_and(|m| m[0] > 0.0 && m[1] > 0.0),
            predator_margin,
            stationary,
            item3: item3.holds,
            item4: item4.holds,
            cross_terms: [item3, item4],
        }
    }

    fn cross_term_check(&self, prey: Prey, tol: f64) -> CrossTermCheck {
        let mut best = CrossTermCheck { holds: false, near_degenerate: false, pair: None, value: 0.0, scale: 0.0 };
        let k = self.envs.len();
        for i in 0..k {
            for j in (i + 1)..k {
                let (a, b) = (&self.envs[i], &self.envs[j]);
                let p = a.c(prey) * b.e(prey);
                let q = b.c(prey) * a.e(prey);
                let value = p - q;
                let scale = p.abs().max(q.abs());
                if best.pair.is_none() || value.abs() / scale > best.value.abs() / best.scale {
                    best.pair = Some((i, j));
                    best.value = value;
                    best.scale = scale;
                }
            }
        }
        best.holds = best.value.abs() > tol * best.scale;
        best.near_degenerate = !best.holds && best.value != 0.0;
        best
    }
}

/// `(x_-, y_-) = (r(1 - b1), r(1 - b2)) / (1 - b1 b2)`.
pub fn competition_equilibrium(r: f64, b1: f64, b2: f64) -> Result<(f64, f64)> {
    let det = 1.0 - b1 * b2;
    if det == 0.0 {
        return Err(Error::Singular(format!("b1 b2 = 1 (b1 = {b1}, b2 = {b2})")));
    }
    if b1 >= 1.0 || b2 >= 1.0 {
        return Err(Error::precondition(format!("competition equilibrium requires b1, b2 < 1 (b1 = {b1}, b2 = {b2})")));
    }
    Ok((r * (1.0 - b1) / det, r * (1.0 - b2) / det))
}

/// `(d/e, (r - d/e)/c)` when `e r > d`.
fn planar_prey_predator(r: f64, d: f64, c: f64, e: f64) -> Option<(f64, f64)> {
    if e * r <= d {
        return None;
    }
    let prey = d / e;
    Some((prey, (r - prey) / c))
}

/// `r - (d/e) b - (r - d/e) c_inv / c_res`.
fn invasion_closed_form(r: f64, d: f64, b: f64, c_res: f64, e_res: f64, c_inv: f64) -> Option<f64> {
    let (prey, _) = planar_prey_predator(r, d, c_res, e_res)?;
    Some(r - prey * b - (r - prey) * c_inv / c_res)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedRates {
    pub lambda2_mu13: f64,
    pub lambda1_mu23: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbsorbingSet {
    pub eps_hat: f64,
    pub r_hat: f64,
    pub bound: f64,
}

impl AbsorbingSet {
    /// `W = x1 + x2 + ε̂ x3`.
    pub fn w(&self, x: &[f64; 3]) -> f64 {
        x[0] + x[1] + self.eps_hat * x[2]
    }

    pub fn contains(&self, x: &[f64; 3]) -> bool {
        self.w(x) <= self.bound
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossTermCheck {
    pub holds: bool,
    /// Nonzero, but below the degeneracy tolerance.
    pub near_degenerate: bool,
    /// Environment pair (0-based) with the largest relative cross term.
    pub pair: Option<(usize, usize)>,
    pub value: f64,
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// `b1 < 1` and `b2 < 1`.
    pub item1: bool,
    pub b: [f64; 2],
    /// `r Σ e_i(j) π_j > d` for both prey.
    pub item2: bool,
    /// `r Σ e_i(j) π_j - d` for prey 1 and 2; `None` when π is undefined.
    pub predator_margin: Option<[f64; 2]>,
    pub stationary: Option<Vec<f64>>,
    /// Some pair has `c1(i)e1(j) - c1(j)e1(i) != 0`.
    pub item3: bool,
    /// Same for `c2, e2`.
    pub item4: bool,
    pub cross_terms: [CrossTermCheck; 2],
}

impl AssumptionReport {
    pub fn all_hold(&self) -> bool {
        self.item1 && self.item2 && self.item3 && self.item4
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLaw {
    rates: Vec<Vec<f64>>,
}

impl TryFrom<RawLaw> for SwitchLaw {
    type Error = Error;

    fn try_from(raw: RawLaw) -> Result<Self> {
        SwitchLaw::new(raw.rates)
    }
}

/// Generator of the environment chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLaw")]
pub struct SwitchLaw {
    /// Row-major `K x K` generator; diagonal holds the negative row sums.
    rates: Vec<Vec<f64>>,
}

impl SwitchLaw {
    /// Builds a generator from a square matrix of transition rates. Diagonal
    /// entries may be given as 0 (filled in) or as the negative row sum.
    pub fn new(mut rates: Vec<Vec<f64>>) -> Result<Self> {
        let k = rates.len();
        if k < 2 {
            return Err(Error::param("switching law needs at least two environments"));
        }
        for (i, row) in rates.iter_mut().enumerate() {
            if row.len() != k {
                return Err(Error::param(format!("rate matrix row {i} has {} entries, expected {k}", row.len())));
            }
            let mut sum = 0.0;
            for (j, &q) in row.iter().enumerate() {
                if i != j {
                    if !(q.is_finite() && q >= 0.0) {
                        return Err(Error::param(format!("rate q[{i}][{j}] = {q} must be finite and >= 0")));
                    }
                    sum += q;
                }
            }
            let diag = row[i];
            if diag != 0.0 && (diag + sum).abs() > 1e-12 * sum.max(1.0) {
                return Err(Error::param(format!(
                    "diagonal q[{i}][{i}] = {diag} does not equal the negative row sum {}",
                    -sum
                )));
            }
            row[i] = -sum;
        }
        Ok(Self { rates })
    }

    pub fn two_state(q12: f64, q21: f64) -> Result<Self> {
        Self::new(vec![vec![0.0, q12], vec![q21, 0.0]])
    }

    /// Every rate multiplied by `scale`.
    pub fn scaled(&self, scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale >= 0.0) {
            return Err(Error::param(format!("rate scale must be finite and >= 0, got {scale}")));
        }
        Self::new(self.rates.iter().map(|row| row.iter().map(|q| q * scale).collect()).collect())
    }

    pub fn n_envs(&self) -> usize {
        self.rates.len()
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        self.rates[from][to]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.rates
    }

    /// Total rate of leaving `env`.
    pub fn exit_rate(&self, env: usize) -> f64 {
        -self.rates[env][env]
    }

    /// Strong connectivity of the transition graph.
    pub fn is_irreducible(&self) -> bool {
        let k = self.n_envs();
        let reach_all = |forward: bool| {
            let mut seen = vec![false; k];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for j in 0..k {
                    let q = if forward { self.rates[i][j] } else { self.rates[j][i] };
                    if i != j && q > 0.0 && !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach_all(true) && reach_all(false)
    }

    /// Stationary distribution `π Q = 0, Σ π = 1`.
    pub fn stationary(&self) -> Result<Vec<f64>> {
        if !self.is_irreducible() {
            return Err(Error::structural("switching chain is reducible; no unique stationary distribution"));
        }
        let k = self.n_envs();
        if k == 2 {
            let (q12, q21) = (self.rates[0][1], self.rates[1][0]);
            return Ok(vec![q21 / (q12 + q21), q12 / (q12 + q21)]);
        }
        // Solve Q^T π = 0 with the last balance equation replaced by Σ π = 1.
        let mut a = DMatrix::from_fn(k, k, |i, j| self.rates[j][i]);
        for j in 0..k {
            a[(k - 1, j)] = 1.0;
        }
        let mut rhs = DVector::zeros(k);
        rhs[k - 1] = 1.0;
        let pi =
            a.lu().solve(&rhs).ok_or_else(|| Error::Singular("stationary balance equations are singular".into()))?;
        if pi.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::structural("stationary distribution has non-positive entries"));
        }
        let total: f64 = pi.iter().sum();
        Ok(pi.iter().map(|p| p / total).collect())
    }
}

/// Parameters together with the switching law that drives them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SwitchedSystem {
    pub params: SystemParams,
    pub law: SwitchLaw,
}

impl SwitchedSystem {
    pub fn new(params: SystemParams, law: SwitchLaw) -> Result<Self> {
        if params.n_envs() != law.n_envs() {
            return Err(Error::param(format!(
                "{} coefficient sets but the switching law has {} states",
                params.n_envs(),
                law.n_envs()
            )));
        }
        Ok(Self { params, law })
    }

    pub fn stationary(&self) -> Result<Vec<f64>> {
        self.law.stationary()
    }

    pub fn with_law(&self, law: SwitchLaw) -> Result<Self> {
        Self::new(self.params.clone(), law)
    }
}
