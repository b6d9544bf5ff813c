//! Strong bracket condition on the prey/predator faces.
//!
//! On the face of prey `i` the planar fields are
//! `F_j(u, v) = (u (r - u - c_i(j) v), v (e_i(j) u - d))` with `u` the prey and
//! `v` the predator. With `A = c_i(1) - c_i(2)`, `B = e_i(1) - e_i(2)`,
//! `C = c_i(1) e_i(2) - c_i(2) e_i(1)`, `s = r + d` and the bracket
//! `[F, G] = DG·F - DF·G`:
//!
//! ```text
//! G0 = F1 - F2  = uv (-A, B)
//! G1 = [F1, G0] = uv (Ad - (A + C) u, Cv - Bu + Br)
//! G2 = [G0, G1] = uv ( u (A(A + 2C) v + ABs - 2ABu - BCu),
//!                      v ((3A + 2C) B u - ACv - ABs) )
//! det[G0 G1] = u²v² ((BC + 2AB) u - ABs - ACv)
//! det[G0 G2] = u²v² (B²Cu² + 2AB²u² + A²Cv² - AB²su + A²Bsv - 4A²Buv - 4ABCuv)
//! ```
//!
//! Restricted to `det[G0 G1] = 0`, `det[G0 G2]` is a multiple of
//! `A² v (A + C)(Bs + Cv)`, so both vanish together in the open quadrant only
//! when `A + C = 0` (along a whole curve) or at `v = -Bs/C`, which the first
//! determinant then sends to `u = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FaceId, Prey, SystemParams, DEGENERACY_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketConstants {
    pub prey: Prey,
    pub envs: [usize; 2],
    pub a: f64,
    pub b: f64,
    pub c: f64,
    /// `max(|c_i(1) e_i(2)|, |c_i(2) e_i(1)|)`, the scale `c` is compared against.
    pub c_scale: f64,
}

impl BracketConstants {
    pub fn c_is_degenerate(&self, tol: f64) -> bool {
        self.c.abs() < tol * self.c_scale
    }

    /// `A + C = 0` with `A ≠ 0`: the two determinants share a zero curve.
    pub fn a_plus_c_is_degenerate(&self, tol: f64) -> bool {
        let scale = self.a.abs().max(self.c.abs());
        scale > 0.0 && (self.a + self.c).abs() < tol * scale
    }
}

pub fn bracket_constants(p: &SystemParams, prey: Prey, envs: [usize; 2]) -> Result<BracketConstants> {
    if envs[0] == envs[1] {
        return Err(Error::param("environment pair must be distinct"));
    }
    let e1 = p.env(envs[0])?;
    let e2 = p.env(envs[1])?;
    let (c1, c2, f1, f2) = (e1.c(prey), e2.c(prey), e1.e(prey), e2.e(prey));
    Ok(BracketConstants {
        prey,
        envs,
        a: c1 - c2,
        b: f1 - f2,
        c: c1 * f2 - c2 * f1,
        c_scale: (c1 * f2).abs().max((c2 * f1).abs()),
    })
}

/// The planar field of environment `env` on the face of `prey`.
pub fn planar_field(p: &SystemParams, prey: Prey, env: usize, u: f64, v: f64) -> Result<[f64; 2]> {
    let c = p.env(env)?;
    Ok([u * (p.r - u - c.c(prey) * v), v * (c.e(prey) * u - p.d)])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketFields {
    pub g0: [f64; 2],
    pub g1: [f64; 2],
    pub g2: [f64; 2],
}

pub fn bracket_fields(k: &BracketConstants, p: &SystemParams, u: f64, v: f64) -> BracketFields {
    let (a, b, c, d, r) = (k.a, k.b, k.c, p.d, p.r);
    let s = r + d;
    let uv = u * v;
    BracketFields {
        g0: [-a * uv, b * uv],
        g1: [uv * (a * d - (a + c) * u), uv * (c * v - b * u + b * r)],
        g2: [
            uv * u * (a * (a + 2.0 * c) * v + a * b * s - 2.0 * a * b * u - b * c * u),
            uv * v * ((3.0 * a + 2.0 * c) * b * u - a * c * v - a * b * s),
        ],
    }
}

/// `(det[G0 G1], det[G0 G2])` from the closed-form polynomials.
pub fn bracket_determinants(k: &BracketConstants, p: &SystemParams, u: f64, v: f64) -> (f64, f64) {
    let (a, b, c) = (k.a, k.b, k.c);
    let s = p.r + p.d;
    let w = u * u * v * v;
    let det01 = w * ((b * c + 2.0 * a * b) * u - a * b * s - a * c * v);
    let det02 = w
        * (b * b * c * u * u + 2.0 * a * b * b * u * u + a * a * c * v * v - a * b * b * s * u + a * a * b * s * v
            - 4.0 * a * a * b * u * v
            - 4.0 * a * b * c * u * v);
    (det01, det02)
}

/// Sums of absolute term values of the two polynomials, for relative zero tests.
fn determinant_scales(k: &BracketConstants, p: &SystemParams, u: f64, v: f64) -> (f64, f64) {
    let (a, b, c) = (k.a.abs(), k.b.abs(), k.c.abs());
    let s = p.r + p.d;
    let w = u * u * v * v;
    let s01 = w * ((b * c + 2.0 * a * b) * u + a * b * s + a * c * v);
    let s02 = w
        * (b * b * c * u * u
            + 2.0 * a * b * b * u * u
            + a * a * c * v * v
            + a * b * b * s * u
            + a * a * b * s * v
            + 4.0 * a * a * b * u * v
            + 4.0 * a * b * c * u * v);
    (s01, s02)
}

/// The predator level `-B(d + r)/C` on which both determinants can vanish
/// together; `None` when `C` is zero.
pub fn degenerate_x3(k: &BracketConstants, p: &SystemParams) -> Option<f64> {
    (k.c != 0.0).then(|| -k.b * (p.d + p.r) / k.c)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BracketSample {
    pub x_prey: f64,
    pub x3: f64,
    pub det01: f64,
    pub det02: f64,
    pub spans: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub constants: BracketConstants,
    pub c_nondegenerate: bool,
    pub a_plus_c_degenerate: bool,
    pub degenerate_x3: Option<f64>,
    /// Whether `degenerate_x3` is positive, i.e. inside the open quadrant's
    /// predator range (the matching prey level is then 0).
    pub degenerate_x3_positive: bool,
    pub samples: Vec<BracketSample>,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketReport {
    pub face: FaceId,
    pub pairs: Vec<PairReport>,
    pub pass: bool,
}

/// Square grid of sample points on the open quadrant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BracketGrid {
    pub prey_range: [f64; 2],
    pub predator_range: [f64; 2],
    pub n: usize,
}

impl Default for BracketGrid {
    fn default() -> Self {
        Self { prey_range: [0.05, 5.0], predator_range: [0.05, 10.0], n: 25 }
    }
}

impl BracketGrid {
    pub fn points(&self) -> Result<Vec<(f64, f64)>> {
        let ok = |r: [f64; 2]| r[0] > 0.0 && r[1] > r[0] && r[1].is_finite();
        if self.n < 2 || !ok(self.prey_range) || !ok(self.predator_range) {
            return Err(Error::param("bracket grid needs n >= 2 and positive increasing ranges"));
        }
        let lin = |r: [f64; 2], k: usize| r[0] + (r[1] - r[0]) * k as f64 / (self.n - 1) as f64;
        Ok((0..self.n)
            .flat_map(|i| (0..self.n).map(move |j| (i, j)))
            .map(|(i, j)| (lin(self.prey_range, i), lin(self.predator_range, j)))
            .collect())
    }
}

/// Relative size below which a determinant counts as zero at a sample point.
pub const DET_ZERO_TOL: f64 = 1e-12;

/// Checks every environment pair on the face of `prey`; the face passes when
/// some pair has a nondegenerate `C`, no shared zero curve, and spans at every
/// grid point.
pub fn strong_bracket_check(p: &SystemParams, face: FaceId, grid: &BracketGrid) -> Result<BracketReport> {
    let prey = match face {
        FaceId::Prey1Predator => Prey::One,
        FaceId::Prey2Predator => Prey::Two,
        other => return Err(Error::param(format!("the bracket check applies to prey/predator faces, not {other}"))),
    };
    let points = grid.points()?;
    let k = p.n_envs();
    let mut pairs = Vec::new();
    for i in 0..k {
        for j in i + 1..k {
            let kc = bracket_constants(p, prey, [i, j])?;
            let samples: Vec<BracketSample> = points
                .iter()
                .map(|&(u, v)| {
                    let (det01, det02) = bracket_determinants(&kc, p, u, v);
                    let (s01, s02) = determinant_scales(&kc, p, u, v);
                    let spans = det01.abs() > DET_ZERO_TOL * s01 || det02.abs() > DET_ZERO_TOL * s02;
                    BracketSample { x_prey: u, x3: v, det01, det02, spans }
                })
                .collect();
            let c_nondegenerate = !kc.c_is_degenerate(DEGENERACY_TOL);
            let a_plus_c_degenerate = kc.a_plus_c_is_degenerate(DEGENERACY_TOL);
            let dx3 = degenerate_x3(&kc, p);
            let pass = c_nondegenerate && !a_plus_c_degenerate && samples.iter().all(|s| s.spans);
            pairs.push(PairReport {
                constants: kc,
                c_nondegenerate,
                a_plus_c_degenerate,
                degenerate_x3: dx3,
                degenerate_x3_positive: dx3.is_some_and(|v| v > 0.0),
                samples,
                pass,
            });
        }
    }
    let pass = pairs.iter().any(|r| r.pass);
    Ok(BracketReport { face, pairs, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::EnvCoeffs;

    #[test]
    fn constants_example_51() {
        let k = bracket_constants(&SystemParams::example_51(), Prey::One, [0, 1]).unwrap();
        assert!((k.a + 0.25).abs() < 1e-15);
        assert!((k.b + 0.25).abs() < 1e-15);
        assert!((k.c + 0.1125).abs() < 1e-15);
    }

    #[test]
    fn constants_example_52() {
        let k = bracket_constants(&SystemParams::example_52(), Prey::One, [0, 1]).unwrap();
        assert!((k.a + 0.25).abs() < 1e-15);
        assert!((k.b + 0.7).abs() < 1e-15);
        assert!((k.c - 0.0675).abs() < 1e-15);
    }

    #[test]
    fn same_env_rejected() {
        assert!(bracket_constants(&SystemParams::example_51(), Prey::One, [1, 1]).is_err());
    }

    #[test]
    fn zero_constants_give_zero_fields() {
        let e = EnvCoeffs::new(0.3, 0.4, 0.5, 0.6).unwrap();
        let p = SystemParams::new(1.0, 0.1, 0.5, 0.5, vec![e, e]).unwrap();
        let k = bracket_constants(&p, Prey::Two, [0, 1]).unwrap();
        let f = bracket_fields(&k, &p, 0.7, 1.3);
        assert!([f.g0, f.g1, f.g2].iter().flatten().all(|&v| v == 0.0));
        let rep = strong_bracket_check(&p, FaceId::Prey2Predator, &BracketGrid::default()).unwrap();
        assert!(!rep.pass);
    }

    #[test]
    fn examples_pass_on_both_faces() {
        for p in [SystemParams::example_51(), SystemParams::example_52()] {
            for face in [FaceId::Prey1Predator, FaceId::Prey2Predator] {
                let rep = strong_bracket_check(&p, face, &BracketGrid::default()).unwrap();
                assert!(rep.pass, "{face}");
            }
        }
    }

    #[test]
    fn rejects_non_planar_face() {
        let p = SystemParams::example_51();
        assert!(strong_bracket_check(&p, FaceId::Prey1Prey2, &BracketGrid::default()).is_err());
    }

    #[test]
    fn shared_zero_curve_fails() {
        // c(1) = 0.5, c(2) = 0.3, e(1) = 1.0, e(2) = 0.2: A = 0.2, C = 0.1 - 0.3 = -0.2.
        let envs = vec![EnvCoeffs::new(0.5, 0.5, 1.0, 0.5).unwrap(), EnvCoeffs::new(0.3, 0.3, 0.2, 0.5).unwrap()];
        let p = SystemParams::new(1.0, 0.1, 0.5, 0.5, envs).unwrap();
        let k = bracket_constants(&p, Prey::One, [0, 1]).unwrap();
        assert!((k.a + k.c).abs() < 1e-15);
        let rep = strong_bracket_check(&p, FaceId::Prey1Predator, &BracketGrid::default()).unwrap();
        assert!(rep.pairs[0].c_nondegenerate && rep.pairs[0].a_plus_c_degenerate);
        assert!(!rep.pass);
    }
}
