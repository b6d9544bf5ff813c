//! Numerical Lie brackets from central-difference Jacobians of the planar
//! vector fields, compared with the closed-form bracket fields.

use lvswitch::bracket::{bracket_constants, bracket_determinants, bracket_fields, planar_field};
use lvswitch::model::{Prey, SystemParams};
use rand::{Rng, SeedableRng};

type Field<'a> = Box<dyn Fn(f64, f64) -> [f64; 2] + 'a>;

fn jacobian(f: &dyn Fn(f64, f64) -> [f64; 2], u: f64, v: f64) -> [[f64; 2]; 2] {
    let hu = 1e-5 * u.abs().max(1.0);
    let hv = 1e-5 * v.abs().max(1.0);
    let (fu_p, fu_m) = (f(u + hu, v), f(u - hu, v));
    let (fv_p, fv_m) = (f(u, v + hv), f(u, v - hv));
    [
        [(fu_p[0] - fu_m[0]) / (2.0 * hu), (fv_p[0] - fv_m[0]) / (2.0 * hv)],
        [(fu_p[1] - fu_m[1]) / (2.0 * hu), (fv_p[1] - fv_m[1]) / (2.0 * hv)],
    ]
}

fn apply(m: [[f64; 2]; 2], x: [f64; 2]) -> [f64; 2] {
    [m[0][0] * x[0] + m[0][1] * x[1], m[1][0] * x[0] + m[1][1] * x[1]]
}

/// `[F, G] = DG·F - DF·G`.
pub fn lie_bracket(f: &dyn Fn(f64, f64) -> [f64; 2], g: &dyn Fn(f64, f64) -> [f64; 2], u: f64, v: f64) -> [f64; 2] {
    let a = apply(jacobian(g, u, v), f(u, v));
    let b = apply(jacobian(f, u, v), g(u, v));
    [a[0] - b[0], a[1] - b[1]]
}

pub fn rel_err(a: [f64; 2], b: [f64; 2]) -> f64 {
    let diff = (a[0] - b[0]).hypot(a[1] - b[1]);
    diff / a[0].hypot(a[1]).max(b[0].hypot(b[1]))
}

/// Determinant and the sum of the magnitudes of its two terms.
pub fn det(a: [f64; 2], b: [f64; 2]) -> (f64, f64) {
    (a[0] * b[1] - a[1] * b[0], (a[0] * b[1]).abs() + (a[1] * b[0]).abs())
}

/// Worst relative errors over the sampled points.
#[derive(Debug, Default, Clone, Copy)]
pub struct FieldErrors {
    pub g0: f64,
    pub g1: f64,
    pub g2: f64,
    pub det: f64,
}

impl FieldErrors {
    pub fn max(self, o: FieldErrors) -> FieldErrors {
        FieldErrors { g0: self.g0.max(o.g0), g1: self.g1.max(o.g1), g2: self.g2.max(o.g2), det: self.det.max(o.det) }
    }
}

/// Compares closed forms with numerical brackets at `n` random points of `[0.1, 5]²`.
pub fn field_errors(p: &SystemParams, prey: Prey, seed: u64, n: usize) -> FieldErrors {
    let k = bracket_constants(p, prey, [0, 1]).unwrap();
    let f1: Field = Box::new(move |u, v| planar_field(p, prey, 0, u, v).unwrap());
    let f2: Field = Box::new(move |u, v| planar_field(p, prey, 1, u, v).unwrap());
    let g0: Field = Box::new(|u, v| {
        let (a, b) = (f1(u, v), f2(u, v));
        [a[0] - b[0], a[1] - b[1]]
    });
    let g1_closed: Field = Box::new(|u, v| bracket_fields(&k, p, u, v).g1);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut worst = FieldErrors::default();
    for _ in 0..n {
        let (u, v) = (rng.random_range(0.1..5.0), rng.random_range(0.1..5.0));
        let closed = bracket_fields(&k, p, u, v);
        let g1 = lie_bracket(&*f1, &*g0, u, v);
        let g2 = lie_bracket(&*g0, &*g1_closed, u, v);
        let (d01, d02) = bracket_determinants(&k, p, u, v);
        let (m01, s01) = det(closed.g0, closed.g1);
        let (m02, s02) = det(closed.g0, closed.g2);
        worst = worst.max(FieldErrors {
            g0: rel_err(g0(u, v), closed.g0),
            g1: rel_err(g1, closed.g1),
            g2: rel_err(g2, closed.g2),
            det: ((d01 - m01).abs() / s01).max((d02 - m02).abs() / s02),
        });
    }
    worst
}
