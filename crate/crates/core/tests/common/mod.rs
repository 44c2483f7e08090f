#![allow(dead_code)]

use lindblad_atom::{build_basis, CMatrix, GeneratorKind, MomentumBasis, SimParams, C64};
use rand::Rng;

/// Random regime parameters with `δ > Ω_max > Γ`.
pub fn random_params<R: Rng>(rng: &mut R, n_max: usize) -> SimParams {
    let delta = rng.random_range(1e3..1e4);
    let omega_max = delta * rng.random_range(0.05..0.3);
    let gamma = omega_max * rng.random_range(0.02..0.5);
    SimParams { delta, omega_max, gamma, n_max, ..SimParams::default() }
}

pub fn random_kind<R: Rng>(rng: &mut R) -> GeneratorKind {
    GeneratorKind::ALL[rng.random_range(0..GeneratorKind::ALL.len())]
}

/// Random unit-trace positive state whose momentum support is `|n| ≤ reach`.
pub fn random_state<R: Rng>(rng: &mut R, basis: &MomentumBasis, has_internal: bool, reach: usize) -> CMatrix {
    let k = if has_internal { 2 } else { 1 };
    let d = basis.dim() * k;
    let inside = |i: usize| basis.level_at(i / k).unsigned_abs() as usize <= reach;
    let a = CMatrix::from_fn(d, d, |i, j| {
        if inside(i) {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * C64::from((j % 3) as f64 + 0.5)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let rho = &a * a.adjoint();
    let tr = rho.trace();
    let rho = rho / tr;
    (&rho + rho.adjoint()) * C64::from(0.5)
}

/// Random Hermitian matrix, not necessarily positive or normalised.
pub fn random_hermitian<R: Rng>(rng: &mut R, d: usize) -> CMatrix {
    let a = CMatrix::from_fn(d, d, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    (&a + a.adjoint()) * C64::from(0.5)
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Second moment of the dipole pattern by adaptive Simpson quadrature.
pub fn simpson_moment(k: i32) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let m = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b))
    }
    fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (l, r) = (simpson(f, a, m), simpson(f, m, b));
        if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
            return l + r + (l + r - whole) / 15.0;
        }
        adapt(f, a, m, l, tol / 2.0, depth - 1) + adapt(f, m, b, r, tol / 2.0, depth - 1)
    }
    let f = move |u: f64| 0.375 * (1.0 + u * u) * u.powi(k);
    adapt(&f, -1.0, 1.0, simpson(&f, -1.0, 1.0), 1e-15, 40)
}

pub fn small_basis(n_max: usize) -> MomentumBasis {
    build_basis(n_max).unwrap()
}
