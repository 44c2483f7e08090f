//! Dressed-state operator functions of the Rabi operator.
//!
//! All functions of `ΩΩ†` are evaluated by a dense Hermitian eigensolve:
//! the scalar formula is applied to each eigenvalue and the result is
//! reassembled in the eigenbasis.

use nalgebra::DVector;

use crate::error::{invalid, Result};
use crate::operators::{build_basis, rabi_operator, tensor, MomentumBasis, OperatorMatrix};
use crate::params::SimParams;
use crate::{CMatrix, C64};

#[derive(Debug, Clone)]
pub struct DressedFunctions {
    /// `Δ = (δ² + ΩΩ†)^{1/2}`.
    pub big_delta: OperatorMatrix,
    pub sin_theta: OperatorMatrix,
    pub cos_theta: OperatorMatrix,
    /// Upper dressed energy `(δ + Δ)/2`.
    pub e1: OperatorMatrix,
    /// Lower dressed energy `(δ − Δ)/2`.
    pub e2: OperatorMatrix,
    /// Dressed lowering operator `a = |2⟩⟨1|` on `com ⊗ internal`.
    pub a_lowering: OperatorMatrix,
}

pub fn dressed_functions(basis: &MomentumBasis, params: &SimParams) -> Result<DressedFunctions> {
    let omega = rabi_operator(basis, params.omega_max)?;
    dressed_functions_of(&omega, params.delta)
}

/// Dressed functions for an explicit Rabi operator, which must be Hermitian.
pub fn dressed_functions_of(omega: &OperatorMatrix, delta: f64) -> Result<DressedFunctions> {
    if !omega.is_hermitian() {
        return Err(invalid("dressed functions need a Hermitian Rabi operator"));
    }
    if !(delta > 0.0) {
        return Err(invalid(format!("delta must be positive, got {delta}")));
    }
    let om = omega.matrix();
    let spectral = Spectral::new(&(om * om.adjoint()));

    let big_delta = spectral.map(|x| (delta * delta + x).sqrt());
    // δ − Δ written without cancellation
    let lower = |x: f64| -x / (2.0 * (delta + (delta * delta + x).sqrt()));
    let e2 = spectral.map(lower);
    let e1 = spectral.map(|x| delta - lower(x));
    let norm = |x: f64| {
        let big = (delta * delta + x).sqrt();
        (2.0 * (delta * delta + delta * big + x)).sqrt().recip()
    };
    let cos_theta = spectral.map(|x| ((delta * delta + x).sqrt() + delta) * norm(x));
    let sin_theta = hermitian_part(&(om * spectral.map(norm)));

    let (g, e) = (projector(0, 0), projector(1, 1));
    let (ge, eg) = (projector(0, 1), projector(1, 0));
    let sc = &sin_theta * &cos_theta;
    let a = tensor(&sc, &g) + tensor(&(&cos_theta * &cos_theta), &ge)
        - tensor(&(&sin_theta * &sin_theta), &eg)
        - tensor(&sc, &e);

    Ok(DressedFunctions {
        big_delta: OperatorMatrix::new(big_delta),
        sin_theta: OperatorMatrix::new(sin_theta),
        cos_theta: OperatorMatrix::new(cos_theta),
        e1: OperatorMatrix::new(e1),
        e2: OperatorMatrix::new(e2),
        a_lowering: OperatorMatrix::new(a),
    })
}

/// Light-shift operator `ΩΩ†/4δ − Ω²Ω†²/16δ³` of the truncated expansion of the
/// dressed energies, so that `E₁ ≈ δ + S` and `E₂ ≈ −S`.
pub fn light_shift(omega: &CMatrix, delta: f64) -> CMatrix {
    let oo = omega * omega.adjoint();
    let oooo = omega * omega * omega.adjoint() * omega.adjoint();
    hermitian_part(&(oo * C64::from(1.0 / (4.0 * delta)) - oooo * C64::from(1.0 / (16.0 * delta.powi(3)))))
}

/// Second-order expansions `(E₁, E₂)` of the dressed energies.
pub fn taylor_energies(omega: &CMatrix, delta: f64) -> (CMatrix, CMatrix) {
    let s = light_shift(omega, delta);
    let n = s.nrows();
    (CMatrix::identity(n, n) * C64::from(delta) + &s, -s)
}

/// Paper-scale convenience: exact minus expanded `E₁`, as a max-entry error.
pub fn e1_expansion_error(params: &SimParams) -> Result<f64> {
    let basis = build_basis(params.n_max)?;
    let omega = rabi_operator(&basis, params.omega_max)?;
    let exact = dressed_functions_of(&omega, params.delta)?;
    let (e1_taylor, _) = taylor_energies(omega.matrix(), params.delta);
    Ok((exact.e1.matrix() - e1_taylor).iter().map(|v| v.norm()).fold(0.0, f64::max))
}

struct Spectral {
    vectors: CMatrix,
    values: DVector<f64>,
}

impl Spectral {
    fn new(h: &CMatrix) -> Self {
        let eig = hermitian_part(h).symmetric_eigen();
        Self { vectors: eig.eigenvectors, values: eig.eigenvalues }
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let u = &self.vectors;
        let mut scaled = u.clone();
        for (j, &x) in self.values.iter().enumerate() {
            let fx = f(x.max(0.0));
            scaled.column_mut(j).scale_mut(fx);
        }
        hermitian_part(&(scaled * u.adjoint()))
    }
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

fn projector(i: usize, j: usize) -> CMatrix {
    let mut p = CMatrix::zeros(2, 2);
    p[(i, j)] = C64::new(1.0, 0.0);
    p
}
