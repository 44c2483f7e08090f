//! Momentum ladder, elementary operators and the superoperator building blocks.

use crate::error::{invalid, Result};
use crate::{CMatrix, C64};

const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Integer momentum levels `-n_max..=n_max` in units of ħk.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentumBasis {
    n_max: usize,
}

impl MomentumBasis {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn levels(&self) -> impl Iterator<Item = i64> {
        let n = self.n_max as i64;
        -n..=n
    }

    /// Matrix index of momentum level `n`, if it lies inside the ladder.
    pub fn index_of(&self, n: i64) -> Option<usize> {
        let shifted = n + self.n_max as i64;
        (0..self.dim() as i64).contains(&shifted).then_some(shifted as usize)
    }

    pub fn level_at(&self, index: usize) -> i64 {
        index as i64 - self.n_max as i64
    }

    /// Column vector of the momentum eigenstate `|n⟩`.
    pub fn ket(&self, n: i64) -> Option<nalgebra::DVector<C64>> {
        let i = self.index_of(n)?;
        let mut v = nalgebra::DVector::from_element(self.dim(), ZERO);
        v[i] = ONE;
        Some(v)
    }
}

pub fn build_basis(n_max: usize) -> Result<MomentumBasis> {
    if n_max < 1 {
        return Err(invalid("n_max must be at least 1"));
    }
    Ok(MomentumBasis { n_max })
}

/// A dense operator together with an exact Hermiticity flag.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    matrix: CMatrix,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps a square matrix; the flag is set only if `A = A†` holds bit for bit.
    pub fn new(matrix: CMatrix) -> Self {
        assert!(matrix.is_square(), "operators must be square");
        let hermitian = is_exactly_hermitian(&matrix);
        Self { matrix, hermitian }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_inner(self) -> CMatrix {
        self.matrix
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn adjoint(&self) -> OperatorMatrix {
        Self { matrix: self.matrix.adjoint(), hermitian: self.hermitian }
    }
}

pub(crate) fn is_exactly_hermitian(m: &CMatrix) -> bool {
    let n = m.nrows();
    m.is_square() && (0..n).all(|i| (0..=i).all(|j| m[(i, j)] == m[(j, i)].conj()))
}

/// `⟨n|K|n⟩ = n²/2`.
pub fn kinetic_operator(basis: &MomentumBasis) -> OperatorMatrix {
    let diag = basis.levels().map(|n| C64::new((n * n) as f64 / 2.0, 0.0));
    OperatorMatrix::new(CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(basis.dim(), diag)))
}

/// `R = Σ |n+1⟩⟨n|`, with the term leaving the ladder dropped so that `R|n_max⟩ = 0`.
pub fn shift_raising(basis: &MomentumBasis) -> OperatorMatrix {
    let d = basis.dim();
    let mut r = CMatrix::zeros(d, d);
    for i in 0..d - 1 {
        r[(i + 1, i)] = ONE;
    }
    OperatorMatrix::new(r)
}

/// Standing-wave Rabi operator `Ω_max sin kx = Ω_max (R† - R) / 2i`.
pub fn rabi_operator(basis: &MomentumBasis, omega_max: f64) -> Result<OperatorMatrix> {
    if !(omega_max > 0.0) || !omega_max.is_finite() {
        return Err(invalid(format!("omega_max must be positive, got {omega_max}")));
    }
    let d = basis.dim();
    let half = omega_max / 2.0;
    let mut m = CMatrix::zeros(d, d);
    // (R† - R)/(2i) = -i/2 R† + i/2 R
    for i in 0..d - 1 {
        m[(i, i + 1)] = C64::new(0.0, -half);
        m[(i + 1, i)] = C64::new(0.0, half);
    }
    Ok(OperatorMatrix::new(m))
}

/// Dipole emission pattern projected onto the standing-wave axis.
pub fn dipole_distribution(u: f64) -> f64 {
    0.375 * (1.0 + u * u)
}

/// Discrete recoil distribution on kicks of −1, 0, +1 ħk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KickWeights {
    pub v_minus: f64,
    pub v_zero: f64,
    pub v_plus: f64,
}

impl KickWeights {
    pub fn total(&self) -> f64 {
        self.v_minus + self.v_zero + self.v_plus
    }

    pub fn mean(&self) -> f64 {
        self.v_plus - self.v_minus
    }

    pub fn second_moment(&self) -> f64 {
        self.v_plus + self.v_minus
    }
}

/// Three-point kick distribution with the same zeroth, first and second
/// moments as [`dipole_distribution`] on `[-1, 1]`.
pub fn kick_weights_from_w() -> KickWeights {
    // 3-point Gauss-Legendre is exact for the degree-4 integrands involved
    let a = (0.6f64).sqrt();
    let nodes = [(-a, 5.0 / 9.0), (0.0, 8.0 / 9.0), (a, 5.0 / 9.0)];
    let moment = |k: i32| -> f64 { nodes.iter().map(|&(u, w)| w * u.powi(k) * dipole_distribution(u)).sum() };
    let (m0, m1, m2) = (moment(0), moment(1), moment(2));
    KickWeights {
        v_minus: (m2 - m1) / 2.0,
        v_zero: m0 - m2,
        v_plus: (m2 + m1) / 2.0,
    }
}

/// Recoil superoperator `Bρ = V(-1) RρR† + V(0) ρ + V(+1) R†ρR`.
///
/// The shift operator may act on the centre-of-mass factor of a composite
/// space, see [`KickMap::on_internal`].
#[derive(Debug, Clone, PartialEq)]
pub struct KickMap {
    weights: KickWeights,
    raising: CMatrix,
}

pub fn kick_superoperator(basis: &MomentumBasis, weights: KickWeights) -> Result<KickMap> {
    let w = weights;
    if [w.v_minus, w.v_zero, w.v_plus].iter().any(|v| !(*v >= 0.0)) || (w.total() - 1.0).abs() > 1e-12 {
        return Err(invalid("kick weights must be a probability distribution"));
    }
    Ok(KickMap { weights, raising: shift_raising(basis).into_inner() })
}

impl KickMap {
    pub fn weights(&self) -> KickWeights {
        self.weights
    }

    pub fn dim(&self) -> usize {
        self.raising.nrows()
    }

    /// The same map acting on the centre-of-mass factor of `com ⊗ internal`.
    pub fn on_internal(&self) -> KickMap {
        KickMap { weights: self.weights, raising: self.raising.kronecker(&CMatrix::identity(2, 2)) }
    }

    /// `(weight, S)` pairs with `Bρ = Σ weight · SρS†`.
    pub fn branches(&self) -> [(f64, CMatrix); 3] {
        let d = self.dim();
        [
            (self.weights.v_minus, self.raising.clone()),
            (self.weights.v_zero, CMatrix::identity(d, d)),
            (self.weights.v_plus, self.raising.adjoint()),
        ]
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_dim(rho, self.dim())?;
        let r = &self.raising;
        let rd = r.adjoint();
        let w = self.weights;
        Ok(r * rho * &rd * C64::from(w.v_minus) + rho * C64::from(w.v_zero) + &rd * rho * r * C64::from(w.v_plus))
    }
}

/// `ρ ↦ J[c]ρ − A[c]ρ = cρc† − ½{c†c, ρ}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dissipator {
    jump: CMatrix,
    jump_dag_jump: CMatrix,
}

pub fn lindblad_dissipator(c: &CMatrix) -> Result<Dissipator> {
    if !c.is_square() {
        return Err(invalid(format!("jump operator must be square, got {:?}", c.shape())));
    }
    Ok(Dissipator { jump_dag_jump: c.adjoint() * c, jump: c.clone() })
}

impl Dissipator {
    pub fn dim(&self) -> usize {
        self.jump.nrows()
    }

    pub fn jump(&self) -> &CMatrix {
        &self.jump
    }

    /// `cρc†` alone.
    pub fn jump_part(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_dim(rho, self.dim())?;
        Ok(&self.jump * rho * self.jump.adjoint())
    }

    /// `½{c†c, ρ}` alone.
    pub fn anticommutator_part(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_dim(rho, self.dim())?;
        Ok((&self.jump_dag_jump * rho + rho * &self.jump_dag_jump) * C64::from(0.5))
    }

    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        Ok(self.jump_part(rho)? - self.anticommutator_part(rho)?)
    }
}

pub(crate) fn check_dim(rho: &CMatrix, dim: usize) -> Result<()> {
    if rho.shape() != (dim, dim) {
        return Err(invalid(format!("expected a {dim}x{dim} operator, got {:?}", rho.shape())));
    }
    Ok(())
}

/// Internal lowering operator `σ = |g⟩⟨e|` (g at index 0).
pub fn sigma() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO])
}

/// `σ_z = σ†σ − σσ† = diag(−1, +1)`.
pub fn sigma_z() -> CMatrix {
    let s = sigma();
    s.adjoint() * &s - &s * s.adjoint()
}

/// `A_com ⊗ B_internal`.
pub fn tensor(com: &CMatrix, internal: &CMatrix) -> CMatrix {
    com.kronecker(internal)
}
