//! The five master equations as vectorized Lindblad generators.
//!
//! Internal-state equations act on `com ⊗ internal`; the adiabatic ones act
//! on the centre-of-mass space alone. Only the exact equation keeps the
//! `δσ†σ` term; the approximations are written in the frame where it is absent.

use std::fmt;
use std::str::FromStr;

use crate::dressed::light_shift;
use crate::error::{invalid, Error, Result};
use crate::operators::{
    build_basis, kick_superoperator, kick_weights_from_w, kinetic_operator, rabi_operator, sigma, sigma_z, tensor,
    KickMap, MomentumBasis,
};
use crate::params::SimParams;
use crate::sparse::SparseMatrix;
use crate::superop::LindbladTerms;
use crate::{CMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GeneratorKind {
    Full,
    StandardAdiabatic,
    SophisticatedAdiabatic,
    Secular,
    Dressed,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 5] = [
        GeneratorKind::Full,
        GeneratorKind::StandardAdiabatic,
        GeneratorKind::SophisticatedAdiabatic,
        GeneratorKind::Secular,
        GeneratorKind::Dressed,
    ];

    /// Short name used on the command line and in output files.
    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::Full => "full",
            GeneratorKind::StandardAdiabatic => "standard",
            GeneratorKind::SophisticatedAdiabatic => "sophisticated",
            GeneratorKind::Secular => "secular",
            GeneratorKind::Dressed => "dressed",
        }
    }

    pub fn has_internal(self) -> bool {
        matches!(self, GeneratorKind::Full | GeneratorKind::Secular | GeneratorKind::Dressed)
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeneratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid(format!("unknown equation '{s}'")))
    }
}

/// A Lindblad generator together with its column-stacked sparse matrix.
#[derive(Debug, Clone)]
pub struct Generator {
    kind: GeneratorKind,
    has_internal: bool,
    stiffness_scale: f64,
    terms: LindbladTerms,
    matrix: SparseMatrix,
}

impl Generator {
    pub fn build(kind: GeneratorKind, basis: &MomentumBasis, params: &SimParams) -> Result<Generator> {
        match kind {
            GeneratorKind::Full => full_generator(basis, params),
            GeneratorKind::StandardAdiabatic => standard_adiabatic_generator(basis, params),
            GeneratorKind::SophisticatedAdiabatic => sophisticated_adiabatic_generator(basis, params),
            GeneratorKind::Secular => secular_generator(basis, params),
            GeneratorKind::Dressed => dressed_generator(basis, params),
        }
    }

    /// Wraps an arbitrary Lindblad map under a kind label. The kind only
    /// selects the integrator's trace policy and error messages.
    pub fn from_terms(kind: GeneratorKind, has_internal: bool, terms: LindbladTerms, stiffness_scale: f64) -> Result<Generator> {
        if has_internal && !terms.dim().is_multiple_of(2) {
            return Err(invalid("composite generator needs an even state dimension"));
        }
        if !(stiffness_scale > 0.0) {
            return Err(invalid("stiffness scale must be positive"));
        }
        let matrix = terms.vectorize();
        Ok(Generator { kind, has_internal, stiffness_scale, terms, matrix })
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    pub fn has_internal(&self) -> bool {
        self.has_internal
    }

    /// Side length of the density matrices this generator acts on.
    pub fn dim_state(&self) -> usize {
        self.terms.dim()
    }

    /// Fastest Hamiltonian frequency scale present.
    pub fn stiffness_scale(&self) -> f64 {
        self.stiffness_scale
    }

    pub fn terms(&self) -> &LindbladTerms {
        &self.terms
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Direct (non-vectorized) action on a density matrix.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        self.terms.apply(rho)
    }

    /// `out = L vec(ρ)`.
    pub fn apply_vec(&self, rho: &[C64], out: &mut [C64]) {
        self.matrix.mul_vec_into(rho, out);
    }
}

struct Pieces {
    kinetic: CMatrix,
    omega: CMatrix,
    kick: KickMap,
    delta: f64,
    gamma: f64,
    n: usize,
}

impl Pieces {
    fn new(basis: &MomentumBasis, params: &SimParams) -> Result<Pieces> {
        params.validate()?;
        if basis.n_max() != params.n_max {
            return Err(invalid(format!(
                "basis truncation {} does not match parameters ({})",
                basis.n_max(),
                params.n_max
            )));
        }
        Ok(Pieces {
            kinetic: kinetic_operator(basis).into_inner(),
            omega: rabi_operator(basis, params.omega_max)?.into_inner(),
            kick: kick_superoperator(basis, kick_weights_from_w())?,
            delta: params.delta,
            gamma: params.gamma,
            n: basis.dim(),
        })
    }

    /// `ΩΩ†/4δ`.
    fn potential(&self) -> CMatrix {
        hermitian(&(&self.omega * self.omega.adjoint() * C64::from(1.0 / (4.0 * self.delta))))
    }

    #[cfg(test)]
    /// `Ω²Ω†²/16δ³`.
    fn fourth_order(&self) -> CMatrix {
        let o = &self.omega;
        let od = o.adjoint();
        hermitian(&(o * o * &od * &od * C64::from(1.0 / (16.0 * self.delta.powi(3)))))
    }

    fn scaled_omega(&self) -> CMatrix {
        &self.omega * C64::from(1.0 / (2.0 * self.delta))
    }

    fn id_com(&self) -> CMatrix {
        CMatrix::identity(self.n, self.n)
    }

    fn adiabatic_stiffness(&self, params: &SimParams) -> f64 {
        params.omega_max * params.omega_max / (4.0 * self.delta)
    }
}

fn hermitian(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

/// Exact two-level equation: `H = p²/2 + δσ†σ + ½(Ωσ† + Ω†σ)`, `Γ(𝓑J[σ] − A[σ])`.
pub fn full_generator(basis: &MomentumBasis, params: &SimParams) -> Result<Generator> {
    let p = Pieces::new(basis, params)?;
    let id2 = CMatrix::identity(2, 2);
    let s = sigma();
    let h = tensor(&p.kinetic, &id2)
        + tensor(&p.id_com(), &(s.adjoint() * &s)) * C64::from(p.delta)
        + (tensor(&p.omega, &s.adjoint()) + tensor(&p.omega.adjoint(), &s)) * C64::from(0.5);
    let terms = LindbladTerms::new(hermitian(&h))?.with_channel(p.gamma, tensor(&p.id_com(), &s), Some(p.kick.on_internal()))?;
    Generator::from_terms(GeneratorKind::Full, true, terms, p.delta)
}

/// `H = p²/2 − ΩΩ†/4δ`, `Γ(𝓑J[Ω/2δ] − A[Ω/2δ])` on the centre of mass alone.
pub fn standard_adiabatic_generator(basis: &MomentumBasis, params: &SimParams) -> Result<Generator> {
    let p = Pieces::new(basis, params)?;
    let h = &p.kinetic - p.potential();
    let terms = LindbladTerms::new(h)?.with_channel(p.gamma, p.scaled_omega(), Some(p.kick.clone()))?;
    Generator::from_terms(GeneratorKind::StandardAdiabatic, false, terms, p.adiabatic_stiffness(params))
}

/// The standard adiabatic equation with the extra potential `+Ω²Ω†²/16δ³`.
pub fn sophisticated_adiabatic_generator(basis: &MomentumBasis, params: &SimParams) -> Result<Generator> {
    let p = Pieces::new(basis, params)?;
    let h = &p.kinetic - light_shift(&p.omega, p.delta);
    let terms = LindbladTerms::new(h)?.with_channel(p.gamma, p.scaled_omega(), Some(p.kick.clone()))?;
    Generator::from_terms(GeneratorKind::SophisticatedAdiabatic, false, terms, p.adiabatic_stiffness(params))
}

/// `H = p²/2 + (ΩΩ†/4δ)σ_z` with spontaneous emission plus the two
/// state-changing channels `Ω†σ/2δ` and `Ωσ†/2δ`.
pub fn secular_generator(basis: &MomentumBasis, params: &SimParams) -> Result<Generator> {
    let p = Pieces::new(basis, params)?;
    let id2 = CMatrix::identity(2, 2);
    let s = sigma();
    let h = tensor(&p.kinetic, &id2) + tensor(&p.potential(), &sigma_z());
    let scale = C64::from(1.0 / (2.0 * p.delta));
    let terms = LindbladTerms::new(h)?
        .with_channel(p.gamma, tensor(&p.id_com(), &s), Some(p.kick.on_internal()))?
        .with_channel(p.gamma, tensor(&p.omega.adjoint(), &s) * scale, None)?
        .with_channel(p.gamma, tensor(&p.omega, &s.adjoint()) * scale, None)?;
    Generator::from_terms(GeneratorKind::Secular, true, terms, p.adiabatic_stiffness(params))
}

/// `H = p²/2 + (ΩΩ†/4δ − Ω²Ω†²/16δ³)σ_z` with spontaneous emission and the
/// state-preserving kicked channel `(Ω/2δ)σ_z`.
pub fn dressed_generator(basis: &MomentumBasis, params: &SimParams) -> Result<Generator> {
    let p = Pieces::new(basis, params)?;
    let id2 = CMatrix::identity(2, 2);
    let h = tensor(&p.kinetic, &id2) + tensor(&light_shift(&p.omega, p.delta), &sigma_z());
    let kick = p.kick.on_internal();
    let terms = LindbladTerms::new(h)?
        .with_channel(p.gamma, tensor(&p.id_com(), &sigma()), Some(kick.clone()))?
        .with_channel(p.gamma, tensor(&p.scaled_omega(), &sigma_z()), Some(kick))?;
    Generator::from_terms(GeneratorKind::Dressed, true, terms, p.adiabatic_stiffness(params))
}

/// Builds the basis from `params.n_max` and then the requested generator.
pub fn build_generator(kind: GeneratorKind, params: &SimParams) -> Result<Generator> {
    let basis = build_basis(params.n_max)?;
    Generator::build(kind, &basis, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superop::{unvec, vec_of};

    fn paper(n_max: usize) -> (MomentumBasis, SimParams) {
        (build_basis(n_max).unwrap(), SimParams { n_max, ..SimParams::default() })
    }

    fn ground_zero(basis: &MomentumBasis, internal: bool) -> CMatrix {
        let d = basis.dim() * if internal { 2 } else { 1 };
        let mut rho = CMatrix::zeros(d, d);
        let i = basis.index_of(0).unwrap() * if internal { 2 } else { 1 };
        rho[(i, i)] = C64::from(1.0);
        rho
    }

    #[test]
    fn kinds_and_dimensions() {
        let (basis, params) = paper(3);
        for kind in GeneratorKind::ALL {
            let g = Generator::build(kind, &basis, &params).unwrap();
            assert_eq!(g.kind(), kind);
            assert_eq!(g.has_internal(), kind.has_internal());
            let d = if kind.has_internal() { 14 } else { 7 };
            assert_eq!(g.dim_state(), d);
            assert_eq!(g.matrix().nrows(), d * d);
            assert_eq!(kind.name().parse::<GeneratorKind>().unwrap(), kind);
        }
        assert!("bogus".parse::<GeneratorKind>().is_err());
        let full = Generator::build(GeneratorKind::Full, &basis, &params).unwrap();
        assert_eq!(full.stiffness_scale(), 1e4);
        let std = Generator::build(GeneratorKind::StandardAdiabatic, &basis, &params).unwrap();
        assert_eq!(std.stiffness_scale(), 100.0);
    }

    #[test]
    fn mismatched_basis_rejected() {
        let (basis, _) = paper(3);
        let params = SimParams { n_max: 4, ..SimParams::default() };
        assert!(Generator::build(GeneratorKind::Full, &basis, &params).is_err());
    }

    #[test]
    fn full_annihilates_trace_of_ground_zero_state() {
        let (basis, params) = paper(4);
        let g = full_generator(&basis, &params).unwrap();
        let out = g.apply(&ground_zero(&basis, true)).unwrap();
        assert!(out.trace().norm() < 1e-12);
    }

    #[test]
    fn adiabatic_potential_depth() {
        let (basis, params) = paper(25);
        let p = Pieces::new(&basis, &params).unwrap();
        let top = p.potential().symmetric_eigenvalues().iter().cloned().fold(f64::MIN, f64::max);
        assert!((top - 100.0).abs() < 1.0, "depth {top}");
        let extra = p.fourth_order().symmetric_eigenvalues().iter().cloned().fold(f64::MIN, f64::max);
        assert!((extra - 1.0).abs() < 0.02, "extra {extra}");
    }

    #[test]
    fn sophisticated_minus_standard_is_the_fourth_order_commutator() {
        let (basis, params) = paper(6);
        let std = standard_adiabatic_generator(&basis, &params).unwrap();
        let soph = sophisticated_adiabatic_generator(&basis, &params).unwrap();
        let diff = soph.matrix().sub(std.matrix());
        let p = Pieces::new(&basis, &params).unwrap();
        let comm = LindbladTerms::new(p.fourth_order()).unwrap().vectorize();
        let resid = diff.sub(&comm).max_abs();
        // both sides carry the rounding of the O(100) potential entries
        assert!(resid <= 1e-12 * std.matrix().max_abs(), "resid {resid}");
        assert!(comm.max_abs() > 0.1);
    }

    #[test]
    fn zero_field_standard_keeps_populations() {
        // with the light switched off only the kinetic commutator is left
        let basis = build_basis(3).unwrap();
        let terms = LindbladTerms::new(kinetic_operator(&basis).into_inner()).unwrap();
        let mut rho = CMatrix::from_fn(7, 7, |i, j| C64::new(1.0 / (1 + i + j) as f64, (i as f64 - j as f64) * 0.1));
        rho = hermitian(&rho);
        let out = terms.apply(&rho).unwrap();
        assert!((0..7).all(|i| out[(i, i)].norm() == 0.0));
    }

    #[test]
    fn secular_pumps_excited_population() {
        let (basis, params) = paper(25);
        let g = secular_generator(&basis, &params).unwrap();
        let out = g.apply(&ground_zero(&basis, true)).unwrap();
        let ee: f64 = (0..basis.dim()).map(|i| out[(2 * i + 1, 2 * i + 1)].re).sum();
        // Γ ⟨0|Ω†Ω|0⟩ / 4δ² = Γ Ω_max² / 8δ²
        let expect = params.gamma * params.omega_max.powi(2) / (8.0 * params.delta.powi(2));
        assert!((expect - 1.0).abs() < 1e-15);
        assert!((ee - expect).abs() < 1e-12, "ee rate {ee}");
    }

    #[test]
    fn secular_keeps_coherence_blocks_off_populations() {
        let (basis, params) = paper(3);
        let g = secular_generator(&basis, &params).unwrap();
        let d = g.dim_state();
        let rho = CMatrix::from_fn(d, d, |i, j| {
            if i % 2 != j % 2 {
                C64::new(0.1 * (i + 1) as f64, 0.05 * j as f64)
            } else {
                C64::from(0.0)
            }
        });
        let out = g.apply(&rho).unwrap();
        for i in 0..d {
            for j in 0..d {
                if i % 2 == j % 2 {
                    assert_eq!(out[(i, j)].norm(), 0.0);
                }
            }
        }
    }

    #[test]
    fn dressed_extra_jump_keeps_internal_state() {
        let (basis, params) = paper(3);
        let g = dressed_generator(&basis, &params).unwrap();
        let ch = &g.terms().channels()[1];
        let d = g.dim_state();
        for s in 0..2 {
            // arbitrary operator living in one internal block only
            let rho = CMatrix::from_fn(d, d, |i, j| {
                if i % 2 == s && j % 2 == s {
                    C64::new(1.0 / (1 + i + j) as f64, 0.0)
                } else {
                    C64::from(0.0)
                }
            });
            let jumped = &ch.jump * &rho * ch.jump.adjoint();
            let kicked = ch.kick.as_ref().unwrap().apply(&jumped).unwrap();
            for out in [&jumped, &kicked] {
                for i in 0..d {
                    for j in 0..d {
                        if i % 2 != s || j % 2 != s {
                            assert_eq!(out[(i, j)].norm(), 0.0);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn vectorized_generators_match_direct_action() {
        let (basis, params) = paper(2);
        for kind in GeneratorKind::ALL {
            let g = Generator::build(kind, &basis, &params).unwrap();
            let d = g.dim_state();
            let rho = CMatrix::from_fn(d, d, |i, j| C64::new(1.0 / (1 + i + 2 * j) as f64, 0.01 * (i as f64 - j as f64)));
            let direct = g.apply(&rho).unwrap();
            let via = unvec(&g.matrix().mul_vec(&vec_of(&rho)), d);
            let scale = direct.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let diff = (direct - via).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(diff <= 1e-14 * scale.max(1.0), "{kind}: diff {diff}");
        }
    }
}
