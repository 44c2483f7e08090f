//! Lindblad-form superoperators: direct action on density matrices and the
//! column-stacked matrix representation of the same map.
//!
//! With `vec` stacking columns, `vec(AXB) = (Bᵀ ⊗ A) vec(X)`, so entry
//! `(i, j)` of a `d×d` operator lives at index `i + d·j`.

use crate::error::{invalid, Result};
use crate::operators::{check_dim, KickMap};
use crate::sparse::{SparseMatrix, TripletBuilder};
use crate::{CMatrix, C64};

/// One dissipative channel `γ (𝓑J[c] − A[c])`; without a kick map 𝓑 is the identity.
#[derive(Debug, Clone)]
pub struct Channel {
    pub rate: f64,
    pub jump: CMatrix,
    pub kick: Option<KickMap>,
}

/// `ρ̇ = −i[H, ρ] + Σ_k γ_k (𝓑_k J[c_k] − A[c_k]) ρ`.
#[derive(Debug, Clone)]
pub struct LindbladTerms {
    hamiltonian: CMatrix,
    channels: Vec<Channel>,
}

impl LindbladTerms {
    pub fn new(hamiltonian: CMatrix) -> Result<Self> {
        if !hamiltonian.is_square() {
            return Err(invalid("Hamiltonian must be square"));
        }
        Ok(Self { hamiltonian, channels: Vec::new() })
    }

    pub fn with_channel(mut self, rate: f64, jump: CMatrix, kick: Option<KickMap>) -> Result<Self> {
        let d = self.dim();
        if jump.shape() != (d, d) {
            return Err(invalid(format!("jump operator is {:?}, expected {d}x{d}", jump.shape())));
        }
        if let Some(k) = &kick {
            if k.dim() != d {
                return Err(invalid(format!("kick map acts on dimension {}, expected {d}", k.dim())));
            }
        }
        if !rate.is_finite() || rate < 0.0 {
            return Err(invalid(format!("channel rate must be non-negative, got {rate}")));
        }
        self.channels.push(Channel { rate, jump, kick });
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.hamiltonian.nrows()
    }

    pub fn hamiltonian(&self) -> &CMatrix {
        &self.hamiltonian
    }

    pub fn channels(&self) -> &[Channel] {
        &self.channels
    }

    /// Applies the map to a dense operator using plain matrix products.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_dim(rho, self.dim())?;
        let h = &self.hamiltonian;
        let mut out = (h * rho - rho * h) * C64::new(0.0, -1.0);
        for ch in &self.channels {
            let c = &ch.jump;
            let jumped = c * rho * c.adjoint();
            let jumped = match &ch.kick {
                Some(k) => k.apply(&jumped)?,
                None => jumped,
            };
            let cdc = c.adjoint() * c;
            let anti = (&cdc * rho + rho * &cdc) * C64::from(0.5);
            out += (jumped - anti) * C64::from(ch.rate);
        }
        Ok(out)
    }

    /// Column-stacked matrix of the map, of size `d² × d²`.
    pub fn vectorize(&self) -> SparseMatrix {
        let d = self.dim();
        let id = CMatrix::identity(d, d);
        let mut b = TripletBuilder::new(d * d, d * d);
        let h = &self.hamiltonian;
        b.add_kron(C64::new(0.0, -1.0), &id, h);
        b.add_kron(C64::new(0.0, 1.0), &h.transpose(), &id);
        for ch in &self.channels {
            let c = &ch.jump;
            let rate = C64::from(ch.rate);
            match &ch.kick {
                Some(k) => {
                    for (w, s) in k.branches() {
                        if w != 0.0 {
                            let sc = s * c;
                            b.add_kron(rate * w, &sc.conjugate(), &sc);
                        }
                    }
                }
                None => b.add_kron(rate, &c.conjugate(), c),
            }
            let cdc = c.adjoint() * c;
            b.add_kron(-rate * 0.5, &id, &cdc);
            b.add_kron(-rate * 0.5, &cdc.transpose(), &id);
        }
        b.build()
    }
}

/// Column-stacked `vec(ρ)`.
pub fn vec_of(rho: &CMatrix) -> Vec<C64> {
    rho.as_slice().to_vec()
}

/// Inverse of [`vec_of`].
pub fn unvec(v: &[C64], dim: usize) -> CMatrix {
    CMatrix::from_column_slice(dim, dim, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{build_basis, kick_superoperator, kick_weights_from_w};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
    }

    #[test]
    fn diagonal_hamiltonian_gives_diagonal_matrix() {
        let h = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::from(1.0),
            C64::from(-2.0),
            C64::from(0.5),
        ]));
        let m = LindbladTerms::new(h).unwrap().vectorize();
        assert!(m.is_diagonal());
    }

    #[test]
    fn empty_map_vectorizes_to_zero() {
        let m = LindbladTerms::new(CMatrix::zeros(4, 4)).unwrap().vectorize();
        assert_eq!(m.nnz(), 0);
        assert_eq!((m.nrows(), m.ncols()), (16, 16));
    }

    #[test]
    fn vectorized_matches_direct_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let basis = build_basis(1).unwrap();
        let kick = kick_superoperator(&basis, kick_weights_from_w()).unwrap();
        for _ in 0..10 {
            let h = random_matrix(&mut rng, 3);
            let h = (&h + h.adjoint()) * C64::from(0.5);
            let terms = LindbladTerms::new(h)
                .unwrap()
                .with_channel(0.7, random_matrix(&mut rng, 3), None)
                .unwrap()
                .with_channel(1.3, random_matrix(&mut rng, 3), Some(kick.clone()))
                .unwrap();
            let m = terms.vectorize();
            let rho = random_matrix(&mut rng, 3);
            let direct = terms.apply(&rho).unwrap();
            let via = unvec(&m.mul_vec(&vec_of(&rho)), 3);
            let diff = (direct - via).iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(diff <= 1e-13, "diff {diff}");
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let terms = LindbladTerms::new(CMatrix::zeros(3, 3)).unwrap();
        assert!(terms.clone().with_channel(1.0, CMatrix::zeros(2, 2), None).is_err());
        let kick = kick_superoperator(&build_basis(2).unwrap(), kick_weights_from_w()).unwrap();
        assert!(terms.clone().with_channel(1.0, CMatrix::zeros(3, 3), Some(kick)).is_err());
        assert!(terms.apply(&CMatrix::zeros(2, 2)).is_err());
        assert!(LindbladTerms::new(CMatrix::zeros(2, 3)).is_err());
    }
}
