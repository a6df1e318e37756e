//! Truncated boson and fermion Fock spaces over finite one-particle spaces.
//!
//! Bosons carry a total-occupation cutoff (the computational stand-in for an
//! energy ball of the free Hamiltonian); fermions live on the full 2^d
//! bitstring space. Basis orders are fixed — graded lexicographic for boson
//! occupation vectors, integer order for fermion bitstrings — so index maps
//! are reproducible.

mod boson;
mod fermion;

pub use boson::BosonFockSpace;
pub use fermion::{FermionFockSpace, PsiFactor};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::CMatrix;

/// Metadata attached to a one-particle mode.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeLabel {
    pub momentum: [f64; 3],
    /// Polarization index for photons, spin slot for fermions.
    pub channel: u8,
    /// Distinguishes particle/antiparticle slots in fermion spaces.
    pub antiparticle: bool,
}

impl ModeLabel {
    pub fn new(momentum: [f64; 3], channel: u8, antiparticle: bool) -> Self {
        Self {
            momentum,
            channel,
            antiparticle,
        }
    }
}

/// A finite-dimensional one-particle space with uniquely labeled modes.
#[derive(Debug, Clone)]
pub struct OneParticleSpace {
    labels: Vec<ModeLabel>,
}

impl OneParticleSpace {
    pub fn new(labels: Vec<ModeLabel>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidArgument(
                "one-particle space needs at least one mode".into(),
            ));
        }
        for i in 0..labels.len() {
            for j in (i + 1)..labels.len() {
                if labels[i] == labels[j] {
                    return Err(Error::ModeCollision { first: i, second: j });
                }
            }
        }
        Ok(Self { labels })
    }

    /// Anonymous labels for abstract tests.
    pub fn anonymous(dim: usize) -> Self {
        let labels = (0..dim)
            .map(|i| ModeLabel::new([i as f64, 0.0, 0.0], 0, false))
            .collect();
        Self { labels }
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[ModeLabel] {
        &self.labels
    }
}

/// Fermion ⊗ boson state space with fermion-major Kronecker indexing.
#[derive(Debug, Clone)]
pub struct CompositeSpace {
    pub fermion: FermionFockSpace,
    pub boson: BosonFockSpace,
}

impl CompositeSpace {
    pub fn new(fermion: FermionFockSpace, boson: BosonFockSpace) -> Self {
        Self { fermion, boson }
    }

    pub fn dim(&self) -> usize {
        self.fermion.dim() * self.boson.dim()
    }

    /// Composite index of (fermion basis state, boson basis state).
    pub fn index(&self, fermion_index: usize, boson_index: usize) -> usize {
        fermion_index * self.boson.dim() + boson_index
    }

    /// Index of the joint vacuum Ω_f ⊗ Ω_b.
    pub fn vacuum_index(&self) -> usize {
        self.index(self.fermion.vacuum_index(), self.boson.vacuum_index())
    }

    /// `left ⊗ right` with `None` meaning the identity factor.
    pub fn kron_lift(&self, left: Option<&CMatrix>, right: Option<&CMatrix>) -> Result<CMatrix> {
        let df = self.fermion.dim();
        let db = self.boson.dim();
        if let Some(l) = left {
            if l.nrows() != df || l.ncols() != df {
                return Err(Error::DimensionMismatch {
                    expected: df,
                    got: l.nrows(),
                });
            }
        }
        if let Some(r) = right {
            if r.nrows() != db || r.ncols() != db {
                return Err(Error::DimensionMismatch {
                    expected: db,
                    got: r.nrows(),
                });
            }
        }
        let id_f;
        let id_b;
        let l = match left {
            Some(l) => l,
            None => {
                id_f = CMatrix::identity(df, df);
                &id_f
            }
        };
        let r = match right {
            Some(r) => r,
            None => {
                id_b = CMatrix::identity(db, db);
                &id_b
            }
        };
        Ok(kron(l, r))
    }
}

/// Kronecker product with row-major (left-index-major) convention.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == Complex64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::{frobenius_norm, HermitianOperator};
    use crate::CVector;

    #[test]
    fn kron_identity_times_identity() {
        let i2 = CMatrix::identity(2, 2);
        let i3 = CMatrix::identity(3, 3);
        assert_eq!(kron(&i2, &i3), CMatrix::identity(6, 6));
    }

    #[test]
    fn kron_mixed_product_property() {
        let x = CMatrix::from_fn(2, 2, |i, j| Complex64::new((i + 2 * j) as f64, 1.0));
        let y = CMatrix::from_fn(3, 3, |i, j| Complex64::new(i as f64, j as f64));
        let i2 = CMatrix::identity(2, 2);
        let i3 = CMatrix::identity(3, 3);
        let lhs = kron(&x, &i3) * kron(&i2, &y);
        let rhs = kron(&x, &y);
        assert!(frobenius_norm(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn composite_free_spectrum_is_pairwise_sums() {
        // H_el ⊗ I + I ⊗ H_ph on dims (4, 4): spectrum must be all sums.
        let el = [0.0, 1.0, 1.5, 2.5];
        let ph = [0.0, 0.7, 1.1, 2.0];
        let h_el = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                Complex64::new(el[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let h_ph = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                Complex64::new(ph[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let i4 = CMatrix::identity(4, 4);
        let total = kron(&h_el, &i4) + kron(&i4, &h_ph);
        let h = HermitianOperator::new(&total).unwrap();
        let mut sums: Vec<f64> = el
            .iter()
            .flat_map(|a| ph.iter().map(move |b| a + b))
            .collect();
        sums.sort_by(f64::total_cmp);
        for (k, s) in sums.iter().enumerate() {
            assert!((h.eigenvalues()[k] - s).abs() < 1e-12);
        }
    }

    #[test]
    fn tensor_shift_on_composite_windows() {
        // Raising operators on each factor shift composite spectral windows
        // by the sum of the factor shifts.
        let one_f = OneParticleSpace::anonymous(2);
        let one_b = OneParticleSpace::anonymous(2);
        let fer = FermionFockSpace::new(one_f).unwrap();
        let bos = BosonFockSpace::new(one_b, 2).unwrap();
        let comp = CompositeSpace::new(fer.clone(), bos.clone());

        let ef = [0.6, 1.0];
        let eb = [0.5, 0.9];
        let tf = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                Complex64::new(ef[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let tb = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                Complex64::new(eb[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let k_f = fer.second_quantize(&tf).unwrap();
        let k_b = bos.second_quantize(&tb).unwrap();
        let k = comp.kron_lift(Some(&k_f), None).unwrap() + comp.kron_lift(None, Some(&k_b)).unwrap();
        let hk = HermitianOperator::new(&k).unwrap();

        // B1 raises fermion energy by at most max ef, B2 by max eb.
        let mut f = CVector::zeros(2);
        f[1] = Complex64::new(1.0, 0.0);
        let b1 = fer.creator(&f).unwrap();
        let mut g = CVector::zeros(2);
        g[1] = Complex64::new(1.0, 0.0);
        let b2 = bos.creator(&g).unwrap();
        let lifted = kron(&b1, &b2);

        let shift = ef[1] + eb[1];
        let l = 1.1;
        let p_in = hk.spectral_projector(crate::operator_core::SpectralWindow::new(0.0, l).unwrap());
        let p_out_far = hk.spectral_projector(
            crate::operator_core::SpectralWindow::new(l + shift + 1e-9, 1e6).unwrap(),
        );
        let leak = frobenius_norm(&(&p_out_far * &lifted * &p_in));
        assert!(leak < 1e-12, "leak {leak}");
    }
}
