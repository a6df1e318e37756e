//! Boson Fock space with a total-occupation cutoff.

use std::collections::HashMap;

use num_complex::Complex64;

use super::OneParticleSpace;
use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

/// Occupation-number basis with `Σ n_i <= n_max`, graded lexicographic order
/// (total occupation first, then lexicographic in `(n_1, ..., n_d)`).
///
/// Creation above the cutoff truncates to zero (`P a* P`), so canonical
/// commutation relations hold exactly on the subspace `Σ n_i <= n_max - 1`
/// and the truncation defect is confined to the top sector.
#[derive(Debug, Clone)]
pub struct BosonFockSpace {
    one_particle: OneParticleSpace,
    n_max: u32,
    basis: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

fn enumerate_sector(d: usize, total: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
    if d == 1 {
        prefix.push(total);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in 0..=total {
        prefix.push(first);
        enumerate_sector(d - 1, total - first, prefix, out);
        prefix.pop();
    }
}

impl BosonFockSpace {
    pub fn new(one_particle: OneParticleSpace, n_max: u32) -> Result<Self> {
        if n_max < 1 {
            return Err(Error::InvalidArgument(
                "boson cutoff n_max must be at least 1".into(),
            ));
        }
        let d = one_particle.dim();
        let mut basis = Vec::new();
        for total in 0..=n_max {
            let mut prefix = Vec::with_capacity(d);
            enumerate_sector(d, total, &mut prefix, &mut basis);
        }
        let index = basis
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, occ)| (occ, i))
            .collect();
        Ok(Self {
            one_particle,
            n_max,
            basis,
            index,
        })
    }

    pub fn one_particle(&self) -> &OneParticleSpace {
        &self.one_particle
    }

    pub fn modes(&self) -> usize {
        self.one_particle.dim()
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[Vec<u32>] {
        &self.basis
    }

    pub fn index_of(&self, occupation: &[u32]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    pub fn occupation(&self, index: usize) -> &[u32] {
        &self.basis[index]
    }

    pub fn total_occupation(&self, index: usize) -> u32 {
        self.basis[index].iter().sum()
    }

    pub fn vacuum_index(&self) -> usize {
        0
    }

    /// Unit vector for the vacuum Ω_b.
    pub fn vacuum(&self) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[self.vacuum_index()] = Complex64::new(1.0, 0.0);
        v
    }

    /// Matrix of the elementary annihilator `a_i` on the truncated basis.
    pub fn annihilator_mode(&self, i: usize) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (col, occ) in self.basis.iter().enumerate() {
            if occ[i] == 0 {
                continue;
            }
            let mut lowered = occ.clone();
            lowered[i] -= 1;
            let row = self.index[&lowered];
            m[(row, col)] = Complex64::new((occ[i] as f64).sqrt(), 0.0);
        }
        m
    }

    /// `A(f) = Σ_i f_i^* a_i` (anti-linear in `f`).
    pub fn annihilator(&self, f: &CVector) -> Result<CMatrix> {
        let d = self.modes();
        if f.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.len(),
            });
        }
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (col, occ) in self.basis.iter().enumerate() {
            for i in 0..d {
                if occ[i] == 0 || f[i] == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let mut lowered = occ.clone();
                lowered[i] -= 1;
                let row = self.index[&lowered];
                m[(row, col)] += f[i].conj() * (occ[i] as f64).sqrt();
            }
        }
        Ok(m)
    }

    /// `A(f)^*` with hard truncation at the cutoff.
    pub fn creator(&self, f: &CVector) -> Result<CMatrix> {
        Ok(self.annihilator(f)?.adjoint())
    }

    /// Field operator `A(f) + A(f)^*` (self-adjoint for any `f`).
    pub fn field(&self, f: &CVector) -> Result<CMatrix> {
        let a = self.annihilator(f)?;
        let adj = a.adjoint();
        Ok(a + adj)
    }

    /// Second quantization `dΓ_b(T) = Σ_{ij} T_ij a_i† a_j`. Number-conserving,
    /// so exact on the truncated space.
    pub fn second_quantize(&self, t: &CMatrix) -> Result<CMatrix> {
        let d = self.modes();
        if t.nrows() != d || t.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: t.nrows(),
            });
        }
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (col, occ) in self.basis.iter().enumerate() {
            for j in 0..d {
                if occ[j] == 0 {
                    continue;
                }
                for i in 0..d {
                    let tij = t[(i, j)];
                    if tij == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    // a_i† a_j |occ>
                    let amp = if i == j {
                        occ[j] as f64
                    } else {
                        ((occ[j] as f64) * (occ[i] as f64 + 1.0)).sqrt()
                    };
                    let target = if i == j {
                        col
                    } else {
                        let mut moved = occ.clone();
                        moved[j] -= 1;
                        moved[i] += 1;
                        self.index[&moved]
                    };
                    m[(target, col)] += tij * amp;
                }
            }
        }
        Ok(m)
    }

    /// `dΓ_b(I)`, the number operator.
    pub fn number_operator(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (i, occ) in self.basis.iter().enumerate() {
            m[(i, i)] = Complex64::new(occ.iter().sum::<u32>() as f64, 0.0);
        }
        m
    }

    /// Diagonal projector onto `Σ n_i <= max_total`.
    pub fn occupation_projector(&self, max_total: u32) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for (i, occ) in self.basis.iter().enumerate() {
            if occ.iter().sum::<u32>() <= max_total {
                m[(i, i)] = Complex64::new(1.0, 0.0);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator_core::{frobenius_norm, operator_norm};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_cvec(rng: &mut StdRng, d: usize) -> CVector {
        CVector::from_fn(d, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        })
    }

    fn space(d: usize, n_max: u32) -> BosonFockSpace {
        BosonFockSpace::new(OneParticleSpace::anonymous(d), n_max).unwrap()
    }

    #[test]
    fn dimension_is_binomial() {
        // Σ_{n<=n_max} C(d+n-1, n) = C(d+n_max, n_max)
        let f = space(3, 4);
        assert_eq!(f.dim(), 35); // C(7, 4)
        let g = space(2, 2);
        assert_eq!(g.dim(), 6);
    }

    #[test]
    fn graded_lex_order_starts_at_vacuum() {
        let f = space(2, 2);
        assert_eq!(f.occupation(0), &[0, 0]);
        assert_eq!(f.occupation(1), &[0, 1]);
        assert_eq!(f.occupation(2), &[1, 0]);
        assert_eq!(f.occupation(3), &[0, 2]);
        assert_eq!(f.occupation(4), &[1, 1]);
        assert_eq!(f.occupation(5), &[2, 0]);
    }

    #[test]
    fn single_quantum_lowering() {
        let f = space(2, 2);
        let mut e1 = CVector::zeros(2);
        e1[0] = Complex64::new(1.0, 0.0);
        let a = f.annihilator(&e1).unwrap();
        let one_zero = f.index_of(&[1, 0]).unwrap();
        let vac = f.vacuum_index();
        assert!((a[(vac, one_zero)] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn vacuum_annihilation() {
        let f = space(3, 2);
        let mut rng = StdRng::seed_from_u64(1);
        let v = random_cvec(&mut rng, 3);
        let a = f.annihilator(&v).unwrap();
        let col = a * f.vacuum();
        assert!(col.norm() < 1e-15);
    }

    #[test]
    fn ccr_below_cutoff() {
        let f = space(3, 3);
        let mut rng = StdRng::seed_from_u64(2);
        let fv = random_cvec(&mut rng, 3);
        let gv = random_cvec(&mut rng, 3);
        let af = f.annihilator(&fv).unwrap();
        let ag = f.annihilator(&gv).unwrap();
        let agc = ag.adjoint();
        let comm = &af * &agc - &agc * &af;
        let inner: Complex64 = fv.dotc(&gv);
        let p = f.occupation_projector(f.n_max() - 1);
        let expected = &p * CMatrix::identity(f.dim(), f.dim()) * inner;
        let defect = frobenius_norm(&(&p * comm * &p - expected));
        assert!(defect < 1e-12, "CCR defect below cutoff: {defect}");
        let comm2 = &af * &ag - &ag * &af;
        assert!(frobenius_norm(&comm2) < 1e-12);
    }

    #[test]
    fn number_operator_counts() {
        let f = space(3, 3);
        let n = f.number_operator();
        let dg = f.second_quantize(&CMatrix::identity(3, 3)).unwrap();
        assert!(frobenius_norm(&(&n - &dg)) < 1e-13);
        let idx = f.index_of(&[1, 0, 2]).unwrap();
        assert!((n[(idx, idx)].re - 3.0).abs() < 1e-15);
    }

    #[test]
    fn second_quantize_diagonal_frequencies() {
        let f = space(2, 2);
        let t = CMatrix::from_fn(2, 2, |i, j| {
            if i == j {
                Complex64::new([0.4, 1.3][i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let dg = f.second_quantize(&t).unwrap();
        let idx = f.index_of(&[0, 1]).unwrap();
        assert!((dg[(idx, idx)] - Complex64::new(1.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn second_quantize_commutator_with_creator() {
        // [dΓ_b(T), A(f)*] = A(Tf)* on states below the cutoff.
        let f = space(3, 4);
        let mut rng = StdRng::seed_from_u64(3);
        let tr = CMatrix::from_fn(3, 3, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let t = (&tr + tr.adjoint()).map(|z| z * 0.5);
        let fv = random_cvec(&mut rng, 3);
        let dg = f.second_quantize(&t).unwrap();
        let cre = f.creator(&fv).unwrap();
        let tf = &t * &fv;
        let cre_tf = f.creator(&tf).unwrap();
        let comm = &dg * &cre - &cre * &dg;
        // Compare below cutoff: both sides applied to Σn <= n_max - 1 states.
        let p = f.occupation_projector(f.n_max() - 1);
        let defect = frobenius_norm(&((&comm - &cre_tf) * &p));
        assert!(defect < 1e-10, "boson commutation lemma defect {defect}");

        // Annihilator version needs no cutoff care on the domain side but the
        // result is compared below cutoff as well.
        let ann = f.annihilator(&fv).unwrap();
        let ann_tf = f.annihilator(&tf).unwrap();
        let comm2 = &dg * &ann - &ann * &dg;
        let defect2 = frobenius_norm(&((&comm2 + &ann_tf) * &p));
        assert!(defect2 < 1e-10);
    }

    #[test]
    fn boson_bound_lemma() {
        // ||A(f)Ψ|| <= ||K^{-1/2} f|| ||dΓ(K)^{1/2} Ψ|| for injective positive
        // diagonal K, and the creation analogue with the extra ||f|| ||Ψ|| term.
        let f = space(3, 3);
        let mut rng = StdRng::seed_from_u64(4);
        let kdiag = [0.3, 0.9, 1.7];
        let k = CMatrix::from_fn(3, 3, |i, j| {
            if i == j {
                Complex64::new(kdiag[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        let dgk = f.second_quantize(&k).unwrap();
        // dΓ(K)^{1/2} is diagonal here.
        let mut half = CMatrix::zeros(f.dim(), f.dim());
        for (i, occ) in f.basis().iter().enumerate() {
            let e: f64 = occ
                .iter()
                .enumerate()
                .map(|(m, &n)| kdiag[m] * n as f64)
                .sum();
            half[(i, i)] = Complex64::new(e.sqrt(), 0.0);
            assert!((dgk[(i, i)].re - e).abs() < 1e-12);
        }
        for _ in 0..10 {
            let fv = random_cvec(&mut rng, 3);
            let kinv_f: f64 = (0..3).map(|i| fv[i].norm_sqr() / kdiag[i]).sum::<f64>().sqrt();
            // Ψ strictly below cutoff so creation is exact.
            let mut psi = CVector::from_fn(f.dim(), |i, _| {
                if f.total_occupation(i) + 1 <= f.n_max() {
                    Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            psi /= Complex64::new(psi.norm(), 0.0);
            let a = f.annihilator(&fv).unwrap();
            let lhs = (a * &psi).norm();
            let rhs = kinv_f * (&half * &psi).norm();
            assert!(lhs <= rhs + 1e-12, "annihilator bound: {lhs} vs {rhs}");
            let c = f.creator(&fv).unwrap();
            let lhs_c = (c * &psi).norm();
            let rhs_c = kinv_f * (&half * &psi).norm() + fv.norm() * psi.norm();
            assert!(lhs_c <= rhs_c + 1e-12, "creator bound: {lhs_c} vs {rhs_c}");
        }
    }

    #[test]
    fn spectral_mapping_of_creators() {
        // For f supported in T-eigenmodes with eigenvalues <= a, A(f)* maps
        // Ran E_{dΓ(T)}([0,R]) into Ran E([0,R+a]) and A(f) leaves
        // Ran E([0,Λ]) invariant.
        let f = space(3, 3);
        let tdiag = [0.5, 0.8, 2.0];
        // f supported on modes 0, 1: a = 0.8.
        let mut fv = CVector::zeros(3);
        fv[0] = Complex64::new(0.7, 0.1);
        fv[1] = Complex64::new(-0.3, 0.4);
        let a_shift = 0.8;
        let r = 1.4;
        let dgt = {
            let t = CMatrix::from_fn(3, 3, |i, j| {
                if i == j {
                    Complex64::new(tdiag[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            f.second_quantize(&t).unwrap()
        };
        let energy = |i: usize| dgt[(i, i)].re;
        let cre = f.creator(&fv).unwrap();
        let ann = f.annihilator(&fv).unwrap();
        for col in 0..f.dim() {
            if energy(col) <= r {
                for row in 0..f.dim() {
                    if energy(row) > r + a_shift + 1e-12 {
                        assert!(cre[(row, col)].norm() < 1e-14);
                    }
                }
            }
            // Annihilators never raise the energy.
            for row in 0..f.dim() {
                if energy(row) > energy(col) + 1e-12 {
                    assert!(ann[(row, col)].norm() < 1e-14);
                }
            }
        }
        // Norm sanity: truncated annihilator is bounded.
        assert!(operator_norm(&ann).is_finite());
    }
}
