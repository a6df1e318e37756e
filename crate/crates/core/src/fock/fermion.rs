//! Fermion Fock space on bitstrings with occupation-parity sign convention.

use num_complex::Complex64;

use super::OneParticleSpace;
use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

/// Full fermion Fock space over `d` modes: all `2^d` bitstrings, integer
/// order. Mode `i` occupies bit `i`; the sign of `b_i` acting on a bitstring
/// is the parity of the occupied modes below `i`.
#[derive(Debug, Clone)]
pub struct FermionFockSpace {
    one_particle: OneParticleSpace,
}

/// One factor `ψ(f, g) = B(f) + B(g)^*` of a fermionic product.
#[derive(Debug, Clone)]
pub struct PsiFactor {
    /// Annihilation argument `f` (`B(f)` is anti-linear in it).
    pub annihilation: CVector,
    /// Creation argument `g` (`B(g)^*` is linear in it).
    pub creation: CVector,
}

impl PsiFactor {
    pub fn new(annihilation: CVector, creation: CVector) -> Self {
        Self {
            annihilation,
            creation,
        }
    }

    pub fn annihilator_only(f: CVector) -> Self {
        let d = f.len();
        Self::new(f, CVector::zeros(d))
    }

    pub fn creator_only(g: CVector) -> Self {
        let d = g.len();
        Self::new(CVector::zeros(d), g)
    }

    /// The adjoint factor: `ψ(f, g)^* = ψ(g, f)`.
    pub fn adjoint(&self) -> Self {
        Self::new(self.creation.clone(), self.annihilation.clone())
    }
}

const MAX_MODES: usize = 24;

fn parity_below(state: usize, i: usize) -> f64 {
    let mask = (1usize << i) - 1;
    if (state & mask).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

impl FermionFockSpace {
    pub fn new(one_particle: OneParticleSpace) -> Result<Self> {
        if one_particle.dim() > MAX_MODES {
            return Err(Error::InvalidArgument(format!(
                "fermion space with {} modes exceeds the {} mode limit",
                one_particle.dim(),
                MAX_MODES
            )));
        }
        Ok(Self { one_particle })
    }

    pub fn one_particle(&self) -> &OneParticleSpace {
        &self.one_particle
    }

    pub fn modes(&self) -> usize {
        self.one_particle.dim()
    }

    pub fn dim(&self) -> usize {
        1usize << self.modes()
    }

    pub fn vacuum_index(&self) -> usize {
        0
    }

    pub fn vacuum(&self) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    pub fn occupation(&self, index: usize, mode: usize) -> bool {
        index & (1 << mode) != 0
    }

    pub fn total_occupation(&self, index: usize) -> u32 {
        index.count_ones()
    }

    /// Elementary annihilator `b_i`.
    pub fn annihilator_mode(&self, i: usize) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for state in 0..self.dim() {
            if state & (1 << i) != 0 {
                let row = state & !(1 << i);
                m[(row, state)] = Complex64::new(parity_below(state, i), 0.0);
            }
        }
        m
    }

    /// `B(f) = Σ_i f_i^* b_i` (anti-linear in `f`).
    pub fn annihilator(&self, f: &CVector) -> Result<CMatrix> {
        let d = self.modes();
        if f.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: f.len(),
            });
        }
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for state in 0..self.dim() {
            for i in 0..d {
                if state & (1 << i) != 0 && f[i] != Complex64::new(0.0, 0.0) {
                    let row = state & !(1 << i);
                    m[(row, state)] += f[i].conj() * parity_below(state, i);
                }
            }
        }
        Ok(m)
    }

    /// `B(g)^* = Σ_i g_i b_i†` (linear in `g`).
    pub fn creator(&self, g: &CVector) -> Result<CMatrix> {
        Ok(self.annihilator(g)?.adjoint())
    }

    /// Second quantization `dΓ_f(T) = Σ_{ij} T_ij b_i† b_j` (exact).
    pub fn second_quantize(&self, t: &CMatrix) -> Result<CMatrix> {
        let d = self.modes();
        if t.nrows() != d || t.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: t.nrows(),
            });
        }
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for state in 0..self.dim() {
            for j in 0..d {
                if state & (1 << j) == 0 {
                    continue;
                }
                let removed = state & !(1 << j);
                let s1 = parity_below(state, j);
                for i in 0..d {
                    let tij = t[(i, j)];
                    if tij == Complex64::new(0.0, 0.0) {
                        continue;
                    }
                    if removed & (1 << i) != 0 {
                        continue;
                    }
                    let target = removed | (1 << i);
                    let s2 = parity_below(removed, i);
                    m[(target, state)] += tij * (s1 * s2);
                }
            }
        }
        Ok(m)
    }

    pub fn number_operator(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim(), self.dim());
        for state in 0..self.dim() {
            m[(state, state)] = Complex64::new(state.count_ones() as f64, 0.0);
        }
        m
    }

    /// Normal ordering of `ψ(f_1,g_1) ⋯ ψ(f_n,g_n)`: all creators moved to
    /// the left of all annihilators with the permutation signature,
    ///
    /// `:ψ_1 ⋯ ψ_n: = Σ' sgn(σ) B(g_{i_1})^* ⋯ B(g_{i_k})^* B(f_{j_1}) ⋯ B(f_{j_{n-k}})`
    ///
    /// summed over index splittings `i_1 < ... < i_k`, `j_1 < ... < j_{n-k}`.
    /// Assembled by direct action on basis bitstrings.
    pub fn normal_ordered_product(&self, factors: &[PsiFactor]) -> Result<CMatrix> {
        let d = self.modes();
        let n = factors.len();
        if n == 0 {
            return Ok(CMatrix::identity(self.dim(), self.dim()));
        }
        if n > 8 {
            return Err(Error::InvalidArgument(
                "normal ordering supported for products of length <= 8".into(),
            ));
        }
        for fac in factors {
            if fac.annihilation.len() != d || fac.creation.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: fac.annihilation.len(),
                });
            }
        }
        let is_zero = |v: &CVector| v.iter().all(|z| *z == Complex64::new(0.0, 0.0));
        let f_zero: Vec<bool> = factors.iter().map(|p| is_zero(&p.annihilation)).collect();
        let g_zero: Vec<bool> = factors.iter().map(|p| is_zero(&p.creation)).collect();

        let mut out = CMatrix::zeros(self.dim(), self.dim());
        let mut work: Vec<(usize, Complex64)> = Vec::new();
        let mut next: Vec<(usize, Complex64)> = Vec::new();

        for subset in 0..(1usize << n) {
            // subset bit k set == factor k contributes its creation part.
            let mut skip = false;
            for k in 0..n {
                let creating = subset & (1 << k) != 0;
                if (creating && g_zero[k]) || (!creating && f_zero[k]) {
                    skip = true;
                    break;
                }
            }
            if skip {
                continue;
            }
            // sgn(σ) for σ = (i_1..i_k, j_1..j_{n-k}): inversions between the
            // creator block and the annihilator block.
            let mut inversions = 0usize;
            for a in 0..n {
                if subset & (1 << a) != 0 {
                    for b in 0..a {
                        if subset & (1 << b) == 0 {
                            inversions += 1;
                        }
                    }
                }
            }
            let sign = if inversions % 2 == 0 { 1.0 } else { -1.0 };

            // Right-to-left application order: annihilators j_{n-k}..j_1,
            // then creators i_k..i_1.
            let mut order: Vec<(usize, bool)> = Vec::with_capacity(n);
            for k in (0..n).rev() {
                if subset & (1 << k) == 0 {
                    order.push((k, false));
                }
            }
            for k in (0..n).rev() {
                if subset & (1 << k) != 0 {
                    order.push((k, true));
                }
            }

            for col in 0..self.dim() {
                work.clear();
                work.push((col, Complex64::new(sign, 0.0)));
                for &(k, creating) in &order {
                    next.clear();
                    let vec = if creating {
                        &factors[k].creation
                    } else {
                        &factors[k].annihilation
                    };
                    for &(state, amp) in work.iter() {
                        for i in 0..d {
                            let coeff = if creating { vec[i] } else { vec[i].conj() };
                            if coeff == Complex64::new(0.0, 0.0) {
                                continue;
                            }
                            if creating {
                                if state & (1 << i) != 0 {
                                    continue;
                                }
                                next.push((state | (1 << i), amp * coeff * parity_below(state, i)));
                            } else {
                                if state & (1 << i) == 0 {
                                    continue;
                                }
                                next.push((state & !(1 << i), amp * coeff * parity_below(state, i)));
                            }
                        }
                    }
                    std::mem::swap(&mut work, &mut next);
                    if work.is_empty() {
                        break;
                    }
                }
                for &(row, amp) in work.iter() {
                    out[(row, col)] += amp;
                }
            }
        }
        Ok(out)
    }
}
