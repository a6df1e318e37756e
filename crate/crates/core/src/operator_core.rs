//! Dense Hermitian spectral calculus.
//!
//! Everything downstream (interaction pictures, propagators, spectral
//! certificates) is built from the eigendecomposition held by
//! [`HermitianOperator`]. Decompositions are deterministic: eigenvalues are
//! sorted ascending and every eigenvector is re-phased so its first
//! significant component is real positive, which keeps spectral projectors
//! reproducible across runs.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::{CMatrix, CVector};

/// Default relative tolerance on the Hermiticity defect of inputs.
pub const DEFAULT_HTOL: f64 = 1e-12;

/// Relative tolerance used for the orthonormality / reconstruction residuals.
pub const DECOMP_RTOL: f64 = 1e-10;

/// Exponent limit for complex-time propagators (double precision headroom).
pub const OVERFLOW_EXPONENT_LIMIT: f64 = 700.0;

/// Closed interval `[lo, hi]` of spectrum used to select eigenvalues.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralWindow {
    pub lo: f64,
    pub hi: f64,
}

impl SpectralWindow {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || lo > hi {
            return Err(Error::InvalidArgument(format!(
                "invalid spectral window [{lo}, {hi}]"
            )));
        }
        Ok(Self { lo, hi })
    }

    fn contains(&self, lambda: f64, slack: f64) -> bool {
        lambda >= self.lo - slack && lambda <= self.hi + slack
    }
}

/// How the stored eigenbasis acts: a dense unitary, or a pure column
/// permutation (the fast path for diagonal operators, where dense
/// basis changes would waste O(n^3) work).
#[derive(Debug, Clone)]
enum BasisKind {
    Dense,
    Permutation(Vec<usize>),
}

/// A finite-dimensional self-adjoint operator with cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct HermitianOperator {
    matrix: CMatrix,
    eigenvalues: DVector<f64>,
    eigenvectors: CMatrix,
    hermiticity_defect: f64,
    basis: BasisKind,
}

/// Frobenius norm of a complex matrix.
pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Checks that every entry is finite.
pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    for z in m.iter() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::InvalidArgument(
                "matrix contains non-finite entries".into(),
            ));
        }
    }
    Ok(())
}

/// Largest singular value. Exact SVD for small matrices, deterministic
/// power iteration on `M†M` beyond that.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    if m.nrows().max(m.ncols()) <= 384 {
        let sv = m.clone().singular_values();
        return sv.iter().cloned().fold(0.0_f64, f64::max);
    }
    power_iteration_norm(m, 200, 1e-12)
}

/// Max column 2-norm: a cheap lower bound on the operator norm.
pub fn operator_norm_lower_bound(m: &CMatrix) -> f64 {
    let mut best = 0.0_f64;
    for c in 0..m.ncols() {
        let s: f64 = m.column(c).iter().map(|z| z.norm_sqr()).sum();
        best = best.max(s);
    }
    best.sqrt()
}

/// Power-iteration estimate with a fixed budget; converges from below.
/// Intended for large matrices where the exact SVD is out of budget and a
/// few digits suffice.
pub fn operator_norm_estimate(m: &CMatrix, max_iter: usize) -> f64 {
    power_iteration_norm(m, max_iter, 1e-9)
}

fn power_iteration_norm(m: &CMatrix, max_iter: usize, rtol: f64) -> f64 {
    let n = m.ncols();
    let adj = m.adjoint();
    // Fixed, slightly tilted start so the iteration is reproducible.
    let mut x = CVector::from_fn(n, |i, _| {
        Complex64::new(1.0 + 0.5 * (i as f64) / (n as f64), 0.0)
    });
    let nx = x.norm();
    x /= Complex64::new(nx, 0.0);
    let mut sigma2 = 0.0_f64;
    for _ in 0..max_iter {
        let y = m * &x;
        let z = &adj * y;
        let new_sigma2 = x.dotc(&z).re.max(0.0);
        let nz = z.norm();
        if nz == 0.0 {
            return 0.0;
        }
        x = z / Complex64::new(nz, 0.0);
        if (new_sigma2 - sigma2).abs() <= rtol * new_sigma2.max(1e-300) {
            return new_sigma2.sqrt();
        }
        sigma2 = new_sigma2;
    }
    sigma2.sqrt()
}

/// Eigendecomposition of a (numerically) Hermitian matrix.
///
/// The input is symmetrized to `(M + M†)/2` before factoring, so the stored
/// matrix is exactly Hermitian; `hermiticity_defect` records the Frobenius
/// defect of the original input. Fails with [`Error::NotHermitian`] when the
/// defect exceeds `htol * ||M||_F`.
pub fn eig_hermitian(m: &CMatrix, htol: f64) -> Result<HermitianOperator> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n.max(1),
            got: m.ncols(),
        });
    }
    ensure_finite(m)?;

    let scale = frobenius_norm(m);
    let defect = frobenius_norm(&(m - m.adjoint()));
    if defect > htol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian {
            defect,
            tol: htol * scale,
        });
    }
    let sym = (m + m.adjoint()).map(|z| z * 0.5);

    // Fast path: diagonal input. Eigenvectors reduce to a permutation and the
    // decomposition is exact, which matters for the large second-quantized
    // free Hamiltonians (diagonal in the occupation basis).
    let mut off = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off = off.max(sym[(i, j)].norm());
            }
        }
    }
    if off <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| sym[(a, a)].re.total_cmp(&sym[(b, b)].re));
        let eigenvalues = DVector::from_fn(n, |j, _| sym[(order[j], order[j])].re);
        let mut eigenvectors = CMatrix::zeros(n, n);
        for (j, &src) in order.iter().enumerate() {
            eigenvectors[(src, j)] = Complex64::new(1.0, 0.0);
        }
        let diag = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(sym[(i, i)].re, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        return Ok(HermitianOperator {
            matrix: diag,
            eigenvalues,
            eigenvectors,
            hermiticity_defect: defect,
            basis: BasisKind::Permutation(order),
        });
    }

    let (raw_values, raw_vectors) = jacobi_hermitian(&sym).ok_or(Error::ConvergenceFailure { dim: n })?;

    // Sort ascending and fix phases deterministically.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| raw_values[a].total_cmp(&raw_values[b]));
    let eigenvalues = DVector::from_fn(n, |j, _| raw_values[order[j]]);
    let mut eigenvectors = CMatrix::zeros(n, n);
    for (j, &src) in order.iter().enumerate() {
        let col = raw_vectors.column(src);
        let maxmag = col.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
        let lead = col
            .iter()
            .position(|z| z.norm() > 1e-8 * maxmag)
            .unwrap_or(0);
        let phase = col[lead] / Complex64::new(col[lead].norm(), 0.0);
        let fix = phase.conj();
        for i in 0..n {
            eigenvectors[(i, j)] = col[i] * fix;
        }
    }

    let op = HermitianOperator {
        matrix: sym,
        eigenvalues,
        eigenvectors,
        hermiticity_defect: defect,
        basis: BasisKind::Dense,
    };
    op.verify_residuals()?;
    Ok(op)
}

/// Cyclic Jacobi diagonalization of an (exactly) Hermitian matrix.
///
/// Rotations annihilate one off-diagonal entry at a time; the method is
/// backward stable with reconstruction residuals near machine precision,
/// which the downstream residual gates rely on.
fn jacobi_hermitian(sym: &CMatrix) -> Option<(Vec<f64>, CMatrix)> {
    let n = sym.nrows();
    let mut a = sym.clone();
    let mut v = CMatrix::identity(n, n);
    let scale = frobenius_norm(sym).max(f64::MIN_POSITIVE);
    let tol = 1e-15 * scale;
    let max_sweeps = 60;
    for _ in 0..max_sweeps {
        let mut off = 0.0_f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if (2.0 * off).sqrt() <= tol {
            let values = (0..n).map(|i| a[(i, i)].re).collect();
            return Some((values, v));
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)];
                let g_abs = g.norm();
                if g_abs <= 1e-2 * tol / (n as f64) {
                    continue;
                }
                let u = g / Complex64::new(g_abs, 0.0);
                let alpha = a[(p, p)].re;
                let beta = a[(q, q)].re;
                let tau = (beta - alpha) / (2.0 * g_abs);
                let t = if tau == 0.0 {
                    1.0
                } else {
                    tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = [[c, s·u], [-s·ū, c]] on columns (p, q); apply G†AG
                // and accumulate V·G.
                let su = u * s;
                let su_conj = u.conj() * s;
                for r in 0..n {
                    let arp = a[(r, p)];
                    let arq = a[(r, q)];
                    a[(r, p)] = arp * c - arq * su_conj;
                    a[(r, q)] = arp * su + arq * c;
                }
                for r in 0..n {
                    let apr = a[(p, r)];
                    let aqr = a[(q, r)];
                    a[(p, r)] = apr * c - aqr * su;
                    a[(q, r)] = apr * su_conj + aqr * c;
                }
                for r in 0..n {
                    let vrp = v[(r, p)];
                    let vrq = v[(r, q)];
                    v[(r, p)] = vrp * c - vrq * su_conj;
                    v[(r, q)] = vrp * su + vrq * c;
                }
                // Clean the annihilated pair against rounding drift.
                a[(p, q)] = Complex64::new(0.0, 0.0);
                a[(q, p)] = Complex64::new(0.0, 0.0);
                let app = a[(p, p)];
                let aqq = a[(q, q)];
                a[(p, p)] = Complex64::new(app.re, 0.0);
                a[(q, q)] = Complex64::new(aqq.re, 0.0);
            }
        }
    }
    None
}

impl HermitianOperator {
    /// Decomposition with the default Hermiticity tolerance.
    pub fn new(m: &CMatrix) -> Result<Self> {
        eig_hermitian(m, DEFAULT_HTOL)
    }

    /// Builds directly from eigenvalues given in any order (diagonal operator).
    pub fn from_diagonal(values: &[f64]) -> Result<Self> {
        let n = values.len();
        let m = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        eig_hermitian(&m, DEFAULT_HTOL)
    }

    fn verify_residuals(&self) -> Result<()> {
        let n = self.dim();
        let v = &self.eigenvectors;
        let gram = v.adjoint() * v;
        let eye = CMatrix::identity(n, n);
        if frobenius_norm(&(gram - &eye)) > DECOMP_RTOL {
            return Err(Error::ConvergenceFailure { dim: n });
        }
        let scale = frobenius_norm(&self.matrix).max(f64::MIN_POSITIVE);
        let recon = self.from_eigenbasis_diag(&DVector::from_fn(n, |i, _| {
            Complex64::new(self.eigenvalues[i], 0.0)
        }));
        if frobenius_norm(&(recon - &self.matrix)) > DECOMP_RTOL * scale {
            return Err(Error::ConvergenceFailure { dim: n });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigenvectors
    }

    pub fn hermiticity_defect(&self) -> f64 {
        self.hermiticity_defect
    }

    pub fn lambda_min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn lambda_max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// Operator norm (max |eigenvalue|, exact for Hermitian operators).
    pub fn norm(&self) -> f64 {
        self.lambda_min().abs().max(self.lambda_max().abs())
    }

    /// `V† A V`: the matrix of `A` in the eigenbasis of `self`.
    pub fn to_eigenbasis(&self, a: &CMatrix) -> CMatrix {
        match &self.basis {
            BasisKind::Permutation(p) => {
                let n = self.dim();
                CMatrix::from_fn(n, n, |i, j| a[(p[i], p[j])])
            }
            BasisKind::Dense => self.eigenvectors.adjoint() * a * &self.eigenvectors,
        }
    }

    /// `V B V†`: back from the eigenbasis.
    pub fn from_eigenbasis(&self, b: &CMatrix) -> CMatrix {
        match &self.basis {
            BasisKind::Permutation(p) => {
                let n = self.dim();
                let mut out = CMatrix::zeros(n, n);
                for i in 0..n {
                    for j in 0..n {
                        out[(p[i], p[j])] = b[(i, j)];
                    }
                }
                out
            }
            BasisKind::Dense => &self.eigenvectors * b * self.eigenvectors.adjoint(),
        }
    }

    fn from_eigenbasis_diag(&self, d: &CVector) -> CMatrix {
        match &self.basis {
            BasisKind::Permutation(p) => {
                let n = self.dim();
                let mut out = CMatrix::zeros(n, n);
                for j in 0..n {
                    out[(p[j], p[j])] = d[j];
                }
                out
            }
            BasisKind::Dense => {
                let mut scaled = self.eigenvectors.clone();
                for j in 0..self.dim() {
                    let dj = d[j];
                    for i in 0..self.dim() {
                        scaled[(i, j)] *= dj;
                    }
                }
                scaled * self.eigenvectors.adjoint()
            }
        }
    }

    /// Spectral projector `E_H([lo, hi])` with the closed-interval membership
    /// slack `1e-12 * max(1, ||H||)`.
    pub fn spectral_projector(&self, w: SpectralWindow) -> CMatrix {
        let slack = 1e-12 * self.norm().max(1.0);
        let d = CVector::from_fn(self.dim(), |j, _| {
            if w.contains(self.eigenvalues[j], slack) {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        self.from_eigenbasis_diag(&d)
    }

    /// Number of eigenvalues inside the window (same membership slack as the
    /// projector).
    pub fn count_in_window(&self, w: SpectralWindow) -> usize {
        let slack = 1e-12 * self.norm().max(1.0);
        self.eigenvalues
            .iter()
            .filter(|&&l| w.contains(l, slack))
            .count()
    }

    /// Functional calculus `f(H) = V diag(f(λ)) V†`.
    pub fn apply_function<F>(&self, f: F) -> Result<CMatrix>
    where
        F: Fn(f64) -> Complex64,
    {
        let mut d = CVector::zeros(self.dim());
        for j in 0..self.dim() {
            let val = f(self.eigenvalues[j]);
            if !val.re.is_finite() || !val.im.is_finite() {
                return Err(Error::DomainError {
                    index: j,
                    lambda: self.eigenvalues[j],
                });
            }
            d[j] = val;
        }
        Ok(self.from_eigenbasis_diag(&d))
    }

    /// `f(H) ψ` without forming the matrix of `f(H)`.
    pub fn apply_function_to_vector<F>(&self, f: F, psi: &CVector) -> Result<CVector>
    where
        F: Fn(f64) -> Complex64,
    {
        if psi.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: psi.len(),
            });
        }
        let mut coeffs = match &self.basis {
            BasisKind::Permutation(p) => CVector::from_fn(self.dim(), |j, _| psi[p[j]]),
            BasisKind::Dense => self.eigenvectors.adjoint() * psi,
        };
        for j in 0..self.dim() {
            let val = f(self.eigenvalues[j]);
            if !val.re.is_finite() || !val.im.is_finite() {
                return Err(Error::DomainError {
                    index: j,
                    lambda: self.eigenvalues[j],
                });
            }
            coeffs[j] *= val;
        }
        Ok(match &self.basis {
            BasisKind::Permutation(p) => {
                let mut out = CVector::zeros(self.dim());
                for j in 0..self.dim() {
                    out[p[j]] = coeffs[j];
                }
                out
            }
            BasisKind::Dense => &self.eigenvectors * coeffs,
        })
    }

    fn evolve_guard(&self, z: Complex64) -> Result<()> {
        let exponent = (z.im * self.lambda_max()).max(z.im * self.lambda_min());
        if exponent > OVERFLOW_EXPONENT_LIMIT {
            return Err(Error::OverflowRisk {
                exponent,
                limit: OVERFLOW_EXPONENT_LIMIT,
            });
        }
        Ok(())
    }

    /// Complex-time propagator `e^{-izH}`.
    pub fn evolve(&self, z: Complex64) -> Result<CMatrix> {
        self.evolve_guard(z)?;
        self.apply_function(|l| (-Complex64::i() * z * l).exp())
    }

    /// `e^{-izH} ψ`.
    pub fn evolve_vector(&self, z: Complex64, psi: &CVector) -> Result<CVector> {
        self.evolve_guard(z)?;
        self.apply_function_to_vector(|l| (-Complex64::i() * z * l).exp(), psi)
    }

    /// Returns a copy with every eigenvalue shifted by `delta` (the matrix
    /// gains `delta * I`).
    pub fn shifted(&self, delta: f64) -> Self {
        let n = self.dim();
        let mut matrix = self.matrix.clone();
        for i in 0..n {
            matrix[(i, i)] += Complex64::new(delta, 0.0);
        }
        Self {
            matrix,
            eigenvalues: self.eigenvalues.map(|l| l + delta),
            eigenvectors: self.eigenvectors.clone(),
            hermiticity_defect: self.hermiticity_defect,
            basis: self.basis.clone(),
        }
    }
}
