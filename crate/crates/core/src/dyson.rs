//! Interaction-picture operators and the time-ordered exponential.
//!
//! For a non-negative free Hamiltonian `H0` and a perturbation `A`, the
//! interaction-picture operator is `A(z) = e^{izH0} A e^{-izH0}` and the
//! time-ordered exponential `U(A; z, z')` is the sum of the iterated contour
//! integrals
//!
//! `V_n(A; z, z') = (-i)^n ∫_{z'}^{z} dζ_1 ∫_{z'}^{ζ_1} dζ_2 ... A(ζ_1)...A(ζ_n)`,
//!
//! which are path independent, so the straight segment is canonical. Terms
//! are computed by spectral collocation: Gauss–Legendre nodes per segment,
//! one level per order, successive indefinite integration through the node
//! grid. Truncation is certified by the spectral-shift tail majorant plus an
//! empirical next-term check.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::contour::{Contour, QuadratureRule};
use crate::error::{Error, Result};
use crate::operator_core::{ensure_finite, frobenius_norm, operator_norm, HermitianOperator};
use crate::{CMatrix, CVector};

/// Policy guard: endpoints with `|Im z| * spectral spread` beyond this are
/// rejected up front (growing exponentials would dominate the series).
pub const IMAG_BUDGET: f64 = 50.0;

/// Hard overflow guard for single phase factors.
const PHASE_EXPONENT_LIMIT: f64 = 700.0;

const DEFAULT_E_GRID_POINTS: usize = 17;

/// Free Hamiltonian plus perturbation, with the perturbation cached in the
/// eigenbasis of `H0` and a spectral-shift certificate computed at
/// construction.
///
/// `H0` is shift-normalized at construction so its lowest eigenvalue is zero
/// whenever the input dips below zero; `A(z)` and `U(A; z, z')` are invariant
/// under that shift.
#[derive(Debug, Clone)]
pub struct InteractionSystem {
    h0: HermitianOperator,
    a: CMatrix,
    a_eig: CMatrix,
    certificate: C0Certificate,
}

/// Certified constants of a spectral-shift class operator: `c`, `c_adj`
/// bound `A(H0+1)^{-1/2}` and its adjoint, `b` is the smallest grid-certified
/// energy shift, `leak` the worst off-window Frobenius mass observed at the
/// certified shift.
#[derive(Debug, Clone)]
pub struct C0Certificate {
    pub c: f64,
    pub c_adj: f64,
    pub b: f64,
    pub e_grid: Vec<f64>,
    pub leak: f64,
}

/// Default certification grid: uniform on `[0, lambda_max]`.
pub fn default_e_grid(h0: &HermitianOperator) -> Vec<f64> {
    let top = h0.lambda_max().max(0.0);
    (0..DEFAULT_E_GRID_POINTS)
        .map(|i| top * (i as f64) / ((DEFAULT_E_GRID_POINTS - 1) as f64))
        .collect()
}

/// Certifies the spectral-shift class constants of `a` with respect to `h0`.
///
/// The shift search scans, for every window `E` of the grid, the minimal row
/// threshold above which the Frobenius mass of
/// `(I - E_{H0}([0, E+b])) a E_{H0}([0, E])` (and the adjoint block) stays
/// below `1e-10 ||a||`; the result is snapped up to the smallest pairwise
/// eigenvalue gap of `H0`. Frobenius mass dominates the operator norm, so
/// the certificate is sound.
pub fn certify_c0(h0: &HermitianOperator, a: &CMatrix, e_grid: &[f64]) -> Result<C0Certificate> {
    let n = h0.dim();
    if a.nrows() != n || a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.nrows(),
        });
    }
    if e_grid.is_empty() {
        return Err(Error::InvalidArgument("empty certification grid".into()));
    }
    ensure_finite(a)?;
    let lambdas = h0.eigenvalues();
    let a_eig = h0.to_eigenbasis(a);
    // Beyond the exact-SVD budget a lower bound on ||a|| keeps the leak
    // tolerance on the strict side.
    let large = n > 384;
    let norm_a = if large {
        crate::operator_core::operator_norm_lower_bound(&a_eig)
    } else {
        operator_norm(a)
    };
    let tol = 1e-10 * norm_a;
    let tol2 = tol * tol;
    let slack = 1e-12 * h0.norm().max(1.0);

    let scan = |transpose: bool| -> f64 {
        let mut worst = 0.0_f64;
        for &e in e_grid {
            // Frobenius mass per row, restricted to columns with λ_c <= E.
            let mut rowsum = vec![0.0_f64; n];
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    if lambdas[c] <= e + slack {
                        acc += if transpose {
                            a_eig[(c, r)].norm_sqr()
                        } else {
                            a_eig[(r, c)].norm_sqr()
                        };
                    }
                }
                rowsum[r] = acc;
            }
            // Walk rows from the top of the spectrum; the excluded block may
            // keep at most tol^2 of mass.
            let mut acc = 0.0_f64;
            let mut t_e = f64::NEG_INFINITY;
            for r in (0..n).rev() {
                if acc + rowsum[r] > tol2 {
                    t_e = lambdas[r];
                    break;
                }
                acc += rowsum[r];
            }
            if t_e.is_finite() {
                worst = worst.max(t_e - e);
            }
        }
        worst
    };
    let needed_b = scan(false).max(scan(true)).max(0.0);

    // Snap up to the smallest pairwise eigenvalue gap >= needed_b.
    let b =
        smallest_gap_at_least(lambdas.as_slice(), needed_b - slack).ok_or(Error::NoFiniteShift)?;

    // Worst off-window Frobenius mass at the certified shift.
    let mut leak = 0.0_f64;
    for &e in e_grid {
        let mut mass = 0.0_f64;
        let mut mass_adj = 0.0_f64;
        for r in 0..n {
            if lambdas[r] > e + b + slack {
                for c in 0..n {
                    if lambdas[c] <= e + slack {
                        mass += a_eig[(r, c)].norm_sqr();
                        mass_adj += a_eig[(c, r)].norm_sqr();
                    }
                }
            }
        }
        leak = leak.max(mass.sqrt()).max(mass_adj.sqrt());
    }

    let norm_of = |m: &CMatrix| -> f64 {
        if large {
            crate::operator_core::operator_norm_estimate(m, 40)
        } else {
            operator_norm(m)
        }
    };
    let inv_sqrt: Vec<f64> = lambdas.iter().map(|l| 1.0 / (l + 1.0).sqrt()).collect();
    let mut scaled = a_eig.clone();
    for c in 0..n {
        for r in 0..n {
            scaled[(r, c)] *= inv_sqrt[c];
        }
    }
    let c_const = norm_of(&scaled);
    drop(scaled);
    let mut scaled_adj = a_eig.adjoint();
    for c in 0..n {
        for r in 0..n {
            scaled_adj[(r, c)] *= inv_sqrt[c];
        }
    }
    let c_adj = norm_of(&scaled_adj);

    Ok(C0Certificate {
        c: c_const,
        c_adj,
        b,
        e_grid: e_grid.to_vec(),
        leak,
    })
}

/// Smallest pairwise gap `λ_r - λ_c >= x` of a sorted spectrum (zero counts
/// as a gap).
fn smallest_gap_at_least(sorted: &[f64], x: f64) -> Option<f64> {
    if x <= 0.0 {
        return Some(0.0);
    }
    let n = sorted.len();
    let mut best: Option<f64> = None;
    let mut c = 0usize;
    for r in 0..n {
        while c < n && sorted[r] - sorted[c] >= x {
            c += 1;
        }
        if c > 0 {
            let gap = sorted[r] - sorted[c - 1];
            best = Some(match best {
                Some(b) if b <= gap => b,
                _ => gap,
            });
        }
    }
    best
}

impl InteractionSystem {
    pub fn new(h0: HermitianOperator, a: CMatrix) -> Result<Self> {
        let n = h0.dim();
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: a.nrows(),
            });
        }
        ensure_finite(&a)?;
        let h0 = if h0.lambda_min() < 0.0 {
            h0.shifted(-h0.lambda_min())
        } else {
            h0
        };
        let grid = default_e_grid(&h0);
        let certificate = certify_c0(&h0, &a, &grid)?;
        let a_eig = h0.to_eigenbasis(&a);
        Ok(Self {
            h0,
            a,
            a_eig,
            certificate,
        })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn h0(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn perturbation(&self) -> &CMatrix {
        &self.a
    }

    pub fn certificate(&self) -> &C0Certificate {
        &self.certificate
    }

    /// Total Hamiltonian matrix `H0 + A`.
    pub fn total_matrix(&self) -> CMatrix {
        self.h0.matrix() + &self.a
    }

    fn spread(&self) -> f64 {
        self.h0.lambda_max() - self.h0.lambda_min()
    }

    fn phase_guard(&self, im: f64, limit: f64) -> Result<()> {
        let exponent = im.abs() * self.spread();
        if exponent > limit {
            return Err(Error::OverflowRisk { exponent, limit });
        }
        Ok(())
    }

    /// `A(z) = e^{izH0} A e^{-izH0}`.
    pub fn heisenberg(&self, z: Complex64) -> Result<CMatrix> {
        let m = self.heisenberg_of_eig(&self.a_eig, z)?;
        Ok(self.h0.from_eigenbasis(&m))
    }

    /// Interaction picture of an arbitrary operator.
    pub fn heisenberg_of(&self, op: &CMatrix, z: Complex64) -> Result<CMatrix> {
        let op_eig = self.h0.to_eigenbasis(op);
        let m = self.heisenberg_of_eig(&op_eig, z)?;
        Ok(self.h0.from_eigenbasis(&m))
    }

    /// Phases applied entrywise in the eigenbasis.
    fn heisenberg_of_eig(&self, op_eig: &CMatrix, z: Complex64) -> Result<CMatrix> {
        self.phase_guard(z.im, PHASE_EXPONENT_LIMIT)?;
        let n = self.dim();
        let l = self.h0.eigenvalues();
        let mut out = op_eig.clone();
        for c in 0..n {
            for r in 0..n {
                let mu = l[r] - l[c];
                out[(r, c)] *= (Complex64::i() * z * mu).exp();
            }
        }
        Ok(out)
    }

    /// Tail majorant instance for states in `Ran E_{H0}([0, E])` and
    /// endpoint imaginary part `k = |Im z'|`.
    pub fn majorant(&self, e: f64, k: f64) -> TailMajorant {
        TailMajorant {
            c: self.certificate.c,
            b: self.certificate.b,
            e,
            k,
        }
    }
}

/// The norm majorant for the series terms: for `Ψ` in `Ran E_{H0}([0, E])`
/// and `Im z <= Im z'`,
///
/// `||V_n Ψ|| <= C^n e^{K(2E+nb)} |z-z'|^n / n! * Π_{j=0}^{n-1} (E+jb+1)^{1/2} ||Ψ||`
///
/// with `K = |Im z'|`, `C = ||A(H0+1)^{-1/2}||`, `b` the certified shift.
#[derive(Debug, Clone, Copy)]
pub struct TailMajorant {
    pub c: f64,
    pub b: f64,
    pub e: f64,
    pub k: f64,
}

impl TailMajorant {
    /// `log` of the bound for the n-th term at endpoint distance `dz`.
    pub fn log_term(&self, n: usize, dz: f64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        if self.c == 0.0 || dz == 0.0 {
            return f64::NEG_INFINITY;
        }
        let mut log =
            (n as f64) * (self.c.ln() + dz.ln()) + self.k * (2.0 * self.e + n as f64 * self.b);
        for j in 0..n {
            log += 0.5 * (self.e + j as f64 * self.b + 1.0).ln();
            log -= ((j + 1) as f64).ln();
        }
        log
    }

    /// Bound for a single term (may round to `inf`; still an upper bound).
    pub fn term(&self, n: usize, dz: f64) -> f64 {
        self.log_term(n, dz).exp()
    }

    /// Upper bound on `Σ_{n > n0} term(n)`, or `inf` when it cannot be
    /// verified within the iteration budget.
    pub fn tail(&self, n0: usize, dz: f64) -> f64 {
        if self.c == 0.0 || dz == 0.0 {
            return 0.0;
        }
        // Incremental log-domain sweep with a running max for rescaling.
        let mut log_term = self.log_term(n0 + 1, dz);
        let mut max_log = log_term;
        let mut scaled_sum = 1.0_f64; // exp(log_term - max_log)
        let mut n = n0 + 1;
        let budget = 2_000_000usize;
        for _ in 0..budget {
            n += 1;
            let nf = n as f64;
            let ratio_log = self.c.ln()
                + dz.ln()
                + self.k * self.b
                + 0.5 * (self.e + (nf - 1.0) * self.b + 1.0).ln()
                - nf.ln();
            log_term += ratio_log;
            if log_term > max_log {
                scaled_sum = scaled_sum * (max_log - log_term).exp() + 1.0;
                max_log = log_term;
            } else {
                scaled_sum += (log_term - max_log).exp();
            }
            if ratio_log < 0.0 && log_term < max_log - 45.0 {
                let log_tail = max_log + scaled_sum.ln();
                return if log_tail > 700.0 {
                    f64::INFINITY
                } else {
                    log_tail.exp()
                };
            }
        }
        f64::INFINITY
    }
}

/// Collocation engine producing `V_1, V_2, ...` along a polyline, in the
/// `H0` eigenbasis throughout.
struct VnEngine<'a> {
    sys: &'a InteractionSystem,
    /// `A(ζ)` at every node, per segment.
    a_nodes: Vec<Vec<CMatrix>>,
    deltas: Vec<Complex64>,
    smat: Vec<Vec<f64>>,
    w01: Vec<f64>,
    /// Current level values at the nodes.
    levels: Vec<Vec<CMatrix>>,
}

impl<'a> VnEngine<'a> {
    fn new(
        sys: &'a InteractionSystem,
        vertices: &[Complex64],
        rule: &QuadratureRule,
    ) -> Result<Self> {
        let n = sys.dim();
        let t01 = rule.nodes01();
        let mut a_nodes = Vec::new();
        let mut deltas = Vec::new();
        for seg in vertices.windows(2) {
            let delta = seg[1] - seg[0];
            let mut per_seg = Vec::with_capacity(t01.len());
            for &t in &t01 {
                let zeta = seg[0] + delta * t;
                per_seg.push(sys.heisenberg_of_eig(&sys.a_eig, zeta)?);
            }
            a_nodes.push(per_seg);
            deltas.push(delta);
        }
        let eye = CMatrix::identity(n, n);
        let levels = a_nodes
            .iter()
            .map(|seg| vec![eye.clone(); seg.len()])
            .collect();
        Ok(Self {
            sys,
            a_nodes,
            deltas,
            smat: rule.integration_matrix(),
            w01: rule.weights01(),
            levels,
        })
    }

    /// Advances one order and returns the new `V_n` at the final vertex.
    fn advance(&mut self) -> CMatrix {
        let n = self.sys.dim();
        let q = self.w01.len();
        let minus_i = -Complex64::i();
        let mut carry = CMatrix::zeros(n, n);
        let mut new_levels = Vec::with_capacity(self.levels.len());
        for (s, seg_nodes) in self.a_nodes.iter().enumerate() {
            let g: Vec<CMatrix> = seg_nodes
                .iter()
                .zip(self.levels[s].iter())
                .map(|(a, y)| a * y)
                .collect();
            let mut new_seg = Vec::with_capacity(q);
            for i in 0..q {
                let mut acc = carry.clone();
                for (j, gj) in g.iter().enumerate() {
                    let w = self.deltas[s] * self.smat[i][j];
                    acc += gj * w;
                }
                new_seg.push(acc * minus_i);
            }
            let mut full = CMatrix::zeros(n, n);
            for (j, gj) in g.iter().enumerate() {
                full += gj * (self.deltas[s] * self.w01[j]);
            }
            carry += full;
            new_levels.push(new_seg);
        }
        self.levels = new_levels;
        carry * minus_i
    }
}

/// The truncated time-ordered exponential `U_N = Σ_{n<=N} V_n` with its
/// terms and tail certificate.
#[derive(Debug, Clone)]
pub struct DysonSeries {
    z: Complex64,
    zp: Complex64,
    terms: Vec<CMatrix>,
    tail_bound: f64,
    u: CMatrix,
}

impl DysonSeries {
    pub fn endpoints(&self) -> (Complex64, Complex64) {
        (self.z, self.zp)
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    /// `V_0, ..., V_N`.
    pub fn terms(&self) -> &[CMatrix] {
        &self.terms
    }

    /// `U_N = Σ V_n`.
    pub fn u(&self) -> &CMatrix {
        &self.u
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }
}

struct SeriesEig {
    terms: Vec<CMatrix>,
    tail_bound: f64,
    u: CMatrix,
}

fn dyson_series_eig(
    sys: &InteractionSystem,
    z: Complex64,
    zp: Complex64,
    tol: f64,
    n_max: usize,
    rule: &QuadratureRule,
    self_check: bool,
) -> Result<SeriesEig> {
    let n = sys.dim();
    let eye = CMatrix::identity(n, n);
    if z == zp {
        return Ok(SeriesEig {
            terms: vec![eye.clone()],
            tail_bound: 0.0,
            u: eye,
        });
    }
    if z.im > zp.im {
        return Err(Error::HalfPlaneViolation {
            im_z: z.im,
            im_zp: zp.im,
        });
    }
    sys.phase_guard(z.im, IMAG_BUDGET)?;
    sys.phase_guard(zp.im, IMAG_BUDGET)?;

    let majorant = sys.majorant(sys.h0().lambda_max(), zp.im.abs());
    let dz = (z - zp).norm();
    let vertices = [zp, z];
    let mut engine = VnEngine::new(sys, &vertices, rule)?;
    let mut terms = vec![eye.clone()];
    let mut u = eye;
    let mut accepted: Option<(usize, f64)> = None;
    for m in 1..=(n_max + 1) {
        let v_m = engine.advance();
        let candidate_n = m - 1;
        let tail = majorant.tail(candidate_n, dz);
        let next_norm = frobenius_norm(&v_m);
        if tail + next_norm < tol {
            accepted = Some((candidate_n, tail));
            break;
        }
        u += &v_m;
        terms.push(v_m);
    }
    let (order, tail_bound) = match accepted {
        Some(pair) => pair,
        None => {
            let tail = majorant.tail(n_max, dz);
            return Err(Error::TruncationFailure { n_max, tail, tol });
        }
    };
    debug_assert_eq!(order + 1, terms.len());

    if self_check {
        let mut engine2 = VnEngine::new(sys, &vertices, &rule.doubled())?;
        let mut u2 = CMatrix::identity(n, n);
        for _ in 1..=order {
            u2 += engine2.advance();
        }
        let deviation = frobenius_norm(&(&u2 - &u));
        let threshold = (1e-8 * frobenius_norm(&u)).max(tol);
        if deviation > threshold {
            return Err(Error::QuadratureNotConverged {
                deviation,
                tol: threshold,
            });
        }
    }
    Ok(SeriesEig {
        terms,
        tail_bound,
        u,
    })
}

/// Truncated time-ordered exponential on the canonical straight segment from
/// `z'` to `z` (requires `Im z <= Im z'`).
///
/// Truncation stops at the smallest `N` with
/// `tail_majorant(N) + ||V_{N+1}||_F < tol`, so the empirical next-term check
/// passes whenever the certified tail does. A `q` vs `2q` quadrature
/// self-check guards against under-resolution.
pub fn dyson_series(
    sys: &InteractionSystem,
    z: Complex64,
    zp: Complex64,
    tol: f64,
    n_max: usize,
    rule: &QuadratureRule,
) -> Result<DysonSeries> {
    let eig = dyson_series_eig(sys, z, zp, tol, n_max, rule, true)?;
    Ok(DysonSeries {
        z,
        zp,
        terms: eig
            .terms
            .iter()
            .map(|t| sys.h0().from_eigenbasis(t))
            .collect(),
        tail_bound: eig.tail_bound,
        u: sys.h0().from_eigenbasis(&eig.u),
    })
}

/// Single series term `V_n(A; z, z')` on the straight segment, with the
/// `q → 2q` self-check.
pub fn compute_vn(
    sys: &InteractionSystem,
    z: Complex64,
    zp: Complex64,
    n: usize,
    rule: &QuadratureRule,
) -> Result<CMatrix> {
    compute_vn_on_contour(sys, &Contour::segment(zp, z)?, n, rule)
}

/// `V_n` along an arbitrary polyline (path independence makes the value a
/// function of the endpoints only; the polyline is just the integration
/// route).
pub fn compute_vn_on_contour(
    sys: &InteractionSystem,
    contour: &Contour,
    n: usize,
    rule: &QuadratureRule,
) -> Result<CMatrix> {
    if n == 0 {
        return Ok(CMatrix::identity(sys.dim(), sys.dim()));
    }
    let mut engine = VnEngine::new(sys, contour.vertices(), rule)?;
    let mut v = CMatrix::zeros(sys.dim(), sys.dim());
    for _ in 0..n {
        v = engine.advance();
    }
    let mut engine2 = VnEngine::new(sys, contour.vertices(), &rule.doubled())?;
    let mut v2 = CMatrix::zeros(sys.dim(), sys.dim());
    for _ in 0..n {
        v2 = engine2.advance();
    }
    let deviation = frobenius_norm(&(&v2 - &v));
    let threshold = 1e-8 * frobenius_norm(&v2).max(f64::MIN_POSITIVE);
    if deviation > threshold {
        return Err(Error::QuadratureNotConverged {
            deviation,
            tol: threshold,
        });
    }
    Ok(sys.h0().from_eigenbasis(&v2))
}

/// Time-ordered product with operator insertions along a contour:
/// insertions are sorted descending under the contour order `≻` and the
/// result is
///
/// `U(B; z, ζ_{j1}) A_{j1}(ζ_{j1}) U(B; ζ_{j1}, ζ_{j2}) ... A_{jk}(ζ_{jk}) U(B; ζ_{jk}, z')`.
pub fn time_ordered_with_insertions(
    sys: &InteractionSystem,
    ops: &[(CMatrix, Complex64)],
    contour: &Contour,
    tol: f64,
    n_max: usize,
    rule: &QuadratureRule,
) -> Result<CMatrix> {
    let z = contour.end();
    let zp = contour.start();
    if z.im > zp.im {
        return Err(Error::HalfPlaneViolation {
            im_z: z.im,
            im_zp: zp.im,
        });
    }
    if ops.is_empty() {
        return Ok(dyson_series(sys, z, zp, tol, n_max, rule)?.u().clone());
    }
    let points: Vec<Complex64> = ops.iter().map(|(_, zeta)| *zeta).collect();
    let order = contour.sort_descending(&points)?;
    // Every factor U between consecutive points must live in the closed
    // half-plane of the series.
    let mut route = vec![z];
    route.extend(order.iter().map(|&i| points[i]));
    route.push(zp);
    for pair in route.windows(2) {
        if pair[0].im > pair[1].im {
            return Err(Error::HalfPlaneViolation {
                im_z: pair[0].im,
                im_zp: pair[1].im,
            });
        }
    }
    let sub_tol = tol / (ops.len() + 1) as f64;
    let mut m = dyson_series(sys, z, points[order[0]], sub_tol, n_max, rule)?
        .u()
        .clone();
    for (pos, &idx) in order.iter().enumerate() {
        let zeta = points[idx];
        m *= sys.heisenberg_of(&ops[idx].0, zeta)?;
        let next = if pos + 1 < order.len() {
            points[order[pos + 1]]
        } else {
            zp
        };
        m *= dyson_series(sys, zeta, next, sub_tol, n_max, rule)?.u();
    }
    Ok(m)
}

/// Max relative residuals of the complex Schrödinger equation and of the
/// series' own differential equations, estimated by Richardson-extrapolated
/// central differences with base step `h` (real direction).
#[derive(Debug, Clone, Copy)]
pub struct SchrodingerReport {
    /// `d/dz W(z) + i H W(z)` relative to `||H W(z)||`.
    pub w_residual: f64,
    /// `∂_z U(z, 0) + i A(z) U(z, 0)` relative to `||A(z) U||`.
    pub u_dz_residual: f64,
    /// `∂_{z'} U(z, z') - i U A(z')` at `z' = 0`, relative to `||U A||`.
    pub u_dzp_residual: f64,
}

pub fn check_schrodinger(
    sys: &InteractionSystem,
    grid: &[Complex64],
    h: f64,
    rule: &QuadratureRule,
) -> Result<SchrodingerReport> {
    let tol = 1e-12;
    let n_max = 300;
    let w_of = |z: Complex64| -> Result<CMatrix> {
        let u = dyson_series(sys, z, Complex64::new(0.0, 0.0), tol, n_max, rule)?;
        Ok(sys.h0().evolve(z)? * u.u())
    };
    let u_of = |z: Complex64, zp: Complex64| -> Result<CMatrix> {
        Ok(dyson_series(sys, z, zp, tol, n_max, rule)?.u().clone())
    };
    let richardson =
        |f: &dyn Fn(Complex64) -> Result<CMatrix>, at: Complex64| -> Result<CMatrix> {
            let two_h = Complex64::new(2.0 * h, 0.0);
            let d_h = (f(at + Complex64::new(h, 0.0))? - f(at - Complex64::new(h, 0.0))?) / two_h;
            let d_h2 = (f(at + Complex64::new(0.5 * h, 0.0))?
                - f(at - Complex64::new(0.5 * h, 0.0))?)
                / Complex64::new(h, 0.0);
            Ok((d_h2 * Complex64::new(4.0, 0.0) - d_h) / Complex64::new(3.0, 0.0))
        };
    let h_total = sys.total_matrix();
    let mut rep = SchrodingerReport {
        w_residual: 0.0,
        u_dz_residual: 0.0,
        u_dzp_residual: 0.0,
    };
    let origin = Complex64::new(0.0, 0.0);
    for &z in grid {
        if z.im >= 0.0 {
            return Err(Error::HalfPlaneViolation {
                im_z: z.im,
                im_zp: 0.0,
            });
        }
        // Complex Schrödinger equation for W(z) = e^{-izH0} U(z, 0).
        let d = richardson(&|zz| w_of(zz), z)?;
        let hw = &h_total * w_of(z)?;
        let res = frobenius_norm(&(d + &hw * Complex64::i()));
        rep.w_residual = rep.w_residual.max(res / frobenius_norm(&hw).max(1e-300));
        // ∂_z U(z, 0) = -i A(z) U(z, 0).
        let du = richardson(&|zz| u_of(zz, origin), z)?;
        let au = sys.heisenberg(z)? * u_of(z, origin)?;
        let res_u = frobenius_norm(&(du + &au * Complex64::i()));
        rep.u_dz_residual = rep
            .u_dz_residual
            .max(res_u / frobenius_norm(&au).max(1e-300));
        // ∂_{z'} U(z, z') = +i U(z, z') A(z') at z' = 0.
        let dup = richardson(&|zzp| u_of(z, zzp), origin)?;
        let ua = u_of(z, origin)? * sys.heisenberg(origin)?;
        let res_up = frobenius_norm(&(dup - &ua * Complex64::i()));
        rep.u_dzp_residual = rep
            .u_dzp_residual
            .max(res_up / frobenius_norm(&ua).max(1e-300));
    }
    Ok(rep)
}

/// Cache of interaction-frame step matrices `W(δ) = e^{-iδH0} U(δ, 0)` in
/// the `H0` eigenbasis, keyed by the step `δ`.
///
/// Propagation over a long descending polyline factors through the cocycle
/// and translation identities into
/// `U(z, z') = e^{izH0} W(δ_K) ... W(δ_1) e^{-iz'H0}`,
/// so a handful of distinct steps covers an entire adiabatic sweep and the
/// growing `e^{|Im z| H0}` factors never materialize.
#[derive(Debug, Default)]
pub struct StepCache {
    map: HashMap<(u64, u64), CMatrix>,
}

impl StepCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

impl InteractionSystem {
    /// `W(δ)` in the eigenbasis, built from the step's own series
    /// (`Im δ <= 0` required).
    pub fn step_matrix_eig(
        &self,
        delta: Complex64,
        tol: f64,
        rule: &QuadratureRule,
        cache: &mut StepCache,
    ) -> Result<CMatrix> {
        let key = (delta.re.to_bits(), delta.im.to_bits());
        if let Some(w) = cache.map.get(&key) {
            return Ok(w.clone());
        }
        let series =
            dyson_series_eig(self, delta, Complex64::new(0.0, 0.0), tol, 400, rule, true)?;
        let l = self.h0.eigenvalues();
        let mut w = series.u;
        for r in 0..self.dim() {
            let phase = (-Complex64::i() * delta * l[r]).exp();
            for c in 0..self.dim() {
                w[(r, c)] *= phase;
            }
        }
        cache.map.insert(key, w.clone());
        Ok(w)
    }

    /// Applies the interaction-frame chain for `U(to, from)` to a vector in
    /// the eigenbasis (without the outer `e^{i·to·H0}` / `e^{-i·from·H0}`
    /// phases, which cancel in vacuum expectations). The route is a
    /// horizontal run at `Im from` followed by a ray of slope `-eps`;
    /// requires `Im to <= Im from`. Steps repeat with length `h`, so the
    /// cache stays small across a sweep.
    #[allow(clippy::too_many_arguments)]
    pub fn chain_apply_eig(
        &self,
        v: &CVector,
        from: Complex64,
        to: Complex64,
        eps: f64,
        h: f64,
        tol: f64,
        rule: &QuadratureRule,
        cache: &mut StepCache,
    ) -> Result<CVector> {
        if to.im > from.im + 1e-12 {
            return Err(Error::HalfPlaneViolation {
                im_z: to.im,
                im_zp: from.im,
            });
        }
        let mut steps: Vec<Complex64> = Vec::new();
        let drop = (from.im - to.im).max(0.0);
        let s = if drop > 0.0 { drop / eps } else { 0.0 };
        let horiz = (to.re - from.re) - s;
        if horiz.abs() > 1e-12 {
            let dir = horiz.signum();
            let k = (horiz.abs() / h).floor() as usize;
            for _ in 0..k {
                steps.push(Complex64::new(dir * h, 0.0));
            }
            let rem = horiz - dir * (k as f64) * h;
            if rem.abs() > 1e-12 {
                steps.push(Complex64::new(rem, 0.0));
            }
        }
        if s > 1e-12 {
            let ray = Complex64::new(1.0, -eps);
            let k = (s / h).floor() as usize;
            for _ in 0..k {
                steps.push(ray * h);
            }
            let rem = s - (k as f64) * h;
            if rem > 1e-12 {
                steps.push(ray * rem);
            }
        }
        let mut out = v.clone();
        for delta in steps {
            let w = self.step_matrix_eig(delta, tol, rule, cache)?;
            out = w * out;
        }
        Ok(out)
    }
}
