//! Piecewise-linear simple curves in ℂ, the induced order relation, and
//! composite Gauss–Legendre quadrature for matrix-valued integrands.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::CMatrix;

/// Result of comparing two points under the contour order relation `≻`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ContourOrder {
    Precedes,
    Succeeds,
    Equal,
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

pub const DEFAULT_POINTS_PER_SEGMENT: usize = 32;

impl QuadratureRule {
    /// A rule with `q >= 2` points per segment.
    pub fn new(q: usize) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidArgument(format!(
                "quadrature rule needs at least 2 points, got {q}"
            )));
        }
        let (nodes, weights) = gauss_legendre(q);
        Ok(Self { nodes, weights })
    }

    pub fn default_rule() -> Self {
        Self::new(DEFAULT_POINTS_PER_SEGMENT).expect("default rule")
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Rule with twice the points, for convergence self-checks.
    pub fn doubled(&self) -> Self {
        Self::new(2 * self.len()).expect("doubled rule")
    }

    /// Nodes mapped to `[0, 1]`.
    pub fn nodes01(&self) -> Vec<f64> {
        self.nodes.iter().map(|x| 0.5 * (x + 1.0)).collect()
    }

    /// Weights for `∫_0^1`.
    pub fn weights01(&self) -> Vec<f64> {
        self.weights.iter().map(|w| 0.5 * w).collect()
    }

    /// Spectral integration matrix on the `[0, 1]` node grid:
    /// `S[i][j] = ∫_0^{t_i} ℓ_j(τ) dτ` for the Lagrange cardinal polynomials
    /// of the nodes. Values at the nodes of an interpolated function map to
    /// values of its indefinite integral.
    pub fn integration_matrix(&self) -> Vec<Vec<f64>> {
        let t = self.nodes01();
        let q = t.len();
        // Barycentric weights.
        let mut bary = vec![0.0_f64; q];
        for j in 0..q {
            let mut prod = 1.0;
            for k in 0..q {
                if k != j {
                    prod *= t[j] - t[k];
                }
            }
            bary[j] = 1.0 / prod;
        }
        let ell = |j: usize, x: f64| -> f64 {
            // Exact hit on a node.
            for (k, &tk) in t.iter().enumerate() {
                if (x - tk).abs() < 1e-300 {
                    return if k == j { 1.0 } else { 0.0 };
                }
            }
            let mut num = bary[j] / (x - t[j]);
            let mut den = 0.0;
            for k in 0..q {
                den += bary[k] / (x - t[k]);
            }
            num /= den;
            num
        };
        // ℓ_j has degree q-1, so the same q-point rule mapped onto [0, t_i]
        // integrates it exactly.
        let mut s = vec![vec![0.0_f64; q]; q];
        for i in 0..q {
            let half = 0.5 * t[i];
            for j in 0..q {
                let mut acc = 0.0;
                for (k, &xk) in self.nodes.iter().enumerate() {
                    let x = half * (xk + 1.0);
                    acc += self.weights[k] * ell(j, x);
                }
                s[i][j] = acc * half;
            }
        }
        s
    }
}

fn gauss_legendre(q: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0_f64; q];
    let mut weights = vec![0.0_f64; q];
    let m = (q + 1) / 2;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            // Recurrence for P_q(x) and its derivative.
            let mut p0 = 1.0_f64;
            let mut p1 = x;
            for k in 2..=q {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            pp = (q as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / pp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[q - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * pp * pp);
        weights[i] = w;
        weights[q - 1 - i] = w;
    }
    if q % 2 == 1 {
        nodes[q / 2] = 0.0;
    }
    (nodes, weights)
}

/// Oriented piecewise-linear simple curve from `z'` (first vertex) to `z`
/// (last vertex), with the induced order relation.
#[derive(Debug, Clone)]
pub struct Contour {
    vertices: Vec<Complex64>,
    /// Cumulative arclength at each vertex.
    cumulative: Vec<f64>,
}

const SIMPLE_TOL: f64 = 1e-12;

impl Contour {
    pub fn new(vertices: Vec<Complex64>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::InvalidArgument(
                "contour needs at least 2 vertices".into(),
            ));
        }
        for z in &vertices {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::InvalidArgument(
                    "contour vertex is not finite".into(),
                ));
            }
        }
        let mut cumulative = vec![0.0_f64];
        for (i, pair) in vertices.windows(2).enumerate() {
            let len = (pair[1] - pair[0]).norm();
            if len == 0.0 {
                return Err(Error::DegenerateSegment { index: i });
            }
            cumulative.push(cumulative[i] + len);
        }
        let c = Self {
            vertices,
            cumulative,
        };
        c.check_simple()?;
        Ok(c)
    }

    /// Straight segment from `z'` to `z`.
    pub fn segment(zp: Complex64, z: Complex64) -> Result<Self> {
        Self::new(vec![zp, z])
    }

    fn scale(&self) -> f64 {
        self.vertices
            .iter()
            .map(|z| z.norm())
            .fold(1.0_f64, f64::max)
    }

    fn check_simple(&self) -> Result<()> {
        let n = self.num_segments();
        let tol = SIMPLE_TOL * self.scale();
        for i in 0..n {
            for j in (i + 2)..n {
                // The closing pair of a closed curve would share a vertex,
                // but polylines here are open so all non-adjacent pairs
                // must stay separated.
                let d = segment_distance(
                    self.vertices[i],
                    self.vertices[i + 1],
                    self.vertices[j],
                    self.vertices[j + 1],
                );
                if d <= tol {
                    return Err(Error::NotSimple { first: i, second: j });
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    pub fn num_segments(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn total_length(&self) -> f64 {
        *self.cumulative.last().unwrap()
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.vertices.last().unwrap()
    }

    /// Snap tolerance for membership tests.
    fn snap_tol(&self) -> f64 {
        1e-10 * self.scale()
    }

    /// Arclength parameter of a point on the contour (projected onto the
    /// nearest segment point).
    pub fn parameter_of(&self, zeta: Complex64) -> Result<f64> {
        let mut best = f64::INFINITY;
        let mut best_param = 0.0;
        for i in 0..self.num_segments() {
            let a = self.vertices[i];
            let b = self.vertices[i + 1];
            let ab = b - a;
            let len2 = ab.norm_sqr();
            let t = (((zeta - a).conj() * ab).re / len2).clamp(0.0, 1.0);
            let proj = a + ab * t;
            let d = (zeta - proj).norm();
            if d < best {
                best = d;
                best_param = self.cumulative[i] + t * ab.norm();
            }
        }
        if best > self.snap_tol() {
            return Err(Error::NotOnContour {
                point: zeta,
                distance: best,
            });
        }
        Ok(best_param)
    }

    /// Compares two on-contour points under `≻`: `Succeeds` when
    /// `zeta1 ≻ zeta2` (larger curve parameter).
    pub fn order_compare(&self, zeta1: Complex64, zeta2: Complex64) -> Result<ContourOrder> {
        let t1 = self.parameter_of(zeta1)?;
        let t2 = self.parameter_of(zeta2)?;
        let tie = 1e-10 * self.total_length().max(1.0);
        Ok(if (t1 - t2).abs() <= tie {
            ContourOrder::Equal
        } else if t1 > t2 {
            ContourOrder::Succeeds
        } else {
            ContourOrder::Precedes
        })
    }

    /// Sorts points descending under `≻` (first result is the `≻`-largest).
    /// Fails on coincident points.
    pub fn sort_descending(&self, points: &[Complex64]) -> Result<Vec<usize>> {
        let mut params = Vec::with_capacity(points.len());
        for &p in points {
            params.push(self.parameter_of(p)?);
        }
        let tie = 1e-10 * self.total_length().max(1.0);
        let mut idx: Vec<usize> = (0..points.len()).collect();
        idx.sort_by(|&a, &b| params[b].total_cmp(&params[a]));
        for w in idx.windows(2) {
            if (params[w[0]] - params[w[1]]).abs() <= tie {
                return Err(Error::CoincidentInsertions {
                    parameter: params[w[0]],
                });
            }
        }
        Ok(idx)
    }

    /// Composite Gauss–Legendre line integral `∫_Γ g(ζ) dζ` of a
    /// matrix-valued integrand. Nodes are summed in fixed segment-then-node
    /// order so results are bitwise reproducible.
    pub fn integrate<F>(&self, g: F, rule: &QuadratureRule) -> Result<CMatrix>
    where
        F: Fn(Complex64) -> CMatrix,
    {
        let mut acc: Option<CMatrix> = None;
        for i in 0..self.num_segments() {
            let a = self.vertices[i];
            let b = self.vertices[i + 1];
            let half = (b - a) * 0.5;
            let mid = (a + b) * 0.5;
            for (k, &x) in rule.nodes().iter().enumerate() {
                let zeta = mid + half * x;
                let val = g(zeta);
                if val.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                    return Err(Error::NonFiniteIntegrand { node: zeta });
                }
                let w = half * rule.weights()[k];
                match acc.as_mut() {
                    None => acc = Some(val * w),
                    Some(m) => *m += val * w,
                }
            }
        }
        Ok(acc.expect("contour has at least one segment"))
    }
}

/// Minimum distance between two closed 2D segments.
fn segment_distance(a0: Complex64, a1: Complex64, b0: Complex64, b1: Complex64) -> f64 {
    fn point_seg(p: Complex64, a: Complex64, b: Complex64) -> f64 {
        let ab = b - a;
        let t = (((p - a).conj() * ab).re / ab.norm_sqr()).clamp(0.0, 1.0);
        (p - (a + ab * t)).norm()
    }
    fn orient(a: Complex64, b: Complex64, c: Complex64) -> f64 {
        let u = b - a;
        let v = c - a;
        u.re * v.im - u.im * v.re
    }
    // Proper crossing test first.
    let d1 = orient(a0, a1, b0);
    let d2 = orient(a0, a1, b1);
    let d3 = orient(b0, b1, a0);
    let d4 = orient(b0, b1, a1);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return 0.0;
    }
    point_seg(b0, a0, a1)
        .min(point_seg(b1, a0, a1))
        .min(point_seg(a0, b0, b1))
        .min(point_seg(a1, b0, b1))
}

/// The adiabatic-limit contour: a polyline from `-T(1-iε)` to `T(1-iε)`
/// passing through the smallest and largest insertion times on the real
/// axis, so that the contour order of real insertions matches their
/// real-number order.
pub fn gml_contour(t_half: f64, epsilon: f64, insertions: &[f64]) -> Result<Contour> {
    if !(t_half > 0.0) || !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need T > 0 and epsilon > 0, got T = {t_half}, epsilon = {epsilon}"
        )));
    }
    let start = Complex64::new(-t_half, t_half * epsilon);
    let end = Complex64::new(t_half, -t_half * epsilon);
    let mut vertices = vec![start];
    if !insertions.is_empty() {
        let mut sorted = insertions.to_vec();
        for &t in &sorted {
            if !t.is_finite() || t.abs() >= t_half {
                return Err(Error::InsertionOutOfRange {
                    value: t,
                    t_half,
                });
            }
        }
        sorted.sort_by(f64::total_cmp);
        let t_min = sorted[0];
        let t_max = *sorted.last().unwrap();
        vertices.push(Complex64::new(t_min, 0.0));
        if t_max > t_min {
            vertices.push(Complex64::new(t_max, 0.0));
        }
    }
    vertices.push(end);
    Contour::new(vertices)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::CMatrix;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn scalar(z: Complex64) -> CMatrix {
        CMatrix::from_element(1, 1, z)
    }

    #[test]
    fn order_on_straight_segment() {
        let s = Contour::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        assert_eq!(
            s.order_compare(c(0.8, 0.0), c(0.2, 0.0)).unwrap(),
            ContourOrder::Succeeds
        );
        assert_eq!(
            s.order_compare(c(0.3, 0.0), c(0.3, 0.0)).unwrap(),
            ContourOrder::Equal
        );
        assert_eq!(
            s.order_compare(c(0.1, 0.0), c(0.9, 0.0)).unwrap(),
            ContourOrder::Precedes
        );
    }

    #[test]
    fn off_contour_point_rejected() {
        let s = Contour::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        match s.order_compare(c(0.5, 0.4), c(0.2, 0.0)) {
            Err(Error::NotOnContour { .. }) => {}
            other => panic!("expected NotOnContour, got {other:?}"),
        }
    }

    #[test]
    fn constant_integrand() {
        let rule = QuadratureRule::default_rule();
        let zp = c(-0.3, 0.2);
        let z = c(1.1, -0.7);
        let s = Contour::segment(zp, z).unwrap();
        let result = s.integrate(|_| scalar(c(1.0, 0.0)), &rule).unwrap();
        assert!((result[(0, 0)] - (z - zp)).norm() < 1e-14);
    }

    #[test]
    fn linear_integrand_antiderivative() {
        let rule = QuadratureRule::default_rule();
        let s = Contour::segment(c(0.0, 0.0), c(1.0, 1.0)).unwrap();
        let result = s.integrate(|z| scalar(z), &rule).unwrap();
        // ((1+i)^2)/2 = i
        assert!((result[(0, 0)] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn exponential_integrand_closed_form() {
        let rule = QuadratureRule::default_rule();
        let mu = 3.0;
        let s = Contour::segment(c(0.0, 0.0), c(2.0, 0.0)).unwrap();
        let result = s
            .integrate(|z| scalar((Complex64::i() * mu * z).exp()), &rule)
            .unwrap();
        let expected = ((Complex64::i() * 2.0 * mu).exp() - 1.0) / (Complex64::i() * mu);
        assert!((result[(0, 0)] - expected).norm() < 1e-12);
    }

    #[test]
    fn path_independence_for_entire_integrand() {
        let rule = QuadratureRule::default_rule();
        let zp = c(0.0, 0.0);
        let z = c(1.5, -0.5);
        let straight = Contour::segment(zp, z).unwrap();
        let detour = Contour::new(vec![zp, c(0.4, 0.8), z]).unwrap();
        let g = |zeta: Complex64| scalar((zeta * c(0.0, 1.2)).exp() + zeta * zeta);
        let a = straight.integrate(g, &rule).unwrap();
        let b = detour.integrate(g, &rule).unwrap();
        assert!((a[(0, 0)] - b[(0, 0)]).norm() < 1e-12);
    }

    #[test]
    fn doubling_changes_little_for_entire_integrands() {
        let rule = QuadratureRule::default_rule();
        let s = Contour::segment(c(-2.0, 0.3), c(2.0, -0.4)).unwrap();
        let g = |zeta: Complex64| scalar((Complex64::i() * 12.0 * zeta).exp());
        let a = s.integrate(g, &rule).unwrap();
        let b = s.integrate(g, &rule.doubled()).unwrap();
        assert!((a[(0, 0)] - b[(0, 0)]).norm() < 1e-10);
    }

    #[test]
    fn gml_contour_no_insertions() {
        let g = gml_contour(1.0, 0.1, &[]).unwrap();
        assert_eq!(g.vertices().len(), 2);
        assert!((g.start() - c(-1.0, 0.1)).norm() < 1e-15);
        assert!((g.end() - c(1.0, -0.1)).norm() < 1e-15);
    }

    #[test]
    fn gml_contour_with_insertions() {
        let g = gml_contour(2.0, 0.2, &[-0.5, 0.5]).unwrap();
        let vs = g.vertices();
        assert_eq!(vs.len(), 4);
        assert!((vs[0] - c(-2.0, 0.4)).norm() < 1e-15);
        assert!((vs[1] - c(-0.5, 0.0)).norm() < 1e-15);
        assert!((vs[2] - c(0.5, 0.0)).norm() < 1e-15);
        assert!((vs[3] - c(2.0, -0.4)).norm() < 1e-15);
    }

    #[test]
    fn gml_contour_order_matches_real_order() {
        let g = gml_contour(2.0, 0.2, &[-0.5, 0.0, 0.5]).unwrap();
        let pts = [c(-0.5, 0.0), c(0.0, 0.0), c(0.5, 0.0)];
        let idx = g.sort_descending(&pts).unwrap();
        assert_eq!(idx, vec![2, 1, 0]);
        assert_eq!(
            g.order_compare(pts[2], pts[0]).unwrap(),
            ContourOrder::Succeeds
        );
    }

    #[test]
    fn gml_contour_rejects_out_of_range() {
        match gml_contour(1.0, 0.1, &[1.5]) {
            Err(Error::InsertionOutOfRange { .. }) => {}
            other => panic!("expected InsertionOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn self_intersecting_polyline_rejected() {
        let vs = vec![c(0.0, 0.0), c(2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0)];
        match Contour::new(vs) {
            Err(Error::NotSimple { .. }) => {}
            other => panic!("expected NotSimple, got {other:?}"),
        }
    }

    #[test]
    fn coincident_insertions_rejected_in_sort() {
        let s = Contour::segment(c(0.0, 0.0), c(1.0, 0.0)).unwrap();
        let pts = [c(0.5, 0.0), c(0.5, 0.0)];
        match s.sort_descending(&pts) {
            Err(Error::CoincidentInsertions { .. }) => {}
            other => panic!("expected CoincidentInsertions, got {other:?}"),
        }
    }

    #[test]
    fn integration_matrix_monomials() {
        let rule = QuadratureRule::new(8).unwrap();
        let t = rule.nodes01();
        let s = rule.integration_matrix();
        // ∫_0^{t_i} τ^p dτ = t_i^{p+1}/(p+1) for p within the exactness range.
        for p in 0..7usize {
            for i in 0..t.len() {
                let approx: f64 = (0..t.len()).map(|j| s[i][j] * t[j].powi(p as i32)).sum();
                let exact = t[i].powi(p as i32 + 1) / (p as f64 + 1.0);
                assert!(
                    (approx - exact).abs() < 1e-13,
                    "p = {p}, node {i}: {approx} vs {exact}"
                );
            }
        }
    }

    proptest! {
        #[test]
        fn quadrature_exact_on_polynomials(
            coeffs in proptest::collection::vec(-1.0f64..1.0, 1..6),
            a in -2.0f64..0.0,
            b in 0.1f64..2.0,
        ) {
            let rule = QuadratureRule::new(8).unwrap();
            let s = Contour::segment(c(a, -0.3), c(b, 0.4)).unwrap();
            let poly = |z: Complex64| {
                let mut acc = Complex64::new(0.0, 0.0);
                for &ck in coeffs.iter().rev() {
                    acc = acc * z + Complex64::new(ck, 0.0);
                }
                scalar(acc)
            };
            let integral = s.integrate(poly, &rule).unwrap()[(0, 0)];
            // Antiderivative evaluated at the endpoints.
            let anti = |z: Complex64| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (k, &ck) in coeffs.iter().enumerate().rev() {
                    acc += z.powu(k as u32 + 1) * ck / ((k + 1) as f64);
                }
                acc
            };
            let exact = anti(s.end()) - anti(s.start());
            prop_assert!((integral - exact).norm() < 1e-12);
        }

        #[test]
        fn gauss_legendre_nodes_symmetric(q in 2usize..40) {
            let rule = QuadratureRule::new(q).unwrap();
            let n = rule.nodes();
            let w = rule.weights();
            for i in 0..q {
                prop_assert!((n[i] + n[q - 1 - i]).abs() < 1e-12);
                prop_assert!((w[i] - w[q - 1 - i]).abs() < 1e-12);
            }
            let total: f64 = w.iter().sum();
            prop_assert!((total - 2.0).abs() < 1e-12);
        }
    }
}
