//! Photon and electron mode sets on a finite momentum lattice: dispersion,
//! polarization vectors, gamma matrices, and Dirac spinors.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fock::{ModeLabel, OneParticleSpace};
use crate::CMatrix;

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn scale(v: [f64; 3], s: f64) -> [f64; 3] {
    [v[0] * s, v[1] * s, v[2] * s]
}

/// Photon momenta with dispersion `ω(k) = |k|`, transverse polarization
/// pairs, and the ultraviolet profile `χ̂_ph` per mode.
#[derive(Debug, Clone)]
pub struct PhotonModeSet {
    momenta: Vec<[f64; 3]>,
    chi_hat: Vec<Complex64>,
    lambda_ph: f64,
    k_min: f64,
    polarizations: Vec<[[f64; 3]; 2]>,
}

pub const DEFAULT_K_MIN: f64 = 0.1;

impl PhotonModeSet {
    pub fn new(
        momenta: Vec<[f64; 3]>,
        chi_hat: Vec<Complex64>,
        lambda_ph: f64,
        k_min: f64,
    ) -> Result<Self> {
        if momenta.is_empty() || momenta.len() != chi_hat.len() {
            return Err(Error::InvalidArgument(
                "photon momenta and UV profile must be non-empty and matched".into(),
            ));
        }
        if !(k_min > 0.0) {
            return Err(Error::InvalidArgument("k_min must be positive".into()));
        }
        for (i, k) in momenta.iter().enumerate() {
            let w = norm3(*k);
            if !w.is_finite() || w < k_min {
                return Err(Error::ZeroMode {
                    index: i,
                    norm: w,
                    k_min,
                });
            }
            if w > lambda_ph && chi_hat[i].norm() > 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "UV profile must vanish beyond the cutoff: |k_{i}| = {w} > {lambda_ph}"
                )));
            }
            for (j, other) in momenta.iter().enumerate().take(i) {
                if (k[0] - other[0]).abs() < 1e-12
                    && (k[1] - other[1]).abs() < 1e-12
                    && (k[2] - other[2]).abs() < 1e-12
                {
                    return Err(Error::ModeCollision {
                        first: j,
                        second: i,
                    });
                }
            }
        }
        // Polarization pair: for k along z take (x̂, ŷ); otherwise
        // e1 = normalize(ẑ × k), e2 = normalize(k × e1).
        let z_hat = [0.0, 0.0, 1.0];
        let mut polarizations = Vec::with_capacity(momenta.len());
        for k in &momenta {
            let kn = norm3(*k);
            let transverse = (k[0] * k[0] + k[1] * k[1]).sqrt();
            let pair = if transverse < 1e-12 * kn {
                [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]
            } else {
                let e1 = {
                    let c = cross(z_hat, *k);
                    scale(c, 1.0 / norm3(c))
                };
                let e2 = {
                    let c = cross(*k, e1);
                    scale(c, 1.0 / norm3(c))
                };
                [e1, e2]
            };
            for r in 0..2 {
                for rp in 0..2 {
                    let want = if r == rp { 1.0 } else { 0.0 };
                    if (dot(pair[r], pair[rp]) - want).abs() > 1e-12 {
                        return Err(Error::InvalidArgument(
                            "polarization orthonormality failed".into(),
                        ));
                    }
                }
                if dot(*k, pair[r]).abs() > 1e-12 * kn {
                    return Err(Error::InvalidArgument(
                        "polarization transversality failed".into(),
                    ));
                }
            }
            polarizations.push(pair);
        }
        Ok(Self {
            momenta,
            chi_hat,
            lambda_ph,
            k_min,
            polarizations,
        })
    }

    pub fn momenta(&self) -> &[[f64; 3]] {
        &self.momenta
    }

    pub fn chi_hat(&self) -> &[Complex64] {
        &self.chi_hat
    }

    pub fn lambda_ph(&self) -> f64 {
        self.lambda_ph
    }

    pub fn k_min(&self) -> f64 {
        self.k_min
    }

    pub fn omega(&self, i: usize) -> f64 {
        norm3(self.momenta[i])
    }

    pub fn polarization(&self, i: usize, r: usize) -> [f64; 3] {
        self.polarizations[i][r]
    }

    /// One-particle modes: `(momentum index, polarization)` pairs, index
    /// `2i + r`.
    pub fn n_modes(&self) -> usize {
        2 * self.momenta.len()
    }

    pub fn mode_index(&self, momentum: usize, polarization: usize) -> usize {
        2 * momentum + polarization
    }

    pub fn one_particle(&self) -> Result<OneParticleSpace> {
        let mut labels = Vec::with_capacity(self.n_modes());
        for k in &self.momenta {
            for r in 0..2u8 {
                labels.push(ModeLabel::new(*k, r, false));
            }
        }
        OneParticleSpace::new(labels)
    }

    /// `||χ̂/ω||` over the momentum lattice.
    pub fn chi_over_omega_norm(&self) -> f64 {
        self.momenta
            .iter()
            .zip(&self.chi_hat)
            .map(|(k, c)| c.norm_sqr() / (norm3(*k) * norm3(*k)))
            .sum::<f64>()
            .sqrt()
    }

    /// `||χ̂/√ω||`.
    pub fn chi_over_sqrt_omega_norm(&self) -> f64 {
        self.momenta
            .iter()
            .zip(&self.chi_hat)
            .map(|(k, c)| c.norm_sqr() / norm3(*k))
            .sum::<f64>()
            .sqrt()
    }

    /// Relative bound constant of the gauge field:
    /// `M_ph = 2√2 ||χ̂/ω|| + √2 ||χ̂/√ω||`.
    pub fn m_ph(&self) -> f64 {
        2.0 * 2.0_f64.sqrt() * self.chi_over_omega_norm()
            + 2.0_f64.sqrt() * self.chi_over_sqrt_omega_norm()
    }
}

/// 2x2 Pauli matrices as rows of `[Complex64; 2]` pairs.
fn sigma(i: usize) -> [[Complex64; 2]; 2] {
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let im = Complex64::i();
    match i {
        0 => [[z, one], [one, z]],
        1 => [[z, -im], [im, z]],
        _ => [[one, z], [z, -one]],
    }
}

/// `α^μ = γ^0 γ^μ` in the Dirac representation (`α^0 = I`).
pub fn alpha_matrix(mu: usize) -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    if mu == 0 {
        return CMatrix::identity(4, 4);
    }
    let s = sigma(mu - 1);
    for a in 0..2 {
        for b in 0..2 {
            m[(a, 2 + b)] = s[a][b];
            m[(2 + a, b)] = s[a][b];
        }
    }
    m
}

/// `β = γ^0` in the Dirac representation.
pub fn beta_matrix() -> CMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for i in 0..2 {
        m[(i, i)] = Complex64::new(1.0, 0.0);
        m[(2 + i, 2 + i)] = Complex64::new(-1.0, 0.0);
    }
    m
}

/// Helicity eigenspinors of `σ·p̂`: index 0 is spin `+1/2`, index 1 is
/// `-1/2`. For `p = 0` the quantization axis falls back to `ẑ`.
fn helicity_pair(p: [f64; 3]) -> [[Complex64; 2]; 2] {
    let pn = norm3(p);
    if pn < 1e-14 {
        return [
            [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
        ];
    }
    let theta = (p[2] / pn).clamp(-1.0, 1.0).acos();
    let phi = p[1].atan2(p[0]);
    let (ct, st) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let eip = (Complex64::i() * phi).exp();
    [
        [Complex64::new(ct, 0.0), eip * st],
        [-eip.conj() * st, Complex64::new(ct, 0.0)],
    ]
}

fn sigma_dot_p_apply(p: [f64; 3], chi: [Complex64; 2]) -> [Complex64; 2] {
    let mut out = [Complex64::new(0.0, 0.0); 2];
    for (i, &pi) in p.iter().enumerate() {
        let s = sigma(i);
        for a in 0..2 {
            for b in 0..2 {
                out[a] += s[a][b] * chi[b] * pi;
            }
        }
    }
    out
}

/// Positive-energy spinor `u_s(p)` normalized to `u†u = 1`.
pub fn spinor_u(p: [f64; 3], mass: f64, s: usize) -> [Complex64; 4] {
    let e = (dot(p, p) + mass * mass).sqrt();
    let n = ((e + mass) / (2.0 * e)).sqrt();
    let chi = helicity_pair(p)[s];
    let lower = sigma_dot_p_apply(p, chi);
    let denom = e + mass;
    [
        chi[0] * n,
        chi[1] * n,
        lower[0] * (n / denom),
        lower[1] * (n / denom),
    ]
}

/// Negative-energy spinor `v_s(p)` normalized to `v†v = 1`, satisfying
/// `(α·p + βM) v = -E_M v`.
pub fn spinor_v(p: [f64; 3], mass: f64, s: usize) -> [Complex64; 4] {
    let e = (dot(p, p) + mass * mass).sqrt();
    let n = ((e + mass) / (2.0 * e)).sqrt();
    let eta = helicity_pair(p)[s];
    let upper = sigma_dot_p_apply(p, eta);
    let denom = e + mass;
    [
        -upper[0] * (n / denom),
        -upper[1] * (n / denom),
        eta[0] * n,
        eta[1] * n,
    ]
}

/// Electron momenta with mass, Dirac spinors, and the UV profile `χ̂_el`.
///
/// One-particle modes are laid out particles first: particle `(j, s)` at
/// index `2j + s`, antiparticle `(j, s)` at `2 n_p + 2j + s`.
#[derive(Debug, Clone)]
pub struct ElectronModeSet {
    momenta: Vec<[f64; 3]>,
    mass: f64,
    chi_hat: Vec<Complex64>,
    lambda_el: f64,
    /// `u_s(p_j)` per momentum and spin.
    u: Vec<[[Complex64; 4]; 2]>,
    /// `ṽ_s(p_j) = v_s(-p_j)` per momentum and spin.
    v_tilde: Vec<[[Complex64; 4]; 2]>,
}

impl ElectronModeSet {
    pub fn new(
        momenta: Vec<[f64; 3]>,
        mass: f64,
        chi_hat: Vec<Complex64>,
        lambda_el: f64,
    ) -> Result<Self> {
        if momenta.is_empty() || momenta.len() != chi_hat.len() {
            return Err(Error::InvalidArgument(
                "electron momenta and UV profile must be non-empty and matched".into(),
            ));
        }
        if !(mass > 0.0) {
            return Err(Error::InvalidArgument("electron mass must be positive".into()));
        }
        for (i, p) in momenta.iter().enumerate() {
            let pn = norm3(*p);
            if !pn.is_finite() {
                return Err(Error::InvalidArgument("non-finite momentum".into()));
            }
            if pn > lambda_el && chi_hat[i].norm() > 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "UV profile must vanish beyond the cutoff: |p_{i}| = {pn} > {lambda_el}"
                )));
            }
            for (j, other) in momenta.iter().enumerate().take(i) {
                if (p[0] - other[0]).abs() < 1e-12
                    && (p[1] - other[1]).abs() < 1e-12
                    && (p[2] - other[2]).abs() < 1e-12
                {
                    return Err(Error::ModeCollision {
                        first: j,
                        second: i,
                    });
                }
            }
        }
        let mut u = Vec::with_capacity(momenta.len());
        let mut v_tilde = Vec::with_capacity(momenta.len());
        for p in &momenta {
            let us = [spinor_u(*p, mass, 0), spinor_u(*p, mass, 1)];
            let vs = [spinor_v(*p, mass, 0), spinor_v(*p, mass, 1)];
            let minus_p = [-p[0], -p[1], -p[2]];
            let vt = [spinor_v(minus_p, mass, 0), spinor_v(minus_p, mass, 1)];
            validate_spinors(*p, mass, &us, &vs)?;
            u.push(us);
            v_tilde.push(vt);
        }
        Ok(Self {
            momenta,
            mass,
            chi_hat,
            lambda_el,
            u,
            v_tilde,
        })
    }

    pub fn momenta(&self) -> &[[f64; 3]] {
        &self.momenta
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn chi_hat(&self) -> &[Complex64] {
        &self.chi_hat
    }

    pub fn lambda_el(&self) -> f64 {
        self.lambda_el
    }

    pub fn energy(&self, j: usize) -> f64 {
        let p = self.momenta[j];
        (dot(p, p) + self.mass * self.mass).sqrt()
    }

    pub fn u_spinor(&self, j: usize, s: usize) -> [Complex64; 4] {
        self.u[j][s]
    }

    pub fn v_tilde_spinor(&self, j: usize, s: usize) -> [Complex64; 4] {
        self.v_tilde[j][s]
    }

    pub fn n_momenta(&self) -> usize {
        self.momenta.len()
    }

    pub fn n_modes(&self) -> usize {
        4 * self.momenta.len()
    }

    pub fn particle_index(&self, j: usize, s: usize) -> usize {
        2 * j + s
    }

    pub fn antiparticle_index(&self, j: usize, s: usize) -> usize {
        2 * self.momenta.len() + 2 * j + s
    }

    pub fn one_particle(&self) -> Result<OneParticleSpace> {
        let mut labels = Vec::with_capacity(self.n_modes());
        for anti in [false, true] {
            for p in &self.momenta {
                for s in 0..2u8 {
                    labels.push(ModeLabel::new(*p, s, anti));
                }
            }
        }
        // Keep index layout consistent with particle/antiparticle_index.
        debug_assert_eq!(labels.len(), self.n_modes());
        OneParticleSpace::new(labels)
    }

    /// `||χ̂_el||` over the momentum lattice.
    pub fn chi_norm(&self) -> f64 {
        self.chi_hat.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Current bound constant `M_cu = 256 ||χ̂_el||^2`.
    pub fn m_cu(&self) -> f64 {
        256.0 * self.chi_norm() * self.chi_norm()
    }

    /// The closed-form one-field energy shift `sqrt(Λ_el^2 + M^2)`.
    pub fn field_shift(&self) -> f64 {
        (self.lambda_el * self.lambda_el + self.mass * self.mass).sqrt()
    }
}

fn validate_spinors(
    p: [f64; 3],
    mass: f64,
    us: &[[Complex64; 4]; 2],
    vs: &[[Complex64; 4]; 2],
) -> Result<()> {
    let e = (dot(p, p) + mass * mass).sqrt();
    let h = {
        // α·p + βM
        let mut m = beta_matrix() * Complex64::new(mass, 0.0);
        for (i, &pi) in p.iter().enumerate() {
            m += alpha_matrix(i + 1) * Complex64::new(pi, 0.0);
        }
        m
    };
    let apply = |spinor: &[Complex64; 4]| -> [Complex64; 4] {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for r in 0..4 {
            for c in 0..4 {
                out[r] += h[(r, c)] * spinor[c];
            }
        }
        out
    };
    let norm4 =
        |x: &[Complex64; 4]| -> f64 { x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() };
    for s in 0..2 {
        let hu = apply(&us[s]);
        let mut resid = 0.0_f64;
        for l in 0..4 {
            resid += (hu[l] - us[s][l] * e).norm_sqr();
        }
        if resid.sqrt() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "positive-energy Dirac equation residual {} at p = {p:?}",
                resid.sqrt()
            )));
        }
        let hv = apply(&vs[s]);
        let mut resid_v = 0.0_f64;
        for l in 0..4 {
            resid_v += (hv[l] + vs[s][l] * e).norm_sqr();
        }
        if resid_v.sqrt() > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "negative-energy Dirac equation residual {} at p = {p:?}",
                resid_v.sqrt()
            )));
        }
        if (norm4(&us[s]) - 1.0).abs() > 1e-10 || (norm4(&vs[s]) - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidArgument("spinor normalization failed".into()));
        }
    }
    // Orthogonality and completeness: the four spinors form an orthonormal
    // basis of C^4.
    let all = [us[0], us[1], vs[0], vs[1]];
    for (a, sa) in all.iter().enumerate() {
        for (b, sb) in all.iter().enumerate() {
            let mut ip = Complex64::new(0.0, 0.0);
            for l in 0..4 {
                ip += sa[l].conj() * sb[l];
            }
            let want = if a == b { 1.0 } else { 0.0 };
            if (ip - want).norm() > 1e-10 {
                return Err(Error::InvalidArgument(
                    "spinor orthonormality failed".into(),
                ));
            }
        }
    }
    for l in 0..4 {
        for lp in 0..4 {
            let mut acc = Complex64::new(0.0, 0.0);
            for sp in &all {
                acc += sp[l] * sp[lp].conj();
            }
            let want = if l == lp { 1.0 } else { 0.0 };
            if (acc - want).norm() > 1e-10 {
                return Err(Error::InvalidArgument("spinor completeness failed".into()));
            }
        }
    }
    Ok(())
}
