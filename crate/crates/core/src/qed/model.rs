//! Assembly of the cutoff QED model: fields, currents, interaction and
//! total Hamiltonians on the fermion ⊗ boson space.

use num_complex::Complex64;

use super::modes::{alpha_matrix, ElectronModeSet, PhotonModeSet};
use crate::error::{Error, Result};
use crate::fock::{BosonFockSpace, CompositeSpace, FermionFockSpace, PsiFactor};
use crate::operator_core::{frobenius_norm, HermitianOperator};
use crate::{CMatrix, CVector};

/// One point of the spatial sample replacing `∫ d³x χ_sp(x) ...`.
#[derive(Debug, Clone, Copy)]
pub struct SpatialPoint {
    pub position: [f64; 3],
    pub weight: f64,
    pub chi_sp: f64,
}

/// The assembled model: mode sets, state space, and Hamiltonians.
///
/// `H_fr = dΓ_f(E_M) ⊗ I + I ⊗ dΓ_b(ω)` is diagonal in the occupation
/// basis; `H_I` couples normal-ordered currents to the gauge field, `H_II`
/// is the normal-ordered Coulomb term, and `H_tot = H_fr + H_I + H_II`.
#[derive(Debug, Clone)]
pub struct QedModel {
    photon: PhotonModeSet,
    electron: ElectronModeSet,
    coupling: f64,
    spatial: Vec<SpatialPoint>,
    composite: CompositeSpace,
    h_fr: HermitianOperator,
    h_i: CMatrix,
    h_ii: CMatrix,
    h_int: CMatrix,
    h_tot: CMatrix,
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

impl QedModel {
    /// Builds photon/electron Fock spaces and every Hamiltonian piece.
    pub fn build(
        photon: PhotonModeSet,
        electron: ElectronModeSet,
        coupling: f64,
        spatial: Vec<SpatialPoint>,
        n_max: u32,
    ) -> Result<Self> {
        if spatial.is_empty() {
            return Err(Error::InvalidArgument("empty spatial sample".into()));
        }
        for p in &spatial {
            if !(p.weight.is_finite() && p.chi_sp.is_finite()) {
                return Err(Error::InvalidArgument("non-finite spatial weight".into()));
            }
        }
        let fermion = FermionFockSpace::new(electron.one_particle()?)?;
        let boson = BosonFockSpace::new(photon.one_particle()?, n_max)?;
        let composite = CompositeSpace::new(fermion, boson);
        let dim = composite.dim();

        // Free Hamiltonian: diagonal energies.
        let mut diag = vec![0.0_f64; dim];
        let db = composite.boson.dim();
        for i_f in 0..composite.fermion.dim() {
            let mut e_f = 0.0;
            for j in 0..electron.n_momenta() {
                for s in 0..2 {
                    if composite.fermion.occupation(i_f, electron.particle_index(j, s)) {
                        e_f += electron.energy(j);
                    }
                    if composite
                        .fermion
                        .occupation(i_f, electron.antiparticle_index(j, s))
                    {
                        e_f += electron.energy(j);
                    }
                }
            }
            for i_b in 0..db {
                let occ = composite.boson.occupation(i_b);
                let mut e_b = 0.0;
                for (m, &n_m) in occ.iter().enumerate() {
                    e_b += photon.omega(m / 2) * n_m as f64;
                }
                diag[i_f * db + i_b] = e_f + e_b;
            }
        }
        let h_fr = HermitianOperator::from_diagonal(&diag)?;

        let model_stub = Self {
            photon,
            electron,
            coupling,
            spatial,
            composite,
            h_fr,
            h_i: CMatrix::zeros(0, 0),
            h_ii: CMatrix::zeros(0, 0),
            h_int: CMatrix::zeros(0, 0),
            h_tot: CMatrix::zeros(0, 0),
        };

        // H_I = e Σ_a w_a χ_sp(x_a) Σ_i :j^i(x_a): ⊗ A_i(x_a)
        let mut h_i = CMatrix::zeros(dim, dim);
        for a in 0..model_stub.spatial.len() {
            let pt = model_stub.spatial[a];
            let c_a = coupling * pt.weight * pt.chi_sp;
            if c_a == 0.0 {
                continue;
            }
            for dir in 1..=3usize {
                let j_mat = model_stub.normal_ordered_current(dir, pt.position)?;
                let a_mat = model_stub.photon_field(dir, pt.position)?;
                let lifted = model_stub
                    .composite
                    .kron_lift(Some(&j_mat), Some(&a_mat))?;
                h_i += lifted * Complex64::new(c_a, 0.0);
            }
        }
        let h_i = hermitize("H_I", h_i)?;

        // H_II = (e²/2) Σ_{a,b} w_a w_b χ_a χ_b V_C(x_a - x_b)
        //        :j⁰(x_a) j⁰(x_b): ⊗ I
        let df = model_stub.composite.fermion.dim();
        let mut quartic_sum = CMatrix::zeros(df, df);
        for a in 0..model_stub.spatial.len() {
            let pa = model_stub.spatial[a];
            for b in 0..model_stub.spatial.len() {
                let pb = model_stub.spatial[b];
                let c_ab = pa.weight * pa.chi_sp * pb.weight * pb.chi_sp;
                if c_ab == 0.0 {
                    continue;
                }
                let dx = [
                    pa.position[0] - pb.position[0],
                    pa.position[1] - pb.position[1],
                    pa.position[2] - pb.position[2],
                ];
                let v_c = model_stub.coulomb_potential(dx);
                let q = model_stub.normal_ordered_current_pair(pa.position, pb.position)?;
                quartic_sum += q * (v_c * c_ab);
            }
        }
        let e2_half = Complex64::new(0.5 * coupling * coupling, 0.0);
        let h_ii_fermion = quartic_sum * e2_half;
        let h_ii = model_stub
            .composite
            .kron_lift(Some(&h_ii_fermion), None)?;
        let h_ii = hermitize("H_II", h_ii)?;

        let h_int = &h_i + &h_ii;
        let h_tot = model_stub.h_fr.matrix() + &h_int;

        Ok(Self {
            h_i,
            h_ii,
            h_int,
            h_tot,
            ..model_stub
        })
    }

    pub fn photon(&self) -> &PhotonModeSet {
        &self.photon
    }

    pub fn electron(&self) -> &ElectronModeSet {
        &self.electron
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn spatial(&self) -> &[SpatialPoint] {
        &self.spatial
    }

    pub fn composite(&self) -> &CompositeSpace {
        &self.composite
    }

    pub fn dim(&self) -> usize {
        self.composite.dim()
    }

    pub fn h_fr(&self) -> &HermitianOperator {
        &self.h_fr
    }

    pub fn h_i(&self) -> &CMatrix {
        &self.h_i
    }

    pub fn h_ii(&self) -> &CMatrix {
        &self.h_ii
    }

    pub fn h_int(&self) -> &CMatrix {
        &self.h_int
    }

    pub fn h_tot(&self) -> &CMatrix {
        &self.h_tot
    }

    /// Index of the joint vacuum `Ω0`.
    pub fn vacuum_index(&self) -> usize {
        self.composite.vacuum_index()
    }

    pub fn vacuum(&self) -> CVector {
        let mut v = CVector::zeros(self.dim());
        v[self.vacuum_index()] = Complex64::new(1.0, 0.0);
        v
    }

    /// One-particle coefficient vector of the gauge field at `x` in
    /// direction `j` (1..=3): per mode `(i, r)`,
    /// `χ̂(k_i) e^{-i k_i · x} e_j^{(r)}(k_i) / sqrt(2 ω_i)`.
    fn photon_coefficients(&self, direction: usize, x: [f64; 3]) -> Result<CVector> {
        if !(1..=3).contains(&direction) {
            return Err(Error::InvalidArgument(format!(
                "photon field direction must be 1..=3, got {direction}"
            )));
        }
        let n = self.photon.n_modes();
        let mut f = CVector::zeros(n);
        for i in 0..self.photon.momenta().len() {
            let k = self.photon.momenta()[i];
            let omega = self.photon.omega(i);
            let phase = (-Complex64::i() * dot3(k, x)).exp();
            for r in 0..2 {
                let e_j = self.photon.polarization(i, r)[direction - 1];
                f[self.photon.mode_index(i, r)] =
                    self.photon.chi_hat()[i] * phase * (e_j / (2.0 * omega).sqrt());
            }
        }
        Ok(f)
    }

    /// Quantized electromagnetic field `A_j(0, x) = A(f) + A(f)^*` on the
    /// boson space.
    pub fn photon_field(&self, direction: usize, x: [f64; 3]) -> Result<CMatrix> {
        let f = self.photon_coefficients(direction, x)?;
        self.composite.boson.field(&f)
    }

    /// The ψ-factor (annihilation, creation arguments) of the Dirac field
    /// component `ψ_l(0, x)`, `l` in 0..4:
    /// `ψ_l = Σ_s b_s(χ̂_x (u_s^l)^*) + d_s(χ̂_x ṽ_s^l)^*`.
    pub fn dirac_factor(&self, l: usize, x: [f64; 3]) -> Result<PsiFactor> {
        if l >= 4 {
            return Err(Error::InvalidArgument(format!(
                "Dirac component must be 0..4, got {l}"
            )));
        }
        let n = self.electron.n_modes();
        let mut f = CVector::zeros(n);
        let mut g = CVector::zeros(n);
        for j in 0..self.electron.n_momenta() {
            let p = self.electron.momenta()[j];
            let chi_x = self.electron.chi_hat()[j] * (-Complex64::i() * dot3(p, x)).exp();
            for s in 0..2 {
                // B(f) is anti-linear, so f carries the argument of b_s
                // directly: χ̂_x (u_s^l)^*.
                f[self.electron.particle_index(j, s)] =
                    chi_x * self.electron.u_spinor(j, s)[l].conj();
                g[self.electron.antiparticle_index(j, s)] =
                    chi_x * self.electron.v_tilde_spinor(j, s)[l];
            }
        }
        Ok(PsiFactor::new(f, g))
    }

    /// Matrix of `ψ_l(0, x)` on the fermion space.
    pub fn dirac_field(&self, l: usize, x: [f64; 3]) -> Result<CMatrix> {
        let factor = self.dirac_factor(l, x)?;
        Ok(self.composite.fermion.annihilator(&factor.annihilation)?
            + self.composite.fermion.creator(&factor.creation)?)
    }

    /// Plain (not normal-ordered) current
    /// `j^μ(0, x) = Σ_{l,l'} ψ_l† α^μ_{ll'} ψ_{l'}`.
    pub fn current(&self, mu: usize, x: [f64; 3]) -> Result<CMatrix> {
        if mu > 3 {
            return Err(Error::InvalidArgument(format!(
                "current index must be 0..=3, got {mu}"
            )));
        }
        let alpha = alpha_matrix(mu);
        let psi: Vec<CMatrix> = (0..4)
            .map(|l| self.dirac_field(l, x))
            .collect::<Result<_>>()?;
        let df = self.composite.fermion.dim();
        let mut out = CMatrix::zeros(df, df);
        for l in 0..4 {
            for lp in 0..4 {
                let a = alpha[(l, lp)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                out += psi[l].adjoint() * &psi[lp] * a;
            }
        }
        Ok(out)
    }

    /// Normal-ordered current `:j^μ(0, x):`.
    pub fn normal_ordered_current(&self, mu: usize, x: [f64; 3]) -> Result<CMatrix> {
        if mu > 3 {
            return Err(Error::InvalidArgument(format!(
                "current index must be 0..=3, got {mu}"
            )));
        }
        let alpha = alpha_matrix(mu);
        let factors: Vec<PsiFactor> = (0..4)
            .map(|l| self.dirac_factor(l, x))
            .collect::<Result<_>>()?;
        let df = self.composite.fermion.dim();
        let mut out = CMatrix::zeros(df, df);
        for l in 0..4 {
            for lp in 0..4 {
                let a = alpha[(l, lp)];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let no = self
                    .composite
                    .fermion
                    .normal_ordered_product(&[factors[l].adjoint(), factors[lp].clone()])?;
                out += no * a;
            }
        }
        Ok(out)
    }

    /// `:j⁰(0, x) j⁰(0, y):` as a single normal-ordered quartic
    /// (`α⁰ = I`, so the spinor sums are diagonal).
    pub fn normal_ordered_current_pair(&self, x: [f64; 3], y: [f64; 3]) -> Result<CMatrix> {
        let fx: Vec<PsiFactor> = (0..4)
            .map(|l| self.dirac_factor(l, x))
            .collect::<Result<_>>()?;
        let fy: Vec<PsiFactor> = (0..4)
            .map(|l| self.dirac_factor(l, y))
            .collect::<Result<_>>()?;
        let df = self.composite.fermion.dim();
        let mut out = CMatrix::zeros(df, df);
        for l in 0..4 {
            for m in 0..4 {
                out += self.composite.fermion.normal_ordered_product(&[
                    fx[l].adjoint(),
                    fx[l].clone(),
                    fy[m].adjoint(),
                    fy[m].clone(),
                ])?;
            }
        }
        Ok(out)
    }

    /// Mode-sum Coulomb kernel
    /// `V_C(x) = (1/4π) Σ_i |χ̂_ph(k_i)|² e^{i k_i · x} / ω(k_i)²`.
    pub fn coulomb_potential(&self, x: [f64; 3]) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, k) in self.photon.momenta().iter().enumerate() {
            let omega = self.photon.omega(i);
            acc += (Complex64::i() * dot3(*k, x)).exp()
                * (self.photon.chi_hat()[i].norm_sqr() / (omega * omega));
        }
        acc / (4.0 * std::f64::consts::PI)
    }

    /// `I ⊗ A_j(0, x)` on the composite space.
    pub fn lifted_photon_field(&self, direction: usize, x: [f64; 3]) -> Result<CMatrix> {
        let a = self.photon_field(direction, x)?;
        self.composite.kron_lift(None, Some(&a))
    }

    /// `ψ_l(0, x) ⊗ I` on the composite space.
    pub fn lifted_dirac_field(&self, l: usize, x: [f64; 3]) -> Result<CMatrix> {
        let psi = self.dirac_field(l, x)?;
        self.composite.kron_lift(Some(&psi), None)
    }

    /// `ψ_l(0, x)† ⊗ I` on the composite space.
    pub fn lifted_dirac_field_dag(&self, l: usize, x: [f64; 3]) -> Result<CMatrix> {
        let psi = self.dirac_field(l, x)?;
        self.composite.kron_lift(Some(&psi.adjoint()), None)
    }

    /// `||ad^n_{H_fr}(H_int) (H_fr + 1)^{-1}||_F`: the relative-boundedness
    /// surrogate of the iterated commutators (H_fr is diagonal, so the
    /// commutator scales entries by energy differences).
    pub fn commutator_relative_norm(&self, n: u32) -> f64 {
        let lam = self.h_fr.eigenvalues();
        // h_fr is diagonal in the computational basis and from_diagonal
        // sorts, so read energies off the matrix diagonal instead.
        let dim = self.dim();
        let energy: Vec<f64> = (0..dim).map(|i| self.h_fr.matrix()[(i, i)].re).collect();
        debug_assert_eq!(lam.len(), dim);
        let mut acc = 0.0_f64;
        for c in 0..dim {
            let scale = 1.0 / (energy[c] + 1.0);
            for r in 0..dim {
                let factor = (energy[r] - energy[c]).powi(n as i32) * scale;
                acc += (self.h_int[(r, c)] * factor).norm_sqr();
            }
        }
        acc.sqrt()
    }
}

fn hermitize(label: &str, m: CMatrix) -> Result<CMatrix> {
    let defect = frobenius_norm(&(&m - m.adjoint()));
    let scale = frobenius_norm(&m).max(f64::MIN_POSITIVE);
    if defect > 1e-11 * scale {
        return Err(Error::InvalidArgument(format!(
            "{label} assembly lost Hermiticity: defect {defect:.3e} vs scale {scale:.3e}"
        )));
    }
    Ok((&m + m.adjoint()).map(|z| z * 0.5))
}
