//! Mode Hamiltonians, spectra and initial states.
//!
//! After the Jordan-Wigner and Fourier transformations the even-parity
//! sector of the periodic chain splits into `N/2` independent blocks, one
//! per positive quasimomentum `k = (2l - 1) pi / N`. Each block acts on the
//! pair `(k, -k)` as a real symmetric, traceless 2x2 matrix. Basis ordering
//! is `|1> = (1, 0)`, `|0> = (0, 1)` throughout.

use std::f64::consts::PI;

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::linalg::{self, CMat2, RMat2, C64};

/// Coupling matrix of the field noise inside every mode block.
pub const MODE_NOISE_COUPLING: [[f64; 2]; 2] = [[2.0, 0.0], [0.0, -2.0]];

/// Positive quasimomenta of an even-parity periodic chain of `n` sites.
pub fn quasimomenta(n: usize) -> Result<Vec<f64>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "chain length must be even and at least 2, got {n}"
        )));
    }
    Ok((1..=n / 2)
        .map(|l| (2 * l - 1) as f64 * PI / n as f64)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainSpec {
    n_sites: usize,
    h_i: f64,
    modes: Vec<f64>,
}

impl ChainSpec {
    pub fn new(n_sites: usize, h_i: f64) -> Result<Self> {
        if !h_i.is_finite() {
            return Err(Error::invalid("initial field must be finite"));
        }
        Ok(Self {
            n_sites,
            h_i,
            modes: quasimomenta(n_sites)?,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn h_i(&self) -> f64 {
        self.h_i
    }

    pub fn modes(&self) -> &[f64] {
        &self.modes
    }

    /// Ground-state energy per site of the battery Hamiltonian.
    pub fn ground_energy_per_site(&self) -> f64 {
        let total: f64 = self
            .modes
            .iter()
            .map(|&k| mode_spectrum(k, self.h_i).0)
            .sum();
        total / self.n_sites as f64
    }
}

/// `H_k(h)` for one quasimomentum block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeHamiltonian {
    pub k: f64,
    pub h: f64,
    matrix: RMat2,
}

impl ModeHamiltonian {
    pub fn matrix(&self) -> &RMat2 {
        &self.matrix
    }

    pub fn to_complex(&self) -> CMat2 {
        linalg::complexify(&self.matrix)
    }

    pub fn eigensystem(&self) -> ModeEigenSystem {
        mode_eigensystem(self.k, self.h)
    }
}

pub fn mode_hamiltonian(k: f64, h: f64) -> ModeHamiltonian {
    let diag = 2.0 * (h - k.cos());
    let off = 2.0 * k.sin();
    ModeHamiltonian {
        k,
        h,
        matrix: RMat2::new(diag, off, off, -diag),
    }
}

/// `(eps_minus, eps_plus)` with `eps_plus = 2 sqrt((h - cos k)^2 + sin^2 k)`.
pub fn mode_spectrum(k: f64, h: f64) -> (f64, f64) {
    let e = 2.0 * (h - k.cos()).hypot(k.sin());
    (-e, e)
}

/// Instantaneous eigenbasis of one mode block.
///
/// `chi_minus = (a, b)` and `chi_plus = (-b, a)`, with the gauge fixed by
/// `b >= 0` (strictly positive inside `(0, pi)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeEigenSystem {
    pub eps_minus: f64,
    pub eps_plus: f64,
    pub a: f64,
    pub b: f64,
    /// Norm of the unnormalised eigenvector that was scaled to unit length.
    pub norm: f64,
}

impl ModeEigenSystem {
    pub fn chi_minus(&self) -> [f64; 2] {
        [self.a, self.b]
    }

    pub fn chi_plus(&self) -> [f64; 2] {
        [-self.b, self.a]
    }
}

pub fn mode_eigensystem(k: f64, h: f64) -> ModeEigenSystem {
    let (eps_minus, eps_plus) = mode_spectrum(k, h);
    let d = 2.0 * (h - k.cos());
    let s = 2.0 * k.sin();
    // Both branches span the same ray; pick the one without cancellation.
    let (mut a, mut b) = if d >= 0.0 {
        (-s, d + eps_plus)
    } else {
        (d - eps_plus, s)
    };
    let mut norm = a.hypot(b);
    if norm < 1e-300 {
        // Gap closes (sin k = 0 and h = cos k); any vector is an eigenvector.
        a = 0.0;
        b = 1.0;
        norm = 1.0;
    } else {
        a /= norm;
        b /= norm;
    }
    if b < 0.0 || (b == 0.0 && a > 0.0) {
        a = -a;
        b = -b;
    }
    ModeEigenSystem {
        eps_minus,
        eps_plus,
        a,
        b,
        norm,
    }
}

/// 2x2 density matrix of one mode or one qubit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2(CMat2);

impl DensityMatrix2 {
    pub const HERMITICITY_TOL: f64 = 1e-12;
    pub const TRACE_TOL: f64 = 1e-10;
    pub const SPECTRUM_TOL: f64 = 1e-9;

    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: CMat2) -> Result<Self> {
        let rho = Self(m);
        rho.check(Self::HERMITICITY_TOL, Self::TRACE_TOL, Self::SPECTRUM_TOL)?;
        Ok(rho)
    }

    /// Wraps an integrator output without validation.
    pub fn from_matrix_unchecked(m: CMat2) -> Self {
        Self(m)
    }

    pub fn pure(v: [C64; 2]) -> Self {
        let v = Vector2::new(v[0], v[1]);
        let v = v.unscale(v.norm());
        Self(linalg::projector(&v))
    }

    pub fn pure_real(v: [f64; 2]) -> Self {
        Self::pure([C64::new(v[0], 0.0), C64::new(v[1], 0.0)])
    }

    pub fn maximally_mixed() -> Self {
        Self(CMat2::identity() * C64::new(0.5, 0.0))
    }

    pub fn matrix(&self) -> &CMat2 {
        &self.0
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    /// Ascending eigenvalues of the Hermitian part.
    pub fn eigenvalues(&self) -> [f64; 2] {
        linalg::hermitian_eigenvalues(&self.0)
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.0 - self.0.adjoint())
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    /// `Tr[rho H]` for a real symmetric `H`.
    pub fn expectation(&self, h: &RMat2) -> f64 {
        linalg::real_trace_product(&self.0, h).re
    }

    pub fn population(&self, v: [f64; 2]) -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += v[i] * self.0[(i, j)] * v[j];
            }
        }
        acc.re
    }

    pub fn check(&self, herm_tol: f64, trace_tol: f64, spectrum_tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > herm_tol {
            return Err(Error::invalid(format!(
                "density matrix not Hermitian (deviation {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > trace_tol || tr.im.abs() > trace_tol {
            return Err(Error::invalid(format!("density matrix trace {tr} != 1")));
        }
        let [lo, hi] = self.eigenvalues();
        if lo < -spectrum_tol || hi > 1.0 + spectrum_tol {
            return Err(Error::invalid(format!(
                "density matrix spectrum ({lo}, {hi}) outside [0, 1]"
            )));
        }
        Ok(())
    }
}

/// `|chi_minus(k, h)><chi_minus(k, h)|`.
pub fn mode_ground_state(k: f64, h: f64) -> DensityMatrix2 {
    DensityMatrix2::pure_real(mode_eigensystem(k, h).chi_minus())
}

/// Standalone single-qubit battery `H_B = -J sigma_x - h_i sigma_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitBattery {
    pub j: f64,
    pub h_i: f64,
    pub omega_b: f64,
}

impl QubitBattery {
    pub fn hamiltonian(&self) -> RMat2 {
        qubit_hamiltonian(self.j, self.h_i)
    }

    /// Ground state `|->` (energy `-omega_B`).
    pub fn minus(&self) -> [f64; 2] {
        let (sum, _) = self.shifted_omegas();
        let n = (2.0 * self.omega_b * sum).sqrt();
        [sum / n, self.j / n]
    }

    /// Excited state `|+>` (energy `+omega_B`).
    pub fn plus(&self) -> [f64; 2] {
        let (_, diff) = self.shifted_omegas();
        let n = (2.0 * self.omega_b * diff).sqrt();
        [-diff / n, self.j / n]
    }

    /// `(omega_B + h_i, omega_B - h_i)`, each computed without cancellation.
    fn shifted_omegas(&self) -> (f64, f64) {
        let j2 = self.j * self.j;
        if self.h_i >= 0.0 {
            let sum = self.omega_b + self.h_i;
            (sum, j2 / sum)
        } else {
            let diff = self.omega_b - self.h_i;
            (j2 / diff, diff)
        }
    }

    pub fn ground_state(&self) -> DensityMatrix2 {
        DensityMatrix2::pure_real(self.minus())
    }
}

pub fn qubit_battery(h_i: f64, j: f64) -> Result<QubitBattery> {
    if !(j > 0.0) || !j.is_finite() {
        return Err(Error::invalid(format!(
            "coupling J must be positive, got {j}"
        )));
    }
    if !h_i.is_finite() {
        return Err(Error::invalid("field must be finite"));
    }
    Ok(QubitBattery {
        j,
        h_i,
        omega_b: j.hypot(h_i),
    })
}

/// `-J sigma_x - h sigma_z`.
pub fn qubit_hamiltonian(j: f64, h: f64) -> RMat2 {
    RMat2::new(-h, -j, -j, h)
}

/// Noise coupling of the single qubit: the field multiplies `-sigma_z`.
pub const QUBIT_NOISE_COUPLING: [[f64; 2]; 2] = [[-1.0, 0.0], [0.0, 1.0]];

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn residual(m: &RMat2, v: [f64; 2], e: f64) -> f64 {
        let hv = m * Vector2::new(v[0], v[1]);
        (hv - Vector2::new(v[0], v[1]) * e).norm()
    }

    #[test]
    fn quasimomenta_small_chains() {
        assert_eq!(quasimomenta(2).unwrap(), vec![FRAC_PI_2]);
        let q4 = quasimomenta(4).unwrap();
        assert_abs_diff_eq!(q4[0], FRAC_PI_4, epsilon = 1e-15);
        assert_abs_diff_eq!(q4[1], 3.0 * FRAC_PI_4, epsilon = 1e-15);
    }

    #[test]
    fn quasimomenta_three_hundred() {
        let q = quasimomenta(300).unwrap();
        assert_eq!(q.len(), 150);
        assert_abs_diff_eq!(q[0], PI / 300.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q[149], 299.0 * PI / 300.0, epsilon = 1e-14);
        assert!(q.windows(2).all(|w| w[0] < w[1]));
        assert!(q.iter().all(|&k| k > 0.0 && k < PI));
    }

    #[test]
    fn quasimomenta_reject_odd_and_zero() {
        assert!(quasimomenta(0).is_err());
        assert!(quasimomenta(7).is_err());
        assert!(ChainSpec::new(5, 0.8).is_err());
    }

    #[test]
    fn mode_hamiltonian_examples() {
        let m = mode_hamiltonian(FRAC_PI_2, 0.0);
        assert_abs_diff_eq!(*m.matrix(), RMat2::new(0.0, 2.0, 2.0, 0.0), epsilon = 1e-15);
        let m = mode_hamiltonian(FRAC_PI_2, 0.8);
        assert_abs_diff_eq!(
            *m.matrix(),
            RMat2::new(1.6, 2.0, 2.0, -1.6),
            epsilon = 1e-15
        );
        let m = mode_hamiltonian(PI, 1.0);
        assert_abs_diff_eq!(
            *m.matrix(),
            RMat2::new(4.0, 0.0, 0.0, -4.0),
            epsilon = 1e-15
        );
    }

    #[test]
    fn spectrum_examples() {
        let (lo, hi) = mode_spectrum(FRAC_PI_2, 0.0);
        assert_abs_diff_eq!(lo, -2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-15);
        let (lo, hi) = mode_spectrum(FRAC_PI_2, 0.8);
        assert_abs_diff_eq!(hi, 2.0 * 1.64f64.sqrt(), epsilon = 1e-14);
        assert_abs_diff_eq!(lo, -hi, epsilon = 0.0);
        // Gap closes at the critical field as k -> 0.
        let gaps: Vec<f64> = [1e-2, 1e-4, 1e-6]
            .iter()
            .map(|&k| mode_spectrum(k, 1.0).1)
            .collect();
        assert!(gaps.windows(2).all(|w| w[1] < w[0]));
        assert!(gaps[2] < 1e-5);
    }

    #[test]
    fn ground_state_energy_and_purity() {
        for &(k, h) in &[(0.3, 0.8), (2.9, -1.5), (FRAC_PI_2, 1.5), (1.0, 1.0)] {
            let rho = mode_ground_state(k, h);
            assert_abs_diff_eq!(rho.purity(), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-14);
            let e = rho.expectation(mode_hamiltonian(k, h).matrix());
            assert_abs_diff_eq!(e, mode_spectrum(k, h).0, epsilon = 1e-10);
        }
    }

    #[test]
    fn ground_state_large_field_limit() {
        // Diagonalising [[2h, s], [s, -2h]] for h >> s: ground vector -> (0, 1).
        let rho = mode_ground_state(1.2, 1e6);
        assert_abs_diff_eq!(rho.get(1, 1).re, 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(rho.get(0, 0).re, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn eigensystem_at_zone_edges() {
        // sin k = 0: eigenvectors are the basis states.
        let es = mode_eigensystem(PI, 1.0);
        assert_abs_diff_eq!(es.b, 1.0, epsilon = 1e-15);
        let es = mode_eigensystem(0.0, 0.5);
        assert_abs_diff_eq!(es.a.abs(), 1.0, epsilon = 1e-15);
        let m = mode_hamiltonian(0.0, 0.5);
        assert!(residual(m.matrix(), es.chi_minus(), es.eps_minus) < 1e-12);
    }

    #[test]
    fn qubit_battery_examples() {
        let qb = qubit_battery(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(qb.omega_b, 1.0, epsilon = 1e-15);
        let m = qb.minus();
        assert_abs_diff_eq!(m[0], 1.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(m[1], 1.0 / 2f64.sqrt(), epsilon = 1e-15);

        let qb = qubit_battery(0.8, 1.0).unwrap();
        assert_abs_diff_eq!(qb.omega_b, 1.64f64.sqrt(), epsilon = 1e-15);
        let h = qb.hamiltonian();
        assert!(residual(&h, qb.plus(), qb.omega_b) < 1e-12);
        assert!(residual(&h, qb.minus(), -qb.omega_b) < 1e-12);
        assert!(qubit_battery(0.8, 0.0).is_err());
    }

    #[test]
    fn density_matrix_validation() {
        assert!(DensityMatrix2::new(*DensityMatrix2::maximally_mixed().matrix()).is_ok());
        let bad = CMat2::new(
            C64::new(1.2, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-0.2, 0.0),
        );
        assert!(DensityMatrix2::new(bad).is_err());
        let non_herm = CMat2::new(
            C64::new(0.5, 0.0),
            C64::new(0.1, 0.0),
            C64::new(0.2, 0.0),
            C64::new(0.5, 0.0),
        );
        assert!(DensityMatrix2::new(non_herm).is_err());
    }

    proptest! {
        #[test]
        fn eigenvectors_solve_mode_hamiltonian(k in 1e-3f64..(PI - 1e-3), h in -5.0f64..5.0) {
            let m = mode_hamiltonian(k, h);
            let es = m.eigensystem();
            prop_assert!(residual(m.matrix(), es.chi_minus(), es.eps_minus) < 1e-10);
            prop_assert!(residual(m.matrix(), es.chi_plus(), es.eps_plus) < 1e-10);
            prop_assert!(es.b > 0.0);
            prop_assert!((es.a.hypot(es.b) - 1.0).abs() < 1e-14);
            prop_assert!(es.eps_plus >= 0.0);
            prop_assert!((m.matrix().trace()).abs() < 1e-14);
        }

        #[test]
        fn qubit_eigenvectors_orthonormal(h in -10.0f64..10.0, j in 0.1f64..3.0) {
            let qb = qubit_battery(h, j).unwrap();
            let (p, m) = (qb.plus(), qb.minus());
            prop_assert!((p[0] * m[0] + p[1] * m[1]).abs() < 1e-12);
            prop_assert!((p[0].hypot(p[1]) - 1.0).abs() < 1e-12);
            prop_assert!((m[0].hypot(m[1]) - 1.0).abs() < 1e-12);
            let hb = qb.hamiltonian();
            prop_assert!(residual(&hb, p, qb.omega_b) < 1e-12 * (1.0 + qb.omega_b));
            prop_assert!(residual(&hb, m, -qb.omega_b) < 1e-12 * (1.0 + qb.omega_b));
        }
    }
}
