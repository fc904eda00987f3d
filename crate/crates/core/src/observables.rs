//! Figures of merit: stored energy, ergotropy, efficiency, excitation
//! probabilities, and the slow-ramp analysis of the single qubit.

use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::dynamics::ChainEvolution;
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigenvalues, RMat2};
use crate::model::{
    mode_eigensystem, mode_hamiltonian, qubit_hamiltonian, DensityMatrix2, ModeHamiltonian,
};
use crate::protocol::{NoiseSpec, RampProtocol};

/// Stored energy is treated as zero below this; efficiency is undefined there.
pub const EFFICIENCY_THRESHOLD: f64 = 1e-12;

/// `Tr[(rho_t - rho_0) H]`.
pub fn stored_energy_mode(
    rho_t: &DensityMatrix2,
    rho_0: &DensityMatrix2,
    h_batt: &ModeHamiltonian,
) -> f64 {
    rho_t.expectation(h_batt.matrix()) - rho_0.expectation(h_batt.matrix())
}

pub fn stored_energy_per_site(mode_energies: &[f64], n: usize) -> Result<f64> {
    if n == 0 || mode_energies.len() * 2 != n {
        return Err(Error::invalid(format!(
            "expected {} mode energies for N = {n}, got {}",
            n / 2,
            mode_energies.len()
        )));
    }
    Ok(mode_energies.iter().sum::<f64>() / n as f64)
}

/// Energy above the passive state with the same spectrum.
pub fn ergotropy_2x2(rho: &DensityMatrix2, h: &RMat2) -> f64 {
    let [p_min, p_max] = rho.eigenvalues();
    let [e_min, e_max] = symmetric_eigenvalues(h);
    rho.expectation(h) - (p_max * e_min + p_min * e_max)
}

/// `ergotropy / dE`, undefined when nothing is stored.
pub fn efficiency(ergotropy: f64, de: f64) -> Option<f64> {
    (de > EFFICIENCY_THRESHOLD).then(|| ergotropy / de)
}

/// Population of the upper eigenstate of the battery mode at `h_i`.
pub fn excitation_probability(rho: &DensityMatrix2, k: f64, h_i: f64) -> f64 {
    rho.population(mode_eigensystem(k, h_i).chi_plus())
}

/// Energy the qubit would store if it followed the instantaneous ground
/// state of `-J sigma_x - h(t) sigma_z`, measured with the battery field.
pub fn adiabatic_energy(protocol: &RampProtocol, j: f64, t: f64) -> Result<f64> {
    let h = protocol.field_at(t)?;
    let h_i = protocol.h_i;
    let w = j.hypot(h);
    let w_b = j.hypot(h_i);
    Ok(-h_i * (h / w - h_i / w_b) - j * j * (1.0 / w - 1.0 / w_b))
}

/// Instantaneous angular frequency `2 sqrt(J^2 + h^2)`.
pub fn instantaneous_frequency(j: f64, h: f64) -> f64 {
    2.0 * j.hypot(h)
}

// 8-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let panels = ((b - a).ceil() as usize).max(1);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * width;
        let half = 0.5 * width;
        let mut acc = 0.0;
        for (x, w) in GL_NODES.iter().zip(&GL_WEIGHTS) {
            acc += w * (f(mid - half * x) + f(mid + half * x));
        }
        total += half * acc;
    }
    total
}

/// `phi(t) = int_0^t 2 sqrt(J^2 + h(s)^2) ds`.
pub fn phase_integral(protocol: &RampProtocol, j: f64, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::invalid(format!(
            "time must be non-negative, got {t}"
        )));
    }
    let ramp_end = t.min(protocol.t_f);
    let on_ramp = gauss_legendre(
        |s| instantaneous_frequency(j, protocol.field_at(s).unwrap_or(protocol.h_i)),
        0.0,
        ramp_end,
    );
    Ok(on_ramp + instantaneous_frequency(j, protocol.h_f) * (t - ramp_end).max(0.0))
}

/// Result of splitting `dE` into the adiabatic part and one harmonic.
#[derive(Debug, Clone, PartialEq)]
pub struct AdiabaticDecomposition {
    pub de_slow: Vec<f64>,
    pub phase: Vec<f64>,
    pub a_fit: f64,
    pub phi_0: f64,
    /// RMS of `dE - dE_slow - A cos(phi - phi_0)` over the fitted points.
    pub residual: f64,
}

/// Least-squares `A, phi_0` for `dE - dE_slow ~ A cos(phi - phi_0)`.
pub fn fit_oscillations(
    de: &[f64],
    de_slow: &[f64],
    phase: &[f64],
) -> Result<AdiabaticDecomposition> {
    if de.len() != de_slow.len() || de.len() != phase.len() {
        return Err(Error::invalid("fit series must have equal lengths"));
    }
    let span = match (phase.first(), phase.last()) {
        (Some(a), Some(b)) => b - a,
        _ => 0.0,
    };
    if !(span >= PI) {
        return Err(Error::DegenerateFit(format!(
            "phase span {span:.3} rad is below pi"
        )));
    }
    let (mut cc, mut cs, mut ss, mut rc, mut rs) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..de.len() {
        let (s, c) = phase[i].sin_cos();
        let r = de[i] - de_slow[i];
        cc += c * c;
        cs += c * s;
        ss += s * s;
        rc += r * c;
        rs += r * s;
    }
    let det = cc * ss - cs * cs;
    if !(det > 1e-12 * (cc * ss).max(f64::MIN_POSITIVE)) {
        return Err(Error::DegenerateFit(
            "cos/sin regressors are collinear".into(),
        ));
    }
    let a = (rc * ss - rs * cs) / det;
    let b = (rs * cc - rc * cs) / det;
    let mut sq = 0.0;
    for i in 0..de.len() {
        let (s, c) = phase[i].sin_cos();
        let e = de[i] - de_slow[i] - a * c - b * s;
        sq += e * e;
    }
    Ok(AdiabaticDecomposition {
        de_slow: de_slow.to_vec(),
        phase: phase.to_vec(),
        a_fit: a.hypot(b),
        phi_0: b.atan2(a),
        residual: (sq / de.len() as f64).sqrt(),
    })
}

/// Fits the qubit series over the ramp window `[t_skip, t_f]`, where
/// `t_skip` is `transient_periods` oscillation periods at `h_i`.
pub fn adiabatic_decomposition(
    protocol: &RampProtocol,
    j: f64,
    times: &[f64],
    de: &[f64],
    transient_periods: f64,
) -> Result<AdiabaticDecomposition> {
    if times.len() != de.len() {
        return Err(Error::invalid("times and energies must have equal lengths"));
    }
    let t_skip = transient_periods * 2.0 * PI / instantaneous_frequency(j, protocol.h_i);
    let (mut t_w, mut de_w) = (Vec::new(), Vec::new());
    for (&t, &e) in times.iter().zip(de) {
        if t >= t_skip && t <= protocol.t_f {
            t_w.push(t);
            de_w.push(e);
        }
    }
    let slow = t_w
        .iter()
        .map(|&t| adiabatic_energy(protocol, j, t))
        .collect::<Result<Vec<_>>>()?;
    let phase = phase_series(protocol, j, &t_w)?;
    fit_oscillations(&de_w, &slow, &phase)
}

/// `phi` on an increasing grid, accumulated interval by interval.
pub fn phase_series(protocol: &RampProtocol, j: f64, times: &[f64]) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(times.len());
    let mut prev_t = 0.0;
    let mut acc = 0.0;
    for &t in times {
        if t < prev_t {
            return Err(Error::invalid("phase grid must be non-decreasing from 0"));
        }
        acc += phase_integral(protocol, j, t)? - phase_integral(protocol, j, prev_t)?;
        out.push(acc);
        prev_t = t;
    }
    Ok(out)
}

/// Angular frequency of the largest spectral peak of a uniformly sampled
/// signal, after mean subtraction. Zero padding and a parabolic fit to the
/// peak refine the bin estimate.
pub fn dominant_angular_frequency(signal: &[f64], dt: f64) -> Result<f64> {
    if signal.len() < 4 || !(dt > 0.0) {
        return Err(Error::invalid("need at least 4 samples and dt > 0"));
    }
    let mean = signal.iter().sum::<f64>() / signal.len() as f64;
    let n = (signal.len() * 16).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = signal
        .iter()
        .map(|&x| Complex::new(x - mean, 0.0))
        .chain(std::iter::repeat(Complex::new(0.0, 0.0)))
        .take(n)
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let mag: Vec<f64> = buf[..n / 2].iter().map(|z| z.norm()).collect();
    let (peak, _) = mag
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::invalid("empty spectrum"))?;
    let shift = if peak + 1 < mag.len() {
        let (l, c, r) = (mag[peak - 1], mag[peak], mag[peak + 1]);
        let denom = l - 2.0 * c + r;
        if denom != 0.0 {
            0.5 * (l - r) / denom
        } else {
            0.0
        }
    } else {
        0.0
    };
    Ok(2.0 * PI * (peak as f64 + shift) / (n as f64 * dt))
}

/// What produced an [`ObservableSeries`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMetadata {
    pub protocol: RampProtocol,
    pub noise: Option<NoiseSpec>,
    /// Chain length; `None` for the single qubit.
    pub n_sites: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub t: Vec<f64>,
    pub de_per_site: Vec<f64>,
    pub ergotropy_per_site: Vec<f64>,
    pub efficiency: Vec<Option<f64>>,
    pub metadata: SeriesMetadata,
}

impl ObservableSeries {
    /// Sums per-mode energies and ergotropies against `H_k(h_i)`.
    pub fn from_chain(
        evolution: &ChainEvolution,
        protocol: &RampProtocol,
        noise: Option<NoiseSpec>,
    ) -> Result<Self> {
        let n = evolution.modes.len() * 2;
        let n_t = evolution.times.len();
        let mut de = vec![0.0; n_t];
        let mut erg = vec![0.0; n_t];
        for (&k, states) in evolution.modes.iter().zip(&evolution.states) {
            let h = mode_hamiltonian(k, protocol.h_i);
            let rho0 = states
                .first()
                .ok_or_else(|| Error::invalid("empty evolution"))?;
            for (i, rho) in states.iter().enumerate() {
                de[i] += stored_energy_mode(rho, rho0, &h);
                erg[i] += ergotropy_2x2(rho, h.matrix());
            }
        }
        for v in de.iter_mut().chain(erg.iter_mut()) {
            *v /= n as f64;
        }
        Ok(Self::assemble(
            evolution.times.clone(),
            de,
            erg,
            SeriesMetadata {
                protocol: *protocol,
                noise,
                n_sites: Some(n),
            },
        ))
    }

    /// Single-qubit series against `-J sigma_x - h_i sigma_z`.
    pub fn from_qubit(
        times: &[f64],
        states: &[DensityMatrix2],
        j: f64,
        protocol: &RampProtocol,
        noise: Option<NoiseSpec>,
    ) -> Result<Self> {
        if times.len() != states.len() || states.is_empty() {
            return Err(Error::invalid(
                "times and states must be non-empty and aligned",
            ));
        }
        let h = qubit_hamiltonian(j, protocol.h_i);
        let e0 = states[0].expectation(&h);
        let de = states.iter().map(|r| r.expectation(&h) - e0).collect();
        let erg = states.iter().map(|r| ergotropy_2x2(r, &h)).collect();
        Ok(Self::assemble(
            times.to_vec(),
            de,
            erg,
            SeriesMetadata {
                protocol: *protocol,
                noise,
                n_sites: None,
            },
        ))
    }

    fn assemble(t: Vec<f64>, de: Vec<f64>, erg: Vec<f64>, metadata: SeriesMetadata) -> Self {
        let efficiency = de
            .iter()
            .zip(&erg)
            .map(|(&d, &e)| efficiency(e, d))
            .collect();
        Self {
            t,
            de_per_site: de,
            ergotropy_per_site: erg,
            efficiency,
            metadata,
        }
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Index of the grid point closest to `t`.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        self.t
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(i, _)| i)
    }
}

/// `P_k` for every mode at grid index `index`.
pub fn excitation_profile(evolution: &ChainEvolution, index: usize, h_i: f64) -> Result<Vec<f64>> {
    evolution
        .modes
        .iter()
        .zip(&evolution.states)
        .map(|(&k, s)| {
            s.get(index)
                .map(|rho| excitation_probability(rho, k, h_i))
                .ok_or_else(|| Error::invalid(format!("time index {index} out of range")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{CMat2, C64};
    use crate::model::mode_ground_state;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn excited(k: f64, h: f64) -> DensityMatrix2 {
        DensityMatrix2::pure_real(mode_eigensystem(k, h).chi_plus())
    }

    #[test]
    fn stored_energy_examples() {
        let (k, h) = (0.7, 0.8);
        let hb = mode_hamiltonian(k, h);
        let es = mode_eigensystem(k, h);
        let g = mode_ground_state(k, h);
        assert_abs_diff_eq!(stored_energy_mode(&g, &g, &hb), 0.0);
        assert_abs_diff_eq!(
            stored_energy_mode(&excited(k, h), &g, &hb),
            2.0 * es.eps_plus,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            stored_energy_mode(&DensityMatrix2::maximally_mixed(), &g, &hb),
            -es.eps_minus,
            epsilon = 1e-12
        );
    }

    #[test]
    fn per_site_sum_checks_length() {
        assert_eq!(stored_energy_per_site(&[0.0; 150], 300).unwrap(), 0.0);
        assert_eq!(stored_energy_per_site(&[1.0, 3.0], 4).unwrap(), 1.0);
        assert!(stored_energy_per_site(&[0.0; 149], 300).is_err());
    }

    #[test]
    fn ergotropy_examples() {
        let (k, h) = (2.1, -1.5);
        let hm = *mode_hamiltonian(k, h).matrix();
        let es = mode_eigensystem(k, h);
        assert_abs_diff_eq!(
            ergotropy_2x2(&mode_ground_state(k, h), &hm),
            0.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            ergotropy_2x2(&excited(k, h), &hm),
            es.eps_plus - es.eps_minus,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            ergotropy_2x2(&DensityMatrix2::maximally_mixed(), &hm),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn efficiency_sentinel() {
        assert_eq!(efficiency(0.0, 0.0), None);
        assert_eq!(efficiency(1e-13, 5e-13), None);
        assert_eq!(efficiency(0.5, 1.0), Some(0.5));
    }

    #[test]
    fn excitation_probability_examples() {
        let (k, h) = (1.0, 0.8);
        assert_abs_diff_eq!(
            excitation_probability(&mode_ground_state(k, h), k, h),
            0.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            excitation_probability(&excited(k, h), k, h),
            1.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            excitation_probability(&DensityMatrix2::maximally_mixed(), k, h),
            0.5,
            epsilon = 1e-15
        );
    }

    #[test]
    fn adiabatic_energy_vanishes_at_start() {
        for p in [
            RampProtocol::new(0.8, 1.5, 10.0).unwrap(),
            RampProtocol::new(-1.5, 1.5, 10.0).unwrap(),
        ] {
            assert_eq!(adiabatic_energy(&p, 1.0, 0.0).unwrap(), 0.0);
        }
        assert!(adiabatic_energy(&RampProtocol::constant(1.0), 1.0, -1.0).is_err());
    }

    #[test]
    fn adiabatic_energy_is_ground_state_energy_difference() {
        // Ground state of H(h) measured with H(h_i), minus -omega_B.
        let p = RampProtocol::new(0.8, 1.5, 10.0).unwrap();
        let j = 1.0f64;
        for &t in &[1.0, 5.0, 10.0, 20.0] {
            let h = p.field_at(t).unwrap();
            let w = j.hypot(h);
            let psi = [(w + h), j];
            let n2 = psi[0] * psi[0] + psi[1] * psi[1];
            let hb = qubit_hamiltonian(j, p.h_i);
            let e = (psi[0] * (hb[(0, 0)] * psi[0] + hb[(0, 1)] * psi[1])
                + psi[1] * (hb[(1, 0)] * psi[0] + hb[(1, 1)] * psi[1]))
                / n2;
            let expected = e + j.hypot(p.h_i);
            assert_abs_diff_eq!(
                adiabatic_energy(&p, j, t).unwrap(),
                expected,
                epsilon = 1e-13
            );
        }
    }

    fn phase_closed_form(p: &RampProtocol, j: f64, t: f64) -> f64 {
        // Antiderivative of 2 sqrt(J^2 + h^2) in h, divided by the slope.
        let f = |h: f64| h * j.hypot(h) + j * j * (h / j).asinh();
        let v = p.slope().unwrap();
        let tr = t.min(p.t_f);
        let h_t = p.h_i + v * tr;
        (f(h_t) - f(p.h_i)) / v + 2.0 * j.hypot(p.h_f) * (t - tr).max(0.0)
    }

    #[test]
    fn phase_integral_matches_closed_form() {
        for p in [
            RampProtocol::new(0.8, 1.5, 10.0).unwrap(),
            RampProtocol::new(-1.5, 1.5, 10.0).unwrap(),
            RampProtocol::new(0.8, 1.5, 100.0).unwrap(),
        ] {
            for &t in &[0.0, 0.3, 4.7, 10.0, 55.5, 130.0] {
                let got = phase_integral(&p, 1.0, t).unwrap();
                let want = phase_closed_form(&p, 1.0, t);
                assert_abs_diff_eq!(got, want, epsilon = 1e-11 * want.max(1.0));
            }
        }
    }

    #[test]
    fn phase_integral_examples() {
        let c = RampProtocol::constant(0.6);
        assert_abs_diff_eq!(
            phase_integral(&c, 1.0, 7.0).unwrap(),
            2.0 * 1.0f64.hypot(0.6) * 7.0,
            epsilon = 1e-12
        );
        let p = RampProtocol::new(0.8, 1.5, 10.0).unwrap();
        assert_eq!(phase_integral(&p, 1.0, 0.0).unwrap(), 0.0);
        let phi = phase_integral(&p, 1.0, 10.0).unwrap();
        assert!(phi > instantaneous_frequency(1.0, 0.8) * 10.0);
        assert!(phi < instantaneous_frequency(1.0, 1.5) * 10.0);
    }

    #[test]
    fn fit_recovers_synthetic_harmonic() {
        let p = RampProtocol::new(0.8, 1.5, 10.0).unwrap();
        let times: Vec<f64> = (0..=1000).map(|i| i as f64 * 0.01).collect();
        let slow: Vec<f64> = times
            .iter()
            .map(|&t| adiabatic_energy(&p, 1.0, t).unwrap())
            .collect();
        let phase = phase_series(&p, 1.0, &times).unwrap();
        let de: Vec<f64> = slow
            .iter()
            .zip(&phase)
            .map(|(s, f)| s + 0.01 * (f - 0.3).cos())
            .collect();
        let fit = fit_oscillations(&de, &slow, &phase).unwrap();
        assert_abs_diff_eq!(fit.a_fit, 0.01, epsilon = 1e-6);
        assert_abs_diff_eq!(fit.phi_0, 0.3, epsilon = 1e-6);
        assert!(fit.residual < 1e-12);
        let short = &phase[..20];
        assert!(matches!(
            fit_oscillations(&de[..20], &slow[..20], short),
            Err(Error::DegenerateFit(_))
        ));
    }

    #[test]
    fn phase_series_non_decreasing() {
        let p = RampProtocol::new(-1.5, 1.5, 10.0).unwrap();
        let times: Vec<f64> = (0..=300).map(|i| i as f64 * 0.1).collect();
        let phi = phase_series(&p, 1.0, &times).unwrap();
        assert!(phi.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(phi[0], 0.0);
    }

    #[test]
    fn fft_peak_of_pure_tone() {
        let dt = 0.01;
        let omega = 3.6055;
        let s: Vec<f64> = (0..3500)
            .map(|i| 0.2 + (omega * i as f64 * dt + 0.4).cos())
            .collect();
        let w = dominant_angular_frequency(&s, dt).unwrap();
        assert!((w - omega).abs() / omega < 1e-3);
    }

    proptest! {
        #[test]
        fn ergotropy_depends_only_on_spectra(
            p in 0.0f64..1.0,
            theta in 0.0f64..PI,
            phi in 0.0f64..(2.0 * PI),
            k in 0.01f64..3.13,
            h in -3.0f64..3.0,
        ) {
            let hm = *mode_hamiltonian(k, h).matrix();
            let diag = CMat2::new(C64::new(p, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::new(1.0 - p, 0.0));
            let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
            let u = CMat2::new(
                C64::new(c, 0.0),
                -C64::from_polar(s, -phi),
                C64::from_polar(s, phi),
                C64::new(c, 0.0),
            );
            let rho = DensityMatrix2::from_matrix_unchecked(u * diag * u.adjoint());
            let erg = ergotropy_2x2(&rho, &hm);
            prop_assert!(erg >= -1e-10);
            let (pmax, pmin) = (p.max(1.0 - p), p.min(1.0 - p));
            let [lo, hi] = symmetric_eigenvalues(&hm);
            let e = rho.expectation(&hm);
            prop_assert!((erg - (e - pmax * lo - pmin * hi)).abs() < 1e-12);
            // Ergotropy never exceeds the energy above the ground level.
            prop_assert!(erg <= e - lo + 1e-12);
        }
    }
}
