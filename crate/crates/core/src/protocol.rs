//! Charging ramp and Ornstein-Uhlenbeck field noise.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear ramp `h_i -> h_f` over `[0, t_f]`, constant `h_f` afterwards.
///
/// `t_f = 0` is a sudden quench: `h(0) = h_i` and `h(t) = h_f` for `t > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RampProtocol {
    pub h_i: f64,
    pub h_f: f64,
    pub t_f: f64,
}

impl RampProtocol {
    pub fn new(h_i: f64, h_f: f64, t_f: f64) -> Result<Self> {
        if !h_i.is_finite() || !h_f.is_finite() {
            return Err(Error::invalid("ramp fields must be finite"));
        }
        if !(t_f >= 0.0) || !t_f.is_finite() {
            return Err(Error::invalid(format!(
                "ramp duration must be finite and non-negative, got {t_f}"
            )));
        }
        Ok(Self { h_i, h_f, t_f })
    }

    /// Constant field `h`; the battery is never charged.
    pub fn constant(h: f64) -> Self {
        Self {
            h_i: h,
            h_f: h,
            t_f: 0.0,
        }
    }

    /// Ramp slope, absent for a sudden quench.
    pub fn slope(&self) -> Option<f64> {
        (self.t_f > 0.0).then(|| (self.h_f - self.h_i) / self.t_f)
    }

    pub fn is_sudden(&self) -> bool {
        self.t_f == 0.0
    }

    pub fn field_at(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::invalid(format!(
                "time must be non-negative, got {t}"
            )));
        }
        if t == 0.0 {
            return Ok(self.h_i);
        }
        Ok(self.field(t))
    }

    /// Right-continuous field used inside integration segments; at `t = 0`
    /// a sudden quench already reports `h_f`.
    pub(crate) fn field(&self, t: f64) -> f64 {
        if t >= self.t_f {
            self.h_f
        } else {
            self.h_i + (self.h_f - self.h_i) * (t / self.t_f)
        }
    }

    /// Times where the field has a kink, used as integration breakpoints.
    pub(crate) fn breakpoints(&self) -> Vec<f64> {
        if self.t_f > 0.0 {
            vec![self.t_f]
        } else {
            Vec::new()
        }
    }
}

/// Ornstein-Uhlenbeck noise with `<eta(t) eta(t')> = xi^2 / (2 tau) exp(-|t - t'| / tau)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub xi: f64,
    pub tau_n: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub const DEFAULT_TAU: f64 = 1.0;

    pub fn new(xi: f64, tau_n: f64, seed: u64) -> Result<Self> {
        if !(xi >= 0.0) || !xi.is_finite() {
            return Err(Error::invalid(format!(
                "noise intensity must be >= 0, got {xi}"
            )));
        }
        if !(tau_n > 0.0) || !tau_n.is_finite() {
            return Err(Error::invalid(format!(
                "correlation time must be positive, got {tau_n}"
            )));
        }
        Ok(Self { xi, tau_n, seed })
    }

    /// Stationary variance `xi^2 / (2 tau)`.
    pub fn variance(&self) -> f64 {
        self.xi * self.xi / (2.0 * self.tau_n)
    }

    /// Largest node spacing used for trajectory paths.
    pub fn max_path_step(&self) -> f64 {
        self.tau_n / 50.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoisePath {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl NoisePath {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::invalid(
                "noise path grid and values differ in length",
            ));
        }
        if grid.is_empty() {
            return Err(Error::invalid("noise path is empty"));
        }
        check_increasing(&grid)?;
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Vec<f64>) -> Result<Self> {
        let values = vec![0.0; grid.len()];
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn start(&self) -> f64 {
        self.grid[0]
    }

    pub fn end(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Piecewise-linear interpolation between nodes.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        if !(t >= self.start() && t <= self.end()) {
            return Err(Error::OutOfRange {
                t,
                start: self.start(),
                end: self.end(),
            });
        }
        Ok(self.interpolate(t))
    }

    pub(crate) fn interpolate(&self, t: f64) -> f64 {
        let idx = self.grid.partition_point(|&g| g <= t);
        if idx == 0 {
            return self.values[0];
        }
        if idx >= self.grid.len() {
            return self.values[self.grid.len() - 1];
        }
        let (t0, t1) = (self.grid[idx - 1], self.grid[idx]);
        let (v0, v1) = (self.values[idx - 1], self.values[idx]);
        v0 + (v1 - v0) * ((t - t0) / (t1 - t0))
    }

    /// Writes the path as a two-column `t,eta` CSV.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,eta")?;
        for (t, v) in self.grid.iter().zip(&self.values) {
            writeln!(w, "{},{}", fmt_sig(*t), fmt_sig(*v))?;
        }
        Ok(())
    }
}

pub(crate) fn fmt_sig(x: f64) -> String {
    format!("{x:.11e}")
}

pub(crate) fn check_increasing(grid: &[f64]) -> Result<()> {
    for (i, w) in grid.windows(2).enumerate() {
        if !(w[1] > w[0]) {
            return Err(Error::NonMonotoneGrid { index: i + 1 });
        }
    }
    if grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::invalid("time grid contains non-finite values"));
    }
    Ok(())
}

/// `n` equal steps from `start` to `end` with spacing at most `max_step`.
pub fn uniform_grid(start: f64, end: f64, max_step: f64) -> Result<Vec<f64>> {
    if !(end > start) || !(max_step > 0.0) {
        return Err(Error::invalid(format!(
            "cannot build a grid on [{start}, {end}] with step {max_step}"
        )));
    }
    let n = ((end - start) / max_step - 1e-9).ceil().max(1.0) as usize;
    let dt = (end - start) / n as f64;
    let mut grid: Vec<f64> = (0..=n).map(|i| start + i as f64 * dt).collect();
    grid[n] = end;
    Ok(grid)
}

/// Independent random stream for trajectory `index` of a seeded ensemble.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Exact AR(1) sampling of the OU process on `grid`, starting from the
/// stationary distribution.
pub fn ou_sample_path(spec: &NoiseSpec, grid: &[f64]) -> Result<NoisePath> {
    ou_sample_path_with(spec, grid, &mut trajectory_rng(spec.seed, 0))
}

/// Like [`ou_sample_path`] but draws from the stream of trajectory `index`.
pub fn ou_sample_trajectory(spec: &NoiseSpec, grid: &[f64], index: u64) -> Result<NoisePath> {
    ou_sample_path_with(spec, grid, &mut trajectory_rng(spec.seed, index))
}

pub fn ou_sample_path_with<R: rand::Rng + ?Sized>(
    spec: &NoiseSpec,
    grid: &[f64],
    rng: &mut R,
) -> Result<NoisePath> {
    if grid.is_empty() {
        return Err(Error::invalid("noise grid is empty"));
    }
    check_increasing(grid)?;
    if spec.xi == 0.0 {
        return NoisePath::zeros(grid.to_vec());
    }
    let sigma = spec.variance().sqrt();
    let mut values = Vec::with_capacity(grid.len());
    let first: f64 = StandardNormal.sample(rng);
    let mut eta = sigma * first;
    values.push(eta);
    for w in grid.windows(2) {
        let decay = (-(w[1] - w[0]) / spec.tau_n).exp();
        let kick = sigma * (-(-2.0 * (w[1] - w[0]) / spec.tau_n).exp_m1()).sqrt();
        let g: f64 = StandardNormal.sample(rng);
        eta = eta * decay + kick * g;
        values.push(eta);
    }
    Ok(NoisePath {
        grid: grid.to_vec(),
        values,
    })
}

/// `h(t) + eta(t)`.
pub fn noisy_field(protocol: &RampProtocol, path: &NoisePath, t: f64) -> Result<f64> {
    let eta = path.value_at(t)?;
    Ok(protocol.field_at(t)? + eta)
}
