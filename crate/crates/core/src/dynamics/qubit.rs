use crate::error::{Error, Result};
use crate::linalg::{CMat2, C64};
use crate::model::{qubit_battery, DensityMatrix2};
use crate::ode::{integrate_visit, IntegratorSettings, OdeSystem};
use crate::protocol::RampProtocol;

/// Bloch-like components of the single-qubit state:
/// `u = rho00 - rho11`, `x = rho01 + rho10`, `y = -i (rho01 - rho10)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitUXY {
    pub u: f64,
    pub x: f64,
    pub y: f64,
}

impl QubitUXY {
    pub fn norm_sq(&self) -> f64 {
        self.u * self.u + self.x * self.x + self.y * self.y
    }

    pub fn from_density(rho: &DensityMatrix2) -> Self {
        let d = rho.get(0, 1) - rho.get(1, 0);
        Self {
            u: (rho.get(0, 0) - rho.get(1, 1)).re,
            x: (rho.get(0, 1) + rho.get(1, 0)).re,
            y: (C64::new(0.0, -1.0) * d).re,
        }
    }

    pub fn to_density(&self) -> DensityMatrix2 {
        let half = 0.5;
        let off = C64::new(self.x, self.y) * half;
        DensityMatrix2::from_matrix_unchecked(CMat2::new(
            C64::new(half * (1.0 + self.u), 0.0),
            off,
            off.conj(),
            C64::new(half * (1.0 - self.u), 0.0),
        ))
    }

    /// Ground state of `-J sigma_x - h sigma_z`.
    pub fn ground(j: f64, h: f64) -> Self {
        let omega = j.hypot(h);
        Self {
            u: h / omega,
            x: j / omega,
            y: 0.0,
        }
    }
}

struct Uxy<'a> {
    protocol: &'a RampProtocol,
    j: f64,
}

impl OdeSystem for Uxy<'_> {
    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, t: f64, s: &[f64], ds: &mut [f64]) {
        let h = self.protocol.field(t);
        let (u, x, y) = (s[0], s[1], s[2]);
        ds[0] = 2.0 * self.j * y;
        ds[1] = -2.0 * h * y;
        ds[2] = -2.0 * self.j * u + 2.0 * h * x;
    }
}

/// Single-qubit charging from the ground state of `-J sigma_x - h_i sigma_z`.
pub fn evolve_qubit_uxy(
    protocol: &RampProtocol,
    j: f64,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<QubitUXY>> {
    qubit_battery(protocol.h_i, j)?;
    evolve_qubit_uxy_from(
        QubitUXY::ground(j, protocol.h_i),
        protocol,
        j,
        t_grid,
        settings,
    )
}

/// Same equations from an arbitrary start at `t_grid[0]`.
pub fn evolve_qubit_uxy_from(
    start: QubitUXY,
    protocol: &RampProtocol,
    j: f64,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<QubitUXY>> {
    if t_grid.first().is_none_or(|&t| t < 0.0) {
        return Err(Error::invalid(
            "time grid must be non-empty and start at t >= 0",
        ));
    }
    let system = Uxy { protocol, j };
    let mut out = Vec::with_capacity(t_grid.len());
    integrate_visit(
        &system,
        &[start.u, start.x, start.y],
        t_grid,
        &protocol.breakpoints(),
        settings,
        |_, s| {
            out.push(QubitUXY {
                u: s[0],
                x: s[1],
                y: s[2],
            })
        },
    )?;
    Ok(out)
}
