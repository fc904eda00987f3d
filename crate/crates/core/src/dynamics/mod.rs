//! Time evolution of mode and qubit states.
//!
//! Three flavours share the same two-level machinery:
//!
//! - noiseless von Neumann evolution under `H(h(t))`;
//! - the ensemble-averaged noisy equations, which carry an auxiliary
//!   memory matrix `Gamma` next to `rho`:
//!   `rho' = -i[H, rho] - xi^2/(2 tau) [H1, Gamma]`,
//!   `Gamma' = -Gamma/tau + [H1, rho]`;
//! - single noise realisations, where the field becomes `h(t) + eta(t)`.
//!
//! All evolutions start at `t = 0` from the ground state of the battery
//! Hamiltonian and report states on a caller-supplied grid.

mod exact;
mod qubit;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use self::exact::{exact_chain_oracle, SpinChain, MAX_ORACLE_SITES};
pub use self::qubit::{evolve_qubit_uxy, QubitUXY};
pub use crate::ode::{IntegratorSettings, Method};

use crate::error::{Error, Result};
use crate::linalg::{self, commutator, complexify, CMat2, RMat2, C64};
use crate::model::{
    mode_ground_state, mode_hamiltonian, qubit_hamiltonian, ChainSpec, DensityMatrix2,
    MODE_NOISE_COUPLING, QUBIT_NOISE_COUPLING,
};
use crate::ode::{integrate_visit, OdeSystem};
use crate::protocol::{ou_sample_trajectory, uniform_grid, NoisePath, NoiseSpec, RampProtocol};

/// A two-level system whose Hamiltonian depends on one scalar field.
pub trait TwoLevel: Sync {
    fn hamiltonian(&self, field: f64) -> RMat2;

    /// `dH/dh`, the matrix multiplying the field noise.
    fn noise_coupling(&self) -> RMat2;

    /// Ground state of `H(field)`.
    fn ground_state(&self, field: f64) -> DensityMatrix2;
}

/// One quasimomentum block of the chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mode {
    pub k: f64,
}

impl TwoLevel for Mode {
    fn hamiltonian(&self, field: f64) -> RMat2 {
        *mode_hamiltonian(self.k, field).matrix()
    }

    fn noise_coupling(&self) -> RMat2 {
        from_rows(MODE_NOISE_COUPLING)
    }

    fn ground_state(&self, field: f64) -> DensityMatrix2 {
        mode_ground_state(self.k, field)
    }
}

/// The standalone qubit `-J sigma_x - h sigma_z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Qubit {
    pub j: f64,
}

impl TwoLevel for Qubit {
    fn hamiltonian(&self, field: f64) -> RMat2 {
        qubit_hamiltonian(self.j, field)
    }

    fn noise_coupling(&self) -> RMat2 {
        from_rows(QUBIT_NOISE_COUPLING)
    }

    fn ground_state(&self, field: f64) -> DensityMatrix2 {
        // (omega + h, J), rewritten for h < 0 to avoid cancellation.
        let omega = self.j.hypot(field);
        if field >= 0.0 {
            DensityMatrix2::pure_real([omega + field, self.j])
        } else {
            DensityMatrix2::pure_real([self.j, omega - field])
        }
    }
}

fn from_rows(r: [[f64; 2]; 2]) -> RMat2 {
    RMat2::new(r[0][0], r[0][1], r[1][0], r[1][1])
}

/// Which memory kernel the averaged equations use.
///
/// `Bare` is the standard form quoted above. `Propagated` also rotates the
/// memory matrix with the instantaneous Hamiltonian,
/// `Gamma' = -i[H, Gamma] - Gamma/tau + [H1, rho]`, which keeps the coherent
/// motion inside the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MemoryKernel {
    #[default]
    Bare,
    Propagated,
}

/// Ensemble-averaged state of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeState {
    pub k: f64,
    pub rho: DensityMatrix2,
    /// Memory matrix; traceless and zero at `t = 0`.
    pub gamma: CMat2,
}

struct VonNeumann<'a, M: ?Sized, F> {
    model: &'a M,
    field: F,
    /// `+1` for forward evolution, `-1` flips the commutator.
    direction: f64,
}

impl<M: TwoLevel + ?Sized, F: Fn(f64) -> f64> OdeSystem for VonNeumann<'_, M, F> {
    fn dim(&self) -> usize {
        8
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let rho = linalg::unpack(y);
        let h = complexify(&self.model.hamiltonian((self.field)(t)));
        let d = commutator(&h, &rho) * C64::new(0.0, -self.direction);
        linalg::pack(&d, dy);
    }
}

struct Averaged<'a, M: ?Sized> {
    model: &'a M,
    protocol: RampProtocol,
    strength: f64,
    tau: f64,
    coupling: CMat2,
    kernel: MemoryKernel,
}

impl<M: TwoLevel + ?Sized> OdeSystem for Averaged<'_, M> {
    fn dim(&self) -> usize {
        16
    }

    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let rho = linalg::unpack(&y[..8]);
        let gamma = linalg::unpack(&y[8..]);
        let h = complexify(&self.model.hamiltonian(self.protocol.field(t)));
        let minus_i = C64::new(0.0, -1.0);
        let d_rho = commutator(&h, &rho) * minus_i
            - commutator(&self.coupling, &gamma) * C64::new(self.strength, 0.0);
        let mut d_gamma = commutator(&self.coupling, &rho) - gamma * C64::new(1.0 / self.tau, 0.0);
        if self.kernel == MemoryKernel::Propagated {
            d_gamma += commutator(&h, &gamma) * minus_i;
        }
        linalg::pack(&d_rho, &mut dy[..8]);
        linalg::pack(&d_gamma, &mut dy[8..]);
    }
}

fn check_grid_start(grid: &[f64]) -> Result<()> {
    match grid.first() {
        None => Err(Error::invalid("time grid is empty")),
        Some(&t0) if t0 != 0.0 => Err(Error::invalid(format!(
            "time grid must start at t = 0, starts at {t0}"
        ))),
        _ => Ok(()),
    }
}

/// Noiseless evolution of any two-level model from `rho0` at `t = 0`.
pub fn evolve_two_level<M: TwoLevel + ?Sized>(
    model: &M,
    rho0: &DensityMatrix2,
    protocol: &RampProtocol,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<DensityMatrix2>> {
    check_grid_start(t_grid)?;
    let system = VonNeumann {
        model,
        field: |t| protocol.field(t),
        direction: 1.0,
    };
    run_density(&system, rho0, t_grid, &protocol.breakpoints(), settings)
}

/// Evolution under `H(field(t))` with an arbitrary field schedule and
/// commutator sign; used for time-reversal checks.
pub fn evolve_two_level_with_field<M, F>(
    model: &M,
    rho0: &DensityMatrix2,
    field: F,
    reverse: bool,
    t_grid: &[f64],
    breaks: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<DensityMatrix2>>
where
    M: TwoLevel + ?Sized,
    F: Fn(f64) -> f64,
{
    let system = VonNeumann {
        model,
        field,
        direction: if reverse { -1.0 } else { 1.0 },
    };
    run_density(&system, rho0, t_grid, breaks, settings)
}

fn run_density<S: OdeSystem>(
    system: &S,
    rho0: &DensityMatrix2,
    t_grid: &[f64],
    breaks: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<DensityMatrix2>> {
    let mut y0 = [0.0; 8];
    linalg::pack(rho0.matrix(), &mut y0);
    let mut out = Vec::with_capacity(t_grid.len());
    integrate_visit(system, &y0, t_grid, breaks, settings, |_, y| {
        out.push(DensityMatrix2::from_matrix_unchecked(linalg::unpack(y)));
    })?;
    Ok(out)
}

/// Noiseless evolution of mode `k` from the ground state at `h_i`.
pub fn evolve_mode_noiseless(
    k: f64,
    protocol: &RampProtocol,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<DensityMatrix2>> {
    let mode = Mode { k };
    evolve_two_level(
        &mode,
        &mode.ground_state(protocol.h_i),
        protocol,
        t_grid,
        settings,
    )
}

/// Ensemble-averaged noisy evolution of mode `k` with the bare kernel.
pub fn evolve_mode_noisy_averaged(
    k: f64,
    protocol: &RampProtocol,
    noise: &NoiseSpec,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<ModeState>> {
    evolve_mode_noisy_averaged_with(k, protocol, noise, MemoryKernel::Bare, t_grid, settings)
}

pub fn evolve_mode_noisy_averaged_with(
    k: f64,
    protocol: &RampProtocol,
    noise: &NoiseSpec,
    kernel: MemoryKernel,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<ModeState>> {
    let mode = Mode { k };
    let rho0 = mode.ground_state(protocol.h_i);
    let states = evolve_averaged_from(
        &mode,
        &rho0,
        &CMat2::zeros(),
        protocol,
        noise,
        kernel,
        t_grid,
        settings,
    )?;
    Ok(states
        .into_iter()
        .map(|(rho, gamma)| ModeState { k, rho, gamma })
        .collect())
}

/// Averaged equations from an arbitrary `(rho, Gamma)` at `t = t_grid[0]`.
/// The map is linear in the initial pair.
#[allow(clippy::too_many_arguments)]
pub fn evolve_averaged_from<M: TwoLevel + ?Sized>(
    model: &M,
    rho0: &DensityMatrix2,
    gamma0: &CMat2,
    protocol: &RampProtocol,
    noise: &NoiseSpec,
    kernel: MemoryKernel,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<(DensityMatrix2, CMat2)>> {
    if t_grid.first().is_none_or(|&t| t < 0.0) {
        return Err(Error::invalid(
            "time grid must be non-empty and start at t >= 0",
        ));
    }
    let system = Averaged {
        model,
        protocol: *protocol,
        strength: noise.variance(),
        tau: noise.tau_n,
        coupling: complexify(&model.noise_coupling()),
        kernel,
    };
    let mut y0 = [0.0; 16];
    linalg::pack(rho0.matrix(), &mut y0[..8]);
    linalg::pack(gamma0, &mut y0[8..]);
    let mut out = Vec::with_capacity(t_grid.len());
    integrate_visit(
        &system,
        &y0,
        t_grid,
        &protocol.breakpoints(),
        settings,
        |_, y| {
            out.push((
                DensityMatrix2::from_matrix_unchecked(linalg::unpack(&y[..8])),
                linalg::unpack(&y[8..]),
            ));
        },
    )?;
    Ok(out)
}

/// One noise realisation: the field is `h(t) + eta(t)` with `eta` linear
/// between path nodes.
pub fn evolve_mode_trajectory(
    k: f64,
    protocol: &RampProtocol,
    path: &NoisePath,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<DensityMatrix2>> {
    let mode = Mode { k };
    evolve_trajectory(
        &mode,
        &mode.ground_state(protocol.h_i),
        protocol,
        path,
        t_grid,
        settings,
    )
}

pub fn evolve_trajectory<M: TwoLevel + ?Sized>(
    model: &M,
    rho0: &DensityMatrix2,
    protocol: &RampProtocol,
    path: &NoisePath,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<DensityMatrix2>> {
    check_grid_start(t_grid)?;
    let end = *t_grid.last().unwrap();
    if path.start() > t_grid[0] || path.end() < end {
        return Err(Error::invalid(format!(
            "noise path [{}, {}] does not cover the time grid [{}, {end}]",
            path.start(),
            path.end(),
            t_grid[0]
        )));
    }
    let breaks = merge_breaks(&protocol.breakpoints(), path.grid());
    let system = VonNeumann {
        model,
        field: |t| protocol.field(t) + path.interpolate(t),
        direction: 1.0,
    };
    run_density(&system, rho0, t_grid, &breaks, settings)
}

fn merge_breaks(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut all: Vec<f64> = a.iter().chain(b).copied().collect();
    all.sort_by(f64::total_cmp);
    all.dedup();
    all
}

/// Trajectory-averaged states with entrywise standard errors.
#[derive(Debug, Clone)]
pub struct EnsembleAverage {
    pub count: usize,
    /// `[model][time]`.
    pub mean: Vec<Vec<CMat2>>,
    /// Standard error of the mean, real and imaginary parts separately.
    pub std_err: Vec<Vec<CMat2>>,
}

/// Averages `count` trajectories. Every trajectory draws one global noise
/// path (node spacing `tau / 50`) shared by all models. Trajectory `i`
/// uses random stream `i` of `noise.seed`, and the reduction runs in
/// trajectory order, so results do not depend on the thread count.
pub fn trajectory_ensemble<M: TwoLevel>(
    models: &[M],
    initial: &[DensityMatrix2],
    protocol: &RampProtocol,
    noise: &NoiseSpec,
    count: usize,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<EnsembleAverage> {
    if count == 0 {
        return Err(Error::invalid("trajectory count must be at least 1"));
    }
    if models.len() != initial.len() {
        return Err(Error::invalid("one initial state per model required"));
    }
    check_grid_start(t_grid)?;
    let end = *t_grid.last().unwrap();
    let path_grid = if end > 0.0 {
        uniform_grid(0.0, end, noise.max_path_step())?
    } else {
        vec![0.0]
    };
    let n_t = t_grid.len();
    let zero = vec![vec![[0.0f64; 8]; n_t]; models.len()];
    let mut sum = zero.clone();
    let mut sum_sq = zero;

    let chunk = (rayon::current_num_threads() * 2).max(1);
    let mut start = 0;
    while start < count {
        let stop = (start + chunk).min(count);
        let batch: Vec<Result<Vec<Vec<DensityMatrix2>>>> = (start..stop)
            .into_par_iter()
            .map(|index| {
                let path = ou_sample_trajectory(noise, &path_grid, index as u64)?;
                models
                    .iter()
                    .zip(initial)
                    .map(|(m, rho0)| evolve_trajectory(m, rho0, protocol, &path, t_grid, settings))
                    .collect()
            })
            .collect();
        for traj in batch {
            let traj = traj?;
            for (m, series) in traj.iter().enumerate() {
                for (i, rho) in series.iter().enumerate() {
                    let mut y = [0.0; 8];
                    linalg::pack(rho.matrix(), &mut y);
                    for c in 0..8 {
                        sum[m][i][c] += y[c];
                        sum_sq[m][i][c] += y[c] * y[c];
                    }
                }
            }
        }
        start = stop;
    }

    let n = count as f64;
    let mut mean = Vec::with_capacity(models.len());
    let mut std_err = Vec::with_capacity(models.len());
    for m in 0..models.len() {
        let mut mm = Vec::with_capacity(n_t);
        let mut ss = Vec::with_capacity(n_t);
        for i in 0..n_t {
            let mut mu = [0.0; 8];
            let mut se = [0.0; 8];
            for c in 0..8 {
                mu[c] = sum[m][i][c] / n;
                let var = if count > 1 {
                    ((sum_sq[m][i][c] - n * mu[c] * mu[c]) / (n - 1.0)).max(0.0)
                } else {
                    0.0
                };
                se[c] = (var / n).sqrt();
            }
            mm.push(linalg::unpack(&mu));
            ss.push(linalg::unpack(&se));
        }
        mean.push(mm);
        std_err.push(ss);
    }
    Ok(EnsembleAverage {
        count,
        mean,
        std_err,
    })
}

/// How noise enters a chain or qubit run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseTreatment {
    Noiseless,
    Averaged {
        noise: NoiseSpec,
        kernel: MemoryKernel,
    },
    Trajectories {
        noise: NoiseSpec,
        count: usize,
    },
}

/// States of every mode on a common grid.
#[derive(Debug, Clone)]
pub struct ChainEvolution {
    pub times: Vec<f64>,
    pub modes: Vec<f64>,
    /// `[mode][time]`.
    pub states: Vec<Vec<DensityMatrix2>>,
}

/// Evolves every mode of `chain`; modes run in parallel and are returned in
/// quasimomentum order.
pub fn evolve_chain(
    chain: &ChainSpec,
    protocol: &RampProtocol,
    treatment: &NoiseTreatment,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<ChainEvolution> {
    if chain.h_i() != protocol.h_i {
        return Err(Error::invalid(format!(
            "chain battery field {} differs from ramp start {}",
            chain.h_i(),
            protocol.h_i
        )));
    }
    let modes: Vec<Mode> = chain.modes().iter().map(|&k| Mode { k }).collect();
    let states = evolve_models(&modes, protocol, treatment, t_grid, settings)?;
    Ok(ChainEvolution {
        times: t_grid.to_vec(),
        modes: chain.modes().to_vec(),
        states,
    })
}

/// Evolves a set of two-level models from their ground states at `h_i`.
pub fn evolve_models<M: TwoLevel>(
    models: &[M],
    protocol: &RampProtocol,
    treatment: &NoiseTreatment,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<Vec<DensityMatrix2>>> {
    check_grid_start(t_grid)?;
    let initial: Vec<DensityMatrix2> = models
        .iter()
        .map(|m| m.ground_state(protocol.h_i))
        .collect();
    match treatment {
        NoiseTreatment::Noiseless => models
            .par_iter()
            .zip(&initial)
            .map(|(m, rho0)| evolve_two_level(m, rho0, protocol, t_grid, settings))
            .collect(),
        NoiseTreatment::Averaged { noise, kernel } => models
            .par_iter()
            .zip(&initial)
            .map(|(m, rho0)| {
                let states = evolve_averaged_from(
                    m,
                    rho0,
                    &CMat2::zeros(),
                    protocol,
                    noise,
                    *kernel,
                    t_grid,
                    settings,
                )?;
                Ok(states.into_iter().map(|(rho, _)| rho).collect())
            })
            .collect(),
        NoiseTreatment::Trajectories { noise, count } => {
            let avg =
                trajectory_ensemble(models, &initial, protocol, noise, *count, t_grid, settings)?;
            Ok(avg
                .mean
                .into_iter()
                .map(|series| {
                    series
                        .into_iter()
                        .map(DensityMatrix2::from_matrix_unchecked)
                        .collect()
                })
                .collect())
        }
    }
}
