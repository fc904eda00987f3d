//! Config-driven runs, noise sweeps and oracle validation.
//!
//! A run reads a TOML document such as
//!
//! ```toml
//! [system]
//! kind = "chain"        # or "single_qubit"
//! n_sites = 300
//!
//! [protocol]
//! h_i = 0.8
//! h_f = 1.5
//! t_f = 10.0
//!
//! [noise]
//! xi = 0.1
//! tau_n = 1.0
//! seed = 7
//!
//! [run]
//! mode = "averaged"     # noiseless | averaged | trajectories
//! t_max = 30.0
//! dt_out = 0.05
//! ```
//!
//! and writes `series.csv`, optionally `pk.csv` and `states.csv`, plus a
//! `manifest.json` with the resolved configuration and file checksums.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dynamics::{
    evolve_chain, evolve_mode_noisy_averaged_with, evolve_models, evolve_qubit_uxy,
    exact_chain_oracle, trajectory_ensemble, ChainEvolution, IntegratorSettings, MemoryKernel,
    Method, Mode, NoiseTreatment, Qubit, TwoLevel, MAX_ORACLE_SITES,
};
use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{ChainSpec, DensityMatrix2};
use crate::observables::{excitation_profile, ObservableSeries};
use crate::protocol::{fmt_sig, NoiseSpec, RampProtocol};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SystemKind {
    Chain,
    SingleQubit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub kind: SystemKind,
    pub n_sites: usize,
    /// Exchange coupling; the chain is fixed at `J = 1`.
    pub j: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            kind: SystemKind::Chain,
            n_sites: 300,
            j: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProtocolConfig {
    pub h_i: f64,
    pub h_f: f64,
    pub t_f: f64,
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self {
            h_i: 0.8,
            h_f: 1.5,
            t_f: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub xi: f64,
    pub tau_n: f64,
    pub seed: u64,
    pub kernel: MemoryKernel,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            xi: 0.0,
            tau_n: NoiseSpec::DEFAULT_TAU,
            seed: 0,
            kernel: MemoryKernel::Bare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Noiseless,
    Averaged,
    Trajectories,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub mode: RunMode,
    /// Ensemble size for `mode = "trajectories"` and for validation.
    pub trajectories: usize,
    pub t_max: f64,
    pub dt_out: f64,
    /// Measurement time for `P_k`; defaults to `t_max`.
    pub t_star: Option<f64>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            mode: RunMode::Noiseless,
            trajectories: 2000,
            t_max: 30.0,
            dt_out: 0.05,
            t_star: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorConfig {
    /// Defaults to `dop853` for the chain and `rk4` for the single qubit.
    pub method: Option<Method>,
    pub rtol: f64,
    pub atol: f64,
    pub max_step: Option<f64>,
    pub rk4_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        let d = IntegratorSettings::default();
        Self {
            method: None,
            rtol: d.rtol,
            atol: d.atol,
            max_step: None,
            rk4_step: d.rk4_step,
            max_steps: d.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write every density matrix to `states.csv`.
    pub dump_states: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            dump_states: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub system: SystemConfig,
    pub protocol: ProtocolConfig,
    pub noise: Option<NoiseConfig>,
    pub run: RunSection,
    pub integrator: IntegratorConfig,
    pub output: OutputConfig,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }

    /// Checks every field and fixes defaults that depend on other fields.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let s = &self.system;
        if s.kind == SystemKind::Chain {
            if s.n_sites < 2 || !s.n_sites.is_multiple_of(2) {
                return Err(Error::config("system.n_sites", "must be even and >= 2"));
            }
            if s.j != 1.0 {
                return Err(Error::config("system.j", "the chain uses J = 1"));
            }
        } else if !(s.j > 0.0) || !s.j.is_finite() {
            return Err(Error::config("system.j", "must be positive"));
        }

        let p = &self.protocol;
        for (key, v) in [("protocol.h_i", p.h_i), ("protocol.h_f", p.h_f)] {
            if !v.is_finite() {
                return Err(Error::config(key, "must be finite"));
            }
        }
        if !(p.t_f >= 0.0) || !p.t_f.is_finite() {
            return Err(Error::config("protocol.t_f", "must be finite and >= 0"));
        }
        let protocol = RampProtocol::new(p.h_i, p.h_f, p.t_f)?;

        let r = &self.run;
        if !(r.dt_out > 0.0) || !r.dt_out.is_finite() {
            return Err(Error::config("run.dt_out", "must be positive"));
        }
        if !(r.t_max >= p.t_f) || !r.t_max.is_finite() {
            return Err(Error::config(
                "run.t_max",
                "must be finite and >= protocol.t_f",
            ));
        }
        if let Some(ts) = r.t_star {
            if !(ts >= 0.0 && ts <= r.t_max) {
                return Err(Error::config("run.t_star", "must lie in [0, run.t_max]"));
            }
        }
        if r.mode == RunMode::Trajectories && r.trajectories == 0 {
            return Err(Error::config("run.trajectories", "must be >= 1"));
        }

        let noise = match (&self.noise, r.mode) {
            (None, RunMode::Noiseless) => None,
            (None, _) => {
                return Err(Error::config(
                    "noise",
                    "required unless run.mode = \"noiseless\"",
                ))
            }
            (Some(n), _) => {
                if !(n.xi >= 0.0) || !n.xi.is_finite() {
                    return Err(Error::config("noise.xi", "must be finite and >= 0"));
                }
                if !(n.tau_n > 0.0) || !n.tau_n.is_finite() {
                    return Err(Error::config("noise.tau_n", "must be positive"));
                }
                Some(NoiseSpec::new(n.xi, n.tau_n, n.seed)?)
            }
        };
        let kernel = self.noise.as_ref().map_or(MemoryKernel::Bare, |n| n.kernel);

        let i = &self.integrator;
        if !(i.rtol > 0.0) {
            return Err(Error::config("integrator.rtol", "must be positive"));
        }
        if !(i.atol > 0.0) {
            return Err(Error::config("integrator.atol", "must be positive"));
        }
        if let Some(m) = i.max_step {
            if !(m > 0.0) {
                return Err(Error::config("integrator.max_step", "must be positive"));
            }
        }
        if !(i.rk4_step > 0.0) || !i.rk4_step.is_finite() {
            return Err(Error::config("integrator.rk4_step", "must be positive"));
        }
        if i.max_steps == 0 {
            return Err(Error::config("integrator.max_steps", "must be >= 1"));
        }
        let method = i.method.unwrap_or(match s.kind {
            SystemKind::Chain => Method::Dop853,
            SystemKind::SingleQubit => Method::Rk4,
        });
        let settings = IntegratorSettings {
            rtol: i.rtol,
            atol: i.atol,
            max_step: i.max_step.unwrap_or(f64::INFINITY),
            method,
            rk4_step: i.rk4_step,
            max_steps: i.max_steps,
        };

        let treatment = match (r.mode, noise) {
            (RunMode::Noiseless, _) => NoiseTreatment::Noiseless,
            (RunMode::Averaged, Some(noise)) => NoiseTreatment::Averaged { noise, kernel },
            (RunMode::Trajectories, Some(noise)) => NoiseTreatment::Trajectories {
                noise,
                count: r.trajectories,
            },
            _ => unreachable!("noise presence checked above"),
        };

        let t_star = r.t_star.unwrap_or(r.t_max);
        let grid = output_grid(r.t_max, r.dt_out, t_star);
        let t_star_index = grid
            .iter()
            .position(|&t| t == t_star)
            .expect("t_star is merged into the grid");
        Ok(ResolvedConfig {
            kind: s.kind,
            n_sites: s.n_sites,
            j: s.j,
            protocol,
            noise,
            treatment,
            settings,
            grid,
            t_star_index,
            write_pk: r.t_star.is_some() && s.kind == SystemKind::Chain,
        })
    }
}

/// `0, dt, 2 dt, ...` up to `t_max` (always included), with `t_star` merged in.
fn output_grid(t_max: f64, dt: f64, t_star: f64) -> Vec<f64> {
    let n = (t_max / dt + 1e-9).floor() as usize;
    let mut g: Vec<f64> = (0..=n).map(|i| i as f64 * dt).collect();
    if t_max - g[n] > 1e-9 * dt.max(t_max) {
        g.push(t_max);
    } else {
        g[n] = t_max;
    }
    if !g.contains(&t_star) {
        let pos = g.partition_point(|&t| t < t_star);
        if pos < g.len() && (g[pos] - t_star).abs() <= 1e-9 * dt {
            g[pos] = t_star;
        } else if pos > 0 && (g[pos - 1] - t_star).abs() <= 1e-9 * dt {
            g[pos - 1] = t_star;
        } else {
            g.insert(pos, t_star);
        }
    }
    g
}

/// Validated, ready-to-run form of a [`RunConfig`].
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub kind: SystemKind,
    pub n_sites: usize,
    pub j: f64,
    pub protocol: RampProtocol,
    pub noise: Option<NoiseSpec>,
    pub treatment: NoiseTreatment,
    pub settings: IntegratorSettings,
    pub grid: Vec<f64>,
    pub t_star_index: usize,
    pub write_pk: bool,
}

/// `P_k` at the measurement time for the noiseless and the configured run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExcitationTable {
    pub k: Vec<f64>,
    pub noiseless: Vec<f64>,
    pub noisy: Vec<f64>,
}

impl ExcitationTable {
    pub fn fraction_above_half(&self) -> f64 {
        fraction_above_half(&self.noisy)
    }
}

pub fn fraction_above_half(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.5).count() as f64 / p.len() as f64
}

/// In-memory result of one run.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub series: ObservableSeries,
    pub t_star_index: usize,
    /// Chain runs only.
    pub pk: Option<ExcitationTable>,
    /// `(label, states)` per mode or for the qubit.
    pub states: Vec<(f64, Vec<DensityMatrix2>)>,
}

impl Simulation {
    pub fn t_star(&self) -> f64 {
        self.series.t[self.t_star_index]
    }
}

/// Runs the dynamics without touching the filesystem.
pub fn simulate(rc: &ResolvedConfig) -> Result<Simulation> {
    match rc.kind {
        SystemKind::Chain => {
            let chain = ChainSpec::new(rc.n_sites, rc.protocol.h_i)?;
            log::info!(
                "chain N = {}, {} modes, {} output times",
                rc.n_sites,
                chain.modes().len(),
                rc.grid.len()
            );
            let evo = evolve_chain(&chain, &rc.protocol, &rc.treatment, &rc.grid, &rc.settings)?;
            let series = ObservableSeries::from_chain(&evo, &rc.protocol, rc.noise)?;
            let noisy = excitation_profile(&evo, rc.t_star_index, rc.protocol.h_i)?;
            let noiseless = if rc.treatment == NoiseTreatment::Noiseless {
                noisy.clone()
            } else {
                let grid = &rc.grid[..=rc.t_star_index];
                let clean = evolve_chain(
                    &chain,
                    &rc.protocol,
                    &NoiseTreatment::Noiseless,
                    grid,
                    &rc.settings,
                )?;
                excitation_profile(&clean, rc.t_star_index, rc.protocol.h_i)?
            };
            let ChainEvolution { modes, states, .. } = evo;
            Ok(Simulation {
                series,
                t_star_index: rc.t_star_index,
                pk: Some(ExcitationTable {
                    k: modes.clone(),
                    noiseless,
                    noisy,
                }),
                states: modes.into_iter().zip(states).collect(),
            })
        }
        SystemKind::SingleQubit => {
            let states = if rc.treatment == NoiseTreatment::Noiseless {
                evolve_qubit_uxy(&rc.protocol, rc.j, &rc.grid, &rc.settings)?
                    .iter()
                    .map(|q| q.to_density())
                    .collect()
            } else {
                let q = [Qubit { j: rc.j }];
                evolve_models(&q, &rc.protocol, &rc.treatment, &rc.grid, &rc.settings)?
                    .pop()
                    .expect("one model")
            };
            let series =
                ObservableSeries::from_qubit(&rc.grid, &states, rc.j, &rc.protocol, rc.noise)?;
            Ok(Simulation {
                series,
                t_star_index: rc.t_star_index,
                pk: None,
                states: vec![(0.0, states)],
            })
        }
    }
}

/// Provenance record written next to the outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    pub version: String,
    pub seed: Option<u64>,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    /// File name to SHA-256 of its contents.
    pub files: BTreeMap<String, String>,
}

/// Values at the measurement time, used by sweeps.
#[derive(Debug, Clone, PartialEq)]
pub struct StarValues {
    pub t_star: f64,
    pub de: f64,
    pub ergotropy: f64,
    pub efficiency: Option<f64>,
    pub frac_pk_above_half: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub star: StarValues,
    pub out_dir: PathBuf,
}

/// Runs `config` and writes its outputs to `config.output.dir`.
pub fn run(config: &RunConfig) -> Result<RunReport> {
    let started = Instant::now();
    let started_unix = unix_now();
    let rc = config.resolve()?;
    let sim = simulate(&rc)?;
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let mut files = BTreeMap::new();
    write_file(dir, "series.csv", &mut files, |w| {
        write_series_csv(w, &sim.series)
    })?;
    if rc.write_pk {
        if let Some(pk) = &sim.pk {
            write_file(dir, "pk.csv", &mut files, |w| write_pk_csv(w, pk))?;
        }
    }
    if config.output.dump_states {
        write_file(dir, "states.csv", &mut files, |w| {
            write_states_csv(w, &rc.grid, &sim.states)
        })?;
    }

    let i = sim.t_star_index;
    let star = StarValues {
        t_star: sim.t_star(),
        de: sim.series.de_per_site[i],
        ergotropy: sim.series.ergotropy_per_site[i],
        efficiency: sim.series.efficiency[i],
        frac_pk_above_half: sim.pk.as_ref().map(|p| p.fraction_above_half()),
    };
    let manifest = RunManifest {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: rc.noise.map(|n| n.seed),
        started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files,
    };
    write_manifest(dir, &manifest)?;
    log::info!("wrote {}", dir.display());
    Ok(RunReport {
        manifest,
        star,
        out_dir: dir.clone(),
    })
}

/// Summary row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub xi: f64,
    pub star: StarValues,
}

/// One run per noise intensity in `<dir>/xi_<value>/`, then `summary.csv`.
pub fn run_sweep(config: &RunConfig, xi_list: &[f64]) -> Result<Vec<SweepRow>> {
    if xi_list.is_empty() {
        return Err(Error::config("sweep", "needs at least one xi value"));
    }
    if config.run.mode == RunMode::Noiseless {
        return Err(Error::config(
            "run.mode",
            "a noise sweep needs \"averaged\" or \"trajectories\"",
        ));
    }
    let started = Instant::now();
    let started_unix = unix_now();
    let root = &config.output.dir;
    let mut rows = Vec::with_capacity(xi_list.len());
    let mut manifests = Vec::new();
    for &xi in xi_list {
        let mut c = config.clone();
        c.noise.get_or_insert_with(NoiseConfig::default).xi = xi;
        let name = format!("xi_{xi}");
        c.output.dir = root.join(&name);
        log::info!("sweep point xi = {xi}");
        let report = run(&c)?;
        manifests.push((name, report.manifest));
        rows.push(SweepRow {
            xi,
            star: report.star,
        });
    }
    let mut files = BTreeMap::new();
    write_file(root, "summary.csv", &mut files, |w| {
        write_summary_csv(w, &rows)
    })?;
    for (name, _) in &manifests {
        let rel = format!("{name}/manifest.json");
        let digest = sha256_file(&root.join(&rel))?;
        files.insert(rel, digest);
    }
    let manifest = RunManifest {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.noise.as_ref().map(|n| n.seed),
        started_unix,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        files,
    };
    write_manifest(root, &manifest)?;
    Ok(rows)
}

/// Oracle comparisons for a small configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationReport {
    pub chain_oracle: Option<OracleCheck>,
    pub trajectory_check: Option<TrajectoryCheck>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleCheck {
    pub n_sites: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryCheck {
    pub k: f64,
    pub xi: f64,
    pub tau_n: f64,
    pub trajectories: usize,
    pub kernel: MemoryKernel,
    pub checkpoints: Vec<f64>,
    /// Largest `|mean - averaged|` over entries and checkpoints.
    pub max_deviation: f64,
    /// Largest ratio of deviation to `max(3 SE, floor)`; at most 1 passes.
    pub max_ratio: f64,
    pub floor: f64,
    pub pass: bool,
}

pub const ORACLE_TOLERANCE: f64 = 1e-6;
pub const TRAJECTORY_FLOOR: f64 = 5e-3;
pub const CHECKPOINTS: usize = 20;

/// Compares the mode sum against the exact chain (chain configs with
/// `N <= 10`) and, when a noise section is present, the averaged equations
/// for the mode `k = pi/2` against a trajectory mean.
pub fn validate(config: &RunConfig) -> Result<ValidationReport> {
    let rc = config.resolve()?;
    let chain_oracle = if rc.kind == SystemKind::Chain {
        if rc.n_sites > MAX_ORACLE_SITES {
            return Err(Error::config(
                "system.n_sites",
                format!("validation needs N <= {MAX_ORACLE_SITES}"),
            ));
        }
        Some(oracle_check(
            rc.n_sites,
            &rc.protocol,
            &rc.grid,
            &rc.settings,
        )?)
    } else {
        None
    };
    let trajectory_check = match rc.noise {
        Some(noise) => Some(trajectory_check(
            std::f64::consts::FRAC_PI_2,
            &rc.protocol,
            &noise,
            config
                .noise
                .as_ref()
                .map_or(MemoryKernel::Bare, |n| n.kernel),
            config.run.trajectories.max(1),
            config.run.t_max,
            &rc.settings,
        )?),
        None => None,
    };
    Ok(ValidationReport {
        chain_oracle,
        trajectory_check,
    })
}

pub fn oracle_check(
    n: usize,
    protocol: &RampProtocol,
    grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<OracleCheck> {
    let exact = exact_chain_oracle(n, protocol, grid, settings)?;
    let chain = ChainSpec::new(n, protocol.h_i)?;
    let evo = evolve_chain(&chain, protocol, &NoiseTreatment::Noiseless, grid, settings)?;
    let series = ObservableSeries::from_chain(&evo, protocol, None)?;
    let max_deviation = exact
        .iter()
        .zip(&series.de_per_site)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(OracleCheck {
        n_sites: n,
        max_deviation,
        tolerance: ORACLE_TOLERANCE,
        pass: max_deviation < ORACLE_TOLERANCE,
    })
}

/// Trajectory mean vs averaged equations at `CHECKPOINTS` equally spaced
/// times in `(0, t_end]`.
pub fn trajectory_check(
    k: f64,
    protocol: &RampProtocol,
    noise: &NoiseSpec,
    kernel: MemoryKernel,
    trajectories: usize,
    t_end: f64,
    settings: &IntegratorSettings,
) -> Result<TrajectoryCheck> {
    let mut grid = vec![0.0];
    grid.extend((1..=CHECKPOINTS).map(|i| t_end * i as f64 / CHECKPOINTS as f64));
    let mode = Mode { k };
    let rho0 = mode.ground_state(protocol.h_i);
    let ens = trajectory_ensemble(
        &[mode],
        &[rho0],
        protocol,
        noise,
        trajectories,
        &grid,
        settings,
    )?;
    let avg = evolve_mode_noisy_averaged_with(k, protocol, noise, kernel, &grid, settings)?;
    let mut max_deviation: f64 = 0.0;
    let mut max_ratio: f64 = 0.0;
    for ((state, mean), err) in avg.iter().zip(&ens.mean[0]).zip(&ens.std_err[0]).skip(1) {
        let mut a = [0.0; 8];
        let mut m = [0.0; 8];
        let mut se = [0.0; 8];
        linalg::pack(state.rho.matrix(), &mut a);
        linalg::pack(mean, &mut m);
        linalg::pack(err, &mut se);
        for c in 0..8 {
            let dev = (a[c] - m[c]).abs();
            let allowed = (3.0 * se[c]).max(TRAJECTORY_FLOOR);
            max_deviation = max_deviation.max(dev);
            max_ratio = max_ratio.max(dev / allowed);
        }
    }
    Ok(TrajectoryCheck {
        k,
        xi: noise.xi,
        tau_n: noise.tau_n,
        trajectories,
        kernel,
        checkpoints: grid[1..].to_vec(),
        max_deviation,
        max_ratio,
        floor: TRAJECTORY_FLOOR,
        pass: max_ratio <= 1.0,
    })
}

/// Writes the report to `<output.dir>/validation.json`.
pub fn write_validation(config: &RunConfig, report: &ValidationReport) -> Result<PathBuf> {
    let dir = &config.output.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let path = dir.join("validation.json");
    let text = serde_json::to_string_pretty(report).expect("report is serializable");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

pub fn write_series_csv<W: Write>(w: &mut W, s: &ObservableSeries) -> std::io::Result<()> {
    writeln!(w, "t,dE_per_site,ergotropy_per_site,efficiency")?;
    for i in 0..s.len() {
        let eff = s.efficiency[i].map(fmt_sig).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{}",
            fmt_sig(s.t[i]),
            fmt_sig(s.de_per_site[i]),
            fmt_sig(s.ergotropy_per_site[i]),
            eff
        )?;
    }
    Ok(())
}

pub fn write_pk_csv<W: Write>(w: &mut W, pk: &ExcitationTable) -> std::io::Result<()> {
    writeln!(w, "k,P_k_noiseless,P_k_noisy")?;
    for i in 0..pk.k.len() {
        writeln!(
            w,
            "{},{},{}",
            fmt_sig(pk.k[i]),
            fmt_sig(pk.noiseless[i]),
            fmt_sig(pk.noisy[i])
        )?;
    }
    Ok(())
}

pub fn write_states_csv<W: Write>(
    w: &mut W,
    grid: &[f64],
    states: &[(f64, Vec<DensityMatrix2>)],
) -> std::io::Result<()> {
    writeln!(w, "t,k,re00,im00,re01,im01,re10,im10,re11,im11")?;
    for (k, series) in states {
        for (t, rho) in grid.iter().zip(series) {
            let mut y = [0.0; 8];
            linalg::pack(rho.matrix(), &mut y);
            write!(w, "{},{}", fmt_sig(*t), fmt_sig(*k))?;
            for v in y {
                write!(w, ",{}", fmt_sig(v))?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(w: &mut W, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(
        w,
        "xi,dE_star,ergotropy_star,efficiency_star,frac_pk_above_half"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_sig(r.xi),
            fmt_sig(r.star.de),
            fmt_sig(r.star.ergotropy),
            r.star.efficiency.map(fmt_sig).unwrap_or_default(),
            r.star.frac_pk_above_half.map(fmt_sig).unwrap_or_default()
        )?;
    }
    Ok(())
}

fn write_file<F>(
    dir: &Path,
    name: &str,
    files: &mut BTreeMap<String, String>,
    body: F,
) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    let path = dir.join(name);
    let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&path, e))?;
    files.insert(name.to_string(), sha256_file(&path)?);
    Ok(())
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn write_manifest(dir: &Path, m: &RunManifest) -> Result<()> {
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(m).expect("manifest is serializable");
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

/// Parses `xi=0,0.01,0.1`.
pub fn parse_sweep(spec: &str) -> Result<Vec<f64>> {
    let list = spec
        .strip_prefix("xi=")
        .ok_or_else(|| Error::config("sweep", "expected `xi=<comma separated values>`"))?;
    list.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::config("sweep", format!("`{v}` is not a number")))
        })
        .collect()
}
