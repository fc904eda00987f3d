//! Explicit Runge-Kutta integrators.
//!
//! [`Dop853`] is the Dormand-Prince 8(5,3) pair with Hairer's step-size
//! control. Output is produced by stepping exactly onto each requested
//! node, so recorded values never depend on interpolation.

// Coefficient tables are kept exactly as published.
#![allow(
    clippy::excessive_precision,
    clippy::needless_range_loop,
    clippy::large_enum_variant
)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]);
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dop853,
    Rk4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorSettings {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on the adaptive step.
    pub max_step: f64,
    pub method: Method,
    /// Step of the fixed-step RK4 scheme.
    pub rk4_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-9,
            atol: 1e-12,
            max_step: f64::INFINITY,
            method: Method::Dop853,
            rk4_step: 1e-3,
            max_steps: 10_000_000,
        }
    }
}

impl IntegratorSettings {
    pub fn rk4(step: f64) -> Self {
        Self {
            method: Method::Rk4,
            rk4_step: step,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) || !(self.atol > 0.0) {
            return Err(Error::invalid("integrator tolerances must be positive"));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::invalid("max_step must be positive"));
        }
        if !(self.rk4_step > 0.0) || !self.rk4_step.is_finite() {
            return Err(Error::invalid("rk4_step must be positive and finite"));
        }
        Ok(())
    }
}

/// Integrates `system` from `grid[0]` and records the state at every grid
/// node. `breaks` are extra times (kinks in the right-hand side) that the
/// integrator must land on without recording.
pub fn integrate_on_grid<S: OdeSystem + ?Sized>(
    system: &S,
    y0: &[f64],
    grid: &[f64],
    breaks: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(grid.len());
    integrate_visit(system, y0, grid, breaks, settings, |_, y| {
        out.push(y.to_vec());
    })?;
    Ok(out)
}

/// Same as [`integrate_on_grid`] but hands each recorded state to `visit`.
pub fn integrate_visit<S, F>(
    system: &S,
    y0: &[f64],
    grid: &[f64],
    breaks: &[f64],
    settings: &IntegratorSettings,
    mut visit: F,
) -> Result<()>
where
    S: OdeSystem + ?Sized,
    F: FnMut(usize, &[f64]),
{
    settings.validate()?;
    crate::protocol::check_increasing(grid)?;
    if y0.len() != system.dim() {
        return Err(Error::invalid("initial state has wrong dimension"));
    }
    let mut stepper = Stepper::new(settings, system.dim());
    let mut y = y0.to_vec();
    let mut t = grid[0];
    visit(0, &y);
    let mut bi = breaks.partition_point(|&b| b <= t);
    for (i, &node) in grid.iter().enumerate().skip(1) {
        while bi < breaks.len() && breaks[bi] < node {
            stepper.advance(system, &mut t, &mut y, breaks[bi])?;
            bi += 1;
        }
        if bi < breaks.len() && breaks[bi] == node {
            bi += 1;
        }
        stepper.advance(system, &mut t, &mut y, node)?;
        visit(i, &y);
    }
    Ok(())
}

pub enum Stepper {
    Dop853(Dop853),
    Rk4(Rk4),
}

impl Stepper {
    pub fn new(settings: &IntegratorSettings, dim: usize) -> Self {
        match settings.method {
            Method::Dop853 => Stepper::Dop853(Dop853::new(settings, dim)),
            Method::Rk4 => Stepper::Rk4(Rk4::new(settings.rk4_step, dim)),
        }
    }

    pub fn advance<S: OdeSystem + ?Sized>(
        &mut self,
        system: &S,
        t: &mut f64,
        y: &mut [f64],
        t_end: f64,
    ) -> Result<()> {
        match self {
            Stepper::Dop853(s) => s.advance(system, t, y, t_end),
            Stepper::Rk4(s) => s.advance(system, t, y, t_end),
        }
    }
}

/// Classical fourth-order Runge-Kutta with a fixed maximum step. Each call
/// splits `[t, t_end]` into equal substeps no longer than `step`.
pub struct Rk4 {
    step: f64,
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(step: f64, dim: usize) -> Self {
        Self {
            step,
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    pub fn advance<S: OdeSystem + ?Sized>(
        &mut self,
        system: &S,
        t: &mut f64,
        y: &mut [f64],
        t_end: f64,
    ) -> Result<()> {
        let span = t_end - *t;
        if span <= 0.0 {
            return Ok(());
        }
        let n = (span / self.step - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let t0 = *t;
        for i in 0..n {
            let ti = t0 + i as f64 * h;
            self.step_once(system, ti, y, h);
        }
        *t = t_end;
        Ok(())
    }

    fn step_once<S: OdeSystem + ?Sized>(&mut self, system: &S, t: f64, y: &mut [f64], h: f64) {
        let n = y.len();
        system.rhs(t, y, &mut self.k1);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        system.rhs(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..n {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        system.rhs(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..n {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        system.rhs(t + h, &self.tmp, &mut self.k4);
        for i in 0..n {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Dormand-Prince 8(5,3) with Hairer's error norm and step control.
pub struct Dop853 {
    rtol: f64,
    atol: f64,
    max_step: f64,
    max_steps: usize,
    h: Option<f64>,
    facold: f64,
    steps: usize,
    k: [Vec<f64>; 12],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
}

const SAFE: f64 = 0.9;
const FAC_MIN: f64 = 0.333;
const FAC_MAX: f64 = 6.0;
const EXPO: f64 = 1.0 / 8.0;

impl Dop853 {
    pub fn new(settings: &IntegratorSettings, dim: usize) -> Self {
        Self {
            rtol: settings.rtol,
            atol: settings.atol,
            max_step: settings.max_step,
            max_steps: settings.max_steps,
            h: None,
            facold: 1e-4,
            steps: 0,
            k: std::array::from_fn(|_| vec![0.0; dim]),
            y_stage: vec![0.0; dim],
            y_new: vec![0.0; dim],
        }
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Steps from `*t` to exactly `t_end`.
    pub fn advance<S: OdeSystem + ?Sized>(
        &mut self,
        system: &S,
        t: &mut f64,
        y: &mut [f64],
        t_end: f64,
    ) -> Result<()> {
        if t_end <= *t {
            return Ok(());
        }
        system.rhs(*t, y, &mut self.k[0]);
        let mut h = match self.h {
            Some(h) => h,
            None => self.initial_step(system, *t, y, t_end),
        };
        let mut last_rejected = false;
        while *t < t_end {
            if self.steps >= self.max_steps {
                return Err(Error::Integration {
                    t: *t,
                    h,
                    steps: self.steps,
                    reason: "maximum number of steps exceeded",
                });
            }
            h = h.min(self.max_step);
            if h <= 1e-14 * t.abs().max(1.0) {
                return Err(Error::Integration {
                    t: *t,
                    h,
                    steps: self.steps,
                    reason: "step size underflow",
                });
            }
            let remaining = t_end - *t;
            let clamped = h >= remaining * (1.0 - 1e-12);
            let h_try = if clamped { remaining } else { h };

            let (err, finite) = self.trial_step(system, *t, y, h_try);
            self.steps += 1;
            if !finite {
                return Err(Error::Integration {
                    t: *t,
                    h: h_try,
                    steps: self.steps,
                    reason: "non-finite derivative",
                });
            }
            let fac11 = err.powf(EXPO);
            let fac = (fac11 / SAFE).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            if err <= 1.0 {
                self.facold = err.max(1e-4);
                y.copy_from_slice(&self.y_new);
                *t = if clamped { t_end } else { *t + h_try };
                system.rhs(*t, y, &mut self.k[0]);
                let mut h_new = h_try / fac;
                if last_rejected {
                    h_new = h_new.min(h_try);
                }
                last_rejected = false;
                // A step shortened to hit a node says little about the natural step.
                h = if clamped && h_new >= h_try { h } else { h_new };
            } else {
                h = h_try / (fac11 / SAFE).min(1.0 / FAC_MIN);
                last_rejected = true;
            }
        }
        self.h = Some(h);
        Ok(())
    }

    fn initial_step<S: OdeSystem + ?Sized>(
        &mut self,
        system: &S,
        t: f64,
        y: &[f64],
        t_end: f64,
    ) -> f64 {
        let n = y.len() as f64;
        let mut dnf = 0.0;
        let mut dny = 0.0;
        for (yi, fi) in y.iter().zip(&self.k[0]) {
            let sk = self.atol + self.rtol * yi.abs();
            dnf += (fi / sk).powi(2);
            dny += (yi / sk).powi(2);
        }
        let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
            1e-6
        } else {
            (dny / dnf).sqrt() * 0.01
        };
        h = h.min(self.max_step).min(t_end - t);
        for i in 0..y.len() {
            self.y_stage[i] = y[i] + h * self.k[0][i];
        }
        system.rhs(t + h, &self.y_stage, &mut self.k[1]);
        let mut der2 = 0.0;
        for i in 0..y.len() {
            let sk = self.atol + self.rtol * y[i].abs();
            der2 += ((self.k[1][i] - self.k[0][i]) / sk).powi(2);
        }
        let der2 = der2.sqrt() / h;
        let der12 = der2.max((dnf / n).sqrt());
        let h1 = if der12 <= 1e-15 {
            (h * 1e-3).max(1e-6)
        } else {
            (0.01 / der12).powf(EXPO)
        };
        (100.0 * h).min(h1).min(self.max_step).min(t_end - t)
    }

    /// Computes a trial step of size `h`; the candidate is left in `y_new`.
    /// Returns the scaled error and whether all stages were finite.
    fn trial_step<S: OdeSystem + ?Sized>(
        &mut self,
        system: &S,
        t: f64,
        y: &[f64],
        h: f64,
    ) -> (f64, bool) {
        let n = y.len();
        macro_rules! stage {
            ($dst:expr, $c:expr, [$(($idx:expr, $a:expr)),*]) => {{
                for i in 0..n {
                    let mut acc = 0.0;
                    $( acc += $a * self.k[$idx][i]; )*
                    self.y_stage[i] = y[i] + h * acc;
                }
                let (_, tail) = self.k.split_at_mut($dst);
                system.rhs(t + $c * h, &self.y_stage, &mut tail[0]);
            }};
        }
        stage!(1, C2, [(0, A21)]);
        stage!(2, C3, [(0, A31), (1, A32)]);
        stage!(3, C4, [(0, A41), (2, A43)]);
        stage!(4, C5, [(0, A51), (2, A53), (3, A54)]);
        stage!(5, C6, [(0, A61), (3, A64), (4, A65)]);
        stage!(6, C7, [(0, A71), (3, A74), (4, A75), (5, A76)]);
        stage!(7, C8, [(0, A81), (3, A84), (4, A85), (5, A86), (6, A87)]);
        stage!(
            8,
            C9,
            [(0, A91), (3, A94), (4, A95), (5, A96), (6, A97), (7, A98)]
        );
        stage!(
            9,
            C10,
            [
                (0, A101),
                (3, A104),
                (4, A105),
                (5, A106),
                (6, A107),
                (7, A108),
                (8, A109)
            ]
        );
        stage!(
            10,
            C11,
            [
                (0, A111),
                (3, A114),
                (4, A115),
                (5, A116),
                (6, A117),
                (7, A118),
                (8, A119),
                (9, A1110)
            ]
        );
        stage!(
            11,
            1.0,
            [
                (0, A121),
                (3, A124),
                (4, A125),
                (5, A126),
                (6, A127),
                (7, A128),
                (8, A129),
                (9, A1210),
                (10, A1211)
            ]
        );

        let k = &self.k;
        let mut err = 0.0;
        let mut err2 = 0.0;
        let mut finite = true;
        for i in 0..n {
            let incr = B1 * k[0][i]
                + B6 * k[5][i]
                + B7 * k[6][i]
                + B8 * k[7][i]
                + B9 * k[8][i]
                + B10 * k[9][i]
                + B11 * k[10][i]
                + B12 * k[11][i];
            let y_new = y[i] + h * incr;
            self.y_new[i] = y_new;
            finite &= y_new.is_finite();
            let sk = self.atol + self.rtol * y[i].abs().max(y_new.abs());
            let e5 = incr - BHH1 * k[0][i] - BHH2 * k[8][i] - BHH3 * k[11][i];
            err2 += (e5 / sk).powi(2);
            let e8 = ER1 * k[0][i]
                + ER6 * k[5][i]
                + ER7 * k[6][i]
                + ER8 * k[7][i]
                + ER9 * k[8][i]
                + ER10 * k[9][i]
                + ER11 * k[10][i]
                + ER12 * k[11][i];
            err += (e8 / sk).powi(2);
        }
        let mut deno = err + 0.01 * err2;
        if deno <= 0.0 {
            deno = 1.0;
        }
        let err = h.abs() * err * (1.0 / (deno * n as f64)).sqrt();
        (if err.is_finite() { err } else { f64::INFINITY }, finite)
    }
}

const C2: f64 = 0.526001519587677318785587544488E-01;
const C3: f64 = 0.789002279381515978178381316732E-01;
const C4: f64 = 0.118350341907227396726757197510E+00;
const C5: f64 = 0.281649658092772603273242802490E+00;
const C6: f64 = 0.333333333333333333333333333333E+00;
const C7: f64 = 0.25E+00;
const C8: f64 = 0.307692307692307692307692307692E+00;
const C9: f64 = 0.651282051282051282051282051282E+00;
const C10: f64 = 0.6E+00;
const C11: f64 = 0.857142857142857142857142857142E+00;

const A21: f64 = 5.26001519587677318785587544488E-2;
const A31: f64 = 1.97250569845378994544595329183E-2;
const A32: f64 = 5.91751709536136983633785987549E-2;
const A41: f64 = 2.95875854768068491816892993775E-2;
const A43: f64 = 8.87627564304205475450678981324E-2;
const A51: f64 = 2.41365134159266685502369798665E-1;
const A53: f64 = -8.84549479328286085344864962717E-1;
const A54: f64 = 9.24834003261792003115737966543E-1;
const A61: f64 = 3.7037037037037037037037037037E-2;
const A64: f64 = 1.70828608729473871279604482173E-1;
const A65: f64 = 1.25467687566822425016691814123E-1;
const A71: f64 = 3.7109375E-2;
const A74: f64 = 1.70252211019544039314978060272E-1;
const A75: f64 = 6.02165389804559606850219397283E-2;
const A76: f64 = -1.7578125E-2;
const A81: f64 = 3.70920001185047927108779319836E-2;
const A84: f64 = 1.70383925712239993810214054705E-1;
const A85: f64 = 1.07262030446373284651809199168E-1;
const A86: f64 = -1.53194377486244017527936158236E-2;
const A87: f64 = 8.27378916381402288758473766002E-3;
const A91: f64 = 6.24110958716075717114429577812E-1;
const A94: f64 = -3.36089262944694129406857109825E0;
const A95: f64 = -8.68219346841726006818189891453E-1;
const A96: f64 = 2.75920996994467083049415600797E1;
const A97: f64 = 2.01540675504778934086186788979E1;
const A98: f64 = -4.34898841810699588477366255144E1;
const A101: f64 = 4.77662536438264365890433908527E-1;
const A104: f64 = -2.48811461997166764192642586468E0;
const A105: f64 = -5.90290826836842996371446475743E-1;
const A106: f64 = 2.12300514481811942347288949897E1;
const A107: f64 = 1.52792336328824235832596922938E1;
const A108: f64 = -3.32882109689848629194453265587E1;
const A109: f64 = -2.03312017085086261358222928593E-2;
const A111: f64 = -9.3714243008598732571704021658E-1;
const A114: f64 = 5.18637242884406370830023853209E0;
const A115: f64 = 1.09143734899672957818500254654E0;
const A116: f64 = -8.14978701074692612513997267357E0;
const A117: f64 = -1.85200656599969598641566180701E1;
const A118: f64 = 2.27394870993505042818970056734E1;
const A119: f64 = 2.49360555267965238987089396762E0;
const A1110: f64 = -3.0467644718982195003823669022E0;
const A121: f64 = 2.27331014751653820792359768449E0;
const A124: f64 = -1.05344954667372501984066689879E1;
const A125: f64 = -2.00087205822486249909675718444E0;
const A126: f64 = -1.79589318631187989172765950534E1;
const A127: f64 = 2.79488845294199600508499808837E1;
const A128: f64 = -2.85899827713502369474065508674E0;
const A129: f64 = -8.87285693353062954433549289258E0;
const A1210: f64 = 1.23605671757943030647266201528E1;
const A1211: f64 = 6.43392746015763530355970484046E-1;

const B1: f64 = 5.42937341165687622380535766363E-2;
const B6: f64 = 4.45031289275240888144113950566E0;
const B7: f64 = 1.89151789931450038304281599044E0;
const B8: f64 = -5.8012039600105847814672114227E0;
const B9: f64 = 3.1116436695781989440891606237E-1;
const B10: f64 = -1.52160949662516078556178806805E-1;
const B11: f64 = 2.01365400804030348374776537501E-1;
const B12: f64 = 4.47106157277725905176885569043E-2;

const BHH1: f64 = 0.244094488188976377952755905512E+00;
const BHH2: f64 = 0.733846688281611857341361741547E+00;
const BHH3: f64 = 0.220588235294117647058823529412E-01;

const ER1: f64 = 0.1312004499419488073250102996E-01;
const ER6: f64 = -0.1225156446376204440720569753E+01;
const ER7: f64 = -0.4957589496572501915214079952E+00;
const ER8: f64 = 0.1664377182454986536961530415E+01;
const ER9: f64 = -0.3503288487499736816886487290E+00;
const ER10: f64 = 0.3341791187130174790297318841E+00;
const ER11: f64 = 0.8192320648511571246570742613E-01;
const ER12: f64 = -0.2235530786388629525884427845E-01;
