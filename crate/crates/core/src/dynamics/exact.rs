use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::ode::{integrate_visit, IntegratorSettings, OdeSystem};
use crate::protocol::RampProtocol;

/// Largest chain the brute-force oracle accepts.
pub const MAX_ORACLE_SITES: usize = 10;

/// Periodic spin chain `H = -sum sigma^x_i sigma^x_{i+1} - h sum sigma^z_i`
/// acting on the full `2^N` space. Bit `i` of a basis index is 1 when spin
/// `i` has `sigma^z = +1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinChain {
    n: usize,
}

impl SpinChain {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::invalid(format!(
                "chain length must be even and >= 2, got {n}"
            )));
        }
        if n > MAX_ORACLE_SITES {
            return Err(Error::invalid(format!(
                "exact oracle limited to N <= {MAX_ORACLE_SITES}, got {n}"
            )));
        }
        Ok(Self { n })
    }

    pub fn n_sites(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    fn bond_masks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n).map(move |i| (1 << i) | (1 << ((i + 1) % self.n)))
    }

    fn diagonal(&self, h: f64, s: usize) -> f64 {
        let up = s.count_ones() as f64;
        -h * (2.0 * up - self.n as f64)
    }

    /// `out = H(h) psi` for a real vector.
    pub fn apply(&self, h: f64, psi: &[f64], out: &mut [f64]) {
        for (s, o) in out.iter_mut().enumerate() {
            let mut acc = self.diagonal(h, s) * psi[s];
            for m in self.bond_masks() {
                acc -= psi[s ^ m];
            }
            *o = acc;
        }
    }

    /// `<psi|H(h)|psi>` for `psi = re + i im`.
    pub fn energy(&self, h: f64, re: &[f64], im: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.dim()];
        self.apply(h, re, &mut buf);
        let mut e: f64 = re.iter().zip(&buf).map(|(a, b)| a * b).sum();
        self.apply(h, im, &mut buf);
        e += im.iter().zip(&buf).map(|(a, b)| a * b).sum::<f64>();
        e
    }

    /// Lowest state in the sector `prod sigma^z = +1`, which is the sector
    /// described by the antiperiodic quasimomenta.
    pub fn ground_state(&self, h: f64) -> (f64, Vec<f64>) {
        let sector: Vec<usize> = (0..self.dim())
            .filter(|s| s.count_ones() % 2 == 0)
            .collect();
        let mut index = vec![usize::MAX; self.dim()];
        for (i, &s) in sector.iter().enumerate() {
            index[s] = i;
        }
        let d = sector.len();
        let mut m = DMatrix::<f64>::zeros(d, d);
        for (i, &s) in sector.iter().enumerate() {
            m[(i, i)] = self.diagonal(h, s);
            for mask in self.bond_masks() {
                m[(index[s ^ mask], i)] -= 1.0;
            }
        }
        let eig = SymmetricEigen::new(m);
        let (best, &e0) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .expect("non-empty sector");
        let col = eig.eigenvectors.column(best);
        let mut psi = vec![0.0; self.dim()];
        for (i, &s) in sector.iter().enumerate() {
            psi[s] = col[i];
        }
        (e0, psi)
    }
}

struct Schrodinger<'a> {
    chain: SpinChain,
    protocol: &'a RampProtocol,
}

impl OdeSystem for Schrodinger<'_> {
    fn dim(&self) -> usize {
        2 * self.chain.dim()
    }

    // psi' = -i H psi with real H: re' = H im, im' = -H re.
    fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        let h = self.protocol.field(t);
        let d = self.chain.dim();
        let (re, im) = y.split_at(d);
        let (d_re, d_im) = dy.split_at_mut(d);
        self.chain.apply(h, im, d_re);
        self.chain.apply(h, re, d_im);
        for v in d_im.iter_mut() {
            *v = -*v;
        }
    }
}

/// Stored energy per site `(E(t) - E(0)) / N` from direct evolution of the
/// full chain, starting in its ground state at `h_i`.
pub fn exact_chain_oracle(
    n: usize,
    protocol: &RampProtocol,
    t_grid: &[f64],
    settings: &IntegratorSettings,
) -> Result<Vec<f64>> {
    let chain = SpinChain::new(n)?;
    if t_grid.first() != Some(&0.0) {
        return Err(Error::invalid("time grid must start at t = 0"));
    }
    let (e0, psi0) = chain.ground_state(protocol.h_i);
    let d = chain.dim();
    let mut y0 = psi0;
    y0.resize(2 * d, 0.0);
    let system = Schrodinger { chain, protocol };
    let mut out = Vec::with_capacity(t_grid.len());
    integrate_visit(
        &system,
        &y0,
        t_grid,
        &protocol.breakpoints(),
        settings,
        |_, y| {
            let e = chain.energy(protocol.h_i, &y[..d], &y[d..]);
            out.push((e - e0) / n as f64);
        },
    )?;
    Ok(out)
}
