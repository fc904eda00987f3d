//! Small dense helpers for 2x2 complex matrices.

use nalgebra::{Matrix2, Vector2};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat2 = Matrix2<C64>;
pub type RMat2 = Matrix2<f64>;

pub fn complexify(m: &RMat2) -> CMat2 {
    m.map(|x| C64::new(x, 0.0))
}

pub fn commutator(a: &CMat2, b: &CMat2) -> CMat2 {
    a * b - b * a
}

/// Eigenvalues of a Hermitian 2x2 matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMat2) -> [f64; 2] {
    let mean = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
    let half_diff = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)].conj());
    let r = (half_diff * half_diff + off.norm_sqr()).sqrt();
    [mean - r, mean + r]
}

/// Eigenvalues of a real symmetric 2x2 matrix, ascending.
pub fn symmetric_eigenvalues(m: &RMat2) -> [f64; 2] {
    let mean = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let off = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let r = half_diff.hypot(off);
    [mean - r, mean + r]
}

pub fn projector(v: &Vector2<C64>) -> CMat2 {
    v * v.adjoint()
}

pub fn real_trace_product(a: &CMat2, b: &RMat2) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// Packs a complex 2x2 matrix row-major as (re, im) pairs.
pub fn pack(m: &CMat2, out: &mut [f64]) {
    out[0] = m[(0, 0)].re;
    out[1] = m[(0, 0)].im;
    out[2] = m[(0, 1)].re;
    out[3] = m[(0, 1)].im;
    out[4] = m[(1, 0)].re;
    out[5] = m[(1, 0)].im;
    out[6] = m[(1, 1)].re;
    out[7] = m[(1, 1)].im;
}

pub fn unpack(y: &[f64]) -> CMat2 {
    CMat2::new(
        C64::new(y[0], y[1]),
        C64::new(y[2], y[3]),
        C64::new(y[4], y[5]),
        C64::new(y[6], y[7]),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pack_unpack_roundtrip() {
        let m = CMat2::new(
            C64::new(1.0, 2.0),
            C64::new(3.0, -4.0),
            C64::new(5.0, 6.0),
            C64::new(-7.0, 8.0),
        );
        let mut buf = [0.0; 8];
        pack(&m, &mut buf);
        assert_eq!(unpack(&buf), m);
    }

    #[test]
    fn eigenvalues_match_nalgebra() {
        let m = RMat2::new(0.3, -1.2, -1.2, 2.5);
        let ev = symmetric_eigenvalues(&m);
        let mut reference: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        reference.sort_by(f64::total_cmp);
        assert!((ev[0] - reference[0]).abs() < 1e-14);
        assert!((ev[1] - reference[1]).abs() < 1e-14);
        let h = hermitian_eigenvalues(&complexify(&m));
        assert!((h[0] - ev[0]).abs() < 1e-14 && (h[1] - ev[1]).abs() < 1e-14);
    }
}
