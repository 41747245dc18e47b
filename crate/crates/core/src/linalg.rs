// Copyright 2026 isoyield Contributors
// SPDX-License-Identifier: Apache-2.0

//! Small dense kernels shared by the dissipator and the propagators.

use faer::linalg::matmul::matmul;
use faer::linalg::solvers::Solve;
use faer::{Accum, Mat, MatMut, MatRef, Par};

/// `dst = alpha·lhs·rhs (+ dst if accumulate)`, single-threaded so results do
/// not depend on the thread count.
#[inline]
pub fn gemm(dst: MatMut<'_, f64>, accumulate: bool, lhs: MatRef<'_, f64>, rhs: MatRef<'_, f64>, alpha: f64) {
    let beta = if accumulate { Accum::Add } else { Accum::Replace };
    matmul(dst, beta, lhs, rhs, alpha, Par::Seq);
}

pub fn max_abs(m: MatRef<'_, f64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            out = out.max(m[(i, j)].abs());
        }
    }
    out
}

/// Largest |m_ij − m_ji|.
pub fn asymmetry(m: MatRef<'_, f64>) -> f64 {
    let mut out = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..j {
            out = out.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    out
}

fn one_norm(m: MatRef<'_, f64>) -> f64 {
    (0..m.ncols())
        .map(|j| (0..m.nrows()).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by Padé(13) scaling and squaring.
pub fn expm(a: MatRef<'_, f64>) -> Mat<f64> {
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    const THETA13: f64 = 5.371920351148152;
    let n = a.nrows();
    let norm = one_norm(a);
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scale = 0.5f64.powi(s);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * scale);
    let id = Mat::<f64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let mut u_inner = Mat::<f64>::zeros(n, n);
    let mut v_inner = Mat::<f64>::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            u_inner[(i, j)] = B[13] * a6[(i, j)] + B[11] * a4[(i, j)] + B[9] * a2[(i, j)];
            v_inner[(i, j)] = B[12] * a6[(i, j)] + B[10] * a4[(i, j)] + B[8] * a2[(i, j)];
        }
    }
    let mut u_sum = &a6 * &u_inner;
    let mut v = &a6 * &v_inner;
    for j in 0..n {
        for i in 0..n {
            u_sum[(i, j)] += B[7] * a6[(i, j)] + B[5] * a4[(i, j)] + B[3] * a2[(i, j)] + B[1] * id[(i, j)];
            v[(i, j)] += B[6] * a6[(i, j)] + B[4] * a4[(i, j)] + B[2] * a2[(i, j)] + B[0] * id[(i, j)];
        }
    }
    let u = &a * &u_sum;
    let p = &v + &u;
    let q = &v - &u;
    let mut r = q.partial_piv_lu().solve(&p);
    for _ in 0..s {
        r = &r * &r;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_diagonal() {
        let a = Mat::from_fn(3, 3, |i, j| if i == j { -(i as f64) * 3.0 } else { 0.0 });
        let e = expm(a.as_ref());
        for i in 0..3 {
            assert!((e[(i, i)] - (-(i as f64) * 3.0).exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn expm_of_rotation_generator() {
        let t = 40.0;
        let a = Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => -t,
            (1, 0) => t,
            _ => 0.0,
        });
        let e = expm(a.as_ref());
        assert!((e[(0, 0)] - t.cos()).abs() < 1e-11);
        assert!((e[(1, 0)] - t.sin()).abs() < 1e-11);
    }

    #[test]
    fn expm_of_nilpotent() {
        let a = Mat::from_fn(3, 3, |i, j| if j == i + 1 { 2.0 } else { 0.0 });
        let e = expm(a.as_ref());
        assert!((e[(0, 1)] - 2.0).abs() < 1e-14);
        assert!((e[(0, 2)] - 2.0).abs() < 1e-14);
        assert!((e[(2, 0)]).abs() < 1e-14);
    }

    #[test]
    fn gemm_accumulates() {
        let a = Mat::from_fn(2, 2, |i, j| (i + 2 * j) as f64);
        let mut c = Mat::<f64>::identity(2, 2);
        gemm(c.as_mut(), true, a.as_ref(), a.as_ref(), 1.0);
        let r = &a * &a;
        assert_eq!(c[(0, 0)], r[(0, 0)] + 1.0);
        assert_eq!(c[(1, 0)], r[(1, 0)]);
    }
}
