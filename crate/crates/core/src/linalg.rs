//! Small dense complex-matrix utilities shared by the operator layers.
//!
//! System sizes are tiny (dimension at most 2^9), so everything here is
//! naive dense arithmetic; clarity and determinism beat asymptotics.

use ndarray::Array2;
use num_complex::Complex64;

/// Largest entry magnitude.
pub(crate) fn max_abs(m: &Array2<Complex64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

/// max |lhs - rhs| / max(|lhs|, |rhs|); zero when both sides vanish.
pub(crate) fn rel_residual(lhs: &Array2<Complex64>, rhs: &Array2<Complex64>) -> f64 {
    rel_residual_scaled(lhs, rhs, 0.0)
}

/// Like rel_residual but the scale also covers the largest term that went
/// into assembling a side. Identities whose sides are sums can cancel far
/// below their term magnitudes; relative to the assembled value alone the
/// rounding floor of such a sum is unbounded over random draws.
pub(crate) fn rel_residual_scaled(
    lhs: &Array2<Complex64>,
    rhs: &Array2<Complex64>,
    term_scale: f64,
) -> f64 {
    let scale = max_abs(lhs).max(max_abs(rhs)).max(term_scale);
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst = 0.0_f64;
    for (a, b) in lhs.iter().zip(rhs.iter()) {
        worst = worst.max((a - b).norm());
    }
    worst / scale
}

/// Dense identity.
pub(crate) fn identity(dim: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(dim, Complex64::new(1.0, 0.0))
}

/// Determinant by LU with partial pivoting; exact zero for singular input.
pub(crate) fn determinant(m: &Array2<Complex64>) -> Complex64 {
    let n = m.nrows();
    assert_eq!(n, m.ncols(), "determinant needs a square matrix");
    let mut a = m.clone();
    let mut det = Complex64::new(1.0, 0.0);
    for col in 0..n {
        let mut pivot = col;
        let mut best = a[(col, col)].norm();
        for row in col + 1..n {
            let mag = a[(row, col)].norm();
            if mag > best {
                best = mag;
                pivot = row;
            }
        }
        if best == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        if pivot != col {
            for k in 0..n {
                let tmp = a[(col, k)];
                a[(col, k)] = a[(pivot, k)];
                a[(pivot, k)] = tmp;
            }
            det = -det;
        }
        let diag = a[(col, col)];
        det *= diag;
        for row in col + 1..n {
            let factor = a[(row, col)] / diag;
            if factor.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let sub = a[(col, k)] * factor;
                a[(row, k)] -= sub;
            }
        }
    }
    det
}

/// Kahan-compensated complex accumulator; the compensation runs separately
/// on the real and imaginary parts.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct KahanSum {
    sum_re: f64,
    sum_im: f64,
    c_re: f64,
    c_im: f64,
}

impl KahanSum {
    pub(crate) fn add(&mut self, z: Complex64) {
        let y = z.re - self.c_re;
        let t = self.sum_re + y;
        self.c_re = (t - self.sum_re) - y;
        self.sum_re = t;
        let y = z.im - self.c_im;
        let t = self.sum_im + y;
        self.c_im = (t - self.sum_im) - y;
        self.sum_im = t;
    }

    pub(crate) fn value(&self) -> Complex64 {
        Complex64::new(self.sum_re, self.sum_im)
    }
}
