//! Small numerical helpers shared by the solvers.

use libm::erfc;
use statrs::function::erf::erfc_inv;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

pub fn sum_compensated<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<CompensatedSum>().value()
}

/// Standard normal density.
#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    FRAC_1_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal upper tail `Pr[Z > x]`.
#[inline]
pub fn normal_upper_tail(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`normal_upper_tail`] for `t` in (0, 1), polished by one
/// Newton step against [`normal_upper_tail`].
pub fn normal_upper_tail_inv(t: f64) -> f64 {
    let x = std::f64::consts::SQRT_2 * erfc_inv(2.0 * t);
    let pdf = normal_pdf(x);
    if x.is_finite() && pdf > 0.0 {
        x + (normal_upper_tail(x) - t) / pdf
    } else {
        x
    }
}

/// `E[(Z - x)^+]` for a standard normal `Z`, i.e. `pdf(x) - x * Q(x)`.
///
/// The direct form cancels badly for large `x`; there we use the continued
/// fraction of the Mills ratio, `Q(x) = pdf(x) / D0` with
/// `D0 = x + 1/D1`, `D1 = x + 2/(x + 3/(...))`, which gives
/// `pdf(x) - x Q(x) = pdf(x) / (D0 * D1)` with no subtraction.
pub fn normal_excess(x: f64) -> f64 {
    if x < 4.0 {
        return (normal_pdf(x) - x * normal_upper_tail(x)).max(0.0);
    }
    let mut d = x;
    for j in (2..=80).rev() {
        d = x + j as f64 / d;
    }
    let d1 = d;
    let d0 = x + 1.0 / d1;
    normal_pdf(x) / (d0 * d1)
}

/// Bisection for the boundary of a monotone predicate.
///
/// `lo` must fail `pred` and `hi` must satisfy it; returns the final
/// `(lo, hi)` bracket after the width drops below `tol` or `max_iter`
/// halvings have been done.
pub fn bisect_predicate<F>(mut lo: f64, mut hi: f64, tol: f64, max_iter: usize, mut pred: F) -> (f64, f64)
where
    F: FnMut(f64) -> bool,
{
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}
