//! Globally adaptive Gauss–Kronrod (7/15) quadrature.
//!
//! The interval with the largest error estimate is bisected until the summed
//! error falls below `max(ABS_FLOOR, rel_tol * |I|)`. Integrands with kinks
//! must be split at the kinks by the caller ([`integrate_split`]).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::ToleranceConfig;
use crate::error::{Error, Result};

const ABS_FLOOR: f64 = 1e-15;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
// Gauss weights for the odd-indexed Kronrod abscissae (1, 3, 5) and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

struct Segment {
    lo: f64,
    hi: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod<F: Fn(f64) -> f64>(f: &F, lo: f64, hi: f64) -> Result<Segment> {
    let centre = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let fc = f(centre);
    if !fc.is_finite() {
        return Err(Error::NonFinite("integrand"));
    }
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let f1 = f(centre - dx);
        let f2 = f(centre + dx);
        if !f1.is_finite() || !f2.is_finite() {
            return Err(Error::NonFinite("integrand"));
        }
        kron += w * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Ok(Segment {
        lo,
        hi,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    })
}

/// Adaptive integral of `f` over `[lo, hi]`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cfg: &ToleranceConfig) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::Domain(format!("integration bounds out of order: [{lo}, {hi}]")));
    }
    if lo == hi {
        return Ok(0.0);
    }
    let mut heap = BinaryHeap::new();
    let first = kronrod(&f, lo, hi)?;
    let mut total = first.value;
    let mut total_err = first.error;
    heap.push(first);
    let mut splits = 0;
    while total_err > ABS_FLOOR.max(cfg.quadrature_rel_tol * total.abs()) {
        if splits >= cfg.max_iter {
            return Err(Error::Convergence {
                routine: "integrate",
                max_iter: cfg.max_iter,
            });
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if mid <= worst.lo || mid >= worst.hi {
            // Interval can no longer be bisected in floating point.
            heap.push(worst);
            break;
        }
        let left = kronrod(&f, worst.lo, mid)?;
        let right = kronrod(&f, mid, worst.hi)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        splits += 1;
    }
    // Re-sum from the pieces to shed accumulated rounding in the running total.
    Ok(heap.iter().map(|s| s.value).sum())
}

/// Integral over `[lo, hi]` split at every breakpoint that falls strictly inside.
pub fn integrate_split<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breakpoints: &[f64],
    cfg: &ToleranceConfig,
) -> Result<f64> {
    if !(lo <= hi) {
        return Err(Error::Domain(format!("integration bounds out of order: [{lo}, {hi}]")));
    }
    let mut cuts: Vec<f64> = breakpoints
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .collect();
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let mut sum = 0.0;
    let mut start = lo;
    for end in cuts.into_iter().chain(std::iter::once(hi)) {
        sum += integrate(&f, start, end, cfg)?;
        start = end;
    }
    Ok(sum)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn cfg() -> ToleranceConfig {
        ToleranceConfig::default()
    }

    #[test]
    fn polynomial() {
        assert_relative_eq!(integrate(|t| t * t, 0.0, 1.0, &cfg()).unwrap(), 1.0 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn exponential_decay() {
        let exact = (1.0 - (-2.0f64).exp()) / 0.2;
        let got = integrate(|t| (-0.2 * t).exp(), 0.0, 10.0, &cfg()).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-9);
        assert_relative_eq!(got, 4.323_323_583_816_936, max_relative = 1e-9);
    }

    #[test]
    fn degenerate_interval_is_zero() {
        assert_eq!(integrate(|t| t.exp(), 3.0, 3.0, &cfg()).unwrap(), 0.0);
    }

    #[test]
    fn endpoint_singularity() {
        // ∫₀¹ t^{-1/2} dt = 2
        let got = integrate(|t| 1.0 / t.sqrt(), 0.0, 1.0, &cfg()).unwrap();
        assert_relative_eq!(got, 2.0, max_relative = 1e-8);
    }

    #[test]
    fn kinked_integrand_with_breakpoint() {
        let got = integrate_split(|t: f64| (t - 0.3).abs(), 0.0, 1.0, &[0.3], &cfg()).unwrap();
        assert_relative_eq!(got, 0.5 * (0.09 + 0.49), max_relative = 1e-12);
    }

    #[test]
    fn non_finite_integrand_is_reported() {
        let err = integrate(|t| if t > 0.5 { f64::NAN } else { t }, 0.0, 1.0, &cfg()).unwrap_err();
        assert_eq!(err, Error::NonFinite("integrand"));
    }

    #[test]
    fn exhausted_budget_is_reported() {
        let tight = ToleranceConfig { max_iter: 1, quadrature_rel_tol: 1e-14, ..cfg() };
        let err = integrate(|t: f64| (40.0 * t).sin().abs(), 0.0, 10.0, &tight).unwrap_err();
        assert!(matches!(err, Error::Convergence { .. }));
    }

    proptest! {
        #[test]
        fn additive_over_adjacent_intervals(a in -3.0f64..0.0, b in 0.0f64..2.0, c in 2.0f64..5.0) {
            let f = |t: f64| (0.7 * t).cos() * (-0.1 * t * t).exp();
            let whole = integrate(f, a, c, &cfg()).unwrap();
            let parts = integrate(f, a, b, &cfg()).unwrap() + integrate(f, b, c, &cfg()).unwrap();
            prop_assert!((whole - parts).abs() <= 1e-9 * whole.abs().max(1.0) * 3.0);
        }
    }
}
