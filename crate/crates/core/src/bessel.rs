//! Bessel functions of the first kind, their first zeros, and the
//! Jacobi–Anger expansion of the modulation phase factor.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Below this |x| the ascending series is summed directly; above it the
/// Miller backward recurrence takes over.
const SERIES_CUTOFF: f64 = 12.0;

/// First positive zeros of J_0..J_3 to five decimals, as used for modulation
/// tuning. [`first_zero`] refines them.
pub const TABULATED_FIRST_ZEROS: [f64; 4] = [2.40483, 3.83170, 5.13562, 6.38016];

/// J_n(x) for integer order n ≥ 0.
pub fn bessel_j(n: u32, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("bessel_j: argument {x} is not finite")));
    }
    let ax = x.abs();
    let value = if ax < SERIES_CUTOFF {
        ascending_series(n, ax)
    } else {
        miller(n, ax)
    };
    Ok(if x < 0.0 && n % 2 == 1 { -value } else { value })
}

fn ascending_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    // (x/2)^n / n! built as a product so large n cannot overflow early.
    let mut term = 1.0;
    for i in 1..=n {
        term *= half / f64::from(i);
    }
    if term == 0.0 {
        return 0.0;
    }
    let q = half * half;
    let mut sum = term;
    let mut k = 0u32;
    loop {
        k += 1;
        term *= -q / (f64::from(k) * f64::from(k + n));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) && f64::from(k) > half {
            break;
        }
        if k > 500 {
            break;
        }
    }
    sum
}

fn miller(n: u32, x: f64) -> f64 {
    let big = 1e250;
    let top = f64::from(n).max(x);
    let mut m = (top + 30.0 + (60.0 * top).sqrt()).ceil() as u32;
    m += m % 2;

    let two_over_x = 2.0 / x;
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k, arbitrary scale
    let mut norm = 0.0;
    let mut result = 0.0;
    for k in (1..=m).rev() {
        let j_prev = f64::from(k) * two_over_x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        // j_cur now holds the unnormalised J_{k-1}.
        if j_cur.abs() > big {
            j_cur /= big;
            j_next /= big;
            norm /= big;
            result /= big;
        }
        let order = k - 1;
        if order == n {
            result = j_cur;
        }
        if order > 0 && order % 2 == 0 {
            norm += 2.0 * j_cur;
        }
    }
    norm += j_cur;
    result / norm
}

/// First positive zero j_{n,1} of J_n.
///
/// Orders 0..=3 start from [`TABULATED_FIRST_ZEROS`] and are polished by
/// bisection; higher orders are bracketed by scanning upward from x = n.
pub fn first_zero(n: u32) -> f64 {
    let (lo, hi) = if let Some(&tab) = TABULATED_FIRST_ZEROS.get(n as usize) {
        (tab - 1e-3, tab + 1e-3)
    } else {
        let step = 0.25;
        let mut a = f64::from(n);
        let mut fa = j_unchecked(n, a);
        loop {
            let b = a + step;
            let fb = j_unchecked(n, b);
            if fa * fb <= 0.0 {
                break (a, b);
            }
            a = b;
            fa = fb;
        }
    };
    bisect(n, lo, hi)
}

fn j_unchecked(n: u32, x: f64) -> f64 {
    bessel_j(n, x).expect("finite argument")
}

fn bisect(n: u32, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = j_unchecked(n, lo);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        let fmid = j_unchecked(n, mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Ordered table of first zeros, order 0 through `max_order`.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselZeroTable {
    pub entries: Vec<(u32, f64)>,
}

impl BesselZeroTable {
    pub fn new(max_order: u32) -> Self {
        BesselZeroTable {
            entries: (0..=max_order).map(|n| (n, first_zero(n))).collect(),
        }
    }

    pub fn get(&self, n: u32) -> Option<f64> {
        self.entries.iter().find(|(k, _)| *k == n).map(|&(_, z)| z)
    }
}

/// Modulus of the truncation residual of the Jacobi–Anger expansion of the
/// modulation factor e^{i r sin(ωt)}, summed through order `n_max`.
///
/// The sine-phase expansion carries even orders on cos(nωt) and odd orders
/// on i·sin(nωt); the all-cosine iⁿ form belongs to e^{i r cos(ωt)} and is
/// available as [`jacobi_anger_cos_sum`].
pub fn jacobi_anger_residual(ratio: f64, t: f64, omega: f64, n_max: u32) -> f64 {
    let lhs = Complex64::from_polar(1.0, ratio * (omega * t).sin());
    let rhs = jacobi_anger_sum(ratio, omega * t, n_max);
    (lhs - rhs).norm()
}

/// Truncated expansion of e^{i r sin φ}: J_0(r) + 2 Σ_{k≥1} J_{2k}(r) cos(2kφ)
/// + 2i Σ_{k≥0} J_{2k+1}(r) sin((2k+1)φ).
pub fn jacobi_anger_sum(ratio: f64, angle: f64, n_max: u32) -> Complex64 {
    let mut acc = Complex64::new(j_unchecked(0, ratio), 0.0);
    for n in 1..=n_max {
        let jn = j_unchecked(n, ratio);
        let nf = f64::from(n);
        if n % 2 == 0 {
            acc.re += 2.0 * jn * (nf * angle).cos();
        } else {
            acc.im += 2.0 * jn * (nf * angle).sin();
        }
    }
    acc
}

/// J_0(r) + 2 Σ_{n=1}^{n_max} iⁿ J_n(r) cos(nφ), the truncated expansion of
/// e^{i r cos φ}.
pub fn jacobi_anger_cos_sum(ratio: f64, angle: f64, n_max: u32) -> Complex64 {
    let mut acc = Complex64::new(j_unchecked(0, ratio), 0.0);
    let mut i_pow = Complex64::new(1.0, 0.0);
    for n in 1..=n_max {
        i_pow *= Complex64::i();
        acc += 2.0 * i_pow * j_unchecked(n, ratio) * (f64::from(n) * angle).cos();
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Bessel's integral J_n(x) = (1/π)∫₀^π cos(nτ − x sin τ) dτ by the
    /// trapezoid rule, which converges geometrically for this periodic
    /// integrand.
    fn integral_oracle(n: u32, x: f64) -> f64 {
        let m = 2000;
        let h = PI / m as f64;
        let f = |tau: f64| (f64::from(n) * tau - x * tau.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(PI));
        for k in 1..m {
            s += f(k as f64 * h);
        }
        s * h / PI
    }

    /// 60-term ascending series with explicit factorials.
    fn series_oracle(n: u32, x: f64) -> f64 {
        let mut sum = 0.0;
        for k in 0..60u32 {
            let mut denom = 1.0;
            for i in 1..=k {
                denom *= f64::from(i);
            }
            for i in 1..=(k + n) {
                denom *= f64::from(i);
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (x / 2.0).powi((2 * k + n) as i32) / denom;
        }
        sum
    }

    #[test]
    fn values_at_origin() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j(7, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn tabulated_zero_of_j0() {
        assert!(bessel_j(0, 2.40483).unwrap().abs() <= 1e-5);
    }

    #[test]
    fn matches_series_oracle() {
        let x = 5.13562;
        let oracle = series_oracle(0, x);
        assert!((bessel_j(0, x).unwrap() - oracle).abs() <= 1e-10);
    }

    #[test]
    fn matches_integral_oracle_on_both_branches() {
        for n in [0u32, 1, 2, 3, 5, 10, 20] {
            for i in 0..=200 {
                let x = -50.0 + 0.5 * i as f64;
                let got = bessel_j(n, x).unwrap();
                let want = integral_oracle(n, x);
                assert!(
                    (got - want).abs() <= 1e-12,
                    "J_{n}({x}) = {got}, oracle {want}"
                );
            }
        }
    }

    #[test]
    fn rejects_non_finite() {
        assert!(matches!(bessel_j(0, f64::NAN), Err(Error::Domain(_))));
        assert!(bessel_j(2, f64::INFINITY).is_err());
    }

    #[test]
    fn first_zeros_match_tabulated_constants() {
        for (n, tab) in TABULATED_FIRST_ZEROS.iter().enumerate() {
            let z = first_zero(n as u32);
            assert!((z - tab).abs() < 1e-5, "order {n}: {z}");
            assert!(bessel_j(n as u32, z).unwrap().abs() <= 1e-9);
        }
    }

    #[test]
    fn higher_order_zeros_are_first_and_accurate() {
        // j_{4,1} = 7.58834..., j_{10,1} = 14.47550..., j_{20,1} = 25.41714...
        let known = [(4u32, 7.588342434), (10, 14.475500686), (20, 25.417140814)];
        for (n, want) in known {
            let z = first_zero(n);
            assert!((z - want).abs() < 1e-8, "order {n}: {z}");
            assert!(bessel_j(n, z).unwrap().abs() <= 1e-9);
            // no sign change below it
            for k in 1..200 {
                let x = z * k as f64 / 200.0;
                assert!(bessel_j(n, x).unwrap() > 0.0);
            }
        }
    }

    #[test]
    fn zero_table_is_increasing() {
        let table = BesselZeroTable::new(8);
        assert!(table.entries.windows(2).all(|w| w[0].1 < w[1].1));
        for &(n, z) in &table.entries {
            assert!(bessel_j(n, z).unwrap().abs() <= 1e-9);
        }
        assert_eq!(table.get(2), Some(first_zero(2)));
        assert_eq!(table.get(9), None);
    }

    #[test]
    fn jacobi_anger_examples() {
        assert!(jacobi_anger_residual(0.0, 0.3, 2.0, 50) <= 1e-14);
        assert!(jacobi_anger_residual(2.40483, 1.0, 5.0, 50) <= 1e-10);
        assert!(jacobi_anger_residual(10.0, 0.37, 1.0, 50) <= 1e-10);
    }

    #[test]
    fn cosine_form_expands_cosine_phase() {
        let (r, phi) = (3.7f64, 0.81f64);
        let lhs = Complex64::from_polar(1.0, r * phi.cos());
        assert!((lhs - jacobi_anger_cos_sum(r, phi, 50)).norm() <= 1e-10);
    }

    proptest! {
        #[test]
        fn bounded(x in -50.0f64..50.0, n in 1u32..30) {
            prop_assert!(bessel_j(0, x).unwrap().abs() <= 1.0);
            prop_assert!(bessel_j(n, x).unwrap().abs() <= std::f64::consts::FRAC_1_SQRT_2);
        }

        #[test]
        fn three_term_recurrence(x in 0.5f64..40.0, n in 1u32..=20) {
            let lhs = bessel_j(n - 1, x).unwrap() + bessel_j(n + 1, x).unwrap();
            let rhs = 2.0 * f64::from(n) / x * bessel_j(n, x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9);
        }

        #[test]
        fn jacobi_anger_small(ratio in 0.0f64..10.0, t in -20.0f64..20.0, omega in 0.0f64..10.0) {
            prop_assert!(jacobi_anger_residual(ratio, t, omega, 50) <= 1e-10);
        }
    }
}
