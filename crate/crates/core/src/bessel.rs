//! Bessel functions of the first kind and their positive zeros.
//!
//! `J_m(x)` is evaluated by the ascending power series for `x <= SERIES_MAX_X`
//! and by Miller's backward recurrence, normalized with
//! `J_0 + 2 * sum_k J_2k = 1`, above that. The series loses at most a few
//! hundred ulps to cancellation on `[0, 8]`; the recurrence is stable for
//! every order and argument in the supported range.

use std::collections::BTreeMap;
use std::sync::{Mutex, OnceLock};

use crate::{Error, Result};

pub const MAX_ORDER: u32 = 20;
pub const MAX_ARG: f64 = 100.0;
pub const MAX_ROOT_INDEX: usize = 20;

/// Series/recurrence switchover.
const SERIES_MAX_X: f64 = 8.0;
const ROOT_SCAN_STEP: f64 = 0.1;
const ROOT_TOLERANCE: f64 = 1e-10;

/// Zeros of `J_order`, filled lazily and never shrunk.
#[derive(Debug, Clone, PartialEq)]
pub struct BesselRootTable {
    order: u32,
    roots: Vec<f64>,
    tolerance: f64,
}

impl BesselRootTable {
    pub fn new(order: u32) -> Result<Self> {
        if order > MAX_ORDER {
            return Err(Error::Range(format!("Bessel order {order} > {MAX_ORDER}")));
        }
        Ok(BesselRootTable {
            order,
            roots: Vec::new(),
            tolerance: ROOT_TOLERANCE,
        })
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn roots(&self) -> &[f64] {
        &self.roots
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Extends the table until it holds at least `count` roots.
    pub fn fill_to(&mut self, count: usize) -> Result<()> {
        let m = self.order;
        let mut a = self
            .roots
            .last()
            .map(|r| r + 1.0)
            .unwrap_or(if m == 0 { 1.0 } else { m as f64 });
        while self.roots.len() < count {
            let mut fa = eval(m, a);
            let mut found = None;
            while a < MAX_ARG {
                let b = (a + ROOT_SCAN_STEP).min(MAX_ARG);
                let fb = eval(m, b);
                if fa == 0.0 {
                    found = Some(a);
                    break;
                }
                if fa * fb < 0.0 {
                    found = Some(bisect(m, a, b, fa));
                    break;
                }
                a = b;
                fa = fb;
            }
            let root = found.ok_or_else(|| {
                Error::Internal(format!(
                    "failed to bracket root {} of J_{m} below {MAX_ARG}",
                    self.roots.len() + 1
                ))
            })?;
            if eval(m, root).abs() > self.tolerance {
                return Err(Error::Internal(format!(
                    "root {root} of J_{m} misses tolerance {}",
                    self.tolerance
                )));
            }
            self.roots.push(root);
            a = root + 1.0;
        }
        Ok(())
    }
}

fn bisect(m: u32, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = eval(m, mid);
        if fm == 0.0 {
            return mid;
        }
        if fa * fm < 0.0 {
            b = mid;
        } else {
            a = mid;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

fn check_args(m: u32, x: f64) -> Result<()> {
    if m > MAX_ORDER {
        return Err(Error::Range(format!("Bessel order {m} > {MAX_ORDER}")));
    }
    if !(0.0..=MAX_ARG).contains(&x) {
        return Err(Error::Range(format!("Bessel argument {x} outside [0, {MAX_ARG}]")));
    }
    Ok(())
}

/// `J_m(x)` for `m <= 20`, `0 <= x <= 100`.
pub fn bessel_j(m: u32, x: f64) -> Result<f64> {
    check_args(m, x)?;
    Ok(eval(m, x))
}

/// `J_m'(x)` from `(J_{m-1} - J_{m+1}) / 2`, with `J_0' = -J_1`.
pub fn bessel_j_prime(m: u32, x: f64) -> Result<f64> {
    check_args(m, x)?;
    Ok(eval_prime(m, x))
}

/// `k`-th positive zero of `J_m`, cached per order.
pub fn bessel_root(m: u32, k: usize) -> Result<f64> {
    if m > MAX_ORDER {
        return Err(Error::Range(format!("Bessel order {m} > {MAX_ORDER}")));
    }
    if k == 0 || k > MAX_ROOT_INDEX {
        return Err(Error::Range(format!("root index {k} outside 1..={MAX_ROOT_INDEX}")));
    }
    static CACHE: OnceLock<Mutex<BTreeMap<u32, BesselRootTable>>> = OnceLock::new();
    let mut cache = CACHE
        .get_or_init(|| Mutex::new(BTreeMap::new()))
        .lock()
        .map_err(|_| Error::Internal("Bessel root cache poisoned".into()))?;
    let table = match cache.entry(m) {
        std::collections::btree_map::Entry::Occupied(e) => e.into_mut(),
        std::collections::btree_map::Entry::Vacant(e) => e.insert(BesselRootTable::new(m)?),
    };
    table.fill_to(k)?;
    Ok(table.roots[k - 1])
}

/// Unchecked evaluation; callers guarantee the supported range (order up
/// to 21 is used internally by the derivative).
pub(crate) fn eval(m: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if m == 0 { 1.0 } else { 0.0 };
    }
    if x <= SERIES_MAX_X {
        series(m, x)
    } else {
        miller(m, x)
    }
}

pub(crate) fn eval_prime(m: u32, x: f64) -> f64 {
    if m == 0 {
        -eval(1, x)
    } else {
        0.5 * (eval(m - 1, x) - eval(m + 1, x))
    }
}

fn series(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=m {
        term *= half / i as f64;
    }
    let q = -half * half;
    let mut sum = term;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + m as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs().max(1e-300) || k > 200.0 {
            break;
        }
        k += 1.0;
    }
    sum
}

fn miller(m: u32, x: f64) -> f64 {
    let start = (m as f64).max(x) + 20.0 + 15.0 * x.cbrt();
    let mut n = start as usize;
    n += n % 2;
    let two_over_x = 2.0 / x;
    let mut next = 0.0; // J_{k+1}
    let mut cur = 1e-30; // J_k
    let mut norm = 0.0;
    let mut result = 0.0;
    for k in (1..=n).rev() {
        let prev = k as f64 * two_over_x * cur - next;
        next = cur;
        cur = prev;
        let order = k - 1;
        if order == m as usize {
            result = cur;
        }
        if order % 2 == 0 && order > 0 {
            norm += 2.0 * cur;
        }
        if cur.abs() > 1e250 {
            cur *= 1e-250;
            next *= 1e-250;
            norm *= 1e-250;
            result *= 1e-250;
        }
    }
    norm += cur;
    result / norm
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;

    // 40-digit reference values (mpmath.besselj).
    const REFERENCE: &[(u32, f64, f64)] = &[
        (0, 0.5, 0.93846980724081290423),
        (0, 2.0, 0.22389077914123566805),
        (1, 2.0, 0.5767248077568733872),
        (0, 12.5, 0.14688405470042110231),
        (3, 7.25, -0.21924533340150819107),
        (5, 0.1, 2.6030817909644415564e-9),
        (7, 30.0, 0.1451851895723282743),
        (10, 50.0, -0.11384784914946938567),
        (20, 15.0, 0.0073602340792234852583),
        (20, 99.9, 0.066967146327537083503),
        (0, 100.0, 0.019985850304223122424),
        (1, 100.0, -0.077145352014112158033),
        (13, 60.3, -0.097958403813919685766),
        (2, 9.99, 0.25469265705463361818),
        (15, 3.0, 2.9076447624060238519e-10),
    ];

    /// Series summed to convergence, independent of the switchover logic.
    fn power_series(m: u32, x: f64) -> f64 {
        let mut sum = 0.0;
        for k in 0..60u32 {
            let mut t = (0.5 * x).powi((2 * k + m) as i32);
            for i in 1..=k {
                t /= i as f64;
            }
            for i in 1..=(k + m) {
                t /= i as f64;
            }
            sum += if k % 2 == 0 { t } else { -t };
        }
        sum
    }

    fn bisect_series(m: u32, mut a: f64, mut b: f64) -> f64 {
        for _ in 0..100 {
            let c = 0.5 * (a + b);
            if power_series(m, a) * power_series(m, c) <= 0.0 {
                b = c;
            } else {
                a = c;
            }
        }
        0.5 * (a + b)
    }

    #[test]
    fn matches_reference_values() {
        for &(m, x, want) in REFERENCE {
            let got = bessel_j(m, x).unwrap();
            assert!((got - want).abs() <= 1e-12, "J_{m}({x}) = {got}, want {want}");
        }
    }

    #[test]
    fn origin_values() {
        assert_eq!(bessel_j(0, 0.0).unwrap(), 1.0);
        assert_eq!(bessel_j(1, 0.0).unwrap(), 0.0);
        assert_eq!(bessel_j_prime(0, 0.0).unwrap(), 0.0);
        assert!((bessel_j_prime(1, 0.0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn both_branches_agree_with_plain_series_near_switchover() {
        for m in 0..=10 {
            for &x in &[6.0, 7.5, 8.0, 8.5, 10.0, 12.0] {
                let want = power_series(m, x);
                assert!((eval(m, x) - want).abs() < 1e-11, "m={m} x={x}");
                assert!((miller(m, x) - want).abs() < 1e-11, "miller m={m} x={x}");
            }
        }
    }

    #[test]
    fn zeros_from_bisected_series() {
        let j01 = bisect_series(0, 2.0, 3.0);
        let j11 = bisect_series(1, 3.0, 4.0);
        let j21 = bisect_series(2, 5.0, 6.0);
        assert!((bessel_j(0, 2.404826).unwrap()).abs() < 1e-5);
        assert!((bessel_j_prime(0, 3.831706).unwrap()).abs() < 1e-5);
        assert!((bessel_root(0, 1).unwrap() - j01).abs() < 1e-8);
        assert!((bessel_root(1, 1).unwrap() - j11).abs() < 1e-8);
        assert!((bessel_root(2, 1).unwrap() - j21).abs() < 1e-8);
        assert!((j01 - 2.4048256).abs() < 1e-7);
        assert!((j11 - 3.8317060).abs() < 1e-7);
        assert!((j21 - 5.1356223).abs() < 1e-7);
    }

    #[test]
    fn far_roots_match_reference() {
        // mpmath.besseljzero
        let cases = [
            (0, 5, 14.930917708487785948),
            (5, 5, 22.217799896561267869),
            (20, 20, 91.263548162504386272),
            (0, 20, 62.048469190227169883),
            (10, 3, 22.046985364697801872),
        ];
        for (m, k, want) in cases {
            let got = bessel_root(m, k).unwrap();
            assert!((got - want).abs() < 1e-8, "j_{m},{k} = {got}");
        }
    }

    #[test]
    fn recurrence_residual_on_grid() {
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let x = 0.5 + 49.5 * i as f64 / 999.0;
            for m in 1..=10u32 {
                let r = eval(m - 1, x) + eval(m + 1, x) - 2.0 * m as f64 / x * eval(m, x);
                worst = worst.max(r.abs());
            }
        }
        assert!(worst <= 1e-8, "worst recurrence residual {worst}");
    }

    #[test]
    fn interlacing() {
        for m in 0..=5 {
            for k in 1..=5 {
                let a = bessel_root(m, k).unwrap();
                let b = bessel_root(m + 1, k).unwrap();
                let c = bessel_root(m, k + 1).unwrap();
                assert!(a < b && b < c, "m={m} k={k}");
            }
        }
    }

    #[test]
    fn derivative_matches_central_difference() {
        let step = 1e-4;
        for m in 0..=12 {
            for i in 1..60 {
                let x = 0.3 + i as f64 * 1.6;
                let fd = (eval(m, x + step) - eval(m, x - step)) / (2.0 * step);
                assert!((fd - eval_prime(m, x)).abs() < 1e-6, "m={m} x={x}");
            }
        }
    }

    #[test]
    fn root_table_invariants() {
        for m in [0, 3, 20] {
            let mut table = BesselRootTable::new(m).unwrap();
            table.fill_to(20).unwrap();
            let roots = table.roots();
            assert_eq!(roots.len(), 20);
            for w in roots.windows(2) {
                assert!(w[1] - w[0] > 2.0);
            }
            for &r in roots {
                assert!(eval(m, r).abs() <= table.tolerance());
            }
        }
    }

    #[test]
    fn range_errors() {
        assert!(matches!(bessel_j(21, 1.0), Err(Error::Range(_))));
        assert!(matches!(bessel_j(0, 100.5), Err(Error::Range(_))));
        assert!(matches!(bessel_j(0, -1.0), Err(Error::Range(_))));
        assert!(matches!(bessel_root(0, 21), Err(Error::Range(_))));
        assert!(matches!(bessel_root(0, 0), Err(Error::Range(_))));
    }

    #[test]
    fn concurrent_cache_fill_is_idempotent() {
        let handles: Vec<_> = (0..4)
            .map(|_| std::thread::spawn(|| (1..=8).map(|k| bessel_root(7, k).unwrap()).collect::<Vec<_>>()))
            .collect();
        let results: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
        for r in &results[1..] {
            assert_eq!(r, &results[0]);
        }
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn recurrence_holds(m in 1u32..=10, x in 0.5f64..50.0) {
                let r = bessel_j(m - 1, x).unwrap() + bessel_j(m + 1, x).unwrap()
                    - 2.0 * m as f64 / x * bessel_j(m, x).unwrap();
                prop_assert!(r.abs() <= 1e-8, "m {} x {} residual {}", m, x, r);
            }

            #[test]
            fn derivative_matches_central_difference(m in 0u32..=10, x in 0.5f64..50.0) {
                let step = 1e-4;
                let fd = (bessel_j(m, x + step).unwrap() - bessel_j(m, x - step).unwrap()) / (2.0 * step);
                prop_assert!((fd - bessel_j_prime(m, x).unwrap()).abs() <= 1e-6);
            }
        }
    }
}
