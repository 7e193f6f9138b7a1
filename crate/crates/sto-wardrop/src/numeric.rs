//! Small exact combinatorial helpers shared by the moment and bound engines.
//!
//! All inputs stay far below the range where `f64` loses integer exactness
//! (factorials up to 8!, double factorials up to 17!!), so everything is
//! computed directly in floating point.

/// Binomial coefficient C(n, k) as an exact `f64`.
pub(crate) fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Double factorial (r - 1)!! for even r, with (-1)!! = 1.
///
/// This is the r-th standardized central moment of a unit normal.
pub(crate) fn odd_double_factorial(r: usize) -> f64 {
    debug_assert!(r % 2 == 0);
    let mut acc = 1.0;
    let mut k = r as i64 - 1;
    while k > 1 {
        acc *= k as f64;
        k -= 2;
    }
    acc
}

/// Multinomial coefficient m! / prod(parts!) as an exact `f64` (m <= 20).
pub(crate) fn multinomial(total: usize, parts: &[usize]) -> f64 {
    debug_assert_eq!(parts.iter().sum::<usize>(), total);
    let mut acc = 1.0;
    let mut seen = 0usize;
    for &part in parts {
        acc *= binomial(seen + part, part);
        seen += part;
    }
    acc
}

/// E[X^m] / mean^m for X normal with coefficient of variation `cv`:
/// sum over even r of C(m, r) * cv^r * (r - 1)!!.
pub(crate) fn normal_moment_ratio(m: usize, cv: f64) -> f64 {
    let mut acc = 0.0;
    let mut r = 0usize;
    while r <= m {
        acc += binomial(m, r) * cv.powi(r as i32) * odd_double_factorial(r);
        r += 2;
    }
    acc
}

/// Raw moment E[X^m] of a normal with the given mean and standard deviation.
pub(crate) fn normal_raw_moment(m: usize, mean: f64, std_dev: f64) -> f64 {
    let mut acc = 0.0;
    let mut r = 0usize;
    while r <= m {
        acc += binomial(m, r)
            * std_dev.powi(r as i32)
            * mean.powi((m - r) as i32)
            * odd_double_factorial(r);
        r += 2;
    }
    acc
}

/// Visits every composition of `total` into `parts` nonnegative integers.
pub(crate) fn for_each_composition<F: FnMut(&[usize])>(total: usize, parts: usize, mut visit: F) {
    if parts == 0 {
        if total == 0 {
            visit(&[]);
        }
        return;
    }
    let mut buf = vec![0usize; parts];
    fn recurse<F: FnMut(&[usize])>(buf: &mut [usize], idx: usize, left: usize, visit: &mut F) {
        if idx + 1 == buf.len() {
            buf[idx] = left;
            visit(buf);
            return;
        }
        for take in 0..=left {
            buf[idx] = take;
            recurse(buf, idx + 1, left - take, visit);
        }
    }
    recurse(&mut buf, 0, total, &mut visit);
}
