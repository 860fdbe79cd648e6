//! Closed-form expectation of the initial density influence for a single
//! cluster of `n` points drawn uniformly on `[-1, 1]` with `k = 1`.

use crate::error::{Error, Result};

/// Closed form for the expected initial density influence of a point at `x`
/// among `n` uniform points on `[-1, 1]`:
///
/// ```text
/// ( 2/n + (n(x+1) - 2)/(2n) * exp(-n(x+1)/2)
///       + (n(1-x) - 2)/(2n) * exp(-n(1-x)/2) ) * exp(-1)
/// ```
///
/// Evaluated as written. Monte-Carlo means of the influence come out `n/2`
/// times larger in every bin; the shape, including the minima at the
/// endpoints, matches.
pub fn lemma1_expectation(x: f64, n: usize) -> Result<f64> {
    if !(-1.0..=1.0).contains(&x) {
        return Err(Error::Domain(format!("x = {x} outside [-1, 1]")));
    }
    if n < 2 {
        return Err(Error::Domain(format!("n = {n} must be at least 2")));
    }
    let n = n as f64;
    let side = |gap: f64| (n * gap - 2.0) / (2.0 * n) * (-n * gap / 2.0).exp();
    // summing the nearer side first makes the result exactly symmetric in x
    let (near, far) = ordered_gaps(x);
    Ok((2.0 / n + side(near) + side(far)) * (-1.0f64).exp())
}

/// Mean of [`lemma1_expectation`] over `x` uniform on `[low, high]`, in
/// closed form. This is the quantity a per-bin sample mean estimates.
pub fn lemma1_bin_average(low: f64, high: f64, n: usize) -> Result<f64> {
    if !(-1.0 <= low && low < high && high <= 1.0) {
        return Err(Error::Domain(format!(
            "bin [{low}, {high}] is not a sub-interval of [-1, 1]"
        )));
    }
    if n < 2 {
        return Err(Error::Domain(format!("n = {n} must be at least 2")));
    }
    let n = n as f64;
    // antiderivative of the one-sided term with respect to the gap
    let primitive = |gap: f64| -(gap / n) * (-n * gap / 2.0).exp();
    let width = high - low;
    let left = primitive(high + 1.0) - primitive(low + 1.0);
    let right = primitive(1.0 - low) - primitive(1.0 - high);
    Ok((2.0 / n + (left + right) / width) * (-1.0f64).exp())
}

fn ordered_gaps(x: f64) -> (f64, f64) {
    let (left, right) = (x + 1.0, 1.0 - x);
    if left <= right {
        (left, right)
    } else {
        (right, left)
    }
}
