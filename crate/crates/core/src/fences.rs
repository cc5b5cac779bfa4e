//! Box-plot quartiles and outlier fences.
//!
//! Quartiles are Tukey hinges: the medians of the lower and upper halves of
//! the sorted sample, with the overall median belonging to both halves when
//! the sample size is odd.

use alloc::vec::Vec;

const WHISKER: f64 = 1.5;

fn median_sorted(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Lower and upper hinge. `None` for an empty sample.
pub fn hinges(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut xs: Vec<f64> = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let half = xs.len().div_ceil(2);
    Some((median_sorted(&xs[..half]), median_sorted(&xs[xs.len() - half..])))
}

/// `Q3 + 1.5 * IQR`.
pub fn upper_fence(values: &[f64]) -> Option<f64> {
    hinges(values).map(|(q1, q3)| q3 + WHISKER * (q3 - q1))
}

/// `Q1 - 1.5 * IQR`.
pub fn lower_fence(values: &[f64]) -> Option<f64> {
    hinges(values).map(|(q1, q3)| q1 - WHISKER * (q3 - q1))
}
