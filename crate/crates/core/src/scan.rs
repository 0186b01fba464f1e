//! Sign-change scanning and bisection refinement on `[lo, hi]`.
//!
//! A root is reported as a sign change only when the function has strictly
//! opposite signs on either side of it. Zeros with the same sign on both
//! sides are reported separately as touch points. Runs of exact zeros and
//! non-finite samples are skipped over when looking for the neighbouring
//! signs.

use std::cmp::Ordering;

use crate::par::Execution;

/// Default bisection bracket width.
pub const DEFAULT_TOLERANCE: f64 = 1e-12;

/// Default interior margin, keeping samples off the endpoint poles.
pub const DEFAULT_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SignScan {
    pub points: Vec<f64>,
    pub touch_points: Vec<f64>,
}

/// Uniform grid of `n >= 2` points from `lo` to `hi` inclusive.
pub fn grid(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> + Clone {
    let step = (hi - lo) / (n - 1) as f64;
    (0..n).map(move |i| if i + 1 == n { hi } else { lo + step * i as f64 })
}

fn sign(v: f64) -> Option<Ordering> {
    v.partial_cmp(&0.0)
}

/// Bisects `[a, b]` where `f(a)` has sign `sa` and `f(b)` the opposite sign,
/// until the bracket is no wider than `tol` (or floating point can no longer
/// split it). Returns the final bracket.
pub fn bisect<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64, sa: Ordering, tol: f64) -> (f64, f64) {
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        match sign(f(mid)) {
            Some(Ordering::Equal) => return (mid, mid),
            Some(s) if s == sa => a = mid,
            Some(_) => b = mid,
            None => break,
        }
    }
    (a, b)
}

/// Scans `f` on a uniform grid of `grid_size` points over `[lo, hi]`,
/// refines every sign change by bisection to width `tol`, and merges roots
/// closer than `10 * tol`.
pub fn scan_sign_changes<F>(f: F, lo: f64, hi: f64, grid_size: usize, tol: f64, exec: Execution) -> SignScan
where
    F: Fn(f64) -> f64 + Sync + Send,
{
    let xs: Vec<f64> = grid(lo, hi, grid_size.max(2)).collect();
    let values = exec.map_indexed(xs.len(), |i| f(xs[i]));
    let mut out = SignScan::default();

    // (index, sign) of the last sample with a definite nonzero sign.
    let mut last: Option<(usize, Ordering)> = None;
    for (i, &v) in values.iter().enumerate() {
        let s = match sign(v) {
            Some(Ordering::Equal) | None => continue,
            Some(s) => s,
        };
        if let Some((j, sj)) = last {
            let zeros: Vec<usize> = (j + 1..i).filter(|&z| values[z] == 0.0).collect();
            if !zeros.is_empty() {
                let centre = 0.5 * (xs[zeros[0]] + xs[*zeros.last().unwrap()]);
                if sj != s {
                    out.points.push(centre);
                } else {
                    out.touch_points.push(centre);
                }
            } else if sj != s {
                let (a, b) = bisect(&f, xs[j], xs[i], sj, tol);
                out.points.push(0.5 * (a + b));
            }
        }
        last = Some((i, s));
    }
    out.points = merge_close(out.points, 10.0 * tol);
    out.touch_points = merge_close(out.touch_points, 10.0 * tol);
    out
}

fn merge_close(mut v: Vec<f64>, min_gap: f64) -> Vec<f64> {
    v.sort_by(f64::total_cmp);
    let mut out: Vec<f64> = Vec::with_capacity(v.len());
    for x in v {
        match out.last() {
            Some(&prev) if x - prev <= min_gap => {}
            _ => out.push(x),
        }
    }
    out
}
