//! Interior inflection points and fixed points of exceedance chains.
//!
//! Three inflection finders, in decreasing order of how much structure
//! they use:
//!
//! * [`inflection_single`]: closed form `(m-1)/(k-1)` for one stage.
//! * [`inflection_pair`]: for two stages the curvature statistic `S` is
//!   strictly decreasing on `(0, 1)`, so there is at most one sign change
//!   and bisection finds it.
//! * [`inflection_scan`]: no structural assumption; a dense grid scan with
//!   every sign change refined by bisection.

use serde::Serialize;

use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::exceedance::{ExceedanceSpec, UnitInterval};
use crate::numfmt;
use crate::par::Execution;
use crate::scan::{self, DEFAULT_MARGIN, DEFAULT_TOLERANCE};

/// Grid used to bracket the (unique) sign change of a two-stage chain.
pub const PAIR_BRACKET_GRID: usize = 128;

/// Grid used to bracket fixed points.
pub const FIXED_POINT_GRID: usize = 10_000;

/// Residual bound on `|F(p) - p|` for a reported fixed point.
pub const FIXED_POINT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InflectionMethod {
    ClosedForm,
    MonotoneBisection,
    ScanRefine,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InflectionReport {
    /// Interior roots of `F''` with a certified sign change, ascending.
    #[serde(serialize_with = "numfmt::ser_vec_f64")]
    pub points: Vec<f64>,
    /// Interior zeros of `F''` without a sign change, ascending.
    #[serde(serialize_with = "numfmt::ser_vec_f64")]
    pub touch_points: Vec<f64>,
    pub method: InflectionMethod,
    pub grid_size: usize,
    /// Bisection bracket width.
    #[serde(serialize_with = "numfmt::ser_f64")]
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Guarantee {
    AtMostOne,
    ExactlyOne,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FixedPointReport {
    #[serde(serialize_with = "numfmt::ser_opt_f64")]
    pub point: Option<f64>,
    pub guarantee: Guarantee,
    #[serde(serialize_with = "numfmt::ser_f64")]
    pub tolerance: f64,
}

/// Combined report: the JSON shape printed by the CLI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub chain: Chain,
    #[serde(serialize_with = "numfmt::ser_vec_f64")]
    pub inflections: Vec<f64>,
    #[serde(serialize_with = "numfmt::ser_vec_f64")]
    pub touch_points: Vec<f64>,
    pub method: InflectionMethod,
    pub grid_size: usize,
    #[serde(serialize_with = "numfmt::ser_f64")]
    pub tolerance: f64,
    #[serde(serialize_with = "numfmt::ser_opt_f64")]
    pub fixed_point: Option<f64>,
    pub guarantee: Guarantee,
}

impl AnalysisReport {
    pub fn new(chain: Chain, inflection: InflectionReport, fixed: FixedPointReport) -> Self {
        AnalysisReport {
            chain,
            inflections: inflection.points,
            touch_points: inflection.touch_points,
            method: inflection.method,
            grid_size: inflection.grid_size,
            tolerance: inflection.tolerance,
            fixed_point: fixed.point,
            guarantee: fixed.guarantee,
        }
    }
}

/// Dispatches on chain length: closed form for one stage, monotone
/// bisection for two, grid scan otherwise.
pub fn inflections(chain: &Chain, grid_size: usize, tolerance: f64) -> Result<InflectionReport> {
    match chain.len() {
        1 => Ok(inflection_single(&chain.specs()[0])),
        2 => inflection_pair_with(chain, tolerance),
        _ => Ok(inflection_scan_with(chain, grid_size, tolerance, Execution::default())),
    }
}

/// Closed-form inflection point of one exceedance function.
///
/// `F''` has the sign of `(m-1) - (k-1)p`, so there is exactly one interior
/// inflection point when `2 <= m <= k-1` and none otherwise.
pub fn inflection_single(spec: &ExceedanceSpec) -> InflectionReport {
    InflectionReport {
        points: spec.inflection_point().into_iter().collect(),
        touch_points: Vec::new(),
        method: InflectionMethod::ClosedForm,
        grid_size: 1,
        tolerance: DEFAULT_TOLERANCE,
    }
}

pub fn inflection_pair(chain: &Chain) -> Result<InflectionReport> {
    inflection_pair_with(chain, DEFAULT_TOLERANCE)
}

/// Two-stage inflection point by bracketing and bisection.
///
/// For `w_1 ∘ w_2` the statistic `S` splits into a strictly decreasing
/// part `r_1(w_2(p)) w_2'(p)` minus the strictly increasing
/// `(k_2-m_2)/(1-p) - (m_2-1)/p`, so `S` has at most one sign change.
pub fn inflection_pair_with(chain: &Chain, tolerance: f64) -> Result<InflectionReport> {
    if chain.len() != 2 {
        return Err(Error::Usage(format!(
            "inflection_pair needs a chain of exactly 2 stages, got {}",
            chain.len()
        )));
    }
    let found = scan_curvature(chain, PAIR_BRACKET_GRID, tolerance, Execution::Sequential);
    debug_assert!(found.points.len() <= 1, "{chain}: {:?}", found.points);
    Ok(InflectionReport {
        points: found.points,
        touch_points: found.touch_points,
        method: InflectionMethod::MonotoneBisection,
        grid_size: PAIR_BRACKET_GRID,
        tolerance,
    })
}

pub fn inflection_scan(chain: &Chain, grid_size: usize) -> InflectionReport {
    inflection_scan_with(chain, grid_size, DEFAULT_TOLERANCE, Execution::default())
}

/// Dense sign scan of `S` over `[1e-9, 1 - 1e-9]` with no uniqueness
/// assumption. Every sign change is refined to `tolerance`.
pub fn inflection_scan_with(
    chain: &Chain,
    grid_size: usize,
    tolerance: f64,
    exec: Execution,
) -> InflectionReport {
    let found = scan_curvature(chain, grid_size, tolerance, exec);
    InflectionReport {
        points: found.points,
        touch_points: found.touch_points,
        method: InflectionMethod::ScanRefine,
        grid_size,
        tolerance,
    }
}

fn scan_curvature(chain: &Chain, grid_size: usize, tolerance: f64, exec: Execution) -> scan::SignScan {
    if chain.is_identity() {
        return scan::SignScan::default();
    }
    scan::scan_sign_changes(
        |p| chain.curvature_stat_unchecked(p),
        DEFAULT_MARGIN,
        1.0 - DEFAULT_MARGIN,
        grid_size,
        tolerance,
        exec,
    )
}

/// `H(p) = F(p) - p`.
fn fixed_point_gap(chain: &Chain, p: f64) -> f64 {
    chain.eval(UnitInterval::saturating(p)).get() - p
}

/// All sign changes of `F(p) - p` on a grid, each refined to floating-point
/// resolution.
pub fn fixed_point_scan(chain: &Chain, grid_size: usize, exec: Execution) -> Vec<f64> {
    if chain.is_identity() {
        return Vec::new();
    }
    scan::scan_sign_changes(
        |p| fixed_point_gap(chain, p),
        DEFAULT_MARGIN,
        1.0 - DEFAULT_MARGIN,
        grid_size,
        0.0,
        exec,
    )
    .points
}

/// Interior fixed point of a chain, plus what theory guarantees about it.
///
/// `exactly_one` is claimed only for chains of one or two stages where some
/// stage has `2 <= m <= k-1`: then `F'(0) = F'(1) = 0`, which forces an
/// interior crossing, and a single inflection point allows at most one.
/// Longer chains get `at_most_one` whether or not a point is found.
pub fn fixed_point(chain: &Chain) -> FixedPointReport {
    let guarantee = if chain.len() <= 2 && chain.has_flat_endpoint_stage() {
        Guarantee::ExactlyOne
    } else {
        Guarantee::AtMostOne
    };
    let point = fixed_point_scan(chain, FIXED_POINT_GRID, Execution::Sequential)
        .into_iter()
        .map(|p| polish_fixed_point(chain, p))
        .find(|&p| p > 0.0 && p < 1.0 && fixed_point_gap(chain, p).abs() <= FIXED_POINT_TOLERANCE);
    debug_assert!(guarantee == Guarantee::AtMostOne || point.is_some(), "{chain}");
    FixedPointReport { point, guarantee, tolerance: FIXED_POINT_TOLERANCE }
}

/// Picks the representable neighbour with the smallest residual.
fn polish_fixed_point(chain: &Chain, p: f64) -> f64 {
    let mut best = p;
    let mut best_gap = fixed_point_gap(chain, p).abs();
    let mut x = p;
    for _ in 0..4 {
        x = x.next_down();
        let g = fixed_point_gap(chain, x).abs();
        if g < best_gap {
            best = x;
            best_gap = g;
        }
    }
    x = p;
    for _ in 0..4 {
        x = x.next_up();
        let g = fixed_point_gap(chain, x).abs();
        if g < best_gap {
            best = x;
            best_gap = g;
        }
    }
    best
}

/// Solves `p1 = F_{k2,m2}(p2)`, `p2 = F_{k1,m1}(p1)` for an interior pair.
///
/// `p1` is a fixed point of `F_{k2,m2} ∘ F_{k1,m1}`; `p2` follows by
/// substitution.
pub fn coin_pair_solve(
    spec1: ExceedanceSpec,
    spec2: ExceedanceSpec,
) -> Option<(UnitInterval, UnitInterval)> {
    let chain = Chain::new(vec![spec2, spec1]).expect("two stages");
    let p1 = UnitInterval::new(fixed_point(&chain).point?).ok()?;
    let p2 = spec1.eval(p1);
    Some((p1, p2))
}

/// Full report for the CLI.
pub fn analyze(chain: &Chain, grid_size: usize, tolerance: f64) -> Result<AnalysisReport> {
    let inflection = inflections(chain, grid_size, tolerance)?;
    Ok(AnalysisReport::new(chain.clone(), inflection, fixed_point(chain)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain(pairs: &[(u32, u32)]) -> Chain {
        Chain::from_pairs(pairs).unwrap()
    }

    fn spec(k: u32, m: u32) -> ExceedanceSpec {
        ExceedanceSpec::new(k, m).unwrap()
    }

    #[test]
    fn single_examples() {
        assert_eq!(inflection_single(&spec(6, 3)).points, vec![0.4]);
        assert!(inflection_single(&spec(5, 1)).points.is_empty());
        assert_eq!(inflection_single(&spec(7, 4)).points, vec![0.5]);
        assert!(inflection_single(&spec(5, 5)).points.is_empty());
        assert!(inflection_single(&spec(1, 1)).points.is_empty());
        assert_eq!(inflection_single(&spec(6, 3)).method, InflectionMethod::ClosedForm);
    }

    #[test]
    fn pair_with_identity_outer_reduces_to_single() {
        let r = inflection_pair(&chain(&[(1, 1), (6, 3)])).unwrap();
        assert_eq!(r.points.len(), 1);
        assert!((r.points[0] - 0.4).abs() < 1e-12);
        assert_eq!(r.method, InflectionMethod::MonotoneBisection);
    }

    #[test]
    fn pair_rejects_wrong_length() {
        assert!(matches!(inflection_pair(&chain(&[(6, 3)])), Err(Error::Usage(_))));
        assert!(inflection_pair(&chain(&[(2, 1), (2, 1), (2, 1)])).is_err());
    }

    /// Reference count: sign changes of S on a dense grid, no refinement.
    fn dense_sign_changes(c: &Chain, n: usize) -> Vec<(f64, f64)> {
        let xs: Vec<f64> = scan::grid(1e-9, 1.0 - 1e-9, n).collect();
        let signs: Vec<f64> = xs.iter().map(|&p| c.curvature_stat_unchecked(p).signum()).collect();
        (1..n)
            .filter(|&i| signs[i] != signs[i - 1])
            .map(|i| (xs[i - 1], xs[i]))
            .collect()
    }

    #[test]
    fn pair_matches_dense_scan() {
        let c = chain(&[(3, 2), (4, 2)]);
        let r = inflection_pair(&c).unwrap();
        let dense = dense_sign_changes(&c, 1_000_000);
        assert_eq!(r.points.len(), 1);
        assert_eq!(dense.len(), 1);
        let (a, b) = dense[0];
        assert!(a - 1e-12 <= r.points[0] && r.points[0] <= b + 1e-12);

        let c = chain(&[(3, 1), (4, 4)]);
        let r = inflection_pair(&c).unwrap();
        let dense = dense_sign_changes(&c, 1_000_000);
        assert_eq!(r.points.len(), dense.len());
        assert!(r.points.len() <= 1);
    }

    #[test]
    fn scan_examples() {
        let r = inflection_scan(&chain(&[(6, 3)]), 10_000);
        assert_eq!(r.points.len(), 1);
        assert!((r.points[0] - 0.4).abs() < 1e-8);
        assert_eq!(r.method, InflectionMethod::ScanRefine);

        let c = chain(&[(3, 2), (4, 2)]);
        let scanned = inflection_scan(&c, 10_000);
        let paired = inflection_pair(&c).unwrap();
        assert_eq!(scanned.points.len(), paired.points.len());
        assert!((scanned.points[0] - paired.points[0]).abs() < 1e-8);

        let r = inflection_scan(&chain(&[(3, 2), (4, 3), (5, 2)]), 100_000);
        assert!(r.points.len() <= 1, "{:?}", r.points);
    }

    #[test]
    fn identity_chain_has_no_inflection() {
        let r = inflection_scan(&chain(&[(1, 1), (1, 1), (1, 1)]), 1000);
        assert!(r.points.is_empty() && r.touch_points.is_empty());
    }

    #[test]
    fn fixed_point_examples() {
        let r = fixed_point(&chain(&[(3, 2)]));
        assert!((r.point.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.guarantee, Guarantee::ExactlyOne);

        let r = fixed_point(&chain(&[(2, 1)]));
        assert_eq!(r.point, None);
        assert_eq!(r.guarantee, Guarantee::AtMostOne);

        let r = fixed_point(&chain(&[(3, 2), (3, 2)]));
        assert!((r.point.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(r.guarantee, Guarantee::ExactlyOne);
    }

    #[test]
    fn long_chains_never_claim_exactly_one() {
        let r = fixed_point(&chain(&[(3, 2), (3, 2), (3, 2)]));
        assert!(r.point.is_some());
        assert_eq!(r.guarantee, Guarantee::AtMostOne);
        let r = fixed_point(&chain(&[(2, 1), (2, 2)]));
        assert_eq!(r.guarantee, Guarantee::AtMostOne);
    }

    #[test]
    fn fixed_point_residual() {
        for pairs in [[(4, 2), (5, 3)], [(10, 1), (2, 2)], [(7, 7), (9, 3)]] {
            let c = chain(&pairs);
            let p = fixed_point(&c).point.unwrap();
            assert!((c.eval(UnitInterval::new(p).unwrap()).get() - p).abs() <= 1e-12);
        }
    }

    #[test]
    fn coin_examples() {
        let (p1, p2) = coin_pair_solve(spec(3, 2), spec(3, 2)).unwrap();
        assert!((p1.get() - 0.5).abs() < 1e-15 && (p2.get() - 0.5).abs() < 1e-15);

        let (p1, p2) = coin_pair_solve(spec(1, 1), spec(3, 2)).unwrap();
        assert!((p1.get() - 0.5).abs() < 1e-12 && (p2.get() - 0.5).abs() < 1e-12);

        let (s1, s2) = (spec(4, 2), spec(5, 3));
        let (p1, p2) = coin_pair_solve(s1, s2).unwrap();
        assert!((s2.eval(p2).get() - p1.get()).abs() <= 1e-12);
        assert!((s1.eval(p1).get() - p2.get()).abs() <= 1e-12);
    }

    #[test]
    fn coin_pair_without_solution() {
        assert_eq!(coin_pair_solve(spec(2, 1), spec(3, 1)), None);
    }

    #[test]
    fn report_json_shape() {
        let r = analyze(&chain(&[(6, 3)]), 10_000, 1e-12).unwrap();
        let v: serde_json::Value = serde_json::to_value(&r).unwrap();
        assert_eq!(v["chain"], serde_json::json!([[6, 3]]));
        assert_eq!(v["inflections"][0].as_f64(), Some(0.4));
        assert_eq!(v["method"], "closed_form");
        assert_eq!(v["guarantee"], "exactly_one");
        assert!(v["touch_points"].as_array().unwrap().is_empty());
    }
}
