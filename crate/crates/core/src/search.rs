//! Searches for compositions with more than one interior inflection point.
//!
//! Two parts:
//!
//! * The cubic pair `g_1(p) = 4(p - 1/2)^3 + 1/2`,
//!   `g_2(p) = (64/28)(p - 3/4)^3 + 27/28`. Each has one inflection point,
//!   but `g_1 ∘ g_2` has three, so single-inflection is not preserved by
//!   composition in general.
//! * An exhaustive scan over exceedance chains of `n >= 3` stages with
//!   `k <= k_max`, flagging any chain with two or more certified
//!   inflection points. Candidates are re-scanned at ten times the grid
//!   density before being reported.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::analysis::inflection_scan_with;
use crate::chain::Chain;
use crate::error::{Error, Result};
use crate::exceedance::{ExceedanceSpec, UnitInterval};
use crate::numfmt;
use crate::par::Execution;
use crate::scan::{scan_sign_changes, DEFAULT_MARGIN, DEFAULT_TOLERANCE};

/// Confirmed roots of a violation must be at least this far apart.
pub const MIN_ROOT_SEPARATION: f64 = 1e-9;

/// Density multiplier for re-verifying a candidate violation.
pub const VERIFY_FACTOR: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cubic {
    G1,
    G2,
}

impl Cubic {
    /// Written over a common denominator so that `g(0) = 0` and `g(1) = 1`
    /// come out exactly in floating point.
    pub fn eval(self, p: UnitInterval) -> UnitInterval {
        let p = p.get();
        let v = match self {
            Cubic::G1 => 4.0 * (p - 0.5).powi(3) + 0.5,
            Cubic::G2 => (64.0 * (p - 0.75).powi(3) + 27.0) / 28.0,
        };
        UnitInterval::saturating(v)
    }

    pub fn deriv1(self, p: f64) -> f64 {
        match self {
            Cubic::G1 => 12.0 * (p - 0.5).powi(2),
            Cubic::G2 => 192.0 / 28.0 * (p - 0.75).powi(2),
        }
    }

    pub fn deriv2(self, p: f64) -> f64 {
        match self {
            Cubic::G1 => 24.0 * (p - 0.5),
            Cubic::G2 => 384.0 / 28.0 * (p - 0.75),
        }
    }

    pub fn inflection_point(self) -> f64 {
        match self {
            Cubic::G1 => 0.5,
            Cubic::G2 => 0.75,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Cubic::G1 => "g1",
            Cubic::G2 => "g2",
        }
    }
}

pub fn cubic_eval(which: Cubic, p: UnitInterval) -> UnitInterval {
    which.eval(p)
}

/// `g_1(g_2(p))`.
pub fn cubic_composition(p: UnitInterval) -> UnitInterval {
    Cubic::G1.eval(Cubic::G2.eval(p))
}

/// `(g_1 ∘ g_2)'' = g_1''(g_2) g_2'^2 + g_1'(g_2) g_2''`.
pub fn cubic_composition_deriv2(p: f64) -> f64 {
    let x = Cubic::G2.eval(UnitInterval::saturating(p)).get();
    let d = Cubic::G2.deriv1(p);
    Cubic::G1.deriv2(x) * d * d + Cubic::G1.deriv1(x) * Cubic::G2.deriv2(p)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CubicScan {
    pub label: &'static str,
    pub inflection_count: usize,
    #[serde(serialize_with = "numfmt::ser_vec_f64")]
    pub points: Vec<f64>,
    pub grid_size: usize,
}

fn cubic_scan<F: Fn(f64) -> f64 + Sync + Send>(label: &'static str, f: F, grid_size: usize) -> CubicScan {
    let found = scan_sign_changes(
        f,
        DEFAULT_MARGIN,
        1.0 - DEFAULT_MARGIN,
        grid_size,
        DEFAULT_TOLERANCE,
        Execution::default(),
    );
    CubicScan { label, inflection_count: found.points.len(), points: found.points, grid_size }
}

/// Inflection points of one cubic, found by the same scan used for chains.
pub fn cubic_inflections(which: Cubic, grid_size: usize) -> CubicScan {
    cubic_scan(which.label(), move |p| which.deriv2(p), grid_size)
}

/// Inflection points of `g_1 ∘ g_2` from its analytic second derivative.
pub fn cubic_composition_inflections(grid_size: usize) -> CubicScan {
    cubic_scan("g1(g2)", cubic_composition_deriv2, grid_size)
}

/// One chain's scan outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub chain: Chain,
    #[serde(skip)]
    pub inflection_count: usize,
    #[serde(serialize_with = "numfmt::ser_vec_f64")]
    pub points: Vec<f64>,
    pub grid_size: usize,
}

impl ScanResult {
    fn new(chain: Chain, points: Vec<f64>, grid_size: usize) -> Self {
        ScanResult { chain, inflection_count: points.len(), points, grid_size }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub n: usize,
    pub k_max: u32,
    pub grid_size: usize,
    pub total_chains: u64,
    pub chains_scanned: u64,
    pub violations: Vec<ScanResult>,
    /// Candidates with two or more sign changes that failed re-verification.
    pub rejected_candidates: u64,
    pub max_count_observed: usize,
    pub truncated: bool,
    /// Enumeration index to resume from when `truncated`.
    pub cursor: Option<u64>,
    #[serde(serialize_with = "numfmt::ser_f64")]
    pub wall_time_s: f64,
}

impl SearchReport {
    /// Report JSON without the wall-clock field; identical inputs give
    /// identical payloads.
    pub fn payload_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("wall_time_s");
        serde_json::to_string(&v).unwrap()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub n: usize,
    pub k_max: u32,
    pub grid_size: usize,
    /// First enumeration index to scan.
    pub start: u64,
    /// Stop after this many chains; the report is then marked truncated.
    pub max_chains: Option<u64>,
    pub exec: Execution,
}

impl ScanConfig {
    pub fn new(n: usize, k_max: u32, grid_size: usize) -> Self {
        ScanConfig { n, k_max, grid_size, start: 0, max_chains: None, exec: Execution::default() }
    }
}

/// Lexicographic enumeration of all chains of length `n` over `alphabet`.
pub struct ChainSpace {
    alphabet: Vec<ExceedanceSpec>,
    n: usize,
    total: u64,
}

impl ChainSpace {
    pub fn new(n: usize, k_max: u32) -> Result<Self> {
        let alphabet = ExceedanceSpec::all_up_to(k_max);
        let total = (alphabet.len() as u64)
            .checked_pow(n as u32)
            .ok_or_else(|| Error::Usage(format!("{}^{n} chains overflows the enumeration index", alphabet.len())))?;
        Ok(ChainSpace { alphabet, n, total })
    }

    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    /// Chain at enumeration index `index`; stage 1 is the most significant digit.
    pub fn chain_at(&self, mut index: u64) -> Chain {
        let base = self.alphabet.len() as u64;
        let mut specs = vec![self.alphabet[0]; self.n];
        for slot in specs.iter_mut().rev() {
            *slot = self.alphabet[(index % base) as usize];
            index /= base;
        }
        Chain::new(specs).expect("n >= 1")
    }
}

enum Outcome {
    Clean(usize),
    Rejected,
    Confirmed(ScanResult),
}

fn scan_one(chain: Chain, grid_size: usize) -> Outcome {
    let first = inflection_scan_with(&chain, grid_size, DEFAULT_TOLERANCE, Execution::Sequential);
    let count = first.points.len();
    if count < 2 {
        return Outcome::Clean(count);
    }
    let fine_grid = grid_size * VERIFY_FACTOR;
    let fine = inflection_scan_with(&chain, fine_grid, DEFAULT_TOLERANCE, Execution::Sequential);
    let separated = fine.points.windows(2).all(|w| w[1] - w[0] >= MIN_ROOT_SEPARATION);
    if fine.points.len() >= 2 && separated {
        Outcome::Confirmed(ScanResult::new(chain, fine.points, fine_grid))
    } else {
        Outcome::Rejected
    }
}

/// Asserts that every two-stage chain over the alphabet has at most one
/// inflection point at this grid size.
pub fn check_two_stage(k_max: u32, grid_size: usize, exec: Execution) -> Result<()> {
    let space = ChainSpace::new(2, k_max)?;
    let counts = exec.map_indexed(space.len() as usize, |i| {
        let chain = space.chain_at(i as u64);
        let r = inflection_scan_with(&chain, grid_size, DEFAULT_TOLERANCE, Execution::Sequential);
        (chain, r.points.len())
    });
    match counts.into_iter().find(|(_, c)| *c > 1) {
        Some((chain, count)) => Err(Error::TwoStageViolation { chain: chain.to_string(), count }),
        None => Ok(()),
    }
}

/// Exhaustive scan over chains of length `n >= 3` with `k <= k_max`.
pub fn conjecture_scan(cfg: &ScanConfig) -> Result<SearchReport> {
    if cfg.n < 3 {
        return Err(Error::Usage(format!("conjecture scan needs n >= 3, got {}", cfg.n)));
    }
    if cfg.k_max < 1 {
        return Err(Error::Usage("k_max must be at least 1".into()));
    }
    if cfg.grid_size < 2 {
        return Err(Error::Usage("grid size must be at least 2".into()));
    }
    let started = Instant::now();
    let space = ChainSpace::new(cfg.n, cfg.k_max)?;
    if cfg.start > space.len() {
        return Err(Error::Usage(format!("cursor {} past end {}", cfg.start, space.len())));
    }
    check_two_stage(cfg.k_max, cfg.grid_size, cfg.exec)?;

    let end = match cfg.max_chains {
        Some(cap) => space.len().min(cfg.start.saturating_add(cap)),
        None => space.len(),
    };
    let outcomes = cfg.exec.map_indexed((end - cfg.start) as usize, |i| {
        scan_one(space.chain_at(cfg.start + i as u64), cfg.grid_size)
    });

    let mut violations = Vec::new();
    let mut rejected = 0;
    let mut max_count = 0;
    for o in outcomes {
        match o {
            Outcome::Clean(c) => max_count = max_count.max(c),
            Outcome::Rejected => {
                rejected += 1;
                max_count = max_count.max(1);
            }
            Outcome::Confirmed(r) => {
                max_count = max_count.max(r.inflection_count);
                violations.push(r);
            }
        }
    }
    violations.sort_by(|a, b| a.chain.cmp(&b.chain));
    let truncated = end < space.len();
    Ok(SearchReport {
        n: cfg.n,
        k_max: cfg.k_max,
        grid_size: cfg.grid_size,
        total_chains: space.len(),
        chains_scanned: end - cfg.start,
        violations,
        rejected_candidates: rejected,
        max_count_observed: max_count,
        truncated,
        cursor: truncated.then_some(end),
        wall_time_s: started.elapsed().as_secs_f64(),
    })
}

/// Continues a truncated report from its cursor and merges the results.
pub fn resume_scan(previous: &SearchReport, max_chains: Option<u64>, exec: Execution) -> Result<SearchReport> {
    let Some(cursor) = previous.cursor else {
        return Ok(previous.clone());
    };
    let cfg = ScanConfig {
        n: previous.n,
        k_max: previous.k_max,
        grid_size: previous.grid_size,
        start: cursor,
        max_chains,
        exec,
    };
    let next = conjecture_scan(&cfg)?;
    let mut violations = previous.violations.clone();
    for v in &mut violations {
        v.inflection_count = v.points.len();
    }
    violations.extend(next.violations);
    Ok(SearchReport {
        chains_scanned: previous.chains_scanned + next.chains_scanned,
        violations,
        rejected_candidates: previous.rejected_candidates + next.rejected_candidates,
        max_count_observed: previous.max_count_observed.max(next.max_count_observed),
        wall_time_s: previous.wall_time_s + next.wall_time_s,
        ..next
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn u(p: f64) -> UnitInterval {
        UnitInterval::new(p).unwrap()
    }

    #[test]
    fn cubic_values() {
        assert_eq!(cubic_eval(Cubic::G1, u(0.5)).get(), 0.5);
        assert_eq!(cubic_eval(Cubic::G2, u(0.75)).get(), 27.0 / 28.0);
        for c in [Cubic::G1, Cubic::G2] {
            assert_eq!(c.eval(UnitInterval::ZERO).get(), 0.0);
            assert_eq!(c.eval(UnitInterval::ONE).get(), 1.0);
        }
    }

    /// g(0) and g(1) in exact rational arithmetic: numerator/denominator pairs.
    #[test]
    fn cubic_boundaries_rational() {
        // g1(p) = 4 (p - 1/2)^3 + 1/2 ; p = 0 -> 4(-1/8) + 1/2 = 0 ; p = 1 -> 4/8 + 1/2 = 1
        let g1 = |p: i64| (4 * (2 * p - 1).pow(3) + 4, 8i64); // over 8
        assert_eq!(g1(0), (0, 8));
        assert_eq!(g1(1), (8, 8));
        // g2(p) = 64/28 (p - 3/4)^3 + 27/28 = ((4p - 3)^3 + 27) / 28
        let g2 = |p: i64| ((4 * p - 3).pow(3) + 27, 28i64);
        assert_eq!(g2(0), (0, 28));
        assert_eq!(g2(1), (28, 28));
    }

    #[test]
    fn cubic_derivatives_match_finite_differences() {
        let h = 1e-5;
        for &p in &[0.1, 0.3, 0.62, 0.75, 0.9] {
            for c in [Cubic::G1, Cubic::G2] {
                let f = |x: f64| c.eval(UnitInterval::saturating(x)).get();
                let d1 = (f(p + h) - f(p - h)) / (2.0 * h);
                assert!((d1 - c.deriv1(p)).abs() < 1e-8);
            }
            let f = |x: f64| cubic_composition(UnitInterval::saturating(x)).get();
            let hh = 1e-4;
            let d2 = (f(p + hh) - 2.0 * f(p) + f(p - hh)) / (hh * hh);
            let exact = cubic_composition_deriv2(p);
            assert!((d2 - exact).abs() < 1e-6 * exact.abs().max(1.0), "{p}: {d2} vs {exact}");
        }
    }

    #[test]
    fn composition_second_derivative_vanishes_at_inner_centre() {
        // g2' and g2'' are both zero at 3/4.
        assert_eq!(cubic_composition_deriv2(0.75), 0.0);
    }

    #[test]
    fn composition_is_nondecreasing() {
        for i in 0..1000 {
            let p = i as f64 / 999.0;
            let x = Cubic::G2.eval(u(p)).get();
            assert!(Cubic::G1.deriv1(x) * Cubic::G2.deriv1(p) >= 0.0);
        }
    }

    #[test]
    fn cubic_scans() {
        let g1 = cubic_inflections(Cubic::G1, 10_000);
        assert_eq!(g1.points.len(), 1);
        assert!((g1.points[0] - 0.5).abs() < 1e-8);
        let g2 = cubic_inflections(Cubic::G2, 10_000);
        assert_eq!(g2.points.len(), 1);
        assert!((g2.points[0] - 0.75).abs() < 1e-8);
        let comp = cubic_composition_inflections(100_000);
        assert_eq!(comp.inflection_count, 3);
        let expected = [0.162_166_328_069_810_63, 0.379_687_991_449_078_7, 0.75];
        for (got, want) in comp.points.iter().zip(expected) {
            assert!((got - want).abs() < 1e-9, "{got} vs {want}");
        }
    }

    #[test]
    fn chain_space_is_lexicographic() {
        let s = ChainSpace::new(3, 2).unwrap();
        assert_eq!(s.len(), 27);
        assert_eq!(s.chain_at(0).to_string(), "[[1,1],[1,1],[1,1]]");
        assert_eq!(s.chain_at(1).to_string(), "[[1,1],[1,1],[2,1]]");
        assert_eq!(s.chain_at(3).to_string(), "[[1,1],[2,1],[1,1]]");
        assert_eq!(s.chain_at(26).to_string(), "[[2,2],[2,2],[2,2]]");
        let all: Vec<Chain> = (0..s.len()).map(|i| s.chain_at(i)).collect();
        assert!(all.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn small_scan_has_no_violations() {
        let r = conjecture_scan(&ScanConfig::new(3, 2, 10_000)).unwrap();
        assert_eq!(r.total_chains, 27);
        assert!(r.violations.is_empty());
        assert!(r.max_count_observed <= 1);
        assert!(!r.truncated);
        assert_eq!(r.cursor, None);
    }

    #[test]
    fn identity_chains_have_no_inflections() {
        let r = conjecture_scan(&ScanConfig::new(3, 1, 10_000)).unwrap();
        assert_eq!(r.total_chains, 1);
        assert_eq!(r.max_count_observed, 0);
    }

    #[test]
    fn rejects_short_chains() {
        assert!(conjecture_scan(&ScanConfig::new(2, 3, 1000)).is_err());
    }

    #[test]
    fn truncation_and_resume_match_full_run() {
        let full = conjecture_scan(&ScanConfig::new(3, 3, 2000)).unwrap();
        let mut cfg = ScanConfig::new(3, 3, 2000);
        cfg.max_chains = Some(100);
        let part = conjecture_scan(&cfg).unwrap();
        assert!(part.truncated);
        assert_eq!(part.cursor, Some(100));
        let mut merged = part;
        while merged.truncated {
            merged = resume_scan(&merged, Some(50), Execution::Sequential).unwrap();
        }
        assert_eq!(merged.payload_json(), full.payload_json());
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let mut a = ScanConfig::new(3, 3, 2000);
        a.exec = Execution::Sequential;
        let mut b = a.clone();
        b.exec = Execution::Parallel;
        assert_eq!(
            conjecture_scan(&a).unwrap().payload_json(),
            conjecture_scan(&b).unwrap().payload_json()
        );
    }

    #[test]
    fn report_round_trips_through_json() {
        let mut cfg = ScanConfig::new(3, 2, 1000);
        cfg.max_chains = Some(5);
        let r = conjecture_scan(&cfg).unwrap();
        let back: SearchReport = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back.cursor, Some(5));
        assert_eq!(back.payload_json(), r.payload_json());
    }
}
