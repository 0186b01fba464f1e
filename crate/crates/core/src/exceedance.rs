//! Single binomial exceedance functions `F_{k,m}(p) = Pr(X >= m)`,
//! `X ~ Binomial(k, p)`, with closed-form first and second derivatives.
//!
//! Binomial coefficients up to `k = 64` come from an exact, overflow-checked
//! Pascal table. Larger `k` is handled in log space.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `k` whose binomial coefficients are tabulated exactly as integers.
pub const EXACT_BINOMIAL_MAX: u32 = 64;

static PASCAL: LazyLock<Vec<Vec<u64>>> = LazyLock::new(|| {
    let n = EXACT_BINOMIAL_MAX as usize;
    let mut rows: Vec<Vec<u64>> = Vec::with_capacity(n + 1);
    rows.push(vec![1]);
    for i in 1..=n {
        let prev = &rows[i - 1];
        let mut row = vec![1u64; i + 1];
        for j in 1..i {
            row[j] = prev[j - 1]
                .checked_add(prev[j])
                .expect("binomial coefficient overflow below k = 64");
        }
        rows.push(row);
    }
    rows
});

/// Exact `C(n, r)` for `n <= 64`.
pub fn binomial_exact(n: u32, r: u32) -> Option<u64> {
    if n > EXACT_BINOMIAL_MAX || r > n {
        return None;
    }
    Some(PASCAL[n as usize][r as usize])
}

/// `ln C(n, r)`, summed over the shorter side.
pub fn ln_binomial(n: u32, r: u32) -> f64 {
    debug_assert!(r <= n);
    if let Some(c) = binomial_exact(n, r) {
        return (c as f64).ln();
    }
    let r = r.min(n - r);
    (1..=r)
        .map(|i| ((n - r + i) as f64 / i as f64).ln())
        .sum()
}

/// A probability value constrained to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct UnitInterval(f64);

impl UnitInterval {
    pub const ZERO: UnitInterval = UnitInterval(0.0);
    pub const ONE: UnitInterval = UnitInterval(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(UnitInterval(value))
        } else {
            Err(Error::NotAProbability(value))
        }
    }

    /// Clamps into `[0, 1]`; NaN maps to 0.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            UnitInterval(0.0)
        } else {
            UnitInterval(value.clamp(0.0, 1.0))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    pub fn is_interior(self) -> bool {
        self.0 > 0.0 && self.0 < 1.0
    }
}

impl TryFrom<f64> for UnitInterval {
    type Error = Error;
    fn try_from(value: f64) -> Result<Self> {
        UnitInterval::new(value)
    }
}

impl From<UnitInterval> for f64 {
    fn from(p: UnitInterval) -> f64 {
        p.0
    }
}

impl fmt::Display for UnitInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// The pair `(k, m)` defining `F_{k,m}`. Serializes as the JSON array `[k, m]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(u32, u32)", into = "(u32, u32)")]
pub struct ExceedanceSpec {
    k: u32,
    m: u32,
}

impl TryFrom<(u32, u32)> for ExceedanceSpec {
    type Error = Error;
    fn try_from((k, m): (u32, u32)) -> Result<Self> {
        ExceedanceSpec::new(k, m)
    }
}

impl From<ExceedanceSpec> for (u32, u32) {
    fn from(s: ExceedanceSpec) -> (u32, u32) {
        (s.k, s.m)
    }
}

impl fmt::Display for ExceedanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.k, self.m)
    }
}

impl FromStr for ExceedanceSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::ChainFormat(e.to_string()))
    }
}

impl ExceedanceSpec {
    pub fn new(k: u32, m: u32) -> Result<Self> {
        if k >= 1 && (1..=k).contains(&m) {
            Ok(ExceedanceSpec { k, m })
        } else {
            Err(Error::InvalidSpec { k, m })
        }
    }

    #[inline]
    pub fn k(&self) -> u32 {
        self.k
    }

    #[inline]
    pub fn m(&self) -> u32 {
        self.m
    }

    /// All valid specs with `k <= k_max`, in lexicographic `(k, m)` order.
    pub fn all_up_to(k_max: u32) -> Vec<ExceedanceSpec> {
        (1..=k_max)
            .flat_map(|k| (1..=k).map(move |m| ExceedanceSpec { k, m }))
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.k == 1
    }

    /// `2 <= m <= k - 1`: the function is convex-concave with a single
    /// interior inflection point, and has zero slope at both endpoints.
    pub fn has_interior_inflection(&self) -> bool {
        self.m >= 2 && self.m < self.k
    }

    /// The interior inflection point `(m - 1) / (k - 1)`, if there is one.
    pub fn inflection_point(&self) -> Option<f64> {
        self.has_interior_inflection()
            .then(|| (self.m - 1) as f64 / (self.k - 1) as f64)
    }

    /// `F_{k,m}(p)`.
    ///
    /// Sums whichever tail lies away from the bulk of the distribution, in
    /// ascending term order. Returns exactly 0 at `p = 0` and exactly 1 at
    /// `p = 1`.
    pub fn eval(&self, p: UnitInterval) -> UnitInterval {
        let p = p.get();
        if p == 0.0 {
            return UnitInterval::ZERO;
        }
        if p == 1.0 {
            return UnitInterval::ONE;
        }
        let (k, m) = (self.k, self.m);
        let q = 1.0 - p;
        let value = if m as f64 > k as f64 * p {
            // j >= m sits at or past the mode, so terms shrink as j grows.
            (m..=k).rev().map(|j| self.term(j, p, q)).sum::<f64>()
        } else {
            // j < m <= kp sits below the mode, so terms grow with j.
            1.0 - (0..m).map(|j| self.term(j, p, q)).sum::<f64>()
        };
        UnitInterval::saturating(value)
    }

    /// Binomial probability mass `C(k, j) p^j q^(k - j)`.
    fn term(&self, j: u32, p: f64, q: f64) -> f64 {
        let k = self.k;
        match binomial_exact(k, j) {
            Some(c) => c as f64 * p.powi(j as i32) * q.powi((k - j) as i32),
            None => (ln_binomial(k, j) + j as f64 * p.ln() + (k - j) as f64 * q.ln()).exp(),
        }
    }

    /// `k C(k-1, m-1)`, the leading constant of the derivative.
    fn slope_coefficient(&self) -> f64 {
        match binomial_exact(self.k - 1, self.m - 1) {
            Some(c) => self.k as f64 * c as f64,
            None => (ln_binomial(self.k - 1, self.m - 1) + (self.k as f64).ln()).exp(),
        }
    }

    fn ln_slope_coefficient(&self) -> f64 {
        (self.k as f64).ln() + ln_binomial(self.k - 1, self.m - 1)
    }

    /// `F'(p) = k C(k-1, m-1) p^(m-1) (1-p)^(k-m)`.
    ///
    /// At the endpoints this is the limit of the closed form: `k` when the
    /// vanishing factor has exponent zero (`m = 1` at 0, `m = k` at 1),
    /// otherwise 0.
    pub fn deriv1(&self, p: UnitInterval) -> f64 {
        let p = p.get();
        let (k, m) = (self.k, self.m);
        if p == 0.0 {
            return if m == 1 { k as f64 } else { 0.0 };
        }
        if p == 1.0 {
            return if m == k { k as f64 } else { 0.0 };
        }
        self.deriv1_interior(p, 1.0 - p)
    }

    #[inline]
    fn deriv1_interior(&self, p: f64, q: f64) -> f64 {
        let (k, m) = (self.k, self.m);
        if k <= EXACT_BINOMIAL_MAX + 1 {
            self.slope_coefficient() * p.powi((m - 1) as i32) * q.powi((k - m) as i32)
        } else {
            (self.ln_slope_coefficient() + (m - 1) as f64 * p.ln() + (k - m) as f64 * q.ln())
                .exp()
        }
    }

    /// `F''(p) = k C(k-1, m-1) p^(m-2) (1-p)^(k-m-1) ((m-1) - (k-1) p)` on `(0, 1)`.
    ///
    /// Its sign is exactly the sign of `(m-1) - (k-1) p`.
    pub fn deriv2(&self, p: UnitInterval) -> Result<f64> {
        let p = interior(p, "second derivative")?;
        let q = 1.0 - p;
        let (k, m) = (self.k, self.m);
        let factor = (m - 1) as f64 - (k - 1) as f64 * p;
        Ok(self.deriv1_interior(p, q) * factor / (p * q))
    }

    /// `F''(p) / F'(p) = (m-1)/p - (k-m)/(1-p)`, strictly decreasing on `(0, 1)`.
    pub fn log_curvature_ratio(&self, p: UnitInterval) -> Result<f64> {
        let p = interior(p, "curvature ratio")?;
        Ok(self.ratio_xy(p, 1.0 - p))
    }

    #[inline]
    pub(crate) fn ratio_xy(&self, x: f64, y: f64) -> f64 {
        (self.m - 1) as f64 / x - (self.k - self.m) as f64 / y
    }

    /// Linear-space stage update with the complement carried separately.
    ///
    /// Given `x` and `y = 1 - x` (both accurate), returns
    /// `(F(x), 1 - F(x), F'(x))`, each tail summed directly so neither
    /// loses relative precision. Only valid for `k <= 64`.
    #[inline]
    pub(crate) fn stage_linear(&self, x: f64, y: f64) -> (f64, f64, f64) {
        let (k, m) = (self.k as usize, self.m as usize);
        debug_assert!(k <= EXACT_BINOMIAL_MAX as usize);
        let row = &PASCAL[k];
        let mut xp = [1.0f64; EXACT_BINOMIAL_MAX as usize + 1];
        let mut yp = [1.0f64; EXACT_BINOMIAL_MAX as usize + 1];
        for j in 1..=k {
            xp[j] = xp[j - 1] * x;
            yp[j] = yp[j - 1] * y;
        }
        let mut lower = 0.0;
        for j in 0..m {
            lower += row[j] as f64 * xp[j] * yp[k - j];
        }
        let mut upper = 0.0;
        for j in (m..=k).rev() {
            upper += row[j] as f64 * xp[j] * yp[k - j];
        }
        let slope = self.slope_coefficient() * xp[m - 1] * yp[k - m];
        (upper, lower, slope)
    }

    /// Log-space stage update: from `(ln x, ln(1-x))` returns
    /// `(ln F(x), ln(1 - F(x)), ln F'(x))`. Never underflows.
    pub(crate) fn stage_log(&self, ln_x: f64, ln_y: f64) -> (f64, f64, f64) {
        let (k, m) = (self.k, self.m);
        let mut ln_c = 0.0; // ln C(k, 0)
        let mut terms = Vec::with_capacity(k as usize + 1);
        for j in 0..=k {
            if j > 0 {
                ln_c += ((k - j + 1) as f64 / j as f64).ln();
            }
            terms.push(ln_c + j as f64 * ln_x + (k - j) as f64 * ln_y);
        }
        let (lo, hi) = terms.split_at(m as usize);
        let ln_slope =
            self.ln_slope_coefficient() + (m - 1) as f64 * ln_x + (k - m) as f64 * ln_y;
        (log_sum_exp(hi), log_sum_exp(lo), ln_slope)
    }
}

pub(crate) fn log_sum_exp(v: &[f64]) -> f64 {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + v.iter().map(|t| (t - max).exp()).sum::<f64>().ln()
}

fn interior(p: UnitInterval, op: &'static str) -> Result<f64> {
    if p.is_interior() {
        Ok(p.get())
    } else {
        Err(Error::Domain { op, p: p.get() })
    }
}
