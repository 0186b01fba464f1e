//! Compositions `F = w_1 ∘ w_2 ∘ … ∘ w_n` of exceedance functions.
//!
//! The second derivative is never formed directly. Differentiating
//! `ln F' = Σ ln w_i'(x_i)` gives `F'' = F' · S` with
//!
//! ```text
//! S(p) = Σ_i r_i(x_i) · Π_{j>i} w_j'(x_j),   r_i(x) = (m_i-1)/x - (k_i-m_i)/(1-x)
//! ```
//!
//! where `x_i` is the input to stage `i` (`x_n = p`). Since `F' > 0` on
//! `(0, 1)`, `S` carries the sign of `F''`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exceedance::{ExceedanceSpec, UnitInterval, EXACT_BINOMIAL_MAX};

/// Interior points closer than this to 0 or 1 are rejected by operations
/// that need the curvature ratio (its poles sit at the endpoints).
pub const ENDPOINT_GUARD: f64 = 1e-12;

/// Linear-space quantities below this switch the curvature statistic to
/// the log-space path.
const LINEAR_FLOOR: f64 = 1e-200;

/// Ordered list of stages, outermost first. Serializes as `[[k, m], ...]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<ExceedanceSpec>", into = "Vec<ExceedanceSpec>")]
pub struct Chain {
    specs: Vec<ExceedanceSpec>,
}

impl TryFrom<Vec<ExceedanceSpec>> for Chain {
    type Error = Error;
    fn try_from(specs: Vec<ExceedanceSpec>) -> Result<Self> {
        Chain::new(specs)
    }
}

impl From<Chain> for Vec<ExceedanceSpec> {
    fn from(c: Chain) -> Self {
        c.specs
    }
}

impl FromStr for Chain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let pairs: Vec<(u32, u32)> =
            serde_json::from_str(s).map_err(|e| Error::ChainFormat(e.to_string()))?;
        let specs = pairs
            .into_iter()
            .map(|(k, m)| ExceedanceSpec::new(k, m))
            .collect::<Result<Vec<_>>>()?;
        Chain::new(specs)
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, s) in self.specs.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("]")
    }
}

impl From<ExceedanceSpec> for Chain {
    fn from(spec: ExceedanceSpec) -> Self {
        Chain { specs: vec![spec] }
    }
}

/// Everything known about a chain at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainEvaluation {
    pub p: UnitInterval,
    /// Input to each stage, outermost first; the last entry is `p`.
    pub stage_values: Vec<UnitInterval>,
    pub value: UnitInterval,
    pub deriv1: f64,
    /// `S(p)`; `None` where the statistic is undefined (near the endpoints).
    pub curvature_sign_stat: Option<f64>,
}

impl Chain {
    pub fn new(specs: Vec<ExceedanceSpec>) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::EmptyChain);
        }
        Ok(Chain { specs })
    }

    /// Convenience constructor from raw `(k, m)` pairs.
    pub fn from_pairs(pairs: &[(u32, u32)]) -> Result<Self> {
        let specs = pairs
            .iter()
            .map(|&(k, m)| ExceedanceSpec::new(k, m))
            .collect::<Result<Vec<_>>>()?;
        Chain::new(specs)
    }

    pub fn specs(&self) -> &[ExceedanceSpec] {
        &self.specs
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Stage inputs `x_1, …, x_n` (outermost first, `x_n = p`) and the output.
    fn stages(&self, p: UnitInterval) -> (Vec<UnitInterval>, UnitInterval) {
        let mut inputs = vec![p; self.specs.len()];
        let mut x = p;
        for (i, spec) in self.specs.iter().enumerate().rev() {
            inputs[i] = x;
            x = spec.eval(x);
        }
        (inputs, x)
    }

    /// `w_1(w_2(…w_n(p)…))`.
    pub fn eval(&self, p: UnitInterval) -> UnitInterval {
        self.specs.iter().rev().fold(p, |x, s| s.eval(x))
    }

    /// `F'(p) = Π_i w_i'(x_i)`, using endpoint limits at 0 and 1.
    ///
    /// Inside `(0, 1)` the stage complements `1 - x_i` are carried
    /// separately, so the product stays positive even where some `x_i`
    /// rounds to 1.
    pub fn deriv1(&self, p: UnitInterval) -> f64 {
        if p.is_interior() {
            return self.slope_product(p.get());
        }
        let (inputs, _) = self.stages(p);
        self.specs
            .iter()
            .zip(&inputs)
            .map(|(s, &x)| s.deriv1(x))
            .product()
    }

    fn slope_product(&self, p: f64) -> f64 {
        self.slope_product_linear(p)
            .unwrap_or_else(|| self.ln_slope_product(p).exp())
    }

    fn slope_product_linear(&self, p: f64) -> Option<f64> {
        let (mut x, mut y, mut prod) = (p, 1.0 - p, 1.0);
        for spec in self.specs.iter().rev() {
            if spec.k() > EXACT_BINOMIAL_MAX || x < LINEAR_FLOOR || y < LINEAR_FLOOR {
                return None;
            }
            let (up, lo, slope) = spec.stage_linear(x, y);
            (x, y, prod) = (up, lo, prod * slope);
        }
        (prod >= LINEAR_FLOOR && prod.is_finite()).then_some(prod)
    }

    fn ln_slope_product(&self, p: f64) -> f64 {
        let (mut ln_x, mut ln_y, mut ln_prod) = (p.ln(), (-p).ln_1p(), 0.0);
        for spec in self.specs.iter().rev() {
            let (ln_up, ln_lo, ln_slope) = spec.stage_log(ln_x, ln_y);
            (ln_x, ln_y, ln_prod) = (ln_up, ln_lo, ln_prod + ln_slope);
        }
        ln_prod
    }

    /// `ln F'(p)` on `(0, 1)`. Finite even where `F'` itself is below the
    /// smallest positive double, as happens for long chains near 1.
    pub fn ln_deriv1(&self, p: UnitInterval) -> Result<f64> {
        if !p.is_interior() {
            return Err(Error::Domain { op: "log slope", p: p.get() });
        }
        Ok(match self.slope_product_linear(p.get()) {
            Some(d) => d.ln(),
            None => self.ln_slope_product(p.get()),
        })
    }

    /// `S(p)`, which has the sign of `F''(p)`.
    ///
    /// The value may overflow to ±∞ very close to the endpoints; its sign
    /// stays correct.
    pub fn curvature_sign_stat(&self, p: UnitInterval) -> Result<f64> {
        let x = p.get();
        if !(ENDPOINT_GUARD..=1.0 - ENDPOINT_GUARD).contains(&x) {
            return Err(Error::Domain { op: "curvature statistic", p: x });
        }
        Ok(self.curvature_stat_unchecked(x))
    }

    /// `S(p)` for `p` already known to be well inside `(0, 1)`.
    pub(crate) fn curvature_stat_unchecked(&self, p: f64) -> f64 {
        match self.curvature_stat_linear(p) {
            Some(s) => s,
            None => self.curvature_stat_log(p),
        }
    }

    /// Fast path: stage values and complements carried in linear space.
    /// Gives up (returns `None`) if anything approaches underflow.
    fn curvature_stat_linear(&self, p: f64) -> Option<f64> {
        let mut x = p;
        let mut y = 1.0 - p;
        let mut suffix = 1.0; // Π_{j>i} w_j'(x_j)
        let mut stat = 0.0;
        for (i, spec) in self.specs.iter().enumerate().rev() {
            if spec.k() > EXACT_BINOMIAL_MAX || x < LINEAR_FLOOR || y < LINEAR_FLOOR {
                return None;
            }
            stat += spec.ratio_xy(x, y) * suffix;
            if i == 0 {
                break;
            }
            let (up, lo, slope) = spec.stage_linear(x, y);
            suffix *= slope;
            if !(suffix >= LINEAR_FLOOR) {
                return None;
            }
            x = up;
            y = lo;
        }
        stat.is_finite().then_some(stat)
    }

    /// Robust path: every quantity kept as a logarithm.
    fn curvature_stat_log(&self, p: f64) -> f64 {
        let mut ln_x = p.ln();
        let mut ln_y = (-p).ln_1p();
        let mut ln_suffix = 0.0;
        let mut pos = Vec::with_capacity(self.specs.len());
        let mut neg = Vec::with_capacity(self.specs.len());
        for (i, spec) in self.specs.iter().enumerate().rev() {
            let (k, m) = (spec.k(), spec.m());
            if m > 1 {
                pos.push(((m - 1) as f64).ln() - ln_x + ln_suffix);
            }
            if k > m {
                neg.push(((k - m) as f64).ln() - ln_y + ln_suffix);
            }
            if i == 0 {
                break;
            }
            let (ln_up, ln_lo, ln_slope) = spec.stage_log(ln_x, ln_y);
            ln_suffix += ln_slope;
            ln_x = ln_up;
            ln_y = ln_lo;
        }
        let scale = pos
            .iter()
            .chain(&neg)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if scale == f64::NEG_INFINITY {
            return 0.0;
        }
        let scaled: f64 = pos.iter().map(|v| (v - scale).exp()).sum::<f64>()
            - neg.iter().map(|v| (v - scale).exp()).sum::<f64>();
        if scaled == 0.0 {
            0.0
        } else {
            scaled * scale.exp()
        }
    }

    /// Full evaluation at one point, sharing the stage values.
    pub fn evaluate(&self, p: UnitInterval) -> ChainEvaluation {
        let (stage_values, value) = self.stages(p);
        let deriv1 = self.deriv1(p);
        ChainEvaluation {
            p,
            curvature_sign_stat: self.curvature_sign_stat(p).ok(),
            stage_values,
            value,
            deriv1,
        }
    }

    /// Whether the chain satisfies the two-stage fixed-point existence
    /// condition: some stage has `2 <= m <= k - 1`.
    pub fn has_flat_endpoint_stage(&self) -> bool {
        self.specs.iter().any(ExceedanceSpec::has_interior_inflection)
    }

    /// Whether every stage is the identity `F_{1,1}`.
    pub fn is_identity(&self) -> bool {
        self.specs.iter().all(ExceedanceSpec::is_identity)
    }

    /// Human-readable series label, e.g. `F_3_2(F_4_2)`.
    pub fn label(&self) -> String {
        let mut out = String::new();
        for s in &self.specs {
            out.push_str(&format!("F_{}_{}", s.k(), s.m()));
            out.push('(');
        }
        out.pop();
        for _ in 1..self.specs.len() {
            out.push(')');
        }
        out
    }
}
