//! Binomial exceedance functions `F_{k,m}(p) = Pr(Binomial(k, p) >= m)` and
//! their compositions.
//!
//! The crate evaluates exceedance functions and their derivatives in closed
//! form, composes them into chains, locates interior inflection points and
//! fixed points, and runs exhaustive searches over chains of three or more
//! stages looking for compositions with more than one inflection point.
//!
//! ```
//! use binexceed::{Chain, ExceedanceSpec, UnitInterval};
//!
//! let spec = ExceedanceSpec::new(6, 3).unwrap();
//! assert_eq!(spec.inflection_point(), Some(0.4));
//!
//! let chain: Chain = "[[3,2],[4,2]]".parse().unwrap();
//! let p = UnitInterval::new(0.3).unwrap();
//! assert!(chain.eval(p).get() < 0.3);
//! ```

pub mod analysis;
pub mod chain;
pub mod cli;
mod error;
pub mod exceedance;
pub mod numfmt;
pub mod oracle;
pub mod par;
pub mod plot;
pub mod scan;
pub mod search;

pub use analysis::{
    coin_pair_solve, fixed_point, inflection_pair, inflection_scan, inflection_single,
    AnalysisReport, FixedPointReport, Guarantee, InflectionMethod, InflectionReport,
};
pub use chain::{Chain, ChainEvaluation};
pub use error::{Error, Result};
pub use exceedance::{ExceedanceSpec, UnitInterval};
pub use par::Execution;
