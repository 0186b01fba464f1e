//! Independent reference computations used to check the closed forms:
//! exhaustive outcome enumeration, seeded Monte Carlo sampling, and central
//! finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exceedance::{ExceedanceSpec, UnitInterval};
use crate::par::Execution;

/// Largest `k` accepted by [`enumerate_exceedance`].
pub const ENUMERATION_MAX_K: u32 = 20;

/// Name of the generator behind [`mc_exceedance`].
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Samples per independent Monte Carlo batch (one ChaCha stream each).
const MC_BATCH: u64 = 1 << 16;

/// Step sizes for central differences.
pub const FD_STEP_ORDER1: f64 = 1e-6;
pub const FD_STEP_ORDER2: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    pub rng: &'static str,
}

/// `Pr(X >= m)` by summing `p^heads (1-p)^tails` over all `2^k` sequences.
pub fn enumerate_exceedance(spec: ExceedanceSpec, p: UnitInterval) -> Result<UnitInterval> {
    let (k, m) = (spec.k(), spec.m());
    if k > ENUMERATION_MAX_K {
        return Err(Error::ResourceLimit { k, limit: ENUMERATION_MAX_K });
    }
    let p = p.get();
    let q = 1.0 - p;
    let total: f64 = (0u32..1 << k)
        .filter(|seq| seq.count_ones() >= m)
        .map(|seq| {
            let heads = seq.count_ones() as i32;
            p.powi(heads) * q.powi(k as i32 - heads)
        })
        .sum();
    Ok(UnitInterval::saturating(total))
}

/// Fraction of `samples` simulated experiments (each `k` Bernoulli(p)
/// draws) with at least `m` successes.
///
/// Sample `i` belongs to batch `i / 65536`, and each batch draws from its
/// own ChaCha8 stream keyed by `seed`, so the estimate does not depend on
/// how batches are scheduled across threads.
pub fn mc_exceedance(spec: ExceedanceSpec, p: UnitInterval, samples: u64, seed: u64) -> McEstimate {
    mc_exceedance_with(spec, p, samples, seed, Execution::default())
}

pub fn mc_exceedance_with(
    spec: ExceedanceSpec,
    p: UnitInterval,
    samples: u64,
    seed: u64,
    exec: Execution,
) -> McEstimate {
    let samples = samples.max(1);
    let batches = samples.div_ceil(MC_BATCH);
    let hits: u64 = exec
        .map_indexed(batches as usize, |b| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(b as u64);
            let n = MC_BATCH.min(samples - b as u64 * MC_BATCH);
            (0..n)
                .filter(|_| {
                    let successes = (0..spec.k()).filter(|_| rng.random::<f64>() < p.get()).count();
                    successes as u32 >= spec.m()
                })
                .count() as u64
        })
        .into_iter()
        .sum();
    let mean = hits as f64 / samples as f64;
    McEstimate {
        mean,
        std_error: (mean * (1.0 - mean) / samples as f64).sqrt(),
        samples,
        rng: RNG_ALGORITHM,
    }
}

/// Central difference of order 1 or 2 with step `h`. The stencil
/// `p ± order·h` must stay inside `[0, 1]`.
pub fn central_fd<F: Fn(f64) -> f64>(f: F, p: f64, order: u8, h: f64) -> Result<f64> {
    if !(h > 0.0) || !(1..=2).contains(&order) {
        return Err(Error::Usage(format!("central_fd needs h > 0 and order 1 or 2 (got {h}, {order})")));
    }
    let reach = order as f64 * h;
    if p - reach < 0.0 || p + reach > 1.0 {
        return Err(Error::Domain { op: "central finite difference stencil", p });
    }
    Ok(match order {
        1 => (f(p + h) - f(p - h)) / (2.0 * h),
        _ => (f(p + h) - 2.0 * f(p) + f(p - h)) / (h * h),
    })
}
