//! Monte Carlo sampling of the pointer model with deterministic chunked
//! parallelism.
//!
//! Every event consumes a fixed layout of seven random draws, so the sample
//! stream for a given `(seed, chunk)` pair never depends on branch outcomes.
//! Chunk accumulators are folded in ascending chunk order, which makes a run
//! bit-identical across repeats and thread counts for the same
//! `(params, n_events, seed, n_chunks)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Event, ModelParams, Path, Tail};
use crate::rng::StreamRng;
use crate::stats::{Estimate, Welford};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub n_events: u64,
    pub seed: u64,
    pub n_chunks: u64,
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("n_events must be positive")]
    NoEvents,
    #[error("n_chunks must be positive")]
    NoChunks,
    #[error("n_chunks must not exceed n_events")]
    TooManyChunks,
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.n_events == 0 {
            return Err(ConfigError::NoEvents);
        }
        if self.n_chunks == 0 {
            return Err(ConfigError::NoChunks);
        }
        if self.n_chunks > self.n_events {
            return Err(ConfigError::TooManyChunks);
        }
        Ok(())
    }
}

/// Draws one event. The draw order is part of the determinism contract:
/// path, tail, x0/y0 pair, cat-noise coin, tail-noise coin, keep coin.
pub fn sample_event(rng: &mut StreamRng, params: &ModelParams) -> Event {
    let path = if rng.next_bool(0.5) {
        Path::Left
    } else {
        Path::Right
    };
    let tail = if rng.next_bool(0.5) {
        Tail::Up
    } else {
        Tail::Down
    };
    let (gx, gy) = rng.next_normal_pair();
    let x0 = params.big_delta * gx;
    let y0 = params.big_delta * gy;
    // Detectors see the final pointer values, so displace before drawing
    // the noise coins; assemble re-derives the same displacement from
    // (x0, y0).
    let (x, y) = crate::model::displaced(path, tail, x0, y0);
    let noise_c = rng.next_bool(crate::model::noise_prob_cat(params, x));
    let noise_t = rng.next_bool(crate::model::noise_prob_tail(params, y));
    let keep_if_silent = rng.next_bool(params.p);
    Event::assemble(path, tail, x0, y0, noise_c, noise_t, keep_if_silent)
}

/// Per-chunk accumulators for both post-selection classes.
#[derive(Debug, Clone, Copy, Default)]
struct ChunkStats {
    kept_x: Welford,
    kept_y: Welford,
    kept_xy: Welford,
    rej_x: Welford,
    rej_y: Welford,
    rej_xy: Welford,
}

impl ChunkStats {
    fn push(&mut self, ev: &Event) {
        if ev.b {
            self.kept_x.push(ev.x);
            self.kept_y.push(ev.y);
            self.kept_xy.push(ev.x * ev.y);
        } else {
            self.rej_x.push(ev.x);
            self.rej_y.push(ev.y);
            self.rej_xy.push(ev.x * ev.y);
        }
    }

    fn merge(self, other: ChunkStats) -> ChunkStats {
        ChunkStats {
            kept_x: self.kept_x.merge(other.kept_x),
            kept_y: self.kept_y.merge(other.kept_y),
            kept_xy: self.kept_xy.merge(other.kept_xy),
            rej_x: self.rej_x.merge(other.rej_x),
            rej_y: self.rej_y.merge(other.rej_y),
            rej_xy: self.rej_xy.merge(other.rej_xy),
        }
    }
}

/// Estimator battery from one run. Conditioned estimates are `None` when the
/// corresponding class holds fewer than two events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateSet {
    pub n_events: u64,
    pub n_kept: u64,
    pub n_rejected: u64,
    pub prob_b_hat: Estimate,
    pub mean_x_b: Option<Estimate>,
    pub mean_y_b: Option<Estimate>,
    pub crossmoment_b: Option<Estimate>,
    pub mean_x_not_b: Option<Estimate>,
    pub mean_y_not_b: Option<Estimate>,
    pub crossmoment_not_b: Option<Estimate>,
    pub mean_x_all: Option<Estimate>,
    pub mean_y_all: Option<Estimate>,
    pub crossmoment_all: Option<Estimate>,
    pub signed_crossmoment: Option<Estimate>,
}

/// Difference of the kept and rejected cross-moments. Its standard error
/// combines the two independent class errors in quadrature.
fn signed_cross_moment(kept: Option<Estimate>, rejected: Option<Estimate>) -> Option<Estimate> {
    let k = kept?;
    let r = rejected?;
    Some(Estimate {
        value: k.value - r.value,
        std_error: (k.std_error * k.std_error + r.std_error * r.std_error).sqrt(),
        count: k.count + r.count,
    })
}

fn chunk_bounds(n_events: u64, n_chunks: u64, chunk: u64) -> u64 {
    // Spreads the remainder over the leading chunks: sizes differ by at most one.
    let base = n_events / n_chunks;
    let extra = n_events % n_chunks;
    base + u64::from(chunk < extra)
}

fn run_chunk(params: &ModelParams, seed: u64, chunk: u64, len: u64) -> ChunkStats {
    let mut rng = StreamRng::for_chunk(seed, chunk);
    let mut stats = ChunkStats::default();
    for _ in 0..len {
        stats.push(&sample_event(&mut rng, params));
    }
    stats
}

/// Runs the full sample and reduces to estimates. Chunks execute in
/// parallel; the reduction is a sequential fold in ascending chunk order so
/// the result does not depend on scheduling.
pub fn run(params: &ModelParams, config: &SimConfig) -> Result<EstimateSet, ConfigError> {
    config.validate()?;
    let totals = (0..config.n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let len = chunk_bounds(config.n_events, config.n_chunks, chunk);
            run_chunk(params, config.seed, chunk, len)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(ChunkStats::default(), ChunkStats::merge);

    let n_kept = totals.kept_x.count();
    let n_rejected = totals.rej_x.count();
    let n = config.n_events as f64;
    let phat = n_kept as f64 / n;
    let prob_b_hat = Estimate {
        value: phat,
        std_error: (phat * (1.0 - phat) / n).sqrt(),
        count: config.n_events,
    };

    let all_x = totals.kept_x.merge(totals.rej_x);
    let all_y = totals.kept_y.merge(totals.rej_y);
    let all_xy = totals.kept_xy.merge(totals.rej_xy);
    let crossmoment_b = totals.kept_xy.estimate();
    let crossmoment_not_b = totals.rej_xy.estimate();

    Ok(EstimateSet {
        n_events: config.n_events,
        n_kept,
        n_rejected,
        prob_b_hat,
        mean_x_b: totals.kept_x.estimate(),
        mean_y_b: totals.kept_y.estimate(),
        crossmoment_b,
        mean_x_not_b: totals.rej_x.estimate(),
        mean_y_not_b: totals.rej_y.estimate(),
        crossmoment_not_b,
        mean_x_all: all_x.estimate(),
        mean_y_all: all_y.estimate(),
        crossmoment_all: all_xy.estimate(),
        signed_crossmoment: signed_cross_moment(crossmoment_b, crossmoment_not_b),
    })
}

/// Warns when the expected kept count is too small to resolve conditional
/// means whose spread scales with the preparation width.
pub fn weak_signal_advice(params: &ModelParams, config: &SimConfig) -> Option<String> {
    let expected_kept = config.n_events as f64 * crate::analytic::postselect_prob_approx(params);
    let needed = 100.0 * params.big_delta * params.big_delta;
    (expected_kept < needed).then(|| {
        format!(
            "expected kept count {expected_kept:.1} is below {needed:.0} \
             (100 * Delta^2); conditional means will be noisy"
        )
    })
}
