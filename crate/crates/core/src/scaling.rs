//! Wall-clock scaling of cascade sampling.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::depth::TreeDepth;
use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::sampler::cascade_sample_into;
use crate::stats::{log_log_fit, LinearFit};

pub const SCALING_MAX_DEPTH: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub k: u32,
    pub n: usize,
    /// Best of the repeats.
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Fit of `log(seconds)` against `log(n)`.
    pub fit: LinearFit,
}

impl ScalingReport {
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }
}

/// Times one full-tree sample for each depth in `k_min..=k_max`.
pub fn run_scaling(k_min: u32, k_max: u32, repeats: usize, seed: u64) -> Result<ScalingReport> {
    if k_min > k_max || k_max > SCALING_MAX_DEPTH || k_max < k_min + 1 {
        return Err(Error::InvalidParameter(format!(
            "depth range {k_min}..={k_max} must span at least two depths within 0..={SCALING_MAX_DEPTH}"
        )));
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be positive".into()));
    }
    let mut rng = SeededRng::new(seed);
    let mut buf: Vec<f64> = Vec::new();
    let mut rows = Vec::new();
    for k in k_min..=k_max {
        let depth = TreeDepth::new(k)?;
        // warm the allocation so timings cover sampling only
        cascade_sample_into(depth, 1.0, &mut rng, &mut buf)?;
        let mut best = f64::INFINITY;
        for _ in 0..repeats {
            let t = Instant::now();
            cascade_sample_into(depth, 1.0, &mut rng, &mut buf)?;
            std::hint::black_box(&buf);
            best = best.min(t.elapsed().as_secs_f64());
        }
        rows.push(ScalingRow {
            k,
            n: depth.leaves(),
            seconds: best.max(1e-9),
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    let fit = log_log_fit(&xs, &ys);
    Ok(ScalingReport { rows, fit })
}
