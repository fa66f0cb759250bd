//! Monte Carlo estimate of the spherical volume of `im φ` for the edge
//! complex of `C_m`, as a fraction of the PSD matrices with the cycle
//! pattern.
//!
//! A sample is a direction with i.i.d. standard normal coordinates on the
//! `2m` free entries (the diagonal and the cycle edges), normalised to the
//! unit sphere, and kept only if it is positive definite. Diagonal
//! coordinates are drawn as `|N(0, 1)|`: a PSD matrix has a nonnegative
//! diagonal and the normal law is symmetric, so the law conditioned on
//! PSD is unchanged while far fewer draws are rejected.
//!
//! Samples are produced in chunks of [`CHUNK`] accepted matrices. Chunk `c`
//! uses ChaCha8 seeded with the run seed on stream `c`, so the estimate
//! does not depend on how chunks are spread over workers.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::cycle::{cycle_membership, CycleMatrix};
use crate::error::{Error, Result};

pub const CHUNK: usize = 1000;

/// Every `SCALE_CHECK_STRIDE`-th sample is re-tested after rescaling.
const SCALE_CHECK_STRIDE: usize = 100;
const SCALE_CHECK_FACTOR: f64 = 3.7;

/// Reference fractions for m = 3..7, rounded to two decimals.
pub const REFERENCE_FRACTIONS: [(usize, f64); 5] = [(3, 0.78), (4, 0.90), (5, 0.95), (6, 0.98), (7, 0.99)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VolumeEstimate {
    pub m: usize,
    pub samples_psd: usize,
    pub members: usize,
    pub fraction: f64,
    pub std_error: f64,
    pub seed: u64,
    /// Draws rejected as not positive definite.
    pub rejected: usize,
    /// Members decided inside the tolerance band.
    pub boundary: usize,
    /// Spot checks whose verdict changed under rescaling.
    pub scale_mismatches: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    psd: usize,
    members: usize,
    rejected: usize,
    boundary: usize,
    scale_mismatches: usize,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            psd: self.psd + o.psd,
            members: self.members + o.members,
            rejected: self.rejected + o.rejected,
            boundary: self.boundary + o.boundary,
            scale_mismatches: self.scale_mismatches + o.scale_mismatches,
        }
    }
}

/// Outcome of a membership predicate on one sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    pub member: bool,
    pub boundary: bool,
}

/// Fraction of PSD samples in the image, decided by [`cycle_membership`].
pub fn estimate_volume(m: usize, n_samples: usize, seed: u64, workers: Option<usize>, tol: f64) -> Result<VolumeEstimate> {
    estimate_volume_with(m, n_samples, seed, workers, |s| {
        let v = cycle_membership(s, tol)?;
        Ok(Decision {
            member: v.member,
            boundary: v.boundary,
        })
    })
}

/// As [`estimate_volume`] with an arbitrary membership predicate.
pub fn estimate_volume_with<P>(m: usize, n_samples: usize, seed: u64, workers: Option<usize>, predicate: P) -> Result<VolumeEstimate>
where
    P: Fn(&CycleMatrix) -> Result<Decision> + Sync,
{
    if m < 3 {
        return Err(Error::InvalidInput(format!("cycle length must be at least 3, got {m}")));
    }
    if n_samples == 0 {
        return Err(Error::InvalidInput("at least one sample is required".into()));
    }
    let chunks = n_samples.div_ceil(CHUNK);
    let done = AtomicUsize::new(0);
    let run_chunk = |c: usize| -> Result<Tally> {
        let quota = CHUNK.min(n_samples - c * CHUNK);
        let t = sample_chunk(m, quota, seed, c as u64, &predicate)?;
        let finished = done.fetch_add(1, Ordering::Relaxed) + 1;
        if chunks >= 20 && finished.is_multiple_of(chunks / 10) {
            log::info!("volume m={m}: {finished}/{chunks} chunks");
        }
        Ok(t)
    };
    let tallies: Vec<Tally> = match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidInput(format!("cannot start {w} workers: {e}")))?
            .install(|| (0..chunks).into_par_iter().map(run_chunk).collect::<Result<_>>())?,
        None => (0..chunks).into_par_iter().map(run_chunk).collect::<Result<_>>()?,
    };
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);
    let p = t.members as f64 / t.psd as f64;
    Ok(VolumeEstimate {
        m,
        samples_psd: t.psd,
        members: t.members,
        fraction: p,
        std_error: (p * (1.0 - p) / t.psd as f64).sqrt(),
        seed,
        rejected: t.rejected,
        boundary: t.boundary,
        scale_mismatches: t.scale_mismatches,
    })
}

/// Estimates for `m = 3, .., 7`.
pub fn volume_table(n_samples: usize, seed: u64, workers: Option<usize>, tol: f64) -> Result<Vec<VolumeEstimate>> {
    REFERENCE_FRACTIONS
        .iter()
        .map(|&(m, _)| estimate_volume(m, n_samples, seed, workers, tol))
        .collect()
}

/// A text table with one column per cycle length.
pub fn format_table(rows: &[VolumeEstimate]) -> String {
    let mut out = String::from("m   ");
    for r in rows {
        out += &format!("{:>8}", r.m);
    }
    out += "\nVol ";
    for r in rows {
        out += &format!("{:>8.4}", r.fraction);
    }
    out += "\nSE  ";
    for r in rows {
        out += &format!("{:>8.4}", r.std_error);
    }
    out.push('\n');
    out
}

/// One direction on the unit sphere of the pattern space, diagonal entries
/// folded to be nonnegative.
pub fn sample_direction<R: Rng>(m: usize, rng: &mut R) -> CycleMatrix {
    let mut diag: Vec<f64> = (0..m).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect();
    let mut cyc: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
    let norm = diag.iter().chain(&cyc).map(|v| v * v).sum::<f64>().sqrt();
    diag.iter_mut().chain(cyc.iter_mut()).for_each(|v| *v /= norm);
    CycleMatrix::new(diag, cyc).expect("finite sample")
}

/// Positive definiteness by an unpivoted Cholesky sweep along the cycle.
pub fn is_positive_definite(s: &CycleMatrix) -> bool {
    let a = s.to_symmetric();
    let n = s.m();
    let mut l = vec![0.0; n * n];
    for k in 0..n {
        let mut d = a.get(k, k);
        for j in 0..k {
            d -= l[k * n + j] * l[k * n + j];
        }
        if !(d > 0.0) {
            return false;
        }
        let lkk = d.sqrt();
        l[k * n + k] = lkk;
        for i in k + 1..n {
            let mut r = a.get(i, k);
            for j in 0..k {
                r -= l[i * n + j] * l[k * n + j];
            }
            l[i * n + k] = r / lkk;
        }
    }
    true
}

fn sample_chunk<P>(m: usize, quota: usize, seed: u64, stream: u64, predicate: &P) -> Result<Tally>
where
    P: Fn(&CycleMatrix) -> Result<Decision>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let mut t = Tally::default();
    while t.psd < quota {
        let s = sample_direction(m, &mut rng);
        if !is_positive_definite(&s) {
            t.rejected += 1;
            continue;
        }
        let d = predicate(&s)?;
        if t.psd % SCALE_CHECK_STRIDE == 0 {
            let scaled = CycleMatrix::new(
                s.diag().iter().map(|v| v * SCALE_CHECK_FACTOR).collect(),
                s.cyc().iter().map(|v| v * SCALE_CHECK_FACTOR).collect(),
            )?;
            if predicate(&scaled)?.member != d.member {
                t.scale_mismatches += 1;
            }
        }
        t.psd += 1;
        t.members += d.member as usize;
        t.boundary += d.boundary as usize;
    }
    Ok(t)
}
