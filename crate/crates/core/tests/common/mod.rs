//! Shared fixtures for the integration suites: a seeded synthetic logit
//! generator with class-dependent location/scale structure, and an
//! independent dense-quadrature oracle for KDE CDFs.

use logitbayes::LogitSample;
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Class frequencies of the synthetic classifier output.
pub const CLASS_PROBS: [f64; 3] = [0.5, 0.3, 0.2];

/// Mean and standard deviation of logit column `j` on samples whose true
/// class is `j` (the "own" column) and on all other samples (the "off"
/// column). Column 2 is deliberately noisy on off-class samples: its raw
/// logit often tops the vector, so plain argmax over-predicts class 2.
/// Ranking each logit within its class's own training distribution
/// removes that advantage, which is the effect the re-scoring rules
/// exploit.
pub const OWN_MEAN: [f64; 3] = [2.0, 2.5, 3.5];
pub const OWN_STD: [f64; 3] = [0.5, 1.2, 1.2];
pub const OFF_MEAN: [f64; 3] = [0.5, 0.3, 1.0];
pub const OFF_STD: [f64; 3] = [0.8, 0.7, 1.8];

/// Scale of a shared latent added to every column of a sample, making
/// the three logits genuinely jointly Gaussian rather than independent.
pub const SHARED_STD: f64 = 0.4;

/// Draw `count` labeled samples from the synthetic classifier.
pub fn synthetic_logits(seed: u64, count: usize, tag: &str) -> Vec<LogitSample<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = [0usize, 1, 2];
    (0..count)
        .map(|i| {
            let class = *classes
                .choose_weighted(&mut rng, |&c| CLASS_PROBS[c])
                .expect("weights are valid");
            let shared: f64 = rng.sample::<f64, _>(StandardNormal) * SHARED_STD;
            let logits = (0..3)
                .map(|j| {
                    let (mean, std) = if j == class {
                        (OWN_MEAN[j], OWN_STD[j])
                    } else {
                        (OFF_MEAN[j], OFF_STD[j])
                    };
                    mean + std * rng.sample::<f64, _>(StandardNormal) + shared
                })
                .collect();
            LogitSample::new(format!("{tag}{i:05}"), logits, Some(class))
        })
        .collect()
}

/// The fixed train/validation/test experiment data.
pub struct SyntheticSplit {
    pub train: Vec<LogitSample<f64>>,
    pub val: Vec<LogitSample<f64>>,
    pub test: Vec<LogitSample<f64>>,
}

pub fn synthetic_split(seed: u64) -> SyntheticSplit {
    SyntheticSplit {
        train: synthetic_logits(seed, 5000, "tr"),
        val: synthetic_logits(seed ^ 0x5eed_0001, 1000, "va"),
        test: synthetic_logits(seed ^ 0x5eed_0002, 2000, "te"),
    }
}

/// Evenly spaced query positions plus dense-trapezoid CDF values for a
/// Gaussian KDE over `obs` with bandwidth `h`.
///
/// The density `(1/(n·h))·Σ φ((x−xᵢ)/h)` is accumulated on a uniform grid
/// with step ≤ h/40 that starts 12 bandwidths below the smallest
/// observation and passes through every query position exactly, so each
/// returned value is a pure quadrature result, independent of the
/// closed-form path under test.
pub fn grid_cdf_queries(obs: &[f64], h: f64, num_queries: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(num_queries >= 2);
    let mut sorted = obs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite observations"));
    let (lo, hi) = (sorted[0], *sorted.last().expect("non-empty"));

    let q_lo = lo - 3.0 * h;
    let q_hi = hi + 3.0 * h;
    let dq = (q_hi - q_lo) / (num_queries - 1) as f64;
    let per_query = ((dq * 40.0) / h).ceil().max(1.0) as usize;
    let step = dq / per_query as f64;
    let below = ((q_lo - (lo - 12.0 * h)) / step).ceil() as usize;

    let nodes: Vec<f64> = (0..=below + (num_queries - 1) * per_query)
        .map(|j| q_lo + (j as f64 - below as f64) * step)
        .collect();
    let density = |x: f64| {
        // Kernels beyond 12 bandwidths contribute under 1e-30 each and
        // are skipped; `sorted` keeps the window a contiguous slice.
        let cut = 12.0 * h;
        let start = sorted.partition_point(|&o| o < x - cut);
        let stop = sorted.partition_point(|&o| o <= x + cut);
        let norm = 1.0 / (obs.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt());
        sorted[start..stop]
            .iter()
            .map(|&o| {
                let z = (x - o) / h;
                (-0.5 * z * z).exp()
            })
            .sum::<f64>()
            * norm
    };

    let mut cumulative = vec![0.0; nodes.len()];
    let mut prev = density(nodes[0]);
    for j in 1..nodes.len() {
        let next = density(nodes[j]);
        cumulative[j] = cumulative[j - 1] + 0.5 * (prev + next) * step;
        prev = next;
    }

    let queries: Vec<f64> = (0..num_queries)
        .map(|k| nodes[below + k * per_query])
        .collect();
    let values: Vec<f64> = (0..num_queries)
        .map(|k| cumulative[below + k * per_query])
        .collect();
    (queries, values)
}
