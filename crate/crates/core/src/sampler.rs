//! Synthetic short-time spectra by resampling a reference distribution.
//!
//! Every draw uses a [`ChaCha8Rng`] seeded from a single `u64`. Independent
//! streams for batches are obtained with [`derive_seed`], which hashes a
//! master seed together with the batch coordinates (class, spectrum index,
//! duration index, ...) through SplitMix64.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Hypergeometric};

use crate::error::{Error, Result};
use crate::spectrum::{DiscreteDistribution, Spectrum};

/// Photons recorded per second of simulated measurement time.
pub const DEFAULT_COUNTS_PER_SECOND: u64 = 50_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SamplerConfig {
    counts_per_second: u64,
    seed: u64,
}

impl SamplerConfig {
    pub fn new(counts_per_second: u64, seed: u64) -> Result<Self> {
        if counts_per_second == 0 {
            return Err(Error::InvalidArgument("counts per second must be at least 1".into()));
        }
        Ok(Self { counts_per_second, seed })
    }

    pub fn with_seed(seed: u64) -> Self {
        Self { counts_per_second: DEFAULT_COUNTS_PER_SECOND, seed }
    }

    pub fn counts_per_second(&self) -> u64 {
        self.counts_per_second
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `round(duration x rate)`, ties to even.
    pub fn draws_for(&self, duration_seconds: f64) -> u64 {
        (duration_seconds * self.counts_per_second as f64).round_ties_even() as u64
    }
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self::with_seed(0)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Child seed for the stream addressed by `path` under `master`.
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter().fold(splitmix64(master), |acc, &p| splitmix64(acc ^ splitmix64(p)))
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Multinomial draw of `draw_count` photons from `dist`.
///
/// Uses the conditional binomial method: channel `i` receives
/// `Binomial(remaining, p_i / (p_i + ... + p_n))` photons.
pub fn sample_spectrum(dist: &DiscreteDistribution, draw_count: u64, seed: u64) -> Spectrum {
    let mut rng = rng_for(seed);
    let counts = multinomial(dist.probabilities(), draw_count, &mut rng);
    Spectrum::new(Arc::clone(dist.grid()), counts).expect("multinomial counts sum to draw_count")
}

pub(crate) fn multinomial<R: Rng + ?Sized>(probabilities: &[f64], draws: u64, rng: &mut R) -> Vec<u64> {
    let n = probabilities.len();
    let mut counts = vec![0u64; n];
    if draws == 0 {
        return counts;
    }
    // tail[i] = p_i + ... + p_{n-1}, so the last positive channel gets ratio 1
    let mut tail = vec![0.0f64; n];
    let mut acc = 0.0;
    for i in (0..n).rev() {
        acc += probabilities[i];
        tail[i] = acc;
    }
    let mut remaining = draws;
    for i in 0..n {
        let p = probabilities[i];
        if p <= 0.0 {
            continue;
        }
        let ratio = (p / tail[i]).min(1.0);
        let k = if ratio >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, ratio).expect("ratio in [0, 1)").sample(rng)
        };
        counts[i] = k;
        remaining -= k;
        if remaining == 0 {
            return counts;
        }
    }
    // rounding left mass after the last positive channel; give it back there
    if let Some(last) = probabilities.iter().rposition(|&p| p > 0.0) {
        counts[last] += remaining;
    }
    counts
}

/// Spectrum of `duration_seconds` at the configured count rate.
pub fn simulate_measurement(
    dist: &DiscreteDistribution,
    duration_seconds: f64,
    config: &SamplerConfig,
) -> Result<Spectrum> {
    if !(duration_seconds.is_finite() && duration_seconds > 0.0) {
        return Err(Error::InvalidArgument(format!("duration {duration_seconds} must be positive")));
    }
    sample_spectrum(dist, config.draws_for(duration_seconds), config.seed).with_live_time(duration_seconds)
}

/// Split the photons of `s` without replacement into train and test parts.
///
/// The train part holds `round(train_fraction x u)` photons; per channel the
/// train count is hypergeometric given the photons still unassigned.
pub fn split_train_test(s: &Spectrum, train_fraction: f64, seed: u64) -> Result<(Spectrum, Spectrum)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("train fraction {train_fraction} must lie in (0, 1)")));
    }
    let total = s.total_counts();
    if total == 0 {
        return Err(Error::EmptySpectrum);
    }
    if total < 2 {
        return Err(Error::InsufficientCounts { found: total, required: 2 });
    }
    let mut rng = rng_for(seed);
    let mut unassigned = total;
    let mut train_left = (train_fraction * total as f64).round_ties_even() as u64;
    let mut train = vec![0u64; s.counts().len()];
    for (slot, &c) in train.iter_mut().zip(s.counts()) {
        if c == 0 {
            continue;
        }
        let k = if train_left == 0 {
            0
        } else if train_left == unassigned {
            c
        } else if c == unassigned {
            train_left
        } else {
            hypergeometric(unassigned, train_left, c, &mut rng)
        };
        *slot = k;
        train_left -= k;
        unassigned -= c;
    }
    let test: Vec<u64> = s.counts().iter().zip(&train).map(|(c, t)| c - t).collect();
    let grid = Arc::clone(s.grid());
    let mut train = Spectrum::new(Arc::clone(&grid), train)?;
    let mut test = Spectrum::new(grid, test)?;
    if let Some(label) = s.label() {
        train = train.with_label(label);
        test = test.with_label(label);
    }
    Ok((train, test))
}

/// Successes among `draws` taken without replacement from `population` items,
/// `successes` of which are marked.
///
/// rand_distr rejects some valid parameters with small modes (its initial
/// probability overflows); those fall back to drawing item by item.
fn hypergeometric(population: u64, successes: u64, draws: u64, rng: &mut ChaCha8Rng) -> u64 {
    if let Ok(d) = Hypergeometric::new(population, successes, draws) {
        return d.sample(rng);
    }
    if draws > population / 2 {
        return successes - hypergeometric(population, successes, population - draws, rng);
    }
    let (mut pop, mut marked, mut hits) = (population, successes, 0);
    for _ in 0..draws {
        if marked == 0 {
            break;
        }
        if rng.random_range(0..pop) < marked {
            hits += 1;
            marked -= 1;
        }
        pop -= 1;
    }
    hits
}
