//! Kernel and bandwidth selection by repeated train/test splitting.
//!
//! Each repeat splits the reference photons without replacement, fits a
//! density on the train part for every (kernel, bandwidth) pair and scores
//! the test part by its log-likelihood per test photon. Scores are averaged
//! over repeats and the best pair wins; ties go to the smaller bandwidth,
//! then to the earlier kernel in the configured list.

use crate::classifier::log_likelihood;
use crate::error::{Error, Result};
use crate::kde::{estimate_density, KdeConfig, Kernel};
use crate::par;
use crate::sampler::{derive_seed, split_train_test};
use crate::spectrum::Spectrum;

/// Minimum reference size for a meaningful split.
pub const MIN_REFERENCE_COUNTS: u64 = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct CvConfig {
    pub bandwidth_grid: Vec<f64>,
    pub kernels: Vec<Kernel>,
    pub repeats: usize,
    pub train_fraction: f64,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            bandwidth_grid: log_spaced(1e-5, 1e-1, 25),
            kernels: vec![Kernel::Cauchy, Kernel::Gaussian],
            repeats: 5,
            train_fraction: 0.5,
            seed: 0,
        }
    }
}

impl CvConfig {
    fn validate(&self) -> Result<()> {
        if self.bandwidth_grid.is_empty() {
            return Err(Error::InvalidArgument("bandwidth grid is empty".into()));
        }
        if self.bandwidth_grid.iter().any(|h| !(h.is_finite() && *h > 0.0))
            || self.bandwidth_grid.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::InvalidArgument("bandwidth grid must be positive and strictly increasing".into()));
        }
        if self.kernels.is_empty() {
            return Err(Error::InvalidArgument("no kernels to evaluate".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidArgument("repeats must be at least 1".into()));
        }
        Ok(())
    }
}

/// `points` values spaced evenly in log10 from `lo` to `hi` inclusive.
pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            let step = (b - a) / (points - 1) as f64;
            (0..points).map(|i| if i == points - 1 { hi } else { 10f64.powf(a + step * i as f64) }).collect()
        }
    }
}

/// Mean held-out log-likelihood per photon for every (kernel, bandwidth).
#[derive(Debug, Clone, PartialEq)]
pub struct CvResult {
    pub kernels: Vec<Kernel>,
    pub bandwidths: Vec<f64>,
    /// `table[kernel][bandwidth]`
    pub table: Vec<Vec<f64>>,
    pub best_kernel: Kernel,
    pub best_bandwidth: f64,
    pub best_score: f64,
}

impl CvResult {
    pub fn score(&self, kernel: Kernel, bandwidth_index: usize) -> Option<f64> {
        let k = self.kernels.iter().position(|&k| k == kernel)?;
        self.table[k].get(bandwidth_index).copied()
    }
}

pub fn cross_validate(reference: &Spectrum, config: &CvConfig) -> Result<CvResult> {
    config.validate()?;
    let total = reference.total_counts();
    if total == 0 {
        return Err(Error::EmptySpectrum);
    }
    if total < MIN_REFERENCE_COUNTS {
        return Err(Error::InsufficientCounts { found: total, required: MIN_REFERENCE_COUNTS });
    }
    let splits = (0..config.repeats)
        .map(|r| split_train_test(reference, config.train_fraction, derive_seed(config.seed, &[r as u64])))
        .collect::<Result<Vec<_>>>()?;
    if splits.iter().any(|(_, test)| test.total_counts() == 0) {
        return Err(Error::InsufficientCounts { found: total, required: MIN_REFERENCE_COUNTS });
    }

    let nk = config.kernels.len();
    let nb = config.bandwidth_grid.len();
    let nr = config.repeats;
    // job = ((kernel * nb) + bandwidth) * nr + repeat
    let scores = par::map_indices(nk * nb * nr, |job| -> Result<f64> {
        let r = job % nr;
        let b = (job / nr) % nb;
        let k = job / (nr * nb);
        let kde = KdeConfig::new(config.kernels[k], config.bandwidth_grid[b])?;
        let (train, test) = &splits[r];
        let model = estimate_density(train, &kde)?;
        Ok(log_likelihood(test, &model)? / test.total_counts() as f64)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let table: Vec<Vec<f64>> = (0..nk)
        .map(|k| {
            (0..nb)
                .map(|b| {
                    let start = (k * nb + b) * nr;
                    scores[start..start + nr].iter().sum::<f64>() / nr as f64
                })
                .collect()
        })
        .collect();
    if table.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteDensity);
    }

    let (mut best_k, mut best_b) = (0, 0);
    for b in 0..nb {
        for k in 0..nk {
            if table[k][b] > table[best_k][best_b] {
                (best_k, best_b) = (k, b);
            }
        }
    }
    Ok(CvResult {
        kernels: config.kernels.clone(),
        bandwidths: config.bandwidth_grid.clone(),
        best_kernel: config.kernels[best_k],
        best_bandwidth: config.bandwidth_grid[best_b],
        best_score: table[best_k][best_b],
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::EnergyGrid;
    use std::sync::Arc;

    #[test]
    fn default_grid_brackets_operating_point() {
        let c = CvConfig::default();
        assert_eq!(c.bandwidth_grid.len(), 25);
        assert_eq!(c.bandwidth_grid[0], 1e-5);
        assert_eq!(c.bandwidth_grid[24], 1e-1);
        assert!(c.bandwidth_grid.windows(2).all(|w| w[0] < w[1]));
        assert!(c.bandwidth_grid[0] < 0.00065 && 0.00065 < c.bandwidth_grid[24]);
        assert!((c.bandwidth_grid[6] - 1e-4).abs() < 1e-18);
    }

    #[test]
    fn single_channel_reference_ties_to_smallest() {
        let s = Spectrum::new(Arc::new(EnergyGrid::new(vec![511.0]).unwrap()), vec![5000]).unwrap();
        let r = cross_validate(&s, &CvConfig::default()).unwrap();
        assert!(r.table.iter().flatten().all(|&v| v == 0.0));
        assert_eq!(r.best_kernel, Kernel::Cauchy);
        assert_eq!(r.best_bandwidth, 1e-5);
    }

    #[test]
    fn rejects_small_references_and_bad_configs() {
        let g = Arc::new(EnergyGrid::linear(4, 0.0, 1.0).unwrap());
        let small = Spectrum::new(Arc::clone(&g), vec![100, 100, 100, 100]).unwrap();
        assert!(matches!(
            cross_validate(&small, &CvConfig::default()),
            Err(Error::InsufficientCounts { found: 400, .. })
        ));
        assert!(matches!(
            cross_validate(&Spectrum::zeros(Arc::clone(&g)), &CvConfig::default()),
            Err(Error::EmptySpectrum)
        ));
        let big = Spectrum::new(g, vec![1000; 4]).unwrap();
        let bad = CvConfig { bandwidth_grid: vec![0.1, 0.01], ..CvConfig::default() };
        assert!(cross_validate(&big, &bad).is_err());
        let bad = CvConfig { repeats: 0, ..CvConfig::default() };
        assert!(cross_validate(&big, &bad).is_err());
    }

    #[test]
    fn deterministic_per_seed() {
        let g = Arc::new(EnergyGrid::linear(64, 0.0, 1.0).unwrap());
        let counts: Vec<u64> = (0..64u64).map(|i| 20 + (i * 37) % 50).collect();
        let s = Spectrum::new(g, counts).unwrap();
        let cfg = CvConfig { bandwidth_grid: log_spaced(1e-3, 1e-1, 5), repeats: 3, seed: 4, ..CvConfig::default() };
        assert_eq!(cross_validate(&s, &cfg).unwrap(), cross_validate(&s, &cfg).unwrap());
    }
}
