//! Energy grids, count spectra and discrete distributions over channels.

use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::numeric::pairwise_sum;

/// Lower bound applied to every stored log-probability.
///
/// Zero-probability channels map here instead of `-inf`, keeping likelihood
/// sums finite while preserving score order for realistic short spectra.
pub const LOG_FLOOR: f64 = -745.0;

/// Allowed deviation of a distribution's total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Channel count of the full-resolution detector setup.
pub const FULL_RESOLUTION_CHANNELS: usize = 16384;

/// Strictly increasing gamma energies (keV), one per detector channel.
#[derive(Debug, Clone)]
pub struct EnergyGrid {
    energies: Vec<f64>,
    normalized: Vec<f64>,
}

impl EnergyGrid {
    pub fn new(energies: Vec<f64>) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::InvalidGrid("grid has no channels".into()));
        }
        for (i, &e) in energies.iter().enumerate() {
            if !e.is_finite() || e < 0.0 {
                return Err(Error::InvalidGrid(format!(
                    "energy {e} at channel {i} is not a finite non-negative value"
                )));
            }
        }
        if let Some(i) = energies.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidGrid(format!("energies not strictly increasing at channel {}", i + 1)));
        }
        let lo = energies[0];
        let span = energies[energies.len() - 1] - lo;
        let normalized = if span > 0.0 { energies.iter().map(|&e| (e - lo) / span).collect() } else { vec![0.0] };
        Ok(Self { energies, normalized })
    }

    /// Evenly spaced grid of `channels` energies from `first_kev` to `last_kev`.
    pub fn linear(channels: usize, first_kev: f64, last_kev: f64) -> Result<Self> {
        match channels {
            0 => Err(Error::InvalidGrid("grid has no channels".into())),
            1 => Self::new(vec![first_kev]),
            _ => {
                let step = (last_kev - first_kev) / (channels - 1) as f64;
                Self::new((0..channels).map(|i| first_kev + step * i as f64).collect())
            }
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// Energies mapped affinely onto `[0, 1]`; bandwidths are expressed on this axis.
    pub fn normalized(&self) -> &[f64] {
        &self.normalized
    }

    pub fn channel_count(&self) -> usize {
        self.energies.len()
    }
}

impl PartialEq for EnergyGrid {
    fn eq(&self, other: &Self) -> bool {
        self.energies.len() == other.energies.len()
            && self.energies.iter().zip(&other.energies).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub(crate) fn same_grid(a: &Arc<EnergyGrid>, b: &Arc<EnergyGrid>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// Photon counts per channel on an [`EnergyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    grid: Arc<EnergyGrid>,
    counts: Vec<u64>,
    total: u64,
    label: Option<String>,
    live_time_seconds: Option<f64>,
}

impl Spectrum {
    pub fn new(grid: Arc<EnergyGrid>, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != grid.channel_count() {
            return Err(Error::InvalidArgument(format!(
                "{} counts for a grid of {} channels",
                counts.len(),
                grid.channel_count()
            )));
        }
        let wide: u128 = counts.iter().map(|&c| c as u128).sum();
        let total = u64::try_from(wide).map_err(|_| Error::CountOverflow)?;
        Ok(Self { grid, counts, total, label: None, live_time_seconds: None })
    }

    pub fn zeros(grid: Arc<EnergyGrid>) -> Self {
        let n = grid.channel_count();
        Self { grid, counts: vec![0; n], total: 0, label: None, live_time_seconds: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn with_live_time(mut self, seconds: f64) -> Result<Self> {
        if !(seconds.is_finite() && seconds > 0.0) {
            return Err(Error::InvalidArgument(format!("live time {seconds} must be positive")));
        }
        self.live_time_seconds = Some(seconds);
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<EnergyGrid> {
        &self.grid
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total_counts(&self) -> u64 {
        self.total
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn live_time_seconds(&self) -> Option<f64> {
        self.live_time_seconds
    }

    /// Indices of channels with at least one count, ascending.
    pub fn nonzero_channels(&self) -> impl Iterator<Item = usize> + '_ {
        self.counts.iter().enumerate().filter(|(_, &c)| c > 0).map(|(i, _)| i)
    }

    pub fn nonzero_count(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }
}

/// Exact total photon count of a spectrum.
pub fn total_counts(s: &Spectrum) -> u64 {
    s.total_counts()
}

/// Probability mass per channel, with floored natural logs computed on demand.
#[derive(Debug, Clone)]
pub struct DiscreteDistribution {
    grid: Arc<EnergyGrid>,
    probabilities: Vec<f64>,
    log_probabilities: OnceLock<Vec<f64>>,
}

impl DiscreteDistribution {
    /// Wrap an already normalized probability vector.
    pub fn new(grid: Arc<EnergyGrid>, probabilities: Vec<f64>) -> Result<Self> {
        if probabilities.len() != grid.channel_count() {
            return Err(Error::InvalidDistribution(format!(
                "{} probabilities for a grid of {} channels",
                probabilities.len(),
                grid.channel_count()
            )));
        }
        if let Some(i) = probabilities.iter().position(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::InvalidDistribution(format!(
                "probability {} at channel {i} is not a finite non-negative value",
                probabilities[i]
            )));
        }
        let mass = pairwise_sum(&probabilities);
        if (mass - 1.0).abs() >= MASS_TOLERANCE {
            return Err(Error::InvalidDistribution(format!("total mass {mass} differs from 1")));
        }
        Ok(Self { grid, probabilities, log_probabilities: OnceLock::new() })
    }

    /// Normalize non-negative weights by their pairwise sum.
    pub(crate) fn from_weights(grid: Arc<EnergyGrid>, weights: Vec<f64>) -> Result<Self> {
        let total = pairwise_sum(&weights);
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::NonFiniteDensity);
        }
        let probabilities = weights.into_iter().map(|w| w / total).collect();
        Self::new(grid, probabilities)
    }

    pub fn grid(&self) -> &Arc<EnergyGrid> {
        &self.grid
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `max(ln p, LOG_FLOOR)` per channel.
    pub fn log_probabilities(&self) -> &[f64] {
        self.log_probabilities.get_or_init(|| self.probabilities.iter().map(|&p| floored_ln(p)).collect())
    }

    pub fn channel_count(&self) -> usize {
        self.probabilities.len()
    }
}

impl PartialEq for DiscreteDistribution {
    fn eq(&self, other: &Self) -> bool {
        *self.grid == *other.grid
            && self.probabilities.iter().zip(&other.probabilities).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

#[inline]
pub fn floored_ln(p: f64) -> f64 {
    if p > 0.0 {
        p.ln().max(LOG_FLOOR)
    } else {
        LOG_FLOOR
    }
}

/// Empirical distribution `p_i = c_i / u` of a spectrum.
pub fn normalize_spectrum(s: &Spectrum) -> Result<DiscreteDistribution> {
    let total = s.total_counts();
    if total == 0 {
        return Err(Error::EmptySpectrum);
    }
    let u = total as f64;
    let probabilities = s.counts().iter().map(|&c| c as f64 / u).collect();
    DiscreteDistribution::new(Arc::clone(s.grid()), probabilities)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(n: usize) -> Arc<EnergyGrid> {
        Arc::new(EnergyGrid::linear(n, 10.0, 12000.0).unwrap())
    }

    fn spectrum(counts: &[u64]) -> Spectrum {
        Spectrum::new(grid(counts.len()), counts.to_vec()).unwrap()
    }

    #[test]
    fn grid_rejects_non_increasing() {
        assert!(matches!(EnergyGrid::new(vec![1.0, 2.0, 2.0]), Err(Error::InvalidGrid(_))));
        assert!(matches!(EnergyGrid::new(vec![3.0, 1.0]), Err(Error::InvalidGrid(_))));
        assert!(matches!(EnergyGrid::new(vec![-1.0, 1.0]), Err(Error::InvalidGrid(_))));
        assert!(matches!(EnergyGrid::new(vec![f64::NAN]), Err(Error::InvalidGrid(_))));
        assert!(matches!(EnergyGrid::new(vec![]), Err(Error::InvalidGrid(_))));
    }

    #[test]
    fn grid_normalizes_to_unit_interval() {
        let g = EnergyGrid::new(vec![100.0, 150.0, 300.0]).unwrap();
        assert_eq!(g.normalized(), &[0.0, 0.25, 1.0]);
        assert_eq!(EnergyGrid::new(vec![42.0]).unwrap().normalized(), &[0.0]);
        let full = EnergyGrid::linear(FULL_RESOLUTION_CHANNELS, 0.0, 12000.0).unwrap();
        assert_eq!(full.channel_count(), 16384);
    }

    #[test]
    fn total_counts_examples() {
        assert_eq!(total_counts(&spectrum(&[0, 0, 0])), 0);
        assert_eq!(total_counts(&spectrum(&[2, 3, 5])), 10);
    }

    #[test]
    fn total_counts_is_wide() {
        let s = spectrum(&[u32::MAX as u64, u32::MAX as u64, 7]);
        assert_eq!(s.total_counts(), 2 * u32::MAX as u64 + 7);
        let overflow = Spectrum::new(grid(2), vec![u64::MAX, 1]);
        assert!(matches!(overflow, Err(Error::CountOverflow)));
    }

    #[test]
    fn counts_length_must_match_grid() {
        assert!(Spectrum::new(grid(3), vec![1, 2]).is_err());
    }

    #[test]
    fn normalize_uniform() {
        let d = normalize_spectrum(&spectrum(&[1, 1, 1, 1])).unwrap();
        assert_eq!(d.probabilities(), &[0.25; 4]);
    }

    #[test]
    fn normalize_degenerate() {
        let d = normalize_spectrum(&spectrum(&[5, 0, 0, 0])).unwrap();
        assert_eq!(d.probabilities(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(d.log_probabilities(), &[0.0, LOG_FLOOR, LOG_FLOOR, LOG_FLOOR]);
    }

    #[test]
    fn normalize_small_counts() {
        let d = normalize_spectrum(&spectrum(&[2, 3, 5])).unwrap();
        let oracle = [2.0 / 10.0, 3.0 / 10.0, 5.0 / 10.0];
        assert_eq!(d.probabilities(), &oracle);
        assert!((d.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn normalize_empty_fails() {
        assert!(matches!(normalize_spectrum(&spectrum(&[0, 0])), Err(Error::EmptySpectrum)));
    }

    #[test]
    fn distribution_validation() {
        let g = grid(2);
        assert!(DiscreteDistribution::new(Arc::clone(&g), vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(Arc::clone(&g), vec![-0.5, 1.5]).is_err());
        assert!(DiscreteDistribution::new(Arc::clone(&g), vec![1.0]).is_err());
        assert!(DiscreteDistribution::new(g, vec![0.5, 0.5]).is_ok());
    }

    #[test]
    fn tiny_probabilities_floor() {
        assert_eq!(floored_ln(1e-320), 1e-320f64.ln());
        assert!(floored_ln(f64::MIN_POSITIVE * f64::EPSILON) >= LOG_FLOOR);
        assert_eq!(floored_ln(0.0), LOG_FLOOR);
        assert_eq!(floored_ln(1.0), 0.0);
        assert_eq!(floored_ln(0.5), 0.5f64.ln());
    }

    proptest! {
        #[test]
        fn normalization_round_trips_counts(counts in prop::collection::vec(0u64..1_000_000, 1..64)) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let s = spectrum(&counts);
            let d = normalize_spectrum(&s).unwrap();
            let u = s.total_counts() as f64;
            for (p, &c) in d.probabilities().iter().zip(&counts) {
                prop_assert_eq!((p * u).round() as u64, c);
            }
            prop_assert!((pairwise_sum(d.probabilities()) - 1.0).abs() < 1e-12);
            for (lp, p) in d.log_probabilities().iter().zip(d.probabilities()) {
                prop_assert_eq!(*lp, floored_ln(*p));
            }
        }
    }
}
