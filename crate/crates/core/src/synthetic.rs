//! Synthetic gamma spectra for demos, benchmarks and tests.
//!
//! A material is an exponential continuum plus Gaussian lines. Its expected
//! channel shape can be turned into a "fully measured" reference by drawing a
//! large multinomial sample from it.

use std::sync::Arc;

use crate::error::Result;
use crate::sampler::sample_spectrum;
use crate::spectrum::{DiscreteDistribution, EnergyGrid, Spectrum};

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub energy_kev: f64,
    /// Relative area of the line.
    pub intensity: f64,
    pub sigma_kev: f64,
}

impl Line {
    pub fn new(energy_kev: f64, intensity: f64) -> Self {
        Self { energy_kev, intensity, sigma_kev: 1.2 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialRecipe {
    pub name: String,
    /// Relative area of the continuum.
    pub continuum: f64,
    pub continuum_decay_kev: f64,
    pub lines: Vec<Line>,
}

impl MaterialRecipe {
    /// Expected photon distribution over `grid`.
    pub fn expected_shape(&self, grid: &Arc<EnergyGrid>) -> Result<DiscreteDistribution> {
        let e = grid.energies();
        let continuum: Vec<f64> = e.iter().map(|&x| (-x / self.continuum_decay_kev).exp()).collect();
        let continuum_norm: f64 = continuum.iter().sum();
        let mut weights: Vec<f64> = continuum.iter().map(|c| self.continuum * c / continuum_norm).collect();
        for line in &self.lines {
            let profile: Vec<(usize, f64)> = e
                .iter()
                .enumerate()
                .filter_map(|(i, &x)| {
                    let z = (x - line.energy_kev) / line.sigma_kev;
                    (z.abs() < 8.0).then(|| (i, (-0.5 * z * z).exp()))
                })
                .collect();
            let norm: f64 = profile.iter().map(|(_, w)| w).sum();
            if norm > 0.0 {
                for (i, w) in profile {
                    weights[i] += line.intensity * w / norm;
                }
            }
        }
        DiscreteDistribution::from_weights(Arc::clone(grid), weights)
    }

    /// Reference spectrum with `total_counts` photons drawn from the expected shape.
    pub fn measure(&self, grid: &Arc<EnergyGrid>, total_counts: u64, seed: u64) -> Result<Spectrum> {
        Ok(sample_spectrum(&self.expected_shape(grid)?, total_counts, seed).with_label(&self.name))
    }
}

/// 16384 channels spanning 0 to 12000 keV.
pub fn detector_grid() -> Arc<EnergyGrid> {
    Arc::new(EnergyGrid::linear(16384, 0.0, 12000.0).expect("valid linear grid"))
}

/// Five alloy-like materials; `Alloy_2` is `Alloy_1` plus one weak line.
pub fn demo_recipes() -> Vec<MaterialRecipe> {
    let matrix_lines = || {
        vec![
            Line::new(7915.6, 1.0),
            Line::new(7307.2, 0.6),
            Line::new(278.3, 0.9),
            Line::new(2223.2, 0.35),
            Line::new(511.0, 0.5),
        ]
    };
    let alloy = |name: &str, extra: Vec<Line>| {
        let mut lines = matrix_lines();
        lines.extend(extra);
        MaterialRecipe { name: name.into(), continuum: 6.0, continuum_decay_kev: 2500.0, lines }
    };
    vec![
        alloy("Alloy_1", vec![Line::new(6018.5, 0.08)]),
        alloy("Alloy_2", vec![Line::new(6018.5, 0.08), Line::new(1293.6, 0.02)]),
        alloy("Alloy_3", vec![Line::new(7631.1, 0.30), Line::new(7645.5, 0.25)]),
        alloy("Alloy_4", vec![Line::new(1778.9, 0.40), Line::new(7724.0, 0.20)]),
        alloy("Alloy_5", vec![Line::new(846.8, 0.30), Line::new(3539.0, 0.25)]),
    ]
}
