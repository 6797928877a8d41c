//! Confusion matrices from resampled test spectra.

use crate::classifier::classify;
use crate::error::{Error, Result};
use crate::library::ClassLibrary;
use crate::par;
use crate::sampler::{derive_seed, sample_spectrum, SamplerConfig};
use crate::spectrum::{same_grid, DiscreteDistribution};

/// Rows are true classes, columns predicted classes, both in library order.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<u64>>,
    /// `None` for library classes that had no test spectra.
    pub per_class_accuracy: Vec<Option<f64>>,
    pub overall_accuracy: f64,
}

impl ConfusionMatrix {
    fn from_matrix(labels: Vec<String>, matrix: Vec<Vec<u64>>) -> Self {
        let per_class_accuracy = matrix
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: u64 = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect();
        let total: u64 = matrix.iter().flatten().sum();
        let correct: u64 = (0..matrix.len()).map(|i| matrix[i][i]).sum();
        let overall_accuracy = if total > 0 { correct as f64 / total as f64 } else { 0.0 };
        Self { labels, matrix, per_class_accuracy, overall_accuracy }
    }

    pub fn total(&self) -> u64 {
        self.matrix.iter().flatten().sum()
    }

    /// Misclassified spectra, i.e. everything off the diagonal.
    pub fn off_diagonal(&self) -> u64 {
        self.total() - (0..self.matrix.len()).map(|i| self.matrix[i][i]).sum::<u64>()
    }
}

/// The library's own models as truth set: resample from what was fitted.
pub fn self_truths(library: &ClassLibrary) -> Vec<(String, DiscreteDistribution)> {
    library.entries().iter().map(|e| (e.label.clone(), e.model.clone())).collect()
}

/// Stable 64-bit FNV-1a hash, used to key sampling streams by label.
fn label_key(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn evaluate(
    library: &ClassLibrary,
    truth_models: &[(String, DiscreteDistribution)],
    spectra_per_class: usize,
    duration_seconds: f64,
    config: &SamplerConfig,
) -> Result<ConfusionMatrix> {
    evaluate_at(library, truth_models, spectra_per_class, duration_seconds, 0, config)
}

fn evaluate_at(
    library: &ClassLibrary,
    truth_models: &[(String, DiscreteDistribution)],
    spectra_per_class: usize,
    duration_seconds: f64,
    duration_index: u64,
    config: &SamplerConfig,
) -> Result<ConfusionMatrix> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if spectra_per_class == 0 {
        return Err(Error::InvalidArgument("spectra per class must be at least 1".into()));
    }
    if !(duration_seconds.is_finite() && duration_seconds > 0.0) {
        return Err(Error::InvalidArgument(format!("duration {duration_seconds} must be positive")));
    }
    let mut rows = Vec::with_capacity(truth_models.len());
    for (label, model) in truth_models {
        let row = library.index_of(label)?;
        if rows.contains(&row) {
            return Err(Error::DuplicateLabel(label.clone()));
        }
        if !same_grid(model.grid(), library.grid()) {
            return Err(Error::GridMismatch);
        }
        rows.push(row);
    }

    let draws = config.draws_for(duration_seconds);
    let predictions = par::map_indices(truth_models.len() * spectra_per_class, |job| -> Result<usize> {
        let (t, s) = (job / spectra_per_class, job % spectra_per_class);
        let (label, model) = &truth_models[t];
        let seed = derive_seed(config.seed(), &[label_key(label), s as u64, duration_index]);
        Ok(classify(&sample_spectrum(model, draws, seed), library)?.predicted_index)
    });

    let n = library.len();
    let mut matrix = vec![vec![0u64; n]; n];
    for (job, predicted) in predictions.into_iter().enumerate() {
        matrix[rows[job / spectra_per_class]][predicted?] += 1;
    }
    Ok(ConfusionMatrix::from_matrix(library.labels().map(str::to_owned).collect(), matrix))
}

/// Overall accuracy for each duration, each cell on its own seed streams.
pub fn accuracy_vs_time(
    library: &ClassLibrary,
    truth_models: &[(String, DiscreteDistribution)],
    durations: &[f64],
    spectra_per_class: usize,
    config: &SamplerConfig,
) -> Result<Vec<(f64, f64)>> {
    if durations.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("durations must be strictly increasing".into()));
    }
    durations
        .iter()
        .enumerate()
        .map(|(d, &t)| {
            let cm = evaluate_at(library, truth_models, spectra_per_class, t, d as u64, config)?;
            Ok((t, cm.overall_accuracy))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::LibraryEntry;
    use crate::spectrum::EnergyGrid;
    use std::sync::Arc;

    fn library(rows: &[(&str, &[f64])]) -> ClassLibrary {
        let g = Arc::new(EnergyGrid::linear(rows[0].1.len(), 0.0, 10.0).unwrap());
        let entries = rows
            .iter()
            .map(|(l, p)| LibraryEntry {
                label: l.to_string(),
                model: DiscreteDistribution::new(Arc::clone(&g), p.to_vec()).unwrap(),
            })
            .collect();
        ClassLibrary::new(g, entries, "cauchy", 0.00065).unwrap()
    }

    #[test]
    fn disjoint_supports_are_perfect() {
        let lib = library(&[("a", &[0.5, 0.5, 0.0, 0.0]), ("b", &[0.0, 0.0, 0.3, 0.7])]);
        let cfg = SamplerConfig::with_seed(3);
        let cm = evaluate(&lib, &self_truths(&lib), 50, 1.0 / 50_000.0, &cfg).unwrap();
        assert_eq!(cm.matrix, vec![vec![50, 0], vec![0, 50]]);
        assert_eq!(cm.overall_accuracy, 1.0);
        assert_eq!(cm.per_class_accuracy, vec![Some(1.0), Some(1.0)]);
        let curve = accuracy_vs_time(&lib, &self_truths(&lib), &[1e-4, 1e-3, 1e-2], 20, &cfg).unwrap();
        assert!(curve.iter().all(|&(_, a)| a == 1.0));
    }

    #[test]
    fn single_class_is_trivially_correct() {
        let lib = library(&[("only", &[0.25, 0.25, 0.5])]);
        let curve = accuracy_vs_time(&lib, &self_truths(&lib), &[0.01], 10, &SamplerConfig::default()).unwrap();
        assert_eq!(curve, vec![(0.01, 1.0)]);
    }

    #[test]
    fn unknown_and_duplicate_truths() {
        let lib = library(&[("a", &[0.5, 0.5]), ("b", &[0.1, 0.9])]);
        let m = lib.model(0).unwrap().clone();
        let cfg = SamplerConfig::default();
        assert!(matches!(evaluate(&lib, &[("zz".into(), m.clone())], 1, 1.0, &cfg), Err(Error::UnknownLabel(_))));
        assert!(matches!(
            evaluate(&lib, &[("a".into(), m.clone()), ("a".into(), m.clone())], 1, 1.0, &cfg),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(evaluate(&lib, &[("a".into(), m)], 0, 1.0, &cfg).is_err());
    }

    #[test]
    fn partial_truth_set_leaves_empty_rows() {
        let lib = library(&[("a", &[0.5, 0.5]), ("b", &[0.1, 0.9])]);
        let truths = vec![("b".to_string(), lib.model(1).unwrap().clone())];
        let cm = evaluate(&lib, &truths, 40, 0.001, &SamplerConfig::default()).unwrap();
        assert_eq!(cm.matrix[0], vec![0, 0]);
        assert_eq!(cm.per_class_accuracy[0], None);
        assert_eq!(cm.total(), 40);
    }

    #[test]
    fn seeded_runs_repeat_exactly() {
        let lib = library(&[("a", &[0.4, 0.3, 0.3]), ("b", &[0.3, 0.4, 0.3]), ("c", &[0.3, 0.3, 0.4])]);
        let cfg = SamplerConfig::with_seed(99);
        let a = evaluate(&lib, &self_truths(&lib), 200, 0.0004, &cfg).unwrap();
        let b = evaluate(&lib, &self_truths(&lib), 200, 0.0004, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.total(), 600);
        for row in &a.matrix {
            assert_eq!(row.iter().sum::<u64>(), 200);
        }
    }
}
