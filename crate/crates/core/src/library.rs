use std::collections::HashSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::spectrum::{same_grid, DiscreteDistribution, EnergyGrid};

/// One reference material: its name and density model.
#[derive(Debug, Clone, PartialEq)]
pub struct LibraryEntry {
    pub label: String,
    pub model: DiscreteDistribution,
}

/// Ordered set of material models sharing one grid.
///
/// Entry order is significant: score ties resolve to the lowest index.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassLibrary {
    grid: Arc<EnergyGrid>,
    entries: Vec<LibraryEntry>,
    kernel_name: String,
    bandwidth: f64,
}

impl ClassLibrary {
    pub fn new(
        grid: Arc<EnergyGrid>,
        entries: Vec<LibraryEntry>,
        kernel_name: impl Into<String>,
        bandwidth: f64,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyLibrary);
        }
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidArgument(format!("bandwidth {bandwidth} must be positive")));
        }
        let mut seen = HashSet::new();
        for e in &entries {
            if e.label.is_empty() {
                return Err(Error::InvalidArgument("empty material name".into()));
            }
            if !seen.insert(e.label.as_str()) {
                return Err(Error::DuplicateLabel(e.label.clone()));
            }
            if !same_grid(&grid, e.model.grid()) {
                return Err(Error::GridMismatch);
            }
            // materialize logs once so scoring only reads
            e.model.log_probabilities();
        }
        Ok(Self { grid, entries, kernel_name: kernel_name.into(), bandwidth })
    }

    pub fn grid(&self) -> &Arc<EnergyGrid> {
        &self.grid
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn kernel_name(&self) -> &str {
        &self.kernel_name
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.label.as_str())
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.entries.iter().position(|e| e.label == label).ok_or_else(|| Error::UnknownLabel(label.to_owned()))
    }

    pub fn model(&self, index: usize) -> Result<&DiscreteDistribution> {
        self.entries.get(index).map(|e| &e.model).ok_or(Error::IndexOutOfRange { index, len: self.entries.len() })
    }

    /// Row `index` of the log-density matrix (classes x channels).
    pub(crate) fn log_row(&self, index: usize) -> &[f64] {
        self.entries[index].model.log_probabilities()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(grid: &Arc<EnergyGrid>, p: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(Arc::clone(grid), p.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_libraries() {
        let g = Arc::new(EnergyGrid::linear(2, 0.0, 1.0).unwrap());
        let other = Arc::new(EnergyGrid::linear(2, 0.0, 2.0).unwrap());
        let entry = |l: &str, g: &Arc<EnergyGrid>| LibraryEntry { label: l.into(), model: dist(g, &[0.5, 0.5]) };
        assert!(matches!(ClassLibrary::new(Arc::clone(&g), vec![], "cauchy", 1.0), Err(Error::EmptyLibrary)));
        assert!(matches!(
            ClassLibrary::new(Arc::clone(&g), vec![entry("a", &g), entry("a", &g)], "cauchy", 1.0),
            Err(Error::DuplicateLabel(_))
        ));
        assert!(matches!(
            ClassLibrary::new(Arc::clone(&g), vec![entry("a", &g), entry("b", &other)], "cauchy", 1.0),
            Err(Error::GridMismatch)
        ));
        assert!(ClassLibrary::new(Arc::clone(&g), vec![entry("", &g)], "cauchy", 1.0).is_err());
        assert!(ClassLibrary::new(Arc::clone(&g), vec![entry("a", &g)], "cauchy", 0.0).is_err());
        let lib = ClassLibrary::new(Arc::clone(&g), vec![entry("a", &g), entry("b", &g)], "cauchy", 1.0).unwrap();
        assert_eq!(lib.index_of("b").unwrap(), 1);
        assert!(matches!(lib.index_of("c"), Err(Error::UnknownLabel(_))));
        assert!(matches!(lib.model(2), Err(Error::IndexOutOfRange { index: 2, len: 2 })));
    }
}
