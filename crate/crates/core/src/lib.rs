//! Classification of short-time gamma spectra against reference materials.
//!
//! Each reference material is a long measurement on a fixed energy grid. A
//! discrete kernel density estimate turns it into a channel distribution; a
//! short measurement is assigned to the material whose distribution gives its
//! counts the highest log-likelihood. Short measurements of any duration can
//! be synthesized from a reference by multinomial resampling.
//!
//! ```
//! use std::sync::Arc;
//! use gammaclass::{classify, fit_library, simulate_measurement, EnergyGrid, KdeConfig, SamplerConfig, Spectrum};
//!
//! let grid = Arc::new(EnergyGrid::linear(64, 0.0, 3000.0).unwrap());
//! let peak = |c: usize| -> Vec<u64> { (0..64).map(|i| if i == c { 5000 } else { 20 }).collect() };
//! let refs = vec![
//!     ("a".to_string(), Spectrum::new(Arc::clone(&grid), peak(10)).unwrap()),
//!     ("b".to_string(), Spectrum::new(Arc::clone(&grid), peak(40)).unwrap()),
//! ];
//! let lib = fit_library(&refs, &KdeConfig::default()).unwrap();
//! let short = simulate_measurement(lib.model(1).unwrap(), 0.01, &SamplerConfig::with_seed(7)).unwrap();
//! assert_eq!(classify(&short, &lib).unwrap().predicted_label, "b");
//! ```

pub mod bandwidth;
pub mod classifier;
pub mod error;
pub mod evaluation;
pub mod export;
pub mod io;
pub mod kde;
pub mod library;
pub mod numeric;
pub mod par;
pub mod sampler;
pub mod spectrum;
pub mod synthetic;

pub use bandwidth::{cross_validate, CvConfig, CvResult};
pub use classifier::{
    classify, classify_batch, log_likelihood, reliability_trace, ClassificationReport, ReliabilityTrace,
};
pub use error::{Error, ErrorClass, Result};
pub use evaluation::{accuracy_vs_time, evaluate, self_truths, ConfusionMatrix};
pub use io::{load_library, read_spectrum, save_library, write_spectrum};
pub use kde::{estimate_density, estimate_log_density, fit_library, KdeConfig, Kernel};
pub use library::{ClassLibrary, LibraryEntry};
pub use sampler::{derive_seed, sample_spectrum, simulate_measurement, split_train_test, SamplerConfig};
pub use spectrum::{normalize_spectrum, total_counts, DiscreteDistribution, EnergyGrid, Spectrum, LOG_FLOOR};
