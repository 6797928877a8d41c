//! Maximum log-likelihood scoring of short-time spectra.
//!
//! The score of a spectrum with counts `c'` against class `S` is
//! `sum_i c'_i ln f_S(i)`, i.e. one row of the log-density matrix times the
//! count vector. Sums run channel-ascending through [`pairwise_sum`], so a
//! score is bit-stable for a given input.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::library::ClassLibrary;
use crate::numeric::{pairwise_sum, serialize_f64, serialize_f64_slice};
use crate::par;
use crate::sampler::{multinomial, rng_for, SamplerConfig};
use crate::spectrum::{same_grid, DiscreteDistribution, Spectrum};

/// Above this fraction of occupied channels the dense product is used.
pub const DENSE_FRACTION: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationReport {
    #[serde(rename = "label")]
    pub predicted_label: String,
    #[serde(rename = "index")]
    pub predicted_index: usize,
    #[serde(serialize_with = "serialize_f64_slice")]
    pub scores: Vec<f64>,
    /// Best score minus runner-up; zero for a single-class library.
    #[serde(serialize_with = "serialize_f64")]
    pub margin: f64,
}

/// Log-likelihood difference `D(t)` of classes `k` and `l` along one growing measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ReliabilityTrace {
    pub class_pair: (usize, usize),
    pub times: Vec<f64>,
    pub differences: Vec<f64>,
}

/// `sum_i counts_i * log_probabilities_i` over occupied channels.
pub fn log_likelihood(short: &Spectrum, model: &DiscreteDistribution) -> Result<f64> {
    if !same_grid(short.grid(), model.grid()) {
        return Err(Error::GridMismatch);
    }
    Ok(sparse_score(short.counts(), model.log_probabilities()))
}

fn sparse_score(counts: &[u64], log_row: &[f64]) -> f64 {
    let terms: Vec<f64> = counts.iter().zip(log_row).filter(|(&c, _)| c > 0).map(|(&c, &lp)| c as f64 * lp).collect();
    pairwise_sum(&terms)
}

/// Score a spectrum against every class and pick the best (lowest index on ties).
pub fn classify(short: &Spectrum, library: &ClassLibrary) -> Result<ClassificationReport> {
    if library.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    if !same_grid(short.grid(), library.grid()) {
        return Err(Error::GridMismatch);
    }
    let scores = score_matrix(short, library);
    Ok(report(scores, library))
}

fn score_matrix(short: &Spectrum, library: &ClassLibrary) -> Vec<f64> {
    let counts = short.counts();
    let occupied: Vec<usize> = short.nonzero_channels().collect();
    let dense = occupied.len() as f64 > DENSE_FRACTION * counts.len() as f64;
    let mut terms = Vec::with_capacity(if dense { counts.len() } else { occupied.len() });
    let weights: Vec<f64> = if dense {
        counts.iter().map(|&c| c as f64).collect()
    } else {
        occupied.iter().map(|&i| counts[i] as f64).collect()
    };
    (0..library.len())
        .map(|row| {
            let log_row = library.log_row(row);
            terms.clear();
            if dense {
                terms.extend(weights.iter().zip(log_row).map(|(w, lp)| w * lp));
            } else {
                terms.extend(occupied.iter().zip(&weights).map(|(&i, w)| w * log_row[i]));
            }
            pairwise_sum(&terms)
        })
        .collect()
}

fn report(scores: Vec<f64>, library: &ClassLibrary) -> ClassificationReport {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    let runner_up =
        scores.iter().enumerate().filter(|&(i, _)| i != best).map(|(_, &s)| s).fold(f64::NEG_INFINITY, f64::max);
    let margin = if runner_up.is_finite() { scores[best] - runner_up } else { 0.0 };
    ClassificationReport {
        predicted_label: library.entries()[best].label.clone(),
        predicted_index: best,
        scores,
        margin,
    }
}

/// [`classify`] over many spectra; output order follows input order.
pub fn classify_batch(shorts: &[Spectrum], library: &ClassLibrary) -> Result<Vec<ClassificationReport>> {
    par::map_slice(shorts, |s| classify(s, library)).into_iter().collect()
}

/// Sample one nested photon stream from `source` and record `D(t)` at each time.
///
/// The spectrum at a later time always extends the spectrum at an earlier
/// one, as in a single measurement that keeps running.
pub fn reliability_trace(
    source: &DiscreteDistribution,
    library: &ClassLibrary,
    k: usize,
    l: usize,
    time_grid: &[f64],
    config: &SamplerConfig,
    seed: u64,
) -> Result<ReliabilityTrace> {
    for index in [k, l] {
        if index >= library.len() {
            return Err(Error::IndexOutOfRange { index, len: library.len() });
        }
    }
    if k == l {
        return Err(Error::InvalidArgument(format!("class pair ({k}, {l}) must be distinct")));
    }
    if !same_grid(source.grid(), library.grid()) {
        return Err(Error::GridMismatch);
    }
    if time_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || time_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument("time grid must be non-negative and strictly increasing".into()));
    }
    let mut rng = rng_for(seed);
    let mut cumulative = vec![0u64; source.channel_count()];
    let mut drawn = 0u64;
    let row_k = library.log_row(k);
    let row_l = library.log_row(l);
    let mut differences = Vec::with_capacity(time_grid.len());
    for &t in time_grid {
        let target = config.draws_for(t);
        if target > drawn {
            let step = multinomial(source.probabilities(), target - drawn, &mut rng);
            for (c, s) in cumulative.iter_mut().zip(step) {
                *c += s;
            }
            drawn = target;
        }
        differences.push(sparse_score(&cumulative, row_k) - sparse_score(&cumulative, row_l));
    }
    Ok(ReliabilityTrace { class_pair: (k, l), times: time_grid.to_vec(), differences })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::LibraryEntry;
    use crate::sampler::sample_spectrum;
    use crate::spectrum::{EnergyGrid, LOG_FLOOR};
    use std::sync::Arc;

    fn grid(n: usize) -> Arc<EnergyGrid> {
        Arc::new(EnergyGrid::linear(n, 0.0, 10.0).unwrap())
    }

    fn library(g: &Arc<EnergyGrid>, rows: &[&[f64]]) -> ClassLibrary {
        let entries = rows
            .iter()
            .enumerate()
            .map(|(i, p)| LibraryEntry {
                label: format!("m{i}"),
                model: DiscreteDistribution::new(Arc::clone(g), p.to_vec()).unwrap(),
            })
            .collect();
        ClassLibrary::new(Arc::clone(g), entries, "cauchy", 0.00065).unwrap()
    }

    #[test]
    fn empty_spectrum_scores_zero() {
        let g = grid(3);
        let lib = library(&g, &[&[0.2, 0.3, 0.5], &[0.5, 0.5, 0.0]]);
        let r = classify(&Spectrum::zeros(Arc::clone(&g)), &lib).unwrap();
        assert_eq!(r.scores, vec![0.0, 0.0]);
        assert_eq!(r.predicted_index, 0);
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn hand_computed_log_likelihood() {
        let g = grid(3);
        let model = DiscreteDistribution::new(Arc::clone(&g), vec![0.2, 0.3, 0.5]).unwrap();
        let s = Spectrum::new(Arc::clone(&g), vec![1, 2, 0]).unwrap();
        let oracle = 0.2f64.ln() + 2.0 * 0.3f64.ln();
        let ll = log_likelihood(&s, &model).unwrap();
        assert!((ll - oracle).abs() < 1e-12);
        assert!((ll - -4.017383521085972).abs() < 1e-12);
    }

    #[test]
    fn floor_propagates() {
        let g = grid(3);
        let model = DiscreteDistribution::new(Arc::clone(&g), vec![0.5, 0.5, 0.0]).unwrap();
        let s = Spectrum::new(Arc::clone(&g), vec![0, 0, 7]).unwrap();
        assert_eq!(log_likelihood(&s, &model).unwrap(), 7.0 * LOG_FLOOR);
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let lib = library(&grid(3), &[&[0.2, 0.3, 0.5]]);
        let other = Arc::new(EnergyGrid::linear(3, 0.0, 11.0).unwrap());
        let s = Spectrum::new(other, vec![1, 1, 1]).unwrap();
        assert!(matches!(classify(&s, &lib), Err(Error::GridMismatch)));
        assert!(matches!(log_likelihood(&s, lib.model(0).unwrap()), Err(Error::GridMismatch)));
    }

    #[test]
    fn ties_go_to_first_entry() {
        let g = grid(3);
        let lib = library(&g, &[&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5]]);
        let r = classify(&Spectrum::new(Arc::clone(&g), vec![3, 1, 4]).unwrap(), &lib).unwrap();
        assert_eq!(r.predicted_index, 0);
        assert_eq!(r.predicted_label, "m0");
        assert_eq!(r.margin, 0.0);
    }

    #[test]
    fn three_class_scores_match_scalar_oracle() {
        let g = grid(3);
        let rows: [&[f64]; 3] = [&[0.2, 0.3, 0.5], &[0.6, 0.3, 0.1], &[0.1, 0.8, 0.1]];
        let lib = library(&g, &rows);
        let s = Spectrum::new(Arc::clone(&g), vec![1, 2, 0]).unwrap();
        let r = classify(&s, &lib).unwrap();
        for (score, p) in r.scores.iter().zip(rows) {
            let oracle = p[0].ln() + 2.0 * p[1].ln();
            assert!((score - oracle).abs() < 1e-12);
        }
        assert_eq!(r.predicted_index, 2);
        assert!((r.margin - (r.scores[2] - r.scores[1])).abs() < 1e-15);
    }

    #[test]
    fn dense_and_sparse_paths_agree() {
        let g = grid(8);
        let lib = library(&g, &[&[0.1, 0.1, 0.1, 0.2, 0.2, 0.1, 0.1, 0.1], &[0.3, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]]);
        let sparse = Spectrum::new(Arc::clone(&g), vec![5, 0, 0, 0, 0, 0, 0, 0]).unwrap();
        let dense = Spectrum::new(Arc::clone(&g), vec![5, 1, 2, 3, 4, 5, 6, 7]).unwrap();
        for s in [sparse, dense] {
            let r = classify(&s, &lib).unwrap();
            for (i, score) in r.scores.iter().enumerate() {
                let naive = log_likelihood(&s, lib.model(i).unwrap()).unwrap();
                assert!((score - naive).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn batch_of_one_and_none() {
        let g = grid(3);
        let lib = library(&g, &[&[0.2, 0.3, 0.5], &[0.6, 0.3, 0.1]]);
        assert!(classify_batch(&[], &lib).unwrap().is_empty());
        let s = Spectrum::new(Arc::clone(&g), vec![0, 1, 9]).unwrap();
        assert_eq!(classify_batch(std::slice::from_ref(&s), &lib).unwrap(), vec![classify(&s, &lib).unwrap()]);
    }

    #[test]
    fn self_sample_is_recognized() {
        let g = grid(4);
        let rows: [&[f64]; 3] = [&[0.7, 0.1, 0.1, 0.1], &[0.1, 0.7, 0.1, 0.1], &[0.1, 0.1, 0.1, 0.7]];
        let lib = library(&g, &rows);
        for k in 0..3 {
            let s = sample_spectrum(lib.model(k).unwrap(), 1_000_000, k as u64);
            let r = classify(&s, &lib).unwrap();
            assert_eq!(r.predicted_index, k);
            assert!(r.margin > 0.0);
        }
    }

    #[test]
    fn trace_edge_cases() {
        let g = grid(3);
        let lib = library(&g, &[&[0.2, 0.3, 0.5], &[0.2, 0.3, 0.5], &[0.6, 0.3, 0.1]]);
        let cfg = SamplerConfig::default();
        let source = lib.model(0).unwrap();
        let t = reliability_trace(source, &lib, 0, 1, &[0.0, 0.01, 0.1, 1.0], &cfg, 5).unwrap();
        assert_eq!(t.differences, vec![0.0; 4]);
        let t = reliability_trace(source, &lib, 0, 2, &[0.0, 0.5], &cfg, 5).unwrap();
        assert_eq!(t.differences[0], 0.0);
        assert!(t.differences[1] > 0.0);
        assert!(matches!(
            reliability_trace(source, &lib, 0, 3, &[1.0], &cfg, 5),
            Err(Error::IndexOutOfRange { index: 3, len: 3 })
        ));
        assert!(reliability_trace(source, &lib, 1, 1, &[1.0], &cfg, 5).is_err());
        assert!(reliability_trace(source, &lib, 0, 2, &[1.0, 0.5], &cfg, 5).is_err());
    }

    #[test]
    fn trace_is_nested_and_deterministic() {
        let g = grid(3);
        let lib = library(&g, &[&[0.2, 0.3, 0.5], &[0.6, 0.3, 0.1]]);
        let cfg = SamplerConfig::default();
        let times = [0.1, 0.2, 0.4];
        let a = reliability_trace(lib.model(0).unwrap(), &lib, 0, 1, &times, &cfg, 11).unwrap();
        let b = reliability_trace(lib.model(0).unwrap(), &lib, 0, 1, &times, &cfg, 11).unwrap();
        assert_eq!(a, b);
        // the first prefix does not depend on later grid points
        let c = reliability_trace(lib.model(0).unwrap(), &lib, 0, 1, &times[..1], &cfg, 11).unwrap();
        assert_eq!(c.differences[0], a.differences[0]);
    }

    #[test]
    fn report_serializes_with_full_precision() {
        let g = grid(3);
        let lib = library(&g, &[&[0.2, 0.3, 0.5], &[0.6, 0.3, 0.1]]);
        let r = classify(&Spectrum::new(Arc::clone(&g), vec![1, 2, 0]).unwrap(), &lib).unwrap();
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.starts_with("{\"label\":\"m1\",\"index\":1,\"scores\":["), "{json}");
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["scores"][0].as_f64().unwrap(), r.scores[0]);
        assert_eq!(v["margin"].as_f64().unwrap(), r.margin);
    }
}
