//! Summation and float formatting shared by the estimators and writers.

use serde::ser::{SerializeSeq, Serializer};
use serde_json::value::RawValue;

/// Block length below which [`pairwise_sum`] adds sequentially.
const NAIVE_SUM_THRESHOLD: usize = 128;

/// Pairwise (cascade) summation over a slice.
///
/// The reduction tree depends only on `values.len()`, so results are
/// bit-reproducible no matter how the caller schedules work. The error bound
/// grows as `O(eps log n)` instead of `O(eps n)` for a left fold.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    let n = values.len();
    if n <= NAIVE_SUM_THRESHOLD {
        // four lanes, combined in a fixed order
        let mut acc = [0.0f64; 4];
        let chunks = values.chunks_exact(4);
        let rest = chunks.remainder();
        for c in chunks {
            acc[0] += c[0];
            acc[1] += c[1];
            acc[2] += c[2];
            acc[3] += c[3];
        }
        let mut tail = 0.0;
        for &v in rest {
            tail += v;
        }
        (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
    } else {
        let (lo, hi) = values.split_at(n / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

/// Format with 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(value: f64) -> String {
    if value == 0.0 {
        // keep the sign bit out of machine files
        return "0.0000000000000000e0".to_owned();
    }
    format!("{value:.16e}")
}

/// Serialize a float slice as JSON numbers with 17 significant digits.
pub(crate) fn serialize_f64_slice<S: Serializer>(values: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let mut seq = s.serialize_seq(Some(values.len()))?;
    for &v in values {
        seq.serialize_element(&raw_f64(v).map_err(serde::ser::Error::custom)?)?;
    }
    seq.end()
}

pub(crate) fn serialize_f64<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
    use serde::Serialize;
    raw_f64(*value).map_err(serde::ser::Error::custom)?.serialize(s)
}

fn raw_f64(v: f64) -> Result<Box<RawValue>, String> {
    if !v.is_finite() {
        return Err(format!("cannot serialize non-finite value {v}"));
    }
    RawValue::from_string(format_f64(v)).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_matches_exact_integer_sums() {
        for n in [0usize, 1, 3, 4, 127, 128, 129, 1000, 16384] {
            let v: Vec<f64> = (0..n).map(|i| i as f64).collect();
            let expected = (n * n.saturating_sub(1) / 2) as f64;
            assert_eq!(pairwise_sum(&v), expected, "n = {n}");
        }
    }

    #[test]
    fn pairwise_beats_naive_on_tenths() {
        let v = vec![0.1f64; 1 << 20];
        let exact = 0.1 * (1u64 << 20) as f64;
        let naive: f64 = v.iter().sum();
        let pairwise = pairwise_sum(&v);
        assert!((pairwise - exact).abs() <= (naive - exact).abs());
        assert!((pairwise - exact).abs() < 1e-8);
    }

    #[test]
    fn formatted_floats_round_trip() {
        for v in [0.0, -0.0, 1.0, 0.1, -4.017383521085972, 5e-324, f64::MAX, 0.00065] {
            let s = format_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), if v == 0.0 { 0 } else { v.to_bits() }, "{s}");
        }
    }
}
