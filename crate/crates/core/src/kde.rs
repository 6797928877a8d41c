//! Discrete kernel density estimation on a fixed energy grid.
//!
//! For a reference spectrum with counts `c_i` at normalized energies `x_i`, the
//! density at channel `j` is proportional to `sum_i c_i k((x_j - x_i) / h)`.
//! The grid is discrete, so the result is renormalized to unit mass over the
//! channels; the usual `1 / (n h)` prefactor cancels in that step and is not
//! applied.

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::library::{ClassLibrary, LibraryEntry};
use crate::numeric::pairwise_sum;
use crate::par;
use crate::spectrum::{DiscreteDistribution, Spectrum};

/// Bandwidth used when none is chosen by cross-validation.
pub const DEFAULT_BANDWIDTH: f64 = 0.00065;
pub const DEFAULT_KERNEL: Kernel = Kernel::Cauchy;
/// Smallest admissible cutoff radius, in bandwidths.
pub const MIN_CUTOFF_RADIUS: f64 = 8.0;

const FRAC_1_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
// exp(-z^2 / 2) rounds to exactly zero beyond this
const GAUSSIAN_ZERO_Z2: f64 = 1492.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kernel {
    Gaussian,
    Cauchy,
}

impl Kernel {
    pub const ALL: [Kernel; 2] = [Kernel::Cauchy, Kernel::Gaussian];

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Cauchy => "cauchy",
        }
    }

    #[inline]
    pub fn evaluate(self, x: f64) -> f64 {
        match self {
            Kernel::Gaussian => gaussian(x),
            Kernel::Cauchy => cauchy(x),
        }
    }

    /// Check that the kernel integrates to one over the real line.
    ///
    /// Uses composite Simpson quadrature after mapping the line onto
    /// `(-1, 1)` with `x = t / (1 - t^2)`, which keeps the Cauchy tails inside
    /// the integration domain. The result is computed once per kernel.
    pub fn verify_normalization(self) -> Result<()> {
        static GAUSSIAN: OnceLock<f64> = OnceLock::new();
        static CAUCHY: OnceLock<f64> = OnceLock::new();
        let cell = match self {
            Kernel::Gaussian => &GAUSSIAN,
            Kernel::Cauchy => &CAUCHY,
        };
        let mass = *cell.get_or_init(|| real_line_integral(|x| self.evaluate(x)));
        if (mass - 1.0).abs() > 1e-6 {
            return Err(Error::InvalidArgument(format!("kernel {self} integrates to {mass}, not 1")));
        }
        Ok(())
    }
}

#[inline]
fn gaussian(x: f64) -> f64 {
    let z2 = x * x;
    if z2 > GAUSSIAN_ZERO_Z2 {
        0.0
    } else {
        FRAC_1_SQRT_2PI * (-0.5 * z2).exp()
    }
}

#[inline]
fn cauchy(x: f64) -> f64 {
    std::f64::consts::FRAC_1_PI / (1.0 + x * x)
}

fn real_line_integral(f: impl Fn(f64) -> f64) -> f64 {
    const INTERVALS: usize = 200_000;
    let step = 2.0 / INTERVALS as f64;
    let g = |t: f64| {
        let d = 1.0 - t * t;
        if d <= 0.0 {
            // at t = +-1 the integrand tends to 2 * lim x^2 f(x)
            let far = 1e150f64.copysign(t);
            return 2.0 * far * far * f(far);
        }
        let x = t / d;
        f(x) * (1.0 + t * t) / (d * d)
    };
    let mut acc = Vec::with_capacity(INTERVALS + 1);
    for i in 0..=INTERVALS {
        let t = -1.0 + step * i as f64;
        let w = if i == 0 || i == INTERVALS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc.push(w * g(t));
    }
    pairwise_sum(&acc) * step / 3.0
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Kernel::Gaussian),
            "cauchy" => Ok(Kernel::Cauchy),
            other => Err(Error::InvalidArgument(format!("unknown kernel `{other}`"))),
        }
    }
}

/// Kernel, bandwidth (normalized-axis units) and optional Gaussian cutoff.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    kernel: Kernel,
    bandwidth: f64,
    cutoff_radius: Option<f64>,
}

impl KdeConfig {
    pub fn new(kernel: Kernel, bandwidth: f64) -> Result<Self> {
        if !(bandwidth.is_finite() && bandwidth > 0.0) {
            return Err(Error::InvalidArgument(format!("bandwidth {bandwidth} must be positive")));
        }
        kernel.verify_normalization()?;
        Ok(Self { kernel, bandwidth, cutoff_radius: None })
    }

    /// Ignore sources further than `radius` bandwidths away. Gaussian only.
    pub fn with_cutoff(mut self, radius: f64) -> Result<Self> {
        if self.kernel != Kernel::Gaussian {
            return Err(Error::InvalidArgument(format!(
                "cutoff is only supported for the gaussian kernel, not {}",
                self.kernel
            )));
        }
        if !(radius.is_finite() && radius >= MIN_CUTOFF_RADIUS) {
            return Err(Error::InvalidArgument(format!("cutoff radius {radius} must be at least {MIN_CUTOFF_RADIUS}")));
        }
        self.cutoff_radius = Some(radius);
        Ok(self)
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn cutoff_radius(&self) -> Option<f64> {
        self.cutoff_radius
    }
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self { kernel: DEFAULT_KERNEL, bandwidth: DEFAULT_BANDWIDTH, cutoff_radius: None }
    }
}

/// Smoothed channel distribution of a fully measured spectrum.
pub fn estimate_density(s: &Spectrum, config: &KdeConfig) -> Result<DiscreteDistribution> {
    if s.total_counts() == 0 {
        return Err(Error::EmptySpectrum);
    }
    let x = s.grid().normalized();
    let (src_x, src_c): (Vec<f64>, Vec<f64>) = s.nonzero_channels().map(|i| (x[i], s.counts()[i] as f64)).unzip();
    let weights = match config.kernel {
        Kernel::Gaussian => accumulate(x, &src_x, &src_c, config, gaussian),
        Kernel::Cauchy => accumulate(x, &src_x, &src_c, config, cauchy),
    };
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(Error::NonFiniteDensity);
    }
    DiscreteDistribution::from_weights(Arc::clone(s.grid()), weights)
}

/// [`estimate_density`] with the floored log-probabilities materialized.
pub fn estimate_log_density(s: &Spectrum, config: &KdeConfig) -> Result<DiscreteDistribution> {
    let d = estimate_density(s, config)?;
    d.log_probabilities();
    Ok(d)
}

fn accumulate<K>(x: &[f64], src_x: &[f64], src_c: &[f64], config: &KdeConfig, k: K) -> Vec<f64>
where
    K: Fn(f64) -> f64 + Sync + Send,
{
    let inv_h = 1.0 / config.bandwidth;
    let reach = config.cutoff_radius.map(|r| r * config.bandwidth);
    par::map_indices_with(
        x.len(),
        || Vec::with_capacity(src_x.len()),
        |terms: &mut Vec<f64>, j| {
            let xj = x[j];
            let (lo, hi) = match reach {
                Some(r) => (src_x.partition_point(|&xi| xi < xj - r), src_x.partition_point(|&xi| xi <= xj + r)),
                None => (0, src_x.len()),
            };
            terms.clear();
            terms.extend(src_x[lo..hi].iter().zip(&src_c[lo..hi]).map(|(&xi, &ci)| ci * k((xj - xi) * inv_h)));
            pairwise_sum(terms)
        },
    )
}

/// Fit one density model per labelled reference spectrum.
pub fn fit_library(references: &[(String, Spectrum)], config: &KdeConfig) -> Result<ClassLibrary> {
    let (_, first) = references.first().ok_or(Error::EmptyLibrary)?;
    let grid = Arc::clone(first.grid());
    let entries = references
        .iter()
        .map(|(label, s)| Ok(LibraryEntry { label: label.clone(), model: estimate_log_density(s, config)? }))
        .collect::<Result<Vec<_>>>()?;
    ClassLibrary::new(grid, entries, config.kernel.name(), config.bandwidth)
}
