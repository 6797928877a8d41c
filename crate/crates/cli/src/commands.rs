use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use clap::Args;
use gammaclass::bandwidth::log_spaced;
use gammaclass::export::{
    write_accuracy_csv, write_confusion_csv, write_confusion_json, write_cv_csv, write_cv_json, write_json,
    write_trace_csv, FileReport,
};
use gammaclass::io::{load_corpus, CorpusManifest, ManifestEntry, Role};
use gammaclass::numeric::format_f64;
use gammaclass::synthetic::{demo_recipes, detector_grid};
use gammaclass::{
    accuracy_vs_time, classify_batch, cross_validate, derive_seed, fit_library, load_library, normalize_spectrum,
    read_spectrum, reliability_trace, sample_spectrum, save_library, self_truths, write_spectrum, ClassLibrary,
    CvConfig, DiscreteDistribution, Error, KdeConfig, Kernel, ReliabilityTrace, Result, SamplerConfig,
};

use crate::Global;

/// Six significant digits for terminal summaries.
fn human(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp).max(0) as usize, v)
    } else {
        format!("{v:.5e}")
    }
}

fn sampler(g: &Global) -> Result<SamplerConfig> {
    SamplerConfig::new(g.counts_per_second, g.seed)
}

fn kde(g: &Global, cutoff: Option<f64>) -> Result<KdeConfig> {
    let c = KdeConfig::new(g.kernel, g.bandwidth)?;
    match cutoff {
        Some(r) => c.with_cutoff(r),
        None => Ok(c),
    }
}

fn positive(s: &str) -> std::result::Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(v) => Err(format!("{v} is not a positive number")),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Corpus manifest; entries with role "train" are fitted
    #[arg(long)]
    manifest: PathBuf,
    /// Library file name inside the output directory
    #[arg(long, default_value = "library.json")]
    out: PathBuf,
    /// Gaussian only: ignore sources further than this many bandwidths
    #[arg(long)]
    cutoff: Option<f64>,
}

pub fn fit(g: &Global, a: &FitArgs) -> Result<()> {
    let corpus = load_corpus(&a.manifest)?;
    let mut seen = BTreeSet::new();
    let mut refs = Vec::new();
    for (entry, spectrum) in corpus.with_role(Role::Train) {
        if !seen.insert(entry.label.as_str()) {
            return Err(Error::DuplicateLabel(entry.label.clone()));
        }
        refs.push((entry.label.clone(), spectrum.clone()));
    }
    if let Some(e) = corpus.manifest.entries.iter().find(|e| !seen.contains(e.label.as_str())) {
        return Err(Error::InvalidArgument(format!("label `{}` has no train spectrum", e.label)));
    }
    let lib = fit_library(&refs, &kde(g, a.cutoff)?)?;
    let path = g.output_dir.join(&a.out);
    save_library(&lib, &path)?;
    println!(
        "fitted {} classes on {} channels (kernel {}, bandwidth {})",
        lib.len(),
        lib.grid().channel_count(),
        lib.kernel_name(),
        human(lib.bandwidth())
    );
    for label in lib.labels() {
        println!("  {label}");
    }
    println!("wrote {}", path.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct CvArgs {
    /// Fully measured reference spectrum (CSV)
    #[arg(long)]
    spectrum: PathBuf,
    /// Smallest bandwidth of the log-spaced grid
    #[arg(long, default_value_t = 1e-5, value_parser = positive)]
    h_min: f64,
    /// Largest bandwidth of the log-spaced grid
    #[arg(long, default_value_t = 1e-1, value_parser = positive)]
    h_max: f64,
    /// Number of grid points
    #[arg(long, default_value_t = 25)]
    h_points: usize,
    /// Explicit bandwidths, overriding the log-spaced grid
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    bandwidths: Vec<f64>,
    /// Kernels to compare
    #[arg(long, value_delimiter = ',', default_values_t = Kernel::ALL)]
    kernels: Vec<Kernel>,
    /// Train/test splits averaged per cell
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Fraction of photons in the train part
    #[arg(long, default_value_t = 0.5)]
    train_fraction: f64,
}

pub fn cv(g: &Global, a: &CvArgs) -> Result<()> {
    let s = read_spectrum(&a.spectrum)?;
    let bandwidth_grid = if a.bandwidths.is_empty() {
        if a.h_points == 0 || a.h_min > a.h_max || (a.h_points == 1 && a.h_min != a.h_max) {
            return Err(Error::InvalidArgument("bandwidth grid bounds are inconsistent".into()));
        }
        log_spaced(a.h_min, a.h_max, a.h_points)
    } else {
        a.bandwidths.clone()
    };
    let config = CvConfig {
        bandwidth_grid,
        kernels: a.kernels.clone(),
        repeats: a.repeats,
        train_fraction: a.train_fraction,
        seed: g.seed,
    };
    let r = cross_validate(&s, &config)?;
    write_cv_csv(&r, g.output_dir.join("cv.csv"))?;
    write_cv_json(&r, g.output_dir.join("cv.json"))?;
    println!(
        "best: kernel {}, bandwidth {}, mean log-likelihood per photon {}",
        r.best_kernel,
        human(r.best_bandwidth),
        human(r.best_score)
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct SampleArgs {
    /// Library to sample a class model from (with --label)
    #[arg(long, requires = "label", conflicts_with = "spectrum")]
    library: Option<PathBuf>,
    /// Class label; names the output files when sampling a spectrum
    #[arg(long)]
    label: Option<String>,
    /// Spectrum file whose normalized counts are resampled
    #[arg(long, required_unless_present = "library")]
    spectrum: Option<PathBuf>,
    /// Simulated measurement time in seconds
    #[arg(long, value_parser = positive)]
    duration: f64,
    /// Number of spectra to write
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    count: u64,
}

pub fn sample(g: &Global, a: &SampleArgs) -> Result<()> {
    let (label, model) = match (&a.library, &a.spectrum) {
        (Some(lib), _) => {
            let lib = load_library(lib)?;
            let label = a.label.clone().expect("clap enforces --label");
            let model = lib.model(lib.index_of(&label)?)?.clone();
            (label, model)
        }
        (None, Some(path)) => {
            let label = match &a.label {
                Some(l) => l.clone(),
                None => path.file_stem().map_or("spectrum".into(), |s| s.to_string_lossy().into_owned()),
            };
            (label, normalize_spectrum(&read_spectrum(path)?)?)
        }
        (None, None) => unreachable!("clap enforces a source"),
    };
    let cfg = sampler(g)?;
    let draws = cfg.draws_for(a.duration);
    let width = a.count.to_string().len().max(4);
    let stem = file_safe(&label);
    let mut entries = Vec::with_capacity(a.count as usize);
    for i in 0..a.count {
        let seed = derive_seed(g.seed, &[i]);
        let file = format!("{stem}_{i:0width$}.csv");
        let s = sample_spectrum(&model, draws, seed);
        write_spectrum(&s, g.output_dir.join(&file))?;
        entries.push(ManifestEntry {
            path: file,
            label: label.clone(),
            role: Role::Test,
            duration_s: Some(a.duration),
            seed: Some(seed),
        });
    }
    let manifest = CorpusManifest { base_dir: String::new(), entries };
    let path = g.output_dir.join("manifest.json");
    manifest.save(&path)?;
    println!("wrote {} spectra of {draws} counts each; manifest {}", a.count, path.display());
    Ok(())
}

fn file_safe(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

#[derive(Args, Debug)]
pub struct ClassifyArgs {
    /// Library produced by `fit`
    #[arg(long)]
    library: PathBuf,
    /// Report file name inside the output directory
    #[arg(long, default_value = "reports.json")]
    out: PathBuf,
    /// Spectrum files to classify
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

pub fn classify(g: &Global, a: &ClassifyArgs) -> Result<()> {
    let lib = load_library(&a.library)?;
    let mut first_error = None;
    let mut names = Vec::new();
    let mut spectra = Vec::new();
    for path in &a.files {
        match read_spectrum(path).and_then(|s| check_grid(&s, &lib).map(|_| s)) {
            Ok(s) => {
                names.push(path.display().to_string());
                spectra.push(s);
            }
            Err(e) => {
                eprintln!("{}: {e}", path.display());
                first_error.get_or_insert(e);
            }
        }
    }
    let reports = classify_batch(&spectra, &lib)?;
    let tagged: Vec<FileReport> =
        names.iter().zip(&reports).map(|(file, report)| FileReport { file, report }).collect();
    write_json(&tagged, &g.output_dir.join(&a.out))?;
    for t in &tagged {
        println!("{}\t{}\tmargin {}", t.file, t.report.predicted_label, human(t.report.margin));
    }
    match first_error {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn check_grid(s: &gammaclass::Spectrum, lib: &ClassLibrary) -> Result<()> {
    if s.grid().as_ref() == lib.grid().as_ref() {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// Truth distributions: normalized spectra from a manifest, or the library's own models.
fn truths(lib: &ClassLibrary, manifest: Option<&Path>) -> Result<Vec<(String, DiscreteDistribution)>> {
    let Some(path) = manifest else {
        return Ok(self_truths(lib));
    };
    let corpus = load_corpus(path)?;
    corpus
        .manifest
        .entries
        .iter()
        .zip(&corpus.spectra)
        .map(|(e, s)| {
            check_grid(s, lib)?;
            Ok((e.label.clone(), normalize_spectrum(s)?))
        })
        .collect()
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Library produced by `fit`
    #[arg(long)]
    library: PathBuf,
    /// Manifest of spectra to resample test data from, one per label;
    /// defaults to the library's own models
    #[arg(long)]
    truth_manifest: Option<PathBuf>,
    /// Simulated measurement time of each test spectrum in seconds
    #[arg(long, default_value_t = 0.5, value_parser = positive)]
    duration: f64,
    /// Test spectra per class
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
    per_class: u64,
    /// Also write accuracy.csv over these durations (strictly increasing)
    #[arg(long, value_delimiter = ',', value_parser = positive)]
    durations: Vec<f64>,
}

pub fn evaluate(g: &Global, a: &EvaluateArgs) -> Result<()> {
    let lib = load_library(&a.library)?;
    let truth = truths(&lib, a.truth_manifest.as_deref())?;
    let cfg = sampler(g)?;
    let per_class = a.per_class as usize;
    let cm = gammaclass::evaluate(&lib, &truth, per_class, a.duration, &cfg)?;
    write_confusion_csv(&cm, g.output_dir.join("confusion.csv"))?;
    write_confusion_json(&cm, g.output_dir.join("confusion.json"))?;
    println!("overall accuracy at {} s: {}", human(a.duration), human(cm.overall_accuracy));
    for (label, acc) in cm.labels.iter().zip(&cm.per_class_accuracy) {
        if let Some(acc) = acc {
            println!("  {label}\t{}", human(*acc));
        }
    }
    if !a.durations.is_empty() {
        let curve = accuracy_vs_time(&lib, &truth, &a.durations, per_class, &cfg)?;
        write_accuracy_csv(&curve, g.output_dir.join("accuracy.csv"))?;
        for (t, acc) in &curve {
            println!("  {} s\t{}", human(*t), human(*acc));
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct CurveArgs {
    /// Library produced by `fit`
    #[arg(long)]
    library: PathBuf,
    /// Class the photons are drawn from
    #[arg(long)]
    truth_label: String,
    /// Competing class
    #[arg(long)]
    vs_label: String,
    /// First time point in seconds
    #[arg(long, default_value_t = 0.03)]
    tmin: f64,
    /// Last time point in seconds
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    tmax: f64,
    /// Number of evenly spaced time points
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..))]
    points: u64,
    /// Independent photon streams
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
}

pub fn curve(g: &Global, a: &CurveArgs) -> Result<()> {
    let lib = load_library(&a.library)?;
    let k = lib.index_of(&a.truth_label)?;
    let l = lib.index_of(&a.vs_label)?;
    let n = a.points as usize;
    if !(a.tmin.is_finite() && a.tmin >= 0.0 && (a.tmin < a.tmax || n == 1)) {
        return Err(Error::InvalidArgument(format!("need 0 <= tmin < tmax, got {} and {}", a.tmin, a.tmax)));
    }
    let times: Vec<f64> = if n == 1 {
        vec![a.tmin]
    } else {
        (0..n).map(|i| a.tmin + (a.tmax - a.tmin) * i as f64 / (n - 1) as f64).collect()
    };
    let cfg = sampler(g)?;
    let source = lib.model(k)?;
    let width = a.seeds.to_string().len().max(3);
    let mut sum = vec![0.0; n];
    for s in 0..a.seeds {
        let trace = reliability_trace(source, &lib, k, l, &times, &cfg, derive_seed(g.seed, &[s]))?;
        for (acc, d) in sum.iter_mut().zip(&trace.differences) {
            *acc += d;
        }
        write_trace_csv(&trace, g.output_dir.join(format!("curve_seed{s:0width$}.csv")))?;
    }
    let mean =
        ReliabilityTrace { class_pair: (k, l), times, differences: sum.iter().map(|v| v / a.seeds as f64).collect() };
    write_trace_csv(&mean, g.output_dir.join("curve_mean.csv"))?;
    let last = mean.differences.last().copied().unwrap_or(0.0);
    println!(
        "mean D at {} s over {} streams: {} ({} preferred)",
        human(*mean.times.last().unwrap_or(&0.0)),
        a.seeds,
        format_f64(last),
        if last >= 0.0 { &a.truth_label } else { &a.vs_label }
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Photons in each reference spectrum
    #[arg(long, default_value_t = 200_000_000)]
    counts: u64,
}

pub fn synth(g: &Global, a: &SynthArgs) -> Result<()> {
    let grid = detector_grid();
    let mut entries = Vec::new();
    for (i, recipe) in demo_recipes().iter().enumerate() {
        let s = recipe.measure(&grid, a.counts, derive_seed(g.seed, &[i as u64]))?;
        let file = format!("{}.csv", file_safe(&recipe.name));
        write_spectrum(&s, g.output_dir.join(&file))?;
        entries.push(ManifestEntry {
            path: file,
            label: recipe.name.clone(),
            role: Role::Train,
            duration_s: None,
            seed: None,
        });
    }
    let path = g.output_dir.join("manifest.json");
    CorpusManifest { base_dir: String::new(), entries }.save(&path)?;
    println!("wrote {} reference spectra; manifest {}", demo_recipes().len(), path.display());
    Ok(())
}
