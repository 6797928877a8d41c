//! Spectrum CSV files, class library documents and corpus manifests.
//!
//! Spectrum files use a strict dialect: UTF-8, LF line endings, comma
//! separators and the mandatory header `channel,energy_kev,counts`. Channels
//! are 0-based and contiguous, energies strictly increasing, counts
//! non-negative integers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{ClassLibrary, LibraryEntry};
use crate::numeric::{format_f64, serialize_f64, serialize_f64_slice};
use crate::spectrum::{DiscreteDistribution, EnergyGrid, Spectrum};

pub const SPECTRUM_HEADER: &str = "channel,energy_kev,counts";
pub const LIBRARY_FORMAT_VERSION: u64 = 1;

pub fn read_spectrum(path: impl AsRef<Path>) -> Result<Spectrum> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .flexible(true)
        .from_reader(file);

    let parse = |line: u64, message: String| Error::Parse { path: path.to_owned(), line, message };
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(path, e))?,
        None => return Err(parse(1, "empty file, expected header".into())),
    };
    let header_line: Vec<&str> = header.iter().collect();
    if header_line.last().is_some_and(|f| f.ends_with('\r')) {
        return Err(parse(1, "CRLF line endings are not accepted".into()));
    }
    if header_line.join(",") != SPECTRUM_HEADER {
        return Err(parse(1, format!("expected header `{SPECTRUM_HEADER}`")));
    }

    let mut energies = Vec::new();
    let mut counts = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(parse(line, format!("expected 3 fields, found {}", record.len())));
        }
        if record[2].ends_with('\r') {
            return Err(parse(line, "CRLF line endings are not accepted".into()));
        }
        let channel: u64 =
            record[0].parse().map_err(|_| parse(line, format!("channel `{}` is not an integer", &record[0])))?;
        if channel != counts.len() as u64 {
            return Err(parse(line, format!("expected channel {}, found {channel}", counts.len())));
        }
        let energy: f64 =
            record[1].parse().map_err(|_| parse(line, format!("energy `{}` is not a number", &record[1])))?;
        let grid_error = |message: String| Error::Grid { path: path.to_owned(), line, message };
        if !(energy.is_finite() && energy >= 0.0) {
            return Err(grid_error(format!("energy {energy} is not finite and non-negative")));
        }
        if let Some(&prev) = energies.last() {
            if energy <= prev {
                return Err(grid_error(format!("energy {energy} does not exceed previous {prev}")));
            }
        }
        let count = parse_count(&record[2]).map_err(|message| match message {
            CountError::Value(m) => Error::Value { path: path.to_owned(), line, message: m },
            CountError::Parse(m) => parse(line, m),
        })?;
        energies.push(energy);
        counts.push(count);
    }
    if counts.is_empty() {
        return Err(parse(1, "no data rows".into()));
    }
    let grid = EnergyGrid::new(energies)?;
    Spectrum::new(Arc::new(grid), counts)
}

enum CountError {
    Value(String),
    Parse(String),
}

fn parse_count(field: &str) -> std::result::Result<u64, CountError> {
    if let Ok(c) = field.parse::<u64>() {
        return Ok(c);
    }
    match field.parse::<f64>() {
        Ok(v) if v < 0.0 => Err(CountError::Value(format!("negative count `{field}`"))),
        Ok(_) => Err(CountError::Value(format!("count `{field}` is not a non-negative integer"))),
        Err(_) => Err(CountError::Parse(format!("count `{field}` is not a number"))),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse { path: path.to_owned(), line, message: format!("{kind:?}") },
    }
}

pub fn write_spectrum(s: &Spectrum, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write_with(path, |w| {
        writeln!(w, "{SPECTRUM_HEADER}")?;
        for (i, (e, c)) in s.grid().energies().iter().zip(s.counts()).enumerate() {
            writeln!(w, "{i},{},{c}", format_f64(*e))?;
        }
        Ok(())
    })
}

/// Create `path` and hand a buffered writer to `body`, mapping I/O errors.
pub(crate) fn write_with(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    body(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

#[derive(Serialize, Deserialize)]
struct LibraryDocument {
    format_version: u64,
    kernel: String,
    #[serde(serialize_with = "serialize_f64")]
    bandwidth: f64,
    #[serde(serialize_with = "serialize_f64_slice")]
    energies_kev: Vec<f64>,
    classes: Vec<ClassDocument>,
}

#[derive(Serialize, Deserialize)]
struct ClassDocument {
    label: String,
    #[serde(serialize_with = "serialize_f64_slice")]
    probabilities: Vec<f64>,
}

pub fn library_to_json(lib: &ClassLibrary) -> Result<String> {
    let doc = LibraryDocument {
        format_version: LIBRARY_FORMAT_VERSION,
        kernel: lib.kernel_name().to_owned(),
        bandwidth: lib.bandwidth(),
        energies_kev: lib.grid().energies().to_vec(),
        classes: lib
            .entries()
            .iter()
            .map(|e| ClassDocument { label: e.label.clone(), probabilities: e.model.probabilities().to_vec() })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Schema(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

pub fn library_from_json(text: &str) -> Result<ClassLibrary> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    match value.get("format_version").and_then(|v| v.as_u64()) {
        Some(LIBRARY_FORMAT_VERSION) => {}
        Some(found) => return Err(Error::Version { found, expected: LIBRARY_FORMAT_VERSION }),
        None => return Err(Error::Schema("missing integer field `format_version`".into())),
    }
    let doc: LibraryDocument = serde_json::from_value(value).map_err(|e| Error::Schema(e.to_string()))?;
    if doc.classes.is_empty() {
        return Err(Error::EmptyLibrary);
    }
    let n = doc.energies_kev.len();
    if let Some(c) = doc.classes.iter().find(|c| c.probabilities.len() != n) {
        return Err(Error::Schema(format!(
            "class `{}` has {} probabilities for {n} energies",
            c.label,
            c.probabilities.len()
        )));
    }
    let grid = Arc::new(EnergyGrid::new(doc.energies_kev).map_err(|e| Error::Schema(e.to_string()))?);
    let entries = doc
        .classes
        .into_iter()
        .map(|c| {
            let model = DiscreteDistribution::new(Arc::clone(&grid), c.probabilities)
                .map_err(|e| Error::Schema(format!("class `{}`: {e}", c.label)))?;
            Ok(LibraryEntry { label: c.label, model })
        })
        .collect::<Result<Vec<_>>>()?;
    ClassLibrary::new(grid, entries, doc.kernel, doc.bandwidth)
}

pub fn save_library(lib: &ClassLibrary, path: impl AsRef<Path>) -> Result<()> {
    let json = library_to_json(lib)?;
    let path = path.as_ref();
    std::fs::write(path, json).map_err(|e| Error::io(path, e))
}

pub fn load_library(path: impl AsRef<Path>) -> Result<ClassLibrary> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    library_from_json(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Train,
    Test,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    pub role: Role,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "serialize_opt_f64")]
    pub duration_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

fn serialize_opt_f64<S: serde::Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => serialize_f64(v, s),
        None => s.serialize_none(),
    }
}

/// Labelled spectrum files; relative paths resolve against `base_dir`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    #[serde(default)]
    pub base_dir: String,
    pub entries: Vec<ManifestEntry>,
}

/// A manifest with every listed spectrum parsed.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub manifest: CorpusManifest,
    /// Parallel to `manifest.entries`, each labelled.
    pub spectra: Vec<Spectrum>,
}

impl Corpus {
    pub fn with_role(&self, role: Role) -> impl Iterator<Item = (&ManifestEntry, &Spectrum)> {
        self.manifest.entries.iter().zip(&self.spectra).filter(move |(e, _)| e.role == role)
    }
}

impl CorpusManifest {
    pub fn resolve(&self, manifest_dir: &Path, entry: &ManifestEntry) -> PathBuf {
        manifest_dir.join(&self.base_dir).join(&entry.path)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut json = serde_json::to_string_pretty(self).map_err(|e| Error::Schema(e.to_string()))?;
        json.push('\n');
        std::fs::write(path, json).map_err(|e| Error::io(path, e))
    }
}

/// Read a manifest and parse every spectrum it lists.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let manifest: CorpusManifest =
        serde_json::from_str(&text).map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
    let dir = path.parent().unwrap_or(Path::new("."));
    let spectra = manifest
        .entries
        .iter()
        .map(|entry| {
            if entry.label.is_empty() {
                return Err(Error::Schema(format!("entry `{}` has an empty label", entry.path)));
            }
            Ok(read_spectrum(manifest.resolve(dir, entry))?.with_label(&entry.label))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Corpus { manifest, spectra })
}
