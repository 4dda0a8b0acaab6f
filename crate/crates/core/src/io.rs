//! File formats: JSON documents for trajectories, spectra, classifications and
//! sweep manifests, CSV tables for grids, all written atomically.
//!
//! Every floating-point number in a JSON document is printed with 17 significant
//! digits, which round-trips any `f64` exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::error::{Error, Result};
use crate::potential::PotentialSpec;
use crate::trajectory::{PeriodicTrajectory, SymmetryFlags};

pub const FORMAT_VERSION: u32 = 1;

/// Serializers printing `f64` with 17 significant digits.
pub mod sig17 {
    use super::*;

    pub fn format(x: f64) -> String {
        if x.is_finite() {
            format!("{x:.16e}")
        } else {
            "null".to_string()
        }
    }

    fn raw(x: f64) -> Box<RawValue> {
        RawValue::from_string(format(x)).expect("formatted float is valid JSON")
    }

    pub fn value<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        raw(*x).serialize(s)
    }

    pub fn option<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
        x.map(raw).serialize(s)
    }

    pub fn vec<S: Serializer>(x: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        x.iter().map(|v| raw(*v)).collect::<Vec<_>>().serialize(s)
    }

    pub fn nested<S: Serializer>(x: &[Vec<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
        x.iter()
            .map(|row| row.iter().map(|v| raw(*v)).collect::<Vec<_>>())
            .collect::<Vec<_>>()
            .serialize(s)
    }

    pub fn option_nested<S: Serializer>(x: &Option<Vec<Vec<f64>>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(rows) => s.serialize_some(&NestedRaw(rows)),
            None => s.serialize_none(),
        }
    }

    struct NestedRaw<'a>(&'a [Vec<f64>]);

    impl Serialize for NestedRaw<'_> {
        fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
            nested(self.0, s)
        }
    }
}

/// On-disk form of a [`PeriodicTrajectory`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryFile {
    pub format_version: u32,
    pub potential: PotentialSpec,
    #[serde(rename = "T", serialize_with = "sig17::value")]
    pub period: f64,
    #[serde(rename = "M_traj")]
    pub basis_len: usize,
    /// One array of `M_traj` coefficients per coordinate.
    #[serde(serialize_with = "sig17::nested")]
    pub coeffs: Vec<Vec<f64>>,
    pub flags: SymmetryFlags,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

impl From<PeriodicTrajectory> for TrajectoryFile {
    fn from(traj: PeriodicTrajectory) -> Self {
        TrajectoryFile {
            format_version: FORMAT_VERSION,
            potential: traj.spec,
            period: traj.period(),
            basis_len: traj.basis_len(),
            coeffs: (0..6).map(|i| traj.coordinate(i)).collect(),
            flags: traj.flags,
            provenance: None,
        }
    }
}

impl TryFrom<TrajectoryFile> for PeriodicTrajectory {
    type Error = Error;

    fn try_from(file: TrajectoryFile) -> Result<Self> {
        if file.format_version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: file.format_version,
                expected: FORMAT_VERSION,
            });
        }
        if file.coeffs.len() != 6 || file.coeffs.iter().any(|c| c.len() != file.basis_len) {
            return Err(Error::Config(format!(
                "trajectory file needs 6 coefficient arrays of length {}",
                file.basis_len
            )));
        }
        let mut coeffs = vec![0.0; 6 * file.basis_len];
        for (i, column) in file.coeffs.iter().enumerate() {
            for (k, v) in column.iter().enumerate() {
                coeffs[6 * k + i] = *v;
            }
        }
        Ok(PeriodicTrajectory::new(file.potential, file.period, coeffs)?.with_flags(file.flags))
    }
}

impl Serialize for PeriodicTrajectory {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TrajectoryFile::from(self.clone()).serialize(s)
    }
}

impl<'de> Deserialize<'de> for PeriodicTrajectory {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let file = TrajectoryFile::deserialize(d)?;
        PeriodicTrajectory::try_from(file).map_err(serde::de::Error::custom)
    }
}

/// Write `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, to_json(value)?.as_bytes())
}

/// Read a JSON document, rejecting files whose `format_version` differs from
/// [`FORMAT_VERSION`].
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if let Some(found) = value.get("format_version").and_then(|v| v.as_u64()) {
        if found != FORMAT_VERSION as u64 {
            return Err(Error::FormatVersion {
                found: found as u32,
                expected: FORMAT_VERSION,
            });
        }
    }
    Ok(serde_json::from_value(value)?)
}

pub fn write_trajectory(path: &Path, traj: &PeriodicTrajectory, provenance: Option<serde_json::Value>) -> Result<()> {
    let mut file = TrajectoryFile::from(traj.clone());
    file.provenance = provenance;
    write_json(path, &file)
}

pub fn read_trajectory(path: &Path) -> Result<(PeriodicTrajectory, Option<serde_json::Value>)> {
    let file: TrajectoryFile = read_json(path)?;
    let provenance = file.provenance.clone();
    Ok((PeriodicTrajectory::try_from(file)?, provenance))
}

/// On-disk form of a computed spectrum.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumFile {
    pub format_version: u32,
    pub trajectory_ref: String,
    #[serde(rename = "M")]
    pub m: usize,
    pub n: usize,
    #[serde(serialize_with = "sig17::vec")]
    pub eigenvalues: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none", serialize_with = "sig17::option_nested")]
    pub eigenvectors: Option<Vec<Vec<f64>>>,
    #[serde(serialize_with = "sig17::vec")]
    pub residuals: Vec<f64>,
    pub config: serde_json::Value,
}

/// One row of a classification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClusterEntry {
    #[serde(serialize_with = "sig17::value")]
    pub lambda_mean: f64,
    pub degeneracy: usize,
    pub class: crate::symmetry::ClusterClass,
    pub tags: Vec<String>,
    pub label: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationFile {
    pub format_version: u32,
    pub trajectory_ref: String,
    pub clusters: Vec<ClusterEntry>,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "N_c")]
    pub n_c: usize,
    #[serde(rename = "N_e")]
    pub n_e: usize,
    pub config: serde_json::Value,
}

impl ClassificationFile {
    pub fn new(
        trajectory_ref: &str,
        classification: &crate::symmetry::EigenClassification,
        report: &crate::symmetry::MorseIndexReport,
        config: serde_json::Value,
    ) -> Self {
        let clusters = classification
            .clusters
            .iter()
            .map(|c| {
                let mut tags = Vec::new();
                if c.tags.y {
                    tags.push("y".to_string());
                }
                if c.tags.e {
                    tags.push("e".to_string());
                }
                if c.tags.two {
                    tags.push("two".to_string());
                }
                ClusterEntry {
                    lambda_mean: c.lambda_mean,
                    degeneracy: c.degeneracy,
                    class: c.class,
                    tags,
                    label: c.label.clone(),
                }
            })
            .collect();
        ClassificationFile {
            format_version: FORMAT_VERSION,
            trajectory_ref: trajectory_ref.to_string(),
            clusters,
            n: report.n,
            n_c: report.n_c,
            n_e: report.n_e,
            config,
        }
    }

    /// Plain-text table of label, eigenvalue and degeneracy.
    pub fn table(&self) -> String {
        let mut out = format!("{:<10} {:>16} {:>4}\n", "label", "lambda", "deg");
        for c in &self.clusters {
            out.push_str(&format!("{:<10} {:>16.7} {:>4}\n", c.label, c.lambda_mean, c.degeneracy));
        }
        out.push_str(&format!("N = {}, N_c = {}, N_e = {}\n", self.n, self.n_c, self.n_e));
        out
    }
}

/// Write rows of numbers (and an optional leading text column) as CSV.
pub fn write_csv(path: &Path, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.write_record(header)?;
    for row in rows {
        writer.write_record(row)?;
    }
    let bytes = writer.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    write_atomic(path, &bytes)
}

pub fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok((header, rows))
}

/// Index of everything a sweep or scan produced, sufficient to resume or replay it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub command: String,
    pub config: serde_json::Value,
    /// Files of completed records, relative to the manifest.
    pub records: Vec<String>,
    pub artifacts: Vec<String>,
    pub thresholds: serde_json::Value,
    pub fold: serde_json::Value,
    #[serde(default)]
    pub euler: serde_json::Value,
    pub gaps: Vec<f64>,
    pub complete: bool,
}

impl Manifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Manifest {
            format_version: FORMAT_VERSION,
            command: command.to_string(),
            config,
            records: Vec::new(),
            artifacts: Vec::new(),
            thresholds: serde_json::Value::Null,
            fold: serde_json::Value::Null,
            euler: serde_json::Value::Null,
            gaps: Vec::new(),
            complete: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 15.919135, f64::MAX, 5e-324] {
            let s = sig17::format(x);
            let back: f64 = serde_json::from_str(&s).unwrap();
            assert_eq!(back, x, "{s}");
        }
    }

    #[test]
    fn trajectory_round_trip() {
        let coeffs: Vec<f64> = (0..6 * 7).map(|i| (i as f64 * 0.77).sin() / 3.0).collect();
        let traj = PeriodicTrajectory::new(PotentialSpec::Homogeneous { a: 1.0 }, 15.919135, coeffs).unwrap();
        let text = to_json(&traj).unwrap();
        let back: PeriodicTrajectory = serde_json::from_str(&text).unwrap();
        assert_eq!(back, traj);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.json");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "two");
    }

    #[test]
    fn stale_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        fs::write(&path, r#"{"format_version": 99}"#).unwrap();
        assert!(matches!(read_trajectory(&path), Err(Error::FormatVersion { found: 99, .. })));
    }
}
