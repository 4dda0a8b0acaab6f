//! Trajectory and spectrum files: write, read back and compare bit for bit.
//!
//! `cargo run --release --example file_io [dir]`

use std::path::PathBuf;

use choreo_morse::analysis::{analyze, SpectrumOptions};
use choreo_morse::continuation::homogeneous_eight;
use choreo_morse::io::{self, SpectrumFile, FORMAT_VERSION};
use choreo_morse::solver::SolverOptions;

fn main() -> anyhow::Result<()> {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let q = homogeneous_eight(1.0, 2.0, None, &SolverOptions::default())?;
    let path = dir.join("eight.json");
    io::write_trajectory(&path, &q, Some(serde_json::json!({ "note": "a = 1, x_max = 2" })))?;
    let (back, provenance) = io::read_trajectory(&path)?;
    println!("{}: identical after round trip: {}, provenance {:?}", path.display(), back == q, provenance);

    let analysis = analyze(&back, &SpectrumOptions::default())?;
    let spectrum = SpectrumFile {
        format_version: FORMAT_VERSION,
        trajectory_ref: path.display().to_string(),
        m: analysis.m,
        n: analysis.n,
        eigenvalues: analysis.eigenvalues(20),
        eigenvectors: None,
        residuals: analysis.spectrum.pairs.iter().take(20).map(|p| p.residual).collect(),
        config: serde_json::Value::Null,
    };
    let spath = dir.join("eight.spectrum.json");
    io::write_json(&spath, &spectrum)?;
    let read: SpectrumFile = io::read_json(&spath)?;
    println!("{}: eigenvalues identical after round trip: {}", spath.display(), read.eigenvalues == spectrum.eigenvalues);
    Ok(())
}
