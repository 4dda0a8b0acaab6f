//! Follow the Lennard-Jones figure-eight from long periods down the lower branch,
//! around the fold and up the upper branch, with the index transitions on both.
//!
//! `cargo run --release --example lj_branch [t_start t_stop]`
//!
//! The defaults (61.7495 down to the fold, back up to 30) take several minutes.

use choreo_morse::continuation::{follow_alpha_branch, track_clusters, AlphaOptions};

fn main() -> anyhow::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).map(|s| s.parse()).collect::<Result<_, _>>()?;
    let mut options = AlphaOptions::default();
    if let [start, stop] = args[..] {
        options.t_start = start;
        options.t_stop = stop;
    }
    let result = follow_alpha_branch(&options)?;
    if let Some(f) = &result.fold {
        println!("fold at T = {:.7}, S = {:.7}", f.t_min, f.action);
    }
    if let Some(e) = result.euler {
        println!("chi_e over both branches = {}", e.chi_e);
    }
    for t in &result.thresholds {
        println!(
            "{:<7} T = {:.5}  {:<6} ({}, {}, {}) -> ({}, {}, {})",
            t.branch.name(),
            t.parameter,
            t.label,
            t.lower.n,
            t.lower.n_c,
            t.lower.n_e,
            t.upper.n,
            t.upper.n_c,
            t.upper.n_e
        );
    }
    // labels carried along the family by subspace overlap
    for row in track_clusters(&result.records)? {
        println!(
            "{:<7} T = {:>8.4}  N = {:>2}  {}{}",
            row.branch.name(),
            row.parameter,
            row.index.n,
            row.labels.iter().take(8).cloned().collect::<Vec<_>>().join(" "),
            if row.ambiguous { "  (ambiguous match)" } else { "" }
        );
    }
    Ok(())
}
