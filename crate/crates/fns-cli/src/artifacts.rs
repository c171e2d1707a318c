//! Artifact layout for one run, rooted at the configured output directory:
//!
//! ```text
//! manifest.toml            format tag, code version, rng, config, outcome
//! distances.csv            iteration, distance
//! norms.csv                t, phi2_norm, weighted sup per dyadic shell
//! snapshots/node_NNNN.txt  one spectral snapshot per grid node
//! ```
//!
//! Nothing here records wall-clock time or hostnames: two runs of the same
//! config and seed produce byte-identical numeric artifacts, so `diff -r`
//! is a meaningful regression check. Floats print as {:.16e}, which reparses
//! to the same bits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fns_core::data::RNG_NAME;
use fns_core::picard::PicardReport;
use fns_core::snapshot::{load_snapshot, SnapshotMeta};
use fns_core::{SpectralField, TimeGrid, Trajectory};
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;

pub const MANIFEST_FORMAT: &str = "fns-artifacts v1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format: String,
    pub code_version: String,
    pub rng: String,
    pub config: RunConfig,
    pub result: SolveSummary,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveSummary {
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub tail_allowance: f64,
    pub tail_coverage_radius: f64,
    /// First iterate index whose weighted sup left the watched bound, when
    /// a bound watch was armed.
    pub bound_exceeded_at: Option<usize>,
}

impl SolveSummary {
    pub fn from_report(r: &PicardReport) -> Self {
        SolveSummary {
            converged: r.converged,
            iterations: r.iterations,
            final_residual: r.final_residual,
            tail_allowance: r.tail_allowance,
            tail_coverage_radius: r.tail_coverage_radius,
            bound_exceeded_at: r.bound_exceeded_at,
        }
    }
}

/// Lower edges of the dyadic shells 1 <= |xi| < 2, 2 <= |xi| < 4, ... that
/// intersect the ball.
pub fn dyadic_shell_edges(radius: f64) -> Vec<f64> {
    let mut edges = Vec::new();
    let mut lo = 1.0;
    while lo <= radius {
        edges.push(lo);
        lo *= 2.0;
    }
    edges
}

/// Weighted sup |xi|^2 max_k |v(xi)| over each dyadic shell; the largest
/// entry equals the phi2 norm.
pub fn shell_sups(f: &SpectralField, edges: &[f64]) -> Vec<f64> {
    let mut sups = vec![0.0f64; edges.len()];
    for (xi, v) in f.iter() {
        let nsq = xi.norm_sq() as f64;
        // shell index: largest i with edges[i]^2 <= nsq
        let i = edges
            .iter()
            .rposition(|lo| lo * lo <= nsq)
            .expect("every stored mode has |xi| >= 1");
        sups[i] = sups[i].max(nsq * fns_core::field::vec3_sup(v));
    }
    sups
}

fn snapshot_path(dir: &Path, node: usize) -> PathBuf {
    dir.join("snapshots").join(format!("node_{node:04}.txt"))
}

/// Comment line opening every csv: the format tag and code version; the
/// full config travels in manifest.toml next to the csv.
pub fn csv_preamble() -> String {
    format!(
        "# {MANIFEST_FORMAT} code_version={} rng={RNG_NAME} (full config in manifest.toml)\n",
        env!("CARGO_PKG_VERSION")
    )
}

pub fn write_solve_artifacts(
    dir: &Path,
    config: &RunConfig,
    report: &PicardReport,
    traj: &Trajectory,
) -> Result<()> {
    fs::create_dir_all(dir.join("snapshots"))
        .with_context(|| format!("cannot create {}", dir.display()))?;

    let manifest = Manifest {
        format: MANIFEST_FORMAT.to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        rng: RNG_NAME.to_string(),
        config: config.clone(),
        result: SolveSummary::from_report(report),
    };
    fs::write(
        dir.join("manifest.toml"),
        toml::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;

    let mut csv = csv_preamble();
    csv.push_str("iteration,distance\n");
    for (i, d) in report.distances.iter().enumerate() {
        csv.push_str(&format!("{},{:.16e}\n", i + 1, d));
    }
    fs::write(dir.join("distances.csv"), csv)?;

    let edges = dyadic_shell_edges(traj.radius());
    let mut csv = csv_preamble();
    csv.push_str("t,phi2_norm");
    for lo in &edges {
        csv.push_str(&format!(",shell_{lo}"));
    }
    csv.push('\n');
    let grid = traj.grid();
    for j in 0..=grid.steps() {
        let state = traj.state(j);
        csv.push_str(&format!("{:.16e},{:.16e}", grid.node(j), state.phi2_norm()));
        for s in shell_sups(state, &edges) {
            csv.push_str(&format!(",{s:.16e}"));
        }
        csv.push('\n');
    }
    fs::write(dir.join("norms.csv"), csv)?;

    let meta = SnapshotMeta {
        seed: Some(config.data.seed),
        kind: Some(config.data.kind.name().to_string()),
        hermitian: None, // measured by the writer
    };
    for j in 0..=grid.steps() {
        let mut w = std::io::BufWriter::new(fs::File::create(snapshot_path(dir, j))?);
        fns_core::snapshot::write_snapshot(&mut w, traj.state(j), &meta)?;
        w.flush()?;
    }
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join("manifest.toml");
    if !path.exists() {
        bail!(
            "no manifest at {}; run `fns solve` into this directory first",
            path.display()
        );
    }
    let m: Manifest = toml::from_str(&fs::read_to_string(&path)?)
        .with_context(|| format!("cannot parse {}", path.display()))?;
    if m.format != MANIFEST_FORMAT {
        bail!("unsupported artifact format {:?} (expected {MANIFEST_FORMAT:?})", m.format);
    }
    Ok(m)
}

/// Reloads the stored trajectory, insisting on one snapshot per grid node.
pub fn load_trajectory(dir: &Path, config: &RunConfig) -> Result<Trajectory> {
    let grid = TimeGrid::new(config.horizon, config.steps);
    let mut states = Vec::with_capacity(config.steps + 1);
    for j in 0..=config.steps {
        let path = snapshot_path(dir, j);
        if !path.exists() {
            bail!(
                "missing snapshot {} (artifacts incomplete or from another config)",
                path.display()
            );
        }
        let (state, _) = load_snapshot(&path)?;
        states.push(state);
    }
    Ok(Trajectory::new(grid, states))
}

/// Number of data rows of a written csv (comments and header excluded).
pub fn csv_data_rows(path: &Path) -> Result<usize> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .skip(1) // header
        .count())
}
