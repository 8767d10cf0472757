//! Grid search over walk parameters minimizing the overlap constant.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::security::{compute_c, max_tolerated_qber};
use crate::walk::{Flip, StepOrder, WalkParams};

/// Cartesian product of walk parameters searched for each `(P, F)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub positions: Vec<usize>,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub flips: Vec<Flip>,
    pub t_max: u64,
    #[serde(default = "default_order")]
    pub order: StepOrder,
}

fn default_order() -> StepOrder {
    StepOrder::CoinThenShift
}

/// `kπ/denominator` for `k = 0..=denominator`.
pub fn pi_fractions(denominator: u32) -> Vec<f64> {
    (0..=denominator)
        .map(|k| k as f64 * PI / denominator as f64)
        .collect()
}

impl SweepGrid {
    pub fn new(
        positions: Vec<usize>,
        thetas: Vec<f64>,
        phis: Vec<f64>,
        flips: Vec<Flip>,
        t_max: u64,
    ) -> Result<Self> {
        let grid = SweepGrid {
            positions,
            thetas,
            phis,
            flips,
            t_max,
            order: StepOrder::CoinThenShift,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// `θ, φ ∈ {kπ/denominator}`.
    pub fn pi_fraction_grid(
        positions: Vec<usize>,
        flips: Vec<Flip>,
        denominator: u32,
        t_max: u64,
    ) -> Result<Self> {
        if denominator == 0 {
            return Err(invalid("grid denominator must be positive"));
        }
        let angles = pi_fractions(denominator);
        Self::new(positions, angles.clone(), angles, flips, t_max)
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty()
            || self.thetas.is_empty()
            || self.phis.is_empty()
            || self.flips.is_empty()
        {
            return Err(invalid("sweep grid lists must be non-empty"));
        }
        if self.t_max == 0 {
            return Err(invalid("T_max must be at least 1"));
        }
        if let Some(&p) = self.positions.iter().find(|&&p| p % 2 == 0) {
            return Err(Error::EvenPositions(p));
        }
        if self.thetas.iter().chain(&self.phis).any(|a| !a.is_finite()) {
            return Err(invalid("grid angles must be finite"));
        }
        Ok(())
    }

    pub fn cell_count(&self) -> usize {
        self.positions.len() * self.flips.len() * self.thetas.len() * self.phis.len()
    }

    fn cell(&self, index: usize) -> Cell {
        let np = self.phis.len();
        let nt = self.thetas.len();
        let nf = self.flips.len();
        Cell {
            phi: index % np,
            theta: (index / np) % nt,
            flip: (index / (np * nt)) % nf,
            positions: index / (np * nt * nf),
        }
    }

    /// Identifies the grid in checkpoint files; exact bit patterns of the angles.
    pub fn fingerprint(&self) -> String {
        let bits = |v: &[f64]| {
            v.iter()
                .map(|a| format!("{:016x}", a.to_bits()))
                .collect::<Vec<_>>()
                .join(",")
        };
        format!(
            "P={:?};F={};theta={};phi={};tmax={};order={:?}",
            self.positions,
            self.flips.iter().map(|f| f.label()).collect::<String>(),
            bits(&self.thetas),
            bits(&self.phis),
            self.t_max,
            self.order
        )
    }
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    positions: usize,
    flip: usize,
    theta: usize,
    phi: usize,
}

/// Best parameters found for one `(P, F)`, or one cell of a fixed-walk series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "P")]
    pub positions: usize,
    #[serde(rename = "F")]
    pub flip: Flip,
    pub theta: f64,
    pub phi: f64,
    pub t: u64,
    pub c: f64,
    #[serde(rename = "Q_max")]
    pub q_max: f64,
}

impl SweepRow {
    fn new(positions: usize, flip: Flip, theta: f64, phi: f64, t: u64, c: f64) -> Result<Self> {
        Ok(SweepRow {
            positions,
            flip,
            theta,
            phi,
            t,
            c,
            q_max: max_tolerated_qber(c, positions)?,
        })
    }

    pub fn walk(&self, order: StepOrder) -> Result<WalkParams> {
        Ok(WalkParams::new(self.positions, self.theta, self.phi, self.t)?
            .with_flip(self.flip)
            .with_order(order))
    }
}

/// Outcome of a single grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub index: usize,
    pub c: f64,
    pub t: u64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses all available parallelism.
    pub jobs: Option<usize>,
    /// Print progress to standard error.
    pub progress: bool,
    /// JSON-lines file recording every finished cell; resumed if present.
    pub checkpoint: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    fingerprint: String,
}

fn load_checkpoint(path: &PathBuf, grid: &SweepGrid) -> Result<HashMap<usize, CellResult>> {
    let mut done = HashMap::new();
    if !path.exists() {
        return Ok(done);
    }
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line?,
        None => return Ok(done),
    };
    let header: CheckpointHeader = serde_json::from_str(&header)?;
    if header.fingerprint != grid.fingerprint() {
        return Err(Error::CheckpointMismatch(path.display().to_string()));
    }
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // a torn final line from an interrupted run is dropped
        match serde_json::from_str::<CellResult>(&line) {
            Ok(r) if r.index < grid.cell_count() => {
                done.insert(r.index, r);
            }
            _ => break,
        }
    }
    Ok(done)
}

/// Rewrites the checkpoint with the cells already known, dropping any torn tail.
fn open_checkpoint(
    path: &PathBuf,
    grid: &SweepGrid,
    done: &HashMap<usize, CellResult>,
) -> Result<BufWriter<File>> {
    let mut w = BufWriter::new(File::create(path)?);
    let header = CheckpointHeader {
        fingerprint: grid.fingerprint(),
    };
    writeln!(w, "{}", serde_json::to_string(&header)?)?;
    let mut known: Vec<_> = done.values().collect();
    known.sort_by_key(|r| r.index);
    for r in known {
        writeln!(w, "{}", serde_json::to_string(r)?)?;
    }
    w.flush()?;
    Ok(w)
}

fn evaluate(grid: &SweepGrid, index: usize) -> Result<CellResult> {
    let cell = grid.cell(index);
    let walk = WalkParams::new(
        grid.positions[cell.positions],
        grid.thetas[cell.theta],
        grid.phis[cell.phi],
        0,
    )?
    .with_flip(grid.flips[cell.flip])
    .with_order(grid.order);
    let report = compute_c(&walk, grid.t_max)?;
    Ok(CellResult {
        index,
        c: report.c,
        t: report.t_star,
    })
}

/// Evaluates every cell, in grid order (`P`, then `F`, then `θ`, then `φ`).
pub fn evaluate_cells(grid: &SweepGrid, options: &SweepOptions) -> Result<Vec<CellResult>> {
    grid.validate()?;
    let total = grid.cell_count();
    let mut done = match &options.checkpoint {
        Some(path) => load_checkpoint(path, grid)?,
        None => HashMap::new(),
    };
    let writer = match &options.checkpoint {
        Some(path) => Some(Mutex::new(open_checkpoint(path, grid, &done)?)),
        None => None,
    };
    let pending: Vec<usize> = (0..total).filter(|i| !done.contains_key(i)).collect();
    let finished = AtomicUsize::new(total - pending.len());
    let last_percent = AtomicUsize::new(usize::MAX);

    let work = || -> Result<Vec<CellResult>> {
        pending
            .par_iter()
            .map(|&index| {
                let result = evaluate(grid, index)?;
                if let Some(w) = &writer {
                    let mut w = w.lock().expect("checkpoint writer poisoned");
                    writeln!(w, "{}", serde_json::to_string(&result)?)?;
                    w.flush()?;
                }
                let n = finished.fetch_add(1, Ordering::Relaxed) + 1;
                if options.progress {
                    let percent = n * 100 / total;
                    if last_percent.swap(percent, Ordering::Relaxed) != percent || n == total {
                        eprintln!("sweep: {n}/{total} cells ({percent}%)");
                    }
                }
                Ok(result)
            })
            .collect()
    };
    let fresh_results = match options.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    for r in fresh_results {
        done.insert(r.index, r);
    }
    Ok((0..total).map(|i| done[&i]).collect())
}

/// Best row per `(P, F)`, ordered as in the grid.
///
/// Ties in `c` go to the smaller `t`, then to the earlier `θ`, then `φ`.
pub fn run_sweep(grid: &SweepGrid, options: &SweepOptions) -> Result<Vec<SweepRow>> {
    let cells = evaluate_cells(grid, options)?;
    let per_group = grid.thetas.len() * grid.phis.len();
    let mut rows = Vec::with_capacity(grid.positions.len() * grid.flips.len());
    for group in cells.chunks(per_group) {
        let best = group
            .iter()
            .reduce(|a, b| if (b.c, b.t) < (a.c, a.t) { b } else { a })
            .expect("non-empty group");
        let cell = grid.cell(best.index);
        rows.push(SweepRow::new(
            grid.positions[cell.positions],
            grid.flips[cell.flip],
            grid.thetas[cell.theta],
            grid.phis[cell.phi],
            best.t,
            best.c,
        )?);
    }
    Ok(rows)
}

/// Row with the largest `Q_max` (first in grid order on ties).
pub fn best_row(rows: &[SweepRow]) -> Option<&SweepRow> {
    rows.iter()
        .reduce(|a, b| if b.q_max > a.q_max { b } else { a })
}

/// One row per `P` for a single coin, with only `t` free.
pub fn fixed_walk_series(
    theta: f64,
    phi: f64,
    flip: Flip,
    positions: &[usize],
    t_max: u64,
) -> Result<Vec<SweepRow>> {
    let grid = SweepGrid::new(positions.to_vec(), vec![theta], vec![phi], vec![flip], t_max)?;
    run_sweep(&grid, &SweepOptions::default())
}

/// Angle as a multiple of π with six decimals.
pub fn format_pi_multiple(angle: f64) -> String {
    format!("{:.6}", angle / PI)
}

pub const CSV_HEADER: [&str; 7] = ["P", "F", "theta", "phi", "t", "c", "Q_max"];

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.positions.to_string(),
            r.flip.label().to_string(),
            format_pi_multiple(r.theta),
            format_pi_multiple(r.phi),
            r.t.to_string(),
            format!("{:.6}", r.c),
            format!("{:.6}", r.q_max),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// JSON export: tool identity, the grid searched and the selected rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepDocument {
    pub tool: String,
    pub version: String,
    pub grid: SweepGrid,
    pub rows: Vec<SweepRow>,
}

impl SweepDocument {
    pub fn new(grid: &SweepGrid, rows: &[SweepRow]) -> Self {
        SweepDocument {
            tool: "qwqkd".into(),
            version: crate::VERSION.into(),
            grid: grid.clone(),
            rows: rows.to_vec(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn bb84_point() {
        let grid = SweepGrid::new(vec![1], vec![FRAC_PI_4], vec![0.0], vec![Flip::I], 1).unwrap();
        let rows = run_sweep(&grid, &SweepOptions::default()).unwrap();
        assert_eq!(rows.len(), 1);
        assert!((rows[0].c - 0.5).abs() < 1e-12);
        assert!((rows[0].q_max - 0.110).abs() < 0.001);
    }

    #[test]
    fn grid_validation() {
        assert!(SweepGrid::new(vec![], vec![0.0], vec![0.0], vec![Flip::I], 1).is_err());
        assert!(SweepGrid::new(vec![4], vec![0.0], vec![0.0], vec![Flip::I], 1).is_err());
        assert!(SweepGrid::new(vec![3], vec![0.0], vec![0.0], vec![Flip::I], 0).is_err());
    }

    #[test]
    fn cell_indexing_round_trips() {
        let grid = SweepGrid::pi_fraction_grid(vec![3, 5], vec![Flip::I, Flip::Y], 4, 3).unwrap();
        assert_eq!(grid.cell_count(), 2 * 2 * 5 * 5);
        let c = grid.cell(25 + 5 + 3);
        assert_eq!((c.positions, c.flip, c.theta, c.phi), (0, 1, 1, 3));
    }

    #[test]
    fn deterministic_across_job_counts() {
        let grid = SweepGrid::pi_fraction_grid(vec![3, 5], Flip::ALL.to_vec(), 4, 40).unwrap();
        let one = run_sweep(&grid, &SweepOptions { jobs: Some(1), ..Default::default() }).unwrap();
        let three =
            run_sweep(&grid, &SweepOptions { jobs: Some(3), ..Default::default() }).unwrap();
        assert_eq!(one, three);
    }

    #[test]
    fn csv_layout() {
        let row = SweepRow::new(1, Flip::I, FRAC_PI_4, 0.0, 1, 0.5).unwrap();
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("P,F,theta,phi,t,c,Q_max"));
        assert!(lines.next().unwrap().starts_with("1,I,0.250000,0.000000,1,0.500000,0.11"));
    }
}
