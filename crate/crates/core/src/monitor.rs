//! Monitors over the grid cells and CSV output of sampled series.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::gillespie::Trajectory;
use crate::matcher::{MatchError, MatchPlan, Pattern};
use crate::term::{Coordinate, Label, Term};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonitorTarget {
    Cell(Coordinate),
    /// Mean over every cell that passes the label filter.
    GridAverage,
}

#[derive(Debug, Clone)]
pub struct Monitor {
    pub name: String,
    pub target: MonitorTarget,
    /// `None` accepts every spatial label.
    pub label: Option<Label>,
    pub pattern: Pattern,
    plan: MatchPlan,
}

impl Monitor {
    pub fn new(
        name: String,
        target: MonitorTarget,
        label: Option<Label>,
        pattern: Pattern,
    ) -> Result<Self, MatchError> {
        let plan = MatchPlan::new(&pattern)?;
        Ok(Self { name, target, label, pattern, plan })
    }

    fn accepts(&self, label: &Label) -> bool {
        self.label.as_ref().is_none_or(|l| l == label)
    }
}

impl fmt::Display for Monitor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.name)?;
        match self.target {
            MonitorTarget::Cell(c) => write!(f, "cell {c} ")?,
            MonitorTarget::GridAverage => f.write_str("average ")?,
        }
        match &self.label {
            Some(l) => write!(f, "{{{l}}} ")?,
            None => f.write_str("* ")?,
        }
        write!(f, "{}", self.pattern)
    }
}

/// The grid cells of a system: top-level compartments carrying a coordinate.
fn cells(system: &Term) -> impl Iterator<Item = (Coordinate, &Label, &Term, usize)> {
    system.iter().filter_map(|(s, n)| {
        let c = s.as_compartment()?;
        Some((c.coordinate()?, &c.label, &c.content, n))
    })
}

/// Value of one monitor on a system (the content of the root).
pub fn evaluate_monitor(m: &Monitor, system: &Term) -> f64 {
    match m.target {
        MonitorTarget::Cell(at) => cells(system)
            .filter(|(c, label, _, _)| *c == at && m.accepts(label))
            .map(|(_, _, content, n)| (m.plan.count(content) * n as u64) as f64)
            .sum(),
        MonitorTarget::GridAverage => {
            let (mut total, mut n_cells) = (0u64, 0u64);
            for (_, label, content, n) in cells(system) {
                if m.accepts(label) {
                    total += m.plan.count(content) * n as u64;
                    n_cells += n as u64;
                }
            }
            if n_cells == 0 {
                0.0
            } else {
                total as f64 / n_cells as f64
            }
        }
    }
}

pub fn evaluate_monitors(monitors: &[Monitor], system: &Term) -> Vec<f64> {
    monitors.iter().map(|m| evaluate_monitor(m, system)).collect()
}

/// Per-monitor mean and sample standard deviation across an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSeries {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub runs: usize,
    /// `means[m][i]` is the mean of monitor `m` at `times[i]`.
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<Vec<f64>>,
}

impl EnsembleSeries {
    /// Folds trajectories in the given order. All must share names and
    /// sample times.
    pub fn from_trajectories(trajectories: &[Trajectory]) -> Self {
        let first = &trajectories[0];
        let n = trajectories.len();
        let (n_mon, n_t) = (first.names.len(), first.times.len());
        let mut means = vec![vec![0.0; n_t]; n_mon];
        let mut stds = vec![vec![0.0; n_t]; n_mon];
        for m in 0..n_mon {
            for i in 0..n_t {
                let sum: f64 = trajectories.iter().map(|t| t.values[i][m]).sum();
                let mean = sum / n as f64;
                means[m][i] = mean;
                if n > 1 {
                    let ss: f64 = trajectories.iter().map(|t| (t.values[i][m] - mean).powi(2)).sum();
                    stds[m][i] = (ss / (n - 1) as f64).sqrt();
                }
            }
        }
        Self { names: first.names.clone(), times: first.times.clone(), runs: n, means, stds }
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{}: {source}", path.display())]
pub struct CsvError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

fn writer(path: &Path) -> Result<csv::Writer<File>, CsvError> {
    let file = File::create(path).map_err(|source| CsvError { path: path.to_owned(), source })?;
    Ok(csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(file))
}

fn finish(path: &Path, w: csv::Writer<File>) -> Result<(), CsvError> {
    let mut file = w.into_inner().map_err(|e| CsvError { path: path.to_owned(), source: e.into_error() })?;
    file.flush().map_err(|source| CsvError { path: path.to_owned(), source })
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CsvError + '_ {
    move |e| CsvError { path: path.to_owned(), source: e.into() }
}

/// `time,<m1>,<m2>,...`, one row per sample.
pub fn write_run_csv(t: &Trajectory, path: &Path) -> Result<(), CsvError> {
    let mut w = writer(path)?;
    let header = std::iter::once("time".to_owned()).chain(t.names.iter().cloned());
    w.write_record(header).map_err(csv_err(path))?;
    for (time, row) in t.times.iter().zip(&t.values) {
        let record = std::iter::once(time).chain(row).map(f64::to_string);
        w.write_record(record).map_err(csv_err(path))?;
    }
    finish(path, w)
}

/// `time,<m1>_mean,<m1>_std,...`, one row per sample.
pub fn write_ensemble_csv(s: &EnsembleSeries, path: &Path) -> Result<(), CsvError> {
    let mut w = writer(path)?;
    let mut header = vec!["time".to_owned()];
    for name in &s.names {
        header.push(format!("{name}_mean"));
        header.push(format!("{name}_std"));
    }
    w.write_record(&header).map_err(csv_err(path))?;
    for (i, time) in s.times.iter().enumerate() {
        let mut record = vec![time.to_string()];
        for m in 0..s.names.len() {
            record.push(s.means[m][i].to_string());
            record.push(s.stds[m][i].to_string());
        }
        w.write_record(&record).map_err(csv_err(path))?;
    }
    finish(path, w)
}
