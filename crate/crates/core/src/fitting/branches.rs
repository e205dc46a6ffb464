use super::peaks::find_peaks;
use crate::spectrum::DispersionMap;
use crate::{Error, Result};

/// Smallest number of control points a branch dataset may hold.
pub const MIN_CONTROL_POINTS: usize = 4;

/// Measured branch frequencies at one control value, ascending.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPoint {
    pub control: f64,
    pub lower: f64,
    pub upper: Option<f64>,
}

impl BranchPoint {
    pub fn frequencies(&self) -> impl Iterator<Item = f64> {
        std::iter::once(self.lower).chain(self.upper)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchData {
    pub points: Vec<BranchPoint>,
    /// Source rows that produced no peak.
    pub skipped_rows: usize,
}

impl BranchData {
    /// Validates and sorts by control value.
    pub fn new(mut points: Vec<BranchPoint>) -> Result<Self> {
        for p in &points {
            if !p.control.is_finite() || p.frequencies().any(|f| !f.is_finite()) {
                return Err(Error::validation("branch data", "non-finite value"));
            }
            if p.upper.is_some_and(|u| u < p.lower) {
                return Err(Error::validation(
                    "branch data",
                    format!("branches out of order at control {}", p.control),
                ));
            }
        }
        if points.len() < MIN_CONTROL_POINTS {
            return Err(Error::InsufficientData(format!(
                "{} control points, need at least {MIN_CONTROL_POINTS}",
                points.len()
            )));
        }
        if points.iter().all(|p| p.upper.is_none()) {
            return Err(Error::InsufficientData(
                "no control point carries two branches".into(),
            ));
        }
        points.sort_by(|a, b| a.control.total_cmp(&b.control));
        Ok(Self {
            points,
            skipped_rows: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn frequency_count(&self) -> usize {
        self.points.iter().map(|p| 1 + p.upper.is_some() as usize).sum()
    }

    pub fn mean_control(&self) -> f64 {
        self.points.iter().map(|p| p.control).sum::<f64>() / self.len() as f64
    }
}

/// Peaks of every row of `map`, keeping the two most prominent, with the
/// swept ω_B as control value.
pub fn branch_dataset(map: &DispersionMap, min_prominence: f64) -> Result<BranchData> {
    let mut points = Vec::new();
    let mut skipped = 0;
    for i in 0..map.rows() {
        let row = map.row(i);
        if row.iter().any(|v| !v.is_finite()) {
            skipped += 1;
            continue;
        }
        let mut peaks = find_peaks(&map.drive_axis, row, min_prominence)?;
        if peaks.is_empty() {
            skipped += 1;
            continue;
        }
        peaks.sort_by(|a, b| b.prominence.total_cmp(&a.prominence));
        peaks.truncate(2);
        let mut f: Vec<f64> = peaks.iter().map(|p| p.frequency).collect();
        f.sort_by(f64::total_cmp);
        points.push(BranchPoint {
            control: map.detuning_axis.at(i),
            lower: f[0],
            upper: f.get(1).copied(),
        });
    }
    let mut data = BranchData::new(points)?;
    data.skipped_rows = skipped;
    Ok(data)
}
