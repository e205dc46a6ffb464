use crate::spectrum::Spectrum;
use crate::{Error, FrequencyGrid, Result};

/// Default prominence threshold, as a fraction of the spectrum's dynamic range.
pub const DEFAULT_MIN_PROMINENCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub frequency: f64,
    pub magnitude: f64,
    /// Height above the higher flanking minimum, divided by the global range.
    pub prominence: f64,
}

pub type PeakList = Vec<Peak>;

pub fn extract_peaks(s: &Spectrum, min_prominence: f64) -> Result<PeakList> {
    find_peaks(&s.grid, &s.magnitudes(), min_prominence)
}

/// Local maxima of `values` sampled on `grid`, sorted by frequency.
pub fn find_peaks(grid: &FrequencyGrid, values: &[f64], min_prominence: f64) -> Result<PeakList> {
    if values.len() != grid.len() {
        return Err(Error::Grid(format!(
            "{} values for a {}-point grid",
            values.len(),
            grid.len()
        )));
    }
    if values.len() < 5 {
        return Err(Error::InsufficientData(format!(
            "peak search needs at least 5 points, got {}",
            values.len()
        )));
    }
    if !(min_prominence > 0.0 && min_prominence < 1.0) {
        return Err(Error::validation(
            "min_prominence",
            format!("must lie in (0, 1), got {min_prominence}"),
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::validation("magnitudes", "non-finite sample"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = hi - lo;
    if !(range > 0.0) {
        return Ok(Vec::new());
    }

    let n = values.len();
    let mut peaks = Vec::new();
    for i in 1..n - 1 {
        let y = values[i];
        // strict on the left, so a plateau yields one candidate
        if !(y > values[i - 1] && y >= values[i + 1]) {
            continue;
        }
        let mut left_min = y;
        for &v in values[..i].iter().rev() {
            if v > y {
                break;
            }
            left_min = left_min.min(v);
        }
        // ties count as higher on the right, so of two equal peaks only the
        // rightmost keeps its full prominence
        let mut right_min = y;
        for &v in &values[i + 1..] {
            if v >= y {
                break;
            }
            right_min = right_min.min(v);
        }
        let prominence = (y - left_min.max(right_min)) / range;
        if prominence < min_prominence {
            continue;
        }
        let (ym, yp) = (values[i - 1], values[i + 1]);
        let curvature = ym - 2.0 * y + yp;
        let offset = if curvature < 0.0 {
            (0.5 * (ym - yp) / curvature).clamp(-0.5, 0.5)
        } else {
            0.0
        };
        let magnitude = y - 0.25 * (ym - yp) * offset;
        peaks.push(Peak {
            frequency: grid.at(i) + offset * grid.step(),
            magnitude,
            prominence,
        });
    }
    Ok(peaks)
}
