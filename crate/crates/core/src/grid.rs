use crate::{Error, Result};

/// Evenly spaced frequency axis, endpoints inclusive.
///
/// A single-point axis (`count == 1`, `start == stop`) is accepted so that a
/// sweep can be collapsed onto one value; otherwise `start < stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyGrid {
    start: f64,
    stop: f64,
    count: usize,
}

impl FrequencyGrid {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if !start.is_finite() || !stop.is_finite() {
            return Err(Error::Grid(format!("non-finite bounds [{start}, {stop}]")));
        }
        match count {
            0 => Err(Error::Grid("count must be positive".into())),
            1 if start == stop => Ok(Self { start, stop, count }),
            1 => Err(Error::Grid(format!(
                "single-point grid requires start == stop, got [{start}, {stop}]"
            ))),
            _ if start < stop => Ok(Self { start, stop, count }),
            _ => Err(Error::Grid(format!(
                "start must be < stop, got [{start}, {stop}]"
            ))),
        }
    }

    pub fn single(value: f64) -> Result<Self> {
        Self::new(value, value, 1)
    }

    pub fn start(&self) -> f64 {
        self.start
    }
    pub fn stop(&self) -> f64 {
        self.stop
    }
    pub fn len(&self) -> usize {
        self.count
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Spacing between points; zero for a single-point grid.
    pub fn step(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.stop - self.start) / (self.count - 1) as f64
        }
    }

    pub fn at(&self, i: usize) -> f64 {
        debug_assert!(i < self.count);
        if i + 1 == self.count {
            self.stop
        } else {
            self.start + i as f64 * self.step()
        }
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.count).map(move |i| self.at(i))
    }

    pub fn points(&self) -> Vec<f64> {
        self.iter().collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.start && x <= self.stop
    }

    /// Index of the grid point closest to `x`.
    pub fn nearest_index(&self, x: f64) -> usize {
        if self.count < 2 {
            return 0;
        }
        let k = ((x - self.start) / self.step()).round();
        k.clamp(0.0, (self.count - 1) as f64) as usize
    }
}
