//! Lumped-LC surrogate for planar resonator geometry.
//!
//! `f = 1 / (2π √(L(d)·C(g)))` with `L(d) = l0·d^p` and `C(g) = c_gap/g + c_par`,
//! `d` the resonator size and `g` the split gap (mm), `f` in GHz. `p = 1`
//! gives an inductance proportional to size; calibration may fit `p`.
//!
//! Only the products `l0·c_gap` and `l0·c_par` affect `f`, so calibration
//! fixes `l0 = 1`.

use crate::config::{fmt_f64, Section};
use crate::exec::map_indexed;
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::{Error, Execution, FrequencyGrid, Result};
use std::f64::consts::TAU;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryModel {
    pub l0: f64,
    pub c_gap: f64,
    pub c_par: f64,
    pub size_exponent: f64,
    pub valid_d_range: (f64, f64),
    pub valid_g_range: (f64, f64),
}

fn check_range(name: &'static str, r: (f64, f64)) -> Result<()> {
    if r.0.is_finite() && r.1.is_finite() && 0.0 < r.0 && r.0 <= r.1 {
        Ok(())
    } else {
        Err(Error::validation(name, format!("need 0 < lo <= hi, got {r:?}")))
    }
}

impl GeometryModel {
    pub fn new(
        l0: f64,
        c_gap: f64,
        c_par: f64,
        size_exponent: f64,
        valid_d_range: (f64, f64),
        valid_g_range: (f64, f64),
    ) -> Result<Self> {
        for (name, v) in [("l0", l0), ("c_gap", c_gap), ("size_exponent", size_exponent)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::validation(name, format!("must be finite and > 0, got {v}")));
            }
        }
        if !(c_par.is_finite() && c_par >= 0.0) {
            return Err(Error::validation("c_par", format!("must be finite and >= 0, got {c_par}")));
        }
        check_range("d_range", valid_d_range)?;
        check_range("g_range", valid_g_range)?;
        Ok(Self {
            l0,
            c_gap,
            c_par,
            size_exponent,
            valid_d_range,
            valid_g_range,
        })
    }

    fn eval(&self, d: f64, g: f64) -> f64 {
        let l = self.l0 * d.powf(self.size_exponent);
        let c = self.c_gap / g + self.c_par;
        1.0 / (TAU * (l * c).sqrt())
    }

    pub fn resonance_frequency(&self, d: f64, g: f64) -> Result<f64> {
        for (quantity, v, (lo, hi)) in [("d", d, self.valid_d_range), ("g", g, self.valid_g_range)] {
            if !(lo <= v && v <= hi) {
                return Err(Error::OutOfRange {
                    quantity,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
        Ok(self.eval(d, g))
    }

    /// `[name]` section with every coefficient, re-readable by [`from_section`](Self::from_section).
    pub fn to_config_section(&self, name: &str) -> String {
        format!(
            "[{name}]\nl0 = {}\nc_gap = {}\nc_par = {}\nsize_exponent = {}\nd_range = {}, {}\ng_range = {}, {}\n",
            fmt_f64(self.l0),
            fmt_f64(self.c_gap),
            fmt_f64(self.c_par),
            fmt_f64(self.size_exponent),
            fmt_f64(self.valid_d_range.0),
            fmt_f64(self.valid_d_range.1),
            fmt_f64(self.valid_g_range.0),
            fmt_f64(self.valid_g_range.1),
        )
    }

    pub fn from_section(s: &Section) -> Result<Self> {
        s.check_keys(&["l0", "c_gap", "c_par", "size_exponent", "d_range", "g_range"])?;
        let missing = |k: &str| Error::Config {
            line: s.line,
            message: format!("[{}] is missing `{k}`", s.name),
        };
        Self::new(
            s.require_f64("l0")?,
            s.require_f64("c_gap")?,
            s.require_f64("c_par")?,
            s.f64("size_exponent")?.unwrap_or(1.0),
            s.interval("d_range")?.ok_or_else(|| missing("d_range"))?,
            s.interval("g_range")?.ok_or_else(|| missing("g_range"))?,
        )
    }
}

/// One calibration point: size `d`, gap `g` (mm), measured frequency (GHz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub d: f64,
    pub g: f64,
    pub f: f64,
}

impl Anchor {
    pub fn new(d: f64, g: f64, f: f64) -> Self {
        Self { d, g, f }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeLaw {
    /// `L ∝ d`.
    Linear,
    /// `L ∝ d^p` with `p` fitted.
    Power,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub model: GeometryModel,
    /// `(model − anchor)/anchor` per anchor, in input order.
    pub relative_errors: Vec<f64>,
    pub max_relative_error: f64,
    pub converged: bool,
}

fn distinct(v: impl Iterator<Item = f64>) -> usize {
    let mut xs: Vec<f64> = v.collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs.len()
}

/// Least-squares fit of the coefficients to `anchors`, minimizing squared
/// relative frequency error.
pub fn calibrate(
    anchors: &[Anchor],
    d_range: (f64, f64),
    g_range: (f64, f64),
    law: SizeLaw,
) -> Result<Calibration> {
    check_range("d_range", d_range)?;
    check_range("g_range", g_range)?;
    if distinct(anchors.iter().map(|a| a.d)) < 2 {
        return Err(Error::RankDeficient("anchors do not vary the size d".into()));
    }
    if distinct(anchors.iter().map(|a| a.g)) < 2 {
        return Err(Error::RankDeficient("anchors do not vary the gap g".into()));
    }
    if anchors.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "calibration needs at least 3 anchors, got {}",
            anchors.len()
        )));
    }
    for a in anchors {
        if !(a.f.is_finite() && a.f > 0.0) {
            return Err(Error::validation("anchor", format!("frequency must be > 0, got {}", a.f)));
        }
        for (quantity, v, (lo, hi)) in [("d", a.d, d_range), ("g", a.g, g_range)] {
            if !(lo <= v && v <= hi) {
                return Err(Error::OutOfRange {
                    quantity,
                    value: v,
                    lo,
                    hi,
                });
            }
        }
    }

    // Linear start at p = 1: 1/((2πf)² d) = c_gap/g + c_par.
    let (xs, ys): (Vec<f64>, Vec<f64>) = anchors
        .iter()
        .map(|a| (1.0 / a.g, 1.0 / ((TAU * a.f).powi(2) * a.d)))
        .unzip();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let c_gap0 = (sxy / sxx).max(1e-6 * my);
    let c_par0 = (my - c_gap0 * mx).max(1e-6 * my);

    let build = |x: &[f64]| {
        let p = match law {
            SizeLaw::Linear => 1.0,
            SizeLaw::Power => x[2].exp(),
        };
        GeometryModel {
            l0: 1.0,
            c_gap: x[0].exp(),
            c_par: x[1].exp(),
            size_exponent: p,
            valid_d_range: d_range,
            valid_g_range: g_range,
        }
    };
    let objective = |x: &[f64]| {
        let m = build(x);
        anchors
            .iter()
            .map(|a| (m.eval(a.d, a.g) / a.f - 1.0).powi(2))
            .sum::<f64>()
    };
    let mut x = vec![c_gap0.ln(), c_par0.ln()];
    if law == SizeLaw::Power {
        x.push(0.0);
    }
    let opts = NelderMeadOptions {
        max_iter: 20_000,
        f_rel_tol: 1e-14,
        x_tol: 1e-12,
        f_abs_tol: 1e-30,
    };
    let mut value = objective(&x);
    let mut converged = false;
    for _ in 0..10 {
        let steps = vec![0.5; x.len()];
        let m = nelder_mead(objective, &x, &steps, &opts);
        converged = m.converged();
        let improved = m.value < value * (1.0 - 1e-12);
        if m.value <= value {
            x = m.x;
            value = m.value;
        }
        if !improved {
            break;
        }
    }
    let model = build(&x);
    let relative_errors: Vec<f64> = anchors.iter().map(|a| model.eval(a.d, a.g) / a.f - 1.0).collect();
    let max_relative_error = relative_errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    Ok(Calibration {
        model,
        relative_errors,
        max_relative_error,
        converged,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepAxis {
    Size,
    Gap,
}

/// Frequency along `axis` with the other coordinate held at `fixed`.
pub fn sweep(
    model: &GeometryModel,
    axis: SweepAxis,
    fixed: f64,
    values: &FrequencyGrid,
    exec: Execution,
) -> Result<Vec<(f64, f64)>> {
    map_indexed(exec, values.len(), |i| {
        let v = values.at(i);
        let f = match axis {
            SweepAxis::Size => model.resonance_frequency(v, fixed)?,
            SweepAxis::Gap => model.resonance_frequency(fixed, v)?,
        };
        Ok((v, f))
    })
    .into_iter()
    .collect()
}

/// Whether `∂f/∂g > 0` and `∂f/∂d < 0` at every node of an `n × n` grid over
/// the valid ranges, by one-sided differences.
pub fn is_monotone(model: &GeometryModel, n: usize) -> bool {
    let (d_lo, d_hi) = model.valid_d_range;
    let (g_lo, g_hi) = model.valid_g_range;
    let at = |lo: f64, hi: f64, k: usize| lo + (hi - lo) * k as f64 / (n - 1) as f64;
    for i in 0..n {
        for k in 0..n {
            let (d, g) = (at(d_lo, d_hi, i), at(g_lo, g_hi, k));
            let f = model.eval(d, g);
            let hd = 1e-4 * (d_hi - d_lo).max(d * 1e-3);
            let hg = 1e-4 * (g_hi - g_lo).max(g * 1e-3);
            if !(model.eval(d + hd, g) < f && model.eval(d, g + hg) > f) {
                return false;
            }
        }
    }
    true
}

pub fn srr_anchors() -> [Anchor; 4] {
    [
        Anchor::new(5.0, 0.3, 3.3),
        Anchor::new(5.0, 3.4, 4.05),
        Anchor::new(3.0, 0.4, 4.82),
        Anchor::new(5.9, 0.4, 2.43),
    ]
}

pub fn elc_anchors() -> [Anchor; 4] {
    [
        Anchor::new(5.0, 0.2, 5.2),
        Anchor::new(5.0, 3.5, 6.5),
        Anchor::new(4.0, 0.4, 7.2),
        Anchor::new(7.0, 0.4, 3.6),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ConfigDoc;

    fn model() -> GeometryModel {
        GeometryModel::new(1.0, 0.02, 0.3, 1.0, (1.0, 8.0), (0.1, 4.0)).unwrap()
    }

    #[test]
    fn doubling_l0_scales_by_root_two() {
        let m = model();
        let m2 = GeometryModel { l0: 2.0, ..m };
        let (f, f2) = (m.resonance_frequency(5.0, 1.0).unwrap(), m2.resonance_frequency(5.0, 1.0).unwrap());
        assert!((f / f2 - 2f64.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn out_of_range_names_interval() {
        match model().resonance_frequency(9.0, 1.0) {
            Err(Error::OutOfRange { quantity: "d", lo, hi, .. }) => assert_eq!((lo, hi), (1.0, 8.0)),
            other => panic!("{other:?}"),
        }
        assert!(model().resonance_frequency(5.0, 0.05).is_err());
    }

    #[test]
    fn rank_deficiency() {
        let a = [Anchor::new(5.0, 0.3, 3.3), Anchor::new(5.0, 3.4, 4.05)];
        assert!(matches!(
            calibrate(&a, (3.0, 6.0), (0.3, 3.4), SizeLaw::Linear),
            Err(Error::RankDeficient(_))
        ));
        let a = [Anchor::new(5.0, 0.4, 3.3), Anchor::new(3.0, 0.4, 4.05), Anchor::new(4.0, 0.4, 4.0)];
        assert!(matches!(
            calibrate(&a, (3.0, 6.0), (0.3, 3.4), SizeLaw::Linear),
            Err(Error::RankDeficient(_))
        ));
    }

    #[test]
    fn recalibration_recovers_coefficients() {
        for law in [SizeLaw::Linear, SizeLaw::Power] {
            let truth = GeometryModel {
                size_exponent: if law == SizeLaw::Power { 1.7 } else { 1.0 },
                ..model()
            };
            let anchors: Vec<Anchor> = [(5.0, 0.3), (5.0, 3.4), (3.0, 0.4), (5.9, 0.4), (4.0, 1.0)]
                .iter()
                .map(|&(d, g)| Anchor::new(d, g, truth.eval(d, g)))
                .collect();
            let cal = calibrate(&anchors, (1.0, 8.0), (0.1, 4.0), law).unwrap();
            let m = cal.model;
            for (a, b) in [(m.c_gap, truth.c_gap), (m.c_par, truth.c_par), (m.size_exponent, truth.size_exponent)] {
                assert!((a / b - 1.0).abs() < 1e-6, "{law:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn calibrated_models_are_monotone() {
        for anchors in [srr_anchors(), elc_anchors()] {
            for law in [SizeLaw::Linear, SizeLaw::Power] {
                let cal = calibrate(&anchors, (2.5, 7.5), (0.1, 4.0), law).unwrap();
                assert!(is_monotone(&cal.model, 25));
            }
        }
    }

    #[test]
    fn config_round_trip() {
        let m = GeometryModel::new(1.0, 0.123456789, 0.1 + 0.2, 1.3, (2.5, 6.5), (0.2, 3.5)).unwrap();
        let doc = ConfigDoc::parse(&m.to_config_section("geometry.model")).unwrap();
        assert_eq!(GeometryModel::from_section(doc.require("geometry.model").unwrap()).unwrap(), m);
    }

    #[test]
    fn sweep_along_gap_rises() {
        let grid = FrequencyGrid::new(0.2, 3.6, 18).unwrap();
        let s = sweep(&model(), SweepAxis::Gap, 5.0, &grid, Execution::Sequential).unwrap();
        assert!(s.windows(2).all(|w| w[1].1 > w[0].1));
        let grid = FrequencyGrid::new(3.0, 6.0, 13).unwrap();
        let s = sweep(&model(), SweepAxis::Size, 0.4, &grid, Execution::Sequential).unwrap();
        assert!(s.windows(2).all(|w| w[1].1 < w[0].1));
    }
}
