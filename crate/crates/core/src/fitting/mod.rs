//! Peak extraction, anticrossing branch datasets and coupling fits.
//!
//! The fit model places the real parts of the two hybrid eigenfrequencies
//! `Re E±` at each control value `c`, with mode B tuned affinely,
//! `ω_B(c) = slope·c + intercept`. Free parameters are `(J, Γ′, slope,
//! intercept)`; `ω_A`, `α′`, `β′` are held fixed. Each measured frequency is
//! compared with the nearer of the two branches, so label swaps across the
//! anticrossing cost nothing.

mod branches;
mod peaks;

pub use branches::{branch_dataset, BranchData, BranchPoint, MIN_CONTROL_POINTS};
pub use peaks::{extract_peaks, find_peaks, Peak, PeakList, DEFAULT_MIN_PROMINENCE};

use crate::optimize::{nelder_mead, NelderMeadOptions, StopReason};
use crate::{Error, Result, C64};

/// Residual rms (GHz) at or below which a fit stops immediately.
pub const RMS_TARGET: f64 = 1e-14;
/// Relative objective spread stopping threshold.
pub const F_REL_TOL: f64 = 1e-10;
/// Simplex size stopping threshold.
pub const X_TOL: f64 = 1e-8;
const MAX_RESTARTS: usize = 8;

/// Quantities held fixed during a fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitFixed {
    pub omega_a: f64,
    pub alpha_eff: f64,
    pub beta_eff: f64,
}

impl FitFixed {
    fn validate(&self) -> Result<()> {
        if !(self.omega_a.is_finite() && self.omega_a > 0.0) {
            return Err(Error::validation("omega_a", "must be finite and > 0"));
        }
        for (name, v) in [("alpha_eff", self.alpha_eff), ("beta_eff", self.beta_eff)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(name, "must be finite and >= 0"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitParams {
    pub j: f64,
    pub gamma_eff: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl FitParams {
    pub fn omega_b(&self, control: f64) -> f64 {
        self.slope * control + self.intercept
    }

    fn is_finite(&self) -> bool {
        [self.j, self.gamma_eff, self.slope, self.intercept]
            .iter()
            .all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitWarning {
    /// Every measured frequency is the same; the objective carries no
    /// information about the coupling.
    FlatObjective,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub j_hat: f64,
    pub gamma_eff_hat: f64,
    /// `(slope, intercept)` of `ω_B(control)`.
    pub detuning_map: (f64, f64),
    pub residual_rms: f64,
    pub converged: bool,
    pub iterations: usize,
    pub warnings: Vec<FitWarning>,
}

impl FitResult {
    pub fn params(&self) -> FitParams {
        FitParams {
            j: self.j_hat,
            gamma_eff: self.gamma_eff_hat,
            slope: self.detuning_map.0,
            intercept: self.detuning_map.1,
        }
    }
}

/// `[Re E−, Re E+]` (ascending) at one control value, principal root.
pub fn branch_frequencies(fixed: &FitFixed, params: &FitParams, control: f64) -> [f64; 2] {
    let omega_b = params.omega_b(control);
    let delta = C64::new(params.j, params.gamma_eff);
    let d = C64::new(fixed.omega_a - omega_b, fixed.beta_eff - fixed.alpha_eff);
    let half_root = 0.5 * (4.0 * delta * delta + d * d).sqrt().re.abs();
    let mid = 0.5 * (fixed.omega_a + omega_b);
    [mid - half_root, mid + half_root]
}

fn sum_sq(data: &BranchData, fixed: &FitFixed, params: &FitParams) -> f64 {
    let mut s = 0.0;
    for p in &data.points {
        let [lo, hi] = branch_frequencies(fixed, params, p.control);
        for f in p.frequencies() {
            let r = (f - lo).abs().min((f - hi).abs());
            s += r * r;
        }
    }
    s
}

pub fn residual_rms(data: &BranchData, fixed: &FitFixed, params: &FitParams) -> f64 {
    (sum_sq(data, fixed, params) / data.frequency_count() as f64).sqrt()
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Starting points derived from the data: the detuning map from the exact
/// trace identity `Re E+ + Re E− = ω_A + ω_B`, the couplings from the
/// smallest branch splitting and the width of the merged band.
pub fn initial_guesses(data: &BranchData, fixed: &FitFixed) -> Vec<FitParams> {
    let two: Vec<&BranchPoint> = data.points.iter().filter(|p| p.upper.is_some()).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = two
        .iter()
        .map(|p| (p.control, p.lower + p.upper.unwrap() - fixed.omega_a))
        .unzip();
    let map = linear_fit(&xs, &ys).or_else(|| {
        let (xs, ys): (Vec<f64>, Vec<f64>) = data
            .points
            .iter()
            .map(|p| (p.control, p.frequencies().sum::<f64>() * 2.0 / (1 + p.upper.is_some() as usize) as f64 - fixed.omega_a))
            .unzip();
        linear_fit(&xs, &ys)
    });
    let (slope, intercept) = map.unwrap_or((1.0, 0.0));

    let split = two
        .iter()
        .map(|p| p.upper.unwrap() - p.lower)
        .fold(f64::INFINITY, f64::min);
    let merged: Vec<f64> = data
        .points
        .iter()
        .filter(|p| p.upper.is_none())
        .map(|p| slope * p.control + intercept)
        .collect();
    let band = if merged.len() >= 2 {
        merged.iter().copied().fold(f64::NEG_INFINITY, f64::max)
            - merged.iter().copied().fold(f64::INFINITY, f64::min)
    } else {
        0.0
    };
    let floor = 1e-3;
    vec![
        FitParams {
            j: (0.5 * split).max(floor),
            gamma_eff: floor,
            slope,
            intercept,
        },
        FitParams {
            j: floor,
            gamma_eff: (0.5 * split).max(0.25 * band).max(floor),
            slope,
            intercept,
        },
    ]
}

fn is_flat(data: &BranchData) -> bool {
    let mut it = data.points.iter().flat_map(|p| p.frequencies());
    let first = it.next().unwrap_or(0.0);
    it.all(|f| (f - first).abs() <= 1e-12 * first.abs().max(1.0))
}

/// Local fit from `init`; restarts the simplex at the incumbent until a
/// restart yields no improvement. After `max_iter` total iterations the best
/// point is returned with `converged = false`.
pub fn fit_coupling(
    data: &BranchData,
    fixed: &FitFixed,
    init: &FitParams,
    max_iter: usize,
) -> Result<FitResult> {
    fixed.validate()?;
    if !init.is_finite() {
        return Err(Error::validation("init", "initial guess must be finite"));
    }
    // centre the control axis for conditioning
    let c0 = data.mean_control();
    let to_x = |p: &FitParams| vec![p.j, p.gamma_eff.abs(), p.slope, p.intercept + p.slope * c0];
    let from_x = |x: &[f64]| FitParams {
        j: x[0],
        gamma_eff: x[1].abs(),
        slope: x[2],
        intercept: x[3] - x[2] * c0,
    };
    let objective = |x: &[f64]| sum_sq(data, fixed, &from_x(x));

    let n = data.frequency_count() as f64;
    let spread = {
        let fs: Vec<f64> = data.points.iter().flat_map(|p| p.frequencies()).collect();
        fs.iter().copied().fold(f64::NEG_INFINITY, f64::max) - fs.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let scale = spread.max(1e-3);
    let mut x = to_x(init);
    let mut value = objective(&x);
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..=MAX_RESTARTS {
        if iterations >= max_iter {
            break;
        }
        let steps = [
            0.1 * x[0].abs().max(0.01 * scale),
            0.1 * x[1].abs().max(0.01 * scale),
            0.1 * x[2].abs().max(1e-3),
            0.05 * scale,
        ];
        let opts = NelderMeadOptions {
            max_iter: max_iter - iterations,
            f_rel_tol: F_REL_TOL,
            x_tol: X_TOL,
            f_abs_tol: n * RMS_TARGET * RMS_TARGET,
        };
        let m = nelder_mead(objective, &x, &steps, &opts);
        iterations += m.iterations;
        converged = m.converged();
        let improved = m.value < value * (1.0 - 1e-12);
        if m.value <= value {
            x = m.x;
            value = m.value;
        }
        if m.reason == StopReason::TargetReached || (converged && !improved) {
            break;
        }
    }
    let best = from_x(&x);
    let mut warnings = Vec::new();
    if is_flat(data) {
        warnings.push(FitWarning::FlatObjective);
    }
    Ok(FitResult {
        j_hat: best.j,
        gamma_eff_hat: best.gamma_eff,
        detuning_map: (best.slope, best.intercept),
        residual_rms: (value / n).sqrt(),
        converged,
        iterations,
        warnings,
    })
}

/// Fits from every [`initial_guesses`] start and keeps the best.
pub fn fit_coupling_auto(data: &BranchData, fixed: &FitFixed, max_iter: usize) -> Result<FitResult> {
    let mut best: Option<FitResult> = None;
    for init in initial_guesses(data, fixed) {
        let r = fit_coupling(data, fixed, &init, max_iter)?;
        if best.as_ref().is_none_or(|b| r.residual_rms < b.residual_rms) {
            best = Some(r);
        }
    }
    Ok(best.expect("at least one initial guess"))
}

/// Noise-free branch data from the model: two branches at every control value.
pub fn synthetic_branches(fixed: &FitFixed, params: &FitParams, controls: &[f64]) -> Result<BranchData> {
    BranchData::new(
        controls
            .iter()
            .map(|&c| {
                let [lo, hi] = branch_frequencies(fixed, params, c);
                BranchPoint {
                    control: c,
                    lower: lo,
                    upper: Some(hi),
                }
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIXED: FitFixed = FitFixed {
        omega_a: 4.22,
        alpha_eff: 0.011,
        beta_eff: 0.002,
    };

    fn controls(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    fn truth(j: f64, g: f64) -> FitParams {
        FitParams {
            j,
            gamma_eff: g,
            slope: 0.6,
            intercept: 3.92,
        }
    }

    #[test]
    fn recovers_coherent_coupling() {
        let t = truth(0.075, 0.0);
        let data = synthetic_branches(&FIXED, &t, &controls(20)).unwrap();
        let r = fit_coupling_auto(&data, &FIXED, 20_000).unwrap();
        assert!((r.j_hat - 0.075).abs() < 1e-3, "{r:?}");
        assert!(r.gamma_eff_hat < 1e-3, "{r:?}");
        assert!(r.j_hat.abs() > r.gamma_eff_hat);
    }

    #[test]
    fn recovers_dissipative_coupling() {
        let t = truth(0.0, 0.02);
        let data = synthetic_branches(&FIXED, &t, &controls(20)).unwrap();
        let r = fit_coupling_auto(&data, &FIXED, 20_000).unwrap();
        assert!((r.gamma_eff_hat - 0.02).abs() < 1e-3, "{r:?}");
        assert!(r.j_hat.abs() < 1e-3, "{r:?}");
        assert!(r.gamma_eff_hat > r.j_hat.abs());
    }

    #[test]
    fn exact_init_is_already_optimal() {
        let t = truth(0.075, 0.0);
        let data = synthetic_branches(&FIXED, &t, &controls(20)).unwrap();
        let r = fit_coupling(&data, &FIXED, &t, 1000).unwrap();
        assert!(r.residual_rms < 1e-12);
        assert!(r.iterations <= 1);
        assert!(r.converged);
    }

    #[test]
    fn refit_does_not_increase_residual() {
        let t = truth(0.05, 0.01);
        let mut data = synthetic_branches(&FIXED, &t, &controls(12)).unwrap();
        for (k, p) in data.points.iter_mut().enumerate() {
            p.lower += 1e-4 * ((k * 7 % 5) as f64 - 2.0);
        }
        let r1 = fit_coupling_auto(&data, &FIXED, 20_000).unwrap();
        let r2 = fit_coupling(&data, &FIXED, &r1.params(), 20_000).unwrap();
        assert!(r2.residual_rms <= r1.residual_rms);
    }

    #[test]
    fn iteration_cap() {
        let data = synthetic_branches(&FIXED, &truth(0.075, 0.0), &controls(20)).unwrap();
        let init = FitParams {
            j: 0.01,
            gamma_eff: 0.01,
            slope: 0.5,
            intercept: 4.0,
        };
        let r = fit_coupling(&data, &FIXED, &init, 5).unwrap();
        assert!(!r.converged);
        assert!(r.iterations <= 5);
        assert!(r.residual_rms.is_finite());
    }

    #[test]
    fn flat_data_warns() {
        let pts = (0..5)
            .map(|i| BranchPoint {
                control: i as f64,
                lower: 4.2,
                upper: Some(4.2),
            })
            .collect();
        let data = BranchData::new(pts).unwrap();
        let r = fit_coupling_auto(&data, &FIXED, 2000).unwrap();
        assert_eq!(r.warnings, vec![FitWarning::FlatObjective]);
    }

    #[test]
    fn rejects_non_finite_init() {
        let data = synthetic_branches(&FIXED, &truth(0.075, 0.0), &controls(6)).unwrap();
        let mut init = truth(0.075, 0.0);
        init.j = f64::NAN;
        assert!(fit_coupling(&data, &FIXED, &init, 100).is_err());
    }
}
