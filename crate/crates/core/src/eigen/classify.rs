//! Level-repulsion / level-attraction classification.
//!
//! Numeric route: scan `E+ − E−` along a sweep. Real parts crossing while the
//! imaginary parts stay apart is level attraction; the converse is level
//! repulsion.
//!
//! Analytic route: with η = α′ − β′ and offset s = ω_B − ω_A,
//!
//! ```text
//! (E+ − E−)² = 4J² − 4Γ′² + s² − η² + i(8JΓ′ + 2sη)
//! ```
//!
//! The imaginary part vanishes at s* = −4JΓ′/η, where the real part equals
//! (4J² − η²)(1 + 4Γ′²/η²). The real parts therefore cross iff |J| < |η|/2
//! and s* lies inside the sweep.
//!
//! In the attraction regime the touch points P1, P2 are the edges of the
//! window `s² < 4Γ′² + η² − 4J²` where `(E+ − E−)²` has negative real part;
//! between them the real branches merge.

use super::{coupling_matrix, eigenbranches_effective, EigenBranches};
use crate::{EffectiveParams, Error, FrequencyGrid, Result};

/// Default crossing tolerance (GHz).
pub const DEFAULT_EPS: f64 = 1e-6;

/// Below this |α′ − β′| the crossing detuning is undefined.
const DEGENERATE_DAMPING: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    LevelRepulsion,
    LevelAttraction,
    Marginal,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::LevelRepulsion => "LevelRepulsion",
            Regime::LevelAttraction => "LevelAttraction",
            Regime::Marginal => "Marginal",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelNote {
    /// |α′ − β′| is zero to working precision; no real-part crossing exists.
    DegenerateDamping,
    /// A crossing was located by a sign change with no sample within eps.
    CoarseSweep,
}

/// Regime label plus the diagnostics behind it. Crossing positions are
/// reported as ω_B values (GHz).
#[derive(Debug, Clone, PartialEq)]
pub struct RegimeLabel {
    pub regime: Regime,
    /// min |Re(E+ − E−)| over the piecewise-linear sweep; `None` for analytic labels.
    pub min_real_gap: Option<f64>,
    /// min |Im(E+ − E−)| over the piecewise-linear sweep; `None` for analytic labels.
    pub min_imag_gap: Option<f64>,
    pub real_crossings: Vec<f64>,
    pub imag_crossings: Vec<f64>,
    /// P1/P2; non-empty iff the regime is level attraction.
    pub touch_points: Vec<f64>,
    pub notes: Vec<LabelNote>,
}

impl RegimeLabel {
    pub fn crossing_detunings(&self) -> &[f64] {
        &self.touch_points
    }
}

struct ZeroScan {
    min_abs: f64,
    crossings: Vec<f64>,
    coarse: bool,
}

/// Locates zeros of a sampled curve: each run of samples with |y| ≤ tol
/// counts once, and so does each sign change between adjacent samples
/// outside such runs (placed by linear interpolation).
fn scan_zeros(xs: &[f64], ys: &[f64], tol: f64) -> ZeroScan {
    let mut min_abs = f64::INFINITY;
    let mut crossings = Vec::new();
    let mut coarse = false;
    let mut run: Option<(f64, f64)> = None; // (x at smallest |y|, smallest |y|)
    for i in 0..ys.len() {
        let y = ys[i];
        min_abs = min_abs.min(y.abs());
        if y.abs() <= tol {
            run = match run {
                Some((x, best)) if best <= y.abs() => Some((x, best)),
                _ => Some((xs[i], y.abs())),
            };
            continue;
        }
        if let Some((x, _)) = run.take() {
            crossings.push(x);
        } else if i > 0 && ys[i - 1].abs() > tol && ys[i - 1].signum() != y.signum() {
            let (x0, y0) = (xs[i - 1], ys[i - 1]);
            crossings.push(x0 + (xs[i] - x0) * y0 / (y0 - y));
            coarse = true;
            min_abs = 0.0;
        }
    }
    if let Some((x, _)) = run {
        crossings.push(x);
    }
    ZeroScan {
        min_abs,
        crossings,
        coarse,
    }
}

pub fn classify_numeric(branches: &EigenBranches, eps: f64) -> Result<RegimeLabel> {
    if !(eps > 0.0) {
        return Err(Error::validation("eps", format!("must be > 0, got {eps}")));
    }
    let xs = branches.detuning_axis.points();
    let diffs = branches.differences();
    let re: Vec<f64> = diffs.iter().map(|d| d.re).collect();
    let im: Vec<f64> = diffs.iter().map(|d| d.im).collect();
    let re_sq: Vec<f64> = diffs.iter().map(|d| (d * d).re).collect();

    let real = scan_zeros(&xs, &re, eps);
    let imag = scan_zeros(&xs, &im, eps);
    let real_touch = !real.crossings.is_empty();
    let imag_touch = !imag.crossings.is_empty();
    let regime = match (real_touch, imag_touch) {
        (true, false) => Regime::LevelAttraction,
        (false, true) => Regime::LevelRepulsion,
        _ => Regime::Marginal,
    };

    let mut notes = Vec::new();
    if real.coarse || imag.coarse {
        notes.push(LabelNote::CoarseSweep);
    }
    let touch_points = if regime == Regime::LevelAttraction {
        let window = scan_zeros(&xs, &re_sq, eps * eps);
        if window.crossings.is_empty() {
            real.crossings.clone()
        } else {
            window.crossings
        }
    } else {
        Vec::new()
    };
    Ok(RegimeLabel {
        regime,
        min_real_gap: Some(real.min_abs),
        min_imag_gap: Some(imag.min_abs),
        real_crossings: real.crossings,
        imag_crossings: imag.crossings,
        touch_points,
        notes,
    })
}

/// Closed-form classification from |J| < |α′ − β′|/2 and the crossing
/// detuning s* = −4JΓ′/(α′ − β′).
///
/// `detuning_range` bounds the offset `ω_B − ω_A` (GHz).
pub fn classify_analytic(
    base: &EffectiveParams,
    j: f64,
    gamma_eff: f64,
    detuning_range: (f64, f64),
) -> Result<RegimeLabel> {
    let (lo, hi) = detuning_range;
    if !(lo < hi) {
        return Err(Error::validation(
            "detuning_range",
            format!("must satisfy lo < hi, got ({lo}, {hi})"),
        ));
    }
    let eta = base.alpha_eff - base.beta_eff;
    let mut label = RegimeLabel {
        regime: Regime::LevelRepulsion,
        min_real_gap: None,
        min_imag_gap: None,
        real_crossings: Vec::new(),
        imag_crossings: Vec::new(),
        touch_points: Vec::new(),
        notes: Vec::new(),
    };
    if eta.abs() < DEGENERATE_DAMPING {
        if j != 0.0 {
            label.notes.push(LabelNote::DegenerateDamping);
        }
        return Ok(label);
    }
    let s_star = -4.0 * j * gamma_eff / eta;
    let crossing_inside = s_star >= lo && s_star <= hi;
    let omega_a = base.omega_a;
    if j.abs() < eta.abs() / 2.0 && crossing_inside {
        label.regime = Regime::LevelAttraction;
        label.real_crossings.push(omega_a + s_star);
        let half_width = (4.0 * gamma_eff * gamma_eff + eta * eta - 4.0 * j * j).sqrt();
        label.touch_points = [-half_width, half_width]
            .into_iter()
            .filter(|s| *s >= lo && *s <= hi)
            .map(|s| omega_a + s)
            .collect();
        if label.touch_points.is_empty() {
            label.touch_points.push(omega_a + s_star);
        }
    } else if crossing_inside {
        label.imag_crossings.push(omega_a + s_star);
    }
    Ok(label)
}

/// Numeric classification from total dampings and effective couplings,
/// sweeping ω_B over `sweep`.
pub fn classify_totals_numeric(
    omega_a: f64,
    alpha_eff: f64,
    beta_eff: f64,
    j: f64,
    gamma_eff: f64,
    sweep: &FrequencyGrid,
    eps: f64,
) -> Result<RegimeLabel> {
    let eff = EffectiveParams::from_totals(omega_a, omega_a, alpha_eff, beta_eff, j, gamma_eff)?;
    classify_numeric(&eigenbranches_effective(&eff, sweep)?, eps)
}

/// Re(E+ − E−) at zero detuning, principal root.
pub(crate) fn real_gap_at_zero_detuning(alpha_eff: f64, beta_eff: f64, j: f64, gamma_eff: f64) -> f64 {
    let eff = EffectiveParams::from_totals(1.0, 1.0, alpha_eff, beta_eff, j, gamma_eff)
        .expect("phase-diagram axes are validated");
    coupling_matrix(&eff).discriminant().sqrt().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigen::eigenbranches;
    use crate::SystemParams;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn preset(j: f64, gg: f64) -> SystemParams {
        SystemParams::new(4.22, 4.22, 0.001, 0.001, 0.01, 0.001, j, gg).unwrap()
    }

    fn sweep() -> FrequencyGrid {
        FrequencyGrid::new(3.84, 4.59, 751).unwrap()
    }

    #[test]
    fn cit_is_repulsion() {
        let br = eigenbranches(&preset(0.05, 0.0), &sweep()).unwrap();
        let label = classify_numeric(&br, DEFAULT_EPS).unwrap();
        assert_eq!(label.regime, Regime::LevelRepulsion);
        assert_eq!(label.imag_crossings.len(), 1);
        assert!(label.real_crossings.is_empty());
        assert!(label.touch_points.is_empty());
        // s* = −4JΓ′/η
        let e = preset(0.05, 0.0).effective();
        let s_star = -4.0 * 0.05 * e.gamma_eff / (e.alpha_eff - e.beta_eff);
        assert!((label.imag_crossings[0] - (4.22 + s_star)).abs() < 1e-4);
    }

    #[test]
    fn cia_is_attraction_with_two_touch_points() {
        let br = eigenbranches(&preset(0.0, 0.05), &sweep()).unwrap();
        let label = classify_numeric(&br, DEFAULT_EPS).unwrap();
        assert_eq!(label.regime, Regime::LevelAttraction);
        assert_eq!(label.touch_points.len(), 2);
        let e = preset(0.0, 0.05).effective();
        let eta = e.alpha_eff - e.beta_eff;
        let half = (4.0 * e.gamma_eff * e.gamma_eff + eta * eta).sqrt();
        assert!((label.touch_points[0] - (4.22 - half)).abs() < 1e-3);
        assert!((label.touch_points[1] - (4.22 + half)).abs() < 1e-3);
        assert_eq!(label.real_crossings.len(), 1);
        assert!((label.real_crossings[0] - 4.22).abs() < 1e-9);
    }

    #[test]
    fn uncoupled_equal_damping_is_marginal() {
        let eff = EffectiveParams::from_totals(4.22, 4.22, 0.005, 0.005, 0.0, 0.0).unwrap();
        let br = eigenbranches_effective(&eff, &sweep()).unwrap();
        assert_eq!(classify_numeric(&br, DEFAULT_EPS).unwrap().regime, Regime::Marginal);
    }

    #[test]
    fn rejects_non_positive_eps() {
        let br = eigenbranches(&preset(0.05, 0.0), &sweep()).unwrap();
        assert!(classify_numeric(&br, 0.0).is_err());
    }

    #[test]
    fn analytic_examples() {
        let base = EffectiveParams::from_totals(4.22, 4.22, 0.011, 0.0011, 0.0, 0.0).unwrap();
        let l = classify_analytic(&base, 0.075, 0.001, (-0.5, 0.5)).unwrap();
        assert_eq!(l.regime, Regime::LevelRepulsion);

        let base = EffectiveParams::from_totals(4.22, 4.22, 0.05, 0.001, 0.0, 0.0).unwrap();
        let l = classify_analytic(&base, 0.001, 0.001, (-0.5, 0.5)).unwrap();
        assert_eq!(l.regime, Regime::LevelAttraction);
        let s_star = l.real_crossings[0] - 4.22;
        assert!((s_star.abs() - 4.0 * 0.001 * 0.001 / 0.049).abs() < 1e-12);
        assert!((s_star.abs() - 8.163e-5).abs() < 1e-8);
        let grid = FrequencyGrid::new(3.72, 4.72, 2001).unwrap();
        let n = classify_totals_numeric(4.22, 0.05, 0.001, 0.001, 0.001, &grid, DEFAULT_EPS).unwrap();
        assert_eq!(n.regime, Regime::LevelAttraction);
        assert!((n.real_crossings[0] - l.real_crossings[0]).abs() < grid.step());

        // boundary: strict inequality fails
        let base = EffectiveParams::from_totals(4.22, 4.22, 0.05, 0.01, 0.0, 0.0).unwrap();
        let l = classify_analytic(&base, 0.02, 0.001, (-0.5, 0.5)).unwrap();
        assert_eq!(l.regime, Regime::LevelRepulsion);
    }

    #[test]
    fn analytic_degenerate_damping() {
        let base = EffectiveParams::from_totals(4.22, 4.22, 0.01, 0.01, 0.0, 0.0).unwrap();
        let l = classify_analytic(&base, 0.02, 0.001, (-0.5, 0.5)).unwrap();
        assert_eq!(l.regime, Regime::LevelRepulsion);
        assert_eq!(l.notes, vec![LabelNote::DegenerateDamping]);
        assert!(classify_analytic(&base, 0.02, 0.001, (0.5, 0.5)).is_err());
    }

    #[test]
    fn crossing_sign_matches_coherent_threshold() {
        // At s*, Re[(E+ − E−)²] carries the sign of 4J² − η².
        let mut rng = ChaCha8Rng::seed_from_u64(25);
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(0.0..0.1);
            let b: f64 = rng.gen_range(0.0..0.1);
            let j: f64 = rng.gen_range(-0.08..0.08);
            let g: f64 = rng.gen_range(0.0..0.05);
            let eta = a - b;
            if eta.abs() < 1e-9 {
                continue;
            }
            let s_star = -4.0 * j * g / eta;
            if s_star.abs() > 4.0 {
                continue;
            }
            let eff = EffectiveParams::from_totals(4.22, 4.22 + s_star, a, b, j, g).unwrap();
            let disc = coupling_matrix(&eff).discriminant();
            let expected = 4.0 * j * j - eta * eta;
            assert!(disc.im.abs() <= 1e-12, "imaginary part {}", disc.im);
            if expected.abs() > 1e-12 {
                assert_eq!(disc.re.signum(), expected.signum(), "a={a} b={b} j={j} g={g}");
            }
        }
    }

    #[test]
    fn zero_scan_counts_runs_once() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0];
        let ys = [1.0, 1e-9, -1e-9, -1.0, -0.5, 0.5];
        let s = scan_zeros(&xs, &ys, 1e-6);
        assert_eq!(s.crossings.len(), 2);
        assert_eq!(s.crossings[0], 1.0);
        assert!((s.crossings[1] - 4.5).abs() < 1e-12);
        assert!(s.coarse);
        assert_eq!(s.min_abs, 0.0);
    }
}
