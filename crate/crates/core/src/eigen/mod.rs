//! Eigenanalysis of the non-Hermitian 2×2 coupling matrix
//!
//! ```text
//! H = | ω_A − iα′    Δ′        |      Δ′ = J + iΓ′
//!     | Δ′           ω_B − iβ′ |
//! ```
//!
//! with eigenvalues `E± = [tr ± √(4Δ′² + (ω̃_A′ − ω̃_B′)²)] / 2`. Along a sweep
//! of ω_B the square root is continued so that the branches are smooth; the
//! first point uses the principal root.

mod classify;
mod phase;

pub use classify::{
    classify_analytic, classify_numeric, classify_totals_numeric, LabelNote, Regime, RegimeLabel,
    DEFAULT_EPS,
};
pub use phase::{phase_diagram, phase_diagram_with, PhaseDiagram, PhaseDiagramSpec};

use crate::linalg::Mat2;
use crate::{EffectiveParams, Error, FrequencyGrid, Result, SystemParams, C64};

/// Discriminants below this magnitude mark an exceptional point.
pub const EXCEPTIONAL_THRESHOLD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingMatrix {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
}

pub fn coupling_matrix(eff: &EffectiveParams) -> CouplingMatrix {
    CouplingMatrix {
        m11: eff.omega_a_tilde,
        m12: eff.delta_eff,
        m21: eff.delta_eff,
        m22: eff.omega_b_tilde,
    }
}

impl CouplingMatrix {
    pub fn as_array(&self) -> Mat2 {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    pub fn trace(&self) -> C64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> C64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    /// `(E+ − E−)² = 4Δ′² + (ω̃_A′ − ω̃_B′)²`.
    pub fn discriminant(&self) -> C64 {
        let d = self.m11 - self.m22;
        4.0 * self.m12 * self.m21 + d * d
    }

    /// Eigenvalues with the principal square root: `[E+, E−]`.
    pub fn eigenvalues(&self) -> [C64; 2] {
        let half_tr = 0.5 * self.trace();
        let half_root = 0.5 * self.discriminant().sqrt();
        [half_tr + half_root, half_tr - half_root]
    }
}

/// Continuity-labelled eigenvalues along a sweep of ω_B.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBranches {
    pub detuning_axis: FrequencyGrid,
    pub e_plus: Vec<C64>,
    pub e_minus: Vec<C64>,
    /// Sweep indices where the discriminant is below [`EXCEPTIONAL_THRESHOLD`].
    pub exceptional: Vec<usize>,
}

impl EigenBranches {
    pub fn len(&self) -> usize {
        self.e_plus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e_plus.is_empty()
    }

    /// `E+ − E−` at every sweep point.
    pub fn differences(&self) -> Vec<C64> {
        self.e_plus
            .iter()
            .zip(&self.e_minus)
            .map(|(p, m)| p - m)
            .collect()
    }
}

pub fn eigenbranches(p_template: &SystemParams, detunings: &FrequencyGrid) -> Result<EigenBranches> {
    eigenbranches_effective(&p_template.effective(), detunings)
}

pub fn eigenbranches_effective(
    base: &EffectiveParams,
    detunings: &FrequencyGrid,
) -> Result<EigenBranches> {
    if detunings.start() <= 0.0 {
        return Err(Error::validation(
            "omega_b",
            format!("sweep must stay positive, starts at {}", detunings.start()),
        ));
    }
    let n = detunings.len();
    let mut e_plus = Vec::with_capacity(n);
    let mut e_minus = Vec::with_capacity(n);
    let mut exceptional = Vec::new();
    let mut prev_root: Option<C64> = None;
    for (i, omega_b) in detunings.iter().enumerate() {
        let m = coupling_matrix(&base.with_omega_b(omega_b));
        let disc = m.discriminant();
        if disc.norm() < EXCEPTIONAL_THRESHOLD {
            exceptional.push(i);
        }
        let mut root = disc.sqrt();
        if let Some(prev) = prev_root {
            if (root + prev).norm() < (root - prev).norm() {
                root = -root;
            }
        }
        prev_root = Some(root);
        let half_tr = 0.5 * m.trace();
        e_plus.push(half_tr + 0.5 * root);
        e_minus.push(half_tr - 0.5 * root);
    }
    Ok(EigenBranches {
        detuning_axis: *detunings,
        e_plus,
        e_minus,
        exceptional,
    })
}
