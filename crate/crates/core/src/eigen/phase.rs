use super::classify::{classify_analytic, real_gap_at_zero_detuning, Regime};
use crate::exec::map_indexed;
use crate::{EffectiveParams, Error, Execution, FrequencyGrid, Result};

/// Axes and fixed quantities of an (α′, β′, J) phase diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseDiagramSpec {
    pub alpha_axis: FrequencyGrid,
    pub beta_axis: FrequencyGrid,
    pub j_axis: FrequencyGrid,
    pub gamma_eff: f64,
    /// Bounds on ω_B − ω_A (GHz) within which a crossing must occur.
    pub detuning_range: (f64, f64),
}

impl PhaseDiagramSpec {
    /// α′, β′ ∈ [0, 0.1], J ∈ [0, 0.08], Γ′ = 0.001, 40 points per axis.
    pub fn default_axes() -> Self {
        let damping = FrequencyGrid::new(0.0, 0.1, 40).expect("static grid");
        Self {
            alpha_axis: damping,
            beta_axis: damping,
            j_axis: FrequencyGrid::new(0.0, 0.08, 40).expect("static grid"),
            gamma_eff: 0.001,
            detuning_range: (-0.5, 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseDiagram {
    pub spec: PhaseDiagramSpec,
    /// Indexed by [`PhaseDiagram::index`].
    pub labels: Vec<Regime>,
    /// Re(E+ − E−) at zero detuning, for colour-mapping.
    pub re_gap_zero: Vec<f64>,
}

impl PhaseDiagram {
    pub fn shape(&self) -> (usize, usize, usize) {
        (
            self.spec.alpha_axis.len(),
            self.spec.beta_axis.len(),
            self.spec.j_axis.len(),
        )
    }

    pub fn index(&self, ia: usize, ib: usize, ij: usize) -> usize {
        let (_, nb, nj) = self.shape();
        (ia * nb + ib) * nj + ij
    }

    pub fn label(&self, ia: usize, ib: usize, ij: usize) -> Regime {
        self.labels[self.index(ia, ib, ij)]
    }

    pub fn count(&self, regime: Regime) -> usize {
        self.labels.iter().filter(|&&r| r == regime).count()
    }

    /// Attraction cells per J index.
    pub fn attraction_by_j(&self) -> Vec<usize> {
        let (na, nb, nj) = self.shape();
        let mut out = vec![0; nj];
        for ia in 0..na {
            for ib in 0..nb {
                for (ij, n) in out.iter_mut().enumerate() {
                    if self.label(ia, ib, ij) == Regime::LevelAttraction {
                        *n += 1;
                    }
                }
            }
        }
        out
    }
}

pub fn phase_diagram(spec: &PhaseDiagramSpec) -> Result<PhaseDiagram> {
    phase_diagram_with(spec, Execution::default())
}

pub fn phase_diagram_with(spec: &PhaseDiagramSpec, exec: Execution) -> Result<PhaseDiagram> {
    if !(spec.gamma_eff >= 0.0) || !spec.gamma_eff.is_finite() {
        return Err(Error::validation(
            "gamma_eff",
            format!("must be finite and >= 0, got {}", spec.gamma_eff),
        ));
    }
    for (name, axis) in [("alpha_eff", &spec.alpha_axis), ("beta_eff", &spec.beta_axis)] {
        if axis.start() < 0.0 {
            return Err(Error::validation(name, "damping axis must be non-negative"));
        }
    }
    let (na, nb, nj) = (spec.alpha_axis.len(), spec.beta_axis.len(), spec.j_axis.len());
    let cells = map_indexed(exec, na * nb * nj, |idx| -> Result<(Regime, f64)> {
        let ij = idx % nj;
        let ib = (idx / nj) % nb;
        let ia = idx / (nj * nb);
        let (a, b, j) = (spec.alpha_axis.at(ia), spec.beta_axis.at(ib), spec.j_axis.at(ij));
        let base = EffectiveParams::from_totals(1.0, 1.0, a, b, j, spec.gamma_eff)?;
        let label = classify_analytic(&base, j, spec.gamma_eff, spec.detuning_range)?;
        Ok((label.regime, real_gap_at_zero_detuning(a, b, j, spec.gamma_eff)))
    });
    let mut labels = Vec::with_capacity(cells.len());
    let mut re_gap_zero = Vec::with_capacity(cells.len());
    for cell in cells {
        let (label, gap) = cell?;
        labels.push(label);
        re_gap_zero.push(gap);
    }
    Ok(PhaseDiagram {
        spec: *spec,
        labels,
        re_gap_zero,
    })
}
