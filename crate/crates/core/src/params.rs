//! Parameter model of the two-mode hybrid system.
//!
//! All frequencies and rates share one linear-frequency unit (GHz). The
//! extrinsic rates `gamma` and `kappa` absorb the mode–line coupling
//! strengths: `gamma = 2π λ_A²`, `kappa = 2π λ_B²`.

use crate::{Error, Result, C64};

/// Raw model parameters. Validated at construction; immutable afterwards.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    omega_a: f64,
    omega_b: f64,
    alpha: f64,
    beta: f64,
    gamma: f64,
    kappa: f64,
    j: f64,
    big_gamma: f64,
}

/// Field names in declaration order, as used by config files.
pub const FIELD_NAMES: [&str; 8] = [
    "omega_a",
    "omega_b",
    "alpha",
    "beta",
    "gamma",
    "kappa",
    "j",
    "big_gamma",
];

fn positive(field: &'static str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::validation(field, format!("must be finite, got {v}")));
    }
    if v <= 0.0 {
        return Err(Error::validation(field, format!("must be > 0, got {v}")));
    }
    Ok(v)
}

fn non_negative(field: &'static str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::validation(field, format!("must be finite, got {v}")));
    }
    if v < 0.0 {
        return Err(Error::validation(field, format!("must be >= 0, got {v}")));
    }
    Ok(v)
}

impl SystemParams {
    /// Arguments follow [`FIELD_NAMES`] order.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        omega_a: f64,
        omega_b: f64,
        alpha: f64,
        beta: f64,
        gamma: f64,
        kappa: f64,
        j: f64,
        big_gamma: f64,
    ) -> Result<Self> {
        if !j.is_finite() {
            return Err(Error::validation("j", format!("must be finite, got {j}")));
        }
        Ok(Self {
            omega_a: positive("omega_a", omega_a)?,
            omega_b: positive("omega_b", omega_b)?,
            alpha: non_negative("alpha", alpha)?,
            beta: non_negative("beta", beta)?,
            gamma: non_negative("gamma", gamma)?,
            kappa: non_negative("kappa", kappa)?,
            j,
            big_gamma: non_negative("big_gamma", big_gamma)?,
        })
    }

    /// Builds from values in [`FIELD_NAMES`] order.
    pub fn from_array(v: [f64; 8]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], v[4], v[5], v[6], v[7])
    }

    pub fn to_array(&self) -> [f64; 8] {
        [
            self.omega_a,
            self.omega_b,
            self.alpha,
            self.beta,
            self.gamma,
            self.kappa,
            self.j,
            self.big_gamma,
        ]
    }

    pub fn omega_a(&self) -> f64 {
        self.omega_a
    }
    pub fn omega_b(&self) -> f64 {
        self.omega_b
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn j(&self) -> f64 {
        self.j
    }
    pub fn big_gamma(&self) -> f64 {
        self.big_gamma
    }

    /// Complex bare coupling Δ = J + iΓ.
    pub fn delta(&self) -> C64 {
        C64::new(self.j, self.big_gamma)
    }

    /// √(γκ), the line-mediated coupling between the modes.
    pub fn line_coupling(&self) -> f64 {
        (self.gamma * self.kappa).sqrt()
    }

    pub fn with_omega_b(&self, omega_b: f64) -> Result<Self> {
        Ok(Self {
            omega_b: positive("omega_b", omega_b)?,
            ..*self
        })
    }

    pub fn with_coupling(&self, j: f64, big_gamma: f64) -> Result<Self> {
        Self::new(
            self.omega_a,
            self.omega_b,
            self.alpha,
            self.beta,
            self.gamma,
            self.kappa,
            j,
            big_gamma,
        )
    }

    /// Mode roles exchanged: (ω_A, α, γ) ↔ (ω_B, β, κ).
    pub fn swapped(&self) -> Self {
        Self {
            omega_a: self.omega_b,
            omega_b: self.omega_a,
            alpha: self.beta,
            beta: self.alpha,
            gamma: self.kappa,
            kappa: self.gamma,
            ..*self
        }
    }

    pub fn effective(&self) -> EffectiveParams {
        effective_params(self)
    }
}

/// Derived quantities entering the coupling matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveParams {
    pub omega_a: f64,
    pub omega_b: f64,
    /// α′ = α + γ
    pub alpha_eff: f64,
    /// β′ = β + κ
    pub beta_eff: f64,
    /// Γ′ = Γ + √(γκ)
    pub gamma_eff: f64,
    /// Δ′ = J + iΓ′
    pub delta_eff: C64,
    /// ω_A − iα′
    pub omega_a_tilde: C64,
    /// ω_B − iβ′
    pub omega_b_tilde: C64,
}

pub fn effective_params(p: &SystemParams) -> EffectiveParams {
    let alpha_eff = p.alpha + p.gamma;
    let beta_eff = p.beta + p.kappa;
    let gamma_eff = p.big_gamma + (p.gamma * p.kappa).sqrt();
    EffectiveParams {
        omega_a: p.omega_a,
        omega_b: p.omega_b,
        alpha_eff,
        beta_eff,
        gamma_eff,
        delta_eff: C64::new(p.j, gamma_eff),
        omega_a_tilde: C64::new(p.omega_a, -alpha_eff),
        omega_b_tilde: C64::new(p.omega_b, -beta_eff),
    }
}

impl EffectiveParams {
    /// Builds effective parameters directly from total dampings and the
    /// effective couplings, bypassing the intrinsic/extrinsic split.
    pub fn from_totals(
        omega_a: f64,
        omega_b: f64,
        alpha_eff: f64,
        beta_eff: f64,
        j: f64,
        gamma_eff: f64,
    ) -> Result<Self> {
        // Equivalent to a system with all damping intrinsic and Γ = Γ′.
        let p = SystemParams::new(omega_a, omega_b, alpha_eff, beta_eff, 0.0, 0.0, j, gamma_eff)?;
        Ok(effective_params(&p))
    }

    pub fn j(&self) -> f64 {
        self.delta_eff.re
    }

    pub fn with_omega_b(&self, omega_b: f64) -> Self {
        Self {
            omega_b,
            omega_b_tilde: C64::new(omega_b, -self.beta_eff),
            ..*self
        }
    }

    pub fn with_coupling(&self, j: f64, gamma_eff: f64) -> Self {
        Self {
            gamma_eff,
            delta_eff: C64::new(j, gamma_eff),
            ..*self
        }
    }
}
