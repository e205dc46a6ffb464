//! Frequency-domain forward model: mode amplitudes, the input–output relation,
//! S21 and dispersion maps.
//!
//! Amplitudes are transfer functions per unit input field (`p_in = 1`).

use crate::exec::map_indexed;
use crate::{Error, Execution, FrequencyGrid, Result, SystemParams, C64};

/// Denominators at or below this magnitude are treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-15;

const I: C64 = C64::new(0.0, 1.0);

/// Steady-state amplitudes of modes A and B per unit input.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeAmplitudes {
    pub a: C64,
    pub b: C64,
}

/// Shared denominator of the amplitudes and of S21:
/// `(iΔ + √(κγ))² + (iα + iγ + ω − ω_A)(iβ + iκ + ω − ω_B)`.
fn denominator(p: &SystemParams, omega: f64) -> C64 {
    let line = C64::new(p.line_coupling(), 0.0);
    let x = C64::new(omega - p.omega_a(), p.alpha() + p.gamma());
    let y = C64::new(omega - p.omega_b(), p.beta() + p.kappa());
    (I * p.delta() + line).powi(2) + x * y
}

fn checked_denominator(p: &SystemParams, omega: f64) -> Result<C64> {
    let den = denominator(p, omega);
    if den.norm() <= SINGULAR_THRESHOLD {
        Err(Error::SingularDenominator { omega })
    } else {
        Ok(den)
    }
}

pub fn mode_amplitudes(p: &SystemParams, omega: f64) -> Result<ModeAmplitudes> {
    let den = checked_denominator(p, omega)?;
    let delta = p.delta();
    let (sg, sk) = (p.gamma().sqrt(), p.kappa().sqrt());
    let num_a = delta * sk + I * p.beta() * sg + sg * omega - sg * p.omega_b();
    let num_b = delta * sg + I * p.alpha() * sk + sk * omega - sk * p.omega_a();
    Ok(ModeAmplitudes {
        a: num_a / den,
        b: num_b / den,
    })
}

/// Input–output relation: `p_out = p_in − 2i√κ B − 2i√γ A`.
pub fn output_field(p: &SystemParams, amps: &ModeAmplitudes, p_in: C64) -> C64 {
    p_in + scattered_field(p, amps)
}

/// `p_out − p_in`, formed without rounding through `p_in`.
pub fn scattered_field(p: &SystemParams, amps: &ModeAmplitudes) -> C64 {
    -2.0 * I * (p.kappa().sqrt() * amps.b + p.gamma().sqrt() * amps.a)
}

/// Transmission `S21 = p_out/p_in − 1`, evaluated from the closed form.
pub fn s21(p: &SystemParams, omega: f64) -> Result<C64> {
    let den = checked_denominator(p, omega)?;
    let (a, b, g, k) = (p.alpha(), p.beta(), p.gamma(), p.kappa());
    let num = C64::new(2.0 * a * k + 2.0 * b * g, 0.0)
        - 4.0 * I * p.delta() * p.line_coupling()
        - 2.0 * I * g * (omega - p.omega_b())
        - 2.0 * I * k * (omega - p.omega_a());
    Ok(num / den)
}

/// S21 assembled from the mode amplitudes and the input–output relation as
/// `(p_out − p_in)/p_in`. Agrees with [`s21`] to rounding; kept as an
/// independent route.
pub fn s21_composed(p: &SystemParams, omega: f64) -> Result<C64> {
    let amps = mode_amplitudes(p, omega)?;
    Ok(scattered_field(p, &amps))
}

/// `20·log10|z|`.
pub fn magnitude_db(z: C64) -> f64 {
    20.0 * z.norm().log10()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub s21: Vec<C64>,
    pub params: SystemParams,
}

impl Spectrum {
    pub fn magnitudes(&self) -> Vec<f64> {
        self.s21.iter().map(|z| z.norm()).collect()
    }

    pub fn frequencies(&self) -> Vec<f64> {
        self.grid.points()
    }
}

pub fn spectrum(p: &SystemParams, grid: &FrequencyGrid) -> Result<Spectrum> {
    spectrum_with(p, grid, Execution::Sequential)
}

pub fn spectrum_with(p: &SystemParams, grid: &FrequencyGrid, exec: Execution) -> Result<Spectrum> {
    let values = map_indexed(exec, grid.len(), |i| {
        let omega = grid.at(i);
        s21(p, omega).map_err(|_| Error::SingularAt { index: i, omega })
    });
    let s21 = values.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        grid: *grid,
        s21,
        params: *p,
    })
}

/// |S21| over (ω_B × ω). Row `i` is the spectrum with `ω_B = detuning_axis[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DispersionMap {
    pub detuning_axis: FrequencyGrid,
    pub drive_axis: FrequencyGrid,
    /// Row-major; singular cells hold `NaN` and are listed in `singular`.
    pub magnitudes: Vec<f64>,
    /// `(row, column)` of every cell whose denominator was singular.
    pub singular: Vec<(usize, usize)>,
    pub params_template: SystemParams,
}

impl DispersionMap {
    pub fn rows(&self) -> usize {
        self.detuning_axis.len()
    }

    pub fn cols(&self) -> usize {
        self.drive_axis.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.cols();
        &self.magnitudes[i * n..(i + 1) * n]
    }

    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.magnitudes[i * self.cols() + k]
    }
}

pub fn dispersion_map(
    p_template: &SystemParams,
    detunings: &FrequencyGrid,
    drive: &FrequencyGrid,
) -> Result<DispersionMap> {
    dispersion_map_with(p_template, detunings, drive, Execution::default())
}

pub fn dispersion_map_with(
    p_template: &SystemParams,
    detunings: &FrequencyGrid,
    drive: &FrequencyGrid,
    exec: Execution,
) -> Result<DispersionMap> {
    let rows = map_indexed(exec, detunings.len(), |i| -> Result<Vec<f64>> {
        let p = p_template.with_omega_b(detunings.at(i))?;
        Ok(drive
            .iter()
            .map(|w| s21(&p, w).map_or(f64::NAN, |z| z.norm()))
            .collect())
    });
    let cols = drive.len();
    let mut magnitudes = Vec::with_capacity(detunings.len() * cols);
    let mut singular = Vec::new();
    for (i, row) in rows.into_iter().enumerate() {
        let row = row?;
        for (k, v) in row.iter().enumerate() {
            if v.is_nan() {
                singular.push((i, k));
            }
        }
        magnitudes.extend(row);
    }
    Ok(DispersionMap {
        detuning_axis: *detunings,
        drive_axis: *drive,
        magnitudes,
        singular,
        params_template: *p_template,
    })
}
