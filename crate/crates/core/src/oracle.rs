//! Time-domain check on the closed-form transmission.
//!
//! The driven mode equations
//!
//! ```text
//! dA/dt = −iω̃_A A − i√γ p_in − γA − √(κγ) B − iΔB
//! dB/dt = −iω̃_B B − i√κ p_in − κB − √(κγ) A − iΔA
//! ```
//!
//! with `p_in = amplitude·e^{−iωt}` are integrated from rest by classical RK4.
//! Stepping happens in the frame co-rotating with the drive, where the forcing
//! is constant; traces are reported in the lab frame.

use crate::exec::map_indexed;
use crate::linalg::{self, Mat2};
use crate::spectrum;
use crate::{Error, Execution, FrequencyGrid, Result, SystemParams, C64};

/// Largest allowed residual oscillation of a steady state.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-5;
/// Amplitudes above this multiple of the drive abort the integration.
pub const INSTABILITY_FACTOR: f64 = 1e6;
/// Default settling time in units of the slowest decay time.
pub const SETTLING_FACTOR: f64 = 40.0;
/// Default step as a fraction of the inverse rotating-frame rate scale.
pub const STEP_FRACTION: f64 = 0.25;
/// Largest accepted step, same units as [`STEP_FRACTION`].
pub const MAX_STEP_FRACTION: f64 = 0.5;
/// Minimum averaging window, in drive periods.
pub const MIN_WINDOW_PERIODS: f64 = 5.0;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub omega: f64,
    pub amplitude: C64,
}

impl DriveSpec {
    pub fn new(omega: f64, amplitude: C64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::validation("omega", format!("must be finite and > 0, got {omega}")));
        }
        if !(amplitude.norm() > 0.0 && amplitude.norm().is_finite()) {
            return Err(Error::validation("amplitude", "must be finite and nonzero"));
        }
        Ok(Self { omega, amplitude })
    }

    pub fn unit(omega: f64) -> Result<Self> {
        Self::new(omega, C64::new(1.0, 0.0))
    }

    pub fn period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeTrace {
    pub times: Vec<f64>,
    pub a_values: Vec<C64>,
    pub b_values: Vec<C64>,
    pub drive: DriveSpec,
}

impl TimeTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyState {
    pub a: C64,
    pub b: C64,
    pub residual_oscillation: f64,
}

/// Tunables for [`oracle_s21_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Fixed step; `None` picks [`STEP_FRACTION`] of the rate scale.
    pub dt: Option<f64>,
    pub settling_factor: f64,
    pub window_periods: f64,
    pub threshold: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            dt: None,
            settling_factor: SETTLING_FACTOR,
            window_periods: 10.0,
            threshold: CONVERGENCE_THRESHOLD,
        }
    }
}

/// Linear system `x' = G x + f` in the rotating frame.
struct Rotating {
    g: Mat2,
    f: [C64; 2],
}

impl Rotating {
    fn new(p: &SystemParams, drive: &DriveSpec) -> Self {
        let w = drive.omega;
        let cross = -(p.line_coupling() + I * p.delta());
        let g = [
            [C64::new(-p.alpha() - p.gamma(), w - p.omega_a()), cross],
            [cross, C64::new(-p.beta() - p.kappa(), w - p.omega_b())],
        ];
        let f = [
            -I * p.gamma().sqrt() * drive.amplitude,
            -I * p.kappa().sqrt() * drive.amplitude,
        ];
        Self { g, f }
    }

    fn rhs(&self, x: [C64; 2]) -> [C64; 2] {
        let g = &self.g;
        [
            g[0][0] * x[0] + g[0][1] * x[1] + self.f[0],
            g[1][0] * x[0] + g[1][1] * x[1] + self.f[1],
        ]
    }

    fn step(&self, x: [C64; 2], dt: f64) -> [C64; 2] {
        let add = |x: [C64; 2], k: [C64; 2], h: f64| [x[0] + k[0] * h, x[1] + k[1] * h];
        let k1 = self.rhs(x);
        let k2 = self.rhs(add(x, k1, 0.5 * dt));
        let k3 = self.rhs(add(x, k2, 0.5 * dt));
        let k4 = self.rhs(add(x, k3, dt));
        let h = dt / 6.0;
        [
            x[0] + h * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            x[1] + h * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ]
    }
}

/// Largest rate in the rotating frame: detunings from the drive, dampings and
/// couplings.
pub fn rate_scale(p: &SystemParams, omega: f64) -> f64 {
    [
        (p.omega_a() - omega).abs(),
        (p.omega_b() - omega).abs(),
        p.alpha() + p.gamma(),
        p.beta() + p.kappa(),
        p.line_coupling() + p.delta().norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn default_dt(p: &SystemParams, omega: f64) -> f64 {
    STEP_FRACTION / rate_scale(p, omega).max(f64::MIN_POSITIVE)
}

/// Decay rate of the slowest free mode, `−max Im λ` over the eigenvalues of
/// the undriven equations. Non-positive values mean no steady state exists.
pub fn slowest_decay(p: &SystemParams) -> f64 {
    let coupling = p.delta() - I * p.line_coupling();
    let m = [
        [C64::new(p.omega_a(), -p.alpha() - p.gamma()), coupling],
        [coupling, C64::new(p.omega_b(), -p.beta() - p.kappa())],
    ];
    let [e1, e2] = linalg::eigenvalues(&m);
    -e1.im.max(e2.im)
}

fn check_step(p: &SystemParams, drive: &DriveSpec, t_end: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Precondition(format!("dt must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end > 0.0) {
        return Err(Error::Precondition(format!("t_end must be positive, got {t_end}")));
    }
    let limit = MAX_STEP_FRACTION / rate_scale(p, drive.omega).max(f64::MIN_POSITIVE);
    if dt > limit {
        return Err(Error::Precondition(format!(
            "dt = {dt} exceeds stability bound {limit}"
        )));
    }
    Ok((t_end / dt).ceil() as usize)
}

/// Integrates from rest and records lab-frame amplitudes at steps whose index
/// is at least `first_recorded`.
fn run(
    p: &SystemParams,
    drive: &DriveSpec,
    steps: usize,
    dt: f64,
    first_recorded: usize,
) -> Result<TimeTrace> {
    let sys = Rotating::new(p, drive);
    let bound = INSTABILITY_FACTOR * drive.amplitude.norm();
    let cap = steps + 1 - first_recorded.min(steps + 1);
    let mut trace = TimeTrace {
        times: Vec::with_capacity(cap),
        a_values: Vec::with_capacity(cap),
        b_values: Vec::with_capacity(cap),
        drive: *drive,
    };
    let mut x = [C64::new(0.0, 0.0); 2];
    for n in 0..=steps {
        if n > 0 {
            x = sys.step(x, dt);
        }
        let t = n as f64 * dt;
        let amp = x[0].norm().max(x[1].norm());
        if !(amp <= bound) {
            return Err(Error::Instability { time: t, amplitude: amp });
        }
        if n >= first_recorded {
            let phase = C64::from_polar(1.0, -drive.omega * t);
            trace.times.push(t);
            trace.a_values.push(x[0] * phase);
            trace.b_values.push(x[1] * phase);
        }
    }
    Ok(trace)
}

/// Integrates from `A(0) = B(0) = 0` to `t_end` (rounded up to a whole step).
pub fn integrate(p: &SystemParams, drive: &DriveSpec, t_end: f64, dt: f64) -> Result<TimeTrace> {
    let steps = check_step(p, drive, t_end, dt)?;
    run(p, drive, steps, dt, 0)
}

/// Averages the demodulated tail of `trace` over the last `window` time units.
pub fn steady_state(trace: &TimeTrace, window: f64) -> Result<SteadyState> {
    steady_state_with(trace, window, CONVERGENCE_THRESHOLD)
}

pub fn steady_state_with(trace: &TimeTrace, window: f64, threshold: f64) -> Result<SteadyState> {
    let min_window = MIN_WINDOW_PERIODS * trace.drive.period();
    if !(window >= min_window) {
        return Err(Error::Precondition(format!(
            "window {window} shorter than {MIN_WINDOW_PERIODS} drive periods ({min_window})"
        )));
    }
    if trace.duration() < window {
        return Err(Error::Precondition(format!(
            "window {window} longer than trace ({})",
            trace.duration()
        )));
    }
    let t_last = *trace.times.last().expect("non-empty trace");
    let start = trace.times.partition_point(|&t| t < t_last - window);
    let omega = trace.drive.omega;
    let demod = |values: &[C64]| -> (C64, f64) {
        let tail: Vec<C64> = values[start..]
            .iter()
            .zip(&trace.times[start..])
            .map(|(v, &t)| v * C64::from_polar(1.0, omega * t))
            .collect();
        let n = tail.len() as f64;
        let mean = tail.iter().sum::<C64>() / n;
        let mags = tail.iter().map(|z| z.norm());
        let (lo, hi) = mags.fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
        let mean_mag = tail.iter().map(|z| z.norm()).sum::<f64>() / n;
        let residual = if hi == 0.0 { 0.0 } else { (hi - lo) / mean_mag };
        (mean, residual)
    };
    let (a, ra) = demod(&trace.a_values);
    let (b, rb) = demod(&trace.b_values);
    let residual = ra.max(rb);
    if !(residual <= threshold) {
        return Err(Error::NotConverged { residual, threshold });
    }
    Ok(SteadyState {
        a,
        b,
        residual_oscillation: residual,
    })
}

/// Steady phasors reached from rest under `drive`.
pub fn steady_phasors(p: &SystemParams, drive: &DriveSpec, opts: &OracleOptions) -> Result<SteadyState> {
    let decay = slowest_decay(p);
    if !(decay > 0.0) {
        return Err(Error::NoSteadyState { decay });
    }
    let dt = opts.dt.unwrap_or_else(|| default_dt(p, drive.omega));
    let window = opts.window_periods.max(MIN_WINDOW_PERIODS) * drive.period();
    let t_end = (opts.settling_factor / decay).max(2.0 * window);
    let steps = check_step(p, drive, t_end, dt)?;
    let tail_steps = (window / dt).ceil() as usize + 1;
    let trace = run(p, drive, steps, dt, steps.saturating_sub(tail_steps))?;
    steady_state_with(&trace, window, opts.threshold)
}

pub fn oracle_s21(p: &SystemParams, omega: f64) -> Result<C64> {
    oracle_s21_with(p, omega, &OracleOptions::default())
}

/// `(p_out − p_in)/p_in` from the integrated steady state.
pub fn oracle_s21_with(p: &SystemParams, omega: f64, opts: &OracleOptions) -> Result<C64> {
    let drive = DriveSpec::unit(omega)?;
    let ss = steady_phasors(p, &drive, opts)?;
    let amps = spectrum::ModeAmplitudes { a: ss.a, b: ss.b };
    Ok(spectrum::scattered_field(p, &amps) / drive.amplitude)
}

/// Rotating-frame state after `steps` steps of size `dt`.
fn state_after(p: &SystemParams, drive: &DriveSpec, steps: usize, dt: f64) -> [C64; 2] {
    let sys = Rotating::new(p, drive);
    let mut x = [C64::new(0.0, 0.0); 2];
    for _ in 0..steps {
        x = sys.step(x, dt);
    }
    x
}

/// Observed order of accuracy from the transient state at `t_end`, using
/// steps `dt`, `dt/2`, `dt/4`: `log2(|x_dt − x_dt/2| / |x_dt/2 − x_dt/4|)`.
pub fn observed_order(p: &SystemParams, drive: &DriveSpec, t_end: f64, dt: f64) -> Result<f64> {
    let steps = check_step(p, drive, t_end, dt)?;
    let x1 = state_after(p, drive, steps, dt);
    let x2 = state_after(p, drive, 2 * steps, dt / 2.0);
    let x4 = state_after(p, drive, 4 * steps, dt / 4.0);
    let diff = |u: [C64; 2], v: [C64; 2]| ((u[0] - v[0]).norm_sqr() + (u[1] - v[1]).norm_sqr()).sqrt();
    let (e1, e2) = (diff(x1, x2), diff(x2, x4));
    if e2 == 0.0 {
        return Err(Error::Precondition("step-halving differences vanish".into()));
    }
    Ok((e1 / e2).log2())
}

/// One row of an oracle comparison report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleComparison {
    pub omega: f64,
    pub closed: C64,
    pub oracle: C64,
    pub rel_err: f64,
}

/// `|a − b| / max(|a|, tiny)`; exact zeros compare as zero error.
pub fn relative_error(oracle: C64, closed: C64) -> f64 {
    let d = (oracle - closed).norm();
    if d == 0.0 {
        0.0
    } else {
        d / closed.norm().max(f64::MIN_POSITIVE)
    }
}

pub fn oracle_check(
    p: &SystemParams,
    grid: &FrequencyGrid,
    opts: &OracleOptions,
    exec: Execution,
) -> Result<Vec<OracleComparison>> {
    map_indexed(exec, grid.len(), |i| {
        let omega = grid.at(i);
        let closed = spectrum::s21(p, omega)?;
        let oracle = oracle_s21_with(p, omega, opts)?;
        Ok(OracleComparison {
            omega,
            closed,
            oracle,
            rel_err: relative_error(oracle, closed),
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn baseline(j: f64) -> SystemParams {
        SystemParams::new(4.22, 4.22, 0.001, 0.001, 0.01, 0.001, j, 0.0).unwrap()
    }

    fn rel(a: C64, b: C64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn null_dynamics_without_line_coupling() {
        // no drive reaches the modes when γ = κ = 0
        let p = SystemParams::new(4.0, 4.1, 0.01, 0.02, 0.0, 0.0, 0.03, 0.0).unwrap();
        let drive = DriveSpec::unit(4.05).unwrap();
        let tr = integrate(&p, &drive, 50.0, 0.1).unwrap();
        assert!(tr.a_values.iter().chain(&tr.b_values).all(|z| z.norm() == 0.0));
        assert_eq!(oracle_s21(&p, 4.05).unwrap(), C64::new(0.0, 0.0));
    }

    #[test]
    fn single_mode_closed_form() {
        let (wa, alpha, gamma, w) = (4.22, 0.001, 0.01, 4.215);
        let p = SystemParams::new(wa, 5.0, alpha, 0.001, gamma, 0.0, 0.0, 0.0).unwrap();
        let amp = C64::new(0.3, -0.4);
        let drive = DriveSpec::new(w, amp).unwrap();
        let ss = steady_phasors(&p, &drive, &OracleOptions::default()).unwrap();
        let expected = -I * gamma.sqrt() * amp / (gamma + I * (C64::new(wa, -alpha) - w));
        assert!(rel(ss.a, expected) < 1e-8, "{} vs {}", ss.a, expected);
        assert!(ss.b.norm() < 1e-12);
    }

    #[test]
    fn baseline_phasors_match_frequency_domain() {
        let p = baseline(0.05);
        let ss = steady_phasors(&p, &DriveSpec::unit(4.22).unwrap(), &OracleOptions::default()).unwrap();
        let amps = spectrum::mode_amplitudes(&p, 4.22).unwrap();
        assert!(rel(ss.a, amps.a) < 1e-6);
        assert!(rel(ss.b, amps.b) < 1e-6);
    }

    #[test]
    fn uncoupled_substitution_value() {
        let s = oracle_s21(&baseline(0.0), 4.22).unwrap();
        assert!(rel(s, C64::new(-11.0 / 6.0, 0.0)) < 1e-6);
    }

    #[test]
    fn harmonic_trace_demodulates_exactly() {
        let c = C64::new(0.7, -0.2);
        let drive = DriveSpec::unit(4.0).unwrap();
        let times: Vec<f64> = (0..4000).map(|n| n as f64 * 0.01).collect();
        let vals: Vec<C64> = times.iter().map(|&t| c * C64::from_polar(1.0, -4.0 * t)).collect();
        let tr = TimeTrace {
            times,
            a_values: vals.clone(),
            b_values: vals,
            drive,
        };
        let ss = steady_state(&tr, 20.0).unwrap();
        assert!((ss.a - c).norm() < 1e-12);
        assert!(ss.residual_oscillation < 1e-12);
    }

    fn decaying_trace(t_end: f64, decay: f64, c: C64) -> TimeTrace {
        let drive = DriveSpec::unit(4.0).unwrap();
        let dt = 0.01;
        let times: Vec<f64> = (0..=(t_end / dt) as usize).map(|n| n as f64 * dt).collect();
        let vals: Vec<C64> = times
            .iter()
            .map(|&t| (c + 0.5 * (-decay * t).exp() * C64::from_polar(1.0, 0.3 * t)) * C64::from_polar(1.0, -4.0 * t))
            .collect();
        TimeTrace {
            times,
            a_values: vals.clone(),
            b_values: vals,
            drive,
        }
    }

    #[test]
    fn decaying_transient_settles() {
        let c = C64::new(1.0, 0.5);
        let tr = decaying_trace(40.0 / 0.5, 0.5, c);
        let ss = steady_state(&tr, 10.0).unwrap();
        assert!((ss.a - c).norm() < 1e-8);
    }

    #[test]
    fn under_integrated_trace_not_converged() {
        let tr = decaying_trace(1.0 / 0.05, 0.05, C64::new(1.0, 0.5));
        let err = steady_state(&tr, 10.0).unwrap_err();
        assert!(matches!(err, Error::NotConverged { .. }));
        assert!(matches!(steady_state(&tr, 1.0).unwrap_err(), Error::Precondition(_)));
    }

    #[test]
    fn gain_is_rejected() {
        // dissipative coupling stronger than the damping
        let p = SystemParams::new(4.22, 4.22, 0.001, 0.001, 0.01, 0.001, 0.0, 0.05).unwrap();
        assert!(slowest_decay(&p) < 0.0);
        assert!(matches!(oracle_s21(&p, 4.22), Err(Error::NoSteadyState { .. })));
        let drive = DriveSpec::unit(4.22).unwrap();
        assert!(matches!(
            integrate(&p, &drive, 2000.0, 1.0),
            Err(Error::Instability { .. })
        ));
    }

    #[test]
    fn step_bound_enforced() {
        let p = baseline(0.05);
        let drive = DriveSpec::unit(4.0).unwrap();
        assert!(matches!(integrate(&p, &drive, 10.0, 5.0), Err(Error::Precondition(_))));
    }

    #[test]
    fn fourth_order_convergence() {
        let p = baseline(0.05);
        let drive = DriveSpec::unit(4.3).unwrap();
        let dt = MAX_STEP_FRACTION / rate_scale(&p, 4.3);
        let order = observed_order(&p, &drive, 64.0 * dt, dt).unwrap();
        assert!(order >= 3.5, "order {order}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn phasors_scale_linearly(re in -2.0..2.0f64, im in -2.0..2.0f64, w in 4.1..4.3f64) {
            prop_assume!(re.hypot(im) > 1e-3);
            let p = baseline(0.05);
            let opts = OracleOptions::default();
            let unit = steady_phasors(&p, &DriveSpec::unit(w).unwrap(), &opts).unwrap();
            let k = C64::new(re, im);
            let scaled = steady_phasors(&p, &DriveSpec::new(w, k).unwrap(), &opts).unwrap();
            prop_assert!(rel(scaled.a, unit.a * k) <= 1e-10);
            prop_assert!(rel(scaled.b, unit.b * k) <= 1e-10);
        }
    }
}
