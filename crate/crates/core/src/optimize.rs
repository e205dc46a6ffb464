//! Derivative-free local minimization (Nelder–Mead downhill simplex).

/// Stopping rules. Iteration stops at the first rule met.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Stop when `f_max − f_min ≤ f_rel_tol · max(|f_min|, f_abs_tol)` and the
    /// simplex is no larger than `√x_tol`; the size guard keeps a simplex
    /// straddling a symmetric minimum from stopping early.
    pub f_rel_tol: f64,
    /// Stop when every vertex lies within this distance (max-norm) of the best.
    pub x_tol: f64,
    /// Stop as soon as the best value is at or below this.
    pub f_abs_tol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            f_rel_tol: 1e-10,
            x_tol: 1e-8,
            f_abs_tol: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    ObjectiveSpread,
    SimplexSize,
    TargetReached,
    MaxIterations,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub reason: StopReason,
}

impl Minimum {
    pub fn converged(&self) -> bool {
        self.reason != StopReason::MaxIterations
    }
}

/// Minimizes `f` starting from a simplex spanned by `x0` and `x0 + steps[i]·e_i`.
/// Non-finite objective values are treated as `+∞`.
pub fn nelder_mead<F>(mut f: F, x0: &[f64], steps: &[f64], opts: &NelderMeadOptions) -> Minimum
where
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(x0.len(), steps.len(), "one initial step per coordinate");
    let n = x0.len();
    let mut evaluations = 0;
    let mut eval = |x: &[f64]| {
        evaluations += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
    simplex.push((x0.to_vec(), eval(x0)));
    for i in 0..n {
        let mut x = x0.to_vec();
        x[i] += if steps[i] != 0.0 { steps[i] } else { 1e-3 };
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let reason = loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (f_lo, f_hi) = (simplex[0].1, simplex[n].1);
        if f_lo <= opts.f_abs_tol {
            break StopReason::TargetReached;
        }
        let size = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size <= opts.x_tol {
            break StopReason::SimplexSize;
        }
        if f_hi - f_lo <= opts.f_rel_tol * f_lo.abs().max(opts.f_abs_tol) && size <= opts.x_tol.sqrt() {
            break StopReason::ObjectiveSpread;
        }
        if iterations >= opts.max_iter {
            break StopReason::MaxIterations;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[n].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe);
            simplex[n] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[n - 1].1 {
            simplex[n] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < simplex[n].1 {
            let xc = along(0.5);
            let fc = eval(&xc);
            (xc, fc)
        } else {
            let xc = along(-0.5);
            let fc = eval(&xc);
            (xc, fc)
        };
        if fc < simplex[n].1.min(fr) {
            simplex[n] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].0.clone();
        for (x, v) in simplex[1..].iter_mut() {
            for (xi, bi) in x.iter_mut().zip(&best) {
                *xi = bi + 0.5 * (*xi - bi);
            }
            *v = eval(x);
        }
    };
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        evaluations,
        reason,
    }
}
