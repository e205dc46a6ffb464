//! CSV rendering. Every table starts with a header row naming units; floats
//! use the shortest representation that parses back to the same value.

use crate::eigen::{EigenBranches, PhaseDiagram, RegimeLabel};
use crate::fitting::{branch_frequencies, BranchData, BranchPoint, FitFixed, FitResult};
use crate::geometry::{Anchor, Calibration, SweepAxis};
use crate::oracle::{OracleComparison, TimeTrace};
use crate::spectrum::{magnitude_db, DispersionMap, Spectrum};
use crate::{Error, Result};
use std::io::Read;

fn writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Csv(e.to_string()))
}

/// Shortest round-trip formatting; NaN as `NaN`. Very small or large
/// magnitudes use exponent notation.
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || !a.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn magnitude(z: crate::C64, db: bool) -> f64 {
    if db {
        magnitude_db(z)
    } else {
        z.norm()
    }
}

pub fn spectrum_csv(s: &Spectrum, db: bool) -> Result<Vec<u8>> {
    let mut w = writer();
    let mag = if db { "abs_s21_dB" } else { "abs_s21" };
    w.write_record(["omega_GHz", "re_s21", "im_s21", mag])?;
    for (omega, z) in s.grid.iter().zip(&s.s21) {
        w.write_record([num(omega), num(z.re), num(z.im), num(magnitude(*z, db))])?;
    }
    finish(w)
}

fn cell(v: f64, db: bool) -> f64 {
    if db && v.is_finite() {
        20.0 * v.log10()
    } else {
        v
    }
}

/// Long format: one row per (ω_B, ω) cell. Singular cells hold `NaN`.
pub fn dispersion_long_csv(m: &DispersionMap, db: bool) -> Result<Vec<u8>> {
    let mut w = writer();
    let mag = if db { "abs_s21_dB" } else { "abs_s21" };
    w.write_record(["omega_b_GHz", "omega_GHz", mag])?;
    for i in 0..m.rows() {
        let wb = num(m.detuning_axis.at(i));
        for (k, omega) in m.drive_axis.iter().enumerate() {
            w.write_record([wb.clone(), num(omega), num(cell(m.get(i, k), db))])?;
        }
    }
    finish(w)
}

/// Dense matrix: the header row carries the drive axis, the first column the
/// detuning axis.
pub fn dispersion_dense_csv(m: &DispersionMap, db: bool) -> Result<Vec<u8>> {
    let mut w = writer();
    let mut header = vec!["omega_b_GHz\\omega_GHz".to_string()];
    header.extend(m.drive_axis.iter().map(num));
    w.write_record(&header)?;
    for i in 0..m.rows() {
        let mut row = vec![num(m.detuning_axis.at(i))];
        row.extend(m.row(i).iter().map(|&v| num(cell(v, db))));
        w.write_record(&row)?;
    }
    finish(w)
}

pub fn eigen_csv(b: &EigenBranches) -> Result<Vec<u8>> {
    let mut w = writer();
    w.write_record([
        "omega_b_GHz",
        "re_e_plus_GHz",
        "im_e_plus_GHz",
        "re_e_minus_GHz",
        "im_e_minus_GHz",
        "re_gap_GHz",
        "im_gap_GHz",
        "exceptional",
    ])?;
    for (i, wb) in b.detuning_axis.iter().enumerate() {
        let (p, m) = (b.e_plus[i], b.e_minus[i]);
        let d = p - m;
        let ep = b.exceptional.binary_search(&i).is_ok();
        w.write_record([
            num(wb),
            num(p.re),
            num(p.im),
            num(m.re),
            num(m.im),
            num(d.re),
            num(d.im),
            (ep as u8).to_string(),
        ])?;
    }
    finish(w)
}

/// Zero crossings and touch points of a classification.
pub fn crossings_csv(label: &RegimeLabel) -> Result<Vec<u8>> {
    let mut w = writer();
    w.write_record(["kind", "omega_b_GHz"])?;
    for (kind, xs) in [
        ("real_crossing", &label.real_crossings),
        ("imag_crossing", &label.imag_crossings),
        ("touch_point", &label.touch_points),
    ] {
        for x in xs {
            w.write_record([kind.to_string(), num(*x)])?;
        }
    }
    finish(w)
}

pub fn phase_diagram_csv(pd: &PhaseDiagram) -> Result<Vec<u8>> {
    let mut w = writer();
    w.write_record(["alpha_eff_GHz", "beta_eff_GHz", "j_GHz", "regime", "re_gap_zero_GHz"])?;
    let (na, nb, nj) = pd.shape();
    for ia in 0..na {
        for ib in 0..nb {
            for ij in 0..nj {
                let k = pd.index(ia, ib, ij);
                w.write_record([
                    num(pd.spec.alpha_axis.at(ia)),
                    num(pd.spec.beta_axis.at(ib)),
                    num(pd.spec.j_axis.at(ij)),
                    pd.labels[k].as_str().to_string(),
                    num(pd.re_gap_zero[k]),
                ])?;
            }
        }
    }
    finish(w)
}

pub fn branch_data_csv(d: &BranchData) -> Result<Vec<u8>> {
    let mut w = writer();
    w.write_record(["control", "freq1_GHz", "freq2_GHz"])?;
    for p in &d.points {
        w.write_record([num(p.control), num(p.lower), p.upper.map(num).unwrap_or_default()])?;
    }
    finish(w)
}

/// Reads `(control, freq1_GHz, freq2_GHz_or_blank)` rows. A non-numeric first
/// row is taken as a header.
pub fn read_branch_csv<R: Read>(r: R) -> Result<BranchData> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(r);
    let mut points = Vec::new();
    for (idx, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(idx as u64 + 1, |p| p.line()) as usize;
        let bad = |m: String| Error::Config { line, message: m };
        if idx == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if !(2..=3).contains(&rec.len()) {
            return Err(bad(format!("expected 2 or 3 fields, got {}", rec.len())));
        }
        let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("`{s}` is not a number")));
        let control = parse(&rec[0])?;
        let f1 = parse(&rec[1])?;
        let f2 = match rec.get(2) {
            Some(s) if !s.is_empty() => Some(parse(s)?),
            _ => None,
        };
        let (lower, upper) = match f2 {
            Some(f2) if f2 < f1 => (f2, Some(f1)),
            other => (f1, other),
        };
        points.push(BranchPoint {
            control,
            lower,
            upper,
        });
    }
    BranchData::new(points)
}

/// Model branches at every control value of `data`, for overlay plots.
pub fn predicted_branches_csv(data: &BranchData, fixed: &FitFixed, fit: &FitResult) -> Result<Vec<u8>> {
    let mut w = writer();
    w.write_record(["control", "omega_b_GHz", "lower_GHz", "upper_GHz"])?;
    let p = fit.params();
    for pt in &data.points {
        let [lo, hi] = branch_frequencies(fixed, &p, pt.control);
        w.write_record([num(pt.control), num(p.omega_b(pt.control)), num(lo), num(hi)])?;
    }
    finish(w)
}

pub fn fit_report(fixed: &FitFixed, fit: &FitResult) -> String {
    let mut s = String::new();
    let mut kv = |k: &str, v: String| s.push_str(&format!("{k} = {v}\n"));
    kv("j_hat_GHz", num(fit.j_hat));
    kv("gamma_eff_hat_GHz", num(fit.gamma_eff_hat));
    kv("slope_GHz_per_unit", num(fit.detuning_map.0));
    kv("intercept_GHz", num(fit.detuning_map.1));
    kv("residual_rms_GHz", num(fit.residual_rms));
    kv("converged", fit.converged.to_string());
    kv("iterations", fit.iterations.to_string());
    kv(
        "regime",
        if fit.j_hat.abs() > fit.gamma_eff_hat {
            "coherent".into()
        } else {
            "dissipative".into()
        },
    );
    kv("omega_a_GHz", num(fixed.omega_a));
    kv("alpha_eff_GHz", num(fixed.alpha_eff));
    kv("beta_eff_GHz", num(fixed.beta_eff));
    for warning in &fit.warnings {
        kv("warning", format!("{warning:?}"));
    }
    s
}

pub fn oracle_csv(rows: &[OracleComparison]) -> Result<Vec<u8>> {
    let mut w = writer();
    w.write_record([
        "omega_GHz",
        "re_s21_closed",
        "im_s21_closed",
        "re_s21_oracle",
        "im_s21_oracle",
        "rel_err",
    ])?;
    for r in rows {
        w.write_record([
            num(r.omega),
            num(r.closed.re),
            num(r.closed.im),
            num(r.oracle.re),
            num(r.oracle.im),
            num(r.rel_err),
        ])?;
    }
    finish(w)
}

pub fn trace_csv(t: &TimeTrace) -> Result<Vec<u8>> {
    let mut w = writer();
    w.write_record(["t_ns", "re_a", "im_a", "re_b", "im_b"])?;
    for ((time, a), b) in t.times.iter().zip(&t.a_values).zip(&t.b_values) {
        w.write_record([num(*time), num(a.re), num(a.im), num(b.re), num(b.im)])?;
    }
    finish(w)
}

pub fn geometry_sweep_csv(axis: SweepAxis, rows: &[(f64, f64)]) -> Result<Vec<u8>> {
    let mut w = writer();
    let x = match axis {
        SweepAxis::Size => "d_mm",
        SweepAxis::Gap => "g_mm",
    };
    w.write_record([x, "f_GHz"])?;
    for (v, f) in rows {
        w.write_record([num(*v), num(*f)])?;
    }
    finish(w)
}

pub fn calibration_csv(anchors: &[Anchor], cal: &Calibration) -> Result<Vec<u8>> {
    let mut w = writer();
    w.write_record(["d_mm", "g_mm", "f_GHz", "f_model_GHz", "rel_err"])?;
    for (a, e) in anchors.iter().zip(&cal.relative_errors) {
        w.write_record([num(a.d), num(a.g), num(a.f), num(a.f * (1.0 + e)), num(*e)])?;
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::spectrum;
    use crate::{FrequencyGrid, SystemParams};

    #[test]
    fn spectrum_table() {
        let p = SystemParams::new(4.22, 4.22, 0.001, 0.001, 0.0, 0.0, 0.05, 0.0).unwrap();
        let s = spectrum(&p, &FrequencyGrid::new(4.0, 4.5, 2).unwrap()).unwrap();
        let text = String::from_utf8(spectrum_csv(&s, false).unwrap()).unwrap();
        assert_eq!(text, "omega_GHz,re_s21,im_s21,abs_s21\n4,0,0,0\n4.5,0,0,0\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.1 + 0.2, 1e-300, 4.22, -3.5e7, 1.0 / 3.0] {
            assert_eq!(num(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn branch_csv_round_trip() {
        let text = "control,freq1_GHz,freq2_GHz\n0,4.1,4.3\n1,4.15,\n2,4.25,4.2\n3,4.2,4.31\n";
        let d = read_branch_csv(text.as_bytes()).unwrap();
        assert_eq!(d.points[1].upper, None);
        assert_eq!(d.points[2].lower, 4.2);
        let again = read_branch_csv(&branch_data_csv(&d).unwrap()[..]).unwrap();
        assert_eq!(again, d);
    }

    #[test]
    fn branch_csv_errors_name_the_line() {
        let text = "control,freq1_GHz,freq2_GHz\n0,4.1,4.3\n1,abc,\n";
        match read_branch_csv(text.as_bytes()) {
            Err(Error::Config { line: 3, .. }) => {}
            other => panic!("{other:?}"),
        }
    }
}
