use std::fs;
use std::path::{Path, PathBuf};

use cmt_core::config::{params_from_section, ConfigDoc, Section};
use cmt_core::eigen::{
    classify_analytic, classify_numeric, eigenbranches, phase_diagram_with, PhaseDiagramSpec, Regime,
    DEFAULT_EPS,
};
use cmt_core::export::{self, num};
use cmt_core::fitting::{
    branch_dataset, fit_coupling, fit_coupling_auto, BranchData, FitFixed, FitParams, DEFAULT_MIN_PROMINENCE,
};
use cmt_core::geometry::{calibrate, sweep, Anchor, GeometryModel, SizeLaw, SweepAxis};
use cmt_core::oracle::{self, DriveSpec, OracleOptions};
use cmt_core::spectrum::{dispersion_map_with, spectrum_with};
use cmt_core::{presets, Error, Execution, FrequencyGrid, SystemParams};

use crate::output::{CliError, CliResult, OutDir, RunInfo};
use crate::Common;

const DEFAULT_FIT_ITER: usize = 20_000;

const SECTIONS: [(&str, &[&str]); 9] = [
    (
        "params",
        &["omega_a", "omega_b", "alpha", "beta", "gamma", "kappa", "j", "big_gamma"],
    ),
    ("grid", &["drive", "detuning"]),
    ("eigen", &["sweep", "eps"]),
    (
        "fit",
        &["data", "min_prominence", "max_iter", "j", "gamma_eff", "slope", "intercept"],
    ),
    (
        "oracle",
        &["drive", "dt", "settling_factor", "window_periods", "threshold", "trace"],
    ),
    ("phase", &["alpha_eff", "beta_eff", "j", "gamma_eff", "detuning_range"]),
    (
        "geometry",
        &["anchors", "d_range", "g_range", "size_law", "fixed_d", "fixed_g", "gap_sweep", "size_sweep"],
    ),
    (
        "geometry.model",
        &["l0", "c_gap", "c_par", "size_exponent", "d_range", "g_range"],
    ),
    ("output", &["db", "dense"]),
];

struct Ctx {
    doc: ConfigDoc,
    /// Directory of the config file; relative data paths resolve against it.
    base: PathBuf,
    exec: Execution,
    db: bool,
    out: OutDir,
    info: RunInfo,
    summary: Vec<(String, String)>,
}

impl Ctx {
    fn load(c: &Common, subcommand: &'static str) -> CliResult<Self> {
        let mut doc = match &c.preset {
            Some(name) => presets::load(name)?,
            None => ConfigDoc::default(),
        };
        let mut base = PathBuf::from(".");
        if let Some(path) = &c.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            doc = doc.overlay(&ConfigDoc::parse(&text)?);
            if let Some(dir) = path.parent() {
                base = dir.to_path_buf();
            }
        }
        if c.preset.is_none() && c.config.is_none() {
            return Err(CliError::Usage("one of --config or --preset is required".into()));
        }
        let names: Vec<&str> = SECTIONS.iter().map(|(n, _)| *n).collect();
        doc.check_sections(&names)?;
        doc.root().check_keys(&[])?;
        for (name, keys) in SECTIONS {
            if let Some(s) = doc.section(name) {
                s.check_keys(keys)?;
            }
        }
        let output = doc.section("output");
        let db = c.db || opt_bool(output, "db")?.unwrap_or(false);
        let exec = if c.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        };
        Ok(Self {
            base,
            exec,
            db,
            out: OutDir::create(&c.out)?,
            info: RunInfo {
                subcommand,
                preset: c.preset.clone(),
                config: c.config.as_ref().map(|p| p.display().to_string()),
                parallel: exec.is_parallel(),
            },
            summary: Vec::new(),
            doc,
        })
    }

    fn section(&self, name: &str) -> CliResult<&Section> {
        self.doc.section(name).ok_or_else(|| {
            CliError::Core(Error::Config {
                line: 0,
                message: format!("missing section [{name}] needed by `{}`", self.info.subcommand),
            })
        })
    }

    fn params(&self) -> CliResult<SystemParams> {
        Ok(params_from_section(self.section("params")?)?)
    }

    fn note(&mut self, key: &str, value: impl ToString) {
        self.summary.push((key.to_string(), value.to_string()));
    }

    fn finish(self) -> CliResult<()> {
        let Ctx {
            out, info, doc, summary, ..
        } = self;
        out.finish(&info, &doc, &summary)
    }
}

fn opt_bool(s: Option<&Section>, key: &str) -> CliResult<Option<bool>> {
    Ok(match s {
        Some(s) => s.bool(key)?,
        None => None,
    })
}

pub fn spectrum(c: &Common) -> CliResult<()> {
    let mut ctx = Ctx::load(c, "spectrum")?;
    let p = ctx.params()?;
    let grid = ctx.section("grid")?.require_grid("drive")?;
    let s = spectrum_with(&p, &grid, ctx.exec)?;
    ctx.out.write("spectrum.csv", &export::spectrum_csv(&s, ctx.db)?)?;
    ctx.note("points", grid.len());
    ctx.finish()
}

pub fn dispersion(c: &Common) -> CliResult<()> {
    let mut ctx = Ctx::load(c, "dispersion")?;
    let p = ctx.params()?;
    let g = ctx.section("grid")?;
    let (det, drive) = (g.require_grid("detuning")?, g.require_grid("drive")?);
    let dense = opt_bool(ctx.doc.section("output"), "dense")?.unwrap_or(false);
    let map = dispersion_map_with(&p, &det, &drive, ctx.exec)?;
    ctx.out.write("dispersion.csv", &export::dispersion_long_csv(&map, ctx.db)?)?;
    if dense {
        ctx.out
            .write("dispersion_dense.csv", &export::dispersion_dense_csv(&map, ctx.db)?)?;
    }
    let singular = map.singular.len();
    ctx.note("rows", det.len());
    ctx.note("cols", drive.len());
    ctx.note("singular_cells", singular);
    ctx.finish()
}

fn eigen_inputs(ctx: &Ctx) -> CliResult<(SystemParams, FrequencyGrid, f64)> {
    let p = ctx.params()?;
    let e = ctx.section("eigen")?;
    let sweep = e.require_grid("sweep")?;
    let eps = e.f64("eps")?.unwrap_or(DEFAULT_EPS);
    Ok((p, sweep, eps))
}

pub fn eigen(c: &Common) -> CliResult<()> {
    let mut ctx = Ctx::load(c, "eigen")?;
    let (p, sweep, _) = eigen_inputs(&ctx)?;
    let b = eigenbranches(&p, &sweep)?;
    ctx.out.write("eigen.csv", &export::eigen_csv(&b)?)?;
    ctx.note("points", b.len());
    ctx.finish()
}

pub fn classify(c: &Common) -> CliResult<()> {
    let mut ctx = Ctx::load(c, "classify")?;
    let (p, sweep, eps) = eigen_inputs(&ctx)?;
    let label = classify_numeric(&eigenbranches(&p, &sweep)?, eps)?;
    let e = p.effective();
    let range = (sweep.start() - e.omega_a, sweep.stop() - e.omega_a);
    let analytic = if range.0 < range.1 {
        Some(classify_analytic(&e, e.j(), e.gamma_eff, range)?.regime)
    } else {
        None
    };
    let list = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ");
    let mut report = String::new();
    report.push_str(&format!("regime = {}\n", label.regime));
    if let Some(a) = analytic {
        report.push_str(&format!("analytic_regime = {a}\n"));
    }
    report.push_str(&format!("j = {}\n", num(e.j())));
    report.push_str(&format!("gamma_eff = {}\n", num(e.gamma_eff)));
    report.push_str(&format!("alpha_eff = {}\n", num(e.alpha_eff)));
    report.push_str(&format!("beta_eff = {}\n", num(e.beta_eff)));
    if let Some(g) = label.min_real_gap {
        report.push_str(&format!("min_real_gap = {}\n", num(g)));
    }
    if let Some(g) = label.min_imag_gap {
        report.push_str(&format!("min_imag_gap = {}\n", num(g)));
    }
    report.push_str(&format!("real_crossings = {}\n", list(&label.real_crossings)));
    report.push_str(&format!("imag_crossings = {}\n", list(&label.imag_crossings)));
    report.push_str(&format!("touch_points = {}\n", list(&label.touch_points)));
    for n in &label.notes {
        report.push_str(&format!("note = {n:?}\n"));
    }
    ctx.out.write("classify.txt", report.as_bytes())?;
    ctx.out.write("crossings.csv", &export::crossings_csv(&label)?)?;
    ctx.note("regime", label.regime);
    if analytic.is_some_and(|a| a != label.regime && label.regime != Regime::Marginal) {
        ctx.note("warning", "numeric and analytic labels differ");
    }
    ctx.finish()
}

fn phase_spec(s: &Section) -> CliResult<PhaseDiagramSpec> {
    let d = PhaseDiagramSpec::default_axes();
    Ok(PhaseDiagramSpec {
        alpha_axis: s.grid("alpha_eff")?.unwrap_or(d.alpha_axis),
        beta_axis: s.grid("beta_eff")?.unwrap_or(d.beta_axis),
        j_axis: s.grid("j")?.unwrap_or(d.j_axis),
        gamma_eff: s.f64("gamma_eff")?.unwrap_or(d.gamma_eff),
        detuning_range: s.interval("detuning_range")?.unwrap_or(d.detuning_range),
    })
}

pub fn phase_diagram(c: &Common) -> CliResult<()> {
    let mut ctx = Ctx::load(c, "phase-diagram")?;
    let spec = match ctx.doc.section("phase") {
        Some(s) => phase_spec(s)?,
        None => PhaseDiagramSpec::default_axes(),
    };
    let pd = phase_diagram_with(&spec, ctx.exec)?;
    ctx.out.write("phase_diagram.csv", &export::phase_diagram_csv(&pd)?)?;
    let mut by_j = String::from("j_GHz,attraction_cells\n");
    for (ij, n) in pd.attraction_by_j().into_iter().enumerate() {
        by_j.push_str(&format!("{},{n}\n", num(spec.j_axis.at(ij))));
    }
    ctx.out.write("attraction_by_j.csv", by_j.as_bytes())?;
    ctx.note("cells", pd.labels.len());
    ctx.note("attraction", pd.count(Regime::LevelAttraction));
    ctx.note("repulsion", pd.count(Regime::LevelRepulsion));
    ctx.note("marginal", pd.count(Regime::Marginal));
    ctx.finish()
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

pub fn fit(c: &Common) -> CliResult<()> {
    let mut ctx = Ctx::load(c, "fit")?;
    let p = ctx.params()?;
    let e = p.effective();
    let fixed = FitFixed {
        omega_a: e.omega_a,
        alpha_eff: e.alpha_eff,
        beta_eff: e.beta_eff,
    };
    let fs = ctx.doc.section("fit").cloned().unwrap_or_else(|| Section {
        name: "fit".into(),
        line: 0,
        entries: Vec::new(),
    });
    let max_iter = fs.usize("max_iter")?.unwrap_or(DEFAULT_FIT_ITER);
    let data: BranchData = match fs.str("data") {
        Some(path) => {
            let path = resolve(&ctx.base, path);
            let file = fs::File::open(&path).map_err(|e| CliError::io(&path, e))?;
            export::read_branch_csv(file)?
        }
        None => {
            let g = ctx.section("grid")?;
            let map = dispersion_map_with(&p, &g.require_grid("detuning")?, &g.require_grid("drive")?, ctx.exec)?;
            let min_prom = fs.f64("min_prominence")?.unwrap_or(DEFAULT_MIN_PROMINENCE);
            branch_dataset(&map, min_prom)?
        }
    };
    let init = [
        fs.f64("j")?,
        fs.f64("gamma_eff")?,
        fs.f64("slope")?,
        fs.f64("intercept")?,
    ];
    let result = match init {
        [None, None, None, None] => fit_coupling_auto(&data, &fixed, max_iter)?,
        [Some(j), Some(gamma_eff), Some(slope), Some(intercept)] => fit_coupling(
            &data,
            &fixed,
            &FitParams {
                j,
                gamma_eff,
                slope,
                intercept,
            },
            max_iter,
        )?,
        _ => {
            let line = fs.line;
            return Err(Error::Config {
                line,
                message: "[fit] initial guess needs all of j, gamma_eff, slope, intercept".into(),
            }
            .into());
        }
    };
    ctx.out.write("branches.csv", &export::branch_data_csv(&data)?)?;
    ctx.out
        .write("predicted.csv", &export::predicted_branches_csv(&data, &fixed, &result)?)?;
    ctx.out.write("fit.txt", export::fit_report(&fixed, &result).as_bytes())?;
    ctx.note("points", data.len());
    ctx.note("skipped_rows", data.skipped_rows);
    ctx.note("converged", result.converged);
    let converged = result.converged;
    let iterations = result.iterations;
    ctx.finish()?;
    if !converged {
        return Err(CliError::NotConverged(format!(
            "fit did not converge within {iterations} iterations; best point written"
        )));
    }
    Ok(())
}

pub fn oracle_check(c: &Common) -> CliResult<()> {
    let mut ctx = Ctx::load(c, "oracle-check")?;
    let p = ctx.params()?;
    let s = ctx.section("oracle")?;
    let grid = s.require_grid("drive")?;
    let d = OracleOptions::default();
    let opts = OracleOptions {
        dt: s.f64("dt")?,
        settling_factor: s.f64("settling_factor")?.unwrap_or(d.settling_factor),
        window_periods: s.f64("window_periods")?.unwrap_or(d.window_periods),
        threshold: s.f64("threshold")?.unwrap_or(d.threshold),
    };
    let trace = s.bool("trace")?.unwrap_or(false);
    let rows = oracle::oracle_check(&p, &grid, &opts, ctx.exec)?;
    ctx.out.write("oracle.csv", &export::oracle_csv(&rows)?)?;
    if trace {
        // transient at the first drive frequency, up to the settling time
        let omega = grid.at(0);
        let drive = DriveSpec::unit(omega)?;
        let dt = opts.dt.unwrap_or_else(|| oracle::default_dt(&p, omega));
        let t_end = opts.settling_factor / oracle::slowest_decay(&p);
        let tr = oracle::integrate(&p, &drive, t_end, dt)?;
        ctx.out.write("trace.csv", &export::trace_csv(&tr)?)?;
    }
    let max_err = rows.iter().map(|r| r.rel_err).fold(0.0, f64::max);
    ctx.note("points", rows.len());
    ctx.note("max_rel_err", num(max_err));
    ctx.finish()
}

fn size_law(s: &Section) -> CliResult<SizeLaw> {
    match s.str("size_law") {
        None | Some("power") => Ok(SizeLaw::Power),
        Some("linear") => Ok(SizeLaw::Linear),
        Some(other) => Err(Error::Config {
            line: s.entry("size_law").map_or(s.line, |e| e.line),
            message: format!("`size_law`: expected `linear` or `power`, got `{other}`"),
        }
        .into()),
    }
}

pub fn geometry(c: &Common) -> CliResult<()> {
    let mut ctx = Ctx::load(c, "geometry")?;
    let s = ctx.section("geometry")?.clone();
    let mut converged = true;
    let model = match ctx.doc.section("geometry.model") {
        Some(m) => GeometryModel::from_section(m)?,
        None => {
            let anchors: Vec<Anchor> = s
                .rows("anchors", 3)?
                .ok_or_else(|| Error::Config {
                    line: s.line,
                    message: "[geometry] needs `anchors` or a [geometry.model] section".into(),
                })?
                .into_iter()
                .map(|r| Anchor::new(r[0], r[1], r[2]))
                .collect();
            let range = |key: &str| -> CliResult<(f64, f64)> {
                s.interval(key)?.ok_or_else(|| {
                    Error::Config {
                        line: s.line,
                        message: format!("[geometry] is missing `{key}`"),
                    }
                    .into()
                })
            };
            let cal = calibrate(&anchors, range("d_range")?, range("g_range")?, size_law(&s)?)?;
            ctx.out.write("calibration.csv", &export::calibration_csv(&anchors, &cal)?)?;
            ctx.note("max_relative_error", num(cal.max_relative_error));
            converged = cal.converged;
            cal.model
        }
    };
    ctx.out
        .write("model.conf", model.to_config_section("geometry.model").as_bytes())?;
    let (d_lo, d_hi) = model.valid_d_range;
    let (g_lo, g_hi) = model.valid_g_range;
    let fixed_d = s.f64("fixed_d")?.unwrap_or(0.5 * (d_lo + d_hi));
    let fixed_g = s.f64("fixed_g")?.unwrap_or(0.5 * (g_lo + g_hi));
    let gap_grid = s.grid("gap_sweep")?.map_or_else(|| FrequencyGrid::new(g_lo, g_hi, 51), Ok)?;
    let size_grid = s.grid("size_sweep")?.map_or_else(|| FrequencyGrid::new(d_lo, d_hi, 51), Ok)?;
    let gap = sweep(&model, SweepAxis::Gap, fixed_d, &gap_grid, ctx.exec)?;
    let size = sweep(&model, SweepAxis::Size, fixed_g, &size_grid, ctx.exec)?;
    ctx.out
        .write("gap_sweep.csv", &export::geometry_sweep_csv(SweepAxis::Gap, &gap)?)?;
    ctx.out
        .write("size_sweep.csv", &export::geometry_sweep_csv(SweepAxis::Size, &size)?)?;
    ctx.finish()?;
    if !converged {
        return Err(CliError::NotConverged(
            "calibration did not converge; best model written".into(),
        ));
    }
    Ok(())
}
