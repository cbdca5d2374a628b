//! Command-line dispatcher. Exit codes: 0 success or passing verdict,
//! 1 failing verdict, 2 configuration error, 3 numerical non-convergence.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::admissibility::{classify_regularity, scan_region, Checker, Overall, ScanAxis};
use crate::error::{Error, Result};
use crate::grids::{build_radial_grid, build_sphere_grid, mixed_norm, read_field_csv, Grading, RadialGrid, SphereGrid};
use crate::index::{ExtReal, IndexTuple};
use crate::kernels::{verify_decay, DecayExperiment};
use crate::nse::{calderon_split, monitor_norms, picard_iterate, taylor_green_datum, PicardConfig, PicardStop};
use crate::probe::{make_test_field, ratio_ckn, ratio_stein_weiss, sharpness_scan, CknField, Inequality, ScanParameter, TestFamily};
use crate::report::{config_hash, picard_table, scan_table, to_json, verdict_table, Cell, Format, Table};
use crate::singint::{envelope_i, envelope_j, envelope_ratio_scan, eval_i, eval_j, Regime};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "angular-lab", version, about = "Weighted inequalities with mixed radial-angular integrability")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone)]
struct Common {
    /// Run configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Index tuple as JSON, or `@path` to read it from a file.
    #[arg(long)]
    tuple: Option<String>,
    /// Command parameters as JSON, merged over those of the config.
    #[arg(long)]
    params: Option<String>,
    /// Report destination; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide a theorem's hypotheses on a tuple.
    Check {
        #[arg(long)]
        theorem: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Pass/fail raster of a checker over one or two exponent axes.
    Scan(Common),
    /// Mixed radial-angular norm of a sampled field.
    Norm(Common),
    /// Spherical singular integrals and their envelopes.
    Singint(Common),
    /// Measured heat decay against the predicted rate.
    Decay {
        /// Decay estimate: `heat` or `local` (or any experiment kind name).
        #[arg(long)]
        kind: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Inequality ratios and sharpness scans on test families.
    Probe(Common),
    /// Picard iteration for small-data Navier–Stokes.
    Picard(Common),
    /// Amplitude-threshold splitting of a datum.
    Split(Common),
}

/// A complete run, as read from `--config` and the command-line overrides.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tuple: Option<IndexTuple>,
    #[serde(default = "empty_object")]
    pub params: Value,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(default)]
    pub seed: u64,
}

fn empty_object() -> Value {
    Value::Object(Default::default())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_n")]
    pub n: u32,
    pub rho_min: f64,
    pub rho_max: f64,
    pub nodes: usize,
    #[serde(default = "default_grading")]
    pub grading: Grading,
    pub sphere_level: usize,
}

fn default_n() -> u32 {
    3
}

fn default_grading() -> Grading {
    Grading::Composite
}

impl GridSpec {
    fn build(&self) -> Result<(RadialGrid, SphereGrid)> {
        Ok((
            build_radial_grid(self.rho_min, self.rho_max, self.nodes, self.grading)?,
            build_sphere_grid(self.n, self.sphere_level)?,
        ))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckParams {
    theorem: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScanParams {
    checker: String,
    axes: Vec<ScanAxis>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NormParams {
    #[serde(default)]
    field: Option<PathBuf>,
    #[serde(default)]
    family: Option<TestFamily>,
    #[serde(default)]
    grid: Option<GridSpec>,
    alpha: f64,
    p: ExtReal,
    p_tilde: ExtReal,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SingintParams {
    nu: f64,
    #[serde(default = "default_n")]
    n: u32,
    #[serde(default)]
    radii: Vec<f64>,
    /// Second radius of the `J` integral; `I` when absent.
    #[serde(default)]
    rho: Option<f64>,
    #[serde(default)]
    regime: Option<Regime>,
    #[serde(default = "default_samples")]
    samples: usize,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn default_samples() -> usize {
    40
}

fn default_tol() -> f64 {
    1e-10
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecayParams {
    experiment: DecayExperiment,
    #[serde(default = "default_family")]
    datum: TestFamily,
    grid: GridSpec,
    /// Output grid of the evolved field; the datum grid when absent.
    #[serde(default)]
    target: Option<GridSpec>,
}

fn default_family() -> TestFamily {
    TestFamily::Gaussian
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProbeParams {
    inequality: Inequality,
    /// Tuples of a sharpness scan; the run tuple alone when absent.
    #[serde(default)]
    path: Vec<IndexTuple>,
    family: TestFamily,
    #[serde(default)]
    parameter: Option<ScanParameter>,
    #[serde(default)]
    values: Vec<f64>,
    grid: GridSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DatumParams {
    box_len: f64,
    resolution: usize,
    amplitude: f64,
    radius: f64,
    wavenumber: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PicardParams {
    datum: DatumParams,
    horizon: f64,
    steps: usize,
    max_iter: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SplitParams {
    datum: DatumParams,
    p_tilde: f64,
}

struct Outcome {
    table: Table,
    json: Value,
    code: i32,
}

fn parse_params<T: for<'de> Deserialize<'de>>(v: &Value) -> Result<T> {
    serde_json::from_value(v.clone()).map_err(|e| Error::Config(format!("params: {e}")))
}

fn need_tuple(cfg: &RunConfig) -> Result<IndexTuple> {
    let t = cfg.tuple.clone().ok_or_else(|| Error::Config("this command needs a tuple".into()))?;
    t.validate()?;
    Ok(t)
}

fn read_json_arg(s: &str) -> Result<Value> {
    let text = match s.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)?,
        None => s.to_string(),
    };
    Ok(serde_json::from_str(&text)?)
}

fn merge(base: &mut Value, over: Value) {
    match (base, over) {
        (Value::Object(b), Value::Object(o)) => {
            for (k, v) in o {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (b, o) => *b = o,
    }
}

fn build_config(name: &str, common: &Common, extra: Option<(&str, Value)>) -> Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => {
            let cfg: RunConfig = serde_json::from_reader(BufReader::new(File::open(path)?))?;
            if cfg.command != name {
                return Err(Error::Config(format!("config is for `{}`, not `{name}`", cfg.command)));
            }
            cfg
        }
        None => RunConfig {
            command: name.to_string(),
            tuple: None,
            params: empty_object(),
            output: None,
            format: None,
            seed: 0,
        },
    };
    if let Some(t) = &common.tuple {
        cfg.tuple = Some(serde_json::from_value(read_json_arg(t)?)?);
    }
    if let Some(p) = &common.params {
        merge(&mut cfg.params, read_json_arg(p)?);
    }
    if let Some((k, v)) = extra {
        merge(&mut cfg.params, serde_json::json!({ k: v }));
    }
    if common.output.is_some() {
        cfg.output = common.output.clone();
    }
    if common.format.is_some() {
        cfg.format = common.format;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    if !cfg.params.is_object() {
        return Err(Error::Config("params must be a JSON object".into()));
    }
    Ok(cfg)
}

fn verdict_code(o: Overall) -> i32 {
    match o {
        Overall::Pass => EXIT_OK,
        Overall::Fail | Overall::Boundary => EXIT_FAIL,
    }
}

fn json_of(v: &impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

fn run_check(cfg: &RunConfig) -> Result<Outcome> {
    let p: CheckParams = parse_params(&cfg.params)?;
    let checker: Checker = p.theorem.parse()?;
    let t = need_tuple(cfg)?;
    let v = checker.run(&t)?;
    Ok(Outcome {
        code: verdict_code(v.overall),
        table: verdict_table(&v),
        json: json_of(&v)?,
    })
}

fn run_scan(cfg: &RunConfig) -> Result<Outcome> {
    let p: ScanParams = parse_params(&cfg.params)?;
    let checker: Checker = p.checker.parse()?;
    let t = cfg.tuple.clone().ok_or_else(|| Error::Config("scan needs a template tuple".into()))?;
    let g = scan_region(&t, &p.axes, checker)?;
    Ok(Outcome {
        code: EXIT_OK,
        table: scan_table(&g),
        json: json_of(&g)?,
    })
}

fn run_norm(cfg: &RunConfig) -> Result<Outcome> {
    let p: NormParams = parse_params(&cfg.params)?;
    let f = match (&p.field, &p.family, &p.grid) {
        (Some(path), None, None) => read_field_csv(BufReader::new(File::open(path)?))?,
        (None, Some(fam), Some(grid)) => {
            let (r, s) = grid.build()?;
            make_test_field(fam, &r, &s)?
        }
        _ => return Err(Error::Config("norm needs either `field` or both `family` and `grid`".into())),
    };
    let value = mixed_norm(&f, p.alpha, p.p, p.p_tilde)?;
    let result = serde_json::json!({ "alpha": p.alpha, "p": p.p, "p_tilde": p.p_tilde, "norm": value });
    let mut t = Table::new(&["alpha", "p", "p_tilde", "norm"]);
    t.rows.push(vec![Cell::Num(p.alpha), Cell::Num(p.p.as_f64()), Cell::Num(p.p_tilde.as_f64()), Cell::Num(value)]);
    Ok(Outcome {
        code: EXIT_OK,
        table: t,
        json: result,
    })
}

fn run_singint(cfg: &RunConfig) -> Result<Outcome> {
    let p: SingintParams = parse_params(&cfg.params)?;
    if let Some(regime) = p.regime {
        let b = envelope_ratio_scan(p.nu, p.n, regime, p.samples)?;
        let mut t = Table::new(&["regime", "nu", "n", "min_ratio", "max_ratio", "samples"]);
        t.rows.push(vec![
            Cell::Text(format!("{regime:?}")),
            Cell::Num(b.nu),
            Cell::Int(b.n as i64),
            Cell::Num(b.min_ratio),
            Cell::Num(b.max_ratio),
            Cell::Int(b.samples as i64),
        ]);
        return Ok(Outcome {
            code: EXIT_OK,
            table: t,
        json: json_of(&b)?,
        });
    }
    if p.radii.is_empty() {
        return Err(Error::Config("singint needs `radii` or a `regime` to scan".into()));
    }
    let mut t = Table::new(&["r", "rho", "value", "envelope", "regime"]);
    let mut rows = vec![];
    for &r in &p.radii {
        let (value, env) = match p.rho {
            None => (eval_i(p.nu, r, p.n, p.tol)?, envelope_i(p.nu, r, p.n)),
            Some(rho) => (eval_j(p.nu, r, rho, p.n, p.tol)?, envelope_j(p.nu, r, rho, p.n)),
        };
        t.rows.push(vec![
            Cell::Num(r),
            p.rho.map_or(Cell::Empty, Cell::Num),
            Cell::Num(value),
            Cell::Num(env.value),
            Cell::Text(format!("{:?}", env.regime)),
        ]);
        rows.push(serde_json::json!({ "r": r, "rho": p.rho, "value": value, "envelope": env }));
    }
    Ok(Outcome {
        code: EXIT_OK,
        table: t,
        json: Value::Array(rows),
    })
}

fn run_decay(cfg: &RunConfig) -> Result<Outcome> {
    let p: DecayParams = parse_params(&cfg.params)?;
    let t = need_tuple(cfg)?;
    let (r, s) = p.grid.build()?;
    let u0 = make_test_field(&p.datum, &r, &s)?;
    let target = match &p.target {
        Some(g) => g.build()?.0,
        None => u0.radial.clone(),
    };
    let v = verify_decay(&t, &u0, &p.experiment, &target)?;
    let mut table = Table::new(&["t", "norm"]);
    table.comments.push(format!(
        "predicted {:?} fitted slope {:?} verdict {:?}",
        v.predicted,
        v.fit.as_ref().map(|f| f.slope),
        v.verdict
    ));
    for (time, val) in &v.series {
        table.rows.push(vec![Cell::Num(*time), Cell::Num(*val)]);
    }
    Ok(Outcome {
        code: verdict_code(v.verdict),
        table,
        json: json_of(&v)?,
    })
}

fn run_probe(cfg: &RunConfig) -> Result<Outcome> {
    let p: ProbeParams = parse_params(&cfg.params)?;
    let (r, s) = p.grid.build()?;
    let path = if p.path.is_empty() { vec![need_tuple(cfg)?] } else { p.path.clone() };
    match p.parameter {
        Some(param) => {
            let rows = sharpness_scan(&path, &p.family, param, &p.values, p.inequality, &r, &s)?;
            let mut t = Table::new(&["tuple", "verdict", "value", "ratio", "running_sup"]);
            t.comments.push(format!("{:?} ladder over {param:?}", p.inequality));
            for (k, row) in rows.iter().enumerate() {
                for i in 0..row.values.len() {
                    t.rows.push(vec![
                        Cell::Int(k as i64),
                        Cell::Text(row.verdict.as_char().to_string()),
                        Cell::Num(row.values[i]),
                        Cell::Num(row.ratios[i]),
                        Cell::Num(row.running_sup[i]),
                    ]);
                }
            }
            Ok(Outcome {
                code: EXIT_OK,
                table: t,
        json: json_of(&rows)?,
            })
        }
        None => {
            let f = make_test_field(&p.family, &r, &s)?;
            let mut t = Table::new(&["tuple", "lhs", "rhs", "ratio"]);
            let mut reports = vec![];
            for (k, tuple) in path.iter().enumerate() {
                let rep = match p.inequality {
                    Inequality::SteinWeiss => ratio_stein_weiss(&f, tuple)?,
                    Inequality::Ckn => ratio_ckn(CknField::Grid(&f), tuple)?,
                }
                .with_family(&p.family);
                t.rows.push(vec![Cell::Int(k as i64), Cell::Num(rep.lhs), Cell::Num(rep.rhs), Cell::Num(rep.ratio)]);
                reports.push(rep);
            }
            Ok(Outcome {
                code: EXIT_OK,
                table: t,
        json: json_of(&reports)?,
            })
        }
    }
}

fn datum(d: &DatumParams) -> Result<crate::spectral::SpectralField> {
    taylor_green_datum(d.box_len, d.resolution, d.amplitude, d.radius, d.wavenumber)
}

fn run_picard(cfg: &RunConfig) -> Result<Outcome> {
    let p: PicardParams = parse_params(&cfg.params)?;
    let monitor = need_tuple(cfg)?;
    let u0 = datum(&p.datum)?;
    let pc = PicardConfig {
        horizon: p.horizon,
        steps: p.steps,
        max_iter: p.max_iter,
        monitor: monitor.clone(),
    };
    let tr = picard_iterate(&u0, &pc)?;
    let report = monitor_norms(&tr, &monitor)?;
    let summary = serde_json::json!({
        "stop": tr.stop,
        "times": tr.times,
        "diff_norms": tr.diff_norms,
        "contraction_ratios": tr.contraction_ratios,
        "divergence": tr.divergence,
        "datum_norm": tr.datum_norm,
        "smallness": tr.smallness,
        "monitor": report,
    });
    Ok(Outcome {
        code: if tr.stop == PicardStop::Diverged { EXIT_FAIL } else { EXIT_OK },
        table: picard_table(&tr),
        json: summary,
    })
}

fn run_split(cfg: &RunConfig) -> Result<Outcome> {
    let p: SplitParams = parse_params(&cfg.params)?;
    let u0 = datum(&p.datum)?;
    let sp = calderon_split(&u0, p.p_tilde)?;
    let summary = serde_json::json!({
        "theta": sp.theta,
        "s": sp.s,
        "a_theta": sp.a_theta,
        "b_theta": sp.b_theta,
        "bound_checks": sp.bound_checks,
        "class": classify_regularity(-0.5, ExtReal::Finite(2.0), ExtReal::Finite(p.p_tilde), ExtReal::Infinity, 3).ok(),
    });
    let mut t = Table::new(&["label", "lhs", "datum_power", "exponent", "coefficient", "ratio"]);
    t.comments.push(format!("theta {} s {} A {} B {}", sp.theta, sp.s, sp.a_theta, sp.b_theta));
    for b in &sp.bound_checks {
        t.rows.push(vec![
            Cell::Text(b.label.clone()),
            Cell::Num(b.lhs),
            Cell::Num(b.datum_power),
            Cell::Num(b.exponent),
            Cell::Num(b.coefficient),
            Cell::Num(b.ratio),
        ]);
    }
    Ok(Outcome {
        code: EXIT_OK,
        table: t,
        json: summary,
    })
}

fn dispatch(cfg: &RunConfig) -> Result<Outcome> {
    match cfg.command.as_str() {
        "check" => run_check(cfg),
        "scan" => run_scan(cfg),
        "norm" => run_norm(cfg),
        "singint" => run_singint(cfg),
        "decay" => run_decay(cfg),
        "probe" => run_probe(cfg),
        "picard" => run_picard(cfg),
        "split" => run_split(cfg),
        other => Err(Error::Config(format!("unknown command `{other}`"))),
    }
}

fn exit_code_of(e: &Error) -> i32 {
    if e.is_config() {
        EXIT_CONFIG
    } else {
        EXIT_NUMERIC
    }
}

fn emit(cfg: &RunConfig, out: Outcome) -> Result<i32> {
    let hash = config_hash(cfg)?;
    let body = match cfg.format.unwrap_or(Format::Json) {
        Format::Csv => out.table.to_csv(&hash),
        Format::Json => to_json(&out.json, &hash)?,
    };
    match &cfg.output {
        Some(path) => crate::report::write_report(&body, File::create(path)?)?,
        None => crate::report::write_report(&body, std::io::stdout().lock())?,
    }
    Ok(out.code)
}

/// Runs a configuration and writes its report.
pub fn run_config(cfg: &RunConfig) -> i32 {
    match dispatch(cfg).and_then(|o| emit(cfg, o)) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            exit_code_of(&e)
        }
    }
}

fn decay_kind_name(k: &str) -> &str {
    match k {
        "heat" => "pointwise_heat",
        "oseen" => "pointwise_oseen",
        "local" => "local_parabola",
        "integrated" => "time_integrated",
        other => other,
    }
}

fn configure_threads() {
    if let Ok(v) = std::env::var("ANGULAR_LAB_THREADS") {
        if let Ok(n) = v.trim().parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    configure_threads();
    let built = match &cli.command {
        Command::Check { theorem, common } => build_config("check", common, theorem.clone().map(|t| ("theorem", Value::String(t)))),
        Command::Scan(c) => build_config("scan", c, None),
        Command::Norm(c) => build_config("norm", c, None),
        Command::Singint(c) => build_config("singint", c, None),
        Command::Decay { kind, common } => build_config(
            "decay",
            common,
            kind.as_deref().map(|k| ("experiment", serde_json::json!({ "kind": decay_kind_name(k) }))),
        ),
        Command::Probe(c) => build_config("probe", c, None),
        Command::Picard(c) => build_config("picard", c, None),
        Command::Split(c) => build_config("split", c, None),
    };
    match built {
        Ok(cfg) => run_config(&cfg),
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            exit_code_of(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip_and_unknown_fields() {
        let cfg = RunConfig {
            command: "check".into(),
            tuple: Some(IndexTuple::new(3)),
            params: serde_json::json!({"theorem": "mixed-sw"}),
            output: None,
            format: Some(Format::Csv),
            seed: 7,
        };
        let s = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<RunConfig>(&s).unwrap(), cfg);
        assert!(serde_json::from_str::<RunConfig>(r#"{"command":"check","bogus":1}"#).is_err());
        assert!(parse_params::<CheckParams>(&serde_json::json!({"theorem": "x", "extra": 1})).is_err());
    }

    #[test]
    fn params_merge_recursively() {
        let mut a = serde_json::json!({"grid": {"nodes": 8, "n": 3}, "x": 1});
        merge(&mut a, serde_json::json!({"grid": {"nodes": 16}}));
        assert_eq!(a, serde_json::json!({"grid": {"nodes": 16, "n": 3}, "x": 1}));
    }

    #[test]
    fn datum_parameters_reject_unknown_keys() {
        let v = serde_json::json!({
            "datum": {"box_len": 16.0, "resolution": 16, "amplitude": 0.1, "radius": 3.0, "wavenumber": 1.0, "typo": 1},
            "p_tilde": 3.0
        });
        assert!(parse_params::<SplitParams>(&v).is_err());
    }
}
