//! `gbm-cutoff <command> --config <file> [overrides]`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::{json, Map, Value};

use crate::commutative::{profile_limit, CommutativeModel};
use crate::config::{
    CliError, CliResult, Format, Mode, Model, Overrides, RunConfig, Validated, DEFAULT_T_GRID,
};
use crate::hypotheses::check_hypotheses;
use crate::mixing::mixing_ratio_check;
use crate::noncommutative::{
    cutoff_schedule_first_order, example35_check, mean_square_first_order, mode_decomposition,
    mode_decomposition_synthetic, step_three_residuals, ModeDecomposition,
};
use crate::schedule::{CutoffSchedule, Regime};
use crate::simulate::{estimate_mean_square, Scheme};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "GBM_CUTOFF_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "gbm-cutoff",
    version,
    about = "Cutoff time scales and mean-square decay of geometric Brownian motion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated list replacing `eps_list`.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of Monte Carlo paths.
    #[arg(long)]
    pub paths: Option<usize>,
    /// Time step of path-based schemes.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output file (standard output when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Bracket conditions satisfied by (A, B).
    Hypotheses(CommonArgs),
    /// Regime, asymptotic parameters and cutoff schedule per eps.
    Analyze(CommonArgs),
    /// Closed-form and Monte Carlo mean square on the t-grid.
    MeanSquare(CommonArgs),
    /// Mixing times and their ratios per eps.
    Mixing(CommonArgs),
    /// Normalized mean square around the cutoff time on the rho-grid.
    Profile(CommonArgs),
    /// Closed form against Monte Carlo with a 3-SE criterion.
    Verify(CommonArgs),
    /// Residuals of the scalar autonomous form of exp(-t^3 - t^2).
    Example35(CommonArgs),
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Hypotheses(a)
            | Command::Analyze(a)
            | Command::MeanSquare(a)
            | Command::Mixing(a)
            | Command::Profile(a)
            | Command::Verify(a)
            | Command::Example35(a) => a,
        }
    }

    fn default_format(&self) -> Format {
        match self {
            Command::Hypotheses(_) | Command::Analyze(_) => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// A table cell.
#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Num(v) => json!(v),
            Cell::Int(v) => json!(v),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

fn opt(v: Option<f64>) -> Cell {
    v.map_or(Cell::Empty, Cell::Num)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.iter().map(Cell::csv).collect::<Vec<_>>().join(","));
            out.push('\n');
        }
        out
    }

    fn to_json(&self) -> Value {
        Value::Array(
            self.rows
                .iter()
                .map(|r| {
                    let obj: Map<String, Value> = self
                        .header
                        .iter()
                        .zip(r)
                        .map(|(h, c)| (h.to_string(), c.json()))
                        .collect();
                    Value::Object(obj)
                })
                .collect(),
        )
    }
}

/// A command result, renderable as JSON and (when tabular) as CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub json: Value,
    pub table: Option<Table>,
}

impl Report {
    fn from_table(table: Table, summary: Value) -> Self {
        let mut obj = match summary {
            Value::Object(m) => m,
            _ => Map::new(),
        };
        obj.insert("rows".into(), table.to_json());
        Report {
            json: Value::Object(obj),
            table: Some(table),
        }
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json)
                    .map_err(|e| CliError::new("output_io", e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Format::Csv => {
                self.table.as_ref().map(Table::to_csv).ok_or_else(|| {
                    CliError::new("unsupported_format", "this report has no CSV form")
                })
            }
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Closed-form mean square and schedule for the configured model.
enum Analysis {
    Commutative(CommutativeModel),
    Modes {
        dec: Box<ModeDecomposition>,
        x: Vec<f64>,
    },
}

impl Analysis {
    fn new(v: &Validated) -> CliResult<Self> {
        Ok(match (&v.model, v.mode) {
            (Model::Pair(sys), Mode::Commutative) => {
                Analysis::Commutative(CommutativeModel::new(sys)?)
            }
            (Model::Pair(sys), _) => Analysis::Modes {
                dec: Box::new(mode_decomposition(sys)?),
                x: sys.x().to_vec(),
            },
            (Model::Synthetic(sys), _) => Analysis::Modes {
                dec: Box::new(mode_decomposition_synthetic(sys)?),
                x: sys.x.clone(),
            },
        })
    }

    fn mean_square(&self, t: f64) -> crate::Result<f64> {
        match self {
            Analysis::Commutative(m) => m.mean_square(t),
            Analysis::Modes { dec, x } => mean_square_first_order(dec, x, t),
        }
    }

    fn schedule(&self, eps: f64, w: f64) -> CliResult<CutoffSchedule> {
        Ok(match self {
            Analysis::Commutative(m) => m.cutoff_time(eps, w)?,
            Analysis::Modes { dec, x } => cutoff_schedule_first_order(dec, x, eps)?,
        })
    }

    /// `(t_ε, w_ε)`; a schedule without decay is an error here.
    fn time_scale(&self, eps: f64, w: f64) -> CliResult<(f64, f64)> {
        let s = self.schedule(eps, w)?;
        if s.regime == Regime::NoDecay {
            return Err(CliError::new("no_decay", s.diagnostic.unwrap_or_default()));
        }
        Ok((
            s.t_eps.expect("decaying schedule"),
            s.w_eps.expect("decaying schedule"),
        ))
    }
}

fn default_scheme(v: &Validated) -> CliResult<Option<Scheme>> {
    match (v.mode, v.mc.scheme) {
        (Mode::Synthetic, Some(s)) => Err(CliError::new(
            "unsupported_mode",
            format!("scheme {s} needs a coefficient pair; synthetic mode has none"),
        )),
        (Mode::Synthetic, None) => Ok(None),
        (_, Some(s)) => Ok(Some(s)),
        (Mode::Commutative, None) => Ok(Some(Scheme::ExactCommutative)),
        (Mode::FirstOrder, None) => Ok(Some(Scheme::ExactFirstOrder)),
    }
}

fn hypotheses(v: &Validated) -> CliResult<Report> {
    let mut table = Table::new(&["check", "residual", "relative_residual"]);
    let json = match &v.model {
        Model::Pair(sys) => {
            let r = check_hypotheses(sys);
            for (k, raw) in &r.residuals {
                table.rows.push(vec![
                    Cell::Text(k.clone()),
                    Cell::Num(*raw),
                    Cell::Num(r.relative(k)),
                ]);
            }
            to_value(&r)
        }
        Model::Synthetic(sys) => {
            let r = step_three_residuals(&sys.alpha, &sys.beta, &sys.gamma, &sys.a);
            for (k, rel) in &r {
                table
                    .rows
                    .push(vec![Cell::Text(k.clone()), Cell::Empty, Cell::Num(*rel)]);
            }
            json!({ "step_three": r, "tol": sys.tol })
        }
    };
    Ok(Report {
        json,
        table: Some(table),
    })
}

const SCHEDULE_COLUMNS: [&str; 15] = [
    "regime",
    "eps",
    "q",
    "ell",
    "gamma",
    "b",
    "a",
    "ell_star",
    "t_eps",
    "w_eps",
    "r_eps",
    "T_eps",
    "tau_eps",
    "selected_mode",
    "diagnostic",
];

fn analyze(v: &Validated) -> CliResult<Report> {
    let analysis = Analysis::new(v)?;
    let schedules = v
        .eps_list
        .iter()
        .map(|&eps| analysis.schedule(eps, v.w))
        .collect::<CliResult<Vec<_>>>()?;
    let mut table = Table::new(&SCHEDULE_COLUMNS);
    for s in &schedules {
        let regime = to_value(&s.regime).as_str().unwrap_or_default().to_string();
        table.rows.push(vec![
            Cell::Text(regime),
            Cell::Num(s.eps),
            opt(s.q),
            s.ell.map_or(Cell::Empty, |l| Cell::Int(l as u64)),
            opt(s.gamma),
            opt(s.b),
            opt(s.a),
            s.ell_star.map_or(Cell::Empty, |l| Cell::Int(l as u64)),
            opt(s.t_eps),
            opt(s.w_eps),
            opt(s.r_eps),
            opt(s.big_t_eps),
            opt(s.tau_eps),
            s.selected_mode.map_or(Cell::Empty, |m| Cell::Int(m as u64)),
            s.diagnostic
                .clone()
                .map_or(Cell::Empty, |d| Cell::Text(d.replace(',', ";"))),
        ]);
    }
    let mut obj = Map::new();
    obj.insert("mode".into(), json!(v.mode.name()));
    match (&analysis, &v.model) {
        (Analysis::Commutative(m), _) => {
            obj.insert("Q".into(), to_value(m.q_matrix()));
            obj.insert("asymptotics".into(), to_value(&m.asymptotics()?));
        }
        (Analysis::Modes { dec, .. }, Model::Pair(sys)) => {
            obj.insert("hypotheses".into(), to_value(&check_hypotheses(sys)));
            obj.insert("decomposition".into(), to_value(dec));
        }
        (Analysis::Modes { dec, .. }, Model::Synthetic(_)) => {
            obj.insert("decomposition".into(), to_value(dec));
        }
    }
    obj.insert("schedules".into(), to_value(&schedules));
    Ok(Report {
        json: Value::Object(obj),
        table: Some(table),
    })
}

fn mean_square(v: &Validated) -> CliResult<Report> {
    let analysis = Analysis::new(v)?;
    let scheme = default_scheme(v)?;
    let grid = v.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.to_vec());
    let mut table = Table::new(&["t", "closed_form", "mc_value", "mc_se"]);
    for &t in &grid {
        let closed = analysis.mean_square(t)?;
        let (value, se) = match (scheme, &v.model) {
            (Some(s), Model::Pair(sys)) => {
                let e = estimate_mean_square(sys, t, s, v.mc.n_paths, v.mc.dt, v.mc.seed)?;
                (Cell::Num(e.value), Cell::Num(e.std_error))
            }
            _ => (Cell::Empty, Cell::Empty),
        };
        table
            .rows
            .push(vec![Cell::Num(t), Cell::Num(closed), value, se]);
    }
    let summary = json!({
        "mode": v.mode.name(),
        "scheme": scheme.map(|s| s.name()),
        "n_paths": v.mc.n_paths,
        "dt": v.mc.dt,
        "seed": v.mc.seed,
    });
    Ok(Report::from_table(table, summary))
}

fn mixing(v: &Validated) -> CliResult<Report> {
    let analysis = Analysis::new(v)?;
    let scales = v
        .eps_list
        .iter()
        .map(|&eps| Ok((eps, analysis.time_scale(eps, v.w)?.0)))
        .collect::<CliResult<Vec<(f64, f64)>>>()?;
    let t_eps = |eps: f64| {
        let (_, t) = scales.iter().find(|(e, _)| *e == eps).expect("precomputed");
        Ok(*t)
    };
    let rows = mixing_ratio_check(t_eps, |t| analysis.mean_square(t), &v.eps_list, v.delta)?;
    let mut table = Table::new(&["eps", "delta", "tau", "tau_over_t_eps", "tau_ratio"]);
    for r in &rows {
        table.rows.push(vec![
            Cell::Num(r.eps),
            Cell::Num(r.delta),
            Cell::Num(r.tau),
            Cell::Num(r.tau_over_t_eps),
            Cell::Num(r.tau_ratio),
        ]);
    }
    Ok(Report::from_table(table, json!({ "mode": v.mode.name() })))
}

fn profile(v: &Validated) -> CliResult<Report> {
    let analysis = Analysis::new(v)?;
    let mut table = Table::new(&["eps", "rho", "time", "normalized", "limit"]);
    for &eps in &v.eps_list {
        let (t, w) = analysis.time_scale(eps, v.w)?;
        for &rho in &v.rho_grid {
            let time = t + rho * w;
            let normalized = if time >= 0.0 {
                Cell::Num(analysis.mean_square(time)? / (eps * eps))
            } else {
                Cell::Empty
            };
            let limit = match (&analysis, &v.model) {
                (Analysis::Commutative(_), Model::Pair(sys)) => {
                    opt(profile_limit(sys, rho, w).ok())
                }
                _ => Cell::Empty,
            };
            table.rows.push(vec![
                Cell::Num(eps),
                Cell::Num(rho),
                Cell::Num(time),
                normalized,
                limit,
            ]);
        }
    }
    Ok(Report::from_table(table, json!({ "mode": v.mode.name() })))
}

/// Number of standard errors tolerated by `verify`.
pub const VERIFY_BAND: f64 = 3.0;

fn verify(v: &Validated) -> CliResult<Report> {
    let sys = match &v.model {
        Model::Pair(sys) => sys,
        Model::Synthetic(_) => {
            return Err(CliError::new(
                "unsupported_mode",
                "synthetic mode has no process to simulate",
            ))
        }
    };
    let analysis = Analysis::new(v)?;
    let scheme = default_scheme(v)?.expect("pair modes always have a scheme");
    let grid = v.t_grid.clone().unwrap_or_else(|| DEFAULT_T_GRID.to_vec());
    let mut table = Table::new(&["t", "closed_form", "mc_value", "mc_se", "z_score", "pass"]);
    let mut all = true;
    for &t in &grid {
        let closed = analysis.mean_square(t)?;
        let e = estimate_mean_square(sys, t, scheme, v.mc.n_paths, v.mc.dt, v.mc.seed)?;
        let z = e.z_score(closed);
        let pass = z <= VERIFY_BAND;
        all &= pass;
        table.rows.push(vec![
            Cell::Num(t),
            Cell::Num(closed),
            Cell::Num(e.value),
            Cell::Num(e.std_error),
            Cell::Num(z),
            Cell::Bool(pass),
        ]);
    }
    let summary = json!({
        "mode": v.mode.name(),
        "scheme": scheme.name(),
        "n_paths": v.mc.n_paths,
        "seed": v.mc.seed,
        "band": VERIFY_BAND,
        "pass": all,
    });
    Ok(Report::from_table(table, summary))
}

/// Default sweep of the `example35` command.
pub fn example35_grid() -> Vec<f64> {
    (0..100).map(|k| 0.2 + 1.8 * k as f64 / 99.0).collect()
}

fn example35(grid: &[f64]) -> CliResult<Report> {
    let mut table = Table::new(&["t", "x", "g", "f", "dxdt", "g_error", "f_error"]);
    let (mut g_max, mut f_max) = (0.0f64, 0.0f64);
    for &t in grid {
        let p = example35_check(t)?;
        let (ge, fe) = ((p.g - t).abs(), (p.f - p.dxdt).abs());
        g_max = g_max.max(ge);
        f_max = f_max.max(fe);
        table.rows.push(
            [t, p.x, p.g, p.f, p.dxdt, ge, fe]
                .into_iter()
                .map(Cell::Num)
                .collect(),
        );
    }
    Ok(Report::from_table(
        table,
        json!({ "max_g_error": g_max, "max_f_error": f_max }),
    ))
}

/// Runs one command on an already validated configuration.
pub fn execute(command: &Command, v: Option<&Validated>) -> CliResult<Report> {
    if let Command::Example35(_) = command {
        let grid = v
            .and_then(|v| v.t_grid.clone())
            .unwrap_or_else(example35_grid);
        return example35(&grid);
    }
    let v =
        v.ok_or_else(|| CliError::new("missing_config", "--config is required for this command"))?;
    match command {
        Command::Hypotheses(_) => hypotheses(v),
        Command::Analyze(_) => analyze(v),
        Command::MeanSquare(_) => mean_square(v),
        Command::Mixing(_) => mixing(v),
        Command::Profile(_) => profile(v),
        Command::Verify(_) => verify(v),
        Command::Example35(_) => unreachable!(),
    }
}

/// Writes `content` to `path` through a temporary file in the same
/// directory, so the target is either untouched or complete.
pub fn write_atomic(path: &Path, content: &str) -> CliResult<()> {
    let io = |e: std::io::Error| CliError::new("output_io", format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(content.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn format_for(command: &Command, v: Option<&Validated>, out: Option<&Path>) -> Format {
    if let Some(f) = v.and_then(|v| v.format) {
        return f;
    }
    match out.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
        Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        _ => command.default_format(),
    }
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::new("invalid_threads", format!("{THREADS_ENV}={raw:?}")))?;
    // a pool that is already set up (e.g. by an embedding program) is kept
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Parses arguments, runs the command and writes its report. Returns the
/// rendered report when it went to standard output.
pub fn run<I, T>(args: I) -> CliResult<Option<String>>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)
        .map_err(|e| CliError::new("usage", e.to_string().trim().replace('\n', " ")))?;
    configure_threads()?;
    let a = cli.command.args();
    let overrides = Overrides {
        eps: a.eps.clone(),
        seed: a.seed,
        paths: a.paths,
        dt: a.dt,
        out: a.out.clone(),
    };
    let validated = match &a.config {
        Some(path) => Some(RunConfig::load(path)?.validate(&overrides)?),
        None => None,
    };
    let out = validated
        .as_ref()
        .and_then(|v| v.out.clone())
        .or_else(|| a.out.clone());
    let report = execute(&cli.command, validated.as_ref())?;
    let text = report.render(format_for(&cli.command, validated.as_ref(), out.as_deref()))?;
    match out {
        Some(path) => {
            write_atomic(&path, &text)?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

/// Process entry point: prints the report or a one-line JSON error and
/// returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<T> = args.into_iter().collect();
    if let Err(e) = Cli::try_parse_from(args.clone()) {
        use clap::error::ErrorKind;
        if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
            print!("{e}");
            return 0;
        }
    }
    match run(args) {
        Ok(Some(text)) => {
            print!("{text}");
            0
        }
        Ok(None) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json_line());
            if e.code == "usage" {
                2
            } else {
                1
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar() -> Validated {
        RunConfig::from_json(
            r#"{"mode":"commutative","A":[[-1]],"B":[[0.5]],"x":[1],"eps_list":[0.01],"mc":{"n_paths":2000}}"#,
        )
        .unwrap()
        .validate(&Overrides::default())
        .unwrap()
    }

    fn args() -> CommonArgs {
        CommonArgs {
            config: None,
            eps: None,
            seed: None,
            paths: None,
            dt: None,
            out: None,
        }
    }

    #[test]
    fn csv_floats_round_trip() {
        let v = 0.1 + 0.2;
        let s = Cell::Num(v).csv();
        assert_eq!(s.parse::<f64>().unwrap(), v);
        assert_eq!(Cell::Empty.csv(), "");
    }

    #[test]
    fn analyze_scalar() {
        let r = execute(&Command::Analyze(args()), Some(&scalar())).unwrap();
        let s = &r.json["schedules"][0];
        assert_eq!(s["regime"], "commutative");
        assert!((s["q"].as_f64().unwrap() - 0.75).abs() < 1e-14);
        assert_eq!(s["ell"], 1);
        let expected = 0.01f64.ln().abs() / 0.75;
        assert!((s["t_eps"].as_f64().unwrap() - expected).abs() < 1e-12);
        assert!(r
            .render(Format::Csv)
            .unwrap()
            .starts_with("regime,eps,q,ell"));
    }

    #[test]
    fn example35_without_config() {
        let r = execute(&Command::Example35(args()), None).unwrap();
        assert!(r.json["max_g_error"].as_f64().unwrap() < 1e-8);
        assert_eq!(r.table.unwrap().rows.len(), 100);
        let err = execute(&Command::Analyze(args()), None).unwrap_err();
        assert_eq!(err.code, "missing_config");
    }

    #[test]
    fn synthetic_mode_cannot_be_simulated() {
        let v = RunConfig::from_json(
            r#"{"mode":"synthetic","alpha":[[0.2]],"beta":[[0.3]],"Gamma":[[-0.6]],"A":[[-1]],"x":[1]}"#,
        )
        .unwrap()
        .validate(&Overrides::default())
        .unwrap();
        assert_eq!(
            execute(&Command::Verify(args()), Some(&v))
                .unwrap_err()
                .code,
            "unsupported_mode"
        );
        let r = execute(&Command::MeanSquare(args()), Some(&v)).unwrap();
        assert_eq!(r.table.unwrap().rows[0][2], Cell::Empty);
    }

    #[test]
    fn usage_errors_are_coded() {
        let err = run(["gbm-cutoff", "frobnicate"]).unwrap_err();
        assert_eq!(err.code, "usage");
        assert!(!err.to_json_line().contains('\n'));
    }
}
