//! Argument parsing, config-file merging, and command execution.
//!
//! Every subcommand accepts `--config file.json` holding the same keys as
//! its long flags (kebab-case); explicit flags override file values and
//! unknown keys are rejected. Positional arguments stay on the command
//! line. Usage errors exit with 2, runtime failures with 1.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::{ArgAction, Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use latdiff_core::analytic::{self, PacketKind};
use latdiff_core::difflength::{
    delta_gamma_l2, gain_threshold_gamma, gamma_max, l2_closed_delta, l2_closed_from_coherence,
    l2_numeric, WINDOW_LIFETIMES,
};
use latdiff_core::validate::{closed_diffusivity, second_coherence};
use latdiff_core::{
    evolve, population_snapshot, run_suite, ComparisonReport, Config, Lattice, Lifetime, Scheme,
    Series, State, Suite,
};

use crate::csvout::{fmt_cell, Table};
use crate::figures::{self, PanelId};
use crate::pool;

/// Transient diffusivity and diffusion length of wave packets on a
/// dephasing tight-binding chain.
#[derive(Debug, Parser)]
#[command(name = "latdiff", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emit the data behind one figure panel, or all of them, as CSV.
    Figure(FigureArgs),
    /// Propagate one initial state and write the observable series as CSV.
    Propagate(PropagateArgs),
    /// Run validation suites and report every comparison as pass or fail.
    Validate(ValidateArgs),
    /// Evaluate a closed-form target over a parameter grid.
    Sweep(SweepArgs),
    /// Closed-form diffusion-length summary for one packet.
    Difflength(DifflengthArgs),
}

/// Runs a parsed command line to completion.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Figure(args) => run_figure(args),
        Command::Propagate(args) => run_propagate(args),
        Command::Validate(args) => run_validate(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Difflength(args) => run_difflength(args),
    }
}

/// Parses an optional JSON config file into a per-command defaults record.
fn load_config<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

// ---------------------------------------------------------------------------
// Initial-state selection shared by propagate, sweep, and difflength.
// ---------------------------------------------------------------------------

/// Packet family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StateKind {
    Delta,
    Gaussian,
    Standing,
    Traveling,
}

impl StateKind {
    fn name(self) -> &'static str {
        match self {
            StateKind::Delta => "delta",
            StateKind::Gaussian => "gaussian",
            StateKind::Standing => "standing",
            StateKind::Traveling => "traveling",
        }
    }
}

/// Builds the initial state, insisting that exactly the parameters of the
/// chosen family are present.
fn build_state(
    kind: StateKind,
    width: Option<f64>,
    wavenumber: Option<f64>,
    momentum: Option<f64>,
) -> Result<State> {
    let need = |name: &str, value: Option<f64>| {
        value.ok_or_else(|| anyhow::anyhow!("the {} state needs --{name}", kind.name()))
    };
    let refuse = |name: &str, value: Option<f64>| {
        ensure!(value.is_none(), "the {} state takes no --{name}", kind.name());
        Ok(())
    };
    let state = match kind {
        StateKind::Delta => {
            refuse("width", width)?;
            refuse("wavenumber", wavenumber)?;
            refuse("momentum", momentum)?;
            State::delta()
        }
        StateKind::Gaussian => {
            refuse("wavenumber", wavenumber)?;
            refuse("momentum", momentum)?;
            State::gaussian(need("width", width)?)?
        }
        StateKind::Standing => {
            refuse("momentum", momentum)?;
            State::standing(need("width", width)?, need("wavenumber", wavenumber)?)?
        }
        StateKind::Traveling => {
            refuse("wavenumber", wavenumber)?;
            State::traveling(need("width", width)?, need("momentum", momentum)?)?
        }
    };
    Ok(state)
}

/// Human-readable state descriptor used in CSV comments.
fn state_label(state: &State) -> String {
    match *state {
        State::Delta => "delta".to_owned(),
        State::Gaussian { width } => format!("gaussian w={width}"),
        State::StandingGaussian { width, wavenumber } => {
            format!("standing w={width} k={wavenumber}")
        }
        State::TravelingGaussian { width, momentum } => {
            format!("traveling w={width} p={momentum}")
        }
    }
}

// ---------------------------------------------------------------------------
// figure
// ---------------------------------------------------------------------------

/// Panel selector: one id or the whole set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PanelSelector {
    All,
    One(PanelId),
}

fn parse_panel_selector(raw: &str) -> Result<PanelSelector, String> {
    if raw == "all" {
        return Ok(PanelSelector::All);
    }
    PanelId::ALL
        .iter()
        .copied()
        .find(|p| p.name() == raw)
        .map(PanelSelector::One)
        .ok_or_else(|| format!("unknown panel '{raw}' (fig1a..fig5c, or all)"))
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    /// Panel id (fig1a..fig5c) or "all".
    #[arg(value_parser = parse_panel_selector)]
    pub id: PanelSelector,
    /// Directory receiving the <panel>.csv files.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Sample count along the sweep axis of the closed-form panels.
    #[arg(long)]
    pub points: Option<usize>,
    /// JSON file with defaults for the flags above (kebab-case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct FigureFile {
    out_dir: Option<PathBuf>,
    points: Option<usize>,
}

fn run_figure(args: FigureArgs) -> Result<()> {
    let file: FigureFile = load_config(args.config.as_deref())?;
    let out_dir = args.out_dir.or(file.out_dir).unwrap_or_else(|| PathBuf::from("."));
    let points = args.points.or(file.points);
    let ids: Vec<PanelId> = match args.id {
        PanelSelector::All => PanelId::ALL.to_vec(),
        PanelSelector::One(id) => vec![id],
    };
    fs::create_dir_all(&out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    for id in ids {
        let table = figures::panel(id, points)?;
        let path = out_dir.join(id.filename());
        table
            .write(&path)
            .with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {} ({} rows)", path.display(), table.n_rows());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// propagate
// ---------------------------------------------------------------------------

/// Propagation scheme selector mirroring the library's schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    Rk4Dense,
    BlochClosed,
}

impl From<SchemeArg> for Scheme {
    fn from(arg: SchemeArg) -> Self {
        match arg {
            SchemeArg::Rk4Dense => Scheme::Rk4Dense,
            SchemeArg::BlochClosed => Scheme::BlochClosed,
        }
    }
}

#[derive(Debug, Args)]
pub struct PropagateArgs {
    /// Initial state family (default: delta).
    #[arg(long, value_enum)]
    pub state: Option<StateKind>,
    /// Packet width w, in sites.
    #[arg(long)]
    pub width: Option<f64>,
    /// Wavenumber k of the standing modulation.
    #[arg(long)]
    pub wavenumber: Option<f64>,
    /// Momentum p of the traveling modulation.
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Hopping amplitude J (default: 1).
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Dephasing rate Gamma (default: 0).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Propagation horizon (default: 8).
    #[arg(long)]
    pub t_end: Option<f64>,
    /// Integrator step (default: 1e-3/max(|J|, Gamma)).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Chain length, odd (default: auto-sized to the light cone).
    #[arg(long)]
    pub n_sites: Option<usize>,
    /// Record every k-th step (default: about 800 records).
    #[arg(long)]
    pub record_stride: Option<usize>,
    /// Record coherence sums up to this offset (default: 4).
    #[arg(long)]
    pub l_max: Option<usize>,
    /// Propagation scheme (default: bloch-closed at Gamma = 0, else
    /// rk4-dense).
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Comma-separated population snapshot times.
    #[arg(long, value_delimiter = ',')]
    pub snapshot_times: Option<Vec<f64>>,
    /// Output CSV path of the snapshot table.
    #[arg(long)]
    pub snapshot_out: Option<PathBuf>,
    /// JSON file with defaults for the flags above (kebab-case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct PropagateFile {
    state: Option<StateKind>,
    width: Option<f64>,
    wavenumber: Option<f64>,
    momentum: Option<f64>,
    coupling: Option<f64>,
    gamma: Option<f64>,
    t_end: Option<f64>,
    dt: Option<f64>,
    n_sites: Option<usize>,
    record_stride: Option<usize>,
    l_max: Option<usize>,
    scheme: Option<SchemeArg>,
    out: Option<PathBuf>,
    snapshot_times: Option<Vec<f64>>,
    snapshot_out: Option<PathBuf>,
}

fn run_propagate(args: PropagateArgs) -> Result<()> {
    let file: PropagateFile = load_config(args.config.as_deref())?;
    let kind = args.state.or(file.state).unwrap_or(StateKind::Delta);
    let state = build_state(
        kind,
        args.width.or(file.width),
        args.wavenumber.or(file.wavenumber),
        args.momentum.or(file.momentum),
    )?;
    let coupling = args.coupling.or(file.coupling).unwrap_or(1.0);
    let gamma = args.gamma.or(file.gamma).unwrap_or(0.0);
    let t_end = args.t_end.or(file.t_end).unwrap_or(8.0);
    let scheme = args
        .scheme
        .or(file.scheme)
        .map(Scheme::from)
        .unwrap_or(if gamma == 0.0 { Scheme::BlochClosed } else { Scheme::Rk4Dense });

    let model = Lattice::new(coupling)?;
    let mut config = Config::new(scheme, &state, &model, gamma, t_end)?;
    if let Some(dt) = args.dt.or(file.dt) {
        config = config.with_dt(dt);
    }
    if let Some(n) = args.n_sites.or(file.n_sites) {
        config = config.with_n_sites(n);
    }
    if let Some(l) = args.l_max.or(file.l_max) {
        config = config.with_l_max(l);
    }
    let stride = args
        .record_stride
        .or(file.record_stride)
        .unwrap_or_else(|| ((t_end / config.dt / 800.0).ceil() as usize).max(1));
    config = config.with_record_stride(stride);
    config.validate(&model, gamma, &state)?;

    let series = evolve(&state, &model, gamma, &config)?;
    let table = series_table(&series, &state, coupling, gamma, &config);
    emit(&table, args.out.or(file.out).as_deref())?;

    if let Some(times) = args.snapshot_times.or(file.snapshot_times) {
        let out = args
            .snapshot_out
            .or(file.snapshot_out)
            .ok_or_else(|| anyhow::anyhow!("--snapshot-times needs --snapshot-out"))?;
        let snap = population_snapshot(&state, &model, gamma, &times, &config)?;
        let mut columns = vec!["n".to_owned()];
        columns.extend(snap.times.iter().map(|&t| format!("pop_t{t}")));
        let mut snap_table = Table::new(columns);
        snap_table.comment(format!("site populations, state {}", state_label(&state)));
        for (i, &n) in snap.sites.iter().enumerate() {
            let mut row = vec![n];
            row.extend(snap.populations.iter().map(|profile| profile[i]));
            snap_table.push_row(row);
        }
        snap_table
            .write(&out)
            .with_context(|| format!("writing {}", out.display()))?;
        println!("wrote {} ({} rows)", out.display(), snap_table.n_rows());
    }
    Ok(())
}

/// Observable series as a CSV table: one row per record.
fn series_table(
    series: &Series,
    state: &State,
    coupling: f64,
    gamma: f64,
    config: &Config,
) -> Table {
    let l_max = series.rho_l.len();
    let mut columns = vec![
        "t".to_owned(),
        "mean_n".to_owned(),
        "variance".to_owned(),
        "d_flux".to_owned(),
        "d_fd".to_owned(),
    ];
    for l in 1..=l_max {
        columns.push(format!("re_rho_{l}"));
        columns.push(format!("im_rho_{l}"));
    }
    columns.push("boundary_mass".to_owned());
    let mut table = Table::new(columns);
    table.comment(format!("state {}", state_label(state)));
    table.comment(format!(
        "J = {coupling}, Gamma = {gamma}, scheme {}, n_sites = {}, dt = {}, record stride {}",
        match config.scheme {
            Scheme::Rk4Dense => "rk4-dense",
            Scheme::BlochClosed => "bloch-closed",
        },
        config.n_sites,
        config.dt,
        config.record_stride,
    ));
    table.comment(format!(
        "max |tr rho - 1| = {}, max hermiticity defect = {}",
        fmt_cell(series.max_trace_drift),
        fmt_cell(series.max_hermiticity_drift),
    ));
    for i in 0..series.len() {
        let mut row = vec![
            series.times[i],
            series.mean_n[i],
            series.variance[i],
            series.diffusivity_flux[i],
            series.diffusivity_fd[i],
        ];
        for l in 0..l_max {
            row.push(series.rho_l[l][i].re);
            row.push(series.rho_l[l][i].im);
        }
        row.push(series.boundary_mass[i]);
        table.push_row(row);
    }
    table
}

/// Writes the table to `path`, or to stdout when no path is given.
fn emit(table: &Table, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => {
            table
                .write(p)
                .with_context(|| format!("writing {}", p.display()))?;
            println!("wrote {} ({} rows)", p.display(), table.n_rows());
        }
        None => print!("{}", table.render()),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

fn parse_suite(raw: &str) -> Result<Suite, String> {
    let mut name = raw.trim().to_ascii_lowercase().replace('_', "-");
    if name == "difflength" {
        name = "diffusion-length".to_owned();
    }
    Suite::ALL
        .iter()
        .copied()
        .find(|s| s.name() == name)
        .ok_or_else(|| {
            let known = Suite::ALL.map(Suite::name).join(", ");
            format!("unknown suite '{raw}' (known: {known})")
        })
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Suites to run (default: all of them).
    #[arg(value_parser = parse_suite, num_args = 0..)]
    pub suites: Vec<Suite>,
    /// Sparse grids for a fast sanity pass.
    #[arg(long, action = ArgAction::SetTrue)]
    pub quick: bool,
    /// Write every report to this path as a JSON array.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Worker threads over independent suites (default: available cores).
    #[arg(long, env = "LATDIFF_JOBS")]
    pub jobs: Option<usize>,
    /// JSON file with defaults for the flags above (kebab-case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct ValidateFile {
    quick: Option<bool>,
    report: Option<PathBuf>,
    jobs: Option<usize>,
}

/// One validation outcome tagged with its suite, as serialized to JSON.
#[derive(Serialize)]
struct SuiteRecord<'a> {
    suite: &'static str,
    #[serde(flatten)]
    report: &'a ComparisonReport,
}

fn run_validate(args: ValidateArgs) -> Result<()> {
    let file: ValidateFile = load_config(args.config.as_deref())?;
    let quick = args.quick || file.quick.unwrap_or(false);
    let report_path = args.report.or(file.report);
    let jobs = args.jobs.or(file.jobs).unwrap_or_else(pool::default_jobs);
    let suites: Vec<Suite> = if args.suites.is_empty() {
        Suite::ALL.to_vec()
    } else {
        args.suites
    };

    log::debug!("running {} suites on up to {jobs} workers", suites.len());
    let per_suite = pool::run_indexed(jobs, suites.len(), |i| run_suite(suites[i], quick));
    let mut failures = 0usize;
    let mut total = 0usize;
    let mut records = Vec::new();
    for (&suite, reports) in suites.iter().zip(&per_suite) {
        for report in reports {
            total += 1;
            if !report.passed {
                failures += 1;
            }
            println!("{}", report_line(suite, report));
        }
    }
    for (&suite, reports) in suites.iter().zip(&per_suite) {
        for report in reports {
            records.push(SuiteRecord {
                suite: suite.name(),
                report,
            });
        }
    }
    if let Some(path) = &report_path {
        let json = serde_json::to_string_pretty(&records)?;
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {} ({} records)", path.display(), records.len());
    }
    println!(
        "validation: {total} checks, {failures} failure{}",
        if failures == 1 { "" } else { "s" }
    );
    ensure!(failures == 0, "{failures} of {total} validation checks failed");
    Ok(())
}

/// One pass/fail console line per comparison.
fn report_line(suite: Suite, report: &ComparisonReport) -> String {
    let verdict = if report.passed { "PASS" } else { "FAIL" };
    let mut line = format!(
        "{verdict} [{}] {} | points {} max_rel {:.3e} max_abs {:.3e} tol {:.1e} worst_at {:.6}",
        suite.name(),
        report.case,
        report.points,
        report.max_rel_err,
        report.max_abs_err,
        report.tolerance,
        report.worst_at,
    );
    if let Some(x) = report.first_fail_at {
        line.push_str(&format!(" first_fail_at {x:.6}"));
    }
    line
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

/// Closed-form quantity evaluated at every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Deserialize)]
pub enum SweepTarget {
    /// Diffusivity D(t*) of the packet.
    #[value(name = "d-at-t")]
    #[serde(rename = "d-at-t")]
    DAtT,
    /// Lifetime-averaged squared diffusion length.
    #[value(name = "l2")]
    #[serde(rename = "l2")]
    L2,
    /// Time of the transient diffusivity peak (NaN when none exists).
    #[value(name = "t-p")]
    #[serde(rename = "t-p")]
    PeakTime,
    /// Critical width of dephasing-induced enhancement (NaN when none).
    #[value(name = "w-c")]
    #[serde(rename = "w-c")]
    CriticalWidth,
}

impl SweepTarget {
    fn name(self) -> &'static str {
        match self {
            SweepTarget::DAtT => "d-at-t",
            SweepTarget::L2 => "l2",
            SweepTarget::PeakTime => "t-p",
            SweepTarget::CriticalWidth => "w-c",
        }
    }
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Quantity evaluated at each grid point (default: d-at-t).
    #[arg(long, value_enum)]
    pub target: Option<SweepTarget>,
    /// State family of the grid (default: gaussian).
    #[arg(long, value_enum)]
    pub state: Option<StateKind>,
    /// Packet widths (default: 10).
    #[arg(long, value_delimiter = ',')]
    pub w: Option<Vec<f64>>,
    /// Standing wavenumbers (default: 0).
    #[arg(long, value_delimiter = ',')]
    pub k: Option<Vec<f64>>,
    /// Traveling momenta (default: 0).
    #[arg(long, value_delimiter = ',')]
    pub p: Option<Vec<f64>>,
    /// Dephasing rates (default: 1).
    #[arg(long, value_delimiter = ',')]
    pub gamma: Option<Vec<f64>>,
    /// Mean lifetimes, used by the l2 target (default: 5).
    #[arg(long, value_delimiter = ',')]
    pub tau: Option<Vec<f64>>,
    /// Evaluation time of the d-at-t target (default: 1).
    #[arg(long)]
    pub t_star: Option<f64>,
    /// Hopping amplitude J (default: 1).
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Worker threads (default: available cores).
    #[arg(long, env = "LATDIFF_JOBS")]
    pub jobs: Option<usize>,
    /// Output CSV path (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with defaults for the flags above (kebab-case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct SweepFile {
    target: Option<SweepTarget>,
    state: Option<StateKind>,
    w: Option<Vec<f64>>,
    k: Option<Vec<f64>>,
    p: Option<Vec<f64>>,
    gamma: Option<Vec<f64>>,
    tau: Option<Vec<f64>>,
    t_star: Option<f64>,
    coupling: Option<f64>,
    jobs: Option<usize>,
    out: Option<PathBuf>,
}

/// One resolved sweep grid point.
#[derive(Debug, Clone, Copy)]
struct SweepPoint {
    w: f64,
    k: f64,
    p: f64,
    gamma: f64,
    tau: f64,
}

fn run_sweep(args: SweepArgs) -> Result<()> {
    let file: SweepFile = load_config(args.config.as_deref())?;
    let target = args.target.or(file.target).unwrap_or(SweepTarget::DAtT);
    let kind = args.state.or(file.state).unwrap_or(StateKind::Gaussian);
    let ws = args.w.or(file.w).unwrap_or_else(|| vec![10.0]);
    let ks = args.k.or(file.k).unwrap_or_else(|| vec![0.0]);
    let ps = args.p.or(file.p).unwrap_or_else(|| vec![0.0]);
    let gammas = args.gamma.or(file.gamma).unwrap_or_else(|| vec![1.0]);
    let taus = args.tau.or(file.tau).unwrap_or_else(|| vec![5.0]);
    let t_star = args.t_star.or(file.t_star).unwrap_or(1.0);
    let coupling = args.coupling.or(file.coupling).unwrap_or(1.0);
    let jobs = args.jobs.or(file.jobs).unwrap_or_else(pool::default_jobs);
    for (name, axis) in [("w", &ws), ("k", &ks), ("p", &ps), ("gamma", &gammas), ("tau", &taus)] {
        ensure!(!axis.is_empty(), "empty sweep grid: --{name} lists no values");
    }

    let n = ws.len() * ks.len() * ps.len() * gammas.len() * taus.len();
    let point = |i: usize| -> SweepPoint {
        let it = i % taus.len();
        let ig = (i / taus.len()) % gammas.len();
        let ip = (i / (taus.len() * gammas.len())) % ps.len();
        let ik = (i / (taus.len() * gammas.len() * ps.len())) % ks.len();
        let iw = i / (taus.len() * gammas.len() * ps.len() * ks.len());
        SweepPoint {
            w: ws[iw],
            k: ks[ik],
            p: ps[ip],
            gamma: gammas[ig],
            tau: taus[it],
        }
    };
    let values = pool::run_indexed(jobs, n, |i| sweep_value(target, kind, coupling, t_star, point(i)));

    let mut table = Table::new(
        ["w", "k", "p", "gamma", "tau", "value"].map(String::from).to_vec(),
    );
    table.comment(format!(
        "target {}, state {}, J = {coupling}, t_star = {t_star}",
        target.name(),
        kind.name(),
    ));
    table.comment("rows nest w, then k, then p, then gamma, then tau; absent optima are NaN");
    for (i, value) in values.into_iter().enumerate() {
        let q = point(i);
        table.push_row(vec![q.w, q.k, q.p, q.gamma, q.tau, value?]);
    }
    emit(&table, args.out.or(file.out).as_deref())
}

/// Evaluates the target at one grid point; axes a target ignores are
/// enumerated but do not change its value.
fn sweep_value(
    target: SweepTarget,
    kind: StateKind,
    coupling: f64,
    t_star: f64,
    q: SweepPoint,
) -> Result<f64> {
    let state = match kind {
        StateKind::Delta => State::delta(),
        StateKind::Gaussian => State::gaussian(q.w)?,
        StateKind::Standing => State::standing(q.w, q.k)?,
        StateKind::Traveling => State::traveling(q.w, q.p)?,
    };
    let packet = |verb: &str| -> Result<(PacketKind, f64)> {
        match kind {
            StateKind::Gaussian => Ok((PacketKind::Gaussian, 0.0)),
            StateKind::Standing => Ok((PacketKind::Standing, q.k)),
            StateKind::Traveling => Ok((PacketKind::Traveling, q.p)),
            StateKind::Delta => bail!("the {verb} target needs a packet of finite width"),
        }
    };
    let value = match target {
        SweepTarget::DAtT => closed_diffusivity(&state, t_star, coupling, q.gamma),
        SweepTarget::L2 => {
            let lifetime = Lifetime::new(q.tau)?;
            l2_closed_from_coherence(coupling, second_coherence(&state), q.gamma, &lifetime)
        }
        SweepTarget::PeakTime => {
            let (packet_kind, modulation) = packet("t-p")?;
            analytic::peak_time(packet_kind, coupling, q.w, modulation, q.gamma)?
                .unwrap_or(f64::NAN)
        }
        SweepTarget::CriticalWidth => {
            let (packet_kind, modulation) = packet("w-c")?;
            analytic::critical_width(packet_kind, modulation)?.unwrap_or(f64::NAN)
        }
    };
    Ok(value)
}

// ---------------------------------------------------------------------------
// difflength
// ---------------------------------------------------------------------------

#[derive(Debug, Args)]
pub struct DifflengthArgs {
    /// Packet family (default: gaussian).
    #[arg(long, value_enum)]
    pub state: Option<StateKind>,
    /// Packet width w, in sites.
    #[arg(long)]
    pub width: Option<f64>,
    /// Wavenumber k of the standing modulation.
    #[arg(long)]
    pub wavenumber: Option<f64>,
    /// Momentum p of the traveling modulation.
    #[arg(long)]
    pub momentum: Option<f64>,
    /// Hopping amplitude J (default: 1).
    #[arg(long)]
    pub coupling: Option<f64>,
    /// Dephasing rate Gamma (default: 1).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Mean lifetime tau (default: 5).
    #[arg(long)]
    pub tau: Option<f64>,
    /// Also propagate over 20 lifetimes and integrate numerically.
    #[arg(long, action = ArgAction::SetTrue)]
    pub numeric: bool,
    /// Integrator step of the numeric run (default: the step bound).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Write the summary as JSON to this path.
    #[arg(long)]
    pub json: Option<PathBuf>,
    /// JSON file with defaults for the flags above (kebab-case keys).
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields, default)]
struct DifflengthFile {
    state: Option<StateKind>,
    width: Option<f64>,
    wavenumber: Option<f64>,
    momentum: Option<f64>,
    coupling: Option<f64>,
    gamma: Option<f64>,
    tau: Option<f64>,
    numeric: Option<bool>,
    dt: Option<f64>,
    json: Option<PathBuf>,
}

/// Closed-form (and optionally numeric) diffusion-length summary.
#[derive(Debug, Serialize)]
struct DifflengthSummary {
    state: String,
    coupling: f64,
    gamma: f64,
    tau: f64,
    /// Initial second coherence of the packet.
    c2: f64,
    /// Closed-form squared diffusion length of the packet.
    l2_closed: f64,
    /// Point-excitation reference length.
    l2_delta: f64,
    /// Width-induced deficit l2_closed - l2_delta.
    delta_l2: f64,
    /// Dephasing-induced change against the isolated chain (Gaussian).
    #[serde(skip_serializing_if = "Option::is_none")]
    delta_gamma_l2: Option<f64>,
    /// Rate maximizing the length, when above the critical width.
    #[serde(skip_serializing_if = "Option::is_none")]
    gamma_max: Option<f64>,
    /// Rate beyond which dephasing no longer beats the isolated chain.
    #[serde(skip_serializing_if = "Option::is_none")]
    gain_threshold_gamma: Option<f64>,
    /// Lifetime-weighted quadrature of a propagated run.
    #[serde(skip_serializing_if = "Option::is_none")]
    l2_numeric: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric_tail_share: Option<f64>,
    /// |numeric - closed| / closed.
    #[serde(skip_serializing_if = "Option::is_none")]
    numeric_rel_dev: Option<f64>,
}

fn run_difflength(args: DifflengthArgs) -> Result<()> {
    let file: DifflengthFile = load_config(args.config.as_deref())?;
    let kind = args.state.or(file.state).unwrap_or(StateKind::Gaussian);
    let state = build_state(
        kind,
        args.width.or(file.width),
        args.wavenumber.or(file.wavenumber),
        args.momentum.or(file.momentum),
    )?;
    let coupling = args.coupling.or(file.coupling).unwrap_or(1.0);
    let gamma = args.gamma.or(file.gamma).unwrap_or(1.0);
    let tau = args.tau.or(file.tau).unwrap_or(5.0);
    let numeric = args.numeric || file.numeric.unwrap_or(false);
    let lifetime = Lifetime::new(tau)?;

    let c2 = second_coherence(&state);
    let l2_closed = l2_closed_from_coherence(coupling, c2, gamma, &lifetime);
    let l2_delta = l2_closed_delta(coupling, gamma, &lifetime);
    let mut summary = DifflengthSummary {
        state: state_label(&state),
        coupling,
        gamma,
        tau,
        c2,
        l2_closed,
        l2_delta,
        delta_l2: l2_closed - l2_delta,
        delta_gamma_l2: None,
        gamma_max: None,
        gain_threshold_gamma: None,
        l2_numeric: None,
        numeric_tail_share: None,
        numeric_rel_dev: None,
    };
    if let State::Gaussian { width } = state {
        summary.delta_gamma_l2 = Some(delta_gamma_l2(coupling, width, gamma, &lifetime));
        summary.gamma_max = gamma_max(width, &lifetime)?;
        summary.gain_threshold_gamma = gain_threshold_gamma(width, &lifetime)?;
    }
    if numeric {
        let model = Lattice::new(coupling)?;
        let scheme = if gamma == 0.0 { Scheme::BlochClosed } else { Scheme::Rk4Dense };
        let t_end = WINDOW_LIFETIMES * tau;
        let mut config = Config::new(scheme, &state, &model, gamma, t_end)?;
        let dt = args
            .dt
            .or(file.dt)
            .unwrap_or(0.05 / coupling.abs().max(gamma));
        config = config.with_dt(dt).with_record_stride(2);
        config.validate(&model, gamma, &state)?;
        let estimate = l2_numeric(&state, &model, gamma, &lifetime, &config)?;
        summary.l2_numeric = Some(estimate.value);
        summary.numeric_tail_share = Some(estimate.tail_share);
        summary.numeric_rel_dev = Some((estimate.value - l2_closed).abs() / l2_closed.abs());
    }

    print!("{}", summary_text(&summary));
    if let Some(path) = args.json.or(file.json) {
        let json = serde_json::to_string_pretty(&summary)?;
        fs::write(&path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

/// Key = value lines of the summary, numeric cells in CSV format.
fn summary_text(s: &DifflengthSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!("state = {}\n", s.state));
    out.push_str(&format!("coupling = {}\n", s.coupling));
    out.push_str(&format!("gamma = {}\n", s.gamma));
    out.push_str(&format!("tau = {}\n", s.tau));
    out.push_str(&format!("c2 = {}\n", fmt_cell(s.c2)));
    out.push_str(&format!("l2_closed = {}\n", fmt_cell(s.l2_closed)));
    out.push_str(&format!("l2_delta = {}\n", fmt_cell(s.l2_delta)));
    out.push_str(&format!("delta_l2 = {}\n", fmt_cell(s.delta_l2)));
    if let Some(v) = s.delta_gamma_l2 {
        out.push_str(&format!("delta_gamma_l2 = {}\n", fmt_cell(v)));
    }
    if let Some(v) = s.gamma_max {
        out.push_str(&format!("gamma_max = {}\n", fmt_cell(v)));
    } else if s.state.starts_with("gaussian") {
        out.push_str("gamma_max = none (below the critical width)\n");
    }
    if let Some(v) = s.gain_threshold_gamma {
        out.push_str(&format!("gain_threshold_gamma = {}\n", fmt_cell(v)));
    }
    if let Some(v) = s.l2_numeric {
        out.push_str(&format!("l2_numeric = {}\n", fmt_cell(v)));
    }
    if let Some(v) = s.numeric_tail_share {
        out.push_str(&format!("numeric_tail_share = {}\n", fmt_cell(v)));
    }
    if let Some(v) = s.numeric_rel_dev {
        out.push_str(&format!("numeric_rel_dev = {}\n", fmt_cell(v)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_parsing_accepts_aliases() {
        assert_eq!(parse_suite("hsr").unwrap(), Suite::Hsr);
        assert_eq!(parse_suite("closed_system").unwrap(), Suite::ClosedSystem);
        assert_eq!(parse_suite("difflength").unwrap(), Suite::DiffusionLength);
        assert_eq!(parse_suite("diffusion-length").unwrap(), Suite::DiffusionLength);
        assert!(parse_suite("nonsense").is_err());
    }

    #[test]
    fn panel_selector_covers_every_panel() {
        assert_eq!(parse_panel_selector("all").unwrap(), PanelSelector::All);
        for id in PanelId::ALL {
            assert_eq!(
                parse_panel_selector(id.name()).unwrap(),
                PanelSelector::One(id)
            );
        }
        assert!(parse_panel_selector("fig9z").is_err());
    }

    #[test]
    fn state_construction_is_strict() {
        assert!(build_state(StateKind::Delta, None, None, None).is_ok());
        assert!(build_state(StateKind::Delta, Some(3.0), None, None).is_err());
        assert!(build_state(StateKind::Gaussian, None, None, None).is_err());
        assert!(build_state(StateKind::Gaussian, Some(3.0), None, Some(0.5)).is_err());
        let state = build_state(StateKind::Standing, Some(3.0), Some(0.6), None).unwrap();
        assert_eq!(state_label(&state), "standing w=3 k=0.6");
    }

    #[test]
    fn sweep_points_nest_in_document_order() {
        // Two taus, two gammas: tau is the innermost axis.
        let taus = [1.0, 2.0];
        let gammas = [0.5, 1.0];
        let decode = |i: usize| (gammas[(i / taus.len()) % gammas.len()], taus[i % taus.len()]);
        assert_eq!(decode(0), (0.5, 1.0));
        assert_eq!(decode(1), (0.5, 2.0));
        assert_eq!(decode(2), (1.0, 1.0));
    }

    #[test]
    fn sweep_values_match_closed_forms() {
        let q = SweepPoint { w: 3.0, k: 0.0, p: 0.0, gamma: 0.5, tau: 5.0 };
        let d = sweep_value(SweepTarget::DAtT, StateKind::Gaussian, 1.0, 1.0, q).unwrap();
        assert_eq!(d, analytic::d_gaussian(1.0, 1.0, 3.0, 0.5));
        let l2 = sweep_value(SweepTarget::L2, StateKind::Gaussian, 1.0, 1.0, q).unwrap();
        let lifetime = Lifetime::new(5.0).unwrap();
        assert_eq!(
            l2,
            latdiff_core::difflength::l2_closed_gaussian(1.0, 3.0, 0.5, &lifetime)
        );
        // Peaks need a sufficiently fast modulation; below it the answer
        // is NaN rather than an error.
        let tp = sweep_value(SweepTarget::PeakTime, StateKind::Standing, 1.0, 1.0, q).unwrap();
        assert!(tp.is_nan());
        let wc = sweep_value(SweepTarget::CriticalWidth, StateKind::Gaussian, 1.0, 1.0, q).unwrap();
        assert!((wc - 1.0 / 2.0f64.ln().sqrt()).abs() < 1e-15);
        assert!(sweep_value(SweepTarget::PeakTime, StateKind::Delta, 1.0, 1.0, q).is_err());
    }
}
