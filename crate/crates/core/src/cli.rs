//! Command-line front end.
//!
//! Every subcommand validates its full parameter set before doing any work,
//! builds its output in memory and only then writes it (temp file + rename).
//! Exit codes: 0 success, 1 I/O failure, 2 invalid input, 3 numerical failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dist::ValueDist;
use crate::error::Error;
use crate::gamma::{gamma_sweep, simulate_gamma_batch, GammaPoint, GammaRow};
use crate::manifold::{example_manifold_with_resolution, find_optima, sweep, Example, DEFAULT_RESOLUTION};
use crate::model::{ContentParams, ModelPoint, OutsideOption};
use crate::population::{population_metrics, population_sweep, Population};
use crate::sim::{simulate_batch, SimConfig};
use crate::survey::{classify_regime, empirical_conditional, regretful_use, survey_table};
use crate::tree::{optimize_branching, TreeConfig, DEFAULT_D_MAX};
use crate::VERSION;

/// Environment variable capping the worker thread count (0 = automatic).
pub const THREADS_ENV: &str = "ENGAGEMENT_LAB_THREADS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Model(#[from] Error),
    #[error("{0}")]
    Usage(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Model(e) if e.is_validation() => EXIT_INVALID,
            CliError::Model(_) => EXIT_NUMERICAL,
            CliError::Usage(_) => EXIT_INVALID,
            CliError::Io { .. } => EXIT_IO,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn missing(name: &str) -> CliError {
    CliError::Usage(format!("missing required parameter --{name}"))
}

#[derive(Parser, Debug)]
#[command(name = "engagement-lab", version, about = "Dual-system media consumption model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Closed-form utility and engagement at one point.
    Eval(EvalArgs),
    /// Monte Carlo sessions at one point.
    Simulate(SimulateArgs),
    /// Optima and sweep along an example manifold.
    Manifold(ManifoldArgs),
    /// Satiation model at one point.
    Gamma(GammaArgs),
    /// Conditional utility given session length.
    Survey(SurveyArgs),
    /// Population metrics under a uniform outside option.
    Population(PopulationArgs),
    /// Tree feed and branching-factor optimization.
    Tree(TreeArgs),
    /// Emit the data behind a figure preset.
    Figure(FigureArgs),
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct PointArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Mean item value v̄.
    #[arg(long)]
    v: Option<f64>,
    /// Outside option W.
    #[arg(long)]
    w: Option<f64>,
}

impl PointArgs {
    fn point(&self) -> CliResult<ModelPoint> {
        Ok(ModelPoint::from_values(
            self.p.ok_or_else(|| missing("p"))?,
            self.q.ok_or_else(|| missing("q"))?,
            self.v.ok_or_else(|| missing("v"))?,
            self.w.ok_or_else(|| missing("w"))?,
        )?)
    }
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct EvalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    point: PointArgs,
    /// JSON configuration file; flags take precedence.
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    point: PointArgs,
    #[arg(long)]
    replications: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Value distribution as JSON, e.g. {"kind":"finite_support","support":[[1,0.5],[5,0.5]]}.
    #[arg(long)]
    values: Option<String>,
    /// Simulate even where the user would not visit.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    force: Option<bool>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct ManifoldArgs {
    /// quality, moreishness or both.
    #[arg(long)]
    example: Option<String>,
    #[arg(long)]
    q0: Option<f64>,
    #[arg(long)]
    v0: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct GammaArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    /// Also run this many simulated sessions.
    #[arg(long)]
    replications: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct SurveyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    point: PointArgs,
    #[arg(long)]
    t_max: Option<u64>,
    /// Simulated sessions for the empirical column (0 = none).
    #[arg(long)]
    replications: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct PopulationArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    v: Option<f64>,
    /// Lower end of the uniform outside-option range.
    #[arg(long)]
    a: Option<f64>,
    /// Upper end of the uniform outside-option range.
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct TreeArgs {
    /// appendix-d or fig6 (iid branches); overridden by explicit flags.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long)]
    w: Option<f64>,
    /// Branch value distribution as JSON.
    #[arg(long)]
    values: Option<String>,
    #[arg(long)]
    dmax: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default, Serialize, Deserialize)]
struct FigureArgs {
    /// Preset id; see `figure --list`.
    #[arg(long)]
    id: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(default)]
    list: bool,
    #[arg(long)]
    #[serde(skip)]
    config: Option<PathBuf>,
}

/// Overlays command-line values on a JSON config file.
fn with_config<T: Serialize + DeserializeOwned>(args: T, config: Option<&Path>) -> CliResult<T> {
    let Some(path) = config else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut base: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let flags = serde_json::to_value(&args).expect("argument structs serialize");
    let (Some(base_map), serde_json::Value::Object(flag_map)) = (base.as_object_mut(), flags) else {
        return Err(CliError::Usage(format!("{}: config must be a JSON object", path.display())));
    };
    if let Some(bad) = base_map.keys().find(|k| !flag_map.contains_key(*k)) {
        return Err(CliError::Usage(format!("{}: unknown key `{bad}`", path.display())));
    }
    for (k, v) in flag_map {
        if !v.is_null() && v != serde_json::Value::Bool(false) {
            base_map.insert(k, v);
        }
    }
    serde_json::from_value(base).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn parse_dist(json: &str) -> CliResult<ValueDist> {
    serde_json::from_str(json).map_err(|e| CliError::Usage(format!("bad value distribution: {e}")))
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent).map_err(io)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&parent).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// CSV with `#` metadata lines above the header.
pub fn csv_bytes<R: Serialize>(rows: &[R], seed: Option<u64>, preset: &str) -> CliResult<Vec<u8>> {
    let mut out = Vec::new();
    if let Some(s) = seed {
        out.extend_from_slice(format!("# seed={s}\n").as_bytes());
    }
    out.extend_from_slice(format!("# preset={preset}\n# version={VERSION}\n").as_bytes());
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)
            .map_err(|e| CliError::Usage(format!("csv serialization failed: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Usage(format!("csv flush failed: {e}")))
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("summaries serialize");
    v.push(b'\n');
    v
}

fn configure_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("{THREADS_ENV} must be a nonnegative integer, got `{raw}`")))?;
    // a pool built earlier in the same process keeps its size
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let sink: &mut dyn Write = if code == 0 { stdout } else { stderr };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    let result = configure_threads().and_then(|_| dispatch(cli.command, stdout));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> CliResult<()> {
    match cmd {
        Command::Eval(a) => {
            let config = a.config.clone();
            eval(with_config(a, config.as_deref())?, out)
        }
        Command::Simulate(a) => {
            let config = a.config.clone();
            simulate(with_config(a, config.as_deref())?, out)
        }
        Command::Manifold(a) => {
            let config = a.config.clone();
            manifold(with_config(a, config.as_deref())?, out)
        }
        Command::Gamma(a) => {
            let config = a.config.clone();
            gamma(with_config(a, config.as_deref())?, out)
        }
        Command::Survey(a) => {
            let config = a.config.clone();
            survey(with_config(a, config.as_deref())?, out)
        }
        Command::Population(a) => {
            let config = a.config.clone();
            population(with_config(a, config.as_deref())?, out)
        }
        Command::Tree(a) => {
            let config = a.config.clone();
            tree(with_config(a, config.as_deref())?, out)
        }
        Command::Figure(a) => {
            let config = a.config.clone();
            figure(with_config(a, config.as_deref())?, out)
        }
    }
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|source| CliError::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

#[derive(Serialize)]
struct EvalOutput {
    p: f64,
    q: f64,
    v_bar: f64,
    w: f64,
    g_s: f64,
    g_t: f64,
    e_s: f64,
    e_t: f64,
    participates: bool,
}

fn eval(a: EvalArgs, out: &mut dyn Write) -> CliResult<()> {
    let pt = a.point.point()?;
    let c = pt.params;
    let res = EvalOutput {
        p: c.p(),
        q: c.q(),
        v_bar: c.v_bar(),
        w: pt.w(),
        g_s: pt.g_utility(),
        g_t: pt.g_engagement(),
        e_s: pt.expected_utility(),
        e_t: pt.expected_engagement(),
        participates: pt.participates(),
    };
    if let Some(path) = &a.out {
        write_atomic(path, &json_bytes(&res))?;
    }
    say(out, format_args!("e_s={} e_t={} participates={}", res.e_s, res.e_t, res.participates))
}

fn simulate(a: SimulateArgs, out: &mut dyn Write) -> CliResult<()> {
    let pt = a.point.point()?;
    let reps = a.replications.unwrap_or(100_000);
    let seed = a.seed.unwrap_or(0);
    let cfg = match &a.values {
        Some(json) => SimConfig::with_values(pt, parse_dist(json)?, reps, seed)?,
        None => SimConfig::new(pt, reps, seed)?,
    }
    .force_participation(a.force.unwrap_or(false));
    let s = simulate_batch(&cfg);
    let json = s.to_json();
    if let Some(path) = &a.out {
        write_atomic(path, format!("{json}\n").as_bytes())?;
    }
    say(out, format_args!("{json}"))
}

#[derive(Serialize)]
struct ManifoldOutput {
    example: Example,
    w: f64,
    resolution: usize,
    optima: crate::manifold::OptimaReport,
}

fn manifold(a: ManifoldArgs, out: &mut dyn Write) -> CliResult<()> {
    let which: Example = a.example.as_deref().ok_or_else(|| missing("example"))?.parse()?;
    let w = OutsideOption::new(a.w.unwrap_or(1.0))?;
    let resolution = a.resolution.unwrap_or(DEFAULT_RESOLUTION);
    let m = example_manifold_with_resolution(
        which,
        a.q0.unwrap_or(0.5),
        a.v0.unwrap_or(3.0),
        a.alpha.unwrap_or(1.0),
        a.epsilon.unwrap_or(0.1),
        resolution,
    )?;
    let optima = find_optima(&m, w)?;
    if let Some(path) = &a.out {
        if path.extension().is_some_and(|e| e == "json") {
            let doc = ManifoldOutput {
                example: which,
                w: w.w(),
                resolution,
                optima: optima.clone(),
            };
            write_atomic(path, &json_bytes(&doc))?;
        } else {
            write_atomic(path, &csv_bytes(&sweep(&m, w), None, m.label())?)?;
        }
    }
    say(
        out,
        format_args!(
            "z_s={} z_t={} e_s_at_s={} e_t_at_t={} classification={}",
            optima.coord_s.scalar(optima.index_s),
            optima.coord_t.scalar(optima.index_t),
            optima.s_at_s,
            optima.t_at_t,
            optima.classification
        ),
    )
}

#[derive(Serialize)]
struct GammaOutput {
    #[serde(flatten)]
    closed: GammaRow,
    simulation: Option<crate::gamma::GammaSummary>,
}

fn gamma(a: GammaArgs, out: &mut dyn Write) -> CliResult<()> {
    let pt = GammaPoint::new(
        a.p.ok_or_else(|| missing("p"))?,
        a.gamma.ok_or_else(|| missing("gamma"))?,
        a.v.ok_or_else(|| missing("v"))?,
        a.w.ok_or_else(|| missing("w"))?,
    )?;
    let closed = GammaRow::from(&pt);
    let simulation = match a.replications {
        Some(n) if n > 0 => Some(simulate_gamma_batch(&pt, n, a.seed.unwrap_or(0))?),
        _ => None,
    };
    if let Some(path) = &a.out {
        write_atomic(path, &json_bytes(&GammaOutput { closed, simulation }))?;
    }
    say(out, format_args!("t_star={} e_t={} e_s={}", closed.t_star, closed.e_t, closed.e_s))?;
    if let Some(s) = simulation {
        say(out, format_args!("simulated mean_t={} se_t={} mean_s={} se_s={}", s.mean_t, s.se_t, s.mean_s, s.se_s))?;
    }
    Ok(())
}

fn survey(a: SurveyArgs, out: &mut dyn Write) -> CliResult<()> {
    let pt = a.point.point()?;
    let t_max = a.t_max.unwrap_or(30);
    let reps = a.replications.unwrap_or(0);
    let seed = a.seed.unwrap_or(0);
    let regime = classify_regime(&pt)?;
    let bins = if reps > 0 {
        let cfg = SimConfig::new(pt, reps, seed)?.force_participation(true);
        empirical_conditional(&cfg)
    } else {
        Vec::new()
    };
    let rows = survey_table(&pt, t_max, &bins)?;
    if let Some(path) = &a.out {
        write_atomic(path, &csv_bytes(&rows, (reps > 0).then_some(seed), "survey")?)?;
    }
    let ts = regime.t_star.map_or("none".to_string(), |t| t.to_string());
    say(
        out,
        format_args!(
            "monotone={} t_star={} regretful_use={}",
            regime.monotone,
            ts,
            regretful_use(&pt)
        ),
    )
}

fn population(a: PopulationArgs, out: &mut dyn Write) -> CliResult<()> {
    let params = ContentParams::new(
        a.p.ok_or_else(|| missing("p"))?,
        a.q.ok_or_else(|| missing("q"))?,
        a.v.ok_or_else(|| missing("v"))?,
    )?;
    let pop = Population::uniform(a.a.unwrap_or(0.5), a.b.unwrap_or(1.0))?;
    let m = population_metrics(&params, &pop)?;
    if let Some(path) = &a.out {
        write_atomic(path, &json_bytes(&m))?;
    }
    say(
        out,
        format_args!(
            "w_star={} pr_use={} e_t_given_use={} e_t_total={} e_s_total={}",
            crate::population::participation_threshold(&params),
            m.pr_use,
            m.e_t_given_use,
            m.e_t_total,
            m.e_s_total
        ),
    )
}

struct TreePreset {
    p: f64,
    q: f64,
    w: f64,
    values: ValueDist,
}

fn tree_preset(name: Option<&str>) -> CliResult<Option<TreePreset>> {
    let dist = |atoms: [(f64, f64); 2]| ValueDist::finite(atoms).expect("preset distribution");
    match name {
        None => Ok(None),
        Some("appendix-d") => Ok(Some(TreePreset {
            p: 0.01,
            q: 0.0,
            w: 1.0,
            values: dist([(1.011, 0.5), (1.05, 0.5)]),
        })),
        Some("fig6") => Ok(Some(TreePreset {
            p: 0.5,
            q: 0.5,
            w: 1.0,
            values: dist([(1.0, 0.5), (4.0, 0.5)]),
        })),
        Some(other) => Err(CliError::Usage(format!(
            "unknown tree preset `{other}` (expected appendix-d or fig6)"
        ))),
    }
}

fn tree(a: TreeArgs, out: &mut dyn Write) -> CliResult<()> {
    let preset = tree_preset(a.preset.as_deref())?;
    let p = a.p.or(preset.as_ref().map(|x| x.p)).ok_or_else(|| missing("p"))?;
    let q = a.q.or(preset.as_ref().map(|x| x.q)).ok_or_else(|| missing("q"))?;
    let w = a.w.or(preset.as_ref().map(|x| x.w)).ok_or_else(|| missing("w"))?;
    let values = match (&a.values, preset) {
        (Some(json), _) => parse_dist(json)?,
        (None, Some(pr)) => pr.values,
        (None, None) => return Err(missing("values")),
    };
    let d_max = a.dmax.unwrap_or(DEFAULT_D_MAX);
    // validates every parameter before the sweep
    TreeConfig::iid(1, p, q, values.clone(), w)?;
    let report = optimize_branching(|d| TreeConfig::iid(d, p, q, values.clone(), w), d_max)?;
    if let Some(path) = &a.out {
        write_atomic(path, &csv_bytes(&report.table, None, a.preset.as_deref().unwrap_or("custom"))?)?;
    }
    say(out, format_args!("d_s={} d_t={}", report.d_s, report.d_t))
}

fn figure(a: FigureArgs, out: &mut dyn Write) -> CliResult<()> {
    if a.list {
        for p in figures::PRESETS {
            say(out, format_args!("{}\t{}", p.id, p.description))?;
        }
        return Ok(());
    }
    let id = a.id.as_deref().ok_or_else(|| missing("id"))?;
    let preset = figures::PRESETS
        .iter()
        .find(|p| p.id == id)
        .ok_or_else(|| CliError::Usage(format!("unknown figure id `{id}`; try `figure --list`")))?;
    let dir = a.out.ok_or_else(|| missing("out"))?;
    let seed = a.seed.unwrap_or(0);
    let files = (preset.build)(seed)?;
    for (name, bytes) in &files {
        write_atomic(&dir.join(name), bytes)?;
    }
    let names: Vec<&str> = files.iter().map(|f| f.0.as_str()).collect();
    say(out, format_args!("{id}: wrote {}", names.join(", ")))
}

/// Figure presets. Every figure is a closed-form sweep, so the seed is only
/// recorded in the metadata.
pub mod figures {
    use super::*;
    use crate::population::PopulationRow;
    use crate::tree::BranchingReport;

    pub struct FigurePreset {
        pub id: &'static str,
        pub description: &'static str,
        /// Returns `(file name, contents)` pairs.
        pub build: fn(u64) -> CliResult<Vec<(String, Vec<u8>)>>,
    }

    pub const PRESETS: &[FigurePreset] = &[
        FigurePreset {
            id: "fig1-left",
            description: "moreishness curve (z, 0.5, 3), W = 1",
            build: fig1_left,
        },
        FigurePreset {
            id: "fig1-right",
            description: "moreishness with value (z, 0.5, 3 + z), W = 1",
            build: fig1_right,
        },
        FigurePreset {
            id: "fig2",
            description: "(p, q) grid with v = 3, W = 1",
            build: fig2,
        },
        FigurePreset {
            id: "fig3",
            description: "(p, q) grid with v = 3 + p, W = 1",
            build: fig3,
        },
        FigurePreset {
            id: "fig4",
            description: "(p, 0.5, 1 + 0.7p) with W ~ U[0.5, 1]",
            build: fig4,
        },
        FigurePreset {
            id: "fig5",
            description: "satiation gamma = 0.5, v = 3 (left) and v = 3 + p (right), W = 1",
            build: fig5,
        },
        FigurePreset {
            id: "fig6",
            description: "optimal tree width over (p, q), values 1 or 4 with equal odds, W = 1",
            build: fig6,
        },
    ];

    fn unit() -> OutsideOption {
        OutsideOption::new(1.0).expect("W = 1 is valid")
    }

    fn fig1_left(seed: u64) -> CliResult<Vec<(String, Vec<u8>)>> {
        let m = example_manifold_with_resolution(Example::Moreishness, 0.5, 3.0, 0.0, 0.0, DEFAULT_RESOLUTION)?;
        Ok(vec![("fig1-left.csv".into(), csv_bytes(&sweep(&m, unit()), Some(seed), "fig1-left")?)])
    }

    fn fig1_right(seed: u64) -> CliResult<Vec<(String, Vec<u8>)>> {
        let m = example_manifold_with_resolution(Example::Both, 0.5, 3.0, 1.0, 0.0, DEFAULT_RESOLUTION)?;
        Ok(vec![("fig1-right.csv".into(), csv_bytes(&sweep(&m, unit()), Some(seed), "fig1-right")?)])
    }

    #[derive(Serialize)]
    struct GridRow {
        p: f64,
        q: f64,
        v_bar: f64,
        e_s: f64,
        e_t: f64,
        participates: bool,
    }

    fn pq_grid(seed: u64, id: &str, value: fn(f64) -> f64) -> CliResult<Vec<(String, Vec<u8>)>> {
        let mut rows = Vec::with_capacity(100 * 100);
        for i in 0..100 {
            let p = i as f64 / 100.0;
            for j in 0..100 {
                let q = j as f64 / 100.0;
                let pt = ModelPoint::from_values(p, q, value(p), 1.0)?;
                rows.push(GridRow {
                    p,
                    q,
                    v_bar: value(p),
                    e_s: pt.expected_utility(),
                    e_t: pt.expected_engagement(),
                    participates: pt.participates(),
                });
            }
        }
        Ok(vec![(format!("{id}.csv"), csv_bytes(&rows, Some(seed), id)?)])
    }

    fn fig2(seed: u64) -> CliResult<Vec<(String, Vec<u8>)>> {
        pq_grid(seed, "fig2", |_| 3.0)
    }

    fn fig3(seed: u64) -> CliResult<Vec<(String, Vec<u8>)>> {
        pq_grid(seed, "fig3", |p| 3.0 + p)
    }

    /// Rows of the population figure.
    pub fn fig4_rows() -> CliResult<Vec<PopulationRow>> {
        let pop = Population::uniform(0.5, 1.0)?;
        let pts = (0..100)
            .map(|i| {
                let p = i as f64 / 100.0;
                ContentParams::new(p, 0.5, 1.7 * p + (1.0 - p))
            })
            .collect::<crate::Result<Vec<_>>>()?;
        Ok(population_sweep(&pts, &pop)?)
    }

    fn fig4(seed: u64) -> CliResult<Vec<(String, Vec<u8>)>> {
        Ok(vec![("fig4.csv".into(), csv_bytes(&fig4_rows()?, Some(seed), "fig4")?)])
    }

    fn fig5(seed: u64) -> CliResult<Vec<(String, Vec<u8>)>> {
        let side = |value: fn(f64) -> f64| {
            (0..1000)
                .map(|i| {
                    let p = i as f64 / 1000.0;
                    GammaPoint::new(p, 0.5, value(p), 1.0)
                })
                .collect::<crate::Result<Vec<_>>>()
        };
        let left = gamma_sweep(&side(|_| 3.0)?);
        let right = gamma_sweep(&side(|p| 3.0 + p)?);
        Ok(vec![
            ("fig5-left.csv".into(), csv_bytes(&left, Some(seed), "fig5-left")?),
            ("fig5-right.csv".into(), csv_bytes(&right, Some(seed), "fig5-right")?),
        ])
    }

    #[derive(Debug, Clone, Copy, PartialEq, Serialize)]
    pub struct WidthRow {
        pub p: f64,
        pub q: f64,
        pub d_s: usize,
        pub d_t: usize,
    }

    /// Rows of the tree-width figure: `p` in 0.05..=0.95, `q` in 0..=0.95.
    pub fn fig6_rows() -> CliResult<Vec<WidthRow>> {
        let values = ValueDist::finite([(1.0, 0.5), (4.0, 0.5)])?;
        let mut rows = Vec::new();
        for i in 1..=19 {
            let p = i as f64 / 20.0;
            for j in 0..=19 {
                let q = j as f64 / 20.0;
                let BranchingReport { d_s, d_t, .. } =
                    optimize_branching(|d| TreeConfig::iid(d, p, q, values.clone(), 1.0), DEFAULT_D_MAX)?;
                rows.push(WidthRow { p, q, d_s, d_t });
            }
        }
        Ok(rows)
    }

    fn fig6(seed: u64) -> CliResult<Vec<(String, Vec<u8>)>> {
        Ok(vec![("fig6.csv".into(), csv_bytes(&fig6_rows()?, Some(seed), "fig6")?)])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["engagement-lab"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn eval_prints_values() {
        let (code, out, _) = call(&["eval", "--p", "0.5", "--q", "0.5", "--v", "3", "--w", "1"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "e_s=3 e_t=3 participates=true");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(call(&["eval", "--p", "1.5", "--q", "0.5", "--v", "3", "--w", "1"]).0, 2);
        assert_eq!(call(&["eval", "--p", "0.5"]).0, 2);
        assert_eq!(call(&["bogus"]).0, 2);
        assert_eq!(call(&["figure", "--id", "nope", "--out", "x"]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn tree_preset_reports_widths() {
        let (code, out, _) = call(&["tree", "--preset", "appendix-d", "--dmax", "5"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), "d_s=2 d_t=1");
    }

    #[test]
    fn csv_has_metadata() {
        let rows = vec![GammaRow::from(&GammaPoint::new(0.0, 0.5, 4.0, 1.0).unwrap())];
        let text = String::from_utf8(csv_bytes(&rows, Some(7), "x").unwrap()).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "# seed=7");
        assert_eq!(lines[1], "# preset=x");
        assert!(lines[2].starts_with("# version="));
        assert_eq!(lines[3], "p,gamma,v_bar,w,t_star,e_t,e_s");
        assert_eq!(lines.len(), 5);
    }

    #[test]
    fn config_file_merges_under_flags() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.json");
        std::fs::write(&cfg, r#"{"p":0.5,"q":0.5,"v":3,"w":1}"#).unwrap();
        let c = cfg.to_str().unwrap();
        let (code, out, _) = call(&["eval", "--config", c]);
        assert_eq!((code, out.trim()), (0, "e_s=3 e_t=3 participates=true"));
        let (_, out, _) = call(&["eval", "--config", c, "--p", "0"]);
        assert_eq!(out.trim(), "e_s=4 e_t=2 participates=true");
        std::fs::write(&cfg, r#"{"p":0.5,"bogus":1}"#).unwrap();
        assert_eq!(call(&["eval", "--config", c]).0, 2);
    }

    #[test]
    fn invalid_input_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("o.json");
        let p = path.to_str().unwrap();
        assert_eq!(call(&["eval", "--p", "0.5", "--q", "2", "--v", "3", "--w", "1", "--out", p]).0, 2);
        assert!(!path.exists());
    }
}
