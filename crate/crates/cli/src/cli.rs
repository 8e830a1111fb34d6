//! Command-line front end.
//!
//! Exit codes: 0 pass, 1 scenario failure (the report is still written),
//! 2 config or usage error, 3 I/O error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::checks::{self, Overrides};
use crate::config::{bundled, bundled_by_name, CheckKind, EngineChoice, LoadError, Scenario};
use crate::report::{self, Metric, RunReport};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hlde", version, about = "Scenario runner for increasing solutions of half-linear delay equations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate a scenario and write its trajectory.
    Solve(Common),
    /// Classify the solution of a scenario.
    Classify(Common),
    /// Run the scenario's full pipeline and write a run report.
    Verify(Common),
    /// Karamata integration suite.
    Karamata(Common),
    /// Reciprocal-equation and change-of-variables consistency.
    Transform(Common),
    /// Run every scenario of a directory (default: the bundled acceptance scenarios).
    Suite(Common),
    /// List the bundled scenarios.
    List,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Markdown,
    Jsonl,
}

impl Format {
    fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Markdown => "md",
            Format::Jsonl => "jsonl",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Scenario file, bundled scenario name, or (for `suite`) a directory of scenario files.
    #[arg(long, value_name = "PATH")]
    pub config: Option<String>,
    /// Directory for artifacts; stdout when absent.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Override the integration horizon.
    #[arg(long = "t-end", value_name = "X")]
    pub t_end: Option<f64>,
    /// Override the solver tolerance.
    #[arg(long, value_name = "X")]
    pub tol: Option<f64>,
    /// Override the engine: auto, sv, rv, gen1 or gen2.
    #[arg(long, value_name = "NAME", value_parser = parse_engine)]
    pub engine: Option<EngineChoice>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

fn parse_engine(s: &str) -> Result<EngineChoice, String> {
    EngineChoice::parse(s).ok_or_else(|| format!("unknown engine `{s}` (expected auto, sv, rv, gen1, gen2)"))
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides { t_end: self.t_end, tol: self.tol, engine: self.engine }
    }
}

/// Failure that ends a command with a specific exit code.
#[derive(Debug)]
struct Exit {
    code: i32,
    message: String,
}

impl Exit {
    fn config(m: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, message: m.into() }
    }

    fn io(m: impl Into<String>) -> Self {
        Self { code: EXIT_IO, message: m.into() }
    }
}

impl From<LoadError> for Exit {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Io(m) => Exit::io(m),
            LoadError::Config(m) => Exit::config(m),
        }
    }
}

/// Parse arguments, run, print diagnostics to stderr and return the exit code.
pub fn main_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let mut stdout = String::new();
    let code = match execute(&cli.command, &mut stdout) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    };
    print!("{stdout}");
    code
}

/// Run a parsed command; text meant for stdout is appended to `stdout`.
pub fn run_command(command: &Command, stdout: &mut String) -> i32 {
    match execute(command, stdout) {
        Ok(c) => c,
        Err(e) => {
            let _ = writeln!(stdout, "error: {}", e.message);
            e.code
        }
    }
}

fn execute(command: &Command, stdout: &mut String) -> Result<i32, Exit> {
    match command {
        Command::Solve(c) => solve(c, stdout),
        Command::Classify(c) => classify(c, stdout),
        Command::Verify(c) => {
            let sc = load_one(c, None)?;
            emit_run(c, &checks::run(&sc), stdout)
        }
        Command::Karamata(c) => {
            let mut sc = load_one(c, Some("c05_karamata"))?;
            sc.check = CheckKind::Karamata;
            emit_run(c, &checks::run(&sc), stdout)
        }
        Command::Transform(c) => {
            let sc = load_one(c, Some("c07_reciprocal"))?;
            emit_run(c, &checks::transform(&sc), stdout)
        }
        Command::Suite(c) => suite(c, stdout),
        Command::List => {
            for s in bundled() {
                let _ = writeln!(stdout, "{}\t{:?}\t{}", s.name, s.check, s.description);
            }
            Ok(EXIT_PASS)
        }
    }
}

/// Scenario from `--config` (file or bundled name) with overrides applied.
fn load_one(c: &Common, default: Option<&str>) -> Result<Scenario, Exit> {
    let sc = match (&c.config, default) {
        (Some(p), _) => load_scenario(p)?,
        (None, Some(name)) => bundled_by_name(name).ok_or_else(|| Exit::config(format!("no bundled scenario `{name}`")))?,
        (None, None) => return Err(Exit::config("--config PATH is required")),
    };
    Ok(c.overrides().apply(&sc))
}

pub fn load_scenario(p: &str) -> Result<Scenario, LoadError> {
    let path = Path::new(p);
    if path.is_file() {
        return Scenario::from_path(path);
    }
    if let Some(sc) = bundled_by_name(p) {
        return Ok(sc);
    }
    Err(LoadError::Config(format!("{p}: no such scenario file or bundled scenario")))
}

fn write_artifact(out: Option<&Path>, file: &str, text: &str, stdout: &mut String) -> Result<(), Exit> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| Exit::io(format!("{}: {e}", dir.display())))?;
            let path = dir.join(file);
            fs::write(&path, text).map_err(|e| Exit::io(format!("{}: {e}", path.display())))
        }
        None => {
            stdout.push_str(text);
            Ok(())
        }
    }
}

fn render(rep: &RunReport, f: Format) -> String {
    match f {
        Format::Markdown => report::markdown(rep),
        Format::Csv => report::metrics_csv(rep, true),
        Format::Jsonl => report::jsonl(rep),
    }
}

fn emit_run(c: &Common, rep: &RunReport, stdout: &mut String) -> Result<i32, Exit> {
    let f = c.format.unwrap_or(Format::Markdown);
    write_artifact(c.out.as_deref(), &format!("{}.{}", rep.scenario, f.ext()), &render(rep, f), stdout)?;
    if c.out.is_some() {
        let _ = writeln!(stdout, "{}", rep.headline());
    }
    eprintln!("{} finished in {:.2?}", rep.scenario, rep.timing);
    Ok(if rep.pass() { EXIT_PASS } else { EXIT_FAIL })
}

fn solve(c: &Common, stdout: &mut String) -> Result<i32, Exit> {
    let sc = load_one(c, None)?;
    let tr = match checks::solve_scenario(&sc) {
        Ok(t) => t,
        Err(e) => {
            let _ = writeln!(stdout, "solve failed: {e}");
            return Ok(EXIT_FAIL);
        }
    };
    let f = c.format.unwrap_or(Format::Csv);
    let text = match f {
        Format::Csv => report::trajectory_csv(&tr),
        Format::Jsonl => report::trajectory_jsonl(&tr),
        Format::Markdown => {
            let mut s = String::from("| t | y | y_prime | quasi |\n|---|---|---|---|\n");
            for i in 0..tr.ts.len() {
                let _ = writeln!(s, "| {} | {} | {} | {} |", report::data(tr.ts[i]), report::data(tr.ys[i]), report::data(tr.y_primes[i]), report::data(tr.quasis[i]));
            }
            s
        }
    };
    write_artifact(c.out.as_deref(), &format!("{}_trajectory.{}", sc.name, f.ext()), &text, stdout)?;
    if c.out.is_some() {
        let _ = writeln!(stdout, "{}: {} nodes, status {:?}", sc.name, tr.ts.len(), tr.status);
    }
    Ok(EXIT_PASS)
}

fn classify(c: &Common, stdout: &mut String) -> Result<i32, Exit> {
    let mut sc = load_one(c, None)?;
    // Scenarios may restrict classification to the accurate part of the run.
    if let (Some(t), None) = (sc.tol("classify_t_end"), c.t_end) {
        sc.t_end = t.min(sc.t_end);
    }
    let mut rep = RunReport::new(&sc.name, sc.check);
    match checks::classify_scenario(&sc) {
        Ok(cl) => {
            rep.observed = Some(cl.class);
            let rv = match (cl.rv, &cl.rv_error) {
                (Some((v, _)), _) => checks::verdict_text(v),
                (None, Some(e)) => format!("unavailable ({e})"),
                (None, None) => "unavailable".into(),
            };
            rep.note(format!("class: {}", cl.class.label));
            rep.note(format!("rv: {rv}"));
            rep.push(Metric::holds("classified", cl.class.label != hlde_core::dde::ClassLabel::Undetermined, format!("{} on [{}, {}]", cl.class.label, sc.equation.a, sc.t_end)));
            if let Some(want) = sc.expect.class.as_deref().and_then(hlde_core::dde::ClassLabel::parse) {
                rep.push(Metric::holds("expected_class", cl.class.label == want, format!("expected {want}")));
            }
        }
        Err(e) => rep.push(Metric::holds("classified", false, e.to_string())),
    }
    let f = c.format.unwrap_or(Format::Markdown);
    write_artifact(c.out.as_deref(), &format!("{}_class.{}", sc.name, f.ext()), &render(&rep, f), stdout)?;
    let _ = writeln!(stdout, "{}", rep.notes.join("; "));
    Ok(if rep.pass() { EXIT_PASS } else { EXIT_FAIL })
}

/// Scenario files of a directory, sorted by file name.
fn load_dir(dir: &Path) -> Result<Vec<Scenario>, Exit> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Exit::io(format!("{}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Exit::config(format!("{}: no scenario files", dir.display())));
    }
    files.iter().map(|p| Scenario::from_path(p).map_err(Exit::from)).collect()
}

/// Run scenarios concurrently; the result is sorted by scenario name.
pub fn run_all(scenarios: &[Scenario]) -> Vec<RunReport> {
    let mut reports: Vec<RunReport> = std::thread::scope(|s| {
        let handles: Vec<_> = scenarios.iter().map(|sc| s.spawn(move || checks::run(sc))).collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    });
    reports.sort_by(|a, b| a.scenario.cmp(&b.scenario));
    reports
}

fn suite(c: &Common, stdout: &mut String) -> Result<i32, Exit> {
    let scenarios = match &c.config {
        Some(p) if Path::new(p).is_dir() => load_dir(Path::new(p))?,
        Some(p) => vec![load_scenario(p)?],
        None => bundled(),
    };
    let mut names: Vec<&str> = scenarios.iter().map(|s| s.name.as_str()).collect();
    names.sort();
    if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
        return Err(Exit::config(format!("duplicate scenario name `{}`", w[0])));
    }
    let scenarios: Vec<Scenario> = scenarios.iter().map(|s| c.overrides().apply(s)).collect();
    let reports = run_all(&scenarios);
    let f = c.format.unwrap_or(Format::Markdown);
    if let Some(dir) = c.out.as_deref() {
        for r in &reports {
            write_artifact(Some(dir), &format!("{}.{}", r.scenario, f.ext()), &render(r, f), stdout)?;
        }
    }
    let summary = match f {
        Format::Markdown => report::suite_markdown(&reports),
        Format::Csv => report::suite_csv(&reports),
        Format::Jsonl => report::suite_jsonl(&reports),
    };
    write_artifact(c.out.as_deref(), &format!("suite.{}", f.ext()), &summary, stdout)?;
    for r in &reports {
        let _ = writeln!(stdout, "{}", r.headline());
        eprintln!("{} finished in {:.2?}", r.scenario, r.timing);
    }
    Ok(if reports.iter().all(|r| r.pass()) { EXIT_PASS } else { EXIT_FAIL })
}
