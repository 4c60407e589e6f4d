//! Command-line interface.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::appendix::{self, AppendixParams, Tolerances};
use crate::config::SimConfig;
use crate::engine::{snapshot, Simulation};
use crate::error::{GenomeError, SimError};
use crate::experiment::{run_experiment, ExperimentError, ExperimentSpec};
use crate::genome::{asm, text, Genome};
use crate::genomes;
use crate::metrics::{to_csv, MetricsRow};
use crate::scene::{SceneFrame, SCENE_HEADER};

/// Exit status of a command.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Failure = 1,
    Usage = 2,
    Blowup = 3,
}

impl From<Status> for ExitCode {
    fn from(s: Status) -> Self {
        ExitCode::from(s as u8)
    }
}

#[derive(Debug, Parser)]
#[command(name = "bookcell", version, about = "Artificial-life simulator of genome-driven neural cells")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Configuration file (TOML).
    #[arg(long, global = true, env = "BOOKCELL_CONFIG")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory or file, depending on the command.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Number of steps.
    #[arg(long, global = true)]
    pub steps: Option<u64>,
    /// Suppress progress output.
    #[arg(long, global = true)]
    pub quiet: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a simulation, writing metrics, snapshots and scene frames.
    Run {
        /// Continue from a snapshot instead of seeding a new population.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Check the energy model against its closed forms.
    ValidateAppendix {
        /// Use one tolerance for every check.
        #[arg(long)]
        tolerance: Option<f64>,
        /// Decay rate used by every check.
        #[arg(long)]
        u: Option<f64>,
    },
    /// Replace the first occurrence of a symbol string in a genome's book.
    EditGenome {
        genome: PathBuf,
        #[arg(long)]
        find: String,
        #[arg(long)]
        replace: String,
    },
    /// Run a replicate, compete or fixed-feed experiment.
    Experiment { spec: PathBuf },
    /// Write the scene of a snapshot.
    ExportScene { snapshot: PathBuf },
    /// Assemble a genome source (file or built-in name) to genome text.
    Asm { source: String },
    /// Trace the reads of a genome from its bookmarker.
    Disasm { genome: String },
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    execute(&cli, &mut out, &mut err).into()
}

/// Runs a parsed command, writing normal output to `out` and diagnostics to
/// `err`.
pub fn execute(cli: &Cli, out: &mut dyn std::io::Write, err: &mut dyn std::io::Write) -> Status {
    let g = &cli.global;
    let result = match &cli.command {
        Command::Run { resume } => cmd_run(g, resume.as_deref(), out),
        Command::ValidateAppendix { tolerance, u } => cmd_validate_appendix(g, *tolerance, *u, out),
        Command::EditGenome { genome, find, replace } => cmd_edit_genome(g, genome, find, replace, out),
        Command::Experiment { spec } => cmd_experiment(g, spec, out),
        Command::ExportScene { snapshot } => cmd_export_scene(g, snapshot, out),
        Command::Asm { source } => cmd_asm(g, source, out),
        Command::Disasm { genome } => cmd_disasm(g, genome, out),
    };
    match result {
        Ok(s) => s,
        Err((status, message)) => {
            let _ = writeln!(err, "error: {message}");
            status
        }
    }
}

type CmdResult = Result<Status, (Status, String)>;

fn io_err(path: &Path, e: std::io::Error) -> (Status, String) {
    (Status::Failure, format!("{}: {e}", path.display()))
}

fn sim_status(e: &SimError) -> Status {
    match e {
        SimError::NumericBlowup { .. } => Status::Blowup,
        SimError::Config(_) => Status::Usage,
        _ => Status::Failure,
    }
}

pub fn load_config(g: &Global) -> Result<SimConfig, (Status, String)> {
    let mut c = match &g.config {
        Some(p) => SimConfig::load(p).map_err(|e| (Status::Usage, e.0))?,
        None => SimConfig::default(),
    };
    if let Some(s) = g.seed {
        c.seed = s;
    }
    c.validate().map_err(|e| (Status::Usage, e.0))?;
    Ok(c)
}

fn write_file(path: &Path, data: &[u8]) -> Result<(), (Status, String)> {
    fs::write(path, data).map_err(|e| io_err(path, e))
}

pub const DEFAULT_STEPS: u64 = 1000;

fn cmd_run(g: &Global, resume: Option<&Path>, out: &mut dyn std::io::Write) -> CmdResult {
    let mut sim = match resume {
        Some(p) => {
            let mut sim = snapshot::load(p).map_err(|e| (Status::Failure, format!("{}: {e}", p.display())))?;
            if g.config.is_some() || g.seed.is_some() {
                return Err((Status::Usage, "--resume takes its configuration from the snapshot".into()));
            }
            sim.fields_mut().iter_mut().for_each(|f| {
                f.drain_rows();
            });
            sim
        }
        None => {
            let config = load_config(g)?;
            Simulation::with_population(config).map_err(|e| (sim_status(&e), e.to_string()))?
        }
    };
    let dir = g.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let steps = g.steps.unwrap_or(DEFAULT_STEPS);
    let cfg = sim.config().clone();
    let n_fields = sim.fields().len();
    let mut rows: Vec<Vec<MetricsRow>> = vec![Vec::new(); n_fields];
    let mut traces: Vec<String> = vec![String::new(); n_fields];
    if cfg.output.trace {
        sim.fields_mut().iter_mut().for_each(|f| f.enable_trace());
    }
    let mut scene = String::new();
    let scene_on = cfg.output.scene_interval > 0;
    if scene_on {
        scene.push_str(SCENE_HEADER);
        scene.push_str(&SceneFrame::from_simulation(&sim).to_text());
    }

    let start = sim.step_count();
    let end = start + steps;
    let every = |k: u64, step: u64| k > 0 && step % k == 0;
    let mut result = Ok(());
    while sim.step_count() < end {
        let now = sim.step_count();
        let mut next = end;
        for k in [cfg.output.snapshot_interval, cfg.output.scene_interval] {
            if k > 0 {
                next = next.min((now / k + 1) * k);
            }
        }
        result = sim.run(next - now);
        for (i, f) in sim.fields_mut().iter_mut().enumerate() {
            rows[i].extend(f.drain_rows());
            for t in f.drain_trace() {
                traces[i].push_str(&t.to_string());
                traces[i].push('\n');
            }
        }
        if result.is_err() {
            break;
        }
        let step = sim.step_count();
        if every(cfg.output.snapshot_interval, step) && step < end {
            let p = dir.join(format!("snapshot_{step:010}.bksnap"));
            write_file(&p, &snapshot::snapshot(&sim))?;
        }
        if scene_on && every(cfg.output.scene_interval, step) {
            scene.push_str(&SceneFrame::from_simulation(&sim).to_text());
        }
        if !g.quiet {
            let _ = writeln!(out, "step {step}: {} cells", sim.cell_count());
        }
    }
    for (i, r) in rows.iter().enumerate() {
        write_file(&dir.join(format!("metrics_field{i}.csv")), to_csv(r).as_bytes())?;
        if cfg.output.trace {
            write_file(&dir.join(format!("trace_field{i}.txt")), traces[i].as_bytes())?;
        }
    }
    if scene_on {
        write_file(&dir.join("scene.txt"), scene.as_bytes())?;
    }
    if let Err(e) = result {
        return Err((sim_status(&e), e.to_string()));
    }
    write_file(&dir.join("snapshot_final.bksnap"), &snapshot::snapshot(&sim))?;
    if !g.quiet {
        let _ = writeln!(out, "wrote {}", dir.display());
    }
    Ok(Status::Ok)
}

fn cmd_validate_appendix(g: &Global, tolerance: Option<f64>, u: Option<f64>, out: &mut dyn std::io::Write) -> CmdResult {
    let tol = tolerance.map_or_else(Tolerances::default, Tolerances::uniform);
    let mut params = AppendixParams::default();
    if let Some(u) = u {
        params = params.with_u(u);
    }
    if let Some(s) = g.seed {
        params.seed = s;
    }
    let report = appendix::validate(&params, &tol).map_err(|e| (Status::Usage, e.to_string()))?;
    let _ = write!(out, "{report}");
    if report.passed() {
        return Ok(Status::Ok);
    }
    let names: Vec<&str> = report.failures().iter().map(|c| c.name).collect();
    Err((Status::Failure, format!("checks outside tolerance: {}", names.join(", "))))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EditError {
    #[error("find and replace differ in length ({0} vs {1})")]
    Length(usize, usize),
    #[error("{0:?} does not occur in the book")]
    NotFound(String),
    #[error(transparent)]
    Genome(#[from] GenomeError),
}

/// Replaces the first occurrence of `find` in the book with `replace`.
pub fn edit_book(genome: &Genome, find: &str, replace: &str) -> Result<Genome, EditError> {
    if find.len() != replace.len() {
        return Err(EditError::Length(find.len(), replace.len()));
    }
    crate::alphabet::validate(find.as_bytes())?;
    crate::alphabet::validate(replace.as_bytes())?;
    let at = memchr::memmem::find(&genome.book, find.as_bytes()).ok_or_else(|| EditError::NotFound(find.into()))?;
    let mut g = genome.clone();
    g.book[at..at + replace.len()].copy_from_slice(replace.as_bytes());
    g.validate()?;
    Ok(g)
}

fn emit(g: &Global, text: &str, out: &mut dyn std::io::Write) -> Result<(), (Status, String)> {
    match &g.out {
        Some(p) => write_file(p, text.as_bytes()),
        None => out.write_all(text.as_bytes()).map_err(|e| (Status::Failure, e.to_string())),
    }
}

fn cmd_edit_genome(g: &Global, path: &Path, find: &str, replace: &str, out: &mut dyn std::io::Write) -> CmdResult {
    let src = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let genome = text::parse(&src).map_err(|e| (Status::Usage, format!("{}: {e}", path.display())))?;
    let edited = edit_book(&genome, find, replace).map_err(|e| {
        let status = match e {
            EditError::NotFound(_) => Status::Failure,
            _ => Status::Usage,
        };
        (status, e.to_string())
    })?;
    emit(g, &text::format(&edited), out)?;
    Ok(Status::Ok)
}

fn cmd_experiment(g: &Global, path: &Path, out: &mut dyn std::io::Write) -> CmdResult {
    let mut spec = ExperimentSpec::load(path).map_err(|e| match e {
        ExperimentError::Io(..) => (Status::Failure, e.to_string()),
        _ => (Status::Usage, e.to_string()),
    })?;
    if let Some(s) = g.seed {
        spec.config.seed = s;
    }
    if let Some(n) = g.steps {
        spec.steps = n;
    }
    if let Some(p) = &g.out {
        spec.output = Some(p.display().to_string());
    }
    let report = run_experiment(&spec).map_err(|e| match &e {
        ExperimentError::Spec(_) | ExperimentError::Load(_) => (Status::Usage, e.to_string()),
        ExperimentError::Sim(s) => (sim_status(s), e.to_string()),
        ExperimentError::Io(..) => (Status::Failure, e.to_string()),
    })?;
    if spec.output.is_none() && !g.quiet {
        let _ = write!(out, "{}", report.to_csv());
    }
    let _ = writeln!(out, "{}", report.summary());
    Ok(Status::Ok)
}

fn cmd_export_scene(g: &Global, path: &Path, out: &mut dyn std::io::Write) -> CmdResult {
    let sim = snapshot::load(path).map_err(|e| (Status::Failure, format!("{}: {e}", path.display())))?;
    let text = format!("{SCENE_HEADER}{}", SceneFrame::from_simulation(&sim).to_text());
    emit(g, &text, out)?;
    Ok(Status::Ok)
}

fn load_source(spec: &str) -> Result<String, (Status, String)> {
    if let Some(src) = genomes::builtin_source(spec) {
        return Ok(src.to_string());
    }
    fs::read_to_string(spec).map_err(|e| (Status::Failure, format!("{spec}: {e}")))
}

fn cmd_asm(g: &Global, source: &str, out: &mut dyn std::io::Write) -> CmdResult {
    let config = load_config(g)?;
    let src = load_source(source)?;
    let seed = genomes::from_asm(&src, &config).map_err(|e| (Status::Usage, format!("{source}: {e}")))?;
    emit(g, &text::format(&seed.genome), out)?;
    Ok(Status::Ok)
}

fn cmd_disasm(g: &Global, genome: &str, out: &mut dyn std::io::Write) -> CmdResult {
    let config = load_config(g)?;
    let seed = genomes::load(genome, &config).map_err(|e| (Status::Usage, e.to_string()))?;
    let steps = g.steps.unwrap_or(64) as usize;
    let listing = asm::disassemble(&seed.genome, &config.layout(), steps).map_err(|e| (Status::Usage, e.to_string()))?;
    emit(g, &listing, out)?;
    Ok(Status::Ok)
}
