//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or validation, 2 I/O or format,
//! 3 statistical or empty-domain degeneracy.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cohort::{read_cohort, write_cohort};
use crate::config::Config;
use crate::contrast::ContrastTheta;
use crate::error::Error;
use crate::evaluate::{evaluate_ooc, export_report_csv, export_summary_csv};
use crate::metrics::Label;
use crate::search::{export_records_csv, grid_search, read_heatmap_csv};
use crate::segmenter::segment_external;
use crate::stats::wilcoxon_signed_rank;
use crate::volume::{read_volume_file, write_volume_file, Volume};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "ooclab",
    version,
    about = "Optimal operating contrast search and harmonization"
)]
struct Cli {
    /// Configuration file (`key = value` lines).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Override one configuration key; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Worker threads (0 = one per core).
    #[arg(long, global = true, value_name = "N")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthetic cohorts.
    #[command(subcommand)]
    Cohort(CohortCommand),
    /// Score every plausible grid contrast on the tuning cohort and pick the OOC.
    GridSearch(DirArgs),
    /// Heatmap conversions.
    #[command(subcommand)]
    Heatmap(HeatmapCommand),
    /// Paired original vs OOC-harmonized evaluation on the test cohort.
    Evaluate(EvaluateArgs),
    /// Statistical tests.
    #[command(subcommand)]
    Stats(StatsCommand),
    /// Segment a single intensity volume.
    Segment(SegmentArgs),
}

#[derive(Debug, Subcommand)]
enum CohortCommand {
    /// Write the tuning and test cohorts.
    Generate {
        #[arg(long, value_name = "DIR")]
        cohort_dir: Option<PathBuf>,
        #[arg(long, value_name = "N")]
        tuning_subjects: Option<usize>,
        #[arg(long, value_name = "N")]
        test_subjects: Option<usize>,
    },
}

#[derive(Debug, Args)]
struct DirArgs {
    #[arg(long, value_name = "DIR")]
    cohort_dir: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum HeatmapCommand {
    /// Render a heatmap CSV as a PGM image.
    Render {
        /// Defaults to `<out_dir>/heatmap.csv`.
        #[arg(long, value_name = "CSV")]
        input: Option<PathBuf>,
        /// Defaults to `<out_dir>/heatmap.pgm`.
        #[arg(long, value_name = "PGM")]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    dirs: DirArgs,
    /// Target contrast; defaults to the one in `<out_dir>/ooc.txt`.
    #[arg(long, num_args = 2, value_names = ["THETA1", "THETA2"], allow_negative_numbers = true)]
    ooc: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
enum StatsCommand {
    /// Paired signed-rank test on a two-column CSV with a header row.
    Wilcoxon { csv: PathBuf },
}

#[derive(Debug, Args)]
struct SegmentArgs {
    /// float32 NRRD.
    #[arg(long, value_name = "NRRD")]
    input: PathBuf,
    /// uint8 NRRD with codes 0..4.
    #[arg(long, value_name = "NRRD")]
    output: PathBuf,
    /// Shell command with `{in}` and `{out}` placeholders, run instead of the built-in model.
    #[arg(long, value_name = "TEMPLATE")]
    external: Option<String>,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e.root() {
        Error::Io { .. }
        | Error::Format(_)
        | Error::ShapeMismatch { .. }
        | Error::LabelRange { .. }
        | Error::ExternalFailure(_) => EXIT_IO,
        Error::InvalidParams(_)
        | Error::DegeneratePhantom(_)
        | Error::ImplausibleTrainingContrast(..)
        | Error::ImplausibleContrast(..)
        | Error::InvalidGrid(_) => EXIT_USAGE,
        Error::InsufficientForeground { .. }
        | Error::DegenerateClusters
        | Error::NonMonotoneMap
        | Error::EmptyInput
        | Error::AllUndefined
        | Error::DegenerateSample
        | Error::InsufficientData
        | Error::NoPlausibleCells => EXIT_DEGENERATE,
        Error::Context { .. } => unreachable!("root() strips context"),
    }
}

type CmdResult = std::result::Result<(), Failure>;

/// Runs the CLI on `args` (including the program name) and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn load_config(cli: &Cli) -> std::result::Result<Config, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    for kv in &cli.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got '{kv}'")))?;
        cfg.set(k.trim(), v.trim())
            .map_err(|e| usage(e.to_string()))?;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    Ok(cfg)
}

fn execute(cli: Cli) -> CmdResult {
    let mut cfg = load_config(&cli)?;
    // Command flags override the file and --set.
    match &cli.command {
        Command::Cohort(CohortCommand::Generate {
            cohort_dir,
            tuning_subjects,
            test_subjects,
        }) => {
            if let Some(d) = cohort_dir {
                cfg.cohort_dir = d.clone();
            }
            if let Some(n) = tuning_subjects {
                cfg.tuning_subjects = *n;
            }
            if let Some(n) = test_subjects {
                cfg.test_subjects = *n;
            }
        }
        Command::GridSearch(dirs) | Command::Evaluate(EvaluateArgs { dirs, .. }) => {
            if let Some(d) = &dirs.cohort_dir {
                cfg.cohort_dir = d.clone();
            }
            if let Some(d) = &dirs.out_dir {
                cfg.out_dir = d.clone();
            }
        }
        _ => {}
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| usage(format!("cannot start {} workers: {e}", cfg.jobs)))?;
    pool.install(|| match cli.command {
        Command::Cohort(CohortCommand::Generate { .. }) => cmd_cohort_generate(&cfg),
        Command::GridSearch(_) => cmd_grid_search(&cfg),
        Command::Heatmap(HeatmapCommand::Render { input, output }) => {
            cmd_heatmap_render(&cfg, input, output)
        }
        Command::Evaluate(args) => cmd_evaluate(&cfg, args.ooc),
        Command::Stats(StatsCommand::Wilcoxon { csv }) => cmd_stats_wilcoxon(&csv),
        Command::Segment(args) => cmd_segment(&cfg, &args),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult {
    fs::write(path, bytes).map_err(|e| Error::io(path, e).into())
}

fn create_dir(path: &Path) -> CmdResult {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e).into())
}

fn cmd_cohort_generate(cfg: &Config) -> CmdResult {
    for (name, n) in [("tuning", cfg.tuning_subjects), ("test", cfg.test_subjects)] {
        if n == 0 {
            return Err(usage(format!("{name} cohort needs at least one subject")));
        }
    }
    for (name, first, n) in [
        ("tuning", cfg.tuning_first_seed, cfg.tuning_subjects),
        ("test", cfg.test_first_seed, cfg.test_subjects),
    ] {
        let dir = cfg.cohort_dir.join(name);
        write_cohort(&dir, first, n, &cfg.phantom)?;
        println!(
            "{name}: {n} subjects (seeds {first}..{}) in {}",
            first + n as u64 - 1,
            dir.display()
        );
    }
    Ok(())
}

fn cmd_grid_search(cfg: &Config) -> CmdResult {
    let cohort = read_cohort(&cfg.cohort_dir.join("tuning"))?;
    let model = cfg.model()?;
    let grid = cfg.grid()?;
    let result = grid_search(&cohort, &model, &grid, &cfg.render_params(0), cfg.grid_seed)?;

    create_dir(&cfg.out_dir)?;
    let table = result.table();
    write_file(&cfg.out_dir.join("heatmap.csv"), &table.to_csv())?;
    write_file(&cfg.out_dir.join("heatmap.pgm"), &table.to_pgm()?)?;
    write_file(
        &cfg.out_dir.join("heatmap_records.csv"),
        &export_records_csv(&result),
    )?;
    write_file(
        &cfg.out_dir.join("ooc.txt"),
        format!("{:.6} {:.6}\n", result.ooc.theta1, result.ooc.theta2).as_bytes(),
    )?;

    let plausible = grid.plausible_count();
    let (i, j) = result.ooc_cell;
    println!(
        "cells={} rejected={} scored={}",
        grid.cells.len(),
        grid.cells.len() - plausible,
        plausible
    );
    println!(
        "ooc={:.6} {:.6} cell=({i},{j}) mean_dice={:.6}",
        result.ooc.theta1,
        result.ooc.theta2,
        result.score(i, j).mean_dice.unwrap_or(f64::NAN)
    );
    Ok(())
}

fn cmd_heatmap_render(cfg: &Config, input: Option<PathBuf>, output: Option<PathBuf>) -> CmdResult {
    let input = input.unwrap_or_else(|| cfg.out_dir.join("heatmap.csv"));
    let output = output.unwrap_or_else(|| cfg.out_dir.join("heatmap.pgm"));
    let bytes = fs::read(&input).map_err(|e| Error::io(&input, e))?;
    let table = read_heatmap_csv(&bytes).map_err(|e| e.context(input.display().to_string()))?;
    write_file(&output, &table.to_pgm()?)
}

fn read_ooc(path: &Path) -> std::result::Result<(f64, f64), Failure> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let nums: Vec<f64> = text
        .split_whitespace()
        .map(|s| s.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Format(format!("{}: not two numbers", path.display())))?;
    match nums[..] {
        [a, b] => Ok((a, b)),
        _ => Err(Error::Format(format!("{}: expected two numbers", path.display())).into()),
    }
}

fn cmd_evaluate(cfg: &Config, ooc: Option<Vec<f64>>) -> CmdResult {
    let (t1, t2) = match ooc.as_deref() {
        Some([a, b]) => (*a, *b),
        Some(_) => return Err(usage("--ooc takes two values")),
        None => read_ooc(&cfg.out_dir.join("ooc.txt"))?,
    };
    let ooc = ContrastTheta::new(t1, t2).map_err(|e| usage(e.to_string()))?;
    if !ooc.is_t1w_plausible() {
        return Err(usage(Error::ImplausibleContrast(t1, t2).to_string()));
    }
    let cohort = read_cohort(&cfg.cohort_dir.join("test"))?;
    let model = cfg.model()?;
    let eval = evaluate_ooc(&cohort, &model, ooc, &cfg.render_params(0), cfg.eval_seed)?;

    create_dir(&cfg.out_dir)?;
    write_file(&cfg.out_dir.join("report.csv"), &export_report_csv(&eval))?;
    write_file(&cfg.out_dir.join("summary.csv"), &export_summary_csv(&eval))?;

    println!("ooc={ooc} subjects={}", eval.subjects.len());
    for label in Label::ALL {
        let s = eval.summary(label);
        let test = match &s.test {
            Ok(t) => format!("p={:.6} ({})", t.p_two_sided, t.method),
            Err(f) => format!("test {f}"),
        };
        let mean = |m: Option<f64>| m.map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"));
        println!(
            "{:<6} original {} adjusted {} {test}",
            label.name(),
            mean(s.mean_a),
            mean(s.mean_b)
        );
    }
    Ok(())
}

fn parse_pairs(path: &Path) -> std::result::Result<Vec<(f64, f64)>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    if lines.next().is_none() {
        return Err(Error::Format(format!("{}: missing header", path.display())).into());
    }
    let mut pairs = Vec::new();
    for (n, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let bad = || {
            Failure::from(Error::Format(format!(
                "{} line {}: '{line}'",
                path.display(),
                n + 1
            )))
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let [a, b] = fields[..] else {
            return Err(bad());
        };
        let (a, b) = (
            a.parse::<f64>().map_err(|_| bad())?,
            b.parse::<f64>().map_err(|_| bad())?,
        );
        if !a.is_finite() || !b.is_finite() {
            return Err(bad());
        }
        pairs.push((a, b));
    }
    Ok(pairs)
}

fn cmd_stats_wilcoxon(csv: &Path) -> CmdResult {
    let pairs = parse_pairs(csv)?;
    let r = wilcoxon_signed_rank(&pairs)?;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "n_input={}", r.n_input);
    let _ = writeln!(out, "n_effective={}", r.n_effective);
    let _ = writeln!(out, "w_plus={:.6}", r.w_plus);
    let _ = writeln!(out, "p_two_sided={:.6}", r.p_two_sided);
    let _ = writeln!(out, "method={}", r.method);
    Ok(())
}

fn cmd_segment(cfg: &Config, args: &SegmentArgs) -> CmdResult {
    let volume = read_volume_file(&args.input)?;
    let labels = match &args.external {
        Some(template) => segment_external(&volume, template)?,
        None => cfg.model()?.segment(&volume.into_intensity()?),
    };
    write_volume_file(&args.output, &Volume::Labels(labels))?;
    Ok(())
}
