use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stc_core::bench::{run_bench, BenchConfig, CSV_HEADER};
use stc_core::check::{check_fuzz, check_program, CheckOptions, TrialReport};
use stc_core::dot::export_dot;
use stc_core::exec::{ExecConfig, Mutation};
use stc_core::fuzz::FuzzConfig;
use stc_core::program::{parse_program, run_program, Mode, Program};
use stc_core::Error;

const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_VALIDATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "stc", version, about = "Deterministic stateful-dataflow engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a program and print {"output", "final_state"} as JSON.
    Run {
        file: PathBuf,
        #[arg(long, default_value = "seq")]
        mode: Mode,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        workers: Option<u64>,
    },
    /// Compare every executor against the reference on one program or a fuzz corpus.
    Check(CheckArgs),
    /// Time seq against pipeline on a chain of sleeping stages; prints CSV.
    Bench {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        stages: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        list_len: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        delay_ms: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        workers: Option<u64>,
    },
    /// Render the program's thread graph in Graphviz DOT.
    Dot {
        file: PathBuf,
        #[arg(long)]
        extended: bool,
    },
}

#[derive(Args)]
struct CheckArgs {
    #[arg(required_unless_present = "fuzz", conflicts_with = "fuzz")]
    file: Option<PathBuf>,
    #[arg(long)]
    fuzz: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[arg(long, default_value_t = FuzzConfig::default().max_edges, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    max_edges: usize,
    #[arg(long, default_value_t = FuzzConfig::default().max_word_len, value_parser = clap::builder::RangedU64ValueParser::<usize>::new().range(1..))]
    max_word_len: usize,
    #[arg(long, default_value_t = FuzzConfig::default().max_list_len)]
    max_list_len: usize,
    #[arg(long, default_value_t = FuzzConfig::default().int_bound, value_parser = clap::value_parser!(i64).range(0..))]
    int_bound: i64,
    /// Write the first diverging program here.
    #[arg(long)]
    dump: Option<PathBuf>,
    #[arg(long, hide = true)]
    mutation: Option<Mutation>,
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_validation() { EXIT_VALIDATION } else { EXIT_RUNTIME })
}

fn load(path: &Path) -> Result<Program, ExitCode> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        ExitCode::from(EXIT_VALIDATION)
    })?;
    parse_program(&text).map_err(|e| fail(&e))
}

fn exec_config(workers: Option<u64>) -> ExecConfig {
    match workers {
        Some(n) => ExecConfig::with_workers(n as usize),
        None => ExecConfig::default(),
    }
}

fn emit(text: &str) -> ExitCode {
    let mut out = io::stdout().lock();
    match out.write_all(text.as_bytes()).and_then(|_| out.flush()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_RUNTIME)
        }
    }
}

fn cmd_run(file: &Path, mode: Mode, workers: Option<u64>) -> ExitCode {
    let p = match load(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    match run_program(&p, mode, &exec_config(workers)) {
        Ok(r) => emit(&format!("{}\n", r.to_json())),
        Err(e) => fail(&e),
    }
}

fn dump(path: Option<&Path>, report: &TrialReport) {
    if let (Some(path), Some(program)) = (path, &report.program) {
        if let Err(e) = fs::write(path, format!("{program}\n")) {
            eprintln!("error: cannot write {}: {e}", path.display());
        }
    }
}

fn cmd_check(args: &CheckArgs) -> ExitCode {
    let opts = CheckOptions { mutation: args.mutation, ..CheckOptions::default() };
    let mut out = String::new();
    let ok = if let Some(file) = &args.file {
        let p = match load(file) {
            Ok(p) => p,
            Err(code) => return code,
        };
        let report = check_program(&p, &opts);
        out.push_str(&format!("program {}\n", report.digest));
        let last = report.modes.len().saturating_sub(1);
        for (i, mode) in report.modes.iter().enumerate() {
            match (&report.divergence, i == last) {
                (Some(d), true) => out.push_str(&format!("{mode:<22} DIVERGED {d}\n")),
                _ => out.push_str(&format!("{mode:<22} ok\n")),
            }
        }
        dump(args.dump.as_deref(), &report);
        report.equal
    } else {
        let cfg = FuzzConfig {
            seed: args.seed,
            trials: args.trials,
            max_edges: args.max_edges,
            max_word_len: args.max_word_len,
            max_list_len: args.max_list_len,
            int_bound: args.int_bound,
        };
        let report = check_fuzz(&cfg, &opts);
        for t in &report.trials {
            let trial = t.trial.unwrap_or(0);
            match &t.divergence {
                None => out.push_str(&format!("trial {trial} {} ok {} checks\n", t.digest, t.modes.len())),
                Some(d) => out.push_str(&format!("trial {trial} {} DIVERGED {d}\n", t.digest)),
            }
        }
        if let Some(first) = report.first_failure() {
            out.push_str(&format!("first divergence in trial {}; program:\n", first.trial.unwrap_or(0)));
            out.push_str(first.program.as_deref().unwrap_or(""));
            out.push('\n');
            dump(args.dump.as_deref(), first);
        }
        out.push_str(&format!("{}/{} equal\n", report.passed(), report.trials.len()));
        report.all_equal()
    };
    let code = emit(&out);
    if code != ExitCode::SUCCESS {
        return code;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        eprintln!("check failed");
        ExitCode::from(EXIT_CHECK_FAILED)
    }
}

fn cmd_bench(stages: u64, list_len: u64, delay_ms: u64, workers: Option<u64>) -> ExitCode {
    let cfg = BenchConfig {
        stages: stages as usize,
        list_len: list_len as usize,
        delay_ms,
        workers: workers.map_or_else(|| ExecConfig::default().workers.max(stages as usize), |w| w as usize),
    };
    match run_bench(&cfg) {
        Ok(rows) => {
            let mut out = format!("{CSV_HEADER}\n");
            for r in rows {
                out.push_str(&r.csv());
                out.push('\n');
            }
            emit(&out)
        }
        Err(e) => fail(&e),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { file, mode, workers } => cmd_run(file, *mode, *workers),
        Command::Check(args) => cmd_check(args),
        Command::Bench { stages, list_len, delay_ms, workers } => cmd_bench(*stages, *list_len, *delay_ms, *workers),
        Command::Dot { file, extended } => match load(file) {
            Ok(p) => emit(&export_dot(&p.graph, *extended)),
            Err(code) => code,
        },
    }
}
