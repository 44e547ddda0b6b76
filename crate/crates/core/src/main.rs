use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use clap::{Parser, Subcommand, ValueEnum};

use iwasawa_core::cli::{
    cmd_disassemble, cmd_feq, cmd_functor, cmd_growth, cmd_invariants, cmd_verify, CliError, ExitCode, Functor,
    Overrides, Report, Suite, DEFAULT_SEED,
};
use iwasawa_core::DisassemblyMode;

#[derive(Parser)]
#[command(name = "iwasawa", version, about = "Elementary Λ-modules: invariants, functors, growth laws")]
struct Cli {
    /// Override the prime from the module file
    #[arg(long, global = true)]
    p: Option<u64>,
    /// Override the coefficient precision exponent
    #[arg(long, global = true)]
    prec: Option<u32>,
    /// Emit the structured JSON report instead of the human table
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank, λ, μ, canonical factors and characteristic ideal
    Invariants { file: PathBuf },
    /// Closed-form image under F or G
    Functor {
        file: PathBuf,
        #[arg(long, value_enum)]
        which: WhichFunctor,
    },
    /// Split a Selmer module into its Sha and Mordell-Weil parts
    Disassemble {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "strict")]
        mode: Mode,
    },
    /// Per-level e_n table and the fitted growth law
    Growth {
        file: PathBuf,
        #[arg(long)]
        n_max: Option<u32>,
    },
    /// Seeded randomized property suites
    Verify {
        #[arg(long, value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
    },
    /// Functional equation E(A) = E(A^t)^ι and Sha growth comparison
    Feq { file_a: PathBuf, file_at: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichFunctor {
    #[value(alias = "F")]
    F,
    #[value(alias = "G")]
    G,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Extended,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteArg {
    Functors,
    Growth,
    Roundtrip,
    All,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError { code: ExitCode::Validation, message: format!("cannot read {}: {e}", path.display()) })
}

fn run(cli: &Cli) -> Result<Report, CliError> {
    let ov = Overrides { p: cli.p, prec: cli.prec };
    match &cli.command {
        Command::Invariants { file } => cmd_invariants(&read(file)?, ov),
        Command::Functor { file, which } => {
            let which = match which {
                WhichFunctor::F => Functor::F,
                WhichFunctor::G => Functor::G,
            };
            cmd_functor(&read(file)?, which, ov)
        }
        Command::Disassemble { file, mode } => {
            let mode = match mode {
                Mode::Strict => DisassemblyMode::Strict,
                Mode::Extended => DisassemblyMode::Extended,
            };
            cmd_disassemble(&read(file)?, mode, ov)
        }
        Command::Growth { file, n_max } => cmd_growth(&read(file)?, *n_max, ov),
        Command::Verify { suite, seed, samples } => {
            let suite = match suite {
                SuiteArg::Functors => Suite::Functors,
                SuiteArg::Growth => Suite::Growth,
                SuiteArg::Roundtrip => Suite::Roundtrip,
                SuiteArg::All => Suite::All,
            };
            cmd_verify(suite, *seed, *samples, ov)
        }
        Command::Feq { file_a, file_at } => cmd_feq(&read(file_a)?, &read(file_at)?, ov),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(report) => {
            print!("{}", report.render(cli.json));
            process::exit(report.exit as i32);
        }
        Err(err) => {
            eprintln!("error: {err}");
            process::exit(err.code as i32);
        }
    }
}
