use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lcslab::manifest::{bundled_fixtures, Manifest};
use lcslab::run::execute;
use lcslab::Error;

#[derive(Parser)]
#[command(name = "lcslab", version, about = "Exact calculator for locally conformally symplectic geometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Run every job in a manifest and emit a report.
    Run {
        manifest: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the bundled reference manifests.
    Fixtures,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { manifest, format, out } => run(&manifest, format, out.as_deref()),
        Command::Fixtures => {
            for (name, _) in bundled_fixtures() {
                println!("{name}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn run(path: &std::path::Path, format: Format, out: Option<&std::path::Path>) -> ExitCode {
    let manifest = match Manifest::from_path(path) {
        Ok(m) => m,
        Err(Error::Io(msg)) => {
            eprintln!("lcslab: i/o error: {msg}");
            return ExitCode::from(3);
        }
        Err(e) => {
            eprintln!("lcslab: invalid manifest: {e}");
            return ExitCode::from(2);
        }
    };
    let report = execute(&manifest);
    let rendered = match format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    };
    if let Some(out_path) = out {
        if let Err(e) = std::fs::write(out_path, &rendered) {
            eprintln!("lcslab: cannot write {}: {e}", out_path.display());
            return ExitCode::from(3);
        }
    } else {
        println!("{rendered}");
    }
    ExitCode::from(report.exit_code() as u8)
}
