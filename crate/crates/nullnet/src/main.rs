use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use nullnet::{cmd_figure, cmd_fit, cmd_sample, cmd_table, Error, FitOptions, Link, SolverChoice};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum LinkArg {
    Log,
    Cloglog,
    Logit,
}

impl LinkArg {
    fn to_link(self) -> Link {
        match self {
            LinkArg::Log => Link::log(),
            LinkArg::Cloglog => Link::cloglog(),
            LinkArg::Logit => Link::logit(),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SolverArg {
    Auto,
    Exact,
    Precond,
}

#[derive(Debug, Parser)]
#[command(
    name = "nullnet",
    version,
    about = "Degree-heterogeneous null models for undirected networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, clap::Args)]
struct FitFlags {
    /// Convergence tolerance on the degree-scaled score norm
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Maximum Newton iterations
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    /// Newton step solver
    #[arg(long, value_enum, default_value_t = SolverArg::Auto)]
    solver: SolverArg,
    /// Largest n for which the exact dense Hessian is used
    #[arg(long, default_value_t = 2000)]
    dense_cap: usize,
}

impl FitFlags {
    fn to_options(&self) -> FitOptions {
        FitOptions {
            tolerance: self.tol,
            max_iterations: self.max_iter,
            solver: match self.solver {
                SolverArg::Auto => SolverChoice::Auto,
                SolverArg::Exact => SolverChoice::Exact,
                SolverArg::Precond => SolverChoice::Preconditioned,
            },
            dense_cap: self.dense_cap,
            ..FitOptions::default()
        }
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one edge-list dataset and print a full report
    Fit {
        /// Link function
        #[arg(long, value_enum)]
        link: LinkArg,
        #[command(flatten)]
        flags: FitFlags,
        /// Edge-list file
        path: PathBuf,
    },
    /// Fit every dataset in a manifest under all three links
    Table {
        #[command(flatten)]
        flags: FitFlags,
        /// Write the CSV here (defaults to stdout, after the text table)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Manifest of `name = path` lines
        manifest: PathBuf,
    },
    /// Per-node scaled errors as CSV, for external plotting
    Figure {
        /// Link function; repeat for several links
        #[arg(long = "link", value_enum, required = true)]
        links: Vec<LinkArg>,
        #[command(flatten)]
        flags: FitFlags,
        /// Write the CSV here (defaults to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Edge-list file
        path: PathBuf,
    },
    /// Sample a synthetic graph from the model
    Sample {
        /// Number of nodes
        #[arg(long)]
        n: usize,
        /// Target expected mean degree
        #[arg(long)]
        mean_degree: f64,
        /// Link function
        #[arg(long, value_enum)]
        link: LinkArg,
        /// Seed for the pseudorandom stream
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Edge-list output path; parameters go to `<out>.alpha`
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    let stdout = std::io::stdout();
    match cli.command {
        Command::Fit { link, flags, path } => {
            let mut out = stdout.lock();
            cmd_fit(&path, &link.to_link(), &flags.to_options(), &mut out)
        }
        Command::Table { flags, out, manifest } => {
            let opts = flags.to_options();
            let mut text = stdout.lock();
            match out {
                Some(csv_path) => {
                    let mut csv = BufWriter::new(File::create(&csv_path)?);
                    cmd_table(&manifest, &opts, &mut text, &mut csv)?;
                    csv.flush()?;
                    Ok(())
                }
                None => {
                    let mut csv = Vec::new();
                    cmd_table(&manifest, &opts, &mut text, &mut csv)?;
                    writeln!(text)?;
                    text.write_all(&csv)?;
                    Ok(())
                }
            }
        }
        Command::Figure { links, flags, out, path } => {
            let links: Vec<Link> = links.into_iter().map(LinkArg::to_link).collect();
            let opts = flags.to_options();
            match out {
                Some(csv_path) => {
                    let mut csv = BufWriter::new(File::create(&csv_path)?);
                    cmd_figure(&path, &links, &opts, &mut csv)?;
                    csv.flush()?;
                    Ok(())
                }
                None => {
                    let mut csv = stdout.lock();
                    cmd_figure(&path, &links, &opts, &mut csv)
                }
            }
        }
        Command::Sample { n, mean_degree, link, seed, out } => {
            let g = cmd_sample(n, mean_degree, &link.to_link(), seed, &out)?;
            println!(
                "sampled n = {}, edges = {}, min degree = {}, max degree = {}",
                g.n(),
                g.edge_count(),
                g.min_degree(),
                g.max_degree()
            );
            println!("graph: {}", out.display());
            println!("alpha: {}.alpha", out.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ Error::MleDiverged { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
