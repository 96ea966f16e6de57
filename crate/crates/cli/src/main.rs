use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use tensor_rbf::harness::{
    expand_table_config, parse_kv, run_experiment, run_table, write_history_csv, write_report,
    write_table_csv, Domain, ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "tensor-rbf",
    version,
    about = "Tensor Krylov solvers for RBF collocation of Helmholtz problems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance and print a key = value report.
    Solve(SolveArgs),
    /// Run every configuration of a table config and write a CSV.
    Table {
        /// key = value file; comma-separated values are expanded as a product.
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a point file.
    Points {
        #[arg(long, default_value = "cube")]
        domain: String,
        #[arg(long, default_value = "uniform")]
        dist: String,
        #[arg(long, num_args = 1..=3, default_values_t = [10usize])]
        dims: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Every flag is optional so that unset flags fall back to the config file
/// and then to built-in defaults.
#[derive(Args)]
struct SolveArgs {
    /// key = value file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// cube | sphere | file:PATH
    #[arg(long)]
    domain: Option<String>,
    /// uniform | random | halton
    #[arg(long)]
    dist: Option<String>,
    /// M [N P]
    #[arg(long, num_args = 1..=3)]
    dims: Option<Vec<usize>>,
    /// ggmres | glsqr
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    wavenumber: Option<f64>,
    /// Boundary coefficient of u.
    #[arg(long = "bc-a")]
    bc_a: Option<f64>,
    /// Boundary coefficient of the normal derivative.
    #[arg(long = "bc-b")]
    bc_b: Option<f64>,
    /// "default" or "cx cy cz sigma[; ...]"
    #[arg(long)]
    exact: Option<String>,
    /// gcv | fixed:V | discrepancy:NU; V weights |y|^2 in the projected problem.
    #[arg(long)]
    mu: Option<String>,
    #[arg(long)]
    restart: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    maxit: Option<usize>,
    /// dense | hmatrix
    #[arg(long)]
    compress: Option<String>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long = "aca-tol")]
    aca_tol: Option<f64>,
    #[arg(long = "leaf-t")]
    leaf_t: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Report file; the report is always printed.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write iteration,relative_error pairs to this CSV.
    #[arg(long)]
    history: Option<PathBuf>,
}

impl SolveArgs {
    fn flag_pairs(&self) -> Vec<(&'static str, String)> {
        let mut v = Vec::new();
        let mut push = |k: &'static str, s: Option<String>| {
            if let Some(s) = s {
                v.push((k, s));
            }
        };
        push("domain", self.domain.clone());
        push("dist", self.dist.clone());
        push(
            "dims",
            self.dims.as_ref().map(|d| {
                d.iter()
                    .map(|x| x.to_string())
                    .collect::<Vec<_>>()
                    .join(" ")
            }),
        );
        push("solver", self.solver.clone());
        push("epsilon", self.epsilon.map(|x| x.to_string()));
        push("wavenumber", self.wavenumber.map(|x| x.to_string()));
        push("bc-a", self.bc_a.map(|x| x.to_string()));
        push("bc-b", self.bc_b.map(|x| x.to_string()));
        push("exact", self.exact.clone());
        push("mu", self.mu.clone());
        push("restart", self.restart.map(|x| x.to_string()));
        push("tau", self.tau.map(|x| x.to_string()));
        push("tol", self.tol.map(|x| x.to_string()));
        push("maxit", self.maxit.map(|x| x.to_string()));
        push("compress", self.compress.clone());
        push("eta", self.eta.map(|x| x.to_string()));
        push("aca-tol", self.aca_tol.map(|x| x.to_string()));
        push("leaf-t", self.leaf_t.map(|x| x.to_string()));
        push("seed", self.seed.map(|x| x.to_string()));
        push("out", self.out.as_ref().map(|p| p.display().to_string()));
        v
    }
}

fn solve(args: SolveArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    let mut history_path = args.history.clone();
    if let Some(path) = &args.config {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        for (k, v) in parse_kv(&text)? {
            // A path-valued history key in a config file names the CSV.
            if k == "history" && !matches!(v.as_str(), "true" | "false" | "1" | "0" | "yes" | "no")
            {
                if history_path.is_none() {
                    history_path = Some(PathBuf::from(v));
                }
                continue;
            }
            cfg.set(&k, &v)
                .with_context(|| format!("{}: key '{k}'", path.display()))?;
        }
    }
    for (k, v) in args.flag_pairs() {
        cfg.set(k, &v).with_context(|| format!("flag --{k}"))?;
    }
    if history_path.is_some() {
        cfg.set("history", "true")?;
    }

    let record = run_experiment(&cfg)?;
    print!("{}", record.to_report());
    if let Some(out) = &cfg.out {
        write_report(out, &record)?;
    }
    if let Some(path) = &history_path {
        write_history_csv(path, &record.error_history)?;
    }
    Ok(())
}

fn table(config: PathBuf, out: PathBuf) -> Result<()> {
    let text = std::fs::read_to_string(&config)
        .with_context(|| format!("reading {}", config.display()))?;
    let configs = expand_table_config(&text, &ExperimentConfig::default())
        .with_context(|| format!("expanding {}", config.display()))?;
    let results = run_table(&configs)?;
    write_table_csv(&out, results.iter().map(|(row, _)| row))?;
    let failed = results
        .iter()
        .filter(|(row, _)| !row.error.is_empty())
        .count();
    eprintln!(
        "{} rows written to {} ({} failed)",
        results.len(),
        out.display(),
        failed
    );
    Ok(())
}

fn points(domain: &str, dist: &str, dims: &[usize], seed: u64, out: PathBuf) -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    cfg.set("domain", domain)?;
    if matches!(cfg.domain, Domain::File(_)) {
        bail!("points needs a generated domain (cube or sphere)");
    }
    cfg.set("dist", dist)?;
    let dims: Vec<String> = dims.iter().map(|d| d.to_string()).collect();
    cfg.set("dims", &dims.join(" "))?;
    cfg.set("seed", &seed.to_string())?;
    let set = cfg.points()?;
    set.save(&out)?;
    eprintln!(
        "{} points ({} boundary) written to {}",
        set.len(),
        set.n_boundary(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Solve(args) => solve(args),
        Command::Table { config, out } => table(config, out),
        Command::Points {
            domain,
            dist,
            dims,
            seed,
            out,
        } => points(&domain, &dist, &dims, seed, out),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
