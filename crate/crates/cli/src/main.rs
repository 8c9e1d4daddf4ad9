use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kmsdp::harness::{
    clustering_config_from_file, csv_line, run_experiment, summarize, ExperimentConfig, CSV_HEADER,
};
use kmsdp::io::{read_dataset_csv, write_centers_csv, write_dataset_csv, write_labels_csv, write_matrix_csv};
use kmsdp::{
    cluster_dataset, ground_truth, l1_error, misrate, pairwise_sq_dists, sample_dataset, snr, solve_sdp,
    ClusteringConfig, Error, Result,
};

/// Balanced k-means clustering through its SDP relaxation.
#[derive(Parser)]
#[command(name = "kmsdp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset from the model block of an experiment config.
    Gen {
        #[arg(long)]
        config: PathBuf,
        /// Seed; defaults to the config's seed for the chosen sweep point.
        #[arg(long)]
        seed: Option<u64>,
        /// Index into the sweep list selecting the separation.
        #[arg(long, default_value_t = 0)]
        point: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve the SDP for a dataset and dump the fractional matrix.
    Solve {
        data: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Where to write the matrix; omit to print only the report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve, round and estimate centers; writes 1-based labels.
    Cluster {
        data: PathBuf,
        #[command(flatten)]
        opts: SolveOpts,
        /// Labels CSV; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write the estimated centers here.
        #[arg(long)]
        centers: Option<PathBuf>,
    },
    /// Run a Monte-Carlo sweep and write one CSV row per replicate.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `base_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `[output] path`; rows go to stdout when neither is set.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Per-sweep-point summary of an experiment CSV.
    Summarize {
        csv: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolveOpts {
    /// Number of clusters; defaults to the number of distinct labels in the
    /// dataset.
    #[arg(short, long)]
    k: Option<usize>,
    /// Reads the `[solver]` block of a config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Primal and dual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
}

impl SolveOpts {
    fn clustering_config(&self) -> Result<ClusteringConfig> {
        let mut cfg = match &self.config {
            Some(path) => clustering_config_from_file(path)?,
            None => ClusteringConfig::default(),
        };
        if let Some(t) = self.tol {
            cfg.solver.tol_primal = t;
            cfg.solver.tol_dual = t;
        }
        if let Some(m) = self.max_iter {
            cfg.solver.max_iter = m;
        }
        cfg.solver.validate()?;
        Ok(cfg)
    }

    fn k(&self, labels: Option<&[usize]>) -> Result<usize> {
        match (self.k, labels) {
            (Some(k), _) => Ok(k),
            (None, Some(l)) => Ok(l.iter().max().map_or(0, |m| m + 1)),
            (None, None) => Err(Error::Input(
                "dataset has no label column; pass -k".into(),
            )),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("kmsdp: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen {
            config,
            seed,
            point,
            out,
        } => gen(&config, seed, point, &out),
        Command::Solve { data, opts, out } => solve(&data, &opts, out.as_deref()),
        Command::Cluster {
            data,
            opts,
            out,
            centers,
        } => cluster(&data, &opts, out.as_deref(), centers.as_deref()),
        Command::Experiment {
            config,
            seed,
            out,
            tol,
            max_iter,
            threads,
        } => {
            let mut cfg = ExperimentConfig::from_file(&config)?;
            if let Some(s) = seed {
                cfg.sweep.base_seed = s;
            }
            if let Some(t) = tol {
                cfg.solver.tol_primal = t;
                cfg.solver.tol_dual = t;
            }
            if let Some(m) = max_iter {
                cfg.solver.max_iter = m;
            }
            if let Some(t) = threads {
                cfg.sweep.threads = t;
            }
            if out.is_some() {
                cfg.output = out;
            }
            cfg.validate()?;
            let to_stdout = cfg.output.is_none();
            let records = run_experiment(&cfg)?;
            if to_stdout {
                let mut text = CSV_HEADER.join(",");
                text.push('\n');
                for r in &records {
                    text.push_str(&csv_line(r));
                    text.push('\n');
                }
                print_stdout(&text);
            }
            let failed = records.iter().filter(|r| r.error.is_some()).count();
            if failed > 0 {
                eprintln!("warning: {failed} of {} replicates failed; see the error column", records.len());
            }
            Ok(())
        }
        Command::Summarize { csv, out } => {
            let table = summarize(&csv)?.to_table();
            match out {
                Some(path) => std::fs::write(&path, table).map_err(|e| Error::Io { path, source: e }),
                None => {
                    print_stdout(&table);
                    Ok(())
                }
            }
        }
    }
}

fn print_stdout(text: &str) {
    let mut stdout = std::io::stdout().lock();
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = stdout.write_all(text.as_bytes());
}

fn gen(config: &Path, seed: Option<u64>, point: usize, out: &Path) -> Result<()> {
    let cfg = ExperimentConfig::from_file(config)?;
    let Some(&value) = cfg.sweep.values.get(point) else {
        return Err(Error::Input(format!(
            "--point {point} is out of range; the sweep has {} values",
            cfg.sweep.values.len()
        )));
    };
    let spec = cfg.spec_for(value)?;
    let seed = seed.unwrap_or_else(|| cfg.seed(point, 0));
    let data = sample_dataset(&spec, seed)?;
    write_dataset_csv(out, &data)?;
    let report = snr(&spec)?;
    println!(
        "wrote {} points in {} dimensions, k = {}, delta = {}, tau = {}, snr = {}, seed = {seed}",
        spec.n, spec.d, spec.k, report.delta, report.tau, report.snr
    );
    Ok(())
}

fn solve(data: &Path, opts: &SolveOpts, out: Option<&Path>) -> Result<()> {
    let (points, labels) = read_dataset_csv(data)?;
    let k = opts.k(labels.as_deref())?;
    let cfg = opts.clustering_config()?;
    let a = pairwise_sq_dists(&points)?;
    let sol = solve_sdp(&a, k, &cfg.solver)?;
    if let Some(path) = out {
        write_matrix_csv(path, &sol.y)?;
    }
    let r = &sol.residuals;
    println!("method          {}", sol.method.name());
    println!("converged       {}", sol.converged);
    println!("iterations      {}", sol.iterations);
    println!("objective       {}", sol.objective);
    println!("row_sum_resid   {:e}", r.row_sum_resid);
    println!("diag_resid      {:e}", r.diag_resid);
    println!("neg_entry       {:e}", r.neg_entry);
    println!("min_eig         {:e}", r.min_eig);
    if let Some(labels) = labels {
        let truth = ground_truth(&labels, k)?;
        let (l1, ratio) = l1_error(&sol.y, &truth.cluster_matrix)?;
        println!("l1_error        {l1}");
        println!("l1_ratio        {ratio}");
    }
    if !sol.converged {
        eprintln!("warning: solver stopped at the iteration limit; the best iterate is reported");
    }
    Ok(())
}

fn cluster(data: &Path, opts: &SolveOpts, out: Option<&Path>, centers: Option<&Path>) -> Result<()> {
    let (points, labels) = read_dataset_csv(data)?;
    let k = opts.k(labels.as_deref())?;
    let cfg = opts.clustering_config()?;
    let result = cluster_dataset(&points, k, &cfg)?;
    let assigned = result.assignment.labels();
    match out {
        Some(path) => write_labels_csv(path, assigned)?,
        None => {
            let mut text = String::from("label\n");
            for l in assigned {
                text.push_str(&(l + 1).to_string());
                text.push('\n');
            }
            print_stdout(&text);
        }
    }
    if let Some(path) = centers {
        write_centers_csv(path, &result.centers_hat)?;
    }
    eprintln!(
        "sdp converged = {}, iterations = {}",
        result.sdp.converged, result.sdp.iterations
    );
    if let Some(truth) = labels {
        let (rate, _) = misrate(assigned, &truth, k)?;
        eprintln!("misrate = {rate}");
    }
    Ok(())
}
