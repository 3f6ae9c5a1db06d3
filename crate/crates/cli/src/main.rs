use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use spinglass_diversity::bench::{render_report, run_experiment, seed_droplets, BenchReport, ExperimentSpec};
use spinglass_diversity::diversity::{exact_diversity, greedy_seeds, BasinSeeds, DiversityParams};
use spinglass_diversity::schedule::{clusters_from_droplets, random_portfolio_schedule_with, Partition, Schedule};
use spinglass_diversity::solver::{anneal_restarts, PimcParams, Readout};
use spinglass_diversity::spectrum::{
    bnb_spectrum, brute_force_spectrum, spectrum, BandwidthMode, BnbOptions, LowEnergySet, SpectrumRequest,
};
use spinglass_diversity::Instance;

#[derive(Parser)]
#[command(name = "sgdiv", version, about = "Solution diversity and annealing benchmarks for Ising spin glasses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Brute,
    Bnb,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a random instance.
    Gen {
        /// L x L lattice with open boundaries.
        #[arg(long = "2d", value_name = "L", conflicts_with = "quasi1d")]
        two_d: Option<usize>,
        /// Chain of N spins coupled up to distance --range.
        #[arg(long, value_name = "N")]
        quasi1d: Option<usize>,
        #[arg(long, default_value_t = 1)]
        range: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Enumerate the low-energy manifold of an instance.
    Spectrum {
        instance: PathBuf,
        #[arg(long, default_value_t = 0.01)]
        ar: f64,
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
        /// Bandwidth: exact maximum energy or the absolute bound.
        #[arg(long, default_value = "exact")]
        mode: String,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        #[arg(long, default_value_t = spinglass_diversity::spectrum::DEFAULT_STRIP_WIDTH_LIMIT)]
        strip_width: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Select basin seeds from a spectrum and report the diversity D.
    Diversity {
        instance: PathBuf,
        spectrum: PathBuf,
        #[arg(long = "R", default_value_t = 0.125)]
        radius: f64,
        /// Treat a configuration and its global flip as one basin (default:
        /// when the instance has no fields).
        #[arg(long)]
        merge_spin_flip: Option<bool>,
        /// Also compute the exact maximum (small sets only).
        #[arg(long)]
        exact: bool,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run annealing restarts and print one record per restart.
    Anneal {
        instance: PathBuf,
        #[arg(long, default_value_t = 1000)]
        sweeps: usize,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 24.0)]
        beta: f64,
        #[arg(long, default_value_t = 96)]
        slices: usize,
        #[arg(long, default_value = "lowest_slice")]
        readout: String,
        /// Single front over the whole lattice with this slope.
        #[arg(long, conflicts_with = "seeds")]
        alpha: Option<f64>,
        /// Droplet-derived portfolio built from these basin seeds.
        #[arg(long)]
        seeds: Option<PathBuf>,
        #[arg(long, default_value_t = 4)]
        min_cluster_size: usize,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run an experiment file and write its report directory.
    Bench {
        spec: PathBuf,
        /// Overrides the output directory in the file.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Render a report.json into CSV tables and plot data.
    Report {
        report: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
}

fn emit(output: Option<&Path>, text: &str) -> Result<()> {
    match output {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen {
            two_d,
            quasi1d,
            range,
            seed,
            output,
        } => {
            let inst = match (two_d, quasi1d) {
                (Some(l), None) => Instance::generate_2d(l, seed)?,
                (None, Some(n)) => Instance::generate_quasi_1d(n, range, seed)?,
                _ => bail!("pass exactly one of --2d or --quasi1d"),
            };
            emit(output.as_deref(), &inst.to_string())
        }
        Command::Spectrum {
            instance,
            ar,
            max_states,
            mode,
            method,
            strip_width,
            output,
        } => {
            let inst = Instance::read(&instance)?;
            let mode: BandwidthMode = mode.parse().context("--mode")?;
            let req = SpectrumRequest::new(ar, max_states, mode)?;
            let opts = BnbOptions {
                strip_width_limit: strip_width,
                ..BnbOptions::default()
            };
            let low = match method {
                Method::Auto => spectrum(&inst, &req, &opts)?,
                Method::Brute => brute_force_spectrum(&inst, &req)?,
                Method::Bnb => bnb_spectrum(&inst, &req, &opts)?,
            };
            if !low.complete {
                eprintln!("warning: truncated at {} states", low.len());
            }
            emit(output.as_deref(), &low.to_report())
        }
        Command::Diversity {
            instance,
            spectrum,
            radius,
            merge_spin_flip,
            exact,
            output,
        } => {
            let inst = Instance::read(&instance)?;
            let low = LowEnergySet::read(&spectrum)?;
            let params = match merge_spin_flip {
                Some(m) => DiversityParams::new(radius, m)?,
                None => DiversityParams::for_instance(&inst, radius)?,
            };
            let seeds = greedy_seeds(&inst, &low, &params)?;
            eprintln!("D = {}", seeds.count());
            if exact {
                eprintln!("exact D = {}", exact_diversity(&inst, &low, &params)?);
            }
            emit(output.as_deref(), &seeds.to_report())
        }
        Command::Anneal {
            instance,
            sweeps,
            restarts,
            seed,
            beta,
            slices,
            readout,
            alpha,
            seeds,
            min_cluster_size,
            output,
        } => {
            let inst = Instance::read(&instance)?;
            let readout: Readout = readout.parse().context("--readout")?;
            let params = PimcParams::new(beta, slices, sweeps, seed)?.with_readout(readout);
            let t_a = sweeps as f64;
            let partition = match &seeds {
                Some(p) => {
                    let seeds = BasinSeeds::read(p)?;
                    Some(clusters_from_droplets(&inst, &seed_droplets(&inst, &seeds), min_cluster_size)?)
                }
                None => None,
            };
            let runs = anneal_restarts(&inst, restarts, seed, &params, |_, rng| {
                let sched = match (&partition, alpha) {
                    (Some(part), _) => random_portfolio_schedule_with(
                        &inst,
                        part,
                        &spinglass_diversity::schedule::DEFAULT_ALPHAS,
                        spinglass_diversity::schedule::DEFAULT_HOMOGENEOUS_PARTICIPATION,
                        t_a,
                        rng,
                    )?,
                    (None, Some(a)) => Schedule::new(&inst, &Partition::single(inst.n()), &[a], t_a)?,
                    (None, None) => Schedule::homogeneous(&inst, t_a)?,
                };
                Ok((sched, None))
            })?;
            let mut text = String::new();
            for r in &runs {
                text.push_str(&r.to_log_line());
                text.push('\n');
            }
            emit(output.as_deref(), &text)
        }
        Command::Bench { spec, output_dir } => {
            let mut spec = ExperimentSpec::from_file(&spec)?;
            if output_dir.is_some() {
                spec.output_dir = output_dir;
            }
            if spec.output_dir.is_none() {
                bail!("no output directory: set output_dir in the file or pass --output-dir");
            }
            let report = run_experiment(&spec)?;
            eprintln!(
                "{} instances written to {}",
                report.instances.len(),
                spec.output_dir.as_deref().unwrap_or(Path::new("")).display()
            );
            Ok(())
        }
        Command::Report { report, output } => {
            let report = BenchReport::read(&report)?;
            report.verify()?;
            render_report(&report, &output)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
