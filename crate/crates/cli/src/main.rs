use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qppm_cli::{parse_grid, parse_methods, render, run_sweep, selftest, Caps, CliError, Format, RunOptions, SweepSpec};
use qppm_core::constellation::SlotConfig;
use qppm_core::glauber::{DEFAULT_EPS, DEFAULT_NU};
use qppm_core::sdpa::export_sdp;

#[derive(Parser)]
#[command(name = "qppm", version, about = "Quantum PPM detection sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error probability over an (Ns, nbar) grid; writes CSV and SVG.
    Sweep {
        #[arg(long)]
        m: usize,
        /// `a:b:step` (inclusive) or a comma list.
        #[arg(long)]
        ns: String,
        /// Thermal photon numbers, `a:b:step` or a comma list.
        #[arg(long, default_value = "0")]
        nbar: String,
        /// Comma list of srm, helstrom, pure-closed-form, classical, ook-baselines.
        #[arg(long, default_value = "srm,classical")]
        methods: String,
        /// Trace tolerance for the Fock truncation.
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        /// Reconstruction tolerance for the slot rank.
        #[arg(long, default_value_t = DEFAULT_NU)]
        nu: f64,
        #[arg(long)]
        force_n: Option<usize>,
        #[arg(long)]
        force_h: Option<usize>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        quiet: bool,
    },
    /// Small-instance oracle checks.
    Selftest {
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Writes the minimum-error measurement problem in SDPA sparse format.
    ExportSdp {
        #[arg(long)]
        m: usize,
        #[arg(long)]
        ns: f64,
        #[arg(long, default_value_t = 0.0)]
        nbar: f64,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long)]
        force_n: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Sweep {
            m,
            ns,
            nbar,
            methods,
            eps,
            nu,
            force_n,
            force_h,
            jobs,
            out,
            quiet,
        } => {
            let mut spec = SweepSpec::new(m, parse_grid(&ns)?, parse_grid(&nbar)?, parse_methods(&methods)?);
            spec.eps = eps;
            spec.nu = nu;
            spec.force_n = force_n;
            spec.force_h = force_h;
            spec.caps = Caps::from_env()?;
            let table = run_sweep(
                &spec,
                &RunOptions {
                    workers: jobs,
                    progress: !quiet,
                },
            )?;
            for f in &table.failures {
                eprintln!("failed: {} Ns={} nbar={}: {}", f.method, f.ns, f.nbar, f.message);
            }
            if table.rows.is_empty() {
                return Err(CliError::EmptyTable);
            }
            let mut files = render(&table, Format::Csv, &out)?;
            files.extend(render(&table, Format::Plot, &out)?);
            for f in files {
                println!("{}", f.display());
            }
            Ok(table.failures.is_empty())
        }
        Command::Selftest { seed } => {
            let checks = selftest::run(seed);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(checks.iter().all(|c| c.passed))
        }
        Command::ExportSdp {
            m,
            ns,
            nbar,
            eps,
            force_n,
            out,
        } => {
            let c = SlotConfig::new(ns, nbar).eps(eps).force_n(force_n).build(m)?;
            let p = export_sdp(&c, &out)?;
            println!(
                "{}: {} blocks of size {}, {} constraints",
                out.display(),
                p.block_sizes.len(),
                c.params.n,
                p.num_constraints()
            );
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
