//! `memfilt`: simulate netlists, design Bessel low-pass filters and compare
//! AC sweeps.
//!
//! Exit status is 0 on success, 1 for unreadable, malformed or invalid
//! input, and 2 when the numerical engine fails (singular system, no
//! convergence).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand, ValueEnum};
use memfilt::analyses::{ac_sweep, dc_operating_point, transient};
use memfilt::filter::{besselap, lp2lp, ss_to_zpk, synthesize_mfb_order2, zpk_to_ss, ZpkFilter};
use memfilt::netlist::{format_netlist, parse_netlist, parse_value, validate, AcSweep, AnalysisDirective};
use memfilt::report::{ac_csv, compare, op_csv, parse_ac_csv, tran_csv, write_atomic, zpk_table};

#[derive(Parser)]
#[command(name = "memfilt", version, about = "Memristor-aware circuit simulator and Bessel filter designer")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every analysis directive of a netlist and write one CSV per analysis.
    Sim {
        netlist: PathBuf,
        /// Node whose response the AC sweep records.
        #[arg(long)]
        out_node: Option<String>,
        /// Output prefix; files are <prefix>.ac.csv, .tran.csv, .op.csv.
        #[arg(long)]
        out: PathBuf,
    },
    /// Design a filter.
    Design {
        #[command(subcommand)]
        family: Family,
    },
    /// Compare two .ac.csv sweeps and write a key=value report.
    Compare {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum Family {
    /// Bessel low-pass.
    Bessel {
        #[arg(long)]
        order: usize,
        /// Cutoff frequency in Hz (engineering suffixes accepted).
        #[arg(long, value_parser = parse_number)]
        cutoff: f64,
        #[arg(long, value_enum)]
        emit: Emit,
        /// C2 of the synthesized MFB stage, farads.
        #[arg(long, value_parser = parse_number, default_value = "1n")]
        c2: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Zpk,
    Netlist,
}

fn parse_number(s: &str) -> Result<f64, String> {
    parse_value(s).map_err(|e| e.to_string())
}

/// Failure classified by exit status.
enum Failure {
    Input(anyhow::Error),
    Numerical(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        let numerical = e
            .chain()
            .any(|c| c.downcast_ref::<memfilt::Error>().is_some_and(|e| e.is_numerical()));
        if numerical {
            Failure::Numerical(e)
        } else {
            Failure::Input(e)
        }
    }
}

impl From<memfilt::Error> for Failure {
    fn from(e: memfilt::Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sim { netlist, out_node, out } => run_sim(&netlist, out_node.as_deref(), &out),
        Command::Design {
            family: Family::Bessel { order, cutoff, emit, c2, out },
        } => run_design(order, cutoff, emit, c2, &out),
        Command::Compare { a, b, out } => run_compare(&a, &b, &out),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Numerical(e)) => {
            eprintln!("numerical failure: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

fn run_sim(path: &Path, out_node: Option<&str>, prefix: &Path) -> Outcome {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let circuit = parse_netlist(&text).with_context(|| format!("parsing {}", path.display()))?;
    let diagnostics = validate(&circuit);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("{}: {d}", path.display());
        }
        return Err(Failure::Input(anyhow!("{} has {} problem(s)", path.display(), diagnostics.len())));
    }
    if circuit.directives.is_empty() {
        eprintln!("{}: no analysis directives; nothing written", path.display());
    }

    // Run everything first so a failing analysis leaves no output behind.
    let mut outputs: Vec<(&str, String)> = Vec::new();
    for directive in &circuit.directives {
        let (suffix, csv) = match directive {
            AnalysisDirective::Ac(sweep) => {
                let node = out_node.ok_or_else(|| anyhow!("--out-node is required for an .ac analysis"))?;
                let trace = ac_sweep(&circuit, sweep, node).context(".ac analysis")?;
                (".ac.csv", ac_csv(&trace))
            }
            AnalysisDirective::Transient(spec) => {
                let trace = transient(&circuit, spec).context(".tran analysis")?;
                (".tran.csv", tran_csv(&trace))
            }
            AnalysisDirective::OperatingPoint => {
                let op = dc_operating_point(&circuit).context(".op analysis")?;
                (".op.csv", op_csv(&circuit, &op))
            }
        };
        if outputs.iter().any(|(s, _)| *s == suffix) {
            return Err(Failure::Input(anyhow!("more than one {} analysis", &suffix[..suffix.len() - 4])));
        }
        outputs.push((suffix, csv));
    }
    for (suffix, csv) in outputs {
        let file = with_suffix(prefix, suffix);
        write_atomic(&file, &csv).with_context(|| format!("writing {}", file.display()))?;
    }
    Ok(())
}

fn design_filter(order: usize, cutoff_hz: f64) -> Result<ZpkFilter, Failure> {
    if !(cutoff_hz > 0.0 && cutoff_hz.is_finite()) {
        return Err(Failure::Input(anyhow!("cutoff must be a positive frequency")));
    }
    let prototype = besselap(order)?;
    let ss = lp2lp(&zpk_to_ss(&prototype)?, 2.0 * std::f64::consts::PI * cutoff_hz)?;
    Ok(ss_to_zpk(&ss)?)
}

fn run_design(order: usize, cutoff_hz: f64, emit: Emit, c2: f64, out: &Path) -> Outcome {
    if matches!(emit, Emit::Netlist) && order != 2 && (1..=memfilt::filter::MAX_ORDER).contains(&order) {
        return Err(Failure::Input(anyhow!(
            "netlist emission synthesizes a single second-order MFB stage; order {order} is not supported"
        )));
    }
    let filter = design_filter(order, cutoff_hz)?;
    let text = match emit {
        Emit::Zpk => zpk_table(&filter),
        Emit::Netlist => {
            let mut circuit = synthesize_mfb_order2(&filter, c2)?;
            circuit.title = format!("MFB Bessel low-pass, order 2, cutoff {cutoff_hz} Hz");
            circuit.directives.push(AnalysisDirective::Ac(AcSweep {
                points_per_decade: 20,
                f_start: 100.0,
                f_stop: 1e6,
            }));
            format_netlist(&circuit)
        }
    };
    write_atomic(out, &text).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn run_compare(a: &Path, b: &Path, out: &Path) -> Outcome {
    let read = |p: &Path| -> anyhow::Result<_> {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        parse_ac_csv(&text).with_context(|| format!("parsing {}", p.display()))
    };
    let report = compare(&read(a)?, &read(b)?)?;
    let text = report.to_key_value();
    write_atomic(out, &text).with_context(|| format!("writing {}", out.display()))?;
    print!("{text}");
    Ok(())
}
