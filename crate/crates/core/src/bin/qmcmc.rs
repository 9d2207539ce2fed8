use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use qmcmc::experiments::{
    self, compare, dataset, datasets, native_report, to_csv, to_table, Encoding, ExperimentName, ExperimentReport,
    ExperimentSpec,
};
use qmcmc::noise::NoiseModel;

#[derive(Parser)]
#[command(
    name = "qmcmc",
    version,
    about = "Quantum-walk Markov chain experiments on a statevector simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and emit its report.
    Run {
        #[command(flatten)]
        exp: ExperimentArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        check: CheckArgs,
    },
    /// Compare a saved report (or a fresh run) with an embedded dataset.
    Compare {
        /// Report JSON written by `run`.
        #[arg(long, conflicts_with = "experiment")]
        report: Option<PathBuf>,
        #[command(flatten)]
        exp: OptionalExperimentArgs,
        #[command(flatten)]
        out: OutputArgs,
        #[command(flatten)]
        check: CheckArgs,
    },
    /// Walk eigenphases against arccos of the encoded spectrum.
    Spectra {
        #[arg(long, default_value = "szegedy")]
        encoding: EncodingArg,
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long)]
        angle: Option<f64>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Native gate counts of the experiment circuits.
    TranspileReport {
        /// One experiment; all circuit experiments when omitted.
        #[arg(long)]
        experiment: Option<NameArg>,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// List experiments and embedded reference datasets.
    List,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long)]
    experiment: NameArg,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct OptionalExperimentArgs {
    #[arg(long)]
    experiment: Option<NameArg>,
    #[command(flatten)]
    params: Params,
}

#[derive(Args)]
struct Params {
    /// Move probability of the two-state chain.
    #[arg(long)]
    delta: Option<f64>,
    /// Acceptance angle θ of exp(iθY).
    #[arg(long)]
    angle: Option<f64>,
    #[arg(long)]
    shots: Option<u64>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Phase bits for lcu-qae.
    #[arg(long)]
    t: Option<usize>,
    /// Noise model JSON file.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Encoding for spectral-check.
    #[arg(long)]
    encoding: Option<EncodingArg>,
    /// dual-eigenstate: measure after one walk step.
    #[arg(long)]
    walk_applied: bool,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, default_value = "json")]
    format: Format,
    /// Write to a file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Dataset id; defaults to the experiment's expected values.
    #[arg(long)]
    reference: Option<String>,
    /// Exit 1 when the comparison exceeds --max-tvd.
    #[arg(long = "assert", requires = "max_tvd")]
    assert_: bool,
    #[arg(long)]
    max_tvd: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy)]
struct NameArg(ExperimentName);

impl std::str::FromStr for NameArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.parse().map(NameArg).map_err(|_| {
            let names: Vec<&str> = ExperimentName::ALL.iter().map(|n| n.as_str()).collect();
            format!("unknown experiment `{s}` (expected one of: {})", names.join(", "))
        })
    }
}

#[derive(Clone, Copy)]
struct EncodingArg(Encoding);

impl std::str::FromStr for EncodingArg {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        s.parse()
            .map(EncodingArg)
            .map_err(|_| format!("unknown encoding `{s}` (expected lcu, szegedy, cswap or dual)"))
    }
}

enum Failure {
    Usage(String),
    Threshold(String),
}

impl From<qmcmc::Error> for Failure {
    fn from(e: qmcmc::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn spec_from(name: ExperimentName, p: &Params) -> Result<ExperimentSpec, Failure> {
    let mut spec = ExperimentSpec::new(name).with_seed(p.seed);
    if p.delta.is_some() {
        spec.delta = p.delta;
    }
    if p.angle.is_some() {
        spec.acceptance_angle = p.angle;
    }
    if let Some(s) = p.shots {
        spec.shots = s;
    }
    if p.t.is_some() {
        spec.t = p.t;
    }
    if let Some(e) = p.encoding {
        spec.encoding = Some(e.0);
    }
    spec.walk_applied = p.walk_applied;
    if let Some(path) = &p.noise {
        spec.noise = Some(NoiseModel::from_json(&std::fs::read_to_string(path)?)?);
    }
    Ok(spec)
}

fn emit(text: &str, out: &OutputArgs) -> Result<(), Failure> {
    match &out.out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn render_report(report: &ExperimentReport, format: Format) -> String {
    match format {
        Format::Json => report.to_json() + "\n",
        Format::Csv => to_csv(report),
        Format::Table => to_table(report),
    }
}

/// Replaces the report's comparison with `check.reference` and applies
/// the threshold.
fn check(report: &mut ExperimentReport, chk: &CheckArgs) -> Result<Option<String>, Failure> {
    if let Some(id) = &chk.reference {
        report.comparison = Some(compare(report, dataset(id)?)?);
    }
    if !chk.assert_ {
        return Ok(None);
    }
    let max = chk.max_tvd.expect("clap requires --max-tvd");
    let c = report
        .comparison
        .as_ref()
        .ok_or_else(|| Failure::Usage(format!("no reference to assert against for {}", report.spec.name)))?;
    Ok((c.tvd > max).then(|| format!("tvd {:.4} against {} exceeds {max}", c.tvd, c.reference)))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { exp, out, check: chk } => {
            let spec = spec_from(exp.experiment.0, &exp.params)?;
            let mut report = experiments::run(&spec)?;
            let failed = check(&mut report, &chk)?;
            emit(&render_report(&report, out.format), &out)?;
            if let Some(msg) = failed {
                return Err(Failure::Threshold(msg));
            }
        }
        Command::Compare {
            report,
            exp,
            out,
            check: chk,
        } => {
            let mut report = match (report, exp.experiment) {
                (Some(path), _) => ExperimentReport::from_json(&std::fs::read_to_string(path)?)?,
                (None, Some(name)) => experiments::run(&spec_from(name.0, &exp.params)?)?,
                (None, None) => return Err(Failure::Usage("compare needs --report or --experiment".into())),
            };
            let failed = check(&mut report, &chk)?;
            let c = report
                .comparison
                .as_ref()
                .ok_or_else(|| Failure::Usage("no reference dataset for this experiment".into()))?;
            let text = match out.format {
                Format::Json => serde_json::to_string_pretty(c).expect("serializes") + "\n",
                Format::Csv => {
                    let mut s = String::from("outcome,observed,reference,z\n");
                    for (k, e) in &c.expected {
                        s += &format!("{k},{},{e},{:.4}\n", c.observed[k], c.z_scores[k]);
                    }
                    s
                }
                Format::Table => {
                    let mut s = format!("reference {} ({})\ntvd {:.4}\n\n", c.reference, c.device, c.tvd);
                    s += &format!("{:<12} {:>9} {:>9} {:>8}\n", "outcome", "observed", "reference", "z");
                    for (k, e) in &c.expected {
                        s += &format!("{k:<12} {:>9} {e:>9} {:>8.2}\n", c.observed[k], c.z_scores[k]);
                    }
                    s
                }
            };
            emit(&text, &out)?;
            if let Some(msg) = failed {
                return Err(Failure::Threshold(msg));
            }
        }
        Command::Spectra {
            encoding,
            delta,
            angle,
            out,
        } => {
            let mut spec = ExperimentSpec::new(ExperimentName::SpectralCheck);
            spec.encoding = Some(encoding.0);
            if delta.is_some() {
                spec.delta = delta;
            }
            spec.acceptance_angle = angle;
            let report = experiments::run(&spec)?;
            let spectral = report.derived.spectral.as_ref().expect("spectral-check fills this");
            let text = match out.format {
                Format::Json => serde_json::to_string_pretty(spectral).expect("serializes") + "\n",
                Format::Csv => {
                    let mut s = String::from("lambda,phase,expected,error\n");
                    for e in &spectral.entries {
                        for (p, x) in e.matched_phases.iter().zip(&e.expected_phases) {
                            s += &format!("{:.12},{p:.12},{x:.12},{:.3e}\n", e.lambda, (p - x).abs());
                        }
                    }
                    s
                }
                Format::Table => to_table(&report),
            };
            emit(&text, &out)?;
            if !spectral.passed() {
                return Err(Failure::Threshold(spectral.violations.join("; ")));
            }
        }
        Command::TranspileReport { experiment, out } => {
            let names: Vec<ExperimentName> = match experiment {
                Some(n) => vec![n.0],
                None => ExperimentName::ALL
                    .into_iter()
                    .filter(|n| *n != ExperimentName::SpectralCheck)
                    .collect(),
            };
            let reports = names
                .into_iter()
                .map(|n| native_report(&ExperimentSpec::new(n)))
                .collect::<qmcmc::Result<Vec<_>>>()?;
            let text = match out.format {
                Format::Json => serde_json::to_string_pretty(&reports).expect("serializes") + "\n",
                Format::Csv | Format::Table => {
                    let csv = matches!(out.format, Format::Csv);
                    let mut s = if csv {
                        "experiment,qubits,phasedx,zzphase,rz,measure,total,reference_total,max_deviation\n".to_string()
                    } else {
                        format!(
                            "{:<20} {:>6} {:>8} {:>8} {:>6} {:>8} {:>6} {:>7} {:>10}\n",
                            "experiment", "qubits", "PhasedX", "ZZPhase", "Rz", "Measure", "total", "ref", "deviation"
                        )
                    };
                    for r in &reports {
                        let get = |k: &str| r.native.counts.get(k).copied().unwrap_or(0);
                        let reference = r
                            .native
                            .reference
                            .as_ref()
                            .and_then(|m| m.get("total"))
                            .map(|v| v.to_string())
                            .unwrap_or_else(|| "-".into());
                        let cells = (
                            r.experiment,
                            r.qubits,
                            get("PhasedX"),
                            get("ZZPhase"),
                            get("Rz"),
                            get("Measure"),
                            get("total"),
                        );
                        s += &if csv {
                            format!(
                                "{},{},{},{},{},{},{},{reference},{:.3e}\n",
                                cells.0, cells.1, cells.2, cells.3, cells.4, cells.5, cells.6, r.max_deviation
                            )
                        } else {
                            format!(
                                "{:<20} {:>6} {:>8} {:>8} {:>6} {:>8} {:>6} {reference:>7} {:>10.2e}\n",
                                cells.0.as_str(),
                                cells.1,
                                cells.2,
                                cells.3,
                                cells.4,
                                cells.5,
                                cells.6,
                                r.max_deviation
                            )
                        };
                    }
                    s
                }
            };
            emit(&text, &out)?;
        }
        Command::List => {
            println!("experiments:");
            for n in ExperimentName::ALL {
                println!("  {:<20} {}", n.as_str(), n.description());
            }
            println!("\nreference datasets:");
            for d in datasets() {
                let note = if d.complete { "" } else { " (partial listing)" };
                println!(
                    "  {:<34} {:<8} {:?} over {} shots{note}",
                    d.id, d.device, d.quantity, d.total
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Threshold(msg)) => {
            eprintln!("qmcmc: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("qmcmc: {msg}");
            ExitCode::from(2)
        }
    }
}
