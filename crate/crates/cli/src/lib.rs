//! `mbqc` command-line front end.
//!
//! Exit codes: 0 pass, 1 usage or input error, 2 verification failure.

pub mod circuit_file;
pub mod dot;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use mbqc_core::compiler::{
    chain_angles_within, chain_reconstruction_error, euler_decompose_within, unitarity_deviation,
    CompileError,
};
use mbqc_core::flow::FlowError;
use mbqc_core::verify::{
    self, compare_to_oracle, enumerate_compiled, oracle_output, VerifyError, FIDELITY_TOLERANCE,
    IDENTITY_TOLERANCE,
};
use mbqc_core::{compile, execute, Complex, OutcomePolicy};
use nalgebra::Matrix2;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use circuit_file::{parse_circuit, LoadedCircuit};

/// Decomposition inputs must be unitary to this tolerance.
pub const DECOMPOSE_TOLERANCE: f64 = 1e-8;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("circuit file: {0}")]
    Parse(#[source] serde_json::Error),
    #[error("circuit file: {0}")]
    Circuit(String),
    #[error("invalid circuit: {0}")]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error("matrix input: {0}")]
    Matrix(String),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Parser)]
#[command(
    name = "mbqc",
    version,
    about = "Cluster-state computation with classical feedforward"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compile and execute a circuit, compare against the reference circuit.
    Run {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long, env = "MBQC_SEED", default_value_t = 0)]
        seed: u64,
        /// `all`, or `sample K`.
        #[arg(long, num_args = 1..=2, value_names = ["MODE", "K"], default_value = "all")]
        branches: Vec<String>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a property suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, env = "MBQC_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Write the signal-flow chart as Graphviz DOT.
    ExportDot {
        #[arg(long)]
        circuit: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Euler angles and chain angles of a 2×2 unitary.
    Decompose {
        /// JSON file: [[[re,im],[re,im]],[[re,im],[re,im]]].
        #[arg(long, conflicts_with = "inline", required_unless_present = "inline")]
        matrix: Option<PathBuf>,
        /// Eight comma-separated numbers: re,im of u00, u01, u10, u11.
        #[arg(long)]
        inline: Option<String>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Identities,
    Ablation,
    Uniformity,
}

impl Suite {
    fn default_trials(self) -> usize {
        match self {
            Suite::Identities => 100,
            Suite::Ablation => 20,
            Suite::Uniformity => 50,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BranchMode {
    All,
    Sample(usize),
}

impl BranchMode {
    pub fn parse(values: &[String]) -> Result<Self, CliError> {
        match values {
            [m] if m == "all" => Ok(BranchMode::All),
            [m, k] if m == "sample" => match k.parse::<usize>() {
                Ok(k) if k > 0 => Ok(BranchMode::Sample(k)),
                _ => Err(CliError::Usage(format!(
                    "--branches sample: `{k}` is not a positive integer"
                ))),
            },
            _ => Err(CliError::Usage(format!(
                "--branches expects `all` or `sample K`, got `{}`",
                values.join(" ")
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass => EXIT_PASS,
            Verdict::Fail => EXIT_FAIL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BitRecord {
    pub qubit: usize,
    pub bit: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchEntry {
    /// Seed of this run; sampled runs only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub bits: Vec<BitRecord>,
    pub probability: f64,
    pub fidelity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Aggregate {
    pub branch_count: usize,
    pub min_fidelity: f64,
    /// Exhaustive runs only: sampled runs do not cover the branch space.
    pub probability_sum: Option<f64>,
    pub max_step_deviation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub circuit_digest: String,
    pub mode: &'static str,
    pub samples: Option<usize>,
    pub tolerance: f64,
    pub measured_qubits: usize,
    pub branches: Vec<BranchEntry>,
    pub aggregate: Aggregate,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: &'static str,
    pub seed: u64,
    pub trials: usize,
    pub checks: usize,
    pub tolerance: f64,
    pub worst: f64,
    pub failures: Vec<String>,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EulerAngles {
    pub global_phase: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecomposeReport {
    pub unitarity_deviation: f64,
    pub euler: EulerAngles,
    pub euler_reconstruction_error: f64,
    pub chain_angles: [f64; 3],
    pub chain_reconstruction_error: f64,
}

pub fn digest(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn load(path: &Path) -> Result<(Vec<u8>, LoadedCircuit), CliError> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| {
        CliError::Circuit(format!(
            "not UTF-8 at byte {}",
            e.utf8_error().valid_up_to()
        ))
    })?;
    let loaded = parse_circuit(&text)?;
    Ok((bytes, loaded))
}

fn bits_of(entries: impl IntoIterator<Item = (usize, bool)>) -> Vec<BitRecord> {
    entries
        .into_iter()
        .map(|(qubit, b)| BitRecord {
            qubit,
            bit: u8::from(b),
        })
        .collect()
}

/// Compiles and runs a loaded circuit, exhaustively or by sampling.
/// `circuit_bytes` are the file contents the digest is taken over.
pub fn run_report(
    circuit_bytes: &[u8],
    loaded: &LoadedCircuit,
    seed: u64,
    mode: BranchMode,
) -> Result<RunReport, CliError> {
    let compiled = compile(&loaded.circuit)?;
    let tolerance = FIDELITY_TOLERANCE;
    let measured = compiled.pattern.measured_count();

    let (branches, aggregate, ok) = match mode {
        BranchMode::All => {
            let report = enumerate_compiled(&compiled)?;
            let branches = report
                .branches
                .iter()
                .map(|b| BranchEntry {
                    seed: None,
                    bits: bits_of(b.bits.iter().copied()),
                    probability: b.probability,
                    fidelity: b.fidelity,
                })
                .collect();
            let ok = report.passes(tolerance);
            let agg = Aggregate {
                branch_count: report.branch_count,
                min_fidelity: report.min_fidelity,
                probability_sum: Some(report.probability_sum),
                max_step_deviation: report.max_step_deviation(),
            };
            (branches, agg, ok)
        }
        BranchMode::Sample(k) => {
            let oracle_out = oracle_output(&compiled.oracle)?;
            let mut branches = Vec::with_capacity(k);
            let mut min_fidelity = f64::INFINITY;
            let mut max_dev = 0.0f64;
            for i in 0..k {
                let run_seed = seed.wrapping_add(i as u64);
                let run = execute(
                    &compiled.graph,
                    &compiled.pattern,
                    &compiled.inputs,
                    &OutcomePolicy::Sample,
                    run_seed,
                )?;
                let cmp = compare_to_oracle(&run, &compiled.oracle, &oracle_out)?;
                min_fidelity = min_fidelity.min(cmp.fidelity);
                max_dev = run
                    .outcomes
                    .entries()
                    .iter()
                    .map(|e| (e.2 - 0.5).abs())
                    .fold(max_dev, f64::max);
                branches.push(BranchEntry {
                    seed: Some(run_seed),
                    bits: bits_of(run.outcomes.entries().iter().map(|e| (e.0, e.1))),
                    probability: run.probability,
                    fidelity: cmp.fidelity,
                });
            }
            let agg = Aggregate {
                branch_count: k,
                min_fidelity,
                probability_sum: None,
                max_step_deviation: max_dev,
            };
            (branches, agg, min_fidelity >= 1.0 - tolerance)
        }
    };

    Ok(RunReport {
        seed,
        circuit_digest: digest(circuit_bytes),
        mode: match mode {
            BranchMode::All => "all",
            BranchMode::Sample(_) => "sample",
        },
        samples: match mode {
            BranchMode::All => None,
            BranchMode::Sample(k) => Some(k),
        },
        tolerance,
        measured_qubits: measured,
        branches,
        aggregate,
        verdict: Verdict::from_bool(ok),
    })
}

pub fn verify_report(suite: Suite, trials: usize, seed: u64) -> Result<VerifyReport, CliError> {
    let (outcome, tolerance) = match suite {
        Suite::Identities => (verify::identity_suite(trials, seed), IDENTITY_TOLERANCE),
        Suite::Uniformity => (verify::uniformity_suite(trials, seed)?, FIDELITY_TOLERANCE),
        Suite::Ablation => (
            verify::ablation_suite(trials, seed)?,
            verify::ABLATION_THRESHOLD,
        ),
    };
    Ok(VerifyReport {
        suite: outcome.name,
        seed,
        trials: outcome.trials,
        checks: outcome.checks,
        tolerance,
        worst: outcome.worst,
        verdict: Verdict::from_bool(outcome.passed()),
        failures: outcome.failures,
    })
}

fn parse_matrix_json(text: &str) -> Result<Matrix2<Complex>, CliError> {
    let m: [[[f64; 2]; 2]; 2] = serde_json::from_str(text).map_err(|e| {
        CliError::Matrix(format!(
            "expected [[[re,im],[re,im]],[[re,im],[re,im]]]: {e}"
        ))
    })?;
    let c = |e: [f64; 2]| Complex::new(e[0], e[1]);
    Ok(Matrix2::new(c(m[0][0]), c(m[0][1]), c(m[1][0]), c(m[1][1])))
}

/// Parses `"re00,im00,re01,im01,re10,im10,re11,im11"`.
pub fn parse_inline_matrix(text: &str) -> Result<Matrix2<Complex>, CliError> {
    let v = text
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Matrix(format!("`{}` is not a number", s.trim())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    if v.len() != 8 {
        return Err(CliError::Matrix(format!(
            "expected 8 numbers, got {}",
            v.len()
        )));
    }
    Ok(Matrix2::new(
        Complex::new(v[0], v[1]),
        Complex::new(v[2], v[3]),
        Complex::new(v[4], v[5]),
        Complex::new(v[6], v[7]),
    ))
}

pub fn decompose_report(u: &Matrix2<Complex>) -> Result<DecomposeReport, CliError> {
    if u.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(CliError::Matrix("non-finite entry".into()));
    }
    let matrix_err = |e: CompileError| CliError::Matrix(e.to_string());
    let d = euler_decompose_within(u, DECOMPOSE_TOLERANCE).map_err(matrix_err)?;
    let chain = chain_angles_within(u, DECOMPOSE_TOLERANCE).map_err(matrix_err)?;
    Ok(DecomposeReport {
        unitarity_deviation: unitarity_deviation(u),
        euler: EulerAngles {
            global_phase: d.global_phase,
            a: d.a,
            b: d.b,
            c: d.c,
        },
        euler_reconstruction_error: d.reconstruction_error(u),
        chain_angles: chain,
        chain_reconstruction_error: chain_reconstruction_error(&chain, u),
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    s
}

fn emit(text: &str, path: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| CliError::Io {
            path: p.to_owned(),
            source,
        }),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|source| CliError::Io {
                path: PathBuf::from("<stdout>"),
                source,
            }),
    }
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Run {
            circuit,
            seed,
            branches,
            report,
        } => {
            let mode = BranchMode::parse(&branches)?;
            let (bytes, loaded) = load(&circuit)?;
            for w in &loaded.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let r = run_report(&bytes, &loaded, seed, mode)?;
            emit(&to_json(&r), report.as_deref(), stdout)?;
            if r.verdict == Verdict::Fail {
                let _ = writeln!(
                    stderr,
                    "verification failed: min fidelity {} (tolerance {})",
                    r.aggregate.min_fidelity, r.tolerance
                );
            }
            Ok(r.verdict.exit_code())
        }
        Command::Verify {
            suite,
            trials,
            seed,
            report,
        } => {
            let r = verify_report(suite, trials.unwrap_or(suite.default_trials()), seed)?;
            emit(&to_json(&r), report.as_deref(), stdout)?;
            for f in &r.failures {
                let _ = writeln!(stderr, "failed: {f}");
            }
            Ok(r.verdict.exit_code())
        }
        Command::ExportDot { circuit, out } => {
            let (_, loaded) = load(&circuit)?;
            for w in &loaded.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            let compiled = compile(&loaded.circuit)?;
            let text = dot::render(&loaded.circuit, &compiled);
            fs::write(&out, text).map_err(|source| CliError::Io {
                path: out.clone(),
                source,
            })?;
            Ok(EXIT_PASS)
        }
        Command::Decompose { matrix, inline } => {
            let u = match (matrix, inline) {
                (Some(p), _) => {
                    let bytes = read(&p)?;
                    parse_matrix_json(&String::from_utf8_lossy(&bytes))?
                }
                (None, Some(s)) => parse_inline_matrix(&s)?,
                (None, None) => {
                    return Err(CliError::Usage(
                        "one of --matrix or --inline is required".into(),
                    ))
                }
            };
            let r = decompose_report(&u)?;
            emit(&to_json(&r), None, stdout)?;
            Ok(EXIT_PASS)
        }
    }
}

/// Parses `args` and runs the command. Never returns anything other than
/// 0, 1 or 2.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() {
                EXIT_INPUT
            } else {
                EXIT_PASS
            };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(text.as_bytes())
            } else {
                stdout.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branch_mode_parsing() {
        assert_eq!(BranchMode::parse(&["all".into()]).unwrap(), BranchMode::All);
        assert_eq!(
            BranchMode::parse(&["sample".into(), "5".into()]).unwrap(),
            BranchMode::Sample(5)
        );
        assert!(BranchMode::parse(&["sample".into()]).is_err());
        assert!(BranchMode::parse(&["sample".into(), "0".into()]).is_err());
        assert!(BranchMode::parse(&["some".into()]).is_err());
    }

    #[test]
    fn inline_matrix_parsing() {
        let m = parse_inline_matrix("1,0, 0,0, 0,0, 1,0").unwrap();
        assert_eq!(m, Matrix2::identity());
        assert!(parse_inline_matrix("1,0,0").is_err());
        assert!(parse_inline_matrix("1,0,0,0,0,0,1,x").is_err());
    }

    #[test]
    fn verdict_exit_codes() {
        assert_eq!(Verdict::Pass.exit_code(), 0);
        assert_eq!(Verdict::Fail.exit_code(), 2);
        assert_eq!(serde_json::to_string(&Verdict::Fail).unwrap(), "\"fail\"");
    }

    #[test]
    fn digest_is_sha256_hex() {
        assert_eq!(
            digest(b""),
            "sha256:e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }
}
