//! Command-line front end. [`run`] parses arguments, dispatches, prints a
//! report and returns the process exit code:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success, or the input is valid |
//! | 1 | semantic failure: invalid input matrix, dimension mismatch, failed precondition |
//! | 2 | input error: unreadable file, malformed JSON, non-Hermitian matrix |
//! | 3 | numerical failure: the solver or an eigensolver did not converge |

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::cone::{base_norm_sampled_lower_bound, verify_dual_base};
use crate::discrimination::{
    base_norm_with, build_realization, classify, distance_to_class_with, p_adapt_with, p_succ_with,
    Strategy, STRATEGY_TOL,
};
use crate::error::Error;
use crate::io::{load_hermitian, save_hermitian, save_operator, MatrixFile};
use crate::process::{
    make_cns_example, membership, random_comb_ab, random_comb_ba, random_free,
    random_process_matrix, validate_def1, validate_def2, PartyDims, ProcessClassTag, ProcessMatrix,
    PROCESS_TOL,
};
use crate::protocols::{
    perfect_probability, random_perfect_pair, register_distribution, simulate_order,
    strategy_operators, support_overlap, Order,
};
use crate::sdp::SolveOptions;
use crate::tensor::{CMatrix, HermitianOperator, LabelledOperator, SystemLabel};

#[derive(Debug, Parser)]
#[command(
    name = "pmdisc",
    version,
    about = "Process-matrix validation, classification and discrimination"
)]
pub struct Cli {
    /// print the report as JSON instead of `key: value` lines
    #[arg(long, global = true)]
    pub json: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SetArg {
    Free,
    CombAb,
    CombBa,
    Sep,
}

impl From<SetArg> for ProcessClassTag {
    fn from(s: SetArg) -> Self {
        match s {
            SetArg::Free => Self::Free,
            SetArg::CombAb => Self::CombAB,
            SetArg::CombBa => Self::CombBA,
            SetArg::Sep => Self::Separable,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    /// the causally non-separable qubit example
    Cns,
    /// 1/(d_AI d_BI) · 1
    MaximallyMixed,
    Free,
    CombAb,
    CombBa,
    /// random valid process matrix, generally without a causal order
    Random,
    /// A≺B member of the perfectly distinguishable pair
    PerfectAb,
    /// B≺A member of the perfectly distinguishable pair
    PerfectBa,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check positivity, the subspace condition and the trace of a matrix
    Validate {
        path: PathBuf,
        #[arg(long, default_value_t = PROCESS_TOL)]
        tol: f64,
    },
    /// Assign the matrix to free, comb-ab, comb-ba, separable or unclassified
    Classify {
        path: PathBuf,
        #[arg(long, default_value_t = PROCESS_TOL)]
        tol: f64,
        /// skip the validity check of the input
        #[arg(long)]
        force: bool,
    },
    /// Optimal single-shot success probability for two equiprobable matrices
    Psucc {
        path0: PathBuf,
        path1: PathBuf,
        /// also solve over adaptive (tester) strategies; operands must be A≺B combs
        #[arg(long)]
        adaptive: bool,
        /// write the ancilla-assisted channel K and measurement Q0, Q1
        #[arg(long)]
        realize: bool,
        /// directory for S0.json, S1.json and the realization files
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = PROCESS_TOL)]
        tol: f64,
        /// skip the validity check of the inputs
        #[arg(long)]
        force: bool,
    },
    /// Trace-norm distance to a class and the closest member
    Distance {
        path: PathBuf,
        #[arg(long, value_enum)]
        set: SetArg,
        /// directory for closest.json
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, default_value_t = PROCESS_TOL)]
        tol: f64,
        /// skip the validity check of the inputs
        #[arg(long)]
        force: bool,
    },
    /// Base norm of a Hermitian operator on AI, AO, BI, BO
    Basenorm {
        path: PathBuf,
        /// number of sampled non-signalling channels for the lower bound
        #[arg(long, default_value_t = 0)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Simulate the perfect discrimination protocol for a random (ρ, U)
    DemoPerfect {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sampling report on non-signalling channels as the dual of process matrices
    ConeReport {
        #[arg(long, default_value_t = 100)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
    /// Write an example or random process matrix
    Generate {
        #[arg(value_enum)]
        kind: GenKind,
        output: PathBuf,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

/// A failed command with its exit code.
#[derive(Debug)]
pub enum Failure {
    Input(Error),
    Semantic(Error),
    Numerical(Error),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Self::Input(_) => 2,
            Self::Semantic(_) => 1,
            Self::Numerical(_) => 3,
        }
    }

    fn error(&self) -> &Error {
        match self {
            Self::Input(e) | Self::Semantic(e) | Self::Numerical(e) => e,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse(_) | Error::Io(_) | Error::NotHermitian(_) => Self::Input(e),
            Error::Solver { .. } | Error::Convergence => Self::Numerical(e),
            _ => Self::Semantic(e),
        }
    }
}

type CmdResult = std::result::Result<(Value, i32), Failure>;

fn load(path: &Path) -> std::result::Result<HermitianOperator, Failure> {
    load_hermitian(path).map_err(|e| match e {
        Error::Io(_) | Error::Parse(_) | Error::NotHermitian(_) => Failure::Input(e),
        other => Failure::Input(Error::Parse(other.to_string())),
    })
}

fn load_process(path: &Path, tol: f64, force: bool) -> std::result::Result<ProcessMatrix, Failure> {
    let op = load(path)?;
    let w = if force {
        ProcessMatrix::new_unchecked(op)
    } else {
        ProcessMatrix::new(op, tol)
    };
    w.map_err(Failure::Semantic)
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("report types serialize")
}

fn matrix_value(m: &CMatrix) -> Value {
    let d = m.nrows();
    let op =
        LabelledOperator::new(vec![SystemLabel::new("X", d)], m.clone()).expect("square matrix");
    to_value(&MatrixFile::from_operator(&op))
}

fn ensure_dir(dir: &Path) -> std::result::Result<(), Failure> {
    std::fs::create_dir_all(dir).map_err(|e| Failure::Input(Error::Io(e)))
}

fn write_file(
    dir: &Path,
    name: &str,
    x: &HermitianOperator,
) -> std::result::Result<String, Failure> {
    let path = dir.join(name);
    save_hermitian(&path, x).map_err(Failure::Input)?;
    Ok(path.display().to_string())
}

fn strategy_report(
    s: &Strategy,
    w0: &ProcessMatrix,
    w1: &ProcessMatrix,
) -> std::result::Result<Value, Failure> {
    let f = s.feasibility(STRATEGY_TOL)?;
    Ok(json!({
        "feasible": f.nonsignalling,
        "min_eigenvalue": f.min_eigenvalue,
        "max_residual": f.max_residual(),
        "replayed_probability": s.probability(w0, w1)?,
    }))
}

fn cmd_validate(path: &Path, tol: f64) -> CmdResult {
    let w = load(path)?;
    let def1 = validate_def1(&w, tol).map_err(Failure::Semantic)?;
    let def2 = validate_def2(&w, tol).map_err(Failure::Semantic)?;
    let valid = def1.valid && def2.valid;
    let v = json!({
        "valid": valid,
        "min_eigenvalue": def1.min_eigenvalue,
        "lv_residual": def1.lv_residual,
        "trace_residual": def1.trace_residual,
        "def1": def1,
        "def2": def2,
    });
    Ok((v, if valid { 0 } else { 1 }))
}

fn cmd_classify(path: &Path, tol: f64, force: bool) -> CmdResult {
    let w = load_process(path, tol, force)?;
    let c = classify(&w, tol, &SolveOptions::default())?;
    let mut v = to_value(&c);
    if let Some(m) = v.as_object_mut() {
        m.remove("tag");
        m.insert("class".into(), json!(c.tag.to_string()));
    }
    Ok((v, 0))
}

#[allow(clippy::too_many_arguments)]
fn cmd_psucc(
    p0: &Path,
    p1: &Path,
    adaptive: bool,
    realize: bool,
    out: &Path,
    tol: f64,
    force: bool,
) -> CmdResult {
    let w0 = load_process(p0, tol, force)?;
    let w1 = load_process(p1, tol, force)?;
    if w0.dims() != w1.dims() {
        return Err(Failure::Semantic(Error::DimensionMismatch(format!(
            "{:?} vs {:?}",
            w0.dims(),
            w1.dims()
        ))));
    }
    let opts = SolveOptions::default();
    let r = p_succ_with(&w0, &w1, &opts)?;
    ensure_dir(out)?;
    let mut files = serde_json::Map::new();
    files.insert(
        "S0".into(),
        json!(write_file(out, "S0.json", &r.strategy.s0)?),
    );
    files.insert(
        "S1".into(),
        json!(write_file(out, "S1.json", &r.strategy.s1)?),
    );
    let mut v = json!({
        "p_succ": r.p_succ,
        "gap": r.stats.gap,
        "stats": r.stats,
        "certificate_value": r.certificate.value(w0.dims()),
        "strategy": strategy_report(&r.strategy, &w0, &w1)?,
    });
    if adaptive {
        let a = p_adapt_with(&w0, &w1, &opts)?;
        v["p_adapt"] = json!(a.p_adapt);
        v["adaptive_stats"] = to_value(&a.stats);
    }
    if realize {
        let n = r.strategy.sum()?;
        let real = build_realization(&n, &w0, &w1)?;
        let path = out.join("K.json");
        save_hermitian(&path, real.k.op()).map_err(Failure::Input)?;
        files.insert("K".into(), json!(path.display().to_string()));
        files.insert("Q0".into(), json!(write_file(out, "Q0.json", &real.q0)?));
        files.insert("Q1".into(), json!(write_file(out, "Q1.json", &real.q1)?));
        v["realization"] = json!({
            "probability": real.probability,
            "replayed_probability": real.replay(&w0, &w1)?,
        });
    }
    v["files"] = Value::Object(files);
    Ok((v, 0))
}

fn cmd_distance(path: &Path, set: SetArg, out: &Path, tol: f64, force: bool) -> CmdResult {
    let w = load_process(path, tol, force)?;
    let class: ProcessClassTag = set.into();
    let r = distance_to_class_with(&w, class, &SolveOptions::default())?;
    ensure_dir(out)?;
    let file = write_file(out, "closest.json", r.closest.op())?;
    let def1 = validate_def1(r.closest.op(), 1e-7)?;
    let m = membership(r.closest.op())?;
    let member_residual = match class {
        ProcessClassTag::Free => m.free,
        ProcessClassTag::CombAB => m.comb_ab,
        ProcessClassTag::CombBA => m.comb_ba,
        _ => {
            let mut worst: f64 = 0.0;
            for c in &r.cores {
                worst = worst.max(-c.min_eigenvalue()?);
            }
            worst
        }
    };
    let v = json!({
        "class": class.to_string(),
        "distance": r.distance,
        "gap": r.stats.gap,
        "stats": r.stats,
        "mixing": r.mixing,
        "closest": {
            "file": file,
            "valid": def1.valid,
            "min_eigenvalue": def1.min_eigenvalue,
            "class_residual": member_residual,
        },
    });
    Ok((v, 0))
}

fn cmd_basenorm(path: &Path, samples: usize, seed: u64) -> CmdResult {
    let x = load(path)?;
    PartyDims::of(x.as_operator()).map_err(Failure::Semantic)?;
    let r = base_norm_with(&x, &SolveOptions::default())?;
    let mut v = json!({
        "base_norm": r.value,
        "gap": r.stats.gap,
        "stats": r.stats,
    });
    if samples > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let lb = base_norm_sampled_lower_bound(&x, samples, &[], &mut rng)?;
        v["sampled_lower_bound"] = json!(lb);
        v["sampled_gap"] = json!(r.value - lb);
    }
    Ok((v, 0))
}

fn cmd_demo_perfect(dim: usize, seed: u64) -> CmdResult {
    if dim < 2 {
        return Err(Failure::Semantic(Error::Precondition(format!(
            "perfect discrimination needs d >= 2, got {dim}"
        ))));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pp = random_perfect_pair(dim, &mut rng)?;
    let ab = register_distribution(&simulate_order(&pp, Order::AB)?);
    let ba = register_distribution(&simulate_order(&pp, Order::BA)?);
    let mut pattern_ok = true;
    for i in 0..dim {
        for j in 0..dim {
            let off_ab = j != (i + 1) % dim;
            let off_ba = i != j;
            if (off_ab && ab[i][j].abs() > 1e-12) || (off_ba && ba[i][j].abs() > 1e-12) {
                pattern_ok = false;
            }
        }
    }
    let probability = perfect_probability(&pp)?;
    let strategy = strategy_operators(&pp)?;
    let v = json!({
        "dim": dim,
        "seed": seed,
        "rho": matrix_value(&pp.rho),
        "u": matrix_value(&pp.u),
        "eigenvalues": pp.lambda,
        "registers_ab": ab,
        "registers_ba": ba,
        "shift_pattern": pattern_ok,
        "support_overlap": support_overlap(&pp)?,
        "probability": probability,
        "strategy_probability": strategy.probability(&pp.w_ab, &pp.w_ba)?,
    });
    Ok((v, 0))
}

fn cmd_cone_report(samples: usize, seed: u64, dim: usize) -> CmdResult {
    if dim == 0 {
        return Err(Failure::Semantic(Error::Precondition(
            "dimension must be positive".into(),
        )));
    }
    let rep = verify_dual_base(samples, seed, PartyDims::uniform(dim))?;
    let code = if rep.passed { 0 } else { 1 };
    Ok((to_value(&rep), code))
}

fn cmd_generate(kind: GenKind, output: &Path, dim: usize, seed: u64) -> CmdResult {
    if dim == 0 {
        return Err(Failure::Semantic(Error::Precondition(
            "dimension must be positive".into(),
        )));
    }
    let dims = PartyDims::uniform(dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = match kind {
        GenKind::Cns => {
            if dim != 2 {
                return Err(Failure::Semantic(Error::Precondition(
                    "the non-separable example is defined for qubits".into(),
                )));
            }
            make_cns_example()
        }
        GenKind::MaximallyMixed => ProcessMatrix::maximally_mixed(dims)?,
        GenKind::Free => random_free(dims, &mut rng)?,
        GenKind::CombAb => random_comb_ab(dims, &mut rng)?,
        GenKind::CombBa => random_comb_ba(dims, &mut rng)?,
        GenKind::Random => random_process_matrix(dims, &mut rng)?,
        GenKind::PerfectAb => random_perfect_pair(dim, &mut rng)?.w_ab,
        GenKind::PerfectBa => random_perfect_pair(dim, &mut rng)?.w_ba,
    };
    if let Some(parent) = output.parent().filter(|p| !p.as_os_str().is_empty()) {
        ensure_dir(parent)?;
    }
    save_operator(output, w.op().as_operator()).map_err(Failure::Input)?;
    Ok((
        json!({ "file": output.display().to_string(), "dims": dims }),
        0,
    ))
}

pub fn execute(cmd: &Command) -> CmdResult {
    match cmd {
        Command::Validate { path, tol } => cmd_validate(path, *tol),
        Command::Classify { path, tol, force } => cmd_classify(path, *tol, *force),
        Command::Psucc {
            path0,
            path1,
            adaptive,
            realize,
            out,
            tol,
            force,
        } => cmd_psucc(path0, path1, *adaptive, *realize, out, *tol, *force),
        Command::Distance {
            path,
            set,
            out,
            tol,
            force,
        } => cmd_distance(path, *set, out, *tol, *force),
        Command::Basenorm {
            path,
            samples,
            seed,
        } => cmd_basenorm(path, *samples, *seed),
        Command::DemoPerfect { dim, seed } => cmd_demo_perfect(*dim, *seed),
        Command::ConeReport { samples, seed, dim } => cmd_cone_report(*samples, *seed, *dim),
        Command::Generate {
            kind,
            output,
            dim,
            seed,
        } => cmd_generate(*kind, output, *dim, *seed),
    }
}

fn render_text(v: &Value) -> String {
    match v {
        Value::Object(map) => map
            .iter()
            .map(|(k, x)| match x {
                Value::String(s) => format!("{k}: {s}\n"),
                other => format!("{k}: {other}\n"),
            })
            .collect(),
        other => format!("{other}\n"),
    }
}

/// Runs the CLI on `args` (including the program name), writing the report
/// to `out` and errors to `err`. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            let _ = if code == 0 {
                out.write_all(text.as_bytes())
            } else {
                err.write_all(text.as_bytes())
            };
            return code;
        }
    };
    match execute(&cli.command) {
        Ok((v, code)) => {
            let text = if cli.json {
                format!(
                    "{}\n",
                    serde_json::to_string_pretty(&v).expect("JSON value")
                )
            } else {
                render_text(&v)
            };
            let _ = out.write_all(text.as_bytes());
            code
        }
        Err(f) => {
            let code = f.code();
            if cli.json {
                let v = json!({ "error": f.error().to_string(), "exit_code": code });
                let _ = writeln!(
                    out,
                    "{}",
                    serde_json::to_string_pretty(&v).expect("JSON value")
                );
            }
            let _ = writeln!(err, "error: {}", f.error());
            code
        }
    }
}
