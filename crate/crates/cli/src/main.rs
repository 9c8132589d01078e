mod report;

use std::io::Read;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ultraspec::fredholm::{delta_n_estimate, resolvent_bound_scan, verify_delta_trend, vol_perturbation_check, FredholmError, ResolventMethod, TrendPoint};
use ultraspec::hahn::{diagonalize, verify, DiagError, RationalRootOracle, SymSeriesMatrix};
use ultraspec::linalg::{inner, volume, VectorC0};
use ultraspec::operators::{apply, op_norm_val, OperatorC0};
use ultraspec::scalars::{FactorSet, Rational, Valuation};
use ultraspec::spectral::{
    random_probe, spectral_decompose, tail_projection_norms, verify_all_projections, verify_eigenspace_orthogonality,
    verify_eigs_tend_to_zero, verify_norm_max, verify_reconstruction, verify_square_norm, verify_tail_norms, SpectralError,
};
use ultraspec::suite::{run_suite, SuiteConfig};
use ultraspec::textio::{parse_matrix, parse_operator};
use ultraspec::verdict::Verdict;

use report::{Block, Report};

const EXIT_FAIL: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_IRRATIONAL: u8 = 3;
const EXIT_NOT_SELF_ADJOINT: u8 = 4;

#[derive(Parser)]
#[command(name = "ultraspec", version, about = "Exact diagonalization and spectral decomposition over Q((t))")]
struct Cli {
    #[command(flatten)]
    config: Config,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Config {
    /// Target t-adic precision.
    #[arg(long, global = true, default_value_t = 32, value_parser = clap::value_parser!(i64).range(4..))]
    precision: i64,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Residue representatives 1..=grid tried per valuation shell.
    #[arg(long, global = true, default_value_t = 8, value_parser = clap::value_parser!(i64).range(2..))]
    grid: i64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Structured,
}

#[derive(Subcommand)]
enum Command {
    /// Orthogonally diagonalize a symmetric matrix.
    Diagonalize {
        /// Matrix file, or `-` for stdin.
        input: String,
    },
    /// Spectral decomposition of a self-adjoint operator, with all checks.
    Spectral { input: String },
    /// Volume estimates `Δₙ` over canonical tuples.
    Volumes {
        input: String,
        /// Largest tuple size (default: number of active coordinates, at most 4).
        #[arg(long)]
        max_n: Option<usize>,
    },
    /// Resolvent norms over the ball of radius `ρ^v`.
    Scan {
        input: String,
        /// Valuation of the radius (default: one more than `-v(T)`).
        #[arg(long, allow_hyphen_values = true)]
        radius: Option<i64>,
    },
    /// Property suites over generated corpora.
    VerifySuite {
        /// Feed every check a corrupted artifact; succeeds when all are rejected.
        #[arg(long)]
        inject_faults: bool,
        #[arg(long, default_value_t = 24)]
        instances: usize,
    },
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }
}

fn read_input(path: &str) -> Result<String, Failure> {
    let mut text = String::new();
    let res = if path == "-" { std::io::stdin().read_to_string(&mut text).map(|_| ()) } else { std::fs::read_to_string(path).map(|t| text = t) };
    res.map(|_| text).map_err(|e| Failure::new(EXIT_PARSE, format!("cannot read {path}: {e}")))
}

fn load_operator(path: &str) -> Result<OperatorC0, Failure> {
    parse_operator(&read_input(path)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{path}: {e}")))
}

fn diag_failure(e: &DiagError) -> Failure {
    if e.is_irrational() || e.is_not_orthonormalizable() {
        Failure::new(EXIT_IRRATIONAL, e.to_string())
    } else if matches!(e, DiagError::NotSymmetric) {
        Failure::new(EXIT_NOT_SELF_ADJOINT, e.to_string())
    } else {
        Failure::new(EXIT_FAIL, e.to_string())
    }
}

fn spectral_failure(e: &SpectralError) -> Failure {
    match e {
        SpectralError::NotSelfAdjoint => Failure::new(EXIT_NOT_SELF_ADJOINT, e.to_string()),
        SpectralError::Diag(d) => diag_failure(d),
        _ => Failure::new(EXIT_FAIL, e.to_string()),
    }
}

fn fredholm_failure(e: &FredholmError) -> Failure {
    match e {
        FredholmError::Spectral(s) => spectral_failure(s),
        _ => Failure::new(EXIT_FAIL, e.to_string()),
    }
}

fn verdict_block(verdicts: &[Verdict]) -> Block {
    let mut b = Block::new("verdicts");
    for v in verdicts {
        b.push(&v.name, format!("{} {}", if v.passed { "pass" } else { "FAIL" }, v.detail));
    }
    b
}

fn status(verdicts: &[Verdict]) -> u8 {
    if verdicts.iter().all(|v| v.passed) {
        0
    } else {
        EXIT_FAIL
    }
}

fn cmd_diagonalize(cfg: &Config, input: &str, out: &mut Report) -> Result<u8, Failure> {
    let rows = parse_matrix(&read_input(input)?).map_err(|e| Failure::new(EXIT_PARSE, format!("{input}: {e}")))?;
    let a = SymSeriesMatrix::new(rows).map_err(|e| diag_failure(&e))?;
    let r = diagonalize(&a, cfg.precision, &FactorSet::trivial(), &RationalRootOracle).map_err(|e| diag_failure(&e))?;
    let rep = verify(&r, &a, cfg.precision);

    let mut head = Block::new("diagonalize");
    head.push("size", a.size());
    head.push("precision", cfg.precision);
    head.push("certified", r.certificate.certified);
    out.add(head);
    let mut d = Block::new("D");
    for (j, s) in r.d.diagonal_entries().iter().enumerate() {
        d.push(&format!("D[{}]", j + 1), s);
    }
    out.add(d);
    let mut u = Block::new("U");
    for (i, row) in r.u.entries().iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            u.push(&format!("U[{},{}]", i + 1, j + 1), s);
        }
    }
    out.add(u);
    let mut levels = Block::new("levels");
    for (k, l) in r.certificate.levels.iter().enumerate() {
        levels.push(&format!("level {}", k + 1), format!("path {:?} size {} offset {} {:?}", l.path, l.size, l.offset, l.kind));
    }
    out.add(levels);
    let mut v = Block::new("verification");
    v.push("orthogonality", rep.orthogonality);
    v.push("off-diagonal", rep.off_diagonal);
    v.push("diagonal", rep.diagonal);
    v.push("result", if rep.passed() { "pass".to_string() } else { format!("FAIL {}", rep.failures.join("; ")) });
    out.add(v);
    Ok(if rep.passed() { 0 } else { EXIT_FAIL })
}

fn cmd_spectral(cfg: &Config, input: &str, out: &mut Report) -> Result<u8, Failure> {
    let t = load_operator(input)?;
    let dec = spectral_decompose(&t, cfg.precision).map_err(|e| spectral_failure(&e))?;

    let mut head = Block::new("spectral");
    head.push("precision", cfg.precision);
    head.push("operator norm", op_norm_val(&t));
    head.push("eigenvectors", dec.len());
    head.push("kernel", dec.kernel.len());
    out.add(head);
    let mut k = 0;
    for (level, pairs) in &dec.levels {
        for p in pairs {
            for x in &p.vectors {
                k += 1;
                let mut b = Block::new(&format!("eigenpair {k}"));
                b.push("level", level);
                b.push("lambda", &p.lambda);
                b.push("x", x);
                b.push("<x,x>", inner(x, x));
                out.add(b);
            }
        }
    }
    for (i, x) in dec.kernel.iter().enumerate() {
        let mut b = Block::new(&format!("kernel {}", i + 1));
        b.push("x", x);
        out.add(b);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let probes: Vec<VectorC0> = (0..cfg.grid).map(|_| random_probe(&t, &mut rng)).collect();
    let tails = match tail_projection_norms(&t, &dec) {
        Ok(norms) => verify_tail_norms(&norms),
        Err(e) => Verdict::fail("tail projection norms", e.to_string()),
    };
    let verdicts = vec![
        verify_reconstruction(&t, &dec, &probes),
        verify_norm_max(&t, &dec),
        verify_square_norm(&t),
        verify_eigenspace_orthogonality(&dec),
        verify_all_projections(&t, &dec),
        tails,
        verify_eigs_tend_to_zero(&dec),
    ];
    out.add(verdict_block(&verdicts));
    Ok(status(&verdicts))
}

fn cmd_volumes(cfg: &Config, input: &str, max_n: Option<usize>, out: &mut Report) -> Result<u8, Failure> {
    let t = load_operator(input)?;
    let active = t.active_indices();
    let max_n = max_n.unwrap_or(active.len().clamp(1, 4)).max(1);

    let mut table = Block::new("volumes");
    let mut trend = Vec::new();
    let mut best_family: Option<(Vec<VectorC0>, i64)> = None;
    for n in 1..=max_n {
        let est = delta_n_estimate(&t, n, &[]).map_err(|e| fredholm_failure(&e))?;
        let witness: Vec<String> = est.witness.iter().map(|x| x.to_string()).collect();
        let gap = est.gap().map_or("-".to_string(), |g| g.to_string());
        table.push(
            &format!("n={n}"),
            format!("lower {} upper {} gap {} witness [{}]", est.lower_bound, est.upper_bound, gap, witness.join(", ")),
        );
        if let Some(v) = est.lower_bound.finite() {
            let images: Vec<VectorC0> = est.witness.iter().map(|x| apply(&t, x)).collect();
            best_family = Some((images, v));
        }
        let average = est.lower_bound.finite().map(|v| Rational::new(v.into(), (n as i64).into()));
        trend.push(TrendPoint { n, bound: est.lower_bound, average });
    }
    out.add(table);

    let mut verdicts = vec![verify_delta_trend(&t, &trend)];
    if let Some((family, _)) = best_family {
        let v = volume(&family).map_err(|e| Failure::new(EXIT_FAIL, e.to_string()))?;
        if let Valuation::Finite(v) = v {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let check = vol_perturbation_check(&family, v + 1, cfg.grid as usize, &mut rng).map_err(|e| fredholm_failure(&e))?;
            verdicts.push(check);
        }
    }
    out.add(verdict_block(&verdicts));
    Ok(status(&verdicts))
}

fn cmd_scan(cfg: &Config, input: &str, radius: Option<i64>, out: &mut Report) -> Result<u8, Failure> {
    let t = load_operator(input)?;
    let v_r = radius.unwrap_or_else(|| op_norm_val(&t).finite().map_or(0, |v| 1 - v));
    let mut head = Block::new("scan");
    head.push("radius valuation", v_r);
    head.push("precision", cfg.precision);
    head.push("grid", cfg.grid);
    match resolvent_bound_scan(&t, v_r, cfg.grid, cfg.precision) {
        Ok(rep) => {
            out.add(head);
            let mut b = Block::new("samples");
            for s in &rep.samples {
                let method = match s.method {
                    ResolventMethod::Neumann => "neumann",
                    ResolventMethod::Spectral => "spectral",
                };
                b.push(&format!("mu = {}", s.mu), format!("{} {}", s.norm, method));
            }
            out.add(b);
            let verdicts = vec![rep.verdict()];
            out.add(verdict_block(&verdicts));
            Ok(status(&verdicts))
        }
        Err(FredholmError::RadiusOutsideDT { lambda, blow_up }) => {
            head.push("outside domain", format!("1/lambda lies in the ball for lambda = {lambda}"));
            out.add(head);
            let mut b = Block::new("blow-up");
            for bu in &blow_up {
                b.push(&format!("k={} mu = {}", bu.k, bu.mu), bu.norm.map_or("singular".to_string(), |v| v.to_string()));
            }
            out.add(b);
            out.add(verdict_block(&[Verdict::fail("resolvent bounded", "radius outside the resolvent domain")]));
            Ok(EXIT_FAIL)
        }
        Err(e) => Err(fredholm_failure(&e)),
    }
}

fn cmd_verify_suite(cfg: &Config, inject_faults: bool, instances: usize, out: &mut Report) -> u8 {
    let s = run_suite(&SuiteConfig { seed: cfg.seed, precision: cfg.precision, grid: cfg.grid, instances, inject_faults });
    let mut head = Block::new("verify-suite");
    head.push("seed", cfg.seed);
    head.push("precision", cfg.precision);
    head.push("instances", instances);
    head.push("mode", if inject_faults { "inject-faults" } else { "normal" });
    out.add(head);
    let mut b = Block::new("tags");
    for r in &s.tags {
        let mut line = if inject_faults {
            format!("injected {} detected {} skipped {}", r.total, r.failed, r.skipped)
        } else {
            format!("pass {} fail {} skipped {}", r.total - r.failed, r.failed, r.skipped)
        };
        if let (false, Some(msg)) = (inject_faults, &r.first_failure) {
            line.push_str(&format!(" first: {msg}"));
        }
        b.push(&r.tag, line);
    }
    out.add(b);
    let mut res = Block::new("result");
    res.push("status", if s.success() { "pass" } else { "FAIL" });
    out.add(res);
    if s.success() {
        0
    } else {
        EXIT_FAIL
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = cli.config;
    let mut out = Report::default();
    let res = match &cli.command {
        Command::Diagonalize { input } => cmd_diagonalize(&cfg, input, &mut out),
        Command::Spectral { input } => cmd_spectral(&cfg, input, &mut out),
        Command::Volumes { input, max_n } => cmd_volumes(&cfg, input, *max_n, &mut out),
        Command::Scan { input, radius } => cmd_scan(&cfg, input, *radius, &mut out),
        Command::VerifySuite { inject_faults, instances } => Ok(cmd_verify_suite(&cfg, *inject_faults, *instances, &mut out)),
    };
    match res {
        Ok(code) => {
            let text = match cfg.format {
                Format::Text => out.to_text(),
                Format::Structured => out.to_structured(),
            };
            print!("{text}");
            ExitCode::from(code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
