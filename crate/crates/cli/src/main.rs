//! `qcomb`: validate networks, solve estimation problems, check dual
//! certificates and reproduce the standard examples.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use qcomb::catalog::{bit_flip_action, density_matrices, helstrom_kets, helstrom_problem, helstrom_pure, trine_kets, twin_helstrom};
use qcomb::covariant::{
    covariant_gamma, default_d_grid, phase_action, phase_estimation_optimum, phase_problem, qmax_state,
    sum_of_phases, PHASE_OUT,
};
use qcomb::estimation::uniform_prior;
use qcomb::io::{
    comb_from_file, product_rule_to_file, read_json, solution_to_file, tester_from_file, CertificateFile,
    NetworkFile, ProblemFile,
};
use qcomb::network::{validate_comb, validate_tester};
use qcomb::operator::{LabeledOperator, SystemLabel};
use qcomb::product_rule::{counterexample_correlated_payoff, counterexample_multicopy, verify_product_rule};
use qcomb::sdp::{certify_dual, solve, yuen_kennedy_lax, SolveOptions};
use qcomb::{Complex, Error};

mod exit {
    pub const OK: u8 = 0;
    pub const VALIDATION: u8 = 2;
    pub const PARSE: u8 = 3;
    pub const MAX_ITER: u8 = 4;
    pub const NUMERICAL: u8 = 5;
    pub const DIMENSION_CAP: u8 = 6;
    pub const CERTIFICATE: u8 = 7;
    pub const UNKNOWN_EXAMPLE: u8 = 8;
    pub const USAGE: u8 = 64;
}

#[derive(Parser, Debug)]
#[command(name = "qcomb", version, about = "Optimal estimation networks: combs, testers and their SDPs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Relative gap and feasibility tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 200)]
    max_iter: usize,
    /// Points per phase grid (default: 4 × output dimension per phase).
    #[arg(long, global = true)]
    d_grid: Option<usize>,
    /// Write the JSON report here; `-` writes it to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress the text summary.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the normalization of a comb, tester or problem file.
    Validate { file: PathBuf },
    /// Solve an estimation problem file.
    Solve { problem: PathBuf },
    /// Check `λR ⪰ G_x̂` for a certificate (or solution) file.
    DualCheck { problem: PathBuf, certificate: PathBuf },
    /// Reproduce a named example.
    Example(ExampleArgs),
    /// Verify multiplicativity over independent factor problem files.
    ProductRule {
        #[arg(required = true)]
        problems: Vec<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct ExampleArgs {
    /// helstrom, ykl, qmax, phase, two-phase, sum-phases, multicopy, product-rule
    name: String,
    /// Correlation parameter of the two-phase payoff.
    #[arg(long, default_value_t = 0.7)]
    p: f64,
    /// Levels of the phase probe.
    #[arg(long)]
    levels: Option<usize>,
    /// Number of copies or phases.
    #[arg(long)]
    k: Option<usize>,
    /// Product-rule instance.
    #[arg(long, default_value = "twin-helstrom")]
    spec: String,
}

/// Nine significant digits.
fn sig(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..9).contains(&mag) {
        format!("{:.*}", (8 - mag).max(0) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Parse(_) => exit::PARSE,
            Error::MaxIterations { .. } => exit::MAX_ITER,
            Error::NumericalFailure(_) => exit::NUMERICAL,
            Error::DimensionCap { .. } => exit::DIMENSION_CAP,
            Error::InvalidComb(_) => exit::CERTIFICATE,
            _ => exit::VALIDATION,
        };
        Failure { code, message: e.to_string() }
    }
}

/// Largest accepted `|γ_joint − Π γ_k| / (1 + Π γ_k)` in `product-rule`.
const DEVIATION_LIMIT: f64 = 3e-6;

type Outcome = Result<Report, Failure>;

/// Text lines for the terminal, JSON for `--out`, and the exit code.
struct Report {
    lines: Vec<String>,
    json: Value,
    code: u8,
}

impl Report {
    fn ok(lines: Vec<String>, json: Value) -> Self {
        Report { lines, json, code: exit::OK }
    }
}

fn options(g: &Global) -> Result<SolveOptions, Failure> {
    if !(g.tol > 0.0) || g.max_iter == 0 {
        return Err(Failure { code: exit::USAGE, message: "--tol must be positive and --max-iter at least 1".into() });
    }
    Ok(SolveOptions { tol: g.tol, max_iter: g.max_iter, ..SolveOptions::default() })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let g = cli.global.clone();
    let outcome = options(&g).and_then(|opts| match cli.command {
        Command::Validate { file } => cmd_validate(&file, opts.tol),
        Command::Solve { problem } => cmd_solve(&problem, &opts),
        Command::DualCheck { problem, certificate } => cmd_dual_check(&problem, &certificate, &opts),
        Command::Example(args) => cmd_example(&args, &g, &opts),
        Command::ProductRule { problems } => cmd_product_rule(&problems, &opts),
    });
    match outcome {
        Ok(report) => {
            if let Err(f) = emit(&report, &g) {
                eprintln!("error: {}", f.message);
                return ExitCode::from(f.code);
            }
            ExitCode::from(report.code)
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn emit(report: &Report, g: &Global) -> Result<(), Failure> {
    let to_stdout = g.out.as_deref() == Some(Path::new("-"));
    if !g.quiet {
        for l in &report.lines {
            if to_stdout {
                eprintln!("{l}");
            } else {
                println!("{l}");
            }
        }
    }
    if let Some(path) = &g.out {
        let text = serde_json::to_string_pretty(&report.json).expect("JSON values serialize") + "\n";
        if to_stdout {
            print!("{text}");
        } else {
            std::fs::write(path, text)
                .map_err(|e| Failure { code: exit::PARSE, message: format!("{}: {e}", path.display()) })?;
        }
    }
    Ok(())
}

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum AnyFile {
    Network(NetworkFile),
    Problem(ProblemFile),
}

fn cmd_validate(path: &Path, tol: f64) -> Outcome {
    let file: AnyFile = read_json(path)?;
    let (kind, checked) = match file {
        AnyFile::Network(NetworkFile::Comb(f)) => {
            let c = comb_from_file::<f64>(&f)?;
            ("comb", validate_comb(&c, tol).map(|_| c.space.n_steps()))
        }
        AnyFile::Network(NetworkFile::Tester(f)) => {
            let t = tester_from_file::<f64>(&f)?;
            ("tester", validate_tester(&t, tol).map(|_| t.space.n_steps()))
        }
        AnyFile::Problem(f) => ("problem", qcomb::io::problem_from_file::<f64>(&f).map(|p| p.space().n_steps())),
    };
    match checked {
        Ok(n) => Ok(Report::ok(
            vec![format!("{kind}: valid ({n} step{})", if n == 1 { "" } else { "s" })],
            json!({ "kind": kind, "valid": true, "steps": n }),
        )),
        Err(e) => {
            let mut json = json!({ "kind": kind, "valid": false, "error": e.to_string() });
            if let Error::NormalizationViolation { level, residual } = e {
                json["level"] = json!(level);
                json["residual"] = json!(residual);
            }
            Ok(Report { lines: vec![format!("{kind}: invalid: {e}")], json, code: Failure::from(e).code })
        }
    }
}

fn cmd_solve(path: &Path, opts: &SolveOptions) -> Outcome {
    let f: ProblemFile = read_json(path)?;
    let p = qcomb::io::problem_from_file::<f64>(&f)?;
    let s = solve(&p, opts)?;
    let lines = vec![
        format!("gamma = {}", sig(s.gamma())),
        format!("lambda = {}", sig(s.lambda - s.payoff_shift)),
        format!("gap = {}", sig(s.gap)),
        format!("iterations = {}", s.iterations),
        format!("status = {}", s.status.as_str()),
    ];
    Ok(Report::ok(lines, serde_json::to_value(solution_to_file(&s)).expect("serializable")))
}

fn cmd_dual_check(problem: &Path, cert: &Path, opts: &SolveOptions) -> Outcome {
    let f: ProblemFile = read_json(problem)?;
    let p = qcomb::io::problem_from_file::<f64>(&f)?;
    let c: CertificateFile = read_json(cert)?;
    let r = comb_from_file::<f64>(&c.comb_certificate)?;
    let tol = opts.cert_tol.max(10.0 * opts.tol);
    let rep = certify_dual(c.lambda, &r, &p, tol)?;
    let lines = vec![
        format!("certificate: {}", if rep.passed { "passed" } else { "failed" }),
        format!("upper_bound = {}", sig(rep.upper_bound)),
        format!("min_margin = {}", sig(rep.min_margin)),
    ];
    let json = json!({ "passed": rep.passed, "upper_bound": rep.upper_bound, "min_margin": rep.min_margin, "margins": rep.margins });
    Ok(Report { lines, json, code: if rep.passed { exit::OK } else { exit::CERTIFICATE } })
}

fn cmd_product_rule(paths: &[PathBuf], opts: &SolveOptions) -> Outcome {
    let ps = paths
        .iter()
        .map(|p| qcomb::io::problem_from_file::<f64>(&read_json::<ProblemFile>(p)?))
        .collect::<Result<Vec<_>, _>>()?;
    product_rule_report(&ps, opts)
}

fn product_rule_report(ps: &[qcomb::Problem], opts: &SolveOptions) -> Outcome {
    let r = verify_product_rule(ps, opts)?;
    let factors: Vec<String> = r.gamma_factors.iter().map(|&g| sig(g)).collect();
    let lines = vec![
        format!("gamma_joint = {}", sig(r.gamma_joint)),
        format!("gamma_factors = [{}]", factors.join(", ")),
        format!("product = {}", sig(r.product)),
        format!("relative_deviation = {}", sig(r.relative_deviation)),
        format!("certified = {}", r.certified),
    ];
    let ok = r.certified && r.relative_deviation <= DEVIATION_LIMIT;
    let json = serde_json::to_value(product_rule_to_file(&r)).expect("serializable");
    Ok(Report { lines, json, code: if ok { exit::OK } else { exit::CERTIFICATE } })
}

fn cmd_example(a: &ExampleArgs, g: &Global, opts: &SolveOptions) -> Outcome {
    match a.name.as_str() {
        "helstrom" => ex_helstrom(opts),
        "ykl" => ex_ykl(opts),
        "qmax" => ex_qmax(opts),
        "phase" => ex_phase(a.levels.unwrap_or(3), g.d_grid, opts),
        "two-phase" => ex_two_phase(a.p, g.d_grid.unwrap_or(8), opts),
        "sum-phases" => ex_sum_phases(a.levels.unwrap_or(8), a.k),
        "multicopy" => ex_multicopy(a.k.unwrap_or(2)),
        "product-rule" => match a.spec.as_str() {
            "twin-helstrom" => product_rule_report(&twin_helstrom()?, opts),
            other => Err(Failure { code: exit::UNKNOWN_EXAMPLE, message: format!("unknown product-rule spec `{other}`") }),
        },
        other => Err(Failure { code: exit::UNKNOWN_EXAMPLE, message: format!("unknown example `{other}`") }),
    }
}

fn ex_helstrom(opts: &SolveOptions) -> Outcome {
    let s = solve(&helstrom_problem::<f64>("q")?, opts)?;
    let oracle = helstrom_pure(0.5, [0.5, 0.5]);
    let lines = vec![
        format!("gamma = {}", sig(s.gamma())),
        format!("oracle = {}", sig(oracle)),
        format!("gap = {}", sig(s.gap)),
    ];
    Ok(Report::ok(lines, json!({ "gamma": s.gamma(), "oracle": oracle, "gap": s.gap, "iterations": s.iterations })))
}

fn ex_ykl(opts: &SolveOptions) -> Outcome {
    let q = SystemLabel::new("q", 2);
    let states = density_matrices(&q, &trine_kets::<f64>())?;
    let r = yuen_kennedy_lax(&states, &uniform_prior(3), opts)?;
    let lines = vec![
        format!("p_succ = {}", sig(r.p_succ)),
        format!("expected = {}", sig(2.0 / 3.0)),
        format!("slackness_residual = {}", sig(r.slackness_residual)),
    ];
    Ok(Report::ok(
        lines,
        json!({ "p_succ": r.p_succ, "expected": 2.0 / 3.0, "slackness_residual": r.slackness_residual }),
    ))
}

fn ex_qmax(opts: &SolveOptions) -> Outcome {
    let q = SystemLabel::new("q", 2);
    let act = bit_flip_action::<f64>("q")?;
    let t = std::f64::consts::PI / 8.0;
    let zero = LabeledOperator::projector(vec![q.clone()], &helstrom_kets::<f64>()[0])?;
    let tilted = LabeledOperator::projector(vec![q], &[Complex::new(t.cos(), 0.0), Complex::new(t.sin(), 0.0)])?;
    let a = qmax_state(&zero, &act, opts)?;
    let b = qmax_state(&tilted, &act, opts)?;
    // orbit {cos t|0⟩ + sin t|1⟩, sin t|0⟩ + cos t|1⟩}: overlap sin 2t
    let oracle = helstrom_pure((2.0 * t).sin().powi(2), [0.5, 0.5]);
    let lines = vec![
        format!("orthogonal orbit: q_max = {}, p_succ = {}", sig(a.q_max), sig(a.p_succ)),
        format!("tilted orbit: q_max = {}, p_succ = {}, helstrom = {}", sig(b.q_max), sig(b.p_succ), sig(oracle)),
    ];
    let json = json!({
        "orthogonal": { "q_max": a.q_max, "p_succ": a.p_succ },
        "tilted": { "q_max": b.q_max, "p_succ": b.p_succ, "helstrom": oracle },
    });
    Ok(Report::ok(lines, json))
}

fn ex_phase(levels: usize, d_grid: Option<usize>, opts: &SolveOptions) -> Outcome {
    let o = phase_estimation_optimum(levels)?;
    let d_grid = d_grid.unwrap_or_else(|| default_d_grid(levels));
    let p = phase_problem::<f64>(levels, d_grid)?;
    let s = solve(&p, opts)?;
    let cov = covariant_gamma(&p, &phase_action(levels, d_grid, PHASE_OUT)?, opts)?;
    let c_sdp = 2.0 * (1.0 - s.gamma());
    let mut lines = vec![
        format!("levels = {levels}, grid = {d_grid}"),
        format!("c_min (sdp) = {}", sig(c_sdp)),
        format!("c_min (oracle) = {}", sig(o.c_min)),
        format!("c_min (covariant) = {}", sig(2.0 * (1.0 - cov.gamma()))),
        format!("c_min (printed formula) = {}", sig(o.c_min_printed)),
    ];
    if o.discrepancy {
        lines.push("note: printed formula disagrees with the oracle".into());
    }
    let json = json!({
        "levels": levels,
        "d_grid": d_grid,
        "c_min_sdp": c_sdp,
        "c_min_oracle": o.c_min,
        "c_min_covariant": 2.0 * (1.0 - cov.gamma()),
        "c_min_printed": o.c_min_printed,
        "discrepancy": o.discrepancy,
        "q_max": cov.q_max,
        "coefficients": o.coefficients,
    });
    Ok(Report::ok(lines, json))
}

fn ex_two_phase(p: f64, d_grid: usize, opts: &SolveOptions) -> Outcome {
    let r = counterexample_correlated_payoff(p, d_grid, opts)?;
    let mut lines = vec![
        format!("gamma = {}", sig(r.gamma_joint)),
        format!("predicted = {}", sig(r.gamma_predicted)),
        format!("product_bound = {}", sig(r.product_bound)),
        format!("product_tester = {}", sig(r.product_tester_value)),
    ];
    if let Some(ov) = r.optimizer_overlap {
        lines.push(format!("optimizer_overlap = {}", sig(ov)));
    }
    let json = json!({
        "p": p,
        "d_grid": d_grid,
        "gamma": r.gamma_joint,
        "predicted": r.gamma_predicted,
        "product_bound": r.product_bound,
        "product_tester": r.product_tester_value,
        "optimizer_overlap": r.optimizer_overlap,
    });
    Ok(Report::ok(lines, json))
}

fn ex_sum_phases(d: usize, k: Option<usize>) -> Outcome {
    let ks: Vec<usize> = match k {
        Some(k) => vec![k],
        None => vec![2, 3, 4],
    };
    let mut lines = Vec::new();
    let mut rows = Vec::new();
    for k in ks {
        let s = sum_of_phases(d, k)?;
        lines.push(format!(
            "K = {k}: c_entangled = {}, c_product = {}, ratio = {}, c_product (printed, M = d) = {}",
            sig(s.c_entangled),
            sig(s.c_product),
            sig(s.ratio),
            sig(s.c_product_printed)
        ));
        rows.push(json!({
            "k": k,
            "c_entangled": s.c_entangled,
            "c_product": s.c_product,
            "ratio": s.ratio,
            "c_product_printed": s.c_product_printed,
        }));
    }
    Ok(Report::ok(lines, json!({ "levels": d, "results": rows })))
}

fn ex_multicopy(k: usize) -> Outcome {
    let kets = helstrom_kets::<f64>();
    let r = counterexample_multicopy(&kets[0], &kets[1], [0.5, 0.5], k)?;
    let mut lines: Vec<String> =
        r.p_succ.iter().enumerate().map(|(i, p)| format!("p({}) = {}", i + 1, sig(*p))).collect();
    lines.push(format!("p(1)^{k} = {}", sig(r.product_prediction)));
    lines.push(format!("exceeds_product = {}", r.exceeds_product));
    let json = json!({ "p_succ": r.p_succ, "product_prediction": r.product_prediction, "exceeds_product": r.exceeds_product });
    Ok(Report::ok(lines, json))
}
