//! Command-line front end: single solves, bifurcation sweeps in p, radial
//! Neumann eigenvalues, convergence experiments, the N = 1 time-map oracle,
//! and shooter-vs-oracle cross-checks.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 assertion-style "not
//! found", 64 usage error.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::time::SystemTime;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use plap::continuation::{self, SweepConfig};
use plap::convergence::{self, Side};
use plap::shooter::{self, ShootConfig, Solution};
use plap::variational;
use plap::{spectral, timemap, ProblemParams};

const EXIT_OK: i32 = 0;
const EXIT_NUMERICAL: i32 = 1;
const EXIT_NOT_FOUND: i32 = 2;
const EXIT_USAGE: i32 = 64;

#[derive(Parser, Debug)]
#[command(name = "plap", about = "Radial Neumann p-Laplacian laboratory", version)]
struct Cli {
    /// JSON config file; explicit flags override its values
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (env PLAP_OUTPUT_DIR overrides)
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,

    /// Worker threads (default: available parallelism)
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve the Neumann problem at fixed (p, q, N)
    Solve(SolveArgs),
    /// Sweep p at fixed q and build the bifurcation diagram
    Bifurcate(BifurcateArgs),
    /// Radial Neumann eigenvalues of the Laplacian in the unit ball
    Eigen(EigenArgs),
    /// Convergence experiment p_n -> p
    Converge(ConvergeArgs),
    /// Time-map oracle roots (N = 1 only)
    Oracle(OracleArgs),
    /// Shooter-vs-oracle equivalence matrix (N = 1 only)
    Crosscheck(CrosscheckArgs),
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long = "N")]
    n: Option<u32>,
    #[arg(long)]
    n_scan: Option<usize>,
    /// Exit 2 unless a nonconstant solution is found
    #[arg(long)]
    require_nonconstant: bool,
}

#[derive(Args, Debug)]
struct BifurcateArgs {
    #[arg(long)]
    q: Option<f64>,
    #[arg(long = "N")]
    n: Option<u32>,
    #[arg(long)]
    p_min: Option<f64>,
    #[arg(long)]
    p_max: Option<f64>,
    #[arg(long)]
    p_step: Option<f64>,
    #[arg(long)]
    tol_p: Option<f64>,
    #[arg(long)]
    n_scan: Option<usize>,
}

#[derive(Args, Debug)]
struct EigenArgs {
    #[arg(long = "N")]
    n: Option<u32>,
    /// Largest eigenvalue index (indices run 2..=k_max)
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long = "N")]
    n: Option<u32>,
    #[arg(long)]
    kmax: Option<u32>,
    #[arg(long)]
    side: Option<String>,
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
}

#[derive(Args, Debug)]
struct CrosscheckArgs {
    /// Single-cell check instead of the default matrix
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    #[arg(long = "N")]
    n: Option<u32>,
}

/// Fully materialized run configuration, persisted next to the outputs so a
/// rerun from the file reproduces the artifacts byte for byte.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
struct FileConfig {
    p: Option<f64>,
    q: Option<f64>,
    #[serde(rename = "N")]
    n: Option<u32>,
    p_min: Option<f64>,
    p_max: Option<f64>,
    p_step: Option<f64>,
    n_scan: Option<usize>,
    kmax: Option<u32>,
    side: Option<String>,
    beta: Option<f64>,
    k_max: Option<usize>,
    tol_ode: Option<f64>,
    tol_bvp: Option<f64>,
    tol_mono: Option<f64>,
    tol_p: Option<f64>,
    n_out: Option<usize>,
    output_dir: Option<PathBuf>,
    jobs: Option<usize>,
    require_nonconstant: Option<bool>,
}

#[derive(Debug, Serialize)]
struct MaterializedConfig<'a> {
    command: &'a str,
    #[serde(flatten)]
    file: FileConfig,
    seedless: bool,
}

struct Runner {
    out_dir: PathBuf,
    log: Vec<String>,
}

impl Runner {
    fn new(out_dir: PathBuf) -> std::io::Result<Self> {
        fs::create_dir_all(&out_dir)?;
        Ok(Runner { out_dir, log: Vec::new() })
    }

    fn log(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        let ts = SystemTime::now()
            .duration_since(SystemTime::UNIX_EPOCH)
            .map(|d| d.as_secs_f64())
            .unwrap_or(0.0);
        self.log.push(format!("[{ts:.3}] {msg}"));
        eprintln!("{msg}");
    }

    fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        fs::write(self.out_dir.join(name), contents)?;
        self.log(format!("wrote {}", self.out_dir.join(name).display()));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> std::io::Result<()> {
        let mut body = serde_json::to_string_pretty(value).expect("serializable");
        body.push('\n');
        self.write(name, &body)
    }

    fn finish(&self, command: &str, cfg: &FileConfig) -> std::io::Result<()> {
        let mat = MaterializedConfig { command, file: cfg.clone(), seedless: true };
        let mut body = serde_json::to_string_pretty(&mat).expect("serializable");
        body.push('\n');
        fs::write(self.out_dir.join("config.json"), body)?;
        let mut f = fs::File::create(self.out_dir.join("run-log.txt"))?;
        for line in &self.log {
            writeln!(f, "{line}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct SolutionRow {
    u0: f64,
    miss_residual: f64,
    in_cone: bool,
    kind: &'static str,
    energy: f64,
    nehari_h: f64,
    profile_ref: String,
}

fn profile_name(u0: f64) -> String {
    format!("profile_{u0:.9}.csv")
}

fn solution_rows(runner: &mut Runner, sols: &[Solution]) -> std::io::Result<Vec<SolutionRow>> {
    let mut rows = Vec::new();
    for s in sols {
        let name = profile_name(s.u0);
        let mut csv = Vec::new();
        s.profile.write_csv(&mut csv).map_err(std::io::Error::other)?;
        runner.write(&name, &String::from_utf8(csv).expect("ascii csv"))?;
        rows.push(SolutionRow {
            u0: s.u0,
            miss_residual: s.miss_residual,
            in_cone: s.in_cone,
            kind: continuation::kind_label(s.kind),
            energy: s.energy,
            nehari_h: s.nehari_h,
            profile_ref: name,
        });
    }
    Ok(rows)
}

fn cmd_solve(runner: &mut Runner, cfg: &FileConfig, require_nonconstant: bool) -> i32 {
    let (p, q, n) = match (cfg.p, cfg.q, cfg.n) {
        (Some(p), Some(q), Some(n)) => (p, q, n),
        _ => {
            eprintln!("solve: --p, --q and --N are required");
            return EXIT_USAGE;
        }
    };
    let params = match ProblemParams::new(p, q, n) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("solve: {e}");
            return EXIT_USAGE;
        }
    };
    let shoot = shoot_config(cfg);
    let n_scan = cfg.n_scan.unwrap_or(400);
    runner.log(format!("solve p = {p}, q = {q}, N = {n}, n_scan = {n_scan}"));
    let sols = shooter::solve_report(&params, n_scan, &shoot)
        .and_then(|r| variational::classify(r.solutions));
    let sols = match sols {
        Ok(v) => v,
        Err(e) => {
            eprintln!("solve failed: {e}");
            return EXIT_NUMERICAL;
        }
    };
    println!("{:>12} {:>14} {:>14} {:>6} kind", "u0", "energy", "h", "cone");
    for s in &sols {
        println!(
            "{:>12.9} {:>14.9} {:>14.9} {:>6} {}",
            s.u0,
            s.energy,
            s.nehari_h,
            s.in_cone,
            continuation::kind_label(s.kind)
        );
    }
    let rows = match solution_rows(runner, &sols) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("io failure: {e}");
            return EXIT_NUMERICAL;
        }
    };
    if runner.write_json("solutions.json", &rows).is_err() {
        return EXIT_NUMERICAL;
    }
    if require_nonconstant && !sols.iter().any(|s| !s.is_constant()) {
        runner.log("no nonconstant solution found");
        return EXIT_NOT_FOUND;
    }
    EXIT_OK
}

fn cmd_bifurcate(runner: &mut Runner, cfg: &FileConfig) -> i32 {
    let (q, n) = match (cfg.q, cfg.n) {
        (Some(q), Some(n)) => (q, n),
        _ => {
            eprintln!("bifurcate: --q and --N are required");
            return EXIT_USAGE;
        }
    };
    let p_min = cfg.p_min.unwrap_or(1.1);
    let p_max = cfg.p_max.unwrap_or(2.0);
    let p_step = cfg.p_step.unwrap_or(0.01);
    let tol_p = cfg.tol_p.unwrap_or(0.01);
    if !(p_min > 1.0 && p_max > p_min && p_step > 0.0) {
        eprintln!("bifurcate: need 1 < p_min < p_max and p_step > 0");
        return EXIT_USAGE;
    }
    let sweep = SweepConfig {
        n_scan: cfg.n_scan.unwrap_or(400),
        shoot: shoot_config(cfg),
        ..Default::default()
    };
    let n_cols = ((p_max - p_min) / p_step).round() as usize;
    let grid: Vec<f64> = (0..=n_cols).map(|i| p_min + i as f64 * p_step).collect();
    runner.log(format!("bifurcate q = {q}, N = {n}, p in [{p_min}, {p_max}] step {p_step}"));

    let points = match continuation::sweep_p(q, n, &grid, &sweep) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("sweep failed: {e}");
            return EXIT_NUMERICAL;
        }
    };
    let mut branches = continuation::link_branches(&points, &sweep);
    runner.log(format!("{} sweep points, {} nonconstant branches", points.len(), branches.len()));
    for b in &mut branches {
        match continuation::refine_fold(q, n, b, tol_p, &sweep) {
            Ok(fold) => runner.log(format!("branch {}: fold_p = {fold:.4}", b.id)),
            Err(e) => runner.log(format!("branch {}: fold not refined ({e})", b.id)),
        }
    }

    let csv = continuation::diagram_csv(&points, &branches);
    if runner.write("diagram.csv", &csv).is_err() {
        return EXIT_NUMERICAL;
    }
    for b in &branches {
        let mut rows = String::from("p,u0,energy\n");
        for pt in &b.points {
            rows.push_str(&format!("{:.17e},{:.17e},{:.17e}\n", pt.p, pt.u0, pt.energy));
        }
        if runner.write(&format!("branch_{}.csv", b.id), &rows).is_err() {
            return EXIT_NUMERICAL;
        }
    }
    let report = continuation::FoldReport {
        q,
        n,
        branches: branches
            .iter()
            .map(|b| continuation::FoldEntry { id: b.id, fold_p: b.fold_p, tol_p })
            .collect(),
    };
    if runner.write_json("folds.json", &report).is_err() {
        return EXIT_NUMERICAL;
    }
    let mut gp = String::from(
        "set datafile separator ','\nset xlabel 'p'\nset ylabel 'u(0)'\nset key left\nplot \\\n",
    );
    for b in &branches {
        gp.push_str(&format!("  'branch_{}.csv' using 1:2 skip 1 with points title 'branch {}', \\\n", b.id, b.id));
    }
    gp.push_str("  1 with lines dashtype 2 title 'constant'\npause -1\n");
    if runner.write("diagram.gp", &gp).is_err() {
        return EXIT_NUMERICAL;
    }
    for b in &branches {
        println!(
            "branch {}: {} points, p in [{:.3}, {:.3}], fold_p = {}",
            b.id,
            b.points.len(),
            b.min_p(),
            b.points.iter().map(|pt| pt.p).fold(0.0, f64::max),
            b.fold_p.map(|f| format!("{f:.4}")).unwrap_or_else(|| "n/a".into())
        );
    }
    EXIT_OK
}

fn cmd_eigen(runner: &mut Runner, cfg: &FileConfig) -> i32 {
    let n = cfg.n.unwrap_or(1);
    let k_max = cfg.k_max.unwrap_or(6);
    if k_max < 2 {
        eprintln!("eigen: --k-max must be at least 2");
        return EXIT_USAGE;
    }
    runner.log(format!("eigen N = {n}, k = 2..={k_max}"));
    let mut results = Vec::new();
    for k in 2..=k_max {
        match spectral::radial_neumann_eigenvalue(n, k) {
            Ok(r) => {
                println!("k = {k}: lambda = {:.12} (residual {:.3e})", r.lambda, r.residual);
                results.push(r);
            }
            Err(e) => {
                eprintln!("eigen failed at k = {k}: {e}");
                return EXIT_NUMERICAL;
            }
        }
    }
    match spectral::existence_threshold(n) {
        Ok(t) => println!("existence threshold 2 + lambda_2 = {t:.12}"),
        Err(e) => {
            eprintln!("eigen: {e}");
            return EXIT_NUMERICAL;
        }
    }
    if runner.write_json("eigenvalues.json", &results).is_err() {
        return EXIT_NUMERICAL;
    }
    EXIT_OK
}

fn cmd_converge(runner: &mut Runner, cfg: &FileConfig) -> i32 {
    let (p, q, n) = match (cfg.p, cfg.q, cfg.n) {
        (Some(p), Some(q), Some(n)) => (p, q, n),
        _ => {
            eprintln!("converge: --p, --q and --N are required");
            return EXIT_USAGE;
        }
    };
    let kmax = cfg.kmax.unwrap_or(7);
    let beta = cfg.beta.unwrap_or(0.5);
    let side: Side = match cfg.side.as_deref().unwrap_or("below").parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("converge: {e}");
            return EXIT_USAGE;
        }
    };
    runner.log(format!(
        "converge p_target = {p}, q = {q}, N = {n}, k = 2..={kmax}, side = {side:?}, beta = {beta}"
    ));
    let report = match convergence::run_convergence(p, q, n, kmax, side, beta) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("converge failed: {e}");
            return EXIT_NUMERICAL;
        }
    };
    println!(
        "{:>3} {:>10} {:>12} {:>12} {:>12} {:>12} {:>12}",
        "k", "p_n", "W1p", "Holder", "sup", "|dI|", "|h-1|"
    );
    for s in &report.steps {
        println!(
            "{:>3} {:>10.6} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12.3e}",
            s.k,
            s.p_n,
            s.w1p_diff,
            s.holder_diff,
            s.sup_diff,
            (s.energy_n - report.energy_target).abs(),
            (s.h_of_gs - 1.0).abs()
        );
    }
    for w in &report.warnings {
        runner.log(format!("warning: {w}"));
    }
    if let Some(gap) = report.limit_gap {
        println!("one-sided limit gap (sup) = {gap:.3e}");
    }
    println!("verdict: {}", report.verdict);
    if runner.write_json("convergence.json", &report).is_err() {
        return EXIT_NUMERICAL;
    }
    if report.verdict {
        EXIT_OK
    } else {
        EXIT_NOT_FOUND
    }
}

#[derive(Debug, Serialize)]
struct OracleRoot {
    a: f64,
    time_residual: f64,
    conjugate_b: f64,
}

fn cmd_oracle(runner: &mut Runner, cfg: &FileConfig) -> i32 {
    let (p, q) = match (cfg.p, cfg.q) {
        (Some(p), Some(q)) => (p, q),
        _ => {
            eprintln!("oracle: --p and --q are required");
            return EXIT_USAGE;
        }
    };
    if !(p > 1.0 && q > p) {
        eprintln!("oracle: need 1 < p < q");
        return EXIT_USAGE;
    }
    runner.log(format!("oracle p = {p}, q = {q}"));
    let roots = match timemap::oracle_solve(p, q) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("oracle failed: {e}");
            return EXIT_NUMERICAL;
        }
    };
    let mut rows = Vec::new();
    for a in roots {
        let (t, b) = match (timemap::time_map(a, p, q), timemap::conjugate_endpoint(a, p, q)) {
            (Ok(t), Ok(b)) => (t, b),
            _ => {
                eprintln!("oracle: residual evaluation failed at a = {a}");
                return EXIT_NUMERICAL;
            }
        };
        rows.push(OracleRoot { a, time_residual: (t - 1.0).abs(), conjugate_b: b });
    }
    println!("{}", serde_json::to_string_pretty(&rows).expect("serializable"));
    if runner.write_json("oracle.json", &rows).is_err() {
        return EXIT_NUMERICAL;
    }
    EXIT_OK
}

#[derive(Debug, Serialize)]
struct CrosscheckCell {
    p: f64,
    q: f64,
    oracle_roots: usize,
    shooter_roots: usize,
    max_mismatch: f64,
}

fn cmd_crosscheck(runner: &mut Runner, cfg: &FileConfig) -> i32 {
    if cfg.n.unwrap_or(1) != 1 {
        eprintln!("crosscheck: the time-map oracle exists only for N = 1");
        return EXIT_USAGE;
    }
    let cells: Vec<(f64, f64)> = match (cfg.p, cfg.q) {
        (Some(p), Some(q)) => vec![(p, q)],
        (None, None) => {
            let ps = [1.5, 1.8, 2.0, 2.5, 3.0];
            let qs = [10.0, 30.0, 60.0];
            ps.iter().flat_map(|&p| qs.iter().map(move |&q| (p, q))).filter(|&(p, q)| q > p).collect()
        }
        _ => {
            eprintln!("crosscheck: give both --p and --q, or neither");
            return EXIT_USAGE;
        }
    };
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    let mut counts_agree = true;
    for (p, q) in cells {
        let cell = match crosscheck_cell(p, q, cfg) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("crosscheck ({p}, {q}) failed: {e}");
                return EXIT_NUMERICAL;
            }
        };
        println!(
            "p = {p:<4} q = {q:<4} roots {}/{} max |u0 - a| = {:.3e}",
            cell.shooter_roots, cell.oracle_roots, cell.max_mismatch
        );
        worst = worst.max(cell.max_mismatch);
        counts_agree &= cell.shooter_roots == cell.oracle_roots;
        rows.push(cell);
    }
    runner.log(format!("crosscheck worst mismatch {worst:.3e}, counts agree: {counts_agree}"));
    if runner.write_json("crosscheck.json", &rows).is_err() {
        return EXIT_NUMERICAL;
    }
    if counts_agree && worst <= 1e-6 {
        EXIT_OK
    } else {
        EXIT_NOT_FOUND
    }
}

fn crosscheck_cell(p: f64, q: f64, cfg: &FileConfig) -> plap::Result<CrosscheckCell> {
    let params = ProblemParams::new(p, q, 1)?;
    let oracle = timemap::oracle_solve(p, q)?;
    let sols = shooter::solve_report(&params, cfg.n_scan.unwrap_or(400), &shoot_config(cfg))?
        .solutions;
    let shooter_roots: Vec<f64> =
        sols.iter().filter(|s| !s.is_constant()).map(|s| s.u0).collect();
    let mut max_mismatch = 0.0f64;
    for &u0 in &shooter_roots {
        let best =
            oracle.iter().map(|&a| (u0 - a).abs()).fold(f64::INFINITY, f64::min);
        max_mismatch = max_mismatch.max(best);
    }
    for &a in &oracle {
        let best =
            shooter_roots.iter().map(|&u0| (u0 - a).abs()).fold(f64::INFINITY, f64::min);
        max_mismatch = max_mismatch.max(best);
    }
    if oracle.is_empty() && shooter_roots.is_empty() {
        max_mismatch = 0.0;
    }
    Ok(CrosscheckCell {
        p,
        q,
        oracle_roots: oracle.len(),
        shooter_roots: shooter_roots.len(),
        max_mismatch,
    })
}

fn shoot_config(cfg: &FileConfig) -> ShootConfig {
    let mut sc = ShootConfig::default();
    if let Some(t) = cfg.tol_ode {
        sc.tol_ode = t;
    }
    if let Some(t) = cfg.tol_bvp {
        sc.tol_bvp = t;
    }
    if let Some(t) = cfg.tol_mono {
        sc.tol_mono = t;
    }
    if let Some(n) = cfg.n_out {
        sc.n_out = n;
    }
    sc
}

/// Flags override config-file values; remaining gaps use defaults downstream.
fn merge(cli: &Cli) -> Result<FileConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let body = fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            serde_json::from_str::<FileConfig>(&body)
                .map_err(|e| format!("bad config {}: {e}", path.display()))?
        }
        None => FileConfig::default(),
    };
    match &cli.command {
        Command::Solve(a) => {
            cfg.p = a.p.or(cfg.p);
            cfg.q = a.q.or(cfg.q);
            cfg.n = a.n.or(cfg.n);
            cfg.n_scan = a.n_scan.or(cfg.n_scan);
            if a.require_nonconstant {
                cfg.require_nonconstant = Some(true);
            }
        }
        Command::Bifurcate(a) => {
            cfg.q = a.q.or(cfg.q);
            cfg.n = a.n.or(cfg.n);
            cfg.p_min = a.p_min.or(cfg.p_min);
            cfg.p_max = a.p_max.or(cfg.p_max);
            cfg.p_step = a.p_step.or(cfg.p_step);
            cfg.tol_p = a.tol_p.or(cfg.tol_p);
            cfg.n_scan = a.n_scan.or(cfg.n_scan);
        }
        Command::Eigen(a) => {
            cfg.n = a.n.or(cfg.n);
            cfg.k_max = a.k_max.or(cfg.k_max);
        }
        Command::Converge(a) => {
            cfg.p = a.p.or(cfg.p);
            cfg.q = a.q.or(cfg.q);
            cfg.n = a.n.or(cfg.n);
            cfg.kmax = a.kmax.or(cfg.kmax);
            cfg.side = a.side.clone().or(cfg.side);
            cfg.beta = a.beta.or(cfg.beta);
        }
        Command::Oracle(a) => {
            cfg.p = a.p.or(cfg.p);
            cfg.q = a.q.or(cfg.q);
        }
        Command::Crosscheck(a) => {
            cfg.p = a.p.or(cfg.p);
            cfg.q = a.q.or(cfg.q);
            cfg.n = a.n.or(cfg.n);
        }
    }
    cfg.output_dir = std::env::var_os("PLAP_OUTPUT_DIR")
        .map(PathBuf::from)
        .or_else(|| cli.output_dir.clone())
        .or(cfg.output_dir.take());
    cfg.jobs = cli.jobs.or(cfg.jobs);
    Ok(cfg)
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Solve(_) => "solve",
        Command::Bifurcate(_) => "bifurcate",
        Command::Eigen(_) => "eigen",
        Command::Converge(_) => "converge",
        Command::Oracle(_) => "oracle",
        Command::Crosscheck(_) => "crosscheck",
    }
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp
                | clap::error::ErrorKind::DisplayVersion => {
                    print!("{e}");
                    return EXIT_OK;
                }
                _ => EXIT_USAGE,
            };
            eprint!("{e}");
            return code;
        }
    };
    let cfg = match merge(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("{msg}");
            return EXIT_USAGE;
        }
    };
    if let Some(jobs) = cfg.jobs {
        if rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().is_err() {
            eprintln!("warning: worker pool already initialized");
        }
    }
    let out_dir = cfg.output_dir.clone().unwrap_or_else(|| PathBuf::from("plap-out"));
    let mut runner = match Runner::new(out_dir) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cannot create output directory: {e}");
            return EXIT_NUMERICAL;
        }
    };
    let code = match &cli.command {
        Command::Solve(a) => {
            cmd_solve(&mut runner, &cfg, a.require_nonconstant || cfg.require_nonconstant.unwrap_or(false))
        }
        Command::Bifurcate(_) => cmd_bifurcate(&mut runner, &cfg),
        Command::Eigen(_) => cmd_eigen(&mut runner, &cfg),
        Command::Converge(_) => cmd_converge(&mut runner, &cfg),
        Command::Oracle(_) => cmd_oracle(&mut runner, &cfg),
        Command::Crosscheck(_) => cmd_crosscheck(&mut runner, &cfg),
    };
    if let Err(e) = runner.finish(command_name(&cli.command), &cfg) {
        eprintln!("cannot persist run config: {e}");
        return EXIT_NUMERICAL;
    }
    code
}

fn main() {
    std::process::exit(run());
}
