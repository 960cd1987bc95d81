//! Command-line front-end: parse an input system, run the decision pipeline
//! and emit text or JSON reports; re-verify previously emitted witnesses.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num::Signed;
use serde::{Deserialize, Serialize};

use multizero_core::signs::lambda_sets;
use multizero_core::witness::{decimal_string, default_tolerance};
use multizero_core::{
    emit_matrices, network_to_system, parse_network, parse_system, verify_witness,
    AugmentedVerticalSystem, EngineOptions, PartitionMode, Rat, Verdict, VerdictKind, Witness,
};

#[derive(Parser)]
#[command(
    name = "multizero",
    version,
    about = "Decides whether a parametrized polynomial system admits two distinct positive zeros"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the decision pipeline on a system and report the verdict.
    Analyze(AnalyzeArgs),
    /// Re-verify a previously emitted witness against its input system.
    Certify(CertifyArgs),
    /// Convert a reaction network into the matrix block format.
    Convert(ConvertArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Network,
    Matrices,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Partitions {
    Max,
    Singleton,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input file (.crn network or .mat matrix blocks)
    #[arg(long)]
    input: PathBuf,
    /// Input format; inferred from the file extension when omitted
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Row/column partition mode
    #[arg(long, value_enum, default_value = "max")]
    partitions: Partitions,
    /// Working precision of the exponential approximations, in bits
    #[arg(long, default_value_t = 128)]
    precision: u32,
    /// Emit the report as JSON on standard output
    #[arg(long)]
    json: bool,
    /// Skip witness construction
    #[arg(long)]
    no_witness: bool,
    /// Seed recorded in the report; the decision path is deterministic
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (falls back to MULTIZERO_THREADS, then all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CertifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Witness or report JSON produced by `analyze --json`
    #[arg(long)]
    witness: PathBuf,
    /// Verification tolerance (rational, e.g. 1/18446744073709551616)
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct ConvertArgs {
    #[arg(long)]
    input: PathBuf,
    /// Output form; only `matrices` is defined
    #[arg(long, default_value = "matrices")]
    emit: String,
}

#[derive(Serialize, Deserialize, PartialEq, Debug, Clone)]
struct InputSummary {
    n: usize,
    mbar: usize,
    sbar: usize,
    lbar: usize,
    l: usize,
    partition_mode: String,
    pbar_forest: bool,
    p_forest: bool,
}

#[derive(Serialize, Deserialize, PartialEq, Debug, Clone)]
struct CertificateJson {
    sigma: Vec<(i8, i8)>,
    s_matrix: Vec<Vec<i8>>,
    rho: Vec<String>,
    delta: Vec<String>,
    delta_sign: Vec<i8>,
    z: Vec<String>,
    branch_trace: Vec<String>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug, Clone)]
struct WitnessJson {
    precision: u32,
    kappa: Vec<String>,
    b: Vec<String>,
    x: Vec<String>,
    y: Vec<String>,
    rho_bar: Vec<String>,
    delta: Vec<String>,
    z: Vec<String>,
}

#[derive(Serialize, Deserialize, PartialEq, Debug, Clone)]
struct ResidualsJson {
    c_y: String,
    c_x: String,
    l_y: String,
    l_x: String,
    separation: String,
    tolerance: String,
    pass: bool,
}

#[derive(Serialize, Deserialize, PartialEq, Debug, Clone)]
struct StatsJson {
    orientations: usize,
    sign_matrices: usize,
    lp_calls: usize,
    branches: usize,
}

#[derive(Serialize, Deserialize, PartialEq, Debug, Clone)]
struct Report {
    input: InputSummary,
    verdict: String,
    certificates: Vec<CertificateJson>,
    witness: Option<WitnessJson>,
    residuals: Option<ResidualsJson>,
    stats: StatsJson,
    seed: Option<u64>,
    wall_ms: u64,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = Cli::parse();
    let outcome = match cli.cmd {
        Cmd::Analyze(a) => cmd_analyze(&a),
        Cmd::Certify(a) => cmd_certify(&a),
        Cmd::Convert(a) => cmd_convert(&a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn infer_format(path: &Path, flag: Option<Format>) -> Result<Format> {
    if let Some(f) = flag {
        return Ok(f);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("crn") => Ok(Format::Network),
        Some("mat") => Ok(Format::Matrices),
        other => bail!(
            "cannot infer format from extension {:?}; pass --format",
            other.unwrap_or("")
        ),
    }
}

fn load_system(path: &Path, flag: Option<Format>) -> Result<AugmentedVerticalSystem> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let sys = match infer_format(path, flag)? {
        Format::Network => {
            let net = parse_network(&text)?;
            network_to_system(&net)?
        }
        Format::Matrices => parse_system(&text)?,
    };
    Ok(sys)
}

fn configure_threads(flag: Option<usize>) {
    let n = flag.or_else(|| {
        std::env::var("MULTIZERO_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n {
        // ignore failure if a global pool already exists
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// Decimal digits carrying `bits` bits of precision.
fn digits_for(bits: u32) -> u32 {
    bits * 30103 / 100000 + 2
}

fn exit_code(kind: VerdictKind) -> i32 {
    match kind {
        VerdictKind::Precluded => 0,
        VerdictKind::Multiple => 10,
        VerdictKind::MultipleNumeric => 11,
        VerdictKind::Inconclusive => 20,
    }
}

fn verdict_name(kind: VerdictKind) -> &'static str {
    match kind {
        VerdictKind::Precluded => "PRECLUDED",
        VerdictKind::Multiple => "MULTIPLE",
        VerdictKind::MultipleNumeric => "MULTIPLE_NUMERIC",
        VerdictKind::Inconclusive => "INCONCLUSIVE",
    }
}

fn rats_to_strings(v: &[Rat]) -> Vec<String> {
    v.iter().map(|x| x.to_string()).collect()
}

fn rats_to_decimals(v: &[Rat], digits: u32) -> Vec<String> {
    v.iter().map(|x| decimal_string(x, digits)).collect()
}

fn build_report(
    sys: &AugmentedVerticalSystem,
    verdict: &Verdict,
    mode: Partitions,
    seed: Option<u64>,
    wall_ms: u64,
) -> Report {
    let red = &verdict.reduction;
    let digits = verdict
        .witness
        .as_ref()
        .map(|w| digits_for(w.precision))
        .unwrap_or(40);
    Report {
        input: InputSummary {
            n: sys.n(),
            mbar: sys.mbar(),
            sbar: sys.sbar(),
            lbar: red.pbar.cols(),
            l: red.l(),
            partition_mode: match mode {
                Partitions::Max => "max".into(),
                Partitions::Singleton => "singleton".into(),
            },
            pbar_forest: verdict.pbar_forest,
            p_forest: verdict.p_forest,
        },
        verdict: verdict_name(verdict.kind).into(),
        certificates: verdict
            .certificates
            .iter()
            .map(|c| CertificateJson {
                sigma: c.sigma.sigma.clone(),
                s_matrix: (0..c.s_matrix.rows)
                    .map(|i| c.s_matrix.row(i).to_vec())
                    .collect(),
                rho: rats_to_strings(&c.rho),
                delta: rats_to_strings(&c.delta),
                delta_sign: c.delta_sign.clone(),
                z: rats_to_strings(&c.kernel_witness),
                branch_trace: c.branch_trace.clone(),
            })
            .collect(),
        witness: verdict.witness.as_ref().map(|w| WitnessJson {
            precision: w.precision,
            kappa: rats_to_decimals(&w.kappa, digits),
            b: rats_to_decimals(&w.b, digits),
            x: rats_to_decimals(&w.x, digits),
            y: rats_to_decimals(&w.y, digits),
            rho_bar: rats_to_strings(&w.rho_bar),
            delta: rats_to_strings(&w.delta),
            z: rats_to_strings(&w.z),
        }),
        residuals: verdict.report.as_ref().map(|r| ResidualsJson {
            c_y: r.c_y_residual.to_string(),
            c_x: r.c_x_residual.to_string(),
            l_y: r.l_y_residual.to_string(),
            l_x: r.l_x_residual.to_string(),
            separation: r.separation.to_string(),
            tolerance: r.tolerance.to_string(),
            pass: r.pass,
        }),
        stats: StatsJson {
            orientations: verdict.stats.orientations,
            sign_matrices: verdict.stats.sign_matrices,
            lp_calls: verdict.stats.lp_calls,
            branches: verdict.stats.branches,
        },
        seed,
        wall_ms,
    }
}

fn fmt_blocks(blocks: &[Vec<usize>]) -> String {
    blocks
        .iter()
        .map(|b| {
            let inner: Vec<String> = b.iter().map(|i| (i + 1).to_string()).collect();
            format!("{{{}}}", inner.join(","))
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn print_text_report(sys: &AugmentedVerticalSystem, verdict: &Verdict, report: &Report) {
    let red = &verdict.reduction;
    println!("verdict: {}", report.verdict);
    println!(
        "input: n={} mbar={} sbar={} (partitions: {}, reduced forest: {}, simplified forest: {})",
        report.input.n,
        report.input.mbar,
        report.input.sbar,
        report.input.partition_mode,
        report.input.pbar_forest,
        report.input.p_forest
    );
    println!("reduced matrix P\u{0304} ({}x{}):", red.pbar.rows(), red.pbar.cols());
    for i in 0..red.pbar.rows() {
        let row: Vec<String> = red.pbar.row(i).iter().map(|x| x.to_string()).collect();
        println!("  {}", row.join(" "));
    }
    println!("row partition tau: {}", fmt_blocks(&red.tau));
    println!("column partition alpha: {}", fmt_blocks(&red.alpha));
    let gammas: Vec<String> = red.gamma.iter().map(|g| g.to_string()).collect();
    println!("column factors gamma: {}", gammas.join(" "));
    println!("simplified matrix P ({}x{}):", red.p.rows(), red.p.cols());
    for i in 0..red.p.rows() {
        let row: Vec<String> = red.p.row(i).iter().map(|x| x.to_string()).collect();
        println!("  {}", row.join(" "));
    }
    for (ci, cert) in verdict.certificates.iter().enumerate() {
        println!("certificate {}:", ci + 1);
        let sig: Vec<String> = cert
            .sigma
            .sigma
            .iter()
            .map(|(a, b)| format!("({a},{b})"))
            .collect();
        println!("  orientation sigma: {}", sig.join(" "));
        for i in 0..cert.s_matrix.rows {
            let row: Vec<String> = cert.s_matrix.row(i).iter().map(|v| v.to_string()).collect();
            println!("  S row {}: {}", i + 1, row.join(" "));
        }
        let lambda = lambda_sets(&red.p, &cert.sigma, &cert.s_matrix);
        for (i, lr) in lambda.rows.iter().enumerate() {
            let fmt = |v: &Vec<usize>| -> String {
                let inner: Vec<String> = v.iter().map(|j| (j + 1).to_string()).collect();
                format!("{{{}}}", inner.join(","))
            };
            println!(
                "  Lambda row {}: ++{} +-{} 0+{} 0-{} -+{} --{} +0{}",
                i + 1,
                fmt(&lr.pp),
                fmt(&lr.pm),
                fmt(&lr.zp),
                fmt(&lr.zm),
                fmt(&lr.mp),
                fmt(&lr.mm),
                fmt(&lr.pz)
            );
        }
        println!("  rho: {}", rats_to_strings(&cert.rho).join(" "));
        println!("  delta: {}", rats_to_strings(&cert.delta).join(" "));
        let ds: Vec<String> = cert.delta_sign.iter().map(|s| s.to_string()).collect();
        println!("  delta sign: ({})", ds.join(","));
        println!("  z: {}", rats_to_strings(&cert.kernel_witness).join(" "));
        for t in &cert.branch_trace {
            println!("  branch: {t}");
        }
    }
    if let Some(w) = &report.witness {
        println!("witness (precision {} bits):", w.precision);
        println!("  kappa: {}", w.kappa.join(" "));
        println!("  b: {}", w.b.join(" "));
        println!("  x: {}", w.x.join(" "));
        println!("  y: {}", w.y.join(" "));
    }
    if let Some(r) = &report.residuals {
        println!(
            "residuals: C(y)={} C(x)={} L(y)={} L(x)={} separation={} pass={}",
            r.c_y, r.c_x, r.l_y, r.l_x, r.separation, r.pass
        );
    }
    println!(
        "stats: orientations={} sign_matrices={} lp_calls={} branches={} wall={}ms",
        report.stats.orientations,
        report.stats.sign_matrices,
        report.stats.lp_calls,
        report.stats.branches,
        report.wall_ms
    );
    let _ = sys;
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<i32> {
    configure_threads(args.threads);
    let sys = load_system(&args.input, args.format)?;
    let opts = EngineOptions {
        mode: match args.partitions {
            Partitions::Max => PartitionMode::Maximal,
            Partitions::Singleton => PartitionMode::Singleton,
        },
        precision: args.precision,
        construct_witness: !args.no_witness,
        ..EngineOptions::default()
    };
    let start = Instant::now();
    let verdict = multizero_core::decide(&sys, &opts).map_err(|e| anyhow!("{e}"))?;
    let wall_ms = start.elapsed().as_millis() as u64;
    let report = build_report(&sys, &verdict, args.partitions, args.seed, wall_ms);
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        print_text_report(&sys, &verdict, &report);
    }
    Ok(exit_code(verdict.kind))
}

fn parse_number(s: &str) -> Result<Rat> {
    let s = s.trim();
    if let Some(r) = multizero_core::rational::parse_rat(s) {
        return Ok(r);
    }
    // decimal form: [-]int[.frac]
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        bail!("empty number");
    }
    let digits = format!("{int_part}{frac_part}");
    let num: num::BigInt = digits
        .parse()
        .map_err(|_| anyhow!("invalid number '{s}'"))?;
    let den = num::pow(num::BigInt::from(10), frac_part.len());
    let mut r = Rat::new(num, den);
    if neg {
        r = -r;
    }
    Ok(r)
}

fn parse_numbers(v: &[String], what: &str) -> Result<Vec<Rat>> {
    v.iter()
        .map(|s| parse_number(s).with_context(|| format!("in {what}")))
        .collect()
}

fn cmd_certify(args: &CertifyArgs) -> Result<i32> {
    let sys = load_system(&args.input, args.format)?;
    let text = std::fs::read_to_string(&args.witness)
        .with_context(|| format!("reading {}", args.witness.display()))?;
    // accept either a full analyze report or a bare witness object
    let wj: WitnessJson = match serde_json::from_str::<Report>(&text) {
        Ok(rep) => rep
            .witness
            .ok_or_else(|| anyhow!("report contains no witness"))?,
        Err(_) => serde_json::from_str(&text).context("parsing witness JSON")?,
    };
    if wj.x.len() != sys.n() || wj.y.len() != sys.n() {
        bail!(
            "witness has {} coordinates but the system has {} unknowns",
            wj.x.len(),
            sys.n()
        );
    }
    if wj.kappa.len() != sys.mbar() {
        bail!(
            "witness has {} rates but the system has {} monomials",
            wj.kappa.len(),
            sys.mbar()
        );
    }
    if wj.b.len() != sys.l.rows() {
        bail!(
            "witness has {} linear values but L has {} rows",
            wj.b.len(),
            sys.l.rows()
        );
    }
    let w = Witness {
        kappa: parse_numbers(&wj.kappa, "kappa")?,
        b: parse_numbers(&wj.b, "b")?,
        x: parse_numbers(&wj.x, "x")?,
        y: parse_numbers(&wj.y, "y")?,
        z: parse_numbers(&wj.z, "z")?,
        delta: parse_numbers(&wj.delta, "delta")?,
        rho_bar: parse_numbers(&wj.rho_bar, "rho_bar")?,
        precision: wj.precision,
    };
    let tol = match &args.tolerance {
        Some(t) => parse_number(t)?,
        None => default_tolerance(wj.precision),
    };
    if !tol.is_positive() {
        bail!("tolerance must be positive");
    }
    let rep = verify_witness(&sys, &w, &tol);
    println!(
        "C(y)={} C(x)={} L(y)={} L(x)={} separation={} tolerance={}",
        decimal_string(&rep.c_y_residual, 40),
        decimal_string(&rep.c_x_residual, 40),
        decimal_string(&rep.l_y_residual, 40),
        decimal_string(&rep.l_x_residual, 40),
        decimal_string(&rep.separation, 40),
        decimal_string(&rep.tolerance, 40)
    );
    if rep.pass {
        println!("witness verified");
        Ok(0)
    } else {
        println!("witness rejected");
        Ok(2)
    }
}

fn cmd_convert(args: &ConvertArgs) -> Result<i32> {
    if args.emit != "matrices" {
        bail!("unsupported --emit '{}'; only 'matrices' is defined", args.emit);
    }
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let net = parse_network(&text)?;
    let sys = network_to_system(&net)?;
    print!("{}", emit_matrices(&sys));
    Ok(0)
}
