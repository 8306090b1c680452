//! Command-line front end: Hall bases, normal forms, subgroup lattices,
//! mu-bar invariants, the Sato-Levine calculus, and the verification suite.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use num_traits::Zero;

use commcalc::hall::{witt_count, witt_multidegree, HallBasis, HallOrder};
use commcalc::milnor::{self, DeltaMode, MuEngine};
use commcalc::sato_levine::{
    beta_accumulate, beta_tilde, invariance_condition, surgery_determinant,
    three_component_special_s, Rat,
};
use commcalc::subgroups::LatticeOrder;
use commcalc::words::Word;

use commcalc_cli::verify;

/// Default class caps per rank; beyond these the basis sizes leave desk
/// scale. Raise with --max-q if you mean it.
fn default_class_cap(rank: usize) -> usize {
    match rank {
        0..=2 => 7,
        3 => 5,
        _ => 4,
    }
}

#[derive(Parser)]
#[command(
    name = "commcalc",
    version,
    about = "Commutator calculus in free and free-nilpotent groups"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print a Hall basis of basic commutators.
    Hall(HallArgs),
    /// Hall-basis normal form of a word in the free nilpotent group.
    Nf(NfArgs),
    /// Build a subgroup lattice from a named generator scheme.
    Subgroup(SubgroupArgs),
    /// Mu-bar invariants of a longitude presentation.
    Mu(MuArgs),
    /// Sato-Levine invariant and linking-determinant jumps.
    Beta(BetaArgs),
    /// Run the verification suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct HallArgs {
    /// Number of generators.
    #[arg(long = "gens")]
    gens: usize,
    /// Largest weight to enumerate.
    #[arg(long = "max-weight")]
    max_weight: usize,
    /// Restrict to one multidegree, e.g. `2,1`.
    #[arg(long)]
    multidegree: Option<String>,
}

#[derive(Args)]
struct NfArgs {
    #[arg(long = "gens")]
    gens: usize,
    /// Work modulo the q-th lower central term.
    #[arg(long)]
    q: usize,
    /// Raise the per-rank class cap.
    #[arg(long = "max-q")]
    max_q: Option<usize>,
    /// The word, in the expression grammar.
    word: String,
}

#[derive(Args)]
struct SubgroupArgs {
    #[arg(long = "gens")]
    gens: usize,
    #[arg(long)]
    q: usize,
    #[arg(long = "max-q")]
    max_q: Option<usize>,
    /// Scheme: gamma:n | mu:k | mu27:k | mu28:k | delta:k | deltatower:k |
    /// epsilon:n | nu:n | nk:k | derived2.
    #[arg(long)]
    scheme: String,
    /// Word-length bound for instantiation (default 4 for rank <= 2, else 2).
    #[arg(long = "len")]
    len: Option<usize>,
    /// Test membership of a word.
    #[arg(long)]
    contains: Option<String>,
    /// Print the Hermite form of one weight section.
    #[arg(long)]
    section: Option<usize>,
    /// Compare against a second scheme.
    #[arg(long)]
    compare: Option<String>,
    /// Also rebuild at len-1 and report a stabilization flag.
    #[arg(long)]
    stable: bool,
}

#[derive(Args)]
struct MuArgs {
    /// Presentation file (m=, q=, l<i>= lines).
    #[arg(long)]
    file: Option<PathBuf>,
    /// One multi-index, digits or comma separated: `231` or `2,3,1`.
    #[arg(long)]
    index: Option<String>,
    /// Print every invariant of length 2..=N.
    #[arg(long = "all-upto")]
    all_upto: Option<usize>,
    /// Indeterminacy convention: gcd over order-preserving subsequences
    /// only (`subseq`), or additionally closed under cyclic rotation
    /// (`milnor`).
    #[arg(long = "delta-mode", value_parser = ["subseq", "milnor"], default_value = "subseq")]
    delta_mode: String,
    /// Classify a multi-index for extraction from the level-k quotient.
    #[arg(long)]
    classify: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    /// Emit the level-k quotient group presentation.
    #[arg(long = "emit-gk")]
    emit_gk: Option<usize>,
    /// Evaluate the relation set on weight-n commutator numbers.
    #[arg(long)]
    star: Option<usize>,
    /// Check cyclic symmetry at the given length.
    #[arg(long)]
    cyclic: Option<usize>,
    /// Count independent invariants of the given length.
    #[arg(long = "count-independent")]
    count_independent: Option<usize>,
    #[arg(long = "gens")]
    gens: Option<usize>,
}

#[derive(Args)]
struct BetaArgs {
    /// Trace file (a=, base=, record lines).
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Special diagonals for three components: `a12,a13,a23`.
    #[arg(long = "special-s")]
    special_s: Option<String>,
    /// Diagonal for the jump accumulation, comma-separated rationals.
    #[arg(long)]
    s: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run a single check by id.
    #[arg(long)]
    only: Option<String>,
    /// Write the structured report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Seed for the randomized checks (recorded in the report).
    #[arg(long)]
    seed: Option<u64>,
    /// List check ids and exit.
    #[arg(long)]
    list: bool,
}

fn main() -> ExitCode {
    // Die quietly when the output pipe closes (e.g. `commcalc hall | head`).
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Hall(args) => cmd_hall(args)?,
        Cmd::Nf(args) => cmd_nf(args)?,
        Cmd::Subgroup(args) => cmd_subgroup(args)?,
        Cmd::Mu(args) => cmd_mu(args)?,
        Cmd::Beta(args) => cmd_beta(args)?,
        Cmd::Verify(args) => return cmd_verify(args),
    }
    Ok(ExitCode::SUCCESS)
}

fn check_class(rank: usize, q: usize, max_q: Option<usize>) -> Result<()> {
    let cap = max_q.unwrap_or_else(|| default_class_cap(rank));
    if q > cap {
        bail!(
            "q={} exceeds the default cap {} for {} generators; pass --max-q to override",
            q,
            cap,
            rank
        );
    }
    Ok(())
}

fn cmd_hall(args: HallArgs) -> Result<()> {
    let basis = HallBasis::generate(args.gens, args.max_weight, HallOrder::Standard)?;
    let filter: Option<Vec<u32>> = match &args.multidegree {
        Some(text) => Some(
            text.split(',')
                .map(|t| t.trim().parse::<u32>().context("bad multidegree entry"))
                .collect::<Result<_>>()?,
        ),
        None => None,
    };
    if let Some(md) = &filter {
        if md.len() != args.gens {
            bail!("multidegree needs {} entries", args.gens);
        }
    }
    println!("# ordinal weight multidegree commutator");
    for e in basis.elems() {
        if let Some(md) = &filter {
            if &e.multidegree != md {
                continue;
            }
        }
        let md: Vec<String> = e.multidegree.iter().map(|c| c.to_string()).collect();
        println!(
            "{:>4} {:>3}  ({})  {}",
            e.ordinal,
            e.weight,
            md.join(","),
            basis.bracket_string(e.ordinal)
        );
    }
    for n in 1..=args.max_weight {
        println!(
            "# weight {}: {} elements (witt {})",
            n,
            basis.stratum(n).len(),
            witt_count(args.gens, n)
        );
    }
    if let Some(md) = &filter {
        println!("# multidegree count: {}", witt_multidegree(md));
    }
    Ok(())
}

fn cmd_nf(args: NfArgs) -> Result<()> {
    check_class(args.gens, args.q, args.max_q)?;
    let ctx = verify::shared_ctx(args.gens, args.q);
    let word = Word::parse(&args.word, args.gens)?;
    let e = ctx.normal_form(&word)?;
    println!("# ordinal weight commutator exponent");
    let mut any = false;
    for (ord, v) in e.iter_nonzero() {
        any = true;
        println!(
            "{:>4} {:>3}  {}  {}",
            ord,
            ctx.basis().elem(ord).weight,
            ctx.basis().bracket_string(ord),
            v
        );
    }
    if !any {
        println!("# trivial modulo class {}", args.q);
    }
    Ok(())
}

fn cmd_subgroup(args: SubgroupArgs) -> Result<()> {
    check_class(args.gens, args.q, args.max_q)?;
    let scheme = verify::scheme_from_str(&args.scheme)?;
    let len = args.len.unwrap_or(if args.gens <= 2 { 4 } else { 2 });
    let lat = verify::shared_lattice(&scheme, args.gens, args.q, len)?;
    let ctx = verify::shared_ctx(args.gens, args.q);

    println!(
        "# scheme {} at rank {}, class {}, len {}",
        scheme, args.gens, args.q, len
    );
    let (total, _preview) = verify::instantiation_preview(&scheme, args.gens, args.q, len, 0)?;
    println!("# instantiated generators: {}", total);
    println!("# pivots: {}", lat.pivot_count());
    for n in 1..args.q {
        let pivots = lat.pivots(n);
        if pivots.is_empty() {
            continue;
        }
        println!("weight {}:", n);
        for p in pivots {
            let parts: Vec<String> = p
                .element
                .iter_nonzero()
                .map(|(ord, v)| format!("{}^{}", ctx.basis().bracket_string(ord), v))
                .collect();
            println!("  {}", parts.join(" * "));
        }
    }
    if args.stable {
        if len == 0 {
            println!("stability: trivially stable at len 0");
        } else {
            let smaller = verify::shared_lattice(&scheme, args.gens, args.q, len - 1)?;
            let stable = lat.compare(&smaller)? == LatticeOrder::Equal;
            println!(
                "stability vs len {}: {}",
                len - 1,
                if stable { "stable" } else { "NOT stable" }
            );
        }
    }
    if let Some(n) = args.section {
        if n == 0 || n >= args.q {
            bail!("section weight must be in 1..q");
        }
        let sec = lat.section(n);
        println!(
            "section weight {} ({} rows x {} cols, Hermite):",
            n,
            sec.rows(),
            sec.cols()
        );
        for i in 0..sec.rows() {
            let row: Vec<String> = (0..sec.cols()).map(|j| sec.at(i, j).to_string()).collect();
            println!("  [{}]", row.join(", "));
        }
        match lat.section_index(n) {
            Some(ix) => println!("index in the full weight-{} lattice: {}", n, ix),
            None => println!(
                "index in the full weight-{} lattice: infinite (rank deficient)",
                n
            ),
        }
    }
    if let Some(text) = &args.contains {
        let word = Word::parse(text, args.gens)?;
        let verdict = lat.contains_word(&word)?;
        println!(
            "contains {}: {}",
            text,
            if verdict {
                "yes"
            } else {
                "no (membership in the computed under-approximation)"
            }
        );
    }
    if let Some(other) = &args.compare {
        let scheme2 = verify::scheme_from_str(other)?;
        let lat2 = verify::shared_lattice(&scheme2, args.gens, args.q, len)?;
        let order = lat.compare(&lat2)?;
        println!("compare {} vs {}: {:?}", scheme, scheme2, order);
    }
    Ok(())
}

fn parse_index(text: &str) -> Result<Vec<usize>> {
    if text.contains(',') {
        text.split(',')
            .map(|t| t.trim().parse::<usize>().context("bad index entry"))
            .collect()
    } else {
        text.bytes()
            .map(|b| {
                if b.is_ascii_digit() && b > b'0' {
                    Ok((b - b'0') as usize)
                } else {
                    Err(anyhow!("bad index digit `{}`", b as char))
                }
            })
            .collect()
    }
}

fn cmd_mu(args: MuArgs) -> Result<()> {
    if let Some(text) = &args.classify {
        let k = args.k.ok_or_else(|| anyhow!("--classify needs --k"))?;
        let idx = parse_index(text)?;
        let class = milnor::classify_mu(&idx, k)?;
        println!("{:?}", class);
        return Ok(());
    }
    if let Some(length) = args.count_independent {
        let m = args
            .gens
            .ok_or_else(|| anyhow!("--count-independent needs --gens"))?;
        println!("{}", milnor::count_independent_mu(m, length));
        return Ok(());
    }
    let file = args
        .file
        .as_ref()
        .ok_or_else(|| anyhow!("--file is required here"))?;
    let lp = verify::presentation_from_file(file)?;
    if let Some(k) = args.emit_gk {
        print!("{}", milnor::emit_gk_presentation(&lp, k)?);
        return Ok(());
    }
    let mode = if args.delta_mode == "milnor" {
        DeltaMode::MilnorCyclic
    } else {
        DeltaMode::Subsequences
    };
    let m = lp.components;
    let q = lp.class;
    let engine = MuEngine::new(lp, mode);
    println!("# delta mode: {}", args.delta_mode);
    if let Some(text) = &args.index {
        let idx = parse_index(text)?;
        let v = engine.mu(&idx)?;
        println!(
            "mu({}) = {} (raw {}, modulus {})",
            text, v.residue, v.raw, v.modulus
        );
        return Ok(());
    }
    if let Some(n) = args.star {
        let ctx = verify::shared_ctx(m, q);
        let report = engine.relations_on_numbers(&ctx, n)?;
        for (ord, sum) in &report.sums {
            println!("relation at {}: {}", ctx.basis().bracket_string(*ord), sum);
        }
        println!(
            "relation set: {}",
            if report.pass { "pass" } else { "fail" }
        );
        return Ok(());
    }
    if let Some(length) = args.cyclic {
        let ctx = verify::shared_ctx(m, q);
        let report = engine.cyclic_symmetry(&ctx, length)?;
        for (idx, rot) in &report.failures {
            println!("asymmetric: {:?} vs rotation {:?}", idx, rot);
        }
        println!(
            "cyclic symmetry: {}; relation set: {}",
            if report.pass { "pass" } else { "fail" },
            if report.star_pass { "pass" } else { "fail" }
        );
        return Ok(());
    }
    let upto = args.all_upto.unwrap_or(q - 1).min(q - 1);
    for len in 2..=upto {
        for idx in all_indices(m, len) {
            let v = engine.mu(&idx)?;
            if v.raw.is_zero() && v.modulus.is_zero() {
                continue;
            }
            let text: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
            println!(
                "mu({}) = {} (raw {}, modulus {})",
                text.join(""),
                v.residue,
                v.raw,
                v.modulus
            );
        }
    }
    Ok(())
}

fn all_indices(m: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|v| {
                (1..=m).map(move |i| {
                    let mut t = v.clone();
                    t.push(i);
                    t
                })
            })
            .collect();
    }
    out
}

fn parse_rat_list(text: &str) -> Result<Vec<Rat>> {
    text.split(',')
        .map(|t| {
            let t = t.trim();
            if let Some((n, d)) = t.split_once('/') {
                Ok(Rat::new(n.trim().parse()?, d.trim().parse()?))
            } else {
                Ok(Rat::from(t.parse::<num_bigint::BigInt>()?))
            }
        })
        .collect()
}

fn cmd_beta(args: BetaArgs) -> Result<()> {
    if let Some(text) = &args.special_s {
        let parts: Vec<i64> = text
            .split(',')
            .map(|t| t.trim().parse::<i64>().context("bad linking entry"))
            .collect::<Result<_>>()?;
        let [a12, a13, a23] = parts.as_slice() else {
            bail!("--special-s needs a12,a13,a23");
        };
        let linking = vec![
            vec![0, *a12, *a13],
            vec![*a12, 0, *a23],
            vec![*a13, *a23, 0],
        ];
        for positive in [true, false] {
            let s = three_component_special_s(*a12, *a13, *a23, positive)?;
            let minors = invariance_condition(&s, &linking)?;
            let det = surgery_determinant(&s, &linking)?;
            println!(
                "sign {}: s = ({}, {}, {}); minors vanish: {}; det = {}",
                if positive { "+" } else { "-" },
                s[0],
                s[1],
                s[2],
                minors.iter().all(|&b| b),
                det
            );
        }
        return Ok(());
    }
    let file = args
        .trace
        .as_ref()
        .ok_or_else(|| anyhow!("--trace or --special-s required"))?;
    let trace = verify::trace_from_file(file)?;
    match &args.s {
        None => {
            if trace.components == 2 {
                println!("generalized Sato-Levine value: {}", beta_tilde(&trace)?);
            } else {
                bail!(
                    "trace has {} components; pass --s for the determinant jump sum",
                    trace.components
                );
            }
        }
        Some(text) => {
            let s = parse_rat_list(text)?;
            let minors = invariance_condition(&s, &trace.linking)?;
            println!("invariance minors vanish per component: {:?}", minors);
            println!("accumulated value: {}", beta_accumulate(&trace, &s)?);
        }
    }
    Ok(())
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode> {
    if args.list {
        for def in verify::checks() {
            println!("{:<28} {}", def.id, def.params);
        }
        return Ok(ExitCode::SUCCESS);
    }
    let config = verify::Config {
        seed: args.seed.unwrap_or(verify::DEFAULT_SEED),
        only: args.only.clone(),
    };
    if let Some(only) = &config.only {
        if !verify::check_ids().contains(&only.as_str()) {
            bail!("unknown check id `{}` (try --list)", only);
        }
    }
    let report = verify::run(&config);
    if report.checks.is_empty() {
        bail!("no checks selected");
    }
    for rec in &report.checks {
        println!("{}", rec.line());
    }
    println!(
        "{} of {} checks passed (seed {})",
        report
            .checks
            .iter()
            .filter(|r| r.verdict == verify::Verdict::Pass)
            .count(),
        report.checks.len(),
        report.seed
    );
    if let Some(path) = &args.report {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
        println!("report written to {}", path.display());
    }
    Ok(if report.all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
