mod svg;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use lfr_core::analysis::{baseline_load, sweep_curve, theorem_load, uniform_grid, variant_load, write_csv};
use lfr_core::model::{format_rational, parse_rational, random_instance, Rational, SystemConfig};
use lfr_core::schemes::{choose_regime, decode_all, deliver, place, SchemePlan, Variant};
use lfr_core::verify::{
    end_to_end_suite, lemma1_exhaustive, minimal_symbols, minrank_fixed_placement, minrank_suite,
    replay, standard_points, ReplayDump,
};

#[derive(Parser)]
#[command(name = "lfr", version, about = "Cache-aided linear function retrieval workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Memory-load curve as CSV, optionally with an SVG chart.
    Curve(CurveArgs),
    /// Place, deliver and decode one random instance.
    Simulate(SimulateArgs),
    /// Run the verification suites, or replay a dump.
    Verify(VerifyArgs),
    /// Reproduce the K = 6, mu = 47/72, lambda = 1/12 example.
    Example1(Example1Args),
    /// Brute-force minrank of one instance under a scheme's placement.
    Minrank(MinrankArgs),
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[derive(clap::Args)]
struct CurveArgs {
    #[arg(long)]
    users: usize,
    #[arg(long, value_parser = rational)]
    lambda: Rational,
    /// Number of equally spaced mu values in [0, 1].
    #[arg(long, conflicts_with = "mu_list", required_unless_present = "mu_list")]
    grid: Option<usize>,
    /// Comma-separated mu values, e.g. `0,1/2,47/72`.
    #[arg(long, value_parser = rational, value_delimiter = ',')]
    mu_list: Option<Vec<Rational>>,
    /// CSV destination (stdout if absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(clap::Args)]
struct SimulateArgs {
    #[arg(long)]
    users: usize,
    #[arg(long, value_parser = rational)]
    mu: Rational,
    #[arg(long, value_parser = rational)]
    lambda: Rational,
    #[arg(long, default_value_t = 2)]
    field: u64,
    /// `auto`, `rho1`, `rho2`, `rho3`, `corner`, `corner:g`, `baseline-unicast` or `baseline-full`.
    #[arg(long, default_value = "auto")]
    variant: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Library size as a multiple of the smallest admissible F.
    #[arg(long, default_value_t = 1)]
    scale: usize,
    /// Write a replayable JSON dump.
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Quick,
    Full,
}

#[derive(clap::Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value_t = Suite::Quick)]
    suite: Suite,
    /// Largest K for the exhaustive peer check; also caps K in the randomized suite.
    #[arg(long, default_value_t = 24)]
    kmax: usize,
    /// Random instances per (point, variant); defaults to 3 (quick) or 20 (full).
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Replay a dump written by `simulate --dump` instead of running the suites.
    #[arg(long)]
    replay: Option<PathBuf>,
}

#[derive(clap::Args)]
struct Example1Args {
    #[arg(long, default_value_t = 7)]
    field: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(clap::Args)]
struct MinrankArgs {
    #[arg(long, default_value_t = 2)]
    users: usize,
    #[arg(long, default_value_t = 2)]
    symbols: usize,
    #[arg(long, default_value_t = 1)]
    rows: usize,
    #[arg(long, default_value_t = 1)]
    cache: usize,
    #[arg(long, default_value_t = 2)]
    field: u64,
    #[arg(long, default_value = "baseline-full")]
    variant: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Largest number of T tuples to enumerate.
    #[arg(long, default_value_t = 1 << 20)]
    limit: u128,
    /// Use the instance and variant stored in a dump.
    #[arg(long)]
    dump: Option<PathBuf>,
}

/// A check ran and did not pass.
#[derive(Debug)]
struct VerificationFailed(String);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerificationFailed>().is_some() {
        return 1;
    }
    match err.downcast_ref::<lfr_core::Error>() {
        Some(lfr_core::Error::Configuration(_) | lfr_core::Error::Capacity { .. }) => 3,
        Some(lfr_core::Error::Domain(_)) => 2,
        _ => 1,
    }
}

fn write_output(path: Option<&PathBuf>, bytes: &[u8]) -> anyhow::Result<()> {
    match path {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display())),
        None => io::stdout().write_all(bytes).context("writing stdout"),
    }
}

fn cmd_curve(args: CurveArgs) -> anyhow::Result<()> {
    let grid = match (&args.mu_list, args.grid) {
        (Some(list), _) => list.clone(),
        (None, Some(n)) => uniform_grid(n),
        (None, None) => unreachable!("clap requires one of the grid flags"),
    };
    let points = sweep_curve(args.users, args.lambda, &grid)?;
    let mut csv = Vec::new();
    write_csv(args.users, &points, &mut csv)?;
    write_output(args.out.as_ref(), &csv)?;
    if let Some(path) = &args.svg {
        fs::write(path, svg::render(args.users, &args.lambda, &points))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn resolve_variant(name: &str, config: &SystemConfig) -> anyhow::Result<Variant> {
    Ok(match name {
        "auto" => theorem_load(config.users, config.mu(), config.lambda())?.chosen_variant,
        "corner" => Variant::Corner(choose_regime(config.users, config.mu())?.groups(config.users)),
        other => other.parse()?,
    })
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    if args.scale == 0 {
        return Err(lfr_core::Error::Domain("--scale must be positive".into()).into());
    }
    let base = minimal_symbols(args.users, args.mu, args.lambda)? as usize;
    let config = SystemConfig::from_fractions(args.users, args.mu, args.lambda, args.field, base * args.scale)?;
    let variant = resolve_variant(&args.variant, &config)?;
    let plan = SchemePlan::new(&config, variant)?;
    let (library, demands) = random_instance(&config, args.seed);
    let caches = place(&plan, &config, &library)?;
    let transcript = deliver(&plan, &config, &demands, &library)?;
    let formula = variant_load(config.users, config.mu(), config.lambda(), variant)?;
    let f = config.symbols as i64;

    println!(
        "K={} F={} L={} M={} q={} variant={variant} seed={}",
        config.users, config.symbols, config.demand_rows, config.cache_size, config.field_order, args.seed
    );
    println!(
        "transmitted {} symbols (load {})",
        transcript.len(),
        format_rational(&Rational::new(transcript.len() as i64, f))
    );
    println!(
        "formula {} ({} symbols)",
        format_rational(&formula),
        formula * f
    );
    for s in transcript.segments() {
        println!("  segment {}: {} symbols", s.label, s.len);
    }
    let expected = demands.evaluate(&library)?;
    let mut failed = 0;
    for (k, (got, want)) in decode_all(&plan, &caches, &transcript, &demands)
        .into_iter()
        .zip(&expected)
        .enumerate()
    {
        let status = match got {
            Ok(v) if &v == want => "ok".to_string(),
            Ok(_) => "wrong result".to_string(),
            Err(e) => e.to_string(),
        };
        if status != "ok" {
            failed += 1;
        }
        println!("user {k}: {status}");
    }
    println!("decoded {}/{}", config.users - failed, config.users);

    if let Some(path) = &args.dump {
        let dump = ReplayDump {
            config,
            variant,
            seed: args.seed,
            library,
            demands,
            transcript: transcript.clone(),
        };
        fs::write(path, dump.to_json()).with_context(|| format!("writing {}", path.display()))?;
    }
    if failed > 0 || Rational::new(transcript.len() as i64, f) != formula {
        bail!(VerificationFailed(format!(
            "{failed} users failed to decode or the length differs from the formula"
        )));
    }
    Ok(())
}

fn cmd_replay(path: &PathBuf) -> anyhow::Result<()> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let dump = ReplayDump::from_json(&text)?;
    let outcome = replay(&dump)?;
    println!("{}", serde_json::to_string_pretty(&outcome)?);
    if !outcome.passed() {
        bail!(VerificationFailed(format!("replay of {} failed", path.display())));
    }
    Ok(())
}

/// Load-curve properties checked without simulation.
fn curve_checks(kmax: usize) -> anyhow::Result<serde_json::Value> {
    let mut dominance_points = 0;
    let mut dominance_violations = Vec::new();
    let grid = uniform_grid(101);
    for (users, lambda) in [(6, Rational::new(1, 15)), (6, Rational::new(1, 10)), (10, Rational::new(1, 50)), (10, Rational::new(1, 10))] {
        for &mu in &grid {
            dominance_points += 1;
            let p = theorem_load(users, mu, lambda)?;
            if p.rho_proposed > p.rho_baseline {
                dominance_violations.push(format!("K={users} lambda={lambda} mu={mu}"));
            }
        }
    }
    let mut corner_points = 0;
    let mut corner_violations = Vec::new();
    for users in 1..=kmax {
        let lambda = Rational::new(1, users as i64);
        for g in 1..=users as i64 {
            corner_points += 1;
            let mu = Rational::new(g - 1, g);
            if theorem_load(users, mu, lambda)?.rho_proposed != baseline_load(users, mu, lambda) {
                corner_violations.push(format!("K={users} g={g}"));
            }
        }
    }
    Ok(json!({
        "passed": dominance_violations.is_empty() && corner_violations.is_empty(),
        "dominance_points": dominance_points,
        "dominance_violations": dominance_violations,
        "corner_points": corner_points,
        "corner_violations": corner_violations,
    }))
}

fn cmd_verify(args: VerifyArgs) -> anyhow::Result<()> {
    if let Some(path) = &args.replay {
        return cmd_replay(path);
    }
    let (k_cap, default_trials, fields, probes): (usize, usize, &[u64], usize) = match args.suite {
        Suite::Quick => (5, 3, &[2, 7], 10),
        Suite::Full => (10, 20, &[2, 3, 7], 50),
    };
    let trials = args.trials.unwrap_or(default_trials);
    let lemma = lemma1_exhaustive(args.kmax)?;
    let points = standard_points(args.kmax.min(k_cap), fields);
    let suite = end_to_end_suite(&points, trials, args.seed)?;
    let curves = curve_checks(args.kmax)?;
    let minrank = minrank_suite(probes, args.seed, 1 << 20)?;
    let minrank_above = minrank.iter().filter(|p| !p.passed()).count();

    let passed = lemma.passed() && suite.passed && curves["passed"] == true && minrank_above == 0;
    let report = json!({
        "suite": match args.suite { Suite::Quick => "quick", Suite::Full => "full" },
        "seed": args.seed,
        "passed": passed,
        "lemma1": lemma,
        "end_to_end": suite,
        "curves": curves,
        "minrank": { "probes": minrank.len(), "above_transcript": minrank_above, "results": minrank },
    });
    let text = serde_json::to_string_pretty(&report)? + "\n";
    write_output(args.report.as_ref(), text.as_bytes())?;
    eprintln!(
        "peer pairs {} ({} violations); {} cases / {} trials ({} failed); curve checks {}; minrank probes {} ({} above)",
        lemma.pairs_checked,
        lemma.violations.len(),
        suite.cases,
        suite.trials,
        suite.failed_cases,
        if curves["passed"] == true { "ok" } else { "FAILED" },
        minrank.len(),
        minrank_above
    );
    if !passed {
        let at = args
            .report
            .as_ref()
            .map_or("stdout".to_string(), |p| p.display().to_string());
        bail!(VerificationFailed(format!("verification failed, report in {at}")));
    }
    Ok(())
}

fn cmd_example1(args: Example1Args) -> anyhow::Result<()> {
    let (mu, lambda) = (Rational::new(47, 72), Rational::new(1, 12));
    let mut ok = true;
    let baseline = baseline_load(6, mu, lambda);
    let proposed = theorem_load(6, mu, lambda)?.rho_proposed;
    println!("K=6 mu=47/72 lambda=1/12 q={}", args.field);
    println!("baseline load {} (expected 25/72)", format_rational(&baseline));
    println!("proposed load {} (expected 5/24)", format_rational(&proposed));
    ok &= baseline == Rational::new(25, 72) && proposed == Rational::new(5, 24);
    for symbols in [72usize, 144] {
        let config = SystemConfig::from_fractions(6, mu, lambda, args.field, symbols)?;
        let (library, demands) = random_instance(&config, args.seed);
        let expected = demands.evaluate(&library)?;
        for (variant, split) in [
            (Variant::Rho1, "F/24 + F/6 = 5F/24"),
            (Variant::Rho2, "F/8 + F/12 = 5F/24"),
        ] {
            let plan = SchemePlan::new(&config, variant)?;
            let caches = place(&plan, &config, &library)?;
            let transcript = deliver(&plan, &config, &demands, &library)?;
            let decoded = decode_all(&plan, &caches, &transcript, &demands)
                .into_iter()
                .zip(&expected)
                .filter(|(got, want)| got.as_ref().is_ok_and(|v| v == *want))
                .count();
            let parts: Vec<String> = transcript
                .segments()
                .iter()
                .map(|s| format!("{}={}", s.label, s.len))
                .collect();
            println!(
                "F={symbols} {variant}: {} symbols [{}], decoded {decoded}/6 (expected {split} = {})",
                transcript.len(),
                parts.join(" "),
                5 * symbols / 24
            );
            ok &= transcript.len() * 24 == 5 * symbols && decoded == 6;
        }
    }
    if !ok {
        bail!(VerificationFailed("example numbers not reproduced".into()));
    }
    Ok(())
}

fn cmd_minrank(args: MinrankArgs) -> anyhow::Result<()> {
    let (config, variant, library, demands) = match &args.dump {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let dump = ReplayDump::from_json(&text)?;
            (dump.config, dump.variant, dump.library, dump.demands)
        }
        None => {
            let config = SystemConfig::new(args.users, args.symbols, args.rows, args.field, args.cache)?;
            let variant = resolve_variant(&args.variant, &config)?;
            let (library, demands) = random_instance(&config, args.seed);
            (config, variant, library, demands)
        }
    };
    let plan = SchemePlan::new(&config, variant)?;
    let caches = place(&plan, &config, &library)?;
    let transcript = deliver(&plan, &config, &demands, &library)?;
    let field = config.field();
    let placements: Vec<_> = caches
        .users
        .iter()
        .map(|c| c.placement_matrix(field, config.symbols))
        .collect();
    let minrank = minrank_fixed_placement(&placements, demands.matrices(), args.limit)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&json!({
            "config": config,
            "variant": variant,
            "minrank": minrank,
            "transcript_len": transcript.len(),
        }))?
    );
    if minrank > transcript.len() {
        bail!(VerificationFailed("minrank exceeds the scheme's transcript length".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Curve(a) => cmd_curve(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Example1(a) => cmd_example1(a),
        Command::Minrank(a) => cmd_minrank(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
