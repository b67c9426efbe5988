//! Command-line front end for the randomized-cache laboratory.
//!
//! Exit codes: 0 success, 2 configuration error, 3 runtime error (I/O,
//! missing inputs), 4 self-check failure, 64 usage error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use mirage_lab::analytics::{
    birthday_accesses, spill_prob_chain, any_bucket_expected_count, BucketBallParams, SpillMethod,
};
use mirage_lab::attacks::{
    baseline_comparison, build_templates, classify, covert_transmit,
};
use mirage_lab::cache::{Cache, MirageCache};
use mirage_lab::cipher::{self, vectors, Algorithm};
use mirage_lab::harness::experiments::{
    baseline_factory, bucket_ball_sweep_csv, comparison_csv, covert_csv, mirage_factory,
    stats_csv, template_store_csv, template_summary_csv, templates_from_store, uniformity_csv,
};
use mirage_lab::harness::{emit_plot, ExperimentConfig, PlotKind, RunWriter};
use mirage_lab::seed::{derive_seed, seeded_rng};
use rand::Rng;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;
const EXIT_CHECK: u8 = 4;
const EXIT_USAGE: u8 = 64;

#[derive(Parser)]
#[command(name = "mirage-lab", version, about = "Randomized-cache simulator and attack harness")]
struct Cli {
    /// Experiment config file (flat `key = value` lines); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; every trial derives its own seed from this value.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Trial count for sampled experiments.
    #[arg(long, global = true)]
    trials: Option<u64>,

    /// Output directory for CSVs, charts and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Set-index cipher.
    #[arg(long, global = true, value_parser = ["present", "prince"])]
    cipher: Option<String>,

    /// Emulate the truncated-key cipher bug.
    #[arg(long, global = true)]
    buggy: bool,

    /// Worker threads; must not change any output bytes.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Verify the block ciphers against published test vectors.
    CipherTest {
        /// Vector file `algorithm,key_hex,plaintext_hex,ciphertext_hex`;
        /// defaults to the bundled set.
        #[arg(long)]
        vectors: Option<PathBuf>,
    },
    /// Chi-square uniformity report for both skews' index distributions.
    Uniformity {
        /// Distinct random addresses to hash.
        #[arg(long, default_value_t = 1 << 21)]
        samples: u64,
    },
    /// Replay an address trace (or random installs) and report cache stats.
    Sim {
        /// Trace file: one 64-bit hex line address per line.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Without a trace: number of uniform random line installs.
        #[arg(long, default_value_t = 1_000_000)]
        installs: u64,
    },
    /// Bucket-and-ball sweep: throws until first spill vs bucket count.
    BucketBall {
        /// Bucket counts to sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1024u64, 4096, 16384, 65536])]
        buckets: Vec<u64>,
        /// Bucket capacity; a bucket reaching it spills.
        #[arg(long, default_value_t = 14)]
        threshold: u64,
        /// Throw budget per run.
        #[arg(long, default_value_t = 100_000_000)]
        max_throws: u64,
        /// Also render the sweep chart.
        #[arg(long)]
        plot: bool,
    },
    /// Closed-form evaluations: spill chain, expected bucket counts, birthday bounds.
    Analytic {
        /// Print birthday-bound access counts.
        #[arg(long)]
        birthday: bool,
        /// Total index bits for the birthday bound.
        #[arg(long, default_value_t = 28)]
        bits: u32,
        /// Target collision probability for the exact birthday bound.
        #[arg(long, default_value_t = 0.5)]
        prob: f64,
        /// Print the spill-probability chain for this many steps.
        #[arg(long)]
        spill_chain: Option<u64>,
        /// Print the expected number of buckets holding exactly this load.
        #[arg(long)]
        expected_at: Option<u64>,
    },
    /// Covert-channel transmission and bit-error report.
    Covert {
        /// Bit string to transmit, e.g. 0110; default is a seeded random sequence.
        #[arg(long)]
        bits: Option<String>,
        /// Length of the random sequence when --bits is not given.
        #[arg(long, default_value_t = 100)]
        nbits: u64,
    },
    /// Build or query probe-miss templates.
    Template {
        #[command(subcommand)]
        action: TemplateAction,
    },
    /// Covert separability on the randomized cache vs a set-associative baseline.
    CompareBaseline,
}

#[derive(Subcommand)]
enum TemplateAction {
    /// Run the template sweep and write store + summary CSVs.
    Build {
        /// Also render the overlaid distribution chart.
        #[arg(long)]
        plot: bool,
    },
    /// Classify an observed probe miss count against a stored template set.
    Classify(ClassifyArgs),
}

#[derive(Args)]
struct ClassifyArgs {
    /// Template store CSV written by `template build`.
    #[arg(long)]
    store: PathBuf,
    /// Observed probe miss count.
    #[arg(long)]
    misses: u64,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                mirage_lab::Error::Config(_)
                | mirage_lab::Error::Parse(_)
                | mirage_lab::Error::Argument(_) => EXIT_CONFIG,
                mirage_lab::Error::Io(_) => EXIT_RUNTIME,
            };
            ExitCode::from(code)
        }
    }
}

fn load_config(cli: &Cli) -> mirage_lab::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_file(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.master_seed = seed;
    }
    if let Some(trials) = cli.trials {
        cfg.trials = trials;
    }
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(cipher) = &cli.cipher {
        let algorithm = Algorithm::parse(cipher)?;
        if algorithm != cfg.cipher {
            // Switching algorithm invalidates file-supplied keys; fall back
            // to the fixed defaults for the new algorithm.
            let keys = mirage_lab::cache::MirageConfig::default_keys(algorithm);
            cfg.cipher = algorithm;
            cfg.key1 = keys.k1().key_bits();
            cfg.key2 = keys.k2().key_bits();
        }
    }
    if cli.buggy {
        cfg.bug_mode = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> mirage_lab::Result<u8> {
    let jobs = cli.jobs;
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| mirage_lab::Error::Config(format!("--jobs: {e}")))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn dispatch(cli: Cli) -> mirage_lab::Result<u8> {
    let cfg = load_config(&cli)?;
    let writer = || RunWriter::new(&cfg.out_dir, cfg.hash(), cfg.master_seed);
    match &cli.command {
        Command::CipherTest { vectors: path } => {
            let contents = match path {
                Some(p) => std::fs::read_to_string(p)?,
                None => vectors::BUNDLED.to_string(),
            };
            let results = vectors::check(&vectors::parse(&contents)?)?;
            let mut failures = 0;
            for r in &results {
                let status = if r.pass { "ok" } else { "FAIL" };
                println!(
                    "{status} {} key={:x} pt={:016x} expected={:016x} got={:016x}",
                    r.vector.algorithm.name(),
                    r.vector.key,
                    r.vector.plaintext,
                    r.vector.ciphertext,
                    r.computed
                );
                failures += u32::from(!r.pass);
            }
            println!("{} vectors, {failures} failures", results.len());
            Ok(if failures == 0 { 0 } else { EXIT_CHECK })
        }

        Command::Uniformity { samples } => {
            let report = cipher::uniformity_report(
                &cfg.key_pair()?,
                cfg.mirage_config(cfg.master_seed)?.index_bits(),
                *samples,
                cfg.master_seed,
                cfg.cipher_mode(),
            )?;
            let bound = report.expected() + report.four_sigma_bound();
            println!(
                "skew1 chi2={:.1} skew2 chi2={:.1} expected={:.0} 4-sigma upper bound={:.1}",
                report.chi_square_skew1,
                report.chi_square_skew2,
                report.expected(),
                bound
            );
            let mut w = writer()?;
            w.write_csv("uniformity.csv", &uniformity_csv(&report))?;
            w.finish()?;
            let uniform = report.chi_square_skew1 <= bound && report.chi_square_skew2 <= bound;
            println!("uniform: {uniform}");
            Ok(if uniform { 0 } else { EXIT_CHECK })
        }

        Command::Sim { trace, installs } => {
            let mc = cfg.mirage_config(cfg.master_seed)?;
            let mut cache = MirageCache::new(mc)?;
            match trace {
                Some(path) => {
                    let contents = std::fs::read_to_string(path)?;
                    for (lineno, raw) in contents.lines().enumerate() {
                        let line = raw.trim();
                        if line.is_empty() || line.starts_with('#') {
                            continue;
                        }
                        let addr = u64::from_str_radix(line.trim_start_matches("0x"), 16)
                            .map_err(|e| {
                                mirage_lab::Error::parse(format!(
                                    "trace line {}: {e}",
                                    lineno + 1
                                ))
                            })?;
                        cache.access(addr);
                    }
                }
                None => {
                    let mut rng = seeded_rng(derive_seed(cfg.master_seed, 0x51b7, 0));
                    for _ in 0..*installs {
                        cache.access(rng.random::<u64>());
                    }
                }
            }
            let stats = cache.stats();
            println!("{}", stats_csv(&stats).trim_end());
            let mut w = writer()?;
            w.write_csv("sim_stats.csv", &stats_csv(&stats))?;
            w.finish()?;
            Ok(0)
        }

        Command::BucketBall {
            buckets,
            threshold,
            max_throws,
            plot,
        } => {
            let csv = bucket_ball_sweep_csv(
                buckets,
                *threshold,
                cfg.trials,
                *max_throws,
                cfg.master_seed,
            )?;
            let mut w = writer()?;
            w.write_csv("bucket_ball_sweep.csv", &csv)?;
            if *plot {
                let svg = emit_plot(&csv, PlotKind::LineSweep)?;
                w.write_raw("bucket_ball_sweep.svg", svg.as_bytes())?;
            }
            w.finish()?;
            println!(
                "swept {} bucket counts x 2 policies x {} trials",
                buckets.len(),
                cfg.trials
            );
            Ok(0)
        }

        Command::Analytic {
            birthday,
            bits,
            prob,
            spill_chain,
            expected_at,
        } => {
            let mut printed = false;
            if *birthday {
                let est = birthday_accesses(*bits, *prob)?;
                println!(
                    "birthday bits={bits}: rule of thumb {} accesses, exact {} accesses (p = {prob})",
                    est.rule_of_thumb, est.exact
                );
                printed = true;
            }
            let params = BucketBallParams::new(
                cfg.mirage_config(cfg.master_seed)?.data_capacity(),
                2 * cfg.sets_per_skew,
                cfg.base_ways as u64,
                cfg.extra_ways as u64,
            )?;
            if let Some(steps) = spill_chain {
                let chain = spill_prob_chain(&params, *steps);
                for (i, p) in chain.iter().enumerate() {
                    println!("spill_chain step={} p={:.6e}", i + 1, p);
                }
                printed = true;
            }
            if let Some(load) = expected_at {
                let exact =
                    any_bucket_expected_count(*load, &params, SpillMethod::BinomialExact)?;
                let poisson = any_bucket_expected_count(*load, &params, SpillMethod::Poisson)?;
                println!(
                    "expected buckets at load {load}: binomial {exact:.6e}, poisson {poisson:.6e}"
                );
                printed = true;
            }
            if !printed {
                return Err(mirage_lab::Error::argument(
                    "analytic: pass --birthday, --spill-chain or --expected-at",
                ));
            }
            Ok(0)
        }

        Command::Covert { bits, nbits } => {
            let bit_vec: Vec<u8> = match bits {
                Some(s) => s
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => Err(mirage_lab::Error::argument(format!(
                            "--bits must be 0s and 1s, got `{other}`"
                        ))),
                    })
                    .collect::<mirage_lab::Result<_>>()?,
                None => {
                    let mut rng = seeded_rng(derive_seed(cfg.master_seed, 0xb175, 0));
                    (0..*nbits).map(|_| u8::from(rng.random::<bool>())).collect()
                }
            };
            let factory = mirage_factory(&cfg)?;
            let report = covert_transmit(&factory, &bit_vec, &cfg.covert_config(), cfg.master_seed)?;
            println!(
                "threshold={:.1} low mean={:.1} high mean={:.1} BER={:.4} over {} bits",
                report.threshold,
                report.low_mean,
                report.high_mean,
                report.ber,
                report.records.len()
            );
            let mut w = writer()?;
            w.write_csv("covert_report.csv", &covert_csv(&report))?;
            w.finish()?;
            Ok(0)
        }

        Command::Template { action } => match action {
            TemplateAction::Build { plot } => {
                let factory = mirage_factory(&cfg)?;
                let templates = build_templates(
                    &factory,
                    &cfg.template_config(),
                    &cfg.template_counts,
                    cfg.trials,
                    cfg.master_seed,
                )?;
                for t in &templates {
                    println!(
                        "accesses={} mean={:.1} stddev={:.1}",
                        t.victim_accesses, t.mean, t.stddev
                    );
                }
                let store = template_store_csv(&templates);
                let mut w = writer()?;
                w.write_csv("template_store.csv", &store)?;
                w.write_csv("template_summary.csv", &template_summary_csv(&templates))?;
                if *plot {
                    let svg = emit_plot(&store, PlotKind::HistogramOverlay)?;
                    w.write_raw("template_distributions.svg", svg.as_bytes())?;
                }
                w.finish()?;
                Ok(0)
            }
            TemplateAction::Classify(args) => {
                let store = std::fs::read_to_string(&args.store)?;
                let templates = templates_from_store(&store)?;
                let result = classify(args.misses, &templates)?;
                println!(
                    "misses={} -> victim_accesses={} confidence={:.3}",
                    args.misses, result.label, result.confidence
                );
                Ok(0)
            }
        },

        Command::CompareBaseline => {
            let mirage = mirage_factory(&cfg)?;
            let baseline = baseline_factory(&cfg);
            let report = baseline_comparison(
                &mirage,
                &baseline,
                &cfg.covert_config(),
                cfg.trials,
                cfg.master_seed,
            )?;
            println!(
                "mirage separability={:.2} baseline separability={:.2}",
                report.mirage.separability, report.baseline.separability
            );
            let mut w = writer()?;
            w.write_csv("baseline_comparison.csv", &comparison_csv(&report))?;
            w.finish()?;
            Ok(0)
        }
    }
}
