//! `splitgain` — grow impurity-based decision trees on structured boolean
//! targets with exact oracles, and run the claim-verification experiments.
//!
//! Exit codes: 0 pass/completed, 1 claim failed (or search exhausted),
//! 2 invalid input, 3 internal error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use splitgain::dist::DistributionSpec;
use splitgain::evaluation::{FamilyKind, JuntaSanityParams, Thm4Params, Thm5Params};
use splitgain::harness::{run, ExperimentConfig};
use splitgain::learner::{AuditDetail, Expansion, GrowthPolicy, TieRule};
use splitgain::restriction::Restriction;
use splitgain::targets::TargetSpec;
use splitgain::{Error, Result};

#[derive(Parser)]
#[command(name = "splitgain", version, about = "Impurity-based tree induction with exact purity-gain oracles")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Load the full experiment config from a JSON file (flags for the same
    /// experiment kind are ignored; the kind must match the subcommand).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory for run artifacts.
    #[arg(long, global = true, default_value = "splitgain-out")]
    out: PathBuf,
    /// Override the experiment master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for trial-parallel experiments.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Args)]
struct TargetDistArgs {
    /// Target spec: inline JSON or a path to a JSON file.
    #[arg(long)]
    target: String,
    /// Distribution spec: inline JSON or a path to a JSON file.
    #[arg(long)]
    dist: String,
}

#[derive(Subcommand)]
enum Cmd {
    /// Grow a tree (exact oracles, or finite-sample with --samples).
    Learn {
        #[command(flatten)]
        td: TargetDistArgs,
        #[arg(long, default_value = "gini")]
        impurity: String,
        /// Depth budget.
        #[arg(long, default_value_t = 8)]
        depth: usize,
        /// Node budget (expanded internal nodes).
        #[arg(long)]
        nodes: Option<usize>,
        /// Tie rule: lexicographic, prefer-addressing, seeded-random.
        #[arg(long, default_value = "lexicographic")]
        ties: String,
        /// Expand only nodes on this many sampled paths (exact builds).
        #[arg(long)]
        paths: Option<usize>,
        /// Train from this many samples instead of exact oracles.
        #[arg(long)]
        samples: Option<usize>,
    },
    /// Purity gains of every variable at the root (or under --restriction).
    Gains {
        #[command(flatten)]
        td: TargetDistArgs,
        #[arg(long, default_value = "gini")]
        impurity: String,
        /// Restriction as JSON pairs, e.g. "[[0,1],[5,0]]".
        #[arg(long)]
        restriction: Option<String>,
    },
    /// Verify the depth-or-error lower bound on addressing targets.
    VerifyThm4 {
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value = "gini")]
        impurity: String,
        #[arg(long, default_value = "lexicographic")]
        ties: String,
        /// Target family: fck (disjoint groups) or fcks (searched family).
        #[arg(long, default_value = "fck")]
        family: String,
        #[arg(long, default_value_t = 200)]
        paths: usize,
        #[arg(long, default_value_t = 10_000)]
        mc_leaves: usize,
        #[arg(long, default_value_t = 100_000)]
        gv_budget: u64,
    },
    /// Verify the agnostic (close-to-junta) lower bound.
    VerifyThm5 {
        #[arg(long, default_value_t = 6)]
        k: usize,
        #[arg(long, default_value_t = 0.25)]
        delta: f64,
        #[arg(long, default_value_t = 0.25)]
        epsilon: f64,
        #[arg(long, default_value = "gini")]
        impurity: String,
        #[arg(long, default_value = "lexicographic")]
        ties: String,
        #[arg(long, default_value_t = 200)]
        paths: usize,
        #[arg(long, default_value_t = 10_000)]
        mc_leaves: usize,
        #[arg(long, default_value_t = 100_000)]
        gv_budget: u64,
    },
    /// Positive control: juntas are learned perfectly under smoothing.
    JuntaSanity {
        #[arg(long, default_value_t = 3)]
        junta_arity: usize,
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 0.05)]
        sigma: f64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0.99)]
        pass_rate_floor: f64,
    },
    /// The two-feature parity counterexample: all gains vanish.
    ParityExample {
        #[arg(long, default_value_t = 6)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        i: usize,
        #[arg(long, default_value_t = 1)]
        j: usize,
    },
    /// Search for a parity-set family with a target distance.
    GvSearch {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        c: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        /// Auto-scale c from ceil(ln5/delta) when --c is omitted.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 100_000)]
        budget: u64,
    },
    /// Write labeled examples drawn from the distribution.
    ExportDataset {
        #[command(flatten)]
        td: TargetDistArgs,
        #[arg(long)]
        m: usize,
    },
    /// Exact law of the address bits of an addressing target.
    AddressPmf {
        #[command(flatten)]
        td: TargetDistArgs,
        /// Restriction as JSON pairs, e.g. "[[0,1]]".
        #[arg(long)]
        restriction: Option<String>,
    },
}

fn parse_json_or_file<T: serde::de::DeserializeOwned>(what: &str, s: &str) -> Result<T> {
    let text = if s.trim_start().starts_with(['{', '[']) {
        s.to_string()
    } else {
        std::fs::read_to_string(Path::new(s))?
    };
    serde_json::from_str(&text).map_err(|e| Error::InvalidConfig {
        field: what.to_string(),
        message: e.to_string(),
    })
}

fn parse_ties(s: &str) -> Result<TieRule> {
    match s {
        "lexicographic" => Ok(TieRule::Lexicographic),
        "prefer-addressing" => Ok(TieRule::PreferAddressing),
        "seeded-random" => Ok(TieRule::SeededRandom),
        other => Err(Error::InvalidConfig {
            field: "ties".into(),
            message: format!("unknown tie rule '{other}'"),
        }),
    }
}

fn parse_family(s: &str) -> Result<FamilyKind> {
    match s {
        "fck" => Ok(FamilyKind::Fck),
        "fcks" => Ok(FamilyKind::Fcks),
        other => Err(Error::InvalidConfig {
            field: "family".into(),
            message: format!("unknown family '{other}' (expected fck or fcks)"),
        }),
    }
}

fn build_config(cli: &Cli) -> Result<ExperimentConfig> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| Error::InvalidConfig {
                field: "config".into(),
                message: e.to_string(),
            })?;
        let expected = subcommand_kind(&cli.cmd);
        if config.kind() != expected {
            return Err(Error::InvalidConfig {
                field: "experiment".into(),
                message: format!(
                    "config is '{}' but the subcommand is '{expected}'",
                    config.kind()
                ),
            });
        }
        return Ok(config);
    }
    Ok(match &cli.cmd {
        Cmd::Learn { td, impurity, depth, nodes, ties, paths, samples } => {
            ExperimentConfig::Learn {
                target: parse_json_or_file::<TargetSpec>("target", &td.target)?,
                dist: parse_json_or_file::<DistributionSpec>("dist", &td.dist)?,
                impurity: impurity.clone(),
                policy: GrowthPolicy {
                    depth_budget: *depth,
                    node_budget: nodes.unwrap_or(usize::MAX),
                    expansion: match paths {
                        Some(p) => Expansion::SampledPaths { paths: *p },
                        None => Expansion::Full,
                    },
                    tie_rule: parse_ties(ties)?,
                    audit_detail: AuditDetail::Summary,
                },
                samples: *samples,
                seed: 0,
            }
        }
        Cmd::Gains { td, impurity, restriction } => ExperimentConfig::Gains {
            target: parse_json_or_file::<TargetSpec>("target", &td.target)?,
            dist: parse_json_or_file::<DistributionSpec>("dist", &td.dist)?,
            impurity: impurity.clone(),
            restriction: restriction
                .as_deref()
                .map(|s| parse_json_or_file::<Restriction>("restriction", s))
                .transpose()?,
        },
        Cmd::VerifyThm4 { k, delta, impurity, ties, family, paths, mc_leaves, gv_budget } => {
            ExperimentConfig::VerifyThm4(Thm4Params {
                k: *k,
                delta: *delta,
                impurity: impurity.clone(),
                tie_rule: parse_ties(ties)?,
                family: parse_family(family)?,
                seed: 0,
                paths: *paths,
                mc_leaves: *mc_leaves,
                gv_budget: *gv_budget,
            })
        }
        Cmd::VerifyThm5 { k, delta, epsilon, impurity, ties, paths, mc_leaves, gv_budget } => {
            ExperimentConfig::VerifyThm5(Thm5Params {
                k: *k,
                delta: *delta,
                epsilon: *epsilon,
                impurity: impurity.clone(),
                tie_rule: parse_ties(ties)?,
                seed: 0,
                paths: *paths,
                mc_leaves: *mc_leaves,
                gv_budget: *gv_budget,
            })
        }
        Cmd::JuntaSanity { junta_arity, n, sigma, delta, trials, pass_rate_floor } => {
            ExperimentConfig::JuntaSanity(JuntaSanityParams {
                junta_arity: *junta_arity,
                n: *n,
                sigma: *sigma,
                delta: *delta,
                trials: *trials,
                impurity: None,
                seed: 0,
                pass_rate_floor: *pass_rate_floor,
            })
        }
        Cmd::ParityExample { n, i, j } => ExperimentConfig::ParityExample { n: *n, i: *i, j: *j },
        Cmd::GvSearch { k, c, d, delta, budget } => ExperimentConfig::GvSearch {
            k: *k,
            c: *c,
            d: *d,
            delta: *delta,
            seed: 0,
            budget: *budget,
        },
        Cmd::ExportDataset { td, m } => ExperimentConfig::ExportDataset {
            target: parse_json_or_file::<TargetSpec>("target", &td.target)?,
            dist: parse_json_or_file::<DistributionSpec>("dist", &td.dist)?,
            m: *m,
            seed: 0,
        },
        Cmd::AddressPmf { td, restriction } => ExperimentConfig::AddressPmf {
            target: parse_json_or_file::<TargetSpec>("target", &td.target)?,
            dist: parse_json_or_file::<DistributionSpec>("dist", &td.dist)?,
            restriction: restriction
                .as_deref()
                .map(|s| parse_json_or_file::<Restriction>("restriction", s))
                .transpose()?,
        },
    })
}

fn subcommand_kind(cmd: &Cmd) -> &'static str {
    match cmd {
        Cmd::Learn { .. } => "learn",
        Cmd::Gains { .. } => "gains",
        Cmd::VerifyThm4 { .. } => "verify-thm4",
        Cmd::VerifyThm5 { .. } => "verify-thm5",
        Cmd::JuntaSanity { .. } => "junta-sanity",
        Cmd::ParityExample { .. } => "parity-example",
        Cmd::GvSearch { .. } => "gv-search",
        Cmd::ExportDataset { .. } => "export-dataset",
        Cmd::AddressPmf { .. } => "address-pmf",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("warning: could not size thread pool: {e}");
        }
    }
    let mut config = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = cli.seed {
        config.set_seed(seed);
    }
    match run(&config, &cli.out) {
        Ok(record) => {
            println!(
                "{}: {:?} — {} (artifacts in {})",
                record.experiment,
                record.status,
                record.summary,
                cli.out.display()
            );
            ExitCode::from(u8::try_from(record.status.exit_code()).unwrap_or(3))
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = if e.is_invalid_input() {
                2
            } else if matches!(e, Error::NotFound { .. }) {
                1
            } else {
                3
            };
            ExitCode::from(code)
        }
    }
}
