use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use online_mms::adversary::{
    run_adversary, AdversaryOutcome, Chores2, Goods2, Goods3, GoodsN, UnnormChores, UnnormGoods,
};
use online_mms::experiments::{
    export_cdf, make_allocator, run_experiment, GeneratorConfig, ItemOrder,
};
use online_mms::online::AdaptiveAdversary;
use online_mms::oracle::{mms_all, mms_exact};
use online_mms::{Error, Instance, Kind, Result, Scalar, DEFAULT_CAP};

#[derive(Parser)]
#[command(name = "online-mms", version, about = "Online MMS allocation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact MMS values (and optional witness partitions) of an instance.
    Oracle {
        /// Instance JSON file.
        #[arg(long)]
        instance: PathBuf,
        /// Restrict to one agent (1-based).
        #[arg(long)]
        agent: Option<usize>,
        /// Maximum item count accepted by the exact search.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
        /// Include a witness partition per agent.
        #[arg(long)]
        witness: bool,
    },
    /// Plays an adaptive adversary against an allocator and certifies the
    /// forced ratio.
    Adversary {
        /// goods3 | goodsN | goods2 | chores2 | unnorm-goods | unnorm-chores
        #[arg(long)]
        name: String,
        /// Allocator to victimize (see `experiment` for names).
        #[arg(long)]
        vs: String,
        /// Agent count (goodsN, unnorm-chores).
        #[arg(long, default_value_t = 4)]
        n: usize,
        /// Gap parameter r (goods3, goodsN, unnorm-goods).
        #[arg(long, default_value_t = 8)]
        r: u64,
        /// Epsilon as an exact rational (goods3, goodsN, unnorm-chores).
        #[arg(long, default_value = "1/10000")]
        eps: String,
        /// Delta as an exact rational (goods2).
        #[arg(long, default_value = "1/10")]
        delta: String,
        /// Chain cutoff l (goods2).
        #[arg(long, default_value_t = 200)]
        l: usize,
        /// Small-item bound for alg3/alg7/alg8 victims.
        #[arg(long)]
        alpha: Option<String>,
        /// Oracle cap for certification when no closed form exists.
        #[arg(long, default_value_t = DEFAULT_CAP)]
        cap: usize,
    },
    /// Seeded random-instance batches reproducing the published tables.
    Experiment {
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Comma-separated algorithm names.
        #[arg(long)]
        algos: String,
        /// monotone | random
        #[arg(long, default_value = "random")]
        order: String,
        /// Small-item bound for alg3/alg7/alg8.
        #[arg(long)]
        alpha: Option<String>,
        /// Report JSON path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
        /// CDF CSV path; with several algorithms the name is suffixed.
        #[arg(long)]
        cdf: Option<PathBuf>,
    },
}

fn parse_scalar(s: &str) -> Result<Scalar> {
    s.parse()
        .map_err(|e| Error::InvalidConfig(format!("bad rational '{s}': {e}")))
}

fn parse_kind(s: &str) -> Result<Kind> {
    match s {
        "goods" => Ok(Kind::Goods),
        "chores" => Ok(Kind::Chores),
        other => Err(Error::InvalidConfig(format!(
            "unknown kind '{other}' (expected goods|chores)"
        ))),
    }
}

fn cmd_oracle(path: &Path, agent: Option<usize>, cap: usize, witness: bool) -> Result<()> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
    let instance: Instance =
        serde_json::from_str(&text).map_err(|e| Error::InvalidValue(e.to_string()))?;
    let report = match agent {
        Some(a) => {
            if a == 0 || a > instance.n() {
                return Err(Error::AgentOutOfRange {
                    agent: a,
                    n: instance.n(),
                });
            }
            let (mms, partition) = mms_exact(&instance, a - 1, instance.n(), cap)?;
            let mut obj = json!({ "agent": a, "mms": mms.to_string() });
            if witness {
                obj["witness"] = serde_json::to_value(&partition)
                    .map_err(|e| Error::InvalidValue(e.to_string()))?;
            }
            obj
        }
        None => {
            let result = mms_all(&instance, cap)?;
            let mms: Vec<String> = result.mms.iter().map(ToString::to_string).collect();
            let mut obj = json!({ "mms": mms });
            if witness {
                obj["witnesses"] = serde_json::to_value(&result.witnesses)
                    .map_err(|e| Error::InvalidValue(e.to_string()))?;
            }
            obj
        }
    };
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_adversary(
    name: &str,
    vs: &str,
    n: usize,
    r: u64,
    eps: &str,
    delta: &str,
    l: usize,
    alpha: Option<&str>,
    cap: usize,
) -> Result<()> {
    let mut adversary: Box<dyn AdaptiveAdversary> = match name {
        "goods3" => Box::new(Goods3::new(r, parse_scalar(eps)?)?),
        "goodsN" => Box::new(GoodsN::new(n, r, parse_scalar(eps)?)?),
        "goods2" => Box::new(Goods2::new(parse_scalar(delta)?, l)?),
        "chores2" => Box::new(Chores2::new()),
        "unnorm-goods" => Box::new(UnnormGoods::new(r)?),
        "unnorm-chores" => Box::new(UnnormChores::new(n, parse_scalar(eps)?)?),
        other => {
            return Err(Error::InvalidConfig(format!(
                "unknown adversary '{other}'"
            )))
        }
    };
    let alpha = alpha.map(parse_scalar).transpose()?;
    let mut allocator = make_allocator(vs, adversary.n(), alpha.as_ref())?;
    let AdversaryOutcome {
        instance,
        allocation,
        mms,
        worst,
    } = run_adversary(allocator.as_mut(), adversary.as_mut(), cap)?;
    let report = json!({
        "adversary": name,
        "vs": vs,
        "instance": instance,
        "allocation": allocation,
        "mms": mms.iter().map(ToString::to_string).collect::<Vec<_>>(),
        "worst_ratio": worst.to_string(),
        "worst_ratio_f64": worst.to_f64(),
    });
    println!("{}", serde_json::to_string_pretty(&report).unwrap());
    Ok(())
}

fn cdf_path(base: &Path, algo: &str, multiple: bool) -> PathBuf {
    if !multiple {
        return base.to_path_buf();
    }
    let stem = base.file_stem().and_then(|s| s.to_str()).unwrap_or("cdf");
    let ext = base.extension().and_then(|s| s.to_str()).unwrap_or("csv");
    base.with_file_name(format!("{stem}-{algo}.{ext}"))
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    kind: &str,
    n: usize,
    m: usize,
    trials: usize,
    seed: u64,
    algos: &str,
    order: &str,
    alpha: Option<&str>,
    out: Option<&Path>,
    cdf: Option<&Path>,
) -> Result<()> {
    let config = GeneratorConfig {
        n,
        m,
        kind: parse_kind(kind)?,
        order: order.parse::<ItemOrder>()?,
    };
    let alpha = alpha.map(parse_scalar).transpose()?;
    let names: Vec<&str> = algos.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(Error::InvalidConfig("no algorithms given".into()));
    }
    let mut reports = Vec::with_capacity(names.len());
    for name in &names {
        let report = run_experiment(name, alpha.as_ref(), &config, trials, seed)?;
        eprintln!(
            "{name}: avg {:.4} min {:.4} max {:.4} zero {:.3} ({} ms)",
            report.avg, report.min, report.max, report.zero_fraction, report.elapsed_ms
        );
        if let Some(base) = cdf {
            let path = cdf_path(base, name, names.len() > 1);
            let mut file = fs::File::create(&path)
                .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?;
            export_cdf(&report, &mut file)?;
        }
        reports.push(report);
    }
    let body = serde_json::to_string_pretty(&reports).unwrap();
    match out {
        Some(path) => fs::write(path, body)
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))?,
        None => println!("{body}"),
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Oracle {
            instance,
            agent,
            cap,
            witness,
        } => cmd_oracle(&instance, agent, cap, witness),
        Command::Adversary {
            name,
            vs,
            n,
            r,
            eps,
            delta,
            l,
            alpha,
            cap,
        } => cmd_adversary(&name, &vs, n, r, &eps, &delta, l, alpha.as_deref(), cap),
        Command::Experiment {
            kind,
            n,
            m,
            trials,
            seed,
            algos,
            order,
            alpha,
            out,
            cdf,
        } => cmd_experiment(
            &kind,
            n,
            m,
            trials,
            seed,
            &algos,
            &order,
            alpha.as_deref(),
            out.as_deref(),
            cdf.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::FAILURE
        }
    }
}
