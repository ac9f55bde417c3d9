mod parse;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use parse::{cap_flag, cap_label, function_flag, relax_flag, strategy, strategy_list, FunctionFlag, RelaxFlag};
use relaxvol::experiment::{sweep_csv, DEFAULT_STEPS, EXPERIMENT_P};
use relaxvol::format::real17;
use relaxvol::{
    generate_knapsack, generate_meanvar, mc_volume, profiles, rank, run_budget_sweep, threshold_k, volume,
    BoundPair, Cap, KnapsackInstance, MeanVarianceInstance, SolveStatus, SweepRow,
};

const SEED_ENV: &str = "RELAX_SEED";
const VERIFY_SIGMAS: f64 = 3.0;

#[derive(Parser, Debug)]
#[command(name = "relaxvol", version, about = "Volumes of convex relaxations for indicator-variable models")]
struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct BodyArgs {
    /// power:P, exp:B[:A] or envelope(power:P)
    #[arg(long = "f", value_parser = function_flag)]
    function: FunctionFlag,
    #[arg(long)]
    l: f64,
    #[arg(long)]
    u: f64,
    /// perspective, naive, piecewise or q:Q
    #[arg(long, value_parser = relax_flag)]
    relax: RelaxFlag,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact volume of one relaxation body.
    Volume {
        #[command(flatten)]
        body: BodyArgs,
        /// secant or simple
        #[arg(long, value_parser = cap_flag, default_value = "secant")]
        cap: Cap,
    },
    /// Compare the exact volume against a Monte Carlo estimate.
    Verify {
        #[command(flatten)]
        body: BodyArgs,
        /// secant or simple; both when omitted
        #[arg(long, value_parser = cap_flag)]
        cap: Option<Cap>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Rank variables by volume gap and mark the ones inside the budget.
    Advise {
        /// Knapsack or mean-variance instance JSON supplying the bounds.
        #[arg(long, conflicts_with = "bounds")]
        instance: Option<PathBuf>,
        /// Inline bounds as l:u,l:u,...
        #[arg(long)]
        bounds: Option<String>,
        #[arg(long, default_value_t = EXPERIMENT_P)]
        p: f64,
        /// desc, asc, random or root
        #[arg(long, default_value = "desc")]
        strategy: String,
        #[arg(long, default_value_t = 1.0)]
        budget: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Smallest l/u at which the piecewise envelope closes a fraction phi of the gap.
    Threshold {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        phi: f64,
    },
    /// Lower bound against tightening budget for each ranking strategy.
    Experiment {
        #[arg(long, value_enum, default_value = "knapsack")]
        model: Model,
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value = "desc,random,asc")]
        strategies: String,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Load the instance from JSON instead of generating it.
        #[arg(long)]
        instance: Option<PathBuf>,
        /// Also write the instance as JSON.
        #[arg(long)]
        save_instance: Option<PathBuf>,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum Model {
    Knapsack,
    Meanvar,
}

enum Failure {
    Usage(String),
    Numerical(String),
    /// Output was produced, but some solves missed the tolerance.
    Partial { output: String, msg: String },
}

impl From<relaxvol::Error> for Failure {
    fn from(e: relaxvol::Error) -> Self {
        match e {
            relaxvol::Error::Numerical(_) => Failure::Numerical(e.to_string()),
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<String, Failure>;

fn effective_seed(flag: u64) -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Usage(format!("{SEED_ENV} must be an unsigned integer, got '{v}'"))),
        Err(_) => Ok(flag),
    }
}

fn bounds(l: f64, u: f64) -> Result<BoundPair, Failure> {
    Ok(BoundPair::new(l, u)?)
}

fn run_volume(body: &BodyArgs, cap: Cap) -> Outcome {
    let b = bounds(body.l, body.u)?;
    let f = body.function.resolve(&b).map_err(Failure::Usage)?;
    let r = volume(&body.relax.with_cap(cap), &f, &b)?;
    Ok(format!(
        "{{\"value\":{},\"method\":\"{}\",\"abs_error\":{}}}\n",
        real17(r.value),
        r.method.as_str(),
        real17(r.abs_error)
    ))
}

fn run_verify(body: &BodyArgs, cap: Option<Cap>, samples: usize, seed: u64) -> Outcome {
    let b = bounds(body.l, body.u)?;
    let f = body.function.resolve(&b).map_err(Failure::Usage)?;
    let caps = cap.map_or(vec![Cap::Secant, Cap::SimpleBound], |c| vec![c]);
    let mut out = String::new();
    for cap in caps {
        let relax = body.relax.with_cap(cap);
        let exact = volume(&relax, &f, &b)?;
        let est = mc_volume(&relax, &f, &b, samples, seed)?;
        let pass = (est.volume - exact.value).abs() <= VERIFY_SIGMAS * est.std_error + exact.abs_error;
        let _ = writeln!(
            out,
            "{{\"spec\":\"{}/{}\",\"closed_form\":{},\"mc_estimate\":{},\"std_error\":{},\"pass\":{pass}}}",
            body.relax.label(),
            cap_label(cap),
            real17(exact.value),
            real17(est.volume),
            real17(est.std_error)
        );
    }
    Ok(out)
}

fn read_file(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("cannot read {}: {e}", path.display())))
}

fn instance_bounds(path: &Path) -> Result<Vec<BoundPair>, Failure> {
    let text = read_file(path)?;
    if let Ok(inst) = serde_json::from_str::<MeanVarianceInstance>(&text) {
        return Ok(inst.bounds());
    }
    serde_json::from_str::<KnapsackInstance>(&text)
        .map(|inst| inst.bounds())
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn inline_bounds(s: &str) -> Result<Vec<BoundPair>, Failure> {
    s.split(',')
        .map(|pair| {
            let (l, u) = pair
                .split_once(':')
                .ok_or_else(|| Failure::Usage(format!("bounds must look like l:u, got '{pair}'")))?;
            let l = parse::number(l).map_err(Failure::Usage)?;
            let u = parse::number(u).map_err(Failure::Usage)?;
            bounds(l, u)
        })
        .collect()
}

fn run_advise(
    instance: Option<&Path>,
    inline: Option<&str>,
    p: f64,
    strategy_name: &str,
    budget: f64,
    seed: u64,
) -> Outcome {
    let bs = match (instance, inline) {
        (Some(path), _) => instance_bounds(path)?,
        (None, Some(s)) => inline_bounds(s)?,
        (None, None) => return Err(Failure::Usage("advise needs --instance or --bounds".into())),
    };
    let strat = strategy(strategy_name, seed).map_err(Failure::Usage)?;
    let profs = profiles(&bs, p)?;
    let order = rank(&profs, strat, 1.0)?;
    let selected = rank(&profs, strat, budget)?.len();
    let mut out = String::from("rank,index,vol_gap,root_gap,selected\n");
    for (r, &i) in order.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{i},{},{},{}",
            r + 1,
            real17(profs[i].vol_gap),
            real17(profs[i].root_gap),
            r < selected
        );
    }
    Ok(out)
}

fn run_threshold(p: f64, phi: f64) -> Outcome {
    let k = threshold_k(p, phi)?;
    Ok(format!("{{\"p\":{},\"phi\":{},\"k\":{}}}\n", real17(p), real17(phi), real17(k)))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string(value).map_err(|e| Failure::Usage(e.to_string()))?;
    std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    serde_json::from_str(&read_file(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn run_experiment(
    model: Model,
    n: usize,
    seed: u64,
    steps: usize,
    strategies: &str,
    tol: f64,
    instance: Option<&Path>,
    save: Option<&Path>,
) -> Outcome {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Failure::Usage(format!("--tol must be positive, got {tol}")));
    }
    let strats = strategy_list(strategies, seed).map_err(Failure::Usage)?;
    let rows: Vec<SweepRow> = match model {
        Model::Knapsack => {
            let inst = match instance {
                Some(path) => load::<KnapsackInstance>(path)?,
                None => generate_knapsack(n, seed)?,
            };
            if let Some(path) = save {
                write_json(path, &inst)?;
            }
            run_budget_sweep(&inst, &strats, steps, tol)?
        }
        Model::Meanvar => {
            let inst = match instance {
                Some(path) => load::<MeanVarianceInstance>(path)?,
                None => generate_meanvar(n, seed)?,
            };
            if let Some(path) = save {
                write_json(path, &inst)?;
            }
            run_budget_sweep(&inst, &strats, steps, tol)?
        }
    };
    let unsolved: Vec<String> = rows
        .iter()
        .filter(|r| r.status != SolveStatus::Optimal)
        .map(|r| format!("{} at {}: {}", r.strategy.label(), real17(r.fraction), r.status.as_str()))
        .collect();
    let csv = sweep_csv(&rows);
    if unsolved.is_empty() {
        Ok(csv)
    } else {
        Err(Failure::Partial {
            output: csv,
            msg: format!("cells not solved to tolerance: {}", unsolved.join(", ")),
        })
    }
}

fn dispatch(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::Volume { body, cap } => run_volume(body, *cap),
        Command::Verify { body, cap, samples, seed } => run_verify(body, *cap, *samples, effective_seed(*seed)?),
        Command::Advise { instance, bounds, p, strategy, budget, seed } => run_advise(
            instance.as_deref(),
            bounds.as_deref(),
            *p,
            strategy,
            *budget,
            effective_seed(*seed)?,
        ),
        Command::Threshold { p, phi } => run_threshold(*p, *phi),
        Command::Experiment { model, n, seed, steps, strategies, tol, instance, save_instance } => run_experiment(
            *model,
            *n,
            effective_seed(*seed)?,
            *steps,
            strategies,
            *tol,
            instance.as_deref(),
            save_instance.as_deref(),
        ),
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let result = match dispatch(&cli) {
        Err(Failure::Partial { output, msg }) => emit(cli.out.as_deref(), &output).and(Err(Failure::Numerical(msg))),
        other => other.and_then(|text| emit(cli.out.as_deref(), &text)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg) | Failure::Partial { msg, .. }) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
