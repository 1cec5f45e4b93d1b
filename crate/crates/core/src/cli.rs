//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 on invalid input (including a tuple that is
//! not an equilibrium), 2 when a size guard stops a computation.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::equilibrium::{check_cwe, Witness};
use crate::expectation::{
    decimal, enumerate_histories, expected_values, fraction, ExpectationConfig, ExpectationError, Rational,
};
use crate::io::{
    allocation_tuple, buyer_by_label, load_economy, load_tuple, price_tuple, rationing_from_zeros, real_prices,
    trace_table, trace_to_jsonl, IoError,
};
use crate::matching::max_matching;
use crate::mechanism::{run_mapr, LotteryPolicy, MechanismError};
use crate::model::{demand_situation, Economy, ItemSet};
use crate::overdemand::find_minimal_over_demanded;
use crate::strategy::{
    default_cap, expected_profit_under_strategy, optimal_strategy_search, two_buyer_case_analysis, ManipulationProblem,
    SearchConfig, Strategy, StrategyError, TwoBuyerCase,
};

#[derive(Debug, Parser)]
#[command(name = "mapr", version, about = "Ascending auctions with price bounds and rationing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the mechanism once and print its round-by-round trace.
    Run(RunArgs),
    /// Check whether a (prices, rationing, allocation) tuple is a constrained Walrasian equilibrium.
    Check(CheckArgs),
    /// Exact expected profits and prices over every lottery outcome.
    Expect(ExpectArgs),
    /// Expected profit of a misreport and a search for the best one.
    Manipulate(ManipulateArgs),
    /// Demands, a maximum matching and a minimal over-demanded set at given prices.
    Matching(MatchingArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    pub economy: PathBuf,
    /// Seed for the ChaCha8 lottery generator (default 0).
    #[arg(long, conflicts_with = "scripted_winners")]
    pub seed: Option<u64>,
    /// Lottery winners in order, as buyer numbers.
    #[arg(long, value_delimiter = ',')]
    pub scripted_winners: Option<Vec<usize>>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub economy: PathBuf,
    /// Tuple file, or a JSON-lines trace ending with the tuple.
    #[arg(long)]
    pub tuple: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ExpectArgs {
    pub economy: PathBuf,
    /// Also list every leaf of the lottery tree.
    #[arg(long)]
    pub histories: bool,
    #[arg(long, default_value_t = ExpectationConfig::default().node_limit)]
    pub node_limit: usize,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct ManipulateArgs {
    pub economy: PathBuf,
    /// The misreporting buyer.
    #[arg(long, default_value_t = 1)]
    pub buyer: usize,
    /// Largest reported value tried per item (default: top upper bound plus top true value).
    #[arg(long)]
    pub cap: Option<i64>,
    /// Evaluate this report (one value per real item) instead of searching.
    #[arg(long, value_delimiter = ',')]
    pub strategy: Option<Vec<i64>>,
    #[arg(long, default_value_t = ExpectationConfig::default().node_limit)]
    pub node_limit: usize,
    /// Largest number of reports the search may evaluate.
    #[arg(long, default_value_t = SearchConfig::default().strategy_limit)]
    pub strategy_limit: u128,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MatchingArgs {
    pub economy: PathBuf,
    /// Prices of the real items (default: lower bounds).
    #[arg(long, value_delimiter = ',')]
    pub prices: Option<Vec<i64>>,
    /// Forbidden pair `buyer:item`; repeatable.
    #[arg(long = "forbid", value_parser = parse_pair)]
    pub forbid: Vec<(usize, String)>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

fn parse_pair(s: &str) -> Result<(usize, String), String> {
    let (buyer, item) = s.split_once(':').ok_or_else(|| format!("expected buyer:item, got {s:?}"))?;
    let buyer = buyer.trim().parse().map_err(|_| format!("bad buyer number in {s:?}"))?;
    Ok((buyer, item.trim().to_string()))
}

/// A failed command: invalid input (exit 1) or a size guard (exit 2).
#[derive(Debug)]
pub enum Failure {
    Invalid(String),
    Guard(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Invalid(_) => 1,
            Failure::Guard(_) => 2,
        }
    }
}

impl From<IoError> for Failure {
    fn from(e: IoError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<MechanismError> for Failure {
    fn from(e: MechanismError) -> Self {
        Failure::Invalid(e.to_string())
    }
}

impl From<ExpectationError> for Failure {
    fn from(e: ExpectationError) -> Self {
        match e {
            ExpectationError::TreeSizeExceeded { .. } => Failure::Guard(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<StrategyError> for Failure {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::Expectation(inner) => inner.into(),
            StrategyError::SizeGuard { .. } => Failure::Guard(e.to_string()),
            other => Failure::Invalid(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Invalid(e.to_string())
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(&cli.command, out) {
        Ok(()) => 0,
        Err(f) => {
            let (Failure::Invalid(msg) | Failure::Guard(msg)) = &f;
            let _ = writeln!(err, "error: {msg}");
            f.exit_code()
        }
    }
}

pub fn execute(command: &Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Run(a) => run(a, out),
        Command::Check(a) => check(a, out),
        Command::Expect(a) => expect(a, out),
        Command::Manipulate(a) => manipulate(a, out),
        Command::Matching(a) => matching(a, out),
    }
}

fn run(a: &RunArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let e = load_economy(&a.economy)?;
    let mut policy = match &a.scripted_winners {
        Some(labels) => {
            let winners = labels.iter().map(|&l| buyer_by_label(&e, l)).collect::<Result<Vec<_>, _>>()?;
            LotteryPolicy::scripted(winners)
        }
        None => LotteryPolicy::seeded(a.seed.unwrap_or(0)),
    };
    let trace = run_mapr(&e, &mut policy)?;
    match a.format {
        Format::Table => write!(out, "{}", trace_table(&e, &trace))?,
        Format::Json => write!(out, "{}", trace_to_jsonl(&e, &trace))?,
    }
    Ok(())
}

fn check(a: &CheckArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let e = load_economy(&a.economy)?;
    let t = load_tuple(&a.tuple)?.resolve(&e)?;
    let cert = check_cwe(&e, &t.prices, &t.rationing, &t.allocation).map_err(|x| Failure::Invalid(x.to_string()))?;
    match a.format {
        Format::Table => write!(out, "{}", cert.display(&e))?,
        Format::Json => {
            let conditions: Vec<Value> = cert
                .conditions
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let witnesses: Vec<Value> = c
                        .witnesses
                        .iter()
                        .map(|w| match *w {
                            Witness::Item(x) => json!({ "item": e.item_name(x) }),
                            Witness::Buyer(i) => json!({ "buyer": i.label() }),
                            Witness::BuyerItem(i, x) => json!({ "buyer": i.label(), "item": e.item_name(x) }),
                        })
                        .collect();
                    json!({ "condition": k + 1, "holds": c.holds(), "witnesses": witnesses })
                })
                .collect();
            let v = json!({ "equilibrium": cert.is_equilibrium(), "conditions": conditions });
            writeln!(out, "{v}")?;
        }
    }
    if cert.is_equilibrium() {
        Ok(())
    } else {
        Err(Failure::Invalid(format!("conditions {:?} fail", cert.failed())))
    }
}

fn exact(r: &Rational) -> Value {
    json!({ "fraction": fraction(r), "decimal": decimal(r, 4) })
}

fn expect(a: &ExpectArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let e = load_economy(&a.economy)?;
    let config = ExpectationConfig { node_limit: a.node_limit };
    let report = expected_values(&e, &config)?;
    let histories = if a.histories { Some(enumerate_histories(&e, &config)?) } else { None };
    match a.format {
        Format::Table => {
            for i in e.buyers() {
                let u = report.profit(i);
                writeln!(out, "u*[{i}]={}  ({})", fraction(u), decimal(u, 4))?;
            }
            for x in e.real_items() {
                let p = report.price(x);
                writeln!(out, "p*[{}]={}  ({})", e.item_name(x), fraction(p), decimal(p, 4))?;
            }
            writeln!(out, "tree: {}", report.tree_stats)?;
            for h in histories.iter().flatten() {
                let winners: Vec<String> = h.winners.iter().map(|w| w.to_string()).collect();
                writeln!(
                    out,
                    "history P={} winners=[{}] p={} allocation={}",
                    fraction(&h.probability),
                    winners.join(","),
                    price_tuple(&h.prices),
                    allocation_tuple(&e, &h.allocation)
                )?;
            }
        }
        Format::Json => {
            let mut v = json!({
                "expected_profit": e.buyers().map(|i| {
                    let mut x = exact(report.profit(i));
                    x["buyer"] = json!(i.label());
                    x
                }).collect::<Vec<_>>(),
                "expected_price": e.real_items().map(|x| {
                    let mut v = exact(report.price(x));
                    v["item"] = json!(e.item_name(x));
                    v
                }).collect::<Vec<_>>(),
                "leaves": report.tree_stats.leaves,
                "nodes": report.tree_stats.nodes,
            });
            if let Some(hs) = &histories {
                v["histories"] = hs
                    .iter()
                    .map(|h| {
                        json!({
                            "probability": fraction(&h.probability),
                            "winners": h.winners.iter().map(|w| w.label()).collect::<Vec<_>>(),
                            "prices": h.prices.real(),
                            "allocation": h.allocation.as_slice().iter().map(|&x| e.item_name(x)).collect::<Vec<_>>(),
                        })
                    })
                    .collect();
            }
            writeln!(out, "{v}")?;
        }
    }
    Ok(())
}

fn report_row(s: &Strategy) -> String {
    let v: Vec<String> = s.real().iter().map(|x| x.to_string()).collect();
    format!("[{}]", v.join(","))
}

fn manipulate(a: &ManipulateArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let e = load_economy(&a.economy)?;
    let buyer = buyer_by_label(&e, a.buyer)?;
    let problem = ManipulationProblem::new(&e, buyer)?;
    let config =
        SearchConfig { strategy_limit: a.strategy_limit, expectation: ExpectationConfig { node_limit: a.node_limit } };
    let truthful = Strategy::truthful(&problem);
    let truthful_profit = expected_profit_under_strategy(&problem, &truthful, &config.expectation)?;

    if let Some(values) = &a.strategy {
        let s = Strategy::from_real(values)?;
        let profit = expected_profit_under_strategy(&problem, &s, &config.expectation)?;
        match a.format {
            Format::Table => {
                writeln!(out, "buyer {buyer}")?;
                writeln!(out, "truthful report {}: {}", report_row(&truthful), fraction(&truthful_profit))?;
                writeln!(out, "report {}: {}", report_row(&s), fraction(&profit))?;
                writeln!(out, "gain over truthful: {}", fraction(&(&profit - &truthful_profit)))?;
            }
            Format::Json => writeln!(
                out,
                "{}",
                json!({
                    "buyer": buyer.label(),
                    "truthful": { "report": truthful.real(), "profit": exact(&truthful_profit) },
                    "strategy": { "report": s.real(), "profit": exact(&profit) },
                })
            )?,
        }
        return Ok(());
    }

    let cap = a.cap.unwrap_or_else(|| default_cap(&problem));
    let found = optimal_strategy_search(&problem, cap, &config)?;
    let case = if e.buyer_count() == 2 { Some(two_buyer_case_analysis(&problem, &config.expectation)?) } else { None };
    match a.format {
        Format::Table => {
            writeln!(out, "buyer {buyer}, cap {cap}, {} reports evaluated", found.evaluated)?;
            writeln!(out, "truthful report {}: {}", report_row(&truthful), fraction(&found.truthful_profit))?;
            writeln!(out, "best report {}: {}", report_row(&found.best), fraction(&found.best_profit))?;
            let verdict = if found.truthful_optimal { "yes" } else { "no" };
            writeln!(out, "truthful optimal within cap: {verdict}")?;
            if let Some(v) = &case {
                let label = match &v.case {
                    TwoBuyerCase::Uncontested => "uncontested at lower bounds".to_string(),
                    TwoBuyerCase::Contested { item, resolution, .. } => {
                        format!("contested item {}, {:?}", e.item_name(*item), resolution)
                    }
                };
                writeln!(
                    out,
                    "two-buyer case: {label}, closed form {}, agrees: {}",
                    fraction(&v.closed_form),
                    v.agrees()
                )?;
            }
        }
        Format::Json => writeln!(
            out,
            "{}",
            json!({
                "buyer": buyer.label(),
                "cap": cap,
                "evaluated": found.evaluated,
                "truthful": { "report": truthful.real(), "profit": exact(&found.truthful_profit) },
                "best": { "report": found.best.real(), "profit": exact(&found.best_profit) },
                "truthful_optimal": found.truthful_optimal,
                "closed_form_agrees": case.as_ref().map(|v| v.agrees()),
            })
        )?,
    }
    Ok(())
}

fn matching(a: &MatchingArgs, out: &mut dyn Write) -> Result<(), Failure> {
    let e = load_economy(&a.economy)?;
    let prices = match &a.prices {
        Some(p) => real_prices(&e, p)?,
        None => e.lower_bounds().clone(),
    };
    let rationing = rationing_from_zeros(&e, &a.forbid)?;
    let ds = demand_situation(&e, &prices, &rationing);
    let m = max_matching(&ds);
    let report = if m.len() == ds.real_demanders().count() {
        None
    } else {
        Some(find_minimal_over_demanded(&ds, &m).map_err(|x| Failure::Invalid(x.to_string()))?)
    };
    let pairs = |e: &Economy| -> Vec<(usize, String)> {
        m.pairs().map(|(i, x)| (i.label(), e.item_name(x).to_string())).collect()
    };
    match a.format {
        Format::Table => {
            writeln!(out, "prices: {}", price_tuple(&prices))?;
            for (i, d) in ds.iter() {
                writeln!(out, "D_{i} = {}", e.format_items(d))?;
            }
            let shown: Vec<String> = pairs(&e).iter().map(|(i, x)| format!("{{{i},{x}}}")).collect();
            writeln!(out, "maximum matching: {} (size {})", shown.join(" "), m.len())?;
            match &report {
                None => writeln!(out, "equilibrium allocation exists: yes")?,
                Some(r) => {
                    writeln!(out, "equilibrium allocation exists: no")?;
                    writeln!(
                        out,
                        "seed buyer {}, over-demanded set {}, minimal over-demanded set {}",
                        r.seed_buyer,
                        e.format_items(&r.grown_set),
                        e.format_items(&r.minimal_set)
                    )?;
                }
            }
        }
        Format::Json => {
            let names = |s: &ItemSet| s.iter().map(|&x| e.item_name(x).to_string()).collect::<Vec<_>>();
            let v = json!({
                "prices": prices.real(),
                "demands": ds.iter().map(|(i, d)| json!({ "buyer": i.label(), "items": names(d) })).collect::<Vec<_>>(),
                "matching": pairs(&e),
                "equilibrium_allocation_exists": report.is_none(),
                "over_demanded": report.as_ref().map(|r| json!({
                    "seed_buyer": r.seed_buyer.label(),
                    "grown": names(&r.grown_set),
                    "minimal": names(&r.minimal_set),
                })),
            });
            writeln!(out, "{v}")?;
        }
    }
    Ok(())
}
