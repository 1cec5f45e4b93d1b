//! File formats and text rendering.
//!
//! Every price list in JSON covers the real items only; the dummy item is
//! implicit and is written as `"o"` wherever an item name appears. Buyers are
//! written with their one-based labels.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::mechanism::{RoundRecord, Trace};
use crate::model::{
    validate_economy, Allocation, BuyerId, Economy, EconomyError, ItemId, ItemSet, ModelError, PriceVector,
    RationingSystem, RawEconomy,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid economy:\n{}", list(.0))]
    Economy(Vec<EconomyError>),
    #[error("{0}")]
    Reference(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn list(errors: &[EconomyError]) -> String {
    errors.iter().map(|e| format!("  - {e}")).collect::<Vec<_>>().join("\n")
}

/// On-disk economy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EconomyFile {
    pub items: Vec<String>,
    pub buyers: usize,
    pub valuations: Vec<Vec<i64>>,
    pub lower_bounds: Vec<i64>,
    pub upper_bounds: Vec<i64>,
}

impl EconomyFile {
    pub fn from_economy(e: &Economy) -> Self {
        EconomyFile {
            items: e.real_item_names().to_vec(),
            buyers: e.buyer_count(),
            valuations: e.buyers().map(|i| e.valuations(i)[1..].to_vec()).collect(),
            lower_bounds: e.lower_bounds().real().to_vec(),
            upper_bounds: e.upper_bounds().real().to_vec(),
        }
    }

    pub fn into_economy(self) -> Result<Economy, IoError> {
        if self.valuations.len() != self.buyers {
            return Err(IoError::Economy(vec![EconomyError::DimensionMismatch {
                what: "valuations (one row per buyer)".into(),
                expected: self.buyers,
                found: self.valuations.len(),
            }]));
        }
        let with_dummy = |v: Vec<i64>| std::iter::once(0).chain(v).collect::<Vec<_>>();
        validate_economy(RawEconomy {
            item_names: self.items,
            valuations: self.valuations.into_iter().map(with_dummy).collect(),
            lower_bounds: with_dummy(self.lower_bounds),
            upper_bounds: with_dummy(self.upper_bounds),
        })
        .map_err(IoError::Economy)
    }
}

pub fn parse_economy(text: &str) -> Result<Economy, IoError> {
    serde_json::from_str::<EconomyFile>(text)?.into_economy()
}

pub fn load_economy(path: &Path) -> Result<Economy, IoError> {
    parse_economy(&read(path)?)
}

pub fn economy_to_json(e: &Economy) -> String {
    serde_json::to_string_pretty(&EconomyFile::from_economy(e)).expect("economy files always serialize")
}

pub(crate) fn read(path: &Path) -> Result<String, IoError> {
    std::fs::read_to_string(path).map_err(|source| IoError::Read { path: path.display().to_string(), source })
}

/// On-disk `(p, R, π)`: prices of real items, forbidden `[buyer, item]`
/// pairs, and one item name per buyer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TupleFile {
    pub prices: Vec<i64>,
    #[serde(default)]
    pub rationing_zeros: Vec<(usize, String)>,
    pub allocation: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tuple {
    pub prices: PriceVector,
    pub rationing: RationingSystem,
    pub allocation: Allocation,
}

pub fn item_by_name(e: &Economy, name: &str) -> Result<ItemId, IoError> {
    e.item_by_name(name).ok_or_else(|| IoError::Reference(format!("unknown item {name:?}")))
}

pub fn buyer_by_label(e: &Economy, label: usize) -> Result<BuyerId, IoError> {
    BuyerId::from_label(label).filter(|&i| e.contains_buyer(i)).ok_or_else(|| {
        IoError::Reference(format!("unknown buyer {label} (buyers are numbered 1..={})", e.buyer_count()))
    })
}

/// Resolves `[buyer, item]` pairs into a rationing system.
pub fn rationing_from_zeros(e: &Economy, zeros: &[(usize, String)]) -> Result<RationingSystem, IoError> {
    let mut r = RationingSystem::for_economy(e);
    for (label, name) in zeros {
        r.forbid(buyer_by_label(e, *label)?, item_by_name(e, name)?)?;
    }
    Ok(r)
}

pub fn real_prices(e: &Economy, prices: &[i64]) -> Result<PriceVector, IoError> {
    if prices.len() != e.item_count() - 1 {
        return Err(IoError::Reference(format!(
            "expected {} prices (one per real item), found {}",
            e.item_count() - 1,
            prices.len()
        )));
    }
    Ok(PriceVector::from_real(prices))
}

impl TupleFile {
    pub fn from_parts(e: &Economy, prices: &PriceVector, rationing: &RationingSystem, allocation: &Allocation) -> Self {
        TupleFile {
            prices: prices.real().to_vec(),
            rationing_zeros: rationing
                .zeros()
                .into_iter()
                .map(|(i, a)| (i.label(), e.item_name(a).to_string()))
                .collect(),
            allocation: allocation.as_slice().iter().map(|&a| e.item_name(a).to_string()).collect(),
        }
    }

    pub fn resolve(&self, e: &Economy) -> Result<Tuple, IoError> {
        let prices = real_prices(e, &self.prices)?;
        let rationing = rationing_from_zeros(e, &self.rationing_zeros)?;
        if self.allocation.len() != e.buyer_count() {
            return Err(IoError::Reference(format!(
                "allocation lists {} buyers, economy has {}",
                self.allocation.len(),
                e.buyer_count()
            )));
        }
        let items = self.allocation.iter().map(|n| item_by_name(e, n)).collect::<Result<Vec<_>, _>>()?;
        Ok(Tuple { prices, rationing, allocation: Allocation::new(items)? })
    }
}

/// Reads a tuple from either a tuple file or a JSON-lines trace whose last
/// non-empty line is the tuple.
pub fn parse_tuple(text: &str) -> Result<TupleFile, IoError> {
    match serde_json::from_str::<TupleFile>(text) {
        Ok(t) => Ok(t),
        Err(whole) => match text.lines().rev().find(|l| !l.trim().is_empty()) {
            Some(last) if last.trim() != text.trim() => Ok(serde_json::from_str(last)?),
            _ => Err(whole.into()),
        },
    }
}

pub fn load_tuple(path: &Path) -> Result<TupleFile, IoError> {
    parse_tuple(&read(path)?)
}

fn names<'e>(e: &'e Economy, items: &ItemSet) -> Vec<&'e str> {
    items.iter().map(|&a| e.item_name(a)).collect()
}

/// One JSON object per round.
pub fn round_to_json(e: &Economy, r: &RoundRecord) -> Value {
    json!({
        "t": r.t,
        "label": r.label,
        "prices": r.prices.real(),
        "x_min": names(e, &r.x_min),
        "u_sets": r.forbidden.iter().map(|u| names(e, u)).collect::<Vec<_>>(),
        "sold_buyers": r.sold_buyers.iter().map(|i| i.label()).collect::<Vec<_>>(),
        "demands": r.demands.iter().map(|d| d.as_ref().map(|d| names(e, d))).collect::<Vec<_>>(),
        "sold_items": names(e, &r.sold_items),
        "lottery": r.lottery.as_ref().map(|l| json!({
            "item": e.item_name(l.item),
            "entrants": l.entrants.iter().map(|i| i.label()).collect::<Vec<_>>(),
            "winner": l.winner.label(),
        })),
    })
}

/// JSON lines: one record per round, then the terminal tuple.
pub fn trace_to_jsonl(e: &Economy, trace: &Trace) -> String {
    let mut out = String::new();
    for r in &trace.rounds {
        writeln!(out, "{}", round_to_json(e, r)).expect("writing to a string");
    }
    let o = &trace.outcome;
    let tuple = TupleFile::from_parts(e, &o.prices, &o.rationing, &o.allocation);
    writeln!(out, "{}", serde_json::to_string(&tuple).expect("tuples always serialize")).expect("writing to a string");
    out
}

fn set(e: &Economy, items: &ItemSet) -> String {
    e.format_items(items)
}

/// Renders a trace with the columns `t | p_o .. | X_min | U_i .. | N' | D_i .. | X'`.
pub fn trace_table(e: &Economy, trace: &Trace) -> String {
    let mut header = vec!["t".to_string()];
    header.extend(e.items().map(|a| format!("p_{}", e.item_name(a))));
    header.push("X_min".into());
    header.extend(e.buyers().map(|i| format!("U_{i}")));
    header.push("N'".into());
    header.extend(e.buyers().map(|i| format!("D_{i}")));
    header.push("X'".into());
    header.push("lottery".into());

    let mut rows = vec![header];
    for r in &trace.rounds {
        let mut row = vec![r.label.clone()];
        row.extend(r.prices.as_slice().iter().map(|p| p.to_string()));
        row.push(set(e, &r.x_min));
        row.extend(r.forbidden.iter().map(|u| set(e, u)));
        let sold: Vec<String> = r.sold_buyers.iter().map(|i| i.to_string()).collect();
        row.push(format!("{{{}}}", sold.join(",")));
        row.extend(r.demands.iter().map(|d| d.as_ref().map_or_else(|| "-".to_string(), |d| set(e, d))));
        row.push(set(e, &r.sold_items));
        row.push(match &r.lottery {
            None => String::new(),
            Some(l) => {
                let entrants: Vec<String> = l.entrants.iter().map(|i| i.to_string()).collect();
                format!("{} among {{{}}} won by {}", e.item_name(l.item), entrants.join(","), l.winner)
            }
        });
        rows.push(row);
    }

    let widths: Vec<usize> =
        (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut out = String::new();
    for (k, row) in rows.iter().enumerate() {
        let cells: Vec<String> = row.iter().zip(&widths).map(|(c, &w)| format!("{c:<w$}")).collect();
        writeln!(out, "{}", cells.join(" | ").trim_end()).expect("writing to a string");
        if k == 0 {
            let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
            writeln!(out, "{}", rule.join("-+-")).expect("writing to a string");
        }
    }
    let o = &trace.outcome;
    writeln!(out, "final prices: {}", price_tuple(&o.prices)).expect("writing to a string");
    writeln!(out, "allocation:   {}", allocation_tuple(e, &o.allocation)).expect("writing to a string");
    out
}

/// `(0,5,4,4,7)`, dummy first.
pub fn price_tuple(p: &PriceVector) -> String {
    let v: Vec<String> = p.as_slice().iter().map(|x| x.to_string()).collect();
    format!("({})", v.join(","))
}

/// `(o,c,b,a,d)`, buyer 1 first.
pub fn allocation_tuple(e: &Economy, pi: &Allocation) -> String {
    let v: Vec<&str> = pi.as_slice().iter().map(|&a| e.item_name(a)).collect();
    format!("({})", v.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanism::{run_mapr, LotteryPolicy};
    use crate::model::fixtures::example1;

    const EXAMPLE1: &str = r#"{
        "items": ["a", "b", "c", "d"],
        "buyers": 5,
        "valuations": [[4,3,5,7],[7,6,8,3],[5,5,8,7],[9,4,3,2],[6,2,4,10]],
        "lower_bounds": [5,4,1,5],
        "upper_bounds": [6,6,4,7]
    }"#;

    #[test]
    fn economy_round_trip() {
        let e = parse_economy(EXAMPLE1).unwrap();
        assert_eq!(e, example1());
        assert_eq!(parse_economy(&economy_to_json(&e)).unwrap(), e);
    }

    #[test]
    fn economy_errors() {
        assert!(matches!(parse_economy("{"), Err(IoError::Json(_))));
        assert!(matches!(parse_economy(&EXAMPLE1.replace("\"buyers\": 5", "\"buyers\": 4")), Err(IoError::Economy(_))));
        assert!(matches!(parse_economy(&EXAMPLE1.replace("\"d\"]", "\"o\"]")), Err(IoError::Economy(_))));
        assert!(matches!(parse_economy(&EXAMPLE1.replace("[5,4,1,5]", "[5,4,5,5]")), Err(IoError::Economy(_))));
    }

    #[test]
    fn tuple_from_trace() {
        let e = example1();
        let trace = run_mapr(&e, &mut LotteryPolicy::scripted([BuyerId(1)])).unwrap();
        let jsonl = trace_to_jsonl(&e, &trace);
        assert_eq!(jsonl.lines().count(), trace.rounds.len() + 1);
        let t = parse_tuple(&jsonl).unwrap().resolve(&e).unwrap();
        assert_eq!(t.prices, trace.outcome.prices);
        assert_eq!(t.rationing, trace.outcome.rationing);
        assert_eq!(t.allocation, trace.outcome.allocation);
        let solo = serde_json::to_string(&TupleFile::from_parts(&e, &t.prices, &t.rationing, &t.allocation)).unwrap();
        assert_eq!(parse_tuple(&solo).unwrap().resolve(&e).unwrap(), t);
    }

    #[test]
    fn tuple_reference_errors() {
        let e = example1();
        let bad_item = TupleFile { prices: vec![5, 4, 4, 7], rationing_zeros: vec![], allocation: vec!["z".into(); 5] };
        assert!(matches!(bad_item.resolve(&e), Err(IoError::Reference(_))));
        let bad_buyer = TupleFile {
            prices: vec![5, 4, 4, 7],
            rationing_zeros: vec![(6, "c".into())],
            allocation: vec!["o".into(); 5],
        };
        assert!(matches!(bad_buyer.resolve(&e), Err(IoError::Reference(_))));
        let shared = TupleFile { prices: vec![5, 4, 4, 7], rationing_zeros: vec![], allocation: vec!["a".into(); 5] };
        assert!(matches!(shared.resolve(&e), Err(IoError::Model(_))));
    }

    #[test]
    fn round_json_fields() {
        let e = example1();
        let trace = run_mapr(&e, &mut LotteryPolicy::scripted([BuyerId(1)])).unwrap();
        let v = round_to_json(&e, &trace.rounds[3]);
        assert_eq!(v["prices"], json!([5, 4, 4, 5]));
        assert_eq!(v["x_min"], json!(["c"]));
        assert_eq!(v["lottery"], json!({"item": "c", "entrants": [2, 3], "winner": 2}));
        let v = round_to_json(&e, &trace.rounds[4]);
        assert_eq!(v["label"], json!("4.1"));
        assert_eq!(v["demands"][1], Value::Null);
        assert_eq!(v["u_sets"][2], json!(["c"]));
    }

    #[test]
    fn table_mentions_every_round() {
        let e = example1();
        let trace = run_mapr(&e, &mut LotteryPolicy::scripted([BuyerId(2)])).unwrap();
        let table = trace_table(&e, &trace);
        for label in ["4.2", "5.2", "6.2"] {
            assert!(table.lines().any(|l| l.starts_with(label)), "{label} missing");
        }
        assert!(table.contains("final prices: (0,5,4,4,7)"));
        assert!(table.contains("allocation:   (o,b,c,a,d)"));
    }
}
