//! A seeded run, its JSON-lines trace, and an exact replay from the recorded winners.

use mapr::io::{parse_economy, parse_tuple, trace_to_jsonl};
use mapr::mechanism::{run_mapr, LotteryPolicy};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let e = parse_economy(include_str!("../data/example1.json")).expect("bundled economy is valid");

    let trace = run_mapr(&e, &mut LotteryPolicy::seeded(seed)).expect("the run terminates");
    let jsonl = trace_to_jsonl(&e, &trace);
    print!("{jsonl}");

    let replay = run_mapr(&e, &mut LotteryPolicy::scripted(trace.winners())).unwrap();
    assert_eq!(replay, trace);
    let tuple = parse_tuple(&jsonl).unwrap().resolve(&e).unwrap();
    assert_eq!(tuple.allocation, trace.outcome.allocation);
    let winners: Vec<usize> = trace.winners().iter().map(|w| w.label()).collect();
    println!("replayed {} rounds from winners {winners:?}", replay.rounds.len());
}
