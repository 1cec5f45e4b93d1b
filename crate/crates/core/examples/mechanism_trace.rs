//! Both lottery branches of a run, printed round by round.

use mapr::io::{parse_economy, trace_table};
use mapr::mechanism::{run_mapr, LotteryPolicy};
use mapr::BuyerId;

fn main() {
    let e = parse_economy(include_str!("../data/example1.json")).expect("bundled economy is valid");
    for winner in [2, 3] {
        let trace = run_mapr(&e, &mut LotteryPolicy::scripted([BuyerId::from_label(winner).unwrap()]))
            .expect("the run terminates");
        println!("buyer {winner} wins the lottery for c:");
        println!("{}", trace_table(&e, &trace));
    }
}
