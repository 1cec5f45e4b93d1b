//! Exact expected profits and prices over every lottery outcome.

use mapr::expectation::{decimal, enumerate_histories, expected_values, fraction, ExpectationConfig};
use mapr::io::{allocation_tuple, parse_economy, price_tuple};

fn main() {
    let e = parse_economy(include_str!("../data/example1.json")).expect("bundled economy is valid");
    let config = ExpectationConfig::default();
    let report = expected_values(&e, &config).expect("tree is small");

    for i in e.buyers() {
        let u = report.profit(i);
        println!("u*[{i}] = {:>4} = {}", fraction(u), decimal(u, 3));
    }
    for a in e.real_items() {
        println!("p*[{}] = {:>4}", e.item_name(a), fraction(report.price(a)));
    }
    println!("{}", report.tree_stats);

    for h in enumerate_histories(&e, &config).unwrap() {
        println!(
            "P = {}: winners {:?}, p = {}, allocation {}",
            fraction(&h.probability),
            h.winners.iter().map(|w| w.label()).collect::<Vec<_>>(),
            price_tuple(&h.prices),
            allocation_tuple(&e, &h.allocation)
        );
    }
}
