//! Verifying a tuple and seeing which conditions a broken one violates.

use mapr::equilibrium::check_cwe;
use mapr::io::{parse_economy, parse_tuple};
use mapr::{Allocation, BuyerId, ItemId};

fn main() {
    let e = parse_economy(include_str!("../data/example1.json")).expect("bundled economy is valid");
    let t = parse_tuple(include_str!("../data/example1_eq.json")).unwrap().resolve(&e).unwrap();

    let cert = check_cwe(&e, &t.prices, &t.rationing, &t.allocation).unwrap();
    print!("{}", cert.display(&e));

    // give buyer 5 nothing: d is left unsold above its lower bound
    let mut items = t.allocation.as_slice().to_vec();
    items[4] = ItemId::DUMMY;
    let broken = Allocation::new(items).unwrap();
    println!("\nbuyer 5 receives o instead of d:");
    print!("{}", check_cwe(&e, &t.prices, &t.rationing, &broken).unwrap().display(&e));

    let mut r = t.rationing.clone();
    r.forbid(BuyerId(0), ItemId(2)).unwrap();
    println!("\nbuyer 1 additionally barred from b:");
    print!("{}", check_cwe(&e, &t.prices, &r, &t.allocation).unwrap().display(&e));
}
