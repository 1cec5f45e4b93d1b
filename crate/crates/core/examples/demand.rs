//! Constrained demand and indirect utility at fixed prices and rationing.

use mapr::io::parse_economy;
use mapr::{demand_set, indirect_utility, BuyerId, ItemId, PriceVector, RationingSystem};

fn main() {
    let e = parse_economy(include_str!("../data/example1.json")).expect("bundled economy is valid");
    let p = PriceVector::from_real(&[5, 4, 4, 7]);
    // buyers 1 and 3 may not ask for c
    let r = RationingSystem::with_forbidden(&e, [(BuyerId(0), ItemId(3)), (BuyerId(2), ItemId(3))]).unwrap();

    println!("buyer  V_i  D_i");
    for i in e.buyers() {
        let d = demand_set(&e, &p, &r, i);
        println!("{i:>5}  {:>3}  {}", indirect_utility(&e, &p, &r, i), e.format_items(&d));
    }
}
