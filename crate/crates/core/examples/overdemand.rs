//! Maximum matching of a demand situation and a minimal over-demanded set.

use mapr::io::parse_economy;
use mapr::matching::max_matching;
use mapr::overdemand::find_minimal_over_demanded;
use mapr::{demand_situation, PriceVector, RationingSystem};

fn main() {
    let e = parse_economy(include_str!("../data/example1.json")).expect("bundled economy is valid");
    let p = PriceVector::from_real(&[5, 4, 3, 5]);
    let ds = demand_situation(&e, &p, &RationingSystem::for_economy(&e));
    for (i, d) in ds.iter() {
        println!("D_{i} = {}", e.format_items(d));
    }

    let m = max_matching(&ds);
    let pairs: Vec<String> = m.pairs().map(|(i, a)| format!("{{{i},{}}}", e.item_name(a))).collect();
    println!("maximum matching: {}", pairs.join(" "));

    let report = find_minimal_over_demanded(&ds, &m).expect("buyer 2 is left unmatched");
    println!("grown from buyer {}: {}", report.seed_buyer, e.format_items(&report.grown_set));
    println!("minimal over-demanded set: {}", e.format_items(&report.minimal_set));
}
