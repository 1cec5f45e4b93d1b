//! What buyer 1 gains by overstating one value, and why two buyers cannot gain.

use mapr::expectation::{fraction, ExpectationConfig};
use mapr::io::parse_economy;
use mapr::strategy::{
    default_cap, expected_profit_under_strategy, optimal_strategy_search, two_buyer_case_analysis, ManipulationProblem,
    SearchConfig, Strategy,
};
use mapr::BuyerId;

fn main() {
    let config = ExpectationConfig::default();

    let e = parse_economy(include_str!("../data/example1.json")).expect("bundled economy is valid");
    let problem = ManipulationProblem::new(&e, BuyerId(0)).unwrap();
    let truthful = Strategy::truthful(&problem);
    let lie = Strategy::from_real(&[4, 3, 7, 7]).unwrap();
    for (name, s) in [("truthful", &truthful), ("c overstated", &lie)] {
        let v = expected_profit_under_strategy(&problem, s, &config).unwrap();
        println!("{name:>13} {:?}: expected profit {}", s.real(), fraction(&v));
    }

    // two buyers fighting over a
    let two = parse_economy(
        r#"{"items":["a","b"],"buyers":2,"valuations":[[8,2],[8,1]],"lower_bounds":[2,1],"upper_bounds":[3,2]}"#,
    )
    .unwrap();
    let problem = ManipulationProblem::new(&two, BuyerId(0)).unwrap();
    let found = optimal_strategy_search(&problem, default_cap(&problem), &SearchConfig::default()).unwrap();
    println!(
        "two buyers: {} reports tried, best {}, truthful {}, truthful optimal: {}",
        found.evaluated,
        fraction(&found.best_profit),
        fraction(&found.truthful_profit),
        found.truthful_optimal
    );
    let verdict = two_buyer_case_analysis(&problem, &config).unwrap();
    println!("case {:?}, closed form {}", verdict.case, fraction(&verdict.closed_form));
}
