//! Imbalance-scenario construction: exact class counts for every ratio from
//! 50:50 to 98:2, and the stratified 70/30 split that keeps minority
//! samples on both sides even at extreme imbalance.
//!
//! ```bash
//! cargo run --example imbalance_scenarios
//! ```

use asymcl::data::{generate_gaussians, split_train_test, ScenarioSpec};
use asymcl::harness::DEFAULT_SCENARIOS;

fn main() -> anyhow::Result<()> {
    println!(
        "{:>8} {:>10} {:>10} {:>14} {:>14}",
        "ratio", "majority", "minority", "train (0/1)", "test (0/1)"
    );
    for ratio in DEFAULT_SCENARIOS {
        let spec = ScenarioSpec::from_ratio(ratio, 1000, 42)?;
        let dataset = generate_gaussians(8, 6.0, &spec)?;
        let (train, test) = split_train_test(&dataset, 0.7, 7)?;
        let (tr0, tr1) = train.class_counts();
        let (te0, te1) = test.class_counts();
        println!(
            "{ratio:>8} {:>10} {:>10} {:>9}/{:<4} {:>9}/{:<4}",
            spec.majority_count(),
            spec.minority_count(),
            tr0,
            tr1,
            te0,
            te1
        );
    }

    // Requesting more minority samples than a source can provide fails
    // loudly, naming the short class.
    let source_spec = ScenarioSpec::from_ratio("90:10", 1000, 1)?;
    let source = generate_gaussians(4, 3.0, &source_spec)?;
    let greedy = ScenarioSpec::from_ratio("50:50", 1000, 2)?;
    match asymcl::data::apply_scenario(&source, &greedy) {
        Err(error) => println!("\nrebalancing 90:10 → 50:50 from 1000 samples: {error}"),
        Ok(_) => unreachable!(),
    }
    Ok(())
}
