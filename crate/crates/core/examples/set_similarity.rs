//! Scoring an attribution against the ground-truth drivers.
//!
//! cargo run --example set_similarity

use std::collections::BTreeSet;

use xpb::evalx::set_similarity;

fn main() {
    let tokens = ["N3", "A1", "N7", "H2", "U1", "N3"];
    let truth: BTreeSet<String> = ["A1", "H2", "U1"].iter().map(|s| s.to_string()).collect();

    let good = [0.01, 0.9, -0.02, 0.5, -0.7, 0.03];
    let poor = [0.8, 0.1, 0.6, 0.05, 0.0, 0.7];
    for (name, scores) in [("faithful", good), ("distracted", poor)] {
        let s = set_similarity(&scores, &tokens, &truth, truth.len());
        println!("{name:<10} similarity {:?}", s);
    }
    // No informative tokens: the observation is excluded rather than scored.
    println!("empty truth {:?}", set_similarity(&good, &tokens, &BTreeSet::new(), 0));
}
