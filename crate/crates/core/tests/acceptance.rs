//! One line per acceptance criterion. Criterion 2 asks for
//! `U^G x curl U^G = 0`, which does not hold (the term is the pressure
//! gradient of the Oseen vortex); it is reported as a failure and is the
//! only failure this target tolerates.

use burgers_core::acceptance::{run_all, run_criterion, CRITERIA};

const KNOWN_UNATTAINABLE: &[u8] = &[2];

fn main() {
    // `cargo test -- --list` and filters from the default harness are not supported here.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let only: Option<Vec<u8>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    println!("acceptance suite ({} criteria)", CRITERIA.len());
    let outcomes = match only {
        Some(ids) => ids
            .into_iter()
            .map(|id| {
                let o = run_criterion(id);
                println!("{o}");
                o
            })
            .collect(),
        None => run_all(|o| println!("{o}")),
    };
    let passed = outcomes.iter().filter(|o| o.passed).count();
    println!("{passed}/{} criteria passed", outcomes.len());
    let unexpected: Vec<u8> = outcomes.iter().filter(|o| !o.passed && !KNOWN_UNATTAINABLE.contains(&o.id)).map(|o| o.id).collect();
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
