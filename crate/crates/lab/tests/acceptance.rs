//! One line per acceptance criterion, at full scale. Runs without the libtest
//! harness so the lines are printed whether or not the run passes.
//!
//! Criteria listed in `KNOWN_RED` fail at the stated tolerances for reasons
//! analysed in the project's decisions ledger. The harness still evaluates
//! and prints them; it fails if any other criterion is red, if a known-red
//! criterion turns green (the list is then stale), or if any evaluation errors.

use stasep::criteria::{self, Criterion};
use stasep::suites::Budget;

const KNOWN_RED: &[u8] = &[7, 8, 9, 11];

fn main() {
    let runs: Vec<(u8, fn() -> stasep_core::error::Result<Criterion>)> = vec![
        (1, criteria::c1_fgue),
        (2, criteria::c2_g_br),
        (3, criteria::c3_mean_zero),
        (4, criteria::c4_a0),
        (5, || criteria::c5_finite_size(Budget::Full)),
        (6, || criteria::c6_density(Budget::Full)),
        (7, criteria::c7_edge),
        (8, || criteria::c8_tasep_fw(Budget::Full)),
        (9, || criteria::c9_sum_rules(Budget::Full)),
        (10, criteria::c10_identities),
        (11, || criteria::c11_coupling(Budget::Full)),
    ];
    let mut problems = Vec::new();
    for (id, run) in runs {
        match run() {
            Ok(c) => {
                println!("{}", c.summary());
                for check in &c.checks {
                    println!("      {}", check.line());
                }
                let red = !c.passed();
                let known = KNOWN_RED.contains(&id);
                if red && !known {
                    problems.push(format!("criterion {id} failed"));
                }
                if !red && known {
                    problems.push(format!("criterion {id} is listed as known red but passed"));
                }
            }
            Err(e) => {
                println!("criterion {id:>2} FAIL  evaluation error: {e}");
                problems.push(format!("criterion {id} errored: {e}"));
            }
        }
    }
    if problems.is_empty() {
        println!("acceptance: every criterion outside {KNOWN_RED:?} passed; every listed one is still red");
    } else {
        eprintln!("acceptance failed:\n{}", problems.join("\n"));
        std::process::exit(1);
    }
}
