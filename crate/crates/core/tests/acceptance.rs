//! Acceptance suite: one PASS/FAIL line per criterion, then a nonzero exit
//! if any failed. Tolerances live in `mbsim::checks`.
//!
//! `cargo test --test acceptance -- law3 incast` runs a subset.

use std::process::ExitCode;
use std::time::Instant;

use mbsim::checks::{run_check, CHECK_NAMES};

const SEED: u64 = 1;

fn main() -> ExitCode {
    let filters: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = Vec::new();
    let mut ran = 0;
    for name in CHECK_NAMES {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        ran += 1;
        let t = Instant::now();
        match run_check(name, SEED).expect("known check") {
            Ok(outcome) => {
                println!("{outcome}");
                println!("    ({:.1} s)", t.elapsed().as_secs_f64());
                if !outcome.pass {
                    failed.push(name);
                }
            }
            Err(e) => {
                println!("FAIL {name}: error {e}");
                failed.push(name);
            }
        }
    }
    println!("\nacceptance: {} of {ran} passed", ran - failed.len());
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
