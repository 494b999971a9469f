//! Acceptance suite runner: prints one pass/fail line per check and exits
//! nonzero if any check fails.  Pass `--quick` (or set `NLSLAB_QUICK=1`)
//! for the reduced-size variant.

use std::process::ExitCode;

fn main() -> ExitCode {
    let quick = std::env::args().any(|a| a == "--quick")
        || std::env::var("NLSLAB_QUICK").is_ok_and(|v| v == "1");
    if quick {
        println!("acceptance suite (quick mode)");
    } else {
        println!("acceptance suite");
    }
    let results = nlslab::verify::run_all(quick);
    let mut failures = 0usize;
    for r in &results {
        println!("{}", r.line());
        if !r.passed {
            failures += 1;
        }
    }
    println!(
        "{} of {} checks passed",
        results.len() - failures,
        results.len()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
