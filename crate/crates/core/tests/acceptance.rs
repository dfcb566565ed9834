//! Acceptance suite: runs all twelve criteria at their stated bands and
//! budgets and prints one PASS/FAIL line per criterion.
//!
//! C07 is a known failure: the supremum carries the extra factor
//! `max_θ θ^ν Ψ(θ)/(1+θ^ν)` (≈ 0.105 at ν = 0.5), so its literal band cannot
//! hold. The run reports it as FAIL and instead requires the corrected
//! diagnostic to pass; any other failure, or C07 unexpectedly passing, makes
//! this target fail.

use std::process::ExitCode;

use critlab::harness::criteria::{catalog, SuiteContext};

const KNOWN_FAILURES: &[u8] = &[7];

fn main() -> ExitCode {
    let ctx = SuiteContext::default();
    let mut unexpected = Vec::new();
    println!("acceptance suite (seed {})", ctx.seed);
    for c in catalog() {
        let r = c.run(&ctx);
        println!("{}", r.line());
        for d in &r.outcome.diagnostics {
            println!("    note{}: {}", if d.passed { "" } else { " (unmet)" }, d.label);
        }
        let known = KNOWN_FAILURES.contains(&r.id);
        let ok = if known {
            let corrected = r.outcome.diagnostics.first().is_some_and(|d| d.passed);
            !r.passed && r.numerical.is_none() && corrected
        } else {
            r.passed
        };
        if !ok {
            unexpected.push(c.label());
        }
    }
    let known: Vec<String> = KNOWN_FAILURES.iter().map(|id| format!("C{id:02}")).collect();
    if unexpected.is_empty() {
        println!("acceptance: all criteria as expected (known failures: {})", known.join(", "));
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for {}", unexpected.join(", "));
        ExitCode::FAILURE
    }
}
