//! End-to-end acceptance criteria. Each criterion prints one PASS/FAIL line;
//! the process exits non-zero when any criterion fails.

mod cli;
mod estimator;
mod flows;
mod geometry;
mod mds;
mod support;

use std::panic::{self, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use support::Verdict;

type Check = fn() -> Verdict;

const CRITERIA: [(&str, Check); 14] = [
    ("closed-form coordinates match numeric oracles", geometry::closed_forms_match_oracles),
    ("projection gradients match finite differences", geometry::gradients_match_finite_differences),
    ("pullback metrics reduce to Euclidean SW", estimator::pullback_reduces_to_euclidean),
    ("Lorentz and Poincare estimates agree", estimator::lorentz_and_poincare_agree),
    ("estimate is bounded by exact W_p", estimator::bounded_by_exact_wasserstein),
    ("1D transport matches the LP", estimator::one_dimensional_ot_is_exact),
    ("Monte-Carlo error halves per 4x directions", estimator::monte_carlo_rate),
    ("Gaussian kernel Gram matrices are PSD", estimator::gaussian_kernel_is_psd),
    ("Euclidean flow converges", flows::euclidean_flow_converges),
    ("hyperbolic flows converge", flows::hyperbolic_flow_converges),
    ("SPD log-Euclidean flow converges", flows::spd_flow_converges),
    ("affine-invariant Busemann coordinate", geometry::affine_invariant_busemann),
    ("MDS re-embeds hyperbolic points", mds::self_embedding),
    ("CLI output is deterministic", cli::cli_is_deterministic),
];

fn main() -> ExitCode {
    // `cargo test -- --list` and friends
    if std::env::args().any(|a| a == "--list") {
        for (i, (name, _)) in CRITERIA.iter().enumerate() {
            println!("criterion_{:02}: {name}", i + 1);
        }
        return ExitCode::SUCCESS;
    }
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, (name, check)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let verdict = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Verdict::fail(format!("panicked: {msg}"))
        });
        let status = if verdict.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!verdict.pass);
        println!(
            "{status} criterion {:>2} {name} [{:.1}s]: {}",
            i + 1,
            start.elapsed().as_secs_f64(),
            verdict.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", CRITERIA.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
