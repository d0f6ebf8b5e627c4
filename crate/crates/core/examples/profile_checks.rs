//! Rough wall-clock profiling of the heavier checks; not part of the test
//! suite.

use std::time::Instant;

use heavenly_core::covering::CoveringContext;
use heavenly_core::forms::SolveOutcome;
use heavenly_core::pseudogroup::{
    build_reduced_forms, check_cont_structure, solve_reduced_structure, LiftedCoframe,
    TheoremBranch,
};

fn stamp(label: &str, start: Instant) {
    println!("{label}: {} ms", start.elapsed().as_millis());
}

fn main() {
    for n in [1, 2] {
        let t = Instant::now();
        let reports = check_cont_structure(n).unwrap();
        let all = reports.iter().all(|r| r.is_pass());
        stamp(&format!("check_cont_structure({n}) pass={all}"), t);
    }

    let t = Instant::now();
    let lc3 = LiftedCoframe::new(3).unwrap();
    stamp("build coframe n=3", t);
    let t = Instant::now();
    let out = lc3.theta_solve(1).unwrap();
    stamp(&format!("theta_solve(1) n=3 solved={}", matches!(out, SolveOutcome::Solved(_))), t);
    let t = Instant::now();
    let out = lc3.xi_solve(1).unwrap();
    stamp(&format!("xi_solve(1) n=3 solved={}", matches!(out, SolveOutcome::Solved(_))), t);
    let t = Instant::now();
    let out = lc3.sigma_solve(1, 1).unwrap();
    stamp(&format!("sigma_solve(1,1) n=3 solved={}", matches!(out, SolveOutcome::Solved(_))), t);
    let t = Instant::now();
    let out = lc3.sigma_solve(1, 2).unwrap();
    stamp(&format!("sigma_solve(1,2) n=3 solved={}", matches!(out, SolveOutcome::Solved(_))), t);

    let t = Instant::now();
    let forms = build_reduced_forms().unwrap();
    let cov = CoveringContext::new(4, 2);
    let r1 = forms.theorem_residual(TheoremBranch::One, &cov).unwrap();
    let r2 = forms.theorem_residual(TheoremBranch::Two, &cov).unwrap();
    stamp(&format!("theorem both branches zero={}", r1.is_zero() && r2.is_zero()), t);

    let t = Instant::now();
    let reports = solve_reduced_structure().unwrap();
    let all = reports.iter().all(|r| r.is_pass());
    stamp(&format!("solve_reduced_structure pass={all}"), t);

    let t = Instant::now();
    let cov64 = CoveringContext::new(6, 4);
    let compat = cov64.compatibility_residual(true).unwrap();
    stamp(&format!("compatibility zero={}", compat.is_zero()), t);
    let t = Instant::now();
    let flat = cov64.we_flatness(true).unwrap();
    stamp(&format!("flatness zero={}", flat.is_zero()), t);
}
