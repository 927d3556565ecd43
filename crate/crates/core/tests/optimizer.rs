mod common;

use obfb::bank_gen::{mclt, Window};
use obfb::diagnostics::polynomial_pr_error;
use obfb::filterbank::AnalysisBank;
use obfb::inverse_solver::{build_system, SolverOptions};
use obfb::objective::{CostConfig, CostFunction, Criterion, LocalizationCost};
use obfb::optimizer::{default_order, design, minimize, optimize, OptimOptions, StopReason};
use obfb::par;
use obfb::paramspace::build_paramspace;
use obfb::tol::Tolerances;

fn small_bank() -> AnalysisBank {
    mclt(4, 2, 1.5, &Window::Sine).unwrap()
}

fn run(criterion: Criterion, hermitian: bool, opts: &OptimOptions) -> obfb::optimizer::Design {
    design(&small_bank(), &CostConfig::new(criterion), hermitian, None, opts, &SolverOptions::default()).unwrap()
}

#[test]
fn default_order_adds_one_anticausal_block() {
    assert_eq!(default_order(2, 0), (3, 0));
    assert_eq!(default_order(0, 1), (1, 1));
}

#[test]
fn costs_decrease_strictly_and_converge() {
    for criterion in [Criterion::Time, Criterion::Freq] {
        for hermitian in [false, true] {
            let d = run(criterion, hermitian, &OptimOptions::default());
            let r = &d.optimized.result;
            assert!(r.history.windows(2).all(|w| w[1].cost < w[0].cost));
            assert!(r.cost < r.history[0].cost, "{criterion:?} hermitian {hermitian}");
            assert_eq!(r.history.last().unwrap().cost, r.cost);
            assert_ne!(r.stop, StopReason::MaxIterations);
            assert_eq!(r.history.len(), r.iterations + 1);
        }
    }
}

#[test]
fn optimized_banks_keep_perfect_reconstruction() {
    let bank = small_bank();
    for criterion in [Criterion::Time, Criterion::Freq] {
        let d = run(criterion, true, &OptimOptions::default());
        assert!(polynomial_pr_error(&bank, &d.optimized.bank).unwrap() < 1e-10);
        assert_eq!(d.optimized.bank.hermitian_defect(), 0.0);
    }
}

#[test]
fn intermediate_iterates_keep_perfect_reconstruction() {
    let bank = small_bank();
    for max_iter in [1, 3, 10, 30] {
        let opts = OptimOptions { max_iter, ..Default::default() };
        let d = run(Criterion::Time, false, &opts);
        assert!(d.optimized.result.iterations <= max_iter);
        assert!(polynomial_pr_error(&bank, &d.optimized.bank).unwrap() < 1e-10);
    }
}

#[test]
fn iteration_budget_is_reported() {
    let opts = OptimOptions { max_iter: 2, ..Default::default() };
    let d = run(Criterion::Freq, false, &opts);
    assert_eq!(d.optimized.result.stop, StopReason::MaxIterations);
    assert_eq!(d.optimized.result.iterations, 2);
}

#[test]
fn runs_are_deterministic_across_thread_counts() {
    let a = run(Criterion::Freq, false, &OptimOptions::default());
    let b = par::with_threads(1, || run(Criterion::Freq, false, &OptimOptions::default()));
    assert_eq!(a.optimized.result.c, b.optimized.result.c);
    assert_eq!(a.optimized.result.cost, b.optimized.result.cost);
    assert_eq!(a.optimized.result.iterations, b.optimized.result.iterations);
}

#[test]
fn zero_dimensional_space_returns_the_inverse() {
    // k = 2, k' = 2: the minimal order has no free parameters.
    let bank = mclt(8, 2, 2.0, &Window::Sine).unwrap();
    let d = design(
        &bank,
        &CostConfig::new(Criterion::Time),
        true,
        Some((0, 0)),
        &OptimOptions::default(),
        &SolverOptions::default(),
    )
    .unwrap();
    assert_eq!(d.param_space.dim(), 0);
    assert_eq!(d.optimized.result.stop, StopReason::EmptyParameter);
    assert_eq!(d.optimized.result.iterations, 0);
    assert_eq!(d.optimized.bank.max_abs_diff(&d.start).unwrap(), 0.0);
}

#[test]
fn explicit_order_is_used() {
    let d = design(
        &small_bank(),
        &CostConfig::new(Criterion::Time),
        false,
        Some((1, 2)),
        &OptimOptions { max_iter: 5, ..Default::default() },
        &SolverOptions::default(),
    )
    .unwrap();
    assert_eq!((d.param_space.p1(), d.param_space.p2()), (1, 2));
    assert_eq!((d.optimized.bank.p1(), d.optimized.bank.p2()), (1, 2));
}

#[test]
fn minimize_rejects_bad_inputs() {
    let bank = small_bank();
    let ps = build_paramspace(&build_system(&bank.polyphase(), 1, 1), &Tolerances::default()).unwrap();
    let cost = LocalizationCost::new(&ps, CostConfig::new(Criterion::Time).kernels(&ps, &bank).unwrap()).unwrap();
    let wrong = nalgebra::DMatrix::zeros(ps.dim() + 1, ps.n());
    assert!(minimize(&cost, wrong, &OptimOptions::default()).is_err());
    let bad = OptimOptions { eps: 0.0, ..Default::default() };
    assert!(minimize(&cost, ps.zero_param(), &bad).is_err());
}

#[test]
fn optimize_starts_from_pseudo_inverse() {
    let bank = small_bank();
    let ps = build_paramspace(&build_system(&bank.polyphase(), 1, 1), &Tolerances::default()).unwrap();
    let kernels = CostConfig::new(Criterion::Time).kernels(&ps, &bank).unwrap();
    let cost = LocalizationCost::new(&ps, kernels.clone()).unwrap();
    let start = cost.cost(&ps.zero_param()).unwrap();
    let out = optimize(&ps, kernels, &OptimOptions::default()).unwrap();
    assert_eq!(out.result.history[0].cost, start);
    assert_eq!(out.result.history[0].iteration, 0);
    assert!(out.result.cost < start);
}
