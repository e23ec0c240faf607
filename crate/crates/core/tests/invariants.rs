//! Cross-module invariants: suite completeness, soundness under refinement,
//! and the product-space instances built from embeddings.

use bmlab_core::checkers::{
    check_bm, check_theorem_a, theorem_suite, BmOptions, VerdictStatus,
};
use bmlab_core::density::{Density1D, DensityND};
use bmlab_core::gridset::{build_set, random_set, Lattice, RandomFamily, SetSpec, Window};
use bmlab_core::means::{raw_power_combination, ExtReal, Lambda, PParam};
use bmlab_core::metric::{pushforward_density, EmbeddedSpace};
use bmlab_core::rational::rat;

fn lam(n: i64, d: i64) -> Lambda {
    Lambda::new(rat(n, d)).unwrap()
}

#[test]
fn theorem_suite_never_certifies_violations_under_gates() {
    for seed in [1u64, 2, 5, 23, 99] {
        let suite = theorem_suite(seed, &BmOptions::refined(2)).unwrap();
        assert!(suite.len() >= 7);
        for (name, v) in suite {
            if v.gates_passed() && v.rigorous {
                assert_ne!(v.status, VerdictStatus::CertifiedViolation, "{name} seed {seed}");
            }
        }
    }
}

#[test]
fn refining_the_measure_never_flips_certified_statuses() {
    // Same point sets, tighter brackets: certified statuses are stable and
    // margins only improve.
    let lattice = Lattice::new(2, rat(1, 8)).unwrap();
    let window = Window::new(vec![rat(-2, 1), rat(-2, 1)], vec![rat(2, 1), rat(2, 1)]).unwrap();
    let gauss = DensityND::gaussian(1.0, 2);
    for seed in 0..30u64 {
        let a = random_set(RandomFamily::Wu, &lattice, &window, 5_000 + seed).unwrap();
        let b = random_set(RandomFamily::Wu, &lattice, &window, 6_000 + seed).unwrap();
        let l = lam(1, 2);
        let coarse = check_theorem_a(&a, &b, l, &gauss, &BmOptions::refined(1)).unwrap();
        let fine = check_theorem_a(&a, &b, l, &gauss, &BmOptions::refined(2)).unwrap();
        match coarse.status {
            VerdictStatus::CertifiedHolds => {
                assert_eq!(fine.status, VerdictStatus::CertifiedHolds, "seed {seed}")
            }
            VerdictStatus::CertifiedViolation => {
                assert_eq!(fine.status, VerdictStatus::CertifiedViolation, "seed {seed}")
            }
            VerdictStatus::Inconclusive => {}
        }
        assert!(fine.hold_margin >= coarse.hold_margin - 1e-12, "seed {seed}");
        assert!(fine.violation_margin >= coarse.violation_margin - 1e-12, "seed {seed}");
    }
}

#[test]
fn log_axis_times_lebesgue_line_satisfies_multiplicative_bm() {
    // Product of the log-embedded half line (weight e^u in embedded
    // coordinates) with a Lebesgue line: the multiplicative inequality holds
    // on random pairs authored on the embedded grid.
    let e = pushforward_density(&EmbeddedSpace::log(), &Density1D::Lebesgue).unwrap();
    let phi = DensityND::Product { factors: vec![e, Density1D::Lebesgue] };
    let lattice = Lattice::new(2, rat(1, 8)).unwrap();
    let window = Window::new(vec![rat(-2, 1), rat(-2, 1)], vec![rat(2, 1), rat(2, 1)]).unwrap();
    for seed in 0..40u64 {
        let a = random_set(RandomFamily::Any, &lattice, &window, 51_000 + seed).unwrap();
        let b = random_set(RandomFamily::Any, &lattice, &window, 52_000 + seed).unwrap();
        let v = check_bm(&a, &b, lam(1, 2), PParam::Zero, &phi, &BmOptions::default()).unwrap();
        assert_ne!(v.status, VerdictStatus::CertifiedViolation, "seed {seed}");
    }
}

#[test]
fn general_variant_handles_measure_zero_operands() {
    // With μ(B) exactly zero (set outside a compactly supported density),
    // the plain convention zeroes the right-hand side — the plain claim is
    // vacuous there — while the general variant compares against
    // (1-λ)^{1/p} μ(A), which is the measure-zero extension limit.
    use bmlab_core::rational::RatStr;
    let lattice = Lattice::new(1, rat(1, 4)).unwrap();
    let table = Density1D::PiecewiseConstant {
        breakpoints: vec![RatStr(rat(-1, 1)), RatStr(rat(0, 1)), RatStr(rat(1, 1))],
        values: vec![1.0, 1.0],
    };
    let phi = DensityND::Product { factors: vec![table] };
    let a = build_set(&SetSpec::boxed(vec![rat(-1, 1)], vec![rat(1, 1)]), &lattice).unwrap();
    let b = build_set(&SetSpec::boxed(vec![rat(2, 1)], vec![rat(3, 1)]), &lattice).unwrap();
    let l = lam(1, 2);
    let p = PParam::finite(rat(1, 2));

    let plain = check_bm(&a, &b, l, p, &phi, &BmOptions::default()).unwrap();
    let general = check_bm(&a, &b, l, p, &phi, &BmOptions { general: true, ..Default::default() }).unwrap();
    assert_eq!(plain.mu_b.upper, 0.0);
    assert_eq!(plain.rhs.upper, 0.0);
    // General variant: rhs sits at the (1-λ)^{1/p} μ(A) = μ(A)/4 limit.
    let expected = raw_power_combination(plain.mu_a.lower_ext(), ExtReal::ZERO, l, p).to_f64();
    assert!((general.rhs.lower - expected).abs() < 1e-12);
    assert!((general.rhs.lower - 0.5).abs() < 1e-9); // μ(A) = 2, so 2/4
}

#[test]
fn raw_limit_matches_quarter_of_mu_a_at_half() {
    // (1-λ)^{1/p} at λ = 1/2, p = 1/2 is exactly 1/4.
    let v = raw_power_combination(
        ExtReal::finite(0.8),
        ExtReal::ZERO,
        lam(1, 2),
        PParam::finite(rat(1, 2)),
    );
    assert!((v.to_f64() - 0.2).abs() < 1e-12);
}
