//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Tolerances and thresholds are pinned here, in code. Soundness-style
//! criteria compare runs on the *same* point sets represented at two
//! pitches (refinement is exact), so a certified verdict may never flip.

use std::fmt::Write as _;

use bmlab_core::checkers::{
    check_bm, check_concavity_profile, check_theorem_a, m_mu_functional, run_repro,
    w1_quermassintegral, BmOptions, FunctionalOptions, VerdictStatus,
};
use bmlab_core::density::{measure, Density1D, DensityND};
use bmlab_core::gridset::{
    build_set, combine, random_set, GridSet, Lattice, RandomFamily, SetSpec, Window,
};
use bmlab_core::means::{p_mean, raw_power_combination, ExtReal, Lambda, PParam};
use bmlab_core::rational::{rat, Rat, RatStr};

use num_rational::Ratio;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

fn lam(n: i64, d: i64) -> Lambda {
    Lambda::new(rat(n, d)).unwrap()
}

fn pass(criterion: u32, name: &str) {
    println!("ACCEPTANCE {criterion:02} {name}: PASS");
}

/// Random product density with positively decreasing piecewise factors:
/// value runs fall away from the origin on both sides.
fn random_pos_dec_density(seed: u64) -> DensityND {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut factors = Vec::new();
    for _ in 0..2 {
        let half_pieces = 4i64;
        let mut right = Vec::new();
        let mut v = 0.5 + rng.random::<f64>();
        for _ in 0..half_pieces {
            right.push(v);
            v *= 0.3 + 0.7 * rng.random::<f64>();
        }
        let mut values: Vec<f64> = right.iter().rev().copied().collect();
        values.extend(right.iter().copied());
        let breakpoints: Vec<RatStr> =
            (-half_pieces..=half_pieces).map(|k| RatStr(rat(k, 2))).collect();
        let f = Density1D::PiecewiseConstant { breakpoints, values };
        f.validate().unwrap();
        assert!(f.positively_decreasing());
        factors.push(f);
    }
    DensityND::Product { factors }
}

fn wu_pair(lattice: &Lattice, window: &Window, seed: u64) -> (GridSet, GridSet) {
    let a = random_set(RandomFamily::Wu, lattice, window, 0xA000_0000 + seed).unwrap();
    let b = random_set(RandomFamily::Wu, lattice, window, 0xB000_0000 + seed).unwrap();
    (a, b)
}

#[test]
fn criterion_01_theorem_a_suite() {
    // 200 seeded weakly unconditional pairs, Gaussian and random positively
    // decreasing product densities, three lambdas, pitch 1/16: zero
    // certified violations and hold margins no worse than the bracket slack.
    let lattice = Lattice::new(2, rat(1, 16)).unwrap();
    let window = Window::new(vec![rat(-1, 1), rat(-1, 1)], vec![rat(1, 1), rat(1, 1)]).unwrap();
    let gauss = DensityND::gaussian(1.0, 2);
    let lambdas = [lam(1, 4), lam(1, 2), lam(3, 4)];
    let opts = BmOptions::default();
    let mut worst_slack = f64::INFINITY;
    let started = std::time::Instant::now();
    for seed in 0..200u64 {
        let (a, b) = wu_pair(&lattice, &window, seed);
        let piecewise = random_pos_dec_density(0xD000 + seed);
        for phi in [&gauss, &piecewise] {
            for l in lambdas {
                let v = check_theorem_a(&a, &b, l, phi, &opts).unwrap();
                assert!(v.gates_passed(), "gates failed at seed {seed}");
                assert_ne!(
                    v.status,
                    VerdictStatus::CertifiedViolation,
                    "violation at seed {seed} lambda {l:?}"
                );
                worst_slack = worst_slack.min(v.hold_margin + v.combined_width());
            }
        }
    }
    assert!(worst_slack >= -1e-12, "hold margin fell below the bracket slack: {worst_slack}");
    assert!(started.elapsed().as_secs() < 300, "theorem A suite exceeded 5 minutes");
    pass(1, "theorem A suite, 200 wu pairs x 2 densities x 3 lambdas");
}

#[test]
fn criterion_02_gaussian_shifted_balls() {
    // Shift scan t in {2..10} at pitch 1/8 finds certified violations, and
    // they persist at pitch 1/16.
    let out = run_repro("gauss-shifted-balls", &Default::default()).unwrap();
    assert!(out.reproduced, "{}", out.report);
    for needle in ["pitch 1/8:", "pitch 1/16:"] {
        assert!(out.report.contains(needle), "missing section {needle}");
    }
    // Violating shifts at the coarse pitch stay violating at the fine one.
    let coarse: Vec<i64> = violating_shifts(&out.report, "pitch 1/8:");
    let fine: Vec<i64> = violating_shifts(&out.report, "pitch 1/16:");
    assert!(!coarse.is_empty());
    for t in &coarse {
        assert!(fine.contains(t), "shift {t} violated at 1/8 but not 1/16\n{}", out.report);
    }
    pass(2, "gauss shifted balls violate at 1/8 and persist at 1/16");
}

fn violating_shifts(report: &str, section: &str) -> Vec<i64> {
    let mut out = Vec::new();
    let mut in_section = false;
    for line in report.lines() {
        if line.starts_with("pitch ") {
            in_section = line.starts_with(section);
            continue;
        }
        if in_section && line.contains("certified_violation") {
            if let Some(t) = line.trim().strip_prefix("shift t=") {
                if let Some((t, _)) = t.split_once(':') {
                    out.push(t.parse().unwrap());
                }
            }
        }
    }
    out
}

#[test]
fn criterion_03_nayar_tkocz_cone() {
    // Aperture/shift scan: some (alpha, eps) certifies a violation at both
    // window sizes.
    let out = run_repro("nayar-tkocz-cone", &Default::default()).unwrap();
    assert!(out.reproduced, "{}", out.report);
    assert!(
        out.report.contains("witnesses violating at both windows: [("),
        "no both-window witness listed\n{}",
        out.report
    );
    pass(3, "nayar-tkocz cone violates at both windows");
}

#[test]
fn criterion_04_x_squared_contrapositive() {
    // Density x^2, A = [0,1], B = [0,2], lambda = 1/2, pitch 1/64: certified
    // violation with margin bracket containing 0.375 +- 0.02.
    let lattice = Lattice::new(1, rat(1, 64)).unwrap();
    let a = build_set(&SetSpec::boxed(vec![rat(0, 1)], vec![rat(1, 1)]), &lattice).unwrap();
    let b = build_set(&SetSpec::boxed(vec![rat(0, 1)], vec![rat(2, 1)]), &lattice).unwrap();
    let phi = DensityND::Product { factors: vec![Density1D::Power { alpha: 2.0 }] };
    let v = check_bm(&a, &b, lam(1, 2), PParam::finite(rat(1, 1)), &phi, &BmOptions::default()).unwrap();
    assert_eq!(v.status, VerdictStatus::CertifiedViolation);
    let margin = v.rhs.sub(&v.lhs);
    assert!(margin.contains(0.375), "margin [{}, {}]", margin.lower, margin.upper);
    assert!((margin.mid() - 0.375).abs() <= 0.02, "margin midpoint {}", margin.mid());
    pass(4, "x^2 density violation margin brackets 0.375");
}

#[test]
fn criterion_05_isoperimetric_equality() {
    // A = B = [0,1]^2, Lebesgue: |W1 + (1/2) M_mu - mu(A)| <= 1e-3 with the
    // schedule down to 1/64 and Richardson extrapolation.
    let lattice = Lattice::new(2, rat(1, 1)).unwrap();
    let a = build_set(&SetSpec::boxed(vec![rat(0, 1), rat(0, 1)], vec![rat(1, 1), rat(1, 1)]), &lattice)
        .unwrap();
    let leb = DensityND::lebesgue(2);
    let opts = FunctionalOptions {
        measure_refine: 1,
        t_schedule: vec![rat(1, 8), rat(1, 16), rat(1, 32), rat(1, 64)],
    };
    let w1 = w1_quermassintegral(&a, &a, &leb, &opts).unwrap();
    let m_mu = m_mu_functional(&a, &leb, &opts).unwrap();
    let mu_a = measure(&a, &leb).unwrap();
    let lhs = w1.mid() + 0.5 * m_mu.mid();
    assert!((lhs - mu_a.mid()).abs() <= 1e-3, "|{lhs} - {}| > 1e-3", mu_a.mid());
    pass(5, "isoperimetric equality |W1 + M_mu/2 - mu| <= 1e-3");
}

#[test]
fn criterion_06_concavity_profiles() {
    // 50 seeded weakly unconditional convex pairs (aligned boxes containing
    // the origin), Gaussian product, t in {0, 1/4, ..., 2}: no certified
    // positive second difference.
    let lattice = Lattice::new(2, rat(1, 8)).unwrap();
    let gauss = DensityND::gaussian(1.0, 2);
    let ts: Vec<Rat> = (0..=8).map(|j| rat(j, 4)).collect();
    let opts = FunctionalOptions { measure_refine: 2, ..Default::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(0xC6);
    for seed in 0..50 {
        let mut random_box = || {
            let lo_x = -rng.random_range(1..=10i64);
            let lo_y = -rng.random_range(1..=10i64);
            let hi_x = rng.random_range(1..=10i64);
            let hi_y = rng.random_range(1..=10i64);
            build_set(
                &SetSpec::boxed(vec![rat(lo_x, 8), rat(lo_y, 8)], vec![rat(hi_x, 8), rat(hi_y, 8)]),
                &lattice,
            )
            .unwrap()
        };
        let a = random_box();
        let b = random_box();
        let v = check_concavity_profile(&a, &b, &gauss, &ts, &opts).unwrap();
        assert!(v.gates_passed(), "seed {seed}");
        assert_ne!(v.status, VerdictStatus::CertifiedViolation, "seed {seed}");
    }
    pass(6, "concavity profiles on 50 wu-convex pairs");
}

#[test]
fn criterion_07_coordinatewise_suites() {
    let mut ov = std::collections::BTreeMap::new();
    ov.insert("pairs".to_string(), "50".to_string());
    let log = run_repro("log-bm-boxes", &ov).unwrap();
    assert!(log.reproduced, "{}", log.report);
    assert!(log.report.contains("|error| = "), "endpoint oracle line missing");
    let pbm = run_repro("p-bm-boxes", &ov).unwrap();
    assert!(pbm.reproduced, "{}", pbm.report);
    for p in ["p=1/4", "p=1/2", "p=3/4"] {
        assert!(pbm.report.contains(p), "{p} missing from the scan");
    }
    pass(7, "log and p coordinatewise suites match oracles, 50 pairs each");
}

#[test]
fn criterion_08_means_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let fin = ExtReal::finite;
    // Monotonicity in p on 10^4 random triples.
    for _ in 0..10_000 {
        let a = fin(0.05 + 20.0 * rng.random::<f64>());
        let b = fin(0.05 + 20.0 * rng.random::<f64>());
        let l = Lambda::new(rat(1 + rng.random_range(0..15i64), 16)).unwrap();
        let p1 = rat(rng.random_range(-24..24i64), 8);
        let p2 = rat(rng.random_range(-24..24i64), 8);
        let (lo, hi) = if p1 <= p2 { (p1, p2) } else { (p2, p1) };
        let mlo = p_mean(a, b, l, PParam::finite(lo)).to_f64();
        let mhi = p_mean(a, b, l, PParam::finite(hi)).to_f64();
        assert!(mhi >= mlo * (1.0 - 1e-12) - 1e-12, "monotonicity failed: {mlo} > {mhi}");
    }
    // Limits: p -> 0 and p -> +-inf within 1e-4 relative.
    for _ in 0..2_000 {
        let a = fin(0.05 + 20.0 * rng.random::<f64>());
        let b = fin(0.05 + 20.0 * rng.random::<f64>());
        let l = Lambda::new(rat(1 + rng.random_range(0..15i64), 16)).unwrap();
        let m0 = p_mean(a, b, l, PParam::Zero).to_f64();
        let near0 = p_mean(a, b, l, PParam::finite(rat(1, 1_000_000))).to_f64();
        assert!((near0 - m0).abs() / m0 <= 1e-4);
        let near0n = p_mean(a, b, l, PParam::finite(rat(-1, 1_000_000))).to_f64();
        assert!((near0n - m0).abs() / m0 <= 1e-4);
        let top = p_mean(a, b, l, PParam::PosInf).to_f64();
        let near_top = p_mean(a, b, l, PParam::finite(rat(1_000_000, 1))).to_f64();
        assert!((near_top - top).abs() / top <= 1e-4);
        let bot = p_mean(a, b, l, PParam::NegInf).to_f64();
        let near_bot = p_mean(a, b, l, PParam::finite(rat(-1_000_000, 1))).to_f64();
        assert!((near_bot - bot).abs() / bot <= 1e-4);
    }
    // Zero conventions are exact.
    for p in [PParam::finite(rat(1, 2)), PParam::finite(rat(2, 1)), PParam::PosInf, PParam::Zero] {
        assert_eq!(p_mean(fin(0.0), fin(7.0), lam(2, 5), p), ExtReal::ZERO);
    }
    assert!((raw_power_combination(fin(0.0), fin(8.0), lam(1, 2), PParam::finite(rat(1, 1))).to_f64() - 4.0).abs() < 1e-12);
    assert!((raw_power_combination(fin(0.0), fin(1.0), lam(1, 2), PParam::finite(rat(1, 2))).to_f64() - 0.25).abs() < 1e-12);
    // Reverse Hoelder on 10^4 random tuples.
    for _ in 0..10_000 {
        let a1 = 0.1 + 10.0 * rng.random::<f64>();
        let a2 = 0.1 + 10.0 * rng.random::<f64>();
        let b1 = 0.1 + 10.0 * rng.random::<f64>();
        let b2 = 0.1 + 10.0 * rng.random::<f64>();
        let l = Lambda::new(rat(1 + rng.random_range(0..15i64), 16)).unwrap();
        let p = rat(1 + rng.random_range(0..8i64), 8);
        let q = p / (p + rat(1, 1));
        let lhs = l.complement() * a1 * b1 + l.value() * a2 * b2;
        let r1 = raw_power_combination(fin(a1), fin(a2), l, PParam::finite(-p)).to_f64();
        let r2 = raw_power_combination(fin(b1), fin(b2), l, PParam::finite(q)).to_f64();
        assert!(lhs >= r1 * r2 * (1.0 - 1e-12));
    }
    pass(8, "means monotonicity, limits, conventions, reverse Hoelder");
}

#[test]
fn criterion_09_combine_matches_pairwise_oracle() {
    // 10^4 sampled membership queries across 20 random instances against
    // the brute-force pairwise-cell oracle: zero mismatches.
    let lattice = Lattice::new(2, rat(1, 4)).unwrap();
    let window = Window::new(vec![rat(-2, 1), rat(-2, 1)], vec![rat(2, 1), rat(2, 1)]).unwrap();
    let mut queries = 0usize;
    for seed in 0..20u64 {
        let a = random_set(RandomFamily::Any, &lattice, &window, 0x90_000 + seed).unwrap();
        let b = random_set(RandomFamily::Any, &lattice, &window, 0x91_000 + seed).unwrap();
        let l = lam(1 + (seed % 3) as i64, 4);
        let c = combine(&a, &b, l).unwrap();
        let hc = c.pitch();
        let bounds = c.index_bounds().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..500 {
            // Cell centers are strictly interior, so membership is unambiguous.
            let z: Vec<Rat> = bounds
                .iter()
                .map(|(lo, hi)| Ratio::new(2 * rng.random_range(*lo - 2..=*hi + 2) + 1, 2) * hc)
                .collect();
            let got = c.contains_point(&z).unwrap();
            let want = oracle_membership(&a, &b, l, &z);
            assert_eq!(got, want, "mismatch at seed {seed}, z = {z:?}");
            queries += 1;
        }
    }
    assert_eq!(queries, 10_000);
    pass(9, "combine membership matches the pairwise oracle on 10^4 queries");
}

/// Independent oracle: z is in the combination iff some cell pair's exact
/// rational combination interval contains it on every axis.
fn oracle_membership(a: &GridSet, b: &GridSet, l: Lambda, z: &[Rat]) -> bool {
    let h = a.pitch();
    let one_minus = Ratio::new(1, 1) - l.rat();
    for ca in a.cells() {
        for cb in b.cells() {
            let mut inside = true;
            for d in 0..a.dim() {
                let lo = one_minus * Ratio::new(ca[d], 1) * h + l.rat() * Ratio::new(cb[d], 1) * h;
                let hi = one_minus * Ratio::new(ca[d] + 1, 1) * h + l.rat() * Ratio::new(cb[d] + 1, 1) * h;
                if z[d] < lo || z[d] > hi {
                    inside = false;
                    break;
                }
            }
            if inside {
                return true;
            }
        }
    }
    false
}

#[test]
fn criterion_10_soundness_under_refinement() {
    // Representative inputs from the suites above, re-run on the exact
    // twofold refinement of the same point sets: certified statuses never
    // flip and margins only improve.
    let mut cases: Vec<(String, GridSet, GridSet, Lambda, PParam, DensityND)> = Vec::new();

    // Theorem A sample.
    let lattice16 = Lattice::new(2, rat(1, 16)).unwrap();
    let window = Window::new(vec![rat(-1, 1), rat(-1, 1)], vec![rat(1, 1), rat(1, 1)]).unwrap();
    for seed in 0..30u64 {
        let (a, b) = wu_pair(&lattice16, &window, seed);
        cases.push((
            format!("thm_a seed {seed}"),
            a,
            b,
            lam(1, 2),
            PParam::finite(rat(1, 2)),
            DensityND::gaussian(1.0, 2),
        ));
    }
    // Shifted balls.
    let lattice8 = Lattice::new(2, rat(1, 8)).unwrap();
    let ball = SetSpec::Ball {
        center: vec![RatStr(rat(0, 1)), RatStr(rat(0, 1))],
        radius: RatStr(rat(1, 1)),
        mode: Default::default(),
    };
    let disk = build_set(&ball, &lattice8).unwrap();
    for t in [2i64, 6, 10] {
        let b = bmlab_core::gridset::translate(&disk, &[rat(t, 1), rat(0, 1)]).unwrap();
        cases.push((
            format!("balls t={t}"),
            disk.clone(),
            b,
            lam(1, 2),
            PParam::finite(rat(1, 2)),
            DensityND::gaussian(1.0, 2),
        ));
    }
    // Cone witnesses near the aperture limit.
    let lattice16c = Lattice::new(2, rat(1, 16)).unwrap();
    for eps in [rat(1, 4), rat(1, 2)] {
        let w = Window::new(vec![rat(-6, 1), rat(-1, 1)], vec![rat(6, 1), rat(11, 1)]).unwrap();
        let cone = SetSpec::Cone {
            alpha_deg: 89.0,
            window: w,
            mode: bmlab_core::gridset::DigitizationMode::Inner,
        };
        let a = build_set(&cone, &lattice16c).unwrap();
        let b = bmlab_core::gridset::translate(&a, &[rat(0, 1), -eps]).unwrap();
        cases.push((
            format!("cone eps={eps}"),
            a,
            b,
            lam(1, 2),
            PParam::finite(rat(1, 2)),
            DensityND::gaussian(1.0, 2),
        ));
    }
    // The x^2 line counterexample.
    let lattice64 = Lattice::new(1, rat(1, 64)).unwrap();
    cases.push((
        "x-squared".to_string(),
        build_set(&SetSpec::boxed(vec![rat(0, 1)], vec![rat(1, 1)]), &lattice64).unwrap(),
        build_set(&SetSpec::boxed(vec![rat(0, 1)], vec![rat(2, 1)]), &lattice64).unwrap(),
        lam(1, 2),
        PParam::finite(rat(1, 1)),
        DensityND::Product { factors: vec![Density1D::Power { alpha: 2.0 }] },
    ));

    let mut flips = String::new();
    for (name, a, b, l, p, phi) in &cases {
        let coarse = check_bm(a, b, *l, *p, phi, &BmOptions::refined(2)).unwrap();
        let fine = check_bm(&a.refine(2), &b.refine(2), *l, *p, phi, &BmOptions::refined(2)).unwrap();
        let flip = matches!(
            (coarse.status, fine.status),
            (VerdictStatus::CertifiedHolds, VerdictStatus::CertifiedViolation)
                | (VerdictStatus::CertifiedViolation, VerdictStatus::CertifiedHolds)
                | (VerdictStatus::CertifiedHolds, VerdictStatus::Inconclusive)
                | (VerdictStatus::CertifiedViolation, VerdictStatus::Inconclusive)
        );
        if flip {
            writeln!(flips, "{name}: {:?} -> {:?}", coarse.status, fine.status).ok();
        }
        assert!(
            fine.hold_margin >= coarse.hold_margin - 1e-12
                && fine.violation_margin >= coarse.violation_margin - 1e-12,
            "{name}: margins regressed under refinement"
        );
    }
    assert!(flips.is_empty(), "status flips under refinement:\n{flips}");
    pass(10, "no verdict flips when the pitch is halved on the same sets");
}

#[test]
fn criterion_11_search_determinism() {
    // `bmlab search` with a fixed seed emits byte-identical CSV for worker
    // counts 1 and 8.
    let bin = env!("CARGO_BIN_EXE_bmlab");
    let dir = std::env::temp_dir().join(format!("bmlab-acc11-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "8"] {
        let csv = dir.join(format!("out-{workers}.csv"));
        let status = std::process::Command::new(bin)
            .args([
                "search",
                "--family",
                "wu",
                "--density",
                "gaussian",
                "--p",
                "1/2",
                "--trials",
                "200",
                "--seed",
                "7",
                "--workers",
                workers,
                "--pitch",
                "1/8",
                "--window",
                "2",
                "--csv",
            ])
            .arg(&csv)
            .status()
            .unwrap();
        assert!(status.success(), "search exited with {status}");
        outputs.push(std::fs::read(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1], "CSV differs between worker counts");
    assert!(outputs[0].len() > 1000);
    std::fs::remove_dir_all(&dir).ok();
    pass(11, "search CSV byte-identical for 1 and 8 workers");
}
