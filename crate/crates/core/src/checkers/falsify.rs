//! Randomized counterexample search with seeded deterministic parallelism.
//!
//! Each trial derives its own seed from the master seed with a splitmix64
//! step, so the per-trial work is independent of scheduling; records are
//! collected by trial index and the emitted CSV is byte-identical for any
//! worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_bm, BmOptions, Verdict, VerdictStatus};
use crate::density::DensitySpec;
use crate::gridset::{build_set, random_set, Lattice, RandomFamily, SetSpec, Window};
use crate::means::{Lambda, PParam};
use crate::rational::Rat;
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct FalsifyConfig {
    pub family: RandomFamily,
    pub density: DensitySpec,
    pub p: PParam,
    pub lambdas: Vec<Lambda>,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub dim: usize,
    pub pitch: Rat,
    pub window: Window,
    pub general: bool,
    pub measure_refine: i64,
}

impl FalsifyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() {
            return Err(Error::invalid("at least one lambda is required"));
        }
        if self.trials == 0 {
            return Err(Error::invalid("trials must be > 0"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be > 0"));
        }
        if self.window.dim() != self.dim || self.density.dim() != self.dim {
            return Err(Error::invalid("window/density dimension mismatch"));
        }
        Ok(())
    }
}

/// One falsification trial, CSV-ready.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub lambda: Lambda,
    pub p: PParam,
    pub verdict: Verdict,
    /// Serialized witness pair when the trial certified a violation.
    pub witness: Option<(SetSpec, SetSpec)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FalsifyReport {
    pub records: Vec<TrialRecord>,
    pub min_hold_margin: f64,
    pub violations: usize,
}

/// Standard splitmix64 step: derives independent per-trial seeds.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add((index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_trial(cfg: &FalsifyConfig, lattice: &Lattice, index: usize) -> Result<TrialRecord> {
    let seed = derive_seed(cfg.seed, index as u64);
    let seed_a = derive_seed(seed, 0);
    let seed_b = derive_seed(seed, 1);
    let a = random_set(cfg.family, lattice, &cfg.window, seed_a)?;
    let b = random_set(cfg.family, lattice, &cfg.window, seed_b)?;
    let lam = cfg.lambdas[index % cfg.lambdas.len()];
    let phi = cfg.density.to_density()?;
    // Adaptive sharpening: screen with a cheap bracket first; only an
    // inconclusive verdict can change under refinement, so re-measuring
    // undecided trials at the full refinement is sound and deterministic.
    let screen = cfg.measure_refine.min(2);
    let opts = BmOptions { general: cfg.general, weight_q: None, measure_refine: screen };
    let mut verdict = check_bm(&a, &b, lam, cfg.p, &phi, &opts)?;
    if verdict.status == VerdictStatus::Inconclusive && cfg.measure_refine > screen {
        let opts = BmOptions { general: cfg.general, weight_q: None, measure_refine: cfg.measure_refine };
        verdict = check_bm(&a, &b, lam, cfg.p, &phi, &opts)?;
    }
    let witness = if verdict.status == VerdictStatus::CertifiedViolation {
        Some((SetSpec::from_set(&a), SetSpec::from_set(&b)))
    } else {
        None
    };
    Ok(TrialRecord { trial: index, seed, lambda: lam, p: cfg.p, verdict, witness })
}

/// Runs the randomized search. The output is independent of the worker
/// count: trials are indexed and each derives its own seed.
pub fn falsify(cfg: &FalsifyConfig) -> Result<FalsifyReport> {
    cfg.validate()?;
    let lattice = Lattice::new(cfg.dim, cfg.pitch)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))?;
    let records: Result<Vec<TrialRecord>> = pool.install(|| {
        (0..cfg.trials)
            .into_par_iter()
            .map(|i| run_trial(cfg, &lattice, i))
            .collect()
    });
    let records = records?;
    let min_hold_margin = records
        .iter()
        .map(|r| r.verdict.hold_margin)
        .fold(f64::INFINITY, f64::min);
    let violations = records
        .iter()
        .filter(|r| r.verdict.status == VerdictStatus::CertifiedViolation)
        .count();
    Ok(FalsifyReport { records, min_hold_margin, violations })
}

/// CSV with the stable column set:
/// `trial,seed,lambda,p,mu_A_lo,mu_A_hi,mu_B_lo,mu_B_hi,mu_C_lo,mu_C_hi,margin_lo,margin_hi,status`.
pub fn report_csv(records: &[TrialRecord]) -> String {
    let mut out = String::from(
        "trial,seed,lambda,p,mu_A_lo,mu_A_hi,mu_B_lo,mu_B_hi,mu_C_lo,mu_C_hi,margin_lo,margin_hi,status\n",
    );
    for r in records {
        let v = &r.verdict;
        let margin = v.lhs.sub(&v.rhs);
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.trial,
            r.seed,
            crate::rational::format_rat(r.lambda.rat()),
            r.p.describe(),
            v.mu_a.lower,
            v.mu_a.upper,
            v.mu_b.lower,
            v.mu_b.upper,
            v.lhs.lower,
            v.lhs.upper,
            margin.lower,
            margin.upper,
            v.status.as_str(),
        ));
    }
    out
}

/// Re-checks a serialized witness pair and returns its verdict.
pub fn verify_witness(
    witness: &(SetSpec, SetSpec),
    lattice: &Lattice,
    lam: Lambda,
    p: PParam,
    density: &DensitySpec,
    general: bool,
    measure_refine: i64,
) -> Result<Verdict> {
    let a = build_set(&witness.0, lattice)?;
    let b = build_set(&witness.1, lattice)?;
    let phi = density.to_density()?;
    let opts = BmOptions { general, weight_q: None, measure_refine };
    check_bm(&a, &b, lam, p, &phi, &opts)
}
