//! Certified inequality verdicts and the per-theorem check suites.
//!
//! Every check compares a rigorous lower bound on the heavy side of an
//! inequality against a rigorous upper bound on the light side, so both
//! `certified_holds` and `certified_violation` are sound claims about the
//! exact sets being tested; `inconclusive` is the honest third state when
//! the brackets are too wide to decide. Hypothesis gates never abort a
//! check — counterexample hunting runs checks with hypotheses deliberately
//! violated — they only annotate the verdict.

mod falsify;
mod functionals;
mod repro;

pub use falsify::{falsify, report_csv, verify_witness, FalsifyConfig, FalsifyReport, TrialRecord};
pub use functionals::{
    check_concavity_profile, check_corollary_4_10, check_isoperimetric, m_mu_functional,
    w1_quermassintegral, FunctionalOptions,
};
pub use repro::{run_repro, ReproOutcome, REPRO_NAMES};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::density::{marginal_sup, measure_refined, section_by_slice, DensityND, MeasureBracket};
use crate::gridset::{combine, common_pitch, is_weakly_unconditional, scale_axis, GridSet, Lattice};
use crate::means::{
    bbl_exponent, p_mean, p_mean_weighted, raw_power_combination, ExtReal, Lambda, PParam,
};
use crate::rational::Rat;
use crate::{Error, Result};

/// How a precondition was established.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateMode {
    Exact,
    Sampled,
    BracketOverlap,
}

/// One annotated precondition of a check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisNote {
    pub name: String,
    pub passed: bool,
    pub mode: GateMode,
    pub detail: String,
}

impl HypothesisNote {
    fn new(name: &str, passed: bool, mode: GateMode, detail: impl Into<String>) -> HypothesisNote {
        HypothesisNote { name: name.to_string(), passed, mode, detail: detail.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    CertifiedHolds,
    CertifiedViolation,
    Inconclusive,
}

impl VerdictStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictStatus::CertifiedHolds => "certified_holds",
            VerdictStatus::CertifiedViolation => "certified_violation",
            VerdictStatus::Inconclusive => "inconclusive",
        }
    }
}

/// Certified outcome of an inequality check.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Verdict {
    pub status: VerdictStatus,
    /// `lhs.lower - rhs.upper`; `certified_holds` iff this is >= 0.
    pub hold_margin: f64,
    /// `rhs.lower - lhs.upper`; `certified_violation` iff this is > 0.
    pub violation_margin: f64,
    /// Bracket on the heavy side (the combined-set measure or `∫h`).
    pub lhs: MeasureBracket,
    /// Bracket on the light side (the mean of the operand measures).
    pub rhs: MeasureBracket,
    pub mu_a: MeasureBracket,
    pub mu_b: MeasureBracket,
    /// False when any contributing bracket was heuristic; such runs are
    /// never certified.
    pub rigorous: bool,
    pub hypotheses: Vec<HypothesisNote>,
    /// Set by checks whose statement has an `A = B` equality case.
    pub equality_case: Option<bool>,
}

impl Verdict {
    fn from_sides(
        lhs: MeasureBracket,
        rhs: MeasureBracket,
        mu_a: MeasureBracket,
        mu_b: MeasureBracket,
        hypotheses: Vec<HypothesisNote>,
    ) -> Verdict {
        let rigorous = lhs.rigorous && rhs.rigorous;
        let hold_margin = lhs.lower - rhs.upper;
        let violation_margin = rhs.lower - lhs.upper;
        let status = if !rigorous {
            VerdictStatus::Inconclusive
        } else if hold_margin >= 0.0 {
            VerdictStatus::CertifiedHolds
        } else if violation_margin > 0.0 {
            VerdictStatus::CertifiedViolation
        } else {
            VerdictStatus::Inconclusive
        };
        Verdict {
            status,
            hold_margin,
            violation_margin,
            lhs,
            rhs,
            mu_a,
            mu_b,
            rigorous,
            hypotheses,
            equality_case: None,
        }
    }

    /// Total slack of the comparison: both bracket widths.
    pub fn combined_width(&self) -> f64 {
        self.lhs.width() + self.rhs.width()
    }

    pub fn gates_passed(&self) -> bool {
        self.hypotheses.iter().all(|h| h.passed)
    }
}

/// Options shared by the set-based checks.
#[derive(Debug, Clone)]
pub struct BmOptions {
    /// Use the raw power combination (no `μ(A)μ(B) = 0` zeroing), as the
    /// general inequality variant requires.
    pub general: bool,
    /// Weighted variant exponent `q` (coefficients `(1-λ)^q, λ^q`).
    pub weight_q: Option<f64>,
    /// Measure brackets are evaluated on this exact refinement of the sets'
    /// pitch; set operations themselves are unaffected.
    pub measure_refine: i64,
}

impl Default for BmOptions {
    fn default() -> Self {
        BmOptions { general: false, weight_q: None, measure_refine: 1 }
    }
}

impl BmOptions {
    pub fn refined(r: i64) -> BmOptions {
        BmOptions { measure_refine: r, ..Default::default() }
    }
}

/// Mean bracket `M_p(μA, μB)` from the operand brackets; power means are
/// monotone in both arguments, so endpoint evaluation is an enclosure.
fn mean_bracket(
    mu_a: &MeasureBracket,
    mu_b: &MeasureBracket,
    lam: Lambda,
    p: PParam,
    general: bool,
    weight_q: Option<f64>,
) -> Result<MeasureBracket> {
    let eval = |a: ExtReal, b: ExtReal| -> Result<f64> {
        Ok(match weight_q {
            Some(q) => p_mean_weighted(a, b, lam, p, q)?.to_f64(),
            None => {
                if general {
                    raw_power_combination(a, b, lam, p).to_f64()
                } else {
                    p_mean(a, b, lam, p).to_f64()
                }
            }
        })
    };
    let lo = eval(mu_a.lower_ext(), mu_b.lower_ext())?;
    let hi = eval(mu_a.upper_ext(), mu_b.upper_ext())?;
    Ok(MeasureBracket::new(lo, hi, mu_a.rigorous && mu_b.rigorous))
}

/// Core Brunn-Minkowski check: `μ(C) ≥ M_p(μ(A), μ(B), λ)` with
/// `C = (1-λ)A + λB` computed exactly.
pub fn check_bm(
    a: &GridSet,
    b: &GridSet,
    lam: Lambda,
    p: PParam,
    phi: &DensityND,
    opts: &BmOptions,
) -> Result<Verdict> {
    let (a, b) = common_pitch(a, b)?;
    let c = combine(&a, &b, lam)?;
    check_bm_given(&a, &b, &c, lam, p, phi, opts)
}

/// Brunn-Minkowski check against a caller-supplied superset `C`.
pub fn check_bm_given(
    a: &GridSet,
    b: &GridSet,
    c: &GridSet,
    lam: Lambda,
    p: PParam,
    phi: &DensityND,
    opts: &BmOptions,
) -> Result<Verdict> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("check_bm requires non-empty sets".into()));
    }
    // All three brackets are evaluated at the same effective pitch (the
    // finest of the representation pitches over the requested refinement),
    // so neither side of the comparison carries avoidable slack.
    let finest = [a, b, c]
        .iter()
        .map(|s| s.pitch())
        .min()
        .expect("non-empty pitch list");
    let at_matched = |s: &GridSet| -> Result<MeasureBracket> {
        let q = s.pitch() / finest;
        let factor = if q.denom() == &1 { *q.numer() } else { 1 };
        measure_refined(s, phi, factor * opts.measure_refine)
    };
    let mu_a = at_matched(a)?;
    let mu_b = at_matched(b)?;
    let mu_c = at_matched(c)?;
    let rhs = mean_bracket(&mu_a, &mu_b, lam, p, opts.general, opts.weight_q)?;
    Ok(Verdict::from_sides(mu_c, rhs, mu_a, mu_b, Vec::new()))
}

/// Weakly unconditional product suite: gate on grid weak unconditionality of
/// both sets and positively decreasing factors, then check `BM(1/n)`.
pub fn check_theorem_a(
    a: &GridSet,
    b: &GridSet,
    lam: Lambda,
    phi: &DensityND,
    opts: &BmOptions,
) -> Result<Verdict> {
    let n = a.dim();
    let mut gates = Vec::new();
    gates.push(HypothesisNote::new(
        "A weakly unconditional",
        is_weakly_unconditional(a),
        GateMode::Exact,
        "anchor-level index zeroing closure",
    ));
    gates.push(HypothesisNote::new(
        "B weakly unconditional",
        is_weakly_unconditional(b),
        GateMode::Exact,
        "anchor-level index zeroing closure",
    ));
    let pos_dec = phi.product_positively_decreasing();
    gates.push(HypothesisNote::new(
        "product of positively decreasing factors",
        pos_dec == Some(true),
        GateMode::Exact,
        match pos_dec {
            Some(true) => "all factors structurally positively decreasing",
            Some(false) => "some factor is not positively decreasing",
            None => "density is not a product",
        },
    ));
    let p = PParam::finite(Ratio::new(1, n as i64));
    let mut v = check_bm(a, b, lam, p, phi, opts)?;
    v.hypotheses = gates;
    Ok(v)
}

/// Linear check under the equal-sup-section hypothesis along `axis`
/// (sections measured with the product of the remaining factors).
pub fn check_linear_equal_sup(
    a: &GridSet,
    b: &GridSet,
    lam: Lambda,
    axis: usize,
    phi: &DensityND,
    opts: &BmOptions,
) -> Result<Verdict> {
    let sup_a = crate::density::section_sup(a, axis, phi)?;
    let sup_b = crate::density::section_sup(b, axis, phi)?;
    let gate = HypothesisNote::new(
        "equal sup sections",
        sup_a.overlaps(&sup_b),
        GateMode::BracketOverlap,
        format!(
            "sup_A in [{:.6}, {:.6}], sup_B in [{:.6}, {:.6}]",
            sup_a.lower, sup_a.upper, sup_b.lower, sup_b.upper
        ),
    );
    let mut v = check_bm(a, b, lam, PParam::finite(Ratio::new(1, 1)), phi, opts)?;
    v.hypotheses = vec![gate];
    Ok(v)
}

/// Rescales `B` along the fiber axis so its sup section cell count matches
/// `A`'s exactly. Exact for 2-D sets with Lebesgue fibers, where the single
/// fiber axis absorbs a rational factor.
pub fn equalize_section_sup(a: &GridSet, b: &GridSet, axis: usize) -> Result<GridSet> {
    if a.dim() != 2 || b.dim() != 2 {
        return Err(Error::invalid("exact sup equalization is implemented for 2-D sets"));
    }
    let (a, b) = common_pitch(a, b)?;
    let fiber = 1 - axis;
    let count_sup = |s: &GridSet| -> Result<i64> {
        let mut best = 0i64;
        for j in crate::gridset::slice_indices(s, axis)? {
            let c = s.cells().filter(|c| c[axis] == j).count() as i64;
            best = best.max(c);
        }
        Ok(best)
    };
    let ca = count_sup(&a)?;
    let cb = count_sup(&b)?;
    scale_axis(&b, fiber, Ratio::new(ca, cb))
}

/// Central-slice linear check: the product density is `φ₁ ⊗ φ₂^(n-1)` with
/// `φ₁` positively decreasing and `φ₂` q-concave (sampled); the sup section
/// must be attained at the central slice (indices 0 and -1) for both sets.
pub fn check_theorem_4_7(
    a: &GridSet,
    b: &GridSet,
    lam: Lambda,
    phi: &DensityND,
    q: PParam,
    opts: &BmOptions,
) -> Result<Verdict> {
    let axis = 0usize;
    let mut gates = Vec::new();

    let factors = phi.factors();
    let first_pos_dec = factors.as_ref().map(|fs| fs[axis].positively_decreasing()).unwrap_or(false);
    gates.push(HypothesisNote::new(
        "first factor positively decreasing",
        first_pos_dec,
        GateMode::Exact,
        "structural check on the axis-0 factor",
    ));

    if let Some(fs) = &factors {
        let rest: Vec<_> = fs.iter().skip(1).cloned().collect();
        let rest_nd = DensityND::Product { factors: rest };
        let window = vec![(-3.0, 3.0); rest_nd.dim()];
        let sample = crate::density::is_p_concave_sampled(&rest_nd, q, &window, 500, 0x47)?;
        gates.push(HypothesisNote::new(
            "remaining factors q-concave",
            sample.holds,
            GateMode::Sampled,
            format!("500 sampled triples, q = {}", q.describe()),
        ));
    } else {
        gates.push(HypothesisNote::new(
            "remaining factors q-concave",
            false,
            GateMode::Sampled,
            "density is not a product",
        ));
    }

    for (name, s) in [("A", a), ("B", b)] {
        let slices = section_by_slice(s, axis, phi)?;
        let global = slices.iter().fold(MeasureBracket::ZERO, |acc, (_, b)| acc.max(b));
        let central = slices
            .iter()
            .filter(|(j, _)| *j == 0 || *j == -1)
            .fold(MeasureBracket::ZERO, |acc, (_, b)| acc.max(b));
        let passed = central.upper >= global.lower;
        let label = format!("central slice of {name} attains the sup");
        gates.push(HypothesisNote::new(
            &label,
            passed,
            GateMode::BracketOverlap,
            format!(
                "central [{:.6}, {:.6}] vs global [{:.6}, {:.6}]",
                central.lower, central.upper, global.lower, global.upper
            ),
        ));
    }

    let mut v = check_bm(a, b, lam, PParam::finite(Ratio::new(1, 1)), phi, opts)?;
    v.hypotheses = gates;
    Ok(v)
}

/// Linear check under the equal-sup-marginal hypothesis with respect to the
/// coordinate hyperplane orthogonal to `axis`, for a `p`-concave density
/// with `p ≥ -1/n`.
pub fn check_linear_marginal(
    a: &GridSet,
    b: &GridSet,
    lam: Lambda,
    axis: usize,
    phi: &DensityND,
    p: PParam,
    opts: &BmOptions,
) -> Result<Verdict> {
    let n = a.dim() as i64;
    let mut gates = Vec::new();

    let p_ok = match p {
        PParam::PosInf | PParam::Zero => true,
        PParam::Finite(pr) => pr >= -Ratio::new(1, n),
        PParam::NegInf => false,
    };
    gates.push(HypothesisNote::new(
        "concavity exponent in range",
        p_ok,
        GateMode::Exact,
        format!("p = {} vs -1/n = -1/{n}", p.describe()),
    ));

    let window = vec![(-3.0, 3.0); phi.dim()];
    let sample = crate::density::is_p_concave_sampled(phi, p, &window, 500, 0x48)?;
    gates.push(HypothesisNote::new(
        "density p-concave",
        sample.holds,
        GateMode::Sampled,
        "500 sampled triples",
    ));

    let ma = marginal_sup(a, axis, phi)?;
    let mb = marginal_sup(b, axis, phi)?;
    gates.push(HypothesisNote::new(
        "equal sup marginals",
        ma.overlaps(&mb),
        GateMode::BracketOverlap,
        format!(
            "sup_A in [{:.6}, {:.6}], sup_B in [{:.6}, {:.6}]",
            ma.lower, ma.upper, mb.lower, mb.upper
        ),
    ));

    let mut v = check_bm(a, b, lam, PParam::finite(Ratio::new(1, 1)), phi, opts)?;
    v.hypotheses = gates;
    Ok(v)
}

/// Weighted product check: sets in `ℝ × ℝⁿ` whose second factor satisfies
/// the weighted inequality with exponents `(1/n, N/n)` give the product the
/// exponents `(1/(n+1), (N+1)/(n+1))`.
pub fn check_bm_weighted_product(
    a: &GridSet,
    b: &GridSet,
    lam: Lambda,
    n: i64,
    nn: i64,
    phi: &DensityND,
    opts: &BmOptions,
) -> Result<Verdict> {
    if a.dim() as i64 != n + 1 {
        return Err(Error::invalid(format!(
            "weighted product check expects dim = n+1 = {}, got {}",
            n + 1,
            a.dim()
        )));
    }
    let p = PParam::finite(Ratio::new(1, n + 1));
    let q = (nn + 1) as f64 / (n + 1) as f64;
    let mut o = opts.clone();
    o.weight_q = Some(q);
    o.general = false;
    let mut v = check_bm(a, b, lam, p, phi, &o)?;
    v.hypotheses = vec![HypothesisNote::new(
        "Y-factor weighted inequality instance",
        nn == n,
        GateMode::Exact,
        format!("shipped instance is Lebesgue with N = n (got N = {nn}, n = {n})"),
    )];
    Ok(v)
}

// ---------------------------------------------------------------------------
// Piecewise-constant functions and the functional inequalities.
// ---------------------------------------------------------------------------

/// Non-negative piecewise-constant function on a lattice: a value per cell,
/// zero elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFn {
    lattice: Lattice,
    cells: Vec<crate::gridset::CellIdx>,
    values: Vec<f64>,
}

impl GridFn {
    pub fn from_pairs<I, C>(lattice: Lattice, pairs: I) -> Result<GridFn>
    where
        I: IntoIterator<Item = (C, f64)>,
        C: AsRef<[i64]>,
    {
        let dim = lattice.dim();
        let mut v: Vec<(crate::gridset::CellIdx, f64)> = Vec::new();
        for (c, val) in pairs {
            let c = c.as_ref();
            if c.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: c.len() });
            }
            if !(val.is_finite() && val >= 0.0) {
                return Err(Error::invalid("grid function values must be finite and >= 0"));
            }
            let mut idx = [0i64; crate::gridset::MAX_DIM];
            idx[..dim].copy_from_slice(c);
            v.push((idx, val));
        }
        v.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        for w in v.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::invalid("duplicate cell in grid function"));
            }
        }
        let (cells, values) = v.into_iter().unzip();
        Ok(GridFn { lattice, cells, values })
    }

    /// Per-cell infimum of `φ` over the support set. If `φ` is p-concave,
    /// the triple `(f, g, h)` built from `(A, B, (1-λ)A + λB)` this way
    /// satisfies the functional hypothesis on the grid.
    pub fn from_density_inf(support: &GridSet, phi: &DensityND) -> Result<GridFn> {
        if phi.dim() != support.dim() {
            return Err(Error::DimMismatch { expected: support.dim(), got: phi.dim() });
        }
        let vol = support.cell_volume_f64();
        let mut pairs = Vec::with_capacity(support.len());
        for c in support.cells() {
            let single = GridSet::from_cells(support.lattice(), [c])?;
            let m = crate::density::measure(&single, phi)?;
            pairs.push((c.to_vec(), m.lower / vol));
        }
        GridFn::from_pairs(support.lattice(), pairs)
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn value_at(&self, idx: &crate::gridset::CellIdx) -> f64 {
        match self.cells.binary_search(idx) {
            Ok(i) => self.values[i],
            Err(_) => 0.0,
        }
    }

    /// Same function represented on pitch `h/r`.
    pub fn refine(&self, r: i64) -> GridFn {
        if r == 1 {
            return self.clone();
        }
        let dim = self.lattice.dim();
        let mut pairs: Vec<(crate::gridset::CellIdx, f64)> = Vec::new();
        let mut offs = vec![0i64; dim];
        for (c, v) in self.cells.iter().zip(&self.values) {
            offs.iter_mut().for_each(|o| *o = 0);
            loop {
                let mut out = [0i64; crate::gridset::MAX_DIM];
                for d in 0..dim {
                    out[d] = c[d] * r + offs[d];
                }
                pairs.push((out, *v));
                let mut d = dim;
                let mut done = true;
                while d > 0 {
                    d -= 1;
                    offs[d] += 1;
                    if offs[d] < r {
                        done = false;
                        break;
                    }
                    offs[d] = 0;
                }
                if done {
                    break;
                }
            }
        }
        pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let (cells, values) = pairs.into_iter().unzip();
        GridFn { lattice: self.lattice.refined(r), cells, values }
    }

    /// Bracket on `∫ f dμ` with `dμ = φ dx`.
    pub fn integral(&self, phi: &DensityND) -> Result<MeasureBracket> {
        let dim = self.lattice.dim();
        if phi.dim() != dim {
            return Err(Error::DimMismatch { expected: dim, got: phi.dim() });
        }
        let mut acc = MeasureBracket::ZERO;
        for (c, v) in self.cells.iter().zip(&self.values) {
            let single = GridSet::from_cells(self.lattice, [&c[..dim]])?;
            let m = crate::density::measure(&single, phi)?;
            acc = acc.add(&m.scale(*v));
        }
        Ok(acc)
    }

    pub fn support_cells(&self) -> impl Iterator<Item = (&[i64], f64)> + '_ {
        let dim = self.lattice.dim();
        self.cells.iter().zip(&self.values).map(move |(c, v)| (&c[..dim], *v))
    }
}

/// Functional inequality check with hypothesis mean `M_p` and conclusion
/// mean `M_q`, `q = p/(mp+1)`. The hypothesis is verified exhaustively over
/// support anchor pairs at the refined resolution (piecewise-constant
/// functions make it a finite check). Prékopa-Leindler is the `p = 0` case.
pub fn check_bbl(
    f: &GridFn,
    g: &GridFn,
    h: &GridFn,
    lam: Lambda,
    p: PParam,
    m_param: Rat,
    phi: &DensityND,
) -> Result<Verdict> {
    if f.lattice() != g.lattice() || f.lattice() != h.lattice() {
        return Err(Error::LatticeMismatch("f, g, h must share a lattice".into()));
    }
    let q = bbl_exponent(p, m_param)?;
    let dim = f.lattice().dim();
    let m = lam.m();
    let k = lam.k();
    let hr = h.refine(m);

    // Hypothesis: h(z) >= M_p(f(x), g(y)) on every combination cell.
    let mut failures = 0usize;
    let mut first_failure = String::new();
    let mut offs = vec![0i64; dim];
    for (cf, vf) in f.support_cells() {
        if vf == 0.0 {
            continue;
        }
        for (cg, vg) in g.support_cells() {
            if vg == 0.0 {
                continue;
            }
            let target = p_mean(ExtReal::finite(vf), ExtReal::finite(vg), lam, p).to_f64();
            if target == 0.0 {
                continue;
            }
            offs.iter_mut().for_each(|o| *o = 0);
            loop {
                let mut anchor = [0i64; crate::gridset::MAX_DIM];
                for d in 0..dim {
                    anchor[d] = (m - k) * cf[d] + k * cg[d] + offs[d];
                }
                let hv = hr.value_at(&anchor);
                if hv < target * (1.0 - 1e-12) {
                    failures += 1;
                    if failures == 1 {
                        first_failure = format!(
                            "h = {hv} < M_p(f, g) = {target} at refined anchor {:?}",
                            &anchor[..dim]
                        );
                    }
                }
                let mut d = dim;
                let mut done = true;
                while d > 0 {
                    d -= 1;
                    offs[d] += 1;
                    if offs[d] < m {
                        done = false;
                        break;
                    }
                    offs[d] = 0;
                }
                if done {
                    break;
                }
            }
        }
    }
    let gate = HypothesisNote::new(
        "pointwise mean domination",
        failures == 0,
        GateMode::Exact,
        if failures == 0 {
            "verified on all support anchor pairs at refined resolution".to_string()
        } else {
            format!("{failures} failing anchors; first: {first_failure}")
        },
    );

    let int_f = f.integral(phi)?;
    let int_g = g.integral(phi)?;
    let int_h = h.integral(phi)?;
    let rhs = mean_bracket(&int_f, &int_g, lam, q, false, None)?;
    let mut v = Verdict::from_sides(int_h, rhs, int_f, int_g, vec![gate]);
    v.equality_case = Some(f == g && g == h);
    Ok(v)
}

/// Prékopa-Leindler check: geometric hypothesis and conclusion means.
pub fn check_pl(f: &GridFn, g: &GridFn, h: &GridFn, lam: Lambda, phi: &DensityND) -> Result<Verdict> {
    // q(0, m) = 0 for every m, so any positive m works.
    check_bbl(f, g, h, lam, PParam::Zero, Ratio::new(1, 1), phi)
}

/// Scripted instances of the in-scope theorems on seeded random gated
/// inputs, as `(label, verdict)` pairs. When every gate passes rigorously,
/// no entry may be a certified violation.
pub fn theorem_suite(seed: u64, opts: &BmOptions) -> Result<Vec<(String, Verdict)>> {
    use crate::gridset::{build_set, random_set, RandomFamily, SetSpec, Window};
    use crate::rational::rat;

    let mut out = Vec::new();
    let lattice = Lattice::new(2, rat(1, 8))?;
    let window = Window::new(vec![rat(-2, 1), rat(-2, 1)], vec![rat(2, 1), rat(2, 1)])?;
    let gauss = DensityND::gaussian(1.0, 2);
    let leb = DensityND::lebesgue(2);
    let lam = Lambda::new(rat(1, 2))?;

    let wu_a = random_set(RandomFamily::Wu, &lattice, &window, seed)?;
    let wu_b = random_set(RandomFamily::Wu, &lattice, &window, seed.wrapping_add(1))?;

    // Weakly unconditional product suite.
    out.push(("thm_1_4".into(), check_theorem_a(&wu_a, &wu_b, lam, &gauss, opts)?));

    // Product-space instance at the same dimensional exponent.
    out.push((
        "thm_1_6_instance".into(),
        check_bm(&wu_a, &wu_b, lam, PParam::finite(rat(1, 2)), &gauss, opts)?,
    ));

    // Equal sup sections via the exact fiber rescale.
    let conv_a = random_set(RandomFamily::Convex, &lattice, &window, seed.wrapping_add(2))?;
    let conv_b = random_set(RandomFamily::Convex, &lattice, &window, seed.wrapping_add(3))?;
    let equalized = equalize_section_sup(&conv_a, &conv_b, 0)?;
    let (ca, cb) = common_pitch(&conv_a, &equalized)?;
    out.push(("thm_3_1".into(), check_linear_equal_sup(&ca, &cb, lam, 0, &leb, opts)?));

    // Weighted product instance: Lebesgue with N = n reduces to the
    // classical inequality one dimension higher.
    let lattice3 = Lattice::new(3, rat(1, 2))?;
    let window3 = Window::new(vec![rat(-1, 1); 3], vec![rat(1, 1); 3])?;
    let wa3 = random_set(RandomFamily::Wu, &lattice3, &window3, seed.wrapping_add(4))?;
    let wb3 = random_set(RandomFamily::Wu, &lattice3, &window3, seed.wrapping_add(5))?;
    out.push((
        "thm_3_4".into(),
        check_bm_weighted_product(&wa3, &wb3, lam, 2, 2, &DensityND::lebesgue(3), opts)?,
    ));

    // Equal sup marginals of centered symmetric boxes under the Gaussian
    // (the p = 0 case doubles as the log-concave-weight linear instance).
    let centered = |r: i64, s: i64| -> Result<GridSet> {
        build_set(
            &SetSpec::boxed(vec![rat(-r, 8), rat(-s, 8)], vec![rat(r, 8), rat(s, 8)]),
            &lattice,
        )
    };
    let box_a = centered(8, 12)?;
    let box_b = centered(8, 6)?;
    out.push((
        "thm_4_8_gaussian_marginal".into(),
        check_linear_marginal(&box_a, &box_b, lam, 1, &gauss, PParam::Zero, opts)?,
    ));

    // Central-slice gate with positively decreasing first factor.
    out.push((
        "thm_4_7".into(),
        check_theorem_4_7(&box_a, &box_b, lam, &gauss, PParam::Zero, opts)?,
    ));

    // Isoperimetric functional on a weakly unconditional box.
    let iso_box = centered(8, 8)?;
    let fopts = FunctionalOptions { measure_refine: opts.measure_refine, ..Default::default() };
    out.push(("thm_4_4".into(), check_isoperimetric(&iso_box, &iso_box, &gauss, &fopts)?));

    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::Density1D;
    use crate::gridset::{
        build_set, random_set, translate, DigitizationMode, RandomFamily, SetSpec, Window,
    };
    use crate::rational::{rat, RatStr};

    fn lam(n: i64, d: i64) -> Lambda {
        Lambda::new(rat(n, d)).unwrap()
    }

    fn lat(dim: usize, num: i64, den: i64) -> Lattice {
        Lattice::new(dim, rat(num, den)).unwrap()
    }

    fn unit_box2(den: i64) -> GridSet {
        build_set(
            &SetSpec::boxed(vec![rat(0, 1), rat(0, 1)], vec![rat(1, 1), rat(1, 1)]),
            &lat(2, 1, den),
        )
        .unwrap()
    }

    #[test]
    fn equality_case_certifies_with_tiny_margin() {
        let a = unit_box2(2);
        for p in [PParam::finite(rat(1, 2)), PParam::Zero, PParam::finite(rat(-1, 1))] {
            let v =
                check_bm(&a, &a, lam(1, 2), p, &DensityND::lebesgue(2), &BmOptions::default()).unwrap();
            assert_eq!(v.status, VerdictStatus::CertifiedHolds, "p {p:?}");
            assert!(v.hold_margin.abs() < 1e-9);
        }
    }

    #[test]
    fn gaussian_shifted_balls_violate() {
        // Unit balls far apart: p = 1/2 fails for the Gaussian.
        let lattice = lat(2, 1, 8);
        let ball = SetSpec::Ball {
            center: vec![RatStr(rat(0, 1)), RatStr(rat(0, 1))],
            radius: RatStr(rat(1, 1)),
            mode: DigitizationMode::Outer,
        };
        let a = build_set(&ball, &lattice).unwrap();
        let mut found = false;
        for t in 2..=10i64 {
            let b = translate(&a, &[rat(t, 1), rat(0, 1)]).unwrap();
            let v = check_bm(
                &a,
                &b,
                lam(1, 2),
                PParam::finite(rat(1, 2)),
                &DensityND::gaussian(1.0, 2),
                &BmOptions::refined(2),
            )
            .unwrap();
            if v.status == VerdictStatus::CertifiedViolation {
                found = true;
            }
        }
        assert!(found);
    }

    #[test]
    fn x_squared_density_violates_linear_bm() {
        // A = [0,1], B = [0,2], λ = 1/2 under x² dx: μ(C) = 9/8 < 3/2.
        let lattice = lat(1, 1, 64);
        let a = build_set(&SetSpec::boxed(vec![rat(0, 1)], vec![rat(1, 1)]), &lattice).unwrap();
        let b = build_set(&SetSpec::boxed(vec![rat(0, 1)], vec![rat(2, 1)]), &lattice).unwrap();
        let phi = DensityND::Product { factors: vec![Density1D::Power { alpha: 2.0 }] };
        let v =
            check_bm(&a, &b, lam(1, 2), PParam::finite(rat(1, 1)), &phi, &BmOptions::default()).unwrap();
        assert_eq!(v.status, VerdictStatus::CertifiedViolation);
        // Margin bracket contains the oracle value 3/2 - 9/8 = 0.375.
        let margin = v.rhs.sub(&v.lhs);
        assert!(margin.contains(0.375), "margin [{}, {}]", margin.lower, margin.upper);
    }

    #[test]
    fn theorem_a_gates_and_holds_on_wu_pairs() {
        let lattice = lat(2, 1, 8);
        let w = Window::new(vec![rat(-2, 1), rat(-2, 1)], vec![rat(2, 1), rat(2, 1)]).unwrap();
        let phi = DensityND::gaussian(1.0, 2);
        for seed in 0..25u64 {
            let a = random_set(RandomFamily::Wu, &lattice, &w, 7000 + seed).unwrap();
            let b = random_set(RandomFamily::Wu, &lattice, &w, 8000 + seed).unwrap();
            let v = check_theorem_a(&a, &b, lam(1, 2), &phi, &BmOptions::default()).unwrap();
            assert!(v.gates_passed(), "seed {seed}");
            assert_ne!(v.status, VerdictStatus::CertifiedViolation, "seed {seed}");
        }
    }

    #[test]
    fn theorem_a_equality_case_on_hulled_disk() {
        let lattice = lat(2, 1, 8);
        let ball = SetSpec::WuHull {
            of: Box::new(SetSpec::Ball {
                center: vec![RatStr(rat(2, 1)), RatStr(rat(2, 1))],
                radius: RatStr(rat(1, 1)),
                mode: DigitizationMode::Outer,
            }),
        };
        let a = build_set(&ball, &lattice).unwrap();
        let v = check_theorem_a(&a, &a, lam(1, 2), &DensityND::gaussian(1.0, 2), &BmOptions::refined(2))
            .unwrap();
        assert!(v.gates_passed());
        assert_eq!(v.status, VerdictStatus::CertifiedHolds);
    }

    #[test]
    fn nayar_tkocz_cone_violates() {
        // Scan α and ε; the digitized cone pair must certify a violation.
        // Only apertures close to 90° violate at this pitch — wider cones
        // digitize into pairs that genuinely satisfy the inequality.
        let lattice = lat(2, 1, 16);
        let mut found = None;
        'outer: for alpha in [87.0f64, 88.0, 89.0] {
            for eps in [rat(1, 8), rat(1, 4), rat(1, 2)] {
                let window =
                    Window::new(vec![rat(-6, 1), rat(-1, 1)], vec![rat(6, 1), rat(11, 1)]).unwrap();
                let cone = SetSpec::Cone { alpha_deg: alpha, window, mode: DigitizationMode::Inner };
                let a = build_set(&cone, &lattice).unwrap();
                let b = translate(&a, &[rat(0, 1), -eps]).unwrap();
                let v = check_bm(
                    &a,
                    &b,
                    lam(1, 2),
                    PParam::finite(rat(1, 2)),
                    &DensityND::gaussian(1.0, 2),
                    &BmOptions::refined(8),
                )
                .unwrap();
                if v.status == VerdictStatus::CertifiedViolation {
                    found = Some((alpha, eps));
                    break 'outer;
                }
            }
        }
        assert!(found.is_some(), "no certified violation in the scanned range");
    }

    #[test]
    fn equal_sup_generator_equalizes_exactly() {
        let lattice = lat(2, 1, 4);
        let a = build_set(
            &SetSpec::boxed(vec![rat(0, 1), rat(0, 1)], vec![rat(2, 1), rat(1, 1)]),
            &lattice,
        )
        .unwrap();
        let b = build_set(
            &SetSpec::boxed(vec![rat(0, 1), rat(0, 1)], vec![rat(1, 1), rat(3, 1)]),
            &lattice,
        )
        .unwrap();
        let b2 = equalize_section_sup(&a, &b, 0).unwrap();
        let (a, b2) = common_pitch(&a, &b2).unwrap();
        let leb = DensityND::lebesgue(2);
        let sa = crate::density::section_sup(&a, 0, &leb).unwrap();
        let sb = crate::density::section_sup(&b2, 0, &leb).unwrap();
        assert!((sa.lower - sb.lower).abs() < 1e-12);
        let v = check_linear_equal_sup(&a, &b2, lam(1, 2), 0, &leb, &BmOptions::default()).unwrap();
        assert!(v.gates_passed());
        assert_eq!(v.status, VerdictStatus::CertifiedHolds);
    }

    #[test]
    fn bonnesen_boxes_hold_linear_bm() {
        // Equal cross-sections, different lengths, Lebesgue: the linear
        // inequality holds with equality.
        let lattice = lat(2, 1, 4);
        let a = build_set(
            &SetSpec::boxed(vec![rat(0, 1), rat(0, 1)], vec![rat(3, 1), rat(1, 1)]),
            &lattice,
        )
        .unwrap();
        let b = build_set(
            &SetSpec::boxed(vec![rat(0, 1), rat(0, 1)], vec![rat(1, 1), rat(1, 1)]),
            &lattice,
        )
        .unwrap();
        let v = check_linear_equal_sup(&a, &b, lam(1, 4), 0, &DensityND::lebesgue(2), &BmOptions::default())
            .unwrap();
        assert!(v.gates_passed());
        assert_eq!(v.status, VerdictStatus::CertifiedHolds);
    }

    #[test]
    fn thm_4_7_gate_fails_off_center() {
        let lattice = lat(2, 1, 8);
        let centered = build_set(
            &SetSpec::boxed(vec![rat(-1, 1), rat(-1, 1)], vec![rat(1, 1), rat(1, 1)]),
            &lattice,
        )
        .unwrap();
        let off = translate(&centered, &[rat(2, 1), rat(0, 1)]).unwrap();
        let (a, b) = common_pitch(&centered, &off).unwrap();
        let v = check_theorem_4_7(&a, &b, lam(1, 2), &DensityND::gaussian(1.0, 2), PParam::Zero, &BmOptions::default())
            .unwrap();
        assert!(!v.gates_passed());
        // The check still ran and produced sides.
        assert!(v.lhs.upper > 0.0);
    }

    #[test]
    fn weighted_product_reduces_to_classical_at_nn_eq_n() {
        let lattice3 = lat(3, 1, 2);
        let a = build_set(&SetSpec::boxed(vec![rat(0, 1); 3], vec![rat(1, 1); 3]), &lattice3).unwrap();
        let v = check_bm_weighted_product(&a, &a, lam(1, 2), 2, 2, &DensityND::lebesgue(3), &BmOptions::default())
            .unwrap();
        assert_eq!(v.status, VerdictStatus::CertifiedHolds);
        assert!(v.hold_margin.abs() < 1e-9);
    }

    #[test]
    fn pl_indicator_triple_is_equality() {
        let lattice = lat(2, 1, 2);
        let b = unit_box2(2);
        let f = GridFn::from_pairs(lattice, b.cells().map(|c| (c.to_vec(), 1.0))).unwrap();
        let v = check_pl(&f, &f, &f, lam(1, 2), &DensityND::lebesgue(2)).unwrap();
        assert!(v.gates_passed());
        assert_eq!(v.status, VerdictStatus::CertifiedHolds);
        assert!(v.hold_margin.abs() < 1e-9);
        assert_eq!(v.equality_case, Some(true));
    }

    #[test]
    fn pl_log_concave_construction_passes_gate_and_certifies() {
        let lattice = lat(2, 1, 4);
        let w = Window::new(vec![rat(-2, 1), rat(-2, 1)], vec![rat(2, 1), rat(2, 1)]).unwrap();
        let gauss = DensityND::gaussian(1.0, 2);
        for seed in 0..10u64 {
            let a = random_set(RandomFamily::Wu, &lattice, &w, 100 + seed).unwrap();
            let b = random_set(RandomFamily::Wu, &lattice, &w, 200 + seed).unwrap();
            let l = lam(1, 2);
            let c = combine(&a, &b, l).unwrap();
            let f = GridFn::from_density_inf(&a, &gauss).unwrap().refine(2);
            let g = GridFn::from_density_inf(&b, &gauss).unwrap().refine(2);
            let h = GridFn::from_density_inf(&c, &gauss).unwrap();
            let v = check_pl(&f, &g, &h, l, &DensityND::lebesgue(2)).unwrap();
            assert!(v.gates_passed(), "seed {seed}: {:?}", v.hypotheses);
            assert_eq!(v.status, VerdictStatus::CertifiedHolds, "seed {seed}");
        }
    }

    #[test]
    fn pl_hypothesis_violation_is_reported() {
        let lattice = lat(2, 1, 2);
        let b = unit_box2(2);
        let f = GridFn::from_pairs(lattice, b.cells().map(|c| (c.to_vec(), 1.0))).unwrap();
        // h too small on one support cell.
        let h = GridFn::from_pairs(
            lattice,
            b.cells().enumerate().map(|(i, c)| (c.to_vec(), if i == 0 { 0.5 } else { 1.0 })),
        )
        .unwrap();
        let v = check_pl(&f, &f, &h, lam(1, 2), &DensityND::lebesgue(2)).unwrap();
        assert!(!v.gates_passed());
    }

    #[test]
    fn bbl_indicator_triple_recovers_dimensional_exponent() {
        // Indicators with p = +inf: the conclusion exponent is 1/m = 1/n.
        let lattice = lat(2, 1, 2);
        let a = unit_box2(2);
        let b = build_set(
            &SetSpec::boxed(vec![rat(0, 1), rat(0, 1)], vec![rat(2, 1), rat(1, 1)]),
            &lat(2, 1, 2),
        )
        .unwrap();
        let l = lam(1, 2);
        let c = combine(&a, &b, l).unwrap();
        let f = GridFn::from_pairs(lattice, a.cells().map(|x| (x.to_vec(), 1.0))).unwrap().refine(2);
        let g = GridFn::from_pairs(lattice, b.cells().map(|x| (x.to_vec(), 1.0))).unwrap().refine(2);
        let h = GridFn::from_pairs(c.lattice(), c.cells().map(|x| (x.to_vec(), 1.0))).unwrap();
        let v = check_bbl(&f, &g, &h, l, PParam::PosInf, rat(2, 1), &DensityND::lebesgue(2)).unwrap();
        assert!(v.gates_passed(), "{:?}", v.hypotheses);
        assert_eq!(v.status, VerdictStatus::CertifiedHolds);
        // Same right-hand side as the direct set check at p = 1/n.
        let direct = check_bm(&a, &b, l, PParam::finite(rat(1, 2)), &DensityND::lebesgue(2), &BmOptions::default())
            .unwrap();
        assert!((v.rhs.lower - direct.rhs.lower).abs() < 1e-9);
    }

    #[test]
    fn bbl_rejects_p_below_range() {
        let lattice = lat(1, 1, 2);
        let f = GridFn::from_pairs(lattice, [([0i64], 1.0)]).unwrap();
        let err = check_bbl(
            &f,
            &f,
            &f,
            lam(1, 2),
            PParam::finite(rat(-2, 1)),
            rat(1, 1),
            &DensityND::lebesgue(1),
        );
        assert!(err.is_err());
    }

    #[test]
    fn suite_has_no_violations_when_gated() {
        for seed in [3u64, 17, 101] {
            let suite = theorem_suite(seed, &BmOptions::refined(2)).unwrap();
            for (name, v) in suite {
                if v.gates_passed() && v.rigorous {
                    assert_ne!(
                        v.status,
                        VerdictStatus::CertifiedViolation,
                        "{name} violated at seed {seed}"
                    );
                }
            }
        }
    }
}
