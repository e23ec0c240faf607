//! Planar convex bodies through direction-sampled support functions, and
//! their p-sums.
//!
//! Support values are sampled on `N` uniformly spaced directions, so bodies
//! are under-approximated and every inclusion check here is a sampled check
//! at those directions, not a polytope-algebra statement.

use serde::{Deserialize, Serialize};

use crate::means::{raw_power_combination, ExtReal, Lambda, PParam};
use crate::rational::rat_to_f64;
use crate::{Error, Result};

/// Sampled support function `h(K, u_i)` on `u_i = (cos θ_i, sin θ_i)`,
/// `θ_i = 2πi/N`. Bodies contain the origin, so values are non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportFn2D {
    values: Vec<f64>,
}

impl SupportFn2D {
    pub const MIN_DIRECTIONS: usize = 16;

    pub fn from_values(values: Vec<f64>) -> Result<SupportFn2D> {
        if values.len() < Self::MIN_DIRECTIONS {
            return Err(Error::invalid(format!(
                "need at least {} directions, got {}",
                Self::MIN_DIRECTIONS,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("support values must be finite and >= 0"));
        }
        Ok(SupportFn2D { values })
    }

    pub fn n_directions(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn direction(&self, i: usize) -> [f64; 2] {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / self.values.len() as f64;
        [theta.cos(), theta.sin()]
    }

    pub fn scale(&self, k: f64) -> Result<SupportFn2D> {
        if k < 0.0 {
            return Err(Error::invalid("scale factor must be >= 0"));
        }
        SupportFn2D::from_values(self.values.iter().map(|v| v * k).collect())
    }
}

/// Samples the support function of a convex polygon containing the origin:
/// per direction, the maximum vertex inner product.
pub fn support_from_polygon(vertices: &[[f64; 2]], n_directions: usize) -> Result<SupportFn2D> {
    if vertices.len() < 3 {
        return Err(Error::invalid("polygon needs at least 3 vertices"));
    }
    let n = vertices.len();
    // Orientation, convexity, and origin containment via edge cross products.
    let mut area2 = 0.0;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        area2 += a[0] * b[1] - b[0] * a[1];
    }
    if area2 == 0.0 {
        return Err(Error::invalid("degenerate polygon"));
    }
    let vs: Vec<[f64; 2]> = if area2 < 0.0 {
        vertices.iter().rev().copied().collect()
    } else {
        vertices.to_vec()
    };
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        let c = vs[(i + 2) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross < 0.0 {
            return Err(Error::invalid("polygon must be convex"));
        }
        // Origin on the interior side of every edge.
        let inside = (b[0] - a[0]) * (0.0 - a[1]) - (b[1] - a[1]) * (0.0 - a[0]);
        if inside < 0.0 {
            return Err(Error::invalid("polygon must contain the origin"));
        }
    }
    let mut values = Vec::with_capacity(n_directions);
    for i in 0..n_directions {
        let theta = 2.0 * std::f64::consts::PI * i as f64 / n_directions as f64;
        let u = [theta.cos(), theta.sin()];
        let h = vs.iter().map(|v| v[0] * u[0] + v[1] * u[1]).fold(f64::NEG_INFINITY, f64::max);
        values.push(h.max(0.0));
    }
    SupportFn2D::from_values(values)
}

/// Firey p-sum on support data: `h^p = (1-λ)h_K^p + λh_L^p` pointwise, for
/// `p ∈ [1, ∞]` (`p = ∞` is the pointwise max — the convex hull of the
/// union). `p < 1` is rejected here; see [`wulff_combine`].
pub fn lp_combine(hk: &SupportFn2D, hl: &SupportFn2D, lam: Lambda, p: PParam) -> Result<SupportFn2D> {
    if hk.n_directions() != hl.n_directions() {
        return Err(Error::invalid("support functions must share the direction grid"));
    }
    let ok = match p {
        PParam::PosInf => true,
        PParam::Finite(pr) => rat_to_f64(pr) >= 1.0,
        _ => false,
    };
    if !ok {
        return Err(Error::invalid(
            "p-sums of bodies need p in [1, inf]; use wulff_combine for p in [0, 1)",
        ));
    }
    combine_pointwise(hk, hl, lam, p)
}

/// The `p ∈ [0, 1)` extension: returns the pointwise p-combination of the
/// support data, which describes the halfplane intersection
/// `{x : <x,u> ≤ ((1-λ)h_K(u)^p + λh_L(u)^p)^{1/p}}` rather than a support
/// function of a known body.
pub fn wulff_combine(hk: &SupportFn2D, hl: &SupportFn2D, lam: Lambda, p: PParam) -> Result<SupportFn2D> {
    if hk.n_directions() != hl.n_directions() {
        return Err(Error::invalid("support functions must share the direction grid"));
    }
    let ok = match p {
        PParam::Zero => true,
        PParam::Finite(pr) => {
            let pf = rat_to_f64(pr);
            0.0 < pf && pf < 1.0
        }
        _ => false,
    };
    if !ok {
        return Err(Error::invalid("wulff_combine needs p in [0, 1)"));
    }
    combine_pointwise(hk, hl, lam, p)
}

fn combine_pointwise(hk: &SupportFn2D, hl: &SupportFn2D, lam: Lambda, p: PParam) -> Result<SupportFn2D> {
    let values = hk
        .values
        .iter()
        .zip(&hl.values)
        .map(|(a, b)| {
            raw_power_combination(ExtReal::finite(*a), ExtReal::finite(*b), lam, p).to_f64()
        })
        .collect();
    SupportFn2D::from_values(values)
}

/// Sampled inclusion `(1-λ)K +_p λL ⊆ (1-λ)K +_q λL` for `1 ≤ p ≤ q ≤ ∞`:
/// true iff the p-combined support values never exceed the q-combined ones
/// on the direction grid.
pub fn check_firey_monotonicity(
    hk: &SupportFn2D,
    hl: &SupportFn2D,
    lam: Lambda,
    p: PParam,
    q: PParam,
) -> Result<bool> {
    let hp = lp_combine(hk, hl, lam, p)?;
    let hq = lp_combine(hk, hl, lam, q)?;
    let scale = hq.values.iter().fold(1.0f64, |m, v| m.max(*v));
    Ok(hp
        .values
        .iter()
        .zip(&hq.values)
        .all(|(a, b)| *a <= *b + 1e-12 * scale))
}
