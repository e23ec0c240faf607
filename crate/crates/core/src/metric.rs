//! Embedding-induced metrics and their coordinatewise set combinations.
//!
//! An [`EmbeddedSpace`] is a real interval with the distance
//! `d(x, y) = |φ(x) - φ(y)|` induced by an injective continuous map φ. The
//! two-point combination is `φ⁻¹((1-λ)φ(x) + λφ(y))`; for products of such
//! spaces, the star combination with the product metric is coordinatewise,
//! which is what licenses running grid sets laid out in embedded
//! coordinates through the exact lattice combination unchanged.
//!
//! Sets for non-identity embeddings are authored directly in embedded
//! (u-space) coordinates; [`pushforward_density`] supplies the weight that
//! makes u-space measures equal the original ones.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{Density1D, DensityND};
use crate::gridset::{combine, GridSet};
use crate::means::Lambda;
use crate::rational::{rat_to_f64, Rat, RatStr};
use crate::{Error, Result};

/// Injective map defining the metric `d(x,y) = |φ(x) - φ(y)|`.
#[derive(Debug, Clone, PartialEq)]
pub enum MapKind {
    Identity,
    /// `φ = ln` on ℝ₊; combination is the geometric mean.
    Log,
    /// `φ(x) = x^p` on ℝ₊ for `p ∈ (0,1)`.
    Power { p: Rat },
    /// Piecewise-linear strictly monotone table.
    MonotoneTable { xs: Vec<f64>, ys: Vec<f64> },
}

/// A real interval with an embedding-induced metric.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSpace {
    kind: MapKind,
    /// Optional closed sub-interval restriction (curve parameter ranges).
    interval: Option<(f64, f64)>,
}

impl EmbeddedSpace {
    pub fn identity() -> EmbeddedSpace {
        EmbeddedSpace { kind: MapKind::Identity, interval: None }
    }

    pub fn log() -> EmbeddedSpace {
        EmbeddedSpace { kind: MapKind::Log, interval: None }
    }

    pub fn power(p: Rat) -> Result<EmbeddedSpace> {
        let pf = rat_to_f64(p);
        if !(0.0 < pf && pf < 1.0) {
            return Err(Error::invalid(format!("power map needs p in (0,1), got {pf}")));
        }
        Ok(EmbeddedSpace { kind: MapKind::Power { p }, interval: None })
    }

    /// Arclength-parameterized curve: isometric to `[0, len]` with the
    /// identity metric and pushforward weight 1.
    pub fn curve(len: f64) -> Result<EmbeddedSpace> {
        if !(len > 0.0) {
            return Err(Error::invalid("curve length must be > 0"));
        }
        Ok(EmbeddedSpace { kind: MapKind::Identity, interval: Some((0.0, len)) })
    }

    pub fn monotone_table(xs: Vec<f64>, ys: Vec<f64>) -> Result<EmbeddedSpace> {
        if xs.len() != ys.len() || xs.len() < 2 {
            return Err(Error::invalid("table needs matching xs/ys with at least 2 knots"));
        }
        if xs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("table xs must be strictly increasing"));
        }
        let inc = ys.windows(2).all(|w| w[0] < w[1]);
        let dec = ys.windows(2).all(|w| w[0] > w[1]);
        if !inc && !dec {
            return Err(Error::invalid("table ys must be strictly monotone"));
        }
        Ok(EmbeddedSpace { kind: MapKind::MonotoneTable { xs, ys }, interval: None })
    }

    pub fn kind(&self) -> &MapKind {
        &self.kind
    }

    pub fn contains(&self, x: f64) -> bool {
        let in_kind = match &self.kind {
            MapKind::Identity => x.is_finite(),
            MapKind::Log | MapKind::Power { .. } => x > 0.0,
            MapKind::MonotoneTable { xs, .. } => xs[0] <= x && x <= xs[xs.len() - 1],
        };
        let in_interval = self.interval.is_none_or(|(lo, hi)| lo <= x && x <= hi);
        in_kind && in_interval
    }

    pub fn forward(&self, x: f64) -> Result<f64> {
        if !self.contains(x) {
            return Err(Error::OutOfDomain(format!("{x} not in the space domain")));
        }
        Ok(match &self.kind {
            MapKind::Identity => x,
            MapKind::Log => x.ln(),
            MapKind::Power { p } => x.powf(rat_to_f64(*p)),
            MapKind::MonotoneTable { xs, ys } => interp(xs, ys, x),
        })
    }

    pub fn inverse(&self, u: f64) -> Result<f64> {
        let x = match &self.kind {
            MapKind::Identity => u,
            MapKind::Log => u.exp(),
            MapKind::Power { p } => {
                if u <= 0.0 {
                    return Err(Error::OutOfDomain(format!("{u} not in the embedded image")));
                }
                u.powf(1.0 / rat_to_f64(*p))
            }
            MapKind::MonotoneTable { xs, ys } => {
                if ys[0] < ys[ys.len() - 1] {
                    interp(ys, xs, u)
                } else {
                    let rev_y: Vec<f64> = ys.iter().rev().copied().collect();
                    let rev_x: Vec<f64> = xs.iter().rev().copied().collect();
                    interp(&rev_y, &rev_x, u)
                }
            }
        };
        if !self.contains(x) {
            return Err(Error::OutOfDomain(format!("inverse image {x} leaves the domain")));
        }
        Ok(x)
    }

    pub fn distance(&self, x: f64, y: f64) -> Result<f64> {
        Ok((self.forward(x)? - self.forward(y)?).abs())
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|v| *v <= x).min(n - 1);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let (y0, y1) = (ys[i - 1], ys[i]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// `φ⁻¹((1-λ)φ(x) + λφ(y))`; the Euclidean combination for the identity.
pub fn combine_points(x: f64, y: f64, lam: Lambda, space: &EmbeddedSpace) -> Result<f64> {
    let u = lam.complement() * space.forward(x)? + lam.value() * space.forward(y)?;
    space.inverse(u)
}

/// Product of embedded axes carrying the product metric (the Euclidean norm
/// of the per-axis distances).
#[derive(Debug, Clone, PartialEq)]
pub struct ProductMetricSpace {
    pub axes: Vec<EmbeddedSpace>,
}

impl ProductMetricSpace {
    pub fn identity(dim: usize) -> ProductMetricSpace {
        ProductMetricSpace { axes: vec![EmbeddedSpace::identity(); dim] }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: x.len() });
        }
        let mut s = 0.0;
        for (axis, (a, b)) in self.axes.iter().zip(x.iter().zip(y)) {
            let d = axis.distance(*a, *b)?;
            s += d * d;
        }
        Ok(s.sqrt())
    }

    pub fn combine_points(&self, x: &[f64], y: &[f64], lam: Lambda) -> Result<Vec<f64>> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: x.len() });
        }
        self.axes
            .iter()
            .zip(x.iter().zip(y))
            .map(|(axis, (a, b))| combine_points(*a, *b, lam, axis))
            .collect()
    }
}

/// Star combination of grid sets laid out in embedded coordinates: for the
/// product metric the combination is coordinatewise, hence exactly the
/// lattice combination in u-space.
pub fn star_combine(a: &GridSet, b: &GridSet, lam: Lambda, space: &ProductMetricSpace) -> Result<GridSet> {
    if space.dim() != a.dim() {
        return Err(Error::DimMismatch { expected: a.dim(), got: space.dim() });
    }
    combine(a, b, lam)
}

/// Weight on the embedded axis making u-space integrals equal original
/// integrals: `u ↦ w(φ⁻¹(u)) · |(φ⁻¹)'(u)|`.
///
/// Supported exactly: the identity (any weight), and Lebesgue weight under
/// the log map (`e^u`) or the power-p map (`(1/p)·u^{1/p-1}` on `u > 0`).
/// Table maps are rejected as non-differentiable.
pub fn pushforward_density(space: &EmbeddedSpace, w: &Density1D) -> Result<Density1D> {
    match (&space.kind, w) {
        (MapKind::Identity, _) => Ok(w.clone()),
        (MapKind::MonotoneTable { .. }, _) => {
            Err(Error::invalid("pushforward through a table map is not differentiable"))
        }
        (MapKind::Log, Density1D::Lebesgue) => Ok(Density1D::Exponential { rate: 1.0 }),
        (MapKind::Power { p }, Density1D::Lebesgue) => {
            let pf = rat_to_f64(*p);
            Ok(Density1D::HalfPower { alpha: 1.0 / pf - 1.0, coeff: 1.0 / pf })
        }
        _ => Err(Error::invalid(
            "pushforward supported for identity maps, or Lebesgue weight under log/power maps",
        )),
    }
}

/// Product pushforward of per-axis Lebesgue weight.
pub fn pushforward_product(space: &ProductMetricSpace) -> Result<DensityND> {
    let factors: Vec<Density1D> = space
        .axes
        .iter()
        .map(|axis| pushforward_density(axis, &Density1D::Lebesgue))
        .collect::<Result<_>>()?;
    Ok(DensityND::Product { factors })
}

/// Sampled check that the combined point realizes the two defining distance
/// equalities `d(z,x) = λ·d(x,y)` and `d(z,y) = (1-λ)·d(x,y)` within 1e-9.
/// Deterministic given the seed.
pub fn verify_strictly_intrinsic(space: &EmbeddedSpace, samples: usize, seed: u64) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = sample_range(space);
    for _ in 0..samples {
        let x = lo + (hi - lo) * rng.random::<f64>();
        let y = lo + (hi - lo) * rng.random::<f64>();
        let lam = Lambda::new(Rat::new(1 + rng.random_range(0..99i64), 100)).expect("in range");
        let z = combine_points(x, y, lam, space)?;
        let dxy = space.distance(x, y)?;
        let tol = 1e-9 * (1.0 + dxy);
        if (space.distance(z, x)? - lam.value() * dxy).abs() > tol {
            return Ok(false);
        }
        if (space.distance(z, y)? - lam.complement() * dxy).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

fn sample_range(space: &EmbeddedSpace) -> (f64, f64) {
    if let Some((lo, hi)) = space.interval {
        return (lo, hi);
    }
    match &space.kind {
        MapKind::Identity => (-10.0, 10.0),
        MapKind::Log | MapKind::Power { .. } => (0.05, 10.0),
        MapKind::MonotoneTable { xs, .. } => (xs[0], xs[xs.len() - 1]),
    }
}

/// Wire form of a product space: `{"axes":[{"map":"log"},{"map":"power","p":"1/2"}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub axes: Vec<AxisSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub map: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<RatStr>,
}

impl SpaceSpec {
    pub fn to_space(&self) -> Result<ProductMetricSpace> {
        let axes: Vec<EmbeddedSpace> = self
            .axes
            .iter()
            .map(|a| match a.map.as_str() {
                "identity" => Ok(EmbeddedSpace::identity()),
                "log" => Ok(EmbeddedSpace::log()),
                "power" => {
                    let p = a.p.ok_or_else(|| Error::parse("power axis needs a rational p"))?;
                    EmbeddedSpace::power(p.0)
                }
                other => Err(Error::parse(format!("unknown axis map `{other}`"))),
            })
            .collect::<Result<_>>()?;
        Ok(ProductMetricSpace { axes })
    }
}
