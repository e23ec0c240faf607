//! Experiment spec files: one JSON document describing a check, its sets or
//! functions, the density, and the exact parameters.
//!
//! Every field feeding an exact set operation (λ, pitch, scale factors,
//! translations, box bounds, schedules) is a rational *string* like `"1/2"`;
//! decimal literals are rejected at parse time. Measure-only fields (σ,
//! cone aperture in degrees) are plain numbers.

use serde::Deserialize;

use bmlab_core::checkers::{
    check_bbl, check_bm, check_bm_weighted_product, check_concavity_profile, check_isoperimetric,
    check_linear_equal_sup, check_linear_marginal, check_pl, check_theorem_4_7, check_theorem_a,
    BmOptions, FunctionalOptions, GridFn, Verdict,
};
use bmlab_core::density::DensitySpec;
use bmlab_core::gridset::{build_set, GridSet, Lattice, SetSpec};
use bmlab_core::means::{Lambda, PParam};
use bmlab_core::rational::RatStr;
use bmlab_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Bm,
    TheoremA,
    LinearEqualSup,
    Thm47,
    LinearMarginal,
    Pl,
    Bbl,
    Weighted,
    Iso,
    Concavity,
}

#[derive(Debug, Clone, Deserialize)]
pub struct LatticeSpec {
    pub dim: usize,
    pub pitch: RatStr,
}

#[derive(Debug, Clone, Deserialize)]
pub struct GridFnSpec {
    pub cells: Vec<Vec<i64>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct ExperimentSpec {
    pub check: CheckKind,
    pub lattice: LatticeSpec,
    pub density: DensitySpec,
    #[serde(default)]
    pub a: Option<SetSpec>,
    #[serde(default)]
    pub b: Option<SetSpec>,
    #[serde(default)]
    pub lambda: Option<Lambda>,
    /// Mean exponent, `"k/m"`, `"inf"`, or `"-inf"`.
    #[serde(default)]
    pub p: Option<String>,
    #[serde(default)]
    pub axis: Option<usize>,
    #[serde(default)]
    pub general: Option<bool>,
    /// Weighted variant dimensions (ambient is n+1).
    #[serde(default)]
    pub n: Option<i64>,
    #[serde(default, rename = "N")]
    pub nn: Option<i64>,
    /// Concavity exponent for the central-slice check.
    #[serde(default)]
    pub q: Option<String>,
    /// BBL dimension-like parameter m.
    #[serde(default)]
    pub m: Option<RatStr>,
    #[serde(default)]
    pub measure_refine: Option<i64>,
    #[serde(default)]
    pub t_schedule: Option<Vec<RatStr>>,
    #[serde(default)]
    pub t_grid: Option<Vec<RatStr>>,
    #[serde(default)]
    pub f: Option<GridFnSpec>,
    #[serde(default)]
    pub g: Option<GridFnSpec>,
    #[serde(default)]
    pub h: Option<GridFnSpec>,
}

impl ExperimentSpec {
    pub fn parse(text: &str) -> Result<ExperimentSpec> {
        serde_json::from_str(text).map_err(|e| Error::parse(format!("experiment spec: {e}")))
    }

    fn lattice(&self) -> Result<Lattice> {
        Lattice::new(self.lattice.dim, self.lattice.pitch.0)
    }

    fn set(&self, which: &Option<SetSpec>, name: &str, lattice: &Lattice) -> Result<GridSet> {
        let spec = which
            .as_ref()
            .ok_or_else(|| Error::parse(format!("check `{:?}` needs set {name}", self.check)))?;
        build_set(spec, lattice)
    }

    fn lambda(&self) -> Result<Lambda> {
        self.lambda
            .ok_or_else(|| Error::parse("this check needs a rational `lambda`"))
    }

    fn p(&self) -> Result<PParam> {
        match &self.p {
            Some(s) => PParam::parse(s),
            None => Err(Error::parse("this check needs a mean exponent `p`")),
        }
    }

    fn grid_fn(&self, which: &Option<GridFnSpec>, name: &str, lattice: &Lattice) -> Result<GridFn> {
        let spec = which
            .as_ref()
            .ok_or_else(|| Error::parse(format!("functional checks need `{name}`")))?;
        if spec.cells.len() != spec.values.len() {
            return Err(Error::parse(format!("`{name}` cells/values length mismatch")));
        }
        GridFn::from_pairs(
            *lattice,
            spec.cells.iter().map(|c| c.as_slice()).zip(spec.values.iter().copied()),
        )
    }

    /// Runs the experiment with the sets represented on a `2^level` exact
    /// refinement of the spec pitch.
    pub fn run(&self, level: u32) -> Result<Verdict> {
        let refine_sets = 1i64 << level;
        let lattice = self.lattice()?;
        let phi = self.density.to_density()?;
        let opts = BmOptions {
            general: self.general.unwrap_or(false),
            weight_q: None,
            measure_refine: self.measure_refine.unwrap_or(1),
        };
        let fopts = FunctionalOptions {
            measure_refine: opts.measure_refine,
            t_schedule: match &self.t_schedule {
                Some(ts) => ts.iter().map(|t| t.0).collect(),
                None => FunctionalOptions::default().t_schedule,
            },
        };
        let refined = |s: GridSet| s.refine(refine_sets);

        match self.check {
            CheckKind::Bm => {
                let a = refined(self.set(&self.a, "a", &lattice)?);
                let b = refined(self.set(&self.b, "b", &lattice)?);
                check_bm(&a, &b, self.lambda()?, self.p()?, &phi, &opts)
            }
            CheckKind::TheoremA => {
                let a = refined(self.set(&self.a, "a", &lattice)?);
                let b = refined(self.set(&self.b, "b", &lattice)?);
                check_theorem_a(&a, &b, self.lambda()?, &phi, &opts)
            }
            CheckKind::LinearEqualSup => {
                let a = refined(self.set(&self.a, "a", &lattice)?);
                let b = refined(self.set(&self.b, "b", &lattice)?);
                check_linear_equal_sup(&a, &b, self.lambda()?, self.axis.unwrap_or(0), &phi, &opts)
            }
            CheckKind::Thm47 => {
                let a = refined(self.set(&self.a, "a", &lattice)?);
                let b = refined(self.set(&self.b, "b", &lattice)?);
                let q = match &self.q {
                    Some(s) => PParam::parse(s)?,
                    None => PParam::Zero,
                };
                check_theorem_4_7(&a, &b, self.lambda()?, &phi, q, &opts)
            }
            CheckKind::LinearMarginal => {
                let a = refined(self.set(&self.a, "a", &lattice)?);
                let b = refined(self.set(&self.b, "b", &lattice)?);
                let p = match &self.p {
                    Some(s) => PParam::parse(s)?,
                    None => PParam::Zero,
                };
                check_linear_marginal(&a, &b, self.lambda()?, self.axis.unwrap_or(0), &phi, p, &opts)
            }
            CheckKind::Pl => {
                let f = self.grid_fn(&self.f, "f", &lattice)?.refine(refine_sets);
                let g = self.grid_fn(&self.g, "g", &lattice)?.refine(refine_sets);
                let h = self.grid_fn(&self.h, "h", &lattice)?.refine(refine_sets);
                check_pl(&f, &g, &h, self.lambda()?, &phi)
            }
            CheckKind::Bbl => {
                let f = self.grid_fn(&self.f, "f", &lattice)?.refine(refine_sets);
                let g = self.grid_fn(&self.g, "g", &lattice)?.refine(refine_sets);
                let h = self.grid_fn(&self.h, "h", &lattice)?.refine(refine_sets);
                let m = self.m.ok_or_else(|| Error::parse("bbl needs rational `m`"))?;
                check_bbl(&f, &g, &h, self.lambda()?, self.p()?, m.0, &phi)
            }
            CheckKind::Weighted => {
                let a = refined(self.set(&self.a, "a", &lattice)?);
                let b = refined(self.set(&self.b, "b", &lattice)?);
                let n = self.n.ok_or_else(|| Error::parse("weighted check needs `n`"))?;
                let nn = self.nn.unwrap_or(n);
                check_bm_weighted_product(&a, &b, self.lambda()?, n, nn, &phi, &opts)
            }
            CheckKind::Iso => {
                let a = refined(self.set(&self.a, "a", &lattice)?);
                let b = refined(self.set(&self.b, "b", &lattice)?);
                check_isoperimetric(&a, &b, &phi, &fopts)
            }
            CheckKind::Concavity => {
                let a = refined(self.set(&self.a, "a", &lattice)?);
                let b = refined(self.set(&self.b, "b", &lattice)?);
                let grid: Vec<_> = self
                    .t_grid
                    .as_ref()
                    .ok_or_else(|| Error::parse("concavity check needs `t_grid`"))?
                    .iter()
                    .map(|t| t.0)
                    .collect();
                check_concavity_profile(&a, &b, &phi, &grid, &fopts)
            }
        }
    }
}
