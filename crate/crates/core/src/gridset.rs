//! Finite unions of closed lattice cells with *exact* rational set calculus.
//!
//! A [`GridSet`] is a deduplicated, lexicographically sorted list of integer
//! cell anchors on a [`Lattice`] of rational pitch `h`; the represented point
//! set is the union of the closed boxes `∏ [iₖh, (iₖ+1)h]`.
//!
//! The convex combination `(1-λ)A + λB` for rational `λ = k/m` is computed
//! *exactly* on the refined lattice of pitch `h/m`: each anchor pair `(i, j)`
//! contributes the cube of side `h` anchored at `(m-k)i + kj`, i.e. `m^n`
//! refined cells. Scaling and translation by rationals refine the pitch the
//! same way, so no set operation introduces any discretization error — all
//! numerical error lives in measure quadrature.

use std::collections::HashSet;

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::means::Lambda;
use crate::rational::{format_rat, rat_to_f64, Rat, RatStr};
use crate::{Error, Result};

/// Hard cap on supported dimension; everything here is desk-scale.
pub const MAX_DIM: usize = 4;

/// Cell anchor. Only the first `dim` entries are meaningful; the unused tail
/// is kept at zero so the derived ordering stays consistent.
pub type CellIdx = [i64; MAX_DIM];

/// Regular lattice: dimension plus exact rational pitch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lattice {
    dim: usize,
    pitch: RatStr,
}

impl Lattice {
    pub fn new(dim: usize, pitch: Rat) -> Result<Lattice> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::invalid(format!("dimension must be in 1..={MAX_DIM}, got {dim}")));
        }
        if !pitch.is_positive() {
            return Err(Error::invalid(format!("pitch must be > 0, got {}", format_rat(pitch))));
        }
        Ok(Lattice { dim, pitch: RatStr(pitch) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pitch(&self) -> Rat {
        self.pitch.0
    }

    pub fn pitch_f64(&self) -> f64 {
        rat_to_f64(self.pitch.0)
    }

    /// Lattice with pitch `h/r`.
    pub fn refined(&self, r: i64) -> Lattice {
        debug_assert!(r >= 1);
        Lattice { dim: self.dim, pitch: RatStr(self.pitch.0 / Ratio::new(r, 1)) }
    }

    fn with_dim(&self, dim: usize) -> Lattice {
        Lattice { dim, pitch: self.pitch }
    }
}

/// Finite union of closed lattice cells.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSet {
    lattice: Lattice,
    cells: Vec<CellIdx>,
}

fn zero_pad(dim: usize, idx: &[i64]) -> CellIdx {
    let mut c = [0i64; MAX_DIM];
    c[..dim].copy_from_slice(idx);
    c
}

impl GridSet {
    /// Builds a set from raw anchors; sorts and deduplicates.
    pub fn from_cells<I, C>(lattice: Lattice, cells: I) -> Result<GridSet>
    where
        I: IntoIterator<Item = C>,
        C: AsRef<[i64]>,
    {
        let dim = lattice.dim();
        let mut v: Vec<CellIdx> = Vec::new();
        for c in cells {
            let c = c.as_ref();
            if c.len() != dim {
                return Err(Error::DimMismatch { expected: dim, got: c.len() });
            }
            v.push(zero_pad(dim, c));
        }
        v.sort_unstable();
        v.dedup();
        Ok(GridSet { lattice, cells: v })
    }

    pub fn empty(lattice: Lattice) -> GridSet {
        GridSet { lattice, cells: Vec::new() }
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    pub fn dim(&self) -> usize {
        self.lattice.dim()
    }

    pub fn pitch(&self) -> Rat {
        self.lattice.pitch()
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Anchors in lexicographic order.
    pub fn cells(&self) -> impl Iterator<Item = &[i64]> + '_ {
        let dim = self.dim();
        self.cells.iter().map(move |c| &c[..dim])
    }

    pub fn contains_index(&self, idx: &[i64]) -> bool {
        if idx.len() != self.dim() {
            return false;
        }
        self.cells.binary_search(&zero_pad(self.dim(), idx)).is_ok()
    }

    /// Per-axis `(min, max)` anchor bounds. `None` for the empty set.
    pub fn index_bounds(&self) -> Option<Vec<(i64, i64)>> {
        if self.is_empty() {
            return None;
        }
        let dim = self.dim();
        let mut bounds = vec![(i64::MAX, i64::MIN); dim];
        for c in &self.cells {
            for d in 0..dim {
                bounds[d].0 = bounds[d].0.min(c[d]);
                bounds[d].1 = bounds[d].1.max(c[d]);
            }
        }
        Some(bounds)
    }

    /// Exact closed-cell membership of a rational point.
    pub fn contains_point(&self, p: &[Rat]) -> Result<bool> {
        if p.len() != self.dim() {
            return Err(Error::DimMismatch { expected: self.dim(), got: p.len() });
        }
        let h = self.pitch();
        // Candidate anchors per axis: floor(p/h), plus floor-1 on boundaries.
        let mut cand: Vec<Vec<i64>> = Vec::with_capacity(self.dim());
        for &x in p {
            let q = x / h;
            let f = q.floor().to_integer();
            if q.denom() == &1 {
                cand.push(vec![f - 1, f]);
            } else {
                cand.push(vec![f]);
            }
        }
        let mut idx = vec![0i64; self.dim()];
        Ok(self.any_candidate(&cand, 0, &mut idx))
    }

    fn any_candidate(&self, cand: &[Vec<i64>], d: usize, idx: &mut Vec<i64>) -> bool {
        if d == cand.len() {
            return self.contains_index(idx);
        }
        for &v in &cand[d] {
            idx[d] = v;
            if self.any_candidate(cand, d + 1, idx) {
                return true;
            }
        }
        false
    }

    /// Exact representation of the same point set on pitch `h/r`.
    pub fn refine(&self, r: i64) -> GridSet {
        assert!(r >= 1, "refinement factor must be >= 1");
        if r == 1 {
            return self.clone();
        }
        let dim = self.dim();
        let mut cells = Vec::with_capacity(self.cells.len() * (r as usize).pow(dim as u32));
        let mut offs = vec![0i64; dim];
        for c in &self.cells {
            loop {
                let mut out = [0i64; MAX_DIM];
                for d in 0..dim {
                    out[d] = c[d] * r + offs[d];
                }
                cells.push(out);
                if !next_offset(&mut offs, r) {
                    break;
                }
            }
        }
        // Offset blocks of distinct cells interleave lexicographically for
        // dim >= 2, so a sort is required. Blocks are disjoint: no dedup.
        cells.sort_unstable();
        GridSet { lattice: self.lattice.refined(r), cells }
    }

    /// True when both sets describe the same point set (compares exact
    /// representations on the common refined pitch).
    pub fn point_set_eq(&self, other: &GridSet) -> Result<bool> {
        let (a, b) = common_pitch(self, other)?;
        Ok(a.cells == b.cells)
    }

    pub fn cell_volume_f64(&self) -> f64 {
        self.lattice.pitch_f64().powi(self.dim() as i32)
    }
}

fn next_offset(offs: &mut [i64], span: i64) -> bool {
    for d in (0..offs.len()).rev() {
        offs[d] += 1;
        if offs[d] < span {
            return true;
        }
        offs[d] = 0;
    }
    false
}

fn require_same_lattice(a: &GridSet, b: &GridSet) -> Result<()> {
    if a.lattice != b.lattice {
        return Err(Error::LatticeMismatch(format!(
            "dim {} pitch {} vs dim {} pitch {}",
            a.dim(),
            format_rat(a.pitch()),
            b.dim(),
            format_rat(b.pitch())
        )));
    }
    Ok(())
}

/// Refines both sets to their common pitch (gcd of the pitches).
pub fn common_pitch(a: &GridSet, b: &GridSet) -> Result<(GridSet, GridSet)> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch { expected: a.dim(), got: b.dim() });
    }
    let ha = a.pitch();
    let hb = b.pitch();
    if ha == hb {
        return Ok((a.clone(), b.clone()));
    }
    // gcd(p1/q1, p2/q2) = gcd(p1*q2, p2*q1)/(q1*q2)
    let num = (ha.numer() * hb.denom()).gcd(&(hb.numer() * ha.denom()));
    let h = Ratio::new(num, ha.denom() * hb.denom());
    let ra = (ha / h).to_integer();
    let rb = (hb / h).to_integer();
    Ok((a.refine(ra), b.refine(rb)))
}

// ---------------------------------------------------------------------------
// Pairwise span unions: the common core of combine and the Minkowski sum.
// ---------------------------------------------------------------------------

/// Cells `{ ca·i + cb·j + o : i ∈ A, j ∈ B, o ∈ [0, span)^dim }`, sorted and
/// deduplicated. `ca, cb >= 1`.
fn pair_span_union(a: &GridSet, b: &GridSet, ca: i64, cb: i64, span: i64) -> Vec<CellIdx> {
    debug_assert!(ca >= 1 && cb >= 1 && span >= 1);
    if a.dim() == 2 {
        return pair_span_union_columns(a, b, ca, cb, span);
    }
    let dim = a.dim();
    let (alo, ahi) = min_max(&a.cells, dim);
    let (blo, bhi) = min_max(&b.cells, dim);
    let mut lo = [0i64; MAX_DIM];
    let mut sizes = [0usize; MAX_DIM];
    let mut total: u128 = 1;
    for d in 0..dim {
        lo[d] = ca * alo[d] + cb * blo[d];
        let hi = ca * ahi[d] + cb * bhi[d] + span - 1;
        sizes[d] = (hi - lo[d] + 1) as usize;
        total = total.saturating_mul(sizes[d] as u128);
    }
    if total <= 1 << 27 {
        pair_span_union_bitmap(a, b, ca, cb, span, &lo, &sizes)
    } else {
        pair_span_union_naive(a, b, ca, cb, span)
    }
}

fn min_max(cells: &[CellIdx], dim: usize) -> (CellIdx, CellIdx) {
    let mut lo = [i64::MAX; MAX_DIM];
    let mut hi = [i64::MIN; MAX_DIM];
    for c in cells {
        for d in 0..dim {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    for d in dim..MAX_DIM {
        lo[d] = 0;
        hi[d] = 0;
    }
    (lo, hi)
}

/// 2-D fast path: group cells into per-column row intervals, push one merged
/// interval per (column pair, interval pair). Linear in the interval counts
/// plus the output size instead of `|A|·|B|·m²` cell writes.
fn pair_span_union_columns(a: &GridSet, b: &GridSet, ca: i64, cb: i64, span: i64) -> Vec<CellIdx> {
    let cols_a = to_columns(a);
    let cols_b = to_columns(b);
    let cmin = ca * cols_a.first().unwrap().0 + cb * cols_b.first().unwrap().0;
    let cmax = ca * cols_a.last().unwrap().0 + cb * cols_b.last().unwrap().0 + span - 1;
    let ncols = (cmax - cmin + 1) as usize;
    let mut per_col: Vec<Vec<(i64, i64)>> = vec![Vec::new(); ncols];
    for (ia, rows_a) in &cols_a {
        for (ib, rows_b) in &cols_b {
            let c0 = ca * ia + cb * ib;
            for ra in rows_a {
                for rb in rows_b {
                    // Anchors (ca·ja + cb·jb) over the two row intervals tile a
                    // contiguous run once the span offsets are unioned in.
                    let r0 = ca * ra.0 + cb * rb.0;
                    let r1 = ca * ra.1 + cb * rb.1 + span - 1;
                    for c in c0..c0 + span {
                        per_col[(c - cmin) as usize].push((r0, r1));
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for (ci, mut intervals) in per_col.into_iter().enumerate() {
        if intervals.is_empty() {
            continue;
        }
        intervals.sort_unstable();
        let col = cmin + ci as i64;
        let mut cur = intervals[0];
        for iv in intervals.into_iter().skip(1) {
            if iv.0 > cur.1 + 1 {
                emit_column(&mut out, col, cur);
                cur = iv;
            } else {
                cur.1 = cur.1.max(iv.1);
            }
        }
        emit_column(&mut out, col, cur);
    }
    out
}

fn emit_column(out: &mut Vec<CellIdx>, col: i64, iv: (i64, i64)) {
    for r in iv.0..=iv.1 {
        out.push([col, r, 0, 0]);
    }
}

/// Per-column disjoint sorted row intervals of a 2-D set.
fn to_columns(s: &GridSet) -> Vec<(i64, Vec<(i64, i64)>)> {
    let mut cols: Vec<(i64, Vec<(i64, i64)>)> = Vec::new();
    for c in &s.cells {
        match cols.last_mut() {
            Some((col, rows)) if *col == c[0] => {
                let last = rows.last_mut().unwrap();
                if c[1] == last.1 + 1 {
                    last.1 += 1;
                } else {
                    rows.push((c[1], c[1]));
                }
            }
            _ => cols.push((c[0], vec![(c[1], c[1])])),
        }
    }
    cols
}

fn pair_span_union_bitmap(
    a: &GridSet,
    b: &GridSet,
    ca: i64,
    cb: i64,
    span: i64,
    lo: &CellIdx,
    sizes: &[usize; MAX_DIM],
) -> Vec<CellIdx> {
    let dim = a.dim();
    let total: usize = sizes[..dim].iter().product();
    let mut bits = vec![0u64; total.div_ceil(64)];
    let mut offs = vec![0i64; dim];
    for i in &a.cells {
        for j in &b.cells {
            offs.iter_mut().for_each(|o| *o = 0);
            loop {
                let mut lin = 0usize;
                for d in 0..dim {
                    let x = (ca * i[d] + cb * j[d] + offs[d] - lo[d]) as usize;
                    lin = lin * sizes[d] + x;
                }
                bits[lin / 64] |= 1u64 << (lin % 64);
                if !next_offset(&mut offs, span) {
                    break;
                }
            }
        }
    }
    // Row-major linear order equals lexicographic anchor order.
    let mut out = Vec::new();
    for lin in 0..total {
        if bits[lin / 64] & (1u64 << (lin % 64)) != 0 {
            let mut rem = lin;
            let mut c = [0i64; MAX_DIM];
            for d in (0..dim).rev() {
                c[d] = lo[d] + (rem % sizes[d]) as i64;
                rem /= sizes[d];
            }
            out.push(c);
        }
    }
    out
}

fn pair_span_union_naive(a: &GridSet, b: &GridSet, ca: i64, cb: i64, span: i64) -> Vec<CellIdx> {
    let dim = a.dim();
    let mut out = Vec::new();
    let mut offs = vec![0i64; dim];
    for i in &a.cells {
        for j in &b.cells {
            offs.iter_mut().for_each(|o| *o = 0);
            loop {
                let mut c = [0i64; MAX_DIM];
                for d in 0..dim {
                    c[d] = ca * i[d] + cb * j[d] + offs[d];
                }
                out.push(c);
                if !next_offset(&mut offs, span) {
                    break;
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Exact convex combination `(1-λ)A + λB` on the refined lattice `h/m`.
pub fn combine(a: &GridSet, b: &GridSet, lam: Lambda) -> Result<GridSet> {
    require_same_lattice(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("combine requires non-empty operands".into()));
    }
    let m = lam.m();
    let k = lam.k();
    let cells = pair_span_union(a, b, m - k, k, m);
    Ok(GridSet { lattice: a.lattice.refined(m), cells })
}

/// Exact Minkowski sum `A + B` on the common pitch.
pub fn minkowski_sum(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    require_same_lattice(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet("minkowski_sum requires non-empty operands".into()));
    }
    let cells = pair_span_union(a, b, 1, 1, 2);
    Ok(GridSet { lattice: a.lattice, cells })
}

/// Exact dilation `tA` for rational `t = u/v > 0`, on pitch `h/v`.
pub fn scale(a: &GridSet, t: Rat) -> Result<GridSet> {
    if !t.is_positive() {
        return Err(Error::invalid(format!("scale factor must be > 0, got {}", format_rat(t))));
    }
    let u = *t.numer();
    let v = *t.denom();
    let dim = a.dim();
    let mut cells = Vec::with_capacity(a.cells.len() * (u as usize).pow(dim as u32));
    let mut offs = vec![0i64; dim];
    for c in &a.cells {
        offs.iter_mut().for_each(|o| *o = 0);
        loop {
            let mut out = [0i64; MAX_DIM];
            for d in 0..dim {
                out[d] = c[d] * u + offs[d];
            }
            cells.push(out);
            if !next_offset(&mut offs, u) {
                break;
            }
        }
    }
    cells.sort_unstable();
    Ok(GridSet { lattice: a.lattice.refined(v), cells })
}

/// Anisotropic exact dilation of one axis by `t = u/v > 0`; used by the
/// equal-sup generators. The shared pitch becomes `h/v`.
pub fn scale_axis(a: &GridSet, axis: usize, t: Rat) -> Result<GridSet> {
    if !t.is_positive() {
        return Err(Error::invalid(format!("scale factor must be > 0, got {}", format_rat(t))));
    }
    let dim = a.dim();
    if axis >= dim {
        return Err(Error::invalid(format!("axis {axis} out of range for dim {dim}")));
    }
    let u = *t.numer();
    let v = *t.denom();
    let mut cells = Vec::new();
    let mut spans = vec![0i64; dim];
    for d in 0..dim {
        spans[d] = if d == axis { u } else { v };
    }
    let mut offs = vec![0i64; dim];
    for c in &a.cells {
        offs.iter_mut().for_each(|o| *o = 0);
        loop {
            let mut out = [0i64; MAX_DIM];
            for d in 0..dim {
                out[d] = c[d] * spans[d] + offs[d];
            }
            cells.push(out);
            if !next_offset_mixed(&mut offs, &spans) {
                break;
            }
        }
    }
    cells.sort_unstable();
    cells.dedup();
    Ok(GridSet { lattice: a.lattice.refined(v), cells })
}

fn next_offset_mixed(offs: &mut [i64], spans: &[i64]) -> bool {
    for d in (0..offs.len()).rev() {
        offs[d] += 1;
        if offs[d] < spans[d] {
            return true;
        }
        offs[d] = 0;
    }
    false
}

/// Exact translation by a rational vector; refines the pitch by the least
/// common denominator of the per-axis offsets measured in pitch units.
pub fn translate(a: &GridSet, by: &[Rat]) -> Result<GridSet> {
    let dim = a.dim();
    if by.len() != dim {
        return Err(Error::DimMismatch { expected: dim, got: by.len() });
    }
    let h = a.pitch();
    let steps: Vec<Rat> = by.iter().map(|b| b / h).collect();
    let mut v: i64 = 1;
    for s in &steps {
        v = v.lcm(s.denom());
    }
    let shifted: Vec<i64> = steps.iter().map(|s| (s * Ratio::new(v, 1)).to_integer()).collect();
    let refined = a.refine(v);
    let mut cells = refined.cells;
    for c in &mut cells {
        for d in 0..dim {
            c[d] += shifted[d];
        }
    }
    Ok(GridSet { lattice: a.lattice.refined(v), cells })
}

// ---------------------------------------------------------------------------
// Hulls, predicates, sections, projections.
// ---------------------------------------------------------------------------

/// Grid weakly unconditional hull: closure of the anchor set under
/// componentwise index zeroing, `{ε⊙i : ε ∈ {0,1}^n}`.
///
/// The hull may exceed the point-set hull by cells of thickness `h` along the
/// coordinate hyperplanes; the resulting point set is weakly unconditional
/// and contains `A`.
pub fn wu_hull(a: &GridSet) -> Result<GridSet> {
    if a.is_empty() {
        return Err(Error::EmptySet("wu_hull of the empty set".into()));
    }
    let dim = a.dim();
    let masks = 1usize << dim;
    let mut cells = Vec::with_capacity(a.cells.len() * masks);
    for c in &a.cells {
        for mask in 0..masks {
            let mut z = *c;
            for d in 0..dim {
                if mask & (1 << d) != 0 {
                    z[d] = 0;
                }
            }
            cells.push(z);
        }
    }
    cells.sort_unstable();
    cells.dedup();
    Ok(GridSet { lattice: a.lattice, cells })
}

/// Exact unconditional hull: union over cells of the symmetric boxes
/// `∏ₖ [-cₖ, cₖ]` with `cₖ = max(|iₖ|, |iₖ+1|)·h`.
pub fn u_hull(a: &GridSet) -> Result<GridSet> {
    if a.is_empty() {
        return Err(Error::EmptySet("u_hull of the empty set".into()));
    }
    let dim = a.dim();
    let mut seen: HashSet<CellIdx> = HashSet::new();
    let mut idx = vec![0i64; dim];
    for c in &a.cells {
        let mut m = [0i64; MAX_DIM];
        for d in 0..dim {
            m[d] = c[d].abs().max((c[d] + 1).abs());
        }
        fill_box(&mut seen, &m, dim, 0, &mut idx);
    }
    let mut cells: Vec<CellIdx> = seen.into_iter().collect();
    cells.sort_unstable();
    Ok(GridSet { lattice: a.lattice, cells })
}

fn fill_box(seen: &mut HashSet<CellIdx>, m: &CellIdx, dim: usize, d: usize, idx: &mut Vec<i64>) {
    if d == dim {
        seen.insert(zero_pad(dim, idx));
        return;
    }
    for v in -m[d]..m[d] {
        idx[d] = v;
        fill_box(seen, m, dim, d + 1, idx);
    }
}

/// Anchor-level weak unconditionality: every componentwise zeroing of every
/// anchor is again an anchor. Sufficient for the closed-cell union to be
/// weakly unconditional as a point set.
pub fn is_weakly_unconditional(a: &GridSet) -> bool {
    let dim = a.dim();
    let masks = 1usize << dim;
    for c in &a.cells {
        for mask in 1..masks {
            let mut z = *c;
            for d in 0..dim {
                if mask & (1 << d) != 0 {
                    z[d] = 0;
                }
            }
            if a.cells.binary_search(&z).is_err() {
                return false;
            }
        }
    }
    true
}

/// Cells of `A` with `axis`-index equal to `slice`, with that coordinate
/// removed. The result lives on the (n-1)-dimensional lattice.
pub fn section(a: &GridSet, axis: usize, slice: i64) -> Result<GridSet> {
    let dim = a.dim();
    if axis >= dim {
        return Err(Error::invalid(format!("axis {axis} out of range for dim {dim}")));
    }
    if dim == 1 {
        return Err(Error::invalid("cannot take a section of a 1-D set"));
    }
    let mut cells = Vec::new();
    for c in &a.cells {
        if c[axis] != slice {
            continue;
        }
        let mut out = [0i64; MAX_DIM];
        let mut t = 0;
        for d in 0..dim {
            if d != axis {
                out[t] = c[d];
                t += 1;
            }
        }
        cells.push(out);
    }
    cells.sort_unstable();
    cells.dedup();
    Ok(GridSet { lattice: a.lattice.with_dim(dim - 1), cells })
}

/// Distinct `axis`-indices present in `A`, ascending.
pub fn slice_indices(a: &GridSet, axis: usize) -> Result<Vec<i64>> {
    let dim = a.dim();
    if axis >= dim {
        return Err(Error::invalid(format!("axis {axis} out of range for dim {dim}")));
    }
    let mut v: Vec<i64> = a.cells.iter().map(|c| c[axis]).collect();
    v.sort_unstable();
    v.dedup();
    Ok(v)
}

/// Coordinate projection onto the given (ordered) axes.
pub fn project(a: &GridSet, axes: &[usize]) -> Result<GridSet> {
    let dim = a.dim();
    if axes.is_empty() || axes.len() >= dim {
        return Err(Error::invalid("projection axes must be a non-empty proper subset"));
    }
    let mut sorted = axes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != axes.len() || *sorted.last().unwrap() >= dim {
        return Err(Error::invalid("projection axes must be distinct and in range"));
    }
    let mut cells = Vec::with_capacity(a.cells.len());
    for c in &a.cells {
        let mut out = [0i64; MAX_DIM];
        for (t, &d) in axes.iter().enumerate() {
            out[t] = c[d];
        }
        cells.push(out);
    }
    cells.sort_unstable();
    cells.dedup();
    Ok(GridSet { lattice: a.lattice.with_dim(axes.len()), cells })
}

/// Union of two sets, exact on the common refined pitch.
pub fn union(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    let (mut a, b) = common_pitch(a, b)?;
    a.cells.extend_from_slice(&b.cells);
    a.cells.sort_unstable();
    a.cells.dedup();
    Ok(a)
}

/// Anchor-level subset check on the common pitch.
pub fn is_subset(a: &GridSet, b: &GridSet) -> Result<bool> {
    let (a, b) = common_pitch(a, b)?;
    Ok(a.cells.iter().all(|c| b.cells.binary_search(c).is_ok()))
}

/// Cell-level difference `A \ B` on the common refined pitch. Exact as a
/// point set up to the shared cell boundaries (a Lebesgue-null set).
pub fn difference(a: &GridSet, b: &GridSet) -> Result<GridSet> {
    let (a, b) = common_pitch(a, b)?;
    let cells: Vec<CellIdx> = a
        .cells
        .iter()
        .filter(|c| b.cells.binary_search(c).is_err())
        .copied()
        .collect();
    Ok(GridSet { lattice: a.lattice, cells })
}

// ---------------------------------------------------------------------------
// Declarative set specifications.
// ---------------------------------------------------------------------------

/// Inner digitization keeps cells fully inside the shape; outer keeps cells
/// that intersect it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum DigitizationMode {
    Inner,
    #[default]
    Outer,
}

/// Axis-aligned rational window (also the truncation frame for unbounded
/// shapes such as cones).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub min: Vec<RatStr>,
    pub max: Vec<RatStr>,
}

impl Window {
    pub fn new(min: Vec<Rat>, max: Vec<Rat>) -> Result<Window> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::invalid("window min/max must have equal positive length"));
        }
        for (lo, hi) in min.iter().zip(&max) {
            if lo >= hi {
                return Err(Error::invalid("window must have positive extent on every axis"));
            }
        }
        Ok(Window {
            min: min.into_iter().map(RatStr).collect(),
            max: max.into_iter().map(RatStr).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.min.len()
    }

    /// Anchor ranges of the cells lying fully inside the window.
    pub fn index_ranges(&self, lattice: &Lattice) -> Result<Vec<(i64, i64)>> {
        if self.dim() != lattice.dim() {
            return Err(Error::DimMismatch { expected: lattice.dim(), got: self.dim() });
        }
        let h = lattice.pitch();
        let mut out = Vec::with_capacity(self.dim());
        for (lo, hi) in self.min.iter().zip(&self.max) {
            let lo_idx = (lo.0 / h).ceil().to_integer();
            let hi_idx = (hi.0 / h).floor().to_integer() - 1;
            if hi_idx < lo_idx {
                return Err(Error::invalid("window is thinner than one cell"));
            }
            out.push((lo_idx, hi_idx));
        }
        Ok(out)
    }
}

/// Declarative description of a grid set. Box, cells, union, rational
/// translate/scale and the hulls are exact; curved shapes carry an explicit
/// digitization mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetSpec {
    Box {
        min: Vec<RatStr>,
        max: Vec<RatStr>,
    },
    Ball {
        center: Vec<RatStr>,
        radius: RatStr,
        #[serde(default)]
        mode: DigitizationMode,
    },
    Cone {
        alpha_deg: f64,
        window: Window,
        #[serde(default)]
        mode: DigitizationMode,
    },
    Polygon {
        vertices: Vec<[RatStr; 2]>,
        #[serde(default)]
        mode: DigitizationMode,
    },
    Cells {
        indices: Vec<Vec<i64>>,
    },
    Union {
        parts: Vec<SetSpec>,
    },
    Translate {
        by: Vec<RatStr>,
        of: Box<SetSpec>,
    },
    Scale {
        by: RatStr,
        of: Box<SetSpec>,
    },
    WuHull {
        of: Box<SetSpec>,
    },
    UHull {
        of: Box<SetSpec>,
    },
}

impl SetSpec {
    pub fn boxed(min: Vec<Rat>, max: Vec<Rat>) -> SetSpec {
        SetSpec::Box {
            min: min.into_iter().map(RatStr).collect(),
            max: max.into_iter().map(RatStr).collect(),
        }
    }

    pub fn from_set(s: &GridSet) -> SetSpec {
        SetSpec::Cells { indices: s.cells().map(|c| c.to_vec()).collect() }
    }
}

/// Materializes a [`SetSpec`] on the given lattice. Rational constructions
/// are exact; digitized shapes follow their mode. Inner digitizations that
/// come out empty are an error (the inequalities need non-empty sets).
pub fn build_set(spec: &SetSpec, lattice: &Lattice) -> Result<GridSet> {
    let set = build_set_inner(spec, lattice)?;
    if set.is_empty() {
        return Err(Error::EmptySet(format!("spec produced an empty set: {spec:?}")));
    }
    Ok(set)
}

fn build_set_inner(spec: &SetSpec, lattice: &Lattice) -> Result<GridSet> {
    match spec {
        SetSpec::Box { min, max } => build_box(min, max, lattice),
        SetSpec::Ball { center, radius, mode } => build_ball(center, radius.0, *mode, lattice),
        SetSpec::Cone { alpha_deg, window, mode } => build_cone(*alpha_deg, window, *mode, lattice),
        SetSpec::Polygon { vertices, mode } => build_polygon(vertices, *mode, lattice),
        SetSpec::Cells { indices } => GridSet::from_cells(*lattice, indices.iter().map(|v| v.as_slice())),
        SetSpec::Union { parts } => {
            let mut acc: Option<GridSet> = None;
            for p in parts {
                let s = build_set_inner(p, lattice)?;
                acc = Some(match acc {
                    None => s,
                    Some(prev) => union(&prev, &s)?,
                });
            }
            acc.ok_or_else(|| Error::invalid("union of zero parts"))
        }
        SetSpec::Translate { by, of } => {
            let inner = build_set_inner(of, lattice)?;
            let by: Vec<Rat> = by.iter().map(|r| r.0).collect();
            translate(&inner, &by)
        }
        SetSpec::Scale { by, of } => {
            let inner = build_set_inner(of, lattice)?;
            scale(&inner, by.0)
        }
        SetSpec::WuHull { of } => wu_hull(&build_set_inner(of, lattice)?),
        SetSpec::UHull { of } => u_hull(&build_set_inner(of, lattice)?),
    }
}

fn build_box(min: &[RatStr], max: &[RatStr], lattice: &Lattice) -> Result<GridSet> {
    let dim = lattice.dim();
    if min.len() != dim || max.len() != dim {
        return Err(Error::DimMismatch { expected: dim, got: min.len() });
    }
    let h = lattice.pitch();
    let mut ranges = Vec::with_capacity(dim);
    for (lo, hi) in min.iter().zip(max) {
        if lo.0 >= hi.0 {
            return Err(Error::invalid("box must satisfy min < max on every axis"));
        }
        let qlo = lo.0 / h;
        let qhi = hi.0 / h;
        if qlo.denom() != &1 || qhi.denom() != &1 {
            return Err(Error::NotAligned(format!(
                "box bound {}..{} on pitch {}",
                format_rat(lo.0),
                format_rat(hi.0),
                format_rat(h)
            )));
        }
        ranges.push((qlo.to_integer(), qhi.to_integer() - 1));
    }
    let mut cells = Vec::new();
    let mut idx = vec![0i64; dim];
    fill_ranges(&ranges, 0, &mut idx, &mut cells, dim);
    Ok(GridSet { lattice: *lattice, cells })
}

fn fill_ranges(ranges: &[(i64, i64)], d: usize, idx: &mut Vec<i64>, out: &mut Vec<CellIdx>, dim: usize) {
    if d == dim {
        out.push(zero_pad(dim, idx));
        return;
    }
    for v in ranges[d].0..=ranges[d].1 {
        idx[d] = v;
        fill_ranges(ranges, d + 1, idx, out, dim);
    }
}

type Rat128 = Ratio<i128>;

fn widen(r: Rat) -> Rat128 {
    Ratio::new(*r.numer() as i128, *r.denom() as i128)
}

fn build_ball(center: &[RatStr], radius: Rat, mode: DigitizationMode, lattice: &Lattice) -> Result<GridSet> {
    let dim = lattice.dim();
    if center.len() != dim {
        return Err(Error::DimMismatch { expected: dim, got: center.len() });
    }
    if !radius.is_positive() {
        return Err(Error::invalid("ball radius must be > 0"));
    }
    let h = lattice.pitch();
    let r2 = widen(radius) * widen(radius);
    let mut ranges = Vec::with_capacity(dim);
    for c in center {
        let lo = ((c.0 - radius) / h).floor().to_integer();
        let hi = ((c.0 + radius) / h).ceil().to_integer() - 1;
        ranges.push((lo, hi));
    }
    let mut cells = Vec::new();
    let mut idx = vec![0i64; dim];
    let centers: Vec<Rat128> = center.iter().map(|c| widen(c.0)).collect();
    let hw = widen(h);
    ball_scan(&ranges, 0, &mut idx, &mut cells, dim, &centers, hw, r2, mode);
    Ok(GridSet { lattice: *lattice, cells })
}

#[allow(clippy::too_many_arguments)]
fn ball_scan(
    ranges: &[(i64, i64)],
    d: usize,
    idx: &mut Vec<i64>,
    out: &mut Vec<CellIdx>,
    dim: usize,
    centers: &[Rat128],
    h: Rat128,
    r2: Rat128,
    mode: DigitizationMode,
) {
    if d == dim {
        let mut near = Rat128::zero();
        let mut far = Rat128::zero();
        for t in 0..dim {
            let a = Ratio::new(idx[t] as i128, 1) * h;
            let b = Ratio::new(idx[t] as i128 + 1, 1) * h;
            let c = centers[t];
            let da = (c - a).abs();
            let db = (c - b).abs();
            let dn = if a <= c && c <= b { Rat128::zero() } else { da.min(db) };
            let df = da.max(db);
            near += dn * dn;
            far += df * df;
        }
        let inside = match mode {
            DigitizationMode::Inner => far <= r2,
            DigitizationMode::Outer => near <= r2,
        };
        if inside {
            out.push(zero_pad(dim, idx));
        }
        return;
    }
    for v in ranges[d].0..=ranges[d].1 {
        idx[d] = v;
        ball_scan(ranges, d + 1, idx, out, dim, centers, h, r2, mode);
    }
}

/// Digitization of `{(x, y) : y ≥ |x|·tan α}` truncated to the window.
fn build_cone(alpha_deg: f64, window: &Window, mode: DigitizationMode, lattice: &Lattice) -> Result<GridSet> {
    if lattice.dim() != 2 {
        return Err(Error::invalid("cone specs are 2-D"));
    }
    if !(0.0 < alpha_deg && alpha_deg < 90.0) {
        return Err(Error::invalid(format!("cone half-angle must be in (0deg, 90deg), got {alpha_deg}")));
    }
    let tan = (alpha_deg.to_radians()).tan();
    let ranges = window.index_ranges(lattice)?;
    let h = lattice.pitch_f64();
    let mut cells = Vec::new();
    for i in ranges[0].0..=ranges[0].1 {
        let x0 = i as f64 * h;
        let x1 = (i + 1) as f64 * h;
        let min_abs = if x0 <= 0.0 && 0.0 <= x1 { 0.0 } else { x0.abs().min(x1.abs()) };
        let max_abs = x0.abs().max(x1.abs());
        for j in ranges[1].0..=ranges[1].1 {
            let y0 = j as f64 * h;
            let y1 = (j + 1) as f64 * h;
            let inside = match mode {
                DigitizationMode::Outer => y1 >= tan * min_abs,
                DigitizationMode::Inner => y0 >= tan * max_abs,
            };
            if inside {
                cells.push([i, j, 0, 0]);
            }
        }
    }
    Ok(GridSet { lattice: *lattice, cells })
}

fn build_polygon(vertices: &[[RatStr; 2]], mode: DigitizationMode, lattice: &Lattice) -> Result<GridSet> {
    if lattice.dim() != 2 {
        return Err(Error::invalid("polygon specs are 2-D"));
    }
    if vertices.len() < 3 {
        return Err(Error::invalid("polygon needs at least 3 vertices"));
    }
    let mut vs: Vec<[Rat128; 2]> = vertices.iter().map(|v| [widen(v[0].0), widen(v[1].0)]).collect();
    // Normalize to counterclockwise orientation.
    let mut area2 = Rat128::zero();
    for i in 0..vs.len() {
        let a = vs[i];
        let b = vs[(i + 1) % vs.len()];
        area2 += a[0] * b[1] - b[0] * a[1];
    }
    if area2.is_zero() {
        return Err(Error::invalid("degenerate polygon"));
    }
    if area2.is_negative() {
        vs.reverse();
    }
    // Convexity: all cross products of consecutive edges non-negative.
    let n = vs.len();
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        let c = vs[(i + 2) % n];
        let cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0]);
        if cross.is_negative() {
            return Err(Error::invalid("polygon must be convex"));
        }
    }
    let h = widen(lattice.pitch());
    let (mut xmin, mut xmax) = (vs[0][0], vs[0][0]);
    let (mut ymin, mut ymax) = (vs[0][1], vs[0][1]);
    for v in &vs {
        xmin = xmin.min(v[0]);
        xmax = xmax.max(v[0]);
        ymin = ymin.min(v[1]);
        ymax = ymax.max(v[1]);
    }
    let ilo = (xmin / h).floor().to_integer() as i64;
    let ihi = (xmax / h).ceil().to_integer() as i64 - 1;
    let jlo = (ymin / h).floor().to_integer() as i64;
    let jhi = (ymax / h).ceil().to_integer() as i64 - 1;
    let mut cells = Vec::new();
    for i in ilo..=ihi {
        for j in jlo..=jhi {
            let c0 = [Ratio::new(i as i128, 1) * h, Ratio::new(j as i128, 1) * h];
            let c1 = [Ratio::new(i as i128 + 1, 1) * h, Ratio::new(j as i128 + 1, 1) * h];
            let keep = match mode {
                DigitizationMode::Inner => cell_inside_polygon(&vs, c0, c1),
                DigitizationMode::Outer => cell_intersects_polygon(&vs, c0, c1),
            };
            if keep {
                cells.push([i, j, 0, 0]);
            }
        }
    }
    Ok(GridSet { lattice: *lattice, cells })
}

fn cell_corners(c0: [Rat128; 2], c1: [Rat128; 2]) -> [[Rat128; 2]; 4] {
    [[c0[0], c0[1]], [c1[0], c0[1]], [c0[0], c1[1]], [c1[0], c1[1]]]
}

fn cell_inside_polygon(vs: &[[Rat128; 2]], c0: [Rat128; 2], c1: [Rat128; 2]) -> bool {
    // Convexity makes the corner check sufficient.
    let n = vs.len();
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        for corner in cell_corners(c0, c1) {
            let cross = (b[0] - a[0]) * (corner[1] - a[1]) - (b[1] - a[1]) * (corner[0] - a[0]);
            if cross.is_negative() {
                return false;
            }
        }
    }
    true
}

/// Separating-axis test between a convex (CCW) polygon and a closed box.
fn cell_intersects_polygon(vs: &[[Rat128; 2]], c0: [Rat128; 2], c1: [Rat128; 2]) -> bool {
    let n = vs.len();
    // Box axes.
    let (mut pxmin, mut pxmax) = (vs[0][0], vs[0][0]);
    let (mut pymin, mut pymax) = (vs[0][1], vs[0][1]);
    for v in vs {
        pxmin = pxmin.min(v[0]);
        pxmax = pxmax.max(v[0]);
        pymin = pymin.min(v[1]);
        pymax = pymax.max(v[1]);
    }
    if pxmax < c0[0] || c1[0] < pxmin || pymax < c0[1] || c1[1] < pymin {
        return false;
    }
    // Outward edge normals: interior of the CCW polygon is <x - a, n> <= 0.
    let corners = cell_corners(c0, c1);
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        let nx = b[1] - a[1];
        let ny = -(b[0] - a[0]);
        let mut cell_min = (corners[0][0] - a[0]) * nx + (corners[0][1] - a[1]) * ny;
        for c in &corners[1..] {
            cell_min = cell_min.min((c[0] - a[0]) * nx + (c[1] - a[1]) * ny);
        }
        if cell_min.is_positive() {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Seeded random set generation.
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomFamily {
    /// Weakly unconditional: hull of a random cell union (sometimes the
    /// unconditional hull, which is also weakly unconditional).
    Wu,
    /// Inner digitization of a random convex polytope.
    Convex,
    /// Unconstrained random cell union.
    Any,
}

impl RandomFamily {
    pub fn parse(s: &str) -> Result<RandomFamily> {
        match s {
            "wu" => Ok(RandomFamily::Wu),
            "convex" => Ok(RandomFamily::Convex),
            "any" => Ok(RandomFamily::Any),
            other => Err(Error::parse(format!("unknown family `{other}` (wu|convex|any)"))),
        }
    }
}

/// Deterministic random set: same seed, same set. Retries a bounded number
/// of times when a draw digitizes to the empty set.
pub fn random_set(family: RandomFamily, lattice: &Lattice, window: &Window, seed: u64) -> Result<GridSet> {
    let ranges = window.index_ranges(lattice)?;
    for attempt in 0..32u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt.wrapping_mul(0x9E3779B97F4A7C15)));
        let set = match family {
            RandomFamily::Any => random_union(lattice, &ranges, &mut rng, 12)?,
            RandomFamily::Wu => {
                let base = random_union(lattice, &ranges, &mut rng, 6)?;
                if rng.random_range(0..3) == 0 {
                    u_hull(&base)?
                } else {
                    wu_hull(&base)?
                }
            }
            RandomFamily::Convex => random_convex(lattice, &ranges, &mut rng)?,
        };
        if !set.is_empty() {
            return Ok(set);
        }
    }
    Err(Error::EmptySet(format!("random_set({family:?}) kept generating empty sets")))
}

/// Random cell union: a couple of solid random boxes plus scattered cells.
/// Solid blocks matter for counterexample hunting — diffuse single-cell
/// scatters are fattened too much by the combination to ever violate.
fn random_union(
    lattice: &Lattice,
    ranges: &[(i64, i64)],
    rng: &mut ChaCha8Rng,
    max_scatter: usize,
) -> Result<GridSet> {
    let dim = lattice.dim();
    // Concentration draw: sometimes confine the union to a window shrunk
    // toward the origin, so hulls of different extents all occur.
    let shrink = [1i64, 1, 2, 4][rng.random_range(0..4usize)];
    let ranges: Vec<(i64, i64)> = ranges
        .iter()
        .map(|&(lo, hi)| {
            let (lo, hi) = (lo / shrink, hi / shrink);
            if lo < hi {
                (lo, hi)
            } else {
                (lo.min(hi - 1), hi.max(lo + 1))
            }
        })
        .collect();
    let ranges = ranges.as_slice();
    let mut cells: Vec<Vec<i64>> = Vec::new();
    let blocks = rng.random_range(0..=2);
    for _ in 0..blocks {
        let mut lo = vec![0i64; dim];
        let mut hi = vec![0i64; dim];
        for (d, r) in ranges.iter().enumerate() {
            let span = r.1 - r.0;
            let side = 1 + rng.random_range(0..=(span / 2).max(1));
            let start = rng.random_range(r.0..=(r.1 - side + 1).max(r.0));
            lo[d] = start;
            hi[d] = (start + side - 1).min(r.1);
        }
        let mut idx = lo.clone();
        loop {
            cells.push(idx.clone());
            let mut d = dim;
            let mut done = true;
            while d > 0 {
                d -= 1;
                idx[d] += 1;
                if idx[d] <= hi[d] {
                    done = false;
                    break;
                }
                idx[d] = lo[d];
            }
            if done {
                break;
            }
        }
    }
    let scatter = if blocks == 0 { rng.random_range(1..=max_scatter) } else { rng.random_range(0..=max_scatter) };
    for _ in 0..scatter {
        let mut c = vec![0i64; dim];
        for (d, r) in ranges.iter().enumerate() {
            c[d] = rng.random_range(r.0..=r.1);
        }
        cells.push(c);
    }
    GridSet::from_cells(*lattice, cells)
}

fn random_convex(lattice: &Lattice, ranges: &[(i64, i64)], rng: &mut ChaCha8Rng) -> Result<GridSet> {
    let dim = lattice.dim();
    let h = lattice.pitch_f64();
    // A random center/radius plus random tangent halfplanes.
    let mut center = vec![0.0f64; dim];
    let mut radius = f64::MAX;
    for (d, r) in ranges.iter().enumerate() {
        let span = (r.1 - r.0 + 1) as f64 * h;
        let lo = r.0 as f64 * h;
        center[d] = lo + span * (0.25 + 0.5 * rng.random::<f64>());
        radius = radius.min(span * (0.15 + 0.2 * rng.random::<f64>()));
    }
    let k = 2 * dim + rng.random_range(0..=4);
    let mut normals = Vec::with_capacity(k);
    for _ in 0..k {
        let mut n = vec![0.0f64; dim];
        let mut norm = 0.0;
        for v in n.iter_mut() {
            *v = rng.random::<f64>() * 2.0 - 1.0;
            norm += *v * *v;
        }
        let norm = norm.sqrt().max(1e-9);
        n.iter_mut().for_each(|v| *v /= norm);
        normals.push(n);
    }
    let mut cells = Vec::new();
    let mut idx = vec![0i64; dim];
    convex_scan(ranges, 0, &mut idx, &mut cells, dim, h, &center, radius, &normals);
    GridSet::from_cells(*lattice, cells)
}

#[allow(clippy::too_many_arguments)]
fn convex_scan(
    ranges: &[(i64, i64)],
    d: usize,
    idx: &mut Vec<i64>,
    out: &mut Vec<Vec<i64>>,
    dim: usize,
    h: f64,
    center: &[f64],
    radius: f64,
    normals: &[Vec<f64>],
) {
    if d == dim {
        // Inner digitization: every cell corner inside every halfplane.
        for mask in 0..(1usize << dim) {
            let mut corner = vec![0.0f64; dim];
            for t in 0..dim {
                let off = if mask & (1 << t) != 0 { 1 } else { 0 };
                corner[t] = (idx[t] + off) as f64 * h;
            }
            for n in normals {
                let dot: f64 = n.iter().zip(&corner).zip(center).map(|((nv, cv), ce)| nv * (cv - ce)).sum();
                if dot > radius {
                    return;
                }
            }
        }
        out.push(idx.clone());
        return;
    }
    for v in ranges[d].0..=ranges[d].1 {
        idx[d] = v;
        convex_scan(ranges, d + 1, idx, out, dim, h, center, radius, normals);
    }
}
