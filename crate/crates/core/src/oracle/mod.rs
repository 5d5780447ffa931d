//! Exact population functionals by weighted enumeration.
//!
//! Only the relevant coordinates `R` and the correlated block `K` influence
//! conditional means of the target. Call `Q = R ∪ K` the core. The oracle
//! tabulates the probability and target value of each of the `2^|Q|` core
//! assignments once; a cell's constraints on core coordinates restrict that
//! table, and its constraints on the remaining (independent) coordinates only
//! contribute a product factor to the cell's mass.

mod algorithms;
mod assumptions;
mod cell;
mod report;

use crate::bits::{get_bit, set_bit, words_for};
use crate::data::{FeatureDistribution, Model, SparseTarget};
use crate::{Error, Result};

pub use algorithms::{
    population_breiman, population_level_split, BreimanOutcome, LevelSplitOutcome,
    LevelSplitSearch, PiecewiseConstant,
};
pub use assumptions::{
    density_lower_bound, diminishing_returns_constant, leaf_relevant_set, relevant_set,
    strong_sparsity_margin, submodularity_constant, SparsityVariant,
};
pub use cell::{Cell, Partition, SplitSet, MAX_GRID_BITS};
pub use report::{diagnose, DiagnosticsReport};

/// Largest core `|R ∪ K|` the oracle enumerates.
pub const CORE_CAP: usize = 22;

/// Largest number of coordinates [`PopulationProblem::for_each_point`] enumerates.
pub const POINT_CAP: usize = 24;

/// Probability and conditional moments of `m` on a cell.
///
/// `mean` and `mean_sq` are `None` when the cell has zero probability.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellMoments {
    pub prob: f64,
    pub mean: Option<f64>,
    pub mean_sq: Option<f64>,
}

/// A feature law together with a sparse target, prepared for exact
/// enumeration.
#[derive(Clone, Debug)]
pub struct PopulationProblem {
    dist: FeatureDistribution,
    target: SparseTarget,
    core: Vec<usize>,
    core_pos: Vec<Option<u32>>,
    weight: Vec<f64>,
    value: Vec<f64>,
}

/// A cell expressed on the core table.
#[derive(Clone, Copy, Debug)]
struct Restriction {
    mask: usize,
    bits: usize,
    outside: f64,
}

#[derive(Clone, Copy, Debug)]
struct Group {
    w: f64,
    wm: f64,
    lo: f64,
    hi: f64,
}

impl Group {
    const EMPTY: Group = Group {
        w: 0.0,
        wm: 0.0,
        lo: f64::INFINITY,
        hi: f64::NEG_INFINITY,
    };

    #[inline]
    fn add(&mut self, w: f64, m: f64) {
        if w > 0.0 {
            self.w += w;
            self.wm += w * m;
            self.lo = self.lo.min(m);
            self.hi = self.hi.max(m);
        }
    }

    /// Conditional mean; exact when the group is constant.
    fn mean(&self) -> Option<f64> {
        if self.w <= 0.0 {
            None
        } else if self.lo == self.hi {
            Some(self.lo)
        } else {
            Some((self.wm / self.w).clamp(self.lo, self.hi))
        }
    }
}

impl PopulationProblem {
    pub fn new(dist: FeatureDistribution, target: SparseTarget) -> Result<Self> {
        let d = dist.dim();
        if target.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: target.dim(),
            });
        }
        let mut core: Vec<usize> = target.relevant().to_vec();
        for &c in dist.block_coords() {
            if !core.contains(&c) {
                core.push(c);
            }
        }
        if core.len() > CORE_CAP {
            return Err(Error::CapExceeded {
                what: "population oracle core |R ∪ K|",
                needed: core.len(),
                cap: CORE_CAP,
            });
        }
        let mut core_pos = vec![None; d];
        for (k, &c) in core.iter().enumerate() {
            core_pos[c] = Some(k as u32);
        }
        let q = core.len();
        let r = target.relevant().len();
        let block_map: Vec<u32> = dist
            .block_coords()
            .iter()
            .map(|c| core_pos[*c].expect("block coordinates are core"))
            .collect();
        let mut weight = Vec::with_capacity(1 << q);
        let mut value = Vec::with_capacity(1 << q);
        for z in 0..1usize << q {
            let mut w = 1.0;
            for (k, &c) in core.iter().enumerate() {
                if !dist.in_block(c) {
                    let p = dist.product_params()[c];
                    w *= if (z >> k) & 1 == 1 { p } else { 1.0 - p };
                }
            }
            if let Some(block) = dist.block() {
                let idx = block_map
                    .iter()
                    .enumerate()
                    .fold(0usize, |acc, (k, &pos)| acc | (((z >> pos) & 1) << k));
                w *= block.table()[idx];
            }
            weight.push(w);
            value.push(target.table()[z & ((1 << r) - 1)]);
        }
        Ok(Self {
            dist,
            target,
            core,
            core_pos,
            weight,
            value,
        })
    }

    pub fn from_model(model: &Model) -> Result<Self> {
        Self::new(model.distribution.clone(), model.target.clone())
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    pub fn distribution(&self) -> &FeatureDistribution {
        &self.dist
    }

    pub fn target(&self) -> &SparseTarget {
        &self.target
    }

    /// The enumerated coordinates `R ∪ K` (relevant first).
    pub fn core(&self) -> &[usize] {
        &self.core
    }

    pub fn is_core(&self, coord: usize) -> bool {
        self.core_pos.get(coord).is_some_and(Option::is_some)
    }

    fn check_coord(&self, coord: usize) -> Result<()> {
        if coord < self.dim() {
            Ok(())
        } else {
            Err(Error::InvalidPartition(format!(
                "coordinate {} outside dimension {}",
                coord + 1,
                self.dim()
            )))
        }
    }

    fn restrict(&self, cell: &Cell) -> Result<Restriction> {
        if cell.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: cell.dim(),
            });
        }
        let mut r = Restriction {
            mask: 0,
            bits: 0,
            outside: 1.0,
        };
        for &(c, b) in cell.constraints() {
            match self.core_pos[c] {
                Some(k) => {
                    r.mask |= 1 << k;
                    r.bits |= usize::from(b) << k;
                }
                None => {
                    let p = self.dist.product_params()[c];
                    r.outside *= if b { p } else { 1.0 - p };
                }
            }
        }
        Ok(r)
    }

    fn root_restriction(&self) -> Restriction {
        Restriction {
            mask: 0,
            bits: 0,
            outside: 1.0,
        }
    }

    /// Core bit positions of the core coordinates among `coords`, in order.
    fn key_positions(&self, coords: &[usize]) -> Result<Vec<u32>> {
        let mut out = Vec::new();
        for &c in coords {
            self.check_coord(c)?;
            if let Some(k) = self.core_pos[c] {
                if !out.contains(&k) {
                    out.push(k);
                }
            }
        }
        Ok(out)
    }

    /// Visits the core assignments inside the restriction in increasing order.
    #[inline]
    fn for_each_in(&self, r: &Restriction, mut f: impl FnMut(usize)) {
        let full = (1usize << self.core.len()) - 1;
        let free = full & !r.mask;
        let mut sub = 0usize;
        loop {
            f(r.bits | sub);
            if sub == free {
                break;
            }
            sub = ((sub | !free).wrapping_add(1)) & free;
        }
    }

    fn groups(&self, r: &Restriction, keys: &[u32]) -> Vec<Group> {
        let mut groups = vec![Group::EMPTY; 1 << keys.len()];
        self.for_each_in(r, |z| {
            let key = key_of(z, keys);
            groups[key].add(self.weight[z], self.value[z]);
        });
        groups
    }

    /// `Σ w(z) (m(z) − mean of z's group)²` over the restriction.
    fn within(&self, r: &Restriction, keys: &[u32], groups: &[Group]) -> f64 {
        let means: Vec<Option<f64>> = groups.iter().map(Group::mean).collect();
        let mut total = 0.0;
        self.for_each_in(r, |z| {
            let w = self.weight[z];
            if w > 0.0 {
                if let Some(mean) = means[key_of(z, keys)] {
                    let dev = self.value[z] - mean;
                    total += w * dev * dev;
                }
            }
        });
        total
    }

    pub fn mass(&self, cell: &Cell) -> Result<f64> {
        let r = self.restrict(cell)?;
        if r.outside == 0.0 {
            return Ok(0.0);
        }
        let mut w = 0.0;
        self.for_each_in(&r, |z| w += self.weight[z]);
        Ok(r.outside * w)
    }

    pub fn cond_moments(&self, cell: &Cell) -> Result<CellMoments> {
        let r = self.restrict(cell)?;
        let g = self.groups(&r, &[])[0];
        let prob = r.outside * g.w;
        if prob <= 0.0 {
            return Ok(CellMoments {
                prob: 0.0,
                mean: None,
                mean_sq: None,
            });
        }
        let mean_sq = if g.lo == g.hi {
            g.lo * g.lo
        } else {
            let mut s = 0.0;
            self.for_each_in(&r, |z| {
                let w = self.weight[z];
                if w > 0.0 {
                    s += w * self.value[z] * self.value[z];
                }
            });
            s / g.w
        };
        Ok(CellMoments {
            prob,
            mean: g.mean(),
            mean_sq: Some(mean_sq),
        })
    }

    /// `E[m]`.
    pub fn mean(&self) -> f64 {
        self.groups(&self.root_restriction(), &[])[0]
            .mean()
            .expect("the whole space has positive mass")
    }

    /// `E[m²]`.
    pub fn second_moment(&self) -> f64 {
        self.weight
            .iter()
            .zip(&self.value)
            .map(|(w, m)| w * m * m)
            .sum()
    }

    /// `V̄(S) = Σ_z Pr(x_S = z) E[m | x_S = z]²`.
    pub fn vbar(&self, splits: &SplitSet) -> Result<f64> {
        let keys = self.key_positions(splits.coords())?;
        let groups = self.groups(&self.root_restriction(), &keys);
        Ok(groups
            .iter()
            .filter_map(|g| g.mean().map(|m| g.w * m * m))
            .sum())
    }

    /// `L̄(S) = E[(m − E[m | x_S])²]`, evaluated directly.
    pub fn lbar(&self, splits: &SplitSet) -> Result<f64> {
        let keys = self.key_positions(splits.coords())?;
        let r = self.root_restriction();
        let groups = self.groups(&r, &keys);
        Ok(self.within(&r, &keys, &groups))
    }

    fn positive_restriction(&self, cell: &Cell) -> Result<(Restriction, f64)> {
        let r = self.restrict(cell)?;
        let mut w = 0.0;
        self.for_each_in(&r, |z| w += self.weight[z]);
        if r.outside == 0.0 || w <= 0.0 {
            return Err(Error::ZeroMassCell);
        }
        Ok((r, w))
    }

    /// `V̄_ℓ(A, I) = E[E[m | x ∈ A, x_I]² | x ∈ A]`.
    pub fn vbar_leaf(&self, cell: &Cell, dirs: &[usize]) -> Result<f64> {
        let (r, w) = self.positive_restriction(cell)?;
        let keys = self.key_positions(dirs)?;
        let groups = self.groups(&r, &keys);
        Ok(groups
            .iter()
            .filter_map(|g| g.mean().map(|m| (g.w / w) * (m * m)))
            .sum())
    }

    /// `L̄_ℓ(A, I) = E[(m − E[m | x ∈ A, x_I])² | x ∈ A]`.
    pub fn lbar_leaf(&self, cell: &Cell, dirs: &[usize]) -> Result<f64> {
        let (r, w) = self.positive_restriction(cell)?;
        let keys = self.key_positions(dirs)?;
        let groups = self.groups(&r, &keys);
        Ok(self.within(&r, &keys, &groups) / w)
    }

    /// `V̄(P) = Σ_A Pr(A) E[m | A]²`.
    pub fn vbar_partition(&self, partition: &Partition) -> Result<f64> {
        let mut total = 0.0;
        for cell in partition.cells() {
            let m = self.cond_moments(cell)?;
            if let Some(mean) = m.mean {
                total += m.prob * mean * mean;
            }
        }
        Ok(total)
    }

    /// `L̄(P) = Σ_A Pr(A) L̄_ℓ(A)`.
    pub fn lbar_partition(&self, partition: &Partition) -> Result<f64> {
        let mut total = 0.0;
        for cell in partition.cells() {
            let r = self.restrict(cell)?;
            if r.outside == 0.0 {
                continue;
            }
            let groups = self.groups(&r, &[]);
            total += r.outside * self.within(&r, &[], &groups);
        }
        Ok(total)
    }

    /// `Δ_m(A)`: squared range of `m` over positive-mass points of the cell
    /// (0 for a zero-mass cell).
    pub fn value_diameter(&self, cell: &Cell) -> Result<f64> {
        let r = self.restrict(cell)?;
        if r.outside == 0.0 {
            return Ok(0.0);
        }
        let g = self.groups(&r, &[])[0];
        Ok(if g.w > 0.0 {
            (g.hi - g.lo) * (g.hi - g.lo)
        } else {
            0.0
        })
    }

    /// `max_A Pr(A) Δ_m(A)`.
    pub fn partition_value_diameter(&self, partition: &Partition) -> Result<f64> {
        let mut best = 0.0f64;
        for cell in partition.cells() {
            best = best.max(self.mass(cell)? * self.value_diameter(cell)?);
        }
        Ok(best)
    }

    /// `E_x[Δ_m(P(x))] = Σ_A Pr(A) Δ_m(A)`.
    pub fn expected_value_diameter(&self, partition: &Partition) -> Result<f64> {
        let mut total = 0.0;
        for cell in partition.cells() {
            total += self.mass(cell)? * self.value_diameter(cell)?;
        }
        Ok(total)
    }

    /// Exact `E_x[(m(x) − v_{P(x)})²]` for a piecewise-constant estimator.
    ///
    /// Computed as `Σ_A Pr(A) [L̄_ℓ(A) + (E[m|A] − v_A)²]`. Zero-mass cells
    /// may carry `None`.
    pub fn estimator_population_mse(
        &self,
        partition: &Partition,
        values: &[Option<f64>],
    ) -> Result<f64> {
        if values.len() != partition.len() {
            return Err(Error::DimensionMismatch {
                expected: partition.len(),
                actual: values.len(),
            });
        }
        let mut total = 0.0;
        for (cell, v) in partition.cells().iter().zip(values) {
            let r = self.restrict(cell)?;
            if r.outside == 0.0 {
                continue;
            }
            let groups = self.groups(&r, &[]);
            let g = groups[0];
            let Some(mean) = g.mean() else { continue };
            let v = v.ok_or_else(|| {
                Error::InvalidPartition("positive-mass cell has no leaf value".into())
            })?;
            let bias = mean - v;
            total += r.outside * (self.within(&r, &[], &groups) + g.w * bias * bias);
        }
        Ok(total)
    }

    /// Visits every positive-probability assignment of the core together with
    /// the `extra` coordinates, as `(point, probability, m(point))`.
    /// Coordinates outside core and `extra` are left at 0 in `point`; any
    /// function depending only on the visited coordinates can be averaged
    /// exactly this way.
    pub fn for_each_point(
        &self,
        extra: &[usize],
        mut visit: impl FnMut(&[u64], f64, f64),
    ) -> Result<()> {
        let mut outer: Vec<usize> = Vec::new();
        for &c in extra {
            self.check_coord(c)?;
            if !self.is_core(c) && !outer.contains(&c) {
                outer.push(c);
            }
        }
        let bits = self.core.len() + outer.len();
        if bits > POINT_CAP {
            return Err(Error::CapExceeded {
                what: "enumerated coordinates",
                needed: bits,
                cap: POINT_CAP,
            });
        }
        let p: Vec<f64> = outer.iter().map(|&c| self.dist.p_one(c)).collect();
        let mut words = vec![0u64; words_for(self.dim())];
        for (z, (&w, &m)) in self.weight.iter().zip(&self.value).enumerate() {
            if w <= 0.0 {
                continue;
            }
            for (k, &c) in self.core.iter().enumerate() {
                set_bit(&mut words, c, (z >> k) & 1 == 1);
            }
            for u in 0..1usize << outer.len() {
                let mut prob = w;
                for (k, &c) in outer.iter().enumerate() {
                    let one = (u >> k) & 1 == 1;
                    set_bit(&mut words, c, one);
                    prob *= if one { p[k] } else { 1.0 - p[k] };
                }
                if prob > 0.0 {
                    visit(&words, prob, m);
                }
            }
        }
        Ok(())
    }

    /// `E[m | x_S]` as a lookup table over the core coordinates of `S`.
    pub fn conditional_mean(&self, splits: &SplitSet) -> Result<ConditionalMean> {
        let keys = self.key_positions(splits.coords())?;
        let groups = self.groups(&self.root_restriction(), &keys);
        Ok(ConditionalMean {
            coords: keys.iter().map(|&k| self.core[k as usize]).collect(),
            table: groups.iter().map(Group::mean).collect(),
        })
    }
}

#[inline]
fn key_of(z: usize, keys: &[u32]) -> usize {
    keys.iter()
        .enumerate()
        .fold(0, |acc, (k, &pos)| acc | (((z >> pos) & 1) << k))
}

/// `x ↦ E[m(w) | w_S = x_S]`, stored over the coordinates of `S` that matter.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionalMean {
    coords: Vec<usize>,
    table: Vec<Option<f64>>,
}

impl ConditionalMean {
    /// `None` when `x_S` has zero probability.
    pub fn eval(&self, words: &[u64]) -> Option<f64> {
        let key = self.coords.iter().enumerate().fold(0usize, |acc, (k, &c)| {
            acc | (usize::from(get_bit(words, c)) << k)
        });
        self.table[key]
    }
}
