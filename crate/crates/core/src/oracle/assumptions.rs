//! Searches for the constants of the structural assumptions.
//!
//! Every search runs over a finite universe `U = R ∪ K ∪ {j₀}` where `j₀` is
//! the smallest coordinate outside `R ∪ K`. All coordinates outside `R ∪ K`
//! are independent of the target and of each other's effect on it, so one
//! representative covers them.

use std::collections::HashMap;

use super::{Cell, PopulationProblem, SplitSet};
use crate::select::GAIN_TOLERANCE;
use crate::{Error, Result};

const MAX_SUBMODULAR_UNIVERSE: usize = 12;
const MAX_CELL_PAIR_WORK: u64 = 4_000_000;
const MAX_PARTITION_UNIVERSE: usize = 8;
const MAX_DENSITY_WORK: u64 = 1 << 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SparsityVariant {
    /// Margin on split sets.
    SplitSet,
    /// Margin on every cell.
    Partition,
}

fn universe(problem: &PopulationProblem) -> Vec<usize> {
    let mut u = problem.core().to_vec();
    if let Some(j) = (0..problem.dim()).find(|&j| !problem.is_core(j)) {
        u.push(j);
    }
    u
}

fn coords_of(u: &[usize], mask: usize) -> Vec<usize> {
    (0..u.len())
        .filter(|k| (mask >> k) & 1 == 1)
        .map(|k| u[k])
        .collect()
}

fn gain_threshold(eta: f64) -> f64 {
    eta.max(GAIN_TOLERANCE)
}

/// `{i : V̄(S ∪ {i}) − V̄(S) > η}`, sorted. Gains within rounding of zero
/// count as zero.
pub fn relevant_set(
    problem: &PopulationProblem,
    splits: &SplitSet,
    eta: f64,
) -> Result<Vec<usize>> {
    let base = problem.vbar(splits)?;
    let thr = gain_threshold(eta);
    let mut out = Vec::new();
    for &i in problem.core() {
        if !splits.contains(i) && problem.vbar(&splits.with(i)?)? - base > thr {
            out.push(i);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// `{i : V̄_ℓ(A, i) − V̄_ℓ(A) > η}`, sorted. Fails on a zero-mass cell.
pub fn leaf_relevant_set(problem: &PopulationProblem, cell: &Cell, eta: f64) -> Result<Vec<usize>> {
    let base = problem.vbar_leaf(cell, &[])?;
    let thr = gain_threshold(eta);
    let mut out = Vec::new();
    for &i in problem.core() {
        if !cell.is_fixed(i) && problem.vbar_leaf(cell, &[i])? - base > thr {
            out.push(i);
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Running maximum of `lhs / rhs` over comparisons, starting at 1.
struct RatioBound {
    value: f64,
}

impl RatioBound {
    fn new() -> Self {
        Self { value: 1.0 }
    }

    /// Returns false once the bound is infinite.
    fn update(&mut self, lhs: f64, rhs: f64) -> bool {
        if lhs > GAIN_TOLERANCE {
            if rhs <= GAIN_TOLERANCE {
                self.value = f64::INFINITY;
                return false;
            }
            self.value = self.value.max(lhs / rhs);
        }
        true
    }
}

/// Smallest `C ≥ 1` with `V̄(T ∪ {i}) − V̄(T) ≤ C (V̄(S ∪ {i}) − V̄(S))` over
/// `S ⊆ T ⊆ U`, `|T| ≤ scope`, `i ∈ U`. Infinite when some right-hand side
/// vanishes while its left-hand side is positive.
pub fn submodularity_constant(problem: &PopulationProblem, scope: usize) -> Result<f64> {
    let r = problem.target().relevant().len();
    if scope > 2 * r {
        return Err(Error::InvalidConfig(format!(
            "search scope {scope} exceeds twice the sparsity {r}"
        )));
    }
    let u = universe(problem);
    if u.len() > MAX_SUBMODULAR_UNIVERSE {
        return Err(Error::CapExceeded {
            what: "submodularity search universe",
            needed: u.len(),
            cap: MAX_SUBMODULAR_UNIVERSE,
        });
    }
    let mut memo: HashMap<usize, f64> = HashMap::new();
    let mut v = |mask: usize| -> Result<f64> {
        if let Some(&x) = memo.get(&mask) {
            return Ok(x);
        }
        let x = problem.vbar(&SplitSet::new(coords_of(&u, mask))?)?;
        memo.insert(mask, x);
        Ok(x)
    };
    let mut bound = RatioBound::new();
    for t in 0..1usize << u.len() {
        if t.count_ones() as usize > scope {
            continue;
        }
        let mut s = t;
        loop {
            for i in (0..u.len()).filter(|i| (t >> i) & 1 == 0) {
                let bit = 1 << i;
                let lhs = v(t | bit)? - v(t)?;
                let rhs = v(s | bit)? - v(s)?;
                if !bound.update(lhs, rhs) {
                    return Ok(f64::INFINITY);
                }
            }
            if s == 0 {
                break;
            }
            s = (s - 1) & t;
        }
    }
    Ok(bound.value)
}

/// Cell on the universe: `mask` of fixed positions and their `bits`.
#[derive(Clone, Copy)]
struct UCell {
    mask: usize,
    bits: usize,
}

impl UCell {
    fn to_cell(self, d: usize, u: &[usize]) -> Result<Cell> {
        Cell::new(
            d,
            (0..u.len())
                .filter(|k| (self.mask >> k) & 1 == 1)
                .map(|k| (u[k], (self.bits >> k) & 1 == 1)),
        )
    }
}

/// All `3^|U|` cells on the universe.
fn all_cells(n: usize) -> Vec<UCell> {
    let mut out = vec![UCell { mask: 0, bits: 0 }];
    for k in 0..n {
        let mut next = Vec::with_capacity(out.len() * 3);
        for c in &out {
            next.push(*c);
            next.push(UCell {
                mask: c.mask | 1 << k,
                bits: c.bits,
            });
            next.push(UCell {
                mask: c.mask | 1 << k,
                bits: c.bits | 1 << k,
            });
        }
        out = next;
    }
    out
}

/// `V̄_ℓ(A, T)` for every `T ⊆ U`, indexed by mask; `None` for zero mass.
fn leaf_table(problem: &PopulationProblem, cell: &Cell, u: &[usize]) -> Result<Option<Vec<f64>>> {
    if problem.mass(cell)? <= 0.0 {
        return Ok(None);
    }
    (0..1usize << u.len())
        .map(|t| problem.vbar_leaf(cell, &coords_of(u, t)))
        .collect::<Result<Vec<_>>>()
        .map(Some)
}

/// Smallest `C ≥ 1` with
/// `V̄_ℓ(A', T ∪ {i}) − V̄_ℓ(A', T) ≤ C (V̄_ℓ(A, i) − V̄_ℓ(A))` over nested
/// positive-mass cells `A' ⊆ A` on `U`, `T ⊆ R` with `|T| ≤ scope`, and `i`
/// free in `A`. Equals 1 when no left-hand side is positive.
pub fn diminishing_returns_constant(problem: &PopulationProblem, scope: usize) -> Result<f64> {
    let u = universe(problem);
    let n = u.len();
    let r = problem.target().relevant().len();
    let work = 5u64
        .saturating_pow(n as u32)
        .saturating_mul((1u64 << r) * n as u64);
    if work > MAX_CELL_PAIR_WORK {
        return Err(Error::CapExceeded {
            what: "diminishing-returns search universe",
            needed: n,
            cap: MAX_PARTITION_UNIVERSE,
        });
    }
    let d = problem.dim();
    let cells = all_cells(n);
    let mut tables: HashMap<(usize, usize), Option<Vec<f64>>> = HashMap::new();
    for c in &cells {
        tables.insert(
            (c.mask, c.bits),
            leaf_table(problem, &c.to_cell(d, &u)?, &u)?,
        );
    }
    // Relevant coordinates are the first r entries of the universe.
    let relevant_mask = (1usize << r) - 1;
    let mut bound = RatioBound::new();
    for outer in &cells {
        let Some(outer_v) = &tables[&(outer.mask, outer.bits)] else {
            continue;
        };
        for inner in cells
            .iter()
            .filter(|c| c.mask & outer.mask == outer.mask && c.bits & outer.mask == outer.bits)
        {
            let Some(inner_v) = &tables[&(inner.mask, inner.bits)] else {
                continue;
            };
            for i in (0..n).filter(|i| (outer.mask >> i) & 1 == 0) {
                let bit = 1 << i;
                let rhs = outer_v[bit] - outer_v[0];
                let mut t = relevant_mask;
                loop {
                    if t & bit == 0 && t.count_ones() as usize <= scope {
                        let lhs = inner_v[t | bit] - inner_v[t];
                        if !bound.update(lhs, rhs) {
                            return Ok(f64::INFINITY);
                        }
                    }
                    if t == 0 {
                        break;
                    }
                    t = (t - 1) & relevant_mask;
                }
            }
        }
    }
    Ok(bound.value)
}

/// Largest `β` such that every relevant coordinate's gain beats every
/// irrelevant coordinate's gain by `β`, on split sets or on every cell.
/// `+∞` when the comparison is vacuous; `β ≤ 0` means the assumption fails.
pub fn strong_sparsity_margin(
    problem: &PopulationProblem,
    variant: SparsityVariant,
) -> Result<f64> {
    let u = universe(problem);
    let n = u.len();
    let r = problem.target().relevant().len();
    if r == 0 || r == n {
        return Ok(f64::INFINITY);
    }
    let d = problem.dim();
    let cells = match variant {
        SparsityVariant::SplitSet => {
            if n > MAX_SUBMODULAR_UNIVERSE {
                return Err(Error::CapExceeded {
                    what: "strong-sparsity search universe",
                    needed: n,
                    cap: MAX_SUBMODULAR_UNIVERSE,
                });
            }
            vec![UCell { mask: 0, bits: 0 }]
        }
        SparsityVariant::Partition => {
            if n > MAX_PARTITION_UNIVERSE {
                return Err(Error::CapExceeded {
                    what: "strong-partition-sparsity search universe",
                    needed: n,
                    cap: MAX_PARTITION_UNIVERSE,
                });
            }
            all_cells(n)
        }
    };
    let mut beta = f64::INFINITY;
    for c in cells {
        let table = match variant {
            SparsityVariant::SplitSet => Some(
                (0..1usize << n)
                    .map(|t| problem.vbar(&SplitSet::new(coords_of(&u, t))?))
                    .collect::<Result<Vec<_>>>()?,
            ),
            SparsityVariant::Partition => leaf_table(problem, &c.to_cell(d, &u)?, &u)?,
        };
        let Some(v) = table else { continue };
        for t in 0..1usize << n {
            for i in (0..r).filter(|i| (t >> i) & 1 == 0 && (c.mask >> i) & 1 == 0) {
                let gain_i = v[t | 1 << i] - v[t];
                for j in r..n {
                    let gain_j = v[t | 1 << j] - v[t];
                    beta = beta.min(gain_i - gain_j);
                }
            }
        }
    }
    Ok(beta)
}

/// `ζ = 2^q min Pr(x_Q = w)` over `|Q| = q` inside `R ∪ K` (extended by the
/// most lopsided remaining coordinates when `q > |R ∪ K|`) and all `w`.
pub fn density_lower_bound(problem: &PopulationProblem, q: usize) -> Result<f64> {
    let d = problem.dim();
    if q > d {
        return Err(Error::InvalidConfig(format!(
            "subset size {q} exceeds dimension {d}"
        )));
    }
    if q == 0 {
        return Ok(1.0);
    }
    let dist = problem.distribution();
    let mut family = problem.core().to_vec();
    if q > family.len() {
        let mut rest: Vec<usize> = (0..d).filter(|&j| !problem.is_core(j)).collect();
        let skew = |j: usize| {
            let p = dist.product_params()[j];
            p.min(1.0 - p)
        };
        rest.sort_by(|&a, &b| skew(a).total_cmp(&skew(b)).then(a.cmp(&b)));
        family.extend(rest.into_iter().take(q - family.len()));
    }
    let subsets = binomial(family.len() as u64, q as u64);
    if subsets.saturating_mul(1 << q.min(63)) > MAX_DENSITY_WORK {
        return Err(Error::CapExceeded {
            what: "density lower bound search",
            needed: family.len(),
            cap: 24,
        });
    }
    let mut min = f64::INFINITY;
    let mut chosen: Vec<usize> = (0..q).collect();
    loop {
        let coords: Vec<usize> = chosen.iter().map(|&k| family[k]).collect();
        for w in 0..1usize << q {
            let bits: Vec<bool> = (0..q).map(|k| (w >> k) & 1 == 1).collect();
            min = min.min(dist.marginal_probability(&coords, &bits)?);
        }
        if !next_combination(&mut chosen, family.len()) {
            break;
        }
    }
    Ok(min * (1u64 << q) as f64)
}

fn binomial(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for pos in (0..k).rev() {
        if c[pos] < n - k + pos {
            c[pos] += 1;
            for j in pos + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
