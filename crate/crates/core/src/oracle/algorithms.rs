use super::{Cell, ConditionalMean, Partition, PopulationProblem, SplitSet};
use crate::seed::SeedSpec;
use crate::select::argmax_random;
use crate::{Error, Result};

/// Greedy level-split selection on the population criterion, one level per
/// step.
///
/// Coordinates outside `R ∪ K` are independent of the target, so adding any
/// of them leaves `V̄` unchanged; they share the value `V̄(S)`, computed once
/// per level.
pub struct LevelSplitSearch<'a> {
    problem: &'a PopulationProblem,
    splits: SplitSet,
    seed: SeedSpec,
}

impl<'a> LevelSplitSearch<'a> {
    pub fn new(problem: &'a PopulationProblem, tie_seed: SeedSpec) -> Self {
        Self {
            problem,
            splits: SplitSet::empty(),
            seed: tie_seed,
        }
    }

    pub fn splits(&self) -> &SplitSet {
        &self.splits
    }

    /// Chooses the next coordinate, or `None` once every coordinate is used.
    pub fn step(&mut self) -> Result<Option<usize>> {
        let d = self.problem.dim();
        let candidates: Vec<usize> = (0..d).filter(|&i| !self.splits.contains(i)).collect();
        if candidates.is_empty() {
            return Ok(None);
        }
        let mut shared = None;
        let mut values = Vec::with_capacity(candidates.len());
        for &i in &candidates {
            let v = if self.problem.is_core(i) {
                self.problem.vbar(&self.splits.with(i)?)?
            } else {
                match shared {
                    Some(v) => v,
                    None => *shared.insert(self.problem.vbar(&self.splits)?),
                }
            };
            values.push(v);
        }
        let mut rng = self.seed.rng("population-level", self.splits.len() as u64);
        let pick = candidates[argmax_random(&values, &mut rng).expect("candidates are nonempty")];
        self.splits.push(pick)?;
        Ok(Some(pick))
    }
}

impl Iterator for LevelSplitSearch<'_> {
    type Item = Result<usize>;

    fn next(&mut self) -> Option<Self::Item> {
        self.step().transpose()
    }
}

#[derive(Clone, Debug)]
pub struct LevelSplitOutcome {
    pub splits: SplitSet,
    pub partition: Partition,
    pub estimator: ConditionalMean,
}

/// Population level-split tree with `log_t` levels.
pub fn population_level_split(
    problem: &PopulationProblem,
    log_t: usize,
    tie_seed: SeedSpec,
) -> Result<LevelSplitOutcome> {
    let d = problem.dim();
    if log_t > d {
        return Err(Error::InvalidConfig(format!(
            "level budget {log_t} exceeds dimension {d}"
        )));
    }
    if log_t > super::MAX_GRID_BITS {
        return Err(Error::CapExceeded {
            what: "grid partition",
            needed: log_t,
            cap: super::MAX_GRID_BITS,
        });
    }
    let mut search = LevelSplitSearch::new(problem, tie_seed);
    for _ in 0..log_t {
        search.step()?;
    }
    let splits = search.splits;
    Ok(LevelSplitOutcome {
        partition: Partition::grid(d, &splits)?,
        estimator: problem.conditional_mean(&splits)?,
        splits,
    })
}

/// A partition with one value per cell; `None` marks zero-mass cells.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseConstant {
    pub partition: Partition,
    pub values: Vec<Option<f64>>,
}

impl PiecewiseConstant {
    pub fn eval(&self, words: &[u64]) -> Option<f64> {
        self.values[self.partition.locate(words)]
    }
}

pub type BreimanOutcome = PiecewiseConstant;

/// Population per-cell greedy tree with at most `t` leaves.
///
/// Cells are processed breadth first. Every cell with a free coordinate is
/// split on the maximizer of `V̄_ℓ(A, i)`; a zero-mass cell has no defined
/// criterion and is split on a uniformly random free coordinate. Leaf values
/// are `E[m | A]`.
pub fn population_breiman(
    problem: &PopulationProblem,
    t: usize,
    tie_seed: SeedSpec,
) -> Result<BreimanOutcome> {
    if t == 0 {
        return Err(Error::InvalidConfig(
            "node budget must be at least 1".into(),
        ));
    }
    let d = problem.dim();
    let mut level = vec![Cell::root(d)];
    let mut leaves = 1usize;
    let mut splits_done = 0u64;
    loop {
        let mut next = Vec::with_capacity(level.len() * 2);
        let mut progressed = false;
        let mut cells = level.into_iter();
        while let Some(cell) = cells.next() {
            if leaves >= t {
                next.push(cell);
                next.extend(cells.by_ref());
                break;
            }
            let free: Vec<usize> = (0..d).filter(|&i| !cell.is_fixed(i)).collect();
            if free.is_empty() {
                next.push(cell);
                continue;
            }
            let values = if problem.mass(&cell)? > 0.0 {
                let base = problem.vbar_leaf(&cell, &[])?;
                free.iter()
                    .map(|&i| {
                        if problem.is_core(i) {
                            problem.vbar_leaf(&cell, &[i])
                        } else {
                            Ok(base)
                        }
                    })
                    .collect::<Result<Vec<_>>>()?
            } else {
                vec![0.0; free.len()]
            };
            let mut rng = tie_seed.rng("population-breiman", splits_done);
            let coord = free[argmax_random(&values, &mut rng).expect("free is nonempty")];
            let [a0, a1] = cell.split(coord)?;
            next.push(a0);
            next.push(a1);
            leaves += 1;
            splits_done += 1;
            progressed = true;
        }
        level = next;
        if leaves >= t || !progressed {
            break;
        }
    }
    let values = level
        .iter()
        .map(|c| problem.cond_moments(c).map(|m| m.mean))
        .collect::<Result<Vec<_>>>()?;
    Ok(PiecewiseConstant {
        partition: Partition::from_cells_unchecked(d, level),
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitVector;
    use crate::data::{FeatureDistribution, SparseTarget};

    fn problem(d: usize, relevant: Vec<usize>, table: Vec<f64>) -> PopulationProblem {
        PopulationProblem::new(
            FeatureDistribution::uniform(d),
            SparseTarget::new(d, relevant, table).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn one_level_recovers_one_sparse_target() {
        let p = problem(3, vec![0], vec![-0.5, 0.5]);
        let out = population_level_split(&p, 1, SeedSpec::new(0)).unwrap();
        assert_eq!(out.splits.coords(), &[0]);
        for idx in 0..8 {
            let x = BitVector::from_index(3, idx);
            assert_eq!(
                out.estimator.eval(x.words()),
                Some(p.target().eval(&x).unwrap())
            );
        }
        assert!(population_level_split(&p, 4, SeedSpec::new(0)).is_err());
    }

    #[test]
    fn xor_first_pick_is_uniform() {
        let d = 8;
        let p = problem(d, vec![0, 1], vec![-0.25, 0.25, 0.25, -0.25]);
        let draws = 4000;
        let mut hits = vec![0u32; d];
        for k in 0..draws {
            let mut search = LevelSplitSearch::new(&p, SeedSpec::new(k));
            hits[search.step().unwrap().unwrap()] += 1;
        }
        let expect = draws as f64 / d as f64;
        let sd = (draws as f64 * (1.0 / d as f64) * (1.0 - 1.0 / d as f64)).sqrt();
        for h in hits {
            assert!((f64::from(h) - expect).abs() < 4.0 * sd, "{h}");
        }
    }

    #[test]
    fn breiman_examples() {
        let p = problem(3, vec![0], vec![-0.5, 0.5]);
        let out = population_breiman(&p, 2, SeedSpec::new(0)).unwrap();
        assert_eq!(out.partition.len(), 2);
        assert_eq!(out.partition.cells()[0].constraints(), &[(0, false)]);
        assert_eq!(out.values, vec![Some(-0.5), Some(0.5)]);
        let trivial = population_breiman(&p, 1, SeedSpec::new(0)).unwrap();
        assert_eq!(trivial.values, vec![Some(0.0)]);
        assert!(Partition::new(3, out.partition.cells().to_vec()).is_ok());
    }

    #[test]
    fn breiman_stops_when_space_is_exhausted() {
        let p = problem(2, vec![0], vec![-0.5, 0.5]);
        let out = population_breiman(&p, 100, SeedSpec::new(0)).unwrap();
        assert_eq!(out.partition.len(), 4);
    }
}
