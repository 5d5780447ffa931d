use crate::bits::get_bit;
use crate::{Error, Result};

/// Largest grid partition materialized from a split set.
pub const MAX_GRID_BITS: usize = 20;

/// Subcube of `{0,1}^d`: a set of coordinates with fixed bits.
///
/// Constraints are kept sorted by coordinate, so equal cells compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    d: usize,
    constraints: Vec<(usize, bool)>,
}

impl Cell {
    pub fn root(d: usize) -> Self {
        Self {
            d,
            constraints: Vec::new(),
        }
    }

    pub fn new(d: usize, constraints: impl IntoIterator<Item = (usize, bool)>) -> Result<Self> {
        let mut constraints: Vec<(usize, bool)> = constraints.into_iter().collect();
        constraints.sort_unstable_by_key(|&(c, _)| c);
        for w in constraints.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidPartition(format!(
                    "coordinate {} constrained twice",
                    w[0].0 + 1
                )));
            }
        }
        if let Some(&(c, _)) = constraints.last() {
            if c >= d {
                return Err(Error::InvalidPartition(format!(
                    "coordinate {} outside dimension {d}",
                    c + 1
                )));
            }
        }
        Ok(Self { d, constraints })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn constraints(&self) -> &[(usize, bool)] {
        &self.constraints
    }

    pub fn depth(&self) -> usize {
        self.constraints.len()
    }

    pub fn get(&self, coord: usize) -> Option<bool> {
        self.constraints
            .binary_search_by_key(&coord, |&(c, _)| c)
            .ok()
            .map(|k| self.constraints[k].1)
    }

    pub fn is_fixed(&self, coord: usize) -> bool {
        self.get(coord).is_some()
    }

    /// The subcell `A ∩ {x_coord = bit}`.
    pub fn with(&self, coord: usize, bit: bool) -> Result<Cell> {
        if coord >= self.d {
            return Err(Error::InvalidPartition(format!(
                "coordinate {} outside dimension {}",
                coord + 1,
                self.d
            )));
        }
        match self.constraints.binary_search_by_key(&coord, |&(c, _)| c) {
            Ok(_) => Err(Error::InvalidPartition(format!(
                "coordinate {} already fixed",
                coord + 1
            ))),
            Err(pos) => {
                let mut constraints = self.constraints.clone();
                constraints.insert(pos, (coord, bit));
                Ok(Cell {
                    d: self.d,
                    constraints,
                })
            }
        }
    }

    /// The two subcells obtained by cutting on `coord`.
    pub fn split(&self, coord: usize) -> Result<[Cell; 2]> {
        Ok([self.with(coord, false)?, self.with(coord, true)?])
    }

    pub fn contains(&self, words: &[u64]) -> bool {
        self.constraints
            .iter()
            .all(|&(c, b)| get_bit(words, c) == b)
    }

    /// True when `other ⊆ self`.
    pub fn contains_cell(&self, other: &Cell) -> bool {
        self.constraints
            .iter()
            .all(|&(c, b)| other.get(c) == Some(b))
    }
}

/// An ordered list of distinct split coordinates.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SplitSet(Vec<usize>);

impl SplitSet {
    pub fn new(coords: Vec<usize>) -> Result<Self> {
        let mut sorted = coords.clone();
        sorted.sort_unstable();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidPartition(format!(
                "coordinate {} repeated in split set",
                w[0] + 1
            )));
        }
        Ok(Self(coords))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn coords(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, coord: usize) -> bool {
        self.0.contains(&coord)
    }

    pub fn push(&mut self, coord: usize) -> Result<()> {
        if self.contains(coord) {
            return Err(Error::InvalidPartition(format!(
                "coordinate {} repeated in split set",
                coord + 1
            )));
        }
        self.0.push(coord);
        Ok(())
    }

    pub fn with(&self, coord: usize) -> Result<Self> {
        let mut s = self.clone();
        s.push(coord)?;
        Ok(s)
    }
}

/// Finite family of pairwise disjoint cells covering `{0,1}^d`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    d: usize,
    cells: Vec<Cell>,
}

impl Partition {
    pub fn new(d: usize, cells: Vec<Cell>) -> Result<Self> {
        if let Some(c) = cells.iter().find(|c| c.dim() != d) {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: c.dim(),
            });
        }
        let refs: Vec<&Cell> = cells.iter().collect();
        check_cover(&refs, &mut Vec::new())?;
        Ok(Self { d, cells })
    }

    pub fn trivial(d: usize) -> Self {
        Self {
            d,
            cells: vec![Cell::root(d)],
        }
    }

    /// All `2^|S|` cells fixing the coordinates of `splits`, in little-endian
    /// order of the split bits.
    pub fn grid(d: usize, splits: &SplitSet) -> Result<Self> {
        if splits.len() > MAX_GRID_BITS {
            return Err(Error::CapExceeded {
                what: "grid partition",
                needed: splits.len(),
                cap: MAX_GRID_BITS,
            });
        }
        if let Some(&c) = splits.coords().iter().find(|&&c| c >= d) {
            return Err(Error::InvalidPartition(format!(
                "coordinate {} outside dimension {d}",
                c + 1
            )));
        }
        let cells = (0..1usize << splits.len())
            .map(|key| {
                let constraints = splits
                    .coords()
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| (c, (key >> k) & 1 == 1));
                Cell::new(d, constraints)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { d, cells })
    }

    pub(crate) fn from_cells_unchecked(d: usize, cells: Vec<Cell>) -> Self {
        debug_assert!(Partition::new(d, cells.clone()).is_ok());
        Self { d, cells }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Index of the cell containing the packed point.
    pub fn locate(&self, words: &[u64]) -> usize {
        self.cells
            .iter()
            .position(|c| c.contains(words))
            .expect("a partition covers every point")
    }

    /// The split operator: replace cell `index` by its two subcells on `coord`.
    pub fn split_cell(&self, index: usize, coord: usize) -> Result<Partition> {
        let cell = self
            .cells
            .get(index)
            .ok_or_else(|| Error::InvalidPartition(format!("no cell with index {index}")))?;
        let [a0, a1] = cell.split(coord)?;
        let mut cells = self.cells.clone();
        cells[index] = a0;
        cells.insert(index + 1, a1);
        Ok(Partition { d: self.d, cells })
    }

    /// True when every cell of `self` lies inside some cell of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        self.d == coarser.d
            && self
                .cells
                .iter()
                .all(|a| coarser.cells.iter().any(|b| b.contains_cell(a)))
    }
}

/// Checks that `cells`, all consistent with the assignment `fixed`, tile the
/// region `fixed` exactly once.
fn check_cover(cells: &[&Cell], fixed: &mut Vec<(usize, bool)>) -> Result<()> {
    let free = |c: &&Cell| {
        c.constraints()
            .iter()
            .find(|(coord, _)| !fixed.iter().any(|(f, _)| f == coord))
            .map(|&(coord, _)| coord)
    };
    if cells.is_empty() {
        return Err(Error::InvalidPartition(format!(
            "region {} is not covered",
            describe(fixed)
        )));
    }
    let next = match cells.iter().find_map(free) {
        Some(c) => c,
        None => {
            return if cells.len() == 1 {
                Ok(())
            } else {
                Err(Error::InvalidPartition(format!(
                    "cells overlap on region {}",
                    describe(fixed)
                )))
            }
        }
    };
    if cells.iter().any(|c| free(c).is_none()) {
        return Err(Error::InvalidPartition(format!(
            "cells overlap on region {}",
            describe(fixed)
        )));
    }
    for bit in [false, true] {
        let side: Vec<&Cell> = cells
            .iter()
            .copied()
            .filter(|c| c.get(next) != Some(!bit))
            .collect();
        fixed.push((next, bit));
        let res = check_cover(&side, fixed);
        fixed.pop();
        res?;
    }
    Ok(())
}

fn describe(fixed: &[(usize, bool)]) -> String {
    if fixed.is_empty() {
        return "{whole space}".into();
    }
    let parts: Vec<String> = fixed
        .iter()
        .map(|&(c, b)| format!("x_{}={}", c + 1, u8::from(b)))
        .collect();
    format!("{{{}}}", parts.join(", "))
}
