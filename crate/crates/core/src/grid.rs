//! Cellular partitioning of the search space.
//!
//! Each dimension is split into `k` equal intervals. Cells are only
//! materialized while occupied, so a 3^50 lattice costs no more than the
//! particles living in it. Neighbor queries scan the occupied set instead of
//! enumerating lattice offsets.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::space::Bounds;

/// Lattice coordinate of a cell. Ordered lexicographically.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CellCoord(pub Vec<u32>);

impl CellCoord {
    pub fn index(&self) -> &[u32] {
        &self.0
    }

    pub fn chebyshev(&self, other: &CellCoord) -> u32 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap_or(0)
    }

    pub fn manhattan(&self, other: &CellCoord) -> u64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.abs_diff(*b) as u64)
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Moore,
    VonNeumann,
}

impl Topology {
    pub fn is_neighbor(self, a: &CellCoord, b: &CellCoord) -> bool {
        match self {
            Topology::Moore => a.chebyshev(b) == 1,
            Topology::VonNeumann => a.manhattan(b) == 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::Moore => "moore",
            Topology::VonNeumann => "von_neumann",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "moore" => Ok(Topology::Moore),
            "von_neumann" | "vonneumann" => Ok(Topology::VonNeumann),
            other => Err(Error::InvalidInput(format!("unknown topology `{other}`"))),
        }
    }
}

/// Maps `x` to its cell. Points outside the box are clamped first and the
/// upper face belongs to the last cell.
pub fn cell_of(x: &[f64], b: &Bounds, k: usize) -> Result<CellCoord> {
    if k < 1 {
        return Err(Error::InvalidPartitioning(k));
    }
    if x.len() != b.dim() {
        return Err(Error::InvalidInput(format!(
            "point has {} coordinates, bounds have {}",
            x.len(),
            b.dim()
        )));
    }
    Ok(cell_of_unchecked(x, b, k))
}

pub(crate) fn cell_of_unchecked(x: &[f64], b: &Bounds, k: usize) -> CellCoord {
    let last = (k - 1) as u32;
    CellCoord(
        x.iter()
            .enumerate()
            .map(|(i, &v)| {
                let lo = b.lower()[i];
                let w = b.width(i) / k as f64;
                let v = v.clamp(lo, b.upper()[i]);
                let idx = ((v - lo) / w).floor();
                if idx.is_nan() || idx < 0.0 {
                    0
                } else {
                    (idx as u32).min(last)
                }
            })
            .collect(),
    )
}

/// Hyper-rectangle covered by `c`.
pub fn region_of(c: &CellCoord, b: &Bounds, k: usize) -> Result<Bounds> {
    if k < 1 {
        return Err(Error::InvalidPartitioning(k));
    }
    if c.0.len() != b.dim() || c.0.iter().any(|&i| i as usize >= k) {
        return Err(Error::InvalidInput(format!("cell {:?} is not on a {k}-partition", c.0)));
    }
    let mut lower = Vec::with_capacity(b.dim());
    let mut upper = Vec::with_capacity(b.dim());
    for (i, &idx) in c.0.iter().enumerate() {
        let lo = b.lower()[i];
        let w = b.width(i) / k as f64;
        lower.push(lo + idx as f64 * w);
        // the last cell ends exactly on the upper face
        upper.push(if idx as usize == k - 1 {
            b.upper()[i]
        } else {
            lo + (idx as f64 + 1.0) * w
        });
    }
    Bounds::new(lower, upper)
}

/// Which particles live in which occupied cell.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OccupancyIndex {
    cells: BTreeMap<CellCoord, BTreeSet<usize>>,
    location: HashMap<usize, CellCoord>,
}

impl OccupancyIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, particle: usize, cell: CellCoord) {
        self.remove(particle);
        self.cells.entry(cell.clone()).or_default().insert(particle);
        self.location.insert(particle, cell);
    }

    fn remove(&mut self, particle: usize) -> Option<CellCoord> {
        let old = self.location.remove(&particle)?;
        if let Some(set) = self.cells.get_mut(&old) {
            set.remove(&particle);
            if set.is_empty() {
                self.cells.remove(&old);
            }
        }
        Some(old)
    }

    /// Moves `particle` to the cell of `new_position`.
    pub fn reassign(&mut self, particle: usize, new_position: &[f64], b: &Bounds, k: usize) -> Result<()> {
        let target = cell_of(new_position, b, k)?;
        match self.location.get(&particle) {
            None => Err(Error::InvalidInput(format!("particle {particle} is not indexed"))),
            Some(cur) if *cur == target => Ok(()),
            Some(_) => {
                self.insert(particle, target);
                Ok(())
            }
        }
    }

    pub fn cell_of_particle(&self, particle: usize) -> Option<&CellCoord> {
        self.location.get(&particle)
    }

    pub fn members(&self, cell: &CellCoord) -> Option<&BTreeSet<usize>> {
        self.cells.get(cell)
    }

    pub fn is_occupied(&self, cell: &CellCoord) -> bool {
        self.cells.contains_key(cell)
    }

    /// Occupied cells in lexicographic order.
    pub fn occupied(&self) -> impl Iterator<Item = (&CellCoord, &BTreeSet<usize>)> {
        self.cells.iter()
    }

    pub fn occupied_count(&self) -> usize {
        self.cells.len()
    }

    pub fn particle_count(&self) -> usize {
        self.location.len()
    }
}

/// Occupied cells adjacent to `c` under `topology`, sorted lexicographically.
/// Cost is linear in the number of occupied cells. Edges do not wrap.
pub fn neighbor_cells(c: &CellCoord, topology: Topology, occ: &OccupancyIndex) -> Vec<CellCoord> {
    occ.cells
        .keys()
        .filter(|other| topology.is_neighbor(c, other))
        .cloned()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::RandomSource;
    use proptest::prelude::*;

    fn full_occupancy_2d(k: u32) -> OccupancyIndex {
        let mut occ = OccupancyIndex::new();
        let mut id = 0;
        for i in 0..k {
            for j in 0..k {
                occ.insert(id, CellCoord(vec![i, j]));
                id += 1;
            }
        }
        occ
    }

    #[test]
    fn cell_of_examples() {
        let b = Bounds::uniform(5, 0.0, 100.0).unwrap();
        assert_eq!(cell_of(&[0.0; 5], &b, 5).unwrap().0, vec![0; 5]);
        assert_eq!(cell_of(&[50.0; 5], &b, 5).unwrap().0, vec![2; 5]);
        assert_eq!(cell_of(&[100.0; 5], &b, 5).unwrap().0, vec![4; 5]);
        assert!(matches!(cell_of(&[0.0; 5], &b, 0), Err(Error::InvalidPartitioning(0))));
    }

    #[test]
    fn region_examples() {
        let b = Bounds::uniform(2, 0.0, 100.0).unwrap();
        let r = region_of(&CellCoord(vec![0, 0]), &b, 5).unwrap();
        assert_eq!(r.lower(), &[0.0, 0.0]);
        assert_eq!(r.upper(), &[20.0, 20.0]);
        let whole = region_of(&CellCoord(vec![0, 0]), &b, 1).unwrap();
        assert_eq!(whole, b);
        assert!(region_of(&CellCoord(vec![5, 0]), &b, 5).is_err());
    }

    #[test]
    fn interior_neighborhoods_2d() {
        let occ = full_occupancy_2d(5);
        let c = CellCoord(vec![2, 2]);
        assert_eq!(neighbor_cells(&c, Topology::Moore, &occ).len(), 8);
        let vn = neighbor_cells(&c, Topology::VonNeumann, &occ);
        assert_eq!(
            vn,
            vec![
                CellCoord(vec![1, 2]),
                CellCoord(vec![2, 1]),
                CellCoord(vec![2, 3]),
                CellCoord(vec![3, 2])
            ]
        );
    }

    #[test]
    fn corner_does_not_wrap() {
        let occ = full_occupancy_2d(5);
        let c = CellCoord(vec![0, 0]);
        assert_eq!(neighbor_cells(&c, Topology::Moore, &occ).len(), 3);
        assert_eq!(neighbor_cells(&c, Topology::VonNeumann, &occ).len(), 2);
    }

    #[test]
    fn unoccupied_cells_are_not_neighbors() {
        let mut occ = OccupancyIndex::new();
        occ.insert(0, CellCoord(vec![1, 1]));
        occ.insert(1, CellCoord(vec![3, 3]));
        assert!(neighbor_cells(&CellCoord(vec![1, 1]), Topology::Moore, &occ).is_empty());
    }

    #[test]
    fn reassign_moves_and_prunes() {
        let b = Bounds::uniform(2, 0.0, 100.0).unwrap();
        let mut occ = OccupancyIndex::new();
        occ.insert(7, cell_of(&[10.0, 10.0], &b, 5).unwrap());
        let before = occ.clone();
        occ.reassign(7, &[15.0, 12.0], &b, 5).unwrap();
        assert_eq!(occ, before);

        occ.reassign(7, &[25.0, 12.0], &b, 5).unwrap();
        assert!(!occ.is_occupied(&CellCoord(vec![0, 0])));
        assert_eq!(occ.cell_of_particle(7), Some(&CellCoord(vec![1, 0])));
        assert_eq!(occ.occupied_count(), 1);

        assert!(matches!(occ.reassign(99, &[1.0, 1.0], &b, 5), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn tiling_random_points() {
        let b = Bounds::new(vec![-5.0, 0.0, 10.0], vec![5.0, 100.0, 10.5]).unwrap();
        let mut src = RandomSource::new(99);
        for i in 0..10_000 {
            let k = 1 + i % 7;
            let x: Vec<f64> = (0..3).map(|d| src.uniform_in(b.lower()[d], b.upper()[d])).collect();
            let c = cell_of(&x, &b, k).unwrap();
            assert!(region_of(&c, &b, k).unwrap().contains(&x), "{x:?} not in its cell");
        }
    }

    #[test]
    fn sparse_in_high_dimension() {
        let b = Bounds::uniform(50, -100.0, 100.0).unwrap();
        let mut src = RandomSource::new(5);
        let mut occ = OccupancyIndex::new();
        for id in 0..40 {
            let x: Vec<f64> = (0..50).map(|_| src.uniform_in(-100.0, 100.0)).collect();
            occ.insert(id, cell_of(&x, &b, 3).unwrap());
        }
        assert!(occ.occupied_count() <= 40);
        assert_eq!(occ.particle_count(), 40);
    }

    proptest! {
        #[test]
        fn neighborhood_symmetry_and_inclusion(
            cells in proptest::collection::vec(proptest::collection::vec(0u32..4, 3), 1..30)
        ) {
            let mut occ = OccupancyIndex::new();
            for (id, c) in cells.iter().enumerate() {
                occ.insert(id, CellCoord(c.clone()));
            }
            let occupied: Vec<CellCoord> = occ.occupied().map(|(c, _)| c.clone()).collect();
            for a in &occupied {
                let moore = neighbor_cells(a, Topology::Moore, &occ);
                let vn = neighbor_cells(a, Topology::VonNeumann, &occ);
                prop_assert!(vn.iter().all(|c| moore.contains(c)));
                for b in &moore {
                    prop_assert!(neighbor_cells(b, Topology::Moore, &occ).contains(a));
                }
                for b in &vn {
                    prop_assert!(neighbor_cells(b, Topology::VonNeumann, &occ).contains(a));
                }
                let mut sorted = moore.clone();
                sorted.sort();
                prop_assert_eq!(sorted, moore);
            }
        }
    }
}
