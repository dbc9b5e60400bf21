use rand::Rng;

use super::{ExponentBounds, MediumRealization, Provenance, TorusGrid};
use crate::rng::{self, Purpose};
use crate::{Error, Result};

/// Union-find on a periodic `side × side` lattice that tracks, for each
/// element, its displacement to the root. Joining two elements already in
/// the same set along a path with nonzero net displacement means the
/// cluster winds around the torus.
#[derive(Debug, Clone)]
pub struct WrappingUnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
    // displacement from the element to its parent, in lattice steps
    shift: Vec<[i64; 2]>,
    wraps: Vec<[bool; 2]>,
}

impl WrappingUnionFind {
    pub fn new(len: usize) -> Self {
        WrappingUnionFind {
            parent: (0..len).collect(),
            rank: vec![0; len],
            shift: vec![[0, 0]; len],
            wraps: vec![[false, false]; len],
        }
    }

    /// Root of `x` and the displacement from `x` to that root.
    pub fn find(&mut self, x: usize) -> (usize, [i64; 2]) {
        let p = self.parent[x];
        if p == x {
            return (x, [0, 0]);
        }
        let (root, up) = self.find(p);
        let s = self.shift[x];
        let total = [s[0] + up[0], s[1] + up[1]];
        self.parent[x] = root;
        self.shift[x] = total;
        (root, total)
    }

    /// Joins `x` with its neighbour `y = x + step`.
    pub fn union(&mut self, x: usize, y: usize, step: [i64; 2]) {
        let (rx, dx) = self.find(x);
        let (ry, dy) = self.find(y);
        // position(y) - position(x) = step along the chosen edge
        // root offsets: pos(rx) = pos(x) + dx, pos(ry) = pos(y) + dy
        if rx == ry {
            // going x -> y -> root must agree with x -> root
            let loop_disp = [step[0] + dy[0] - dx[0], step[1] + dy[1] - dx[1]];
            for a in 0..2 {
                if loop_disp[a] != 0 {
                    self.wraps[rx][a] = true;
                }
            }
            return;
        }
        // displacement from ry to rx: pos(rx) - pos(ry) = dx - step - dy
        let ry_to_rx = [dx[0] - step[0] - dy[0], dx[1] - step[1] - dy[1]];
        let (child, root, c2r) = if self.rank[rx] >= self.rank[ry] {
            (ry, rx, ry_to_rx)
        } else {
            (rx, ry, [-ry_to_rx[0], -ry_to_rx[1]])
        };
        self.parent[child] = root;
        self.shift[child] = c2r;
        if self.rank[root] == self.rank[child] {
            self.rank[root] += 1;
        }
        let w = self.wraps[child];
        for a in 0..2 {
            self.wraps[root][a] |= w[a];
        }
    }

    pub fn wraps(&mut self, x: usize) -> [bool; 2] {
        let (r, _) = self.find(x);
        self.wraps[r]
    }
}

/// Occupied clusters of one lattice configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    /// `label[j]` = cluster root of occupied lattice cell `j`, `None` if empty.
    pub label: Vec<Option<usize>>,
    /// `(root, size, wraps)` per cluster, sorted by root.
    pub clusters: Vec<(usize, usize, [bool; 2])>,
}

impl ClusterSummary {
    /// Labels nearest-neighbour occupied clusters on a periodic lattice.
    pub fn label(occupied: &[bool], side: usize) -> Self {
        assert_eq!(occupied.len(), side * side);
        let mut uf = WrappingUnionFind::new(side * side);
        let at = |i: usize, j: usize| (i % side) * side + (j % side);
        for i in 0..side {
            for j in 0..side {
                let x = at(i, j);
                if !occupied[x] {
                    continue;
                }
                let right = at(i + 1, j);
                if occupied[right] {
                    uf.union(x, right, [1, 0]);
                }
                let up = at(i, j + 1);
                if occupied[up] {
                    uf.union(x, up, [0, 1]);
                }
            }
        }
        let mut label = vec![None; side * side];
        let mut sizes = std::collections::BTreeMap::new();
        for x in 0..side * side {
            if occupied[x] {
                let (r, _) = uf.find(x);
                label[x] = Some(r);
                *sizes.entry(r).or_insert(0usize) += 1;
            }
        }
        let clusters = sizes.into_iter().map(|(r, s)| (r, s, uf.wraps(r))).collect();
        ClusterSummary { label, clusters }
    }

    pub fn wrapping(&self) -> impl Iterator<Item = &(usize, usize, [bool; 2])> {
        self.clusters.iter().filter(|c| c.2[0] || c.2[1])
    }

    /// Root of the largest wrapping cluster (lowest root on size ties).
    pub fn largest_wrapping(&self) -> Option<usize> {
        self.wrapping()
            .fold(None, |best: Option<(usize, usize)>, &(r, s, _)| match best {
                Some((_, bs)) if bs >= s => best,
                _ => Some((r, s)),
            })
            .map(|(r, _)| r)
    }
}

/// Site percolation on the unit lattice `Q_j = [0,1)² + j` of a torus of
/// integer side: `a = 1 + ζ_j`, `p = α + (β - α) 1_C` where `C` is the
/// largest occupied cluster that wraps the torus (empty if none wraps).
pub fn bernoulli_percolation_medium(
    grid: TorusGrid,
    q: f64,
    alpha: f64,
    beta: f64,
    seed: u64,
) -> Result<MediumRealization> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidInput(format!(
            "occupation probability {q} outside [0, 1]"
        )));
    }
    let bounds = ExponentBounds::new(alpha, beta)?;
    let side = grid.side.round() as usize;
    if (grid.side - side as f64).abs() > 1e-12 || side == 0 || grid.cells % side != 0 {
        return Err(Error::InvalidInput(format!(
            "percolation needs an integer torus side dividing the cell count, got side {} with {} cells",
            grid.side, grid.cells
        )));
    }
    let mut r = rng::stream(seed, Purpose::Occupation);
    let occupied: Vec<bool> = (0..side * side).map(|_| r.random::<f64>() < q).collect();
    let clusters = ClusterSummary::label(&occupied, side);
    let wrapping_components = clusters.wrapping().count();
    if wrapping_components > 1 {
        log::warn!("seed {seed}: {wrapping_components} distinct wrapping clusters at q = {q}; keeping the largest");
    }
    let infinite = clusters.largest_wrapping();
    let in_cluster = |j: usize| infinite.is_some() && clusters.label[j] == infinite;
    let cluster_cells = (0..side * side).filter(|&j| in_cluster(j)).count();

    let per = grid.cells / side;
    let mut a = vec![1.0; grid.len()];
    let mut p = vec![alpha; grid.len()];
    for k in 0..grid.len() {
        let (i, j) = grid.coords(k);
        let lattice = (i / per) * side + j / per;
        if occupied[lattice] {
            a[k] = 2.0;
        }
        if in_cluster(lattice) {
            p[k] = beta;
        }
    }
    MediumRealization::new(
        grid,
        a,
        p,
        seed,
        bounds,
        Provenance::Percolation {
            q,
            wrapping: infinite.is_some(),
            cluster_cells,
            wrapping_components,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_and_empty_occupation() {
        let g = TorusGrid::new(8.0, 16).unwrap();
        let full = bernoulli_percolation_medium(g, 1.0, 1.85, 3.0, 1).unwrap();
        assert!(full.a.iter().all(|&a| a == 2.0));
        assert!(full.p.iter().all(|&p| p == 3.0));
        let empty = bernoulli_percolation_medium(g, 0.0, 1.85, 3.0, 1).unwrap();
        assert!(empty.a.iter().all(|&a| a == 1.0));
        assert!(empty.p.iter().all(|&p| p == 1.85));
        assert!(matches!(
            empty.provenance,
            Provenance::Percolation { wrapping: false, .. }
        ));
    }

    #[test]
    fn rejects_misaligned_grid() {
        let g = TorusGrid::new(8.0, 12).unwrap();
        assert!(bernoulli_percolation_medium(g, 0.5, 1.85, 3.0, 1).is_err());
        let g = TorusGrid::new(7.5, 15).unwrap();
        assert!(bernoulli_percolation_medium(g, 0.5, 1.85, 3.0, 1).is_err());
    }

    #[test]
    fn straight_line_wraps_only_along_its_axis() {
        let side = 5;
        let mut occ = vec![false; side * side];
        for i in 0..side {
            occ[i * side + 2] = true;
        }
        let c = ClusterSummary::label(&occ, side);
        assert_eq!(c.clusters.len(), 1);
        assert_eq!(c.clusters[0].1, side);
        assert_eq!(c.clusters[0].2, [true, false]);
    }

    #[test]
    fn closed_ring_does_not_wrap() {
        // a 3x3 ring in a 6x6 torus
        let side = 6;
        let mut occ = vec![false; side * side];
        for i in 1..4 {
            for j in 1..4 {
                if i != 2 || j != 2 {
                    occ[i * side + j] = true;
                }
            }
        }
        let c = ClusterSummary::label(&occ, side);
        assert_eq!(c.clusters.len(), 1);
        assert_eq!(c.clusters[0].2, [false, false]);
        assert!(c.largest_wrapping().is_none());
    }

    #[test]
    fn two_parallel_strips_are_two_wrapping_clusters() {
        let side = 6;
        let mut occ = vec![false; side * side];
        for i in 0..side {
            occ[i * side + 1] = true;
            occ[i * side + 4] = true;
        }
        let c = ClusterSummary::label(&occ, side);
        assert_eq!(c.wrapping().count(), 2);
    }

    #[test]
    fn cluster_cells_are_occupied_and_connected() {
        let g = TorusGrid::new(16.0, 16).unwrap();
        for seed in 0..20 {
            let m = bernoulli_percolation_medium(g, 0.7, 1.85, 3.0, seed).unwrap();
            // occupied wherever p = beta
            for k in 0..g.len() {
                if m.p[k] == 3.0 {
                    assert_eq!(m.a[k], 2.0);
                }
            }
            // connectivity by flood fill from one cluster cell
            let cells: Vec<usize> = (0..g.len()).filter(|&k| m.p[k] == 3.0).collect();
            if cells.is_empty() {
                continue;
            }
            let mut seen = vec![false; g.len()];
            let mut stack = vec![cells[0]];
            seen[cells[0]] = true;
            let mut count = 0;
            while let Some(k) = stack.pop() {
                count += 1;
                let (i, j) = g.coords(k);
                for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let nb = g.offset(i, j, di, dj);
                    if !seen[nb] && m.p[nb] == 3.0 {
                        seen[nb] = true;
                        stack.push(nb);
                    }
                }
            }
            assert_eq!(count, cells.len(), "seed {seed}");
        }
    }

    #[test]
    fn supercritical_configurations_wrap() {
        let g = TorusGrid::new(64.0, 64).unwrap();
        let seeds = 500;
        let mut wrapped = 0;
        for seed in 0..seeds {
            let m = bernoulli_percolation_medium(g, 0.7, 1.85, 3.0, seed).unwrap();
            if let Provenance::Percolation {
                wrapping,
                wrapping_components,
                ..
            } = m.provenance
            {
                if wrapping {
                    wrapped += 1;
                    assert_eq!(wrapping_components, 1, "seed {seed}");
                }
            }
        }
        assert!(wrapped as f64 / seeds as f64 > 0.95, "{wrapped}/{seeds}");
    }
}
