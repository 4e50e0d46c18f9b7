//! Uniform-grid point index with exact nearest-neighbor queries.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::math::Vec3;

/// Static bucket grid over a point set. Query results are exact and ties in
/// distance are broken by the lower point index.
#[derive(Clone, Debug)]
pub struct PointGrid {
    origin: Vec3,
    cell: f64,
    dims: [i64; 3],
    cell_start: Vec<u32>,
    entries: Vec<u32>,
    points: Vec<Vec3>,
}

const MAX_CELLS: i64 = 1 << 22;

impl PointGrid {
    pub fn new(points: &[Vec3], cell: f64) -> Self {
        let mut cell = if cell > 0.0 && cell.is_finite() { cell } else { 1.0 };
        let (lo, hi) = points.iter().fold(
            (Vec3::repeat(f64::INFINITY), Vec3::repeat(f64::NEG_INFINITY)),
            |(lo, hi), p| (lo.inf(p), hi.sup(p)),
        );
        let (lo, hi) = if points.is_empty() {
            (Vec3::zeros(), Vec3::zeros())
        } else {
            (lo, hi)
        };
        let dims = loop {
            let d = [0, 1, 2].map(|a| ((hi[a] - lo[a]) / cell).floor() as i64 + 1);
            if d[0] * d[1] * d[2] <= MAX_CELLS {
                break d;
            }
            cell *= 2.0;
        };
        let ncells = (dims[0] * dims[1] * dims[2]) as usize;
        let mut counts = alloc::vec![0u32; ncells + 1];
        let mut grid = PointGrid {
            origin: lo,
            cell,
            dims,
            cell_start: Vec::new(),
            entries: Vec::new(),
            points: points.to_vec(),
        };
        let ids: Vec<usize> = points.iter().map(|p| grid.linear(grid.cell_of(p))).collect();
        for &c in &ids {
            counts[c + 1] += 1;
        }
        for i in 0..ncells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut entries = alloc::vec![0u32; points.len()];
        for (i, &c) in ids.iter().enumerate() {
            entries[fill[c] as usize] = i as u32;
            fill[c] += 1;
        }
        grid.cell_start = counts;
        grid.entries = entries;
        grid
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    fn cell_of(&self, p: &Vec3) -> [i64; 3] {
        [0, 1, 2].map(|a| {
            let c = ((p[a] - self.origin[a]) / self.cell).floor();
            if c.is_finite() {
                c as i64
            } else {
                0
            }
        })
    }

    fn clamp_cell(&self, c: [i64; 3]) -> [i64; 3] {
        [0, 1, 2].map(|a| c[a].clamp(0, self.dims[a] - 1))
    }

    fn linear(&self, c: [i64; 3]) -> usize {
        let c = self.clamp_cell(c);
        ((c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]) as usize
    }

    fn bucket(&self, c: [i64; 3]) -> &[u32] {
        let l = self.linear(c);
        &self.entries[self.cell_start[l] as usize..self.cell_start[l + 1] as usize]
    }

    /// The `k` nearest points to `q` as `(index, squared distance)`, nearest first.
    pub fn knn(&self, q: &Vec3, k: usize) -> Vec<(usize, f64)> {
        let mut best: Vec<(usize, f64)> = Vec::with_capacity(k + 1);
        self.knn_into(q, k, &mut best);
        best
    }

    /// Allocation-reusing form of [`PointGrid::knn`].
    pub fn knn_into(&self, q: &Vec3, k: usize, best: &mut Vec<(usize, f64)>) {
        best.clear();
        let k = k.min(self.points.len());
        if k == 0 {
            return;
        }
        let center = self.cell_of(q);
        // Chebyshev ring distance from the query cell to the grid box.
        let start = (0..3)
            .map(|a| (-center[a]).max(center[a] - (self.dims[a] - 1)).max(0))
            .max()
            .unwrap_or(0);
        let max_ring = (0..3)
            .map(|a| center[a].abs().max((center[a] - (self.dims[a] - 1)).abs()))
            .max()
            .unwrap_or(0);
        let mut ring = start;
        loop {
            self.scan_ring(q, center, ring, k, best);
            if ring >= max_ring {
                break;
            }
            if best.len() == k {
                // Any unvisited point lies outside the scanned block.
                let bound = (0..3)
                    .map(|a| {
                        let lo = self.origin[a] + (center[a] - ring) as f64 * self.cell;
                        let hi = self.origin[a] + (center[a] + ring + 1) as f64 * self.cell;
                        (q[a] - lo).min(hi - q[a])
                    })
                    .fold(f64::INFINITY, f64::min);
                if bound > 0.0 && best[k - 1].1 < bound * bound {
                    break;
                }
            }
            ring += 1;
        }
    }

    fn scan_ring(
        &self,
        q: &Vec3,
        center: [i64; 3],
        ring: i64,
        k: usize,
        best: &mut Vec<(usize, f64)>,
    ) {
        let lo = [0, 1, 2].map(|a| (center[a] - ring).max(0));
        let hi = [0, 1, 2].map(|a| (center[a] + ring).min(self.dims[a] - 1));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let cheb = (x - center[0])
                        .abs()
                        .max((y - center[1]).abs())
                        .max((z - center[2]).abs());
                    if cheb != ring {
                        continue;
                    }
                    for &i in self.bucket([x, y, z]) {
                        let d2 = (self.points[i as usize] - q).norm_squared();
                        insert_sorted(best, k, (i as usize, d2));
                    }
                }
            }
        }
    }

    /// All points within `radius` of `q` (inclusive), ascending index.
    pub fn within(&self, q: &Vec3, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.points.is_empty() {
            return out;
        }
        let r2 = radius * radius;
        let lo = self.clamp_cell(self.cell_of(&(q - Vec3::repeat(radius))));
        let hi = self.clamp_cell(self.cell_of(&(q + Vec3::repeat(radius))));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    for &i in self.bucket([x, y, z]) {
                        if (self.points[i as usize] - q).norm_squared() <= r2 {
                            out.push(i as usize);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// True if some point lies strictly closer than `radius` to `q`.
    pub fn any_closer_than(&self, q: &Vec3, radius: f64) -> bool {
        if self.points.is_empty() {
            return false;
        }
        let r2 = radius * radius;
        let lo = self.clamp_cell(self.cell_of(&(q - Vec3::repeat(radius))));
        let hi = self.clamp_cell(self.cell_of(&(q + Vec3::repeat(radius))));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    if self
                        .bucket([x, y, z])
                        .iter()
                        .any(|&i| (self.points[i as usize] - q).norm_squared() < r2)
                    {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Growable bucket grid for incremental insertion (node sampling).
#[derive(Clone, Debug, Default)]
pub struct HashGrid {
    cell: f64,
    buckets: BTreeMap<[i64; 3], Vec<u32>>,
    points: Vec<Vec3>,
}

impl HashGrid {
    pub fn new(cell: f64) -> Self {
        Self {
            cell,
            buckets: BTreeMap::new(),
            points: Vec::new(),
        }
    }

    fn key(&self, p: &Vec3) -> [i64; 3] {
        [0, 1, 2].map(|a| (p[a] / self.cell).floor() as i64)
    }

    pub fn insert(&mut self, p: Vec3) -> usize {
        let id = self.points.len();
        self.points.push(p);
        self.buckets.entry(self.key(&p)).or_default().push(id as u32);
        id
    }

    pub fn points(&self) -> &[Vec3] {
        &self.points
    }

    /// True if some stored point lies strictly closer than `radius` (`radius <= cell`).
    pub fn any_closer_than(&self, q: &Vec3, radius: f64) -> bool {
        let r2 = radius * radius;
        let k = self.key(q);
        for dz in -1..=1 {
            for dy in -1..=1 {
                for dx in -1..=1 {
                    if let Some(ids) = self.buckets.get(&[k[0] + dx, k[1] + dy, k[2] + dz]) {
                        if ids
                            .iter()
                            .any(|&i| (self.points[i as usize] - q).norm_squared() < r2)
                        {
                            return true;
                        }
                    }
                }
            }
        }
        false
    }
}

fn insert_sorted(best: &mut Vec<(usize, f64)>, k: usize, cand: (usize, f64)) {
    let before = |a: &(usize, f64), b: &(usize, f64)| a.1 < b.1 || (a.1 == b.1 && a.0 < b.0);
    if best.len() == k && !before(&cand, &best[k - 1]) {
        return;
    }
    let pos = best.iter().position(|e| before(&cand, e)).unwrap_or(best.len());
    best.insert(pos, cand);
    best.truncate(k);
}

/// Brute-force k nearest with the same tie rule; the reference for [`PointGrid::knn`].
pub fn knn_brute_force(points: &[Vec3], q: &Vec3, k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p - q).norm_squared()))
        .collect();
    all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(raw: &[(f64, f64, f64)]) -> Vec<Vec3> {
        raw.iter().map(|&(x, y, z)| Vec3::new(x, y, z)).collect()
    }

    proptest! {
        #[test]
        fn knn_matches_brute_force(
            raw in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..80),
            q in (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64),
            k in 1usize..10,
            cell in 0.05..0.8f64,
        ) {
            let points = pts(&raw);
            let grid = PointGrid::new(&points, cell);
            let q = Vec3::new(q.0, q.1, q.2);
            let got: Vec<usize> = grid.knn(&q, k).iter().map(|e| e.0).collect();
            let want: Vec<usize> = knn_brute_force(&points, &q, k).iter().map(|e| e.0).collect();
            prop_assert_eq!(got, want);
        }

        #[test]
        fn within_matches_brute_force(
            raw in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 1..60),
            q in (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
            r in 0.0..1.0f64,
        ) {
            let points = pts(&raw);
            let grid = PointGrid::new(&points, 0.2);
            let q = Vec3::new(q.0, q.1, q.2);
            let want: Vec<usize> = (0..points.len()).filter(|&i| (points[i] - q).norm() <= r).collect();
            prop_assert_eq!(grid.within(&q, r), want);
        }
    }

    #[test]
    fn ties_prefer_lower_index() {
        let points = pts(&[(1.0, 0.0, 0.0), (-1.0, 0.0, 0.0), (0.0, 1.0, 0.0)]);
        let grid = PointGrid::new(&points, 0.3);
        let got = grid.knn(&Vec3::zeros(), 2);
        assert_eq!(got.iter().map(|e| e.0).collect::<Vec<_>>(), [0, 1]);
    }
}
