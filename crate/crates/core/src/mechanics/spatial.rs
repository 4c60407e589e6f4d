//! Uniform 2-D bucket grid over the field footprint for neighbor queries.

/// Buckets point indices by their `(x, y)` cell; `z` is ignored for
/// bucketing but included in distance tests.
#[derive(Debug, Default, Clone)]
pub struct SpatialGrid {
    cell: f64,
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    items: Vec<u32>,
    keys: Vec<u32>,
    fill: Vec<u32>,
}

const MAX_DIM: usize = 64;

impl SpatialGrid {
    pub fn new() -> Self {
        SpatialGrid::default()
    }

    /// Rebuilds the grid for `positions` over a square of side `extent`.
    /// Buckets are at least `cell` wide; their count per axis is capped at
    /// `MAX_DIM` and at about twice the square root of the point count, so
    /// sparse populations never pay for a fine grid.
    pub fn build(&mut self, positions: impl ExactSizeIterator<Item = [f64; 3]> + Clone, extent: f64, cell: f64) {
        let extent = extent.max(1e-6);
        let cap = ((2.0 * (positions.len() as f64).sqrt()).ceil() as usize).clamp(1, MAX_DIM);
        self.nx = ((extent / cell.max(1e-6)).floor() as usize).clamp(1, cap);
        self.ny = self.nx;
        self.cell = extent / self.nx as f64;
        let n_cells = self.nx * self.ny;
        let mut keys = std::mem::take(&mut self.keys);
        keys.clear();
        keys.extend(positions.map(|p| self.key(p)));
        self.keys = keys;
        self.starts.clear();
        self.starts.resize(n_cells + 1, 0);
        for &k in &self.keys {
            self.starts[k as usize + 1] += 1;
        }
        for c in 0..n_cells {
            self.starts[c + 1] += self.starts[c];
        }
        self.items.clear();
        self.items.resize(self.keys.len(), 0);
        self.fill.clear();
        self.fill.extend_from_slice(&self.starts);
        for (i, &k) in self.keys.iter().enumerate() {
            let slot = &mut self.fill[k as usize];
            self.items[*slot as usize] = i as u32;
            *slot += 1;
        }
    }

    fn coord(&self, v: f64, n: usize) -> usize {
        let c = (v / self.cell).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(n - 1)
        }
    }

    fn key(&self, p: [f64; 3]) -> u32 {
        (self.coord(p[1], self.ny) * self.nx + self.coord(p[0], self.nx)) as u32
    }

    /// Calls `f(i, j, dist)` for every unordered pair `i < j` whose center
    /// distance is below `cutoff(i, j)`, with `cutoff ≤ max_cutoff ≤ cell size`.
    /// Pairs are visited in ascending `(i, j)` order.
    pub fn for_each_pair(
        &self,
        positions: &[[f64; 3]],
        cutoff: impl Fn(usize, usize) -> f64,
        mut f: impl FnMut(usize, usize, f64),
    ) {
        let mut found: Vec<(u32, f64)> = Vec::new();
        for (i, p) in positions.iter().enumerate() {
            found.clear();
            let cx = self.coord(p[0], self.nx);
            let cy = self.coord(p[1], self.ny);
            for gy in cy.saturating_sub(1)..=(cy + 1).min(self.ny - 1) {
                for gx in cx.saturating_sub(1)..=(cx + 1).min(self.nx - 1) {
                    let c = gy * self.nx + gx;
                    for &j in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                        let ju = j as usize;
                        if ju <= i {
                            continue;
                        }
                        let q = positions[ju];
                        let d2 = (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2) + (q[2] - p[2]).powi(2);
                        let c = cutoff(i, ju);
                        if d2 < c * c {
                            found.push((j, d2.sqrt()));
                        }
                    }
                }
            }
            found.sort_unstable_by_key(|e| e.0);
            for &(j, d) in &found {
                f(i, j as usize, d);
            }
        }
    }

    /// Calls `f(j, dist)` for every indexed point within `radius` of `point`
    /// (`radius ≤ cell size`), in ascending index order.
    pub fn for_each_near(&self, positions: &[[f64; 3]], point: [f64; 3], radius: f64, mut f: impl FnMut(usize, f64)) {
        if self.starts.is_empty() {
            return;
        }
        let mut found: Vec<(u32, f64)> = Vec::new();
        let cx = self.coord(point[0], self.nx);
        let cy = self.coord(point[1], self.ny);
        for gy in cy.saturating_sub(1)..=(cy + 1).min(self.ny - 1) {
            for gx in cx.saturating_sub(1)..=(cx + 1).min(self.nx - 1) {
                let c = gy * self.nx + gx;
                for &j in &self.items[self.starts[c] as usize..self.starts[c + 1] as usize] {
                    let d = super::distance(point, positions[j as usize]);
                    if d <= radius {
                        found.push((j, d));
                    }
                }
            }
        }
        found.sort_unstable_by_key(|e| e.0);
        for (j, d) in found {
            f(j as usize, d);
        }
    }
}
