//! Block heightmap of the field. Heights are stored per block and sampled
//! bilinearly between block centers; outside the outermost centers the edge
//! values are held constant.

use std::f64::consts::PI;

#[derive(Debug, Clone, PartialEq)]
pub struct Heightmap {
    n: usize,
    heights: Vec<f64>,
}

impl Heightmap {
    pub const DEFAULT_SIZE: usize = 32;

    pub fn flat(n: usize) -> Self {
        Heightmap {
            n,
            heights: vec![0.0; n * n],
        }
    }

    /// Smooth rolling hills `amp · sin(2πx/λ) · cos(2πy/λ)` sampled at block centers.
    pub fn undulating(n: usize, amplitude: f64, wavelength: f64) -> Self {
        let mut heights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let x = i as f64 + 0.5;
                let y = j as f64 + 0.5;
                heights.push(amplitude * (2.0 * PI * x / wavelength).sin() * (2.0 * PI * y / wavelength).cos());
            }
        }
        Heightmap { n, heights }
    }

    pub fn from_heights(n: usize, heights: Vec<f64>) -> Result<Self, String> {
        if n == 0 || heights.len() != n * n {
            return Err(format!("expected {} heights for a {n}x{n} grid, got {}", n * n, heights.len()));
        }
        if let Some(h) = heights.iter().find(|h| !h.is_finite()) {
            return Err(format!("non-finite height {h}"));
        }
        Ok(Heightmap { n, heights })
    }

    /// Parses `n` rows of `n` whitespace-separated numbers; row `j` is `y = j`.
    pub fn parse(text: &str) -> Result<Self, String> {
        let rows: Vec<Vec<f64>> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .enumerate()
            .map(|(r, l)| {
                l.split_whitespace()
                    .map(|t| t.parse::<f64>().map_err(|e| format!("row {}: {t:?}: {e}", r + 1)))
                    .collect()
            })
            .collect::<Result<_, _>>()?;
        let n = rows.len();
        if let Some((r, row)) = rows.iter().enumerate().find(|(_, row)| row.len() != n) {
            return Err(format!("row {} has {} values, expected {n}", r + 1, row.len()));
        }
        Heightmap::from_heights(n, rows.into_iter().flatten().collect())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in self.heights.chunks(self.n) {
            let line: Vec<String> = row.iter().map(|h| format!("{h}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Field edge length in world units.
    pub fn extent(&self) -> f64 {
        self.n as f64
    }

    pub fn block(&self, i: usize, j: usize) -> f64 {
        self.heights[j * self.n + i]
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn height_at(&self, x: f64, y: f64) -> f64 {
        let max = (self.n - 1) as f64;
        let u = (x - 0.5).clamp(0.0, max);
        let v = (y - 0.5).clamp(0.0, max);
        let i0 = (u.floor() as usize).min(self.n - 1);
        let j0 = (v.floor() as usize).min(self.n - 1);
        let i1 = (i0 + 1).min(self.n - 1);
        let j1 = (j0 + 1).min(self.n - 1);
        let fu = u - i0 as f64;
        let fv = v - j0 as f64;
        let h00 = self.block(i0, j0);
        let h10 = self.block(i1, j0);
        let h01 = self.block(i0, j1);
        let h11 = self.block(i1, j1);
        (h00 * (1.0 - fu) + h10 * fu) * (1.0 - fv) + (h01 * (1.0 - fu) + h11 * fu) * fv
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_is_zero_everywhere() {
        let h = Heightmap::flat(32);
        for &(x, y) in &[(0.0, 0.0), (16.3, 7.9), (31.99, 31.99)] {
            assert_eq!(h.height_at(x, y), 0.0);
        }
    }

    #[test]
    fn bilinear_hits_block_centers_and_midpoints() {
        let mut hs = vec![0.0; 4];
        hs[1] = 2.0; // block (1, 0)
        let h = Heightmap::from_heights(2, hs).unwrap();
        assert_eq!(h.height_at(0.5, 0.5), 0.0);
        assert_eq!(h.height_at(1.5, 0.5), 2.0);
        assert_eq!(h.height_at(1.0, 0.5), 1.0);
        assert_eq!(h.height_at(1.0, 1.0), 0.5);
        // held constant beyond the outer centers
        assert_eq!(h.height_at(1.9, 0.0), 2.0);
    }

    #[test]
    fn text_round_trip() {
        let h = Heightmap::undulating(32, 0.5, 8.0);
        let back = Heightmap::parse(&h.to_text()).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn parse_rejects_ragged() {
        assert!(Heightmap::parse("1 2\n3\n").is_err());
        assert!(Heightmap::parse("1 x\n3 4\n").is_err());
    }
}
