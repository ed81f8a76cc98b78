//! Dyadic grid discretizations and precomputed orbit tables.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::space::StateSpace;
use crate::system::AnalyticSystem;

/// Implicit lattice of the fundamental domain at dyadic step `2^-g`:
/// `2^g` points per torus coordinate, `2^g + 1` per cube coordinate.
#[derive(Debug, Clone)]
pub struct Grid {
    pub space: StateSpace,
    pub g: u32,
    sides: Vec<usize>,
    pub n_points: usize,
}

impl Grid {
    pub fn new(space: &StateSpace, g: u32) -> Self {
        let side = 1usize << g;
        let sides: Vec<usize> = match space {
            StateSpace::Torus { dim } => vec![side; *dim],
            StateSpace::Cube { dim } => vec![side + 1; *dim],
            StateSpace::Suspension { base } => {
                let mut s = vec![side]; // vertical coordinate lives on [0,1)
                match base.space {
                    StateSpace::Torus { dim } => s.extend(vec![side; dim]),
                    StateSpace::Cube { dim } => s.extend(vec![side + 1; dim]),
                    StateSpace::Suspension { .. } => unreachable!("nested suspension"),
                }
                s
            }
        };
        let n_points = sides.iter().product();
        Grid {
            space: space.clone(),
            g,
            sides,
            n_points,
        }
    }

    #[inline]
    pub fn step(&self) -> f64 {
        0.5f64.powi(self.g as i32)
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    /// Number of lattice points along coordinate `c`.
    pub fn side(&self, c: usize) -> usize {
        self.sides[c]
    }

    /// Coordinates of grid point `idx` (row-major over `sides`).
    pub fn point(&self, idx: usize, out: &mut [f64]) {
        let mut rem = idx;
        let step = self.step();
        for c in (0..self.sides.len()).rev() {
            let j = rem % self.sides[c];
            rem /= self.sides[c];
            out[c] = j as f64 * step;
        }
    }

    pub fn point_vec(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.point(idx, &mut out);
        out
    }

    /// Index of the grid cell containing `p` (nearest lattice point).
    pub fn cell_of(&self, p: &[f64]) -> usize {
        let step = self.step();
        let mut idx = 0usize;
        for c in 0..self.sides.len() {
            let mut j = (p[c] / step).round() as isize;
            let side = self.sides[c] as isize;
            if j >= side {
                j = if matches!(self.space, StateSpace::Cube { .. }) {
                    side - 1
                } else {
                    j - side
                };
            }
            if j < 0 {
                j = 0;
            }
            idx = idx * self.sides[c] + j as usize;
        }
        idx
    }

    pub fn whole_region(&self) -> Vec<u32> {
        (0..self.n_points as u32).collect()
    }
}

/// Absolute tie tolerance for distance comparisons at exact dyadic
/// alignments; far below any grid step in use.
pub const TIE: f64 = 1e-12;

/// Orbits of every grid point up to `n_max` steps, stored flat. This is the
/// memory-time tradeoff behind all Bowen-metric queries.
#[derive(Debug)]
pub struct OrbitTable {
    pub m: usize,
    pub steps: usize, // n_max + 1
    data: Vec<f64>,
}

impl OrbitTable {
    pub fn build(sys: &AnalyticSystem, grid: &Grid, n_max: usize) -> Result<Self> {
        let m = grid.dim();
        let steps = n_max + 1;
        let n_points = grid.n_points;
        let mut data = vec![0.0f64; n_points * steps * m];
        let escaped = data
            .par_chunks_mut(steps * m)
            .enumerate()
            .map(|(p, chunk)| {
                let mut cur = grid.point_vec(p);
                sys.space.normalize(&mut cur);
                chunk[0..m].copy_from_slice(&cur);
                for i in 1..steps {
                    cur = sys.eval(&cur);
                    if cur.iter().any(|c| !c.is_finite()) {
                        return Err(i);
                    }
                    chunk[i * m..(i + 1) * m].copy_from_slice(&cur);
                }
                Ok(())
            })
            .find_map_any(|r| r.err());
        if let Some(step) = escaped {
            return Err(Error::NumericEscape { step });
        }
        Ok(OrbitTable { m, steps, data })
    }

    #[inline]
    pub fn at(&self, p: usize, i: usize) -> &[f64] {
        let base = (p * self.steps + i) * self.m;
        &self.data[base..base + self.m]
    }

    /// `d_n(p, q)` as max over the first `n` table steps.
    pub fn bowen(&self, space: &StateSpace, p: usize, q: usize, n: usize) -> f64 {
        let mut d = 0.0f64;
        for i in 0..n {
            d = d.max(space.distance(self.at(p, i), self.at(q, i)));
        }
        d
    }

    /// True iff `d_n(p, q) <= eps` (plus the tie guard); exits as soon as a
    /// step exceeds the threshold.
    #[inline]
    pub fn within(&self, space: &StateSpace, p: usize, q: usize, n: usize, eps: f64) -> bool {
        let thr = eps + TIE;
        for i in 0..n {
            if space.distance(self.at(p, i), self.at(q, i)) > thr {
                return false;
            }
        }
        true
    }

    /// True iff `d_n(p, q) >= eps` (minus the tie guard): the separation
    /// predicate. Exact dyadic ties count as separated, so counts are stable
    /// against last-ulp wrap rounding.
    #[inline]
    pub fn separated(&self, space: &StateSpace, p: usize, q: usize, n: usize, eps: f64) -> bool {
        let thr = eps - TIE;
        for i in 0..n {
            if space.distance(self.at(p, i), self.at(q, i)) >= thr {
                return true;
            }
        }
        false
    }

    /// `Some(d_n)` when `d_n(p, q) < bound`, `None` otherwise (early exit on
    /// the running max).
    #[inline]
    pub fn bowen_below(
        &self,
        space: &StateSpace,
        p: usize,
        q: usize,
        n: usize,
        bound: f64,
    ) -> Option<f64> {
        let mut d = 0.0f64;
        for i in 0..n {
            let di = space.distance(self.at(p, i), self.at(q, i));
            if di > d {
                d = di;
                if d >= bound {
                    return None;
                }
            }
        }
        Some(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo;

    #[test]
    fn grid_cardinalities() {
        let t = Grid::new(&StateSpace::torus(2), 3);
        assert_eq!(t.n_points, 64);
        let c = Grid::new(&StateSpace::cube(1), 3);
        assert_eq!(c.n_points, 9);
    }

    #[test]
    fn grid_covering_radius() {
        // every point of the space is within (sqrt(m)/2) * 2^-g of a grid point
        let g = Grid::new(&StateSpace::torus(2), 4);
        let radius = 2.0f64.sqrt() / 2.0 * g.step();
        let p = [0.511, 0.273];
        let idx = g.cell_of(&p);
        let q = g.point_vec(idx);
        assert!(g.space.distance(&p, &q) <= radius + 1e-12);
    }

    #[test]
    fn orbit_table_matches_direct_iteration() {
        let sys = zoo::doubling();
        let grid = Grid::new(&sys.space, 6);
        let table = OrbitTable::build(&sys, &grid, 5).unwrap();
        let p = 17usize;
        let orbit = crate::system::iterate_orbit(&sys, &grid.point_vec(p), 5).unwrap();
        for i in 0..=5 {
            assert!((table.at(p, i)[0] - orbit[i][0]).abs() < 1e-14);
        }
    }

    #[test]
    fn bowen_below_early_exit_agrees() {
        let sys = zoo::cat_map();
        let grid = Grid::new(&sys.space, 4);
        let table = OrbitTable::build(&sys, &grid, 4).unwrap();
        for (p, q) in [(0usize, 37usize), (5, 200), (100, 101)] {
            let exact = table.bowen(&sys.space, p, q, 4);
            match table.bowen_below(&sys.space, p, q, 4, 0.3) {
                Some(d) => assert!((d - exact).abs() < 1e-14 && exact < 0.3),
                None => assert!(exact >= 0.3),
            }
        }
    }
}
