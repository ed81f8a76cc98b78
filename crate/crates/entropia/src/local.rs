//! Dynamical (Bowen) balls, the B-infinity proxy, and local entropy as a
//! sampled supremum of ball entropies.
//!
//! Balls are represented as sets of grid cells whose centers satisfy the
//! strict orbit condition `d(f^i y, f^i x) < eps`. The infinite ball is
//! proxied by a deep finite ball plus a stabilization certificate (the cell
//! set stopped changing with n). Local entropy at a center is the covering
//! growth rate inside that proxy, maximized over a short inner-scale ladder.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::covering::{entropy_scale_rate, CoverContext, EntropyEstimate, RateOptions};
use crate::error::{Error, Result};
use crate::grid::{Grid, OrbitTable};
use crate::space::{Point, StateSpace};
use crate::system::{iterate_orbit, AnalyticSystem};

/// Grid approximation of a dynamical ball.
#[derive(Debug, Clone)]
pub struct BowenBallApprox {
    pub center: Point,
    pub n: usize,
    pub eps: f64,
    /// sorted grid-cell indices whose centers satisfy the ball condition
    pub boxes: Vec<u32>,
    pub grid_g: u32,
    /// one cell diameter stretched through the orbit: `sqrt(m) 2^-g L0^(n-1)`
    pub overapprox_error: f64,
    /// for the B-infinity proxy: cell set unchanged under one more step
    pub stabilized: Option<bool>,
}

impl BowenBallApprox {
    pub fn contains_cell(&self, cell: u32) -> bool {
        self.boxes.binary_search(&cell).is_ok()
    }
}

#[derive(Debug, Clone)]
pub struct LocalParams {
    /// depth of the finite proxy for the infinite ball
    pub n_proxy: usize,
    /// fit window for the in-ball covering rate
    pub window: (usize, usize),
    pub grid_g: u32,
}

/// Center sampling plan for the supremum: a coarse lattice union a
/// deterministic low-discrepancy (Kronecker) sequence.
#[derive(Debug, Clone)]
pub struct SamplingPlan {
    pub lattice_g: u32,
    pub quasi_random: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        SamplingPlan {
            lattice_g: 3,
            quasi_random: 256,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone)]
pub struct CenterRecord {
    pub center: Point,
    pub estimate: EntropyEstimate,
    pub stabilized: bool,
    pub ball_cells: usize,
}

#[derive(Debug, Clone)]
pub struct LocalEntropyEstimate {
    pub eps: f64,
    /// nats per step, clamped at zero
    pub value: f64,
    pub argmax_center: Point,
    pub n_proxy: usize,
    pub per_center: Vec<CenterRecord>,
    /// fraction of centers whose proxy ball stabilized
    pub stabilized_frac: f64,
    /// largest confidence half-width among centers
    pub half_width: f64,
}

/// Per-dimension sorted index lists whose product is a superset of the grid
/// cells within static distance `eps` of `x` (the exact check happens
/// later). `None` means "scan everything" (suspension metrics don't factor
/// over coordinates).
fn candidate_axes(grid: &Grid, x: &[f64], eps: f64) -> Option<Vec<Vec<usize>>> {
    if !grid.space.is_flat() {
        return None;
    }
    let step = grid.step();
    let wrap = matches!(grid.space, StateSpace::Torus { .. });
    let mut axes = Vec::with_capacity(grid.dim());
    for c in 0..grid.dim() {
        let side = grid.side(c) as isize;
        let lo = ((x[c] - eps) / step).floor() as isize - 1;
        let hi = ((x[c] + eps) / step).ceil() as isize + 1;
        let mut js: Vec<usize> = if hi - lo + 1 >= side {
            (0..side as usize).collect()
        } else if wrap {
            let mut v: Vec<usize> = (lo..=hi).map(|j| j.rem_euclid(side) as usize).collect();
            v.sort_unstable();
            v.dedup();
            v
        } else {
            (lo.max(0)..=hi.min(side - 1)).map(|j| j as usize).collect()
        };
        js.shrink_to_fit();
        axes.push(js);
    }
    Some(axes)
}

fn axes_to_indices(grid: &Grid, axes: &[Vec<usize>]) -> Vec<u32> {
    let mut out = Vec::new();
    let m = axes.len();
    let mut pos = vec![0usize; m];
    'outer: loop {
        let mut idx = 0usize;
        for c in 0..m {
            idx = idx * grid.side(c) + axes[c][pos[c]];
        }
        out.push(idx as u32);
        // odometer, most-significant axis slowest so output stays sorted
        let mut c = m;
        loop {
            if c == 0 {
                break 'outer;
            }
            c -= 1;
            pos[c] += 1;
            if pos[c] < axes[c].len() {
                continue 'outer;
            }
            pos[c] = 0;
        }
    }
    out
}

fn candidate_cells(grid: &Grid, x: &[f64], eps: f64) -> Vec<u32> {
    match candidate_axes(grid, x, eps) {
        Some(axes) => axes_to_indices(grid, &axes),
        None => (0..grid.n_points as u32).collect(),
    }
}

/// Filter candidates by the strict n-step ball condition, reading candidate
/// orbits from `table` when given, otherwise iterating the map directly.
fn ball_filter(
    sys: &AnalyticSystem,
    grid: &Grid,
    table: Option<&OrbitTable>,
    x_orbit: &[Point],
    candidates: &[u32],
    n: usize,
    eps: f64,
) -> Vec<u32> {
    let space = &sys.space;
    let mut boxes: Vec<u32> = candidates
        .par_iter()
        .copied()
        .filter(|&p| match table {
            Some(t) => (0..n).all(|i| space.distance(t.at(p as usize, i), &x_orbit[i]) < eps),
            None => {
                let mut cur = grid.point_vec(p as usize);
                space.normalize(&mut cur);
                for i in 0..n {
                    if space.distance(&cur, &x_orbit[i]) >= eps {
                        return false;
                    }
                    if i + 1 < n {
                        cur = sys.eval(&cur);
                    }
                }
                true
            }
        })
        .collect();
    let own = grid.cell_of(x_orbit[0].as_slice()) as u32;
    if boxes.binary_search(&own).is_err() {
        boxes.push(own);
        boxes.sort_unstable();
    }
    boxes
}

fn overapprox(grid: &Grid, l0: f64, n: usize) -> f64 {
    (grid.dim() as f64).sqrt() * grid.step() * l0.powi(n as i32 - 1)
}

/// Grid cells whose centers stay strictly `eps`-close to the orbit of `x`
/// for `n` steps.
pub fn bowen_ball_boxes(
    sys: &AnalyticSystem,
    x: &[f64],
    n: usize,
    eps: f64,
    grid_g: u32,
) -> Result<BowenBallApprox> {
    assert!(n >= 1);
    let grid = Grid::new(&sys.space, grid_g);
    if grid.step() > eps / 8.0 {
        return Err(Error::ResolutionInsufficient {
            step: grid.step(),
            limit: eps / 8.0,
        });
    }
    let mut x0 = x.to_vec();
    sys.space.normalize(&mut x0);
    let x_orbit = iterate_orbit(sys, &x0, n.saturating_sub(1))?;
    let candidates = candidate_cells(&grid, &x0, eps);
    let boxes = ball_filter(sys, &grid, None, &x_orbit, &candidates, n, eps);
    Ok(BowenBallApprox {
        center: x0,
        n,
        eps,
        boxes,
        grid_g,
        overapprox_error: overapprox(&grid, sys.l0, n),
        stabilized: None,
    })
}

/// B-infinity proxy: the `n_proxy`-step ball plus a stabilization flag. At
/// `n_proxy = 1` the flag compares against one step deeper instead.
pub fn infinite_ball_approx(
    sys: &AnalyticSystem,
    x: &[f64],
    eps: f64,
    n_proxy: usize,
    grid_g: u32,
) -> Result<BowenBallApprox> {
    assert!(n_proxy >= 1);
    let mut ball = bowen_ball_boxes(sys, x, n_proxy, eps, grid_g)?;
    let other = if n_proxy == 1 {
        bowen_ball_boxes(sys, x, 2, eps, grid_g)?
    } else {
        bowen_ball_boxes(sys, x, n_proxy - 1, eps, grid_g)?
    };
    ball.stabilized = Some(ball.boxes == other.boxes);
    Ok(ball)
}

fn inner_ladder(eps: f64) -> [f64; 3] {
    [eps / 4.0, eps / 8.0, eps / 16.0]
}

fn local_rate_for_ball(
    ctx: &CoverContext,
    boxes: &[u32],
    eps: f64,
    window: (usize, usize),
) -> Result<EntropyEstimate> {
    // capacity saturation inside a small ball is genuine, not a grid
    // artifact, so the cutoff is disabled here
    let mut opts = RateOptions::new(window);
    opts.saturation_frac = 1.0;
    let region = boxes.to_vec();
    let mut best: Option<EntropyEstimate> = None;
    for eps1 in inner_ladder(eps) {
        let rate = entropy_scale_rate(ctx, &region, eps1, &opts)?;
        let better = match &best {
            Some(b) => rate.estimate.value > b.value,
            None => true,
        };
        if better {
            best = Some(rate.estimate);
        }
    }
    Ok(best.unwrap())
}

fn check_inner_resolution(grid: &Grid, eps: f64) -> Result<()> {
    // finest inner rung eps/16 still needs step <= eps1/4
    let limit = eps / 64.0;
    if grid.step() > limit {
        return Err(Error::ResolutionInsufficient {
            step: grid.step(),
            limit,
        });
    }
    Ok(())
}

fn ball_via_table(
    sys: &AnalyticSystem,
    ctx: &CoverContext,
    x: &[f64],
    eps: f64,
    n_proxy: usize,
) -> Result<(Vec<u32>, bool)> {
    let mut x0 = x.to_vec();
    sys.space.normalize(&mut x0);
    let x_orbit = iterate_orbit(sys, &x0, n_proxy.max(2) - 1)?;
    let candidates = candidate_cells(ctx.grid, &x0, eps);
    let boxes = ball_filter(sys, ctx.grid, Some(ctx.table), &x_orbit, &candidates, n_proxy, eps);
    let other_n = if n_proxy == 1 { 2 } else { n_proxy - 1 };
    let other = ball_filter(sys, ctx.grid, Some(ctx.table), &x_orbit, &candidates, other_n, eps);
    Ok((boxes.clone(), boxes == other))
}

/// Entropy of the infinite-ball proxy at one center.
pub fn local_entropy_at(
    sys: &AnalyticSystem,
    x: &[f64],
    eps: f64,
    params: &LocalParams,
) -> Result<EntropyEstimate> {
    let grid = Grid::new(&sys.space, params.grid_g);
    check_inner_resolution(&grid, eps)?;
    let n_max = params.window.1.max(params.n_proxy).max(2);
    let table = OrbitTable::build(sys, &grid, n_max)?;
    let ctx = CoverContext {
        sys,
        grid: &grid,
        table: &table,
    };
    let (boxes, _) = ball_via_table(sys, &ctx, x, eps, params.n_proxy)?;
    local_rate_for_ball(&ctx, &boxes, eps, params.window)
}

/// Centers of the sampling plan: coarse lattice plus a seeded Kronecker
/// sequence (fractional parts of multiples of square-root irrationals).
pub fn sample_centers(space: &StateSpace, plan: &SamplingPlan) -> Vec<Point> {
    let lattice = Grid::new(space, plan.lattice_g);
    let mut centers: Vec<Point> = (0..lattice.n_points).map(|i| lattice.point_vec(i)).collect();
    let m = lattice.dim();
    const PRIMES: [f64; 6] = [2.0, 3.0, 5.0, 7.0, 11.0, 13.0];
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let offsets: Vec<f64> = (0..m).map(|_| rng.gen::<f64>()).collect();
    for k in 0..plan.quasi_random {
        let mut p = vec![0.0; m];
        for (c, coord) in p.iter_mut().enumerate() {
            let alpha = PRIMES[c % PRIMES.len()].sqrt().fract();
            *coord = (offsets[c] + (k as f64 + 1.0) * alpha).fract();
        }
        space.normalize(&mut p);
        centers.push(p);
    }
    centers
}

/// Sampled supremum of ball entropies over the plan, argmax recorded.
pub fn local_entropy_sup(
    sys: &AnalyticSystem,
    eps: f64,
    plan: &SamplingPlan,
    params: &LocalParams,
) -> Result<LocalEntropyEstimate> {
    let grid = Grid::new(&sys.space, params.grid_g);
    check_inner_resolution(&grid, eps)?;
    let n_max = params.window.1.max(params.n_proxy).max(2);
    let table = OrbitTable::build(sys, &grid, n_max)?;
    let ctx = CoverContext {
        sys,
        grid: &grid,
        table: &table,
    };
    let centers = sample_centers(&sys.space, plan);
    let records: Result<Vec<CenterRecord>> = centers
        .iter()
        .map(|x| {
            let (boxes, stabilized) = ball_via_table(sys, &ctx, x, eps, params.n_proxy)?;
            let estimate = local_rate_for_ball(&ctx, &boxes, eps, params.window)?;
            Ok(CenterRecord {
                center: x.clone(),
                estimate,
                stabilized,
                ball_cells: boxes.len(),
            })
        })
        .collect();
    let per_center = records?;
    let best = per_center
        .iter()
        .enumerate()
        .max_by(|(i, a), (j, b)| {
            a.estimate
                .value
                .partial_cmp(&b.estimate.value)
                .unwrap()
                .then(j.cmp(i)) // ties go to the earliest center
        })
        .expect("plan is nonempty");
    let stabilized_frac = per_center.iter().filter(|r| r.stabilized).count() as f64
        / per_center.len() as f64;
    let half_width = per_center
        .iter()
        .map(|r| r.estimate.half_width)
        .fold(0.0f64, f64::max);
    Ok(LocalEntropyEstimate {
        eps,
        value: best.1.estimate.value.max(0.0),
        argmax_center: best.1.center.clone(),
        n_proxy: params.n_proxy,
        per_center,
        stabilized_frac,
        half_width,
    })
}
