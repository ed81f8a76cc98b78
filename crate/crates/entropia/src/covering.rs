//! (n, eps)-spanning and separated counts over grid discretizations, and the
//! scale-entropy rate extracted from their growth in n.
//!
//! Two covering strategies are used behind one contract:
//!
//! * farthest-point greedy (the classic eps-net construction) on small
//!   regions, which gives covering-quality upper counts;
//! * a lexicographic sweep extracting a maximal separated set on large
//!   regions. A maximal (n, eps)-separated set is automatically
//!   (n, eps)-spanning, so its cardinality is a valid (constant-factor
//!   inflated) cover count, which leaves growth rates unaffected.
//!
//! Counts at a given n are excluded from rate fits once they saturate the
//! grid (the dynamical balls fall below grid resolution there); the estimate
//! records the truncation.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Grid, OrbitTable};
use crate::space::StateSpace;
use crate::system::AnalyticSystem;

/// Regions are sorted grid-point indices (ascending = lexicographic order).
pub type Region = Vec<u32>;

pub struct CoverContext<'a> {
    pub sys: &'a AnalyticSystem,
    pub grid: &'a Grid,
    pub table: &'a OrbitTable,
}

/// Outcome of one covering computation at fixed (n, eps).
#[derive(Debug, Clone)]
pub struct SpanningResult {
    pub n: usize,
    pub eps: f64,
    /// cardinality of a maximal (n, eps)-separated set (lower count)
    pub s_lower: Option<usize>,
    /// cardinality of a greedy (n, eps)-cover (upper count)
    pub r_upper: Option<usize>,
    pub grid_g: u32,
    pub method: String,
}

/// Rate estimate: slope of ln counts against n with fit diagnostics.
#[derive(Debug, Clone)]
pub struct EntropyEstimate {
    /// nats per step
    pub value: f64,
    /// effective fit window after truncation
    pub window: (usize, usize),
    /// RMS residual of the linear fit
    pub residual: f64,
    /// confidence half-width of the slope (2 standard errors)
    pub half_width: f64,
}

#[derive(Debug, Clone)]
pub struct ScaleRate {
    pub estimate: EntropyEstimate,
    /// companion slope fitted to the separated counts
    pub separated_slope: f64,
    pub counts: Vec<SpanningResult>,
    /// window was cut short because counts saturated the grid
    pub truncated: bool,
    /// window was cut short by the time budget
    pub partial: bool,
}

#[derive(Debug, Clone)]
pub struct RateOptions {
    pub window: (usize, usize),
    pub deadline: Option<Instant>,
    /// counts above this fraction of the region are treated as saturated
    pub saturation_frac: f64,
}

impl RateOptions {
    pub fn new(window: (usize, usize)) -> Self {
        RateOptions {
            window,
            deadline: None,
            saturation_frac: 0.5,
        }
    }
}

/// Regions above this size use the lexicographic sweep instead of
/// farthest-point covering.
const FARTHEST_POINT_LIMIT: usize = 100_000;

fn check_resolution(grid: &Grid, eps: f64) -> Result<()> {
    let step = grid.step();
    if step > eps / 4.0 {
        return Err(Error::ResolutionInsufficient {
            step,
            limit: eps / 4.0,
        });
    }
    Ok(())
}

/// Neighbor-bucket index over time-0 coordinates; sound because
/// `d_n >= d` makes base-far points automatically separated.
struct Buckets {
    nb: Vec<usize>,
    cells: std::collections::HashMap<Vec<i64>, Vec<u32>>,
    eps: f64,
    wrap: bool,
}

impl Buckets {
    fn new(space: &StateSpace, m: usize, eps: f64) -> Self {
        let per_dim = ((1.0 / eps).floor() as usize).max(1);
        Buckets {
            nb: vec![per_dim; m],
            cells: Default::default(),
            eps,
            wrap: matches!(space, StateSpace::Torus { .. }),
        }
    }

    fn key(&self, p: &[f64]) -> Vec<i64> {
        p.iter()
            .zip(&self.nb)
            .map(|(c, nb)| (((c / self.eps).floor() as i64).rem_euclid(*nb as i64)).min(*nb as i64 - 1))
            .collect()
    }

    fn insert(&mut self, p: &[f64], idx: u32) {
        self.cells.entry(self.key(p)).or_default().push(idx);
    }

    fn neighbors(&self, p: &[f64], out: &mut Vec<u32>) {
        out.clear();
        let key = self.key(p);
        let m = key.len();
        let mut offs = vec![-1i64; m];
        loop {
            let mut k = Vec::with_capacity(m);
            let mut valid = true;
            for c in 0..m {
                let nb = self.nb[c] as i64;
                let mut v = key[c] + offs[c];
                if self.wrap {
                    v = v.rem_euclid(nb);
                } else if v < 0 || v >= nb {
                    valid = false;
                }
                k.push(v);
            }
            if valid {
                if let Some(cell) = self.cells.get(&k) {
                    out.extend_from_slice(cell);
                }
            }
            // odometer over {-1, 0, 1}^m
            let mut c = 0;
            loop {
                if c == m {
                    return;
                }
                offs[c] += 1;
                if offs[c] <= 1 {
                    break;
                }
                offs[c] = -1;
                c += 1;
            }
        }
    }
}

/// Lexicographic greedy pass: extract a maximal set of region points pairwise
/// at least `eps` apart in `d_n` (ties count as separated). Maximality makes
/// the same set an (n, eps)-spanning set of the region.
fn lex_separated(ctx: &CoverContext, region: &Region, n: usize, eps: f64) -> Vec<u32> {
    let space = &ctx.sys.space;
    let use_buckets = space.is_flat();
    let mut buckets = Buckets::new(space, ctx.grid.dim(), eps);
    let mut selected: Vec<u32> = Vec::new();
    let mut cand = Vec::new();
    let mut coords = vec![0.0; ctx.grid.dim()];
    for &p in region {
        let sep = if use_buckets {
            ctx.grid.point(p as usize, &mut coords);
            buckets.neighbors(&coords, &mut cand);
            cand.iter()
                .all(|&s| ctx.table.separated(space, p as usize, s as usize, n, eps))
        } else {
            selected
                .iter()
                .all(|&s| ctx.table.separated(space, p as usize, s as usize, n, eps))
        };
        if sep {
            selected.push(p);
            if use_buckets {
                buckets.insert(&coords, p);
            }
        }
    }
    selected
}

/// Farthest-point greedy cover: repeatedly center a ball at the region point
/// farthest (in `d_n`) from the chosen centers, lexicographic tie-break,
/// until everything is within `eps`. Returns the number of centers.
fn farthest_point_cover(ctx: &CoverContext, region: &Region, n: usize, eps: f64) -> usize {
    let space = &ctx.sys.space;
    let nr = region.len();
    let mut mind = vec![f64::INFINITY; nr];
    let mut centers = 0usize;
    let mut next = 0usize; // lex-first start: all distances tie at infinity
    loop {
        let c = region[next] as usize;
        centers += 1;
        mind[next] = 0.0;
        let (far_idx, far_val) = mind
            .par_iter_mut()
            .enumerate()
            .map(|(j, dj)| {
                if *dj > 0.0 {
                    if let Some(d) =
                        ctx.table
                            .bowen_below(space, c, region[j] as usize, n, *dj)
                    {
                        *dj = d;
                    }
                }
                (j, *dj)
            })
            .reduce(
                || (usize::MAX, f64::NEG_INFINITY),
                |a, b| {
                    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
                        b
                    } else {
                        a
                    }
                },
            );
        if far_val <= eps + crate::grid::TIE || centers >= nr {
            return centers;
        }
        next = far_idx;
    }
}

/// Maximal-separated pass: populates `s_lower`, with the same set reported as
/// an upper-count candidate (`r_upper`).
pub fn max_separated(
    ctx: &CoverContext,
    region: &Region,
    n: usize,
    eps: f64,
) -> Result<SpanningResult> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    assert!(n >= 1);
    check_resolution(ctx.grid, eps)?;
    let set = lex_separated(ctx, region, n, eps);
    Ok(SpanningResult {
        n,
        eps,
        s_lower: Some(set.len()),
        r_upper: Some(set.len()),
        grid_g: ctx.grid.g,
        method: "lex-sweep".into(),
    })
}

/// Greedy (n, eps)-cover of the region by Bowen balls centered at grid
/// points.
pub fn greedy_spanning(
    ctx: &CoverContext,
    region: &Region,
    n: usize,
    eps: f64,
) -> Result<SpanningResult> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    assert!(n >= 1);
    check_resolution(ctx.grid, eps)?;
    let (count, method) = if region.len() <= FARTHEST_POINT_LIMIT {
        (
            farthest_point_cover(ctx, region, n, eps),
            "farthest-point".to_string(),
        )
    } else {
        (
            lex_separated(ctx, region, n, eps).len(),
            "lex-sweep".to_string(),
        )
    };
    Ok(SpanningResult {
        n,
        eps,
        s_lower: None,
        r_upper: Some(count),
        grid_g: ctx.grid.g,
        method,
    })
}

/// Both counts in one result; `r_upper` is the better (smaller) of the two
/// valid cover counts, which keeps the sandwich inequality
/// `s_lower(2 eps) <= r_upper(eps) <= s_lower(eps)` structural.
pub fn span_counts(
    ctx: &CoverContext,
    region: &Region,
    n: usize,
    eps: f64,
) -> Result<SpanningResult> {
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    assert!(n >= 1);
    check_resolution(ctx.grid, eps)?;
    let separated = lex_separated(ctx, region, n, eps).len();
    let (r_upper, method) = if region.len() <= FARTHEST_POINT_LIMIT {
        let fp = farthest_point_cover(ctx, region, n, eps);
        (fp.min(separated), "farthest-point".to_string())
    } else {
        (separated, "lex-sweep".to_string())
    };
    Ok(SpanningResult {
        n,
        eps,
        s_lower: Some(separated),
        r_upper: Some(r_upper),
        grid_g: ctx.grid.g,
        method,
    })
}

/// Ordinary least squares of `ys` against `xs`:
/// (slope, rms residual, half-width = 2 standard errors of the slope).
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let k = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let sse: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let residual = (sse / k).sqrt();
    let half_width = if xs.len() > 2 {
        2.0 * (sse / (k - 2.0) / sxx).sqrt()
    } else {
        // two-point fit carries no residual information
        0.0
    };
    (slope, residual, half_width)
}

/// Slope of `ln r_upper(n)` over the requested window, with saturated n
/// excluded and budget truncation flagged.
pub fn entropy_scale_rate(
    ctx: &CoverContext,
    region: &Region,
    eps: f64,
    opts: &RateOptions,
) -> Result<ScaleRate> {
    let (n_min, n_max) = opts.window;
    assert!(n_min >= 1 && n_max >= n_min);
    if region.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let cap = (((region.len() as f64) * opts.saturation_frac).ceil() as usize).max(1);
    let mut counts = Vec::new();
    let mut truncated = false;
    let mut partial = false;
    for n in n_min..=n_max {
        if let Some(deadline) = opts.deadline {
            if Instant::now() >= deadline {
                partial = true;
                break;
            }
        }
        let sr = span_counts(ctx, region, n, eps)?;
        let saturated = sr.s_lower.unwrap_or(0) > cap;
        counts.push(sr);
        if saturated {
            truncated = true;
            break;
        }
    }
    let usable: Vec<&SpanningResult> = counts
        .iter()
        .filter(|sr| sr.s_lower.unwrap_or(0) <= cap)
        .collect();
    if usable.len() < 3 {
        return Err(Error::WindowTooSmall {
            got: usable.len(),
            need: 3,
        });
    }
    let xs: Vec<f64> = usable.iter().map(|sr| sr.n as f64).collect();
    let ys: Vec<f64> = usable
        .iter()
        .map(|sr| (sr.r_upper.unwrap() as f64).ln())
        .collect();
    let (slope, residual, half_width) = fit_slope(&xs, &ys);
    let ys_sep: Vec<f64> = usable
        .iter()
        .map(|sr| (sr.s_lower.unwrap() as f64).ln())
        .collect();
    let (sep_slope, _, _) = fit_slope(&xs, &ys_sep);
    Ok(ScaleRate {
        estimate: EntropyEstimate {
            value: slope,
            window: (usable[0].n, usable[usable.len() - 1].n),
            residual,
            half_width,
        },
        separated_slope: sep_slope,
        counts,
        truncated,
        partial,
    })
}

/// Index of the scale whose fit headlines a ladder run: the finest scale
/// whose counts were not compromised by grid saturation. Falls back to the
/// finest scale when every fit was truncated.
pub fn headline_index(rates: &[(f64, ScaleRate)]) -> usize {
    assert!(!rates.is_empty());
    rates
        .iter()
        .rposition(|(_, r)| !r.truncated)
        .unwrap_or(rates.len() - 1)
}

/// Run `entropy_scale_rate` down a strictly decreasing eps ladder over the
/// whole grid; the entry at [`headline_index`] is the topological-entropy
/// estimate.
pub fn entropy_limit_fit(
    sys: &AnalyticSystem,
    grid_g: u32,
    eps_ladder: &[f64],
    opts: &RateOptions,
) -> Result<Vec<(f64, ScaleRate)>> {
    if eps_ladder.is_empty() {
        return Err(Error::Config("empty eps ladder".into()));
    }
    for w in eps_ladder.windows(2) {
        if w[1] >= w[0] {
            return Err(Error::Config("eps ladder must be strictly decreasing".into()));
        }
    }
    let grid = Grid::new(&sys.space, grid_g);
    let table = OrbitTable::build(sys, &grid, opts.window.1)?;
    let ctx = CoverContext {
        sys,
        grid: &grid,
        table: &table,
    };
    let region = grid.whole_region();
    let mut out = Vec::new();
    for &eps in eps_ladder {
        out.push((eps, entropy_scale_rate(&ctx, &region, eps, opts)?));
    }
    Ok(out)
}
