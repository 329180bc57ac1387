//! Axis-aligned box domains, evaluation grids, and sup-norm measurement.
//!
//! Approximation targets live on a box `[lo_1, hi_1] × … × [lo_n, hi_n]`.
//! Certificates are measured as the maximum absolute difference between two
//! functions over a regular grid; that measurement must be deterministic —
//! bit-identical across runs and across thread counts — so the grid walk is
//! split into fixed-size chunks whose results are merged in chunk order, and
//! every grid point is computed from its linear index by the same arithmetic
//! no matter which thread touches it.

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Points per grid chunk. Fixed so chunk boundaries, and therefore merge
/// order and tie-breaking, never depend on the thread count.
const CHUNK: usize = 4096;

/// An axis-aligned box `[lo_i, hi_i]` per axis, with `lo_i < hi_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl BoxDomain {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Structure(format!(
                "domain needs matching nonempty bounds, got {} lows and {} highs",
                lo.len(),
                hi.len()
            )));
        }
        for (i, (a, b)) in lo.iter().zip(&hi).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(Error::Structure(format!("domain axis {i} has a non-finite bound")));
            }
            if a >= b {
                return Err(Error::Structure(format!(
                    "domain axis {i} is degenerate: [{a}, {b}]"
                )));
            }
        }
        Ok(BoxDomain { lo, hi })
    }

    /// The interval `[lo, hi]` as a one-dimensional box.
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        BoxDomain::new(vec![lo], vec![hi])
    }

    /// The symmetric box `[-r, r]^dim`.
    pub fn symmetric(r: f64, dim: usize) -> Result<Self> {
        BoxDomain::new(vec![-r; dim], vec![r; dim])
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn side(&self, axis: usize) -> (f64, f64) {
        (self.lo[axis], self.hi[axis])
    }

    /// The longest axis length.
    pub fn max_side(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| b - a)
            .fold(0.0, f64::max)
    }

    /// Largest |coordinate| over the whole box.
    pub fn max_abs_coord(&self) -> f64 {
        self.lo
            .iter()
            .chain(&self.hi)
            .map(|v| v.abs())
            .fold(0.0, f64::max)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(v, (a, b))| *v >= *a && *v <= *b)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    /// A uniform random point in the box.
    pub fn sample(&self, rng: &mut SplitMix64) -> Vec<f64> {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(a, b)| rng.uniform_in(*a, *b))
            .collect()
    }

    /// The `k`-th of `m` evenly spaced points on `axis`, endpoints included.
    /// `m == 1` yields the axis midpoint. The arithmetic is a pure function
    /// of `(axis bounds, k, m)` so every caller gets identical bits.
    pub fn axis_point(&self, axis: usize, k: usize, m: usize) -> f64 {
        let (a, b) = self.side(axis);
        if m == 1 {
            0.5 * (a + b)
        } else if k == m - 1 {
            b
        } else {
            a + k as f64 * ((b - a) / (m - 1) as f64)
        }
    }

    /// All `m` grid points of one axis.
    pub fn axis_grid(&self, axis: usize, m: usize) -> Vec<f64> {
        (0..m).map(|k| self.axis_point(axis, k, m)).collect()
    }

    /// Total number of points in the full grid with `per_axis` points per
    /// axis. Errors if the count overflows practical limits.
    pub fn grid_len(&self, per_axis: usize) -> Result<usize> {
        let mut total: usize = 1;
        for _ in 0..self.dim() {
            total = total.checked_mul(per_axis).ok_or_else(|| {
                Error::Structure(format!(
                    "grid of {per_axis}^{} points does not fit in memory",
                    self.dim()
                ))
            })?;
        }
        Ok(total)
    }

    /// Grid point by linear index, row-major (axis 0 slowest).
    pub fn grid_point(&self, mut idx: usize, per_axis: usize) -> Vec<f64> {
        let n = self.dim();
        let mut digits = vec![0usize; n];
        for axis in (0..n).rev() {
            digits[axis] = idx % per_axis;
            idx /= per_axis;
        }
        digits
            .iter()
            .enumerate()
            .map(|(axis, &k)| self.axis_point(axis, k, per_axis))
            .collect()
    }

    /// Iterator over the full grid in linear-index order.
    pub fn grid(&self, per_axis: usize) -> GridIter<'_> {
        GridIter { domain: self, per_axis, next: 0, len: self.grid_len(per_axis).unwrap_or(0) }
    }
}

/// Row-major iterator over a box grid.
pub struct GridIter<'a> {
    domain: &'a BoxDomain,
    per_axis: usize,
    next: usize,
    len: usize,
}

impl Iterator for GridIter<'_> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        if self.next >= self.len {
            return None;
        }
        let p = self.domain.grid_point(self.next, self.per_axis);
        self.next += 1;
        Some(p)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.len - self.next;
        (rem, Some(rem))
    }
}

/// Default measurement density (points per axis) by dimension: dense in one
/// dimension, coarser as the tensor grid grows.
pub fn default_grid_density(dim: usize) -> usize {
    match dim {
        0 | 1 => 2000,
        2 => 200,
        _ => 40,
    }
}

/// Result of a sup-norm measurement: the maximum |f - g| seen and where.
#[derive(Debug, Clone, PartialEq)]
pub struct SupResult {
    pub sup: f64,
    pub at: Vec<f64>,
}

struct ChunkOutcome {
    chunk: usize,
    max: f64,
    arg: usize,
    err: Option<Error>,
}

/// Maximum of `|f(x) - g(x)|` over the `per_axis`-per-axis grid.
///
/// Runs on `threads` OS threads (clamped to at least 1). The grid is cut
/// into fixed 4096-point chunks handed out round-robin; chunk results are
/// merged in chunk order with ties resolved toward the lowest linear index,
/// so the outcome is bit-identical for every thread count. The first
/// evaluation error in grid order wins.
pub fn sup_abs_diff<F, G>(
    domain: &BoxDomain,
    per_axis: usize,
    threads: usize,
    f: &F,
    g: &G,
) -> Result<SupResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    G: Fn(&[f64]) -> Result<f64> + Sync,
{
    let total = domain.grid_len(per_axis)?;
    if total == 0 {
        return Err(Error::Structure("cannot measure on an empty grid".into()));
    }
    let chunks = total.div_ceil(CHUNK);
    let workers = threads.max(1).min(chunks);

    let run_chunk = |chunk: usize| -> ChunkOutcome {
        let start = chunk * CHUNK;
        let end = (start + CHUNK).min(total);
        let mut best = f64::NEG_INFINITY;
        let mut arg = start;
        for idx in start..end {
            let x = domain.grid_point(idx, per_axis);
            let diff = match (f(&x), g(&x)) {
                (Ok(a), Ok(b)) => (a - b).abs(),
                (Err(e), _) | (_, Err(e)) => {
                    return ChunkOutcome { chunk, max: best, arg, err: Some(e) }
                }
            };
            if diff > best {
                best = diff;
                arg = idx;
            }
        }
        ChunkOutcome { chunk, max: best, arg, err: None }
    };

    let mut outcomes: Vec<ChunkOutcome> = if workers == 1 {
        (0..chunks).map(run_chunk).collect()
    } else {
        std::thread::scope(|scope| {
            let handles: Vec<_> = (0..workers)
                .map(|t| {
                    let run_chunk = &run_chunk;
                    scope.spawn(move || {
                        let mut local = Vec::new();
                        let mut c = t;
                        while c < chunks {
                            local.push(run_chunk(c));
                            c += workers;
                        }
                        local
                    })
                })
                .collect();
            let mut all = Vec::with_capacity(chunks);
            for h in handles {
                all.extend(h.join().expect("measurement worker panicked"));
            }
            all
        })
    };
    outcomes.sort_by_key(|o| o.chunk);

    let mut best = f64::NEG_INFINITY;
    let mut arg = 0usize;
    for o in outcomes {
        if let Some(e) = o.err {
            return Err(e);
        }
        if o.max > best {
            best = o.max;
            arg = o.arg;
        }
    }
    Ok(SupResult { sup: best, at: domain.grid_point(arg, per_axis) })
}

/// Sup-norm distance between a network-style function and a plain target.
pub fn sup_against<F, T>(
    domain: &BoxDomain,
    per_axis: usize,
    threads: usize,
    f: &F,
    target: &T,
) -> Result<SupResult>
where
    F: Fn(&[f64]) -> Result<f64> + Sync,
    T: Fn(&[f64]) -> f64 + Sync,
{
    sup_abs_diff(domain, per_axis, threads, f, &|x: &[f64]| Ok(target(x)))
}
