//! Shortest paths on a regular 2D slice of the state space.
//!
//! Independent of the variational solver: a directed graph over grid nodes
//! whose edge weights are midpoint-rule Finsler costs, solved by Dijkstra.
//! The stencil radius controls angular resolution: radius 1 is the
//! 8-connected grid, radius `r` adds every primitive offset with both
//! components at most `r`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DVector;

use super::{PathPolyline, RandersMetric};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GridSlice {
    /// State coordinates spanned by the slice.
    pub axes: (usize, usize),
    /// Values of every other coordinate.
    pub anchor: DVector<f64>,
    pub origin: (f64, f64),
    pub spacing: f64,
    /// Nodes per side.
    pub n: usize,
    pub radius: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridPath {
    pub cost: f64,
    pub nodes: Vec<(usize, usize)>,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn stencil(radius: usize) -> Vec<(isize, isize)> {
    let r = radius as isize;
    let mut out = Vec::new();
    for dx in -r..=r {
        for dy in -r..=r {
            if (dx, dy) != (0, 0) && gcd(dx.unsigned_abs(), dy.unsigned_abs()) == 1 {
                out.push((dx, dy));
            }
        }
    }
    out
}

impl GridSlice {
    pub fn node_state(&self, i: usize, j: usize) -> DVector<f64> {
        let mut s = self.anchor.clone();
        s[self.axes.0] = self.origin.0 + i as f64 * self.spacing;
        s[self.axes.1] = self.origin.1 + j as f64 * self.spacing;
        s
    }

    /// Grid node sitting exactly on `x`, if any.
    pub fn locate(&self, x: &DVector<f64>) -> Option<(usize, usize)> {
        let fi = (x[self.axes.0] - self.origin.0) / self.spacing;
        let fj = (x[self.axes.1] - self.origin.1) / self.spacing;
        let (i, j) = (fi.round(), fj.round());
        let ok = (fi - i).abs() < 1e-9 && (fj - j).abs() < 1e-9 && i >= 0.0 && j >= 0.0;
        let (i, j) = (i as usize, j as usize);
        (ok && i < self.n && j < self.n).then_some((i, j))
    }

    fn edge_cost(&self, m: &RandersMetric, i: usize, j: usize, dx: isize, dy: isize) -> f64 {
        let sub = dx.unsigned_abs().max(dy.unsigned_abs());
        let mut mid = self.anchor.clone();
        let mut d = DVector::zeros(self.anchor.len());
        d[self.axes.0] = dx as f64 * self.spacing / sub as f64;
        d[self.axes.1] = dy as f64 * self.spacing / sub as f64;
        let x0 = self.origin.0 + i as f64 * self.spacing;
        let y0 = self.origin.1 + j as f64 * self.spacing;
        let mut total = 0.0;
        for s in 0..sub {
            let t = (s as f64 + 0.5) / sub as f64;
            mid[self.axes.0] = x0 + t * dx as f64 * self.spacing;
            mid[self.axes.1] = y0 + t * dy as f64 * self.spacing;
            total += m.eval(mid.as_slice(), d.as_slice());
        }
        total
    }

    pub fn shortest_path(&self, m: &RandersMetric, from: (usize, usize), to: (usize, usize)) -> Result<GridPath> {
        let n = self.n;
        if from.0 >= n || from.1 >= n || to.0 >= n || to.1 >= n {
            return Err(Error::domain("grid endpoint outside the slice"));
        }
        if self.anchor.len() != m.dim() || self.axes.0 == self.axes.1 {
            return Err(Error::structural("slice does not fit the metric"));
        }
        let moves = stencil(self.radius.max(1));
        let idx = |i: usize, j: usize| i * n + j;
        let mut dist = vec![f64::INFINITY; n * n];
        let mut prev = vec![usize::MAX; n * n];
        let mut heap = BinaryHeap::new();
        dist[idx(from.0, from.1)] = 0.0;
        heap.push(Entry(0.0, idx(from.0, from.1)));
        let target = idx(to.0, to.1);
        while let Some(Entry(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if u == target {
                break;
            }
            let (i, j) = (u / n, u % n);
            for &(dx, dy) in &moves {
                let (ni, nj) = (i as isize + dx, j as isize + dy);
                if ni < 0 || nj < 0 || ni >= n as isize || nj >= n as isize {
                    continue;
                }
                let v = idx(ni as usize, nj as usize);
                let nd = d + self.edge_cost(m, i, j, dx, dy);
                if nd < dist[v] {
                    dist[v] = nd;
                    prev[v] = u;
                    heap.push(Entry(nd, v));
                }
            }
        }
        if !dist[target].is_finite() {
            return Err(Error::Numeric("grid target unreachable".into()));
        }
        let mut nodes = vec![to];
        let mut u = target;
        while prev[u] != usize::MAX {
            u = prev[u];
            nodes.push((u / n, u % n));
        }
        nodes.reverse();
        Ok(GridPath {
            cost: dist[target],
            nodes,
        })
    }
}

impl GridPath {
    /// The node sequence as a polyline of `n` points equally spaced in
    /// Euclidean arc length along the slice.
    pub fn resample(&self, slice: &GridSlice, n: usize) -> Result<PathPolyline> {
        if n < 2 || self.nodes.len() < 2 {
            return Err(Error::domain("resampling needs at least two nodes and two points"));
        }
        let pts: Vec<DVector<f64>> = self.nodes.iter().map(|&(i, j)| slice.node_state(i, j)).collect();
        let mut acc = vec![0.0];
        for w in pts.windows(2) {
            acc.push(acc.last().copied().unwrap_or(0.0) + (&w[1] - &w[0]).norm());
        }
        let total = acc[acc.len() - 1];
        let mut seg = 0;
        let out = (0..n)
            .map(|q| {
                if q == n - 1 {
                    return pts[pts.len() - 1].clone();
                }
                let s = total * q as f64 / (n - 1) as f64;
                while seg + 2 < acc.len() && acc[seg + 1] < s {
                    seg += 1;
                }
                let len = acc[seg + 1] - acc[seg];
                let t = if len > 0.0 { (s - acc[seg]) / len } else { 0.0 };
                &pts[seg] + (&pts[seg + 1] - &pts[seg]) * t
            })
            .collect();
        PathPolyline::new(out)
    }
}
