//! Variational geodesics: interior waypoints of a polyline are moved by a
//! limited-memory quasi-Newton descent on the polyline path cost, with
//! central finite-difference gradients.

use std::collections::VecDeque;

use nalgebra::DVector;
use serde::Serialize;

use super::{segment_cost, PathPolyline, RandersMetric};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DescentSettings {
    pub max_iter: usize,
    /// Stop once the largest gradient component falls below this.
    pub grad_tol: f64,
    /// Stop once a step improves the cost by less than this (relative).
    pub rel_tol: f64,
    /// Finite-difference step for the path gradient.
    pub fd_step: f64,
    /// Curvature pairs kept by the quasi-Newton update.
    pub memory: usize,
}

impl Default for DescentSettings {
    fn default() -> Self {
        Self {
            max_iter: 4000,
            grad_tol: 1e-8,
            rel_tol: 1e-14,
            fd_step: 1e-5,
            memory: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Geodesic {
    pub path: PathPolyline,
    pub cost: f64,
    pub straight_cost: f64,
    pub iterations: usize,
    /// False when the iteration budget ran out before a stopping criterion
    /// was met; `path` is then the best one found.
    pub converged: bool,
}

struct Problem<'a> {
    metric: &'a RandersMetric,
    dim: usize,
    /// All waypoints, flattened; the first and last stay fixed.
    pts: Vec<f64>,
    mid: Vec<f64>,
    d: Vec<f64>,
}

impl Problem<'_> {
    fn n_points(&self) -> usize {
        self.pts.len() / self.dim
    }

    fn seg(&mut self, i: usize) -> f64 {
        let dim = self.dim;
        let (a, b) = self.pts[i * dim..(i + 2) * dim].split_at(dim);
        segment_cost(self.metric, a, b, &mut self.mid, &mut self.d)
    }

    fn cost(&mut self) -> f64 {
        (0..self.n_points() - 1).map(|i| self.seg(i)).sum()
    }

    /// Gradient over interior coordinates. Only the two segments touching
    /// a waypoint depend on it.
    fn gradient(&mut self, h: f64, out: &mut [f64]) {
        let dim = self.dim;
        for p in 1..self.n_points() - 1 {
            for c in 0..dim {
                let idx = p * dim + c;
                let orig = self.pts[idx];
                self.pts[idx] = orig + h;
                let plus = self.seg(p - 1) + self.seg(p);
                self.pts[idx] = orig - h;
                let minus = self.seg(p - 1) + self.seg(p);
                self.pts[idx] = orig;
                out[(p - 1) * dim + c] = (plus - minus) / (2.0 * h);
            }
        }
    }

    fn interior(&self) -> &[f64] {
        let dim = self.dim;
        let n = self.pts.len();
        &self.pts[dim..n - dim]
    }

    fn set_interior(&mut self, x: &[f64]) {
        let dim = self.dim;
        let n = self.pts.len();
        self.pts[dim..n - dim].copy_from_slice(x);
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Two-loop recursion: `dir = -H·g`.
fn lbfgs_direction(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, dir: &mut [f64]) {
    dir.copy_from_slice(g);
    let mut alphas = Vec::with_capacity(hist.len());
    for (s, y, rho) in hist.iter().rev() {
        let a = rho * dot(s, dir);
        for (d, yi) in dir.iter_mut().zip(y) {
            *d -= a * yi;
        }
        alphas.push(a);
    }
    if let Some((s, y, _)) = hist.back() {
        let gamma = dot(s, y) / dot(y, y);
        dir.iter_mut().for_each(|d| *d *= gamma);
    }
    for ((s, y, rho), a) in hist.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, dir);
        for (d, si) in dir.iter_mut().zip(s) {
            *d += (a - b) * si;
        }
    }
    dir.iter_mut().for_each(|d| *d = -*d);
}

/// Locally cost-minimizing polyline from `x` to `y` with `n_waypoints`
/// points, starting from the straight line. When several local optima
/// exist, the one reached from the straight-line start is returned.
pub fn geodesic(
    metric: &RandersMetric,
    x: &DVector<f64>,
    y: &DVector<f64>,
    n_waypoints: usize,
    opt: &DescentSettings,
) -> Result<Geodesic> {
    let dim = metric.dim();
    if x.len() != dim || y.len() != dim {
        return Err(Error::structural("endpoint dimension does not match the metric"));
    }
    if x == y {
        return Err(Error::domain("geodesic endpoints must differ"));
    }
    if n_waypoints < 2 {
        return Err(Error::domain("a geodesic needs at least two waypoints"));
    }
    geodesic_from(metric, &PathPolyline::straight(x, y, n_waypoints)?, opt)
}

/// Same descent as [`geodesic`], started from an arbitrary polyline. The
/// endpoints of `initial` stay fixed; use it to pick the homotopy class.
pub fn geodesic_from(metric: &RandersMetric, initial: &PathPolyline, opt: &DescentSettings) -> Result<Geodesic> {
    let dim = metric.dim();
    let wp = initial.waypoints();
    let n_waypoints = wp.len();
    let (x, y) = (&wp[0], &wp[n_waypoints - 1]);
    if x.len() != dim {
        return Err(Error::structural("path dimension does not match the metric"));
    }
    if x == y {
        return Err(Error::domain("geodesic endpoints must differ"));
    }
    let straight = PathPolyline::straight(x, y, n_waypoints)?;
    let straight_cost = metric.path_cost(&straight);
    let mut prob = Problem {
        metric,
        dim,
        pts: wp.iter().flat_map(|w| w.iter().copied()).collect(),
        mid: vec![0.0; dim],
        d: vec![0.0; dim],
    };
    let initial_cost = prob.cost();
    if !initial_cost.is_finite() {
        return Err(Error::Numeric("initial path cost is not finite".into()));
    }

    let nvar = (n_waypoints - 2) * dim;
    let mut cost = initial_cost;
    let mut iterations = 0;
    let mut converged = nvar == 0;
    if nvar > 0 {
        let mut xk = prob.interior().to_vec();
        let mut g = vec![0.0; nvar];
        let mut g_new = vec![0.0; nvar];
        let mut dir = vec![0.0; nvar];
        let mut trial = vec![0.0; nvar];
        let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
        prob.gradient(opt.fd_step, &mut g);
        let scale = (y - x).norm();

        while iterations < opt.max_iter {
            if inf_norm(&g) < opt.grad_tol {
                converged = true;
                break;
            }
            iterations += 1;
            lbfgs_direction(&g, &hist, &mut dir);
            let mut slope = dot(&g, &dir);
            if !(slope < 0.0) {
                hist.clear();
                dir.iter_mut().zip(&g).for_each(|(d, gi)| *d = -gi);
                slope = dot(&g, &dir);
            }
            // First iterations have no curvature information: cap the move.
            let mut step = if hist.is_empty() {
                (0.1 * scale / inf_norm(&dir)).min(1.0)
            } else {
                1.0
            };
            let mut accepted = None;
            for _ in 0..60 {
                for i in 0..nvar {
                    trial[i] = xk[i] + step * dir[i];
                }
                prob.set_interior(&trial);
                let c = prob.cost();
                if c.is_finite() && c <= cost + 1e-4 * step * slope {
                    accepted = Some(c);
                    break;
                }
                step *= 0.5;
            }
            let Some(c_new) = accepted else {
                // No decrease representable along the direction: we are at
                // the resolution limit of the finite-difference gradient.
                prob.set_interior(&xk);
                converged = true;
                break;
            };
            prob.gradient(opt.fd_step, &mut g_new);
            let s: Vec<f64> = trial.iter().zip(&xk).map(|(a, b)| a - b).collect();
            let yv: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &yv);
            if sy > 1e-16 * dot(&s, &s).sqrt() * dot(&yv, &yv).sqrt() && sy > 0.0 {
                if hist.len() == opt.memory.max(1) {
                    hist.pop_front();
                }
                hist.push_back((s, yv, 1.0 / sy));
            }
            let improvement = cost - c_new;
            xk.copy_from_slice(&trial);
            std::mem::swap(&mut g, &mut g_new);
            cost = c_new;
            if improvement <= opt.rel_tol * cost.abs() && inf_norm(&g) < 1e3 * opt.grad_tol.max(1e-12) {
                converged = true;
                break;
            }
        }
        prob.set_interior(&xk);
        cost = prob.cost();
    }

    if !converged {
        log::warn!("geodesic descent hit the iteration budget ({}) before converging", opt.max_iter);
    }
    let pts = prob
        .pts
        .chunks(dim)
        .map(DVector::from_column_slice)
        .collect::<Vec<_>>();
    // The descent never accepts an increase, so this only trips on NaN.
    debug_assert!(cost <= initial_cost + 1e-9);
    Ok(Geodesic {
        path: PathPolyline { waypoints: pts },
        cost,
        straight_cost,
        iterations,
        converged,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Distance {
    pub forward: Geodesic,
    pub backward: Geodesic,
    /// `δ(x, y)`.
    pub delta_xy: f64,
    /// `δ(y, x)`.
    pub delta_yx: f64,
    /// `δ(x, y) − δ(y, x)`.
    pub gap: f64,
}

/// Solves the geodesic problem in both directions (concurrently).
pub fn distance(
    metric: &RandersMetric,
    x: &DVector<f64>,
    y: &DVector<f64>,
    n_waypoints: usize,
    opt: &DescentSettings,
) -> Result<Distance> {
    let (fwd, bwd) = std::thread::scope(|s| {
        let h = s.spawn(|| geodesic(metric, y, x, n_waypoints, opt));
        let f = geodesic(metric, x, y, n_waypoints, opt);
        (f, h.join().expect("geodesic worker panicked"))
    });
    let (forward, backward) = (fwd?, bwd?);
    let delta_xy = forward.cost;
    let delta_yx = backward.cost;
    Ok(Distance {
        forward,
        backward,
        delta_xy,
        delta_yx,
        gap: delta_xy - delta_yx,
    })
}

#[cfg(test)]
mod tests {
    use super::super::Conformal;
    use super::*;
    use nalgebra::DMatrix;

    fn dv(c: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(c)
    }

    #[test]
    fn constant_metric_gives_straight_line() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 1.0]);
        let m = RandersMetric::new(a, dv(&[0.2, -0.3, 0.1]), Conformal::Constant { value: 1.5 });
        let x = dv(&[0.0, 0.0, 0.0]);
        let y = dv(&[1.0, -0.5, 2.0]);
        let g = geodesic(&m, &x, &y, 12, &DescentSettings::default()).unwrap();
        let direct = m.eval(&[0.0; 3], (&y - &x).as_slice());
        assert!((g.cost - direct).abs() < 1e-6, "{} vs {}", g.cost, direct);
        assert!(g.converged);
    }

    #[test]
    fn bump_bends_the_geodesic() {
        let mut m = RandersMetric::riemannian(DMatrix::identity(3, 3));
        m.phi = Conformal::bump(5.0, vec![0.0, 0.08, 0.0], 0.25);
        let x = dv(&[-1.0, 0.0, 0.0]);
        let y = dv(&[1.0, 0.0, 0.0]);
        let g = geodesic(&m, &x, &y, 40, &DescentSettings::default()).unwrap();
        assert!(g.cost < g.straight_cost - 0.1);
        let max_dev = g.path.waypoints().iter().map(|w| w[1].abs()).fold(0.0, f64::max);
        assert!(max_dev > 0.2, "path did not bend: {max_dev}");
    }

    #[test]
    fn distance_examples() {
        let x = dv(&[0.0, 0.0, 0.0]);
        let y = dv(&[1.0, 0.0, 0.0]);
        let m = RandersMetric::riemannian(DMatrix::identity(3, 3));
        let d = distance(&m, &x, &y, 8, &DescentSettings::default()).unwrap();
        assert!((d.delta_xy - 1.0).abs() < 1e-9);
        assert!((d.delta_yx - 1.0).abs() < 1e-9);
        assert!(d.gap.abs() < 1e-9);
        let m = RandersMetric::new(DMatrix::identity(3, 3), dv(&[0.5, 0.0, 0.0]), Conformal::default());
        let d = distance(&m, &x, &y, 8, &DescentSettings::default()).unwrap();
        assert!((d.delta_xy - 1.5).abs() < 1e-9);
        assert!((d.delta_yx - 0.5).abs() < 1e-9);
        assert!((d.gap - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rejects_degenerate_requests() {
        let m = RandersMetric::riemannian(DMatrix::identity(3, 3));
        let x = dv(&[0.0, 0.0, 0.0]);
        assert!(geodesic(&m, &x, &x, 5, &DescentSettings::default()).is_err());
        assert!(geodesic(&m, &x, &dv(&[1.0, 0.0, 0.0]), 1, &DescentSettings::default()).is_err());
        assert!(geodesic(&m, &x, &dv(&[1.0, 0.0]), 5, &DescentSettings::default()).is_err());
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let mut m = RandersMetric::riemannian(DMatrix::identity(3, 3));
        m.phi = Conformal::bump(5.0, vec![0.0, 0.08, 0.0], 0.25);
        let opt = DescentSettings { max_iter: 2, ..Default::default() };
        let g = geodesic(&m, &dv(&[-1.0, 0.0, 0.0]), &dv(&[1.0, 0.0, 0.0]), 30, &opt).unwrap();
        assert!(!g.converged);
        assert!(g.cost <= g.straight_cost);
    }
}
