use std::thread;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;

use phygital_core::finsler::grid::GridSlice;
use phygital_core::finsler::{distance as solve_distance, geodesic, geodesic_from, Bump, Conformal, Geodesic, PathPolyline, RandersMetric};
use phygital_core::DimensionLayout;

use super::Output;
use crate::config::{DistanceCfg, OracleCfg};
use crate::output::{num, nums, Table};
use crate::seed::Seeder;

#[derive(Serialize)]
struct Leg {
    cost: f64,
    straight_cost: f64,
    iterations: usize,
    converged: bool,
}

impl From<&Geodesic> for Leg {
    fn from(g: &Geodesic) -> Self {
        Self { cost: g.cost, straight_cost: g.straight_cost, iterations: g.iterations, converged: g.converged }
    }
}

fn path_table(name: &str, p: &PathPolyline) -> Table {
    let dim = p.waypoints()[0].len();
    let header = std::iter::once("waypoint".to_string()).chain((0..dim).map(|i| format!("x{i}")));
    let rows = p
        .waypoints()
        .iter()
        .enumerate()
        .map(|(i, w)| std::iter::once(i.to_string()).chain(nums(w.as_slice())).collect())
        .collect();
    Table::csv(name, header, rows)
}

pub fn distance(cfg: &DistanceCfg, layout: DimensionLayout) -> phygital_core::Result<Output> {
    #[derive(Serialize)]
    struct Summary {
        delta_xy: f64,
        delta_yx: f64,
        gap: f64,
        /// `2φ·bᵀ(y − x)`, exact when φ is constant.
        analytic_gap: Option<f64>,
        forward: Leg,
        backward: Leg,
    }
    let m = cfg.metric.build(layout);
    let x = DVector::from_column_slice(&cfg.from);
    let y = DVector::from_column_slice(&cfg.to);
    let d = solve_distance(&m, &x, &y, cfg.waypoints, &cfg.descent)?;
    let mut out = Output::default();
    if !(d.forward.converged && d.backward.converged) {
        out.warn("geodesic descent stopped at its iteration budget");
    }
    let analytic_gap = match m.phi {
        Conformal::Constant { value } => Some(2.0 * value * m.b.dot(&(&y - &x))),
        Conformal::Bumps { .. } => None,
    };
    out.tables.push(Table::json(
        "distance.json",
        &Summary {
            delta_xy: d.delta_xy,
            delta_yx: d.delta_yx,
            gap: d.gap,
            analytic_gap,
            forward: (&d.forward).into(),
            backward: (&d.backward).into(),
        },
    ));
    out.tables.push(path_table("forward_path.csv", &d.forward.path));
    out.tables.push(path_table("backward_path.csv", &d.backward.path));
    Ok(out)
}

/// A random planar instance: the social coordinate is decoupled and carries
/// no drift, and every bump sits on the plane, so the plane is invariant and
/// the grid slice sees the full problem.
struct Instance {
    metric: RandersMetric,
    from: (usize, usize),
    to: (usize, usize),
}

fn planar_instance(rng: &mut impl Rng, grid: usize) -> Instance {
    let l = [rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3)];
    let a2 = DMatrix::from_row_slice(2, 2, &[1.0 + l[0], l[1], 0.0, 1.0 + l[2]]);
    let a2 = &a2 * a2.transpose() + DMatrix::identity(2, 2) * 0.1;
    let mut a = DMatrix::identity(3, 3);
    a.view_mut((0, 0), (2, 2)).copy_from(&a2);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let s: f64 = rng.random_range(0.0..0.5);
    let dir = DVector::from_column_slice(&[theta.cos(), theta.sin()]);
    let q = a2.clone().cholesky().expect("SPD by construction").solve(&dir).dot(&dir);
    let b2 = dir * (s / q.sqrt());
    let b = DVector::from_column_slice(&[b2[0], b2[1], 0.0]);
    let count = rng.random_range(1..=3);
    let bumps = (0..count)
        .map(|_| Bump {
            amplitude: rng.random_range(0.5..3.0),
            center: vec![rng.random_range(-0.6..0.6), rng.random_range(-0.6..0.6), 0.0],
            width: rng.random_range(0.15..0.35),
        })
        .collect();
    // Endpoints on opposite sides of the box so the path has to cross the field.
    let margin = grid / 10;
    let lo = margin..grid / 4;
    let hi = grid - grid / 4..grid - margin;
    let (from, to) = if rng.random_bool(0.5) {
        ((rng.random_range(lo.clone()), rng.random_range(margin..grid - margin)), (rng.random_range(hi.clone()), rng.random_range(margin..grid - margin)))
    } else {
        ((rng.random_range(margin..grid - margin), rng.random_range(lo)), (rng.random_range(margin..grid - margin), rng.random_range(hi)))
    };
    Instance { metric: RandersMetric::new(a, b, Conformal::Bumps { bumps }), from, to }
}

#[derive(Debug, Clone, Serialize)]
struct OracleRow {
    instance: usize,
    grid_cost: f64,
    straight_start: f64,
    grid_start: f64,
    variational: f64,
    rel_gap: f64,
    pass: bool,
}

#[derive(Debug, Clone, Serialize)]
struct GapRow {
    case: usize,
    delta_xy: f64,
    delta_yx: f64,
    gap: f64,
    analytic: f64,
    error: f64,
    pass: bool,
}

pub fn oracle(cfg: &OracleCfg, seeder: &Seeder) -> phygital_core::Result<Output> {
    let mut rng = seeder.rng("geodesic_oracle/bumps");
    let instances: Vec<Instance> = (0..cfg.instances).map(|_| planar_instance(&mut rng, cfg.grid)).collect();
    let slice = GridSlice {
        axes: (0, 1),
        anchor: DVector::zeros(3),
        origin: (-1.0, -1.0),
        spacing: 2.0 / (cfg.grid - 1) as f64,
        n: cfg.grid,
        radius: cfg.radius,
    };
    let solve = |inst: &Instance| -> phygital_core::Result<(f64, f64, f64)> {
        let m = &inst.metric;
        let grid = slice.shortest_path(m, inst.from, inst.to)?;
        let x = slice.node_state(inst.from.0, inst.from.1);
        let y = slice.node_state(inst.to.0, inst.to.1);
        let straight = geodesic(m, &x, &y, cfg.waypoints, &cfg.descent)?;
        let seeded = geodesic_from(m, &grid.resample(&slice, cfg.waypoints)?, &cfg.descent)?;
        Ok((grid.cost, straight.cost, seeded.cost))
    };
    // Instances are independent; each worker takes a fixed stride so the
    // output order never depends on scheduling.
    let workers = thread::available_parallelism().map_or(1, |n| n.get()).min(instances.len().max(1));
    let results: Vec<phygital_core::Result<(f64, f64, f64)>> = thread::scope(|s| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let (instances, solve) = (&instances, &solve);
                s.spawn(move || instances.iter().enumerate().skip(w).step_by(workers).map(|(i, inst)| (i, solve(inst))).collect::<Vec<_>>())
            })
            .collect();
        let mut all: Vec<_> = handles.into_iter().flat_map(|h| h.join().expect("oracle worker panicked")).collect();
        all.sort_by_key(|(i, _)| *i);
        all.into_iter().map(|(_, r)| r).collect()
    });
    let mut rows = Vec::with_capacity(instances.len());
    for (i, r) in results.into_iter().enumerate() {
        let (grid_cost, straight_start, grid_start) = r?;
        let variational = straight_start.min(grid_start);
        let rel_gap = (variational - grid_cost).abs() / grid_cost;
        rows.push(OracleRow { instance: i, grid_cost, straight_start, grid_start, variational, rel_gap, pass: rel_gap < cfg.tolerance });
    }

    let mut rng = seeder.rng("geodesic_oracle/constant");
    let mut gaps = Vec::with_capacity(cfg.constant_cases);
    for case in 0..cfg.constant_cases {
        let l = DMatrix::<f64>::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let a = &l * l.transpose() + DMatrix::identity(3, 3) * 0.2;
        let dir = DVector::<f64>::from_fn(3, |_, _| rng.random_range(-1.0..1.0));
        let q = a.clone().cholesky().expect("SPD by construction").solve(&dir).dot(&dir);
        let b = dir * (rng.random_range(0.0f64..0.9) / q.sqrt());
        let x = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
        let y = DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
        let m = RandersMetric::new(a, b, Conformal::default());
        let d = solve_distance(&m, &x, &y, 8, &cfg.descent)?;
        let analytic = 2.0 * m.b.dot(&(&y - &x));
        let error = (d.gap - analytic).abs();
        gaps.push(GapRow { case, delta_xy: d.delta_xy, delta_yx: d.delta_yx, gap: d.gap, analytic, error, pass: error < 1e-6 });
    }

    #[derive(Serialize)]
    struct Summary {
        instances: usize,
        within_tolerance: usize,
        max_rel_gap: f64,
        tolerance: f64,
        constant_cases: usize,
        max_gap_error: f64,
        pass: bool,
    }
    let summary = Summary {
        instances: rows.len(),
        within_tolerance: rows.iter().filter(|r| r.pass).count(),
        max_rel_gap: rows.iter().map(|r| r.rel_gap).fold(0.0, f64::max),
        tolerance: cfg.tolerance,
        constant_cases: gaps.len(),
        max_gap_error: gaps.iter().map(|g| g.error).fold(0.0, f64::max),
        pass: rows.iter().all(|r| r.pass) && gaps.iter().all(|g| g.pass),
    };
    let mut out = Output::default();
    if !summary.pass {
        out.warn("geodesic oracle: some instances fall outside tolerance");
    }
    out.tables.push(Table::csv(
        "oracle.csv",
        ["instance", "grid_cost", "straight_start", "grid_start", "variational", "rel_gap", "pass"],
        rows.iter()
            .map(|r| {
                vec![r.instance.to_string(), num(r.grid_cost), num(r.straight_start), num(r.grid_start), num(r.variational), num(r.rel_gap), r.pass.to_string()]
            })
            .collect(),
    ));
    out.tables.push(Table::csv(
        "gap.csv",
        ["case", "delta_xy", "delta_yx", "gap", "analytic", "error", "pass"],
        gaps.iter()
            .map(|g| vec![g.case.to_string(), num(g.delta_xy), num(g.delta_yx), num(g.gap), num(g.analytic), num(g.error), g.pass.to_string()])
            .collect(),
    ));
    out.tables.push(Table::json("summary.json", &summary));
    Ok(out)
}
