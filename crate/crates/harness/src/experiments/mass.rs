use nalgebra::{Matrix3, Vector3};
use serde::Serialize;

use phygital_core::MassTensor;

use super::Output;
use crate::config::MassCfg;
use crate::output::{num, Table};

fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

#[derive(Serialize)]
struct TensorReport {
    id: String,
    rank: usize,
    present: Vec<&'static str>,
    eigenvalues: [f64; 3],
    pseudoinverse: [[f64; 3]; 3],
    /// Largest entry of `μμ⁺μ − μ`, `μ⁺μμ⁺ − μ⁺`, and the asymmetry of
    /// `μμ⁺` and `μ⁺μ`.
    penrose_residuals: [f64; 4],
    force: Option<[f64; 3]>,
    response: Option<[f64; 3]>,
    transparent: Option<bool>,
}

pub fn run(cfg: &MassCfg) -> phygital_core::Result<Output> {
    let mut reports = Vec::with_capacity(cfg.tensors.len());
    for t in &cfg.tensors {
        let m = MassTensor::new(Matrix3::from_fn(|i, j| t.matrix[i][j]))?;
        let a = m.matrix();
        let p = m.pseudoinverse();
        let class = m.classify();
        let mut ev: Vec<f64> = m.eigen().eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let force = t.force.map(Vector3::from);
        reports.push(TensorReport {
            id: t.id.clone(),
            rank: class.rank,
            present: class.present.iter().map(|b| b.tag()).collect(),
            eigenvalues: [ev[0], ev[1], ev[2]],
            pseudoinverse: rows(&p),
            penrose_residuals: [
                (a * p * a - a).amax(),
                (p * a * p - p).amax(),
                ((a * p).transpose() - a * p).amax(),
                ((p * a).transpose() - p * a).amax(),
            ],
            force: t.force,
            response: force.map(|f| m.respond(&f).into()),
            transparent: force.map(|f| m.is_transparent_to(&f)),
        });
    }
    let mut lock_in = Vec::with_capacity(cfg.lock_in.len());
    for &c in &cfg.lock_in {
        let m = MassTensor::from_parts([1.0, 1.0, 1.0], c, 0.0, 0.0)?;
        let cross = m.respond(&Vector3::new(0.0, 1.0, 0.0))[0].abs();
        lock_in.push(vec![num(c), num(cross), num(c / (1.0 - c * c))]);
    }
    let mut out = Output::default();
    if cfg.lock_in.windows(2).all(|w| w[0] < w[1]) {
        let resp: Vec<f64> = lock_in.iter().map(|r| r[1].parse().unwrap_or(f64::NAN)).collect();
        if !resp.windows(2).all(|w| w[0] < w[1]) {
            out.warn("lock-in response is not strictly increasing in the coupling");
        }
    }
    out.tables.push(Table::json("tensors.json", &reports));
    out.tables.push(Table::csv("lock_in.csv", ["coupling", "cross_response", "closed_form"], lock_in));
    Ok(out)
}
