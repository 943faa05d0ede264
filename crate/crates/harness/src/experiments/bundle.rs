use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use phygital_core::bundle::{glue, holonomy, transport, BaseCover, BasePoint, GlueOutcome, LocalSection};

use super::Output;
use crate::config::BundleCfg;
use crate::output::{num, Table};

fn points(raw: &[Vec<f64>]) -> Vec<DVector<f64>> {
    raw.iter().map(|p| DVector::from_column_slice(p)).collect()
}

/// Signed area enclosed in the plane of the first two base coordinates.
fn shoelace(lp: &[Vec<f64>]) -> Option<f64> {
    if lp.first()?.len() < 2 {
        return None;
    }
    Some(0.5 * lp.windows(2).map(|w| w[0][0] * w[1][1] - w[1][0] * w[0][1]).sum::<f64>())
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

#[derive(Serialize)]
struct LoopReport {
    index: usize,
    area: Option<f64>,
    /// `a` with holonomy `exp(−aJ)` in the first digital/social plane.
    angle: f64,
    deviation_from_identity: f64,
    holonomy: Vec<Vec<f64>>,
}

#[derive(Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
enum GlueReport {
    Glued { points: Vec<(Vec<f64>, Vec<f64>)> },
    Obstructed { conflicts: Vec<phygital_core::bundle::Conflict> },
}

pub fn run(cfg: &BundleCfg) -> phygital_core::Result<Output> {
    let conn = &cfg.connection;
    let mut loops = Vec::with_capacity(cfg.loops.len());
    for (index, lp) in cfg.loops.iter().enumerate() {
        let h = holonomy(&points(lp), conn, cfg.steps)?;
        let n = h.nrows();
        loops.push(LoopReport {
            index,
            area: shoelace(lp),
            angle: (-h[(n / 2, 0)]).atan2(h[(0, 0)]),
            deviation_from_identity: (&h - DMatrix::identity(n, n)).amax(),
            holonomy: matrix_rows(&h),
        });
    }
    let mut transports = Vec::with_capacity(cfg.transports.len());
    for (i, tr) in cfg.transports.iter().enumerate() {
        let f = transport(&DVector::from_column_slice(&tr.fiber), &points(&tr.path), conn, cfg.steps)?;
        let mut row = vec![i.to_string()];
        row.extend(f.iter().map(|v| num(*v)));
        transports.push(row);
    }
    let mut out = Output::default();
    out.tables.push(Table::json("holonomy.json", &loops));
    if !cfg.transports.is_empty() {
        let width = cfg.transports[0].fiber.len();
        let header = std::iter::once("transport".to_string()).chain((0..width).map(|i| format!("f{i}")));
        out.tables.push(Table::csv("transport.csv", header, transports));
    }
    if let Some(g) = &cfg.glue {
        let regions = g
            .regions
            .iter()
            .map(|r| r.iter().map(|p| BasePoint::new(p.clone())).collect())
            .collect::<phygital_core::Result<Vec<Vec<_>>>>()?;
        let cover = BaseCover::new(regions.clone());
        let mut sections = Vec::with_capacity(regions.len());
        for (region, (pts, vals)) in regions.into_iter().zip(&g.sections).enumerate() {
            let values: BTreeMap<_, _> = pts.into_iter().zip(vals.iter().map(|v| DVector::from_column_slice(v))).collect();
            sections.push(LocalSection { region, values });
        }
        let report = match glue(&cover, &sections, g.tol)? {
            GlueOutcome::Glued(s) => GlueReport::Glued {
                points: s.values.iter().map(|(p, v)| (p.coords().to_vec(), v.iter().copied().collect())).collect(),
            },
            GlueOutcome::Obstructed(r) => {
                out.warn(format!("gluing obstructed at {} overlap point(s)", r.conflicts.len()));
                GlueReport::Obstructed { conflicts: r.conflicts }
            }
        };
        out.tables.push(Table::json("glue.json", &report));
    }
    Ok(out)
}
