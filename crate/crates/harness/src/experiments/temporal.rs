use nalgebra::DVector;
use serde::Serialize;

use phygital_core::temporal::{dissociation_check, shear_along_flow, shear_tensor, Coherence};

use super::Output;
use crate::config::{FlowName, ShearCfg};
use crate::output::{num, Table};

#[derive(Serialize)]
struct SyncReport {
    pair: [FlowName; 2],
    follow: FlowName,
    cost: f64,
    budget: f64,
    coherence: Coherence,
}

#[derive(Serialize)]
struct Report {
    labels: [&'static str; 3],
    /// RMS of `‖[X_a, X_b]‖` over the region.
    tensor_norms: [[f64; 3]; 3],
    region_points: usize,
    sync: Option<SyncReport>,
}

pub fn run(cfg: &ShearCfg) -> phygital_core::Result<Output> {
    let flow = |n: FlowName| cfg.flow(n).ok_or_else(|| phygital_core::Error::Contract(format!("flow {n:?} missing")));
    let (phy, dig, soc) = (flow(FlowName::Phy)?, flow(FlowName::Dig)?, flow(FlowName::Soc)?);
    let region: Vec<DVector<f64>> = cfg.region.iter().map(|p| DVector::from_column_slice(p)).collect();
    let sample = shear_tensor([&phy, &dig, &soc], &region)?;
    let mut out = Output::default();
    let mut sync = None;
    if let Some(s) = &cfg.sync {
        let series = shear_along_flow(&flow(s.pair[0])?, &flow(s.pair[1])?, &flow(s.follow)?, &DVector::from_column_slice(&s.x0), s.t_end, s.steps)?;
        let cost = phygital_core::temporal::sync_cost(&series, s.cost)?;
        let coherence = dissociation_check(cost, s.budget)?;
        if coherence == Coherence::Dissociated {
            out.warn(format!("synchronization cost {cost} exceeds the budget {}", s.budget));
        }
        out.tables.push(Table::csv("sync.csv", ["t", "shear_norm"], series.iter().map(|(t, n)| vec![num(*t), num(*n)]).collect()));
        sync = Some(SyncReport { pair: s.pair, follow: s.follow, cost, budget: s.budget, coherence });
    }
    out.tables.insert(
        0,
        Table::json(
            "shear.json",
            &Report { labels: ["phy", "dig", "soc"], tensor_norms: sample.tensor_norms, region_points: region.len(), sync },
        ),
    );
    Ok(out)
}
