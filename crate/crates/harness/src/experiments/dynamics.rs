use nalgebra::DVector;
use phygital_core::dynamics::{conservation_diagnostic, simulate};
use phygital_core::{DimensionLayout, PhygitalState};

use super::Output;
use crate::config::DynamicsCfg;
use crate::output::Table;

pub fn run(cfg: &DynamicsCfg, layout: DimensionLayout) -> phygital_core::Result<Output> {
    let world = cfg.build(layout)?;
    let traj = simulate(&world, cfg.duration, cfg.stride)?;
    let mut out = Output::default();
    out.tables.push(Table::csv("trajectory.csv", traj.header(), traj.records()));

    let finals = traj
        .final_states()
        .into_iter()
        .zip(&traj.ids)
        .map(|(x, id): (DVector<f64>, _)| PhygitalState::new(layout, x.as_slice().to_vec()).map(|s| s.record(id)))
        .collect::<phygital_core::Result<Vec<_>>>()?;
    out.tables.push(Table::json("final_states.json", &finals));

    // The total is a conserved quantity only for pure, symmetric diffusion.
    if world.schedule().is_empty() && cfg.intrinsic.is_empty() {
        let drift = conservation_diagnostic(&traj, &world)?;
        let n = world.entities().len();
        let symmetric = (0..n).all(|i| (0..n).all(|j| world.graph().weight(i, j) == world.graph().weight(j, i)));
        if drift.flagged && symmetric {
            out.warn(format!("closed-world total drifted by {:e} (relative)", drift.relative));
        }
        out.tables.push(Table::json("drift.json", &drift));
    }
    Ok(out)
}
