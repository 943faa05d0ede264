//! Experiment runners. Each turns a validated config body into tables.

mod bundle;
mod dynamics;
mod ecology;
mod geometry;
mod mass;
mod temporal;
mod thermo;

use phygital_core::DimensionLayout;

use crate::config::Body;
use crate::output::Table;
use crate::seed::Seeder;

/// What one experiment produced.
#[derive(Debug, Default)]
pub struct Output {
    pub tables: Vec<Table>,
    pub warnings: Vec<String>,
}

impl Output {
    fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }
}

pub fn run(body: &Body, layout: DimensionLayout, seeder: &Seeder) -> phygital_core::Result<Output> {
    match body {
        Body::Dynamics(c) => dynamics::run(c, layout),
        Body::Distance(c) => geometry::distance(c, layout),
        Body::GeodesicOracle(c) => geometry::oracle(c, seeder),
        Body::Mass(c) => mass::run(c),
        Body::Bundle(c) => bundle::run(c),
        Body::Thermo(c) => thermo::ledger(c, seeder),
        Body::Ceiling(c) => thermo::ceiling(c),
        Body::Shear(c) => temporal::run(c),
        Body::Trust(c) => ecology::trust(c),
        Body::Verification(c) => ecology::verification(c),
        Body::MassConvergence(c) => ecology::convergence(c),
        Body::FlashCrash(c) => ecology::flash_crash(c),
    }
}
