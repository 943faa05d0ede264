use serde::Serialize;

use phygital_core::ecology::{
    density_sweep, flash_crash_scenario, mass_convergence_experiment, trust_accrual, verification_threshold,
    REFERENCE_PROFILES,
};

use super::Output;
use crate::config::{ConvergenceCfg, FlashCfg, TrustCfg, VerificationCfg};
use crate::output::{num, Table};

pub fn trust(cfg: &TrustCfg) -> phygital_core::Result<Output> {
    let agent = cfg.agent()?;
    let bound = cfg.trust_per_interaction * agent.parallelism as f64 * cfg.dt;
    let mut mu_ss = agent.mu_ss;
    let mut rows = Vec::with_capacity(cfg.steps + 1);
    let mut within = true;
    rows.push(vec!["0".into(), num(0.0), num(mu_ss), num(0.0), num(bound)]);
    for step in 1..=cfg.steps {
        let gain = trust_accrual(&agent, cfg.trust_per_interaction, cfg.dt)?;
        within &= gain <= bound;
        mu_ss += gain;
        rows.push(vec![step.to_string(), num(step as f64 * cfg.dt), num(mu_ss), num(gain), num(bound)]);
    }
    let mut out = Output::default();
    if !within {
        out.warn("trust accrual exceeded its per-step bound");
    }
    out.tables.push(Table::csv("trust.csv", ["step", "t", "mu_ss", "accrual", "bound"], rows));
    Ok(out)
}

pub fn verification(cfg: &VerificationCfg) -> phygital_core::Result<Output> {
    let model = cfg.model()?;
    model.validate()?;
    let threshold = verification_threshold(&model)?;
    let rows = density_sweep(&model, &cfg.grid)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        value: f64,
        cost: &'a crate::config::CostCfg,
        threshold: Option<f64>,
        engaged_points: usize,
        points: usize,
    }
    let mut out = Output::default();
    if threshold.is_none() {
        out.warn("expected value never changes sign on [0, 1]; no verification threshold");
    }
    out.tables.push(Table::csv(
        "density.csv",
        ["rho", "expected_value", "engaged"],
        rows.iter().map(|r| vec![num(r.rho), num(r.expected_value), r.engaged.to_string()]).collect(),
    ));
    out.tables.push(Table::json(
        "threshold.json",
        &Summary {
            value: cfg.value,
            cost: &cfg.cost,
            threshold,
            engaged_points: rows.iter().filter(|r| r.engaged).count(),
            points: rows.len(),
        },
    ));
    Ok(out)
}

pub fn convergence(cfg: &ConvergenceCfg) -> phygital_core::Result<Output> {
    let scn = cfg.scenario()?;
    let results = mass_convergence_experiment(&scn)?;
    let mut out = Output::default();
    let mut rows = Vec::with_capacity(results.len());
    for r in &results {
        let expected = REFERENCE_PROFILES.iter().find(|p| p.name == r.name && cfg.platforms.is_empty());
        let matches = expected.map(|p| (0..3).all(|i| (r.initial_signs[i] > 0) == p.rising[i]));
        if matches == Some(false) {
            out.warn(format!("platform `{}`: initial rates disagree with its expected convergence directions", r.name));
        }
        if r.projections > scn.projection_warn {
            out.warn(format!("platform `{}` needed {} PSD re-projections", r.name, r.projections));
        }
        let mut row = vec![r.name.clone()];
        row.extend(r.initial_rates.iter().map(|v| num(*v)));
        row.extend(r.initial_signs.iter().map(|s| s.to_string()));
        row.extend([
            matches.map_or(String::new(), |m| m.to_string()),
            num(r.trace_drift),
            num(r.spread[0]),
            num(r.spread[r.spread.len() - 1]),
            r.spread_monotone.to_string(),
            r.projections.to_string(),
        ]);
        rows.push(row);
    }
    out.tables.push(Table::csv(
        "convergence.csv",
        [
            "platform", "rate_pp", "rate_dd", "rate_ss", "sign_pp", "sign_dd", "sign_ss", "matches_reference",
            "trace_drift", "spread_initial", "spread_final", "spread_monotone", "projections",
        ],
        rows,
    ));
    #[derive(Serialize)]
    struct Tensors<'a> {
        name: &'a str,
        initial: [[f64; 3]; 3],
        r#final: [[f64; 3]; 3],
    }
    let tensors: Vec<_> = results.iter().map(|r| Tensors { name: &r.name, initial: r.initial, r#final: r.final_tensor }).collect();
    out.tables.push(Table::json("tensors.json", &tensors));
    let steps = results.iter().map(|r| r.spread.len()).max().unwrap_or(0);
    let header = ["t".to_string()].into_iter().chain(results.iter().map(|r| r.name.clone()));
    let spread = (0..steps)
        .map(|i| {
            std::iter::once(num(i as f64 * scn.dt))
                .chain(results.iter().map(|r| r.spread.get(i).map_or(String::new(), |v| num(*v))))
                .collect()
        })
        .collect();
    out.tables.push(Table::csv("spread.csv", header, spread));
    Ok(out)
}

pub fn flash_crash(cfg: &FlashCfg) -> phygital_core::Result<Output> {
    let rep = flash_crash_scenario(&cfg.spec())?;
    #[derive(Serialize)]
    struct Summary {
        dt_cpu: f64,
        dt_phy: f64,
        ratio: u32,
        crash_start: f64,
        crash_duration: f64,
        true_extremum: f64,
        true_extremum_t: f64,
        observed_extremum: f64,
        true_drawdown: f64,
        observed_drawdown: f64,
        /// `null` when the observer never sees the crash.
        detection_lag: Option<f64>,
        missed: bool,
    }
    let mut out = Output::default();
    if rep.missed() {
        out.warn("slow observer never sampled the crash");
    }
    out.tables.push(Table::json(
        "flash_crash.json",
        &Summary {
            dt_cpu: rep.dt_cpu,
            dt_phy: rep.dt_phy,
            ratio: cfg.ratio,
            crash_start: rep.crash_start,
            crash_duration: rep.crash_duration,
            true_extremum: rep.true_extremum,
            true_extremum_t: rep.true_extremum_t,
            observed_extremum: rep.observed_extremum,
            true_drawdown: rep.true_drawdown,
            observed_drawdown: rep.observed_drawdown,
            detection_lag: rep.detection_lag.is_finite().then_some(rep.detection_lag),
            missed: rep.missed(),
        },
    ));
    out.tables.push(Table::csv(
        "events.csv",
        ["t", "clock", "event", "price"],
        rep.events
            .iter()
            .map(|e| vec![num(e.t), serde_json::to_value(e.clock).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default(), e.event.to_string(), num(e.price)])
            .collect(),
    ));
    out.tables.push(Table::csv("observed.csv", ["t", "price"], rep.observed.iter().map(|(t, p)| vec![num(*t), num(*p)]).collect()));
    Ok(out)
}
