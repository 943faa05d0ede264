//! Energy pools, frictional transduction and entropy bookkeeping.
//!
//! Transduction moves `a` units out of a source pool, delivers `a·e^{-η}`
//! to the destination and routes the remainder into the waste pool, so the
//! sum of all pools is conserved exactly. Every unit of waste raises the
//! environment entropy by one unit (reference temperature 1).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::mass::MassTensor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pool {
    Phy,
    Dig,
    Soc,
    Waste,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Pools {
    pub phy: f64,
    pub dig: f64,
    pub soc: f64,
    pub waste: f64,
}

impl Pools {
    pub fn new(phy: f64, dig: f64, soc: f64) -> Self {
        Self { phy, dig, soc, waste: 0.0 }
    }

    pub fn get(&self, p: Pool) -> f64 {
        match p {
            Pool::Phy => self.phy,
            Pool::Dig => self.dig,
            Pool::Soc => self.soc,
            Pool::Waste => self.waste,
        }
    }

    fn get_mut(&mut self, p: Pool) -> &mut f64 {
        match p {
            Pool::Phy => &mut self.phy,
            Pool::Dig => &mut self.dig,
            Pool::Soc => &mut self.soc,
            Pool::Waste => &mut self.waste,
        }
    }

    pub fn total(&self) -> f64 {
        self.phy + self.dig + self.soc + self.waste
    }

    /// Everything still available for action (excludes waste).
    pub fn active(&self) -> f64 {
        self.phy + self.dig + self.soc
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Account {
    pub omega: Pools,
    pub s_int: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyLedger {
    accounts: BTreeMap<String, Account>,
    s_env: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransductionSpec {
    pub entity: String,
    pub source: Pool,
    pub destination: Pool,
    pub amount: f64,
    pub friction: f64,
}

/// What a transduction did.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Transfer {
    pub delivered: f64,
    pub dissipated: f64,
}

/// JSON snapshot of one account.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerSnapshot {
    pub entity: String,
    pub omega: Pools,
    #[serde(rename = "S_int")]
    pub s_int: f64,
    #[serde(rename = "S_env")]
    pub s_env: f64,
}

impl EnergyLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn open_account(&mut self, entity: impl Into<String>, pools: Pools) -> Result<()> {
        let entity = entity.into();
        let vals = [pools.phy, pools.dig, pools.soc, pools.waste];
        if vals.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::domain(format!("pools of `{entity}` must be finite and ≥ 0")));
        }
        if self.accounts.contains_key(&entity) {
            return Err(Error::structural(format!("duplicate ledger entity `{entity}`")));
        }
        self.accounts.insert(entity, Account { omega: pools, s_int: 0.0 });
        Ok(())
    }

    pub fn account(&self, entity: &str) -> Result<&Account> {
        self.accounts.get(entity).ok_or_else(|| Error::UnknownEntity(entity.to_string()))
    }

    pub fn accounts(&self) -> impl Iterator<Item = (&String, &Account)> {
        self.accounts.iter()
    }

    pub fn s_env(&self) -> f64 {
        self.s_env
    }

    /// Sum of every pool of every entity.
    pub fn total(&self) -> f64 {
        self.accounts.values().map(|a| a.omega.total()).sum()
    }

    pub fn active_total(&self) -> f64 {
        self.accounts.values().map(|a| a.omega.active()).sum()
    }

    pub fn snapshot(&self) -> Vec<LedgerSnapshot> {
        self.accounts
            .iter()
            .map(|(e, a)| LedgerSnapshot {
                entity: e.clone(),
                omega: a.omega,
                s_int: a.s_int,
                s_env: self.s_env,
            })
            .collect()
    }

    /// Moves energy between two of an entity's active pools. On error the
    /// ledger is left untouched.
    pub fn transduce(&mut self, spec: &TransductionSpec) -> Result<Transfer> {
        if spec.source == spec.destination {
            return Err(Error::domain("transduction source and destination must differ"));
        }
        if spec.source == Pool::Waste || spec.destination == Pool::Waste {
            return Err(Error::domain("transduction runs between phy, dig and soc pools"));
        }
        if !(spec.amount > 0.0 && spec.amount.is_finite()) {
            return Err(Error::domain(format!("transduction amount must be positive, got {}", spec.amount)));
        }
        if !(spec.friction >= 0.0 && spec.friction.is_finite()) {
            return Err(Error::domain(format!("friction must be finite and ≥ 0, got {}", spec.friction)));
        }
        let acct = self
            .accounts
            .get_mut(&spec.entity)
            .ok_or_else(|| Error::UnknownEntity(spec.entity.clone()))?;
        let available = acct.omega.get(spec.source);
        if available < spec.amount {
            return Err(Error::InsufficientSource {
                entity: spec.entity.clone(),
                requested: spec.amount,
                available,
            });
        }
        let delivered = spec.amount * (-spec.friction).exp();
        let dissipated = spec.amount - delivered;
        *acct.omega.get_mut(spec.source) -= spec.amount;
        *acct.omega.get_mut(spec.destination) += delivered;
        acct.omega.waste += dissipated;
        self.s_env += dissipated;
        Ok(Transfer { delivered, dissipated })
    }

    /// Books an internal entropy drop paid for by exporting `overhead` to
    /// the environment. Returns the total entropy change, which is never
    /// negative.
    pub fn record_order_creation(&mut self, entity: &str, delta_s_int: f64, overhead: f64) -> Result<f64> {
        if !(delta_s_int < 0.0 && delta_s_int.is_finite()) {
            return Err(Error::domain(format!("internal entropy change must be negative, got {delta_s_int}")));
        }
        if !overhead.is_finite() {
            return Err(Error::domain("overhead must be finite"));
        }
        if overhead < -delta_s_int {
            return Err(Error::SecondLaw {
                overhead,
                drop: -delta_s_int,
            });
        }
        let acct = self
            .accounts
            .get_mut(entity)
            .ok_or_else(|| Error::UnknownEntity(entity.to_string()))?;
        acct.s_int += delta_s_int;
        self.s_env += overhead;
        Ok(overhead + delta_s_int)
    }
}

/// `V_p = Tr(μ)·I·R`, with `I` in bits and resonance `R ∈ [0, 1]`.
pub fn phygital_value(m: &MassTensor, information: f64, resonance: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&resonance) {
        return Err(Error::domain(format!("resonance must lie in [0, 1], got {resonance}")));
    }
    if !(information >= 0.0 && information.is_finite()) {
        return Err(Error::domain(format!("information must be finite and ≥ 0, got {information}")));
    }
    Ok(m.trace() * information * resonance)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Efficiency {
    pub value: f64,
    /// Set when a regeneration cap was supplied and exceeded.
    pub cap_exceeded: bool,
}

/// `η = V_out / Ω_in`, optionally checked against a regeneration cap.
pub fn efficiency(v_out: f64, omega_in: f64, cap: Option<f64>) -> Result<Efficiency> {
    if !(omega_in > 0.0 && omega_in.is_finite()) {
        return Err(Error::domain(format!("input energy must be positive, got {omega_in}")));
    }
    if !(v_out >= 0.0 && v_out.is_finite()) {
        return Err(Error::domain(format!("value output must be finite and ≥ 0, got {v_out}")));
    }
    let value = v_out / omega_in;
    let cap_exceeded = cap.is_some_and(|c| value > c);
    if cap_exceeded {
        log::warn!("efficiency {value} exceeds the regeneration cap {}", cap.unwrap_or_default());
    }
    Ok(Efficiency { value, cap_exceeded })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CeilingRow {
    pub n: f64,
    pub value: f64,
    pub social_entropy: f64,
    pub net: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeilingSweep {
    pub rows: Vec<CeilingRow>,
    /// Index of the first maximizer of `net`.
    pub argmax: usize,
    /// `net` rises (weakly) then falls (weakly) over the grid.
    pub unimodal: bool,
    /// The maximizer is strictly inside the grid.
    pub interior: bool,
}

/// Sweeps `V(n) = β·ln(1+n)` against `S(n) = α·n^γ` over catalog sizes.
pub fn ceiling_sweep(grid: &[f64], alpha: f64, beta: f64, gamma: f64) -> Result<CeilingSweep> {
    if grid.is_empty() {
        return Err(Error::domain("catalog grid is empty"));
    }
    if !(alpha >= 0.0 && beta > 0.0) {
        return Err(Error::domain("need α ≥ 0 and β > 0"));
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::domain(format!("γ must lie in (0, 1], got {gamma}")));
    }
    if grid.iter().any(|n| !(*n >= 0.0 && n.is_finite())) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::domain("catalog grid must be nonnegative and strictly increasing"));
    }
    let rows: Vec<CeilingRow> = grid
        .iter()
        .map(|&n| {
            let value = beta * n.ln_1p();
            let social_entropy = alpha * n.powf(gamma);
            CeilingRow { n, value, social_entropy, net: value - social_entropy }
        })
        .collect();
    let argmax = rows
        .iter()
        .enumerate()
        .fold(0, |best, (i, r)| if r.net > rows[best].net { i } else { best });
    let unimodal = rows[..=argmax].windows(2).all(|w| w[1].net >= w[0].net)
        && rows[argmax..].windows(2).all(|w| w[1].net <= w[0].net);
    if !unimodal {
        log::warn!("net value is not unimodal on the sampled catalog grid");
    }
    Ok(CeilingSweep {
        interior: argmax > 0 && argmax + 1 < rows.len(),
        rows,
        argmax,
        unimodal,
    })
}
