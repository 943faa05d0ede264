//! Synthetic agents and the stylized ecology experiments: trust accrual,
//! the verification threshold, mass convergence and the two-clock flash
//! crash.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix3, SymmetricEigen};
use serde::Serialize;

use crate::mass::MassTensor;
use crate::state::{Entity, EntityKind, PhygitalState};
use crate::{Error, Result};

/// A digital/social-only entity: its mass tensor has an empty physical
/// row and column.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticAgentSpec {
    pub mu_dd: f64,
    pub mu_ss: f64,
    pub mu_ds: f64,
    /// Interactions per unit time.
    pub parallelism: u64,
    /// Upper limit on realized social-mass accrual per unit time; `None`
    /// leaves only the per-interaction bound.
    pub accrual_rate: Option<f64>,
}

impl SyntheticAgentSpec {
    pub fn new(mu_dd: f64, mu_ss: f64, mu_ds: f64, parallelism: u64) -> Result<Self> {
        let spec = Self { mu_dd, mu_ss, mu_ds, parallelism, accrual_rate: None };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_accrual_rate(mut self, rate: f64) -> Result<Self> {
        self.accrual_rate = Some(rate);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu_dd > 0.0 && self.mu_ss > 0.0) || !self.mu_dd.is_finite() || !self.mu_ss.is_finite() {
            return Err(Error::domain("synthetic agent needs μ_dd > 0 and μ_ss > 0"));
        }
        let det = self.mu_dd * self.mu_ss;
        if !(self.mu_ds * self.mu_ds <= det * (1.0 + 1e-12)) {
            return Err(Error::PsdViolation {
                min_eigenvalue: 0.5 * (self.mu_dd + self.mu_ss)
                    - (0.25 * (self.mu_dd - self.mu_ss).powi(2) + self.mu_ds * self.mu_ds).sqrt(),
                tolerance: 0.0,
            });
        }
        if self.parallelism == 0 {
            return Err(Error::domain("parallelism must be at least 1"));
        }
        if let Some(r) = self.accrual_rate {
            if !(r >= 0.0) {
                return Err(Error::domain("accrual rate must be ≥ 0"));
            }
        }
        Ok(())
    }

    pub fn mass_tensor(&self) -> Result<MassTensor> {
        MassTensor::from_parts([0.0, self.mu_dd, self.mu_ss], 0.0, 0.0, self.mu_ds)
    }

    pub fn entity(&self, id: impl Into<String>, state: PhygitalState) -> Result<Entity> {
        Entity::new(id, state, self.mass_tensor()?, EntityKind::Synthetic)
    }
}

/// Realized social-mass gain over `dt`: `min(Δμ_trust·N, rate)·dt`.
pub fn trust_accrual(spec: &SyntheticAgentSpec, trust_per_interaction: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::domain("dt must be > 0"));
    }
    if !(trust_per_interaction >= 0.0) {
        return Err(Error::domain("trust per interaction must be ≥ 0"));
    }
    let bound = trust_per_interaction * spec.parallelism as f64;
    let rate = match spec.accrual_rate {
        Some(cap) => bound.min(cap),
        None => bound,
    };
    Ok(rate * dt)
}

/// Verification cost as a function of synthetic-agent density.
#[derive(Clone)]
pub enum CostCurve {
    /// `intercept + slope·ρ`
    Affine { intercept: f64, slope: f64 },
    /// `intercept + scale·ρ^exponent`
    Power { intercept: f64, scale: f64, exponent: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for CostCurve {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostCurve::Affine { intercept, slope } => {
                f.debug_struct("Affine").field("intercept", intercept).field("slope", slope).finish()
            }
            CostCurve::Power { intercept, scale, exponent } => f
                .debug_struct("Power")
                .field("intercept", intercept)
                .field("scale", scale)
                .field("exponent", exponent)
                .finish(),
            CostCurve::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

impl CostCurve {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        CostCurve::Custom(Arc::new(f))
    }

    pub fn eval(&self, rho: f64) -> f64 {
        match self {
            CostCurve::Affine { intercept, slope } => intercept + slope * rho,
            CostCurve::Power { intercept, scale, exponent } => intercept + scale * rho.powf(*exponent),
            CostCurve::Custom(f) => f(rho),
        }
    }
}

/// Samples used to bracket the expected-value root on `[0, 1]`.
pub const THRESHOLD_GRID: usize = 1000;

#[derive(Debug, Clone)]
pub struct VerificationModel {
    /// Value of an authentic interaction.
    pub value: f64,
    pub cost: CostCurve,
}

impl VerificationModel {
    pub fn new(value: f64, cost: CostCurve) -> Result<Self> {
        let model = Self { value, cost };
        if !(value >= 0.0 && value.is_finite()) {
            return Err(Error::domain("interaction value must be finite and ≥ 0"));
        }
        let c0 = model.cost.eval(0.0);
        if !(c0 >= 0.0) {
            return Err(Error::domain(format!("verification cost at zero density is {c0}, must be ≥ 0")));
        }
        Ok(model)
    }

    /// Checks that the cost curve is nondecreasing on the bracketing grid.
    pub fn validate(&self) -> Result<()> {
        let mut prev = self.cost.eval(0.0);
        for i in 1..=THRESHOLD_GRID {
            let rho = i as f64 / THRESHOLD_GRID as f64;
            let c = self.cost.eval(rho);
            if !(c >= prev) {
                return Err(Error::domain(format!("verification cost decreases near ρ = {rho}")));
            }
            prev = c;
        }
        Ok(())
    }

    /// Expected value of engaging: `V_h·(1 − ρ) − c_v(ρ)`.
    pub fn expected_value(&self, rho: f64) -> f64 {
        self.value * (1.0 - rho) - self.cost.eval(rho)
    }
}

/// Density at which engagement stops paying, or `None` if the expected
/// value never changes sign on `[0, 1]`.
pub fn verification_threshold(model: &VerificationModel) -> Result<Option<f64>> {
    let mut last: Option<(f64, f64)> = None;
    let mut changes = Vec::new();
    for i in 0..=THRESHOLD_GRID {
        let rho = i as f64 / THRESHOLD_GRID as f64;
        let ev = model.expected_value(rho);
        if !ev.is_finite() {
            return Err(Error::Numeric(format!("expected value is {ev} at ρ = {rho}")));
        }
        if ev == 0.0 {
            continue;
        }
        if let Some((prev_rho, prev_ev)) = last {
            if (prev_ev > 0.0) != (ev > 0.0) {
                changes.push((prev_rho, rho, prev_ev > 0.0));
            }
        }
        last = Some((rho, ev));
    }
    match changes.as_slice() {
        [] => Ok(None),
        [(lo, hi, true)] => Ok(Some(bisect(model, *lo, *hi))),
        _ => Err(Error::Ambiguity(format!(
            "expected value changes sign {} time(s): {}",
            changes.len(),
            changes
                .iter()
                .map(|(a, b, down)| format!("[{a}, {b}] {}", if *down { "+→−" } else { "−→+" }))
                .collect::<Vec<_>>()
                .join(", ")
        ))),
    }
}

fn bisect(model: &VerificationModel, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let ev = model.expected_value(mid);
        if ev == 0.0 || mid == lo || mid == hi {
            return mid;
        }
        if ev > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityRow {
    pub rho: f64,
    pub expected_value: f64,
    pub engaged: bool,
}

/// Engage iff the expected value is strictly positive.
pub fn density_sweep(model: &VerificationModel, grid: &[f64]) -> Result<Vec<DensityRow>> {
    if let Some(r) = grid.iter().find(|r| !(**r >= 0.0 && **r <= 1.0)) {
        return Err(Error::domain(format!("density {r} outside [0, 1]")));
    }
    Ok(grid
        .iter()
        .map(|&rho| {
            let ev = model.expected_value(rho);
            DensityRow { rho, expected_value: ev, engaged: ev > 0.0 }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Platform {
    pub name: String,
    pub mass: MassTensor,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceScenario {
    pub platforms: Vec<Platform>,
    /// Mean-reversion rate κ.
    pub gain: f64,
    pub horizon: f64,
    pub dt: f64,
    /// PSD re-projections per platform beyond which a warning is logged.
    pub projection_warn: usize,
}

/// A stylized starting profile with the dimensions it is expected to grow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceProfile {
    pub name: &'static str,
    pub diagonal: [f64; 3],
    /// (physical, digital, social) dimensions the platform acquires.
    pub rising: [bool; 3],
}

/// Initial profiles for the four e-commerce platforms. Magnitudes are
/// stylized; only the ordering within each profile carries meaning.
pub const REFERENCE_PROFILES: [ReferenceProfile; 4] = [
    ReferenceProfile { name: "taobao", diagonal: [0.1, 3.0, 1.0], rising: [true, false, true] },
    ReferenceProfile { name: "jd", diagonal: [3.0, 2.0, 0.3], rising: [false, false, true] },
    ReferenceProfile { name: "pdd", diagonal: [0.8, 2.2, 3.0], rising: [true, false, false] },
    ReferenceProfile { name: "douyin", diagonal: [0.3, 1.5, 3.0], rising: [true, true, false] },
];

impl ConvergenceScenario {
    pub fn new(platforms: Vec<Platform>, gain: f64, horizon: f64) -> Result<Self> {
        let scn = Self { platforms, gain, horizon, dt: 0.01, projection_warn: 10 };
        scn.validate()?;
        Ok(scn)
    }

    pub fn reference(gain: f64, horizon: f64) -> Result<Self> {
        let platforms = REFERENCE_PROFILES
            .iter()
            .map(|p| Ok(Platform { name: p.name.to_string(), mass: MassTensor::diagonal(p.diagonal)? }))
            .collect::<Result<Vec<_>>>()?;
        Self::new(platforms, gain, horizon)
    }

    pub fn validate(&self) -> Result<()> {
        if self.platforms.is_empty() {
            return Err(Error::domain("scenario has no platforms"));
        }
        if !(self.gain > 0.0 && self.gain.is_finite()) {
            return Err(Error::domain("gain must be > 0"));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::domain("horizon must be ≥ 0"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::domain("dt must be > 0"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlatformConvergence {
    pub name: String,
    pub initial: [[f64; 3]; 3],
    pub final_tensor: [[f64; 3]; 3],
    /// `dμ_ii/dt` at t = 0, ordered (pp, dd, ss).
    pub initial_rates: [f64; 3],
    pub initial_signs: [i8; 3],
    pub trace_drift: f64,
    /// Variance of the diagonal at every step.
    pub spread: Vec<f64>,
    pub spread_monotone: bool,
    pub projections: usize,
}

/// Spread below this counts as converged for the monotonicity check.
pub const SPREAD_FLOOR: f64 = 1e-12;

fn diag_rates(d: [f64; 3], gain: f64) -> [f64; 3] {
    let mean = (d[0] + d[1] + d[2]) / 3.0;
    d.map(|x| gain * (mean - x))
}

fn variance(d: [f64; 3]) -> f64 {
    let mean = (d[0] + d[1] + d[2]) / 3.0;
    d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / 3.0
}

fn rows(m: &Matrix3<f64>) -> [[f64; 3]; 3] {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| m[(i, j)]))
}

fn sign(x: f64, scale: f64) -> i8 {
    if x.abs() <= 1e-14 * scale {
        0
    } else if x > 0.0 {
        1
    } else {
        -1
    }
}

/// Mean-reverting diagonal dynamics with fixed off-diagonals, RK4 in time,
/// clamping negative eigenvalues whenever the tensor leaves the PSD cone.
pub fn mass_convergence_experiment(scn: &ConvergenceScenario) -> Result<Vec<PlatformConvergence>> {
    scn.validate()?;
    let steps = (scn.horizon / scn.dt).round() as usize;
    let h = scn.dt;
    let mut out = Vec::with_capacity(scn.platforms.len());
    for p in &scn.platforms {
        let mut mu = *p.mass.matrix();
        let start = [mu[(0, 0)], mu[(1, 1)], mu[(2, 2)]];
        let scale = start.iter().map(|v| v.abs()).fold(1.0, f64::max) * scn.gain;
        let initial_rates = diag_rates(start, scn.gain);
        let mut spread = vec![variance(start)];
        let mut projections = 0;
        for _ in 0..steps {
            let d = [mu[(0, 0)], mu[(1, 1)], mu[(2, 2)]];
            let k1 = diag_rates(d, scn.gain);
            let k2 = diag_rates([0, 1, 2].map(|i| d[i] + 0.5 * h * k1[i]), scn.gain);
            let k3 = diag_rates([0, 1, 2].map(|i| d[i] + 0.5 * h * k2[i]), scn.gain);
            let k4 = diag_rates([0, 1, 2].map(|i| d[i] + h * k3[i]), scn.gain);
            for i in 0..3 {
                mu[(i, i)] = d[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            let eig = SymmetricEigen::new(mu);
            if eig.eigenvalues.min() < 0.0 {
                projections += 1;
                let clamped = eig.eigenvalues.map(|l| l.max(0.0));
                mu = eig.eigenvectors * Matrix3::from_diagonal(&clamped) * eig.eigenvectors.transpose();
                mu = (mu + mu.transpose()) * 0.5;
            }
            spread.push(variance([mu[(0, 0)], mu[(1, 1)], mu[(2, 2)]]));
        }
        if projections > scn.projection_warn {
            log::warn!(
                "platform `{}` needed {projections} PSD re-projections (threshold {}); dynamics may be unstable",
                p.name,
                scn.projection_warn
            );
        }
        let spread_monotone = spread.windows(2).all(|w| w[0] < SPREAD_FLOOR || w[1] < w[0]);
        out.push(PlatformConvergence {
            name: p.name.clone(),
            initial: rows(p.mass.matrix()),
            final_tensor: rows(&mu),
            initial_rates,
            initial_signs: initial_rates.map(|r| sign(r, scale)),
            trace_drift: (mu.trace() - p.mass.matrix().trace()).abs(),
            spread,
            spread_monotone,
            projections,
        });
    }
    Ok(out)
}

/// Fast agents drive a down-then-up triangle price path on a `dt_cpu`
/// clock; a slow observer samples every `ratio` ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct FlashCrashSpec {
    pub dt_cpu: f64,
    /// `dt_phy / dt_cpu`.
    pub ratio: u32,
    pub duration: f64,
    pub depth: f64,
    pub base_price: f64,
    /// Absolute crash start. By default the crash is centred halfway
    /// between two observer samples.
    pub start: Option<f64>,
    /// Observer samples taken after the crash has ended.
    pub tail_samples: u32,
}

impl FlashCrashSpec {
    pub fn new(dt_cpu: f64, ratio: u32, duration: f64, depth: f64) -> Self {
        Self { dt_cpu, ratio, duration, depth, base_price: 100.0, start: None, tail_samples: 2 }
    }

    pub fn dt_phy(&self) -> f64 {
        self.ratio as f64 * self.dt_cpu
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt_cpu > 0.0 && self.dt_cpu.is_finite()) {
            return Err(Error::domain("dt_cpu must be > 0"));
        }
        if self.ratio == 0 {
            return Err(Error::domain("clock ratio must be ≥ 1"));
        }
        if !(self.duration > 0.0 && self.depth > 0.0) || !self.duration.is_finite() || !self.depth.is_finite() {
            return Err(Error::domain("crash duration and depth must be > 0"));
        }
        if !self.base_price.is_finite() {
            return Err(Error::Numeric("base price must be finite".into()));
        }
        if let Some(s) = self.start {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::domain("crash start must be ≥ 0"));
            }
        }
        Ok(())
    }

    fn crash_start(&self) -> f64 {
        self.start.unwrap_or_else(|| {
            let p = self.dt_phy();
            let lead = (0.5 * self.duration / p).ceil() + 1.0;
            (lead + 0.5) * p - 0.5 * self.duration
        })
    }

    fn price(&self, t: f64, t0: f64) -> f64 {
        let u = (t - t0) / self.duration;
        if (0.0..=1.0).contains(&u) {
            self.base_price - self.depth * (1.0 - (2.0 * u - 1.0).abs())
        } else {
            self.base_price
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Clock {
    Cpu,
    Phy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CrashEvent {
    pub t: f64,
    pub clock: Clock,
    pub event: &'static str,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlashCrashReport {
    pub dt_cpu: f64,
    pub dt_phy: f64,
    pub crash_start: f64,
    pub crash_duration: f64,
    pub true_extremum: f64,
    pub true_extremum_t: f64,
    pub observed_extremum: f64,
    pub true_drawdown: f64,
    pub observed_drawdown: f64,
    /// From crash start to the first observer sample below the base
    /// price; infinite when the observer never sees the crash.
    pub detection_lag: f64,
    pub events: Vec<CrashEvent>,
    pub observed: Vec<(f64, f64)>,
}

impl FlashCrashReport {
    pub fn missed(&self) -> bool {
        self.detection_lag.is_infinite()
    }
}

pub fn flash_crash_scenario(spec: &FlashCrashSpec) -> Result<FlashCrashReport> {
    spec.validate()?;
    if spec.ratio < 10 {
        log::warn!("clock ratio {} gives no real timescale gap", spec.ratio);
    }
    let t0 = spec.crash_start();
    let end = t0 + spec.duration;
    let r = spec.ratio as u64;
    let slow_after = (end / spec.dt_phy()).floor() as u64 + 1 + spec.tail_samples as u64;
    let ticks = slow_after * r;

    let mut events = vec![CrashEvent { t: t0, clock: Clock::Cpu, event: "crash_start", price: spec.base_price }];
    let mut observed = Vec::with_capacity(slow_after as usize + 1);
    let (mut true_min, mut true_t) = (spec.base_price, 0.0);
    let mut detection: Option<f64> = None;
    for j in 0..=ticks {
        let t = j as f64 * spec.dt_cpu;
        let price = spec.price(t, t0);
        if price < true_min {
            true_min = price;
            true_t = t;
        }
        if j % r == 0 {
            observed.push((t, price));
            if detection.is_none() && price < spec.base_price {
                detection = Some(t);
                events.push(CrashEvent { t, clock: Clock::Phy, event: "detected", price });
            }
        }
    }
    events.push(CrashEvent { t: true_t, clock: Clock::Cpu, event: "trough", price: true_min });
    events.push(CrashEvent { t: end, clock: Clock::Cpu, event: "recovered", price: spec.base_price });
    events.sort_by(|a, b| a.t.total_cmp(&b.t));

    let observed_min = observed.iter().map(|(_, p)| *p).fold(f64::INFINITY, f64::min);
    Ok(FlashCrashReport {
        dt_cpu: spec.dt_cpu,
        dt_phy: spec.dt_phy(),
        crash_start: t0,
        crash_duration: spec.duration,
        true_extremum: true_min,
        true_extremum_t: true_t,
        observed_extremum: observed_min,
        true_drawdown: spec.base_price - true_min,
        observed_drawdown: spec.base_price - observed_min,
        detection_lag: detection.map_or(f64::INFINITY, |t| t - t0),
        events,
        observed,
    })
}
