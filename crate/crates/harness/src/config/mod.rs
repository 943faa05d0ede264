//! Strict TOML experiment configs.
//!
//! Parsing never stops at the first problem: every violation is collected
//! with its dotted path and source line. Module-level constraints (PSD
//! masses, the Randers condition, entity references, ...) are checked here
//! too, so a config that parses is a config that can run.

mod reader;

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;
use toml::de::{DeTable, DeValue};
use toml::Spanned;

use phygital_core::bundle::ConnectionPreset;
use phygital_core::dynamics::{
    CouplingGraph, ExternalEvent, ExternalSchedule, Integrator, IntrinsicSpec, World,
};
use phygital_core::ecology::{
    ConvergenceScenario, CostCurve, FlashCrashSpec, Platform, SyntheticAgentSpec, VerificationModel,
};
use phygital_core::finsler::{Bump, Conformal, DescentSettings, Frictions, RandersMetric};
use phygital_core::linalg::kron_identity;
use phygital_core::temporal::FlowField;
use phygital_core::thermo::{Pool, Pools};
use phygital_core::{DimensionLayout, Entity, EntityKind, MassTensor, PhygitalState};

pub use reader::Issue;
use reader::{render, Issues, MatrixSpec, Tbl};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Dynamics,
    Distance,
    GeodesicOracle,
    Mass,
    Bundle,
    Thermo,
    Ceiling,
    Shear,
    Trust,
    Verification,
    MassConvergence,
    FlashCrash,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 12] = [
        ExperimentKind::Dynamics,
        ExperimentKind::Distance,
        ExperimentKind::GeodesicOracle,
        ExperimentKind::Mass,
        ExperimentKind::Bundle,
        ExperimentKind::Thermo,
        ExperimentKind::Ceiling,
        ExperimentKind::Shear,
        ExperimentKind::Trust,
        ExperimentKind::Verification,
        ExperimentKind::MassConvergence,
        ExperimentKind::FlashCrash,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Dynamics => "dynamics",
            ExperimentKind::Distance => "distance",
            ExperimentKind::GeodesicOracle => "geodesic_oracle",
            ExperimentKind::Mass => "mass",
            ExperimentKind::Bundle => "bundle",
            ExperimentKind::Thermo => "thermo",
            ExperimentKind::Ceiling => "ceiling",
            ExperimentKind::Shear => "shear",
            ExperimentKind::Trust => "trust",
            ExperimentKind::Verification => "verification",
            ExperimentKind::MassConvergence => "mass_convergence",
            ExperimentKind::FlashCrash => "flash_crash",
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExperimentKind::Dynamics => "integrate the three-term equation of motion over a coupled world",
            ExperimentKind::Distance => "forward and backward geodesic distances under a Randers metric",
            ExperimentKind::GeodesicOracle => "variational geodesics against grid Dijkstra on random bump fields",
            ExperimentKind::Mass => "rank taxonomy, pseudoinverse response and lock-in sweep",
            ExperimentKind::Bundle => "fiber transport, holonomy and gluing of local sections",
            ExperimentKind::Thermo => "energy pools, frictional transduction and entropy export",
            ExperimentKind::Ceiling => "value against social entropy over catalog size",
            ExperimentKind::Shear => "temporal shear tensor and synchronization cost",
            ExperimentKind::Trust => "synthetic-agent social mass accrual against its bound",
            ExperimentKind::Verification => "verification threshold and engagement over agent density",
            ExperimentKind::MassConvergence => "mean-reverting mass convergence of platform profiles",
            ExperimentKind::FlashCrash => "fast-clock price crash seen by a slow observer",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricCfg {
    pub a: [[f64; 3]; 3],
    pub b: [f64; 3],
    pub frictions: Option<Frictions>,
    pub phi: Conformal,
}

impl MetricCfg {
    pub fn build(&self, layout: DimensionLayout) -> RandersMetric {
        let a = Matrix3::from_fn(|i, j| self.a[i][j]);
        RandersMetric::from_blocks(&a, &Vector3::from(self.b), self.phi.clone(), layout)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EntityCfg {
    pub id: String,
    pub kind: EntityKind,
    pub state: Vec<f64>,
    pub mass: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntrinsicCfg {
    pub entity: String,
    pub reactive: Vec<f64>,
    pub setpoint: Vec<f64>,
    pub anticipatory_gain: Vec<f64>,
    pub predictor: Vec<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingCfg {
    pub entity: String,
    pub neighbor: String,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventCfg {
    pub entity: String,
    pub t_start: f64,
    pub t_end: f64,
    pub force: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DynamicsCfg {
    pub entities: Vec<EntityCfg>,
    pub intrinsic: Vec<IntrinsicCfg>,
    pub coupling: Vec<CouplingCfg>,
    pub events: Vec<EventCfg>,
    pub duration: f64,
    pub dt: f64,
    pub integrator: Integrator,
    pub stride: usize,
}

fn square(v: &[f64]) -> DMatrix<f64> {
    let n = (v.len() as f64).sqrt().round() as usize;
    DMatrix::from_row_slice(n, n, v)
}

impl DynamicsCfg {
    pub fn build(&self, layout: DimensionLayout) -> phygital_core::Result<World> {
        let dim = layout.dim();
        let index = |id: &str| self.entities.iter().position(|e| e.id == id);
        let entities = self
            .entities
            .iter()
            .map(|e| {
                let mass = MassTensor::from_row_major(flatten3(&e.mass))?;
                Entity::new(e.id.clone(), PhygitalState::new(layout, e.state.clone())?, mass, e.kind)
            })
            .collect::<phygital_core::Result<Vec<_>>>()?;
        let mut intrinsics = vec![IntrinsicSpec::zero(dim); entities.len()];
        for s in &self.intrinsic {
            let i = index(&s.entity).ok_or_else(|| phygital_core::Error::UnknownEntity(s.entity.clone()))?;
            intrinsics[i] = IntrinsicSpec {
                reactive: square(&s.reactive),
                setpoint: DVector::from_column_slice(&s.setpoint),
                anticipatory_gain: square(&s.anticipatory_gain),
                predictor: square(&s.predictor),
                horizon: s.horizon,
            };
        }
        let mut graph = CouplingGraph::new(entities.len());
        for c in &self.coupling {
            let i = index(&c.entity).ok_or_else(|| phygital_core::Error::UnknownEntity(c.entity.clone()))?;
            let j = index(&c.neighbor).ok_or_else(|| phygital_core::Error::UnknownEntity(c.neighbor.clone()))?;
            graph.add(i, j, c.weight)?;
        }
        let events = self
            .events
            .iter()
            .map(|e| {
                let i = index(&e.entity).ok_or_else(|| phygital_core::Error::UnknownEntity(e.entity.clone()))?;
                Ok(ExternalEvent { t_start: e.t_start, t_end: e.t_end, entity: i, force: DVector::from_column_slice(&e.force) })
            })
            .collect::<phygital_core::Result<Vec<_>>>()?;
        World::new(layout, entities, graph, intrinsics, ExternalSchedule::new(events)?, self.dt, self.integrator)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceCfg {
    pub metric: MetricCfg,
    pub from: Vec<f64>,
    pub to: Vec<f64>,
    pub waypoints: usize,
    pub descent: DescentSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleCfg {
    pub instances: usize,
    pub grid: usize,
    pub radius: usize,
    pub waypoints: usize,
    pub tolerance: f64,
    pub constant_cases: usize,
    pub descent: DescentSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TensorCfg {
    pub id: String,
    pub matrix: [[f64; 3]; 3],
    pub force: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MassCfg {
    pub tensors: Vec<TensorCfg>,
    pub lock_in: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransportCfg {
    pub path: Vec<Vec<f64>>,
    pub fiber: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GlueCfg {
    pub tol: f64,
    pub regions: Vec<Vec<Vec<f64>>>,
    pub sections: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BundleCfg {
    pub connection: ConnectionPreset,
    pub steps: usize,
    pub loops: Vec<Vec<Vec<f64>>>,
    pub transports: Vec<TransportCfg>,
    pub glue: Option<GlueCfg>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AccountCfg {
    pub entity: String,
    pub pools: Pools,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransductionCfg {
    pub entity: String,
    pub from: Pool,
    pub to: Pool,
    pub amount: f64,
    pub friction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderCfg {
    pub entity: String,
    pub delta_s: f64,
    pub overhead: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandomOpsCfg {
    pub count: usize,
    pub max_fraction: f64,
    pub max_friction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThermoCfg {
    pub accounts: Vec<AccountCfg>,
    pub transductions: Vec<TransductionCfg>,
    pub order: Vec<OrderCfg>,
    pub random: Option<RandomOpsCfg>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CeilingCfg {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub grid: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowName {
    Phy,
    Dig,
    Soc,
    Cpu,
}

impl FlowName {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "phy" => Some(FlowName::Phy),
            "dig" => Some(FlowName::Dig),
            "soc" => Some(FlowName::Soc),
            "cpu" => Some(FlowName::Cpu),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SyncCfg {
    pub pair: [FlowName; 2],
    pub follow: FlowName,
    pub x0: Vec<f64>,
    pub t_end: f64,
    pub steps: usize,
    pub cost: f64,
    pub budget: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShearCfg {
    /// Linear flows `x ↦ M x`, row-major, keyed phy, dig, soc and
    /// optionally cpu.
    pub flows: Vec<(FlowName, Vec<Vec<f64>>)>,
    pub region: Vec<Vec<f64>>,
    pub sync: Option<SyncCfg>,
}

impl ShearCfg {
    pub fn flow(&self, name: FlowName) -> Option<FlowField> {
        self.flows.iter().find(|(n, _)| *n == name).map(|(_, rows)| {
            let n = rows.len();
            FlowField::linear(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrustCfg {
    pub mu_dd: f64,
    pub mu_ss: f64,
    pub mu_ds: f64,
    pub parallelism: u64,
    pub accrual_rate: Option<f64>,
    pub trust_per_interaction: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TrustCfg {
    pub fn agent(&self) -> phygital_core::Result<SyntheticAgentSpec> {
        let sa = SyntheticAgentSpec::new(self.mu_dd, self.mu_ss, self.mu_ds, self.parallelism)?;
        match self.accrual_rate {
            Some(r) => sa.with_accrual_rate(r),
            None => Ok(sa),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostCfg {
    Affine { intercept: f64, slope: f64 },
    Power { intercept: f64, scale: f64, exponent: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationCfg {
    pub value: f64,
    pub cost: CostCfg,
    pub grid: Vec<f64>,
}

impl VerificationCfg {
    pub fn model(&self) -> phygital_core::Result<VerificationModel> {
        let cost = match self.cost {
            CostCfg::Affine { intercept, slope } => CostCurve::Affine { intercept, slope },
            CostCfg::Power { intercept, scale, exponent } => CostCurve::Power { intercept, scale, exponent },
        };
        VerificationModel::new(self.value, cost)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlatformCfg {
    pub name: String,
    pub matrix: [[f64; 3]; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceCfg {
    pub gain: f64,
    pub horizon: f64,
    pub dt: f64,
    pub projection_warn: usize,
    /// Empty means the four reference platform profiles.
    pub platforms: Vec<PlatformCfg>,
}

impl ConvergenceCfg {
    pub fn scenario(&self) -> phygital_core::Result<ConvergenceScenario> {
        let mut scn = if self.platforms.is_empty() {
            ConvergenceScenario::reference(self.gain, self.horizon)?
        } else {
            let platforms = self
                .platforms
                .iter()
                .map(|p| Ok(Platform { name: p.name.clone(), mass: MassTensor::from_row_major(flatten3(&p.matrix))? }))
                .collect::<phygital_core::Result<Vec<_>>>()?;
            ConvergenceScenario::new(platforms, self.gain, self.horizon)?
        };
        scn.dt = self.dt;
        scn.projection_warn = self.projection_warn;
        scn.validate()?;
        Ok(scn)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlashCfg {
    pub dt_cpu: f64,
    pub ratio: u32,
    pub duration: f64,
    pub depth: f64,
    pub base_price: f64,
    pub start: Option<f64>,
    pub tail_samples: u32,
}

impl FlashCfg {
    pub fn spec(&self) -> FlashCrashSpec {
        FlashCrashSpec {
            dt_cpu: self.dt_cpu,
            ratio: self.ratio,
            duration: self.duration,
            depth: self.depth,
            base_price: self.base_price,
            start: self.start,
            tail_samples: self.tail_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Body {
    Dynamics(DynamicsCfg),
    Distance(DistanceCfg),
    GeodesicOracle(OracleCfg),
    Mass(MassCfg),
    Bundle(BundleCfg),
    Thermo(ThermoCfg),
    Ceiling(CeilingCfg),
    Shear(ShearCfg),
    Trust(TrustCfg),
    Verification(VerificationCfg),
    MassConvergence(ConvergenceCfg),
    FlashCrash(FlashCfg),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub value: String,
    pub body: Body,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub param: String,
    pub points: Vec<SweepPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub experiment: ExperimentKind,
    #[serde(skip)]
    pub seed: u64,
    pub k: usize,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub body: Body,
    pub sweep: Option<Sweep>,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

impl SimConfig {
    pub fn layout(&self) -> DimensionLayout {
        DimensionLayout::new(self.k).expect("k validated at parse time")
    }
}

/// Every problem found in a config.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<Issue>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "{} configuration error(s):", self.0.len())?;
        for i in &self.0 {
            writeln!(f, "  {i}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

fn flatten3(m: &[[f64; 3]; 3]) -> [f64; 9] {
    [m[0][0], m[0][1], m[0][2], m[1][0], m[1][1], m[1][2], m[2][0], m[2][1], m[2][2]]
}

fn vec_len(t: &Tbl, is: &mut Issues, key: &str, len: usize, required: bool) -> Option<Vec<f64>> {
    let v: Vec<f64> = if required { t.req(is, key)? } else { t.opt(is, key)? };
    if v.len() != len {
        is.push(&t.key_path(key), &t.span_of(key), format!("expected {len} entries, found {}", v.len()));
        return None;
    }
    Some(v)
}

fn vec3(t: &Tbl, is: &mut Issues, key: &str) -> Option<[f64; 3]> {
    vec_len(t, is, key, 3, false).map(|v| [v[0], v[1], v[2]])
}

fn mat3(t: &Tbl, is: &mut Issues, key: &str, required: bool) -> Option<[[f64; 3]; 3]> {
    let rows: Vec<Vec<f64>> = if required { t.req(is, key)? } else { t.opt(is, key)? };
    if rows.len() != 3 || rows.iter().any(|r| r.len() != 3) {
        is.push(&t.key_path(key), &t.span_of(key), "expected a 3×3 matrix");
        return None;
    }
    Some([0, 1, 2].map(|i| [rows[i][0], rows[i][1], rows[i][2]]))
}

/// `dim×dim` row-major matrix from a scalar (`s·I`), a 3×3 per-dimension
/// matrix (lifted by `⊗ I_k`) or a full `dim×dim` matrix.
fn block_matrix(t: &Tbl, is: &mut Issues, key: &str, layout: DimensionLayout) -> Option<Vec<f64>> {
    let dim = layout.dim();
    let spec: MatrixSpec = t.opt(is, key).unwrap_or(MatrixSpec::Scalar(0.0));
    let m = match spec {
        MatrixSpec::Scalar(s) => DMatrix::identity(dim, dim) * s,
        MatrixSpec::Rows(rows) => {
            let n = rows.len();
            if rows.iter().any(|r| r.len() != n) || (n != dim && n != 3) {
                is.push(&t.key_path(key), &t.span_of(key), format!("expected a 3×3 or {dim}×{dim} matrix"));
                return None;
            }
            if n == dim {
                DMatrix::from_fn(n, n, |i, j| rows[i][j])
            } else {
                kron_identity(&Matrix3::from_fn(|i, j| rows[i][j]), layout.k())
            }
        }
    };
    Some(m.transpose().as_slice().to_vec())
}

/// A 3-vector per dimension (lifted by `⊗ 1_k`) or a full block vector.
fn block_vector(t: &Tbl, is: &mut Issues, key: &str, layout: DimensionLayout, required: bool) -> Option<Vec<f64>> {
    let v: Vec<f64> = if required { t.req(is, key)? } else { t.opt(is, key).unwrap_or_else(|| vec![0.0; layout.dim()]) };
    if v.len() == layout.dim() {
        Some(v)
    } else if v.len() == 3 {
        Some(phygital_core::linalg::lift_vector(&Vector3::new(v[0], v[1], v[2]), layout.k()).as_slice().to_vec())
    } else {
        is.push(&t.key_path(key), &t.span_of(key), format!("expected 3 or {} entries, found {}", layout.dim(), v.len()));
        None
    }
}

fn positive(t: &Tbl, is: &mut Issues, key: &str, v: f64) -> bool {
    if v > 0.0 {
        true
    } else {
        is.push(&t.key_path(key), &t.span_of(key), format!("must be > 0, got {v}"));
        false
    }
}

fn nonneg(t: &Tbl, is: &mut Issues, key: &str, v: f64) -> bool {
    if v >= 0.0 {
        true
    } else {
        is.push(&t.key_path(key), &t.span_of(key), format!("must be ≥ 0, got {v}"));
        false
    }
}

fn descent(root: &Tbl, is: &mut Issues) -> DescentSettings {
    let d = DescentSettings::default();
    let Some(t) = root.table(is, "descent") else { return d };
    let out = DescentSettings {
        max_iter: t.or(is, "max_iter", d.max_iter),
        grad_tol: t.or(is, "grad_tol", d.grad_tol),
        rel_tol: t.or(is, "rel_tol", d.rel_tol),
        fd_step: t.or(is, "fd_step", d.fd_step),
        memory: t.or(is, "memory", d.memory),
    };
    positive(&t, is, "fd_step", out.fd_step);
    if out.memory == 0 {
        is.push(&t.key_path("memory"), &t.span_of("memory"), "must be at least 1");
    }
    t.finish(is);
    out
}

fn conformal(t: &Tbl, is: &mut Issues, k: usize) -> Option<Conformal> {
    let preset: String = t.req(is, "preset")?;
    let phi = match preset.as_str() {
        "constant" => {
            let value: f64 = t.req(is, "value")?;
            if !positive(t, is, "value", value) {
                return None;
            }
            Conformal::Constant { value }
        }
        "bumps" => {
            let mut bumps = Vec::new();
            for b in t.tables(is, "bumps") {
                let amplitude: Option<f64> = b.req(is, "amplitude");
                let width: Option<f64> = b.req(is, "width");
                let center = vec_len(&b, is, "center", 3 * k, true);
                if let Some(w) = width {
                    positive(&b, is, "width", w);
                }
                if let (Some(amplitude), Some(width), Some(center)) = (amplitude, width, center) {
                    bumps.push(Bump { amplitude, center, width });
                }
                b.finish(is);
            }
            Conformal::Bumps { bumps }
        }
        other => {
            is.push(&t.key_path("preset"), &t.span_of("preset"), format!("unknown conformal preset `{other}` (constant, bumps)"));
            return None;
        }
    };
    Some(phi)
}

fn metric(root: &Tbl, is: &mut Issues, layout: DimensionLayout, warnings: &mut Vec<String>) -> Option<MetricCfg> {
    let Some(t) = root.table(is, "metric") else {
        is.push(&root.key_path("metric"), &root.span, "missing required table");
        return None;
    };
    let a = if t.has("a") { mat3(&t, is, "a", true) } else { Some([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) };
    let frictions = t.table(is, "frictions").and_then(|f| {
        let fr = (|| {
            Some(Frictions { phy_to_dig: f.req(is, "phy_to_dig")?, dig_to_phy: f.req(is, "dig_to_phy")?, soc: f.req(is, "soc")? })
        })();
        f.finish(is);
        fr
    });
    if frictions.is_some() && t.has("b") {
        is.push(&t.key_path("b"), &t.span_of("b"), "give either `b` or `frictions`, not both");
    }
    let b = match &frictions {
        Some(fr) => {
            if let Some(w) = fr.lint() {
                log::warn!("metric.frictions: {w}");
                warnings.push(format!("metric.frictions: {w}"));
            }
            Some(fr.drift().into())
        }
        None => if t.has("b") { vec3(&t, is, "b") } else { Some([0.0; 3]) },
    };
    let phi = match t.table(is, "phi") {
        Some(p) => {
            let phi = conformal(&p, is, layout.k());
            p.finish(is);
            phi
        }
        None => Some(Conformal::default()),
    };
    let out = MetricCfg { a: a?, b: b?, frictions, phi: phi? };
    let m = out.build(layout);
    match m.validate() {
        Ok(d) if d.ok => {}
        Ok(d) => {
            for v in d.violations {
                let key = if v.contains("Randers") || v.contains("drift") || v.contains("bᵀA⁻¹b") {
                    if frictions.is_some() { "frictions" } else { "b" }
                } else if v.contains("φ") || v.contains("conformal") {
                    "phi"
                } else {
                    "a"
                };
                is.push(&t.key_path(key), &t.span_of(key), v);
            }
        }
        Err(e) => is.push(&t.key_path("a"), &t.span_of("a"), e.to_string()),
    }
    t.finish(is);
    Some(out)
}

fn entity_kind(t: &Tbl, is: &mut Issues) -> Option<EntityKind> {
    let s: String = t.opt(is, "kind").unwrap_or_else(|| "biological".into());
    let kind = match s.as_str() {
        "biological" => EntityKind::Biological,
        "synthetic" => EntityKind::Synthetic,
        "platform" => EntityKind::Platform,
        "object" => EntityKind::Object,
        other => {
            is.push(&t.key_path("kind"), &t.span_of("kind"), format!("unknown entity kind `{other}`"));
            return None;
        }
    };
    Some(kind)
}

fn check_mass(t: &Tbl, is: &mut Issues, key: &str, m: &[[f64; 3]; 3]) -> bool {
    match MassTensor::from_row_major(flatten3(m)) {
        Ok(_) => true,
        Err(e) => {
            is.push(&t.key_path(key), &t.span_of(key), e.to_string());
            false
        }
    }
}

fn dynamics(root: &Tbl, is: &mut Issues, layout: DimensionLayout) -> Option<DynamicsCfg> {
    let dim = layout.dim();
    let mut entities = Vec::new();
    let ent_tables = root.tables(is, "entities");
    if ent_tables.is_empty() {
        is.push("entities", &root.span, "at least one [[entities]] entry is required");
    }
    for e in ent_tables {
        let id: Option<String> = e.req(is, "id");
        let kind = entity_kind(&e, is);
        let state = vec_len(&e, is, "state", dim, true);
        let mass = if e.has("mass") { mat3(&e, is, "mass", true) } else { Some([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]) };
        if let Some(m) = &mass {
            if check_mass(&e, is, "mass", m) {
                if let Some(EntityKind::Synthetic) = kind {
                    let t = MassTensor::from_row_major(flatten3(m)).expect("checked");
                    if !t.has_degenerate_physical_block() {
                        is.push(&e.key_path("mass"), &e.span_of("mass"), "synthetic entities need a zero physical row and column");
                    }
                }
            }
        }
        if let Some(id) = &id {
            if entities.iter().any(|x: &EntityCfg| &x.id == id) {
                is.push(&e.key_path("id"), &e.span_of("id"), format!("duplicate entity id `{id}`"));
            }
        }
        if let (Some(id), Some(kind), Some(state), Some(mass)) = (id, kind, state, mass) {
            entities.push(EntityCfg { id, kind, state, mass });
        }
        e.finish(is);
    }
    let ids: Vec<String> = entities.iter().map(|e| e.id.clone()).collect();
    let resolve = |t: &Tbl, is: &mut Issues, key: &str| -> Option<String> {
        let id: String = t.req(is, key)?;
        if ids.contains(&id) {
            Some(id)
        } else {
            is.push(&t.key_path(key), &t.span_of(key), format!("unknown entity `{id}`"));
            None
        }
    };

    let Some(d) = root.table(is, "dynamics") else {
        is.push("dynamics", &root.span, "missing required table");
        return None;
    };
    let duration: Option<f64> = d.req(is, "duration");
    let dt: f64 = d.or(is, "dt", 0.01);
    let stride: usize = d.or(is, "stride", 1);
    let integrator = match d.opt::<String>(is, "integrator").as_deref() {
        None | Some("rk4") => Integrator::Rk4,
        Some("euler") => Integrator::Euler,
        Some(other) => {
            is.push(&d.key_path("integrator"), &d.span_of("integrator"), format!("unknown integrator `{other}` (rk4, euler)"));
            Integrator::Rk4
        }
    };
    if let Some(t) = duration {
        positive(&d, is, "duration", t);
    }
    positive(&d, is, "dt", dt);
    if stride == 0 {
        is.push(&d.key_path("stride"), &d.span_of("stride"), "must be at least 1");
    }

    let mut intrinsic = Vec::new();
    for s in d.tables(is, "intrinsic") {
        let entity = resolve(&s, is, "entity");
        let reactive = block_matrix(&s, is, "reactive", layout);
        let setpoint = block_vector(&s, is, "setpoint", layout, false);
        let anticipatory_gain = block_matrix(&s, is, "anticipatory_gain", layout);
        let predictor = block_matrix(&s, is, "predictor", layout);
        let horizon: f64 = s.or(is, "horizon", 0.0);
        nonneg(&s, is, "horizon", horizon);
        if let Some(e) = &entity {
            if intrinsic.iter().any(|x: &IntrinsicCfg| &x.entity == e) {
                is.push(&s.key_path("entity"), &s.span_of("entity"), format!("second intrinsic spec for `{e}`"));
            }
        }
        if let (Some(entity), Some(reactive), Some(setpoint), Some(anticipatory_gain), Some(predictor)) =
            (entity, reactive, setpoint, anticipatory_gain, predictor)
        {
            intrinsic.push(IntrinsicCfg { entity, reactive, setpoint, anticipatory_gain, predictor, horizon });
        }
        s.finish(is);
    }
    let mut coupling = Vec::new();
    for c in d.tables(is, "coupling") {
        let entity = resolve(&c, is, "entity");
        let neighbor = resolve(&c, is, "neighbor");
        let weight: Option<f64> = c.req(is, "weight");
        if let Some(w) = weight {
            nonneg(&c, is, "weight", w);
        }
        if let (Some(a), Some(b)) = (&entity, &neighbor) {
            if a == b {
                is.push(&c.key_path("neighbor"), &c.span_of("neighbor"), "an entity cannot couple to itself");
            }
        }
        if let (Some(entity), Some(neighbor), Some(weight)) = (entity, neighbor, weight) {
            coupling.push(CouplingCfg { entity, neighbor, weight });
        }
        c.finish(is);
    }
    let mut events = Vec::new();
    for ev in d.tables(is, "events") {
        let entity = resolve(&ev, is, "entity");
        let t_start: Option<f64> = ev.req(is, "t_start");
        let t_end: Option<f64> = ev.req(is, "t_end");
        let force = block_vector(&ev, is, "force", layout, true);
        if let (Some(a), Some(b)) = (t_start, t_end) {
            if a > b {
                is.push(&ev.key_path("t_end"), &ev.span_of("t_end"), "event ends before it starts");
            }
        }
        if let (Some(entity), Some(t_start), Some(t_end), Some(force)) = (entity, t_start, t_end, force) {
            events.push(EventCfg { entity, t_start, t_end, force });
        }
        ev.finish(is);
    }
    let span = d.span.clone();
    let path = d.path.clone();
    d.finish(is);
    let cfg = DynamicsCfg { entities, intrinsic, coupling, events, duration: duration?, dt, integrator, stride };
    if is.list.is_empty() {
        if let Err(e) = cfg.build(layout) {
            is.push(&path, &span, e.to_string());
        }
    }
    Some(cfg)
}

fn distance(root: &Tbl, is: &mut Issues, layout: DimensionLayout, warnings: &mut Vec<String>) -> Option<DistanceCfg> {
    let m = metric(root, is, layout, warnings);
    let Some(t) = root.table(is, "distance") else {
        is.push("distance", &root.span, "missing required table");
        return None;
    };
    let from = vec_len(&t, is, "from", layout.dim(), true);
    let to = vec_len(&t, is, "to", layout.dim(), true);
    let waypoints: usize = t.or(is, "waypoints", 32);
    if waypoints < 2 {
        is.push(&t.key_path("waypoints"), &t.span_of("waypoints"), "need at least 2 waypoints");
    }
    if let (Some(a), Some(b)) = (&from, &to) {
        if a == b {
            is.push(&t.key_path("to"), &t.span_of("to"), "endpoints coincide");
        }
    }
    let descent = descent(&t, is);
    t.finish(is);
    Some(DistanceCfg { metric: m?, from: from?, to: to?, waypoints, descent })
}

fn oracle(root: &Tbl, is: &mut Issues) -> Option<OracleCfg> {
    let t = root.table(is, "geodesic_oracle")?;
    let cfg = OracleCfg {
        instances: t.or(is, "instances", 20),
        grid: t.or(is, "grid", 64),
        radius: t.or(is, "radius", 4),
        waypoints: t.or(is, "waypoints", 64),
        tolerance: t.or(is, "tolerance", 0.02),
        constant_cases: t.or(is, "constant_cases", 5),
        descent: descent(&t, is),
    };
    if cfg.grid < 8 {
        is.push(&t.key_path("grid"), &t.span_of("grid"), "grid needs at least 8 nodes per side");
    }
    if cfg.radius == 0 {
        is.push(&t.key_path("radius"), &t.span_of("radius"), "stencil radius must be at least 1");
    }
    if cfg.waypoints < 2 {
        is.push(&t.key_path("waypoints"), &t.span_of("waypoints"), "need at least 2 waypoints");
    }
    positive(&t, is, "tolerance", cfg.tolerance);
    t.finish(is);
    Some(cfg)
}

fn mass(root: &Tbl, is: &mut Issues) -> Option<MassCfg> {
    let t = root.table(is, "mass")?;
    let mut tensors = Vec::new();
    for e in t.tables(is, "tensors") {
        let id: Option<String> = e.req(is, "id");
        let matrix = mat3(&e, is, "matrix", true);
        let force = if e.has("force") { vec3(&e, is, "force").map(Some) } else { Some(None) };
        if let Some(m) = &matrix {
            check_mass(&e, is, "matrix", m);
        }
        if let (Some(id), Some(matrix), Some(force)) = (id, matrix, force) {
            tensors.push(TensorCfg { id, matrix, force });
        }
        e.finish(is);
    }
    let lock_in: Vec<f64> = t.or(is, "lock_in", Vec::new());
    if lock_in.iter().any(|c| !(0.0..1.0).contains(c)) {
        is.push(&t.key_path("lock_in"), &t.span_of("lock_in"), "couplings must lie in [0, 1)");
    }
    t.finish(is);
    Some(MassCfg { tensors, lock_in })
}

fn point_list(t: &Tbl, is: &mut Issues, key: &str, dim: usize) -> Option<Vec<Vec<f64>>> {
    let pts: Vec<Vec<f64>> = t.req(is, key)?;
    if let Some((i, p)) = pts.iter().enumerate().find(|(_, p)| p.len() != dim) {
        is.push(&format!("{}[{i}]", t.key_path(key)), &t.span_of(key), format!("expected {dim} coordinates, found {}", p.len()));
        return None;
    }
    Some(pts)
}

fn bundle(root: &Tbl, is: &mut Issues, k: usize) -> Option<BundleCfg> {
    let t = root.table(is, "bundle")?;
    let connection = t.table(is, "connection").and_then(|c| {
        let preset: Option<String> = c.req(is, "preset");
        let conn = match preset.as_deref() {
            Some("zero") => Some(ConnectionPreset::Zero { k }),
            Some("constant_rotation") => c.req(is, "theta").map(|theta| ConnectionPreset::ConstantRotation { k, theta }),
            Some("curvature") => c.req(is, "c").map(|c| ConnectionPreset::Curvature { k, c }),
            Some(other) => {
                is.push(&c.key_path("preset"), &c.span_of("preset"), format!("unknown connection preset `{other}` (zero, constant_rotation, curvature)"));
                None
            }
            None => None,
        };
        if let Some(Err(e)) = conn.as_ref().map(ConnectionPreset::validate) {
            is.push(&c.path, &c.span, e.to_string());
        }
        c.finish(is);
        conn
    });
    if !t.has("connection") {
        is.push(&t.key_path("connection"), &t.span, "missing required table");
    }
    let steps: usize = t.or(is, "steps", 1000);
    if steps == 0 {
        is.push(&t.key_path("steps"), &t.span_of("steps"), "must be at least 1");
    }
    let mut loops = Vec::new();
    if t.has("loops") {
        let raw: Option<Vec<Vec<Vec<f64>>>> = t.opt(is, "loops");
        for (i, lp) in raw.into_iter().flatten().enumerate() {
            if lp.len() < 2 || lp.first() != lp.last() || lp.iter().any(|p| p.len() != k) {
                is.push(&format!("{}[{i}]", t.key_path("loops")), &t.span_of("loops"), format!("loop must be closed and made of {k}-dimensional points"));
            } else {
                loops.push(lp);
            }
        }
    }
    let mut transports = Vec::new();
    for tr in t.tables(is, "transport") {
        let path = point_list(&tr, is, "path", k);
        let fiber = vec_len(&tr, is, "fiber", 2 * k, true);
        if let Some(p) = &path {
            if p.len() < 2 {
                is.push(&tr.key_path("path"), &tr.span_of("path"), "path needs at least 2 points");
            }
        }
        if let (Some(path), Some(fiber)) = (path, fiber) {
            transports.push(TransportCfg { path, fiber });
        }
        tr.finish(is);
    }
    let glue = t.table(is, "glue").and_then(|g| {
        let tol: f64 = g.or(is, "tol", 1e-9);
        nonneg(&g, is, "tol", tol);
        let regions: Option<Vec<Vec<Vec<f64>>>> = g.req(is, "regions");
        let sections: Option<Vec<Vec<Vec<f64>>>> = g.req(is, "sections");
        let out = match (regions, sections) {
            (Some(r), Some(s)) => {
                let shape_ok = r.len() == s.len()
                    && r.iter().zip(&s).all(|(a, b)| a.len() == b.len())
                    && r.iter().flatten().all(|p| p.len() == k)
                    && s.iter().flatten().all(|f| f.len() == 2 * k);
                if shape_ok {
                    Some(GlueCfg { tol, regions: r, sections: s })
                } else {
                    is.push(&g.key_path("sections"), &g.span_of("sections"), format!("one section per region, one {}-vector per region point", 2 * k));
                    None
                }
            }
            _ => None,
        };
        g.finish(is);
        out
    });
    t.finish(is);
    Some(BundleCfg { connection: connection?, steps, loops, transports, glue })
}

fn pool(t: &Tbl, is: &mut Issues, key: &str) -> Option<Pool> {
    let s: String = t.req(is, key)?;
    match s.as_str() {
        "phy" => Some(Pool::Phy),
        "dig" => Some(Pool::Dig),
        "soc" => Some(Pool::Soc),
        other => {
            is.push(&t.key_path(key), &t.span_of(key), format!("unknown pool `{other}` (phy, dig, soc)"));
            None
        }
    }
}

fn thermo(root: &Tbl, is: &mut Issues) -> Option<ThermoCfg> {
    let t = root.table(is, "thermo")?;
    let mut accounts: Vec<AccountCfg> = Vec::new();
    for a in t.tables(is, "accounts") {
        let entity: Option<String> = a.req(is, "entity");
        let vals = ["phy", "dig", "soc"].map(|k| {
            let v: f64 = a.or(is, k, 0.0);
            nonneg(&a, is, k, v);
            v
        });
        if let Some(e) = entity {
            if accounts.iter().any(|x| x.entity == e) {
                is.push(&a.key_path("entity"), &a.span_of("entity"), format!("duplicate account `{e}`"));
            }
            accounts.push(AccountCfg { entity: e, pools: Pools::new(vals[0], vals[1], vals[2]) });
        }
        a.finish(is);
    }
    if accounts.is_empty() {
        is.push(&t.key_path("accounts"), &t.span, "at least one account is required");
    }
    let known = |t: &Tbl, is: &mut Issues| -> Option<String> {
        let e: String = t.req(is, "entity")?;
        if accounts.iter().any(|a| a.entity == e) {
            Some(e)
        } else {
            is.push(&t.key_path("entity"), &t.span_of("entity"), format!("unknown entity `{e}`"));
            None
        }
    };
    let mut transductions = Vec::new();
    for x in t.tables(is, "transductions") {
        let entity = known(&x, is);
        let from = pool(&x, is, "from");
        let to = pool(&x, is, "to");
        let amount: Option<f64> = x.req(is, "amount");
        let friction: f64 = x.or(is, "friction", 0.0);
        if let Some(a) = amount {
            positive(&x, is, "amount", a);
        }
        nonneg(&x, is, "friction", friction);
        if from.is_some() && from == to {
            is.push(&x.key_path("to"), &x.span_of("to"), "source and destination must differ");
        }
        if let (Some(entity), Some(from), Some(to), Some(amount)) = (entity, from, to, amount) {
            transductions.push(TransductionCfg { entity, from, to, amount, friction });
        }
        x.finish(is);
    }
    let mut order = Vec::new();
    for o in t.tables(is, "order") {
        let entity = known(&o, is);
        let delta_s: Option<f64> = o.req(is, "delta_s");
        let overhead: Option<f64> = o.req(is, "overhead");
        if let Some(ds) = delta_s {
            if ds >= 0.0 {
                is.push(&o.key_path("delta_s"), &o.span_of("delta_s"), "internal entropy change must be negative");
            }
            if let Some(ov) = overhead {
                if ov < -ds {
                    is.push(&o.key_path("overhead"), &o.span_of("overhead"), format!("second-law violation: overhead {ov} does not cover the entropy drop {}", -ds));
                }
            }
        }
        if let (Some(entity), Some(delta_s), Some(overhead)) = (entity, delta_s, overhead) {
            order.push(OrderCfg { entity, delta_s, overhead });
        }
        o.finish(is);
    }
    let random = t.table(is, "random").map(|r| {
        let cfg = RandomOpsCfg {
            count: r.or(is, "count", 1000),
            max_fraction: r.or(is, "max_fraction", 0.5),
            max_friction: r.or(is, "max_friction", 1.0),
        };
        if !(cfg.max_fraction > 0.0 && cfg.max_fraction <= 1.0) {
            is.push(&r.key_path("max_fraction"), &r.span_of("max_fraction"), "must lie in (0, 1]");
        }
        nonneg(&r, is, "max_friction", cfg.max_friction);
        r.finish(is);
        cfg
    });
    t.finish(is);
    Some(ThermoCfg { accounts, transductions, order, random })
}

fn grid_or_range(t: &Tbl, is: &mut Issues, default_n: usize, lo: f64, hi: f64, integer_steps: bool) -> Vec<f64> {
    if t.has("grid") {
        let g: Vec<f64> = t.opt(is, "grid").unwrap_or_default();
        if g.is_empty() {
            is.push(&t.key_path("grid"), &t.span_of("grid"), "grid is empty");
        }
        return g;
    }
    let n: usize = t.or(is, "points", default_n);
    if integer_steps {
        (0..n).map(|i| i as f64).collect()
    } else if n < 2 {
        vec![lo]
    } else {
        (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
    }
}

fn ceiling(root: &Tbl, is: &mut Issues) -> Option<CeilingCfg> {
    let t = root.table(is, "ceiling")?;
    let alpha: Option<f64> = t.req(is, "alpha");
    let beta: Option<f64> = t.req(is, "beta");
    let gamma: f64 = t.or(is, "gamma", 1.0);
    let grid = grid_or_range(&t, is, 1001, 0.0, 0.0, true);
    if let Some(a) = alpha {
        nonneg(&t, is, "alpha", a);
    }
    if let Some(b) = beta {
        positive(&t, is, "beta", b);
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        is.push(&t.key_path("gamma"), &t.span_of("gamma"), "γ must lie in (0, 1]");
    }
    if grid.iter().any(|n| *n < 0.0) || grid.windows(2).any(|w| w[1] <= w[0]) {
        is.push(&t.key_path("grid"), &t.span_of("grid"), "catalog grid must be nonnegative and strictly increasing");
    }
    t.finish(is);
    Some(CeilingCfg { alpha: alpha?, beta: beta?, gamma, grid })
}

fn flow_name(t: &Tbl, is: &mut Issues, key: &str) -> Option<FlowName> {
    let s: String = t.req(is, key)?;
    FlowName::parse(&s).or_else(|| {
        is.push(&t.key_path(key), &t.span_of(key), format!("unknown flow `{s}` (phy, dig, soc, cpu)"));
        None
    })
}

fn shear(root: &Tbl, is: &mut Issues) -> Option<ShearCfg> {
    let t = root.table(is, "shear")?;
    let f = t.table(is, "flows");
    if f.is_none() {
        is.push(&t.key_path("flows"), &t.span, "missing required table");
    }
    let mut flows = Vec::new();
    let mut dim = None;
    if let Some(f) = f {
        for (key, name) in [("phy", FlowName::Phy), ("dig", FlowName::Dig), ("soc", FlowName::Soc), ("cpu", FlowName::Cpu)] {
            let rows: Option<Vec<Vec<f64>>> = if name == FlowName::Cpu { f.opt(is, key) } else { f.req(is, key) };
            let Some(rows) = rows else { continue };
            let n = rows.len();
            if n == 0 || rows.iter().any(|r| r.len() != n) || dim.is_some_and(|d| d != n) {
                is.push(&f.key_path(key), &f.span_of(key), "flows must be square matrices of one common size");
                continue;
            }
            dim = Some(n);
            flows.push((name, rows));
        }
        f.finish(is);
    }
    let n = dim.unwrap_or(0);
    let region = if n > 0 { point_list(&t, is, "region", n) } else { t.opt(is, "region") };
    if region.as_ref().is_some_and(|r| r.is_empty()) {
        is.push(&t.key_path("region"), &t.span_of("region"), "region needs at least one point");
    }
    let sync = t.table(is, "sync").and_then(|s| {
        let pair: Option<Vec<String>> = s.req(is, "pair");
        let pair = pair.and_then(|p| {
            let names: Vec<FlowName> = p.iter().filter_map(|x| FlowName::parse(x)).collect();
            if names.len() == 2 && p.len() == 2 {
                Some([names[0], names[1]])
            } else {
                is.push(&s.key_path("pair"), &s.span_of("pair"), "expected two flow names (phy, dig, soc, cpu)");
                None
            }
        });
        let follow = flow_name(&s, is, "follow");
        for name in pair.iter().flatten().chain(follow.iter()) {
            if !flows.iter().any(|(x, _)| x == name) {
                is.push(&s.path, &s.span, format!("flow `{}` is not defined", serde_json::to_value(name).unwrap_or_default()));
            }
        }
        let x0 = vec_len(&s, is, "x0", n, true);
        let t_end: Option<f64> = s.req(is, "t_end");
        let steps: usize = s.or(is, "steps", 100);
        let cost: f64 = s.or(is, "cost", 1.0);
        let budget: Option<f64> = s.req(is, "budget");
        if let Some(te) = t_end {
            positive(&s, is, "t_end", te);
        }
        if steps == 0 {
            is.push(&s.key_path("steps"), &s.span_of("steps"), "must be at least 1");
        }
        nonneg(&s, is, "cost", cost);
        if let Some(b) = budget {
            nonneg(&s, is, "budget", b);
        }
        s.finish(is);
        Some(SyncCfg { pair: pair?, follow: follow?, x0: x0?, t_end: t_end?, steps, cost, budget: budget? })
    });
    t.finish(is);
    Some(ShearCfg { flows, region: region?, sync })
}

fn trust(root: &Tbl, is: &mut Issues) -> Option<TrustCfg> {
    let t = root.table(is, "trust")?;
    let cfg = TrustCfg {
        mu_dd: t.req(is, "mu_dd")?,
        mu_ss: t.req(is, "mu_ss")?,
        mu_ds: t.or(is, "mu_ds", 0.0),
        parallelism: t.req(is, "parallelism")?,
        accrual_rate: t.opt(is, "accrual_rate"),
        trust_per_interaction: t.req(is, "trust_per_interaction")?,
        dt: t.or(is, "dt", 1.0),
        steps: t.or(is, "steps", 10),
    };
    if let Err(e) = cfg.agent() {
        is.push(&t.path, &t.span, e.to_string());
    }
    nonneg(&t, is, "trust_per_interaction", cfg.trust_per_interaction);
    positive(&t, is, "dt", cfg.dt);
    t.finish(is);
    Some(cfg)
}

fn verification(root: &Tbl, is: &mut Issues) -> Option<VerificationCfg> {
    let t = root.table(is, "verification")?;
    let value: Option<f64> = t.req(is, "value");
    let cost = t.table(is, "cost").and_then(|c| {
        let kind: Option<String> = c.req(is, "kind");
        let out = match kind.as_deref() {
            Some("affine") => Some(CostCfg::Affine { intercept: c.or(is, "intercept", 0.0), slope: c.req(is, "slope")? }),
            Some("power") => Some(CostCfg::Power {
                intercept: c.or(is, "intercept", 0.0),
                scale: c.req(is, "scale")?,
                exponent: c.req(is, "exponent")?,
            }),
            Some(other) => {
                is.push(&c.key_path("kind"), &c.span_of("kind"), format!("unknown cost curve `{other}` (affine, power)"));
                None
            }
            None => None,
        };
        c.finish(is);
        out
    });
    if !t.has("cost") {
        is.push(&t.key_path("cost"), &t.span, "missing required table");
    }
    let grid = grid_or_range(&t, is, 101, 0.0, 1.0, false);
    if grid.iter().any(|r| !(0.0..=1.0).contains(r)) {
        is.push(&t.key_path("grid"), &t.span_of("grid"), "densities must lie in [0, 1]");
    }
    let cfg = VerificationCfg { value: value?, cost: cost?, grid };
    match cfg.model() {
        Ok(m) => {
            if let Err(e) = m.validate() {
                is.push(&t.key_path("cost"), &t.span_of("cost"), e.to_string());
            }
        }
        Err(e) => is.push(&t.path, &t.span, e.to_string()),
    }
    t.finish(is);
    Some(cfg)
}

fn convergence(root: &Tbl, is: &mut Issues) -> Option<ConvergenceCfg> {
    let t = root.table(is, "mass_convergence")?;
    let mut platforms = Vec::new();
    for p in t.tables(is, "platforms") {
        let name: Option<String> = p.req(is, "name");
        let matrix = mat3(&p, is, "matrix", true);
        if let Some(m) = &matrix {
            check_mass(&p, is, "matrix", m);
        }
        if let (Some(name), Some(matrix)) = (name, matrix) {
            platforms.push(PlatformCfg { name, matrix });
        }
        p.finish(is);
    }
    let cfg = ConvergenceCfg {
        gain: t.req(is, "gain")?,
        horizon: t.req(is, "horizon")?,
        dt: t.or(is, "dt", 0.01),
        projection_warn: t.or(is, "projection_warn", 10),
        platforms,
    };
    if let Err(e) = cfg.scenario() {
        is.push(&t.path, &t.span, e.to_string());
    }
    t.finish(is);
    Some(cfg)
}

fn flash(root: &Tbl, is: &mut Issues, warnings: &mut Vec<String>) -> Option<FlashCfg> {
    let t = root.table(is, "flash_crash")?;
    let cfg = FlashCfg {
        dt_cpu: t.req(is, "dt_cpu")?,
        ratio: t.req(is, "ratio")?,
        duration: t.req(is, "duration")?,
        depth: t.req(is, "depth")?,
        base_price: t.or(is, "base_price", 100.0),
        start: t.opt(is, "start"),
        tail_samples: t.or(is, "tail_samples", 2),
    };
    if let Err(e) = cfg.spec().validate() {
        is.push(&t.path, &t.span, e.to_string());
    }
    if cfg.ratio < 10 {
        let w = format!("flash_crash.ratio = {} gives no real timescale gap (expected ≥ 10)", cfg.ratio);
        warnings.push(w);
    }
    t.finish(is);
    Some(cfg)
}

const SECTIONS: [&str; 14] = [
    "metric",
    "distance",
    "geodesic_oracle",
    "entities",
    "dynamics",
    "mass",
    "bundle",
    "thermo",
    "ceiling",
    "shear",
    "trust",
    "verification",
    "mass_convergence",
    "flash_crash",
];

fn body(kind: ExperimentKind, root: &Tbl, is: &mut Issues, layout: DimensionLayout, warnings: &mut Vec<String>) -> Option<Body> {
    let need = |is: &mut Issues, name: &str| {
        if !root.has(name) {
            is.push(name, &root.span, format!("experiment `{}` needs a [{name}] table", kind.name()));
        }
    };
    match kind {
        ExperimentKind::Dynamics => dynamics(root, is, layout).map(Body::Dynamics),
        ExperimentKind::Distance => distance(root, is, layout, warnings).map(Body::Distance),
        ExperimentKind::GeodesicOracle => {
            if root.has("geodesic_oracle") {
                oracle(root, is).map(Body::GeodesicOracle)
            } else {
                let d = DescentSettings::default();
                Some(Body::GeodesicOracle(OracleCfg {
                    instances: 20,
                    grid: 64,
                    radius: 4,
                    waypoints: 64,
                    tolerance: 0.02,
                    constant_cases: 5,
                    descent: d,
                }))
            }
        }
        ExperimentKind::Mass => {
            need(is, "mass");
            mass(root, is).map(Body::Mass)
        }
        ExperimentKind::Bundle => {
            need(is, "bundle");
            bundle(root, is, layout.k()).map(Body::Bundle)
        }
        ExperimentKind::Thermo => {
            need(is, "thermo");
            thermo(root, is).map(Body::Thermo)
        }
        ExperimentKind::Ceiling => {
            need(is, "ceiling");
            ceiling(root, is).map(Body::Ceiling)
        }
        ExperimentKind::Shear => {
            need(is, "shear");
            shear(root, is).map(Body::Shear)
        }
        ExperimentKind::Trust => {
            need(is, "trust");
            trust(root, is).map(Body::Trust)
        }
        ExperimentKind::Verification => {
            need(is, "verification");
            verification(root, is).map(Body::Verification)
        }
        ExperimentKind::MassConvergence => {
            need(is, "mass_convergence");
            convergence(root, is).map(Body::MassConvergence)
        }
        ExperimentKind::FlashCrash => {
            need(is, "flash_crash");
            flash(root, is, warnings).map(Body::FlashCrash)
        }
    }
}

/// Sections that belong to `kind`; anything else present is an error.
fn sections_for(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::Dynamics => &["entities", "dynamics"],
        ExperimentKind::Distance => &["metric", "distance"],
        ExperimentKind::GeodesicOracle => &["geodesic_oracle"],
        ExperimentKind::Mass => &["mass"],
        ExperimentKind::Bundle => &["bundle"],
        ExperimentKind::Thermo => &["thermo"],
        ExperimentKind::Ceiling => &["ceiling"],
        ExperimentKind::Shear => &["shear"],
        ExperimentKind::Trust => &["trust"],
        ExperimentKind::Verification => &["verification"],
        ExperimentKind::MassConvergence => &["mass_convergence"],
        ExperimentKind::FlashCrash => &["flash_crash"],
    }
}

/// Header keys shared by every experiment.
struct Header {
    kind: Option<ExperimentKind>,
    seed: u64,
    k: usize,
    output: Option<PathBuf>,
}

fn header(root: &Tbl, is: &mut Issues) -> Header {
    let kind = root.req::<String>(is, "experiment").and_then(|s| {
        ExperimentKind::from_name(&s).or_else(|| {
            let names: Vec<_> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
            is.push("experiment", &root.span_of("experiment"), format!("unknown experiment `{s}` (one of: {})", names.join(", ")));
            None
        })
    });
    let seed: u64 = root.or(is, "seed", 0);
    let k: usize = root.or(is, "k", 1);
    if k == 0 {
        is.push("k", &root.span_of("k"), "block size k must be at least 1");
    }
    let output = root.opt::<String>(is, "output").map(PathBuf::from);
    Header { kind, seed, k: k.max(1), output }
}

fn parse_body(
    doc: &DeTable<'_>,
    span: std::ops::Range<usize>,
    is: &mut Issues,
    with_sweep: bool,
) -> (Option<(Header, Body)>, Vec<String>) {
    let root = Tbl::new(String::new(), span, doc);
    let h = header(&root, is);
    let mut warnings = Vec::new();
    let Some(kind) = h.kind else {
        // still mark sections as seen so only the header error is reported
        for s in SECTIONS.iter().chain(["sweep"].iter()) {
            let _ = root.has(s) && root.table(is, s).is_some();
        }
        return (None, warnings);
    };
    let layout = DimensionLayout::new(h.k).expect("k ≥ 1");
    let b = body(kind, &root, is, layout, &mut warnings);
    for s in SECTIONS {
        if root.has(s) && !sections_for(kind).contains(&s) {
            is.push(s, &root.span_of(s), format!("section not used by experiment `{}`", kind.name()));
            let _ = root.opt::<toml_any::Any>(is, s);
        }
    }
    if with_sweep {
        let _ = root.opt::<toml_any::Any>(is, "sweep");
    }
    root.finish(is);
    (b.map(|b| (h, b)), warnings)
}

mod toml_any {
    use super::reader::{FromToml, Issues, Val};

    /// Accepts anything; used to consume keys that were already reported.
    pub struct Any;

    impl FromToml for Any {
        fn from_toml(_: Val<'_, '_>, _: &mut Issues) -> Option<Self> {
            Some(Any)
        }
    }
}

fn set_path<'i>(doc: &mut DeTable<'i>, path: &[&str], value: Spanned<DeValue<'i>>) -> Result<(), String> {
    let (head, rest) = path.split_first().ok_or("empty parameter path")?;
    let key_pos = doc.iter().position(|(k, _)| k.get_ref() == head);
    if rest.is_empty() {
        match key_pos {
            Some(_) => {
                let slot = doc.iter_mut().find(|(k, _)| k.get_ref() == head).map(|(_, v)| v).expect("present");
                *slot = value;
            }
            None => {
                doc.insert(Spanned::new(value.span(), std::borrow::Cow::Owned(head.to_string())), value);
            }
        }
        return Ok(());
    }
    let slot = doc
        .iter_mut()
        .find(|(k, _)| k.get_ref() == head)
        .map(|(_, v)| v)
        .ok_or_else(|| format!("no table `{head}` to override"))?;
    match slot.get_mut() {
        DeValue::Table(t) => set_path(t, rest, value),
        _ => Err(format!("`{head}` is not a table")),
    }
}

/// Parses and fully validates a config. On failure every violation is
/// returned, each with its dotted path and line number.
pub fn parse_config(src: &str) -> Result<SimConfig, ConfigErrors> {
    let doc = DeTable::parse(src).map_err(|e| {
        let line = e.span().map_or(1, |s| src[..s.start.min(src.len())].matches('\n').count() + 1);
        ConfigErrors(vec![Issue { path: String::new(), line, message: e.message().to_string() }])
    })?;
    let mut is = Issues::new(src);
    let (parsed, mut warnings) = parse_body(doc.get_ref(), doc.span(), &mut is, true);

    let root = Tbl::new(String::new(), doc.span(), doc.get_ref());
    let mut sweep = None;
    if let (Some((h, _)), Some(s)) = (&parsed, root.table(&mut is, "sweep")) {
        let param: Option<String> = s.req(&mut is, "param");
        let values = s
            .table_values(&mut is, "values")
            .unwrap_or_default();
        if values.is_empty() {
            is.push(&s.key_path("values"), &s.span, "sweep needs at least one value");
        }
        let span_param = s.span_of("param");
        s.finish(&mut is);
        if let Some(param) = param {
            let parts: Vec<&str> = param.split('.').collect();
            if ["experiment", "seed", "k", "output", "sweep"].contains(&parts[0]) {
                is.push("sweep.param", &span_param, format!("`{param}` cannot be swept"));
            } else {
                let mut points = Vec::new();
                for (i, v) in values.iter().enumerate() {
                    let mut point_doc: DeTable<'_> = doc
                        .get_ref()
                        .iter()
                        .filter(|(k, _)| k.get_ref() != "sweep")
                        .map(|(k, v)| (k.clone(), v.clone()))
                        .collect();
                    if let Err(e) = set_path(&mut point_doc, &parts, v.clone()) {
                        is.push("sweep.param", &span_param, e);
                        break;
                    }
                    let mut sub = Issues::new(src);
                    let (p, w) = parse_body(&point_doc, doc.span(), &mut sub, false);
                    for mut issue in sub.list {
                        issue.message = format!("{} (sweep point {i}, {param} = {})", issue.message, render(v.get_ref()));
                        is.list.push(issue);
                    }
                    for w in w {
                        if !warnings.contains(&w) {
                            warnings.push(w);
                        }
                    }
                    if let Some((_, body)) = p {
                        points.push(SweepPoint { value: render(v.get_ref()), body });
                    }
                }
                sweep = Some(Sweep { param, points });
            }
            let _ = h;
        }
    }
    if !is.list.is_empty() {
        is.list.sort_by(|a, b| (a.line, &a.path).cmp(&(b.line, &b.path)));
        is.list.dedup();
        return Err(ConfigErrors(is.list));
    }
    let (h, body) = parsed.expect("no issues implies a parsed body");
    Ok(SimConfig {
        experiment: h.kind.expect("parsed"),
        seed: h.seed,
        k: h.k,
        output: h.output,
        body,
        sweep,
        warnings,
    })
}

impl<'a, 'i> Tbl<'a, 'i> {
    /// Raw array elements, kept unconverted for sweep substitution.
    fn table_values(&self, is: &mut Issues, key: &str) -> Option<Vec<Spanned<DeValue<'i>>>> {
        if !self.has(key) {
            is.push(&self.key_path(key), &self.span, "missing required key");
            return None;
        }
        match self.raw(key).map(Spanned::get_ref) {
            Some(DeValue::Array(a)) => Some(a.iter().cloned().collect()),
            _ => {
                is.push(&self.key_path(key), &self.span_of(key), "expected an array");
                None
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(ExperimentKind::from_name(k.name()), Some(k));
        }
    }
}
