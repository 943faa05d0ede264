//! Three-term equation of motion over a coupled world of entities:
//!
//! ```text
//! dx_i/dt = K_r,i (x_i − x_set,i) + K_a,i (x̂_i − x_i)       intrinsic
//!         + Σ_j w_ij (x_j − x_i)                            coupling
//!         + (μ_i⁺ ⊗ I_k) Φ_ext,i(t)                         external
//! ```
//!
//! `K_r` is the linearized intrinsic generator around the set point, so a
//! stable natural orbit has `K_r` negative definite. Forces are routed
//! through the mass pseudoinverse and contribute velocity (overdamped
//! reading of the response law). Terms that are structurally absent are
//! skipped rather than added as zeros, so removing a term reproduces the
//! reduced system bit for bit.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::linalg::{kron_identity, lift_vector};
use crate::state::{Block, DimensionLayout, Entity};
use crate::{Error, Result};

/// Coordinates beyond this magnitude abort the run.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    Euler,
    #[default]
    Rk4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntrinsicSpec {
    pub reactive: DMatrix<f64>,
    pub setpoint: DVector<f64>,
    pub anticipatory_gain: DMatrix<f64>,
    /// Linear internal model used for prediction.
    pub predictor: DMatrix<f64>,
    /// Prediction horizon; 0 disables anticipation.
    pub horizon: f64,
}

impl IntrinsicSpec {
    pub fn zero(dim: usize) -> Self {
        Self {
            reactive: DMatrix::zeros(dim, dim),
            setpoint: DVector::zeros(dim),
            anticipatory_gain: DMatrix::zeros(dim, dim),
            predictor: DMatrix::zeros(dim, dim),
            horizon: 0.0,
        }
    }

    /// Purely reactive spec `K_r (x − x_set)`.
    pub fn reactive(reactive: DMatrix<f64>, setpoint: DVector<f64>) -> Self {
        let n = setpoint.len();
        Self {
            reactive,
            setpoint,
            ..Self::zero(n)
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let sq = |m: &DMatrix<f64>, what: &str| {
            if m.nrows() != dim || m.ncols() != dim {
                Err(Error::structural(format!("{what} must be {dim}×{dim}")))
            } else if m.iter().any(|v| !v.is_finite()) {
                Err(Error::Numeric(format!("{what} has non-finite entries")))
            } else {
                Ok(())
            }
        };
        sq(&self.reactive, "reactive gain")?;
        sq(&self.anticipatory_gain, "anticipatory gain")?;
        sq(&self.predictor, "predictor")?;
        if self.setpoint.len() != dim {
            return Err(Error::structural(format!("set point must have length {dim}")));
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::domain("anticipation horizon must be finite and ≥ 0"));
        }
        Ok(())
    }

    fn has_reactive(&self) -> bool {
        self.reactive.iter().any(|v| *v != 0.0)
    }

    fn has_anticipation(&self) -> bool {
        self.horizon > 0.0
            && self.anticipatory_gain.iter().any(|v| *v != 0.0)
            && self.predictor.iter().any(|v| *v != 0.0)
    }

    fn is_active(&self) -> bool {
        self.has_reactive() || self.has_anticipation()
    }

    fn eval(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut v = if self.has_reactive() {
            &self.reactive * (x - &self.setpoint)
        } else {
            DVector::zeros(x.len())
        };
        if self.has_anticipation() {
            v += &self.anticipatory_gain * (anticipate(self, x) - x);
        }
        v
    }
}

/// One-step linear extrapolation `x̂ = x + h·P·x`.
pub fn anticipate(spec: &IntrinsicSpec, x: &DVector<f64>) -> DVector<f64> {
    if spec.horizon == 0.0 {
        return x.clone();
    }
    x + (&spec.predictor * x) * spec.horizon
}

/// Weighted directed adjacency: `w_ij ≥ 0` is the pull of `j` on `i`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CouplingGraph {
    incoming: Vec<Vec<(usize, f64)>>,
}

impl CouplingGraph {
    pub fn new(n: usize) -> Self {
        Self {
            incoming: vec![Vec::new(); n],
        }
    }

    /// Adds `w_ij`. Zero weights are dropped so they cannot perturb sums.
    pub fn add(&mut self, i: usize, j: usize, w: f64) -> Result<()> {
        let n = self.incoming.len();
        if i >= n || j >= n {
            return Err(Error::structural(format!("edge ({i}, {j}) outside {n} entities")));
        }
        if i == j {
            return Err(Error::structural(format!("self-loop on entity {i}")));
        }
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::domain(format!("coupling weight {w} must be finite and ≥ 0")));
        }
        if w > 0.0 {
            match self.incoming[i].iter_mut().find(|(src, _)| *src == j) {
                Some(e) => e.1 += w,
                None => {
                    self.incoming[i].push((j, w));
                    self.incoming[i].sort_by_key(|e| e.0);
                }
            }
        }
        Ok(())
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.incoming[i].iter().find(|e| e.0 == j).map_or(0.0, |e| e.1)
    }

    pub fn node_count(&self) -> usize {
        self.incoming.len()
    }

    pub fn edge_count(&self) -> usize {
        self.incoming.iter().map(Vec::len).sum()
    }

    fn eval(&self, states: &[DVector<f64>], i: usize) -> Option<DVector<f64>> {
        let edges = &self.incoming[i];
        if edges.is_empty() {
            return None;
        }
        let mut g = DVector::zeros(states[i].len());
        for &(j, w) in edges {
            g += (&states[j] - &states[i]) * w;
        }
        Some(g)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalEvent {
    pub t_start: f64,
    pub t_end: f64,
    pub entity: usize,
    /// Force over block coordinates (length `3k`).
    pub force: DVector<f64>,
}

impl ExternalEvent {
    /// Per-dimension force lifted as `Φ ⊗ 1_k`.
    pub fn per_dimension(t_start: f64, t_end: f64, entity: usize, force: Vector3<f64>, layout: DimensionLayout) -> Self {
        Self {
            t_start,
            t_end,
            entity,
            force: lift_vector(&force, layout.k()),
        }
    }

    /// Active on the half-open window `[t_start, t_end)`.
    pub fn active_at(&self, t: f64) -> bool {
        self.t_start <= t && t < self.t_end
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExternalSchedule {
    events: Vec<ExternalEvent>,
}

impl ExternalSchedule {
    pub fn new(events: Vec<ExternalEvent>) -> Result<Self> {
        for e in &events {
            if !(e.t_start <= e.t_end) {
                return Err(Error::domain(format!(
                    "event window [{}, {}] is reversed",
                    e.t_start, e.t_end
                )));
            }
            if e.force.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric("external force is not finite".into()));
            }
        }
        // All-zero forces cannot change anything; dropping them keeps the
        // reduced system bitwise identical.
        let events = events.into_iter().filter(|e| e.force.iter().any(|v| *v != 0.0)).collect();
        Ok(Self { events })
    }

    pub fn events(&self) -> &[ExternalEvent] {
        &self.events
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct World {
    layout: DimensionLayout,
    entities: Vec<Entity>,
    graph: CouplingGraph,
    intrinsics: Vec<IntrinsicSpec>,
    schedule: ExternalSchedule,
    dt: f64,
    integrator: Integrator,
    /// `μ_i⁺ ⊗ I_k`, cached.
    response: Vec<DMatrix<f64>>,
}

/// Magnitudes of the three terms for one entity.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct TermNorms {
    pub intrinsic: f64,
    pub coupling: f64,
    pub external: f64,
}

impl World {
    pub fn new(
        layout: DimensionLayout,
        entities: Vec<Entity>,
        graph: CouplingGraph,
        intrinsics: Vec<IntrinsicSpec>,
        schedule: ExternalSchedule,
        dt: f64,
        integrator: Integrator,
    ) -> Result<Self> {
        let n = entities.len();
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!("dt must be positive, got {dt}")));
        }
        for (i, e) in entities.iter().enumerate() {
            if e.state.layout() != layout {
                return Err(Error::structural(format!("entity `{}` has a different layout", e.id)));
            }
            if entities[..i].iter().any(|o| o.id == e.id) {
                return Err(Error::structural(format!("duplicate entity id `{}`", e.id)));
            }
        }
        if graph.node_count() != n && graph.node_count() != 0 {
            return Err(Error::structural(format!("coupling graph covers {} entities, world has {n}", graph.node_count())));
        }
        if intrinsics.len() != n {
            return Err(Error::structural(format!("{} intrinsic specs for {n} entities", intrinsics.len())));
        }
        for spec in &intrinsics {
            spec.validate(layout.dim())?;
        }
        for ev in schedule.events() {
            if ev.entity >= n {
                return Err(Error::UnknownEntity(format!("#{}", ev.entity)));
            }
            if ev.force.len() != layout.dim() {
                return Err(Error::structural(format!("event force must have length {}", layout.dim())));
            }
        }
        let graph = if graph.node_count() == 0 { CouplingGraph::new(n) } else { graph };
        let response = entities
            .iter()
            .map(|e| kron_identity(&e.mass.pseudoinverse(), layout.k()))
            .collect();
        Ok(Self {
            layout,
            entities,
            graph,
            intrinsics,
            schedule,
            dt,
            integrator,
            response,
        })
    }

    pub fn layout(&self) -> DimensionLayout {
        self.layout
    }

    pub fn entities(&self) -> &[Entity] {
        &self.entities
    }

    pub fn graph(&self) -> &CouplingGraph {
        &self.graph
    }

    pub fn schedule(&self) -> &ExternalSchedule {
        &self.schedule
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn entity_index(&self, id: &str) -> Result<usize> {
        self.entities
            .iter()
            .position(|e| e.id == id)
            .ok_or_else(|| Error::UnknownEntity(id.to_string()))
    }

    pub fn states(&self) -> Vec<DVector<f64>> {
        self.entities.iter().map(|e| e.state.coords().clone()).collect()
    }

    fn terms(
        &self,
        states: &[DVector<f64>],
        t: f64,
        i: usize,
    ) -> [Option<DVector<f64>>; 3] {
        let spec = &self.intrinsics[i];
        let int = spec.is_active().then(|| spec.eval(&states[i]));
        let coup = self.graph.eval(states, i);
        let mut force: Option<DVector<f64>> = None;
        for ev in self.schedule.events().iter().filter(|e| e.entity == i && e.active_at(t)) {
            match force.as_mut() {
                Some(f) => *f += &ev.force,
                None => force = Some(ev.force.clone()),
            }
        }
        let ext = force.map(|f| &self.response[i] * f);
        [int, coup, ext]
    }

    pub fn term_norms(&self, states: &[DVector<f64>], t: f64, i: usize) -> TermNorms {
        let [a, b, c] = self.terms(states, t, i);
        let nrm = |v: Option<DVector<f64>>| v.map_or(0.0, |v| v.norm());
        TermNorms {
            intrinsic: nrm(a),
            coupling: nrm(b),
            external: nrm(c),
        }
    }

    fn velocity(&self, states: &[DVector<f64>], t: f64) -> Vec<DVector<f64>> {
        (0..states.len())
            .map(|i| {
                let [a, b, c] = self.terms(states, t, i);
                let mut v: Option<DVector<f64>> = None;
                for term in [a, b, c].into_iter().flatten() {
                    v = Some(match v {
                        Some(acc) => acc + term,
                        None => term,
                    });
                }
                v.unwrap_or_else(|| DVector::zeros(states[i].len()))
            })
            .collect()
    }

    fn integrate(&self, x: &[DVector<f64>], t: f64) -> Vec<DVector<f64>> {
        let dt = self.dt;
        match self.integrator {
            Integrator::Euler => {
                let k1 = self.velocity(x, t);
                x.iter().zip(&k1).map(|(xi, ki)| xi + ki * dt).collect()
            }
            Integrator::Rk4 => {
                let shifted = |k: &[DVector<f64>], h: f64| -> Vec<DVector<f64>> {
                    x.iter().zip(k).map(|(xi, ki)| xi + ki * h).collect()
                };
                let k1 = self.velocity(x, t);
                let k2 = self.velocity(&shifted(&k1, 0.5 * dt), t + 0.5 * dt);
                let k3 = self.velocity(&shifted(&k2, 0.5 * dt), t + 0.5 * dt);
                let k4 = self.velocity(&shifted(&k3, dt), t + dt);
                (0..x.len())
                    .map(|i| &x[i] + (&k1[i] + (&k2[i] + &k3[i]) * 2.0 + &k4[i]) * (dt / 6.0))
                    .collect()
            }
        }
    }

    /// Advances every entity by one step from time `t`, in place.
    pub fn advance(&mut self, t: f64) -> Result<()> {
        let x = self.states();
        let next = self.integrate(&x, t);
        for (i, xi) in next.iter().enumerate() {
            if xi.iter().any(|v| !v.is_finite() || v.abs() > DIVERGENCE_LIMIT) {
                let n = self.term_norms(&x, t, i);
                return Err(Error::Divergence {
                    entity: self.entities[i].id.clone(),
                    t: t + self.dt,
                    term_int: n.intrinsic,
                    term_coup: n.coupling,
                    term_ext: n.external,
                });
            }
        }
        for (e, xi) in self.entities.iter_mut().zip(next) {
            e.state = crate::PhygitalState::new(self.layout, xi.as_slice().to_vec())?;
        }
        Ok(())
    }

    /// The world one step after `t`.
    pub fn step(&self, t: f64) -> Result<World> {
        let mut w = self.clone();
        w.advance(t)?;
        Ok(w)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub step: usize,
    pub t: f64,
    pub entity: usize,
    pub state: DVector<f64>,
    pub terms: TermNorms,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub layout: DimensionLayout,
    pub ids: Vec<String>,
    pub rows: Vec<TrajectoryRow>,
}

impl Trajectory {
    pub fn header(&self) -> Vec<String> {
        let mut h = vec!["t".to_string(), "entity".to_string(), "block".to_string()];
        h.extend((0..self.layout.k()).map(|c| format!("c{c}")));
        h.extend(["term_int", "term_coup", "term_ext"].map(String::from));
        h
    }

    /// One record per (sample, entity, block).
    pub fn records(&self) -> Vec<Vec<String>> {
        let mut out = Vec::with_capacity(self.rows.len() * 3);
        for r in &self.rows {
            for b in Block::ALL {
                let mut rec = vec![r.t.to_string(), self.ids[r.entity].clone(), b.tag().to_string()];
                rec.extend(r.state.as_slice()[self.layout.block_range(b)].iter().map(|v| v.to_string()));
                rec.extend([r.terms.intrinsic, r.terms.coupling, r.terms.external].map(|v| v.to_string()));
                out.push(rec);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header().join(",");
        s.push('\n');
        for rec in self.records() {
            s.push_str(&rec.join(","));
            s.push('\n');
        }
        s
    }

    /// Rows for one entity, in time order.
    pub fn entity_rows(&self, entity: usize) -> impl Iterator<Item = &TrajectoryRow> {
        self.rows.iter().filter(move |r| r.entity == entity)
    }

    pub fn final_states(&self) -> Vec<DVector<f64>> {
        let Some(last) = self.rows.last() else { return Vec::new() };
        self.rows.iter().filter(|r| r.step == last.step).map(|r| r.state.clone()).collect()
    }
}

fn record(world: &World, step: usize, t: f64, rows: &mut Vec<TrajectoryRow>) {
    let x = world.states();
    for i in 0..x.len() {
        rows.push(TrajectoryRow {
            step,
            t,
            entity: i,
            state: x[i].clone(),
            terms: world.term_norms(&x, t, i),
        });
    }
}

/// Runs `round(T/dt)` steps, sampling every `stride` steps and at the end.
/// Times are computed as `step·dt`, never accumulated.
pub fn simulate(world: &World, duration: f64, stride: usize) -> Result<Trajectory> {
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::domain(format!("duration must be positive, got {duration}")));
    }
    if stride == 0 {
        return Err(Error::domain("recording stride must be at least 1"));
    }
    let steps = (duration / world.dt).round() as usize;
    let mut w = world.clone();
    let mut rows = Vec::new();
    record(&w, 0, 0.0, &mut rows);
    for s in 0..steps {
        w.advance(s as f64 * w.dt)?;
        let done = s + 1;
        if done % stride == 0 || done == steps {
            record(&w, done, done as f64 * w.dt, &mut rows);
        }
    }
    Ok(Trajectory {
        layout: world.layout,
        ids: world.entities.iter().map(|e| e.id.clone()).collect(),
        rows,
    })
}

/// Drift of the total `Σ_i x_i` across a closed-world trajectory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DriftReport {
    pub times: Vec<f64>,
    /// `‖S(t_{n+1}) − S(t_n)‖` between consecutive samples.
    pub per_step: Vec<f64>,
    /// `S(T) − S(0)`, signed, per coordinate.
    pub cumulative: Vec<f64>,
    /// `‖S(T) − S(0)‖ / Σ_i ‖x_i(0)‖`.
    pub relative: f64,
    pub flagged: bool,
}

pub const DRIFT_FLAG: f64 = 1e-6;

pub fn conservation_diagnostic(traj: &Trajectory, world: &World) -> Result<DriftReport> {
    if !world.schedule.is_empty() {
        return Err(Error::Contract(
            "conservation diagnostic needs a closed world (empty external schedule)".into(),
        ));
    }
    let mut totals: Vec<(f64, DVector<f64>)> = Vec::new();
    let mut scale = 0.0;
    for r in &traj.rows {
        if r.step == 0 {
            scale += r.state.norm();
        }
        match totals.last_mut() {
            Some((t, s)) if *t == r.t => *s += &r.state,
            _ => totals.push((r.t, r.state.clone())),
        }
    }
    let Some(((_, first), (_, last))) = totals.first().zip(totals.last()) else {
        return Err(Error::Contract("empty trajectory".into()));
    };
    let per_step = totals.windows(2).map(|w| (&w[1].1 - &w[0].1).norm()).collect();
    let cum = last - first;
    let relative = if scale > 0.0 { cum.norm() / scale } else { cum.norm() };
    Ok(DriftReport {
        times: totals.iter().map(|(t, _)| *t).collect(),
        per_step,
        cumulative: cum.as_slice().to_vec(),
        relative,
        flagged: relative > DRIFT_FLAG,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mass::MassTensor;
    use crate::state::{EntityKind, PhygitalState};

    fn layout() -> DimensionLayout {
        DimensionLayout::default()
    }

    fn entity(id: &str, x: [f64; 3]) -> Entity {
        Entity::new(id, PhygitalState::new(layout(), x.to_vec()).unwrap(), MassTensor::identity(), EntityKind::Biological).unwrap()
    }

    fn world(ents: Vec<Entity>, graph: CouplingGraph, intr: Vec<IntrinsicSpec>, sched: ExternalSchedule, integ: Integrator) -> World {
        World::new(layout(), ents, graph, intr, sched, 0.01, integ).unwrap()
    }

    #[test]
    fn anticipate_examples() {
        let mut spec = IntrinsicSpec::zero(3);
        let x = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        assert_eq!(anticipate(&spec, &x), x);
        spec.predictor = DMatrix::identity(3, 3);
        spec.horizon = 0.5;
        assert_eq!(anticipate(&spec, &x).as_slice(), &[1.5, 0.0, 0.0]);
    }

    #[test]
    fn anticipation_with_rotation_generator_is_second_order_accurate() {
        let mut spec = IntrinsicSpec::zero(3);
        spec.predictor = DMatrix::from_row_slice(3, 3, &[0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let x = DVector::from_column_slice(&[1.0, 0.0, 0.0]);
        for h in [0.1, 0.05, 0.025] {
            spec.horizon = h;
            let xhat = anticipate(&spec, &x);
            let exact = (&spec.predictor * h).exp() * &x;
            assert!((xhat.norm() - x.norm()).abs() <= h * h);
            assert!((xhat - exact).norm() <= h * h);
        }
    }

    #[test]
    fn zero_world_is_fixed() {
        let w = world(vec![entity("a", [1.0, 2.0, 3.0])], CouplingGraph::new(1), vec![IntrinsicSpec::zero(3)], ExternalSchedule::default(), Integrator::Rk4);
        let next = w.step(0.0).unwrap();
        assert_eq!(next.states(), w.states());
    }

    #[test]
    fn graph_rejects_self_loops_and_negative_weights() {
        let mut g = CouplingGraph::new(2);
        assert!(g.add(0, 0, 1.0).is_err());
        assert!(g.add(0, 1, -1.0).is_err());
        assert!(g.add(0, 2, 1.0).is_err());
        g.add(0, 1, 0.0).unwrap();
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn divergence_names_entity() {
        let spec = IntrinsicSpec::reactive(DMatrix::identity(3, 3) * 5000.0, DVector::zeros(3));
        let w = World::new(layout(), vec![entity("runaway", [1.0, 0.0, 0.0])], CouplingGraph::new(1), vec![spec], ExternalSchedule::default(), 1.0, Integrator::Euler).unwrap();
        match simulate(&w, 100.0, 1) {
            Err(Error::Divergence { entity, term_int, .. }) => {
                assert_eq!(entity, "runaway");
                assert!(term_int > 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn schedule_validation() {
        let ev = ExternalEvent::per_dimension(2.0, 1.0, 0, Vector3::new(1.0, 0.0, 0.0), layout());
        assert!(ExternalSchedule::new(vec![ev]).is_err());
        let ev = ExternalEvent::per_dimension(0.0, 1.0, 3, Vector3::new(1.0, 0.0, 0.0), layout());
        let s = ExternalSchedule::new(vec![ev]).unwrap();
        let r = World::new(layout(), vec![entity("a", [0.0; 3])], CouplingGraph::new(1), vec![IntrinsicSpec::zero(3)], s, 0.01, Integrator::Rk4);
        assert!(matches!(r, Err(Error::UnknownEntity(_))));
    }

    #[test]
    fn csv_layout() {
        let w = world(vec![entity("a", [1.0, 2.0, 3.0])], CouplingGraph::new(1), vec![IntrinsicSpec::zero(3)], ExternalSchedule::default(), Integrator::Rk4);
        let tr = simulate(&w, 0.02, 1).unwrap();
        let csv = tr.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,entity,block,c0,term_int,term_coup,term_ext"));
        assert_eq!(lines.next(), Some("0,a,p,1,0,0,0"));
        assert_eq!(csv.lines().count(), 1 + 3 * 3);
    }

    #[test]
    fn conservation_refuses_open_world() {
        let ev = ExternalEvent::per_dimension(0.0, 1.0, 0, Vector3::new(1.0, 0.0, 0.0), layout());
        let w = world(vec![entity("a", [0.0; 3])], CouplingGraph::new(1), vec![IntrinsicSpec::zero(3)], ExternalSchedule::new(vec![ev]).unwrap(), Integrator::Rk4);
        let tr = simulate(&w, 0.1, 1).unwrap();
        assert!(matches!(conservation_diagnostic(&tr, &w), Err(Error::Contract(_))));
    }
}
