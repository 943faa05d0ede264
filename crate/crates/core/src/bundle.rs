//! Fiber transport over the physical base, holonomy around loops, and
//! gluing of local sections with obstruction reporting.
//!
//! The base is the physical block (dimension `k`), the fiber is the
//! concatenated digital and social blocks (dimension `2k`). A connection is
//! a matrix-valued one-form: for a base point `x` and displacement `dx` it
//! yields a generator `G(x, dx)`, linear in `dx`. Transport along a path is
//! the path-ordered product of `exp(-G(x_s, Δx_s))` over substeps, with the
//! generator sampled at the start of each substep.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{Error, Result};

pub trait Connection {
    /// Dimension of the base (physical block).
    fn base_dim(&self) -> usize;

    /// Dimension of the fiber (digital ‖ social).
    fn fiber_dim(&self) -> usize;

    fn generator(&self, base: &[f64], dx: &[f64]) -> DMatrix<f64>;
}

/// The rotation generator `[[0, -I_k], [I_k, 0]]` pairing each digital
/// coordinate with its social counterpart.
pub fn pairing_generator(k: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * k, 2 * k);
    for i in 0..k {
        j[(i, k + i)] = -1.0;
        j[(k + i, i)] = 1.0;
    }
    j
}

/// Named connections that configs can refer to.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum ConnectionPreset {
    /// Flat: transport is the identity.
    Zero { k: usize },
    /// `G = θ·dx₀·J`, a constant exact one-form.
    ConstantRotation { k: usize, theta: f64 },
    /// `G = (c/2)(x₀dx₁ − x₁dx₀)·J`: abelian, constant curvature `c` on the
    /// first two base coordinates. Needs `k ≥ 2`.
    Curvature { k: usize, c: f64 },
}

impl ConnectionPreset {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ConnectionPreset::Zero { k } | ConnectionPreset::ConstantRotation { k, .. } if k == 0 => {
                Err(Error::structural("connection needs k ≥ 1"))
            }
            ConnectionPreset::Curvature { k, .. } if k < 2 => Err(Error::structural(
                "curvature connection needs a base of dimension k ≥ 2",
            )),
            ConnectionPreset::ConstantRotation { theta: v, .. } | ConnectionPreset::Curvature { c: v, .. }
                if !v.is_finite() =>
            {
                Err(Error::Numeric("connection parameter is not finite".into()))
            }
            _ => Ok(()),
        }
    }

    fn k(&self) -> usize {
        match *self {
            ConnectionPreset::Zero { k }
            | ConnectionPreset::ConstantRotation { k, .. }
            | ConnectionPreset::Curvature { k, .. } => k,
        }
    }
}

impl Connection for ConnectionPreset {
    fn base_dim(&self) -> usize {
        self.k()
    }

    fn fiber_dim(&self) -> usize {
        2 * self.k()
    }

    fn generator(&self, base: &[f64], dx: &[f64]) -> DMatrix<f64> {
        let k = self.k();
        match *self {
            ConnectionPreset::Zero { .. } => DMatrix::zeros(2 * k, 2 * k),
            ConnectionPreset::ConstantRotation { theta, .. } => pairing_generator(k) * (theta * dx[0]),
            ConnectionPreset::Curvature { c, .. } => {
                let a = 0.5 * c * (base[0] * dx[1] - base[1] * dx[0]);
                pairing_generator(k) * a
            }
        }
    }
}

/// Connection backed by a closure `(x, dx) -> G`.
pub struct FnConnection<F> {
    base_dim: usize,
    fiber_dim: usize,
    f: F,
}

impl<F> FnConnection<F>
where
    F: Fn(&[f64], &[f64]) -> DMatrix<f64>,
{
    pub fn new(base_dim: usize, fiber_dim: usize, f: F) -> Self {
        Self { base_dim, fiber_dim, f }
    }
}

impl<F> Connection for FnConnection<F>
where
    F: Fn(&[f64], &[f64]) -> DMatrix<f64>,
{
    fn base_dim(&self) -> usize {
        self.base_dim
    }

    fn fiber_dim(&self) -> usize {
        self.fiber_dim
    }

    fn generator(&self, base: &[f64], dx: &[f64]) -> DMatrix<f64> {
        (self.f)(base, dx)
    }
}

fn check_path<C: Connection + ?Sized>(path: &[DVector<f64>], conn: &C, steps: usize) -> Result<()> {
    if path.len() < 2 {
        return Err(Error::Contract("transport path needs at least 2 points".into()));
    }
    if steps == 0 {
        return Err(Error::Contract("steps_per_segment must be at least 1".into()));
    }
    for (i, p) in path.iter().enumerate() {
        if p.len() != conn.base_dim() {
            return Err(Error::structural(format!(
                "path point {i} has dimension {}, base has {}",
                p.len(),
                conn.base_dim()
            )));
        }
    }
    Ok(())
}

/// Path-ordered transport operator along a polyline.
pub fn transport_matrix<C: Connection + ?Sized>(
    path: &[DVector<f64>],
    conn: &C,
    steps_per_segment: usize,
) -> Result<DMatrix<f64>> {
    check_path(path, conn, steps_per_segment)?;
    let n = conn.fiber_dim();
    let mut acc = DMatrix::identity(n, n);
    for seg in path.windows(2) {
        let delta = (&seg[1] - &seg[0]) / steps_per_segment as f64;
        for s in 0..steps_per_segment {
            let x = &seg[0] + &delta * s as f64;
            let g = conn.generator(x.as_slice(), delta.as_slice());
            if g.nrows() != n || g.ncols() != n {
                return Err(Error::structural(format!(
                    "generator is {}×{}, fiber dimension is {n}",
                    g.nrows(),
                    g.ncols()
                )));
            }
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!("non-finite generator at base point {:?}", x.as_slice())));
            }
            acc = (-g).exp() * acc;
        }
    }
    Ok(acc)
}

pub fn transport<C: Connection + ?Sized>(
    fiber: &DVector<f64>,
    path: &[DVector<f64>],
    conn: &C,
    steps_per_segment: usize,
) -> Result<DVector<f64>> {
    if fiber.len() != conn.fiber_dim() {
        return Err(Error::structural(format!(
            "fiber has length {}, connection expects {}",
            fiber.len(),
            conn.fiber_dim()
        )));
    }
    Ok(transport_matrix(path, conn, steps_per_segment)? * fiber)
}

/// Transport operator around a closed polyline (first point == last point).
pub fn holonomy<C: Connection + ?Sized>(
    closed_loop: &[DVector<f64>],
    conn: &C,
    steps_per_segment: usize,
) -> Result<DMatrix<f64>> {
    match (closed_loop.first(), closed_loop.last()) {
        (Some(a), Some(b)) if closed_loop.len() >= 2 && a == b => {}
        _ => return Err(Error::Contract("holonomy needs a closed polyline (start == end)".into())),
    }
    transport_matrix(closed_loop, conn, steps_per_segment)
}

/// A point of the finite base domain, ordered and compared bitwise
/// (with `-0.0` folded onto `0.0`).
#[derive(Debug, Clone, Serialize)]
#[serde(transparent)]
pub struct BasePoint(Vec<f64>);

impl BasePoint {
    pub fn new(coords: impl Into<Vec<f64>>) -> Result<Self> {
        let mut c: Vec<f64> = coords.into();
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("base point has non-finite coordinates".into()));
        }
        for v in &mut c {
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        Ok(Self(c))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

impl PartialEq for BasePoint {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for BasePoint {}

impl PartialOrd for BasePoint {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for BasePoint {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or_else(|| self.0.len().cmp(&other.0.len()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseCover {
    regions: Vec<BTreeSet<BasePoint>>,
}

impl BaseCover {
    pub fn new(regions: Vec<Vec<BasePoint>>) -> Self {
        Self {
            regions: regions.into_iter().map(|r| r.into_iter().collect()).collect(),
        }
    }

    pub fn regions(&self) -> &[BTreeSet<BasePoint>] {
        &self.regions
    }

    pub fn domain(&self) -> BTreeSet<BasePoint> {
        self.regions.iter().flatten().cloned().collect()
    }

    pub fn overlap(&self, a: usize, b: usize) -> impl Iterator<Item = &BasePoint> {
        self.regions[a].intersection(&self.regions[b])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSection {
    pub region: usize,
    pub values: BTreeMap<BasePoint, DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlobalSection {
    pub values: BTreeMap<BasePoint, DVector<f64>>,
}

impl GlobalSection {
    pub fn restrict(&self, cover: &BaseCover) -> Result<Vec<LocalSection>> {
        cover
            .regions
            .iter()
            .enumerate()
            .map(|(region, pts)| {
                let values = pts
                    .iter()
                    .map(|p| {
                        self.values
                            .get(p)
                            .map(|v| (p.clone(), v.clone()))
                            .ok_or_else(|| Error::structural(format!("global section undefined at {:?}", p.coords())))
                    })
                    .collect::<Result<_>>()?;
                Ok(LocalSection { region, values })
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    pub region_a: usize,
    pub region_b: usize,
    pub point: BasePoint,
    pub fiber_a: Vec<f64>,
    pub fiber_b: Vec<f64>,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub conflicts: Vec<Conflict>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GlueOutcome {
    Glued(GlobalSection),
    Obstructed(ObstructionReport),
}

/// Merges local sections that agree on every overlap within `tol`
/// (Euclidean norm of the fiber difference). Otherwise reports every
/// conflicting overlap point.
pub fn glue(cover: &BaseCover, sections: &[LocalSection], tol: f64) -> Result<GlueOutcome> {
    let n = cover.regions.len();
    if sections.len() != n {
        return Err(Error::structural(format!(
            "{} sections supplied for {n} regions",
            sections.len()
        )));
    }
    let mut by_region: Vec<Option<&LocalSection>> = vec![None; n];
    for s in sections {
        let slot = by_region
            .get_mut(s.region)
            .ok_or_else(|| Error::structural(format!("section refers to unknown region {}", s.region)))?;
        if slot.replace(s).is_some() {
            return Err(Error::structural(format!("two sections for region {}", s.region)));
        }
    }
    let by_region: Vec<&LocalSection> = by_region.into_iter().map(|s| s.unwrap()).collect();

    let mut fiber_dim = None;
    for (r, (pts, sec)) in cover.regions.iter().zip(&by_region).enumerate() {
        for p in pts {
            let v = sec.values.get(p).ok_or_else(|| {
                Error::structural(format!("section for region {r} undefined at {:?}", p.coords()))
            })?;
            match fiber_dim {
                None => fiber_dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(Error::structural("sections disagree on fiber dimension"));
                }
                _ => {}
            }
        }
        if let Some(p) = sec.values.keys().find(|p| !pts.contains(*p)) {
            return Err(Error::structural(format!(
                "section for region {r} assigns a value outside its region at {:?}",
                p.coords()
            )));
        }
    }

    let mut conflicts = Vec::new();
    for a in 0..n {
        for b in (a + 1)..n {
            for p in cover.overlap(a, b) {
                let fa = &by_region[a].values[p];
                let fb = &by_region[b].values[p];
                let discrepancy = (fa - fb).norm();
                if !(discrepancy <= tol) {
                    conflicts.push(Conflict {
                        region_a: a,
                        region_b: b,
                        point: p.clone(),
                        fiber_a: fa.as_slice().to_vec(),
                        fiber_b: fb.as_slice().to_vec(),
                        discrepancy,
                    });
                }
            }
        }
    }
    if !conflicts.is_empty() {
        return Ok(GlueOutcome::Obstructed(ObstructionReport { conflicts }));
    }

    // The lowest-index region covering a point supplies its value.
    let mut values = BTreeMap::new();
    for sec in &by_region {
        for (p, v) in &sec.values {
            values.entry(p.clone()).or_insert_with(|| v.clone());
        }
    }
    Ok(GlueOutcome::Glued(GlobalSection { values }))
}
