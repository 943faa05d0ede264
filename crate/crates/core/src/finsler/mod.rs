//! Randers-type asymmetric cost geometry.
//!
//! `F(x, v) = φ(x) · (√(vᵀAv) + bᵀv)` with `A` symmetric positive definite,
//! drift one-form `b` satisfying `bᵀA⁻¹b < 1`, and a positive conformal
//! factor `φ`. The drift carries the directional frictions, so that in
//! general the cost of going from `x` to `y` differs from the way back.

mod geodesic;
pub mod grid;

pub use geodesic::{distance, geodesic, geodesic_from, DescentSettings, Distance, Geodesic};

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};
use serde::Serialize;

use crate::linalg::{asymmetry, dot, kron_identity, lift_vector, min_symmetric_eigenvalue, quad_form};
use crate::state::DimensionLayout;
use crate::{Error, Result};

/// Gaussian bump `amplitude · exp(-‖x − center‖² / (2·width²))`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bump {
    pub amplitude: f64,
    pub center: Vec<f64>,
    pub width: f64,
}

impl Bump {
    fn eval(&self, x: &[f64]) -> f64 {
        let r2: f64 = x.iter().zip(&self.center).map(|(a, c)| (a - c) * (a - c)).sum();
        self.amplitude * (-r2 / (2.0 * self.width * self.width)).exp()
    }
}

/// Scalar conformal factor `φ(x)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "preset", rename_all = "snake_case")]
pub enum Conformal {
    Constant { value: f64 },
    /// `1 + Σ bumps`.
    Bumps { bumps: Vec<Bump> },
}

impl Default for Conformal {
    fn default() -> Self {
        Conformal::Constant { value: 1.0 }
    }
}

impl Conformal {
    pub fn bump(amplitude: f64, center: Vec<f64>, width: f64) -> Self {
        Conformal::Bumps {
            bumps: vec![Bump { amplitude, center, width }],
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Conformal::Constant { value } => *value,
            Conformal::Bumps { bumps } => 1.0 + bumps.iter().map(|b| b.eval(x)).sum::<f64>(),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Conformal::Constant { .. })
    }

    /// Guaranteed lower bound of `φ` over the whole space.
    pub fn lower_bound(&self) -> f64 {
        match self {
            Conformal::Constant { value } => *value,
            Conformal::Bumps { bumps } => 1.0 + bumps.iter().map(|b| b.amplitude.min(0.0)).sum::<f64>(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RandersMetric {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub phi: Conformal,
}

/// Outcome of [`RandersMetric::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RandersDiagnostics {
    pub min_eigenvalue: f64,
    /// `bᵀA⁻¹b`; must stay below 1.
    pub drift_norm_sq: f64,
    pub phi_lower_bound: f64,
    pub ok: bool,
    pub violations: Vec<String>,
}

impl RandersMetric {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>, phi: Conformal) -> Self {
        Self { a, b, phi }
    }

    pub fn riemannian(a: DMatrix<f64>) -> Self {
        let n = a.nrows();
        Self::new(a, DVector::zeros(n), Conformal::default())
    }

    /// Lifts per-dimension data onto block coordinates: `A ⊗ I_k`, `b ⊗ 1_k`.
    pub fn from_blocks(a: &Matrix3<f64>, b: &Vector3<f64>, phi: Conformal, layout: DimensionLayout) -> Self {
        Self::new(kron_identity(a, layout.k()), lift_vector(b, layout.k()), phi)
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn validate(&self) -> Result<RandersDiagnostics> {
        let n = self.a.nrows();
        if self.a.ncols() != n || self.b.len() != n {
            return Err(Error::structural(format!(
                "A is {}×{} but b has length {}",
                self.a.nrows(),
                self.a.ncols(),
                self.b.len()
            )));
        }
        if self.a.iter().chain(self.b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("metric has non-finite entries".into()));
        }
        let scale = self.a.amax().max(1.0);
        let asym = asymmetry(&self.a);
        if asym > 1e-12 * scale {
            return Err(Error::structural(format!("A is not symmetric (|A − Aᵀ|∞ = {asym:e})")));
        }
        if let Conformal::Bumps { bumps } = &self.phi {
            if bumps.iter().any(|b| b.center.len() != n) {
                return Err(Error::structural("bump center dimension does not match the metric"));
            }
        }
        let min_eigenvalue = min_symmetric_eigenvalue(&self.a);
        let mut violations = Vec::new();
        let drift_norm_sq = if min_eigenvalue > 0.0 {
            match self.a.clone().cholesky() {
                Some(ch) => self.b.dot(&ch.solve(&self.b)),
                None => f64::INFINITY,
            }
        } else {
            violations.push(format!("A is not positive definite (min eigenvalue {min_eigenvalue:e})"));
            f64::NAN
        };
        if !(drift_norm_sq < 1.0) && min_eigenvalue > 0.0 {
            violations.push(format!("Randers condition bᵀA⁻¹b < 1 violated ({drift_norm_sq})"));
        }
        let phi_lower_bound = self.phi.lower_bound();
        let phi_ok = match &self.phi {
            Conformal::Constant { value } => *value > 0.0 && value.is_finite(),
            Conformal::Bumps { bumps } => {
                phi_lower_bound > 0.0 && bumps.iter().all(|b| b.width > 0.0 && b.amplitude.is_finite())
            }
        };
        if !phi_ok {
            violations.push("conformal factor is not guaranteed positive".to_string());
        }
        Ok(RandersDiagnostics {
            min_eigenvalue,
            drift_norm_sq,
            phi_lower_bound,
            ok: violations.is_empty(),
            violations,
        })
    }

    /// `F(x, v)`; zero for `v = 0`.
    pub fn eval(&self, x: &[f64], v: &[f64]) -> f64 {
        let q = quad_form(self.a.as_slice(), v);
        if q == 0.0 && v.iter().all(|c| *c == 0.0) {
            return 0.0;
        }
        self.phi.eval(x) * (q.max(0.0).sqrt() + dot(self.b.as_slice(), v))
    }

    /// `√(vᵀAv) + bᵀv`, the metric with `φ` factored out.
    fn eval_unscaled(&self, v: &[f64]) -> f64 {
        if v.iter().all(|c| *c == 0.0) {
            return 0.0;
        }
        quad_form(self.a.as_slice(), v).max(0.0).sqrt() + dot(self.b.as_slice(), v)
    }

    /// Fundamental tensor `g_ij = ½ ∂²F²/∂vⁱ∂vʲ` by central differences of
    /// `F²`, Richardson-extrapolated from steps `h` and `h/2` with
    /// `h = 1e-2·‖v‖`. Computed on the upper triangle and mirrored.
    pub fn fundamental_tensor(&self, x: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
        let vnorm = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            return Err(Error::domain("fundamental tensor is undefined at v = 0"));
        }
        let h = 1e-2 * vnorm;
        let coarse = self.hessian_fd(x, v, h);
        let fine = self.hessian_fd(x, v, 0.5 * h);
        Ok((fine * 4.0 - coarse) / 3.0)
    }

    fn hessian_fd(&self, x: &[f64], v: &[f64], h: f64) -> DMatrix<f64> {
        let n = v.len();
        let mut w = v.to_vec();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let mut probe = |si: f64, sj: f64| {
                    w.copy_from_slice(v);
                    w[i] += si * h;
                    w[j] += sj * h;
                    let f = self.eval(x, &w);
                    f * f
                };
                let val = (probe(1.0, 1.0) - probe(1.0, -1.0) - probe(-1.0, 1.0) + probe(-1.0, -1.0))
                    / (8.0 * h * h);
                g[(i, j)] = val;
                g[(j, i)] = val;
            }
        }
        g
    }

    /// Cost of a polyline. Along a straight segment `Δ` is constant, so the
    /// segment cost is `(√(ΔᵀAΔ) + bᵀΔ)·∫φ`: exact for constant `φ`, and
    /// three-point Gauss–Legendre in `φ` otherwise. A one-point rule lets
    /// an optimizer slip long segments across narrow bumps.
    pub fn path_cost(&self, path: &PathPolyline) -> f64 {
        polyline_cost(self, &path.waypoints)
    }
}

const GAUSS3: [(f64, f64); 3] = [
    (0.5 - 0.387_298_334_620_741_7, 5.0 / 18.0),
    (0.5, 8.0 / 18.0),
    (0.5 + 0.387_298_334_620_741_7, 5.0 / 18.0),
];

pub(crate) fn segment_cost(m: &RandersMetric, a: &[f64], b: &[f64], mid: &mut [f64], d: &mut [f64]) -> f64 {
    for i in 0..a.len() {
        mid[i] = 0.5 * (a[i] + b[i]);
        d[i] = b[i] - a[i];
    }
    if m.phi.is_constant() {
        return m.eval(mid, d);
    }
    let gauge = m.eval_unscaled(d);
    if gauge == 0.0 {
        return 0.0;
    }
    let mut phi = 0.0;
    for (t, w) in GAUSS3 {
        for i in 0..a.len() {
            mid[i] = a[i] + t * d[i];
        }
        phi += w * m.phi.eval(mid);
    }
    gauge * phi
}

pub(crate) fn polyline_cost(m: &RandersMetric, pts: &[DVector<f64>]) -> f64 {
    let n = m.dim();
    let mut mid = vec![0.0; n];
    let mut d = vec![0.0; n];
    pts.windows(2)
        .map(|w| segment_cost(m, w[0].as_slice(), w[1].as_slice(), &mut mid, &mut d))
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathPolyline {
    waypoints: Vec<DVector<f64>>,
}

impl PathPolyline {
    pub fn new(waypoints: Vec<DVector<f64>>) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::structural("a path needs at least two waypoints"));
        }
        let dim = waypoints[0].len();
        if waypoints.iter().any(|w| w.len() != dim) {
            return Err(Error::structural("waypoints have mixed dimensions"));
        }
        if waypoints.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::structural("consecutive waypoints must be distinct"));
        }
        Ok(Self { waypoints })
    }

    /// `n ≥ 2` evenly spaced points from `x` to `y`.
    pub fn straight(x: &DVector<f64>, y: &DVector<f64>, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::structural("a path needs at least two waypoints"));
        }
        let pts = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                x + (y - x) * t
            })
            .collect();
        Self::new(pts)
    }

    pub fn waypoints(&self) -> &[DVector<f64>] {
        &self.waypoints
    }

    pub fn reversed(&self) -> Self {
        let mut w = self.waypoints.clone();
        w.reverse();
        Self { waypoints: w }
    }

    /// Concatenates `other` after `self`; `other` must start where `self` ends.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        if self.waypoints.last() != other.waypoints.first() {
            return Err(Error::structural("paths do not meet"));
        }
        let mut w = self.waypoints.clone();
        w.extend(other.waypoints.iter().skip(1).cloned());
        Self::new(w)
    }
}

/// The three directional frictions of cross-dimensional movement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frictions {
    /// Abstraction: physical → digital.
    pub phy_to_dig: f64,
    /// Materialization: digital → physical.
    pub dig_to_phy: f64,
    /// Legitimization: gaining social standing.
    pub soc: f64,
}

impl Frictions {
    /// Drift one-form encoding the frictions. With `b_p = (η_dp − η_pd)/4`,
    /// `b_d = −b_p`, `b_s = η_soc/2`, the constant-coefficient cost of the
    /// move `e_d − e_p` minus that of `e_p − e_d` equals `η_pd − η_dp`, and a
    /// unit gain in the social coordinate costs `η_soc` more than a unit loss.
    pub fn drift(&self) -> Vector3<f64> {
        let bp = (self.dig_to_phy - self.phy_to_dig) / 4.0;
        Vector3::new(bp, -bp, self.soc / 2.0)
    }

    /// Materialization is expected to dominate abstraction.
    pub fn lint(&self) -> Option<String> {
        (self.dig_to_phy < self.phy_to_dig).then(|| {
            format!(
                "dig_to_phy friction ({}) is below phy_to_dig friction ({}); materialization is expected to dominate abstraction",
                self.dig_to_phy, self.phy_to_dig
            )
        })
    }
}

/// Informational loss of abstraction, `u_input − d_output`.
pub fn abstraction_loss(u_input: f64, d_output: f64) -> f64 {
    u_input - d_output
}
