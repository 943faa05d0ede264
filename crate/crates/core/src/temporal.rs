//! Temporal flows as vector fields on the state space, their Lie brackets,
//! the pairwise shear tensor and the synchronization cost it induces.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::{Error, Result};

/// Default central-difference step for tabulated Jacobians.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Samples on a rectilinear grid, interpolated multilinearly.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedField {
    axes: Vec<Vec<f64>>,
    /// Node-major: the `dim` components of node 0, then node 1, ...
    values: Vec<f64>,
    fd_step: f64,
}

impl TabulatedField {
    /// Tabulates `f` at every node of the product grid `axes`.
    pub fn sample<F>(axes: Vec<Vec<f64>>, f: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> Vec<f64>,
    {
        let dim = axes.len();
        if dim == 0 || axes.iter().any(|a| a.len() < 2) {
            return Err(Error::structural("every grid axis needs at least two nodes"));
        }
        if axes.iter().any(|a| a.windows(2).any(|w| !(w[1] > w[0]))) {
            return Err(Error::structural("grid axes must be strictly increasing"));
        }
        let count: usize = axes.iter().map(Vec::len).product();
        let mut values = Vec::with_capacity(count * dim);
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0; dim];
        for _ in 0..count {
            for d in 0..dim {
                x[d] = axes[d][idx[d]];
            }
            let v = f(&x);
            if v.len() != dim {
                return Err(Error::structural("tabulated field must map R^n to R^n"));
            }
            values.extend(v);
            // last axis fastest
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < axes[d].len() {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(Self { axes, values, fd_step: DEFAULT_FD_STEP })
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    fn node_offset(&self, idx: &[usize]) -> usize {
        let mut off = 0;
        for (d, &i) in idx.iter().enumerate() {
            off = off * self.axes[d].len() + i;
        }
        off * self.dim()
    }

    pub fn eval(&self, x: &[f64]) -> Result<DVector<f64>> {
        let dim = self.dim();
        if x.len() != dim {
            return Err(Error::structural("point dimension does not match the field"));
        }
        let mut cell = vec![0usize; dim];
        let mut frac = vec![0.0; dim];
        for d in 0..dim {
            let ax = &self.axes[d];
            let (lo, hi) = (ax[0], ax[ax.len() - 1]);
            if !(x[d] >= lo && x[d] <= hi) {
                return Err(Error::domain(format!(
                    "point {:?} lies outside the tabulated grid on axis {d} [{lo}, {hi}]",
                    x
                )));
            }
            let i = ax.partition_point(|v| *v <= x[d]).clamp(1, ax.len() - 1) - 1;
            cell[d] = i;
            frac[d] = (x[d] - ax[i]) / (ax[i + 1] - ax[i]);
        }
        let mut out = DVector::zeros(dim);
        let mut corner = vec![0usize; dim];
        for mask in 0..(1usize << dim) {
            let mut w = 1.0;
            for d in 0..dim {
                let up = (mask >> d) & 1 == 1;
                corner[d] = cell[d] + usize::from(up);
                w *= if up { frac[d] } else { 1.0 - frac[d] };
            }
            if w == 0.0 {
                continue;
            }
            let off = self.node_offset(&corner);
            for c in 0..dim {
                out[c] += w * self.values[off + c];
            }
        }
        Ok(out)
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        let h = self.fd_step;
        let mut j = DMatrix::zeros(dim, dim);
        let mut p = x.to_vec();
        for c in 0..dim {
            p[c] = x[c] + h;
            let plus = self.eval(&p)?;
            p[c] = x[c] - h;
            let minus = self.eval(&p)?;
            p[c] = x[c];
            j.set_column(c, &((plus - minus) / (2.0 * h)));
        }
        Ok(j)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FlowField {
    /// `X(x) = M x + c`.
    Linear { m: DMatrix<f64>, c: DVector<f64> },
    Tabulated(TabulatedField),
}

impl FlowField {
    pub fn linear(m: DMatrix<f64>) -> Self {
        let n = m.nrows();
        FlowField::Linear { m, c: DVector::zeros(n) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::linear(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        match self {
            FlowField::Linear { m, .. } => m.nrows(),
            FlowField::Tabulated(t) => t.dim(),
        }
    }

    /// The same flow running `s` times faster (e.g. machine time as an
    /// accelerated digital clock).
    pub fn scaled(&self, s: f64) -> Self {
        match self {
            FlowField::Linear { m, c } => FlowField::Linear { m: m * s, c: c * s },
            FlowField::Tabulated(t) => FlowField::Tabulated(TabulatedField {
                values: t.values.iter().map(|v| v * s).collect(),
                ..t.clone()
            }),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<DVector<f64>> {
        match self {
            FlowField::Linear { m, c } => {
                if x.len() != m.ncols() {
                    return Err(Error::structural("point dimension does not match the field"));
                }
                Ok(m * DVector::from_column_slice(x) + c)
            }
            FlowField::Tabulated(t) => t.eval(x),
        }
    }

    pub fn jacobian(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        match self {
            FlowField::Linear { m, .. } => Ok(m.clone()),
            FlowField::Tabulated(t) => t.jacobian(x),
        }
    }
}

/// `[X, Y](x) = J_Y(x)·X(x) − J_X(x)·Y(x)`, the Lie derivative of `Y`
/// along `X`.
pub fn lie_bracket(x_field: &FlowField, y_field: &FlowField, x: &[f64]) -> Result<DVector<f64>> {
    if x_field.dim() != y_field.dim() {
        return Err(Error::structural("flow fields live on different spaces"));
    }
    let xv = x_field.eval(x)?;
    let yv = y_field.eval(x)?;
    Ok(y_field.jacobian(x)? * xv - x_field.jacobian(x)? * yv)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShearSample {
    pub region: Vec<Vec<f64>>,
    /// Rows/columns ordered (phy, dig, soc); zero diagonal, symmetric.
    pub tensor_norms: [[f64; 3]; 3],
}

/// RMS over `region` of `‖[τ_i, τ_j]‖` for every pair of temporal flows.
pub fn shear_tensor(flows: [&FlowField; 3], region: &[DVector<f64>]) -> Result<ShearSample> {
    if region.is_empty() {
        return Err(Error::domain("shear needs at least one sample point"));
    }
    let mut t = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in (i + 1)..3 {
            let mut acc = 0.0;
            for p in region {
                acc += lie_bracket(flows[i], flows[j], p.as_slice())?.norm_squared();
            }
            let rms = (acc / region.len() as f64).sqrt();
            t[i][j] = rms;
            t[j][i] = rms;
        }
    }
    Ok(ShearSample {
        region: region.iter().map(|p| p.as_slice().to_vec()).collect(),
        tensor_norms: t,
    })
}

/// `‖[X, Y]‖` sampled along the trajectory of `follow` from `x0`
/// (fixed-step RK4), as `(t, norm)` pairs.
pub fn shear_along_flow(
    x_field: &FlowField,
    y_field: &FlowField,
    follow: &FlowField,
    x0: &DVector<f64>,
    t_end: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    if steps == 0 || !(t_end > 0.0) {
        return Err(Error::domain("need t_end > 0 and at least one step"));
    }
    let h = t_end / steps as f64;
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(steps + 1);
    for s in 0..=steps {
        out.push((s as f64 * h, lie_bracket(x_field, y_field, x.as_slice())?.norm()));
        if s == steps {
            break;
        }
        let k1 = follow.eval(x.as_slice())?;
        let k2 = follow.eval((&x + &k1 * (0.5 * h)).as_slice())?;
        let k3 = follow.eval((&x + &k2 * (0.5 * h)).as_slice())?;
        let k4 = follow.eval((&x + &k3 * h).as_slice())?;
        x += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
    }
    Ok(out)
}

/// `c · ∫ ‖σ_τ‖ dt` by the trapezoidal rule.
pub fn sync_cost(series: &[(f64, f64)], c: f64) -> Result<f64> {
    if let Some((t, s)) = series.iter().find(|(t, s)| !(t.is_finite() && s.is_finite())) {
        return Err(Error::Numeric(format!("non-finite sample ({t}, {s})")));
    }
    if series.iter().any(|(_, s)| *s < 0.0) {
        return Err(Error::domain("shear norms must be nonnegative"));
    }
    if series.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::domain("sample times must be strictly increasing"));
    }
    let integral: f64 = series
        .windows(2)
        .map(|w| 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0))
        .sum();
    Ok(c * integral)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Coherence {
    Coherent,
    Dissociated,
}

/// Dissociated iff the synchronization cost strictly exceeds the budget.
pub fn dissociation_check(sigma: f64, budget: f64) -> Result<Coherence> {
    if !(sigma >= 0.0 && budget >= 0.0) {
        return Err(Error::domain("cost and budget must be ≥ 0"));
    }
    Ok(if sigma > budget { Coherence::Dissociated } else { Coherence::Coherent })
}
