//! Ontological mass tensor: a symmetric PSD 3×3 matrix over the
//! (physical, digital, social) dimensions.
//!
//! Forces are mapped to responses through the Moore–Penrose pseudoinverse,
//! so rank-deficient tensors are exactly transparent to forces in their
//! kernel.

use nalgebra::{DVector, Matrix3, SymmetricEigen, Vector3};
use serde::Serialize;

use crate::linalg::kron_identity;
use crate::state::{Block, DimensionLayout};
use crate::{Error, Result};

/// Asymmetry above this is reported when a tensor is symmetrized on input.
const SYMMETRY_WARN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MassTensor {
    mu: Matrix3<f64>,
    rank_tol: f64,
}

/// Rank and dimensional presence of a tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub rank: usize,
    pub present: Vec<Block>,
}

impl Classification {
    pub fn is_present(&self, block: Block) -> bool {
        self.present.contains(&block)
    }
}

pub fn default_rank_tol(mu: &Matrix3<f64>) -> f64 {
    1e-9 * mu.trace().max(1.0)
}

impl MassTensor {
    /// Symmetrizes `m` as `(m + mᵀ)/2` and validates it with the default
    /// scale-relative rank tolerance.
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("mass tensor has non-finite entries".into()));
        }
        let asym = (m - m.transpose()).abs().max();
        if asym > SYMMETRY_WARN {
            log::warn!("mass tensor asymmetric by {asym:e}; symmetrizing");
        }
        let mu = (m + m.transpose()) * 0.5;
        let tol = default_rank_tol(&mu);
        Self::with_rank_tol(mu, tol)
    }

    /// `m` must already be symmetric; `rank_tol` is used verbatim.
    pub fn with_rank_tol(m: Matrix3<f64>, rank_tol: f64) -> Result<Self> {
        if !(rank_tol >= 0.0 && rank_tol.is_finite()) {
            return Err(Error::domain("rank tolerance must be finite and nonnegative"));
        }
        let mu = (m + m.transpose()) * 0.5;
        let min_eig = mu.symmetric_eigenvalues().min();
        if min_eig < -rank_tol {
            return Err(Error::PsdViolation {
                min_eigenvalue: min_eig,
                tolerance: rank_tol,
            });
        }
        if mu.trace() < 0.0 {
            return Err(Error::PsdViolation {
                min_eigenvalue: min_eig,
                tolerance: rank_tol,
            });
        }
        Ok(Self { mu, rank_tol })
    }

    pub fn from_row_major(v: [f64; 9]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&v))
    }

    /// Diagonal plus the three independent off-diagonal couplings.
    pub fn from_parts(diag: [f64; 3], pd: f64, ps: f64, ds: f64) -> Result<Self> {
        Self::new(Matrix3::new(
            diag[0], pd, ps, //
            pd, diag[1], ds, //
            ps, ds, diag[2],
        ))
    }

    pub fn diagonal(d: [f64; 3]) -> Result<Self> {
        Self::from_parts(d, 0.0, 0.0, 0.0)
    }

    pub fn identity() -> Self {
        Self {
            mu: Matrix3::identity(),
            rank_tol: 1e-9 * 3.0,
        }
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.mu
    }

    pub fn rank_tol(&self) -> f64 {
        self.rank_tol
    }

    pub fn trace(&self) -> f64 {
        self.mu.trace()
    }

    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::U3> {
        self.mu.symmetric_eigen()
    }

    pub fn classify(&self) -> Classification {
        let rank = self
            .eigen()
            .eigenvalues
            .iter()
            .filter(|&&l| l > self.rank_tol)
            .count();
        let present = Block::ALL
            .into_iter()
            .filter(|b| self.mu.row(b.index()).norm() > self.rank_tol)
            .collect();
        Classification { rank, present }
    }

    pub fn pseudoinverse(&self) -> Matrix3<f64> {
        let eig = self.eigen();
        let mut out = Matrix3::zeros();
        for (i, &l) in eig.eigenvalues.iter().enumerate() {
            if l > self.rank_tol {
                let q = eig.eigenvectors.column(i);
                out += (q * q.transpose()) / l;
            }
        }
        out
    }

    /// `a = μ⁺ Φ` for a per-dimension force.
    pub fn respond(&self, force: &Vector3<f64>) -> Vector3<f64> {
        self.pseudoinverse() * force
    }

    /// `a = (μ⁺ ⊗ I_k) Φ` for a force over block coordinates.
    pub fn respond_blocks(&self, force: &DVector<f64>, layout: DimensionLayout) -> Result<DVector<f64>> {
        if force.len() != layout.dim() {
            return Err(Error::structural(format!(
                "block force has length {}, expected {}",
                force.len(),
                layout.dim()
            )));
        }
        Ok(kron_identity(&self.pseudoinverse(), layout.k()) * force)
    }

    /// True when `force` lies in the kernel of `μ` within tolerance. The
    /// zero force is vacuously transparent.
    pub fn is_transparent_to(&self, force: &Vector3<f64>) -> bool {
        let fnorm = force.norm();
        if fnorm == 0.0 {
            return true;
        }
        self.respond(force).norm() <= self.rank_tol * fnorm
    }

    /// Physical row (and column) vanish within the rank tolerance.
    pub fn has_degenerate_physical_block(&self) -> bool {
        self.mu.row(0).norm() <= self.rank_tol
    }
}
