//! Vortex strengths and the linear structure they induce on the phase space
//! `R^{2N}` (N points in the plane, stored as `[x1, y1, x2, y2, ...]`).

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::domain::DomainModel;
use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Mat2 = Matrix2<f64>;

/// Pairs closer than this are treated as collided.
pub const COLLISION_TOL: f64 = 1e-12;

/// The standard symplectic matrix with rows (0, 1), (-1, 0).
pub fn j2() -> Mat2 {
    Mat2::new(0.0, 1.0, -1.0, 0.0)
}

/// `J v` for a single planar vector.
#[inline]
pub fn apply_j(v: Vec2) -> Vec2 {
    Vec2::new(v.y, -v.x)
}

/// Rotation `e^{θJ}`; note that this turns the plane clockwise by `θ`.
pub fn exp_j(theta: f64) -> Mat2 {
    let (s, c) = theta.sin_cos();
    Mat2::new(c, s, -s, c)
}

#[inline]
pub fn point(z: &DVector<f64>, k: usize) -> Vec2 {
    Vec2::new(z[2 * k], z[2 * k + 1])
}

#[inline]
pub fn set_point(z: &mut DVector<f64>, k: usize, p: Vec2) {
    z[2 * k] = p.x;
    z[2 * k + 1] = p.y;
}

/// Applies a 2x2 matrix to every planar block of `z`.
pub fn map_blocks(z: &DVector<f64>, m: &Mat2) -> DVector<f64> {
    let mut out = z.clone();
    for k in 0..z.len() / 2 {
        set_point(&mut out, k, m * point(z, k));
    }
    out
}

/// `â = (a, ..., a)`.
pub fn lift(a: Vec2, n: usize) -> DVector<f64> {
    DVector::from_fn(2 * n, |i, _| a[i % 2])
}

/// Smallest pairwise distance; `f64::INFINITY` for a single point.
pub fn min_separation(z: &DVector<f64>) -> f64 {
    let n = z.len() / 2;
    let mut best = f64::INFINITY;
    for j in 0..n {
        for k in j + 1..n {
            best = best.min((point(z, j) - point(z, k)).norm());
        }
    }
    best
}

pub fn check_distinct(z: &DVector<f64>, tol: f64) -> Result<()> {
    let n = z.len() / 2;
    for j in 0..n {
        for k in j + 1..n {
            let separation = (point(z, j) - point(z, k)).norm();
            if separation <= tol {
                return Err(Error::Collision { i: j, j: k, separation });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VortexSystem {
    gammas: Vec<f64>,
    gamma_total: f64,
}

impl VortexSystem {
    pub fn new(gammas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() {
            return Err(Error::InvalidParameter("at least one vortex is required".into()));
        }
        if let Some(k) = gammas.iter().position(|g| *g == 0.0 || !g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "vorticity {k} must be finite and nonzero"
            )));
        }
        let gamma_total = gammas.iter().sum();
        Ok(Self { gammas, gamma_total })
    }

    pub fn n(&self) -> usize {
        self.gammas.len()
    }

    /// Phase-space dimension `2N`.
    pub fn dim(&self) -> usize {
        2 * self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn gamma(&self, k: usize) -> f64 {
        self.gammas[k]
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_total
    }

    /// `L = Σ_{j<k} Γ_j Γ_k`.
    pub fn angular_momentum(&self) -> f64 {
        let mut l = 0.0;
        for j in 0..self.n() {
            for k in j + 1..self.n() {
                l += self.gammas[j] * self.gammas[k];
            }
        }
        l
    }

    /// `M_Γ = diag(Γ_1, Γ_1, ..., Γ_N, Γ_N)`.
    pub fn weight_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim(), self.dim(), |i, j| {
            if i == j {
                self.gammas[i / 2]
            } else {
                0.0
            }
        })
    }

    /// `J_N = E_N ⊗ J`.
    pub fn symplectic_matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for k in 0..self.n() {
            m[(2 * k, 2 * k + 1)] = 1.0;
            m[(2 * k + 1, 2 * k)] = -1.0;
        }
        m
    }

    /// `M_Γ^{-1} J_N v`, the map from a gradient to a velocity.
    pub fn velocity_from_gradient(&self, grad: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.dim());
        for k in 0..self.n() {
            set_point(&mut out, k, apply_j(point(grad, k)) / self.gammas[k]);
        }
        out
    }

    /// `Σ Γ_k z_k`.
    pub fn vorticity_moment(&self, z: &DVector<f64>) -> Vec2 {
        (0..self.n()).map(|k| self.gammas[k] * point(z, k)).sum()
    }

    /// `Σ Γ_k |z_k|^2`.
    pub fn angular_impulse(&self, z: &DVector<f64>) -> f64 {
        (0..self.n()).map(|k| self.gammas[k] * point(z, k).norm_squared()).sum()
    }

    pub fn check_len(&self, z: &DVector<f64>) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: z.len() });
        }
        Ok(())
    }
}

/// A point of `R^{2N}` together with the blow-up scale it is read at.
///
/// With `r = 0` this is a configuration of the plane problem. With `r > 0`
/// the physical positions are `center + r z_k` and must lie in the domain.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    pub z: DVector<f64>,
    pub r: f64,
}

impl Configuration {
    pub fn plane(z: DVector<f64>) -> Self {
        Self { z, r: 0.0 }
    }

    pub fn scaled(z: DVector<f64>, r: f64) -> Self {
        Self { z, r }
    }

    pub fn min_separation(&self) -> f64 {
        min_separation(&self.z)
    }

    /// Membership in `O_r`, with the domain recentred at `center`.
    pub fn validate(&self, domain: &DomainModel, center: Vec2) -> Result<()> {
        check_distinct(&self.z, COLLISION_TOL)?;
        if self.r > 0.0 {
            for k in 0..self.z.len() / 2 {
                if !domain.contains(&(center + self.r * point(&self.z, k))) {
                    return Err(Error::Domain { index: k });
                }
            }
        }
        Ok(())
    }
}
