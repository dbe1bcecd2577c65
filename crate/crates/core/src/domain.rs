//! Regular parts `g(w, z)` of Green's functions and the Robin function
//! `h(p) = g(p, p)`.
//!
//! Second derivatives are returned as 2x2 matrices. For `hess_wz` the entry
//! `(a, b)` is `∂_{w_a} ∂_{z_b} g`. Derivatives in the second slot follow from
//! the symmetry `g(w, z) = g(z, w)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::system::{Mat2, Vec2};

/// Minimum admissible `1 - |p|^2` in the disk.
pub const BOUNDARY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params")]
pub enum DomainModel {
    Plane,
    UnitDisk,
    HalfPlane,
    /// `g(w, z) = wᵀ A z` on the whole plane, `A` symmetric (row-major).
    SyntheticQuadratic([[f64; 2]; 2]),
}

impl DomainModel {
    pub fn synthetic(a: Mat2) -> Result<Self> {
        if (a[(0, 1)] - a[(1, 0)]).abs() > 1e-14 * a.norm().max(1.0) {
            return Err(Error::InvalidParameter("quadratic form must be symmetric".into()));
        }
        Ok(Self::SyntheticQuadratic([[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]]))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Plane => "plane",
            Self::UnitDisk => "disk",
            Self::HalfPlane => "halfplane",
            Self::SyntheticQuadratic(_) => "quadratic",
        }
    }

    /// True when `g ≡ 0`.
    pub fn is_plane(&self) -> bool {
        matches!(self, Self::Plane)
    }

    pub fn contains(&self, p: &Vec2) -> bool {
        match self {
            Self::Plane | Self::SyntheticQuadratic(_) => p.x.is_finite() && p.y.is_finite(),
            Self::UnitDisk => p.norm_squared() < 1.0,
            Self::HalfPlane => p.y > 0.0,
        }
    }

    /// Euclidean distance to the boundary; infinite for unbounded models.
    pub fn boundary_distance(&self, p: &Vec2) -> f64 {
        match self {
            Self::Plane | Self::SyntheticQuadratic(_) => f64::INFINITY,
            Self::UnitDisk => 1.0 - p.norm(),
            Self::HalfPlane => p.y,
        }
    }

    pub fn check(&self, p: &Vec2) -> Result<()> {
        if !self.contains(p) {
            return Err(Error::Domain { index: 0 });
        }
        if let Self::UnitDisk = self {
            let distance = 1.0 - p.norm_squared();
            if distance < BOUNDARY_TOL {
                return Err(Error::Boundary { distance });
            }
        }
        Ok(())
    }

    fn quad(a: &[[f64; 2]; 2]) -> Mat2 {
        Mat2::new(a[0][0], a[0][1], a[1][0], a[1][1])
    }

    pub fn g(&self, w: &Vec2, z: &Vec2) -> f64 {
        match self {
            Self::Plane => 0.0,
            Self::UnitDisk => {
                let q = w.norm_squared() * z.norm_squared() - 2.0 * w.dot(z) + 1.0;
                -q.ln() / (4.0 * PI)
            }
            Self::HalfPlane => {
                let e = Vec2::new(w.x - z.x, w.y + z.y);
                -e.norm_squared().ln() / (4.0 * PI)
            }
            Self::SyntheticQuadratic(a) => w.dot(&(Self::quad(a) * z)),
        }
    }

    /// `∇_w g(w, z)`.
    pub fn grad_w(&self, w: &Vec2, z: &Vec2) -> Vec2 {
        match self {
            Self::Plane => Vec2::zeros(),
            Self::UnitDisk => {
                let q = w.norm_squared() * z.norm_squared() - 2.0 * w.dot(z) + 1.0;
                let qw = 2.0 * z.norm_squared() * w - 2.0 * z;
                -qw / (4.0 * PI * q)
            }
            Self::HalfPlane => {
                let e = Vec2::new(w.x - z.x, w.y + z.y);
                -e / (2.0 * PI * e.norm_squared())
            }
            Self::SyntheticQuadratic(a) => Self::quad(a) * z,
        }
    }

    /// `∂²g/∂w²`.
    pub fn hess_ww(&self, w: &Vec2, z: &Vec2) -> Mat2 {
        match self {
            Self::Plane | Self::SyntheticQuadratic(_) => Mat2::zeros(),
            Self::UnitDisk => {
                let z2 = z.norm_squared();
                let q = w.norm_squared() * z2 - 2.0 * w.dot(z) + 1.0;
                let qw = 2.0 * z2 * w - 2.0 * z;
                let qww = Mat2::identity() * (2.0 * z2);
                -(qww / q - qw * qw.transpose() / (q * q)) / (4.0 * PI)
            }
            Self::HalfPlane => {
                let e = Vec2::new(w.x - z.x, w.y + z.y);
                log_hessian(&e) * (-1.0 / (2.0 * PI))
            }
        }
    }

    /// `∂²g/∂w∂z`, entry `(a, b) = ∂_{w_a} ∂_{z_b} g`.
    pub fn hess_wz(&self, w: &Vec2, z: &Vec2) -> Mat2 {
        match self {
            Self::Plane => Mat2::zeros(),
            Self::UnitDisk => {
                let q = w.norm_squared() * z.norm_squared() - 2.0 * w.dot(z) + 1.0;
                let qw = 2.0 * z.norm_squared() * w - 2.0 * z;
                let qz = 2.0 * w.norm_squared() * z - 2.0 * w;
                let qwz = 4.0 * w * z.transpose() - 2.0 * Mat2::identity();
                -(qwz / q - qw * qz.transpose() / (q * q)) / (4.0 * PI)
            }
            Self::HalfPlane => {
                let e = Vec2::new(w.x - z.x, w.y + z.y);
                let reflect = Mat2::new(-1.0, 0.0, 0.0, 1.0);
                log_hessian(&e) * reflect * (-1.0 / (2.0 * PI))
            }
            Self::SyntheticQuadratic(a) => Self::quad(a),
        }
    }

    /// Robin function `h(p) = g(p, p)`.
    pub fn h(&self, p: &Vec2) -> Result<f64> {
        self.check(p)?;
        Ok(match self {
            Self::Plane => 0.0,
            Self::UnitDisk => -(1.0 - p.norm_squared()).ln() / (2.0 * PI),
            Self::HalfPlane => -(2.0 * p.y).ln() / (2.0 * PI),
            Self::SyntheticQuadratic(a) => p.dot(&(Self::quad(a) * p)),
        })
    }

    pub fn grad_h(&self, p: &Vec2) -> Result<Vec2> {
        self.check(p)?;
        Ok(match self {
            Self::Plane => Vec2::zeros(),
            Self::UnitDisk => p / (PI * (1.0 - p.norm_squared())),
            Self::HalfPlane => Vec2::new(0.0, -1.0 / (2.0 * PI * p.y)),
            Self::SyntheticQuadratic(a) => 2.0 * Self::quad(a) * p,
        })
    }

    pub fn hess_h(&self, p: &Vec2) -> Result<Mat2> {
        self.check(p)?;
        Ok(match self {
            Self::Plane => Mat2::zeros(),
            Self::UnitDisk => {
                let s = 1.0 - p.norm_squared();
                (Mat2::identity() / s + 2.0 * p * p.transpose() / (s * s)) / PI
            }
            Self::HalfPlane => Mat2::new(0.0, 0.0, 0.0, 1.0 / (2.0 * PI * p.y * p.y)),
            Self::SyntheticQuadratic(a) => 2.0 * Self::quad(a),
        })
    }
}

/// Hessian of `log|e|` with respect to `e`.
fn log_hessian(e: &Vec2) -> Mat2 {
    let e2 = e.norm_squared();
    (Mat2::identity() * e2 - 2.0 * e * e.transpose()) / (e2 * e2)
}
