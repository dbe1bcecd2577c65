//! Rigidly rotating configurations of the plane problem and their Floquet
//! nondegeneracy.
//!
//! A relative equilibrium is `Z(t) = e^{-ωJt} z` with centre of vorticity at
//! the origin. Its nondegeneracy is decided from the monodromy of
//! `M_Γ ẇ = J_N H0''(Z(t)) w` over one period.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{grad_h0, hess_h0};
use crate::system::{apply_j, exp_j, lift, map_blocks, point, set_point, Vec2, VortexSystem};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelativeEquilibrium {
    pub sys: VortexSystem,
    pub z: DVector<f64>,
    pub omega: f64,
}

impl RelativeEquilibrium {
    pub fn new(sys: VortexSystem, z: DVector<f64>, omega: f64) -> Result<Self> {
        sys.check_len(&z)?;
        if sys.n() < 2 {
            return Err(Error::InvalidParameter("a relative equilibrium needs N >= 2".into()));
        }
        if omega == 0.0 || !omega.is_finite() {
            return Err(Error::InvalidParameter("angular velocity must be nonzero".into()));
        }
        Ok(Self { sys, z, omega })
    }

    pub fn period(&self) -> f64 {
        2.0 * PI / self.omega.abs()
    }

    /// `Z(t) = e^{-ωJt} z`.
    pub fn at(&self, t: f64) -> DVector<f64> {
        map_blocks(&self.z, &exp_j(-self.omega * t))
    }

    /// `Ż(t) = -ω J Z(t)`.
    pub fn velocity_at(&self, t: f64) -> DVector<f64> {
        let zt = self.at(t);
        let mut out = DVector::zeros(zt.len());
        for k in 0..zt.len() / 2 {
            set_point(&mut out, k, -self.omega * apply_j(point(&zt, k)));
        }
        out
    }

    pub fn center_of_vorticity_moment(&self) -> Vec2 {
        self.sys.vorticity_moment(&self.z)
    }
}

fn require_total(sys: &VortexSystem) -> Result<()> {
    if sys.gamma_total().abs() <= 1e-14 * sys.gammas().iter().map(|g| g.abs()).sum::<f64>() {
        return Err(Error::ZeroTotalVorticity);
    }
    Ok(())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

/// Two vortices at distance `d` on the horizontal axis with `Γ1 z1 + Γ2 z2 = 0`.
pub fn make_pair(g1: f64, g2: f64, d: f64) -> Result<RelativeEquilibrium> {
    let sys = VortexSystem::new(vec![g1, g2])?;
    require_total(&sys)?;
    positive("separation", d)?;
    let total = g1 + g2;
    let z = DVector::from_vec(vec![g2 * d / total, 0.0, -g1 * d / total, 0.0]);
    RelativeEquilibrium::new(sys, z, total / (PI * d * d))
}

/// Three vortices on an equilateral triangle of side `s`, shifted so the
/// centre of vorticity is at the origin; `ω = (Γ1+Γ2+Γ3)/(π s²)`.
pub fn make_triangle(g1: f64, g2: f64, g3: f64, s: f64) -> Result<RelativeEquilibrium> {
    let sys = VortexSystem::new(vec![g1, g2, g3])?;
    require_total(&sys)?;
    positive("side", s)?;
    let verts = [
        Vec2::new(0.0, 0.0),
        Vec2::new(s, 0.0),
        Vec2::new(0.5 * s, 0.5 * 3f64.sqrt() * s),
    ];
    let total = sys.gamma_total();
    let c: Vec2 = (0..3).map(|k| sys.gamma(k) * verts[k]).sum::<Vec2>() / total;
    let mut z = DVector::zeros(6);
    for (k, v) in verts.iter().enumerate() {
        set_point(&mut z, k, v - c);
    }
    RelativeEquilibrium::new(sys, z, total / (PI * s * s))
}

/// Thomson's regular N-gon of identical vortices, `ω = Γ(N-1)/(2πR²)`.
pub fn make_thomson(n: usize, gamma: f64, radius: f64) -> Result<RelativeEquilibrium> {
    if n < 2 {
        return Err(Error::InvalidParameter("Thomson polygon needs N >= 2".into()));
    }
    positive("radius", radius)?;
    let sys = VortexSystem::new(vec![gamma; n])?;
    let mut z = DVector::zeros(2 * n);
    for k in 0..n {
        let a = 2.0 * PI * k as f64 / n as f64;
        set_point(&mut z, k, radius * Vec2::new(a.cos(), a.sin()));
    }
    RelativeEquilibrium::new(sys, z, gamma * (n as f64 - 1.0) / (2.0 * PI * radius * radius))
}

/// Rescales to `|ω| = 1`: configuration `√|ω| z`, angular velocity `sign(ω)`.
pub fn normalize_period(eq: &RelativeEquilibrium) -> RelativeEquilibrium {
    if eq.omega.abs() == 1.0 {
        return eq.clone();
    }
    RelativeEquilibrium {
        sys: eq.sys.clone(),
        z: &eq.z * eq.omega.abs().sqrt(),
        omega: eq.omega.signum(),
    }
}

/// `max_k |Γ_k Ż_k(0) - J ∇_{z_k} H0(z)|` with `Ż(0) = -ωJz`.
pub fn residual_hs0(eq: &RelativeEquilibrium) -> Result<f64> {
    let g = grad_h0(&eq.sys, &eq.z)?;
    let mut worst: f64 = 0.0;
    for k in 0..eq.sys.n() {
        let lhs = eq.sys.gamma(k) * (-eq.omega) * apply_j(point(&eq.z, k));
        worst = worst.max((lhs - apply_j(point(&g, k))).norm());
    }
    Ok(worst)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleConditions {
    pub total: f64,
    pub angular_momentum: f64,
    pub sum_squares: f64,
    pub gamma_ok: bool,
    pub l_ok: bool,
    pub l_neq_sumsq: bool,
    pub predicted_nondegenerate: bool,
}

pub fn triangle_conditions(g1: f64, g2: f64, g3: f64) -> TriangleConditions {
    let total = g1 + g2 + g3;
    let l = g1 * g2 + g1 * g3 + g2 * g3;
    let sum_squares = g1 * g1 + g2 * g2 + g3 * g3;
    let scale = sum_squares.max(f64::MIN_POSITIVE);
    let gamma_ok = total.abs() > 1e-12 * scale.sqrt();
    let l_ok = l.abs() > 1e-12 * scale;
    let l_neq_sumsq = (l - sum_squares).abs() > 1e-12 * scale;
    TriangleConditions {
        total,
        angular_momentum: l,
        sum_squares,
        gamma_ok,
        l_ok,
        l_neq_sumsq,
        predicted_nondegenerate: gamma_ok && l_ok && l_neq_sumsq,
    }
}

pub const DEFAULT_MONODROMY_STEPS: usize = 2000;
pub const DEFAULT_KERNEL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct MonodromyReport {
    pub matrix: DMatrix<f64>,
    pub multipliers: Vec<Complex<f64>>,
    /// Singular values of `W(T) - I`, descending.
    pub singular_values: Vec<f64>,
    /// Number of linearly independent periodic solutions.
    pub kernel_dim: usize,
    /// The same count read off the singular values of `W(T) - I` with the
    /// relative threshold; unreliable once `|W|` is large.
    pub kernel_dim_svd: usize,
    /// Algebraic multiplicity of the multiplier 1.
    pub unit_multiplier_count: usize,
    pub nondegenerate: bool,
    /// Max-norm change of the monodromy when the step count is doubled.
    pub richardson_delta: f64,
}

impl MonodromyReport {
    pub fn multiplier_product_modulus(&self) -> f64 {
        self.multipliers.iter().fold(Complex::new(1.0, 0.0), |acc, m| acc * m).norm()
    }
}

/// `A(t) = M_Γ^{-1} J_N H''`; `rows` are permuted so that block `k` becomes
/// `(1/Γ_k) (h_{2k+1}, -h_{2k})`.
fn weighted_symplectic(sys: &VortexSystem, h: &DMatrix<f64>) -> DMatrix<f64> {
    let dim = sys.dim();
    let mut a = DMatrix::zeros(dim, dim);
    for k in 0..sys.n() {
        let inv = 1.0 / sys.gamma(k);
        for c in 0..dim {
            a[(2 * k, c)] = inv * h[(2 * k + 1, c)];
            a[(2 * k + 1, c)] = -inv * h[(2 * k, c)];
        }
    }
    a
}

fn fundamental_matrix(eq: &RelativeEquilibrium, steps: usize) -> Result<DMatrix<f64>> {
    let dim = eq.sys.dim();
    let coeff = |t: f64| -> Result<DMatrix<f64>> { Ok(weighted_symplectic(&eq.sys, &hess_h0(&eq.sys, &eq.at(t))?)) };
    let dt = eq.period() / steps as f64;
    let mut w = DMatrix::identity(dim, dim);
    for i in 0..steps {
        let t = i as f64 * dt;
        let a0 = coeff(t)?;
        let ah = coeff(t + 0.5 * dt)?;
        let a1 = coeff(t + dt)?;
        let k1 = &a0 * &w;
        let k2 = &ah * (&w + &k1 * (0.5 * dt));
        let k3 = &ah * (&w + &k2 * (0.5 * dt));
        let k4 = &a1 * (&w + &k3 * dt);
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    Ok(w)
}

/// Generator of the linearized flow in the co-rotating frame:
/// `w(t) = e^{-ωJt} ξ(t)` turns the variational system into `ξ' = B ξ` with
/// `B = M_Γ^{-1} J_N (H0''(z) + ω M_Γ)`, so `W(T) = e^{T B}`.
pub fn corotating_generator(eq: &RelativeEquilibrium) -> Result<DMatrix<f64>> {
    let mut s = hess_h0(&eq.sys, &eq.z)?;
    for i in 0..eq.sys.dim() {
        s[(i, i)] += eq.omega * eq.sys.gamma(i / 2);
    }
    Ok(weighted_symplectic(&eq.sys, &s))
}

/// Periodic solutions of `ξ' = Bξ` with period `2π/|ω|` are sums of
/// eigenvectors of `B` for eigenvalues `i k |ω|`, `k ∈ Z`.
fn periodic_solution_count(eq: &RelativeEquilibrium, b: &DMatrix<f64>) -> (usize, usize) {
    let dim = b.nrows();
    let scale = b.norm().max(1.0);
    let kmax = (b.norm() / eq.omega.abs()).ceil() as i64 + 1;
    let bc: DMatrix<Complex<f64>> = b.map(|x| Complex::new(x, 0.0));
    let mut geometric = 0;
    for k in -kmax..=kmax {
        let shift = Complex::new(0.0, k as f64 * eq.omega.abs());
        let shifted = &bc - DMatrix::<Complex<f64>>::identity(dim, dim) * shift;
        let sv = shifted.svd(false, false).singular_values;
        geometric += sv.iter().filter(|s| **s < 1e-8 * scale).count();
    }
    let algebraic = b
        .complex_eigenvalues()
        .iter()
        .filter(|l| {
            let k = (l.im / eq.omega.abs()).round();
            (*l - Complex::new(0.0, k * eq.omega.abs())).norm() < 1e-3
        })
        .count();
    (geometric, algebraic)
}

pub fn monodromy(eq: &RelativeEquilibrium) -> Result<MonodromyReport> {
    monodromy_with(eq, DEFAULT_MONODROMY_STEPS, DEFAULT_KERNEL_TOL)
}

/// Integrates the variational system over one period with fixed-step RK4.
///
/// The periodic-solution count uses the exact factorization `W(T) = e^{TB}`
/// of rigidly rotating solutions; the singular values of `W(T) - I` are
/// reported alongside as an independent reading.
pub fn monodromy_with(eq: &RelativeEquilibrium, steps: usize, tol: f64) -> Result<MonodromyReport> {
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    if (eq.omega.abs() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(
            "monodromy expects a normalized equilibrium (|ω| = 1)".into(),
        ));
    }
    let w = fundamental_matrix(eq, steps)?;
    let fine = fundamental_matrix(eq, 2 * steps)?;
    let richardson_delta = (&fine - &w).amax();

    let dim = w.nrows();
    let shifted = &w - DMatrix::<f64>::identity(dim, dim);
    let mut singular_values: Vec<f64> = shifted.svd(false, false).singular_values.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let largest = singular_values[0].max(f64::MIN_POSITIVE);
    let kernel_dim_svd = singular_values.iter().filter(|s| **s < tol * largest).count();
    let multipliers = Schur::try_new(w.clone(), 1e-15, 10_000)
        .map(|schur| schur.complex_eigenvalues().iter().copied().collect())
        .unwrap_or_default();
    let (kernel_dim, unit_multiplier_count) = periodic_solution_count(eq, &corotating_generator(eq)?);
    Ok(MonodromyReport {
        matrix: w,
        multipliers,
        singular_values,
        kernel_dim,
        kernel_dim_svd,
        unit_multiplier_count,
        nondegenerate: kernel_dim == 3,
        richardson_delta,
    })
}

/// The three periodic solutions every relative equilibrium carries:
/// the translations `ê1`, `ê2` and the phase direction `Ż(0)`.
pub fn trivial_kernel(eq: &RelativeEquilibrium) -> [DVector<f64>; 3] {
    let n = eq.sys.n();
    [lift(Vec2::new(1.0, 0.0), n), lift(Vec2::new(0.0, 1.0), n), eq.velocity_at(0.0)]
}
