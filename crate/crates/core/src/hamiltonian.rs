//! The N-vortex Hamiltonians
//!
//! ```text
//! H0(z)  = -(1/2π) Σ_{j≠k} Γ_j Γ_k log|z_j - z_k|      (ordered pairs)
//! F(z)   =          Σ_{j,k} Γ_j Γ_k g(z_j, z_k)        (diagonal included)
//! H      = H0 - F
//! H_r(u) = H0(u) - F(c + r u) + F(c)
//! ```
//!
//! where `c = (a0, ..., a0)` is the blow-up centre (the origin unless stated).

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use crate::domain::DomainModel;
use crate::error::{Error, Result};
use crate::system::{check_distinct, lift, point, set_point, Mat2, Vec2, VortexSystem, COLLISION_TOL};

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

fn add_block(m: &mut DMatrix<f64>, j: usize, k: usize, b: &Mat2) {
    for a in 0..2 {
        for c in 0..2 {
            m[(2 * j + a, 2 * k + c)] += b[(a, c)];
        }
    }
}

fn check_inside(domain: &DomainModel, z: &DVector<f64>) -> Result<()> {
    for k in 0..z.len() / 2 {
        if !domain.contains(&point(z, k)) {
            return Err(Error::Domain { index: k });
        }
    }
    Ok(())
}

pub fn eval_h0(sys: &VortexSystem, z: &DVector<f64>) -> Result<f64> {
    sys.check_len(z)?;
    check_distinct(z, COLLISION_TOL)?;
    let mut sum = 0.0;
    for j in 0..sys.n() {
        for k in 0..sys.n() {
            if j != k {
                sum += sys.gamma(j) * sys.gamma(k) * (point(z, j) - point(z, k)).norm().ln();
            }
        }
    }
    Ok(-sum / (2.0 * PI))
}

pub fn grad_h0(sys: &VortexSystem, z: &DVector<f64>) -> Result<DVector<f64>> {
    sys.check_len(z)?;
    check_distinct(z, COLLISION_TOL)?;
    let mut out = DVector::zeros(sys.dim());
    for k in 0..sys.n() {
        let zk = point(z, k);
        let mut acc = Vec2::zeros();
        for j in 0..sys.n() {
            if j != k {
                let d = zk - point(z, j);
                acc += sys.gamma(j) * d / d.norm_squared();
            }
        }
        set_point(&mut out, k, -sys.gamma(k) / PI * acc);
    }
    Ok(out)
}

pub fn hess_h0(sys: &VortexSystem, z: &DVector<f64>) -> Result<DMatrix<f64>> {
    sys.check_len(z)?;
    check_distinct(z, COLLISION_TOL)?;
    let mut m = DMatrix::zeros(sys.dim(), sys.dim());
    for j in 0..sys.n() {
        for k in j + 1..sys.n() {
            let d = point(z, j) - point(z, k);
            let d2 = d.norm_squared();
            let hlog = (Mat2::identity() * d2 - 2.0 * d * d.transpose()) / (d2 * d2);
            let b = hlog * (-sys.gamma(j) * sys.gamma(k) / PI);
            add_block(&mut m, j, j, &b);
            add_block(&mut m, k, k, &b);
            add_block(&mut m, j, k, &-b);
            add_block(&mut m, k, j, &-b);
        }
    }
    Ok(symmetrize(m))
}

pub fn eval_f(sys: &VortexSystem, domain: &DomainModel, z: &DVector<f64>) -> Result<f64> {
    sys.check_len(z)?;
    check_inside(domain, z)?;
    let mut sum = 0.0;
    for j in 0..sys.n() {
        for k in 0..sys.n() {
            sum += sys.gamma(j) * sys.gamma(k) * domain.g(&point(z, j), &point(z, k));
        }
    }
    Ok(sum)
}

/// Block `m` is `2 Γ_m Σ_k Γ_k ∇_w g(z_m, z_k)`.
pub fn grad_f(sys: &VortexSystem, domain: &DomainModel, z: &DVector<f64>) -> Result<DVector<f64>> {
    sys.check_len(z)?;
    check_inside(domain, z)?;
    let mut out = DVector::zeros(sys.dim());
    if domain.is_plane() {
        return Ok(out);
    }
    for m in 0..sys.n() {
        let zm = point(z, m);
        let acc: Vec2 = (0..sys.n())
            .map(|k| sys.gamma(k) * domain.grad_w(&zm, &point(z, k)))
            .sum();
        set_point(&mut out, m, 2.0 * sys.gamma(m) * acc);
    }
    Ok(out)
}

/// Block `(m, n)` is `2 Γ_m Γ_n g_wz(z_m, z_n) + δ_mn 2 Γ_m Σ_k Γ_k g_ww(z_m, z_k)`.
pub fn hess_f(sys: &VortexSystem, domain: &DomainModel, z: &DVector<f64>) -> Result<DMatrix<f64>> {
    sys.check_len(z)?;
    check_inside(domain, z)?;
    let mut m = DMatrix::zeros(sys.dim(), sys.dim());
    if domain.is_plane() {
        return Ok(m);
    }
    for a in 0..sys.n() {
        let za = point(z, a);
        let mut diag = Mat2::zeros();
        for b in 0..sys.n() {
            let zb = point(z, b);
            let cross = domain.hess_wz(&za, &zb) * (2.0 * sys.gamma(a) * sys.gamma(b));
            add_block(&mut m, a, b, &cross);
            diag += domain.hess_ww(&za, &zb) * sys.gamma(b);
        }
        add_block(&mut m, a, a, &(diag * (2.0 * sys.gamma(a))));
    }
    Ok(symmetrize(m))
}

fn physical(center: Vec2, r: f64, u: &DVector<f64>) -> DVector<f64> {
    lift(center, u.len() / 2) + u * r
}

fn check_scaled(domain: &DomainModel, center: Vec2, r: f64, u: &DVector<f64>) -> Result<()> {
    if !(r > 0.0) {
        return Err(Error::InvalidParameter(format!("scale r = {r} must be positive")));
    }
    check_inside(domain, &physical(center, r, u))
}

/// `H_r(u) = H0(u) - F(c + r u) + F(c)`, blow-up centre `c`.
pub fn eval_hr_at(
    sys: &VortexSystem,
    domain: &DomainModel,
    center: Vec2,
    r: f64,
    u: &DVector<f64>,
) -> Result<f64> {
    check_scaled(domain, center, r, u)?;
    let h0 = eval_h0(sys, u)?;
    if domain.is_plane() {
        return Ok(h0);
    }
    let f0 = eval_f(sys, domain, &lift(center, sys.n()))?;
    Ok(h0 - eval_f(sys, domain, &physical(center, r, u))? + f0)
}

pub fn grad_hr_at(
    sys: &VortexSystem,
    domain: &DomainModel,
    center: Vec2,
    r: f64,
    u: &DVector<f64>,
) -> Result<DVector<f64>> {
    check_scaled(domain, center, r, u)?;
    let g0 = grad_h0(sys, u)?;
    if domain.is_plane() {
        return Ok(g0);
    }
    Ok(g0 - grad_f(sys, domain, &physical(center, r, u))? * r)
}

pub fn hess_hr_at(
    sys: &VortexSystem,
    domain: &DomainModel,
    center: Vec2,
    r: f64,
    u: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    check_scaled(domain, center, r, u)?;
    let h0 = hess_h0(sys, u)?;
    if domain.is_plane() {
        return Ok(h0);
    }
    Ok(h0 - hess_f(sys, domain, &physical(center, r, u))? * (r * r))
}

pub fn eval_hr(sys: &VortexSystem, domain: &DomainModel, r: f64, u: &DVector<f64>) -> Result<f64> {
    eval_hr_at(sys, domain, Vec2::zeros(), r, u)
}

pub fn grad_hr(sys: &VortexSystem, domain: &DomainModel, r: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    grad_hr_at(sys, domain, Vec2::zeros(), r, u)
}

/// Full Hamiltonian `H = H0 - F` of the un-rescaled problem.
pub fn eval_h(sys: &VortexSystem, domain: &DomainModel, z: &DVector<f64>) -> Result<f64> {
    Ok(eval_h0(sys, z)? - eval_f(sys, domain, z)?)
}

pub fn grad_h(sys: &VortexSystem, domain: &DomainModel, z: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(grad_h0(sys, z)? - grad_f(sys, domain, z)?)
}

/// Which Hamiltonian drives the vector field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Field {
    /// The plane problem, `H0` only.
    Plane,
    /// The blown-up problem around `center` at scale `r`.
    Rescaled { r: f64, center: Vec2 },
    /// The physical problem in the domain.
    Physical,
}

impl Field {
    pub fn energy(&self, sys: &VortexSystem, domain: &DomainModel, z: &DVector<f64>) -> Result<f64> {
        match *self {
            Field::Plane => eval_h0(sys, z),
            Field::Rescaled { r, center } => eval_hr_at(sys, domain, center, r, z),
            Field::Physical => eval_h(sys, domain, z),
        }
    }

    pub fn gradient(&self, sys: &VortexSystem, domain: &DomainModel, z: &DVector<f64>) -> Result<DVector<f64>> {
        match *self {
            Field::Plane => grad_h0(sys, z),
            Field::Rescaled { r, center } => grad_hr_at(sys, domain, center, r, z),
            Field::Physical => grad_h(sys, domain, z),
        }
    }

    /// True when the positions are read directly in the domain (no scaling).
    pub fn positions_in_domain(&self) -> bool {
        matches!(self, Field::Physical)
    }
}

/// Right-hand side of `Γ_k ż_k = J ∇_{z_k} H`: block `k` is `(1/Γ_k) J (∇H)_k`.
pub fn vortex_rhs(
    sys: &VortexSystem,
    domain: &DomainModel,
    field: Field,
    z: &DVector<f64>,
) -> Result<DVector<f64>> {
    let g = field.gradient(sys, domain, z)?;
    Ok(sys.velocity_from_gradient(&g))
}
