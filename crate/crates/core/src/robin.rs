//! Critical points of the Robin function, the anchors `a0` of the blow-up.

use crate::domain::DomainModel;
use crate::error::{Error, Result};
use crate::system::{Mat2, Vec2};

pub const DEFAULT_MAX_ITER: usize = 50;
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-10;
const MAX_HALVINGS: usize = 20;

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub a0: Vec2,
    pub value: f64,
    pub hessian: Mat2,
    pub eigenvalues: [f64; 2],
    pub nondegenerate: bool,
    pub iterations: usize,
}

pub fn find_critical_point_h(domain: &DomainModel, guess: Vec2, tol: f64) -> Result<CriticalPoint> {
    find_critical_point_h_with(domain, guess, tol, DEFAULT_MAX_ITER, DEFAULT_DEGENERACY_TOL)
}

/// Newton iteration on `∇h`, with steps halved (up to 20 times) whenever the
/// trial point would leave the domain.
pub fn find_critical_point_h_with(
    domain: &DomainModel,
    guess: Vec2,
    tol: f64,
    max_iter: usize,
    degeneracy_tol: f64,
) -> Result<CriticalPoint> {
    domain.check(&guess)?;
    let mut p = guess;
    let mut grad = domain.grad_h(&p)?;
    let mut iterations = 0;
    loop {
        let hess = domain.hess_h(&p)?;
        // pseudo-inverse so flat directions (e.g. the half-plane) do not blow up
        let step = hess
            .svd(true, true)
            .solve(&(-grad), 1e-14 * hess.norm().max(1e-300))
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
        // a vanishing gradient with a large Newton step is an escape to
        // infinity, not a critical point
        if grad.norm() <= tol && step.norm() <= 1e-6 * (1.0 + p.norm()) {
            break;
        }
        if iterations == max_iter {
            return Err(Error::NoConvergence { iterations, residual: grad.norm() });
        }
        iterations += 1;
        let mut scale = 1.0;
        let mut halvings = 0;
        let next = loop {
            let trial = p + step * scale;
            if domain.check(&trial).is_ok() {
                break trial;
            }
            if halvings == MAX_HALVINGS {
                return Err(Error::LeftDomain { halvings });
            }
            halvings += 1;
            scale *= 0.5;
        };
        p = next;
        grad = domain.grad_h(&p)?;
    }
    let hessian = domain.hess_h(&p)?;
    let eig = hessian.symmetric_eigenvalues();
    let (lo, hi) = if eig[0] <= eig[1] { (eig[0], eig[1]) } else { (eig[1], eig[0]) };
    Ok(CriticalPoint {
        a0: p,
        value: domain.h(&p)?,
        hessian,
        eigenvalues: [lo, hi],
        nondegenerate: hessian.determinant().abs() > degeneracy_tol,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_converges_to_origin() {
        let cp = find_critical_point_h(&DomainModel::UnitDisk, Vec2::new(0.3, -0.2), 1e-13).unwrap();
        assert!(cp.a0.norm() < 1e-13);
        assert!(cp.nondegenerate);
        assert!((cp.hessian - Mat2::identity() / PI).norm() < 1e-12);
        let cp0 = find_critical_point_h(&DomainModel::UnitDisk, Vec2::zeros(), 1e-13).unwrap();
        assert_eq!(cp0.iterations, 0);
    }

    #[test]
    fn disk_far_guess_is_damped() {
        let cp = find_critical_point_h(&DomainModel::UnitDisk, Vec2::new(0.95, 0.1), 1e-12).unwrap();
        assert!(cp.a0.norm() < 1e-12);
    }

    #[test]
    fn half_plane_has_no_critical_point() {
        let r = find_critical_point_h(&DomainModel::HalfPlane, Vec2::new(0.2, 0.5), 1e-10);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn quadratic_minimum() {
        let d = DomainModel::synthetic(Mat2::identity()).unwrap();
        let cp = find_critical_point_h(&d, Vec2::new(1.0, 2.0), 1e-12).unwrap();
        assert!(cp.a0.norm() < 1e-12);
        // h(p) = |p|^2 for A = I
        assert!((cp.hessian - 2.0 * Mat2::identity()).norm() < 1e-14);
    }

    #[test]
    fn guess_outside_is_rejected() {
        assert!(find_critical_point_h(&DomainModel::UnitDisk, Vec2::new(2.0, 0.0), 1e-10).is_err());
    }
}
