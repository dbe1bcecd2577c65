//! Sweeps of the reduced solver over the blow-up scale `r`.

use std::f64::consts::PI;

use crate::domain::DomainModel;
use crate::error::{Error, Result};
use crate::loops::{Loop, LoopFrame};
use crate::reduction::{solve_reduced, ReducedSolution, SolverParams, SPECTRAL_TAIL_LIMIT};
use crate::system::{Vec2, VortexSystem};

/// Growth factor and count of the upward probe beyond `r_max`.
const PROBE_FACTOR: f64 = 1.25;
const PROBE_STEPS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub struct PathFailure {
    pub r: f64,
    pub error: Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationPath {
    pub grid: Vec<f64>,
    /// Converged grid points, ordered by decreasing `r`.
    pub solutions: Vec<ReducedSolution>,
    pub failures: Vec<PathFailure>,
    /// Scales above `r_max` reached by the upward probe.
    pub probed: Vec<f64>,
    /// Largest `r` at which the solver converged with the guard satisfied.
    pub r0: f64,
}

impl ContinuationPath {
    pub fn converged_fraction(&self) -> f64 {
        self.solutions.len() as f64 / self.grid.len() as f64
    }
}

/// Rejects anchors that are not nondegenerate critical points of `h`; in the
/// plane `h ≡ 0` and every point qualifies.
fn check_anchor(domain: &DomainModel, a0: Vec2) -> Result<()> {
    domain.check(&a0)?;
    if domain.is_plane() {
        return Ok(());
    }
    let grad = domain.grad_h(&a0)?;
    if grad.norm() > 1e-8 {
        return Err(Error::InvalidParameter(format!(
            "a0 is not a critical point of the Robin function (|∇h| = {:.3e})",
            grad.norm()
        )));
    }
    if domain.hess_h(&a0)?.determinant().abs() <= 1e-10 {
        return Err(Error::InvalidParameter("a0 is a degenerate critical point of the Robin function".into()));
    }
    Ok(())
}

fn solve_checked(
    sys: &VortexSystem,
    domain: &DomainModel,
    a0: Vec2,
    r: f64,
    frame: &LoopFrame,
    params: &SolverParams,
    warm: Option<&Loop>,
) -> Result<ReducedSolution> {
    let s = solve_reduced(sys, domain, a0, r, frame, params, warm)?;
    if s.spectral_tail > SPECTRAL_TAIL_LIMIT {
        return Err(Error::Unresolved { tail: s.spectral_tail, limit: SPECTRAL_TAIL_LIMIT });
    }
    Ok(s)
}

pub fn continue_path(
    sys: &VortexSystem,
    domain: &DomainModel,
    a0: Vec2,
    frame: &LoopFrame,
    params: &SolverParams,
) -> Result<ContinuationPath> {
    if sys.gamma_total() == 0.0 {
        return Err(Error::ZeroTotalVorticity);
    }
    params.validate()?;
    check_anchor(domain, a0)?;
    let grid = params.r_grid();
    let mut solutions: Vec<ReducedSolution> = Vec::new();
    let mut failures = Vec::new();
    for &r in &grid {
        let warm = solutions.last().map(|s| &s.v);
        match solve_checked(sys, domain, a0, r, frame, params, warm) {
            Ok(s) => solutions.push(s),
            Err(error) => failures.push(PathFailure { r, error }),
        }
    }
    let Some(first) = solutions.first() else {
        return Err(Error::EmptyPath);
    };
    let mut r0 = first.r;
    let mut probed = Vec::new();
    if r0 == params.r_max {
        let mut warm = first.v.clone();
        let mut r = r0;
        for _ in 0..PROBE_STEPS {
            r *= PROBE_FACTOR;
            match solve_checked(sys, domain, a0, r, frame, params, Some(&warm)) {
                Ok(s) => {
                    warm = s.v;
                    r0 = r;
                    probed.push(r);
                }
                Err(_) => break,
            }
        }
    }
    Ok(ContinuationPath { grid, solutions, failures, probed, r0 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct UniquenessReport {
    pub thetas: Vec<f64>,
    pub mismatches: Vec<f64>,
    pub max_mismatch: f64,
}

/// `n` equispaced shifts in `[0, 2π)`.
pub fn theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

/// Re-solves from the shifted seed `θ∗Z` and compares with `θ∗v`.
pub fn local_uniqueness_probe(
    sys: &VortexSystem,
    domain: &DomainModel,
    a0: Vec2,
    frame: &LoopFrame,
    params: &SolverParams,
    solution: &ReducedSolution,
    thetas: &[f64],
) -> Result<UniquenessReport> {
    let mut mismatches = Vec::with_capacity(thetas.len());
    for &theta in thetas {
        let shifted = frame.shifted(theta);
        let s = solve_reduced(sys, domain, a0, solution.r, &shifted, params, None)?;
        mismatches.push((s.v - solution.v.time_shift(theta)).h1_norm());
    }
    let max_mismatch = mismatches.iter().copied().fold(0.0, f64::max);
    Ok(UniquenessReport { thetas: thetas.to_vec(), mismatches, max_mismatch })
}
