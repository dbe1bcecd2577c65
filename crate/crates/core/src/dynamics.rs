//! Adaptive integration of the vortex equations and round-trip validation of
//! computed periodic orbits.

use std::fmt::Write as _;

use nalgebra::DVector;

use crate::domain::DomainModel;
use crate::error::{Error, Result};
use crate::hamiltonian::{vortex_rhs, Field};
use crate::orbit::PhysicalOrbit;
use crate::system::{min_separation, point, Vec2, VortexSystem};

/// Smallest step relative to the length of the integration interval.
pub const MIN_STEP_FRACTION: f64 = 1e-12;
/// Separation below which an accepted state counts as a collision.
pub const COLLISION_RADIUS: f64 = 1e-9;
const MAX_STEPS: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
}

impl Tolerances {
    pub fn new(rtol: f64, atol: f64) -> Self {
        Self { rtol, atol }
    }
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-10, atol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub field: Field,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub min_separation: f64,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn last(&self) -> &DVector<f64> {
        self.states.last().expect("trajectory holds its initial state")
    }

    /// Header `t,x1,y1,...`, every value with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.states.first().map_or(0, |s| s.len() / 2);
        let mut out = String::from("t");
        for k in 1..=n {
            let _ = write!(out, ",x{k},y{k}");
        }
        out.push('\n');
        for (t, z) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t:.16e}");
            for x in z.iter() {
                let _ = write!(out, ",{x:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

// Dormand–Prince 5(4) tableau; the system is autonomous, so the nodes are not needed.
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

struct Integrator<'a> {
    sys: &'a VortexSystem,
    domain: &'a DomainModel,
    field: Field,
    tol: Tolerances,
}

impl Integrator<'_> {
    fn rhs(&self, z: &DVector<f64>) -> Result<DVector<f64>> {
        vortex_rhs(self.sys, self.domain, self.field, z)
    }

    /// Physical positions of the state, where the domain applies.
    fn positions(&self, z: &DVector<f64>) -> Vec<Vec2> {
        (0..self.sys.n())
            .map(|k| match self.field {
                Field::Physical => point(z, k),
                Field::Rescaled { r, center } => center + point(z, k) * r,
                Field::Plane => point(z, k),
            })
            .collect()
    }

    fn validity(&self, z: &DVector<f64>, t: f64) -> Result<()> {
        if min_separation(z) < COLLISION_RADIUS {
            return Err(Error::CollisionApproach { t });
        }
        if !matches!(self.field, Field::Plane) {
            for p in self.positions(z) {
                if self.domain.check(&p).is_err() {
                    return Err(Error::BoundaryApproach { t });
                }
            }
        }
        Ok(())
    }

    fn boundary_distance(&self, z: &DVector<f64>) -> f64 {
        if matches!(self.field, Field::Plane) {
            return f64::INFINITY;
        }
        self.positions(z).iter().map(|p| self.domain.boundary_distance(p)).fold(f64::INFINITY, f64::min)
    }

    /// Classifies a collapse of the step size: a separation or boundary
    /// distance that has shrunk by three orders of magnitude is an approach.
    fn stalled(&self, z0: &DVector<f64>, y: &DVector<f64>, t: f64) -> Error {
        if min_separation(y) < 1e-3 * min_separation(z0) {
            Error::CollisionApproach { t }
        } else if self.boundary_distance(y) < 1e-3 * self.boundary_distance(z0) {
            Error::BoundaryApproach { t }
        } else {
            Error::MinStepReached { t }
        }
    }

    fn approach(err: Error, t: f64) -> Error {
        match err {
            Error::Collision { .. } | Error::CollisionApproach { .. } => Error::CollisionApproach { t },
            Error::Domain { .. } | Error::Boundary { .. } | Error::BoundaryApproach { .. } => {
                Error::BoundaryApproach { t }
            }
            other => other,
        }
    }

    fn error_norm(&self, y: &DVector<f64>, y_new: &DVector<f64>, e: &DVector<f64>) -> f64 {
        let sum: f64 = (0..y.len())
            .map(|i| {
                let scale = self.tol.atol + self.tol.rtol * y[i].abs().max(y_new[i].abs());
                (e[i] / scale).powi(2)
            })
            .sum();
        (sum / y.len() as f64).sqrt()
    }

    /// One trial step; `Err` if a stage leaves the admissible set.
    fn trial(&self, y: &DVector<f64>, k1: &DVector<f64>, h: f64) -> Result<(DVector<f64>, DVector<f64>, DVector<f64>)> {
        let mut k: Vec<DVector<f64>> = Vec::with_capacity(7);
        k.push(k1.clone());
        for s in 1..7 {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if A[s][j] != 0.0 {
                    ys.axpy(h * A[s][j], kj, 1.0);
                }
            }
            k.push(self.rhs(&ys)?);
        }
        let mut y5 = y.clone();
        let mut err = DVector::zeros(y.len());
        for s in 0..7 {
            y5.axpy(h * B5[s], &k[s], 1.0);
            err.axpy(h * (B5[s] - B4[s]), &k[s], 1.0);
        }
        Ok((y5, err, k.pop().expect("seven stages")))
    }

    /// Integrates from `t0` to each of `stops` in turn (all on one side of
    /// `t0`, ordered), landing on them exactly. Every accepted step is recorded.
    fn run(&self, z0: &DVector<f64>, t0: f64, stops: &[f64]) -> Result<Trajectory> {
        self.sys.check_len(z0)?;
        self.validity(z0, t0)?;
        let mut k1 = self.rhs(z0).map_err(|e| Self::approach(e, t0))?;
        let mut traj = Trajectory {
            field: self.field,
            times: vec![t0],
            states: vec![z0.clone()],
            min_separation: min_separation(z0),
            rejected_steps: 0,
        };
        let Some(&t_end) = stops.last() else {
            return Ok(traj);
        };
        let span = (t_end - t0).abs();
        if span == 0.0 {
            return Ok(traj);
        }
        let dir = (t_end - t0).signum();
        let min_step = MIN_STEP_FRACTION * span;
        let mut h = 1e-3 * span;
        let (mut t, mut y) = (t0, z0.clone());
        let mut steps = 0;
        for &stop in stops {
            while (stop - t) * dir > 0.0 {
                steps += 1;
                if steps > MAX_STEPS {
                    return Err(Error::MinStepReached { t });
                }
                let remaining = (stop - t).abs();
                let last = h >= remaining;
                let step = if last { remaining } else { h };
                match self.trial(&y, &k1, dir * step) {
                    Ok((y_new, e, k_last)) => {
                        let err = self.error_norm(&y, &y_new, &e);
                        if err <= 1.0 {
                            let t_new = if last { stop } else { t + dir * step };
                            self.validity(&y_new, t_new)?;
                            t = t_new;
                            y = y_new;
                            k1 = k_last;
                            traj.min_separation = traj.min_separation.min(min_separation(&y));
                            traj.times.push(t);
                            traj.states.push(y.clone());
                            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                            if !last {
                                h = step * grow;
                            } else if grow < 1.0 {
                                h *= grow;
                            }
                        } else {
                            traj.rejected_steps += 1;
                            h = step * (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
                            if h < min_step {
                                return Err(self.stalled(z0, &y, t));
                            }
                        }
                    }
                    Err(e) => {
                        traj.rejected_steps += 1;
                        h = 0.5 * step;
                        if h < min_step {
                            return Err(Self::approach(e, t));
                        }
                    }
                }
            }
        }
        Ok(traj)
    }
}

/// Integrates the system selected by `field` from `z0` over `[0, t_end]`
/// (backwards if `t_end < 0`).
pub fn integrate(
    sys: &VortexSystem,
    domain: &DomainModel,
    field: Field,
    z0: &DVector<f64>,
    t_end: f64,
    tol: Tolerances,
) -> Result<Trajectory> {
    Integrator { sys, domain, field, tol }.run(z0, 0.0, &[t_end])
}

/// States at each of the (monotone) `times`, starting from `z0` at `t = 0`.
pub fn integrate_to(
    sys: &VortexSystem,
    domain: &DomainModel,
    field: Field,
    z0: &DVector<f64>,
    times: &[f64],
    tol: Tolerances,
) -> Result<Vec<DVector<f64>>> {
    let traj = Integrator { sys, domain, field, tol }.run(z0, 0.0, times)?;
    let mut out = Vec::with_capacity(times.len());
    let mut i = 0;
    for &t in times {
        while traj.times[i] != t {
            i += 1;
        }
        out.push(traj.states[i].clone());
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub energy_drift: f64,
    /// `|Σ Γ_k z_k - (value at t = 0)|`; plane problems only.
    pub center_of_vorticity_drift: Option<f64>,
    /// Drift of `Σ Γ_k |z_k|²`; plane problems only.
    pub angular_impulse_drift: Option<f64>,
}

pub fn invariants_along(sys: &VortexSystem, domain: &DomainModel, traj: &Trajectory) -> Result<InvariantReport> {
    let Some(first) = traj.states.first() else {
        return Ok(InvariantReport { energy_drift: 0.0, center_of_vorticity_drift: None, angular_impulse_drift: None });
    };
    let e0 = traj.field.energy(sys, domain, first)?;
    let mut energy_drift: f64 = 0.0;
    for z in &traj.states {
        energy_drift = energy_drift.max((traj.field.energy(sys, domain, z)? - e0).abs());
    }
    let plane = matches!(traj.field, Field::Plane) || domain.is_plane();
    let (cov, imp) = if plane {
        let (m0, i0) = (sys.vorticity_moment(first), sys.angular_impulse(first));
        let cov = traj.states.iter().map(|z| (sys.vorticity_moment(z) - m0).norm()).fold(0.0, f64::max);
        let imp = traj.states.iter().map(|z| (sys.angular_impulse(z) - i0).abs()).fold(0.0, f64::max);
        (Some(cov), Some(imp))
    } else {
        (None, None)
    };
    Ok(InvariantReport { energy_drift, center_of_vorticity_drift: cov, angular_impulse_drift: imp })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub closure_error: f64,
    pub max_pointwise_defect: f64,
    pub trajectory: Trajectory,
}

/// Integrates the physical system from the first sample over one period and
/// compares with the orbit samples.
pub fn validate_orbit(orbit: &PhysicalOrbit, rtol: f64) -> Result<ValidationReport> {
    let z0 = orbit.samples.first().ok_or(Error::InvalidParameter("orbit has no samples".into()))?;
    let mut stops: Vec<f64> = orbit.times.iter().skip(1).copied().collect();
    stops.push(orbit.period);
    let tol = Tolerances { rtol, atol: rtol * orbit.r };
    let integrator = Integrator { sys: &orbit.sys, domain: &orbit.domain, field: Field::Physical, tol };
    let traj = integrator.run(z0, 0.0, &stops)?;
    let mut defect: f64 = 0.0;
    let mut i = 0;
    for (j, &t) in stops.iter().enumerate() {
        while traj.times[i] != t {
            i += 1;
        }
        let reference = if j + 1 < stops.len() { &orbit.samples[j + 1] } else { z0 };
        defect = defect.max((&traj.states[i] - reference).norm());
    }
    let closure_error = (traj.last() - z0).norm();
    Ok(ValidationReport { closure_error, max_pointwise_defect: defect, trajectory: traj })
}
