//! Physical periodic orbits recovered from blown-up loops, and their
//! on-disk representation.

use std::f64::consts::PI;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::domain::DomainModel;
use crate::error::{Error, Result};
use crate::loops::Loop;
use crate::reduction::ReducedSolution;
use crate::system::{lift, min_separation, point, Vec2, VortexSystem, COLLISION_TOL};

pub const SCHEMA_VERSION: u32 = 1;

/// `z(t) = a0 + r u(t / r²)`, sampled over one period `2πr²`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhysicalOrbit {
    pub sys: VortexSystem,
    pub domain: DomainModel,
    pub a0: Vec2,
    pub r: f64,
    pub period: f64,
    pub times: Vec<f64>,
    pub samples: Vec<DVector<f64>>,
    pub u: Loop,
}

impl PhysicalOrbit {
    pub fn min_separation(&self) -> f64 {
        self.samples.iter().map(min_separation).fold(f64::INFINITY, f64::min)
    }

    /// `(z - a0) / r`, the blown-up configuration behind a physical one.
    pub fn rescale(&self, z: &DVector<f64>) -> DVector<f64> {
        (z - lift(self.a0, self.sys.n())) / self.r
    }
}

pub fn unrescale(
    sys: &VortexSystem,
    domain: &DomainModel,
    a0: Vec2,
    r: f64,
    u: &Loop,
    m: usize,
) -> Result<PhysicalOrbit> {
    if !(r > 0.0) || m == 0 {
        return Err(Error::InvalidParameter("unrescale needs r > 0 and at least one sample".into()));
    }
    if u.n() != sys.n() {
        return Err(Error::DimensionMismatch { expected: sys.dim(), found: u.dim() });
    }
    let period = 2.0 * PI * r * r;
    let centre = lift(a0, sys.n());
    let mut times = Vec::with_capacity(m);
    let mut samples = Vec::with_capacity(m);
    for j in 0..m {
        let s = 2.0 * PI * j as f64 / m as f64;
        let z = &centre + u.eval(s) * r;
        for k in 0..sys.n() {
            if !domain.contains(&point(&z, k)) {
                return Err(Error::DomainExit(format!("sample {j}: vortex {k} outside the domain")));
            }
        }
        if min_separation(&z) <= COLLISION_TOL {
            return Err(Error::DomainExit(format!("sample {j}: vortices collide")));
        }
        times.push(r * r * s);
        samples.push(z);
    }
    Ok(PhysicalOrbit { sys: sys.clone(), domain: domain.clone(), a0, r, period, times, samples, u: u.clone() })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemRecord {
    pub gammas: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub residual_grad: f64,
    pub phase_defect: f64,
    pub vnorm: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitFile {
    pub schema_version: u32,
    pub system: SystemRecord,
    pub domain: DomainModel,
    pub a0: [f64; 2],
    pub r: f64,
    pub omega_seed: f64,
    #[serde(rename = "loop")]
    pub u: Loop,
    pub diagnostics: Diagnostics,
}

impl OrbitFile {
    pub fn new(
        sys: &VortexSystem,
        domain: &DomainModel,
        a0: Vec2,
        omega_seed: f64,
        solution: &ReducedSolution,
    ) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            system: SystemRecord { gammas: sys.gammas().to_vec() },
            domain: domain.clone(),
            a0: [a0.x, a0.y],
            r: solution.r,
            omega_seed,
            u: solution.u.clone(),
            diagnostics: Diagnostics {
                residual_grad: solution.residual_grad,
                phase_defect: solution.phase_defect,
                vnorm: solution.vnorm,
                iterations: solution.iterations,
            },
        }
    }

    pub fn system(&self) -> Result<VortexSystem> {
        VortexSystem::new(self.system.gammas.clone())
    }

    pub fn a0(&self) -> Vec2 {
        Vec2::new(self.a0[0], self.a0[1])
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(Error::Parse(format!("unsupported schema version {}", file.schema_version)));
        }
        let sys = file.system()?;
        if file.u.n() != sys.n() {
            return Err(Error::Parse("loop and system disagree on the number of vortices".into()));
        }
        if !(file.r > 0.0) {
            return Err(Error::Parse("r must be positive".into()));
        }
        Ok(file)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::io::write_atomic(path, self.to_json()?.as_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn physical(&self, m: usize) -> Result<PhysicalOrbit> {
        unrescale(&self.system()?, &self.domain, self.a0(), self.r, &self.u, m)
    }
}
