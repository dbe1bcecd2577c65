//! Run configuration read from a TOML file with the sections `[system]`,
//! `[domain]`, `[solver]` and `[output]`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::DomainModel;
use crate::equilibria::{make_pair, make_thomson, make_triangle, normalize_period, RelativeEquilibrium};
use crate::error::{Error, Result};
use crate::reduction::SolverParams;
use crate::system::{Mat2, Vec2, VortexSystem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SeedKind {
    Pair,
    Triangle,
    Thomson,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DomainKind {
    Plane,
    Disk,
    Halfplane,
    Quadratic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub gammas: Vec<f64>,
    /// Shape of the seed equilibrium.
    #[serde(default = "default_seed")]
    pub seed: SeedKind,
    /// Separation (pair), side (triangle) or radius (thomson) before the
    /// period is normalized.
    #[serde(default = "default_size")]
    pub size: f64,
}

fn default_seed() -> SeedKind {
    SeedKind::Pair
}

fn default_size() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSection {
    pub variant: DomainKind,
    /// Symmetric matrix of the quadratic model.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 2]; 2]>,
    /// Starting point of the search for a critical point of the Robin function.
    #[serde(default)]
    pub guess: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    /// Samples per period when orbits are written out or validated.
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_samples() -> usize {
    64
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_dir(), samples: default_samples() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemSection,
    pub domain: DomainSection,
    #[serde(default)]
    pub solver: SolverParams,
    #[serde(default)]
    pub output: OutputSection,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Checks every precondition the downstream modules would reject,
    /// naming the offending field.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| Error::InvalidParameter(format!("{name}: {e}"));
        let sys = self.system().map_err(|e| field("system.gammas", e))?;
        let want = match self.system.seed {
            SeedKind::Pair => Some(2),
            SeedKind::Triangle => Some(3),
            SeedKind::Thomson => None,
        };
        if let Some(n) = want.filter(|n| *n != sys.n()) {
            return Err(Error::InvalidParameter(format!(
                "system.gammas: a {:?} seed needs {n} vorticities, found {}",
                self.system.seed,
                sys.n()
            )));
        }
        if self.system.seed == SeedKind::Thomson && sys.gammas().iter().any(|g| *g != sys.gamma(0)) {
            return Err(Error::InvalidParameter("system.gammas: a thomson seed needs equal vorticities".into()));
        }
        if !(self.system.size > 0.0 && self.system.size.is_finite()) {
            return Err(Error::InvalidParameter("system.size must be positive".into()));
        }
        self.domain_model().map_err(|e| field("domain", e))?;
        self.solver.validate().map_err(|e| field("solver", e))?;
        if let Some(sigma) = &self.solver.symmetry {
            if sigma.len() != sys.n() {
                return Err(Error::InvalidParameter("solver.symmetry must permute all vortices".into()));
            }
        }
        if self.output.samples == 0 {
            return Err(Error::InvalidParameter("output.samples must be positive".into()));
        }
        Ok(())
    }

    pub fn system(&self) -> Result<VortexSystem> {
        VortexSystem::new(self.system.gammas.clone())
    }

    pub fn domain_model(&self) -> Result<DomainModel> {
        match (self.domain.variant, self.domain.matrix) {
            (DomainKind::Quadratic, Some(m)) => DomainModel::synthetic(Mat2::new(m[0][0], m[0][1], m[1][0], m[1][1])),
            (DomainKind::Quadratic, None) => Err(Error::InvalidParameter("the quadratic model needs `matrix`".into())),
            (_, Some(_)) => Err(Error::InvalidParameter("`matrix` applies to the quadratic model only".into())),
            (DomainKind::Plane, None) => Ok(DomainModel::Plane),
            (DomainKind::Disk, None) => Ok(DomainModel::UnitDisk),
            (DomainKind::Halfplane, None) => Ok(DomainModel::HalfPlane),
        }
    }

    pub fn guess(&self) -> Vec2 {
        Vec2::new(self.domain.guess[0], self.domain.guess[1])
    }

    /// The seed equilibrium with its period normalized to `2π`.
    pub fn seed(&self) -> Result<RelativeEquilibrium> {
        let g = &self.system.gammas;
        let size = self.system.size;
        let eq = match self.system.seed {
            SeedKind::Pair if g.len() == 2 => make_pair(g[0], g[1], size)?,
            SeedKind::Triangle if g.len() == 3 => make_triangle(g[0], g[1], g[2], size)?,
            SeedKind::Thomson if !g.is_empty() => make_thomson(g.len(), g[0], size)?,
            _ => return Err(Error::InvalidParameter("seed does not match the number of vorticities".into())),
        };
        Ok(normalize_period(&eq))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DISK_PAIR: &str = r#"
[system]
gammas = [1.0, 1.0]
seed = "pair"
size = 2.0

[domain]
variant = "disk"

[solver]
modes = 16
mode = "newton"
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = RunConfig::parse(DISK_PAIR).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.solver.modes, 16);
        assert_eq!(cfg.solver.r_steps, 30);
        assert_eq!(cfg.output.samples, 64);
        assert_eq!(cfg.domain_model().unwrap(), DomainModel::UnitDisk);
        assert!((cfg.seed().unwrap().omega - 1.0).abs() < 1e-15);
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = RunConfig::parse(DISK_PAIR).unwrap();
        let again = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let err = RunConfig::parse(&DISK_PAIR.replace("modes = 16", "modez = 16")).unwrap_err();
        assert!(err.to_string().contains("modez"), "{err}");
        let err = RunConfig::parse(&DISK_PAIR.replace("[1.0, 1.0]", "[1.0, 0.0]")).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("system.gammas"), "{err}");
        let err = RunConfig::parse(&DISK_PAIR.replace("\"disk\"", "\"quadratic\"")).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("matrix"), "{err}");
        let err = RunConfig::parse(&DISK_PAIR.replace("[1.0, 1.0]", "[1.0, 1.0, 1.0]")).unwrap().validate().unwrap_err();
        assert!(err.to_string().contains("needs 2"), "{err}");
    }
}
