use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::domain::{load_shape, rasterize, GridDomain, ShapeSpec};
use crate::error::{Error, Result};
use crate::lipcalc::{Kernel, MollifierSchedule};

/// Everything that determines a run's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub shape: Option<ShapeSpec>,
    pub h: f64,
    /// Relative residual target of the p-Rayleigh solver.
    pub tol: f64,
    /// Sup-change tolerance of the infinity-harmonic iteration.
    pub harmonic_tol: f64,
    /// Default tolerance of the diagnostic checks.
    pub check_tol: f64,
    /// Slope deficit accepted by the maximal-slope set.
    pub delta: f64,
    /// Mollifier radii as multiples of `h`, strictly decreasing.
    pub schedule: Vec<f64>,
    pub kernel: Kernel,
    pub seed: u64,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            shape: None,
            h: 1.0 / 64.0,
            tol: 1e-3,
            harmonic_tol: 1e-8,
            check_tol: 0.1,
            delta: 0.05,
            schedule: vec![8.0, 4.0, 2.0],
            kernel: Kernel::Box,
            seed: 0,
            out: PathBuf::from("linfty-out"),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::domain::io::read_text(path)?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| Error::format(path, e.line(), e.to_string()))?;
        if let Some(ShapeSpec::CustomMask { path: mask }) = &mut cfg.shape {
            if mask.is_relative() {
                if let Some(dir) = path.parent() {
                    *mask = dir.join(&*mask);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive =
            [("h", self.h), ("tol", self.tol), ("harmonic_tol", self.harmonic_tol), ("check_tol", self.check_tol)];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidArgument(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        self.mollifier()?;
        if let Some(s) = &self.shape {
            s.validate()?;
        }
        Ok(())
    }

    pub fn mollifier(&self) -> Result<MollifierSchedule> {
        MollifierSchedule::from_multiples(&self.schedule, self.kernel, self.h)
    }

    pub fn with_shape_file(mut self, path: &Path) -> Result<Self> {
        self.shape = Some(load_shape(path)?);
        Ok(self)
    }

    pub fn domain(&self) -> Result<Arc<GridDomain>> {
        let shape = self
            .shape
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("no shape given (use --shape or a config file)".into()))?;
        rasterize(shape, self.h)
    }

    /// SHA-256 of the canonical JSON of the configuration and the command.
    pub fn hash_with(&self, command: &serde_json::Value) -> String {
        let canonical = serde_json::json!({ "config": self, "command": command });
        let digest = Sha256::digest(canonical.to_string().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}
