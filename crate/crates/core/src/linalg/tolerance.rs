use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Environment variable naming the default tolerance profile.
pub const TOLERANCE_PROFILE_ENV: &str = "SUBEQ_TOL_PROFILE";

/// Tolerances shared by every numerical decision in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ToleranceConfig {
    /// Relative eigenvalue tolerance for semidefiniteness.
    pub psd_tol: f64,
    /// Relative cutoff below which eigenvalues count as zero in pseudo-inverses.
    pub rank_tol: f64,
    /// Absolute/relative Frobenius-norm tolerance for zero tests.
    pub residual_tol: f64,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        Self {
            psd_tol: 1e-9,
            rank_tol: 1e-10,
            residual_tol: 1e-8,
        }
    }
}

/// Named tolerance presets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToleranceProfile {
    Strict,
    Default,
    Loose,
}

impl FromStr for ToleranceProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "strict" => Ok(Self::Strict),
            "default" | "" => Ok(Self::Default),
            "loose" => Ok(Self::Loose),
            other => Err(Error::descriptor(
                other,
                "tolerance profile must be strict, default or loose",
            )),
        }
    }
}

impl ToleranceConfig {
    /// Builds a configuration, rejecting values outside `(0, 1)`.
    pub fn new(psd_tol: f64, rank_tol: f64, residual_tol: f64) -> Result<Self> {
        let cfg = Self {
            psd_tol,
            rank_tol,
            residual_tol,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("psd_tol", self.psd_tol),
            ("rank_tol", self.rank_tol),
            ("residual_tol", self.residual_tol),
        ] {
            if !(value > 0.0 && value < 1.0) {
                return Err(Error::InvalidTolerance { name, value });
            }
        }
        Ok(())
    }

    pub fn strict() -> Self {
        Self {
            psd_tol: 1e-12,
            rank_tol: 1e-13,
            residual_tol: 1e-11,
        }
    }

    pub fn loose() -> Self {
        Self {
            psd_tol: 1e-6,
            rank_tol: 1e-8,
            residual_tol: 1e-5,
        }
    }

    /// Tolerances suited to single precision arithmetic.
    pub fn single_precision() -> Self {
        Self {
            psd_tol: 1e-5,
            rank_tol: 1e-6,
            residual_tol: 1e-4,
        }
    }

    pub fn from_profile(profile: ToleranceProfile) -> Self {
        match profile {
            ToleranceProfile::Strict => Self::strict(),
            ToleranceProfile::Default => Self::default(),
            ToleranceProfile::Loose => Self::loose(),
        }
    }

    /// Profile selected by [`TOLERANCE_PROFILE_ENV`], or the default when unset.
    pub fn from_env() -> Result<Self> {
        match std::env::var(TOLERANCE_PROFILE_ENV) {
            Ok(v) => Ok(Self::from_profile(v.parse()?)),
            Err(_) => Ok(Self::default()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_are_valid() {
        for cfg in [
            ToleranceConfig::default(),
            ToleranceConfig::strict(),
            ToleranceConfig::loose(),
            ToleranceConfig::single_precision(),
        ] {
            cfg.validate().unwrap();
        }
    }

    #[test]
    fn rejects_out_of_range() {
        assert!(ToleranceConfig::new(0.0, 1e-10, 1e-8).is_err());
        assert!(ToleranceConfig::new(1e-9, 1.0, 1e-8).is_err());
        assert!(ToleranceConfig::new(1e-9, 1e-10, f64::NAN).is_err());
    }

    #[test]
    fn profile_names() {
        assert_eq!("STRICT".parse::<ToleranceProfile>().unwrap(), ToleranceProfile::Strict);
        assert!("tight".parse::<ToleranceProfile>().is_err());
    }
}
