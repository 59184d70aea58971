use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Hyperparameters and MCMC settings for a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TraderConfig {
    /// Prior guess of the number of informative elements. `None` means `p / 2`.
    pub psi_hat: Option<f64>,
    /// Fixed global scale; bypasses the informative-count rule when set.
    pub tau_override: Option<f64>,
    /// Dirichlet concentration of the zero component.
    pub zeta: f64,
    /// Shape and rate of the inverse-gamma prior on the noise variance.
    pub nu: f64,
    pub validation_fraction: f64,
    pub n_warmup: usize,
    pub n_samples: usize,
    pub n_chains: usize,
    pub seed: u64,
    pub eta_proposal_concentration: f64,
    pub ci_level: f64,
    /// Lower clamp for the source Dirichlet concentrations.
    pub theta_floor: f64,
}

impl Default for TraderConfig {
    fn default() -> Self {
        TraderConfig {
            psi_hat: None,
            tau_override: None,
            zeta: 1.0,
            nu: 0.01,
            validation_fraction: 1.0 / 3.0,
            n_warmup: 2000,
            n_samples: 2000,
            n_chains: 4,
            seed: 0,
            eta_proposal_concentration: 50.0,
            ci_level: 0.95,
            theta_floor: 0.01,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

impl TraderConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(psi) = self.psi_hat {
            positive("psi_hat", psi)?;
        }
        if let Some(tau) = self.tau_override {
            positive("tau_override", tau)?;
        }
        positive("zeta", self.zeta)?;
        positive("nu", self.nu)?;
        positive("eta_proposal_concentration", self.eta_proposal_concentration)?;
        positive("theta_floor", self.theta_floor)?;
        for (name, v) in [
            ("validation_fraction", self.validation_fraction),
            ("ci_level", self.ci_level),
        ] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::invalid(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        for (name, v) in [
            ("n_warmup", self.n_warmup),
            ("n_samples", self.n_samples),
            ("n_chains", self.n_chains),
        ] {
            if v == 0 {
                return Err(Error::invalid(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    /// Prior informative count for a `p`-dimensional problem.
    pub fn psi_hat_for(&self, p: usize) -> f64 {
        self.psi_hat.unwrap_or(p as f64 / 2.0)
    }

    /// Hex SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("config serialises");
        hex_digest(&json)
    }

    /// Configuration for the shortened validation fit.
    pub fn halved(&self) -> Self {
        TraderConfig {
            n_warmup: (self.n_warmup / 2).max(1),
            n_samples: (self.n_samples / 2).max(1),
            ..self.clone()
        }
    }
}

pub(crate) fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = TraderConfig::default();
        c.validate().unwrap();
        assert_eq!(c.psi_hat_for(200), 100.0);
        assert_eq!(c.digest().len(), 64);
    }

    #[test]
    fn digest_tracks_content() {
        let a = TraderConfig::default();
        let b = TraderConfig { seed: 1, ..a.clone() };
        assert_ne!(a.digest(), b.digest());
        assert_eq!(a.digest(), a.clone().digest());
    }

    #[test]
    fn out_of_range_values_rejected() {
        for bad in [
            TraderConfig { ci_level: 1.0, ..Default::default() },
            TraderConfig { n_chains: 0, ..Default::default() },
            TraderConfig { nu: 0.0, ..Default::default() },
            TraderConfig { validation_fraction: 0.0, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}
