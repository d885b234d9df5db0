use std::fmt;
use std::str::FromStr;

use ruijsenaars_core::macdonald::QTField;
use ruijsenaars_core::{FlavorKind, Precision};
use serde::Serialize;

/// A named group of identity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Suite {
    Hirota,
    Commute,
    Wronski,
    Expansions,
    KeyIdentity,
    Kernels,
    Kajihara,
    Macdonald,
    All,
}

impl Suite {
    /// Every concrete suite, in the order `all` runs them.
    pub const EACH: [Suite; 8] = [
        Suite::Hirota,
        Suite::Commute,
        Suite::Wronski,
        Suite::Expansions,
        Suite::KeyIdentity,
        Suite::Kernels,
        Suite::Kajihara,
        Suite::Macdonald,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Hirota => "hirota",
            Suite::Commute => "commute",
            Suite::Wronski => "wronski",
            Suite::Expansions => "expansions",
            Suite::KeyIdentity => "keyidentity",
            Suite::Kernels => "kernels",
            Suite::Kajihara => "kajihara",
            Suite::Macdonald => "macdonald",
            Suite::All => "all",
        }
    }

    /// Relative tolerance used when `--tol` is not given.
    pub fn default_tolerance(self) -> f64 {
        match self {
            Suite::Hirota => 1e-40,
            _ => 1e-35,
        }
    }

    /// Random samples per check when `--samples` is not given.
    pub fn default_samples(self) -> usize {
        match self {
            Suite::Hirota => 200,
            Suite::KeyIdentity => 50,
            Suite::Macdonald => 10,
            Suite::Kajihara => 5,
            _ => 20,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|suite| suite.name() == s)
            .ok_or_else(|| ConfigError(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Everything a suite run depends on. Two runs with equal configurations
/// draw the same sample points and report the same residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub flavors: Vec<FlavorKind>,
    /// Largest number of variables; suites run every `n` from 1 (or their
    /// own minimum) up to this value.
    pub n: usize,
    pub lmax: usize,
    pub rmax: usize,
    pub precision: Precision,
    pub seed: u64,
    pub qt: QTField,
    pub tolerance: Option<f64>,
    pub samples: Option<usize>,
    /// Negative-control hook: perturb one `[κ]` factor of every `H_l`.
    pub perturb_kappa: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            flavors: FlavorKind::ALL.to_vec(),
            n: 3,
            lmax: 4,
            rmax: 3,
            precision: Precision::default(),
            seed: 1,
            qt: QTField::default(),
            tolerance: None,
            samples: None,
            perturb_kappa: None,
        }
    }
}

/// Bounds outside which the checks stop being desk-scale.
pub const MAX_VARIABLES: usize = 6;
pub const MAX_ORDER: usize = 6;

impl SuiteConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |msg: String| Err(ConfigError(msg));
        if self.flavors.is_empty() {
            return bad("no flavor selected".into());
        }
        if !(1..=MAX_VARIABLES).contains(&self.n) {
            return bad(format!("n must be in 1..={MAX_VARIABLES}, got {}", self.n));
        }
        if self.lmax > MAX_ORDER || self.rmax > MAX_ORDER {
            return bad(format!("lmax and rmax must be at most {MAX_ORDER}"));
        }
        if self.lmax == 0 || self.rmax == 0 {
            return bad("lmax and rmax must be positive".into());
        }
        if !(16..=2000).contains(&self.precision.decimal_digits()) {
            return bad(format!("precision must be 16..=2000 digits, got {}", self.precision.decimal_digits()));
        }
        if let Some(tol) = self.tolerance {
            if !(tol > 0.0 && tol < 1.0) {
                return bad(format!("tolerance must lie in (0, 1), got {tol}"));
            }
        }
        if self.samples == Some(0) {
            return bad("samples must be positive".into());
        }
        if let Some(eps) = self.perturb_kappa {
            if !eps.is_finite() || eps == 0.0 {
                return bad(format!("perturbation must be finite and nonzero, got {eps}"));
            }
        }
        Ok(())
    }

    pub fn tolerance_for(&self, suite: Suite) -> f64 {
        self.tolerance.unwrap_or_else(|| suite.default_tolerance())
    }

    pub fn samples_for(&self, suite: Suite) -> usize {
        self.samples.unwrap_or_else(|| suite.default_samples())
    }

    pub fn record(&self) -> ConfigRecord {
        ConfigRecord {
            flavors: self.flavors.iter().map(|f| f.name().to_string()).collect(),
            n: self.n,
            lmax: self.lmax,
            rmax: self.rmax,
            precision: self.precision.decimal_digits(),
            seed: self.seed.to_string(),
            q: self.qt.q.to_string(),
            t: self.qt.t.to_string(),
            tolerance: self.tolerance.map(|t| format!("{t:e}")),
            samples: self.samples,
            perturb_kappa: self.perturb_kappa.map(|e| format!("{e:e}")),
        }
    }
}

/// Serialized form of [`SuiteConfig`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfigRecord {
    pub flavors: Vec<String>,
    pub n: usize,
    pub lmax: usize,
    pub rmax: usize,
    /// Working precision in decimal digits.
    pub precision: u32,
    pub seed: String,
    pub q: String,
    pub t: String,
    pub tolerance: Option<String>,
    pub samples: Option<usize>,
    pub perturb_kappa: Option<String>,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for suite in Suite::EACH.into_iter().chain([Suite::All]) {
            assert_eq!(suite.name().parse::<Suite>().unwrap(), suite);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn default_config_is_valid() {
        assert!(SuiteConfig::default().validate().is_ok());
    }

    #[test]
    fn bad_configs_are_rejected() {
        let base = SuiteConfig::default();
        let cases = [
            SuiteConfig { n: 0, ..base.clone() },
            SuiteConfig { n: 9, ..base.clone() },
            SuiteConfig { flavors: vec![], ..base.clone() },
            SuiteConfig { tolerance: Some(2.0), ..base.clone() },
            SuiteConfig { samples: Some(0), ..base.clone() },
            SuiteConfig { perturb_kappa: Some(0.0), ..base.clone() },
            SuiteConfig { precision: Precision::digits(4), ..base },
        ];
        for c in cases {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn record_keeps_exact_rationals() {
        let r = SuiteConfig::default().record();
        assert_eq!((r.q.as_str(), r.t.as_str()), ("3/5", "2/7"));
        assert_eq!(r.seed, "1");
    }
}
