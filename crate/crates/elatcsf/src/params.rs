use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{DataError, ModelError};

/// Coefficients of the temporal contrast sensitivity kernel: the magnitude of
/// a difference of two low-pass filter stages evaluated along the frequency
/// axis. `n1` and `n2` are stage orders and stay fixed; the remaining four are
/// subject to fitting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcsfIdmsParams {
    /// Overall gain.
    pub xi: f64,
    /// Time constant of the excitatory stage, seconds.
    pub tau: f64,
    /// Ratio of inhibitory to excitatory time constants.
    pub kappa: f64,
    /// Inhibitory stage weight, must stay below 1 so the kernel is positive
    /// at zero frequency.
    pub zeta: f64,
    /// Excitatory stage order.
    pub n1: f64,
    /// Inhibitory stage order.
    pub n2: f64,
}

impl TcsfIdmsParams {
    /// The standard-document coefficient set, kept for comparison runs.
    pub fn original() -> Self {
        Self {
            xi: 148.7,
            tau: 0.00267,
            kappa: 1.834,
            zeta: 0.882,
            n1: 15.0,
            n2: 16.0,
        }
    }

    /// Coefficients refitted jointly with the luminance, eccentricity, and
    /// area extensions. This is the default kernel.
    pub fn refitted() -> Self {
        Self {
            xi: 154.133,
            tau: 0.00292069,
            kappa: 2.12547,
            zeta: 0.721095,
            n1: 15.0,
            n2: 16.0,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let checks: [(&'static str, f64, bool, &'static str); 6] = [
            ("xi", self.xi, self.xi > 0.0 && self.xi.is_finite(), "must be finite and > 0"),
            ("tau", self.tau, self.tau > 0.0 && self.tau.is_finite(), "must be finite and > 0"),
            ("kappa", self.kappa, self.kappa > 0.0 && self.kappa.is_finite(), "must be finite and > 0"),
            ("zeta", self.zeta, self.zeta > 0.0 && self.zeta < 1.0, "must lie in (0, 1)"),
            ("n1", self.n1, self.n1 > 0.0 && self.n1.is_finite(), "must be finite and > 0"),
            ("n2", self.n2, self.n2 > 0.0 && self.n2.is_finite(), "must be finite and > 0"),
        ];
        for (name, value, ok, constraint) in checks {
            if !ok {
                return Err(ModelError::Param { name, value, constraint });
            }
        }
        Ok(())
    }
}

/// Full parameter set of the extended model: the temporal kernel plus the
/// luminance, eccentricity, and area-summation extensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub tcsf: TcsfIdmsParams,
    /// Luminance sensitivity gain.
    pub k1_lum: f64,
    /// Luminance roll-off knee, cd/m^2.
    pub k2_lum: f64,
    /// Luminance roll-off exponent.
    pub k3_lum: f64,
    /// Frequency-scale intercept of the luminance divisor.
    pub b1_omega: f64,
    /// Frequency-scale slope per decade of luminance.
    pub k1_omega: f64,
    /// Eccentricity sensitivity decay, log10 units per degree.
    pub k1_ecc: f64,
    /// Eccentricity frequency-warp compression per degree.
    pub k2_omega: f64,
    /// Pivot of the eccentricity frequency warp, Hz. Fixed, never fitted.
    pub omega_p: f64,
    /// Area-summation exponent.
    pub beta: f64,
    /// Area-summation threshold energy.
    pub e_thr: f64,
}

impl ModelParams {
    /// The fitted default: refitted temporal kernel plus all extensions.
    pub fn fitted() -> Self {
        Self {
            tcsf: TcsfIdmsParams::refitted(),
            k1_lum: 1.76801,
            k2_lum: 1.62402,
            k3_lum: 0.533781,
            b1_omega: 0.6678,
            k1_omega: 0.222269,
            k1_ecc: 0.0330933,
            k2_omega: 0.0341811,
            omega_p: -2.0,
            beta: 3.80022,
            e_thr: 6.52801,
        }
    }

    /// Same extensions, but with the standard-document temporal kernel
    /// swapped in. Useful for comparing the two kernels downstream.
    pub fn with_original_tcsf(mut self) -> Self {
        self.tcsf = TcsfIdmsParams::original();
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        self.tcsf.validate()?;
        let checks: [(&'static str, f64, bool, &'static str); 9] = [
            ("k1_lum", self.k1_lum, self.k1_lum > 0.0 && self.k1_lum.is_finite(), "must be finite and > 0"),
            ("k2_lum", self.k2_lum, self.k2_lum > 0.0 && self.k2_lum.is_finite(), "must be finite and > 0"),
            ("k3_lum", self.k3_lum, self.k3_lum > 0.0 && self.k3_lum.is_finite(), "must be finite and > 0"),
            ("b1_omega", self.b1_omega, self.b1_omega.is_finite(), "must be finite"),
            ("k1_omega", self.k1_omega, self.k1_omega.is_finite(), "must be finite"),
            ("k1_ecc", self.k1_ecc, self.k1_ecc >= 0.0 && self.k1_ecc.is_finite(), "must be finite and >= 0"),
            ("k2_omega", self.k2_omega, self.k2_omega >= 0.0 && self.k2_omega.is_finite(), "must be finite and >= 0"),
            ("beta", self.beta, self.beta >= 1.0 && self.beta.is_finite(), "must be finite and >= 1"),
            ("e_thr", self.e_thr, self.e_thr > 0.0 && self.e_thr.is_finite(), "must be finite and > 0"),
        ];
        for (name, value, ok, constraint) in checks {
            if !ok {
                return Err(ModelError::Param { name, value, constraint });
            }
        }
        if !self.omega_p.is_finite() {
            return Err(ModelError::Param {
                name: "omega_p",
                value: self.omega_p,
                constraint: "must be finite",
            });
        }
        Ok(())
    }

    pub fn load_toml(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let params: Self = toml::from_str(&text).map_err(|e| DataError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Ok(params)
    }

    pub fn save_toml(&self, path: &Path) -> Result<(), DataError> {
        let text = toml::to_string_pretty(self).map_err(|e| DataError::Parse {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        std::fs::write(path, text).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn get(&self, id: ParamId) -> f64 {
        match id {
            ParamId::Xi => self.tcsf.xi,
            ParamId::Tau => self.tcsf.tau,
            ParamId::Kappa => self.tcsf.kappa,
            ParamId::Zeta => self.tcsf.zeta,
            ParamId::K1Lum => self.k1_lum,
            ParamId::K2Lum => self.k2_lum,
            ParamId::K3Lum => self.k3_lum,
            ParamId::B1Omega => self.b1_omega,
            ParamId::K1Omega => self.k1_omega,
            ParamId::K1Ecc => self.k1_ecc,
            ParamId::K2Omega => self.k2_omega,
            ParamId::Beta => self.beta,
            ParamId::EThr => self.e_thr,
        }
    }

    pub fn set(&mut self, id: ParamId, value: f64) {
        match id {
            ParamId::Xi => self.tcsf.xi = value,
            ParamId::Tau => self.tcsf.tau = value,
            ParamId::Kappa => self.tcsf.kappa = value,
            ParamId::Zeta => self.tcsf.zeta = value,
            ParamId::K1Lum => self.k1_lum = value,
            ParamId::K2Lum => self.k2_lum = value,
            ParamId::K3Lum => self.k3_lum = value,
            ParamId::B1Omega => self.b1_omega = value,
            ParamId::K1Omega => self.k1_omega = value,
            ParamId::K1Ecc => self.k1_ecc = value,
            ParamId::K2Omega => self.k2_omega = value,
            ParamId::Beta => self.beta = value,
            ParamId::EThr => self.e_thr = value,
        }
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::fitted()
    }
}

/// The fittable parameters. Stage orders `n1`/`n2` and the warp pivot
/// `omega_p` are structural and deliberately absent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ParamId {
    Xi,
    Tau,
    Kappa,
    Zeta,
    K1Lum,
    K2Lum,
    K3Lum,
    B1Omega,
    K1Omega,
    K1Ecc,
    K2Omega,
    Beta,
    EThr,
}

impl ParamId {
    pub const ALL: [ParamId; 13] = [
        ParamId::Xi,
        ParamId::Tau,
        ParamId::Kappa,
        ParamId::Zeta,
        ParamId::K1Lum,
        ParamId::K2Lum,
        ParamId::K3Lum,
        ParamId::B1Omega,
        ParamId::K1Omega,
        ParamId::K1Ecc,
        ParamId::K2Omega,
        ParamId::Beta,
        ParamId::EThr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ParamId::Xi => "xi",
            ParamId::Tau => "tau",
            ParamId::Kappa => "kappa",
            ParamId::Zeta => "zeta",
            ParamId::K1Lum => "k1_lum",
            ParamId::K2Lum => "k2_lum",
            ParamId::K3Lum => "k3_lum",
            ParamId::B1Omega => "b1_omega",
            ParamId::K1Omega => "k1_omega",
            ParamId::K1Ecc => "k1_ecc",
            ParamId::K2Omega => "k2_omega",
            ParamId::Beta => "beta",
            ParamId::EThr => "e_thr",
        }
    }

    pub fn index(self) -> usize {
        Self::ALL.iter().position(|&p| p == self).expect("ParamId::ALL is exhaustive")
    }
}

impl FromStr for ParamId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
                format!("unknown parameter `{s}`; expected one of {}", names.join(", "))
            })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ModelParams::fitted().validate().unwrap();
        ModelParams::fitted().with_original_tcsf().validate().unwrap();
    }

    #[test]
    fn zero_frequency_gain_matches_both_kernels() {
        // At zero frequency both filter stages pass unity, so the kernel
        // magnitude collapses to xi * (1 - zeta).
        let orig = TcsfIdmsParams::original();
        assert!((orig.xi * (1.0 - orig.zeta) - 17.5466).abs() < 1e-4);
        let refit = TcsfIdmsParams::refitted();
        assert!((refit.xi * (1.0 - refit.zeta) - 42.98846436).abs() < 1e-6);
    }

    #[test]
    fn get_set_round_trip_every_id() {
        let mut p = ModelParams::fitted();
        for (i, id) in ParamId::ALL.iter().enumerate() {
            let v = 0.25 + i as f64;
            p.set(*id, v);
            assert_eq!(p.get(*id), v);
            assert_eq!(id.index(), i);
        }
    }

    #[test]
    fn param_names_parse_back() {
        for id in ParamId::ALL {
            assert_eq!(id.name().parse::<ParamId>().unwrap(), id);
        }
        assert!("n1".parse::<ParamId>().is_err());
        assert!("omega_p".parse::<ParamId>().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let dir = std::env::temp_dir().join(format!("elatcsf-params-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("params.toml");
        let p = ModelParams::fitted();
        p.save_toml(&path).unwrap();
        let q = ModelParams::load_toml(&path).unwrap();
        assert_eq!(p, q);
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn unknown_toml_key_rejected() {
        let dir = std::env::temp_dir().join(format!("elatcsf-params-bad-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("params.toml");
        std::fs::write(&path, "bogus = 1.0\n").unwrap();
        assert!(matches!(ModelParams::load_toml(&path), Err(DataError::Parse { .. })));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn validation_rejects_out_of_range() {
        let mut p = ModelParams::fitted();
        p.tcsf.zeta = 1.0;
        assert!(matches!(p.validate(), Err(ModelError::Param { name: "zeta", .. })));
        let mut p = ModelParams::fitted();
        p.beta = 0.5;
        assert!(matches!(p.validate(), Err(ModelError::Param { name: "beta", .. })));
        let mut p = ModelParams::fitted();
        p.e_thr = 0.0;
        assert!(matches!(p.validate(), Err(ModelError::Param { name: "e_thr", .. })));
    }
}
