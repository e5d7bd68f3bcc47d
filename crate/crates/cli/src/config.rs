//! TOML configuration loading shared by all subcommands.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use squeezed_bayes::collective_spin::{optimal_rotation_angle, xi_from_db};
use squeezed_bayes::{OatParams, SqueezedStateModel, StateFamily};

use crate::error::{CliError, CliResult};
use crate::output::Output;

/// A scenario: its config schema and how to run it.
pub trait Scenario: DeserializeOwned + Serialize + Default {
    const NAME: &'static str;

    fn seed_mut(&mut self) -> &mut Option<u64>;

    /// The trial-like count that `--trials` overrides, if any.
    fn trials_mut(&mut self) -> Option<&mut usize>;

    /// Fills derived defaults and checks every key.
    fn materialize(&mut self) -> CliResult<()>;

    fn run(&self, seed: u64, out: &mut Output) -> CliResult<()>;
}

/// Reads a config or a run manifest (a `[run]` table plus `[config]`).
pub fn load<S: Scenario>(path: Option<&Path>) -> CliResult<S> {
    let Some(path) = path else {
        return Ok(S::default());
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse::<S>(&text).map_err(|e| match e {
        CliError::Config(msg) => CliError::config(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn parse<S: Scenario>(text: &str) -> CliResult<S> {
    let table: toml::Table = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
    match (table.get("run"), table.get("config")) {
        (Some(run), Some(config)) => {
            let sub = run
                .get("subcommand")
                .and_then(|v| v.as_str())
                .unwrap_or_default();
            if sub != S::NAME {
                return Err(CliError::config(format!(
                    "manifest was written by `{sub}`, not `{}`",
                    S::NAME
                )));
            }
            config
                .clone()
                .try_into::<S>()
                .map_err(|e| CliError::config(format!("[config]: {e}")))
        }
        _ => toml::from_str::<S>(text).map_err(|e| CliError::config(e.to_string())),
    }
}

pub fn check(ok: bool, key: &str, msg: impl std::fmt::Display) -> CliResult<()> {
    if ok {
        Ok(())
    } else {
        Err(CliError::config(format!("`{key}`: {msg}")))
    }
}

/// Probe keys shared by the phase, gravimetry and clock configs.
pub struct StateKeys {
    pub n: usize,
    pub xi: Option<f64>,
    pub xi_db: Option<f64>,
    pub chi_t: Option<f64>,
    pub alpha: Option<f64>,
    pub contrast: f64,
    pub family: StateFamily,
}

impl StateKeys {
    pub fn check(&self) -> CliResult<()> {
        check(
            self.n >= 2,
            "n",
            format!("particle number must be >= 2, got {}", self.n),
        )?;
        check(
            self.contrast > 0.0 && self.contrast <= 1.0,
            "contrast",
            format!("must lie in (0, 1], got {}", self.contrast),
        )?;
        let given = [
            self.xi.is_some(),
            self.xi_db.is_some(),
            self.chi_t.is_some(),
        ];
        check(
            given.iter().filter(|g| **g).count() <= 1,
            "xi",
            "set at most one of `xi`, `xi_db`, `chi_t`",
        )?;
        check(
            self.alpha.is_none() || self.chi_t.is_some(),
            "alpha",
            "only valid together with `chi_t`",
        )?;
        if let Some(xi) = self.xi {
            check(
                xi > 0.0 && xi <= 1.0,
                "xi",
                format!("must lie in (0, 1], got {xi}"),
            )?;
        }
        if let Some(db) = self.xi_db {
            check(
                db <= 0.0 && db.is_finite(),
                "xi_db",
                format!("must be <= 0 dB, got {db}"),
            )?;
        }
        if let Some(ct) = self.chi_t {
            check(
                ct >= 0.0 && ct.is_finite(),
                "chi_t",
                format!("must be >= 0, got {ct}"),
            )?;
        }
        Ok(())
    }

    pub fn resolve(&self) -> CliResult<SqueezedStateModel> {
        self.check()?;
        if let Some(ct) = self.chi_t {
            let alpha = match self.alpha {
                Some(a) => a,
                None if ct == 0.0 => 0.0,
                None => optimal_rotation_angle(self.n, ct)?,
            };
            return Ok(SqueezedStateModel::from_oat(
                &OatParams::new(self.n, ct, alpha)?,
                self.contrast,
            )?);
        }
        let xi = match (self.xi, self.xi_db) {
            (Some(xi), _) => xi,
            (None, Some(db)) => xi_from_db(db),
            (None, None) => 1.0,
        };
        Ok(SqueezedStateModel::from_xi(
            self.n,
            xi,
            self.contrast,
            self.family,
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn keys() -> StateKeys {
        StateKeys {
            n: 100,
            xi: None,
            xi_db: None,
            chi_t: None,
            alpha: None,
            contrast: 1.0,
            family: StateFamily::Ansatz,
        }
    }

    #[test]
    fn state_resolution() {
        assert_eq!(keys().resolve().unwrap().xi, 1.0);
        let db = StateKeys {
            xi_db: Some(-5.1),
            ..keys()
        }
        .resolve()
        .unwrap();
        assert!((db.xi - 0.5559).abs() < 1e-3);
        let oat = StateKeys {
            chi_t: Some(0.05),
            ..keys()
        }
        .resolve()
        .unwrap();
        assert!(oat.xi < 1.0);
        assert!(StateKeys {
            xi: Some(0.5),
            xi_db: Some(-3.0),
            ..keys()
        }
        .resolve()
        .is_err());
        assert!(StateKeys {
            alpha: Some(0.1),
            ..keys()
        }
        .resolve()
        .is_err());
        assert!(StateKeys {
            contrast: 1.5,
            ..keys()
        }
        .resolve()
        .is_err());
    }
}
