//! The claims manifest, fit reports and the status file.

use std::collections::BTreeMap;
use std::path::Path;

use heislab::fit::{linear_fit, LinearFit};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const BUILTIN_MANIFEST: &str = include_str!("../claims.toml");

/// Every claim the harness knows how to evaluate, with its experiment.
pub const KNOWN_CLAIMS: &[(&str, &str)] = &[
    ("gh-collision-exponent", "collision-exact"),
    ("conditional-match-exponent", "collision-exact"),
    ("count-match-exponent", "collision-exact"),
    ("fourier-three-halves", "fourier"),
    ("z4-collision-exponent", "zd-collision"),
    ("eit-tail-linearity", "eit-tail"),
    ("srw-return-exponent", "srw-return"),
    ("ball-growth-exponent", "ball-growth"),
    ("z2-resistance-log-slope", "resistance"),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Slope,
    RSquared,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Claim {
    pub experiment: String,
    pub statistic: Statistic,
    pub fit: String,
    pub target: f64,
    pub tolerance: f64,
    pub citation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub claims: BTreeMap<String, Claim>,
}

impl Manifest {
    pub fn parse(text: &str) -> Result<Manifest, CliError> {
        let m: Manifest = toml::from_str(text).map_err(|e| CliError::Config(format!("claims manifest: {e}")))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: Option<&str>) -> Result<Manifest, CliError> {
        match path {
            None => Manifest::parse(BUILTIN_MANIFEST),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read claims manifest {p}: {e}")))?;
                Manifest::parse(&text)
            }
        }
    }

    fn validate(&self) -> Result<(), CliError> {
        for (id, claim) in &self.claims {
            let Some(&(_, experiment)) = KNOWN_CLAIMS.iter().find(|(k, _)| k == id) else {
                return Err(CliError::Config(format!("claims manifest: unknown claim_id {id:?}")));
            };
            if claim.experiment != experiment {
                return Err(CliError::Config(format!(
                    "claims manifest: {id} belongs to experiment {experiment}, not {}",
                    claim.experiment
                )));
            }
            if claim.tolerance.is_nan() || claim.tolerance < 0.0 || !claim.target.is_finite() {
                return Err(CliError::Config(format!("claims manifest: {id} needs a finite target and tolerance >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub claim_id: String,
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub range: Vec<f64>,
    pub statistic: Statistic,
    pub target: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl FitReport {
    pub fn from_fit(claim_id: &str, claim: &Claim, fit: &LinearFit, range: Vec<f64>) -> FitReport {
        let value = match claim.statistic {
            Statistic::Slope => fit.slope,
            Statistic::RSquared => fit.r_squared,
        };
        FitReport {
            claim_id: claim_id.to_string(),
            slope: fit.slope,
            intercept: fit.intercept,
            r_squared: fit.r_squared,
            range,
            statistic: claim.statistic,
            target: claim.target,
            tolerance: claim.tolerance,
            pass: (value - claim.target).abs() <= claim.tolerance,
        }
    }

    /// A claim whose data could not be fitted (for example, a zero count).
    pub fn unfittable(claim_id: &str, claim: &Claim, range: Vec<f64>) -> FitReport {
        FitReport {
            claim_id: claim_id.to_string(),
            slope: f64::NAN,
            intercept: f64::NAN,
            r_squared: f64::NAN,
            range,
            statistic: claim.statistic,
            target: claim.target,
            tolerance: claim.tolerance,
            pass: false,
        }
    }
}

/// Fits `ys` against `xs` for `claim_id` if the manifest lists it. The range
/// recorded is `xs` before any transformation, supplied by the caller.
pub fn fit_claim(manifest: &Manifest, claim_id: &str, range: &[f64], xs: &[f64], ys: &[f64]) -> Option<FitReport> {
    let claim = manifest.claims.get(claim_id)?;
    let ok = xs.iter().chain(ys).all(|v| v.is_finite());
    Some(match ok.then(|| linear_fit(xs, ys)).flatten() {
        Some(fit) => FitReport::from_fit(claim_id, claim, &fit, range.to_vec()),
        None => FitReport::unfittable(claim_id, claim, range.to_vec()),
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StatusFile {
    pub claims: BTreeMap<String, ClaimStatus>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClaimStatus {
    pub pass: bool,
    pub statistic_value: f64,
    pub version: String,
}

impl StatusFile {
    pub fn load(path: &Path) -> Result<StatusFile, CliError> {
        match std::fs::read_to_string(path) {
            Ok(text) => serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("status file {}: {e}", path.display()))),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(StatusFile::default()),
            Err(e) => Err(e.into()),
        }
    }

    pub fn record(&mut self, fits: &[FitReport], version: &str) {
        for f in fits {
            let value = match f.statistic {
                Statistic::Slope => f.slope,
                Statistic::RSquared => f.r_squared,
            };
            self.claims.insert(
                f.claim_id.clone(),
                ClaimStatus {
                    pass: f.pass,
                    statistic_value: value,
                    version: version.to_string(),
                },
            );
        }
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(self).expect("status serializes");
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// The `claims` table: one line per claim with its last status.
pub fn claims_table(manifest: &Manifest, status: &StatusFile) -> String {
    let mut out = format!(
        "{:<28} {:<16} {:<10} {:>8} {:>9}  {}\n",
        "claim_id", "experiment", "statistic", "target", "tolerance", "status"
    );
    for (id, c) in &manifest.claims {
        let stat = match c.statistic {
            Statistic::Slope => "slope",
            Statistic::RSquared => "r_squared",
        };
        let status = match status.claims.get(id) {
            None => "not run".to_string(),
            Some(s) if s.pass => format!("pass ({:.4})", s.statistic_value),
            Some(s) => format!("fail ({:.4})", s.statistic_value),
        };
        out.push_str(&format!(
            "{id:<28} {:<16} {stat:<10} {:>8} {:>9}  {status}\n",
            c.experiment, c.target, c.tolerance
        ));
    }
    out
}
