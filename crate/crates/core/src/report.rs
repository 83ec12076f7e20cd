//! Pass/fail reports produced by the validation and set-membership checks.

use serde::Serialize;

/// Result of one named invariant check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub pass: bool,
    /// Worst absolute residual observed.
    pub residual: f64,
    /// Worst residual relative to the scale of the quantities involved.
    pub relative: f64,
    /// Grid location (coordinate value) of the worst residual.
    pub location: f64,
}

/// A bundle of invariant checks.
#[derive(Debug, Clone, Default, Serialize)]
pub struct CheckReport {
    pub checks: Vec<CheckItem>,
}

impl CheckReport {
    pub fn push(&mut self, name: &str, pass: bool, residual: f64, relative: f64, location: f64) {
        self.checks.push(CheckItem {
            name: name.to_string(),
            pass,
            residual,
            relative,
            location,
        });
    }

    /// Record a residual check against a relative threshold.
    pub fn push_residual(&mut self, name: &str, residual: f64, scale: f64, location: f64, tol: f64) {
        let relative = residual / scale.max(1e-300);
        self.push(name, relative <= tol, residual, relative, location);
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&CheckItem> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn worst_relative(&self) -> f64 {
        self.checks.iter().map(|c| c.relative).fold(0.0, f64::max)
    }

    pub fn merged(mut self, other: CheckReport) -> CheckReport {
        self.checks.extend(other.checks);
        self
    }
}

impl std::fmt::Display for CheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for c in &self.checks {
            writeln!(
                f,
                "{} {:28} residual {:10.3e} (rel {:10.3e}) at {:.6}",
                if c.pass { "pass" } else { "FAIL" },
                c.name,
                c.residual,
                c.relative,
                c.location
            )?;
        }
        Ok(())
    }
}
