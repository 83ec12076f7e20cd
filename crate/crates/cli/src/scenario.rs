//! Scenario files: wave-speed config, initial data as expressions or sample
//! arrays, solver controls and per-task parameters. Bundled scenarios are
//! embedded in the binary and addressable by name.

use crate::expr;
use nvw_core::goursat::SolverParams;
use nvw_core::measures::Atom;
use nvw_core::wavespeed::WaveSpeedConfig;
use nvw_core::{EulerianState, WaveSpeedModel};
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub wavespeed: WaveSpeedConfig,
    pub domain: Domain,
    pub initial: Initial,
    #[serde(default)]
    pub solver: Solver,
    #[serde(default)]
    pub tasks: Tasks,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Domain {
    pub xl: f64,
    pub xr: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Deserialize, Default)]
pub struct Initial {
    pub u: Option<String>,
    pub ut: Option<String>,
    pub rho: Option<String>,
    pub sigma: Option<String>,
    pub u_samples: Option<Vec<f64>>,
    pub ut_samples: Option<Vec<f64>>,
    pub ux_samples: Option<Vec<f64>>,
    pub rho_samples: Option<Vec<f64>>,
    pub sigma_samples: Option<Vec<f64>>,
    #[serde(default)]
    pub atoms_mu: Vec<(f64, f64)>,
    #[serde(default)]
    pub atoms_nu: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Solver {
    pub tol: f64,
    pub max_iter: usize,
    pub grid: usize,
    pub cell_width: f64,
    pub cell_budget: usize,
}

impl Default for Solver {
    fn default() -> Self {
        let d = SolverParams::default();
        Solver {
            tol: d.tol,
            max_iter: d.max_iter,
            grid: d.grid,
            cell_width: d.cell_width,
            cell_budget: d.cell_budget,
        }
    }
}

impl Solver {
    pub fn params(&self) -> SolverParams {
        SolverParams {
            tol: self.tol,
            max_iter: self.max_iter,
            grid: self.grid,
            cell_width: self.cell_width,
            cell_budget: self.cell_budget,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct Tasks {
    /// Target time for the solve task.
    pub solve_time: f64,
    /// Times for the conservation series.
    pub times: Vec<f64>,
    /// Relative drift budget asserted by the conservation task.
    pub drift_budget: f64,
    /// Evolution time for the regularization / approximation tasks.
    pub tau: f64,
    /// Interval hypothesis for the bounded-interval theorems.
    pub interval: Option<(f64, f64)>,
    /// Density floors for the regularization check.
    pub floors: (f64, f64),
    /// Density levels for the approximation study.
    pub epsilons: Vec<f64>,
}

impl Default for Tasks {
    fn default() -> Self {
        Tasks {
            solve_time: 0.4,
            times: vec![0.1, 0.2, 0.3, 0.4, 0.5],
            drift_budget: 1e-6,
            tau: 0.5,
            interval: None,
            floors: (0.5, 0.5),
            epsilons: vec![0.2, 0.1, 0.05],
        }
    }
}

pub const BUNDLED: &[(&str, &str)] = &[
    ("zero", include_str!("../scenarios/zero.json")),
    ("example1", include_str!("../scenarios/example1.json")),
    ("example2", include_str!("../scenarios/example2.json")),
    ("example3", include_str!("../scenarios/example3.json")),
    ("smooth_bump", include_str!("../scenarios/smooth_bump.json")),
    ("concentration", include_str!("../scenarios/concentration.json")),
    ("traveling_wave", include_str!("../scenarios/traveling_wave.json")),
    ("regularization", include_str!("../scenarios/regularization.json")),
    ("approximation", include_str!("../scenarios/approximation.json")),
];

pub fn bundled_names() -> Vec<&'static str> {
    BUNDLED.iter().map(|(n, _)| *n).collect()
}

/// Load a scenario from a bundled name or a file path.
pub fn load(spec: &str) -> Result<Scenario, String> {
    if let Some((_, text)) = BUNDLED.iter().find(|(n, _)| *n == spec) {
        return serde_json::from_str(text).map_err(|e| format!("bundled scenario '{spec}': {e}"));
    }
    let text = std::fs::read_to_string(spec).map_err(|e| format!("cannot read '{spec}': {e}"))?;
    serde_json::from_str(&text).map_err(|e| format!("{spec}: {e}"))
}

pub struct BuiltScenario {
    pub scenario: Scenario,
    pub model: WaveSpeedModel,
    pub state: EulerianState,
}

/// Evaluate the initial data and assemble the model and the state.
pub fn build(scenario: Scenario) -> Result<BuiltScenario, String> {
    let model = WaveSpeedModel::from_config(&scenario.wavespeed).map_err(|e| e.to_string())?;
    let d = &scenario.domain;
    if d.n < 2 || !(d.xl < d.xr) {
        return Err("domain must satisfy xl < xr with n >= 2".into());
    }
    let grid: Vec<f64> = (0..d.n)
        .map(|i| d.xl + (d.xr - d.xl) * i as f64 / (d.n - 1) as f64)
        .collect();

    let field = |expr_src: &Option<String>, samples: &Option<Vec<f64>>, name: &str| -> Result<Vec<f64>, String> {
        if let Some(vals) = samples {
            if vals.len() != grid.len() {
                return Err(format!("{name}_samples must have {} entries", grid.len()));
            }
            return Ok(vals.clone());
        }
        let src = expr_src
            .as_deref()
            .ok_or_else(|| format!("initial data needs '{name}' (expression or samples)"))?;
        let e = expr::parse(src).map_err(|err| format!("{name}: {err}"))?;
        Ok(grid.iter().map(|&x| e.eval(x)).collect())
    };

    let u = field(&scenario.initial.u, &scenario.initial.u_samples, "u")?;
    let ut = field(&scenario.initial.ut, &scenario.initial.ut_samples, "ut")?;
    let rho = field(&scenario.initial.rho, &scenario.initial.rho_samples, "rho")?;
    let sigma = field(&scenario.initial.sigma, &scenario.initial.sigma_samples, "sigma")?;

    // slope of u: tight central differences of the expression, or supplied samples
    let ux: Vec<f64> = if let Some(vals) = &scenario.initial.ux_samples {
        if vals.len() != grid.len() {
            return Err(format!("ux_samples must have {} entries", grid.len()));
        }
        vals.clone()
    } else if let Some(src) = scenario.initial.u.as_deref() {
        let e = expr::parse(src).map_err(|err| format!("u: {err}"))?;
        let delta = 1e-6 * (1.0 + d.xr.abs().max(d.xl.abs()));
        grid.iter()
            .map(|&x| (e.eval(x + delta) - e.eval(x - delta)) / (2.0 * delta))
            .collect()
    } else {
        return Err("u given as samples requires ux_samples".into());
    };

    let atoms = |list: &[(f64, f64)]| -> Vec<Atom> {
        list.iter().map(|&(pos, mass)| Atom { pos, mass }).collect()
    };

    let state = EulerianState::from_primitives(
        grid,
        u,
        ut,
        ux,
        rho,
        sigma,
        atoms(&scenario.initial.atoms_mu),
        atoms(&scenario.initial.atoms_nu),
        &model,
    )
    .map_err(|e| e.to_string())?;
    Ok(BuiltScenario {
        scenario,
        model,
        state,
    })
}
