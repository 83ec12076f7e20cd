//! Task execution: pipeline orchestration per scenario plus file emission.
//! Exit-code contract: 0 all checks pass, 1 invariant failure, 2 parse or
//! configuration error, 3 solver error.

use crate::scenario::{self, BuiltScenario};
use nvw_core::diagnostics::{approximation_study, conservation_series, regularization_check};
use nvw_core::evolution::{evolve, evolve_full, state_distance, EvolveParams};
use nvw_core::goursat::{check_h, tile_solve_curve};
use nvw_core::lagrangian::{check_f, check_g, map_c, map_l};
use nvw_core::{EulerianState, Error as CoreError};
use serde::Serialize;
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug)]
pub enum CliError {
    /// Scenario or argument problem: exit 2.
    Parse(String),
    /// Pipeline failure: exit 3.
    Solver(String),
    /// Output emission failure: exit 3.
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Solver(_) | CliError::Io(_) => 3,
        }
    }

    pub fn record(&self) -> String {
        let (kind, msg) = match self {
            CliError::Parse(m) => ("parse", m),
            CliError::Solver(m) => ("solver", m),
            CliError::Io(m) => ("io", m),
        };
        serde_json::to_string(&json!({
            "error": {"kind": kind, "message": msg, "exit": self.exit_code()}
        }))
        .unwrap()
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::Config(_) | CoreError::Usage(_) => CliError::Parse(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

fn io_err<T>(r: std::io::Result<T>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Io(e.to_string()))
}

pub struct TaskOptions {
    pub out_dir: PathBuf,
    pub tol: Option<f64>,
    pub grid: Option<usize>,
    pub levels: usize,
    pub dump_lagrangian: bool,
}

pub fn load_and_build(spec: &str, opts: &TaskOptions) -> Result<BuiltScenario, CliError> {
    let mut sc = scenario::load(spec).map_err(CliError::Parse)?;
    if let Some(t) = opts.tol {
        sc.solver.tol = t;
    }
    if let Some(g) = opts.grid {
        sc.solver.grid = g;
    }
    scenario::build(sc).map_err(CliError::Parse)
}

fn evolve_params(b: &BuiltScenario) -> EvolveParams {
    EvolveParams {
        solver: b.scenario.solver.params(),
        ..EvolveParams::default()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        io_err(std::fs::create_dir_all(dir))?;
    }
    io_err(std::fs::write(path, contents))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    write_file(path, &text)
}

/// Time-slice CSV: one row per grid point with the field and density values.
fn slice_csv(t: f64, st: &EulerianState) -> String {
    let mut out = String::from("t,x,u,R,S,rho,sigma,mu_density,nu_density\n");
    let dens = |m: &nvw_core::RadonMeasure, x: f64| -> f64 {
        if m.grid().is_empty() {
            0.0
        } else {
            let g = m.grid();
            let i = g.partition_point(|&v| v <= x).clamp(1, g.len() - 1);
            let w = ((x - g[i - 1]) / (g[i] - g[i - 1])).clamp(0.0, 1.0);
            m.density()[i - 1] * (1.0 - w) + m.density()[i] * w
        }
    };
    for (i, &x) in st.grid.iter().enumerate() {
        let _ = writeln!(
            out,
            "{t},{x},{},{},{},{},{},{},{}",
            st.u[i],
            st.r[i],
            st.s[i],
            st.rho[i],
            st.sigma[i],
            dens(&st.mu, x),
            dens(&st.nu, x)
        );
    }
    out
}

fn atoms_csv(t: f64, st: &EulerianState) -> String {
    let mut out = String::from("t,x,mass,which_measure\n");
    for a in st.mu.atoms() {
        let _ = writeln!(out, "{t},{},{},mu", a.pos, a.mass);
    }
    for a in st.nu.atoms() {
        let _ = writeln!(out, "{t},{},{},nu", a.pos, a.mass);
    }
    out
}

fn psi_csv(psi: &nvw_core::PsiPair) -> String {
    let mut out = String::from("family,parameter,x,u,j,k,v,h,dx,dj,dk\n");
    for (tag, b) in [("one", &psi.one), ("two", &psi.two)] {
        for i in 0..b.len() {
            let _ = writeln!(
                out,
                "{tag},{},{},{},{},{},{},{},{},{},{}",
                b.grid[i], b.x[i], b.u[i], b.j[i], b.k[i], b.v[i], b.h[i], b.dx[i], b.dj[i], b.dk[i]
            );
        }
    }
    out
}

fn grid_csv(sol: &nvw_core::GridSolution) -> String {
    let mut out = String::from("X,Y,t,x,U,J,K\n");
    for (i, &x) in sol.xg.iter().enumerate() {
        for (j, &y) in sol.yg.iter().enumerate() {
            let _ = writeln!(
                out,
                "{x},{y},{},{},{},{},{}",
                sol.time(i, j),
                sol.z[1].at(i, j),
                sol.z[2].at(i, j),
                sol.z[3].at(i, j),
                sol.z[4].at(i, j)
            );
        }
    }
    out
}

pub fn task_list() -> i32 {
    for name in scenario::bundled_names() {
        println!("{name}");
    }
    0
}

pub fn task_solve(spec: &str, opts: &TaskOptions) -> Result<i32, CliError> {
    let b = load_and_build(spec, opts)?;
    let t = b.scenario.tasks.solve_time;
    let params = evolve_params(&b);
    let out = evolve_full(&b.state, t, &b.model, &params)?;
    let e0 = b.state.total_energy();
    let e1 = out.state.total_energy();
    write_file(&opts.out_dir.join("slice.csv"), &slice_csv(t, &out.state))?;
    write_file(&opts.out_dir.join("atoms.csv"), &atoms_csv(t, &out.state))?;
    let hrep = check_h(&out.solution, &b.model);
    write_json(
        &opts.out_dir.join("summary.json"),
        &json!({
            "scenario": b.scenario.name,
            "time": t,
            "energy_initial": e0,
            "energy_final": e1,
            "relative_drift": if e0 > 0.0 { (e1 - e0).abs() / e0 } else { e1.abs() },
            "value_iterate_gap": out.solution.zh_zv_gap,
            "relation_residuals": hrep.checks,
        }),
    )?;
    if opts.dump_lagrangian {
        write_file(&opts.out_dir.join("families.csv"), &psi_csv(&out.psi))?;
        write_file(&opts.out_dir.join("grid.csv"), &grid_csv(&out.solution))?;
    }
    Ok(0)
}

#[derive(Serialize)]
struct VerifyCheck {
    name: String,
    pass: bool,
    value: f64,
    budget: f64,
}

pub fn task_verify(spec: &str, opts: &TaskOptions) -> Result<i32, CliError> {
    let b = load_and_build(spec, opts)?;
    let mut checks: Vec<VerifyCheck> = Vec::new();
    let push = |checks: &mut Vec<VerifyCheck>, name: &str, value: f64, budget: f64| {
        checks.push(VerifyCheck {
            name: name.into(),
            pass: value <= budget,
            value,
            budget,
        });
    };

    let vrep = b.state.validate(&b.model);
    checks.push(VerifyCheck {
        name: "state-membership".into(),
        pass: vrep.pass(),
        value: vrep.worst_relative(),
        budget: f64::INFINITY,
    });

    let psi = map_l(&b.state, &b.model)?;
    let frep = check_f(&psi, &b.model);
    checks.push(VerifyCheck {
        name: "family-membership".into(),
        pass: frep.pass(),
        value: frep.worst_relative(),
        budget: f64::INFINITY,
    });
    let curve = map_c(&psi, &b.model)?;
    let grep = check_g(&curve, &b.model);
    checks.push(VerifyCheck {
        name: "curve-membership".into(),
        pass: grep.pass(),
        value: grep.worst_relative(),
        budget: f64::INFINITY,
    });

    // direct inverse: exact at grid points, exact measure cumulatives
    let back = nvw_core::evolution::map_m(&psi, &b.model)?;
    let (du, dmu, dnu) = state_distance(&b.state, &back, 200);
    push(&mut checks, "round-trip-u", du, 1e-9 * (1.0 + b.state.total_energy()));
    push(&mut checks, "round-trip-measures", dmu.max(dnu), 1e-8 * (1.0 + b.state.total_energy()));

    // full pipeline at time zero
    let params = evolve_params(&b);
    let zero = evolve(&b.state, 0.0, &b.model, &params)?;
    let (du0, dmu0, dnu0) = state_distance(&b.state, &zero, 200);
    let hx = (b.state.grid[b.state.grid.len() - 1] - b.state.grid[0]) / (b.state.grid.len() - 1) as f64;
    let span = curve.s_hi() - curve.s_lo();
    let hs = span / (b.scenario.solver.grid.max(2) - 1) as f64;
    let budget = 10.0 * (params.solver.tol + hs * hs + hx * hx) * (1.0 + b.state.total_energy());
    push(&mut checks, "pipeline-time-zero-u", du0, budget);
    push(&mut checks, "pipeline-time-zero-measures", dmu0.max(dnu0), budget);

    // atoms must come back where they started
    let n_atoms_in = b.state.mu.atoms().len() + b.state.nu.atoms().len();
    if n_atoms_in > 0 {
        let n_atoms_out = zero.mu.atoms().len() + zero.nu.atoms().len();
        checks.push(VerifyCheck {
            name: "atoms-regained-count".into(),
            pass: n_atoms_in == n_atoms_out,
            value: n_atoms_out as f64,
            budget: n_atoms_in as f64,
        });
        let mut worst = 0.0f64;
        for (a, bb) in b.state.mu.atoms().iter().zip(zero.mu.atoms()) {
            worst = worst.max((a.pos - bb.pos).abs()).max((a.mass - bb.mass).abs());
        }
        for (a, bb) in b.state.nu.atoms().iter().zip(zero.nu.atoms()) {
            worst = worst.max((a.pos - bb.pos).abs()).max((a.mass - bb.mass).abs());
        }
        push(&mut checks, "atoms-regained-values", worst, 1e-6);
    }

    let pass = checks.iter().all(|c| c.pass);
    write_json(
        &opts.out_dir.join("verify.json"),
        &json!({"scenario": b.scenario.name, "pass": pass, "checks": checks}),
    )?;
    for c in &checks {
        println!(
            "{} {:28} value {:10.3e} budget {:10.3e}",
            if c.pass { "pass" } else { "FAIL" },
            c.name,
            c.value,
            c.budget
        );
    }
    Ok(if pass { 0 } else { 1 })
}

pub fn task_conservation(spec: &str, opts: &TaskOptions) -> Result<i32, CliError> {
    let b = load_and_build(spec, opts)?;
    let params = evolve_params(&b);
    let rep = conservation_series(&b.state, &b.scenario.tasks.times, &b.model, &params)?;
    let mut csv = String::from("t,total_energy,mu_mass,nu_mass,atoms\n");
    for (k, &t) in rep.times.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{t},{},{},{},{}",
            rep.total_energy[k], rep.mu_mass[k], rep.nu_mass[k], rep.atoms_count[k]
        );
    }
    write_file(&opts.out_dir.join("conservation.csv"), &csv)?;
    let budget = b.scenario.tasks.drift_budget;
    write_json(
        &opts.out_dir.join("conservation.json"),
        &json!({
            "scenario": b.scenario.name,
            "report": rep,
            "drift_budget": budget,
            "pass": rep.worst_drift <= budget,
        }),
    )?;
    println!(
        "{} conservation drift {:.3e} (budget {:.3e})",
        if rep.worst_drift <= budget { "pass" } else { "FAIL" },
        rep.worst_drift,
        budget
    );
    Ok(if rep.worst_drift <= budget { 0 } else { 1 })
}

pub fn task_convergence(spec: &str, opts: &TaskOptions) -> Result<i32, CliError> {
    let b = load_and_build(spec, opts)?;
    let psi = map_l(&b.state, &b.model)?;
    let curve = map_c(&psi, &b.model)?;
    let mut grids = Vec::new();
    let mut worsts = Vec::new();
    let base = b.scenario.solver.grid.max(3);
    for level in 0..opts.levels.max(2) {
        let grid = (base - 1) * (1 << level) + 1;
        let mut params = b.scenario.solver.params();
        params.grid = grid;
        let sol = tile_solve_curve(&curve, &b.model, &params)?;
        let rep = check_h(&sol, &b.model);
        let worst = rep.checks.iter().map(|c| c.relative).fold(0.0f64, f64::max);
        grids.push(grid);
        worsts.push(worst);
    }
    let ratios: Vec<f64> = worsts.windows(2).map(|w| w[0] / w[1]).collect();
    let pass = ratios.iter().all(|&r| r >= 3.0);
    write_json(
        &opts.out_dir.join("convergence.json"),
        &json!({
            "scenario": b.scenario.name,
            "grids": grids,
            "worst_relation_residuals": worsts,
            "ratios": ratios,
            "pass": pass,
        }),
    )?;
    for (k, r) in ratios.iter().enumerate() {
        println!(
            "{} level {} -> {}: residual ratio {:.2}",
            if *r >= 3.0 { "pass" } else { "FAIL" },
            k,
            k + 1,
            r
        );
    }
    Ok(if pass { 0 } else { 1 })
}

pub fn task_regularization(spec: &str, opts: &TaskOptions) -> Result<i32, CliError> {
    let b = load_and_build(spec, opts)?;
    let interval = b
        .scenario
        .tasks
        .interval
        .unwrap_or((b.scenario.domain.xl, b.scenario.domain.xr));
    let params = evolve_params(&b);
    let rep = regularization_check(
        &b.state,
        interval,
        b.scenario.tasks.floors,
        b.scenario.tasks.tau,
        &b.model,
        &params,
    )?;
    write_json(
        &opts.out_dir.join("regularization.json"),
        &json!({"scenario": b.scenario.name, "report": rep}),
    )?;
    println!(
        "{} density floors after tau={}: min rho {:.4e}, min sigma {:.4e}, atoms in window {}",
        if rep.pass { "pass" } else { "FAIL" },
        rep.tau,
        rep.min_rho,
        rep.min_sigma,
        rep.atoms_in_window
    );
    Ok(if rep.pass { 0 } else { 1 })
}

pub fn task_approximation(spec: &str, opts: &TaskOptions) -> Result<i32, CliError> {
    let b = load_and_build(spec, opts)?;
    let interval = b
        .scenario
        .tasks
        .interval
        .unwrap_or((b.scenario.domain.xl, b.scenario.domain.xr));
    let params = evolve_params(&b);
    let rep = approximation_study(
        &b.state,
        &b.scenario.tasks.epsilons,
        b.scenario.tasks.tau,
        interval,
        &b.model,
        &params,
    )?;
    let pass = rep.u_decreasing && rep.rho_decreasing;
    write_json(
        &opts.out_dir.join("approximation.json"),
        &json!({"scenario": b.scenario.name, "report": rep, "pass": pass}),
    )?;
    for (k, &eps) in rep.epsilons.iter().enumerate() {
        println!(
            "eps {:5}: |u_eps - u|_inf = {:.4e}, |rho_eps|_L1 = {:.4e}",
            eps, rep.u_sup_diff[k], rep.rho_l1[k]
        );
    }
    println!("{} both columns decreasing", if pass { "pass" } else { "FAIL" });
    Ok(if pass { 0 } else { 1 })
}
