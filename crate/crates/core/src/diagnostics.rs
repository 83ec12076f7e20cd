//! Scenario-level verification: conservation series, conservation-law
//! residuals on smooth regions, and the regularization/approximation
//! experiments on bounded intervals.

use crate::error::Error;
use crate::eulerian::EulerianState;
use crate::evolution::{evolve, EvolveParams};
use crate::pl;
use crate::wavespeed::WaveSpeedModel;
use crate::Result;
use serde::Serialize;

/// Energy bookkeeping across a set of times.
#[derive(Debug, Clone, Serialize)]
pub struct ConservationReport {
    pub times: Vec<f64>,
    pub total_energy: Vec<f64>,
    pub mu_mass: Vec<f64>,
    pub nu_mass: Vec<f64>,
    pub atoms_count: Vec<usize>,
    /// max |E(t) - E(0)| / E(0)
    pub worst_drift: f64,
}

/// Evolve the state to each time independently and tabulate the energies.
pub fn conservation_series(
    state: &EulerianState,
    times: &[f64],
    model: &WaveSpeedModel,
    params: &EvolveParams,
) -> Result<ConservationReport> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Usage("times must be sorted".into()));
    }
    let e0 = state.total_energy();
    let mut rep = ConservationReport {
        times: times.to_vec(),
        total_energy: Vec::new(),
        mu_mass: Vec::new(),
        nu_mass: Vec::new(),
        atoms_count: Vec::new(),
        worst_drift: 0.0,
    };
    for &t in times {
        let st = if t == 0.0 {
            state.clone()
        } else {
            evolve(state, t, model, params)?
        };
        let e = st.total_energy();
        rep.total_energy.push(e);
        rep.mu_mass.push(st.mu.total());
        rep.nu_mass.push(st.nu.total());
        rep.atoms_count.push(st.mu.atoms().len() + st.nu.atoms().len());
        if e0 > 0.0 {
            rep.worst_drift = rep.worst_drift.max((e - e0).abs() / e0);
        } else {
            rep.worst_drift = rep.worst_drift.max(e.abs());
        }
    }
    Ok(rep)
}

/// L1-per-unit-area residuals of the two conservation laws, computed from
/// three time slices around `t_center` with centered differences.
#[allow(clippy::too_many_arguments)]
pub fn conslaw_residual(
    state: &EulerianState,
    model: &WaveSpeedModel,
    params: &EvolveParams,
    t_center: f64,
    dt: f64,
    region: (f64, f64),
    probes: usize,
) -> Result<(f64, f64)> {
    let slices = [
        evolve(state, t_center - dt, model, params)?,
        evolve(state, t_center, model, params)?,
        evolve(state, t_center + dt, model, params)?,
    ];
    for st in &slices {
        let atoms_in = st
            .mu
            .atoms()
            .iter()
            .chain(st.nu.atoms())
            .any(|a| a.pos >= region.0 && a.pos <= region.1);
        if atoms_in {
            return Err(Error::NotApplicable(
                "conservation-law residual needs an atom-free region".into(),
            ));
        }
    }
    let h = (region.1 - region.0) / (probes - 1) as f64;
    let xs: Vec<f64> = (0..probes).map(|k| region.0 + k as f64 * h).collect();
    // v = R^2 + c rho^2 + S^2 + c sigma^2, w = (R^2 + c rho^2 - S^2 - c sigma^2)/c
    let fields = |st: &EulerianState| -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut v = Vec::with_capacity(probes);
        let mut w = Vec::with_capacity(probes);
        let mut c2w = Vec::with_capacity(probes);
        for &x in &xs {
            let u = pl::interp_clamped(&st.grid, &st.u, x);
            let r = pl::interp_clamped(&st.grid, &st.r, x);
            let s = pl::interp_clamped(&st.grid, &st.s, x);
            let rho = pl::interp_clamped(&st.grid, &st.rho, x);
            let sg = pl::interp_clamped(&st.grid, &st.sigma, x);
            let c = model.eval(u);
            let fwd = r * r + c * rho * rho;
            let bwd = s * s + c * sg * sg;
            v.push(fwd + bwd);
            w.push((fwd - bwd) / c);
            c2w.push(c * c * (fwd - bwd) / c);
        }
        (v, w, c2w)
    };
    let (v0, w0, _) = fields(&slices[0]);
    let (v1, _w1, c2w1) = fields(&slices[1]);
    let (v2, w2, _) = fields(&slices[2]);
    let mut res_v = 0.0;
    let mut res_w = 0.0;
    for k in 1..probes - 1 {
        let vt = (v2[k] - v0[k]) / (2.0 * dt);
        let wt = (w2[k] - w0[k]) / (2.0 * dt);
        let c2w_x = (c2w1[k + 1] - c2w1[k - 1]) / (2.0 * h);
        let v_x = (v1[k + 1] - v1[k - 1]) / (2.0 * h);
        res_v += (vt - c2w_x).abs();
        res_w += (wt - v_x).abs();
    }
    let count = (probes - 2) as f64;
    Ok((res_v / count, res_w / count))
}

/// Positivity of the transported densities after evolution on the shrunk
/// interval, and absence of atoms there.
#[derive(Debug, Clone, Serialize)]
pub struct RegularizationReport {
    pub tau: f64,
    pub window: (f64, f64),
    pub min_rho: f64,
    pub min_sigma: f64,
    pub atoms_in_window: usize,
    pub pass: bool,
}

pub fn regularization_check(
    state: &EulerianState,
    interval: (f64, f64),
    floors: (f64, f64),
    tau: f64,
    model: &WaveSpeedModel,
    params: &EvolveParams,
) -> Result<RegularizationReport> {
    let (xl, xr) = interval;
    let (d, e) = floors;
    if !(d > 0.0 && e > 0.0) {
        return Err(Error::Hypothesis("density floors must be positive".into()));
    }
    if tau.abs() > (xr - xl) / (2.0 * model.kappa) {
        return Err(Error::Hypothesis(format!(
            "time {tau} exceeds the light-cone bound {}",
            (xr - xl) / (2.0 * model.kappa)
        )));
    }
    for (i, &x) in state.grid.iter().enumerate() {
        if x >= xl && x <= xr {
            if state.rho[i] < d {
                return Err(Error::Hypothesis(format!(
                    "initial forward density {:.3e} below the floor {d} at x={x}",
                    state.rho[i]
                )));
            }
            if state.sigma[i] < e {
                return Err(Error::Hypothesis(format!(
                    "initial backward density {:.3e} below the floor {e} at x={x}",
                    state.sigma[i]
                )));
            }
        }
    }
    let atoms0 = state
        .mu
        .atoms()
        .iter()
        .chain(state.nu.atoms())
        .any(|a| a.pos >= xl && a.pos <= xr);
    if atoms0 {
        return Err(Error::Hypothesis("initial measures must be atom-free on the interval".into()));
    }

    let st = evolve(state, tau, model, params)?;
    let window = (xl + model.kappa * tau.abs(), xr - model.kappa * tau.abs());
    let mut min_rho = f64::INFINITY;
    let mut min_sigma = f64::INFINITY;
    for (i, &x) in st.grid.iter().enumerate() {
        if x >= window.0 && x <= window.1 {
            min_rho = min_rho.min(st.rho[i]);
            min_sigma = min_sigma.min(st.sigma[i]);
        }
    }
    let atoms_in_window = st
        .mu
        .atoms()
        .iter()
        .chain(st.nu.atoms())
        .filter(|a| a.pos >= window.0 && a.pos <= window.1)
        .count();
    let pass = min_rho > 0.0 && min_sigma > 0.0 && atoms_in_window == 0;
    Ok(RegularizationReport {
        tau,
        window,
        min_rho,
        min_sigma,
        atoms_in_window,
        pass,
    })
}

/// Vanishing-density approximation experiment.
#[derive(Debug, Clone, Serialize)]
pub struct ApproximationReport {
    pub epsilons: Vec<f64>,
    pub u_sup_diff: Vec<f64>,
    pub rho_l1: Vec<f64>,
    pub u_decreasing: bool,
    pub rho_decreasing: bool,
}

/// Evolve the base state and its density-regularized perturbations; tabulate
/// how the perturbed solutions approach the base one.
pub fn approximation_study(
    base: &EulerianState,
    epsilons: &[f64],
    tau: f64,
    interval: (f64, f64),
    model: &WaveSpeedModel,
    params: &EvolveParams,
) -> Result<ApproximationReport> {
    if epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Usage("epsilons must be strictly decreasing".into()));
    }
    let (xl, xr) = interval;
    for (i, &x) in base.grid.iter().enumerate() {
        if x >= xl && x <= xr && (base.rho[i] != 0.0 || base.sigma[i] != 0.0) {
            return Err(Error::Hypothesis("base state must carry no transported density".into()));
        }
    }
    let window = (xl + model.kappa * tau.abs(), xr - model.kappa * tau.abs());
    let base_t = evolve(base, tau, model, params)?;
    let probes = 400;
    let mut rep = ApproximationReport {
        epsilons: epsilons.to_vec(),
        u_sup_diff: Vec::new(),
        rho_l1: Vec::new(),
        u_decreasing: true,
        rho_decreasing: true,
    };
    for &eps in epsilons {
        let pert = perturbed_state(base, eps, model)?;
        let pt = evolve(&pert, tau, model, params)?;
        let mut du = 0.0f64;
        let mut l1 = 0.0f64;
        let h = (window.1 - window.0) / (probes - 1) as f64;
        for k in 0..probes {
            let x = window.0 + k as f64 * h;
            let ua = pl::interp_clamped(&base_t.grid, &base_t.u, x);
            let ub = pl::interp_clamped(&pt.grid, &pt.u, x);
            du = du.max((ua - ub).abs());
            let w = if k == 0 || k == probes - 1 { 0.5 } else { 1.0 };
            l1 += w * h * pl::interp_clamped(&pt.grid, &pt.rho, x).abs();
        }
        rep.u_sup_diff.push(du);
        rep.rho_l1.push(l1);
    }
    rep.u_decreasing = rep.u_sup_diff.windows(2).all(|w| w[1] < w[0]);
    rep.rho_decreasing = rep.rho_l1.windows(2).all(|w| w[1] < w[0]);
    Ok(rep)
}

/// Base state with constant transported densities `eps` and the Riemann
/// variables rescaled so both measures keep their interval masses.
pub fn perturbed_state(base: &EulerianState, eps: f64, model: &WaveSpeedModel) -> Result<EulerianState> {
    let g = &base.grid;
    let n = g.len();
    let r2: f64 = pl::trapz(g, &base.r.iter().map(|v| v * v).collect::<Vec<_>>());
    let s2: f64 = pl::trapz(g, &base.s.iter().map(|v| v * v).collect::<Vec<_>>());

    let mut alpha = 1.0f64;
    let mut beta = 1.0f64;
    let mut u = base.u.clone();
    for _ in 0..8 {
        // mass of the added density term under the current wave field
        let ce: Vec<f64> = u.iter().map(|&uu| model.eval(uu) * eps * eps).collect();
        let extra = pl::trapz(g, &ce);
        let a2 = (r2 - extra) / r2;
        let b2 = (s2 - extra) / s2;
        if a2 <= 0.0 || b2 <= 0.0 {
            return Err(Error::Hypothesis(format!(
                "perturbation eps={eps} carries more energy than the base fields"
            )));
        }
        let na = a2.sqrt();
        let nb = b2.sqrt();
        let moved = (na - alpha).abs() + (nb - beta).abs();
        alpha = na;
        beta = nb;
        // rebuild u from the scaled slope field
        let mut uu = vec![0.0; n];
        uu[0] = base.u[0];
        for i in 1..n {
            let h = g[i] - g[i - 1];
            let slope = |x: usize, val: f64| (alpha * base.r[x] - beta * base.s[x]) / (2.0 * model.eval(val));
            // midpoint rule with one corrector pass
            let k1 = slope(i - 1, uu[i - 1]);
            let mid = uu[i - 1] + 0.5 * h * k1;
            let k2 = 0.5 * (slope(i - 1, mid) + slope(i, mid));
            uu[i] = uu[i - 1] + h * k2;
        }
        u = uu;
        if moved < 1e-14 {
            break;
        }
    }

    let mut ut = vec![0.0; n];
    let mut ux = vec![0.0; n];
    for i in 0..n {
        ut[i] = 0.5 * (alpha * base.r[i] + beta * base.s[i]);
        ux[i] = (alpha * base.r[i] - beta * base.s[i]) / (2.0 * model.eval(u[i]));
    }
    EulerianState::from_primitives(
        g.clone(),
        u,
        ut,
        ux,
        vec![eps; n],
        vec![eps; n],
        vec![],
        vec![],
        model,
    )
}
