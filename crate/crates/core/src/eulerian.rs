//! Initial and reconstructed data on the line: wave field, Riemann variables,
//! transported densities and the pair of energy measures.

use crate::error::Error;
use crate::measures::{Atom, RadonMeasure};
use crate::pl;
use crate::report::CheckReport;
use crate::wavespeed::WaveSpeedModel;
use crate::Result;

/// Admissible data set: square-integrable samples with energy measures whose
/// absolutely continuous parts match the fields.
#[derive(Debug, Clone)]
pub struct EulerianState {
    pub grid: Vec<f64>,
    pub u: Vec<f64>,
    /// Forward Riemann variable u_t + c(u) u_x.
    pub r: Vec<f64>,
    /// Backward Riemann variable u_t - c(u) u_x.
    pub s: Vec<f64>,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
    pub mu: RadonMeasure,
    pub nu: RadonMeasure,
}

impl EulerianState {
    /// All-zero state on a grid.
    pub fn zero(grid: Vec<f64>) -> Self {
        let n = grid.len();
        EulerianState {
            grid,
            u: vec![0.0; n],
            r: vec![0.0; n],
            s: vec![0.0; n],
            rho: vec![0.0; n],
            sigma: vec![0.0; n],
            mu: RadonMeasure::zero(),
            nu: RadonMeasure::zero(),
        }
    }

    /// Build a state from `(u, u_t, u_x, rho, sigma)` samples plus extra
    /// energy atoms. The supplied `u_x` must match centered differences of
    /// `u`; the measures are assembled from the quarter energy densities.
    #[allow(clippy::too_many_arguments)]
    pub fn from_primitives(
        grid: Vec<f64>,
        u: Vec<f64>,
        ut: Vec<f64>,
        ux: Vec<f64>,
        rho: Vec<f64>,
        sigma: Vec<f64>,
        atoms_mu: Vec<Atom>,
        atoms_nu: Vec<Atom>,
        model: &WaveSpeedModel,
    ) -> Result<Self> {
        let n = grid.len();
        if n < 2 {
            return Err(Error::Validation("state grid needs at least two points".into()));
        }
        for (name, f) in [("u", &u), ("ut", &ut), ("ux", &ux), ("rho", &rho), ("sigma", &sigma)] {
            if f.len() != n {
                return Err(Error::Validation(format!("{name} samples must match the grid length")));
            }
        }
        if !pl::strictly_increasing(&grid) {
            return Err(Error::Validation("state grid must be strictly increasing".into()));
        }

        check_ux_consistency(&grid, &u, &ux)?;

        let mut r = vec![0.0; n];
        let mut s = vec![0.0; n];
        let mut dmu = vec![0.0; n];
        let mut dnu = vec![0.0; n];
        for i in 0..n {
            let c = model.eval(u[i]);
            r[i] = ut[i] + c * ux[i];
            s[i] = ut[i] - c * ux[i];
            dmu[i] = 0.25 * (r[i] * r[i] + c * rho[i] * rho[i]);
            dnu[i] = 0.25 * (s[i] * s[i] + c * sigma[i] * sigma[i]);
        }
        let mu = RadonMeasure::from_density(grid.clone(), dmu, atoms_mu, 0.0)?;
        let nu = RadonMeasure::from_density(grid.clone(), dnu, atoms_nu, 0.0)?;
        Ok(EulerianState {
            grid,
            u,
            r,
            s,
            rho,
            sigma,
            mu,
            nu,
        })
    }

    /// Total energy: combined mass of both measures.
    pub fn total_energy(&self) -> f64 {
        self.mu.total() + self.nu.total()
    }

    /// Report every membership invariant with its worst residual.
    pub fn validate(&self, model: &WaveSpeedModel) -> CheckReport {
        self.validate_with(model, 1e-10)
    }

    /// As `validate`, with an explicit relative tolerance for the density
    /// match (reconstructed states carry cell-averaged densities).
    pub fn validate_with(&self, model: &WaveSpeedModel, density_tol: f64) -> CheckReport {
        let mut rep = CheckReport::default();
        let n = self.grid.len();

        let finite = self
            .u
            .iter()
            .chain(&self.r)
            .chain(&self.s)
            .chain(&self.rho)
            .chain(&self.sigma)
            .all(|v| v.is_finite());
        rep.push("fields-finite", finite, 0.0, 0.0, self.grid.first().copied().unwrap_or(0.0));

        // u_x = (R - S) / (2 c(u)) against centered differences of u
        let mut worst = 0.0;
        let mut wloc = 0.0;
        let mut scale = 1e-12f64;
        let mut h2 = 0.0f64;
        for i in 1..n.saturating_sub(1) {
            let h = 0.5 * (self.grid[i + 1] - self.grid[i - 1]);
            let du = (self.u[i + 1] - self.u[i - 1]) / (2.0 * h);
            let ux = (self.r[i] - self.s[i]) / (2.0 * model.eval(self.u[i]));
            let res = (du - ux).abs();
            scale = scale.max(ux.abs());
            h2 = h2.max(h * h);
            if res > worst {
                worst = res;
                wloc = self.grid[i];
            }
        }
        let tol = 10.0 * h2;
        rep.push(
            "compatibility-ux",
            worst <= tol * (1.0 + scale),
            worst,
            worst / (1.0 + scale),
            wloc,
        );

        for (name, m, f, w) in [
            ("mu-density", &self.mu, &self.r, &self.rho),
            ("nu-density", &self.nu, &self.s, &self.sigma),
        ] {
            let (res, rel, loc) = density_residual(&self.grid, &self.u, f, w, m, model);
            rep.push(name, rel <= density_tol, res, rel, loc);
        }

        let atoms_ok = self
            .mu
            .atoms()
            .iter()
            .chain(self.nu.atoms())
            .all(|a| a.mass > 0.0);
        rep.push("atoms-positive", atoms_ok, 0.0, 0.0, 0.0);

        let tot = self.total_energy();
        rep.push("measures-finite", tot.is_finite(), 0.0, 0.0, 0.0);
        rep
    }

    /// Spatial reflection x -> -x (forward and backward families swap).
    pub fn mirrored(&self) -> Result<EulerianState> {
        let rev = |v: &[f64]| -> Vec<f64> { v.iter().rev().copied().collect() };
        Ok(EulerianState {
            grid: self.grid.iter().rev().map(|x| -x).collect(),
            u: rev(&self.u),
            r: rev(&self.s),
            s: rev(&self.r),
            rho: rev(&self.sigma),
            sigma: rev(&self.rho),
            mu: self.nu.mirrored()?,
            nu: self.mu.mirrored()?,
        })
    }
}

fn check_ux_consistency(grid: &[f64], u: &[f64], ux: &[f64]) -> Result<()> {
    let n = grid.len();
    let mut worst = 0.0f64;
    let mut wloc = 0.0;
    let mut scale = 1e-12f64;
    let mut h2 = 0.0f64;
    for i in 1..n - 1 {
        let h = 0.5 * (grid[i + 1] - grid[i - 1]);
        let du = (u[i + 1] - u[i - 1]) / (2.0 * h);
        let res = (du - ux[i]).abs();
        scale = scale.max(ux[i].abs());
        h2 = h2.max(h * h);
        if res > worst {
            worst = res;
            wloc = grid[i];
        }
    }
    if worst > 10.0 * h2 * (1.0 + scale) {
        return Err(Error::Compatibility(format!(
            "supplied u_x deviates from centered differences of u by {worst:.3e} at x={wloc} \
             (allowed {:.3e})",
            10.0 * h2 * (1.0 + scale)
        )));
    }
    Ok(())
}

fn density_residual(
    grid: &[f64],
    u: &[f64],
    f: &[f64],
    w: &[f64],
    m: &RadonMeasure,
    model: &WaveSpeedModel,
) -> (f64, f64, f64) {
    if m.grid().is_empty() {
        let expect: f64 = (0..grid.len())
            .map(|i| 0.25 * (f[i] * f[i] + model.eval(u[i]) * w[i] * w[i]))
            .fold(0.0, f64::max);
        return (expect, expect, grid[0]);
    }
    let mut worst = 0.0f64;
    let mut rel = 0.0f64;
    let mut loc = grid[0];
    let mut scale = 1e-12f64;
    for i in 0..grid.len() {
        let c = model.eval(u[i]);
        let expect = 0.25 * (f[i] * f[i] + c * w[i] * w[i]);
        let got = pl::interp_clamped(m.grid(), m.density(), grid[i]);
        scale = scale.max(expect.abs());
        let res = (got - expect).abs();
        if res > worst {
            worst = res;
            loc = grid[i];
        }
    }
    rel = rel.max(worst / (1.0 + scale));
    (worst, rel, loc)
}
