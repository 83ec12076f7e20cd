//! Time evolution: shift the solved region in time, extract the constant-time
//! curve, map it back to family data and on to the line, and compose the
//! whole round trip into the evolution operator.

use crate::error::Error;
use crate::eulerian::EulerianState;
use crate::goursat::{tile_solve_curve, GridSolution, SolverParams};
use crate::lagrangian::{map_c, map_l, CurveData, PsiBranch, PsiPair};
use crate::measures::{push_forward_cum, FLAT_TOL};
use crate::pl;
use crate::wavespeed::WaveSpeedModel;
use crate::Result;
use serde::Serialize;

/// Shift the solution in time; only the time offset moves, the arrays are
/// shared unchanged so a shift and its inverse are exact.
pub fn time_shift(mut sol: GridSolution, t: f64) -> GridSolution {
    sol.t_offset += t;
    sol
}

/// Extract the curve where the (shifted) time vanishes, with the solution
/// data along it. The zero set is located per grid column and row on the
/// piecewise-linear interpolant; flat zero regions resolve to their left and
/// top sides.
pub fn extract_time_curve(sol: &GridSolution) -> Result<CurveData> {
    let nx = sol.xg.len();
    let ny = sol.yg.len();
    let mut verts: Vec<(f64, f64, bool, usize)> = Vec::new(); // (X, Y, is_column, index)

    // per column: topmost zero in Y (time falls with Y)
    let mut col_cross = vec![false; nx];
    for i in 0..nx {
        let t0 = sol.time(i, 0);
        if t0 < 0.0 {
            continue;
        }
        for j in 1..ny {
            let t1 = sol.time(i, j);
            if t1 < 0.0 {
                let ta = sol.time(i, j - 1);
                let w = if ta - t1 > 0.0 { ta / (ta - t1) } else { 0.0 };
                let y = sol.yg[j - 1] + w * (sol.yg[j] - sol.yg[j - 1]);
                verts.push((sol.xg[i], y, true, i));
                col_cross[i] = true;
                break;
            }
        }
    }
    // per row: leftmost zero in X (time grows with X)
    let mut row_cross = vec![false; ny];
    for j in 0..ny {
        let t0 = sol.time(0, j);
        if t0 >= 0.0 {
            continue;
        }
        for i in 1..nx {
            let t1 = sol.time(i, j);
            if t1 >= 0.0 {
                let ta = sol.time(i - 1, j);
                let w = if t1 - ta > 0.0 { -ta / (t1 - ta) } else { 1.0 };
                let x = sol.xg[i - 1] + w * (sol.xg[i] - sol.xg[i - 1]);
                verts.push((x, sol.yg[j], false, j));
                row_cross[j] = true;
                break;
            }
        }
    }
    if verts.len() < 2 {
        return Err(Error::Coverage("time level set not found in the solved region".into()));
    }
    // interior gaps mean the level set leaves and re-enters: not covered
    for flags in [&col_cross[..], &row_cross[..]] {
        let first = flags.iter().position(|&b| b);
        let last = flags.iter().rposition(|&b| b);
        if let (Some(a), Some(b)) = (first, last) {
            if flags[a..=b].iter().any(|&c| !c) {
                return Err(Error::Coverage("time level set exits the solved region mid-range".into()));
            }
        }
    }

    verts.sort_by(|a, b| {
        (a.0 + a.1)
            .partial_cmp(&(b.0 + b.1))
            .unwrap()
            .then(a.0.partial_cmp(&b.0).unwrap())
    });
    // monotone clean-up and parameter assignment
    let stol = 1e-13 * (1.0 + verts.last().unwrap().0.abs() + verts.last().unwrap().1.abs());
    let mut cx: Vec<f64> = Vec::with_capacity(verts.len());
    let mut cy: Vec<f64> = Vec::with_capacity(verts.len());
    let mut srcs: Vec<(bool, usize)> = Vec::with_capacity(verts.len());
    for &(x, y, isc, idx) in &verts {
        if let (Some(&lx), Some(&ly)) = (cx.last(), cy.last()) {
            let x = x.max(lx);
            let y = y.max(ly);
            if x - lx <= stol && y - ly <= stol {
                continue;
            }
            cx.push(x);
            cy.push(y);
        } else {
            cx.push(x);
            cy.push(y);
        }
        srcs.push((isc, idx));
    }
    let n = cx.len();
    if n < 2 {
        return Err(Error::Coverage("degenerate time level set".into()));
    }
    let mut s: Vec<f64> = (0..n).map(|k| 0.5 * (cx[k] + cy[k])).collect();
    for k in 1..n {
        if s[k] <= s[k - 1] {
            s[k] = s[k - 1] + 1e-15 * (1.0 + s[k - 1].abs());
        }
    }

    // curve values: interpolate along the exact grid line of each vertex
    let mut z = [
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    ];
    for k in 0..n {
        let (isc, idx) = srcs[k];
        for m in 0..5 {
            z[m][k] = if isc {
                col_interp(sol, &sol.z[m], idx, cy[k])
            } else {
                row_interp(sol, &sol.z[m], idx, cx[k])
            };
        }
        z[0][k] -= sol.t_offset;
    }

    // derivative data on the grid axes restricted to the curve span
    let ix0 = sol.xg.partition_point(|&v| v < cx[0] - stol);
    let ix1 = sol.xg.partition_point(|&v| v <= cx[n - 1] + stol);
    let iy0 = sol.yg.partition_point(|&v| v < cy[0] - stol);
    let iy1 = sol.yg.partition_point(|&v| v <= cy[n - 1] + stol);
    let xgrid: Vec<f64> = sol.xg[ix0..ix1].to_vec();
    let ygrid: Vec<f64> = sol.yg[iy0..iy1].to_vec();
    if xgrid.len() < 2 || ygrid.len() < 2 {
        return Err(Error::Coverage("time level set spans fewer than two grid lines".into()));
    }

    // temporary curve for the top/left lookups
    let tmp = CurveData {
        s: s.clone(),
        cx: cx.clone(),
        cy: cy.clone(),
        z: z.clone(),
        xgrid: vec![0.0, 1.0],
        v: Default::default(),
        p: vec![0.0, 0.0],
        ygrid: vec![0.0, 1.0],
        w: Default::default(),
        q: vec![0.0, 0.0],
    };
    let mut v = [
        vec![0.0; xgrid.len()],
        vec![0.0; xgrid.len()],
        vec![0.0; xgrid.len()],
        vec![0.0; xgrid.len()],
        vec![0.0; xgrid.len()],
    ];
    for (ii, &x) in xgrid.iter().enumerate() {
        let y = {
            let stop = s_of_x_top(&tmp, x);
            (2.0 * stop - x).clamp(sol.yg[0], sol.yg[ny - 1])
        };
        for m in 0..5 {
            v[m][ii] = col_interp(sol, &sol.zx[m], ix0 + ii, y);
        }
    }
    let mut w = [
        vec![0.0; ygrid.len()],
        vec![0.0; ygrid.len()],
        vec![0.0; ygrid.len()],
        vec![0.0; ygrid.len()],
        vec![0.0; ygrid.len()],
    ];
    for (jj, &y) in ygrid.iter().enumerate() {
        let x = tmp.x_of_s(tmp.s_of_y(y)).clamp(sol.xg[0], sol.xg[nx - 1]);
        for m in 0..5 {
            w[m][jj] = row_interp(sol, &sol.zy[m], iy0 + jj, x);
        }
    }
    let p = sol.p[ix0..ix1].to_vec();
    let q = sol.q[iy0..iy1].to_vec();

    Ok(CurveData {
        s,
        cx,
        cy,
        z,
        xgrid,
        v,
        p,
        ygrid,
        w,
        q,
    })
}

fn col_interp(sol: &GridSolution, arr: &crate::goursat::Grid2, i: usize, y: f64) -> f64 {
    let j = pl::locate(&sol.yg, y);
    let w = ((y - sol.yg[j]) / (sol.yg[j + 1] - sol.yg[j])).clamp(0.0, 1.0);
    arr.at(i, j) * (1.0 - w) + arr.at(i, j + 1) * w
}

fn row_interp(sol: &GridSolution, arr: &crate::goursat::Grid2, j: usize, x: f64) -> f64 {
    let i = pl::locate(&sol.xg, x);
    let w = ((x - sol.xg[i]) / (sol.xg[i + 1] - sol.xg[i])).clamp(0.0, 1.0);
    arr.at(i, j) * (1.0 - w) + arr.at(i + 1, j) * w
}

fn s_of_x_top(curve: &CurveData, xq: f64) -> f64 {
    let n = curve.s.len();
    if xq < curve.cx[0] {
        return curve.s[0] + (xq - curve.cx[0]);
    }
    if xq >= curve.cx[n - 1] {
        return curve.s[n - 1] + (xq - curve.cx[n - 1]);
    }
    let p = curve.cx.partition_point(|&v| v <= xq);
    let (x0, x1) = (curve.cx[p - 1], curve.cx[p]);
    let (s0, s1) = (curve.s[p - 1], curve.s[p]);
    if x0 == xq || x1 == x0 {
        s0
    } else {
        s0 + (xq - x0) / (x1 - x0) * (s1 - s0)
    }
}

/// Map curve data back to the two characteristic families: positions and
/// values are read off the curve, energies accumulate the directional slopes
/// along it. Each segment's energy increment is split between the families in
/// proportion to their directional contributions and pinned to the exact
/// increment of the transported energy on the curve, so the reconstruction is
/// conservative at the discrete level.
pub fn map_d(curve: &CurveData, model: &WaveSpeedModel) -> Result<PsiPair> {
    let n = curve.s.len();
    let mut one = BranchAccum::new(curve, true);
    let mut two = BranchAccum::new(curve, false);
    one.push_sample(0, 0.0, 0.0);
    two.push_sample(0, 0.0, 0.0);
    for seg in 1..n {
        let dx = curve.cx[seg] - curve.cx[seg - 1];
        let dy = curve.cy[seg] - curve.cy[seg - 1];
        // raw directional increments
        let mut dj1 = 0.5 * (one.deriv_at(3, curve.cx[seg - 1]) + one.deriv_at(3, curve.cx[seg])) * dx;
        let mut dj2 = 0.5 * (two.deriv_at(3, curve.cy[seg - 1]) + two.deriv_at(3, curve.cy[seg])) * dy;
        let mut dk1 = 0.5 * (one.deriv_at(4, curve.cx[seg - 1]) + one.deriv_at(4, curve.cx[seg])) * dx;
        let mut dk2 = 0.5 * (two.deriv_at(4, curve.cy[seg - 1]) + two.deriv_at(4, curve.cy[seg])) * dy;
        // pin the sum to the exact curve increments
        let dz4 = (curve.z[3][seg] - curve.z[3][seg - 1]).max(0.0);
        let tot = dj1 + dj2;
        if tot > 0.0 {
            let scale = dz4 / tot;
            dj1 *= scale;
            dj2 *= scale;
        } else {
            let share = if dx + dy > 0.0 { dx / (dx + dy) } else { 0.5 };
            dj1 = dz4 * share;
            dj2 = dz4 * (1.0 - share);
        }
        let dz5 = curve.z[4][seg] - curve.z[4][seg - 1];
        let defect = dz5 - (dk1 + dk2);
        let wk = dk1.abs() + dk2.abs();
        if wk > 0.0 {
            dk1 += defect * dk1.abs() / wk;
            dk2 += defect * dk2.abs() / wk;
        } else {
            dk1 += 0.5 * defect;
            dk2 += 0.5 * defect;
        }
        one.advance(seg, dj1, dk1);
        two.advance(seg, dj2, dk2);
    }
    let one = one.finish()?;
    let two = two.finish()?;
    let _ = model;
    Ok(PsiPair { one, two })
}

struct BranchAccum<'a> {
    curve: &'a CurveData,
    forward: bool,
    tol: f64,
    jacc: f64,
    kacc: f64,
    b: PsiBranch,
}

impl<'a> BranchAccum<'a> {
    fn new(curve: &'a CurveData, forward: bool) -> Self {
        let params = if forward { &curve.cx } else { &curve.cy };
        let tol = 1e-13 * (1.0 + params[params.len() - 1].abs());
        BranchAccum {
            curve,
            forward,
            tol,
            jacc: 0.0,
            kacc: 0.0,
            b: PsiBranch {
                grid: Vec::new(),
                x: Vec::new(),
                u: Vec::new(),
                j: Vec::new(),
                k: Vec::new(),
                v: Vec::new(),
                h: Vec::new(),
                dx: Vec::new(),
                dj: Vec::new(),
                dk: Vec::new(),
            },
        }
    }

    fn deriv_at(&self, m: usize, p: f64) -> f64 {
        let (aux, deriv) = if self.forward {
            (&self.curve.xgrid, &self.curve.v)
        } else {
            (&self.curve.ygrid, &self.curve.w)
        };
        pl::interp_clamped(aux, &deriv[m], p)
    }

    fn push_sample(&mut self, idx: usize, jv: f64, kv: f64) {
        let p = if self.forward {
            self.curve.cx[idx]
        } else {
            self.curve.cy[idx]
        };
        let (aux, deriv, src) = if self.forward {
            (&self.curve.xgrid, &self.curve.v, &self.curve.p)
        } else {
            (&self.curve.ygrid, &self.curve.w, &self.curve.q)
        };
        self.b.grid.push(p);
        self.b.x.push(self.curve.z[1][idx]);
        self.b.u.push(self.curve.z[2][idx]);
        self.b.j.push(jv);
        self.b.k.push(kv);
        self.b.v.push(pl::interp_clamped(aux, &deriv[2], p));
        self.b.h.push(pl::interp_clamped(aux, src, p));
        self.b.dx.push(2.0 * pl::interp_clamped(aux, &deriv[1], p));
        self.b.dj.push(pl::interp_clamped(aux, &deriv[3], p));
        self.b.dk.push(pl::interp_clamped(aux, &deriv[4], p));
    }

    fn advance(&mut self, seg: usize, dj: f64, dk: f64) {
        self.jacc += dj;
        self.kacc += dk;
        let p = if self.forward {
            self.curve.cx[seg]
        } else {
            self.curve.cy[seg]
        };
        if p - *self.b.grid.last().unwrap() > self.tol {
            self.push_sample(seg, self.jacc, self.kacc);
        }
    }

    fn finish(self) -> Result<PsiBranch> {
        if self.b.grid.len() < 2 {
            return Err(Error::Coverage("curve too short to rebuild a family".into()));
        }
        Ok(self.b)
    }
}

/// Map family data back to the line. Values are read off the increasing
/// stretches; flat stretches deposit their transported energy as atoms.
pub fn map_m(psi: &PsiPair, model: &WaveSpeedModel) -> Result<EulerianState> {
    let b1 = &psi.one;
    let b2 = &psi.two;
    let scale = 1.0 + b1.x.iter().chain(&b2.x).fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = 1e-13 * scale;

    // output grid: union of both image sets
    let mut grid: Vec<f64> = b1.x.iter().chain(&b2.x).copied().collect();
    grid = pl::dedup_sorted(grid, tol);
    if grid.len() < 2 {
        return Err(Error::Validation("reconstruction grid degenerates".into()));
    }

    // fields on each family's own increasing stretches
    let fields1 = branch_fields(b1, model, 1.0);
    let fields2 = branch_fields(b2, model, -1.0);

    let n = grid.len();
    let mut u = vec![0.0; n];
    let mut r = vec![0.0; n];
    let mut s = vec![0.0; n];
    let mut rho = vec![0.0; n];
    let mut sigma = vec![0.0; n];
    for (i, &xq) in grid.iter().enumerate() {
        u[i] = pl::interp_clamped(&fields1.x, &fields1.u, xq);
        r[i] = pl::interp_clamped(&fields1.x, &fields1.f, xq);
        rho[i] = pl::interp_clamped(&fields1.x, &fields1.w, xq);
        s[i] = pl::interp_clamped(&fields2.x, &fields2.f, xq);
        sigma[i] = pl::interp_clamped(&fields2.x, &fields2.w, xq);
    }

    let mu = push_forward_cum(&b1.grid, &b1.x, &b1.j, FLAT_TOL)?;
    let nu = push_forward_cum(&b2.grid, &b2.x, &b2.j, FLAT_TOL)?;

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

struct BranchFields {
    x: Vec<f64>,
    u: Vec<f64>,
    f: Vec<f64>,
    w: Vec<f64>,
}

/// Pointwise field reconstruction on the increasing stretches of one family.
fn branch_fields(b: &PsiBranch, model: &WaveSpeedModel, sign: f64) -> BranchFields {
    let mut out = BranchFields {
        x: Vec::new(),
        u: Vec::new(),
        f: Vec::new(),
        w: Vec::new(),
    };
    let eps = 1e-12;
    for i in 0..b.grid.len() {
        if out.x.last().map_or(false, |&l| b.x[i] <= l) {
            continue;
        }
        out.x.push(b.x[i]);
        out.u.push(b.u[i]);
        if b.dx[i] > eps {
            let c = model.eval(b.u[i]);
            out.f.push(sign * 2.0 * c * b.v[i] / b.dx[i]);
            out.w.push(2.0 * b.h[i] / b.dx[i]);
        } else {
            out.f.push(0.0);
            out.w.push(0.0);
        }
    }
    if out.x.len() < 2 {
        out.x = vec![b.x[0], b.x[0] + 1.0];
        out.u = vec![b.u[0], b.u[0]];
        out.f = vec![0.0, 0.0];
        out.w = vec![0.0, 0.0];
    }
    out
}

/// Controls for the composed evolution operator.
#[derive(Debug, Clone, Copy)]
pub struct EvolveParams {
    pub solver: SolverParams,
    /// Extra padding of the family parameter range beyond the light cone.
    pub margin: f64,
    /// Relative energy loss at the extracted ends that still counts covered.
    pub coverage_tol: f64,
}

impl Default for EvolveParams {
    fn default() -> Self {
        EvolveParams {
            solver: SolverParams::default(),
            margin: 1.0,
            coverage_tol: 1e-6,
        }
    }
}

/// Full evolution artifacts, kept for diagnostics and file emission.
pub struct Evolved {
    pub state: EulerianState,
    pub solution: GridSolution,
    pub slice_curve: CurveData,
    pub psi: PsiPair,
}

/// Evolve the state by time `t` (either sign) through the characteristic
/// pipeline. The solved rectangle is sized from the data support extended by
/// the light cone plus the total energy.
pub fn evolve_full(
    state: &EulerianState,
    t: f64,
    model: &WaveSpeedModel,
    params: &EvolveParams,
) -> Result<Evolved> {
    let mut psi = map_l(state, model)?;
    let energy = state.total_energy();
    let pad = model.kappa * t.abs() + 2.0 * energy + params.margin;
    let lo = psi.one.grid[0].min(psi.two.grid[0]) - pad;
    let hi = psi.one.grid[psi.one.len() - 1].max(psi.two.grid[psi.two.len() - 1]) + pad;
    psi.extend_to(lo, hi);
    let curve = map_c(&psi, model)?;
    let sol = tile_solve_curve(&curve, model, &params.solver)?;
    let sol = time_shift(sol, t);
    let slice_curve = extract_time_curve(&sol)?;

    // the slice must capture the transported energy
    let j_start = slice_curve.z[3][0];
    let j_end = slice_curve.z[3][slice_curve.s.len() - 1];
    let tolerance = params.coverage_tol * (1.0 + energy);
    if j_start.abs() > tolerance || (energy - j_end) > tolerance.max(1e-4 * (1.0 + energy)) {
        return Err(Error::Coverage(format!(
            "extracted slice spans s in [{:.3}, {:.3}] but carries energy [{:.3e}, {:.3e}] of {:.3e}",
            slice_curve.s_lo(),
            slice_curve.s_hi(),
            j_start,
            j_end,
            energy
        )));
    }

    let psi_t = map_d(&slice_curve, model)?;
    let state_t = map_m(&psi_t, model)?;
    Ok(Evolved {
        state: state_t,
        solution: sol,
        slice_curve,
        psi: psi_t,
    })
}

pub fn evolve(
    state: &EulerianState,
    t: f64,
    model: &WaveSpeedModel,
    params: &EvolveParams,
) -> Result<EulerianState> {
    Ok(evolve_full(state, t, model, params)?.state)
}

/// Two-path comparison of the evolution operator.
#[derive(Debug, Clone, Serialize)]
pub struct SemigroupReport {
    pub t1: f64,
    pub t2: f64,
    /// sup |u_onestep - u_twostep| at the probe points.
    pub u_sup_diff: f64,
    /// mean absolute difference of the measure cumulatives at the probes.
    pub mu_cum_diff: f64,
    pub nu_cum_diff: f64,
    /// time reversal: evolve there and back, compare with the input.
    pub reversal_u_sup_diff: f64,
}

pub fn check_semigroup(
    state: &EulerianState,
    t1: f64,
    t2: f64,
    model: &WaveSpeedModel,
    params: &EvolveParams,
) -> Result<SemigroupReport> {
    let once = evolve(state, t1 + t2, model, params)?;
    let mid = evolve(state, t1, model, params)?;
    let twice = evolve(&mid, t2, model, params)?;
    let (u_sup_diff, mu_cum_diff, nu_cum_diff) = state_distance(&once, &twice, 200);

    let back = evolve(&mid, -t1, model, params)?;
    let (reversal_u_sup_diff, _, _) = state_distance(state, &back, 200);
    Ok(SemigroupReport {
        t1,
        t2,
        u_sup_diff,
        mu_cum_diff,
        nu_cum_diff,
        reversal_u_sup_diff,
    })
}

/// Probe two states on a shared uniform grid.
pub fn state_distance(a: &EulerianState, b: &EulerianState, probes: usize) -> (f64, f64, f64) {
    let lo = a.grid[0].max(b.grid[0]);
    let hi = a.grid[a.grid.len() - 1].min(b.grid[b.grid.len() - 1]);
    let mut du = 0.0f64;
    let mut dmu = 0.0f64;
    let mut dnu = 0.0f64;
    for k in 0..probes {
        let x = lo + (hi - lo) * k as f64 / (probes - 1) as f64;
        let ua = pl::interp_clamped(&a.grid, &a.u, x);
        let ub = pl::interp_clamped(&b.grid, &b.u, x);
        du = du.max((ua - ub).abs());
        dmu += (a.mu.cumulative(x) - b.mu.cumulative(x)).abs();
        dnu += (a.nu.cumulative(x) - b.nu.cumulative(x)).abs();
    }
    (du, dmu / probes as f64, dnu / probes as f64)
}

/// Weak-form residuals of the three balance laws against one compactly
/// supported test bump, integrated over the characteristic grid.
#[derive(Debug, Clone, Serialize)]
pub struct WeakFormResiduals {
    pub wave: f64,
    pub forward_density: f64,
    pub backward_density: f64,
}

/// Smooth compactly supported bump on [-1, 1] with two vanishing derivatives
/// at the ends.
fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - s * s;
    (q * q * q, -6.0 * s * q * q)
}

pub fn weak_form_residuals(
    sol: &GridSolution,
    model: &WaveSpeedModel,
    t0: f64,
    x0: f64,
    radius: f64,
) -> WeakFormResiduals {
    let nx = sol.xg.len();
    let ny = sol.yg.len();
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut res_p = 0.0;
    let mut res_q = 0.0;
    for i in 0..nx {
        let wx = 0.5
            * ((if i + 1 < nx { sol.xg[i + 1] - sol.xg[i] } else { 0.0 })
                + (if i > 0 { sol.xg[i] - sol.xg[i - 1] } else { 0.0 }));
        for j in 0..ny {
            let wy = 0.5
                * ((if j + 1 < ny { sol.yg[j + 1] - sol.yg[j] } else { 0.0 })
                    + (if j > 0 { sol.yg[j] - sol.yg[j - 1] } else { 0.0 }));
            let wgt = wx * wy;
            let t = sol.time(i, j);
            let x = sol.z[1].at(i, j);
            let (bt, dbt) = bump((t - t0) / radius);
            let (bx, dbx) = bump((x - x0) / radius);
            if bt == 0.0 && dbt == 0.0 || bx == 0.0 && dbx == 0.0 {
                continue;
            }
            let phi = bt * bx;
            let phi_t = dbt / radius * bx;
            let phi_x = bt * dbx / radius;
            let u = sol.z[2].at(i, j);
            let c = model.eval(u);
            let cp = model.deriv(u);
            let tx = sol.zx[0].at(i, j);
            let xx = sol.zx[1].at(i, j);
            let uxg = sol.zx[2].at(i, j);
            let jx = sol.zx[3].at(i, j);
            let ty = sol.zy[0].at(i, j);
            let xy = sol.zy[1].at(i, j);
            let uyg = sol.zy[2].at(i, j);
            let jy = sol.zy[3].at(i, j);
            let phi_cap_y = phi_t * ty + phi_x * xy;
            let phi_cap_x = phi_t * tx + phi_x * xx;
            lhs += wgt * (-2.0 * c * uxg * phi_cap_y - 2.0 * c * uyg * phi_cap_x - 2.0 * cp * uxg * uyg * phi);
            rhs += wgt * (2.0 * cp / (c * c)) * (xy * jx + xx * jy) * phi;
            res_p += wgt * (-2.0) * sol.p[i] * phi_cap_y;
            res_q += wgt * 2.0 * sol.q[j] * phi_cap_x;
        }
    }
    WeakFormResiduals {
        wave: (lhs - rhs).abs(),
        forward_density: res_p.abs(),
        backward_density: res_q.abs(),
    }
}
