//! Forward data maps into characteristic coordinates.
//!
//! `map_l` turns Eulerian data into a pair of one-parameter families (one per
//! characteristic direction) by inverting `x -> x + cumulative(measure, x)`;
//! atoms become flat stretches of the inverse. `map_c` merges the two
//! families into the initial curve and its data. Flat stretches in one family
//! give horizontal or vertical curve segments; simultaneous flats give a box,
//! traversed along its left then top side.

use crate::error::Error;
use crate::eulerian::EulerianState;
use crate::measures::RadonMeasure;
use crate::pl;
use crate::report::CheckReport;
use crate::wavespeed::WaveSpeedModel;
use crate::Result;

/// Data of one characteristic family, sampled on its own parameter grid.
/// Derivative samples are stored pointwise so the algebraic relations between
/// the components hold exactly at the samples.
#[derive(Debug, Clone)]
pub struct PsiBranch {
    /// Parameter grid (X for the forward family, Y for the backward one).
    pub grid: Vec<f64>,
    /// Physical position; nondecreasing, slope one outside the grid.
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    /// Transported energy; nondecreasing from zero.
    pub j: Vec<f64>,
    pub k: Vec<f64>,
    /// Directional derivative of u along the family.
    pub v: Vec<f64>,
    /// Half transported density weight.
    pub h: Vec<f64>,
    pub dx: Vec<f64>,
    pub dj: Vec<f64>,
    pub dk: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct PsiPair {
    pub one: PsiBranch,
    pub two: PsiBranch,
}

impl PsiBranch {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Position with slope-one extension outside the grid.
    pub fn x_at(&self, p: f64) -> f64 {
        let n = self.grid.len();
        if p <= self.grid[0] {
            self.x[0] + (p - self.grid[0])
        } else if p >= self.grid[n - 1] {
            self.x[n - 1] + (p - self.grid[n - 1])
        } else {
            pl::interp(&self.grid, &self.x, p)
        }
    }

    pub fn u_at(&self, p: f64) -> f64 {
        pl::interp_clamped(&self.grid, &self.u, p)
    }

    pub fn j_at(&self, p: f64) -> f64 {
        pl::interp_clamped(&self.grid, &self.j, p)
    }

    pub fn k_at(&self, p: f64) -> f64 {
        pl::interp_clamped(&self.grid, &self.k, p)
    }

    /// Extend the sampled range: position continues with slope one, energy
    /// components stay flat, derivatives of u and the density weight vanish.
    pub fn extend_to(&mut self, lo: f64, hi: f64) {
        let pad = |b: &mut PsiBranch, p: f64, front: bool| {
            let (xv, uv, jv, kv) = if front {
                (b.x[0] + (p - b.grid[0]), b.u[0], b.j[0], b.k[0])
            } else {
                let n = b.grid.len() - 1;
                (b.x[n] + (p - b.grid[n]), b.u[n], b.j[n], b.k[n])
            };
            let ins = if front { 0 } else { b.grid.len() };
            b.grid.insert(ins, p);
            b.x.insert(ins, xv);
            b.u.insert(ins, uv);
            b.j.insert(ins, jv);
            b.k.insert(ins, kv);
            b.v.insert(ins, 0.0);
            b.h.insert(ins, 0.0);
            b.dx.insert(ins, 1.0);
            b.dj.insert(ins, 0.0);
            b.dk.insert(ins, 0.0);
        };
        if lo < self.grid[0] {
            pad(self, lo, true);
        }
        if hi > self.grid[self.grid.len() - 1] {
            pad(self, hi, false);
        }
    }
}

impl PsiPair {
    pub fn extend_to(&mut self, lo: f64, hi: f64) {
        self.one.extend_to(lo, hi);
        self.two.extend_to(lo, hi);
    }

    pub fn total_energy(&self) -> f64 {
        self.one.j.last().copied().unwrap_or(0.0) + self.two.j.last().copied().unwrap_or(0.0)
    }
}

/// Curve in the characteristic plane at a fixed time, with the solution data
/// living on it. `cx + cy = 2 s` holds exactly.
#[derive(Debug, Clone)]
pub struct CurveData {
    pub s: Vec<f64>,
    pub cx: Vec<f64>,
    pub cy: Vec<f64>,
    /// (t, x, u, j, k) along the curve.
    pub z: [Vec<f64>; 5],
    pub xgrid: Vec<f64>,
    /// X-direction derivative data (t_X, x_X, u_X, j_X, k_X) by X.
    pub v: [Vec<f64>; 5],
    pub p: Vec<f64>,
    pub ygrid: Vec<f64>,
    /// Y-direction derivative data by Y.
    pub w: [Vec<f64>; 5],
    pub q: Vec<f64>,
}

impl CurveData {
    pub fn s_lo(&self) -> f64 {
        self.s[0]
    }

    pub fn s_hi(&self) -> f64 {
        self.s[self.s.len() - 1]
    }

    /// Curve X-coordinate, diagonal extension outside the parameter range.
    pub fn x_of_s(&self, s: f64) -> f64 {
        let n = self.s.len();
        if s <= self.s[0] {
            self.cx[0] + (s - self.s[0])
        } else if s >= self.s[n - 1] {
            self.cx[n - 1] + (s - self.s[n - 1])
        } else {
            pl::interp(&self.s, &self.cx, s)
        }
    }

    pub fn y_of_s(&self, s: f64) -> f64 {
        2.0 * s - self.x_of_s(s)
    }

    /// Leftmost parameter with `cx(s) = x`.
    pub fn s_of_x(&self, xq: f64) -> f64 {
        let n = self.s.len();
        if xq <= self.cx[0] {
            return self.s[0] + (xq - self.cx[0]);
        }
        if xq > self.cx[n - 1] {
            return self.s[n - 1] + (xq - self.cx[n - 1]);
        }
        let p = self.cx.partition_point(|&v| v < xq);
        let (x0, x1) = (self.cx[p - 1], self.cx[p]);
        let (s0, s1) = (self.s[p - 1], self.s[p]);
        if x1 == x0 {
            s1
        } else {
            s0 + (xq - x0) / (x1 - x0) * (s1 - s0)
        }
    }

    /// Leftmost parameter with `cy(s) = y`.
    pub fn s_of_y(&self, yq: f64) -> f64 {
        let n = self.s.len();
        if yq <= self.cy[0] {
            return self.s[0] + (yq - self.cy[0]);
        }
        if yq > self.cy[n - 1] {
            return self.s[n - 1] + (yq - self.cy[n - 1]);
        }
        let p = self.cy.partition_point(|&v| v < yq);
        let (y0, y1) = (self.cy[p - 1], self.cy[p]);
        let (s0, s1) = (self.s[p - 1], self.s[p]);
        if y1 == y0 {
            s1
        } else {
            s0 + (yq - y0) / (y1 - y0) * (s1 - s0)
        }
    }

    pub fn z_at(&self, m: usize, s: f64) -> f64 {
        pl::interp_clamped(&self.s, &self.z[m], s)
    }

    pub fn v_at(&self, m: usize, x: f64) -> f64 {
        pl::interp_clamped(&self.xgrid, &self.v[m], x)
    }

    pub fn w_at(&self, m: usize, y: f64) -> f64 {
        pl::interp_clamped(&self.ygrid, &self.w[m], y)
    }

    pub fn p_at(&self, x: f64) -> f64 {
        pl::interp_clamped(&self.xgrid, &self.p, x)
    }

    pub fn q_at(&self, y: f64) -> f64 {
        pl::interp_clamped(&self.ygrid, &self.q, y)
    }

    /// Sup bound used for the energy boxes: max j plus max |k| on the curve.
    pub fn energy_bound(&self) -> f64 {
        let j = self.z[3].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let k = self.z[4].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        j + k
    }
}

/// Default resolution for flat stretches: fill points per unit atom mass.
pub const ATOM_FILL_PER_UNIT_MASS: f64 = 32.0;

/// Map Eulerian data to the pair of characteristic families.
pub fn map_l(state: &EulerianState, model: &WaveSpeedModel) -> Result<PsiPair> {
    map_l_with(state, model, ATOM_FILL_PER_UNIT_MASS)
}

pub fn map_l_with(state: &EulerianState, model: &WaveSpeedModel, n_atom: f64) -> Result<PsiPair> {
    let one = branch_from_measure(state, &state.r, &state.rho, &state.mu, model, 1.0, n_atom)?;
    let two = branch_from_measure(state, &state.s, &state.sigma, &state.nu, model, -1.0, n_atom)?;
    Ok(PsiPair { one, two })
}

struct BranchBuilder<'a> {
    state: &'a EulerianState,
    field: &'a [f64],
    weight: &'a [f64],
    m: &'a RadonMeasure,
    model: &'a WaveSpeedModel,
    sign: f64,
    n_atom: f64,
    b: PsiBranch,
}

impl<'a> BranchBuilder<'a> {
    fn density_at(&self, x: f64) -> f64 {
        if self.m.grid().is_empty() {
            0.0
        } else {
            pl::interp_clamped(self.m.grid(), self.m.density(), x)
        }
    }

    /// One sample on the increasing part of the inverse position map.
    fn emit_point(&mut self, bp: f64, x: f64, u: f64, f: f64, w: f64) {
        if self.b.grid.last().map_or(false, |&l| bp <= l) {
            return;
        }
        let d = self.density_at(x);
        let dx = 1.0 / (1.0 + d);
        let dj = d / (1.0 + d);
        let c = self.model.eval(u);
        let b = &mut self.b;
        b.grid.push(bp);
        b.x.push(x);
        b.u.push(u);
        b.j.push(bp - x);
        b.v.push(self.sign * dx * f / (2.0 * c));
        b.h.push(0.5 * w * dx);
        b.dx.push(dx);
        b.dj.push(dj);
        b.dk.push(self.sign * dj / c);
        b.k.push(0.0);
    }

    /// Sample on a flat stretch: zero speed, unit energy slope.
    fn emit_flat_interior(&mut self, bp: f64, x: f64, u: f64) {
        if self.b.grid.last().map_or(false, |&l| bp <= l) {
            return;
        }
        let c = self.model.eval(u);
        let b = &mut self.b;
        b.grid.push(bp);
        b.x.push(x);
        b.u.push(u);
        b.j.push(bp - x);
        b.v.push(0.0);
        b.h.push(0.0);
        b.dx.push(0.0);
        b.dj.push(1.0);
        b.dk.push(self.sign / c);
        b.k.push(0.0);
    }

    fn handle_atom(&mut self, pos: f64, mass: f64) {
        let grid = &self.state.grid;
        let xlo = pos + self.m.cumulative(pos);
        let u = pl::interp_clamped(grid, &self.state.u, pos);
        // the whole closed stretch, edges included, carries the flat-side
        // values: zero speed, unit energy slope; any field value at the atom
        // position is discarded here
        let fills = (self.n_atom * mass).ceil().max(2.0) as usize;
        for k in 0..=fills {
            let bp = xlo + mass * k as f64 / fills as f64;
            self.emit_flat_interior(bp, pos, u);
        }
    }
}

fn branch_from_measure(
    state: &EulerianState,
    field: &[f64],
    weight: &[f64],
    m: &RadonMeasure,
    model: &WaveSpeedModel,
    sign: f64,
    n_atom: f64,
) -> Result<PsiBranch> {
    if m.left_tail() > 0.0 {
        return Err(Error::Validation(
            "measures with left tail mass cannot be mapped; truncate the data first".into(),
        ));
    }
    let mut bb = BranchBuilder {
        state,
        field,
        weight,
        m,
        model,
        sign,
        n_atom,
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
    };

    let atoms: Vec<crate::measures::Atom> = m.atoms().to_vec();
    let mut ai = 0usize;
    for (i, &x) in state.grid.iter().enumerate() {
        while ai < atoms.len() && atoms[ai].pos < x {
            bb.handle_atom(atoms[ai].pos, atoms[ai].mass);
            ai += 1;
        }
        if ai < atoms.len() && atoms[ai].pos == x {
            bb.handle_atom(atoms[ai].pos, atoms[ai].mass);
            ai += 1;
            continue;
        }
        let bp = x + m.cumulative(x);
        bb.emit_point(bp, x, state.u[i], field[i], weight[i]);
    }
    while ai < atoms.len() {
        bb.handle_atom(atoms[ai].pos, atoms[ai].mass);
        ai += 1;
    }

    let mut b = bb.b;
    if b.grid.len() < 2 {
        return Err(Error::Validation("mapped branch has fewer than two samples".into()));
    }
    b.k = pl::cumtrapz(&b.grid, &b.dk);
    Ok(b)
}

/// Merge the two families into the initial curve with its data.
pub fn map_c(psi: &PsiPair, model: &WaveSpeedModel) -> Result<CurveData> {
    let x1 = &psi.one;
    let x2 = &psi.two;

    // common image breakpoints of both position maps
    let scale = 1.0
        + x1.x.iter().chain(&x2.x).fold(0.0f64, |m, v| m.max(v.abs()));
    let vtol = 1e-13 * scale;
    let mut values: Vec<f64> = x1.x.iter().chain(&x2.x).copied().collect();
    values = pl::dedup_sorted(values, vtol);

    // curve vertices; boxes traversed left side then top side
    let mut vx: Vec<f64> = Vec::new();
    let mut vy: Vec<f64> = Vec::new();
    let mut vzx: Vec<f64> = Vec::new(); // common position at the vertex
    let push_vertex = |x: f64, y: f64, zv: f64, vx: &mut Vec<f64>, vy: &mut Vec<f64>, vzx: &mut Vec<f64>| {
        if let (Some(&lx), Some(&ly)) = (vx.last(), vy.last()) {
            if (x - lx).abs() <= vtol && (y - ly).abs() <= vtol {
                return;
            }
        }
        vx.push(x);
        vy.push(y);
        vzx.push(zv);
    };

    for &val in &values {
        let (xa, xb) = level_interval(&x1.grid, &x1.x, val, vtol)?;
        let (ya, yb) = level_interval(&x2.grid, &x2.x, val, vtol)?;
        let x_flat = xb - xa > vtol;
        let y_flat = yb - ya > vtol;
        if x_flat && y_flat {
            push_vertex(xa, ya, val, &mut vx, &mut vy, &mut vzx);
            push_vertex(xa, yb, val, &mut vx, &mut vy, &mut vzx);
            push_vertex(xb, yb, val, &mut vx, &mut vy, &mut vzx);
        } else if x_flat {
            push_vertex(xa, ya, val, &mut vx, &mut vy, &mut vzx);
            push_vertex(xb, ya, val, &mut vx, &mut vy, &mut vzx);
        } else if y_flat {
            push_vertex(xa, ya, val, &mut vx, &mut vy, &mut vzx);
            push_vertex(xa, yb, val, &mut vx, &mut vy, &mut vzx);
        } else {
            push_vertex(xa, ya, val, &mut vx, &mut vy, &mut vzx);
        }
    }
    if vx.len() < 2 {
        return Err(Error::Validation("curve construction produced fewer than two vertices".into()));
    }

    // normalize the parameter and read the data along the curve
    let n = vx.len();
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        s.push(0.5 * (vx[i] + vy[i]));
    }
    // guard monotonicity against round-off
    for i in 1..n {
        if s[i] <= s[i - 1] {
            s[i] = s[i - 1] + 1e-15 * (1.0 + s[i - 1].abs());
        }
    }

    let mut z = [
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
        vec![0.0; n],
    ];
    for i in 0..n {
        z[1][i] = vzx[i];
        z[2][i] = x1.u_at(vx[i]);
        z[3][i] = x1.j_at(vx[i]) + x2.j_at(vy[i]);
        z[4][i] = x1.k_at(vx[i]) + x2.k_at(vy[i]);
    }

    // derivative data on the family grids
    let nx = x1.grid.len();
    let mut v = [
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
    ];
    for i in 0..nx {
        let c = model.eval(x1.u[i]);
        v[0][i] = x1.dx[i] / (2.0 * c);
        v[1][i] = 0.5 * x1.dx[i];
        v[2][i] = x1.v[i];
        v[3][i] = x1.dj[i];
        v[4][i] = x1.dk[i];
    }
    let ny = x2.grid.len();
    let mut w = [
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
    ];
    for i in 0..ny {
        let c = model.eval(x2.u[i]);
        w[0][i] = -x2.dx[i] / (2.0 * c);
        w[1][i] = 0.5 * x2.dx[i];
        w[2][i] = x2.v[i];
        w[3][i] = x2.dj[i];
        w[4][i] = x2.dk[i];
    }

    Ok(CurveData {
        s,
        cx: vx,
        cy: vy,
        z,
        xgrid: x1.grid.clone(),
        v,
        p: x1.h.clone(),
        ygrid: x2.grid.clone(),
        w,
        q: x2.h.clone(),
    })
}

/// Pre-image interval `[leftmost, rightmost]` of a level of a continuous
/// nondecreasing sampled map with slope-one extension.
fn level_interval(grid: &[f64], vals: &[f64], level: f64, tol: f64) -> Result<(f64, f64)> {
    let n = vals.len();
    if level <= vals[0] {
        let p = grid[0] + (level - vals[0]);
        return Ok((p, p));
    }
    if level >= vals[n - 1] {
        let p = grid[n - 1] + (level - vals[n - 1]);
        return Ok((p, p));
    }
    let lo = {
        let p = vals.partition_point(|&v| v < level - tol);
        // walk back over samples equal to the level
        let (v0, v1) = (vals[p - 1], vals[p]);
        if (v1 - v0).abs() <= tol {
            grid[p - 1]
        } else {
            grid[p - 1] + (level - v0) / (v1 - v0) * (grid[p] - grid[p - 1])
        }
    };
    let hi = {
        let p = vals.partition_point(|&v| v <= level + tol);
        let (v0, v1) = (vals[p - 1], vals[p.min(n - 1)]);
        if p >= n || (v1 - v0).abs() <= tol {
            grid[p - 1]
        } else {
            grid[p - 1] + (level - v0) / (v1 - v0) * (grid[p] - grid[p - 1])
        }
    };
    Ok((lo.min(hi), hi.max(lo)))
}

/// Relabeling action: reparametrize each family by `(f, g)` with the stated
/// derivative factors on the derivative-like components.
pub fn relabel(
    psi: &PsiPair,
    f: &dyn Fn(f64) -> f64,
    fp: &dyn Fn(f64) -> f64,
    g: &dyn Fn(f64) -> f64,
    gp: &dyn Fn(f64) -> f64,
) -> Result<PsiPair> {
    Ok(PsiPair {
        one: relabel_branch(&psi.one, f, fp)?,
        two: relabel_branch(&psi.two, g, gp)?,
    })
}

fn relabel_branch(b: &PsiBranch, f: &dyn Fn(f64) -> f64, fp: &dyn Fn(f64) -> f64) -> Result<PsiBranch> {
    // new grid: preimage of the old one, so sampled values carry over exactly
    let n = b.grid.len();
    let span = b.grid[n - 1] - b.grid[0];
    let lo = b.grid[0] - span.abs() - 10.0;
    let hi = b.grid[n - 1] + span.abs() + 10.0;
    let mut grid = Vec::with_capacity(n);
    for &target in &b.grid {
        let root = crate::measures::generalized_inverse_fn(|x| f(x), target, lo, hi)?;
        grid.push(root);
    }
    if !pl::strictly_increasing(&grid) {
        return Err(Error::Degeneracy("relabeling function is not strictly increasing".into()));
    }
    let mut out = b.clone();
    out.grid = grid;
    for i in 0..n {
        let d = fp(out.grid[i]);
        if d <= 1e-12 {
            return Err(Error::Degeneracy(format!("relabeling slope {d:.3e} at {}", out.grid[i])));
        }
        out.v[i] = b.v[i] * d;
        out.h[i] = b.h[i] * d;
        out.dx[i] = b.dx[i] * d;
        out.dj[i] = b.dj[i] * d;
        out.dk[i] = b.dk[i] * d;
    }
    Ok(out)
}

/// Normalize to the section where position plus energy is the identity in
/// the family parameter. Exact reindexing: values are kept, the grid moves.
pub fn project_f0(psi: &PsiPair) -> Result<PsiPair> {
    Ok(PsiPair {
        one: project_branch(&psi.one)?,
        two: project_branch(&psi.two)?,
    })
}

fn project_branch(b: &PsiBranch) -> Result<PsiBranch> {
    let n = b.grid.len();
    let mut out = b.clone();
    for i in 0..n {
        let slope = b.dx[i] + b.dj[i];
        if slope <= 1e-12 {
            return Err(Error::Degeneracy(format!(
                "position-plus-energy slope {slope:.3e} at parameter {}",
                b.grid[i]
            )));
        }
        out.grid[i] = b.x[i] + b.j[i];
        out.v[i] = b.v[i] / slope;
        out.h[i] = b.h[i] / slope;
        out.dx[i] = b.dx[i] / slope;
        out.dj[i] = b.dj[i] / slope;
        out.dk[i] = b.dk[i] / slope;
    }
    if !pl::strictly_increasing(&out.grid) {
        return Err(Error::Degeneracy("position-plus-energy must be strictly increasing".into()));
    }
    Ok(out)
}

/// Membership checks for a family pair.
pub fn check_f(psi: &PsiPair, model: &WaveSpeedModel) -> CheckReport {
    let mut rep = CheckReport::default();
    for (tag, b, sign) in [("one", &psi.one, 1.0), ("two", &psi.two, -1.0)] {
        let n = b.grid.len();
        let mut min_dx = f64::INFINITY;
        let mut min_dj = f64::INFINITY;
        let mut min_slope = f64::INFINITY;
        let mut rel2 = (0.0f64, 0.0);
        let mut rel3 = (0.0f64, 0.0);
        for i in 0..n {
            min_dx = min_dx.min(b.dx[i]);
            min_dj = min_dj.min(b.dj[i]);
            min_slope = min_slope.min(b.dx[i] + b.dj[i]);
            let c = model.eval(b.u[i]);
            let r2 = (b.dj[i] - sign * c * b.dk[i]).abs();
            let s2 = b.dj[i].abs().max((c * b.dk[i]).abs()).max(1e-12);
            if r2 / s2 > rel2.0 {
                rel2 = (r2 / s2, b.grid[i]);
            }
            let lhs = b.dx[i] * b.dj[i];
            let rhs = (c * b.v[i]).powi(2) + c * b.h[i] * b.h[i];
            let s3 = lhs.abs().max(rhs.abs()).max(1e-12);
            let r3 = (lhs - rhs).abs();
            if r3 / s3 > rel3.0 {
                rel3 = (r3 / s3, b.grid[i]);
            }
        }
        rep.push(&format!("slopes-nonneg-{tag}"), min_dx >= -1e-13 && min_dj >= -1e-13, (-min_dx.min(min_dj)).max(0.0), 0.0, 0.0);
        rep.push(&format!("energy-speed-ratio-{tag}"), rel2.0 <= 1e-9, rel2.0, rel2.0, rel2.1);
        rep.push(&format!("energy-balance-{tag}"), rel3.0 <= 1e-9, rel3.0, rel3.0, rel3.1);
        rep.push(&format!("relabeling-slope-{tag}"), min_slope > 1e-12, min_slope, 0.0, 0.0);
        let j0 = b.j[0].abs();
        rep.push(&format!("energy-vanishes-left-{tag}"), j0 <= 1e-9 * (1.0 + b.j[n - 1].abs()), j0, j0, b.grid[0]);
    }
    rep
}

/// Membership checks for curve data.
pub fn check_g(curve: &CurveData, model: &WaveSpeedModel) -> CheckReport {
    let mut rep = CheckReport::default();
    let n = curve.s.len();

    let mut norm = 0.0f64;
    let mut mono = 0.0f64;
    for i in 0..n {
        norm = norm.max((curve.cx[i] + curve.cy[i] - 2.0 * curve.s[i]).abs());
        if i > 0 {
            mono = mono.min(curve.cx[i] - curve.cx[i - 1]);
            mono = mono.min(curve.cy[i] - curve.cy[i - 1]);
        }
    }
    rep.push("curve-normalization", norm <= 1e-12, norm, norm, 0.0);
    rep.push("curve-monotone", mono >= -1e-13, (-mono).max(0.0), 0.0, 0.0);

    let minpos = curve.v[1]
        .iter()
        .chain(&curve.v[3])
        .chain(&curve.w[1])
        .chain(&curve.w[3])
        .fold(f64::INFINITY, |m, &v| m.min(v));
    rep.push("speeds-energies-nonneg", minpos >= -1e-13, (-minpos).max(0.0), 0.0, 0.0);

    // pointwise proportionality between position-like and time-like slopes
    let mut rel12 = (0.0f64, 0.0);
    let mut rel34 = (0.0f64, 0.0);
    for i in 0..n {
        let c = model.eval(curve.z[2][i]);
        let x = curve.cx[i];
        let y = curve.cy[i];
        for (a, bb, sgn, which) in [
            (curve.v_at(1, x), curve.v_at(0, x), 1.0, 0),
            (curve.w_at(1, y), curve.w_at(0, y), -1.0, 0),
            (curve.v_at(3, x), curve.v_at(4, x), 1.0, 1),
            (curve.w_at(3, y), curve.w_at(4, y), -1.0, 1),
        ] {
            let r = (a - sgn * c * bb).abs();
            let sc = a.abs().max((c * bb).abs()).max(1e-12);
            let t = if which == 0 { &mut rel12 } else { &mut rel34 };
            if r / sc > t.0 {
                *t = (r / sc, curve.s[i]);
            }
        }
    }
    rep.push("speed-proportionality", rel12.0 <= 1e-9, rel12.0, rel12.0, rel12.1);
    rep.push("energy-proportionality", rel34.0 <= 1e-9, rel34.0, rel34.0, rel34.1);

    // quadratic energy identity on both families
    let mut rel3 = (0.0f64, 0.0);
    for i in 0..n {
        let c = model.eval(curve.z[2][i]);
        let x = curve.cx[i];
        let y = curve.cy[i];
        for (e2, e4, e3, src) in [
            (curve.v_at(1, x), curve.v_at(3, x), curve.v_at(2, x), curve.p_at(x)),
            (curve.w_at(1, y), curve.w_at(3, y), curve.w_at(2, y), curve.q_at(y)),
        ] {
            let lhs = 2.0 * e4 * e2;
            let rhs = (c * e3).powi(2) + c * src * src;
            let sc = lhs.abs().max(rhs.abs()).max(1e-12);
            let r = (lhs - rhs).abs();
            if r / sc > rel3.0 {
                rel3 = (r / sc, curve.s[i]);
            }
        }
    }
    rep.push("energy-quadratic-identity", rel3.0 <= 1e-9, rel3.0, rel3.0, rel3.1);

    // compatibility of curve values with the derivative data, per segment
    let mut comp = (0.0f64, 0.0);
    let mut zscale = 1e-12f64;
    for m in 0..5 {
        zscale = zscale.max(curve.z[m].iter().fold(0.0f64, |mm, v| mm.max(v.abs())));
    }
    for i in 1..n {
        let dxc = curve.cx[i] - curve.cx[i - 1];
        let dyc = curve.cy[i] - curve.cy[i - 1];
        for m in 0..5 {
            let dz = curve.z[m][i] - curve.z[m][i - 1];
            let iv = 0.5 * (curve.v_at(m, curve.cx[i - 1]) + curve.v_at(m, curve.cx[i])) * dxc;
            let iw = 0.5 * (curve.w_at(m, curve.cy[i - 1]) + curve.w_at(m, curve.cy[i])) * dyc;
            let r = (dz - iv - iw).abs();
            if r > comp.0 {
                comp = (r, curve.s[i]);
            }
        }
    }
    let ds_max = curve
        .s
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(0.0f64, f64::max);
    let comp_tol = (20.0 * ds_max * ds_max + 1e-12) * (1.0 + zscale);
    rep.push("compatibility-z", comp.0 <= comp_tol, comp.0, comp.0 / (1.0 + zscale), comp.1);

    let t0 = curve.z[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    rep.push("time-zero", t0 <= 1e-9, t0, t0, 0.0);
    let j0 = curve.z[3][0].abs();
    rep.push("energy-vanishes-left", j0 <= 1e-9 * (1.0 + curve.energy_bound()), j0, j0, curve.s[0]);
    let _ = model;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::Atom;

    fn grid(n: usize, a: f64) -> Vec<f64> {
        (0..n).map(|i| -a + 2.0 * a * i as f64 / (n - 1) as f64).collect()
    }

    fn zero_state(n: usize, a: f64, model: &WaveSpeedModel) -> EulerianState {
        let g = grid(n, a);
        let m = g.len();
        EulerianState::from_primitives(
            g,
            vec![0.0; m],
            vec![0.0; m],
            vec![0.0; m],
            vec![0.0; m],
            vec![0.0; m],
            vec![],
            vec![],
            model,
        )
        .unwrap()
    }

    fn atom_state(model: &WaveSpeedModel, mu_atom: bool, nu_atom: bool) -> EulerianState {
        let g = grid(41, 2.0);
        let m = g.len();
        EulerianState::from_primitives(
            g,
            vec![0.0; m],
            vec![0.0; m],
            vec![0.0; m],
            vec![0.0; m],
            vec![0.0; m],
            if mu_atom { vec![Atom { pos: 0.0, mass: 1.0 }] } else { vec![] },
            if nu_atom { vec![Atom { pos: 0.0, mass: 1.0 }] } else { vec![] },
            model,
        )
        .unwrap()
    }

    #[test]
    fn zero_state_maps_to_identity() {
        let model = WaveSpeedModel::smooth(1.0, 1.0).unwrap();
        let st = zero_state(101, 5.0, &model);
        let psi = map_l(&st, &model).unwrap();
        for (i, &p) in psi.one.grid.iter().enumerate() {
            assert!((psi.one.x[i] - p).abs() < 1e-14);
            assert_eq!(psi.one.j[i], 0.0);
            assert_eq!(psi.one.u[i], 0.0);
            assert_eq!(psi.one.v[i], 0.0);
            assert_eq!(psi.one.h[i], 0.0);
        }
        assert!(check_f(&psi, &model).pass());
    }

    #[test]
    fn arctan_densities_give_bounded_inverse_slope() {
        // both energy densities 1/(1+x^2): R = S = 2/sqrt(1+x^2), u = 0
        let model = WaveSpeedModel::constant(1.0).unwrap();
        let g = grid(4001, 40.0);
        let n = g.len();
        let ut: Vec<f64> = g.iter().map(|x| 2.0 / (1.0 + x * x).sqrt()).collect();
        let st = EulerianState::from_primitives(
            g,
            vec![0.0; n],
            ut,
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![],
            vec![],
            &model,
        )
        .unwrap();
        let psi = map_l(&st, &model).unwrap();
        for (i, &d) in psi.one.dx.iter().enumerate() {
            assert!(d >= 0.5 - 1e-12 && d <= 1.0 + 1e-12, "dx {} at {}", d, psi.one.grid[i]);
        }
        // identical families: the curve is the diagonal
        let curve = map_c(&psi, &model).unwrap();
        for (i, &s) in curve.s.iter().enumerate() {
            assert!((curve.cx[i] - s).abs() < 1e-12);
            assert!((curve.cy[i] - s).abs() < 1e-12);
        }
        assert!(check_f(&psi, &model).pass());
        assert!(check_g(&curve, &model).pass());
    }

    #[test]
    fn unit_atom_gives_piecewise_inverse() {
        let model = WaveSpeedModel::constant(1.0).unwrap();
        let st = atom_state(&model, true, false);
        let psi = map_l(&st, &model).unwrap();
        let b = &psi.one;
        let eval = |p: f64| b.x_at(p);
        for p in [-1.5, -0.3, 0.0] {
            assert!((eval(p) - p).abs() < 1e-12, "left branch at {p}");
        }
        for p in [0.2, 0.5, 0.9, 1.0] {
            assert!(eval(p).abs() < 1e-12, "flat at {p}");
        }
        for p in [1.1, 2.0, 2.9] {
            assert!((eval(p) - (p - 1.0)).abs() < 1e-12, "right branch at {p}");
        }
        // energy across the flat
        assert!((b.j_at(1.0) - 1.0).abs() < 1e-12);
        assert!(b.j_at(0.0).abs() < 1e-12);
    }

    #[test]
    fn one_sided_atom_curve_has_horizontal_segment() {
        let model = WaveSpeedModel::constant(1.0).unwrap();
        let st = atom_state(&model, true, false);
        let psi = map_l(&st, &model).unwrap();
        let curve = map_c(&psi, &model).unwrap();
        // flat of the forward family maps to a horizontal segment: s in [0, 1/2]
        assert!((curve.x_of_s(0.25) - 0.5).abs() < 1e-12);
        assert!((curve.y_of_s(0.25) - 0.0).abs() < 1e-12);
        assert!((curve.x_of_s(-1.0) + 1.0).abs() < 1e-12);
        assert!((curve.x_of_s(1.0) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn double_atom_curve_follows_box_left_then_top() {
        let model = WaveSpeedModel::constant(1.0).unwrap();
        let st = atom_state(&model, true, true);
        let psi = map_l(&st, &model).unwrap();
        // x2 has the same piecewise form as x1
        for (p, want) in [(-1.0, -1.0), (0.5, 0.0), (1.0, 0.0), (1.5, 0.5)] {
            assert!((psi.two.x_at(p) - want).abs() < 1e-12);
        }
        let curve = map_c(&psi, &model).unwrap();
        // left side then top of the unit box
        for (s, x, y) in [
            (-1.0, -1.0, -1.0),
            (0.0, 0.0, 0.0),
            (0.25, 0.0, 0.5),
            (0.5, 0.0, 1.0),
            (0.75, 0.5, 1.0),
            (1.0, 1.0, 1.0),
            (2.0, 2.0, 2.0),
        ] {
            assert!((curve.x_of_s(s) - x).abs() < 1e-10, "x at s={s}");
            assert!((curve.y_of_s(s) - y).abs() < 1e-10, "y at s={s}");
        }
        // energy along the curve climbs by both atom masses
        assert!((curve.z_at(3, 2.0) - 2.0).abs() < 1e-10);
        assert!(curve.z_at(3, -1.0).abs() < 1e-12);
    }

    #[test]
    fn map_c_zero_state_curve_data() {
        let model = WaveSpeedModel::smooth(1.2, 0.8).unwrap();
        let st = zero_state(101, 5.0, &model);
        let psi = map_l(&st, &model).unwrap();
        let curve = map_c(&psi, &model).unwrap();
        let c0 = model.eval(0.0);
        for (i, &s) in curve.s.iter().enumerate() {
            assert!((curve.cx[i] - s).abs() < 1e-13);
            assert!((curve.z[1][i] - s).abs() < 1e-13);
        }
        for i in 0..curve.xgrid.len() {
            assert!((curve.v[1][i] - 0.5).abs() < 1e-14);
            assert!((curve.v[0][i] - 1.0 / (2.0 * c0)).abs() < 1e-14);
        }
        for i in 0..curve.ygrid.len() {
            assert!((curve.w[1][i] - 0.5).abs() < 1e-14);
            assert!((curve.w[0][i] + 1.0 / (2.0 * c0)).abs() < 1e-14);
        }
        assert!(check_g(&curve, &model).pass());
    }

    #[test]
    fn pointwise_inverse_slope_identity() {
        // dx * (1 + quarter energy density at the image) = 1 at every sample
        let model = WaveSpeedModel::smooth(1.0, 0.5).unwrap();
        let g = grid(801, 8.0);
        let n = g.len();
        let u: Vec<f64> = g.iter().map(|x| 0.4 * (-x * x).exp()).collect();
        let ux: Vec<f64> = g.iter().map(|x| -0.8 * x * (-x * x).exp()).collect();
        let ut: Vec<f64> = g.iter().map(|x| 0.3 * (-x * x / 2.0).exp()).collect();
        let st = EulerianState::from_primitives(
            g.clone(),
            u,
            ut,
            ux,
            vec![0.3; n],
            vec![0.2; n],
            vec![],
            vec![],
            &model,
        )
        .unwrap();
        let psi = map_l(&st, &model).unwrap();
        for i in 0..psi.one.len() {
            let x = psi.one.x[i];
            let c = model.eval(psi.one.u[i]);
            let r = pl::interp_clamped(&g, &st.r, x);
            let rho = pl::interp_clamped(&g, &st.rho, x);
            let dens = 0.25 * (r * r + c * rho * rho);
            let res = (psi.one.dx[i] * (1.0 + dens) - 1.0).abs();
            assert!(res < 1e-9, "identity residual {res} at sample {i}");
        }
        assert!(check_f(&psi, &model).pass());
    }

    #[test]
    fn projection_is_identity_on_mapped_data() {
        let model = WaveSpeedModel::smooth(1.0, 0.5).unwrap();
        let g = grid(401, 6.0);
        let n = g.len();
        let ut: Vec<f64> = g.iter().map(|x| 0.5 * (-x * x).exp()).collect();
        let st = EulerianState::from_primitives(
            g,
            vec![0.0; n],
            ut,
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![],
            vec![],
            &model,
        )
        .unwrap();
        let psi = map_l(&st, &model).unwrap();
        let proj = project_f0(&psi).unwrap();
        for i in 0..psi.one.len() {
            assert!((proj.one.grid[i] - psi.one.grid[i]).abs() < 1e-12);
            assert!((proj.one.v[i] - psi.one.v[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn relabeled_copy_projects_back() {
        let model = WaveSpeedModel::smooth(1.0, 0.5).unwrap();
        let g = grid(401, 6.0);
        let n = g.len();
        let ut: Vec<f64> = g.iter().map(|x| 0.5 * (-x * x).exp()).collect();
        let st = EulerianState::from_primitives(
            g,
            vec![0.0; n],
            ut,
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![],
            vec![],
            &model,
        )
        .unwrap();
        let psi = map_l(&st, &model).unwrap();
        let f = |x: f64| x + 0.25 * x.atan();
        let fp = |x: f64| 1.0 + 0.25 / (1.0 + x * x);
        let moved = relabel(&psi, &f, &fp, &f, &fp).unwrap();
        assert!(check_f(&moved, &model).pass());
        let back = project_f0(&moved).unwrap();
        let base = project_f0(&psi).unwrap();
        for i in (0..base.one.len()).step_by(7) {
            let xq = base.one.grid[i];
            let diff = (pl::interp_clamped(&back.one.grid, &back.one.x, xq) - base.one.x[i]).abs();
            assert!(diff < 1e-9, "position mismatch {diff} at {xq}");
            let dv = (pl::interp_clamped(&back.one.grid, &back.one.v, xq) - base.one.v[i]).abs();
            assert!(dv < 1e-9, "slope mismatch {dv} at {xq}");
        }
    }

    #[test]
    fn corrupted_slope_is_flagged() {
        let model = WaveSpeedModel::constant(1.0).unwrap();
        let st = zero_state(51, 2.0, &model);
        let mut psi = map_l(&st, &model).unwrap();
        psi.one.dj[10] = -0.5;
        let rep = check_f(&psi, &model);
        assert!(!rep.pass());
        assert!(!rep.get("slopes-nonneg-one").unwrap().pass);
    }
}
