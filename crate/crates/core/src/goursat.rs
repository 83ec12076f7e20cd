//! Fixed-point solver for the semilinear characteristic system on rectangles,
//! with adaptive tiling to arbitrary domains.
//!
//! On each cell the solution is the fixed point of an integral map anchored on
//! a monotone curve through the cell: curve values plus line integrals of the
//! unknown derivatives, which in turn integrate a bilinear right-hand side.
//! Cells are scheduled by their anti-diagonal distance from the initial curve;
//! inner cells take their curve data from already-solved neighbor edges
//! (left/top edges below the curve, bottom/right edges above it).

use crate::error::Error;
use crate::lagrangian::CurveData;
use crate::pl;
use crate::report::CheckReport;
use crate::wavespeed::WaveSpeedModel;
use crate::Result;
use rayon::prelude::*;

/// Dense 2-D array over an (X, Y) grid; one column (fixed X) is contiguous.
#[derive(Debug, Clone)]
pub struct Grid2 {
    pub nx: usize,
    pub ny: usize,
    pub data: Vec<f64>,
}

impl Grid2 {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        Grid2 {
            nx,
            ny,
            data: vec![0.0; nx * ny],
        }
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        i * self.ny + j
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.ny + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.ny + j] = v;
    }

    pub fn sup_diff(&self, other: &Grid2) -> f64 {
        pl::sup_diff(&self.data, &other.data)
    }
}

/// Rectangle in the characteristic plane with its grid counts.
#[derive(Debug, Clone, Copy)]
pub struct CharRectangle {
    pub xl: f64,
    pub xr: f64,
    pub yl: f64,
    pub yr: f64,
    pub nx: usize,
    pub ny: usize,
}

impl CharRectangle {
    pub fn new(xl: f64, xr: f64, yl: f64, yr: f64, nx: usize, ny: usize) -> Result<Self> {
        if !(xl <= xr && yl <= yr) {
            return Err(Error::Usage("rectangle corners must be ordered".into()));
        }
        if nx < 2 || ny < 2 {
            return Err(Error::Usage("rectangle grid counts must be at least 2".into()));
        }
        Ok(CharRectangle {
            xl,
            xr,
            yl,
            yr,
            nx,
            ny,
        })
    }
}

/// Fixed-point solver controls.
#[derive(Debug, Clone, Copy)]
pub struct SolverParams {
    /// Sup-norm distance between successive iterates that counts as converged.
    pub tol: f64,
    pub max_iter: usize,
    /// Target number of grid points per axis over the whole domain.
    pub grid: usize,
    /// Initial curve-parameter width of one cell; halved on contraction failure.
    pub cell_width: f64,
    /// Total cell-solve budget across adaptive retries.
    pub cell_budget: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            tol: 1e-12,
            max_iter: 60,
            grid: 257,
            cell_width: 0.25,
            cell_budget: 1_048_576,
        }
    }
}

/// Solution arrays over a union of solved rectangles.
#[derive(Debug, Clone)]
pub struct GridSolution {
    pub xg: Vec<f64>,
    pub yg: Vec<f64>,
    /// (t, x, U, J, K); the stored t is raw, shifted by `t_offset` on access.
    pub z: [Grid2; 5],
    pub zx: [Grid2; 5],
    pub zy: [Grid2; 5],
    /// Density weights, constant along Y and X respectively.
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    /// Accumulated time shift; `t(X, Y) = z[0] - t_offset`.
    pub t_offset: f64,
    /// Energy bound carried from the initial curve.
    pub e0: f64,
    /// Worst discrepancy between the two redundant value iterates.
    pub zh_zv_gap: f64,
    /// Covered sub-rectangles, in solve order.
    pub rects: Vec<CharRectangle>,
}

impl GridSolution {
    #[inline]
    pub fn time(&self, i: usize, j: usize) -> f64 {
        self.z[0].at(i, j) - self.t_offset
    }

    /// Bilinear interpolation of a stored array.
    pub fn interp(&self, arr: &Grid2, x: f64, y: f64) -> f64 {
        let i = pl::locate(&self.xg, x);
        let j = pl::locate(&self.yg, y);
        let tx = ((x - self.xg[i]) / (self.xg[i + 1] - self.xg[i])).clamp(0.0, 1.0);
        let ty = ((y - self.yg[j]) / (self.yg[j + 1] - self.yg[j])).clamp(0.0, 1.0);
        let a = arr.at(i, j) * (1.0 - tx) + arr.at(i + 1, j) * tx;
        let b = arr.at(i, j + 1) * (1.0 - tx) + arr.at(i + 1, j + 1) * tx;
        a * (1.0 - ty) + b * ty
    }

    pub fn time_at(&self, x: f64, y: f64) -> f64 {
        self.interp(&self.z[0], x, y) - self.t_offset
    }
}

/// Curve data restricted to one cell, resampled onto the cell grids, with the
/// anchor points where each grid row and column meets the curve.
#[derive(Debug, Clone)]
pub struct CellCurve {
    /// Anchor X for each row (where the row meets the curve).
    pub ax: Vec<f64>,
    /// Anchor Y for each column.
    pub ay: Vec<f64>,
    /// Curve values of Z at the row anchors (5 x ny).
    pub zrow: [Vec<f64>; 5],
    /// Curve values of Z at the column anchors (5 x nx).
    pub zcol: [Vec<f64>; 5],
    /// X-derivative data on the cell X grid.
    pub v: [Vec<f64>; 5],
    /// Y-derivative data on the cell Y grid.
    pub w: [Vec<f64>; 5],
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

/// One fixed-point iterate: the two redundant value fields plus the two
/// derivative fields.
#[derive(Debug, Clone)]
pub struct CellIterate {
    pub zh: [Grid2; 5],
    pub zv: [Grid2; 5],
    pub v: [Grid2; 5],
    pub w: [Grid2; 5],
}

fn five(nx: usize, ny: usize) -> [Grid2; 5] {
    [
        Grid2::zeros(nx, ny),
        Grid2::zeros(nx, ny),
        Grid2::zeros(nx, ny),
        Grid2::zeros(nx, ny),
        Grid2::zeros(nx, ny),
    ]
}

/// Bilinear right-hand side of the characteristic system at one point.
#[inline]
fn rhs(model: &WaveSpeedModel, u: f64, v: &[f64; 5], w: &[f64; 5], out: &mut [f64; 5]) {
    let c = model.eval(u);
    let cp = model.deriv(u);
    let a = cp / (2.0 * c);
    out[0] = -a * (v[0] * w[2] + v[2] * w[0]);
    out[1] = a * (v[1] * w[2] + v[2] * w[1]);
    out[2] = cp / (2.0 * c * c * c) * (v[3] * w[1] + v[1] * w[3]) - a * v[2] * w[2];
    out[3] = a * (v[3] * w[2] + v[2] * w[3]);
    out[4] = -a * (v[4] * w[2] + v[2] * w[4]);
}

/// Trapezoid cumulative along a 1-D stencil with an anchored offset:
/// given samples `f` on `grid`, returns `F(grid[i]) - F(anchor)`.
fn anchored_cumtrapz(grid: &[f64], f: &[f64], anchor: f64, out: &mut [f64]) {
    let n = grid.len();
    let mut acc = 0.0;
    out[0] = 0.0;
    for i in 1..n {
        acc += 0.5 * (f[i] + f[i - 1]) * (grid[i] - grid[i - 1]);
        out[i] = acc;
    }
    // subtract the cumulative at the anchor (partial cell, linear integrand)
    let k = pl::locate(grid, anchor);
    let h = grid[k + 1] - grid[k];
    let d = anchor - grid[k];
    let slope = if h > 0.0 { (f[k + 1] - f[k]) / h } else { 0.0 };
    let at_anchor = out[k] + f[k] * d + 0.5 * slope * d * d;
    for v in out.iter_mut() {
        *v -= at_anchor;
    }
}

/// One application of the integral map to an iterate.
pub fn picard_step(
    xs: &[f64],
    ys: &[f64],
    curve: &CellCurve,
    model: &WaveSpeedModel,
    it: &CellIterate,
) -> CellIterate {
    let nx = xs.len();
    let ny = ys.len();
    let mut next = CellIterate {
        zh: five(nx, ny),
        zv: five(nx, ny),
        v: five(nx, ny),
        w: five(nx, ny),
    };

    // right-hand side at every point, from the horizontal value iterate
    let mut f = five(nx, ny);
    {
        let mut vv = [0.0; 5];
        let mut ww = [0.0; 5];
        let mut ff = [0.0; 5];
        for i in 0..nx {
            for j in 0..ny {
                let id = i * ny + j;
                for m in 0..5 {
                    vv[m] = it.v[m].data[id];
                    ww[m] = it.w[m].data[id];
                }
                rhs(model, it.zh[2].data[id], &vv, &ww, &mut ff);
                for m in 0..5 {
                    f[m].data[id] = ff[m];
                }
            }
        }
    }

    let mut row = vec![0.0; nx.max(ny)];
    let mut cum = vec![0.0; nx.max(ny)];

    // values along rows: curve value at the row anchor plus the integral of V
    for j in 0..ny {
        for m in 0..5 {
            for i in 0..nx {
                row[i] = it.v[m].data[i * ny + j];
            }
            anchored_cumtrapz(xs, &row[..nx], curve.ax[j], &mut cum[..nx]);
            for i in 0..nx {
                next.zh[m].data[i * ny + j] = curve.zrow[m][j] + cum[i];
            }
        }
    }
    // values along columns
    for i in 0..nx {
        for m in 0..5 {
            let col = &it.w[m].data[i * ny..(i + 1) * ny];
            anchored_cumtrapz(ys, col, curve.ay[i], &mut cum[..ny]);
            for j in 0..ny {
                next.zv[m].data[i * ny + j] = curve.zcol[m][i] + cum[j];
            }
        }
    }
    // X-derivatives evolve along columns
    for i in 0..nx {
        for m in 0..5 {
            let col = &f[m].data[i * ny..(i + 1) * ny];
            anchored_cumtrapz(ys, col, curve.ay[i], &mut cum[..ny]);
            for j in 0..ny {
                next.v[m].data[i * ny + j] = curve.v[m][i] + cum[j];
            }
        }
    }
    // Y-derivatives evolve along rows
    for j in 0..ny {
        for m in 0..5 {
            for i in 0..nx {
                row[i] = f[m].data[i * ny + j];
            }
            anchored_cumtrapz(xs, &row[..nx], curve.ax[j], &mut cum[..nx]);
            for i in 0..nx {
                next.w[m].data[i * ny + j] = curve.w[m][j] + cum[i];
            }
        }
    }
    next
}

fn iterate_distance(a: &CellIterate, b: &CellIterate) -> f64 {
    let mut d = 0.0f64;
    for m in 0..5 {
        d = d.max(a.zh[m].sup_diff(&b.zh[m]));
        d = d.max(a.zv[m].sup_diff(&b.zv[m]));
        d = d.max(a.v[m].sup_diff(&b.v[m]));
        d = d.max(a.w[m].sup_diff(&b.w[m]));
    }
    d
}

/// Converged cell solution; values from the horizontal iterate, the gap to
/// the vertical iterate kept as a quadrature-error gauge.
pub struct CellSolution {
    pub z: [Grid2; 5],
    pub zx: [Grid2; 5],
    pub zy: [Grid2; 5],
    pub gap: f64,
}

/// Run the fixed point on one cell.
pub fn solve_cell(
    xs: &[f64],
    ys: &[f64],
    curve: &CellCurve,
    model: &WaveSpeedModel,
    tol: f64,
    max_iter: usize,
) -> Result<CellSolution> {
    let nx = xs.len();
    let ny = ys.len();
    // start from curve data spread constantly
    let mut it = CellIterate {
        zh: five(nx, ny),
        zv: five(nx, ny),
        v: five(nx, ny),
        w: five(nx, ny),
    };
    for m in 0..5 {
        for i in 0..nx {
            for j in 0..ny {
                it.v[m].set(i, j, curve.v[m][i]);
                it.w[m].set(i, j, curve.w[m][j]);
            }
        }
    }
    let seeded = picard_step(xs, ys, curve, model, &it);
    it.zh = seeded.zh;
    it.zv = seeded.zv;

    let scale = 1.0
        + curve
            .zrow
            .iter()
            .flat_map(|z| z.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()));
    let mut residual = f64::INFINITY;
    for k in 0..max_iter {
        let next = picard_step(xs, ys, curve, model, &it);
        residual = iterate_distance(&next, &it);
        it = next;
        if residual <= tol {
            return Ok(finish_cell(it, residual));
        }
        if !residual.is_finite() || residual > 1e6 * scale {
            return Err(Error::NonContraction {
                iterations: k + 1,
                residual,
            });
        }
    }
    Err(Error::NonContraction {
        iterations: max_iter,
        residual,
    })
}

fn finish_cell(it: CellIterate, gap_seed: f64) -> CellSolution {
    let mut gap = gap_seed;
    for m in 0..5 {
        gap = gap.max(it.zh[m].sup_diff(&it.zv[m]));
    }
    CellSolution {
        z: it.zh,
        zx: it.v,
        zy: it.w,
        gap,
    }
}

/// Solve one rectangle spanned corner-to-corner by the curve.
pub fn solve_rectangle(
    rect: &CharRectangle,
    curve: &CurveData,
    model: &WaveSpeedModel,
    tol: f64,
    max_iter: usize,
) -> Result<GridSolution> {
    let s_lo = 0.5 * (rect.xl + rect.yl);
    let s_hi = 0.5 * (rect.xr + rect.yr);
    check_spans(curve, rect, s_lo, s_hi)?;
    let xs: Vec<f64> = uniform(rect.xl, rect.xr, rect.nx);
    let ys: Vec<f64> = uniform(rect.yl, rect.yr, rect.ny);
    let cell = curve_slice(curve, &xs, &ys, model, (s_lo, s_hi));
    let sol = solve_cell(&xs, &ys, &cell, model, tol, max_iter)?;
    let p: Vec<f64> = xs.iter().map(|&x| curve.p_at(x)).collect();
    let q: Vec<f64> = ys.iter().map(|&y| curve.q_at(y)).collect();
    let mut gs = GridSolution {
        xg: xs,
        yg: ys,
        z: sol.z,
        zx: sol.zx,
        zy: sol.zy,
        p,
        q,
        t_offset: 0.0,
        e0: curve.energy_bound(),
        zh_zv_gap: sol.gap,
        rects: vec![*rect],
    };
    clamp_slopes(&mut gs)?;
    Ok(gs)
}

fn uniform(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn check_spans(curve: &CurveData, rect: &CharRectangle, s_lo: f64, s_hi: f64) -> Result<()> {
    let ok = (curve.x_of_s(s_lo) - rect.xl).abs() <= 1e-9 * (1.0 + rect.xl.abs())
        && (curve.y_of_s(s_lo) - rect.yl).abs() <= 1e-9 * (1.0 + rect.yl.abs())
        && (curve.x_of_s(s_hi) - rect.xr).abs() <= 1e-9 * (1.0 + rect.xr.abs())
        && (curve.y_of_s(s_hi) - rect.yr).abs() <= 1e-9 * (1.0 + rect.yr.abs());
    if !ok {
        return Err(Error::Tiling(
            "curve does not span the rectangle corner to corner".into(),
        ));
    }
    Ok(())
}

/// Restrict global curve data to a cell: anchors per row/column plus values.
/// Restrict global curve data to a cell grid (public for verification).
/// Lookups are confined to the cell's parameter range so flat curve
/// stretches outside the cell cannot capture its anchors.
pub fn curve_slice(
    curve: &CurveData,
    xs: &[f64],
    ys: &[f64],
    model: &WaveSpeedModel,
    s_range: (f64, f64),
) -> CellCurve {
    let nx = xs.len();
    let ny = ys.len();
    let mut ax = vec![0.0; ny];
    let mut ay = vec![0.0; nx];
    let mut zrow = [
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
    ];
    let mut zcol = [
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
    ];
    for (j, &y) in ys.iter().enumerate() {
        let s = curve.s_of_y(y).clamp(s_range.0, s_range.1);
        ax[j] = (2.0 * s - y).clamp(xs[0], xs[nx - 1]);
        for m in 0..5 {
            zrow[m][j] = curve.z_at(m, s);
        }
    }
    for (i, &x) in xs.iter().enumerate() {
        let s = s_of_x_top(curve, x).clamp(s_range.0, s_range.1);
        ay[i] = (2.0 * s - x).clamp(ys[0], ys[ny - 1]);
        for m in 0..5 {
            zcol[m][i] = curve.z_at(m, s);
        }
    }
    let mut v = [
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
    ];
    let mut w = [
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
    ];
    for (i, &x) in xs.iter().enumerate() {
        for m in 0..5 {
            v[m][i] = curve.v_at(m, x);
        }
    }
    for (j, &y) in ys.iter().enumerate() {
        for m in 0..5 {
            w[m][j] = curve.w_at(m, y);
        }
    }
    let p: Vec<f64> = xs.iter().map(|&x| curve.p_at(x)).collect();
    let q: Vec<f64> = ys.iter().map(|&y| curve.q_at(y)).collect();
    let mut cell = CellCurve {
        ax,
        ay,
        zrow,
        zcol,
        v,
        w,
        p,
        q,
    };
    renormalize_curve(&mut cell, model);
    cell
}

/// Rightmost parameter with `cx(s) = x` (tops of vertical stretches).
fn s_of_x_top(curve: &CurveData, xq: f64) -> f64 {
    let n = curve.s.len();
    if xq < curve.cx[0] {
        return curve.s[0] + (xq - curve.cx[0]);
    }
    if xq >= curve.cx[n - 1] {
        return curve.s[n - 1] + (xq - curve.cx[n - 1]);
    }
    let p = curve.cx.partition_point(|&v| v <= xq);
    // p >= 1, cx[p-1] <= xq < cx[p]
    let (x0, x1) = (curve.cx[p - 1], curve.cx[p]);
    let (s0, s1) = (curve.s[p - 1], curve.s[p]);
    if x0 == xq || x1 == x0 {
        s0
    } else {
        s0 + (xq - x0) / (x1 - x0) * (s1 - s0)
    }
}

/// Re-derive the position/energy slopes from the time/second-energy slopes so
/// the proportionality identities hold exactly on the inflow data.
fn renormalize_curve(cell: &mut CellCurve, model: &WaveSpeedModel) {
    let nx = cell.ay.len();
    let ny = cell.ax.len();
    for i in 0..nx {
        let c = model.eval(cell.zcol[2][i]);
        cell.v[1][i] = c * cell.v[0][i];
        cell.v[3][i] = c * cell.v[4][i];
    }
    for j in 0..ny {
        let c = model.eval(cell.zrow[2][j]);
        cell.w[1][j] = -c * cell.w[0][j];
        cell.w[3][j] = -c * cell.w[4][j];
    }
}

/// Clamp round-off negatives in the monotone slopes; larger violations are
/// hard errors.
fn clamp_slopes(gs: &mut GridSolution) -> Result<()> {
    for m in [1usize, 3] {
        for arr in [&mut gs.zx[m], &mut gs.zy[m]] {
            for v in arr.data.iter_mut() {
                if *v < 0.0 {
                    if *v < -1e-7 {
                        return Err(Error::Validation(format!(
                            "negative characteristic speed or energy slope {v:.3e}"
                        )));
                    }
                    *v = 0.0;
                }
            }
        }
    }
    Ok(())
}

/// Solve the rectangle spanned by the whole curve, tiling it into cells that
/// follow the curve and sweeping outward by anti-diagonal level.
pub fn tile_solve(
    domain: &CharRectangle,
    curve: &CurveData,
    model: &WaveSpeedModel,
    params: &SolverParams,
) -> Result<GridSolution> {
    let s_lo = 0.5 * (domain.xl + domain.yl);
    let s_hi = 0.5 * (domain.xr + domain.yr);
    check_spans(curve, domain, s_lo, s_hi)?;

    let mut width = params.cell_width.min(s_hi - s_lo).max(1e-12);
    let mut solved_total = 0usize;
    loop {
        match tile_attempt(domain, curve, model, params, s_lo, s_hi, width, &mut solved_total) {
            Ok(sol) => return Ok(sol),
            Err(Error::NonContraction { .. }) => {
                width *= 0.5;
                if width < 1e-9 {
                    return Err(Error::Tiling("cell width collapsed without contraction".into()));
                }
            }
            Err(e) => return Err(e),
        }
    }
}

/// Convenience entry: tile the rectangle spanned by the curve itself.
pub fn tile_solve_curve(
    curve: &CurveData,
    model: &WaveSpeedModel,
    params: &SolverParams,
) -> Result<GridSolution> {
    let domain = CharRectangle::new(
        curve.cx[0],
        curve.cx[curve.cx.len() - 1],
        curve.cy[0],
        curve.cy[curve.cy.len() - 1],
        params.grid.max(2),
        params.grid.max(2),
    )?;
    tile_solve(&domain, curve, model, params)
}

struct CellJob {
    i: usize,
    j: usize,
    ix: (usize, usize),
    iy: (usize, usize),
}

#[allow(clippy::too_many_arguments)]
fn tile_attempt(
    domain: &CharRectangle,
    curve: &CurveData,
    model: &WaveSpeedModel,
    params: &SolverParams,
    s_lo: f64,
    s_hi: f64,
    width: f64,
    solved_total: &mut usize,
) -> Result<GridSolution> {
    // curve-parameter partition: flat-segment boundaries are mandatory
    let mut knots: Vec<f64> = vec![s_lo, s_hi];
    for seg in 0..curve.s.len() - 1 {
        let ds = curve.s[seg + 1] - curve.s[seg];
        let flat_x = (curve.cx[seg + 1] - curve.cx[seg]).abs() <= 1e-9 * ds.max(1e-12);
        let flat_y = (curve.cy[seg + 1] - curve.cy[seg]).abs() <= 1e-9 * ds.max(1e-12);
        if flat_x || flat_y {
            for &s in &[curve.s[seg], curve.s[seg + 1]] {
                if s > s_lo && s < s_hi {
                    knots.push(s);
                }
            }
        }
    }
    knots = pl::dedup_sorted(knots, 1e-12 * (1.0 + s_hi.abs()));
    // power-of-two subdivision keeps refinements nested
    let mut part: Vec<f64> = Vec::new();
    for w in knots.windows(2) {
        let n = pow2_at_least((w[1] - w[0]) / width);
        for k in 0..n {
            part.push(w[0] + (w[1] - w[0]) * k as f64 / n as f64);
        }
    }
    part.push(s_hi);
    let ncell = part.len() - 1;

    // grid lines through the curve points of the partition
    let px: Vec<f64> = part.iter().map(|&s| curve.x_of_s(s)).collect();
    let py: Vec<f64> = part.iter().map(|&s| curve.y_of_s(s)).collect();
    let hx_target = (domain.xr - domain.xl) / (params.grid.max(2) - 1) as f64;
    let hy_target = (domain.yr - domain.yl) / (params.grid.max(2) - 1) as f64;

    let (xg, cx_idx) = build_axis(&px, hx_target);
    let (yg, cy_idx) = build_axis(&py, hy_target);
    let gnx = xg.len();
    let gny = yg.len();
    if gnx < 2 || gny < 2 {
        return Err(Error::Tiling("domain degenerates to a line".into()));
    }

    let mut z = five(gnx, gny);
    let mut zx = five(gnx, gny);
    let mut zy = five(gnx, gny);
    let p: Vec<f64> = xg.iter().map(|&x| curve.p_at(x)).collect();
    let q: Vec<f64> = yg.iter().map(|&y| curve.q_at(y)).collect();
    let mut rects: Vec<CharRectangle> = Vec::new();
    let mut gap = 0.0f64;

    for level in 0..ncell {
        // collect the jobs of this anti-diagonal level
        let mut jobs: Vec<CellJob> = Vec::new();
        for i in 0..ncell {
            for j in 0..ncell {
                if i.abs_diff(j) != level {
                    continue;
                }
                jobs.push(CellJob {
                    i,
                    j,
                    ix: (cx_idx[i], cx_idx[i + 1]),
                    iy: (cy_idx[j], cy_idx[j + 1]),
                });
            }
        }
        // degenerate diagonal cells carry curve values onto their line
        if level == 0 {
            for job in &jobs {
                if job.ix.0 == job.ix.1 || job.iy.0 == job.iy.1 {
                    let sr = (part[job.i], part[job.i + 1]);
                    write_degenerate_diagonal(curve, &xg, &yg, job, sr, &mut z, &mut zx, &mut zy);
                }
            }
        }
        let work: Vec<&CellJob> = jobs
            .iter()
            .filter(|j| j.ix.0 < j.ix.1 && j.iy.0 < j.iy.1)
            .collect();
        *solved_total += work.len();
        if *solved_total > params.cell_budget {
            let j0 = work.first().map(|j| (j.i, j.j)).unwrap_or((0, 0));
            return Err(Error::CellBudget {
                budget: params.cell_budget,
                i: j0.0,
                j: j0.1,
            });
        }
        let results: Vec<(usize, Result<CellSolution>)> = work
            .par_iter()
            .enumerate()
            .map(|(k, job)| {
                let xs = &xg[job.ix.0..=job.ix.1];
                let ys = &yg[job.iy.0..=job.iy.1];
                let cell = if job.i == job.j {
                    curve_slice(curve, xs, ys, model, (part[job.i], part[job.i + 1]))
                } else {
                    edge_slice(job, xs, ys, &z, &zx, &zy, &p, &q)
                };
                (k, solve_cell(xs, ys, &cell, model, params.tol, params.max_iter))
            })
            .collect();
        let mut ordered: Vec<Option<CellSolution>> = results
            .into_iter()
            .map(|(_, r)| r)
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .map(Some)
            .collect();
        for (k, job) in work.iter().enumerate() {
            let sol = ordered[k].take().unwrap();
            gap = gap.max(sol.gap);
            blit(job, &sol, &mut z, &mut zx, &mut zy);
            rects.push(CharRectangle {
                xl: xg[job.ix.0],
                xr: xg[job.ix.1],
                yl: yg[job.iy.0],
                yr: yg[job.iy.1],
                nx: job.ix.1 - job.ix.0 + 1,
                ny: job.iy.1 - job.iy.0 + 1,
            });
        }
    }

    let mut gs = GridSolution {
        xg,
        yg,
        z,
        zx,
        zy,
        p,
        q,
        t_offset: 0.0,
        e0: curve.energy_bound(),
        zh_zv_gap: gap,
        rects,
    };
    clamp_slopes(&mut gs)?;
    Ok(gs)
}

/// Smallest power of two not below `x`.
fn pow2_at_least(x: f64) -> usize {
    let k = x.max(1.0).log2().ceil() as u32;
    1usize << k.min(24)
}

/// Per-axis global grid: partition values plus power-of-two uniform fill at
/// the target spacing; returns the grid and the partition-to-grid index map.
fn build_axis(pvals: &[f64], h_target: f64) -> (Vec<f64>, Vec<usize>) {
    let mut grid: Vec<f64> = Vec::new();
    let mut idx: Vec<usize> = Vec::with_capacity(pvals.len());
    let tol = 1e-12 * (1.0 + pvals.last().unwrap().abs());
    for (k, &v) in pvals.iter().enumerate() {
        if k > 0 {
            let prev = *grid.last().unwrap();
            let wcell = v - prev;
            if wcell > tol {
                let n = pow2_at_least(wcell / h_target);
                for m in 1..n {
                    grid.push(prev + wcell * m as f64 / n as f64);
                }
                grid.push(v);
            }
        } else {
            grid.push(v);
        }
        idx.push(grid.len() - 1);
    }
    (grid, idx)
}

/// Inner cell: curve data from the already-solved neighbor edges.
#[allow(clippy::too_many_arguments)]
fn edge_slice(
    job: &CellJob,
    xs: &[f64],
    ys: &[f64],
    z: &[Grid2; 5],
    zx: &[Grid2; 5],
    zy: &[Grid2; 5],
    p: &[f64],
    q: &[f64],
) -> CellCurve {
    let nx = xs.len();
    let ny = ys.len();
    let below = job.i > job.j; // below/right of the curve: left+top edges
    let (xa_idx, ya_idx) = if below {
        (job.ix.0, job.iy.1)
    } else {
        (job.ix.1, job.iy.0)
    };
    let ax = vec![xs[if below { 0 } else { nx - 1 }]; ny];
    let ay = vec![ys[if below { ny - 1 } else { 0 }]; nx];
    let mut zrow = [
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
    ];
    let mut zcol = [
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
    ];
    let mut v = [
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
        vec![0.0; nx],
    ];
    let mut w = [
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
        vec![0.0; ny],
    ];
    for m in 0..5 {
        for (jj, g) in (job.iy.0..=job.iy.1).enumerate() {
            zrow[m][jj] = z[m].at(xa_idx, g);
            w[m][jj] = zy[m].at(xa_idx, g);
        }
        for (ii, g) in (job.ix.0..=job.ix.1).enumerate() {
            zcol[m][ii] = z[m].at(g, ya_idx);
            v[m][ii] = zx[m].at(g, ya_idx);
        }
    }
    CellCurve {
        ax,
        ay,
        zrow,
        zcol,
        v,
        w,
        p: p[job.ix.0..=job.ix.1].to_vec(),
        q: q[job.iy.0..=job.iy.1].to_vec(),
    }
}

fn blit(job: &CellJob, sol: &CellSolution, z: &mut [Grid2; 5], zx: &mut [Grid2; 5], zy: &mut [Grid2; 5]) {
    let ny = sol.z[0].ny;
    for m in 0..5 {
        for ii in 0..sol.z[m].nx {
            for jj in 0..ny {
                let gi = job.ix.0 + ii;
                let gj = job.iy.0 + jj;
                z[m].set(gi, gj, sol.z[m].at(ii, jj));
                zx[m].set(gi, gj, sol.zx[m].at(ii, jj));
                zy[m].set(gi, gj, sol.zy[m].at(ii, jj));
            }
        }
    }
}

/// Degenerate diagonal cells (vertical or horizontal curve stretches) write
/// the curve values onto their grid line so neighbor cells can anchor there.
#[allow(clippy::too_many_arguments)]
fn write_degenerate_diagonal(
    curve: &CurveData,
    xg: &[f64],
    yg: &[f64],
    job: &CellJob,
    s_range: (f64, f64),
    z: &mut [Grid2; 5],
    zx: &mut [Grid2; 5],
    zy: &mut [Grid2; 5],
) {
    if job.ix.0 == job.ix.1 {
        let gi = job.ix.0;
        let x = xg[gi];
        for gj in job.iy.0..=job.iy.1 {
            let y = yg[gj];
            let s = curve.s_of_y(y).clamp(s_range.0, s_range.1);
            for m in 0..5 {
                z[m].set(gi, gj, curve.z_at(m, s));
                zx[m].set(gi, gj, curve.v_at(m, x));
                zy[m].set(gi, gj, curve.w_at(m, y));
            }
        }
    }
    if job.iy.0 == job.iy.1 {
        let gj = job.iy.0;
        let y = yg[gj];
        for gi in job.ix.0..=job.ix.1 {
            let x = xg[gi];
            let s = s_of_x_top(curve, x).clamp(s_range.0, s_range.1);
            for m in 0..5 {
                z[m].set(gi, gj, curve.z_at(m, s));
                zx[m].set(gi, gj, curve.v_at(m, x));
                zy[m].set(gi, gj, curve.w_at(m, y));
            }
        }
    }
}

/// Residuals of the solution-set relations over the whole grid.
pub fn check_h(gs: &GridSolution, model: &WaveSpeedModel) -> CheckReport {
    let mut rep = CheckReport::default();
    let nx = gs.xg.len();
    let ny = gs.yg.len();

    let mut worst = [(0.0f64, 0.0f64); 6];
    let mut minpos = [f64::INFINITY; 4];
    let mut jmin = f64::INFINITY;
    let mut jmax = f64::NEG_INFINITY;
    let mut kmax = 0.0f64;
    for i in 0..nx {
        for j in 0..ny {
            let u = gs.z[2].at(i, j);
            let c = model.eval(u);
            let id = |m: usize, a: &[Grid2; 5]| a[m].at(i, j);
            let checks = [
                (id(1, &gs.zx) - c * id(0, &gs.zx), id(1, &gs.zx).abs().max((c * id(0, &gs.zx)).abs())),
                (id(1, &gs.zy) + c * id(0, &gs.zy), id(1, &gs.zy).abs().max((c * id(0, &gs.zy)).abs())),
                (id(3, &gs.zx) - c * id(4, &gs.zx), id(3, &gs.zx).abs().max((c * id(4, &gs.zx)).abs())),
                (id(3, &gs.zy) + c * id(4, &gs.zy), id(3, &gs.zy).abs().max((c * id(4, &gs.zy)).abs())),
                (
                    2.0 * id(3, &gs.zx) * id(1, &gs.zx) - (c * id(2, &gs.zx)).powi(2) - c * gs.p[i] * gs.p[i],
                    (2.0 * id(3, &gs.zx) * id(1, &gs.zx)).abs().max((c * id(2, &gs.zx)).powi(2) + c * gs.p[i] * gs.p[i]),
                ),
                (
                    2.0 * id(3, &gs.zy) * id(1, &gs.zy) - (c * id(2, &gs.zy)).powi(2) - c * gs.q[j] * gs.q[j],
                    (2.0 * id(3, &gs.zy) * id(1, &gs.zy)).abs().max((c * id(2, &gs.zy)).powi(2) + c * gs.q[j] * gs.q[j]),
                ),
            ];
            for (k, (r, sc)) in checks.iter().enumerate() {
                let rel = r.abs() / sc.max(1.0);
                if rel > worst[k].0 {
                    worst[k] = (rel, gs.xg[i]);
                }
            }
            minpos[0] = minpos[0].min(id(1, &gs.zx));
            minpos[1] = minpos[1].min(id(1, &gs.zy));
            minpos[2] = minpos[2].min(id(3, &gs.zx));
            minpos[3] = minpos[3].min(id(3, &gs.zy));
            jmin = jmin.min(gs.z[3].at(i, j));
            jmax = jmax.max(gs.z[3].at(i, j));
            kmax = kmax.max(gs.z[4].at(i, j).abs());
        }
    }
    let names = [
        "speed-ratio-x",
        "speed-ratio-y",
        "energy-ratio-x",
        "energy-ratio-y",
        "energy-quadratic-x",
        "energy-quadratic-y",
    ];
    for (k, name) in names.iter().enumerate() {
        rep.push(name, worst[k].0 <= 1e-7, worst[k].0, worst[k].0, worst[k].1);
    }
    let mp = minpos.iter().fold(f64::INFINITY, |m, &v| m.min(v));
    rep.push("slopes-nonneg", mp >= 0.0, (-mp).max(0.0), 0.0, 0.0);
    let e0 = gs.e0;
    rep.push(
        "energy-window",
        jmin >= -1e-9 * (1.0 + e0) && jmax <= e0 * (1.0 + 1e-9) + 1e-12,
        (jmax - e0).max(-jmin).max(0.0),
        ((jmax - e0).max(-jmin) / (1.0 + e0)).max(0.0),
        0.0,
    );
    rep.push(
        "second-energy-bound",
        kmax <= (1.0 + model.kappa) * e0 + 1e-12,
        kmax,
        kmax / (1.0 + (1.0 + model.kappa) * e0),
        0.0,
    );
    rep
}
