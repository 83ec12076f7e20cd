//! Finite positive Radon measures on the line and monotone sample maps.
//!
//! A measure is an absolutely continuous part (piecewise-linear cumulative
//! between grid points) plus a list of atoms. The cumulative uses the
//! open-interval convention: `cumulative(x)` is the mass of `(-inf, x)`, so
//! an atom at `a` contributes only for `x > a`. All sup-based inverses reduce
//! to exact piecewise algebra on the sampled breakpoints.

use crate::error::Error;
use crate::pl;
use crate::Result;
use serde::{Deserialize, Serialize};

/// One point mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub pos: f64,
    pub mass: f64,
}

/// Finite positive measure: density samples plus atoms.
#[derive(Debug, Clone)]
pub struct RadonMeasure {
    grid: Vec<f64>,
    /// Pointwise density samples at the grid points (advisory when the
    /// measure was built from a cumulative).
    density: Vec<f64>,
    /// Cumulative of the absolutely continuous part at the grid points;
    /// `cum_ac[0]` is the mass of `(-inf, grid[0])`.
    cum_ac: Vec<f64>,
    atoms: Vec<Atom>,
}

impl RadonMeasure {
    pub fn zero() -> Self {
        RadonMeasure {
            grid: Vec::new(),
            density: Vec::new(),
            cum_ac: Vec::new(),
            atoms: Vec::new(),
        }
    }

    /// Build from pointwise density samples (trapezoid cumulative) and atoms.
    pub fn from_density(grid: Vec<f64>, density: Vec<f64>, atoms: Vec<Atom>, left_tail: f64) -> Result<Self> {
        if grid.len() != density.len() {
            return Err(Error::Validation("density length must match grid".into()));
        }
        if !pl::strictly_increasing(&grid) {
            return Err(Error::Validation("measure grid must be strictly increasing".into()));
        }
        if density.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::Validation("density must be nonnegative and finite".into()));
        }
        if left_tail < 0.0 {
            return Err(Error::Validation("left tail mass must be nonnegative".into()));
        }
        let cum_ac = if grid.is_empty() {
            Vec::new()
        } else {
            pl::cumtrapz(&grid, &density)
                .into_iter()
                .map(|v| v + left_tail)
                .collect()
        };
        let m = RadonMeasure {
            grid,
            density,
            cum_ac,
            atoms: normalize_atoms(atoms)?,
        };
        Ok(m)
    }

    /// Build from exact cumulative values of the absolutely continuous part.
    /// Density samples are derived from the cell slopes.
    pub fn from_cumulative(grid: Vec<f64>, cum_ac: Vec<f64>, atoms: Vec<Atom>) -> Result<Self> {
        if grid.len() != cum_ac.len() {
            return Err(Error::Validation("cumulative length must match grid".into()));
        }
        if !pl::strictly_increasing(&grid) {
            return Err(Error::Validation("measure grid must be strictly increasing".into()));
        }
        if cum_ac.windows(2).any(|w| w[1] < w[0] - 1e-15 * (1.0 + w[0].abs())) {
            return Err(Error::Validation("cumulative must be nondecreasing".into()));
        }
        if cum_ac.first().map_or(false, |&v| v < 0.0) {
            return Err(Error::Validation("cumulative must be nonnegative".into()));
        }
        let n = grid.len();
        let mut density = vec![0.0; n];
        if n >= 2 {
            let slope = |i: usize| (cum_ac[i + 1] - cum_ac[i]) / (grid[i + 1] - grid[i]);
            density[0] = slope(0).max(0.0);
            density[n - 1] = slope(n - 2).max(0.0);
            for i in 1..n - 1 {
                density[i] = (0.5 * (slope(i - 1) + slope(i))).max(0.0);
            }
        }
        Ok(RadonMeasure {
            grid,
            density,
            cum_ac,
            atoms: normalize_atoms(atoms)?,
        })
    }

    /// Build from a density given as a pure atom list.
    pub fn from_atoms(atoms: Vec<Atom>) -> Result<Self> {
        Self::from_density(Vec::new(), Vec::new(), atoms, 0.0)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Mass of `(-inf, grid[0])`.
    pub fn left_tail(&self) -> f64 {
        self.cum_ac.first().copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        let ac = self.cum_ac.last().copied().unwrap_or(0.0);
        ac + self.atoms.iter().map(|a| a.mass).sum::<f64>()
    }

    /// Mass of the open interval `(-inf, x)`.
    pub fn cumulative(&self, x: f64) -> f64 {
        let ac = if self.grid.is_empty() {
            0.0
        } else {
            pl::interp_clamped(&self.grid, &self.cum_ac, x)
        };
        let atom: f64 = self.atoms.iter().take_while(|a| a.pos < x).map(|a| a.mass).sum();
        ac + atom
    }

    /// Right limit: mass of `(-inf, x]`.
    pub fn cumulative_right(&self, x: f64) -> f64 {
        let at_x: f64 = self
            .atoms
            .iter()
            .filter(|a| a.pos == x)
            .map(|a| a.mass)
            .sum();
        self.cumulative(x) + at_x
    }

    /// The map `x -> x + cumulative(x)` as explicit breakpoints; atoms become
    /// jumps. Slope is one outside the sampled range.
    pub fn id_plus_cumulative(&self) -> MonotoneMap {
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        let push = |x: f64, y: f64, xs: &mut Vec<f64>, ys: &mut Vec<f64>| {
            if xs.last().map_or(true, |&lx| x > lx || y > *ys.last().unwrap()) {
                xs.push(x);
                ys.push(y);
            }
        };
        let breakpoints: Vec<f64> = {
            let mut b: Vec<f64> = self.grid.clone();
            b.extend(self.atoms.iter().map(|a| a.pos));
            b.sort_by(|a, c| a.partial_cmp(c).unwrap());
            b.dedup();
            b
        };
        if breakpoints.is_empty() {
            return MonotoneMap::identity();
        }
        for &x in &breakpoints {
            let lo = x + self.cumulative(x);
            push(x, lo, &mut xs, &mut ys);
            let hi = x + self.cumulative_right(x);
            if hi > lo {
                push(x, hi, &mut xs, &mut ys);
            }
        }
        MonotoneMap::with_slopes(xs, ys, 1.0, 1.0)
    }

    /// Spatial reflection `x -> -x`. Requires a compactly supported measure
    /// (zero left tail), otherwise the tail mass would have no place to go.
    pub fn mirrored(&self) -> Result<RadonMeasure> {
        if self.left_tail() > 0.0 {
            return Err(Error::Validation("cannot mirror a measure with left tail mass".into()));
        }
        let atoms: Vec<Atom> = self
            .atoms
            .iter()
            .rev()
            .map(|a| Atom {
                pos: -a.pos,
                mass: a.mass,
            })
            .collect();
        if self.grid.is_empty() {
            return RadonMeasure::from_atoms(atoms);
        }
        let n = self.grid.len();
        let grid: Vec<f64> = self.grid.iter().rev().map(|x| -x).collect();
        let last = self.cum_ac[n - 1];
        let cum: Vec<f64> = (0..n).map(|k| last - self.cum_ac[n - 1 - k]).collect();
        let mut out = RadonMeasure::from_cumulative(grid, cum, atoms)?;
        out.density = self.density.iter().rev().copied().collect();
        Ok(out)
    }

    /// Invariant check: nonnegative density, positive atom masses at strictly
    /// increasing positions, finite total.
    pub fn validate(&self) -> Result<()> {
        if self.density.iter().any(|&d| d < 0.0) {
            return Err(Error::Validation("negative density sample".into()));
        }
        if !self.total().is_finite() {
            return Err(Error::Validation("total mass must be finite".into()));
        }
        Ok(())
    }
}

fn normalize_atoms(mut atoms: Vec<Atom>) -> Result<Vec<Atom>> {
    atoms.retain(|a| a.mass != 0.0);
    if atoms.iter().any(|a| !(a.mass > 0.0) || !a.pos.is_finite()) {
        return Err(Error::Validation("atom masses must be positive and positions finite".into()));
    }
    atoms.sort_by(|a, b| a.pos.partial_cmp(&b.pos).unwrap());
    if atoms.windows(2).any(|w| w[0].pos >= w[1].pos) {
        return Err(Error::Validation("atom positions must be strictly increasing".into()));
    }
    Ok(atoms)
}

/// Nondecreasing piecewise-linear map. Equal consecutive inputs encode a jump
/// (the map is left-continuous there). Linear extension with the stored
/// slopes outside the sampled range.
#[derive(Debug, Clone)]
pub struct MonotoneMap {
    xs: Vec<f64>,
    ys: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

impl MonotoneMap {
    pub fn identity() -> Self {
        MonotoneMap {
            xs: vec![0.0],
            ys: vec![0.0],
            left_slope: 1.0,
            right_slope: 1.0,
        }
    }

    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Self::checked(xs, ys, 0.0, 0.0)
    }

    pub fn with_slopes(xs: Vec<f64>, ys: Vec<f64>, left: f64, right: f64) -> Self {
        Self::checked(xs, ys, left, right).expect("monotone map samples")
    }

    fn checked(xs: Vec<f64>, ys: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::Validation("monotone map needs matching nonempty samples".into()));
        }
        if xs.windows(2).any(|w| w[1] < w[0]) || ys.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Validation("monotone map samples must be nondecreasing".into()));
        }
        Ok(MonotoneMap {
            xs,
            ys,
            left_slope,
            right_slope,
        })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    /// Left-continuous evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0] + self.left_slope * (x - self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.right_slope * (x - self.xs[n - 1]);
        }
        // first sample at or beyond x; left continuity picks the lower branch
        let p = self.xs.partition_point(|&v| v < x);
        if self.xs[p] == x {
            return self.ys[p];
        }
        let (x0, x1) = (self.xs[p - 1], self.xs[p]);
        let (y0, y1) = (self.ys[p - 1], self.ys[p]);
        y0 + (x - x0) / (x1 - x0) * (y1 - y0)
    }

    /// Right limit at `x`.
    pub fn eval_right(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x >= self.xs[n - 1] {
            return self.ys[n - 1] + self.right_slope * (x - self.xs[n - 1]);
        }
        let p = self.xs.partition_point(|&v| v <= x);
        if p == 0 {
            return self.ys[0] + self.left_slope * (x - self.xs[0]);
        }
        if self.xs[p - 1] == x {
            // last sample at x is the upper branch of a jump
            return self.ys[p - 1];
        }
        self.eval(x)
    }

    /// Generalized inverse: `sup { x : f(x') < y for all x' < x }`.
    ///
    /// Exact segment walk on the breakpoints. Flat segments at level `y`
    /// resolve to their left endpoint; jumps over `y` resolve to the jump
    /// position. Errors when `y` lies below the range of the map.
    pub fn generalized_inverse(&self, y: f64) -> Result<f64> {
        let n = self.xs.len();
        if y <= self.ys[0] {
            if self.left_slope > 0.0 {
                return Ok(self.xs[0] + (y - self.ys[0]) / self.left_slope);
            }
            if y < self.ys[0] {
                return Err(Error::Domain(format!("value {y} below the range of the map")));
            }
            return Ok(self.xs[0]);
        }
        if y > self.ys[n - 1] {
            if self.right_slope > 0.0 {
                return Ok(self.xs[n - 1] + (y - self.ys[n - 1]) / self.right_slope);
            }
            return Err(Error::Domain(format!("value {y} above the range of the map")));
        }
        // first index with ys >= y; predecessor is strictly below y
        let p = self.ys.partition_point(|&v| v < y);
        debug_assert!(p > 0 && p < n + 1);
        let (x0, x1) = (self.xs[p - 1], self.xs[p.min(n - 1)]);
        let (y0, y1) = (self.ys[p - 1], self.ys[p.min(n - 1)]);
        if x1 == x0 || y1 == y0 {
            return Ok(x1);
        }
        Ok(x0 + (y - y0) / (y1 - y0) * (x1 - x0))
    }

    /// Pre-image interval of the level `y`: `[leftmost, rightmost]` points
    /// where the (continuous) map attains `y`; both ends coincide off flats.
    pub fn level_interval(&self, y: f64) -> Result<(f64, f64)> {
        let lo = self.generalized_inverse(y)?;
        let n = self.xs.len();
        // extend right while the map stays at y
        let mut hi = lo;
        let mut p = self.xs.partition_point(|&v| v <= hi);
        while p < n && self.ys[p] <= y {
            hi = self.xs[p];
            p += 1;
        }
        Ok((lo, hi))
    }

    /// Samples of the inverse relation restricted to increasing stretches.
    pub fn is_jump_free(&self) -> bool {
        self.xs.windows(2).all(|w| w[1] > w[0]) || self.xs.len() == 1
    }
}

/// Generalized inverse of a callable nondecreasing function by bisection,
/// accurate to `1e-12 * (1 + |y|)`.
pub fn generalized_inverse_fn<F: Fn(f64) -> f64>(f: F, y: f64, lo: f64, hi: f64) -> Result<f64> {
    if f(hi) < y {
        return Err(Error::Domain("target above range on the bracket".into()));
    }
    if f(lo) >= y {
        return Err(Error::Domain("target below range on the bracket".into()));
    }
    let tol = 1e-12 * (1.0 + y.abs());
    Ok(pl::bisect_leftmost_root(|x| f(x) - y, lo, hi, tol))
}

/// Push-forward of `weight(x) dx` under a continuous nondecreasing map given
/// by samples `(f_xs -> f_ys)`; `weight_cum` holds the exact antiderivative of
/// the weight at `f_xs` (first entry zero). Cells whose image is shorter than
/// `flat_tol` collapse into atoms at the common image point.
pub fn push_forward_cum(f_xs: &[f64], f_ys: &[f64], weight_cum: &[f64], flat_tol: f64) -> Result<RadonMeasure> {
    if f_xs.len() != f_ys.len() || f_xs.len() != weight_cum.len() || f_xs.len() < 2 {
        return Err(Error::Validation("push-forward needs matching samples (len >= 2)".into()));
    }
    let scale = 1.0 + f_ys.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = flat_tol * scale;
    let mut grid: Vec<f64> = Vec::new();
    let mut cum: Vec<f64> = Vec::new();
    let mut atoms: Vec<Atom> = Vec::new();
    let n = f_xs.len();
    let mut i = 0;
    // pending mass accumulated over flat cells, assigned to the image point
    while i < n {
        // group [i, j] of samples whose images agree within tol
        let mut j = i;
        while j + 1 < n && f_ys[j + 1] - f_ys[i] <= tol {
            j += 1;
        }
        let image = f_ys[i];
        let mass = weight_cum[j] - weight_cum[i];
        if grid.last().map_or(true, |&g| image > g) {
            grid.push(image);
            cum.push(weight_cum[i] - weight_cum[0]);
        }
        if mass > 0.0 {
            // flat stretch carrying mass: an atom at the image point
            atoms.push(Atom { pos: image, mass });
            // subsequent ac cumulative excludes atom mass
        }
        i = j + 1;
    }
    // shift ac cumulative so atoms are not double counted
    let mut atom_before = 0.0;
    let mut ai = 0;
    for (k, &g) in grid.iter().enumerate() {
        while ai < atoms.len() && atoms[ai].pos < g {
            atom_before += atoms[ai].mass;
            ai += 1;
        }
        cum[k] -= atom_before;
        if k > 0 && cum[k] < cum[k - 1] {
            cum[k] = cum[k - 1];
        }
    }
    // merge atoms at coinciding positions
    let mut merged: Vec<Atom> = Vec::new();
    for a in atoms {
        match merged.last_mut() {
            Some(last) if a.pos - last.pos <= tol => last.mass += a.mass,
            _ => merged.push(a),
        }
    }
    if grid.len() < 2 {
        return RadonMeasure::from_atoms(merged);
    }
    RadonMeasure::from_cumulative(grid, cum, merged)
}

/// Push-forward with pointwise weight samples (trapezoid antiderivative).
pub fn push_forward(f: &MonotoneMap, weights: &[f64], flat_tol: f64) -> Result<RadonMeasure> {
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Validation("push-forward weights must be nonnegative".into()));
    }
    if weights.len() != f.xs().len() {
        return Err(Error::Validation("weights must be sampled on the map grid".into()));
    }
    let cum = pl::cumtrapz(f.xs(), weights);
    push_forward_cum(f.xs(), f.ys(), &cum, flat_tol)
}

pub const FLAT_TOL: f64 = 1e-13;

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn arctan_measure_exact(n: usize, a: f64) -> RadonMeasure {
        // cumulative arctan(x) + pi/2 sampled exactly
        let grid: Vec<f64> = (0..n).map(|i| -a + 2.0 * a * i as f64 / (n - 1) as f64).collect();
        let cum: Vec<f64> = grid.iter().map(|x| x.atan() + PI / 2.0).collect();
        RadonMeasure::from_cumulative(grid, cum, vec![]).unwrap()
    }

    #[test]
    fn zero_measure_cumulative_is_zero() {
        let m = RadonMeasure::zero();
        assert_eq!(m.cumulative(-3.0), 0.0);
        assert_eq!(m.cumulative(7.0), 0.0);
        assert_eq!(m.total(), 0.0);
    }

    #[test]
    fn arctan_cumulative_from_density() {
        // density 1/(1+x^2) with the exact left tail
        let n = 20_001;
        let a = 50.0;
        let grid: Vec<f64> = (0..n).map(|i| -a + 2.0 * a * i as f64 / (n - 1) as f64).collect();
        let dens: Vec<f64> = grid.iter().map(|x| 1.0 / (1.0 + x * x)).collect();
        let tail = (-a.atan()) + PI / 2.0;
        let m = RadonMeasure::from_density(grid, dens, vec![], tail).unwrap();
        assert!((m.cumulative(0.0) - PI / 2.0).abs() < 2e-5);
        // right tail is not represented; total stops at the grid end
        assert!((m.total() - (PI / 2.0 + 50.0f64.atan())).abs() < 2e-4);
    }

    #[test]
    fn arctan_cumulative_exact_breakpoints() {
        let m = arctan_measure_exact(2001, 50.0);
        assert!((m.cumulative(0.0) - PI / 2.0).abs() < 1e-13);
    }

    #[test]
    fn atom_cumulative_is_left_continuous() {
        let m = RadonMeasure::from_atoms(vec![Atom { pos: 0.0, mass: 1.0 }]).unwrap();
        assert_eq!(m.cumulative(0.0), 0.0);
        assert_eq!(m.cumulative_right(0.0), 1.0);
        assert_eq!(m.cumulative(1e-12), 1.0);
        assert_eq!(m.total(), 1.0);
    }

    #[test]
    fn generalized_inverse_identity() {
        let f = MonotoneMap::identity();
        assert_eq!(f.generalized_inverse(2.5).unwrap(), 2.5);
    }

    #[test]
    fn generalized_inverse_step() {
        // f(x) = x + H(x): jump at 0 from 0 to 1.
        let f = MonotoneMap::with_slopes(vec![-5.0, 0.0, 0.0, 5.0], vec![-5.0, 0.0, 1.0, 6.0], 1.0, 1.0);
        assert_eq!(f.generalized_inverse(0.5).unwrap(), 0.0);
        assert_eq!(f.generalized_inverse(1.5).unwrap(), 0.5);
        assert_eq!(f.generalized_inverse(-1.0).unwrap(), -1.0);
    }

    #[test]
    fn generalized_inverse_bisection_arctan() {
        let f = |x: f64| x.atan() + x + PI / 2.0;
        let r = generalized_inverse_fn(f, PI / 2.0, -100.0, 100.0).unwrap();
        assert!(r.abs() < 1e-11, "root {r}");
    }

    #[test]
    fn generalized_inverse_below_range_errors() {
        let f = MonotoneMap::with_slopes(vec![0.0, 1.0], vec![0.0, 1.0], 0.0, 0.0);
        assert!(matches!(f.generalized_inverse(-1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn push_forward_identity_keeps_density() {
        let xs: Vec<f64> = (0..101).map(|i| i as f64 / 100.0).collect();
        let f = MonotoneMap::with_slopes(xs.clone(), xs.clone(), 1.0, 1.0);
        let w: Vec<f64> = xs.iter().map(|x| 1.0 + x * x).collect();
        let m = push_forward(&f, &w, FLAT_TOL).unwrap();
        assert!(m.atoms().is_empty());
        assert!((m.total() - crate::pl::trapz(&xs, &w)).abs() < 1e-14);
        for (i, &x) in xs.iter().enumerate().step_by(10) {
            assert!((m.density()[i] - w[i]).abs() < 1e-2);
            let _ = x;
        }
    }

    #[test]
    fn push_forward_flat_produces_atom() {
        let xs = vec![-1.0, 0.0, 1.0, 2.0];
        let ys = vec![-1.0, 0.0, 0.0, 1.0];
        let f = MonotoneMap::with_slopes(xs, ys, 1.0, 1.0);
        let w = vec![0.0, 1.0, 1.0, 0.0];
        let m = push_forward(&f, &w, FLAT_TOL).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert!((m.atoms()[0].pos - 0.0).abs() < 1e-15);
        assert!((m.atoms()[0].mass - 1.0).abs() < 1e-14);
    }

    #[test]
    fn push_forward_reconstructs_unit_atom() {
        // x1 for a unit atom at 0; weights J1' = 1 - x1'.
        let atom = RadonMeasure::from_atoms(vec![Atom { pos: 0.0, mass: 1.0 }]).unwrap();
        let f = atom.id_plus_cumulative();
        // invert to get x1 on an X grid
        let xg: Vec<f64> = (0..41).map(|i| -2.0 + 4.0 * i as f64 / 40.0).collect();
        let x1: Vec<f64> = xg.iter().map(|&x| f.generalized_inverse(x).unwrap()).collect();
        let j1: Vec<f64> = xg.iter().zip(&x1).map(|(x, v)| x - v).collect();
        let m = push_forward_cum(&xg, &x1, &j1, FLAT_TOL).unwrap();
        assert_eq!(m.atoms().len(), 1);
        assert!((m.atoms()[0].mass - 1.0).abs() < 1e-12);
        assert!(m.atoms()[0].pos.abs() < 1e-12);
        // cumulative round trip
        assert!((m.cumulative(0.0) - atom.cumulative(0.0)).abs() < 1e-12);
        assert!((m.cumulative(0.5) - atom.cumulative(0.5)).abs() < 1e-12);
    }

    #[test]
    fn id_plus_cumulative_has_unit_extra_slope() {
        let grid: Vec<f64> = (0..11).map(|i| i as f64).collect();
        let dens = vec![0.5; 11];
        let m = RadonMeasure::from_density(grid, dens, vec![Atom { pos: 3.5, mass: 2.0 }], 0.0).unwrap();
        let f = m.id_plus_cumulative();
        // slope >= 1 between atoms
        assert!(f.eval(2.0) - f.eval(1.0) >= 1.0);
        // jump of exactly the atom mass at the atom
        assert!((f.eval_right(3.5) - f.eval(3.5) - 2.0).abs() < 1e-14);
    }
}
