//! Wave-speed function `c(u)` with certified bounds.
//!
//! Every other module consumes the model abstractly: it only relies on
//! `1/kappa <= c <= kappa` and on the derivative bounds `k1`, `k2`.

use crate::error::Error;
use crate::Result;
use serde::Deserialize;

/// Defines `c(u)`, uniformly bounded away from zero and infinity, with two
/// bounded derivatives.
#[derive(Debug, Clone)]
pub struct WaveSpeedModel {
    kind: Kind,
    /// c range bound: 1/kappa <= c <= kappa, kappa >= 1.
    pub kappa: f64,
    /// Bound on |c'|.
    pub k1: f64,
    /// Bound on |c''|.
    pub k2: f64,
}

#[derive(Debug, Clone)]
enum Kind {
    Constant {
        c0: f64,
    },
    /// c(u) = a + b / (1 + u^2) with a >= b > 0.
    Smooth {
        a: f64,
        b: f64,
    },
    /// Monotone cubic interpolation of (u, c) samples, clamped outside.
    Tabulated {
        us: Vec<f64>,
        cs: Vec<f64>,
        /// Fritsch-Carlson cell slopes at the knots.
        ms: Vec<f64>,
    },
}

/// Scenario-config fragment for a wave-speed model.
#[derive(Debug, Clone, Deserialize)]
pub struct WaveSpeedConfig {
    pub kind: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl WaveSpeedModel {
    pub fn constant(c0: f64) -> Result<Self> {
        if !(c0.is_finite() && c0 > 0.0) {
            return Err(Error::Config(format!("constant wave speed must be positive, got {c0}")));
        }
        Ok(WaveSpeedModel {
            kind: Kind::Constant { c0 },
            kappa: c0.max(1.0 / c0).max(1.0),
            k1: 0.0,
            k2: 0.0,
        })
    }

    /// The default non-constant family `c(u) = a + b/(1+u^2)`.
    pub fn smooth(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && b > 0.0 && a >= b) {
            return Err(Error::Config(format!(
                "smooth model requires a >= b > 0, got a={a}, b={b}"
            )));
        }
        // max |c'| at u = 1/sqrt(3), max |c''| at u = 0.
        let k1 = 3.0 * 3.0f64.sqrt() / 8.0 * b;
        let k2 = 2.0 * b;
        Ok(WaveSpeedModel {
            kind: Kind::Smooth { a, b },
            kappa: (a + b).max(1.0 / a).max(1.0),
            k1,
            k2,
        })
    }

    /// Monotone-cubic table with clamped constant extrapolation. Bounds are
    /// taken from the table extrema inflated by 1%.
    pub fn tabulated(us: Vec<f64>, cs: Vec<f64>) -> Result<Self> {
        if us.len() != cs.len() || us.len() < 2 {
            return Err(Error::Config("tabulated model needs matching u/c lists, length >= 2".into()));
        }
        if !crate::pl::strictly_increasing(&us) {
            return Err(Error::Config("tabulated u values must be strictly increasing".into()));
        }
        if cs.iter().any(|&c| !(c.is_finite() && c > 0.0)) {
            return Err(Error::Config("tabulated c values must be positive".into()));
        }
        let ms = fritsch_carlson_slopes(&us, &cs);
        let mut model = WaveSpeedModel {
            kind: Kind::Tabulated { us, cs, ms },
            kappa: 1.0,
            k1: 0.0,
            k2: 0.0,
        };
        let (cmin, cmax, d1, d2) = model.scan_extrema();
        model.kappa = (cmax.max(1.0 / cmin) * 1.01).max(1.0);
        model.k1 = d1 * 1.01;
        model.k2 = d2 * 1.01;
        Ok(model)
    }

    pub fn from_config(cfg: &WaveSpeedConfig) -> Result<Self> {
        match cfg.kind.as_str() {
            "constant" => {
                let c0 = *cfg.params.first().ok_or_else(|| Error::Config("constant model needs params=[c0]".into()))?;
                Self::constant(c0)
            }
            "builtin-smooth" => {
                if cfg.params.len() != 2 {
                    return Err(Error::Config("builtin-smooth model needs params=[a, b]".into()));
                }
                Self::smooth(cfg.params[0], cfg.params[1])
            }
            "tabulated" => {
                if cfg.params.len() < 4 || cfg.params.len() % 2 != 0 {
                    return Err(Error::Config("tabulated model needs params=[u0,c0,u1,c1,...]".into()));
                }
                let us = cfg.params.iter().step_by(2).copied().collect();
                let cs = cfg.params.iter().skip(1).step_by(2).copied().collect();
                Self::tabulated(us, cs)
            }
            other => Err(Error::Config(format!("unknown wave-speed kind '{other}'"))),
        }
    }

    /// c(u). Defined for every real u.
    pub fn eval(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Constant { c0 } => *c0,
            Kind::Smooth { a, b } => a + b / (1.0 + u * u),
            Kind::Tabulated { us, cs, ms } => {
                if u <= us[0] {
                    cs[0]
                } else if u >= us[us.len() - 1] {
                    cs[cs.len() - 1]
                } else {
                    let i = crate::pl::locate(us, u);
                    hermite(us[i], us[i + 1], cs[i], cs[i + 1], ms[i], ms[i + 1], u).0
                }
            }
        }
    }

    /// c'(u) (order 1) or c''(u) (order 2).
    pub fn eval_derivative(&self, u: f64, order: u8) -> Result<f64> {
        if order != 1 && order != 2 {
            return Err(Error::Usage(format!("derivative order must be 1 or 2, got {order}")));
        }
        Ok(match &self.kind {
            Kind::Constant { .. } => 0.0,
            Kind::Smooth { b, .. } => {
                let d = 1.0 + u * u;
                if order == 1 {
                    -2.0 * b * u / (d * d)
                } else {
                    b * (6.0 * u * u - 2.0) / (d * d * d)
                }
            }
            Kind::Tabulated { us, cs, ms } => {
                if u <= us[0] || u >= us[us.len() - 1] {
                    0.0
                } else {
                    let i = crate::pl::locate(us, u);
                    let h = hermite(us[i], us[i + 1], cs[i], cs[i + 1], ms[i], ms[i + 1], u);
                    if order == 1 {
                        h.1
                    } else {
                        h.2
                    }
                }
            }
        })
    }

    /// c'(u) without the order plumbing; used in inner loops.
    #[inline]
    pub fn deriv(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::Constant { .. } => 0.0,
            Kind::Smooth { b, .. } => {
                let d = 1.0 + u * u;
                -2.0 * b * u / (d * d)
            }
            Kind::Tabulated { .. } => self.eval_derivative(u, 1).unwrap(),
        }
    }

    fn scan_extrema(&self) -> (f64, f64, f64, f64) {
        let (lo, hi) = match &self.kind {
            Kind::Tabulated { us, .. } => (us[0], us[us.len() - 1]),
            _ => (-50.0, 50.0),
        };
        let n = 20_000;
        let mut cmin = f64::INFINITY;
        let mut cmax = 0.0f64;
        let mut d1 = 0.0f64;
        let mut d2 = 0.0f64;
        for i in 0..=n {
            let u = lo + (hi - lo) * i as f64 / n as f64;
            let c = self.eval(u);
            cmin = cmin.min(c);
            cmax = cmax.max(c);
            d1 = d1.max(self.eval_derivative(u, 1).unwrap().abs());
            d2 = d2.max(self.eval_derivative(u, 2).unwrap().abs());
        }
        (cmin, cmax, d1, d2)
    }

    /// Re-check the bound invariants by dense sampling.
    pub fn validate(&self) -> Result<()> {
        let (cmin, cmax, d1, d2) = self.scan_extrema();
        if cmin < 1.0 / self.kappa - 1e-12 || cmax > self.kappa + 1e-12 {
            return Err(Error::Validation(format!(
                "c range [{cmin}, {cmax}] escapes [1/kappa, kappa] with kappa={}",
                self.kappa
            )));
        }
        if d1 > self.k1 + 1e-12 || d2 > self.k2 + 1e-12 {
            return Err(Error::Validation(format!(
                "derivative bounds exceeded: |c'| up to {d1} (k1={}), |c''| up to {d2} (k2={})",
                self.k1, self.k2
            )));
        }
        Ok(())
    }
}

/// Cubic Hermite value and first two derivatives on one cell.
fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> (f64, f64, f64) {
    let h = x1 - x0;
    let t = (x - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let v = h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1;
    let d00 = 6.0 * t2 - 6.0 * t;
    let d10 = 3.0 * t2 - 4.0 * t + 1.0;
    let d01 = -6.0 * t2 + 6.0 * t;
    let d11 = 3.0 * t2 - 2.0 * t;
    let dv = (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1;
    let e00 = 12.0 * t - 6.0;
    let e10 = 6.0 * t - 4.0;
    let e01 = -12.0 * t + 6.0;
    let e11 = 6.0 * t - 2.0;
    let ddv = (e00 * y0 + e01 * y1) / (h * h) + (e10 * m0 + e11 * m1) / h;
    (v, dv, ddv)
}

/// Knot slopes limited so the interpolant never overshoots the data.
fn fritsch_carlson_slopes(us: &[f64], cs: &[f64]) -> Vec<f64> {
    let n = us.len();
    let mut d = vec![0.0; n - 1];
    for i in 0..n - 1 {
        d[i] = (cs[i + 1] - cs[i]) / (us[i + 1] - us[i]);
    }
    let mut m = vec![0.0; n];
    m[0] = d[0];
    m[n - 1] = d[n - 2];
    for i in 1..n - 1 {
        m[i] = if d[i - 1] * d[i] <= 0.0 {
            0.0
        } else {
            0.5 * (d[i - 1] + d[i])
        };
    }
    for i in 0..n - 1 {
        if d[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
        } else {
            let alpha = m[i] / d[i];
            let beta = m[i + 1] / d[i];
            let s = alpha * alpha + beta * beta;
            if s > 9.0 {
                let tau = 3.0 / s.sqrt();
                m[i] = tau * alpha * d[i];
                m[i + 1] = tau * beta * d[i];
            }
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_model_is_constant() {
        let m = WaveSpeedModel::constant(1.0).unwrap();
        assert_eq!(m.eval(3.7), 1.0);
        assert_eq!(m.eval_derivative(5.0, 1).unwrap(), 0.0);
        m.validate().unwrap();
    }

    #[test]
    fn smooth_model_values_and_bounds() {
        // c(u) = 1 + 1/(1+u^2): c(0) = 2, kappa = 2.
        let m = WaveSpeedModel::smooth(1.0, 1.0).unwrap();
        assert_eq!(m.eval(0.0), 2.0);
        assert!((m.kappa - 2.0).abs() < 1e-15);
        // c'(1) = -2*1/(1+1)^2 = -0.5
        assert!((m.eval_derivative(1.0, 1).unwrap() + 0.5).abs() < 1e-15);
        // decays to 1 from above
        assert!(m.eval(1e6) > 1.0);
        assert!(m.eval(1e6) < 1.0 + 1e-11);
        assert!(m.eval(-1e6) >= 1.0 / m.kappa);
        m.validate().unwrap();
    }

    #[test]
    fn smooth_k1_matches_dense_scan() {
        let m = WaveSpeedModel::smooth(1.0, 1.0).unwrap();
        let mut scan = 0.0f64;
        for i in 0..200_000 {
            let u = -50.0 + 100.0 * i as f64 / 199_999.0;
            scan = scan.max(m.eval_derivative(u, 1).unwrap().abs());
        }
        assert!(scan <= m.k1 + 1e-12);
        assert!(scan >= m.k1 - 1e-4, "analytic k1 {} vs scan {}", m.k1, scan);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let models = [
            WaveSpeedModel::smooth(1.5, 0.75).unwrap(),
            WaveSpeedModel::tabulated(vec![-2.0, -1.0, 0.0, 1.0, 2.0], vec![1.0, 1.2, 1.7, 1.4, 1.1]).unwrap(),
        ];
        let h = 1e-6;
        for m in &models {
            for k in 0..100 {
                let u = -4.0 + 8.0 * (k as f64 + 0.37) / 100.0;
                let fd = (m.eval(u + h) - m.eval(u - h)) / (2.0 * h);
                let an = m.eval_derivative(u, 1).unwrap();
                assert!(
                    (fd - an).abs() <= 1e-6 * (1.0 + an.abs()),
                    "fd {fd} vs analytic {an} at u={u}"
                );
            }
        }
    }

    #[test]
    fn order_out_of_range_is_usage_error() {
        let m = WaveSpeedModel::constant(1.0).unwrap();
        assert!(matches!(m.eval_derivative(0.0, 3), Err(Error::Usage(_))));
    }

    #[test]
    fn tabulated_clamps_and_stays_in_bounds() {
        let m = WaveSpeedModel::tabulated(vec![-1.0, 0.0, 1.0], vec![1.0, 2.0, 1.5]).unwrap();
        assert_eq!(m.eval(-10.0), 1.0);
        assert_eq!(m.eval(10.0), 1.5);
        m.validate().unwrap();
        for k in 0..10_000 {
            let u = -50.0 + 100.0 * k as f64 / 9_999.0;
            let c = m.eval(u);
            assert!(c >= 1.0 / m.kappa && c <= m.kappa);
        }
    }

    #[test]
    fn bad_configs_rejected() {
        assert!(WaveSpeedModel::smooth(0.5, 1.0).is_err());
        assert!(WaveSpeedModel::constant(-1.0).is_err());
        assert!(WaveSpeedModel::tabulated(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
    }
}
