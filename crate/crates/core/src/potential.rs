//! Two-center power-exponential confinement
//!
//! `V(x) = -V0 * ( exp[-(|x+d|/R)^p] + exp[-(|x-d|/R)^p] )`
//!
//! At large `p` each term is a nearly square well of half-width `R` around
//! `-d` or `+d`. For `R > d` the wells overlap into a core-shell profile with
//! an inner floor at `-2 V0`; for `R < d` they separate into a double well.

use crate::error::{Error, Result};

/// Inner exponents above this make a term exactly zero.
const LN_OVERFLOW: f64 = 700.0;

/// Geometry of the confinement plus the contact-interaction strength.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub v0: f64,
    pub d: f64,
    pub r: f64,
    pub p: f64,
    pub lambda: f64,
}

impl Default for PotentialParams {
    fn default() -> Self {
        PotentialParams {
            v0: 10.0,
            d: 8.0,
            r: 5.0,
            p: 200.0,
            lambda: 1.0,
        }
    }
}

impl PotentialParams {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, key: &str, msg: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::invalid(key, msg.to_string()))
            }
        };
        check(self.v0.is_finite() && self.v0 >= 0.0, "V0", "need V0 >= 0")?;
        check(self.d.is_finite() && self.d >= 0.0, "d", "need d >= 0")?;
        check(self.r.is_finite() && self.r > 0.0, "R", "need R > 0")?;
        check(self.p.is_finite() && self.p >= 2.0, "p", "need p >= 2")?;
        check(
            self.lambda.is_finite() && self.lambda >= 0.0,
            "lambda",
            "need lambda >= 0",
        )
    }

    /// Outer edge of the confinement, `d + R`.
    pub fn extent(&self) -> f64 {
        self.d + self.r
    }

    /// Same geometry with `R` replaced.
    pub fn with_r(mut self, r: f64) -> Self {
        self.r = r;
        self
    }
}

/// One well, `exp(-(|x - c|/R)^p)`, evaluated through logarithms.
fn term(dist: f64, r: f64, p: f64) -> f64 {
    if dist == 0.0 {
        return 1.0;
    }
    let inner = p * (dist / r).ln();
    if inner > LN_OVERFLOW {
        0.0
    } else {
        (-inner.exp()).exp()
    }
}

/// Potential energy at `x`. Finite for every finite `x`.
pub fn v_eval(params: &PotentialParams, x: f64) -> f64 {
    let left = term((x + params.d).abs(), params.r, params.p);
    let right = term((x - params.d).abs(), params.r, params.p);
    -params.v0 * (left + right)
}

fn sort_dedup(mut pts: Vec<f64>, scale: f64) -> Vec<f64> {
    pts.sort_by(|a, b| a.total_cmp(b));
    let tol = 1e-12 * scale.max(1.0);
    pts.dedup_by(|b, a| (*b - *a).abs() <= tol);
    pts
}

/// Loci `|x +- d| = R`, sorted and deduplicated.
pub fn breakpoints(params: &PotentialParams) -> Vec<f64> {
    let (d, r) = (params.d, params.r);
    sort_dedup(vec![-d - r, -d + r, d - r, d + r], d + r)
}

/// Offsets (in units of `p * ln(|x-c|/R)`) of the extra quadrature breaks
/// placed inside the transition layer of each well edge.
const LAYER: [f64; 8] = [-24.0, -8.0, -3.0, -1.0, 1.0, 2.5, 4.0, 6.6];

/// Hardness above which edge layers get their own quadrature breaks.
const LAYER_MIN_P: f64 = 16.0;

/// Breakpoints plus points resolving the steep edge layers of hard wells.
///
/// For large `p` each term drops from ~1 to ~0 over a width of order `R/p`
/// around its breakpoint. Integrands built on `V` are smooth between these
/// points, which is what the composite Gauss rule needs.
pub fn quadrature_breaks(params: &PotentialParams) -> Vec<f64> {
    let mut pts = breakpoints(params);
    if params.p >= LAYER_MIN_P {
        for center in [-params.d, params.d] {
            for k in LAYER {
                let off = params.r * (k / params.p).exp();
                pts.push(center - off);
                pts.push(center + off);
            }
        }
    }
    sort_dedup(pts, params.extent())
}

/// Location and value of the global minimum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VMin {
    /// Non-negative representative (the potential is even).
    pub x: f64,
    pub v: f64,
}

const SAMPLES_PER_PIECE: usize = 256;

/// Global minimum of `V` by breakpoint-aware dense sampling followed by
/// golden-section refinement.
pub fn v_min(params: &PotentialParams) -> VMin {
    let (d, r) = (params.d, params.r);
    let lo = -d - r - r / 10.0;
    let hi = d + r + r / 10.0;
    let mut edges = vec![lo];
    edges.extend(breakpoints(params).into_iter().filter(|&b| b > lo && b < hi));
    edges.push(hi);

    let mut xs = Vec::with_capacity(edges.len() * SAMPLES_PER_PIECE);
    for w in edges.windows(2) {
        for k in 0..SAMPLES_PER_PIECE {
            xs.push(w[0] + (w[1] - w[0]) * k as f64 / SAMPLES_PER_PIECE as f64);
        }
    }
    xs.push(hi);

    let vals: Vec<f64> = xs.iter().map(|&x| v_eval(params, x)).collect();
    let mut best = 0;
    for (i, v) in vals.iter().enumerate() {
        if *v < vals[best] {
            best = i;
        }
    }
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(xs.len() - 1)];
    let (x, v) = golden_section(|x| v_eval(params, x), a, b, 1e-10 * r.max(1.0));
    let (x, v) = if v <= vals[best] { (x, v) } else { (xs[best], vals[best]) };
    VMin { x: x.abs(), v }
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fe = f(e);
    while (b - a).abs() > tol {
        if fc <= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = f(e);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn paper_like(r: f64) -> PotentialParams {
        PotentialParams {
            v0: 10.0,
            d: 8.0,
            r,
            p: 200.0,
            lambda: 1.0,
        }
    }

    #[test]
    fn values_at_landmarks() {
        let p = paper_like(10.0);
        assert!((v_eval(&p, 0.0) + 20.0).abs() < 1e-8);
        assert!((v_eval(&p, 8.0) + 10.0).abs() < 1e-12);
        assert!(v_eval(&p, 100.0).abs() < 1e-300);
        // exactly at a breakpoint the term is exp(-1)
        let at_edge = v_eval(&paper_like(5.0), 13.0);
        assert!((at_edge + 10.0 * (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn breakpoint_sets() {
        let mut p = paper_like(10.0);
        assert_eq!(breakpoints(&p), vec![-18.0, -2.0, 2.0, 18.0]);
        p.r = 5.0;
        assert_eq!(breakpoints(&p), vec![-13.0, -3.0, 3.0, 13.0]);
        p.d = 0.0;
        assert_eq!(breakpoints(&p), vec![-5.0, 5.0]);
    }

    #[test]
    fn minimum_by_regime() {
        let core = v_min(&paper_like(10.0));
        assert!((core.v + 20.0).abs() < 1e-6);
        assert!(core.x >= 0.0 && core.x < 2.0);
        let double = v_min(&paper_like(5.0));
        assert!((double.v + 10.0).abs() < 1e-6);
        assert!((double.x - 8.0).abs() < 5.0);
    }

    #[test]
    fn smooth_hardness_minimum() {
        // p = 2: V = -V0 (exp(-(x+d)^2/R^2) + exp(-(x-d)^2/R^2)); for d << R the
        // minimum sits at the origin
        let p = PotentialParams {
            v0: 3.0,
            d: 0.5,
            r: 4.0,
            p: 2.0,
            lambda: 0.0,
        };
        let m = v_min(&p);
        assert!(m.x < 1e-6, "{m:?}");
        assert!((m.v - v_eval(&p, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn barrier_and_core() {
        // (1 - eps/R)^200 must be tiny for the inner floor to sit at -2 V0;
        // eps = 0.1 R gives 0.9^200 ~ 7e-10
        let core = paper_like(10.0);
        let eps = 0.1 * core.r;
        let mut x = -(core.r - core.d - eps);
        while x < core.r - core.d - eps {
            assert!((v_eval(&core, x) + 20.0).abs() < 1e-6 * 10.0);
            x += 0.01;
        }
        let dbl = paper_like(5.0);
        let eps = 0.05 * dbl.r;
        let mut x = -(dbl.d - dbl.r - eps);
        while x < dbl.d - dbl.r - eps {
            assert!(v_eval(&dbl, x).abs() < 1e-6 * 10.0);
            x += 0.01;
        }
    }

    #[test]
    fn layer_breaks_are_sorted_and_contain_breakpoints() {
        let p = paper_like(7.75);
        let qb = quadrature_breaks(&p);
        assert!(qb.windows(2).all(|w| w[0] < w[1]));
        for b in breakpoints(&p) {
            assert!(qb.contains(&b));
        }
        let soft = PotentialParams { p: 4.0, ..p };
        assert_eq!(quadrature_breaks(&soft), breakpoints(&soft));
    }

    proptest! {
        #[test]
        fn even_bounded_finite(
            v0 in 0.1f64..50.0, d in 0.0f64..20.0, r in 0.1f64..40.0,
            p in 2.0f64..1e6, x in -1e4f64..1e4,
        ) {
            let params = PotentialParams { v0, d, r, p, lambda: 1.0 };
            let v = v_eval(&params, x);
            prop_assert!(v.is_finite());
            prop_assert_eq!(v.to_bits(), v_eval(&params, -x).to_bits());
            prop_assert!(v <= 0.0 && v >= -2.0 * v0);
        }

        #[test]
        fn minimum_bounds(v0 in 0.5f64..20.0, d in 0.0f64..12.0, r in 0.5f64..30.0, p in 2.0f64..400.0) {
            let params = PotentialParams { v0, d, r, p, lambda: 1.0 };
            let m = v_min(&params);
            prop_assert!(m.v >= -2.0 * v0 - 1e-12);
            prop_assert!(m.v <= v_eval(&params, d) + 1e-12);
        }
    }
}
