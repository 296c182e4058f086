//! Harmonic-oscillator orbitals and the kinetic matrix in that basis.
//!
//! Orbitals are evaluated with the normalized three-term recurrence
//!
//! ```text
//! phi_{n+1}(x) = sqrt(2 w / (n+1)) x phi_n(x) - sqrt(n / (n+1)) phi_{n-1}(x)
//! phi_0(x)     = (w / pi)^{1/4} exp(-w x^2 / 2)
//! ```
//!
//! The Gaussian factor is carried as a separate logarithmic scale so that
//! neither the seed nor the growing mantissa over- or underflows far outside
//! the classical region.

use faer::Mat;

use crate::error::{Error, Result};

/// Single-particle oscillator basis: orbitals `n = 0..m` at frequency `omega`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSpec {
    pub m: usize,
    pub omega: f64,
}

impl BasisSpec {
    pub fn new(m: usize, omega: f64) -> Result<Self> {
        let spec = BasisSpec { m, omega };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(Error::invalid("M", format!("need M >= 2, got {}", self.m)));
        }
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid(
                "omega",
                format!("need omega > 0, got {}", self.omega),
            ));
        }
        Ok(())
    }

    /// Classical turning point of the highest orbital, `sqrt((2M-1)/omega)`.
    pub fn turning_point(&self) -> f64 {
        ((2 * self.m - 1) as f64 / self.omega).sqrt()
    }

    /// Frequency that puts the outermost turning point exactly at
    /// `coverage_factor * extent`.
    pub fn auto_omega(m: usize, extent: f64, coverage_factor: f64) -> f64 {
        let reach = coverage_factor * extent;
        (2 * m - 1) as f64 / (reach * reach)
    }

    /// Fails unless `x_t >= coverage_factor * extent`.
    pub fn check_coverage(&self, extent: f64, coverage_factor: f64) -> Result<()> {
        let xt = self.turning_point();
        let required = coverage_factor * extent;
        // relative slack so the auto rule is never rejected by rounding
        if xt < required * (1.0 - 1e-12) {
            return Err(Error::Coverage {
                m: self.m,
                omega: self.omega,
                turning_point: xt,
                required,
            });
        }
        Ok(())
    }
}

const RESCALE_ABOVE: f64 = 1e200;
// 2^-600
const RESCALE_FACTOR: f64 = f64::from_bits(423 << 52);
const RESCALE_LOG: f64 = 600.0 * std::f64::consts::LN_2;

/// Runs the recurrence for `phi_0..phi_{count-1}` at one point, handing each
/// value to `emit` in order.
fn walk(count: usize, omega: f64, x: f64, mut emit: impl FnMut(usize, f64)) {
    if count == 0 {
        return;
    }
    // value_k = mantissa_k * exp(log_scale)
    let mut log_scale = -0.5 * omega * x * x;
    let mut prev = 0.0;
    let mut cur = (omega / std::f64::consts::PI).sqrt().sqrt();
    let t = (2.0 * omega).sqrt() * x;
    let value = |mant: f64, log_scale: f64| -> f64 {
        if mant == 0.0 {
            0.0
        } else if log_scale > -700.0 {
            mant * log_scale.exp()
        } else {
            mant.signum() * (mant.abs().ln() + log_scale).exp()
        }
    };
    emit(0, value(cur, log_scale));
    for n in 0..count - 1 {
        let nf = n as f64;
        let next = t / (nf + 1.0).sqrt() * cur - (nf / (nf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE_ABOVE {
            cur *= RESCALE_FACTOR;
            prev *= RESCALE_FACTOR;
            log_scale += RESCALE_LOG;
        }
        emit(n + 1, value(cur, log_scale));
    }
}

/// Normalized oscillator eigenfunction `phi_n(x)` at frequency `omega`.
pub fn ho_eval(n: usize, omega: f64, x: f64) -> f64 {
    let mut out = 0.0;
    walk(n + 1, omega, x, |k, v| {
        if k == n {
            out = v;
        }
    });
    out
}

/// Table of all orbitals at all points: row `i` is `xs[i]`, column `n` is
/// `phi_n`. One recurrence pass per point.
pub fn ho_eval_batch(spec: &BasisSpec, xs: &[f64]) -> Mat<f64> {
    let mut table = Mat::<f64>::zeros(xs.len(), spec.m);
    for (i, &x) in xs.iter().enumerate() {
        walk(spec.m, spec.omega, x, |n, v| table[(i, n)] = v);
    }
    table
}

/// Same as [`ho_eval_batch`] but written into a flat row-major buffer
/// (`out[i * m + n]`), which the quadrature loops prefer.
pub(crate) fn ho_eval_rows(spec: &BasisSpec, xs: &[f64]) -> Vec<f64> {
    let m = spec.m;
    let mut out = vec![0.0; xs.len() * m];
    for (i, &x) in xs.iter().enumerate() {
        let row = &mut out[i * m..(i + 1) * m];
        walk(m, spec.omega, x, |n, v| row[n] = v);
    }
    out
}

/// Kinetic energy `-1/2 d^2/dx^2` in the oscillator basis.
///
/// Nonzero only on the diagonal and the second off-diagonals:
/// `T_nn = (w/2)(n + 1/2)`, `T_{n,n+2} = -(w/4) sqrt((n+1)(n+2))`.
pub fn kinetic_matrix(spec: &BasisSpec) -> Mat<f64> {
    let m = spec.m;
    let w = spec.omega;
    Mat::from_fn(m, m, |i, j| {
        let (lo, hi) = (i.min(j), i.max(j));
        match hi - lo {
            0 => 0.5 * w * (lo as f64 + 0.5),
            2 => -0.25 * w * (((lo + 1) * (lo + 2)) as f64).sqrt(),
            _ => 0.0,
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn ground_orbital_at_origin() {
        let v = ho_eval(0, 1.0, 0.0);
        assert_relative_eq!(v, std::f64::consts::PI.powf(-0.25), max_relative = 1e-15);
        assert_eq!(ho_eval(1, 0.37, 0.0), 0.0);
        assert_eq!(ho_eval(5, 2.0, 0.0), 0.0);
    }

    #[test]
    fn batch_matches_pointwise() {
        let spec = BasisSpec::new(2, 1.0).unwrap();
        let t = ho_eval_batch(&spec, &[0.0]);
        assert_eq!(t[(0, 0)], ho_eval(0, 1.0, 0.0));
        assert_eq!(t[(0, 1)], 0.0);

        let spec = BasisSpec::new(40, 0.07).unwrap();
        let xs: Vec<f64> = (0..50).map(|i| -60.0 + 2.5 * i as f64).collect();
        let t = ho_eval_batch(&spec, &xs);
        for (i, &x) in xs.iter().enumerate() {
            for n in 0..spec.m {
                assert_eq!(t[(i, n)].to_bits(), ho_eval(n, spec.omega, x).to_bits());
            }
        }
    }

    #[test]
    fn no_overflow_far_out() {
        for &w in &[0.01, 1.0, 10.0] {
            let spec = BasisSpec::new(201, w).unwrap();
            let xt = spec.turning_point();
            for k in 0..=40 {
                let x = -2.0 * xt + k as f64 * xt / 10.0;
                for n in [0, 1, 50, 120, 200] {
                    let v = ho_eval(n, w, x);
                    assert!(v.is_finite(), "n={n} w={w} x={x}");
                }
            }
        }
        // deep in the forbidden region the value is tiny but not flushed to zero
        let v = ho_eval(200, 0.01, 2.0 * (399.0f64 / 0.01).sqrt());
        assert!(v != 0.0 && v.abs() < 1e-100);
    }

    #[test]
    fn kinetic_entries() {
        let t = kinetic_matrix(&BasisSpec { m: 1, omega: 2.0 });
        assert_eq!(t[(0, 0)], 0.5);

        let t = kinetic_matrix(&BasisSpec::new(6, 1.0).unwrap());
        assert_relative_eq!(t[(0, 2)], -(2.0f64).sqrt() / 4.0, max_relative = 1e-15);
        for i in 0..6 {
            for j in 0..6 {
                assert_eq!(t[(i, j)].to_bits(), t[(j, i)].to_bits());
                let gap = i.abs_diff(j);
                if gap != 0 && gap != 2 {
                    assert_eq!(t[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn coverage_and_auto_omega() {
        let w = BasisSpec::auto_omega(50, 38.0, 1.2);
        let spec = BasisSpec::new(50, w).unwrap();
        spec.check_coverage(38.0, 1.2).unwrap();
        assert!(BasisSpec::new(50, 4.0 * w)
            .unwrap()
            .check_coverage(38.0, 1.2)
            .is_err());
        assert!(BasisSpec::new(1, 1.0).is_err());
        assert!(BasisSpec::new(4, 0.0).is_err());
    }
}
