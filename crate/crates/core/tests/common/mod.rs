//! Test-only reference routines.

use std::f64::consts::PI;

/// Physicists' Hermite polynomial times its normalization, in closed
/// polynomial form.
pub fn hermite_function(n: usize, omega: f64, x: f64) -> f64 {
    let xi = omega.sqrt() * x;
    let (mut h0, mut h1) = (1.0, 2.0 * xi);
    let h = if n == 0 {
        h0
    } else {
        for k in 1..n {
            let h2 = 2.0 * xi * h1 - 2.0 * k as f64 * h0;
            h0 = h1;
            h1 = h2;
        }
        h1
    };
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    (omega / PI).powf(0.25) / (2f64.powi(n as i32) * fact).sqrt() * h * (-0.5 * xi * xi).exp()
}

/// `<m| -1/2 d^2/dx^2 |n>` by a 5-point second difference and the
/// trapezoid rule.
pub fn kinetic_fd(m: usize, n: usize, omega: f64) -> f64 {
    let h = 1e-3;
    let half = 14.0 / omega.sqrt();
    let steps = 40_000;
    let dx = 2.0 * half / steps as f64;
    let mut sum = 0.0;
    for i in 0..=steps {
        let x = -half + dx * i as f64;
        let f = |t: f64| hermite_function(n, omega, t);
        let d2 = (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h)) / (12.0 * h * h);
        let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
        sum += w * hermite_function(m, omega, x) * (-0.5 * d2);
    }
    sum * dx
}
