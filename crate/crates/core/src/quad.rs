//! Adaptive Simpson quadrature and grid integration helpers.
//!
//! Laplace-regime integrands are sharply peaked, so everything here is
//! adaptive with a relative target of 1e−10 and an absolute floor of 1e−14.

use crate::error::{Error, Result};

pub const REL_TARGET: f64 = 1e-10;
pub const ABS_FLOOR: f64 = 1e-14;
const MAX_DEPTH: u32 = 48;

#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evals: usize,
}

fn simpson(fa: f64, fm: f64, fb: f64, h: f64) -> f64 {
    h / 6.0 * (fa + 4.0 * fm + fb)
}

struct AdaptState<'f> {
    f: &'f dyn Fn(f64) -> f64,
    rel: f64,
    abs: f64,
    evals: usize,
    err_acc: f64,
    deepest: (f64, f64),
}

impl AdaptState<'_> {
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        depth: u32,
    ) -> Result<f64> {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evals += 2;
        let left = simpson(fa, flm, fm, m - a);
        let right = simpson(fm, frm, fb, b - m);
        let delta = left + right - whole;
        let tol = (self.rel * whole.abs()).max(self.abs);
        if delta.abs() <= 15.0 * tol || depth >= MAX_DEPTH {
            if depth >= MAX_DEPTH {
                self.deepest = (a, b);
                if delta.abs() > 15.0 * tol.max(1e-12) {
                    return Err(Error::Quadrature {
                        trace: format!(
                            "max depth {MAX_DEPTH} on [{a}, {b}], residual {:.3e}",
                            delta.abs()
                        ),
                    });
                }
            }
            self.err_acc += delta.abs() / 15.0;
            return Ok(left + right + delta / 15.0);
        }
        let l = self.recurse(a, m, fa, flm, fm, left, depth + 1)?;
        let r = self.recurse(m, b, fm, frm, fb, right, depth + 1)?;
        Ok(l + r)
    }
}

/// Adaptive Simpson on [a, b].
pub fn adaptive_simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel: f64,
    abs: f64,
) -> Result<Quadrature> {
    if a == b {
        return Ok(Quadrature {
            value: 0.0,
            error_estimate: 0.0,
            evals: 0,
        });
    }
    // Seed with a few panels so a peak between the endpoints is not missed.
    let panels = 16;
    let h = (b - a) / panels as f64;
    let mut st = AdaptState {
        f,
        rel,
        abs,
        evals: 0,
        err_acc: 0.0,
        deepest: (a, b),
    };
    let mut total = 0.0;
    for k in 0..panels {
        let x0 = a + k as f64 * h;
        let x1 = x0 + h;
        let xm = 0.5 * (x0 + x1);
        let f0 = f(x0);
        let fm = f(xm);
        let f1 = f(x1);
        st.evals += 3;
        let whole = simpson(f0, fm, f1, h);
        total += st.recurse(x0, x1, f0, fm, f1, whole, 0)?;
    }
    Ok(Quadrature {
        value: total,
        error_estimate: st.err_acc,
        evals: st.evals,
    })
}

/// Adaptive Simpson with the default tolerances.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> Result<Quadrature> {
    adaptive_simpson(f, a, b, REL_TARGET, ABS_FLOOR)
}

/// ∫f over (−∞, ∞) by expanding brackets around `center` until the tail
/// increments drop below the absolute floor.
pub fn integrate_unbounded(f: &dyn Fn(f64) -> f64, center: f64, scale: f64) -> Result<Quadrature> {
    let mut radius = scale.max(1e-6);
    let mut q = integrate(f, center - radius, center + radius)?;
    for _ in 0..60 {
        let left = integrate(f, center - 2.0 * radius, center - radius)?;
        let right = integrate(f, center + radius, center + 2.0 * radius)?;
        let inc = left.value + right.value;
        q.value += inc;
        q.error_estimate += left.error_estimate + right.error_estimate;
        q.evals += left.evals + right.evals;
        radius *= 2.0;
        if inc.abs() <= ABS_FLOOR.max(REL_TARGET * q.value.abs()) {
            return Ok(q);
        }
    }
    Err(Error::Quadrature {
        trace: format!("unbounded integral did not settle (last radius {radius:.3e})"),
    })
}

/// Trapezoid rule on a (not necessarily uniform) grid.
pub fn trapezoid_grid(xs: &[f64], ys: &[f64]) -> f64 {
    debug_assert_eq!(xs.len(), ys.len());
    let mut s = 0.0;
    for i in 1..xs.len() {
        s += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    s
}

/// Composite Simpson on uniform grid values (falls back to trapezoid on the
/// last interval when the point count is even).
pub fn simpson_uniform(ys: &[f64], dx: f64) -> f64 {
    let n = ys.len();
    if n < 2 {
        return 0.0;
    }
    let odd_count = if n % 2 == 1 { n } else { n - 1 };
    let mut s = ys[0] + ys[odd_count - 1];
    for (i, &y) in ys.iter().enumerate().take(odd_count - 1).skip(1) {
        s += if i % 2 == 1 { 4.0 * y } else { 2.0 * y };
    }
    let mut total = s * dx / 3.0;
    if n % 2 == 0 {
        total += 0.5 * (ys[n - 2] + ys[n - 1]) * dx;
    }
    total
}

/// Grid integral with a Richardson error estimate from the half-resolution
/// grid. Returns (value, |value − value_half|).
pub fn simpson_with_estimate(ys: &[f64], dx: f64) -> (f64, f64) {
    let full = simpson_uniform(ys, dx);
    let half: Vec<f64> = ys.iter().step_by(2).copied().collect();
    let coarse = simpson_uniform(&half, 2.0 * dx);
    (full, (full - coarse).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn integrates_polynomial_exactly() {
        let q = integrate(&|x| x * x * x - 2.0 * x, 0.0, 2.0).unwrap();
        assert_relative_eq!(q.value, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn gaussian_over_real_line() {
        // ∫ e^{-x²/ε} dx = √(πε)
        let eps = 0.05;
        let q = integrate_unbounded(&|x| (-x * x / eps).exp(), 0.0, eps.sqrt()).unwrap();
        assert_relative_eq!(q.value, (std::f64::consts::PI * eps).sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn peaked_integrand_off_center() {
        // Peak far from the panel midpoints.
        let q = integrate(&|x: f64| (-(x - 0.731).powi(2) / 1e-4).exp(), 0.0, 1.0).unwrap();
        assert_relative_eq!(
            q.value,
            (std::f64::consts::PI * 1e-4).sqrt(),
            max_relative = 1e-8
        );
    }

    #[test]
    fn simpson_uniform_matches_adaptive() {
        let xs: Vec<f64> = (0..=400).map(|i| i as f64 * 0.0025).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (3.0 * x).sin() + x).collect();
        let grid = simpson_uniform(&ys, 0.0025);
        let adapt = integrate(&|x| (3.0 * x).sin() + x, 0.0, 1.0).unwrap();
        assert_relative_eq!(grid, adapt.value, epsilon = 1e-9);
    }
}
