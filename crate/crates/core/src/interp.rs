//! Piecewise-cubic interpolation: monotone (Fritsch–Carlson) splines for
//! branch inversion and plain Hermite segments for fills.

/// Monotone piecewise-cubic Hermite interpolant. When the data are monotone
/// the interpolant is monotone, which keeps branch inversion single-valued.
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneCubic {
    /// `xs` strictly increasing.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(xs.len() >= 2);
        let n = xs.len();
        let mut d = vec![0.0; n - 1];
        for i in 0..n - 1 {
            d[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        }
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            if d[i - 1] * d[i] <= 0.0 {
                m[i] = 0.0;
            } else {
                // Harmonic mean weighted by interval lengths.
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        // Fritsch-Carlson limiter on the endpoint slopes.
        for i in [0usize, n - 1] {
            let di = if i == 0 { d[0] } else { d[n - 2] };
            if m[i] * di <= 0.0 {
                m[i] = 0.0;
            } else if m[i].abs() > 3.0 * di.abs() {
                m[i] = 3.0 * di;
            }
        }
        MonotoneCubic { xs, ys, slopes: m }
    }

    fn segment(&self, x: f64) -> usize {
        match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).expect("finite abscissa"))
        {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        hermite(self.ys[i], self.ys[i + 1], self.slopes[i] * h, self.slopes[i + 1] * h, t)
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        hermite_derivative(
            self.ys[i],
            self.ys[i + 1],
            self.slopes[i] * h,
            self.slopes[i + 1] * h,
            t,
        ) / h
    }

    pub fn x_range(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    /// Inverse lookup y ↦ x for monotone data, bisection to `tol` in y.
    pub fn invert(&self, y: f64, tol: f64) -> Option<f64> {
        let ascending = *self.ys.last().unwrap() >= self.ys[0];
        let (ylo, yhi) = if ascending {
            (self.ys[0], *self.ys.last().unwrap())
        } else {
            (*self.ys.last().unwrap(), self.ys[0])
        };
        let slack = 1e-12 * (1.0 + yhi.abs().max(ylo.abs()));
        if y < ylo - slack || y > yhi + slack {
            return None;
        }
        let (mut a, mut b) = self.x_range();
        let mut fa = self.eval(a) - y;
        let fb = self.eval(b) - y;
        // endpoint queries never bracket; resolve them directly
        if fa.abs() <= tol.max(slack) && fa.abs() <= fb.abs() {
            return Some(a);
        }
        if fb.abs() <= tol.max(slack) {
            return Some(b);
        }
        if fa.signum() == fb.signum() {
            return None;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let fm = self.eval(m) - y;
            if fm.abs() <= tol || (b - a) < f64::EPSILON * (1.0 + m.abs()) {
                return Some(m);
            }
            if (fa <= 0.0) == (fm <= 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        Some(0.5 * (a + b))
    }
}

fn hermite(y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + m0 * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + m1 * (t3 - t2)
}

fn hermite_derivative(y0: f64, y1: f64, m0: f64, m1: f64, t: f64) -> f64 {
    let t2 = t * t;
    y0 * (6.0 * t2 - 6.0 * t)
        + m0 * (3.0 * t2 - 4.0 * t + 1.0)
        + y1 * (-6.0 * t2 + 6.0 * t)
        + m1 * (3.0 * t2 - 2.0 * t)
}

/// Single cubic Hermite segment on [a, b] with prescribed endpoint values and
/// first derivatives.
#[derive(Debug, Clone, Copy)]
pub struct HermiteSegment {
    pub a: f64,
    pub b: f64,
    pub ya: f64,
    pub yb: f64,
    pub da: f64,
    pub db: f64,
}

impl HermiteSegment {
    pub fn eval(&self, x: f64) -> f64 {
        let h = self.b - self.a;
        let t = (x - self.a) / h;
        hermite(self.ya, self.yb, self.da * h, self.db * h, t)
    }

    pub fn min_on_segment(&self, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| self.eval(self.a + (self.b - self.a) * i as f64 / samples as f64))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Cubic Hermite interpolant over a full grid with 4th-order centered slopes
/// (five-point stencil in the interior); used for smooth data sampled densely
/// in its parameter, where shape preservation is not needed but accuracy is.
#[derive(Debug, Clone)]
pub struct CubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl CubicSpline {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Self {
        let n = xs.len();
        assert!(n >= 2);
        let mut slopes = vec![0.0; n];
        let d = |i: usize, j: usize| (ys[j] - ys[i]) / (xs[j] - xs[i]);
        for i in 0..n {
            slopes[i] = if i == 0 {
                if n >= 3 {
                    // one-sided 2nd order
                    2.0 * d(0, 1) - d(0, 2)
                } else {
                    d(0, 1)
                }
            } else if i == n - 1 {
                if n >= 3 {
                    2.0 * d(n - 2, n - 1) - d(n - 3, n - 1)
                } else {
                    d(n - 2, n - 1)
                }
            } else if i >= 2 && i + 2 < n && uniformish(&self_xs(&xs, i)) {
                // 4th-order central difference on a uniform five-point stencil
                let h = xs[i + 1] - xs[i];
                (ys[i - 2] - 8.0 * ys[i - 1] + 8.0 * ys[i + 1] - ys[i + 2]) / (12.0 * h)
            } else {
                d(i - 1, i + 1)
            };
        }
        CubicSpline { xs, ys, slopes }
    }

    fn segment(&self, x: f64) -> usize {
        match self
            .xs
            .binary_search_by(|v| v.partial_cmp(&x).expect("finite abscissa"))
        {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(i) => i.saturating_sub(1).min(self.xs.len() - 2),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        hermite(self.ys[i], self.ys[i + 1], self.slopes[i] * h, self.slopes[i + 1] * h, t)
    }

    pub fn eval_derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        hermite_derivative(
            self.ys[i],
            self.ys[i + 1],
            self.slopes[i] * h,
            self.slopes[i + 1] * h,
            t,
        ) / h
    }
}

fn self_xs(xs: &[f64], i: usize) -> [f64; 4] {
    [
        xs[i - 1] - xs[i - 2],
        xs[i] - xs[i - 1],
        xs[i + 1] - xs[i],
        xs[i + 2] - xs[i + 1],
    ]
}

fn uniformish(h: &[f64; 4]) -> bool {
    let h0 = h[0];
    h.iter().all(|&hi| (hi - h0).abs() <= 1e-9 * h0.abs().max(1e-30))
}

/// Bisection for a sign change of `f` on [a, b]; `f(a)` and `f(b)` must have
/// opposite signs. Refines until |b − a| ≤ tol.
pub fn bisect(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= tol {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}
