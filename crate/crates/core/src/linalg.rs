//! Minimal dense matrix helpers for the n ∈ {1, 2} state dimensions used here.

/// Square matrix of order 1 or 2, row-major in a fixed-size buffer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareMat {
    pub n: usize,
    a: [f64; 4],
}

impl SquareMat {
    pub fn zero(n: usize) -> Self {
        assert!(n == 1 || n == 2);
        SquareMat { n, a: [0.0; 4] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(n: usize, rows: &[f64]) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, rows[i * n + j]);
            }
        }
        m
    }

    pub fn diag(n: usize, d: &[f64]) -> Self {
        let mut m = Self::zero(n);
        for i in 0..n {
            m.set(i, i, d[i]);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.n + j] = v;
    }

    #[inline]
    pub fn add_assign(&mut self, other: &SquareMat) {
        for k in 0..self.n * self.n {
            self.a[k] += other.a[k];
        }
    }

    pub fn scale(&self, s: f64) -> SquareMat {
        let mut out = *self;
        for k in 0..self.n * self.n {
            out.a[k] *= s;
        }
        out
    }

    pub fn add(&self, other: &SquareMat) -> SquareMat {
        let mut out = *self;
        out.add_assign(other);
        out
    }

    pub fn mul(&self, other: &SquareMat) -> SquareMat {
        let n = self.n;
        let mut out = SquareMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += self.get(i, k) * other.get(k, j);
                }
                out.set(i, j, s);
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                out[i] += self.get(i, j) * v[j];
            }
        }
        out
    }

    pub fn transpose(&self) -> SquareMat {
        let mut out = *self;
        if self.n == 2 {
            out.a[1] = self.a[2];
            out.a[2] = self.a[1];
        }
        out
    }

    pub fn det(&self) -> f64 {
        match self.n {
            1 => self.a[0],
            _ => self.a[0] * self.a[3] - self.a[1] * self.a[2],
        }
    }

    /// Eigenvalues of a symmetric matrix (ascending).
    pub fn sym_eigenvalues(&self) -> Vec<f64> {
        match self.n {
            1 => vec![self.a[0]],
            _ => {
                let tr = self.a[0] + self.a[3];
                let det = self.det();
                let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
                vec![tr / 2.0 - disc, tr / 2.0 + disc]
            }
        }
    }

    /// Positive definiteness via the leading principal minors.
    pub fn is_positive_definite(&self, tol: f64) -> bool {
        match self.n {
            1 => self.a[0] > tol,
            _ => self.a[0] > tol && self.det() > tol,
        }
    }

    /// Positive semi-definiteness of a symmetric matrix (eigenvalues ≥ −tol).
    pub fn is_positive_semidefinite(&self, tol: f64) -> bool {
        self.sym_eigenvalues().iter().all(|&e| e >= -tol)
    }

    pub fn max_abs_asymmetry(&self) -> f64 {
        if self.n == 1 {
            0.0
        } else {
            (self.a[1] - self.a[2]).abs()
        }
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Outer product v vᵀ scaled by s.
pub fn outer_scaled(v: &[f64], s: f64) -> SquareMat {
    let n = v.len();
    let mut m = SquareMat::zero(n);
    for i in 0..n {
        for j in 0..n {
            m.set(i, j, s * v[i] * v[j]);
        }
    }
    m
}
