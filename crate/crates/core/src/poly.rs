//! Dense polynomials in one or two variables, total degree ≤ 4.
//!
//! Coefficient functions of the operator symbol (diffusion, potential, drift,
//! jump rates) are polynomials over a declared spatial window, so all first and
//! second derivatives are closed-form. Coefficients are stored
//! lowest-degree-first; in two variables the order is graded lexicographic:
//! (0,0), (1,0), (0,1), (2,0), (1,1), (0,2), ...

use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 4;

/// Multi-indices (i, j) for 2-D monomials x^i y^j in graded-lex order.
const MONOMIALS_2D: [(u32, u32); 15] = [
    (0, 0),
    (1, 0),
    (0, 1),
    (2, 0),
    (1, 1),
    (0, 2),
    (3, 0),
    (2, 1),
    (1, 2),
    (0, 3),
    (4, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 4),
];

#[derive(Debug, Clone, PartialEq)]
pub struct Poly {
    dim: usize,
    coeffs: Vec<f64>,
}

impl Poly {
    pub fn zero(dim: usize) -> Self {
        Poly {
            dim,
            coeffs: vec![],
        }
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        Poly {
            dim,
            coeffs: vec![c],
        }
    }

    /// 1-D polynomial from coefficients, lowest degree first.
    pub fn from_coeffs_1d(coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() > MAX_DEGREE + 1 {
            return Err(Error::InvalidSymbol(format!(
                "polynomial degree {} exceeds {}",
                coeffs.len() - 1,
                MAX_DEGREE
            )));
        }
        Ok(Poly {
            dim: 1,
            coeffs: coeffs.to_vec(),
        })
    }

    /// 2-D polynomial from graded-lex coefficients, lowest total degree first.
    pub fn from_coeffs_2d(coeffs: &[f64]) -> Result<Self> {
        if coeffs.len() > MONOMIALS_2D.len() {
            return Err(Error::InvalidSymbol(format!(
                "2-D polynomial has {} coefficients, max {}",
                coeffs.len(),
                MONOMIALS_2D.len()
            )));
        }
        Ok(Poly {
            dim: 2,
            coeffs: coeffs.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    /// Largest total degree with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        let mut deg = 0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c != 0.0 {
                let d = if self.dim == 1 {
                    k
                } else {
                    let (i, j) = MONOMIALS_2D[k];
                    (i + j) as usize
                };
                deg = deg.max(d);
            }
        }
        deg
    }

    /// Exponent of variable `var` in monomial slot `k`.
    fn exponent(&self, k: usize, var: usize) -> u32 {
        if self.dim == 1 {
            k as u32
        } else {
            let (i, j) = MONOMIALS_2D[k];
            if var == 0 {
                i
            } else {
                j
            }
        }
    }

    fn slot_of(&self, exps: &[u32]) -> Option<usize> {
        if self.dim == 1 {
            Some(exps[0] as usize)
        } else {
            MONOMIALS_2D
                .iter()
                .position(|&(i, j)| i == exps[0] && j == exps[1])
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        if self.dim == 1 {
            // Horner
            self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x[0] + c)
        } else {
            let mut sum = 0.0;
            for (k, &c) in self.coeffs.iter().enumerate() {
                if c != 0.0 {
                    let (i, j) = MONOMIALS_2D[k];
                    sum += c * x[0].powi(i as i32) * x[1].powi(j as i32);
                }
            }
            sum
        }
    }

    /// Partial derivative as a new polynomial.
    pub fn partial(&self, var: usize) -> Poly {
        assert!(var < self.dim);
        let mut out = vec![0.0; self.coeffs.len()];
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let e = self.exponent(k, var);
            if e == 0 {
                continue;
            }
            let mut exps = if self.dim == 1 {
                vec![k as u32]
            } else {
                let (i, j) = MONOMIALS_2D[k];
                vec![i, j]
            };
            exps[var] -= 1;
            if let Some(slot) = self.slot_of(&exps) {
                out[slot] += c * e as f64;
            }
        }
        while out.last() == Some(&0.0) {
            out.pop();
        }
        Poly {
            dim: self.dim,
            coeffs: out,
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn horner_matches_direct_eval() {
        let p = Poly::from_coeffs_1d(&[1.0, -2.0, 0.5, 0.0, 3.0]).unwrap();
        let x: f64 = 1.7;
        let direct = 1.0 - 2.0 * x + 0.5 * x * x + 3.0 * x.powi(4);
        assert_relative_eq!(p.eval(&[x]), direct, epsilon = 1e-14);
    }

    #[test]
    fn partial_derivative_1d() {
        let p = Poly::from_coeffs_1d(&[0.0, 0.0, 1.0]).unwrap(); // x^2
        let dp = p.partial(0);
        assert_relative_eq!(dp.eval(&[3.0]), 6.0);
        let d2p = dp.partial(0);
        assert_relative_eq!(d2p.eval(&[3.0]), 2.0);
    }

    #[test]
    fn partial_derivative_2d_cross_term() {
        // p = x^2 y -> p_x = 2xy, p_xy = 2x
        let mut coeffs = vec![0.0; 8];
        coeffs[7] = 1.0; // slot (2,1)
        let p = Poly::from_coeffs_2d(&coeffs).unwrap();
        let px = p.partial(0);
        assert_relative_eq!(px.eval(&[2.0, 3.0]), 12.0);
        let pxy = px.partial(1);
        assert_relative_eq!(pxy.eval(&[2.0, 3.0]), 4.0);
    }

    #[test]
    fn degree_cap_enforced() {
        assert!(Poly::from_coeffs_1d(&[0.0; 6]).is_err());
    }

    #[test]
    fn degree_reports_total_degree() {
        let mut coeffs = vec![0.0; 9];
        coeffs[8] = 2.0; // (1,2): total degree 3
        let p = Poly::from_coeffs_2d(&coeffs).unwrap();
        assert_eq!(p.degree(), 3);
    }
}
