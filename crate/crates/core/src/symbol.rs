//! The Kolmogorov–Feller symbol family and its effective real Hamiltonian.
//!
//! A symbol bundles a positive diffusion matrix A(x), a potential V(x), a
//! drift B(x), and a finite atomic jump measure Σ_k λ_k(x) δ_{ν_k}. In the
//! tunnel regime u = e^{−S/ε} the jump generator u ↦ Σ λ_k (u(x−εν_k) − u(x))
//! contributes λ_k(e^{(p,ν_k)} − 1) at leading order, so the effective real
//! Hamiltonian used throughout is
//!
//! ```text
//! H(x,p) = (A(x)p, p) + V(x) + (B(x), p) + Σ_k λ_k(x) (e^{(p,ν_k)} − 1).
//! ```
//!
//! This form is real and convex in p, and satisfies the dissipativity
//! inequality Re H(x, p+iη) ≤ H(x, p) identically, which is what
//! [`check_maslov_inequality`] verifies numerically. Whether the oscillatory
//! e^{i(ξ,ν)} convention and this real tunnel convention coincide at the level
//! of the quantized operator is a known ambiguity; the crate fixes the real
//! convention and the direct finite-difference solver discretizes the same
//! object, so both halves of the test suite see one Hamiltonian.

use crate::error::{Error, Result};
use crate::linalg::{dot, outer_scaled, SquareMat};
use crate::poly::Poly;

/// Overflow guard for e^{(p,ν)}.
const EXP_ARG_MAX: f64 = 700.0;

/// One atom λ_k(x) δ_{ν_k} of the jump measure.
#[derive(Debug, Clone)]
pub struct JumpAtom {
    /// Jump displacement ν_k, length n.
    pub nu: Vec<f64>,
    /// Rate λ_k(x) ≥ 0 on the spatial window.
    pub lambda: Poly,
}

/// Immutable symbol data; all evaluation is pure.
#[derive(Debug, Clone)]
pub struct Symbol {
    dim: usize,
    /// Diffusion matrix entries, row-major (n*n polynomials).
    a: Vec<Poly>,
    v: Poly,
    b: Vec<Poly>,
    jumps: Vec<JumpAtom>,
    /// Per-axis validity window.
    window: Vec<(f64, f64)>,
    // Precomputed partial derivatives of the coefficient polynomials.
    a_dx: Vec<Vec<Poly>>,    // [i][entry]
    a_dxx: Vec<Vec<Poly>>,   // [i*n+j][entry]
    v_dx: Vec<Poly>,
    v_dxx: Vec<Poly>,        // [i*n+j]
    b_dx: Vec<Vec<Poly>>,    // [i][component]
    b_dxx: Vec<Vec<Poly>>,   // [i*n+j][component]
    lam_dx: Vec<Vec<Poly>>,  // [i][atom]
    lam_dxx: Vec<Vec<Poly>>, // [i*n+j][atom]
}

/// Structural flags computed from the coefficients, never user-asserted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymbolFlags {
    pub x_independent_b: bool,
    pub x_independent_mu: bool,
    pub zero_v: bool,
    pub linear_diagonal_b: bool,
}

/// All first and second derivatives of H at a point.
#[derive(Debug, Clone)]
pub struct Derivs {
    pub h_p: Vec<f64>,
    pub h_x: Vec<f64>,
    pub h_pp: SquareMat,
    /// Entry (i, j) = ∂²H/∂x_i ∂p_j.
    pub h_xp: SquareMat,
    pub h_xx: SquareMat,
}

#[derive(Debug, Clone)]
pub struct MaslovReport {
    pub max_violation: f64,
    pub pass: bool,
    pub samples: usize,
}

#[derive(Debug, Clone)]
pub struct MomentReport {
    pub max_residual: f64,
    pub pass: bool,
}

impl Symbol {
    /// Validates and builds a symbol. `a`, `b` are row-major / component
    /// polynomial lists; `window` is one interval per axis.
    pub fn new(
        dim: usize,
        a: Vec<Poly>,
        v: Poly,
        b: Vec<Poly>,
        jumps: Vec<JumpAtom>,
        window: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidSymbol(format!("dim must be 1 or 2, got {dim}")));
        }
        if a.len() != dim * dim {
            return Err(Error::InvalidSymbol(format!(
                "A needs {} entries, got {}",
                dim * dim,
                a.len()
            )));
        }
        if b.len() != dim {
            return Err(Error::InvalidSymbol(format!(
                "B needs {dim} components, got {}",
                b.len()
            )));
        }
        if window.len() != dim {
            return Err(Error::InvalidSymbol("window needs one interval per axis".into()));
        }
        for (lo, hi) in &window {
            if !(lo < hi) {
                return Err(Error::InvalidSymbol(format!("empty window [{lo}, {hi}]")));
            }
        }
        for (k, atom) in jumps.iter().enumerate() {
            if atom.nu.len() != dim {
                return Err(Error::InvalidSymbol(format!(
                    "jump atom {k} has nu of length {}, expected {dim}",
                    atom.nu.len()
                )));
            }
        }

        let partials = |polys: &[Poly]| -> Vec<Vec<Poly>> {
            (0..dim)
                .map(|i| polys.iter().map(|p| p.partial(i)).collect())
                .collect()
        };
        let second = |firsts: &[Vec<Poly>]| -> Vec<Vec<Poly>> {
            let mut out = Vec::with_capacity(dim * dim);
            for i in 0..dim {
                for j in 0..dim {
                    out.push(firsts[i].iter().map(|p| p.partial(j)).collect());
                }
            }
            out
        };

        let a_dx = partials(&a);
        let a_dxx = second(&a_dx);
        let v_dx: Vec<Poly> = (0..dim).map(|i| v.partial(i)).collect();
        let v_dxx: Vec<Poly> = {
            let mut out = Vec::new();
            for i in 0..dim {
                for j in 0..dim {
                    out.push(v_dx[i].partial(j));
                }
            }
            out
        };
        let b_dx = partials(&b);
        let b_dxx = second(&b_dx);
        let lams: Vec<Poly> = jumps.iter().map(|j| j.lambda.clone()).collect();
        let lam_dx = partials(&lams);
        let lam_dxx = second(&lam_dx);

        let sym = Symbol {
            dim,
            a,
            v,
            b,
            jumps,
            window,
            a_dx,
            a_dxx,
            v_dx,
            v_dxx,
            b_dx,
            b_dxx,
            lam_dx,
            lam_dxx,
        };
        sym.validate_on_window()?;
        Ok(sym)
    }

    /// Convenience constructor for 1-D symbols from plain coefficient slices.
    pub fn new_1d(
        a: &[f64],
        v: &[f64],
        b: &[f64],
        jumps: Vec<(f64, Vec<f64>)>,
        window: (f64, f64),
    ) -> Result<Self> {
        let jumps = jumps
            .into_iter()
            .map(|(nu, lam)| {
                Ok(JumpAtom {
                    nu: vec![nu],
                    lambda: Poly::from_coeffs_1d(&lam)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Symbol::new(
            1,
            vec![Poly::from_coeffs_1d(a)?],
            Poly::from_coeffs_1d(v)?,
            vec![Poly::from_coeffs_1d(b)?],
            jumps,
            vec![window],
        )
    }

    /// The pure-diffusion 1-D symbol H = a p² on the given window.
    pub fn heat_1d(a: f64, window: (f64, f64)) -> Symbol {
        Symbol::new_1d(&[a], &[], &[], vec![], window).expect("constant heat symbol is valid")
    }

    fn validate_on_window(&self) -> Result<()> {
        // A symmetric positive semi-definite and lambda >= 0 on a sample grid.
        // Pure-jump symbols carry A = 0; strict definiteness of the diffusion
        // is a separate reportable check.
        let samples = self.window_samples(33);
        for x in &samples {
            let a = self.a_at(x);
            if a.max_abs_asymmetry() > 1e-12 {
                return Err(Error::InvalidSymbol(format!(
                    "A({x:?}) is not symmetric"
                )));
            }
            if !a.is_positive_semidefinite(1e-12) {
                return Err(Error::InvalidSymbol(format!(
                    "A({x:?}) is not positive semi-definite (eigenvalues {:?})",
                    a.sym_eigenvalues()
                )));
            }
            for (k, atom) in self.jumps.iter().enumerate() {
                let lam = atom.lambda.eval(x);
                if lam < -1e-12 {
                    return Err(Error::InvalidSymbol(format!(
                        "jump rate lambda_{k}({x:?}) = {lam} < 0"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Min eigenvalue of A over a window sample grid (> 0 means strictly
    /// positive diffusion).
    pub fn diffusion_min_eigenvalue(&self) -> f64 {
        self.window_samples(33)
            .iter()
            .map(|x| self.a_at(x).sym_eigenvalues()[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Theorem-2 convexity condition: H_pp(x, p) positive definite on the
    /// given samples.
    pub fn check_hpp_positive(&self, samples: &[(Vec<f64>, Vec<f64>)]) -> Result<bool> {
        for (x, p) in samples {
            if !self.derivatives(x, p)?.h_pp.is_positive_definite(0.0) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Cartesian sample grid over the window, `per_axis` points per axis.
    pub fn window_samples(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = self
            .window
            .iter()
            .map(|&(lo, hi)| {
                (0..per_axis)
                    .map(|i| lo + (hi - lo) * i as f64 / (per_axis - 1) as f64)
                    .collect()
            })
            .collect();
        if self.dim == 1 {
            axes[0].iter().map(|&x| vec![x]).collect()
        } else {
            let mut out = Vec::with_capacity(per_axis * per_axis);
            for &x in &axes[0] {
                for &y in &axes[1] {
                    out.push(vec![x, y]);
                }
            }
            out
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn window(&self) -> &[(f64, f64)] {
        &self.window
    }

    pub fn jumps(&self) -> &[JumpAtom] {
        &self.jumps
    }

    pub fn in_window(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.window)
            .all(|(&xi, &(lo, hi))| xi >= lo && xi <= hi)
    }

    fn a_at(&self, x: &[f64]) -> SquareMat {
        let n = self.dim;
        let mut m = SquareMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                m.set(i, j, self.a[i * n + j].eval(x));
            }
        }
        m
    }

    fn b_at(&self, x: &[f64]) -> Vec<f64> {
        self.b.iter().map(|p| p.eval(x)).collect()
    }

    /// Diffusion matrix A(x).
    pub fn a_eval(&self, x: &[f64]) -> SquareMat {
        self.a_at(x)
    }

    /// Drift vector B(x).
    pub fn b_eval(&self, x: &[f64]) -> Vec<f64> {
        self.b_at(x)
    }

    /// Potential V(x).
    pub fn v_eval(&self, x: &[f64]) -> f64 {
        self.v.eval(x)
    }

    /// H(x, p); errors on exponential overflow, naming the offending atom.
    pub fn hamiltonian(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        let a = self.a_at(x);
        let mut h = dot(&a.mul_vec(p), p) + self.v.eval(x) + dot(&self.b_at(x), p);
        for (k, atom) in self.jumps.iter().enumerate() {
            let arg = dot(p, &atom.nu);
            if arg > EXP_ARG_MAX {
                return Err(Error::JumpOverflow {
                    atom: k,
                    p_dot_nu: arg,
                });
            }
            h += atom.lambda.eval(x) * (arg.exp() - 1.0);
        }
        if !h.is_finite() {
            return Err(Error::NonFinite {
                what: format!("H({x:?}, {p:?})"),
            });
        }
        Ok(h)
    }

    /// Re H(x, p + iη) for the dissipativity check:
    /// (Ap,p) − (Aη,η) + V + (B,p) + Σ λ_k (e^{(p,ν)} cos((η,ν)) − 1).
    pub fn re_hamiltonian_shifted(&self, x: &[f64], p: &[f64], eta: &[f64]) -> Result<f64> {
        let a = self.a_at(x);
        let mut h = dot(&a.mul_vec(p), p) - dot(&a.mul_vec(eta), eta)
            + self.v.eval(x)
            + dot(&self.b_at(x), p);
        for (k, atom) in self.jumps.iter().enumerate() {
            let arg = dot(p, &atom.nu);
            if arg > EXP_ARG_MAX {
                return Err(Error::JumpOverflow {
                    atom: k,
                    p_dot_nu: arg,
                });
            }
            let phase = dot(eta, &atom.nu);
            h += atom.lambda.eval(x) * (arg.exp() * phase.cos() - 1.0);
        }
        Ok(h)
    }

    /// Closed-form first and second derivatives of H.
    pub fn derivatives(&self, x: &[f64], p: &[f64]) -> Result<Derivs> {
        let n = self.dim;
        let a = self.a_at(x);
        let ap = a.mul_vec(p);

        // H_p = 2Ap + B + Σ λ e^{(p,ν)} ν
        let mut h_p: Vec<f64> = (0..n).map(|i| 2.0 * ap[i] + self.b[i].eval(x)).collect();
        // H_pp = 2A + Σ λ e^{(p,ν)} ν νᵀ
        let mut h_pp = a.scale(2.0);
        // H_x, H_xp, H_xx from coefficient partials
        let mut h_x = vec![0.0; n];
        let mut h_xp = SquareMat::zero(n);
        let mut h_xx = SquareMat::zero(n);

        for i in 0..n {
            let a_i: Vec<f64> = self.a_dx[i].iter().map(|q| q.eval(x)).collect();
            let a_i = SquareMat::from_rows(n, &a_i);
            h_x[i] = dot(&a_i.mul_vec(p), p) + self.v_dx[i].eval(x);
            for j in 0..n {
                h_x[i] += self.b_dx[i][j].eval(x) * p[j];
                // ∂²H/∂x_i∂p_j = 2(∂A/∂x_i p)_j + ∂B_j/∂x_i
                h_xp.set(
                    i,
                    j,
                    2.0 * a_i.mul_vec(p)[j] + self.b_dx[i][j].eval(x),
                );
            }
        }
        for i in 0..n {
            for j in 0..n {
                let aij: Vec<f64> = self.a_dxx[i * n + j].iter().map(|q| q.eval(x)).collect();
                let aij = SquareMat::from_rows(n, &aij);
                let mut v = dot(&aij.mul_vec(p), p) + self.v_dxx[i * n + j].eval(x);
                for c in 0..n {
                    v += self.b_dxx[i * n + j][c].eval(x) * p[c];
                }
                h_xx.set(i, j, v);
            }
        }

        for (k, atom) in self.jumps.iter().enumerate() {
            let arg = dot(p, &atom.nu);
            if arg > EXP_ARG_MAX {
                return Err(Error::JumpOverflow {
                    atom: k,
                    p_dot_nu: arg,
                });
            }
            let e = arg.exp();
            let lam = atom.lambda.eval(x);
            for i in 0..n {
                h_p[i] += lam * e * atom.nu[i];
            }
            h_pp.add_assign(&outer_scaled(&atom.nu, lam * e));
            for i in 0..n {
                let lam_i = self.lam_dx[i][k].eval(x);
                h_x[i] += lam_i * (e - 1.0);
                for j in 0..n {
                    h_xp.set(i, j, h_xp.get(i, j) + lam_i * e * atom.nu[j]);
                }
            }
            for i in 0..n {
                for j in 0..n {
                    h_xx.set(
                        i,
                        j,
                        h_xx.get(i, j) + self.lam_dxx[i * n + j][k].eval(x) * (e - 1.0),
                    );
                }
            }
        }

        Ok(Derivs {
            h_p,
            h_x,
            h_pp,
            h_xp,
            h_xx,
        })
    }

    /// Structural flags, computed from the coefficient polynomials.
    pub fn flags(&self) -> SymbolFlags {
        let x_independent_b = self.b.iter().all(|p| p.degree() == 0 || p.is_zero());
        let x_independent_mu = self
            .jumps
            .iter()
            .all(|j| j.lambda.degree() == 0 || j.lambda.is_zero());
        let zero_v = self.v.is_zero();
        // B_k affine in x_k only: every partial other than ∂B_k/∂x_k vanishes
        // and ∂B_k/∂x_k is constant.
        let linear_diagonal_b = (0..self.dim).all(|k| {
            (0..self.dim).all(|i| {
                let d = &self.b_dx[i][k];
                if i == k {
                    d.degree() == 0 || d.is_zero()
                } else {
                    d.is_zero()
                }
            })
        });
        SymbolFlags {
            x_independent_b,
            x_independent_mu,
            zero_v,
            linear_diagonal_b,
        }
    }
}

/// Max of Re H(x, p+iη) − H(x, p) over the sample grids; passes iff ≤ 1e−12.
pub fn check_maslov_inequality(
    sym: &Symbol,
    xp_grid: &[(Vec<f64>, Vec<f64>)],
    eta_grid: &[Vec<f64>],
) -> Result<MaslovReport> {
    let mut max_violation = f64::NEG_INFINITY;
    let mut samples = 0;
    for (x, p) in xp_grid {
        let h = sym.hamiltonian(x, p)?;
        for eta in eta_grid {
            let re = sym.re_hamiltonian_shifted(x, p, eta)?;
            max_violation = max_violation.max(re - h);
            samples += 1;
        }
    }
    Ok(MaslovReport {
        max_violation,
        pass: max_violation <= 1e-12,
        samples,
    })
}

/// Atomic moment condition Σ_k ν_{k,i} ∂λ_k/∂x_i(x) = 0 per axis, on a
/// window sample grid; true iff the max residual is ≤ 1e−12.
pub fn check_moment_condition(sym: &Symbol) -> MomentReport {
    let mut max_residual: f64 = 0.0;
    for x in sym.window_samples(33) {
        for i in 0..sym.dim() {
            let mut r = 0.0;
            for (k, atom) in sym.jumps.iter().enumerate() {
                r += atom.nu[i] * sym.lam_dx[i][k].eval(&x);
            }
            max_residual = max_residual.max(r.abs());
        }
    }
    MomentReport {
        pass: max_residual <= 1e-12,
        max_residual,
    }
}
