//! Density transport and the asymptotic solution.
//!
//! The squared amplitude ρ = φ₀² obeys the continuity equation
//! ρ_t + (∇, ẋ ρ) + (ρ/2) tr H_xp = 0, which along characteristics integrates
//! to the closed form
//!
//! ```text
//! ρ(α, t) = ρ₀(α) · det Jx(α,t)⁻¹ · exp(−∫₀ᵗ ½ tr H_xp ds).
//! ```
//!
//! Past a caustic (det Jx ≤ 0) the value is marked invalid (NaN) rather than
//! aborting: clipped branches are discarded by the min-branch selection
//! anyway. On the shock set the density carries Dirac masses whose weights
//! grow by the Rankine–Hugoniot flux balance of the incoming characteristics.

use crate::error::{Error, Result};
use crate::hamilton::{InitialData, TrajectoryBundle};
use crate::hjb::{ShockRecord, ValueField};
use crate::quad;
use crate::symbol::Symbol;

/// ρ from the characteristic formula; NaN at/past the caustic.
pub fn characteristic_density(rho0: f64, det_jx: f64, damp: f64) -> f64 {
    if det_jx > 0.0 {
        rho0 * (-damp).exp() / det_jx
    } else {
        f64::NAN
    }
}

/// Fills the per-(t, α) density array for a bundle (flat, time-major), using
/// the damping integral accumulated by the integrator at the same time step.
pub fn density_along_bundle(bundle: &TrajectoryBundle) -> Vec<f64> {
    let nt = bundle.n_times();
    let na = bundle.n_alphas();
    let mut out = vec![f64::NAN; nt * na];
    for it in 0..nt {
        for ia in 0..na {
            let st = bundle.state(it, ia);
            out[it * na + ia] = characteristic_density(bundle.rho0[ia], st.jx, st.damp);
        }
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct DeltaMass {
    pub x: f64,
    pub mass: f64,
}

/// Regular density on the selected branch plus Dirac masses on the shock set.
#[derive(Debug, Clone)]
pub struct DensityField {
    pub t: f64,
    pub x_grid: Vec<f64>,
    pub rho_reg: Vec<f64>,
    pub branch: Vec<Option<usize>>,
    pub deltas: Vec<DeltaMass>,
}

/// Regular part from the value field's selected branches (0 in vacuum).
pub fn density_field(value: &ValueField, deltas: Vec<DeltaMass>) -> Result<DensityField> {
    let mut rho_reg = Vec::with_capacity(value.x_grid.len());
    let mut branch = Vec::with_capacity(value.x_grid.len());
    for (i, cell) in value.cells.iter().enumerate() {
        match cell {
            Some(c) => {
                if c.rho.is_nan() {
                    return Err(Error::Inconsistent(format!(
                        "selected branch {} has invalid density at x={}",
                        c.branch, value.x_grid[i]
                    )));
                }
                if c.rho < 0.0 {
                    return Err(Error::NegativeDensity {
                        rho: c.rho,
                        x: value.x_grid[i],
                    });
                }
                rho_reg.push(c.rho);
                branch.push(Some(c.branch));
            }
            None => {
                rho_reg.push(0.0);
                branch.push(None);
            }
        }
    }
    Ok(DensityField {
        t: value.t,
        x_grid: value.x_grid.clone(),
        rho_reg,
        branch,
        deltas,
    })
}

/// Integrates the delta-mass flux law ė = ρ_l (v_l − ẋ_s) − ρ_r (v_r − ẋ_s)
/// over a shock record series. Incoming characteristics make both terms
/// nonnegative; a mass below −1e−8 signals a non-attracting shock.
///
/// At shock birth the one-sided densities blow up like (t − t*)^{−1/2}, so
/// when the birth time is known the integration runs in the stretched
/// variable s = √(t − t*), where the integrand 2s·ė(t* + s²) is regular;
/// without it a plain trapezoid on the record times is used.
pub fn delta_mass_evolution(
    sym: &Symbol,
    records: &[ShockRecord],
    t_birth: Option<f64>,
) -> Result<Vec<f64>> {
    let flux = |r: &ShockRecord| -> Result<f64> {
        let sp = &r.shock;
        let v_l = sym.derivatives(&[sp.x], &[sp.p_left])?.h_p[0];
        let v_r = sym.derivatives(&[sp.x], &[sp.p_right])?.h_p[0];
        Ok(sp.rho_left * (v_l - sp.speed) - sp.rho_right * (v_r - sp.speed))
    };
    let mut out = Vec::with_capacity(records.len());
    let mut e = 0.0;
    match t_birth {
        Some(t0) if !records.is_empty() && records[0].t > t0 => {
            // s-variable trapezoid with g(s) = 2s·flux; the first panel from
            // s = 0 uses the regular limit g(0⁺) ≈ g(s_1).
            let mut prev_s = 0.0;
            let mut prev_g = {
                let s1 = (records[0].t - t0).sqrt();
                2.0 * s1 * flux(&records[0])?
            };
            for r in records {
                let s = (r.t - t0).sqrt();
                let g = 2.0 * s * flux(r)?;
                e += 0.5 * (g + prev_g) * (s - prev_s);
                if e < -1e-8 {
                    return Err(Error::NonAttractingShock { mass: e });
                }
                out.push(e.max(0.0));
                prev_s = s;
                prev_g = g;
            }
        }
        _ => {
            let mut prev_flux = 0.0;
            let mut prev_t = 0.0;
            for (k, r) in records.iter().enumerate() {
                let f = flux(r)?;
                if k > 0 {
                    e += 0.5 * (f + prev_flux) * (r.t - prev_t);
                }
                if e < -1e-8 {
                    return Err(Error::NonAttractingShock { mass: e });
                }
                out.push(e.max(0.0));
                prev_flux = f;
                prev_t = r.t;
            }
        }
    }
    Ok(out)
}

/// u_as = exp(−Φ/ε)·√ρ_reg on the common grid.
#[derive(Debug, Clone)]
pub struct AsymptoticSolution {
    pub eps: f64,
    pub t: f64,
    pub x_grid: Vec<f64>,
    pub u: Vec<f64>,
    pub phi: Vec<f64>,
}

pub fn assemble_solution(
    value: &ValueField,
    dens: &DensityField,
    eps: f64,
) -> Result<AsymptoticSolution> {
    assert_eq!(value.x_grid.len(), dens.x_grid.len());
    let mut u = Vec::with_capacity(value.x_grid.len());
    let mut phi = Vec::with_capacity(value.x_grid.len());
    for (i, cell) in value.cells.iter().enumerate() {
        match cell {
            Some(c) => {
                let rho = dens.rho_reg[i];
                if rho < 0.0 {
                    return Err(Error::NegativeDensity {
                        rho,
                        x: value.x_grid[i],
                    });
                }
                u.push((-c.phi / eps).exp() * rho.sqrt());
                phi.push(c.phi);
            }
            None => {
                u.push(0.0);
                phi.push(f64::NAN);
            }
        }
    }
    Ok(AsymptoticSolution {
        eps,
        t: value.t,
        x_grid: value.x_grid.clone(),
        u,
        phi,
    })
}

/// ∫ ρ_reg dx on the field grid plus the delta masses.
pub fn total_mass(dens: &DensityField) -> f64 {
    let dx = dens.x_grid[1] - dens.x_grid[0];
    quad::simpson_uniform(&dens.rho_reg, dx) + dens.deltas.iter().map(|d| d.mass).sum::<f64>()
}

/// ∫ φ⁰(α)² dα over the initial support (the exact initial mass).
pub fn initial_mass(init: &InitialData) -> Result<f64> {
    let Some((lo, hi)) = init.phi0.support() else {
        return Ok(0.0);
    };
    Ok(quad::integrate(&|a| init.phi0.eval(a).powi(2), lo, hi)?.value)
}

/// ∫_{lo}^{hi} φ⁰(α)² dα — the initial mass carried by a label interval
/// (at a shock: the labels absorbed so far).
pub fn clipped_initial_mass(init: &InitialData, lo: f64, hi: f64) -> Result<f64> {
    if hi <= lo {
        return Ok(0.0);
    }
    Ok(quad::integrate(&|a| init.phi0.eval(a).powi(2), lo, hi)?.value)
}

/// Pushforward regular mass at time index `it` for an x-independent symbol:
/// ∫ ρ₀(α) e^{−damp} dα over retained labels (outside the clipped interval).
/// With tr H_xp = 0 the weight is exactly 1 and this is the exact
/// change-of-variables value of ∫ ρ_reg dx.
pub fn retained_label_mass(
    bundle: &TrajectoryBundle,
    it: usize,
    clipped: Option<(f64, f64)>,
) -> f64 {
    let na = bundle.n_alphas();
    let mut xs = Vec::with_capacity(na);
    let mut ys = Vec::with_capacity(na);
    for ia in 0..na {
        let a = bundle.alphas[ia];
        let inside = clipped.map(|(lo, hi)| a > lo && a < hi).unwrap_or(false);
        let w = if inside {
            0.0
        } else {
            bundle.rho0[ia] * (-bundle.damp(it, ia)).exp()
        };
        xs.push(a);
        ys.push(w);
    }
    // refine the clipped boundary by exact sub-interval quadrature of ρ₀
    let mut mass = quad::trapezoid_grid(&xs, &ys);
    if let Some((lo, hi)) = clipped {
        // trapezoid already dropped whole cells; add back the partial cells
        // via the smooth ρ₀ (x-independent weight)
        let da = xs[1] - xs[0];
        let cell_of = |a: f64| ((a - xs[0]) / da).floor() as isize;
        let il = cell_of(lo);
        let ir = cell_of(hi);
        if il >= 0 && (il as usize) < na - 1 && ir >= 0 && (ir as usize) < na - 1 && il != ir {
            let il = il as usize;
            let ir = ir as usize;
            // left partial: [xs[il], lo] retained but zeroed by the mask
            let q1 = quad::integrate(&|a| bundle.init.phi0.eval(a).powi(2), xs[il], lo)
                .map(|q| q.value)
                .unwrap_or(0.0);
            let q2 = quad::integrate(&|a| bundle.init.phi0.eval(a).powi(2), hi, xs[ir + 1])
                .map(|q| q.value)
                .unwrap_or(0.0);
            // remove the half-cell trapezoid contributions that straddle the cut
            let tr1 = 0.5 * (ys[il] + 0.0) * da;
            let tr2 = 0.5 * (0.0 + ys[ir + 1]) * da;
            mass += q1 + q2 - tr1 - tr2;
        }
    }
    mass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamilton::{integrate_bundle, ActionForm, AmplitudeForm, InitialData};
    use crate::hjb::{value_function, ShockPoint};
    use crate::manifold::snapshot;
    use crate::symbol::Symbol;
    use approx::assert_relative_eq;

    fn heat() -> Symbol {
        Symbol::heat_1d(1.0, (-12.0, 12.0))
    }

    fn bump_init(n: usize) -> InitialData {
        InitialData::new(
            ActionForm::gaussian(0.5, 0.0, 1.0),
            AmplitudeForm::single(1.0, 0.0, 3.0),
            InitialData::uniform_alphas(-4.0, 4.0, n),
        )
        .unwrap()
    }

    #[test]
    fn initial_density_is_squared_amplitude() {
        let init = bump_init(161);
        let b = integrate_bundle(&heat(), &init, 0.2, 1e-3).unwrap();
        for ia in (0..b.n_alphas()).step_by(20) {
            let a = b.alphas[ia];
            assert_relative_eq!(b.rho(0, ia), init.phi0.eval(a).powi(2), epsilon = 1e-14);
        }
    }

    #[test]
    fn heat_density_closed_form() {
        // ρ(α,t) = φ⁰(α)²/(1 + 2t S0''(α)) for the heat symbol, H_xp = 0.
        let init = bump_init(161);
        let b = integrate_bundle(&heat(), &init, 0.4, 1e-3).unwrap();
        let it = b.nearest_time_index(0.4);
        for ia in (0..b.n_alphas()).step_by(10) {
            let a = b.alphas[ia];
            let expected = init.phi0.eval(a).powi(2) / (1.0 + 0.8 * init.s0.d2(a));
            assert_relative_eq!(b.rho(it, ia), expected, epsilon = 1e-7);
        }
    }

    #[test]
    fn x_independent_symbol_has_unit_damping() {
        let init = bump_init(81);
        let sym = Symbol::new_1d(&[1.0], &[], &[0.4], vec![(0.5, vec![0.6])], (-12.0, 12.0)).unwrap();
        let b = integrate_bundle(&sym, &init, 0.3, 1e-3).unwrap();
        let it = b.nearest_time_index(0.3);
        for ia in (0..b.n_alphas()).step_by(8) {
            assert_eq!(b.damp(it, ia), 0.0);
        }
    }

    #[test]
    fn past_caustic_density_marked_invalid_not_fatal() {
        let init = bump_init(321);
        let b = integrate_bundle(&heat(), &init, 0.8, 1e-3).unwrap();
        let it = b.nearest_time_index(0.8);
        let ia = b.alphas.iter().position(|&a| a.abs() < 1e-12).unwrap();
        assert!(b.jx(it, ia) < 0.0);
        assert!(b.rho(it, ia).is_nan());
    }

    #[test]
    fn transport_amplitude_squared_matches_density() {
        // d ln φ₀/dt = −½ H_pp S_xx with S_xx = Jp/Jx; φ₀² must reproduce ρ
        // for x-independent symbols.
        let init = bump_init(81);
        let sym = Symbol::new_1d(&[1.0], &[], &[], vec![(0.8, vec![0.3])], (-12.0, 12.0)).unwrap();
        let b = integrate_bundle(&sym, &init, 0.3, 1e-3).unwrap();
        let dt = b.dt();
        for ia in (4..b.n_alphas() - 4).step_by(16) {
            let mut ln_phi = 0.5 * b.rho(0, ia).max(1e-300).ln();
            if b.rho(0, ia) == 0.0 {
                continue;
            }
            // explicit midpoint integration of the transport log-derivative
            for it in 0..b.n_times() - 1 {
                let rate = |k: usize| -> f64 {
                    let st = b.state(k, ia);
                    let d = sym.derivatives(&[st.x], &[st.p]).unwrap();
                    -0.5 * d.h_pp.get(0, 0) * (st.jp / st.jx)
                };
                ln_phi += 0.5 * (rate(it) + rate(it + 1)) * dt;
            }
            let last = b.n_times() - 1;
            let rho_transport = (2.0 * ln_phi).exp();
            assert_relative_eq!(rho_transport, b.rho(last, ia), max_relative = 1e-6);
        }
    }

    #[test]
    fn symmetric_merging_flow_delta_mass_rate() {
        // v = −sign(x), ρ = 1 both sides, static shock: ė = 2 → e(t) = 2t.
        // Realized with the heat symbol via p_l = −p_r = −1/2 · v? No:
        // v = H_p = 2p, so p_l = 0.5, p_r = −0.5 gives v_l = 1, v_r = −1,
        // RH speed (p_l + p_r) = 0.
        let sym = heat();
        let mk = |t: f64| ShockRecord {
            t,
            shock: ShockPoint {
                x: 0.0,
                p_left: 0.5,
                p_right: -0.5,
                rho_left: 1.0,
                rho_right: 1.0,
                alpha_left: -1.0,
                alpha_right: 1.0,
                speed: 0.0,
                s: 0.0,
            },
        };
        let records: Vec<ShockRecord> = (0..=100).map(|k| mk(k as f64 * 0.01)).collect();
        let e = delta_mass_evolution(&sym, &records, None).unwrap();
        assert_relative_eq!(e[100], 2.0 * 1.0, epsilon = 1e-12);
        assert_relative_eq!(e[50], 2.0 * 0.5, epsilon = 1e-12);
    }

    #[test]
    fn no_shock_means_empty_deltas_and_plain_mass() {
        let init = bump_init(321);
        let b = integrate_bundle(&heat(), &init, 0.3, 1e-3).unwrap();
        let c = snapshot(&b, 0.3).unwrap();
        let xg: Vec<f64> = (0..2048).map(|i| -4.0 + 8.0 * i as f64 / 2047.0).collect();
        let vf = value_function(&c, &xg, &heat()).unwrap();
        let df = density_field(&vf, vec![]).unwrap();
        assert!(df.deltas.is_empty());
        let m = total_mass(&df);
        let m0 = initial_mass(&b.init).unwrap();
        assert_relative_eq!(m, m0, max_relative = 2e-4);
    }

    #[test]
    fn assemble_at_time_zero_is_exact_ansatz() {
        let init = bump_init(321);
        let b = integrate_bundle(&heat(), &init, 0.2, 1e-3).unwrap();
        let c = snapshot(&b, 0.0).unwrap();
        // grid aligned with the label nodes: the t = 0 curve is the identity
        // graph, so interpolation is node-exact there
        let xg: Vec<f64> = b.alphas.iter().copied().filter(|a| a.abs() < 3.9).collect();
        let vf = value_function(&c, &xg, &heat()).unwrap();
        let df = density_field(&vf, vec![]).unwrap();
        let eps = 0.1;
        let sol = assemble_solution(&vf, &df, eps).unwrap();
        for (i, &x) in sol.x_grid.iter().enumerate() {
            let exact = (-init.s0.eval(x) / eps).exp() * init.phi0.eval(x);
            assert_relative_eq!(sol.u[i], exact, epsilon = 1e-9);
        }
        // vacuum region gives exactly zero
        let idx = sol
            .x_grid
            .iter()
            .position(|&x| x > 3.2)
            .expect("grid reaches past the support");
        assert_eq!(sol.u[idx], 0.0);
    }

    #[test]
    fn negative_density_aborts_assembly() {
        let vf = ValueField {
            t: 0.0,
            x_grid: vec![0.0, 1.0],
            cells: vec![
                Some(crate::hjb::ValueCell {
                    branch: 0,
                    phi: 0.1,
                    p: 0.0,
                    rho: 1.0,
                }),
                None,
            ],
            shocks: vec![],
        };
        let df = DensityField {
            t: 0.0,
            x_grid: vec![0.0, 1.0],
            rho_reg: vec![-0.2, 0.0],
            branch: vec![Some(0), None],
            deltas: vec![],
        };
        match assemble_solution(&vf, &df, 0.1) {
            Err(Error::NegativeDensity { .. }) => {}
            other => panic!("expected NegativeDensity, got {other:?}"),
        }
    }
}
