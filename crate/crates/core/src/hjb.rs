//! Value function and shock machinery.
//!
//! At a point covered by several action branches the physically selected value
//! is Φ(x,t) = min_j S_j(x,t); the non-minimal branches are exponentially
//! dominated in the tunnel scaling. Φ is continuous, its derivative p = Φ_x
//! jumps at the branch-switch points, and in one dimension p = S_x solves the
//! conservation law p_t + ∂_x H(x,p) = 0, so the switch point moves with the
//! Rankine–Hugoniot speed ΔH/Δp. The same shock position is fixed
//! geometrically by the equal-area rule on the folded Lagrangian curve; the
//! two locators are kept as independent routes and cross-checked, never
//! merged.
//!
//! The weak-asymptotics side is the Heaviside product identity
//!
//! ```text
//! H(φ₁−x)H(φ₂−x) = B((φ₂−φ₁)/μ) H(φ₁−x) + (1−B((φ₂−φ₁)/μ)) H(φ₂−x) + O_{D'}(μ)
//! ```
//!
//! with switch function B(z) = (1 + tanh z)/2 (smooth, B(z)+B(−z)=1, correct
//! limits at ±∞; any function with these properties would do).

use crate::error::{Error, Result};
use crate::hamilton::TrajectoryBundle;
use crate::interp::{bisect, CubicSpline};
use crate::manifold::{branches_at, snapshot_fast, BranchValue, LagrangianCurve};
use crate::oracle::TestFunction;
use crate::quad;
use crate::symbol::Symbol;

#[derive(Debug, Clone, Copy)]
pub struct ValueCell {
    pub branch: usize,
    pub phi: f64,
    pub p: f64,
    pub rho: f64,
}

/// A jump of Φ_x: position, one-sided momenta and densities, and the
/// Rankine–Hugoniot speed.
#[derive(Debug, Clone, Copy)]
pub struct ShockPoint {
    pub x: f64,
    pub p_left: f64,
    pub p_right: f64,
    pub rho_left: f64,
    pub rho_right: f64,
    pub alpha_left: f64,
    pub alpha_right: f64,
    pub speed: f64,
    /// Common action value Φ(x_s) of the crossing branches.
    pub s: f64,
}

#[derive(Debug, Clone)]
pub struct ValueField {
    pub t: f64,
    pub x_grid: Vec<f64>,
    pub cells: Vec<Option<ValueCell>>,
    pub shocks: Vec<ShockPoint>,
}

/// One sample of a shock trajectory in time.
#[derive(Debug, Clone, Copy)]
pub struct ShockRecord {
    pub t: f64,
    pub shock: ShockPoint,
}

/// Pointwise minimum over branch values.
pub fn select_min(vals: &[BranchValue]) -> Option<&BranchValue> {
    vals.iter()
        .min_by(|a, b| a.s.partial_cmp(&b.s).expect("finite actions"))
}

/// Builds the value field Φ = min_j S_j on the grid and refines every branch
/// switch into a [`ShockPoint`] by bisection on S_{j1} − S_{j2} to 1e−10.
pub fn value_function(curve: &LagrangianCurve, x_grid: &[f64], sym: &Symbol) -> Result<ValueField> {
    let (hull_lo, hull_hi) = curve.projection_hull();
    let mut cells: Vec<Option<ValueCell>> = Vec::with_capacity(x_grid.len());
    for &x in x_grid {
        let vals = branches_at(curve, x);
        match select_min(&vals) {
            Some(v) => cells.push(Some(ValueCell {
                branch: v.branch,
                phi: v.s,
                p: v.p,
                rho: v.rho,
            })),
            None => {
                let margin = 1e-9 * (1.0 + x.abs());
                if x > hull_lo + margin && x < hull_hi - margin {
                    return Err(Error::EmptyBranchInHull { x });
                }
                cells.push(None);
            }
        }
    }

    let mut shocks = Vec::new();
    for i in 0..x_grid.len() - 1 {
        let (Some(a), Some(b)) = (&cells[i], &cells[i + 1]) else {
            continue;
        };
        if a.branch == b.branch {
            continue;
        }
        let ba = &curve.branches[a.branch];
        let bb = &curve.branches[b.branch];
        // genuine crossing only when both branches cover the whole cell;
        // otherwise the selected branch simply terminates at a fold and Φ
        // stays C¹ there.
        if !(ba.covers(x_grid[i]) && ba.covers(x_grid[i + 1]) && bb.covers(x_grid[i]) && bb.covers(x_grid[i + 1])) {
            continue;
        }
        if let Some(sp) = refine_crossing(curve, sym, a.branch, b.branch, x_grid[i], x_grid[i + 1])? {
            shocks.push(sp);
        }
    }
    Ok(ValueField {
        t: curve.t,
        x_grid: x_grid.to_vec(),
        cells,
        shocks,
    })
}

fn refine_crossing(
    curve: &LagrangianCurve,
    sym: &Symbol,
    left_branch: usize,
    right_branch: usize,
    x_lo: f64,
    x_hi: f64,
) -> Result<Option<ShockPoint>> {
    let ds = |x: f64| -> f64 {
        let sa = curve.branches[left_branch].value_at(x).map(|v| v.s);
        let sb = curve.branches[right_branch].value_at(x).map(|v| v.s);
        match (sa, sb) {
            (Some(sa), Some(sb)) => sa - sb,
            _ => f64::NAN,
        }
    };
    let Some(x_s) = bisect(&ds, x_lo, x_hi, 1e-10) else {
        return Ok(None);
    };
    let va = curve.branches[left_branch]
        .value_at(x_s)
        .ok_or_else(|| Error::Inconsistent(format!("left branch lost at x={x_s}")))?;
    let vb = curve.branches[right_branch]
        .value_at(x_s)
        .ok_or_else(|| Error::Inconsistent(format!("right branch lost at x={x_s}")))?;
    let speed = shock_speed_rh(sym, x_s, va.p, vb.p)?;
    Ok(Some(ShockPoint {
        x: x_s,
        p_left: va.p,
        p_right: vb.p,
        rho_left: va.rho,
        rho_right: vb.rho,
        alpha_left: va.alpha,
        alpha_right: vb.alpha,
        speed,
        s: 0.5 * (va.s + vb.s),
    }))
}

/// Rankine–Hugoniot speed ΔH/Δp (the jump ratio) for the momentum
/// conservation law.
pub fn shock_speed_rh(sym: &Symbol, x_s: f64, p_left: f64, p_right: f64) -> Result<f64> {
    let gap = p_left - p_right;
    if gap.abs() < 1e-12 {
        return Err(Error::DegenerateShock { gap: gap.abs() });
    }
    let hl = sym.hamiltonian(&[x_s], &[p_left])?;
    let hr = sym.hamiltonian(&[x_s], &[p_right])?;
    Ok((hl - hr) / gap)
}

/// Equal-area (Maxwell) position on a three-valued region: the root of
///
/// ```text
/// G(ξ) = ∫_{α₁(ξ)}^{α₃(ξ)} (x(α) − ξ) p'(α) dα,
/// ```
///
/// the signed lobe-area balance cut by the vertical line at ξ. p'(α) comes
/// from the integrated variational system, not from differencing.
pub fn shock_position_equal_area(curve: &LagrangianCurve) -> Result<f64> {
    if curve.folds.len() < 2 {
        return Err(Error::NoThreeValuedRegion { t: curve.t });
    }
    if curve.folds.len() > 2 {
        return Err(Error::Inconsistent(format!(
            "{} folds at t={}: multiple three-valued regions are unsupported",
            curve.folds.len(),
            curve.t
        )));
    }
    let fold_xs: Vec<f64> = curve.folds.iter().map(|f| f.point.x).collect();
    let lo = fold_xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = fold_xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::NoThreeValuedRegion { t: curve.t });
    }

    // global-in-α splines across folds (the curve is smooth in α; only the
    // projection is singular)
    let alphas: Vec<f64> = curve.points.iter().map(|q| q.alpha).collect();
    let xs: Vec<f64> = curve.points.iter().map(|q| q.x).collect();
    let x_of_alpha = CubicSpline::new(alphas.clone(), xs);
    let jp_of_alpha = CubicSpline::new(alphas, curve.jp.clone());

    let area_balance = |xi: f64| -> f64 {
        let vals = branches_at(curve, xi);
        if vals.len() < 3 {
            return f64::NAN;
        }
        let a1 = vals
            .iter()
            .map(|v| v.alpha)
            .fold(f64::INFINITY, f64::min);
        let a3 = vals
            .iter()
            .map(|v| v.alpha)
            .fold(f64::NEG_INFINITY, f64::max);
        let integrand = |a: f64| (x_of_alpha.eval(a) - xi) * jp_of_alpha.eval(a);
        quad::adaptive_simpson(&integrand, a1, a3, 1e-11, 1e-14)
            .map(|q| q.value)
            .unwrap_or(f64::NAN)
    };

    let span = hi - lo;
    let a = lo + 1e-7 * span;
    let b = hi - 1e-7 * span;
    bisect(&area_balance, a, b, 1e-9)
        .ok_or_else(|| Error::Inconsistent("equal-area balance has no sign change".into()))
}

/// Tracks the min-branch shock on the bundle's fine time grid from `t_from`
/// to `t_to` inclusive; snapshots are fold-unrefined (the shock refinement is
/// its own bisection). Times before the first branch switch yield no record.
pub fn track_shock(
    bundle: &TrajectoryBundle,
    t_from: f64,
    t_to: f64,
    sym: &Symbol,
) -> Result<Vec<ShockRecord>> {
    let mut records = Vec::new();
    let i0 = bundle.nearest_time_index(t_from);
    let i1 = bundle.nearest_time_index(t_to);
    for it in i0..=i1 {
        let t = bundle.times[it];
        let curve = snapshot_fast(bundle, t)?;
        if curve.branches.len() < 3 {
            continue;
        }
        // outer-branch crossing on the overlap of the first and last branch
        let first = &curve.branches[0];
        let last = curve.branches.last().unwrap();
        let lo = first.x_lo.max(last.x_lo);
        let hi = first.x_hi.min(last.x_hi);
        if !(hi > lo) {
            continue;
        }
        if let Some(sp) = refine_crossing(&curve, sym, first.id, last.id, lo, hi)? {
            records.push(ShockRecord { t, shock: sp });
        }
    }
    Ok(records)
}

/// Smooth switch function B(z) = (1 + tanh z)/2.
pub fn switch_b(z: f64) -> f64 {
    0.5 * (1.0 + z.tanh())
}

/// Max over the test functions of |(LHS − RHS, ψ)| for the Heaviside product
/// identity with gap parameter μ.
pub fn heaviside_product_check(
    phi1: f64,
    phi2: f64,
    mu: f64,
    test_fns: &[TestFunction],
) -> Result<f64> {
    assert!(mu > 0.0);
    let b = switch_b((phi2 - phi1) / mu);
    let mut worst = 0.0f64;
    for psi in test_fns {
        let lhs = psi.integral_up_to(phi1.min(phi2))?;
        let rhs = b * psi.integral_up_to(phi1)? + (1.0 - b) * psi.integral_up_to(phi2)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// The piecewise-linear momentum profile
/// p(x) = p₀ + a(H(φ₁−x)(φ₁−x) − H(φ₂−x)(φ₂−x)); a standard fixture for the
/// Heaviside algebra.
#[derive(Debug, Clone, Copy)]
pub struct HopfMomentum {
    pub p0: f64,
    pub a: f64,
    pub phi1: f64,
    pub phi2: f64,
}

impl HopfMomentum {
    pub fn new(p0: f64, a: f64, phi1: f64, phi2: f64) -> Result<Self> {
        if phi1 > phi2 {
            return Err(Error::Scenario(format!(
                "hopf fixture needs phi1 <= phi2, got {phi1} > {phi2}"
            )));
        }
        Ok(HopfMomentum { p0, a, phi1, phi2 })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let h = |c: f64| if c - x > 0.0 { 1.0 } else { 0.0 };
        self.p0 + self.a * (h(self.phi1) * (self.phi1 - x) - h(self.phi2) * (self.phi2 - x))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamilton::{integrate_bundle, ActionForm, AmplitudeForm, InitialData};
    use crate::manifold::snapshot;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn heat() -> Symbol {
        Symbol::heat_1d(1.0, (-12.0, 12.0))
    }

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    fn bump_bundle(t_final: f64) -> TrajectoryBundle {
        let init = InitialData::new(
            ActionForm::gaussian(0.5, 0.0, 1.0),
            AmplitudeForm::single(1.0, 0.0, 3.0),
            InitialData::uniform_alphas(-4.0, 4.0, 641),
        )
        .unwrap();
        integrate_bundle(&heat(), &init, t_final, 1e-3).unwrap()
    }

    #[test]
    fn min_selection_is_pointwise_min() {
        let vals = vec![
            BranchValue {
                branch: 0,
                alpha: -1.0,
                s: 1.0,
                p: 0.3,
                rho: 1.0,
            },
            BranchValue {
                branch: 1,
                alpha: 1.0,
                s: 0.5,
                p: -0.2,
                rho: 1.0,
            },
        ];
        let sel = select_min(&vals).unwrap();
        assert_eq!(sel.branch, 1);
        assert_relative_eq!(sel.s, 0.5);
        // deleting the selected branch can only raise the min
        let reduced = select_min(&vals[..1]).unwrap();
        assert!(reduced.s >= sel.s);
    }

    #[test]
    fn single_branch_region_has_no_shocks() {
        let b = bump_bundle(0.3);
        let c = snapshot(&b, 0.3).unwrap();
        let vf = value_function(&c, &grid(-3.5, 3.5, 512), &heat()).unwrap();
        assert!(vf.shocks.is_empty());
        // Φ equals the classical action on the single branch
        for (i, cell) in vf.cells.iter().enumerate() {
            if let Some(cell) = cell {
                let vals = branches_at(&c, vf.x_grid[i]);
                assert_eq!(vals.len(), 1);
                assert_relative_eq!(cell.phi, vals[0].s, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn symmetric_hump_shock_sits_at_symmetry_point() {
        // two-well action: S0 = 0.1x² + 0.5e^{−x²}, symmetric about 0
        let init = InitialData::new(
            ActionForm::new(
                crate::poly::Poly::from_coeffs_1d(&[0.0, 0.0, 0.1]).unwrap(),
                vec![crate::hamilton::GaussianBump {
                    amp: 0.5,
                    center: 0.0,
                    width: 1.0,
                }],
            ),
            AmplitudeForm::single(1.0, 0.0, 3.0),
            InitialData::uniform_alphas(-4.0, 4.0, 641),
        )
        .unwrap();
        let b = integrate_bundle(&heat(), &init, 0.9, 1e-3).unwrap();
        let c = snapshot(&b, 0.9).unwrap();
        let vf = value_function(&c, &grid(-3.5, 3.5, 1024), &heat()).unwrap();
        assert_eq!(vf.shocks.len(), 1);
        assert!(vf.shocks[0].x.abs() <= 1e-8, "x_s = {}", vf.shocks[0].x);
    }

    #[test]
    fn deleting_branches_never_lowers_the_value() {
        let b = bump_bundle(0.8);
        let c = snapshot(&b, 0.8).unwrap();
        let (lo, hi) = c.projection_hull();
        for k in 1..40 {
            let x = lo + (hi - lo) * k as f64 / 40.0;
            let vals = branches_at(&c, x);
            if vals.len() < 2 {
                continue;
            }
            let full = select_min(&vals).unwrap().s;
            for drop in 0..vals.len() {
                let reduced: Vec<_> = vals
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != drop)
                    .map(|(_, v)| *v)
                    .collect();
                assert!(select_min(&reduced).unwrap().s >= full - 1e-14);
            }
        }
    }

    #[test]
    fn rankine_hugoniot_speeds() {
        let sym = heat();
        assert_relative_eq!(shock_speed_rh(&sym, 0.0, 1.0, 0.0).unwrap(), 1.0);
        assert_relative_eq!(shock_speed_rh(&sym, 0.0, 0.7, -0.7).unwrap(), 0.0);
        let drift = Symbol::new_1d(&[1.0], &[], &[1.0], vec![], (-2.0, 2.0)).unwrap();
        assert_relative_eq!(shock_speed_rh(&drift, 0.0, 1.0, 0.0).unwrap(), 2.0);
    }

    #[test]
    fn degenerate_shock_is_an_error() {
        match shock_speed_rh(&heat(), 0.0, 0.5, 0.5 + 1e-13) {
            Err(Error::DegenerateShock { .. }) => {}
            other => panic!("expected DegenerateShock, got {other:?}"),
        }
    }

    #[test]
    fn equal_area_matches_symmetry_and_min_branch() {
        let b = bump_bundle(0.8);
        let c = snapshot(&b, 0.8).unwrap();
        let x_ea = shock_position_equal_area(&c).unwrap();
        assert!(x_ea.abs() <= 1e-9, "equal-area x_s = {x_ea}");
        let vf = value_function(&c, &grid(-3.5, 3.5, 1024), &heat()).unwrap();
        assert_eq!(vf.shocks.len(), 1);
        assert!(
            (x_ea - vf.shocks[0].x).abs() <= 1e-6,
            "equal-area {} vs min-branch {}",
            x_ea,
            vf.shocks[0].x
        );
    }

    #[test]
    fn equal_area_matches_min_branch_for_x_dependent_symbol() {
        // the locator equivalence is symplectic geometry (dS = p dx at fixed
        // t), so it must survive x-dependent Hamiltonians too
        let sym = Symbol::new_1d(&[1.0, 0.0, 0.05], &[], &[], vec![], (-12.0, 12.0)).unwrap();
        let init = InitialData::new(
            ActionForm::gaussian(0.5, 0.0, 1.0),
            AmplitudeForm::single(1.0, 0.0, 3.0),
            InitialData::uniform_alphas(-4.0, 4.0, 641),
        )
        .unwrap();
        let b = integrate_bundle(&sym, &init, 0.85, 1e-3).unwrap();
        let c = snapshot(&b, 0.85).unwrap();
        assert!(c.folds.len() >= 2, "expected a three-valued region");
        let x_ea = shock_position_equal_area(&c).unwrap();
        let vf = value_function(&c, &grid(-3.5, 3.5, 1024), &sym).unwrap();
        assert_eq!(vf.shocks.len(), 1);
        assert!(
            (x_ea - vf.shocks[0].x).abs() <= 1e-6,
            "equal-area {} vs min-branch {}",
            x_ea,
            vf.shocks[0].x
        );
    }

    #[test]
    fn no_three_valued_region_is_an_error() {
        let b = bump_bundle(0.3);
        let c = snapshot(&b, 0.3).unwrap();
        match shock_position_equal_area(&c) {
            Err(Error::NoThreeValuedRegion { .. }) => {}
            other => panic!("expected NoThreeValuedRegion, got {other:?}"),
        }
    }

    #[test]
    fn tracked_shock_speed_matches_rankine_hugoniot() {
        let sym = heat();
        let b = bump_bundle(1.0);
        let recs = track_shock(&b, 0.55, 1.0, &sym).unwrap();
        assert!(recs.len() > 100);
        // symmetric scenario: static shock, RH speed 0
        for w in recs.windows(2) {
            let fd = (w[1].shock.x - w[0].shock.x) / (w[1].t - w[0].t);
            assert!(fd.abs() <= 1e-4, "finite-difference speed {fd}");
            assert!(w[0].shock.speed.abs() <= 1e-6);
        }
    }

    #[test]
    fn heaviside_identity_equal_fronts_exact() {
        let fns = [TestFunction::Gaussian {
            amp: 1.0,
            center: 0.0,
            width: 1.0,
        }];
        let err = heaviside_product_check(0.4, 0.4, 0.05, &fns).unwrap();
        assert!(err <= 1e-12, "error {err}");
    }

    #[test]
    fn heaviside_identity_wide_gap_small_error() {
        let fns = [TestFunction::Gaussian {
            amp: 1.0,
            center: 0.0,
            width: 1.0,
        }];
        let mu = 0.05;
        let err = heaviside_product_check(0.0, 10.0 * mu, mu, &fns).unwrap();
        assert!(err <= 1e-3, "error {err}");
    }

    #[test]
    fn heaviside_error_halves_with_mu() {
        let fns = [TestFunction::Gaussian {
            amp: 1.0,
            center: 0.0,
            width: 1.0,
        }];
        // gap pinned to μ (the worst-case scale)
        let e1 = heaviside_product_check(0.0, 0.1, 0.1, &fns).unwrap();
        let e2 = heaviside_product_check(0.0, 0.05, 0.05, &fns).unwrap();
        let factor = e1 / e2;
        assert!(
            (1.5..=2.5).contains(&factor),
            "halving factor {factor} (errors {e1}, {e2})"
        );
    }

    #[test]
    fn hopf_fixture_profile() {
        let p = HopfMomentum::new(0.3, 2.0, -1.0, 1.0).unwrap();
        assert_relative_eq!(p.eval(2.0), 0.3); // beyond both fronts
        assert_relative_eq!(p.eval(-2.0), 0.3 + 2.0 * (-1.0 - 1.0)); // both active
        let flat = HopfMomentum::new(0.3, 0.0, -1.0, 1.0).unwrap();
        assert_relative_eq!(flat.eval(0.123), 0.3);
        assert!(HopfMomentum::new(0.0, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn hopf_momentum_square_expands_in_heaviside_algebra() {
        // (p − p0)² contains the product H(φ1−x)H(φ2−x); replacing it by the
        // switch combination must stay within O(μ) in the pairing sense.
        let (p0, a) = (0.3, 1.5);
        let psi = TestFunction::Gaussian {
            amp: 1.0,
            center: 0.0,
            width: 1.2,
        };
        let (lo, hi) = psi.support();
        let pairing_error = |mu: f64, gap: f64| -> f64 {
            let (phi1, phi2) = (-0.2, -0.2 + gap);
            let p = HopfMomentum::new(p0, a, phi1, phi2).unwrap();
            let b = switch_b((phi2 - phi1) / mu);
            let h = |c: f64, x: f64| if c - x > 0.0 { 1.0 } else { 0.0 };
            let lhs = |x: f64| (p.eval(x) - p0).powi(2) * psi.eval(x);
            let rhs = |x: f64| {
                a * a
                    * (h(phi1, x) * (phi1 - x).powi(2) + h(phi2, x) * (phi2 - x).powi(2)
                        - 2.0
                            * (b * h(phi1, x) + (1.0 - b) * h(phi2, x))
                            * (phi1 - x)
                            * (phi2 - x))
                    * psi.eval(x)
            };
            let l = crate::quad::integrate(&lhs, lo, hi).unwrap().value;
            let r = crate::quad::integrate(&rhs, lo, hi).unwrap().value;
            (l - r).abs()
        };
        // With gap ~ μ the replacement error is O(μ³) here, one μ from the
        // identity and two from the linear factors vanishing at the fronts —
        // comfortably inside the O_{D'}(μ) contract. Halving μ divides the
        // error by ~8.
        let e1 = pairing_error(0.1, 0.1);
        let e2 = pairing_error(0.05, 0.05);
        assert!(e1 <= 0.1, "pairing error {e1} not within O(mu)");
        let factor = e1 / e2;
        assert!((6.0..=10.0).contains(&factor), "cubic halving factor {factor}");
    }

    #[test]
    fn dominated_branch_contribution_below_threshold() {
        // exp gap: once ε ≤ ΔS/(28 ln 10) the non-minimal branch contributes
        // below 1e−12 even with a generous amplitude ratio.
        let ds: f64 = 0.17;
        let eps = ds / (28.0 * std::f64::consts::LN_10);
        let contribution = (-ds / eps).exp() * 1e6;
        assert!(contribution <= 1e-12, "contribution {contribution}");
    }

    proptest! {
        /// |(LHS − RHS, ψ)| ≤ c·μ uniformly over gaps, with c from the switch
        /// function and ‖ψ‖.
        #[test]
        fn heaviside_pairing_is_order_mu(
            gap in 0.0f64..3.0,
            mu in 1e-3f64..0.2,
            center in -0.5f64..0.5,
        ) {
            let fns = [TestFunction::Gaussian { amp: 1.0, center, width: 1.0 }];
            let err = heaviside_product_check(0.0, gap, mu, &fns).unwrap();
            // max_z z(1−B(z)) ≈ 0.2785 and sup ψ = 1
            prop_assert!(err <= 0.3 * mu + 1e-12, "err = {err}, mu = {mu}");
        }
    }
}
