//! Hamiltonian characteristics: bundle integration of
//!
//! ```text
//! ẋ = H_p(x, p)        x(0) = α
//! ṗ = −H_x(x, p)       p(0) = ∇S₀(α)
//! ```
//!
//! together with the variational system for Jx = ∂x/∂α, Jp = ∂p/∂α,
//!
//! ```text
//! J̇x = H_xp Jx + H_pp Jp,     J̇p = −H_xx Jx − H_xp Jp,
//! ```
//!
//! the action ODE dS/dt = (p, H_p) − H, and the damping integral
//! ∫ ½ H_xp ds that feeds the characteristic density formula. Everything here
//! is one-dimensional in state; the two-dimensional surface of the crate lives
//! in the symbol derivatives and the backward module's matrix forms.
//!
//! Integration is classical fixed-grid RK4 with a step-doubling local error
//! estimate; a step whose estimate exceeds 1e−8 is bisected and retried, at
//! most 20 levels deep, so the output grid stays uniform while stiff spots are
//! resolved.

use crate::error::{Error, Result};
use crate::poly::Poly;
use crate::symbol::Symbol;

/// Local error target for one guarded step.
pub const STEP_TOL: f64 = 1e-8;
const MAX_HALVINGS: u32 = 20;

/// a·exp(−((x−c)/w)²), the smooth (non-compact) part of the action family.
#[derive(Debug, Clone, Copy)]
pub struct GaussianBump {
    pub amp: f64,
    pub center: f64,
    pub width: f64,
}

/// Initial action S₀ as polynomial + Gaussian bumps; derivatives are analytic.
#[derive(Debug, Clone)]
pub struct ActionForm {
    pub poly: Poly,
    pub gaussians: Vec<GaussianBump>,
}

impl ActionForm {
    pub fn new(poly: Poly, gaussians: Vec<GaussianBump>) -> Self {
        ActionForm { poly, gaussians }
    }

    pub fn from_poly(coeffs: &[f64]) -> Result<Self> {
        Ok(ActionForm {
            poly: Poly::from_coeffs_1d(coeffs)?,
            gaussians: vec![],
        })
    }

    pub fn gaussian(amp: f64, center: f64, width: f64) -> Self {
        ActionForm {
            poly: Poly::zero(1),
            gaussians: vec![GaussianBump { amp, center, width }],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let mut s = self.poly.eval(&[x]);
        for g in &self.gaussians {
            let u = (x - g.center) / g.width;
            s += g.amp * (-u * u).exp();
        }
        s
    }

    pub fn d1(&self, x: f64) -> f64 {
        let mut s = self.poly.partial(0).eval(&[x]);
        for g in &self.gaussians {
            let u = (x - g.center) / g.width;
            s += g.amp * (-u * u).exp() * (-2.0 * u) / g.width;
        }
        s
    }

    pub fn d2(&self, x: f64) -> f64 {
        let mut s = self.poly.partial(0).partial(0).eval(&[x]);
        for g in &self.gaussians {
            let u = (x - g.center) / g.width;
            s += g.amp * (-u * u).exp() * (4.0 * u * u - 2.0) / (g.width * g.width);
        }
        s
    }
}

/// One compactly supported C^∞ bump a·ψ((x−c)/w) with
/// ψ(u) = exp(1 − 1/(1−u²)) for |u| < 1 and 0 outside.
#[derive(Debug, Clone, Copy)]
pub struct CompactBump {
    pub amp: f64,
    pub center: f64,
    pub width: f64,
}

impl CompactBump {
    pub fn eval(&self, x: f64) -> f64 {
        let u = (x - self.center) / self.width;
        if u.abs() >= 1.0 {
            0.0
        } else {
            self.amp * (1.0 - 1.0 / (1.0 - u * u)).exp()
        }
    }
}

/// Initial amplitude φ⁰ as a sum of compact bumps (vanishes identically
/// outside its support).
#[derive(Debug, Clone)]
pub struct AmplitudeForm {
    pub bumps: Vec<CompactBump>,
}

impl AmplitudeForm {
    pub fn single(amp: f64, center: f64, width: f64) -> Self {
        AmplitudeForm {
            bumps: vec![CompactBump { amp, center, width }],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.bumps.iter().map(|b| b.eval(x)).sum()
    }

    /// Hull of the bump supports; None when there are no bumps.
    pub fn support(&self) -> Option<(f64, f64)> {
        let lo = self
            .bumps
            .iter()
            .map(|b| b.center - b.width)
            .fold(f64::INFINITY, f64::min);
        let hi = self
            .bumps
            .iter()
            .map(|b| b.center + b.width)
            .fold(f64::NEG_INFINITY, f64::max);
        if lo.is_finite() {
            Some((lo, hi))
        } else {
            None
        }
    }
}

#[derive(Debug, Clone)]
pub struct InitialData {
    pub s0: ActionForm,
    pub phi0: AmplitudeForm,
    pub alpha_grid: Vec<f64>,
}

impl InitialData {
    /// Validates S₀ ≥ 0 on the window and a sorted label grid.
    pub fn new(s0: ActionForm, phi0: AmplitudeForm, alpha_grid: Vec<f64>) -> Result<Self> {
        if alpha_grid.len() < 2 {
            return Err(Error::InvalidInitialData("need at least 2 labels".into()));
        }
        if alpha_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInitialData(
                "alpha grid must be strictly increasing".into(),
            ));
        }
        let (lo, hi) = (alpha_grid[0], *alpha_grid.last().unwrap());
        for i in 0..=400 {
            let x = lo + (hi - lo) * i as f64 / 400.0;
            if s0.eval(x) < -1e-12 {
                return Err(Error::InvalidInitialData(format!(
                    "S0({x}) = {} < 0",
                    s0.eval(x)
                )));
            }
        }
        Ok(InitialData {
            s0,
            phi0,
            alpha_grid,
        })
    }

    pub fn uniform_alphas(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// State of a single characteristic: position, momentum, the variational pair,
/// the action, and the accumulated ½∫H_xp damping integral.
#[derive(Debug, Clone, Copy)]
pub struct PointState {
    pub x: f64,
    pub p: f64,
    pub jx: f64,
    pub jp: f64,
    pub s: f64,
    pub damp: f64,
}

/// Arrays over (time, label) filled by [`integrate_bundle`]. Immutable once
/// built; per-label trajectories are independent.
#[derive(Debug, Clone)]
pub struct TrajectoryBundle {
    pub sym: Symbol,
    pub init: InitialData,
    pub direction: Direction,
    pub times: Vec<f64>,
    pub alphas: Vec<f64>,
    pub rho0: Vec<f64>,
    x: Vec<f64>,
    p: Vec<f64>,
    jx: Vec<f64>,
    jp: Vec<f64>,
    s: Vec<f64>,
    damp: Vec<f64>,
    rho: Vec<f64>,
}

impl TrajectoryBundle {
    pub fn n_times(&self) -> usize {
        self.times.len()
    }

    pub fn n_alphas(&self) -> usize {
        self.alphas.len()
    }

    pub fn dt(&self) -> f64 {
        self.times[1] - self.times[0]
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().unwrap()
    }

    #[inline]
    fn idx(&self, it: usize, ia: usize) -> usize {
        it * self.alphas.len() + ia
    }

    pub fn state(&self, it: usize, ia: usize) -> PointState {
        let k = self.idx(it, ia);
        PointState {
            x: self.x[k],
            p: self.p[k],
            jx: self.jx[k],
            jp: self.jp[k],
            s: self.s[k],
            damp: self.damp[k],
        }
    }

    pub fn x(&self, it: usize, ia: usize) -> f64 {
        self.x[self.idx(it, ia)]
    }

    pub fn p(&self, it: usize, ia: usize) -> f64 {
        self.p[self.idx(it, ia)]
    }

    pub fn jx(&self, it: usize, ia: usize) -> f64 {
        self.jx[self.idx(it, ia)]
    }

    pub fn jp(&self, it: usize, ia: usize) -> f64 {
        self.jp[self.idx(it, ia)]
    }

    pub fn s(&self, it: usize, ia: usize) -> f64 {
        self.s[self.idx(it, ia)]
    }

    pub fn damp(&self, it: usize, ia: usize) -> f64 {
        self.damp[self.idx(it, ia)]
    }

    /// ρ(α, t); NaN marks states at/past a caustic (det Jx ≤ 0).
    pub fn rho(&self, it: usize, ia: usize) -> f64 {
        self.rho[self.idx(it, ia)]
    }

    pub(crate) fn set_rho(&mut self, values: Vec<f64>) {
        assert_eq!(values.len(), self.rho.len());
        self.rho = values;
    }

    /// Index of the grid time nearest to `t`.
    pub fn nearest_time_index(&self, t: f64) -> usize {
        let dt = self.dt();
        let i = ((t - self.times[0]) / dt).round() as i64;
        i.clamp(0, self.times.len() as i64 - 1) as usize
    }
}

/// Right-hand side of the characteristic system, sign-flipped for backward
/// integration.
fn field(sym: &Symbol, y: &[f64; 6], dir: f64) -> Result<[f64; 6]> {
    let x = [y[0]];
    let p = [y[1]];
    let d = sym.derivatives(&x, &p)?;
    let h = sym.hamiltonian(&x, &p)?;
    let h_p = d.h_p[0];
    let h_x = d.h_x[0];
    let h_pp = d.h_pp.get(0, 0);
    let h_xp = d.h_xp.get(0, 0);
    let h_xx = d.h_xx.get(0, 0);
    Ok([
        dir * h_p,
        dir * (-h_x),
        dir * (h_xp * y[2] + h_pp * y[3]),
        dir * (-h_xx * y[2] - h_xp * y[3]),
        dir * (y[1] * h_p - h),
        dir * (0.5 * h_xp),
    ])
}

fn rk4(sym: &Symbol, y: &[f64; 6], h: f64, dir: f64) -> Result<[f64; 6]> {
    let k1 = field(sym, y, dir)?;
    let mut y2 = *y;
    for i in 0..6 {
        y2[i] = y[i] + 0.5 * h * k1[i];
    }
    let k2 = field(sym, &y2, dir)?;
    for i in 0..6 {
        y2[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = field(sym, &y2, dir)?;
    for i in 0..6 {
        y2[i] = y[i] + h * k3[i];
    }
    let k4 = field(sym, &y2, dir)?;
    let mut out = *y;
    for i in 0..6 {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// One output step [t, t + h] with step-doubling control and bisection retry.
fn step_guarded(sym: &Symbol, y: &[f64; 6], t: f64, h: f64, dir: f64, depth: u32) -> Result<[f64; 6]> {
    let full = rk4(sym, y, h, dir)?;
    let half = rk4(sym, y, 0.5 * h, dir)?;
    let half2 = rk4(sym, &half, 0.5 * h, dir)?;
    let err = (0..6)
        .map(|i| (full[i] - half2[i]).abs())
        .fold(0.0f64, f64::max);
    if err <= STEP_TOL {
        return Ok(half2);
    }
    if depth >= MAX_HALVINGS {
        return Err(Error::StepRejected {
            t,
            halvings: depth,
            err,
        });
    }
    let mid = step_guarded(sym, y, t, 0.5 * h, dir, depth + 1)?;
    step_guarded(sym, &mid, t + 0.5 * h, 0.5 * h, dir, depth + 1)
}

/// Uniform time grid covering [0, T] with step ≤ dt.
pub fn time_grid(t_final: f64, dt: f64) -> Vec<f64> {
    let n = (t_final / dt - 1e-12).ceil().max(1.0) as usize;
    let h = t_final / n as f64;
    (0..=n).map(|i| i as f64 * h).collect()
}

/// Integrates the characteristic bundle on [0, T]. Initial state per label:
/// x = α, p = ∇S₀(α) (analytic), Jx = 1, Jp = Hess S₀(α), S = S₀(α), and
/// ρ(α,0) = φ⁰(α)².
pub fn integrate_bundle(
    sym: &Symbol,
    init: &InitialData,
    t_final: f64,
    dt: f64,
) -> Result<TrajectoryBundle> {
    assert!(dt > 0.0 && t_final > 0.0);
    let times = time_grid(t_final, dt);
    let alphas = init.alpha_grid.clone();
    let nt = times.len();
    let na = alphas.len();
    let mut bundle = TrajectoryBundle {
        sym: sym.clone(),
        init: init.clone(),
        direction: Direction::Forward,
        times: times.clone(),
        alphas: alphas.clone(),
        rho0: alphas.iter().map(|&a| init.phi0.eval(a).powi(2)).collect(),
        x: vec![0.0; nt * na],
        p: vec![0.0; nt * na],
        jx: vec![0.0; nt * na],
        jp: vec![0.0; nt * na],
        s: vec![0.0; nt * na],
        damp: vec![0.0; nt * na],
        rho: vec![f64::NAN; nt * na],
    };
    let h = times[1] - times[0];
    for (ia, &alpha) in alphas.iter().enumerate() {
        let mut y = [
            alpha,
            init.s0.d1(alpha),
            1.0,
            init.s0.d2(alpha),
            init.s0.eval(alpha),
            0.0,
        ];
        for it in 0..nt {
            if it > 0 {
                y = step_guarded(sym, &y, times[it - 1], h, 1.0, 0)?;
            }
            if !sym.in_window(&[y[0]]) {
                return Err(Error::WindowExit {
                    alpha,
                    t: times[it],
                });
            }
            let k = it * na + ia;
            bundle.x[k] = y[0];
            bundle.p[k] = y[1];
            bundle.jx[k] = y[2];
            bundle.jp[k] = y[3];
            bundle.s[k] = y[4];
            bundle.damp[k] = y[5];
        }
    }
    let rho = crate::density::density_along_bundle(&bundle);
    bundle.set_rho(rho);
    Ok(bundle)
}

/// Integrates one label to `t_target` on the same grid step; used for fold
/// refinement at off-grid labels.
pub fn integrate_single(
    sym: &Symbol,
    init: &InitialData,
    alpha: f64,
    t_target: f64,
    dt: f64,
) -> Result<PointState> {
    let mut y = [
        alpha,
        init.s0.d1(alpha),
        1.0,
        init.s0.d2(alpha),
        init.s0.eval(alpha),
        0.0,
    ];
    if t_target > 0.0 {
        let times = time_grid(t_target, dt);
        let h = times[1] - times[0];
        for it in 1..times.len() {
            y = step_guarded(sym, &y, times[it - 1], h, 1.0, 0)?;
            if !sym.in_window(&[y[0]]) {
                return Err(Error::WindowExit {
                    alpha,
                    t: times[it],
                });
            }
        }
    }
    Ok(PointState {
        x: y[0],
        p: y[1],
        jx: y[2],
        jp: y[3],
        s: y[4],
        damp: y[5],
    })
}

/// First time at which det Jx changes sign for some label (linear
/// interpolation between grid times); None when det Jx > 0 throughout.
pub fn caustic_time(bundle: &TrajectoryBundle) -> Option<f64> {
    let mut first: Option<f64> = None;
    for ia in 0..bundle.n_alphas() {
        for it in 1..bundle.n_times() {
            let j0 = bundle.jx(it - 1, ia);
            let j1 = bundle.jx(it, ia);
            if j0 > 0.0 && j1 <= 0.0 {
                let t0 = bundle.times[it - 1];
                let frac = j0 / (j0 - j1);
                let t_star = t0 + frac * (bundle.times[it] - t0);
                first = Some(match first {
                    Some(t) if t <= t_star => t,
                    _ => t_star,
                });
                break;
            }
        }
    }
    first
}

/// Integrates the sign-flipped system from the forward bundle's final states:
/// X(α,0) = x(α,T), Ξ(α,0) = p(α,T). By uniqueness the result satisfies
/// X(α,τ) = x(α,T−τ) for all stored fields.
pub fn time_reverse(bundle: &TrajectoryBundle, t_back: f64) -> Result<TrajectoryBundle> {
    let last = bundle.n_times() - 1;
    let times = time_grid(t_back, bundle.dt());
    let na = bundle.n_alphas();
    let nt = times.len();
    let mut out = TrajectoryBundle {
        sym: bundle.sym.clone(),
        init: bundle.init.clone(),
        direction: Direction::Backward,
        times: times.clone(),
        alphas: bundle.alphas.clone(),
        rho0: bundle.rho0.clone(),
        x: vec![0.0; nt * na],
        p: vec![0.0; nt * na],
        jx: vec![0.0; nt * na],
        jp: vec![0.0; nt * na],
        s: vec![0.0; nt * na],
        damp: vec![0.0; nt * na],
        rho: vec![f64::NAN; nt * na],
    };
    let h = times[1] - times[0];
    for ia in 0..na {
        let st = bundle.state(last, ia);
        let mut y = [st.x, st.p, st.jx, st.jp, st.s, st.damp];
        for it in 0..nt {
            if it > 0 {
                y = step_guarded(&bundle.sym, &y, times[it - 1], h, -1.0, 0)?;
            }
            let k = it * na + ia;
            out.x[k] = y[0];
            out.p[k] = y[1];
            out.jx[k] = y[2];
            out.jp[k] = y[3];
            out.s[k] = y[4];
            out.damp[k] = y[5];
        }
    }
    let rho = crate::density::density_along_bundle(&out);
    out.set_rho(rho);
    Ok(out)
}

/// Flows bare phase points (x, p) carrying an action value; used for fan
/// boundaries and loop diagnostics. Returns one path per input point, sampled
/// on the uniform grid.
pub fn flow_phase_points(
    sym: &Symbol,
    points: &[(f64, f64, f64)],
    t_final: f64,
    dt: f64,
    direction: Direction,
) -> Result<Vec<Vec<(f64, f64, f64)>>> {
    let dir = match direction {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    let times = time_grid(t_final, dt);
    let h = times[1] - times[0];
    let mut paths = Vec::with_capacity(points.len());
    for &(x0, p0, s0) in points {
        let mut y = [x0, p0, 1.0, 0.0, s0, 0.0];
        let mut path = Vec::with_capacity(times.len());
        path.push((y[0], y[1], y[4]));
        for it in 1..times.len() {
            y = step_guarded(sym, &y, times[it - 1], h, dir, 0)?;
            path.push((y[0], y[1], y[4]));
        }
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn heat() -> Symbol {
        Symbol::heat_1d(1.0, (-12.0, 12.0))
    }

    /// S0 = (x + 2)² / 4 has ∇S0(0) = 1 and Hess = 1/2.
    fn ramp_init() -> InitialData {
        InitialData::new(
            ActionForm::from_poly(&[1.0, 1.0, 0.25]).unwrap(),
            AmplitudeForm::single(1.0, 0.0, 3.0),
            InitialData::uniform_alphas(-2.0, 2.0, 41),
        )
        .unwrap()
    }

    /// Symmetric bump S0 = 0.5·e^{−x²}: min S0'' = −1 at 0, caustic at 1/2.
    fn bump_init(n: usize) -> InitialData {
        InitialData::new(
            ActionForm::gaussian(0.5, 0.0, 1.0),
            AmplitudeForm::single(1.0, 0.0, 3.0),
            InitialData::uniform_alphas(-4.0, 4.0, n),
        )
        .unwrap()
    }

    #[test]
    fn heat_trajectory_is_straight_line() {
        let sym = heat();
        let init = ramp_init();
        let b = integrate_bundle(&sym, &init, 1.0, 1e-3).unwrap();
        let ia = init.alpha_grid.iter().position(|&a| a == 0.0).unwrap();
        let it = b.nearest_time_index(0.7);
        assert_relative_eq!(b.x(it, ia), 2.0 * 0.7, epsilon = 1e-10);
        assert_relative_eq!(b.p(it, ia), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn heat_jacobian_closed_form() {
        let sym = heat();
        let init = bump_init(81);
        let b = integrate_bundle(&sym, &init, 0.4, 1e-3).unwrap();
        for &ia in &[10usize, 40, 60] {
            let alpha = b.alphas[ia];
            let it = b.nearest_time_index(0.4);
            let expected = 1.0 + 2.0 * 0.4 * init.s0.d2(alpha);
            assert_relative_eq!(b.jx(it, ia), expected, epsilon = 1e-8);
        }
    }

    #[test]
    fn heat_action_grows_linearly_on_ramp() {
        // dS/dt = p·H_p − H = p² = 1 along the α = 0 ramp trajectory.
        let sym = heat();
        let init = ramp_init();
        let b = integrate_bundle(&sym, &init, 1.0, 1e-3).unwrap();
        let ia = init.alpha_grid.iter().position(|&a| a == 0.0).unwrap();
        let s0 = init.s0.eval(0.0);
        let it = b.nearest_time_index(1.0);
        assert_relative_eq!(b.s(it, ia), s0 + 1.0, epsilon = 1e-9);
    }

    #[test]
    fn caustic_time_matches_formula() {
        let sym = heat();
        let b = integrate_bundle(&sym, &bump_init(161), 1.0, 1e-3).unwrap();
        let t_star = caustic_time(&b).expect("caustic expected");
        assert!((t_star - 0.5).abs() <= 2e-3, "t* = {t_star}");
    }

    #[test]
    fn convex_action_has_no_caustic() {
        let sym = heat();
        let init = InitialData::new(
            ActionForm::from_poly(&[0.0, 0.0, 1.0]).unwrap(),
            AmplitudeForm::single(1.0, 0.0, 2.0),
            InitialData::uniform_alphas(-1.5, 1.5, 61),
        )
        .unwrap();
        let b = integrate_bundle(&sym, &init, 1.0, 1e-3).unwrap();
        assert!(caustic_time(&b).is_none());
    }

    #[test]
    fn window_exit_is_reported() {
        let sym = Symbol::heat_1d(1.0, (-1.0, 1.0));
        let init = ramp_init();
        match integrate_bundle(&sym, &init, 1.0, 1e-3) {
            Err(Error::WindowExit { .. }) => {}
            other => panic!("expected WindowExit, got {other:?}"),
        }
    }

    #[test]
    fn reversal_identity_heat() {
        let sym = heat();
        let init = bump_init(81);
        let t_final = 0.4; // pre-caustic
        let fwd = integrate_bundle(&sym, &init, t_final, 1e-3).unwrap();
        let bwd = time_reverse(&fwd, t_final).unwrap();
        let mut sup = 0.0f64;
        for ia in 0..fwd.n_alphas() {
            for it in 0..fwd.n_times() {
                let fwd_it = fwd.n_times() - 1 - it;
                sup = sup.max((bwd.x(it, ia) - fwd.x(fwd_it, ia)).abs());
                sup = sup.max((bwd.p(it, ia) - fwd.p(fwd_it, ia)).abs());
            }
        }
        assert!(sup <= 1e-6, "reversal deviation {sup}");
        // closed form X(α, τ) = α + 2(T − τ) S0'(α)
        let ia = 20;
        let alpha = fwd.alphas[ia];
        let it = bwd.nearest_time_index(0.15);
        assert_relative_eq!(
            bwd.x(it, ia),
            alpha + 2.0 * (t_final - 0.15) * init.s0.d1(alpha),
            epsilon = 1e-8
        );
        // full reversal returns the labels
        let last = bwd.n_times() - 1;
        for ia in 0..bwd.n_alphas() {
            assert_relative_eq!(bwd.x(last, ia), bwd.alphas[ia], epsilon = 1e-8);
            assert_relative_eq!(bwd.p(last, ia), init.s0.d1(bwd.alphas[ia]), epsilon = 1e-10);
        }
    }

    #[test]
    fn reversal_identity_for_x_dependent_flow() {
        // oscillator flow: backward RK4 is not the algebraic inverse of the
        // forward sweep, so this exercises the 1e-6 reversal contract
        let sym = Symbol::new_1d(&[1.0], &[0.0, 0.0, 0.4], &[], vec![], (-12.0, 12.0)).unwrap();
        let init = ramp_init();
        let t_final = 0.6;
        let fwd = integrate_bundle(&sym, &init, t_final, 1e-3).unwrap();
        let bwd = time_reverse(&fwd, t_final).unwrap();
        let mut sup = 0.0f64;
        for ia in (0..fwd.n_alphas()).step_by(4) {
            for it in (0..fwd.n_times()).step_by(25) {
                let fwd_it = fwd.n_times() - 1 - it;
                sup = sup.max((bwd.x(it, ia) - fwd.x(fwd_it, ia)).abs());
                sup = sup.max((bwd.p(it, ia) - fwd.p(fwd_it, ia)).abs());
                sup = sup.max((bwd.s(it, ia) - fwd.s(fwd_it, ia)).abs());
            }
        }
        assert!(sup <= 1e-6, "reversal deviation {sup}");
    }

    #[test]
    fn hamiltonian_conserved_along_trajectories() {
        // x-dependent symbol: H = p² + 0.4 x² (harmonic-oscillator flow).
        let sym = Symbol::new_1d(&[1.0], &[0.0, 0.0, 0.4], &[], vec![], (-12.0, 12.0)).unwrap();
        let init = ramp_init();
        let b = integrate_bundle(&sym, &init, 1.0, 1e-3).unwrap();
        for ia in (0..b.n_alphas()).step_by(8) {
            let h0 = sym
                .hamiltonian(&[b.x(0, ia)], &[b.p(0, ia)])
                .unwrap();
            let last = b.n_times() - 1;
            let h1 = sym
                .hamiltonian(&[b.x(last, ia)], &[b.p(last, ia)])
                .unwrap();
            assert!(
                (h1 - h0).abs() <= 1e-8 * h0.abs().max(1.0),
                "energy drift {}",
                h1 - h0
            );
        }
    }

    #[test]
    fn fourth_order_convergence_against_fine_reference() {
        let sym = Symbol::new_1d(&[1.0], &[0.0, 0.0, 0.4], &[], vec![], (-24.0, 24.0)).unwrap();
        let y0 = [0.3, 0.9, 1.0, 0.5, 0.0, 0.0];
        let t_final = 0.3;
        let run = |dt: f64| -> [f64; 6] {
            let times = time_grid(t_final, dt);
            let h = times[1] - times[0];
            let mut y = y0;
            for _ in 1..times.len() {
                // raw RK4, no guard: the guard would mask the order signal
                y = rk4(&sym, &y, h, 1.0).unwrap();
            }
            y
        };
        let reference = run(0.01 / 8.0);
        let err = |dt: f64| -> f64 {
            let y = run(dt);
            (0..6)
                .map(|i| (y[i] - reference[i]).abs())
                .fold(0.0f64, f64::max)
        };
        let ratio = err(0.01) / err(0.005);
        assert!(
            (12.0..=20.0).contains(&ratio),
            "convergence ratio {ratio} outside [12, 20]"
        );
    }

    #[test]
    fn symplectic_loop_area_conserved() {
        // Closed loop in phase space under an x-dependent flow; ∮ p dx is
        // invariant.
        let sym = Symbol::new_1d(&[1.0], &[0.0, 0.0, 0.3], &[], vec![], (-24.0, 24.0)).unwrap();
        let n = 256;
        let loop_pts: Vec<(f64, f64, f64)> = (0..n)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
                (0.3 * th.cos(), 0.5 + 0.3 * th.sin(), 0.0)
            })
            .collect();
        let paths = flow_phase_points(&sym, &loop_pts, 0.7, 1e-3, Direction::Forward).unwrap();
        let area_at = |it: usize| -> f64 {
            let mut a = 0.0;
            for k in 0..n {
                let (x0, p0, _) = paths[k][it];
                let (x1, p1, _) = paths[(k + 1) % n][it];
                a += 0.5 * (p0 + p1) * (x1 - x0);
            }
            a
        };
        let last = paths[0].len() - 1;
        assert!(
            (area_at(last) - area_at(0)).abs() <= 1e-6,
            "area drift {}",
            area_at(last) - area_at(0)
        );
    }

    #[test]
    fn guard_subdivides_coarse_steps() {
        // One giant step across an oscillator quarter-period still lands near
        // the fine-step answer because the guard bisects internally.
        let sym = Symbol::new_1d(&[1.0], &[0.0, 0.0, 1.0], &[], vec![], (-24.0, 24.0)).unwrap();
        let init = ramp_init();
        let coarse = integrate_bundle(&sym, &init, 0.8, 0.4).unwrap();
        let fine = integrate_bundle(&sym, &init, 0.8, 1e-3).unwrap();
        let ia = 20;
        assert_relative_eq!(
            coarse.x(coarse.n_times() - 1, ia),
            fine.x(fine.n_times() - 1, ia),
            epsilon = 1e-6
        );
    }
}
