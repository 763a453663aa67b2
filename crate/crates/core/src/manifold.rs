//! Lagrangian curve snapshots and branch geometry.
//!
//! At a fixed time the characteristics trace an ordered curve
//! Λ¹ₜ = {(x(α,t), p(α,t))} in phase space. Where det Jx = ∂x/∂α changes sign
//! the projection to the x-axis folds; between folds the curve is a
//! single-valued branch x ↦ (α, S, p, ρ) that can be inverted. The fold points
//! control the downstream shock geometry, so they are refined by bisection on
//! the true det Jx (re-integrating single labels), not on an interpolant.
//!
//! Branch inversion goes through a monotone (shape-preserving) interpolant of
//! x(α) — this is what guarantees no spurious extra branches — and the located
//! label is then polished by Newton on a higher-order spline so interpolated
//! branch values carry O(Δα⁴) accuracy. The branch density is never
//! interpolated directly (it blows up at folds); it is rebuilt pointwise from
//! ρ₀(α)·e^{−damp}/det Jx, whose ingredients stay smooth across folds.

use crate::density::characteristic_density;
use crate::error::{Error, Result};
use crate::hamilton::{integrate_single, Direction, TrajectoryBundle};
use crate::interp::{CubicSpline, MonotoneCubic};

#[derive(Debug, Clone, Copy)]
pub struct CurvePoint {
    pub alpha: f64,
    pub x: f64,
    pub p: f64,
    pub s: f64,
    pub rho: f64,
    pub det_jx: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct Fold {
    /// Sample index i such that the fold lies in (α_i, α_{i+1}).
    pub seg: usize,
    pub point: CurvePoint,
    pub damp: f64,
}

/// One single-valued branch of the projection between folds (or curve ends).
#[derive(Debug, Clone)]
pub struct Branch {
    pub id: usize,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub x_lo: f64,
    pub x_hi: f64,
    /// True when x increases with α on this branch.
    pub ascending: bool,
    x_mono: MonotoneCubic,
    x_spl: CubicSpline,
    s_spl: CubicSpline,
    p_spl: CubicSpline,
    jx_spl: CubicSpline,
    damp_spl: CubicSpline,
    rho0_spl: CubicSpline,
}

/// Value of one branch over a query point x.
#[derive(Debug, Clone, Copy)]
pub struct BranchValue {
    pub branch: usize,
    pub alpha: f64,
    pub s: f64,
    pub p: f64,
    pub rho: f64,
}

#[derive(Debug, Clone)]
pub struct LagrangianCurve {
    /// Requested snapshot time.
    pub requested_t: f64,
    /// Grid time actually used (nearest).
    pub t: f64,
    pub points: Vec<CurvePoint>,
    pub jp: Vec<f64>,
    pub damp: Vec<f64>,
    pub folds: Vec<Fold>,
    pub branches: Vec<Branch>,
}

impl LagrangianCurve {
    /// Hull of the projection to the x-axis.
    pub fn projection_hull(&self) -> (f64, f64) {
        let lo = self.points.iter().map(|q| q.x).fold(f64::INFINITY, f64::min);
        let hi = self
            .points
            .iter()
            .map(|q| q.x)
            .fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }
}

/// Extracts the curve at the grid time nearest to `t`, locates and refines the
/// folds, and decomposes into branches.
pub fn snapshot(bundle: &TrajectoryBundle, t: f64) -> Result<LagrangianCurve> {
    snapshot_impl(bundle, t, true)
}

/// Snapshot with folds at sample resolution only (no re-integration); used for
/// dense-in-time shock tracking where per-step refinement would be wasteful.
pub fn snapshot_fast(bundle: &TrajectoryBundle, t: f64) -> Result<LagrangianCurve> {
    snapshot_impl(bundle, t, false)
}

fn snapshot_impl(bundle: &TrajectoryBundle, t: f64, refine: bool) -> Result<LagrangianCurve> {
    let it = bundle.nearest_time_index(t);
    let grid_t = bundle.times[it];
    let na = bundle.n_alphas();
    let mut points = Vec::with_capacity(na);
    let mut jp = Vec::with_capacity(na);
    let mut damp = Vec::with_capacity(na);
    for ia in 0..na {
        let st = bundle.state(it, ia);
        points.push(CurvePoint {
            alpha: bundle.alphas[ia],
            x: st.x,
            p: st.p,
            s: st.s,
            rho: bundle.rho(it, ia),
            det_jx: st.jx,
        });
        jp.push(st.jp);
        damp.push(st.damp);
    }

    let mut folds = Vec::new();
    for i in 0..na - 1 {
        let j0 = points[i].det_jx;
        let j1 = points[i + 1].det_jx;
        if j0 == 0.0 {
            continue;
        }
        if j0.signum() != j1.signum() && j1 != 0.0 {
            let fold = if refine && bundle.direction == Direction::Forward {
                refine_fold(bundle, grid_t, i, points[i].alpha, points[i + 1].alpha)?
            } else {
                interpolate_fold(i, &points[i], &points[i + 1], damp[i], damp[i + 1])
            };
            folds.push(fold);
        }
    }

    let rho0_at = |alpha: f64| bundle.init.phi0.eval(alpha).powi(2);
    let branches = build_branches(&points, &damp, &folds, &rho0_at)?;
    Ok(LagrangianCurve {
        requested_t: t,
        t: grid_t,
        points,
        jp,
        damp,
        folds,
        branches,
    })
}

/// Bisection on det Jx(α) at fixed t, evaluated by re-integrating single
/// labels; relative tolerance 1e−10 on the label interval.
fn refine_fold(
    bundle: &TrajectoryBundle,
    t: f64,
    seg: usize,
    mut a: f64,
    mut b: f64,
) -> Result<Fold> {
    let dt = bundle.dt();
    let det_at = |alpha: f64| -> Result<f64> {
        Ok(integrate_single(&bundle.sym, &bundle.init, alpha, t, dt)?.jx)
    };
    let mut fa = det_at(a)?;
    let tol = 1e-10 * (b - a).abs().max(1e-30);
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = det_at(m)?;
        if fm == 0.0 {
            a = m;
            b = m;
            break;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    let alpha = 0.5 * (a + b);
    let st = integrate_single(&bundle.sym, &bundle.init, alpha, t, dt)?;
    let rho0 = bundle.init.phi0.eval(alpha).powi(2);
    Ok(Fold {
        seg,
        point: CurvePoint {
            alpha,
            x: st.x,
            p: st.p,
            s: st.s,
            rho: characteristic_density(rho0, st.jx, st.damp),
            det_jx: st.jx,
        },
        damp: st.damp,
    })
}

fn interpolate_fold(seg: usize, q0: &CurvePoint, q1: &CurvePoint, d0: f64, d1: f64) -> Fold {
    let w = q0.det_jx / (q0.det_jx - q1.det_jx);
    let lerp = |a: f64, b: f64| a + w * (b - a);
    Fold {
        seg,
        point: CurvePoint {
            alpha: lerp(q0.alpha, q1.alpha),
            x: lerp(q0.x, q1.x),
            p: lerp(q0.p, q1.p),
            s: lerp(q0.s, q1.s),
            rho: f64::NAN,
            det_jx: 0.0,
        },
        damp: lerp(d0, d1),
    }
}

struct BranchData {
    alphas: Vec<f64>,
    xs: Vec<f64>,
    ss: Vec<f64>,
    ps: Vec<f64>,
    jxs: Vec<f64>,
    damps: Vec<f64>,
    rho0s: Vec<f64>,
}

impl BranchData {
    fn new() -> Self {
        BranchData {
            alphas: vec![],
            xs: vec![],
            ss: vec![],
            ps: vec![],
            jxs: vec![],
            damps: vec![],
            rho0s: vec![],
        }
    }

    fn push(&mut self, alpha: f64, x: f64, s: f64, p: f64, jx: f64, damp: f64, rho0: f64) {
        self.alphas.push(alpha);
        self.xs.push(x);
        self.ss.push(s);
        self.ps.push(p);
        self.jxs.push(jx);
        self.damps.push(damp);
        self.rho0s.push(rho0);
    }

    fn remove(&mut self, i: usize) {
        self.alphas.remove(i);
        self.xs.remove(i);
        self.ss.remove(i);
        self.ps.remove(i);
        self.jxs.remove(i);
        self.damps.remove(i);
        self.rho0s.remove(i);
    }

    fn len(&self) -> usize {
        self.alphas.len()
    }
}

fn build_branches(
    points: &[CurvePoint],
    damp: &[f64],
    folds: &[Fold],
    rho0_at: &dyn Fn(f64) -> f64,
) -> Result<Vec<Branch>> {
    let mut branches = Vec::new();
    let mut start = 0usize;
    let mut lead: Option<&Fold> = None;
    let mut cuts: Vec<(usize, Option<&Fold>)> = folds.iter().map(|f| (f.seg, Some(f))).collect();
    cuts.push((points.len() - 1, None));

    for (seg_end, cut) in cuts {
        let mut d = BranchData::new();
        if let Some(f) = lead {
            d.push(
                f.point.alpha,
                f.point.x,
                f.point.s,
                f.point.p,
                f.point.det_jx,
                f.damp,
                rho0_at(f.point.alpha),
            );
        }
        for i in start..=seg_end {
            let q = &points[i];
            if d.alphas.last().map(|&a| q.alpha > a).unwrap_or(true) {
                d.push(
                    q.alpha,
                    q.x,
                    q.s,
                    q.p,
                    q.det_jx,
                    damp[i],
                    rho0_at(q.alpha),
                );
            }
        }
        if let Some(f) = cut {
            if d.alphas.last().map(|&a| f.point.alpha > a).unwrap_or(true) {
                d.push(
                    f.point.alpha,
                    f.point.x,
                    f.point.s,
                    f.point.p,
                    f.point.det_jx,
                    f.damp,
                    rho0_at(f.point.alpha),
                );
            }
        }
        // x strictly monotone between folds is an invariant of the fold
        // decomposition; fold points located at sample resolution can leave
        // one stray point at either cut, which is dropped rather than fatal.
        let mut trimmed = true;
        while trimmed && d.len() >= 3 {
            trimmed = false;
            let ascending = d.xs.last().unwrap() >= &d.xs[0];
            let bad = |lo: f64, hi: f64| if ascending { hi < lo } else { hi > lo };
            if bad(d.xs[0], d.xs[1]) {
                d.remove(1);
                trimmed = true;
            }
            let n = d.len();
            if n >= 3 && bad(d.xs[n - 2], d.xs[n - 1]) {
                d.remove(n - 2);
                trimmed = true;
            }
        }
        if d.len() >= 2 {
            let ascending = d.xs.last().unwrap() >= &d.xs[0];
            for w in d.xs.windows(2) {
                let ok = if ascending { w[1] >= w[0] } else { w[1] <= w[0] };
                if !ok {
                    return Err(Error::Inconsistent(format!(
                        "branch projection not monotone near x = {}",
                        w[0]
                    )));
                }
            }
            let id = branches.len();
            branches.push(Branch {
                id,
                alpha_lo: d.alphas[0],
                alpha_hi: *d.alphas.last().unwrap(),
                x_lo: if ascending { d.xs[0] } else { *d.xs.last().unwrap() },
                x_hi: if ascending { *d.xs.last().unwrap() } else { d.xs[0] },
                ascending,
                x_mono: MonotoneCubic::new(d.alphas.clone(), d.xs.clone()),
                x_spl: CubicSpline::new(d.alphas.clone(), d.xs),
                s_spl: CubicSpline::new(d.alphas.clone(), d.ss),
                p_spl: CubicSpline::new(d.alphas.clone(), d.ps),
                jx_spl: CubicSpline::new(d.alphas.clone(), d.jxs),
                damp_spl: CubicSpline::new(d.alphas.clone(), d.damps),
                rho0_spl: CubicSpline::new(d.alphas, d.rho0s),
            });
        }
        start = seg_end + 1;
        lead = cut;
    }
    Ok(branches)
}

impl Branch {
    pub fn covers(&self, x: f64) -> bool {
        let slack = 1e-12 * (1.0 + x.abs());
        x >= self.x_lo - slack && x <= self.x_hi + slack
    }

    /// Label α with x(α) = x on this branch: monotone-cubic inversion for a
    /// guaranteed bracket, then Newton polish on the high-order spline.
    pub fn alpha_at(&self, x: f64) -> Option<f64> {
        let mut alpha = self.x_mono.invert(x, 1e-12)?;
        for _ in 0..4 {
            let r = self.x_spl.eval(alpha) - x;
            let d = self.x_spl.eval_derivative(alpha);
            if d.abs() < 1e-300 {
                break;
            }
            let next = (alpha - r / d).clamp(self.alpha_lo, self.alpha_hi);
            if (next - alpha).abs() <= f64::EPSILON * (1.0 + alpha.abs()) {
                alpha = next;
                break;
            }
            alpha = next;
        }
        Some(alpha)
    }

    pub fn value_at(&self, x: f64) -> Option<BranchValue> {
        let alpha = self.alpha_at(x)?;
        Some(BranchValue {
            branch: self.id,
            alpha,
            s: self.s_spl.eval(alpha),
            p: self.p_spl.eval(alpha),
            rho: self.rho_at_alpha(alpha),
        })
    }

    pub fn s_at_alpha(&self, alpha: f64) -> f64 {
        self.s_spl.eval(alpha)
    }

    pub fn p_at_alpha(&self, alpha: f64) -> f64 {
        self.p_spl.eval(alpha)
    }

    pub fn x_at_alpha(&self, alpha: f64) -> f64 {
        self.x_spl.eval(alpha)
    }

    /// ρ rebuilt from the characteristic formula (ingredients are smooth
    /// across folds; ρ itself is not).
    pub fn rho_at_alpha(&self, alpha: f64) -> f64 {
        characteristic_density(
            self.rho0_spl.eval(alpha).max(0.0),
            self.jx_spl.eval(alpha),
            self.damp_spl.eval(alpha),
        )
    }
}

/// All branches whose x-interval contains the query point; empty list signals
/// vacuum (x beyond the projection of the curve).
pub fn branches_at(curve: &LagrangianCurve, x: f64) -> Vec<BranchValue> {
    curve
        .branches
        .iter()
        .filter(|b| b.covers(x))
        .filter_map(|b| b.value_at(x))
        .collect()
}

/// Segment-pair sweep for self-intersection of the (x, p) polyline. The main
/// manifold assumption is qualitative; this is the numeric report for it.
pub fn curve_self_intersects(curve: &LagrangianCurve) -> bool {
    let pts = &curve.points;
    let n = pts.len();
    for i in 0..n - 1 {
        let (ax, ay, bx, by) = (pts[i].x, pts[i].p, pts[i + 1].x, pts[i + 1].p);
        let (ilo, ihi) = (ax.min(bx), ax.max(bx));
        for j in i + 2..n - 1 {
            let (cx, cy, dx, dy) = (pts[j].x, pts[j].p, pts[j + 1].x, pts[j + 1].p);
            if cx.min(dx) > ihi || cx.max(dx) < ilo {
                continue;
            }
            let d1 = cross(bx - ax, by - ay, cx - ax, cy - ay);
            let d2 = cross(bx - ax, by - ay, dx - ax, dy - ay);
            let d3 = cross(dx - cx, dy - cy, ax - cx, ay - cy);
            let d4 = cross(dx - cx, dy - cy, bx - cx, by - cy);
            if d1 * d2 < 0.0 && d3 * d4 < 0.0 {
                return true;
            }
        }
    }
    false
}

fn cross(ux: f64, uy: f64, vx: f64, vy: f64) -> f64 {
    ux * vy - uy * vx
}
