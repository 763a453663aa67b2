//! Backward-in-time reconstruction.
//!
//! Reversing time turns the characteristic flow around: trajectories are
//! reused, but incoming shock characteristics become outgoing, so the part of
//! the manifold that collapsed into a shock cannot be reconstructed — a fan
//! ("terra incognita") opens between the backward images of the shock's
//! one-sided limit points. Outside the fan the fields follow characteristics;
//! inside, any smooth fill is admissible provided the reconstructed action has
//! no interior minimum below its endpoint values. That constraint is exactly
//! what makes Laplace-type integrals of the reconstruction insensitive to the
//! fill, which the normalized weak-limit statistic
//!
//! ```text
//! I(ε) = C ∫ (u_ε − √ρ_reg e^{−S/ε}) φ dx,     C⁻¹ = ∫ u_ε φ dx,
//! ```
//!
//! quantifies (mode (i): fan inside supp φ, I(ε) → 0; mode (ii): partial
//! overlap, weighted by e^{Ψ/ε} with Ψ the minimal endpoint action).
//!
//! The no-interior-minimum property itself is certified constructively: for
//! admissible symbols (x-independent drift and jump measure, V = 0, or
//! diagonal-linear drift) the projection Jacobian along the p = 0 trajectory
//! from a minimizer x̄₀ is det(e^{tD}) · det(I + M(t) K) with
//! M(t) = ∫₀ᵗ e^{−sD} H_pp e^{−sD} ds ≻ 0 and K = Hess S₀(x̄₀) ⪰ 0, hence
//! never singular.

use crate::error::{Error, Result};
use crate::hamilton::{
    flow_phase_points, integrate_single, Direction, TrajectoryBundle,
};
use crate::hjb::{ShockPoint, ValueField};
use crate::interp::{CubicSpline, HermiteSegment, MonotoneCubic};
use crate::linalg::SquareMat;
use crate::oracle::TestFunction;
use crate::quad;
use crate::symbol::Symbol;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TerraInterval {
    pub lo: f64,
    pub hi: f64,
}

impl TerraInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    fn overlaps(&self, other: &TerraInterval) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }
}

/// The forward-shock state a fan emanates from.
#[derive(Debug, Clone, Copy)]
pub struct ShockAnchor {
    pub x: f64,
    pub p_left: f64,
    pub p_right: f64,
    pub s: f64,
}

/// Fan intervals per backward time.
#[derive(Debug, Clone)]
pub struct TerraHistory {
    /// Backward times τ (τ = 0 is the forward final time).
    pub times: Vec<f64>,
    /// Per backward time, the disjoint intervals Ω(τ), sorted by position.
    pub intervals: Vec<Vec<TerraInterval>>,
    pub anchors: Vec<ShockAnchor>,
}

/// Flows each shock's one-sided limit points backward; Ω(τ) is the open
/// interval between their positions, zero-width at τ = 0. Overlapping fans
/// are unsupported and reported as an error.
pub fn detect_terra_incognita(
    sym: &Symbol,
    shocks: &[ShockPoint],
    t_back: f64,
    dt: f64,
) -> Result<TerraHistory> {
    let anchors: Vec<ShockAnchor> = shocks
        .iter()
        .map(|sp| ShockAnchor {
            x: sp.x,
            p_left: sp.p_left,
            p_right: sp.p_right,
            s: sp.s,
        })
        .collect();
    if anchors.is_empty() {
        let times = crate::hamilton::time_grid(t_back, dt);
        let n = times.len();
        return Ok(TerraHistory {
            times,
            intervals: vec![vec![]; n],
            anchors,
        });
    }
    let mut seeds = Vec::with_capacity(2 * anchors.len());
    for a in &anchors {
        seeds.push((a.x, a.p_left, a.s));
        seeds.push((a.x, a.p_right, a.s));
    }
    let paths = flow_phase_points(sym, &seeds, t_back, dt, Direction::Backward)?;
    let times = crate::hamilton::time_grid(t_back, dt);
    let mut intervals = Vec::with_capacity(times.len());
    for it in 0..times.len() {
        let mut at_t: Vec<TerraInterval> = Vec::with_capacity(anchors.len());
        for k in 0..anchors.len() {
            let xl = paths[2 * k][it].0;
            let xr = paths[2 * k + 1][it].0;
            at_t.push(TerraInterval {
                lo: xl.min(xr),
                hi: xl.max(xr),
            });
        }
        at_t.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("finite positions"));
        for w in at_t.windows(2) {
            if w[0].overlaps(&w[1]) {
                return Err(Error::TerraOverlap {
                    a_lo: w[0].lo,
                    a_hi: w[0].hi,
                    b_lo: w[1].lo,
                    b_hi: w[1].hi,
                });
            }
        }
        intervals.push(at_t);
    }
    Ok(TerraHistory {
        times,
        intervals,
        anchors,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FillStrategy {
    /// Cubic matching one-sided values and first derivatives at the fan
    /// endpoints.
    HermiteMatched,
    /// The matched cubic plus a positive interior quartic bump of the given
    /// amplitude; same endpoint data, different interior — the natural second
    /// fill for fill-independence comparisons.
    HermiteBump { amplitude: f64 },
    /// Straight line between the endpoint values (derivative mismatch is
    /// admissible; only the minimum property is constrained). This is the
    /// extremal admissible fill: its interior sits at the endpoint values.
    Linear,
}

impl FillStrategy {
    pub fn name(&self) -> &'static str {
        match self {
            FillStrategy::HermiteMatched => "hermite-matched",
            FillStrategy::HermiteBump { .. } => "hermite-bump",
            FillStrategy::Linear => "linear",
        }
    }
}

/// Evaluable fill: cubic segment plus an optional interior quartic bump
/// 16·κ·(x−a)²(b−x)²/(b−a)⁴ (unit peak at the midpoint, C¹-flat at the ends).
#[derive(Debug, Clone, Copy)]
struct FillCurve {
    seg: HermiteSegment,
    bump_amp: f64,
}

impl FillCurve {
    fn eval(&self, x: f64) -> f64 {
        let (a, b) = (self.seg.a, self.seg.b);
        let w = 16.0 * (x - a).powi(2) * (b - x).powi(2) / (b - a).powi(4);
        self.seg.eval(x) + self.bump_amp * w
    }

    fn min_on_segment(&self, samples: usize) -> f64 {
        (0..=samples)
            .map(|i| {
                self.eval(self.seg.a + (self.seg.b - self.seg.a) * i as f64 / samples as f64)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct FillRecord {
    pub interval: TerraInterval,
    pub strategy: String,
    /// Action values at the fan endpoints (characteristic side).
    pub s_endpoints: (f64, f64),
}

/// Reconstructed (S, ρ_reg) at one backward time.
#[derive(Debug, Clone)]
pub struct ReconstructedField {
    /// Backward time τ; forward time is T − τ.
    pub tau: f64,
    pub t_forward: f64,
    pub x_grid: Vec<f64>,
    /// NaN outside the reconstructed region.
    pub s: Vec<f64>,
    pub rho: Vec<f64>,
    pub fills: Vec<FillRecord>,
}

impl ReconstructedField {
    /// √ρ_reg e^{−S/ε} with vacuum (ρ = 0) giving 0.
    pub fn u_as(&self, eps: f64) -> Vec<f64> {
        self.x_grid
            .iter()
            .enumerate()
            .map(|(i, _)| {
                let rho = self.rho[i];
                if rho > 0.0 && self.s[i].is_finite() {
                    rho.sqrt() * (-self.s[i] / eps).exp()
                } else {
                    0.0
                }
            })
            .collect()
    }
}

/// Characteristic-side fields at a forward snapshot without any fill;
/// used for the shock-free weak-limit statistic.
pub fn fields_from_value(value: &ValueField, t_forward: f64, tau: f64) -> ReconstructedField {
    let mut s = Vec::with_capacity(value.x_grid.len());
    let mut rho = Vec::with_capacity(value.x_grid.len());
    for cell in &value.cells {
        match cell {
            Some(c) => {
                s.push(c.phi);
                rho.push(c.rho.max(0.0));
            }
            None => {
                s.push(f64::NAN);
                rho.push(0.0);
            }
        }
    }
    ReconstructedField {
        tau,
        t_forward,
        x_grid: value.x_grid.clone(),
        s,
        rho,
        fills: vec![],
    }
}

/// Backward reconstruction at backward time τ from the forward bundle and the
/// final-time value field. Outside the fans the fields are transported along
/// the retained characteristics; inside each fan S is filled by the chosen
/// strategy and ρ_reg linearly. A fill whose interior dips below the endpoint
/// minimum is rejected.
pub fn reconstruct(
    bundle: &TrajectoryBundle,
    value_final: &ValueField,
    tau: f64,
    x_grid: &[f64],
    fill: FillStrategy,
) -> Result<ReconstructedField> {
    let t_total = bundle.t_final();
    let t_forward = t_total - tau;
    if t_forward < -1e-12 {
        return Err(Error::Scenario(format!(
            "backward time {tau} exceeds the forward horizon {t_total}"
        )));
    }
    let it = bundle.nearest_time_index(t_forward);

    // clip intervals in label space from the final-time shocks
    let mut clips: Vec<(f64, f64, &ShockPoint)> = value_final
        .shocks
        .iter()
        .map(|sp| (sp.alpha_left, sp.alpha_right, sp))
        .collect();
    clips.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite labels"));

    // retained pieces of the label axis
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    let mut lo = bundle.alphas[0];
    for &(a_l, a_r, _) in &clips {
        if a_l > lo {
            pieces.push((lo, a_l));
        }
        lo = lo.max(a_r);
    }
    let hi = *bundle.alphas.last().unwrap();
    if hi > lo {
        pieces.push((lo, hi));
    }

    // per piece, build x ↦ (s, p, rho) interpolants at forward time t;
    // monotone inversion bracket + high-order spline values, as in the
    // branch machinery
    struct Piece {
        x_lo: f64,
        x_hi: f64,
        alpha_lo: f64,
        alpha_hi: f64,
        s: CubicSpline,
        p: CubicSpline,
        rho: CubicSpline,
        x_mono: MonotoneCubic,
        x_spl: CubicSpline,
    }

    impl Piece {
        fn alpha_at(&self, x: f64) -> Option<f64> {
            let mut alpha = self.x_mono.invert(x, 1e-12)?;
            for _ in 0..4 {
                let r = self.x_spl.eval(alpha) - x;
                let d = self.x_spl.eval_derivative(alpha);
                if d.abs() < 1e-300 {
                    break;
                }
                alpha = (alpha - r / d).clamp(self.alpha_lo, self.alpha_hi);
            }
            Some(alpha)
        }
    }
    let dt = bundle.dt();
    let mut built: Vec<Piece> = Vec::new();
    for &(a_lo, a_hi) in &pieces {
        let mut alphas = Vec::new();
        let mut xs = Vec::new();
        let mut ss = Vec::new();
        let mut ps = Vec::new();
        let mut rhos = Vec::new();
        fn push_state(
            store: (&mut Vec<f64>, &mut Vec<f64>, &mut Vec<f64>, &mut Vec<f64>, &mut Vec<f64>),
            alpha: f64,
            st: crate::hamilton::PointState,
            rho0: f64,
        ) {
            let rho = crate::density::characteristic_density(rho0, st.jx, st.damp);
            store.0.push(alpha);
            store.1.push(st.x);
            store.2.push(st.s);
            store.3.push(st.p);
            store.4.push(if rho.is_nan() { 0.0 } else { rho });
        }
        // exact boundary labels, then the interior grid labels
        let boundary_lo = !bundle
            .alphas
            .iter()
            .any(|&a| (a - a_lo).abs() < 1e-14);
        if boundary_lo {
            let st = integrate_single(&bundle.sym, &bundle.init, a_lo, t_forward, dt)?;
            push_state(
                (&mut alphas, &mut xs, &mut ss, &mut ps, &mut rhos),
                a_lo,
                st,
                bundle.init.phi0.eval(a_lo).powi(2),
            );
        }
        for (ia, &a) in bundle.alphas.iter().enumerate() {
            if a >= a_lo - 1e-14
                && a <= a_hi + 1e-14
                && alphas.last().map(|&prev| a > prev).unwrap_or(true)
            {
                let st = bundle.state(it, ia);
                push_state(
                    (&mut alphas, &mut xs, &mut ss, &mut ps, &mut rhos),
                    a,
                    st,
                    bundle.rho0[ia],
                );
            }
        }
        if alphas.last().map(|&prev| a_hi > prev).unwrap_or(false) {
            let st = integrate_single(&bundle.sym, &bundle.init, a_hi, t_forward, dt)?;
            push_state(
                (&mut alphas, &mut xs, &mut ss, &mut ps, &mut rhos),
                a_hi,
                st,
                bundle.init.phi0.eval(a_hi).powi(2),
            );
        }
        if alphas.len() < 2 {
            continue;
        }
        // retained pieces keep det Jx > 0, so x is ascending in α
        for w in xs.windows(2) {
            if w[1] <= w[0] {
                return Err(Error::Inconsistent(format!(
                    "retained piece folds at x = {}",
                    w[0]
                )));
            }
        }
        built.push(Piece {
            x_lo: xs[0],
            x_hi: *xs.last().unwrap(),
            alpha_lo: alphas[0],
            alpha_hi: *alphas.last().unwrap(),
            s: CubicSpline::new(alphas.clone(), ss),
            p: CubicSpline::new(alphas.clone(), ps),
            rho: CubicSpline::new(alphas.clone(), rhos),
            x_mono: MonotoneCubic::new(alphas.clone(), xs.clone()),
            x_spl: CubicSpline::new(alphas, xs),
        });
    }

    // fan intervals at this backward time = gaps between consecutive pieces
    let mut fills = Vec::new();
    let mut fill_segments: Vec<(TerraInterval, FillCurve, (f64, f64), (f64, f64))> = Vec::new();
    for w in built.windows(2) {
        let left = &w[0];
        let right = &w[1];
        let interval = TerraInterval {
            lo: left.x_hi,
            hi: right.x_lo,
        };
        if interval.width() <= 0.0 {
            continue;
        }
        let alpha_l = left.alpha_at(interval.lo).ok_or_else(|| {
            Error::Inconsistent("fan left endpoint fell off its piece".into())
        })?;
        let alpha_r = right.alpha_at(interval.hi).ok_or_else(|| {
            Error::Inconsistent("fan right endpoint fell off its piece".into())
        })?;
        let s_l = left.s.eval(alpha_l);
        let s_r = right.s.eval(alpha_r);
        let rho_l = left.rho.eval(alpha_l);
        let rho_r = right.rho.eval(alpha_r);
        let matched = HermiteSegment {
            a: interval.lo,
            b: interval.hi,
            ya: s_l,
            yb: s_r,
            da: left.p.eval(alpha_l),
            db: right.p.eval(alpha_r),
        };
        let seg = match fill {
            FillStrategy::HermiteMatched => FillCurve {
                seg: matched,
                bump_amp: 0.0,
            },
            FillStrategy::HermiteBump { amplitude } => FillCurve {
                seg: matched,
                bump_amp: amplitude,
            },
            FillStrategy::Linear => {
                let slope = (s_r - s_l) / interval.width();
                FillCurve {
                    seg: HermiteSegment {
                        a: interval.lo,
                        b: interval.hi,
                        ya: s_l,
                        yb: s_r,
                        da: slope,
                        db: slope,
                    },
                    bump_amp: 0.0,
                }
            }
        };
        let endpoint_min = s_l.min(s_r);
        let interior_min = seg.min_on_segment(400);
        if interior_min < endpoint_min - 1e-12 {
            return Err(Error::FillInteriorMinimum {
                strategy: fill.name().into(),
                min: interior_min,
                endpoint_min,
            });
        }
        fills.push(FillRecord {
            interval,
            strategy: fill.name().into(),
            s_endpoints: (s_l, s_r),
        });
        fill_segments.push((interval, seg, (rho_l, rho_r), (s_l, s_r)));
    }

    // sample everything on the output grid
    let mut s = Vec::with_capacity(x_grid.len());
    let mut rho = Vec::with_capacity(x_grid.len());
    'outer: for &x in x_grid {
        for piece in &built {
            if x >= piece.x_lo - 1e-12 && x <= piece.x_hi + 1e-12 {
                if let Some(alpha) = piece.alpha_at(x) {
                    s.push(piece.s.eval(alpha));
                    rho.push(piece.rho.eval(alpha).max(0.0));
                    continue 'outer;
                }
            }
        }
        for (interval, seg, (rho_l, rho_r), _) in &fill_segments {
            if x > interval.lo && x < interval.hi {
                let w = (x - interval.lo) / interval.width();
                s.push(seg.eval(x));
                rho.push((rho_l * (1.0 - w) + rho_r * w).max(0.0));
                continue 'outer;
            }
        }
        s.push(f64::NAN);
        rho.push(0.0);
    }

    Ok(ReconstructedField {
        tau,
        t_forward,
        x_grid: x_grid.to_vec(),
        s,
        rho,
        fills,
    })
}

/// Hypotheses and data for the no-interior-minimum check at a candidate
/// minimizer x̄₀: the gradient must vanish and the Hessian be positive
/// semi-definite there.
#[derive(Debug, Clone)]
pub struct LemmaPoint {
    pub x0: Vec<f64>,
    pub grad_s0: Vec<f64>,
    pub hess_s0: SquareMat,
}

#[derive(Debug, Clone)]
pub struct LemmaReport {
    pub times: Vec<f64>,
    pub det_j: Vec<f64>,
    pub nonsingular: bool,
    /// Which drift form applied ("constant" or "linear-diagonal").
    pub drift_form: String,
}

/// Computes ∂x/∂x₀ along the p = 0 trajectory from x̄₀ via
/// det J(t) = det(e^{tD}) · det(I + M(t)K), refusing when the symbol flags
/// violate the admissible class (x-dependent drift/measure or V ≠ 0).
pub fn lemma_check(
    sym: &Symbol,
    point: &LemmaPoint,
    t_final: f64,
    n_steps: usize,
) -> Result<LemmaReport> {
    let flags = sym.flags();
    let mut missing = Vec::new();
    if !flags.zero_v {
        missing.push("V = 0");
    }
    if !flags.x_independent_mu {
        missing.push("x-independent jump measure");
    }
    if !(flags.x_independent_b || flags.linear_diagonal_b) {
        missing.push("constant or linear-diagonal drift");
    }
    if !missing.is_empty() {
        return Err(Error::LemmaHypotheses(format!(
            "symbol violates: {}",
            missing.join(", ")
        )));
    }
    let n = sym.dim();
    if point.x0.len() != n || point.grad_s0.len() != n || point.hess_s0.n != n {
        return Err(Error::LemmaHypotheses("dimension mismatch".into()));
    }
    let grad_norm = point.grad_s0.iter().map(|g| g.abs()).fold(0.0f64, f64::max);
    if grad_norm > 1e-10 {
        return Err(Error::LemmaHypotheses(format!(
            "∇S₀(x̄₀) = {:?} does not vanish",
            point.grad_s0
        )));
    }
    if !point.hess_s0.is_positive_semidefinite(1e-12) {
        return Err(Error::LemmaHypotheses(format!(
            "Hess S₀(x̄₀) has negative eigenvalues {:?}",
            point.hess_s0.sym_eigenvalues()
        )));
    }

    // D = ∂B/∂x at p = 0 (diagonal constant by the flags)
    let zero_p = vec![0.0; n];
    let d0 = sym.derivatives(&point.x0, &zero_p)?;
    let dmat = d0.h_xp; // (i,j) = ∂B_j/∂x_i at p = 0
    let d_diag: Vec<f64> = (0..n).map(|i| dmat.get(i, i)).collect();
    let drift_form = if d_diag.iter().all(|&d| d == 0.0) {
        "constant"
    } else {
        "linear-diagonal"
    };

    // fine trajectory ẋ = H_p(x, 0) with M accumulated by the trapezoid of
    // the congruence-weighted Hessian
    let oversample = 16;
    let fine = n_steps * oversample;
    let h = t_final / fine as f64;
    let mut x = point.x0.clone();
    let mut m = SquareMat::zero(n);
    let mut times = Vec::with_capacity(n_steps + 1);
    let mut dets = Vec::with_capacity(n_steps + 1);
    let k = point.hess_s0;

    let weighted_hpp = |x: &[f64], s: f64| -> Result<SquareMat> {
        let hpp = sym.derivatives(x, &zero_p)?.h_pp;
        let mut w = SquareMat::zero(n);
        for i in 0..n {
            for j in 0..n {
                w.set(
                    i,
                    j,
                    (-s * (d_diag[i] + d_diag[j])).exp() * hpp.get(i, j),
                );
            }
        }
        Ok(w)
    };

    let record = |times: &mut Vec<f64>, dets: &mut Vec<f64>, t: f64, m: &SquareMat| {
        let mk = m.mul(&k);
        let inner = SquareMat::identity(n).add(&mk);
        let exp_trace = (t * d_diag.iter().sum::<f64>()).exp();
        times.push(t);
        dets.push(exp_trace * inner.det());
    };

    record(&mut times, &mut dets, 0.0, &m);
    let mut w_prev = weighted_hpp(&x, 0.0)?;
    for step in 1..=fine {
        let t_prev = (step - 1) as f64 * h;
        // RK4 on ẋ = H_p(x, 0); p stays 0 for admissible symbols
        let f = |x: &[f64]| -> Result<Vec<f64>> { Ok(sym.derivatives(x, &zero_p)?.h_p) };
        let k1 = f(&x)?;
        let x2: Vec<f64> = x.iter().zip(&k1).map(|(xi, ki)| xi + 0.5 * h * ki).collect();
        let k2 = f(&x2)?;
        let x3: Vec<f64> = x.iter().zip(&k2).map(|(xi, ki)| xi + 0.5 * h * ki).collect();
        let k3 = f(&x3)?;
        let x4: Vec<f64> = x.iter().zip(&k3).map(|(xi, ki)| xi + h * ki).collect();
        let k4 = f(&x4)?;
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = step as f64 * h;
        // Simpson panel with the midpoint taken from the RK4 interior stage
        let w_mid = weighted_hpp(&x3, t_prev + 0.5 * h)?;
        let w = weighted_hpp(&x, t)?;
        m.add_assign(&w_prev.add(&w_mid.scale(4.0)).add(&w).scale(h / 6.0));
        w_prev = w;
        if step % oversample == 0 {
            record(&mut times, &mut dets, t, &m);
        }
    }
    let nonsingular = dets.iter().all(|&d| d > 0.0);
    Ok(LemmaReport {
        times,
        det_j: dets,
        nonsingular,
        drift_form: drift_form.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeakLimitMode {
    /// Statement (i): fan inside supp φ; normalized statistic C·∫(…)φ.
    Normalized,
    /// Statement (ii): partial overlap; e^{Ψ/ε}-weighted unnormalized
    /// statistic with Ψ the minimal endpoint action of the designated fan.
    EndpointWeighted,
}

#[derive(Debug, Clone)]
pub struct WeakLimitEntry {
    pub eps: f64,
    pub value: f64,
    pub quad_tol: f64,
}

#[derive(Debug, Clone)]
pub struct WeakLimitReport {
    pub mode: WeakLimitMode,
    pub entries: Vec<WeakLimitEntry>,
    /// Least-squares slope of log|I| against log ε over nonzero entries.
    pub slope: Option<f64>,
    /// Ψ for mode (ii).
    pub psi: Option<f64>,
}

/// Evaluates the weak-limit statistic over an ε ladder. `u_provider`
/// returns the reference solution u_ε on the field's grid.
pub fn weak_limit_test(
    u_provider: &dyn Fn(f64) -> Result<Vec<f64>>,
    recon: &ReconstructedField,
    phi: &TestFunction,
    eps_list: &[f64],
    mode: WeakLimitMode,
) -> Result<WeakLimitReport> {
    let xs = &recon.x_grid;
    let dx = xs[1] - xs[0];
    let psi = match mode {
        WeakLimitMode::EndpointWeighted => {
            let fill = recon.fills.first().ok_or_else(|| {
                Error::Scenario("mode (ii) needs a fan interval in the reconstruction".into())
            })?;
            Some(fill.s_endpoints.0.min(fill.s_endpoints.1))
        }
        WeakLimitMode::Normalized => None,
    };
    let mut entries = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let u = u_provider(eps)?;
        if u.len() != xs.len() {
            return Err(Error::Inconsistent(
                "u_eps provider grid mismatch".into(),
            ));
        }
        let u_rec = recon.u_as(eps);
        let diff: Vec<f64> = (0..xs.len())
            .map(|i| (u[i] - u_rec[i]) * phi.eval(xs[i]))
            .collect();
        let (num, num_est) = quad::simpson_with_estimate(&diff, dx);
        let (value, quad_tol) = match mode {
            WeakLimitMode::Normalized => {
                let norm: Vec<f64> = (0..xs.len()).map(|i| u[i] * phi.eval(xs[i])).collect();
                let (den, den_est) = quad::simpson_with_estimate(&norm, dx);
                if den.abs() < 1e-300 {
                    return Err(Error::Inconsistent("normalization integral vanished".into()));
                }
                let v = num / den;
                // the normalized statistic cannot be certified below the
                // relative quadrature target of its constituent integrals
                let tol = ((num_est + v.abs() * den_est) / den.abs()).max(quad::REL_TARGET);
                (v, tol)
            }
            WeakLimitMode::EndpointWeighted => {
                let w = (psi.unwrap() / eps).exp();
                (w * num, w * num_est)
            }
        };
        entries.push(WeakLimitEntry {
            eps,
            value,
            quad_tol: quad_tol.max(quad::ABS_FLOOR),
        });
    }
    let pts: Vec<(f64, f64)> = entries
        .iter()
        .filter(|e| e.value.abs() > 0.0)
        .map(|e| (e.eps.ln(), e.value.abs().ln()))
        .collect();
    let slope = fit_slope(&pts);
    Ok(WeakLimitReport {
        mode,
        entries,
        slope,
        psi,
    })
}

/// Least-squares slope of y against x.
pub fn fit_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sy: f64 = pts.iter().map(|p| p.1).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-300 {
        return None;
    }
    Some((n * sxy - sx * sy) / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamilton::{integrate_bundle, ActionForm, AmplitudeForm, InitialData};
    use crate::hjb::value_function;
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

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn no_shocks_no_terra() {
        let sym = heat();
        let hist = detect_terra_incognita(&sym, &[], 0.5, 1e-3).unwrap();
        assert!(hist.intervals.iter().all(|v| v.is_empty()));
    }

    #[test]
    fn fan_widths_grow_monotonically() {
        let sym = heat();
        let b = integrate_bundle(&sym, &bump_init(641), 1.0, 1e-3).unwrap();
        let c = snapshot(&b, 1.0).unwrap();
        let vf = value_function(&c, &grid(-3.5, 3.5, 1024), &sym).unwrap();
        assert_eq!(vf.shocks.len(), 1);
        let hist = detect_terra_incognita(&sym, &vf.shocks, 1.0, 1e-3).unwrap();
        // zero-width apex at τ = 0
        assert!(hist.intervals[0][0].width() <= 1e-12);
        let mut prev = 0.0;
        for iv in &hist.intervals {
            let w = iv[0].width();
            assert!(w >= prev - 1e-12, "fan width shrank: {w} < {prev}");
            prev = w;
        }
        // heat fan: width 2τ(p_l − p_r)
        let sp = &vf.shocks[0];
        let last = hist.intervals.last().unwrap()[0];
        assert_relative_eq!(
            last.width(),
            2.0 * 1.0 * (sp.p_left - sp.p_right),
            max_relative = 1e-6
        );
    }

    #[test]
    fn no_caustic_reconstruction_recovers_initial_data() {
        let sym = heat();
        let b = integrate_bundle(&sym, &bump_init(321), 0.3, 1e-3).unwrap();
        let c = snapshot(&b, 0.3).unwrap();
        let xg = grid(-3.5, 3.5, 801);
        let vf = value_function(&c, &xg, &sym).unwrap();
        assert!(vf.shocks.is_empty());
        let rec = reconstruct(&b, &vf, 0.3, &xg, FillStrategy::HermiteMatched).unwrap();
        assert!(rec.fills.is_empty());
        // accuracy is limited by the shape-preserving interpolation on the
        // label grid (O(Δα³)), not by the integrator
        for (i, &x) in xg.iter().enumerate() {
            if x.abs() < 2.5 {
                assert!(
                    (rec.s[i] - b.init.s0.eval(x)).abs() <= 1e-5,
                    "S residual {} at x={x}",
                    rec.s[i] - b.init.s0.eval(x)
                );
                assert!(
                    (rec.rho[i] - b.init.phi0.eval(x).powi(2)).abs() <= 1e-4,
                    "rho residual at x={x}"
                );
            }
        }
    }

    #[test]
    fn post_shock_reconstruction_fills_fan() {
        let sym = heat();
        let b = integrate_bundle(&sym, &bump_init(641), 1.0, 1e-3).unwrap();
        let c = snapshot(&b, 1.0).unwrap();
        let xg = grid(-3.5, 3.5, 1024);
        let vf = value_function(&c, &xg, &sym).unwrap();
        let rec = reconstruct(&b, &vf, 1.0, &xg, FillStrategy::HermiteMatched).unwrap();
        assert_eq!(rec.fills.len(), 1);
        let iv = rec.fills[0].interval;
        assert!(iv.lo < 0.0 && iv.hi > 0.0, "fan {iv:?} should straddle 0");
        // outside the fan the initial data is recovered
        for (i, &x) in xg.iter().enumerate() {
            if x.abs() < 2.5 && (x < iv.lo - 0.05 || x > iv.hi + 0.05) {
                assert!(
                    (rec.s[i] - b.init.s0.eval(x)).abs() <= 1e-6,
                    "S residual at x={x}: {}",
                    rec.s[i] - b.init.s0.eval(x)
                );
            }
        }
        // the hermite fill tops out like the true bump but is not equal to it
        let mid = xg.iter().position(|&x| x.abs() < 4e-3).unwrap();
        assert!(rec.s[mid] > 0.3 && rec.s[mid] < 0.7);
        // min-property: no value below the endpoint min
        let endpoint_min = rec.fills[0].s_endpoints.0.min(rec.fills[0].s_endpoints.1);
        for (i, &x) in xg.iter().enumerate() {
            if x > iv.lo && x < iv.hi {
                assert!(rec.s[i] >= endpoint_min - 1e-10);
            }
        }
    }

    #[test]
    fn linear_and_hermite_fills_differ_inside_only() {
        let sym = heat();
        let b = integrate_bundle(&sym, &bump_init(641), 1.0, 1e-3).unwrap();
        let c = snapshot(&b, 1.0).unwrap();
        let xg = grid(-3.5, 3.5, 1024);
        let vf = value_function(&c, &xg, &sym).unwrap();
        let r1 = reconstruct(&b, &vf, 1.0, &xg, FillStrategy::HermiteMatched).unwrap();
        let r2 = reconstruct(&b, &vf, 1.0, &xg, FillStrategy::Linear).unwrap();
        let iv = r1.fills[0].interval;
        let mut inside_diff = 0.0f64;
        for (i, &x) in xg.iter().enumerate() {
            let d = (r1.s[i] - r2.s[i]).abs();
            if x < iv.lo || x > iv.hi {
                assert!(d.is_nan() || d <= 1e-12, "outside-fan difference {d} at {x}");
            } else {
                inside_diff = inside_diff.max(d);
            }
        }
        assert!(inside_diff > 1e-3, "fills too similar: {inside_diff}");
    }

    #[test]
    fn lemma_heat_closed_form() {
        let sym = heat();
        let point = LemmaPoint {
            x0: vec![0.0],
            grad_s0: vec![0.0],
            hess_s0: SquareMat::from_rows(1, &[2.0]),
        };
        let rep = lemma_check(&sym, &point, 2.0, 40).unwrap();
        assert!(rep.nonsingular);
        for (t, d) in rep.times.iter().zip(&rep.det_j) {
            assert_relative_eq!(*d, 1.0 + 4.0 * t, epsilon = 1e-9);
        }
    }

    #[test]
    fn lemma_flat_minimum_keeps_unit_jacobian() {
        let sym = heat();
        let point = LemmaPoint {
            x0: vec![0.3],
            grad_s0: vec![0.0],
            hess_s0: SquareMat::from_rows(1, &[0.0]),
        };
        let rep = lemma_check(&sym, &point, 2.0, 20).unwrap();
        for d in &rep.det_j {
            assert_relative_eq!(*d, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lemma_two_dimensional_positive_spectrum() {
        let a = vec![
            crate::poly::Poly::constant(2, 1.0),
            crate::poly::Poly::constant(2, 0.5),
            crate::poly::Poly::constant(2, 0.5),
            crate::poly::Poly::constant(2, 1.0),
        ];
        let sym = Symbol::new(
            2,
            a,
            crate::poly::Poly::zero(2),
            vec![crate::poly::Poly::zero(2), crate::poly::Poly::zero(2)],
            vec![],
            vec![(-4.0, 4.0), (-4.0, 4.0)],
        )
        .unwrap();
        // H_pp = 2A = [[2,1],[1,2]], Hess S0 = diag(1,3)
        let point = LemmaPoint {
            x0: vec![0.0, 0.0],
            grad_s0: vec![0.0, 0.0],
            hess_s0: SquareMat::diag(2, &[1.0, 3.0]),
        };
        let rep = lemma_check(&sym, &point, 2.0, 20).unwrap();
        assert!(rep.nonsingular);
        // det(I + t·H_pp·K) with eigenvalues of H_pp·K both positive
        let last = *rep.det_j.last().unwrap();
        let t = 2.0;
        let expected = (1.0 + 2.0 * t) * (1.0 + 6.0 * t) - 3.0 * t * t;
        assert_relative_eq!(last, expected, max_relative = 1e-8);
    }

    #[test]
    fn lemma_refuses_potential() {
        let sym = Symbol::new_1d(&[1.0], &[0.1], &[], vec![], (-2.0, 2.0)).unwrap();
        let point = LemmaPoint {
            x0: vec![0.0],
            grad_s0: vec![0.0],
            hess_s0: SquareMat::from_rows(1, &[1.0]),
        };
        match lemma_check(&sym, &point, 1.0, 10) {
            Err(Error::LemmaHypotheses(msg)) => assert!(msg.contains("V = 0")),
            other => panic!("expected hypothesis refusal, got {other:?}"),
        }
    }

    #[test]
    fn lemma_linear_diagonal_drift() {
        let sym = Symbol::new_1d(&[1.0], &[], &[0.0, 0.7], vec![], (-6.0, 6.0)).unwrap();
        let point = LemmaPoint {
            x0: vec![0.2],
            grad_s0: vec![0.0],
            hess_s0: SquareMat::from_rows(1, &[1.5]),
        };
        let rep = lemma_check(&sym, &point, 1.5, 30).unwrap();
        assert_eq!(rep.drift_form, "linear-diagonal");
        assert!(rep.nonsingular);
        // closed form: det J = e^{bt}(1 + K ∫₀ᵗ 2 e^{−2bs} ds)
        let b = 0.7;
        let k = 1.5;
        for (t, d) in rep.times.iter().zip(&rep.det_j) {
            let m = 2.0 * (1.0 - (-2.0 * b * t).exp()) / (2.0 * b);
            let expected = (b * t).exp() * (1.0 + m * k);
            assert_relative_eq!(*d, expected, max_relative = 1e-7);
        }
    }

    #[test]
    fn weak_limit_normalization_identity() {
        // u_eps == reconstruction: the statistic is exactly 0 and the
        // normalization is finite.
        let xg = grid(-3.0, 3.0, 601);
        let rec = ReconstructedField {
            tau: 0.0,
            t_forward: 0.0,
            x_grid: xg.clone(),
            s: xg.iter().map(|&x| 0.5 * x * x).collect(),
            rho: xg.iter().map(|_| 1.0).collect(),
            fills: vec![],
        };
        let provider = |eps: f64| -> Result<Vec<f64>> { Ok(rec.u_as(eps)) };
        let phi = TestFunction::Gaussian {
            amp: 1.0,
            center: 0.0,
            width: 1.0,
        };
        let rep = weak_limit_test(
            &provider,
            &rec,
            &phi,
            &[0.1, 0.05],
            WeakLimitMode::Normalized,
        )
        .unwrap();
        for e in &rep.entries {
            assert!(e.value.abs() <= 1e-14);
        }
    }

    #[test]
    fn shock_free_statistic_decays_first_order() {
        // Pre-caustic fields vs the heat-kernel oracle: I(eps) = O(eps).
        // The action needs interior minima (a two-well form) so the
        // statistic's Laplace point stays fixed as eps shrinks, and the test
        // function sits over one well to avoid cross-well sign cancellation.
        let sym = heat();
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
        let b = integrate_bundle(&sym, &init, 0.3, 1e-3).unwrap();
        let c = snapshot(&b, 0.2).unwrap();
        let xg = grid(-3.5, 3.5, 701);
        let vf = value_function(&c, &xg, &sym).unwrap();
        let rec = fields_from_value(&vf, 0.2, 0.1);
        let init = b.init.clone();
        let grid_copy = xg.clone();
        let provider = move |eps: f64| -> crate::error::Result<Vec<f64>> {
            let u0 = |y: f64| (-init.s0.eval(y) / eps).exp() * init.phi0.eval(y);
            Ok(
                crate::oracle::heat_kernel_solve(&u0, (-3.0, 3.0), eps, 0.2, &grid_copy)?
                    .u,
            )
        };
        let phi = TestFunction::Gaussian {
            amp: 1.0,
            center: 1.2,
            width: 0.4,
        };
        let rep = weak_limit_test(
            &provider,
            &rec,
            &phi,
            &[0.1, 0.05, 0.025, 0.0125],
            WeakLimitMode::Normalized,
        )
        .unwrap();
        let slope = rep.slope.expect("nonzero statistic");
        assert!(
            (0.7..=1.3).contains(&slope),
            "log-log slope {slope}, entries {:?}",
            rep.entries.iter().map(|e| e.value).collect::<Vec<_>>()
        );
    }

    #[test]
    fn slope_fit_recovers_linear_decay() {
        let pts: Vec<(f64, f64)> = [0.1f64, 0.05, 0.025]
            .iter()
            .map(|&e| (e.ln(), (3.0 * e).ln()))
            .collect();
        assert_relative_eq!(fit_slope(&pts).unwrap(), 1.0, epsilon = 1e-12);
    }
}
