//! The acceptance battery: every claim the pipeline makes, exercised at desk
//! scale with pinned tolerances, plus the machine-readable `report.json`.
//!
//! Eleven criteria run from one scenario file:
//!
//!  1. caustic time matches 1/max(−2A S₀'') within 2·dt;
//!  2. sup|e^{Φ/ε}(u_as − u_ref)| decays first-order in ε (ratios in
//!     [0.3, 0.7]) on a shock-free compact;
//!  3. dissipativity inequality holds (≤ 1e−12) for 50 randomized symbols;
//!  4. equal-area and min-branch shock positions agree to 1e−6 and the
//!     finite-differenced shock speed matches Rankine–Hugoniot to 1e−4
//!     (also run on a constant-drift variant so the shock moves);
//!  5. ∫ρ_reg dx + Σe is conserved to relative 1e−4 across shock formation;
//!  6. the Heaviside product identity pairing error fits slope ∈ [0.8, 1.2]
//!     against μ over two decades;
//!  7. the backward Green-saddle round trip recovers the initial datum
//!     first-order in ε;
//!  8. its logarithmic limit reproduces S₀ within C·ε·ln(1/ε);
//!  9. 200 randomized admissible Lemma cases all yield nonsingular ∂x/∂x₀
//!     (constant drift, linear-diagonal drift, and n = 2 included);
//! 10. the normalized weak-limit statistic decays by ≥ 10× over the ε ladder,
//!     is fill-independent at the smallest ε to 3× quadrature tolerance, and
//!     the endpoint-weighted variant decays likewise;
//! 11. direct and heat-kernel oracles agree to 1e−4 (normalized sup) and the
//!     characteristic integrator shows 4th-order convergence (order in
//!     [3.5, 4.5], via the guarded public path — a too-coarse scenario dt
//!     trips the guard and fails this criterion, which is the intended
//!     negative control).

use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::backward::{lemma_check, LemmaPoint};
use crate::density::{assemble_solution, density_field, retained_label_mass};
use crate::error::{Error, Result};
use crate::hamilton::{flow_phase_points, Direction, InitialData};
use crate::hjb::{heaviside_product_check, shock_position_equal_area, value_function};
use crate::linalg::SquareMat;
use crate::manifold::snapshot;
use crate::oracle::{
    direct_solve, green_backward_saddle, heat_kernel_solve, relative_sup_distance, DirectGrid,
    OracleSolution, TestFunction,
};
use crate::pipeline::{run_backward, run_forward, ForwardArtifacts, VERSION_STAMP};
use crate::poly::Poly;
use crate::scenario::Scenario;
use crate::symbol::{check_maslov_inequality, JumpAtom, Symbol};

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub measured: serde_json::Value,
    pub detail: String,
}

impl CriterionResult {
    fn new(id: u32, name: &str, pass: bool, measured: serde_json::Value, detail: String) -> Self {
        CriterionResult {
            id,
            name: name.into(),
            pass,
            measured,
            detail,
        }
    }

    pub fn print_line(&self) {
        println!(
            "criterion {:>2} [{}] {} — {}",
            self.id,
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        );
    }
}

#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub version: String,
    pub scenario_hash: String,
    pub caustic: Option<f64>,
    pub shocks: serde_json::Value,
    pub terra: serde_json::Value,
    pub lemma: serde_json::Value,
    pub theorem1: serde_json::Value,
    pub theorem3: serde_json::Value,
    pub schema_ok: bool,
    pub criteria: Vec<CriterionResult>,
    pub all_pass: bool,
}

/// Reference solution for a scenario symbol: exact heat-kernel convolution
/// when the symbol is pure constant diffusion, otherwise the direct
/// finite-difference solver.
pub fn reference_solution(
    sym: &Symbol,
    init: &InitialData,
    eps: f64,
    t: f64,
    x_grid: &[f64],
) -> Result<OracleSolution> {
    let support = init
        .phi0
        .support()
        .ok_or_else(|| Error::Scenario("initial amplitude has empty support".into()))?;
    let s0 = init.s0.clone();
    let phi0 = init.phi0.clone();
    let u0 = move |y: f64| (-s0.eval(y) / eps).exp() * phi0.eval(y);
    if let Some((a, b)) = heat_drift_coeffs(sym) {
        // u_t = ε a u_xx − b u_x: the kernel is the unit-diffusion one at the
        // rescaled time, translated by the drift
        let shifted: Vec<f64> = x_grid.iter().map(|&x| x - b * t).collect();
        let mut sol = heat_kernel_solve(&u0, support, eps, a * t, &shifted)?;
        sol.x_grid = x_grid.to_vec();
        sol.t = t;
        Ok(sol)
    } else {
        let (lo, hi) = sym.window()[0];
        let nx = 4801;
        let dt = 2e-5_f64.min(0.4 * eps);
        let sol = direct_solve(
            sym,
            &u0,
            eps,
            t,
            DirectGrid {
                x_lo: lo,
                x_hi: hi,
                nx,
                dt,
                richardson_check: false,
            },
        )?;
        // resample onto the requested grid
        let spline = crate::interp::CubicSpline::new(sol.x_grid.clone(), sol.u.clone());
        Ok(OracleSolution {
            x_grid: x_grid.to_vec(),
            t,
            eps,
            u: x_grid.iter().map(|&x| spline.eval(x).max(0.0)).collect(),
            method: sol.method,
            meta: sol.meta,
        })
    }
}

fn is_pure_heat(sym: &Symbol) -> bool {
    matches!(heat_drift_coeffs(sym), Some((_, b)) if b == 0.0)
}

/// (a, b) for constant-coefficient diffusion+drift symbols H = a p² + b p,
/// whose flow is the exactly translated heat kernel; None otherwise.
fn heat_drift_coeffs(sym: &Symbol) -> Option<(f64, f64)> {
    let f = sym.flags();
    if sym.dim() != 1 || !f.zero_v || !sym.jumps().is_empty() || !f.x_independent_b {
        return None;
    }
    let w = sym.window()[0];
    let a0 = sym.a_eval(&[w.0]).get(0, 0);
    let a1 = sym.a_eval(&[0.5 * (w.0 + w.1)]).get(0, 0);
    if (a0 - a1).abs() > 1e-15 {
        return None;
    }
    Some((a0, sym.b_eval(&[0.0])[0]))
}

/// Runs the whole battery; writes artifacts and `report.json` when an output
/// directory is given.
pub fn run_verify(scenario: &Scenario, out: Option<&Path>) -> Result<VerifyReport> {
    let fwd = run_forward(scenario)?;
    let bwd = run_backward(scenario, &fwd)?;

    // an empty ladder drops the ε-dependent criteria (2, 7, 8, 10)
    let with_eps = !scenario.run.eps.is_empty();
    let mut criteria = Vec::new();
    let mut theorem1 = serde_json::Value::Null;
    let mut theorem3 = serde_json::Value::Null;
    criteria.push(criterion_1_caustic(scenario, &fwd));
    if with_eps {
        let (c2, th1) = criterion_2_estimate(scenario, &fwd)?;
        criteria.push(c2);
        theorem1 = th1;
    }
    criteria.push(criterion_3_maslov());
    criteria.push(criterion_4_shock_consistency(scenario, &fwd)?);
    criteria.push(criterion_5_mass(scenario, &fwd));
    criteria.push(criterion_6_heaviside());
    if with_eps {
        let (c7, c8) = criterion_7_8_roundtrip(scenario, &fwd)?;
        criteria.push(c7);
        criteria.push(c8);
    }
    criteria.push(criterion_9_lemma_suite());
    if with_eps {
        let (c10, th3) = criterion_10_weak_limit(&bwd);
        criteria.push(c10);
        theorem3 = th3;
    }
    criteria.push(criterion_11_oracles(scenario, &fwd)?);

    let mut schema_ok = true;
    if let Some(dir) = out {
        let mut files = crate::pipeline::write_forward_artifacts(&fwd, dir)?;
        files.extend(crate::pipeline::write_backward_artifacts(&bwd, scenario, dir)?);
        files.extend(crate::pipeline::write_oracle_sweep(scenario, &fwd, dir)?);
        schema_ok = validate_schemas(&files)?;
    }

    let last_snap = fwd.snapshots.last();
    let shocks = serde_json::json!({
        "records": fwd.shock_records.len(),
        "final": last_snap.map(|s| s.value.shocks.iter().map(|sp| serde_json::json!({
            "x": sp.x, "p_left": sp.p_left, "p_right": sp.p_right, "speed": sp.speed,
        })).collect::<Vec<_>>()),
    });
    let terra = serde_json::json!({
        "fans": bwd.terra.anchors.len(),
        "final_widths": bwd.terra.intervals.last().map(|v| v.iter().map(|iv| iv.width()).collect::<Vec<_>>()),
    });
    let lemma = serde_json::json!({
        "scenario_point": match &bwd.lemma {
            Ok(rep) => serde_json::json!({"status": "checked", "nonsingular": rep.nonsingular}),
            Err(msg) => serde_json::json!({"status": "hypotheses not met", "detail": msg}),
        },
    });

    let all_pass = criteria.iter().all(|c| c.pass) && schema_ok;
    let report = VerifyReport {
        version: VERSION_STAMP.into(),
        scenario_hash: fwd.scenario_hash.clone(),
        caustic: fwd.caustic,
        shocks,
        terra,
        lemma,
        theorem1,
        theorem3,
        schema_ok,
        criteria,
        all_pass,
    };
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(
            dir.join("report.json"),
            serde_json::to_string_pretty(&report)?,
        )?;
    }
    Ok(report)
}

fn criterion_1_caustic(scenario: &Scenario, fwd: &ForwardArtifacts) -> CriterionResult {
    let a0 = fwd.sym.a_eval(&[0.0]).get(0, 0);
    let alphas = &fwd.bundle.alphas;
    let worst = alphas
        .iter()
        .map(|&a| -2.0 * a0 * fwd.init.s0.d2(a))
        .fold(f64::NEG_INFINITY, f64::max);
    let predicted = if worst > 0.0 { Some(1.0 / worst) } else { None };
    let tol = 2.0 * scenario.run.dt;
    let (pass, detail) = match (predicted, fwd.caustic) {
        (Some(p), Some(d)) if p <= scenario.run.t_final => (
            (p - d).abs() <= tol,
            format!("t* detected {d:.6} vs formula {p:.6} (tol {tol:.1e})"),
        ),
        (Some(p), None) if p > scenario.run.t_final => {
            (true, format!("formula t* {p:.4} beyond horizon; none detected"))
        }
        (None, None) => (true, "convex action: no caustic predicted or detected".into()),
        (p, d) => (false, format!("mismatch: formula {p:?}, detected {d:?}")),
    };
    CriterionResult::new(
        1,
        "caustic-time formula",
        pass,
        serde_json::json!({"predicted": predicted, "detected": fwd.caustic}),
        detail,
    )
}

fn criterion_2_estimate(
    scenario: &Scenario,
    fwd: &ForwardArtifacts,
) -> Result<(CriterionResult, serde_json::Value)> {
    let t = scenario.verify.pre_caustic_time.min(scenario.run.t_final);
    let [clo, chi] = scenario.verify.compact_window;
    let compact: Vec<f64> = (0..301)
        .map(|i| clo + (chi - clo) * i as f64 / 300.0)
        .collect();
    let curve = snapshot(&fwd.bundle, t)?;
    let value = value_function(&curve, &compact, &fwd.sym)?;
    let dens = density_field(&value, vec![])?;
    let mut eps_list: Vec<f64> = scenario.run.eps.clone();
    eps_list.sort_by(|a, b| b.partial_cmp(a).expect("finite eps"));
    eps_list.truncate(3);
    let mut table = Vec::new();
    for &eps in &eps_list {
        let u_as = assemble_solution(&value, &dens, eps)?;
        let reference = reference_solution(&fwd.sym, &fwd.init, eps, t, &compact)?;
        let mut sup = 0.0f64;
        for (i, cell) in value.cells.iter().enumerate() {
            if let Some(c) = cell {
                sup = sup.max(((u_as.u[i] - reference.u[i]) * (c.phi / eps).exp()).abs());
            }
        }
        table.push((eps, sup));
    }
    let ratios: Vec<f64> = table.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let pass = ratios.iter().all(|r| (0.3..=0.7).contains(r));
    let measured = serde_json::json!({
        "t": t,
        "errors": table.iter().map(|(e, v)| serde_json::json!({"eps": e, "sup": v})).collect::<Vec<_>>(),
        "ratios": ratios,
    });
    let detail = format!(
        "E(eps) = {:?}, halving ratios {:?} (need [0.3, 0.7])",
        table.iter().map(|t| t.1).collect::<Vec<_>>(),
        ratios
    );
    Ok((
        CriterionResult::new(2, "tunnel estimate first-order decay", pass, measured.clone(), detail),
        measured,
    ))
}

fn criterion_3_maslov() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0xA51);
    let mut worst = f64::NEG_INFINITY;
    let mut count = 0;
    for _ in 0..50 {
        let a0 = rng.random_range(0.3..2.0);
        let b0 = rng.random_range(-1.0..1.0);
        let n_atoms = rng.random_range(0..=3);
        let jumps: Vec<(f64, Vec<f64>)> = (0..n_atoms)
            .map(|_| {
                let nu = rng.random_range(0.3..2.0) * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                if rng.random_bool(0.5) {
                    (nu, vec![rng.random_range(0.0..1.5)])
                } else {
                    // x-dependent nonnegative rate c0 + c2 x^2
                    (nu, vec![rng.random_range(0.0..1.0), 0.0, rng.random_range(0.0..0.4)])
                }
            })
            .collect();
        let sym = Symbol::new_1d(&[a0], &[], &[b0], jumps, (-2.0, 2.0)).expect("valid symbol");
        let xp: Vec<(Vec<f64>, Vec<f64>)> = (-2..=2)
            .flat_map(|i| (-2..=2).map(move |j| (vec![i as f64 * 0.9], vec![j as f64 * 0.5])))
            .collect();
        let eta: Vec<Vec<f64>> = (-3..=3).map(|k| vec![k as f64]).collect();
        let rep = check_maslov_inequality(&sym, &xp, &eta).expect("evaluable");
        worst = worst.max(rep.max_violation);
        count += 1;
    }
    CriterionResult::new(
        3,
        "dissipativity inequality suite",
        worst <= 1e-12,
        serde_json::json!({"symbols": count, "max_violation": worst}),
        format!("max violation {worst:.3e} over {count} random symbols (tol 1e-12)"),
    )
}

fn criterion_4_shock_consistency(
    scenario: &Scenario,
    fwd: &ForwardArtifacts,
) -> Result<CriterionResult> {
    let drift_scenario = scenario.with_added_drift(0.25);
    let drift_fwd = run_forward(&drift_scenario)?;
    let mut details = Vec::new();
    let mut measured = Vec::new();
    let mut pass = true;
    for (name, sc, art) in [
        ("base", scenario, fwd),
        ("drift", &drift_scenario, &drift_fwd),
    ] {
        let Some(t_star) = art.caustic else {
            pass = false;
            details.push(format!("{name}: no caustic"));
            continue;
        };
        let t_end = sc.run.t_final;
        let x_grid = sc.x_grid();
        let mut max_gap = 0.0f64;
        let mut max_speed_err = 0.0f64;
        let mut t = t_star + 0.05;
        while t <= t_end + 1e-9 {
            let curve = snapshot(&art.bundle, t)?;
            if curve.folds.len() >= 2 {
                let x_ea = shock_position_equal_area(&curve)?;
                let vf = value_function(&curve, &x_grid, &art.sym)?;
                if let Some(sp) = vf
                    .shocks
                    .iter()
                    .min_by(|a, b| {
                        (a.x - x_ea)
                            .abs()
                            .partial_cmp(&(b.x - x_ea).abs())
                            .expect("finite")
                    })
                {
                    max_gap = max_gap.max((x_ea - sp.x).abs());
                }
            }
            t += 0.05;
        }
        // finite-difference speed from the dense track vs Rankine–Hugoniot
        let k = (0.01 / art.bundle.dt()).round().max(1.0) as usize;
        let recs = &art.shock_records;
        for i in k..recs.len().saturating_sub(k) {
            if recs[i].t < t_star + 0.05 {
                continue;
            }
            let fd = (recs[i + k].shock.x - recs[i - k].shock.x) / (recs[i + k].t - recs[i - k].t);
            max_speed_err = max_speed_err.max((fd - recs[i].shock.speed).abs());
        }
        let ok = max_gap <= 1e-6 && max_speed_err <= 1e-4;
        pass &= ok;
        details.push(format!(
            "{name}: |x_ea − x_min| ≤ {max_gap:.2e} (tol 1e-6), |dx_s/dt − RH| ≤ {max_speed_err:.2e} (tol 1e-4)"
        ));
        measured.push(serde_json::json!({
            "variant": name, "position_gap": max_gap, "speed_gap": max_speed_err,
        }));
    }
    Ok(CriterionResult::new(
        4,
        "equal-area vs min-branch vs Rankine-Hugoniot",
        pass,
        serde_json::Value::Array(measured),
        details.join("; "),
    ))
}

fn criterion_5_mass(scenario: &Scenario, fwd: &ForwardArtifacts) -> CriterionResult {
    let m0 = fwd.initial_mass;
    let mut worst = 0.0f64;
    // pre-caustic sanity point
    let it_pre = fwd
        .bundle
        .nearest_time_index(0.5 * fwd.caustic.unwrap_or(scenario.run.t_final));
    let m_pre = retained_label_mass(&fwd.bundle, it_pre, None);
    worst = worst.max((m_pre - m0).abs() / m0);
    for (i, rec) in fwd.shock_records.iter().enumerate().step_by(5) {
        let it = fwd.bundle.nearest_time_index(rec.t);
        let regular = retained_label_mass(
            &fwd.bundle,
            it,
            Some((rec.shock.alpha_left, rec.shock.alpha_right)),
        );
        let m = regular + fwd.delta_masses[i];
        worst = worst.max((m - m0).abs() / m0);
    }
    CriterionResult::new(
        5,
        "mass conservation with delta transfer",
        worst <= 1e-4,
        serde_json::json!({"initial_mass": m0, "max_relative_drift": worst}),
        format!("max relative mass drift {worst:.3e} (tol 1e-4)"),
    )
}

fn criterion_6_heaviside() -> CriterionResult {
    let test_fns = [
        TestFunction::Gaussian {
            amp: 1.0,
            center: 0.0,
            width: 0.8,
        },
        TestFunction::Gaussian {
            amp: 0.7,
            center: -0.5,
            width: 1.2,
        },
        TestFunction::Gaussian {
            amp: 1.3,
            center: 0.6,
            width: 1.5,
        },
        TestFunction::Bump {
            amp: 1.0,
            center: 0.0,
            width: 2.0,
        },
        TestFunction::Bump {
            amp: 0.8,
            center: 0.4,
            width: 1.5,
        },
    ];
    let mus: Vec<f64> = (0..=4).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect();
    let z_grid = [0.25, 0.5, 1.0, 2.0, 4.0];
    let fronts = [-0.3, 0.0, 0.4];
    let mut pts = Vec::new();
    let mut table = Vec::new();
    for &mu in &mus {
        let mut worst = 0.0f64;
        for &z in &z_grid {
            for &f1 in &fronts {
                let err = heaviside_product_check(f1, f1 + z * mu, mu, &test_fns)
                    .expect("pairing evaluable");
                worst = worst.max(err);
            }
        }
        pts.push((mu.ln(), worst.ln()));
        table.push((mu, worst));
    }
    let slope = crate::backward::fit_slope(&pts).unwrap_or(f64::NAN);
    let pass = (0.8..=1.2).contains(&slope);
    CriterionResult::new(
        6,
        "Heaviside product identity O(mu)",
        pass,
        serde_json::json!({
            "table": table.iter().map(|(m, e)| serde_json::json!({"mu": m, "error": e})).collect::<Vec<_>>(),
            "slope": slope,
        }),
        format!("fitted exponent {slope:.3} over mu in [1e-3, 1e-1] (need [0.8, 1.2])"),
    )
}

fn criterion_7_8_roundtrip(
    scenario: &Scenario,
    fwd: &ForwardArtifacts,
) -> Result<(CriterionResult, CriterionResult)> {
    let t = scenario.verify.pre_caustic_time.min(scenario.run.t_final);
    let [clo, chi] = scenario.verify.compact_window;
    let compact: Vec<f64> = (0..241)
        .map(|i| clo + (chi - clo) * i as f64 / 240.0)
        .collect();
    let [wlo, whi] = scenario.run.x_window;
    let wide: Vec<f64> = (0..4001)
        .map(|i| wlo + (whi - wlo) * i as f64 / 4000.0)
        .collect();
    let mut eps_list = scenario.run.eps.clone();
    eps_list.sort_by(|a, b| b.partial_cmp(a).expect("finite"));

    let Some((a0, b0)) = heat_drift_coeffs(&fwd.sym) else {
        let detail =
            "not applicable: the Green-saddle round trip is defined for constant-coefficient              diffusion+drift symbols; run on the heat benchmark"
                .to_string();
        let measured = serde_json::json!({"applicable": false});
        return Ok((
            CriterionResult::new(7, "backward round trip first-order in eps", false, measured.clone(), detail.clone()),
            CriterionResult::new(8, "Green-saddle log-limit recovers S0", false, measured, detail),
        ));
    };
    let mut e7 = Vec::new();
    let mut e8 = Vec::new();
    for &eps in &eps_list {
        let u_t = reference_solution(&fwd.sym, &fwd.init, eps, t, &wide)?;
        // saddle in the co-moving frame: constant drift translates the kernel
        let eval_pts: Vec<f64> = compact.iter().map(|&x| x + b0 * t).collect();
        let v = green_backward_saddle(&u_t, a0 * t, &eval_pts)?;
        let mut sup_u = 0.0f64;
        let mut sup_s = 0.0f64;
        for (i, &x) in compact.iter().enumerate() {
            let s0 = fwd.init.s0.eval(x);
            let phi0 = fwd.init.phi0.eval(x);
            sup_u = sup_u.max(((s0 / eps).exp() * v[i] - phi0).abs());
            sup_s = sup_s.max((-eps * v[i].ln() - s0).abs());
        }
        e7.push((eps, sup_u));
        e8.push((eps, sup_s));
    }
    let ratios7: Vec<f64> = e7.windows(2).map(|w| w[1].1 / w[0].1).collect();
    let pass7 = ratios7.iter().all(|r| (0.3..=0.7).contains(r));
    let c7 = CriterionResult::new(
        7,
        "backward round trip first-order in eps",
        pass7,
        serde_json::json!({
            "errors": e7.iter().map(|(e, v)| serde_json::json!({"eps": e, "sup": v})).collect::<Vec<_>>(),
            "ratios": ratios7,
        }),
        format!(
            "sup|e^{{S0/eps}} v − phi0| = {:?}, ratios {:?} (need [0.3, 0.7])",
            e7.iter().map(|t| t.1).collect::<Vec<_>>(),
            ratios7
        ),
    );

    // C*eps*ln(1/eps) bound pinned from the largest eps
    let (e0, s0_err) = e8[0];
    let c_bound = 2.0 * s0_err / (e0 * (1.0 / e0).ln());
    let mut pass8 = true;
    for &(eps, err) in &e8 {
        if err > c_bound * eps * (1.0 / eps).ln() {
            pass8 = false;
        }
    }
    let definite_decay = e8.last().unwrap().1 <= 0.8 * e8[0].1;
    pass8 &= definite_decay;
    let c8 = CriterionResult::new(
        8,
        "Green-saddle log-limit recovers S0",
        pass8,
        serde_json::json!({
            "errors": e8.iter().map(|(e, v)| serde_json::json!({"eps": e, "sup": v})).collect::<Vec<_>>(),
            "c_bound": c_bound,
        }),
        format!(
            "sup|log-limit − S0| = {:?}, bound C·eps·ln(1/eps) with C = {c_bound:.3}",
            e8.iter().map(|t| t.1).collect::<Vec<_>>()
        ),
    );
    Ok((c7, c8))
}

fn criterion_9_lemma_suite() -> CriterionResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1E44A);
    let mut failures = 0usize;
    let mut runs = 0usize;
    let mut refused = 0usize;
    for case in 0..200 {
        let dim = if case % 5 < 3 { 1 } else { 2 };
        let linear_drift = case % 2 == 1;
        let t_final = rng.random_range(0.5..2.0);
        let report = if dim == 1 {
            let a = vec![rng.random_range(0.3..1.5), 0.0, rng.random_range(0.0..0.3)];
            let b = if linear_drift {
                vec![rng.random_range(-0.6..0.6), rng.random_range(-0.8..0.8)]
            } else {
                vec![rng.random_range(-1.0..1.0)]
            };
            let jumps: Vec<(f64, Vec<f64>)> = (0..rng.random_range(0..=2))
                .map(|_| {
                    (
                        rng.random_range(-1.5..1.5),
                        vec![rng.random_range(0.0..1.0)],
                    )
                })
                .collect();
            let sym = Symbol::new_1d(&a, &[], &b, jumps, (-40.0, 40.0)).expect("valid");
            let point = LemmaPoint {
                x0: vec![rng.random_range(-0.5..0.5)],
                grad_s0: vec![0.0],
                hess_s0: SquareMat::from_rows(1, &[rng.random_range(0.0..3.0)]),
            };
            lemma_check(&sym, &point, t_final, 32)
        } else {
            // constant SPD diffusion, drift constant or linear-diagonal
            let l11: f64 = rng.random_range(0.4..1.2);
            let l21: f64 = rng.random_range(-0.5..0.5);
            let l22: f64 = rng.random_range(0.4..1.2);
            let a = vec![
                Poly::constant(2, l11 * l11 + 0.1),
                Poly::constant(2, l11 * l21),
                Poly::constant(2, l11 * l21),
                Poly::constant(2, l21 * l21 + l22 * l22 + 0.1),
            ];
            let b = if linear_drift {
                // B_k = c_k + b_k x_k
                let mk = |c: f64, slope: f64, var: usize| {
                    let mut coeffs = vec![0.0; 3];
                    coeffs[0] = c;
                    coeffs[1 + var] = slope;
                    Poly::from_coeffs_2d(&coeffs).expect("valid poly")
                };
                vec![
                    mk(rng.random_range(-0.5..0.5), rng.random_range(-0.7..0.7), 0),
                    mk(rng.random_range(-0.5..0.5), rng.random_range(-0.7..0.7), 1),
                ]
            } else {
                vec![
                    Poly::constant(2, rng.random_range(-0.8..0.8)),
                    Poly::constant(2, rng.random_range(-0.8..0.8)),
                ]
            };
            let jumps = (0..rng.random_range(0..=2))
                .map(|_| JumpAtom {
                    nu: vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                    lambda: Poly::constant(2, rng.random_range(0.0..0.8)),
                })
                .collect();
            let sym = Symbol::new(
                2,
                a,
                Poly::zero(2),
                b,
                jumps,
                vec![(-40.0, 40.0), (-40.0, 40.0)],
            )
            .expect("valid");
            // random PSD Hessian via M Mᵀ
            let m11: f64 = rng.random_range(-1.2..1.2);
            let m12: f64 = rng.random_range(-1.2..1.2);
            let m21: f64 = rng.random_range(-1.2..1.2);
            let m22: f64 = rng.random_range(-1.2..1.2);
            let hess = SquareMat::from_rows(
                2,
                &[
                    m11 * m11 + m12 * m12,
                    m11 * m21 + m12 * m22,
                    m11 * m21 + m12 * m22,
                    m21 * m21 + m22 * m22,
                ],
            );
            let point = LemmaPoint {
                x0: vec![rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)],
                grad_s0: vec![0.0, 0.0],
                hess_s0: hess,
            };
            lemma_check(&sym, &point, t_final, 32)
        };
        runs += 1;
        match report {
            Ok(rep) => {
                if !rep.nonsingular {
                    failures += 1;
                }
            }
            Err(Error::LemmaHypotheses(_)) => refused += 1,
            Err(_) => failures += 1,
        }
    }
    let pass = failures == 0 && refused == 0 && runs == 200;
    CriterionResult::new(
        9,
        "lemma nonsingularity suite",
        pass,
        serde_json::json!({"cases": runs, "singular": failures, "refused": refused}),
        format!("{runs} randomized admissible cases, {failures} singular, {refused} refused"),
    )
}

fn criterion_10_weak_limit(
    bwd: &crate::pipeline::BackwardArtifacts,
) -> (CriterionResult, serde_json::Value) {
    let find = |name: &str| bwd.weak_limits.iter().find(|(n, _)| n == name);
    let (Some((_, hermite)), Some((_, bump))) = (find("mode-i-hermite"), find("mode-i-bump"))
    else {
        let measured = serde_json::json!({"error": "no weak-limit reports"});
        return (
            CriterionResult::new(
                10,
                "weak-limit statistic",
                false,
                measured.clone(),
                "no post-shock weak-limit data".into(),
            ),
            measured,
        );
    };
    let first = &hermite.entries[0];
    let last = hermite.entries.last().unwrap();
    let decay_ok = last.value.abs() <= 0.1 * first.value.abs();
    let bump_last = bump.entries.last().unwrap();
    let tol = 3.0 * last.quad_tol.max(bump_last.quad_tol);
    let fill_gap = (last.value - bump_last.value).abs();
    let fill_ok = fill_gap <= tol;
    let mode_ii_ok = match find("mode-ii-hermite") {
        Some((_, rep)) => {
            let f = &rep.entries[0];
            let l = rep.entries.last().unwrap();
            l.value.abs() <= 0.1 * f.value.abs()
        }
        None => false,
    };
    let pass = decay_ok && fill_ok && mode_ii_ok;
    let measured = serde_json::json!({
        "mode_i": hermite.entries.iter().map(|e| serde_json::json!({
            "eps": e.eps, "value": e.value, "quad_tol": e.quad_tol
        })).collect::<Vec<_>>(),
        "fill_gap": fill_gap,
        "fill_tol": tol,
        "mode_ii": find("mode-ii-hermite").map(|(_, rep)| rep.entries.iter().map(|e| serde_json::json!({
            "eps": e.eps, "value": e.value
        })).collect::<Vec<_>>()),
        "psi": find("mode-ii-hermite").and_then(|(_, rep)| rep.psi),
    });
    let detail = format!(
        "|I({:.4})| = {:.3e} vs 0.1·|I({:.4})| = {:.3e}; fill gap {fill_gap:.3e} (tol {tol:.3e}); mode(ii) decay {}",
        last.eps,
        last.value.abs(),
        first.eps,
        0.1 * first.value.abs(),
        if mode_ii_ok { "ok" } else { "FAILED" }
    );
    (
        CriterionResult::new(10, "weak-limit statistic", pass, measured.clone(), detail),
        measured,
    )
}

fn criterion_11_oracles(scenario: &Scenario, fwd: &ForwardArtifacts) -> Result<CriterionResult> {
    // cross-oracle agreement at the probe time, largest eps
    let t = scenario.verify.pre_caustic_time.min(scenario.run.t_final);
    let eps = scenario
        .run
        .eps
        .iter()
        .cloned()
        .fold(f64::NEG_INFINITY, f64::max)
        .max(0.1);
    let init = &fwd.init;
    let s0 = init.s0.clone();
    let phi0 = init.phi0.clone();
    let u0 = move |y: f64| (-s0.eval(y) / eps).exp() * phi0.eval(y);
    let support = init.phi0.support().expect("nonempty amplitude");
    let (wlo, whi) = fwd.sym.window()[0];
    // the upwind drift term is first order in dx; refine when drift is on
    let has_drift = fwd.sym.b_eval(&[0.0])[0] != 0.0 || !fwd.sym.flags().x_independent_b;
    let gridc = DirectGrid {
        x_lo: wlo,
        x_hi: whi,
        nx: if has_drift { 19201 } else { 4801 },
        dt: 2e-5,
        richardson_check: false,
    };
    let cross = if is_pure_heat(&fwd.sym) {
        let d = direct_solve(&fwd.sym, &u0, eps, t, gridc)?;
        let a0 = fwd.sym.a_eval(&[0.0]).get(0, 0);
        let hk = heat_kernel_solve(&u0, support, eps, a0 * t, &d.x_grid)?;
        relative_sup_distance(&d.u, &hk.u)
    } else {
        let d = direct_solve(&fwd.sym, &u0, eps, t, gridc)?;
        let fine = direct_solve(
            &fwd.sym,
            &u0,
            eps,
            t,
            DirectGrid {
                nx: gridc.nx * 2 - 1,
                dt: gridc.dt / 2.0,
                ..gridc
            },
        )?;
        let coarse_on_fine: Vec<f64> = d.u.iter().copied().collect();
        let fine_sub: Vec<f64> = fine.u.iter().step_by(2).copied().collect();
        relative_sup_distance(&coarse_on_fine, &fine_sub)
    };

    // integrator convergence order through the guarded public path
    let order_sym = Symbol::new_1d(&[1.0], &[0.0, 0.0, 1.0], &[], vec![], (-24.0, 24.0))?;
    let dt0 = scenario.run.dt.max(0.01);
    let t_ord = 0.3;
    let run_at = |dt: f64| -> Result<(f64, f64, f64)> {
        let paths = flow_phase_points(&order_sym, &[(0.8, 0.6, 0.0)], t_ord, dt, Direction::Forward)?;
        Ok(*paths[0].last().unwrap())
    };
    let reference = run_at(dt0 / 8.0)?;
    let err_at = |dt: f64| -> Result<f64> {
        let v = run_at(dt)?;
        Ok((v.0 - reference.0)
            .abs()
            .max((v.1 - reference.1).abs())
            .max((v.2 - reference.2).abs()))
    };
    let e1 = err_at(dt0)?;
    let e2 = err_at(dt0 / 2.0)?;
    let order = (e1 / e2).log2();
    let pass = cross <= 1e-4 && (3.5..=4.5).contains(&order);
    Ok(CriterionResult::new(
        11,
        "cross-oracle agreement and integrator order",
        pass,
        serde_json::json!({"cross_oracle": cross, "order": order, "dt0": dt0}),
        format!(
            "normalized sup distance {cross:.3e} (tol 1e-4); measured order {order:.2} at dt0 = {dt0} (need [3.5, 4.5])"
        ),
    ))
}

/// Re-reads emitted artifacts and checks headers, column counts, and JSON
/// parses; all formats are pinned by the writers.
pub fn validate_schemas(files: &[std::path::PathBuf]) -> Result<bool> {
    let headers = [
        ("trajectories.csv", "alpha,t,x,p,det_Jx,S,rho"),
        ("manifold_", "alpha,x,p,S,rho,det_Jx,branch_id"),
        ("value_", "x,phi,p_left,p_right,branch_id"),
        ("density_", "x,rho_reg,branch_id"),
        ("solution_", "x,u_as,phi_value"),
        ("oracle_", "x,u,log_limit"),
    ];
    for path in files {
        let name = path
            .file_name()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let text = std::fs::read_to_string(path)?;
        if name.ends_with(".json") {
            let _: serde_json::Value = serde_json::from_str(&text)?;
            continue;
        }
        let Some((_, header)) = headers
            .iter()
            .find(|(prefix, _)| name.starts_with(prefix))
        else {
            return Ok(false);
        };
        let mut lines = text.lines();
        if lines.next() != Some(*header) {
            return Ok(false);
        }
        let cols = header.split(',').count();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != cols {
                return Ok(false);
            }
            for f in fields {
                if f.parse::<f64>().is_err() && f != "nan" {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_heat_detection() {
        assert!(is_pure_heat(&Symbol::heat_1d(1.0, (-2.0, 2.0))));
        let drift = Symbol::new_1d(&[1.0], &[], &[0.5], vec![], (-2.0, 2.0)).unwrap();
        assert!(!is_pure_heat(&drift));
    }

    #[test]
    fn maslov_and_heaviside_criteria_pass() {
        assert!(criterion_3_maslov().pass);
        let c6 = criterion_6_heaviside();
        assert!(c6.pass, "{}", c6.detail);
    }

    #[test]
    fn lemma_suite_criterion_passes() {
        let c9 = criterion_9_lemma_suite();
        assert!(c9.pass, "{}", c9.detail);
    }

    #[test]
    fn empty_eps_ladder_keeps_only_eps_independent_criteria() {
        let sc = Scenario::from_json(
            r#"{
            "name": "no-eps",
            "symbol": {"dim": 1, "a": [1.0], "window": [-12.0, 12.0]},
            "initial": {
                "s0": {"gaussians": [{"amp": 0.5, "center": 0.0, "width": 1.0}]},
                "phi0": {"bumps": [{"amp": 1.0, "center": 0.0, "width": 3.0}]},
                "alpha": {"min": -4.0, "max": 4.0, "count": 201}
            },
            "run": {
                "t_final": 0.8, "dt": 0.002, "x_window": [-4.0, 4.0],
                "x_points": 256, "snapshot_times": [0.0, 0.8], "eps": []
            }
        }"#,
        )
        .unwrap();
        let report = run_verify(&sc, None).unwrap();
        let ids: Vec<u32> = report.criteria.iter().map(|c| c.id).collect();
        assert_eq!(ids, vec![1, 3, 4, 5, 6, 9, 11]);
    }
}
