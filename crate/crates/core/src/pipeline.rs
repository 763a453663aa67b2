//! Scenario-driven orchestration of the forward and backward pipelines and
//! their CSV/JSON artifacts.
//!
//! File layout per run (all under the chosen output directory):
//!
//! * `trajectories.csv` — `alpha,t,x,p,det_Jx,S,rho` at the snapshot times;
//! * `manifold_<t>.csv` — `alpha,x,p,S,rho,det_Jx,branch_id` per snapshot;
//! * `value_<t>.csv` — `x,phi,p_left,p_right,branch_id` per snapshot;
//! * `density_<t>.csv` — `x,rho_reg,branch_id` per snapshot;
//! * `solution_<t>_<eps>.csv` — `x,u_as,phi_value`;
//! * `oracle_<t>_<eps>.csv` — `x,u,log_limit` (verification runs);
//! * `shocks.json` — the dense-in-time shock trajectory with delta masses;
//! * `forward_summary.json`, `backward_report.json`, `report.json`.
//!
//! Times and ε values in file names are printed with four decimals.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::backward::{
    detect_terra_incognita, reconstruct, weak_limit_test, FillStrategy, ReconstructedField,
    TerraHistory, WeakLimitMode, WeakLimitReport,
};
use crate::density::{
    assemble_solution, delta_mass_evolution, density_field, initial_mass, AsymptoticSolution,
    DeltaMass, DensityField,
};
use crate::error::{Error, Result};
use crate::hamilton::{
    caustic_time, integrate_bundle, time_reverse, InitialData, TrajectoryBundle,
};
use crate::hjb::{track_shock, value_function, ShockRecord, ValueField};
use crate::manifold::{curve_self_intersects, snapshot, LagrangianCurve};
use crate::oracle::TestFunction;
use crate::scenario::Scenario;
use crate::symbol::Symbol;

pub const VERSION_STAMP: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub struct SnapshotArtifacts {
    pub t: f64,
    pub curve: LagrangianCurve,
    pub value: ValueField,
    pub density: DensityField,
    pub solutions: Vec<AsymptoticSolution>,
    pub equal_area: Option<f64>,
    pub self_intersects: bool,
}

#[derive(Debug)]
pub struct ForwardArtifacts {
    pub scenario_hash: String,
    pub sym: Symbol,
    pub init: InitialData,
    pub bundle: TrajectoryBundle,
    pub caustic: Option<f64>,
    pub snapshots: Vec<SnapshotArtifacts>,
    /// Dense shock trajectory on the bundle's time grid (empty pre-caustic).
    pub shock_records: Vec<ShockRecord>,
    /// Delta masses aligned with `shock_records`.
    pub delta_masses: Vec<f64>,
    pub initial_mass: f64,
}

impl ForwardArtifacts {
    /// Delta mass at an arbitrary time by linear interpolation of the dense
    /// record series (0 before shock birth).
    pub fn delta_mass_at(&self, t: f64) -> f64 {
        if self.shock_records.is_empty() {
            return 0.0;
        }
        let t0 = self.shock_records[0].t;
        if t <= t0 {
            return 0.0;
        }
        let last = self.shock_records.len() - 1;
        if t >= self.shock_records[last].t {
            return self.delta_masses[last];
        }
        let i = self
            .shock_records
            .partition_point(|r| r.t <= t)
            .saturating_sub(1);
        let (ta, tb) = (self.shock_records[i].t, self.shock_records[i + 1].t);
        let w = (t - ta) / (tb - ta);
        self.delta_masses[i] * (1.0 - w) + self.delta_masses[i + 1] * w
    }

    pub fn shock_at(&self, t: f64) -> Option<&ShockRecord> {
        if self.shock_records.is_empty() {
            return None;
        }
        self.shock_records
            .iter()
            .min_by(|a, b| {
                (a.t - t)
                    .abs()
                    .partial_cmp(&(b.t - t).abs())
                    .expect("finite times")
            })
            .filter(|r| (r.t - t).abs() <= 2.0 * self.bundle.dt())
    }
}

/// Integrates the bundle, tracks the shock densely in time, and extracts all
/// snapshot artifacts.
pub fn run_forward(scenario: &Scenario) -> Result<ForwardArtifacts> {
    let sym = scenario.build_symbol()?;
    let init = scenario.build_initial()?;
    let bundle = integrate_bundle(&sym, &init, scenario.run.t_final, scenario.run.dt)?;
    let caustic = caustic_time(&bundle);
    let x_grid = scenario.x_grid();

    let (shock_records, delta_masses) = match caustic {
        Some(t_star) if t_star < scenario.run.t_final => {
            let records = track_shock(&bundle, t_star, scenario.run.t_final, &sym)?;
            let masses = delta_mass_evolution(&sym, &records, Some(t_star))?;
            (records, masses)
        }
        _ => (vec![], vec![]),
    };

    let mut art = ForwardArtifacts {
        scenario_hash: scenario_hash(scenario)?,
        sym: sym.clone(),
        init: init.clone(),
        bundle,
        caustic,
        snapshots: vec![],
        shock_records,
        delta_masses,
        initial_mass: initial_mass(&init)?,
    };

    for &t in &scenario.run.snapshot_times {
        if t > scenario.run.t_final + 1e-12 {
            return Err(Error::Scenario(format!(
                "snapshot time {t} beyond t_final {}",
                scenario.run.t_final
            )));
        }
        let curve = snapshot(&art.bundle, t)?;
        let value = value_function(&curve, &x_grid, &sym)?;
        let deltas: Vec<DeltaMass> = art
            .shock_at(curve.t)
            .map(|r| {
                vec![DeltaMass {
                    x: r.shock.x,
                    mass: art.delta_mass_at(curve.t),
                }]
            })
            .unwrap_or_default();
        let density = density_field(&value, deltas)?;
        let solutions = scenario
            .run
            .eps
            .iter()
            .map(|&eps| assemble_solution(&value, &density, eps))
            .collect::<Result<Vec<_>>>()?;
        let equal_area = if curve.folds.len() >= 2 {
            Some(crate::hjb::shock_position_equal_area(&curve)?)
        } else {
            None
        };
        let self_intersects = curve_self_intersects(&curve);
        art.snapshots.push(SnapshotArtifacts {
            t: curve.t,
            curve,
            value,
            density,
            solutions,
            equal_area,
            self_intersects,
        });
    }
    Ok(art)
}

#[derive(Debug)]
pub struct BackwardArtifacts {
    /// sup |X(α,τ) − x(α,T−τ)| over a sample of labels and times.
    pub reversal_sup_error: f64,
    /// sup |S_rec − S₀| and sup |ρ_rec − ρ₀| at τ = T outside the fans
    /// (restricted to the amplitude support).
    pub recovery_sup_s: f64,
    pub recovery_sup_rho: f64,
    pub terra: TerraHistory,
    pub recon_hermite: ReconstructedField,
    pub recon_bump: ReconstructedField,
    pub recon_linear: ReconstructedField,
    /// Lemma verdict for the scenario's own S₀ (or the hypothesis report).
    pub lemma: std::result::Result<crate::backward::LemmaReport, String>,
    pub weak_limits: Vec<(String, WeakLimitReport)>,
}

/// Runs the backward program: time reversal, fan detection, reconstruction
/// with both fill strategies, the Lemma gate, and the weak-limit tables.
pub fn run_backward(scenario: &Scenario, fwd: &ForwardArtifacts) -> Result<BackwardArtifacts> {
    let t_final = scenario.run.t_final;
    let back = time_reverse(&fwd.bundle, t_final)?;
    let mut reversal_sup_error = 0.0f64;
    let nt = back.n_times();
    for ia in (0..back.n_alphas()).step_by(7) {
        for it in (0..nt).step_by(50) {
            let fwd_it = nt - 1 - it;
            reversal_sup_error = reversal_sup_error
                .max((back.x(it, ia) - fwd.bundle.x(fwd_it, ia)).abs())
                .max((back.p(it, ia) - fwd.bundle.p(fwd_it, ia)).abs());
        }
    }

    let final_value = &fwd
        .snapshots
        .iter()
        .min_by(|a, b| {
            (a.t - t_final)
                .abs()
                .partial_cmp(&(b.t - t_final).abs())
                .expect("finite times")
        })
        .ok_or_else(|| Error::Scenario("no snapshots".into()))?
        .value;
    let terra = detect_terra_incognita(&fwd.sym, &final_value.shocks, t_final, scenario.run.dt)?;

    // reconstruct at τ = T (forward t = 0) on a label-aligned grid
    let x_grid: Vec<f64> = fwd.bundle.alphas.clone();
    let recon_hermite = reconstruct(
        &fwd.bundle,
        final_value,
        t_final,
        &x_grid,
        FillStrategy::HermiteMatched,
    )?;
    let recon_bump = reconstruct(
        &fwd.bundle,
        final_value,
        t_final,
        &x_grid,
        FillStrategy::HermiteBump { amplitude: 0.1 },
    )?;
    let recon_linear = reconstruct(
        &fwd.bundle,
        final_value,
        t_final,
        &x_grid,
        FillStrategy::Linear,
    )?;

    let lemma = lemma_for_scenario(fwd, t_final);

    // recovered initial data vs the truth, outside the fans; evaluated on the
    // label midpoints so the measurement exercises interpolation rather than
    // the node-exact samples
    let midpoints: Vec<f64> = fwd
        .bundle
        .alphas
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .collect();
    let recon_mid = reconstruct(
        &fwd.bundle,
        final_value,
        t_final,
        &midpoints,
        FillStrategy::HermiteMatched,
    )?;
    let (mut recovery_sup_s, mut recovery_sup_rho) = (0.0f64, 0.0f64);
    let support = fwd.init.phi0.support();
    for (i, &x) in recon_mid.x_grid.iter().enumerate() {
        let inside_fan = recon_mid
            .fills
            .iter()
            .any(|f| x > f.interval.lo && x < f.interval.hi);
        let in_support = support.map(|(lo, hi)| x > lo && x < hi).unwrap_or(false);
        if inside_fan || !in_support || !recon_mid.s[i].is_finite() {
            continue;
        }
        recovery_sup_s = recovery_sup_s.max((recon_mid.s[i] - fwd.init.s0.eval(x)).abs());
        recovery_sup_rho =
            recovery_sup_rho.max((recon_mid.rho[i] - fwd.init.phi0.eval(x).powi(2)).abs());
    }

    // weak-limit statistics against the exact initial datum
    let init = fwd.init.clone();
    let grid_for_provider = x_grid.clone();
    let provider = move |eps: f64| -> Result<Vec<f64>> {
        Ok(grid_for_provider
            .iter()
            .map(|&x| (-init.s0.eval(x) / eps).exp() * init.phi0.eval(x))
            .collect())
    };
    let mut weak_limits = Vec::new();
    if let Some(spec) = scenario.verify.test_functions.first() {
        let phi = spec.to_test_function()?;
        let rep = weak_limit_test(
            &provider,
            &recon_hermite,
            &phi,
            &scenario.run.eps,
            WeakLimitMode::Normalized,
        )?;
        weak_limits.push(("mode-i-hermite".into(), rep));
        let rep = weak_limit_test(
            &provider,
            &recon_bump,
            &phi,
            &scenario.run.eps,
            WeakLimitMode::Normalized,
        )?;
        weak_limits.push(("mode-i-bump".into(), rep));
        let rep = weak_limit_test(
            &provider,
            &recon_linear,
            &phi,
            &scenario.run.eps,
            WeakLimitMode::Normalized,
        )?;
        weak_limits.push(("mode-i-linear".into(), rep));
    }
    if let Some(fill) = recon_hermite.fills.first() {
        // mode (ii): a bump hugging the fan's left endpoint, reaching inside
        // but not across
        let iv = fill.interval;
        let phi = TestFunction::Bump {
            amp: 1.0,
            center: iv.lo,
            width: (0.6 * iv.width()).max(1e-3),
        };
        let rep = weak_limit_test(
            &provider,
            &recon_hermite,
            &phi,
            &scenario.run.eps,
            WeakLimitMode::EndpointWeighted,
        )?;
        weak_limits.push(("mode-ii-hermite".into(), rep));
    }

    Ok(BackwardArtifacts {
        reversal_sup_error,
        recovery_sup_s,
        recovery_sup_rho,
        terra,
        recon_hermite,
        recon_bump,
        recon_linear,
        lemma,
        weak_limits,
    })
}

/// Looks for an interior stationary minimizer of the scenario's S₀ and runs
/// the Lemma check there; reports unmet hypotheses instead of failing.
fn lemma_for_scenario(
    fwd: &ForwardArtifacts,
    t_final: f64,
) -> std::result::Result<crate::backward::LemmaReport, String> {
    let s0 = &fwd.init.s0;
    let alphas = &fwd.bundle.alphas;
    let (lo, hi) = (alphas[0], *alphas.last().unwrap());
    let mut best: Option<f64> = None;
    let n = 2001;
    for i in 1..n - 1 {
        let a = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        let b = lo + (hi - lo) * (i + 1) as f64 / (n - 1) as f64;
        if s0.d1(a).signum() != s0.d1(b).signum() && s0.d2(a) >= 0.0 {
            if let Some(x0) = crate::interp::bisect(&|x| s0.d1(x), a, b, 1e-14) {
                best = Some(x0);
                break;
            }
        }
    }
    let Some(x0) = best else {
        return Err("no interior stationary minimizer of S0 on the label window".into());
    };
    let point = crate::backward::LemmaPoint {
        x0: vec![x0],
        grad_s0: vec![0.0],
        hess_s0: crate::linalg::SquareMat::from_rows(1, &[s0.d2(x0)]),
    };
    crate::backward::lemma_check(&fwd.sym, &point, t_final, 64).map_err(|e| e.to_string())
}

fn scenario_hash(scenario: &Scenario) -> Result<String> {
    let canonical = serde_json::to_vec(scenario)?;
    let mut hasher = Sha256::new();
    hasher.update(&canonical);
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn tag(v: f64) -> String {
    format!("{v:.4}")
}

pub fn write_forward_artifacts(art: &ForwardArtifacts, out: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let mut written = Vec::new();

    // trajectories.csv at the snapshot times
    let mut buf = String::from("alpha,t,x,p,det_Jx,S,rho\n");
    for snap in &art.snapshots {
        let it = art.bundle.nearest_time_index(snap.t);
        for ia in 0..art.bundle.n_alphas() {
            let st = art.bundle.state(it, ia);
            buf.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                art.bundle.alphas[ia],
                snap.t,
                st.x,
                st.p,
                st.jx,
                st.s,
                art.bundle.rho(it, ia)
            ));
        }
    }
    written.push(write_file(out, "trajectories.csv", &buf)?);

    for snap in &art.snapshots {
        let mut buf = String::from("alpha,x,p,S,rho,det_Jx,branch_id\n");
        for q in &snap.curve.points {
            let branch = snap
                .curve
                .branches
                .iter()
                .find(|b| q.alpha >= b.alpha_lo - 1e-14 && q.alpha <= b.alpha_hi + 1e-14)
                .map(|b| b.id as i64)
                .unwrap_or(-1);
            buf.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                q.alpha, q.x, q.p, q.s, q.rho, q.det_jx, branch
            ));
        }
        written.push(write_file(out, &format!("manifold_{}.csv", tag(snap.t)), &buf)?);

        let mut buf = String::from("x,phi,p_left,p_right,branch_id\n");
        for (i, cell) in snap.value.cells.iter().enumerate() {
            let x = snap.value.x_grid[i];
            match cell {
                Some(c) => {
                    // one-sided momenta at the cell nearest each shock
                    let (mut pl, mut pr) = (c.p, c.p);
                    for sp in &snap.value.shocks {
                        if (sp.x - x).abs()
                            <= 0.5 * (snap.value.x_grid[1] - snap.value.x_grid[0])
                        {
                            pl = sp.p_left;
                            pr = sp.p_right;
                        }
                    }
                    buf.push_str(&format!("{},{},{},{},{}\n", x, c.phi, pl, pr, c.branch));
                }
                None => buf.push_str(&format!("{x},nan,nan,nan,-1\n")),
            }
        }
        written.push(write_file(out, &format!("value_{}.csv", tag(snap.t)), &buf)?);

        let mut buf = String::from("x,rho_reg,branch_id\n");
        for (i, &rho) in snap.density.rho_reg.iter().enumerate() {
            let branch = snap.density.branch[i].map(|b| b as i64).unwrap_or(-1);
            buf.push_str(&format!(
                "{},{},{}\n",
                snap.density.x_grid[i], rho, branch
            ));
        }
        written.push(write_file(out, &format!("density_{}.csv", tag(snap.t)), &buf)?);

        for sol in &snap.solutions {
            let mut buf = String::from("x,u_as,phi_value\n");
            for (i, &u) in sol.u.iter().enumerate() {
                buf.push_str(&format!("{},{},{}\n", sol.x_grid[i], u, sol.phi[i]));
            }
            written.push(write_file(
                out,
                &format!("solution_{}_{}.csv", tag(snap.t), tag(sol.eps)),
                &buf,
            )?);
        }
    }

    #[derive(Serialize)]
    struct ShockJson {
        t: f64,
        x: f64,
        p_left: f64,
        p_right: f64,
        speed: f64,
        delta_mass: f64,
    }
    let shocks: Vec<ShockJson> = art
        .shock_records
        .iter()
        .zip(&art.delta_masses)
        .map(|(r, &m)| ShockJson {
            t: r.t,
            x: r.shock.x,
            p_left: r.shock.p_left,
            p_right: r.shock.p_right,
            speed: r.shock.speed,
            delta_mass: m,
        })
        .collect();
    written.push(write_file(
        out,
        "shocks.json",
        &serde_json::to_string_pretty(&serde_json::json!({
            "version": VERSION_STAMP,
            "scenario_hash": art.scenario_hash,
            "shocks": shocks,
        }))?,
    )?);

    let summary = serde_json::json!({
        "version": VERSION_STAMP,
        "scenario_hash": art.scenario_hash,
        "caustic": art.caustic,
        "initial_mass": art.initial_mass,
        "n_shock_records": art.shock_records.len(),
        "snapshots": art.snapshots.iter().map(|s| serde_json::json!({
            "t": s.t,
            "folds": s.curve.folds.len(),
            "branches": s.curve.branches.len(),
            "shocks": s.value.shocks.len(),
            "equal_area": s.equal_area,
            "self_intersects": s.self_intersects,
            "total_mass": crate::density::total_mass(&s.density),
        })).collect::<Vec<_>>(),
    });
    written.push(write_file(
        out,
        "forward_summary.json",
        &serde_json::to_string_pretty(&summary)?,
    )?);
    Ok(written)
}

pub fn write_backward_artifacts(
    art: &BackwardArtifacts,
    scenario: &Scenario,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let step = (art.terra.times.len() / 20).max(1);
    let terra: Vec<_> = art
        .terra
        .times
        .iter()
        .enumerate()
        .step_by(step)
        .map(|(i, &tau)| {
            serde_json::json!({
                "tau": tau,
                "intervals": art.terra.intervals[i]
                    .iter()
                    .map(|iv| serde_json::json!([iv.lo, iv.hi]))
                    .collect::<Vec<_>>(),
            })
        })
        .collect();
    let weak: Vec<_> = art
        .weak_limits
        .iter()
        .map(|(name, rep)| {
            serde_json::json!({
                "name": name,
                "psi": rep.psi,
                "slope": rep.slope,
                "entries": rep.entries.iter().map(|e| serde_json::json!({
                    "eps": e.eps, "value": e.value, "quad_tol": e.quad_tol,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    let lemma = match &art.lemma {
        Ok(rep) => serde_json::json!({
            "status": "checked",
            "nonsingular": rep.nonsingular,
            "drift_form": rep.drift_form,
            "det_j_final": rep.det_j.last(),
        }),
        Err(msg) => serde_json::json!({
            "status": "hypotheses not met",
            "detail": msg,
        }),
    };
    let report = serde_json::json!({
        "version": VERSION_STAMP,
        "scenario": scenario.name,
        "reversal_sup_error": art.reversal_sup_error,
        "recovery_sup_error": {
            "s": art.recovery_sup_s,
            "rho": art.recovery_sup_rho,
        },
        "terra": terra,
        "fills": art.recon_hermite.fills.iter().chain(art.recon_bump.fills.iter()).chain(art.recon_linear.fills.iter()).map(|f| serde_json::json!({
            "interval": [f.interval.lo, f.interval.hi],
            "strategy": f.strategy,
            "s_endpoints": [f.s_endpoints.0, f.s_endpoints.1],
        })).collect::<Vec<_>>(),
        "lemma": lemma,
        "weak_limits": weak,
    });
    Ok(vec![write_file(
        out,
        "backward_report.json",
        &serde_json::to_string_pretty(&report)?,
    )?])
}

/// Oracle sweep: reference solutions and their logarithmic limits per ε at
/// the scenario's pre-caustic probe time.
pub fn write_oracle_sweep(
    scenario: &Scenario,
    fwd: &ForwardArtifacts,
    out: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out)?;
    let t = scenario.verify.pre_caustic_time.min(scenario.run.t_final);
    let x_grid = scenario.x_grid();
    let mut written = Vec::new();
    for &eps in &scenario.run.eps {
        let sol = crate::verify::reference_solution(&fwd.sym, &fwd.init, eps, t, &x_grid)?;
        let logs = crate::oracle::log_limit(&sol);
        let mut buf = String::from("x,u,log_limit\n");
        for (i, &u) in sol.u.iter().enumerate() {
            let s = logs
                .as_ref()
                .map(|v| v[i].to_string())
                .unwrap_or_else(|_| "nan".into());
            buf.push_str(&format!("{},{},{}\n", sol.x_grid[i], u, s));
        }
        written.push(write_file(
            out,
            &format!("oracle_{}_{}.csv", tag(t), tag(eps)),
            &buf,
        )?);
    }
    Ok(written)
}

fn write_file(dir: &Path, name: &str, content: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, content)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bump_scenario() -> Scenario {
        Scenario::from_json(
            r#"{
            "name": "pipeline-test",
            "symbol": {"dim": 1, "a": [1.0], "window": [-12.0, 12.0]},
            "initial": {
                "s0": {"gaussians": [{"amp": 0.5, "center": 0.0, "width": 1.0}]},
                "phi0": {"bumps": [{"amp": 1.0, "center": 0.0, "width": 3.0}]},
                "alpha": {"min": -4.0, "max": 4.0, "count": 321}
            },
            "run": {
                "t_final": 1.0, "dt": 0.001, "x_window": [-4.0, 4.0],
                "x_points": 512,
                "snapshot_times": [0.0, 0.3, 1.0], "eps": [0.1, 0.05]
            }
        }"#,
        )
        .unwrap()
    }

    #[test]
    fn forward_pipeline_detects_caustic_and_shock() {
        let sc = bump_scenario();
        let art = run_forward(&sc).unwrap();
        let t_star = art.caustic.expect("caustic expected");
        assert!((t_star - 0.5).abs() <= 2e-3);
        let last = art.snapshots.last().unwrap();
        assert_eq!(last.value.shocks.len(), 1);
        assert!(last.equal_area.is_some());
        assert!(!art.shock_records.is_empty());
        assert!(!last.self_intersects);
        // delta mass grows from zero
        assert!(art.delta_masses.last().unwrap() > &0.0);
        assert_eq!(art.delta_mass_at(0.1), 0.0);
    }

    #[test]
    fn convex_action_reports_no_caustic_and_no_shocks() {
        let sc = Scenario::from_json(
            r#"{
            "name": "convex",
            "symbol": {"dim": 1, "a": [1.0], "window": [-12.0, 12.0]},
            "initial": {
                "s0": {"poly": [0.0, 0.0, 0.5]},
                "phi0": {"bumps": [{"amp": 1.0, "center": 0.0, "width": 2.0}]},
                "alpha": {"min": -3.0, "max": 3.0, "count": 201}
            },
            "run": {
                "t_final": 0.8, "dt": 0.002, "x_window": [-3.0, 3.0],
                "x_points": 256,
                "snapshot_times": [0.8], "eps": [0.1]
            }
        }"#,
        )
        .unwrap();
        let art = run_forward(&sc).unwrap();
        assert!(art.caustic.is_none());
        assert!(art.shock_records.is_empty());
        assert!(art.snapshots[0].value.shocks.is_empty());
        assert!(art.snapshots[0].equal_area.is_none());
    }

    #[test]
    fn artifacts_round_trip_to_disk() {
        let sc = bump_scenario();
        let art = run_forward(&sc).unwrap();
        let dir = std::env::temp_dir().join("kfasym-pipeline-test");
        let _ = fs::remove_dir_all(&dir);
        let files = write_forward_artifacts(&art, &dir).unwrap();
        assert!(files.iter().all(|f| f.exists()));
        // headers are pinned
        let traj = fs::read_to_string(dir.join("trajectories.csv")).unwrap();
        assert!(traj.starts_with("alpha,t,x,p,det_Jx,S,rho\n"));
        let val = fs::read_to_string(dir.join("value_1.0000.csv")).unwrap();
        assert!(val.starts_with("x,phi,p_left,p_right,branch_id\n"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn backward_pipeline_reports_fan_and_weak_limits() {
        let sc = bump_scenario();
        let fwd = run_forward(&sc).unwrap();
        let bwd = run_backward(&sc, &fwd).unwrap();
        assert!(bwd.reversal_sup_error <= 1e-6);
        assert!(bwd.recovery_sup_s <= 1e-5, "S recovery {}", bwd.recovery_sup_s);
        assert!(bwd.recovery_sup_rho <= 1e-4);
        assert_eq!(bwd.recon_hermite.fills.len(), 1);
        assert!(!bwd.weak_limits.is_empty());
        // fan grows from the apex
        let first = &bwd.terra.intervals[0];
        let last = bwd.terra.intervals.last().unwrap();
        assert!(first[0].width() < 1e-10);
        assert!(last[0].width() > 0.5);
        // phase-flow fan and reconstruction gap describe the same interval:
        // the backward flow of the shock's one-sided states retraces the
        // clipped labels' forward trajectories
        let fill = bwd.recon_hermite.fills[0].interval;
        assert!(
            (last[0].lo - fill.lo).abs() <= 1e-6 && (last[0].hi - fill.hi).abs() <= 1e-6,
            "terra {:?} vs reconstruction gap {:?}",
            last[0],
            fill
        );
        // pure bump S0 has no interior minimizer: the lemma gate reports it
        assert!(bwd.lemma.is_err());
    }
}
