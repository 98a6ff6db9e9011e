//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit status
//! if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use xxz_engine::baths::{transition_rates, BathParams};
use xxz_engine::cycles::{evaluate_cycle, w_max, CycleKind, CycleParams, CycleSpec};
use xxz_engine::dynamics::{entropy_balance_along, evolve_populations};
use xxz_engine::model::{eigenenergies, hamiltonian_matrix, transition_table, SystemParams};
use xxz_engine::steady::{
    generator_matrix, gibbs_state, steady_state_closed_form, steady_state_solve, PopulationVector,
};
use xxz_engine::sweep::{figure_preset, run_sweep_with_threads, FigurePreset, SweepConfig, SweepTable};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_system(r: &mut ChaCha8Rng) -> SystemParams {
    SystemParams::new(r.gen_range(-3.0..3.0), 1.0, r.gen_range(0.05..1.0)).unwrap()
}

fn rates_at(p: &SystemParams, kappa: f64, eps: f64, tl: f64, tr: f64) -> xxz_engine::RateSet {
    let e = eigenenergies(p);
    let t = transition_table(&e, eps).unwrap();
    transition_rates(&t, &BathParams::new(tl, tr, kappa, eps).unwrap())
}

fn sweep(cfg: &SweepConfig) -> SweepTable {
    run_sweep_with_threads(cfg, 0).expect("preset sweep runs")
}

fn panel(preset: FigurePreset, name: &str) -> SweepConfig {
    figure_preset(preset)
        .into_iter()
        .find(|(p, _)| p == name)
        .map(|(_, c)| c)
        .expect("panel exists")
}

fn eigensystem_oracle() -> Outcome {
    let mut r = rng(1);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let p = SystemParams::new(r.gen_range(-5.0..5.0), r.gen_range(0.1..3.0), r.gen_range(-3.0..3.0)).unwrap();
        let mut closed = eigenenergies(&p).energies();
        let mut numeric: Vec<f64> = hamiltonian_matrix(&p)
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .collect();
        closed.sort_by(f64::total_cmp);
        numeric.sort_by(f64::total_cmp);
        for (a, b) in closed.iter().zip(&numeric) {
            worst = worst.max((a - b).abs());
        }
    }
    check(worst < 1e-12, format!("max deviation {worst:.3e} over 1000 points"))
}

fn steady_oracle() -> Outcome {
    let mut r = rng(2);
    let (mut worst_dev, mut worst_res, mut applicable): (f64, f64, usize) = (0.0, 0.0, 0);
    for _ in 0..1000 {
        let p = random_system(&mut r);
        let eps = if r.gen_bool(0.5) { 1.0 } else { 0.0 };
        let rates = rates_at(
            &p,
            r.gen_range(0.01..0.1),
            eps,
            r.gen_range(0.005..12.0),
            r.gen_range(0.005..12.0),
        );
        let solved = match steady_state_solve(&rates) {
            Ok(s) => s,
            Err(e) => return Err(format!("solver failed: {e}")),
        };
        let res = generator_matrix(&rates)
            .apply(&solved)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        worst_res = worst_res.max(res);
        if let Ok(c) = steady_state_closed_form(&rates) {
            applicable += 1;
            worst_dev = worst_dev.max(solved.max_abs_diff(&c));
        }
    }
    check(
        worst_dev < 1e-9 && worst_res < 1e-12,
        format!("max |solve - closed| {worst_dev:.3e} ({applicable}/1000 applicable), max residual {worst_res:.3e}"),
    )
}

fn gibbs_limit() -> Outcome {
    let mut r = rng(3);
    let mut worst: f64 = 0.0;
    for t in [0.1, 1.0, 10.0] {
        for eps in [0.0, 1.0] {
            for _ in 0..100 {
                let p = random_system(&mut r);
                let rates = rates_at(&p, 0.05, eps, t, t);
                let g = gibbs_state(&eigenenergies(&p), t).unwrap();
                worst = worst.max(steady_state_solve(&rates).unwrap().max_abs_diff(&g));
            }
        }
    }
    check(
        worst < 1e-10,
        format!("max |solve - Gibbs| {worst:.3e} over 600 points"),
    )
}

fn high_gradient_population() -> Outcome {
    let mut lowest = f64::INFINITY;
    for b in [-1.0, -0.5, 0.0, 0.5, 1.0] {
        let p = SystemParams::new(b, 1.0, 0.10).unwrap();
        let pop = steady_state_solve(&rates_at(&p, 0.05, 1.0, 2.4, 0.005)).unwrap();
        lowest = lowest.min(pop.as_array()[2]);
    }
    check(lowest >= 0.99, format!("min P3 = {lowest:.12}"))
}

fn symmetric_never_works() -> Outcome {
    let mut best = f64::NEG_INFINITY;
    let mut points = 0;
    for (_, cfg) in figure_preset(FigurePreset::Fig2) {
        let t = sweep(&cfg);
        if t.has_errors() {
            return Err("sweep produced error rows".into());
        }
        for (_, o) in t.for_kind(CycleKind::GqocSym) {
            best = best.max(o.result.w);
            points += 1;
        }
    }
    check(
        best <= 0.0 && points == 3 * 601,
        format!("max w = {best:.6e} over {points} points"),
    )
}

fn otto_cutoff() -> Outcome {
    let cfg = panel(FigurePreset::Fig3, "work");
    let step = cfg.axes[0].step();
    let t = sweep(&cfg);
    let mut widest: f64 = 0.0;
    let mut outside_max = f64::NEG_INFINITY;
    for (b, o) in t.for_kind(CycleKind::Qoc) {
        let b = b[0].abs();
        if o.result.w > 0.0 {
            widest = widest.max(b);
        }
        if b >= 1.1 + step {
            outside_max = outside_max.max(o.result.w);
        }
    }
    check(
        widest > 0.0 && widest < 1.1 + step && outside_max <= 1e-12,
        format!("w > 0 up to |B| = {widest:.2}; max w outside = {outside_max:.3e}"),
    )
}

fn saturation_work() -> Outcome {
    let t = sweep(&panel(FigurePreset::Fig4, "c"));
    let target = w_max(0.10, 0.99).unwrap();
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in [CycleKind::Qoc, CycleKind::GqocAsym] {
        let best = t
            .for_kind(kind)
            .map(|(_, o)| o.result.w)
            .fold(f64::NEG_INFINITY, f64::max);
        let rel = (best - target).abs() / target;
        ok &= rel < 0.05;
        lines.push(format!("{} max w = {best:.4} ({:.1}% off)", kind.name(), 100.0 * rel));
    }
    check(ok, lines.join("; "))
}

/// Maximal runs of consecutive grid indices.
fn runs(idx: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &i in idx {
        match out.last_mut() {
            Some((_, end)) if *end + 1 == i => *end = i,
            _ => out.push((i, i)),
        }
    }
    out
}

fn unity_efficiency() -> Outcome {
    let cfg = panel(FigurePreset::Fig4, "c");
    let n = cfg.axes[0].count;
    let t = sweep(&cfg);
    if t.has_errors() {
        return Err("sweep produced error rows".into());
    }
    let mut unity_idx = Vec::new();
    for (k, (_, o)) in t.for_kind(CycleKind::GqocAsym).enumerate() {
        let r = &o.result;
        if r.q12 > 0.0 && r.q34 > 0.0 {
            if r.eta != Some(1.0) {
                return Err(format!("both heats absorbed but eta = {:?} at index {k}", r.eta));
            }
            unity_idx.push(k);
        }
    }
    let tracks = runs(&unity_idx);
    let mirrored: Vec<(usize, usize)> = tracks.iter().rev().map(|&(a, b)| (n - 1 - b, n - 1 - a)).collect();
    let symmetric = tracks.len() == 2
        && tracks
            .iter()
            .zip(&mirrored)
            .all(|(x, y)| x.0.abs_diff(y.0) <= 1 && x.1.abs_diff(y.1) <= 1);
    let qoc_max = t
        .for_kind(CycleKind::Qoc)
        .filter_map(|(_, o)| o.result.eta)
        .fold(f64::NEG_INFINITY, f64::max);
    let b = cfg.axes[0].values();
    let shown: Vec<String> = tracks
        .iter()
        .map(|&(a, z)| format!("[{:.2}, {:.2}]", b[a], b[z]))
        .collect();
    check(
        symmetric && qoc_max < 1.0,
        format!("unity tracks {}; max QOC eta = {qoc_max:.4}", shown.join(" ")),
    )
}

fn second_law() -> Outcome {
    let mut min_pi = f64::INFINITY;
    let mut max_eq: f64 = 0.0;
    let mut points = 0;
    for (_, cfg) in figure_preset(FigurePreset::FigEp) {
        for (o, equilibrium) in [
            (cfg.clone(), false),
            (
                {
                    let mut c = cfg.clone();
                    c.base.dt = 0.0;
                    c
                },
                true,
            ),
        ] {
            let t = sweep(&o);
            if t.has_errors() {
                return Err("sweep produced error rows".into());
            }
            for (_, p) in t.for_kind(CycleKind::GqocAsym) {
                let stages = p.stages.ok_or("missing stage diagnostics")?;
                for s in stages {
                    if equilibrium {
                        max_eq = max_eq.max(s.flows.pi.abs());
                    } else {
                        if !s.flows.pi.is_finite() {
                            return Err(format!("non-finite Pi {}", s.flows.pi));
                        }
                        min_pi = min_pi.min(s.flows.pi);
                        points += 1;
                    }
                }
            }
        }
    }
    check(
        min_pi > 0.0 && max_eq < 1e-10,
        format!("min Pi = {min_pi:.3e} over {points} stage points; max |Pi| at dT = 0: {max_eq:.3e}"),
    )
}

fn random_cycle(r: &mut ChaCha8Rng) -> CycleParams {
    let b = r.gen_range(-3.0..3.0);
    let delta_c = r.gen_range(0.0..0.5);
    let t_mean = r.gen_range(0.1..8.0);
    CycleParams {
        b,
        j: 1.0,
        delta_c,
        delta_h: delta_c + r.gen_range(0.01..1.0),
        kappa: r.gen_range(0.01..0.1),
        t_mean,
        dt: r.gen_range(0.0..2.0) * t_mean,
        t_floor: 0.005,
    }
}

fn first_law_identities() -> Outcome {
    let mut r = rng(10);
    let (mut worst_formula, mut worst_mirror): (f64, f64) = (0.0, 0.0);
    for i in 0..10_000 {
        let kind = CycleKind::ALL[i % 3];
        let params = random_cycle(&mut r);
        let res = evaluate_cycle(&CycleSpec::new(kind, params).unwrap()).map_err(|e| e.to_string())?;
        if res.w != res.q12 + res.q34 {
            return Err(format!("w != q12 + q34 at {params:?}"));
        }
        let wmax = w_max(params.delta_c, params.delta_h).unwrap();
        worst_formula = worst_formula.max((res.w - wmax * (res.xi34 - res.xi12)).abs());
        if (res.w > 0.0) != (res.xi34 > res.xi12) {
            return Err(format!("sign condition disagrees with w at {params:?}"));
        }
        if res.unity != (res.q12 > 0.0 && res.q34 > 0.0) {
            return Err(format!("unity flag disagrees with heat signs at {params:?}"));
        }
        let mirror = evaluate_cycle(&CycleSpec::new(kind, CycleParams { b: -params.b, ..params }).unwrap())
            .map_err(|e| e.to_string())?;
        worst_mirror = worst_mirror.max((res.w - mirror.w).abs());
    }
    check(
        worst_formula < 1e-12 && worst_mirror < 1e-10,
        format!("max |w - Wmax*dXi| {worst_formula:.3e}; max |w(B) - w(-B)| {worst_mirror:.3e}"),
    )
}

fn relaxation() -> Outcome {
    let mut r = rng(11);
    let (mut worst_final, mut worst_mass, mut min_pi): (f64, f64, f64) = (0.0, 0.0, f64::INFINITY);
    for _ in 0..100 {
        let p = random_system(&mut r);
        let eps = if r.gen_bool(0.5) { 1.0 } else { 0.0 };
        let (tl, tr) = (r.gen_range(0.2..6.0), r.gen_range(0.2..6.0));
        let rates = rates_at(&p, r.gen_range(0.01..0.1), eps, tl, tr);
        let g = generator_matrix(&rates);
        let gap = g.spectral_gap().ok_or("no spectral gap")?;
        let raw: [f64; 4] = std::array::from_fn(|_| r.gen_range(0.01..1.0));
        let total: f64 = raw.iter().sum();
        let p0 = PopulationVector::new(raw.map(|x| x / total)).unwrap();
        let dt = 0.01 / g.max_escape_rate();
        let traj = evolve_populations(&rates, &p0, 50.0 / gap, dt).map_err(|e| e.to_string())?;
        for q in traj.populations() {
            worst_mass = worst_mass.max((q.as_array().iter().sum::<f64>() - 1.0).abs());
        }
        let target = steady_state_solve(&rates).unwrap();
        worst_final = worst_final.max(traj.last().unwrap().1.max_abs_diff(&target));
        let balance = entropy_balance_along(&traj, &rates, &eigenenergies(&p), tl, tr).map_err(|e| e.to_string())?;
        min_pi = balance.iter().map(|b| b.pi).fold(min_pi, f64::min);
    }
    check(
        worst_final < 1e-8 && worst_mass < 1e-12 && min_pi >= -1e-8,
        format!("max final dev {worst_final:.3e}; max mass error {worst_mass:.3e}; min Pi(t) {min_pi:.3e}"),
    )
}

fn fig5_config_json() -> String {
    serde_json::to_string(&figure_preset(FigurePreset::Fig5)[0].1).unwrap()
}

fn determinism() -> Outcome {
    let cfg = &figure_preset(FigurePreset::Fig5)[0].1;
    let one = run_sweep_with_threads(cfg, 1)
        .map_err(|e| e.to_string())?
        .to_csv_string();
    let eight = run_sweep_with_threads(cfg, 8)
        .map_err(|e| e.to_string())?
        .to_csv_string();
    if one != eight {
        return Err("library sweeps differ between 1 and 8 threads".into());
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("fig5.json");
    std::fs::write(&path, fig5_config_json()).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for threads in ["1", "8"] {
        let out = Command::new(env!("CARGO_BIN_EXE_xxz-engine"))
            .args(["sweep", "--config"])
            .arg(&path)
            .env("XXZ_ENGINE_THREADS", threads)
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("CLI sweep exited with {}", out.status));
        }
        outputs.push(out.stdout);
    }
    let identical = outputs[0] == outputs[1] && outputs[0] == one.as_bytes();
    check(
        identical,
        format!(
            "{} rows, {} bytes, identical across 1/8 threads and library/CLI",
            one.lines().count() - 1,
            one.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("eigensystem oracle", eigensystem_oracle),
        ("steady-state oracle equivalence", steady_oracle),
        ("Gibbs limit", gibbs_limit),
        ("high-gradient asymmetric population", high_gradient_population),
        ("symmetric GQOC never produces work", symmetric_never_works),
        ("QOC cutoff at B_cr", otto_cutoff),
        ("W_max saturation", saturation_work),
        ("unity efficiency tracks", unity_efficiency),
        ("second law", second_law),
        ("first-law and sign identities", first_law_identities),
        ("relaxation convergence", relaxation),
        ("sweep determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        if outcome.is_err() {
            failed += 1;
        }
        println!("[{tag}] {:>2}. {name}: {detail} ({secs:.2}s)", k + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
