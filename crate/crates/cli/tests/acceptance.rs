//! The twelve acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines are always printed:
//! `cargo test -p halfspace-cli --test acceptance`.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use halfspace_core::barriers::{certify_barrier_cond, find_barrier_params};
use halfspace_core::estimates::{
    abp_check, harnack_quotient, oscillation_decay, poly_approx_check, relative_drift, schauder_ratio, AbpOptions,
};
use halfspace_core::geometry::{cube_measure, measure_normalization, set_measure};
use halfspace_core::operators::{apply_l0, caloric_quadratic, manufactured_solutions, CoefficientField, EllipticityParams, StFn, TransportVelocity};
use halfspace_core::regularize::{smooth_field, BumpKernel};
use halfspace_core::solver::{model_params, random_positive_solution_ensemble, solve_ivbp, solve_model, Forcing, IvbProblem, SolverConfig};
use halfspace_core::{Grid, ParabolicCube, SPoint, ScalarField, WeightedMeasure, YNorm};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn velocity(v: f64) -> TransportVelocity {
    TransportVelocity::new(v).unwrap()
}

fn mu() -> WeightedMeasure {
    WeightedMeasure::new(0.5).unwrap()
}

fn max_error(field: &ScalarField, exact: &StFn, last_slice_only: bool) -> f64 {
    let g = field.grid();
    let n = g.n();
    let start = if last_slice_only { g.len() - g.spatial_len() } else { 0 };
    (start..g.len())
        .map(|i| {
            let c = g.coords(i);
            (field.value(i) - exact(c[0] * c[0], &c[1..n], c[n])).abs()
        })
        .fold(0.0, f64::max)
}

fn manufactured_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    for v in [0.25, 1.0, 4.0] {
        let grid = Arc::new(Grid::uniform(2, (0.0, 1.0, 33), (-1.0, 1.0, 33), (0.0, 1.0, 33)).map_err(e2s)?);
        let f: StFn = Arc::new(move |x, _, t| x + v * t);
        let sol = solve_model(velocity(v), Forcing::Zero, f.clone(), f.clone(), 0.0, grid, &SolverConfig::with_dt(1.0 / 32.0))
            .map_err(e2s)?;
        worst = worst.max(max_error(&sol.field, &f, false));
    }
    let elapsed = start.elapsed();
    ensure(
        worst <= 1e-10 && elapsed < Duration::from_secs(5),
        format!("max error {worst:.3e} over v in {{0.25, 1, 4}} on 33^3, {:.2}s", elapsed.as_secs_f64()),
    )
}

fn convergence_order() -> Outcome {
    let start = Instant::now();
    let v = 1.0;
    let exact = caloric_quadratic(2, v).to_fn();
    let final_error = |ns: usize, horizon: f64, dt: f64| -> Result<f64, String> {
        let grid = Arc::new(Grid::uniform(2, (0.0, 1.0, ns), (-1.0, 1.0, ns), (0.0, horizon, 2)).map_err(e2s)?);
        let sol = solve_model(velocity(v), Forcing::Zero, exact.clone(), exact.clone(), 0.0, grid, &SolverConfig::with_dt(dt))
            .map_err(e2s)?;
        Ok(max_error(&sol.field, &exact, true))
    };
    let (e_dt, e_dt2) = (final_error(33, 0.5, 0.05)?, final_error(33, 0.5, 0.025)?);
    let (e_h, e_h2) = (final_error(9, 0.1, 1e-4)?, final_error(17, 0.1, 1e-4)?);
    let (rt, rs) = (e_dt / e_dt2, e_h / e_h2);
    let elapsed = start.elapsed();
    ensure(
        rt >= 1.8 && rs >= 3.5 && elapsed < Duration::from_secs(120),
        format!("time ratio {rt:.3} (errors {e_dt:.3e} -> {e_dt2:.3e}), space ratio {rs:.3} ({e_h:.3e} -> {e_h2:.3e}), {:.1}s", elapsed.as_secs_f64()),
    )
}

fn maximum_principle() -> Outcome {
    let params = EllipticityParams::new(0.5, 0.5).map_err(e2s)?;
    let mut worst = 0.0_f64;
    let sizes = [17, 25, 33, 41, 49];
    for seed in 0..10u64 {
        let ns = sizes[seed as usize % sizes.len()];
        let grid = Arc::new(Grid::uniform(2, (0.0, 1.0, ns), (-1.0, 1.0, ns), (0.0, 0.5, ns)).map_err(e2s)?);
        let coeffs = CoefficientField::random(2, seed, params).map_err(e2s)?;
        let phase = seed as f64 * 0.7;
        let data: StFn = Arc::new(move |x, y, t| -0.5 * (1.0 + (2.0 * x - 3.0 * y[0] + t + phase).sin()) - 0.1 * x);
        let g: StFn = Arc::new(move |x, y, t| -0.5 * (1.0 + (x + 2.0 * y[0] - 4.0 * t + phase).cos()));
        let problem = IvbProblem::new(coeffs, Forcing::Function(g), data.clone(), data);
        let dt = 0.5 / (ns - 1) as f64;
        let u = solve_ivbp(&problem, grid, &SolverConfig::with_dt(dt)).map_err(e2s)?.field;
        worst = worst.max(u.max().max(0.0));
    }
    ensure(worst <= 1e-12, format!("sup u+ = {worst:.3e} over 10 random coefficient fields, grids 17^3 .. 49^3"))
}

fn abp_constant(ns: usize, g: f64) -> Result<f64, String> {
    let grid = Arc::new(Grid::uniform(2, (0.0, 1.0, ns), (-1.0, 1.0, ns), (0.0, 1.0, ns)).map_err(e2s)?);
    let zero: StFn = Arc::new(|_, _, _| 0.0);
    // solver convention u_t = Lu + f, so f = -g
    let forcing: StFn = Arc::new(move |_, _, _| -g);
    let cfg = SolverConfig::with_dt(1.0 / (ns - 1) as f64);
    let u = solve_model(velocity(1.0), Forcing::Function(forcing), zero.clone(), zero, 0.0, grid.clone(), &cfg)
        .map_err(e2s)?
        .field;
    let cube = ParabolicCube::q_rho(0.0, &[0.0], 1.0, 1.0).map_err(e2s)?.with_y_norm(YNorm::Max);
    let r = abp_check(&u, &ScalarField::constant(grid, g), &cube, &mu(), &AbpOptions::default()).map_err(e2s)?;
    Ok(r.measured_constant)
}

fn abp_scale_invariance() -> Outcome {
    let c1 = abp_constant(17, -1.0)?;
    let c2 = abp_constant(17, -2.0)?;
    let fine = abp_constant(33, -1.0)?;
    let invariance = (c1 - c2).abs() / c1;
    let drift = (c1 / fine).max(fine / c1);
    ensure(
        invariance <= 1e-8 && drift < 2.0 && c1.is_finite() && c1 > 0.0,
        format!("g -> 2g relative change {invariance:.3e}; constants {c1:.4} (17) vs {fine:.4} (33), factor {drift:.3}"),
    )
}

fn barrier_certification() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for v in [0.25, 1.0, 4.0] {
        let start = Instant::now();
        for n in [2, 3] {
            let p = find_barrier_params(velocity(v), n).map_err(e2s)?;
            let c64 = certify_barrier_cond(&p, 64);
            let c128 = certify_barrier_cond(&p, 128);
            let min64 = c64.margins[0].value;
            let mut control = p;
            control.big_c = 0.0;
            let negative = certify_barrier_cond(&control, 64);
            ok &= c64.pass && min64 > 0.0 && c128.pass && !negative.pass;
            lines.push(format!("v={v} n={n} min {min64:.2e}"));
        }
        ok &= start.elapsed() < Duration::from_secs(60);
    }
    ensure(ok, format!("{}; C = 0 fails in every case", lines.join(", ")))
}

fn ensemble() -> Result<(Arc<Grid>, Vec<ScalarField>), String> {
    let v = velocity(1.0);
    let grid = Arc::new(Grid::uniform(2, (0.0, 1.0, 33), (-1.0, 1.0, 33), (0.0, 0.5, 201)).map_err(e2s)?);
    let coeffs = CoefficientField::model(2, v, model_params(v).map_err(e2s)?).map_err(e2s)?;
    let members = random_positive_solution_ensemble(7, 20, &coeffs, grid.clone(), &SolverConfig::with_dt(0.0025)).map_err(e2s)?;
    Ok((grid, members))
}

fn harnack_robustness(grid: &Arc<Grid>, members: &[ScalarField]) -> Outcome {
    let zero = ScalarField::constant(grid.clone(), 0.0);
    let mut maxima = Vec::new();
    for rho in [0.1, 0.2, 0.4] {
        let mut m = 0.0_f64;
        for u in members {
            m = m.max(harnack_quotient(u, &zero, 0.5, &[0.0], 0.5, rho, &mu()).map_err(e2s)?.measured_constant);
        }
        maxima.push(m);
    }
    let finite = maxima.iter().all(|m| m.is_finite());
    let spread = maxima.iter().cloned().fold(0.0, f64::max) / maxima.iter().cloned().fold(f64::INFINITY, f64::min);
    let constant = ScalarField::constant(grid.clone(), 3.0);
    let one = harnack_quotient(&constant, &zero, 0.5, &[0.0], 0.5, 0.4, &mu()).map_err(e2s)?.measured_constant;
    ensure(
        finite && spread < 2.0 && one == 1.0,
        format!("max quotient {:.4} / {:.4} / {:.4} at rho 0.1 / 0.2 / 0.4, spread {spread:.3}; constant gives {one}", maxima[0], maxima[1], maxima[2]),
    )
}

fn holder_content(grid: &Arc<Grid>, members: &[ScalarField]) -> Outcome {
    let zero = ScalarField::constant(grid.clone(), 0.0);
    let bases = [(0.5, 0.0), (0.25, 0.25), (0.0, 0.0), (0.4, -0.3)];
    let mut worst = 0.0_f64;
    for u in members {
        for &(s0, y0) in &bases {
            let base = SPoint::new(s0, vec![y0], 0.5).map_err(e2s)?;
            let r = oscillation_decay(u, &base, 0.4, 3, &zero, &mu(), 0.95).map_err(e2s)?;
            for &(_, t) in &r.series[0].points {
                worst = worst.max(t);
            }
        }
    }
    // dyadic spacings and radii put every cube edge exactly on a node
    let fine_y = Arc::new(Grid::uniform(2, (0.0, 1.0, 33), (-1.0, 1.0, 65), (0.0, 1.0, 257)).map_err(e2s)?);
    let zero = ScalarField::constant(fine_y.clone(), 0.0);
    let linear = ScalarField::sample(fine_y, |_, y, _| y[0]).map_err(e2s)?;
    let base = SPoint::new(0.5, vec![0.0], 1.0).map_err(e2s)?;
    let r = oscillation_decay(&linear, &base, 0.5, 3, &zero, &mu(), 0.95).map_err(e2s)?;
    let exact_half = r.series[0].points.iter().all(|&(_, t)| t == 0.5);
    ensure(
        worst <= 0.95 && exact_half,
        format!("worst theta {worst:.4} (alpha >= {:.3}) over 20 members x 4 cubes x 2 levels; u = y2 gives 0.5 exactly", (1.0 / worst).log2()),
    )
}

fn polynomial_approximation() -> Outcome {
    let grid = Arc::new(Grid::uniform(2, (0.0, 0.8, 33), (-0.8, 0.8, 33), (0.36, 1.0, 65)).map_err(e2s)?);
    let radii = [0.8, 0.4, 0.2, 0.1];
    let q = caloric_quadratic(2, 1.0);
    let f = ScalarField::sample(grid.clone(), |x, y, t| q.eval(x, y, t)).map_err(e2s)?;
    let l0f = apply_l0(velocity(1.0), &f).map_err(e2s)?;
    let r = poly_approx_check(&f, &l0f, 0.8, &radii).map_err(e2s)?;
    let mut mismatch = 0.0_f64;
    for &(rad, ratio) in &r.series[0].points {
        let cube = ParabolicCube::model_box(2, rad).map_err(e2s)?;
        let closed = grid
            .nodes_in(&cube)
            .iter()
            .map(|&i| {
                let c = grid.coords(i);
                let (x, t) = (c[0] * c[0], c[2]);
                (x * x + 4.0 * x * (t - 1.0) + 2.0 * (t - 1.0) * (t - 1.0)).abs()
            })
            .fold(0.0, f64::max);
        mismatch = mismatch.max((ratio * rad.powi(3) - closed).abs());
    }
    let ratios: Vec<f64> = r.series[0].points.iter().map(|p| p.1).collect();
    let monotone = ratios.windows(2).all(|w| w[1] < w[0]);
    let tends_to_zero = ratios[ratios.len() - 1] <= ratios[0] / 4.0;
    let taylor = ScalarField::sample(grid.clone(), |x, y, t| 1.0 + 2.0 * x - 3.0 * (t - 1.0) + y[0] + 0.5 * y[0] * y[0]).map_err(e2s)?;
    let zero = ScalarField::constant(grid, 0.0);
    let tr = poly_approx_check(&taylor, &zero, 0.8, &radii).map_err(e2s)?;
    let taylor_zero = tr.series[0].points.iter().all(|p| p.1 == 0.0);
    ensure(
        mismatch <= 1e-8 && monotone && tends_to_zero && taylor_zero,
        format!(
            "remainder mismatch {mismatch:.3e}; ratios {}; Taylor class gives 0",
            ratios.iter().map(|q| format!("{q:.4}")).collect::<Vec<_>>().join(" > ")
        ),
    )
}

fn schauder_stability() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for m in manufactured_solutions(velocity(1.0), 2).map_err(e2s)? {
        if m.g_fn()(0.3, &[0.1], 0.2) != 0.0 {
            continue;
        }
        let ratio = |ns: usize| -> Result<f64, String> {
            let grid = Arc::new(Grid::uniform(2, (0.0, 1.25, ns), (-1.25, 1.25, 2 * ns - 1), (0.0, 1.25, ns)).map_err(e2s)?);
            let f = m.f_fn();
            let field = ScalarField::sample(grid, |x, y, t| f(x, y, t)).map_err(e2s)?;
            Ok(schauder_ratio(&field, velocity(1.0), 0.5, 0.5).map_err(e2s)?.measured_constant)
        };
        let (a, b) = (ratio(17)?, ratio(33)?);
        let drift = relative_drift(a, b);
        ok &= drift < 0.1 && a.is_finite();
        parts.push(format!("{} {a:.4} -> {b:.4} ({:.1}%)", m.name, 100.0 * drift));
    }
    ensure(ok && !parts.is_empty(), parts.join(", "))
}

fn smoothing_rate() -> Outcome {
    let grid = Arc::new(Grid::uniform(2, (0.0, 1.0, 17), (-1.0, 1.0, 5), (0.0, 1.0, 2)).map_err(e2s)?);
    let kernel = BumpKernel::new(2, 16).map_err(e2s)?;
    let exact = ScalarField::sample(grid.clone(), |x, _, _| x.sqrt()).map_err(e2s)?;
    let eps = [1e-2, 1e-3, 1e-4, 1e-5];
    let mut errors = Vec::new();
    for &e in &eps {
        let h = smooth_field(|x, _, _| x.sqrt(), e, &kernel, grid.clone()).map_err(e2s)?;
        errors.push(h.zip_with(&exact, |a, b| (a - b).abs()).map_err(e2s)?.max());
    }
    // least-squares slope of log error against log eps
    let lx: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let (mx, my) = (lx.iter().sum::<f64>() / 4.0, ly.iter().sum::<f64>() / 4.0);
    let num: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let rate = num / den;
    let c = smooth_field(|_, _, _| 2.5, 1e-3, &kernel, grid.clone()).map_err(e2s)?;
    let const_err = c.values().iter().map(|v| (v - 2.5).abs()).fold(0.0, f64::max);
    let lin = smooth_field(|_, y, _| y[0], 1e-3, &kernel, grid.clone()).map_err(e2s)?;
    let y_exact = ScalarField::sample(grid, |_, y, _| y[0]).map_err(e2s)?;
    let lin_err = lin.zip_with(&y_exact, |a, b| (a - b).abs()).map_err(e2s)?.max();
    ensure(
        rate >= 0.45 && const_err <= 1e-8 && lin_err <= 1e-8,
        format!("rate {rate:.4}; constant error {const_err:.1e}, odd-linear error {lin_err:.1e}"),
    )
}

fn measure_correctness() -> Outcome {
    let mut worst = 0.0_f64;
    for s0 in [0.0, 1.0, 2.0] {
        for rho in [0.5, 1.0] {
            for nu in [0.25, 0.5, 0.75] {
                let mu = WeightedMeasure::new(nu).map_err(e2s)?;
                let q = ParabolicCube::q_rho(s0, &[0.0], 1.0, rho).map_err(e2s)?;
                let (slo, shi) = q.s_range();
                let (tlo, thi) = q.t_range();
                let grid = Grid::uniform(2, (slo, shi, 65), (-rho, rho, 65), (tlo, thi, 65)).map_err(e2s)?;
                let quad = set_measure(|c| q.contains_s(c), &grid, &mu).map_err(e2s)?;
                let closed = cube_measure(&q, &mu).map_err(e2s)? * measure_normalization(2, rho, nu, YNorm::Euclidean);
                worst = worst.max((quad - closed).abs() / closed);
            }
        }
    }
    ensure(worst <= 1e-6, format!("max relative difference {worst:.3e} over 18 (s0, rho, nu) triples"))
}

fn read_outputs(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .map_err(e2s)?
        .map(|e| {
            let e = e.map_err(e2s)?;
            Ok((e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).map_err(e2s)?))
        })
        .collect::<Result<_, String>>()?;
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let mut compared = 0;
    for (name, seed) in [("model_manufactured", "5"), ("harnack_ensemble", "11")] {
        let mut runs = Vec::new();
        for (k, threads) in ["1", "4"].iter().enumerate() {
            let out = tmp.path().join(format!("{name}_{k}"));
            let status = Command::new(env!("CARGO_BIN_EXE_halfspace"))
                .args(["run", name, "--seed", seed, "--threads", threads, "--out"])
                .arg(&out)
                .output()
                .map_err(e2s)?;
            if !status.status.success() {
                return Err(format!("{name} exited with {}: {}", status.status, String::from_utf8_lossy(&status.stderr)));
            }
            runs.push(read_outputs(&out)?);
        }
        if runs[0] != runs[1] {
            return Err(format!("{name}: outputs differ between runs"));
        }
        compared += runs[0].len();
    }
    ensure(compared > 0, format!("{compared} files bit-identical across repeated runs with 1 and 4 threads"))
}

fn main() -> ExitCode {
    let mut failures = 0;
    let mut report = |k: usize, name: &str, outcome: Outcome| {
        match outcome {
            Ok(d) => println!("criterion {k:>2} {name:<26} PASS  {d}"),
            Err(d) => {
                failures += 1;
                println!("criterion {k:>2} {name:<26} FAIL  {d}");
            }
        }
    };
    report(1, "manufactured exactness", manufactured_exactness());
    report(2, "convergence order", convergence_order());
    report(3, "maximum principle", maximum_principle());
    report(4, "ABP scale invariance", abp_scale_invariance());
    report(5, "barrier certification", barrier_certification());
    match ensemble() {
        Ok((grid, members)) => {
            report(6, "Harnack robustness", harnack_robustness(&grid, &members));
            report(7, "Holder content", holder_content(&grid, &members));
        }
        Err(e) => {
            report(6, "Harnack robustness", Err(format!("ensemble failed: {e}")));
            report(7, "Holder content", Err(format!("ensemble failed: {e}")));
        }
    }
    report(8, "polynomial approximation", polynomial_approximation());
    report(9, "Schauder ratio stability", schauder_stability());
    report(10, "smoothing rate", smoothing_rate());
    report(11, "measure correctness", measure_correctness());
    report(12, "CLI determinism", determinism());
    println!("acceptance: {} of 12 criteria passed", 12 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
