//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails. Pass criterion numbers as arguments to
//! run a subset: `cargo test --test acceptance -- 3 7`.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use confsets::calibrate::{calibrate_ellipse, calibrate_hull, mc_volume, HullCalibrationConfig};
use confsets::coverage::{min_coverage, worst_case_d, McConfig};
use confsets::lasso::{ls_lasso_gap, solve_lasso_penalties};
use confsets::rng::{fill_normals, par_count_chunks};
use confsets::shapes::{
    check_condition_a, closure_condition_a, parallelogram_vertices, sample_cone_points, AxisBox, BoundingBox,
    ConditionCheckConfig, ConditionVerdict, ConfidenceShape, Ellipse, OrthantCone, Parallelogram,
};
use confsets::simulate::{
    block_design, consistent_regime_experiment, coverage_profile, minimize_v_zeta, ConsistentConfig, DesignFamily,
    GridSpec, NoiseKind,
};
use confsets::special::{chi_square_quantile, normal_cdf};
use confsets::{ExtendedReal, ExtendedVector, GramData, LinearModel, SignVector, TuningVector};

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn example_gram() -> GramData {
    GramData::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, -0.5, -0.5, 1.0])).unwrap()
}

fn example_lambda() -> Vec<f64> {
    vec![20f64.sqrt() / 2.0; 2]
}

fn example_tuning() -> TuningVector {
    TuningVector::finite_sample(example_lambda(), 20).unwrap()
}

fn random_spd(p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(p, p);
    fill_normals(rng, a.as_mut_slice());
    let c = a.tr_mul(&a) / p as f64 + DMatrix::identity(p, p) * 0.1;
    let d = DVector::from_fn(p, |j, _| 1.0 / c[(j, j)].sqrt());
    DMatrix::from_fn(p, p, |i, j| c[(i, j)] * d[i] * d[j])
}

/// p = 1 coverage profile against the closed-form minimum.
fn criterion_1() -> Outcome {
    let n = 100;
    let lambda = 5.0;
    let gram = GramData::from_matrix(DMatrix::from_element(1, 1, 1.0)).unwrap();
    let tuning = TuningVector::finite_sample(vec![lambda], n).unwrap();
    let cal = calibrate_ellipse(&gram, &tuning, 1.0, 0.05).unwrap();
    let a = cal.k_star.sqrt();
    let mu = lambda / (n as f64).sqrt();
    let formula = [mu, -mu]
        .iter()
        .map(|m| normal_cdf(a - m) - normal_cdf(-a - m))
        .fold(f64::INFINITY, f64::min);
    let model = LinearModel::new(DMatrix::from_element(n, 1, 1.0), DVector::zeros(n), 1.0).unwrap();
    let shape = ConfidenceShape::Box(AxisBox::symmetric(DVector::from_element(1, a)).unwrap());
    let points = (-100..=100).map(|i| DVector::from_element(1, i as f64 / 10.0)).collect();
    let prof = coverage_profile(&model, &tuning, &shape, &GridSpec::explicit(points), 100_000, 101).unwrap();
    let gap = (prof.min_value - formula).abs();
    check(
        gap <= 0.005,
        format!("a = {a:.6}, formula min {formula:.6}, profile min {:.5} at beta = {:.1}, |gap| = {gap:.5}", prof.min_value, prof.min_point[0]),
    )
}

/// p = 2 reference design, calibrated Lasso ellipse, full sign/magnitude grid.
fn criterion_2() -> Outcome {
    let gram = example_gram();
    let tuning = example_tuning();
    let cal = calibrate_ellipse(&gram, &tuning, 1.0, 0.05).unwrap();
    let model = LinearModel::new(block_design(&gram, 20).unwrap(), DVector::zeros(20), 1.0).unwrap();
    let prof = coverage_profile(&model, &tuning, &cal.shape, &GridSpec::default(), 100_000, 202).unwrap();
    let big = 20.0 / 20f64.sqrt() - 1e-9;
    let se = prof.min_std_error * std::f64::consts::SQRT_2;
    let best_d_star = prof
        .points
        .iter()
        .filter(|pt| pt.beta[0].abs() >= big && pt.beta[1].abs() >= big && pt.beta[0] * pt.beta[1] > 0.0)
        .map(|pt| pt.estimate.coverage)
        .fold(f64::INFINITY, f64::min);
    let in_band = (prof.min_value - 0.95).abs() <= 0.007;
    let attained = best_d_star - prof.min_value <= 3.0 * se;
    check(
        in_band && attained,
        format!(
            "{} grid points, min {:.5} at beta = ({:.3}, {:.3}); best large +-(1,1) point {:.5}",
            prof.points.len(),
            prof.min_value,
            prof.min_point[0],
            prof.min_point[1],
            best_d_star
        ),
    )
}

/// argmin of exact ellipse coverage equals argmax of ||C^{-1/2} Lambda d||.
fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut ties = 0;
    for case in 0..50 {
        let p = 2 + case % 3;
        let c = if case % 10 == 9 { DMatrix::identity(p, p) } else { random_spd(p, &mut rng) };
        let gram = GramData::from_matrix(c).unwrap();
        let lambda: Vec<f64> = (0..p)
            .map(|j| match case % 5 {
                // isotropic penalties and zero penalties produce ties
                0 => 1.3,
                1 if j == 0 => 0.0,
                _ => rng.random_range(0.0..3.0),
            })
            .collect();
        let tuning = if case % 2 == 0 {
            TuningVector::finite_sample(lambda.iter().map(|l| l * 5.0).collect(), 25).unwrap()
        } else {
            TuningVector::conservative(lambda).unwrap()
        };
        let k = chi_square_quantile(0.9, p as f64).unwrap() * rng.random_range(0.5..2.0);
        let shape = ConfidenceShape::Ellipse(Ellipse::centered(gram.c().clone(), k).unwrap());
        let report = min_coverage(&shape, &gram, &tuning, 1.0, &McConfig::new(1000, 0)).unwrap();
        let worst = worst_case_d(&gram, &tuning).unwrap();
        if worst.len() > 2 {
            ties += 1;
        }
        if report.argmin_d != worst {
            return Err(format!("case {case} (p = {p}): argmin {:?} vs argmax {:?}", report.argmin_d, worst));
        }
    }
    Ok(format!("50 configurations agree as sets ({ties} with ties beyond +-d)"))
}

/// LS versus Lasso ellipse size and non-containment.
fn criterion_4() -> Outcome {
    let gram = example_gram();
    let zero = TuningVector::finite_sample(vec![0.0, 0.0], 20).unwrap();
    let ls = calibrate_ellipse(&gram, &zero, 1.0, 0.05).unwrap();
    let lasso = calibrate_ellipse(&gram, &example_tuning(), 1.0, 0.05).unwrap();

    let draws = 10_000_000;
    let k_ls = ls.k_star;
    let hits = par_count_chunks(draws, 404, 1, 1, |_, rng, len| {
        let mut z = [0.0; 2];
        let mut h = 0;
        for _ in 0..len {
            fill_normals(rng, &mut z);
            h += u64::from(z[0] * z[0] + z[1] * z[1] <= k_ls);
        }
        vec![h]
    })[0];
    let frac = hits as f64 / draws as f64;
    let se = (0.95 * 0.05 / draws as f64).sqrt();
    let oracle_ok = (frac - 0.95).abs() <= 3.0 * se;
    let margin = lasso.k_star - ls.k_star;

    // confidence sets in beta space: {b : n (b - center)' C (b - center) <= k}
    let x = block_design(&gram, 20).unwrap();
    let beta = DVector::from_vec(vec![1.0, 1.0]);
    let c = gram.c();
    let boundary = ConfidenceShape::Ellipse(Ellipse::centered(c.clone(), ls.k_star).unwrap())
        .boundary_polyline(512)
        .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    let mut witness = None;
    for dataset in 0..20 {
        let mut eps = DVector::zeros(20);
        fill_normals(&mut rng, eps.as_mut_slice());
        let y = &x * &beta + eps;
        let model = LinearModel::new(x.clone(), y, 1.0).unwrap();
        let b_ls = solve_lasso_penalties(&model, &[0.0, 0.0]).unwrap().beta_hat;
        let b_l = solve_lasso_penalties(&model, &example_lambda()).unwrap().beta_hat;
        let outside = boundary.iter().find(|pt| {
            let b = &b_ls - DVector::from_row_slice(&pt[..]) / 20f64.sqrt();
            let r = &b - &b_l;
            20.0 * r.dot(&(c * &r)) > lasso.k_star
        });
        if outside.is_some() {
            witness = Some(dataset);
            break;
        }
    }
    check(
        oracle_ok && margin > 0.5 && witness.is_some(),
        format!(
            "k*_LS = {:.6} (MC {frac:.5} +- {se:.5}), k*_Lasso = {:.6}, margin {margin:.4}, non-containment on dataset {:?}",
            ls.k_star, lasso.k_star, witness
        ),
    )
}

/// Calibrated hull is smaller than the calibrated Lasso ellipse.
fn criterion_5() -> Outcome {
    let gram = example_gram();
    let tuning = example_tuning();
    let ellipse = calibrate_ellipse(&gram, &tuning, 1.0, 0.05).unwrap();
    let cfg = HullCalibrationConfig::new(McConfig::new(100_000, 505));
    let hull = calibrate_hull(&gram, &tuning, 1.0, 0.05, &cfg).unwrap();
    let check_cov = min_coverage(&hull.shape, &gram, &tuning, 1.0, &McConfig::new(1_000_000, 5050)).unwrap();
    let (v_hull, se_hull) = mc_volume(&hull.shape, 1_000_000, 51).unwrap();
    let (v_ell, se_ell) = mc_volume(&ellipse.shape, 1_000_000, 52).unwrap();
    let combined = (se_hull * se_hull + se_ell * se_ell).sqrt();
    let smaller = v_ell - v_hull > 3.0 * combined;
    let covered = (check_cov.min_coverage - 0.95).abs() <= 0.004;
    check(
        smaller && covered,
        format!(
            "hull k = {:.4}, volume {v_hull:.3} +- {se_hull:.3} vs ellipse k = {:.4}, volume {v_ell:.3} +- {se_ell:.3}; hull min coverage {:.5} (fresh 1e6 sample)",
            hull.k_star, ellipse.k_star, check_cov.min_coverage
        ),
    )
}

/// Ellipse containment, closure idempotence, cone monotonicity.
fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut min_points = usize::MAX;
    for case in 0..20 {
        let p = 2 + case % 2;
        let c = random_spd(p, &mut rng);
        let k = rng.random_range(0.5..10.0);
        let shape = ConfidenceShape::Ellipse(Ellipse::centered(c.clone(), k).unwrap());
        let apexes = if p == 2 { 600 } else { 400 };
        let cfg = ConditionCheckConfig { apex_samples: apexes, points_per_cone: 64, seed: case as u64 };
        let report = check_condition_a(&shape, &c, &cfg).unwrap();
        if let ConditionVerdict::Counterexample { m, d, z } = &report.verdict {
            return Err(format!("ellipse case {case}: counterexample m = {m:?}, d = {d}, z = {z:?}"));
        }
        min_points = min_points.min(report.cone_points);
    }
    if min_points < 10_000 {
        return Err(format!("only {min_points} cone points in some case"));
    }

    // closure idempotence: close a cloud, sample the closure, close again
    let c = example_gram().c().clone();
    let cloud: Vec<DVector<f64>> = (0..15)
        .map(|_| DVector::from_fn(2, |_, _| rng.random_range(-3.0..3.0)))
        .collect();
    let first = closure_condition_a(cloud.clone(), c.clone()).unwrap();
    let clip = BoundingBox { lower: DVector::from_element(2, -8.0), upper: DVector::from_element(2, 8.0) };
    let mut second_cloud = Vec::new();
    for m in &cloud {
        for d in SignVector::enumerate(2) {
            let cone = OrthantCone::new(c.clone(), d, m.clone()).unwrap();
            second_cloud.extend(sample_cone_points(&cone, &clip, 8, &mut rng).unwrap());
        }
    }
    if second_cloud.iter().any(|z| !first.contains(z)) {
        return Err("closure sample escaped the closure".into());
    }
    let second = closure_condition_a(second_cloud.clone(), c.clone()).unwrap();
    let mut probes = 0;
    for y in &second_cloud {
        for d in SignVector::enumerate(2) {
            let cone = OrthantCone::new(c.clone(), d, y.clone()).unwrap();
            for z in sample_cone_points(&cone, &clip, 4, &mut rng).unwrap() {
                probes += 1;
                if !first.contains(&z) {
                    return Err(format!("closing the closure sample added {z:?}"));
                }
            }
        }
    }
    for _ in 0..20_000 {
        let z = DVector::from_fn(2, |_, _| rng.random_range(-8.0..8.0));
        if second.contains(&z) && !first.contains(&z) {
            return Err(format!("second closure contains new point {z:?}"));
        }
    }

    // cone monotonicity: y in A(m), z in A(y) implies z in A(m)
    let mut triples = 0;
    while triples < 10_000 {
        let p = 2 + triples % 3;
        let cb = random_spd(p, &mut rng);
        let m = DVector::from_fn(p, |_, _| rng.random_range(-3.0..3.0));
        let d = SignVector::from_index(rng.random_range(0..1usize << p), p);
        let outer = OrthantCone::new(cb.clone(), d.clone(), m.clone()).unwrap();
        let big = BoundingBox { lower: DVector::from_element(p, -1e3), upper: DVector::from_element(p, 1e3) };
        let ys = sample_cone_points(&outer, &big, 2, &mut rng).unwrap();
        for y in ys {
            let inner = OrthantCone::new(cb.clone(), d.clone(), y).unwrap();
            for z in sample_cone_points(&inner, &big, 1, &mut rng).unwrap() {
                triples += 1;
                if !outer.contains(&z) {
                    return Err(format!("monotonicity failed: m = {m:?}, z = {z:?}"));
                }
            }
        }
    }
    Ok(format!(
        "20 ellipses held (>= {min_points} cone points each); closure idempotent on {probes} second-pass points; {triples} monotone triples"
    ))
}

/// |(X'X (b_L - b_LS))_j| <= lambda_j.
fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let mut worst = f64::NEG_INFINITY;
    for case in 0..1000 {
        let p = 1 + case % 6;
        let n = p + rng.random_range(1..40);
        let mut x = DMatrix::zeros(n, p);
        fill_normals(&mut rng, x.as_mut_slice());
        let mut y = DVector::zeros(n);
        fill_normals(&mut rng, y.as_mut_slice());
        y *= rng.random_range(0.1..10.0);
        let model = match LinearModel::new(x, y, 1.0) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let lambda: Vec<f64> = (0..p).map(|_| rng.random_range(0.0..20.0)).collect();
        let tuning = TuningVector::finite_sample(lambda.clone(), n).unwrap();
        let sol = solve_lasso_penalties(&model, &lambda).unwrap();
        let gap = ls_lasso_gap(&model, &tuning, &sol).unwrap();
        for (g, l) in gap.iter().zip(&lambda) {
            worst = worst.max(g - l);
            if *g > l + 1e-6 {
                return Err(format!("case {case}: {g} > {l} + 1e-6"));
            }
        }
    }
    Ok(format!("1000 instances, max (gap - lambda) = {worst:.3e}"))
}

/// V^zeta minimizers stay in the parallelogram and reach its corners.
fn criterion_8() -> Outcome {
    let gram = example_gram();
    let lambda0 = [1.0, 0.6];
    let mut axis: Vec<ExtendedReal> = (0..39).map(|i| ExtendedReal::Finite(-6.0 + 12.0 * i as f64 / 38.0)).collect();
    axis.push(ExtendedReal::NegInf);
    axis.push(ExtendedReal::PosInf);
    let mut worst = f64::NEG_INFINITY;
    for a in &axis {
        for b in &axis {
            let m = minimize_v_zeta(&ExtendedVector(vec![*a, *b]), &gram, &lambda0).unwrap();
            let cm = gram.c() * &m;
            for j in 0..2 {
                worst = worst.max(cm[j].abs() - lambda0[j]);
            }
        }
    }
    let par = Parallelogram::new(gram.c().clone(), lambda0.to_vec(), 1.0).unwrap();
    let mut corner_err = 0.0f64;
    for v in parallelogram_vertices(&par) {
        let m = minimize_v_zeta(&ExtendedVector::finite(&-&v), &gram, &lambda0).unwrap();
        corner_err = corner_err.max((m - v).amax());
    }
    check(
        worst <= 1e-8 && corner_err <= 1e-8,
        format!("41^2 grid: max (|Cm|_j - lambda0_j) = {worst:.3e}; corner error {corner_err:.3e}"),
    )
}

/// Worst-grid coverage trends under consistent tuning.
fn criterion_9() -> Outcome {
    let base = ConsistentConfig {
        c: example_gram().c().clone(),
        lambda0: vec![1.0, 1.0],
        lambda_scale: 1.0,
        lambda_exponent: 0.75,
        d_scale: 1.5,
        n_list: vec![200, 1000, 10_000],
        reps: 10_000,
        seed: 909,
        sigma: 1.0,
        noise: NoiseKind::Gaussian,
        design: DesignFamily::Block,
        magnitudes: vec![0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0],
    };
    let wide = consistent_regime_experiment(&base).unwrap();
    let narrow = consistent_regime_experiment(&ConsistentConfig { d_scale: 0.5, ..base.clone() }).unwrap();
    let w: Vec<f64> = wide.rows.iter().map(|r| r.worst_coverage).collect();
    let nb: Vec<f64> = narrow.rows.iter().map(|r| r.boundary_coverage).collect();
    let up = w.windows(2).all(|p| p[0] <= p[1]) && w[2] >= 0.99;
    let down = nb.windows(2).all(|p| p[0] >= p[1]) && nb[2] <= 0.10;
    check(
        up && down,
        format!("d = 1.5 worst-grid coverage {w:?}; d = 0.5 boundary coverage {nb:?}"),
    )
}

fn run_cli(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_confsets"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

/// Stochastic subcommands are byte-identical across thread counts.
fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let write = |name: &str, text: &str| {
        let path = dir.path().join(name);
        std::fs::write(&path, text).unwrap();
        path.to_str().unwrap().to_owned()
    };
    let problem = r#""c": [[1, -0.5], [-0.5, 1]], "n": 20, "lambda": [2.23606797749979, 2.23606797749979]"#;
    let configs = [
        (
            "coverage",
            write(
                "coverage.json",
                &format!(r#"{{{problem}, "n_samples": 200000, "shape": {{"type": "box", "lower": [-2, -2], "upper": [2, 2]}}}}"#),
            ),
        ),
        ("shape", write("shape.json", &format!(r#"{{{problem}, "n_samples": 20000}}"#))),
        (
            "simulate",
            write(
                "simulate.json",
                r#"{"design": {"c": [[1, -0.5], [-0.5, 1]], "n": 20}, "lambda": [2.23606797749979, 2.23606797749979],
                    "reps": 20000, "grid": {"magnitudes": [0, 1, 20]}}"#,
            ),
        ),
        (
            "consistent",
            write(
                "consistent.json",
                r#"{"c": [[1, -0.5], [-0.5, 1]], "lambda0": [1, 1], "lambda_exponent": 0.75, "d_scale": 1.5,
                    "n_list": [200, 1000], "reps": 3000}"#,
            ),
        ),
    ];
    let mut done = Vec::new();
    for (cmd, path) in &configs {
        let one = run_cli(&[cmd, "--config", path, "--seed", "77", "--threads", "1"])?;
        let four = run_cli(&[cmd, "--config", path, "--seed", "77", "--threads", "4"])?;
        if one != four {
            return Err(format!("`{cmd}` differs between 1 and 4 threads"));
        }
        if one.is_empty() {
            return Err(format!("`{cmd}` wrote nothing"));
        }
        done.push(format!("{cmd} ({} bytes)", one.len()));
    }
    Ok(format!("identical with 1 and 4 threads: {}", done.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [(u32, &str, fn() -> Outcome); 10] = [
        (1, "p = 1 formula vs brute-force profile", criterion_1),
        (2, "p = 2 reference design profile", criterion_2),
        (3, "argmin coverage = argmax noncentrality", criterion_3),
        (4, "LS vs Lasso ellipse size", criterion_4),
        (5, "hull smaller than Lasso ellipse", criterion_5),
        (6, "cone-closure condition suite", criterion_6),
        (7, "KKT distance bound", criterion_7),
        (8, "V^zeta minimizers and parallelogram", criterion_8),
        (9, "consistent-tuning coverage trends", criterion_9),
        (10, "thread-count determinism of the CLI", criterion_10),
    ];
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, f) in criteria {
        if !selected.is_empty() && !selected.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("acceptance {id:>2} PASS  {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("acceptance {id:>2} FAIL  {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} acceptance criteria failed");
        ExitCode::FAILURE
    }
}
