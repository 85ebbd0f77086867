//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use ncvx_core::datagen::{CovarianceSpec, GeneratorSpec, LabelModel, NoiseSpec};
use ncvx_core::landscape::{
    grad_deviation_sup, kappa0_estimate, mu0_estimate, PopulationOracle, ProbeGrid,
};
use ncvx_core::linalg::{dot, max_abs_diff, Matrix};
use ncvx_core::losses::{batch_gradient, batch_hessian, batch_objective, TukeyLoss};
use ncvx_core::optim::{saga_step, svrg_vr_gradient, Algorithm, SagaConfig, SagaState};
use ncvx_core::rng;
use ncvx_core::{DataSet, Family, LossModel};
use ncvx_harness::experiment::{execute_experiment, write_outcome, DataConfig, ExperimentConfig, ExperimentOutcome};
use ncvx_harness::paper_step_grid;
use ncvx_harness::reference::ScheduleSettings;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: impl Into<String>) -> Verdict {
    Verdict { passed, detail: detail.into() }
}

fn within(elapsed: Duration, limit_s: f64) -> bool {
    elapsed.as_secs_f64() < limit_s
}

// ---------------------------------------------------------------------------
// Finite-difference oracles

fn normal_vec(rng: &mut ChaCha8Rng, p: usize, sd: f64) -> Vec<f64> {
    (0..p).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// Central differences at `h = 1e-5` carry an absolute error near `1e-11`,
/// while `ψ` vanishes quadratically at the cutoff. Within 0.05 of `±t0` the
/// gradient is too small for that error to stay below `1e-6` relative, so
/// residuals there are redrawn.
fn regression_residual(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let r = 4.0 * rng.sample::<f64, _>(StandardNormal);
        if (r.abs() - TukeyLoss::DEFAULT_CUTOFF).abs() > 0.05 {
            return r;
        }
    }
}

fn random_instance(rng: &mut ChaCha8Rng, family: Family) -> (LossModel, DataSet, Vec<f64>) {
    let p = rng.random_range(1..=20);
    let n = rng.random_range(1..=30);
    let theta = normal_vec(rng, p, 0.5);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(rng, p, 1.0)).collect();
    let (model, targets) = match family {
        Family::Classification => {
            let y = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
            (LossModel::classification(), y)
        }
        Family::Regression => {
            let y = rows.iter().map(|x| dot(&theta, x) + regression_residual(rng)).collect();
            (LossModel::robust_regression(TukeyLoss::DEFAULT_CUTOFF).unwrap(), y)
        }
    };
    (model, DataSet::from_rows(&rows, targets).unwrap(), theta)
}

fn central_gradient(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
    let mut t = theta.to_vec();
    (0..theta.len())
        .map(|j| {
            t[j] = theta[j] + h;
            let up = f(&t);
            t[j] = theta[j] - h;
            let down = f(&t);
            t[j] = theta[j];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Component-wise relative error against the largest component.
fn grad_matches(analytic: &[f64], fd: &[f64], rel: f64) -> bool {
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return fd.iter().all(|v| v.abs() < 1e-10);
    }
    analytic.iter().zip(fd).all(|(a, b)| (a - b).abs() <= rel * a.abs().max(scale))
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let h = 1e-5;
    let mut failures = Vec::new();
    for family in [Family::Classification, Family::Regression] {
        for trial in 0..100 {
            let (model, data, theta) = random_instance(&mut rng, family);
            for i in 0..data.len() {
                let s = data.sample(i);
                let g = model.sample_gradient(&theta, s).unwrap();
                let fd = central_gradient(|t| model.sample_loss(t, s).unwrap(), &theta, h);
                if !grad_matches(&g, &fd, 1e-6) {
                    failures.push(format!("{family:?} #{trial} sample {i} gradient"));
                }
            }
            let g = batch_gradient(&model, &theta, &data).unwrap();
            let fd = central_gradient(|t| batch_objective(&model, t, &data).unwrap(), &theta, h);
            if !grad_matches(&g, &fd, 1e-6) {
                failures.push(format!("{family:?} #{trial} batch gradient"));
            }
            let hess = batch_hessian(&model, &theta, &data).unwrap();
            let p = theta.len();
            let mut fd_h = Matrix::zeros(p, p);
            let mut t = theta.clone();
            for j in 0..p {
                t[j] = theta[j] + h;
                let up = batch_gradient(&model, &t, &data).unwrap();
                t[j] = theta[j] - h;
                let down = batch_gradient(&model, &t, &data).unwrap();
                t[j] = theta[j];
                for k in 0..p {
                    fd_h.row_mut(k)[j] = (up[k] - down[k]) / (2.0 * h);
                }
            }
            let diff = hess.sub(&fd_h).unwrap().frobenius_norm();
            let norm = hess.frobenius_norm();
            let ok = if norm == 0.0 { fd_h.frobenius_norm() < 1e-10 } else { diff <= 1e-4 * norm };
            if !ok || !hess.is_symmetric() {
                failures.push(format!("{family:?} #{trial} Hessian rel err {:.2e}", diff / norm));
            }
        }
    }
    verdict(failures.is_empty(), if failures.is_empty() { "200 instances".into() } else { failures.join("; ") })
}

// ---------------------------------------------------------------------------
// Enumeration oracles

fn synthetic(family: Family, n: usize, p: usize, seed: u64) -> (LossModel, DataSet) {
    let labels = match family {
        Family::Classification => LabelModel::Classification,
        Family::Regression => LabelModel::Regression { noise: NoiseSpec::new(0.1, 5.0).unwrap() },
    };
    let spec = GeneratorSpec { labels, covariance: CovarianceSpec::new(p, 10.0), theta_seed: seed };
    let model = match family {
        Family::Classification => LossModel::classification(),
        Family::Regression => LossModel::robust_regression(TukeyLoss::DEFAULT_CUTOFF).unwrap(),
    };
    (model, spec.generate(n, seed + 1).unwrap())
}

fn criterion_2() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    for family in [Family::Classification, Family::Regression] {
        let (model, data) = synthetic(family, 64, 8, 5);
        let n = data.len();
        let theta = normal_vec(&mut rng, 8, 0.3);
        let snapshot = normal_vec(&mut rng, 8, 0.3);
        let snap_grad = batch_gradient(&model, &snapshot, &data).unwrap();
        let mut mean = vec![0.0; 8];
        for i in 0..n {
            let v = svrg_vr_gradient(i, &theta, &snapshot, &snap_grad, &model, &data).unwrap();
            mean.iter_mut().zip(&v).for_each(|(m, vi)| *m += vi / n as f64);
        }
        worst = worst.max(max_abs_diff(&mean, &batch_gradient(&model, &theta, &data).unwrap()));

        let cfg = SagaConfig::new(1, 1, 0.05, 0);
        let mut state = SagaState::new(&model, &data, vec![0.0; 8], false).unwrap();
        let mut srng = rng::stream(9, 0);
        for _ in 0..200 {
            saga_step(&mut state, &cfg, &model, &data, &mut srng).unwrap();
        }
        let mut mean = vec![0.0; 8];
        for i in 0..n {
            let v = state.direction(&model, &data, &[i]);
            mean.iter_mut().zip(&v).for_each(|(m, vi)| *m += vi / n as f64);
        }
        worst = worst.max(max_abs_diff(&mean, &batch_gradient(&model, state.theta(), &data).unwrap()));
    }
    verdict(worst <= 1e-12, format!("max abs deviation {worst:.2e}"))
}

fn criterion_3() -> Verdict {
    let (model, data) = synthetic(Family::Classification, 200, 10, 3);
    let b = 35;
    let cfg = SagaConfig::new(1, b, 0.1, 0);
    let mut state = SagaState::new(&model, &data, vec![0.0; 10], true).unwrap();
    let mut srng = rng::stream(17, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        saga_step(&mut state, &cfg, &model, &data, &mut srng).unwrap();
        let table = state.table_mean_gradient(&model, &data).unwrap();
        worst = worst.max(max_abs_diff(&table, state.mean_gradient()));
    }
    verdict(worst <= 1e-10, format!("max abs deviation over 500 steps {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// Scaled replicas of the synthetic benchmarks

const N: usize = 2000;
const P: usize = 50;
/// λmax of every benchmark covariance; λmin = LAMBDA_MAX / cond.
const LAMBDA_MAX: f64 = 40.0;

fn replica(family: Family, cond: f64, passes: f64, seed: u64) -> ExperimentConfig {
    let (labels, radius) = match family {
        Family::Classification => (LabelModel::Classification, None),
        Family::Regression => (LabelModel::Regression { noise: NoiseSpec::new(0.1, 5.0).unwrap() }, Some(10.0)),
    };
    let covariance = CovarianceSpec { p: P, cond_ratio: cond, scale: LAMBDA_MAX / cond, rotate: false, seed: 0 };
    ExperimentConfig {
        name: format!("{family:?} cond={cond}"),
        family,
        tukey_cutoff: TukeyLoss::DEFAULT_CUTOFF,
        data: DataConfig::Synthetic { spec: GeneratorSpec { labels, covariance, theta_seed: seed }, n: N, seed: None },
        corruption: None,
        radius,
        algorithms: Algorithm::ALL.iter().map(|&a| a.into()).collect(),
        passes,
        grid_search: true,
        step_grid: paper_step_grid(),
        grid_passes: None,
        reference_passes: 1000.0,
        // Single-sample SAGA: with b = ⌈n^{2/3}⌉ the best step lies above the grid.
        schedule: ScheduleSettings { saga_batch: Some(1), ..Default::default() },
        output_dir: Default::default(),
        seed,
        record_wall_time: false,
    }
}

fn gap(o: &ExperimentOutcome, a: Algorithm) -> f64 {
    o.run(a).and_then(|r| r.final_gap).unwrap_or(f64::NAN)
}

fn gaps_line(o: &ExperimentOutcome) -> String {
    Algorithm::ALL
        .iter()
        .map(|&a| format!("{a}={:.1e} (η={:.3e})", gap(o, a), o.run(a).and_then(|r| r.step).unwrap_or(f64::NAN)))
        .collect::<Vec<_>>()
        .join(", ")
}

struct Replica {
    cfg: ExperimentConfig,
    outcome: ExperimentOutcome,
    elapsed: Duration,
}

fn run_replica(cfg: ExperimentConfig) -> Replica {
    let t = Instant::now();
    let outcome = execute_experiment(&cfg).expect("experiment runs");
    Replica { cfg, outcome, elapsed: t.elapsed() }
}

fn criterion_4(r: &Replica) -> Verdict {
    let o = &r.outcome;
    let (gd, sgd, svrg, saga) =
        (gap(o, Algorithm::Gd), gap(o, Algorithm::Sgd), gap(o, Algorithm::Svrg), gap(o, Algorithm::Saga));
    let ok = svrg <= 1e-8 && saga <= 1e-8 && gd > svrg && sgd >= 1e-3 && within(r.elapsed, 60.0);
    verdict(ok, format!("{} in {:.1?}", gaps_line(o), r.elapsed))
}

fn criterion_5(r: &Replica) -> Verdict {
    let o = &r.outcome;
    let (gd, svrg, saga) = (gap(o, Algorithm::Gd), gap(o, Algorithm::Svrg), gap(o, Algorithm::Saga));
    let ok = gd >= 1e-4 && svrg <= 1e-6 && saga <= 1e-6 && within(r.elapsed, 120.0);
    verdict(ok, format!("{} in {:.1?}", gaps_line(o), r.elapsed))
}

fn criterion_6(r: &Replica) -> Verdict {
    let o = &r.outcome;
    let (sgd, svrg, saga) = (gap(o, Algorithm::Sgd), gap(o, Algorithm::Svrg), gap(o, Algorithm::Saga));
    let ok = svrg <= 1e-7 && saga <= 1e-7 && sgd >= 1e-4 && within(r.elapsed, 120.0);
    verdict(ok, format!("{} in {:.1?}", gaps_line(o), r.elapsed))
}

/// Least-squares fit of `log10(gap)` against pass on the rows with gap in
/// `[1e-8, 1e-2]`; returns `(R², points, slope)`.
fn linear_rate_fit(o: &ExperimentOutcome) -> Option<(f64, usize, f64)> {
    let trace = o.trace(Algorithm::Svrg)?;
    let pts: Vec<(f64, f64)> = trace
        .records
        .iter()
        .filter_map(|r| r.objective_gap.filter(|g| (1e-8..=1e-2).contains(g)).map(|g| (r.pass, g.log10())))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2)).sum();
    Some((1.0 - ss_res / syy, pts.len(), slope))
}

fn criterion_7(r: &Replica) -> Verdict {
    match linear_rate_fit(&r.outcome) {
        Some((r2, k, slope)) => {
            verdict(r2 >= 0.95, format!("R² = {r2:.4} over {k} points, slope {slope:.3} decades/pass"))
        }
        None => verdict(false, "fewer than 3 SVRG trace rows with gap in [1e-8, 1e-2]"),
    }
}

// ---------------------------------------------------------------------------
// Landscape

fn criterion_8() -> Verdict {
    let t = Instant::now();
    let p = 20;
    let spec = GeneratorSpec {
        labels: LabelModel::Classification,
        covariance: CovarianceSpec::new(p, 1.0),
        theta_seed: 8,
    };
    let model = LossModel::classification();
    let oracle = PopulationOracle::new(spec, 200_000, 0xC0FFEE).unwrap();
    let grid = ProbeGrid { radii: vec![0.5, 1.0, 2.0], directions: 10, seed: 81 };
    let sizes = [500usize, 2000, 8000];
    let mut means = Vec::new();
    for &n in &sizes {
        let mut total = 0.0;
        for s in 0..5u64 {
            let data = spec.generate(n, 1000 + 10 * s + n as u64).unwrap();
            total += grad_deviation_sup(&model, &data, &oracle, &grid).unwrap();
        }
        means.push(total / 5.0);
    }
    let ratio = means[2] / means[0];
    let elapsed = t.elapsed();
    let ok = means[0] > means[1] && means[1] > means[2] && (0.15..=0.6).contains(&ratio) && within(elapsed, 180.0);
    verdict(
        ok,
        format!(
            "sup deviations {:.4e} > {:.4e} > {:.4e}, ratio {ratio:.3} in {elapsed:.1?}",
            means[0], means[1], means[2]
        ),
    )
}

fn criterion_9() -> Verdict {
    let t = Instant::now();
    let p = 5;
    let spec = GeneratorSpec {
        labels: LabelModel::Classification,
        covariance: CovarianceSpec::new(p, 1.0),
        theta_seed: 9,
    };
    let model = LossModel::classification();
    let oracle = PopulationOracle::new(spec, 1_000_000, 0xBEEF).unwrap();
    let theta_star = spec.theta_star();
    let grid = ProbeGrid { radii: vec![0.5, 1.0, 2.0, 3.0], directions: 10, seed: 91 };
    let probes = grid.points(p, Some(3.0)).unwrap();
    let mu0 = mu0_estimate(&model, &oracle, &theta_star, &probes).unwrap();
    let kappa0 = kappa0_estimate(&model, &oracle, &theta_star, 0.1, 10, 92).unwrap();
    let elapsed = t.elapsed();
    verdict(
        mu0 > 0.0 && kappa0 > 0.0 && within(elapsed, 60.0),
        format!("mu0_hat = {mu0:.4e}, kappa0_hat = {kappa0:.4e} in {elapsed:.1?}"),
    )
}

// ---------------------------------------------------------------------------
// Determinism

fn write_traces(r: &Replica, dir: &Path) {
    let mut outcome = r.outcome.clone();
    write_outcome(&mut outcome, dir).unwrap();
}

fn trace_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

fn criterion_10(replicas: &[&Replica]) -> Verdict {
    let mut compared = 0;
    for r in replicas {
        let first = tempfile::tempdir().unwrap();
        let second = tempfile::tempdir().unwrap();
        write_traces(r, first.path());
        write_traces(&run_replica(r.cfg.clone()), second.path());
        let (a, b) = (trace_files(first.path()), trace_files(second.path()));
        if a.len() != Algorithm::ALL.len() || a != b {
            return verdict(false, format!("trace CSVs differ for {}", r.cfg.name));
        }
        compared += a.len();
    }
    verdict(true, format!("{compared} trace CSVs byte-identical across reruns"))
}

fn main() {
    let mut verdicts: Vec<(usize, &str, Verdict)> = Vec::new();
    let mut record = |id: usize, title: &'static str, v: Verdict| {
        println!("criterion {id:>2} [{}] {title}: {}", if v.passed { "PASS" } else { "FAIL" }, v.detail);
        verdicts.push((id, title, v));
    };

    let t = Instant::now();
    let v = criterion_1();
    let ok = v.passed && within(t.elapsed(), 10.0);
    record(1, "derivative oracles vs finite differences", Verdict { passed: ok, detail: format!("{} in {:.1?}", v.detail, t.elapsed()) });

    let t = Instant::now();
    let v = criterion_2();
    let ok = v.passed && within(t.elapsed(), 1.0);
    record(2, "unbiasedness by enumeration", Verdict { passed: ok, detail: format!("{} in {:.1?}", v.detail, t.elapsed()) });

    let t = Instant::now();
    let v = criterion_3();
    let ok = v.passed && within(t.elapsed(), 5.0);
    record(3, "SAGA table invariant", Verdict { passed: ok, detail: format!("{} in {:.1?}", v.detail, t.elapsed()) });

    let well = run_replica(replica(Family::Classification, 10.0, 150.0, 4));
    record(4, "well-conditioned classification replica", criterion_4(&well));
    let ill = run_replica(replica(Family::Classification, 1000.0, 300.0, 5));
    record(5, "ill-conditioned classification replica", criterion_5(&ill));
    let robust = run_replica(replica(Family::Regression, 100.0, 300.0, 6));
    record(6, "robust regression replica", criterion_6(&robust));
    record(7, "SVRG linear rate", criterion_7(&well));
    record(8, "gradient deviation scaling", criterion_8());
    record(9, "landscape positivity", criterion_9());
    record(10, "determinism of trace CSVs", criterion_10(&[&well, &ill, &robust]));

    let failed: Vec<usize> = verdicts.iter().filter(|v| !v.2.passed).map(|v| v.0).collect();
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", verdicts.len());
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
