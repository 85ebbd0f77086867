#![allow(dead_code)]

use ncvx_core::datagen::{CovarianceSpec, GeneratorSpec, LabelModel, NoiseSpec};
use ncvx_core::linalg::dot;
use ncvx_core::losses::TukeyLoss;
use ncvx_core::{DataSet, Family, LossModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub const T0: f64 = TukeyLoss::DEFAULT_CUTOFF;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, p: usize, sd: f64) -> Vec<f64> {
    (0..p).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

pub fn model(family: Family) -> LossModel {
    match family {
        Family::Classification => LossModel::classification(),
        Family::Regression => LossModel::robust_regression(T0).unwrap(),
    }
}

/// Residual draw that stays clear of the band around `±t0` where central
/// differences cannot resolve the quadratically vanishing score.
pub fn residual(rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let r = 4.0 * rng.sample::<f64, _>(StandardNormal);
        if (r.abs() - T0).abs() > 0.05 {
            return r;
        }
    }
}

/// Random problem of dimension `p` and size `n` around a random `θ`.
pub fn instance(rng: &mut ChaCha8Rng, family: Family, n: usize, p: usize) -> (LossModel, DataSet, Vec<f64>) {
    let theta = normal_vec(rng, p, 0.5);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| normal_vec(rng, p, 1.0)).collect();
    let targets = match family {
        Family::Classification => (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect(),
        Family::Regression => rows.iter().map(|x| dot(&theta, x) + residual(rng)).collect(),
    };
    (model(family), DataSet::from_rows(&rows, targets).unwrap(), theta)
}

pub fn central_gradient(f: impl Fn(&[f64]) -> f64, theta: &[f64], h: f64) -> Vec<f64> {
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

/// Every component within `rel` of the analytic value, relative to the
/// larger of that component and the largest component.
pub fn assert_grad_close(analytic: &[f64], fd: &[f64], rel: f64) {
    let scale = analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        assert!(fd.iter().all(|v| v.abs() < 1e-10), "zero gradient but FD {fd:?}");
        return;
    }
    for (j, (a, b)) in analytic.iter().zip(fd).enumerate() {
        assert!((a - b).abs() <= rel * a.abs().max(scale), "component {j}: analytic {a} vs FD {b}");
    }
}

pub fn classification_spec(p: usize, cond: f64, theta_seed: u64) -> GeneratorSpec {
    GeneratorSpec { labels: LabelModel::Classification, covariance: CovarianceSpec::new(p, cond), theta_seed }
}

pub fn regression_spec(p: usize, cond: f64, delta: f64, sigma: f64, theta_seed: u64) -> GeneratorSpec {
    GeneratorSpec {
        labels: LabelModel::Regression { noise: NoiseSpec::new(delta, sigma).unwrap() },
        covariance: CovarianceSpec::new(p, cond),
        theta_seed,
    }
}

pub fn synthetic(family: Family, n: usize, p: usize, seed: u64) -> (LossModel, DataSet) {
    let spec = match family {
        Family::Classification => classification_spec(p, 10.0, seed),
        Family::Regression => regression_spec(p, 10.0, 0.1, 5.0, seed),
    };
    (model(family), spec.generate(n, seed ^ 0x5eed).unwrap())
}

pub fn mean_of(vectors: impl IntoIterator<Item = Vec<f64>>, p: usize) -> Vec<f64> {
    let mut sum = vec![0.0; p];
    let mut k = 0usize;
    for v in vectors {
        sum.iter_mut().zip(&v).for_each(|(s, x)| *s += x);
        k += 1;
    }
    sum.iter_mut().for_each(|s| *s /= k as f64);
    sum
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn jacobi_eigenvalues(m: &ncvx_core::linalg::Matrix) -> Vec<f64> {
    let p = m.rows();
    let mut a: Vec<Vec<f64>> = (0..p).map(|i| m.row(i).to_vec()).collect();
    for _ in 0..100 {
        let off: f64 = (0..p).flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for k in 0..p {
            for l in k + 1..p {
                if a[k][l] == 0.0 {
                    continue;
                }
                let theta = (a[l][l] - a[k][k]) / (2.0 * a[k][l]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for r in 0..p {
                    let (ark, arl) = (a[r][k], a[r][l]);
                    a[r][k] = c * ark - s * arl;
                    a[r][l] = s * ark + c * arl;
                }
                for r in 0..p {
                    let (akr, alr) = (a[k][r], a[l][r]);
                    a[k][r] = c * akr - s * alr;
                    a[l][r] = s * akr + c * alr;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..p).map(|i| a[i][i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn sample_variance(v: &[f64]) -> f64 {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
}
