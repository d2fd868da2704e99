#![allow(dead_code)]

use composite_bo::gp::{KernelFamily, KernelSpec};

// Kernel written out from the closed forms, independent of the library.
pub fn oracle_kernel(family: KernelFamily, ls: &[f64], s2: f64, a: &[f64], b: &[f64]) -> f64 {
    let r = a
        .iter()
        .zip(b)
        .zip(ls)
        .map(|((a, b), l)| ((a - b) / l).powi(2))
        .sum::<f64>()
        .sqrt();
    let c = match family {
        KernelFamily::Matern12 => (-r).exp(),
        KernelFamily::Matern32 => (1.0 + 3f64.sqrt() * r) * (-(3f64.sqrt()) * r).exp(),
        KernelFamily::Matern52 => {
            (1.0 + 5f64.sqrt() * r + 5.0 * r * r / 3.0) * (-(5f64.sqrt()) * r).exp()
        }
        KernelFamily::SquaredExponential => (-r * r / 2.0).exp(),
    };
    s2 * c
}

// Gauss-Jordan inverse with partial pivoting.
pub fn invert(mut a: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (i == j) as u8 as f64).collect()).collect();
    for col in 0..n {
        let p = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        inv.swap(col, p);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                for j in 0..n {
                    a[i][j] -= f * a[col][j];
                    inv[i][j] -= f * inv[col][j];
                }
            }
        }
    }
    inv
}

// Posterior mean and latent variance from the explicit inverse of
// K + (noise + jitter) I.
pub fn dense_oracle(spec: &KernelSpec, diag: f64, xs: &[Vec<f64>], ys: &[f64], q: &[f64]) -> (f64, f64) {
    let k = |a: &[f64], b: &[f64]| oracle_kernel(spec.family, &spec.lengthscales, spec.signal_variance, a, b);
    let n = xs.len();
    let gram: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| k(&xs[i], &xs[j]) + if i == j { diag } else { 0.0 }).collect())
        .collect();
    let kinv = invert(gram);
    let ks: Vec<f64> = xs.iter().map(|x| k(q, x)).collect();
    let w: Vec<f64> = (0..n).map(|i| (0..n).map(|j| kinv[i][j] * ks[j]).sum()).collect();
    let mean = w.iter().zip(ys).map(|(w, y)| w * y).sum();
    let var = k(q, q) - w.iter().zip(&ks).map(|(w, k)| w * k).sum::<f64>();
    (mean, var)
}
