//! Independent numerical oracles shared by the integration tests.
#![allow(dead_code)]

use pgq_core::admtv::{shrink_gradients, x_fourier_update, GradientField};
use pgq_core::noise::{corrupt, quant_moments};
use pgq_core::solver::tau_update;
use pgq_core::{ImageGrid, Kernel, NoiseParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_grid(w: usize, h: usize, rng: &mut impl Rng) -> ImageGrid {
    ImageGrid::from_fn(w, h, |_, _| rng.random::<f64>())
}

/// Golden-section search on `[lo, hi]`.
pub fn golden(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

/// Cost of the per-pixel tau subproblem, written out from the likelihood.
pub fn tau_cost(t: f64, x_k: f64, lambda: f64, y: f64, p: &NoiseParams, beta: f64) -> f64 {
    let m = quant_moments(y, p.q, p.g);
    let s = p.alpha * (p.sigma * p.sigma + m.sigma_q2);
    let like = p.alpha * (t + s) - p.alpha * (m.m_q + s) * (t + s).ln();
    0.5 * beta * (t - x_k) * (t - x_k) - lambda * (t - x_k) + like
}

/// Worst disagreement between `tau_update` and golden-section minimization of
/// [`tau_cost`] over `draws` random problems, relative to `max(1, |tau|)`.
pub fn tau_oracle_sweep(draws: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let mut worst = 0.0f64;
    for _ in 0..draws {
        let alpha = 2f64.powf(r.random_range(1.0..11.0));
        let sigma = r.random_range(1e-3..0.2);
        let (q, g) = match r.random_range(0..3) {
            0 => (0.0, 1.0),
            1 => (r.random_range(1e-3..0.05), 1.0),
            _ => (1.0 / 256.0, r.random_range(1.0..2.6)),
        };
        let p = NoiseParams::new(alpha, sigma, q, g).unwrap();
        let y: f64 = r.random_range(0.0..1.2);
        let beta = r.random_range(0.5..32.0) * alpha / 0.5;
        let x_k = r.random_range(-0.2..1.2);
        let lambda = r.random_range(-0.5..0.5) * beta;
        if x_k + lambda / beta <= 0.0 {
            continue;
        }
        let t = tau_update(x_k, lambda, y, &p, beta);
        let m = quant_moments(y, q, g);
        let s = alpha * (sigma * sigma + m.sigma_q2);
        let lo = -s + 1e-12;
        let hi = (x_k + lambda / beta).max(m.m_q) + 2.0;
        let oracle = golden(|v| tau_cost(v, x_k, lambda, y, &p, beta), lo, hi, 1e-13);
        let err = (t - oracle).abs() / t.abs().max(1.0);
        worst = worst.max(err);
    }
    worst
}

/// Per-pixel shrinkage cost.
pub fn shrink_cost(dh: f64, dv: f64, ah: f64, av: f64, kappa: f64, bn: f64) -> f64 {
    kappa * (dh * dh + dv * dv).sqrt() + 0.5 * bn * ((dh - ah).powi(2) + (dv - av).powi(2))
}

/// Worst component disagreement between `shrink_gradients` and nested
/// golden-section minimization of [`shrink_cost`] over `n` random pixels.
pub fn shrink_oracle_sweep(n: usize, seed: u64) -> f64 {
    let mut r = rng(seed);
    let w = 100;
    let h = n.div_ceil(w);
    let field = || ImageGrid::from_fn(w, h, |_, _| 0.0);
    let (mut xh, mut xv, mut lh, mut lv) = (field(), field(), field(), field());
    let kappa = r.random_range(1.0..16.0);
    let bn = r.random_range(50.0..400.0);
    for i in 0..w * h {
        let (c, rr) = (i % w, i / w);
        xh.set(c, rr, r.random_range(-0.15..0.15));
        xv.set(c, rr, r.random_range(-0.15..0.15));
        lh.set(c, rr, r.random_range(-5.0..5.0));
        lv.set(c, rr, r.random_range(-5.0..5.0));
    }
    let (dh, dv) = shrink_gradients(&xh, &xv, &lh, &lv, kappa, bn);
    let mut worst = 0.0f64;
    for i in 0..n {
        let (c, rr) = (i % w, i / w);
        let ah = xh.get(c, rr) + lh.get(c, rr) / bn;
        let av = xv.get(c, rr) + lv.get(c, rr) / bn;
        let span = ah.abs().max(av.abs()) + 0.1;
        let inner = |u: f64| {
            let v = golden(|v| shrink_cost(u, v, ah, av, kappa, bn), -span, span, 1e-11);
            (v, shrink_cost(u, v, ah, av, kappa, bn))
        };
        let u = golden(|u| inner(u).1, -span, span, 1e-11);
        let v = inner(u).0;
        worst = worst
            .max((dh.get(c, rr) - u).abs())
            .max((dv.get(c, rr) - v).abs());
    }
    worst
}

/// Circulant matrix of `x -> x * k` on a `w x h` periodic grid with the
/// kernel origin at its center tap.
pub fn conv_matrix(k: &Kernel, w: usize, h: usize) -> Vec<Vec<f64>> {
    let n = w * h;
    let mut a = vec![vec![0.0; n]; n];
    let (cx, cy) = k.center();
    for r in 0..h {
        for c in 0..w {
            for j in 0..k.height() {
                for i in 0..k.width() {
                    // out(c, r) += k(i, j) * x(c - (i - cx), r - (j - cy))
                    let sc = (c + w * k.width() + cx - i) % w;
                    let sr = (r + h * k.height() + cy - j) % h;
                    a[r * w + c][sr * w + sc] += k.tap(i, j);
                }
            }
        }
    }
    a
}

/// Periodic forward difference matrices (horizontal, vertical).
pub fn diff_matrices(w: usize, h: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = w * h;
    let mut gh = vec![vec![0.0; n]; n];
    let mut gv = vec![vec![0.0; n]; n];
    for r in 0..h {
        for c in 0..w {
            let i = r * w + c;
            gh[i][i] -= 1.0;
            gh[i][r * w + (c + 1) % w] += 1.0;
            gv[i][i] -= 1.0;
            gv[i][((r + 1) % h) * w + c] += 1.0;
        }
    }
    (gh, gv)
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(x).map(|(p, q)| p * q).sum())
        .collect()
}

pub fn mat_t_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    let n = a[0].len();
    let mut out = vec![0.0; n];
    for (row, xi) in a.iter().zip(x) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v * xi;
        }
    }
    out
}

/// `A^T A`.
pub fn gram(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a[0].len();
    let mut g = vec![vec![0.0; n]; n];
    for row in a {
        for i in 0..n {
            if row[i] == 0.0 {
                continue;
            }
            for j in 0..n {
                g[i][j] += row[i] * row[j];
            }
        }
    }
    g
}

/// Gaussian elimination with partial pivoting.
pub fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            let (upper, lower) = a.split_at_mut(row);
            for (v, &p) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *v -= f * p;
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Worst disagreement between `x_fourier_update` and the dense normal
/// equations on one random `w x h` instance.
pub fn fourier_oracle_error(k: &Kernel, w: usize, h: usize, beta: f64, bn: f64, seed: u64) -> f64 {
    let mut r = rng(seed);
    let d = GradientField {
        d_h: ImageGrid::from_fn(w, h, |_, _| r.random_range(-0.2..0.2)),
        d_v: ImageGrid::from_fn(w, h, |_, _| r.random_range(-0.2..0.2)),
        lam_h: ImageGrid::from_fn(w, h, |_, _| r.random_range(-5.0..5.0)),
        lam_v: ImageGrid::from_fn(w, h, |_, _| r.random_range(-5.0..5.0)),
    };
    let tau = random_grid(w, h, &mut r);
    let lambda = ImageGrid::from_fn(w, h, |_, _| r.random_range(-10.0..10.0));
    let x = x_fourier_update(&d, &tau, &lambda, k, beta, bn).unwrap();

    let kk = conv_matrix(k, w, h);
    let (gh, gv) = diff_matrices(w, h);
    let n = w * h;
    let dt_h: Vec<f64> = (0..n)
        .map(|i| d.d_h.data()[i] - d.lam_h.data()[i] / bn)
        .collect();
    let dt_v: Vec<f64> = (0..n)
        .map(|i| d.d_v.data()[i] - d.lam_v.data()[i] / bn)
        .collect();
    let tt: Vec<f64> = (0..n)
        .map(|i| tau.data()[i] - lambda.data()[i] / beta)
        .collect();
    let (g1, g2, g3) = (gram(&gh), gram(&gv), gram(&kk));
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| bn * (g1[i][j] + g2[i][j]) + beta * g3[i][j])
                .collect()
        })
        .collect();
    let (b1, b2, b3) = (
        mat_t_vec(&gh, &dt_h),
        mat_t_vec(&gv, &dt_v),
        mat_t_vec(&kk, &tt),
    );
    let b: Vec<f64> = (0..n)
        .map(|i| bn * (b1[i] + b2[i]) + beta * b3[i])
        .collect();
    let oracle = solve_dense(a, b);
    x.data()
        .iter()
        .zip(&oracle)
        .map(|(p, q)| (p - q).abs())
        .fold(0.0, f64::max)
}

/// Monte-Carlo moments of `u^g`, `u` uniform on `[lo, hi]`: returns
/// `(mean, var, se_mean, se_var)`.
pub fn mc_gamma_moments(lo: f64, hi: f64, g: f64, n: usize, seed: u64) -> (f64, f64, f64, f64) {
    let mut r = rng(seed);
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    // Moments about a pilot value keep the sums well conditioned.
    let pilot = (0.5 * (lo + hi)).powf(g);
    for _ in 0..n {
        let v = r.random_range(lo..hi).powf(g) - pilot;
        s1 += v;
        s2 += v * v;
        s3 += v * v * v;
        s4 += v * v * v * v;
    }
    let nf = n as f64;
    let (m1, m2, m3, m4) = (s1 / nf, s2 / nf, s3 / nf, s4 / nf);
    let var = m2 - m1 * m1;
    let mu4 = m4 - 4.0 * m3 * m1 + 6.0 * m2 * m1 * m1 - 3.0 * m1.powi(4);
    (
        m1 + pilot,
        var,
        (var / nf).sqrt(),
        ((mu4 - var * var) / nf).sqrt(),
    )
}

/// Largest z-score of `quant_moments` against Monte Carlo over a few test
/// intensities at `q = 1/256`, `g = 2.2`, including the clamped lowest bin.
pub fn quant_moments_max_z(samples: usize, seed: u64) -> f64 {
    let (q, g) = (1.0 / 256.0, 2.2);
    let mut worst = 0.0f64;
    for (i, &y) in [0.25, 0.5, 0.9, 0.01, 1e-6].iter().enumerate() {
        let u = f64::powf(y, 1.0 / g);
        let (lo, hi) = ((u - q / 2.0).max(0.0), u + q / 2.0);
        let (mean, var, se_m, se_v) = mc_gamma_moments(lo, hi, g, samples, seed + i as u64);
        let m = quant_moments(y, q, g);
        worst = worst
            .max((m.m_q - mean).abs() / se_m)
            .max((m.sigma_q2 - var).abs() / se_v);
    }
    worst
}

/// Largest z-score of per-level sample mean and variance of `corrupt` output
/// against `x_k` and `x_k / alpha + sigma^2`.
pub fn corrupt_moments_max_z(alpha: f64, sigma: f64, levels: &[f64], per_level: usize) -> f64 {
    let w = 256;
    let h_per = per_level.div_ceil(w);
    let x = ImageGrid::from_fn(w, h_per * levels.len(), |_, r| levels[r / h_per]);
    let p = NoiseParams::poisson_gaussian(alpha, sigma).unwrap();
    let y = corrupt(&x, &Kernel::identity(), &p, 7).unwrap();
    let mut worst = 0.0f64;
    for (li, &lv) in levels.iter().enumerate() {
        let vals: Vec<f64> = (li * h_per..(li + 1) * h_per)
            .flat_map(|r| y.row(r).to_vec())
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let m4 = vals.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
        let want_var = lv / alpha + sigma * sigma;
        let z_mean = (mean - lv).abs() / (want_var / n).sqrt();
        let z_var = (var - want_var).abs() / ((m4 - var * var) / n).sqrt();
        worst = worst.max(z_mean).max(z_var);
    }
    worst
}

/// Smooth test scene with a few edges, values in `[0.1, 0.9]`.
pub fn scene(w: usize, h: usize) -> ImageGrid {
    ImageGrid::from_fn(w, h, |c, r| {
        let (x, y) = (c as f64 / w as f64, r as f64 / h as f64);
        let mut v = 0.3 + 0.2 * (6.0 * x).sin() * (4.0 * y).cos();
        if (x - 0.6).powi(2) + (y - 0.4).powi(2) < 0.05 {
            v += 0.35;
        }
        if x < 0.25 && y > 0.6 {
            v -= 0.15;
        }
        v.clamp(0.1, 0.9)
    })
}

/// Counts iterations among the first `warmup` whose `x` or `x_k` differ in any
/// bit between the fused solver and the AWGN solver fed `m_q(y)` at the same
/// penalty.
pub fn warm_start_mismatches(
    y: &ImageGrid,
    k: &Kernel,
    params: &NoiseParams,
    p: &pgq_core::AdmTvParams,
    cfg: &pgq_core::SolverConfig,
) -> usize {
    use pgq_core::admtv::AdmTvSolver;
    let mut joint = AdmTvSolver::joint(y, k, params, p, cfg).unwrap();
    let mq = y.map(|v| quant_moments(v, params.q, params.g).m_q);
    let mut awgn = AdmTvSolver::awgn(&mq, k, joint.beta(), p).unwrap();
    let mut bad = 0;
    for _ in 0..cfg.warmup_iters {
        joint.step().unwrap();
        awgn.step().unwrap();
        let same = |a: &ImageGrid, b: &ImageGrid| {
            a.data()
                .iter()
                .zip(b.data())
                .all(|(u, v)| u.to_bits() == v.to_bits())
        };
        if !same(joint.x(), awgn.x()) || !same(joint.x_k(), awgn.x_k()) {
            bad += 1;
        }
    }
    bad
}
