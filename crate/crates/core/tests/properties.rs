use pgq_core::io::{read_pfm, read_pgm, write_pfm, write_pgm};
use pgq_core::noise::{lp_loss, quant_moments, quantize};
use pgq_core::solver::{lambda_update, relative_change, step_size_map, stopping_check, tau_update};
use pgq_core::{
    convolve, crop, extend_blend, psnr, Boundary, Fill, ImageGrid, Kernel, NoiseParams,
    SolverConfig, GAMMA_MAX,
};
use proptest::prelude::*;

fn grid(max_w: usize, max_h: usize) -> impl Strategy<Value = ImageGrid> {
    (1..=max_w, 1..=max_h).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0f64..1.0, w * h)
            .prop_map(move |data| ImageGrid::new(w, h, data).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn poisson_loss_is_midpoint_convex(a in 1e-3f64..5.0, b in 1e-3f64..5.0, y in 0.0f64..3.0, alpha in 0.1f64..1e3) {
        let mid = lp_loss(0.5 * (a + b), y, alpha).unwrap();
        let avg = 0.5 * (lp_loss(a, y, alpha).unwrap() + lp_loss(b, y, alpha).unwrap());
        prop_assert!(mid <= avg + 1e-12 * avg.abs().max(1.0));
    }

    #[test]
    fn quantize_is_idempotent(y in 0.0f64..1.2, q in 1e-3f64..0.2, g in 1.0f64..3.0) {
        let once = quantize(y, q, g);
        let twice = quantize(once, q, g);
        prop_assert!((once - twice).abs() <= 1e-12 * once.max(1.0));
        prop_assert!(once >= 0.0);
    }

    #[test]
    fn quant_variance_is_nonnegative(y in 0.0f64..1.5, q in 0.0f64..0.1, g in 1.0f64..3.0) {
        let m = quant_moments(y, q, g);
        prop_assert!(m.sigma_q2 >= 0.0);
        prop_assert!(m.m_q >= 0.0);
    }

    #[test]
    fn tau_stays_in_log_domain(
        x_k in -2.0f64..2.0,
        lam in -1e4f64..1e4,
        y in 0.0f64..1.2,
        alpha in 1.0f64..2048.0,
        sigma in 0.0f64..0.2,
        quant in any::<bool>(),
        beta in 1e-2f64..1e5,
    ) {
        let p = if quant {
            NoiseParams::new(alpha, sigma, 1.0 / 256.0, 2.2).unwrap()
        } else {
            NoiseParams::poisson_gaussian(alpha, sigma).unwrap()
        };
        let t = tau_update(x_k, lam, y, &p, beta);
        let m = quant_moments(y, p.q, p.g);
        let shift = alpha * (sigma * sigma + m.sigma_q2);
        prop_assert!(t.is_finite());
        prop_assert!(t + shift >= 1e-9 * (1.0 - 1e-6));
    }

    #[test]
    fn lambda_is_fixed_when_constraint_holds(lam in -10.0f64..10.0, g in 0.0f64..GAMMA_MAX, beta in 0.0f64..1e4, t in -1.0f64..1.0) {
        prop_assert_eq!(lambda_update(lam, g, beta, t, t), lam);
    }

    #[test]
    fn stopping_rule_scale(x in grid(8, 8), c in 0.5f64..1.5) {
        prop_assume!(x.norm_sq() > 0.0);
        let scaled = x.map(|v| c * v);
        let r = relative_change(&scaled, &x).unwrap();
        prop_assert!((r - (c - 1.0).powi(2)).abs() <= 1e-12);
        prop_assert!(stopping_check(&x, &x, 1e-300));
    }

    #[test]
    fn blend_crop_round_trip(x in grid(12, 12), mx in 0usize..8, my in 0usize..8) {
        for fill in [Fill::Zeros, Fill::LinearBlend] {
            let ext = extend_blend(&x, mx, my, fill);
            prop_assert_eq!(ext.dims(), (x.width() + 2 * mx, x.height() + 2 * my));
            prop_assert_eq!(crop(&ext, mx, my).unwrap(), x.clone());
        }
    }

    #[test]
    fn blend_of_constant_is_constant(w in 1usize..10, h in 1usize..10, c in 0.0f64..1.0, m in 0usize..6) {
        let ext = extend_blend(&ImageGrid::filled(w, h, c), m, m, Fill::LinearBlend);
        prop_assert!(ext.data().iter().all(|&v| (v - c).abs() < 1e-15));
    }

    #[test]
    fn convolution_preserves_constants(w in 8usize..20, h in 8usize..20, c in 0.0f64..1.0, r in 0.5f64..3.5) {
        let k = Kernel::pillbox(r).unwrap();
        prop_assume!(k.width() <= w.min(h));
        for b in [Boundary::Periodic, Boundary::Extended] {
            let out = convolve(&ImageGrid::filled(w, h, c), &k, b).unwrap();
            prop_assert!(out.data().iter().all(|&v| (v - c).abs() < 1e-12));
        }
    }

    #[test]
    fn identity_kernel_is_identity(x in grid(10, 10)) {
        let out = convolve(&x, &Kernel::identity(), Boundary::Periodic).unwrap();
        for (a, b) in out.data().iter().zip(x.data()) {
            prop_assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn step_sizes_are_bounded(y in grid(10, 10)) {
        let cfg = SolverConfig::deconvolution();
        let g = step_size_map(&y, &cfg);
        for &v in g.data() {
            prop_assert!((0.5 * GAMMA_MAX - 1e-15..=GAMMA_MAX + 1e-15).contains(&v));
        }
    }

    #[test]
    fn psnr_is_symmetric(a in grid(6, 6)) {
        let b = a.map(|v| (v * 0.9 + 0.03).min(1.0));
        prop_assert_eq!(psnr(&a, &b, 1.0).unwrap(), psnr(&b, &a, 1.0).unwrap());
    }

    #[test]
    fn pfm_round_trip_is_exact(x in grid(9, 7)) {
        let mut buf = Vec::new();
        write_pfm(&x, &mut buf).unwrap();
        let back = read_pfm(buf.as_slice()).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            prop_assert_eq!(*a, (*b as f32) as f64);
        }
    }

    #[test]
    fn pgm16_round_trip(x in grid(9, 7)) {
        let mut buf = Vec::new();
        write_pgm(&x, 65535, &mut buf).unwrap();
        let back = read_pgm(buf.as_slice()).unwrap();
        for (a, b) in back.data().iter().zip(x.data()) {
            prop_assert!((a - b).abs() <= 0.5 / 65535.0 + 1e-15);
        }
    }
}

#[test]
fn quant_variance_grows_with_intensity() {
    let (q, g) = (1.0 / 256.0, 2.2);
    let mut last = 0.0;
    for i in 1..=200 {
        let y = 0.02 + 0.98 * i as f64 / 200.0;
        let v = quant_moments(y, q, g).sigma_q2;
        assert!(v > last, "y={y}");
        last = v;
    }
}
