use proptest::prelude::*;

use thp_core::bounds::{awgn_capacity, bound_new, bound_original, db_to_linear, NoiseModel};
use thp_core::linalg::Matrix;
use thp_core::modulo::{mod_t, Modulus};
use thp_core::numerics::{erf, integrate};
use thp_core::precoder::{receiver_decode, synthesize_zf, thp_encode, ChannelMatrix};
use thp_core::rates::exact_modt_rate;

fn modulus() -> impl Strategy<Value = Modulus<f64>> {
    (1e-3f64..1e3).prop_map(|t| Modulus::new(t).unwrap())
}

proptest! {
    #[test]
    fn mod_t_lands_in_cell_and_is_idempotent(m in modulus(), y in -1e6f64..1e6) {
        let z = mod_t(y, &m);
        prop_assert!(m.contains(z), "{z} outside cell of {}", m.t());
        prop_assert_eq!(mod_t(z, &m), z);
    }

    #[test]
    fn mod_t_is_periodic(m in modulus(), y in -1e3f64..1e3, k in -50i32..50) {
        let a = mod_t(y, &m);
        let b = mod_t(y + f64::from(k) * m.t(), &m);
        // equal up to rounding, or on opposite edges of the cell
        let d = (a - b).abs();
        prop_assert!(d <= 1e-9 * (1.0 + y.abs() + m.t() * f64::from(k.abs())) || (d - m.t()).abs() <= 1e-9 * m.t().max(1.0));
    }

    #[test]
    fn erf_is_odd_bounded_and_increasing(x in -6f64..6.0, dx in 1e-6f64..1.0) {
        prop_assert!((erf(x) + erf(-x)).abs() <= 1e-15);
        prop_assert!(erf(x).abs() <= 1.0);
        prop_assert!(erf(x + dx) >= erf(x));
    }

    #[test]
    fn integrate_is_linear(a in -3f64..3.0, b in -3f64..3.0, c in -0.9f64..3.0) {
        let f = |x: f64| (x * x).cos();
        let g = |x: f64| (-x * x).exp();
        let lhs = integrate(|x| a * f(x) + b * g(x), -1.0, c, 1e-12).unwrap().value;
        let rhs = a * integrate(f, -1.0, c, 1e-12).unwrap().value + b * integrate(g, -1.0, c, 1e-12).unwrap().value;
        prop_assert!((lhs - rhs).abs() <= 1e-9);
    }

    #[test]
    fn bounds_increase_with_snr_and_stay_ordered(db in -30f64..60.0, step in 0.01f64..5.0) {
        let (s0, s1) = (db_to_linear(db), db_to_linear(db + step));
        prop_assert!(bound_new(s1) > bound_new(s0));
        prop_assert!(bound_original(s1) > bound_original(s0));
        prop_assert!(awgn_capacity(s0) >= bound_new(s0));
        prop_assert!(bound_new(s0) >= bound_original(s0));
    }

    #[test]
    fn lq_reconstructs_random_channels(entries in prop::collection::vec(-3f64..3.0, 12), m in 1usize..=3) {
        // m x 4 channel taken from the first 4m entries
        let h = Matrix::from_fn(m, 4, |i, j| entries[4 * i + j]);
        let Ok(ch) = ChannelMatrix::new(h.clone()) else { return Ok(()) };
        let Ok(p) = synthesize_zf(&ch) else { return Ok(()) };
        let scale = 1.0 + h.frobenius();
        prop_assert!(p.l.matmul(&p.q).sub(&h).frobenius() <= 1e-12 * scale);
        prop_assert!(p.l.is_lower_triangular());
        prop_assert!(p.l.diagonal().iter().all(|&d| d > 0.0));
        prop_assert!(p.q.matmul(&p.q.transpose()).sub(&Matrix::identity(m)).frobenius() <= 1e-12);
    }

    #[test]
    fn encoder_output_stays_in_cell_and_decodes(entries in prop::collection::vec(-2f64..2.0, 16), w in prop::collection::vec(-0.5f64..0.5, 4)) {
        let m = Modulus::new(1.0).unwrap();
        let ch = ChannelMatrix::new(Matrix::from_fn(4, 4, |i, j| entries[4 * i + j])).unwrap();
        let Ok(p) = synthesize_zf(&ch) else { return Ok(()) };
        // skip near-singular draws where the feedback taps blow up rounding
        let cond = p.l.diagonal().iter().fold(f64::INFINITY, |a, &d| a.min(d));
        prop_assume!(cond > 1e-3);
        let (x, v) = thp_encode(&w, &p, &m);
        prop_assert!(v.iter().all(|&vi| m.contains(vi)));
        // F is orthogonal, so the transmit energy equals that of the cell-bounded symbols
        let ex: f64 = x.iter().map(|a| a * a).sum();
        let ev: f64 = v.iter().map(|a| a * a).sum();
        prop_assert!((ex - ev).abs() <= 1e-9 * (1.0 + ev));
        let z = receiver_decode(&ch.matrix().matvec(&x), &p, 1.0, &m);
        for (zi, wi) in z.iter().zip(&w) {
            prop_assert!(m.sub(*zi, *wi).abs() <= 1e-6 / cond);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn exact_rate_sits_between_bound_and_capacity(db in -10f64..40.0) {
        let m = Modulus::from_power(1.0).unwrap();
        let nm = NoiseModel::from_snr(db_to_linear(db), &m).unwrap();
        let exact = exact_modt_rate(nm.alpha(), nm.sigma(), &m).unwrap().bits;
        prop_assert!(exact >= bound_new(nm.snr_prime()) - 1e-6);
        // the channel's noise has scale alpha * sigma, so its Gaussian-input capacity is taken at
        // P / (alpha sigma)^2 = 1 + SNR', not at SNR'
        let snr_eff = m.p_t() / nm.effective_scale().powi(2);
        prop_assert!(exact <= awgn_capacity(snr_eff) + 1e-9);
    }
}
