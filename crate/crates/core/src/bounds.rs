//! Closed-form rate expressions: AWGN capacity, the lattice-strategy lower bound, the
//! truncated-Gaussian lower bound, their common high-SNR asymptote and the shaping loss.
//!
//! All rates are in bits per real channel use and are returned unclamped.

use crate::error::{domain, Result};
use crate::modulo::Modulus;
use crate::numerics::erfc;
use crate::scalar::Real;

/// Noise budget of one scalar stream: AWGN, residual interference, and the quantities derived
/// from them.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel<T> {
    p_t: T,
    sigma_n2: T,
    sigma_s2: T,
    sigma2: T,
    alpha: T,
    snr: T,
    snr_prime: T,
}

impl<T: Real> NoiseModel<T> {
    /// Noise model at transmit power `p_t`; `alpha` is the MMSE factor at SNR′.
    pub fn new(p_t: T, sigma_s2: T, sigma_n2: T) -> Result<Self> {
        let snr_prime = snr_prime(p_t, sigma_s2, sigma_n2)?;
        Ok(Self {
            p_t,
            sigma_n2,
            sigma_s2,
            sigma2: sigma_s2 + sigma_n2,
            alpha: alpha_mmse(snr_prime)?,
            snr: p_t / sigma_n2,
            snr_prime,
        })
    }

    /// Interference-free model with `sigma_n2 = p_t / snr`.
    pub fn from_snr(snr: T, m: &Modulus<T>) -> Result<Self> {
        if !(snr > T::zero() && snr.is_finite()) {
            return Err(domain(format!("snr must be finite and > 0, got {snr}")));
        }
        Self::new(m.p_t(), T::zero(), m.p_t() / snr)
    }

    pub fn p_t(&self) -> T {
        self.p_t
    }

    pub fn sigma_n2(&self) -> T {
        self.sigma_n2
    }

    pub fn sigma_s2(&self) -> T {
        self.sigma_s2
    }

    /// `sigma_s2 + sigma_n2`.
    pub fn sigma2(&self) -> T {
        self.sigma2
    }

    pub fn sigma(&self) -> T {
        self.sigma2.sqrt()
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn snr(&self) -> T {
        self.snr
    }

    pub fn snr_prime(&self) -> T {
        self.snr_prime
    }

    /// Standard deviation of the scaled effective noise, `alpha * sigma`.
    /// Its square is `p_t / (1 + snr')`, never above `p_t`.
    pub fn effective_scale(&self) -> T {
        self.alpha * self.sigma()
    }
}

/// `sqrt(snr / (1 + snr))`.
pub fn alpha_mmse<T: Real>(snr: T) -> Result<T> {
    if !(snr > T::zero()) || snr.is_nan() {
        return Err(domain(format!("alpha needs snr > 0, got {snr}")));
    }
    if snr.is_infinite() {
        return Ok(T::one());
    }
    Ok((snr / (T::one() + snr)).sqrt())
}

/// `1/2 log2(1 + snr)`.
pub fn awgn_capacity<T: Real>(snr: T) -> T {
    T::lit(0.5) * snr.ln_1p() / T::LN_2()
}

/// `1/2 log2(6 (1 + snr) / (pi e))`.
pub fn bound_original<T: Real>(snr: T) -> T {
    T::lit(0.5) * (T::lit(6.0) * (T::one() + snr) / (T::PI() * T::E())).log2()
}

/// Truncated-Gaussian lower bound on the uniform-input mod-t rate at effective SNR `snr_prime`:
///
/// `1/2 log2(12(1+S)) - log2 erf(sqrt(3(1+S)/2)) - log2 sqrt(2 pi) - log2(e) / (2 erf(..))`.
///
/// Evaluated as `bound_original(S) + bound_gain(S)`, which is the same expression regrouped. The
/// regrouping keeps `bound_new >= bound_original` exact in floating point.
pub fn bound_new<T: Real>(snr_prime: T) -> T {
    bound_original(snr_prime) + bound_gain(snr_prime)
}

/// `bound_new(S) - bound_original(S) = -log2 z + log2(e) (1 - 1/z) / 2` with
/// `z = erf(sqrt(3(1+S)/2))`, computed from `erfc` without cancellation.
///
/// Positive for every finite `S >= 0`. It falls below one ulp of the bounds near 14 dB and
/// underflows to 0 near 26 dB.
pub fn bound_gain<T: Real>(snr: T) -> T {
    let eps = erfc((T::lit(1.5) * (T::one() + snr)).sqrt());
    T::LOG2_E() * (-(-eps).ln_1p() - eps / (T::lit(2.0) * (T::one() - eps)))
}

/// `1/2 log2(6 snr / (pi e))`, the high-SNR limit of both lower bounds.
pub fn asymptote<T: Real>(snr: T) -> T {
    T::lit(0.5) * (T::lit(6.0) * snr / (T::PI() * T::E())).log2()
}

/// `10 log10(pi e / 6)`, about 1.533 dB.
pub fn shaping_loss_db<T: Real>() -> T {
    T::lit(10.0) * (T::PI() * T::E() / T::lit(6.0)).log10()
}

/// `1/2 log2(pi e / 6)`, about 0.2546 bits.
pub fn shaping_loss_bits<T: Real>() -> T {
    T::lit(0.5) * (T::PI() * T::E() / T::lit(6.0)).log2()
}

/// `p_total / (sigma_s2 + sigma_n2)`.
pub fn snr_prime<T: Real>(p_total: T, sigma_s2: T, sigma_n2: T) -> Result<T> {
    if !(p_total > T::zero() && p_total.is_finite()) {
        return Err(domain(format!("transmit power must be finite and > 0, got {p_total}")));
    }
    if !(sigma_s2 >= T::zero()) {
        return Err(domain(format!(
            "residual interference variance must be >= 0, got {sigma_s2}"
        )));
    }
    if !(sigma_n2 > T::zero()) {
        return Err(domain(format!("noise variance must be > 0, got {sigma_n2}")));
    }
    Ok(p_total / (sigma_s2 + sigma_n2))
}

pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Real>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

/// Horizontal gap in dB between the AWGN capacity curve and `rate_fn` at `snr`: how much more SNR
/// `rate_fn` needs than capacity to deliver the same rate.
pub fn capacity_gap_db<T: Real>(snr: T, rate_fn: impl Fn(T) -> T) -> T {
    let r = rate_fn(snr);
    // capacity reaches r at 2^(2r) - 1
    let snr_c = (T::lit(2.0) * r * T::LN_2()).exp_m1();
    linear_to_db(snr) - linear_to_db(snr_c)
}

/// One row of a rate sweep. Optional columns are absent in the analytic-only sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub snr_db: f64,
    pub c_awgn: f64,
    pub bound_original: f64,
    pub bound_new: f64,
    pub asymptote: f64,
    pub exact_modt: Option<f64>,
    pub mc_rate: Option<f64>,
    pub mc_std_error: Option<f64>,
    pub snr_prime_db: Option<f64>,
    pub sigma_s2: Option<f64>,
}

impl RatePoint {
    /// The four analytic curves at `snr_db`.
    pub fn analytic(snr_db: f64) -> Self {
        let snr = db_to_linear(snr_db);
        Self {
            snr_db,
            c_awgn: awgn_capacity(snr),
            bound_original: bound_original(snr),
            bound_new: bound_new(snr),
            asymptote: asymptote(snr),
            exact_modt: None,
            mc_rate: None,
            mc_std_error: None,
            snr_prime_db: None,
            sigma_s2: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{truncated_entropy_closed_form, TruncatedGaussian};
    use approx::assert_abs_diff_eq;

    const PIE6: f64 = std::f64::consts::PI * std::f64::consts::E / 6.0;

    #[test]
    fn alpha_values() {
        assert_abs_diff_eq!(
            alpha_mmse(1.0).unwrap(),
            std::f64::consts::FRAC_1_SQRT_2,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(alpha_mmse(3.0).unwrap(), 0.866_025_403_784_438_6, epsilon = 1e-15);
        assert_abs_diff_eq!(alpha_mmse(1e12).unwrap(), 1.0, epsilon = 1e-11);
        assert!(alpha_mmse(0.0).is_err());
        assert!(alpha_mmse(-1.0).is_err());
    }

    #[test]
    fn capacity_values() {
        assert_eq!(awgn_capacity(0.0), 0.0);
        assert_abs_diff_eq!(awgn_capacity(1.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(awgn_capacity(3.0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn original_bound_values() {
        assert_abs_diff_eq!(bound_original(PIE6 - 1.0), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(bound_original(1.0), 0.245_385_665_180_446_3, epsilon = 1e-12);
        assert_abs_diff_eq!(bound_original(1e6), asymptote(1e6), epsilon = 1e-6);
        assert!(bound_original(0.1) < 0.0);
    }

    #[test]
    fn new_bound_values() {
        // erf(sqrt 3) = 0.985694121564570
        assert_abs_diff_eq!(bound_new(1.0), 0.255_704_455_756_150_9, epsilon = 1e-12);
        assert!(bound_new(1.0) > bound_original(1.0));
        let s = 1e6;
        assert_abs_diff_eq!(
            bound_new(s),
            0.5 * (6.0 * (1.0 + s) / (PIE6 * 6.0)).log2(),
            epsilon = 1e-3
        );
    }

    fn bound_new_as_written(s: f64) -> f64 {
        let one_p = 1.0 + s;
        let z = crate::numerics::erf((1.5 * one_p).sqrt());
        0.5 * (12.0 * one_p).log2()
            - z.log2()
            - (2.0 * std::f64::consts::PI).sqrt().log2()
            - std::f64::consts::LOG2_E / (2.0 * z)
    }

    #[test]
    fn regrouped_bound_matches_literal_form() {
        for i in -40..=120 {
            let s = db_to_linear(i as f64 * 0.5);
            assert_abs_diff_eq!(bound_new(s), bound_new_as_written(s), epsilon = 1e-13);
        }
        assert_abs_diff_eq!(bound_new(0.0), bound_new_as_written(0.0), epsilon = 1e-14);
    }

    #[test]
    fn gain_is_positive_and_vanishing() {
        let mut prev = f64::INFINITY;
        for i in -10..=25 {
            let g = bound_gain(db_to_linear(i as f64));
            assert!(g > 0.0 && g < prev, "{i} dB");
            prev = g;
        }
        // erfc underflows past about 26 dB
        assert_eq!(bound_gain(db_to_linear(30.0)), 0.0);
        // mpmath: 1.236716e-10 at 11 dB, 6.2052e-19 at 14 dB
        assert_abs_diff_eq!(bound_gain(db_to_linear(11.0)) / 1.2367e-10, 1.0, epsilon = 1e-3);
        assert_abs_diff_eq!(bound_gain(db_to_linear(14.0)) / 6.2052e-19, 1.0, epsilon = 1e-3);
    }

    #[test]
    fn new_bound_is_scale_free() {
        for snr_db in [-20.0, -3.0, 0.0, 7.0, 25.0, 60.0] {
            let sp = db_to_linear(snr_db);
            for t in [0.1, 1.0, 7.3] {
                let m = Modulus::new(t).unwrap();
                let nm = NoiseModel::new(m.p_t(), 0.0, m.p_t() / sp).unwrap();
                let tg = TruncatedGaussian::new(nm.effective_scale(), m.half()).unwrap();
                let via_entropy = f64::log2(t) - truncated_entropy_closed_form(&tg).bits;
                assert_abs_diff_eq!(bound_new(sp), via_entropy, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn asymptote_values() {
        assert_abs_diff_eq!(asymptote(PIE6), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(asymptote(2.0 * PIE6), 0.5, epsilon = 1e-15);
        for s in [1.0, 10.0, 100.0] {
            assert_abs_diff_eq!(
                bound_original(s) - asymptote(s),
                0.5 * f64::log2(1.0 + 1.0 / s),
                epsilon = 1e-14
            );
        }
    }

    #[test]
    fn shaping_loss_values() {
        let db: f64 = shaping_loss_db();
        let bits: f64 = shaping_loss_bits();
        assert_abs_diff_eq!(db, 1.533, epsilon = 1e-3);
        assert_abs_diff_eq!(bits, 0.2546, epsilon = 1e-4);
        assert_abs_diff_eq!(10.0 * 2f64.powf(2.0 * bits).log10(), db, epsilon = 1e-12);
    }

    #[test]
    fn snr_prime_values() {
        assert_eq!(snr_prime(2.0, 0.0, 0.5).unwrap(), 4.0);
        assert_eq!(snr_prime(1.0, 0.5, 0.5).unwrap(), 1.0);
        assert_abs_diff_eq!(snr_prime(1.0 / 12.0, 0.0, 1.0 / 12.0).unwrap(), 1.0, epsilon = 1e-15);
        assert!(snr_prime(1.0, 0.0, 0.0).is_err());
        assert!(snr_prime(1.0, -0.1, 1.0).is_err());
        assert!(snr_prime(0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn noise_model_invariants() {
        let m = Modulus::new(1.0).unwrap();
        let nm = NoiseModel::new(m.p_t(), 0.02, 0.05).unwrap();
        assert_eq!(nm.sigma2(), 0.02 + 0.05);
        assert!(nm.snr_prime() <= nm.snr());
        assert_abs_diff_eq!(nm.alpha(), alpha_mmse(nm.snr_prime()).unwrap(), epsilon = 0.0);
        let cap = nm.effective_scale() * nm.effective_scale() * 12.0 / (m.t() * m.t());
        assert_abs_diff_eq!(cap, 1.0 / (1.0 + nm.snr_prime()), epsilon = 1e-14);

        let clean = NoiseModel::from_snr(1.0, &m).unwrap();
        assert_eq!(clean.snr(), clean.snr_prime());
        assert!(NoiseModel::from_snr(0.0, &m).is_err());
    }

    #[test]
    fn figure_ordering_on_grid() {
        for i in -10..=30 {
            let p = RatePoint::analytic(i as f64);
            assert!(p.c_awgn >= p.bound_new && p.bound_new >= p.bound_original, "{i} dB");
            if i < 20 {
                // the new/original gap drops below one ulp near 14 dB; compare it directly
                assert!(
                    p.c_awgn > p.bound_new && bound_gain(db_to_linear(i as f64)) > 0.0,
                    "{i} dB"
                );
            }
        }
    }

    #[test]
    fn gap_at_high_snr() {
        let s = db_to_linear(60.0);
        assert_abs_diff_eq!(capacity_gap_db(s, bound_new), shaping_loss_db::<f64>(), epsilon = 1e-3);
        assert_abs_diff_eq!(capacity_gap_db(s, awgn_capacity), 0.0, epsilon = 1e-9);
    }

    #[test]
    fn works_in_f32() {
        assert!((bound_new(1.0f32) - 0.255_704_46).abs() < 1e-5);
        assert!((shaping_loss_db::<f32>() - 1.5329).abs() < 1e-3);
    }
}
