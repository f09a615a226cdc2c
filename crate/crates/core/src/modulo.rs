//! The scalar modulo-lattice operator `f_t` and the transmit power / period mapping.

use crate::error::{domain, Result};
use crate::scalar::Real;

/// Lattice period `t` together with the transmit power `p_t = t^2/12` of a uniform symbol on
/// `[-t/2, t/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Modulus<T> {
    t: T,
    p_t: T,
}

impl<T: Real> Modulus<T> {
    /// Modulus with period `t > 0`.
    pub fn new(t: T) -> Result<Self> {
        if !(t > T::zero()) || !t.is_finite() {
            return Err(domain(format!("modulus period must be finite and > 0, got {t}")));
        }
        Ok(Self {
            t,
            p_t: t * t / T::lit(12.0),
        })
    }

    /// Period that meets the power constraint: `t = sqrt(12 p_total)`.
    pub fn from_power(p_total: T) -> Result<Self> {
        if !(p_total > T::zero()) || !p_total.is_finite() {
            return Err(domain(format!("transmit power must be finite and > 0, got {p_total}")));
        }
        Self::new((T::lit(12.0) * p_total).sqrt())
    }

    #[inline]
    pub fn t(&self) -> T {
        self.t
    }

    /// Transmit power of a uniform symbol, `t^2/12`.
    #[inline]
    pub fn p_t(&self) -> T {
        self.p_t
    }

    #[inline]
    pub fn half(&self) -> T {
        self.t * T::lit(0.5)
    }

    /// `f_t(y)`; see [`mod_t`].
    #[inline]
    pub fn reduce(&self, y: T) -> T {
        mod_t(y, self)
    }

    /// Modular difference `f_t(a - b)`.
    #[inline]
    pub fn sub(&self, a: T, b: T) -> T {
        mod_t(a - b, self)
    }

    /// Whether `x` lies in the fundamental interval `[-t/2, t/2)`.
    #[inline]
    pub fn contains(&self, x: T) -> bool {
        x >= -self.half() && x < self.half()
    }
}

/// `t_from_power`: the modulus meeting a transmit-power budget.
pub fn t_from_power<T: Real>(p_total: T) -> Result<Modulus<T>> {
    Modulus::from_power(p_total)
}

/// `f_t(y) = y - floor((y + t/2)/t) * t`, mapping the reals onto `[-t/2, t/2)`.
///
/// The floor acts on the exact expression; the final range check only folds back results pushed
/// onto the wrong side of an endpoint by rounding in `y - k t`.
#[inline]
pub fn mod_t<T: Real>(y: T, m: &Modulus<T>) -> T {
    let t = m.t;
    let half = m.half();
    let mut r = y - ((y + half) / t).floor() * t;
    if r >= half {
        r = r - t;
    } else if r < -half {
        r = r + t;
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit() -> Modulus<f64> {
        Modulus::new(1.0).unwrap()
    }

    #[test]
    fn identity_inside_zone() {
        assert_eq!(mod_t(0.0, &unit()), 0.0);
        assert_eq!(mod_t(0.3, &unit()), 0.3);
    }

    #[test]
    fn period_maps_to_zero() {
        for t in [0.1, 1.0, 3.7, 12.5] {
            let m = Modulus::new(t).unwrap();
            assert_abs_diff_eq!(mod_t(t, &m), 0.0, epsilon = 1e-15 * t);
        }
    }

    #[test]
    fn hand_values() {
        assert_abs_diff_eq!(mod_t(0.6, &unit()), -0.4, epsilon = 1e-15);
        // boundary maps to the lower endpoint
        assert_eq!(mod_t(0.5, &unit()), -0.5);
        assert_eq!(mod_t(-0.5, &unit()), -0.5);
    }

    #[test]
    fn power_mapping() {
        assert_abs_diff_eq!(t_from_power(1.0 / 12.0).unwrap().t(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(t_from_power(3.0).unwrap().t(), 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(t_from_power(1.0).unwrap().t(), 3.464_101_615_137_754_6, epsilon = 1e-15);
        let m = Modulus::new(6.0).unwrap();
        assert_eq!(m.p_t(), 3.0);
    }

    #[test]
    fn rejects_non_positive() {
        assert!(t_from_power(0.0).is_err());
        assert!(t_from_power(-1.0).is_err());
        assert!(Modulus::new(0.0).is_err());
        assert!(Modulus::new(f64::NAN).is_err());
    }

    #[test]
    fn works_in_f32() {
        let m = Modulus::<f32>::new(1.0).unwrap();
        assert!((mod_t(0.6f32, &m) + 0.4).abs() < 1e-6);
    }
}
