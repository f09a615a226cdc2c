//! Densities and differential entropies of the truncated and the wrapped Gaussian.
//!
//! The wrapped Gaussian is the exact law of the effective mod-t noise `[a n] mod t`; the truncated
//! Gaussian on `[-t/2, t/2]` is the upper-bounding device behind the closed-form rate bound.
//! Public entropies are in bits; quadrature runs in nats and converts at the end.

use crate::error::{domain, Result};
use crate::numerics::{self, erf, integrate_with_breaks, neg_p_ln_p, std_normal_cdf};
use crate::scalar::Real;

/// Differential entropy in bits with the quadrature error bound that comes with it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyBits<T> {
    pub bits: T,
    pub err: T,
}

/// Zero-mean normal with standard deviation `scale`, restricted and renormalized to
/// `[-half_width, half_width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedGaussian<T> {
    scale: T,
    half_width: T,
}

impl<T: Real> TruncatedGaussian<T> {
    pub fn new(scale: T, half_width: T) -> Result<Self> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(domain(format!("truncated gaussian scale must be > 0, got {scale}")));
        }
        if !(half_width > T::zero() && half_width.is_finite()) {
            return Err(domain(format!(
                "truncated gaussian half width must be > 0, got {half_width}"
            )));
        }
        Ok(Self { scale, half_width })
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn half_width(&self) -> T {
        self.half_width
    }

    /// Probability mass of the untruncated normal inside the support, `erf(hw/(sqrt2 scale))`.
    pub fn mass(&self) -> T {
        erf(self.half_width / (T::SQRT_2() * self.scale))
    }

    fn ln_norm(&self) -> T {
        (self.scale * self.mass() * (T::lit(2.0) * T::PI()).sqrt()).ln()
    }
}

/// Zero-mean normal with standard deviation `scale` reduced modulo `period`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WrappedGaussian<T> {
    scale: T,
    period: T,
}

impl<T: Real> WrappedGaussian<T> {
    pub fn new(scale: T, period: T) -> Result<Self> {
        if !(scale > T::zero() && scale.is_finite()) {
            return Err(domain(format!("wrapped gaussian scale must be > 0, got {scale}")));
        }
        if !(period > T::zero() && period.is_finite()) {
            return Err(domain(format!("wrapped gaussian period must be > 0, got {period}")));
        }
        Ok(Self { scale, period })
    }

    pub fn scale(&self) -> T {
        self.scale
    }

    pub fn period(&self) -> T {
        self.period
    }

    /// Number of images on each side: `ceil(8 scale / period) + 2`.
    pub fn images(&self) -> usize {
        let k = (T::lit(8.0) * self.scale / self.period).ceil();
        k.to_usize().unwrap_or(usize::MAX - 2) + 2
    }
}

/// Truncated normal density; zero outside the support.
pub fn truncated_pdf<T: Real>(d: T, tg: &TruncatedGaussian<T>) -> T {
    if d.abs() > tg.half_width {
        return T::zero();
    }
    truncated_ln_pdf(d, tg).exp()
}

fn truncated_ln_pdf<T: Real>(d: T, tg: &TruncatedGaussian<T>) -> T {
    let u = d / tg.scale;
    -u * u * T::lit(0.5) - tg.ln_norm()
}

fn gaussian_breaks<T: Real>(scale: T) -> [T; 7] {
    let k = |c: f64| T::lit(c) * scale;
    [-k(8.0), -k(4.0), -k(1.0), T::zero(), k(1.0), k(4.0), k(8.0)]
}

/// `-int p ln p` over the support of the truncated normal, by adaptive quadrature, in bits.
pub fn truncated_entropy_quadrature<T: Real>(tg: &TruncatedGaussian<T>) -> Result<EntropyBits<T>> {
    let hw = tg.half_width;
    let r = integrate_with_breaks(
        |d| neg_p_ln_p(truncated_ln_pdf(d, tg)),
        -hw,
        hw,
        &gaussian_breaks(tg.scale),
        T::lit(numerics::DEFAULT_TOL),
    )?;
    Ok(EntropyBits {
        bits: r.value / T::LN_2(),
        err: r.abs_error_estimate / T::LN_2(),
    })
}

/// Closed-form entropy upper bound
/// `log2[s erf(hw/(sqrt2 s))] + log2 sqrt(2 pi) + log2(e) / (2 erf(hw/(sqrt2 s)))`.
///
/// This bounds the second moment of the standardized truncated variable by `1/erf(..)`, so it is
/// never below the true truncated entropy; the two meet as `s/hw -> 0`.
pub fn truncated_entropy_closed_form<T: Real>(tg: &TruncatedGaussian<T>) -> EntropyBits<T> {
    let z = tg.mass();
    let bits = (tg.scale * z).log2() + (T::lit(2.0) * T::PI()).sqrt().log2() + T::LOG2_E() / (T::lit(2.0) * z);
    EntropyBits { bits, err: T::zero() }
}

/// Exact truncated-normal entropy `ln(sqrt(2 pi e) s Z) - b phi(b)/Z` with `b = hw/s`, in bits.
pub fn truncated_entropy_analytic<T: Real>(tg: &TruncatedGaussian<T>) -> T {
    let b = tg.half_width / tg.scale;
    let z = tg.mass();
    let nats = (T::lit(2.0) * T::PI() * T::E()).sqrt().ln() + (tg.scale * z).ln() - b * numerics::std_normal_pdf(b) / z;
    nats / T::LN_2()
}

/// Wrapped normal density at `x` in one period: `sum_k phi_s(x + k t)`.
pub fn wrapped_pdf<T: Real>(x: T, wg: &WrappedGaussian<T>) -> T {
    wrapped_ln_pdf(x, wg).exp()
}

fn wrapped_ln_pdf<T: Real>(x: T, wg: &WrappedGaussian<T>) -> T {
    let k = wg.images() as i64;
    let s = wg.scale;
    let expo = |i: i64| {
        let u = (x + T::from_i64(i).expect("image index") * wg.period) / s;
        -u * u * T::lit(0.5)
    };
    // log-sum-exp over the images; the largest exponent is at the image nearest to 0
    let mut top = T::neg_infinity();
    for i in -k..=k {
        top = top.max(expo(i));
    }
    let mut acc = T::zero();
    for i in -k..=k {
        acc = acc + (expo(i) - top).exp();
    }
    top + acc.ln() - (s * (T::lit(2.0) * T::PI()).sqrt()).ln()
}

/// CDF of the wrapped normal on `[-t/2, t/2)`, measured from the left endpoint.
pub fn wrapped_cdf<T: Real>(x: T, wg: &WrappedGaussian<T>) -> T {
    let half = wg.period * T::lit(0.5);
    if x <= -half {
        return T::zero();
    }
    if x >= half {
        return T::one();
    }
    let k = wg.images() as i64;
    let s = wg.scale;
    let mut acc = T::zero();
    for i in -k..=k {
        let shift = T::from_i64(i).expect("image index") * wg.period;
        acc = acc + std_normal_cdf((x + shift) / s) - std_normal_cdf((-half + shift) / s);
    }
    acc.max(T::zero()).min(T::one())
}

/// `-int p ln p` of the wrapped normal over one period, in bits.
pub fn wrapped_entropy<T: Real>(wg: &WrappedGaussian<T>) -> Result<EntropyBits<T>> {
    let half = wg.period * T::lit(0.5);
    let r = integrate_with_breaks(
        |x| neg_p_ln_p(wrapped_ln_pdf(x, wg)),
        -half,
        half,
        &gaussian_breaks(wg.scale),
        T::lit(numerics::DEFAULT_TOL),
    )?;
    Ok(EntropyBits {
        bits: r.value / T::LN_2(),
        err: r.abs_error_estimate / T::LN_2(),
    })
}

/// Entropy of an untruncated normal, `log2(s sqrt(2 pi e))`.
pub fn gaussian_entropy_bits<T: Real>(scale: T) -> T {
    (scale * (T::lit(2.0) * T::PI() * T::E()).sqrt()).log2()
}
