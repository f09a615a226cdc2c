//! Special functions and adaptive quadrature.
//!
//! Everything here is written out explicitly (no platform `erf`) so that golden CSV files are
//! bit-stable across toolchains and targets.

// published coefficients are kept digit for digit
#![allow(clippy::excessive_precision)]

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Default absolute tolerance for [`integrate`] callers that have no better idea.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Panel budget for [`integrate`]: total number of accepted-or-split panels per call.
pub const MAX_PANELS: usize = 20_000;

/// Bisection depth limit; a panel at this depth is accepted and the call reports non-convergence.
pub const MAX_DEPTH: usize = 48;

/// Crossover between the power series and the continued fraction in [`erf`].
const ERF_SERIES_LIMIT: f64 = 3.0;

/// Depth of the backward-evaluated erfc continued fraction (x >= 3 needs far fewer).
const ERFC_CF_DEPTH: usize = 120;

/// Error function.
///
/// For |x| < 3 uses the everywhere-positive series
/// `erf(x) = 2/sqrt(pi) * exp(-x^2) * sum_n (2x^2)^n x / (1*3*...*(2n+1))`, which has no
/// cancellation. For |x| >= 3 uses the Laplace continued fraction for erfc evaluated backwards at
/// fixed depth. Absolute error is below 1e-15 in `f64`.
pub fn erf<T: Real>(x: T) -> T {
    if x.is_nan() {
        return x;
    }
    let ax = x.abs();
    let v = if ax < T::lit(ERF_SERIES_LIMIT) {
        erf_series(ax)
    } else {
        T::one() - erfc_continued_fraction(ax)
    };
    if x < T::zero() {
        -v
    } else {
        v
    }
}

/// Complementary error function, `1 - erf(x)`, accurate in the upper tail.
pub fn erfc<T: Real>(x: T) -> T {
    if x >= T::lit(ERF_SERIES_LIMIT) {
        erfc_continued_fraction(x)
    } else if x <= -T::lit(ERF_SERIES_LIMIT) {
        T::lit(2.0) - erfc_continued_fraction(-x)
    } else {
        T::one() - erf(x)
    }
}

fn erf_series<T: Real>(x: T) -> T {
    let two_x2 = T::lit(2.0) * x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0usize;
    while n < 400 {
        n += 1;
        term = term * two_x2 / T::from_usize_lossy(2 * n + 1);
        sum = sum + term;
        if term <= sum * T::epsilon() {
            break;
        }
    }
    T::lit(std::f64::consts::FRAC_2_SQRT_PI) * (-x * x).exp() * sum
}

/// `erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))`, x > 0.
fn erfc_continued_fraction<T: Real>(x: T) -> T {
    let half = T::lit(0.5);
    let mut f = x;
    for n in (1..=ERFC_CF_DEPTH).rev() {
        f = x + T::from_usize_lossy(n) * half / f;
    }
    (-x * x).exp() / (T::PI().sqrt() * f)
}

/// Standard normal density `exp(-x^2/2)/sqrt(2 pi)`.
pub fn std_normal_pdf<T: Real>(x: T) -> T {
    (-(x * x) * T::lit(0.5)).exp() / (T::lit(2.0) * T::PI()).sqrt()
}

/// Standard normal CDF, `(1 + erf(x/sqrt 2))/2`.
pub fn std_normal_cdf<T: Real>(x: T) -> T {
    if x < -T::lit(ERF_SERIES_LIMIT * std::f64::consts::SQRT_2) {
        // lower tail through erfc keeps relative accuracy
        T::lit(0.5) * erfc(-x / T::SQRT_2())
    } else {
        T::lit(0.5) * (T::one() + erf(x / T::SQRT_2()))
    }
}

/// Inverse standard normal CDF (Wichura's AS 241, PPND16; relative accuracy ~1e-16).
///
/// `p` must lie in the open interval (0, 1); the endpoints map to -inf / +inf.
pub fn std_normal_quantile<T: Real>(p: T) -> T {
    if p <= T::zero() {
        return T::neg_infinity();
    }
    if p >= T::one() {
        return T::infinity();
    }
    let poly = |c: &[f64], r: T| c.iter().rev().fold(T::zero(), |acc, &ci| acc * r + T::lit(ci));

    let q = p - T::lit(0.5);
    if q.abs() <= T::lit(0.425) {
        const A: [f64; 8] = [
            3.387_132_872_796_366_608,
            133.141_667_891_784_377_45,
            1_971.590_950_306_551_442_7,
            13_731.693_765_509_461_125,
            45_921.953_931_549_871_457,
            67_265.770_927_008_700_853,
            33_430.575_583_588_128_105,
            2_509.080_928_730_122_672_7,
        ];
        const B: [f64; 8] = [
            1.0,
            42.313_330_701_600_911_252,
            687.187_007_492_057_908_3,
            5_394.196_021_424_751_107_7,
            21_213.794_301_586_595_867,
            39_307.895_800_092_710_61,
            28_729.085_735_721_942_674,
            5_226.495_278_852_854_561,
        ];
        let r = T::lit(0.180625) - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }

    let tail = if q < T::zero() { p } else { T::one() - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= T::lit(5.0) {
        const C: [f64; 8] = [
            1.423_437_110_749_683_577_34,
            4.630_337_846_156_545_295_9,
            5.769_497_221_460_691_405_5,
            3.647_848_324_763_204_605_04,
            1.270_458_252_452_368_382_58,
            0.241_780_725_177_450_611_77,
            0.022_723_844_989_269_184_583_3,
            7.745_450_142_783_414_076_4e-4,
        ];
        const D: [f64; 8] = [
            1.0,
            2.053_191_626_637_758_821_87,
            1.676_384_830_183_803_849_4,
            0.689_767_334_985_100_004_55,
            0.148_103_976_427_480_074_59,
            0.015_198_666_563_616_457_196_6,
            5.475_938_084_995_344_946e-4,
            1.050_750_071_644_416_843_24e-9,
        ];
        r = r - T::lit(1.6);
        poly(&C, r) / poly(&D, r)
    } else {
        const E: [f64; 8] = [
            6.657_904_643_501_103_777_2,
            5.463_784_911_164_114_369_9,
            1.784_826_539_917_291_335_8,
            0.296_560_571_828_504_891_23,
            0.026_532_189_526_576_123_093,
            0.001_242_660_947_388_078_438_6,
            2.711_555_568_743_487_578_15e-5,
            2.010_334_399_292_288_132_65e-7,
        ];
        const F: [f64; 8] = [
            1.0,
            0.599_832_206_555_887_937_69,
            0.136_929_880_922_735_805_31,
            0.014_875_361_290_850_614_852_5,
            7.868_691_311_456_132_591e-4,
            1.846_318_317_510_054_681_8e-5,
            1.421_511_758_316_445_888_7e-7,
            2.044_263_103_389_939_785_64e-15,
        ];
        r = r - T::lit(5.0);
        poly(&E, r) / poly(&F, r)
    };
    if q < T::zero() {
        -val
    } else {
        val
    }
}

/// Result of a definite integral with its accumulated error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult<T> {
    pub value: T,
    pub abs_error_estimate: T,
}

/// Non-negative half of the 15-point Gauss-Legendre rule on [-1, 1]: (node, weight).
const GL15: [(f64, f64); 8] = [
    (0.0, 0.202_578_241_925_561_272_88),
    (0.201_194_093_997_434_522_3, 0.198_431_485_327_111_576_46),
    (0.394_151_347_077_563_369_9, 0.186_161_000_015_562_211_03),
    (0.570_972_172_608_538_847_54, 0.166_269_205_816_993_933_55),
    (0.724_417_731_360_170_047_42, 0.139_570_677_926_154_314_45),
    (0.848_206_583_410_427_216_2, 0.107_159_220_467_171_935_01),
    (0.937_273_392_400_705_904_31, 0.070_366_047_488_108_124_709),
    (0.987_992_518_020_485_428_49, 0.030_753_241_996_117_268_355),
];

fn gauss_legendre_15<T: Real, F: Fn(T) -> T>(f: &F, a: T, b: T) -> T {
    let half = T::lit(0.5);
    let c = (a + b) * half;
    let h = (b - a) * half;
    let mut sum = T::lit(GL15[0].1) * f(c);
    for &(x, w) in &GL15[1..] {
        let dx = h * T::lit(x);
        sum = sum + T::lit(w) * (f(c - dx) + f(c + dx));
    }
    sum * h
}

/// Adaptive composite 15-point Gauss-Legendre quadrature of `f` over `[a, b]`.
///
/// Each panel is compared against the sum of its two halves; the halves are accepted when the
/// difference is within the panel's share of `tol` (the tolerance is halved on every split), or
/// below the round-off floor of the panel. The reported error estimate is the sum of those
/// differences. Exceeding [`MAX_PANELS`] or [`MAX_DEPTH`] returns [`Error::Quadrature`] with the
/// best estimate.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, tol: T) -> Result<QuadratureResult<T>> {
    if !(a.is_finite() && b.is_finite()) || a >= b {
        return Err(Error::Domain(format!(
            "integration interval [{a}, {b}] is not a finite a < b"
        )));
    }
    if !(tol > T::zero()) {
        return Err(Error::Domain(format!("integration tolerance {tol} must be positive")));
    }
    let round_off = T::lit(50.0) * T::epsilon();

    let mut value = T::zero();
    let mut err = T::zero();
    let mut panels = 1usize;
    let mut exhausted = false;
    let mut stack = vec![(a, b, gauss_legendre_15(&f, a, b), tol, 0usize)];
    while let Some((lo, hi, whole, panel_tol, depth)) = stack.pop() {
        let mid = (lo + hi) * T::lit(0.5);
        let left = gauss_legendre_15(&f, lo, mid);
        let right = gauss_legendre_15(&f, mid, hi);
        let refined = left + right;
        let diff = (refined - whole).abs();
        panels += 2;
        let converged = diff <= panel_tol || diff <= round_off * refined.abs();
        if converged || depth >= MAX_DEPTH || panels >= MAX_PANELS {
            if !converged {
                exhausted = true;
            }
            value = value + refined;
            err = err + diff;
        } else {
            let sub_tol = panel_tol * T::lit(0.5);
            stack.push((mid, hi, right, sub_tol, depth + 1));
            stack.push((lo, mid, left, sub_tol, depth + 1));
        }
    }
    if exhausted || !value.is_finite() {
        return Err(Error::Quadrature {
            value: value.as_f64(),
            abs_error: err.as_f64(),
            panels,
        });
    }
    Ok(QuadratureResult {
        value,
        abs_error_estimate: err,
    })
}

/// [`integrate`] over `[a, b]` split at the given interior breakpoints.
///
/// Breakpoints outside `(a, b)` are ignored; the tolerance is shared equally between pieces.
pub fn integrate_with_breaks<T: Real, F: Fn(T) -> T>(
    f: F,
    a: T,
    b: T,
    breaks: &[T],
    tol: T,
) -> Result<QuadratureResult<T>> {
    let mut knots: Vec<T> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    knots.sort_by(|x, y| x.partial_cmp(y).expect("breakpoints must not be NaN"));
    knots.dedup();
    let mut edges = Vec::with_capacity(knots.len() + 2);
    edges.push(a);
    edges.extend(knots);
    edges.push(b);

    let piece_tol = tol / T::from_usize_lossy(edges.len() - 1);
    let mut total = QuadratureResult {
        value: T::zero(),
        abs_error_estimate: T::zero(),
    };
    for w in edges.windows(2) {
        let r = integrate(&f, w[0], w[1], piece_tol)?;
        total.value = total.value + r.value;
        total.abs_error_estimate = total.abs_error_estimate + r.abs_error_estimate;
    }
    Ok(total)
}

/// `-p ln p` with the convention `0 ln 0 = 0`, given `ln p`.
#[inline]
pub fn neg_p_ln_p<T: Real>(ln_p: T) -> T {
    let p = ln_p.exp();
    if p == T::zero() {
        T::zero()
    } else {
        -p * ln_p
    }
}
