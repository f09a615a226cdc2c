//! Channel draws, the abstract mod-t channel, the scalar dirty-paper chain and the multiuser THP
//! chain, plus measurement of the residual interference left by MMSE filters.

use crate::error::{domain, Error, Result};
use crate::linalg::Matrix;
use crate::modulo::{mod_t, Modulus};
use crate::precoder::{receiver_decode_inflated, residual, thp_encode_inflated_into, ChannelMatrix, PrecoderSet};
use crate::rng::RngStream;

/// Minimum trial count for [`estimate_residual_variance`].
pub const MIN_RESIDUAL_TRIALS: usize = 10_000;

/// Interference in the scalar chain is uniform on `[-INTERFERENCE_SPAN t, INTERFERENCE_SPAN t]`.
pub const INTERFERENCE_SPAN: f64 = 5.0;

/// Receiver scaling (and matching encoder inflation) as a function of the stream's SNR′.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InflationRule {
    /// `a = 1`: plain THP, no inflation.
    Unit,
    /// `a = S/(1+S)`: the linear MMSE factor. The effective noise variance `p_t/(1+S)` then
    /// matches the one the closed-form bound assumes.
    #[default]
    Wiener,
    /// `a = sqrt(S/(1+S))`.
    SqrtWiener,
}

impl InflationRule {
    pub fn factor(self, snr: f64) -> f64 {
        match self {
            Self::Unit => 1.0,
            Self::Wiener => snr / (1.0 + snr),
            Self::SqrtWiener => (snr / (1.0 + snr)).sqrt(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Unit => "unit",
            Self::Wiener => "wiener",
            Self::SqrtWiener => "sqrt-wiener",
        }
    }
}

/// One use of a chain. Scalar chains fill length-1 vectors.
///
/// For the multiuser chain, `s` is the interference the encoder cancels (`sum_{j<i} B_ij v_j`),
/// `x` the encoder outputs `v`, and `n`, `n_mmse`, `s_resid` are referred to the receiver input
/// after the gain `G_ii`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ChannelSample {
    pub w: Vec<f64>,
    pub s: Vec<f64>,
    pub x: Vec<f64>,
    pub n: Vec<f64>,
    pub n_mmse: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
    pub s_resid: Vec<f64>,
}

/// `m x n` channel with i.i.d. standard normal entries.
pub fn gen_channel(m: usize, n: usize, rng: &mut RngStream) -> Result<ChannelMatrix<f64>> {
    if m == 0 || m > n {
        return Err(Error::Config(format!(
            "need 1 <= users <= antennas, got {m} users, {n} antennas"
        )));
    }
    ChannelMatrix::new(Matrix::from_fn(m, n, |_, _| rng.standard_normal()))
}

/// `len` i.i.d. `N(0, sigma_n^2)` draws.
pub fn awgn(len: usize, sigma_n: f64, rng: &mut RngStream) -> Vec<f64> {
    assert!(sigma_n >= 0.0, "noise std must be >= 0");
    if sigma_n == 0.0 {
        return vec![0.0; len];
    }
    (0..len).map(|_| sigma_n * rng.standard_normal()).collect()
}

/// Uniform symbol on `[-t/2, t/2)`.
#[inline]
pub fn draw_symbol(m: &Modulus<f64>, rng: &mut RngStream) -> f64 {
    rng.uniform_in(-m.half(), m.half())
}

/// Known interference, uniform on `[-5t, 5t)`.
#[inline]
pub fn draw_interference(m: &Modulus<f64>, rng: &mut RngStream) -> f64 {
    let span = INTERFERENCE_SPAN * m.t();
    rng.uniform_in(-span, span)
}

/// Scalar dirty-paper chain: `x = f_t(w - a s)`, `y = x + s + n`, `z = f_t(a y)`.
pub fn dpc_chain(w: f64, s: f64, alpha: f64, sigma: f64, m: &Modulus<f64>, rng: &mut RngStream) -> f64 {
    let x = mod_t(w - alpha * s, m);
    let n = sigma * rng.standard_normal();
    mod_t(alpha * (x + s + n), m)
}

/// [`dpc_chain`] keeping every intermediate.
pub fn dpc_chain_sample(
    w: f64,
    s: f64,
    alpha: f64,
    sigma: f64,
    m: &Modulus<f64>,
    rng: &mut RngStream,
) -> ChannelSample {
    let x = mod_t(w - alpha * s, m);
    let n = sigma * rng.standard_normal();
    let y = x + s + n;
    ChannelSample {
        w: vec![w],
        s: vec![s],
        x: vec![x],
        n: vec![n],
        n_mmse: vec![n],
        y: vec![y],
        z: vec![mod_t(alpha * y, m)],
        s_resid: vec![0.0],
    }
}

/// Abstract mod-t channel: `z = f_t(w + f_t(a n))` with `n ~ N(0, sigma^2)`.
#[inline]
pub fn mod_t_channel(w: f64, alpha: f64, sigma: f64, m: &Modulus<f64>, rng: &mut RngStream) -> f64 {
    let n = sigma * rng.standard_normal();
    mod_t(w + mod_t(alpha * n, m), m)
}

/// Reusable buffers for the multiuser chain.
#[derive(Debug, Clone)]
pub struct ChainScratch {
    v: Vec<f64>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl ChainScratch {
    pub fn new(users: usize, antennas: usize) -> Self {
        Self {
            v: vec![0.0; users],
            x: vec![0.0; antennas],
            y: vec![0.0; users],
        }
    }
}

/// One use of the multiuser chain, writing receiver outputs into `z`.
///
/// `sigma_n` is the physical AWGN std at each receive antenna, before `G`.
#[allow(clippy::too_many_arguments)]
pub fn multiuser_step(
    w: &[f64],
    pset: &PrecoderSet<f64>,
    alphas: &[f64],
    sigma_n: f64,
    m: &Modulus<f64>,
    rng: &mut RngStream,
    scratch: &mut ChainScratch,
    z: &mut [f64],
) {
    thp_encode_inflated_into(w, pset, alphas, m, &mut scratch.v);
    let (f, h) = (&pset.f, pset.h.matrix());
    for (k, xk) in scratch.x.iter_mut().enumerate() {
        *xk = f.row(k).iter().zip(&scratch.v).map(|(a, b)| a * b).sum();
    }
    for (i, yi) in scratch.y.iter_mut().enumerate() {
        let clean: f64 = h.row(i).iter().zip(&scratch.x).map(|(a, b)| a * b).sum();
        *yi = clean + sigma_n * rng.standard_normal();
    }
    for i in 0..w.len() {
        z[i] = mod_t(alphas[i] * pset.g[i] * scratch.y[i], m);
    }
}

/// One use of the multiuser chain with every intermediate recorded.
pub fn multiuser_sample(
    w: &[f64],
    pset: &PrecoderSet<f64>,
    alphas: &[f64],
    sigma_n: f64,
    m: &Modulus<f64>,
    rng: &mut RngStream,
) -> ChannelSample {
    let mu = pset.users();
    let mut v = vec![0.0; mu];
    thp_encode_inflated_into(w, pset, alphas, m, &mut v);
    let s: Vec<f64> = (0..mu).map(|i| (0..i).map(|j| pset.b[(i, j)] * v[j]).sum()).collect();
    let x = pset.f.matvec(&v);
    let n = awgn(mu, sigma_n, rng);
    let clean = pset.h.matrix().matvec(&x);
    let y: Vec<f64> = clean.iter().zip(&n).map(|(a, b)| a + b).collect();
    let s_resid = residual(pset).matvec(&v);
    let n_g: Vec<f64> = n.iter().zip(&pset.g).map(|(a, g)| a * g).collect();
    let n_mmse = s_resid.iter().zip(&n_g).map(|(a, b)| a + b).collect();
    let z = receiver_decode_inflated(&y, pset, alphas, m);
    ChannelSample {
        w: w.to_vec(),
        s,
        x: v,
        n: n_g,
        n_mmse,
        y,
        z,
        s_resid,
    }
}

/// Per-user residual interference variance of a precoder.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVariance {
    pub per_user: Vec<f64>,
    pub mean: f64,
}

/// Measures the variance of `(G H F - B) v` over `trials` noiseless uses with uniform symbols.
pub fn estimate_residual_variance(
    pset: &PrecoderSet<f64>,
    m: &Modulus<f64>,
    trials: usize,
    rng: &mut RngStream,
) -> Result<ResidualVariance> {
    if trials < MIN_RESIDUAL_TRIALS {
        return Err(domain(format!(
            "residual variance needs >= {MIN_RESIDUAL_TRIALS} trials, got {trials}"
        )));
    }
    let mu = pset.users();
    let r = residual(pset);
    let ones = vec![1.0; mu];
    let mut w = vec![0.0; mu];
    let mut v = vec![0.0; mu];
    let mut sum = vec![0.0; mu];
    let mut sum2 = vec![0.0; mu];
    for _ in 0..trials {
        for wi in w.iter_mut() {
            *wi = draw_symbol(m, rng);
        }
        thp_encode_inflated_into(&w, pset, &ones, m, &mut v);
        for i in 0..mu {
            let s: f64 = r.row(i).iter().zip(&v).map(|(a, b)| a * b).sum();
            sum[i] += s;
            sum2[i] += s * s;
        }
    }
    let n = trials as f64;
    let per_user: Vec<f64> = sum
        .iter()
        .zip(&sum2)
        .map(|(s, s2)| (s2 / n - (s / n).powi(2)).max(0.0))
        .collect();
    let mean = per_user.iter().sum::<f64>() / mu as f64;
    Ok(ResidualVariance { per_user, mean })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precoder::{synthesize_regularized, synthesize_zf};
    use crate::rng::Purpose;
    use approx::assert_abs_diff_eq;

    fn unit() -> Modulus<f64> {
        Modulus::new(1.0).unwrap()
    }

    #[test]
    fn channel_is_deterministic() {
        let a = gen_channel(3, 4, &mut RngStream::new(9, 1)).unwrap();
        let b = gen_channel(3, 4, &mut RngStream::new(9, 1)).unwrap();
        assert_eq!(a, b);
        assert!(gen_channel(5, 4, &mut RngStream::new(9, 1)).is_err());
        assert!(gen_channel(0, 4, &mut RngStream::new(9, 1)).is_err());
    }

    #[test]
    fn zero_noise_is_zero() {
        assert_eq!(awgn(5, 0.0, &mut RngStream::new(1, 1)), vec![0.0; 5]);
    }

    #[test]
    fn clean_dpc_chain_returns_symbol() {
        let m = unit();
        let mut rng = RngStream::new(3, 3);
        for _ in 0..1000 {
            let w = draw_symbol(&m, &mut rng);
            let s = draw_interference(&m, &mut rng);
            assert_abs_diff_eq!(dpc_chain(w, 0.0, 1.0, 0.0, &m, &mut rng), w, epsilon = 1e-12);
            let z = dpc_chain(w, s, 1.0, 0.0, &m, &mut rng);
            assert_abs_diff_eq!(m.sub(z, w).abs(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn dpc_chain_self_noise_below_unit_alpha() {
        let m = unit();
        let mut rng = RngStream::new(3, 4);
        let z = dpc_chain(0.4, 0.0, 0.7, 0.0, &m, &mut rng);
        assert_abs_diff_eq!(z, 0.28, epsilon = 1e-15);
        let s = dpc_chain_sample(0.4, 1.3, 0.7, 0.0, &m, &mut rng);
        assert!(m.contains(s.x[0]) && m.contains(s.z[0]));
    }

    #[test]
    fn mod_t_channel_limits() {
        let m = unit();
        let mut rng = RngStream::new(4, 4);
        assert_eq!(mod_t_channel(0.3, 0.7, 0.0, &m, &mut rng), 0.3);
        let mut a = RngStream::new(4, 5);
        let mut b = RngStream::new(4, 5);
        let z = mod_t_channel(0.0, 0.7, 0.1, &m, &mut a);
        assert_abs_diff_eq!(z, 0.7 * 0.1 * b.standard_normal(), epsilon = 1e-15);
    }

    fn seeded_channel() -> ChannelMatrix<f64> {
        gen_channel(4, 4, &mut RngStream::for_cell(11, 0, 0, Purpose::Channel)).unwrap()
    }

    #[test]
    fn zf_residual_vanishes() {
        let m = unit();
        let p = synthesize_zf(&seeded_channel()).unwrap();
        let r = estimate_residual_variance(&p, &m, 10_000, &mut RngStream::new(1, 1)).unwrap();
        assert!(r.mean < 1e-18);
        assert!(estimate_residual_variance(&p, &m, 9_999, &mut RngStream::new(1, 1)).is_err());
    }

    #[test]
    fn mmse_residual_matches_filter_energy() {
        let m = unit();
        let p = synthesize_regularized(&seeded_channel(), 0.4).unwrap();
        let r = estimate_residual_variance(&p, &m, 200_000, &mut RngStream::new(1, 2)).unwrap();
        let res = residual(&p);
        for i in 0..4 {
            let expect: f64 = res.row(i).iter().map(|x| x * x).sum::<f64>() * m.p_t();
            assert_abs_diff_eq!(r.per_user[i], expect, epsilon = 0.02 * expect + 1e-15);
        }
    }

    #[test]
    fn multiuser_sample_is_consistent() {
        let m = Modulus::new(2.0).unwrap();
        let p = synthesize_regularized(&seeded_channel(), 0.3).unwrap();
        let alphas = [0.9, 0.8, 0.95, 1.0];
        let w = [0.1, -0.7, 0.5, 0.99];
        let s = multiuser_sample(&w, &p, &alphas, 0.05, &m, &mut RngStream::new(2, 2));
        let mut z = [0.0; 4];
        multiuser_step(
            &w,
            &p,
            &alphas,
            0.05,
            &m,
            &mut RngStream::new(2, 2),
            &mut ChainScratch::new(4, 4),
            &mut z,
        );
        for (i, zi) in z.iter().enumerate() {
            assert_abs_diff_eq!(*zi, s.z[i], epsilon = 1e-12);
            assert!(m.contains(s.x[i]) && m.contains(s.z[i]));
            // G y = v + s + s' + G n
            let lhs = p.g[i] * s.y[i];
            assert_abs_diff_eq!(lhs, s.x[i] + s.s[i] + s.s_resid[i] + s.n[i], epsilon = 1e-12);
        }
    }

    #[test]
    fn inflation_factors() {
        assert_eq!(InflationRule::Unit.factor(3.0), 1.0);
        assert_eq!(InflationRule::Wiener.factor(3.0), 0.75);
        assert_abs_diff_eq!(InflationRule::SqrtWiener.factor(3.0), 0.75f64.sqrt(), epsilon = 1e-15);
    }
}
