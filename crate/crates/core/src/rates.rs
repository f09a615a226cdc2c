//! Mutual information of the mod-t channel: exact by quadrature, estimated by histogram plug-in
//! over simulated uses, and per user over the full multiuser THP chain.

use crate::bounds::{bound_new, NoiseModel};
use crate::channel::{
    draw_symbol, estimate_residual_variance, mod_t_channel, multiuser_step, ChainScratch, InflationRule,
};
use crate::entropy::{wrapped_entropy, WrappedGaussian};
use crate::error::{domain, Result};
use crate::modulo::Modulus;
use crate::precoder::{synthesize_mmse, synthesize_zf, ChannelMatrix, PrecoderKind, PrecoderSet};
use crate::rng::RngStream;

pub const MIN_SAMPLES: usize = 10_000;
pub const MIN_BINS: usize = 16;
pub const MAX_BINS: usize = 4096;
/// Mean histogram occupancy below this sets [`RateEstimate::low_occupancy`].
pub const MIN_OCCUPANCY: f64 = 10.0;

/// Rate in bits per channel use. For quadrature results `std_error` is the quadrature error and
/// `samples`, `bins` are 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub bits: f64,
    pub std_error: f64,
    pub samples: usize,
    pub bins: usize,
    /// Estimated `h(z)` in bits.
    pub output_entropy: f64,
    /// Estimated `h(z | w)` in bits.
    pub noise_entropy: f64,
    pub low_occupancy: bool,
}

/// Histogram estimator settings.
///
/// The conditional entropy is estimated from the residual `z - w (mod t)`. With `strata = 1` this is
/// a single histogram, which is exact for an additive mod-t channel. With `strata = K` the residual
/// is histogrammed separately for `K` equal slices of the input range and the slice entropies are
/// averaged; this keeps the estimate consistent when the noise depends on the input, as in the
/// inflated THP chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EstimatorConfig {
    pub bins: usize,
    pub strata: usize,
    pub miller_madow: bool,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            bins: 256,
            strata: 1,
            miller_madow: false,
        }
    }
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.bins.is_power_of_two() || !(MIN_BINS..=MAX_BINS).contains(&self.bins) {
            return Err(domain(format!(
                "bins must be a power of two in [{MIN_BINS}, {MAX_BINS}], got {}",
                self.bins
            )));
        }
        if self.strata == 0 {
            return Err(domain("strata must be >= 1"));
        }
        Ok(())
    }
}

/// Plug-in differential entropy (bits) of a histogram with equal bin `width`, and the delta-method
/// variance of that estimate.
pub fn histogram_entropy(counts: &[u64], width: f64, miller_madow: bool) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return (f64::NAN, f64::NAN);
    }
    let n = total as f64;
    let (mut h, mut h2, mut occupied) = (0.0, 0.0, 0usize);
    for &c in counts.iter().filter(|&&c| c > 0) {
        let p = c as f64 / n;
        let l = -p.log2();
        h += p * l;
        h2 += p * l * l;
        occupied += 1;
    }
    let var = ((h2 - h * h) / n).max(0.0);
    if miller_madow {
        h += (occupied as f64 - 1.0) / (2.0 * n * std::f64::consts::LN_2);
    }
    (h + width.log2(), var)
}

/// Streaming histogram accumulator for `I(w; z)` on one mod-t channel.
#[derive(Debug, Clone)]
pub struct RateAccumulator {
    cfg: EstimatorConfig,
    m: Modulus<f64>,
    z_counts: Vec<u64>,
    /// `strata x bins`, row-major.
    r_counts: Vec<u64>,
    samples: usize,
}

impl RateAccumulator {
    pub fn new(cfg: EstimatorConfig, m: Modulus<f64>) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            cfg,
            m,
            z_counts: vec![0; cfg.bins],
            r_counts: vec![0; cfg.bins * cfg.strata],
            samples: 0,
        })
    }

    #[inline]
    fn bin(x: f64, m: &Modulus<f64>, bins: usize) -> usize {
        let k = ((x + m.half()) / m.t() * bins as f64) as usize;
        k.min(bins - 1)
    }

    #[inline]
    pub fn push(&mut self, w: f64, z: f64) {
        let bins = self.cfg.bins;
        self.z_counts[Self::bin(z, &self.m, bins)] += 1;
        let stratum = Self::bin(w, &self.m, self.cfg.strata);
        let r = self.m.sub(z, w);
        self.r_counts[stratum * bins + Self::bin(r, &self.m, bins)] += 1;
        self.samples += 1;
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn finish(&self) -> RateEstimate {
        let bins = self.cfg.bins;
        let width = self.m.t() / bins as f64;
        let n = self.samples as f64;
        let (hz, var_z) = histogram_entropy(&self.z_counts, width, self.cfg.miller_madow);
        let (mut hr, mut var_r) = (0.0, 0.0);
        for row in self.r_counts.chunks(bins) {
            let nk: u64 = row.iter().sum();
            if nk == 0 {
                continue;
            }
            let pk = nk as f64 / n;
            let (h, v) = histogram_entropy(row, width, self.cfg.miller_madow);
            hr += pk * h;
            var_r += pk * pk * v;
        }
        let cells = (bins * self.cfg.strata) as f64;
        RateEstimate {
            bits: hz - hr,
            // z and the residual are independent for an additive channel with uniform input
            std_error: (var_z + var_r).sqrt(),
            samples: self.samples,
            bins,
            output_entropy: hz,
            noise_entropy: hr,
            low_occupancy: n / cells < MIN_OCCUPANCY,
        }
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(domain(format!(
            "rate needs finite noise std > 0 (the noiseless rate is infinite), got {sigma}"
        )));
    }
    Ok(())
}

/// `log2 t - h(f_t(a n))`: the exact uniform-input rate of the mod-t channel.
pub fn exact_modt_rate(alpha: f64, sigma: f64, m: &Modulus<f64>) -> Result<RateEstimate> {
    check_sigma(sigma)?;
    if !(alpha > 0.0) {
        return Err(domain(format!("alpha must be > 0, got {alpha}")));
    }
    let h = wrapped_entropy(&WrappedGaussian::new(alpha * sigma, m.t())?)?;
    let hz = m.t().log2();
    Ok(RateEstimate {
        bits: hz - h.bits,
        std_error: h.err,
        samples: 0,
        bins: 0,
        output_entropy: hz,
        noise_entropy: h.bits,
        low_occupancy: false,
    })
}

/// Plug-in estimate of `I(w; z)` over `samples` uses of the mod-t channel with uniform `w`.
pub fn mc_mutual_info(
    alpha: f64,
    sigma: f64,
    m: &Modulus<f64>,
    samples: usize,
    bins: usize,
    rng: &mut RngStream,
) -> Result<RateEstimate> {
    let cfg = EstimatorConfig {
        bins,
        ..EstimatorConfig::default()
    };
    mc_mutual_info_with(alpha, sigma, m, samples, &cfg, rng)
}

pub fn mc_mutual_info_with(
    alpha: f64,
    sigma: f64,
    m: &Modulus<f64>,
    samples: usize,
    cfg: &EstimatorConfig,
    rng: &mut RngStream,
) -> Result<RateEstimate> {
    check_sigma(sigma)?;
    check_samples(samples)?;
    let mut acc = RateAccumulator::new(*cfg, *m)?;
    for _ in 0..samples {
        let w = draw_symbol(m, rng);
        let z = mod_t_channel(w, alpha, sigma, m, rng);
        acc.push(w, z);
    }
    Ok(acc.finish())
}

fn check_samples(samples: usize) -> Result<()> {
    if samples < MIN_SAMPLES {
        return Err(domain(format!("need >= {MIN_SAMPLES} samples, got {samples}")));
    }
    Ok(())
}

/// Settings of a full-chain simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    pub precoder: PrecoderKind,
    pub inflation: InflationRule,
    pub estimator: EstimatorConfig,
    pub residual_trials: usize,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            precoder: PrecoderKind::Mmse,
            inflation: InflationRule::Wiener,
            estimator: EstimatorConfig {
                bins: 256,
                strata: 64,
                miller_madow: false,
            },
            residual_trials: 100_000,
        }
    }
}

/// Simulated rate of one user of the multiuser chain, with the noise budget it saw.
#[derive(Debug, Clone, PartialEq)]
pub struct UserRate {
    pub rate: RateEstimate,
    /// Scalar noise model after the receiver gain: `sigma_n2 = G_ii^2 sigma_n^2` and the measured
    /// residual interference.
    pub noise: NoiseModel<f64>,
    /// Receiver scaling used for this user.
    pub alpha: f64,
    pub bound_new: f64,
}

/// Runs the multiuser chain and returns each user's estimated rate.
///
/// `noise` carries the physical AWGN (`sigma_n2 = p_t / SNR` at every receive antenna); its residual
/// term is ignored and measured instead. Uses the default [`ChainConfig`].
pub fn per_user_rate_sim(
    h: &ChannelMatrix<f64>,
    noise: &NoiseModel<f64>,
    m: &Modulus<f64>,
    samples: usize,
    rng: &mut RngStream,
) -> Result<Vec<UserRate>> {
    let mut residual_rng = RngStream::new(rng.seed(), rng.stream_id() ^ (1 << 63));
    per_user_rate_sim_with(h, noise, m, samples, &ChainConfig::default(), &mut residual_rng, rng)
}

/// Synthesizes the filters for `cfg.precoder` at the physical noise level of `noise`.
pub fn synthesize(
    h: &ChannelMatrix<f64>,
    noise: &NoiseModel<f64>,
    m: &Modulus<f64>,
    kind: PrecoderKind,
) -> Result<PrecoderSet<f64>> {
    match kind {
        PrecoderKind::ZeroForcing => synthesize_zf(h),
        PrecoderKind::Mmse => synthesize_mmse(h, noise, m),
    }
}

/// Per-user noise models of a precoder: measured residual plus receiver-scaled AWGN.
pub fn user_noise_models(
    pset: &PrecoderSet<f64>,
    noise: &NoiseModel<f64>,
    m: &Modulus<f64>,
    residual_trials: usize,
    rng: &mut RngStream,
) -> Result<Vec<NoiseModel<f64>>> {
    let resid = estimate_residual_variance(pset, m, residual_trials, rng)?;
    pset.g
        .iter()
        .zip(&resid.per_user)
        .map(|(g, &s2)| NoiseModel::new(m.p_t(), s2, g * g * noise.sigma_n2()))
        .collect()
}

/// [`per_user_rate_sim`] with explicit settings and a separate stream for the residual measurement.
pub fn per_user_rate_sim_with(
    h: &ChannelMatrix<f64>,
    noise: &NoiseModel<f64>,
    m: &Modulus<f64>,
    samples: usize,
    cfg: &ChainConfig,
    residual_rng: &mut RngStream,
    rng: &mut RngStream,
) -> Result<Vec<UserRate>> {
    check_samples(samples)?;
    check_sigma(noise.sigma_n2())?;
    let pset = synthesize(h, noise, m, cfg.precoder)?;
    let models = user_noise_models(&pset, noise, m, cfg.residual_trials, residual_rng)?;
    let alphas: Vec<f64> = models.iter().map(|nm| cfg.inflation.factor(nm.snr_prime())).collect();

    let mu = h.users();
    let mut accs = (0..mu)
        .map(|_| RateAccumulator::new(cfg.estimator, *m))
        .collect::<Result<Vec<_>>>()?;
    let sigma_n = noise.sigma_n2().sqrt();
    let mut scratch = ChainScratch::new(mu, h.antennas());
    let mut w = vec![0.0; mu];
    let mut z = vec![0.0; mu];
    for _ in 0..samples {
        for wi in w.iter_mut() {
            *wi = draw_symbol(m, rng);
        }
        multiuser_step(&w, &pset, &alphas, sigma_n, m, rng, &mut scratch, &mut z);
        for (i, acc) in accs.iter_mut().enumerate() {
            acc.push(w[i], z[i]);
        }
    }
    Ok(accs
        .iter()
        .zip(models)
        .zip(alphas)
        .map(|((acc, noise), alpha)| UserRate {
            rate: acc.finish(),
            bound_new: bound_new(noise.snr_prime()),
            noise,
            alpha,
        })
        .collect())
}
