//! Tomlinson-Harashima precoding (THP) for the multiuser MIMO downlink, and the
//! information-rate machinery around it.
//!
//! The crate is split along the signal chain:
//!
//! - [`numerics`]: error function, Gaussian CDF/quantile, adaptive Gauss-Legendre quadrature.
//! - [`modulo`]: the scalar modulo-lattice operator and the power/modulus mapping.
//! - [`entropy`]: truncated and wrapped Gaussian densities and their differential entropies.
//! - [`bounds`]: AWGN capacity, the lattice-strategy lower bound, the truncated-Gaussian lower
//!   bound, their common asymptote and the shaping loss.
//! - [`linalg`] and [`precoder`]: LQ factorization and ZF / MMSE THP filter synthesis.
//! - [`rng`] and [`channel`]: reproducible sampling, the abstract mod-t channel and the full chain.
//! - [`rates`]: exact and Monte Carlo mutual information of the mod-t channel.
//! - [`sweep`] and [`verify`]: the SNR sweeps, CSV output and the invariant suite behind the CLI.
//!
//! Math modules are generic over the scalar type ([`Real`], implemented for `f32` and `f64`).
//! The simulation side runs in `f64`; the aliases below name the `f64` instantiations.

// `!(x > 0)` is how the validators reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod channel;
pub mod entropy;
pub mod error;
pub mod linalg;
pub mod modulo;
pub mod numerics;
pub mod precoder;
pub mod rates;
pub mod rng;
pub mod scalar;
pub mod stats;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Modulus = modulo::Modulus<f64>;
pub type NoiseModel = bounds::NoiseModel<f64>;
pub type TruncatedGaussian = entropy::TruncatedGaussian<f64>;
pub type WrappedGaussian = entropy::WrappedGaussian<f64>;
pub type EntropyBits = entropy::EntropyBits<f64>;
pub type QuadratureResult = numerics::QuadratureResult<f64>;
pub type Matrix = linalg::Matrix<f64>;
pub type ChannelMatrix = precoder::ChannelMatrix<f64>;
pub type PrecoderSet = precoder::PrecoderSet<f64>;

pub type Modulus32 = modulo::Modulus<f32>;
pub type Matrix32 = linalg::Matrix<f32>;
