//! Channel factorization, ZF / MMSE THP filter synthesis and the successive modulo encoder.
//!
//! Users are rows of `H` (one receive antenna each), transmit antennas are columns. The
//! feedforward filter `F` is `N x M`, the feedback filter `B` is `M x M` unit-diagonal lower
//! triangular and the receivers apply per-user scalar gains `G_ii`.

use crate::bounds::NoiseModel;
use crate::error::{Error, Result};
use crate::linalg::{lq, Matrix};
use crate::modulo::{mod_t, Modulus};
use crate::scalar::Real;

/// `M x N` real channel, `M <= N`, all entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix<T> {
    h: Matrix<T>,
}

impl<T: Real> ChannelMatrix<T> {
    pub fn new(h: Matrix<T>) -> Result<Self> {
        if h.rows() == 0 || h.rows() > h.cols() {
            return Err(Error::Config(format!(
                "channel needs 1 <= users <= antennas, got {}x{}",
                h.rows(),
                h.cols()
            )));
        }
        if !h.is_finite() {
            return Err(Error::Config("channel has non-finite entries".into()));
        }
        Ok(Self { h })
    }

    /// Number of users `M`.
    pub fn users(&self) -> usize {
        self.h.rows()
    }

    /// Number of transmit antennas `N`.
    pub fn antennas(&self) -> usize {
        self.h.cols()
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.h
    }

    /// Channel with users re-ordered: user `k` of the result is user `perm[k]` here.
    /// The encoder cancels interference in row order, so this fixes the precoding order.
    pub fn reorder_users(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.users()];
        if perm.len() != self.users()
            || !perm
                .iter()
                .all(|&p| p < seen.len() && !std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Config(format!(
                "{perm:?} is not a permutation of 0..{}",
                self.users()
            )));
        }
        Self::new(self.h.permute_rows(perm))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecoderKind {
    ZeroForcing,
    Mmse,
}

/// THP filters for one channel. Immutable after synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet<T> {
    /// The channel the filters were built for.
    pub h: ChannelMatrix<T>,
    /// Lower-triangular factor of the (possibly augmented) channel.
    pub l: Matrix<T>,
    /// Orthonormal-row factor; `M x N` for ZF, `M x (N + M)` for MMSE.
    pub q: Matrix<T>,
    /// Feedforward filter, `N x M`.
    pub f: Matrix<T>,
    /// Feedback filter, unit diagonal, lower triangular.
    pub b: Matrix<T>,
    /// Receiver gains `G_ii`.
    pub g: Vec<T>,
    pub kind: PrecoderKind,
    /// Regularization `zeta`; 0 for ZF.
    pub regularization: T,
    /// Factor applied to `F` to restore `tr(F^T F) = M`; 1 for ZF.
    pub power_scale: T,
}

impl<T: Real> PrecoderSet<T> {
    pub fn users(&self) -> usize {
        self.h.users()
    }

    /// `diag(G)` as a matrix.
    pub fn g_matrix(&self) -> Matrix<T> {
        Matrix::diag(&self.g)
    }

    /// Receiver gains that normalize by the factor diagonal alone, `1/(beta L_ii)`, ignoring the
    /// MMSE bias of the desired-signal term. Equal to `g` for ZF.
    pub fn biased_gains(&self) -> Vec<T> {
        self.l
            .diagonal()
            .iter()
            .map(|&d| T::one() / (self.power_scale * d))
            .collect()
    }
}

/// `h = L Q` with positive `diag(L)`.
pub fn lq_decompose<T: Real>(h: &ChannelMatrix<T>) -> Result<(Matrix<T>, Matrix<T>)> {
    lq(h.matrix())
}

/// Zero-forcing THP: `F = Q^T`, `G = diag(1/L_ii)`, `B = G L`.
pub fn synthesize_zf<T: Real>(h: &ChannelMatrix<T>) -> Result<PrecoderSet<T>> {
    let (l, q) = lq_decompose(h)?;
    let g: Vec<T> = l.diagonal().iter().map(|&d| T::one() / d).collect();
    let mut b = Matrix::diag(&g).matmul(&l);
    for i in 0..b.rows() {
        b[(i, i)] = T::one();
    }
    Ok(PrecoderSet {
        h: h.clone(),
        f: q.transpose(),
        l,
        q,
        b,
        g,
        kind: PrecoderKind::ZeroForcing,
        regularization: T::zero(),
        power_scale: T::one(),
    })
}

/// MMSE THP with `zeta = M sigma_n^2 / p_t`, i.e. `M / SNR`.
pub fn synthesize_mmse<T: Real>(h: &ChannelMatrix<T>, noise: &NoiseModel<T>, m: &Modulus<T>) -> Result<PrecoderSet<T>> {
    let zeta = T::from_usize_lossy(h.users()) * noise.sigma_n2() / m.p_t();
    synthesize_regularized(h, zeta)
}

/// MMSE THP for an explicit regularization `zeta >= 0`.
///
/// Factorizes `[H | sqrt(zeta) I] = L Q`, takes `F` from the first `N` columns of `Q` (transposed)
/// and rescales it to unit power per stream. With `c_i = 1 - zeta/L_ii^2` the effective channel
/// `H F` has diagonal `beta L_ii c_i`; `G` inverts that so the desired symbol arrives with unit
/// gain, and `B` is the unit-diagonal lower part of `G H F`. What is left above the diagonal is the
/// residual interference. `zeta = 0` gives the ZF filters.
pub fn synthesize_regularized<T: Real>(h: &ChannelMatrix<T>, zeta: T) -> Result<PrecoderSet<T>> {
    if !(zeta >= T::zero() && zeta.is_finite()) {
        return Err(Error::Domain(format!(
            "regularization must be finite and >= 0, got {zeta}"
        )));
    }
    if zeta == T::zero() {
        return synthesize_zf(h);
    }
    let (mu, n) = (h.users(), h.antennas());
    let hm = h.matrix();
    let root = zeta.sqrt();
    let aug = Matrix::from_fn(mu, n + mu, |i, j| {
        if j < n {
            hm[(i, j)]
        } else if j - n == i {
            root
        } else {
            T::zero()
        }
    });
    let (l, q) = lq(&aug)?;
    let f0 = q.columns(0, n).transpose();
    let power = f0.frobenius().powi(2);
    let beta = (T::from_usize_lossy(mu) / power).sqrt();
    let f = f0.scale(beta);
    let g: Vec<T> = l
        .diagonal()
        .iter()
        .map(|&d| T::one() / (beta * d * (T::one() - zeta / (d * d))))
        .collect();
    let ghf = Matrix::diag(&g).matmul(&hm.matmul(&f));
    let b = Matrix::from_fn(mu, mu, |i, j| match j.cmp(&i) {
        std::cmp::Ordering::Less => ghf[(i, j)],
        std::cmp::Ordering::Equal => T::one(),
        std::cmp::Ordering::Greater => T::zero(),
    });
    Ok(PrecoderSet {
        h: h.clone(),
        l,
        q,
        f,
        b,
        g,
        kind: PrecoderKind::Mmse,
        regularization: zeta,
        power_scale: beta,
    })
}

/// Successive modulo encoder: `v_i = f_t(w_i - sum_{j<i} B_ij v_j)`, transmit `F v`.
/// Returns `(F v, v)`.
pub fn thp_encode<T: Real>(w: &[T], pset: &PrecoderSet<T>, m: &Modulus<T>) -> (Vec<T>, Vec<T>) {
    let ones = vec![T::one(); w.len()];
    let mut v = vec![T::zero(); w.len()];
    thp_encode_inflated_into(w, pset, &ones, m, &mut v);
    (pset.f.matvec(&v), v)
}

/// Encoder with per-user inflation: `v_i = f_t(w_i - a_i sum_{j<i} B_ij v_j)`.
/// Pairs with [`receiver_decode_inflated`]; all `a_i = 1` is [`thp_encode`].
pub fn thp_encode_inflated<T: Real>(w: &[T], pset: &PrecoderSet<T>, alphas: &[T], m: &Modulus<T>) -> (Vec<T>, Vec<T>) {
    let mut v = vec![T::zero(); w.len()];
    thp_encode_inflated_into(w, pset, alphas, m, &mut v);
    (pset.f.matvec(&v), v)
}

/// [`thp_encode_inflated`] writing only `v` into a caller buffer.
pub fn thp_encode_inflated_into<T: Real>(w: &[T], pset: &PrecoderSet<T>, alphas: &[T], m: &Modulus<T>, v: &mut [T]) {
    let mu = pset.users();
    assert!(
        w.len() == mu && alphas.len() == mu && v.len() == mu,
        "encoder length mismatch"
    );
    for i in 0..mu {
        let row = pset.b.row(i);
        let mut known = T::zero();
        for j in 0..i {
            known = known + row[j] * v[j];
        }
        v[i] = mod_t(w[i] - alphas[i] * known, m);
    }
}

/// `z_i = f_t(alpha G_ii y_i)`; users decode independently.
pub fn receiver_decode<T: Real>(y: &[T], pset: &PrecoderSet<T>, alpha: T, m: &Modulus<T>) -> Vec<T> {
    y.iter()
        .zip(&pset.g)
        .map(|(&yi, &gi)| mod_t(alpha * gi * yi, m))
        .collect()
}

/// `z_i = f_t(a_i G_ii y_i)`.
pub fn receiver_decode_inflated<T: Real>(y: &[T], pset: &PrecoderSet<T>, alphas: &[T], m: &Modulus<T>) -> Vec<T> {
    y.iter()
        .zip(&pset.g)
        .zip(alphas)
        .map(|((&yi, &gi), &a)| mod_t(a * gi * yi, m))
        .collect()
}

/// `G H F`.
pub fn effective_channel<T: Real>(pset: &PrecoderSet<T>) -> Matrix<T> {
    pset.g_matrix().matmul(&pset.h.matrix().matmul(&pset.f))
}

/// `G H F - B`: the interference the encoder cannot cancel. Zero for ZF, strictly upper
/// triangular for MMSE.
pub fn residual<T: Real>(pset: &PrecoderSet<T>) -> Matrix<T> {
    effective_channel(pset).sub(&pset.b)
}
