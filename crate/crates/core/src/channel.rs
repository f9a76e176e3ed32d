//! Quasi-static Rayleigh flat fading and the block transmission model
//! `Y = √(ρ/N)·C·H + W`.
//!
//! `H` is `N × N_r`; entry `(t, r)` is the gain from transmit antenna `t`
//! to receive antenna `r`, so receive antenna `r` observes `C·H[:, r]`.

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::codes::Codeword;
use crate::linalg::{CMatrix, C64};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("codeword is {codeword:?} but channel is {channel:?}; transmit antenna counts differ")]
    DimensionMismatch {
        codeword: (usize, usize),
        channel: (usize, usize),
    },
    #[error("noise matrix is {got:?}, expected {expected:?}")]
    NoiseShape {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("antenna counts must be at least 1")]
    NoAntennas,
}

/// One circularly-symmetric CN(0, variance) draw.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re * s, im * s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    h: CMatrix,
}

impl ChannelRealization {
    pub fn new(h: CMatrix) -> Result<Self, ChannelError> {
        if h.rows() == 0 || h.cols() == 0 {
            return Err(ChannelError::NoAntennas);
        }
        Ok(Self { h })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn tx_antennas(&self) -> usize {
        self.h.rows()
    }

    pub fn rx_antennas(&self) -> usize {
        self.h.cols()
    }

    /// Gain from transmit antenna `tx` to receive antenna `rx`.
    #[inline]
    pub fn gain(&self, tx: usize, rx: usize) -> C64 {
        self.h[(tx, rx)]
    }
}

/// i.i.d. CN(0,1) entries, drawn row-major.
pub fn sample_channel<R: Rng + ?Sized>(
    tx_antennas: usize,
    rx_antennas: usize,
    rng: &mut R,
) -> Result<ChannelRealization, ChannelError> {
    if tx_antennas == 0 || rx_antennas == 0 {
        return Err(ChannelError::NoAntennas);
    }
    let h = CMatrix::from_fn(tx_antennas, rx_antennas, |_, _| complex_gaussian(rng, 1.0));
    Ok(ChannelRealization { h })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedBlock {
    y: CMatrix,
    rho: f64,
    noise_power: f64,
}

impl ReceivedBlock {
    pub fn new(y: CMatrix, rho: f64, noise_power: f64) -> Self {
        Self { y, rho, noise_power }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.y
    }

    /// Linear SNR ρ.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn epochs(&self) -> usize {
        self.y.rows()
    }

    pub fn rx_antennas(&self) -> usize {
        self.y.cols()
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// `√(ρ/N)·C·H`, the noiseless part of the received block.
pub fn signal_part(c: &Codeword, h: &ChannelRealization, rho: f64) -> Result<CMatrix, ChannelError> {
    let cm = c.matrix();
    if cm.cols() != h.tx_antennas() {
        return Err(ChannelError::DimensionMismatch {
            codeword: cm.shape(),
            channel: h.matrix().shape(),
        });
    }
    let n = cm.cols() as f64;
    Ok(cm.matmul(h.matrix()).scale((rho / n).sqrt()))
}

/// `T × N_r` i.i.d. CN(0, N0) samples, drawn row-major.
pub fn sample_noise<R: Rng + ?Sized>(epochs: usize, rx: usize, noise_power: f64, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(epochs, rx, |_, _| complex_gaussian(rng, noise_power))
}

/// Transmission with an explicit noise matrix.
pub fn transmit_with_noise(
    c: &Codeword,
    h: &ChannelRealization,
    rho: f64,
    noise_power: f64,
    noise: &CMatrix,
) -> Result<ReceivedBlock, ChannelError> {
    let s = signal_part(c, h, rho)?;
    if noise.shape() != s.shape() {
        return Err(ChannelError::NoiseShape {
            expected: s.shape(),
            got: noise.shape(),
        });
    }
    Ok(ReceivedBlock::new(s.add(noise), rho, noise_power))
}

/// `Y = √(ρ/N)·C·H + W` with `W` i.i.d. CN(0, N0).
///
/// Noise is always drawn, even for `N0 = 0`, so the stream position after
/// the call does not depend on the noise power.
pub fn transmit<R: Rng + ?Sized>(
    c: &Codeword,
    h: &ChannelRealization,
    rho: f64,
    noise_power: f64,
    rng: &mut R,
) -> Result<ReceivedBlock, ChannelError> {
    let (t, _) = c.matrix().shape();
    if c.matrix().cols() != h.tx_antennas() {
        return Err(ChannelError::DimensionMismatch {
            codeword: c.matrix().shape(),
            channel: h.matrix().shape(),
        });
    }
    let noise = sample_noise(t, h.rx_antennas(), noise_power, rng);
    transmit_with_noise(c, h, rho, noise_power, &noise)
}
