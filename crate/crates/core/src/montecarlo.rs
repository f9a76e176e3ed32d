//! Deterministic symbol-error-rate estimation over SNR sweeps.
//!
//! Every trial draws from its own ChaCha8 stream: the key is derived from
//! `(seed, snr_db)` and the stream id is the trial index. Trial outcomes
//! therefore do not depend on which worker runs them, and the integer
//! tallies reduce to the same totals for any thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{db_to_linear, sample_channel, transmit, ChannelError};
use crate::codes::SchemeDescriptor;
use crate::constellation::Constellation;
use crate::decoders::{decode, exhaustive_search_size, DecodeError, DecoderKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("trials must be at least 1")]
    NoTrials,
    #[error("SNR grid is empty")]
    EmptyGrid,
    #[error("SNR grid must be strictly increasing")]
    GridNotIncreasing,
    #[error("receive antenna count must be at least 1")]
    NoRxAntennas,
    #[error("noise power must be finite and non-negative, got {0}")]
    InvalidNoisePower(f64),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("could not start worker pool: {0}")]
    ThreadPool(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub descriptor: SchemeDescriptor,
    pub constellation: Constellation,
    pub snr_db: Vec<f64>,
    /// Blocks per SNR point.
    pub trials: u64,
    pub seed: u64,
    pub rx_antennas: usize,
    pub decoder: DecoderKind,
    /// Noise variance N0; ρ is the swept quantity.
    pub noise_power: f64,
}

impl SimConfig {
    /// Ten thousand trials, seed 1, `N_r = N`, conditional decoding, `N0 = 1`.
    pub fn new(descriptor: SchemeDescriptor, constellation: Constellation, snr_db: Vec<f64>) -> Self {
        Self {
            rx_antennas: descriptor.tx_antennas(),
            descriptor,
            constellation,
            snr_db,
            trials: 10_000,
            seed: 1,
            decoder: DecoderKind::Conditional,
            noise_power: 1.0,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.trials == 0 {
            return Err(SimError::NoTrials);
        }
        if self.snr_db.is_empty() {
            return Err(SimError::EmptyGrid);
        }
        if self.snr_db.windows(2).any(|w| !(w[1] > w[0])) || self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(SimError::GridNotIncreasing);
        }
        if self.rx_antennas == 0 {
            return Err(SimError::NoRxAntennas);
        }
        if !(self.noise_power >= 0.0 && self.noise_power.is_finite()) {
            return Err(SimError::InvalidNoisePower(self.noise_power));
        }
        if self.decoder == DecoderKind::Exhaustive {
            exhaustive_search_size(&self.descriptor, &self.constellation)?;
        }
        Ok(())
    }
}

/// Evenly spaced grid `start, start+step, …` up to `stop` inclusive.
pub fn snr_grid(start: f64, stop: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || stop < start {
        return Vec::new();
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| start + k as f64 * step).collect()
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Random stream for one trial.
pub fn trial_rng(seed: u64, snr_db: f64, trial: u64) -> ChaCha8Rng {
    let key = splitmix64(seed ^ splitmix64(snr_db.to_bits()));
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(trial);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialOutcome {
    /// Symbol positions where the decision differs from the transmitted symbol.
    pub errors: usize,
    /// Block flagged undecodable (dead channel subset).
    pub erased: bool,
}

/// One block: symbols, channel and noise drawn in that order from the
/// trial's stream, then encode, transmit, decode and count.
pub fn run_trial(config: &SimConfig, snr_db: f64, trial: u64) -> Result<TrialOutcome, SimError> {
    let mut rng = trial_rng(config.seed, snr_db, trial);
    let c = &config.constellation;
    let desc = &config.descriptor;
    let sent: Vec<usize> = (0..desc.symbols()).map(|_| c.sample_index(&mut rng)).collect();
    let symbols: Vec<_> = sent.iter().map(|&i| c.points()[i]).collect();
    let h = sample_channel(desc.tx_antennas(), config.rx_antennas, &mut rng)?;
    let cw = desc.encode(&symbols).expect("symbol count matches descriptor");
    let rx = transmit(&cw, &h, db_to_linear(snr_db), config.noise_power, &mut rng)?;
    match decode(config.decoder, &rx, &h, desc, c) {
        Ok(d) => Ok(TrialOutcome {
            errors: sent.iter().zip(&d.indices).filter(|(a, b)| a != b).count(),
            erased: false,
        }),
        Err(e) if e.is_erasure() => Ok(TrialOutcome {
            errors: 0,
            erased: true,
        }),
        Err(e) => Err(e.into()),
    }
}

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
struct Tally {
    errors: u64,
    erasures: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;

    fn add(self, rhs: Tally) -> Tally {
        Tally {
            errors: self.errors + rhs.errors,
            erasures: self.erasures + rhs.erasures,
        }
    }
}

/// One measured operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SerRecord {
    pub scheme: String,
    pub modulation: String,
    pub rotation_deg: f64,
    pub snr_db: f64,
    pub trials: u64,
    pub symbol_errors: u64,
    pub erasures: u64,
    /// `symbol_errors / ((trials − erasures)·K)`; 1 when every block was erased.
    pub ser: f64,
    /// `(1 − ser)·R·log₂Q` in bits/s/Hz.
    pub eta: f64,
    pub seed: u64,
}

impl SerRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn from_counts(
        desc: &SchemeDescriptor,
        c: &Constellation,
        snr_db: f64,
        trials: u64,
        symbol_errors: u64,
        erasures: u64,
        seed: u64,
    ) -> Self {
        let decided = (trials - erasures) * desc.symbols() as u64;
        let ser = if decided == 0 {
            1.0
        } else {
            symbol_errors as f64 / decided as f64
        };
        Self {
            scheme: desc.name().to_string(),
            modulation: c.name().to_string(),
            rotation_deg: c.rotation_deg(),
            snr_db,
            trials,
            symbol_errors,
            erasures,
            ser,
            eta: (1.0 - ser) * desc.rate_f64() * c.bits_per_symbol(),
            seed,
        }
    }

    /// Number of symbol decisions behind `ser`.
    pub fn decisions(&self, symbols_per_block: usize) -> u64 {
        (self.trials - self.erasures) * symbols_per_block as u64
    }

    /// Binomial standard error of `ser`.
    pub fn std_error(&self, symbols_per_block: usize) -> f64 {
        let n = self.decisions(symbols_per_block) as f64;
        if n == 0.0 {
            return 0.0;
        }
        (self.ser * (1.0 - self.ser) / n).sqrt()
    }
}

/// Runs all trials of one SNR point on the current rayon pool.
pub fn run_point(config: &SimConfig, snr_db: f64) -> Result<SerRecord, SimError> {
    config.validate()?;
    let tally = (0..config.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(config, snr_db, t).map(|o| Tally {
                errors: o.errors as u64,
                erasures: o.erased as u64,
            })
        })
        .try_reduce(Tally::default, |a, b| Ok(a + b))?;
    Ok(SerRecord::from_counts(
        &config.descriptor,
        &config.constellation,
        snr_db,
        config.trials,
        tally.errors,
        tally.erasures,
        config.seed,
    ))
}

/// One record per grid point, in grid order.
pub fn sweep(config: &SimConfig) -> Result<Vec<SerRecord>, SimError> {
    config.validate()?;
    config.snr_db.iter().map(|&s| run_point(config, s)).collect()
}

/// [`sweep`] on a dedicated pool of `threads` workers (`None`: rayon default).
pub fn sweep_with_threads(config: &SimConfig, threads: Option<usize>) -> Result<Vec<SerRecord>, SimError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| SimError::ThreadPool(e.to_string()))?;
    pool.install(|| sweep(config))
}

/// SNR (dB) at which the SER curve crosses `target`, by linear
/// interpolation of `log10(ser)` between the bracketing grid points.
/// `None` if the curve never reaches `target`.
pub fn snr_at_ser(records: &[SerRecord], target: f64) -> Option<f64> {
    if let Some(first) = records.first() {
        if first.ser <= target {
            return Some(first.snr_db);
        }
    }
    records.windows(2).find_map(|w| {
        let (a, b) = (&w[0], &w[1]);
        if a.ser > target && b.ser <= target {
            if b.ser <= 0.0 {
                // No errors at the upper point: fall back to linear SER.
                let f = (a.ser - target) / (a.ser - b.ser);
                return Some(a.snr_db + f * (b.snr_db - a.snr_db));
            }
            let (la, lb, lt) = (a.ser.log10(), b.ser.log10(), target.log10());
            let f = (la - lt) / (la - lb);
            Some(a.snr_db + f * (b.snr_db - a.snr_db))
        } else {
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::Scheme;
    use crate::constellation::build_qam;

    fn config(scheme: Scheme, order: usize) -> SimConfig {
        let mut c = SimConfig::new(SchemeDescriptor::new(scheme), build_qam(order).unwrap(), vec![10.0]);
        c.trials = 200;
        c
    }

    #[test]
    fn grid_construction() {
        assert_eq!(snr_grid(0.0, 24.0, 2.0).len(), 13);
        assert_eq!(snr_grid(0.0, 1.0, 0.25), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(snr_grid(0.0, 10.0, 0.0).is_empty());
        assert_eq!(snr_grid(5.0, 5.0, 1.0), vec![5.0]);
    }

    #[test]
    fn validation() {
        let mut c = config(Scheme::Jag4x4, 4);
        assert!(c.validate().is_ok());
        c.trials = 0;
        assert_eq!(c.validate(), Err(SimError::NoTrials));
        let mut c = config(Scheme::Jag4x4, 4);
        c.snr_db = vec![3.0, 3.0];
        assert_eq!(c.validate(), Err(SimError::GridNotIncreasing));
        let mut c = config(Scheme::Jag4x4, 16);
        c.decoder = DecoderKind::Exhaustive;
        assert!(matches!(c.validate(), Err(SimError::Decode(DecodeError::SearchSpaceTooLarge { .. }))));
    }

    #[test]
    fn noiseless_trials_have_no_errors() {
        for scheme in Scheme::ALL {
            let mut c = config(scheme, 16);
            c.noise_power = 0.0;
            for t in 0..50 {
                let o = run_trial(&c, 10.0, t).unwrap();
                assert_eq!(o, TrialOutcome { errors: 0, erased: false }, "{scheme}");
            }
        }
    }

    #[test]
    fn trial_is_reproducible_and_bounded() {
        let c = config(Scheme::Jag4x3, 16);
        for t in 0..100 {
            let a = run_trial(&c, 0.0, t).unwrap();
            let b = run_trial(&c, 0.0, t).unwrap();
            assert_eq!(a, b);
            assert!(a.errors <= 8);
        }
    }

    #[test]
    fn record_invariants() {
        let c = config(Scheme::Jag4x4, 4);
        let r = run_point(&c, 4.0).unwrap();
        assert_eq!(r.trials, 200);
        assert!((r.ser - r.symbol_errors as f64 / (200.0 * 8.0)).abs() < 1e-15);
        assert!((r.eta - (1.0 - r.ser) * 2.0 * 2.0).abs() < 1e-12);
        assert!(r.eta <= 4.0);

        let perfect = SerRecord::from_counts(&c.descriptor, &c.constellation, 30.0, 10, 0, 0, 1);
        assert_eq!(perfect.eta, 4.0);
    }

    #[test]
    fn single_point_sweep() {
        let c = config(Scheme::Alamouti, 4);
        assert_eq!(sweep(&c).unwrap().len(), 1);
    }

    #[test]
    fn interpolated_crossing() {
        let mk = |snr: f64, ser: f64| SerRecord {
            scheme: "x".into(),
            modulation: "qam4".into(),
            rotation_deg: 0.0,
            snr_db: snr,
            trials: 1,
            symbol_errors: 0,
            erasures: 0,
            ser,
            eta: 0.0,
            seed: 0,
        };
        let recs = vec![mk(0.0, 1e-1), mk(10.0, 1e-3)];
        assert!((snr_at_ser(&recs, 1e-2).unwrap() - 5.0).abs() < 1e-12);
        assert_eq!(snr_at_ser(&recs, 1e-4), None);
    }
}
