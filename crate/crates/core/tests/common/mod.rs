#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use stbclab::channel::{db_to_linear, sample_channel, transmit, ChannelRealization, ReceivedBlock};
use stbclab::codes::pair_term;
use stbclab::decoders::{angle_index, SufficientStatistics};
use stbclab::{Constellation, SchemeDescriptor, C64};

/// Random block with `N_r = N`: transmitted indices, channel, received block.
pub fn noisy_instance(
    d: &SchemeDescriptor,
    c: &Constellation,
    snr_db: f64,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, ChannelRealization, ReceivedBlock) {
    let idx: Vec<usize> = (0..d.symbols()).map(|_| c.sample_index(rng)).collect();
    let x: Vec<C64> = idx.iter().map(|&i| c.points()[i]).collect();
    let h = sample_channel(d.tx_antennas(), d.tx_antennas(), rng).unwrap();
    let rx = transmit(&d.encode(&x).unwrap(), &h, db_to_linear(snr_db), 1.0, rng).unwrap();
    (idx, h, rx)
}

/// Per-pair argmin of `|β − model(J(x1, x2))|²` over all `Q²` candidates.
pub fn joint_pair_oracle(stats: &SufficientStatistics, c: &Constellation) -> Vec<usize> {
    let mut out = Vec::with_capacity(8);
    for pair in 1..=4 {
        let alpha = stats.angles.by_index(angle_index(pair));
        let mut best = (f64::INFINITY, 0, 0);
        for (i1, &x1) in c.points().iter().enumerate() {
            for (i2, &x2) in c.points().iter().enumerate() {
                let cost = (stats.beta[pair - 1] - stats.model(pair, pair_term(x1, x2, alpha))).norm_sqr();
                if cost < best.0 {
                    best = (cost, i1, i2);
                }
            }
        }
        out.push(best.1);
        out.push(best.2);
    }
    out
}

/// Two 8-symbol blocks that differ in both halves.
pub fn distinct_blocks(c: &Constellation, rng: &mut ChaCha8Rng) -> ([C64; 8], [C64; 8]) {
    loop {
        let x: [C64; 8] = std::array::from_fn(|_| c.points()[rng.random_range(0..c.order())]);
        let u: [C64; 8] = std::array::from_fn(|_| c.points()[rng.random_range(0..c.order())]);
        if x[..4] != u[..4] && x[4..] != u[4..] {
            return (x, u);
        }
    }
}
