//! Detection for every implemented code.
//!
//! The rate-2 codes use the pairwise route: per receive antenna the block
//! is rewritten as a 2×2 virtual channel acting on two pair terms
//! (EVCM), equalized by its matched matrix, averaged over receive antennas
//! into one statistic per symbol pair, and decoded by conditional ML with
//! `Q` cost evaluations per pair.
//!
//! Pairs are numbered `i = 1..4` (pair `i` carries `x_{2i-1}, x_{2i}`).
//! Pair `i` uses channel-energy sum `Ψ_m` and angle `α_j` with
//! `m = 1` for `i ∈ {1,2}`, `m = 2` for `i ∈ {3,4}`, and `j = 1` for odd
//! `i`, `j = 2` for even `i`.
//!
//! All argmin searches keep the first minimum in their documented
//! enumeration order.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::channel::{ChannelRealization, ReceivedBlock};
use crate::codes::{PairAngles, Scheme, SchemeDescriptor};
use crate::constellation::Constellation;
use crate::linalg::{CMatrix, C64, ZERO};

/// Enumeration limit `Q^K` (or `Q^|group|`) for brute-force ML.
pub const SEARCH_GUARD: u64 = 10_000_000;

/// Channel-energy sums at or below this are treated as a dead channel subset.
pub const DEGENERATE_ENERGY: f64 = 1e-30;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("channel energy for pair group {group} is zero; block erased")]
    DegenerateChannel { group: usize },
    #[error("search space of {size} candidates exceeds the limit of {limit}")]
    SearchSpaceTooLarge { size: u64, limit: u64 },
    #[error("{0} is not handled by this decoder")]
    UnsupportedScheme(Scheme),
    #[error("received block is {received:?}, expected {expected:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        received: (usize, usize),
    },
    #[error("linear SNR must be positive, got {0}")]
    InvalidSnr(f64),
}

impl DecodeError {
    pub fn is_erasure(&self) -> bool {
        matches!(self, DecodeError::DegenerateChannel { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    /// Pairwise conditional ML for the rate-2 codes, structured decoders otherwise.
    Conditional,
    /// Brute-force ML over all codewords, subject to [`SEARCH_GUARD`].
    Exhaustive,
}

impl DecoderKind {
    pub fn token(self) -> &'static str {
        match self {
            DecoderKind::Conditional => "conditional",
            DecoderKind::Exhaustive => "exhaustive",
        }
    }
}

impl fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for DecoderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conditional" => Ok(DecoderKind::Conditional),
            "exhaustive" => Ok(DecoderKind::Exhaustive),
            other => Err(format!("unknown decoder `{other}`; expected conditional or exhaustive")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedBlock {
    /// Constellation indices, one per transmitted symbol.
    pub indices: Vec<usize>,
    pub symbols: Vec<C64>,
    /// Minimum cost per jointly decoded group (per pair for the rate-2 codes).
    pub cost: Vec<f64>,
    /// Number of candidate cost evaluations performed.
    pub evaluations: usize,
}

impl DecodedBlock {
    fn with_len(k: usize) -> Self {
        Self {
            indices: vec![0; k],
            symbols: vec![ZERO; k],
            cost: Vec::new(),
            evaluations: 0,
        }
    }

    fn set(&mut self, pos: usize, c: &Constellation, idx: usize) {
        self.indices[pos] = idx;
        self.symbols[pos] = c.points()[idx];
    }
}

// ---------------------------------------------------------------------------
// EVCM equalization

/// Pair index `i ∈ 1..=4` to energy index `m`.
pub fn energy_index(pair: usize) -> usize {
    match pair {
        1 | 2 => 1,
        3 | 4 => 2,
        _ => panic!("pair index {pair} out of range"),
    }
}

/// Pair index `i ∈ 1..=4` to angle index `j`.
pub fn angle_index(pair: usize) -> usize {
    match pair {
        1 | 3 => 1,
        2 | 4 => 2,
        _ => panic!("pair index {pair} out of range"),
    }
}

/// Transmit antennas `(a, b)` that carry pair block 1 (epochs 0–1) and
/// block 2 (epochs 2–3).
pub fn block_antennas(scheme: Scheme) -> Option<[(usize, usize); 2]> {
    match scheme {
        Scheme::Jag4x3 => Some([(1, 2), (0, 1)]),
        Scheme::Jag4x4 => Some([(0, 1), (2, 3)]),
        _ => None,
    }
}

/// Virtual channel `[[h_a, h_b], [h_b*, -h_a*]]` seen by `(z¹, z²*)`.
pub fn evcm_block(ha: C64, hb: C64) -> [[C64; 2]; 2] {
    [[ha, hb], [hb.conj(), -ha.conj()]]
}

/// Matched equalizer `[[h_a*, h_b], [h_b*, -h_a]]`; times [`evcm_block`]
/// gives `(|h_a|² + |h_b|²)·I₂`.
pub fn evcm_equalizer(ha: C64, hb: C64) -> [[C64; 2]; 2] {
    [[ha.conj(), hb], [hb.conj(), -ha]]
}

/// Block-diagonal 4×4 virtual channel of the 4×4 code at receive antenna `rx`.
pub fn evcm_matrix_p4(h: &ChannelRealization, rx: usize) -> CMatrix {
    block_diag(evcm_block(h.gain(0, rx), h.gain(1, rx)), evcm_block(h.gain(2, rx), h.gain(3, rx)))
}

pub fn evcm_equalizer_p4(h: &ChannelRealization, rx: usize) -> CMatrix {
    block_diag(
        evcm_equalizer(h.gain(0, rx), h.gain(1, rx)),
        evcm_equalizer(h.gain(2, rx), h.gain(3, rx)),
    )
}

fn block_diag(a: [[C64; 2]; 2], b: [[C64; 2]; 2]) -> CMatrix {
    CMatrix::from_fn(4, 4, |r, c| match (r / 2, c / 2) {
        (0, 0) => a[r][c],
        (1, 1) => b[r - 2][c - 2],
        _ => ZERO,
    })
}

/// Per-receive-antenna equalized outputs of a rate-2 block.
#[derive(Debug, Clone, PartialEq)]
pub struct EqualizedOutputs {
    scheme: Scheme,
    rho: f64,
    /// `q[i] = [q¹ᵢ, q²ᵢ, q³ᵢ, q⁴ᵢ]` for receive antenna `i`.
    pub q: Vec<[C64; 4]>,
    /// `energy[i] = [|h_a|²+|h_b|² for block 1, same for block 2]`.
    pub energy: Vec<[f64; 2]>,
}

impl EqualizedOutputs {
    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn rx_antennas(&self) -> usize {
        self.q.len()
    }
}

fn check_shape(rx: &ReceivedBlock, h: &ChannelRealization, scheme: Scheme) -> Result<(), DecodeError> {
    let expected = (scheme.epochs(), h.rx_antennas());
    if h.tx_antennas() != scheme.tx_antennas() || rx.matrix().shape() != expected {
        return Err(DecodeError::DimensionMismatch {
            expected,
            received: rx.matrix().shape(),
        });
    }
    if !(rx.rho() > 0.0) {
        return Err(DecodeError::InvalidSnr(rx.rho()));
    }
    Ok(())
}

fn evcm_equalize(
    scheme: Scheme,
    rx: &ReceivedBlock,
    h: &ChannelRealization,
) -> Result<EqualizedOutputs, DecodeError> {
    check_shape(rx, h, scheme)?;
    let blocks = block_antennas(scheme).ok_or(DecodeError::UnsupportedScheme(scheme))?;
    let y = rx.matrix();
    let nr = h.rx_antennas();
    let mut q = Vec::with_capacity(nr);
    let mut energy = Vec::with_capacity(nr);
    for i in 0..nr {
        let mut qi = [ZERO; 4];
        let mut ei = [0.0; 2];
        for (b, &(ta, tb)) in blocks.iter().enumerate() {
            let (ha, hb) = (h.gain(ta, i), h.gain(tb, i));
            let w = evcm_equalizer(ha, hb);
            let z1 = y[(2 * b, i)];
            let z2c = y[(2 * b + 1, i)].conj();
            qi[2 * b] = w[0][0] * z1 + w[0][1] * z2c;
            qi[2 * b + 1] = w[1][0] * z1 + w[1][1] * z2c;
            ei[b] = ha.norm_sqr() + hb.norm_sqr();
        }
        q.push(qi);
        energy.push(ei);
    }
    Ok(EqualizedOutputs {
        scheme,
        rho: rx.rho(),
        q,
        energy,
    })
}

/// EVCM equalization for the 4×3 rate-2 code: block 1 sees antennas
/// (1, 2), block 2 sees antennas (0, 1).
pub fn evcm_equalize_p3(rx: &ReceivedBlock, h: &ChannelRealization) -> Result<EqualizedOutputs, DecodeError> {
    evcm_equalize(Scheme::Jag4x3, rx, h)
}

/// EVCM equalization for the 4×4 rate-2 code: blocks on antennas (0, 1) and (2, 3).
pub fn evcm_equalize_p4(rx: &ReceivedBlock, h: &ChannelRealization) -> Result<EqualizedOutputs, DecodeError> {
    evcm_equalize(Scheme::Jag4x4, rx, h)
}

// ---------------------------------------------------------------------------
// Sufficient statistics and conditional ML

#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStatistics {
    pub scheme: Scheme,
    /// `βⁱ = (1/N_r)·Σ_l qⁱ_l`, `i = 1..4`.
    pub beta: [C64; 4],
    /// `[Ψ₁, Ψ₂]`.
    pub psi: [f64; 2],
    pub rho: f64,
    /// `√(ρ/N)/N_r`; `√(ρ/27)` for 4×3 with three receive antennas, `√(ρ/64)` for 4×4 with four.
    pub scale: f64,
    pub angles: PairAngles,
}

impl SufficientStatistics {
    /// Noiseless value of `βⁱ` for pair term `J`.
    pub fn model(&self, pair: usize, j_term: C64) -> C64 {
        j_term * (self.scale * self.psi[energy_index(pair) - 1])
    }
}

pub fn sufficient_stats(
    q: &EqualizedOutputs,
    angles: PairAngles,
) -> SufficientStatistics {
    let nr = q.rx_antennas() as f64;
    let mut beta = [ZERO; 4];
    let mut psi = [0.0; 2];
    for (qi, ei) in q.q.iter().zip(&q.energy) {
        for (b, v) in beta.iter_mut().zip(qi) {
            *b += v;
        }
        psi[0] += ei[0];
        psi[1] += ei[1];
    }
    for b in &mut beta {
        *b /= nr;
    }
    let n = q.scheme.tx_antennas() as f64;
    SufficientStatistics {
        scheme: q.scheme,
        beta,
        psi,
        rho: q.rho,
        scale: (q.rho / n).sqrt() / nr,
        angles,
    }
}

/// Conditional ML over the four pairs: for each candidate `c₂` of the even
/// symbol, slice the odd symbol from the intermediate signal and keep the
/// pair with the smallest `τ`. Exactly `Q` cost evaluations per pair.
pub fn conditional_ml_decode(
    stats: &SufficientStatistics,
    c: &Constellation,
) -> Result<DecodedBlock, DecodeError> {
    let mut out = DecodedBlock::with_len(8);
    out.cost = Vec::with_capacity(4);
    for pair in 1..=4 {
        let m = energy_index(pair);
        let psi = stats.psi[m - 1];
        if !(psi > DEGENERATE_ENERGY) {
            return Err(DecodeError::DegenerateChannel { group: pair });
        }
        let (sin_a, cos_a) = stats.angles.by_index(angle_index(pair)).sin_cos();
        let beta = stats.beta[pair - 1];
        let gain = stats.scale * psi;
        let odd_gain = gain * sin_a;

        let mut best = (f64::INFINITY, 0usize, 0usize);
        for (k2, &c2) in c.points().iter().enumerate() {
            let even_part = -c2.conj() * cos_a;
            let intermediate = beta - gain * even_part;
            let (k1, x1) = c.slice_nearest(intermediate / odd_gain);
            let tau = (beta - gain * (x1 * sin_a + even_part)).norm_sqr();
            out.evaluations += 1;
            if tau < best.0 {
                best = (tau, k1, k2);
            }
        }
        out.set(2 * (pair - 1), c, best.1);
        out.set(2 * (pair - 1) + 1, c, best.2);
        out.cost.push(best.0);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Brute-force ML in the received-signal domain

/// Per-symbol signal contributions `√(ρ/N)·C(p·e_k)·H` for every symbol
/// slot `k` and constellation point `p`. Every encoder is real-linear, so
/// the noiseless received block is the sum of one contribution per slot.
struct Contributions {
    /// `[k][q]` → flattened `T × N_r` block.
    table: Vec<Vec<Vec<C64>>>,
}

impl Contributions {
    fn new(
        desc: &SchemeDescriptor,
        c: &Constellation,
        h: &ChannelRealization,
        rho: f64,
    ) -> Self {
        let k = desc.symbols();
        let gain = (rho / desc.tx_antennas() as f64).sqrt();
        let mut x = vec![ZERO; k];
        let table = (0..k)
            .map(|slot| {
                c.points()
                    .iter()
                    .map(|&p| {
                        x[slot] = p;
                        let cw = desc.encode(&x).expect("slot count matches descriptor");
                        x[slot] = ZERO;
                        cw.matrix().matmul(h.matrix()).scale(gain).as_slice().to_vec()
                    })
                    .collect()
            })
            .collect();
        Self { table }
    }

    /// Brute-force search over the slots in `group` with every other slot
    /// zero. Mixed-radix order, first slot of the group least significant.
    fn search(&self, y: &[C64], group: &[usize], q: usize, evaluations: &mut usize) -> (f64, Vec<usize>) {
        let mut digits = vec![0usize; group.len()];
        let mut best = (f64::INFINITY, digits.clone());
        let mut residual = vec![ZERO; y.len()];
        loop {
            residual.copy_from_slice(y);
            for (slot, &d) in group.iter().zip(&digits) {
                for (r, v) in residual.iter_mut().zip(&self.table[*slot][d]) {
                    *r -= v;
                }
            }
            let cost: f64 = residual.iter().map(|z| z.norm_sqr()).sum();
            *evaluations += 1;
            if cost < best.0 {
                best = (cost, digits.clone());
            }
            // Advance the odometer.
            let mut pos = 0;
            loop {
                if pos == digits.len() {
                    return best;
                }
                digits[pos] += 1;
                if digits[pos] < q {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
        }
    }
}

/// Symbol groups whose ML metrics separate: cross terms between
/// different groups vanish for every channel.
pub fn ml_groups(scheme: Scheme) -> Vec<Vec<usize>> {
    match scheme {
        Scheme::Alamouti => vec![vec![0], vec![1]],
        Scheme::Jafarkhani => vec![vec![0, 3], vec![1, 2]],
        Scheme::Ciod4x4 | Scheme::Aciod4x3 => vec![vec![0], vec![1], vec![2], vec![3]],
        Scheme::Ozbek4x3 => vec![vec![0, 1, 2, 3]],
        Scheme::Jag4x3 | Scheme::Jag4x4 => vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]],
    }
}

fn checked_size(q: usize, k: usize) -> Result<u64, DecodeError> {
    let size = (q as u64).checked_pow(k as u32).unwrap_or(u64::MAX);
    if size > SEARCH_GUARD {
        return Err(DecodeError::SearchSpaceTooLarge {
            size,
            limit: SEARCH_GUARD,
        });
    }
    Ok(size)
}

fn grouped_ml(
    rx: &ReceivedBlock,
    h: &ChannelRealization,
    desc: &SchemeDescriptor,
    c: &Constellation,
    groups: &[Vec<usize>],
) -> Result<DecodedBlock, DecodeError> {
    check_shape(rx, h, desc.scheme())?;
    let q = c.order();
    for g in groups {
        checked_size(q, g.len())?;
    }
    let table = Contributions::new(desc, c, h, rx.rho());
    let y = rx.matrix().as_slice();
    let mut out = DecodedBlock::with_len(desc.symbols());
    for g in groups {
        let (cost, digits) = table.search(y, g, q, &mut out.evaluations);
        for (&slot, &d) in g.iter().zip(&digits) {
            out.set(slot, c, d);
        }
        out.cost.push(cost);
    }
    Ok(out)
}

/// `argmin ‖Y − √(ρ/N)·C·H‖²_F` over all `Q^K` codewords. Enumeration is
/// mixed radix with `x1` least significant.
pub fn exhaustive_ml_decode(
    rx: &ReceivedBlock,
    h: &ChannelRealization,
    desc: &SchemeDescriptor,
    c: &Constellation,
) -> Result<DecodedBlock, DecodeError> {
    let all: Vec<usize> = (0..desc.symbols()).collect();
    grouped_ml(rx, h, desc, c, &[all])
}

/// Brute-force ML split over the independent groups of [`ml_groups`].
pub fn factorized_ml_decode(
    rx: &ReceivedBlock,
    h: &ChannelRealization,
    desc: &SchemeDescriptor,
    c: &Constellation,
) -> Result<DecodedBlock, DecodeError> {
    grouped_ml(rx, h, desc, c, &ml_groups(desc.scheme()))
}

// ---------------------------------------------------------------------------
// Structured decoders for the comparison codes

/// Alamouti combining over one 2×2 block on transmit antennas `(a, b)`
/// at epochs `(t, t+1)`. Returns `(ũ1, ũ2, E)` with `ũ = s·E·u + noise`.
fn alamouti_combine(
    y: &CMatrix,
    h: &ChannelRealization,
    t: usize,
    (a, b): (usize, usize),
    b_present: bool,
) -> (C64, C64, f64) {
    let mut u1 = ZERO;
    let mut u2 = ZERO;
    let mut e = 0.0;
    for r in 0..h.rx_antennas() {
        let ha = h.gain(a, r);
        let hb = if b_present { h.gain(b, r) } else { ZERO };
        let y0 = y[(t, r)];
        let y1c = y[(t + 1, r)].conj();
        u1 += ha.conj() * y0 + hb * y1c;
        u2 += hb.conj() * y0 - ha * y1c;
        e += ha.norm_sqr() + hb.norm_sqr();
    }
    (u1, u2, e)
}

fn decode_alamouti(
    rx: &ReceivedBlock,
    h: &ChannelRealization,
    c: &Constellation,
) -> Result<DecodedBlock, DecodeError> {
    let (u1, u2, e) = alamouti_combine(rx.matrix(), h, 0, (0, 1), true);
    if !(e > DEGENERATE_ENERGY) {
        return Err(DecodeError::DegenerateChannel { group: 1 });
    }
    let g = (rx.rho() / 2.0).sqrt() * e;
    let mut out = DecodedBlock::with_len(2);
    for (pos, u) in [u1, u2].into_iter().enumerate() {
        let z = u / g;
        let (idx, p) = c.slice_nearest(z);
        out.set(pos, c, idx);
        out.cost.push((z - p).norm_sqr());
        out.evaluations += c.order();
    }
    Ok(out)
}

/// Coordinate de-interleaved single-symbol detection. The in-phase part
/// of `x_k` is observed through one Alamouti block and its quadrature part
/// through the other, each weighted by the inverse of its channel energy.
fn decode_ciod(
    rx: &ReceivedBlock,
    h: &ChannelRealization,
    c: &Constellation,
    asymmetric: bool,
) -> Result<DecodedBlock, DecodeError> {
    let y = rx.matrix();
    let s = (rx.rho() / h.tx_antennas() as f64).sqrt();
    let (u1, u2, e1) = alamouti_combine(y, h, 0, (0, 1), true);
    let (u3, u4, e2) = alamouti_combine(y, h, 2, (2, 3), !asymmetric);
    for (group, e) in [(1, e1), (2, e2)] {
        if !(e > DEGENERATE_ENERGY) {
            return Err(DecodeError::DegenerateChannel { group });
        }
    }
    // (in-phase observation, its energy, quadrature observation, its energy)
    let routes = [
        (u1.re, e1, u3.im, e2),
        (u2.re, e1, u4.im, e2),
        (u3.re, e2, u1.im, e1),
        (u4.re, e2, u2.im, e1),
    ];
    let mut out = DecodedBlock::with_len(4);
    for (k, &(re_obs, re_e, im_obs, im_e)) in routes.iter().enumerate() {
        let mut best = (f64::INFINITY, 0);
        for (idx, p) in c.points().iter().enumerate() {
            let dr = re_obs - s * re_e * p.re;
            let di = im_obs - s * im_e * p.im;
            let cost = dr * dr / re_e + di * di / im_e;
            out.evaluations += 1;
            if cost < best.0 {
                best = (cost, idx);
            }
        }
        out.set(k, c, best.1);
        out.cost.push(best.0);
    }
    Ok(out)
}

/// Structured decoders for the comparison codes: Alamouti combining,
/// Jafarkhani pairwise ML, CIOD/ACIOD single-symbol detection and
/// exhaustive ML for the Ozbek code.
pub fn decode_reference(
    rx: &ReceivedBlock,
    h: &ChannelRealization,
    desc: &SchemeDescriptor,
    c: &Constellation,
) -> Result<DecodedBlock, DecodeError> {
    let scheme = desc.scheme();
    check_shape(rx, h, scheme)?;
    match scheme {
        Scheme::Alamouti => decode_alamouti(rx, h, c),
        Scheme::Jafarkhani => factorized_ml_decode(rx, h, desc, c),
        Scheme::Ciod4x4 => decode_ciod(rx, h, c, false),
        Scheme::Aciod4x3 => decode_ciod(rx, h, c, true),
        Scheme::Ozbek4x3 => exhaustive_ml_decode(rx, h, desc, c),
        Scheme::Jag4x3 | Scheme::Jag4x4 => Err(DecodeError::UnsupportedScheme(scheme)),
    }
}

/// Pairwise conditional ML for the rate-2 codes: equalize, average, decode.
pub fn decode_jagannath(
    rx: &ReceivedBlock,
    h: &ChannelRealization,
    desc: &SchemeDescriptor,
    c: &Constellation,
) -> Result<DecodedBlock, DecodeError> {
    let angles = desc
        .angles()
        .ok_or(DecodeError::UnsupportedScheme(desc.scheme()))?;
    let q = evcm_equalize(desc.scheme(), rx, h)?;
    conditional_ml_decode(&sufficient_stats(&q, angles), c)
}

/// Dispatch on decoder kind and scheme.
pub fn decode(
    kind: DecoderKind,
    rx: &ReceivedBlock,
    h: &ChannelRealization,
    desc: &SchemeDescriptor,
    c: &Constellation,
) -> Result<DecodedBlock, DecodeError> {
    match kind {
        DecoderKind::Exhaustive => exhaustive_ml_decode(rx, h, desc, c),
        DecoderKind::Conditional if desc.scheme().is_jagannath() => decode_jagannath(rx, h, desc, c),
        DecoderKind::Conditional => decode_reference(rx, h, desc, c),
    }
}

/// Checks the enumeration guard for a full search without decoding anything.
pub fn exhaustive_search_size(desc: &SchemeDescriptor, c: &Constellation) -> Result<u64, DecodeError> {
    checked_size(c.order(), desc.symbols())
}
