//! Space-time block encoders.
//!
//! A codeword is a `T × N` matrix: row = epoch (channel use), column =
//! transmit antenna. Input symbols `x1 … xK` map to slice indices
//! `0 … K-1` everywhere in the crate.
//!
//! The rate-2 codes are built from the pair term
//! `J(a, b, α) = a·sin α − b*·cos α`. Odd pairs `(x1,x2)`, `(x5,x6)` use
//! `α1`; even pairs `(x3,x4)`, `(x7,x8)` use `α2`. This is the convention
//! the Gram structure and the pairwise decoder both rely on.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_rational::Ratio;
use serde::Deserialize;
use thiserror::Error;

use crate::linalg::{CMatrix, C64, ZERO};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodeError {
    #[error("{scheme} encodes {expected} symbols per block, got {got}")]
    WrongSymbolCount {
        scheme: Scheme,
        expected: usize,
        got: usize,
    },
    #[error("pair angle {0} rad is outside the open interval (0, pi/2)")]
    InvalidAngle(f64),
    #[error("{0} does not take pair angles")]
    AnglesNotApplicable(Scheme),
    #[error("unknown scheme `{0}`; expected one of alamouti, jafarkhani, ozbek4x3, ciod4x4, aciod4x3, jag4x3, jag4x4")]
    UnknownScheme(String),
}

/// The seven implemented codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Scheme {
    Alamouti,
    Jafarkhani,
    Ozbek4x3,
    Ciod4x4,
    Aciod4x3,
    Jag4x3,
    Jag4x4,
}

impl Scheme {
    pub const ALL: [Scheme; 7] = [
        Scheme::Alamouti,
        Scheme::Jafarkhani,
        Scheme::Ozbek4x3,
        Scheme::Ciod4x4,
        Scheme::Aciod4x3,
        Scheme::Jag4x3,
        Scheme::Jag4x4,
    ];

    pub fn token(self) -> &'static str {
        match self {
            Scheme::Alamouti => "alamouti",
            Scheme::Jafarkhani => "jafarkhani",
            Scheme::Ozbek4x3 => "ozbek4x3",
            Scheme::Ciod4x4 => "ciod4x4",
            Scheme::Aciod4x3 => "aciod4x3",
            Scheme::Jag4x3 => "jag4x3",
            Scheme::Jag4x4 => "jag4x4",
        }
    }

    pub fn display_name(self) -> &'static str {
        match self {
            Scheme::Alamouti => "Alamouti",
            Scheme::Jafarkhani => "Jafarkhani",
            Scheme::Ozbek4x3 => "Ozbek et al.",
            Scheme::Ciod4x4 => "CIOD",
            Scheme::Aciod4x3 => "ACIOD",
            Scheme::Jag4x3 => "Jagannath 4x3",
            Scheme::Jag4x4 => "Jagannath 4x4",
        }
    }

    /// Block length T.
    pub fn epochs(self) -> usize {
        match self {
            Scheme::Alamouti => 2,
            _ => 4,
        }
    }

    pub fn tx_antennas(self) -> usize {
        match self {
            Scheme::Alamouti => 2,
            Scheme::Ozbek4x3 | Scheme::Aciod4x3 | Scheme::Jag4x3 => 3,
            Scheme::Jafarkhani | Scheme::Ciod4x4 | Scheme::Jag4x4 => 4,
        }
    }

    /// Symbols per block K.
    pub fn symbols(self) -> usize {
        match self {
            Scheme::Alamouti => 2,
            Scheme::Jag4x3 | Scheme::Jag4x4 => 8,
            _ => 4,
        }
    }

    pub fn rate(self) -> Ratio<u32> {
        Ratio::new(self.symbols() as u32, self.epochs() as u32)
    }

    pub fn is_jagannath(self) -> bool {
        matches!(self, Scheme::Jag4x3 | Scheme::Jag4x4)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for Scheme {
    type Err = CodeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.token() == lower)
            .ok_or_else(|| CodeError::UnknownScheme(s.to_string()))
    }
}

/// The two pair-term angles, both strictly inside `(0, π/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairAngles {
    alpha1: f64,
    alpha2: f64,
}

#[derive(Deserialize)]
struct AngleConfig {
    alpha1_deg: f64,
    alpha2_deg: f64,
}

const DEFAULT_ANGLES_TOML: &str = include_str!("../config/default_angles.toml");

impl PairAngles {
    pub fn new(alpha1: f64, alpha2: f64) -> Result<Self, CodeError> {
        for a in [alpha1, alpha2] {
            if !(a > 0.0 && a < FRAC_PI_2) || a.sin() <= 0.0 || a.cos() <= 0.0 {
                return Err(CodeError::InvalidAngle(a));
            }
        }
        Ok(Self { alpha1, alpha2 })
    }

    pub fn from_degrees(alpha1: f64, alpha2: f64) -> Result<Self, CodeError> {
        Self::new(alpha1.to_radians(), alpha2.to_radians())
    }

    /// The pinned angles from `config/default_angles.toml`.
    pub fn shipped() -> Self {
        static DEFAULT: OnceLock<PairAngles> = OnceLock::new();
        *DEFAULT.get_or_init(|| {
            let cfg: AngleConfig =
                toml::from_str(DEFAULT_ANGLES_TOML).expect("default_angles.toml is well formed");
            PairAngles::from_degrees(cfg.alpha1_deg, cfg.alpha2_deg)
                .expect("default angles lie in (0, 90) degrees")
        })
    }

    pub fn alpha1(&self) -> f64 {
        self.alpha1
    }

    pub fn alpha2(&self) -> f64 {
        self.alpha2
    }

    /// Angle for 1-based angle index `j ∈ {1, 2}`.
    pub fn by_index(&self, j: usize) -> f64 {
        match j {
            1 => self.alpha1,
            2 => self.alpha2,
            _ => panic!("angle index {j} out of range"),
        }
    }

    /// Angles `[α(pair0), α(pair1), α(pair2), α(pair3)]` for the four symbol pairs.
    pub fn per_pair(&self) -> [f64; 4] {
        [self.alpha1, self.alpha2, self.alpha1, self.alpha2]
    }
}

/// Static description of one code, including its pair angles when it has any.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeDescriptor {
    scheme: Scheme,
    angles: Option<PairAngles>,
}

impl SchemeDescriptor {
    /// Descriptor with the shipped default angles for the rate-2 codes.
    pub fn new(scheme: Scheme) -> Self {
        Self {
            scheme,
            angles: scheme.is_jagannath().then(PairAngles::shipped),
        }
    }

    pub fn with_angles(scheme: Scheme, angles: PairAngles) -> Result<Self, CodeError> {
        if !scheme.is_jagannath() {
            return Err(CodeError::AnglesNotApplicable(scheme));
        }
        Ok(Self {
            scheme,
            angles: Some(angles),
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn name(&self) -> &'static str {
        self.scheme.token()
    }

    pub fn epochs(&self) -> usize {
        self.scheme.epochs()
    }

    pub fn tx_antennas(&self) -> usize {
        self.scheme.tx_antennas()
    }

    pub fn symbols(&self) -> usize {
        self.scheme.symbols()
    }

    pub fn rate(&self) -> Ratio<u32> {
        self.scheme.rate()
    }

    pub fn rate_f64(&self) -> f64 {
        let r = self.rate();
        *r.numer() as f64 / *r.denom() as f64
    }

    pub fn angles(&self) -> Option<PairAngles> {
        self.angles
    }

    pub fn encode(&self, x: &[C64]) -> Result<Codeword, CodeError> {
        let k = self.symbols();
        if x.len() != k {
            return Err(CodeError::WrongSymbolCount {
                scheme: self.scheme,
                expected: k,
                got: x.len(),
            });
        }
        let cw = match self.scheme {
            Scheme::Alamouti => encode_alamouti(x[0], x[1]),
            Scheme::Jafarkhani => encode_jafarkhani(first4(x)),
            Scheme::Ozbek4x3 => encode_ozbek(first4(x)),
            Scheme::Ciod4x4 => encode_ciod(first4(x)),
            Scheme::Aciod4x3 => encode_aciod(first4(x)),
            Scheme::Jag4x3 => encode_jagannath_p3(first8(x), self.angles.unwrap()),
            Scheme::Jag4x4 => encode_jagannath_p4(first8(x), self.angles.unwrap()),
        };
        Ok(cw)
    }
}

fn first4(x: &[C64]) -> &[C64; 4] {
    x.try_into().expect("length checked")
}

fn first8(x: &[C64]) -> &[C64; 8] {
    x.try_into().expect("length checked")
}

/// A `T × N` codeword tagged with the scheme that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct Codeword {
    scheme: Scheme,
    matrix: CMatrix,
}

impl Codeword {
    pub fn new(scheme: Scheme, matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.shape(), (scheme.epochs(), scheme.tx_antennas()));
        Self { scheme, matrix }
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn gram(&self) -> CMatrix {
        gram(self)
    }
}

/// `a·sin α − b*·cos α`.
#[inline]
pub fn pair_term(a: C64, b: C64, alpha: f64) -> C64 {
    let (s, c) = alpha.sin_cos();
    a * s - b.conj() * c
}

/// The four pair terms `[J¹(x1,x2), J²(x3,x4), J¹(x5,x6), J²(x7,x8)]`.
pub fn jagannath_pair_terms(x: &[C64; 8], angles: PairAngles) -> [C64; 4] {
    let alpha = angles.per_pair();
    std::array::from_fn(|p| pair_term(x[2 * p], x[2 * p + 1], alpha[p]))
}

/// `[[a, b], [-b*, a*]]`
fn alamouti_block(a: C64, b: C64) -> [[C64; 2]; 2] {
    [[a, b], [-b.conj(), a.conj()]]
}

pub fn encode_alamouti(x1: C64, x2: C64) -> Codeword {
    Codeword::new(Scheme::Alamouti, CMatrix::from_rows(&alamouti_block(x1, x2)))
}

/// Quasi-orthogonal `[[C12, C34], [-C34*, C12*]]` with elementwise conjugation.
pub fn encode_jafarkhani(x: &[C64; 4]) -> Codeword {
    let c12 = alamouti_block(x[0], x[1]);
    let c34 = alamouti_block(x[2], x[3]);
    let m = CMatrix::from_fn(4, 4, |r, c| match (r / 2, c / 2) {
        (0, 0) => c12[r][c],
        (0, 1) => c34[r][c - 2],
        (1, 0) => -c34[r - 2][c].conj(),
        _ => c12[r - 2][c - 2].conj(),
    });
    Codeword::new(Scheme::Jafarkhani, m)
}

/// `[[C12, -c34], [C34, c12]]` with `c12 = [x1 x2]ᵀ`, `c34 = [x3 x4]ᵀ`.
pub fn encode_ozbek(x: &[C64; 4]) -> Codeword {
    let c12 = alamouti_block(x[0], x[1]);
    let c34 = alamouti_block(x[2], x[3]);
    let m = CMatrix::from_rows(&[
        [c12[0][0], c12[0][1], -x[2]],
        [c12[1][0], c12[1][1], -x[3]],
        [c34[0][0], c34[0][1], x[0]],
        [c34[1][0], c34[1][1], x[1]],
    ]);
    Codeword::new(Scheme::Ozbek4x3, m)
}

/// Coordinate-interleaved symbols `u1..u4`: the in-phase part of `x_k`
/// travels with the quadrature part of its partner in the other block.
pub fn ciod_interleave(x: &[C64; 4]) -> [C64; 4] {
    [
        C64::new(x[0].re, x[2].im),
        C64::new(x[1].re, x[3].im),
        C64::new(x[2].re, x[0].im),
        C64::new(x[3].re, x[1].im),
    ]
}

pub fn encode_ciod(x: &[C64; 4]) -> Codeword {
    let [u1, u2, u3, u4] = ciod_interleave(x);
    let a = alamouti_block(u1, u2);
    let b = alamouti_block(u3, u4);
    let m = CMatrix::from_rows(&[
        [a[0][0], a[0][1], ZERO, ZERO],
        [a[1][0], a[1][1], ZERO, ZERO],
        [ZERO, ZERO, b[0][0], b[0][1]],
        [ZERO, ZERO, b[1][0], b[1][1]],
    ]);
    Codeword::new(Scheme::Ciod4x4, m)
}

/// CIOD with the fourth antenna (column 3) removed.
pub fn encode_aciod(x: &[C64; 4]) -> Codeword {
    Codeword::new(Scheme::Aciod4x3, encode_ciod(x).matrix.without_column(3))
}

/// 4×3 rate-2 layout from the four pair terms `[a, b, A, B]`.
pub fn jagannath_p3_layout(j: [C64; 4]) -> CMatrix {
    let [a, b, aa, bb] = j;
    CMatrix::from_rows(&[
        [ZERO, a, b],
        [ZERO, -b.conj(), a.conj()],
        [aa, bb, ZERO],
        [-bb.conj(), aa.conj(), ZERO],
    ])
}

/// 4×4 rate-2 layout from the four pair terms `[a, b, A, B]`.
pub fn jagannath_p4_layout(j: [C64; 4]) -> CMatrix {
    let [a, b, aa, bb] = j;
    CMatrix::from_rows(&[
        [a, b, ZERO, ZERO],
        [-b.conj(), a.conj(), ZERO, ZERO],
        [ZERO, ZERO, aa, bb],
        [ZERO, ZERO, -bb.conj(), aa.conj()],
    ])
}

pub fn encode_jagannath_p3(x: &[C64; 8], angles: PairAngles) -> Codeword {
    Codeword::new(
        Scheme::Jag4x3,
        jagannath_p3_layout(jagannath_pair_terms(x, angles)),
    )
}

pub fn encode_jagannath_p4(x: &[C64; 8], angles: PairAngles) -> Codeword {
    Codeword::new(
        Scheme::Jag4x4,
        jagannath_p4_layout(jagannath_pair_terms(x, angles)),
    )
}

/// `Cᴴ C`.
pub fn gram(c: &Codeword) -> CMatrix {
    c.matrix.gram()
}
