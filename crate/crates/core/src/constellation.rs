//! Unit-energy signal constellations.
//!
//! Point ordering is row-major over the square grid: imaginary part
//! descending (top row first), real part ascending within a row. BPSK is
//! `[-1, +1]`. All constructors normalize to unit average energy so the
//! SNR knob of the transmission model is the only power scaling.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use thiserror::Error;

use crate::linalg::C64;

/// Rotation that gives the coordinate-interleaved codes full diversity.
pub const ACIOD_ROTATION_DEG: f64 = 31.7175;

/// Tolerance used to decide that two constellation points coincide.
pub const POINT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstellationError {
    #[error("unsupported QAM order {0}; supported orders are 2, 4 and 16")]
    UnsupportedOrder(usize),
    #[error("unknown modulation `{0}`; expected one of bpsk, qam4, qam16")]
    UnknownModulation(String),
    #[error("a constellation needs at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("points {0} and {1} coincide")]
    DuplicatePoint(usize, usize),
    #[error("constellation has zero energy")]
    ZeroEnergy,
}

/// Modulation families selectable from the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Modulation {
    Bpsk,
    Qam4,
    Qam16,
}

impl Modulation {
    pub fn order(self) -> usize {
        match self {
            Modulation::Bpsk => 2,
            Modulation::Qam4 => 4,
            Modulation::Qam16 => 16,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            Modulation::Bpsk => "bpsk",
            Modulation::Qam4 => "qam4",
            Modulation::Qam16 => "qam16",
        }
    }

    pub fn constellation(self) -> Constellation {
        build_qam(self.order()).expect("modulation orders are always supported")
    }
}

impl FromStr for Modulation {
    type Err = ConstellationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "bpsk" => Ok(Modulation::Bpsk),
            "qam4" => Ok(Modulation::Qam4),
            "qam16" => Ok(Modulation::Qam16),
            other => Err(ConstellationError::UnknownModulation(other.to_string())),
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// An immutable, unit-average-energy point set.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    name: String,
    points: Vec<C64>,
    rotation: f64,
}

impl Constellation {
    /// Validates and normalizes an arbitrary point set.
    pub fn new(name: impl Into<String>, points: Vec<C64>) -> Result<Self, ConstellationError> {
        if points.len() < 2 {
            return Err(ConstellationError::TooFewPoints(points.len()));
        }
        let energy = points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if energy == 0.0 {
            return Err(ConstellationError::ZeroEnergy);
        }
        let scale = energy.sqrt().recip();
        let points: Vec<C64> = points.into_iter().map(|p| p * scale).collect();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if (points[i] - points[j]).norm() <= POINT_TOL {
                    return Err(ConstellationError::DuplicatePoint(i, j));
                }
            }
        }
        Ok(Self {
            name: name.into(),
            points,
            rotation: 0.0,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> &[C64] {
        &self.points
    }

    /// Accumulated rotation in radians.
    pub fn rotation(&self) -> f64 {
        self.rotation
    }

    pub fn rotation_deg(&self) -> f64 {
        self.rotation * 180.0 / PI
    }

    /// Number of points Q.
    pub fn order(&self) -> usize {
        self.points.len()
    }

    pub fn bits_per_symbol(&self) -> f64 {
        (self.order() as f64).log2()
    }

    pub fn average_energy(&self) -> f64 {
        self.points.iter().map(|p| p.norm_sqr()).sum::<f64>() / self.order() as f64
    }

    pub fn min_distance(&self) -> f64 {
        let mut d = f64::INFINITY;
        for (i, a) in self.points.iter().enumerate() {
            for b in &self.points[i + 1..] {
                d = d.min((a - b).norm());
            }
        }
        d
    }

    /// Multiplies every point by `exp(jθ)`.
    pub fn rotate(&self, theta: f64) -> Self {
        let w = C64::from_polar(1.0, theta);
        Self {
            name: self.name.clone(),
            points: self.points.iter().map(|p| p * w).collect(),
            rotation: self.rotation + theta,
        }
    }

    pub fn rotate_deg(&self, degrees: f64) -> Self {
        self.rotate(degrees.to_radians())
    }

    /// Nearest point to `y`. Ties go to the lowest index.
    #[inline]
    pub fn slice_nearest(&self, y: C64) -> (usize, C64) {
        let mut best = 0;
        let mut best_d = (y - self.points[0]).norm_sqr();
        for (i, p) in self.points.iter().enumerate().skip(1) {
            let d = (y - p).norm_sqr();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        (best, self.points[best])
    }

    pub fn index_of(&self, p: C64) -> Option<usize> {
        self.points.iter().position(|q| (q - p).norm() <= POINT_TOL)
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.order())
    }

    /// `k` i.i.d. uniform draws. `k = 0` yields an empty vector.
    pub fn sample_symbols<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Vec<C64> {
        (0..k).map(|_| self.points[self.sample_index(rng)]).collect()
    }
}

/// Square QAM (or BPSK for order 2), normalized to unit average energy.
pub fn build_qam(order: usize) -> Result<Constellation, ConstellationError> {
    let (name, levels): (&str, &[f64]) = match order {
        2 => {
            return Constellation::new("bpsk", vec![C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]);
        }
        4 => ("qam4", &[-1.0, 1.0]),
        16 => ("qam16", &[-3.0, -1.0, 1.0, 3.0]),
        other => return Err(ConstellationError::UnsupportedOrder(other)),
    };
    let mut points = Vec::with_capacity(order);
    for im in levels.iter().rev() {
        for re in levels {
            points.push(C64::new(*re, *im));
        }
    }
    Constellation::new(name, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn qam4_points() {
        let c = build_qam(4).unwrap();
        let s = FRAC_1_SQRT_2;
        let expected = [
            C64::new(-s, s),
            C64::new(s, s),
            C64::new(-s, -s),
            C64::new(s, -s),
        ];
        for (p, e) in c.points().iter().zip(expected) {
            assert!((p - e).norm() < 1e-15);
        }
        assert!((c.average_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bpsk_points() {
        let c = build_qam(2).unwrap();
        assert_eq!(c.points(), &[C64::new(-1.0, 0.0), C64::new(1.0, 0.0)]);
    }

    #[test]
    fn qam16_normalizer_is_sqrt10() {
        // (1/16) sum over {±1,±3}² of re²+im² = 2 * (1+9)/2 = 10
        let raw: f64 = [-3.0f64, -1.0, 1.0, 3.0]
            .iter()
            .flat_map(|a| [-3.0f64, -1.0, 1.0, 3.0].map(move |b| a * a + b * b))
            .sum::<f64>()
            / 16.0;
        assert_eq!(raw, 10.0);
        let c = build_qam(16).unwrap();
        let unit = 10f64.sqrt().recip();
        for p in c.points() {
            for coord in [p.re, p.im] {
                let level = coord / unit;
                assert!([-3.0, -1.0, 1.0, 3.0].iter().any(|l| (level - l).abs() < 1e-12));
            }
        }
        assert!((c.average_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unsupported_order_names_supported_set() {
        let err = build_qam(8).unwrap_err();
        assert_eq!(err, ConstellationError::UnsupportedOrder(8));
        assert!(err.to_string().contains("2, 4 and 16"));
    }

    #[test]
    fn rejects_degenerate_point_sets() {
        assert!(matches!(
            Constellation::new("x", vec![C64::new(1.0, 0.0)]),
            Err(ConstellationError::TooFewPoints(1))
        ));
        assert!(matches!(
            Constellation::new("x", vec![C64::new(1.0, 0.0), C64::new(1.0, 0.0)]),
            Err(ConstellationError::DuplicatePoint(0, 1))
        ));
    }

    #[test]
    fn rotation_zero_is_identity_and_inverse_restores() {
        let c = build_qam(4).unwrap();
        assert_eq!(c.rotate(0.0).points(), c.points());
        let q16 = build_qam(16).unwrap();
        let theta = 31.7175f64.to_radians();
        let back = q16.rotate(theta).rotate(-theta);
        for (a, b) in back.points().iter().zip(q16.points()) {
            assert!((a - b).norm() < 1e-12);
        }
        let r = c.rotate_deg(31.7175);
        assert!((r.rotation_deg() - 31.7175).abs() < 1e-12);
        assert!((r.average_energy() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn slice_member_and_far_points() {
        let c = build_qam(4).unwrap();
        let p = c.points()[1];
        assert!((p - C64::new(FRAC_1_SQRT_2, FRAC_1_SQRT_2)).norm() < 1e-15);
        assert_eq!(c.slice_nearest(p), (1, p));
        assert_eq!(c.slice_nearest(C64::new(10.0, 10.0)), (1, p));
        // Equidistant from all four points: lowest index wins.
        assert_eq!(c.slice_nearest(C64::new(0.0, 0.0)).0, 0);
    }

    #[test]
    fn slice_matches_brute_force_argmin() {
        let c = build_qam(16).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let y = C64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
            let oracle = c
                .points()
                .iter()
                .enumerate()
                .map(|(i, p)| (i, (y - p).norm()))
                .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
            assert_eq!(c.slice_nearest(y).0, oracle.0);
        }
    }

    #[test]
    fn sampling_is_deterministic_and_uniform() {
        let c = build_qam(4).unwrap();
        let a = c.sample_symbols(64, &mut ChaCha8Rng::seed_from_u64(3));
        let b = c.sample_symbols(64, &mut ChaCha8Rng::seed_from_u64(3));
        assert_eq!(a, b);
        assert!(c.sample_symbols(0, &mut ChaCha8Rng::seed_from_u64(3)).is_empty());

        let n = 100_000;
        let mut counts = [0usize; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..n {
            counts[c.sample_index(&mut rng)] += 1;
        }
        let p = 0.25;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for k in counts {
            assert!((k as f64 - n as f64 * p).abs() < 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn modulation_tokens() {
        assert_eq!("QAM16".parse::<Modulation>().unwrap(), Modulation::Qam16);
        assert!("psk8".parse::<Modulation>().is_err());
        assert_eq!(Modulation::Bpsk.constellation().order(), 2);
    }
}
