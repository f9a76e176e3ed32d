//! Rate bounds, rank/determinant diversity checks, angle search and the
//! rate/delay comparison table.
//!
//! For both rate-2 codes a codeword difference is the code layout applied
//! to the pair terms of the symbol differences `d_k = x_k − u_k`. Writing
//! `C = |J¹(d1,d2)|² + |J²(d3,d4)|²` and `D = |J¹(d5,d6)|² + |J²(d7,d8)|²`:
//!
//! * 4×4: `det(ΔᴴΔ) = |det Δ|² = C²·D²`
//! * 4×3: `det(ΔᴴΔ) = D·(C + D)·C`
//!
//! Each factor belongs to one diagonal block. The reported minimum
//! determinant is taken over difference tuples in which **both** blocks
//! differ. Codeword pairs that differ in a single block always give a
//! rank-2 difference; [`DiversityReport::min_rank`] records that.

use std::f64::consts::FRAC_PI_2;

use num_rational::Ratio;
use thiserror::Error;

use crate::codes::{jagannath_p3_layout, jagannath_p4_layout, pair_term, PairAngles, Scheme};
use crate::constellation::{Constellation, Modulation, ACIOD_ROTATION_DEG};
use crate::linalg::{CMatrix, C64, ZERO};

/// Difference values closer than this are merged.
pub const DEDUP_TOL: f64 = 1e-12;

/// `min_det` above this counts as full diversity.
pub const FULL_DIVERSITY_TOL: f64 = 1e-12;

/// Default angle-grid resolution in degrees.
pub const DEFAULT_GRID_DEG: f64 = 0.25;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("diversity analysis is only defined for jag4x3 and jag4x4, not {0}")]
    UnsupportedScheme(Scheme),
    #[error("grid step must be a positive angle below pi/2, got {0}")]
    InvalidGridStep(f64),
}

/// `⌈log₂N + 1⌉ / (2⌈log₂N⌉)`; `N = 1` is taken as rate 1.
///
/// Panics for `n == 0`.
pub fn ostbc_max_rate(n: usize) -> Ratio<u32> {
    assert!(n >= 1, "antenna count must be at least 1");
    if n == 1 {
        return Ratio::from_integer(1);
    }
    // ⌈log₂ n⌉ for n ≥ 2
    let l = usize::BITS - (n - 1).leading_zeros();
    Ratio::new(l + 1, 2 * l)
}

/// All `x − u` over the constellation, in enumeration order, deduplicated.
pub fn difference_set(c: &Constellation) -> Vec<C64> {
    let mut out: Vec<C64> = Vec::new();
    for x in c.points() {
        for u in c.points() {
            let d = x - u;
            if !out.iter().any(|e| (e - d).norm() <= DEDUP_TOL) {
                out.push(d);
            }
        }
    }
    out
}

/// Smallest `|J(d_a, d_b, α)|²` over difference pairs that are not both
/// zero, with the first minimizing pair.
pub fn pair_term_floor(diffs: &[C64], alpha: f64) -> (f64, (C64, C64)) {
    let mut best = (f64::INFINITY, (ZERO, ZERO));
    for &da in diffs {
        for &db in diffs {
            if da.norm() <= DEDUP_TOL && db.norm() <= DEDUP_TOL {
                continue;
            }
            let v = pair_term(da, db, alpha).norm_sqr();
            if v < best.0 {
                best = (v, (da, db));
            }
        }
    }
    best
}

/// `det(ΔᴴΔ)` from the two block factors.
pub fn determinant_from_blocks(scheme: Scheme, c_block: f64, d_block: f64) -> f64 {
    match scheme {
        Scheme::Jag4x4 => c_block * c_block * d_block * d_block,
        _ => d_block * (c_block + d_block) * c_block,
    }
}

/// Block factors `(C, D)` of a difference tuple `d1..d8`.
pub fn block_factors(d: &[C64; 8], angles: PairAngles) -> (f64, f64) {
    let a = angles.per_pair();
    let j: [f64; 4] = std::array::from_fn(|p| pair_term(d[2 * p], d[2 * p + 1], a[p]).norm_sqr());
    (j[0] + j[1], j[2] + j[3])
}

/// Explicit difference matrix of a rate-2 code for difference tuple `d`.
pub fn difference_matrix(scheme: Scheme, d: &[C64; 8], angles: PairAngles) -> Result<CMatrix, AnalysisError> {
    let a = angles.per_pair();
    let j: [C64; 4] = std::array::from_fn(|p| pair_term(d[2 * p], d[2 * p + 1], a[p]));
    match scheme {
        Scheme::Jag4x3 => Ok(jagannath_p3_layout(j)),
        Scheme::Jag4x4 => Ok(jagannath_p4_layout(j)),
        other => Err(AnalysisError::UnsupportedScheme(other)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiversityReport {
    pub scheme: Scheme,
    pub constellation: String,
    pub angles: PairAngles,
    /// Minimum of `det(ΔᴴΔ)` over tuples in which both blocks differ.
    pub min_det: f64,
    pub full_diversity: bool,
    /// Minimizing difference tuple `d1..d8`.
    pub witness: [C64; 8],
    /// Smallest block factor `|J¹|² + |J²|²` over nonzero block differences.
    pub block_floor: f64,
    /// Lowest rank of a nonzero codeword difference, including tuples where
    /// only one block differs.
    pub min_rank: usize,
    /// Rank a full-diversity difference would need (the antenna count).
    pub full_rank: usize,
}

struct FloorTable {
    value: f64,
    witness: (C64, C64),
}

fn block_floor(f1: &FloorTable, f2: &FloorTable) -> (f64, [C64; 4]) {
    if f1.value <= f2.value {
        (f1.value, [f1.witness.0, f1.witness.1, ZERO, ZERO])
    } else {
        (f2.value, [ZERO, ZERO, f2.witness.0, f2.witness.1])
    }
}

fn check_scheme(scheme: Scheme) -> Result<(), AnalysisError> {
    if scheme.is_jagannath() {
        Ok(())
    } else {
        Err(AnalysisError::UnsupportedScheme(scheme))
    }
}

fn floor_table(diffs: &[C64], alpha: f64) -> FloorTable {
    let (value, witness) = pair_term_floor(diffs, alpha);
    FloorTable { value, witness }
}

fn report_from_floors(
    scheme: Scheme,
    c: &Constellation,
    angles: PairAngles,
    f1: &FloorTable,
    f2: &FloorTable,
) -> DiversityReport {
    let (floor, block) = block_floor(f1, f2);
    let min_det = determinant_from_blocks(scheme, floor, floor);
    let mut witness = [ZERO; 8];
    witness[..4].copy_from_slice(&block);
    witness[4..].copy_from_slice(&block);

    // Structural rank probes: one block, the other block, both blocks.
    let mut probes = [[ZERO; 8]; 3];
    probes[0][..4].copy_from_slice(&block);
    probes[1][4..].copy_from_slice(&block);
    probes[2] = witness;
    let min_rank = probes
        .iter()
        .map(|d| {
            difference_matrix(scheme, d, angles)
                .expect("scheme checked")
                .rank(1e-9)
        })
        .min()
        .unwrap();

    DiversityReport {
        scheme,
        constellation: c.name().to_string(),
        angles,
        min_det,
        full_diversity: min_det > FULL_DIVERSITY_TOL,
        witness,
        block_floor: floor,
        min_rank,
        full_rank: scheme.tx_antennas(),
    }
}

/// Minimum-determinant figure for a rate-2 code over the constellation's
/// difference set at the given angles.
pub fn min_coding_gain(
    scheme: Scheme,
    c: &Constellation,
    angles: PairAngles,
) -> Result<DiversityReport, AnalysisError> {
    check_scheme(scheme)?;
    let diffs = difference_set(c);
    let f1 = floor_table(&diffs, angles.alpha1());
    let f2 = floor_table(&diffs, angles.alpha2());
    Ok(report_from_floors(scheme, c, angles, &f1, &f2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AngleSearch {
    pub angles: PairAngles,
    pub min_det: f64,
    pub grid_points: usize,
}

/// Grid search over `(0, π/2)²` maximizing the minimum determinant.
///
/// Grid points are `k·step` for `k ≥ 1` strictly inside the interval.
/// Values within a relative `1e-12` of the maximum count as ties, and ties
/// go to the smallest `α1`, then the smallest `α2`.
pub fn optimize_angles(
    scheme: Scheme,
    c: &Constellation,
    grid_step: f64,
) -> Result<AngleSearch, AnalysisError> {
    check_scheme(scheme)?;
    if !(grid_step > 0.0 && grid_step < FRAC_PI_2) {
        return Err(AnalysisError::InvalidGridStep(grid_step));
    }
    let grid: Vec<f64> = (1..)
        .map(|k| k as f64 * grid_step)
        .take_while(|&a| a < FRAC_PI_2)
        .filter(|&a| a.sin() > 0.0 && a.cos() > 0.0)
        .collect();
    let diffs = difference_set(c);
    let floors: Vec<FloorTable> = grid.iter().map(|&a| floor_table(&diffs, a)).collect();

    let value = |i: usize, j: usize| {
        let (floor, _) = block_floor(&floors[i], &floors[j]);
        determinant_from_blocks(scheme, floor, floor)
    };
    let n = grid.len();
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            max = max.max(value(i, j));
        }
    }
    let threshold = max - 1e-12 * max.abs();
    for i in 0..n {
        for j in 0..n {
            let v = value(i, j);
            if v >= threshold {
                let angles = PairAngles::new(grid[i], grid[j]).expect("grid lies in the open interval");
                let report = report_from_floors(scheme, c, angles, &floors[i], &floors[j]);
                return Ok(AngleSearch {
                    angles,
                    min_det: report.min_det,
                    grid_points: n * n,
                });
            }
        }
    }
    unreachable!("the maximum is attained on the grid")
}

/// Constellations the shipped default angles are chosen for: BPSK, QAM-4
/// and QAM-16, each unrotated and rotated by [`ACIOD_ROTATION_DEG`].
pub fn angle_design_set() -> Vec<Constellation> {
    [Modulation::Bpsk, Modulation::Qam4, Modulation::Qam16]
        .into_iter()
        .flat_map(|m| {
            let c = m.constellation();
            [c.clone(), c.rotate_deg(ACIOD_ROTATION_DEG)]
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointAngleSearch {
    pub angles: PairAngles,
    /// Worst ratio of achieved to best-achievable `min_det` over the set.
    pub worst_ratio: f64,
    /// Achieved `min_det` per constellation, in input order.
    pub min_dets: Vec<f64>,
    /// Best `min_det` on the grid per constellation, in input order.
    pub best_min_dets: Vec<f64>,
    pub grid_points: usize,
}

/// Grid search for one angle pair serving several constellations: maximizes
/// the smallest `min_det / best_min_det` ratio, with the same grid and tie
/// rules as [`optimize_angles`].
pub fn optimize_angles_joint(
    scheme: Scheme,
    constellations: &[Constellation],
    grid_step: f64,
) -> Result<JointAngleSearch, AnalysisError> {
    check_scheme(scheme)?;
    if !(grid_step > 0.0 && grid_step < FRAC_PI_2) || constellations.is_empty() {
        return Err(AnalysisError::InvalidGridStep(grid_step));
    }
    let grid: Vec<f64> = (1..)
        .map(|k| k as f64 * grid_step)
        .take_while(|&a| a < FRAC_PI_2)
        .filter(|&a| a.sin() > 0.0 && a.cos() > 0.0)
        .collect();
    let floors: Vec<Vec<f64>> = constellations
        .iter()
        .map(|c| {
            let diffs = difference_set(c);
            grid.iter().map(|&a| pair_term_floor(&diffs, a).0).collect()
        })
        .collect();
    let det = |b: f64| determinant_from_blocks(scheme, b, b);
    // The block floor of a pair is the smaller single-angle floor, so the
    // best pair is attained on the diagonal.
    let best: Vec<f64> = floors
        .iter()
        .map(|f| det(f.iter().copied().fold(f64::NEG_INFINITY, f64::max)))
        .collect();
    let n = grid.len();
    let objective = |i: usize, j: usize| {
        floors
            .iter()
            .zip(&best)
            .map(|(f, b)| det(f[i].min(f[j])) / b)
            .fold(f64::INFINITY, f64::min)
    };
    let mut max = f64::NEG_INFINITY;
    for i in 0..n {
        for j in 0..n {
            max = max.max(objective(i, j));
        }
    }
    let threshold = max - 1e-12 * max.abs();
    for i in 0..n {
        for j in 0..n {
            if objective(i, j) >= threshold {
                return Ok(JointAngleSearch {
                    angles: PairAngles::new(grid[i], grid[j]).expect("grid lies in the open interval"),
                    worst_ratio: objective(i, j),
                    min_dets: floors.iter().map(|f| det(f[i].min(f[j]))).collect(),
                    best_min_dets: best,
                    grid_points: n * n,
                });
            }
        }
    }
    unreachable!("the maximum is attained on the grid")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRow {
    pub design: &'static str,
    pub tx_antennas: usize,
    pub rate: Ratio<u32>,
    pub delay: usize,
    /// Implemented scheme backing this row, if any.
    pub scheme: Option<Scheme>,
}

/// Rate and delay of the rate-2 codes next to known designs.
pub fn rate_delay_table() -> Vec<TableRow> {
    let implemented = |s: Scheme| TableRow {
        design: s.display_name(),
        tx_antennas: s.tx_antennas(),
        rate: s.rate(),
        delay: s.epochs(),
        scheme: Some(s),
    };
    vec![
        implemented(Scheme::Jag4x3),
        implemented(Scheme::Jag4x4),
        implemented(Scheme::Aciod4x3),
        implemented(Scheme::Ciod4x4),
        implemented(Scheme::Jafarkhani),
        implemented(Scheme::Ozbek4x3),
        TableRow {
            design: "Tarokh et al.",
            tx_antennas: 3,
            rate: Ratio::new(3, 4),
            delay: 4,
            scheme: None,
        },
        TableRow {
            design: "Tarokh et al.",
            tx_antennas: 4,
            rate: Ratio::new(3, 4),
            delay: 4,
            scheme: None,
        },
        TableRow {
            design: "Grover et al.",
            tx_antennas: 4,
            rate: Ratio::from_integer(1),
            delay: 8,
            scheme: None,
        },
    ]
}
