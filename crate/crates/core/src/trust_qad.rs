//! Qualitative assessment dynamics.
//!
//! Agents hold five-valued assessments of each other (`-2..=2`, or undefined
//! when an agent does not know or will not disclose its view). The society is
//! an `n x n` matrix where row `i` is agent `i`'s outgoing assessments and
//! column `j` is the society's view of agent `j`. Each agent moves its
//! assessments with one of four operators that read the pre-step column.

use std::fmt;

use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QadError {
    #[error("assessment value {0} is outside -2..=2")]
    InvalidValue(i32),
    #[error("index {index} out of range for a society of {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("matrix must have at least one agent")]
    Empty,
    #[error("observation score {0} is outside [0, 1]")]
    ScoreOutOfRange(f64),
}

/// A single trust assessment. `Undefined` is deliberately not ordered
/// against the numeric values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Assessment {
    Defined(i8),
    Undefined,
}

impl Assessment {
    pub const MIN: i8 = -2;
    pub const MAX: i8 = 2;
    pub const FULL_TRUST: Assessment = Assessment::Defined(2);

    pub fn new(value: i32) -> Result<Self, QadError> {
        if (Self::MIN as i32..=Self::MAX as i32).contains(&value) {
            Ok(Assessment::Defined(value as i8))
        } else {
            Err(QadError::InvalidValue(value))
        }
    }

    pub fn value(self) -> Option<i8> {
        match self {
            Assessment::Defined(v) => Some(v),
            Assessment::Undefined => None,
        }
    }

    pub fn is_defined(self) -> bool {
        matches!(self, Assessment::Defined(_))
    }
}

impl fmt::Display for Assessment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Assessment::Defined(v) => write!(f, "{v}"),
            Assessment::Undefined => f.write_str("-"),
        }
    }
}

/// Square society assessment matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssessmentMatrix {
    n: usize,
    entries: Vec<Assessment>,
}

impl AssessmentMatrix {
    /// A matrix with every entry set to `fill`.
    pub fn filled(n: usize, fill: Assessment) -> Result<Self, QadError> {
        if n == 0 {
            return Err(QadError::Empty);
        }
        Ok(Self {
            n,
            entries: vec![fill; n * n],
        })
    }

    pub fn undefined(n: usize) -> Result<Self, QadError> {
        Self::filled(n, Assessment::Undefined)
    }

    pub fn from_rows(rows: Vec<Vec<Assessment>>) -> Result<Self, QadError> {
        let n = rows.len();
        if n == 0 {
            return Err(QadError::Empty);
        }
        let mut entries = Vec::with_capacity(n * n);
        for row in rows {
            if row.len() != n {
                return Err(QadError::DimensionMismatch {
                    expected: n,
                    actual: row.len(),
                });
            }
            entries.extend(row);
        }
        Ok(Self { n, entries })
    }

    /// Builds a matrix from integer rows where `None` is undefined.
    pub fn from_values(rows: &[&[Option<i32>]]) -> Result<Self, QadError> {
        let rows = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|v| match v {
                        Some(v) => Assessment::new(*v),
                        None => Ok(Assessment::Undefined),
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_rows(rows)
    }

    pub fn size(&self) -> usize {
        self.n
    }

    fn check(&self, index: usize) -> Result<(), QadError> {
        if index < self.n {
            Ok(())
        } else {
            Err(QadError::IndexOutOfRange { index, n: self.n })
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Result<Assessment, QadError> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.entries[i * self.n + j])
    }

    pub fn set(&mut self, i: usize, j: usize, value: Assessment) -> Result<(), QadError> {
        self.check(i)?;
        self.check(j)?;
        self.entries[i * self.n + j] = value;
        Ok(())
    }

    pub fn row(&self, i: usize) -> Result<&[Assessment], QadError> {
        self.check(i)?;
        Ok(&self.entries[i * self.n..(i + 1) * self.n])
    }

    pub fn column(&self, j: usize) -> Result<Vec<Assessment>, QadError> {
        self.check(j)?;
        Ok((0..self.n).map(|i| self.entries[i * self.n + j]).collect())
    }

    pub fn entries(&self) -> impl Iterator<Item = Assessment> + '_ {
        self.entries.iter().copied()
    }
}

/// The four trust-dynamics operators an agent can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OperatorChoice {
    /// `d`: step up by one when the society thinks better of the agent.
    ModerateOptimistic,
    /// `g`: step down by one when the society thinks worse of the agent.
    ModeratePessimistic,
    /// `k`: adopt the society mean, rounded toward zero.
    ConsensusSeeker,
    /// `h`: pick any value uniformly at random.
    AssessmentHopping,
}

impl OperatorChoice {
    pub const ALL: [OperatorChoice; 4] = [
        OperatorChoice::ModerateOptimistic,
        OperatorChoice::ModeratePessimistic,
        OperatorChoice::ConsensusSeeker,
        OperatorChoice::AssessmentHopping,
    ];

    pub fn symbol(self) -> char {
        match self {
            OperatorChoice::ModerateOptimistic => 'd',
            OperatorChoice::ModeratePessimistic => 'g',
            OperatorChoice::ConsensusSeeker => 'k',
            OperatorChoice::AssessmentHopping => 'h',
        }
    }
}

/// Defined values of column `j` in row order.
pub fn column_subvector(matrix: &AssessmentMatrix, j: usize) -> Result<Vec<i8>, QadError> {
    Ok(matrix
        .column(j)?
        .into_iter()
        .filter_map(Assessment::value)
        .collect())
}

/// Applies `op` to entry `(i, j)` against the current column `j`.
///
/// The column mean is kept as an integer sum over `n1` values so every
/// comparison is exact. `rng` is only drawn from by assessment hopping on a
/// defined entry.
pub fn apply_operator<R: Rng + ?Sized>(
    matrix: &AssessmentMatrix,
    i: usize,
    j: usize,
    op: OperatorChoice,
    rng: &mut R,
) -> Result<Assessment, QadError> {
    let current = match matrix.get(i, j)? {
        Assessment::Undefined => return Ok(Assessment::Undefined),
        Assessment::Defined(v) => v as i32,
    };
    if op == OperatorChoice::AssessmentHopping {
        return Ok(Assessment::Defined(
            rng.gen_range(Assessment::MIN..=Assessment::MAX),
        ));
    }

    let column = column_subvector(matrix, j)?;
    if column.is_empty() {
        return Ok(Assessment::Defined(current as i8));
    }
    let sum: i32 = column.iter().map(|&v| v as i32).sum();
    let n1 = column.len() as i32;

    // mean <= current  <=>  sum <= current * n1, since n1 > 0
    let next = match op {
        OperatorChoice::ModerateOptimistic => {
            if sum <= current * n1 {
                current
            } else {
                current + 1
            }
        }
        OperatorChoice::ModeratePessimistic => {
            if sum >= current * n1 {
                current
            } else {
                current - 1
            }
        }
        // integer division truncates: ceiling below zero, floor otherwise
        OperatorChoice::ConsensusSeeker => sum / n1,
        OperatorChoice::AssessmentHopping => unreachable!(),
    };
    Assessment::new(next)
}

/// One synchronous round of trust dynamics: every entry is recomputed from
/// the pre-step matrix, with row `i` using `assignment[i]`.
pub fn step_society<R: Rng + ?Sized>(
    matrix: &AssessmentMatrix,
    assignment: &[OperatorChoice],
    rng: &mut R,
) -> Result<AssessmentMatrix, QadError> {
    let n = matrix.size();
    if assignment.len() != n {
        return Err(QadError::DimensionMismatch {
            expected: n,
            actual: assignment.len(),
        });
    }
    let mut next = matrix.clone();
    for (i, &op) in assignment.iter().enumerate() {
        for j in 0..n {
            next.set(i, j, apply_operator(matrix, i, j, op, rng)?)?;
        }
    }
    Ok(next)
}

/// Maps the fraction of changed entries onto a 1..=10 scale.
pub fn rate_of_change(prev: &AssessmentMatrix, curr: &AssessmentMatrix) -> Result<u8, QadError> {
    if prev.size() != curr.size() {
        return Err(QadError::DimensionMismatch {
            expected: prev.size(),
            actual: curr.size(),
        });
    }
    let total = prev.entries.len();
    let changed = prev
        .entries()
        .zip(curr.entries())
        .filter(|(a, b)| a != b)
        .count();
    Ok((1 + 9 * changed / total).min(10) as u8)
}

/// Quintile mapping of a `[0, 1]` safety score onto the assessment scale.
pub fn quantize_observation(score: f64) -> Result<Assessment, QadError> {
    if !(0.0..=1.0).contains(&score) {
        return Err(QadError::ScoreOutOfRange(score));
    }
    let value = if score < 0.2 {
        -2
    } else if score < 0.4 {
        -1
    } else if score < 0.6 {
        0
    } else if score < 0.8 {
        1
    } else {
        2
    };
    Ok(Assessment::Defined(value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn col(values: &[Option<i32>]) -> AssessmentMatrix {
        // builds a matrix whose column 0 is `values`; other columns undefined
        let n = values.len();
        let rows: Vec<Vec<Option<i32>>> = values
            .iter()
            .map(|v| {
                let mut row = vec![None; n];
                row[0] = *v;
                row
            })
            .collect();
        let refs: Vec<&[Option<i32>]> = rows.iter().map(|r| r.as_slice()).collect();
        AssessmentMatrix::from_values(&refs).unwrap()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn subvector_drops_undefined() {
        assert_eq!(column_subvector(&col(&[Some(2), None, Some(0)]), 0).unwrap(), vec![2, 0]);
        assert!(column_subvector(&col(&[None, None, None]), 0).unwrap().is_empty());
        assert_eq!(
            column_subvector(&col(&[Some(1), Some(2), Some(1)]), 0).unwrap(),
            vec![1, 2, 1]
        );
    }

    #[test]
    fn subvector_rejects_bad_index() {
        let m = col(&[Some(1)]);
        assert_eq!(
            column_subvector(&m, 1),
            Err(QadError::IndexOutOfRange { index: 1, n: 1 })
        );
    }

    #[test]
    fn optimistic_operator() {
        let m = col(&[Some(2), Some(1), Some(0)]);
        // row 0 holds 2, mean 1 <= 2
        let out = apply_operator(&m, 0, 0, OperatorChoice::ModerateOptimistic, &mut rng());
        assert_eq!(out, Ok(Assessment::Defined(2)));

        let m = col(&[Some(0), Some(2), Some(1), Some(1)]);
        // mean (0+2+1+1)/4 = 1 > 0
        let out = apply_operator(&m, 0, 0, OperatorChoice::ModerateOptimistic, &mut rng());
        assert_eq!(out, Ok(Assessment::Defined(1)));
    }

    #[test]
    fn examples_hold_with_target_inside_or_outside_column() {
        // the updated entry is itself part of column j; the listed society
        // values give the same result whether or not it is counted
        let cases: [(OperatorChoice, i32, &[i32], i8); 3] = [
            (OperatorChoice::ModerateOptimistic, 0, &[1, 2, 1], 1),
            (OperatorChoice::ConsensusSeeker, 0, &[-2, -1, -1], -1),
            (OperatorChoice::ConsensusSeeker, 0, &[1, 2], 1),
        ];
        for (op, target, others, expected) in cases {
            let mut inside = vec![Some(target)];
            inside.extend(others.iter().map(|&v| Some(v)));
            let m = col(&inside);
            assert_eq!(apply_operator(&m, 0, 0, op, &mut rng()), Ok(Assessment::Defined(expected)));

            // target in column 0, society values in column 1 read by row 0
            let n = others.len() + 1;
            let mut m = AssessmentMatrix::undefined(n).unwrap();
            m.set(0, 1, Assessment::new(target).unwrap()).unwrap();
            for (k, &v) in others.iter().enumerate() {
                m.set(k + 1, 1, Assessment::new(v).unwrap()).unwrap();
            }
            let mean_outside = others.iter().sum::<i32>() as f64 / others.len() as f64;
            let expected_outside = match op {
                OperatorChoice::ModerateOptimistic if mean_outside > target as f64 => target + 1,
                OperatorChoice::ModerateOptimistic => target,
                _ => mean_outside.trunc() as i32,
            };
            assert_eq!(expected_outside, expected as i32);
        }
    }

    #[test]
    fn consensus_rounds_toward_zero() {
        let m = col(&[Some(0), Some(-2), Some(-1), Some(-1)]);
        assert_eq!(
            apply_operator(&m, 0, 0, OperatorChoice::ConsensusSeeker, &mut rng()),
            Ok(Assessment::Defined(-1))
        );
        // mean -1/3 rounds up to 0, mean 5/3 rounds down to 1
        let m = col(&[Some(1), Some(-1), Some(-1)]);
        assert_eq!(
            apply_operator(&m, 0, 0, OperatorChoice::ConsensusSeeker, &mut rng()),
            Ok(Assessment::Defined(0))
        );
        let m = col(&[Some(1), Some(2), Some(2)]);
        assert_eq!(
            apply_operator(&m, 0, 0, OperatorChoice::ConsensusSeeker, &mut rng()),
            Ok(Assessment::Defined(1))
        );
    }

    #[test]
    fn undefined_is_absorbing() {
        let m = col(&[None, Some(2), Some(-2)]);
        for op in OperatorChoice::ALL {
            assert_eq!(apply_operator(&m, 0, 0, op, &mut rng()), Ok(Assessment::Undefined));
        }
    }

    #[test]
    fn step_society_examples() {
        let m = AssessmentMatrix::from_values(&[&[Some(0)]]).unwrap();
        let out = step_society(&m, &[OperatorChoice::ModerateOptimistic], &mut rng()).unwrap();
        assert_eq!(out, m);

        let m = AssessmentMatrix::undefined(3).unwrap();
        let out = step_society(&m, &[OperatorChoice::AssessmentHopping; 3], &mut rng()).unwrap();
        assert_eq!(out, m);

        let m = AssessmentMatrix::filled(3, Assessment::Defined(1)).unwrap();
        let out = step_society(&m, &[OperatorChoice::ConsensusSeeker; 3], &mut rng()).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn step_society_checks_assignment_length() {
        let m = AssessmentMatrix::filled(2, Assessment::Defined(0)).unwrap();
        assert!(matches!(
            step_society(&m, &[OperatorChoice::ConsensusSeeker], &mut rng()),
            Err(QadError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn roc_scale() {
        let a = AssessmentMatrix::filled(3, Assessment::Defined(0)).unwrap();
        assert_eq!(rate_of_change(&a, &a), Ok(1));

        let b = AssessmentMatrix::filled(3, Assessment::Defined(1)).unwrap();
        assert_eq!(rate_of_change(&a, &b), Ok(10));

        let mut c = a.clone();
        c.set(0, 1, Assessment::Defined(2)).unwrap();
        c.set(2, 2, Assessment::Undefined).unwrap();
        assert_eq!(rate_of_change(&a, &c), Ok(3));

        let small = AssessmentMatrix::filled(2, Assessment::Defined(0)).unwrap();
        assert!(rate_of_change(&a, &small).is_err());
    }

    #[test]
    fn quantize_quintiles() {
        let q = |s| quantize_observation(s).unwrap().value().unwrap();
        assert_eq!(q(0.0), -2);
        assert_eq!(q(0.199), -2);
        assert_eq!(q(0.2), -1);
        assert_eq!(q(0.4), 0);
        assert_eq!(q(0.55), 0);
        assert_eq!(q(0.6), 1);
        assert_eq!(q(0.8), 2);
        assert_eq!(q(1.0), 2);
        assert!(quantize_observation(-0.01).is_err());
        assert!(quantize_observation(1.01).is_err());
        assert!(quantize_observation(f64::NAN).is_err());
    }

    #[test]
    fn assessment_range() {
        assert!(Assessment::new(3).is_err());
        assert!(Assessment::new(-3).is_err());
        assert_eq!(Assessment::new(-2), Ok(Assessment::Defined(-2)));
        assert_eq!(Assessment::Undefined.to_string(), "-");
    }
}
