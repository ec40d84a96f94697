//! Phone posterior matrices emitted by the streaming acoustic front-end.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::WindowView;

/// How strictly [`PosteriorMatrix::validate`] checks matrix contents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidationMode {
    /// Entries in [0, 1] and every row sums to 1 within 1e-3.
    Strict,
    /// Entries in [0, 1]; row sums unconstrained.
    Lenient,
}

/// T frames by F phone classes of probabilities, row-major. Probabilities
/// are carried as f64 internally; the on-disk format stores f32.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorMatrix {
    data: Vec<f64>,
    num_phones: usize,
    frame_shift_ms: f32,
}

impl PosteriorMatrix {
    /// Builds a matrix from a flat row-major buffer. `frame_shift_ms` is
    /// metadata only and must be positive.
    pub fn from_flat(data: Vec<f64>, num_phones: usize, frame_shift_ms: f32) -> Result<Self> {
        if num_phones == 0 {
            return Err(Error::Shape {
                detail: "posterior needs at least one phone class".into(),
            });
        }
        if !data.len().is_multiple_of(num_phones) {
            return Err(Error::Shape {
                detail: format!(
                    "buffer of {} values is not a multiple of {num_phones} phone classes",
                    data.len()
                ),
            });
        }
        if !(frame_shift_ms.is_finite() && frame_shift_ms > 0.0) {
            return Err(Error::Shape {
                detail: format!("frame_shift_ms must be positive, got {frame_shift_ms}"),
            });
        }
        Ok(PosteriorMatrix {
            data,
            num_phones,
            frame_shift_ms,
        })
    }

    /// Builds a matrix from per-frame rows, all of equal length.
    pub fn from_rows(rows: &[Vec<f64>], frame_shift_ms: f32) -> Result<Self> {
        let num_phones = rows.first().map_or(1, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * num_phones);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != num_phones {
                return Err(Error::Shape {
                    detail: format!("row {t} has {} entries, expected {num_phones}", row.len()),
                });
            }
            data.extend_from_slice(row);
        }
        PosteriorMatrix::from_flat(data, num_phones, frame_shift_ms)
    }

    /// Number of frames T.
    pub fn frames(&self) -> usize {
        self.data.len() / self.num_phones
    }

    /// Number of phone classes F.
    pub fn num_phones(&self) -> usize {
        self.num_phones
    }

    pub fn frame_shift_ms(&self) -> f32 {
        self.frame_shift_ms
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.num_phones..(t + 1) * self.num_phones]
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Scoring view over the whole matrix.
    pub fn view(&self) -> WindowView<'_> {
        WindowView::new(&self.data, self.num_phones).expect("matrix buffer is always consistent")
    }

    /// Splits into consecutive chunks of `chunk_frames` frames; the last
    /// chunk may be shorter. Mirrors how a streaming front-end would emit
    /// this utterance.
    pub fn chunks(&self, chunk_frames: usize) -> Vec<PosteriorMatrix> {
        assert!(chunk_frames > 0, "chunk_frames must be positive");
        self.data
            .chunks(chunk_frames * self.num_phones)
            .map(|slice| PosteriorMatrix {
                data: slice.to_vec(),
                num_phones: self.num_phones,
                frame_shift_ms: self.frame_shift_ms,
            })
            .collect()
    }

    /// Checks matrix contents. Strict acceptance implies lenient acceptance.
    /// Reports the first offending row.
    pub fn validate(&self, mode: ValidationMode) -> Result<()> {
        for t in 0..self.frames() {
            let row = self.row(t);
            for (f, &value) in row.iter().enumerate() {
                if !(0.0..=1.0).contains(&value) {
                    return Err(Error::EntryOutOfRange {
                        row: t,
                        col: f,
                        value,
                    });
                }
            }
            if mode == ValidationMode::Strict {
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > 1e-3 {
                    return Err(Error::RowNotStochastic { row: t, sum });
                }
            }
        }
        Ok(())
    }

    /// Copy of this matrix without the frames whose `blank` probability
    /// exceeds `dominance`. Remaining rows are kept as-is (no renormalizing).
    pub fn without_blank_frames(
        &self,
        blank: crate::types::PhoneId,
        dominance: f64,
    ) -> Result<Self> {
        if blank.index() >= self.num_phones {
            return Err(Error::PhoneOutOfRange {
                phone: blank.0,
                inventory: self.num_phones,
            });
        }
        let mut data = Vec::with_capacity(self.data.len());
        for t in 0..self.frames() {
            let row = self.row(t);
            if row[blank.index()] <= dominance {
                data.extend_from_slice(row);
            }
        }
        Ok(PosteriorMatrix {
            data,
            num_phones: self.num_phones,
            frame_shift_ms: self.frame_shift_ms,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::PhoneId;

    fn matrix(rows: &[Vec<f64>]) -> PosteriorMatrix {
        PosteriorMatrix::from_rows(rows, 10.0).unwrap()
    }

    #[test]
    fn strict_accepts_identity() {
        let m = matrix(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        m.validate(ValidationMode::Strict).unwrap();
        m.validate(ValidationMode::Lenient).unwrap();
    }

    #[test]
    fn strict_rejects_low_row_sum_lenient_accepts() {
        let m = matrix(&[vec![0.5, 0.4]]);
        match m.validate(ValidationMode::Strict) {
            Err(Error::RowNotStochastic { row: 0, sum }) => assert!((sum - 0.9).abs() < 1e-12),
            other => panic!("expected row-sum rejection, got {other:?}"),
        }
        m.validate(ValidationMode::Lenient).unwrap();
    }

    #[test]
    fn out_of_range_entry_rejected_in_both_modes() {
        let m = matrix(&[vec![1.2, -0.2]]);
        assert!(matches!(
            m.validate(ValidationMode::Strict),
            Err(Error::EntryOutOfRange { row: 0, col: 0, .. })
        ));
        assert!(m.validate(ValidationMode::Lenient).is_err());
    }

    #[test]
    fn empty_matrix_is_valid() {
        let m = PosteriorMatrix::from_flat(vec![], 4, 10.0).unwrap();
        assert_eq!(m.frames(), 0);
        m.validate(ValidationMode::Strict).unwrap();
    }

    #[test]
    fn shape_errors() {
        assert!(PosteriorMatrix::from_flat(vec![0.0; 3], 2, 10.0).is_err());
        assert!(PosteriorMatrix::from_flat(vec![], 0, 10.0).is_err());
        assert!(PosteriorMatrix::from_flat(vec![0.0; 2], 2, 0.0).is_err());
        assert!(PosteriorMatrix::from_rows(&[vec![0.1], vec![0.1, 0.2]], 10.0).is_err());
    }

    #[test]
    fn chunk_split_covers_all_frames() {
        let rows: Vec<Vec<f64>> = (0..7).map(|t| vec![t as f64 / 10.0, 0.0]).collect();
        let m = matrix(&rows);
        let chunks = m.chunks(3);
        assert_eq!(
            chunks
                .iter()
                .map(PosteriorMatrix::frames)
                .collect::<Vec<_>>(),
            [3, 3, 1]
        );
        assert_eq!(chunks[2].row(0), m.row(6));
    }

    #[test]
    fn blank_frame_dropping() {
        let m = matrix(&[vec![0.98, 0.02], vec![0.3, 0.7], vec![0.96, 0.04]]);
        let kept = m.without_blank_frames(PhoneId(0), 0.95).unwrap();
        assert_eq!(kept.frames(), 1);
        assert_eq!(kept.row(0), &[0.3, 0.7]);
        assert!(m.without_blank_frames(PhoneId(5), 0.95).is_err());
    }
}
