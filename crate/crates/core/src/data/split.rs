use chrono::Datelike;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};

/// Half-open range of day indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DayRange {
    pub start: usize,
    pub end: usize,
}

impl DayRange {
    pub fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, day: usize) -> bool {
        (self.start..self.end).contains(&day)
    }

    /// First `n` days of the range (or all of it when shorter).
    pub fn take(&self, n: usize) -> Self {
        Self::new(self.start, self.start + n.min(self.len()))
    }

    /// `n` days centred in the range.
    pub fn middle(&self, n: usize) -> Self {
        let n = n.min(self.len());
        let start = self.start + (self.len() - n) / 2;
        Self::new(start, start + n)
    }

    fn overlaps(&self, other: &Self) -> bool {
        self.start < other.end && other.start < self.end
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Splits {
    pub train: DayRange,
    pub validation: DayRange,
    pub test: DayRange,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitSpec {
    /// 11:1:4 calendar quarters for train, validation and test.
    Default,
    /// Day fractions, normalised to sum to one.
    Fractions {
        train: f64,
        validation: f64,
        test: f64,
    },
    Explicit(Splits),
}

/// Day indices at which each calendar quarter starts (the first day always
/// counts as a boundary).
fn quarter_starts(ds: &Dataset) -> Vec<usize> {
    (0..ds.num_days())
        .filter(|&d| {
            let date = ds.date(d);
            d == 0 || (date.day() == 1 && date.month0() % 3 == 0)
        })
        .collect()
}

fn by_fractions(days: usize, fr: [f64; 3]) -> Result<Splits> {
    if fr.iter().any(|f| !(*f > 0.0)) {
        return Err(Error::invalid("split fractions must be positive"));
    }
    let total: f64 = fr.iter().sum();
    let train = ((fr[0] / total) * days as f64).round() as usize;
    let val = (((fr[1] / total) * days as f64).round() as usize).max(1);
    if train == 0 || train + val >= days {
        return Err(Error::invalid(format!("{days} days are too few to split")));
    }
    Ok(Splits {
        train: DayRange::new(0, train),
        validation: DayRange::new(train, train + val),
        test: DayRange::new(train + val, days),
    })
}

impl Splits {
    pub fn validate(&self, num_days: usize) -> Result<()> {
        let parts = [self.train, self.validation, self.test];
        if parts.iter().any(|r| r.is_empty() || r.end > num_days) {
            return Err(Error::invalid(format!(
                "split ranges must be non-empty and inside 0..{num_days}: {self:?}"
            )));
        }
        for (i, a) in parts.iter().enumerate() {
            for b in &parts[i + 1..] {
                if a.overlaps(b) {
                    return Err(Error::invalid(format!(
                        "split ranges overlap: {a:?} and {b:?}"
                    )));
                }
            }
        }
        if !(self.train.end <= self.validation.start && self.validation.end <= self.test.start) {
            return Err(Error::invalid(
                "splits must be ordered train < validation < test",
            ));
        }
        Ok(())
    }

    pub fn resolve(ds: &Dataset, spec: &SplitSpec) -> Result<Splits> {
        let days = ds.num_days();
        let splits = match spec {
            SplitSpec::Explicit(s) => *s,
            SplitSpec::Fractions {
                train,
                validation,
                test,
            } => by_fractions(days, [*train, *validation, *test])?,
            SplitSpec::Default => {
                let starts = quarter_starts(ds);
                let q = starts.len();
                if q < 3 {
                    by_fractions(days, [11.0, 1.0, 4.0])?
                } else {
                    let test_q = ((q as f64 * 4.0 / 16.0).round() as usize).max(1);
                    let val_q = ((q as f64 / 16.0).round() as usize).max(1);
                    let train_q = q - test_q - val_q;
                    if train_q == 0 {
                        by_fractions(days, [11.0, 1.0, 4.0])?
                    } else {
                        let v0 = starts[train_q];
                        let t0 = starts[train_q + val_q];
                        Splits {
                            train: DayRange::new(0, v0),
                            validation: DayRange::new(v0, t0),
                            test: DayRange::new(t0, days),
                        }
                    }
                }
            }
        };
        splits.validate(days)?;
        Ok(splits)
    }
}

/// Record train/validation/test boundaries on the dataset.
pub fn split_dataset(dataset: &Dataset, spec: &SplitSpec) -> Result<Dataset> {
    let splits = Splits::resolve(dataset, spec)?;
    let mut out = dataset.clone();
    out.set_splits(splits);
    Ok(out)
}
