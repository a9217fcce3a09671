use std::fmt;

use serde::Serialize;

/// Precision, recall and F-score from raw counts.
///
/// An empty denominator yields 0 with the matching `*_undefined` flag set,
/// except that nothing predicted against nothing expected scores 1.0 and
/// sets `vacuous`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Prf {
    pub matched: usize,
    pub predicted: usize,
    pub gold: usize,
    pub precision: f64,
    pub recall: f64,
    pub f: f64,
    pub precision_undefined: bool,
    pub recall_undefined: bool,
    pub vacuous: bool,
}

impl Prf {
    pub fn from_counts(matched: usize, predicted: usize, gold: usize) -> Self {
        assert!(matched <= predicted && matched <= gold, "matched exceeds a total");
        if predicted == 0 && gold == 0 {
            return Prf {
                precision: 1.0,
                recall: 1.0,
                f: 1.0,
                vacuous: true,
                ..Prf::default()
            };
        }
        let precision = if predicted == 0 { 0.0 } else { matched as f64 / predicted as f64 };
        let recall = if gold == 0 { 0.0 } else { matched as f64 / gold as f64 };
        Prf {
            matched,
            predicted,
            gold,
            precision,
            recall,
            f: f_score(precision, recall),
            precision_undefined: predicted == 0,
            recall_undefined: gold == 0,
            vacuous: false,
        }
    }

    pub fn add(&self, other: &Prf) -> Prf {
        Prf::from_counts(
            self.matched + other.matched,
            self.predicted + other.predicted,
            self.gold + other.gold,
        )
    }
}

impl fmt::Display for Prf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P={:.4} R={:.4} F={:.4}", self.precision, self.recall, self.f)
    }
}

pub fn f_score(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}
