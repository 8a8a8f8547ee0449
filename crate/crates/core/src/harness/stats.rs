//! Rank statistics for experiment summaries.

use serde::{Deserialize, Serialize};

use crate::error::{IdentError, Result};

/// Ranks starting at 1, ties replaced by their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

/// Spearman rank correlation (Pearson correlation of average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(IdentError::DegenerateInput(format!(
            "need two equal-length samples of size >= 2 (got {} and {})",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|v| v.is_nan()) {
        return Err(IdentError::DegenerateInput("NaN in sample".into()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
        .ok_or_else(|| IdentError::DegenerateInput("constant sample".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    /// Larger scores indicate the positive class.
    HigherIsPositive,
    /// Smaller scores indicate the positive class.
    LowerIsPositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocResult {
    pub auc: f64,
    /// `(false positive rate, true positive rate)` from `(0, 0)` to `(1, 1)`.
    pub curve: Vec<(f64, f64)>,
}

/// ROC curve over all distinct thresholds (tied scores enter together) and its trapezoid area.
pub fn roc_auc(scores: &[f64], labels: &[bool], orientation: Orientation) -> Result<RocResult> {
    if scores.len() != labels.len() || scores.is_empty() {
        return Err(IdentError::DegenerateInput("scores and labels differ in length".into()));
    }
    if scores.iter().any(|v| v.is_nan()) {
        return Err(IdentError::DegenerateInput("NaN score".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(IdentError::DegenerateInput("both classes must be present".into()));
    }
    let key: Vec<f64> = match orientation {
        Orientation::HigherIsPositive => scores.to_vec(),
        Orientation::LowerIsPositive => scores.iter().map(|s| -s).collect(),
    };
    let mut idx: Vec<usize> = (0..key.len()).collect();
    idx.sort_by(|&a, &b| key[b].total_cmp(&key[a]));
    let mut curve = vec![(0.0, 0.0)];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j < idx.len() && key[idx[j]] == key[idx[i]] {
            if labels[idx[j]] {
                tp += 1;
            } else {
                fp += 1;
            }
            j += 1;
        }
        let (x0, y0) = *curve.last().expect("nonempty");
        let pt = (fp as f64 / neg as f64, tp as f64 / pos as f64);
        auc += (pt.0 - x0) * (pt.1 + y0) * 0.5;
        curve.push(pt);
        i = j;
    }
    Ok(RocResult { auc, curve })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spearman_extremes() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-15);
        assert!(spearman(&[1.0], &[1.0]).is_err());
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn spearman_with_ties_matches_reference() {
        // Reference value from the textbook average-rank definition.
        let x = [1.0, 2.0, 2.0, 4.0, 5.0];
        let y = [2.0, 1.0, 4.0, 3.0, 5.0];
        let rx = [1.0, 2.5, 2.5, 4.0, 5.0];
        let ry = [2.0, 1.0, 4.0, 3.0, 5.0];
        let want = pearson(&rx, &ry).unwrap();
        assert!((spearman(&x, &y).unwrap() - want).abs() < 1e-15);
        assert_eq!(average_ranks(&x), rx.to_vec());
    }

    #[test]
    fn auc_cases() {
        let s = [0.9, 0.8, 0.2, 0.1];
        let l = [true, true, false, false];
        assert_eq!(roc_auc(&s, &l, Orientation::HigherIsPositive).unwrap().auc, 1.0);
        assert_eq!(roc_auc(&s, &l, Orientation::LowerIsPositive).unwrap().auc, 0.0);
        let tied = roc_auc(&[1.0, 1.0], &[true, false], Orientation::HigherIsPositive).unwrap();
        assert_eq!(tied.auc, 0.5);
        assert_eq!(tied.curve, vec![(0.0, 0.0), (1.0, 1.0)]);
        let inf = roc_auc(
            &[1.0, f64::INFINITY, 2.0],
            &[true, false, false],
            Orientation::LowerIsPositive,
        )
        .unwrap();
        assert_eq!(inf.auc, 1.0);
        assert!(roc_auc(&[1.0], &[true], Orientation::HigherIsPositive).is_err());
    }

    #[test]
    fn auc_equals_pair_fraction() {
        let s = [0.3, 0.7, 0.7, 0.1, 0.5, 0.9, 0.2];
        let l = [true, false, true, false, true, true, false];
        let r = roc_auc(&s, &l, Orientation::HigherIsPositive).unwrap();
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..s.len() {
            for j in 0..s.len() {
                if l[i] && !l[j] {
                    pairs += 1.0;
                    wins += if s[i] > s[j] {
                        1.0
                    } else if s[i] == s[j] {
                        0.5
                    } else {
                        0.0
                    };
                }
            }
        }
        assert!((r.auc - wins / pairs).abs() < 1e-15);
        assert!(r.curve.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 >= w[0].1));
    }
}
