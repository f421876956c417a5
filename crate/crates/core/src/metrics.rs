//! Classification metrics over seven-class predictions.
//!
//! Confusion rows are gold classes, columns predictions. MAE and RMSE are
//! measured on class weights (-3..=3), so confusing moderate with strong
//! costs less than flipping the sign. Macro averages skip classes that never
//! occur in gold.

use std::fmt::Write as _;
use std::path::Path;

use crate::polarity::SentimentClass;
use crate::{Error, Result, Scalar};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    k: usize,
    counts: Vec<u64>,
    n: u64,
}

impl ConfusionMatrix {
    pub fn zeros(k: usize) -> Self {
        Self {
            k,
            counts: vec![0; k * k],
            n: 0,
        }
    }

    /// From explicit rows (gold) of column (predicted) counts.
    pub fn from_rows(rows: &[Vec<u64>]) -> Result<Self> {
        let k = rows.len();
        let mut cm = Self::zeros(k);
        for (g, row) in rows.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: row.len(),
                });
            }
            for (p, &c) in row.iter().enumerate() {
                cm.counts[g * k + p] = c;
                cm.n += c;
            }
        }
        Ok(cm)
    }

    pub fn from_indices(k: usize, golds: &[usize], preds: &[usize]) -> Result<Self> {
        if golds.len() != preds.len() {
            return Err(Error::LengthMismatch(golds.len(), preds.len()));
        }
        if golds.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let mut cm = Self::zeros(k);
        for (&g, &p) in golds.iter().zip(preds) {
            for i in [g, p] {
                if i >= k {
                    return Err(Error::ClassOutOfRange {
                        index: i,
                        num_classes: k,
                    });
                }
            }
            cm.add(g, p);
        }
        Ok(cm)
    }

    pub fn add(&mut self, gold: usize, pred: usize) {
        self.counts[gold * self.k + pred] += 1;
        self.n += 1;
    }

    /// Sums two matrices of the same size.
    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if other.k != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                got: other.k,
            });
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.n += other.n;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn get(&self, gold: usize, pred: usize) -> u64 {
        self.counts[gold * self.k + pred]
    }

    pub fn row_sum(&self, gold: usize) -> u64 {
        (0..self.k).map(|p| self.get(gold, p)).sum()
    }

    pub fn col_sum(&self, pred: usize) -> u64 {
        (0..self.k).map(|g| self.get(g, pred)).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.k).map(|c| self.get(c, c)).sum()
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.counts.chunks(self.k.max(1)).map(<[u64]>::to_vec).collect()
    }

    fn nonempty(&self) -> Result<()> {
        if self.n == 0 {
            Err(Error::EmptyMatrix)
        } else {
            Ok(())
        }
    }
}

/// Seven-class confusion matrix.
pub fn confusion(golds: &[SentimentClass], preds: &[SentimentClass]) -> Result<ConfusionMatrix> {
    let g: Vec<usize> = golds.iter().map(|c| c.index()).collect();
    let p: Vec<usize> = preds.iter().map(|c| c.index()).collect();
    ConfusionMatrix::from_indices(SentimentClass::COUNT, &g, &p)
}

fn ratio<F: Scalar>(num: u64, den: u64) -> F {
    if den == 0 {
        F::zero()
    } else {
        F::from_count(num as usize) / F::from_count(den as usize)
    }
}

pub fn accuracy<F: Scalar>(cm: &ConfusionMatrix) -> Result<F> {
    cm.nonempty()?;
    Ok(ratio(cm.trace(), cm.n))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores<F> {
    pub precision: F,
    pub recall: F,
    pub f1: F,
    /// Gold occurrences of the class.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionRecall<F> {
    pub per_class: Vec<ClassScores<F>>,
    pub macro_precision: F,
    pub macro_recall: F,
    pub macro_f1: F,
}

fn harmonic<F: Scalar>(p: F, r: F) -> F {
    if p + r == F::zero() {
        F::zero()
    } else {
        F::from_real(2.0) * p * r / (p + r)
    }
}

pub fn precision_recall_f1<F: Scalar>(cm: &ConfusionMatrix) -> Result<PrecisionRecall<F>> {
    cm.nonempty()?;
    let per_class: Vec<ClassScores<F>> = (0..cm.k)
        .map(|c| {
            let tp = cm.get(c, c);
            let precision = ratio(tp, cm.col_sum(c));
            let recall = ratio(tp, cm.row_sum(c));
            ClassScores {
                precision,
                recall,
                f1: harmonic(precision, recall),
                support: cm.row_sum(c),
            }
        })
        .collect();
    let present: Vec<&ClassScores<F>> = per_class.iter().filter(|s| s.support > 0).collect();
    let m = F::from_count(present.len());
    let mean = |f: fn(&ClassScores<F>) -> F| present.iter().map(|s| f(s)).sum::<F>() / m;
    Ok(PrecisionRecall {
        macro_precision: mean(|s| s.precision),
        macro_recall: mean(|s| s.recall),
        macro_f1: mean(|s| s.f1),
        per_class,
    })
}

/// Mean absolute and root mean squared error between integer weights.
pub fn mae_rmse_weights<F: Scalar>(golds: &[i64], preds: &[i64]) -> Result<(F, F)> {
    if golds.len() != preds.len() {
        return Err(Error::LengthMismatch(golds.len(), preds.len()));
    }
    if golds.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let (abs, sq) = golds
        .iter()
        .zip(preds)
        .fold((0u64, 0u64), |(a, s), (g, p)| {
            let d = g.abs_diff(*p);
            (a + d, s + d * d)
        });
    let n = golds.len() as u64;
    Ok((ratio(abs, n), ratio::<F>(sq, n).sqrt()))
}

/// MAE and RMSE over class weights.
pub fn mae_rmse<F: Scalar>(golds: &[SentimentClass], preds: &[SentimentClass]) -> Result<(F, F)> {
    let g: Vec<i64> = golds.iter().map(|c| c.weight()).collect();
    let p: Vec<i64> = preds.iter().map(|c| c.weight()).collect();
    mae_rmse_weights(&g, &p)
}

/// Cohen's kappa. When chance agreement is 1 (a single class in both gold
/// and predictions) the result is 1 for perfect agreement and 0 otherwise.
pub fn kappa<F: Scalar>(cm: &ConfusionMatrix) -> Result<F> {
    cm.nonempty()?;
    let n = F::from_count(cm.n as usize);
    let p_o: F = accuracy(cm)?;
    let p_e = (0..cm.k)
        .map(|c| F::from_count(cm.row_sum(c) as usize) * F::from_count(cm.col_sum(c) as usize))
        .sum::<F>()
        / (n * n);
    if p_e == F::one() {
        return Ok(if p_o == F::one() { F::one() } else { F::zero() });
    }
    Ok((p_o - p_e) / (F::one() - p_e))
}

/// Recall of the positive super-class (weak, moderate and strong positive):
/// a gold-positive post predicted into any positive class counts as a hit.
pub fn true_positive_rate<F: Scalar>(cm: &ConfusionMatrix) -> Result<F> {
    cm.nonempty()?;
    if cm.k != SentimentClass::COUNT {
        return Err(Error::DimensionMismatch {
            expected: SentimentClass::COUNT,
            got: cm.k,
        });
    }
    let positive: Vec<usize> = SentimentClass::ALL
        .iter()
        .filter(|c| c.is_positive())
        .map(|c| c.index())
        .collect();
    let gold_pos: u64 = positive.iter().map(|&g| cm.row_sum(g)).sum();
    if gold_pos == 0 {
        return Err(Error::UndefinedTpr);
    }
    let tp: u64 = positive
        .iter()
        .flat_map(|&g| positive.iter().map(move |&p| (g, p)))
        .map(|(g, p)| cm.get(g, p))
        .sum();
    Ok(ratio(tp, gold_pos))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport<F> {
    pub accuracy: F,
    pub macro_precision: F,
    pub macro_recall: F,
    pub macro_f1: F,
    pub mae: F,
    pub rmse: F,
    pub kappa: F,
    /// `None` when the gold labels contain no positive post.
    pub tpr: Option<F>,
    pub per_class: Vec<ClassScores<F>>,
    pub confusion: ConfusionMatrix,
}

pub fn evaluate<F: Scalar>(golds: &[SentimentClass], preds: &[SentimentClass]) -> Result<EvalReport<F>> {
    let cm = confusion(golds, preds)?;
    let prf = precision_recall_f1(&cm)?;
    let (mae, rmse) = mae_rmse(golds, preds)?;
    let tpr = match true_positive_rate(&cm) {
        Ok(t) => Some(t),
        Err(Error::UndefinedTpr) => None,
        Err(e) => return Err(e),
    };
    Ok(EvalReport {
        accuracy: accuracy(&cm)?,
        macro_precision: prf.macro_precision,
        macro_recall: prf.macro_recall,
        macro_f1: prf.macro_f1,
        mae,
        rmse,
        kappa: kappa(&cm)?,
        tpr,
        per_class: prf.per_class,
        confusion: cm,
    })
}

fn opt<F: Scalar>(v: Option<F>) -> String {
    v.map_or_else(|| "undefined".to_string(), |v| v.to_string())
}

impl<F: Scalar> EvalReport<F> {
    /// `key=value` lines followed by the raw confusion matrix, one
    /// space-separated gold row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let w = &mut out;
        writeln!(w, "n={}", self.confusion.n()).unwrap();
        writeln!(w, "accuracy={}", self.accuracy).unwrap();
        writeln!(w, "macro_precision={}", self.macro_precision).unwrap();
        writeln!(w, "macro_recall={}", self.macro_recall).unwrap();
        writeln!(w, "macro_f1={}", self.macro_f1).unwrap();
        writeln!(w, "mae={}", self.mae).unwrap();
        writeln!(w, "rmse={}", self.rmse).unwrap();
        writeln!(w, "kappa={}", self.kappa).unwrap();
        writeln!(w, "tpr={}", opt(self.tpr)).unwrap();
        for (i, s) in self.per_class.iter().enumerate() {
            let name = SentimentClass::from_index(i).map_or_else(|| format!("class{i}"), |c| c.name().to_string());
            writeln!(w, "precision.{name}={}", s.precision).unwrap();
            writeln!(w, "recall.{name}={}", s.recall).unwrap();
            writeln!(w, "f1.{name}={}", s.f1).unwrap();
            writeln!(w, "support.{name}={}", s.support).unwrap();
        }
        writeln!(w, "#confusion rows=gold cols=predicted").unwrap();
        for row in self.confusion.rows() {
            let cells: Vec<String> = row.iter().map(u64::to_string).collect();
            writeln!(w, "{}", cells.join(" ")).unwrap();
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

/// One row of a per-epoch metric trace.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow<F> {
    pub epoch: usize,
    pub loss: F,
    pub report: EvalReport<F>,
}

impl<F: Scalar> TraceRow<F> {
    pub const HEADER: &'static str = "iteration\tloss\taccuracy\tprecision\trecall\tf1\tmae\trmse\tkappa\ttpr";

    pub fn to_line(&self) -> String {
        let r = &self.report;
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.epoch,
            self.loss,
            r.accuracy,
            r.macro_precision,
            r.macro_recall,
            r.macro_f1,
            r.mae,
            r.rmse,
            r.kappa,
            opt(r.tpr)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use SentimentClass::*;

    fn two_by_two() -> ConfusionMatrix {
        ConfusionMatrix::from_rows(&[vec![2, 1], vec![0, 3]]).unwrap()
    }

    #[test]
    fn confusion_basics() {
        let cm = confusion(&[WeakPos], &[WeakPos]).unwrap();
        assert_eq!(cm.get(4, 4), 1);
        assert_eq!(cm.n(), 1);
        let all = SentimentClass::ALL;
        let cm = confusion(&all, &all).unwrap();
        for g in 0..7 {
            for p in 0..7 {
                assert_eq!(cm.get(g, p), u64::from(g == p));
            }
        }
        assert!(matches!(confusion(&[Neutral], &[]), Err(Error::LengthMismatch(1, 0))));
        assert!(matches!(confusion(&[], &[]), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn accuracy_fixtures() {
        assert_eq!(accuracy::<f64>(&two_by_two()).unwrap(), 5.0 / 6.0);
        let zero_diag = ConfusionMatrix::from_rows(&[vec![0, 2], vec![3, 0]]).unwrap();
        assert_eq!(accuracy::<f64>(&zero_diag).unwrap(), 0.0);
        assert!(accuracy::<f64>(&ConfusionMatrix::zeros(7)).is_err());
    }

    #[test]
    fn precision_recall_fixtures() {
        let perfect = ConfusionMatrix::from_rows(&[vec![3, 0], vec![0, 4]]).unwrap();
        let prf = precision_recall_f1::<f64>(&perfect).unwrap();
        assert_eq!((prf.macro_precision, prf.macro_recall, prf.macro_f1), (1.0, 1.0, 1.0));

        // Class 1: TP = 3, FP = 1 (gold 0 predicted 1), FN = 0.
        let prf = precision_recall_f1::<f64>(&two_by_two()).unwrap();
        assert_eq!(prf.per_class[1].precision, 0.75);
        assert_eq!(prf.per_class[0].precision, 1.0);
        assert_eq!(prf.per_class[0].recall, 2.0 / 3.0);

        // TP = 2, FP = 1 for class 0.
        let cm = ConfusionMatrix::from_rows(&[vec![2, 0], vec![1, 1]]).unwrap();
        let prf = precision_recall_f1::<f64>(&cm).unwrap();
        assert_eq!(prf.per_class[0].precision, 2.0 / 3.0);

        let cm = ConfusionMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        let s = precision_recall_f1::<f64>(&cm).unwrap().per_class[0];
        assert_eq!(s.f1, s.precision);
    }

    #[test]
    fn macro_skips_absent_gold_classes() {
        // Class 2 never occurs in gold but is predicted once.
        let cm = ConfusionMatrix::from_rows(&[vec![1, 0, 0], vec![0, 1, 1], vec![0, 0, 0]]).unwrap();
        let prf = precision_recall_f1::<f64>(&cm).unwrap();
        assert_eq!(prf.macro_recall, 0.75);
    }

    #[test]
    fn mae_rmse_fixtures() {
        let (mae, rmse) = mae_rmse_weights::<f64>(&[1, -2], &[3, -2]).unwrap();
        assert_eq!(mae, 1.0);
        assert!((rmse - 2f64.sqrt()).abs() < 1e-12);
        let (mae, rmse) = mae_rmse::<f64>(&[WeakPos, ModNeg], &[StrongPos, ModNeg]).unwrap();
        assert_eq!((mae, rmse), (1.0, 2f64.sqrt()));
        assert_eq!(mae_rmse::<f64>(&[Neutral], &[Neutral]).unwrap(), (0.0, 0.0));
        assert!(mae_rmse::<f64>(&[Neutral], &[]).is_err());
    }

    #[test]
    fn kappa_fixtures() {
        let uniform = ConfusionMatrix::from_rows(&[vec![1, 1], vec![1, 1]]).unwrap();
        assert_eq!(kappa::<f64>(&uniform).unwrap(), 0.0);
        assert!((kappa::<f64>(&two_by_two()).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let perfect = ConfusionMatrix::from_rows(&[vec![2, 0], vec![0, 5]]).unwrap();
        assert_eq!(kappa::<f64>(&perfect).unwrap(), 1.0);
        let single = ConfusionMatrix::from_rows(&[vec![4, 0], vec![0, 0]]).unwrap();
        assert_eq!(kappa::<f64>(&single).unwrap(), 1.0);
    }

    #[test]
    fn tpr_fixtures() {
        let cm = confusion(&[WeakPos, StrongPos], &[ModPos, StrongPos]).unwrap();
        assert_eq!(true_positive_rate::<f64>(&cm).unwrap(), 1.0);
        let cm = confusion(&[WeakPos, ModPos, StrongPos, Neutral], &[WeakPos, Neutral, StrongPos, WeakPos]).unwrap();
        assert_eq!(true_positive_rate::<f64>(&cm).unwrap(), 2.0 / 3.0);
        let cm = confusion(&[Neutral, WeakNeg], &[WeakPos, WeakNeg]).unwrap();
        assert!(matches!(true_positive_rate::<f64>(&cm), Err(Error::UndefinedTpr)));
    }

    #[test]
    fn report_works_in_single_precision() {
        let r = evaluate::<f32>(&[WeakPos, Neutral], &[WeakPos, WeakNeg]).unwrap();
        assert_eq!(r.accuracy, 0.5f32);
        assert_eq!(r.tpr, Some(1.0f32));
        let text = r.to_text();
        assert!(text.contains("accuracy=0.5\n"));
        assert!(text.ends_with("0 0 0 0 1 0 0\n0 0 0 0 0 0 0\n0 0 0 0 0 0 0\n"));
    }
}
