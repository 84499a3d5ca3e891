//! Precision/recall/F1 computation (per class and macro-averaged), the
//! composite metrics for staged predictions, and the multi-seed sensitivity
//! harness.

use crate::error::{Error, Result};
use crate::pipeline::MetalType;

/// Index of the row maximum; the first maximum wins ties (lowest id).
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// One-vs-rest confusion counts for a single class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    /// Precision, recall, F1 with the zero-denominator convention: a metric
    /// with an empty denominator is 0 and the degenerate flag is set.
    fn metrics(&self) -> ClassMetrics {
        let mut degenerate = false;
        let precision = if self.true_pos + self.false_pos == 0 {
            degenerate = true;
            0.0
        } else {
            self.true_pos as f64 / (self.true_pos + self.false_pos) as f64
        };
        let recall = if self.true_pos + self.false_neg == 0 {
            degenerate = true;
            0.0
        } else {
            self.true_pos as f64 / (self.true_pos + self.false_neg) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        ClassMetrics {
            counts: *self,
            precision,
            recall,
            f1,
            support: self.true_pos + self.false_neg,
            degenerate,
        }
    }
}

/// Metrics of one class.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClassMetrics {
    pub counts: ConfusionCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Number of truth items of this class.
    pub support: u64,
    /// True when a zero denominator forced a metric to 0.
    pub degenerate: bool,
}

/// Per-class metrics plus unweighted macro averages over all classes
/// (zero-support classes contribute 0).
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub classes: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
}

impl MetricsReport {
    fn from_counts(counts: &[ConfusionCounts]) -> MetricsReport {
        let classes: Vec<ClassMetrics> = counts.iter().map(|c| c.metrics()).collect();
        let n = classes.len() as f64;
        MetricsReport {
            macro_precision: classes.iter().map(|c| c.precision).sum::<f64>() / n,
            macro_recall: classes.iter().map(|c| c.recall).sum::<f64>() / n,
            macro_f1: classes.iter().map(|c| c.f1).sum::<f64>() / n,
            classes,
        }
    }

    /// The positive class of a binary report.
    pub fn positive(&self) -> &ClassMetrics {
        &self.classes[1]
    }
}

/// Binary precision/recall/F1; class 1 is the positive class.
pub fn binary_metrics(truth: &[bool], pred: &[bool]) -> Result<MetricsReport> {
    if truth.len() != pred.len() {
        return Err(Error::Input(format!(
            "binary_metrics: {} truth items vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let mut counts = [ConfusionCounts::default(); 2];
    for (&t, &p) in truth.iter().zip(pred) {
        for class in 0..2 {
            let is_t = (class == 1) == t;
            let is_p = (class == 1) == p;
            match (is_t, is_p) {
                (true, true) => counts[class].true_pos += 1,
                (false, true) => counts[class].false_pos += 1,
                (true, false) => counts[class].false_neg += 1,
                (false, false) => {}
            }
        }
    }
    Ok(MetricsReport::from_counts(&counts))
}

/// One-vs-rest metrics for `n_classes` integer labels with unweighted macro
/// averages over all classes, including zero-support ones.
pub fn multiclass_macro_metrics(
    truth: &[usize],
    pred: &[usize],
    n_classes: usize,
) -> Result<MetricsReport> {
    if truth.len() != pred.len() {
        return Err(Error::Input(format!(
            "multiclass_macro_metrics: {} truth items vs {} predictions",
            truth.len(),
            pred.len()
        )));
    }
    let mut counts = vec![ConfusionCounts::default(); n_classes];
    for (i, (&t, &p)) in truth.iter().zip(pred).enumerate() {
        if t >= n_classes || p >= n_classes {
            return Err(Error::Input(format!(
                "class id out of range at position {i}: truth {t}, pred {p}, {n_classes} classes"
            )));
        }
        if t == p {
            counts[t].true_pos += 1;
        } else {
            counts[p].false_pos += 1;
            counts[t].false_neg += 1;
        }
    }
    Ok(MetricsReport::from_counts(&counts))
}

/// Truth annotation of one residue, as carried by label files.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidueTruth {
    pub chain_id: String,
    pub index: usize,
    pub binding: bool,
    pub metal: Option<u8>,
}

/// Predicted annotation of one residue, as carried by prediction reports.
#[derive(Clone, Debug, PartialEq)]
pub struct ResiduePrediction {
    pub chain_id: String,
    pub index: usize,
    pub call: bool,
    pub metal: Option<u8>,
}

/// Metrics of a full staged prediction against truth labels.
#[derive(Clone, Debug, PartialEq)]
pub struct PipelineMetrics {
    /// Binary binding metrics over all labeled residues; a labeled residue
    /// with no prediction counts as a negative call.
    pub binding: MetricsReport,
    /// Metal-type metrics over true binders: a true binder predicted as the
    /// wrong metal counts against both classes; a true binder missed at
    /// stage 1 counts as a false negative of its class; predicted binders
    /// outside the truth set are excluded.
    pub metal: MetricsReport,
}

/// Scores staged predictions against truth labels. Duplicate residues on
/// either side are an input error.
pub fn pipeline_metrics(
    truth: &[ResidueTruth],
    preds: &[ResiduePrediction],
) -> Result<PipelineMetrics> {
    let mut by_residue: std::collections::BTreeMap<(&str, usize), &ResiduePrediction> =
        std::collections::BTreeMap::new();
    for p in preds {
        if by_residue.insert((p.chain_id.as_str(), p.index), p).is_some() {
            return Err(Error::Input(format!(
                "duplicate prediction for chain {} residue {}",
                p.chain_id, p.index
            )));
        }
    }
    let mut seen = std::collections::BTreeSet::new();
    let mut truth_flags = Vec::with_capacity(truth.len());
    let mut pred_flags = Vec::with_capacity(truth.len());
    let mut metal_counts = vec![ConfusionCounts::default(); MetalType::COUNT];
    for t in truth {
        if !seen.insert((t.chain_id.as_str(), t.index)) {
            return Err(Error::Input(format!(
                "duplicate label for chain {} residue {}",
                t.chain_id, t.index
            )));
        }
        let pred = by_residue.get(&(t.chain_id.as_str(), t.index));
        let called = pred.map(|p| p.call).unwrap_or(false);
        truth_flags.push(t.binding);
        pred_flags.push(called);

        if t.binding {
            let true_metal = t.metal.ok_or_else(|| {
                Error::Input(format!(
                    "binding residue {}:{} lacks a metal label",
                    t.chain_id, t.index
                ))
            })? as usize;
            if true_metal >= MetalType::COUNT {
                return Err(Error::Input(format!(
                    "metal id {true_metal} out of range for {}:{}",
                    t.chain_id, t.index
                )));
            }
            match pred {
                Some(p) if p.call => match p.metal {
                    Some(m) if (m as usize) == true_metal => {
                        metal_counts[true_metal].true_pos += 1;
                    }
                    Some(m) if (m as usize) < MetalType::COUNT => {
                        metal_counts[m as usize].false_pos += 1;
                        metal_counts[true_metal].false_neg += 1;
                    }
                    _ => {
                        return Err(Error::Input(format!(
                            "positive call for {}:{} lacks a valid metal",
                            t.chain_id, t.index
                        )))
                    }
                },
                // missed at stage 1 (or never covered): false negative
                _ => metal_counts[true_metal].false_neg += 1,
            }
        }
    }
    Ok(PipelineMetrics {
        binding: binary_metrics(&truth_flags, &pred_flags)?,
        metal: MetricsReport::from_counts(&metal_counts),
    })
}

/// Renders the metrics file: `#` comment header stating the counting
/// convention, then one `key<TAB>value` pair per line.
pub fn render_metrics(m: &PipelineMetrics) -> String {
    let mut out = String::new();
    out.push_str("#mbgnn-metrics v1\n");
    out.push_str("#convention binding metrics cover all labeled residues; residues without a prediction count as negative calls\n");
    out.push_str("#convention metal metrics cover true binders only; stage-1 misses count as false negatives of their class; predicted binders absent from the labels are excluded\n");
    let b = m.binding.positive();
    out.push_str(&format!("binding_precision\t{:.6}\n", b.precision));
    out.push_str(&format!("binding_recall\t{:.6}\n", b.recall));
    out.push_str(&format!("binding_f1\t{:.6}\n", b.f1));
    out.push_str(&format!("binding_support\t{}\n", b.support));
    for metal in MetalType::all() {
        let c = &m.metal.classes[metal.id() as usize];
        let name = metal.name();
        out.push_str(&format!("metal_{name}_precision\t{:.6}\n", c.precision));
        out.push_str(&format!("metal_{name}_recall\t{:.6}\n", c.recall));
        out.push_str(&format!("metal_{name}_f1\t{:.6}\n", c.f1));
        out.push_str(&format!("metal_{name}_support\t{}\n", c.support));
    }
    out.push_str(&format!("macro_precision\t{:.6}\n", m.metal.macro_precision));
    out.push_str(&format!("macro_recall\t{:.6}\n", m.metal.macro_recall));
    out.push_str(&format!("macro_f1\t{:.6}\n", m.metal.macro_f1));
    out
}

/// One metric's values across the seeds of a sensitivity run.
#[derive(Clone, Debug, PartialEq)]
pub struct SensitivityRow {
    pub metric: String,
    pub per_seed: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (divisor n-1).
    pub std_dev: f64,
}

/// Repeats a full train+test run once per seed and reports mean ± sample
/// standard deviation for every metric the runs produce.
pub fn sensitivity_run<F>(seeds: &[u64], mut run: F) -> Result<Vec<SensitivityRow>>
where
    F: FnMut(u64) -> Result<Vec<(String, f64)>>,
{
    if seeds.len() < 2 {
        return Err(Error::Input(format!(
            "sensitivity run needs >= 2 seeds, got {}",
            seeds.len()
        )));
    }
    let mut names: Vec<String> = Vec::new();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (i, &seed) in seeds.iter().enumerate() {
        let metrics = run(seed)?;
        if i == 0 {
            names = metrics.iter().map(|(n, _)| n.clone()).collect();
            values = vec![Vec::with_capacity(seeds.len()); names.len()];
        } else if metrics.len() != names.len()
            || metrics.iter().zip(&names).any(|((n, _), e)| n != e)
        {
            return Err(Error::Input(
                "sensitivity runs produced inconsistent metric sets".to_string(),
            ));
        }
        for (slot, (_, v)) in values.iter_mut().zip(&metrics) {
            slot.push(*v);
        }
    }
    Ok(names
        .into_iter()
        .zip(values)
        .map(|(metric, per_seed)| {
            let n = per_seed.len() as f64;
            let mean = per_seed.iter().sum::<f64>() / n;
            let var = per_seed.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
            SensitivityRow {
                metric,
                per_seed,
                mean,
                std_dev: var.sqrt(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Rng;

    #[test]
    fn hand_computed_binary_case() {
        // tp=2, fp=1, fn=1 on the positive class
        let truth = vec![true, true, true, false, false];
        let pred = vec![true, true, false, true, false];
        let m = binary_metrics(&truth, &pred).unwrap();
        let p = m.positive();
        assert_eq!(p.counts.true_pos, 2);
        assert_eq!(p.counts.false_pos, 1);
        assert_eq!(p.counts.false_neg, 1);
        assert!((p.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((p.f1 - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn perfect_prediction_scores_one() {
        let truth = vec![true, false, true];
        let m = binary_metrics(&truth, &truth).unwrap();
        assert_eq!(m.positive().precision, 1.0);
        assert_eq!(m.positive().recall, 1.0);
        assert_eq!(m.positive().f1, 1.0);
    }

    #[test]
    fn zero_denominator_convention() {
        let truth = vec![false, false];
        let pred = vec![false, false];
        let m = binary_metrics(&truth, &pred).unwrap();
        assert_eq!(m.positive().precision, 0.0);
        assert_eq!(m.positive().f1, 0.0);
        assert!(m.positive().degenerate);
    }

    #[test]
    fn length_mismatch_rejected() {
        assert!(binary_metrics(&[true], &[true, false]).is_err());
    }

    #[test]
    fn random_binary_matches_counting_oracle() {
        let mut rng = Rng::new(51);
        let truth: Vec<bool> = (0..500).map(|_| rng.next_f64() < 0.3).collect();
        let pred: Vec<bool> = (0..500).map(|_| rng.next_f64() < 0.4).collect();
        let m = binary_metrics(&truth, &pred).unwrap();
        let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
        for (&t, &p) in truth.iter().zip(&pred) {
            match (t, p) {
                (true, true) => tp += 1,
                (false, true) => fp += 1,
                (true, false) => fneg += 1,
                _ => {}
            }
        }
        let pos = m.positive();
        assert_eq!(pos.counts.true_pos, tp);
        assert_eq!(pos.counts.false_pos, fp);
        assert_eq!(pos.counts.false_neg, fneg);
        assert_eq!(pos.precision, tp as f64 / (tp + fp) as f64);
        assert_eq!(pos.recall, tp as f64 / (tp + fneg) as f64);
    }

    #[test]
    fn multiclass_trivial_cases() {
        let m = multiclass_macro_metrics(&[0, 1], &[0, 1], 2).unwrap();
        assert_eq!(m.macro_precision, 1.0);
        assert_eq!(m.macro_recall, 1.0);
        assert_eq!(m.macro_f1, 1.0);

        let m = multiclass_macro_metrics(&[0, 0], &[1, 1], 2).unwrap();
        assert_eq!(m.macro_f1, 0.0);
    }

    #[test]
    fn multiclass_rejects_out_of_range_ids() {
        assert!(multiclass_macro_metrics(&[0, 11], &[0, 0], 11).is_err());
        assert!(multiclass_macro_metrics(&[0, 0], &[0, 11], 11).is_err());
    }

    #[test]
    fn multiclass_matches_per_class_counting_oracle() {
        let mut rng = Rng::new(52);
        let truth: Vec<usize> = (0..300).map(|_| rng.below(11)).collect();
        let pred: Vec<usize> = (0..300).map(|_| rng.below(11)).collect();
        let m = multiclass_macro_metrics(&truth, &pred, 11).unwrap();
        let mut macro_p = 0.0;
        let mut macro_r = 0.0;
        let mut macro_f = 0.0;
        for class in 0..11 {
            let tp = truth
                .iter()
                .zip(&pred)
                .filter(|(&t, &p)| t == class && p == class)
                .count() as f64;
            let fp = truth
                .iter()
                .zip(&pred)
                .filter(|(&t, &p)| t != class && p == class)
                .count() as f64;
            let fneg = truth
                .iter()
                .zip(&pred)
                .filter(|(&t, &p)| t == class && p != class)
                .count() as f64;
            let prec = if tp + fp == 0.0 { 0.0 } else { tp / (tp + fp) };
            let rec = if tp + fneg == 0.0 { 0.0 } else { tp / (tp + fneg) };
            let f1 = if prec + rec == 0.0 {
                0.0
            } else {
                2.0 * prec * rec / (prec + rec)
            };
            assert_eq!(m.classes[class].precision, prec);
            assert_eq!(m.classes[class].recall, rec);
            assert_eq!(m.classes[class].f1, f1);
            macro_p += prec;
            macro_r += rec;
            macro_f += f1;
        }
        assert!((m.macro_precision - macro_p / 11.0).abs() < 1e-15);
        assert!((m.macro_recall - macro_r / 11.0).abs() < 1e-15);
        assert!((m.macro_f1 - macro_f / 11.0).abs() < 1e-15);
    }

    #[test]
    fn macro_metrics_invariant_under_relabeling() {
        let mut rng = Rng::new(53);
        let truth: Vec<usize> = (0..200).map(|_| rng.below(5)).collect();
        let pred: Vec<usize> = (0..200).map(|_| rng.below(5)).collect();
        let base = multiclass_macro_metrics(&truth, &pred, 5).unwrap();
        let mut perm: Vec<usize> = (0..5).collect();
        rng.shuffle(&mut perm);
        let t2: Vec<usize> = truth.iter().map(|&t| perm[t]).collect();
        let p2: Vec<usize> = pred.iter().map(|&p| perm[p]).collect();
        let relabeled = multiclass_macro_metrics(&t2, &p2, 5).unwrap();
        assert!((base.macro_precision - relabeled.macro_precision).abs() < 1e-12);
        assert!((base.macro_recall - relabeled.macro_recall).abs() < 1e-12);
        assert!((base.macro_f1 - relabeled.macro_f1).abs() < 1e-12);
    }

    #[test]
    fn f1_lies_between_precision_and_recall() {
        let mut rng = Rng::new(54);
        for _ in 0..200 {
            let truth: Vec<bool> = (0..40).map(|_| rng.next_f64() < 0.5).collect();
            let pred: Vec<bool> = (0..40).map(|_| rng.next_f64() < 0.5).collect();
            let m = binary_metrics(&truth, &pred).unwrap();
            let p = m.positive();
            if p.precision > 0.0 && p.recall > 0.0 {
                assert!(p.f1 <= p.precision.max(p.recall) + 1e-12);
                assert!(p.f1 >= p.precision.min(p.recall) - 1e-12);
            }
        }
    }

    fn truth(chain: &str, index: usize, binding: bool, metal: Option<u8>) -> ResidueTruth {
        ResidueTruth {
            chain_id: chain.into(),
            index,
            binding,
            metal,
        }
    }

    fn pred(chain: &str, index: usize, call: bool, metal: Option<u8>) -> ResiduePrediction {
        ResiduePrediction {
            chain_id: chain.into(),
            index,
            call,
            metal,
        }
    }

    #[test]
    fn pipeline_metrics_composite_convention() {
        let truth = vec![
            truth("A", 0, true, Some(0)),  // called, right metal
            truth("A", 1, true, Some(1)),  // called, wrong metal
            truth("A", 2, true, Some(0)),  // missed at stage 1
            truth("A", 3, false, None),    // correctly negative
            truth("A", 4, false, None),    // false positive call
        ];
        let preds = vec![
            pred("A", 0, true, Some(0)),
            pred("A", 1, true, Some(2)),
            pred("A", 4, true, Some(3)),
            pred("A", 9, true, Some(5)), // outside the labels; ignored
        ];
        let m = pipeline_metrics(&truth, &preds).unwrap();
        let b = m.binding.positive();
        assert_eq!(b.counts.true_pos, 2);
        assert_eq!(b.counts.false_pos, 1);
        assert_eq!(b.counts.false_neg, 1);

        assert_eq!(m.metal.classes[0].counts.true_pos, 1);
        assert_eq!(m.metal.classes[0].counts.false_neg, 1); // the stage-1 miss
        assert_eq!(m.metal.classes[1].counts.false_neg, 1); // wrong-metal truth side
        assert_eq!(m.metal.classes[2].counts.false_pos, 1); // wrong-metal pred side
        // the false-positive binder contributes nothing to metal counts
        assert_eq!(m.metal.classes[3].counts.false_pos, 0);
    }

    #[test]
    fn sensitivity_zero_std_for_identical_runs() {
        let rows = sensitivity_run(&[1, 1, 1], |_| Ok(vec![("f1".into(), 0.5)])).unwrap();
        assert_eq!(rows[0].mean, 0.5);
        assert_eq!(rows[0].std_dev, 0.0);
    }

    #[test]
    fn sensitivity_hand_computed_mean_and_std() {
        let vals = [0.70, 0.72];
        let mut it = vals.iter();
        let rows = sensitivity_run(&[1, 2], |_| Ok(vec![("f1".into(), *it.next().unwrap())]))
            .unwrap();
        assert!((rows[0].mean - 0.71).abs() < 1e-12);
        assert!((rows[0].std_dev - 0.0141421356).abs() < 1e-9);
    }

    #[test]
    fn sensitivity_needs_two_seeds() {
        assert!(sensitivity_run(&[1], |_| Ok(vec![])).is_err());
    }
}
