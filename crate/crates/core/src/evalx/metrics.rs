use crate::data::ClassLabel;
use crate::error::{Error, Result};

/// Probabilities of AF1 with their true labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredSet {
    scores: Vec<f64>,
    labels: Vec<ClassLabel>,
}

impl ScoredSet {
    pub fn new(scores: Vec<f64>, labels: Vec<ClassLabel>) -> Result<Self> {
        if scores.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} scores for {} labels",
                scores.len(),
                labels.len()
            )));
        }
        if let Some(s) = scores.iter().find(|s| !(0.0..=1.0).contains(*s)) {
            return Err(Error::InvalidArgument(format!("score {s} outside [0, 1]")));
        }
        Ok(Self { scores, labels })
    }

    pub fn from_indices(scores: Vec<f64>, labels: &[usize]) -> Result<Self> {
        let labels = labels
            .iter()
            .map(|&l| ClassLabel::from_index(l).ok_or_else(|| Error::InvalidArgument(format!("label {l}"))))
            .collect::<Result<_>>()?;
        Self::new(scores, labels)
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn n_positive(&self) -> usize {
        self.labels.iter().filter(|&&l| l == ClassLabel::Af1).count()
    }

    /// Same scores with every label flipped.
    pub fn flipped(&self) -> Self {
        Self {
            scores: self.scores.clone(),
            labels: self.labels.iter().map(|l| l.flipped()).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn sensitivity(&self) -> f64 {
        self.tp as f64 / (self.tp + self.fn_) as f64
    }

    pub fn specificity(&self) -> f64 {
        self.tn as f64 / (self.tn + self.fp) as f64
    }
}

/// AF1 is predicted iff `score >= threshold`.
pub fn confusion(scored: &ScoredSet, threshold: f64) -> Confusion {
    let mut c = Confusion::default();
    for (&s, &l) in scored.scores.iter().zip(&scored.labels) {
        match (s >= threshold, l == ClassLabel::Af1) {
            (true, true) => c.tp += 1,
            (false, false) => c.tn += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
        }
    }
    c
}

pub fn accuracy(scored: &ScoredSet, threshold: f64) -> Result<f64> {
    if scored.is_empty() {
        return Err(Error::InsufficientData("accuracy of an empty set".into()));
    }
    let c = confusion(scored, threshold);
    Ok((c.tp + c.tn) as f64 / scored.len() as f64)
}

fn check_both_classes(scored: &ScoredSet) -> Result<(usize, usize)> {
    let pos = scored.n_positive();
    let neg = scored.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::InsufficientData(format!(
            "AUC needs both classes, got {pos} positive and {neg} negative"
        )));
    }
    Ok((pos, neg))
}

/// Mann-Whitney AUC from mid-ranks, O(n log n). Ties count one half.
pub fn auc(scored: &ScoredSet) -> Result<f64> {
    let (pos, neg) = check_both_classes(scored)?;
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored.scores[a].total_cmp(&scored.scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scored.scores[order[j + 1]] == scored.scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1..=j+1 share their mean.
        let mid = (i + j + 2) as f64 / 2.0;
        for &k in &order[i..=j] {
            if scored.labels[k] == ClassLabel::Af1 {
                rank_sum += mid;
            }
        }
        i = j + 1;
    }
    let u = rank_sum - (pos * (pos + 1)) as f64 / 2.0;
    Ok(u / (pos * neg) as f64)
}

/// O(n^2) pairwise AUC, kept as a cross-check.
pub fn auc_pairwise(scored: &ScoredSet) -> Result<f64> {
    let (pos, neg) = check_both_classes(scored)?;
    let mut wins = 0.0;
    for (i, &si) in scored.scores.iter().enumerate() {
        if scored.labels[i] != ClassLabel::Af1 {
            continue;
        }
        for (j, &sj) in scored.scores.iter().enumerate() {
            if scored.labels[j] == ClassLabel::Af1 {
                continue;
            }
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos * neg) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC vertices from the highest threshold down, starting at (0, 0).
pub fn roc_points(scored: &ScoredSet) -> Result<Vec<RocPoint>> {
    let (pos, neg) = check_both_classes(scored)?;
    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&a, &b| scored.scores[b].total_cmp(&scored.scores[a]));
    let mut pts = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0, 0);
    let mut i = 0;
    while i < order.len() {
        let t = scored.scores[order[i]];
        while i < order.len() && scored.scores[order[i]] == t {
            if scored.labels[order[i]] == ClassLabel::Af1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        pts.push(RocPoint {
            threshold: t,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(pts)
}

pub fn roc_csv(points: &[RocPoint]) -> String {
    let mut s = String::from("threshold,fpr,tpr\n");
    for p in points {
        s.push_str(&format!("{:?},{:?},{:?}\n", p.threshold, p.fpr, p.tpr));
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationBin {
    pub lower: f64,
    pub upper: f64,
    pub mean_predicted: f64,
    pub empirical: f64,
    pub count: usize,
}

/// Equal-width bins on [0, 1]; empty bins are left out. A score of exactly 1 falls in the
/// last bin.
pub fn calibration_curve(scored: &ScoredSet, n_bins: usize) -> Result<Vec<CalibrationBin>> {
    if n_bins < 2 {
        return Err(Error::InvalidArgument(format!(
            "{n_bins} calibration bins; need at least 2"
        )));
    }
    if scored.is_empty() {
        return Err(Error::InsufficientData("calibration of an empty set".into()));
    }
    let mut sum = vec![0.0; n_bins];
    let mut pos = vec![0usize; n_bins];
    let mut count = vec![0usize; n_bins];
    for (&s, &l) in scored.scores.iter().zip(&scored.labels) {
        let b = ((s * n_bins as f64) as usize).min(n_bins - 1);
        sum[b] += s;
        count[b] += 1;
        pos[b] += (l == ClassLabel::Af1) as usize;
    }
    Ok((0..n_bins)
        .filter(|&b| count[b] > 0)
        .map(|b| CalibrationBin {
            lower: b as f64 / n_bins as f64,
            upper: (b + 1) as f64 / n_bins as f64,
            mean_predicted: sum[b] / count[b] as f64,
            empirical: pos[b] as f64 / count[b] as f64,
            count: count[b],
        })
        .collect())
}

/// Mean and sample (n-1) standard deviation.
pub fn aggregate_runs(values: &[f64]) -> Result<(f64, f64)> {
    if values.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} run(s); a standard deviation needs at least 2",
            values.len()
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use ClassLabel::{Af0, Af1};

    fn set(scores: &[f64], labels: &[ClassLabel]) -> ScoredSet {
        ScoredSet::new(scores.to_vec(), labels.to_vec()).unwrap()
    }

    fn random_set(rng: &mut ChaCha8Rng, n: usize, levels: u32) -> ScoredSet {
        loop {
            let scores: Vec<f64> = (0..n)
                .map(|_| rng.gen_range(0..=levels) as f64 / levels as f64)
                .collect();
            let labels: Vec<ClassLabel> = (0..n)
                .map(|_| if rng.gen_bool(0.5) { Af1 } else { Af0 })
                .collect();
            let s = set(&scores, &labels);
            if s.n_positive() > 0 && s.n_positive() < n {
                return s;
            }
        }
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&set(&[1.0, 1.0], &[Af1, Af1]), 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&set(&[0.9, 0.1], &[Af1, Af0]), 0.5).unwrap(), 1.0);
        assert_eq!(accuracy(&set(&[0.9, 0.1], &[Af0, Af1]), 0.5).unwrap(), 0.0);
        assert_eq!(accuracy(&set(&[0.5], &[Af1]), 0.5).unwrap(), 1.0);
        assert!(accuracy(&set(&[], &[]), 0.5).is_err());
    }

    #[test]
    fn accuracy_matches_counting_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_set(&mut rng, 100, 1000);
        let hits = s
            .scores()
            .iter()
            .zip(s.labels())
            .filter(|(&p, &l)| if p >= 0.5 { l == Af1 } else { l == Af0 })
            .count();
        assert_eq!(accuracy(&s, 0.5).unwrap(), hits as f64 / 100.0);
    }

    #[test]
    fn balanced_accuracy_is_mean_of_sensitivity_and_specificity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let scores: Vec<f64> = (0..200).map(|_| rng.gen()).collect();
        let labels: Vec<ClassLabel> = (0..200).map(|i| if i < 100 { Af1 } else { Af0 }).collect();
        let s = set(&scores, &labels);
        let c = confusion(&s, 0.5);
        let acc = accuracy(&s, 0.5).unwrap();
        assert!((acc - (c.sensitivity() + c.specificity()) / 2.0).abs() < 1e-12);
    }

    #[test]
    fn auc_examples() {
        let s = set(&[0.9, 0.4, 0.3, 0.5], &[Af1, Af1, Af0, Af0]);
        assert_eq!(auc(&s).unwrap(), 0.75);
        assert_eq!(
            auc(&set(&[0.8, 0.9, 0.1, 0.2], &[Af1, Af1, Af0, Af0])).unwrap(),
            1.0
        );
        assert_eq!(
            auc(&set(&[0.3; 6], &[Af1, Af0, Af1, Af0, Af0, Af1])).unwrap(),
            0.5
        );
        assert!(auc(&set(&[0.1, 0.2], &[Af1, Af1])).is_err());
    }

    #[test]
    fn rank_sum_equals_pairwise_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for k in 0..200 {
            let n = rng.gen_range(2..=200);
            let s = random_set(&mut rng, n, if k % 2 == 0 { 10 } else { 100_000 });
            assert_eq!(auc(&s).unwrap(), auc_pairwise(&s).unwrap());
        }
    }

    #[test]
    fn auc_monotone_invariance_and_flip() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..50 {
            let s = random_set(&mut rng, 60, 1000);
            let a = auc(&s).unwrap();
            let cube = set(
                &s.scores().iter().map(|x| x.powi(3)).collect::<Vec<_>>(),
                s.labels(),
            );
            let logistic = set(
                &s.scores()
                    .iter()
                    .map(|x| 1.0 / (1.0 + (-(5.0 * x - 2.5)).exp()))
                    .collect::<Vec<_>>(),
                s.labels(),
            );
            assert!((auc(&cube).unwrap() - a).abs() < 1e-12);
            assert!((auc(&logistic).unwrap() - a).abs() < 1e-12);
        }
        let scores: Vec<f64> = (0..50).map(|i| i as f64 / 50.0).collect();
        let labels: Vec<ClassLabel> = (0..50)
            .map(|_| if rng.gen_bool(0.5) { Af1 } else { Af0 })
            .collect();
        let s = set(&scores, &labels);
        assert!((auc(&s.flipped()).unwrap() - (1.0 - auc(&s).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn roc_area_matches_auc() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let s = random_set(&mut rng, 80, 20);
        let pts = roc_points(&s).unwrap();
        let last = pts.last().unwrap();
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        let area: f64 = pts
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum();
        assert!((area - auc(&s).unwrap()).abs() < 1e-12);
        assert!(roc_csv(&pts).starts_with("threshold,fpr,tpr\ninf,0.0,0.0\n"));
    }

    #[test]
    fn calibration_examples() {
        let s = set(&[0.5; 4], &[Af1, Af0, Af1, Af0]);
        let bins = calibration_curve(&s, 10).unwrap();
        assert_eq!(bins.len(), 1);
        assert_eq!(
            (bins[0].mean_predicted, bins[0].empirical, bins[0].count),
            (0.5, 0.5, 4)
        );
        let s = set(&[0.05, 0.5, 1.0, 0.99], &[Af0; 4]);
        let bins = calibration_curve(&s, 10).unwrap();
        assert!(bins.iter().all(|b| b.empirical == 0.0));
        assert_eq!(bins.iter().map(|b| b.count).sum::<usize>(), 4);
        assert!(calibration_curve(&s, 1).is_err());
    }

    #[test]
    fn calibrated_scores_give_a_diagonal_curve() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let scores: Vec<f64> = (0..100_000).map(|_| rng.gen()).collect();
        let labels = scores
            .iter()
            .map(|&p| if rng.gen_bool(p) { Af1 } else { Af0 })
            .collect();
        let bins = calibration_curve(&ScoredSet::new(scores, labels).unwrap(), 10).unwrap();
        assert_eq!(bins.len(), 10);
        for b in bins {
            assert!((b.mean_predicted - b.empirical).abs() < 0.02, "{b:?}");
        }
    }

    #[test]
    fn aggregate_examples() {
        let (m, s) = aggregate_runs(&[71.0, 72.0, 73.0, 71.0, 73.0]).unwrap();
        assert!((m - 72.0).abs() < 1e-12 && (s - 1.0).abs() < 1e-12);
        assert_eq!(aggregate_runs(&[0.7; 5]).unwrap().1, 0.0);
        let (m, s) = aggregate_runs(&[0.6, 0.9]).unwrap();
        assert!((m - 0.75).abs() < 1e-12 && (s - 0.3 / 2f64.sqrt()).abs() < 1e-12);
        assert!(aggregate_runs(&[0.5]).is_err());
    }
}
