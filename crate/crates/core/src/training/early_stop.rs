/// Guards the strict comparison against accumulated rounding in `best + min_delta`.
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EarlyStop {
    Continue { best_epoch: usize },
    Stop { best_epoch: usize },
}

impl EarlyStop {
    pub fn best_epoch(self) -> usize {
        match self {
            EarlyStop::Continue { best_epoch } | EarlyStop::Stop { best_epoch } => best_epoch,
        }
    }

    pub fn should_stop(self) -> bool {
        matches!(self, EarlyStop::Stop { .. })
    }
}

/// An epoch improves only if it beats the best so far by strictly more than `min_delta`.
/// Stops once `patience` consecutive epochs fail to improve.
///
/// # Panics
/// On an empty list.
pub fn early_stop_check(val_accuracies: &[f64], patience: usize, min_delta: f64) -> EarlyStop {
    assert!(
        !val_accuracies.is_empty(),
        "early_stop_check needs at least one epoch"
    );
    let mut best = 0;
    for (i, &acc) in val_accuracies.iter().enumerate().skip(1) {
        if acc - val_accuracies[best] > min_delta + SLACK {
            best = i;
        } else if i - best >= patience {
            return EarlyStop::Stop { best_epoch: best };
        }
    }
    EarlyStop::Continue { best_epoch: best }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steady_improvement_never_stops() {
        let accs: Vec<f64> = (0..40).map(|i| 0.5 + 0.01 * i as f64).collect();
        assert_eq!(
            early_stop_check(&accs, 15, 0.005),
            EarlyStop::Continue { best_epoch: 39 }
        );
    }

    #[test]
    fn improvement_of_exactly_min_delta_does_not_count() {
        let mut accs = vec![0.70];
        accs.extend(std::iter::repeat_n(0.705, 15));
        assert_eq!(
            early_stop_check(&accs, 15, 0.005),
            EarlyStop::Stop { best_epoch: 0 }
        );
        assert_eq!(
            early_stop_check(&accs[..15], 15, 0.005),
            EarlyStop::Continue { best_epoch: 0 }
        );
    }

    #[test]
    fn hand_trace_with_late_best() {
        let mut accs = vec![0.70, 0.71];
        accs.extend(std::iter::repeat_n(0.71, 15));
        assert_eq!(
            early_stop_check(&accs, 15, 0.005),
            EarlyStop::Stop { best_epoch: 1 }
        );
    }

    #[test]
    fn small_gains_do_not_reset_patience() {
        // Gains of 0.004 each accumulate past min_delta relative to the best.
        let accs = [0.5, 0.504, 0.508, 0.512];
        assert_eq!(
            early_stop_check(&accs, 15, 0.005),
            EarlyStop::Continue { best_epoch: 2 }
        );
        assert_eq!(
            early_stop_check(&[0.5, 0.5, 0.5], 2, 0.005),
            EarlyStop::Stop { best_epoch: 0 }
        );
    }
}
