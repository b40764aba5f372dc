pub const LR0: f64 = 0.01;
pub const HALF_PERIOD: usize = 15;

/// Step decay: `lr0 * 0.5^floor(epoch / half_period)`.
pub fn lr_at_epoch(epoch: usize, lr0: f64, half_period: usize) -> f64 {
    let halvings = epoch / half_period.max(1);
    lr0 * 0.5f64.powi(halvings.min(i32::MAX as usize) as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn halves_every_fifteen_epochs() {
        assert_eq!(lr_at_epoch(0, LR0, HALF_PERIOD), 0.01);
        assert_eq!(lr_at_epoch(14, LR0, HALF_PERIOD), 0.01);
        assert_eq!(lr_at_epoch(15, LR0, HALF_PERIOD), 0.005);
        assert_eq!(lr_at_epoch(30, LR0, HALF_PERIOD), 0.0025);
        assert_eq!(lr_at_epoch(44, LR0, HALF_PERIOD), 0.0025);
    }
}
