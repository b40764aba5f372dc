use crate::dsp::design_butterworth_lowpass;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Anti-alias low-pass order used before decimation.
pub const ANTI_ALIAS_ORDER: usize = 8;
/// Cutoff as a fraction of the output Nyquist frequency.
pub const ANTI_ALIAS_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct Decimated<S> {
    pub signal: Vec<S>,
    pub fs: f64,
    /// Set when an odd-length input lost its last sample.
    pub dropped_trailing: bool,
}

/// Halves the sampling rate: Butterworth low-pass at 0.8 x the new Nyquist, then
/// keeps samples 0, 2, 4, ...
pub fn decimate_by_two<S: Scalar>(signal: &[S], fs: f64) -> Result<Decimated<S>> {
    if !(fs > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "sampling rate {fs} must be positive"
        )));
    }
    if signal.is_empty() {
        return Err(Error::InvalidArgument("cannot decimate an empty signal".into()));
    }
    let out_fs = fs / 2.0;
    let lp = design_butterworth_lowpass(ANTI_ALIAS_FRACTION * out_fs / 2.0, fs, ANTI_ALIAS_ORDER)?;
    let dropped_trailing = signal.len() % 2 == 1;
    let filtered = lp.apply(&signal[..signal.len() - usize::from(dropped_trailing)])?;
    Ok(Decimated {
        signal: filtered.into_iter().step_by(2).collect(),
        fs: out_fs,
        dropped_trailing,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn one_khz_to_five_hundred() {
        let x = vec![0.0f32; 10_000];
        let d = decimate_by_two(&x, 1000.0).unwrap();
        assert_eq!(d.signal.len(), 5000);
        assert_eq!(d.fs, 500.0);
        assert!(!d.dropped_trailing);
        let odd = decimate_by_two(&[1.0f64; 7], 1000.0).unwrap();
        assert_eq!(odd.signal.len(), 3);
        assert!(odd.dropped_trailing);
    }

    #[test]
    fn constant_is_preserved_after_settling() {
        let c = 0.73f64;
        let d = decimate_by_two(&vec![c; 2000], 1000.0).unwrap();
        for v in &d.signal[50..] {
            assert!((v - c).abs() < 1e-4, "{v}");
        }
    }

    #[test]
    fn ten_hz_sine_keeps_unit_amplitude() {
        let x: Vec<f64> = (0..10_000)
            .map(|i| (2.0 * PI * 10.0 * i as f64 / 1000.0).sin())
            .collect();
        let d = decimate_by_two(&x, 1000.0).unwrap();
        // Least-squares fit of a 10 Hz sinusoid on the steady-state part.
        let (mut ss, mut sc, mut cc, mut ys, mut yc) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for (i, y) in d.signal.iter().enumerate().skip(100) {
            let ph = 2.0 * PI * 10.0 * i as f64 / 500.0;
            let (s, c) = ph.sin_cos();
            ss += s * s;
            sc += s * c;
            cc += c * c;
            ys += y * s;
            yc += y * c;
        }
        let det = ss * cc - sc * sc;
        let a = (ys * cc - yc * sc) / det;
        let b = (yc * ss - ys * sc) / det;
        let amp = (a * a + b * b).sqrt();
        assert!((amp - 1.0).abs() < 0.01, "{amp}");
    }

    #[test]
    fn errors() {
        assert!(decimate_by_two::<f32>(&[], 1000.0).is_err());
        assert!(decimate_by_two(&[1.0f32], 0.0).is_err());
    }
}
