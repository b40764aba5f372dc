//! Butterworth design: analog prototype, frequency transformation with prewarped
//! edges, bilinear discretisation, and grouping into real biquads.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::dsp::{BandSpec, FilterKind, Section, SosFilter};
use crate::error::{Error, Result};

/// Left-half-plane poles of the unit-cutoff analog Butterworth prototype.
fn prototype_poles(order: usize) -> Vec<Complex64> {
    (0..order)
        .map(|k| {
            let theta = PI * (2 * k + order + 1) as f64 / (2 * order) as f64;
            Complex64::from_polar(1.0, theta)
        })
        .collect()
}

fn prewarp(freq_hz: f64, fs: f64) -> f64 {
    2.0 * fs * (PI * freq_hz / fs).tan()
}

fn bilinear(s: Complex64, fs: f64) -> Complex64 {
    (2.0 * fs + s) / (2.0 * fs - s)
}

/// Biquad with the given digital poles and numerator, scaled to unit gain at `omega`.
fn section(poles: [Complex64; 2], b: [f64; 3], omega: f64) -> Section {
    let sum = poles[0] + poles[1];
    let prod = poles[0] * poles[1];
    let mut s = Section {
        b,
        a: [-sum.re, prod.re],
    };
    let g = s.response(omega).norm();
    s.b.iter_mut().for_each(|c| *c /= g);
    s
}

fn is_real(z: Complex64) -> bool {
    z.im.abs() <= 1e-12 * z.norm().max(1.0)
}

/// Designs a Butterworth band-pass from an `order`-pole prototype.
///
/// The prototype order is doubled by the band transformation, so the result has
/// `order` biquads. Both band edges are prewarped, which places them exactly at -3.01 dB.
pub fn design_butterworth_bandpass(band: BandSpec, fs: f64, order: usize) -> Result<SosFilter> {
    if order == 0 || !order.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "band-pass order must be even, got {order}"
        )));
    }
    band.check_for(fs)?;
    let w1 = prewarp(band.low_hz, fs);
    let w2 = prewarp(band.high_hz, fs);
    let bw = w2 - w1;
    let w0sq = w1 * w2;
    // Digital centre frequency: where the analog centre lands after the bilinear map.
    let omega_c = 2.0 * (w0sq.sqrt() / (2.0 * fs)).atan();

    let mut sections = Vec::with_capacity(order);
    for p in prototype_poles(order) {
        if p.im < 0.0 {
            continue; // handled with its conjugate
        }
        // s^2 - p*bw*s + w0^2 = 0
        let half = p * bw / 2.0;
        let disc = (half * half - w0sq).sqrt();
        let roots = [half + disc, half - disc];
        if is_real(p) {
            let z = [bilinear(roots[0], fs), bilinear(roots[1], fs)];
            sections.push(section(z, [1.0, 0.0, -1.0], omega_c));
        } else {
            for r in roots {
                let z = bilinear(r, fs);
                sections.push(section([z, z.conj()], [1.0, 0.0, -1.0], omega_c));
            }
        }
    }
    SosFilter::new(sections, FilterKind::BandPass(band), order, fs)
}

/// Butterworth low-pass with unit DC gain.
pub fn design_butterworth_lowpass(cutoff_hz: f64, fs: f64, order: usize) -> Result<SosFilter> {
    if order == 0 {
        return Err(Error::InvalidArgument("low-pass order must be positive".into()));
    }
    if !(cutoff_hz > 0.0 && cutoff_hz < fs / 2.0) {
        return Err(Error::InvalidArgument(format!(
            "cutoff {cutoff_hz} Hz must lie in (0, {})",
            fs / 2.0
        )));
    }
    let wc = prewarp(cutoff_hz, fs);
    let mut sections = Vec::with_capacity(order.div_ceil(2));
    for p in prototype_poles(order) {
        if p.im < 0.0 {
            continue;
        }
        let z = bilinear(p * wc, fs);
        if is_real(p) {
            // First-order factor embedded in a biquad.
            sections.push(section([z, Complex64::new(0.0, 0.0)], [1.0, 1.0, 0.0], 0.0));
        } else {
            sections.push(section([z, z.conj()], [1.0, 2.0, 1.0], 0.0));
        }
    }
    SosFilter::new(sections, FilterKind::LowPass { cutoff_hz }, order, fs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    /// Dense sweep for the passband maximum.
    fn peak(f: &SosFilter) -> f64 {
        (0..=25_000)
            .map(|i| f.frequency_response(i as f64 * 0.01).unwrap())
            .fold(0.0, f64::max)
    }

    #[test]
    fn band_5_50_edges_are_minus_3db() {
        let f = design_butterworth_bandpass(BandSpec::new(5.0, 50.0).unwrap(), 500.0, 4).unwrap();
        assert_eq!(f.sections().len(), 4);
        let pk = peak(&f);
        for edge in [5.0, 50.0] {
            let rel = db(f.frequency_response(edge).unwrap() / pk);
            assert!((rel + 3.0103).abs() < 0.2, "edge {edge}: {rel} dB");
        }
    }

    #[test]
    fn geometric_centre_is_flat_to_one_percent() {
        let f = design_butterworth_bandpass(BandSpec::new(5.0, 50.0).unwrap(), 500.0, 4).unwrap();
        let mid = f.frequency_response((5.0f64 * 50.0).sqrt()).unwrap();
        let pk = peak(&f);
        assert!(mid / pk >= 0.99 && mid / pk <= 1.0 + 1e-12, "{mid} vs {pk}");
    }

    #[test]
    fn band_5_20_poles_inside_unit_circle() {
        let f = design_butterworth_bandpass(BandSpec::new(5.0, 20.0).unwrap(), 500.0, 4).unwrap();
        // Root-find each denominator quadratic directly.
        for s in f.sections() {
            let (a1, a2) = (s.a[0], s.a[1]);
            let disc = a1 * a1 - 4.0 * a2;
            let mags = if disc < 0.0 {
                vec![a2.sqrt()]
            } else {
                vec![
                    ((-a1 + disc.sqrt()) / 2.0).abs(),
                    ((-a1 - disc.sqrt()) / 2.0).abs(),
                ]
            };
            assert!(mags.iter().all(|m| *m < 1.0), "{mags:?}");
        }
    }

    #[test]
    fn invalid_designs_rejected() {
        let b = BandSpec::new(5.0, 50.0).unwrap();
        assert!(design_butterworth_bandpass(b, 500.0, 3).is_err());
        assert!(design_butterworth_bandpass(b, 100.0, 4).is_err());
        assert!(design_butterworth_lowpass(600.0, 1000.0, 8).is_err());
    }

    #[test]
    fn lowpass_has_unit_dc_and_minus_3db_at_cutoff() {
        let f = design_butterworth_lowpass(200.0, 1000.0, 8).unwrap();
        assert!((f.frequency_response(0.0).unwrap() - 1.0).abs() < 1e-12);
        assert!((db(f.frequency_response(200.0).unwrap()) + 3.0103).abs() < 1e-3);
        assert!(f.frequency_response(500.0).unwrap() < 1e-6);
        let odd = design_butterworth_lowpass(50.0, 500.0, 5).unwrap();
        assert_eq!(odd.sections().len(), 3);
        assert!((db(odd.frequency_response(50.0).unwrap()) + 3.0103).abs() < 1e-3);
    }

    proptest! {
        #[test]
        fn random_bands_are_stable_and_monotone(low in 0.5f64..100.0, width in 2.0f64..140.0) {
            let fs = 500.0;
            let high = (low + width).min(240.0);
            prop_assume!(high > low + 1.0);
            let f = design_butterworth_bandpass(BandSpec::new(low, high).unwrap(), fs, 4).unwrap();
            prop_assert!(f.pole_magnitudes().iter().all(|m| *m < 1.0));
            // Locate the peak on a 1 Hz grid, then check monotone fall-off both ways.
            let grid: Vec<f64> = (0..=250).map(|i| f.frequency_response(i as f64).unwrap()).collect();
            let ipk = grid.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
            for i in 1..=ipk {
                prop_assert!(grid[i - 1] <= grid[i] + 1e-6);
            }
            for i in ipk..250 {
                prop_assert!(grid[i + 1] <= grid[i] + 1e-6);
            }
        }
    }
}
