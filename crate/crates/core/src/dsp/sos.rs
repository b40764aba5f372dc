use std::fmt::Write as _;

use num_complex::Complex64;

use crate::dsp::BandSpec;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One biquad, `a0` normalised to 1:
/// `H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Section {
    pub b: [f64; 3],
    pub a: [f64; 2],
}

impl Section {
    pub const IDENTITY: Section = Section {
        b: [1.0, 0.0, 0.0],
        a: [0.0, 0.0],
    };

    pub fn response(&self, omega: f64) -> Complex64 {
        let z1 = Complex64::from_polar(1.0, -omega);
        let z2 = z1 * z1;
        let num = self.b[0] + z1 * self.b[1] + z2 * self.b[2];
        let den = 1.0 + z1 * self.a[0] + z2 * self.a[1];
        num / den
    }

    /// Roots of `z^2 + a1 z + a2`.
    pub fn poles(&self) -> [Complex64; 2] {
        let (a1, a2) = (self.a[0], self.a[1]);
        let disc = Complex64::new(a1 * a1 - 4.0 * a2, 0.0).sqrt();
        [(-a1 + disc) / 2.0, (-a1 - disc) / 2.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FilterKind {
    BandPass(BandSpec),
    LowPass { cutoff_hz: f64 },
    Identity,
}

/// Cascade of second-order sections plus the design it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SosFilter {
    sections: Vec<Section>,
    kind: FilterKind,
    order: usize,
    fs: f64,
}

impl SosFilter {
    pub fn new(sections: Vec<Section>, kind: FilterKind, order: usize, fs: f64) -> Result<Self> {
        if sections.is_empty() {
            return Err(Error::InvalidArgument("filter needs at least one section".into()));
        }
        let f = Self {
            sections,
            kind,
            order,
            fs,
        };
        if !f.is_stable() {
            return Err(Error::Numerical(
                "designed filter has a pole on or outside the unit circle".into(),
            ));
        }
        Ok(f)
    }

    /// Single pass-through section.
    pub fn identity(fs: f64) -> Self {
        Self {
            sections: vec![Section::IDENTITY],
            kind: FilterKind::Identity,
            order: 0,
            fs,
        }
    }

    pub fn sections(&self) -> &[Section] {
        &self.sections
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn pole_magnitudes(&self) -> Vec<f64> {
        self.sections
            .iter()
            .flat_map(|s| s.poles())
            .map(|p| p.norm())
            .collect()
    }

    pub fn is_stable(&self) -> bool {
        self.pole_magnitudes().iter().all(|&m| m < 1.0)
    }

    /// `|H(e^{jw})|` at `freq_hz`, `w = 2 pi freq / fs`.
    pub fn frequency_response(&self, freq_hz: f64) -> Result<f64> {
        if !(0.0..=self.fs / 2.0).contains(&freq_hz) {
            return Err(Error::InvalidArgument(format!(
                "frequency {freq_hz} Hz outside [0, {}]",
                self.fs / 2.0
            )));
        }
        let omega = 2.0 * std::f64::consts::PI * freq_hz / self.fs;
        Ok(self
            .sections
            .iter()
            .map(|s| s.response(omega))
            .product::<Complex64>()
            .norm())
    }

    /// Causal single-pass direct-form-II-transposed cascade from zero state.
    pub fn apply<S: Scalar>(&self, signal: &[S]) -> Result<Vec<S>> {
        if signal.is_empty() {
            return Err(Error::InvalidArgument("cannot filter an empty signal".into()));
        }
        if signal.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "signal contains non-finite samples".into(),
            ));
        }
        let mut work: Vec<f64> = signal.iter().map(|v| v.as_f64()).collect();
        for s in &self.sections {
            let [b0, b1, b2] = s.b;
            let [a1, a2] = s.a;
            let (mut z1, mut z2) = (0.0f64, 0.0f64);
            for x in work.iter_mut() {
                let y = b0 * *x + z1;
                z1 = b1 * *x - a1 * y + z2;
                z2 = b2 * *x - a2 * y;
                *x = y;
            }
        }
        Ok(work.into_iter().map(S::lit).collect())
    }

    /// One section per row: `b0,b1,b2,a1,a2`.
    pub fn coefficients_csv(&self) -> String {
        let mut s = String::new();
        for sec in &self.sections {
            writeln!(
                s,
                "{:e},{:e},{:e},{:e},{:e}",
                sec.b[0], sec.b[1], sec.b[2], sec.a[0], sec.a[1]
            )
            .unwrap();
        }
        s
    }
}

pub fn apply_sos<S: Scalar>(filter: &SosFilter, signal: &[S]) -> Result<Vec<S>> {
    filter.apply(signal)
}

pub fn frequency_response(filter: &SosFilter, freq_hz: f64) -> Result<f64> {
    filter.frequency_response(freq_hz)
}
