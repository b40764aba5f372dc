use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Pass band in Hz.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandSpec {
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandSpec {
    pub fn new(low_hz: f64, high_hz: f64) -> Result<Self> {
        if !(low_hz > 0.0 && high_hz > low_hz && high_hz.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "band [{low_hz}, {high_hz}] must satisfy 0 < low < high"
            )));
        }
        Ok(Self { low_hz, high_hz })
    }

    pub fn check_for(&self, fs: f64) -> Result<()> {
        if self.high_hz >= fs / 2.0 {
            return Err(Error::InvalidArgument(format!(
                "band upper edge {} Hz must be below Nyquist {} Hz",
                self.high_hz,
                fs / 2.0
            )));
        }
        if self.low_hz <= 0.0 {
            return Err(Error::InvalidArgument("band lower edge must be positive".into()));
        }
        Ok(())
    }

    /// `5-20` style label.
    pub fn label(&self) -> String {
        format!("{}-{}", self.low_hz, self.high_hz)
    }
}

impl fmt::Display for BandSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}-{}]", self.low_hz, self.high_hz)
    }
}

impl FromStr for BandSpec {
    type Err = Error;

    /// Accepts `5-20`, `[5-20]` or `5,20`.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_start_matches('[').trim_end_matches(']');
        let (lo, hi) = t
            .split_once('-')
            .or_else(|| t.split_once(','))
            .ok_or_else(|| Error::InvalidArgument(format!("band {s:?} is not LOW-HIGH")))?;
        let p = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidArgument(format!("band {s:?} is not LOW-HIGH")))
        };
        BandSpec::new(p(lo)?, p(hi)?)
    }
}

/// The seven analysis bands, in reporting order: the full 5-50 Hz range, its
/// three thirds, then the lowest third split again.
pub const BAND_CATALOG: [BandSpec; 7] = [
    BandSpec {
        low_hz: 5.0,
        high_hz: 50.0,
    },
    BandSpec {
        low_hz: 5.0,
        high_hz: 20.0,
    },
    BandSpec {
        low_hz: 20.0,
        high_hz: 35.0,
    },
    BandSpec {
        low_hz: 35.0,
        high_hz: 50.0,
    },
    BandSpec {
        low_hz: 5.0,
        high_hz: 10.0,
    },
    BandSpec {
        low_hz: 10.0,
        high_hz: 15.0,
    },
    BandSpec {
        low_hz: 15.0,
        high_hz: 20.0,
    },
];
