use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::data::{ClassLabel, Feature, TabularRecord, N_FEATURES};

/// Median and quartiles of one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quartiles {
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
}

const fn q(median: f64, q1: f64, q3: f64) -> Quartiles {
    Quartiles { q1, median, q3 }
}

/// Cohort medians and interquartile ranges per class, in feature order after gender.
const AF0_STATS: [Quartiles; N_FEATURES - 1] = [
    q(75.0, 68.0, 81.0),
    q(59.0, 42.0, 71.0),
    q(119.0, 108.0, 127.0),
    q(283.0, 259.0, 302.0),
    q(401.0, 376.0, 419.0),
    q(169.0, 152.0, 189.0),
    q(18.0, -17.0, 54.0),
    q(98.0, 89.0, 111.0),
    q(453.0, 446.0, 458.0),
    q(551.0, 543.0, 559.0),
    q(393.0, 369.0, 420.0),
    q(415.0, 399.0, 434.0),
    q(831.0, 727.0, 944.0),
    q(57.0, 36.0, 73.0),
    q(845.0, 821.0, 870.0),
    q(72.0, 63.0, 82.0),
];

const AF1_STATS: [Quartiles; N_FEATURES - 1] = [
    q(76.0, 70.0, 81.0),
    q(61.0, 42.0, 74.0),
    q(118.0, 100.0, 130.0),
    q(270.0, 241.0, 293.0),
    q(386.0, 355.0, 411.0),
    q(179.0, 159.0, 202.0),
    q(13.0, -24.0, 51.0),
    q(102.0, 92.0, 120.0),
    q(450.0, 443.0, 457.0),
    q(553.0, 545.0, 565.0),
    q(406.0, 381.0, 433.0),
    q(421.0, 405.0, 441.0),
    q(871.0, 766.0, 986.0),
    q(59.0, 33.0, 78.0),
    q(855.0, 831.0, 880.0),
    q(68.0, 60.0, 78.0),
];

/// Fraction of men per class.
pub const MALE_FRACTION: [f64; 2] = [0.531, 0.574];

/// z of the upper quartile of a standard normal.
const Z75: f64 = 0.674_489_750_196_081_7;

pub fn quartiles(class: ClassLabel, f: Feature) -> Option<Quartiles> {
    let i = f.index().checked_sub(1)?;
    Some(match class {
        ClassLabel::Af0 => AF0_STATS[i],
        ClassLabel::Af1 => AF1_STATS[i],
    })
}

/// Shifted log-normal whose median and quartiles equal the given ones. Left-skewed
/// quartiles use the mirrored form; symmetric ones fall back to a normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkewedMarginal {
    shift: f64,
    mu: f64,
    sigma: f64,
    mirrored: bool,
    symmetric: bool,
}

impl SkewedMarginal {
    pub fn fit(qs: Quartiles) -> Self {
        let lower = qs.median - qs.q1;
        let upper = qs.q3 - qs.median;
        if (upper - lower).abs() <= 1e-9 * (upper + lower) {
            return Self {
                shift: 0.0,
                mu: qs.median,
                sigma: (upper + lower) / (2.0 * Z75),
                mirrored: false,
                symmetric: true,
            };
        }
        // Mirror a left-skewed fit so the long tail is always the upper one.
        let mirrored = upper < lower;
        let (q1, m, q3) = if mirrored {
            (-qs.q3, -qs.median, -qs.q1)
        } else {
            (qs.q1, qs.median, qs.q3)
        };
        // Choose c so that (q1 + c)(q3 + c) = (m + c)^2, i.e. log-quartiles are symmetric.
        let c = (m * m - q1 * q3) / (q1 + q3 - 2.0 * m);
        Self {
            shift: c,
            mu: (m + c).ln(),
            sigma: ((q3 + c) / (m + c)).ln() / Z75,
            mirrored,
            symmetric: false,
        }
    }

    /// Value at standard-normal quantile `z`.
    pub fn at(&self, z: f64) -> f64 {
        if self.symmetric {
            return self.mu + self.sigma * z;
        }
        // The mirrored variable's upper quantiles are the original's lower ones.
        if self.mirrored {
            self.shift - (self.mu - self.sigma * z).exp()
        } else {
            (self.mu + self.sigma * z).exp() - self.shift
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        self.at(z)
    }
}

fn in_range(f: Feature, v: f64) -> bool {
    if f.is_axis() {
        (-180.0..=360.0).contains(&v)
    } else {
        v > 0.0
    }
}

/// Independent features drawn from the class marginals; out-of-range draws are redrawn.
pub fn synth_tabular<R: Rng + ?Sized>(class: ClassLabel, rng: &mut R) -> TabularRecord {
    let mut values = [0.0; N_FEATURES];
    values[Feature::Gender.index()] = rng.gen_bool(MALE_FRACTION[class.index()]) as u8 as f64;
    for f in Feature::ALL.into_iter().skip(1) {
        let m = SkewedMarginal::fit(quartiles(class, f).unwrap());
        values[f.index()] = loop {
            let v = m.sample(rng);
            if in_range(f, v) {
                break v;
            }
        };
    }
    TabularRecord::new(values).expect("drawn values are in range")
}
