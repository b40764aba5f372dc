use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::data::{EcgRecord, Lead, Waveform, AUGMENT_SEPARATOR};
use crate::error::{Error, Result};

pub const MIN_SHIFT: usize = 250;
pub const MAX_SHIFT: usize = 500;

/// Where the zero padding goes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ShiftSide {
    Begin,
    End,
}

/// A drawn shift: `amount` zero samples padded on `side`, the opposite side truncated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shift {
    pub amount: usize,
    pub side: ShiftSide,
}

impl Shift {
    pub fn draw<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let amount = rng.gen_range(MIN_SHIFT..=MAX_SHIFT);
        let side = if rng.gen_bool(0.5) {
            ShiftSide::Begin
        } else {
            ShiftSide::End
        };
        Self { amount, side }
    }

    /// Signed lag of the output relative to the input.
    pub fn lag(&self) -> isize {
        match self.side {
            ShiftSide::Begin => self.amount as isize,
            ShiftSide::End => -(self.amount as isize),
        }
    }

    /// The tag appended to a record id, e.g. `shift+312`.
    pub fn tag(&self) -> String {
        self.to_string()
    }

    /// Extracts the shift encoded in an augmented record id, if any.
    pub fn from_record_id(record_id: &str) -> Result<Option<Shift>> {
        match record_id.split_once(AUGMENT_SEPARATOR) {
            None => Ok(None),
            Some((_, tag)) => tag.parse().map(Some),
        }
    }
}

impl fmt::Display for Shift {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.side {
            ShiftSide::Begin => '+',
            ShiftSide::End => '-',
        };
        write!(f, "shift{sign}{}", self.amount)
    }
}

impl FromStr for Shift {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("malformed shift tag '{s}'"));
        let rest = s.strip_prefix("shift").ok_or_else(bad)?;
        let side = match rest.chars().next() {
            Some('+') => ShiftSide::Begin,
            Some('-') => ShiftSide::End,
            _ => return Err(bad()),
        };
        let amount: usize = rest[1..].parse().map_err(|_| bad())?;
        if !(MIN_SHIFT..=MAX_SHIFT).contains(&amount) {
            return Err(bad());
        }
        Ok(Self { amount, side })
    }
}

/// Applies a shift to every lead at once, keeping the length.
pub fn apply_shift(ecg: &EcgRecord, shift: Shift) -> Result<EcgRecord> {
    let n = ecg.n_samples();
    if n <= shift.amount {
        return Err(Error::InvalidRecord(format!(
            "record '{}' has {n} samples, too short for a shift of {}",
            ecg.record_id, shift.amount
        )));
    }
    let c = ecg.n_leads();
    let src = ecg.waveform.samples();
    let mut out = vec![0.0f32; n * c];
    let s = shift.amount;
    match shift.side {
        ShiftSide::Begin => out[s * c..].copy_from_slice(&src[..(n - s) * c]),
        ShiftSide::End => out[..(n - s) * c].copy_from_slice(&src[s * c..]),
    }
    let waveform = Waveform::new(out, ecg.waveform.fs(), ecg.waveform.leads().to_vec())?;
    Ok(EcgRecord::new(
        format!("{}{AUGMENT_SEPARATOR}{shift}", ecg.record_id),
        waveform,
        ecg.label,
    ))
}

/// Draws a shift and applies it.
pub fn random_shift<R: Rng + ?Sized>(ecg: &EcgRecord, rng: &mut R) -> Result<EcgRecord> {
    if ecg.n_samples() <= MAX_SHIFT {
        return Err(Error::InvalidRecord(format!(
            "record '{}' has {} samples, needs more than {MAX_SHIFT}",
            ecg.record_id,
            ecg.n_samples()
        )));
    }
    apply_shift(ecg, Shift::draw(rng))
}

/// Column subset in the requested order.
pub fn select_leads(ecg: &EcgRecord, leads: &[Lead]) -> Result<EcgRecord> {
    if leads.is_empty() {
        return Err(Error::InvalidArgument("empty lead selection".into()));
    }
    let w = &ecg.waveform;
    let cols = leads
        .iter()
        .map(|&l| {
            w.lead_position(l)
                .map(|p| w.column(p))
                .ok_or_else(|| Error::InvalidArgument(format!("record '{}' has no lead {l}", ecg.record_id)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EcgRecord::new(
        ecg.record_id.clone(),
        Waveform::from_columns(&cols, w.fs(), leads.to_vec())?,
        ecg.label,
    ))
}

/// Per-lead z-score with population statistics; constant leads become zero.
pub fn standardize_ecg(ecg: &EcgRecord) -> Result<EcgRecord> {
    let w = &ecg.waveform;
    let cols: Vec<Vec<f32>> = w
        .columns()
        .into_iter()
        .map(|col| {
            let n = col.len() as f64;
            let mean = col.iter().map(|&v| v as f64).sum::<f64>() / n;
            let var = col.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
            let std = var.sqrt();
            if std <= 1e-12 * mean.abs().max(1.0) {
                vec![0.0; col.len()]
            } else {
                col.iter().map(|&v| ((v as f64 - mean) / std) as f32).collect()
            }
        })
        .collect();
    Ok(EcgRecord::new(
        ecg.record_id.clone(),
        Waveform::from_columns(&cols, w.fs(), w.leads().to_vec())?,
        ecg.label,
    ))
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::data::ClassLabel;

    fn ramp(n: usize, leads: usize) -> EcgRecord {
        let samples = (0..n * leads)
            .map(|i| 1.0 + (i / leads) as f32 + (i % leads) as f32 * 0.25)
            .collect();
        let w = Waveform::new(samples, 500.0, Lead::ALL[..leads].to_vec()).unwrap();
        EcgRecord::new("r1", w, ClassLabel::Af1)
    }

    #[test]
    fn begin_shift_pads_front_with_zeros() {
        let x = ramp(2000, 3);
        let s = Shift {
            amount: 300,
            side: ShiftSide::Begin,
        };
        let y = apply_shift(&x, s).unwrap();
        assert_eq!(y.n_samples(), 2000);
        assert_eq!(y.record_id, "r1#shift+300");
        for l in 0..3 {
            let (xc, yc) = (x.waveform.column(l), y.waveform.column(l));
            assert!(yc[..300].iter().all(|&v| v == 0.0));
            assert_eq!(&yc[300..], &xc[..1700]);
        }
    }

    #[test]
    fn end_shift_pads_back_with_zeros() {
        let x = ramp(1000, 2);
        let y = apply_shift(
            &x,
            Shift {
                amount: 250,
                side: ShiftSide::End,
            },
        )
        .unwrap();
        let (xc, yc) = (x.waveform.column(1), y.waveform.column(1));
        assert_eq!(&yc[..750], &xc[250..]);
        assert!(yc[750..].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn shift_tag_round_trips() {
        for s in ["shift+250", "shift-500", "shift+377"] {
            assert_eq!(s.parse::<Shift>().unwrap().to_string(), s);
        }
        for bad in ["shift+249", "shift*300", "shift+", "sh+300", "shift-501"] {
            assert!(bad.parse::<Shift>().is_err(), "{bad}");
        }
        assert_eq!(Shift::from_record_id("a#shift-260").unwrap().unwrap().lag(), -260);
        assert_eq!(Shift::from_record_id("plain").unwrap(), None);
    }

    #[test]
    fn random_shift_range_and_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = ramp(5000, 12);
        let mut sides = [0; 2];
        for _ in 0..400 {
            let s = Shift::draw(&mut rng);
            assert!((MIN_SHIFT..=MAX_SHIFT).contains(&s.amount));
            sides[(s.side == ShiftSide::End) as usize] += 1;
        }
        assert!(sides[0] > 150 && sides[1] > 150);
        let y = random_shift(&x, &mut rng).unwrap();
        assert_eq!((y.n_samples(), y.n_leads(), y.label), (5000, 12, ClassLabel::Af1));
        assert_eq!(y.waveform.fs(), 500.0);
        assert!(random_shift(&ramp(500, 1), &mut rng).is_err());
    }

    #[test]
    fn cross_correlation_recovers_the_lag() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let noise: Vec<f32> = (0..3000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = EcgRecord::new(
            "n",
            Waveform::new(noise.clone(), 500.0, vec![Lead::D1]).unwrap(),
            ClassLabel::Af0,
        );
        for _ in 0..6 {
            let s = Shift::draw(&mut rng);
            let y = apply_shift(&x, s).unwrap().waveform.column(0);
            let corr = |lag: isize| -> f64 {
                (0..3000isize)
                    .filter_map(|t| {
                        let u = t - lag;
                        (0..3000)
                            .contains(&u)
                            .then(|| y[t as usize] as f64 * noise[u as usize] as f64)
                    })
                    .sum()
            };
            let best = (-500..=500).max_by(|&a, &b| corr(a).total_cmp(&corr(b))).unwrap();
            assert_eq!(best, s.lag());
        }
    }

    #[test]
    fn select_leads_projection_and_order() {
        let x = ramp(100, 12);
        assert_eq!(select_leads(&x, &Lead::ALL).unwrap(), x);
        let one = select_leads(&x, &[Lead::AvR]).unwrap();
        assert_eq!(one.n_leads(), 1);
        assert_eq!(one.waveform.column(0), x.waveform.column(Lead::AvR.index()));
        let two = select_leads(&x, &[Lead::D1, Lead::AvR]).unwrap();
        assert_eq!(two.waveform.leads(), &[Lead::D1, Lead::AvR]);
        assert_eq!(two.waveform.column(1), x.waveform.column(Lead::AvR.index()));
        let d1_only = select_leads(&x, &[Lead::D1]).unwrap();
        assert!(select_leads(&d1_only, &[Lead::V6]).is_err());
    }

    #[test]
    fn standardize_examples() {
        let tiled: Vec<f32> = (0..5000).map(|i| if i % 2 == 0 { 1.0 } else { 3.0 }).collect();
        let cols = vec![tiled, vec![4.2; 5000]];
        let w = Waveform::from_columns(&cols, 500.0, vec![Lead::D1, Lead::D2]).unwrap();
        let z = standardize_ecg(&EcgRecord::new("s", w, ClassLabel::Af0)).unwrap();
        let c0 = z.waveform.column(0);
        assert!(c0.iter().step_by(2).all(|&v| (v + 1.0).abs() < 1e-6));
        assert!(c0.iter().skip(1).step_by(2).all(|&v| (v - 1.0).abs() < 1e-6));
        assert!(z.waveform.column(1).iter().all(|&v| v == 0.0));
        let again = standardize_ecg(&z).unwrap();
        for (a, b) in again.waveform.samples().iter().zip(z.waveform.samples()) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}
