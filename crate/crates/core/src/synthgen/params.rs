use std::fmt::Write as _;
use std::path::Path;

use crate::data::{ClassLabel, Lead};
use crate::error::{Error, Result};

/// Beat timing and wave shapes of one class. Times in ms, amplitudes in mV.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassParams {
    pub rr_ms: f64,
    /// Spread of the per-record mean RR.
    pub rr_record_sd_ms: f64,
    /// Beat-to-beat RR jitter within a record.
    pub rr_beat_sd_ms: f64,
    /// P onset to QRS onset.
    pub pr_ms: f64,
    pub pr_record_sd_ms: f64,
    pub p_amp: f64,
    /// Gaussian sigma of the P wave.
    pub p_sigma_ms: f64,
    /// Per-lead multiplier on the P amplitude.
    pub p_lead_factor: [f64; 12],
    pub qrs_amp: f64,
    pub qrs_ms: f64,
    pub t_amp: f64,
    /// QRS onset to T peak.
    pub t_peak_ms: f64,
    pub t_sigma_ms: f64,
    /// Log-scale spread of the per-record P, QRS and T amplitudes.
    pub amp_record_cv: f64,
    /// Continuous atrial oscillation added to every lead, 0 to disable.
    pub fwave_amp: f64,
    pub fwave_hz: f64,
}

impl ClassParams {
    fn af0() -> Self {
        Self {
            rr_ms: 831.0,
            rr_record_sd_ms: 20.0,
            rr_beat_sd_ms: 15.0,
            pr_ms: 169.0,
            pr_record_sd_ms: 8.0,
            p_amp: 0.15,
            p_sigma_ms: 12.0,
            p_lead_factor: [1.0; 12],
            qrs_amp: 1.0,
            qrs_ms: 98.0,
            t_amp: 0.3,
            t_peak_ms: 280.0,
            t_sigma_ms: 40.0,
            amp_record_cv: 0.1,
            fwave_amp: 0.0,
            fwave_hz: 8.0,
        }
    }

    fn p_start_ms(&self) -> f64 {
        -self.pr_ms
    }

    fn check(&self, class: ClassLabel) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("{class} beat parameters: {m}")));
        let positive = [
            ("rr_ms", self.rr_ms),
            ("pr_ms", self.pr_ms),
            ("p_sigma_ms", self.p_sigma_ms),
            ("qrs_ms", self.qrs_ms),
            ("t_sigma_ms", self.t_sigma_ms),
            ("fwave_hz", self.fwave_hz),
        ];
        for (k, v) in positive {
            if !(v > 0.0) {
                return bad(format!("{k} = {v} must be positive"));
            }
        }
        let sds = [
            self.rr_record_sd_ms,
            self.rr_beat_sd_ms,
            self.pr_record_sd_ms,
            self.amp_record_cv,
        ];
        if sds.iter().any(|v| !(*v >= 0.0)) {
            return bad("spreads must be non-negative".into());
        }
        let p_end = self.p_start_ms() + 6.0 * self.p_sigma_ms;
        if p_end > 0.0 {
            return bad(format!("P wave ends {p_end} ms after QRS onset"));
        }
        let t_start = self.t_peak_ms - 3.0 * self.t_sigma_ms;
        if t_start < self.qrs_ms {
            return bad(format!("T wave starts at {t_start} ms, inside the QRS"));
        }
        let t_end = self.t_peak_ms + 3.0 * self.t_sigma_ms;
        let next_p = self.rr_ms - self.pr_ms;
        if t_end > next_p {
            return bad(format!(
                "T wave ends at {t_end} ms, after the next P onset at {next_p} ms"
            ));
        }
        Ok(())
    }
}

/// Recording noise, amplitudes in mV.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseParams {
    pub wander_amp: f64,
    pub wander_hz: f64,
    pub powerline_amp: f64,
    pub white_sd: f64,
}

/// Per-lead projection weights of each wave.
#[derive(Debug, Clone, PartialEq)]
pub struct LeadWeights {
    pub p: [f64; 12],
    pub qrs: [f64; 12],
    pub t: [f64; 12],
}

impl Default for LeadWeights {
    // D1 and avR carry the largest P and QRS deflections.
    fn default() -> Self {
        Self {
            p: [1.0, 0.8, 0.3, -1.0, 0.4, 0.5, 0.4, 0.5, 0.5, 0.5, 0.5, 0.5],
            qrs: [1.0, 0.9, 0.4, -1.0, 0.5, 0.6, -0.6, 0.7, 0.8, 0.9, 0.9, 0.8],
            t: [0.6, 0.6, 0.3, -0.6, 0.3, 0.4, 0.2, 0.6, 0.6, 0.6, 0.5, 0.4],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub af0: ClassParams,
    pub af1: ClassParams,
    pub noise: NoiseParams,
    pub weights: LeadWeights,
    pub duration_s: f64,
    pub fs: f64,
}

impl Default for SynthParams {
    /// AF1 has attenuated P waves and the longer PR and RR medians of the clinical cohort.
    fn default() -> Self {
        let af0 = ClassParams::af0();
        let af1 = ClassParams {
            rr_ms: 871.0,
            pr_ms: 179.0,
            p_lead_factor: [0.7; 12],
            ..af0.clone()
        };
        Self {
            af0,
            af1,
            noise: NoiseParams {
                wander_amp: 0.1,
                wander_hz: 0.55,
                powerline_amp: 0.0,
                white_sd: 0.015,
            },
            weights: LeadWeights::default(),
            duration_s: 10.0,
            fs: 500.0,
        }
    }
}

impl SynthParams {
    /// Classes with identical beat parameters.
    pub fn null() -> Self {
        let mut p = Self::default();
        p.af1 = p.af0.clone();
        p
    }

    /// AF1 differs from AF0 only by weaker P waves in one lead.
    pub fn planted_lead(lead: Lead, factor: f64) -> Self {
        let mut p = Self::null();
        p.af1.p_lead_factor[lead.index()] = factor;
        p
    }

    /// AF1 differs from AF0 only by a continuous oscillation at `hz`.
    pub fn planted_oscillation(hz: f64, amp: f64) -> Self {
        let mut p = Self::null();
        p.af1.fwave_amp = amp;
        p.af1.fwave_hz = hz;
        p
    }

    /// P attenuation `factor` with the default timing offsets.
    pub fn with_p_factor(factor: f64) -> Self {
        let mut p = Self::default();
        p.af1.p_lead_factor = [factor; 12];
        p
    }

    pub fn class(&self, c: ClassLabel) -> &ClassParams {
        match c {
            ClassLabel::Af0 => &self.af0,
            ClassLabel::Af1 => &self.af1,
        }
    }

    pub fn n_samples(&self) -> usize {
        (self.duration_s * self.fs).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        self.af0.check(ClassLabel::Af0)?;
        self.af1.check(ClassLabel::Af1)?;
        let n = &self.noise;
        if [n.wander_amp, n.powerline_amp, n.white_sd]
            .iter()
            .any(|v| !(*v >= 0.0))
            || !(n.wander_hz > 0.0)
        {
            return Err(Error::InvalidArgument(
                "noise amplitudes must be non-negative".into(),
            ));
        }
        if !(self.fs > 0.0) || self.n_samples() == 0 {
            return Err(Error::InvalidArgument(format!(
                "duration {} s at {} Hz gives no samples",
                self.duration_s, self.fs
            )));
        }
        if self.fs <= 2.0 * 50.0 && self.noise.powerline_amp > 0.0 {
            return Err(Error::InvalidArgument(
                "50 Hz interference needs fs above 100 Hz".into(),
            ));
        }
        Ok(())
    }

    fn fields_mut(&mut self) -> Vec<(String, &mut f64)> {
        let mut out: Vec<(String, &mut f64)> = Vec::new();
        for (tag, c) in [("af0", &mut self.af0), ("af1", &mut self.af1)] {
            let ClassParams {
                rr_ms,
                rr_record_sd_ms,
                rr_beat_sd_ms,
                pr_ms,
                pr_record_sd_ms,
                p_amp,
                p_sigma_ms,
                p_lead_factor,
                qrs_amp,
                qrs_ms,
                t_amp,
                t_peak_ms,
                t_sigma_ms,
                amp_record_cv,
                fwave_amp,
                fwave_hz,
            } = c;
            out.push((format!("{tag}.rr_ms"), rr_ms));
            out.push((format!("{tag}.rr_record_sd_ms"), rr_record_sd_ms));
            out.push((format!("{tag}.rr_beat_sd_ms"), rr_beat_sd_ms));
            out.push((format!("{tag}.pr_ms"), pr_ms));
            out.push((format!("{tag}.pr_record_sd_ms"), pr_record_sd_ms));
            out.push((format!("{tag}.p_amp"), p_amp));
            out.push((format!("{tag}.p_sigma_ms"), p_sigma_ms));
            for (l, v) in Lead::ALL.iter().zip(p_lead_factor.iter_mut()) {
                out.push((format!("{tag}.p_lead_factor.{}", l.name()), v));
            }
            out.push((format!("{tag}.qrs_amp"), qrs_amp));
            out.push((format!("{tag}.qrs_ms"), qrs_ms));
            out.push((format!("{tag}.t_amp"), t_amp));
            out.push((format!("{tag}.t_peak_ms"), t_peak_ms));
            out.push((format!("{tag}.t_sigma_ms"), t_sigma_ms));
            out.push((format!("{tag}.amp_record_cv"), amp_record_cv));
            out.push((format!("{tag}.fwave_amp"), fwave_amp));
            out.push((format!("{tag}.fwave_hz"), fwave_hz));
        }
        let n = &mut self.noise;
        out.push(("noise.wander_amp".into(), &mut n.wander_amp));
        out.push(("noise.wander_hz".into(), &mut n.wander_hz));
        out.push(("noise.powerline_amp".into(), &mut n.powerline_amp));
        out.push(("noise.white_sd".into(), &mut n.white_sd));
        for (wave, w) in [
            ("p", &mut self.weights.p),
            ("qrs", &mut self.weights.qrs),
            ("t", &mut self.weights.t),
        ] {
            for (l, v) in Lead::ALL.iter().zip(w.iter_mut()) {
                out.push((format!("weight.{wave}.{}", l.name()), v));
            }
        }
        out.push(("duration_s".into(), &mut self.duration_s));
        out.push(("fs".into(), &mut self.fs));
        out
    }

    /// One `key=value` line per field.
    pub fn to_kv(&self) -> String {
        let mut copy = self.clone();
        let mut s = String::new();
        for (k, v) in copy.fields_mut() {
            let _ = writeln!(s, "{k}={v:?}");
        }
        s
    }

    /// Starts from the defaults and overrides the listed keys; unknown keys are errors.
    pub fn from_kv(text: &str, path: &Path) -> Result<Self> {
        let mut p = Self::default();
        {
            let mut fields = p.fields_mut();
            for (i, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let err = |message: String| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    message,
                };
                let (k, v) = line
                    .split_once('=')
                    .ok_or_else(|| err("expected key=value".into()))?;
                let slot = fields
                    .iter_mut()
                    .find(|(name, _)| name == k.trim())
                    .ok_or_else(|| err(format!("unknown key '{}'", k.trim())))?;
                *slot.1 = v
                    .trim()
                    .parse()
                    .map_err(|_| err(format!("'{}' is not a number", v.trim())))?;
            }
        }
        p.validate()?;
        Ok(p)
    }
}
