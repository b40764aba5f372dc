use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{ClassLabel, EcgRecord, Lead, Waveform};
use crate::error::Result;
use crate::synthgen::{ClassParams, SynthParams};

/// QRS corners as (fraction of duration, fraction of amplitude): Q dip, R peak, S dip.
const QRS_KNOTS: [(f64, f64); 5] = [(0.0, 0.0), (0.15, -0.1), (0.4, 1.0), (0.65, -0.25), (1.0, 0.0)];

/// Random quantities fixed for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordDraw {
    pub pr_ms: f64,
    pub p_amp: f64,
    pub qrs_amp: f64,
    pub t_amp: f64,
    /// QRS onsets, ms from the record start; may lie outside the record when a wave of the
    /// beat still reaches into it.
    pub beat_onsets_ms: Vec<f64>,
    pub fwave_phase: f64,
    pub wander_phase: [f64; 12],
    pub powerline_phase: [f64; 12],
}

fn gaussian(t: f64, center: f64, sigma: f64) -> f64 {
    let z = (t - center) / sigma;
    (-0.5 * z * z).exp()
}

fn qrs_shape(t: f64, duration: f64) -> f64 {
    if !(0.0..duration).contains(&t) {
        return 0.0;
    }
    let x = t / duration;
    for w in QRS_KNOTS.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        if x <= x1 {
            return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
        }
    }
    0.0
}

/// The three waves of one beat at `t_ms` from its QRS onset, unweighted: (P, QRS, T).
pub fn beat_waves(c: &ClassParams, draw: &RecordDraw, t_ms: f64) -> (f64, f64, f64) {
    let p_center = -draw.pr_ms + 3.0 * c.p_sigma_ms;
    (
        draw.p_amp * gaussian(t_ms, p_center, c.p_sigma_ms),
        draw.qrs_amp * qrs_shape(t_ms, c.qrs_ms),
        draw.t_amp * gaussian(t_ms, c.t_peak_ms, c.t_sigma_ms),
    )
}

/// Lead-projected beat value without noise.
pub fn beat_template(
    params: &SynthParams,
    class: ClassLabel,
    draw: &RecordDraw,
    lead: usize,
    t_ms: f64,
) -> f64 {
    let c = params.class(class);
    let w = &params.weights;
    let (p, q, t) = beat_waves(c, draw, t_ms);
    w.p[lead] * c.p_lead_factor[lead] * p + w.qrs[lead] * q + w.t[lead] * t
}

fn lognormal_factor<R: Rng + ?Sized>(cv: f64, rng: &mut R) -> f64 {
    if cv == 0.0 {
        1.0
    } else {
        (Normal::new(0.0, cv).unwrap().sample(rng)).exp()
    }
}

fn normal<R: Rng + ?Sized>(mean: f64, sd: f64, rng: &mut R) -> f64 {
    if sd == 0.0 {
        mean
    } else {
        Normal::new(mean, sd).unwrap().sample(rng)
    }
}

pub fn draw_record<R: Rng + ?Sized>(params: &SynthParams, class: ClassLabel, rng: &mut R) -> RecordDraw {
    let c = params.class(class);
    let duration_ms = 1000.0 * params.n_samples() as f64 / params.fs;
    let rr = normal(c.rr_ms, c.rr_record_sd_ms, rng).max(0.5 * c.rr_ms);
    let pr = normal(c.pr_ms, c.pr_record_sd_ms, rng).clamp(0.8 * c.pr_ms, 1.2 * c.pr_ms);
    let p_amp = c.p_amp * lognormal_factor(c.amp_record_cv, rng);
    let qrs_amp = c.qrs_amp * lognormal_factor(c.amp_record_cv, rng);
    let t_amp = c.t_amp * lognormal_factor(c.amp_record_cv, rng);
    // Beats whose P to T span touches the record.
    let reach_back = c.t_peak_ms + 8.0 * c.t_sigma_ms;
    let mut onset = rng.gen_range(0.0..rr) - rr;
    let mut onsets = Vec::new();
    while onset - pr - 5.0 * c.p_sigma_ms <= duration_ms {
        if onset + reach_back >= 0.0 {
            onsets.push(onset);
        }
        onset += normal(rr, c.rr_beat_sd_ms, rng).max(0.7 * rr);
    }
    let mut phases = || -> [f64; 12] { std::array::from_fn(|_| rng.gen_range(0.0..2.0 * PI)) };
    let wander_phase = phases();
    let powerline_phase = phases();
    RecordDraw {
        pr_ms: pr,
        p_amp,
        qrs_amp,
        t_amp,
        beat_onsets_ms: onsets,
        fwave_phase: rng.gen_range(0.0..2.0 * PI),
        wander_phase,
        powerline_phase,
    }
}

/// Noise-free 12-lead signal of a drawn record, time-major.
pub fn render_clean(params: &SynthParams, class: ClassLabel, draw: &RecordDraw) -> Vec<f64> {
    let c = params.class(class);
    let n = params.n_samples();
    let mut out = vec![0.0; n * 12];
    // Gaussian tails beyond 8 sigma are below 1e-13 of the peak.
    let span_lo = -draw.pr_ms + 3.0 * c.p_sigma_ms - 8.0 * c.p_sigma_ms;
    let span_hi = (c.t_peak_ms + 8.0 * c.t_sigma_ms).max(c.qrs_ms);
    let ms_per_sample = 1000.0 / params.fs;
    for &onset in &draw.beat_onsets_ms {
        let first = (((onset + span_lo) / ms_per_sample).floor().max(0.0)) as usize;
        let last = (((onset + span_hi) / ms_per_sample).ceil().max(0.0) as usize).min(n);
        for i in first..last {
            let t_rel = i as f64 * ms_per_sample - onset;
            for lead in 0..12 {
                out[i * 12 + lead] += beat_template(params, class, draw, lead, t_rel);
            }
        }
    }
    if c.fwave_amp > 0.0 {
        for i in 0..n {
            let t = i as f64 / params.fs;
            let s = c.fwave_amp * (2.0 * PI * c.fwave_hz * t + draw.fwave_phase).sin();
            for lead in 0..12 {
                out[i * 12 + lead] += params.weights.p[lead] * s;
            }
        }
    }
    out
}

/// A record plus the QRS onsets used to build it.
pub fn synth_ecg_with_beats<R: Rng + ?Sized>(
    class: ClassLabel,
    params: &SynthParams,
    rng: &mut R,
) -> Result<(EcgRecord, RecordDraw)> {
    params.validate()?;
    let draw = draw_record(params, class, rng);
    let mut x = render_clean(params, class, &draw);
    let nz = &params.noise;
    let white = Normal::new(0.0, nz.white_sd.max(f64::MIN_POSITIVE)).unwrap();
    for (i, frame) in x.chunks_exact_mut(12).enumerate() {
        let t = i as f64 / params.fs;
        for (lead, v) in frame.iter_mut().enumerate() {
            *v += nz.wander_amp * (2.0 * PI * nz.wander_hz * t + draw.wander_phase[lead]).sin();
            *v += nz.powerline_amp * (2.0 * PI * 50.0 * t + draw.powerline_phase[lead]).sin();
            if nz.white_sd > 0.0 {
                *v += white.sample(rng);
            }
        }
    }
    let samples = x.into_iter().map(|v| v as f32).collect();
    let w = Waveform::new(samples, params.fs as f32, Lead::ALL.to_vec())?;
    Ok((EcgRecord::new("synthetic", w, class), draw))
}

pub fn synth_ecg<R: Rng + ?Sized>(class: ClassLabel, params: &SynthParams, rng: &mut R) -> Result<EcgRecord> {
    synth_ecg_with_beats(class, params, rng).map(|(r, _)| r)
}
