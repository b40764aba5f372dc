use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::nn::{ParameterStore, Tape, Var};

/// Gradients below this magnitude are compared absolutely.
pub const REL_FLOOR: f64 = 1e-6;

/// One-sided slopes further apart than this mean a ReLU or max-pool switch lies inside the
/// step; the step is then shrunk tenfold, at most `MAX_REFINE` times.
pub const KINK_TOL: f64 = 1e-3;
pub const MAX_REFINE: usize = 3;
/// Slopes below this are left alone; shrinking the step there only amplifies rounding.
pub const KINK_FLOOR: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picks {
    All,
    /// `count` trainable scalars drawn without replacement.
    Sample {
        count: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub checked: usize,
    pub max_rel_err: f64,
    /// Parameter name and flat index of the largest error.
    pub worst: Option<(String, usize)>,
    /// Numeric and analytic gradient at `worst`.
    pub worst_grads: (f64, f64),
    /// Scalars whose step had to be shrunk around a kink.
    pub refined: usize,
}

pub fn rel_err(numeric: f64, analytic: f64) -> f64 {
    (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(REL_FLOOR)
}

/// Central differences with step `h` against the tape's gradients. `loss` must build the
/// same scalar from the same parameters on every call.
pub fn gradcheck<F>(params: &ParameterStore<f64>, loss: F, picks: Picks, h: f64) -> Result<GradCheck>
where
    F: Fn(&ParameterStore<f64>, &mut Tape<f64>) -> Result<Var>,
{
    let mut tape = Tape::new();
    let l = loss(params, &mut tape)?;
    let grads = tape.backward(l)?;
    let mut slots: Vec<(String, usize)> = params
        .iter()
        .filter(|(_, p)| p.trainable)
        .flat_map(|(n, p)| (0..p.value.len()).map(move |i| (n.clone(), i)))
        .collect();
    if let Picks::Sample { count, seed } = picks {
        slots.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        slots.truncate(count);
        slots.sort();
    }
    let mut work = params.clone();
    let mut eval = |name: &str, i: usize, v: f64| -> Result<f64> {
        work.get_mut(name)?.data_mut()[i] = v;
        let mut t = Tape::new();
        let l = loss(&work, &mut t)?;
        Ok(t.value(l).data()[0])
    };
    let mut out = GradCheck {
        checked: 0,
        max_rel_err: 0.0,
        worst: None,
        worst_grads: (0.0, 0.0),
        refined: 0,
    };
    for (name, i) in slots {
        let orig = params.get(&name)?.data()[i];
        let f0 = eval(&name, i, orig)?;
        let mut step = h;
        let mut numeric;
        let mut refine = 0;
        loop {
            let (fp, fm) = (eval(&name, i, orig + step)?, eval(&name, i, orig - step)?);
            numeric = (fp - fm) / (2.0 * step);
            let (up, down) = ((fp - f0) / step, (f0 - fm) / step);
            let kinked = (up - down).abs() > KINK_TOL * up.abs().max(down.abs()).max(KINK_FLOOR);
            if !kinked || refine == MAX_REFINE {
                break;
            }
            refine += 1;
            step /= 10.0;
        }
        if refine > 0 {
            out.refined += 1;
        }
        eval(&name, i, orig)?;
        let analytic = grads
            .get(&name)
            .map(|g| g.data()[i])
            .ok_or_else(|| Error::InvalidArgument(format!("no gradient for {name}")))?;
        let e = rel_err(numeric, analytic);
        if !e.is_finite() {
            return Err(Error::Numerical(format!(
                "{name}[{i}]: numeric {numeric}, analytic {analytic}"
            )));
        }
        if e > out.max_rel_err || out.worst.is_none() {
            out.max_rel_err = e.max(out.max_rel_err);
            out.worst = Some((name, i));
            out.worst_grads = (numeric, analytic);
        }
        out.checked += 1;
    }
    Ok(out)
}
