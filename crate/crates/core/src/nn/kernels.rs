//! Forward and backward kernels on raw row-major buffers.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvGeom {
    pub batch: usize,
    pub c_in: usize,
    pub c_out: usize,
    pub time: usize,
    pub kernel: usize,
    pub dilation: usize,
}

impl ConvGeom {
    /// Zeros to the left for "same" output length; the odd extra zero goes right.
    pub fn pad_left(&self) -> usize {
        ((self.kernel - 1) * self.dilation) / 2
    }

    fn cols(&self) -> usize {
        self.c_in * self.kernel
    }

    /// Offset of tap `k` relative to the output index.
    fn offset(&self, k: usize) -> isize {
        (k * self.dilation) as isize - self.pad_left() as isize
    }

    /// Output range `[lo, hi)` for which tap `k` reads inside the signal.
    fn valid(&self, k: usize) -> (usize, usize) {
        let o = self.offset(k);
        let t = self.time as isize;
        let lo = (-o).clamp(0, t) as usize;
        let hi = (t - o).clamp(0, t) as usize;
        (lo, hi.max(lo))
    }
}

fn im2col<S: Scalar>(g: &ConvGeom, x: &[S], cols: &mut [S]) {
    let t = g.time;
    for ci in 0..g.c_in {
        let row_in = &x[ci * t..(ci + 1) * t];
        for k in 0..g.kernel {
            let row = &mut cols[(ci * g.kernel + k) * t..(ci * g.kernel + k + 1) * t];
            let (lo, hi) = g.valid(k);
            let o = g.offset(k);
            row[..lo].fill(S::zero());
            row[hi..].fill(S::zero());
            if hi > lo {
                let src = (lo as isize + o) as usize;
                row[lo..hi].copy_from_slice(&row_in[src..src + (hi - lo)]);
            }
        }
    }
}

fn col2im_add<S: Scalar>(g: &ConvGeom, cols: &[S], dx: &mut [S]) {
    let t = g.time;
    for ci in 0..g.c_in {
        for k in 0..g.kernel {
            let row = &cols[(ci * g.kernel + k) * t..(ci * g.kernel + k + 1) * t];
            let (lo, hi) = g.valid(k);
            let o = g.offset(k);
            if hi > lo {
                let dst = (lo as isize + o) as usize;
                let out = &mut dx[ci * t + dst..ci * t + dst + (hi - lo)];
                for (d, s) in out.iter_mut().zip(&row[lo..hi]) {
                    *d += *s;
                }
            }
        }
    }
}

/// `y[b, co, t] = bias[co] + sum_{ci,k} w[co, ci, k] * x[b, ci, t + k*d - pad_left]`.
pub fn conv1d_forward<S: Scalar>(g: &ConvGeom, x: &[S], w: &[S], bias: &[S]) -> Vec<S> {
    let (t, ck) = (g.time, g.cols());
    let mut y = vec![S::zero(); g.batch * g.c_out * t];
    let mut cols = vec![S::zero(); ck * t];
    for b in 0..g.batch {
        im2col(g, &x[b * g.c_in * t..(b + 1) * g.c_in * t], &mut cols);
        let yb = &mut y[b * g.c_out * t..(b + 1) * g.c_out * t];
        for (co, row) in yb.chunks_exact_mut(t).enumerate() {
            row.fill(bias[co]);
        }
        S::gemm(
            g.c_out,
            ck,
            t,
            S::one(),
            w,
            ck as isize,
            1,
            &cols,
            t as isize,
            1,
            S::one(),
            yb,
            t as isize,
            1,
        );
    }
    y
}

/// Accumulates `dw`, `db` and (when given) `dx`.
pub fn conv1d_backward<S: Scalar>(
    g: &ConvGeom,
    x: &[S],
    w: &[S],
    dy: &[S],
    dw: &mut [S],
    db: &mut [S],
    mut dx: Option<&mut [S]>,
) {
    let (t, ck) = (g.time, g.cols());
    let mut cols = vec![S::zero(); ck * t];
    let mut dcols = vec![S::zero(); ck * t];
    for b in 0..g.batch {
        let dyb = &dy[b * g.c_out * t..(b + 1) * g.c_out * t];
        for (co, row) in dyb.chunks_exact(t).enumerate() {
            db[co] += row.iter().copied().sum::<S>();
        }
        im2col(g, &x[b * g.c_in * t..(b + 1) * g.c_in * t], &mut cols);
        // dW += dY_b * cols^T
        S::gemm(
            g.c_out,
            t,
            ck,
            S::one(),
            dyb,
            t as isize,
            1,
            &cols,
            1,
            t as isize,
            S::one(),
            dw,
            ck as isize,
            1,
        );
        if let Some(dx) = dx.as_deref_mut() {
            // dcols = W^T * dY_b
            S::gemm(
                ck,
                g.c_out,
                t,
                S::one(),
                w,
                1,
                ck as isize,
                dyb,
                t as isize,
                1,
                S::zero(),
                &mut dcols,
                t as isize,
                1,
            );
            col2im_add(g, &dcols, &mut dx[b * g.c_in * t..(b + 1) * g.c_in * t]);
        }
    }
}

/// Window-2 stride-2 max over the last axis. Returns values and source indices
/// (first index wins ties).
pub fn maxpool2_forward<S: Scalar>(x: &[S], rows: usize, time: usize) -> (Vec<S>, Vec<u32>) {
    let half = time / 2;
    let mut y = Vec::with_capacity(rows * half);
    let mut arg = Vec::with_capacity(rows * half);
    for r in 0..rows {
        let base = r * time;
        for i in 0..half {
            let (a, b) = (x[base + 2 * i], x[base + 2 * i + 1]);
            if a >= b || b.is_nan() {
                y.push(a);
                arg.push((base + 2 * i) as u32);
            } else {
                y.push(b);
                arg.push((base + 2 * i + 1) as u32);
            }
        }
    }
    (y, arg)
}

/// Mean over the last axis.
pub fn global_avg_pool_forward<S: Scalar>(x: &[S], rows: usize, time: usize) -> Vec<S> {
    let inv = S::one() / S::lit(time as f64);
    (0..rows)
        .map(|r| x[r * time..(r + 1) * time].iter().copied().sum::<S>() * inv)
        .collect()
}

/// `y = x W^T + b` for `x: [batch, n]`, `W: [m, n]`.
pub fn dense_forward<S: Scalar>(x: &[S], w: &[S], b: &[S], batch: usize, n: usize, m: usize) -> Vec<S> {
    let mut y = Vec::with_capacity(batch * m);
    for _ in 0..batch {
        y.extend_from_slice(b);
    }
    S::gemm(
        batch,
        n,
        m,
        S::one(),
        x,
        n as isize,
        1,
        w,
        1,
        n as isize,
        S::one(),
        &mut y,
        m as isize,
        1,
    );
    y
}

#[allow(clippy::too_many_arguments)]
pub fn dense_backward<S: Scalar>(
    x: &[S],
    w: &[S],
    dy: &[S],
    batch: usize,
    n: usize,
    m: usize,
    dw: &mut [S],
    db: &mut [S],
    dx: Option<&mut [S]>,
) {
    for row in dy.chunks_exact(m) {
        for (d, v) in db.iter_mut().zip(row) {
            *d += *v;
        }
    }
    // dW += dY^T x
    S::gemm(
        m,
        batch,
        n,
        S::one(),
        dy,
        1,
        m as isize,
        x,
        n as isize,
        1,
        S::one(),
        dw,
        n as isize,
        1,
    );
    if let Some(dx) = dx {
        S::gemm(
            batch,
            m,
            n,
            S::one(),
            dy,
            m as isize,
            1,
            w,
            n as isize,
            1,
            S::one(),
            dx,
            n as isize,
            1,
        );
    }
}

/// Per-channel mean and population variance over `[batch, channels, inner]`.
pub fn channel_moments<S: Scalar>(
    x: &[S],
    batch: usize,
    channels: usize,
    inner: usize,
) -> (Vec<f64>, Vec<f64>) {
    let count = (batch * inner) as f64;
    let mut mean = vec![0.0f64; channels];
    for b in 0..batch {
        for c in 0..channels {
            let s = &x[(b * channels + c) * inner..(b * channels + c + 1) * inner];
            mean[c] += lane_sum(s, |v| v.as_f64());
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0f64; channels];
    for b in 0..batch {
        for c in 0..channels {
            let s = &x[(b * channels + c) * inner..(b * channels + c + 1) * inner];
            let m = mean[c];
            var[c] += lane_sum(s, |v| (v.as_f64() - m).powi(2));
        }
    }
    var.iter_mut().for_each(|v| *v /= count);
    (mean, var)
}

/// Sum of `f` over `s` with four interleaved accumulators.
pub fn lane_sum<S: Copy>(s: &[S], f: impl Fn(S) -> f64) -> f64 {
    let mut acc = [0.0f64; 4];
    let chunks = s.chunks_exact(4);
    let rest = chunks.remainder();
    for c in chunks {
        for k in 0..4 {
            acc[k] += f(c[k]);
        }
    }
    let tail: f64 = rest.iter().map(|&v| f(v)).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Sums of `a * b` and of `a` with four interleaved accumulators.
pub fn lane_dot_sum<S: Scalar>(a: &[S], b: &[S]) -> (f64, f64) {
    let (mut p, mut q) = ([0.0f64; 4], [0.0f64; 4]);
    let n = a.len().min(b.len());
    let split = n - n % 4;
    for i in (0..split).step_by(4) {
        for k in 0..4 {
            let d = a[i + k].as_f64();
            p[k] += d * b[i + k].as_f64();
            q[k] += d;
        }
    }
    let (mut pt, mut qt) = (0.0, 0.0);
    for i in split..n {
        let d = a[i].as_f64();
        pt += d * b[i].as_f64();
        qt += d;
    }
    (
        (p[0] + p[1]) + (p[2] + p[3]) + pt,
        (q[0] + q[1]) + (q[2] + q[3]) + qt,
    )
}

/// Numerically stable softmax of each row.
pub fn softmax_rows<S: Scalar>(logits: &[S], classes: usize) -> Vec<S> {
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.chunks_exact(classes) {
        let mx = row.iter().copied().fold(S::neg_infinity(), S::max);
        let exps: Vec<S> = row.iter().map(|&v| (v - mx).exp()).collect();
        let z: S = exps.iter().copied().sum();
        out.extend(exps.into_iter().map(|e| e / z));
    }
    out
}

/// Cross-entropy of one row given its max-shifted log-sum-exp.
pub fn cross_entropy_row<S: Scalar>(row: &[S], target: usize) -> S {
    let mx = row.iter().copied().fold(S::neg_infinity(), S::max);
    let lse = row.iter().map(|&v| (v - mx).exp()).sum::<S>().ln() + mx;
    lse - row[target]
}
