//! Internal compute engine for the regressor. Parameters live as 32-bit
//! tensors in the checkpoint; everything here upcasts once and runs in
//! f64.
//!
//! Reductions over the node batch always fold per-node partial sums in
//! ascending node order, so results are independent of thread count.

use super::loss;
use super::{BackwardResult, Gradients, M5Config, ModelCheckpoint};
use crate::auralize::WaveformMatrix;
use crate::error::{Error, Result};
use crate::util::map_indexed as map_nodes;

const BN_EPS: f64 = 1e-5;
const RUNNING_MOMENTUM: f64 = 0.1;
const EVAL_CHUNK: usize = 32;

/// Batch statistics observed by one normalization layer during a
/// training-mode forward pass.
#[derive(Debug, Clone)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// biased (population) variance
    pub var: Vec<f64>,
    pub count: usize,
}

/// `[node][channel][time]` tensor.
struct Batch {
    data: Vec<f64>,
    nodes: usize,
    channels: usize,
    len: usize,
}

impl Batch {
    fn zeros(nodes: usize, channels: usize, len: usize) -> Batch {
        Batch { data: vec![0.0; nodes * channels * len], nodes, channels, len }
    }

    #[inline]
    fn row(&self, n: usize, c: usize) -> &[f64] {
        let start = (n * self.channels + c) * self.len;
        &self.data[start..start + self.len]
    }

    #[inline]
    fn row_mut(&mut self, n: usize, c: usize) -> &mut [f64] {
        let start = (n * self.channels + c) * self.len;
        &mut self.data[start..start + self.len]
    }
}

fn per_node_mut<F>(batch: &mut Batch, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let chunk = batch.channels * batch.len;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        batch.data.par_chunks_mut(chunk).enumerate().for_each(|(n, s)| f(n, s));
    }
    #[cfg(not(feature = "parallel"))]
    {
        batch.data.chunks_mut(chunk).enumerate().for_each(|(n, s)| f(n, s));
    }
}

struct ConvParams {
    w: Vec<f64>,
    b: Vec<f64>,
    out_ch: usize,
    in_ch: usize,
    kernel: usize,
    stride: usize,
}

struct BnParams {
    gamma: Vec<f64>,
    beta: Vec<f64>,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
}

struct NetParams {
    convs: Vec<ConvParams>,
    bns: Vec<BnParams>,
    fc_w: Vec<f64>,
    fc_b: f64,
}

fn f64s(data: &[f32]) -> Vec<f64> {
    data.iter().map(|&x| x as f64).collect()
}

fn extract(ckpt: &ModelCheckpoint) -> NetParams {
    let cfg = &ckpt.config;
    let t = |name: &str| ckpt.tensor(name).expect("validated checkpoint layout");
    let mut convs = Vec::with_capacity(4);
    let mut bns = Vec::with_capacity(4);
    for i in 0..4 {
        convs.push(ConvParams {
            w: f64s(&t(&format!("conv{i}.weight")).data),
            b: f64s(&t(&format!("conv{i}.bias")).data),
            out_ch: cfg.stage_channels[i],
            in_ch: cfg.stage_in_channels(i),
            kernel: cfg.stage_kernel(i),
            stride: cfg.stage_stride(i),
        });
        bns.push(BnParams {
            gamma: f64s(&t(&format!("bn{i}.gamma")).data),
            beta: f64s(&t(&format!("bn{i}.beta")).data),
            running_mean: f64s(&t(&format!("bn{i}.running_mean")).data),
            running_var: f64s(&t(&format!("bn{i}.running_var")).data),
        });
    }
    NetParams {
        convs,
        bns,
        fc_w: f64s(&t("fc.weight").data),
        fc_b: t("fc.bias").data[0] as f64,
    }
}

/// "Same" padding: output covers ceil(len / stride) positions.
fn conv_out_len(in_len: usize, stride: usize) -> usize {
    in_len.div_ceil(stride)
}

fn conv_pad_left(in_len: usize, kernel: usize, stride: usize) -> usize {
    let out = conv_out_len(in_len, stride);
    let total = ((out - 1) * stride + kernel).saturating_sub(in_len);
    total / 2
}

fn conv_forward(x: &Batch, p: &ConvParams) -> Batch {
    let out_len = conv_out_len(x.len, p.stride);
    let pad_left = conv_pad_left(x.len, p.kernel, p.stride) as isize;
    let mut out = Batch::zeros(x.nodes, p.out_ch, out_len);
    let (in_ch, in_len, k) = (p.in_ch, x.len as isize, p.kernel);
    per_node_mut(&mut out, |n, dst| {
        for o in 0..p.out_ch {
            let drow = &mut dst[o * out_len..(o + 1) * out_len];
            for (t, d) in drow.iter_mut().enumerate() {
                let base = (t * p.stride) as isize - pad_left;
                let mut acc = p.b[o];
                for i in 0..in_ch {
                    let xrow = x.row(n, i);
                    let wrow = &p.w[(o * in_ch + i) * k..(o * in_ch + i + 1) * k];
                    let j_lo = (-base).max(0) as usize;
                    let j_hi = (in_len - base).clamp(0, k as isize) as usize;
                    for j in j_lo..j_hi {
                        acc += wrow[j] * xrow[(base + j as isize) as usize];
                    }
                }
                *d = acc;
            }
        }
    });
    out
}

/// Returns (d_weights, d_bias, d_input). `want_dx` skips the input
/// gradient for the first stage.
fn conv_backward(
    x: &Batch,
    p: &ConvParams,
    grad_out: &Batch,
    want_dx: bool,
) -> (Vec<f64>, Vec<f64>, Option<Batch>) {
    let pad_left = conv_pad_left(x.len, p.kernel, p.stride) as isize;
    let (in_ch, in_len, k) = (p.in_ch, x.len as isize, p.kernel);

    let partials: Vec<(Vec<f64>, Vec<f64>)> = map_nodes(x.nodes, |n| {
        let mut dw = vec![0.0; p.w.len()];
        let mut db = vec![0.0; p.out_ch];
        for o in 0..p.out_ch {
            let grow = grad_out.row(n, o);
            for (t, &g) in grow.iter().enumerate() {
                db[o] += g;
                let base = (t * p.stride) as isize - pad_left;
                for i in 0..in_ch {
                    let xrow = x.row(n, i);
                    let dwrow = &mut dw[(o * in_ch + i) * k..(o * in_ch + i + 1) * k];
                    let j_lo = (-base).max(0) as usize;
                    let j_hi = (in_len - base).clamp(0, k as isize) as usize;
                    for j in j_lo..j_hi {
                        dwrow[j] += g * xrow[(base + j as isize) as usize];
                    }
                }
            }
        }
        (dw, db)
    });
    let mut dw = vec![0.0; p.w.len()];
    let mut db = vec![0.0; p.out_ch];
    for (pw, pb) in partials {
        for (a, b) in dw.iter_mut().zip(&pw) {
            *a += b;
        }
        for (a, b) in db.iter_mut().zip(&pb) {
            *a += b;
        }
    }

    let dx = want_dx.then(|| {
        let mut dx = Batch::zeros(x.nodes, in_ch, x.len);
        per_node_mut(&mut dx, |n, dst| {
            for o in 0..p.out_ch {
                let grow = grad_out.row(n, o);
                for (t, &g) in grow.iter().enumerate() {
                    let base = (t * p.stride) as isize - pad_left;
                    for i in 0..in_ch {
                        let wrow = &p.w[(o * in_ch + i) * k..(o * in_ch + i + 1) * k];
                        let drow = &mut dst[i * x.len..(i + 1) * x.len];
                        let j_lo = (-base).max(0) as usize;
                        let j_hi = (in_len - base).clamp(0, k as isize) as usize;
                        for j in j_lo..j_hi {
                            drow[(base + j as isize) as usize] += wrow[j] * g;
                        }
                    }
                }
            }
        });
        dx
    });
    (dw, db, dx)
}

fn batch_mean_var(x: &Batch) -> (Vec<f64>, Vec<f64>) {
    let partials: Vec<(Vec<f64>, Vec<f64>)> = map_nodes(x.nodes, |n| {
        let mut sum = vec![0.0; x.channels];
        let mut sq = vec![0.0; x.channels];
        for c in 0..x.channels {
            for &v in x.row(n, c) {
                sum[c] += v;
                sq[c] += v * v;
            }
        }
        (sum, sq)
    });
    let mut sum = vec![0.0; x.channels];
    let mut sq = vec![0.0; x.channels];
    for (ps, pq) in partials {
        for (a, b) in sum.iter_mut().zip(&ps) {
            *a += b;
        }
        for (a, b) in sq.iter_mut().zip(&pq) {
            *a += b;
        }
    }
    let count = (x.nodes * x.len) as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / count).collect();
    let var: Vec<f64> = sq
        .iter()
        .zip(&mean)
        .map(|(q, m)| (q / count - m * m).max(0.0))
        .collect();
    (mean, var)
}

/// Normalizes with the given statistics; returns (xhat, y, inv_std).
fn bn_apply(x: &Batch, bn: &BnParams, mean: &[f64], var: &[f64]) -> (Batch, Batch, Vec<f64>) {
    let inv_std: Vec<f64> = var.iter().map(|v| 1.0 / (v + BN_EPS).sqrt()).collect();
    let mut xhat = Batch::zeros(x.nodes, x.channels, x.len);
    let mut y = Batch::zeros(x.nodes, x.channels, x.len);
    let chunk = x.channels * x.len;
    let apply = |n: usize, xh: &mut [f64], yy: &mut [f64]| {
        for c in 0..x.channels {
            let src = x.row(n, c);
            let (m, is, g, b) = (mean[c], inv_std[c], bn.gamma[c], bn.beta[c]);
            let xh_row = &mut xh[c * x.len..(c + 1) * x.len];
            let y_row = &mut yy[c * x.len..(c + 1) * x.len];
            for t in 0..x.len {
                let h = (src[t] - m) * is;
                xh_row[t] = h;
                y_row[t] = g * h + b;
            }
        }
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        xhat.data
            .par_chunks_mut(chunk)
            .zip(y.data.par_chunks_mut(chunk))
            .enumerate()
            .for_each(|(n, (xh, yy))| apply(n, xh, yy));
    }
    #[cfg(not(feature = "parallel"))]
    {
        xhat.data
            .chunks_mut(chunk)
            .zip(y.data.chunks_mut(chunk))
            .enumerate()
            .for_each(|(n, (xh, yy))| apply(n, xh, yy));
    }
    (xhat, y, inv_std)
}

/// Gradient through training-mode normalization. Consumes `grad_y` and
/// returns (dgamma, dbeta, dx).
fn bn_backward(
    xhat: &Batch,
    inv_std: &[f64],
    gamma: &[f64],
    grad_y: &Batch,
) -> (Vec<f64>, Vec<f64>, Batch) {
    let channels = xhat.channels;
    let count = (xhat.nodes * xhat.len) as f64;
    let partials: Vec<(Vec<f64>, Vec<f64>)> = map_nodes(xhat.nodes, |n| {
        let mut s_g = vec![0.0; channels];
        let mut s_gx = vec![0.0; channels];
        for c in 0..channels {
            let g = grad_y.row(n, c);
            let h = xhat.row(n, c);
            for t in 0..xhat.len {
                s_g[c] += g[t];
                s_gx[c] += g[t] * h[t];
            }
        }
        (s_g, s_gx)
    });
    let mut dbeta = vec![0.0; channels];
    let mut dgamma = vec![0.0; channels];
    for (sg, sgx) in partials {
        for (a, b) in dbeta.iter_mut().zip(&sg) {
            *a += b;
        }
        for (a, b) in dgamma.iter_mut().zip(&sgx) {
            *a += b;
        }
    }
    let mean_g: Vec<f64> = dbeta.iter().map(|s| s / count).collect();
    let mean_gx: Vec<f64> = dgamma.iter().map(|s| s / count).collect();

    let mut dx = Batch::zeros(xhat.nodes, channels, xhat.len);
    per_node_mut(&mut dx, |n, dst| {
        for c in 0..channels {
            let scale = gamma[c] * inv_std[c];
            let (mg, mgx) = (mean_g[c], mean_gx[c]);
            let g = grad_y.row(n, c);
            let h = xhat.row(n, c);
            let drow = &mut dst[c * xhat.len..(c + 1) * xhat.len];
            for t in 0..xhat.len {
                drow[t] = scale * (g[t] - mg - h[t] * mgx);
            }
        }
    });
    (dgamma, dbeta, dx)
}

fn relu_inplace(x: &mut Batch) {
    per_node_mut(x, |_, s| {
        for v in s.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
    });
}

fn pool_out_len(len: usize, pool: usize) -> usize {
    if len >= pool {
        (len - pool) / pool + 1
    } else {
        1
    }
}

/// Max pooling with stride = kernel; a tail shorter than the kernel only
/// forms a window when it is the whole row.
fn maxpool_forward(x: &Batch, pool: usize) -> (Batch, Vec<u32>) {
    let out_len = pool_out_len(x.len, pool);
    let mut out = Batch::zeros(x.nodes, x.channels, out_len);
    let mut argmax = vec![0u32; x.nodes * x.channels * out_len];
    let results: Vec<(Vec<f64>, Vec<u32>)> = map_nodes(x.nodes, |n| {
        let mut vals = vec![0.0; x.channels * out_len];
        let mut args = vec![0u32; x.channels * out_len];
        for c in 0..x.channels {
            let src = x.row(n, c);
            for t in 0..out_len {
                let start = t * pool;
                let end = (start + pool).min(x.len);
                let mut best = start;
                for i in start + 1..end {
                    if src[i] > src[best] {
                        best = i;
                    }
                }
                vals[c * out_len + t] = src[best];
                args[c * out_len + t] = best as u32;
            }
        }
        (vals, args)
    });
    for (n, (vals, args)) in results.into_iter().enumerate() {
        let base = n * x.channels * out_len;
        out.data[base..base + vals.len()].copy_from_slice(&vals);
        argmax[base..base + args.len()].copy_from_slice(&args);
    }
    (out, argmax)
}

fn maxpool_backward(grad_out: &Batch, argmax: &[u32], in_len: usize) -> Batch {
    let mut dx = Batch::zeros(grad_out.nodes, grad_out.channels, in_len);
    let chunk_out = grad_out.channels * grad_out.len;
    per_node_mut(&mut dx, |n, dst| {
        let g_base = n * chunk_out;
        for c in 0..grad_out.channels {
            let drow = &mut dst[c * in_len..(c + 1) * in_len];
            for t in 0..grad_out.len {
                let idx = g_base + c * grad_out.len + t;
                drow[argmax[idx] as usize] += grad_out.data[idx];
            }
        }
    });
    dx
}

struct StageCache {
    conv_input: Batch,
    xhat: Batch,
    inv_std: Vec<f64>,
    relu_out: Batch,
    argmax: Vec<u32>,
    pool_out_len: usize,
}

pub(super) struct ForwardCache {
    stages: Vec<StageCache>,
    features: Vec<f64>,
    gap_len: usize,
    nodes: usize,
}

fn waves_to_batch(cfg: &M5Config, waves: &WaveformMatrix) -> Result<Batch> {
    if waves.steps() != cfg.input_length {
        return Err(Error::DimensionMismatch {
            expected: cfg.input_length,
            got: waves.steps(),
        });
    }
    if waves.nodes() == 0 {
        return Err(Error::InvalidParameter("waveform matrix has no nodes".into()));
    }
    let mut batch = Batch::zeros(waves.nodes(), 1, cfg.input_length);
    for v in 0..waves.nodes() {
        let row = batch.row_mut(v, 0);
        for (t, x) in row.iter_mut().enumerate() {
            // the model boundary is 32-bit
            *x = waves.get(t, v) as f32 as f64;
        }
    }
    Ok(batch)
}

fn gap_and_fc(params: &NetParams, x: &Batch) -> (Vec<f64>, Vec<f64>, usize) {
    let c_last = x.channels;
    let mut features = vec![0.0; x.nodes * c_last];
    for n in 0..x.nodes {
        for c in 0..c_last {
            let row = x.row(n, c);
            features[n * c_last + c] = row.iter().sum::<f64>() / x.len as f64;
        }
    }
    let outputs = (0..x.nodes)
        .map(|n| {
            let f = &features[n * c_last..(n + 1) * c_last];
            params.fc_b + params.fc_w.iter().zip(f).map(|(w, v)| w * v).sum::<f64>()
        })
        .collect();
    (outputs, features, x.len)
}

pub(super) fn forward_train(
    ckpt: &ModelCheckpoint,
    waves: &WaveformMatrix,
) -> Result<(Vec<f64>, ForwardCache, Vec<BatchStats>)> {
    let params = extract(ckpt);
    let mut current = waves_to_batch(&ckpt.config, waves)?;
    let mut stages = Vec::with_capacity(4);
    let mut all_stats = Vec::with_capacity(4);
    for i in 0..4 {
        let conv_out = conv_forward(&current, &params.convs[i]);
        let (mean, var) = batch_mean_var(&conv_out);
        let (xhat, mut y, inv_std) = bn_apply(&conv_out, &params.bns[i], &mean, &var);
        all_stats.push(BatchStats {
            count: conv_out.nodes * conv_out.len,
            mean,
            var,
        });
        relu_inplace(&mut y);
        let (pooled, argmax) = maxpool_forward(&y, ckpt.config.pool);
        let pool_len = pooled.len;
        stages.push(StageCache {
            conv_input: current,
            xhat,
            inv_std,
            relu_out: y,
            argmax,
            pool_out_len: pool_len,
        });
        current = pooled;
    }
    let (outputs, features, gap_len) = gap_and_fc(&params, &current);
    let cache = ForwardCache {
        stages,
        features,
        gap_len,
        nodes: current.nodes,
    };
    Ok((outputs, cache, all_stats))
}

pub(super) fn forward_eval(ckpt: &ModelCheckpoint, waves: &WaveformMatrix) -> Result<Vec<f64>> {
    let params = extract(ckpt);
    let full = waves_to_batch(&ckpt.config, waves)?;
    let mut outputs = Vec::with_capacity(full.nodes);
    let mut start = 0;
    while start < full.nodes {
        let end = (start + EVAL_CHUNK).min(full.nodes);
        let nodes = end - start;
        let mut current = Batch {
            data: full.data[start * full.len..end * full.len].to_vec(),
            nodes,
            channels: 1,
            len: full.len,
        };
        for i in 0..4 {
            let conv_out = conv_forward(&current, &params.convs[i]);
            let bn = &params.bns[i];
            let (_, mut y, _) = bn_apply(&conv_out, bn, &bn.running_mean, &bn.running_var);
            relu_inplace(&mut y);
            let (pooled, _) = maxpool_forward(&y, ckpt.config.pool);
            current = pooled;
        }
        let (out, _, _) = gap_and_fc(&params, &current);
        outputs.extend(out);
        start = end;
    }
    Ok(outputs)
}

pub(super) fn backward(
    ckpt: &ModelCheckpoint,
    waves: &WaveformMatrix,
    target: &[f64],
) -> Result<BackwardResult> {
    let (outputs, cache, batch_stats) = forward_train(ckpt, waves)?;
    if target.len() != outputs.len() {
        return Err(Error::DimensionMismatch {
            expected: outputs.len(),
            got: target.len(),
        });
    }
    let params = extract(ckpt);
    let (loss_value, dout) = loss::pearson_loss_grad(target, &outputs);

    let c_last = ckpt.config.stage_channels[3];
    let nodes = cache.nodes;
    let mut d_fc_w = vec![0.0; c_last];
    let mut d_fc_b = 0.0;
    for n in 0..nodes {
        let f = &cache.features[n * c_last..(n + 1) * c_last];
        d_fc_b += dout[n];
        for (dw, &v) in d_fc_w.iter_mut().zip(f) {
            *dw += dout[n] * v;
        }
    }
    // GAP spreads each feature gradient uniformly over time
    let mut grad = Batch::zeros(nodes, c_last, cache.gap_len);
    per_node_mut(&mut grad, |n, dst| {
        for c in 0..c_last {
            let v = params.fc_w[c] * dout[n] / cache.gap_len as f64;
            for d in &mut dst[c * cache.gap_len..(c + 1) * cache.gap_len] {
                *d = v;
            }
        }
    });

    let mut conv_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(4);
    let mut bn_grads: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(4);
    for i in (0..4).rev() {
        let stage = &cache.stages[i];
        debug_assert_eq!(grad.len, stage.pool_out_len);
        let mut d_relu = maxpool_backward(&grad, &stage.argmax, stage.relu_out.len);
        // relu mask: output of the stage is zero exactly where the input
        // was clamped
        {
            let relu = &stage.relu_out;
            per_node_mut(&mut d_relu, |n, dst| {
                let base = n * relu.channels * relu.len;
                for (offset, d) in dst.iter_mut().enumerate() {
                    if relu.data[base + offset] <= 0.0 {
                        *d = 0.0;
                    }
                }
            });
        }
        let (dgamma, dbeta, d_conv_out) = bn_backward(
            &stage.xhat,
            &stage.inv_std,
            &params.bns[i].gamma,
            &d_relu,
        );
        bn_grads.push((dgamma, dbeta));
        let (dw, db, dx) = conv_backward(&stage.conv_input, &params.convs[i], &d_conv_out, i > 0);
        conv_grads.push((dw, db));
        if let Some(dx) = dx {
            grad = dx;
        }
    }
    conv_grads.reverse();
    bn_grads.reverse();

    let mut tensors = Vec::with_capacity(ckpt.tensors().len());
    for i in 0..4 {
        let (dw, db) = std::mem::take(&mut conv_grads[i]);
        let (dgamma, dbeta) = std::mem::take(&mut bn_grads[i]);
        tensors.push(dw);
        tensors.push(db);
        tensors.push(dgamma);
        tensors.push(dbeta);
        tensors.push(Vec::new()); // running_mean
        tensors.push(Vec::new()); // running_var
    }
    tensors.push(d_fc_w);
    tensors.push(vec![d_fc_b]);

    Ok(BackwardResult {
        loss: loss_value,
        outputs,
        gradients: Gradients(tensors),
        batch_stats,
    })
}

/// `running = (1 - m) * running + m * batch`, with the variance made
/// unbiased first, matching the usual deep-learning convention.
pub(super) fn commit_batch_stats(ckpt: &mut ModelCheckpoint, stats: &[BatchStats]) {
    for (i, s) in stats.iter().enumerate() {
        let unbias = if s.count > 1 {
            s.count as f64 / (s.count - 1) as f64
        } else {
            1.0
        };
        for (field, values, factor) in [
            ("running_mean", &s.mean, 1.0),
            ("running_var", &s.var, unbias),
        ] {
            let name = format!("bn{i}.{field}");
            let tensor = ckpt
                .tensors_mut()
                .iter_mut()
                .find(|t| t.name == name)
                .expect("validated checkpoint layout");
            for (r, &b) in tensor.data.iter_mut().zip(values) {
                let updated = (1.0 - RUNNING_MOMENTUM) * (*r as f64) + RUNNING_MOMENTUM * b * factor;
                *r = updated as f32;
            }
        }
    }
}
