//! Dense forward/backward passes over a flat [`ParameterVector`].

use rand::Rng;
use rand_distr::StandardNormal;

use super::spec::{LayerShape, NetworkSpec};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[inline]
pub fn elu<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        x
    } else {
        x.exp_m1()
    }
}

#[inline]
pub(crate) fn elu_grad<T: Scalar>(x: T) -> T {
    if x >= T::zero() {
        T::one()
    } else {
        x.exp()
    }
}

/// Layer inputs and pre-activations of one forward pass, kept for backprop.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache<T> {
    /// Concatenated per-layer inputs.
    inputs: Vec<T>,
    /// Concatenated per-layer pre-activations; the last block is the output.
    pre: Vec<T>,
}

impl<T: Scalar> ForwardCache<T> {
    pub fn output(&self, spec: &NetworkSpec) -> &[T] {
        &self.pre[self.pre.len() - spec.output_dim..]
    }
}

fn check_dims<T>(spec: &NetworkSpec, params: &[T], input: &[T]) -> Result<()> {
    if input.len() != spec.input_dim {
        return Err(Error::dim("network input", spec.input_dim, input.len()));
    }
    if params.len() != spec.param_count() {
        return Err(Error::dim("parameter vector", spec.param_count(), params.len()));
    }
    Ok(())
}

#[inline]
fn affine<T: Scalar>(layer: &LayerShape, params: &[T], x: &[T], out: &mut Vec<T>) {
    let w = &params[layer.weight_offset..layer.bias_offset];
    let b = &params[layer.bias_offset..layer.bias_offset + layer.fan_out];
    for (row, &bias) in w.chunks_exact(layer.fan_in).zip(b) {
        let mut acc = bias;
        for (&wi, &xi) in row.iter().zip(x) {
            acc = acc + wi * xi;
        }
        out.push(acc);
    }
}

/// Evaluates the network. Hidden layers use ELU, the output layer is linear.
pub fn forward<T: Scalar>(spec: &NetworkSpec, params: &[T], input: &[T]) -> Result<Vec<T>> {
    check_dims(spec, params, input)?;
    let layers = spec.layers();
    let last = layers.len() - 1;
    let mut x: Vec<T> = input.to_vec();
    let mut z = Vec::with_capacity(spec.max_width());
    for (k, layer) in layers.iter().enumerate() {
        z.clear();
        affine(layer, params, &x, &mut z);
        if k == last {
            return Ok(z);
        }
        x.clear();
        x.extend(z.iter().map(|&v| elu(v)));
        if spec.d2rl && k + 1 < last {
            x.extend_from_slice(input);
        }
    }
    unreachable!("network has an output layer")
}

/// Forward pass that records what [`backprop`] needs.
pub fn forward_cached<T: Scalar>(
    spec: &NetworkSpec,
    params: &[T],
    input: &[T],
    cache: &mut ForwardCache<T>,
) -> Result<()> {
    check_dims(spec, params, input)?;
    cache.inputs.clear();
    cache.pre.clear();
    let layers = spec.layers();
    let last = layers.len() - 1;
    cache.inputs.extend_from_slice(input);
    let mut in_start = 0;
    for (k, layer) in layers.iter().enumerate() {
        let pre_start = cache.pre.len();
        let x = &cache.inputs[in_start..in_start + layer.fan_in];
        affine(layer, params, x, &mut cache.pre);
        if k < last {
            in_start = cache.inputs.len();
            for i in pre_start..cache.pre.len() {
                let a = elu(cache.pre[i]);
                cache.inputs.push(a);
            }
            if spec.d2rl && k + 1 < last {
                cache.inputs.extend_from_slice(input);
            }
        }
    }
    Ok(())
}

/// Accumulates `d output` back into `grad` (same layout as the parameters).
pub fn backprop<T: Scalar>(
    spec: &NetworkSpec,
    params: &[T],
    cache: &ForwardCache<T>,
    d_output: &[T],
    grad: &mut [T],
) {
    let layers = spec.layers();
    let last = layers.len() - 1;
    let mut in_starts = Vec::with_capacity(layers.len());
    let mut pre_starts = Vec::with_capacity(layers.len());
    let (mut i_off, mut p_off) = (0, 0);
    for layer in &layers {
        in_starts.push(i_off);
        pre_starts.push(p_off);
        i_off += layer.fan_in;
        p_off += layer.fan_out;
    }

    let mut dz: Vec<T> = d_output.to_vec();
    let mut d_in: Vec<T> = Vec::with_capacity(spec.max_width());
    for k in (0..=last).rev() {
        let layer = &layers[k];
        if k < last {
            let pre = &cache.pre[pre_starts[k]..pre_starts[k] + layer.fan_out];
            for (d, &p) in dz.iter_mut().zip(pre) {
                *d = *d * elu_grad(p);
            }
        }
        let x = &cache.inputs[in_starts[k]..in_starts[k] + layer.fan_in];
        let w = &params[layer.weight_offset..layer.bias_offset];
        let (gw, gb) = grad[layer.weight_offset..layer.bias_offset + layer.fan_out]
            .split_at_mut(layer.fan_in * layer.fan_out);
        for (j, &d) in dz.iter().enumerate() {
            gb[j] = gb[j] + d;
            if d == T::zero() {
                continue;
            }
            for (g, &xi) in gw[j * layer.fan_in..(j + 1) * layer.fan_in].iter_mut().zip(x) {
                *g = *g + d * xi;
            }
        }
        if k == 0 {
            break;
        }
        // Only the previous activation part of the input carries gradient.
        let prev_width = layers[k - 1].fan_out;
        d_in.clear();
        d_in.resize(prev_width, T::zero());
        for (j, &d) in dz.iter().enumerate() {
            if d == T::zero() {
                continue;
            }
            let row = &w[j * layer.fan_in..j * layer.fan_in + prev_width];
            for (acc, &wi) in d_in.iter_mut().zip(row) {
                *acc = *acc + wi * d;
            }
        }
        std::mem::swap(&mut dz, &mut d_in);
    }
}

/// Orthogonal initialisation: hidden layers with `hidden_gain`, the output
/// layer with `output_gain`, zero biases and zero log-std.
pub fn init_params<T: Scalar, R: Rng + ?Sized>(
    spec: &NetworkSpec,
    hidden_gain: f64,
    output_gain: f64,
    rng: &mut R,
) -> Vec<T> {
    let mut params = vec![T::zero(); spec.param_count()];
    let layers = spec.layers();
    let last = layers.len() - 1;
    for (k, layer) in layers.iter().enumerate() {
        let gain = if k == last { output_gain } else { hidden_gain };
        let w = orthogonal(layer.fan_out, layer.fan_in, rng);
        for (dst, src) in params[layer.weight_offset..layer.bias_offset].iter_mut().zip(w) {
            *dst = T::lit(gain * src);
        }
    }
    params
}

/// Row-major `rows × cols` matrix with orthonormal rows (rows ≤ cols) or
/// orthonormal columns (rows > cols), from Gram-Schmidt on a Gaussian draw.
fn orthogonal<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Vec<f64> {
    let (n, len) = if rows <= cols { (rows, cols) } else { (cols, rows) };
    let mut vecs: Vec<Vec<f64>> = Vec::with_capacity(n);
    while vecs.len() < n {
        let mut v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        for u in &vecs {
            let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
            for (vi, ui) in v.iter_mut().zip(u) {
                *vi -= dot * ui;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        v.iter_mut().for_each(|x| *x /= norm);
        vecs.push(v);
    }
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        for c in 0..cols {
            out[r * cols + c] = if rows <= cols { vecs[r][c] } else { vecs[c][r] };
        }
    }
    out
}
