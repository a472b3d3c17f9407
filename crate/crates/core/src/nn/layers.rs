//! Forward and backward passes of the individual layers. Feature maps are
//! `(H, W, C)`; convolution kernels are `(K, K, C_in, C_out)`; dense weights
//! are `(out, in)`.

use super::Tensor;
use crate::error::{Error, Result};

fn mismatch(msg: String) -> Error {
    Error::ShapeMismatch(msg)
}

/// Stride-1 convolution with zero "same" padding and an odd square kernel.
pub fn conv2d_forward(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let (h, w, cin) = input.hwc()?;
    let (k, cout) = conv_kernel_dims(weight, cin)?;
    if bias.shape() != [cout] {
        return Err(mismatch(format!(
            "conv bias shape {:?}, expected [{cout}]",
            bias.shape()
        )));
    }
    let pad = k / 2;
    let x = input.data();
    let wt = weight.data();
    let b = bias.data();
    let mut out = vec![0.0; h * w * cout];
    for y in 0..h {
        for xo in 0..w {
            let o = &mut out[(y * w + xo) * cout..][..cout];
            o.copy_from_slice(b);
            for ky in 0..k {
                let Some(iy) = (y + ky).checked_sub(pad).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..k {
                    let Some(ix) = (xo + kx).checked_sub(pad).filter(|&v| v < w) else {
                        continue;
                    };
                    let inp = &x[(iy * w + ix) * cin..][..cin];
                    let wbase = &wt[(ky * k + kx) * cin * cout..][..cin * cout];
                    for (ci, &v) in inp.iter().enumerate() {
                        let wrow = &wbase[ci * cout..][..cout];
                        for (acc, &wv) in o.iter_mut().zip(wrow) {
                            *acc += v * wv;
                        }
                    }
                }
            }
        }
    }
    Tensor::new(vec![h, w, cout], out)
}

fn conv_kernel_dims(weight: &Tensor, cin: usize) -> Result<(usize, usize)> {
    match weight.shape()[..] {
        [k, k2, c, cout] if k == k2 && k % 2 == 1 && c == cin => Ok((k, cout)),
        _ => Err(mismatch(format!(
            "conv kernel shape {:?} incompatible with {cin} input channels",
            weight.shape()
        ))),
    }
}

/// Returns `(grad_input, grad_weight, grad_bias)`. The input gradient is only
/// computed when requested. Output positions with an all-zero gradient are
/// skipped, which after max pooling is most of them.
pub fn conv2d_backward(
    input: &Tensor,
    weight: &Tensor,
    grad_out: &Tensor,
    want_input_grad: bool,
) -> Result<(Option<Tensor>, Tensor, Tensor)> {
    let (h, w, cin) = input.hwc()?;
    let (k, cout) = conv_kernel_dims(weight, cin)?;
    if grad_out.shape() != [h, w, cout] {
        return Err(mismatch(format!(
            "conv output gradient shape {:?}, expected [{h}, {w}, {cout}]",
            grad_out.shape()
        )));
    }
    let pad = k / 2;
    let x = input.data();
    let wt = weight.data();
    let g = grad_out.data();
    let mut gw = vec![0.0; wt.len()];
    let mut gb = vec![0.0; cout];
    let mut gx = if want_input_grad {
        vec![0.0; x.len()]
    } else {
        Vec::new()
    };
    for y in 0..h {
        for xo in 0..w {
            let go = &g[(y * w + xo) * cout..][..cout];
            if go.iter().all(|&v| v == 0.0) {
                continue;
            }
            for (acc, &v) in gb.iter_mut().zip(go) {
                *acc += v;
            }
            for ky in 0..k {
                let Some(iy) = (y + ky).checked_sub(pad).filter(|&v| v < h) else {
                    continue;
                };
                for kx in 0..k {
                    let Some(ix) = (xo + kx).checked_sub(pad).filter(|&v| v < w) else {
                        continue;
                    };
                    let base = (iy * w + ix) * cin;
                    let wofs = (ky * k + kx) * cin * cout;
                    for ci in 0..cin {
                        let v = x[base + ci];
                        let row = wofs + ci * cout;
                        let gw_row = &mut gw[row..][..cout];
                        for (acc, &gv) in gw_row.iter_mut().zip(go) {
                            *acc += v * gv;
                        }
                        if want_input_grad {
                            let wrow = &wt[row..][..cout];
                            gx[base + ci] += wrow.iter().zip(go).map(|(a, b)| a * b).sum::<f64>();
                        }
                    }
                }
            }
        }
    }
    let gx = if want_input_grad {
        Some(Tensor::new(input.shape().to_vec(), gx)?)
    } else {
        None
    };
    Ok((
        gx,
        Tensor::new(weight.shape().to_vec(), gw)?,
        Tensor::new(vec![cout], gb)?,
    ))
}

pub fn relu(x: &Tensor) -> Tensor {
    let data = x.data().iter().map(|&v| v.max(0.0)).collect();
    Tensor::new(x.shape().to_vec(), data).expect("same shape")
}

/// Gradient through ReLU given the forward input.
pub fn relu_backward(input: &Tensor, grad_out: &Tensor) -> Tensor {
    let data = input
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(input.shape().to_vec(), data).expect("same shape")
}

/// 2x2 max pooling with stride 2; odd trailing rows/columns are dropped.
/// Returns the pooled map and, per output element, the flat index of the
/// winning input element (first maximum in row-major window order).
pub fn maxpool2x2(input: &Tensor) -> Result<(Tensor, Vec<usize>)> {
    let (h, w, c) = input.hwc()?;
    let (oh, ow) = (h / 2, w / 2);
    if oh == 0 || ow == 0 {
        return Err(mismatch(format!("cannot pool a {h}x{w} map")));
    }
    let x = input.data();
    let mut out = vec![0.0; oh * ow * c];
    let mut arg = vec![0usize; oh * ow * c];
    for y in 0..oh {
        for xo in 0..ow {
            for ch in 0..c {
                let mut best = usize::MAX;
                for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let idx = ((2 * y + dy) * w + (2 * xo + dx)) * c + ch;
                    if best == usize::MAX || x[idx] > x[best] {
                        best = idx;
                    }
                }
                let o = (y * ow + xo) * c + ch;
                out[o] = x[best];
                arg[o] = best;
            }
        }
    }
    Ok((Tensor::new(vec![oh, ow, c], out)?, arg))
}

pub fn maxpool2x2_backward(input_shape: &[usize], argmax: &[usize], grad_out: &Tensor) -> Tensor {
    let mut gx = Tensor::zeros(input_shape);
    let data = gx.data_mut();
    for (&src, &g) in argmax.iter().zip(grad_out.data()) {
        data[src] += g;
    }
    gx
}

/// Per-channel spatial mean: `z_c = (1 / (H W)) sum_{i,j} x(i, j, c)`.
pub fn global_avg_pool(input: &Tensor) -> Result<Tensor> {
    let (h, w, c) = input.hwc()?;
    let mut z = vec![0.0; c];
    for px in input.data().chunks(c) {
        for (acc, &v) in z.iter_mut().zip(px) {
            *acc += v;
        }
    }
    let inv = 1.0 / (h * w) as f64;
    z.iter_mut().for_each(|v| *v *= inv);
    Ok(Tensor::from_vec(z))
}

pub fn global_avg_pool_backward(input_shape: &[usize], grad_out: &Tensor) -> Result<Tensor> {
    let [h, w, c] = input_shape[..] else {
        return Err(mismatch(format!("expected (H, W, C), got {input_shape:?}")));
    };
    if grad_out.len() != c {
        return Err(mismatch(format!(
            "pool gradient has {} entries, expected {c}",
            grad_out.len()
        )));
    }
    let inv = 1.0 / (h * w) as f64;
    let mut gx = Tensor::zeros(input_shape);
    for px in gx.data_mut().chunks_mut(c) {
        for (dst, &g) in px.iter_mut().zip(grad_out.data()) {
            *dst = g * inv;
        }
    }
    Ok(gx)
}

/// `y = W x + b` on the flattened input.
pub fn dense(input: &Tensor, weight: &Tensor, bias: &Tensor) -> Result<Tensor> {
    let [out_dim, in_dim] = weight.shape()[..] else {
        return Err(mismatch(format!("dense weight shape {:?}", weight.shape())));
    };
    if input.len() != in_dim || bias.shape() != [out_dim] {
        return Err(mismatch(format!(
            "dense layer {out_dim}x{in_dim} applied to {} inputs with bias {:?}",
            input.len(),
            bias.shape()
        )));
    }
    let x = input.data();
    let y = weight
        .data()
        .chunks(in_dim)
        .zip(bias.data())
        .map(|(row, &b)| b + row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
        .collect();
    Ok(Tensor::from_vec(y))
}

/// Returns `(grad_input, grad_weight, grad_bias)`; `grad_input` keeps the
/// input's shape.
pub fn dense_backward(
    input: &Tensor,
    weight: &Tensor,
    grad_out: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let [out_dim, in_dim] = weight.shape()[..] else {
        return Err(mismatch(format!("dense weight shape {:?}", weight.shape())));
    };
    if input.len() != in_dim || grad_out.len() != out_dim {
        return Err(mismatch("dense backward shapes disagree".into()));
    }
    let x = input.data();
    let mut gx = vec![0.0; in_dim];
    let mut gw = vec![0.0; out_dim * in_dim];
    for ((row, gw_row), &g) in weight
        .data()
        .chunks(in_dim)
        .zip(gw.chunks_mut(in_dim))
        .zip(grad_out.data())
    {
        if g == 0.0 {
            continue;
        }
        for ((dst, &xv), (gxv, &wv)) in gw_row.iter_mut().zip(x).zip(gx.iter_mut().zip(row)) {
            *dst = g * xv;
            *gxv += g * wv;
        }
    }
    Ok((
        Tensor::new(input.shape().to_vec(), gx)?,
        Tensor::new(vec![out_dim, in_dim], gw)?,
        Tensor::from_vec(grad_out.data().to_vec()),
    ))
}

pub fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Cross-entropy of the softmax of `logits` against `label`, with its
/// gradient `softmax - onehot`.
pub fn softmax_cross_entropy(logits: &Tensor, label: usize) -> Result<(f64, Tensor)> {
    if label >= logits.len() {
        return Err(mismatch(format!(
            "label {label} out of range for {} logits",
            logits.len()
        )));
    }
    let max = logits
        .data()
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let log_total = logits
        .data()
        .iter()
        .map(|&l| (l - max).exp())
        .sum::<f64>()
        .ln();
    let loss = -(logits.data()[label] - max - log_total);
    let mut grad = softmax(logits.data());
    grad[label] -= 1.0;
    Ok((loss, Tensor::from_vec(grad)))
}

/// `Psi = a (+) b` along the channel axis.
pub fn concat_channels(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (h, w, c1) = a.hwc()?;
    let (h2, w2, c2) = b.hwc()?;
    if (h, w) != (h2, w2) {
        return Err(mismatch(format!(
            "cannot concatenate {h}x{w} with {h2}x{w2} feature maps"
        )));
    }
    let mut out = Vec::with_capacity(h * w * (c1 + c2));
    for (pa, pb) in a.data().chunks(c1).zip(b.data().chunks(c2)) {
        out.extend_from_slice(pa);
        out.extend_from_slice(pb);
    }
    Tensor::new(vec![h, w, c1 + c2], out)
}

/// Splits a fused gradient back into the first `c1` channels and the rest.
pub fn concat_channels_backward(grad: &Tensor, c1: usize) -> Result<(Tensor, Tensor)> {
    let (h, w, c) = grad.hwc()?;
    if c1 > c {
        return Err(mismatch(format!("split at {c1} of {c} channels")));
    }
    let c2 = c - c1;
    let mut ga = Vec::with_capacity(h * w * c1);
    let mut gb = Vec::with_capacity(h * w * c2);
    for px in grad.data().chunks(c) {
        ga.extend_from_slice(&px[..c1]);
        gb.extend_from_slice(&px[c1..]);
    }
    Ok((
        Tensor::new(vec![h, w, c1], ga)?,
        Tensor::new(vec![h, w, c2], gb)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_1x1_conv() {
        let x = Tensor::new(vec![2, 3, 2], (0..12).map(f64::from).collect()).unwrap();
        let w = Tensor::new(vec![1, 1, 2, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let y = conv2d_forward(&x, &w, &Tensor::zeros(&[2])).unwrap();
        assert_eq!(y, x);
    }

    #[test]
    fn conv_same_padding_sums_neighbourhood() {
        let x = Tensor::filled(&[3, 3, 1], 1.0);
        let w = Tensor::filled(&[3, 3, 1, 1], 1.0);
        let y = conv2d_forward(&x, &w, &Tensor::from_vec(vec![0.5])).unwrap();
        assert_eq!(y.data()[4], 9.5);
        assert_eq!(y.data()[0], 4.5);
    }

    #[test]
    fn conv_rejects_bad_kernels() {
        let x = Tensor::zeros(&[3, 3, 2]);
        assert!(conv2d_forward(&x, &Tensor::zeros(&[2, 2, 2, 1]), &Tensor::zeros(&[1])).is_err());
        assert!(conv2d_forward(&x, &Tensor::zeros(&[3, 3, 1, 1]), &Tensor::zeros(&[1])).is_err());
        assert!(conv2d_forward(&x, &Tensor::zeros(&[3, 3, 2, 1]), &Tensor::zeros(&[2])).is_err());
    }

    #[test]
    fn gap_of_constant_channels() {
        let mut x = Tensor::zeros(&[4, 5, 3]);
        for px in x.data_mut().chunks_mut(3) {
            px.copy_from_slice(&[1.5, -2.0, 0.25]);
        }
        assert_eq!(global_avg_pool(&x).unwrap().data(), &[1.5, -2.0, 0.25]);
    }

    #[test]
    fn maxpool_picks_window_max() {
        let x = Tensor::new(vec![2, 2, 1], vec![1.0, 4.0, 3.0, 2.0]).unwrap();
        let (y, arg) = maxpool2x2(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        assert_eq!(arg, vec![1]);
        let g = maxpool2x2_backward(x.shape(), &arg, &Tensor::from_vec(vec![2.0]));
        assert_eq!(g.data(), &[0.0, 2.0, 0.0, 0.0]);
    }

    #[test]
    fn dense_identity_and_zero() {
        let x = Tensor::from_vec(vec![0.3, -1.2, 2.0]);
        let mut eye = Tensor::zeros(&[3, 3]);
        for i in 0..3 {
            eye.data_mut()[i * 3 + i] = 1.0;
        }
        assert_eq!(dense(&x, &eye, &Tensor::zeros(&[3])).unwrap(), x);
        let zero = dense(&x, &Tensor::zeros(&[2, 3]), &Tensor::zeros(&[2])).unwrap();
        assert_eq!(zero.data(), &[0.0, 0.0]);
        assert!(dense(&x, &Tensor::zeros(&[2, 4]), &Tensor::zeros(&[2])).is_err());
    }

    #[test]
    fn softmax_normalizes() {
        let p = softmax(&[1000.0, 999.0, -5.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let (loss, grad) = softmax_cross_entropy(&Tensor::from_vec(vec![0.0, 0.0]), 1).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert_eq!(grad.data(), &[0.5, -0.5]);
        assert!(softmax_cross_entropy(&Tensor::from_vec(vec![0.0]), 1).is_err());
    }

    #[test]
    fn concat_layout_and_split() {
        let a = Tensor::new(vec![1, 2, 1], vec![1.0, 2.0]).unwrap();
        let b = Tensor::new(vec![1, 2, 2], vec![3.0, 4.0, 5.0, 6.0]).unwrap();
        let psi = concat_channels(&a, &b).unwrap();
        assert_eq!(psi.shape(), &[1, 2, 3]);
        assert_eq!(psi.data(), &[1.0, 3.0, 4.0, 2.0, 5.0, 6.0]);
        let (ga, gb) = concat_channels_backward(&psi, 1).unwrap();
        assert_eq!((ga, gb), (a, b));
        assert!(concat_channels(&Tensor::zeros(&[2, 2, 1]), &Tensor::zeros(&[2, 3, 1])).is_err());
    }
}
