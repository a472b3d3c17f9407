//! Squeeze-and-excitation channel attention:
//! `z = GAP(Psi)`, `s = sigmoid(W2 relu(W1 z))`, `Phi(i, j, c) = Psi(i, j, c) s(c)`.
//! There are no bias terms.

use super::layers::{global_avg_pool, global_avg_pool_backward, sigmoid};
use super::Tensor;
use crate::error::{Error, Result};

/// `w1` is `(C/r, C)`, `w2` is `(C, C/r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SEParams {
    pub w1: Tensor,
    pub w2: Tensor,
    pub reduction: usize,
}

impl SEParams {
    pub fn zeros(channels: usize, reduction: usize) -> Result<Self> {
        let hidden = hidden_width(channels, reduction)?;
        Ok(Self {
            w1: Tensor::zeros(&[hidden, channels]),
            w2: Tensor::zeros(&[channels, hidden]),
            reduction,
        })
    }

    pub fn channels(&self) -> usize {
        self.w1.shape()[1]
    }

    pub fn validate(&self, channels: usize) -> Result<()> {
        let hidden = hidden_width(channels, self.reduction)?;
        if self.w1.shape() != [hidden, channels] || self.w2.shape() != [channels, hidden] {
            return Err(Error::ShapeMismatch(format!(
                "SE weights {:?}/{:?} do not fit {channels} channels with reduction {}",
                self.w1.shape(),
                self.w2.shape(),
                self.reduction
            )));
        }
        Ok(())
    }
}

pub fn hidden_width(channels: usize, reduction: usize) -> Result<usize> {
    if reduction == 0 || !channels.is_multiple_of(reduction) || channels < reduction {
        return Err(Error::ShapeMismatch(format!(
            "reduction ratio {reduction} must divide {channels} channels"
        )));
    }
    Ok(channels / reduction)
}

/// Intermediate values needed by the backward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct SECache {
    pub z: Vec<f64>,
    pub hidden: Vec<f64>,
    pub s: Vec<f64>,
}

fn matvec(m: &Tensor, v: &[f64]) -> Vec<f64> {
    let cols = m.shape()[1];
    m.data()
        .chunks(cols)
        .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// The excitation weights `s` for a pooled descriptor `z`.
pub fn excitation(z: &[f64], p: &SEParams) -> (Vec<f64>, Vec<f64>) {
    let hidden = matvec(&p.w1, z);
    let activated: Vec<f64> = hidden.iter().map(|&h| h.max(0.0)).collect();
    let s = matvec(&p.w2, &activated).into_iter().map(sigmoid).collect();
    (hidden, s)
}

/// Multiplies every channel `c` of `psi` by `s[c]`.
pub fn scale_channels(psi: &Tensor, s: &[f64]) -> Result<Tensor> {
    let (_, _, c) = psi.hwc()?;
    if s.len() != c {
        return Err(Error::ShapeMismatch(format!(
            "{} channel weights for {c} channels",
            s.len()
        )));
    }
    let mut out = psi.clone();
    for px in out.data_mut().chunks_mut(c) {
        for (v, &w) in px.iter_mut().zip(s) {
            *v *= w;
        }
    }
    Ok(out)
}

pub fn se_forward(psi: &Tensor, p: &SEParams) -> Result<(Tensor, SECache)> {
    let (_, _, c) = psi.hwc()?;
    p.validate(c)?;
    let z = global_avg_pool(psi)?.into_data();
    let (hidden, s) = excitation(&z, p);
    let phi = scale_channels(psi, &s)?;
    Ok((phi, SECache { z, hidden, s }))
}

/// Returns `(grad_psi, grad_w1, grad_w2)`.
pub fn se_backward(
    psi: &Tensor,
    p: &SEParams,
    cache: &SECache,
    grad_phi: &Tensor,
) -> Result<(Tensor, Tensor, Tensor)> {
    let (_, _, c) = psi.hwc()?;
    if grad_phi.shape() != psi.shape() {
        return Err(Error::ShapeMismatch("SE output gradient shape".into()));
    }
    let hid = p.w1.shape()[0];

    // direct path and ds_c = sum_ij G(i,j,c) Psi(i,j,c)
    let mut grad_psi = scale_channels(grad_phi, &cache.s)?;
    let mut ds = vec![0.0; c];
    for (gp, xp) in grad_phi.data().chunks(c).zip(psi.data().chunks(c)) {
        for ((acc, g), x) in ds.iter_mut().zip(gp).zip(xp) {
            *acc += g * x;
        }
    }
    let du: Vec<f64> = ds
        .iter()
        .zip(&cache.s)
        .map(|(d, s)| d * s * (1.0 - s))
        .collect();
    let activated: Vec<f64> = cache.hidden.iter().map(|&h| h.max(0.0)).collect();

    let mut gw2 = vec![0.0; c * hid];
    let mut da = vec![0.0; hid];
    for (ci, &g) in du.iter().enumerate() {
        let row = &p.w2.data()[ci * hid..][..hid];
        for j in 0..hid {
            gw2[ci * hid + j] = g * activated[j];
            da[j] += g * row[j];
        }
    }
    let dh: Vec<f64> = da
        .iter()
        .zip(&cache.hidden)
        .map(|(&d, &h)| if h > 0.0 { d } else { 0.0 })
        .collect();
    let mut gw1 = vec![0.0; hid * c];
    let mut dz = vec![0.0; c];
    for (j, &g) in dh.iter().enumerate() {
        let row = &p.w1.data()[j * c..][..c];
        for ci in 0..c {
            gw1[j * c + ci] = g * cache.z[ci];
            dz[ci] += g * row[ci];
        }
    }
    let via_pool = global_avg_pool_backward(psi.shape(), &Tensor::from_vec(dz))?;
    grad_psi.add_assign(&via_pool);
    Ok((
        grad_psi,
        Tensor::new(vec![hid, c], gw1)?,
        Tensor::new(vec![c, hid], gw2)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn psi() -> Tensor {
        Tensor::new(
            vec![2, 2, 4],
            (0..16).map(|i| i as f64 * 0.3 - 2.0).collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_weights_halve_the_input() {
        let p = SEParams::zeros(4, 2).unwrap();
        let (phi, cache) = se_forward(&psi(), &p).unwrap();
        assert!(cache.s.iter().all(|&s| s == 0.5));
        for (a, b) in phi.data().iter().zip(psi().data()) {
            assert_eq!(*a, 0.5 * b);
        }
    }

    #[test]
    fn unit_excitation_is_identity() {
        let x = psi();
        assert_eq!(scale_channels(&x, &[1.0; 4]).unwrap(), x);
    }

    #[test]
    fn squeeze_of_constant_channels() {
        let mut x = Tensor::zeros(&[3, 3, 4]);
        for px in x.data_mut().chunks_mut(4) {
            px.copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        }
        let (_, cache) = se_forward(&x, &SEParams::zeros(4, 4).unwrap()).unwrap();
        assert_eq!(cache.z, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn reduction_must_divide_channels() {
        assert!(SEParams::zeros(6, 4).is_err());
        assert!(SEParams::zeros(4, 0).is_err());
        let p = SEParams::zeros(8, 4).unwrap();
        assert!(se_forward(&psi(), &p).is_err());
    }
}
