//! Central-difference checks for every differentiable operation. Each check
//! builds a random instance from `seed` and returns the largest relative
//! error over all of its inputs.

use rand::Rng;
use tdacnn::nn::layers::*;
use tdacnn::nn::se::{se_backward, se_forward};
use tdacnn::nn::{InputDims, Model, ModelConfig, SEParams, Tensor};

use super::{dot, fd_max_rel_error, random_tensor, rng, with_data};

pub fn conv(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (h, w, cin, cout) = (
        r.gen_range(3..7),
        r.gen_range(3..7),
        r.gen_range(1..4),
        r.gen_range(1..4),
    );
    let k = [1, 3, 5][r.gen_range(0..3)];
    let x = random_tensor(&mut r, &[h, w, cin]);
    let wt = random_tensor(&mut r, &[k, k, cin, cout]);
    let b = random_tensor(&mut r, &[cout]);
    let g = random_tensor(&mut r, &[h, w, cout]);
    let (gx, gw, gb) = conv2d_backward(&x, &wt, &g, true).unwrap();
    let loss = |x: &Tensor, wt: &Tensor, b: &Tensor| dot(&conv2d_forward(x, wt, b).unwrap(), &g);
    [
        fd_max_rel_error(
            |v| loss(&with_data(&x, v), &wt, &b),
            x.data(),
            gx.unwrap().data(),
        ),
        fd_max_rel_error(|v| loss(&x, &with_data(&wt, v), &b), wt.data(), gw.data()),
        fd_max_rel_error(|v| loss(&x, &wt, &with_data(&b, v)), b.data(), gb.data()),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

pub fn dense_layer(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (i, o) = (r.gen_range(1..12), r.gen_range(1..8));
    let x = random_tensor(&mut r, &[i]);
    let wt = random_tensor(&mut r, &[o, i]);
    let b = random_tensor(&mut r, &[o]);
    let g = random_tensor(&mut r, &[o]);
    let (gx, gw, gb) = dense_backward(&x, &wt, &g).unwrap();
    let loss = |x: &Tensor, wt: &Tensor, b: &Tensor| dot(&dense(x, wt, b).unwrap(), &g);
    [
        fd_max_rel_error(|v| loss(&with_data(&x, v), &wt, &b), x.data(), gx.data()),
        fd_max_rel_error(|v| loss(&x, &with_data(&wt, v), &b), wt.data(), gw.data()),
        fd_max_rel_error(|v| loss(&x, &wt, &with_data(&b, v)), b.data(), gb.data()),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Returns the errors of the `(W1, W2, Psi)` gradients separately.
pub fn se(seed: u64) -> [f64; 3] {
    let mut r = rng(seed);
    let reduction = [1, 2, 4][r.gen_range(0..3)];
    let c = reduction * r.gen_range(1..4);
    let (h, w) = (r.gen_range(1..5), r.gen_range(1..5));
    // Post-ReLU features are nonnegative.
    let mut psi = random_tensor(&mut r, &[h, w, c]);
    psi.data_mut().iter_mut().for_each(|v| *v = v.abs());
    let p = SEParams {
        w1: random_tensor(&mut r, &[c / reduction, c]),
        w2: random_tensor(&mut r, &[c, c / reduction]),
        reduction,
    };
    let g = random_tensor(&mut r, &[h, w, c]);
    let (_, cache) = se_forward(&psi, &p).unwrap();
    let (gpsi, gw1, gw2) = se_backward(&psi, &p, &cache, &g).unwrap();
    let loss = |psi: &Tensor, p: &SEParams| dot(&se_forward(psi, p).unwrap().0, &g);
    [
        fd_max_rel_error(
            |v| {
                loss(
                    &psi,
                    &SEParams {
                        w1: with_data(&p.w1, v),
                        ..p.clone()
                    },
                )
            },
            p.w1.data(),
            gw1.data(),
        ),
        fd_max_rel_error(
            |v| {
                loss(
                    &psi,
                    &SEParams {
                        w2: with_data(&p.w2, v),
                        ..p.clone()
                    },
                )
            },
            p.w2.data(),
            gw2.data(),
        ),
        fd_max_rel_error(|v| loss(&with_data(&psi, v), &p), psi.data(), gpsi.data()),
    ]
}

pub fn concat(seed: u64) -> f64 {
    let mut r = rng(seed);
    let (h, w, c1, c2) = (
        r.gen_range(1..5),
        r.gen_range(1..5),
        r.gen_range(1..4),
        r.gen_range(1..4),
    );
    let a = random_tensor(&mut r, &[h, w, c1]);
    let b = random_tensor(&mut r, &[h, w, c2]);
    let g = random_tensor(&mut r, &[h, w, c1 + c2]);
    let (ga, gb) = concat_channels_backward(&g, c1).unwrap();
    let loss = |a: &Tensor, b: &Tensor| dot(&concat_channels(a, b).unwrap(), &g);
    fd_max_rel_error(|v| loss(&with_data(&a, v), &b), a.data(), ga.data()).max(fd_max_rel_error(
        |v| loss(&a, &with_data(&b, v)),
        b.data(),
        gb.data(),
    ))
}

pub fn softmax_ce(seed: u64) -> f64 {
    let mut r = rng(seed);
    let k = r.gen_range(2..7);
    let mut logits = random_tensor(&mut r, &[k]);
    logits.scale(4.0);
    let label = r.gen_range(0..k);
    let (_, g) = softmax_cross_entropy(&logits, label).unwrap();
    fd_max_rel_error(
        |v| {
            softmax_cross_entropy(&with_data(&logits, v), label)
                .unwrap()
                .0
        },
        logits.data(),
        g.data(),
    )
}

pub fn relu_op(seed: u64) -> f64 {
    let mut r = rng(seed);
    let shape = [r.gen_range(1..5), r.gen_range(1..5), r.gen_range(1..4)];
    let x = random_tensor(&mut r, &shape);
    let g = random_tensor(&mut r, x.shape());
    let gx = relu_backward(&x, &g);
    fd_max_rel_error(|v| dot(&relu(&with_data(&x, v)), &g), x.data(), gx.data())
}

pub fn maxpool(seed: u64) -> f64 {
    let mut r = rng(seed);
    let shape = [
        2 * r.gen_range(1..4),
        2 * r.gen_range(1..4),
        r.gen_range(1..4),
    ];
    let x = random_tensor(&mut r, &shape);
    let (y, arg) = maxpool2x2(&x).unwrap();
    let g = random_tensor(&mut r, y.shape());
    let gx = maxpool2x2_backward(x.shape(), &arg, &g);
    fd_max_rel_error(
        |v| dot(&maxpool2x2(&with_data(&x, v)).unwrap().0, &g),
        x.data(),
        gx.data(),
    )
}

pub fn gap(seed: u64) -> f64 {
    let mut r = rng(seed);
    let shape = [r.gen_range(1..5), r.gen_range(1..5), r.gen_range(1..4)];
    let x = random_tensor(&mut r, &shape);
    let g = random_tensor(&mut r, &[x.shape()[2]]);
    let gx = global_avg_pool_backward(x.shape(), &g).unwrap();
    fd_max_rel_error(
        |v| dot(&global_avg_pool(&with_data(&x, v)).unwrap(), &g),
        x.data(),
        gx.data(),
    )
}

/// Every parameter of a small fused model with SE, through the full forward
/// pass and softmax cross-entropy.
pub fn full_model(seed: u64) -> f64 {
    let mut r = rng(seed);
    let cfg = ModelConfig {
        vision_channels: [2, 4],
        topology_channels: [2, 4],
        fc_hidden: 5,
        se_reduction: 2,
        seed,
        ..ModelConfig::default()
    };
    let dims = InputDims {
        image_height: 8,
        image_width: 8,
        pi_resolution: 4,
    };
    let mut model = Model::new(&cfg, dims).unwrap();
    let image = random_tensor(&mut r, &[8, 8, 3]);
    let pi = random_tensor(&mut r, &[4, 4, 3]);
    let label = r.gen_range(0..cfg.num_classes);
    let trace = model.forward(&image, Some(&pi)).unwrap();
    let (_, g) = softmax_cross_entropy(&trace.logits, label).unwrap();
    let grads = model.backward(&trace, &g).unwrap();
    let mut worst = 0.0f64;
    for (i, grad) in grads.iter().enumerate() {
        let original = model.params()[i].value.clone();
        let err = fd_max_rel_error(
            |v| {
                let mut m = model.clone();
                m.params_mut()[i].value = with_data(&original, v);
                let logits = m.forward(&image, Some(&pi)).unwrap().logits;
                softmax_cross_entropy(&logits, label).unwrap().0
            },
            original.data(),
            grad.data(),
        );
        model.params_mut()[i].value = original;
        worst = worst.max(err);
    }
    worst
}
