//! The two-branch classifier: a vision CNN over the image, a topology CNN over
//! the persistence image, channel concatenation, optional SE attention and a
//! fully connected head.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::layers::{
    concat_channels, concat_channels_backward, conv2d_backward, conv2d_forward, dense,
    dense_backward, maxpool2x2, maxpool2x2_backward, relu, relu_backward,
};
use super::se::{hidden_width, se_backward, se_forward, SECache, SEParams};
use super::{Param, Tensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelConfig {
    pub use_pi: bool,
    pub use_se: bool,
    /// Output channels of the two vision conv stages; the second is `C1`.
    pub vision_channels: [usize; 2],
    /// Output channels of the two topology conv stages; the second is `C2`.
    pub topology_channels: [usize; 2],
    pub kernel_size: usize,
    /// Width of the hidden fully connected layer; 0 means a single linear layer.
    pub fc_hidden: usize,
    pub se_reduction: usize,
    pub num_classes: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            use_pi: true,
            use_se: true,
            vision_channels: [4, 8],
            topology_channels: [4, 8],
            kernel_size: 3,
            fc_hidden: 32,
            se_reduction: 4,
            num_classes: 3,
            learning_rate: 0.05,
            batch_size: 32,
            epochs: 50,
            seed: 0,
        }
    }
}

impl ModelConfig {
    /// The three ablation settings as `(use_pi, use_se)`: CNN only, plain
    /// fusion, fusion with attention.
    pub const ABLATION_GROUPS: [(bool, bool); 3] = [(false, false), (true, false), (true, true)];

    pub fn with_flags(&self, use_pi: bool, use_se: bool) -> Self {
        Self {
            use_pi,
            use_se,
            ..self.clone()
        }
    }

    pub fn fused_channels(&self) -> usize {
        self.vision_channels[1]
            + if self.use_pi {
                self.topology_channels[1]
            } else {
                0
            }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.use_se && !self.use_pi {
            return bad("use_se requires use_pi".into());
        }
        if self.vision_channels.contains(&0) || self.topology_channels.contains(&0) {
            return bad("channel widths must be positive".into());
        }
        if self.kernel_size.is_multiple_of(2) {
            return bad(format!("kernel_size must be odd, got {}", self.kernel_size));
        }
        if self.num_classes < 2 {
            return bad(format!("need at least 2 classes, got {}", self.num_classes));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive".into());
        }
        if self.use_se {
            hidden_width(self.fused_channels(), self.se_reduction)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }
}

/// Spatial sizes of the network inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDims {
    pub image_height: usize,
    pub image_width: usize,
    pub pi_resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct BranchIx {
    conv1_w: usize,
    conv1_b: usize,
    conv2_w: usize,
    conv2_b: usize,
    extra_pools: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct Layout {
    dims: InputDims,
    feature_hw: (usize, usize),
    vision: BranchIx,
    topology: Option<BranchIx>,
    se: Option<(usize, usize)>,
    head: Vec<(usize, usize)>,
}

/// Everything the backward pass needs from one forward pass.
#[derive(Debug, Clone)]
pub struct Trace {
    vision: BranchTrace,
    topology: Option<BranchTrace>,
    pub psi: Tensor,
    se: Option<SECache>,
    pub phi: Tensor,
    head: Vec<(Tensor, Tensor)>,
    pub logits: Tensor,
}

#[derive(Debug, Clone)]
struct BranchTrace {
    input: Tensor,
    pre1: Tensor,
    pool1: Vec<usize>,
    pooled1: Tensor,
    pre2: Tensor,
    pools: Vec<(Vec<usize>, Vec<usize>)>,
    output: Tensor,
}

fn pooled(hw: (usize, usize), times: usize) -> (usize, usize) {
    (hw.0 >> times, hw.1 >> times)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    cfg: ModelConfig,
    layout: Layout,
    params: Vec<Param>,
}

impl Model {
    /// Builds the architecture and draws initial weights uniformly from
    /// `[-b, b]`, `b = sqrt(6 / (fan_in + fan_out))`; biases start at zero.
    pub fn new(cfg: &ModelConfig, dims: InputDims) -> Result<Self> {
        cfg.validate()?;
        let image = (dims.image_height, dims.image_width);
        let pi = (dims.pi_resolution, dims.pi_resolution);
        let (mut v_hw, mut t_hw) = (pooled(image, 2), pooled(pi, 2));
        if v_hw.0 == 0 || v_hw.1 == 0 || t_hw.0 == 0 {
            return Err(Error::ShapeMismatch(format!(
                "inputs {dims:?} are too small for two pooling stages"
            )));
        }
        let (mut v_extra, mut t_extra) = (0, 0);
        while v_hw.0 > t_hw.0 && v_hw.1 > t_hw.1 {
            v_extra += 1;
            v_hw = pooled(image, 2 + v_extra);
        }
        while t_hw.0 > v_hw.0 && t_hw.1 > v_hw.1 {
            t_extra += 1;
            t_hw = pooled(pi, 2 + t_extra);
        }
        if v_hw != t_hw {
            return Err(Error::ShapeMismatch(format!(
                "image {image:?} and persistence image {pi:?} cannot be pooled to a common size"
            )));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut params = Vec::new();
        let k = cfg.kernel_size;
        let mut add = |params: &mut Vec<Param>,
                       name: String,
                       shape: &[usize],
                       fans: Option<(usize, usize)>| {
            let mut t = Tensor::zeros(shape);
            if let Some((fan_in, fan_out)) = fans {
                let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                for v in t.data_mut() {
                    *v = rng.gen_range(-bound..=bound);
                }
            }
            params.push(Param::new(name, t));
            params.len() - 1
        };

        let mut branch =
            |params: &mut Vec<Param>, prefix: &str, widths: [usize; 2], extra: usize| {
                let [c1, c2] = widths;
                BranchIx {
                    conv1_w: add(
                        params,
                        format!("{prefix}.conv1.weight"),
                        &[k, k, 3, c1],
                        Some((k * k * 3, k * k * c1)),
                    ),
                    conv1_b: add(params, format!("{prefix}.conv1.bias"), &[c1], None),
                    conv2_w: add(
                        params,
                        format!("{prefix}.conv2.weight"),
                        &[k, k, c1, c2],
                        Some((k * k * c1, k * k * c2)),
                    ),
                    conv2_b: add(params, format!("{prefix}.conv2.bias"), &[c2], None),
                    extra_pools: extra,
                }
            };
        let vision = branch(&mut params, "vision", cfg.vision_channels, v_extra);
        let topology = cfg
            .use_pi
            .then(|| branch(&mut params, "topology", cfg.topology_channels, t_extra));

        let channels = cfg.fused_channels();
        let se = if cfg.use_se {
            let hid = hidden_width(channels, cfg.se_reduction)?;
            Some((
                add(
                    &mut params,
                    "se.w1".into(),
                    &[hid, channels],
                    Some((channels, hid)),
                ),
                add(
                    &mut params,
                    "se.w2".into(),
                    &[channels, hid],
                    Some((hid, channels)),
                ),
            ))
        } else {
            None
        };

        let flat = v_hw.0 * v_hw.1 * channels;
        let mut widths = vec![flat];
        if cfg.fc_hidden > 0 {
            widths.push(cfg.fc_hidden);
        }
        widths.push(cfg.num_classes);
        let head = widths
            .windows(2)
            .enumerate()
            .map(|(i, w)| {
                let (fan_in, fan_out) = (w[0], w[1]);
                (
                    add(
                        &mut params,
                        format!("head.fc{}.weight", i + 1),
                        &[fan_out, fan_in],
                        Some((fan_in, fan_out)),
                    ),
                    add(
                        &mut params,
                        format!("head.fc{}.bias", i + 1),
                        &[fan_out],
                        None,
                    ),
                )
            })
            .collect();

        Ok(Self {
            cfg: cfg.clone(),
            layout: Layout {
                dims,
                feature_hw: v_hw,
                vision,
                topology,
                se,
                head,
            },
            params,
        })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn dims(&self) -> InputDims {
        self.layout.dims
    }

    /// Spatial size shared by both branch outputs.
    pub fn feature_hw(&self) -> (usize, usize) {
        self.layout.feature_hw
    }

    pub fn params(&self) -> &[Param] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Param] {
        &mut self.params
    }

    fn value(&self, ix: usize) -> &Tensor {
        &self.params[ix].value
    }

    /// Replaces every parameter value, matching by name and shape.
    pub fn load_params(&mut self, named: Vec<(String, Tensor)>) -> Result<()> {
        if named.len() != self.params.len() {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint has {} tensors, model expects {}",
                named.len(),
                self.params.len()
            )));
        }
        for (p, (name, t)) in self.params.iter_mut().zip(named) {
            if p.name != name || p.value.shape() != t.shape() {
                return Err(Error::ShapeMismatch(format!(
                    "checkpoint tensor {name} {:?} does not match {} {:?}",
                    t.shape(),
                    p.name,
                    p.value.shape()
                )));
            }
            p.value = t;
        }
        Ok(())
    }

    pub fn se_params(&self) -> Option<SEParams> {
        self.layout.se.map(|(w1, w2)| SEParams {
            w1: self.value(w1).clone(),
            w2: self.value(w2).clone(),
            reduction: self.cfg.se_reduction,
        })
    }

    fn branch_forward(&self, ix: &BranchIx, input: &Tensor) -> Result<BranchTrace> {
        let pre1 = conv2d_forward(input, self.value(ix.conv1_w), self.value(ix.conv1_b))?;
        let (pooled1, pool1) = maxpool2x2(&relu(&pre1))?;
        let pre2 = conv2d_forward(&pooled1, self.value(ix.conv2_w), self.value(ix.conv2_b))?;
        let mut current = relu(&pre2);
        let mut pools = Vec::with_capacity(1 + ix.extra_pools);
        for _ in 0..=ix.extra_pools {
            let shape = current.shape().to_vec();
            let (next, arg) = maxpool2x2(&current)?;
            pools.push((shape, arg));
            current = next;
        }
        Ok(BranchTrace {
            input: input.clone(),
            pre1,
            pool1,
            pooled1,
            pre2,
            pools,
            output: current,
        })
    }

    fn branch_backward(
        &self,
        ix: &BranchIx,
        trace: &BranchTrace,
        grad_out: Tensor,
        grads: &mut [Tensor],
    ) -> Result<()> {
        let mut g = grad_out;
        for (shape, arg) in trace.pools.iter().rev() {
            g = maxpool2x2_backward(shape, arg, &g);
        }
        let g = relu_backward(&trace.pre2, &g);
        let (g1, gw2, gb2) = conv2d_backward(&trace.pooled1, self.value(ix.conv2_w), &g, true)?;
        grads[ix.conv2_w] = gw2;
        grads[ix.conv2_b] = gb2;
        let g = maxpool2x2_backward(trace.pre1.shape(), &trace.pool1, &g1.expect("requested"));
        let g = relu_backward(&trace.pre1, &g);
        let (_, gw1, gb1) = conv2d_backward(&trace.input, self.value(ix.conv1_w), &g, false)?;
        grads[ix.conv1_w] = gw1;
        grads[ix.conv1_b] = gb1;
        Ok(())
    }

    fn check_input(&self, t: &Tensor, h: usize, w: usize, what: &str) -> Result<()> {
        if t.shape() != [h, w, 3] {
            return Err(Error::ShapeMismatch(format!(
                "{what} input has shape {:?}, expected [{h}, {w}, 3]",
                t.shape()
            )));
        }
        Ok(())
    }

    /// `f_vision`: the image branch feature map.
    pub fn cnn_vision_forward(&self, image: &Tensor) -> Result<Tensor> {
        let d = self.layout.dims;
        self.check_input(image, d.image_height, d.image_width, "image")?;
        Ok(self.branch_forward(&self.layout.vision, image)?.output)
    }

    /// `f_topology`: the persistence-image branch feature map, spatially
    /// aligned with `f_vision`.
    pub fn cnn_topology_forward(&self, pi: &Tensor) -> Result<Tensor> {
        let ix = self.layout.topology.as_ref().ok_or_else(|| {
            Error::InvalidConfig("model was built without the topology branch".into())
        })?;
        let r = self.layout.dims.pi_resolution;
        self.check_input(pi, r, r, "persistence image")?;
        Ok(self.branch_forward(ix, pi)?.output)
    }

    pub fn fc_head(&self, phi: &Tensor) -> Result<Tensor> {
        let layers: Vec<(&Tensor, &Tensor)> = self
            .layout
            .head
            .iter()
            .map(|&(w, b)| (self.value(w), self.value(b)))
            .collect();
        fc_head(phi, &layers)
    }

    /// Full forward pass. `pi` is never read when the model has no topology
    /// branch.
    pub fn forward(&self, image: &Tensor, pi: Option<&Tensor>) -> Result<Trace> {
        let d = self.layout.dims;
        self.check_input(image, d.image_height, d.image_width, "image")?;
        let vision = self.branch_forward(&self.layout.vision, image)?;
        let topology = match &self.layout.topology {
            Some(ix) => {
                let pi = pi.ok_or_else(|| {
                    Error::InvalidConfig("model uses persistence images but none was given".into())
                })?;
                self.check_input(pi, d.pi_resolution, d.pi_resolution, "persistence image")?;
                Some(self.branch_forward(ix, pi)?)
            }
            None => None,
        };
        let psi = match &topology {
            Some(t) => concat_channels(&vision.output, &t.output)?,
            None => vision.output.clone(),
        };
        let (phi, se) = match self.se_params() {
            Some(p) => {
                let (phi, cache) = se_forward(&psi, &p)?;
                (phi, Some(cache))
            }
            None => (psi.clone(), None),
        };

        let mut head = Vec::with_capacity(self.layout.head.len());
        let mut x = phi.clone();
        let last = self.layout.head.len() - 1;
        for (i, &(w, b)) in self.layout.head.iter().enumerate() {
            let pre = dense(&x, self.value(w), self.value(b))?;
            let next = if i < last { relu(&pre) } else { pre.clone() };
            head.push((x, pre));
            x = next;
        }
        x.ensure_finite("logits")?;
        Ok(Trace {
            vision,
            topology,
            psi,
            se,
            phi,
            head,
            logits: x,
        })
    }

    /// Gradients of a loss with respect to every parameter, in parameter
    /// order, given its gradient with respect to the logits.
    pub fn backward(&self, trace: &Trace, grad_logits: &Tensor) -> Result<Vec<Tensor>> {
        let mut grads: Vec<Tensor> = self
            .params
            .iter()
            .map(|p| Tensor::zeros(p.value.shape()))
            .collect();
        let mut g = grad_logits.clone();
        let last = self.layout.head.len() - 1;
        for (i, (&(w, b), (input, pre))) in
            self.layout.head.iter().zip(&trace.head).enumerate().rev()
        {
            if i < last {
                g = relu_backward(pre, &g);
            }
            let (gx, gw, gb) = dense_backward(input, self.value(w), &g)?;
            grads[w] = gw;
            grads[b] = gb;
            g = gx;
        }
        let grad_psi = match (&self.layout.se, &trace.se) {
            (Some((w1, w2)), Some(cache)) => {
                let (w1, w2) = (*w1, *w2);
                let p = self.se_params().expect("SE layout present");
                let (gpsi, gw1, gw2) = se_backward(&trace.psi, &p, cache, &g)?;
                grads[w1] = gw1;
                grads[w2] = gw2;
                gpsi
            }
            _ => g,
        };
        match (&self.layout.topology, &trace.topology) {
            (Some(tix), Some(tt)) => {
                let c1 = self.cfg.vision_channels[1];
                let (gv, gt) = concat_channels_backward(&grad_psi, c1)?;
                self.branch_backward(&self.layout.vision, &trace.vision, gv, &mut grads)?;
                self.branch_backward(tix, tt, gt, &mut grads)?;
            }
            _ => self.branch_backward(&self.layout.vision, &trace.vision, grad_psi, &mut grads)?,
        }
        for (p, g) in self.params.iter().zip(&grads) {
            g.ensure_finite(&format!("gradient of {}", p.name))?;
        }
        Ok(grads)
    }

    pub fn predict(&self, image: &Tensor, pi: Option<&Tensor>) -> Result<usize> {
        let trace = self.forward(image, pi)?;
        Ok(argmax(trace.logits.data()))
    }
}

/// Dense layers with ReLU between them (not after the last one).
pub fn fc_head(phi: &Tensor, layers: &[(&Tensor, &Tensor)]) -> Result<Tensor> {
    let mut x = Tensor::from_vec(phi.data().to_vec());
    for (i, (w, b)) in layers.iter().enumerate() {
        x = dense(&x, w, b)?;
        if i + 1 < layers.len() {
            x = relu(&x);
        }
    }
    Ok(x)
}

pub fn argmax(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

/// Plain gradient descent on every parameter: `w <- w - lr * grad`.
pub fn sgd_step(params: &mut [Param], lr: f64) -> Result<()> {
    if !(lr > 0.0 && lr.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "learning rate must be positive, got {lr}"
        )));
    }
    for p in params.iter() {
        p.grad.ensure_finite(&format!("gradient of {}", p.name))?;
    }
    for p in params.iter_mut() {
        for (w, g) in p.value.data_mut().iter_mut().zip(p.grad.data()) {
            *w -= lr * g;
        }
        p.value.ensure_finite(&format!("updated {}", p.name))?;
    }
    Ok(())
}
