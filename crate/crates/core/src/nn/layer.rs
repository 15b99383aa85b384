//! Layer kinds with explicit forward caches and hand-written backward passes.
//!
//! Conventions: activations are `[batch, ...]`. `Linear` weights are
//! `[out, in]`; `Conv2d` weights are `[cout, cin, k, k]` with 'valid' padding
//! and stride 1. `MaxPool2` uses a 2x2 window with stride 2, flooring odd
//! spatial dims.

use rand::Rng;
use rand_distr::{Distribution, Uniform};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Linear {
        input: usize,
        output: usize,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
    },
    Relu,
    MaxPool2,
    Flatten,
}

impl LayerKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            LayerKind::Linear { input, output } if input == 0 || output == 0 => {
                Err(Error::config("Linear dims must be positive"))
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } if in_channels == 0 || out_channels == 0 || kernel == 0 => {
                Err(Error::config("Conv2d channels and kernel must be >= 1"))
            }
            _ => Ok(()),
        }
    }

    fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerKind::Linear { input, output } => vec![vec![output, input], vec![output]],
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => vec![
                vec![out_channels, in_channels, kernel, kernel],
                vec![out_channels],
            ],
            _ => Vec::new(),
        }
    }

    fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Linear { input, .. } => input,
            LayerKind::Conv2d {
                in_channels,
                kernel,
                ..
            } => in_channels * kernel * kernel,
            _ => 0,
        }
    }
}

/// State saved by [`Layer::forward`] for the matching backward call.
#[derive(Debug, Clone, Default)]
pub struct ForwardCache {
    input: Option<Tensor>,
    output_shape: Vec<usize>,
    argmax: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    kind: LayerKind,
    params: Vec<Tensor>,
    grads: Vec<Tensor>,
}

impl Layer {
    /// Weights ~ Uniform(-s, s) with s = sqrt(1 / fan_in); biases zero.
    pub fn new<R: Rng + ?Sized>(kind: LayerKind, rng: &mut R) -> Result<Self> {
        kind.validate()?;
        let shapes = kind.param_shapes();
        let mut params: Vec<Tensor> = shapes.iter().map(|s| Tensor::zeros(s)).collect();
        if let Some(weight) = params.first_mut() {
            let s = (1.0 / kind.fan_in() as f64).sqrt();
            let dist = Uniform::new_inclusive(-s, s).expect("finite bounds");
            for w in weight.data_mut() {
                *w = dist.sample(rng);
            }
        }
        let grads = shapes.iter().map(|s| Tensor::zeros(s)).collect();
        Ok(Self {
            kind,
            params,
            grads,
        })
    }

    pub fn with_params(kind: LayerKind, params: Vec<Tensor>) -> Result<Self> {
        kind.validate()?;
        let shapes = kind.param_shapes();
        if shapes.len() != params.len()
            || shapes.iter().zip(&params).any(|(s, p)| s.as_slice() != p.shape())
        {
            return Err(Error::config(format!(
                "{kind:?} expects params of shapes {shapes:?}"
            )));
        }
        let grads = shapes.iter().map(|s| Tensor::zeros(s)).collect();
        Ok(Self {
            kind,
            params,
            grads,
        })
    }

    pub fn kind(&self) -> LayerKind {
        self.kind
    }

    pub fn params(&self) -> &[Tensor] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [Tensor] {
        &mut self.params
    }

    pub fn grads(&self) -> &[Tensor] {
        &self.grads
    }

    pub fn num_params(&self) -> usize {
        self.params.iter().map(Tensor::len).sum()
    }

    pub fn zero_grads(&mut self) {
        for g in &mut self.grads {
            g.data_mut().fill(0.0);
        }
    }

    /// Pairs every parameter tensor with its accumulated gradient.
    pub fn param_grad_pairs(&mut self) -> impl Iterator<Item = (&mut Tensor, &Tensor)> {
        self.params.iter_mut().zip(self.grads.iter())
    }

    pub fn forward(&self, input: &Tensor, cache: &mut ForwardCache) -> Result<Tensor> {
        self.forward_impl(input, Some(cache))
    }

    /// Forward pass without keeping anything for backward.
    pub fn infer(&self, input: &Tensor) -> Result<Tensor> {
        self.forward_impl(input, None)
    }

    fn forward_impl(&self, input: &Tensor, cache: Option<&mut ForwardCache>) -> Result<Tensor> {
        let mut argmax = Vec::new();
        let out = match self.kind {
            LayerKind::Linear { input: n_in, output } => {
                self.linear_forward(input, n_in, output)?
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => self.conv_forward(input, in_channels, out_channels, kernel)?,
            LayerKind::Relu => {
                let data = input.data().iter().map(|&v| v.max(0.0)).collect();
                Tensor::new(input.shape().to_vec(), data)?
            }
            LayerKind::MaxPool2 => maxpool_forward(input, cache.is_some().then_some(&mut argmax))?,
            LayerKind::Flatten => {
                if input.shape().is_empty() {
                    return Err(Error::config("Flatten needs a batch dimension"));
                }
                input.clone().reshape(vec![input.rows(), input.row_len()])?
            }
        };
        out.ensure_finite(&format!("{:?} forward", self.kind))?;
        if let Some(cache) = cache {
            cache.input = Some(input.clone());
            cache.output_shape = out.shape().to_vec();
            cache.argmax = argmax;
        }
        Ok(out)
    }

    /// Returns the gradient w.r.t. the layer input and accumulates parameter
    /// gradients into `self.grads`.
    pub fn backward(&mut self, grad_out: &Tensor, cache: &ForwardCache) -> Result<Tensor> {
        let input = cache
            .input
            .as_ref()
            .ok_or_else(|| Error::Usage(format!("{:?} backward without forward cache", self.kind)))?;
        if grad_out.shape() != cache.output_shape.as_slice() {
            return Err(Error::Usage(format!(
                "{:?} backward: grad shape {:?} does not match forward output {:?}",
                self.kind,
                grad_out.shape(),
                cache.output_shape
            )));
        }
        let grad_in = match self.kind {
            LayerKind::Linear { input: n_in, output } => {
                self.linear_backward(input, grad_out, n_in, output)?
            }
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
            } => self.conv_backward(input, grad_out, in_channels, out_channels, kernel)?,
            LayerKind::Relu => {
                let data = input
                    .data()
                    .iter()
                    .zip(grad_out.data())
                    .map(|(&x, &g)| if x > 0.0 { g } else { 0.0 })
                    .collect();
                Tensor::new(input.shape().to_vec(), data)?
            }
            LayerKind::MaxPool2 => {
                let mut grad = Tensor::zeros(input.shape());
                let gd = grad.data_mut();
                for (&src, &g) in cache.argmax.iter().zip(grad_out.data()) {
                    gd[src] += g;
                }
                grad
            }
            LayerKind::Flatten => grad_out.clone().reshape(input.shape().to_vec())?,
        };
        grad_in.ensure_finite(&format!("{:?} backward", self.kind))?;
        Ok(grad_in)
    }

    fn linear_forward(&self, input: &Tensor, n_in: usize, n_out: usize) -> Result<Tensor> {
        if input.shape().len() != 2 || input.shape()[1] != n_in {
            return Err(Error::config(format!(
                "Linear({n_in},{n_out}) got input {:?}",
                input.shape()
            )));
        }
        let w = self.params[0].data();
        let b = self.params[1].data();
        let batch = input.rows();
        let mut out = vec![0.0; batch * n_out];
        for (x, y) in input.data().chunks_exact(n_in).zip(out.chunks_exact_mut(n_out)) {
            for (o, yo) in y.iter_mut().enumerate() {
                let row = &w[o * n_in..(o + 1) * n_in];
                *yo = b[o] + row.iter().zip(x).map(|(a, c)| a * c).sum::<f64>();
            }
        }
        Tensor::new(vec![batch, n_out], out)
    }

    fn linear_backward(
        &mut self,
        input: &Tensor,
        grad_out: &Tensor,
        n_in: usize,
        n_out: usize,
    ) -> Result<Tensor> {
        let batch = input.rows();
        let mut grad_in = vec![0.0; batch * n_in];
        let (params, grads) = (&self.params, &mut self.grads);
        let w = params[0].data();
        let (gw, gb) = grads.split_at_mut(1);
        let gw = gw[0].data_mut();
        let gb = gb[0].data_mut();
        for ((x, g), gi) in input
            .data()
            .chunks_exact(n_in)
            .zip(grad_out.data().chunks_exact(n_out))
            .zip(grad_in.chunks_exact_mut(n_in))
        {
            for (o, &go) in g.iter().enumerate() {
                if go == 0.0 {
                    continue;
                }
                gb[o] += go;
                let wrow = &w[o * n_in..(o + 1) * n_in];
                let gwrow = &mut gw[o * n_in..(o + 1) * n_in];
                for i in 0..n_in {
                    gwrow[i] += go * x[i];
                    gi[i] += go * wrow[i];
                }
            }
        }
        Tensor::new(vec![batch, n_in], grad_in)
    }

    fn conv_dims(
        input: &Tensor,
        cin: usize,
        k: usize,
    ) -> Result<(usize, usize, usize, usize, usize)> {
        let s = input.shape();
        if s.len() != 4 || s[1] != cin || s[2] < k || s[3] < k {
            return Err(Error::config(format!(
                "Conv2d(cin={cin},k={k}) got input {s:?}"
            )));
        }
        Ok((s[0], s[2], s[3], s[2] - k + 1, s[3] - k + 1))
    }

    fn conv_forward(&self, input: &Tensor, cin: usize, cout: usize, k: usize) -> Result<Tensor> {
        let (batch, h, w, oh, ow) = Self::conv_dims(input, cin, k)?;
        let wt = self.params[0].data();
        let bias = self.params[1].data();
        let x = input.data();
        let mut out = vec![0.0; batch * cout * oh * ow];
        for n in 0..batch {
            for co in 0..cout {
                let obase = ((n * cout) + co) * oh * ow;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let mut acc = bias[co];
                        for ci in 0..cin {
                            let xbase = ((n * cin) + ci) * h * w;
                            let wbase = ((co * cin) + ci) * k * k;
                            for ky in 0..k {
                                let xrow = xbase + (oy + ky) * w + ox;
                                let wrow = wbase + ky * k;
                                for kx in 0..k {
                                    acc += x[xrow + kx] * wt[wrow + kx];
                                }
                            }
                        }
                        out[obase + oy * ow + ox] = acc;
                    }
                }
            }
        }
        Tensor::new(vec![batch, cout, oh, ow], out)
    }

    fn conv_backward(
        &mut self,
        input: &Tensor,
        grad_out: &Tensor,
        cin: usize,
        cout: usize,
        k: usize,
    ) -> Result<Tensor> {
        let (batch, h, w, oh, ow) = Self::conv_dims(input, cin, k)?;
        let x = input.data();
        let g = grad_out.data();
        let (params, grads) = (&self.params, &mut self.grads);
        let wt = params[0].data();
        let (gw, gb) = grads.split_at_mut(1);
        let gw = gw[0].data_mut();
        let gb = gb[0].data_mut();
        let mut grad_in = vec![0.0; x.len()];
        for n in 0..batch {
            for co in 0..cout {
                let obase = ((n * cout) + co) * oh * ow;
                for oy in 0..oh {
                    for ox in 0..ow {
                        let go = g[obase + oy * ow + ox];
                        gb[co] += go;
                        for ci in 0..cin {
                            let xbase = ((n * cin) + ci) * h * w;
                            let wbase = ((co * cin) + ci) * k * k;
                            for ky in 0..k {
                                let xrow = xbase + (oy + ky) * w + ox;
                                let wrow = wbase + ky * k;
                                for kx in 0..k {
                                    gw[wrow + kx] += go * x[xrow + kx];
                                    grad_in[xrow + kx] += go * wt[wrow + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
        Tensor::new(input.shape().to_vec(), grad_in)
    }
}

fn maxpool_forward(input: &Tensor, argmax: Option<&mut Vec<usize>>) -> Result<Tensor> {
    let s = input.shape();
    if s.len() != 4 || s[2] < 2 || s[3] < 2 {
        return Err(Error::config(format!("MaxPool2 got input {s:?}")));
    }
    let (batch, ch, h, w) = (s[0], s[1], s[2], s[3]);
    let (oh, ow) = (h / 2, w / 2);
    let x = input.data();
    let mut out = Vec::with_capacity(batch * ch * oh * ow);
    let mut idx = Vec::with_capacity(batch * ch * oh * ow);
    for plane in 0..batch * ch {
        let base = plane * h * w;
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = base + 2 * oy * w + 2 * ox;
                for (dy, dx) in [(0, 1), (1, 0), (1, 1)] {
                    let j = base + (2 * oy + dy) * w + 2 * ox + dx;
                    if x[j] > x[best] {
                        best = j;
                    }
                }
                out.push(x[best]);
                idx.push(best);
            }
        }
    }
    if let Some(a) = argmax {
        *a = idx;
    }
    Tensor::new(vec![batch, ch, oh, ow], out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn t(shape: &[usize], data: &[f64]) -> Tensor {
        Tensor::new(shape.to_vec(), data.to_vec()).unwrap()
    }

    #[test]
    fn linear_identity() {
        let layer = Layer::with_params(
            LayerKind::Linear { input: 2, output: 2 },
            vec![t(&[2, 2], &[1.0, 0.0, 0.0, 1.0]), t(&[2], &[0.0, 0.0])],
        )
        .unwrap();
        let y = layer.infer(&t(&[1, 2], &[3.0, 4.0])).unwrap();
        assert_eq!(y.data(), &[3.0, 4.0]);
    }

    #[test]
    fn relu_forward_and_backward() {
        let mut relu = Layer::new(LayerKind::Relu, &mut stream(0, &[])).unwrap();
        assert_eq!(
            relu.infer(&t(&[1, 3], &[-1.0, 0.0, 2.0])).unwrap().data(),
            &[0.0, 0.0, 2.0]
        );
        let mut cache = ForwardCache::default();
        relu.forward(&t(&[1, 2], &[-1.0, 2.0]), &mut cache).unwrap();
        let g = relu.backward(&t(&[1, 2], &[1.0, 1.0]), &cache).unwrap();
        assert_eq!(g.data(), &[0.0, 1.0]);
    }

    #[test]
    fn conv_all_ones() {
        let layer = Layer::with_params(
            LayerKind::Conv2d {
                in_channels: 1,
                out_channels: 1,
                kernel: 2,
            },
            vec![t(&[1, 1, 2, 2], &[1.0; 4]), t(&[1], &[0.0])],
        )
        .unwrap();
        let y = layer.infer(&t(&[1, 1, 3, 3], &[1.0; 9])).unwrap();
        assert_eq!(y.shape(), &[1, 1, 2, 2]);
        assert_eq!(y.data(), &[4.0; 4]);
    }

    #[test]
    fn linear_scalar_chain_rule() {
        let mut layer = Layer::with_params(
            LayerKind::Linear { input: 1, output: 1 },
            vec![t(&[1, 1], &[2.0]), t(&[1], &[0.0])],
        )
        .unwrap();
        let mut cache = ForwardCache::default();
        layer.forward(&t(&[1, 1], &[3.0]), &mut cache).unwrap();
        let gi = layer.backward(&t(&[1, 1], &[1.0]), &cache).unwrap();
        assert_eq!(gi.data(), &[2.0]);
        assert_eq!(layer.grads()[0].data(), &[3.0]);
        assert_eq!(layer.grads()[1].data(), &[1.0]);
    }

    #[test]
    fn maxpool_halves_and_routes_gradient() {
        let mut pool = Layer::new(LayerKind::MaxPool2, &mut stream(0, &[])).unwrap();
        let x = t(&[1, 1, 2, 3], &[1.0, 5.0, 9.0, 3.0, 2.0, 0.0]);
        let mut cache = ForwardCache::default();
        let y = pool.forward(&x, &mut cache).unwrap();
        assert_eq!(y.shape(), &[1, 1, 1, 1]);
        assert_eq!(y.data(), &[5.0]);
        let g = pool.backward(&t(&[1, 1, 1, 1], &[2.0]), &cache).unwrap();
        assert_eq!(g.data(), &[0.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn shape_mismatch_is_config_error() {
        let layer = Layer::new(LayerKind::Linear { input: 3, output: 2 }, &mut stream(1, &[])).unwrap();
        assert!(matches!(
            layer.infer(&t(&[1, 2], &[0.0, 0.0])),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn backward_without_cache_is_usage_error() {
        let mut layer = Layer::new(LayerKind::Linear { input: 1, output: 1 }, &mut stream(1, &[])).unwrap();
        let err = layer.backward(&t(&[1, 1], &[1.0]), &ForwardCache::default());
        assert!(matches!(err, Err(Error::Usage(_))));
    }

    #[test]
    fn non_finite_output_is_numeric_error() {
        let layer = Layer::with_params(
            LayerKind::Linear { input: 1, output: 1 },
            vec![t(&[1, 1], &[f64::MAX]), t(&[1], &[0.0])],
        )
        .unwrap();
        assert!(matches!(
            layer.infer(&t(&[1, 1], &[10.0])),
            Err(Error::Numeric(_))
        ));
    }

    #[test]
    fn zero_kernel_rejected() {
        let kind = LayerKind::Conv2d {
            in_channels: 1,
            out_channels: 1,
            kernel: 0,
        };
        assert!(Layer::new(kind, &mut stream(0, &[])).is_err());
    }

    #[test]
    fn init_is_bounded_by_fan_in() {
        let layer = Layer::new(LayerKind::Linear { input: 16, output: 8 }, &mut stream(3, &[])).unwrap();
        let s = 0.25;
        assert!(layer.params()[0].data().iter().all(|w| w.abs() <= s));
        assert!(layer.params()[1].data().iter().all(|&b| b == 0.0));
    }
}
