use rand::Rng;

use super::layer::{ForwardCache, Layer, LayerKind};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// An ordered stack of layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Sequential {
    layers: Vec<Layer>,
}

/// One [`ForwardCache`] per layer of the stack that produced it.
#[derive(Debug, Clone, Default)]
pub struct SequentialCache(Vec<ForwardCache>);

impl Sequential {
    pub fn new<R: Rng + ?Sized>(kinds: &[LayerKind], rng: &mut R) -> Result<Self> {
        let layers = kinds
            .iter()
            .map(|&k| Layer::new(k, rng))
            .collect::<Result<_>>()?;
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Self {
        Self { layers }
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn kinds(&self) -> Vec<LayerKind> {
        self.layers.iter().map(Layer::kind).collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Layer::num_params).sum()
    }

    pub fn forward(&self, x: &Tensor, cache: &mut SequentialCache) -> Result<Tensor> {
        cache.0.clear();
        let mut cur = x.clone();
        for layer in &self.layers {
            let mut c = ForwardCache::default();
            cur = layer.forward(&cur, &mut c)?;
            cache.0.push(c);
        }
        Ok(cur)
    }

    pub fn infer(&self, x: &Tensor) -> Result<Tensor> {
        let mut cur = x.clone();
        for layer in &self.layers {
            cur = layer.infer(&cur)?;
        }
        Ok(cur)
    }

    pub fn backward(&mut self, grad_out: &Tensor, cache: &SequentialCache) -> Result<Tensor> {
        if cache.0.len() != self.layers.len() {
            return Err(Error::Usage(format!(
                "cache holds {} layers, stack has {}",
                cache.0.len(),
                self.layers.len()
            )));
        }
        let mut g = grad_out.clone();
        for (layer, c) in self.layers.iter_mut().zip(&cache.0).rev() {
            g = layer.backward(&g, c)?;
        }
        Ok(g)
    }

    pub fn zero_grads(&mut self) {
        self.layers.iter_mut().for_each(Layer::zero_grads);
    }

    pub fn param_grad_pairs(&mut self) -> impl Iterator<Item = (&mut Tensor, &Tensor)> {
        self.layers.iter_mut().flat_map(Layer::param_grad_pairs)
    }

    /// Appends all parameters, layer by layer, to `out`.
    pub fn write_params(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            for p in layer.params() {
                out.extend_from_slice(p.data());
            }
        }
    }

    /// Overwrites parameters from the front of `src`; returns the count consumed.
    pub fn read_params(&mut self, src: &[f64]) -> Result<usize> {
        let need = self.num_params();
        if src.len() < need {
            return Err(Error::Protocol(format!(
                "need {need} parameter values, {} available",
                src.len()
            )));
        }
        let mut off = 0;
        for layer in &mut self.layers {
            for p in layer.params_mut() {
                let n = p.len();
                p.data_mut().copy_from_slice(&src[off..off + n]);
                off += n;
            }
        }
        Ok(off)
    }
}
