//! Learned fusion between a shared and a private branch.
//!
//! The model is the full double-branch topology: a shared encoder and
//! classifier that are aggregated, and a private encoder and classifier kept
//! on the client. Encoder features are mixed by cross-stitch (`CrossStitch`),
//! one symmetric weight pair (`SoftAttention`), or a Gumbel-softmax sampled
//! pair (`HardSelection`); classifier logits are then mixed by a second pair.
//! All mixing weights come from [`softmax_pair`] over raw scalars `psi`,
//! which are trained with the network and averaged by the server.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::{
    gumbel_softmax_pair, pair_sensitivity, softmax_cross_entropy, softmax_rows,
    GumbelDraw, Sequential, SequentialCache,
};
use crate::splitnet::{NetworkSplit, ParamVector};
use crate::tensor::Tensor;

/// Temperature applied to every weight pair unless configured otherwise.
pub const DEFAULT_TEMPERATURE: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FusionMode {
    CrossStitch,
    SoftAttention,
    HardSelection,
}

impl FusionMode {
    pub const ALL: [FusionMode; 3] = [
        FusionMode::CrossStitch,
        FusionMode::SoftAttention,
        FusionMode::HardSelection,
    ];

    pub fn names(self) -> &'static [&'static str] {
        match self {
            FusionMode::CrossStitch => &["alpha00", "alpha01", "alpha10", "alpha11", "beta0", "beta1"],
            _ => &["alpha0", "alpha1", "beta0", "beta1"],
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            FusionMode::CrossStitch => "cs",
            FusionMode::SoftAttention => "sa",
            FusionMode::HardSelection => "hs",
        }
    }

    pub fn model_name(self) -> &'static str {
        match self {
            FusionMode::CrossStitch => "AutoCS",
            FusionMode::SoftAttention => "AutoSA",
            FusionMode::HardSelection => "AutoHS",
        }
    }

    fn beta_offset(self) -> usize {
        self.names().len() - 2
    }
}

impl fmt::Display for FusionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cs" | "autocs" | "cross_stitch" => Ok(FusionMode::CrossStitch),
            "sa" | "autosa" | "soft_attention" => Ok(FusionMode::SoftAttention),
            "hs" | "autohs" | "hard_selection" => Ok(FusionMode::HardSelection),
            other => Err(Error::config(format!("unknown fusion mode {other:?}"))),
        }
    }
}

/// Raw fusion scalars with their accumulated gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct FusionParams {
    mode: FusionMode,
    temperature: f64,
    raw: Tensor,
    grad: Tensor,
}

/// One named coefficient: its raw scalar and its noise-free effective weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficient {
    pub name: &'static str,
    pub raw: f64,
    pub effective: f64,
}

impl FusionParams {
    /// All raw scalars start at zero, i.e. every pair at (0.5, 0.5).
    pub fn new(mode: FusionMode, temperature: f64) -> Result<Self> {
        Self::from_raw(mode, temperature, vec![0.0; mode.names().len()])
    }

    pub fn from_raw(mode: FusionMode, temperature: f64, raw: Vec<f64>) -> Result<Self> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(Error::config(format!("temperature must be positive, got {temperature}")));
        }
        let n = mode.names().len();
        if raw.len() != n {
            return Err(Error::config(format!("{mode} needs {n} raw scalars, got {}", raw.len())));
        }
        Ok(Self {
            mode,
            temperature,
            raw: Tensor::new(vec![n], raw)?,
            grad: Tensor::zeros(&[n]),
        })
    }

    pub fn mode(&self) -> FusionMode {
        self.mode
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn raw(&self) -> &[f64] {
        self.raw.data()
    }

    pub fn raw_mut(&mut self) -> &mut [f64] {
        self.raw.data_mut()
    }

    pub fn grad(&self) -> &[f64] {
        self.grad.data()
    }

    pub fn zero_grad(&mut self) {
        self.grad.data_mut().fill(0.0);
    }

    pub fn param_grad_pair(&mut self) -> (&mut Tensor, &Tensor) {
        (&mut self.raw, &self.grad)
    }

    /// Weights for given Gumbel noise `[g_a0, g_a1, g_b0, g_b1]`; cross-stitch
    /// ignores the noise.
    pub fn weights_with_noise(&self, noise: Option<[f64; 4]>) -> FusionWeights {
        FusionWeights::compute(self, noise)
    }

    /// Noise-free weights, used for evaluation and reporting.
    pub fn expected_weights(&self) -> FusionWeights {
        FusionWeights::compute(self, None)
    }

    /// Weights for one training batch; hard selection draws fresh Gumbel noise.
    pub fn sample_weights<R: Rng + ?Sized>(&self, rng: &mut R) -> FusionWeights {
        match self.mode {
            FusionMode::HardSelection => {
                let r = self.raw.data();
                let a = gumbel_softmax_pair(r[0], r[1], self.temperature, rng);
                let b = gumbel_softmax_pair(r[2], r[3], self.temperature, rng);
                FusionWeights::compute(self, Some([a.g0, a.g1, b.g0, b.g1]))
            }
            _ => self.expected_weights(),
        }
    }

    pub fn coefficients(&self) -> Vec<Coefficient> {
        let w = self.expected_weights();
        let effective: Vec<f64> = match self.mode {
            FusionMode::CrossStitch => vec![
                w.alpha_shared.0,
                w.alpha_shared.1,
                w.alpha_private.0,
                w.alpha_private.1,
                w.beta.0,
                w.beta.1,
            ],
            _ => vec![w.alpha_shared.0, w.alpha_shared.1, w.beta.0, w.beta.1],
        };
        self.mode
            .names()
            .iter()
            .zip(self.raw.data())
            .zip(effective)
            .map(|((&name, &raw), effective)| Coefficient {
                name,
                raw,
                effective,
            })
            .collect()
    }
}

/// Effective mixing weights for one batch.
///
/// `alpha_shared` mixes `(h_s, h_p)` into the shared classifier's input and
/// `alpha_private` into the private classifier's input; outside cross-stitch
/// both are the same pair. `noise` holds the Gumbel draws of hard selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionWeights {
    pub alpha_shared: (f64, f64),
    pub alpha_private: (f64, f64),
    pub beta: (f64, f64),
    pub noise: Option<[f64; 4]>,
}

impl FusionWeights {
    fn compute(psi: &FusionParams, noise: Option<[f64; 4]>) -> Self {
        let r = psi.raw.data();
        let t = psi.temperature;
        let pair = |i: usize, j: usize, gi: f64, gj: f64| {
            let d = GumbelDraw::with_noise(r[i], r[j], t, gi, gj);
            (d.w0, d.w1)
        };
        let g = noise.unwrap_or([0.0; 4]);
        let b = psi.mode.beta_offset();
        match psi.mode {
            FusionMode::CrossStitch => FusionWeights {
                alpha_shared: pair(0, 1, 0.0, 0.0),
                alpha_private: pair(2, 3, 0.0, 0.0),
                beta: pair(b, b + 1, 0.0, 0.0),
                noise: None,
            },
            _ => {
                let a = pair(0, 1, g[0], g[1]);
                FusionWeights {
                    alpha_shared: a,
                    alpha_private: a,
                    beta: pair(b, b + 1, g[2], g[3]),
                    noise,
                }
            }
        }
    }

    pub fn all(&self) -> [f64; 6] {
        [
            self.alpha_shared.0,
            self.alpha_shared.1,
            self.alpha_private.0,
            self.alpha_private.1,
            self.beta.0,
            self.beta.1,
        ]
    }
}

fn check_pair(a: &Tensor, b: &Tensor, what: &str) -> Result<()> {
    if a.same_shape(b) {
        Ok(())
    } else {
        Err(Error::config(format!(
            "{what}: shapes {:?} and {:?} differ",
            a.shape(),
            b.shape()
        )))
    }
}

/// Mixes shared and private features into the two classifier inputs.
pub fn fuse_features(h_s: &Tensor, h_p: &Tensor, w: &FusionWeights) -> Result<(Tensor, Tensor)> {
    check_pair(h_s, h_p, "feature fusion")?;
    let fs = Tensor::lincomb(w.alpha_shared.0, h_s, w.alpha_shared.1, h_p)?;
    let fp = Tensor::lincomb(w.alpha_private.0, h_s, w.alpha_private.1, h_p)?;
    Ok((fs, fp))
}

pub fn fuse_features_cs(h_s: &Tensor, h_p: &Tensor, psi: &FusionParams) -> Result<(Tensor, Tensor)> {
    fuse_features(h_s, h_p, &psi.expected_weights())
}

pub fn fuse_features_sa(h_s: &Tensor, h_p: &Tensor, psi: &FusionParams) -> Result<(Tensor, Tensor)> {
    fuse_features(h_s, h_p, &psi.expected_weights())
}

pub fn fuse_features_hs<R: Rng + ?Sized>(
    h_s: &Tensor,
    h_p: &Tensor,
    psi: &FusionParams,
    rng: &mut R,
) -> Result<(Tensor, Tensor, FusionWeights)> {
    let w = psi.sample_weights(rng);
    let (a, b) = fuse_features(h_s, h_p, &w)?;
    Ok((a, b, w))
}

/// `beta0 * o_s + beta1 * o_p` over unnormalized logits.
pub fn fuse_outputs(o_s: &Tensor, o_p: &Tensor, w: &FusionWeights) -> Result<Tensor> {
    check_pair(o_s, o_p, "output fusion")?;
    Tensor::lincomb(w.beta.0, o_s, w.beta.1, o_p)
}

fn diff_dot(g: &Tensor, a: &Tensor, b: &Tensor) -> f64 {
    g.data()
        .iter()
        .zip(a.data().iter().zip(b.data()))
        .map(|(gi, (ai, bi))| gi * (ai - bi))
        .sum()
}

/// Backward of [`fuse_features`]: returns `(dL/dh_s, dL/dh_p)` and adds the
/// raw-alpha gradients into `psi`.
pub fn fuse_features_backward(
    h_s: &Tensor,
    h_p: &Tensor,
    g_s: &Tensor,
    g_p: &Tensor,
    w: &FusionWeights,
    psi: &mut FusionParams,
) -> Result<(Tensor, Tensor)> {
    let t = psi.temperature;
    let grad = psi.grad.data_mut();
    match psi.mode {
        FusionMode::CrossStitch => {
            let (w00, w01) = w.alpha_shared;
            let (w10, w11) = w.alpha_private;
            let d0 = pair_sensitivity(w00, w01, t) * diff_dot(g_s, h_s, h_p);
            let d1 = pair_sensitivity(w10, w11, t) * diff_dot(g_p, h_s, h_p);
            grad[0] += d0;
            grad[1] -= d0;
            grad[2] += d1;
            grad[3] -= d1;
            Ok((
                Tensor::lincomb(w00, g_s, w10, g_p)?,
                Tensor::lincomb(w01, g_s, w11, g_p)?,
            ))
        }
        _ => {
            let (w0, w1) = w.alpha_shared;
            let mut g = g_s.clone();
            g.add_assign(g_p)?;
            let d = pair_sensitivity(w0, w1, t) * diff_dot(&g, h_s, h_p);
            grad[0] += d;
            grad[1] -= d;
            let mut gp = g.clone();
            g.scale(w0);
            gp.scale(w1);
            Ok((g, gp))
        }
    }
}

/// Backward of [`fuse_outputs`]: returns `(dL/do_s, dL/do_p)` and adds the
/// raw-beta gradients into `psi`.
pub fn fuse_outputs_backward(
    o_s: &Tensor,
    o_p: &Tensor,
    g: &Tensor,
    w: &FusionWeights,
    psi: &mut FusionParams,
) -> Result<(Tensor, Tensor)> {
    let b = psi.mode.beta_offset();
    let (b0, b1) = w.beta;
    let d = pair_sensitivity(b0, b1, psi.temperature) * diff_dot(g, o_s, o_p);
    let grad = psi.grad.data_mut();
    grad[b] += d;
    grad[b + 1] -= d;
    let mut gs = g.clone();
    let mut gp = g.clone();
    gs.scale(b0);
    gp.scale(b1);
    Ok((gs, gp))
}

/// Server-side mean of raw fusion scalars, in the order given.
pub fn psi_aggregate(updates: &[FusionParams]) -> Result<FusionParams> {
    let first = updates
        .first()
        .ok_or_else(|| Error::Protocol("no fusion updates to aggregate".into()))?;
    if let Some(bad) = updates
        .iter()
        .find(|u| u.mode != first.mode || u.temperature != first.temperature)
    {
        return Err(Error::Protocol(format!(
            "fusion mode mismatch: {} vs {}",
            first.mode, bad.mode
        )));
    }
    if updates.len() == 1 {
        let mut only = first.clone();
        only.zero_grad();
        return Ok(only);
    }
    let n = first.raw.len();
    let mut sum = vec![0.0; n];
    for u in updates {
        for (s, r) in sum.iter_mut().zip(u.raw.data()) {
            *s += r;
        }
    }
    let k = updates.len() as f64;
    FusionParams::from_raw(first.mode, first.temperature, sum.into_iter().map(|s| s / k).collect())
}

/// Tracks the extreme effective weights seen during training.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightWatch {
    pub min_weight: f64,
    pub max_weight: f64,
    /// Largest `|w0 + w1 - 1|` over all pairs seen.
    pub max_sum_error: f64,
    pub batches: u64,
}

impl Default for WeightWatch {
    fn default() -> Self {
        Self {
            min_weight: f64::INFINITY,
            max_weight: f64::NEG_INFINITY,
            max_sum_error: 0.0,
            batches: 0,
        }
    }
}

impl WeightWatch {
    pub fn observe(&mut self, w: &FusionWeights) {
        for (a, b) in [w.alpha_shared, w.alpha_private, w.beta] {
            self.min_weight = self.min_weight.min(a).min(b);
            self.max_weight = self.max_weight.max(a).max(b);
            self.max_sum_error = self.max_sum_error.max((a + b - 1.0).abs());
        }
        self.batches += 1;
    }

    pub fn merge(&mut self, other: &WeightWatch) {
        self.min_weight = self.min_weight.min(other.min_weight);
        self.max_weight = self.max_weight.max(other.max_weight);
        self.max_sum_error = self.max_sum_error.max(other.max_sum_error);
        self.batches += other.batches;
    }

    /// Every weight seen lies strictly inside (0, 1) and pairs sum to 1.
    pub fn is_proper(&self) -> bool {
        self.batches == 0
            || (self.min_weight > 0.0 && self.max_weight < 1.0 && self.max_sum_error == 0.0)
    }
}

/// Full double-branch model with learned fusion.
#[derive(Debug, Clone, PartialEq)]
pub struct AutoModel {
    psi: FusionParams,
    encoder_shared: Vec<Sequential>,
    classifier_shared: Sequential,
    encoder_private: Vec<Sequential>,
    classifier_private: Sequential,
    watch: WeightWatch,
}

struct Trace {
    h_s: Tensor,
    h_p: Tensor,
    o_s: Tensor,
    o_p: Tensor,
    enc_s: Vec<SequentialCache>,
    enc_p: Vec<SequentialCache>,
    cls_s: SequentialCache,
    cls_p: SequentialCache,
}

impl AutoModel {
    /// The last block of `split` is the classifier; the blocks below it form
    /// the encoder. Blocks are initialized bottom-up, shared copy first.
    pub fn build<R: Rng + ?Sized>(split: &NetworkSplit, psi: FusionParams, rng: &mut R) -> Result<Self> {
        let l = split.num_blocks();
        let mut shared = Vec::with_capacity(l);
        let mut private = Vec::with_capacity(l);
        for i in 0..l {
            shared.push(split.init_block(i, rng)?);
            private.push(split.init_block(i, rng)?);
        }
        let classifier_shared = shared.pop().expect("split has at least one block");
        let classifier_private = private.pop().expect("split has at least one block");
        Ok(Self {
            psi,
            encoder_shared: shared,
            classifier_shared,
            encoder_private: private,
            classifier_private,
            watch: WeightWatch::default(),
        })
    }

    pub fn psi(&self) -> &FusionParams {
        &self.psi
    }

    pub fn psi_mut(&mut self) -> &mut FusionParams {
        &mut self.psi
    }

    pub fn load_psi(&mut self, psi: &FusionParams) -> Result<()> {
        if psi.mode != self.psi.mode || psi.raw.len() != self.psi.raw.len() {
            return Err(Error::Protocol(format!(
                "model fuses with {}, server sent {}",
                self.psi.mode, psi.mode
            )));
        }
        self.psi.raw = psi.raw.clone();
        self.psi.temperature = psi.temperature;
        Ok(())
    }

    pub fn watch(&self) -> &WeightWatch {
        &self.watch
    }

    pub fn take_watch(&mut self) -> WeightWatch {
        std::mem::take(&mut self.watch)
    }

    pub fn encoder_shared(&self) -> &[Sequential] {
        &self.encoder_shared
    }

    pub fn encoder_private(&self) -> &[Sequential] {
        &self.encoder_private
    }

    pub fn encoder_private_mut(&mut self) -> &mut [Sequential] {
        &mut self.encoder_private
    }

    pub fn classifier_shared(&self) -> &Sequential {
        &self.classifier_shared
    }

    pub fn classifier_private_mut(&mut self) -> &mut Sequential {
        &mut self.classifier_private
    }

    fn encode(blocks: &[Sequential], x: &Tensor) -> Result<Tensor> {
        let mut cur = x.clone();
        for b in blocks {
            cur = b.infer(&cur)?;
        }
        Ok(cur)
    }

    fn encode_cached(blocks: &[Sequential], x: &Tensor) -> Result<(Tensor, Vec<SequentialCache>)> {
        let mut cur = x.clone();
        let mut caches = Vec::with_capacity(blocks.len());
        for b in blocks {
            let mut c = SequentialCache::default();
            cur = b.forward(&cur, &mut c)?;
            caches.push(c);
        }
        Ok((cur, caches))
    }

    fn encode_backward(blocks: &mut [Sequential], g: &Tensor, caches: &[SequentialCache]) -> Result<()> {
        let mut g = g.clone();
        for (b, c) in blocks.iter_mut().zip(caches).rev() {
            g = b.backward(&g, c)?;
        }
        Ok(())
    }

    /// Fused logits for given weights, without caching.
    pub fn fused_logits(&self, x: &Tensor, w: &FusionWeights) -> Result<Tensor> {
        let h_s = Self::encode(&self.encoder_shared, x)?;
        let h_p = Self::encode(&self.encoder_private, x)?;
        let (f_s, f_p) = fuse_features(&h_s, &h_p, w)?;
        let o_s = self.classifier_shared.infer(&f_s)?;
        let o_p = self.classifier_private.infer(&f_p)?;
        fuse_outputs(&o_s, &o_p, w)
    }

    /// Personalized prediction with noise-free weights.
    pub fn predict(&self, x: &Tensor) -> Result<Tensor> {
        softmax_rows(&self.fused_logits(x, &self.psi.expected_weights())?)
    }

    /// The server's model: shared encoder and classifier, with the fusion
    /// weights applied to duplicated shared features and logits.
    pub fn global_logits(&self, x: &Tensor) -> Result<Tensor> {
        let w = self.psi.expected_weights();
        let h_s = Self::encode(&self.encoder_shared, x)?;
        let (f_s, _) = fuse_features(&h_s, &h_s, &w)?;
        let o_s = self.classifier_shared.infer(&f_s)?;
        fuse_outputs(&o_s, &o_s, &w)
    }

    fn forward_cached(&self, x: &Tensor, w: &FusionWeights) -> Result<(Tensor, Trace)> {
        let (h_s, enc_s) = Self::encode_cached(&self.encoder_shared, x)?;
        let (h_p, enc_p) = Self::encode_cached(&self.encoder_private, x)?;
        let (f_s, f_p) = fuse_features(&h_s, &h_p, w)?;
        let mut cls_s = SequentialCache::default();
        let mut cls_p = SequentialCache::default();
        let o_s = self.classifier_shared.forward(&f_s, &mut cls_s)?;
        let o_p = self.classifier_private.forward(&f_p, &mut cls_p)?;
        let o = fuse_outputs(&o_s, &o_p, w)?;
        Ok((
            o,
            Trace {
                h_s,
                h_p,
                o_s,
                o_p,
                enc_s,
                enc_p,
                cls_s,
                cls_p,
            },
        ))
    }

    /// Cross-entropy of the fused logits under fixed weights; accumulates
    /// gradients for every network parameter and every raw fusion scalar.
    pub fn local_loss(&mut self, x: &Tensor, labels: &[usize], w: &FusionWeights) -> Result<f64> {
        let (o, tr) = self.forward_cached(x, w)?;
        let (loss, g) = softmax_cross_entropy(&o, labels)?;
        let (go_s, go_p) = fuse_outputs_backward(&tr.o_s, &tr.o_p, &g, w, &mut self.psi)?;
        let gf_s = self.classifier_shared.backward(&go_s, &tr.cls_s)?;
        let gf_p = self.classifier_private.backward(&go_p, &tr.cls_p)?;
        let (gh_s, gh_p) = fuse_features_backward(&tr.h_s, &tr.h_p, &gf_s, &gf_p, w, &mut self.psi)?;
        Self::encode_backward(&mut self.encoder_shared, &gh_s, &tr.enc_s)?;
        Self::encode_backward(&mut self.encoder_private, &gh_p, &tr.enc_p)?;
        Ok(loss)
    }

    /// Draws this batch's weights (Gumbel noise for hard selection), then
    /// runs [`AutoModel::local_loss`].
    pub fn train_batch<R: Rng + ?Sized>(&mut self, x: &Tensor, labels: &[usize], rng: &mut R) -> Result<f64> {
        let w = self.psi.sample_weights(rng);
        self.watch.observe(&w);
        self.local_loss(x, labels, &w)
    }

    fn shared_blocks(&self) -> impl Iterator<Item = &Sequential> {
        self.encoder_shared.iter().chain(std::iter::once(&self.classifier_shared))
    }

    fn private_blocks(&self) -> impl Iterator<Item = &Sequential> {
        self.encoder_private.iter().chain(std::iter::once(&self.classifier_private))
    }

    pub fn num_shared_params(&self) -> usize {
        self.shared_blocks().map(Sequential::num_params).sum()
    }

    /// Shared encoder blocks then the shared classifier; same layout as the
    /// shared half of a `"AaBb"` client model.
    pub fn shared_params(&self) -> ParamVector {
        let mut out = Vec::with_capacity(self.num_shared_params());
        for b in self.shared_blocks() {
            b.write_params(&mut out);
        }
        ParamVector(out)
    }

    pub fn private_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for b in self.private_blocks() {
            b.write_params(&mut out);
        }
        out
    }

    pub fn load_shared(&mut self, params: &ParamVector) -> Result<()> {
        let need = self.num_shared_params();
        if params.len() != need {
            return Err(Error::Protocol(format!(
                "shared vector has {} values, auto model expects {need}",
                params.len()
            )));
        }
        let mut off = 0;
        for b in self
            .encoder_shared
            .iter_mut()
            .chain(std::iter::once(&mut self.classifier_shared))
        {
            off += b.read_params(&params.0[off..])?;
        }
        Ok(())
    }

    pub fn zero_grads(&mut self) {
        self.psi.zero_grad();
        for b in self
            .encoder_shared
            .iter_mut()
            .chain(self.encoder_private.iter_mut())
            .chain([&mut self.classifier_shared, &mut self.classifier_private])
        {
            b.zero_grads();
        }
    }

    /// Aggregated parameters: shared blocks and the fusion scalars.
    pub fn shared_param_grad_pairs(&mut self) -> impl Iterator<Item = (&mut Tensor, &Tensor)> {
        self.encoder_shared
            .iter_mut()
            .chain(std::iter::once(&mut self.classifier_shared))
            .flat_map(Sequential::param_grad_pairs)
            .chain(std::iter::once(self.psi.param_grad_pair()))
    }

    pub fn private_param_grad_pairs(&mut self) -> impl Iterator<Item = (&mut Tensor, &Tensor)> {
        self.encoder_private
            .iter_mut()
            .chain(std::iter::once(&mut self.classifier_private))
            .flat_map(Sequential::param_grad_pairs)
    }
}
