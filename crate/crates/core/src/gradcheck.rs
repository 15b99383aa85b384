//! Central finite-difference checks of every hand-written backward pass.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::autofuse::{AutoModel, FusionMode, FusionParams, DEFAULT_TEMPERATURE};
use crate::error::Result;
use crate::nn::{softmax_cross_entropy, ForwardCache, Layer, LayerKind};
use crate::rng::stream;
use crate::splitnet::{enumerate_ways, ClientModel, NetworkSplit, Role};
use crate::tensor::Tensor;

pub const FD_EPS: f64 = 1e-5;
pub const MAX_REL_ERROR: f64 = 1e-4;
/// Gradient magnitudes below this are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;
const COORDS_PER_TRIAL: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct GradReport {
    pub name: String,
    pub trials: usize,
    pub coordinates: usize,
    pub max_rel_error: f64,
    /// Coordinates left out because a ReLU kink lay within reach of the step.
    pub skipped: usize,
}

impl GradReport {
    fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            trials: 0,
            coordinates: 0,
            max_rel_error: 0.0,
            skipped: 0,
        }
    }

    pub fn passed(&self) -> bool {
        self.max_rel_error < MAX_REL_ERROR
    }

    fn add(&mut self, analytic: f64, numeric: f64) {
        self.coordinates += 1;
        self.max_rel_error = self.max_rel_error.max(rel_error(analytic, numeric));
    }
}

pub fn rel_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// `(f(x + eps) - f(x - eps)) / 2 eps` for coordinate `i` of `x`.
pub fn central_difference(x: &mut [f64], i: usize, f: impl FnMut(&[f64]) -> f64) -> f64 {
    central_difference_with(x, i, FD_EPS, f)
}

pub fn central_difference_with(x: &mut [f64], i: usize, eps: f64, mut f: impl FnMut(&[f64]) -> f64) -> f64 {
    let orig = x[i];
    x[i] = orig + eps;
    let up = f(x);
    x[i] = orig - eps;
    let down = f(x);
    x[i] = orig;
    (up - down) / (2.0 * eps)
}

/// Central difference that returns `None` near a kink, detected as
/// disagreement between steps `FD_EPS` and `FD_EPS / 2`.
fn smooth_difference(x: &mut [f64], i: usize, mut f: impl FnMut(&[f64]) -> f64) -> Option<f64> {
    let full = central_difference_with(x, i, FD_EPS, &mut f);
    let half = central_difference_with(x, i, FD_EPS / 2.0, &mut f);
    (rel_error(full, half) < MAX_REL_ERROR / 10.0).then_some(full)
}

fn normal_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// Values bounded away from zero so ReLU kinks stay out of reach of `eps`.
fn off_kink<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    normal_vec(n, rng)
        .into_iter()
        .map(|v: f64| if v.abs() < 0.05 { v.signum() * 0.05 + v } else { v })
        .collect()
}

fn pick<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    index::sample(rng, n, n.min(COORDS_PER_TRIAL)).into_vec()
}

fn layer_case<R: Rng + ?Sized>(kind_id: usize, rng: &mut R) -> (LayerKind, Vec<usize>) {
    let b = rng.random_range(1..4);
    match kind_id {
        0 => {
            let (i, o) = (rng.random_range(1..6), rng.random_range(1..6));
            (LayerKind::Linear { input: i, output: o }, vec![b, i])
        }
        1 => {
            let (ci, co, k) = (rng.random_range(1..3), rng.random_range(1..3), rng.random_range(1..4));
            let (h, w) = (k + rng.random_range(0..3), k + rng.random_range(0..3));
            (
                LayerKind::Conv2d {
                    in_channels: ci,
                    out_channels: co,
                    kernel: k,
                },
                vec![b, ci, h, w],
            )
        }
        2 => (LayerKind::Relu, vec![b, rng.random_range(1..8)]),
        3 => (
            LayerKind::MaxPool2,
            vec![b, rng.random_range(1..3), rng.random_range(2..6), rng.random_range(2..6)],
        ),
        _ => (LayerKind::Flatten, vec![b, 2, rng.random_range(1..4), 3]),
    }
}

fn layer_name(kind_id: usize) -> &'static str {
    ["linear", "conv2d", "relu", "maxpool2", "flatten"][kind_id]
}

fn probe(layer: &Layer, x: &Tensor, r: &[f64]) -> f64 {
    let out = layer.infer(x).expect("probe forward");
    out.data().iter().zip(r).map(|(a, b)| a * b).sum()
}

/// Checks input and parameter gradients of every layer kind against the
/// probe loss `sum(r * layer(x))` with random `r`.
pub fn check_layers(trials: usize, seed: u64) -> Result<Vec<GradReport>> {
    let mut out = Vec::new();
    for kind_id in 0..5 {
        let mut rng = stream(seed, &[0x4c41_5952, kind_id as u64]);
        let mut rep = GradReport::new(layer_name(kind_id));
        for _ in 0..trials {
            let (kind, shape) = layer_case(kind_id, &mut rng);
            let mut layer = Layer::new(kind, &mut rng)?;
            let n: usize = shape.iter().product();
            let mut x = Tensor::new(shape.clone(), off_kink(n, &mut rng))?;
            let mut cache = ForwardCache::default();
            let y = layer.forward(&x, &mut cache)?;
            let r = normal_vec(y.len(), &mut rng);
            let gx = layer.backward(&Tensor::new(y.shape().to_vec(), r.clone())?, &cache)?;
            for i in pick(n, &mut rng) {
                let num = central_difference(x.data_mut(), i, |v| {
                    probe(&layer, &Tensor::new(shape.clone(), v.to_vec()).expect("shape"), &r)
                });
                rep.add(gx.data()[i], num);
            }
            let grads: Vec<Tensor> = layer.grads().to_vec();
            for (j, g) in grads.iter().enumerate() {
                for i in pick(g.len(), &mut rng) {
                    let mut p = layer.params()[j].data().to_vec();
                    let num = central_difference(&mut p, i, |v| {
                        let mut l = layer.clone();
                        l.params_mut()[j].data_mut().copy_from_slice(v);
                        probe(&l, &x, &r)
                    });
                    rep.add(g.data()[i], num);
                }
            }
            rep.trials += 1;
        }
        out.push(rep);
    }
    Ok(out)
}

/// Softmax cross-entropy gradient with respect to the logits.
pub fn check_loss(trials: usize, seed: u64) -> Result<GradReport> {
    let mut rng = stream(seed, &[0x4c4f_5353]);
    let mut rep = GradReport::new("softmax_cross_entropy");
    for _ in 0..trials {
        let b = rng.random_range(1..5);
        let labels: Vec<usize> = (0..b).map(|_| rng.random_range(0..3)).collect();
        let mut logits = normal_vec(b * 3, &mut rng);
        let (_, g) = softmax_cross_entropy(&Tensor::new(vec![b, 3], logits.clone())?, &labels)?;
        for i in 0..b * 3 {
            let num = central_difference(&mut logits, i, |v| {
                softmax_cross_entropy(&Tensor::new(vec![b, 3], v.to_vec()).expect("shape"), &labels)
                    .expect("loss")
                    .0
            });
            rep.add(g.data()[i], num);
        }
        rep.trials += 1;
    }
    Ok(rep)
}

fn tiny_batch<R: Rng + ?Sized>(rng: &mut R, input: usize, classes: usize) -> (Tensor, Vec<usize>) {
    let b = rng.random_range(2..5);
    let x = Tensor::new(vec![b, input], normal_vec(b * input, rng)).expect("shape");
    let y = (0..b).map(|_| rng.random_range(0..classes)).collect();
    (x, y)
}

/// Every raw fusion scalar, for each mode, through the full auto model.
/// Hard selection draws its Gumbel noise once per trial and holds it fixed.
pub fn check_fusion(trials: usize, seed: u64) -> Result<Vec<GradReport>> {
    let split = NetworkSplit::mlp(4, &[5], 3)?;
    let mut out = Vec::new();
    for mode in FusionMode::ALL {
        let mut rng = stream(seed, &[0x4655_5345, mode as u64]);
        let mut rep = GradReport::new(format!("fusion_{}", mode.tag()));
        for _ in 0..trials {
            let raw = normal_vec(mode.names().len(), &mut rng);
            let psi = FusionParams::from_raw(mode, DEFAULT_TEMPERATURE, raw)?;
            let mut model = AutoModel::build(&split, psi, &mut rng)?;
            let noise = (mode == FusionMode::HardSelection).then(|| {
                let g: Vec<f64> = (0..4).map(|_| crate::nn::gumbel(&mut rng)).collect();
                [g[0], g[1], g[2], g[3]]
            });
            let (x, y) = tiny_batch(&mut rng, 4, 3);
            let w = model.psi().weights_with_noise(noise);
            model.zero_grads();
            model.local_loss(&x, &y, &w)?;
            let analytic = model.psi().grad().to_vec();
            let mut raw = model.psi().raw().to_vec();
            for (i, &a) in analytic.iter().enumerate() {
                let num = central_difference(&mut raw, i, |v| {
                    let mut m = model.clone();
                    m.psi_mut().raw_mut().copy_from_slice(v);
                    let w = m.psi().weights_with_noise(noise);
                    let o = m.fused_logits(&x, &w).expect("forward");
                    softmax_cross_entropy(&o, &y).expect("loss").0
                });
                rep.add(a, num);
            }
            rep.trials += 1;
        }
        out.push(rep);
    }
    Ok(out)
}

/// Parameter gradients of every privatization way on a 2-block MLP.
pub fn check_ways(trials: usize, seed: u64) -> Result<Vec<GradReport>> {
    let split = NetworkSplit::mlp(4, &[5], 3)?;
    let mut out = Vec::new();
    for (wi, way) in enumerate_ways(2)?.into_iter().enumerate() {
        let mut rng = stream(seed, &[0x5741_5953, wi as u64]);
        let mut rep = GradReport::new(format!("way_{}", way.format(2)));
        for _ in 0..trials {
            let mut model = ClientModel::build(&split, way, &mut rng)?;
            let (x, y) = tiny_batch(&mut rng, 4, 3);
            model.zero_grads();
            model.local_loss(&x, &y)?;
            for role in [Role::Shared, Role::Private] {
                let grads: Vec<Tensor> = model.param_grad_pairs(role).map(|(_, g)| g.clone()).collect();
                for (j, g) in grads.iter().enumerate() {
                    for i in pick(g.len(), &mut rng) {
                        let mut p = model.param_grad_pairs(role).nth(j).expect("tensor").0.data().to_vec();
                        let num = smooth_difference(&mut p, i, |v| {
                            let mut m = model.clone();
                            m.param_grad_pairs(role)
                                .nth(j)
                                .expect("tensor")
                                .0
                                .data_mut()
                                .copy_from_slice(v);
                            m.local_loss(&x, &y).expect("loss").total
                        });
                        match num {
                            Some(num) => rep.add(g.data()[i], num),
                            None => rep.skipped += 1,
                        }
                    }
                }
            }
            rep.trials += 1;
        }
        out.push(rep);
    }
    Ok(out)
}

/// Layers, loss, fusion scalars and ways, `trials` random cases each.
pub fn run_all(trials: usize, seed: u64) -> Result<Vec<GradReport>> {
    let mut all = check_layers(trials, seed)?;
    all.push(check_loss(trials, seed)?);
    all.extend(check_fusion(trials, seed)?);
    all.extend(check_ways(trials, seed)?);
    Ok(all)
}
