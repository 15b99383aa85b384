use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::Dataset;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Values are rounded through `f32` so datasets survive a file round-trip.
fn quantize(v: f64) -> f64 {
    v as f32 as f64
}

fn check_sizes(n: usize, classes: usize) -> Result<()> {
    if classes == 0 || n < classes {
        return Err(Error::config(format!(
            "need at least one sample per class, got N={n} for {classes} classes"
        )));
    }
    Ok(())
}

/// Gaussian blobs: class `y` is centered at `class_sep` times a random unit
/// vector, with identity covariance. Sample `i` has label `i % classes`.
pub fn synth_label_dataset<R: Rng + ?Sized>(
    n: usize,
    classes: usize,
    dim: usize,
    class_sep: f64,
    rng: &mut R,
) -> Result<Dataset> {
    synth_mixture_dataset(n, classes, dim, 1, class_sep, rng)
}

/// Like [`synth_label_dataset`], but every class is an equal mixture of
/// `modes` blobs, each centered at `class_sep` times its own random unit
/// vector. Sample `i` has label `i % classes` and mode `(i / classes) % modes`.
pub fn synth_mixture_dataset<R: Rng + ?Sized>(
    n: usize,
    classes: usize,
    dim: usize,
    modes: usize,
    class_sep: f64,
    rng: &mut R,
) -> Result<Dataset> {
    check_sizes(n, classes)?;
    if dim == 0 || modes == 0 || !(class_sep >= 0.0 && class_sep.is_finite()) {
        return Err(Error::config(
            "dimension and modes must be positive and class_sep finite and >= 0",
        ));
    }
    let centers: Vec<Vec<f64>> = (0..classes * modes)
        .map(|_| {
            let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| class_sep * x / norm).collect()
        })
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut data = Vec::with_capacity(n * dim);
    for (i, &y) in labels.iter().enumerate() {
        let center = &centers[y * modes + (i / classes) % modes];
        data.extend(center.iter().map(|m| quantize(m + normal(rng))));
    }
    Dataset::new(Tensor::new(vec![n, dim], data)?, labels, classes)
}

/// Single-channel images: each class owns a random binary template scaled
/// to amplitude 2, plus unit Gaussian pixel noise.
pub fn synth_image_dataset<R: Rng + ?Sized>(
    n: usize,
    classes: usize,
    height: usize,
    width: usize,
    rng: &mut R,
) -> Result<Dataset> {
    check_sizes(n, classes)?;
    if height == 0 || width == 0 {
        return Err(Error::config("image dimensions must be positive"));
    }
    let px = height * width;
    let templates: Vec<Vec<f64>> = (0..classes)
        .map(|_| (0..px).map(|_| if rng.random::<bool>() { 2.0 } else { 0.0 }).collect())
        .collect();
    let labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
    let mut data = Vec::with_capacity(n * px);
    for &y in &labels {
        data.extend(templates[y].iter().map(|t| quantize(t + normal(rng))));
    }
    Dataset::new(Tensor::new(vec![n, 1, height, width], data)?, labels, classes)
}
