use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Row-wise softmax of a `[B, C]` tensor.
pub fn softmax_rows(logits: &Tensor) -> Result<Tensor> {
    if logits.shape().len() != 2 {
        return Err(Error::config(format!(
            "softmax expects [B, C], got {:?}",
            logits.shape()
        )));
    }
    let c = logits.shape()[1];
    let mut out = Vec::with_capacity(logits.len());
    for row in logits.data().chunks_exact(c) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        out.extend(exps.into_iter().map(|e| e / z));
    }
    Tensor::new(logits.shape().to_vec(), out)
}

/// Mean softmax cross-entropy over the batch and its gradient
/// `(softmax(logits) - one_hot) / B`.
pub fn softmax_cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
    let s = logits.shape();
    if s.len() != 2 || s[0] == 0 {
        return Err(Error::config(format!("logits must be [B>=1, C], got {s:?}")));
    }
    let (batch, classes) = (s[0], s[1]);
    if labels.len() != batch {
        return Err(Error::config(format!(
            "{} labels for a batch of {batch}",
            labels.len()
        )));
    }
    if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= classes) {
        return Err(Error::Data(format!(
            "label {y} at batch row {i} outside [0, {classes})"
        )));
    }
    let mut grad = Vec::with_capacity(logits.len());
    let mut loss = 0.0;
    let inv_b = 1.0 / batch as f64;
    for (row, &y) in logits.data().chunks_exact(classes).zip(labels) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = row.iter().map(|&v| (v - max).exp()).sum();
        let log_z = max + z.ln();
        loss += log_z - row[y];
        for (j, &v) in row.iter().enumerate() {
            let p = (v - log_z).exp();
            let target = if j == y { 1.0 } else { 0.0 };
            grad.push((p - target) * inv_b);
        }
    }
    let loss = loss * inv_b;
    if !loss.is_finite() {
        return Err(Error::Numeric(format!("cross-entropy loss is {loss}")));
    }
    Ok((loss, Tensor::new(s.to_vec(), grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits_give_ln2() {
        let logits = Tensor::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let (loss, _) = softmax_cross_entropy(&logits, &[0]).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn large_logits_do_not_overflow() {
        let logits = Tensor::from_rows(&[vec![1000.0, 0.0]]).unwrap();
        let (loss, grad) = softmax_cross_entropy(&logits, &[0]).unwrap();
        assert!(loss.abs() < 1e-12);
        assert!(grad.data().iter().all(|g| g.is_finite()));
    }

    #[test]
    fn label_out_of_range_is_data_error() {
        let logits = Tensor::from_rows(&[vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            softmax_cross_entropy(&logits, &[2]),
            Err(Error::Data(_))
        ));
    }

    #[test]
    fn softmax_rows_normalize() {
        let logits = Tensor::from_rows(&[vec![1.0, 2.0, 3.0], vec![-5.0, 0.0, 5.0]]).unwrap();
        let p = softmax_rows(&logits).unwrap();
        for i in 0..2 {
            assert!((p.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
