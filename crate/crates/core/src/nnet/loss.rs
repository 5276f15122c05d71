use crate::error::{Error, Result};

pub fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|&z| (z - max).exp()).sum::<f64>().ln();
    logits.iter().map(|&z| z - lse).collect()
}

pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Softmax cross-entropy `-Σ target · log softmax(logits)`.
pub fn loss(logits: &[f64], target: &[f64]) -> Result<f64> {
    if logits.len() != target.len() {
        return Err(Error::Shape(format!(
            "{} logits for a {}-class target",
            logits.len(),
            target.len()
        )));
    }
    let total: f64 = target.iter().sum();
    if (total - 1.0).abs() > 1e-9 || target.iter().any(|&t| t < 0.0) {
        return Err(Error::Config(format!("target is not a probability vector (sums to {total})")));
    }
    Ok(-log_softmax(logits)
        .iter()
        .zip(target)
        .map(|(l, t)| if *t == 0.0 { 0.0 } else { t * l })
        .sum::<f64>())
}

/// `(1 - eps) · onehot(label) + eps / classes`.
pub fn smooth_labels(label: u8, eps: f64, classes: usize) -> Vec<f64> {
    let off = eps / classes as f64;
    let mut t = vec![off; classes];
    // written as 1 - Σ(off) so the vector sums to one
    t[label as usize] = 1.0 - off * (classes - 1) as f64;
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uniform_prediction_costs_ln2() {
        assert!((loss(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((loss(&[0.0, 0.0], &[1.0, 0.0]).unwrap() - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn saturated_correct_is_near_zero() {
        assert!(loss(&[10.0, -10.0], &[1.0, 0.0]).unwrap() < 1e-8);
    }

    #[test]
    fn soft_target_direct_formula() {
        let (z0, z1) = (1.0f64, 2.0f64);
        let p0 = z0.exp() / (z0.exp() + z1.exp());
        let p1 = z1.exp() / (z0.exp() + z1.exp());
        let direct = -(0.95 * p0.ln() + 0.05 * p1.ln());
        assert!((loss(&[1.0, 2.0], &[0.95, 0.05]).unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn non_normalized_target_rejected() {
        assert!(loss(&[0.0, 0.0], &[0.6, 0.6]).is_err());
    }

    #[test]
    fn smoothing_values() {
        assert_eq!(smooth_labels(1, 0.0, 2), vec![0.0, 1.0]);
        let t = smooth_labels(0, 0.2, 2);
        assert!((t[0] - 0.9).abs() < 1e-15 && (t[1] - 0.1).abs() < 1e-15);
        let t = smooth_labels(1, 0.1, 2);
        assert!((t[0] - 0.05).abs() < 1e-15 && (t[1] - 0.95).abs() < 1e-15);
    }

    fn entropy(t: &[f64]) -> f64 {
        -t.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }

    proptest! {
        #[test]
        fn softmax_is_a_distribution(z in proptest::collection::vec(-50.0f64..50.0, 2..6)) {
            let p = softmax(&z);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn loss_bounds(z0 in -30.0f64..30.0, z1 in -30.0f64..30.0, label in 0u8..2, eps in 0.0f64..0.99) {
            let onehot = smooth_labels(label, 0.0, 2);
            prop_assert!(loss(&[z0, z1], &onehot).unwrap() >= 0.0);
            let t = smooth_labels(label, eps, 2);
            prop_assert!((t.iter().sum::<f64>() - 1.0).abs() < 1e-15);
            prop_assert!(loss(&[z0, z1], &t).unwrap() >= entropy(&t) - 1e-12);
        }
    }
}
