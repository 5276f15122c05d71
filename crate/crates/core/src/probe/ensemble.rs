use crate::datagen::Dataset;
use crate::error::{Error, Result};
use crate::nnet::{Mlp, Scratch};

/// Majority vote over member argmax predictions; ties go to class 0.
pub fn ensemble_predict(models: &[Mlp], x: &[f64]) -> Result<u8> {
    if models.is_empty() {
        return Err(Error::Config("ensemble needs at least one model".into()));
    }
    let mut votes = 0usize;
    for m in models {
        votes += usize::from(m.predict(x)? == 1);
    }
    Ok(u8::from(2 * votes > models.len()))
}

pub fn ensemble_accuracy(models: &[Mlp], ds: &Dataset) -> Result<f64> {
    let mut correct = 0;
    for i in 0..ds.len() {
        correct += usize::from(ensemble_predict(models, ds.row(i))? == ds.labels[i]);
    }
    Ok(correct as f64 / ds.len() as f64)
}

/// Fraction of rows on which the two models' predictions differ.
pub fn disagreement(a: &Mlp, b: &Mlp, ds: &Dataset) -> Result<f64> {
    if a.input_dim() != ds.dim() || b.input_dim() != ds.dim() {
        return Err(Error::Shape(format!(
            "models expect {} and {} inputs, dataset has {}",
            a.input_dim(),
            b.input_dim(),
            ds.dim()
        )));
    }
    let (mut sa, mut sb) = (Scratch::default(), Scratch::default());
    let differ = (0..ds.len())
        .filter(|&i| a.predict_with(ds.row(i), &mut sa) != b.predict_with(ds.row(i), &mut sb))
        .count();
    Ok(differ as f64 / ds.len() as f64)
}

/// Mean disagreement over all unordered model pairs.
pub fn mean_pairwise_disagreement(models: &[Mlp], ds: &Dataset) -> Result<f64> {
    if models.len() < 2 {
        return Err(Error::Config("pairwise disagreement needs at least two models".into()));
    }
    let mut total = 0.0;
    let mut pairs = 0;
    for i in 0..models.len() {
        for j in i + 1..models.len() {
            total += disagreement(&models[i], &models[j], ds)?;
            pairs += 1;
        }
    }
    Ok(total / pairs as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_slab, SlabSpec};
    use crate::linalg::Matrix;
    use crate::nnet::{mlp_init, Dense};

    fn constant(class: u8) -> Mlp {
        let b = if class == 1 { vec![0.0, 1.0] } else { vec![1.0, 0.0] };
        Mlp::new(vec![Dense { w: Matrix::zeros(2, 2), b }]).unwrap()
    }

    #[test]
    fn votes() {
        let x = [0.3, 0.4];
        assert_eq!(ensemble_predict(&[constant(1)], &x).unwrap(), 1);
        assert_eq!(ensemble_predict(&[constant(1), constant(1), constant(1)], &x).unwrap(), 1);
        assert_eq!(ensemble_predict(&[constant(0), constant(0), constant(1)], &x).unwrap(), 0);
        assert_eq!(ensemble_predict(&[constant(0), constant(1), constant(1)], &x).unwrap(), 1);
        assert_eq!(ensemble_predict(&[constant(0), constant(1)], &x).unwrap(), 0);
        assert!(ensemble_predict(&[], &x).is_err());
    }

    #[test]
    fn vote_enumeration() {
        // all 2³ vote patterns of three members
        for mask in 0u8..8 {
            let models: Vec<Mlp> = (0..3).map(|k| constant((mask >> k) & 1)).collect();
            let ones = mask.count_ones();
            assert_eq!(ensemble_predict(&models, &[0.0, 0.0]).unwrap(), u8::from(ones >= 2));
        }
    }

    #[test]
    fn self_and_negated_head() {
        let ds = gen_slab(&SlabSpec { n: 300, seed: 1, ..SlabSpec::default() }).unwrap();
        let m = mlp_init(&[4, 6, 2], 2).unwrap();
        assert_eq!(disagreement(&m, &m, &ds).unwrap(), 0.0);
        let mut flipped = m.clone();
        let last = flipped.layers.last_mut().unwrap();
        last.w.as_mut_slice().iter_mut().for_each(|w| *w = -*w);
        last.b.iter_mut().for_each(|b| *b = -*b);
        let ties = (0..ds.len())
            .filter(|&i| {
                let l = m.forward(ds.row(i)).unwrap();
                l[0] == l[1]
            })
            .count() as f64
            / ds.len() as f64;
        let d = disagreement(&m, &flipped, &ds).unwrap();
        assert!((d - (1.0 - ties)).abs() < 1e-12);
        assert_eq!(d, disagreement(&flipped, &m, &ds).unwrap());
    }

    #[test]
    fn four_point_brute_force() {
        let rows = vec![vec![1.0, 1.0], vec![-1.0, 1.0], vec![1.0, -1.0], vec![-1.0, -1.0]];
        let mut ds = gen_slab(&SlabSpec { d: 2, k: vec![3], n: 4, seed: 0, ..SlabSpec::default() }).unwrap();
        ds.features = Matrix::from_rows(&rows).unwrap();
        let a = Mlp::new(vec![Dense { w: Matrix::from_rows(&[vec![0.0, 0.0], vec![1.0, 0.0]]).unwrap(), b: vec![0.0, 0.0] }]).unwrap();
        let b = Mlp::new(vec![Dense { w: Matrix::from_rows(&[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap(), b: vec![0.0, 0.0] }]).unwrap();
        // a predicts x0 > 0, b predicts x1 > 0: they differ on rows 1 and 2
        let expect = rows.iter().filter(|r| (r[0] > 0.0) != (r[1] > 0.0)).count() as f64 / 4.0;
        assert_eq!(disagreement(&a, &b, &ds).unwrap(), expect);
        assert_eq!(expect, 0.5);
    }
}
