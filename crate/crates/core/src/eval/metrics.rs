use crate::error::{invalid, Result};
use crate::scalar::{compensated_sum, Scalar};

fn check<F: Scalar>(predictions: &[F], truths: &[F]) -> Result<()> {
    if predictions.len() != truths.len() {
        return invalid(format!("{} predictions for {} truths", predictions.len(), truths.len()));
    }
    if truths.is_empty() {
        return invalid("empty test set");
    }
    Ok(())
}

/// Root mean squared error.
pub fn rmse<F: Scalar>(predictions: &[F], truths: &[F]) -> Result<F> {
    check(predictions, truths)?;
    let sq = compensated_sum(predictions.iter().zip(truths).map(|(&p, &x)| (x - p) * (x - p)));
    Ok((sq / F::from_usize(truths.len()).unwrap()).sqrt())
}

/// Mean absolute error.
pub fn mae<F: Scalar>(predictions: &[F], truths: &[F]) -> Result<F> {
    check(predictions, truths)?;
    let abs = compensated_sum(predictions.iter().zip(truths).map(|(&p, &x)| (x - p).abs()));
    Ok(abs / F::from_usize(truths.len()).unwrap())
}
