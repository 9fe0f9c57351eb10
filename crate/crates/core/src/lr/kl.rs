use crate::error::{Error, Result};
use crate::photonic::ExperimentDistribution;

/// Σ q log₂(q / p) over a flat table, with 0·log(0/p) = 0 and +∞ when q
/// has mass where p has none.
pub fn kl_bits(q: &[f64], p: &[f64]) -> f64 {
    let mut sum = 0.0;
    for (&qi, &pi) in q.iter().zip(p) {
        if qi > 0.0 {
            if pi <= 0.0 {
                return f64::INFINITY;
            }
            sum += qi * (qi / pi).ln();
        }
    }
    sum / std::f64::consts::LN_2
}

/// KL divergence D(q‖p) in bits from an experiment table to a prediction
/// table of the same shape.
pub fn kl_divergence(q: &ExperimentDistribution, p: &[f64]) -> Result<f64> {
    if p.len() != q.table().len() {
        return Err(Error::Shape(format!(
            "prediction has {} cells, experiment has {}",
            p.len(),
            q.table().len()
        )));
    }
    Ok(kl_bits(q.table(), p))
}
