use crate::error::{Error, Result};

/// Weighted accuracy (trace / total) and unweighted accuracy (mean recall over
/// classes that have at least one instance) of a confusion matrix whose rows
/// are true classes and columns predictions.
pub fn metrics(confusion: &[Vec<u64>]) -> Result<(f64, f64)> {
    let k = confusion.len();
    if confusion.iter().any(|row| row.len() != k) {
        return Err(Error::Metric("confusion matrix must be square".into()));
    }
    let row_sums: Vec<u64> = confusion.iter().map(|r| r.iter().sum()).collect();
    let total: u64 = row_sums.iter().sum();
    if total == 0 {
        return Err(Error::Metric("confusion matrix is all zero".into()));
    }
    let trace: u64 = (0..k).map(|i| confusion[i][i]).sum();
    let wa = trace as f64 / total as f64;
    let recalls: Vec<f64> = (0..k)
        .filter(|&i| row_sums[i] > 0)
        .map(|i| confusion[i][i] as f64 / row_sums[i] as f64)
        .collect();
    let ua = recalls.iter().sum::<f64>() / recalls.len() as f64;
    Ok((wa, ua))
}
