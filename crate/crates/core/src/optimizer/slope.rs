use crate::error::{Error, Result};

/// Ordinary least-squares slope of `values` against their index, with the
/// slope's standard error on `len - 2` degrees of freedom (0 for two
/// points).
pub fn slope_fit(values: &[f64]) -> Result<(f64, f64)> {
    let len = values.len();
    if len < 2 {
        return Err(Error::Degenerate(format!("slope needs at least 2 values, got {len}")));
    }
    let nf = len as f64;
    let mean_i = (nf - 1.0) / 2.0;
    let mean_v = values.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (i, v) in values.iter().enumerate() {
        let di = i as f64 - mean_i;
        sxx += di * di;
        sxy += di * (v - mean_v);
    }
    let slope = sxy / sxx;
    if len == 2 {
        return Ok((slope, 0.0));
    }
    let ssr: f64 = values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let r = v - (mean_v + slope * (i as f64 - mean_i));
            r * r
        })
        .sum();
    Ok((slope, (ssr / (nf - 2.0) / sxx).sqrt()))
}
