use super::NumericsError;

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Exact equality of every entry; rounding in the mean would otherwise leave
/// a tiny non-zero spread for constant columns such as `(0.2, 0.2, 0.2)`.
fn is_constant(x: &[f64]) -> bool {
    x.windows(2).all(|w| w[0] == w[1])
}

/// Sample standard deviation (`n − 1` denominator).
pub fn sample_std(x: &[f64]) -> Result<f64, NumericsError> {
    mean_std(x).map(|(_, s)| s)
}

/// Mean and sample (`n − 1`) standard deviation.
pub fn mean_std(x: &[f64]) -> Result<(f64, f64), NumericsError> {
    if x.len() < 2 {
        return Err(NumericsError::TooFewValues {
            needed: 2,
            found: x.len(),
        });
    }
    if is_constant(x) {
        return Ok((x[0], 0.0));
    }
    let m = mean(x);
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    Ok((m, (ss / (x.len() - 1) as f64).sqrt()))
}

/// Pearson correlation coefficient, clamped into `[-1, 1]`.
pub fn pearson_corr(x: &[f64], y: &[f64]) -> Result<f64, NumericsError> {
    if x.len() != y.len() {
        return Err(NumericsError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(NumericsError::TooFewValues {
            needed: 2,
            found: x.len(),
        });
    }
    if is_constant(x) || is_constant(y) {
        return Err(NumericsError::ConstantColumn);
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(NumericsError::ConstantColumn);
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
