//! Small summary statistics used by the experiment aggregates.

/// Ordinary least squares fit of `y = a + b·x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; `None` with fewer than three points.
    pub slope_se: Option<f64>,
}

pub fn ols(x: &[f64], y: &[f64]) -> Option<LineFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let slope_se = (n > 2).then(|| {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| {
                let r = b - intercept - slope * a;
                r * r
            })
            .sum();
        (rss / (nf - 2.0) / sxx).sqrt()
    });
    Some(LineFit {
        slope,
        intercept,
        slope_se,
    })
}

/// Mean, variance, skewness and excess kurtosis with `1/n` normalization.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

pub fn moments(values: &[f64]) -> Option<Moments> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in values {
        let c = v - mean;
        let c2 = c * c;
        m2 += c2;
        m3 += c2 * c;
        m4 += c2 * c2;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    Some(Moments {
        mean,
        variance: m2,
        skewness: m3 / m2.powf(1.5),
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
    })
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law_slope() {
        let x = [10.0, 11.0, 12.0];
        let y: Vec<f64> = x.iter().map(|k| 3.0 - 1.0 * k).collect();
        let fit = ols(&x, &y).unwrap();
        assert!((fit.slope + 1.0).abs() < 1e-12);
        assert!((fit.intercept - 3.0).abs() < 1e-12);
        assert!(fit.slope_se.unwrap() < 1e-12);
        assert!(ols(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn symmetric_moments() {
        let m = moments(&[-1.0, 1.0]).unwrap();
        assert_eq!(
            (m.mean, m.variance, m.skewness, m.excess_kurtosis),
            (0.0, 1.0, 0.0, -2.0)
        );
    }
}
