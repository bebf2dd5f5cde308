//! Small least-squares helpers shared by the calibration routines.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares `y = intercept + slope * x`.
///
/// Returns `None` when fewer than two points are given or all `x` coincide.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mean_x) * (x - mean_x);
        sxy += (x - mean_x) * (y - mean_y);
    }
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let r_squared = r_squared(ys, xs.iter().map(|&x| intercept + slope * x));
    Some(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}

/// Joint fit of several groups sharing one intercept but each with its own
/// slope: `y_gi = c + m_g * x_gi`.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedInterceptFit {
    pub intercept: f64,
    pub slopes: Vec<f64>,
    pub r_squared: f64,
}

pub fn shared_intercept_fit(groups: &[(Vec<f64>, Vec<f64>)]) -> Option<SharedInterceptFit> {
    if groups.is_empty() {
        return None;
    }
    // Eliminating the per-group slopes leaves a scalar normal equation in c.
    let mut denom = 0.0;
    let mut numer = 0.0;
    let mut sums = Vec::with_capacity(groups.len());
    for (xs, ys) in groups {
        if xs.len() != ys.len() || xs.is_empty() {
            return None;
        }
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
        if !(sxx > 0.0) {
            return None;
        }
        denom += n - sx * sx / sxx;
        numer += sy - sx * sxy / sxx;
        sums.push((sx, sxx, sxy));
    }
    let scale: f64 = groups.iter().map(|(xs, _)| xs.len() as f64).sum();
    if !(denom > 1e-12 * scale) {
        return None;
    }
    let intercept = numer / denom;
    let slopes: Vec<f64> = sums
        .iter()
        .map(|(sx, sxx, sxy)| (sxy - intercept * sx) / sxx)
        .collect();

    let observed: Vec<f64> = groups
        .iter()
        .flat_map(|(_, ys)| ys.iter().copied())
        .collect();
    let predicted = groups
        .iter()
        .zip(&slopes)
        .flat_map(|((xs, _), m)| xs.iter().map(move |x| intercept + m * x));
    let r_squared = r_squared(&observed, predicted);
    Some(SharedInterceptFit {
        intercept,
        slopes,
        r_squared,
    })
}

/// Coefficient of determination. A constant series that is reproduced
/// exactly scores 1.
pub fn r_squared(observed: &[f64], predicted: impl Iterator<Item = f64>) -> f64 {
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&y, p) in observed.iter().zip(predicted) {
        ss_res += (y - p) * (y - p);
        ss_tot += (y - mean) * (y - mean);
    }
    let scale = observed
        .iter()
        .map(|y| y * y)
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    if ss_tot <= 1e-24 * scale {
        return if ss_res <= 1e-20 * scale { 1.0 } else { 0.0 };
    }
    1.0 - ss_res / ss_tot
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Population variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / xs.len() as f64
}

/// `(max - min) / mean`.
pub fn relative_spread(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = xs.iter().copied().fold(f64::INFINITY, f64::min);
    (max - min) / mean(xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_line() {
        let xs = [1.0, 2.0, 3.0, 4.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x - 1.0).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, 2.5, epsilon = 1e-12);
        assert_relative_eq!(fit.intercept, -1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_design() {
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
        assert!(linear_fit(&[1.0], &[0.0]).is_none());
    }

    #[test]
    fn shared_intercept_recovers_groups() {
        let groups: Vec<(Vec<f64>, Vec<f64>)> = [0.5, -1.0, 3.0]
            .iter()
            .map(|m| {
                let xs = vec![1.0, 2.0, 4.0];
                let ys = xs.iter().map(|x| 0.7 + m * x).collect();
                (xs, ys)
            })
            .collect();
        let fit = shared_intercept_fit(&groups).unwrap();
        assert_relative_eq!(fit.intercept, 0.7, epsilon = 1e-12);
        assert_relative_eq!(fit.slopes[1], -1.0, epsilon = 1e-12);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn shared_intercept_penalises_offsets() {
        let groups = vec![
            (vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]),
            (vec![1.0, 2.0, 3.0], vec![11.0, 12.0, 13.0]),
        ];
        let fit = shared_intercept_fit(&groups).unwrap();
        assert!(fit.r_squared < 0.9);
    }
}
