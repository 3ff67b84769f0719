//! Logistic ("softmax") scaling of a sample by its own mean and standard deviation.

/// Largest `f64` strictly below 1; keeps scaled values inside the open unit interval.
const BELOW_ONE: f64 = 1.0 - f64::EPSILON / 2.0;

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Maps each value `v` to `1 / (1 + exp(-(v - mean) / std))`.
///
/// A sample whose values are all identical maps to 0.5 everywhere.
pub fn logistic_scale(values: &[f64]) -> Vec<f64> {
    let (mean, std) = mean_std(values);
    let degenerate = std == 0.0 || values.iter().all(|&v| v == values[0]);
    values
        .iter()
        .map(|&v| if degenerate { 0.5 } else { logistic((v - mean) / std) })
        .collect()
}

pub(crate) fn logistic(z: f64) -> f64 {
    let y = 1.0 / (1.0 + (-z).exp());
    y.clamp(f64::MIN_POSITIVE, BELOW_ONE)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_maps_to_one_half() {
        let out = logistic_scale(&[1.0, 2.0, 3.0]);
        assert_eq!(out[1], 0.5);
    }

    #[test]
    fn constant_sample_is_neutral() {
        assert_eq!(logistic_scale(&[0.1, 0.1, 0.1]), vec![0.5; 3]);
    }

    #[test]
    fn extreme_values_stay_open() {
        let mut v = vec![0.0; 10_000];
        v[0] = 1.0;
        let out = logistic_scale(&v);
        assert!(out[0] < 1.0 && out[1] > 0.0);
    }
}
