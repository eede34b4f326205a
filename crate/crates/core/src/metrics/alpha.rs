use super::MetricsError;

/// Cronbach's alpha over a rater × exam score matrix, using population
/// (denominator n) variances throughout.
pub fn cronbach_alpha(scores: &[Vec<f64>]) -> Result<f64, MetricsError> {
    let k = scores.len();
    if k < 2 {
        return Err(MetricsError::TooFew("raters", k));
    }
    let n = scores[0].len();
    if n < 2 {
        return Err(MetricsError::TooFew("exams", n));
    }
    if let Some(row) = scores.iter().find(|r| r.len() != n) {
        return Err(MetricsError::LengthMismatch(n, row.len()));
    }
    let item_var: f64 = scores.iter().map(|row| population_variance(row)).sum();
    let totals: Vec<f64> = (0..n)
        .map(|j| scores.iter().map(|row| row[j]).sum())
        .collect();
    let total_var = population_variance(&totals);
    if total_var == 0.0 {
        return Err(MetricsError::ZeroVariance);
    }
    let kf = k as f64;
    Ok(kf / (kf - 1.0) * (1.0 - item_var / total_var))
}

fn population_variance(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_raters_give_one() {
        let row = vec![3.0, 7.0, 5.0, 9.0];
        assert_eq!(
            cronbach_alpha(&[row.clone(), row.clone(), row]).unwrap(),
            1.0
        );
    }

    #[test]
    fn opposite_raters_have_zero_total_variance() {
        let r = cronbach_alpha(&[vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0]]);
        assert!(matches!(r, Err(MetricsError::ZeroVariance)));
    }

    #[test]
    fn hand_computed_six_sevenths() {
        let a = cronbach_alpha(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 5.0]]).unwrap();
        assert!((a - 6.0 / 7.0).abs() < 1e-12, "{a}");
    }

    #[test]
    fn shape_errors() {
        assert!(matches!(
            cronbach_alpha(&[vec![1.0, 2.0]]),
            Err(MetricsError::TooFew("raters", 1))
        ));
        assert!(matches!(
            cronbach_alpha(&[vec![1.0], vec![2.0]]),
            Err(MetricsError::TooFew("exams", 1))
        ));
        assert!(matches!(
            cronbach_alpha(&[vec![1.0, 2.0], vec![2.0]]),
            Err(MetricsError::LengthMismatch(2, 1))
        ));
    }
}
