use super::kappa::{cohen_kappa, is_degenerate, kappa_from_table};
use super::labels::Class3;
use super::MetricsError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DEFAULT_RESAMPLES: usize = 100;
/// Draws allowed per resample before giving up on degenerate data.
pub const MAX_REDRAWS: usize = 1000;

/// Bootstrap summary of Cohen's kappa over exam resamples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapKappa {
    pub kappa_point: f64,
    pub kappa_mean: f64,
    /// Population standard deviation of the resample kappas.
    pub kappa_std: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub resamples: usize,
    #[serde(skip)]
    pub samples: Vec<f64>,
}

impl BootstrapKappa {
    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn bootstrap_kappa_seeded(
    a: &[Class3],
    b: &[Class3],
    resamples: usize,
    seed: u64,
) -> Result<BootstrapKappa, MetricsError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    bootstrap_kappa(a, b, resamples, &mut rng)
}

/// Resample exams with replacement `resamples` times and summarise kappa.
/// Resamples in which both raters collapse onto the same single class are
/// redrawn.
pub fn bootstrap_kappa<R: Rng + ?Sized>(
    a: &[Class3],
    b: &[Class3],
    resamples: usize,
    rng: &mut R,
) -> Result<BootstrapKappa, MetricsError> {
    let point = cohen_kappa(a, b)?.value;
    let n = a.len();
    if n < 2 {
        return Err(MetricsError::TooFew("exams", n));
    }
    if resamples == 0 {
        return Err(MetricsError::TooFew("resamples", 0));
    }
    let mut samples = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut attempt = 0;
        let table = loop {
            if attempt == MAX_REDRAWS {
                return Err(MetricsError::RedrawLimit(MAX_REDRAWS));
            }
            attempt += 1;
            let mut t = [[0u64; 3]; 3];
            for _ in 0..n {
                let i = rng.random_range(0..n);
                t[a[i].index()][b[i].index()] += 1;
            }
            if !is_degenerate(&t) {
                break t;
            }
        };
        samples.push(kappa_from_table(&table).value);
    }
    let mean = samples.iter().sum::<f64>() / resamples as f64;
    let var = samples.iter().map(|k| (k - mean) * (k - mean)).sum::<f64>() / resamples as f64;
    let mut sorted = samples.clone();
    sorted.sort_by(f64::total_cmp);
    Ok(BootstrapKappa {
        kappa_point: point,
        kappa_mean: mean,
        kappa_std: var.sqrt(),
        ci_low: percentile(&sorted, 2.5),
        ci_high: percentile(&sorted, 97.5),
        resamples,
        samples,
    })
}

/// Percentile of sorted data, linearly interpolating between closest ranks.
pub fn percentile(sorted: &[f64], pct: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        len => {
            let h = (len - 1) as f64 * pct / 100.0;
            let lo = h.floor() as usize;
            let hi = (lo + 1).min(len - 1);
            sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[u8]) -> Vec<Class3> {
        v.iter().map(|&x| Class3::try_from(x).unwrap()).collect()
    }

    #[test]
    fn percentile_interpolates() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&s, 0.0), 1.0);
        assert_eq!(percentile(&s, 50.0), 3.0);
        assert_eq!(percentile(&s, 100.0), 5.0);
        assert!((percentile(&s, 2.5) - 1.1).abs() < 1e-12);
        assert!((percentile(&s, 97.5) - 4.9).abs() < 1e-12);
    }

    #[test]
    fn perfect_pair_is_constant() {
        let a = c(&[0, 1, 2, 0, 1, 2, 0, 0]);
        let r = bootstrap_kappa_seeded(&a, &a, 100, 7).unwrap();
        assert_eq!(r.kappa_mean, 1.0);
        assert_eq!(r.kappa_std, 0.0);
        assert_eq!((r.ci_low, r.ci_high), (1.0, 1.0));
        assert_eq!(r.samples.len(), 100);
    }

    #[test]
    fn seeded_runs_repeat() {
        let a = c(&[0, 1, 2, 0, 1, 2, 0, 0, 1, 1]);
        let b = c(&[0, 1, 1, 0, 2, 2, 1, 0, 1, 0]);
        let x = bootstrap_kappa_seeded(&a, &b, 100, 42).unwrap();
        let y = bootstrap_kappa_seeded(&a, &b, 100, 42).unwrap();
        assert_eq!(x, y);
        assert_eq!(x.samples, y.samples);
        assert!(x.ci_low <= x.ci_high);
    }

    #[test]
    fn constant_data_exhausts_redraws() {
        let a = c(&[1, 1, 1, 1]);
        assert!(matches!(
            bootstrap_kappa_seeded(&a, &a, 10, 1),
            Err(MetricsError::RedrawLimit(MAX_REDRAWS))
        ));
    }

    #[test]
    fn needs_two_exams() {
        let a = c(&[1]);
        assert!(matches!(
            bootstrap_kappa_seeded(&a, &a, 10, 1),
            Err(MetricsError::TooFew("exams", 1))
        ));
    }
}
