use super::labels::Class3;
use super::MetricsError;
use serde::{Deserialize, Serialize};

/// Unweighted Cohen's kappa with the agreement terms it was built from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaStat {
    pub value: f64,
    pub observed: f64,
    pub expected: f64,
}

/// 3×3 contingency table, rows indexed by `a`, columns by `b`.
pub fn contingency(a: &[Class3], b: &[Class3]) -> Result<[[u64; 3]; 3], MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut t = [[0u64; 3]; 3];
    for (x, y) in a.iter().zip(b) {
        t[x.index()][y.index()] += 1;
    }
    Ok(t)
}

pub fn cohen_kappa(a: &[Class3], b: &[Class3]) -> Result<KappaStat, MetricsError> {
    Ok(kappa_from_table(&contingency(a, b)?))
}

/// Kappa from a contingency table. When chance agreement is total (both
/// raters used one and the same class) the value is 1 for perfect observed
/// agreement and 0 otherwise.
pub fn kappa_from_table(t: &[[u64; 3]; 3]) -> KappaStat {
    let n: u64 = t.iter().flatten().sum();
    let diag: u64 = (0..3).map(|i| t[i][i]).sum();
    let mut chance = 0u64;
    for (i, row) in t.iter().enumerate() {
        let row_sum: u64 = row.iter().sum();
        let col_sum: u64 = t.iter().map(|r| r[i]).sum();
        chance += row_sum * col_sum;
    }
    let nf = n as f64;
    let observed = diag as f64 / nf;
    let expected = chance as f64 / (nf * nf);
    let value = if chance == n * n {
        if diag == n {
            1.0
        } else {
            0.0
        }
    } else {
        (observed - expected) / (1.0 - expected)
    };
    KappaStat {
        value,
        observed,
        expected,
    }
}

/// True when a pair would hit the degenerate chance-agreement convention.
pub(crate) fn is_degenerate(t: &[[u64; 3]; 3]) -> bool {
    let n: u64 = t.iter().flatten().sum();
    (0..3).any(|i| t[i][i] == n)
}
