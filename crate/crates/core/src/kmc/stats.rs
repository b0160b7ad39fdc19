use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::TransitionRecord;
use crate::error::{Error, Result};

pub const MIN_RECORDS: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KsTest {
    pub n: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Asymptotic Kolmogorov tail with Stephens' small-sample correction.
pub fn kolmogorov_p(d: f64, n: usize) -> f64 {
    let sn = (n as f64).sqrt();
    let lambda = (sn + 0.12 + 0.11 / sn) * d;
    if lambda <= 0.0 {
        return 1.0;
    }
    let p = if lambda < 1.18 {
        let s: f64 = (1..=50)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * PI * PI / (8.0 * lambda * lambda)).exp())
            .sum();
        1.0 - (2.0 * PI).sqrt() / lambda * s
    } else {
        2.0 * (1..=50)
            .map(|k| {
                let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * (k * k) as f64 * lambda * lambda).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

/// One-sample KS test of `x` against Exp(1).
pub fn ks_exponential(x: &[f64]) -> KsTest {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let d = v
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let f = -(-t.max(0.0)).exp_m1();
            ((i + 1) as f64 / n as f64 - f).max(f - i as f64 / n as f64)
        })
        .fold(0.0, f64::max);
    KsTest { n, statistic: d, p_value: kolmogorov_p(d, n) }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Pearson test of `counts` against equal cell probabilities.
pub fn chi_square_uniform(counts: &[u64]) -> Option<ChiSquare> {
    let total: u64 = counts.iter().sum();
    if counts.len() < 2 || total == 0 {
        return None;
    }
    let e = total as f64 / counts.len() as f64;
    let statistic: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
    let df = counts.len() - 1;
    let p_value = ChiSquared::new(df as f64).ok()?.sf(statistic);
    Some(ChiSquare { statistic, df, p_value })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BatchStatistics {
    pub beta: f64,
    pub run_count: usize,
    pub complete: usize,
    pub mean_time: f64,
    pub stderr: f64,
    pub mean_excursions: f64,
    /// Normalised times `τ / mean` against Exp(1).
    pub ks: KsTest,
    /// `C*_bd` codes, the histogram cells.
    pub cells: Vec<u64>,
    pub entrance_histogram: Vec<u64>,
    /// Final excursions that never entered `C*_bd`.
    pub unrecorded: usize,
    pub chi_square: Option<ChiSquare>,
    pub gate_passage_fraction: f64,
    /// `e^{−βΓ*} · mean · Θ`.
    pub arrhenius_ratio: Option<f64>,
}

impl BatchStatistics {
    pub fn compute(records: &[TransitionRecord], cells: &[u64], beta: f64, gamma_star: f64, theta: Option<f64>) -> Result<Self> {
        let done: Vec<&TransitionRecord> = records.iter().filter(|r| r.complete).collect();
        if done.len() < MIN_RECORDS {
            return Err(Error::InsufficientRecords { needed: MIN_RECORDS, got: done.len() });
        }
        let n = done.len() as f64;
        let times: Vec<f64> = done.iter().map(|r| r.hitting_time).collect();
        let mean = times.iter().sum::<f64>() / n;
        let var = times.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let ks = ks_exponential(&times.iter().map(|t| t / mean).collect::<Vec<_>>());
        let mut histogram = vec![0u64; cells.len()];
        let mut unrecorded = 0;
        for r in &done {
            match r.gate_entrance.and_then(|c| cells.binary_search(&c).ok()) {
                Some(k) => histogram[k] += 1,
                None => unrecorded += 1,
            }
        }
        let passed = done.iter().filter(|r| r.passed_through_cstar).count();
        Ok(Self {
            beta,
            run_count: records.len(),
            complete: done.len(),
            mean_time: mean,
            stderr: (var / n).sqrt(),
            mean_excursions: done.iter().map(|r| r.excursion_count as f64).sum::<f64>() / n,
            ks,
            chi_square: chi_square_uniform(&histogram),
            cells: cells.to_vec(),
            entrance_histogram: histogram,
            unrecorded,
            gate_passage_fraction: passed as f64 / n,
            arrhenius_ratio: theta.map(|th| (-beta * gamma_star + mean.ln() + th.ln()).exp()),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kolmogorov_tail_values() {
        // Q(λ) at λ = 1.36 is the 5% point, λ = 1.63 the 1% point
        let n = 1_000_000;
        assert!((kolmogorov_p(1.3581 / (n as f64).sqrt(), n) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_p(1.6276 / (n as f64).sqrt(), n) - 0.01).abs() < 1e-3);
        assert!((kolmogorov_p(0.5 / (n as f64).sqrt(), n) - 0.9639).abs() < 1e-3);
    }

    #[test]
    fn exponential_samples_mostly_pass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let trials = 200;
        let passes = (0..trials)
            .filter(|_| {
                let x: Vec<f64> = (0..500).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
                ks_exponential(&x).p_value > 0.01
            })
            .count();
        assert!(passes as f64 >= 0.95 * trials as f64, "{passes}");
    }

    #[test]
    fn uniform_rejects_skew() {
        assert!(chi_square_uniform(&[50, 50, 50, 50]).unwrap().p_value > 0.99);
        assert!(chi_square_uniform(&[190, 10]).unwrap().p_value < 1e-6);
        assert!(chi_square_uniform(&[3]).is_none());
    }

    #[test]
    fn too_few_records() {
        assert!(matches!(
            BatchStatistics::compute(&[], &[], 1.0, 1.0, None),
            Err(Error::InsufficientRecords { .. })
        ));
    }
}
