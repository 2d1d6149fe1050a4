use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryStats {
    pub n: usize,
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single sample.
    pub stddev: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("cannot summarize an empty sample")]
pub struct EmptySample;

pub fn summarize(samples: &[f64]) -> Result<SummaryStats, EmptySample> {
    if samples.is_empty() {
        return Err(EmptySample);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    };
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let stddev = if n > 1 {
        let ss: f64 = sorted.iter().map(|x| (x - mean).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SummaryStats {
        n,
        min: sorted[0],
        median,
        mean,
        stddev,
    })
}

/// Median of a non-empty sample.
pub fn median(samples: &[f64]) -> Result<f64, EmptySample> {
    summarize(samples).map(|s| s.median)
}
