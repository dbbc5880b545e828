//! Estimators over delivery records: time-average AoI, peak AoI, fairness,
//! empirical CDFs and confidence intervals.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::desim::{Delivery, FlowCounts, SimResult};
use crate::error::{Error, Result};

/// Deliveries that lower the age: each one carries a newer generation time
/// than every delivery before it. Returns `(generated, delivered)` pairs.
fn accepted_resets(deliveries: &[Delivery]) -> Result<Vec<(f64, f64)>> {
    if deliveries.windows(2).any(|w| w[1].delivered < w[0].delivered) {
        return Err(Error::InvalidConfig("deliveries must be sorted by delivery time".into()));
    }
    let mut freshest = f64::NEG_INFINITY;
    let mut out = Vec::with_capacity(deliveries.len());
    for d in deliveries {
        if d.generated > freshest {
            freshest = d.generated;
            out.push((d.generated, d.delivered));
        }
    }
    Ok(out)
}

/// Integral of `t - g` over `[s, e]`.
fn ramp_area(g: f64, s: f64, e: f64) -> f64 {
    (e - s) * (e + s - 2.0 * g) / 2.0
}

/// Area under the age curve over `[a, b]` and the length actually covered.
/// Coverage starts at the first reset if that comes after `a`.
fn age_area(resets: &[(f64, f64)], a: f64, b: f64) -> Option<(f64, f64)> {
    // Index of the last reset at or before `a`.
    let first_after = resets.partition_point(|r| r.1 <= a);
    let (mut idx, mut t) = match first_after {
        0 => (0, resets.first()?.1),
        n => (n - 1, a),
    };
    if t >= b {
        return None;
    }
    let start = t;
    let mut area = 0.0;
    loop {
        let g = resets[idx].0;
        let next = resets.get(idx + 1).map_or(f64::INFINITY, |r| r.1);
        let end = next.min(b);
        area += ramp_area(g, t, end);
        if next >= b {
            return Some((area, b - start));
        }
        t = next;
        idx += 1;
    }
}

fn check_window(window: (f64, f64)) -> Result<()> {
    if window.0 < window.1 && window.0.is_finite() && window.1.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("bad window [{}, {}]", window.0, window.1)))
    }
}

/// Time-average age over `window`. Deliveries must be sorted by delivery
/// time; deliveries older than the freshest one seen so far do not reset the
/// age. If the first delivery falls inside the window, averaging starts there.
pub fn time_average_aoi(deliveries: &[Delivery], window: (f64, f64)) -> Result<f64> {
    check_window(window)?;
    let resets = accepted_resets(deliveries)?;
    let (area, len) = age_area(&resets, window.0, window.1)
        .ok_or_else(|| Error::InsufficientData("no delivery before the window ends".into()))?;
    Ok(area / len)
}

/// Time-average age with a standard error from `batches` equal sub-windows.
pub fn time_average_aoi_batched(deliveries: &[Delivery], window: (f64, f64), batches: usize) -> Result<(f64, f64)> {
    check_window(window)?;
    if batches < 2 {
        return Err(Error::InvalidConfig("need at least two batches".into()));
    }
    let resets = accepted_resets(deliveries)?;
    let width = (window.1 - window.0) / batches as f64;
    let means = (0..batches)
        .map(|i| {
            let a = window.0 + i as f64 * width;
            let b = if i + 1 == batches { window.1 } else { a + width };
            age_area(&resets, a, b)
                .map(|(area, len)| area / len)
                .ok_or_else(|| Error::InsufficientData("no delivery before a batch window ends".into()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (_, se) = mean_and_se(&means)?;
    let total = time_average_aoi(deliveries, window)?;
    Ok((total, se))
}

/// Age just before every accepted reset except the first.
pub fn paoi_samples(deliveries: &[Delivery]) -> Result<Vec<f64>> {
    let resets = accepted_resets(deliveries)?;
    if resets.len() < 2 {
        return Err(Error::InsufficientData("peak age needs at least two deliveries".into()));
    }
    Ok(resets.windows(2).map(|w| w[1].1 - w[0].0).collect())
}

/// Jain's fairness index `(Σx)² / (N Σx²)`.
pub fn jain_fairness(values: &[f64]) -> Result<f64> {
    if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidConfig("fairness needs finite non-negative values".into()));
    }
    let s: f64 = values.iter().sum();
    let s2: f64 = values.iter().map(|v| v * v).sum();
    if !(s2 > 0.0) {
        return Err(Error::InsufficientData("fairness needs a positive value".into()));
    }
    Ok(s * s / (values.len() as f64 * s2))
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InsufficientData("no samples".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidConfig("samples contain NaN".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Fraction of samples `<= τ` at every grid point.
pub fn empirical_cdf(samples: &[f64], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    Ok(grid.iter().map(|&t| (t, v.partition_point(|&x| x <= t) as f64 / n)).collect())
}

/// Sup distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    let v = sorted(samples)?;
    let n = v.len() as f64;
    Ok(v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
        })
        .fold(0.0, f64::max))
}

/// Dvoretzky-Kiefer-Wolfowitz band half-width for `n` samples at level
/// `1 - alpha`.
pub fn dkw_epsilon(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / (2.0 * n as f64)).sqrt()
}

/// Linearly interpolated sample quantile, `q` in `[0, 1]`.
pub fn quantile(samples: &[f64], q: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidConfig(format!("quantile level {q} outside [0,1]")));
    }
    let v = sorted(samples)?;
    let pos = q * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::InsufficientData("need at least two samples".into()));
    }
    let n = samples.len() as f64;
    let m = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((m, (var / n).sqrt()))
}

/// Sample mean and normal-approximation half-width at `confidence`.
pub fn mean_with_ci(samples: &[f64], confidence: f64) -> Result<(f64, f64)> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::InvalidConfig(format!("confidence {confidence} outside (0,1)")));
    }
    let (m, se) = mean_and_se(samples)?;
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    Ok((m, z * se))
}

/// Mean and standard error from contiguous batch means, for correlated
/// sequences. Trailing samples that do not fill a batch are dropped from
/// the error estimate only.
pub fn batch_means(values: &[f64], batches: usize) -> Result<(f64, f64)> {
    if batches < 2 || values.len() < batches {
        return Err(Error::InsufficientData(format!("{} values cannot fill {batches} batches", values.len())));
    }
    let size = values.len() / batches;
    let means: Vec<f64> = values.chunks_exact(size).take(batches).map(|c| c.iter().sum::<f64>() / size as f64).collect();
    let (_, se) = mean_and_se(&means)?;
    Ok((values.iter().sum::<f64>() / values.len() as f64, se))
}

/// Metrics of one tracked source over its statistics window.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSummary {
    pub source: usize,
    pub mean_aoi: f64,
    pub se_aoi: f64,
    pub mean_paoi: f64,
    pub paoi_p50: f64,
    pub paoi_p90: f64,
    pub paoi_p99: f64,
    pub mean_delay: f64,
    pub se_delay: f64,
    pub deliveries: usize,
    pub peaks: usize,
    pub counts: FlowCounts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AoISummary {
    pub sources: Vec<SourceSummary>,
    /// Fairness over per-source mean AoI.
    pub jfi: f64,
}

impl AoISummary {
    /// Mean AoI averaged over sources, with the matching standard error.
    pub fn network_mean_aoi(&self) -> (f64, f64) {
        let n = self.sources.len() as f64;
        let m = self.sources.iter().map(|s| s.mean_aoi).sum::<f64>() / n;
        let v = self.sources.iter().map(|s| s.se_aoi * s.se_aoi).sum::<f64>() / (n * n);
        (m, v.sqrt())
    }
}

/// Default number of batches for standard errors.
pub const DEFAULT_BATCHES: usize = 30;

/// Summarizes every tracked flow of `result`. Age is averaged over the
/// window in time; peaks and delays use packets generated inside it.
pub fn summarize(result: &SimResult, batches: usize) -> Result<AoISummary> {
    let sources = result
        .tracked()
        .map(|(source, flow)| {
            let windowed: Vec<Delivery> = flow.windowed_deliveries().copied().collect();
            let (mean_aoi, se_aoi) = time_average_aoi_batched(&flow.deliveries, flow.window, batches)?;
            let peaks = paoi_samples(&windowed)?;
            let delays: Vec<f64> = windowed.iter().map(|d| d.delivered - d.generated).collect();
            let (mean_delay, se_delay) = batch_means(&delays, batches)?;
            Ok(SourceSummary {
                source,
                mean_aoi,
                se_aoi,
                mean_paoi: peaks.iter().sum::<f64>() / peaks.len() as f64,
                paoi_p50: quantile(&peaks, 0.5)?,
                paoi_p90: quantile(&peaks, 0.9)?,
                paoi_p99: quantile(&peaks, 0.99)?,
                mean_delay,
                se_delay,
                deliveries: windowed.len(),
                peaks: peaks.len(),
                counts: flow.counts.clone(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let jfi = jain_fairness(&sources.iter().map(|s| s.mean_aoi).collect::<Vec<_>>())?;
    Ok(AoISummary { sources, jfi })
}
