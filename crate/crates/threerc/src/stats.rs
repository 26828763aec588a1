//! Campaign summaries: Gaussian fits, histograms, JSON reports.

use thiserror::Error;

use crate::sim::{parse_campaign_csv, CsvError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("need at least 2 samples to fit, got {0}")]
    TooFewSamples(usize),
    #[error("bin width must be positive")]
    BadBinWidth,
    #[error("campaign is empty")]
    Empty,
    #[error(transparent)]
    Csv(#[from] CsvError),
}

/// Normal-fit summary of a sample: mean and sample (n-1) standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianFit {
    pub n: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: f64,
    pub max: f64,
}

/// Single-pass Welford fit; numerically stable against the naive
/// sum-of-squares route.
pub fn fit_gaussian(samples: &[f64]) -> Result<GaussianFit, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFewSamples(samples.len()));
    }
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for (i, &x) in samples.iter().enumerate() {
        let delta = x - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (x - mean);
        min = min.min(x);
        max = max.max(x);
    }
    Ok(GaussianFit {
        n: samples.len(),
        mean,
        sd: (m2 / (samples.len() - 1) as f64).sqrt(),
        min,
        max,
    })
}

/// Fixed-width histogram with half-open bins `[edge, edge + width)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    pub origin: f64,
    /// `(lower_edge, count)` for every bin between the extreme occupied
    /// ones, empty interior bins included.
    pub bins: Vec<(f64, u64)>,
}

pub fn histogram(samples: &[f64], bin_width: f64, origin: f64) -> Result<Histogram, StatsError> {
    if bin_width <= 0.0 || bin_width.is_nan() {
        return Err(StatsError::BadBinWidth);
    }
    if samples.is_empty() {
        return Ok(Histogram {
            bin_width,
            origin,
            bins: Vec::new(),
        });
    }
    let index = |x: f64| ((x - origin) / bin_width).floor() as i64;
    let lo = samples.iter().copied().map(index).min().unwrap();
    let hi = samples.iter().copied().map(index).max().unwrap();
    let mut counts = vec![0u64; (hi - lo + 1) as usize];
    for &x in samples {
        counts[(index(x) - lo) as usize] += 1;
    }
    Ok(Histogram {
        bin_width,
        origin,
        bins: counts
            .into_iter()
            .enumerate()
            .map(|(i, c)| (origin + (lo + i as i64) as f64 * bin_width, c))
            .collect(),
    })
}

/// Nearest-rank percentile of a sorted slice, `q` in (0, 1].
fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = ((q * sorted.len() as f64).ceil() as usize).max(1);
    sorted[rank.min(sorted.len()) - 1]
}

fn fmt3(x: f64) -> String {
    format!("{x:.3}")
}

fn json_string(s: &str) -> String {
    let mut out = String::from("\"");
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

/// Summarizes a campaign CSV as single-line JSON with a stable key order
/// and fixed 3-decimal numbers:
/// `{"scenario","n","mean","sd","min","max","p50","p95","histogram"}`.
///
/// A single-trial campaign has no defined standard deviation; the report
/// still carries the mean and renders `sd` as `null`.
pub fn report(csv_text: &str, bin_width: f64) -> Result<String, StatsError> {
    let (meta, samples) = parse_campaign_csv(csv_text)?;
    if samples.is_empty() {
        return Err(StatsError::Empty);
    }
    if bin_width <= 0.0 || bin_width.is_nan() {
        return Err(StatsError::BadBinWidth);
    }
    let times: Vec<f64> = samples.iter().map(|s| s.recovery_time as f64).collect();
    let mut sorted = times.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("recovery times are finite"));
    let (mean, sd) = match fit_gaussian(&times) {
        Ok(fit) => (fit.mean, Some(fit.sd)),
        Err(_) => (times[0], None),
    };
    let hist = histogram(&times, bin_width, 0.0)?;
    let mut out = String::from("{");
    out.push_str(&format!("\"scenario\":{},", json_string(&meta.scenario)));
    out.push_str(&format!("\"n\":{},", times.len()));
    out.push_str(&format!("\"mean\":{},", fmt3(mean)));
    match sd {
        Some(sd) => out.push_str(&format!("\"sd\":{},", fmt3(sd))),
        None => out.push_str("\"sd\":null,"),
    }
    out.push_str(&format!("\"min\":{},", fmt3(sorted[0])));
    out.push_str(&format!("\"max\":{},", fmt3(sorted[sorted.len() - 1])));
    out.push_str(&format!("\"p50\":{},", fmt3(percentile(&sorted, 0.50))));
    out.push_str(&format!("\"p95\":{},", fmt3(percentile(&sorted, 0.95))));
    out.push_str(&format!(
        "\"histogram\":{{\"bin_width\":{},\"origin\":{},\"bins\":[",
        fmt3(hist.bin_width),
        fmt3(hist.origin)
    ));
    let bins: Vec<String> = hist
        .bins
        .iter()
        .map(|(edge, count)| format!("[{},{}]", fmt3(*edge), count))
        .collect();
    out.push_str(&bins.join(","));
    out.push_str("]}}");
    Ok(out)
}
