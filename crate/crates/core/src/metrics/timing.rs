use std::collections::BTreeMap;
use std::time::Duration;

/// Summary of one stage's sample set, in seconds. Percentiles use the
/// nearest-rank rule on the sorted samples.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub count: usize,
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
    pub max: f64,
}

impl TimingReport {
    pub fn from_seconds(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let rank = |p: f64| -> f64 {
            let k = ((p / 100.0) * n as f64).ceil() as usize;
            sorted[k.clamp(1, n) - 1]
        };
        Some(Self {
            count: n,
            mean: sorted.iter().sum::<f64>() / n as f64,
            p50: rank(50.0),
            p95: rank(95.0),
            max: sorted[n - 1],
        })
    }
}

/// Per-stage duration collector. Stages with no samples are absent from
/// the report.
#[derive(Debug, Clone, Default)]
pub struct StageTimings {
    samples: BTreeMap<String, Vec<f64>>,
}

impl StageTimings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, stage: &str, d: Duration) {
        self.record_seconds(stage, d.as_secs_f64());
    }

    pub fn record_seconds(&mut self, stage: &str, secs: f64) {
        self.samples.entry(stage.to_string()).or_default().push(secs);
    }

    pub fn merge(&mut self, other: &StageTimings) {
        for (stage, vals) in &other.samples {
            self.samples
                .entry(stage.clone())
                .or_default()
                .extend_from_slice(vals);
        }
    }

    pub fn report(&self) -> BTreeMap<String, TimingReport> {
        self.samples
            .iter()
            .filter_map(|(k, v)| TimingReport::from_seconds(v).map(|r| (k.clone(), r)))
            .collect()
    }
}
