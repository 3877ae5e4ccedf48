//! Synthetic broadband click injection for pipeline evaluation.

use crate::error::{Error, Result};
use crate::spectral::TimeSeries;
use rand::Rng;

/// Click waveform family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ClickWaveform {
    /// White Gaussian burst added on top of the signal.
    #[default]
    BroadbandBurst,
}

/// Where and how loud the injected clicks are.
///
/// Each click adds a burst of `duration_samples` samples whose per-sample
/// power sits `level_db` above the series' own mean power. Keep clicks
/// shorter than one PSD window or no rank-based filter can reject them.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ClickSpec {
    /// Click onset times in seconds.
    pub onsets_s: Vec<f64>,
    pub duration_samples: usize,
    /// Burst level above the background, in dB.
    pub level_db: f64,
    #[serde(default)]
    pub waveform: ClickWaveform,
}

impl ClickSpec {
    /// Randomly places `count` clicks with at least `min_gap_s` between
    /// onsets, all fitting inside `series_duration_s`. Built by drawing the
    /// inter-click gaps directly, so any feasible density succeeds.
    pub fn random(
        count: usize,
        duration_samples: usize,
        level_db: f64,
        series_duration_s: f64,
        min_gap_s: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        if count == 0 {
            return Err(Error::Argument("need at least one click".into()));
        }
        // reserve a margin at both ends plus the minimum gaps
        let slack = series_duration_s - min_gap_s * (count + 1) as f64;
        if slack <= 0.0 {
            return Err(Error::Argument(format!(
                "cannot fit {count} clicks {min_gap_s} s apart in {series_duration_s} s"
            )));
        }
        // count+1 random gap excesses, normalized to consume the slack
        let excesses: Vec<f64> = (0..=count).map(|_| rng.random::<f64>()).collect();
        let total: f64 = excesses.iter().sum();
        let mut onsets = Vec::with_capacity(count);
        let mut at = 0.0;
        for excess in &excesses[..count] {
            at += min_gap_s + excess / total * slack;
            onsets.push(at);
        }
        Ok(Self {
            onsets_s: onsets,
            duration_samples,
            level_db,
            waveform: ClickWaveform::BroadbandBurst,
        })
    }
}

fn gaussian(rng: &mut impl Rng) -> f64 {
    // Box-Muller
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Adds white bursts at the specified onsets. Burst variance is the series'
/// mean power times `10^(level_db/10)`, so a 0 dB click matches the
/// background power and a 30 dB click is 1000x louder.
pub fn inject_clicks(
    series: &TimeSeries,
    spec: &ClickSpec,
    rng: &mut impl Rng,
) -> Result<TimeSeries> {
    if spec.onsets_s.is_empty() {
        return Ok(series.clone());
    }
    if spec.duration_samples == 0 {
        return Err(Error::Argument("click duration must be positive".into()));
    }
    let fs = series.sample_rate_hz();
    let n = series.len();
    let background_power =
        series.samples().iter().map(|x| x * x).sum::<f64>() / n as f64;
    if background_power <= 0.0 {
        return Err(Error::Data("series has zero power; click level is undefined".into()));
    }
    let sigma = (background_power * 10f64.powf(spec.level_db / 10.0)).sqrt();

    let mut samples = series.samples().to_vec();
    for &onset in &spec.onsets_s {
        if !onset.is_finite() || onset < 0.0 {
            return Err(Error::Bounds(format!("click onset {onset} s outside the series")));
        }
        let start = (onset * fs).round() as usize;
        let end = start
            .checked_add(spec.duration_samples)
            .ok_or_else(|| Error::Bounds("click extent overflows".into()))?;
        if end > n {
            return Err(Error::Bounds(format!(
                "click at {onset} s runs past the end of the series"
            )));
        }
        match spec.waveform {
            ClickWaveform::BroadbandBurst => {
                for slot in &mut samples[start..end] {
                    *slot += sigma * gaussian(rng);
                }
            }
        }
    }
    TimeSeries::new(samples, fs)
}
