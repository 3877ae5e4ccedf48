//! Tapered periodograms and Welch-style segment averaging.
//!
//! A periodogram here is `(1/L) * |sum_l w[l] x[nD+l] exp(-j 2 pi f0 l)|^2`
//! evaluated at normalized frequencies `f0` in [0, 0.5] (cycles per sample).
//! No window-energy compensation is applied by default; an optional flag
//! divides by `sum(w^2)/L` for physically calibrated levels. All downstream
//! estimator comparisons are scale-covariant either way.

use crate::error::{Error, Result};
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// A real-valued, finite, nonempty sample sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    samples: Vec<f64>,
    sample_rate_hz: f64,
}

impl TimeSeries {
    pub fn new(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Data("time series must be nonempty".into()));
        }
        if sample_rate_hz <= 0.0 || !sample_rate_hz.is_finite() {
            return Err(Error::Data("sample rate must be positive and finite".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Data("time series contains a non-finite sample".into()));
        }
        Ok(Self { samples, sample_rate_hz })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }
}

/// Taper shapes supported by the pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hann,
    Rectangular,
}

impl WindowKind {
    pub fn name(self) -> &'static str {
        match self {
            WindowKind::Hann => "hann",
            WindowKind::Rectangular => "rectangular",
        }
    }
}

impl std::str::FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hann" => Ok(WindowKind::Hann),
            "rectangular" => Ok(WindowKind::Rectangular),
            other => Err(Error::Config(format!("unknown window kind '{other}'"))),
        }
    }
}

/// Window coefficients of a fixed length.
#[derive(Debug, Clone, PartialEq)]
pub struct TaperWindow {
    coefficients: Vec<f64>,
    kind: WindowKind,
}

impl TaperWindow {
    /// Builds a window of length `len >= 2`. Hann is the symmetric form
    /// `0.5 * (1 - cos(2 pi l / (L-1)))`, zero at both endpoints.
    pub fn new(kind: WindowKind, len: usize) -> Result<Self> {
        if len < 2 {
            return Err(Error::Argument("window length must be at least 2".into()));
        }
        let coefficients = match kind {
            WindowKind::Rectangular => vec![1.0; len],
            WindowKind::Hann => (0..len)
                .map(|l| {
                    0.5 * (1.0
                        - (2.0 * std::f64::consts::PI * l as f64 / (len - 1) as f64).cos())
                })
                .collect(),
        };
        Ok(Self { coefficients, kind })
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    /// `sum(w^2) / L`, the energy-compensation divisor.
    pub fn energy_per_sample(&self) -> f64 {
        let l = self.coefficients.len() as f64;
        self.coefficients.iter().map(|w| w * w).sum::<f64>() / l
    }
}

/// Segmenting and evaluation parameters for periodogram streams.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralConfig {
    /// Samples per segment (L).
    pub segment_length: usize,
    /// Samples between segment starts (D).
    pub segment_hop: usize,
    pub window: WindowKind,
    /// Normalized frequencies in [0, 0.5], cycles per sample.
    pub frequency_bins: Vec<f64>,
    /// Divide powers by `sum(w^2)/L` when true.
    pub energy_compensation: bool,
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.segment_length < 2 {
            return Err(Error::Argument("segment length must be at least 2".into()));
        }
        if self.segment_hop == 0 {
            return Err(Error::Argument("segment hop must be positive".into()));
        }
        if self.segment_hop > self.segment_length {
            return Err(Error::Argument(format!(
                "segment hop {} exceeds segment length {}",
                self.segment_hop, self.segment_length
            )));
        }
        if self.frequency_bins.is_empty() {
            return Err(Error::Argument("at least one frequency bin required".into()));
        }
        for &f in &self.frequency_bins {
            if !(0.0..=0.5).contains(&f) || !f.is_finite() {
                return Err(Error::Argument(format!(
                    "frequency bin {f} outside [0, 0.5]"
                )));
            }
        }
        Ok(())
    }

    /// The DFT grid `f0 = k/L` for `k = 0..=L/2`.
    pub fn full_grid(segment_length: usize) -> Vec<f64> {
        (0..=segment_length / 2).map(|k| k as f64 / segment_length as f64).collect()
    }

    /// True when `frequency_bins` is exactly the full half-spectrum grid, in
    /// which case an FFT evaluates all bins at once.
    pub fn is_full_grid(&self) -> bool {
        let grid = Self::full_grid(self.segment_length);
        self.frequency_bins.len() == grid.len()
            && self.frequency_bins.iter().zip(&grid).all(|(a, b)| a == b)
    }
}

/// One periodogram: power per configured frequency bin at one frame index.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodogramFrame {
    pub frame_index: usize,
    pub power: Vec<f64>,
}

/// Number of whole frames available: `floor((len - L)/D) + 1`, or 0.
pub fn frame_count(series_len: usize, segment_length: usize, segment_hop: usize) -> usize {
    if series_len < segment_length {
        0
    } else {
        (series_len - segment_length) / segment_hop + 1
    }
}

/// Evaluates one tapered periodogram by direct summation at each configured
/// frequency bin.
pub fn compute_periodogram(
    series: &TimeSeries,
    config: &SpectralConfig,
    frame_index: usize,
) -> Result<PeriodogramFrame> {
    config.validate()?;
    let l = config.segment_length;
    let start = frame_index * config.segment_hop;
    if start + l > series.len() {
        return Err(Error::Bounds(format!(
            "frame {frame_index} spans samples [{start}, {}) but series has {}",
            start + l,
            series.len()
        )));
    }
    let window = TaperWindow::new(config.window, l)?;
    let segment = &series.samples()[start..start + l];
    let comp = if config.energy_compensation { window.energy_per_sample() } else { 1.0 };

    let power = config
        .frequency_bins
        .iter()
        .map(|&f0| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (li, (&x, &w)) in segment.iter().zip(window.coefficients()).enumerate() {
                let angle = -2.0 * std::f64::consts::PI * f0 * li as f64;
                let v = w * x;
                re += v * angle.cos();
                im += v * angle.sin();
            }
            (re * re + im * im) / l as f64 / comp
        })
        .collect();

    Ok(PeriodogramFrame { frame_index, power })
}

/// Iterator over all frames of a series.
pub struct PeriodogramStream<'a> {
    series: &'a TimeSeries,
    config: &'a SpectralConfig,
    next_frame: usize,
    total: usize,
}

/// Yields frames `0..N` with `N = floor((len - L)/D) + 1`. Errors when the
/// series is shorter than one segment.
pub fn stream_periodograms<'a>(
    series: &'a TimeSeries,
    config: &'a SpectralConfig,
) -> Result<PeriodogramStream<'a>> {
    config.validate()?;
    let total = frame_count(series.len(), config.segment_length, config.segment_hop);
    if total == 0 {
        return Err(Error::Argument(format!(
            "series of {} samples is shorter than one {}-sample segment",
            series.len(),
            config.segment_length
        )));
    }
    Ok(PeriodogramStream { series, config, next_frame: 0, total })
}

impl Iterator for PeriodogramStream<'_> {
    type Item = PeriodogramFrame;

    fn next(&mut self) -> Option<PeriodogramFrame> {
        if self.next_frame >= self.total {
            return None;
        }
        let frame = compute_periodogram(self.series, self.config, self.next_frame)
            .expect("frame index in range");
        self.next_frame += 1;
        Some(frame)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let rem = self.total - self.next_frame;
        (rem, Some(rem))
    }
}

/// Per-bin arithmetic mean of a window of frames.
pub fn wosa_estimate(frames: &[PeriodogramFrame]) -> Result<Vec<f64>> {
    let first = frames
        .first()
        .ok_or_else(|| Error::Argument("wosa window must be nonempty".into()))?;
    let bins = first.power.len();
    if frames.iter().any(|f| f.power.len() != bins) {
        return Err(Error::Argument("frames have mismatched bin counts".into()));
    }
    let mut mean = vec![0.0; bins];
    for frame in frames {
        for (m, &p) in mean.iter_mut().zip(&frame.power) {
            *m += p;
        }
    }
    let inv = 1.0 / frames.len() as f64;
    for m in &mut mean {
        *m *= inv;
    }
    Ok(mean)
}

/// FFT evaluation of the full half-spectrum grid `f0 = k/L`, matching
/// [`compute_periodogram`] bin-for-bin on that grid.
pub struct FullGridPeriodogram {
    fft: Arc<dyn Fft<f64>>,
    window: TaperWindow,
    segment_length: usize,
    compensation: f64,
    scratch: Vec<Complex<f64>>,
}

impl FullGridPeriodogram {
    pub fn new(config: &SpectralConfig) -> Result<Self> {
        config.validate()?;
        let l = config.segment_length;
        let window = TaperWindow::new(config.window, l)?;
        let compensation =
            if config.energy_compensation { window.energy_per_sample() } else { 1.0 };
        let fft = FftPlanner::new().plan_fft_forward(l);
        let scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        Ok(Self { fft, window, segment_length: l, compensation, scratch })
    }

    pub fn bins(&self) -> usize {
        self.segment_length / 2 + 1
    }

    /// Powers at `k/L` for `k = 0..=L/2` of one L-sample segment.
    pub fn compute(&mut self, segment: &[f64]) -> Vec<f64> {
        assert_eq!(segment.len(), self.segment_length);
        let mut buf: Vec<Complex<f64>> = segment
            .iter()
            .zip(self.window.coefficients())
            .map(|(&x, &w)| Complex::new(x * w, 0.0))
            .collect();
        self.fft.process_with_scratch(&mut buf, &mut self.scratch);
        let scale = 1.0 / self.segment_length as f64 / self.compensation;
        buf[..=self.segment_length / 2].iter().map(|c| c.norm_sqr() * scale).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn series(samples: Vec<f64>) -> TimeSeries {
        TimeSeries::new(samples, 1000.0).unwrap()
    }

    fn cfg(l: usize, d: usize, window: WindowKind, bins: Vec<f64>) -> SpectralConfig {
        SpectralConfig {
            segment_length: l,
            segment_hop: d,
            window,
            frequency_bins: bins,
            energy_compensation: false,
        }
    }

    /// Straight-line oracle: the defining sum evaluated term by term.
    fn direct_power(segment: &[f64], window: &[f64], f0: f64) -> f64 {
        let mut re = 0.0;
        let mut im = 0.0;
        for (l, (&x, &w)) in segment.iter().zip(window).enumerate() {
            let angle = -2.0 * std::f64::consts::PI * f0 * l as f64;
            re += w * x * angle.cos();
            im += w * x * angle.sin();
        }
        (re * re + im * im) / segment.len() as f64
    }

    fn gaussian(rng: &mut impl Rng) -> f64 {
        // Box-Muller
        let u1: f64 = 1.0 - rng.random::<f64>();
        let u2: f64 = rng.random::<f64>();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    #[test]
    fn constant_signal_dc_power() {
        let c = 1.7;
        let s = series(vec![c; 8]);
        let frame =
            compute_periodogram(&s, &cfg(8, 8, WindowKind::Rectangular, vec![0.0]), 0).unwrap();
        assert_relative_eq!(frame.power[0], c * c * 8.0, max_relative = 1e-12);
    }

    #[test]
    fn impulse_is_flat() {
        let mut samples = vec![0.0; 4];
        samples[0] = 1.0;
        let s = series(samples);
        for f0 in [0.0, 0.125, 0.25, 0.5] {
            let frame =
                compute_periodogram(&s, &cfg(4, 4, WindowKind::Rectangular, vec![f0]), 0)
                    .unwrap();
            assert_relative_eq!(frame.power[0], 0.25, max_relative = 1e-12);
        }
    }

    #[test]
    fn pure_tone_power() {
        let l = 64;
        let samples: Vec<f64> = (0..l)
            .map(|i| (2.0 * std::f64::consts::PI * 0.25 * i as f64).cos())
            .collect();
        let s = series(samples.clone());
        let frame =
            compute_periodogram(&s, &cfg(l, l, WindowKind::Rectangular, vec![0.25]), 0).unwrap();
        // closed form L/4, and the term-by-term oracle
        assert_relative_eq!(frame.power[0], 16.0, max_relative = 1e-10);
        let oracle = direct_power(&samples, &vec![1.0; l], 0.25);
        assert_relative_eq!(frame.power[0], oracle, max_relative = 1e-12);
    }

    #[test]
    fn frame_counts() {
        assert_eq!(frame_count(512, 512, 128), 1);
        assert_eq!(frame_count(1024, 512, 128), 5);
        assert_eq!(frame_count(511, 512, 128), 0);
        let s = series(vec![0.0; 511]);
        assert!(stream_periodograms(&s, &cfg(512, 128, WindowKind::Hann, vec![0.0])).is_err());
    }

    #[test]
    fn stream_matches_compute() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = series((0..300).map(|_| rng.random::<f64>() - 0.5).collect());
        let c = cfg(64, 32, WindowKind::Hann, vec![0.0, 0.1, 0.5]);
        let frames: Vec<_> = stream_periodograms(&s, &c).unwrap().collect();
        assert_eq!(frames.len(), frame_count(300, 64, 32));
        for (n, frame) in frames.iter().enumerate() {
            assert_eq!(frame.frame_index, n);
            let direct = compute_periodogram(&s, &c, n).unwrap();
            assert_eq!(frame, &direct);
        }
    }

    #[test]
    fn out_of_range_frame() {
        let s = series(vec![0.0; 100]);
        let c = cfg(64, 32, WindowKind::Hann, vec![0.0]);
        assert!(matches!(compute_periodogram(&s, &c, 2), Err(Error::Bounds(_))));
    }

    #[test]
    fn wosa_examples() {
        let f = |p: Vec<f64>| PeriodogramFrame { frame_index: 0, power: p };
        // R=1 identity
        let one = wosa_estimate(&[f(vec![3.0, 4.0])]).unwrap();
        assert_eq!(one, vec![3.0, 4.0]);
        // mean of {1,2,3,4}
        let mean =
            wosa_estimate(&[f(vec![1.0]), f(vec![2.0]), f(vec![3.0]), f(vec![4.0])]).unwrap();
        assert_abs_diff_eq!(mean[0], 2.5, epsilon = 1e-15);
        // constants
        let frames: Vec<_> = (0..100).map(|_| f(vec![0.7])).collect();
        assert_relative_eq!(wosa_estimate(&frames).unwrap()[0], 0.7, max_relative = 1e-13);
        assert!(wosa_estimate(&[]).is_err());
    }

    #[test]
    fn wosa_linearity() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a: Vec<PeriodogramFrame> = (0..5)
            .map(|n| PeriodogramFrame {
                frame_index: n,
                power: (0..3).map(|_| rng.random::<f64>()).collect(),
            })
            .collect();
        let b: Vec<PeriodogramFrame> = (0..5)
            .map(|n| PeriodogramFrame {
                frame_index: n,
                power: (0..3).map(|_| rng.random::<f64>()).collect(),
            })
            .collect();
        let sum: Vec<PeriodogramFrame> = a
            .iter()
            .zip(&b)
            .map(|(x, y)| PeriodogramFrame {
                frame_index: x.frame_index,
                power: x.power.iter().zip(&y.power).map(|(p, q)| p + q).collect(),
            })
            .collect();
        let ea = wosa_estimate(&a).unwrap();
        let eb = wosa_estimate(&b).unwrap();
        let es = wosa_estimate(&sum).unwrap();
        for i in 0..3 {
            assert_relative_eq!(es[i], ea[i] + eb[i], max_relative = 1e-12);
        }
    }

    #[test]
    fn scaling_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let samples: Vec<f64> = (0..128).map(|_| rng.random::<f64>() - 0.5).collect();
            let factor: f64 = rng.random::<f64>() * 10.0 - 5.0;
            let scaled: Vec<f64> = samples.iter().map(|x| factor * x).collect();
            let c = cfg(64, 64, WindowKind::Hann, vec![0.0, 0.11, 0.37, 0.5]);
            let p1 = compute_periodogram(&series(samples), &c, 0).unwrap();
            let p2 = compute_periodogram(&series(scaled), &c, 0).unwrap();
            for (a, b) in p1.power.iter().zip(&p2.power) {
                assert_abs_diff_eq!(b, &(factor * factor * a), epsilon = 1e-9 * (1.0 + a.abs()));
                assert!(*a >= 0.0 && *b >= 0.0);
            }
        }
    }

    #[test]
    fn hann_endpoint_convention() {
        let w = TaperWindow::new(WindowKind::Hann, 9).unwrap();
        let c = w.coefficients();
        assert_abs_diff_eq!(c[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c[8], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(c[4], 1.0, epsilon = 1e-15);
        for i in 0..9 {
            assert_abs_diff_eq!(c[i], c[8 - i], epsilon = 1e-15);
        }
        assert!(TaperWindow::new(WindowKind::Hann, 1).is_err());
    }

    #[test]
    fn fft_path_agrees_with_direct_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for l in [64usize, 512] {
            for window in [WindowKind::Rectangular, WindowKind::Hann] {
                let samples: Vec<f64> = (0..l)
                    .map(|i| {
                        0.1 * gaussian(&mut rng)
                            + (2.0 * std::f64::consts::PI * 0.19 * i as f64).sin()
                    })
                    .collect();
                let c = cfg(l, l, window, SpectralConfig::full_grid(l));
                assert!(c.is_full_grid());
                let direct = compute_periodogram(&series(samples.clone()), &c, 0).unwrap();
                let mut fast = FullGridPeriodogram::new(&c).unwrap();
                let fft_power = fast.compute(&samples);
                assert_eq!(fft_power.len(), direct.power.len());
                let scale: f64 =
                    direct.power.iter().cloned().fold(0.0, f64::max) * 1e-12;
                for (k, (a, b)) in direct.power.iter().zip(&fft_power).enumerate() {
                    let tol = 1e-9 * a.max(*b) + scale;
                    assert!(
                        (a - b).abs() <= tol,
                        "bin {k} of L={l} {window:?}: direct={a} fft={b}"
                    );
                }
            }
        }
    }

    #[test]
    fn energy_compensation_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let samples: Vec<f64> = (0..64).map(|_| gaussian(&mut rng)).collect();
        let mut plain = cfg(64, 64, WindowKind::Hann, vec![0.25]);
        let mut comp = plain.clone();
        comp.energy_compensation = true;
        let p = compute_periodogram(&series(samples.clone()), &plain, 0).unwrap().power[0];
        let q = compute_periodogram(&series(samples.clone()), &comp, 0).unwrap().power[0];
        let w = TaperWindow::new(WindowKind::Hann, 64).unwrap();
        assert_relative_eq!(q, p / w.energy_per_sample(), max_relative = 1e-12);
        // rectangular window: compensation is a no-op
        plain.window = WindowKind::Rectangular;
        let mut rcomp = plain.clone();
        rcomp.energy_compensation = true;
        let p = compute_periodogram(&series(samples.clone()), &plain, 0).unwrap().power[0];
        let q = compute_periodogram(&series(samples), &rcomp, 0).unwrap().power[0];
        assert_relative_eq!(p, q, max_relative = 1e-12);
    }

    #[test]
    fn white_noise_dc_mean_matches_variance() {
        // rectangular window, f0 = 0: mean periodogram converges to the
        // input variance
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sigma = 0.4;
        let n_frames = 4000;
        let l = 32;
        let samples: Vec<f64> = (0..n_frames * l).map(|_| sigma * gaussian(&mut rng)).collect();
        let s = series(samples);
        let c = cfg(l, l, WindowKind::Rectangular, vec![0.0]);
        let mean: f64 = stream_periodograms(&s, &c)
            .unwrap()
            .map(|f| f.power[0])
            .sum::<f64>()
            / n_frames as f64;
        assert_relative_eq!(mean, sigma * sigma, max_relative = 0.1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(TimeSeries::new(vec![], 1.0).is_err());
        assert!(TimeSeries::new(vec![f64::NAN], 1.0).is_err());
        assert!(TimeSeries::new(vec![0.0], 0.0).is_err());
        let s = series(vec![0.0; 100]);
        assert!(compute_periodogram(&s, &cfg(64, 65, WindowKind::Hann, vec![0.0]), 0).is_err());
        assert!(compute_periodogram(&s, &cfg(64, 32, WindowKind::Hann, vec![0.6]), 0).is_err());
        assert!(compute_periodogram(&s, &cfg(64, 32, WindowKind::Hann, vec![]), 0).is_err());
    }
}
