//! Spectrogram estimation pipeline: WAV ingestion, click injection, per-bin
//! PSD estimator streams, and CSV/JSON emission.
//!
//! Every frequency bin runs independently: the engine keeps the most recent
//! R periodogram values per bin, sorts them incrementally, and at every Q-th
//! periodogram emits the configured estimators. Universal filter state is
//! carried per bin across the whole run (optionally with one shared blend
//! across bins).

pub mod clicks;
pub mod emit;
pub mod kvconfig;
pub mod manifest;
pub mod wav;

use crate::error::{Error, Result};
use crate::osf::{self, OsfKind};
use crate::spectral::{FullGridPeriodogram, SpectralConfig, TaperWindow, TimeSeries};
use crate::universal::{blending_weights, UniversalConfig, UniversalState};
use rayon::prelude::*;
use std::collections::BTreeMap;

pub use clicks::{inject_clicks, ClickSpec, ClickWaveform};
pub use wav::{parse_wav, read_wav, write_wav_f32};

/// dB floor used for zero/negative powers.
pub const DB_FLOOR: f64 = -300.0;

/// `10 log10(power)` with a floor at −300 dB.
pub fn to_db(power: f64) -> f64 {
    if power > 0.0 {
        (10.0 * power.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Spectrogram estimators the pipeline can emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// The single periodogram at the center of each PSD window.
    Raw,
    /// Arithmetic mean of the R windowed periodograms.
    Wosa,
    /// Universal blend over SAWP threshold ranks.
    Usawp,
    /// Universal blend over TLOSF threshold ranks.
    Utlosf,
}

impl Estimator {
    pub fn name(self) -> &'static str {
        match self {
            Estimator::Raw => "raw",
            Estimator::Wosa => "wosa",
            Estimator::Usawp => "usawp",
            Estimator::Utlosf => "utlosf",
        }
    }

    pub const ALL: [Estimator; 4] =
        [Estimator::Raw, Estimator::Wosa, Estimator::Usawp, Estimator::Utlosf];
}

impl std::fmt::Display for Estimator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Estimator::Raw),
            "wosa" => Ok(Estimator::Wosa),
            "usawp" => Ok(Estimator::Usawp),
            "utlosf" => Ok(Estimator::Utlosf),
            other => Err(Error::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Parses a comma-separated estimator list, e.g. `"wosa,usawp,utlosf"`.
pub fn parse_estimators(text: &str) -> Result<Vec<Estimator>> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let est: Estimator = part.parse()?;
        if !out.contains(&est) {
            out.push(est);
        }
    }
    if out.is_empty() {
        return Err(Error::Config("estimator list is empty".into()));
    }
    Ok(out)
}

/// Full pipeline parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub spectral: SpectralConfig,
    /// Periodograms per PSD estimate (R).
    pub psd_window: usize,
    /// Periodogram hops between PSD estimates (Q).
    pub psd_hop: usize,
    /// Softmax temperature for the universal filters.
    pub c: f64,
    /// Loss window length in PSD steps.
    pub tau: usize,
    pub estimators: Vec<Estimator>,
    /// Sum losses across frequency bins so one blend drives all bins.
    pub shared_blend: bool,
}

impl PipelineConfig {
    /// The observational preset: L=512 hann, D=128, R=100, Q=1, tau=500,
    /// c=1e5, full half-spectrum grid. `c` assumes raw-amplitude input; see
    /// the README note on matching `c` to the data scale.
    pub fn real_data_preset() -> Self {
        Self {
            spectral: SpectralConfig {
                segment_length: 512,
                segment_hop: 128,
                window: crate::spectral::WindowKind::Hann,
                frequency_bins: SpectralConfig::full_grid(512),
                energy_compensation: false,
            },
            psd_window: 100,
            psd_hop: 1,
            c: 1e5,
            tau: 500,
            estimators: Estimator::ALL.to_vec(),
            shared_blend: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spectral.validate()?;
        if self.psd_window == 0 {
            return Err(Error::Argument("PSD window R must be at least 1".into()));
        }
        if self.psd_hop == 0 || self.psd_hop > self.psd_window {
            return Err(Error::Argument(format!(
                "PSD hop Q = {} outside [1, R = {}]",
                self.psd_hop, self.psd_window
            )));
        }
        if self.c <= 0.0 || !self.c.is_finite() {
            return Err(Error::Argument("c must be positive".into()));
        }
        if self.tau == 0 {
            return Err(Error::Argument("tau must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::Argument("at least one estimator required".into()));
        }
        Ok(())
    }

    fn universal_config(&self, kind: OsfKind) -> UniversalConfig {
        UniversalConfig::new(self.psd_window, kind, self.c, self.tau)
    }
}

/// One estimator's spectrogram: T×F linear powers with axis vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub estimator: Estimator,
    /// Window-center time of each PSD estimate, seconds.
    pub time_s: Vec<f64>,
    /// Bin frequencies in Hz.
    pub freq_hz: Vec<f64>,
    /// `rows[t][f]`, linear power.
    pub rows: Vec<Vec<f64>>,
}

/// Worker pool honoring the `UOSF_THREADS` cap.
pub fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var("UOSF_THREADS") {
        let n: usize = raw
            .parse()
            .map_err(|_| Error::Config(format!("UOSF_THREADS='{raw}' is not a thread count")))?;
        if n == 0 {
            return Err(Error::Config("UOSF_THREADS must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::Config(format!("failed to build worker pool: {e}")))
}

/// Streaming spectrogram computation: feed samples in arbitrary chunks, then
/// finalize. Chunking does not change any arithmetic, so outputs are
/// bit-identical to whole-file processing.
pub struct SpectrogramEngine {
    config: PipelineConfig,
    sample_rate_hz: f64,
    pending: Vec<f64>,
    /// Row-major n_frames × n_bins periodogram powers.
    frames: Vec<f64>,
    n_frames: usize,
    n_bins: usize,
    fast: Option<FullGridPeriodogram>,
    window: TaperWindow,
}

impl SpectrogramEngine {
    pub fn new(config: PipelineConfig, sample_rate_hz: f64) -> Result<Self> {
        config.validate()?;
        if sample_rate_hz <= 0.0 || !sample_rate_hz.is_finite() {
            return Err(Error::Argument("sample rate must be positive".into()));
        }
        let fast = if config.spectral.is_full_grid() {
            Some(FullGridPeriodogram::new(&config.spectral)?)
        } else {
            None
        };
        let window = TaperWindow::new(config.spectral.window, config.spectral.segment_length)?;
        let n_bins = config.spectral.frequency_bins.len();
        Ok(Self {
            config,
            sample_rate_hz,
            pending: Vec::new(),
            frames: Vec::new(),
            n_frames: 0,
            n_bins,
            fast,
            window,
        })
    }

    /// Appends samples and computes every periodogram that becomes complete.
    pub fn push_samples(&mut self, samples: &[f64]) -> Result<()> {
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::Data("non-finite sample".into()));
        }
        self.pending.extend_from_slice(samples);
        let l = self.config.spectral.segment_length;
        let d = self.config.spectral.segment_hop;
        let mut consumed = 0;
        while self.pending.len() - consumed >= l {
            let segment = &self.pending[consumed..consumed + l];
            match &mut self.fast {
                Some(fast) => self.frames.extend(fast.compute(segment)),
                None => {
                    let comp = if self.config.spectral.energy_compensation {
                        self.window.energy_per_sample()
                    } else {
                        1.0
                    };
                    for &f0 in &self.config.spectral.frequency_bins {
                        let mut re = 0.0;
                        let mut im = 0.0;
                        for (li, (&x, &w)) in
                            segment.iter().zip(self.window.coefficients()).enumerate()
                        {
                            let angle = -2.0 * std::f64::consts::PI * f0 * li as f64;
                            let v = w * x;
                            re += v * angle.cos();
                            im += v * angle.sin();
                        }
                        self.frames.push((re * re + im * im) / l as f64 / comp);
                    }
                }
            }
            self.n_frames += 1;
            consumed += d;
        }
        self.pending.drain(..consumed);
        Ok(())
    }

    pub fn frames_ready(&self) -> usize {
        self.n_frames
    }

    /// Runs the per-bin estimator pass over all accumulated periodograms.
    pub fn finalize(self) -> Result<BTreeMap<Estimator, Spectrogram>> {
        let cfg = &self.config;
        let r = cfg.psd_window;
        let q = cfg.psd_hop;
        let n = self.n_frames;
        if n < r {
            return Err(Error::Argument(format!(
                "only {n} periodograms available; R = {r} required"
            )));
        }
        let t_total = (n - r) / q + 1;
        let n_bins = self.n_bins;
        let d = cfg.spectral.segment_hop;
        let l = cfg.spectral.segment_length;
        let fs = self.sample_rate_hz;

        let time_s: Vec<f64> = (0..t_total)
            .map(|t| ((t * q * d) as f64 + ((r - 1) * d + l) as f64 / 2.0) / fs)
            .collect();
        let freq_hz: Vec<f64> =
            cfg.spectral.frequency_bins.iter().map(|f0| f0 * fs).collect();

        // columns[est][bin][t]
        let pool = worker_pool()?;
        let columns: Vec<Vec<Vec<f64>>> = if cfg.shared_blend {
            self.finalize_shared(t_total)?
        } else {
            pool.install(|| {
                (0..n_bins)
                    .into_par_iter()
                    .map(|bin| self.run_bin(bin, t_total))
                    .collect::<Result<Vec<_>>>()
            })?
            // transpose bin-major -> estimator-major
            .into_iter()
            .enumerate()
            .fold(
                vec![vec![Vec::new(); n_bins]; cfg.estimators.len()],
                |mut acc, (bin, per_est)| {
                    for (e, series) in per_est.into_iter().enumerate() {
                        acc[e][bin] = series;
                    }
                    acc
                },
            )
        };

        let mut out = BTreeMap::new();
        for (e, &est) in cfg.estimators.iter().enumerate() {
            let rows: Vec<Vec<f64>> = (0..t_total)
                .map(|t| (0..n_bins).map(|bin| columns[e][bin][t]).collect())
                .collect();
            out.insert(
                est,
                Spectrogram { estimator: est, time_s: time_s.clone(), freq_hz: freq_hz.clone(), rows },
            );
        }
        Ok(out)
    }

    fn frame_value(&self, frame: usize, bin: usize) -> f64 {
        self.frames[frame * self.n_bins + bin]
    }

    /// Independent per-bin pass: returns `[estimator][t]` series for one bin.
    fn run_bin(&self, bin: usize, t_total: usize) -> Result<Vec<Vec<f64>>> {
        let cfg = &self.config;
        let r = cfg.psd_window;
        let q = cfg.psd_hop;
        let mut series: Vec<Vec<f64>> =
            cfg.estimators.iter().map(|_| Vec::with_capacity(t_total)).collect();

        let mut window = SortedWindow::new(r);
        let mut wosa_sum = 0.0;
        let mut usawp = cfg
            .estimators
            .contains(&Estimator::Usawp)
            .then(|| UniversalState::new(&cfg.universal_config(OsfKind::Sawp)))
            .transpose()?;
        let mut utlosf = cfg
            .estimators
            .contains(&Estimator::Utlosf)
            .then(|| UniversalState::new(&cfg.universal_config(OsfKind::Tlosf)))
            .transpose()?;

        for n in 0..self.n_frames {
            let value = self.frame_value(n, bin);
            if let Some(evicted) = window.push(value) {
                wosa_sum += value - evicted;
            } else {
                wosa_sum += value;
            }
            if n + 1 < r || !(n + 1 - r).is_multiple_of(q) {
                continue;
            }
            let t = (n + 1 - r) / q;
            debug_assert!(t < t_total);
            for (slot, est) in series.iter_mut().zip(&cfg.estimators) {
                let value = match est {
                    Estimator::Raw => {
                        let center = t * q + (r - 1) / 2;
                        self.frame_value(center, bin)
                    }
                    Estimator::Wosa => wosa_sum / r as f64,
                    Estimator::Usawp => {
                        usawp.as_mut().expect("state allocated").step_sorted(window.sorted())
                    }
                    Estimator::Utlosf => {
                        utlosf.as_mut().expect("state allocated").step_sorted(window.sorted())
                    }
                };
                slot.push(value);
            }
        }
        Ok(series)
    }

    /// Shared-blend pass: per-bin windows, but one loss accumulator and one
    /// blend per kind summed across bins.
    fn finalize_shared(&self, t_total: usize) -> Result<Vec<Vec<Vec<f64>>>> {
        let cfg = &self.config;
        let r = cfg.psd_window;
        let q = cfg.psd_hop;
        let n_bins = self.n_bins;
        let alphas = osf::sawp_alphas(r);

        struct SharedBlend {
            kind: OsfKind,
            c: f64,
            rings: Vec<std::collections::VecDeque<f64>>,
            sums: Vec<f64>,
            tau: usize,
            mu: Vec<f64>,
        }
        impl SharedBlend {
            fn absorb(&mut self, per_rank_sq: &[f64]) {
                for ((ring, sum), &sq) in
                    self.rings.iter_mut().zip(&mut self.sums).zip(per_rank_sq)
                {
                    ring.push_back(sq);
                    *sum += sq;
                    if ring.len() > self.tau {
                        *sum -= ring.pop_front().expect("nonempty");
                    }
                }
                self.mu = blending_weights(&self.sums, self.c).expect("finite losses");
            }
        }
        let mut shared: Vec<SharedBlend> = [OsfKind::Sawp, OsfKind::Tlosf]
            .iter()
            .filter(|kind| {
                cfg.estimators.contains(&match kind {
                    OsfKind::Sawp => Estimator::Usawp,
                    OsfKind::Tlosf => Estimator::Utlosf,
                })
            })
            .map(|&kind| SharedBlend {
                kind,
                c: cfg.c,
                rings: vec![std::collections::VecDeque::new(); r],
                sums: vec![0.0; r],
                tau: cfg.tau,
                mu: vec![1.0 / r as f64; r],
            })
            .collect();

        let mut windows: Vec<SortedWindow> = (0..n_bins).map(|_| SortedWindow::new(r)).collect();
        let mut wosa_sums = vec![0.0; n_bins];
        let mut columns: Vec<Vec<Vec<f64>>> =
            cfg.estimators.iter().map(|_| vec![Vec::with_capacity(t_total); n_bins]).collect();
        let mut rank_sq = vec![0.0; r];
        let mut outputs = vec![0.0; r];

        for n in 0..self.n_frames {
            for bin in 0..n_bins {
                let value = self.frame_value(n, bin);
                if let Some(evicted) = windows[bin].push(value) {
                    wosa_sums[bin] += value - evicted;
                } else {
                    wosa_sums[bin] += value;
                }
            }
            if n + 1 < r || !(n + 1 - r).is_multiple_of(q) {
                continue;
            }
            for (e, est) in cfg.estimators.iter().enumerate() {
                match est {
                    Estimator::Raw => {
                        let center = ((n + 1 - r) / q) * q + (r - 1) / 2;
                        for (bin, column) in columns[e].iter_mut().enumerate() {
                            column.push(self.frame_value(center, bin));
                        }
                    }
                    Estimator::Wosa => {
                        for (column, sum) in columns[e].iter_mut().zip(&wosa_sums) {
                            column.push(sum / r as f64);
                        }
                    }
                    Estimator::Usawp | Estimator::Utlosf => {}
                }
            }
            for blend in &mut shared {
                let est = match blend.kind {
                    OsfKind::Sawp => Estimator::Usawp,
                    OsfKind::Tlosf => Estimator::Utlosf,
                };
                let e = cfg.estimators.iter().position(|x| *x == est).expect("requested");
                rank_sq.iter_mut().for_each(|x| *x = 0.0);
                for bin in 0..n_bins {
                    let sorted = windows[bin].sorted();
                    all_rank_outputs_into(blend.kind, sorted, &alphas, &mut outputs);
                    let mut estimate = 0.0;
                    for (i, &y) in outputs.iter().enumerate() {
                        estimate += blend.mu[i] * y;
                        rank_sq[i] += y * y;
                    }
                    columns[e][bin].push(estimate);
                }
                blend.absorb(&rank_sq);
            }
        }
        Ok(columns)
    }
}

fn all_rank_outputs_into(kind: OsfKind, sorted: &[f64], alphas: &[f64], out: &mut [f64]) {
    let computed = osf::all_rank_outputs(kind, sorted, alphas);
    out.copy_from_slice(&computed);
}

/// Sliding window of the most recent R values, kept sorted.
struct SortedWindow {
    capacity: usize,
    arrival: std::collections::VecDeque<f64>,
    sorted: Vec<f64>,
}

impl SortedWindow {
    fn new(capacity: usize) -> Self {
        Self {
            capacity,
            arrival: std::collections::VecDeque::with_capacity(capacity),
            sorted: Vec::with_capacity(capacity),
        }
    }

    /// Pushes a value, evicting and returning the oldest when full.
    fn push(&mut self, value: f64) -> Option<f64> {
        let evicted = if self.arrival.len() == self.capacity {
            let old = self.arrival.pop_front().expect("full window");
            let pos = self.sorted.partition_point(|&x| x < old);
            debug_assert!(self.sorted[pos] == old);
            self.sorted.remove(pos);
            Some(old)
        } else {
            None
        };
        self.arrival.push_back(value);
        let pos = self.sorted.partition_point(|&x| x < value);
        self.sorted.insert(pos, value);
        evicted
    }

    fn sorted(&self) -> &[f64] {
        &self.sorted
    }
}

/// Convenience wrapper: whole-series spectrogram estimation.
pub fn run_spectrogram(
    series: &TimeSeries,
    config: &PipelineConfig,
) -> Result<BTreeMap<Estimator, Spectrogram>> {
    let mut engine = SpectrogramEngine::new(config.clone(), series.sample_rate_hz())?;
    engine.push_samples(series.samples())?;
    engine.finalize()
}

/// Analytic normalized variance of both filter families at every threshold
/// rank: rows of `(kind, rank, variance)`.
pub fn variance_curve(r: usize) -> Result<Vec<(OsfKind, usize, f64)>> {
    let moments = osf::exponential_os_moments(r)?;
    let mut rows = Vec::with_capacity(2 * r);
    for kind in [OsfKind::Sawp, OsfKind::Tlosf] {
        for rank in 1..=r {
            let weights = osf::make_weights(kind, r, rank)?;
            rows.push((kind, rank, osf::osf_variance(weights.weights(), &moments)?));
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::WindowKind;
    use approx::assert_relative_eq;

    fn tiny_config(bins: Vec<f64>) -> PipelineConfig {
        PipelineConfig {
            spectral: SpectralConfig {
                segment_length: 16,
                segment_hop: 8,
                window: WindowKind::Hann,
                frequency_bins: bins,
                energy_compensation: false,
            },
            psd_window: 4,
            psd_hop: 2,
            c: 1.0,
            tau: 8,
            estimators: vec![Estimator::Raw, Estimator::Wosa, Estimator::Usawp, Estimator::Utlosf],
            shared_blend: false,
        }
    }

    fn noise_series(len: usize, seed: u64) -> TimeSeries {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        TimeSeries::new((0..len).map(|_| rng.random::<f64>() - 0.5).collect(), 1000.0).unwrap()
    }

    #[test]
    fn to_db_examples() {
        assert_relative_eq!(to_db(1.0), 0.0);
        assert_relative_eq!(to_db(100.0), 20.0);
        assert_eq!(to_db(0.0), -300.0);
        assert_eq!(to_db(1e-40), -300.0);
    }

    #[test]
    fn constant_frames_give_constant_wosa() {
        // DC-only config on a constant signal: every periodogram is equal,
        // so every wosa cell equals that value.
        let mut config = tiny_config(vec![0.0]);
        config.spectral.window = WindowKind::Rectangular;
        config.estimators = vec![Estimator::Wosa, Estimator::Raw];
        let series = TimeSeries::new(vec![0.5; 640], 1000.0).unwrap();
        let out = run_spectrogram(&series, &config).unwrap();
        let wosa = &out[&Estimator::Wosa];
        let expect = 0.25 * 16.0;
        for row in &wosa.rows {
            assert_relative_eq!(row[0], expect, max_relative = 1e-12);
        }
        let raw = &out[&Estimator::Raw];
        for row in &raw.rows {
            assert_relative_eq!(row[0], expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn axes_shapes_and_steps() {
        let config = tiny_config(vec![0.0, 0.25, 0.5]);
        let series = noise_series(1000, 3);
        let out = run_spectrogram(&series, &config).unwrap();
        let n = crate::spectral::frame_count(1000, 16, 8);
        let t_total = (n - 4) / 2 + 1;
        for sg in out.values() {
            assert_eq!(sg.rows.len(), t_total);
            assert_eq!(sg.time_s.len(), t_total);
            assert_eq!(sg.freq_hz, vec![0.0, 250.0, 500.0]);
            // time step = Q*D/fs
            let step = sg.time_s[1] - sg.time_s[0];
            assert_relative_eq!(step, 2.0 * 8.0 / 1000.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn per_bin_permutation_invariance() {
        let series = noise_series(1200, 4);
        let a = run_spectrogram(&series, &tiny_config(vec![0.05, 0.2, 0.4])).unwrap();
        let b = run_spectrogram(&series, &tiny_config(vec![0.4, 0.05, 0.2])).unwrap();
        for est in [Estimator::Wosa, Estimator::Utlosf] {
            let x = &a[&est];
            let y = &b[&est];
            for t in 0..x.rows.len() {
                assert_eq!(x.rows[t][0], y.rows[t][1]);
                assert_eq!(x.rows[t][1], y.rows[t][2]);
                assert_eq!(x.rows[t][2], y.rows[t][0]);
            }
        }
    }

    #[test]
    fn too_short_input_is_an_error() {
        let config = tiny_config(vec![0.0]);
        // 3 frames < R = 4
        let series = noise_series(32, 5);
        assert!(matches!(run_spectrogram(&series, &config), Err(Error::Argument(_))));
    }

    #[test]
    fn estimator_parsing() {
        let list = parse_estimators("wosa, usawp,utlosf").unwrap();
        assert_eq!(list, vec![Estimator::Wosa, Estimator::Usawp, Estimator::Utlosf]);
        assert!(parse_estimators("wosa,bogus").is_err());
        assert!(parse_estimators("").is_err());
    }

    #[test]
    fn sorted_window_tracks_a_naive_resort() {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(6);
        let mut window = SortedWindow::new(5);
        let mut naive: Vec<f64> = Vec::new();
        for i in 0..200 {
            // occasional repeats exercise tie handling
            let v = if i % 7 == 0 { 0.5 } else { rng.random::<f64>() };
            window.push(v);
            naive.push(v);
            if naive.len() > 5 {
                naive.remove(0);
            }
            let mut expect = naive.clone();
            expect.sort_by(|a, b| a.partial_cmp(b).unwrap());
            assert_eq!(window.sorted(), expect.as_slice());
        }
    }

    #[test]
    fn shared_blend_runs_and_matches_shape() {
        let mut config = tiny_config(vec![0.0, 0.25]);
        config.shared_blend = true;
        let series = noise_series(1200, 7);
        let out = run_spectrogram(&series, &config).unwrap();
        let per_bin = {
            let mut c = tiny_config(vec![0.0, 0.25]);
            c.shared_blend = false;
            run_spectrogram(&series, &c).unwrap()
        };
        for est in Estimator::ALL {
            assert_eq!(out[&est].rows.len(), per_bin[&est].rows.len());
        }
        // raw and wosa are blend-independent
        assert_eq!(out[&Estimator::Raw], per_bin[&Estimator::Raw]);
        assert_eq!(out[&Estimator::Wosa], per_bin[&Estimator::Wosa]);
        // universal estimates differ once losses diverge across bins
        assert_ne!(out[&Estimator::Utlosf].rows, per_bin[&Estimator::Utlosf].rows);
    }

    #[test]
    fn variance_curve_shape() {
        let rows = variance_curve(10).unwrap();
        assert_eq!(rows.len(), 20);
        let tlosf_last = rows.iter().find(|r| r.0 == OsfKind::Tlosf && r.1 == 10).unwrap();
        assert_relative_eq!(tlosf_last.2, 0.1, max_relative = 1e-12);
    }
}
