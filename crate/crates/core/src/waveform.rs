//! Time-resolved intensity of superposed waves and intensity-driven
//! detection streams.
//!
//! A [`Waveform`] is `phi(t) = A * sum_j c_j cos(n_j w t)` (a common fast
//! carrier drops out of `|phi|^2`). Detection events form an inhomogeneous
//! Poisson process of rate `rate_scale * I(t)`, drawn by thinning.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::source::unit_exponential;

/// Anything with a non-negative intensity and a known upper bound.
pub trait IntensityProfile {
    fn intensity(&self, t: f64) -> f64;
    /// An upper bound on `intensity` over all `t`.
    fn peak(&self) -> f64;
}

/// Time-independent intensity, the idealized laser.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstantIntensity(pub f64);

impl IntensityProfile for ConstantIntensity {
    fn intensity(&self, _t: f64) -> f64 {
        self.0
    }

    fn peak(&self) -> f64 {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub coefficient: f64,
    pub harmonic: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waveform {
    components: Vec<Component>,
    omega: f64,
    amplitude: f64,
    /// Cached `max I(t)` over a period.
    peak: f64,
}

impl Waveform {
    pub fn new(components: Vec<Component>, omega: f64, amplitude: f64) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("waveform needs at least one component".into()));
        }
        for c in &components {
            ensure_finite("coefficient", c.coefficient)?;
            if c.harmonic == 0 {
                return Err(Error::InvalidInput("harmonics must be positive integers".into()));
            }
        }
        ensure_finite("omega", omega)?;
        ensure_finite("amplitude", amplitude)?;
        if omega <= 0.0 {
            return Err(Error::InvalidInput(format!("omega = {omega} must be positive")));
        }
        if amplitude < 0.0 {
            return Err(Error::InvalidInput(format!("|A| = {amplitude} must be non-negative")));
        }
        let mut w = Self {
            components,
            omega,
            amplitude,
            peak: 0.0,
        };
        w.peak = intensity_stats(&w, 4096)?.max;
        Ok(w)
    }

    /// Coefficients on harmonics `1, 2, ...`, e.g. `[1, -2, 1]`.
    pub fn from_coefficients(coefficients: &[f64], omega: f64, amplitude: f64) -> Result<Self> {
        let components = coefficients
            .iter()
            .enumerate()
            .map(|(j, &c)| Component {
                coefficient: c,
                harmonic: j as u32 + 1,
            })
            .collect();
        Self::new(components, omega, amplitude)
    }

    /// `cos(wt) - 2 cos(2wt) + cos(3wt)`.
    pub fn three_wave(omega: f64, amplitude: f64) -> Result<Self> {
        Self::from_coefficients(&[1.0, -2.0, 1.0], omega, amplitude)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn period(&self) -> f64 {
        TAU / self.omega
    }

    /// `I(t)` as a cosine series `sum_m d_m cos(m w t)`, from
    /// `cos a cos b = (cos(a - b) + cos(a + b)) / 2`.
    pub fn intensity_series(&self) -> Vec<(f64, u32)> {
        let top = self.components.iter().map(|c| c.harmonic).max().unwrap_or(0) as usize;
        let mut series = vec![0.0; 2 * top + 1];
        let a2 = self.amplitude * self.amplitude;
        for p in &self.components {
            for q in &self.components {
                let w = 0.5 * a2 * p.coefficient * q.coefficient;
                series[p.harmonic.abs_diff(q.harmonic) as usize] += w;
                series[(p.harmonic + q.harmonic) as usize] += w;
            }
        }
        series
            .into_iter()
            .enumerate()
            .filter(|(_, d)| *d != 0.0)
            .map(|(m, d)| (d, m as u32))
            .collect()
    }

    /// Exact time average of `I(t)`.
    pub fn exact_mean(&self) -> f64 {
        self.intensity_series()
            .into_iter()
            .filter(|&(_, m)| m == 0)
            .map(|(d, _)| d)
            .sum()
    }
}

pub fn intensity_at(w: &Waveform, t: f64) -> f64 {
    let field: f64 = w
        .components
        .iter()
        .map(|c| c.coefficient * (c.harmonic as f64 * w.omega * t).cos())
        .sum();
    w.amplitude * w.amplitude * field * field
}

impl IntensityProfile for Waveform {
    fn intensity(&self, t: f64) -> f64 {
        intensity_at(self, t)
    }

    fn peak(&self) -> f64 {
        self.peak
    }
}

/// `I(t)` averaged over the detection interval `(t - t_det, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionFiltered {
    waveform: Waveform,
    t_det: f64,
    series: Vec<(f64, u32)>,
}

impl DetectionFiltered {
    pub fn new(waveform: Waveform, t_det: f64) -> Result<Self> {
        ensure_finite("t_det", t_det)?;
        if t_det <= 0.0 {
            return Err(Error::InvalidInput(format!("t_det = {t_det} must be positive")));
        }
        let series = waveform.intensity_series();
        Ok(Self {
            waveform,
            t_det,
            series,
        })
    }
}

impl IntensityProfile for DetectionFiltered {
    fn intensity(&self, t: f64) -> f64 {
        let w = self.waveform.omega;
        let v: f64 = self
            .series
            .iter()
            .map(|&(d, m)| {
                if m == 0 {
                    d
                } else {
                    let f = m as f64 * w;
                    d * ((f * t).sin() - (f * (t - self.t_det)).sin()) / (f * self.t_det)
                }
            })
            .sum();
        v.max(0.0)
    }

    fn peak(&self) -> f64 {
        // An average never exceeds the maximum it averages.
        self.waveform.peak
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntensityStats {
    pub mean: f64,
    pub max: f64,
    /// Times in `[0, period)` at which the maximum is attained.
    pub argmax_times: Vec<f64>,
    pub period: f64,
}

impl IntensityStats {
    pub fn peak_to_mean(&self) -> f64 {
        self.max / self.mean
    }
}

fn golden_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    for _ in 0..100 {
        let m1 = hi - INV_PHI * (hi - lo);
        let m2 = lo + INV_PHI * (hi - lo);
        if f(m1) < f(m2) {
            lo = m1;
        } else {
            hi = m2;
        }
    }
    0.5 * (lo + hi)
}

/// Mean, maximum and maximizers of `I(t)` over one fundamental period,
/// sampled at `resolution` points with golden-section refinement of the
/// sampled local maxima.
pub fn intensity_stats(w: &Waveform, resolution: usize) -> Result<IntensityStats> {
    if resolution < 1000 {
        return Err(Error::InvalidInput(format!(
            "resolution {resolution} is below 1000 samples per period"
        )));
    }
    let period = w.period();
    let dt = period / resolution as f64;
    let samples: Vec<f64> = (0..resolution).map(|j| intensity_at(w, j as f64 * dt)).collect();
    let mean = samples.iter().sum::<f64>() / resolution as f64;
    let sampled_max = samples.iter().cloned().fold(0.0, f64::max);

    let mut peaks: Vec<(f64, f64)> = Vec::new();
    for j in 0..resolution {
        let prev = samples[(j + resolution - 1) % resolution];
        let next = samples[(j + 1) % resolution];
        let here = samples[j];
        if here >= prev && here >= next && here >= sampled_max * (1.0 - 1e-2) {
            let t0 = j as f64 * dt;
            let t = golden_max(|t| intensity_at(w, t), t0 - dt, t0 + dt);
            peaks.push((t.rem_euclid(period), intensity_at(w, t)));
        }
    }
    let max = peaks.iter().map(|p| p.1).fold(sampled_max, f64::max);
    let mut argmax_times: Vec<f64> = peaks
        .into_iter()
        .filter(|&(_, v)| v >= max * (1.0 - 1e-9))
        .map(|(t, _)| t)
        .collect();
    argmax_times.sort_by(f64::total_cmp);
    argmax_times.dedup_by(|a, b| (*a - *b).abs() < 1e-6 * period);
    Ok(IntensityStats {
        mean,
        max,
        argmax_times,
        period,
    })
}

/// Sorted detection instants over `[0, span)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventStream {
    pub times: Vec<f64>,
    pub span: f64,
    pub rate_scale: f64,
}

impl EventStream {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Mean time between events, `span / count`.
    pub fn mean_interval(&self) -> Option<f64> {
        (!self.times.is_empty()).then(|| self.span / self.times.len() as f64)
    }
}

/// Inhomogeneous Poisson process with rate `rate_scale * I(t)` on
/// `[0, span)`, by thinning a homogeneous process at `rate_scale * peak`.
pub fn sample_events<P: IntensityProfile + ?Sized, R: Rng + ?Sized>(
    profile: &P,
    span: f64,
    rate_scale: f64,
    rng: &mut R,
) -> Result<EventStream> {
    ensure_finite("span", span)?;
    ensure_finite("rate_scale", rate_scale)?;
    if span <= 0.0 || rate_scale <= 0.0 {
        return Err(Error::InvalidInput("span and rate_scale must be positive".into()));
    }
    let peak = profile.peak();
    if peak.is_nan() || peak < 0.0 {
        return Err(Error::NumericalInconsistency(format!("peak intensity {peak}")));
    }
    let mut times = Vec::new();
    let bound = rate_scale * peak;
    if bound > 0.0 {
        let mut t = 0.0;
        loop {
            t += unit_exponential(rng) / bound;
            if t >= span {
                break;
            }
            let accept = rate_scale * profile.intensity(t) / bound;
            if rng.random::<f64>() < accept && times.last().is_none_or(|&last| t > last) {
                times.push(t);
            }
        }
    }
    Ok(EventStream {
        times,
        span,
        rate_scale,
    })
}

/// Signed delays from each Alice event to its nearest Bob event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DelayStatistics {
    /// `t_bob - t_alice`, one per Alice event, empty when Bob has no events.
    pub delays: Vec<f64>,
    pub median_abs: Option<f64>,
    pub histogram: Vec<HistogramBin>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: u64,
}

const DEFAULT_BINS: usize = 40;

impl DelayStatistics {
    /// Histogram of the signed delays on `[-half_range, half_range]` with
    /// `bins` equal bins; delays outside the range are dropped.
    pub fn histogram(&self, bins: usize, half_range: f64) -> Vec<HistogramBin> {
        histogram(&self.delays, bins, half_range)
    }

    pub fn to_csv(&self) -> String {
        histogram_csv(&self.histogram)
    }
}

fn histogram(delays: &[f64], bins: usize, half_range: f64) -> Vec<HistogramBin> {
    if bins == 0 || !(half_range > 0.0) {
        return Vec::new();
    }
    let width = 2.0 * half_range / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|j| HistogramBin {
            lo: -half_range + j as f64 * width,
            hi: -half_range + (j + 1) as f64 * width,
            count: 0,
        })
        .collect();
    for &d in delays {
        if d.abs() <= half_range {
            let j = (((d + half_range) / width) as usize).min(bins - 1);
            out[j].count += 1;
        }
    }
    out
}

pub fn histogram_csv(bins: &[HistogramBin]) -> String {
    let mut s = String::from("bin_lo,bin_hi,count\n");
    for b in bins {
        writeln!(s, "{:.9e},{:.9e},{}", b.lo, b.hi, b.count).unwrap();
    }
    s
}

fn nearest_delay(sorted: &[f64], t: f64) -> f64 {
    let idx = sorted.partition_point(|&x| x < t);
    let after = sorted.get(idx).map(|&x| x - t);
    let before = idx.checked_sub(1).map(|j| sorted[j] - t);
    match (before, after) {
        (Some(b), Some(a)) => {
            if -b <= a {
                b
            } else {
                a
            }
        }
        (Some(b), None) => b,
        (None, Some(a)) => a,
        (None, None) => f64::NAN,
    }
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    })
}

pub fn delay_statistics(stream_a: &EventStream, stream_b: &EventStream) -> DelayStatistics {
    if stream_b.is_empty() {
        return DelayStatistics {
            delays: Vec::new(),
            median_abs: None,
            histogram: Vec::new(),
        };
    }
    let delays: Vec<f64> = stream_a
        .times
        .iter()
        .map(|&t| nearest_delay(&stream_b.times, t))
        .collect();
    let mut abs: Vec<f64> = delays.iter().map(|d| d.abs()).collect();
    let median_abs = median(&mut abs);
    let histogram = match median_abs {
        Some(m) if m > 0.0 => histogram(&delays, DEFAULT_BINS, 4.0 * m),
        _ => Vec::new(),
    };
    DelayStatistics {
        delays,
        median_abs,
        histogram,
    }
}

/// Alice events with at least one Bob event within `±window/2`.
pub fn windowed_coincidences(stream_a: &EventStream, stream_b: &EventStream, window: f64) -> Result<usize> {
    if window.is_nan() || window <= 0.0 {
        return Err(Error::InvalidInput(format!("window = {window} must be positive")));
    }
    if stream_b.is_empty() {
        return Ok(0);
    }
    let half = 0.5 * window;
    Ok(stream_a
        .times
        .iter()
        .filter(|&&t| nearest_delay(&stream_b.times, t).abs() <= half)
        .count())
}

/// Two-column text, `time stream-id`, merged in time order.
pub fn format_events(streams: &[(&str, &EventStream)]) -> String {
    let mut rows: Vec<(f64, &str)> = streams
        .iter()
        .flat_map(|(id, s)| s.times.iter().map(move |&t| (t, *id)))
        .collect();
    rows.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)));
    let mut out = String::from("# time stream\n");
    for (t, id) in rows {
        writeln!(out, "{t:.12e} {id}").unwrap();
    }
    out
}

/// Reads text written by [`format_events`] back into `(time, id)` rows.
pub fn parse_events(text: &str) -> Result<Vec<(f64, String)>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|(n, line)| {
            let mut parts = line.split_whitespace();
            let t = parts
                .next()
                .and_then(|p| p.parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidInput(format!("line {}: bad time", n + 1)))?;
            let id = parts
                .next()
                .ok_or_else(|| Error::InvalidInput(format!("line {}: missing stream id", n + 1)))?;
            Ok((t, id.to_string()))
        })
        .collect()
}
