use std::fmt::Write as _;
use std::path::PathBuf;

use bellsim_core::waveform::{
    delay_statistics, format_events, intensity_stats, sample_events, windowed_coincidences,
    ConstantIntensity, DetectionFiltered, EventStream, IntensityProfile, Waveform,
};
use clap::Subcommand;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{emit, fmt_f64, out_path, Failure};

#[derive(clap::Args)]
pub struct WaveArgs {
    /// Field coefficients on harmonics 1, 2, ..., e.g. "1,-2,1".
    #[arg(long, allow_hyphen_values = true)]
    wave: String,
    #[arg(long)]
    omega: f64,
    /// Field amplitude |A|.
    #[arg(long, default_value_t = 1.0)]
    amplitude: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
pub struct StreamArgs {
    /// Mean detection rate of each stream.
    #[arg(long, default_value_t = 1.0)]
    rate: f64,
    /// Length of the simulated record.
    #[arg(long, default_value_t = 10_000.0)]
    span: f64,
    /// Average the intensity over this detection time.
    #[arg(long)]
    t_det: Option<f64>,
    /// Also write the sampled events as two-column text.
    #[arg(long)]
    events: Option<PathBuf>,
}

#[derive(Subcommand)]
pub enum Command {
    /// Mean, maximum and times of maximum over one period.
    Stats {
        #[command(flatten)]
        wave: WaveArgs,
        #[arg(long, default_value_t = 4096)]
        resolution: usize,
    },
    /// Nearest-delay histograms for shared-intensity and independent streams.
    Delays {
        #[command(flatten)]
        wave: WaveArgs,
        #[command(flatten)]
        streams: StreamArgs,
        #[arg(long, default_value_t = 40)]
        bins: usize,
        /// Histogram covers [-half_range, half_range]; defaults to 2 / rate.
        #[arg(long)]
        half_range: Option<f64>,
    },
    /// Coincidence counts against window width.
    Windows {
        #[command(flatten)]
        wave: WaveArgs,
        #[command(flatten)]
        streams: StreamArgs,
        /// Widest window; defaults to 1 / rate.
        #[arg(long)]
        max_window: Option<f64>,
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
}

pub fn parse_wave(args: &WaveArgs) -> Result<Waveform, Failure> {
    let coefficients: Vec<f64> = args
        .wave
        .split(',')
        .map(|c| {
            c.trim()
                .parse::<f64>()
                .map_err(|_| Failure::config(format!("bad waveform coefficient {c:?}")))
        })
        .collect::<Result<_, _>>()?;
    Ok(Waveform::from_coefficients(&coefficients, args.omega, args.amplitude)?)
}

fn is_three_wave(w: &Waveform) -> bool {
    let c: Vec<(f64, u32)> = w.components().iter().map(|c| (c.coefficient, c.harmonic)).collect();
    c == [(1.0, 1), (-2.0, 2), (1.0, 3)]
}

pub fn stats_csv(w: &Waveform, resolution: usize) -> Result<String, Failure> {
    let s = intensity_stats(w, resolution)?;
    let mut csv = String::from("quantity,value\n");
    let mut row = |name: &str, v: f64| writeln!(csv, "{name},{}", fmt_f64(v)).unwrap();
    row("period", s.period);
    row("mean", s.mean);
    row("exact_mean", w.exact_mean());
    row("max", s.max);
    row("peak_to_mean", s.peak_to_mean());
    for t in &s.argmax_times {
        row("argmax", *t);
    }
    if is_three_wave(w) {
        csv.push_str(
            "# note: mean is the exact time average 3|A|^2, not 6|A|^2/(2 pi) = 0.955|A|^2\n",
        );
    }
    Ok(csv)
}

/// Two streams from the shared intensity, then two independent constant
/// streams at the same mean rate.
pub struct StreamSet {
    pub shared: [EventStream; 2],
    pub independent: [EventStream; 2],
}

fn stream<P: IntensityProfile>(p: &P, span: f64, scale: f64, seed: u64, index: u64) -> Result<EventStream, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    Ok(sample_events(p, span, scale, &mut rng)?)
}

pub fn sample_streams(w: &Waveform, args: &StreamArgs, seed: u64) -> Result<StreamSet, Failure> {
    if !(args.rate > 0.0 && args.rate.is_finite()) {
        return Err(Failure::config(format!("rate = {} must be positive", args.rate)));
    }
    let mean = w.exact_mean();
    if mean <= 0.0 {
        return Err(Failure::config("waveform has zero mean intensity"));
    }
    let scale = args.rate / mean;
    let flat = ConstantIntensity(mean);
    let shared = match args.t_det {
        Some(t) => {
            let f = DetectionFiltered::new(w.clone(), t)?;
            [stream(&f, args.span, scale, seed, 0)?, stream(&f, args.span, scale, seed, 1)?]
        }
        None => [stream(w, args.span, scale, seed, 0)?, stream(w, args.span, scale, seed, 1)?],
    };
    let independent = [
        stream(&flat, args.span, scale, seed, 2)?,
        stream(&flat, args.span, scale, seed, 3)?,
    ];
    Ok(StreamSet { shared, independent })
}

fn write_events(args: &StreamArgs, set: &StreamSet) -> Result<(), Failure> {
    if let Some(p) = &args.events {
        let text = format_events(&[
            ("shared_a", &set.shared[0]),
            ("shared_b", &set.shared[1]),
            ("independent_a", &set.independent[0]),
            ("independent_b", &set.independent[1]),
        ]);
        emit(Some(p), &text)?;
    }
    Ok(())
}

pub fn delays_csv(set: &StreamSet, rate: f64, bins: usize, half_range: Option<f64>) -> Result<String, Failure> {
    let half = half_range.unwrap_or(2.0 / rate);
    if !(half > 0.0) || bins == 0 {
        return Err(Failure::config("bins and half_range must be positive"));
    }
    let shared = delay_statistics(&set.shared[0], &set.shared[1]);
    let independent = delay_statistics(&set.independent[0], &set.independent[1]);
    let hs = shared.histogram(bins, half);
    let hi = independent.histogram(bins, half);
    let mut csv = String::from("bin_lo,bin_hi,shared,independent\n");
    for (s, i) in hs.iter().zip(&hi) {
        writeln!(csv, "{},{},{},{}", fmt_f64(s.lo), fmt_f64(s.hi), s.count, i.count).unwrap();
    }
    let median = |m: Option<f64>| m.map_or_else(|| "nan".to_string(), fmt_f64);
    writeln!(csv, "# mean_interval,{}", fmt_f64(1.0 / rate)).unwrap();
    writeln!(csv, "# median_abs_delay,shared,{}", median(shared.median_abs)).unwrap();
    writeln!(csv, "# median_abs_delay,independent,{}", median(independent.median_abs)).unwrap();
    writeln!(csv, "# events,shared,{},{}", set.shared[0].len(), set.shared[1].len()).unwrap();
    writeln!(csv, "# events,independent,{},{}", set.independent[0].len(), set.independent[1].len()).unwrap();
    Ok(csv)
}

pub fn windows_csv(set: &StreamSet, max_window: f64, points: usize) -> Result<String, Failure> {
    if !(max_window > 0.0) || points == 0 {
        return Err(Failure::config("max_window and points must be positive"));
    }
    let mut csv = String::from("window,shared,independent\n");
    for j in 1..=points {
        let w = max_window * j as f64 / points as f64;
        let s = windowed_coincidences(&set.shared[0], &set.shared[1], w)?;
        let i = windowed_coincidences(&set.independent[0], &set.independent[1], w)?;
        writeln!(csv, "{},{s},{i}", fmt_f64(w)).unwrap();
    }
    Ok(csv)
}

pub fn run(cmd: Command, seed: Option<u64>) -> Result<(), Failure> {
    let seed = seed.unwrap_or(0);
    match cmd {
        Command::Stats { wave, resolution } => {
            let w = parse_wave(&wave)?;
            emit(out_path(&wave.out), &stats_csv(&w, resolution)?)
        }
        Command::Delays {
            wave,
            streams,
            bins,
            half_range,
        } => {
            let w = parse_wave(&wave)?;
            let set = sample_streams(&w, &streams, seed)?;
            write_events(&streams, &set)?;
            emit(out_path(&wave.out), &delays_csv(&set, streams.rate, bins, half_range)?)
        }
        Command::Windows {
            wave,
            streams,
            max_window,
            points,
        } => {
            let w = parse_wave(&wave)?;
            let set = sample_streams(&w, &streams, seed)?;
            write_events(&streams, &set)?;
            let max = max_window.unwrap_or(1.0 / streams.rate);
            emit(out_path(&wave.out), &windows_csv(&set, max, points)?)
        }
    }
}
