//! Chaotic two-beam source.
//!
//! Two beams built from independent complex Gaussian amplitudes `a`, `b`
//! (density proportional to `exp(-|a|^2 - |b|^2)`). Behind a polarizer at
//! angle `t` either party sees `|a|^2 cos^2 t + |b|^2 sin^2 t` plus a phase
//! cross term. Only the squared moduli and the relative phases matter, so a
//! window's hidden state is a [`FieldSample`].

use std::f64::consts::{FRAC_PI_2, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the relative phases enter the detected intensities.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseMode {
    /// Cross terms dropped, equivalent to `chi = xi = pi/2`.
    #[default]
    Suppressed,
    Sampled,
}

/// Hidden state of one window: `x = |a|^2`, `y = |b|^2` and the relative
/// phases seen by Alice (`chi`) and Bob (`xi`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub x: f64,
    pub y: f64,
    pub chi: f64,
    pub xi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntensityPair {
    pub i_a: f64,
    pub i_b: f64,
}

/// Unit-mean exponential by inversion; consumes exactly one `u64`.
pub(crate) fn unit_exponential<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln()
}

/// Draws all four components of a sample.
pub fn sample_field<R: Rng + ?Sized>(rng: &mut R) -> FieldSample {
    sample_field_with(rng, PhaseMode::Sampled)
}

/// Draws the intensities and, in sampled mode only, the phases. Suppressed
/// mode fixes both phases at `pi/2`.
pub fn sample_field_with<R: Rng + ?Sized>(rng: &mut R, mode: PhaseMode) -> FieldSample {
    let x = unit_exponential(rng);
    let y = unit_exponential(rng);
    let (chi, xi) = match mode {
        PhaseMode::Suppressed => (FRAC_PI_2, FRAC_PI_2),
        PhaseMode::Sampled => (TAU * rng.random::<f64>(), TAU * rng.random::<f64>()),
    };
    FieldSample { x, y, chi, xi }
}

/// Intensity behind one polarizer at `angle`, given that arm's relative phase.
fn arm_intensity(x: f64, y: f64, angle: f64, phase: Option<f64>) -> f64 {
    let (s, c) = angle.sin_cos();
    match phase {
        None => x * c * c + y * s * s,
        Some(p) => {
            // |sqrt(x) c + sqrt(y) s e^{ip}|^2, evaluated as a modulus so it
            // stays non-negative in floating point.
            let re = x.sqrt() * c + y.sqrt() * s * p.cos();
            let im = y.sqrt() * s * p.sin();
            re * re + im * im
        }
    }
}

pub fn intensities(s: &FieldSample, theta: f64, phi: f64, mode: PhaseMode) -> Result<IntensityPair> {
    let (pa, pb) = match mode {
        PhaseMode::Suppressed => (None, None),
        PhaseMode::Sampled => (Some(s.chi), Some(s.xi)),
    };
    let i_a = arm_intensity(s.x, s.y, theta, pa);
    let i_b = arm_intensity(s.x, s.y, phi, pb);
    for (name, v) in [("I_A", i_a), ("I_B", i_b)] {
        if v.is_nan() || v < 0.0 {
            return Err(Error::NumericalInconsistency(format!("{name} = {v} < 0")));
        }
    }
    Ok(IntensityPair { i_a, i_b })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_6, PI};

    fn fs(x: f64, y: f64) -> FieldSample {
        FieldSample { x, y, chi: 0.3, xi: 1.1 }
    }

    #[test]
    fn aligned_and_crossed_polarizers() {
        let s = fs(1.0, 0.0);
        let aligned = intensities(&s, 0.0, 0.0, PhaseMode::Suppressed).unwrap();
        assert_eq!(aligned.i_a, 1.0);
        let crossed = intensities(&s, FRAC_PI_2, FRAC_PI_2, PhaseMode::Suppressed).unwrap();
        assert!(crossed.i_a.abs() < 1e-30);
        let both = intensities(&fs(1.0, 1.0), FRAC_PI_6, 0.0, PhaseMode::Suppressed).unwrap();
        assert!((both.i_a - 1.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_matches_expanded_cross_term() {
        let s = fs(0.7, 2.3);
        let (theta, phi) = (0.4, 1.2);
        let got = intensities(&s, theta, phi, PhaseMode::Sampled).unwrap();
        let expanded = |angle: f64, p: f64| {
            let (sn, c) = angle.sin_cos();
            s.x * c * c + s.y * sn * sn + 2.0 * (s.x * s.y).sqrt() * p.cos() * c * sn
        };
        assert!((got.i_a - expanded(theta, s.chi)).abs() < 1e-12);
        assert!((got.i_b - expanded(phi, s.xi)).abs() < 1e-12);
    }

    #[test]
    fn modes_agree_at_axis_angles() {
        let s = fs(1.7, 0.4);
        for angle in [0.0, FRAC_PI_2] {
            let a = intensities(&s, angle, angle, PhaseMode::Suppressed).unwrap();
            let b = intensities(&s, angle, angle, PhaseMode::Sampled).unwrap();
            assert!((a.i_a - b.i_a).abs() < 1e-15 && (a.i_b - b.i_b).abs() < 1e-15);
        }
    }

    #[test]
    fn suppressed_symmetries() {
        let s = fs(1.7, 0.4);
        let swapped = fs(0.4, 1.7);
        for theta in [0.1, 0.5, 1.0, 2.5] {
            let base = intensities(&s, theta, 0.0, PhaseMode::Suppressed).unwrap().i_a;
            let shifted = intensities(&s, theta + PI, 0.0, PhaseMode::Suppressed).unwrap().i_a;
            let mirror = intensities(&swapped, FRAC_PI_2 - theta, 0.0, PhaseMode::Suppressed)
                .unwrap()
                .i_a;
            assert!((base - shifted).abs() < 1e-12);
            assert!((base - mirror).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_average_recovers_suppressed() {
        // Trapezoid rule on a periodic integrand is spectrally accurate.
        let n = 512;
        for theta in [0.2, FRAC_PI_6, 1.3] {
            let mean: f64 = (0..n)
                .map(|j| {
                    let s = FieldSample { x: 1.3, y: 0.6, chi: TAU * j as f64 / n as f64, xi: 0.0 };
                    intensities(&s, theta, 0.0, PhaseMode::Sampled).unwrap().i_a
                })
                .sum::<f64>()
                / n as f64;
            let sup = intensities(&fs(1.3, 0.6), theta, 0.0, PhaseMode::Suppressed).unwrap().i_a;
            assert!((mean - sup).abs() < 1e-10, "{mean} vs {sup}");
        }
    }

    #[test]
    fn suppressed_bounded_by_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let s = sample_field(&mut rng);
            let p = intensities(&s, 0.9, 2.2, PhaseMode::Suppressed).unwrap();
            assert!(p.i_a <= s.x + s.y + 1e-12 && p.i_b <= s.x + s.y + 1e-12);
            assert!((0.0..TAU).contains(&s.chi) && (0.0..TAU).contains(&s.xi));
        }
    }

    #[test]
    fn exponential_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let (mut sx, mut sxy, mut tail) = (0.0, 0.0, 0usize);
        for _ in 0..n {
            let s = sample_field(&mut rng);
            sx += s.x;
            sxy += s.x * s.y;
            tail += (s.x > 3.0) as usize;
        }
        let n = n as f64;
        assert!((sx / n - 1.0).abs() < 0.005);
        assert!((sxy / n - 1.0).abs() < 0.01);
        assert!((tail as f64 / n - (-3.0f64).exp()).abs() < 0.002);
    }
}
