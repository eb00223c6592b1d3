//! Detection law, trial logic and the half-window event algebra.
//!
//! A detector fires in a window with probability `1 - exp(-k I)`. In the
//! two-half-window scheme each half draws its own [`FieldSample`]; within a
//! half Alice and Bob share it, which is the only source of correlation.
//! Given the sample their Bernoulli draws are independent.
//!
//! A coincidence is reported when any of `A1B1`, `A1B2`, `A2B1`, `A2B2`
//! occurs. How those four composite events are realized is a
//! [`CoincidencePairing`] choice, see there.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, ensure_probability, Error, Result};
use crate::source::{intensities, sample_field_with, FieldSample, PhaseMode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    k: f64,
}

impl DetectorParams {
    pub fn new(k: f64) -> Result<Self> {
        ensure_finite("k", k)?;
        if k <= 0.0 {
            return Err(Error::InvalidInput(format!("k = {k} must be positive")));
        }
        Ok(Self { k })
    }

    pub fn k(&self) -> f64 {
        self.k
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WindowScheme {
    /// At most one shot per party and window.
    SingleWindow,
    /// Two halves, each able to produce a shot for each party.
    #[default]
    TwoHalfWindows,
}

/// Realization of the four composite coincidence events in a two-half
/// window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoincidencePairing {
    /// The four composite events are mutually independent: same-half pairs
    /// use the trial's own shots, each cross-half pair is evaluated on a
    /// fresh independent pair of half windows. At-least-one-coincidence then
    /// has probability `1 - (1 - P_AB)^2 (1 - P_A P_B)^2`.
    #[default]
    Independent,
    /// All four pairs reuse the trial's own shots, so a coincidence is just
    /// "Alice fired and Bob fired". This is itself a local hidden-variable
    /// model and obeys CH.
    SharedShots,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOptions {
    pub phase_mode: PhaseMode,
    pub pairing: CoincidencePairing,
    /// Suppress a party's second-half shot when its first half fired.
    pub dead_time: bool,
}

/// Composite-event order used by `pair_coincidence`.
pub const PAIR_LABELS: [&str; 4] = ["A1B1", "A1B2", "A2B1", "A2B2"];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TrialOutcome {
    pub alice_shot: [bool; 2],
    pub bob_shot: [bool; 2],
    /// `A1B1, A1B2, A2B1, A2B2`; only the first is used for a single window.
    pub pair_coincidence: [bool; 4],
    pub any_alice: bool,
    pub any_bob: bool,
    pub any_coincidence: bool,
}

/// Within-half probabilities of the abstract two-half model: `p` is the
/// single-detection probability of a half, `q` the probability of Bob given
/// Alice in the same half.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfWindowParams {
    p: f64,
    q: f64,
}

impl HalfWindowParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        ensure_probability("p", p)?;
        ensure_probability("q", q)?;
        if p > q {
            return Err(Error::InvalidInput(format!("need p <= q, got p = {p}, q = {q}")));
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }
}

pub fn detect_prob(params: &DetectorParams, i: f64) -> Result<f64> {
    if i.is_nan() || i < 0.0 {
        return Err(Error::InvalidInput(format!("intensity {i} must be non-negative")));
    }
    Ok(-(-params.k * i).exp_m1())
}

/// Probability of at least one shot in two independent halves.
pub fn multi_single_prob(p: f64) -> Result<f64> {
    ensure_probability("p", p)?;
    Ok(p * (2.0 - p))
}

/// Probability of at least one of the four composite coincidence events,
/// treating them as independent.
pub fn multi_coincidence_prob(hw: &HalfWindowParams) -> f64 {
    let (p, q) = (hw.p, hw.q);
    let none_cross = 1.0 - p * p;
    let none_same = 1.0 - p * q;
    1.0 - none_cross * none_cross * none_same * none_same
}

/// Excess of the coincidence-to-single ratio over the one-half ratio `q`.
pub fn gain(hw: &HalfWindowParams) -> Result<f64> {
    if hw.p == 0.0 {
        return Err(Error::DivisionDomain("gain is undefined at p = 0".into()));
    }
    let single = 1.0 - (1.0 - hw.p) * (1.0 - hw.p);
    Ok(multi_coincidence_prob(hw) / single - hw.q)
}

fn shots<R: Rng + ?Sized>(
    params: &DetectorParams,
    sample: &FieldSample,
    (theta, phi): (f64, f64),
    mode: PhaseMode,
    rng: &mut R,
) -> Result<(bool, bool)> {
    let i = intensities(sample, theta, phi, mode)?;
    let pa = detect_prob(params, i.i_a)?;
    let pb = detect_prob(params, i.i_b)?;
    let alice = rng.random::<f64>() < pa;
    let bob = rng.random::<f64>() < pb;
    Ok((alice, bob))
}

/// One half window for a single party, used for the replicas behind the
/// independent cross-half pairs.
fn replica_shot<R: Rng + ?Sized>(
    params: &DetectorParams,
    angles: (f64, f64),
    mode: PhaseMode,
    alice: bool,
    rng: &mut R,
) -> Result<bool> {
    let sample = sample_field_with(rng, mode);
    let i = intensities(&sample, angles.0, angles.1, mode)?;
    let p = detect_prob(params, if alice { i.i_a } else { i.i_b })?;
    Ok(rng.random::<f64>() < p)
}

/// Runs one trial at polarizer angles `(theta, phi)`.
///
/// Consumes at most 36 `u64` draws from `rng`.
pub fn run_trial<R: Rng + ?Sized>(
    params: &DetectorParams,
    scheme: WindowScheme,
    angles: (f64, f64),
    rng: &mut R,
    options: TrialOptions,
) -> Result<TrialOutcome> {
    let mode = options.phase_mode;
    match scheme {
        WindowScheme::SingleWindow => {
            let sample = sample_field_with(rng, mode);
            let (a, b) = shots(params, &sample, angles, mode, rng)?;
            Ok(TrialOutcome {
                alice_shot: [a, false],
                bob_shot: [b, false],
                pair_coincidence: [a && b, false, false, false],
                any_alice: a,
                any_bob: b,
                any_coincidence: a && b,
            })
        }
        WindowScheme::TwoHalfWindows => {
            let first = sample_field_with(rng, mode);
            let (a1, b1) = shots(params, &first, angles, mode, rng)?;
            let second = sample_field_with(rng, mode);
            let (mut a2, mut b2) = shots(params, &second, angles, mode, rng)?;
            if options.dead_time {
                a2 &= !a1;
                b2 &= !b1;
            }
            let pairs = match options.pairing {
                CoincidencePairing::SharedShots => [a1 && b1, a1 && b2, a2 && b1, a2 && b2],
                CoincidencePairing::Independent => {
                    let mut cross = || -> Result<bool> {
                        let a = replica_shot(params, angles, mode, true, rng)?;
                        let b = replica_shot(params, angles, mode, false, rng)?;
                        Ok(a && b)
                    };
                    let c12 = cross()?;
                    let c21 = cross()?;
                    [a1 && b1, c12, c21, a2 && b2]
                }
            };
            Ok(TrialOutcome {
                alice_shot: [a1, a2],
                bob_shot: [b1, b2],
                pair_coincidence: pairs,
                any_alice: a1 || a2,
                any_bob: b1 || b2,
                any_coincidence: pairs.iter().any(|&c| c),
            })
        }
    }
}
