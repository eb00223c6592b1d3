//! Batch simulation of the four angle-pair runs and comparison with the
//! closed forms.
//!
//! Randomness is counter based: trial `t` of pair `p` reads the ChaCha8
//! stream `p` of the run seed starting at word `t * WORDS_PER_TRIAL`. The
//! counts therefore do not depend on how trials are split across workers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{analysis_table, Analysis, MultiwindowMode};
use crate::detector::{run_trial, CoincidencePairing, DetectorParams, TrialOptions, WindowScheme};
use crate::error::{Error, Result};
use crate::inequality::{ch_value, AngleQuad, ChBreakdown, ProbabilityTable, SettingPair};
use crate::source::PhaseMode;

/// 32-bit words reserved per trial. `run_trial` uses at most 36 `u64`.
const WORDS_PER_TRIAL: u128 = 128;
const CHUNK_TRIALS: u64 = 1 << 14;

/// Threshold on `|z|` used by [`compare_to_analytic`].
pub const Z_THRESHOLD: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub k: f64,
    pub quad: AngleQuad,
    pub scheme: WindowScheme,
    pub n_trials: u64,
    pub seed: u64,
    pub options: TrialOptions,
    pub workers: usize,
}

impl RunConfig {
    pub fn new(k: f64, scheme: WindowScheme, n_trials: u64, seed: u64) -> Self {
        Self {
            k,
            quad: AngleQuad::default(),
            scheme,
            n_trials,
            seed,
            options: TrialOptions::default(),
            workers: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        DetectorParams::new(self.k)?;
        AngleQuad::new(self.quad.a, self.quad.b, self.quad.a_prime, self.quad.b_prime)?;
        if self.n_trials == 0 {
            return Err(Error::InvalidInput("n_trials must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(Error::InvalidInput("workers must be at least 1".into()));
        }
        Ok(())
    }

    /// Closed-form analysis whose probabilities this run estimates.
    ///
    /// Exact only for suppressed phases and, in the independent pairing,
    /// without dead time; see [`RunConfig::closed_form_is_exact`].
    pub fn reference_analysis(&self) -> Analysis {
        match (self.scheme, self.options.pairing) {
            (WindowScheme::SingleWindow, _) => Analysis::Standard,
            (WindowScheme::TwoHalfWindows, CoincidencePairing::Independent) => {
                Analysis::Multiwindow(MultiwindowMode::Exact)
            }
            (WindowScheme::TwoHalfWindows, CoincidencePairing::SharedShots) => {
                Analysis::Multiwindow(MultiwindowMode::SharedShots)
            }
        }
    }

    pub fn closed_form_is_exact(&self) -> bool {
        let dead_time_matters = self.scheme == WindowScheme::TwoHalfWindows
            && self.options.pairing == CoincidencePairing::Independent
            && self.options.dead_time;
        self.options.phase_mode == PhaseMode::Suppressed && !dead_time_matters
    }
}

/// Raw counts of one angle-pair run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairCounts {
    pub trials: u64,
    pub alice: u64,
    pub bob: u64,
    pub coincidence: u64,
    /// First-half Alice shots, and those accompanied by a first-half Bob shot.
    pub alice_first_half: u64,
    pub both_first_half: u64,
    /// Trials reporting a coincidence without both parties having fired.
    pub coincidence_without_both: u64,
}

impl PairCounts {
    fn merge(mut self, other: PairCounts) -> Self {
        self.trials += other.trials;
        self.alice += other.alice;
        self.bob += other.bob;
        self.coincidence += other.coincidence;
        self.alice_first_half += other.alice_first_half;
        self.both_first_half += other.both_first_half;
        self.coincidence_without_both += other.coincidence_without_both;
        self
    }

    /// Within-half `(p, q)`: `P(A1)` and `P(B1 | A1)`.
    pub fn emergent_half_window(&self) -> (f64, Option<f64>) {
        let p = self.alice_first_half as f64 / self.trials as f64;
        let q = (self.alice_first_half > 0)
            .then(|| self.both_first_half as f64 / self.alice_first_half as f64);
        (p, q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCi {
    pub value: f64,
    pub std_error: f64,
    pub n: u64,
    pub count: u64,
}

impl EstimateWithCi {
    pub fn from_count(count: u64, n: u64) -> Self {
        let value = count as f64 / n as f64;
        Self {
            value,
            std_error: (value * (1.0 - value) / n as f64).sqrt(),
            n,
            count,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatedTable {
    pub p_a: EstimateWithCi,
    pub p_b: EstimateWithCi,
    pub p_ab: EstimateWithCi,
    pub p_ab_prime: EstimateWithCi,
    pub p_a_prime_b: EstimateWithCi,
    pub p_a_prime_b_prime: EstimateWithCi,
    pub p_a_prime: EstimateWithCi,
    pub p_b_prime: EstimateWithCi,
    pub ch: ChBreakdown,
    /// Root of the summed variances of the six CH entries. Marginals and
    /// joints of the same pair run are correlated; that covariance is
    /// ignored.
    pub ch_std_error: f64,
    /// Counts in [`SettingPair::ALL`] order.
    pub counts: [PairCounts; 4],
}

impl EstimatedTable {
    pub fn values(&self) -> ProbabilityTable {
        ProbabilityTable {
            p_a: self.p_a.value,
            p_b: self.p_b.value,
            p_ab: self.p_ab.value,
            p_ab_prime: self.p_ab_prime.value,
            p_a_prime_b: self.p_a_prime_b.value,
            p_a_prime_b_prime: self.p_a_prime_b_prime.value,
            p_a_prime: Some(self.p_a_prime.value),
            p_b_prime: Some(self.p_b_prime.value),
        }
    }

    /// Named estimates in a fixed order.
    pub fn entries(&self) -> [(&'static str, EstimateWithCi); 8] {
        [
            ("P_A", self.p_a),
            ("P_B", self.p_b),
            ("P_AB", self.p_ab),
            ("P_AB'", self.p_ab_prime),
            ("P_A'B", self.p_a_prime_b),
            ("P_A'B'", self.p_a_prime_b_prime),
            ("P_A'", self.p_a_prime),
            ("P_B'", self.p_b_prime),
        ]
    }
}

fn run_chunk(cfg: &RunConfig, params: &DetectorParams, pair: SettingPair, chunk: u64) -> Result<PairCounts> {
    let angles = cfg.quad.angles(pair);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(pair.index() as u64);
    let start = chunk * CHUNK_TRIALS;
    let end = (start + CHUNK_TRIALS).min(cfg.n_trials);
    let mut c = PairCounts::default();
    for trial in start..end {
        rng.set_word_pos(trial as u128 * WORDS_PER_TRIAL);
        let o = run_trial(params, cfg.scheme, angles, &mut rng, cfg.options)?;
        c.trials += 1;
        c.alice += o.any_alice as u64;
        c.bob += o.any_bob as u64;
        c.coincidence += o.any_coincidence as u64;
        c.alice_first_half += o.alice_shot[0] as u64;
        c.both_first_half += (o.alice_shot[0] && o.bob_shot[0]) as u64;
        c.coincidence_without_both += (o.any_coincidence && !(o.any_alice && o.any_bob)) as u64;
    }
    Ok(c)
}

/// Counts for one angle pair.
pub fn simulate_pair(cfg: &RunConfig, pair: SettingPair) -> Result<PairCounts> {
    let all = simulate_all(cfg, &[pair])?;
    Ok(all[0])
}

fn simulate_all(cfg: &RunConfig, pairs: &[SettingPair]) -> Result<Vec<PairCounts>> {
    cfg.validate()?;
    let params = DetectorParams::new(cfg.k)?;
    let n_chunks = cfg.n_trials.div_ceil(CHUNK_TRIALS);
    let jobs: Vec<(usize, u64)> = (0..pairs.len())
        .flat_map(|p| (0..n_chunks).map(move |c| (p, c)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidInput(format!("cannot start {} workers: {e}", cfg.workers)))?;
    let chunks: Vec<PairCounts> = pool.install(|| {
        jobs.par_iter()
            .map(|&(p, c)| run_chunk(cfg, &params, pairs[p], c))
            .collect::<Result<Vec<_>>>()
    })?;
    // `collect` keeps job order, so the reduction runs in trial-index order.
    let mut out = vec![PairCounts::default(); pairs.len()];
    for (&(p, _), counts) in jobs.iter().zip(chunks) {
        out[p] = out[p].merge(counts);
    }
    Ok(out)
}

pub fn estimate_table(cfg: &RunConfig) -> Result<EstimatedTable> {
    let counts = simulate_all(cfg, &SettingPair::ALL)?;
    let counts: [PairCounts; 4] = counts.try_into().expect("four pairs");
    let [ab, ab_prime, a_prime_b, a_prime_b_prime] = counts;
    let est = |count: u64, c: &PairCounts| EstimateWithCi::from_count(count, c.trials);
    let p_a = est(ab.alice, &ab);
    let p_b = est(ab.bob, &ab);
    let p_ab = est(ab.coincidence, &ab);
    let p_ab_prime = est(ab_prime.coincidence, &ab_prime);
    let p_a_prime_b = est(a_prime_b.coincidence, &a_prime_b);
    let p_a_prime_b_prime = est(a_prime_b_prime.coincidence, &a_prime_b_prime);
    let ch = ch_value(&ProbabilityTable {
        p_a: p_a.value,
        p_b: p_b.value,
        p_ab: p_ab.value,
        p_ab_prime: p_ab_prime.value,
        p_a_prime_b: p_a_prime_b.value,
        p_a_prime_b_prime: p_a_prime_b_prime.value,
        p_a_prime: None,
        p_b_prime: None,
    })?;
    let ch_std_error = [p_a, p_b, p_ab, p_ab_prime, p_a_prime_b, p_a_prime_b_prime]
        .iter()
        .map(|e| e.std_error * e.std_error)
        .sum::<f64>()
        .sqrt();
    Ok(EstimatedTable {
        p_a,
        p_b,
        p_ab,
        p_ab_prime,
        p_a_prime_b,
        p_a_prime_b_prime,
        p_a_prime: est(a_prime_b_prime.alice, &a_prime_b_prime),
        p_b_prime: est(a_prime_b_prime.bob, &a_prime_b_prime),
        ch,
        ch_std_error,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZEntry {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub closed_form: f64,
    pub z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiscrepancyReport {
    pub reference: Analysis,
    /// `k` used for the closed form (differs from the run's `k` only in
    /// negative controls).
    pub reference_k: f64,
    pub closed_form_is_exact: bool,
    pub estimated: EstimatedTable,
    pub closed_form: ProbabilityTable,
    pub closed_form_ch: ChBreakdown,
    pub entries: Vec<ZEntry>,
    pub ch_z: f64,
    pub max_abs_z: f64,
    /// `max_abs_z <= Z_THRESHOLD` over the probability entries.
    pub pass: bool,
    /// Pairs whose estimated coincidence exceeds a marginal of the same run.
    pub monotonicity_violations: Vec<SettingPair>,
}

fn z_score(estimate: f64, std_error: f64, expected: f64, n: u64) -> f64 {
    // A count of 0 or n has zero binomial error; fall back to the error
    // implied by the expected value.
    let se = if std_error > 0.0 {
        std_error
    } else {
        (expected * (1.0 - expected) / n as f64).sqrt()
    };
    let diff = estimate - expected;
    if diff == 0.0 {
        0.0
    } else if se == 0.0 {
        f64::INFINITY.copysign(diff)
    } else {
        diff / se
    }
}

pub fn compare_to_analytic(cfg: &RunConfig) -> Result<DiscrepancyReport> {
    compare_with_reference_k(cfg, cfg.k)
}

/// As [`compare_to_analytic`] but against the closed form at `reference_k`.
pub fn compare_with_reference_k(cfg: &RunConfig, reference_k: f64) -> Result<DiscrepancyReport> {
    let estimated = estimate_table(cfg)?;
    let reference = cfg.reference_analysis();
    let closed_form = analysis_table(reference_k, &cfg.quad, reference)?;
    let closed_form_ch = ch_value(&closed_form)?;
    let expected = [
        closed_form.p_a,
        closed_form.p_b,
        closed_form.p_ab,
        closed_form.p_ab_prime,
        closed_form.p_a_prime_b,
        closed_form.p_a_prime_b_prime,
        closed_form.p_a_prime.expect("closed forms carry primed marginals"),
        closed_form.p_b_prime.expect("closed forms carry primed marginals"),
    ];
    let entries: Vec<ZEntry> = estimated
        .entries()
        .into_iter()
        .zip(expected)
        .map(|((name, e), closed)| ZEntry {
            name: name.to_string(),
            estimate: e.value,
            std_error: e.std_error,
            closed_form: closed,
            z: z_score(e.value, e.std_error, closed, e.n),
        })
        .collect();
    let max_abs_z = entries.iter().map(|e| e.z.abs()).fold(0.0, f64::max);
    let ch_z = if estimated.ch_std_error > 0.0 {
        (estimated.ch.ch - closed_form_ch.ch) / estimated.ch_std_error
    } else if estimated.ch.ch == closed_form_ch.ch {
        0.0
    } else {
        f64::INFINITY.copysign(estimated.ch.ch - closed_form_ch.ch)
    };
    let monotonicity_violations = estimated.values().monotonicity_violations();
    Ok(DiscrepancyReport {
        reference,
        reference_k,
        closed_form_is_exact: cfg.closed_form_is_exact(),
        closed_form,
        closed_form_ch,
        entries,
        ch_z,
        max_abs_z,
        pass: max_abs_z <= Z_THRESHOLD,
        monotonicity_violations,
        estimated,
    })
}
