use bellsim_core::inequality::{
    ch_value, eval_discrete_lhv, DiscreteLhvModel, SettingIndices, THEOREM_TOLERANCE,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::{emit, Failure, SCHEMA_VERSION};

#[derive(clap::Args)]
pub struct Args {
    #[arg(long)]
    models: u64,
    /// Largest hidden-state set drawn.
    #[arg(long, default_value_t = 64)]
    max_states: usize,
    /// Inject a detection probability of 1.3 into the first model.
    #[arg(long)]
    adversarial: bool,
}

#[derive(Debug, Serialize)]
pub struct Summary {
    pub schema_version: u32,
    pub command: &'static str,
    pub seed: u64,
    pub models: u64,
    pub max_states: usize,
    pub min_ch: f64,
    /// Index of the model attaining `min_ch`.
    pub argmin: u64,
    pub tolerance: f64,
    pub pass: bool,
}

type Responses = Vec<Vec<f64>>;

fn draw<R: Rng>(rng: &mut R, max_states: usize) -> (Vec<f64>, Responses, Responses) {
    let n = rng.random_range(1..=max_states);
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-9).collect();
    let total: f64 = raw.iter().sum();
    let weights = raw.into_iter().map(|w| w / total).collect();
    // Deterministic responses at the corners are mixed in with graded ones.
    let mut table = || -> Responses {
        (0..n)
            .map(|_| {
                (0..2)
                    .map(|_| match rng.random_range(0..4) {
                        0 => 0.0,
                        1 => 1.0,
                        _ => rng.random(),
                    })
                    .collect()
            })
            .collect()
    };
    let a = table();
    let b = table();
    (weights, a, b)
}

pub fn check(models: u64, max_states: usize, seed: u64, adversarial: bool) -> Result<Summary, Failure> {
    if models == 0 {
        return Err(Failure::config("--models must be at least 1"));
    }
    if max_states == 0 {
        return Err(Failure::config("--max-states must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut min_ch, mut argmin) = (f64::INFINITY, 0);
    for i in 0..models {
        let (weights, mut ra, rb) = draw(&mut rng, max_states);
        if adversarial && i == 0 {
            ra[0][0] = 1.3;
        }
        let model = DiscreteLhvModel::new(weights, ra, rb)?;
        let ch = ch_value(&eval_discrete_lhv(&model, SettingIndices::default())?)?.ch;
        if ch < min_ch {
            min_ch = ch;
            argmin = i;
        }
    }
    Ok(Summary {
        schema_version: SCHEMA_VERSION,
        command: "lhv-check",
        seed,
        models,
        max_states,
        min_ch,
        argmin,
        tolerance: THEOREM_TOLERANCE,
        pass: min_ch >= -THEOREM_TOLERANCE,
    })
}

pub fn run(args: Args, seed: Option<u64>) -> Result<(), Failure> {
    let summary = check(args.models, args.max_states, seed.unwrap_or(0), args.adversarial)?;
    let mut json = serde_json::to_string_pretty(&summary).map_err(Failure::config)?;
    json.push('\n');
    emit(None, &json)?;
    if summary.pass {
        Ok(())
    } else {
        Err(Failure::comparison(format!("min CH = {:e} below -{THEOREM_TOLERANCE:e}", summary.min_ch)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn many_models_pass() {
        let s = check(2000, 64, 4, false).unwrap();
        assert!(s.pass && s.min_ch >= -THEOREM_TOLERANCE);
    }

    #[test]
    fn single_model_is_deterministic() {
        let a = check(1, 64, 17, false).unwrap();
        let b = check(1, 64, 17, false).unwrap();
        assert_eq!(a.min_ch, b.min_ch);
        assert_eq!(a.argmin, 0);
    }

    #[test]
    fn adversarial_response_is_rejected() {
        let e = check(5, 8, 1, true).unwrap_err();
        assert_eq!(e.code, 1);
        assert!(e.message.contains("1.3"), "{}", e.message);
        assert!(check(0, 8, 1, false).is_err());
    }
}
