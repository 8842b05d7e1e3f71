use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{motion_match_reward, rollout, PdGains, RolloutConfig};
use crate::dynamics::{BodyParams, SquatReference};
use crate::error::{invalid, Error, Result};
use crate::num::Real;

/// Reference speed multipliers the gains are tuned across.
pub const TIME_SCALES: [f64; 5] = [0.8, 0.9, 1.0, 1.1, 1.2];
pub const MIN_BUDGET: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    /// Objective evaluations, including the initial gains.
    pub budget: usize,
    /// Offspring per generation.
    pub lambda: usize,
    /// Standard deviation of the log-normal mutation.
    pub sigma: f64,
    pub seed: u64,
    /// Squat cycles per rollout.
    pub cycles: usize,
    /// Upper bound on each stiffness gain, N·m/rad.
    pub kp_max: f64,
    /// Upper bound on each damping gain, N·m·s/rad.
    pub kd_max: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            budget: MIN_BUDGET,
            lambda: 8,
            sigma: 0.2,
            seed: 42,
            cycles: 2,
            kp_max: 1e4,
            kd_max: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainSearch<T> {
    pub best: PdGains<T>,
    pub best_reward: f64,
    /// Best objective after the initial evaluation and after each generation.
    pub trace: Vec<f64>,
    pub evaluations: usize,
    /// Rollouts that diverged and scored zero.
    pub diverged: usize,
}

/// (1+λ) evolution strategy on the mean motion-matching reward over
/// `references`. Each gain is mutated as `g·exp(σ·N(0,1))`, capped at the
/// configured bounds, with the step `σ` itself self-adapted log-normally from
/// its initial value. A diverged rollout scores zero. The parent is replaced
/// only by a strictly better child.
pub fn optimize_gains<T: Real>(
    initial: &PdGains<T>,
    references: &[SquatReference<T>],
    body: &BodyParams<T>,
    cfg: &SearchConfig,
) -> Result<GainSearch<T>> {
    if cfg.budget < MIN_BUDGET {
        return Err(invalid(
            "budget",
            format!("{} below {MIN_BUDGET} evaluations", cfg.budget),
        ));
    }
    if cfg.lambda == 0 || !(cfg.sigma > 0.0 && cfg.sigma.is_finite()) || cfg.cycles == 0 {
        return Err(invalid("search", "need lambda ≥ 1, sigma > 0, cycles ≥ 1"));
    }
    if !(cfg.kp_max > 0.0 && cfg.kd_max > 0.0) {
        return Err(invalid("search", "gain bounds must be positive"));
    }
    if references.is_empty() {
        return Err(invalid("references", "empty"));
    }
    initial.validate()?;

    let rollout_cfg = RolloutConfig {
        cycles: cfg.cycles,
        tau_max: 0.0,
        assist_scale: 0.0,
    };
    let mut diverged = 0;
    let mut rollouts = 0;
    let mut last_failure: Option<String> = None;
    let mut evaluate = |g: &PdGains<T>| -> f64 {
        let mut total = 0.0;
        for r in references {
            rollouts += 1;
            match rollout(body, g, r, None, &rollout_cfg) {
                Ok(log) => total += motion_match_reward(&log, r).unwrap_or(0.0),
                Err(e) => {
                    diverged += 1;
                    last_failure = Some(format!("{e} (gains {g:?})"));
                }
            }
        }
        total / references.len() as f64
    };

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let tau = 1.0 / (6.0_f64).sqrt();
    let mut best = *initial;
    let mut best_sigma = cfg.sigma;
    let mut best_reward = evaluate(&best);
    let mut evaluations = 1;
    let mut trace = vec![best_reward];
    while evaluations + cfg.lambda <= cfg.budget {
        let (parent, parent_sigma) = (best, best_sigma);
        for _ in 0..cfg.lambda {
            let z: f64 = StandardNormal.sample(&mut rng);
            let sigma = parent_sigma * (tau * z).exp();
            let mut mutate = |v: T, max: f64| {
                let z: f64 = StandardNormal.sample(&mut rng);
                (v * T::of((sigma * z).exp())).min(T::of(max))
            };
            let child = PdGains {
                kp: parent.kp.map(|v| mutate(v, cfg.kp_max)),
                kd: parent.kd.map(|v| mutate(v, cfg.kd_max)),
            };
            let reward = evaluate(&child);
            evaluations += 1;
            if reward > best_reward {
                best = child;
                best_sigma = sigma;
                best_reward = reward;
            }
        }
        trace.push(best_reward);
    }

    if diverged == rollouts {
        return Err(Error::OptimizationFailed(format!(
            "all {rollouts} rollouts diverged; last: {}",
            last_failure.unwrap_or_default()
        )));
    }
    Ok(GainSearch {
        best,
        best_reward,
        trace,
        evaluations,
        diverged,
    })
}
