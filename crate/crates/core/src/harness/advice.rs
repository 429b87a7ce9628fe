//! Removing advice with a tournament.
//!
//! The toy language has 6-bit inputs `x = (T, k)`: `L(x)` is bit `k` of
//! the largest satisfying assignment of the 4-variable formula number `T`
//! (all zeros when it is unsatisfiable). A machine `M(x, r, i)` reads a
//! random string `r` of `t` bits and advice `i` of `a` bits. For "good"
//! `r` it computes `L` exactly under advice `alpha(r)`; everything else is
//! noise, and every other `(r, i)` is wrong on at least one input.
//!
//! The demo draws `r`, turns each advice string into an oracle
//! `A_i(q) = M(q, r, i)` and lets a tournament of nonadaptive lexmax duels
//! pick the answer without ever seeing `alpha`.

use serde::{Deserialize, Serialize};

use super::wilson;
use crate::boolean::{from_truth_table, Formula};
use crate::error::{Error, Result};
use crate::field::Rng;
use crate::selectors::{
    select_nonadaptive_lexmax, tournament, DecisionOracle, Event, LexmaxOracle, LexmaxQuery,
};

/// Input length of the toy language.
pub const INPUT_BITS: usize = 6;
const FORMULA_VARS: usize = 4;
const MIN_GOOD_FRACTION: f64 = 5.0 / 6.0;

fn default_t() -> usize {
    12
}

fn default_good_fraction() -> f64 {
    MIN_GOOD_FRACTION
}

fn default_draws() -> u64 {
    200
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdviceDemoConfig {
    /// Advice length `a`, at most 3.
    pub advice_bits: usize,
    /// Randomness length `t`, 1 to 12.
    #[serde(default = "default_t")]
    pub randomness_bits: usize,
    /// Fraction of random strings on which the right advice makes `M`
    /// correct everywhere.
    #[serde(default = "default_good_fraction")]
    pub good_fraction: f64,
    #[serde(default = "default_draws")]
    pub draws: u64,
    #[serde(default)]
    pub seed: u64,
}

impl AdviceDemoConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdviceReport {
    pub config: AdviceDemoConfig,
    pub oracles: usize,
    /// Exact fraction of `r` with `M(., r, alpha(r)) = L`, by enumeration.
    pub measured_good_fraction: f64,
    pub draws: u64,
    pub successes: u64,
    pub rate: f64,
    pub wilson_lower: f64,
    pub wilson_upper: f64,
    /// Draws whose `r` was good.
    pub good_draws: u64,
    /// Draws in which the oracle of `alpha(r)` was never doubted.
    pub honest_survived: u64,
    pub mean_duels: f64,
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn hash(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(seed ^ 0x9e37_79b9_7f4a_7c15), |h, &p| mix(h ^ p.wrapping_mul(0x9e37_79b9_7f4a_7c15)))
}

/// The toy machine. Everything is a fixed function of the seed.
struct Machine {
    seed: u64,
    a: usize,
    good_r: u64,
    formulas: Vec<Formula>,
    language: Vec<bool>,
}

impl Machine {
    fn new(cfg: &AdviceDemoConfig) -> Result<Self> {
        if cfg.advice_bits > 3 {
            return Err(Error::Config(format!("advice length {} exceeds 3", cfg.advice_bits)));
        }
        if !(1..=12).contains(&cfg.randomness_bits) {
            return Err(Error::Config(format!("randomness length {} not in 1..=12", cfg.randomness_bits)));
        }
        if !(0.0..=1.0).contains(&cfg.good_fraction) {
            return Err(Error::Config(format!("good fraction {} not in [0, 1]", cfg.good_fraction)));
        }
        if cfg.draws == 0 {
            return Err(Error::Config("draws must be at least 1".into()));
        }
        let templates = 1usize << (INPUT_BITS - 2);
        // Template 0 is unsatisfiable; the rest are fixed pseudo-random.
        let formulas: Vec<Formula> = (0..templates as u64)
            .map(|t| from_truth_table(FORMULA_VARS, if t == 0 { 0 } else { hash(cfg.seed, &[1, t]) & 0xffff }))
            .collect();
        let mut lexmax = LexmaxOracle::default();
        let mut language = Vec::with_capacity(1 << INPUT_BITS);
        for x in 0..1u64 << INPUT_BITS {
            let (phi, j) = (formulas[(x >> 2) as usize].clone(), (x & 3) as usize);
            language.push(lexmax.decide(&LexmaxQuery { phi, j })?);
        }
        let strings = 1u64 << cfg.randomness_bits;
        let good_r = (cfg.good_fraction * strings as f64 - 1e-9).ceil().max(0.0) as u64;
        Ok(Self {
            seed: cfg.seed,
            a: cfg.advice_bits,
            good_r,
            formulas,
            language,
        })
    }

    fn is_good(&self, r: u64) -> bool {
        r < self.good_r
    }

    fn alpha(&self, r: u64) -> usize {
        (hash(self.seed, &[2, r]) % (1 << self.a)) as usize
    }

    /// The input on which `(r, i)` is forced wrong unless it is good advice.
    fn forced_wrong(&self, r: u64, i: usize) -> u64 {
        hash(self.seed, &[3, r, i as u64]) % (1 << INPUT_BITS)
    }

    fn eval(&self, x: u64, r: u64, i: usize) -> bool {
        let truth = self.language[x as usize];
        if self.is_good(r) && i == self.alpha(r) {
            truth
        } else if x == self.forced_wrong(r, i) {
            !truth
        } else {
            truth ^ (hash(self.seed, &[4, r, i as u64, x]) & 1 == 1)
        }
    }

    fn input_of(&self, q: &LexmaxQuery) -> Result<u64> {
        let t = self
            .formulas
            .iter()
            .position(|f| *f == q.phi)
            .ok_or_else(|| Error::OracleFailure("query formula is not a template of the language".into()))?;
        if q.j >= FORMULA_VARS {
            return Err(Error::Arity(format!("bit {} of a {FORMULA_VARS}-variable assignment", q.j)));
        }
        Ok(((t as u64) << 2) | q.j as u64)
    }

    /// Fraction of `r` for which advice `alpha(r)` is right on every input.
    fn measured_good_fraction(&self, t: usize) -> f64 {
        let strings = 1u64 << t;
        let good = (0..strings)
            .filter(|&r| (0..1u64 << INPUT_BITS).all(|x| self.eval(x, r, self.alpha(r)) == self.language[x as usize]))
            .count();
        good as f64 / strings as f64
    }
}

struct AdviceOracle<'m> {
    machine: &'m Machine,
    r: u64,
    i: usize,
}

impl DecisionOracle<LexmaxQuery> for AdviceOracle<'_> {
    fn decide(&mut self, q: &LexmaxQuery) -> Result<bool> {
        let x = self.machine.input_of(q)?;
        Ok(self.machine.eval(x, self.r, self.i))
    }
}

/// Runs the demo. Fails with [`Error::Config`] when fewer than 5/6 of the
/// random strings are good, checked by enumerating all of them.
pub fn demo_advice_removal(cfg: &AdviceDemoConfig) -> Result<AdviceReport> {
    let machine = Machine::new(cfg)?;
    let measured = machine.measured_good_fraction(cfg.randomness_bits);
    if measured < MIN_GOOD_FRACTION - 1e-12 {
        return Err(Error::Config(format!(
            "only {measured:.4} of random strings are good; at least 5/6 are required"
        )));
    }
    let m = 1usize << cfg.advice_bits;
    let (mut successes, mut good_draws, mut survived, mut duels) = (0u64, 0u64, 0u64, 0u64);
    for draw in 0..cfg.draws {
        let mut rng = Rng::substream(cfg.seed, draw);
        let r = rng.next_u64() % (1 << cfg.randomness_bits);
        let x = rng.next_u64() % (1 << INPUT_BITS);
        let (phi, k) = (&machine.formulas[(x >> 2) as usize], (x & 3) as usize);
        let query = LexmaxQuery { phi: phi.clone(), j: k };
        let mut oracles: Vec<AdviceOracle<'_>> = (0..m).map(|i| AdviceOracle { machine: &machine, r, i }).collect();
        let outcome = tournament(
            &mut oracles,
            |o| o.decide(&query),
            |o0, o1, _| select_nonadaptive_lexmax(phi, k, o0, o1),
            &mut rng,
        )?;
        successes += u64::from(outcome.answer == machine.language[x as usize]);
        let honest = machine.alpha(r);
        good_draws += u64::from(machine.is_good(r));
        let mut honest_lost = false;
        for e in &outcome.diagnostics {
            if let Event::Duel { loser, .. } = e {
                duels += 1;
                honest_lost |= *loser == honest;
            }
        }
        survived += u64::from(machine.is_good(r) && !honest_lost);
    }
    let (wilson_lower, wilson_upper) = wilson(successes, cfg.draws);
    Ok(AdviceReport {
        config: cfg.clone(),
        oracles: m,
        measured_good_fraction: measured,
        draws: cfg.draws,
        successes,
        rate: successes as f64 / cfg.draws as f64,
        wilson_lower,
        wilson_upper,
        good_draws,
        honest_survived: survived,
        mean_duels: duels as f64 / cfg.draws as f64,
    })
}
