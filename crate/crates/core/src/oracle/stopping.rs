use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::OracleError;
use crate::game::{Ledger, Outcome, Series};
use crate::rational::{self, Rational};

#[derive(Clone)]
pub enum RuleKind {
    /// Stop only at the bound.
    Fixed,
    /// First `t` with `series_t >= level`.
    UpCrossing {
        series: Series,
        level: Rational,
    },
    /// First `t` with `series_t <= level`.
    DownCrossing {
        series: Series,
        level: Rational,
    },
    /// Stop at `t` with probability `numer / 256`, decided by a keyed hash of
    /// `(seed, X_1..X_t)` so that the decision is a function of the prefix.
    RandomPrefix {
        seed: u64,
        numer: u32,
    },
    Custom(Arc<dyn Fn(&Ledger) -> bool + Send + Sync>),
}

impl fmt::Debug for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleKind::Fixed => f.write_str("Fixed"),
            RuleKind::UpCrossing { series, level } => write!(f, "UpCrossing({} >= {level})", series.name()),
            RuleKind::DownCrossing { series, level } => write!(f, "DownCrossing({} <= {level})", series.name()),
            RuleKind::RandomPrefix { seed, numer } => write!(f, "RandomPrefix(seed={seed}, q={numer}/256)"),
            RuleKind::Custom(_) => f.write_str("Custom"),
        }
    }
}

/// A stopping time bounded by `bound`: `tau = min(bound, first t at which the
/// predicate holds)`, evaluated on the prefix `X_1..X_t` only.
#[derive(Debug, Clone)]
pub struct StoppingRule {
    pub id: String,
    pub bound: usize,
    pub kind: RuleKind,
}

impl StoppingRule {
    pub fn fixed(t: usize) -> Self {
        StoppingRule { id: format!("fixed-{t}"), bound: t, kind: RuleKind::Fixed }
    }

    pub fn up_crossing(series: Series, level: Rational, bound: usize) -> Self {
        StoppingRule {
            id: format!("up-{}-{}-{bound}", series.name(), rational::to_fraction_string(&level)),
            bound,
            kind: RuleKind::UpCrossing { series, level },
        }
    }

    pub fn down_crossing(series: Series, level: Rational, bound: usize) -> Self {
        StoppingRule {
            id: format!("down-{}-{}-{bound}", series.name(), rational::to_fraction_string(&level)),
            bound,
            kind: RuleKind::DownCrossing { series, level },
        }
    }

    pub fn random_prefix(seed: u64, numer: u32, bound: usize) -> Self {
        StoppingRule {
            id: format!("prefix-{seed}-{numer}-{bound}"),
            bound,
            kind: RuleKind::RandomPrefix { seed, numer: numer.min(256) },
        }
    }

    pub fn custom(id: impl Into<String>, bound: usize, f: impl Fn(&Ledger) -> bool + Send + Sync + 'static) -> Self {
        StoppingRule { id: id.into(), bound, kind: RuleKind::Custom(Arc::new(f)) }
    }

    /// Parses `fixed:T`, `up:SERIES:LEVEL[:BOUND]`, `down:SERIES:LEVEL[:BOUND]`
    /// or `prefix:SEED:NUMER[:BOUND]`; the bound defaults to `horizon`.
    pub fn parse(text: &str, horizon: usize) -> Result<Self, OracleError> {
        let bad = || OracleError::BadRule(text.to_string());
        let parts: Vec<&str> = text.trim().split(':').map(str::trim).collect();
        let bound = |i: usize| -> Result<usize, OracleError> {
            match parts.get(i) {
                Some(b) => b.parse().map_err(|_| bad()),
                None => Ok(horizon),
            }
        };
        let level = |i: usize| parts.get(i).and_then(|l| rational::parse(l).ok()).ok_or_else(bad);
        let series = |i: usize| parts.get(i).and_then(|s| Series::parse(s)).ok_or_else(bad);
        match parts[0] {
            "fixed" if parts.len() == 2 => Ok(StoppingRule::fixed(bound(1)?)),
            "up" if (3..=4).contains(&parts.len()) => Ok(StoppingRule::up_crossing(series(1)?, level(2)?, bound(3)?)),
            "down" if (3..=4).contains(&parts.len()) => {
                Ok(StoppingRule::down_crossing(series(1)?, level(2)?, bound(3)?))
            }
            "prefix" if (3..=4).contains(&parts.len()) => {
                let seed = parts[1].parse().map_err(|_| bad())?;
                let numer = parts[2].parse().map_err(|_| bad())?;
                Ok(StoppingRule::random_prefix(seed, numer, bound(3)?))
            }
            _ => Err(bad()),
        }
    }

    /// Whether `tau` equals the current index of `ledger`, given that it has
    /// not stopped earlier. Series missing from the ledger never trigger.
    pub fn stops(&self, ledger: &Ledger) -> bool {
        if ledger.rounds() >= self.bound {
            return true;
        }
        match &self.kind {
            RuleKind::Fixed => false,
            RuleKind::UpCrossing { series, level } => ledger.current(*series).is_some_and(|v| v >= *level),
            RuleKind::DownCrossing { series, level } => ledger.current(*series).is_some_and(|v| v <= *level),
            RuleKind::RandomPrefix { seed, numer } => prefix_coin(*seed, ledger.outcomes()) < *numer,
            RuleKind::Custom(f) => f(ledger),
        }
    }
}

fn prefix_coin(seed: u64, past: &[Outcome]) -> u32 {
    let mask = past.iter().enumerate().filter(|(_, o)| **o == Outcome::Heads).fold(0u64, |m, (i, _)| m | 1 << i);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(mask);
    rng.set_word_pos(u128::from(past.len() as u64) << 4);
    rng.gen_range(0..256)
}

/// A reproducible family of bounded stopping rules over `series`.
///
/// Cycles through fixed times, up-crossings and down-crossings at levels
/// drawn from `levels`, and prefix-hash rules, with bounds drawn from
/// `0..=horizon`.
pub fn sample_rules(seed: u64, count: usize, horizon: usize, series: Series, levels: &[Rational]) -> Vec<StoppingRule> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let bound = rng.gen_range(0..=horizon);
            let level = (!levels.is_empty()).then(|| levels[rng.gen_range(0..levels.len())].clone());
            match (i % 4, level) {
                (1, Some(level)) => StoppingRule::up_crossing(series, level, horizon),
                (2, Some(level)) => StoppingRule::down_crossing(series, level, horizon),
                (3, _) => StoppingRule::random_prefix(rng.gen(), rng.gen_range(16..=192), horizon),
                _ => StoppingRule::fixed(bound),
            }
        })
        .collect()
}
