//! `name:key=value,key=value` strategy strings.
//!
//! | name           | parameters                                                   |
//! |----------------|--------------------------------------------------------------|
//! | `idle`         |                                                              |
//! | `constant`     | `lambda`, `beta` (0)                                         |
//! | `table1`       | shorthand for `constant:lambda=1/2,beta=1`                   |
//! | `doubling`     | shorthand for `constant:lambda=1,beta=0`                     |
//! | `guard`        | `n_min`, `lambda`, `beta` (0): constant base behind a floor  |
//! | `arbitrage`    | `b`, `beta` (0)                                              |
//! | `bet-and-save` | `borrows` (`1|1/2|...`), `period` or `crossing`+`max-len`, `mu` (1) |
//! | `random`       | `seed` (0), `repay` (false), `max-borrow` (4 halves)         |
//!
//! Every strategy except `arbitrage` also accepts `b` for a constant bonus.
//! Numbers are exact rationals (`p` or `p/q`); decimals are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_traits::Zero;

use super::{
    arbitrage_strategy, bet_and_save, constant_strategy, idle, net_floor_guard, PeriodRule, RandomConfig,
    RandomStrategy, SaveSchedule, StrategyError,
};
use crate::game::{PayoffSchedule, Strategy};
use crate::rational::{self, int, ratio, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrategySpec {
    pub name: String,
    pub params: BTreeMap<String, String>,
}

impl StrategySpec {
    pub fn parse(text: &str) -> Result<Self, StrategyError> {
        let text = text.trim();
        let (name, rest) = text.split_once(':').unwrap_or((text, ""));
        let mut params = BTreeMap::new();
        for pair in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = pair.split_once('=').ok_or_else(|| StrategyError::BadValue {
                param: pair.to_string(),
                value: "expected key=value".into(),
            })?;
            params.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        Ok(StrategySpec { name: name.trim().to_string(), params })
    }

    fn rational(&self, key: &'static str) -> Result<Option<Rational>, StrategyError> {
        self.params
            .get(key)
            .map(|v| rational::parse(v).map_err(|source| StrategyError::BadRational { param: key.into(), source }))
            .transpose()
    }

    fn required(&self, key: &'static str) -> Result<Rational, StrategyError> {
        self.rational(key)?.ok_or(StrategyError::MissingParam { strategy: self.name.clone(), param: key })
    }

    fn integer<T: std::str::FromStr>(&self, key: &'static str, default: T) -> Result<T, StrategyError> {
        match self.params.get(key) {
            None => Ok(default),
            Some(v) => v.parse().map_err(|_| StrategyError::BadValue { param: key.into(), value: v.clone() }),
        }
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), StrategyError> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(StrategyError::UnknownParam { strategy: self.name.clone(), param: k.clone() }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for StrategySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        let parts: Vec<String> = self.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        if !parts.is_empty() {
            write!(f, ":{}", parts.join(","))?;
        }
        Ok(())
    }
}

/// A parsed strategy together with the game it is meant to be played in.
#[derive(Clone)]
pub struct BuiltStrategy {
    pub spec: StrategySpec,
    pub strategy: Arc<dyn Strategy>,
    pub schedule: PayoffSchedule,
    pub save: Option<SaveSchedule>,
    /// Pathwise net floor enforced by construction, if any.
    pub net_floor: Option<Rational>,
}

impl fmt::Debug for BuiltStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BuiltStrategy").field("spec", &self.spec.to_string()).field("schedule", &self.schedule).finish()
    }
}

pub fn parse_strategy(text: &str) -> Result<BuiltStrategy, StrategyError> {
    StrategySpec::parse(text)?.build()
}

impl StrategySpec {
    pub fn build(&self) -> Result<BuiltStrategy, StrategyError> {
        let mut schedule = match self.rational("b")? {
            Some(b) => PayoffSchedule::constant(b)?,
            None => PayoffSchedule::fair(),
        };
        let mut save = None;
        let mut net_floor = None;
        let strategy: Arc<dyn Strategy> = match self.name.as_str() {
            "idle" => {
                self.check_keys(&["b"])?;
                Arc::new(idle())
            }
            "constant" => {
                self.check_keys(&["lambda", "beta", "b"])?;
                let beta = self.rational("beta")?.unwrap_or_else(Rational::zero);
                Arc::new(constant_strategy(self.required("lambda")?, beta)?)
            }
            "table1" => {
                self.check_keys(&["b"])?;
                Arc::new(constant_strategy(ratio(1, 2), int(1))?)
            }
            "doubling" => {
                self.check_keys(&["b"])?;
                Arc::new(constant_strategy(int(1), int(0))?)
            }
            "guard" => {
                self.check_keys(&["n-min", "lambda", "beta", "b"])?;
                let beta = self.rational("beta")?.unwrap_or_else(Rational::zero);
                let floor = self.required("n-min")?;
                let base = constant_strategy(self.required("lambda")?, beta)?;
                net_floor = Some(floor.clone());
                Arc::new(net_floor_guard(base, floor)?)
            }
            "arbitrage" => {
                self.check_keys(&["b", "beta"])?;
                schedule = PayoffSchedule::constant(self.required("b")?)?;
                let beta = self.rational("beta")?.unwrap_or_else(Rational::zero);
                Arc::new(arbitrage_strategy(schedule.clone(), beta))
            }
            "bet-and-save" => {
                self.check_keys(&["borrows", "period", "crossing", "max-len", "mu", "b"])?;
                let borrows = self
                    .params
                    .get("borrows")
                    .ok_or(StrategyError::MissingParam { strategy: self.name.clone(), param: "borrows" })?
                    .split('|')
                    .map(|v| {
                        rational::parse(v)
                            .map_err(|source| StrategyError::BadRational { param: "borrows".into(), source })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let period = match self.rational("crossing")? {
                    Some(target) => PeriodRule::FirstCrossing { target, max_len: self.integer("max-len", 2usize)? },
                    None => PeriodRule::Fixed(self.integer("period", 1usize)?),
                };
                let mu = self.rational("mu")?.unwrap_or_else(|| int(1));
                let schedule = SaveSchedule::new(borrows, period)?;
                save = Some(schedule.clone());
                Arc::new(bet_and_save(schedule, Arc::new(constant_strategy(mu, int(0))?)))
            }
            "random" => {
                self.check_keys(&["seed", "repay", "max-borrow", "b"])?;
                let config = RandomConfig {
                    allow_repay: self.integer("repay", false)?,
                    max_borrow_halves: self.integer("max-borrow", 4i64)?,
                };
                Arc::new(RandomStrategy::new(self.integer("seed", 0u64)?, config))
            }
            other => return Err(StrategyError::Unknown(other.to_string())),
        };
        Ok(BuiltStrategy { spec: self.clone(), strategy, schedule, save, net_floor })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{run_game, Path, Series};

    #[test]
    fn parses_and_runs_constant() {
        let built = parse_strategy("constant:lambda=1/2,beta=1").unwrap();
        let l = run_game(&built.strategy, &Path::parse("-1,+1").unwrap(), &built.schedule).unwrap();
        assert_eq!(l.series(Series::Gross).unwrap(), vec![int(1), int(1), int(3)]);
        assert_eq!(built.spec.to_string(), "constant:beta=1,lambda=1/2");
    }

    #[test]
    fn arbitrage_carries_its_schedule() {
        let built = parse_strategy("arbitrage:b=1/10").unwrap();
        let l = run_game(&built.strategy, &Path::parse("+1,-1,+1").unwrap(), &built.schedule).unwrap();
        assert_eq!(l.current(Series::Gross), Some(ratio(1331, 1000)));
    }

    #[test]
    fn bet_and_save_spec() {
        let built = parse_strategy("bet-and-save:borrows=1|1/2,crossing=2,max-len=3,mu=1/2").unwrap();
        let save = built.save.unwrap();
        assert_eq!(save.periods(), 2);
        assert_eq!(save.total_liabilities(), &ratio(3, 2));
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(matches!(parse_strategy("martingale"), Err(StrategyError::Unknown(_))));
        assert!(matches!(parse_strategy("constant:beta=1"), Err(StrategyError::MissingParam { .. })));
        assert!(matches!(parse_strategy("constant:lambda=0.5"), Err(StrategyError::BadRational { .. })));
        assert!(matches!(parse_strategy("constant:lambda=2"), Err(StrategyError::OverBet(_))));
        assert!(matches!(parse_strategy("idle:lambda=1"), Err(StrategyError::UnknownParam { .. })));
        assert!(matches!(parse_strategy("arbitrage"), Err(StrategyError::MissingParam { .. })));
        assert!(parse_strategy("random:repay=maybe").is_err());
        assert!(parse_strategy("guard:n_min=1,lambda=1").is_err());
    }

    #[test]
    fn guard_records_floor() {
        let built = parse_strategy("guard:n_min=-1,lambda=1,beta=10").unwrap();
        assert_eq!(built.net_floor, Some(int(-1)));
    }
}
