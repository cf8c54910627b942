//! Exact verification by enumerating every coin-toss path.
//!
//! A [`GameTree`] plays a strategy depth-first over the binary tree of
//! prefixes. Each prefix is visited once, with the ledger of that prefix and
//! its exact probability under `Pr_p`; every check in this module is a
//! [`Visitor`] over that walk, so conditional expectations come from
//! aggregating the two children of a node and nothing is stored per path.

mod checks;
mod report;
mod stopping;

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::game::{GameError, Ledger, LedgerOptions, Outcome, Path, PayoffSchedule, Series, Strategy};
use crate::rational::{self, Rational};

pub use checks::{
    attest, attested_certificates, doob_check, expectation, expected_liability_constants, martingale_check,
    maximal_distribution, maximal_distributions, maximal_probability, robbins_siegmund_check, stopped_distributions,
    verify_certificate, verify_stopped, AlmostSupermartingale, Decomposition, DoobReport, LiabilityConstants,
    MartingaleReport, MartingaleVerdict, ProcessRef, RobbinsSiegmundReport, VerifyOptions,
};
pub use report::{CertificateVerdict, CheckReport, Witness};
pub use stopping::{sample_rules, RuleKind, StoppingRule};

/// Largest horizon enumerated by default (2^20 paths).
pub const DEFAULT_CAP: usize = 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("horizon {horizon} exceeds the enumeration cap {cap}")]
    HorizonOverCap { horizon: usize, cap: usize },
    #[error("bias p = {0} is outside [0, 1]")]
    InvalidBias(Rational),
    #[error("series {0:?} is not tracked by this game tree")]
    MissingSeries(Series),
    #[error("bad stopping rule `{0}` (expected fixed:T, up:S:X[:T], down:S:X[:T] or prefix:SEED:N[:T])")]
    BadRule(String),
    #[error("path {path}: {source}")]
    Game {
        path: String,
        #[source]
        source: GameError,
    },
}

/// All `2^T` paths of horizon `T` weighted by `Pr_p`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathEnsemble {
    horizon: usize,
    p: Rational,
}

impl PathEnsemble {
    pub fn new(horizon: usize, p: Rational) -> Result<Self, OracleError> {
        Self::with_cap(horizon, p, DEFAULT_CAP)
    }

    pub fn with_cap(horizon: usize, p: Rational, cap: usize) -> Result<Self, OracleError> {
        if horizon > cap || horizon > 62 {
            return Err(OracleError::HorizonOverCap { horizon, cap: cap.min(62) });
        }
        if p < Rational::zero() || p > Rational::one() {
            return Err(OracleError::InvalidBias(p));
        }
        Ok(PathEnsemble { horizon, p })
    }

    /// The fair coin.
    pub fn fair(horizon: usize) -> Result<Self, OracleError> {
        Self::new(horizon, rational::ratio(1, 2))
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn bias(&self) -> &Rational {
        &self.p
    }

    pub fn step_probability(&self, outcome: Outcome) -> Rational {
        match outcome {
            Outcome::Heads => self.p.clone(),
            Outcome::Tails => Rational::one() - &self.p,
        }
    }

    /// `p^{#heads} (1 - p)^{#tails}`.
    pub fn weight(&self, path: &Path) -> Rational {
        path.outcomes().iter().fold(Rational::one(), |acc, o| acc * self.step_probability(*o))
    }

    pub fn paths(&self) -> impl Iterator<Item = (Path, Rational)> + '_ {
        (0..1u64 << self.horizon).map(move |mask| {
            let path = Path::from_mask(mask, self.horizon);
            let w = self.weight(&path);
            (path, w)
        })
    }

    /// `sum_paths weight * f(path)`.
    pub fn expectation(&self, f: impl Fn(&Path) -> Rational) -> Rational {
        self.paths().fold(Rational::zero(), |acc, (path, w)| acc + w * f(&path))
    }
}

/// Whether a visitor wants the children of the current node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Walk {
    Descend,
    Skip,
}

/// A prefix of the game tree.
pub struct Node<'a> {
    pub ledger: &'a Ledger,
    /// Heads bitmask of the prefix (bit `i` is round `i + 1`).
    pub mask: u64,
    /// `Pr_p` of the prefix.
    pub weight: &'a Rational,
    /// Conditional probability of the last toss given its parent; `None` at the root.
    pub step_probability: Option<&'a Rational>,
    pub is_leaf: bool,
}

impl Node<'_> {
    pub fn depth(&self) -> usize {
        self.ledger.rounds()
    }

    pub fn path(&self) -> Path {
        Path::from_mask(self.mask, self.depth())
    }
}

pub trait Visitor {
    fn enter(&mut self, node: &Node<'_>) -> Walk;

    fn exit(&mut self, _node: &Node<'_>) {}
}

/// A strategy played over every path of an ensemble.
#[derive(Clone)]
pub struct GameTree<'a> {
    strategy: &'a dyn Strategy,
    schedule: PayoffSchedule,
    options: LedgerOptions,
    ensemble: PathEnsemble,
}

impl<'a> GameTree<'a> {
    pub fn new(strategy: &'a dyn Strategy, schedule: PayoffSchedule, ensemble: PathEnsemble) -> Self {
        GameTree { strategy, schedule, options: LedgerOptions::default(), ensemble }
    }

    /// Also tracks sub-liabilities and/or compound-interest liabilities.
    pub fn with_options(mut self, options: LedgerOptions) -> Self {
        self.options = options;
        self
    }

    pub fn ensemble(&self) -> &PathEnsemble {
        &self.ensemble
    }

    pub fn schedule(&self) -> &PayoffSchedule {
        &self.schedule
    }

    pub fn strategy(&self) -> &dyn Strategy {
        self.strategy
    }

    pub fn options(&self) -> &LedgerOptions {
        &self.options
    }

    pub fn horizon(&self) -> usize {
        self.ensemble.horizon
    }

    /// Same game under a different coin bias.
    pub fn with_bias(&self, p: Rational) -> Result<Self, OracleError> {
        let mut t = self.clone();
        t.ensemble = PathEnsemble::with_cap(self.ensemble.horizon, p, 62)?;
        Ok(t)
    }

    pub fn tracks(&self, series: Series) -> bool {
        match series {
            Series::SubLiabilities | Series::SubNet => self.options.eta.is_some(),
            Series::CompoundLiabilities | Series::AdjustedGross | Series::AdjustedNet | Series::AdjustedLiabilities => {
                self.options.compound
            }
            _ => true,
        }
    }

    pub fn require(&self, series: Series) -> Result<(), OracleError> {
        if self.tracks(series) {
            Ok(())
        } else {
            Err(OracleError::MissingSeries(series))
        }
    }

    /// A process reading `series` at the current index of a ledger prefix.
    pub fn process(&self, series: Series) -> Result<impl Fn(&Ledger) -> Rational + Sync, OracleError> {
        self.require(series)?;
        Ok(move |l: &Ledger| l.current(series).expect("series tracked by the tree"))
    }

    /// Plays every path, calling the visitor on every reachable prefix in
    /// depth-first order (tails before heads).
    pub fn walk<V: Visitor>(&self, visitor: &mut V) -> Result<(), OracleError> {
        let mut ledger = self.options.fresh_ledger();
        self.descend(&mut ledger, 0, &Rational::one(), None, visitor)
    }

    fn descend<V: Visitor>(
        &self,
        ledger: &mut Ledger,
        mask: u64,
        weight: &Rational,
        step_probability: Option<&Rational>,
        visitor: &mut V,
    ) -> Result<(), OracleError> {
        let depth = ledger.rounds();
        let is_leaf = depth == self.ensemble.horizon;
        let walk = visitor.enter(&Node { ledger, mask, weight, step_probability, is_leaf });
        if walk == Walk::Descend && !is_leaf {
            let decision = self.strategy.decide(ledger);
            let round = depth + 1;
            let bonus = self
                .schedule
                .bonus(round)
                .map_err(|source| OracleError::Game { path: Path::from_mask(mask, depth).to_string(), source })?;
            for outcome in [Outcome::Tails, Outcome::Heads] {
                let q = self.ensemble.step_probability(outcome);
                if q.is_zero() {
                    continue;
                }
                let child_weight = weight * &q;
                ledger.step(decision.clone(), outcome, bonus.clone()).map_err(|source| OracleError::Game {
                    path: format!("{} then {outcome} (round {round})", Path::from_mask(mask, depth)),
                    source,
                })?;
                let child_mask = if outcome == Outcome::Heads { mask | 1 << depth } else { mask };
                let res = self.descend(ledger, child_mask, &child_weight, Some(&q), visitor);
                ledger.pop();
                res?;
            }
        }
        visitor.exit(&Node { ledger, mask, weight, step_probability, is_leaf });
        Ok(())
    }

    /// Calls `f` on the ledger and weight of every complete path.
    pub fn for_each_path(&self, mut f: impl FnMut(&Ledger, u64, &Rational)) -> Result<(), OracleError> {
        struct Leaves<F>(F);
        impl<F: FnMut(&Ledger, u64, &Rational)> Visitor for Leaves<F> {
            fn enter(&mut self, node: &Node<'_>) -> Walk {
                if node.is_leaf {
                    (self.0)(node.ledger, node.mask, node.weight);
                }
                Walk::Descend
            }
        }
        self.walk(&mut Leaves(&mut f))
    }
}

/// A finite distribution of exact values.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Distribution(BTreeMap<Rational, Rational>);

impl Distribution {
    pub fn add(&mut self, value: Rational, weight: &Rational) {
        *self.0.entry(value).or_insert_with(Rational::zero) += weight;
    }

    /// `Pr(V >= x)`.
    pub fn tail(&self, x: &Rational) -> Rational {
        self.0.range(x.clone()..).fold(Rational::zero(), |acc, (_, w)| acc + w)
    }

    /// `(x, Pr(V >= x))` at every support point, ascending in `x`.
    pub fn tail_curve(&self) -> Vec<(Rational, Rational)> {
        let mut acc = Rational::zero();
        let mut out: Vec<(Rational, Rational)> = self
            .0
            .iter()
            .rev()
            .map(|(v, w)| {
                acc += w;
                (v.clone(), acc.clone())
            })
            .collect();
        out.reverse();
        out
    }

    pub fn mean(&self) -> Rational {
        self.0.iter().fold(Rational::zero(), |acc, (v, w)| acc + v * w)
    }

    pub fn total(&self) -> Rational {
        self.0.values().fold(Rational::zero(), |acc, w| acc + w)
    }

    /// Distinct values, ascending: the jump points of the tail function.
    pub fn support(&self) -> impl Iterator<Item = &Rational> {
        self.0.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Rational, &Rational)> {
        self.0.iter()
    }

    pub fn min(&self) -> Option<&Rational> {
        self.0.keys().next()
    }

    pub fn max(&self) -> Option<&Rational> {
        self.0.keys().next_back()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};
    use crate::strategies::constant_strategy;

    #[test]
    fn weights_sum_to_one() {
        for t in 0..=8 {
            for p in [ratio(1, 2), ratio(1, 3), int(0), int(1), ratio(7, 9)] {
                let e = PathEnsemble::new(t, p).unwrap();
                let total = e.paths().fold(Rational::zero(), |acc, (_, w)| acc + w);
                assert_eq!(total, int(1));
                assert_eq!(e.expectation(|_| int(1)), int(1));
            }
        }
    }

    #[test]
    fn rejects_large_horizon_and_bad_bias() {
        assert!(matches!(PathEnsemble::fair(21), Err(OracleError::HorizonOverCap { .. })));
        assert!(PathEnsemble::fair(20).is_ok());
        assert!(matches!(PathEnsemble::new(3, ratio(3, 2)), Err(OracleError::InvalidBias(_))));
    }

    #[test]
    fn walk_visits_every_prefix_once() {
        struct Count(Vec<usize>, Rational);
        impl Visitor for Count {
            fn enter(&mut self, node: &Node<'_>) -> Walk {
                self.0[node.depth()] += 1;
                if node.is_leaf {
                    self.1 += node.weight;
                }
                Walk::Descend
            }
        }
        let s = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), PathEnsemble::new(5, ratio(1, 3)).unwrap());
        let mut c = Count(vec![0; 6], Rational::zero());
        tree.walk(&mut c).unwrap();
        assert_eq!(c.0, vec![1, 2, 4, 8, 16, 32]);
        assert_eq!(c.1, int(1));
    }

    #[test]
    fn degenerate_bias_prunes_unreachable_paths() {
        let s = constant_strategy(int(1), int(0)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), PathEnsemble::new(4, int(1)).unwrap());
        let mut leaves = 0;
        tree.for_each_path(|l, _, w| {
            leaves += 1;
            assert_eq!(*w, int(1));
            assert_eq!(l.last().wealth, int(16));
        })
        .unwrap();
        assert_eq!(leaves, 1);
    }

    #[test]
    fn walk_reports_inadmissible_paths() {
        let s = constant_strategy(int(0), int(-3)).unwrap();
        struct Repay;
        impl Strategy for Repay {
            fn decide(&self, _: &Ledger) -> crate::game::BetDecision {
                crate::game::BetDecision::new(int(-3), int(0))
            }
            fn describe(&self) -> String {
                "repay".into()
            }
        }
        // the constant strategy clamps, the raw one does not
        let ok = GameTree::new(&s, PayoffSchedule::fair(), PathEnsemble::fair(2).unwrap());
        assert!(ok.for_each_path(|_, _, _| {}).is_ok());
        let bad = GameTree::new(&Repay, PayoffSchedule::fair(), PathEnsemble::fair(2).unwrap());
        assert!(matches!(bad.for_each_path(|_, _, _| {}), Err(OracleError::Game { .. })));
    }

    #[test]
    fn distribution_tail() {
        let mut d = Distribution::default();
        d.add(int(1), &ratio(1, 4));
        d.add(int(3), &ratio(1, 4));
        d.add(int(1), &ratio(1, 2));
        assert_eq!(d.tail(&int(1)), int(1));
        assert_eq!(d.tail(&int(2)), ratio(1, 4));
        assert_eq!(d.tail(&int(4)), int(0));
        assert_eq!(d.mean(), ratio(3, 2));
        assert_eq!(d.support().count(), 2);
        for (x, p) in d.tail_curve() {
            assert_eq!(p, d.tail(&x));
        }
    }
}
