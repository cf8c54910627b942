//! Deterministic evolution of the borrowed-betting game.
//!
//! Round `t` starts from gross wealth `W_{t-1}`, borrows `beta_t` (negative
//! means repaying), stakes a signed fraction `lambda_t` of `W_{t-1} + beta_t`
//! on heads and is paid `(2 + 2 b_t)`-times-or-nothing:
//!
//! ```text
//! W_t = (W_{t-1} + beta_t) (1 + b_t) (1 + lambda_t X_t)
//! L_t = L_{t-1} + beta_t
//! N_t = W_t - L_t
//! ```
//!
//! `b_t = 0` is the fair double-or-nothing game. Index 0 of a [`Ledger`] is
//! the initial state `W_0 = 1, L_0 = 0`; round `t` writes index `t`.

use std::fmt;
use std::io;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, int, positive_part, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("over-repayment: beta = {beta} is below -W_prev = -{wealth}")]
    OverRepayment { beta: Rational, wealth: Rational },
    #[error("over-bet: |lambda| = |{0}| exceeds 1")]
    OverBet(Rational),
    #[error("negative bonus b = {0}")]
    NegativeBonus(Rational),
    #[error("sub-liability weight eta = {0} is below 1")]
    EtaBelowOne(Rational),
    #[error("payoff schedule has {len} rounds, round {round} requested")]
    ScheduleTooShort { len: usize, round: usize },
    #[error("outcome must be -1 or +1, got {0}")]
    InvalidOutcome(i64),
    #[error("malformed path: {0}")]
    MalformedPath(String),
    #[error("round {round}: {source}")]
    AtRound {
        round: usize,
        #[source]
        source: Box<GameError>,
    },
}

impl GameError {
    pub fn at_round(self, round: usize) -> Self {
        GameError::AtRound { round, source: Box::new(self) }
    }

    /// The error without its round annotation.
    pub fn root(&self) -> &GameError {
        match self {
            GameError::AtRound { source, .. } => source.root(),
            other => other,
        }
    }
}

/// A single coin toss `X_t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Tails,
    Heads,
}

impl Outcome {
    pub fn from_value(value: i64) -> Result<Self, GameError> {
        match value {
            1 => Ok(Outcome::Heads),
            -1 => Ok(Outcome::Tails),
            other => Err(GameError::InvalidOutcome(other)),
        }
    }

    pub fn value(self) -> i64 {
        match self {
            Outcome::Heads => 1,
            Outcome::Tails => -1,
        }
    }

    pub fn as_rational(self) -> Rational {
        int(self.value())
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Heads => "+1",
            Outcome::Tails => "-1",
        })
    }
}

/// A finite sequence of tosses; its horizon is its length.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Path(Vec<Outcome>);

impl Path {
    pub fn new(outcomes: Vec<Outcome>) -> Self {
        Path(outcomes)
    }

    /// Bit `i` of `mask` set means round `i + 1` came up heads.
    pub fn from_mask(mask: u64, horizon: usize) -> Self {
        Path((0..horizon).map(|i| if mask >> i & 1 == 1 { Outcome::Heads } else { Outcome::Tails }).collect())
    }

    pub fn mask(&self) -> u64 {
        self.0.iter().enumerate().filter(|(_, o)| **o == Outcome::Heads).fold(0, |m, (i, _)| m | 1 << i)
    }

    /// Parses comma separated `+1`/`-1` tokens (`H`/`T` also accepted).
    pub fn parse(text: &str) -> Result<Self, GameError> {
        let trimmed = text.trim();
        if trimmed.is_empty() {
            return Ok(Path::default());
        }
        trimmed
            .split(',')
            .map(|tok| match tok.trim() {
                "+1" | "1" | "H" | "h" => Ok(Outcome::Heads),
                "-1" | "T" | "t" => Ok(Outcome::Tails),
                other => Err(GameError::MalformedPath(other.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Path)
    }

    pub fn horizon(&self) -> usize {
        self.0.len()
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.0
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|o| o.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// Amount borrowed this round and signed fraction of at-table wealth bet on heads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BetDecision {
    #[serde(with = "rational::serde_fraction")]
    pub beta: Rational,
    #[serde(with = "rational::serde_fraction")]
    pub lambda: Rational,
}

impl BetDecision {
    pub fn new(beta: Rational, lambda: Rational) -> Self {
        BetDecision { beta, lambda }
    }

    pub fn idle() -> Self {
        BetDecision { beta: Rational::zero(), lambda: Rational::zero() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum ScheduleKind {
    Constant(Rational),
    PerRound(Vec<Rational>),
}

/// Per-round bonus `b_t >= 0`; zero everywhere is the fair game.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PayoffSchedule(ScheduleKind);

impl PayoffSchedule {
    pub fn fair() -> Self {
        PayoffSchedule(ScheduleKind::Constant(Rational::zero()))
    }

    pub fn constant(bonus: Rational) -> Result<Self, GameError> {
        if bonus.is_negative() {
            return Err(GameError::NegativeBonus(bonus));
        }
        Ok(PayoffSchedule(ScheduleKind::Constant(bonus)))
    }

    pub fn per_round(bonuses: Vec<Rational>) -> Result<Self, GameError> {
        if let Some(b) = bonuses.iter().find(|b| b.is_negative()) {
            return Err(GameError::NegativeBonus(b.clone()));
        }
        Ok(PayoffSchedule(ScheduleKind::PerRound(bonuses)))
    }

    /// Bonus of round `round` (1-based).
    pub fn bonus(&self, round: usize) -> Result<Rational, GameError> {
        match &self.0 {
            ScheduleKind::Constant(b) => Ok(b.clone()),
            ScheduleKind::PerRound(v) => {
                v.get(round.wrapping_sub(1)).cloned().ok_or(GameError::ScheduleTooShort { len: v.len(), round })
            }
        }
    }

    /// `sum_{t <= horizon} b_t`.
    pub fn total(&self, horizon: usize) -> Result<Rational, GameError> {
        (1..=horizon).try_fold(Rational::zero(), |acc, t| Ok(acc + self.bonus(t)?))
    }

    pub fn is_fair(&self) -> bool {
        match &self.0 {
            ScheduleKind::Constant(b) => b.is_zero(),
            ScheduleKind::PerRound(v) => v.iter().all(Zero::is_zero),
        }
    }

    pub fn describe(&self) -> String {
        match &self.0 {
            ScheduleKind::Constant(b) => format!("b={b}"),
            ScheduleKind::PerRound(v) => {
                let parts: Vec<String> = v.iter().map(ToString::to_string).collect();
                format!("b=[{}]", parts.join(","))
            }
        }
    }
}

impl Default for PayoffSchedule {
    fn default() -> Self {
        PayoffSchedule::fair()
    }
}

type EtaFn = dyn Fn(&[Outcome]) -> Rational + Send + Sync;

/// Predictable sub-liability weights: `eta_t` is a function of `X_1..X_{t-1}`.
#[derive(Clone)]
pub struct EtaWeights {
    name: String,
    rule: Arc<EtaFn>,
}

impl EtaWeights {
    pub fn from_fn(name: impl Into<String>, rule: impl Fn(&[Outcome]) -> Rational + Send + Sync + 'static) -> Self {
        EtaWeights { name: name.into(), rule: Arc::new(rule) }
    }

    pub fn unit() -> Self {
        EtaWeights::from_fn("unit", |_| Rational::one())
    }

    /// `eta_1 = 1`, `eta_t = 2 - X_{t-1}`: borrowing right after a loss weighs triple.
    pub fn penalize_after_loss() -> Self {
        EtaWeights::from_fn("penalize-after-loss", |past: &[Outcome]| match past.last() {
            None => Rational::one(),
            Some(x) => int(2 - x.value()),
        })
    }

    pub fn weight(&self, past: &[Outcome]) -> Rational {
        (self.rule)(past)
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for EtaWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EtaWeights").field("name", &self.name).finish()
    }
}

/// Ledger state at one index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Row {
    pub wealth: Rational,
    pub liabilities: Rational,
    pub net: Rational,
    /// `sum_{i <= t} beta_i^+`.
    pub positive_borrowings: Rational,
    /// `sum_{i <= t} (1 + b_i) beta_i^+`.
    pub bonus_positive_borrowings: Rational,
    /// `prod_{i <= t} (1 + b_i)`.
    pub growth: Rational,
    pub sub_liabilities: Option<Rational>,
    pub compound_liabilities: Option<Rational>,
}

impl Row {
    fn initial() -> Self {
        Row {
            wealth: Rational::one(),
            liabilities: Rational::zero(),
            net: Rational::one(),
            positive_borrowings: Rational::zero(),
            bonus_positive_borrowings: Rational::zero(),
            growth: Rational::one(),
            sub_liabilities: None,
            compound_liabilities: None,
        }
    }
}

/// Named projections of a ledger onto a real-valued process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Series {
    Gross,
    Liabilities,
    Net,
    PositiveBorrowings,
    SubLiabilities,
    SubNet,
    CompoundLiabilities,
    AdjustedGross,
    AdjustedNet,
    AdjustedLiabilities,
}

impl Series {
    pub const ALL: [Series; 10] = [
        Series::Gross,
        Series::Liabilities,
        Series::Net,
        Series::PositiveBorrowings,
        Series::SubLiabilities,
        Series::SubNet,
        Series::CompoundLiabilities,
        Series::AdjustedGross,
        Series::AdjustedNet,
        Series::AdjustedLiabilities,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Series::Gross => "W",
            Series::Liabilities => "L",
            Series::Net => "N",
            Series::PositiveBorrowings => "B",
            Series::SubLiabilities => "subL",
            Series::SubNet => "subN",
            Series::CompoundLiabilities => "compL",
            Series::AdjustedGross => "adjW",
            Series::AdjustedNet => "adjN",
            Series::AdjustedLiabilities => "adjL",
        }
    }

    pub fn parse(text: &str) -> Option<Series> {
        let t = text.trim();
        Series::ALL.into_iter().find(|s| s.name().eq_ignore_ascii_case(t)).or(match t {
            "gross" | "wealth" => Some(Series::Gross),
            "net" => Some(Series::Net),
            "liabilities" => Some(Series::Liabilities),
            "sub-net" | "subnet" => Some(Series::SubNet),
            "adjusted-net" => Some(Series::AdjustedNet),
            _ => None,
        })
    }
}

/// Aligned per-round record of a game.
#[derive(Debug, Clone)]
pub struct Ledger {
    rows: Vec<Row>,
    outcomes: Vec<Outcome>,
    decisions: Vec<BetDecision>,
    bonuses: Vec<Rational>,
    eta: Option<EtaWeights>,
    compound: bool,
}

impl Default for Ledger {
    fn default() -> Self {
        Ledger::new()
    }
}

impl Ledger {
    pub fn new() -> Self {
        Ledger {
            rows: vec![Row::initial()],
            outcomes: Vec::new(),
            decisions: Vec::new(),
            bonuses: Vec::new(),
            eta: None,
            compound: false,
        }
    }

    /// Number of completed rounds.
    pub fn rounds(&self) -> usize {
        self.outcomes.len()
    }

    pub fn rows(&self) -> &[Row] {
        &self.rows
    }

    pub fn row(&self, t: usize) -> &Row {
        &self.rows[t]
    }

    pub fn last(&self) -> &Row {
        self.rows.last().expect("ledger always holds the initial row")
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn decisions(&self) -> &[BetDecision] {
        &self.decisions
    }

    pub fn bonuses(&self) -> &[Rational] {
        &self.bonuses
    }

    pub fn path(&self) -> Path {
        Path::new(self.outcomes.clone())
    }

    pub fn has_sub_liabilities(&self) -> bool {
        self.eta.is_some()
    }

    pub fn has_compound_liabilities(&self) -> bool {
        self.compound
    }

    /// Plays one round. The ledger is left untouched on error.
    pub fn step(&mut self, decision: BetDecision, outcome: Outcome, bonus: Rational) -> Result<(), GameError> {
        let prev = self.last();
        if decision.beta < -prev.wealth.clone() {
            return Err(GameError::OverRepayment { beta: decision.beta, wealth: prev.wealth.clone() });
        }
        if decision.lambda.abs() > Rational::one() {
            return Err(GameError::OverBet(decision.lambda));
        }
        if bonus.is_negative() {
            return Err(GameError::NegativeBonus(bonus));
        }
        let sub_liabilities = match (&self.eta, &prev.sub_liabilities) {
            (Some(eta), Some(prev_sub)) => {
                let w = eta.weight(&self.outcomes);
                if w < Rational::one() {
                    return Err(GameError::EtaBelowOne(w));
                }
                Some(prev_sub + w * &decision.beta)
            }
            _ => None,
        };

        let one_plus_b = Rational::one() + &bonus;
        let at_table = &prev.wealth + &decision.beta;
        let wealth = &at_table * &one_plus_b * (Rational::one() + &decision.lambda * outcome.as_rational());
        let liabilities = &prev.liabilities + &decision.beta;
        let beta_plus = positive_part(&decision.beta);
        let row = Row {
            net: &wealth - &liabilities,
            wealth,
            liabilities,
            positive_borrowings: &prev.positive_borrowings + &beta_plus,
            bonus_positive_borrowings: &prev.bonus_positive_borrowings + &one_plus_b * &beta_plus,
            growth: &prev.growth * &one_plus_b,
            sub_liabilities,
            compound_liabilities: prev.compound_liabilities.as_ref().map(|c| &one_plus_b * (c + &decision.beta)),
        };
        self.rows.push(row);
        self.outcomes.push(outcome);
        self.decisions.push(decision);
        self.bonuses.push(bonus);
        Ok(())
    }

    pub(crate) fn pop(&mut self) {
        if self.outcomes.pop().is_some() {
            self.rows.pop();
            self.decisions.pop();
            self.bonuses.pop();
        }
    }

    /// Populates `L~_t = sum eta_i beta_i` (and thereby `N~_t = W_t - L~_t`);
    /// later steps keep extending it.
    pub fn attach_sub_liabilities(&mut self, eta: EtaWeights) -> Result<(), GameError> {
        let mut sub = Vec::with_capacity(self.rows.len());
        let mut acc = Rational::zero();
        sub.push(acc.clone());
        for t in 1..self.rows.len() {
            let w = eta.weight(&self.outcomes[..t - 1]);
            if w < Rational::one() {
                return Err(GameError::EtaBelowOne(w).at_round(t));
            }
            acc += w * &self.decisions[t - 1].beta;
            sub.push(acc.clone());
        }
        for (row, s) in self.rows.iter_mut().zip(sub) {
            row.sub_liabilities = Some(s);
        }
        self.eta = Some(eta);
        Ok(())
    }

    /// Populates compound-interest liabilities `L_t = (1 + b_t)(L_{t-1} + beta_t)`
    /// using the bonuses recorded at play time.
    pub fn attach_compound_liabilities(&mut self) {
        let mut acc = Rational::zero();
        self.rows[0].compound_liabilities = Some(acc.clone());
        for t in 1..self.rows.len() {
            acc = (Rational::one() + &self.bonuses[t - 1]) * (acc + &self.decisions[t - 1].beta);
            self.rows[t].compound_liabilities = Some(acc.clone());
        }
        self.compound = true;
    }

    /// Value of `series` at index `t`; `None` when the series is not attached.
    pub fn value(&self, series: Series, t: usize) -> Option<Rational> {
        let row = self.rows.get(t)?;
        match series {
            Series::Gross => Some(row.wealth.clone()),
            Series::Liabilities => Some(row.liabilities.clone()),
            Series::Net => Some(row.net.clone()),
            Series::PositiveBorrowings => Some(row.positive_borrowings.clone()),
            Series::SubLiabilities => row.sub_liabilities.clone(),
            Series::SubNet => row.sub_liabilities.as_ref().map(|s| &row.wealth - s),
            Series::CompoundLiabilities => row.compound_liabilities.clone(),
            Series::AdjustedGross => row.compound_liabilities.as_ref().map(|_| &row.wealth / &row.growth),
            Series::AdjustedNet => row.compound_liabilities.as_ref().map(|c| (&row.wealth - c) / &row.growth),
            Series::AdjustedLiabilities => row.compound_liabilities.as_ref().map(|c| c / &row.growth),
        }
    }

    /// Value of `series` at the latest index.
    pub fn current(&self, series: Series) -> Option<Rational> {
        self.value(series, self.rounds())
    }

    pub fn series(&self, series: Series) -> Option<Vec<Rational>> {
        (0..self.rows.len()).map(|t| self.value(series, t)).collect()
    }

    /// Writes the ledger as CSV: exact `p/q` columns followed by `_dec` decimals.
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), csv::Error> {
        const EXACT: [Series; 8] = [
            Series::Gross,
            Series::Liabilities,
            Series::Net,
            Series::SubLiabilities,
            Series::SubNet,
            Series::CompoundLiabilities,
            Series::AdjustedGross,
            Series::AdjustedNet,
        ];
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = ["t", "X_t", "beta_t", "lambda_t", "b_t"].iter().map(|s| s.to_string()).collect();
        header.extend(EXACT.iter().map(|s| s.name().to_string()));
        header.extend(EXACT.iter().map(|s| format!("{}_dec", s.name())));
        w.write_record(&header)?;
        for t in 0..self.rows.len() {
            let mut rec = vec![t.to_string()];
            if t == 0 {
                rec.extend(std::iter::repeat_n(String::new(), 4));
            } else {
                let d = &self.decisions[t - 1];
                rec.push(self.outcomes[t - 1].to_string());
                rec.push(rational::to_fraction_string(&d.beta));
                rec.push(rational::to_fraction_string(&d.lambda));
                rec.push(rational::to_fraction_string(&self.bonuses[t - 1]));
            }
            let values: Vec<Option<Rational>> = EXACT.iter().map(|s| self.value(*s, t)).collect();
            rec.extend(values.iter().map(|v| v.as_ref().map(rational::to_fraction_string).unwrap_or_default()));
            rec.extend(values.iter().map(|v| v.as_ref().map(|v| rational::to_f64(v).to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// A predictable decision rule.
///
/// `decide` sees the ledger of the completed rounds only (outcomes
/// `X_1..X_{t-1}`), so predictability holds by construction.
pub trait Strategy: Send + Sync {
    fn decide(&self, history: &Ledger) -> BetDecision;

    fn describe(&self) -> String;
}

impl<S: Strategy + ?Sized> Strategy for Arc<S> {
    fn decide(&self, history: &Ledger) -> BetDecision {
        (**self).decide(history)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<S: Strategy + ?Sized> Strategy for Box<S> {
    fn decide(&self, history: &Ledger) -> BetDecision {
        (**self).decide(history)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

impl<S: Strategy + ?Sized> Strategy for &S {
    fn decide(&self, history: &Ledger) -> BetDecision {
        (**self).decide(history)
    }

    fn describe(&self) -> String {
        (**self).describe()
    }
}

/// Optional columns to maintain while playing.
#[derive(Debug, Clone, Default)]
pub struct LedgerOptions {
    pub eta: Option<EtaWeights>,
    pub compound: bool,
}

impl LedgerOptions {
    pub fn fresh_ledger(&self) -> Ledger {
        let mut ledger = Ledger::new();
        if let Some(eta) = &self.eta {
            ledger.attach_sub_liabilities(eta.clone()).expect("an empty ledger has no rounds to reject");
        }
        if self.compound {
            ledger.attach_compound_liabilities();
        }
        ledger
    }
}

pub fn run_game(strategy: &dyn Strategy, path: &Path, schedule: &PayoffSchedule) -> Result<Ledger, GameError> {
    run_game_with(strategy, path, schedule, &LedgerOptions::default())
}

pub fn run_game_with(
    strategy: &dyn Strategy,
    path: &Path,
    schedule: &PayoffSchedule,
    options: &LedgerOptions,
) -> Result<Ledger, GameError> {
    let mut ledger = options.fresh_ledger();
    for (i, outcome) in path.outcomes().iter().enumerate() {
        let round = i + 1;
        let decision = strategy.decide(&ledger);
        let bonus = schedule.bonus(round).map_err(|e| e.at_round(round))?;
        ledger.step(decision, *outcome, bonus).map_err(|e| e.at_round(round))?;
    }
    Ok(ledger)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    struct Fixed(BetDecision);

    impl Strategy for Fixed {
        fn decide(&self, _: &Ledger) -> BetDecision {
            self.0.clone()
        }

        fn describe(&self) -> String {
            "fixed".into()
        }
    }

    fn fixed(beta: Rational, lambda: Rational) -> Fixed {
        Fixed(BetDecision::new(beta, lambda))
    }

    #[test]
    fn step_borrow_and_win() {
        let mut l = Ledger::new();
        l.step(BetDecision::new(int(1), ratio(1, 2)), Outcome::Heads, int(0)).unwrap();
        assert_eq!(l.last().wealth, int(3));
        assert_eq!(l.last().net, int(2));
    }

    #[test]
    fn step_idle_round_keeps_wealth() {
        let mut l = Ledger::new();
        l.step(BetDecision::idle(), Outcome::Tails, int(0)).unwrap();
        assert_eq!(l.last().wealth, int(1));
    }

    #[test]
    fn step_bonus_is_risk_free_growth() {
        let mut l = Ledger::new();
        l.step(BetDecision::idle(), Outcome::Heads, ratio(1, 10)).unwrap();
        assert_eq!(l.last().wealth, ratio(11, 10));
    }

    #[test]
    fn step_rejects_inadmissible_decisions() {
        let mut l = Ledger::new();
        let err = l.step(BetDecision::new(ratio(-3, 2), int(0)), Outcome::Heads, int(0)).unwrap_err();
        assert!(matches!(err, GameError::OverRepayment { .. }));
        let err = l.step(BetDecision::new(int(0), ratio(3, 2)), Outcome::Heads, int(0)).unwrap_err();
        assert!(matches!(err, GameError::OverBet(_)));
        let err = l.step(BetDecision::idle(), Outcome::Heads, ratio(-1, 10)).unwrap_err();
        assert!(matches!(err, GameError::NegativeBonus(_)));
        assert_eq!(l.rounds(), 0);
        // full repayment is allowed
        l.step(BetDecision::new(int(-1), int(1)), Outcome::Heads, int(0)).unwrap();
        assert_eq!(l.last().wealth, int(0));
        assert_eq!(l.last().net, int(1));
    }

    #[test]
    fn run_game_table_row_two() {
        let s = fixed(int(1), ratio(1, 2));
        let l = run_game(&s, &Path::parse("-1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        assert_eq!(l.series(Series::Gross).unwrap(), vec![int(1), int(1), int(3)]);
        assert_eq!(l.series(Series::Net).unwrap(), vec![int(1), int(0), int(1)]);
    }

    #[test]
    fn run_game_empty_path() {
        let s = fixed(int(1), ratio(1, 2));
        let l = run_game(&s, &Path::default(), &PayoffSchedule::fair()).unwrap();
        assert_eq!(l.series(Series::Gross).unwrap(), vec![int(1)]);
        assert_eq!(l.series(Series::Liabilities).unwrap(), vec![int(0)]);
        assert_eq!(l.series(Series::Net).unwrap(), vec![int(1)]);
    }

    #[test]
    fn run_game_no_borrow_compounding() {
        let s = fixed(int(0), ratio(1, 2));
        let l = run_game(&s, &Path::parse("+1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        assert_eq!(l.series(Series::Gross).unwrap(), vec![int(1), ratio(3, 2), ratio(9, 4)]);
    }

    #[test]
    fn run_game_annotates_round() {
        let s = fixed(int(-2), int(0));
        let err = run_game(&s, &Path::parse("+1").unwrap(), &PayoffSchedule::fair()).unwrap_err();
        assert!(matches!(err, GameError::AtRound { round: 1, .. }));
        assert!(matches!(err.root(), GameError::OverRepayment { .. }));
    }

    #[test]
    fn run_game_schedule_too_short() {
        let s = fixed(int(0), int(0));
        let sched = PayoffSchedule::per_round(vec![ratio(1, 10)]).unwrap();
        let err = run_game(&s, &Path::parse("+1,+1").unwrap(), &sched).unwrap_err();
        assert!(matches!(err.root(), GameError::ScheduleTooShort { len: 1, round: 2 }));
    }

    #[test]
    fn sub_liabilities_table_example() {
        let s = fixed(int(1), ratio(1, 2));
        let mut up = run_game(&s, &Path::parse("+1,-1").unwrap(), &PayoffSchedule::fair()).unwrap();
        up.attach_sub_liabilities(EtaWeights::penalize_after_loss()).unwrap();
        assert_eq!(up.value(Series::SubLiabilities, 2), Some(int(2)));

        for (path, subn) in [("-1,-1", -3), ("-1,+1", -1)] {
            let mut l = run_game(&s, &Path::parse(path).unwrap(), &PayoffSchedule::fair()).unwrap();
            l.attach_sub_liabilities(EtaWeights::penalize_after_loss()).unwrap();
            assert_eq!(l.value(Series::SubLiabilities, 2), Some(int(4)));
            assert_eq!(l.value(Series::SubNet, 2), Some(int(subn)));
        }
    }

    #[test]
    fn unit_eta_collapses_to_liabilities() {
        let s = fixed(int(1), ratio(1, 2));
        let mut l = run_game(&s, &Path::parse("+1,-1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        l.attach_sub_liabilities(EtaWeights::unit()).unwrap();
        assert_eq!(l.series(Series::SubLiabilities), l.series(Series::Liabilities));
        assert_eq!(l.series(Series::SubNet), l.series(Series::Net));
    }

    #[test]
    fn sub_liabilities_reject_small_eta() {
        let s = fixed(int(1), int(0));
        let mut l = run_game(&s, &Path::parse("+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        let err = l.attach_sub_liabilities(EtaWeights::from_fn("half", |_| ratio(1, 2))).unwrap_err();
        assert!(matches!(err.root(), GameError::EtaBelowOne(_)));
        assert!(!l.has_sub_liabilities());
    }

    #[test]
    fn compound_liabilities_accrue_interest() {
        struct FirstOnly;
        impl Strategy for FirstOnly {
            fn decide(&self, h: &Ledger) -> BetDecision {
                let beta = if h.rounds() == 0 { int(1) } else { int(0) };
                BetDecision::new(beta, int(0))
            }
            fn describe(&self) -> String {
                "first-only".into()
            }
        }
        let sched = PayoffSchedule::constant(ratio(1, 10)).unwrap();
        let mut l = run_game(&FirstOnly, &Path::parse("+1,-1").unwrap(), &sched).unwrap();
        l.attach_compound_liabilities();
        assert_eq!(l.series(Series::CompoundLiabilities).unwrap(), vec![int(0), ratio(11, 10), ratio(121, 100)]);
    }

    #[test]
    fn compound_collapses_without_bonus() {
        let s = fixed(int(1), ratio(1, 2));
        let mut l = run_game(&s, &Path::parse("+1,-1,-1").unwrap(), &PayoffSchedule::fair()).unwrap();
        l.attach_compound_liabilities();
        assert_eq!(l.series(Series::CompoundLiabilities), l.series(Series::Liabilities));
    }

    #[test]
    fn adjusted_wealth_constant_under_pure_growth() {
        let s = fixed(int(0), int(0));
        let sched = PayoffSchedule::constant(ratio(1, 10)).unwrap();
        let opts = LedgerOptions { eta: None, compound: true };
        let l = run_game_with(&s, &Path::parse("+1,-1,+1").unwrap(), &sched, &opts).unwrap();
        assert!(l.series(Series::AdjustedGross).unwrap().iter().all(|v| *v == int(1)));
    }

    #[test]
    fn incremental_columns_match_post_hoc_attachment() {
        let s = fixed(int(1), ratio(1, 3));
        let sched = PayoffSchedule::constant(ratio(1, 5)).unwrap();
        let path = Path::parse("+1,-1,-1,+1").unwrap();
        let opts = LedgerOptions { eta: Some(EtaWeights::penalize_after_loss()), compound: true };
        let live = run_game_with(&s, &path, &sched, &opts).unwrap();
        let mut post = run_game(&s, &path, &sched).unwrap();
        post.attach_sub_liabilities(EtaWeights::penalize_after_loss()).unwrap();
        post.attach_compound_liabilities();
        for series in Series::ALL {
            assert_eq!(live.series(series), post.series(series), "{series:?}");
        }
    }

    #[test]
    fn path_mask_round_trip() {
        let p = Path::parse("+1,-1,+1").unwrap();
        assert_eq!(p.mask(), 0b101);
        assert_eq!(Path::from_mask(0b101, 3), p);
        assert!(Path::parse("+1,0").is_err());
        assert_eq!(Outcome::from_value(0), Err(GameError::InvalidOutcome(0)));
    }

    #[test]
    fn csv_has_exact_and_decimal_columns() {
        let s = fixed(int(1), ratio(1, 2));
        let l = run_game(&s, &Path::parse("-1,+1").unwrap(), &PayoffSchedule::fair()).unwrap();
        let mut buf = Vec::new();
        l.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("t,X_t,beta_t,lambda_t,b_t,W,L,N,subL,subN,compL,adjW,adjN,W_dec"));
        assert!(lines[3].starts_with("2,+1,1/1,1/2,0/1,3/1,2/1,1/1"));
        assert_eq!(lines.len(), 4);
    }
}
