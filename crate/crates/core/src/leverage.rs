//! One-round bets with finite support: the leverage map, the Sharpe ratio,
//! and the standardized-evidence functional
//!
//! ```text
//! E(Y) = sup { a E_Q Y + b : Pr_P(aY + b >= x) <= 1/x for all x > 0 }.
//! ```
//!
//! The tail of `aY + b` is a step function, so the continuum of constraints
//! reduces to one per support point: `Pr_P(Y >= v_i) (a v_i + b) <= 1` when
//! `a >= 0` and `Pr_P(Y <= v_i) (a v_i + b) <= 1` when `a <= 0`. Each branch is
//! a linear program in two variables, solved exactly by enumerating vertices.

use std::io;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rational::{self, int, ratio, ParseRationalError, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LeverageError {
    #[error("a bet needs at least one support point")]
    Empty,
    #[error("support has {values} values but {weights} weights")]
    LengthMismatch { values: usize, weights: usize },
    #[error("support value {0} appears twice")]
    Duplicate(Rational),
    #[error("{measure} weight {value} is negative")]
    NegativeWeight { measure: &'static str, value: Rational },
    #[error("{measure} weights sum to {sum}, not 1")]
    NotNormalized { measure: &'static str, sum: Rational },
    #[error("beta = -1 maps every payoff to the constant 1")]
    DegenerateLeverage,
    #[error("payoff is constant under P, Sharpe ratio undefined")]
    ZeroVariance,
    #[error("line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("bad rational in column {column}: {source}")]
    Rational {
        column: &'static str,
        #[source]
        source: ParseRationalError,
    },
}

/// A payoff `Y` with finite support and two laws on it: the null `P` and the
/// alternative `Q`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteBet {
    support: Vec<Rational>,
    p: Vec<Rational>,
    q: Vec<Rational>,
}

fn check_weights(measure: &'static str, w: &[Rational]) -> Result<(), LeverageError> {
    if let Some(neg) = w.iter().find(|x| x.is_negative()) {
        return Err(LeverageError::NegativeWeight { measure, value: neg.clone() });
    }
    let sum: Rational = w.iter().fold(Rational::zero(), |a, b| a + b);
    if !sum.is_one() {
        return Err(LeverageError::NotNormalized { measure, sum });
    }
    Ok(())
}

impl DiscreteBet {
    /// Sorts the support ascending, carrying the weights along.
    pub fn new(values: Vec<Rational>, p: Vec<Rational>, q: Vec<Rational>) -> Result<Self, LeverageError> {
        if values.is_empty() {
            return Err(LeverageError::Empty);
        }
        for w in [&p, &q] {
            if w.len() != values.len() {
                return Err(LeverageError::LengthMismatch { values: values.len(), weights: w.len() });
            }
        }
        check_weights("P", &p)?;
        check_weights("Q", &q)?;
        let mut rows: Vec<(Rational, Rational, Rational)> =
            values.into_iter().zip(p).zip(q).map(|((v, p), q)| (v, p, q)).collect();
        rows.sort_by(|x, y| x.0.cmp(&y.0));
        if let Some(w) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(LeverageError::Duplicate(w[0].0.clone()));
        }
        let (mut support, mut p, mut q) = (Vec::new(), Vec::new(), Vec::new());
        for (v, pw, qw) in rows {
            support.push(v);
            p.push(pw);
            q.push(qw);
        }
        Ok(DiscreteBet { support, p, q })
    }

    pub fn support(&self) -> &[Rational] {
        &self.support
    }

    pub fn p_weights(&self) -> &[Rational] {
        &self.p
    }

    pub fn q_weights(&self) -> &[Rational] {
        &self.q
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// `Q` puts mass only where `P` does.
    pub fn q_within_p(&self) -> bool {
        self.p.iter().zip(&self.q).all(|(p, q)| q.is_zero() || p.is_positive())
    }

    pub fn mean_p(&self) -> Rational {
        dot(&self.support, &self.p)
    }

    pub fn mean_q(&self) -> Rational {
        dot(&self.support, &self.q)
    }

    /// `Pr_P(aY + b >= x)`, computed from the values directly.
    pub fn tail_p(&self, a: &Rational, b: &Rational, x: &Rational) -> Rational {
        self.support.iter().zip(&self.p).filter(|(v, _)| a * *v + b >= *x).fold(Rational::zero(), |acc, (_, w)| acc + w)
    }
}

fn dot(x: &[Rational], w: &[Rational]) -> Rational {
    x.iter().zip(w).fold(Rational::zero(), |acc, (x, w)| acc + x * w)
}

/// `Y -> (1 + beta) Y - beta`: borrow `beta`, stake `1 + beta`.
pub fn leverage_map(bet: &DiscreteBet, beta: &Rational) -> Result<DiscreteBet, LeverageError> {
    let scale = Rational::one() + beta;
    if scale.is_zero() {
        return Err(LeverageError::DegenerateLeverage);
    }
    let values = bet.support.iter().map(|v| &scale * v - beta).collect();
    DiscreteBet::new(values, bet.p.clone(), bet.q.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sharpe {
    /// `E_P Y - 1`.
    #[serde(with = "rational::serde_fraction")]
    pub numerator: Rational,
    /// `E_P (Y - E_P Y)^2`.
    #[serde(with = "rational::serde_fraction")]
    pub variance: Rational,
    /// `numerator^2 / variance`, exact.
    #[serde(with = "rational::serde_fraction")]
    pub squared: Rational,
    pub ratio: f64,
}

pub fn sharpe(bet: &DiscreteBet) -> Result<Sharpe, LeverageError> {
    let mean = bet.mean_p();
    let variance =
        bet.support.iter().zip(&bet.p).fold(Rational::zero(), |acc, (v, w)| acc + w * (v - &mean) * (v - &mean));
    if variance.is_zero() {
        return Err(LeverageError::ZeroVariance);
    }
    let numerator = mean - Rational::one();
    let squared = &numerator * &numerator / &variance;
    let ratio = rational::to_f64(&numerator) / rational::to_f64(&variance).sqrt();
    Ok(Sharpe { numerator, variance, squared, ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `a >= 0`.
    NonNegative,
    /// `a <= 0`.
    NonPositive,
}

/// Optimum of one constrained family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Optimum {
    /// `None` when the objective is unbounded.
    #[serde(with = "rational::serde_fraction::option")]
    pub value: Option<Rational>,
    #[serde(with = "rational::serde_fraction::option")]
    pub a: Option<Rational>,
    #[serde(with = "rational::serde_fraction::option")]
    pub b: Option<Rational>,
    pub branch: Branch,
}

impl Optimum {
    pub fn bounded(&self) -> bool {
        self.value.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionalResult {
    /// Supremum over all `(a, b)`.
    pub optimum: Optimum,
    /// Supremum with `a >= 0, b >= 0`.
    pub restricted: Optimum,
}

impl FunctionalResult {
    pub fn value(&self) -> Option<&Rational> {
        self.optimum.value.as_ref()
    }

    pub fn bounded(&self) -> bool {
        self.optimum.bounded()
    }

    /// Whether restricting to `a, b >= 0` changes the answer.
    pub fn restriction_binds(&self) -> bool {
        self.optimum.value != self.restricted.value
    }
}

/// `c_a a + c_b b <= rhs`.
struct Halfplane {
    ca: Rational,
    cb: Rational,
    rhs: Rational,
}

impl Halfplane {
    fn holds(&self, a: &Rational, b: &Rational) -> bool {
        &self.ca * a + &self.cb * b <= self.rhs
    }

    fn recedes(&self, da: &Rational, db: &Rational) -> bool {
        !(&self.ca * da + &self.cb * db).is_positive()
    }
}

/// Maximizes `oa a + ob b` over the intersection of half-planes, returning
/// `None` if unbounded. The region must be nonempty and contain no line.
fn solve_lp(cons: &[Halfplane], oa: &Rational, ob: &Rational) -> Option<(Rational, Rational, Rational)> {
    // A pointed 2-d cone is generated by directions along constraint edges,
    // so an improving ray exists iff one of these candidates is improving.
    let mut rays: Vec<(Rational, Rational)> = vec![(oa.clone(), ob.clone())];
    for c in cons {
        rays.push((c.cb.clone(), -c.ca.clone()));
        rays.push((-c.cb.clone(), c.ca.clone()));
    }
    for (da, db) in &rays {
        if (oa * da + ob * db).is_positive() && cons.iter().all(|c| c.recedes(da, db)) {
            return None;
        }
    }
    let mut best: Option<(Rational, Rational, Rational)> = None;
    for (i, c1) in cons.iter().enumerate() {
        for c2 in &cons[i + 1..] {
            let det = &c1.ca * &c2.cb - &c1.cb * &c2.ca;
            if det.is_zero() {
                continue;
            }
            let a = (&c1.rhs * &c2.cb - &c1.cb * &c2.rhs) / &det;
            let b = (&c1.ca * &c2.rhs - &c1.rhs * &c2.ca) / &det;
            if !cons.iter().all(|c| c.holds(&a, &b)) {
                continue;
            }
            let value = oa * &a + ob * &b;
            let better = match &best {
                None => true,
                Some((v, ba, bb)) => value > *v || (value == *v && (&a, &b) < (ba, bb)),
            };
            if better {
                best = Some((value, a, b));
            }
        }
    }
    Some(best.expect("a bounded pointed LP attains its optimum at a vertex"))
}

fn branch_constraints(bet: &DiscreteBet, branch: Branch) -> Vec<Halfplane> {
    let k = bet.len();
    let mut cons = Vec::with_capacity(k + 2);
    for i in 0..k {
        if bet.p[i].is_zero() {
            continue;
        }
        let mass: Rational = match branch {
            Branch::NonNegative => bet.p[i..].iter().fold(Rational::zero(), |a, w| a + w),
            Branch::NonPositive => bet.p[..=i].iter().fold(Rational::zero(), |a, w| a + w),
        };
        cons.push(Halfplane { ca: &mass * &bet.support[i], cb: mass, rhs: Rational::one() });
    }
    let sign = match branch {
        Branch::NonNegative => int(-1),
        Branch::NonPositive => int(1),
    };
    cons.push(Halfplane { ca: sign, cb: Rational::zero(), rhs: Rational::zero() });
    cons
}

fn optimize(bet: &DiscreteBet, branch: Branch, extra: Option<Halfplane>) -> Optimum {
    let mut cons = branch_constraints(bet, branch);
    cons.extend(extra);
    match solve_lp(&cons, &bet.mean_q(), &Rational::one()) {
        Some((value, a, b)) => Optimum { value: Some(value), a: Some(a), b: Some(b), branch },
        None => Optimum { value: None, a: None, b: None, branch },
    }
}

/// The supremum over both branches, plus the `a, b >= 0` restriction.
pub fn evidence_functional(bet: &DiscreteBet) -> FunctionalResult {
    let pos = optimize(bet, Branch::NonNegative, None);
    let neg = optimize(bet, Branch::NonPositive, None);
    let optimum = match (&pos.value, &neg.value) {
        (None, _) => pos.clone(),
        (_, None) => neg,
        (Some(x), Some(y)) if y > x => neg,
        _ => pos.clone(),
    };
    let restricted = optimize(
        bet,
        Branch::NonNegative,
        Some(Halfplane { ca: Rational::zero(), cb: int(-1), rhs: Rational::zero() }),
    );
    FunctionalResult { optimum, restricted }
}

/// Checks `Pr_P(aY + b >= x) <= 1/x` at every jump point `x = a v_i + b > 0`.
pub fn is_standardized(bet: &DiscreteBet, a: &Rational, b: &Rational) -> bool {
    bet.support.iter().all(|v| {
        let x = a * v + b;
        !x.is_positive() || bet.tail_p(a, b, &x) * &x <= Rational::one()
    })
}

/// Pseudorandom instances: `2..=k_max` support points on a half-integer grid
/// in `[-2, 4]`, positive `P` weights, `Q` supported inside `P`, and
/// `beta = n/4` in `(-1, 5]`; with `below_minus_one`, `beta` in `[-3, -5/4]`.
pub fn random_instances(seed: u64, count: usize, k_max: usize, below_minus_one: bool) -> Vec<(DiscreteBet, Rational)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.gen_range(2..=k_max.max(2));
            let mut grid: Vec<i64> = (-4..=8).collect();
            let mut values = Vec::with_capacity(k);
            for _ in 0..k {
                let j = rng.gen_range(0..grid.len());
                values.push(ratio(grid.swap_remove(j), 2));
            }
            let p_raw: Vec<i64> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
            let mut q_raw: Vec<i64> = (0..k).map(|_| rng.gen_range(0..=6)).collect();
            if q_raw.iter().all(|w| *w == 0) {
                q_raw[0] = 1;
            }
            let norm = |w: &[i64]| {
                let s: i64 = w.iter().sum();
                w.iter().map(|x| ratio(*x, s)).collect::<Vec<_>>()
            };
            let bet = DiscreteBet::new(values, norm(&p_raw), norm(&q_raw)).expect("valid instance");
            let beta =
                if below_minus_one { -ratio(rng.gen_range(5..=12), 4) } else { ratio(rng.gen_range(-3..=20), 4) };
            (bet, beta)
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct BetRow {
    #[serde(default)]
    bet: Option<String>,
    value: String,
    p: String,
    q: String,
}

/// Reads bets from CSV with columns `value,p,q` and an optional `bet` id;
/// consecutive rows with the same id form one bet.
pub fn read_bets_csv<R: io::Read>(input: R) -> Result<Vec<(String, DiscreteBet)>, LeverageError> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    // (id, values, p, q)
    type Group = (String, Vec<Rational>, Vec<Rational>, Vec<Rational>);
    let mut groups: Vec<Group> = Vec::new();
    for row in reader.deserialize::<BetRow>() {
        let row =
            row.map_err(|e| LeverageError::Csv { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
        let id = row.bet.unwrap_or_else(|| "bet".into());
        let parse =
            |column, text: &str| rational::parse(text).map_err(|source| LeverageError::Rational { column, source });
        let (v, p, q) = (parse("value", &row.value)?, parse("p", &row.p)?, parse("q", &row.q)?);
        match groups.last_mut() {
            Some(g) if g.0 == id => {
                g.1.push(v);
                g.2.push(p);
                g.3.push(q);
            }
            _ => groups.push((id, vec![v], vec![p], vec![q])),
        }
    }
    groups.into_iter().map(|(id, v, p, q)| Ok((id, DiscreteBet::new(v, p, q)?))).collect()
}

/// One JSON line per result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FunctionalRecord {
    pub bet: String,
    #[serde(with = "rational::serde_fraction")]
    pub beta: Rational,
    #[serde(with = "rational::serde_fraction::option")]
    pub value: Option<Rational>,
    pub decimal: Option<f64>,
    #[serde(with = "rational::serde_fraction::option")]
    pub a: Option<Rational>,
    #[serde(with = "rational::serde_fraction::option")]
    pub b: Option<Rational>,
    pub branch: Branch,
    pub bounded: bool,
    /// Present when restricting to `a, b >= 0` changes the value.
    pub restricted: Option<Optimum>,
}

impl FunctionalRecord {
    pub fn new(bet: impl Into<String>, beta: Rational, result: &FunctionalResult) -> Self {
        let o = &result.optimum;
        FunctionalRecord {
            bet: bet.into(),
            beta,
            decimal: o.value.as_ref().map(rational::to_f64),
            value: o.value.clone(),
            a: o.a.clone(),
            b: o.b.clone(),
            branch: o.branch,
            bounded: o.bounded(),
            restricted: result.restriction_binds().then(|| result.restricted.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn coin(p2: Rational, q2: Rational) -> DiscreteBet {
        DiscreteBet::new(vec![int(0), int(2)], vec![int(1) - &p2, p2], vec![int(1) - &q2, q2]).unwrap()
    }

    #[test]
    fn leverage_map_examples() {
        let y = coin(ratio(1, 2), ratio(9, 10));
        assert_eq!(leverage_map(&y, &int(0)).unwrap(), y);
        let up = leverage_map(&y, &int(1)).unwrap();
        assert_eq!(up.support(), &[int(-1), int(3)]);
        let y = coin(ratio(1, 4), ratio(9, 10));
        let flipped = leverage_map(&y, &int(-2)).unwrap();
        assert_eq!(flipped.support(), &[int(0), int(2)]);
        assert_eq!(flipped.p_weights(), &[ratio(1, 4), ratio(3, 4)]);
        assert_eq!(flipped.q_weights(), &[ratio(9, 10), ratio(1, 10)]);
        assert_eq!(leverage_map(&y, &int(-1)), Err(LeverageError::DegenerateLeverage));
    }

    #[test]
    fn sharpe_examples() {
        let s = sharpe(&coin(ratio(1, 2), ratio(1, 2))).unwrap();
        assert!(s.numerator.is_zero());
        assert_eq!(s.ratio, 0.0);
        let s = sharpe(&coin(ratio(3, 4), ratio(1, 2))).unwrap();
        assert_eq!(s.numerator, ratio(1, 2));
        assert_eq!(s.variance, ratio(3, 4));
        let one = DiscreteBet::new(vec![int(1)], vec![int(1)], vec![int(1)]).unwrap();
        assert_eq!(sharpe(&one), Err(LeverageError::ZeroVariance));
    }

    #[test]
    fn functional_examples() {
        let one = DiscreteBet::new(vec![int(1)], vec![int(1)], vec![int(1)]).unwrap();
        assert_eq!(evidence_functional(&one).value(), Some(&int(1)));
        let y = coin(ratio(1, 2), ratio(9, 10));
        let r = evidence_functional(&y);
        assert_eq!(r.value(), Some(&ratio(19, 10)));
        assert_eq!(r.optimum.a, Some(ratio(1, 2)));
        assert_eq!(r.optimum.b, Some(int(1)));
        assert!(!r.restriction_binds());
    }

    #[test]
    fn q_outside_p_range_is_unbounded() {
        let y = DiscreteBet::new(
            vec![int(0), int(1), int(2)],
            vec![ratio(1, 2), ratio(1, 2), int(0)],
            vec![int(0), int(0), int(1)],
        )
        .unwrap();
        assert!(!y.q_within_p());
        assert!(!evidence_functional(&y).bounded());
    }

    #[test]
    fn restriction_can_bind_after_reversal() {
        // leverage beyond -1 flips the bet; the unrestricted optimum moves to a <= 0
        let y = coin(ratio(1, 2), ratio(9, 10));
        let flipped = leverage_map(&y, &int(-3)).unwrap();
        let r = evidence_functional(&flipped);
        assert_eq!(r.value(), Some(&ratio(19, 10)));
        assert_eq!(r.optimum.branch, Branch::NonPositive);
        assert!(r.restriction_binds());
    }

    #[test]
    fn argmax_is_standardized_on_a_dense_grid() {
        for (bet, _) in random_instances(3, 40, 6, false) {
            let r = evidence_functional(&bet);
            let (a, b) = (r.optimum.a.clone().unwrap(), r.optimum.b.clone().unwrap());
            assert!(is_standardized(&bet, &a, &b));
            for n in 1..=400 {
                let x = ratio(n, 40);
                assert!(bet.tail_p(&a, &b, &x) * &x <= int(1), "x = {x}");
            }
        }
    }

    #[test]
    fn reads_grouped_csv() {
        let text = "bet,value,p,q\nc,0,1/2,1/10\nc,2,1/2,9/10\nd,1,1,1\n";
        let bets = read_bets_csv(text.as_bytes()).unwrap();
        assert_eq!(bets.len(), 2);
        assert_eq!(evidence_functional(&bets[0].1).value(), Some(&ratio(19, 10)));
        assert!(read_bets_csv("value,p,q\n0,0.5,1\n".as_bytes()).is_err());
        assert!(matches!(read_bets_csv("value,p,q\n0,1/2,1\n".as_bytes()), Err(LeverageError::NotNormalized { .. })));
    }

    proptest! {
        #[test]
        fn functional_is_leverage_invariant(seed in any::<u64>(), flip in any::<bool>()) {
            for (bet, beta) in random_instances(seed, 3, 6, flip) {
                let base = evidence_functional(&bet);
                let lev = evidence_functional(&leverage_map(&bet, &beta).unwrap());
                prop_assert_eq!(base.value(), lev.value());
            }
        }

        #[test]
        fn squared_sharpe_is_leverage_invariant(seed in any::<u64>()) {
            for (bet, beta) in random_instances(seed, 3, 6, false) {
                let lev = leverage_map(&bet, &beta).unwrap();
                prop_assert_eq!(sharpe(&bet).unwrap().squared, sharpe(&lev).unwrap().squared);
            }
        }
    }
}
