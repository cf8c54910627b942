//! Tail-evidence certificates.
//!
//! A certificate `(a, b, c)` about a random variable (or process) `E` claims
//!
//! ```text
//! Pr_{1/2}(E >= x) <= a / (x - b) + c      for every x > b
//! ```
//!
//! either at a stopping time ([`CertificateKind::StoppedAt`]) or for the
//! running supremum ([`CertificateKind::Sequential`]). The constructors here
//! never attest their own hypotheses: each one reads the constants it needs
//! from an [`AssumptionReport`], which is produced by the exact oracle, by a
//! guard strategy, or declared explicitly by the caller.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::Series;
use crate::rational::{self, Rational};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvidenceError {
    #[error("tail bound undefined at x = {x} <= b = {b}")]
    OutsideDomain { x: Rational, b: Rational },
    #[error("{what} must be non-negative, got {value}")]
    Negative { what: &'static str, value: Rational },
    #[error("floor {0} must be strictly below 1")]
    FloorTooHigh(Rational),
    #[error("scale a = {0} must be positive")]
    NonPositiveScale(Rational),
    #[error("assumption report does not attest {0}")]
    Unattested(&'static str),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "rule", rename_all = "kebab-case")]
pub enum CertificateKind {
    /// Tail evidence at the stopping rule with this id.
    StoppedAt(String),
    Sequential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Subject {
    GrossWealth,
    NetWealth,
    SubNetWealth,
    AdjustedNetWealth,
}

impl Subject {
    pub fn series(self) -> Series {
        match self {
            Subject::GrossWealth => Series::Gross,
            Subject::NetWealth => Series::Net,
            Subject::SubNetWealth => Series::SubNet,
            Subject::AdjustedNetWealth => Series::AdjustedNet,
        }
    }
}

/// Which sufficient condition backs optional stopping for the net wealth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StoppingBasis {
    BoundedStoppingTime,
    UniformlyIntegrableFinite,
    NetWealthBoundedBelow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attestation {
    /// Exact enumeration over every path.
    Oracle,
    /// Enforced pathwise by a guard strategy.
    Guard,
    /// Supplied by the caller without verification.
    Declared,
}

/// The hypotheses a certificate rests on, each with its numeric constant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub attestation: Attestation,
    /// `beta_t >= 0` on every path.
    pub positive_borrowings: bool,
    pub optional_stopping: Option<StoppingBasis>,
    /// `E L_tau`.
    #[serde(with = "rational::serde_fraction::option", default)]
    pub stopped_liabilities: Option<Rational>,
    /// `sup_t E L_t`.
    #[serde(with = "rational::serde_fraction::option", default)]
    pub sup_liabilities: Option<Rational>,
    /// `N_t >= N_min` pathwise (at tau only, or at every t).
    #[serde(with = "rational::serde_fraction::option", default)]
    pub net_floor: Option<Rational>,
    /// `N~_t >= G` pathwise.
    #[serde(with = "rational::serde_fraction::option", default)]
    pub sub_net_floor: Option<Rational>,
    /// `N'_t >= floor` pathwise for the numeraire-adjusted net wealth.
    #[serde(with = "rational::serde_fraction::option", default)]
    pub adjusted_net_floor: Option<Rational>,
    /// `sup_t E sum (1 + b_i) beta_i^+`.
    #[serde(with = "rational::serde_fraction::option", default)]
    pub positive_borrowings_bound: Option<Rational>,
    /// `sum_t b_t`.
    #[serde(with = "rational::serde_fraction::option", default)]
    pub bonus_sum: Option<Rational>,
}

impl AssumptionReport {
    pub fn new(attestation: Attestation) -> Self {
        AssumptionReport {
            attestation,
            positive_borrowings: false,
            optional_stopping: None,
            stopped_liabilities: None,
            sup_liabilities: None,
            net_floor: None,
            sub_net_floor: None,
            adjusted_net_floor: None,
            positive_borrowings_bound: None,
            bonus_sum: None,
        }
    }

    pub fn with_positive_borrowings(mut self) -> Self {
        self.positive_borrowings = true;
        self
    }

    pub fn with_optional_stopping(mut self, basis: StoppingBasis) -> Self {
        self.optional_stopping = Some(basis);
        self
    }

    pub fn with_stopped_liabilities(mut self, l: Rational) -> Self {
        self.stopped_liabilities = Some(l);
        self
    }

    pub fn with_sup_liabilities(mut self, l: Rational) -> Self {
        self.sup_liabilities = Some(l);
        self
    }

    pub fn with_net_floor(mut self, floor: Rational) -> Self {
        self.net_floor = Some(floor);
        self
    }

    pub fn with_sub_net_floor(mut self, floor: Rational) -> Self {
        self.sub_net_floor = Some(floor);
        self
    }

    pub fn with_adjusted_net_floor(mut self, floor: Rational) -> Self {
        self.adjusted_net_floor = Some(floor);
        self
    }

    pub fn with_positive_borrowings_bound(mut self, b: Rational) -> Self {
        self.positive_borrowings_bound = Some(b);
        self
    }

    pub fn with_bonus_sum(mut self, c: Rational) -> Self {
        self.bonus_sum = Some(c);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceCertificate {
    #[serde(flatten)]
    pub kind: CertificateKind,
    pub subject: Subject,
    #[serde(with = "rational::serde_fraction")]
    pub a: Rational,
    #[serde(with = "rational::serde_fraction")]
    pub b: Rational,
    #[serde(with = "rational::serde_fraction")]
    pub c: Rational,
    pub assumptions: AssumptionReport,
}

impl EvidenceCertificate {
    /// Builds a certificate from explicit constants, checking only the
    /// structural invariants (`a > 0`, `c >= 0`, `b < 1` for net subjects).
    /// Used to inject deliberately wrong certificates into the oracle.
    pub fn unchecked(
        kind: CertificateKind,
        subject: Subject,
        a: Rational,
        b: Rational,
        c: Rational,
        assumptions: AssumptionReport,
    ) -> Result<Self, EvidenceError> {
        if !a.is_positive() {
            return Err(EvidenceError::NonPositiveScale(a));
        }
        if c.is_negative() {
            return Err(EvidenceError::Negative { what: "slack c", value: c });
        }
        if subject != Subject::GrossWealth && b >= Rational::one() {
            return Err(EvidenceError::FloorTooHigh(b));
        }
        Ok(EvidenceCertificate { kind, subject, a, b, c, assumptions })
    }

    pub fn tail_bound(&self, x: &Rational) -> Result<Rational, EvidenceError> {
        tail_bound(self, x)
    }

    pub fn to_jsonl(&self) -> String {
        serde_json::to_string(self).expect("certificate serializes")
    }
}

/// `min(1, a / (x - b) + c)`.
pub fn tail_bound(cert: &EvidenceCertificate, x: &Rational) -> Result<Rational, EvidenceError> {
    if *x <= cert.b {
        return Err(EvidenceError::OutsideDomain { x: x.clone(), b: cert.b.clone() });
    }
    let bound = &cert.a / (x - &cert.b) + &cert.c;
    Ok(bound.min(Rational::one()))
}

/// `(E - b) / a`.
pub fn to_e_value(e: &Rational, a: &Rational, b: &Rational) -> Result<Rational, EvidenceError> {
    if !a.is_positive() {
        return Err(EvidenceError::NonPositiveScale(a.clone()));
    }
    Ok((e - b) / a)
}

/// `min(1, a / (E - b)^+)`, with `1` when `E <= b`.
pub fn to_p_value(e: &Rational, a: &Rational, b: &Rational) -> Result<Rational, EvidenceError> {
    if !a.is_positive() {
        return Err(EvidenceError::NonPositiveScale(a.clone()));
    }
    if e <= b {
        return Ok(Rational::one());
    }
    Ok((a / (e - b)).min(Rational::one()))
}

fn non_negative(what: &'static str, value: &Rational) -> Result<(), EvidenceError> {
    if value.is_negative() {
        return Err(EvidenceError::Negative { what, value: value.clone() });
    }
    Ok(())
}

/// `W_tau` as `(1 + L, 0)`-tail evidence with `L = E L_tau`.
///
/// Needs optional stopping and a finite expected stopped liability. Repaying
/// strategies can make `L` negative; `E W_tau = 1 + L` keeps the scale
/// non-negative, and only the degenerate `W_tau = 0` case is refused.
pub fn certify_gross_stopped(
    rule_id: impl Into<String>,
    report: &AssumptionReport,
) -> Result<EvidenceCertificate, EvidenceError> {
    if report.optional_stopping.is_none() {
        return Err(EvidenceError::Unattested("optional stopping for the net wealth"));
    }
    let l =
        report.stopped_liabilities.as_ref().ok_or(EvidenceError::Unattested("bounded expected stopped liabilities"))?;
    let a = Rational::one() + l;
    if !a.is_positive() {
        return Err(EvidenceError::NonPositiveScale(a));
    }
    Ok(EvidenceCertificate {
        kind: CertificateKind::StoppedAt(rule_id.into()),
        subject: Subject::GrossWealth,
        a,
        b: Rational::zero(),
        c: Rational::zero(),
        assumptions: report.clone(),
    })
}

/// The running gross wealth as `(1 + B, 0, C)`-sequential tail evidence.
///
/// `B` is the attested bound on expected positive-part borrowings (bonus
/// weighted in a mispriced game); failing that, positivity of borrowings
/// together with `sup_t E L_t` serves. `C` is the bonus sum, zero when absent.
pub fn certify_gross_sequential(report: &AssumptionReport) -> Result<EvidenceCertificate, EvidenceError> {
    let b = match (&report.positive_borrowings_bound, &report.sup_liabilities) {
        (Some(b), _) => b.clone(),
        (None, Some(l)) if report.positive_borrowings => l.clone(),
        _ => return Err(EvidenceError::Unattested("a bound on expected borrowings")),
    };
    non_negative("borrowing bound B", &b)?;
    let c = report.bonus_sum.clone().unwrap_or_else(Rational::zero);
    non_negative("bonus sum C", &c)?;
    Ok(EvidenceCertificate {
        kind: CertificateKind::Sequential,
        subject: Subject::GrossWealth,
        a: Rational::one() + b,
        b: Rational::zero(),
        c,
        assumptions: report.clone(),
    })
}

/// Net, sub-net or adjusted-net wealth as `(1 - floor, floor)`-tail evidence.
pub fn certify_net(
    subject: Subject,
    kind: CertificateKind,
    report: &AssumptionReport,
) -> Result<EvidenceCertificate, EvidenceError> {
    let floor = match subject {
        Subject::NetWealth => report.net_floor.as_ref().ok_or(EvidenceError::Unattested("a net-wealth floor"))?,
        Subject::SubNetWealth => {
            if !report.positive_borrowings {
                return Err(EvidenceError::Unattested("positivity of borrowings"));
            }
            report.sub_net_floor.as_ref().ok_or(EvidenceError::Unattested("a sub-net-wealth floor"))?
        }
        Subject::AdjustedNetWealth => {
            report.adjusted_net_floor.as_ref().ok_or(EvidenceError::Unattested("an adjusted net-wealth floor"))?
        }
        Subject::GrossWealth => return Err(EvidenceError::Unattested("a net-type subject")),
    };
    if *floor >= Rational::one() {
        return Err(EvidenceError::FloorTooHigh(floor.clone()));
    }
    if matches!(kind, CertificateKind::StoppedAt(_)) && report.optional_stopping.is_none() {
        return Err(EvidenceError::Unattested("optional stopping"));
    }
    Ok(EvidenceCertificate {
        kind,
        subject,
        a: Rational::one() - floor,
        b: floor.clone(),
        c: Rational::zero(),
        assumptions: report.clone(),
    })
}

/// Whether the worst outcome of the proposed round keeps `N_t >= N_min`.
///
/// The worst case loses the staked `|lambda| (W + beta)`, so the test is
/// `(W + beta)(1 - |lambda|) - beta >= L + N_min`.
pub fn net_floor_constraint(
    wealth: &Rational,
    liabilities: &Rational,
    beta: &Rational,
    lambda: &Rational,
    n_min: &Rational,
) -> bool {
    let at_table = wealth + beta;
    at_table * (Rational::one() - lambda.abs()) - beta >= liabilities + n_min
}

/// Signed `p/q` summary used in reports.
pub fn describe(cert: &EvidenceCertificate) -> String {
    format!("({}, {}, {}) {:?} {:?}", cert.a, cert.b, cert.c, cert.subject, cert.kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    fn report() -> AssumptionReport {
        AssumptionReport::new(Attestation::Declared)
    }

    fn cert(a: Rational, b: Rational, c: Rational, subject: Subject) -> EvidenceCertificate {
        EvidenceCertificate::unchecked(CertificateKind::Sequential, subject, a, b, c, report()).unwrap()
    }

    #[test]
    fn tail_bound_examples() {
        let ville = cert(int(1), int(0), int(0), Subject::GrossWealth);
        assert_eq!(tail_bound(&ville, &int(20)).unwrap(), ratio(1, 20));
        let net = cert(int(2), int(-1), int(0), Subject::NetWealth);
        assert_eq!(tail_bound(&net, &int(3)).unwrap(), ratio(1, 2));
        let slack = cert(int(1), int(0), ratio(1, 20), Subject::GrossWealth);
        assert_eq!(tail_bound(&slack, &int(1_000_000)).unwrap(), ratio(1, 1_000_000) + ratio(1, 20));
    }

    #[test]
    fn tail_bound_clamps_and_rejects_domain() {
        let ville = cert(int(1), int(0), int(0), Subject::GrossWealth);
        assert_eq!(tail_bound(&ville, &ratio(1, 2)).unwrap(), int(1));
        assert!(matches!(tail_bound(&ville, &int(0)), Err(EvidenceError::OutsideDomain { .. })));
        assert!(tail_bound(&ville, &int(-1)).is_err());
    }

    #[test]
    fn e_value_examples() {
        assert_eq!(to_e_value(&int(4), &int(2), &int(-1)).unwrap(), ratio(5, 2));
        assert_eq!(to_e_value(&int(-1), &int(2), &int(-1)).unwrap(), int(0));
        assert_eq!(to_e_value(&int(0), &int(4), &int(-3)).unwrap(), ratio(3, 4));
        assert!(to_e_value(&int(0), &int(0), &int(0)).is_err());
    }

    #[test]
    fn p_value_examples() {
        assert_eq!(to_p_value(&int(21), &int(1), &int(0)).unwrap(), ratio(1, 21));
        assert_eq!(to_p_value(&int(0), &int(1), &int(0)).unwrap(), int(1));
        assert_eq!(to_p_value(&int(-5), &int(1), &int(0)).unwrap(), int(1));
        assert_eq!(to_p_value(&int(5), &int(2), &int(1)).unwrap(), ratio(1, 2));
    }

    #[test]
    fn gross_stopped_certificates() {
        for (l, a) in [(int(0), int(1)), (int(2), int(3)), (ratio(1, 2), ratio(3, 2))] {
            let r = report().with_optional_stopping(StoppingBasis::BoundedStoppingTime).with_stopped_liabilities(l);
            let c = certify_gross_stopped("tau", &r).unwrap();
            assert_eq!((c.a.clone(), c.b.clone(), c.c.clone()), (a, int(0), int(0)));
            assert_eq!(c.kind, CertificateKind::StoppedAt("tau".into()));
            assert_eq!(c.subject, Subject::GrossWealth);
        }
    }

    #[test]
    fn gross_stopped_requires_attestation() {
        let r = report().with_stopped_liabilities(int(1));
        assert!(matches!(certify_gross_stopped("tau", &r), Err(EvidenceError::Unattested(_))));
        let r = report().with_optional_stopping(StoppingBasis::BoundedStoppingTime);
        assert!(matches!(certify_gross_stopped("tau", &r), Err(EvidenceError::Unattested(_))));
        let r = report().with_optional_stopping(StoppingBasis::BoundedStoppingTime).with_stopped_liabilities(int(-1));
        assert!(matches!(certify_gross_stopped("tau", &r), Err(EvidenceError::NonPositiveScale(_))));
        let r = r.with_stopped_liabilities(ratio(-1, 2));
        assert_eq!(certify_gross_stopped("tau", &r).unwrap().a, ratio(1, 2));
    }

    #[test]
    fn gross_sequential_certificates() {
        let cases = [
            (int(0), int(0), (int(1), int(0))),
            (int(3), int(0), (int(4), int(0))),
            (int(1), ratio(1, 4), (int(2), ratio(1, 4))),
        ];
        for (b, c, (a, slack)) in cases {
            let r = report().with_positive_borrowings_bound(b).with_bonus_sum(c);
            let cert = certify_gross_sequential(&r).unwrap();
            assert_eq!(cert.a, a);
            assert_eq!(cert.b, int(0));
            assert_eq!(cert.c, slack);
            assert_eq!(cert.kind, CertificateKind::Sequential);
        }
        let r = report().with_positive_borrowings_bound(int(-1));
        assert!(matches!(certify_gross_sequential(&r), Err(EvidenceError::Negative { .. })));
        let r = report().with_positive_borrowings_bound(int(1)).with_bonus_sum(int(-1));
        assert!(certify_gross_sequential(&r).is_err());
        // sup E L_t only counts once borrowings are known to be non-negative
        let r = report().with_sup_liabilities(int(2));
        assert!(certify_gross_sequential(&r).is_err());
        let cert = certify_gross_sequential(&r.with_positive_borrowings()).unwrap();
        assert_eq!(cert.a, int(3));
    }

    #[test]
    fn net_certificates() {
        let r = report().with_net_floor(int(-1));
        let c = certify_net(Subject::NetWealth, CertificateKind::Sequential, &r).unwrap();
        assert_eq!((c.a, c.b), (int(2), int(-1)));

        let r = report().with_positive_borrowings().with_sub_net_floor(int(-3));
        let c = certify_net(Subject::SubNetWealth, CertificateKind::Sequential, &r).unwrap();
        assert_eq!((c.a, c.b), (int(4), int(-3)));

        let r = report().with_net_floor(int(0)).with_optional_stopping(StoppingBasis::BoundedStoppingTime);
        let c = certify_net(Subject::NetWealth, CertificateKind::StoppedAt("T".into()), &r).unwrap();
        assert_eq!((c.a, c.b), (int(1), int(0)));
    }

    #[test]
    fn net_certificates_reject_bad_floors() {
        let r = report().with_net_floor(int(1));
        assert!(matches!(
            certify_net(Subject::NetWealth, CertificateKind::Sequential, &r),
            Err(EvidenceError::FloorTooHigh(_))
        ));
        let r = report().with_sub_net_floor(int(-3));
        assert!(matches!(
            certify_net(Subject::SubNetWealth, CertificateKind::Sequential, &r),
            Err(EvidenceError::Unattested(_))
        ));
        let r = report().with_net_floor(int(0));
        assert!(certify_net(Subject::NetWealth, CertificateKind::StoppedAt("T".into()), &r).is_err());
        assert!(certify_net(Subject::GrossWealth, CertificateKind::Sequential, &r).is_err());
    }

    #[test]
    fn floor_constraint_examples() {
        assert!(net_floor_constraint(&int(1), &int(0), &int(1), &ratio(1, 2), &int(-1)));
        assert!(net_floor_constraint(&int(1), &int(0), &int(0), &int(0), &int(1)));
        assert!(!net_floor_constraint(&int(1), &int(0), &int(10), &int(1), &int(-1)));
        // betting on tails is symmetric
        assert!(!net_floor_constraint(&int(1), &int(0), &int(10), &int(-1), &int(-1)));
        assert!(net_floor_constraint(&int(1), &int(0), &int(1), &int(-1), &int(-1)));
    }

    #[test]
    fn certificate_jsonl_round_trip() {
        let r = report().with_net_floor(int(-1)).with_optional_stopping(StoppingBasis::BoundedStoppingTime);
        let c = certify_net(Subject::NetWealth, CertificateKind::StoppedAt("fixed-2".into()), &r).unwrap();
        let line = c.to_jsonl();
        assert!(line.contains("\"a\":\"2/1\""));
        assert!(line.contains("\"kind\":\"stopped-at\""));
        let back: EvidenceCertificate = serde_json::from_str(&line).unwrap();
        assert_eq!(back, c);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use crate::rational::ratio;
    use proptest::prelude::*;

    fn small() -> impl Strategy<Value = Rational> {
        (-40i64..40, 1i64..12).prop_map(|(n, d)| ratio(n, d))
    }

    fn positive() -> impl Strategy<Value = Rational> {
        (1i64..40, 1i64..12).prop_map(|(n, d)| ratio(n, d))
    }

    proptest! {
        #[test]
        fn p_and_e_values_are_reciprocal(e in small(), a in positive(), b in small()) {
            prop_assume!(e > b);
            let p = to_p_value(&e, &a, &b).unwrap();
            let ev = to_e_value(&e, &a, &b).unwrap();
            if p < Rational::one() {
                prop_assert_eq!(p * ev, Rational::one());
            } else {
                prop_assert!(ev <= Rational::one());
            }
        }

        #[test]
        fn tail_bound_decreases_towards_slack(a in positive(), b in small(), c in (0i64..10).prop_map(|n| ratio(n, 40)),
                                              d1 in positive(), d2 in positive()) {
            let cert = EvidenceCertificate::unchecked(
                CertificateKind::Sequential, Subject::GrossWealth, a, b.clone(), c.clone(),
                AssumptionReport::new(Attestation::Declared)).unwrap();
            let x1 = &b + &d1;
            let x2 = &x1 + &d2;
            let t1 = tail_bound(&cert, &x1).unwrap();
            let t2 = tail_bound(&cert, &x2).unwrap();
            prop_assert!(t2 <= t1);
            if t1 < Rational::one() {
                prop_assert!(t2 < t1);
            }
            prop_assert!(t2 >= c.min(Rational::one()));
        }

        #[test]
        fn gross_stopped_bound_is_markov(l in positive(), x in positive()) {
            let r = AssumptionReport::new(Attestation::Declared)
                .with_optional_stopping(StoppingBasis::BoundedStoppingTime)
                .with_stopped_liabilities(l.clone());
            let cert = certify_gross_stopped("tau", &r).unwrap();
            let expected = ((Rational::one() + l) / &x).min(Rational::one());
            prop_assert_eq!(tail_bound(&cert, &x).unwrap(), expected);
        }
    }
}
