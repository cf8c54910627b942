//! Named suites of exact checks, each producing one [`CheckReport`] per item.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;
use thiserror::Error;

use crate::evidence::{
    certify_gross_sequential, certify_gross_stopped, certify_net, AssumptionReport, CertificateKind,
    EvidenceCertificate, EvidenceError, Subject,
};
use crate::game::{GameError, Ledger, LedgerOptions, PayoffSchedule, Series};
use crate::leverage::{self, LeverageError};
use crate::oracle::{
    attest, doob_check, expectation, martingale_check, robbins_siegmund_check, sample_rules, stopped_distributions,
    verify_certificate, verify_stopped, AlmostSupermartingale, CheckReport, Decomposition, GameTree, MartingaleVerdict,
    OracleError, PathEnsemble, StoppingRule, VerifyOptions,
};
use crate::rational::{self, ratio, Rational};
use crate::strategies::{parse_strategy, period_e_values, random_eta, BuiltStrategy, StrategyError};
use crate::table1;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Evidence(#[from] EvidenceError),
    #[error(transparent)]
    Leverage(#[from] LeverageError),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Table1,
    Doob,
    Certificates,
    Stopping,
    Averaging,
    Leverage,
    Mispricing,
    RobbinsSiegmund,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Table1,
        Suite::Doob,
        Suite::Certificates,
        Suite::Stopping,
        Suite::Averaging,
        Suite::Leverage,
        Suite::Mispricing,
        Suite::RobbinsSiegmund,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Table1 => "table1",
            Suite::Doob => "doob",
            Suite::Certificates => "certificates",
            Suite::Stopping => "stopping",
            Suite::Averaging => "averaging",
            Suite::Leverage => "leverage",
            Suite::Mispricing => "mispricing",
            Suite::RobbinsSiegmund => "robbins-siegmund",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = VerifyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| VerifyError::UnknownSuite(s.to_string()))
    }
}

/// `all` expands to every suite.
pub fn parse_suites(text: &str) -> Result<Vec<Suite>, VerifyError> {
    if text.trim() == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    text.split(',').map(|s| s.trim().parse()).collect()
}

#[derive(Debug, Clone)]
pub struct VerifyParams {
    /// Largest horizon used by the corpus suites.
    pub horizon: usize,
    pub seed: u64,
    /// Explicit strategy specs; the pseudorandom corpus when empty.
    pub strategies: Vec<String>,
    /// Size of the pseudorandom strategy corpus.
    pub corpus: usize,
    /// Sampled stopping rules per strategy.
    pub rules: usize,
    /// Leverage instances with `beta` in `(-1, 5]`.
    pub instances: usize,
    /// Bet-and-save configurations.
    pub save_configs: usize,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            horizon: 8,
            seed: 0,
            strategies: Vec::new(),
            corpus: 24,
            rules: 64,
            instances: 200,
            save_configs: 20,
        }
    }
}

/// Pseudorandom admissible strategies: random bets with positive borrowings,
/// random bets that may repay, and constant bets behind a net-floor guard,
/// after three fixed references.
pub fn strategy_corpus(seed: u64, count: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0_4b05);
    let mut out = vec!["table1".to_string(), "doubling".to_string(), "constant:lambda=-1/3,beta=1/2".to_string()];
    let mut i = 0;
    while out.len() < count {
        let s: u32 = rng.gen();
        out.push(match i % 5 {
            0 | 1 => format!("random:seed={s},max-borrow={}", rng.gen_range(1..=4)),
            2 | 3 => format!("random:seed={s},repay=true"),
            _ => format!(
                "guard:n-min=-{},lambda={}/4,beta={}/2",
                rng.gen_range(0..=3),
                rng.gen_range(-4..=4),
                rng.gen_range(0..=4)
            ),
        });
        i += 1;
    }
    out.truncate(count);
    out
}

/// Bet-and-save specs with at most four periods and `tau_B <= max_horizon`.
pub fn save_corpus(seed: u64, count: usize, max_horizon: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5a_7e);
    let borrows = ["1/2", "1", "3/2", "2"];
    let mus = ["1/4", "1/2", "3/4", "1", "-1/2"];
    (0..count)
        .map(|i| {
            let b = rng.gen_range(1..=4usize.min(max_horizon.max(1)));
            let max_len = rng.gen_range(1..=(max_horizon / b).max(1));
            let bs: Vec<&str> = (0..b).map(|_| borrows[rng.gen_range(0..borrows.len())]).collect();
            let mu = mus[rng.gen_range(0..mus.len())];
            let period = if i % 2 == 0 {
                format!("period={max_len}")
            } else {
                let target = ["3/2", "2", "3"][rng.gen_range(0..3)];
                format!("crossing={target},max-len={max_len}")
            };
            format!("bet-and-save:borrows={},{period},mu={mu}", bs.join("|"))
        })
        .collect()
}

/// Horizon used for corpus entry `i`: `max`, `max - 1`, `max - 2`, `max - 3`, repeating.
pub fn corpus_horizon(max: usize, i: usize) -> usize {
    max.saturating_sub(i % 4).max(1)
}

fn corpus(params: &VerifyParams) -> Vec<String> {
    if params.strategies.is_empty() {
        strategy_corpus(params.seed, params.corpus)
    } else {
        params.strategies.clone()
    }
}

/// Runs `f(index, spec, horizon)` over the corpus in parallel, keeping corpus order.
fn per_strategy<F>(params: &VerifyParams, f: F) -> Result<Vec<CheckReport>, VerifyError>
where
    F: Fn(usize, &str, usize) -> Result<Vec<CheckReport>, VerifyError> + Sync,
{
    let specs = corpus(params);
    let chunks = specs
        .par_iter()
        .enumerate()
        .map(|(i, spec)| f(i, spec, corpus_horizon(params.horizon, i)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(chunks.into_iter().flatten().collect())
}

fn report_failure(check: &str, params: serde_json::Value, e: impl fmt::Display) -> CheckReport {
    CheckReport::new(check, params, false).with_detail(format!("error: {e}"))
}

pub fn run_suite(suite: Suite, params: &VerifyParams) -> Result<Vec<CheckReport>, VerifyError> {
    match suite {
        Suite::Table1 => table1_suite(),
        Suite::Doob => doob_suite(params),
        Suite::Certificates => certificates_suite(params),
        Suite::Stopping => stopping_suite(params),
        Suite::Averaging => averaging_suite(params),
        Suite::Leverage => leverage_suite(params),
        Suite::Mispricing => mispricing_suite(params),
        Suite::RobbinsSiegmund => robbins_siegmund_suite(),
    }
}

fn table1_suite() -> Result<Vec<CheckReport>, VerifyError> {
    let rows = table1::table1()?;
    Ok(rows
        .iter()
        .map(|r| {
            let expected: &[&str] = if r.x == [-1, 1] { &["subN_2", "(subN_2+3)/4"] } else { &[] };
            let passed = r.mismatches == expected;
            let mut rep = CheckReport::new("table1-row", json!({ "x": r.x }), passed).with_witness(r);
            if !r.mismatches.is_empty() {
                rep = rep.with_detail(format!("differs from the printed table in {}", r.mismatches.join(", ")));
            }
            rep
        })
        .collect())
}

fn tree_for<'a>(built: &'a BuiltStrategy, horizon: usize) -> Result<GameTree<'a>, VerifyError> {
    Ok(GameTree::new(built.strategy.as_ref(), built.schedule.clone(), PathEnsemble::fair(horizon)?))
}

/// Whether some reachable prefix borrows a negative amount.
fn repays_somewhere(tree: &GameTree<'_>) -> Result<bool, VerifyError> {
    let mut repays = false;
    tree.for_each_path(|l, _, _| repays |= l.decisions().iter().any(|d| d.beta.is_negative()))?;
    Ok(repays)
}

fn doob_suite(params: &VerifyParams) -> Result<Vec<CheckReport>, VerifyError> {
    per_strategy(params, |_, spec, t| {
        let mut out = Vec::new();
        let p = json!({ "strategy": spec, "T": t });
        let built = match parse_strategy(spec) {
            Ok(b) => b,
            Err(e) => return Ok(vec![report_failure("doob", p, e)]),
        };
        let tree = tree_for(&built, t)?;
        let doob = doob_check(&tree, Decomposition::simple())?;
        out.push(CheckReport::new("doob", p.clone(), doob.passed()).with_witness(&doob));
        let w = martingale_check(&tree, |l: &Ledger| l.last().wealth.clone())?;
        let repays = repays_somewhere(&tree)?;
        let sub = matches!(w.verdict, MartingaleVerdict::Submartingale | MartingaleVerdict::Martingale);
        out.push(
            CheckReport::new("wealth-submartingale-iff-no-repayment", p, sub != repays)
                .with_witness(&w)
                .with_detail(format!("repays: {repays}, verdict: {:?}", w.verdict)),
        );
        Ok(out)
    })
}

/// The certificates whose hypotheses the oracle attests for one tree, tagged
/// with the result they instantiate.
pub fn corpus_certificates(tree: &GameTree<'_>, report: &AssumptionReport) -> Vec<(&'static str, EvidenceCertificate)> {
    let mut out = Vec::new();
    if report.positive_borrowings {
        let mut only_l = report.clone();
        only_l.positive_borrowings_bound = None;
        if let Ok(c) = certify_gross_sequential(&only_l) {
            out.push(("gross-(1+L,0)", c));
        }
    }
    if let Ok(c) = certify_gross_sequential(report) {
        out.push(("gross-(1+B,0,C)", c));
    }
    if let Ok(c) = certify_net(Subject::NetWealth, CertificateKind::Sequential, report) {
        out.push(("net-(1-Nmin,Nmin)", c));
    }
    if tree.tracks(Series::SubNet) {
        if let Ok(c) = certify_net(Subject::SubNetWealth, CertificateKind::Sequential, report) {
            out.push(("subnet-(1-G,G)", c));
        }
    }
    if tree.tracks(Series::AdjustedNet) {
        if let Ok(c) = certify_net(Subject::AdjustedNetWealth, CertificateKind::Sequential, report) {
            out.push(("adjusted-net", c));
        }
    }
    out
}

fn certificates_suite(params: &VerifyParams) -> Result<Vec<CheckReport>, VerifyError> {
    per_strategy(params, |i, spec, t| {
        let mut out = Vec::new();
        let built = parse_strategy(spec)?;
        let eta_seed = params.seed.wrapping_add(i as u64);
        let tree =
            tree_for(&built, t)?.with_options(LedgerOptions { eta: Some(random_eta(eta_seed)), compound: false });
        let report = attest(&tree, Some(&StoppingRule::fixed(t)))?;
        for (name, cert) in corpus_certificates(&tree, &report) {
            let verdict = verify_certificate(&tree, &cert, &VerifyOptions::default())?;
            let p = json!({
                "strategy": spec, "T": t, "certificate": name, "eta": format!("random:{eta_seed}"),
                "a": rational::to_fraction_string(&cert.a), "b": rational::to_fraction_string(&cert.b),
                "c": rational::to_fraction_string(&cert.c),
            });
            out.push(CheckReport::new("certificate", p, verdict.holds).with_witness(&verdict));
        }
        Ok(out)
    })
}

/// The certificate with `a` lowered by one half: `(1 + B - 1/2, 0, C)`.
pub fn understated(cert: &EvidenceCertificate) -> Result<EvidenceCertificate, EvidenceError> {
    EvidenceCertificate::unchecked(
        cert.kind.clone(),
        cert.subject,
        &cert.a - ratio(1, 2),
        cert.b.clone(),
        cert.c.clone(),
        cert.assumptions.clone(),
    )
}

fn as_stopped(cert: &EvidenceCertificate, rule: &str) -> EvidenceCertificate {
    let mut c = cert.clone();
    c.kind = CertificateKind::StoppedAt(rule.to_string());
    c
}

fn stopping_suite(params: &VerifyParams) -> Result<Vec<CheckReport>, VerifyError> {
    per_strategy(params, |i, spec, t| {
        let mut out = Vec::new();
        let built = parse_strategy(spec)?;
        let eta_seed = params.seed.wrapping_add(i as u64);
        let tree =
            tree_for(&built, t)?.with_options(LedgerOptions { eta: Some(random_eta(eta_seed)), compound: false });
        let report = attest(&tree, Some(&StoppingRule::fixed(t)))?;
        let rule_seed = params.seed.wrapping_mul(31).wrapping_add(i as u64);
        let wealth_levels: Vec<Rational> =
            crate::oracle::maximal_distribution(&tree, |l: &Ledger| l.last().wealth.clone())?
                .support()
                .cloned()
                .collect();
        let rules = sample_rules(rule_seed, params.rules, t, Series::Gross, &wealth_levels);

        for (name, cert) in corpus_certificates(&tree, &report) {
            let seq = verify_certificate(&tree, &cert, &VerifyOptions::default())?;
            let mut checked = 0;
            let stopped = verify_stopped(&tree, &as_stopped(&cert, "sampled"), &rules, &[], &mut checked)?;
            let p =
                json!({ "strategy": spec, "T": t, "certificate": name, "rules": rules.len(), "rule_seed": rule_seed });
            // a stopped value never exceeds the running maximum, so a
            // sequential pass must carry over to every bounded rule
            out.push(
                CheckReport::new("sequential-implies-stopped", p, !seq.holds || stopped.holds)
                    .with_witness(&stopped)
                    .with_detail(format!("sequential holds: {}", seq.holds)),
            );
        }

        if let Ok(gross) = certify_gross_sequential(&report) {
            let weak = understated(&gross)?;
            let v = verify_certificate(&tree, &weak, &VerifyOptions::default())?;
            let p = json!({
                "strategy": spec, "T": t, "a": rational::to_fraction_string(&weak.a),
                "c": rational::to_fraction_string(&weak.c),
            });
            let witnessed = v.witness.as_ref().is_some_and(|w| w.probability > w.bound);
            out.push(CheckReport::new("understated-certificate-falsified", p, !v.holds && witnessed).with_witness(&v));
        }

        out.extend(e_value_law(&tree, spec, t, &rules)?);
        Ok(out)
    })
}

/// `E (E_tau - b) / a <= 1` for the stopped certificates, with equality for
/// the gross `(1 + E L_tau, 0)` and net `(1 - N_min, N_min)` ones.
fn e_value_law(
    tree: &GameTree<'_>,
    spec: &str,
    t: usize,
    rules: &[StoppingRule],
) -> Result<Vec<CheckReport>, VerifyError> {
    let report = attest(tree, None)?;
    let mut all_rules = vec![StoppingRule::fixed(t)];
    all_rules.extend(rules.iter().take(8).cloned());
    let dists = |s: Series| stopped_distributions(tree, tree.process(s).expect("tracked"), &all_rules);
    let (w, l, n) = (dists(Series::Gross)?, dists(Series::Liabilities)?, dists(Series::Net)?);
    let sub = if tree.tracks(Series::SubNet) { Some(dists(Series::SubNet)?) } else { None };
    let mut out = Vec::new();
    for (k, rule) in all_rules.iter().enumerate() {
        let mut cases: Vec<(&str, EvidenceCertificate, Rational, bool)> = Vec::new();
        let stopped_report = report.clone().with_stopped_liabilities(l[k].mean());
        let gross = certify_gross_stopped(rule.id.clone(), &stopped_report)?;
        cases.push(("gross-(1+L,0)", gross, w[k].mean(), true));
        if let Ok(c) = certify_net(Subject::NetWealth, CertificateKind::StoppedAt(rule.id.clone()), &report) {
            cases.push(("net-(1-Nmin,Nmin)", c, n[k].mean(), true));
        }
        if let Some(sub) = &sub {
            if let Ok(c) = certify_net(Subject::SubNetWealth, CertificateKind::StoppedAt(rule.id.clone()), &report) {
                cases.push(("subnet-(1-G,G)", c, sub[k].mean(), false));
            }
        }
        for (name, cert, mean, exact) in cases {
            let e = (&mean - &cert.b) / &cert.a;
            let passed = if exact { e.is_one() } else { e <= Rational::one() };
            let p = json!({ "strategy": spec, "T": t, "rule": rule.id, "certificate": name });
            out.push(
                CheckReport::new("stopped-e-value-law", p, passed)
                    .with_detail(format!("E[(E_tau - b)/a] = {}", rational::to_fraction_string(&e))),
            );
        }
    }
    Ok(out)
}

fn averaging_suite(params: &VerifyParams) -> Result<Vec<CheckReport>, VerifyError> {
    let mut out = Vec::new();
    for spec in save_corpus(params.seed, params.save_configs, params.horizon.max(2)) {
        let built = parse_strategy(&spec)?;
        let save = built.save.clone().expect("bet-and-save spec");
        let t = save.max_duration();
        let tree = tree_for(&built, t)?;
        let mut identity = true;
        let mut detail = String::new();
        tree.for_each_path(|l, mask, _| {
            if let Err(e) = period_e_values(l, &save) {
                if identity {
                    detail = format!("path mask {mask}: {e}");
                }
                identity = false;
            }
        })?;
        let total = save.total_liabilities().clone();
        let mean = expectation(&tree, |l| (&l.last().wealth - Rational::one()) / &total)?;
        let p = json!({ "strategy": spec, "T": t });
        out.push(CheckReport::new("bet-and-save-identity", p.clone(), identity).with_detail(detail));
        out.push(
            CheckReport::new("bet-and-save-unit-mean", p, mean.is_one())
                .with_detail(format!("E = {}", rational::to_fraction_string(&mean))),
        );
    }
    Ok(out)
}

fn leverage_suite(params: &VerifyParams) -> Result<Vec<CheckReport>, VerifyError> {
    let mut out = Vec::new();
    let flipped = (params.instances / 4).max(1);
    let instances = leverage::random_instances(params.seed, params.instances, 6, false)
        .into_iter()
        .map(|x| (x, false))
        .chain(leverage::random_instances(params.seed ^ 1, flipped, 6, true).into_iter().map(|x| (x, true)));
    let (mut invariant, mut sound, mut sharpe_ok, mut count) = (0, 0, 0, 0);
    let mut first_failure = None;
    for (idx, ((bet, beta), below)) in instances.enumerate() {
        count += 1;
        let base = leverage::evidence_functional(&bet);
        let lev = leverage::evidence_functional(&leverage::leverage_map(&bet, &beta)?);
        let inv = base.value() == lev.value();
        let snd = match (&base.optimum.a, &base.optimum.b) {
            (Some(a), Some(b)) => leverage::is_standardized(&bet, a, b),
            _ => false,
        };
        let shp = below
            || leverage::sharpe(&bet)?.squared == leverage::sharpe(&leverage::leverage_map(&bet, &beta)?)?.squared;
        invariant += usize::from(inv);
        sound += usize::from(snd);
        sharpe_ok += usize::from(shp);
        if !(inv && snd && shp) && first_failure.is_none() {
            first_failure = Some(json!({ "instance": idx, "beta": rational::to_fraction_string(&beta) }));
        }
    }
    let p = json!({ "instances": count, "seed": params.seed });
    let mut rep =
        CheckReport::new("leverage-invariance", p, invariant == count && sound == count && sharpe_ok == count)
            .with_seed(params.seed)
            .with_detail(format!(
        "invariant {invariant}/{count}, standardized argmax {sound}/{count}, squared Sharpe {sharpe_ok}/{count}"
    ));
    if let Some(w) = first_failure {
        rep = rep.with_witness(&w);
    }
    out.push(rep);
    Ok(out)
}

fn mispricing_suite(params: &VerifyParams) -> Result<Vec<CheckReport>, VerifyError> {
    let mut out = Vec::new();
    let t = params.horizon.min(8);
    let b = ratio(1, 10);
    let bonus = rational::to_fraction_string(&b);
    let compound = LedgerOptions { eta: None, compound: true };

    for beta in ["0", "1"] {
        let spec = format!("arbitrage:b={bonus},beta={beta}");
        let built = parse_strategy(&spec)?;
        let tree = tree_for(&built, t)?.with_options(compound.clone());
        let mut increasing = true;
        tree.for_each_path(|l, _, _| {
            increasing &= l.rows().windows(2).all(|w| w[1].net > w[0].net);
        })?;
        let p = json!({ "strategy": spec, "T": t });
        out.push(CheckReport::new("arbitrage-net-strictly-increasing", p.clone(), increasing));
        let adj = martingale_check(&tree, tree.process(Series::AdjustedNet)?)?;
        out.push(
            CheckReport::new("adjusted-net-martingale", p.clone(), adj.verdict == MartingaleVerdict::Martingale)
                .with_witness(&adj),
        );
        let doob = doob_check(&tree, Decomposition::adjusted())?;
        out.push(CheckReport::new("adjusted-doob", p, doob.passed()).with_witness(&doob));
    }

    let specs = [
        format!("table1:b={bonus}"),
        format!("doubling:b={bonus}"),
        format!("random:seed=11,b={bonus}"),
        format!("random:seed=12,repay=true,b={bonus}"),
        format!("arbitrage:b={bonus},beta=1"),
    ];
    for spec in specs {
        let built = parse_strategy(&spec)?;
        let tree = tree_for(&built, t)?.with_options(compound.clone());
        let report = attest(&tree, None)?;
        let cert = certify_gross_sequential(&report)?;
        let verdict = verify_certificate(&tree, &cert, &VerifyOptions::default())?;
        let p = json!({
            "strategy": spec, "T": t, "a": rational::to_fraction_string(&cert.a),
            "c": rational::to_fraction_string(&cert.c),
        });
        out.push(CheckReport::new("mispriced-(1+B,0,C)", p.clone(), verdict.holds).with_witness(&verdict));
        let doob = doob_check(&tree, Decomposition::adjusted())?;
        out.push(CheckReport::new("adjusted-doob", p, doob.passed()).with_witness(&doob));
    }
    Ok(out)
}

/// The three decompositions: a supermartingale with `b = xi = 0`, borrowed
/// wealth with `xi = beta^+`, and mispriced wealth with `xi = (1 + b) beta^+`.
pub fn robbins_siegmund_instances() -> Vec<(&'static str, &'static str, usize)> {
    vec![("ville", "doubling", 6), ("wealth", "table1", 6), ("wealth", "table1:b=1/10", 3)]
}

fn robbins_siegmund_suite() -> Result<Vec<CheckReport>, VerifyError> {
    let grid: Vec<Rational> = (1..=16).map(|n| ratio(n, 2)).collect();
    let mut out = Vec::new();
    for (kind, spec, t) in robbins_siegmund_instances() {
        let built = parse_strategy(spec)?;
        let tree = tree_for(&built, t)?;
        let z = match kind {
            "ville" => AlmostSupermartingale::ville(Series::Gross),
            _ => AlmostSupermartingale::wealth(),
        };
        let r = robbins_siegmund_check(&tree, &z, &grid)?;
        let p = json!({ "decomposition": kind, "strategy": spec, "T": t });
        out.push(CheckReport::new("robbins-siegmund", p, r.passed()).with_witness(&r).with_detail(format!(
            "decomposition {}, inequality {}, scale {}, slack {}",
            r.decomposition,
            r.inequality,
            rational::to_fraction_string(&r.scale),
            rational::to_fraction_string(&r.slack)
        )));
    }
    Ok(out)
}

/// Fair-game schedule helper used by callers that build trees by hand.
pub fn fair_tree<'a>(strategy: &'a dyn crate::game::Strategy, horizon: usize) -> Result<GameTree<'a>, OracleError> {
    Ok(GameTree::new(strategy, PayoffSchedule::fair(), PathEnsemble::fair(horizon)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyParams {
        VerifyParams { horizon: 4, corpus: 8, rules: 8, instances: 20, save_configs: 4, ..VerifyParams::default() }
    }

    #[test]
    fn suites_parse() {
        assert_eq!(parse_suites("all").unwrap().len(), 8);
        assert_eq!(parse_suites("doob,leverage").unwrap(), vec![Suite::Doob, Suite::Leverage]);
        assert!(parse_suites("nope").is_err());
    }

    #[test]
    fn exact_suites_pass_on_a_small_corpus() {
        for suite in [
            Suite::Table1,
            Suite::Doob,
            Suite::Certificates,
            Suite::Averaging,
            Suite::Leverage,
            Suite::Mispricing,
            Suite::RobbinsSiegmund,
        ] {
            for r in run_suite(suite, &small()).unwrap() {
                assert!(r.passed, "{suite}: {}", r.to_jsonl());
            }
        }
    }

    #[test]
    fn stopping_suite_carries_sequential_passes() {
        for r in run_suite(Suite::Stopping, &small()).unwrap() {
            if r.check != "understated-certificate-falsified" {
                assert!(r.passed, "{}", r.to_jsonl());
            }
        }
    }

    #[test]
    fn corpora_are_reproducible() {
        assert_eq!(strategy_corpus(3, 30), strategy_corpus(3, 30));
        assert!(strategy_corpus(3, 30).iter().all(|s| parse_strategy(s).is_ok()));
        for s in save_corpus(5, 20, 10) {
            let built = parse_strategy(&s).unwrap();
            assert!(built.save.unwrap().max_duration() <= 10, "{s}");
        }
    }
}
