use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{CertificateVerdict, Distribution, GameTree, Node, OracleError, StoppingRule, Visitor, Walk, Witness};
use crate::evidence::{AssumptionReport, Attestation, CertificateKind, EvidenceCertificate, StoppingBasis, Subject};
use crate::game::{Ledger, Path, Series};
use crate::rational::{self, Rational};

const MAX_WITNESS_PATHS: usize = 16;

/// `E_p f(ledger_T)` over complete paths.
pub fn expectation<F: Fn(&Ledger) -> Rational>(tree: &GameTree<'_>, f: F) -> Result<Rational, OracleError> {
    let mut acc = Rational::zero();
    tree.for_each_path(|l, _, w| acc += w * f(l))?;
    Ok(acc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MartingaleVerdict {
    Martingale,
    Supermartingale,
    Submartingale,
    None,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MartingaleReport {
    pub verdict: MartingaleVerdict,
    /// `max |E(Z_t | F_{t-1}) - Z_{t-1}|` over internal nodes.
    #[serde(with = "rational::serde_fraction")]
    pub max_abs_drift: Rational,
    pub nodes_checked: usize,
    /// Prefix with the largest drift, if any drift is nonzero.
    pub worst_prefix: Option<String>,
}

#[derive(Default)]
struct DriftStats {
    up: bool,
    down: bool,
    max_abs: Rational,
    worst: Option<String>,
    nodes: usize,
}

impl DriftStats {
    fn record(&mut self, drift: Rational, node: &Node<'_>) {
        self.nodes += 1;
        if drift.is_positive() {
            self.up = true;
        } else if drift.is_negative() {
            self.down = true;
        }
        let abs = drift.abs();
        if abs > self.max_abs {
            self.max_abs = abs;
            self.worst = Some(node.path().to_string());
        }
    }

    fn report(self) -> MartingaleReport {
        let verdict = match (self.up, self.down) {
            (false, false) => MartingaleVerdict::Martingale,
            (false, true) => MartingaleVerdict::Supermartingale,
            (true, false) => MartingaleVerdict::Submartingale,
            (true, true) => MartingaleVerdict::None,
        };
        MartingaleReport { verdict, max_abs_drift: self.max_abs, nodes_checked: self.nodes, worst_prefix: self.worst }
    }
}

struct Frame {
    value: Rational,
    conditional: Rational,
    children: usize,
}

struct MartingaleVisitor<'f, F> {
    process: &'f F,
    stack: Vec<Frame>,
    stats: DriftStats,
}

impl<F: Fn(&Ledger) -> Rational> Visitor for MartingaleVisitor<'_, F> {
    fn enter(&mut self, node: &Node<'_>) -> Walk {
        let value = (self.process)(node.ledger);
        self.stack.push(Frame { value, conditional: Rational::zero(), children: 0 });
        Walk::Descend
    }

    fn exit(&mut self, node: &Node<'_>) {
        let frame = self.stack.pop().expect("balanced walk");
        if frame.children > 0 {
            self.stats.record(&frame.conditional - &frame.value, node);
        }
        if let (Some(parent), Some(q)) = (self.stack.last_mut(), node.step_probability) {
            parent.conditional += q * &frame.value;
            parent.children += 1;
        }
    }
}

/// Compares `E(Z_t | F_{t-1})` with `Z_{t-1}` at every internal node.
pub fn martingale_check<F: Fn(&Ledger) -> Rational>(
    tree: &GameTree<'_>,
    process: F,
) -> Result<MartingaleReport, OracleError> {
    let mut v = MartingaleVisitor { process: &process, stack: Vec::new(), stats: DriftStats::default() };
    tree.walk(&mut v)?;
    Ok(v.stats.report())
}

/// A claimed decomposition `whole = martingale + predictable`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decomposition {
    pub whole: Series,
    pub martingale: Series,
    pub predictable: Series,
}

impl Decomposition {
    /// `W = N + L`.
    pub fn simple() -> Self {
        Decomposition { whole: Series::Gross, martingale: Series::Net, predictable: Series::Liabilities }
    }

    /// `W' = N' + L'` in the numeraire of the risk-free bonus.
    pub fn adjusted() -> Self {
        Decomposition {
            whole: Series::AdjustedGross,
            martingale: Series::AdjustedNet,
            predictable: Series::AdjustedLiabilities,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DoobReport {
    pub decomposition: Decomposition,
    /// `whole_t = martingale_t + predictable_t` at every node.
    pub identity: bool,
    /// The predictable part is zero at `t = 0`.
    pub starts_at_zero: bool,
    /// Siblings agree on the predictable part.
    pub predictable: bool,
    pub martingale: MartingaleReport,
    /// First prefix violating the identity or predictability.
    pub witness: Option<String>,
}

impl DoobReport {
    pub fn passed(&self) -> bool {
        self.identity
            && self.starts_at_zero
            && self.predictable
            && self.martingale.verdict == MartingaleVerdict::Martingale
    }
}

struct DoobVisitor {
    d: Decomposition,
    stack: Vec<(Frame, Option<Rational>)>,
    stats: DriftStats,
    identity: bool,
    starts_at_zero: bool,
    predictable: bool,
    witness: Option<String>,
}

impl DoobVisitor {
    fn flag(&mut self, node: &Node<'_>) {
        if self.witness.is_none() {
            self.witness = Some(node.path().to_string());
        }
    }
}

impl Visitor for DoobVisitor {
    fn enter(&mut self, node: &Node<'_>) -> Walk {
        let get = |s| node.ledger.current(s).expect("series tracked by the tree");
        let (whole, mart, pred) = (get(self.d.whole), get(self.d.martingale), get(self.d.predictable));
        if whole != &mart + &pred {
            self.identity = false;
            self.flag(node);
        }
        if node.depth() == 0 && !pred.is_zero() {
            self.starts_at_zero = false;
            self.flag(node);
        }
        let mut sibling_mismatch = false;
        if let Some((_, seen)) = self.stack.last_mut() {
            match seen {
                Some(p) => sibling_mismatch = *p != pred,
                None => *seen = Some(pred),
            }
        }
        if sibling_mismatch {
            self.predictable = false;
            self.flag(node);
        }
        self.stack.push((Frame { value: mart, conditional: Rational::zero(), children: 0 }, None));
        Walk::Descend
    }

    fn exit(&mut self, node: &Node<'_>) {
        let (frame, _) = self.stack.pop().expect("balanced walk");
        if frame.children > 0 {
            self.stats.record(&frame.conditional - &frame.value, node);
        }
        if let (Some((parent, _)), Some(q)) = (self.stack.last_mut(), node.step_probability) {
            parent.conditional += q * &frame.value;
            parent.children += 1;
        }
    }
}

/// Checks a Doob decomposition exactly: the identity and `predictable_0 = 0`
/// at every node, predictability across siblings, and the martingale property.
pub fn doob_check(tree: &GameTree<'_>, decomposition: Decomposition) -> Result<DoobReport, OracleError> {
    for s in [decomposition.whole, decomposition.martingale, decomposition.predictable] {
        tree.require(s)?;
    }
    let mut v = DoobVisitor {
        d: decomposition,
        stack: Vec::new(),
        stats: DriftStats::default(),
        identity: true,
        starts_at_zero: true,
        predictable: true,
        witness: None,
    };
    tree.walk(&mut v)?;
    Ok(DoobReport {
        decomposition,
        identity: v.identity,
        starts_at_zero: v.starts_at_zero,
        predictable: v.predictable,
        martingale: v.stats.report(),
        witness: v.witness,
    })
}

pub type ProcessRef<'a> = &'a dyn Fn(&Ledger) -> Rational;

struct MaxVisitor<'a> {
    processes: &'a [ProcessRef<'a>],
    stack: Vec<Vec<Rational>>,
    dists: Vec<Distribution>,
}

impl Visitor for MaxVisitor<'_> {
    fn enter(&mut self, node: &Node<'_>) -> Walk {
        let maxima: Vec<Rational> = self
            .processes
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let v = p(node.ledger);
                match self.stack.last() {
                    Some(prev) if prev[i] > v => prev[i].clone(),
                    _ => v,
                }
            })
            .collect();
        if node.is_leaf {
            for (d, m) in self.dists.iter_mut().zip(&maxima) {
                d.add(m.clone(), node.weight);
            }
        }
        self.stack.push(maxima);
        Walk::Descend
    }

    fn exit(&mut self, _node: &Node<'_>) {
        self.stack.pop();
    }
}

/// Exact distributions of `max_{t <= T} Z_t` for several processes in one pass.
pub fn maximal_distributions(
    tree: &GameTree<'_>,
    processes: &[ProcessRef<'_>],
) -> Result<Vec<Distribution>, OracleError> {
    let mut v = MaxVisitor { processes, stack: Vec::new(), dists: vec![Distribution::default(); processes.len()] };
    tree.walk(&mut v)?;
    Ok(v.dists)
}

pub fn maximal_distribution<F: Fn(&Ledger) -> Rational>(
    tree: &GameTree<'_>,
    process: F,
) -> Result<Distribution, OracleError> {
    let p: ProcessRef<'_> = &process;
    Ok(maximal_distributions(tree, &[p])?.pop().expect("one process"))
}

/// `Pr_p(max_{t <= T} Z_t >= x)`.
pub fn maximal_probability<F: Fn(&Ledger) -> Rational>(
    tree: &GameTree<'_>,
    process: F,
    x: &Rational,
) -> Result<Rational, OracleError> {
    Ok(maximal_distribution(tree, process)?.tail(x))
}

struct StoppedVisitor<'a, F> {
    process: &'a F,
    rules: &'a [StoppingRule],
    active: Vec<Vec<usize>>,
    dists: Vec<Distribution>,
}

impl<F: Fn(&Ledger) -> Rational> Visitor for StoppedVisitor<'_, F> {
    fn enter(&mut self, node: &Node<'_>) -> Walk {
        let parent: Vec<usize> = match self.active.last() {
            Some(a) => a.clone(),
            None => (0..self.rules.len()).collect(),
        };
        let mut value = None;
        let mut still = Vec::with_capacity(parent.len());
        for i in parent {
            if node.is_leaf || self.rules[i].stops(node.ledger) {
                let v = value.get_or_insert_with(|| (self.process)(node.ledger));
                self.dists[i].add(v.clone(), node.weight);
            } else {
                still.push(i);
            }
        }
        let walk = if still.is_empty() { Walk::Skip } else { Walk::Descend };
        self.active.push(still);
        walk
    }

    fn exit(&mut self, _node: &Node<'_>) {
        self.active.pop();
    }
}

/// Exact distributions of `Z_tau` for several bounded stopping rules in one
/// pass. Rules whose bound exceeds the horizon are truncated at the horizon.
pub fn stopped_distributions<F: Fn(&Ledger) -> Rational>(
    tree: &GameTree<'_>,
    process: F,
    rules: &[StoppingRule],
) -> Result<Vec<Distribution>, OracleError> {
    let mut v = StoppedVisitor {
        process: &process,
        rules,
        active: Vec::new(),
        dists: vec![Distribution::default(); rules.len()],
    };
    tree.walk(&mut v)?;
    Ok(v.dists)
}

/// Prefixes at which the event `Z >= x` is realized: the first crossing for
/// the running maximum, or the stopping prefix for a rule.
fn event_prefixes<F: Fn(&Ledger) -> Rational>(
    tree: &GameTree<'_>,
    process: &F,
    rule: Option<&StoppingRule>,
    x: &Rational,
) -> Result<Vec<String>, OracleError> {
    struct V<'a, F> {
        process: &'a F,
        rule: Option<&'a StoppingRule>,
        x: &'a Rational,
        out: Vec<String>,
    }
    impl<F: Fn(&Ledger) -> Rational> Visitor for V<'_, F> {
        fn enter(&mut self, node: &Node<'_>) -> Walk {
            if self.out.len() >= MAX_WITNESS_PATHS {
                return Walk::Skip;
            }
            let stop = match self.rule {
                Some(r) => node.is_leaf || r.stops(node.ledger),
                None => false,
            };
            let hit = (self.rule.is_none() || stop) && (self.process)(node.ledger) >= *self.x;
            if hit {
                self.out.push(Path::from_mask(node.mask, node.depth()).to_string());
            }
            if hit || stop {
                Walk::Skip
            } else {
                Walk::Descend
            }
        }
    }
    let mut v = V { process, rule, x, out: Vec::new() };
    tree.walk(&mut v)?;
    Ok(v.out)
}

/// Settings for [`verify_certificate`].
#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Extra evaluation points; points `<= b` are ignored.
    pub grid: Vec<Rational>,
    /// The rule a stopped certificate refers to.
    pub rule: Option<StoppingRule>,
    /// Size of the sampled family checked in addition to `rule`.
    pub sampled: usize,
    pub seed: u64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { grid: Vec::new(), rule: None, sampled: 64, seed: 0 }
    }
}

impl VerifyOptions {
    pub fn with_grid(mut self, grid: Vec<Rational>) -> Self {
        self.grid = grid;
        self
    }

    pub fn with_rule(mut self, rule: StoppingRule) -> Self {
        self.rule = Some(rule);
        self
    }

    pub fn with_sampled(mut self, count: usize, seed: u64) -> Self {
        self.sampled = count;
        self.seed = seed;
        self
    }
}

/// First point of `dist` (jump points and grid, restricted to `x > b`) at
/// which the tail exceeds the certificate's bound.
fn first_violation(
    cert: &EvidenceCertificate,
    dist: &Distribution,
    grid: &[Rational],
    checked: &mut usize,
) -> Option<(Rational, Rational, Rational)> {
    let curve = dist.tail_curve();
    let at_grid = grid.iter().map(|x| {
        let i = curve.partition_point(|(v, _)| v < x);
        let prob = curve.get(i).map_or_else(Rational::zero, |(_, p)| p.clone());
        (x.clone(), prob)
    });
    for (x, prob) in curve.iter().cloned().chain(at_grid).filter(|(x, _)| *x > cert.b) {
        *checked += 1;
        let bound = cert.tail_bound(&x).expect("x > b");
        if prob > bound {
            return Some((x, prob, bound));
        }
    }
    None
}

/// Checks a certificate against the exact law of its subject.
///
/// Sequential certificates are compared with the distribution of the running
/// maximum; stopped ones with the stopped value under the supplied rule and a
/// sampled family of bounded rules. Every distinct achieved value above `b`
/// is checked, so a step of the tail function can never fall between grid
/// points.
pub fn verify_certificate(
    tree: &GameTree<'_>,
    cert: &EvidenceCertificate,
    options: &VerifyOptions,
) -> Result<CertificateVerdict, OracleError> {
    let series = cert.subject.series();
    let process = tree.process(series)?;
    let mut checked = 0;
    match &cert.kind {
        CertificateKind::Sequential => {
            let dist = maximal_distribution(tree, &process)?;
            let violation = first_violation(cert, &dist, &options.grid, &mut checked);
            let witness = match violation {
                Some((x, probability, bound)) => {
                    let paths = event_prefixes(tree, &process, None, &x)?;
                    Some(Witness { x, probability, bound, paths, rule: None })
                }
                None => None,
            };
            Ok(CertificateVerdict { holds: witness.is_none(), points_checked: checked, rules_checked: 0, witness })
        }
        CertificateKind::StoppedAt(id) => {
            let mut rules = Vec::new();
            match &options.rule {
                Some(r) => rules.push(r.clone()),
                None => rules.push(StoppingRule::fixed(tree.horizon())),
            }
            if rules[0].id != *id && options.rule.is_some() {
                rules[0].id = id.clone();
            }
            let dist_all = maximal_distribution(tree, &process)?;
            let levels: Vec<Rational> = dist_all.support().cloned().collect();
            rules.extend(super::sample_rules(options.seed, options.sampled, tree.horizon(), series, &levels));
            verify_stopped(tree, cert, &rules, &options.grid, &mut checked)
        }
    }
}

/// Checks `Pr(E_tau >= x) <= bound(x)` for every rule in `rules`, whatever
/// the certificate's kind.
pub fn verify_stopped(
    tree: &GameTree<'_>,
    cert: &EvidenceCertificate,
    rules: &[StoppingRule],
    grid: &[Rational],
    checked: &mut usize,
) -> Result<CertificateVerdict, OracleError> {
    let process = tree.process(cert.subject.series())?;
    let dists = stopped_distributions(tree, &process, rules)?;
    for (rule, dist) in rules.iter().zip(&dists) {
        if let Some((x, probability, bound)) = first_violation(cert, dist, grid, checked) {
            let paths = event_prefixes(tree, &process, Some(rule), &x)?;
            let witness = Witness { x, probability, bound, paths, rule: Some(rule.id.clone()) };
            return Ok(CertificateVerdict {
                holds: false,
                points_checked: *checked,
                rules_checked: rules.len(),
                witness: Some(witness),
            });
        }
    }
    Ok(CertificateVerdict { holds: true, points_checked: *checked, rules_checked: rules.len(), witness: None })
}

/// Exact constants feeding the gross-wealth certificates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiabilityConstants {
    /// `E L_tau`.
    #[serde(with = "rational::serde_fraction")]
    pub stopped: Rational,
    /// `max_t E L_t`.
    #[serde(with = "rational::serde_fraction")]
    pub sup: Rational,
    /// `max_t E sum_{i <= t} (1 + b_i) beta_i^+`.
    #[serde(with = "rational::serde_fraction")]
    pub positive_bound: Rational,
    /// `sum_t b_t` up to the horizon.
    #[serde(with = "rational::serde_fraction")]
    pub bonus_sum: Rational,
}

/// Per-depth expectations and pathwise minima gathered in one pass.
struct Survey {
    liabilities: Vec<Rational>,
    positive: Vec<Rational>,
    min_net: Rational,
    min_sub_net: Option<Rational>,
    min_adjusted_net: Option<Rational>,
    all_positive: bool,
}

impl Visitor for Survey {
    fn enter(&mut self, node: &Node<'_>) -> Walk {
        let row = node.ledger.last();
        let t = node.depth();
        self.liabilities[t] += node.weight * &row.liabilities;
        self.positive[t] += node.weight * &row.bonus_positive_borrowings;
        if row.net < self.min_net {
            self.min_net = row.net.clone();
        }
        let lower = |slot: &mut Option<Rational>, v: Option<Rational>| {
            if let Some(v) = v {
                if slot.as_ref().is_none_or(|m| v < *m) {
                    *slot = Some(v);
                }
            }
        };
        lower(&mut self.min_sub_net, node.ledger.current(Series::SubNet));
        lower(&mut self.min_adjusted_net, node.ledger.current(Series::AdjustedNet));
        if node.ledger.decisions().last().is_some_and(|d| d.beta.is_negative()) {
            self.all_positive = false;
        }
        Walk::Descend
    }
}

fn survey(tree: &GameTree<'_>) -> Result<Survey, OracleError> {
    let t = tree.horizon();
    let mut s = Survey {
        liabilities: vec![Rational::zero(); t + 1],
        positive: vec![Rational::zero(); t + 1],
        min_net: Rational::one(),
        min_sub_net: None,
        min_adjusted_net: None,
        all_positive: true,
    };
    tree.walk(&mut s)?;
    Ok(s)
}

fn max_of(values: &[Rational]) -> Rational {
    values.iter().cloned().fold(Rational::zero(), |a, b| a.max(b))
}

pub fn expected_liability_constants(
    tree: &GameTree<'_>,
    rule: &StoppingRule,
) -> Result<LiabilityConstants, OracleError> {
    let s = survey(tree)?;
    let stopped = stopped_distributions(tree, |l: &Ledger| l.last().liabilities.clone(), std::slice::from_ref(rule))?
        .pop()
        .expect("one rule")
        .mean();
    Ok(LiabilityConstants {
        stopped,
        sup: max_of(&s.liabilities),
        positive_bound: max_of(&s.positive),
        bonus_sum: bonus_sum(tree)?,
    })
}

fn bonus_sum(tree: &GameTree<'_>) -> Result<Rational, OracleError> {
    tree.schedule().total(tree.horizon()).map_err(|source| OracleError::Game { path: "schedule".into(), source })
}

/// A pathwise minimum as a certificate floor: floors must lie strictly below
/// one, and a process that never drops below its start admits floor zero.
fn floor_below_one(min: Rational) -> Rational {
    if min < Rational::one() {
        min
    } else {
        Rational::zero()
    }
}

/// Every hypothesis the certificate constructors read, established by exact
/// enumeration. `rule` supplies `E L_tau`.
pub fn attest(tree: &GameTree<'_>, rule: Option<&StoppingRule>) -> Result<AssumptionReport, OracleError> {
    let s = survey(tree)?;
    let mut report = AssumptionReport::new(Attestation::Oracle)
        .with_optional_stopping(StoppingBasis::BoundedStoppingTime)
        .with_sup_liabilities(max_of(&s.liabilities))
        .with_net_floor(floor_below_one(s.min_net.clone()))
        .with_positive_borrowings_bound(max_of(&s.positive))
        .with_bonus_sum(bonus_sum(tree)?);
    if s.all_positive {
        report = report.with_positive_borrowings();
    }
    if let Some(m) = s.min_sub_net {
        report = report.with_sub_net_floor(floor_below_one(m));
    }
    if let Some(m) = s.min_adjusted_net {
        report = report.with_adjusted_net_floor(floor_below_one(m));
    }
    if let Some(rule) = rule {
        report = report.with_stopped_liabilities(expected_liability_constants(tree, rule)?.stopped);
    }
    Ok(report)
}

/// A process with a claimed almost-supermartingale decomposition. The
/// predictable parts are read from the ledger at round `t`, whose last
/// decision and bonus are the ones fixed at `t - 1`.
pub struct AlmostSupermartingale<'f> {
    pub name: String,
    pub z: Box<dyn Fn(&Ledger) -> Rational + 'f>,
    pub b: Box<dyn Fn(&Ledger) -> Rational + 'f>,
    pub xi: Box<dyn Fn(&Ledger) -> Rational + 'f>,
    pub zeta: Box<dyn Fn(&Ledger) -> Rational + 'f>,
}

fn last_bonus(l: &Ledger) -> Rational {
    l.bonuses().last().cloned().unwrap_or_else(Rational::zero)
}

fn last_beta(l: &Ledger) -> Rational {
    l.decisions().last().map(|d| d.beta.clone()).unwrap_or_else(Rational::zero)
}

impl AlmostSupermartingale<'static> {
    /// Gross wealth with `b_t` the bonus, `xi_t = (1 + b_t) beta_t^+` and
    /// `zeta_t = (1 + b_t) beta_t^-`; in a fair game this is `(0, beta^+, beta^-)`.
    pub fn wealth() -> Self {
        AlmostSupermartingale {
            name: "gross-wealth".into(),
            z: Box::new(|l| l.last().wealth.clone()),
            b: Box::new(last_bonus),
            xi: Box::new(|l| (Rational::one() + last_bonus(l)) * rational::positive_part(&last_beta(l))),
            zeta: Box::new(|l| (Rational::one() + last_bonus(l)) * rational::negative_part(&last_beta(l))),
        }
    }

    /// A claimed martingale or supermartingale with `b = xi = zeta = 0`.
    pub fn ville(series: Series) -> Self {
        AlmostSupermartingale {
            name: format!("ville-{}", series.name()),
            z: Box::new(move |l| l.current(series).expect("series tracked by the tree")),
            b: Box::new(|_| Rational::zero()),
            xi: Box::new(|_| Rational::zero()),
            zeta: Box::new(|_| Rational::zero()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RobbinsSiegmundReport {
    pub name: String,
    /// `Z >= 0` at every node.
    pub nonnegative: bool,
    /// `b, xi, zeta >= 0` and equal across siblings.
    pub predictable: bool,
    /// `E(Z_t | F_{t-1}) = Z_{t-1}(1 + b_t) + xi_t - zeta_t` at every internal node.
    pub decomposition: bool,
    pub decomposition_witness: Option<String>,
    /// The maximal inequality at every jump point and grid point `x > 0`.
    pub inequality: bool,
    pub points_checked: usize,
    pub witness: Option<Witness>,
    /// `E Z_0 + sum_t E xi_t`.
    #[serde(with = "rational::serde_fraction")]
    pub scale: Rational,
    /// `sum_t E b_t`.
    #[serde(with = "rational::serde_fraction")]
    pub slack: Rational,
}

impl RobbinsSiegmundReport {
    pub fn passed(&self) -> bool {
        self.nonnegative && self.predictable && self.decomposition && self.inequality
    }
}

struct RsFrame {
    z: Rational,
    conditional: Rational,
    children: usize,
    /// `(b, xi, zeta)` of the first child.
    parts: Option<[Rational; 3]>,
}

struct RsVisitor<'a, 'f> {
    spec: &'a AlmostSupermartingale<'f>,
    stack: Vec<RsFrame>,
    maxima: Vec<Rational>,
    max_dist: Distribution,
    z0: Rational,
    e_xi: Rational,
    e_b: Rational,
    nonnegative: bool,
    predictable: bool,
    decomposition: bool,
    witness: Option<String>,
}

impl RsVisitor<'_, '_> {
    fn flag(&mut self, node: &Node<'_>) {
        if self.witness.is_none() {
            self.witness = Some(node.path().to_string());
        }
    }
}

impl Visitor for RsVisitor<'_, '_> {
    fn enter(&mut self, node: &Node<'_>) -> Walk {
        let z = (self.spec.z)(node.ledger);
        if z.is_negative() {
            self.nonnegative = false;
            self.flag(node);
        }
        if node.depth() == 0 {
            self.z0 = z.clone();
        } else {
            let parts = [(self.spec.b)(node.ledger), (self.spec.xi)(node.ledger), (self.spec.zeta)(node.ledger)];
            if parts.iter().any(Signed::is_negative) {
                self.predictable = false;
                self.flag(node);
            }
            self.e_b += node.weight * &parts[0];
            self.e_xi += node.weight * &parts[1];
            let parent = self.stack.last_mut().expect("non-root has a parent");
            match &parent.parts {
                Some(seen) if *seen != parts => {
                    self.predictable = false;
                    self.flag(node);
                }
                Some(_) => {}
                None => parent.parts = Some(parts),
            }
        }
        let running = match self.maxima.last() {
            Some(m) if *m > z => m.clone(),
            _ => z.clone(),
        };
        if node.is_leaf {
            self.max_dist.add(running.clone(), node.weight);
        }
        self.maxima.push(running);
        self.stack.push(RsFrame { z, conditional: Rational::zero(), children: 0, parts: None });
        Walk::Descend
    }

    fn exit(&mut self, node: &Node<'_>) {
        self.maxima.pop();
        let frame = self.stack.pop().expect("balanced walk");
        if let Some([b, xi, zeta]) = &frame.parts {
            let claimed = &frame.z * (Rational::one() + b) + xi - zeta;
            if frame.conditional != claimed {
                self.decomposition = false;
                self.flag(node);
            }
        }
        if let (Some(parent), Some(q)) = (self.stack.last_mut(), node.step_probability) {
            parent.conditional += q * &frame.z;
            parent.children += 1;
        }
    }
}

/// Verifies an almost-supermartingale decomposition exactly, then the
/// Robbins-Siegmund maximal inequality
/// `Pr(Z*_T >= x) <= (E Z_0 + sum E xi_t) / x + sum E b_t`.
pub fn robbins_siegmund_check(
    tree: &GameTree<'_>,
    spec: &AlmostSupermartingale<'_>,
    grid: &[Rational],
) -> Result<RobbinsSiegmundReport, OracleError> {
    let mut v = RsVisitor {
        spec,
        stack: Vec::new(),
        maxima: Vec::new(),
        max_dist: Distribution::default(),
        z0: Rational::zero(),
        e_xi: Rational::zero(),
        e_b: Rational::zero(),
        nonnegative: true,
        predictable: true,
        decomposition: true,
        witness: None,
    };
    tree.walk(&mut v)?;
    let scale = &v.z0 + &v.e_xi;
    let slack = v.e_b.clone();
    let mut checked = 0;
    let mut witness = None;
    for x in v.max_dist.support().chain(grid.iter()).filter(|x| x.is_positive()) {
        checked += 1;
        let bound = &scale / x + &slack;
        let prob = v.max_dist.tail(x);
        if prob > bound {
            let paths = event_prefixes(tree, &|l: &Ledger| (spec.z)(l), None, x)?;
            witness = Some(Witness { x: x.clone(), probability: prob, bound, paths, rule: None });
            break;
        }
    }
    Ok(RobbinsSiegmundReport {
        name: spec.name.clone(),
        nonnegative: v.nonnegative,
        predictable: v.predictable,
        decomposition: v.decomposition,
        decomposition_witness: v.witness,
        inequality: witness.is_none(),
        points_checked: checked,
        witness,
        scale,
        slack,
    })
}

/// Builds the gross, net and (when tracked) sub-net and adjusted-net
/// certificates whose hypotheses the oracle attests for this tree.
pub fn attested_certificates(tree: &GameTree<'_>, report: &AssumptionReport) -> Vec<EvidenceCertificate> {
    use crate::evidence::{certify_gross_sequential, certify_net};
    let mut out = Vec::new();
    if let Ok(c) = certify_gross_sequential(report) {
        out.push(c);
    }
    for subject in [Subject::NetWealth, Subject::SubNetWealth, Subject::AdjustedNetWealth] {
        if tree.tracks(subject.series()) {
            if let Ok(c) = certify_net(subject, CertificateKind::Sequential, report) {
                out.push(c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evidence::{certify_gross_stopped, certify_net};
    use crate::game::{LedgerOptions, PayoffSchedule};
    use crate::oracle::PathEnsemble;
    use crate::rational::{int, ratio};
    use crate::strategies::{arbitrage_strategy, constant_strategy, net_floor_guard};

    fn fair(t: usize) -> PathEnsemble {
        PathEnsemble::fair(t).unwrap()
    }

    #[test]
    fn table1_expectations() {
        let s = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), fair(2));
        assert_eq!(expectation(&tree, |l| l.last().wealth.clone()).unwrap(), int(3));
        assert_eq!(expectation(&tree, |l| l.last().net.clone()).unwrap(), int(1));
        let biased = tree.with_bias(ratio(3, 4)).unwrap();
        assert_eq!(expectation(&biased, |l| l.last().net.clone()).unwrap(), ratio(19, 8));
    }

    #[test]
    fn net_is_a_martingale_and_wealth_a_submartingale() {
        let s = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), fair(4));
        let n = martingale_check(&tree, |l: &Ledger| l.last().net.clone()).unwrap();
        assert_eq!(n.verdict, MartingaleVerdict::Martingale);
        assert!(n.max_abs_drift.is_zero());
        let w = martingale_check(&tree, |l: &Ledger| l.last().wealth.clone()).unwrap();
        assert_eq!(w.verdict, MartingaleVerdict::Submartingale);
        assert_eq!(w.max_abs_drift, int(1));
        let doob = doob_check(&tree, Decomposition::simple()).unwrap();
        assert!(doob.passed(), "{doob:?}");
    }

    #[test]
    fn repayment_makes_wealth_a_supermartingale() {
        let s = constant_strategy(ratio(1, 3), ratio(-1, 4)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), fair(3));
        let w = martingale_check(&tree, |l: &Ledger| l.last().wealth.clone()).unwrap();
        assert_eq!(w.verdict, MartingaleVerdict::Supermartingale);
    }

    #[test]
    fn doob_fails_for_a_wrong_decomposition() {
        let s = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), fair(2));
        let wrong = Decomposition { whole: Series::Gross, martingale: Series::Gross, predictable: Series::Liabilities };
        let r = doob_check(&tree, wrong).unwrap();
        assert!(!r.identity);
        assert!(!r.passed());
        assert!(r.witness.is_some());
    }

    #[test]
    fn adjusted_decomposition_needs_compound_tracking() {
        let s = constant_strategy(int(0), int(1)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::constant(ratio(1, 10)).unwrap(), fair(2));
        assert!(matches!(doob_check(&tree, Decomposition::adjusted()), Err(OracleError::MissingSeries(_))));
        let tree = tree.with_options(LedgerOptions { eta: None, compound: true });
        assert!(doob_check(&tree, Decomposition::adjusted()).unwrap().passed());
    }

    #[test]
    fn maximal_probability_examples() {
        let doubling = constant_strategy(int(1), int(0)).unwrap();
        for t in 2..=6 {
            let tree = GameTree::new(&doubling, PayoffSchedule::fair(), fair(t));
            let w = |l: &Ledger| l.last().wealth.clone();
            assert_eq!(maximal_probability(&tree, w, &int(4)).unwrap(), ratio(1, 4));
            assert_eq!(maximal_probability(&tree, w, &int(1)).unwrap(), int(1));
        }
        let table1 = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let tree = GameTree::new(&table1, PayoffSchedule::fair(), fair(2));
        let w = |l: &Ledger| l.last().wealth.clone();
        assert_eq!(maximal_probability(&tree, w, &int(6)).unwrap(), ratio(1, 4));
    }

    #[test]
    fn stopped_distribution_at_crossing() {
        let doubling = constant_strategy(int(1), int(0)).unwrap();
        let tree = GameTree::new(&doubling, PayoffSchedule::fair(), fair(4));
        let rules = [StoppingRule::up_crossing(Series::Gross, int(4), 4), StoppingRule::fixed(0)];
        let d = stopped_distributions(&tree, |l: &Ledger| l.last().wealth.clone(), &rules).unwrap();
        assert_eq!(d[0].tail(&int(4)), ratio(1, 4));
        assert_eq!(d[0].mean(), int(1));
        assert_eq!(d[1].tail(&int(1)), int(1));
        assert_eq!(d[0].total(), int(1));
    }

    #[test]
    fn liability_constants_for_table1() {
        let s = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), fair(2));
        let k = expected_liability_constants(&tree, &StoppingRule::fixed(2)).unwrap();
        assert_eq!(k.stopped, int(2));
        assert_eq!(k.sup, int(2));
        assert_eq!(k.positive_bound, int(2));
        assert_eq!(k.bonus_sum, int(0));
        let idle = constant_strategy(ratio(1, 2), int(0)).unwrap();
        let tree = GameTree::new(&idle, PayoffSchedule::fair(), fair(3));
        let k = expected_liability_constants(&tree, &StoppingRule::fixed(3)).unwrap();
        assert!(k.stopped.is_zero() && k.sup.is_zero() && k.positive_bound.is_zero());
    }

    #[test]
    fn certificates_verify_and_understated_ones_fail() {
        let s = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), fair(2));
        let report = attest(&tree, Some(&StoppingRule::fixed(2))).unwrap();
        assert_eq!(report.net_floor, Some(int(-1)));
        let opts = VerifyOptions::default();
        for cert in attested_certificates(&tree, &report) {
            assert!(verify_certificate(&tree, &cert, &opts).unwrap().holds, "{cert:?}");
        }
        let stopped = certify_gross_stopped("fixed-2", &report).unwrap();
        let opts = VerifyOptions::default().with_rule(StoppingRule::fixed(2)).with_sampled(0, 0);
        assert!(verify_certificate(&tree, &stopped, &opts).unwrap().holds);
        // W_2 = 6 with probability 1/4, so a = 1 breaks at x = 6 (1/4 > 1/6)
        let weak = EvidenceCertificate::unchecked(
            CertificateKind::Sequential,
            Subject::GrossWealth,
            int(1),
            int(0),
            int(0),
            report.clone(),
        )
        .unwrap();
        let v = verify_certificate(&tree, &weak, &VerifyOptions::default()).unwrap();
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert!(w.probability > w.bound);
        assert!(!w.paths.is_empty());
    }

    #[test]
    fn guard_certificate_holds() {
        let guarded = net_floor_guard(constant_strategy(int(1), int(2)).unwrap(), ratio(-1, 2)).unwrap();
        let tree = GameTree::new(&guarded, PayoffSchedule::fair(), fair(6));
        let report = AssumptionReport::new(Attestation::Guard).with_net_floor(ratio(-1, 2));
        let cert = certify_net(Subject::NetWealth, CertificateKind::Sequential, &report).unwrap();
        assert!(verify_certificate(&tree, &cert, &VerifyOptions::default()).unwrap().holds);
        let attested = attest(&tree, None).unwrap();
        assert!(attested.net_floor.unwrap() >= ratio(-1, 2));
    }

    #[test]
    fn robbins_siegmund_instances() {
        let s = constant_strategy(int(1), int(0)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), fair(4));
        let r = robbins_siegmund_check(&tree, &AlmostSupermartingale::ville(Series::Gross), &[int(2)]).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.scale, int(1));

        let s = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::fair(), fair(4));
        let r = robbins_siegmund_check(&tree, &AlmostSupermartingale::wealth(), &[]).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.scale, int(5));

        let s = constant_strategy(ratio(1, 2), int(1)).unwrap();
        let tree = GameTree::new(&s, PayoffSchedule::constant(ratio(1, 10)).unwrap(), fair(3));
        let r = robbins_siegmund_check(&tree, &AlmostSupermartingale::wealth(), &[]).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.scale, int(1) + ratio(33, 10));
        assert_eq!(r.slack, ratio(3, 10));

        // the borrowed wealth is not a supermartingale, so b = xi = zeta = 0 is a false decomposition
        let r = robbins_siegmund_check(&tree, &AlmostSupermartingale::ville(Series::Gross), &[]).unwrap();
        assert!(!r.decomposition);
    }

    #[test]
    fn arbitrage_has_zero_conditional_risk() {
        let s = arbitrage_strategy(PayoffSchedule::constant(ratio(1, 10)).unwrap(), int(1));
        let tree = GameTree::new(&s, PayoffSchedule::constant(ratio(1, 10)).unwrap(), fair(3))
            .with_options(LedgerOptions { eta: None, compound: true });
        let n = martingale_check(&tree, |l: &Ledger| l.last().net.clone()).unwrap();
        assert_eq!(n.verdict, MartingaleVerdict::Submartingale);
        let adj = martingale_check(&tree, tree.process(Series::AdjustedNet).unwrap()).unwrap();
        assert_eq!(adj.verdict, MartingaleVerdict::Martingale);
    }
}
