//! Seeded Monte Carlo for horizons beyond exact enumeration.
//!
//! Replication `i` draws its coin from a ChaCha stream keyed by
//! `(seed, i)`, so results do not depend on how replications are spread over
//! workers. Ledgers stay exact (strategies are defined on exact ledgers);
//! only the reported statistics are floating point, and they are reduced in
//! replication order so reports are bit-identical for a given seed.

use std::io;

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{GameError, Ledger, LedgerOptions, Outcome, Series};
use crate::oracle::{OracleError, StoppingRule};
use crate::rational::{self, Rational};
use crate::strategies::{parse_eta, parse_strategy, StrategyError};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("replications must be at least 1")]
    NoReplications,
    #[error("bias p = {0} is outside [0, 1]")]
    InvalidBias(Rational),
    #[error("certificate scale a = {0} must be positive")]
    BadCertificate(Rational),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Rule(#[from] OracleError),
    #[error("replication {replication}: {source}")]
    Game {
        replication: usize,
        #[source]
        source: GameError,
    },
    #[error("series {0:?} is not tracked (set compound for the adjusted series)")]
    Untracked(Series),
    #[error("series {0:?} needs sub-liability weights (set eta)")]
    MissingEta(Series),
    #[error("could not start worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// `(a, b, c)` constants used for the bound column and for standardizing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateConstants {
    #[serde(with = "rational::serde_fraction")]
    pub a: Rational,
    #[serde(with = "rational::serde_fraction")]
    pub b: Rational,
    #[serde(with = "rational::serde_fraction")]
    pub c: Rational,
}

impl CertificateConstants {
    /// `min(1, a / (x - b) + c)` for `x > b`.
    pub fn bound(&self, x: &Rational) -> Option<Rational> {
        (x > &self.b).then(|| (&self.a / (x - &self.b) + &self.c).min(Rational::one()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub horizon: usize,
    pub replications: usize,
    #[serde(with = "rational::serde_fraction")]
    pub p: Rational,
    pub seed: u64,
    /// Strategy string, e.g. `constant:lambda=1/2,beta=1`.
    pub strategy: String,
    /// Process whose running maximum and stopped value are recorded.
    pub series: Series,
    /// Stopping rule string; `fixed:T` when absent.
    pub stopping: Option<String>,
    /// Sub-liability weights by name, needed for `subL` and `subN`.
    pub eta: Option<String>,
    /// Track compound-interest liabilities (needed for the adjusted series).
    pub compound: bool,
    /// Levels `x` of the tail curve.
    #[serde(with = "rational_vec")]
    pub grid: Vec<Rational>,
    pub certificate: Option<CertificateConstants>,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
}

mod rational_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(rational::to_fraction_string))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let raw: Vec<String> = Vec::deserialize(d)?;
        raw.iter().map(|t| rational::parse(t).map_err(serde::de::Error::custom)).collect()
    }
}

impl SimConfig {
    pub fn new(strategy: impl Into<String>, horizon: usize, replications: usize, seed: u64) -> Self {
        SimConfig {
            horizon,
            replications,
            p: rational::ratio(1, 2),
            seed,
            strategy: strategy.into(),
            series: Series::Gross,
            stopping: None,
            eta: None,
            compound: false,
            grid: Vec::new(),
            certificate: None,
            workers: None,
        }
    }
}

/// Values recorded for one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub index: usize,
    /// Heads bitmask of the drawn path.
    pub mask: u64,
    pub sup: Rational,
    pub stopped: Rational,
    pub stopping_time: usize,
    pub terminal: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    #[serde(with = "rational::serde_fraction")]
    pub x: Rational,
    pub hits: usize,
    pub empirical: f64,
    /// Binomial standard error `sqrt(f (1 - f) / R)`.
    pub se: f64,
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    pub config: SimConfig,
    pub tail: Vec<TailPoint>,
    /// Empirical `E (E_tau - b) / a`, when a certificate is supplied.
    pub mean_standardized: Option<f64>,
    pub se_standardized: Option<f64>,
    pub mean_stopped: f64,
    pub mean_terminal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimReport {
    pub summary: SimSummary,
    pub replications: Vec<Replication>,
}

/// The coin of replication `index`.
pub fn replication_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

fn mean_and_se(values: impl Iterator<Item = f64>, n: usize) -> (f64, f64) {
    let xs: Vec<f64> = values.collect();
    let mean = xs.iter().sum::<f64>() / n as f64;
    let var = if n > 1 { xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
    (mean, (var / n as f64).sqrt())
}

pub fn run_mc(config: &SimConfig) -> Result<SimReport, SimError> {
    if config.replications == 0 {
        return Err(SimError::NoReplications);
    }
    if config.p.is_negative() || config.p > Rational::one() {
        return Err(SimError::InvalidBias(config.p.clone()));
    }
    if let Some(c) = &config.certificate {
        if !c.a.is_positive() {
            return Err(SimError::BadCertificate(c.a.clone()));
        }
    }
    let built = parse_strategy(&config.strategy)?;
    let rule = match &config.stopping {
        Some(text) => StoppingRule::parse(text, config.horizon)?,
        None => StoppingRule::fixed(config.horizon),
    };
    let eta = config.eta.as_deref().map(parse_eta).transpose()?;
    if matches!(config.series, Series::SubLiabilities | Series::SubNet) && eta.is_none() {
        return Err(SimError::MissingEta(config.series));
    }
    let options = LedgerOptions { eta, compound: config.compound };
    let p = rational::to_f64(&config.p);

    let play = |index: usize| -> Result<Replication, SimError> {
        let mut rng = replication_rng(config.seed, index);
        let mut ledger: Ledger = options.fresh_ledger();
        let value = |l: &Ledger| l.current(config.series).ok_or(SimError::Untracked(config.series));
        let mut sup = value(&ledger)?;
        let mut stopped = None;
        if rule.stops(&ledger) {
            stopped = Some((sup.clone(), 0));
        }
        let mut mask = 0u64;
        for t in 1..=config.horizon {
            let decision = built.strategy.decide(&ledger);
            let bonus = built.schedule.bonus(t).map_err(|source| SimError::Game { replication: index, source })?;
            let heads = rng.gen_bool(p);
            if heads {
                mask |= 1 << (t - 1);
            }
            let outcome = if heads { Outcome::Heads } else { Outcome::Tails };
            ledger
                .step(decision, outcome, bonus)
                .map_err(|source| SimError::Game { replication: index, source: source.at_round(t) })?;
            let v = value(&ledger)?;
            if v > sup {
                sup = v.clone();
            }
            if stopped.is_none() && (t == config.horizon || rule.stops(&ledger)) {
                stopped = Some((v, t));
            }
        }
        let terminal = value(&ledger)?;
        let (stopped, stopping_time) = stopped.unwrap_or_else(|| (terminal.clone(), config.horizon));
        Ok(Replication { index, mask, sup, stopped, stopping_time, terminal })
    };

    let run = || (0..config.replications).into_par_iter().map(play).collect::<Result<Vec<_>, _>>();
    let replications = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| SimError::Pool(e.to_string()))?
            .install(run)?,
        None => run()?,
    };

    let r = config.replications as f64;
    let tail = config
        .grid
        .iter()
        .map(|x| {
            let hits = replications.iter().filter(|rep| rep.sup >= *x).count();
            let f = hits as f64 / r;
            TailPoint {
                x: x.clone(),
                hits,
                empirical: f,
                se: (f * (1.0 - f) / r).sqrt(),
                bound: config.certificate.as_ref().and_then(|c| c.bound(x)).map(|b| rational::to_f64(&b)),
            }
        })
        .collect();
    let (mean_standardized, se_standardized) = match &config.certificate {
        Some(c) => {
            let (m, se) = mean_and_se(
                replications.iter().map(|rep| rational::to_f64(&((&rep.stopped - &c.b) / &c.a))),
                replications.len(),
            );
            (Some(m), Some(se))
        }
        None => (None, None),
    };
    let (mean_stopped, _) = mean_and_se(replications.iter().map(|x| rational::to_f64(&x.stopped)), replications.len());
    let (mean_terminal, _) =
        mean_and_se(replications.iter().map(|x| rational::to_f64(&x.terminal)), replications.len());
    Ok(SimReport {
        summary: SimSummary {
            config: config.clone(),
            tail,
            mean_standardized,
            se_standardized,
            mean_stopped,
            mean_terminal,
        },
        replications,
    })
}

impl SimReport {
    /// `x,empirical_tail,bound,se` rows.
    pub fn write_tail_csv<W: io::Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x", "empirical_tail", "bound", "se", "hits"])?;
        for t in &self.summary.tail {
            w.write_record([
                rational::to_fraction_string(&t.x),
                t.empirical.to_string(),
                t.bound.map(|b| b.to_string()).unwrap_or_default(),
                t.se.to_string(),
                t.hits.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_replications_csv<W: io::Write>(&self, out: W) -> Result<(), SimError> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["replication", "path_mask", "sup", "stopped", "tau", "terminal"])?;
        for rep in &self.replications {
            w.write_record([
                rep.index.to_string(),
                rep.mask.to_string(),
                rational::to_fraction_string(&rep.sup),
                rational::to_fraction_string(&rep.stopped),
                rep.stopping_time.to_string(),
                rational::to_fraction_string(&rep.terminal),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary).expect("summary serializes")
    }
}

/// `x` values `1/2, 1, 3/2, ..., max` plus every integer power of two up to `max`.
pub fn default_grid(max: i64) -> Vec<Rational> {
    let mut grid: Vec<Rational> = (1..=2 * max).map(|n| rational::ratio(n, 2)).collect();
    let mut p = 1;
    while p <= max {
        grid.push(rational::int(p));
        p *= 2;
    }
    grid.sort();
    grid.dedup();
    grid.retain(|x| !x.is_zero());
    grid
}
