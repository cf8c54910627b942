//! The two-round example comparing net and sub-net wealth.
//!
//! Borrow 1 and stake half of the wealth in both rounds; sub-liabilities
//! weigh the second borrow by `eta_2 = 2 - X_1`. Net e-values use the floor
//! `N_min = -1`, sub-net ones the floor `G = -3`.

use std::fmt::Write as _;

use serde::Serialize;

use crate::game::{run_game_with, EtaWeights, GameError, LedgerOptions, Outcome, Path, PayoffSchedule};
use crate::rational::{self, int, ratio, Rational};
use crate::strategies::constant_strategy;

/// The values as printed in the published table, keyed by `(X_1, X_2)`.
pub fn printed_rows() -> Vec<([i64; 2], [Rational; 5])> {
    vec![
        ([-1, -1], [int(1), int(-1), int(0), int(-3), int(0)]),
        ([-1, 1], [int(3), int(1), int(1), int(1), int(1)]),
        ([1, -1], [int(2), int(0), ratio(1, 2), int(0), ratio(3, 4)]),
        ([1, 1], [int(6), int(4), ratio(5, 2), int(4), ratio(7, 4)]),
    ]
}

pub const COLUMNS: [&str; 5] = ["W_2", "N_2", "(N_2+1)/2", "subN_2", "(subN_2+3)/4"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Table1Row {
    pub x: [i64; 2],
    #[serde(serialize_with = "fractions")]
    pub computed: [Rational; 5],
    #[serde(serialize_with = "fractions")]
    pub printed: [Rational; 5],
    /// Columns where the two differ.
    pub mismatches: Vec<&'static str>,
}

fn fractions<S: serde::Serializer>(v: &[Rational; 5], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(rational::to_fraction_string))
}

pub fn table1() -> Result<Vec<Table1Row>, GameError> {
    let strategy = constant_strategy(ratio(1, 2), int(1)).expect("valid constants");
    let options = LedgerOptions { eta: Some(EtaWeights::penalize_after_loss()), compound: false };
    printed_rows()
        .into_iter()
        .map(|(x, printed)| {
            let path = Path::new(x.iter().map(|v| Outcome::from_value(*v)).collect::<Result<_, _>>()?);
            let ledger = run_game_with(&strategy, &path, &PayoffSchedule::fair(), &options)?;
            let row = ledger.last();
            let sub_net = &row.wealth - row.sub_liabilities.as_ref().expect("eta attached");
            let computed = [
                row.wealth.clone(),
                row.net.clone(),
                (&row.net + int(1)) / int(2),
                sub_net.clone(),
                (sub_net + int(3)) / int(4),
            ];
            let mismatches = COLUMNS
                .iter()
                .zip(computed.iter().zip(&printed))
                .filter(|(_, (c, p))| c != p)
                .map(|(name, _)| *name)
                .collect();
            Ok(Table1Row { x, computed, printed, mismatches })
        })
        .collect()
}

fn decimal(v: &Rational) -> String {
    let f = rational::to_f64(v);
    if f.fract() == 0.0 {
        format!("{f:.0}")
    } else {
        format!("{f}")
    }
}

/// Plain-text table with a note under every mismatching row.
pub fn render(rows: &[Table1Row]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>4} {:>4} | {:>5} {:>5} {:>10} {:>7} {:>13}",
        "X_1", "X_2", COLUMNS[0], COLUMNS[1], COLUMNS[2], COLUMNS[3], COLUMNS[4]
    );
    for r in rows {
        let c: Vec<String> = r.computed.iter().map(decimal).collect();
        let flag = if r.mismatches.is_empty() { "" } else { "  *" };
        let _ = writeln!(
            out,
            "{:>4} {:>4} | {:>5} {:>5} {:>10} {:>7} {:>13}{flag}",
            r.x[0], r.x[1], c[0], c[1], c[2], c[3], c[4]
        );
    }
    for r in rows.iter().filter(|r| !r.mismatches.is_empty()) {
        let diffs: Vec<String> = r
            .mismatches
            .iter()
            .map(|name| {
                let i = COLUMNS.iter().position(|c| c == name).expect("known column");
                format!("{name}: computed {} vs printed {}", decimal(&r.computed[i]), decimal(&r.printed[i]))
            })
            .collect();
        let _ =
            writeln!(out, "* row ({:+}, {:+}) differs from the printed table: {}", r.x[0], r.x[1], diffs.join("; "));
        if r.x == [-1, 1] {
            let _ = writeln!(
                out,
                "  sub-liabilities are predictable, so after X_1 = -1 the second borrow weighs eta_2 = 3 and subL_2 = 4 on this row; with W_2 = 3 that gives subN_2 = -1."
            );
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn only_the_sub_net_columns_of_one_row_differ() {
        let rows = table1().unwrap();
        for r in &rows {
            if r.x == [-1, 1] {
                assert_eq!(r.mismatches, vec!["subN_2", "(subN_2+3)/4"]);
                assert_eq!(r.computed[3], int(-1));
                assert_eq!(r.computed[4], ratio(1, 2));
            } else {
                assert!(r.mismatches.is_empty(), "{r:?}");
            }
        }
        let text = render(&rows);
        assert!(text.contains("computed -1 vs printed 1"));
        assert!(text.contains("computed 0.5 vs printed 1"));
    }
}
