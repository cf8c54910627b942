//! Testing by betting when the bettor may borrow.
//!
//! * [`game`]: exact ledgers of gross wealth, liabilities and net wealth.
//! * [`evidence`]: `(a, b, c)` tail-evidence certificates and e/p-value conversions.
//! * [`strategies`]: predictable strategies, the net-floor guard and bet-and-save.
//! * [`oracle`]: brute-force enumeration of every coin-toss path with exact checks.
//! * [`leverage`]: the standardized-evidence functional and leverage invariance.
//! * [`simulate`]: seeded Monte Carlo beyond the enumeration cap.
//! * [`verify`]: named suites of exact checks over seeded strategy corpora.
//! * [`table1`], [`plot`]: the two-round worked example and SVG output.

// Errors carry the exact offending values.
#![allow(clippy::result_large_err)]

pub mod evidence;
pub mod game;
pub mod leverage;
pub mod oracle;
pub mod plot;
pub mod rational;
pub mod simulate;
pub mod strategies;
pub mod table1;
pub mod verify;

pub use rational::Rational;
