//! Recurrence and repetition statistics of symbol sequences.
//!
//! This crate is `no_std` (it needs `alloc`) and holds every algorithm of the
//! toolkit:
//!
//! - [`seqstat`]: the longest match length `L1`, the maximal repetition length
//!   `L2`, the recurrence time `R1` and the repetition time `R2` of a finite
//!   sequence, computed with a Z-array and an online suffix automaton, together
//!   with an exhaustive pairwise oracle.
//! - [`sources`]: IID, Markov and hidden Markov sources with exact block
//!   probabilities, plus an exploratory copy source.
//! - [`entropy`]: Rényi–Arimoto entropies, conditional min-entropies of blocks,
//!   the context length `I_k` and the weighted conditional entropy.
//! - [`hilberg`]: Hilberg exponents, power-law fits and ensemble summaries.
//! - [`verify`]: Monte-Carlo and exact checks of the recurrence-time lemmas and
//!   the sandwich bounds for `R1` and `R2`.
//!
//! All entropies are in nats. Curve indices follow the 1-based convention: the
//! point with index `n` of an `L` curve describes the prefix `X_1..X_n`, and the
//! point with index `k` of an `R` curve describes blocks of length `k`.

#![no_std]

extern crate alloc;

pub mod entropy;
pub mod hilberg;
mod math;
pub mod seqstat;
pub mod sources;
pub mod verify;

pub use entropy::{EntropyError, EntropyValue, Order};
pub use hilberg::{HilbergError, HilbergEstimate, HilbergFit, Law, LawFit, Statistic};
pub use seqstat::{CensoredValue, CurveKind, SeqError, StatCurve, SymbolSeq};
pub use sources::{SeedSpec, SourceError, SourceModel};
pub use verify::{Verdict, VerificationReport, VerifyError};
