//! Calculator and verifier for elementary modules over the Iwasawa algebra
//! `Λ = Z_p[[T]]`.
//!
//! Elementary modules `Λ^r ⊕ ⊕ Λ/g_i^{e_i} ⊕ ⊕ Λ/p^{f_j}` are the currency of
//! the crate. On top of them sit closed forms for the inverse-limit functor
//! `G(X) = lim (X/ω_n X)[p^∞]` and its dual-colimit partner `F`, a brute-force
//! oracle that realizes `E/ω_n E` as an integer cokernel, and the arithmetic
//! bookkeeping built from those pieces (Selmer disassembly, growth exponents,
//! rank sequences, the `ι`-twisted functional equation).

pub mod cli;
pub mod elementary_module;
pub mod error;
pub mod family;
pub mod finite_level;
pub mod functors;
pub mod integer_linalg;
pub mod iwasawa_app;
pub mod lambda_poly;

pub use elementary_module::{CharIdeal, ElementaryModule, PrimeFactor};
pub use error::{Error, Result};
pub use finite_level::{FiniteLevelInvariants, StabilizationReport};
pub use functors::OracleReport;
pub use integer_linalg::{IntMatrix, SnfResult, Valuation};
pub use iwasawa_app::{DisassemblyMode, DisassemblyResult, GrowthFit, RankSequence, ShaComparison};
pub use lambda_poly::{DistinguishedPoly, IntPoly, PrecisionContext, PreparedForm};
