//! Exact classification and counting of torsors under finite abelian p-groups
//! over local and global function fields of characteristic p.
//!
//! The crate is organized around five layers:
//! - [`poly`]: universal Witt polynomials (ghost components, addition,
//!   inverses, scalar multiples, d-ary sums) over the integers;
//! - [`fq`] and [`laurent`]: exact arithmetic in F_q and in finite-tailed
//!   Laurent expressions, with Frobenius, p-th roots and the operator
//!   ℘ = F - id;
//! - [`torsor`]: canonical forms for torsor classes over F_q((t)), conductor
//!   and discriminant exponents, character pushforwards, long flags, and
//!   brute-force ℘-orbit oracles;
//! - [`invariants`]: a/b-invariants of raising functions in exact rational
//!   arithmetic, v-functions of representations, and flag enumeration;
//! - [`global`]: places of F_q(t), truncated local and adelic height zeta
//!   series, brute-force global enumeration, and exponent fitting.

pub mod error;
pub mod fq;
pub mod global;
pub mod invariants;
pub mod laurent;
pub mod poly;
pub mod selftest;
pub mod torsor;

pub use error::{Error, Result};
