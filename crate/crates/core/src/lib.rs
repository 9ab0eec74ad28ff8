//! Quantifier elimination and a decision procedure for the integers with
//! addition, divisibility predicates `D_m` and p-adic valuation comparisons.

pub mod arith;
pub mod ball;
pub mod cli;
pub mod error;
pub mod formula;
pub mod fuzz;
pub mod normalize;
pub mod parse;
pub mod primes;
pub mod qe;
pub mod render;
pub mod term;
pub mod zmodel;

pub use error::{Error, Result};
pub use formula::{canonicalize, to_nnf, Atom, Formula, Literal};
pub use parse::{parse, parse_term};
pub use primes::PrimeSet;
pub use render::render;
pub use term::{Assignment, Term};
