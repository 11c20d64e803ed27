//! Evaluation and analysis of Hölder- and Minkowski-type inequalities between
//! generalized Bajraktarević means, with Gini and power means as the main
//! closed-form family.
//!
//! The target inequality couples an outer mean `M0` with `k` inner means
//! `M1..Mk` through a map `Φ`:
//!
//! ```text
//! M0(Φ(x_1), ..., Φ(x_n)) <= Φ(M1(x^1), ..., Mk(x^k))
//! ```
//!
//! where `x` is an `n × k` matrix with rows `x_i` and columns `x^j`.
//!
//! Modules:
//!
//! - [`means`]: Gini, power and Bajraktarević means, and the `χ` function.
//! - [`diagcalc`]: diagonal derivatives of means, the deficiency `F`, and
//!   finite-difference checks of both.
//! - [`psd`]: closed-form semidefiniteness of `diag(c) + c0·J` and a Jacobi
//!   eigenvalue oracle.
//! - [`local`]: the second-order matrix `Γ(y)`, grid scans and closed-form
//!   local deciders.
//! - [`global`]: pointwise sufficient-condition checkers and the classical
//!   global characterizations.
//! - [`search`]: counterexample search and witness shrinking.

pub mod diagcalc;
mod error;
pub mod global;
pub mod grid;
mod interval;
pub mod local;
mod matrix;
pub mod means;
pub mod psd;
pub mod search;
pub mod selftest;

pub use error::{Error, Result};
pub use interval::{ext_real, Interval};
pub use matrix::Matrix;
