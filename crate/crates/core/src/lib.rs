//! Saddle-point optimization with approximate minimization oracles.
//!
//! `saddlekit` solves `min_x max_y f(x, y)` by repeatedly asking two
//! oracles for approximate inner solutions and moving a fraction `η` of the
//! way towards them. It provides
//!
//! * the benchmark problems `f1`, `f2`, `f3` ([`problems`]);
//! * exact, (1+1)-ES and gradient-descent oracles ([`oracles`]);
//! * the outer iteration with fixed or adaptive learning rate ([`optimizer`]);
//! * closed-form convergence constants such as `η̄`, `η*` and `γ̄*`
//!   ([`theory`]);
//! * seeded, parallel experiment sweeps with CSV output ([`experiments`]).
//!
//! ```
//! use saddlekit::optimizer::{run_fixed, Metric, StopConfig};
//! use saddlekit::oracles::OracleSpec;
//! use saddlekit::problems::{make_f1, Vector};
//!
//! let problem = make_f1(2, 2, 1.0)?;
//! let stop = StopConfig { max_f_calls: 10_000, target: 1e-5, metric: Metric::Gap };
//! let start = (Vector::from_element(2, 1.0), Vector::from_element(2, 1.0));
//! let out = run_fixed(&problem, &OracleSpec::exact(), 0.5, start, &stop, 0)?;
//! assert!(out.success);
//! # Ok::<(), saddlekit::Error>(())
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiments;
pub mod optimizer;
pub mod oracles;
pub mod problems;
pub mod theory;

pub use error::{Error, Result};
pub use optimizer::{adapt_run, run_fixed, AdaptConfig, Metric, RunOutcome, StopConfig};
pub use oracles::{OracleKind, OracleSpec};
pub use problems::{make_f1, make_f2, make_f3, Matrix, ProblemDef, Vector};
pub use theory::TheoryConstants;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/problems.md")]
    mod problems {}
    #[doc = include_str!("../../../book/src/oracles.md")]
    mod oracles {}
    #[doc = include_str!("../../../book/src/iteration.md")]
    mod iteration {}
    #[doc = include_str!("../../../book/src/adaptation.md")]
    mod adaptation {}
    #[doc = include_str!("../../../book/src/theory.md")]
    mod theory {}
    #[doc = include_str!("../../../book/src/experiments.md")]
    mod experiments {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
