//! Exact finite-depth constructions relating Lipschitz functions on `[0,1]`,
//! martingales on the binary tree, and effective null sets in `[0,1]^n`.

pub mod dyadic;
pub mod error;
pub mod gen;
pub mod interval_re;
pub mod martingale;
pub mod oscillator;
pub mod piecewise;
pub mod rat;
pub mod schnorr;
pub mod synthesis;
pub mod word;

pub use dyadic::Dyadic;
pub use error::{Error, Result};
pub use piecewise::{PiecewiseFn, PointEval};
pub use rat::Rat;
pub use word::BinWord;
