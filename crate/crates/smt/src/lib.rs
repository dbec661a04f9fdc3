//! A small CDCL(T) solver for Boolean combinations of difference constraints
//! over non-negative reals, with exact cardinality constraints, minimization
//! of indicator sums, and model blocking for enumeration.
//!
//! ```
//! use cfevrp_smt::{Context, Formula, LinExpr};
//!
//! let mut ctx = Context::new();
//! let x = ctx.real_var("x");
//! let y = ctx.real_var("y");
//! let b = ctx.bool_var("b");
//! ctx.assert(Formula::implies(b.into(), Formula::diff_ge(x, y, 3.0))).unwrap();
//! ctx.assert(b.into()).unwrap();
//! ctx.assert(LinExpr::var(y).ge(1.0)).unwrap();
//! let m = ctx.check().into_model().unwrap();
//! assert_eq!(m.real(x), 4.0);
//! ```

mod context;
mod dl;
mod formula;
mod sat;

pub use context::{Context, SmtError, SolveResult};
pub use formula::{CmpOp, Formula, LinExpr, Model, Objective, Sort, Value, VarRef, EVAL_TOLERANCE};
