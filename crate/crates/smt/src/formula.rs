//! Formula language: Boolean structure over Boolean variables and linear
//! comparisons of real variables, plus cardinality and if-then-else.

use std::collections::BTreeMap;
use std::fmt;

/// Tolerance used when evaluating arithmetic comparisons against a model.
pub const EVAL_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Bool,
    /// Real variable constrained to be `>= 0`.
    Real,
}

/// Handle to a variable owned by a [`Context`](crate::Context).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarRef {
    pub(crate) id: u32,
    pub(crate) sort: Sort,
}

impl VarRef {
    pub fn id(self) -> u32 {
        self.id
    }

    pub fn sort(self) -> Sort {
        self.sort
    }

    pub fn is_bool(self) -> bool {
        self.sort == Sort::Bool
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CmpOp {
    Le,
    Ge,
    Eq,
}

impl CmpOp {
    fn holds(self, lhs: f64, rhs: f64) -> bool {
        match self {
            CmpOp::Le => lhs <= rhs + EVAL_TOLERANCE,
            CmpOp::Ge => lhs + EVAL_TOLERANCE >= rhs,
            CmpOp::Eq => (lhs - rhs).abs() <= EVAL_TOLERANCE,
        }
    }

    fn symbol(self) -> &'static str {
        match self {
            CmpOp::Le => "<=",
            CmpOp::Ge => ">=",
            CmpOp::Eq => "=",
        }
    }
}

/// `Σ coeff·var + constant`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LinExpr {
    pub terms: Vec<(f64, VarRef)>,
    pub constant: f64,
}

impl LinExpr {
    pub fn var(v: VarRef) -> Self {
        LinExpr {
            terms: vec![(1.0, v)],
            constant: 0.0,
        }
    }

    pub fn constant(c: f64) -> Self {
        LinExpr {
            terms: Vec::new(),
            constant: c,
        }
    }

    pub fn plus(mut self, coeff: f64, v: VarRef) -> Self {
        self.terms.push((coeff, v));
        self
    }

    pub fn minus(self, v: VarRef) -> Self {
        self.plus(-1.0, v)
    }

    pub fn offset(mut self, c: f64) -> Self {
        self.constant += c;
        self
    }

    pub fn le(self, rhs: f64) -> Formula {
        Formula::Cmp(self, CmpOp::Le, rhs)
    }

    pub fn ge(self, rhs: f64) -> Formula {
        Formula::Cmp(self, CmpOp::Ge, rhs)
    }

    pub fn eq(self, rhs: f64) -> Formula {
        Formula::Cmp(self, CmpOp::Eq, rhs)
    }

    pub fn eval(&self, model: &Model) -> f64 {
        self.terms
            .iter()
            .map(|&(c, v)| c * model.real(v))
            .sum::<f64>()
            + self.constant
    }
}

impl From<VarRef> for LinExpr {
    fn from(v: VarRef) -> Self {
        LinExpr::var(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Formula {
    True,
    False,
    Var(VarRef),
    Not(Box<Formula>),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Implies(Box<Formula>, Box<Formula>),
    /// Boolean equivalence.
    Iff(Box<Formula>, Box<Formula>),
    Cmp(LinExpr, CmpOp, f64),
    /// Exactly `n` of the operands are true.
    ExactlyN(Vec<Formula>, usize),
    /// Boolean if-then-else.
    Ite(Box<Formula>, Box<Formula>, Box<Formula>),
}

impl Formula {
    pub fn var(v: VarRef) -> Self {
        Formula::Var(v)
    }

    pub fn not(f: Formula) -> Self {
        match f {
            Formula::True => Formula::False,
            Formula::False => Formula::True,
            Formula::Not(inner) => *inner,
            other => Formula::Not(Box::new(other)),
        }
    }

    pub fn and(fs: impl IntoIterator<Item = Formula>) -> Self {
        Formula::And(fs.into_iter().collect())
    }

    pub fn or(fs: impl IntoIterator<Item = Formula>) -> Self {
        Formula::Or(fs.into_iter().collect())
    }

    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    pub fn iff(a: Formula, b: Formula) -> Self {
        Formula::Iff(Box::new(a), Box::new(b))
    }

    pub fn ite(c: Formula, t: Formula, e: Formula) -> Self {
        Formula::Ite(Box::new(c), Box::new(t), Box::new(e))
    }

    pub fn exactly(fs: impl IntoIterator<Item = Formula>, n: usize) -> Self {
        Formula::ExactlyN(fs.into_iter().collect(), n)
    }

    /// `x - y >= c`
    pub fn diff_ge(x: VarRef, y: VarRef, c: f64) -> Self {
        LinExpr::var(x).minus(y).ge(c)
    }

    /// `x - y <= c`
    pub fn diff_le(x: VarRef, y: VarRef, c: f64) -> Self {
        LinExpr::var(x).minus(y).le(c)
    }

    /// Evaluates the formula under `model`. Unassigned Boolean variables read
    /// as false and unassigned reals as zero.
    pub fn eval(&self, model: &Model) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Var(v) => model.bool(*v),
            Formula::Not(f) => !f.eval(model),
            Formula::And(fs) => fs.iter().all(|f| f.eval(model)),
            Formula::Or(fs) => fs.iter().any(|f| f.eval(model)),
            Formula::Implies(a, b) => !a.eval(model) || b.eval(model),
            Formula::Iff(a, b) => a.eval(model) == b.eval(model),
            Formula::Cmp(lhs, op, rhs) => op.holds(lhs.eval(model), *rhs),
            Formula::ExactlyN(fs, n) => fs.iter().filter(|f| f.eval(model)).count() == *n,
            Formula::Ite(c, t, e) => {
                if c.eval(model) {
                    t.eval(model)
                } else {
                    e.eval(model)
                }
            }
        }
    }

    /// Visits every variable mentioned by the formula.
    pub fn for_each_var(&self, f: &mut impl FnMut(VarRef)) {
        match self {
            Formula::True | Formula::False => {}
            Formula::Var(v) => f(*v),
            Formula::Not(a) => a.for_each_var(f),
            Formula::And(fs) | Formula::Or(fs) | Formula::ExactlyN(fs, _) => {
                fs.iter().for_each(|x| x.for_each_var(f))
            }
            Formula::Implies(a, b) | Formula::Iff(a, b) => {
                a.for_each_var(f);
                b.for_each_var(f);
            }
            Formula::Cmp(lhs, _, _) => lhs.terms.iter().for_each(|&(_, v)| f(v)),
            Formula::Ite(c, t, e) => {
                c.for_each_var(f);
                t.for_each_var(f);
                e.for_each_var(f);
            }
        }
    }
}

impl From<VarRef> for Formula {
    fn from(v: VarRef) -> Self {
        Formula::Var(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Value {
    Bool(bool),
    Real(f64),
}

/// Assignment of values to the user-visible variables of a context.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Model {
    pub(crate) values: BTreeMap<VarRef, Value>,
}

impl Model {
    pub fn get(&self, v: VarRef) -> Option<Value> {
        self.values.get(&v).copied()
    }

    pub fn bool(&self, v: VarRef) -> bool {
        matches!(self.values.get(&v), Some(Value::Bool(true)))
    }

    pub fn real(&self, v: VarRef) -> f64 {
        match self.values.get(&v) {
            Some(Value::Real(x)) => *x,
            _ => 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VarRef, Value)> + '_ {
        self.values.iter().map(|(k, v)| (*k, *v))
    }
}

/// `Σ weight·If(formula, 1, 0)`.
#[derive(Debug, Clone, Default)]
pub struct Objective {
    pub terms: Vec<(u32, Formula)>,
}

impl Objective {
    pub fn new() -> Self {
        Objective::default()
    }

    /// Adds `If(f, 1, 0)`.
    pub fn indicator(mut self, f: Formula) -> Self {
        self.terms.push((1, f));
        self
    }

    pub fn weighted(mut self, weight: u32, f: Formula) -> Self {
        self.terms.push((weight, f));
        self
    }

    pub fn eval(&self, model: &Model) -> u64 {
        self.terms
            .iter()
            .filter(|(_, f)| f.eval(model))
            .map(|(w, _)| u64::from(*w))
            .sum()
    }
}

impl FromIterator<Formula> for Objective {
    fn from_iter<I: IntoIterator<Item = Formula>>(iter: I) -> Self {
        Objective {
            terms: iter.into_iter().map(|f| (1, f)).collect(),
        }
    }
}

pub(crate) struct SmtLib<'a> {
    pub formula: &'a Formula,
    pub names: &'a [String],
}

impl fmt::Display for SmtLib<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_smtlib(out, self.formula, self.names)
    }
}

fn write_smtlib(out: &mut fmt::Formatter<'_>, f: &Formula, names: &[String]) -> fmt::Result {
    let name = |v: &VarRef| names[v.id as usize].as_str();
    let list = |out: &mut fmt::Formatter<'_>, op: &str, fs: &[Formula]| -> fmt::Result {
        write!(out, "({op}")?;
        for g in fs {
            write!(out, " ")?;
            write_smtlib(out, g, names)?;
        }
        write!(out, ")")
    };
    match f {
        Formula::True => write!(out, "true"),
        Formula::False => write!(out, "false"),
        Formula::Var(v) => write!(out, "{}", name(v)),
        Formula::Not(a) => {
            write!(out, "(not ")?;
            write_smtlib(out, a, names)?;
            write!(out, ")")
        }
        Formula::And(fs) => list(out, "and", fs),
        Formula::Or(fs) => list(out, "or", fs),
        Formula::Implies(a, b) => list(out, "=>", &[(**a).clone(), (**b).clone()]),
        Formula::Iff(a, b) => list(out, "=", &[(**a).clone(), (**b).clone()]),
        Formula::Ite(c, t, e) => list(out, "ite", &[(**c).clone(), (**t).clone(), (**e).clone()]),
        Formula::ExactlyN(fs, n) => {
            write!(out, "((_ exactly {n})")?;
            for g in fs {
                write!(out, " ")?;
                write_smtlib(out, g, names)?;
            }
            write!(out, ")")
        }
        Formula::Cmp(lhs, op, rhs) => {
            write!(out, "({} (+", op.symbol())?;
            for (c, v) in &lhs.terms {
                write!(out, " (* {c} {})", name(v))?;
            }
            write!(out, " {}) {rhs})", lhs.constant)
        }
    }
}
