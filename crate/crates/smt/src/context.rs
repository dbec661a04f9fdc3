use std::collections::HashMap;
use std::fmt::Write as _;
use std::time::Instant;

use crate::dl::{DiffLogic, Weight};
use crate::formula::{CmpOp, Formula, LinExpr, Model, Objective, SmtLib, Sort, Value, VarRef};
use crate::sat::{Lit, Solver, Status};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SmtError {
    #[error("sort error: {0}")]
    Sort(String),
    #[error("not a difference constraint: {0}")]
    NonDifference(String),
    #[error("variable {0} does not belong to this context")]
    UnknownVar(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolveResult {
    Sat(Model),
    Unsat,
    /// The deadline passed before a verdict was reached.
    Interrupted,
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn model(&self) -> Option<&Model> {
        match self {
            SolveResult::Sat(m) => Some(m),
            _ => None,
        }
    }

    pub fn into_model(self) -> Option<Model> {
        match self {
            SolveResult::Sat(m) => Some(m),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Slot {
    Bool(u32),
    Real(u32),
}

type AtomKey = (u32, u32, u64);

/// Solver context: variables, assertions, and the engine behind them.
pub struct Context {
    solver: Solver<DiffLogic>,
    slots: Vec<Slot>,
    names: Vec<String>,
    atoms: HashMap<AtomKey, u32>,
    totalizers: HashMap<Vec<Lit>, Vec<Lit>>,
    true_lit: Lit,
    assertions: Vec<Formula>,
    /// Number of `check`/`minimize` calls that reached the engine.
    pub solve_calls: u64,
}

impl Default for Context {
    fn default() -> Self {
        Self::new()
    }
}

impl Context {
    pub fn new() -> Self {
        let mut solver = Solver::new(DiffLogic::new());
        let t = solver.new_var();
        let true_lit = Lit::pos(t);
        solver.add_clause(&[true_lit]);
        Context {
            solver,
            slots: Vec::new(),
            names: Vec::new(),
            atoms: HashMap::new(),
            totalizers: HashMap::new(),
            true_lit,
            assertions: Vec::new(),
            solve_calls: 0,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.solver.set_seed(seed);
        self.solver.random_freq = if seed == 0 { 0.0 } else { 0.02 };
    }

    pub fn set_deadline(&mut self, deadline: Option<Instant>) {
        self.solver.deadline = deadline;
    }

    pub fn bool_var(&mut self, name: impl Into<String>) -> VarRef {
        let v = self.solver.new_var();
        self.push_slot(Slot::Bool(v), name.into(), Sort::Bool)
    }

    /// New real variable, implicitly `>= 0`.
    pub fn real_var(&mut self, name: impl Into<String>) -> VarRef {
        let n = self.solver.theory.new_node();
        let ok = self
            .solver
            .theory
            .add_static(n, 0, Weight::ZERO);
        debug_assert!(ok);
        self.push_slot(Slot::Real(n), name.into(), Sort::Real)
    }

    fn push_slot(&mut self, slot: Slot, name: String, sort: Sort) -> VarRef {
        let id = self.slots.len() as u32;
        self.slots.push(slot);
        self.names.push(name);
        VarRef { id, sort }
    }

    pub fn name(&self, v: VarRef) -> &str {
        &self.names[v.id as usize]
    }

    pub fn num_vars(&self) -> usize {
        self.slots.len()
    }

    pub fn num_assertions(&self) -> usize {
        self.assertions.len()
    }

    fn slot(&self, v: VarRef) -> Result<Slot, SmtError> {
        let s = *self.slots.get(v.id as usize).ok_or(SmtError::UnknownVar(v.id))?;
        match (s, v.sort) {
            (Slot::Bool(_), Sort::Bool) | (Slot::Real(_), Sort::Real) => Ok(s),
            _ => Err(SmtError::UnknownVar(v.id)),
        }
    }

    /// Adds `f` conjunctively.
    pub fn assert(&mut self, f: Formula) -> Result<(), SmtError> {
        self.assert_top(&f)?;
        self.assertions.push(f);
        Ok(())
    }

    fn assert_top(&mut self, f: &Formula) -> Result<(), SmtError> {
        match f {
            Formula::True => Ok(()),
            Formula::And(fs) => {
                for g in fs {
                    self.assert_top(g)?;
                }
                Ok(())
            }
            Formula::Or(fs) => {
                let mut c = Vec::with_capacity(fs.len());
                for g in fs {
                    c.push(self.encode(g)?);
                }
                self.solver.add_clause(&c);
                Ok(())
            }
            Formula::Implies(a, b) => {
                let a = self.encode(a)?;
                let b = self.encode(b)?;
                self.solver.add_clause(&[!a, b]);
                Ok(())
            }
            _ => {
                let l = self.encode(f)?;
                self.solver.add_clause(&[l]);
                Ok(())
            }
        }
    }

    fn fresh(&mut self) -> Lit {
        Lit::pos(self.solver.new_var())
    }

    fn and_gate(&mut self, lits: &[Lit]) -> Lit {
        match lits.len() {
            0 => self.true_lit,
            1 => lits[0],
            _ => {
                let t = self.fresh();
                let mut big = vec![t];
                for &l in lits {
                    self.solver.add_clause(&[!t, l]);
                    big.push(!l);
                }
                self.solver.add_clause(&big);
                t
            }
        }
    }

    fn or_gate(&mut self, lits: &[Lit]) -> Lit {
        let neg: Vec<Lit> = lits.iter().map(|&l| !l).collect();
        !self.and_gate(&neg)
    }

    fn encode(&mut self, f: &Formula) -> Result<Lit, SmtError> {
        Ok(match f {
            Formula::True => self.true_lit,
            Formula::False => !self.true_lit,
            Formula::Var(v) => match self.slot(*v)? {
                Slot::Bool(b) => Lit::pos(b),
                Slot::Real(_) => {
                    return Err(SmtError::Sort(format!(
                        "real variable {} used as a proposition",
                        self.names[v.id as usize]
                    )))
                }
            },
            Formula::Not(a) => !self.encode(a)?,
            Formula::And(fs) => {
                let ls = fs.iter().map(|g| self.encode(g)).collect::<Result<Vec<_>, _>>()?;
                self.and_gate(&ls)
            }
            Formula::Or(fs) => {
                let ls = fs.iter().map(|g| self.encode(g)).collect::<Result<Vec<_>, _>>()?;
                self.or_gate(&ls)
            }
            Formula::Implies(a, b) => {
                let a = self.encode(a)?;
                let b = self.encode(b)?;
                self.or_gate(&[!a, b])
            }
            Formula::Iff(a, b) => {
                let a = self.encode(a)?;
                let b = self.encode(b)?;
                let t = self.fresh();
                self.solver.add_clause(&[!t, !a, b]);
                self.solver.add_clause(&[!t, a, !b]);
                self.solver.add_clause(&[t, a, b]);
                self.solver.add_clause(&[t, !a, !b]);
                t
            }
            Formula::Ite(c, a, b) => {
                let c = self.encode(c)?;
                let a = self.encode(a)?;
                let b = self.encode(b)?;
                let t = self.fresh();
                self.solver.add_clause(&[!c, !a, t]);
                self.solver.add_clause(&[!c, a, !t]);
                self.solver.add_clause(&[c, !b, t]);
                self.solver.add_clause(&[c, b, !t]);
                self.solver.add_clause(&[!a, !b, t]);
                self.solver.add_clause(&[a, b, !t]);
                t
            }
            Formula::Cmp(lhs, op, rhs) => self.encode_cmp(lhs, *op, *rhs)?,
            Formula::ExactlyN(fs, n) => {
                let ls = fs.iter().map(|g| self.encode(g)).collect::<Result<Vec<_>, _>>()?;
                self.exactly(&ls, *n)
            }
        })
    }

    fn exactly(&mut self, lits: &[Lit], n: usize) -> Lit {
        let m = lits.len();
        if n > m {
            return !self.true_lit;
        }
        if m == 0 {
            return self.true_lit;
        }
        let outs = self.totalizer(lits);
        if n == 0 {
            !outs[0]
        } else if n == m {
            outs[m - 1]
        } else {
            self.and_gate(&[outs[n - 1], !outs[n]])
        }
    }

    /// Unary counter: `out[i]` holds iff at least `i + 1` inputs are true.
    fn totalizer(&mut self, lits: &[Lit]) -> Vec<Lit> {
        let mut key = lits.to_vec();
        key.sort();
        if let Some(o) = self.totalizers.get(&key) {
            return o.clone();
        }
        let outs = self.build_totalizer(&key);
        self.totalizers.insert(key, outs.clone());
        outs
    }

    fn build_totalizer(&mut self, lits: &[Lit]) -> Vec<Lit> {
        if lits.len() == 1 {
            return vec![lits[0]];
        }
        let mid = lits.len() / 2;
        let a = self.build_totalizer(&lits[..mid]);
        let b = self.build_totalizer(&lits[mid..]);
        let (p, q) = (a.len(), b.len());
        let r: Vec<Lit> = (0..p + q).map(|_| self.fresh()).collect();
        // at least: a_i ∧ b_j → r_{i+j}
        for i in 0..=p {
            for j in 0..=q {
                if i + j == 0 {
                    continue;
                }
                let mut c = vec![r[i + j - 1]];
                if i > 0 {
                    c.push(!a[i - 1]);
                }
                if j > 0 {
                    c.push(!b[j - 1]);
                }
                self.solver.add_clause(&c);
            }
        }
        // at most: ¬a_{i+1} ∧ ¬b_{j+1} → ¬r_{i+j+1}
        for i in 0..=p {
            for j in 0..=q {
                if i + j >= p + q {
                    continue;
                }
                let mut c = vec![!r[i + j]];
                if i < p {
                    c.push(a[i]);
                }
                if j < q {
                    c.push(b[j]);
                }
                self.solver.add_clause(&c);
            }
        }
        r
    }

    fn encode_cmp(&mut self, lhs: &LinExpr, op: CmpOp, rhs: f64) -> Result<Lit, SmtError> {
        let mut terms: Vec<(f64, u32, VarRef)> = Vec::new();
        for &(c, v) in &lhs.terms {
            let node = match self.slot(v)? {
                Slot::Real(n) => n,
                Slot::Bool(_) => {
                    return Err(SmtError::Sort(format!(
                        "Boolean variable {} inside arithmetic",
                        self.names[v.id as usize]
                    )))
                }
            };
            match terms.iter_mut().find(|t| t.1 == node) {
                Some(t) => t.0 += c,
                None => terms.push((c, node, v)),
            }
        }
        terms.retain(|t| t.0.abs() > 1e-12);
        let b = rhs - lhs.constant;
        // Reduce to `x - y (op) c`, with node 0 standing for the constant 0.
        let (x, y, c, op) = match terms.as_slice() {
            [] => {
                let holds = match op {
                    CmpOp::Le => 0.0 <= b + 1e-12,
                    CmpOp::Ge => 0.0 >= b - 1e-12,
                    CmpOp::Eq => b.abs() <= 1e-12,
                };
                return Ok(if holds { self.true_lit } else { !self.true_lit });
            }
            [(a, x, _)] => (*x, 0, b / a, flip(op, *a)),
            [(a, x, _), (a2, y, _)] if (a + a2).abs() <= 1e-12 => (*x, *y, b / a, flip(op, *a)),
            _ => {
                let shown: Vec<String> = lhs
                    .terms
                    .iter()
                    .map(|(c, v)| format!("{c}*{}", self.names[v.id as usize]))
                    .collect();
                return Err(SmtError::NonDifference(format!(
                    "{} {:?} {rhs}",
                    shown.join(" + "),
                    op
                )));
            }
        };
        Ok(match op {
            CmpOp::Le => self.atom(y, x, c),
            CmpOp::Ge => self.atom(x, y, -c),
            CmpOp::Eq => {
                let le = self.atom(y, x, c);
                let ge = self.atom(x, y, -c);
                self.and_gate(&[le, ge])
            }
        })
    }

    /// Literal for `to - from <= c`.
    fn atom(&mut self, from: u32, to: u32, c: f64) -> Lit {
        let c = if c == 0.0 { 0.0 } else { c };
        let key = (from, to, c.to_bits());
        if let Some(&v) = self.atoms.get(&key) {
            return Lit::pos(v);
        }
        let v = self.solver.new_var();
        self.solver.theory.add_atom(v, from, to, Weight::new(c, 0));
        self.atoms.insert(key, v);
        Lit::pos(v)
    }

    fn run(&mut self, assumptions: &[Lit]) -> Status {
        self.solve_calls += 1;
        self.solver.solve(assumptions)
    }

    fn extract(&self) -> Model {
        let reals = self.solver.theory.values();
        let mut m = Model::default();
        for (i, slot) in self.slots.iter().enumerate() {
            let (vr, val) = match *slot {
                Slot::Bool(b) => (
                    VarRef {
                        id: i as u32,
                        sort: Sort::Bool,
                    },
                    Value::Bool(self.solver.var_value(b).unwrap_or(false)),
                ),
                Slot::Real(n) => {
                    let mut x = reals[n as usize];
                    if (x - x.round()).abs() < 1e-9 {
                        x = x.round();
                    }
                    if x == 0.0 {
                        x = 0.0;
                    }
                    (
                        VarRef {
                            id: i as u32,
                            sort: Sort::Real,
                        },
                        Value::Real(x),
                    )
                }
            };
            m.values.insert(vr, val);
        }
        m
    }

    pub fn check(&mut self) -> SolveResult {
        match self.run(&[]) {
            Status::Sat => SolveResult::Sat(self.extract()),
            Status::Unsat => SolveResult::Unsat,
            Status::Interrupted => SolveResult::Interrupted,
        }
    }

    /// Minimizes `objective` by linear search from above. The bound is passed
    /// as an assumption, so the context can be reused afterwards.
    pub fn minimize(&mut self, objective: &Objective) -> Result<SolveResult, SmtError> {
        let mut lits = Vec::new();
        for (w, f) in &objective.terms {
            let l = self.encode(f)?;
            for _ in 0..*w {
                lits.push(l);
            }
        }
        let outs = if lits.is_empty() {
            Vec::new()
        } else {
            self.totalizer(&lits)
        };
        let mut assumption: Vec<Lit> = Vec::new();
        let mut best = None;
        loop {
            match self.run(&assumption) {
                Status::Sat => {}
                Status::Unsat => break,
                Status::Interrupted => return Ok(SolveResult::Interrupted),
            }
            let cost = lits
                .iter()
                .filter(|l| self.solver.lit_value(**l) == Some(true))
                .count();
            best = Some(self.extract());
            if cost == 0 {
                break;
            }
            assumption = vec![!outs[cost - 1]];
        }
        Ok(match best {
            Some(m) => SolveResult::Sat(m),
            None => SolveResult::Unsat,
        })
    }

    /// Asserts `⋁ ¬v` over the variables of `vars` that are true in `model`.
    pub fn block_model(&mut self, vars: &[VarRef], model: &Model) -> Result<(), SmtError> {
        let mut fs = Vec::new();
        for &v in vars {
            if let Slot::Real(_) = self.slot(v)? {
                return Err(SmtError::Sort(format!(
                    "cannot block on real variable {}",
                    self.names[v.id as usize]
                )));
            }
            if model.bool(v) {
                fs.push(Formula::not(Formula::Var(v)));
            }
        }
        self.assert(Formula::Or(fs))
    }

    /// True if `model` satisfies every asserted formula.
    pub fn check_model(&self, model: &Model) -> bool {
        self.assertions.iter().all(|f| f.eval(model))
    }

    /// Declarations and assertions in SMT-LIB-like syntax.
    pub fn dump_smtlib(&self) -> String {
        let mut s = String::new();
        for (i, slot) in self.slots.iter().enumerate() {
            let sort = match slot {
                Slot::Bool(_) => "Bool",
                Slot::Real(_) => "Real",
            };
            let _ = writeln!(s, "(declare-const {} {sort})", self.names[i]);
            if let Slot::Real(_) = slot {
                let _ = writeln!(s, "(assert (>= {} 0))", self.names[i]);
            }
        }
        for f in &self.assertions {
            let _ = writeln!(
                s,
                "(assert {})",
                SmtLib {
                    formula: f,
                    names: &self.names,
                }
            );
        }
        s
    }

    pub fn conflicts(&self) -> u64 {
        self.solver.conflicts
    }
}

fn flip(op: CmpOp, coeff: f64) -> CmpOp {
    if coeff > 0.0 {
        op
    } else {
        match op {
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Eq => CmpOp::Eq,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_context_is_sat() {
        let mut ctx = Context::new();
        let m = ctx.check().into_model().unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn contexts_are_independent() {
        let mut a = Context::new();
        let mut b = Context::new();
        let x = a.bool_var("x");
        let y = b.bool_var("y");
        a.assert(Formula::and([x.into(), Formula::not(x.into())])).unwrap();
        b.assert(y.into()).unwrap();
        assert_eq!(a.check(), SolveResult::Unsat);
        assert!(b.check().is_sat());
    }

    #[test]
    fn assert_true_stays_sat() {
        let mut ctx = Context::new();
        ctx.assert(Formula::True).unwrap();
        assert!(ctx.check().is_sat());
    }

    #[test]
    fn pinned_real() {
        let mut ctx = Context::new();
        let g = ctx.real_var("gamma");
        ctx.assert(Formula::and([LinExpr::var(g).ge(2.0), LinExpr::var(g).le(2.0)]))
            .unwrap();
        let m = ctx.check().into_model().unwrap();
        assert_eq!(m.real(g), 2.0);
    }

    #[test]
    fn sort_errors() {
        let mut ctx = Context::new();
        let x = ctx.real_var("x");
        let b = ctx.bool_var("b");
        assert!(matches!(ctx.assert(Formula::Var(x)), Err(SmtError::Sort(_))));
        assert!(matches!(
            ctx.assert(LinExpr::var(b).le(1.0)),
            Err(SmtError::Sort(_))
        ));
    }

    #[test]
    fn non_difference_rejected() {
        let mut ctx = Context::new();
        let x = ctx.real_var("x");
        let y = ctx.real_var("y");
        let f = LinExpr::var(x).plus(1.0, y).le(3.0);
        assert!(matches!(ctx.assert(f), Err(SmtError::NonDifference(_))));
        // scaled differences are fine
        let g = LinExpr::default().plus(2.0, x).plus(-2.0, y).ge(4.0);
        ctx.assert(g).unwrap();
        let m = ctx.check().into_model().unwrap();
        assert!(m.real(x) - m.real(y) >= 2.0 - 1e-9);
    }

    #[test]
    fn minimize_examples() {
        let mut ctx = Context::new();
        let x = ctx.bool_var("x");
        let y = ctx.bool_var("y");
        ctx.assert(Formula::or([x.into(), y.into()])).unwrap();
        let obj: Objective = [Formula::Var(x), Formula::Var(y)].into_iter().collect();
        let m = ctx.minimize(&obj).unwrap().into_model().unwrap();
        assert_eq!(obj.eval(&m), 1);

        let mut ctx = Context::new();
        let a = ctx.bool_var("a");
        let b = ctx.bool_var("b");
        let obj: Objective = [Formula::Var(a), Formula::Var(b)].into_iter().collect();
        let m = ctx.minimize(&obj).unwrap().into_model().unwrap();
        assert_eq!(obj.eval(&m), 0);
    }

    #[test]
    fn blocking() {
        let mut ctx = Context::new();
        let x = ctx.bool_var("x");
        let y = ctx.bool_var("y");
        ctx.assert(Formula::or([x.into(), y.into()])).unwrap();
        ctx.assert(Formula::not(Formula::and([x.into(), y.into()]))).unwrap();
        let m = ctx.check().into_model().unwrap();
        ctx.block_model(&[x, y], &m).unwrap();
        let m2 = ctx.check().into_model().unwrap();
        assert_ne!(m.bool(x), m2.bool(x));
        ctx.block_model(&[x, y], &m2).unwrap();
        assert_eq!(ctx.check(), SolveResult::Unsat);
    }

    #[test]
    fn enumerate_at_least_one_of_three() {
        let mut ctx = Context::new();
        let vs: Vec<VarRef> = (0..3).map(|i| ctx.bool_var(format!("v{i}"))).collect();
        ctx.assert(Formula::or(vs.iter().map(|&v| Formula::Var(v)))).unwrap();
        let mut n = 0;
        while let SolveResult::Sat(m) = ctx.check() {
            assert!(ctx.check_model(&m));
            ctx.block_model(&vs, &m).unwrap();
            n += 1;
            assert!(n <= 7);
        }
        assert_eq!(n, 7);
    }

    #[test]
    fn exactly_n() {
        for n in 0..=4 {
            let mut ctx = Context::new();
            let vs: Vec<VarRef> = (0..4).map(|i| ctx.bool_var(format!("v{i}"))).collect();
            ctx.assert(Formula::exactly(vs.iter().map(|&v| Formula::Var(v)), n))
                .unwrap();
            let mut count = 0;
            while let SolveResult::Sat(m) = ctx.check() {
                assert_eq!(vs.iter().filter(|&&v| m.bool(v)).count(), n);
                // block on the full assignment
                let lits: Vec<Formula> = vs
                    .iter()
                    .map(|&v| {
                        if m.bool(v) {
                            Formula::not(v.into())
                        } else {
                            v.into()
                        }
                    })
                    .collect();
                ctx.assert(Formula::or(lits)).unwrap();
                count += 1;
            }
            let binom = [1, 4, 6, 4, 1][n];
            assert_eq!(count, binom);
        }
    }

    #[test]
    fn disjunctive_scheduling() {
        // Two unit jobs on one machine, both inside [0, 2]: they must be
        // sequenced back to back.
        let mut ctx = Context::new();
        let a = ctx.real_var("a");
        let b = ctx.real_var("b");
        ctx.assert(Formula::or([Formula::diff_ge(a, b, 1.0), Formula::diff_ge(b, a, 1.0)]))
            .unwrap();
        ctx.assert(LinExpr::var(a).le(1.0)).unwrap();
        ctx.assert(LinExpr::var(b).le(1.0)).unwrap();
        let m = ctx.check().into_model().unwrap();
        assert!(ctx.check_model(&m));
        assert_eq!((m.real(a) - m.real(b)).abs(), 1.0);
        ctx.assert(LinExpr::var(a).le(0.5)).unwrap();
        ctx.assert(LinExpr::var(b).le(0.5)).unwrap();
        assert_eq!(ctx.check(), SolveResult::Unsat);
    }

    #[test]
    fn strict_negation_model() {
        let mut ctx = Context::new();
        let x = ctx.real_var("x");
        ctx.assert(Formula::not(LinExpr::var(x).le(3.0))).unwrap();
        ctx.assert(LinExpr::var(x).le(3.5)).unwrap();
        let m = ctx.check().into_model().unwrap();
        assert!(m.real(x) > 3.0 && m.real(x) <= 3.5);
        assert!(ctx.check_model(&m));
    }

    #[test]
    fn dump_mentions_declarations() {
        let mut ctx = Context::new();
        let x = ctx.real_var("x");
        let b = ctx.bool_var("b");
        ctx.assert(Formula::implies(b.into(), LinExpr::var(x).ge(2.0))).unwrap();
        let d = ctx.dump_smtlib();
        assert!(d.contains("(declare-const x Real)"));
        assert!(d.contains("(declare-const b Bool)"));
        assert!(d.contains("(assert (=> b (>= (+ (* 1 x) 0) 2)))"), "{d}");
    }

    #[test]
    fn deadline_in_the_past_interrupts() {
        let mut ctx = Context::new();
        let x = ctx.bool_var("x");
        ctx.assert(x.into()).unwrap();
        ctx.set_deadline(Some(Instant::now()));
        assert_eq!(ctx.check(), SolveResult::Interrupted);
        ctx.set_deadline(None);
        assert!(ctx.check().is_sat());
    }
}
