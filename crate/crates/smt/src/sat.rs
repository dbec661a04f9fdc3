//! CDCL core: two watched literals, first-UIP learning, VSIDS, Luby restarts
//! and assumptions. Decisions prefer `true` unless phase saving is enabled. A [`Theory`] is consulted on every literal
//! that reaches the propagation queue.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn new(var: u32, negated: bool) -> Lit {
        Lit(var << 1 | negated as u32)
    }

    pub fn pos(var: u32) -> Lit {
        Lit::new(var, false)
    }

    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::ops::Not for Lit {
    type Output = Lit;
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

/// Background theory. `assign` receives each literal once, in trail order,
/// together with its trail position. On inconsistency it returns a set of
/// currently true literals whose conjunction is contradictory; it must then
/// leave its state as if `lit` had never been seen.
pub trait Theory {
    fn assign(&mut self, lit: Lit, trail_pos: usize) -> Result<(), Vec<Lit>>;
    /// Forget every literal whose trail position is `>= trail_len`.
    fn backtrack(&mut self, trail_len: usize);
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Sat,
    Unsat,
    Interrupted,
}

const NO_REASON: u32 = u32::MAX;

struct VarHeap {
    heap: Vec<u32>,
    pos: Vec<i32>,
}

impl VarHeap {
    fn new() -> Self {
        VarHeap {
            heap: Vec::new(),
            pos: Vec::new(),
        }
    }

    fn contains(&self, v: u32) -> bool {
        self.pos[v as usize] >= 0
    }

    fn up(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        while i > 0 {
            let p = (i - 1) / 2;
            if act[self.heap[p] as usize] >= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[p];
            self.pos[self.heap[i] as usize] = i as i32;
            i = p;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn down(&mut self, mut i: usize, act: &[f64]) {
        let v = self.heap[i];
        loop {
            let l = 2 * i + 1;
            if l >= self.heap.len() {
                break;
            }
            let r = l + 1;
            let c = if r < self.heap.len() && act[self.heap[r] as usize] > act[self.heap[l] as usize] {
                r
            } else {
                l
            };
            if act[self.heap[c] as usize] <= act[v as usize] {
                break;
            }
            self.heap[i] = self.heap[c];
            self.pos[self.heap[i] as usize] = i as i32;
            i = c;
        }
        self.heap[i] = v;
        self.pos[v as usize] = i as i32;
    }

    fn insert(&mut self, v: u32, act: &[f64]) {
        while self.pos.len() <= v as usize {
            self.pos.push(-1);
        }
        if self.contains(v) {
            return;
        }
        self.heap.push(v);
        let i = self.heap.len() - 1;
        self.pos[v as usize] = i as i32;
        self.up(i, act);
    }

    fn pop(&mut self, act: &[f64]) -> Option<u32> {
        if self.heap.is_empty() {
            return None;
        }
        let top = self.heap[0];
        let last = self.heap.pop().unwrap();
        self.pos[top as usize] = -1;
        if !self.heap.is_empty() {
            self.heap[0] = last;
            self.pos[last as usize] = 0;
            self.down(0, act);
        }
        Some(top)
    }

    fn bumped(&mut self, v: u32, act: &[f64]) {
        if self.contains(v) {
            let i = self.pos[v as usize] as usize;
            self.up(i, act);
        }
    }
}

pub struct Solver<T: Theory> {
    pub theory: T,
    clauses: Vec<Vec<Lit>>,
    watches: Vec<Vec<u32>>,
    value: Vec<Option<bool>>,
    level: Vec<u32>,
    reason: Vec<u32>,
    phase: Vec<bool>,
    activity: Vec<f64>,
    var_inc: f64,
    heap: VarHeap,
    trail: Vec<Lit>,
    trail_lim: Vec<usize>,
    qhead: usize,
    seen: Vec<bool>,
    /// Set once a conflict is derived at level 0.
    inconsistent: bool,
    rng: ChaCha8Rng,
    pub random_freq: f64,
    /// With phase saving off, every decision sets a variable to true. This
    /// makes each model found subset-maximal among the remaining ones when
    /// no auxiliary variables are involved.
    pub phase_saving: bool,
    pub deadline: Option<Instant>,
    pub conflicts: u64,
    pub decisions: u64,
}

enum Propagation {
    Ok,
    Conflict(u32),
}

impl<T: Theory> Solver<T> {
    pub fn new(theory: T) -> Self {
        Solver {
            theory,
            clauses: Vec::new(),
            watches: Vec::new(),
            value: Vec::new(),
            level: Vec::new(),
            reason: Vec::new(),
            phase: Vec::new(),
            activity: Vec::new(),
            var_inc: 1.0,
            heap: VarHeap::new(),
            trail: Vec::new(),
            trail_lim: Vec::new(),
            qhead: 0,
            seen: Vec::new(),
            inconsistent: false,
            rng: ChaCha8Rng::seed_from_u64(0),
            random_freq: 0.0,
            phase_saving: false,
            deadline: None,
            conflicts: 0,
            decisions: 0,
        }
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    pub fn new_var(&mut self) -> u32 {
        let v = self.value.len() as u32;
        self.value.push(None);
        self.level.push(0);
        self.reason.push(NO_REASON);
        self.phase.push(true);
        self.activity.push(0.0);
        self.seen.push(false);
        self.watches.push(Vec::new());
        self.watches.push(Vec::new());
        self.heap.insert(v, &self.activity);
        v
    }

    pub fn lit_value(&self, l: Lit) -> Option<bool> {
        self.value[l.var() as usize].map(|b| b != l.is_neg())
    }

    pub fn var_value(&self, v: u32) -> Option<bool> {
        self.value[v as usize]
    }

    fn decision_level(&self) -> u32 {
        self.trail_lim.len() as u32
    }

    /// Adds a permanent clause. The solver is brought back to level 0 first.
    pub fn add_clause(&mut self, lits: &[Lit]) {
        self.backtrack(0);
        if self.inconsistent {
            return;
        }
        let mut c: Vec<Lit> = Vec::with_capacity(lits.len());
        for &l in lits {
            match self.lit_value(l) {
                Some(true) => return,
                Some(false) => {}
                None => {
                    if c.contains(&!l) {
                        return;
                    }
                    if !c.contains(&l) {
                        c.push(l);
                    }
                }
            }
        }
        match c.len() {
            0 => self.inconsistent = true,
            1 => {
                self.enqueue(c[0], NO_REASON);
                if let Propagation::Conflict(_) = self.propagate() {
                    self.inconsistent = true;
                }
            }
            _ => {
                self.attach(c);
            }
        }
    }

    fn attach(&mut self, c: Vec<Lit>) -> u32 {
        let ci = self.clauses.len() as u32;
        self.watches[c[0].index()].push(ci);
        self.watches[c[1].index()].push(ci);
        self.clauses.push(c);
        ci
    }

    fn enqueue(&mut self, l: Lit, reason: u32) {
        let v = l.var() as usize;
        debug_assert!(self.value[v].is_none());
        self.value[v] = Some(!l.is_neg());
        self.level[v] = self.decision_level();
        self.reason[v] = reason;
        self.trail.push(l);
    }

    fn propagate(&mut self) -> Propagation {
        while self.qhead < self.trail.len() {
            let p = self.trail[self.qhead];
            let pos = self.qhead;
            self.qhead += 1;
            if let Err(expl) = self.theory.assign(p, pos) {
                let mut c: Vec<Lit> = expl.into_iter().map(|l| !l).collect();
                c.sort();
                c.dedup();
                if c.is_empty() {
                    self.inconsistent = true;
                    return Propagation::Conflict(NO_REASON);
                }
                // Conflict clauses must contain `!p`; the theory only objects
                // to what it has just seen.
                if c.len() == 1 {
                    let ci = self.clauses.len() as u32;
                    self.clauses.push(c);
                    return Propagation::Conflict(ci);
                }
                // Watch the two literals assigned last.
                c.sort_by_key(|l| std::cmp::Reverse(self.level[l.var() as usize]));
                let ci = self.attach(c);
                return Propagation::Conflict(ci);
            }
            let false_lit = !p;
            let mut ws = std::mem::take(&mut self.watches[false_lit.index()]);
            let mut i = 0;
            let mut j = 0;
            let mut conflict = None;
            while i < ws.len() {
                let ci = ws[i];
                i += 1;
                let c = &mut self.clauses[ci as usize];
                if c[0] == false_lit {
                    c.swap(0, 1);
                }
                let first = c[0];
                if self.value[first.var() as usize].map(|b| b != first.is_neg()) == Some(true) {
                    ws[j] = ci;
                    j += 1;
                    continue;
                }
                let mut moved = false;
                for k in 2..c.len() {
                    let l = c[k];
                    if self.value[l.var() as usize].map(|b| b != l.is_neg()) != Some(false) {
                        c.swap(1, k);
                        self.watches[c[1].index()].push(ci);
                        moved = true;
                        break;
                    }
                }
                if moved {
                    continue;
                }
                ws[j] = ci;
                j += 1;
                match self.lit_value(first) {
                    Some(false) => {
                        conflict = Some(ci);
                        while i < ws.len() {
                            ws[j] = ws[i];
                            j += 1;
                            i += 1;
                        }
                    }
                    _ => self.enqueue(first, ci),
                }
            }
            ws.truncate(j);
            // Watches pushed for `false_lit` during the scan cannot exist
            // (a clause never watches the same literal twice), so overwrite.
            let extra = std::mem::replace(&mut self.watches[false_lit.index()], ws);
            self.watches[false_lit.index()].extend(extra);
            if let Some(ci) = conflict {
                self.qhead = self.trail.len();
                return Propagation::Conflict(ci);
            }
        }
        Propagation::Ok
    }

    fn backtrack(&mut self, lvl: u32) {
        if self.decision_level() <= lvl {
            return;
        }
        let lim = self.trail_lim[lvl as usize];
        for idx in (lim..self.trail.len()).rev() {
            let l = self.trail[idx];
            let v = l.var();
            if self.phase_saving {
                self.phase[v as usize] = !l.is_neg();
            }
            self.value[v as usize] = None;
            self.reason[v as usize] = NO_REASON;
            self.heap.insert(v, &self.activity);
        }
        self.trail.truncate(lim);
        self.trail_lim.truncate(lvl as usize);
        self.qhead = self.qhead.min(lim);
        self.theory.backtrack(lim);
    }

    fn bump(&mut self, v: u32) {
        self.activity[v as usize] += self.var_inc;
        if self.activity[v as usize] > 1e100 {
            for a in self.activity.iter_mut() {
                *a *= 1e-100;
            }
            self.var_inc *= 1e-100;
        }
        self.heap.bumped(v, &self.activity);
    }

    /// First-UIP analysis. Returns the learnt clause (asserting literal
    /// first) and the backjump level.
    fn analyze(&mut self, mut confl: u32) -> (Vec<Lit>, u32) {
        let mut learnt = vec![Lit(0)];
        let mut path = 0usize;
        let mut p: Option<Lit> = None;
        let mut idx = self.trail.len();
        let current = self.decision_level();
        loop {
            let clause = self.clauses[confl as usize].clone();
            for &q in &clause {
                if Some(q.var()) == p.map(|p| p.var()) {
                    continue;
                }
                let v = q.var() as usize;
                if !self.seen[v] && self.level[v] > 0 {
                    self.seen[v] = true;
                    self.bump(q.var());
                    if self.level[v] >= current {
                        path += 1;
                    } else {
                        learnt.push(q);
                    }
                }
            }
            loop {
                idx -= 1;
                if self.seen[self.trail[idx].var() as usize] {
                    break;
                }
            }
            let pl = self.trail[idx];
            self.seen[pl.var() as usize] = false;
            path -= 1;
            p = Some(pl);
            if path == 0 {
                break;
            }
            confl = self.reason[pl.var() as usize];
            debug_assert!(confl != NO_REASON);
        }
        learnt[0] = !p.unwrap();
        for l in &learnt[1..] {
            self.seen[l.var() as usize] = false;
        }
        let mut back = 0;
        if learnt.len() > 1 {
            let mut best = 1;
            for i in 2..learnt.len() {
                if self.level[learnt[i].var() as usize] > self.level[learnt[best].var() as usize] {
                    best = i;
                }
            }
            learnt.swap(1, best);
            back = self.level[learnt[1].var() as usize];
        }
        self.var_inc /= 0.95;
        (learnt, back)
    }

    /// Handles a conflict. Returns false when the formula is refuted.
    fn resolve_conflict(&mut self, ci: u32) -> bool {
        self.conflicts += 1;
        if ci == NO_REASON || self.decision_level() == 0 {
            self.inconsistent = true;
            return false;
        }
        let max_level = self.clauses[ci as usize]
            .iter()
            .map(|l| self.level[l.var() as usize])
            .max()
            .unwrap_or(0);
        if max_level == 0 {
            self.inconsistent = true;
            return false;
        }
        if max_level < self.decision_level() {
            self.backtrack(max_level);
        }
        let (learnt, back) = self.analyze(ci);
        self.backtrack(back);
        if learnt.len() == 1 {
            self.enqueue(learnt[0], NO_REASON);
        } else {
            let l0 = learnt[0];
            let ci = self.attach(learnt);
            self.enqueue(l0, ci);
        }
        true
    }

    fn pick_branch(&mut self) -> Option<Lit> {
        if self.random_freq > 0.0 && self.rng.gen_bool(self.random_freq) {
            let n = self.value.len();
            if n > 0 {
                let v = self.rng.gen_range(0..n);
                if self.value[v].is_none() {
                    return Some(Lit::new(v as u32, !self.phase[v]));
                }
            }
        }
        while let Some(v) = self.heap.pop(&self.activity) {
            if self.value[v as usize].is_none() {
                return Some(Lit::new(v, !self.phase[v as usize]));
            }
        }
        None
    }

    fn out_of_time(&self) -> bool {
        matches!(self.deadline, Some(d) if Instant::now() >= d)
    }

    /// Searches for a total assignment satisfying all clauses, the theory and
    /// the assumptions. On `Sat` the assignment stays readable until the next
    /// call that modifies the solver.
    pub fn solve(&mut self, assumptions: &[Lit]) -> Status {
        self.backtrack(0);
        if self.inconsistent {
            return Status::Unsat;
        }
        if let Propagation::Conflict(_) = self.propagate() {
            self.inconsistent = true;
            return Status::Unsat;
        }
        if self.out_of_time() {
            return Status::Interrupted;
        }
        let mut restart_idx = 0u32;
        let mut budget = luby(restart_idx) * 100;
        let mut since_restart = 0u64;
        loop {
            match self.propagate() {
                Propagation::Conflict(ci) => {
                    if !self.resolve_conflict(ci) {
                        return Status::Unsat;
                    }
                    since_restart += 1;
                    if self.conflicts % 32 == 0 && self.out_of_time() {
                        self.backtrack(0);
                        return Status::Interrupted;
                    }
                }
                Propagation::Ok => {
                    if since_restart >= budget {
                        since_restart = 0;
                        restart_idx += 1;
                        budget = luby(restart_idx) * 100;
                        self.backtrack(0);
                        continue;
                    }
                    let dl = self.decision_level() as usize;
                    if dl < assumptions.len() {
                        let a = assumptions[dl];
                        match self.lit_value(a) {
                            Some(true) => {
                                self.trail_lim.push(self.trail.len());
                            }
                            Some(false) => {
                                self.backtrack(0);
                                return Status::Unsat;
                            }
                            None => {
                                self.trail_lim.push(self.trail.len());
                                self.enqueue(a, NO_REASON);
                            }
                        }
                        continue;
                    }
                    self.decisions += 1;
                    if self.decisions % 1024 == 0 && self.out_of_time() {
                        self.backtrack(0);
                        return Status::Interrupted;
                    }
                    match self.pick_branch() {
                        None => return Status::Sat,
                        Some(l) => {
                            self.trail_lim.push(self.trail.len());
                            self.enqueue(l, NO_REASON);
                        }
                    }
                }
            }
        }
    }
}

fn luby(i: u32) -> u64 {
    // Sequence 1,1,2,1,1,2,4,...
    let mut size = 1u64;
    let mut seq = 0u32;
    while size < u64::from(i) + 1 {
        seq += 1;
        size = 2 * size + 1;
    }
    let mut x = u64::from(i);
    while size - 1 != x {
        size = (size - 1) >> 1;
        seq -= 1;
        x %= size;
    }
    1u64 << seq
}
