//! Difference-logic theory over the reals with strict bounds.
//!
//! A constraint `x - y <= w` is an edge `y -> x` of weight `w`. Weights carry
//! an infinitesimal part so that the negation of `x - y <= c` is representable
//! as `y - x <= -c - δ`. Consistency is maintained incrementally: a potential
//! function is repaired Dijkstra-style after each edge insertion, and a
//! negative cycle is reported as a conflict.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::sat::{Lit, Theory};

pub const EPS: f64 = 1e-9;

/// `c + d·δ`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weight {
    pub c: f64,
    pub d: i64,
}

impl Weight {
    pub const ZERO: Weight = Weight { c: 0.0, d: 0 };

    pub fn new(c: f64, d: i64) -> Self {
        Weight { c, d }
    }

    pub fn add(self, o: Weight) -> Weight {
        Weight {
            c: self.c + o.c,
            d: self.d + o.d,
        }
    }

    pub fn sub(self, o: Weight) -> Weight {
        Weight {
            c: self.c - o.c,
            d: self.d - o.d,
        }
    }

    pub fn cmp_eps(self, o: Weight) -> Ordering {
        if self.c < o.c - EPS {
            Ordering::Less
        } else if self.c > o.c + EPS {
            Ordering::Greater
        } else {
            self.d.cmp(&o.d)
        }
    }

    pub fn lt(self, o: Weight) -> bool {
        self.cmp_eps(o) == Ordering::Less
    }

    /// Weight of the complementary constraint: `¬(x - y <= w)` is
    /// `y - x <= -w - δ`.
    pub fn complement(self) -> Weight {
        Weight {
            c: -self.c,
            d: -self.d - 1,
        }
    }
}

#[derive(Debug, Clone)]
struct Edge {
    from: u32,
    to: u32,
    w: Weight,
    /// Literal whose truth activates the edge; `None` for static edges.
    lit: Option<Lit>,
}

#[derive(PartialEq)]
struct Entry(Weight, u32);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        // Min-heap on the weight.
        other
            .0
            .cmp_eps(self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

/// Node 0 is the reference point `zero`.
pub struct DiffLogic {
    edges: Vec<Edge>,
    out: Vec<Vec<u32>>,
    pi: Vec<Weight>,
    /// Per Boolean variable: edges for the positive and the negative literal.
    atoms: Vec<Option<(u32, u32)>>,
    /// Activated atom edges with the trail position that activated them.
    active: Vec<(u32, usize)>,
    // scratch
    gamma: Vec<Weight>,
    pred: Vec<u32>,
    done: Vec<bool>,
    touched: Vec<u32>,
}

impl Default for DiffLogic {
    fn default() -> Self {
        Self::new()
    }
}

impl DiffLogic {
    pub fn new() -> Self {
        let mut dl = DiffLogic {
            edges: Vec::new(),
            out: Vec::new(),
            pi: Vec::new(),
            atoms: Vec::new(),
            active: Vec::new(),
            gamma: Vec::new(),
            pred: Vec::new(),
            done: Vec::new(),
            touched: Vec::new(),
        };
        dl.new_node();
        dl
    }

    pub fn new_node(&mut self) -> u32 {
        let n = self.out.len() as u32;
        self.out.push(Vec::new());
        self.pi.push(Weight::ZERO);
        self.gamma.push(Weight::ZERO);
        self.pred.push(u32::MAX);
        self.done.push(false);
        n
    }

    /// Adds `to - from <= w` permanently. Only valid at decision level 0.
    /// Returns false if this makes the static part inconsistent.
    pub fn add_static(&mut self, from: u32, to: u32, w: Weight) -> bool {
        let e = self.edges.len() as u32;
        self.edges.push(Edge {
            from,
            to,
            w,
            lit: None,
        });
        self.activate(e).is_ok()
    }

    /// Registers Boolean variable `var` as the atom `to - from <= w`.
    pub fn add_atom(&mut self, var: u32, from: u32, to: u32, w: Weight) {
        let pos = self.edges.len() as u32;
        self.edges.push(Edge {
            from,
            to,
            w,
            lit: Some(Lit::pos(var)),
        });
        self.edges.push(Edge {
            from: to,
            to: from,
            w: w.complement(),
            lit: Some(Lit::new(var, true)),
        });
        while self.atoms.len() <= var as usize {
            self.atoms.push(None);
        }
        self.atoms[var as usize] = Some((pos, pos + 1));
    }

    fn activate(&mut self, e: u32) -> Result<(), Vec<u32>> {
        let Edge { from: u, to: v, w, .. } = self.edges[e as usize].clone();
        self.out[u as usize].push(e);
        let start = self.pi[u as usize].add(w).sub(self.pi[v as usize]);
        if !start.lt(Weight::ZERO) {
            return Ok(());
        }
        let mut heap = BinaryHeap::new();
        self.gamma[v as usize] = start;
        self.pred[v as usize] = e;
        self.touched.push(v);
        heap.push(Entry(start, v));
        let mut updated: Vec<(u32, Weight)> = Vec::new();
        let mut result = Ok(());
        while let Some(Entry(g, s)) = heap.pop() {
            if self.done[s as usize] || g.cmp_eps(self.gamma[s as usize]) != Ordering::Equal {
                continue;
            }
            if s == u {
                // Walk predecessors back to v to collect the cycle.
                let mut cycle = vec![e];
                let mut x = u;
                while x != v {
                    let pe = self.pred[x as usize];
                    cycle.push(pe);
                    x = self.edges[pe as usize].from;
                }
                result = Err(cycle);
                break;
            }
            self.done[s as usize] = true;
            updated.push((s, self.pi[s as usize]));
            self.pi[s as usize] = self.pi[s as usize].add(g);
            let ps = self.pi[s as usize];
            for i in 0..self.out[s as usize].len() {
                let oe = self.out[s as usize][i];
                let Edge { to: t, w: ow, .. } = self.edges[oe as usize];
                if self.done[t as usize] {
                    continue;
                }
                let cand = ps.add(ow).sub(self.pi[t as usize]);
                if cand.lt(self.gamma[t as usize]) {
                    self.touched.push(t);
                    self.gamma[t as usize] = cand;
                    self.pred[t as usize] = oe;
                    heap.push(Entry(cand, t));
                }
            }
        }
        for &t in &self.touched {
            self.gamma[t as usize] = Weight::ZERO;
            self.pred[t as usize] = u32::MAX;
            self.done[t as usize] = false;
        }
        self.touched.clear();
        if result.is_err() {
            for (s, old) in updated {
                self.pi[s as usize] = old;
            }
            self.out[u as usize].pop();
        }
        result
    }

    /// Least solution of the active constraints with `zero = 0`, as pairs
    /// `(c, d)` meaning `c + d·δ`.
    fn least_solution(&self) -> Vec<Weight> {
        // dist(x -> zero) via Bellman-Ford on reversed edges.
        let n = self.out.len();
        let mut into: Vec<Vec<u32>> = vec![Vec::new(); n];
        for es in &self.out {
            for &e in es {
                into[self.edges[e as usize].to as usize].push(e);
            }
        }
        let mut dist: Vec<Option<Weight>> = vec![None; n];
        dist[0] = Some(Weight::ZERO);
        let mut queue = std::collections::VecDeque::new();
        let mut inq = vec![false; n];
        queue.push_back(0u32);
        inq[0] = true;
        while let Some(x) = queue.pop_front() {
            inq[x as usize] = false;
            let dx = dist[x as usize].unwrap();
            for &e in &into[x as usize] {
                let y = self.edges[e as usize].from;
                let cand = dx.add(self.edges[e as usize].w);
                let better = match dist[y as usize] {
                    None => true,
                    Some(dy) => cand.lt(dy),
                };
                if better {
                    dist[y as usize] = Some(cand);
                    if !inq[y as usize] {
                        inq[y as usize] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        dist.into_iter()
            .map(|d| {
                let d = d.unwrap_or(Weight::ZERO);
                Weight::new(-d.c, -d.d)
            })
            .collect()
    }

    /// Concrete values for every node (index 0 is `zero` = 0).
    pub fn values(&self) -> Vec<f64> {
        let sol = self.least_solution();
        let mut delta: f64 = 1.0;
        for es in &self.out {
            for &e in es {
                let Edge { from, to, w, .. } = self.edges[e as usize];
                let a = sol[to as usize].c - sol[from as usize].c;
                let b = (sol[to as usize].d - sol[from as usize].d) as f64;
                // need a + bδ <= w.c + w.d δ
                let slack = w.c - a;
                let coef = b - w.d as f64;
                if coef > 0.0 && slack > EPS {
                    delta = delta.min(slack / coef);
                }
            }
        }
        sol.iter().map(|s| s.c + s.d as f64 * delta).collect()
    }
}

impl Theory for DiffLogic {
    fn assign(&mut self, lit: Lit, trail_pos: usize) -> Result<(), Vec<Lit>> {
        let Some(Some((pe, ne))) = self.atoms.get(lit.var() as usize).copied() else {
            return Ok(());
        };
        let e = if lit.is_neg() { ne } else { pe };
        match self.activate(e) {
            Ok(()) => {
                self.active.push((e, trail_pos));
                Ok(())
            }
            Err(cycle) => Err(cycle
                .into_iter()
                .filter_map(|e| self.edges[e as usize].lit)
                .collect()),
        }
    }

    fn backtrack(&mut self, trail_len: usize) {
        while let Some(&(e, pos)) = self.active.last() {
            if pos < trail_len {
                break;
            }
            self.active.pop();
            let from = self.edges[e as usize].from;
            let popped = self.out[from as usize].pop();
            debug_assert_eq!(popped, Some(e));
        }
    }
}
