//! Primal network simplex for min-cost flow with real-valued capacities.
//!
//! The daily arbitrage subproblem at a fixed degradation price is a
//! transshipment problem over a time-expanded graph (one storage chain per
//! linearization segment, one charge hub and one discharge hub per
//! interval). This module solves that class of problem exactly, using a
//! strongly feasible spanning tree rooted at an artificial node and block
//! search pricing.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
struct Arc {
    from: usize,
    to: usize,
    cap: f64,
    cost: f64,
}

/// A directed network with node supplies (positive = source).
#[derive(Debug, Clone, Default)]
pub struct FlowNetwork {
    supply: Vec<f64>,
    arcs: Vec<Arc>,
}

#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub flow: Vec<f64>,
    pub cost: f64,
    pub pivots: usize,
}

const STATE_UPPER: i8 = -1;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const NONE: usize = usize::MAX;

impl FlowNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_capacity(nodes: usize, arcs: usize) -> Self {
        Self {
            supply: Vec::with_capacity(nodes),
            arcs: Vec::with_capacity(arcs),
        }
    }

    pub fn add_node(&mut self, supply: f64) -> usize {
        self.supply.push(supply);
        self.supply.len() - 1
    }

    pub fn set_supply(&mut self, node: usize, supply: f64) {
        self.supply[node] = supply;
    }

    /// Adds an arc with capacity `cap` (use `f64::INFINITY` for none) and
    /// per-unit `cost`; returns its index.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64, cost: f64) -> usize {
        debug_assert!(from < self.supply.len() && to < self.supply.len());
        debug_assert!(cap >= 0.0);
        self.arcs.push(Arc { from, to, cap, cost });
        self.arcs.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.supply.len()
    }

    pub fn arc_count(&self) -> usize {
        self.arcs.len()
    }

    /// Minimizes total cost subject to flow conservation and `0 <= flow <= cap`.
    pub fn solve(&self) -> Result<FlowSolution> {
        Simplex::new(self).run()
    }
}

struct Simplex {
    n: usize,
    root: usize,
    // arcs [0, m_real) are the caller's, the rest are artificial root links
    m_real: usize,
    from: Vec<usize>,
    to: Vec<usize>,
    cap: Vec<f64>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<i8>,
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    depth: Vec<usize>,
    first_child: Vec<usize>,
    next_sib: Vec<usize>,
    prev_sib: Vec<usize>,
    eps: f64,
    block: usize,
    next_arc: usize,
    stack: Vec<usize>,
    path: Vec<usize>,
}

impl Simplex {
    fn new(net: &FlowNetwork) -> Self {
        let n = net.supply.len();
        let m_real = net.arcs.len();
        let m = m_real + n;
        let root = n;
        let mut s = Simplex {
            n,
            root,
            m_real,
            from: Vec::with_capacity(m),
            to: Vec::with_capacity(m),
            cap: Vec::with_capacity(m),
            cost: Vec::with_capacity(m),
            flow: vec![0.0; m],
            state: vec![STATE_LOWER; m],
            pi: vec![0.0; n + 1],
            parent: vec![NONE; n + 1],
            pred: vec![NONE; n + 1],
            depth: vec![0; n + 1],
            first_child: vec![NONE; n + 1],
            next_sib: vec![NONE; n + 1],
            prev_sib: vec![NONE; n + 1],
            eps: 0.0,
            block: ((m as f64).sqrt() as usize).max(10),
            next_arc: 0,
            stack: Vec::new(),
            path: Vec::new(),
        };
        let mut max_cost: f64 = 0.0;
        for a in &net.arcs {
            s.from.push(a.from);
            s.to.push(a.to);
            s.cap.push(a.cap);
            s.cost.push(a.cost);
            max_cost = max_cost.max(a.cost.abs());
        }
        let art = (max_cost + 1.0) * (n as f64 + 1.0);
        s.eps = 1e-11 * (max_cost + 1.0);
        for v in 0..n {
            let e = m_real + v;
            let sup = net.supply[v];
            if sup >= 0.0 {
                s.from.push(v);
                s.to.push(root);
                s.flow[e] = sup;
                s.pi[v] = -art;
            } else {
                s.from.push(root);
                s.to.push(v);
                s.flow[e] = -sup;
                s.pi[v] = art;
            }
            s.cap.push(f64::INFINITY);
            s.cost.push(art);
            s.state[e] = STATE_TREE;
            s.parent[v] = root;
            s.pred[v] = e;
            s.depth[v] = 1;
            s.link_child(root, v);
        }
        s
    }

    fn link_child(&mut self, p: usize, c: usize) {
        let head = self.first_child[p];
        self.next_sib[c] = head;
        self.prev_sib[c] = NONE;
        if head != NONE {
            self.prev_sib[head] = c;
        }
        self.first_child[p] = c;
    }

    fn unlink_child(&mut self, p: usize, c: usize) {
        let (prev, next) = (self.prev_sib[c], self.next_sib[c]);
        if prev != NONE {
            self.next_sib[prev] = next;
        } else {
            self.first_child[p] = next;
        }
        if next != NONE {
            self.prev_sib[next] = prev;
        }
        self.next_sib[c] = NONE;
        self.prev_sib[c] = NONE;
    }

    #[inline]
    fn reduced_cost(&self, a: usize) -> f64 {
        self.cost[a] + self.pi[self.from[a]] - self.pi[self.to[a]]
    }

    fn find_entering(&mut self) -> Option<usize> {
        let m = self.m_real;
        if m == 0 {
            return None;
        }
        let mut best = NONE;
        let mut best_val = -self.eps;
        let mut count = 0;
        let mut a = self.next_arc;
        for _ in 0..m {
            let st = self.state[a];
            if st != STATE_TREE {
                let v = st as f64 * self.reduced_cost(a);
                if v < best_val {
                    best_val = v;
                    best = a;
                }
            }
            count += 1;
            a += 1;
            if a == m {
                a = 0;
            }
            if count >= self.block {
                if best != NONE {
                    break;
                }
                count = 0;
            }
        }
        self.next_arc = a;
        (best != NONE).then_some(best)
    }

    /// Residual capacity of the tree arc above `u` for flow moving toward
    /// the root (`up == true`) or away from it.
    #[inline]
    fn residual(&self, u: usize, up: bool) -> f64 {
        let e = self.pred[u];
        let points_up = self.from[e] == u;
        if points_up == up {
            self.cap[e] - self.flow[e]
        } else {
            self.flow[e]
        }
    }

    #[inline]
    fn push(&mut self, u: usize, up: bool, delta: f64) {
        let e = self.pred[u];
        let points_up = self.from[e] == u;
        if points_up == up {
            self.flow[e] += delta;
        } else {
            self.flow[e] -= delta;
            if self.flow[e] < 0.0 {
                self.flow[e] = 0.0;
            }
        }
    }

    fn find_join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] > self.depth[v] {
                u = self.parent[u];
            } else if self.depth[v] > self.depth[u] {
                v = self.parent[v];
            } else {
                u = self.parent[u];
                v = self.parent[v];
            }
        }
        u
    }

    fn pivot(&mut self, entering: usize) {
        let (first, second) = if self.state[entering] == STATE_LOWER {
            (self.from[entering], self.to[entering])
        } else {
            (self.to[entering], self.from[entering])
        };
        let join = self.find_join(first, second);

        // cycle orientation: join -> first (down), first -> second (entering), second -> join (up)
        let mut delta = self.cap[entering];
        let mut leaving_at = NONE;
        let mut side = 0u8;
        let mut u = first;
        while u != join {
            let d = self.residual(u, false);
            if d < delta {
                delta = d;
                leaving_at = u;
                side = 1;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            let d = self.residual(u, true);
            if d <= delta {
                delta = d;
                leaving_at = u;
                side = 2;
            }
            u = self.parent[u];
        }

        if delta.is_infinite() {
            // only possible with a negative-cost cycle of unbounded arcs
            delta = 0.0;
        }

        if delta > 0.0 {
            let sign = self.state[entering] as f64;
            self.flow[entering] += sign * delta;
            let mut u = first;
            while u != join {
                self.push(u, false, delta);
                u = self.parent[u];
            }
            let mut u = second;
            while u != join {
                self.push(u, true, delta);
                u = self.parent[u];
            }
        }

        if side == 0 {
            // entering arc saturates before any tree arc blocks
            if self.state[entering] == STATE_LOWER {
                self.flow[entering] = self.cap[entering];
                self.state[entering] = STATE_UPPER;
            } else {
                self.flow[entering] = 0.0;
                self.state[entering] = STATE_LOWER;
            }
            return;
        }

        let leaving = self.pred[leaving_at];
        let (u_in, v_in) = if side == 1 { (first, second) } else { (second, first) };

        // leaving arc drops to a bound
        let was_up = side == 2;
        let points_up = self.from[leaving] == leaving_at;
        if points_up == was_up {
            self.flow[leaving] = self.cap[leaving];
            self.state[leaving] = STATE_UPPER;
        } else {
            self.flow[leaving] = 0.0;
            self.state[leaving] = STATE_LOWER;
        }
        self.state[entering] = STATE_TREE;

        // reverse parent pointers along u_in .. leaving_at
        self.path.clear();
        let mut w = u_in;
        loop {
            self.path.push(w);
            if w == leaving_at {
                break;
            }
            w = self.parent[w];
        }
        let old_parent_of_top = self.parent[leaving_at];
        self.unlink_child(old_parent_of_top, leaving_at);
        for k in (1..self.path.len()).rev() {
            let upper = self.path[k];
            let lower = self.path[k - 1];
            self.unlink_child(upper, lower);
        }
        // top-down so each pred is read before it is overwritten
        for k in (1..self.path.len()).rev() {
            let lower = self.path[k - 1];
            let upper = self.path[k];
            self.pred[upper] = self.pred[lower];
            self.parent[upper] = lower;
            self.link_child(lower, upper);
        }
        self.parent[u_in] = v_in;
        self.pred[u_in] = entering;
        self.link_child(v_in, u_in);

        self.refresh_subtree(u_in);
    }

    fn refresh_subtree(&mut self, top: usize) {
        self.stack.clear();
        self.stack.push(top);
        while let Some(u) = self.stack.pop() {
            let p = self.parent[u];
            let e = self.pred[u];
            self.depth[u] = self.depth[p] + 1;
            self.pi[u] = if self.from[e] == u {
                self.pi[p] - self.cost[e]
            } else {
                self.pi[p] + self.cost[e]
            };
            let mut c = self.first_child[u];
            while c != NONE {
                self.stack.push(c);
                c = self.next_sib[c];
            }
        }
    }

    fn run(mut self) -> Result<FlowSolution> {
        let mut pivots = 0usize;
        let limit = 50 * (self.m_real + self.n + 10) + 100_000;
        while let Some(e) = self.find_entering() {
            self.pivot(e);
            pivots += 1;
            if pivots > limit {
                return Err(Error::NonConvergence {
                    iterations: pivots,
                    detail: format!(
                        "network simplex exceeded pivot limit ({} nodes, {} arcs)",
                        self.n, self.m_real
                    ),
                });
            }
        }
        let tol = 1e-9 * (1.0 + self.flow.iter().take(self.m_real).fold(0.0f64, |a, &b| a.max(b)));
        for v in 0..self.n {
            let e = self.m_real + v;
            if self.flow[e] > tol {
                return Err(Error::Infeasible(format!(
                    "node {v} cannot route {:.3e} units of supply",
                    self.flow[e]
                )));
            }
        }
        let _ = self.root;
        self.flow.truncate(self.m_real);
        let cost = self
            .flow
            .iter()
            .zip(&self.cost)
            .map(|(f, c)| f * c)
            .sum();
        Ok(FlowSolution {
            flow: self.flow,
            cost,
            pivots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_path() {
        let mut net = FlowNetwork::new();
        let a = net.add_node(3.0);
        let b = net.add_node(0.0);
        let c = net.add_node(-3.0);
        net.add_arc(a, b, f64::INFINITY, 1.0);
        net.add_arc(b, c, f64::INFINITY, 2.0);
        let sol = net.solve().unwrap();
        assert_eq!(sol.flow, vec![3.0, 3.0]);
        assert!((sol.cost - 9.0).abs() < 1e-12);
    }

    #[test]
    fn prefers_cheaper_route_until_capacity() {
        let mut net = FlowNetwork::new();
        let s = net.add_node(5.0);
        let t = net.add_node(-5.0);
        let cheap = net.add_arc(s, t, 2.0, 1.0);
        let dear = net.add_arc(s, t, f64::INFINITY, 4.0);
        let sol = net.solve().unwrap();
        assert!((sol.flow[cheap] - 2.0).abs() < 1e-12);
        assert!((sol.flow[dear] - 3.0).abs() < 1e-12);
        assert!((sol.cost - 14.0).abs() < 1e-12);
    }

    #[test]
    fn negative_cost_cycle_is_saturated() {
        let mut net = FlowNetwork::new();
        let a = net.add_node(0.0);
        let b = net.add_node(0.0);
        net.add_arc(a, b, 1.5, -3.0);
        net.add_arc(b, a, 2.0, 1.0);
        let sol = net.solve().unwrap();
        assert!((sol.cost + 3.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_supply_is_reported() {
        let mut net = FlowNetwork::new();
        let a = net.add_node(2.0);
        let b = net.add_node(-2.0);
        net.add_arc(a, b, 1.0, 0.0);
        assert!(matches!(net.solve(), Err(Error::Infeasible(_))));
    }

    /// Transportation problem small enough to enumerate vertices by hand.
    #[test]
    fn transportation_matches_hand_solution() {
        let mut net = FlowNetwork::new();
        let s1 = net.add_node(4.0);
        let s2 = net.add_node(6.0);
        let d1 = net.add_node(-5.0);
        let d2 = net.add_node(-5.0);
        net.add_arc(s1, d1, f64::INFINITY, 2.0);
        net.add_arc(s1, d2, f64::INFINITY, 3.0);
        net.add_arc(s2, d1, f64::INFINITY, 4.0);
        net.add_arc(s2, d2, f64::INFINITY, 1.0);
        // s1 -> d1 (4), s2 -> d1 (1), s2 -> d2 (5): 8 + 4 + 5
        let sol = net.solve().unwrap();
        assert!((sol.cost - 17.0).abs() < 1e-12);
    }
}
