//! Network simplex on a spanning tree, specialized to uncapacitated
//! min-cost flow (the balanced transportation problem plus an artificial
//! root).
//!
//! The tree is kept as parent / predecessor-arc / child-list arrays plus
//! per-node subtree sizes. A pivot walks the two tree paths of the entering
//! arc's cycle, applies the blocking flow change, reverses the parent chain
//! between the entering endpoint and the leaving arc, and patches subtree
//! sizes along the affected paths — O(cycle) work however the tree is
//! shaped. Dual potentials are never updated inside a pivot: the spanning
//! tree itself encodes them (signed cost sums along root paths), entering
//! candidates found through a stale potential snapshot are validated
//! against the tree before pivoting, and the snapshot refreshes whenever
//! validations start failing.
//!
//! Pivoting is Dantzig-style (most negative reduced cost) restricted to a
//! moving block of arcs; a long degenerate stretch switches to Bland's rule
//! (first eligible arc in index order) until the objective moves again,
//! which prevents cycling. Costs are `f64`; an arc only enters when its
//! reduced cost clears `1e-12` relative to the largest arc cost, and the
//! final flows are re-derived exactly from the tree so marginals are
//! conserved to machine precision.

use alloc::vec::Vec;
#[allow(unused_imports)] // f64 float methods come from the trait in no_std builds
use num_traits::Float;

use crate::error::{Error, Result};

const RELATIVE_TOLERANCE: f64 = 1e-12;
/// Degenerate pivots tolerated before switching to Bland's rule.
const BLAND_TRIGGER: usize = 4096;

const NONE: u32 = u32::MAX;

/// Outcome summary of an optimization run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexStats {
    pub pivots: u64,
    /// Mass left on artificial root arcs (feasibility residual).
    pub artificial_mass: f64,
    /// Cumulative work counters: cycle-walk steps, potential-shift nodes,
    /// entering-search arc scans.
    pub cycle_steps: u64,
    pub shifted_nodes: u64,
    pub scanned_arcs: u64,
    pub degenerate_pivots: u64,
    pub bland_pivots: u64,
    /// log2 histogram of potential-shift sizes
    pub shift_hist: [u64; 24],
}

pub struct NetworkSimplex {
    node_count: usize,
    /// Node supplies; positive = source, negative = sink. The root absorbs
    /// the balancing residual.
    supply: Vec<f64>,

    arc_src: Vec<u32>,
    arc_dst: Vec<u32>,
    arc_cost: Vec<f64>,
    arc_flow: Vec<f64>,
    arc_in_tree: Vec<bool>,

    // spanning tree over node_count + 1 nodes (the extra one is the root)
    parent: Vec<u32>,
    pred_arc: Vec<u32>,
    first_child: Vec<u32>,
    next_sib: Vec<u32>,
    prev_sib: Vec<u32>,
    /// subtree size including the node itself
    succ_num: Vec<u32>,
    pot: Vec<f64>,

    /// First artificial arc index (artificials live at the tail).
    artificial_base: usize,
    max_cost: f64,
    block_cursor: usize,
    initialized: bool,
    pivots: u64,
    cycle_steps: u64,
    shifted_nodes: u64,
    scanned_arcs: u64,
    degenerate_pivots: u64,
    bland_pivots: u64,
    refreshes: u64,
    shift_hist: [u64; 24],
    stack: Vec<u32>,
    /// Optional starting basis: real arc ids forming a spanning tree, in an
    /// order where every arc attaches one new node.
    warm_tree: Vec<u32>,
}

impl NetworkSimplex {
    /// `supply[v] > 0` for sources, `< 0` for sinks. Supplies should sum to
    /// (numerically) zero; any residual ends up on the root arcs and is
    /// reported as `artificial_mass`.
    pub fn new(supply: Vec<f64>) -> Self {
        let node_count = supply.len();
        NetworkSimplex {
            node_count,
            supply,
            arc_src: Vec::new(),
            arc_dst: Vec::new(),
            arc_cost: Vec::new(),
            arc_flow: Vec::new(),
            arc_in_tree: Vec::new(),
            parent: Vec::new(),
            pred_arc: Vec::new(),
            first_child: Vec::new(),
            next_sib: Vec::new(),
            prev_sib: Vec::new(),
            succ_num: Vec::new(),
            pot: Vec::new(),
            artificial_base: usize::MAX,
            max_cost: 0.0,
            block_cursor: 0,
            initialized: false,
            pivots: 0,
            cycle_steps: 0,
            shifted_nodes: 0,
            scanned_arcs: 0,
            degenerate_pivots: 0,
            bland_pivots: 0,
            refreshes: 0,
            shift_hist: [0; 24],
            stack: Vec::new(),
            warm_tree: Vec::new(),
        }
    }

    /// Start from the forest formed by these real arcs instead of the
    /// artificial star. The arcs must be ordered so each attaches at least
    /// one new node (an arc with two new endpoints roots a component at its
    /// source); every component root hangs on its artificial arc, directed
    /// by the component's net supply. Flows derived from the forest must be
    /// nonnegative, which nearest-assignment and northwest-corner
    /// constructions guarantee. Must be called before the first
    /// optimization.
    pub fn warm_start_forest(&mut self, arcs_in_build_order: &[usize]) {
        debug_assert!(!self.initialized);
        self.warm_tree = arcs_in_build_order.iter().map(|&a| a as u32).collect();
    }

    /// Register a real arc before or between optimization runs; returns its
    /// id (stable for pre-initialization arcs).
    pub fn add_arc(&mut self, src: usize, dst: usize, cost: f64) -> usize {
        debug_assert!(src < self.node_count && dst < self.node_count);
        debug_assert!(cost.is_finite());
        self.max_cost = self.max_cost.max(cost.abs());
        if self.initialized {
            let at = self.artificial_base;
            self.arc_src.insert(at, src as u32);
            self.arc_dst.insert(at, dst as u32);
            self.arc_cost.insert(at, cost);
            self.arc_flow.insert(at, 0.0);
            self.arc_in_tree.insert(at, false);
            self.artificial_base += 1;
            // tree pred indices pointing at artificials shift by one
            for p in self.pred_arc.iter_mut() {
                if *p != NONE && (*p as usize) >= at {
                    *p += 1;
                }
            }
            at
        } else {
            self.arc_src.push(src as u32);
            self.arc_dst.push(dst as u32);
            self.arc_cost.push(cost);
            self.arc_flow.push(0.0);
            self.arc_in_tree.push(false);
            self.arc_src.len() - 1
        }
    }

    /// Bulk arc registration; cheaper than repeated single inserts once the
    /// solver is initialized.
    pub fn add_arcs(&mut self, arcs: &[(u32, u32, f64)]) {
        if arcs.is_empty() {
            return;
        }
        if !self.initialized {
            for &(s, t, c) in arcs {
                self.add_arc(s as usize, t as usize, c);
            }
            return;
        }
        let at = self.artificial_base;
        let k = arcs.len();
        // splice the block in one pass
        let splice = |vec_src: &mut Vec<u32>, f: &dyn Fn(usize) -> u32| {
            let tail: Vec<u32> = vec_src.split_off(at);
            vec_src.extend((0..k).map(f));
            vec_src.extend(tail);
        };
        splice(&mut self.arc_src, &|i| arcs[i].0);
        splice(&mut self.arc_dst, &|i| arcs[i].1);
        let tail: Vec<f64> = self.arc_cost.split_off(at);
        self.arc_cost.extend(arcs.iter().map(|a| a.2));
        self.arc_cost.extend(tail);
        let tail: Vec<f64> = self.arc_flow.split_off(at);
        self.arc_flow.extend(core::iter::repeat(0.0).take(k));
        self.arc_flow.extend(tail);
        let tail: Vec<bool> = self.arc_in_tree.split_off(at);
        self.arc_in_tree.extend(core::iter::repeat(false).take(k));
        self.arc_in_tree.extend(tail);
        self.artificial_base += k;
        for p in self.pred_arc.iter_mut() {
            if *p != NONE && (*p as usize) >= at {
                *p += k as u32;
            }
        }
        for &(_, _, c) in arcs {
            self.max_cost = self.max_cost.max(c.abs());
        }
    }

    pub fn potential(&self, node: usize) -> f64 {
        self.pot[node]
    }

    #[cfg(test)]
    pub fn flow(&self, arc: usize) -> f64 {
        self.arc_flow[arc]
    }

    fn tolerance(&self) -> f64 {
        RELATIVE_TOLERANCE * self.max_cost.max(1.0)
    }

    fn artificial_cost(&self) -> f64 {
        (1.0 + self.max_cost) * (self.node_count as f64 + 1.0)
    }

    /// Initial basis. Default: every node hangs on its artificial arc
    /// carrying `|supply|` (a star around the root). With a warm tree: the
    /// given real arcs span all nodes, the first introduced node anchors to
    /// the root through a zero-cost artificial, and every other artificial
    /// keeps its deterrent cost so it can never re-enter.
    fn initialize(&mut self) {
        let n = self.node_count;
        let root = n;
        self.artificial_base = self.arc_src.len();
        let big = self.artificial_cost();
        self.parent = alloc::vec![NONE; n + 1];
        self.pred_arc = alloc::vec![NONE; n + 1];
        self.first_child = alloc::vec![NONE; n + 1];
        self.next_sib = alloc::vec![NONE; n + 1];
        self.prev_sib = alloc::vec![NONE; n + 1];
        self.succ_num = alloc::vec![1; n + 1];
        self.pot = alloc::vec![0.0; n + 1];
        self.succ_num[root] = (n + 1) as u32;

        let warm = core::mem::take(&mut self.warm_tree);
        if warm.is_empty() {
            for v in 0..n {
                let (src, dst, pot) = if self.supply[v] >= 0.0 {
                    (v as u32, root as u32, -big)
                } else {
                    (root as u32, v as u32, big)
                };
                self.arc_src.push(src);
                self.arc_dst.push(dst);
                self.arc_cost.push(big);
                self.arc_flow.push(self.supply[v].abs());
                self.arc_in_tree.push(true);
                self.pred_arc[v] = (self.artificial_base + v) as u32;
                self.parent[v] = root as u32;
                self.pot[v] = pot;
                self.attach(v, root);
            }
            self.initialized = true;
            self.block_cursor = 0;
            return;
        }

        // build the forest by BFS over the warm arcs: any arc set without
        // cycles is accepted, in any order
        let mut adj_head = alloc::vec![NONE; n];
        let mut adj_next: Vec<u32> = alloc::vec![NONE; warm.len() * 2];
        let mut adj_node: Vec<u32> = alloc::vec![0; warm.len() * 2];
        let mut adj_arc: Vec<u32> = alloc::vec![0; warm.len() * 2];
        for (k, &arc) in warm.iter().enumerate() {
            let (s, t) = (self.arc_src[arc as usize], self.arc_dst[arc as usize]);
            let e0 = 2 * k;
            adj_node[e0] = t;
            adj_arc[e0] = arc;
            adj_next[e0] = adj_head[s as usize];
            adj_head[s as usize] = e0 as u32;
            let e1 = 2 * k + 1;
            adj_node[e1] = s;
            adj_arc[e1] = arc;
            adj_next[e1] = adj_head[t as usize];
            adj_head[t as usize] = e1 as u32;
        }
        let mut placed = alloc::vec![false; n];
        let mut component_root = alloc::vec![false; n];
        let mut build_order: Vec<u32> = Vec::with_capacity(n);
        let mut queue: Vec<u32> = Vec::new();
        for start in 0..n {
            if placed[start] {
                continue;
            }
            component_root[start] = true;
            placed[start] = true;
            build_order.push(start as u32);
            queue.clear();
            queue.push(start as u32);
            while let Some(node) = queue.pop() {
                let mut e = adj_head[node as usize];
                while e != NONE {
                    let other = adj_node[e as usize];
                    let arc = adj_arc[e as usize];
                    if !placed[other as usize] {
                        placed[other as usize] = true;
                        self.pred_arc[other as usize] = arc;
                        self.parent[other as usize] = node;
                        self.arc_in_tree[arc as usize] = true;
                        self.attach(other as usize, node as usize);
                        build_order.push(other);
                        queue.push(other);
                    } else {
                        debug_assert!(
                            self.pred_arc[node as usize] == arc
                                || self.pred_arc[other as usize] == arc
                                || !self.arc_in_tree[arc as usize],
                            "warm forest arc closes a cycle"
                        );
                    }
                    e = adj_next[e as usize];
                }
            }
        }
        // children-first accumulation of subtree sizes and net supplies
        let mut net = self.supply.clone();
        self.succ_num[root] = 1;
        for &nd in build_order.iter().rev() {
            let nd = nd as usize;
            if component_root[nd] {
                continue;
            }
            let p = self.parent[nd] as usize;
            self.succ_num[p] += self.succ_num[nd];
            net[p] += net[nd];
        }
        // artificial arcs; component roots enter the tree on theirs, with
        // the direction their net supply needs
        for v in 0..n {
            let excess = if component_root[v] { net[v] } else { self.supply[v] };
            let (src, dst) = if excess >= 0.0 {
                (v as u32, root as u32)
            } else {
                (root as u32, v as u32)
            };
            self.arc_src.push(src);
            self.arc_dst.push(dst);
            self.arc_cost.push(big);
            self.arc_flow.push(0.0);
            self.arc_in_tree.push(component_root[v]);
            if component_root[v] {
                self.pred_arc[v] = (self.artificial_base + v) as u32;
                self.parent[v] = root as u32;
                self.attach(v, root);
                self.succ_num[root] += self.succ_num[v];
            }
        }
        self.initialized = true;
        self.block_cursor = 0;
        self.recompute_potentials();
        self.recompute_flows();
    }

    /// Reduced cost against the (possibly stale) potential snapshot.
    #[inline]
    fn reduced_cost_snap(&self, a: usize) -> f64 {
        self.arc_cost[a] + self.pot[self.arc_src[a] as usize]
            - self.pot[self.arc_dst[a] as usize]
    }

    /// Exact potential read off the spanning tree: signed arc costs summed
    /// along the path to the root.
    fn pot_exact(&self, mut v: usize) -> f64 {
        let root = self.node_count;
        let mut acc = 0.0;
        while v != root {
            let arc = self.pred_arc[v] as usize;
            if self.arc_dst[arc] as usize == v {
                acc += self.arc_cost[arc];
            } else {
                acc -= self.arc_cost[arc];
            }
            v = self.parent[v] as usize;
        }
        acc
    }

    /// Exact reduced cost from the tree.
    #[inline]
    fn reduced_cost_exact(&self, a: usize) -> f64 {
        self.arc_cost[a] + self.pot_exact(self.arc_src[a] as usize)
            - self.pot_exact(self.arc_dst[a] as usize)
    }

    /// Most negative snapshot reduced cost within a moving block, validated
    /// against the tree; `None` once a sweep with fresh potentials yields
    /// nothing. Repeated validation failures refresh the snapshot.
    fn find_entering_block(&mut self) -> Option<usize> {
        let m = self.arc_src.len();
        if m == 0 {
            return None;
        }
        let block = ((m as f64).sqrt() as usize).clamp(64, 16_384);
        let tol = self.tolerance();
        let mut failures = 0usize;
        loop {
            let mut scanned = 0usize;
            let mut cursor = self.block_cursor % m;
            let mut candidate = NONE as usize;
            while scanned < m {
                let mut best = NONE as usize;
                let mut best_r = -tol;
                let stop = block.min(m - scanned);
                for _ in 0..stop {
                    let a = cursor;
                    cursor += 1;
                    if cursor == m {
                        cursor = 0;
                    }
                    if !self.arc_in_tree[a] {
                        let r = self.reduced_cost_snap(a);
                        if r < best_r {
                            best_r = r;
                            best = a;
                        }
                    }
                }
                scanned += stop;
                self.scanned_arcs += stop as u64;
                if best != NONE as usize {
                    candidate = best;
                    break;
                }
            }
            self.block_cursor = cursor;
            if candidate == NONE as usize {
                // nothing under the snapshot: certify with fresh potentials
                self.recompute_potentials();
                return self.find_entering_bland();
            }
            let (cs, cd) = (
                self.arc_src[candidate] as usize,
                self.arc_dst[candidate] as usize,
            );
            let (ps, pd) = (self.pot_exact(cs), self.pot_exact(cd));
            if self.arc_cost[candidate] + ps - pd < -tol {
                return Some(candidate);
            }
            // stale hit: repair the snapshot at the offending endpoints so
            // the scan stops re-proposing this arc
            self.pot[cs] = ps;
            self.pot[cd] = pd;
            failures += 1;
            if failures >= 16 {
                self.recompute_potentials();
                failures = 0;
            }
        }
    }

    /// First eligible arc in index order (Bland's anti-cycling rule),
    /// validated against the tree.
    fn find_entering_bland(&self) -> Option<usize> {
        let tol = self.tolerance();
        (0..self.arc_src.len()).find(|&a| {
            !self.arc_in_tree[a]
                && self.reduced_cost_snap(a) < -tol
                && self.reduced_cost_exact(a) < -tol
        })
    }

    /// Run pivots until dual feasible. May be called again after `add_arcs`.
    pub fn optimize(&mut self) -> Result<SimplexStats> {
        if !self.initialized {
            self.initialize();
        }
        let max_pivots: u64 = 400 * (self.node_count as u64 + 2)
            + 64 * (self.arc_src.len() as u64)
            + 1_000_000;
        let mut degenerate_run = 0usize;
        let mut local_pivots: u64 = 0;
        #[cfg(test)]
        let (mut t_enter, mut t_pivot) = (core::time::Duration::ZERO, core::time::Duration::ZERO);
        loop {
            let bland = degenerate_run >= BLAND_TRIGGER;
            #[cfg(test)]
            let t0 = std::time::Instant::now();
            let entering = if bland {
                self.find_entering_bland()
            } else {
                self.find_entering_block()
            };
            #[cfg(test)]
            {
                t_enter += t0.elapsed();
            }
            let Some(arc) = entering else { break };
            #[cfg(test)]
            let t1 = std::time::Instant::now();
            let moved = self.pivot(arc);
            #[cfg(test)]
            {
                t_pivot += t1.elapsed();
            }
            self.pivots += 1;
            local_pivots += 1;
            if bland {
                self.bland_pivots += 1;
            }
            if moved {
                degenerate_run = 0;
            } else {
                degenerate_run += 1;
                self.degenerate_pivots += 1;
            }
            if local_pivots > max_pivots {
                return Err(Error::NotConverged {
                    iterations: local_pivots as usize,
                });
            }
        }
        #[cfg(test)]
        if local_pivots > 20_000 {
            std::eprintln!(
                "  [opt] pivots={local_pivots} enter={t_enter:?} pivot={t_pivot:?} refreshes={}",
                self.refreshes
            );
        }
        // final certification: exact potentials, exact scans
        loop {
            self.recompute_potentials();
            let Some(arc) = self.find_entering_bland() else { break };
            self.pivot(arc);
            self.pivots += 1;
            local_pivots += 1;
            if local_pivots > max_pivots {
                return Err(Error::NotConverged {
                    iterations: local_pivots as usize,
                });
            }
        }
        self.recompute_flows();
        let artificial_mass: f64 = (self.artificial_base..self.arc_src.len())
            .map(|a| self.arc_flow[a])
            .sum();
        Ok(SimplexStats {
            pivots: self.pivots,
            artificial_mass,
            cycle_steps: self.cycle_steps,
            shifted_nodes: self.shifted_nodes,
            scanned_arcs: self.scanned_arcs,
            degenerate_pivots: self.degenerate_pivots,
            bland_pivots: self.bland_pivots,
            shift_hist: self.shift_hist,
        })
    }

    /// Objective over real arcs.
    #[cfg(test)]
    pub fn objective(&self) -> f64 {
        (0..self.artificial_base)
            .map(|a| self.arc_flow[a] * self.arc_cost[a])
            .sum()
    }

    /// Real arcs with strictly positive flow.
    pub fn support(&self) -> Vec<(usize, usize, f64)> {
        (0..self.artificial_base)
            .filter(|&a| self.arc_flow[a] > 0.0)
            .map(|a| {
                (
                    self.arc_src[a] as usize,
                    self.arc_dst[a] as usize,
                    self.arc_flow[a],
                )
            })
            .collect()
    }

    /// Largest reduced-cost violation over an arbitrary arc generator;
    /// used by tests as an optimality certificate.
    #[cfg(test)]
    pub fn dual_violation<I: Iterator<Item = (usize, usize, f64)>>(&self, arcs: I) -> f64 {
        let mut worst = 0.0f64;
        for (s, t, c) in arcs {
            let r = c + self.pot[s] - self.pot[t];
            if r < worst {
                worst = r;
            }
        }
        -worst
    }

    /// Pivot on the entering arc; returns whether mass actually moved
    /// (false for a degenerate step).
    fn pivot(&mut self, entering: usize) -> bool {
        let u = self.arc_src[entering] as usize;
        let v = self.arc_dst[entering] as usize;

        // join point of the tree paths: climb the smaller subtree
        let mut a = u;
        let mut b = v;
        while a != b {
            if self.succ_num[a] < self.succ_num[b] {
                a = self.parent[a] as usize;
            } else {
                b = self.parent[b] as usize;
            }
            self.cycle_steps += 1;
        }
        let join = a;

        // Conservation fixes the carry direction around the cycle: the
        // entering arc takes θ out of u, so the tree path feeds u from the
        // join (direction parent→child on the u side) and drains v towards
        // the join (child→parent on the v side). A tree arc blocks when its
        // orientation runs against the carry. Tie-break: the last blocking
        // arc along the cycle direction join→u→(e)→v→join, which keeps the
        // basis strongly feasible so degenerate runs stay short.
        let mut delta = f64::INFINITY;
        let mut leave = NONE as usize;
        let mut leave_child = NONE as usize;
        let mut leave_on_u_side = true;

        let mut x = u;
        while x != join {
            let arc = self.pred_arc[x] as usize;
            // carry direction parent→x; against iff the arc points upward;
            // this scan walks the cycle backwards, so ties keep the first
            // hit (the arc closest to u)
            let against = self.arc_src[arc] as usize == x;
            if against && self.arc_flow[arc] < delta {
                delta = self.arc_flow[arc];
                leave = arc;
                leave_child = x;
                leave_on_u_side = true;
            }
            x = self.parent[x] as usize;
        }
        let mut x = v;
        while x != join {
            let arc = self.pred_arc[x] as usize;
            // carry direction x→parent; against iff the arc points
            // downward; forward scan, so ties take the latest hit
            let against = self.arc_dst[arc] as usize == x;
            if against && self.arc_flow[arc] <= delta {
                delta = self.arc_flow[arc];
                leave = arc;
                leave_child = x;
                leave_on_u_side = false;
            }
            x = self.parent[x] as usize;
        }

        // apply the flow change
        if delta > 0.0 {
            self.arc_flow[entering] += delta;
            let mut x = u;
            while x != join {
                let arc = self.pred_arc[x] as usize;
                if self.arc_src[arc] as usize == x {
                    self.arc_flow[arc] -= delta;
                } else {
                    self.arc_flow[arc] += delta;
                }
                x = self.parent[x] as usize;
            }
            let mut x = v;
            while x != join {
                let arc = self.pred_arc[x] as usize;
                if self.arc_dst[arc] as usize == x {
                    self.arc_flow[arc] -= delta;
                } else {
                    self.arc_flow[arc] += delta;
                }
                x = self.parent[x] as usize;
            }
        }

        if leave == NONE as usize {
            // the arc digraph (sources → targets → nothing, root star) is
            // acyclic, so every cycle contains an against-arc
            unreachable!("unbounded pivot in a balanced transportation problem");
        }

        self.arc_in_tree[entering] = true;
        self.arc_in_tree[leave] = false;

        // the subtree under the leaving arc contains exactly one endpoint
        // of the entering arc; re-root it there and hang it on the other
        let (sub_entry, attach_to) = if leave_on_u_side { (u, v) } else { (v, u) };
        let t2_size = self.succ_num[leave_child];

        // old ancestors of the leaving child lose the subtree
        let mut x = self.parent[leave_child] as usize;
        loop {
            self.succ_num[x] -= t2_size;
            if x == self.node_count {
                break;
            }
            x = self.parent[x] as usize;
        }

        // reverse the parent chain sub_entry → leave_child, recording the
        // old subtree sizes to rewrite them under the new orientation
        let mut path: Vec<(usize, u32)> = Vec::new();
        let mut node = sub_entry;
        loop {
            path.push((node, self.succ_num[node]));
            if node == leave_child {
                break;
            }
            node = self.parent[node] as usize;
        }
        let mut new_parent = attach_to;
        let mut new_pred = entering;
        for i in 0..path.len() {
            let (node, _) = path[i];
            let old_parent = self.parent[node] as usize;
            let old_pred = self.pred_arc[node] as usize;
            self.detach(node);
            self.parent[node] = new_parent as u32;
            self.pred_arc[node] = new_pred as u32;
            self.attach(node, new_parent);
            new_parent = node;
            new_pred = old_pred;
            if node == leave_child {
                break;
            }
            debug_assert_eq!(old_parent, path[i + 1].0);
        }
        // new sizes along the reversed path: the re-rooted head owns the
        // whole subtree and every deeper path node owns what is no longer
        // above it
        self.succ_num[sub_entry] = t2_size;
        for i in 1..path.len() {
            self.succ_num[path[i].0] = t2_size - path[i - 1].1;
        }

        // new ancestors (attach side) gain the subtree
        let mut x = attach_to;
        loop {
            self.succ_num[x] += t2_size;
            if x == self.node_count {
                break;
            }
            x = self.parent[x] as usize;
        }

        delta > 0.0
    }

    fn detach(&mut self, node: usize) {
        let p = self.parent[node];
        if p == NONE {
            return;
        }
        let prev = self.prev_sib[node];
        let next = self.next_sib[node];
        if prev != NONE {
            self.next_sib[prev as usize] = next;
        } else {
            self.first_child[p as usize] = next;
        }
        if next != NONE {
            self.prev_sib[next as usize] = prev;
        }
        self.prev_sib[node] = NONE;
        self.next_sib[node] = NONE;
    }

    fn attach(&mut self, node: usize, parent: usize) {
        let old = self.first_child[parent];
        self.first_child[parent] = node as u32;
        self.next_sib[node] = old;
        self.prev_sib[node] = NONE;
        if old != NONE {
            self.prev_sib[old as usize] = node as u32;
        }
    }

    /// Potentials re-derived from the tree with the root pinned at zero;
    /// removes incremental float drift.
    fn recompute_potentials(&mut self) {
        self.refreshes += 1;
        let root = self.node_count;
        self.pot[root] = 0.0;
        self.stack.clear();
        let mut c = self.first_child[root];
        while c != NONE {
            self.stack.push(c);
            c = self.next_sib[c as usize];
        }
        while let Some(nd) = self.stack.pop() {
            let nd = nd as usize;
            let arc = self.pred_arc[nd] as usize;
            if self.arc_dst[arc] as usize == nd {
                self.pot[nd] = self.arc_cost[arc] + self.pot[self.arc_src[arc] as usize];
            } else {
                self.pot[nd] = self.pot[self.arc_dst[arc] as usize] - self.arc_cost[arc];
            }
            let mut c = self.first_child[nd];
            while c != NONE {
                self.stack.push(c);
                c = self.next_sib[c as usize];
            }
        }
    }

    /// Flows re-derived exactly from supplies on the spanning tree
    /// (children-first accumulation), so marginals hold to round-off.
    fn recompute_flows(&mut self) {
        let root = self.node_count;
        // preorder via DFS, then sweep in reverse
        let mut order: Vec<u32> = Vec::with_capacity(self.node_count + 1);
        self.stack.clear();
        self.stack.push(root as u32);
        while let Some(nd) = self.stack.pop() {
            order.push(nd);
            let mut c = self.first_child[nd as usize];
            while c != NONE {
                self.stack.push(c);
                c = self.next_sib[c as usize];
            }
        }
        let mut residual: Vec<f64> = self.supply.clone();
        residual.push(0.0);
        // compensated accumulation: plain sums leak ~1e-12 of mass through
        // cancellation on big trees, which shows up as marginal violations
        let mut comp = alloc::vec![0.0f64; residual.len()];
        for &nd in order.iter().rev() {
            let nd = nd as usize;
            if nd == root {
                continue;
            }
            let arc = self.pred_arc[nd] as usize;
            let parent = self.parent[nd] as usize;
            // excess of the subtree below nd flows through the pred arc
            let excess = residual[nd] + comp[nd];
            let flow = if self.arc_src[arc] as usize == nd {
                excess
            } else {
                -excess
            };
            // a negative value only arises from round-off on degenerate arcs
            self.arc_flow[arc] = flow.max(0.0);
            let y = excess - comp[parent];
            let t = residual[parent] + y;
            comp[parent] = (t - residual[parent]) - y;
            residual[parent] = t;
        }
    }

    #[cfg(test)]
    fn check_tree_invariants(&self) {
        // subtree sizes consistent
        let root = self.node_count;
        let mut computed = alloc::vec![1u32; root + 1];
        let mut order: Vec<u32> = Vec::new();
        let mut stack = alloc::vec![root as u32];
        while let Some(nd) = stack.pop() {
            order.push(nd);
            let mut c = self.first_child[nd as usize];
            while c != NONE {
                assert_eq!(self.parent[c as usize], nd);
                stack.push(c);
                c = self.next_sib[c as usize];
            }
        }
        assert_eq!(order.len(), root + 1, "tree must span all nodes");
        for &nd in order.iter().rev() {
            if nd as usize != root {
                computed[self.parent[nd as usize] as usize] += computed[nd as usize];
            }
        }
        for v in 0..=root {
            assert_eq!(computed[v], self.succ_num[v], "succ_num at {v}");
        }
        // tree arcs carry zero reduced cost
        for v in 0..root {
            let arc = self.pred_arc[v] as usize;
            let r = self.reduced_cost_exact(arc);
            assert!(
                r.abs() <= 1e-6 * self.artificial_cost(),
                "tree arc {arc} at node {v} has reduced cost {r}"
            );
        }
    }
}
