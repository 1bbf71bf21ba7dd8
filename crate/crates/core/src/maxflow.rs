//! Exact s-t maximum flow / minimum cut.
//!
//! Augmenting paths are found by growing two search trees, one from each
//! terminal, and the trees are repaired rather than rebuilt after every
//! augmentation (orphan adoption). This is the tree-reuse strategy that makes
//! grid-shaped segmentation graphs fast in practice.

use std::collections::VecDeque;

/// A graph over `node_count` non-terminal nodes plus source and sink.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowNetwork {
    /// `(source -> i, i -> sink)` capacities.
    pub terminal: Vec<(f64, f64)>,
    pub edges: Vec<NeighborEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEdge {
    pub i: usize,
    pub j: usize,
    pub cap_ij: f64,
    pub cap_ji: f64,
}

impl FlowNetwork {
    pub fn new(node_count: usize) -> Self {
        Self {
            terminal: vec![(0.0, 0.0); node_count],
            edges: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.terminal.len()
    }

    pub fn set_terminal(&mut self, i: usize, source_cap: f64, sink_cap: f64) {
        debug_assert!(source_cap >= 0.0 && sink_cap >= 0.0);
        self.terminal[i] = (source_cap, sink_cap);
    }

    pub fn add_edge(&mut self, i: usize, j: usize, cap_ij: f64, cap_ji: f64) {
        debug_assert!(i != j, "self edge");
        debug_assert!(cap_ij >= 0.0 && cap_ji >= 0.0);
        self.edges.push(NeighborEdge { i, j, cap_ij, cap_ji });
    }

    pub fn validate(&self) -> bool {
        let ok = |c: f64| c >= 0.0 && c.is_finite();
        self.terminal.iter().all(|&(s, t)| ok(s) && ok(t))
            && self.edges.iter().all(|e| {
                e.i != e.j
                    && e.i < self.node_count()
                    && e.j < self.node_count()
                    && ok(e.cap_ij)
                    && ok(e.cap_ji)
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Side {
    SourceSide,
    SinkSide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutResult {
    pub flow_value: f64,
    pub side: Vec<Side>,
}

/// Capacity of the cut that puts `side[i] == SourceSide` nodes with the
/// source and the rest with the sink.
pub fn cut_capacity(net: &FlowNetwork, side: &[Side]) -> f64 {
    assert_eq!(side.len(), net.node_count());
    let mut total = 0.0;
    for (&(s, t), &sd) in net.terminal.iter().zip(side) {
        total += match sd {
            Side::SourceSide => t,
            Side::SinkSide => s,
        };
    }
    for e in &net.edges {
        match (side[e.i], side[e.j]) {
            (Side::SourceSide, Side::SinkSide) => total += e.cap_ij,
            (Side::SinkSide, Side::SourceSide) => total += e.cap_ji,
            _ => {}
        }
    }
    total
}

const NONE: u32 = u32::MAX;
const TERMINAL: u32 = u32::MAX - 1;
const ORPHAN: u32 = u32::MAX - 2;

struct Solver {
    // arcs come in sister pairs: 2k and 2k + 1
    head: Vec<u32>,
    next: Vec<u32>,
    r_cap: Vec<f64>,

    first: Vec<u32>,
    tr_cap: Vec<f64>,
    parent: Vec<u32>,
    is_sink: Vec<bool>,
    ts: Vec<u32>,
    dist: Vec<u32>,
    in_queue: Vec<bool>,

    active: VecDeque<u32>,
    orphans: VecDeque<u32>,
    time: u32,
    flow: f64,
}

#[inline]
fn sister(a: u32) -> u32 {
    a ^ 1
}

impl Solver {
    fn new(net: &FlowNetwork) -> Self {
        let n = net.node_count();
        let m = net.edges.len() * 2;
        let mut s = Solver {
            head: Vec::with_capacity(m),
            next: Vec::with_capacity(m),
            r_cap: Vec::with_capacity(m),
            first: vec![NONE; n],
            tr_cap: vec![0.0; n],
            parent: vec![NONE; n],
            is_sink: vec![false; n],
            ts: vec![0; n],
            dist: vec![0; n],
            in_queue: vec![false; n],
            active: VecDeque::new(),
            orphans: VecDeque::new(),
            time: 0,
            flow: 0.0,
        };
        for e in &net.edges {
            let a = s.head.len() as u32;
            s.head.push(e.j as u32);
            s.next.push(s.first[e.i]);
            s.r_cap.push(e.cap_ij);
            s.first[e.i] = a;
            s.head.push(e.i as u32);
            s.next.push(s.first[e.j]);
            s.r_cap.push(e.cap_ji);
            s.first[e.j] = a + 1;
        }
        for (i, &(cs, ct)) in net.terminal.iter().enumerate() {
            s.flow += cs.min(ct);
            s.tr_cap[i] = cs - ct;
        }
        s
    }

    fn arcs(&self, i: usize) -> ArcIter<'_> {
        ArcIter {
            next: &self.next,
            cur: self.first[i],
        }
    }

    fn set_active(&mut self, i: usize) {
        if !self.in_queue[i] {
            self.in_queue[i] = true;
            self.active.push_back(i as u32);
        }
    }

    fn next_active(&mut self) -> Option<usize> {
        while let Some(i) = self.active.pop_front() {
            let i = i as usize;
            self.in_queue[i] = false;
            if self.parent[i] != NONE {
                return Some(i);
            }
        }
        None
    }

    fn run(&mut self) {
        let n = self.first.len();
        for i in 0..n {
            if self.tr_cap[i] > 0.0 {
                self.is_sink[i] = false;
                self.parent[i] = TERMINAL;
                self.dist[i] = 1;
                self.set_active(i);
            } else if self.tr_cap[i] < 0.0 {
                self.is_sink[i] = true;
                self.parent[i] = TERMINAL;
                self.dist[i] = 1;
                self.set_active(i);
            }
        }

        let mut current: Option<usize> = None;
        loop {
            let i = match current {
                Some(i) if self.parent[i] != NONE => i,
                _ => match self.next_active() {
                    Some(i) => i,
                    None => break,
                },
            };
            let bridge = self.grow(i);
            self.time += 1;
            match bridge {
                Some(a) => {
                    current = Some(i);
                    self.augment(a);
                    self.adopt_orphans();
                }
                None => current = None,
            }
        }
    }

    /// Grows the tree containing `i` by one node's neighborhood. Returns an
    /// arc from the source tree into the sink tree if the trees touch.
    fn grow(&mut self, i: usize) -> Option<u32> {
        let mut it = self.first[i];
        let from_sink = self.is_sink[i];
        while it != NONE {
            let a = it;
            it = self.next[a as usize];
            let usable = if from_sink {
                self.r_cap[sister(a) as usize] > 0.0
            } else {
                self.r_cap[a as usize] > 0.0
            };
            if !usable {
                continue;
            }
            let j = self.head[a as usize] as usize;
            if self.parent[j] == NONE {
                self.is_sink[j] = from_sink;
                self.parent[j] = sister(a);
                self.ts[j] = self.ts[i];
                self.dist[j] = self.dist[i] + 1;
                self.set_active(j);
            } else if self.is_sink[j] != from_sink {
                return Some(if from_sink { sister(a) } else { a });
            } else if self.ts[j] <= self.ts[i] && self.dist[j] > self.dist[i] {
                // shorten j's path to the terminal
                self.parent[j] = sister(a);
                self.ts[j] = self.ts[i];
                self.dist[j] = self.dist[i] + 1;
            }
        }
        None
    }

    fn make_orphan_front(&mut self, i: usize) {
        self.parent[i] = ORPHAN;
        self.orphans.push_front(i as u32);
    }

    fn augment(&mut self, bridge: u32) {
        let b = bridge as usize;
        let mut bottleneck = self.r_cap[b];

        let mut i = self.head[sister(bridge) as usize] as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.r_cap[sister(a) as usize]);
            i = self.head[a as usize] as usize;
        }
        bottleneck = bottleneck.min(self.tr_cap[i]);

        let mut i = self.head[b] as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            bottleneck = bottleneck.min(self.r_cap[a as usize]);
            i = self.head[a as usize] as usize;
        }
        bottleneck = bottleneck.min(-self.tr_cap[i]);

        self.r_cap[sister(bridge) as usize] += bottleneck;
        self.r_cap[b] -= bottleneck;

        let mut i = self.head[sister(bridge) as usize] as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            self.r_cap[a as usize] += bottleneck;
            let s = sister(a) as usize;
            self.r_cap[s] -= bottleneck;
            if self.r_cap[s] <= 0.0 {
                self.r_cap[s] = 0.0;
                self.make_orphan_front(i);
            }
            i = self.head[a as usize] as usize;
        }
        self.tr_cap[i] -= bottleneck;
        if self.tr_cap[i] <= 0.0 {
            self.tr_cap[i] = 0.0;
            self.make_orphan_front(i);
        }

        let mut i = self.head[b] as usize;
        loop {
            let a = self.parent[i];
            if a == TERMINAL {
                break;
            }
            self.r_cap[sister(a) as usize] += bottleneck;
            self.r_cap[a as usize] -= bottleneck;
            if self.r_cap[a as usize] <= 0.0 {
                self.r_cap[a as usize] = 0.0;
                self.make_orphan_front(i);
            }
            i = self.head[a as usize] as usize;
        }
        self.tr_cap[i] += bottleneck;
        if self.tr_cap[i] >= 0.0 {
            self.tr_cap[i] = 0.0;
            self.make_orphan_front(i);
        }

        self.flow += bottleneck;
    }

    fn adopt_orphans(&mut self) {
        while let Some(i) = self.orphans.pop_front() {
            self.process_orphan(i as usize);
        }
    }

    /// Distance from `j` to its terminal through valid parents, or `None`
    /// when the chain ends in an orphan. Marks the walked chain with the
    /// current timestamp.
    fn origin_distance(&mut self, start: usize) -> Option<u32> {
        let mut j = start;
        let mut d = 0u32;
        loop {
            if self.ts[j] == self.time {
                d += self.dist[j];
                break;
            }
            let a = self.parent[j];
            d += 1;
            if a == TERMINAL {
                self.ts[j] = self.time;
                self.dist[j] = 1;
                break;
            }
            if a == ORPHAN || a == NONE {
                return None;
            }
            j = self.head[a as usize] as usize;
        }
        let total = d;
        let mut j = start;
        let mut d = total;
        while self.ts[j] != self.time {
            self.ts[j] = self.time;
            self.dist[j] = d;
            d -= 1;
            j = self.head[self.parent[j] as usize] as usize;
        }
        Some(total)
    }

    fn process_orphan(&mut self, i: usize) {
        let in_sink = self.is_sink[i];
        let mut best: Option<(u32, u32)> = None;

        let mut it = self.first[i];
        while it != NONE {
            let a0 = it;
            it = self.next[a0 as usize];
            // residual arc from the candidate parent j into i
            let cap = if in_sink {
                self.r_cap[a0 as usize]
            } else {
                self.r_cap[sister(a0) as usize]
            };
            if cap <= 0.0 {
                continue;
            }
            let j = self.head[a0 as usize] as usize;
            if self.is_sink[j] != in_sink || self.parent[j] == NONE {
                continue;
            }
            if let Some(d) = self.origin_distance(j) {
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((a0, d));
                }
            }
        }

        if let Some((a0, d)) = best {
            self.parent[i] = a0;
            self.ts[i] = self.time;
            self.dist[i] = d + 1;
            return;
        }

        self.parent[i] = NONE;
        let mut it = self.first[i];
        while it != NONE {
            let a0 = it;
            it = self.next[a0 as usize];
            let j = self.head[a0 as usize] as usize;
            if self.is_sink[j] != in_sink {
                continue;
            }
            let a = self.parent[j];
            if a == NONE {
                continue;
            }
            let cap = if in_sink {
                self.r_cap[a0 as usize]
            } else {
                self.r_cap[sister(a0) as usize]
            };
            if cap > 0.0 {
                self.set_active(j);
            }
            if a != TERMINAL && a != ORPHAN && self.head[a as usize] as usize == i {
                self.parent[j] = ORPHAN;
                self.orphans.push_back(j as u32);
            }
        }
    }

    /// Nodes reachable from the source in the residual graph.
    fn source_side(&self) -> Vec<Side> {
        let n = self.first.len();
        let mut seen = vec![false; n];
        let mut queue: VecDeque<usize> = (0..n).filter(|&i| self.tr_cap[i] > 0.0).collect();
        for &i in &queue {
            seen[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            for a in self.arcs(i) {
                let j = self.head[a as usize] as usize;
                if !seen[j] && self.r_cap[a as usize] > 0.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        seen.into_iter()
            .map(|s| if s { Side::SourceSide } else { Side::SinkSide })
            .collect()
    }
}

struct ArcIter<'a> {
    next: &'a [u32],
    cur: u32,
}

impl Iterator for ArcIter<'_> {
    type Item = u32;

    fn next(&mut self) -> Option<u32> {
        if self.cur == NONE {
            return None;
        }
        let a = self.cur;
        self.cur = self.next[a as usize];
        Some(a)
    }
}

/// Maximum flow and the minimum cut formed by the nodes still reachable from
/// the source.
pub fn max_flow(net: &FlowNetwork) -> CutResult {
    debug_assert!(net.validate(), "invalid flow network");
    let mut solver = Solver::new(net);
    solver.run();
    let side = solver.source_side();
    let result = CutResult {
        flow_value: solver.flow,
        side,
    };
    debug_assert!({
        let cut = cut_capacity(net, &result.side);
        (cut - result.flow_value).abs() <= 1e-6 * cut.abs().max(1.0)
    });
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_node_bottleneck() {
        let mut net = FlowNetwork::new(1);
        net.set_terminal(0, 3.0, 2.0);
        let cut = max_flow(&net);
        assert_eq!(cut.flow_value, 2.0);
        assert_eq!(cut.side, vec![Side::SourceSide]);
    }

    #[test]
    fn parallel_paths_add_up() {
        let mut net = FlowNetwork::new(2);
        net.set_terminal(0, 1.0, 1.0);
        net.set_terminal(1, 2.0, 2.0);
        assert_eq!(max_flow(&net).flow_value, 3.0);
    }

    #[test]
    fn chain_through_neighbors() {
        // s -> 0 -> 1 -> 2 -> t with a weak middle link
        let mut net = FlowNetwork::new(3);
        net.set_terminal(0, 5.0, 0.0);
        net.set_terminal(2, 0.0, 5.0);
        net.add_edge(0, 1, 4.0, 0.0);
        net.add_edge(1, 2, 1.5, 0.0);
        let cut = max_flow(&net);
        assert_eq!(cut.flow_value, 1.5);
        assert_eq!(cut.side, vec![Side::SourceSide, Side::SourceSide, Side::SinkSide]);
    }

    #[test]
    fn reverse_capacity_is_respected() {
        let mut net = FlowNetwork::new(2);
        net.set_terminal(0, 0.0, 4.0);
        net.set_terminal(1, 4.0, 0.0);
        net.add_edge(0, 1, 3.0, 1.0);
        assert_eq!(max_flow(&net).flow_value, 1.0);
    }

    #[test]
    fn trivial_cuts() {
        let mut net = FlowNetwork::new(3);
        net.set_terminal(0, 1.0, 2.0);
        net.set_terminal(1, 3.0, 4.0);
        net.set_terminal(2, 5.0, 6.0);
        net.add_edge(0, 1, 7.0, 8.0);
        assert_eq!(cut_capacity(&net, &[Side::SinkSide; 3]), 9.0);
        assert_eq!(cut_capacity(&net, &[Side::SourceSide; 3]), 12.0);
        let mixed = [Side::SourceSide, Side::SinkSide, Side::SinkSide];
        assert_eq!(cut_capacity(&net, &mixed), 2.0 + 3.0 + 5.0 + 7.0);
    }

    #[test]
    fn empty_network() {
        let cut = max_flow(&FlowNetwork::new(0));
        assert_eq!(cut.flow_value, 0.0);
        assert!(cut.side.is_empty());
    }
}
