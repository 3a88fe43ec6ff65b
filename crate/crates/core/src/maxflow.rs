//! Max-flow / min-cut on directed graphs with integer capacities, via Dinic's
//! algorithm (BFS level graph + blocking-flow DFS). Deterministic for a fixed
//! arc insertion order.

use crate::error::{Error, Result};

/// Effectively-unbounded arc capacity. Large enough to dominate any finite
/// energy the matchers build, while leaving headroom so sums of many such arcs
/// stay far from `i64` overflow.
pub const INFINITE_CAP: i64 = 1 << 40;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    /// Residual capacity; decreases as flow is pushed.
    cap: i64,
    /// Capacity as originally added, kept for the flow == cut cross-check.
    orig: i64,
    /// Index of the reverse arc in `arcs`.
    rev: usize,
}

/// Flow network with a designated source and sink. Arcs are added in pairs
/// (forward + reverse), so residual updates are O(1).
#[derive(Debug, Clone)]
pub struct FlowGraph {
    /// Per-node adjacency: indices into `arcs`.
    adj: Vec<Vec<usize>>,
    arcs: Vec<Arc>,
    source: usize,
    sink: usize,
}

impl FlowGraph {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Result<FlowGraph> {
        if source >= nodes || sink >= nodes {
            return Err(Error::argument(format!(
                "terminal out of range: source {source}, sink {sink}, nodes {nodes}"
            )));
        }
        if source == sink {
            return Err(Error::argument("source and sink must differ"));
        }
        Ok(FlowGraph {
            adj: vec![Vec::new(); nodes],
            arcs: Vec::new(),
            source,
            sink,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Adds a forward arc `u -> v` with capacity `cap` and its reverse with
    /// `rev_cap` (zero for a plain directed arc). Returns the forward arc's
    /// index.
    pub fn add_arc(&mut self, u: usize, v: usize, cap: i64, rev_cap: i64) -> Result<usize> {
        if u >= self.adj.len() || v >= self.adj.len() {
            return Err(Error::argument(format!(
                "arc endpoint out of range: {u} -> {v}"
            )));
        }
        if cap < 0 || rev_cap < 0 {
            return Err(Error::argument("arc capacities must be non-negative"));
        }
        let fwd = self.arcs.len();
        self.arcs.push(Arc {
            to: v,
            cap,
            orig: cap,
            rev: fwd + 1,
        });
        self.arcs.push(Arc {
            to: u,
            cap: rev_cap,
            orig: rev_cap,
            rev: fwd,
        });
        self.adj[u].push(fwd);
        self.adj[v].push(fwd + 1);
        Ok(fwd)
    }

    /// BFS from the source over positive-residual arcs; returns per-node
    /// levels, or `None` if the sink is unreachable.
    fn levels(&self) -> Option<Vec<u32>> {
        let mut level = vec![u32::MAX; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        level[self.source] = 0;
        queue.push_back(self.source);
        while let Some(u) = queue.pop_front() {
            for &ai in &self.adj[u] {
                let arc = &self.arcs[ai];
                if arc.cap > 0 && level[arc.to] == u32::MAX {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        (level[self.sink] != u32::MAX).then_some(level)
    }

    /// Sends one blocking flow through the level graph. `current` is the
    /// per-node cursor into `adj` (the standard current-arc optimization);
    /// the walk is iterative to keep recursion off big grids.
    fn blocking_flow(&mut self, level: &[u32], current: &mut [usize]) -> i64 {
        let mut total = 0;
        // Each stack entry is the arc taken to reach the next node.
        let mut path: Vec<usize> = Vec::new();
        loop {
            let u = path.last().map_or(self.source, |&ai| self.arcs[ai].to);
            if u == self.sink {
                let bottleneck = path.iter().map(|&ai| self.arcs[ai].cap).min().unwrap();
                let mut retreat = 0;
                for (depth, &ai) in path.iter().enumerate() {
                    self.arcs[ai].cap -= bottleneck;
                    let rev = self.arcs[ai].rev;
                    self.arcs[rev].cap += bottleneck;
                    if self.arcs[ai].cap == 0 && retreat == 0 {
                        retreat = path.len() - depth;
                    }
                }
                total += bottleneck;
                // Back up to just before the first saturated arc.
                path.truncate(path.len() - retreat);
                continue;
            }
            // Advance u's cursor to the next usable arc.
            let mut advanced = false;
            while current[u] < self.adj[u].len() {
                let ai = self.adj[u][current[u]];
                let arc = &self.arcs[ai];
                if arc.cap > 0 && level[arc.to] == level[u] + 1 {
                    path.push(ai);
                    advanced = true;
                    break;
                }
                current[u] += 1;
            }
            if advanced {
                continue;
            }
            // Dead end: exhaust u and retreat (or finish at the source).
            match path.pop() {
                Some(ai) => {
                    let prev = path.last().map_or(self.source, |&ai| self.arcs[ai].to);
                    debug_assert_eq!(self.arcs[self.arcs[ai].rev].to, prev);
                    current[prev] += 1;
                }
                None => return total,
            }
        }
    }

    /// Runs max-flow to completion. Returns the flow value and the source-side
    /// min-cut partition (`true` = reachable from the source in the residual
    /// graph). Consumes the capacities; clone first to keep the input.
    pub fn solve(mut self) -> (i64, Vec<bool>) {
        let mut flow = 0;
        while let Some(level) = self.levels() {
            let mut current = vec![0; self.adj.len()];
            flow += self.blocking_flow(&level, &mut current);
        }
        let source_side = self.residual_reachable();
        debug_assert_eq!(
            flow,
            self.cut_capacity(&source_side),
            "flow != crossing capacity"
        );
        (flow, source_side)
    }

    /// Nodes reachable from the source over positive-residual arcs.
    fn residual_reachable(&self) -> Vec<bool> {
        let mut seen = vec![false; self.adj.len()];
        let mut queue = std::collections::VecDeque::new();
        seen[self.source] = true;
        queue.push_back(self.source);
        while let Some(u) = queue.pop_front() {
            for &ai in &self.adj[u] {
                let arc = &self.arcs[ai];
                if arc.cap > 0 && !seen[arc.to] {
                    seen[arc.to] = true;
                    queue.push_back(arc.to);
                }
            }
        }
        seen
    }

    /// Sum of original capacities crossing the partition from the source side
    /// to the sink side. With the partition taken from residual reachability,
    /// every crossing arc is saturated and the sum equals the max flow.
    fn cut_capacity(&self, source_side: &[bool]) -> i64 {
        let mut crossing = 0;
        for (u, arcs) in self.adj.iter().enumerate() {
            if !source_side[u] {
                continue;
            }
            for &ai in arcs {
                let arc = &self.arcs[ai];
                if !source_side[arc.to] {
                    debug_assert_eq!(arc.cap, 0, "crossing arc left unsaturated");
                    crossing += arc.orig;
                }
            }
        }
        crossing
    }
}
