//! Dinic max-flow on a graph with real capacities.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
struct Arc {
    to: usize,
    cap: f64,
}

/// Arcs are stored in pairs, so arc `e ^ 1` is the reverse of arc `e`.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    arcs: Vec<Arc>,
    adjacency: Vec<Vec<usize>>,
    eps: f64,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self { arcs: Vec::new(), adjacency: vec![Vec::new(); nodes], eps: 0.0 }
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    /// Adds `u -> v` with capacity `forward` and `v -> u` with capacity `backward`.
    pub fn add_edge(&mut self, u: usize, v: usize, forward: f64, backward: f64) {
        debug_assert!(forward >= 0.0 && backward >= 0.0);
        self.eps = self.eps.max(1e-13 * forward.max(backward));
        self.adjacency[u].push(self.arcs.len());
        self.arcs.push(Arc { to: v, cap: forward });
        self.adjacency[v].push(self.arcs.len());
        self.arcs.push(Arc { to: u, cap: backward });
    }

    fn levels(&self, s: usize) -> Vec<i64> {
        let mut level = vec![-1i64; self.node_count()];
        level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adjacency[u] {
                let a = &self.arcs[e];
                if a.cap > self.eps && level[a.to] < 0 {
                    level[a.to] = level[u] + 1;
                    queue.push_back(a.to);
                }
            }
        }
        level
    }

    /// Blocking flow by iterative DFS over the level graph.
    fn blocking_flow(&mut self, s: usize, t: usize, level: &[i64]) -> f64 {
        let mut next = vec![0usize; self.node_count()];
        let mut total = 0.0;
        let mut path: Vec<usize> = Vec::new();
        let mut u = s;
        loop {
            if u == t {
                let push = path.iter().map(|&e| self.arcs[e].cap).fold(f64::INFINITY, f64::min);
                for &e in &path {
                    self.arcs[e].cap -= push;
                    self.arcs[e ^ 1].cap += push;
                }
                total += push;
                // retreat to the tail of the first saturated arc
                let cut = path.iter().position(|&e| self.arcs[e].cap <= self.eps).unwrap_or(0);
                path.truncate(cut);
                u = if cut == 0 { s } else { self.arcs[path[cut - 1]].to };
                continue;
            }
            let mut advanced = false;
            while next[u] < self.adjacency[u].len() {
                let e = self.adjacency[u][next[u]];
                let a = &self.arcs[e];
                if a.cap > self.eps && level[a.to] == level[u] + 1 {
                    path.push(e);
                    u = a.to;
                    advanced = true;
                    break;
                }
                next[u] += 1;
            }
            if !advanced {
                if u == s {
                    return total;
                }
                // dead end: drop it from the level graph
                let e = path.pop().expect("non-source node on path");
                u = self.arcs[e ^ 1].to;
                next[u] += 1;
            }
        }
    }

    /// Maximum flow value from `s` to `t`; the network is left in its residual state.
    pub fn max_flow(&mut self, s: usize, t: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.levels(s);
            if level[t] < 0 {
                return total;
            }
            total += self.blocking_flow(s, t, &level);
        }
    }

    /// Nodes reachable from `s` through arcs with positive residual capacity.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        self.levels(s).iter().map(|&l| l >= 0).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        // CLRS figure 26.1, max flow 23
        let mut g = FlowNetwork::new(6);
        for &(u, v, c) in &[
            (0, 1, 16.0),
            (0, 2, 13.0),
            (2, 1, 4.0),
            (1, 3, 12.0),
            (3, 2, 9.0),
            (2, 4, 14.0),
            (4, 3, 7.0),
            (3, 5, 20.0),
            (4, 5, 4.0),
        ] {
            g.add_edge(u, v, c, 0.0);
        }
        assert!((g.max_flow(0, 5) - 23.0).abs() < 1e-12);
        let side = g.source_side(0);
        assert!(side[0] && !side[5]);
    }

    #[test]
    fn undirected_cycle() {
        let mut g = FlowNetwork::new(4);
        g.add_edge(0, 1, 1.5, 1.5);
        g.add_edge(1, 2, 0.5, 0.5);
        g.add_edge(2, 3, 1.0, 1.0);
        g.add_edge(3, 0, 2.0, 2.0);
        assert!((g.max_flow(0, 2) - 1.5).abs() < 1e-12);
    }
}
