//! Dinic max-flow on integer capacities.

use std::collections::VecDeque;

#[derive(Clone, Debug)]
pub struct FlowNetwork {
    adj: Vec<Vec<usize>>,
    to: Vec<usize>,
    cap: Vec<u128>,
    level: Vec<u32>,
    next: Vec<usize>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        FlowNetwork {
            adj: vec![Vec::new(); nodes],
            to: Vec::new(),
            cap: Vec::new(),
            level: Vec::new(),
            next: Vec::new(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.adj.len()
    }

    /// Adds `u → v` with capacity `c` and returns the edge id.
    pub fn add_edge(&mut self, u: usize, v: usize, c: u128) -> usize {
        let e = self.to.len();
        self.to.push(v);
        self.cap.push(c);
        self.adj[u].push(e);
        self.to.push(u);
        self.cap.push(0);
        self.adj[v].push(e + 1);
        e
    }

    /// Flow currently pushed through edge `e`.
    pub fn flow(&self, e: usize) -> u128 {
        self.cap[e ^ 1]
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level = vec![u32::MAX; self.nodes()];
        self.level[s] = 0;
        let mut queue = VecDeque::from([s]);
        while let Some(u) = queue.pop_front() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && self.level[v] == u32::MAX {
                    self.level[v] = self.level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        self.level[t] != u32::MAX
    }

    fn dfs(&mut self, u: usize, t: usize, pushed: u128) -> u128 {
        if u == t {
            return pushed;
        }
        while self.next[u] < self.adj[u].len() {
            let e = self.adj[u][self.next[u]];
            let v = self.to[e];
            if self.cap[e] > 0 && self.level[v] == self.level[u] + 1 {
                let got = self.dfs(v, t, pushed.min(self.cap[e]));
                if got > 0 {
                    self.cap[e] -= got;
                    self.cap[e ^ 1] += got;
                    return got;
                }
            }
            self.next[u] += 1;
        }
        0
    }

    /// Maximum `s → t` flow; the network keeps the residual capacities.
    pub fn max_flow(&mut self, s: usize, t: usize) -> u128 {
        let mut total = 0u128;
        while self.bfs(s, t) {
            self.next = vec![0; self.nodes()];
            loop {
                let f = self.dfs(s, t, u128::MAX);
                if f == 0 {
                    break;
                }
                total += f;
            }
        }
        total
    }

    /// Nodes reachable from `s` in the residual network: the source side of a
    /// minimum cut once `max_flow` has run.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(u) = stack.pop() {
            for &e in &self.adj[u] {
                let v = self.to[e];
                if self.cap[e] > 0 && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classic_example() {
        // CLRS figure: max flow 23.
        let mut g = FlowNetwork::new(6);
        for (u, v, c) in [
            (0, 1, 16),
            (0, 2, 13),
            (1, 3, 12),
            (2, 1, 4),
            (2, 4, 14),
            (3, 2, 9),
            (3, 5, 20),
            (4, 3, 7),
            (4, 5, 4),
        ] {
            g.add_edge(u, v, c);
        }
        assert_eq!(g.max_flow(0, 5), 23);
        let side = g.source_side(0);
        assert!(side[0] && !side[5]);
    }

    #[test]
    fn cut_equals_flow() {
        let mut g = FlowNetwork::new(4);
        let edges = [(0, 1, 3), (0, 2, 2), (1, 2, 1), (1, 3, 2), (2, 3, 3)];
        for (u, v, c) in edges {
            g.add_edge(u, v, c);
        }
        let f = g.max_flow(0, 3);
        let side = g.source_side(0);
        let cut: u128 = edges
            .iter()
            .filter(|(u, v, _)| side[*u] && !side[*v])
            .map(|e| e.2)
            .sum();
        assert_eq!(f, cut);
        assert_eq!(f, 5);
    }
}
