//! Roof-duality minimization of binary pairwise energies (QPBO), with an
//! exact enumeration pass over small undecided components.
//!
//! Arbitrary pairwise tables are accepted, including non-submodular ones. The
//! doubled network carries each variable twice — once plain, once
//! complemented — so every term maps to non-negative arc capacities. A
//! variable whose two copies end up on opposite sides of the min cut is
//! decided, and the decided part is guaranteed to agree with some global
//! minimizer. Undecided variables form components that only touch decided
//! ones; components small enough are minimized by enumeration (keeping the
//! global guarantee), larger ones fall back to caller-supplied defaults,
//! which by the autarky property never raises the energy of the default
//! assignment.

use crate::error::{Error, Result};
use crate::maxflow::FlowGraph;

/// Binary pairwise energy, built term by term and then minimized.
#[derive(Debug, Clone)]
pub struct Qpbo {
    /// Accumulated unary costs, `[e(x_i = 0), e(x_i = 1)]` per variable.
    unary: Vec<[i64; 2]>,
    /// Pairwise terms as `(i, j, table)` with the table indexed by
    /// `[x_i][x_j]`.
    pairs: Vec<(u32, u32, [[i64; 2]; 2])>,
}

impl Qpbo {
    pub fn new(num_vars: usize) -> Qpbo {
        Qpbo {
            unary: vec![[0, 0]; num_vars],
            pairs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.unary.len()
    }

    /// Adds `e0` to the energy when `x_i = 0` and `e1` when `x_i = 1`.
    pub fn add_unary(&mut self, i: usize, e0: i64, e1: i64) {
        self.unary[i][0] += e0;
        self.unary[i][1] += e1;
    }

    /// Adds a full 2x2 table over `(x_i, x_j)`; any values are allowed.
    pub fn add_pairwise(&mut self, i: usize, j: usize, table: [[i64; 2]; 2]) -> Result<()> {
        if i == j {
            return Err(Error::argument(
                "pairwise term needs two distinct variables",
            ));
        }
        self.pairs.push((i as u32, j as u32, table));
        Ok(())
    }

    /// Energy of a complete assignment.
    pub fn energy(&self, x: &[bool]) -> i64 {
        let mut e: i64 = self
            .unary
            .iter()
            .zip(x)
            .map(|(costs, &xi)| costs[usize::from(xi)])
            .sum();
        for &(i, j, table) in &self.pairs {
            e += table[usize::from(x[i as usize])][usize::from(x[j as usize])];
        }
        e
    }

    /// Runs roof duality. `Some(value)` means every global minimizer can be
    /// assumed to take `value` there; `None` means the relaxation left the
    /// variable undecided.
    pub fn solve(&self) -> Vec<Option<bool>> {
        let n = self.unary.len();
        if n == 0 {
            return Vec::new();
        }
        // Node layout: i = x_i, n + i = complement of x_i, then source, sink.
        // A node on the source side reads as 0. Each term is installed twice
        // (once per copy) so the whole construction stays exactly symmetric;
        // the uniform doubling leaves the minimizing cut unchanged.
        let source = 2 * n;
        let sink = 2 * n + 1;
        let mut g = FlowGraph::new(2 * n + 2, source, sink).expect("valid terminals");
        let arc = |g: &mut FlowGraph, u: usize, v: usize, cap: i64| {
            if cap > 0 {
                g.add_arc(u, v, cap, 0).expect("valid arc");
            }
        };
        let unary = |g: &mut FlowGraph, i: usize, e0: i64, e1: i64| {
            let c = e1 - e0;
            if c >= 0 {
                arc(g, source, i, c);
                arc(g, n + i, sink, c);
            } else {
                arc(g, i, sink, -c);
                arc(g, source, n + i, -c);
            }
        };
        for (i, costs) in self.unary.iter().enumerate() {
            unary(&mut g, i, costs[0], costs[1]);
        }
        for &(i, j, [[a, b], [c, d]]) in &self.pairs {
            let (i, j) = (i as usize, j as usize);
            let delta = b + c - a - d;
            if delta >= 0 {
                // e = a + (d - b) x_i + (b - a) x_j + delta x_i (1 - x_j)
                unary(&mut g, i, 0, d - b);
                unary(&mut g, j, 0, b - a);
                arc(&mut g, j, i, delta);
                arc(&mut g, n + i, n + j, delta);
            } else {
                // e = a + (c - a) x_i + (b - a) x_j + (-delta) x_i x_j
                unary(&mut g, i, 0, c - a);
                unary(&mut g, j, 0, b - a);
                arc(&mut g, n + j, i, -delta);
                arc(&mut g, n + i, j, -delta);
            }
        }
        let (_, source_side) = g.solve();
        (0..n)
            .map(|i| (source_side[i] != source_side[n + i]).then(|| !source_side[i]))
            .collect()
    }

    /// Full minimization: roof duality, then exact enumeration of each
    /// undecided component of up to `enum_cap` variables. Components beyond
    /// the cap keep their `default` values, which cannot increase the energy
    /// relative to `default` itself. With every component within the cap the
    /// result is a global minimizer.
    pub fn solve_complete(&self, default: &[bool], enum_cap: u32) -> Vec<bool> {
        assert_eq!(default.len(), self.unary.len(), "default length mismatch");
        let decided = self.solve();
        let mut x: Vec<bool> = decided
            .iter()
            .zip(default)
            .map(|(d, &fallback)| d.unwrap_or(fallback))
            .collect();

        // Pairwise adjacency restricted to undecided variables. Terms never
        // bridge two distinct components, so each component can be minimized
        // on its own with the rest of `x` fixed.
        let n = self.unary.len();
        let mut adjacent: Vec<Vec<u32>> = vec![Vec::new(); n];
        let mut touching: Vec<Vec<u32>> = vec![Vec::new(); n];
        for (ti, &(i, j, _)) in self.pairs.iter().enumerate() {
            touching[i as usize].push(ti as u32);
            touching[j as usize].push(ti as u32);
            if decided[i as usize].is_none() && decided[j as usize].is_none() {
                adjacent[i as usize].push(j);
                adjacent[j as usize].push(i);
            }
        }

        let mut visited = vec![false; n];
        for start in 0..n {
            if decided[start].is_some() || visited[start] {
                continue;
            }
            let mut component = vec![start as u32];
            visited[start] = true;
            let mut head = 0;
            while head < component.len() {
                let v = component[head] as usize;
                head += 1;
                for &w in &adjacent[v] {
                    if !visited[w as usize] {
                        visited[w as usize] = true;
                        component.push(w);
                    }
                }
            }
            if component.len() > enum_cap as usize {
                continue; // stay on the defaults
            }
            self.minimize_component(&component, &touching, &mut x);
        }
        x
    }

    /// Exhaustively assigns the component's variables to minimize the energy
    /// of the terms that touch it, everything else held fixed in `x`.
    fn minimize_component(&self, component: &[u32], touching: &[Vec<u32>], x: &mut [bool]) {
        let mut terms: Vec<u32> = component
            .iter()
            .flat_map(|&v| touching[v as usize].iter().copied())
            .collect();
        terms.sort_unstable();
        terms.dedup();

        let local_energy = |x: &[bool]| -> i64 {
            let mut e: i64 = component
                .iter()
                .map(|&v| self.unary[v as usize][usize::from(x[v as usize])])
                .sum();
            for &ti in &terms {
                let (i, j, table) = self.pairs[ti as usize];
                e += table[usize::from(x[i as usize])][usize::from(x[j as usize])];
            }
            e
        };

        let mut best_mask = 0u32;
        let mut best = i64::MAX;
        for mask in 0..(1u32 << component.len()) {
            for (bit, &v) in component.iter().enumerate() {
                x[v as usize] = mask & (1 << bit) != 0;
            }
            let e = local_energy(x);
            if e < best {
                best = e;
                best_mask = mask;
            }
        }
        for (bit, &v) in component.iter().enumerate() {
            x[v as usize] = best_mask & (1 << bit) != 0;
        }
    }
}
