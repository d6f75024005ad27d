//! Primal network simplex for the transportation problem.
//!
//! Port of the LEMON `NetworkSimplex` layout (spanning-tree basis stored as
//! parent / thread / successor arrays, block-search pivoting, artificial root)
//! restricted to uncapacitated bipartite arcs. Arc `e < n*m` runs from supply
//! node `e / m` to demand node `n + e % m`; its cost is read from the dense
//! cost matrix, so arcs are never materialised.

use crate::error::{Error, Result};

const NONE: usize = usize::MAX;
const STATE_TREE: i8 = 0;
const STATE_LOWER: i8 = 1;
const DIR_UP: i8 = 1;
const DIR_DOWN: i8 = -1;

/// Optimal plan of a transportation problem.
#[derive(Debug, Clone)]
pub struct TransportPlan {
    /// `sum_ij flow_ij cost_ij`.
    pub cost: f64,
    /// Nonzero flows as `(i, j, flow)`.
    pub flows: Vec<(usize, usize, f64)>,
    /// Dual potentials of supply nodes, then demand nodes.
    pub potentials: Vec<f64>,
    pub iterations: usize,
}

struct Solver<'a> {
    n: usize,
    m: usize,
    cost: &'a [f64],
    arc_num: usize,
    art_src: Vec<usize>,
    art_tgt: Vec<usize>,
    art_cost: Vec<f64>,
    flow: Vec<f64>,
    state: Vec<i8>,
    pi: Vec<f64>,
    parent: Vec<usize>,
    pred: Vec<usize>,
    pred_dir: Vec<i8>,
    thread: Vec<usize>,
    rev_thread: Vec<usize>,
    succ_num: Vec<usize>,
    last_succ: Vec<usize>,
    dirty_revs: Vec<usize>,
    in_arc: usize,
    join: usize,
    u_in: usize,
    v_in: usize,
    u_out: usize,
    delta: f64,
    next_arc: usize,
    block_size: usize,
}

impl<'a> Solver<'a> {
    #[inline]
    fn source(&self, e: usize) -> usize {
        if e < self.arc_num {
            e / self.m
        } else {
            self.art_src[e - self.arc_num]
        }
    }

    #[inline]
    fn target(&self, e: usize) -> usize {
        if e < self.arc_num {
            self.n + e % self.m
        } else {
            self.art_tgt[e - self.arc_num]
        }
    }

    #[inline]
    fn arc_cost(&self, e: usize) -> f64 {
        if e < self.arc_num {
            self.cost[e]
        } else {
            self.art_cost[e - self.arc_num]
        }
    }

    fn new(supply: &[f64], demand: &[f64], cost: &'a [f64]) -> Self {
        let n = supply.len();
        let m = demand.len();
        let node_num = n + m;
        let arc_num = n * m;
        let max_cost = cost.iter().fold(0.0f64, |a, c| a.max(c.abs()));
        let art = (max_cost + 1.0) * node_num as f64;
        let all_nodes = node_num + 1;
        let root = node_num;
        let mut s = Solver {
            n,
            m,
            cost,
            arc_num,
            art_src: vec![0; node_num],
            art_tgt: vec![0; node_num],
            art_cost: vec![0.0; node_num],
            flow: vec![0.0; arc_num + node_num],
            state: vec![STATE_LOWER; arc_num + node_num],
            pi: vec![0.0; all_nodes],
            parent: vec![NONE; all_nodes],
            pred: vec![NONE; all_nodes],
            pred_dir: vec![DIR_UP; all_nodes],
            thread: vec![0; all_nodes],
            rev_thread: vec![0; all_nodes],
            succ_num: vec![0; all_nodes],
            last_succ: vec![0; all_nodes],
            dirty_revs: Vec::new(),
            in_arc: 0,
            join: 0,
            u_in: 0,
            v_in: 0,
            u_out: 0,
            delta: 0.0,
            next_arc: 0,
            block_size: ((arc_num as f64).sqrt().ceil() as usize).max(10),
        };
        s.thread[root] = 0;
        s.rev_thread[0] = root;
        s.succ_num[root] = node_num + 1;
        s.last_succ[root] = node_num - 1;
        for u in 0..node_num {
            let e = arc_num + u;
            let b = if u < n { supply[u] } else { -demand[u - n] };
            s.parent[u] = root;
            s.pred[u] = e;
            s.thread[u] = u + 1;
            s.rev_thread[u + 1] = u;
            s.succ_num[u] = 1;
            s.last_succ[u] = u;
            s.state[e] = STATE_TREE;
            if b >= 0.0 {
                s.pred_dir[u] = DIR_UP;
                s.art_src[u] = u;
                s.art_tgt[u] = root;
                s.flow[e] = b;
            } else {
                s.pred_dir[u] = DIR_DOWN;
                s.pi[u] = art;
                s.art_src[u] = root;
                s.art_tgt[u] = u;
                s.art_cost[u] = art;
                s.flow[e] = -b;
            }
        }
        s
    }

    #[inline]
    fn reduced(&self, e: usize) -> f64 {
        self.state[e] as f64 * (self.arc_cost(e) + self.pi[self.source(e)] - self.pi[self.target(e)])
    }

    fn significant(&self, e: usize, c: f64) -> bool {
        let scale = self.pi[self.source(e)]
            .abs()
            .max(self.pi[self.target(e)].abs())
            .max(self.arc_cost(e).abs());
        c < -64.0 * f64::EPSILON * scale.max(1.0)
    }

    /// Block search over the real arcs (artificial arcs never re-enter).
    fn find_entering_arc(&mut self) -> bool {
        let total = self.arc_num;
        let mut min = 0.0;
        let mut cnt = self.block_size;
        let mut best = NONE;
        for step in 0..total {
            let e = (self.next_arc + step) % total;
            let c = self.reduced(e);
            if c < min {
                min = c;
                best = e;
            }
            cnt -= 1;
            if cnt == 0 {
                if best != NONE && self.significant(best, min) {
                    self.in_arc = best;
                    self.next_arc = (e + 1) % total;
                    return true;
                }
                cnt = self.block_size;
            }
        }
        if best != NONE && self.significant(best, min) {
            self.in_arc = best;
            return true;
        }
        false
    }

    fn find_join_node(&mut self) {
        let mut u = self.source(self.in_arc);
        let mut v = self.target(self.in_arc);
        while u != v {
            if self.succ_num[u] < self.succ_num[v] {
                u = self.parent[u];
            } else {
                v = self.parent[v];
            }
        }
        self.join = u;
    }

    fn find_leaving_arc(&mut self) -> bool {
        let (first, second) = if self.state[self.in_arc] == STATE_LOWER {
            (self.source(self.in_arc), self.target(self.in_arc))
        } else {
            (self.target(self.in_arc), self.source(self.in_arc))
        };
        self.delta = f64::INFINITY;
        let mut result = 0;
        let mut u = first;
        while u != self.join {
            let d = if self.pred_dir[u] == DIR_DOWN {
                f64::INFINITY
            } else {
                self.flow[self.pred[u]]
            };
            if d < self.delta {
                self.delta = d;
                self.u_out = u;
                result = 1;
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != self.join {
            let d = if self.pred_dir[u] == DIR_UP {
                f64::INFINITY
            } else {
                self.flow[self.pred[u]]
            };
            if d <= self.delta {
                self.delta = d;
                self.u_out = u;
                result = 2;
            }
            u = self.parent[u];
        }
        if result == 1 {
            self.u_in = first;
            self.v_in = second;
        } else {
            self.u_in = second;
            self.v_in = first;
        }
        result != 0
    }

    fn change_flow(&mut self) {
        if self.delta > 0.0 {
            let val = self.state[self.in_arc] as f64 * self.delta;
            self.flow[self.in_arc] += val;
            let mut u = self.source(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] -= self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
            let mut u = self.target(self.in_arc);
            while u != self.join {
                let e = self.pred[u];
                self.flow[e] += self.pred_dir[u] as f64 * val;
                u = self.parent[u];
            }
        }
        self.state[self.in_arc] = STATE_TREE;
        // uncapacitated: the blocking arc always leaves at zero flow
        let out = self.pred[self.u_out];
        self.flow[out] = 0.0;
        self.state[out] = STATE_LOWER;
    }

    fn update_tree_structure(&mut self) {
        let old_rev_thread = self.rev_thread[self.u_out];
        let old_succ_num = self.succ_num[self.u_out];
        let old_last_succ = self.last_succ[self.u_out];
        let v_out = self.parent[self.u_out];
        let (u_in, v_in, u_out, join) = (self.u_in, self.v_in, self.u_out, self.join);
        let in_dir = if u_in == self.source(self.in_arc) { DIR_UP } else { DIR_DOWN };

        if u_in == u_out {
            self.parent[u_in] = v_in;
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            if self.thread[v_in] != u_out {
                let mut after = self.thread[old_last_succ];
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
                after = self.thread[v_in];
                self.thread[v_in] = u_out;
                self.rev_thread[u_out] = v_in;
                self.thread[old_last_succ] = after;
                self.rev_thread[after] = old_last_succ;
            }
        } else {
            let thread_continue = if old_rev_thread == v_in {
                self.thread[old_last_succ]
            } else {
                self.thread[v_in]
            };
            let mut stem = u_in;
            let mut par_stem = v_in;
            let mut last = self.last_succ[u_in];
            let mut after = self.thread[last];
            self.thread[v_in] = u_in;
            self.dirty_revs.clear();
            self.dirty_revs.push(v_in);
            while stem != u_out {
                let next_stem = self.parent[stem];
                self.thread[last] = next_stem;
                self.dirty_revs.push(last);
                let before = self.rev_thread[stem];
                self.thread[before] = after;
                self.rev_thread[after] = before;
                self.parent[stem] = par_stem;
                par_stem = stem;
                stem = next_stem;
                last = if self.last_succ[stem] == self.last_succ[par_stem] {
                    self.rev_thread[par_stem]
                } else {
                    self.last_succ[stem]
                };
                after = self.thread[last];
            }
            self.parent[u_out] = par_stem;
            self.thread[last] = thread_continue;
            self.rev_thread[thread_continue] = last;
            self.last_succ[u_out] = last;
            if old_rev_thread != v_in {
                self.thread[old_rev_thread] = after;
                self.rev_thread[after] = old_rev_thread;
            }
            for i in 0..self.dirty_revs.len() {
                let u = self.dirty_revs[i];
                let t = self.thread[u];
                self.rev_thread[t] = u;
            }
            let mut tmp_sc = 0;
            let tmp_ls = self.last_succ[u_out];
            let mut u = u_out;
            let mut p = self.parent[u];
            while u != u_in {
                self.pred[u] = self.pred[p];
                self.pred_dir[u] = -self.pred_dir[p];
                tmp_sc += self.succ_num[u] - self.succ_num[p];
                self.succ_num[u] = tmp_sc;
                self.last_succ[p] = tmp_ls;
                u = p;
                p = self.parent[u];
            }
            self.pred[u_in] = self.in_arc;
            self.pred_dir[u_in] = in_dir;
            self.succ_num[u_in] = old_succ_num;
        }

        let up_limit_out = if self.last_succ[join] == v_in { join } else { NONE };
        let last_succ_out = self.last_succ[u_out];
        let mut u = v_in;
        while u != NONE && self.last_succ[u] == v_in {
            self.last_succ[u] = last_succ_out;
            u = self.parent[u];
        }
        if join != old_rev_thread && v_in != old_rev_thread {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = old_rev_thread;
                u = self.parent[u];
            }
        } else if last_succ_out != old_last_succ {
            let mut u = v_out;
            while u != up_limit_out && u != NONE && self.last_succ[u] == old_last_succ {
                self.last_succ[u] = last_succ_out;
                u = self.parent[u];
            }
        }
        let mut u = v_in;
        while u != join {
            self.succ_num[u] += old_succ_num;
            u = self.parent[u];
        }
        let mut u = v_out;
        while u != join {
            self.succ_num[u] -= old_succ_num;
            u = self.parent[u];
        }
    }

    fn update_potential(&mut self) {
        let sigma = self.pi[self.v_in] - self.pi[self.u_in] - self.pred_dir[self.u_in] as f64 * self.arc_cost(self.in_arc);
        let end = self.thread[self.last_succ[self.u_in]];
        let mut u = self.u_in;
        while u != end {
            self.pi[u] += sigma;
            u = self.thread[u];
        }
    }
}

/// Solve `min sum c_ij f_ij` subject to row sums `supply` and column sums
/// `demand` (which must have equal totals).
pub fn solve_transport(supply: &[f64], demand: &[f64], cost: &[f64]) -> Result<TransportPlan> {
    let n = supply.len();
    let m = demand.len();
    if n == 0 || m == 0 {
        return Err(Error::Empty("transport marginals"));
    }
    if cost.len() != n * m {
        return Err(Error::DimensionMismatch {
            expected: n * m,
            got: cost.len(),
        });
    }
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::NonFinite("transport cost matrix"));
    }
    let mut s = Solver::new(supply, demand, cost);
    let max_iter = 50 * (n * m).max(1000) + 10_000;
    let mut iterations = 0;
    while s.find_entering_arc() {
        iterations += 1;
        if iterations > max_iter {
            return Err(Error::NotConverged {
                iterations,
                residual: f64::NAN,
            });
        }
        s.find_join_node();
        if !s.find_leaving_arc() || !s.delta.is_finite() {
            return Err(Error::NotConverged {
                iterations,
                residual: f64::INFINITY,
            });
        }
        s.change_flow();
        s.update_tree_structure();
        s.update_potential();
    }
    let mut total = 0.0;
    let mut flows = Vec::new();
    for (e, (&f, &c)) in s.flow[..s.arc_num].iter().zip(cost).enumerate() {
        if f > 0.0 {
            total += f * c;
            flows.push((e / m, e % m, f));
        }
    }
    Ok(TransportPlan {
        cost: total,
        flows,
        potentials: s.pi[..n + m].to_vec(),
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transport::assignment::solve_assignment;

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn trivial_instances() {
        let p = solve_transport(&[1.0], &[1.0], &[2.5]).unwrap();
        assert_eq!(p.cost, 2.5);
        let p = solve_transport(&[0.5, 0.5], &[0.5, 0.5], &[1.0, 0.0, 0.0, 1.0]).unwrap();
        assert!(p.cost.abs() < 1e-15);
    }

    #[test]
    fn agrees_with_assignment() {
        let mut r = lcg(7);
        for n in [2usize, 5, 17, 40] {
            for _ in 0..5 {
                let cost: Vec<f64> = (0..n * n).map(|_| r()).collect();
                let a = solve_assignment(&cost, n);
                let opt: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum::<f64>() / n as f64;
                let w = vec![1.0 / n as f64; n];
                let p = solve_transport(&w, &w, &cost).unwrap();
                assert!((p.cost - opt).abs() < 1e-12, "n={n}: {} vs {opt}", p.cost);
            }
        }
    }

    #[test]
    fn weighted_plan_is_feasible_and_dual_certified() {
        let mut r = lcg(99);
        for (n, m) in [(3usize, 7usize), (12, 5), (30, 30)] {
            let mut a: Vec<f64> = (0..n).map(|_| r() + 0.01).collect();
            let mut b: Vec<f64> = (0..m).map(|_| r() + 0.01).collect();
            let sa: f64 = a.iter().sum();
            let sb: f64 = b.iter().sum();
            a.iter_mut().for_each(|v| *v /= sa);
            b.iter_mut().for_each(|v| *v /= sb);
            let cost: Vec<f64> = (0..n * m).map(|_| r()).collect();
            let p = solve_transport(&a, &b, &cost).unwrap();
            let mut rows = vec![0.0; n];
            let mut cols = vec![0.0; m];
            for &(i, j, f) in &p.flows {
                rows[i] += f;
                cols[j] += f;
            }
            for i in 0..n {
                assert!((rows[i] - a[i]).abs() < 1e-12);
            }
            for j in 0..m {
                assert!((cols[j] - b[j]).abs() < 1e-12);
            }
            // reduced costs c_ij + pi_i - pi_j >= 0 and the dual objective equals the primal
            let pi = &p.potentials;
            for i in 0..n {
                for j in 0..m {
                    assert!(cost[i * m + j] + pi[i] - pi[n + j] > -1e-9);
                }
            }
            let dual: f64 = (0..m).map(|j| b[j] * pi[n + j]).sum::<f64>() - (0..n).map(|i| a[i] * pi[i]).sum::<f64>();
            assert!((dual - p.cost).abs() < 1e-9, "dual {dual} primal {}", p.cost);
        }
    }
}
