//! Best-first branch-and-bound over one presolved block.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::Arc;
use std::time::Instant;

use crate::milp::Relation;

use super::cuts;
use super::presolve::Block;
use super::simplex::{self, Basis, LpData, LpOutcome, LpStatus, SimplexParams};
use super::{Branching, SolverOptions, Status};

const MAX_CUT_ROUNDS: usize = 20;
/// Beyond this many open nodes, new children warm-start from the root basis
/// instead of keeping their parent's, which bounds memory on large trees.
const MAX_WARM_OPEN: usize = 20_000;

#[derive(Debug, Clone)]
pub(crate) struct BlockOutcome {
    pub status: Status,
    /// Local values, empty when no assignment is available.
    pub x: Vec<f64>,
    pub objective: f64,
    pub bound: f64,
    pub nodes: usize,
    pub iterations: usize,
}

struct Node {
    bound: f64,
    depth: u32,
    id: u64,
    changes: Vec<(usize, f64, f64)>,
    /// Branching that created this node: (var, went up, fractional part).
    origin: Option<(usize, bool, f64)>,
    /// Optimal basis of the parent, used to warm-start this node's LP.
    warm: Option<Arc<Basis>>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Node {
    // BinaryHeap pops the max: lowest bound, then deepest, then oldest
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

#[derive(Default, Clone, Copy)]
struct Pseudo {
    down_sum: f64,
    down_n: u32,
    up_sum: f64,
    up_n: u32,
}

fn fractional(x: f64, int_tol: f64) -> Option<f64> {
    let f = x - x.floor();
    (f > int_tol && f < 1.0 - int_tol).then_some(f)
}

fn pick_branch(block: &Block, x: &[f64], opts: &SolverOptions, pseudo: &[Pseudo]) -> Option<(usize, f64)> {
    let candidates = block.integer.iter().enumerate().filter(|(_, &i)| i).filter_map(|(j, _)| fractional(x[j], opts.int_tol).map(|f| (j, f)));
    match opts.branching {
        Branching::MostFractional => {
            let mut best: Option<(usize, f64, f64)> = None;
            for (j, f) in candidates {
                let score = f.min(1.0 - f);
                if best.map_or(true, |b| score > b.2 + 1e-12) {
                    best = Some((j, f, score));
                }
            }
            best.map(|(j, f, _)| (j, f))
        }
        Branching::PseudoCost => {
            let avg = |sum: f64, n: u32, fallback: f64| if n > 0 { sum / n as f64 } else { fallback };
            let (mut ds, mut dn, mut us, mut un) = (0.0, 0u32, 0.0, 0u32);
            for p in pseudo {
                ds += p.down_sum;
                dn += p.down_n;
                us += p.up_sum;
                un += p.up_n;
            }
            let (gd, gu) = (avg(ds, dn, 1.0), avg(us, un, 1.0));
            let mut best: Option<(usize, f64, f64)> = None;
            for (j, f) in candidates {
                let p = pseudo[j];
                let down = avg(p.down_sum, p.down_n, gd) * f;
                let up = avg(p.up_sum, p.up_n, gu) * (1.0 - f);
                let score = down.max(1e-6) * up.max(1e-6);
                if best.map_or(true, |b| score > b.2 * (1.0 + 1e-12)) {
                    best = Some((j, f, score));
                }
            }
            best.map(|(j, f, _)| (j, f))
        }
    }
}

fn snap_integers(block: &Block, x: &mut [f64]) {
    for (j, v) in x.iter_mut().enumerate() {
        if block.integer[j] {
            *v = v.round();
        }
    }
}

fn objective(block: &Block, x: &[f64]) -> f64 {
    block.lp.cost.iter().zip(x).map(|(c, x)| c * x).sum()
}

fn is_integral(block: &Block, x: &[f64], int_tol: f64) -> bool {
    block.integer.iter().enumerate().all(|(j, &i)| !i || fractional(x[j], int_tol).is_none())
}

/// Tightens integer bounds using the root reduced costs: moving a nonbasic
/// column `k` units off its bound costs at least `k·|d|`, so values that
/// cannot beat `incumbent` are dropped.
fn reduced_cost_fixing(block: &Block, root: &LpOutcome, incumbent: f64, lo: &mut [f64], up: &mut [f64]) {
    let room = incumbent - root.objective;
    if !room.is_finite() || room < 0.0 || root.reduced.is_empty() {
        return;
    }
    for j in 0..lo.len() {
        let d = root.reduced[j];
        if !block.integer[j] || d.abs() <= 1e-9 {
            continue;
        }
        let steps = (room / d.abs() * (1.0 + 1e-9) + 1e-9).floor();
        if d > 0.0 && root.x[j] <= block.lo[j] + 1e-9 {
            up[j] = up[j].min(block.lo[j] + steps);
        } else if d < 0.0 && root.x[j] >= block.up[j] - 1e-9 {
            lo[j] = lo[j].max(block.up[j] - steps);
        }
    }
}

/// Adds rounds of c-MIR cuts at the root while they move the bound.
fn add_root_cuts(block: &Block, lp: &mut LpData, root: &mut LpOutcome, params: &SimplexParams, int_tol: f64, iterations: &mut usize) {
    let limit = block.lp.m.max(10);
    let mut added = 0usize;
    let mut stalls = 0usize;
    for _ in 0..MAX_CUT_ROUNDS {
        if added >= limit || is_integral(block, &root.x, int_tol) {
            break;
        }
        let Some(basis) = root.basis.clone() else { break };
        let found = cuts::separate(lp, &block.lo, &block.up, &block.integer, &root.x, limit - added);
        if found.is_empty() {
            break;
        }
        let mut trial = lp.clone();
        for cut in &found {
            trial.push_row(&cut.terms, Relation::Le, cut.rhs);
        }
        let out = simplex::solve_warm(&trial, &block.lo, &block.up, params, &basis);
        *iterations += out.iterations;
        if out.status != LpStatus::Optimal {
            break;
        }
        let gain = out.objective - root.objective;
        added += found.len();
        *lp = trial;
        *root = out;
        if gain <= 1e-6 * root.objective.abs().max(1.0) {
            stalls += 1;
            if stalls >= 2 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    // cuts with slack at the final root only slow the tree down
    let Some(basis) = root.basis.as_ref() else { return };
    let rows = lp.rows();
    let drop: Vec<bool> = (0..lp.m)
        .map(|i| {
            let activity: f64 = rows[i].iter().map(|&(j, a)| a * root.x[j]).sum();
            i >= block.lp.m && basis.slack_is_basic(lp.n, i) && lp.rhs[i] - activity > 1e-6
        })
        .collect();
    if drop.iter().any(|&d| d) {
        if let Some((smaller, basis)) = simplex::drop_rows(lp, basis, &drop) {
            *lp = smaller;
            root.basis = Some(basis);
        }
    }
}

/// `gap_share` scales the per-block gap target so that the gaps of all
/// blocks together stay within the configured limit. The deadline only stops
/// the tree search: the root LP, its cuts and the rounding heuristic always
/// run, so every block that is feasible ends with some assignment.
pub(crate) fn solve_block(block: &Block, opts: &SolverOptions, deadline: Option<Instant>, mip: bool, gap_share: f64) -> BlockOutcome {
    let params = SimplexParams { feas_tol: opts.feas_tol, opt_tol: 1e-9, max_iter: opts.lp_iteration_limit, deadline: None };
    let tree_params = SimplexParams { deadline, ..params };
    let mut iterations = 0usize;
    let fail = |status: Status, nodes: usize, iterations: usize| BlockOutcome {
        status,
        x: Vec::new(),
        objective: f64::NAN,
        bound: f64::NEG_INFINITY,
        nodes,
        iterations,
    };

    let mut root = simplex::solve(&block.lp, &block.lo, &block.up, &params);
    iterations += root.iterations;
    match root.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return fail(Status::Infeasible, 1, iterations),
        LpStatus::Unbounded => return fail(Status::Unbounded, 1, iterations),
        LpStatus::IterationLimit => return fail(Status::IterationLimit, 1, iterations),
    }
    if !mip || !block.has_integers() {
        return BlockOutcome { status: Status::Optimal, objective: root.objective, bound: root.objective, x: root.x, nodes: 0, iterations };
    }

    let tol = |inc: f64| opts.gap_limit * inc.abs().max(1.0) * gap_share;
    let mut incumbent: Option<(f64, Vec<f64>)> = None;
    let offer = |x: Vec<f64>, incumbent: &mut Option<(f64, Vec<f64>)>| -> bool {
        let mut x = x;
        snap_integers(block, &mut x);
        let obj = objective(block, &x);
        let better = incumbent.as_ref().map_or(true, |(best, _)| obj < *best);
        if better {
            *incumbent = Some((obj, x));
        }
        better
    };

    if is_integral(block, &root.x, opts.int_tol) {
        let bound = root.objective;
        offer(root.x, &mut incumbent);
        let (obj, x) = incumbent.expect("just offered");
        return BlockOutcome { status: Status::Optimal, objective: obj, bound, x, nodes: 0, iterations };
    }

    let mut lp = block.lp.clone();
    if opts.cuts {
        add_root_cuts(block, &mut lp, &mut root, &params, opts.int_tol, &mut iterations);
    }
    let root_bound = root.objective;
    let root_warm = root.basis.clone().map(Arc::new);
    let solve_lp = |lo: &[f64], up: &[f64], warm: Option<&Basis>, params: &SimplexParams, iterations: &mut usize| -> LpOutcome {
        let out = match warm {
            Some(b) => simplex::solve_warm(&lp, lo, up, params, b),
            None => simplex::solve(&lp, lo, up, params),
        };
        *iterations += out.iterations;
        out
    };
    if is_integral(block, &root.x, opts.int_tol) {
        offer(root.x.clone(), &mut incumbent);
    }

    if opts.rounding_heuristic && incumbent.is_none() {
        for round in [f64::round as fn(f64) -> f64, f64::ceil] {
            let (mut lo, mut up) = (block.lo.clone(), block.up.clone());
            for j in 0..lo.len() {
                if block.integer[j] {
                    let v = round(root.x[j]).clamp(lo[j], up[j]);
                    lo[j] = v;
                    up[j] = v;
                }
            }
            let out = solve_lp(&lo, &up, root_warm.as_deref(), &params, &mut iterations);
            if out.status == LpStatus::Optimal {
                offer(out.x, &mut incumbent);
            }
        }
    }

    // global bounds, tightened by reduced-cost fixing as the incumbent improves
    let (mut glo, mut gup) = (block.lo.clone(), block.up.clone());
    if let Some((inc, _)) = &incumbent {
        reduced_cost_fixing(block, &root, *inc, &mut glo, &mut gup);
    }

    let mut pseudo = vec![Pseudo::default(); block.lp.n];
    let mut heap = BinaryHeap::new();
    let mut next_id = 1u64;
    let mut nodes = 1usize;
    let mut push_children =
        |heap: &mut BinaryHeap<Node>, parent_changes: &[(usize, f64, f64)], depth: u32, bound: f64, warm: Option<Arc<Basis>>, j: usize, f: f64, xj: f64, lo: f64, up: f64| {
            for upward in [false, true] {
                let mut changes = parent_changes.to_vec();
                if upward {
                    changes.push((j, xj.ceil(), up));
                } else {
                    changes.push((j, lo, xj.floor()));
                }
                heap.push(Node { bound, depth: depth + 1, id: next_id, changes, origin: Some((j, upward, f)), warm: warm.clone() });
                next_id += 1;
            }
        };
    if !is_integral(block, &root.x, opts.int_tol) {
        let (j, f) = pick_branch(block, &root.x, opts, &pseudo).expect("root is fractional");
        push_children(&mut heap, &[], 0, root_bound, root_warm.clone(), j, f, root.x[j], glo[j], gup[j]);
    }

    let mut limit_hit = false;
    let mut open_bound = f64::INFINITY;
    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound >= inc - tol(*inc) {
                open_bound = node.bound;
                heap.clear();
                break;
            }
        }
        if opts.node_limit.is_some_and(|l| nodes >= l) || deadline.is_some_and(|d| Instant::now() >= d) {
            open_bound = node.bound;
            limit_hit = true;
            break;
        }
        nodes += 1;
        let (mut lo, mut up) = (glo.clone(), gup.clone());
        for &(j, l, u) in &node.changes {
            lo[j] = lo[j].max(l);
            up[j] = up[j].min(u);
        }
        let out = solve_lp(&lo, &up, node.warm.as_deref(), &tree_params, &mut iterations);
        match out.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            LpStatus::Unbounded | LpStatus::IterationLimit => {
                open_bound = node.bound;
                limit_hit = true;
                break;
            }
        }
        if let Some((j, upward, f)) = node.origin {
            let delta = (out.objective - node.bound).max(0.0);
            let p = &mut pseudo[j];
            if upward {
                p.up_sum += delta / (1.0 - f);
                p.up_n += 1;
            } else {
                p.down_sum += delta / f;
                p.down_n += 1;
            }
        }
        if let Some((inc, _)) = &incumbent {
            if out.objective >= inc - tol(*inc) {
                continue;
            }
        }
        match pick_branch(block, &out.x, opts, &pseudo) {
            None => {
                if offer(out.x, &mut incumbent) {
                    let inc = incumbent.as_ref().expect("just offered").0;
                    reduced_cost_fixing(block, &root, inc, &mut glo, &mut gup);
                }
            }
            Some((j, f)) => {
                let xj = out.x[j];
                let warm = if heap.len() < MAX_WARM_OPEN { out.basis.map(Arc::new) } else { root_warm.clone() };
                push_children(&mut heap, &node.changes, node.depth, out.objective, warm, j, f, xj, lo[j], up[j]);
            }
        }
    }
    let remaining = heap.iter().map(|n| n.bound).fold(open_bound, f64::min);

    match incumbent {
        Some((obj, x)) => {
            let bound = remaining.min(obj).max(root_bound.min(obj));
            let status = if limit_hit && obj - bound > tol(obj) { Status::IterationLimit } else { Status::Optimal };
            BlockOutcome { status, objective: obj, bound, x, nodes, iterations }
        }
        None if limit_hit => BlockOutcome { bound: remaining.max(root_bound), ..fail(Status::IterationLimit, nodes, iterations) },
        None => fail(Status::Infeasible, nodes, iterations),
    }
}
