//! Bounded-variable revised simplex with the basis inverse kept in product
//! form (a file of eta columns).
//!
//! Every row `a·x rel b` becomes `a·x + s = b` with a bounded slack `s`
//! (`s ≥ 0` for ≤, `s ≤ 0` for ≥, `s = 0` for =). Rows are scaled to unit
//! max coefficient when the [`LpData`] is built. A cold solve runs the primal
//! method; phase 1 adds one artificial column only for rows whose slack
//! cannot absorb the initial residual. A warm solve restarts from an earlier
//! optimal [`Basis`] after bound changes or appended rows and runs the dual
//! method until the basis is primal feasible again.

use std::time::Instant;

use crate::milp::Relation;

const PIVOT_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 64;
const DEGENERATE_SWITCH: usize = 50;

#[derive(Debug, Clone)]
pub(crate) struct LpData {
    pub n: usize,
    pub m: usize,
    /// Structural columns as (row, coefficient), rows already scaled.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    pub rhs: Vec<f64>,
    pub slack_lo: Vec<f64>,
    pub slack_up: Vec<f64>,
}

impl LpData {
    pub fn new<'r>(n: usize, cost: Vec<f64>, rows: impl IntoIterator<Item = (&'r [(usize, f64)], Relation, f64)>) -> Self {
        let mut lp = Self { n, m: 0, cols: vec![Vec::new(); n], cost, rhs: Vec::new(), slack_lo: Vec::new(), slack_up: Vec::new() };
        for (terms, rel, b) in rows {
            lp.push_row(terms, rel, b);
        }
        lp
    }

    pub fn push_row(&mut self, terms: &[(usize, f64)], rel: Relation, b: f64) {
        let i = self.m;
        let scale = terms.iter().map(|(_, a)| a.abs()).fold(0.0, f64::max);
        let scale = if scale > 0.0 { scale } else { 1.0 };
        for &(j, a) in terms {
            if a != 0.0 {
                self.cols[j].push((i, a / scale));
            }
        }
        self.rhs.push(b / scale);
        let (lo, up) = match rel {
            Relation::Le => (0.0, f64::INFINITY),
            Relation::Ge => (f64::NEG_INFINITY, 0.0),
            Relation::Eq => (0.0, 0.0),
        };
        self.slack_lo.push(lo);
        self.slack_up.push(up);
        self.m += 1;
    }

    /// Row-major copy of the (scaled) constraint matrix.
    pub fn rows(&self) -> Vec<Vec<(usize, f64)>> {
        let mut rows = vec![Vec::new(); self.m];
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, a) in col {
                rows[i].push((j, a));
            }
        }
        rows
    }
}

/// An optimal basis over structural and slack columns (`j < n + m`).
/// Rows appended after it was taken start with their slack basic.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Basis {
    basic: Vec<usize>,
    at_upper: Vec<bool>,
}

impl Basis {
    pub fn slack_is_basic(&self, n: usize, row: usize) -> bool {
        self.basic.contains(&(n + row))
    }
}

/// Removes rows whose slack is basic in `basis`; dropping a unit column
/// together with its row keeps the basis nonsingular. Returns `None` if a
/// dropped row's slack is nonbasic.
pub(crate) fn drop_rows(lp: &LpData, basis: &Basis, drop: &[bool]) -> Option<(LpData, Basis)> {
    let n = lp.n;
    if basis.basic.len() != lp.m || (0..lp.m).any(|i| drop[i] && !basis.slack_is_basic(n, i)) {
        return None;
    }
    let mut new_index = vec![usize::MAX; lp.m];
    let mut next = 0;
    for i in 0..lp.m {
        if !drop[i] {
            new_index[i] = next;
            next += 1;
        }
    }
    let remap = |j: usize| if j < n { Some(j) } else { (new_index[j - n] != usize::MAX).then(|| n + new_index[j - n]) };
    let mut out = LpData { n, m: next, cols: vec![Vec::new(); n], cost: lp.cost.clone(), rhs: Vec::new(), slack_lo: Vec::new(), slack_up: Vec::new() };
    for (j, col) in lp.cols.iter().enumerate() {
        out.cols[j] = col.iter().filter(|&&(i, _)| !drop[i]).map(|&(i, a)| (new_index[i], a)).collect();
    }
    for i in (0..lp.m).filter(|&i| !drop[i]) {
        out.rhs.push(lp.rhs[i]);
        out.slack_lo.push(lp.slack_lo[i]);
        out.slack_up.push(lp.slack_up[i]);
    }
    let basic = basis.basic.iter().filter_map(|&j| remap(j)).collect();
    let mut at_upper = basis.at_upper[..n].to_vec();
    at_upper.extend((0..lp.m).filter(|&i| !drop[i]).map(|i| basis.at_upper[n + i]));
    Some((out, Basis { basic, at_upper }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct LpOutcome {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Structural reduced costs, empty unless optimal.
    pub reduced: Vec<f64>,
    pub basis: Option<Basis>,
}

impl LpOutcome {
    fn failed(status: LpStatus, iterations: usize) -> Self {
        Self { status, x: Vec::new(), objective: f64::NAN, iterations, reduced: Vec::new(), basis: None }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct SimplexParams {
    pub feas_tol: f64,
    pub opt_tol: f64,
    pub max_iter: usize,
    pub deadline: Option<Instant>,
}

const NONBASIC: usize = usize::MAX;

/// Elementary matrix equal to the identity except for column `r`, which is
/// built from the pivot column `alpha`: `E[r][r] = 1/piv` and
/// `E[i][r] = −alpha[i]/piv`. `col` holds the nonzero `alpha[i]` for `i ≠ r`.
#[derive(Debug, Clone)]
struct Eta {
    r: usize,
    piv: f64,
    col: Vec<(usize, f64)>,
}

impl Eta {
    fn from_dense(r: usize, alpha: &[f64]) -> Self {
        let col = alpha.iter().enumerate().filter(|&(i, &a)| i != r && a != 0.0).map(|(i, &a)| (i, a)).collect();
        Self { r, piv: alpha[r], col }
    }
}

/// `v ← B⁻¹ v`.
fn ftran(etas: &[Eta], v: &mut [f64]) {
    for e in etas {
        let vr = v[e.r];
        if vr == 0.0 {
            continue;
        }
        let vr = vr / e.piv;
        v[e.r] = vr;
        for &(i, a) in &e.col {
            v[i] -= a * vr;
        }
    }
}

/// `y ← yᵀ B⁻¹`.
fn btran(etas: &[Eta], y: &mut [f64]) {
    for e in etas.iter().rev() {
        let mut acc = y[e.r];
        for &(i, a) in &e.col {
            acc -= y[i] * a;
        }
        y[e.r] = acc / e.piv;
    }
}

struct Tableau<'a> {
    lp: &'a LpData,
    unit: Vec<(usize, f64)>,
    art: Vec<(usize, f64)>,
    m: usize,
    lo: Vec<f64>,
    up: Vec<f64>,
    x: Vec<f64>,
    cost: Vec<f64>,
    basis: Vec<usize>,
    pos: Vec<usize>,
    etas: Vec<Eta>,
    since_refactor: usize,
    iterations: usize,
    // scratch
    y: Vec<f64>,
    alpha: Vec<f64>,
}

enum Step {
    Optimal,
    Unbounded,
    Limit,
}

impl<'a> Tableau<'a> {
    fn col(&self, j: usize) -> &[(usize, f64)] {
        let (n, m) = (self.lp.n, self.m);
        if j < n {
            &self.lp.cols[j]
        } else if j < n + m {
            &self.unit[j - n..j - n + 1]
        } else {
            &self.art[j - n - m..j - n - m + 1]
        }
    }

    /// Rebuilds the eta file from the identity. Basic slacks keep their own
    /// row; the other basic columns are pivoted in sparsest-first, each onto
    /// the free row with the largest entry. Basis positions are renumbered so
    /// that position `i` is the column pivoted on row `i`.
    fn refactor(&mut self) -> bool {
        let (n, m) = (self.lp.n, self.m);
        let mut free = vec![true; m];
        let mut layout = vec![NONBASIC; m];
        let mut rest: Vec<(usize, usize)> = Vec::new();
        for &j in &self.basis {
            if j >= n && j < n + m {
                free[j - n] = false;
                layout[j - n] = j;
            } else {
                rest.push((self.col(j).len(), j));
            }
        }
        rest.sort_unstable();
        let mut etas: Vec<Eta> = Vec::with_capacity(rest.len());
        let mut v = vec![0.0; m];
        let mut mark = vec![false; m];
        let mut touched: Vec<usize> = Vec::new();
        for &(_, j) in &rest {
            for &(i, a) in self.col(j) {
                v[i] = a;
                mark[i] = true;
                touched.push(i);
            }
            // sparse ftran: only etas whose pivot row is already nonzero act
            for e in &etas {
                let vr = v[e.r];
                if vr == 0.0 {
                    continue;
                }
                let vr = vr / e.piv;
                v[e.r] = vr;
                for &(i, a) in &e.col {
                    if !mark[i] {
                        mark[i] = true;
                        touched.push(i);
                    }
                    v[i] -= a * vr;
                }
            }
            let mut r = usize::MAX;
            let mut best = 1e-11;
            for &i in &touched {
                if free[i] && v[i].abs() > best {
                    best = v[i].abs();
                    r = i;
                }
            }
            if r == usize::MAX {
                return false;
            }
            free[r] = false;
            layout[r] = j;
            touched.sort_unstable();
            let col = touched.iter().filter(|&&i| i != r && v[i] != 0.0).map(|&i| (i, v[i])).collect();
            etas.push(Eta { r, piv: v[r], col });
            for &i in &touched {
                v[i] = 0.0;
                mark[i] = false;
            }
            touched.clear();
        }
        self.etas = etas;
        self.basis = layout;
        for (k, &j) in self.basis.iter().enumerate() {
            self.pos[j] = k;
        }
        self.since_refactor = 0;
        self.recompute_basic();
        true
    }

    fn recompute_basic(&mut self) {
        let mut r = self.lp.rhs.clone();
        for j in 0..self.x.len() {
            if self.pos[j] == NONBASIC && self.x[j] != 0.0 {
                let xj = self.x[j];
                for &(i, a) in self.col(j) {
                    r[i] -= a * xj;
                }
            }
        }
        ftran(&self.etas, &mut r);
        for k in 0..self.m {
            self.x[self.basis[k]] = r[k];
        }
    }

    fn compute_duals(&mut self) {
        for k in 0..self.m {
            self.y[k] = self.cost[self.basis[k]];
        }
        btran(&self.etas, &mut self.y);
    }

    fn reduced_cost(&self, j: usize) -> f64 {
        self.cost[j] - self.col(j).iter().map(|&(i, a)| self.y[i] * a).sum::<f64>()
    }

    /// Entering column and direction (+1 increase, −1 decrease).
    fn price(&self, bland: bool, tol: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.x.len() {
            if self.pos[j] != NONBASIC || self.lo[j] == self.up[j] {
                continue;
            }
            let d = self.reduced_cost(j);
            let can_up = self.x[j] < self.up[j];
            let can_down = self.x[j] > self.lo[j];
            let dir = if d < -tol && can_up {
                1.0
            } else if d > tol && can_down {
                -1.0
            } else {
                continue;
            };
            if bland {
                return Some((j, dir));
            }
            if best.map_or(true, |(_, _, b)| d.abs() > b) {
                best = Some((j, dir, d.abs()));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    fn compute_alpha(&mut self, q: usize) {
        self.alpha.iter_mut().for_each(|v| *v = 0.0);
        let col = if q < self.lp.n { &self.lp.cols[q][..] } else if q < self.lp.n + self.m { &self.unit[q - self.lp.n..q - self.lp.n + 1] } else { &self.art[q - self.lp.n - self.m..q - self.lp.n - self.m + 1] };
        for &(i, a) in col {
            self.alpha[i] = a;
        }
        ftran(&self.etas, &mut self.alpha);
    }

    /// Harris two-pass ratio test. Returns (step, leaving position) where
    /// `None` for the position means the entering variable hits its own bound.
    fn ratio_test(&self, q: usize, dir: f64, bland: bool, tol: f64) -> Option<(f64, Option<usize>)> {
        let flip = self.up[q] - self.lo[q];
        let mut limits: Vec<(usize, f64, f64)> = Vec::new(); // (pos, distance, |a|)
        for k in 0..self.m {
            let a = self.alpha[k] * dir;
            if a.abs() <= PIVOT_TOL {
                continue;
            }
            let b = self.basis[k];
            let dist = if a > 0.0 { self.x[b] - self.lo[b] } else { self.up[b] - self.x[b] };
            if dist.is_finite() {
                limits.push((k, dist.max(0.0), a.abs()));
            }
        }
        if limits.is_empty() {
            return if flip.is_finite() { Some((flip, None)) } else { None };
        }
        let chosen = if bland {
            let t_min = limits.iter().map(|&(_, d, a)| d / a).fold(f64::INFINITY, f64::min);
            limits
                .iter()
                .filter(|&&(_, d, a)| d / a <= t_min + 1e-12)
                .min_by_key(|&&(k, _, _)| self.basis[k])
                .copied()
                .expect("non-empty")
        } else {
            let t_max = limits.iter().map(|&(_, d, a)| (d + tol) / a).fold(f64::INFINITY, f64::min);
            limits
                .iter()
                .filter(|&&(_, d, a)| d / a <= t_max)
                .max_by(|x, y| x.2.total_cmp(&y.2).then(y.0.cmp(&x.0)))
                .copied()
                .expect("non-empty")
        };
        let theta = chosen.1 / chosen.2;
        if flip <= theta {
            Some((flip, None))
        } else {
            Some((theta, Some(chosen.0)))
        }
    }

    /// `leave_value` overrides the bound the leaving variable is set to; the
    /// dual method needs it because its leaving variable moves onto the bound
    /// it was violating.
    fn pivot(&mut self, q: usize, dir: f64, theta: f64, leave: Option<usize>, leave_value: Option<f64>) {
        let m = self.m;
        if theta != 0.0 {
            self.x[q] += dir * theta;
            for k in 0..m {
                let b = self.basis[k];
                self.x[b] -= self.alpha[k] * dir * theta;
            }
        }
        let Some(r) = leave else {
            // bound flip: snap to the exact bound
            self.x[q] = if dir > 0.0 { self.up[q] } else { self.lo[q] };
            return;
        };
        let leaving = self.basis[r];
        self.x[leaving] = leave_value.unwrap_or(if self.alpha[r] * dir > 0.0 { self.lo[leaving] } else { self.up[leaving] });
        self.pos[leaving] = NONBASIC;
        self.basis[r] = q;
        self.pos[q] = r;

        self.etas.push(Eta::from_dense(r, &self.alpha));
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor();
        }
    }

    fn run(&mut self, p: &SimplexParams) -> Step {
        let mut degenerate = 0usize;
        loop {
            if self.iterations >= p.max_iter || p.deadline.is_some_and(|d| self.iterations % 32 == 0 && Instant::now() >= d) {
                return Step::Limit;
            }
            let bland = degenerate >= DEGENERATE_SWITCH;
            self.compute_duals();
            let Some((q, dir)) = self.price(bland, p.opt_tol) else {
                return Step::Optimal;
            };
            self.compute_alpha(q);
            let Some((theta, leave)) = self.ratio_test(q, dir, bland, p.feas_tol) else {
                return Step::Unbounded;
            };
            if theta <= 1e-12 {
                degenerate += 1;
            } else {
                degenerate = 0;
            }
            self.pivot(q, dir, theta, leave, None);
            self.iterations += 1;
        }
    }

    /// Dual simplex from a dual feasible basis. `Optimal` means primal
    /// feasible; `Unbounded` means the dual is unbounded, so the LP is
    /// infeasible.
    fn run_dual(&mut self, p: &SimplexParams, max_iter: usize) -> Step {
        let m = self.m;
        let mut rho = vec![0.0; m];
        let mut done = 0usize;
        loop {
            if done >= max_iter || self.iterations >= p.max_iter || p.deadline.is_some_and(|d| self.iterations % 32 == 0 && Instant::now() >= d) {
                return Step::Limit;
            }
            let mut leave: Option<(usize, f64, f64)> = None; // (pos, target, violation)
            for k in 0..m {
                let b = self.basis[k];
                let (v, target) = if self.x[b] < self.lo[b] - p.feas_tol {
                    (self.lo[b] - self.x[b], self.lo[b])
                } else if self.x[b] > self.up[b] + p.feas_tol {
                    (self.x[b] - self.up[b], self.up[b])
                } else {
                    continue;
                };
                if leave.map_or(true, |(_, _, w)| v > w) {
                    leave = Some((k, target, v));
                }
            }
            let Some((r, target, _)) = leave else { return Step::Optimal };
            let increase = target > self.x[self.basis[r]];
            rho.iter_mut().for_each(|v| *v = 0.0);
            rho[r] = 1.0;
            btran(&self.etas, &mut rho);
            self.compute_duals();
            // (column, ratio, |alpha|)
            let mut cands: Vec<(usize, f64, f64)> = Vec::new();
            for j in 0..self.x.len() {
                if self.pos[j] != NONBASIC || self.lo[j] == self.up[j] {
                    continue;
                }
                let a: f64 = self.col(j).iter().map(|&(i, v)| rho[i] * v).sum();
                if a.abs() <= PIVOT_TOL {
                    continue;
                }
                // x_basic moves by −a per unit increase of x_j
                let moves_up = if increase { a < 0.0 } else { a > 0.0 };
                let at_lo = self.x[j] <= self.lo[j];
                let at_up = self.x[j] >= self.up[j];
                let d = self.reduced_cost(j);
                let ratio = if moves_up && !at_up {
                    d.max(0.0) / a.abs()
                } else if !moves_up && !at_lo {
                    (-d).max(0.0) / a.abs()
                } else {
                    continue;
                };
                cands.push((j, ratio, a.abs()));
            }
            if cands.is_empty() {
                return Step::Unbounded;
            }
            let bound = cands.iter().map(|&(_, t, a)| t + p.opt_tol / a).fold(f64::INFINITY, f64::min);
            let &(q, _, _) = cands
                .iter()
                .filter(|&&(_, t, _)| t <= bound)
                .max_by(|x, y| x.2.total_cmp(&y.2).then(y.0.cmp(&x.0)))
                .expect("non-empty");
            self.compute_alpha(q);
            let delta = (self.x[self.basis[r]] - target) / self.alpha[r];
            let dir = if delta >= 0.0 { 1.0 } else { -1.0 };
            self.pivot(q, dir, delta.abs(), Some(r), Some(target));
            self.iterations += 1;
            done += 1;
        }
    }

    fn basis(&self, n: usize) -> Option<Basis> {
        let m = self.m;
        if self.basis.iter().any(|&j| j >= n + m) {
            return None;
        }
        let at_upper = (0..n + m).map(|j| self.pos[j] == NONBASIC && self.up[j].is_finite() && self.x[j] >= self.up[j] && self.lo[j] != self.up[j]).collect();
        Some(Basis { basic: self.basis.clone(), at_upper })
    }

    fn outcome(&mut self, n: usize, status: LpStatus) -> LpOutcome {
        if status != LpStatus::Optimal {
            return LpOutcome::failed(status, self.iterations);
        }
        let x: Vec<f64> = (0..n).map(|j| self.x[j].clamp(self.lo[j], self.up[j])).collect();
        let objective = self.lp.cost.iter().zip(&x).map(|(c, x)| c * x).sum();
        self.compute_duals();
        let reduced = (0..n).map(|j| if self.pos[j] == NONBASIC { self.reduced_cost(j) } else { 0.0 }).collect();
        LpOutcome { status, x, objective, iterations: self.iterations, reduced, basis: self.basis(n) }
    }
}

fn initial_value(lo: f64, up: f64) -> f64 {
    if lo.is_finite() {
        lo
    } else if up.is_finite() {
        up
    } else {
        0.0
    }
}

/// Solves `min cost·x` over the rows of `lp` with structural bounds `lo`/`up`.
pub(crate) fn solve(lp: &LpData, lo: &[f64], up: &[f64], p: &SimplexParams) -> LpOutcome {
    let (n, m) = (lp.n, lp.m);
    for j in 0..n {
        if lo[j] > up[j] {
            return LpOutcome::failed(LpStatus::Infeasible, 0);
        }
    }
    let mut x: Vec<f64> = (0..n).map(|j| initial_value(lo[j], up[j])).collect();
    let mut resid = lp.rhs.clone();
    for (j, col) in lp.cols.iter().enumerate() {
        for &(i, a) in col {
            resid[i] -= a * x[j];
        }
    }

    let mut all_lo = lo.to_vec();
    let mut all_up = up.to_vec();
    all_lo.extend_from_slice(&lp.slack_lo);
    all_up.extend_from_slice(&lp.slack_up);
    let mut art = Vec::new();
    let mut basis = vec![0; m];
    let mut diag = vec![1.0; m];
    let mut slack_x = vec![0.0; m];
    for i in 0..m {
        let r = resid[i];
        let clamped = r.clamp(lp.slack_lo[i], lp.slack_up[i]);
        if (r - clamped).abs() <= p.feas_tol * 1e-3 {
            slack_x[i] = r;
            basis[i] = n + i;
        } else {
            slack_x[i] = clamped;
            let sign = if r > clamped { 1.0 } else { -1.0 };
            basis[i] = n + m + art.len();
            art.push((i, sign));
            diag[i] = sign;
        }
    }
    x.extend_from_slice(&slack_x);
    let n_art = art.len();
    for &(i, sign) in &art {
        x.push((resid[i] - slack_x[i]) * sign);
        all_lo.push(0.0);
        all_up.push(f64::INFINITY);
    }
    let total = n + m + n_art;
    let mut pos = vec![NONBASIC; total];
    for (k, &j) in basis.iter().enumerate() {
        pos[j] = k;
    }
    let etas: Vec<Eta> = (0..m).filter(|&i| diag[i] != 1.0).map(|i| Eta { r: i, piv: diag[i], col: Vec::new() }).collect();
    let mut cost = vec![0.0; total];
    for c in cost.iter_mut().skip(n + m) {
        *c = 1.0;
    }
    let mut t = Tableau {
        lp,
        unit: (0..m).map(|i| (i, 1.0)).collect(),
        art,
        m,
        lo: all_lo,
        up: all_up,
        x,
        cost,
        basis,
        pos,
        etas,
        since_refactor: 0,
        iterations: 0,
        y: vec![0.0; m],
        alpha: vec![0.0; m],
    };

    if n_art > 0 {
        match t.run(p) {
            Step::Limit | Step::Unbounded => return t.outcome(n, LpStatus::IterationLimit),
            Step::Optimal => {}
        }
        t.refactor();
        let worst = t.x[n + m..].iter().fold(0.0f64, |w, &v| w.max(v));
        if worst > p.feas_tol {
            return t.outcome(n, LpStatus::Infeasible);
        }
        for j in n + m..total {
            t.up[j] = 0.0;
            t.x[j] = 0.0;
        }
        t.recompute_basic();
    }
    for j in 0..total {
        t.cost[j] = if j < n { lp.cost[j] } else { 0.0 };
    }
    match t.run(p) {
        Step::Limit => t.outcome(n, LpStatus::IterationLimit),
        Step::Unbounded => t.outcome(n, LpStatus::Unbounded),
        Step::Optimal => {
            t.refactor();
            t.outcome(n, LpStatus::Optimal)
        }
    }
}

/// Re-solves from `start`, falling back to a cold solve when the basis is
/// singular, not dual feasible under the new bounds, or the dual method
/// stalls.
pub(crate) fn solve_warm(lp: &LpData, lo: &[f64], up: &[f64], p: &SimplexParams, start: &Basis) -> LpOutcome {
    let (n, m) = (lp.n, lp.m);
    if (0..n).any(|j| lo[j] > up[j]) {
        return LpOutcome::failed(LpStatus::Infeasible, 0);
    }
    let old_m = start.basic.len();
    if old_m > m || start.at_upper.len() != n + old_m {
        return solve(lp, lo, up, p);
    }
    let mut basis = start.basic.clone();
    basis.extend((old_m..m).map(|i| n + i));
    let mut all_lo = lo.to_vec();
    let mut all_up = up.to_vec();
    all_lo.extend_from_slice(&lp.slack_lo);
    all_up.extend_from_slice(&lp.slack_up);
    let total = n + m;
    let mut pos = vec![NONBASIC; total];
    for (k, &j) in basis.iter().enumerate() {
        pos[j] = k;
    }
    let x: Vec<f64> = (0..total)
        .map(|j| {
            let upper = j < start.at_upper.len() && start.at_upper[j] && all_up[j].is_finite();
            if upper {
                all_up[j]
            } else {
                initial_value(all_lo[j], all_up[j])
            }
        })
        .collect();
    let mut cost = vec![0.0; total];
    cost[..n].copy_from_slice(&lp.cost);
    let mut t = Tableau {
        lp,
        unit: (0..m).map(|i| (i, 1.0)).collect(),
        art: Vec::new(),
        m,
        lo: all_lo,
        up: all_up,
        x,
        cost,
        basis,
        pos,
        etas: Vec::new(),
        since_refactor: 0,
        iterations: 0,
        y: vec![0.0; m],
        alpha: vec![0.0; m],
    };
    if !t.refactor() {
        return solve(lp, lo, up, p);
    }
    // put every nonbasic column on the bound its reduced cost prefers
    t.compute_duals();
    for j in 0..total {
        if t.pos[j] != NONBASIC || t.lo[j] == t.up[j] {
            continue;
        }
        let d = t.reduced_cost(j);
        if d < -p.opt_tol && t.x[j] < t.up[j] {
            if !t.up[j].is_finite() {
                return solve(lp, lo, up, p);
            }
            t.x[j] = t.up[j];
        } else if d > p.opt_tol && t.x[j] > t.lo[j] {
            if !t.lo[j].is_finite() {
                return solve(lp, lo, up, p);
            }
            t.x[j] = t.lo[j];
        }
    }
    t.recompute_basic();
    match t.run_dual(p, 20 * (m + 10)) {
        Step::Optimal => {}
        Step::Unbounded => return t.outcome(n, LpStatus::Infeasible),
        Step::Limit if t.iterations >= p.max_iter || p.deadline.is_some_and(|d| Instant::now() >= d) => {
            return t.outcome(n, LpStatus::IterationLimit)
        }
        Step::Limit => {
            let spent = t.iterations;
            let mut out = solve(lp, lo, up, p);
            out.iterations += spent;
            return out;
        }
    }
    // tidy up any dual infeasibility left by tolerances
    match t.run(p) {
        Step::Limit => t.outcome(n, LpStatus::IterationLimit),
        Step::Unbounded => t.outcome(n, LpStatus::Unbounded),
        Step::Optimal => {
            if t.since_refactor > REFACTOR_EVERY / 4 {
                t.refactor();
            } else {
                t.recompute_basic();
            }
            t.outcome(n, LpStatus::Optimal)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> SimplexParams {
        SimplexParams { feas_tol: 1e-9, opt_tol: 1e-9, max_iter: 10_000, deadline: None }
    }

    #[test]
    fn bounded_two_variable() {
        // min -x - 2y, x + y <= 4, x <= 3, y <= 2.5
        let rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = vec![(vec![(0, 1.0), (1, 1.0)], Relation::Le, 4.0)];
        let lp = LpData::new(2, vec![-1.0, -2.0], rows.iter().map(|(t, r, b)| (t.as_slice(), *r, *b)));
        let out = solve(&lp, &[0.0, 0.0], &[3.0, 2.5], &params());
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective + 6.5).abs() < 1e-9);
        assert!((out.x[0] - 1.5).abs() < 1e-9 && (out.x[1] - 2.5).abs() < 1e-9);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let rows: Vec<(Vec<(usize, f64)>, Relation, f64)> =
            vec![(vec![(0, 1.0), (1, 1.0)], Relation::Ge, 5.0), (vec![(0, 1.0), (1, 1.0)], Relation::Le, 4.0)];
        let lp = LpData::new(2, vec![1.0, 1.0], rows.iter().map(|(t, r, b)| (t.as_slice(), *r, *b)));
        assert_eq!(solve(&lp, &[0.0, 0.0], &[10.0, 10.0], &params()).status, LpStatus::Infeasible);

        let rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = vec![(vec![(0, 1.0), (1, -1.0)], Relation::Le, 1.0)];
        let lp = LpData::new(2, vec![-1.0, 0.0], rows.iter().map(|(t, r, b)| (t.as_slice(), *r, *b)));
        let inf = f64::INFINITY;
        assert_eq!(solve(&lp, &[0.0, 0.0], &[inf, inf], &params()).status, LpStatus::Unbounded);
    }

    #[test]
    fn free_variables_and_equalities() {
        // min x0 + x1 with x0 - x1 = 2, x0 + x1 >= -10, both free
        let rows: Vec<(Vec<(usize, f64)>, Relation, f64)> =
            vec![(vec![(0, 1.0), (1, -1.0)], Relation::Eq, 2.0), (vec![(0, 1.0), (1, 1.0)], Relation::Ge, -10.0)];
        let lp = LpData::new(2, vec![1.0, 1.0], rows.iter().map(|(t, r, b)| (t.as_slice(), *r, *b)));
        let inf = f64::INFINITY;
        let out = solve(&lp, &[-inf, -inf], &[inf, inf], &params());
        assert_eq!(out.status, LpStatus::Optimal);
        assert!((out.objective + 10.0).abs() < 1e-9, "{}", out.objective);
        assert!((out.x[0] - out.x[1] - 2.0).abs() < 1e-9);
    }

    /// Deterministic pseudo-random LP: bounded columns, mixed rows, feasible
    /// at the midpoint of the box.
    fn random_lp(seed: u64, n: usize, m: usize) -> (LpData, Vec<f64>, Vec<f64>) {
        let mut state = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64) / (1u64 << 31) as f64
        };
        let lo: Vec<f64> = (0..n).map(|_| (next() * 4.0).floor() - 2.0).collect();
        let up: Vec<f64> = lo.iter().map(|l| l + 1.0 + (next() * 6.0).floor()).collect();
        let mid: Vec<f64> = lo.iter().zip(&up).map(|(l, u)| 0.5 * (l + u)).collect();
        let mut rows = Vec::new();
        for _ in 0..m {
            let terms: Vec<(usize, f64)> = (0..n).filter_map(|j| (next() < 0.5).then(|| (j, (next() * 10.0).floor() - 5.0))).filter(|t| t.1 != 0.0).collect();
            if terms.is_empty() {
                continue;
            }
            let lhs: f64 = terms.iter().map(|&(j, a)| a * mid[j]).sum();
            let (rel, b) = match (next() * 3.0) as u32 {
                0 => (Relation::Le, lhs + next() * 3.0),
                1 => (Relation::Ge, lhs - next() * 3.0),
                _ => (Relation::Eq, lhs),
            };
            rows.push((terms, rel, b));
        }
        let cost: Vec<f64> = (0..n).map(|_| (next() * 9.0).floor() - 4.0).collect();
        let lp = LpData::new(n, cost, rows.iter().map(|(t, r, b)| (t.as_slice(), *r, *b)));
        (lp, lo, up)
    }

    fn same(a: &LpOutcome, b: &LpOutcome) -> bool {
        a.status == b.status && (a.status != LpStatus::Optimal || (a.objective - b.objective).abs() <= 1e-7 * b.objective.abs().max(1.0))
    }

    #[test]
    fn warm_start_after_bound_changes_matches_cold_solve() {
        let mut tried = 0;
        for seed in 0..60 {
            let (lp, lo, up) = random_lp(seed, 12, 8);
            let root = solve(&lp, &lo, &up, &params());
            let Some(basis) = root.basis.clone() else { continue };
            tried += 1;
            for k in 0..6usize {
                let j = (seed as usize * 7 + k * 5) % 12;
                let (mut lo2, mut up2) = (lo.clone(), up.clone());
                let v = root.x[j];
                if k % 2 == 0 {
                    up2[j] = (v - 0.5).floor().max(lo2[j]);
                } else {
                    lo2[j] = (v + 0.5).ceil().min(up2[j]);
                }
                let warm = solve_warm(&lp, &lo2, &up2, &params(), &basis);
                let cold = solve(&lp, &lo2, &up2, &params());
                assert!(same(&warm, &cold), "seed {seed} k {k}: {:?} {} vs {:?} {}", warm.status, warm.objective, cold.status, cold.objective);
            }
        }
        assert!(tried >= 40, "{tried}");
    }

    #[test]
    fn warm_start_with_appended_row_matches_cold_solve() {
        let mut tried = 0;
        for seed in 100..160 {
            let (lp, lo, up) = random_lp(seed, 10, 6);
            let root = solve(&lp, &lo, &up, &params());
            let Some(basis) = root.basis.clone() else { continue };
            tried += 1;
            // a row cutting off the current optimum
            let terms: Vec<(usize, f64)> = (0..10).step_by(3).map(|j| (j, 1.0)).collect();
            let lhs: f64 = terms.iter().map(|&(j, a)| a * root.x[j]).sum();
            let mut cut = lp.clone();
            cut.push_row(&terms, Relation::Ge, lhs + 0.75);
            let warm = solve_warm(&cut, &lo, &up, &params(), &basis);
            let cold = solve(&cut, &lo, &up, &params());
            assert!(same(&warm, &cold), "seed {seed}: {:?} {} vs {:?} {}", warm.status, warm.objective, cold.status, cold.objective);
        }
        assert!(tried >= 40, "{tried}");
    }

    #[test]
    fn dropping_slack_rows_keeps_the_optimum() {
        let rows: Vec<(Vec<(usize, f64)>, Relation, f64)> = vec![
            (vec![(0, 1.0), (1, 1.0)], Relation::Le, 4.0),
            (vec![(0, 1.0), (1, 1.0)], Relation::Le, 100.0),
            (vec![(0, 1.0), (1, -1.0)], Relation::Ge, -1.0),
        ];
        let lp = LpData::new(2, vec![-1.0, -2.0], rows.iter().map(|(t, r, b)| (t.as_slice(), *r, *b)));
        let (lo, up) = ([0.0, 0.0], [3.0, 10.0]);
        let out = solve(&lp, &lo, &up, &params());
        let basis = out.basis.clone().unwrap();
        assert!(basis.slack_is_basic(2, 1));
        let (smaller, b2) = drop_rows(&lp, &basis, &[false, true, false]).unwrap();
        assert_eq!(smaller.m, 2);
        let again = solve_warm(&smaller, &lo, &up, &params(), &b2);
        assert!(same(&again, &out));
        assert_eq!(again.iterations, 0);
        // a row whose slack is nonbasic cannot be dropped
        assert!(drop_rows(&lp, &basis, &[true, false, false]).is_none());
    }
}
