//! Complemented mixed-integer rounding (c-MIR) cuts.
//!
//! A base row, possibly aggregated with up to [`MAX_AGGREGATION`] further
//! rows to eliminate continuous columns sitting strictly between their
//! bounds, is relaxed to `Σ g·y + Σ c·s ≤ β` with `y ≥ 0` integer and
//! `s ≥ 0` continuous. Continuous columns are replaced by their closest
//! simple or variable bound (a two-term row linking the column to one
//! integer), integers are shifted or complemented onto their closest bound,
//! and the mixed-integer rounding formula is applied after dividing by each
//! candidate `δ`. Cuts are mapped back to the original columns.

use std::collections::BTreeMap;

use super::simplex::LpData;

const MAX_AGGREGATION: usize = 3;
const MIN_FRAC: f64 = 0.05;
const MAX_FRAC: f64 = 0.95;
const MIN_EFFICACY: f64 = 1e-4;
const MAX_DYNAMISM: f64 = 1e6;
const PARALLEL_LIMIT: f64 = 0.999;

/// A cut `Σ a·x ≤ rhs` over block columns.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Cut {
    pub terms: Vec<(usize, f64)>,
    pub rhs: f64,
    pub efficacy: f64,
}

/// `x ≥ v·y + d` (lower) or `x ≤ v·y + d` (upper) for integer `y`.
#[derive(Debug, Clone, Copy)]
struct VarBound {
    y: usize,
    v: f64,
    d: f64,
}

/// Which bound replaced a continuous column. The slack `s ≥ 0` is
/// `x − lower` for lower kinds and `upper − x` for upper kinds.
#[derive(Debug, Clone, Copy)]
enum Subst {
    Lower(f64),
    Upper(f64),
    VarLower(VarBound),
    VarUpper(VarBound),
}

struct Ctx<'a> {
    rows: Vec<Vec<(usize, f64)>>,
    /// Activity range `lo ≤ a·x ≤ up` of each row.
    row_lo: Vec<f64>,
    row_up: Vec<f64>,
    activity: Vec<f64>,
    col_rows: Vec<Vec<usize>>,
    vlb: Vec<Vec<VarBound>>,
    vub: Vec<Vec<VarBound>>,
    lo: &'a [f64],
    up: &'a [f64],
    integer: &'a [bool],
    x: &'a [f64],
}

impl<'a> Ctx<'a> {
    fn new(lp: &LpData, lo: &'a [f64], up: &'a [f64], integer: &'a [bool], x: &'a [f64]) -> Self {
        let rows = lp.rows();
        let n = lp.n;
        let row_lo: Vec<f64> = (0..lp.m).map(|i| lp.rhs[i] - lp.slack_up[i]).collect();
        let row_up: Vec<f64> = (0..lp.m).map(|i| lp.rhs[i] - lp.slack_lo[i]).collect();
        let activity = rows.iter().map(|r| r.iter().map(|&(j, a)| a * x[j]).sum()).collect();
        let mut col_rows = vec![Vec::new(); n];
        let (mut vlb, mut vub) = (vec![Vec::new(); n], vec![Vec::new(); n]);
        for (i, row) in rows.iter().enumerate() {
            for &(j, _) in row {
                col_rows[j].push(i);
            }
            if row.len() != 2 {
                continue;
            }
            let (c, y) = match (integer[row[0].0], integer[row[1].0]) {
                (false, true) => (row[0], row[1]),
                (true, false) => (row[1], row[0]),
                _ => continue,
            };
            if !lo[y.0].is_finite() || !up[y.0].is_finite() {
                continue;
            }
            // a_c·x + a_y·y within [row_lo, row_up]
            for (side, upper_side) in [(row_up[i], true), (row_lo[i], false)] {
                if !side.is_finite() {
                    continue;
                }
                let vb = VarBound { y: y.0, v: -y.1 / c.1, d: side / c.1 };
                if upper_side == (c.1 > 0.0) {
                    vub[c.0].push(vb);
                } else {
                    vlb[c.0].push(vb);
                }
            }
        }
        Self { rows, row_lo, row_up, activity, col_rows, vlb, vub, lo, up, integer, x }
    }

    fn vb_value(&self, vb: &VarBound) -> f64 {
        vb.v * self.x[vb.y] + vb.d
    }

    /// Closest bound for a continuous column, preferring variable bounds on
    /// ties.
    fn closest_bound(&self, j: usize) -> Option<(Subst, f64)> {
        let x = self.x[j];
        let mut best: Option<(Subst, f64)> = None;
        let mut consider = |s: Subst, dist: f64| {
            if best.as_ref().map_or(true, |b| dist < b.1 - 1e-12) {
                best = Some((s, dist.max(0.0)));
            }
        };
        for vb in &self.vlb[j] {
            consider(Subst::VarLower(*vb), x - self.vb_value(vb));
        }
        for vb in &self.vub[j] {
            consider(Subst::VarUpper(*vb), self.vb_value(vb) - x);
        }
        if self.lo[j].is_finite() {
            consider(Subst::Lower(self.lo[j]), x - self.lo[j]);
        }
        if self.up[j].is_finite() {
            consider(Subst::Upper(self.up[j]), self.up[j] - x);
        }
        best
    }

    /// Distance of a continuous column to its nearest bound of any kind.
    fn slack_distance(&self, j: usize) -> f64 {
        self.closest_bound(j).map_or(f64::INFINITY, |b| b.1)
    }
}

/// Builds the MIR cut for `agg ≤ beta` if one is violated by the LP point.
fn try_mir(ctx: &Ctx<'_>, agg: &BTreeMap<usize, f64>, beta: f64) -> Option<Cut> {
    let mut ints: BTreeMap<usize, f64> = BTreeMap::new();
    let mut beta = beta;
    // (continuous column, substitution, coefficient on its slack)
    let mut conts: Vec<(usize, Subst, f64)> = Vec::new();
    for (&j, &a) in agg {
        if ctx.integer[j] {
            *ints.entry(j).or_insert(0.0) += a;
            continue;
        }
        let (sub, _) = ctx.closest_bound(j)?;
        match sub {
            Subst::Lower(l) => {
                beta -= a * l;
                conts.push((j, sub, a));
            }
            Subst::Upper(u) => {
                beta -= a * u;
                conts.push((j, sub, -a));
            }
            Subst::VarLower(vb) => {
                *ints.entry(vb.y).or_insert(0.0) += a * vb.v;
                beta -= a * vb.d;
                conts.push((j, sub, a));
            }
            Subst::VarUpper(vb) => {
                *ints.entry(vb.y).or_insert(0.0) += a * vb.v;
                beta -= a * vb.d;
                conts.push((j, sub, -a));
            }
        }
    }
    // shift (y' = y − l) or complement (y' = u − y) each integer
    let mut yint: Vec<(usize, f64, bool, f64)> = Vec::new(); // (col, g', complemented, y' value)
    for (&j, &g) in &ints {
        if g.abs() < 1e-12 {
            continue;
        }
        let (l, u, x) = (ctx.lo[j], ctx.up[j], ctx.x[j]);
        let use_lower = match (l.is_finite(), u.is_finite()) {
            (true, true) => x - l <= u - x,
            (true, false) => true,
            (false, true) => false,
            (false, false) => return None,
        };
        if use_lower {
            beta -= g * l;
            yint.push((j, g, false, x - l));
        } else {
            beta -= g * u;
            yint.push((j, -g, true, u - x));
        }
    }
    if yint.is_empty() {
        return None;
    }
    let slack_value = |j: usize, sub: &Subst| -> f64 {
        let x = ctx.x[j];
        match sub {
            Subst::Lower(l) => x - l,
            Subst::Upper(u) => u - x,
            Subst::VarLower(vb) => x - ctx.vb_value(vb),
            Subst::VarUpper(vb) => ctx.vb_value(vb) - x,
        }
    };

    let mut deltas: Vec<f64> = Vec::new();
    for &(_, g, _, v) in &yint {
        if v > 1e-6 && !deltas.iter().any(|d| (d - g.abs()).abs() <= 1e-9 * d.max(1.0)) {
            deltas.push(g.abs());
        }
    }
    deltas.truncate(8);
    // scaled-space violation of the MIR for one δ
    let evaluate = |delta: f64| -> Option<f64> {
        let b = beta / delta;
        let f0 = b - b.floor();
        if !(MIN_FRAC..=MAX_FRAC).contains(&f0) || b.abs() > 1e9 {
            return None;
        }
        let mut lhs = 0.0;
        let mut norm = 0.0;
        for &(_, g, _, v) in &yint {
            let a = g / delta;
            let fj = a - a.floor();
            let pi = a.floor() + (fj - f0).max(0.0) / (1.0 - f0);
            lhs += pi * v;
            norm += pi * pi;
        }
        for (j, sub, c) in &conts {
            if *c < 0.0 {
                let mu = c / delta / (1.0 - f0);
                lhs += mu * slack_value(*j, sub);
                norm += mu * mu;
            }
        }
        (norm > 0.0).then(|| (lhs - b.floor()) / norm.sqrt())
    };
    let mut best: Option<(f64, f64)> = None;
    for &d in &deltas {
        if let Some(e) = evaluate(d) {
            if best.map_or(true, |b| e > b.1 + 1e-12) {
                best = Some((d, e));
            }
        }
    }
    let (base, _) = best?;
    for k in [2.0, 4.0, 8.0] {
        if let Some(e) = evaluate(base / k) {
            if best.map_or(true, |b| e > b.1 + 1e-12) {
                best = Some((base / k, e));
            }
        }
    }
    let (delta, _) = best?;

    // map back to original columns
    let b = beta / delta;
    let f0 = b - b.floor();
    let mut coef: BTreeMap<usize, f64> = BTreeMap::new();
    let mut rhs = b.floor();
    for &(j, g, complemented, _) in &yint {
        let a = g / delta;
        let fj = a - a.floor();
        let pi = a.floor() + (fj - f0).max(0.0) / (1.0 - f0);
        if complemented {
            // pi·(u − y)
            rhs -= pi * ctx.up[j];
            *coef.entry(j).or_insert(0.0) -= pi;
        } else {
            rhs += pi * ctx.lo[j];
            *coef.entry(j).or_insert(0.0) += pi;
        }
    }
    for &(j, sub, c) in &conts {
        if c >= 0.0 {
            continue;
        }
        let mu = c / delta / (1.0 - f0);
        match sub {
            Subst::Lower(l) => {
                *coef.entry(j).or_insert(0.0) += mu;
                rhs += mu * l;
            }
            Subst::Upper(u) => {
                *coef.entry(j).or_insert(0.0) -= mu;
                rhs -= mu * u;
            }
            Subst::VarLower(vb) => {
                *coef.entry(j).or_insert(0.0) += mu;
                *coef.entry(vb.y).or_insert(0.0) -= mu * vb.v;
                rhs += mu * vb.d;
            }
            Subst::VarUpper(vb) => {
                *coef.entry(j).or_insert(0.0) -= mu;
                *coef.entry(vb.y).or_insert(0.0) += mu * vb.v;
                rhs -= mu * vb.d;
            }
        }
    }
    let big = coef.values().fold(0.0f64, |m, a| m.max(a.abs()));
    if big == 0.0 {
        return None;
    }
    let terms: Vec<(usize, f64)> = coef.into_iter().filter(|&(_, a)| a.abs() > 1e-9 * big).collect();
    let small = terms.iter().fold(f64::INFINITY, |m, &(_, a)| m.min(a.abs()));
    if big / small > MAX_DYNAMISM {
        return None;
    }
    let lhs: f64 = terms.iter().map(|&(j, a)| a * ctx.x[j]).sum();
    let norm = terms.iter().map(|&(_, a)| a * a).sum::<f64>().sqrt();
    let efficacy = (lhs - rhs) / norm;
    (efficacy > MIN_EFFICACY).then_some(Cut { terms, rhs, efficacy })
}

/// Separates c-MIR cuts violated by `x`, strongest first, skipping cuts
/// nearly parallel to a stronger one.
pub(crate) fn separate(lp: &LpData, lo: &[f64], up: &[f64], integer: &[bool], x: &[f64], max_cuts: usize) -> Vec<Cut> {
    let ctx = Ctx::new(lp, lo, up, integer, x);
    let mut found: Vec<Cut> = Vec::new();
    for base in 0..ctx.rows.len() {
        if ctx.rows[base].len() < 2 {
            continue;
        }
        for sign in [1.0, -1.0] {
            let side = if sign > 0.0 { ctx.row_up[base] } else { -ctx.row_lo[base] };
            if !side.is_finite() {
                continue;
            }
            let mut agg: BTreeMap<usize, f64> = ctx.rows[base].iter().map(|&(j, a)| (j, sign * a)).collect();
            let mut beta = side;
            let mut used = vec![base];
            for level in 0..=MAX_AGGREGATION {
                if let Some(cut) = try_mir(&ctx, &agg, beta) {
                    found.push(cut);
                    break;
                }
                if level == MAX_AGGREGATION {
                    break;
                }
                // eliminate the continuous column farthest from its bounds
                let mut pick: Option<(usize, f64)> = None;
                for (&j, _) in &agg {
                    if integer[j] {
                        continue;
                    }
                    let d = ctx.slack_distance(j);
                    if d > 1e-6 && pick.map_or(true, |p| d > p.1) {
                        pick = Some((j, d));
                    }
                }
                let Some((j, _)) = pick else { break };
                let aj = agg[&j];
                let mut next: Option<(usize, f64, f64)> = None; // (row, multiplier, side)
                for &r in &ctx.col_rows[j] {
                    if used.contains(&r) || ctx.rows[r].len() == 2 && ctx.rows[r].iter().any(|&(k, _)| integer[k]) {
                        continue;
                    }
                    let arj = ctx.rows[r].iter().find(|&&(k, _)| k == j).expect("column in row").1;
                    let lambda = -aj / arj;
                    // λ·row ≤ λ·side needs the row's upper side for λ > 0
                    let (bound, tight) = if lambda > 0.0 {
                        (ctx.row_up[r], (ctx.row_up[r] - ctx.activity[r]).abs() <= 1e-6)
                    } else {
                        (ctx.row_lo[r], (ctx.activity[r] - ctx.row_lo[r]).abs() <= 1e-6)
                    };
                    if !bound.is_finite() || !tight {
                        continue;
                    }
                    if next.map_or(true, |(best, _, _)| ctx.rows[r].len() < ctx.rows[best].len()) {
                        next = Some((r, lambda, bound));
                    }
                }
                let Some((r, lambda, bound)) = next else { break };
                used.push(r);
                for &(k, a) in &ctx.rows[r] {
                    *agg.entry(k).or_insert(0.0) += lambda * a;
                }
                agg.remove(&j);
                let scale = agg.values().fold(0.0f64, |m, a| m.max(a.abs()));
                agg.retain(|_, a| a.abs() > 1e-12 * scale.max(1.0));
                beta += lambda * bound;
            }
        }
    }
    found.sort_by(|a, b| b.efficacy.total_cmp(&a.efficacy));
    let mut kept: Vec<Cut> = Vec::new();
    for cut in found {
        if kept.len() >= max_cuts {
            break;
        }
        let norm = |c: &Cut| c.terms.iter().map(|&(_, a)| a * a).sum::<f64>().sqrt();
        let parallel = kept.iter().any(|k| {
            let dot: f64 = cut.terms.iter().filter_map(|&(j, a)| k.terms.iter().find(|t| t.0 == j).map(|t| a * t.1)).sum();
            dot / (norm(&cut) * norm(k)) > PARALLEL_LIMIT
        });
        if !parallel {
            kept.push(cut);
        }
    }
    kept
}
