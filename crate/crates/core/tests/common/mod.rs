//! Helpers shared by integration tests: random instances, an independent
//! feasibility checker and a naive dense tableau LP solver.
#![allow(dead_code)]

use fogcache::milp::{MilpProblem, Relation, VarKind};
use fogcache::netmodel::{build_nsfnet, shortest_paths, PathTable, Topology};
use fogcache::timeseries::{synth_demand, synth_irradiance, DemandProfile, HourlyTraces, TraceLimits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn nsfnet() -> (Topology, PathTable) {
    let topo = build_nsfnet();
    let paths = shortest_paths(&topo).unwrap();
    (topo, paths)
}

pub fn traces(topo: &Topology, peak_gbps: f64, profile: DemandProfile, sun_w_m2: f64) -> HourlyTraces {
    let d = synth_demand(topo, peak_gbps, profile, 24).unwrap();
    let i = synth_irradiance(topo, sun_w_m2, 24, None);
    HourlyTraces::new(topo, d, i, TraceLimits::default()).unwrap()
}

/// Random small MILP. Integer domains have at most 8 values and their
/// product stays within `max_combos`; most instances are built around a
/// known feasible point.
pub fn random_milp(seed: u64, max_int: usize, max_combos: usize) -> MilpProblem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = MilpProblem::new(format!("rand{seed}"));
    let n_int = rng.gen_range(1..=max_int);
    let n_cont = rng.gen_range(0..=6);
    let mut point = Vec::new();
    let mut combos = 1usize;
    for i in 0..n_int {
        let mut size = rng.gen_range(2..=8usize);
        while size > 1 && combos * size > max_combos {
            size -= 1;
        }
        combos *= size;
        let lo = rng.gen_range(-3..=2) as f64;
        let hi = lo + (size - 1) as f64;
        p.add_variable(format!("z{i}"), VarKind::Integer, lo, hi).unwrap();
        point.push(lo + rng.gen_range(0..size) as f64);
    }
    for i in 0..n_cont {
        let lo = rng.gen_range(-5.0..0.0f64).round();
        let hi = if rng.gen_bool(0.2) { f64::INFINITY } else { lo + rng.gen_range(1.0..10.0f64) };
        p.add_variable(format!("x{i}"), VarKind::Continuous, lo, hi).unwrap();
        let top = if hi.is_finite() { hi } else { lo + 5.0 };
        point.push(rng.gen_range(lo..=top));
    }
    let n = n_int + n_cont;
    let feasible_by_construction = rng.gen_bool(0.85);
    for r in 0..rng.gen_range(1..=8) {
        let mut terms = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.5) {
                let a = (rng.gen_range(-5.0..5.0f64) * 2.0).round() / 2.0;
                if a != 0.0 {
                    terms.push((j, a));
                }
            }
        }
        if terms.is_empty() {
            terms.push((rng.gen_range(0..n), 1.0));
        }
        let lhs: f64 = terms.iter().map(|&(j, a)| a * point[j]).sum();
        let rel = [Relation::Le, Relation::Ge, Relation::Eq][rng.gen_range(0..3)];
        let slack = rng.gen_range(0.0..3.0f64);
        let rhs = if !feasible_by_construction {
            rng.gen_range(-10.0..10.0f64).round()
        } else {
            match rel {
                Relation::Le => lhs + slack,
                Relation::Ge => lhs - slack,
                Relation::Eq => lhs,
            }
        };
        p.add_constraint(format!("r{r}"), terms, rel, rhs).unwrap();
    }
    let obj = (0..n)
        .map(|j| {
            let c = (rng.gen_range(-5.0..5.0f64) * 4.0).round() / 4.0;
            // keep open-ended continuous columns bounded in the objective direction
            let unbounded_up = p.variables()[j].upper == f64::INFINITY;
            (j, if unbounded_up { c.abs() + 0.25 } else { c })
        })
        .collect();
    p.set_objective(obj).unwrap();
    p
}

/// Checks bounds, rows (scaled by the row's largest coefficient) and
/// integrality without using any solver or problem helper beyond the raw
/// data accessors.
pub fn verify(p: &MilpProblem, values: &[f64], feas_tol: f64, int_tol: f64) -> Result<(), String> {
    if values.len() != p.variables().len() {
        return Err(format!("{} values for {} variables", values.len(), p.variables().len()));
    }
    for (v, &x) in p.variables().iter().zip(values) {
        if !x.is_finite() {
            return Err(format!("{} = {x}", v.name));
        }
        if x < v.lower - feas_tol || x > v.upper + feas_tol {
            return Err(format!("{} = {x} outside [{}, {}]", v.name, v.lower, v.upper));
        }
        if v.kind == VarKind::Integer && (x - x.round()).abs() > int_tol {
            return Err(format!("{} = {x} is not integral", v.name));
        }
    }
    for c in p.constraints() {
        let mut lhs = 0.0;
        let mut scale = 0.0f64;
        for &(j, a) in &c.terms {
            lhs += a * values[j];
            scale = scale.max(a.abs());
        }
        let scale = scale.max(1e-12);
        let bad = match c.relation {
            Relation::Le => (lhs - c.rhs) / scale > feas_tol,
            Relation::Ge => (c.rhs - lhs) / scale > feas_tol,
            Relation::Eq => (lhs - c.rhs).abs() / scale > feas_tol,
        };
        if bad {
            return Err(format!("row {}: {lhs} {:?} {}", c.name, c.relation, c.rhs));
        }
    }
    Ok(())
}

pub fn objective(p: &MilpProblem, values: &[f64]) -> f64 {
    p.objective().iter().map(|&(j, a)| a * values[j]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TableauResult {
    Optimal(f64),
    Infeasible,
    Unbounded,
}

/// Textbook two-phase full-tableau simplex with Bland's rule, on the
/// continuous relaxation. Every variable needs a finite lower bound.
pub fn tableau_lp(p: &MilpProblem) -> TableauResult {
    let n = p.variables().len();
    // x = lower + x', x' >= 0; finite uppers become rows
    let lower: Vec<f64> = p.variables().iter().map(|v| v.lower).collect();
    assert!(lower.iter().all(|l| l.is_finite()), "tableau oracle needs finite lower bounds");
    let mut rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for c in p.constraints() {
        let mut a = vec![0.0; n];
        let mut rhs = c.rhs;
        for &(j, v) in &c.terms {
            a[j] += v;
            rhs -= v * lower[j];
        }
        rows.push((a, c.relation, rhs));
    }
    for (j, v) in p.variables().iter().enumerate() {
        if v.upper.is_finite() {
            let mut a = vec![0.0; n];
            a[j] = 1.0;
            rows.push((a, Relation::Le, v.upper - v.lower));
        }
    }
    // make every rhs non-negative
    for (a, rel, b) in rows.iter_mut() {
        if *b < 0.0 {
            a.iter_mut().for_each(|x| *x = -*x);
            *b = -*b;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let width = n + n_slack + n_art;
    let mut t = vec![vec![0.0; width + 1]; m];
    let mut basis = vec![0usize; m];
    let (mut s, mut a_idx) = (n, n + n_slack);
    let mut artificial = vec![false; width];
    for (i, (a, rel, b)) in rows.iter().enumerate() {
        t[i][..n].copy_from_slice(a);
        t[i][width] = *b;
        match rel {
            Relation::Le => {
                t[i][s] = 1.0;
                basis[i] = s;
                s += 1;
            }
            Relation::Ge => {
                t[i][s] = -1.0;
                s += 1;
                t[i][a_idx] = 1.0;
                basis[i] = a_idx;
                artificial[a_idx] = true;
                a_idx += 1;
            }
            Relation::Eq => {
                t[i][a_idx] = 1.0;
                basis[i] = a_idx;
                artificial[a_idx] = true;
                a_idx += 1;
            }
        }
    }

    fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: &[bool]) -> bool {
        let m = t.len();
        let width = cost.len();
        loop {
            let mut enter = None;
            for j in 0..width {
                if !allowed[j] || basis.contains(&j) {
                    continue;
                }
                let d = cost[j] - (0..m).map(|i| cost[basis[i]] * t[i][j]).sum::<f64>();
                if d < -1e-10 {
                    enter = Some(j);
                    break;
                }
            }
            let Some(q) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                if t[i][q] > 1e-10 {
                    let r = t[i][width] / t[i][q];
                    match leave {
                        Some((l, best)) if r > best + 1e-12 || (r > best - 1e-12 && basis[i] > basis[l]) => {}
                        _ => leave = Some((i, r)),
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            let piv = t[r][q];
            t[r].iter_mut().for_each(|x| *x /= piv);
            for i in 0..m {
                if i != r && t[i][q] != 0.0 {
                    let f = t[i][q];
                    let row_r = t[r].clone();
                    for (x, y) in t[i].iter_mut().zip(&row_r) {
                        *x -= f * y;
                    }
                }
            }
            basis[r] = q;
        }
    }

    let phase1: Vec<f64> = (0..width).map(|j| if artificial[j] { 1.0 } else { 0.0 }).collect();
    let all = vec![true; width];
    run(&mut t, &mut basis, &phase1, &all);
    let infeas: f64 = (0..m).filter(|&i| artificial[basis[i]]).map(|i| t[i][width]).sum();
    if infeas > 1e-7 {
        return TableauResult::Infeasible;
    }
    // pivot degenerate artificials out where possible
    for i in 0..m {
        if artificial[basis[i]] {
            if let Some(q) = (0..n + n_slack).find(|&j| t[i][j].abs() > 1e-9 && !basis.contains(&j)) {
                let piv = t[i][q];
                t[i].iter_mut().for_each(|x| *x /= piv);
                for k in 0..m {
                    if k != i && t[k][q] != 0.0 {
                        let f = t[k][q];
                        let row_i = t[i].clone();
                        for (x, y) in t[k].iter_mut().zip(&row_i) {
                            *x -= f * y;
                        }
                    }
                }
                basis[i] = q;
            }
        }
    }
    let cost_dense = p.objective_dense();
    let mut phase2 = vec![0.0; width];
    phase2[..n].copy_from_slice(&cost_dense);
    let allowed: Vec<bool> = (0..width).map(|j| !artificial[j]).collect();
    if !run(&mut t, &mut basis, &phase2, &allowed) {
        return TableauResult::Unbounded;
    }
    let mut x = lower.clone();
    for i in 0..m {
        if basis[i] < n {
            x[basis[i]] += t[i][width];
        }
    }
    TableauResult::Optimal(cost_dense.iter().zip(&x).map(|(c, x)| c * x).sum())
}
