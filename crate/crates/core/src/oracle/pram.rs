use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_feasible, result_from_rows, DistanceMatrix};
use crate::error::{Error, Result};
use crate::facloc::{Counters, Instance, RadiusSchedule, SolveResult};
use crate::graph::VertexId;
use crate::mis::draw_priorities;

const MAX_ROUNDS: u32 = 50_000_000;

/// Per-round bookkeeping of [`pram_facility_location_traced`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PramTrace {
    pub gamma: f64,
    pub rounds: u32,
    /// Round at which each matrix facility opened.
    pub open_round: Vec<Option<u32>>,
    /// Final radius `α(c)` of every matrix client.
    pub client_alpha: Vec<f64>,
    /// Facilities (matrix rows) each client is joined to in `H`.
    pub service: Vec<Vec<usize>>,
    /// Opened facilities adjacent in `H̄`, as sorted row pairs.
    pub conflicts: Vec<(usize, usize)>,
    /// Rows selected by the greedy independent set.
    pub selected: Vec<usize>,
}

/// Round-synchronous ball expansion on a dense distance matrix with the
/// opening condition evaluated exactly:
///
/// * every round the common radius of unfrozen clients grows along
///   `α_j = α₀(1+ε)^j`;
/// * an unopened facility opens when `Σ_c max{0, (1+ε)α(c) − d(f,c)} ≥ c(f)`;
/// * an unfrozen client with any open facility within `(1+ε)α(c)` freezes
///   and is joined to all such facilities;
/// * clients still unfrozen once every facility is open join their nearest
///   facility.
///
/// `S` is the greedy independent set of the conflict graph under priorities
/// drawn from `seed`; clients are then served by their nearest member.
pub fn pram_facility_location(
    matrix: &DistanceMatrix,
    instance: &Instance,
    epsilon: f64,
    seed: u64,
) -> Result<SolveResult> {
    pram_facility_location_traced(matrix, instance, epsilon, seed).map(|(r, _)| r)
}

pub fn pram_facility_location_traced(
    matrix: &DistanceMatrix,
    instance: &Instance,
    epsilon: f64,
    seed: u64,
) -> Result<(SolveResult, PramTrace)> {
    check_feasible(matrix)?;
    let fs = matrix.facilities();
    let nf = fs.len();
    let nc = matrix.clients().len();
    let cost: Vec<f64> = fs.iter().map(|&f| instance.cost(f)).collect();

    let gamma = (0..nc)
        .map(|j| {
            (0..nf)
                .map(|i| cost[i] + matrix.get(i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max);
    let schedule = RadiusSchedule::new(epsilon, gamma, nf as f64 * nc as f64)?;
    let stretch = 1.0 + epsilon;

    let mut open_round: Vec<Option<u32>> = vec![None; nf];
    let mut alpha: Vec<f64> = vec![0.0; nc];
    let mut frozen = vec![false; nc];
    let mut service: Vec<Vec<usize>> = vec![Vec::new(); nc];
    let mut unopened = nf;
    let mut unfrozen = nc;
    let mut round = 0u32;

    while unopened > 0 && unfrozen > 0 {
        if round >= MAX_ROUNDS || (schedule.alpha0 == 0.0 && round > 0) {
            break;
        }
        let a = schedule.alpha(round);
        for j in 0..nc {
            if !frozen[j] {
                alpha[j] = a;
            }
        }
        let opening: Vec<usize> = (0..nf)
            .into_par_iter()
            .filter(|&i| {
                open_round[i].is_none() && {
                    let row = matrix.row(i);
                    let total: f64 = (0..nc).map(|j| (stretch * alpha[j] - row[j]).max(0.0)).sum();
                    total >= cost[i]
                }
            })
            .collect();
        for &i in &opening {
            open_round[i] = Some(round);
        }
        unopened -= opening.len();
        let open_rows: Vec<usize> = (0..nf).filter(|&i| open_round[i].is_some()).collect();
        for j in 0..nc {
            if frozen[j] {
                continue;
            }
            let reach = stretch * alpha[j];
            let joined: Vec<usize> = open_rows
                .iter()
                .copied()
                .filter(|&i| matrix.get(i, j) <= reach)
                .collect();
            if !joined.is_empty() {
                frozen[j] = true;
                unfrozen -= 1;
                service[j] = joined;
            }
        }
        round += 1;
    }
    let residual = unfrozen;
    if unfrozen > 0 {
        if unopened > 0 {
            return Err(Error::NonConvergence(
                "matrix ball expansion stopped with work left".into(),
            ));
        }
        for j in (0..nc).filter(|&j| !frozen[j]) {
            let (d, i) = (0..nf)
                .map(|i| (matrix.get(i, j), fs[i], i))
                .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
                .map(|(d, _, i)| (d, i))
                .expect("feasible instances have a facility");
            alpha[j] = d;
            service[j] = vec![i];
        }
    }

    let opened: Vec<usize> = (0..nf).filter(|&i| open_round[i].is_some()).collect();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); nf];
    for list in &service {
        for (x, &a) in list.iter().enumerate() {
            for &b in &list[x + 1..] {
                adjacency[a].push(b);
                adjacency[b].push(a);
            }
        }
    }
    let mut conflicts = Vec::new();
    for (a, adj) in adjacency.iter_mut().enumerate() {
        adj.sort_unstable();
        adj.dedup();
        conflicts.extend(adj.iter().filter(|&&b| b > a).map(|&b| (a, b)));
    }

    let n = fs
        .iter()
        .chain(matrix.clients())
        .map(|&v| v as usize + 1)
        .max()
        .unwrap_or(0);
    let candidates: Vec<VertexId> = opened.iter().map(|&i| fs[i]).collect();
    let pi = draw_priorities(&candidates, n, crate::derive_seed(seed, 1));
    let mut by_priority = opened.clone();
    by_priority.sort_unstable_by_key(|&i| (pi[fs[i] as usize], fs[i]));
    let mut blocked = vec![false; nf];
    let mut selected = Vec::new();
    for i in by_priority {
        if !blocked[i] {
            selected.push(i);
            for &b in &adjacency[i] {
                blocked[b] = true;
            }
        }
    }
    selected.sort_unstable();

    let counters = Counters {
        ladder_steps: round,
        opened: opened.len(),
        residual_clients: residual,
        loop_exit: if residual > 0 { "all_open" } else { "all_frozen" }.into(),
        ..Counters::default()
    };
    let result = result_from_rows(matrix, instance, &selected, counters)?;
    let trace = PramTrace {
        gamma,
        rounds: round,
        open_round,
        client_alpha: alpha,
        service,
        conflicts,
        selected,
    };
    Ok((result, trace))
}
