use rayon::prelude::*;

use super::{check_feasible, result_from_rows, DistanceMatrix};
use crate::error::Result;
use crate::facloc::{Counters, Instance, SolveResult};

const MIN_RELATIVE_GAIN: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
enum Move {
    Add(usize),
    Drop(usize),
    Swap { add: usize, drop: usize },
}

/// Nearest and second-nearest open facility (row index) per client.
struct Assignment {
    d1: Vec<f64>,
    near1: Vec<usize>,
    d2: Vec<f64>,
}

/// Local search over add / drop / swap moves with the best-improvement rule.
///
/// Starts from the best single facility and stops when no move lowers the
/// objective by more than a relative `1e-9`. Ties between equally good moves
/// go to the smaller facility ids. Unreachable pairs are priced at a finite
/// penalty larger than any feasible objective, so disconnected instances
/// still converge to a feasible set.
pub fn local_search_baseline(matrix: &DistanceMatrix, instance: &Instance) -> Result<SolveResult> {
    check_feasible(matrix)?;
    let nf = matrix.facilities().len();
    let nc = matrix.clients().len();
    let cost: Vec<f64> = matrix.facilities().iter().map(|&f| instance.cost(f)).collect();
    let finite_total: f64 = (0..nf)
        .flat_map(|i| matrix.row(i).iter().copied())
        .filter(|d| d.is_finite())
        .sum::<f64>()
        + cost.iter().sum::<f64>();
    let penalty = 2.0 * finite_total + 1.0;
    let dist = |i: usize, j: usize| {
        let d = matrix.get(i, j);
        if d.is_finite() {
            d
        } else {
            penalty
        }
    };
    // Rows are visited in facility-id order so that ties favor smaller ids.
    let mut order: Vec<usize> = (0..nf).collect();
    order.sort_unstable_by_key(|&i| matrix.facilities()[i]);
    let rank: Vec<usize> = {
        let mut r = vec![0; nf];
        for (pos, &i) in order.iter().enumerate() {
            r[i] = pos;
        }
        r
    };

    let start = order
        .par_iter()
        .map(|&i| (cost[i] + (0..nc).map(|j| dist(i, j)).sum::<f64>(), rank[i]))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("instances have a facility");
    let mut open = vec![order[start.1]];
    let mut iterations = 0u32;

    loop {
        let state = assign(&open, nc, &dist);
        let objective: f64 = open.iter().map(|&i| cost[i]).sum::<f64>() + state.d1.iter().sum::<f64>();
        let threshold = -MIN_RELATIVE_GAIN * objective.abs().max(1.0);
        let Some((delta, mv)) = best_move(&open, &order, &rank, &cost, &state, &dist) else {
            break;
        };
        if delta >= threshold {
            break;
        }
        match mv {
            Move::Add(i) => open.push(i),
            Move::Drop(i) => open.retain(|&x| x != i),
            Move::Swap { add, drop } => {
                open.retain(|&x| x != drop);
                open.push(add);
            }
        }
        iterations += 1;
    }

    let counters = Counters {
        ladder_steps: iterations,
        opened: open.len(),
        loop_exit: "local_optimum".into(),
        ..Counters::default()
    };
    result_from_rows(matrix, instance, &open, counters)
}

fn assign(open: &[usize], nc: usize, dist: &(impl Fn(usize, usize) -> f64 + Sync)) -> Assignment {
    let mut a = Assignment {
        d1: vec![f64::INFINITY; nc],
        near1: vec![usize::MAX; nc],
        d2: vec![f64::INFINITY; nc],
    };
    let mut sorted = open.to_vec();
    sorted.sort_unstable();
    for &i in &sorted {
        for j in 0..nc {
            let d = dist(i, j);
            if d < a.d1[j] {
                a.d2[j] = a.d1[j];
                a.d1[j] = d;
                a.near1[j] = i;
            } else if d < a.d2[j] {
                a.d2[j] = d;
            }
        }
    }
    a
}

/// The most improving move as `(objective change, move)`; ties resolved by
/// move kind and then by facility id rank.
fn best_move(
    open: &[usize],
    order: &[usize],
    rank: &[usize],
    cost: &[f64],
    state: &Assignment,
    dist: &(impl Fn(usize, usize) -> f64 + Sync),
) -> Option<(f64, Move)> {
    let nf = cost.len();
    let nc = state.d1.len();
    let mut slot = vec![usize::MAX; nf];
    for (s, &i) in open.iter().enumerate() {
        slot[i] = s;
    }
    // Loss from closing each open facility with no replacement.
    let mut drop_loss = vec![0.0; open.len()];
    for j in 0..nc {
        drop_loss[slot[state.near1[j]]] += state.d2[j] - state.d1[j];
    }
    let key = |mv: &Move| match *mv {
        Move::Add(i) => (0, rank[i], 0),
        Move::Drop(i) => (1, rank[i], 0),
        Move::Swap { add, drop } => (2, rank[add], rank[drop]),
    };
    let better = |a: &(f64, Move), b: &(f64, Move)| a.0 < b.0 || (a.0 == b.0 && key(&a.1) < key(&b.1));

    let mut best: Option<(f64, Move)> = None;
    if open.len() >= 2 {
        for (s, &i) in open.iter().enumerate() {
            let cand = (drop_loss[s] - cost[i], Move::Drop(i));
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
    }
    let candidates: Vec<usize> = order.iter().copied().filter(|&i| slot[i] == usize::MAX).collect();
    let per_facility: Vec<Option<(f64, Move)>> = candidates
        .par_iter()
        .map(|&f| {
            let mut gain = 0.0;
            let mut correction = vec![0.0; open.len()];
            for j in 0..nc {
                let d = dist(f, j);
                let d1 = state.d1[j];
                if d < d1 {
                    gain += d1 - d;
                }
                correction[slot[state.near1[j]]] += d.min(state.d2[j]) - d.min(d1);
            }
            let mut local = (cost[f] - gain, Move::Add(f));
            for (s, &g) in open.iter().enumerate() {
                let cand = (cost[f] - cost[g] - gain + correction[s], Move::Swap { add: f, drop: g });
                if better(&cand, &local) {
                    local = cand;
                }
            }
            Some(local)
        })
        .collect();
    for cand in per_facility.into_iter().flatten() {
        if best.as_ref().is_none_or(|b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_forest_fire, star_graph, Graph};
    use crate::oracle::{all_pairs, brute_force_opt};

    #[test]
    fn one_facility_only() {
        let g = star_graph(5);
        let inst = Instance::new(vec![false, false, true, false, false], vec![true; 5], vec![9.0; 5]).unwrap();
        let m = DistanceMatrix::for_instance(&g, &inst, 100).unwrap();
        let r = local_search_baseline(&m, &inst).unwrap();
        assert_eq!(r.facilities, vec![2]);
        assert_eq!(r.assignments.len(), 5);
        assert_eq!(r.objective, 9.0 + 1.0 + 0.0 + 2.0 * 3.0);
    }

    #[test]
    fn central_facility_beats_peripheral_pair() {
        // Hub 0 joined to 1,2 (weight 1) and to 3,4,5 (weight 1); facilities
        // are the hub (cost 3) and the leaves 1 and 2 (cost 2.5 each).
        let edges = [(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0), (0, 4, 1.0), (0, 5, 1.0)];
        let g = Graph::from_edges(6, edges, false, true).unwrap();
        let inst = Instance::new(
            vec![true, true, true, false, false, false],
            vec![true; 6],
            vec![3.0, 2.5, 2.5, 0.0, 0.0, 0.0],
        )
        .unwrap();
        let m = DistanceMatrix::for_instance(&g, &inst, 100).unwrap();
        let opt = brute_force_opt(&m, &inst).unwrap();
        assert_eq!(opt.facilities, vec![0]);
        let r = local_search_baseline(&m, &inst).unwrap();
        assert_eq!(r.facilities, vec![0]);
        assert_eq!(r.objective, opt.objective);
    }

    #[test]
    fn never_below_optimum() {
        for seed in 0..10 {
            let g = generate_forest_fire(10, 0.4, 0.3, seed, false).unwrap();
            let inst = Instance::uniform(10, 1.0 + seed as f64 * 0.5).unwrap();
            let m = all_pairs(&g, 100).unwrap();
            let opt = brute_force_opt(&m, &inst).unwrap();
            let r = local_search_baseline(&m, &inst).unwrap();
            assert!(r.objective >= opt.objective - 1e-9);
            assert!(r.objective <= 2.5 * opt.objective + 1e-9);
        }
    }

    #[test]
    fn disconnected_components_get_covered() {
        let g = Graph::from_edges(4, [(0, 1, 1.0), (2, 3, 1.0)], false, false).unwrap();
        let inst = Instance::uniform(4, 1.0).unwrap();
        let r = local_search_baseline(&all_pairs(&g, 10).unwrap(), &inst).unwrap();
        assert_eq!(r.facilities.len(), 2);
        assert_eq!(r.objective, 4.0);
    }
}
