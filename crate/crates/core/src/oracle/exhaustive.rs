use serde::{Deserialize, Serialize};

use super::DistanceMatrix;
use crate::error::{Error, Result};
use crate::facloc::Instance;
use crate::graph::VertexId;

/// Largest facility count accepted by [`brute_force_opt`].
pub const EXHAUSTIVE_LIMIT: usize = 20;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimum {
    pub objective: f64,
    /// An optimal facility set, sorted; the first optimal subset in
    /// enumeration order on ties.
    pub facilities: Vec<VertexId>,
}

/// Exact optimum by enumerating every nonempty facility subset.
pub fn brute_force_opt(matrix: &DistanceMatrix, instance: &Instance) -> Result<Optimum> {
    let fs = matrix.facilities();
    if fs.len() > EXHAUSTIVE_LIMIT {
        return Err(Error::Refused(format!(
            "{} facilities exceed the exhaustive limit of {EXHAUSTIVE_LIMIT}",
            fs.len()
        )));
    }
    if fs.is_empty() {
        return Err(Error::validation("no facilities"));
    }
    super::check_feasible(matrix)?;
    let m = matrix.clients().len();
    let mut best: Option<(f64, u32)> = None;
    for mask in 1u32..(1 << fs.len()) {
        let mut total: f64 = (0..fs.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| instance.cost(fs[i]))
            .sum();
        for j in 0..m {
            let d = (0..fs.len())
                .filter(|i| mask >> i & 1 == 1)
                .map(|i| matrix.get(i, j))
                .fold(f64::INFINITY, f64::min);
            total += d;
            if best.is_some_and(|(b, _)| total >= b) {
                break;
            }
        }
        if best.is_none_or(|(b, _)| total < b) {
            best = Some((total, mask));
        }
    }
    let (objective, mask) = best.expect("at least one subset");
    let mut facilities: Vec<VertexId> = (0..fs.len()).filter(|i| mask >> i & 1 == 1).map(|i| fs[i]).collect();
    facilities.sort_unstable();
    Ok(Optimum { objective, facilities })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{path_graph, star_graph, Graph};
    use crate::oracle::all_pairs;

    #[test]
    fn single_facility() {
        let g = star_graph(5);
        let inst = Instance::new(vec![true, false, false, false, false], vec![true; 5], vec![3.0; 5]).unwrap();
        let m = DistanceMatrix::for_instance(&g, &inst, 100).unwrap();
        let opt = brute_force_opt(&m, &inst).unwrap();
        assert_eq!(opt.facilities, vec![0]);
        assert_eq!(opt.objective, 3.0 + 4.0);
    }

    #[test]
    fn free_facilities_open_everywhere() {
        let g = path_graph(5, Some(&[1.0, 2.0, 3.0, 4.0]));
        let inst = Instance::uniform(5, 0.0).unwrap();
        let opt = brute_force_opt(&all_pairs(&g, 10).unwrap(), &inst).unwrap();
        assert_eq!(opt.objective, 0.0);
        assert_eq!(opt.facilities, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn four_vertex_hand_enumeration() {
        // Square 0-1-2-3-0 with weights 1,2,1,2. Costs 4,1,4,1.
        // {1}: 1 + (1+0+2+3) = 7. {3}: 1 + (2+3+1+0) = 7.
        // {1,3}: 2 + (1+0+1+0) = 4 (optimal).
        let g = Graph::from_edges(4, [(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 2.0)], false, true).unwrap();
        let inst = Instance::new(vec![true; 4], vec![true; 4], vec![4.0, 1.0, 4.0, 1.0]).unwrap();
        let opt = brute_force_opt(&all_pairs(&g, 10).unwrap(), &inst).unwrap();
        assert_eq!(opt.objective, 4.0);
        assert_eq!(opt.facilities, vec![1, 3]);
    }

    #[test]
    fn refuses_large_facility_sets() {
        let g = path_graph(21, None);
        let inst = Instance::uniform(21, 1.0).unwrap();
        let m = all_pairs(&g, 100).unwrap();
        assert!(matches!(brute_force_opt(&m, &inst), Err(Error::Refused(_))));
    }
}
