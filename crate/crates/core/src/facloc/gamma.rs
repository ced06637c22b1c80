use super::{nearest_sources, Instance};
use crate::bsp::Engine;
use crate::error::{Error, Result};
use crate::graph::{Direction, Graph};

/// `γ = max_c min_f {c(f) + d(f, c)}`, from a relaxation seeded with the
/// opening cost at every facility.
pub fn compute_gamma(graph: &Graph, instance: &Instance, engine: &Engine) -> Result<f64> {
    instance.check_graph(graph)?;
    let seeds: Vec<_> = instance
        .facilities()
        .into_iter()
        .map(|f| (f, instance.cost(f)))
        .collect();
    let (labels, _) = nearest_sources(graph, &seeds, Direction::Outgoing, engine)?;
    let mut gamma: f64 = 0.0;
    for c in instance.clients() {
        match labels[c as usize] {
            Some(l) => gamma = gamma.max(l.distance),
            None => return Err(Error::Infeasible { client: c }),
        }
    }
    Ok(gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{assign_uniform_weights, distances_from, generate_forest_fire, path_graph};

    #[test]
    fn single_vertex() {
        let g = path_graph(1, None);
        let inst = Instance::uniform(1, 7.0).unwrap();
        assert_eq!(compute_gamma(&g, &inst, &Engine::default()).unwrap(), 7.0);
    }

    #[test]
    fn one_facility_one_client() {
        let g = path_graph(2, Some(&[3.0]));
        let inst = Instance::new(vec![true, false], vec![false, true], vec![2.0, 0.0]).unwrap();
        assert_eq!(compute_gamma(&g, &inst, &Engine::default()).unwrap(), 5.0);
    }

    #[test]
    fn unreachable_client_is_named() {
        let g = crate::Graph::from_edges(3, [(0, 1, 1.0)], false, false).unwrap();
        let inst = Instance::new(vec![true, false, false], vec![true; 3], vec![1.0; 3]).unwrap();
        assert!(matches!(
            compute_gamma(&g, &inst, &Engine::default()),
            Err(Error::Infeasible { client: 2 })
        ));
    }

    #[test]
    fn matches_pairwise_brute_force() {
        let g = generate_forest_fire(50, 0.3, 0.3, 4, false).unwrap();
        let g = assign_uniform_weights(&g, 1.0, 10.0, 4).unwrap();
        let cost: Vec<f64> = (0..50).map(|v| (v % 7) as f64 * 1.5).collect();
        let facilities: Vec<bool> = (0..50).map(|v| v % 3 == 0).collect();
        let inst = Instance::new(facilities.clone(), vec![true; 50], cost.clone()).unwrap();
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|f| distances_from(&g, f, None, Direction::Outgoing))
            .collect();
        let expected = (0..50)
            .map(|c| {
                (0..50)
                    .filter(|&f| facilities[f])
                    .map(|f| cost[f] + rows[f][c])
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        let got = compute_gamma(&g, &inst, &Engine::default()).unwrap();
        assert!((got - expected).abs() <= 1e-9 * expected, "{got} vs {expected}");
    }
}
