//! Synchronous-network substrate: time-varying digraphs over nodes `1..=n`,
//! the three communication-graph generators (line, Erdős–Rényi, random
//! geometric) and connectivity/diameter queries.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("edge ({0}, {1}) references a node outside 1..={2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("could not generate a connected graph within {0} attempts")]
    ConnectivityRetryExhausted(usize),
}

/// Directed edge set for one round, stored sorted for deterministic iteration.
pub type EdgeSet = Vec<(usize, usize)>;

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    /// Same edge set at every round.
    Static(EdgeSet),
    /// Edge sets cycled with period equal to the list length.
    Periodic(Vec<EdgeSet>),
}

/// Digraph over node identifiers `1..=n` whose edge set may change per round.
#[derive(Clone, Debug)]
pub struct TimeVaryingDigraph {
    n: usize,
    schedule: Schedule,
}

#[derive(Serialize, Deserialize)]
struct GraphFile {
    n: usize,
    schedule_kind: String,
    edge_sets: Vec<Vec<(usize, usize)>>,
}

impl TimeVaryingDigraph {
    pub fn new(n: usize, schedule: Schedule) -> Result<Self, NetworkError> {
        let check = |edges: &EdgeSet| -> Result<(), NetworkError> {
            for &(i, j) in edges {
                if i == j {
                    return Err(NetworkError::SelfLoop(i));
                }
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(NetworkError::NodeOutOfRange(i, j, n));
                }
            }
            Ok(())
        };
        match &schedule {
            Schedule::Static(edges) => check(edges)?,
            Schedule::Periodic(sets) => {
                assert!(!sets.is_empty(), "periodic schedule needs at least one edge set");
                for edges in sets {
                    check(edges)?;
                }
            }
        }
        let mut schedule = schedule;
        match &mut schedule {
            Schedule::Static(edges) => {
                edges.sort_unstable();
                edges.dedup();
            }
            Schedule::Periodic(sets) => {
                for edges in sets.iter_mut() {
                    edges.sort_unstable();
                    edges.dedup();
                }
            }
        }
        Ok(TimeVaryingDigraph { n, schedule })
    }

    pub fn from_static(n: usize, edges: EdgeSet) -> Result<Self, NetworkError> {
        TimeVaryingDigraph::new(n, Schedule::Static(edges))
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_static(&self) -> bool {
        matches!(self.schedule, Schedule::Static(_))
    }

    pub fn period(&self) -> usize {
        match &self.schedule {
            Schedule::Static(_) => 1,
            Schedule::Periodic(sets) => sets.len(),
        }
    }

    /// Edge set active at round `t`.
    pub fn edges_at(&self, t: usize) -> &[(usize, usize)] {
        match &self.schedule {
            Schedule::Static(edges) => edges,
            Schedule::Periodic(sets) => &sets[t % sets.len()],
        }
    }

    /// In-neighbors of node `i` (1-based) at round `t`.
    pub fn in_neighbors(&self, i: usize, t: usize) -> Vec<usize> {
        self.edges_at(t).iter().filter(|&&(_, to)| to == i).map(|&(from, _)| from).collect()
    }

    /// Out-neighbors of node `i` (1-based) at round `t`.
    pub fn out_neighbors(&self, i: usize, t: usize) -> Vec<usize> {
        self.edges_at(t).iter().filter(|&&(from, _)| from == i).map(|&(_, to)| to).collect()
    }

    pub fn in_degree(&self, i: usize, t: usize) -> usize {
        self.edges_at(t).iter().filter(|&&(_, to)| to == i).count()
    }

    pub fn max_in_degree(&self, t: usize) -> usize {
        (1..=self.n).map(|i| self.in_degree(i, t)).max().unwrap_or(0)
    }

    pub fn to_json(&self) -> String {
        let (kind, sets) = match &self.schedule {
            Schedule::Static(edges) => ("static", vec![edges.clone()]),
            Schedule::Periodic(sets) => ("periodic", sets.clone()),
        };
        serde_json::to_string_pretty(&GraphFile {
            n: self.n,
            schedule_kind: kind.to_string(),
            edge_sets: sets,
        })
        .expect("serializable")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        let file: GraphFile = serde_json::from_str(s)?;
        let schedule = if file.schedule_kind == "static" {
            Schedule::Static(file.edge_sets.into_iter().next().unwrap_or_default())
        } else {
            Schedule::Periodic(file.edge_sets)
        };
        Ok(TimeVaryingDigraph::new(file.n, schedule).expect("validated on construction"))
    }
}

/// Connectivity summary of one round's digraph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphMetrics {
    /// Longest shortest path; `None` when not strongly connected.
    pub diameter: Option<usize>,
    pub strongly_connected: bool,
}

/// BFS all-pairs distances over the directed edges active at round `t`.
pub fn graph_metrics(g: &TimeVaryingDigraph, t: usize) -> GraphMetrics {
    metrics_of_edges(g.node_count(), g.edges_at(t))
}

fn metrics_of_edges(n: usize, edges: &[(usize, usize)]) -> GraphMetrics {
    let mut adj = vec![Vec::new(); n + 1];
    for &(i, j) in edges {
        adj[i].push(j);
    }
    let mut diameter = 0usize;
    for start in 1..=n {
        let mut dist = vec![usize::MAX; n + 1];
        let mut queue = std::collections::VecDeque::new();
        dist[start] = 0;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for node in 1..=n {
            if dist[node] == usize::MAX {
                return GraphMetrics { diameter: None, strongly_connected: false };
            }
            diameter = diameter.max(dist[node]);
        }
    }
    GraphMetrics { diameter: Some(diameter), strongly_connected: true }
}

/// Joint strong connectivity: for periodic (or static) schedules the union of
/// edge sets from any round onward equals a union over one period, so it is
/// enough to check the union of `window` consecutive edge sets starting at
/// every phase.
pub fn is_jointly_strongly_connected(g: &TimeVaryingDigraph, window: usize) -> bool {
    assert!(window >= 1);
    let period = g.period();
    for phase in 0..period {
        let mut union: EdgeSet = Vec::new();
        for offset in 0..window {
            union.extend_from_slice(g.edges_at(phase + offset));
        }
        union.sort_unstable();
        union.dedup();
        if !metrics_of_edges(g.node_count(), &union).strongly_connected {
            return false;
        }
    }
    true
}

/// Bidirected path `1 — 2 — … — n`.
pub fn gen_line(n: usize) -> TimeVaryingDigraph {
    assert!(n >= 2);
    let mut edges = Vec::with_capacity(2 * (n - 1));
    for i in 1..n {
        edges.push((i, i + 1));
        edges.push((i + 1, i));
    }
    TimeVaryingDigraph::from_static(n, edges).expect("line graph is valid")
}

const ER_MAX_RETRIES: usize = 100;

/// Erdős–Rényi graph with edge probability `(1 + epsilon) ln(n) / n`,
/// bidirected, regenerated until connected.
pub fn gen_erdos_renyi<R: Rng + ?Sized>(
    n: usize,
    epsilon: f64,
    rng: &mut R,
) -> Result<TimeVaryingDigraph, NetworkError> {
    assert!(n >= 2 && epsilon > 0.0);
    let p = ((1.0 + epsilon) * (n as f64).ln() / n as f64).min(1.0);
    for _ in 0..ER_MAX_RETRIES {
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in i + 1..=n {
                if rng.gen::<f64>() < p {
                    edges.push((i, j));
                    edges.push((j, i));
                }
            }
        }
        let g = TimeVaryingDigraph::from_static(n, edges)?;
        if graph_metrics(&g, 0).strongly_connected {
            return Ok(g);
        }
    }
    Err(NetworkError::ConnectivityRetryExhausted(ER_MAX_RETRIES))
}

/// Random geometric graph: `n` uniform points in the unit square connected at
/// the smallest radius that yields a connected graph (the longest edge of the
/// Euclidean minimum spanning tree). Also returns positions and the radius.
pub fn gen_random_geometric_with_meta<R: Rng + ?Sized>(
    n: usize,
    rng: &mut R,
) -> (TimeVaryingDigraph, Vec<(f64, f64)>, f64) {
    assert!(n >= 2);
    let positions: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let dist = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();

    // Prim's algorithm; the bottleneck edge of the MST is the minimum radius
    // that keeps the disk graph connected.
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    in_tree[0] = true;
    for j in 1..n {
        best[j] = dist(positions[0], positions[j]);
    }
    let mut radius = 0.0f64;
    for _ in 1..n {
        let mut next = usize::MAX;
        let mut next_d = f64::INFINITY;
        for j in 0..n {
            if !in_tree[j] && best[j] < next_d {
                next = j;
                next_d = best[j];
            }
        }
        in_tree[next] = true;
        radius = radius.max(next_d);
        for j in 0..n {
            if !in_tree[j] {
                best[j] = best[j].min(dist(positions[next], positions[j]));
            }
        }
    }

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if dist(positions[i], positions[j]) <= radius {
                edges.push((i + 1, j + 1));
                edges.push((j + 1, i + 1));
            }
        }
    }
    let g = TimeVaryingDigraph::from_static(n, edges).expect("validated edges");
    (g, positions, radius)
}

/// Random geometric graph at the minimum connecting radius.
pub fn gen_random_geometric<R: Rng + ?Sized>(n: usize, rng: &mut R) -> TimeVaryingDigraph {
    gen_random_geometric_with_meta(n, rng).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn line_diameter() {
        assert_eq!(graph_metrics(&gen_line(5), 0).diameter, Some(4));
        assert_eq!(graph_metrics(&gen_line(7), 0).diameter, Some(6));
        assert_eq!(graph_metrics(&gen_line(240), 0).diameter, Some(239));
    }

    #[test]
    fn line_degrees_bounded() {
        let g = gen_line(6);
        for i in 1..=6 {
            assert!(g.in_degree(i, 0) <= 2);
        }
    }

    #[test]
    fn directed_cycle_metrics() {
        let n = 6;
        let edges: EdgeSet = (1..=n).map(|i| (i, i % n + 1)).collect();
        let g = TimeVaryingDigraph::from_static(n, edges).unwrap();
        let m = graph_metrics(&g, 0);
        assert!(m.strongly_connected);
        assert_eq!(m.diameter, Some(5));
    }

    #[test]
    fn complete_graph_diameter_one() {
        let n = 9;
        let mut edges = Vec::new();
        for i in 1..=n {
            for j in 1..=n {
                if i != j {
                    edges.push((i, j));
                }
            }
        }
        let g = TimeVaryingDigraph::from_static(n, edges).unwrap();
        assert_eq!(graph_metrics(&g, 0).diameter, Some(1));
    }

    #[test]
    fn erdos_renyi_connected_and_mean_degree() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let n = 100;
        let eps = 0.3;
        let p = (1.0 + eps) * (n as f64).ln() / n as f64;
        assert!((p - 0.0599).abs() < 1e-3);
        let mut total_edges = 0usize;
        let graphs = 50;
        for _ in 0..graphs {
            let g = gen_erdos_renyi(n, eps, &mut rng).unwrap();
            assert!(graph_metrics(&g, 0).strongly_connected);
            total_edges += g.edges_at(0).len();
        }
        let mean_degree = total_edges as f64 / (graphs * n) as f64;
        let expected = (1.0 + eps) * (n as f64).ln();
        assert!(
            (mean_degree - expected).abs() < 0.2 * expected,
            "mean degree {mean_degree} vs expected {expected}"
        );
    }

    #[test]
    fn random_geometric_radius_is_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (g, positions, radius) = gen_random_geometric_with_meta(50, &mut rng);
        assert!(graph_metrics(&g, 0).strongly_connected);

        // shrinking the radius below the MST bottleneck disconnects the graph
        let shrunk = radius - 1e-9;
        let n = positions.len();
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = ((positions[i].0 - positions[j].0).powi(2)
                        + (positions[i].1 - positions[j].1).powi(2))
                    .sqrt();
                    if d <= shrunk {
                        edges.push((i + 1, j + 1));
                    }
                }
            }
        }
        let g2 = TimeVaryingDigraph::from_static(n, edges).unwrap();
        assert!(!graph_metrics(&g2, 0).strongly_connected);
    }

    #[test]
    fn generators_deterministic_per_seed() {
        let a = gen_erdos_renyi(40, 0.5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        let b = gen_erdos_renyi(40, 0.5, &mut ChaCha8Rng::seed_from_u64(7)).unwrap();
        assert_eq!(a.edges_at(0), b.edges_at(0));
        let c = gen_random_geometric(30, &mut ChaCha8Rng::seed_from_u64(8));
        let d = gen_random_geometric(30, &mut ChaCha8Rng::seed_from_u64(8));
        assert_eq!(c.edges_at(0), d.edges_at(0));
    }

    #[test]
    fn joint_connectivity_periodic() {
        // alternating halves of a directed cycle over 4 nodes
        let first: EdgeSet = vec![(1, 2), (3, 4)];
        let second: EdgeSet = vec![(2, 3), (4, 1)];
        let g = TimeVaryingDigraph::new(4, Schedule::Periodic(vec![first, second])).unwrap();
        assert!(is_jointly_strongly_connected(&g, 2));

        // a node that is never reachable in the union
        let broken = TimeVaryingDigraph::new(
            3,
            Schedule::Periodic(vec![vec![(1, 2), (2, 1)], vec![(2, 1), (1, 2)]]),
        )
        .unwrap();
        assert!(!is_jointly_strongly_connected(&broken, 2));

        // static strongly connected graph passes for any window
        assert!(is_jointly_strongly_connected(&gen_line(5), 1));
        assert!(is_jointly_strongly_connected(&gen_line(5), 3));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            TimeVaryingDigraph::from_static(3, vec![(1, 1)]),
            Err(NetworkError::SelfLoop(1))
        ));
        assert!(matches!(
            TimeVaryingDigraph::from_static(3, vec![(1, 4)]),
            Err(NetworkError::NodeOutOfRange(1, 4, 3))
        ));
    }

    #[test]
    fn json_round_trip() {
        let g = gen_line(4);
        let s = g.to_json();
        let back = TimeVaryingDigraph::from_json(&s).unwrap();
        assert_eq!(back.node_count(), 4);
        assert_eq!(back.edges_at(0), g.edges_at(0));
    }
}
