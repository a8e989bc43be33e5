//! Graph Laplacian, eigenvalue spectrum, and spectral distance metrics.
//!
//! The Wiener index is computed two ways: from all-pairs shortest path
//! hop counts ([`wiener_paths`]) and from the Laplacian spectrum
//! ([`wiener_spectral`], `n * sum(1 / lambda_i)` over the nonzero
//! eigenvalues). The two agree on trees; on graphs with cycles the
//! spectral form diverges from the path form and is the one the placement
//! objective uses.

pub mod jacobi;

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::Real;

/// Algebraic connectivity at or below this is treated as disconnected.
/// Integer Laplacians at the sizes used here keep spurious eigenvalues
/// orders of magnitude below it (f64).
pub const CONNECTIVITY_TOL: f64 = 1e-9;

/// Default off-diagonal convergence tolerance for [`eigenvalues`].
pub const EIGEN_TOL: f64 = 1e-12;

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    n: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl NetworkGraph {
    pub fn new(n: usize) -> Self {
        NetworkGraph {
            n,
            edges: BTreeSet::new(),
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = NetworkGraph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v)?;
        }
        Ok(g)
    }

    /// Inserts the undirected edge `{u, v}`. Re-adding is a no-op.
    pub fn add_edge(&mut self, u: usize, v: usize) -> Result<()> {
        if u >= self.n || v >= self.n {
            return Err(Error::Domain(format!(
                "edge ({u}, {v}) outside vertex range 0..{}",
                self.n
            )));
        }
        if u == v {
            return Err(Error::Domain(format!("self-loop at vertex {u}")));
        }
        self.edges.insert((u.min(v), u.max(v)));
        Ok(())
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u.min(v), u.max(v)))
    }

    pub fn degree(&self, u: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == u || b == u)
            .count()
    }

    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == u {
                    Some(b)
                } else if b == u {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Edges in ascending `(min, max)` order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    /// Hop distances from `src` by breadth-first search; `None` where
    /// unreachable.
    pub fn bfs_distances(&self, src: usize) -> Vec<Option<u64>> {
        let adj = self.adjacency_lists();
        let mut dist = vec![None; self.n];
        let mut queue = std::collections::VecDeque::new();
        dist[src] = Some(0);
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v].is_none() {
                    dist[v] = Some(dist[u].unwrap() + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn adjacency_lists(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for &(u, v) in &self.edges {
            adj[u].push(v);
            adj[v].push(u);
        }
        adj
    }
}

/// Integer Laplacian (degree on the diagonal, minus adjacency off it).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LaplacianMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl LaplacianMatrix {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[i * self.n + j]
    }

    pub fn row_sum(&self, i: usize) -> i64 {
        self.entries[i * self.n..(i + 1) * self.n].iter().sum()
    }

    /// Row-major copy converted to the scalar type.
    pub fn to_dense<F: Real>(&self) -> Vec<F> {
        self.entries
            .iter()
            .map(|&e| F::from_i64(e).unwrap())
            .collect()
    }
}

/// Laplacian of `g`: `L = D - A`.
pub fn laplacian(g: &NetworkGraph) -> LaplacianMatrix {
    let n = g.vertex_count();
    let mut entries = vec![0i64; n * n];
    for (u, v) in g.edges() {
        entries[u * n + v] = -1;
        entries[v * n + u] = -1;
        entries[u * n + u] += 1;
        entries[v * n + v] += 1;
    }
    LaplacianMatrix { n, entries }
}

/// Laplacian eigenvalues in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<F> {
    values: Vec<F>,
}

impl<F: Real> Spectrum<F> {
    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Second-smallest eigenvalue (algebraic connectivity).
    pub fn lambda2(&self) -> F {
        self.values[1]
    }
}

/// Eigenvalues of the Laplacian, ascending. `tol` is the off-diagonal
/// convergence threshold of the underlying Jacobi sweep.
pub fn eigenvalues<F: Real>(l: &LaplacianMatrix, tol: F) -> Result<Spectrum<F>> {
    let values = jacobi::symmetric_eigenvalues(&l.to_dense::<F>(), l.order(), tol)?;
    Ok(Spectrum { values })
}

/// Algebraic connectivity of `g` (zero iff disconnected, up to tolerance).
pub fn fiedler_value<F: Real>(g: &NetworkGraph) -> Result<F> {
    if g.vertex_count() < 2 {
        return Err(Error::Domain(
            "algebraic connectivity needs at least 2 vertices".into(),
        ));
    }
    let s = eigenvalues::<F>(&laplacian(g), F::from_f64(EIGEN_TOL).unwrap())?;
    Ok(s.lambda2())
}

/// Spectral Wiener index `n * sum(1 / lambda_i)`, `i >= 2`.
pub fn wiener_spectral<F: Real>(s: &Spectrum<F>) -> Result<F> {
    let n = s.len();
    if n < 2 {
        return Err(Error::Domain(
            "Wiener index needs at least 2 vertices".into(),
        ));
    }
    let conn = F::from_f64(CONNECTIVITY_TOL).unwrap();
    if s.lambda2() <= conn {
        return Err(Error::Disconnected);
    }
    let sum: F = s.values[1..].iter().map(|&l| F::one() / l).sum();
    Ok(F::from_usize(n).unwrap() * sum)
}

/// Path-form Wiener index: half the sum of all-pairs hop distances.
pub fn wiener_paths(g: &NetworkGraph) -> Result<u64> {
    let n = g.vertex_count();
    if n < 2 {
        return Err(Error::Domain(
            "Wiener index needs at least 2 vertices".into(),
        ));
    }
    let mut total = 0u64;
    for src in 0..n {
        for (dst, d) in g.bfs_distances(src).iter().enumerate() {
            if dst == src {
                continue;
            }
            match d {
                Some(hops) => total += hops,
                None => return Err(Error::Disconnected),
            }
        }
    }
    Ok(total / 2)
}

/// Wiener index with its per-pair average and shadowed average.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceMetrics<F> {
    pub wiener: F,
    /// Average internode distance `wiener / C(n, 2)`.
    pub mu: F,
    /// `mu` plus the shadowing margin.
    pub mu_w: F,
    pub delta_mu: F,
}

/// Average internode distance from a Wiener index over `n` vertices,
/// widened by `delta_mu`.
pub fn average_distance<F: Real>(wiener: F, n: usize, delta_mu: F) -> Result<DistanceMetrics<F>> {
    if n < 2 {
        return Err(Error::Domain(
            "average distance needs at least 2 vertices".into(),
        ));
    }
    let pairs = F::from_usize(n * (n - 1) / 2).unwrap();
    let mu = wiener / pairs;
    Ok(DistanceMetrics {
        wiener,
        mu,
        mu_w: mu + delta_mu,
        delta_mu,
    })
}

/// Link quality `clamp(k * exp(-mu_shadow * d^gamma), 0, 1)`.
pub fn link_probability<F: Real>(d: F, gamma: F, mu_shadow: F, k_const: F) -> Result<F> {
    if d < F::zero() {
        return Err(Error::Domain("distance must be nonnegative".into()));
    }
    let p = k_const * (-mu_shadow * d.powf(gamma)).exp();
    Ok(p.max(F::zero()).min(F::one()))
}
