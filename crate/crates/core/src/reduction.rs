//! Reduced matrix, row/column partitions with proportionality factors, the
//! simplified matrix, and the forest test on its bipartite graph.

use num::Zero;

use crate::model::AugmentedVerticalSystem;
use crate::rational::{rat_int, sign_of, LinAlgError, Rat, RatMatrix};

/// How rows and columns of the reduced matrix are grouped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionMode {
    /// Group proportional columns (any nonzero factor) and proportional rows
    /// (positive factor) as much as possible.
    Maximal,
    /// Every block a singleton; the simplified matrix equals the reduced one.
    Singleton,
}

/// The reduced matrix together with its partitions and simplified matrix.
///
/// Row blocks `tau` partition the row indices of `pbar`; column blocks
/// `alpha` partition its column indices. `row_rep[u]` / `col_rep[k]` are the
/// block representatives (smallest index). For every row i in block u,
/// row i of `pbar` equals `gamma_prime[i]` times row `row_rep[u]`; for every
/// column j in block k, column j equals `gamma[j]` times column `col_rep[k]`.
/// Representatives have factor 1. `u1` holds the blocks whose `gamma` values
/// are all positive; `u2` the rest. `p` is the simplified matrix
/// P_{uk} = pbar_{row_rep[u], col_rep[k]}.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub pbar: RatMatrix,
    pub mode: PartitionMode,
    pub tau: Vec<Vec<usize>>,
    pub alpha: Vec<Vec<usize>>,
    pub row_rep: Vec<usize>,
    pub col_rep: Vec<usize>,
    pub gamma: Vec<Rat>,
    pub gamma_prime: Vec<Rat>,
    pub u1: Vec<usize>,
    pub u2: Vec<usize>,
    pub p: RatMatrix,
    /// Set when two nonzero rows of `pbar` are proportional with a negative
    /// factor; then `pbar`·μ > 0 is infeasible and the caller can conclude
    /// immediately. Such rows are never grouped.
    pub negative_row_proportionality: bool,
}

impl Reduction {
    /// Number of row blocks (rows of the simplified matrix).
    pub fn s(&self) -> usize {
        self.tau.len()
    }

    /// Number of column blocks (columns of the simplified matrix).
    pub fn l(&self) -> usize {
        self.alpha.len()
    }

    /// Dimension of the ρ-space of the simplified system.
    pub fn m(&self) -> usize {
        self.s() + self.l()
    }

    /// Block index of a row of `pbar`.
    pub fn row_block(&self, i: usize) -> usize {
        self.tau.iter().position(|b| b.contains(&i)).unwrap()
    }

    /// Block index of a column of `pbar`.
    pub fn col_block(&self, j: usize) -> usize {
        self.alpha.iter().position(|b| b.contains(&j)).unwrap()
    }
}

/// The unique P̄ with [P̄; I] spanning ker(C), for principal C.
pub fn reduced_matrix(sys: &AugmentedVerticalSystem) -> Result<RatMatrix, LinAlgError> {
    let phat = sys.c.kernel_basis_principal()?;
    let sbar = sys.c.rows();
    let lbar = phat.cols();
    let mut pbar = RatMatrix::zeros(sbar, lbar);
    for i in 0..sbar {
        for j in 0..lbar {
            *pbar.at_mut(i, j) = phat.at(i, j).clone();
        }
    }
    Ok(pbar)
}

/// If column j2 equals γ·(column j1) for a nonzero γ, returns γ.
fn column_factor(pbar: &RatMatrix, j1: usize, j2: usize) -> Option<Rat> {
    let pivot = (0..pbar.rows()).find(|&i| !pbar.at(i, j1).is_zero())?;
    if pbar.at(pivot, j2).is_zero() {
        return None;
    }
    let g = pbar.at(pivot, j2) / pbar.at(pivot, j1);
    for i in 0..pbar.rows() {
        if *pbar.at(i, j2) != pbar.at(i, j1) * &g {
            return None;
        }
    }
    Some(g)
}

/// If row i2 equals γ′·(row i1) for a nonzero γ′, returns γ′.
fn row_factor(pbar: &RatMatrix, i1: usize, i2: usize) -> Option<Rat> {
    let pivot = (0..pbar.cols()).find(|&j| !pbar.at(i1, j).is_zero())?;
    if pbar.at(i2, pivot).is_zero() {
        return None;
    }
    let g = pbar.at(i2, pivot) / pbar.at(i1, pivot);
    for j in 0..pbar.cols() {
        if *pbar.at(i2, j) != pbar.at(i1, j) * &g {
            return None;
        }
    }
    Some(g)
}

/// Groups rows and columns of the reduced matrix and derives the simplified
/// matrix. Representatives are the smallest index of each block; factors are
/// normalized to 1 on representatives. Zero rows and zero columns stay in
/// singleton blocks.
pub fn compute_partitions(pbar: &RatMatrix, mode: PartitionMode) -> Reduction {
    let sbar = pbar.rows();
    let lbar = pbar.cols();
    let mut gamma = vec![rat_int(1); lbar];
    let mut gamma_prime = vec![rat_int(1); sbar];
    let mut negative = false;

    let (tau, alpha) = match mode {
        PartitionMode::Singleton => (
            (0..sbar).map(|i| vec![i]).collect::<Vec<_>>(),
            (0..lbar).map(|j| vec![j]).collect::<Vec<_>>(),
        ),
        PartitionMode::Maximal => {
            let mut tau: Vec<Vec<usize>> = Vec::new();
            let mut row_of: Vec<Option<usize>> = vec![None; sbar];
            for i in 0..sbar {
                if row_of[i].is_some() {
                    continue;
                }
                let mut block = vec![i];
                row_of[i] = Some(tau.len());
                if !pbar.row_is_zero(i) {
                    for i2 in i + 1..sbar {
                        if row_of[i2].is_some() {
                            continue;
                        }
                        if let Some(g) = row_factor(pbar, i, i2) {
                            match sign_of(&g) {
                                1 => {
                                    gamma_prime[i2] = g;
                                    row_of[i2] = Some(tau.len());
                                    block.push(i2);
                                }
                                -1 => negative = true,
                                _ => unreachable!(),
                            }
                        }
                    }
                }
                tau.push(block);
            }
            let mut alpha: Vec<Vec<usize>> = Vec::new();
            let mut col_of: Vec<Option<usize>> = vec![None; lbar];
            for j in 0..lbar {
                if col_of[j].is_some() {
                    continue;
                }
                let mut block = vec![j];
                col_of[j] = Some(alpha.len());
                if !(0..sbar).all(|i| pbar.at(i, j).is_zero()) {
                    for j2 in j + 1..lbar {
                        if col_of[j2].is_some() {
                            continue;
                        }
                        if let Some(g) = column_factor(pbar, j, j2) {
                            gamma[j2] = g;
                            col_of[j2] = Some(alpha.len());
                            block.push(j2);
                        }
                    }
                }
                alpha.push(block);
            }
            (tau, alpha)
        }
    };

    let row_rep: Vec<usize> = tau.iter().map(|b| b[0]).collect();
    let col_rep: Vec<usize> = alpha.iter().map(|b| b[0]).collect();
    let mut p = RatMatrix::zeros(tau.len(), alpha.len());
    for (u, &ri) in row_rep.iter().enumerate() {
        for (k, &cj) in col_rep.iter().enumerate() {
            *p.at_mut(u, k) = pbar.at(ri, cj).clone();
        }
    }
    let mut u1 = Vec::new();
    let mut u2 = Vec::new();
    for (k, block) in alpha.iter().enumerate() {
        if block.iter().all(|&j| sign_of(&gamma[j]) > 0) {
            u1.push(k);
        } else {
            u2.push(k);
        }
    }
    Reduction {
        pbar: pbar.clone(),
        mode,
        tau,
        alpha,
        row_rep,
        col_rep,
        gamma,
        gamma_prime,
        u1,
        u2,
        p,
        negative_row_proportionality: negative,
    }
}

/// Bipartite support graph of a matrix: left nodes are rows, right nodes are
/// columns, edges at nonzero entries.
#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    pub left: usize,
    pub right: usize,
    pub edges: Vec<(usize, usize)>,
}

impl BipartiteGraph {
    pub fn from_support(p: &RatMatrix) -> Self {
        let mut edges = Vec::new();
        for i in 0..p.rows() {
            for k in 0..p.cols() {
                if !p.at(i, k).is_zero() {
                    edges.push((i, k));
                }
            }
        }
        BipartiteGraph {
            left: p.rows(),
            right: p.cols(),
            edges,
        }
    }
}

/// One connected component of the support graph with its BFS tree. Nodes are
/// numbered 0..left for rows and left..left+right for columns. `order` is
/// BFS order starting at `root`; `parent[v]` is the BFS parent (None for the
/// root).
#[derive(Debug, Clone)]
pub struct TreeComponent {
    pub root: usize,
    pub order: Vec<usize>,
    pub parent: Vec<Option<usize>>,
}

/// Tests whether the support graph of `p` is acyclic. Components are rooted
/// at their smallest left node (or smallest node when the component has no
/// left node, i.e. an isolated column).
pub fn induces_forest(p: &RatMatrix) -> (bool, Vec<TreeComponent>) {
    let g = BipartiteGraph::from_support(p);
    let n = g.left + g.right;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, k) in &g.edges {
        adj[i].push(g.left + k);
        adj[g.left + k].push(i);
    }
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    let mut acyclic = true;
    // scanning 0..n visits left nodes first, so each component with a left
    // node is discovered (and rooted) at its smallest left node
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut order = vec![start];
        let mut parent = vec![None; n];
        let mut head = 0;
        let mut edge_count = 0usize;
        while head < order.len() {
            let v = order[head];
            head += 1;
            for &w in &adj[v] {
                edge_count += 1;
                if !seen[w] {
                    seen[w] = true;
                    parent[w] = Some(v);
                    order.push(w);
                }
            }
        }
        // every edge was counted twice
        if edge_count / 2 != order.len() - 1 {
            acyclic = false;
        }
        components.push(TreeComponent {
            root: start,
            order,
            parent,
        });
    }
    (acyclic, components)
}
