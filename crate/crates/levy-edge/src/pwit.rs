//! Truncated Poisson weighted infinite trees: resolvent recursion,
//! fractional-moment sums, and exact Ward-identity self-tests.
//!
//! Each vertex gets child edge weights from the Poisson process with
//! intensity `alpha x^{-alpha-1} dx` restricted to `[omega, inf)` and
//! symmetric random signs, so offspring counts are Poisson(`omega^{-alpha}`).
//! Subtree resolvents `R_vv^{(parent)}` satisfy the Schur recursion
//! `R = -(z + sum_w T_w^2 R_w)^{-1}` evaluated leaves-to-root, and
//! off-diagonal entries follow from the product formula
//! `R_0v = (-1)^m R_00 prod T_{u u_-} R_{uu}^{(u_-)}`, accumulated in the log
//! domain to dodge overflow on deep heavy-tailed paths.

use crate::rng::Rng;
use num_complex::Complex64;
use rayon::prelude::*;
use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeError {
    InvalidArguments(String),
    /// Expected vertex count (omega^{-alpha})^L beyond the budget.
    BudgetExceeded { expected: f64, budget: usize },
    /// Dense Ward check requested on a tree too large to invert.
    TooLargeForDense { vertices: usize },
    EmptyBoundaryPool,
}

impl fmt::Display for TreeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeError::InvalidArguments(s) => write!(f, "invalid arguments: {s}"),
            TreeError::BudgetExceeded { expected, budget } => {
                write!(f, "expected {expected:.3e} vertices exceeds budget {budget}")
            }
            TreeError::TooLargeForDense { vertices } => {
                write!(f, "{vertices} vertices is too large for a dense inverse")
            }
            TreeError::EmptyBoundaryPool => write!(f, "stable boundary needs a nonempty pool"),
        }
    }
}

impl std::error::Error for TreeError {}

/// Leaf condition for the resolvent recursion.
#[derive(Clone, Copy)]
pub enum Boundary<'a> {
    /// `R_leaf = -1/z`
    Dirichlet,
    /// Leaf values drawn from a converged population at the same `z`.
    Stable(&'a [Complex64]),
}

/// A sampled truncated tree in BFS layout.
#[derive(Debug, Clone)]
pub struct WeightedTree {
    pub alpha: f64,
    pub depth: usize,
    pub cutoff: f64,
    /// Parent of each vertex; the root stores `usize::MAX`.
    pub parent: Vec<usize>,
    /// Signed weight of the edge to the parent (0 for the root).
    pub weight: Vec<f64>,
    pub level: Vec<u32>,
    /// Subtree resolvents `R_vv^{(parent)}` after [`tree_resolvent`].
    pub resolvent: Vec<Complex64>,
}

pub fn expected_branching(alpha: f64, omega: f64) -> f64 {
    omega.powf(-alpha)
}

/// Sample a depth-`L` truncated tree.
pub fn sample_tree(
    alpha: f64,
    depth: usize,
    omega: f64,
    budget: usize,
    seed: u64,
) -> Result<WeightedTree, TreeError> {
    if !(alpha > 0.0 && alpha < 1.0 && omega > 0.0 && depth >= 1) {
        return Err(TreeError::InvalidArguments(format!(
            "alpha={alpha}, omega={omega}, depth={depth}"
        )));
    }
    let branching = expected_branching(alpha, omega);
    let expected = branching.powi(depth as i32);
    if expected > budget as f64 {
        return Err(TreeError::BudgetExceeded {
            expected,
            budget,
        });
    }
    let mut rng = Rng::stream(seed, &[0x7ee]);
    let mut parent = vec![usize::MAX];
    let mut weight = vec![0.0f64];
    let mut level = vec![0u32];
    let mut frontier_start = 0usize;
    for l in 0..depth {
        let frontier_end = parent.len();
        for v in frontier_start..frontier_end {
            if level[v] as usize != l {
                continue;
            }
            let n_children = rng.poisson(branching);
            let mut ws: Vec<f64> = (0..n_children)
                .map(|_| {
                    // P(|T| > t | |T| >= omega) = (t/omega)^{-alpha}
                    let mag = omega * rng.uniform_open0().powf(-1.0 / alpha);
                    mag * rng.sign()
                })
                .collect();
            // Heaviest edges first, matching the ordered point process.
            ws.sort_by(|a, b| b.abs().partial_cmp(&a.abs()).unwrap());
            for w in ws {
                parent.push(v);
                weight.push(w);
                level.push(l as u32 + 1);
                if parent.len() > budget * 8 {
                    return Err(TreeError::BudgetExceeded {
                        expected: parent.len() as f64,
                        budget,
                    });
                }
            }
        }
        frontier_start = frontier_end;
    }
    let n = parent.len();
    Ok(WeightedTree {
        alpha,
        depth,
        cutoff: omega,
        parent,
        weight,
        level,
        resolvent: vec![Complex64::new(0.0, 0.0); n],
    })
}

/// Fill subtree resolvents leaves-to-root.
pub fn tree_resolvent(
    tree: &mut WeightedTree,
    z: Complex64,
    boundary: Boundary<'_>,
    seed: u64,
) -> Result<(), TreeError> {
    let n = tree.parent.len();
    let mut rng = Rng::stream(seed, &[0xb0d]);
    // BFS order means children always come after parents; walk backwards.
    let mut acc: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); n];
    for v in (0..n).rev() {
        let r = if tree.level[v] as usize == tree.depth {
            match boundary {
                Boundary::Dirichlet => -z.inv(),
                Boundary::Stable(pool) => {
                    if pool.is_empty() {
                        return Err(TreeError::EmptyBoundaryPool);
                    }
                    pool[rng.index(pool.len())]
                }
            }
        } else {
            -(z + acc[v]).inv()
        };
        tree.resolvent[v] = r;
        if v > 0 {
            let p = tree.parent[v];
            let t = tree.weight[v];
            acc[p] += r * (t * t);
        }
    }
    Ok(())
}

/// `sum_{v in V(L)} |R_0v|^s` via the product expansion (log domain).
pub fn phi_sum(tree: &WeightedTree, s: f64) -> f64 {
    let n = tree.parent.len();
    let mut log_prod = vec![0.0f64; n];
    log_prod[0] = tree.resolvent[0].norm().ln();
    let mut total = 0.0;
    for v in 1..n {
        let p = tree.parent[v];
        log_prod[v] =
            log_prod[p] + tree.weight[v].abs().ln() + tree.resolvent[v].norm().ln();
        if tree.level[v] as usize == tree.depth {
            total += (s * log_prod[v]).exp();
        }
    }
    total
}

/// `|R_0v|` for every vertex, by the same product expansion.
pub fn off_diagonal_moduli(tree: &WeightedTree) -> Vec<f64> {
    let n = tree.parent.len();
    let mut out = vec![0.0f64; n];
    out[0] = tree.resolvent[0].norm();
    for v in 1..n {
        let p = tree.parent[v];
        out[v] = out[p] * tree.weight[v].abs() * tree.resolvent[v].norm();
    }
    out
}

/// Batch estimate of `Phi_L(s; z)` and the rate `phi_L = log(Phi_L)/L`.
#[derive(Debug, Clone, Copy)]
pub struct MomentEstimate {
    pub s: f64,
    pub z: Complex64,
    pub depth: usize,
    pub phi: f64,
    pub rate: f64,
    pub std_err: f64,
    pub omega: f64,
    pub n_trees: usize,
}

#[allow(clippy::too_many_arguments)]
pub fn phi_batch(
    alpha: f64,
    s: f64,
    z: Complex64,
    depth: usize,
    omega: f64,
    budget: usize,
    n_trees: usize,
    boundary: Boundary<'_>,
    seed: u64,
) -> Result<MomentEstimate, TreeError> {
    if !(s > alpha && s < 1.0) {
        return Err(TreeError::InvalidArguments(format!(
            "need alpha < s < 1, got s={s}, alpha={alpha}"
        )));
    }
    let pool: Option<&[Complex64]> = match boundary {
        Boundary::Dirichlet => None,
        Boundary::Stable(p) => {
            if p.is_empty() {
                return Err(TreeError::EmptyBoundaryPool);
            }
            Some(p)
        }
    };
    let sums: Result<Vec<f64>, TreeError> = (0..n_trees)
        .into_par_iter()
        .map(|i| {
            let mut tree = sample_tree(alpha, depth, omega, budget, seed ^ ((i as u64) << 20))?;
            let b = match pool {
                None => Boundary::Dirichlet,
                Some(p) => Boundary::Stable(p),
            };
            tree_resolvent(&mut tree, z, b, seed ^ 0xfeed ^ ((i as u64) << 21))?;
            Ok(phi_sum(&tree, s))
        })
        .collect();
    let sums = sums?;
    let n = sums.len() as f64;
    let phi = sums.iter().sum::<f64>() / n;
    let var = sums.iter().map(|x| (x - phi) * (x - phi)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(MomentEstimate {
        s,
        z,
        depth,
        phi,
        rate: phi.ln() / depth as f64,
        std_err: (var / n).sqrt(),
        omega,
        n_trees,
    })
}

/// Dense resolvent of the truncated tree seen as a finite symmetric matrix.
pub fn dense_resolvent(tree: &WeightedTree, z: Complex64) -> Result<Vec<Complex64>, TreeError> {
    let n = tree.parent.len();
    if n > 3000 {
        return Err(TreeError::TooLargeForDense { vertices: n });
    }
    // Assemble T - z and invert by Gauss-Jordan with partial pivoting.
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for v in 1..n {
        let p = tree.parent[v];
        m[v * n + p] = Complex64::new(tree.weight[v], 0.0);
        m[p * n + v] = Complex64::new(tree.weight[v], 0.0);
    }
    for d in 0..n {
        m[d * n + d] -= z;
    }
    invert_complex_in_place(&mut m, n);
    Ok(m)
}

pub(crate) fn invert_complex_in_place(m: &mut [Complex64], n: usize) {
    let mut inv = vec![Complex64::new(0.0, 0.0); n * n];
    for d in 0..n {
        inv[d * n + d] = Complex64::new(1.0, 0.0);
    }
    for col in 0..n {
        // partial pivot
        let mut piv = col;
        let mut best = m[col * n + col].norm();
        for r in col + 1..n {
            let v = m[r * n + col].norm();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if piv != col {
            for k in 0..n {
                m.swap(col * n + k, piv * n + k);
                inv.swap(col * n + k, piv * n + k);
            }
        }
        let d = m[col * n + col];
        let dinv = d.inv();
        for k in 0..n {
            m[col * n + k] *= dinv;
            inv[col * n + k] *= dinv;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = m[r * n + col];
            if factor.norm() == 0.0 {
                continue;
            }
            for k in 0..n {
                let mv = m[col * n + k];
                let iv = inv[col * n + k];
                m[r * n + k] -= factor * mv;
                inv[r * n + k] -= factor * iv;
            }
        }
    }
    m.copy_from_slice(&inv);
}

/// `max_v | eta sum_w |R_vw|^2 - Im R_vv |` over the dense resolvent of the
/// truncated tree; an exact identity up to roundoff.
pub fn ward_residual(tree: &WeightedTree, z: Complex64) -> Result<f64, TreeError> {
    let n = tree.parent.len();
    let r = dense_resolvent(tree, z)?;
    let eta = z.im;
    let mut worst = 0.0f64;
    for v in 0..n {
        let sum: f64 = (0..n).map(|w| r[v * n + w].norm_sqr()).sum();
        let lhs = eta * sum;
        let rhs = r[v * n + v].im;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn offspring_statistics() {
        let alpha = 0.5;
        let omega = 0.04; // branching = 5
        let branching = expected_branching(alpha, omega);
        let mut counts = Vec::new();
        let mut signs = 0i64;
        let mut mags: Vec<f64> = Vec::new();
        for seed in 0..200u64 {
            let tree = sample_tree(alpha, 3, omega, 10_000_000, seed).unwrap();
            // offspring of non-leaf vertices
            let n = tree.parent.len();
            let mut c = vec![0usize; n];
            for v in 1..n {
                c[tree.parent[v]] += 1;
            }
            for v in 0..n {
                if (tree.level[v] as usize) < tree.depth {
                    counts.push(c[v] as f64);
                }
                if v > 0 {
                    signs += tree.weight[v].signum() as i64;
                    mags.push(tree.weight[v].abs());
                }
            }
        }
        let n = counts.len() as f64;
        let mean = counts.iter().sum::<f64>() / n;
        let se = (branching / n).sqrt(); // Poisson variance = mean
        assert!(
            (mean - branching).abs() < 3.0 * se,
            "offspring mean {mean} vs {branching} (se {se})"
        );
        // Signs balanced.
        let sign_se = (mags.len() as f64).sqrt();
        assert!((signs as f64).abs() < 4.0 * sign_se, "sign sum {signs}");
        // Weight magnitudes: P(|T| > t) = (t/omega)^{-alpha}.
        mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = crate::stable::ks_statistic(&mags, |t| {
            if t < omega {
                0.0
            } else {
                1.0 - (t / omega).powf(-alpha)
            }
        });
        assert!(ks < 2.0 / (mags.len() as f64).sqrt() + 0.01, "ks = {ks}");
    }

    #[test]
    fn budget_guard() {
        assert!(matches!(
            sample_tree(0.5, 12, 0.01, 1000, 1),
            Err(TreeError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn resolvent_invariants_and_trivial_cases() {
        let z = Complex64::new(0.7, 0.2);
        let mut tree = sample_tree(0.5, 4, 0.05, 1_000_000, 3).unwrap();
        tree_resolvent(&mut tree, z, Boundary::Dirichlet, 5).unwrap();
        let bound = 1.0 / z.im + 1e-12;
        for r in &tree.resolvent {
            assert!(r.im >= -1e-15 && r.norm() <= bound, "bad resolvent {r}");
        }
        // A depth-1 tree with no children at the root behaves as 1x1:
        // force it by an omega so large that branching ~ 0.
        let mut lone = sample_tree(0.5, 1, 1e12, 10, 7).unwrap();
        if lone.parent.len() == 1 {
            tree_resolvent(&mut lone, z, Boundary::Dirichlet, 9).unwrap();
            assert!((lone.resolvent[0] + z.inv()).norm() < 1e-15);
        }
    }

    #[test]
    fn product_formula_matches_dense_inverse() {
        let z = Complex64::new(0.5, 0.1);
        let mut tree = sample_tree(0.5, 3, 0.15, 100_000, 11).unwrap();
        tree_resolvent(&mut tree, z, Boundary::Dirichlet, 13).unwrap();
        let n = tree.parent.len();
        // Dirichlet truncation means the finite matrix excludes everything
        // below the leaves, matching exactly when leaves have no virtual
        // children: rebuild subtree resolvents against the finite matrix by
        // comparing against its literal inverse restricted to row 0.
        let dense = dense_resolvent(&tree, z).unwrap();
        // For the finite tree the Dirichlet condition is R_leaf = -1/z, which
        // is the exact one-dimensional Schur complement, so the recursion is
        // exact for the truncated matrix.
        let moduli = off_diagonal_moduli(&tree);
        for v in 0..n {
            let exact = dense[v].norm();
            assert!(
                (moduli[v] - exact).abs() < 1e-10 * exact.max(1e-10),
                "v={v}: product {} vs dense {}",
                moduli[v],
                exact
            );
        }
    }

    #[test]
    fn rsum_lower_bound() {
        let z = Complex64::new(1.0, 0.05);
        for seed in 0..10u64 {
            let mut tree = sample_tree(0.5, 4, 0.08, 1_000_000, 100 + seed).unwrap();
            tree_resolvent(&mut tree, z, Boundary::Dirichlet, 17 + seed).unwrap();
            let moduli = off_diagonal_moduli(&tree);
            // Im R_00 >= sum_{v in V(k)} |R_0v|^2 sum_{u child of v} T^2 Im R_uu^{(v)}
            let k = 2usize;
            let n = tree.parent.len();
            let mut rhs = 0.0;
            for v in 0..n {
                if tree.level[v] as usize != k {
                    continue;
                }
                let mut inner = 0.0;
                for u in 0..n {
                    if u > 0 && tree.parent[u] == v {
                        inner += tree.weight[u] * tree.weight[u] * tree.resolvent[u].im;
                    }
                }
                rhs += moduli[v] * moduli[v] * inner;
            }
            let lhs = tree.resolvent[0].im;
            assert!(lhs >= rhs - 1e-12, "seed={seed}: {lhs} < {rhs}");
        }
    }

    #[test]
    fn ward_identity_exact() {
        // Any truncated tree, several z values: residual at roundoff level.
        for seed in 0..5u64 {
            let mut tree = sample_tree(0.5, 3, 0.3, 10_000, 31 + seed).unwrap();
            let z = Complex64::new(-1.0 + seed as f64, 0.1);
            tree_resolvent(&mut tree, z, Boundary::Dirichlet, 1).unwrap();
            let res = ward_residual(&tree, z).unwrap();
            assert!(res < 1e-10, "seed {seed}: residual {res}");
        }
        // Depth-1 star with eta = 0.1.
        let mut star = sample_tree(0.5, 1, 0.2, 10_000, 222).unwrap();
        let z = Complex64::new(0.3, 0.1);
        tree_resolvent(&mut star, z, Boundary::Dirichlet, 2).unwrap();
        assert!(ward_residual(&star, z).unwrap() < 1e-12);
    }

    #[test]
    fn phi_batch_basics() {
        let z = Complex64::new(1.0, 0.05);
        let est = phi_batch(
            0.5,
            0.75,
            z,
            4,
            0.1,
            1_000_000,
            200,
            Boundary::Dirichlet,
            77,
        )
        .unwrap();
        assert!(est.phi > 0.0 && est.phi.is_finite());
        assert!(est.std_err > 0.0);
        assert!(est.rate.is_finite());
        // s outside (alpha, 1) is rejected
        assert!(phi_batch(0.5, 0.4, z, 3, 0.1, 1_000_000, 10, Boundary::Dirichlet, 1).is_err());
    }

    #[test]
    fn approximate_multiplicativity() {
        // |log Phi_{l+m} - log Phi_{l-1} - log Phi_{m-1}| bounded uniformly
        // over (l, m) in {2..5}^2 at fixed (s, z).
        let alpha = 0.5;
        let s = 0.75;
        let z = Complex64::new(1.0, 0.01);
        let omega = 0.16;
        let mut log_phi = std::collections::HashMap::new();
        for depth in 1..=10usize {
            let est = phi_batch(
                alpha,
                s,
                z,
                depth,
                omega,
                3_000_000,
                400,
                Boundary::Dirichlet,
                1000 + depth as u64,
            )
            .unwrap();
            log_phi.insert(depth, est.phi.ln());
        }
        for l in 2..=5usize {
            for m in 2..=5usize {
                let gap = (log_phi[&(l + m)] - log_phi[&(l - 1)] - log_phi[&(m - 1)]).abs();
                assert!(gap < 4.0, "(l,m)=({l},{m}): |log C| = {gap}");
            }
        }
    }

    #[test]
    fn tree_root_law_matches_population() {
        // Depth-8 trees with stable boundary vs the rde pool law. The tree
        // truncates edge weights at |T| >= omega, which is the xi = T^2
        // process truncated at omega^2, so the pool must use that cutoff.
        let alpha = 0.5;
        let z = Complex64::new(1.0, 0.01);
        let omega = 0.13f64; // branching ~ 2.8
        let mut pop =
            crate::rde::ResolventPopulation::new(z, alpha, 30_000, omega * omega).unwrap();
        for g in 0..50 {
            pop.update(91 + g, 1_000_000).unwrap();
        }
        let n_trees = 10_000usize;
        let roots: Vec<f64> = (0..n_trees)
            .into_par_iter()
            .map(|i| {
                let mut tree =
                    sample_tree(alpha, 8, omega, 1_000_000, 5000 + i as u64).unwrap();
                tree_resolvent(
                    &mut tree,
                    z,
                    Boundary::Stable(&pop.pool),
                    9000 + i as u64,
                )
                .unwrap();
                tree.resolvent[0].im
            })
            .collect();
        let mut roots = roots;
        roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut pool_im: Vec<f64> = pop.pool.iter().map(|r| r.im).collect();
        pool_im.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let ks = crate::stable::two_sample_ks(&roots, &pool_im);
        assert!(ks < 0.05, "ks = {ks}");
    }


}
