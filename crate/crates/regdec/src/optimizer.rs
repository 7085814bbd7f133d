//! Greedy search over block assignments: the per-node reassignment map,
//! its multi-restart wrapper for fixed model order, model-order selection
//! by two-part code length, and the bipartite matrix variants.
//!
//! All updates are synchronous (every node scored against the old
//! assignment) so a single sweep is a pair of matrix products. Iteration
//! may in principle oscillate; a capped or 2-cycling run is scored at its
//! best-seen state and flagged `converged = false`. A sweep that empties
//! a block abandons that restart.

use crate::blockmodels::{derive_seed, Graph, Partition, WeightMatrix};
use crate::codelength::{self, TwoPartScore, DEFAULT_PRECISION_COST};
use crate::Error;
use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Iteration cap for one restart of the reassignment loop.
pub const DEFAULT_MAX_ITERS: usize = 200;

/// Outcome of a fixed-order graph fit.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphFitResult {
    pub partition: Partition,
    pub k: usize,
    /// The restart-selection score: sum over nodes of the per-node score
    /// row minimum at the returned assignment.
    pub score: f64,
    /// The full two-part code length of the returned assignment.
    pub two_part: TwoPartScore,
    pub restart_index: usize,
    pub restarts: usize,
    pub failed_restarts: usize,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Outcome of a fixed-order or searched bipartite matrix fit.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixFitResult {
    pub rows: Partition,
    pub cols: Partition,
    pub k1: usize,
    pub k2: usize,
    /// The restart-selection score `sum e (1 - ln(e/N))`.
    pub score: f64,
    /// The full matrix objective of the returned pair of assignments.
    pub objective: f64,
    pub restart_index: usize,
    pub restarts: usize,
    pub failed_restarts: usize,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
    /// Model orders evaluated by a search; empty for a fixed-order fit.
    pub visited: Vec<(usize, usize)>,
}

/// `(k1, k2)` scan order used by [`matrix_mdl_search`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStrategy {
    /// Scan the diagonal, then the radius-1 neighborhood of its minimizer.
    DiagonalThenLocal,
    /// Every pair within the bounds.
    FullGrid,
    /// Coordinate descent: optimize k1 with k2 fixed and vice versa until
    /// neither moves.
    Alternating,
}

fn membership_matrix(labels: &[usize], k: usize) -> Array2<f64> {
    let mut r = Array2::<f64>::zeros((labels.len(), k));
    for (i, &l) in labels.iter().enumerate() {
        r[[i, l]] = 1.0;
    }
    r
}

fn has_empty_block(labels: &[usize], k: usize) -> bool {
    let mut seen = vec![false; k];
    for &l in labels {
        seen[l] = true;
    }
    seen.iter().any(|&s| !s)
}

/// ln with the 0-maps-to-0 convention used throughout the score matrices
/// (every such value is later multiplied by 0).
fn ln0(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x.ln()
    }
}

/// Block density matrix P(R) of a graph under an assignment: within-block
/// densities over unordered pairs on the diagonal, cross densities off it.
fn p_matrix(a: &Array2<f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let r = membership_matrix(labels, k);
    let counts = r.t().dot(a).dot(&r); // ordered pair counts
    let mut sizes = vec![0.0f64; k];
    for &l in labels {
        sizes[l] += 1.0;
    }
    let mut p = Array2::<f64>::zeros((k, k));
    for alpha in 0..k {
        for beta in 0..k {
            if alpha == beta {
                let pairs = sizes[alpha] * (sizes[alpha] - 1.0) / 2.0;
                p[[alpha, alpha]] = if pairs > 0.0 {
                    counts[[alpha, alpha]] / 2.0 / pairs
                } else {
                    0.0
                };
            } else {
                p[[alpha, beta]] = counts[[alpha, beta]] / (sizes[alpha] * sizes[beta]);
            }
        }
    }
    p
}

/// Per-node score matrix `L(R) = -A R (ln P)^T - (1 - A) R ln(1 - P)`.
fn score_matrix(a: &Array2<f64>, one_minus_a: &Array2<f64>, labels: &[usize], k: usize) -> Array2<f64> {
    let p = p_matrix(a, labels, k);
    let logp = p.mapv(ln0);
    let log1mp = p.mapv(|v| ln0(1.0 - v));
    let r = membership_matrix(labels, k);
    -a.dot(&r.dot(&logp.t())) - one_minus_a.dot(&r.dot(&log1mp))
}

fn argmin_rows(l: &Array2<f64>) -> (Vec<usize>, f64) {
    let mut labels = Vec::with_capacity(l.nrows());
    let mut total = 0.0;
    for row in l.rows() {
        let mut best = 0;
        let mut best_v = row[0];
        for (j, &v) in row.iter().enumerate().skip(1) {
            if v < best_v {
                best = j;
                best_v = v;
            }
        }
        labels.push(best);
        total += best_v;
    }
    (labels, total)
}

/// One synchronous reassignment sweep: every node moves to the block that
/// minimizes its score row, all scored against the old assignment. The
/// result may have empty blocks; the caller decides what to do then.
pub fn phi_update(g: &Graph, labels: &[usize], k: usize) -> Vec<usize> {
    let a = g.adjacency_f64();
    let one_minus_a = 1.0 - &a;
    let l = score_matrix(&a, &one_minus_a, labels, k);
    argmin_rows(&l).0
}

/// Restart-selection score of an arbitrary assignment: the sum over
/// nodes of the row minima of the per-node score matrix.
pub fn assignment_score(g: &Graph, partition: &Partition) -> f64 {
    let a = g.adjacency_f64();
    let one_minus_a = 1.0 - &a;
    let l = score_matrix(&a, &one_minus_a, partition.labels(), partition.k());
    argmin_rows(&l).1
}

struct RestartOutcome {
    labels: Vec<usize>,
    score: f64,
    iterations: usize,
    converged: bool,
}

fn run_restart(
    a: &Array2<f64>,
    one_minus_a: &Array2<f64>,
    k: usize,
    rng: &mut ChaCha8Rng,
    max_iters: usize,
) -> Option<RestartOutcome> {
    let n = a.nrows();
    let mut cur: Vec<usize> = loop {
        let draw: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();
        if !has_empty_block(&draw, k) {
            break draw;
        }
    };
    let mut prev: Option<Vec<usize>> = None;
    let mut best: Option<(f64, Vec<usize>)> = None;
    for iter in 0..max_iters {
        let l = score_matrix(a, one_minus_a, &cur, k);
        let (next, cur_score) = argmin_rows(&l);
        if best.as_ref().is_none_or(|(s, _)| cur_score < *s) {
            best = Some((cur_score, cur.clone()));
        }
        if next == cur {
            return Some(RestartOutcome {
                labels: cur,
                score: cur_score,
                iterations: iter,
                converged: true,
            });
        }
        if has_empty_block(&next, k) {
            return None;
        }
        if prev.as_ref() == Some(&next) {
            // 2-cycle: stop and keep the best state seen so far
            let (score, labels) = best.expect("at least one state scored");
            return Some(RestartOutcome {
                labels,
                score,
                iterations: iter + 1,
                converged: false,
            });
        }
        prev = Some(std::mem::replace(&mut cur, next));
    }
    let (score, labels) = best.expect("at least one state scored");
    Some(RestartOutcome {
        labels,
        score,
        iterations: max_iters,
        converged: false,
    })
}

/// Multi-restart greedy fit at fixed block count `k`: `restarts`
/// independent random starts, each iterated to a fixed point (or cap),
/// scored by the row-minima sum, smallest restart index winning ties.
pub fn argmax_k(
    g: &Graph,
    k: usize,
    restarts: usize,
    seed: u64,
    max_iters: usize,
) -> Result<GraphFitResult, Error> {
    let n = g.n();
    if k < 1 || k > n {
        return Err(Error::domain(format!("need 1 <= k <= n = {n}, got k = {k}")));
    }
    if restarts < 1 {
        return Err(Error::domain("need at least one restart"));
    }
    let a = g.adjacency_f64();
    let one_minus_a = 1.0 - &a;
    let mut best: Option<(RestartOutcome, usize)> = None;
    let mut failed = 0;
    for m in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, m as u64));
        match run_restart(&a, &one_minus_a, k, &mut rng, max_iters) {
            Some(out) => {
                if best.as_ref().is_none_or(|(b, _)| out.score < b.score) {
                    best = Some((out, m));
                }
            }
            None => failed += 1,
        }
    }
    let (out, restart_index) =
        best.ok_or_else(|| Error::Search(format!("all {restarts} restarts at k = {k} abandoned")))?;
    let partition = Partition::new(out.labels, k)?;
    let two_part = codelength::two_part_objective(g, &partition)?;
    Ok(GraphFitResult {
        partition,
        k,
        score: out.score,
        two_part,
        restart_index,
        restarts,
        failed_restarts: failed,
        iterations: out.iterations,
        converged: out.converged,
        seed,
    })
}

/// Model-order selection: fit every `k` in `k_lo..=k_hi` and keep the one
/// with the smallest two-part code length (ceiled likelihood plus model
/// cost). With `first_local_minimum` the scan stops as soon as the score
/// rises, returning the minimum found up to that point.
pub fn greedy_two_part_mdl(
    g: &Graph,
    k_lo: usize,
    k_hi: usize,
    restarts: usize,
    seed: u64,
    max_iters: usize,
    first_local_minimum: bool,
) -> Result<GraphFitResult, Error> {
    let n = g.n();
    if k_lo < 1 || k_hi > n || k_lo > k_hi {
        return Err(Error::domain(format!(
            "need 1 <= k_lo <= k_hi <= n = {n}, got {k_lo}..={k_hi}"
        )));
    }
    let mut best: Option<(f64, GraphFitResult)> = None;
    let mut prev_score = f64::INFINITY;
    for k in k_lo..=k_hi {
        // an order whose every restart collapsed a block simply isn't a
        // candidate; skip it rather than aborting the scan
        let fit = match argmax_k(g, k, restarts, derive_seed(seed, k as u64), max_iters) {
            Ok(fit) => fit,
            Err(Error::Search(_)) => continue,
            Err(e) => return Err(e),
        };
        let score = fit.two_part.selection_score();
        if best.as_ref().is_none_or(|(s, _)| score < *s) {
            best = Some((score, fit));
        }
        if first_local_minimum && score > prev_score {
            break;
        }
        prev_score = score;
    }
    best.map(|(_, fit)| fit)
        .ok_or_else(|| Error::Search(format!("no order in {k_lo}..={k_hi} produced a valid fit")))
}

/// Block-mean matrix `P` of a rectangular matrix under row/column
/// assignments, plus the block sizes.
fn bipartite_p(
    a: &Array2<f64>,
    rows: &[usize],
    k1: usize,
    cols: &[usize],
    k2: usize,
) -> (Array2<f64>, Vec<f64>, Vec<f64>) {
    let r = membership_matrix(rows, k1);
    let c = membership_matrix(cols, k2);
    let mut p = r.t().dot(a).dot(&c);
    let mut n_sizes = vec![0.0f64; k1];
    for &l in rows {
        n_sizes[l] += 1.0;
    }
    let mut m_sizes = vec![0.0f64; k2];
    for &l in cols {
        m_sizes[l] += 1.0;
    }
    for ((alpha, beta), v) in p.indexed_iter_mut() {
        *v /= n_sizes[alpha] * m_sizes[beta];
    }
    (p, n_sizes, m_sizes)
}

/// One synchronous bipartite sweep: rows scored by
/// `L = E C P^T - A C (ln P)^T`, columns by `M = E^T R P - A^T R ln P`,
/// both against the old pair.
pub fn phi_update_matrix(
    a: &WeightMatrix,
    rows: &[usize],
    k1: usize,
    cols: &[usize],
    k2: usize,
) -> (Vec<usize>, Vec<usize>) {
    let data = a.entries();
    let (l, m) = bipartite_score_matrices(data, rows, k1, cols, k2);
    (argmin_rows(&l).0, argmin_rows(&m).0)
}

fn bipartite_score_matrices(
    a: &Array2<f64>,
    rows: &[usize],
    k1: usize,
    cols: &[usize],
    k2: usize,
) -> (Array2<f64>, Array2<f64>) {
    let (p, n_sizes, m_sizes) = bipartite_p(a, rows, k1, cols, k2);
    let logp = p.mapv(ln0);
    let c = membership_matrix(cols, k2);
    let r = membership_matrix(rows, k1);
    // (E C)_[i, beta] = m_beta for every i, so E C P^T has constant rows
    let row_const: Array1<f64> = {
        let mut t = Array1::<f64>::zeros(k1);
        for alpha in 0..k1 {
            for beta in 0..k2 {
                t[alpha] += m_sizes[beta] * p[[alpha, beta]];
            }
        }
        t
    };
    let mut l = -a.dot(&c.dot(&logp.t()));
    for mut row in l.rows_mut() {
        row += &row_const;
    }
    let col_const: Array1<f64> = {
        let mut t = Array1::<f64>::zeros(k2);
        for beta in 0..k2 {
            for alpha in 0..k1 {
                t[beta] += n_sizes[alpha] * p[[alpha, beta]];
            }
        }
        t
    };
    let mut m = -a.t().dot(&r.dot(&logp));
    for mut row in m.rows_mut() {
        row += &col_const;
    }
    (l, m)
}

/// Restart-selection score for a bipartite assignment:
/// `sum_{ab} e_ab (1 - ln(e_ab / N_ab))`, empty blocks contributing 0.
fn bipartite_score(a: &Array2<f64>, rows: &[usize], k1: usize, cols: &[usize], k2: usize) -> f64 {
    let r = membership_matrix(rows, k1);
    let c = membership_matrix(cols, k2);
    let e = r.t().dot(a).dot(&c);
    let mut n_sizes = vec![0.0f64; k1];
    for &l in rows {
        n_sizes[l] += 1.0;
    }
    let mut m_sizes = vec![0.0f64; k2];
    for &l in cols {
        m_sizes[l] += 1.0;
    }
    let mut total = 0.0;
    for ((alpha, beta), &v) in e.indexed_iter() {
        if v > 0.0 {
            total += v * (1.0 - (v / (n_sizes[alpha] * m_sizes[beta])).ln());
        }
    }
    total
}

struct BipartiteOutcome {
    rows: Vec<usize>,
    cols: Vec<usize>,
    score: f64,
    iterations: usize,
    converged: bool,
}

fn run_bipartite_restart(
    a: &Array2<f64>,
    k1: usize,
    k2: usize,
    rng: &mut ChaCha8Rng,
    max_iters: usize,
) -> Option<BipartiteOutcome> {
    let (n, m) = (a.nrows(), a.ncols());
    let (mut rows, mut cols) = loop {
        let r: Vec<usize> = (0..n).map(|_| rng.random_range(0..k1)).collect();
        let c: Vec<usize> = (0..m).map(|_| rng.random_range(0..k2)).collect();
        if !has_empty_block(&r, k1) && !has_empty_block(&c, k2) {
            break (r, c);
        }
    };
    let mut prev: Option<(Vec<usize>, Vec<usize>)> = None;
    let mut best: Option<(f64, Vec<usize>, Vec<usize>)> = None;
    for iter in 0..max_iters {
        let (l, mm) = bipartite_score_matrices(a, &rows, k1, &cols, k2);
        let (next_rows, _) = argmin_rows(&l);
        let (next_cols, _) = argmin_rows(&mm);
        let cur_score = bipartite_score(a, &rows, k1, &cols, k2);
        if best.as_ref().is_none_or(|(s, _, _)| cur_score < *s) {
            best = Some((cur_score, rows.clone(), cols.clone()));
        }
        if next_rows == rows && next_cols == cols {
            return Some(BipartiteOutcome {
                rows,
                cols,
                score: cur_score,
                iterations: iter,
                converged: true,
            });
        }
        if has_empty_block(&next_rows, k1) || has_empty_block(&next_cols, k2) {
            return None;
        }
        if prev.as_ref() == Some(&(next_rows.clone(), next_cols.clone())) {
            let (score, rows, cols) = best.expect("at least one state scored");
            return Some(BipartiteOutcome {
                rows,
                cols,
                score,
                iterations: iter + 1,
                converged: false,
            });
        }
        prev = Some((std::mem::replace(&mut rows, next_rows), std::mem::replace(&mut cols, next_cols)));
    }
    let (score, rows, cols) = best.expect("at least one state scored");
    Some(BipartiteOutcome {
        rows,
        cols,
        score,
        iterations: max_iters,
        converged: false,
    })
}

/// Multi-restart greedy bipartite fit at fixed `(k1, k2)`.
pub fn argmax_k1k2(
    a: &WeightMatrix,
    k1: usize,
    k2: usize,
    restarts: usize,
    seed: u64,
    max_iters: usize,
) -> Result<MatrixFitResult, Error> {
    let (n, m) = (a.nrows(), a.ncols());
    if k1 < 1 || k1 > n {
        return Err(Error::domain(format!("need 1 <= k1 <= {n}, got {k1}")));
    }
    if k2 < 1 || k2 > m {
        return Err(Error::domain(format!("need 1 <= k2 <= {m}, got {k2}")));
    }
    if restarts < 1 {
        return Err(Error::domain("need at least one restart"));
    }
    let data = a.entries();
    let mut best: Option<(BipartiteOutcome, usize)> = None;
    let mut failed = 0;
    for r in 0..restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        match run_bipartite_restart(data, k1, k2, &mut rng, max_iters) {
            Some(out) => {
                if best.as_ref().is_none_or(|(b, _)| out.score < b.score) {
                    best = Some((out, r));
                }
            }
            None => failed += 1,
        }
    }
    let (out, restart_index) = best.ok_or_else(|| {
        Error::Search(format!("all {restarts} restarts at (k1, k2) = ({k1}, {k2}) abandoned"))
    })?;
    let rows = Partition::new(out.rows, k1)?;
    let cols = Partition::new(out.cols, k2)?;
    let objective = codelength::matrix_objective(a, &rows, &cols, DEFAULT_PRECISION_COST)?;
    Ok(MatrixFitResult {
        rows,
        cols,
        k1,
        k2,
        score: out.score,
        objective,
        restart_index,
        restarts,
        failed_restarts: failed,
        iterations: out.iterations,
        converged: out.converged,
        seed,
        visited: Vec::new(),
    })
}

/// Search over model orders `(k1, k2)` up to the given bounds, fitting
/// each visited pair with [`argmax_k1k2`] and scoring it by the full
/// matrix objective. Returns the best fit over the visited set, which is
/// recorded in the result. A pair whose every restart was abandoned is
/// skipped.
pub fn matrix_mdl_search(
    a: &WeightMatrix,
    k1_max: usize,
    k2_max: usize,
    strategy: SearchStrategy,
    restarts: usize,
    seed: u64,
    max_iters: usize,
) -> Result<MatrixFitResult, Error> {
    let k1_max = k1_max.min(a.nrows()).max(1);
    let k2_max = k2_max.min(a.ncols()).max(1);
    let mut visited: Vec<(usize, usize)> = Vec::new();
    let mut cache: Vec<((usize, usize), MatrixFitResult)> = Vec::new();

    let eval = |k1: usize, k2: usize,
                    visited: &mut Vec<(usize, usize)>,
                    cache: &mut Vec<((usize, usize), MatrixFitResult)>|
     -> Option<f64> {
        if let Some((_, fit)) = cache.iter().find(|(key, _)| *key == (k1, k2)) {
            return Some(fit.objective);
        }
        visited.push((k1, k2));
        let pair_seed = derive_seed(seed, ((k1 as u64) << 32) | k2 as u64);
        match argmax_k1k2(a, k1, k2, restarts, pair_seed, max_iters) {
            Ok(fit) => {
                let obj = fit.objective;
                cache.push(((k1, k2), fit));
                Some(obj)
            }
            Err(Error::Search(_)) => None,
            Err(_) => None,
        }
    };

    match strategy {
        SearchStrategy::FullGrid => {
            for k1 in 1..=k1_max {
                for k2 in 1..=k2_max {
                    eval(k1, k2, &mut visited, &mut cache);
                }
            }
        }
        SearchStrategy::DiagonalThenLocal => {
            let d_max = k1_max.min(k2_max);
            let mut best_d = 1;
            let mut best_obj = f64::INFINITY;
            for d in 1..=d_max {
                if let Some(obj) = eval(d, d, &mut visited, &mut cache) {
                    if obj < best_obj {
                        best_obj = obj;
                        best_d = d;
                    }
                }
            }
            for k1 in best_d.saturating_sub(1).max(1)..=(best_d + 1).min(k1_max) {
                for k2 in best_d.saturating_sub(1).max(1)..=(best_d + 1).min(k2_max) {
                    eval(k1, k2, &mut visited, &mut cache);
                }
            }
        }
        SearchStrategy::Alternating => {
            let (mut k1, mut k2) = (1usize, 1usize);
            eval(k1, k2, &mut visited, &mut cache);
            loop {
                let mut moved = false;
                let mut best = (f64::INFINITY, k1);
                for c in 1..=k1_max {
                    if let Some(obj) = eval(c, k2, &mut visited, &mut cache) {
                        if obj < best.0 {
                            best = (obj, c);
                        }
                    }
                }
                if best.1 != k1 {
                    k1 = best.1;
                    moved = true;
                }
                let mut best = (f64::INFINITY, k2);
                for c in 1..=k2_max {
                    if let Some(obj) = eval(k1, c, &mut visited, &mut cache) {
                        if obj < best.0 {
                            best = (obj, c);
                        }
                    }
                }
                if best.1 != k2 {
                    k2 = best.1;
                    moved = true;
                }
                if !moved {
                    break;
                }
            }
        }
    }

    let mut best: Option<MatrixFitResult> = None;
    for (_, fit) in cache {
        if best.as_ref().is_none_or(|b| fit.objective < b.objective) {
            best = Some(fit);
        }
    }
    let mut result =
        best.ok_or_else(|| Error::Search("every visited (k1, k2) pair was abandoned".into()))?;
    result.visited = visited;
    Ok(result)
}
