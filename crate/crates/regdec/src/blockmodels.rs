//! Partitions, block-model specifications and seeded generators.
//!
//! All generators are deterministic functions of `(spec, n, seed)`.
//! Edge sampling order is fixed as row-major over the strict upper
//! triangle so seeds are portable across implementations. The RNG is
//! ChaCha8 with a 64-bit seed; the choice is recorded by [`RNG_NAME`].

use crate::infotheory;
use crate::Error;
use ndarray::{Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

/// Generator identifier recorded in output reports for reproducibility.
pub const RNG_NAME: &str = "ChaCha8 (seed_from_u64)";

/// Derive an independent 64-bit stream seed from a master seed
/// (SplitMix64 over `seed ^ stream`).
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15);
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Block membership of `n` items in `k` non-empty blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Build a partition from per-item block labels in `0..k`.
    /// Every label must occur at least once.
    pub fn new(labels: Vec<usize>, k: usize) -> Result<Self, Error> {
        if k == 0 || labels.len() < k {
            return Err(Error::partition(format!(
                "need n >= k >= 1, got n={}, k={}",
                labels.len(),
                k
            )));
        }
        let mut seen = vec![false; k];
        for (i, &l) in labels.iter().enumerate() {
            if l >= k {
                return Err(Error::partition(format!("label {l} at item {i} exceeds k={k}")));
            }
            seen[l] = true;
        }
        if let Some(empty) = seen.iter().position(|&s| !s) {
            return Err(Error::partition(format!("block {empty} is empty")));
        }
        Ok(Partition { labels, k })
    }

    /// The one-block partition of `n` items.
    pub fn trivial(n: usize) -> Self {
        Partition {
            labels: vec![0; n],
            k: 1,
        }
    }

    /// Every item in its own block.
    pub fn discrete(n: usize) -> Self {
        Partition {
            labels: (0..n).collect(),
            k: n,
        }
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_of(&self, item: usize) -> usize {
        self.labels[item]
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    /// Items of each block, in ascending item order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.k];
        for (i, &l) in self.labels.iter().enumerate() {
            blocks[l].push(i);
        }
        blocks
    }

    /// Entropy `H(xi)` of the partition, in nats.
    pub fn entropy(&self) -> f64 {
        infotheory::partition_entropy(&self.block_sizes()).expect("non-empty blocks by invariant")
    }

    /// Copy with item `item` moved to block `target`. Errors if the move
    /// empties the source block.
    pub fn with_move(&self, item: usize, target: usize) -> Result<Self, Error> {
        if target >= self.k {
            return Err(Error::partition(format!("target block {target} out of range")));
        }
        let mut labels = self.labels.clone();
        labels[item] = target;
        Partition::new(labels, self.k)
    }

    /// Relabel blocks by order of first appearance, giving a canonical
    /// representative of the partition as a set of blocks.
    pub fn canonicalized(&self) -> Self {
        let mut map = vec![usize::MAX; self.k];
        let mut next = 0;
        let labels = self
            .labels
            .iter()
            .map(|&l| {
                if map[l] == usize::MAX {
                    map[l] = next;
                    next += 1;
                }
                map[l]
            })
            .collect();
        Partition { labels, k: self.k }
    }
}

/// Stochastic block model parameters: relative block sizes and a
/// symmetric density matrix with entries in [0,1].
#[derive(Debug, Clone)]
pub struct BlockModelSpec {
    gammas: Vec<f64>,
    densities: Array2<f64>,
}

/// Symmetric Poissonian block model parameters.
#[derive(Debug, Clone)]
pub struct PoissonBlockSpec {
    gammas: Vec<f64>,
    rates: Array2<f64>,
}

fn validate_gammas(gammas: &[f64]) -> Result<(), Error> {
    if gammas.is_empty() {
        return Err(Error::spec("empty gamma vector"));
    }
    if gammas.iter().any(|&g| g <= 0.0 || !g.is_finite()) {
        return Err(Error::spec("gammas must be positive and finite"));
    }
    let sum: f64 = gammas.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::spec(format!("gammas sum to {sum}, expected 1")));
    }
    Ok(())
}

fn validate_square_symmetric(m: &ArrayView2<f64>, k: usize, what: &str) -> Result<(), Error> {
    if m.nrows() != k || m.ncols() != k {
        return Err(Error::spec(format!(
            "{what} matrix is {}x{}, expected {k}x{k}",
            m.nrows(),
            m.ncols()
        )));
    }
    for i in 0..k {
        for j in 0..i {
            if m[[i, j]] != m[[j, i]] {
                return Err(Error::spec(format!("{what} matrix not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// True iff no two rows of the square symmetric matrix are equal.
pub fn check_irreducibility(matrix: &ArrayView2<f64>) -> bool {
    let k = matrix.nrows();
    for i in 0..k {
        for j in (i + 1)..k {
            if (0..k).all(|q| matrix[[i, q]] == matrix[[j, q]]) {
                return false;
            }
        }
    }
    true
}

impl BlockModelSpec {
    pub fn new(gammas: Vec<f64>, densities: Array2<f64>) -> Result<Self, Error> {
        validate_gammas(&gammas)?;
        validate_square_symmetric(&densities.view(), gammas.len(), "density")?;
        if densities.iter().any(|&d| !(0.0..=1.0).contains(&d)) {
            return Err(Error::spec("densities must lie in [0,1]"));
        }
        if !check_irreducibility(&densities.view()) {
            return Err(Error::spec("density matrix has two equal rows (reducible)"));
        }
        Ok(BlockModelSpec { gammas, densities })
    }

    pub fn k(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn densities(&self) -> &Array2<f64> {
        &self.densities
    }
}

impl PoissonBlockSpec {
    pub fn new(gammas: Vec<f64>, rates: Array2<f64>) -> Result<Self, Error> {
        validate_gammas(&gammas)?;
        validate_square_symmetric(&rates.view(), gammas.len(), "rate")?;
        if rates.iter().any(|&r| r < 0.0 || !r.is_finite()) {
            return Err(Error::spec("rates must be non-negative and finite"));
        }
        if !check_irreducibility(&rates.view()) {
            return Err(Error::spec("rate matrix has two equal rows (reducible)"));
        }
        Ok(PoissonBlockSpec { gammas, rates })
    }

    pub fn k(&self) -> usize {
        self.gammas.len()
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn rates(&self) -> &Array2<f64> {
        &self.rates
    }
}

/// Simple undirected graph as a symmetric 0/1 adjacency matrix with
/// zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Array2<u8>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: Array2::zeros((n, n)),
        }
    }

    /// Build from an undirected edge list; rejects self-loops, duplicate
    /// edges and out-of-range endpoints.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, Error> {
        let mut g = Graph::empty(n);
        for (idx, &(u, v)) in edges.iter().enumerate() {
            if u >= n || v >= n {
                return Err(Error::data(
                    format!("edge {idx}"),
                    format!("endpoint out of range in ({u}, {v}) with n={n}"),
                ));
            }
            if u == v {
                return Err(Error::data(format!("edge {idx}"), format!("self-loop at node {u}")));
            }
            if g.adj[[u, v]] != 0 {
                return Err(Error::data(
                    format!("edge {idx}"),
                    format!("duplicate edge ({u}, {v})"),
                ));
            }
            g.adj[[u, v]] = 1;
            g.adj[[v, u]] = 1;
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.adj.nrows()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[[u, v]] != 0
    }

    pub fn adjacency(&self) -> &Array2<u8> {
        &self.adj
    }

    /// Adjacency as f64, for matrix-product formulations.
    pub fn adjacency_f64(&self) -> Array2<f64> {
        self.adj.mapv(|x| x as f64)
    }

    pub fn edge_count(&self) -> usize {
        self.adj.iter().map(|&x| x as usize).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, sorted lexicographically.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                if self.adj[[u, v]] != 0 {
                    out.push((u, v));
                }
            }
        }
        out
    }
}

/// Symmetric non-negative integer matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountMatrix {
    data: Array2<u64>,
}

impl CountMatrix {
    pub fn zeros(n: usize) -> Self {
        CountMatrix {
            data: Array2::zeros((n, n)),
        }
    }

    pub fn from_array(data: Array2<u64>) -> Result<Self, Error> {
        if data.nrows() != data.ncols() {
            return Err(Error::spec("count matrix must be square"));
        }
        for i in 0..data.nrows() {
            if data[[i, i]] != 0 {
                return Err(Error::spec(format!("nonzero diagonal entry at ({i},{i})")));
            }
            for j in 0..i {
                if data[[i, j]] != data[[j, i]] {
                    return Err(Error::spec(format!("count matrix not symmetric at ({i},{j})")));
                }
            }
        }
        Ok(CountMatrix { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn entries(&self) -> &Array2<u64> {
        &self.data
    }

    pub fn entries_f64(&self) -> Array2<f64> {
        self.data.mapv(|x| x as f64)
    }
}

/// General non-negative rectangular real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    data: Array2<f64>,
}

impl WeightMatrix {
    pub fn from_array(data: Array2<f64>) -> Result<Self, Error> {
        for ((i, j), &v) in data.indexed_iter() {
            if v < 0.0 || !v.is_finite() {
                return Err(Error::data(
                    format!("row {}, column {}", i + 1, j + 1),
                    format!("entry {v} is negative or non-finite"),
                ));
            }
        }
        Ok(WeightMatrix { data })
    }

    pub fn nrows(&self) -> usize {
        self.data.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.data.ncols()
    }

    pub fn entries(&self) -> &Array2<f64> {
        &self.data
    }
}

/// Bipartite Poissonian sample with its ground-truth row/column
/// partitions, as produced by [`poisson_blowup`].
#[derive(Debug, Clone)]
pub struct BipartiteCounts {
    pub matrix: WeightMatrix,
    pub row_partition: Partition,
    pub col_partition: Partition,
}

/// Deterministic partition of `1..=n` into blocks by interval membership:
/// item `j` (1-based) belongs to block `i` iff `j/n` lies in the `i`-th
/// gamma segment of `(0,1]`.
pub fn deterministic_partition(n: usize, gammas: &[f64]) -> Result<Partition, Error> {
    validate_gammas(gammas)?;
    let k = gammas.len();
    let mut cumulative = Vec::with_capacity(k);
    let mut acc = 0.0;
    for &g in gammas {
        acc += g;
        cumulative.push(acc);
    }
    // guard the right endpoint against accumulated rounding
    cumulative[k - 1] = 1.0;
    let nf = n as f64;
    let mut labels = Vec::with_capacity(n);
    let mut block = 0;
    for j in 1..=n {
        let x = j as f64 / nf;
        while x > cumulative[block] + 1e-12 {
            block += 1;
        }
        labels.push(block);
    }
    Partition::new(labels, k).map_err(|_| Error::partition(format!("n={n} too small for gammas")))
}

/// Sample a stochastic block model graph of size `n` together with its
/// ground-truth partition. Bit-reproducible for a fixed seed.
pub fn sample_graph(spec: &BlockModelSpec, n: usize, seed: u64) -> Result<(Graph, Partition), Error> {
    let partition = deterministic_partition(n, spec.gammas())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = spec.densities();
    let mut g = Graph::empty(n);
    for v in 0..n {
        for w in (v + 1)..n {
            let p = d[[partition.label_of(v), partition.label_of(w)]];
            if rng.random::<f64>() < p {
                g.adj[[v, w]] = 1;
                g.adj[[w, v]] = 1;
            }
        }
    }
    Ok((g, partition))
}

/// Sample a symmetric Poissonian block model matrix of size `n` together
/// with its ground-truth partition.
pub fn sample_poisson(
    spec: &PoissonBlockSpec,
    n: usize,
    seed: u64,
) -> Result<(CountMatrix, Partition), Error> {
    let partition = deterministic_partition(n, spec.gammas())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rates = spec.rates();
    let mut m = CountMatrix::zeros(n);
    for v in 0..n {
        for w in (v + 1)..n {
            let lambda = rates[[partition.label_of(v), partition.label_of(w)]];
            let count = sample_poisson_count(&mut rng, lambda);
            m.data[[v, w]] = count;
            m.data[[w, v]] = count;
        }
    }
    Ok((m, partition))
}

fn sample_poisson_count(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda == 0.0 {
        return 0;
    }
    let dist = Poisson::new(lambda).expect("positive finite rate");
    let x: f64 = dist.sample(rng);
    x as u64
}

/// Blow up an `m x n` mean matrix `C` into an `(mN) x (nN)` Poisson
/// sample: the entry in row-block `i`, column-block `j` is Poisson(c_ij).
/// Returns the ground-truth blow-up partitions.
pub fn poisson_blowup(c: &WeightMatrix, n_blowup: usize, seed: u64) -> Result<BipartiteCounts, Error> {
    if n_blowup == 0 {
        return Err(Error::domain("blow-up factor must be >= 1"));
    }
    let (m, n) = (c.nrows(), c.ncols());
    let rows = m * n_blowup;
    let cols = n * n_blowup;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = Array2::<f64>::zeros((rows, cols));
    for r in 0..rows {
        for s in 0..cols {
            let lambda = c.entries()[[r / n_blowup, s / n_blowup]];
            data[[r, s]] = sample_poisson_count(&mut rng, lambda) as f64;
        }
    }
    let row_partition = Partition::new((0..rows).map(|r| r / n_blowup).collect(), m)?;
    let col_partition = Partition::new((0..cols).map(|s| s / n_blowup).collect(), n)?;
    Ok(BipartiteCounts {
        matrix: WeightMatrix::from_array(data)?,
        row_partition,
        col_partition,
    })
}

/// Bipartite graph whose MDL structure is much finer than its
/// epsilon-regular structure: block pairs `(X_i, Y_j)` of size
/// `floor(n^alpha)` are completely wired with probability `p` and empty
/// otherwise. `n` is truncated to the largest multiple of the block size.
/// Returns the graph of order `2n'` and the fine block partition.
pub fn sample_regularity_counterexample(
    n: usize,
    alpha: f64,
    p: f64,
    seed: u64,
) -> Result<(Graph, Partition), Error> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::domain(format!("alpha={alpha} must lie in (0, 1/2)")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("p={p} outside [0,1]")));
    }
    let block_size = (n as f64).powf(alpha).floor() as usize;
    if block_size == 0 {
        return Err(Error::domain(format!("n={n} too small for alpha={alpha}")));
    }
    let blocks_per_side = n / block_size;
    if blocks_per_side == 0 {
        return Err(Error::domain(format!("n={n} too small for alpha={alpha}")));
    }
    let side = blocks_per_side * block_size;
    let total = 2 * side;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut g = Graph::empty(total);
    for i in 0..blocks_per_side {
        for j in 0..blocks_per_side {
            if rng.random::<f64>() < p {
                for u in 0..block_size {
                    for v in 0..block_size {
                        let x = i * block_size + u;
                        let y = side + j * block_size + v;
                        g.adj[[x, y]] = 1;
                        g.adj[[y, x]] = 1;
                    }
                }
            }
        }
    }
    let labels = (0..total).map(|v| v / block_size).collect();
    let partition = Partition::new(labels, 2 * blocks_per_side)?;
    Ok((g, partition))
}
