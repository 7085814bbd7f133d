//! Shared fixtures for the criterion benchmarks.

use regdec::blockmodels::{
    poisson_blowup, sample_graph, BlockModelSpec, Graph, Partition, WeightMatrix,
};
use regdec::Error;

/// A planted two-block graph with strong separation, plus its ground
/// truth, at the given size.
pub fn planted_graph(n: usize, seed: u64) -> Result<(Graph, Partition), Error> {
    let spec = BlockModelSpec::new(
        vec![0.5, 0.5],
        ndarray::array![[0.8, 0.05], [0.05, 0.8]],
    )?;
    sample_graph(&spec, n, seed)
}

/// A rectangular Poisson count matrix blown up from a 2x3 rate matrix.
pub fn planted_matrix(blowup: usize, seed: u64) -> Result<WeightMatrix, Error> {
    let rates = WeightMatrix::from_array(ndarray::array![
        [16.0, 1.0, 4.0],
        [1.0, 16.0, 4.0]
    ])?;
    Ok(poisson_blowup(&rates, blowup, seed)?.matrix)
}
