use crate::numerics::{orthonormalize, psd_factor, svd, Matrix, SymMatrix};

use super::UvcError;

/// Orthonormal basis (as columns) of a subspace `W` of dimension
/// `⌈(1−β)n⌉` on which `‖My‖² ≤ (1/β)‖y‖²`, for `M` with columns of norm at
/// most one. `W` is spanned by the right singular vectors of the smallest
/// singular values.
pub fn low_distortion_subspace(m: &Matrix, beta: f64) -> Result<Matrix, UvcError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(UvcError::InvalidInput(format!("beta = {beta} outside (0, 1]")));
    }
    if let Some((j, v)) = m
        .column_norms()
        .into_iter()
        .enumerate()
        .find(|(_, v)| *v > 1.0 + 1e-12)
    {
        return Err(UvcError::InvalidInput(format!("column {j} has norm {v} > 1")));
    }
    let n = m.cols();
    let dim = ((1.0 - beta) * n as f64 - 1e-12).ceil().max(0.0) as usize;
    let dec = svd(m)?;
    Ok(Matrix::from_fn(n, dim, |i, c| dec.right.get(i, c)))
}

/// Orthonormal basis (as columns) of a subspace of dimension at least
/// `(1−β)·order` on which `wᵀGw ≤ (1/β) wᵀ Diag(G) w`.
pub fn diag_dominated_subspace(g: &SymMatrix, beta: f64) -> Result<Matrix, UvcError> {
    let n = g.order();
    let factor = psd_factor(g, 1e-9)?;
    let diag = g.diag();
    let support: Vec<usize> = (0..n).filter(|&i| diag[i] > 1e-14).collect();
    let zero: Vec<usize> = (0..n).filter(|&i| diag[i] <= 1e-14).collect();

    let mut columns: Vec<Vec<f64>> = Vec::new();
    for &i in &zero {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        columns.push(e);
    }
    if !support.is_empty() {
        // columns u_i / ‖u_i‖ over the support
        let dim = factor.dim();
        let scaled = Matrix::from_fn(dim, support.len(), |k, c| {
            let i = support[c];
            let u = factor.vector(i);
            let nu = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            if nu > 0.0 {
                u[k] / nu
            } else {
                0.0
            }
        });
        let w = low_distortion_subspace(&scaled, beta)?;
        for c in 0..w.cols() {
            let mut v = vec![0.0; n];
            for (a, &i) in support.iter().enumerate() {
                v[i] = w.get(a, c) / diag[i].sqrt();
            }
            columns.push(v);
        }
    }
    Ok(orthonormalize(&columns, n, 1e-12))
}
