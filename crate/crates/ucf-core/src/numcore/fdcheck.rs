//! Central finite-difference gradient checking.

use super::{Matrix, NodeId, NumError, Tape};

/// Compare reverse-mode gradients against central finite differences.
///
/// `build` constructs the scalar loss graph on a fresh tape from leaf nodes
/// holding the given parameter matrices; it is re-invoked with perturbed
/// parameters for every finite-difference evaluation, so it must be a pure
/// function of them. Returns
/// `max_i |g_ad(i) - g_fd(i)| / max(1e-8, |g_ad(i)| + |g_fd(i)|)`.
pub fn finite_diff_check<F>(build: F, params: &[Matrix], eps: f64) -> Result<f64, NumError>
where
    F: Fn(&mut Tape, &[NodeId]) -> Result<NodeId, NumError>,
{
    if eps <= 0.0 {
        return Err(NumError::Contract("finite_diff_check requires eps > 0"));
    }

    let mut tape = Tape::new();
    let ids: Vec<NodeId> = params.iter().map(|p| tape.leaf(p.clone())).collect();
    let loss = build(&mut tape, &ids)?;
    let grads = tape.backward(loss)?;

    let eval = |perturbed: &[Matrix]| -> Result<f64, NumError> {
        let mut tape = Tape::new();
        let ids: Vec<NodeId> = perturbed.iter().map(|p| tape.leaf(p.clone())).collect();
        let loss = build(&mut tape, &ids)?;
        Ok(tape.value(loss).get(0, 0))
    };

    let mut work: Vec<Matrix> = params.to_vec();
    let mut max_err: f64 = 0.0;
    for (pi, param) in params.iter().enumerate() {
        let zero = Matrix::zeros(param.rows(), param.cols());
        let g_ad = grads.get(ids[pi]).unwrap_or(&zero);
        for j in 0..param.data().len() {
            let orig = param.data()[j];
            work[pi].data_mut()[j] = orig + eps;
            let up = eval(&work)?;
            work[pi].data_mut()[j] = orig - eps;
            let down = eval(&work)?;
            work[pi].data_mut()[j] = orig;
            let g_fd = (up - down) / (2.0 * eps);
            let g = g_ad.data()[j];
            let err = (g - g_fd).abs() / (1e-8f64).max(g.abs() + g_fd.abs());
            max_err = max_err.max(err);
        }
    }
    Ok(max_err)
}
