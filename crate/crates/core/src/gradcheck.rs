//! Central finite differences, the oracle for every analytic gradient.

use crate::graph::ParamSet;
use crate::tensor::Tensor;

pub const DEFAULT_STEP: f64 = 1e-5;

/// `|a − b| / max(1e-8, |a|, |b|)`
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1e-8f64.max(a.abs()).max(b.abs())
}

/// Estimates `∂f/∂θ` for every scalar coordinate of every parameter as
/// `(f(θ + h·eᵢ) − f(θ − h·eᵢ)) / 2h`.
///
/// Returns one tensor per parameter, in the set's parameter order. The input
/// is not modified; coordinates are perturbed on a private copy.
pub fn fd_gradient<P, F>(mut f: F, params: &P, h: f64) -> Vec<(String, Tensor)>
where
    P: ParamSet + Clone,
    F: FnMut(&P) -> f64,
{
    assert!(h > 0.0, "finite-difference step must be positive");
    let mut work = params.clone();
    let shapes: Vec<(String, Vec<usize>, usize)> = params
        .params()
        .iter()
        .map(|p| (p.name.clone(), p.value.shape().to_vec(), p.len()))
        .collect();

    let mut out = Vec::with_capacity(shapes.len());
    for (pi, (name, shape, len)) in shapes.into_iter().enumerate() {
        let mut est = Vec::with_capacity(len);
        for i in 0..len {
            let orig = work.params()[pi].value.values()[i];
            set(&mut work, pi, i, orig + h);
            let plus = f(&work);
            set(&mut work, pi, i, orig - h);
            let minus = f(&work);
            set(&mut work, pi, i, orig);
            est.push((plus - minus) / (2.0 * h));
        }
        out.push((name, Tensor::new(shape, est).expect("shape taken from parameter")));
    }
    out
}

fn set<P: ParamSet>(set: &mut P, param: usize, coord: usize, v: f64) {
    set.params_mut()[param].value.values_mut()[coord] = v;
}
