//! Small dense-vector helpers.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// `y += alpha · x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Sums equal-length vectors with a balanced pairwise tree over the given
/// order. The result depends only on the order of `parts`, never on how the
/// parts were produced.
pub fn pairwise_sum(mut parts: Vec<Vec<f64>>, dim: usize) -> Vec<f64> {
    if parts.is_empty() {
        return vec![0.0; dim];
    }
    while parts.len() > 1 {
        let mut next = Vec::with_capacity(parts.len().div_ceil(2));
        let mut it = parts.into_iter();
        while let Some(mut a) = it.next() {
            if let Some(b) = it.next() {
                axpy(1.0, &b, &mut a);
            }
            next.push(a);
        }
        parts = next;
    }
    parts.pop().unwrap()
}
