//! Small dense numerical helpers.

use nalgebra::DMatrix;

/// Central finite-difference Jacobian of `f` at `x`.
///
/// The perturbation of entry `i` is `rel_step * max(1, |x_i|)`.
pub fn fd_jacobian<E>(
    x: &[f64],
    rel_step: f64,
    mut f: impl FnMut(&[f64]) -> Result<Vec<f64>, E>,
) -> Result<DMatrix<f64>, E> {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    let mut xp = x.to_vec();
    let mut rows = 0;
    for i in 0..n {
        let h = rel_step * x[i].abs().max(1.0);
        xp[i] = x[i] + h;
        let fp = f(&xp)?;
        xp[i] = x[i] - h;
        let fm = f(&xp)?;
        xp[i] = x[i];
        rows = fp.len();
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect::<Vec<f64>>());
    }
    Ok(DMatrix::from_fn(rows, n, |r, c| cols[c][r]))
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn inf_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_of_quadratic_map() {
        let j = fd_jacobian(&[1.0, 2.0], 1e-6, |x| Ok::<_, ()>(vec![x[0] * x[0] + x[1], 3.0 * x[1]])).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 3.0]);
        assert!((j - expect).abs().max() < 1e-8);
    }

    #[test]
    fn spectral_radius_of_rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, -4.0, 4.0, 0.0]);
        assert!((spectral_radius(&a) - 4.0).abs() < 1e-12);
        let b = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -7.0]);
        assert!((spectral_radius(&b) - 7.0).abs() < 1e-12);
    }
}
