use super::Tensor2;
use crate::error::{Error, Result};

/// Solves `a * x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is `n x n`, `b` is `n x k`. Returns [`Error::Singular`] when a pivot
/// falls below `1e-12` times the largest absolute entry of `a`.
pub fn solve(a: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    let n = a.rows();
    if a.cols() != n || b.rows() != n {
        return Err(Error::Shape(format!(
            "solve with {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let k = b.cols();
    let mut m = a.clone();
    let mut rhs = b.clone();
    let scale = m.as_slice().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    let tol = scale * 1e-12;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| m[(i, col)].abs().total_cmp(&m[(j, col)].abs()))
            .expect("non-empty range");
        if m[(pivot, col)].abs() <= tol {
            return Err(Error::Singular);
        }
        if pivot != col {
            for c in 0..n {
                let tmp = m[(col, c)];
                m[(col, c)] = m[(pivot, c)];
                m[(pivot, c)] = tmp;
            }
            for c in 0..k {
                let tmp = rhs[(col, c)];
                rhs[(col, c)] = rhs[(pivot, c)];
                rhs[(pivot, c)] = tmp;
            }
        }
        for r in col + 1..n {
            let factor = m[(r, col)] / m[(col, col)];
            if factor == 0.0 {
                continue;
            }
            for c in col..n {
                m[(r, c)] -= factor * m[(col, c)];
            }
            for c in 0..k {
                rhs[(r, c)] -= factor * rhs[(col, c)];
            }
        }
    }

    let mut x = Tensor2::zeros(n, k);
    for c in 0..k {
        for r in (0..n).rev() {
            let mut s = rhs[(r, c)];
            for j in r + 1..n {
                s -= m[(r, j)] * x[(j, c)];
            }
            x[(r, c)] = s / m[(r, r)];
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let a = Tensor2::from_rows(&[[2.0, 1.0], [1.0, 3.0]]).unwrap();
        let b = Tensor2::from_rows(&[[3.0], [5.0]]).unwrap();
        let x = solve(&a, &b).unwrap();
        assert!((x[(0, 0)] - 0.8).abs() < 1e-12);
        assert!((x[(1, 0)] - 1.4).abs() < 1e-12);
    }

    #[test]
    fn needs_pivoting() {
        let a = Tensor2::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap();
        let b = Tensor2::from_rows(&[[2.0], [3.0]]).unwrap();
        let x = solve(&a, &b).unwrap();
        assert_eq!(x.as_slice(), &[3.0, 2.0]);
    }

    #[test]
    fn singular_detected() {
        let a = Tensor2::from_rows(&[[1.0, 2.0], [2.0, 4.0]]).unwrap();
        let b = Tensor2::zeros(2, 1);
        assert!(matches!(solve(&a, &b), Err(Error::Singular)));
    }
}
