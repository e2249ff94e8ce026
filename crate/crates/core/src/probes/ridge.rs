use crate::error::{Error, Result};
use crate::numerics::{matmul_tn, solve, Tensor2};

/// Solves `(XᵀX + λI) w = Xᵀy` directly. No intercept: append a column of ones
/// to `x` to fit one.
pub fn closed_form_ridge(x: &Tensor2, y: &Tensor2, lambda: f64) -> Result<Tensor2> {
    if x.rows() != y.rows() {
        return Err(Error::Shape(format!(
            "{} design rows but {} target rows",
            x.rows(),
            y.rows()
        )));
    }
    if lambda.is_nan() || lambda < 0.0 {
        return Err(Error::Config(format!("ridge lambda {lambda} must be >= 0")));
    }
    let mut gram = matmul_tn(x, x)?;
    for i in 0..gram.rows() {
        gram[(i, i)] += lambda;
    }
    let rhs = matmul_tn(x, y)?;
    solve(&gram, &rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{matmul, Rng};

    #[test]
    fn identity_design_returns_targets() {
        let y = Tensor2::from_rows(&[[1.0], [-2.0], [0.5]]).unwrap();
        let w = closed_form_ridge(&Tensor2::identity(3), &y, 0.0).unwrap();
        assert_eq!(w, y);
    }

    #[test]
    fn recovers_planted_weights() {
        let mut rng = Rng::new(21);
        let x = Tensor2::from_vec(50, 4, (0..200).map(|_| rng.normal()).collect()).unwrap();
        let w_star = Tensor2::from_rows(&[[1.5], [-0.25], [0.0], [3.0]]).unwrap();
        let y = matmul(&x, &w_star).unwrap();
        let w = closed_form_ridge(&x, &y, 1e-8).unwrap();
        for (a, b) in w.as_slice().iter().zip(w_star.as_slice()) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn singular_without_regularisation() {
        let x = Tensor2::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let y = Tensor2::zeros(3, 1);
        assert!(matches!(closed_form_ridge(&x, &y, 0.0), Err(Error::Singular)));
        assert!(closed_form_ridge(&x, &y, 0.1).is_ok());
    }
}
