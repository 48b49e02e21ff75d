//! Ridge regression with an unpenalized intercept (handled by centering) and
//! closed-form leave-one-out cross-validation through leverages.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::EvalError;

/// Fitted linear model `y = x w + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeModel {
    pub weights: DVector<f64>,
    pub intercept: f64,
}

impl RidgeModel {
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        x * &self.weights + DVector::from_element(x.nrows(), self.intercept)
    }
}

fn center(x: &DMatrix<f64>, y: &DVector<f64>) -> (DMatrix<f64>, DVector<f64>, DVector<f64>, f64) {
    let n = x.nrows() as f64;
    let x_mean = DVector::from_iterator(x.ncols(), x.column_iter().map(|c| c.sum() / n));
    let y_mean = y.sum() / n;
    let mut xc = x.clone();
    for (j, mut col) in xc.column_iter_mut().enumerate() {
        col.add_scalar_mut(-x_mean[j]);
    }
    let yc = y.map(|v| v - y_mean);
    (xc, yc, x_mean, y_mean)
}

/// Minimize `||y - x w - b||^2 + alpha ||w||^2` with the intercept left
/// unpenalized. For `alpha = 0` the minimum-norm least-squares solution is
/// returned, so a determined system is interpolated exactly.
pub fn ridge_fit(x: &DMatrix<f64>, y: &DVector<f64>, alpha: f64) -> Result<RidgeModel, EvalError> {
    if x.nrows() != y.len() || x.nrows() == 0 || x.ncols() == 0 {
        return Err(EvalError::DimensionMismatch {
            rows: x.nrows(),
            targets: y.len(),
        });
    }
    if alpha < 0.0 || !alpha.is_finite() {
        return Err(EvalError::BadAlpha(alpha));
    }
    let (xc, yc, x_mean, y_mean) = center(x, y);
    let weights = if alpha > 0.0 {
        let chol = gram_cholesky(&xc, alpha)?;
        chol.solve(&(xc.transpose() * &yc))
    } else {
        let svd = xc.svd(true, true);
        svd.solve(&yc, 1e-12).map_err(|_| EvalError::SingularSystem)?
    };
    if weights.iter().any(|w| !w.is_finite()) {
        return Err(EvalError::SingularSystem);
    }
    let intercept = y_mean - x_mean.dot(&weights);
    Ok(RidgeModel { weights, intercept })
}

fn gram_cholesky(xc: &DMatrix<f64>, alpha: f64) -> Result<Cholesky<f64, nalgebra::Dyn>, EvalError> {
    let p = xc.ncols();
    let mut gram = xc.transpose() * xc;
    for j in 0..p {
        gram[(j, j)] += alpha;
    }
    Cholesky::new(gram).ok_or(EvalError::SingularSystem)
}

/// Mean squared leave-one-out residual at one alpha, computed without
/// refitting: `e_i / (1 - h_i)` with `h_i = 1/n + x_ci^T (Xc^T Xc + aI)^-1
/// x_ci`. Exact for a fixed penalty, including the centered intercept.
fn loo_mean_squared_error(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    alpha: f64,
) -> Result<f64, EvalError> {
    if alpha <= 0.0 {
        return Err(EvalError::BadAlpha(alpha));
    }
    let n = x.nrows();
    let (xc, yc, _, _) = center(x, y);
    let chol = gram_cholesky(&xc, alpha)?;
    let weights = chol.solve(&(xc.transpose() * &yc));
    let fitted = &xc * &weights;
    // One solve for all leverages: columns of B are G^-1 x_ci.
    let b = chol.solve(&xc.transpose());
    let mut acc = 0.0;
    for i in 0..n {
        let residual = yc[i] - fitted[i];
        let leverage = 1.0 / n as f64 + xc.row(i).transpose().dot(&b.column(i).clone_owned());
        let denom = 1.0 - leverage;
        if denom <= 0.0 {
            return Err(EvalError::SingularSystem);
        }
        let loo = residual / denom;
        acc += loo * loo;
    }
    Ok(acc / n as f64)
}

/// Pick the alpha with the smallest mean LOO squared error; ties go to the
/// smallest alpha.
pub fn loocv_alpha(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    alphas: &[f64],
) -> Result<f64, EvalError> {
    if alphas.is_empty() {
        return Err(EvalError::EmptyAlphas);
    }
    let mut sorted = alphas.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let mut best: Option<(f64, f64)> = None;
    for &alpha in &sorted {
        let err = loo_mean_squared_error(x, y, alpha)?;
        match best {
            Some((_, best_err)) if err >= best_err => {}
            _ => best = Some((alpha, err)),
        }
    }
    Ok(best.expect("alphas is non-empty").0)
}

/// Explicit n-refit leave-one-out, the independent route the closed form is
/// checked against in tests.
pub fn loo_mean_squared_error_by_refit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    alpha: f64,
) -> Result<f64, EvalError> {
    let n = x.nrows();
    let mut acc = 0.0;
    for holdout in 0..n {
        let keep: Vec<usize> = (0..n).filter(|&i| i != holdout).collect();
        let x_train = x.select_rows(keep.iter());
        let y_train = y.select_rows(keep.iter());
        let model = ridge_fit(&x_train, &y_train, alpha)?;
        let pred = model.predict(&x.select_rows([holdout].iter()));
        let e = y[holdout] - pred[0];
        acc += e * e;
    }
    Ok(acc / n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::{rand_core::SeedableRng, ChaCha8Rng};

    fn random_problem(rng: &mut ChaCha8Rng, n: usize, p: usize) -> (DMatrix<f64>, DVector<f64>) {
        let x = DMatrix::from_fn(n, p, |_, _| rng.gen_range(-1.0..1.0));
        let y = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        (x, y)
    }

    #[test]
    fn zero_alpha_interpolates_a_determined_system() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (x, y) = random_problem(&mut rng, 6, 6);
        let model = ridge_fit(&x, &y, 0.0).unwrap();
        let residual = (model.predict(&x) - &y).norm();
        assert!(residual < 1e-8, "residual {residual}");
    }

    #[test]
    fn huge_alpha_shrinks_to_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (x, y) = random_problem(&mut rng, 30, 5);
        let model = ridge_fit(&x, &y, 1e12).unwrap();
        assert!(model.weights.norm() < 1e-6);
        let mean = y.sum() / y.len() as f64;
        for value in model.predict(&x).iter() {
            assert!((value - mean).abs() < 1e-5);
        }
    }

    #[test]
    fn matches_explicit_normal_equations() {
        // Independent route: augmented design [1 X] with penalty only on the
        // feature block, solved by naive Gaussian elimination.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (x, y) = random_problem(&mut rng, 20, 10);
        let alpha = 0.1;
        let model = ridge_fit(&x, &y, alpha).unwrap();

        let n = x.nrows();
        let p = x.ncols();
        let mut z = DMatrix::zeros(n, p + 1);
        for i in 0..n {
            z[(i, 0)] = 1.0;
            for j in 0..p {
                z[(i, j + 1)] = x[(i, j)];
            }
        }
        let mut a = z.transpose() * &z;
        for j in 1..=p {
            a[(j, j)] += alpha;
        }
        let rhs = z.transpose() * &y;
        let solved = gaussian_solve(a, rhs);
        assert!((solved[0] - model.intercept).abs() < 1e-8);
        for j in 0..p {
            assert!((solved[j + 1] - model.weights[j]).abs() < 1e-8);
        }
    }

    fn gaussian_solve(mut a: DMatrix<f64>, mut b: DVector<f64>) -> DVector<f64> {
        let n = a.nrows();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
                .unwrap();
            a.swap_rows(col, pivot);
            b.swap_rows(col, pivot);
            for row in col + 1..n {
                let factor = a[(row, col)] / a[(col, col)];
                for k in col..n {
                    a[(row, k)] -= factor * a[(col, k)];
                }
                b[row] -= factor * b[col];
            }
        }
        let mut out = DVector::zeros(n);
        for row in (0..n).rev() {
            let mut acc = b[row];
            for k in row + 1..n {
                acc -= a[(row, k)] * out[k];
            }
            out[row] = acc / a[(row, row)];
        }
        out
    }

    #[test]
    fn loocv_closed_form_equals_refit() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..20 {
            let (x, y) = random_problem(&mut rng, 15, 5);
            for alpha in [0.001, 0.01, 0.1, 1.0] {
                let fast = loo_mean_squared_error(&x, &y, alpha).unwrap();
                let slow = loo_mean_squared_error_by_refit(&x, &y, alpha).unwrap();
                assert!((fast - slow).abs() < 1e-8, "alpha {alpha}: {fast} vs {slow}");
            }
        }
    }

    #[test]
    fn loocv_ties_pick_smallest_alpha() {
        // Constant target: weights are zero at every alpha, every LOO error
        // is identical, so the tie rule decides.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (x, _) = random_problem(&mut rng, 12, 4);
        let y = DVector::from_element(12, 3.5);
        let alpha = loocv_alpha(&x, &y, &[0.001, 0.01, 0.1, 1.0]).unwrap();
        assert_eq!(alpha, 0.001);
    }

    #[test]
    fn loocv_prefers_light_regularization_for_a_linear_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let (x, _) = random_problem(&mut rng, 25, 5);
        let y = DVector::from_iterator(25, x.column(0).iter().copied());
        let alpha = loocv_alpha(&x, &y, &[0.001, 0.01, 0.1, 1.0]).unwrap();
        assert_eq!(alpha, 0.001);
    }

    #[test]
    fn intercept_absorbs_target_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (x, y) = random_problem(&mut rng, 18, 4);
        let shifted = y.map(|v| v + 42.0);
        let base = ridge_fit(&x, &y, 0.5).unwrap();
        let moved = ridge_fit(&x, &shifted, 0.5).unwrap();
        assert!((moved.intercept - base.intercept - 42.0).abs() < 1e-9);
        assert!((&moved.weights - &base.weights).norm() < 1e-9);
    }
}
