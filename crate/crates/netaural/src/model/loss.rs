//! Pearson correlation and the training loss `1 - rho(C, P)`.
//!
//! The loss is invariant to positive affine rescaling of the target, so
//! the choice of centrality normalization cannot change what the model
//! learns.

use crate::error::{Error, Result};

/// Added to standard deviations below this size in the loss denominator,
/// keeping early near-constant predictions finite.
pub const LOSS_STD_EPS: f64 = 1e-8;

fn moments(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.max(0.0).sqrt())
}

/// Pearson correlation with population statistics. Constant inputs are a
/// degenerate-correlation error.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter("pearson needs at least 2 points".into()));
    }
    let (mx, sx) = moments(x);
    let (my, sy) = moments(y);
    if sx == 0.0 || sy == 0.0 {
        return Err(Error::DegenerateCorrelation(
            "constant input has no defined correlation".into(),
        ));
    }
    let n = x.len() as f64;
    let cov = x
        .iter()
        .zip(y)
        .map(|(a, b)| (a - mx) * (b - my))
        .sum::<f64>()
        / n;
    Ok((cov / (sx * sy)).clamp(-1.0, 1.0))
}

/// `1 - rho(target, predicted)` with guarded denominators: each standard
/// deviation enters as `max(sigma, eps)`, so a constant prediction yields
/// a finite loss instead of NaN. Result is clamped to `[0, 2]`.
pub fn pearson_loss(target: &[f64], predicted: &[f64]) -> f64 {
    pearson_loss_grad(target, predicted).0
}

/// Loss plus its gradient with respect to the predictions.
pub fn pearson_loss_grad(target: &[f64], predicted: &[f64]) -> (f64, Vec<f64>) {
    assert_eq!(target.len(), predicted.len(), "loss inputs must have equal length");
    let n = target.len() as f64;
    let (mc, sc) = moments(target);
    let (mp, sp) = moments(predicted);
    let cov = target
        .iter()
        .zip(predicted)
        .map(|(c, p)| (c - mc) * (p - mp))
        .sum::<f64>()
        / n;
    let a = sc.max(LOSS_STD_EPS);
    let b = sp.max(LOSS_STD_EPS);
    let rho = cov / (a * b);
    let loss = (1.0 - rho).clamp(0.0, 2.0);

    // d rho / d p_j = xc_j / (n a b) - [sp > eps] cov yp_j / (n a b^2 sp)
    let var_term = if sp > LOSS_STD_EPS {
        cov / (a * b * b * sp)
    } else {
        0.0
    };
    let grad = target
        .iter()
        .zip(predicted)
        .map(|(c, p)| {
            let d_rho = (c - mc) / (n * a * b) - var_term * (p - mp) / n;
            -d_rho
        })
        .collect();
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pearson_affine_examples() {
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), 1.0);
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
    }

    #[test]
    fn pearson_interior_value() {
        let rho = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((rho - 0.8).abs() < 1e-12);
    }

    #[test]
    fn pearson_rejects_degenerate_and_mismatched() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::DegenerateCorrelation(_))
        ));
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0, 2.0, 3.0]).is_err());
    }

    #[test]
    fn pearson_scale_invariance_property() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let x: Vec<f64> = (0..20).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let a: f64 = rng.gen_range(0.1..5.0);
            let b: f64 = rng.gen_range(-4.0..4.0);
            let y: Vec<f64> = x.iter().map(|v| a * v + b).collect();
            assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
            let neg: Vec<f64> = x.iter().map(|v| -a * v + b).collect();
            assert!((pearson(&x, &neg).unwrap() + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_examples() {
        let c = [1.0, 2.0, 3.0, 4.0];
        assert!(pearson_loss(&c, &c).abs() < 1e-12);
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        assert!((pearson_loss(&c, &neg) - 2.0).abs() < 1e-12);
        assert!((pearson_loss(&c, &[1.0, 3.0, 2.0, 4.0]) - 0.2).abs() < 1e-12);
    }

    #[test]
    fn loss_constant_prediction_is_finite() {
        let loss = pearson_loss(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]);
        assert!(loss.is_finite());
        assert!((0.0..=2.0).contains(&loss));
        let (l, g) = pearson_loss_grad(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]);
        assert!(l.is_finite());
        assert!(g.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn loss_target_affine_invariance() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let c: Vec<f64> = (0..30).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let p: Vec<f64> = (0..30).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let base = pearson_loss(&c, &p);
        for _ in 0..100 {
            let a: f64 = rng.gen_range(0.01..10.0);
            let b: f64 = rng.gen_range(-5.0..5.0);
            let scaled: Vec<f64> = c.iter().map(|v| a * v + b).collect();
            assert!((pearson_loss(&scaled, &p) - base).abs() < 1e-12);
        }
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let c: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut p: Vec<f64> = (0..12).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let (_, grad) = pearson_loss_grad(&c, &p);
        let h = 1e-6;
        for j in 0..p.len() {
            let orig = p[j];
            p[j] = orig + h;
            let lp = pearson_loss(&c, &p);
            p[j] = orig - h;
            let lm = pearson_loss(&c, &p);
            p[j] = orig;
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (fd - grad[j]).abs() < 1e-6,
                "component {j}: fd {fd} vs analytic {}",
                grad[j]
            );
        }
    }
}
