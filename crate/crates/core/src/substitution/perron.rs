use super::{CompositionMatrix, Result, SubstitutionError};
use serde::Serialize;

pub const DEFAULT_TOL: f64 = 1e-12;
pub const MAX_ITERATIONS: usize = 1_000_000;

/// Perron-Frobenius data of a primitive composition matrix.
///
/// `left_vec` is scaled so that `left_vec · right_vec = 1`; with that
/// normalization `Mⁿ e_a / θⁿ → (left_vec[a]) · right_vec`, which is the
/// per-letter limit vector `v(a)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PerronData {
    pub theta: f64,
    pub right_vec: Vec<f64>,
    pub left_vec: Vec<f64>,
    pub letter_freq: Vec<f64>,
    pub letter_limits: Vec<Vec<f64>>,
    pub residual: f64,
    /// True when θ was fixed symbolically from equal column sums.
    pub theta_exact: bool,
}

impl PerronData {
    /// `‖v(a)‖₁`.
    pub fn limit_norm(&self, a: usize) -> f64 {
        self.letter_limits[a].iter().sum()
    }
}

/// Dominant eigenpair by power iteration from the uniform vector.
///
/// Stops once successive eigenvalue estimates differ by less than `tol`
/// and the eigen-residual `‖Mx − θx‖∞` is at most `tol`.
fn power_iteration(m: &CompositionMatrix, tol: f64) -> Result<(f64, Vec<f64>, f64)> {
    let k = m.size();
    let mut x = vec![1.0 / k as f64; k];
    let mut prev = f64::NAN;
    for _ in 0..MAX_ITERATIONS {
        let y = m.mul_vec(&x);
        let lambda: f64 = y.iter().sum();
        if !(lambda > 0.0) {
            return Err(SubstitutionError::NotPrimitive);
        }
        let residual = y.iter().zip(&x).map(|(yi, xi)| (yi - lambda * xi).abs()).fold(0.0, f64::max);
        if (lambda - prev).abs() < tol && residual <= tol {
            return Ok((lambda, x, residual));
        }
        prev = lambda;
        x = y.into_iter().map(|v| v / lambda).collect();
    }
    Err(SubstitutionError::NoConvergence { iterations: MAX_ITERATIONS })
}

pub fn perron(m: &CompositionMatrix, tol: f64) -> Result<PerronData> {
    if !m.is_primitive() {
        return Err(SubstitutionError::NotPrimitive);
    }
    let k = m.size();
    let (lambda, right, _) = power_iteration(m, tol)?;

    // Equal column sums q mean (1,…,1) is a positive left eigenvector, so
    // q is the Perron root.
    let sums = m.column_sums();
    let constant = sums.iter().all(|&s| s == sums[0]);
    let (theta, left) = if constant {
        (sums[0] as f64, vec![1.0; k])
    } else {
        let (_, left, _) = power_iteration(&m.transpose(), tol)?;
        (lambda, left)
    };

    let pairing: f64 = left.iter().zip(&right).map(|(l, r)| l * r).sum();
    let left: Vec<f64> = left.into_iter().map(|l| l / pairing).collect();
    let mx = m.mul_vec(&right);
    let residual = mx.iter().zip(&right).map(|(y, x)| (y - theta * x).abs()).fold(0.0, f64::max);
    let total: f64 = right.iter().sum();
    let letter_freq: Vec<f64> = right.iter().map(|r| r / total).collect();
    let letter_limits = left.iter().map(|&l| right.iter().map(|r| l * r).collect()).collect();

    Ok(PerronData {
        theta,
        right_vec: right,
        left_vec: left,
        letter_freq,
        letter_limits,
        residual,
        theta_exact: constant,
    })
}

#[cfg(test)]
mod tests {
    use super::super::{composition_matrix, Substitution};
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rudin_shapiro_perron() {
        let p = perron(&composition_matrix(&Substitution::rudin_shapiro()), DEFAULT_TOL).unwrap();
        assert_eq!(p.theta, 2.0);
        assert!(p.theta_exact);
        for f in &p.letter_freq {
            assert!(close(*f, 0.25, 1e-10));
        }
        for a in 0..4 {
            assert!(close(p.limit_norm(a), 1.0, 1e-10));
        }
        assert!(p.residual <= DEFAULT_TOL);
    }

    #[test]
    fn three_letter_theta_is_three() {
        let p = perron(&composition_matrix(&Substitution::three_letter()), DEFAULT_TOL).unwrap();
        assert_eq!(p.theta, 3.0);
        assert!(p.residual <= DEFAULT_TOL);
    }

    #[test]
    fn fibonacci_golden_ratio() {
        let p = perron(&composition_matrix(&Substitution::fibonacci()), DEFAULT_TOL).unwrap();
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!(close(p.theta, phi, 1e-11));
        assert!(!p.theta_exact);
        // Right eigenvector of [[1,1],[1,0]] is (φ, 1).
        assert!(close(p.letter_freq[0], phi / (phi + 1.0), 1e-10));
        assert!(p.right_vec.iter().chain(&p.left_vec).all(|&v| v > 0.0));
        let pairing: f64 = p.left_vec.iter().zip(&p.right_vec).map(|(l, r)| l * r).sum();
        assert!(close(pairing, 1.0, 1e-12));
    }

    /// Oracle for v(a): iterate Mⁿe_a/θⁿ directly.
    #[test]
    fn letter_limits_match_iterated_counts() {
        for s in [Substitution::fibonacci(), Substitution::three_letter(), Substitution::rudin_shapiro()] {
            let m = composition_matrix(&s);
            let p = perron(&m, DEFAULT_TOL).unwrap();
            for a in 0..m.size() {
                let mut v = vec![0.0; m.size()];
                v[a] = 1.0;
                for _ in 0..200 {
                    v = m.mul_vec(&v).into_iter().map(|x| x / p.theta).collect();
                }
                for (x, y) in v.iter().zip(&p.letter_limits[a]) {
                    assert!(close(*x, *y, 1e-8), "{s}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn rejects_non_primitive() {
        let s = Substitution::new(vec![vec![0, 0], vec![1, 1]]).unwrap();
        assert_eq!(perron(&composition_matrix(&s), DEFAULT_TOL), Err(SubstitutionError::NotPrimitive));
    }

    #[test]
    fn impossible_tolerance_reports_no_convergence() {
        let m = composition_matrix(&Substitution::fibonacci());
        assert!(matches!(perron(&m, -1.0), Err(SubstitutionError::NoConvergence { .. })));
    }
}
