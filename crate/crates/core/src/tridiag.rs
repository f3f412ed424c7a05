//! Per-band kernel system `(A + λ·B·LᵀL)·h = B·ζ` with diagonal `A`, `B`.
//!
//! `LᵀL` is the second-difference stencil `[1 −1; −1 2 −1; …; −1 1]`, so the
//! system matrix is tridiagonal and never materialized densely except in the
//! least-squares fallback.

use nalgebra::{DMatrix, DVector};

/// Which path produced a kernel solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    /// Forward elimination and back substitution without pivoting.
    Thomas,
    /// Minimum-norm least-squares via SVD, used when elimination is unsafe.
    LeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandSystem {
    /// Diagonal of `A`: `Σ_n S[n−τ]·X'[n]`.
    pub a: Vec<f64>,
    /// Diagonal of `B`: the previous kernel, floored positive.
    pub b: Vec<f64>,
    /// `ζ_τ = Σ_n S[n−τ]·Y[n]`.
    pub zeta: Vec<f64>,
    pub lambda: f64,
}

/// Diagonal of `LᵀL` at lag `tau` for a kernel of `len` lags.
fn second_difference_diag(tau: usize, len: usize) -> f64 {
    if tau == 0 || tau + 1 == len {
        1.0
    } else {
        2.0
    }
}

impl BandSystem {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    /// `(sub, diag, sup)` of `A + λ·B·LᵀL`; `sub[0]` and `sup[len−1]` are zero.
    pub fn tridiagonal(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let n = self.len();
        let mut sub = vec![0.0; n];
        let mut diag = vec![0.0; n];
        let mut sup = vec![0.0; n];
        for tau in 0..n {
            let scaled = self.lambda * self.b[tau];
            diag[tau] = self.a[tau] + scaled * second_difference_diag(tau, n);
            if tau > 0 {
                sub[tau] = -scaled;
            }
            if tau + 1 < n {
                sup[tau] = -scaled;
            }
        }
        (sub, diag, sup)
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.b.iter().zip(&self.zeta).map(|(b, z)| b * z).collect()
    }

    /// `(A + λ·B·LᵀL)·h − B·ζ`.
    pub fn residual(&self, h: &[f64]) -> Vec<f64> {
        let (sub, diag, sup) = self.tridiagonal();
        let rhs = self.rhs();
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = diag[i] * h[i];
                if i > 0 {
                    v += sub[i] * h[i - 1];
                }
                if i + 1 < n {
                    v += sup[i] * h[i + 1];
                }
                v - rhs[i]
            })
            .collect()
    }

    /// Solves the system, falling back to least squares when the matrix is not
    /// diagonally dominant or elimination hits a vanishing pivot.
    pub fn solve(&self) -> (Vec<f64>, SolveMethod) {
        let (sub, diag, sup) = self.tridiagonal();
        let rhs = self.rhs();
        let dominant = (0..self.len()).all(|i| diag[i].abs() >= sub[i].abs() + sup[i].abs());
        if dominant {
            if let Some(h) = thomas(&sub, &diag, &sup, &rhs) {
                return (h, SolveMethod::Thomas);
            }
        }
        (least_squares(&sub, &diag, &sup, &rhs), SolveMethod::LeastSquares)
    }

    /// Band part of the H auxiliary function up to a constant:
    /// `hᵀ(A·B⁻¹ + λ·LᵀL)h − 2ζᵀh`.
    pub fn surrogate(&self, h: &[f64]) -> f64 {
        let n = self.len();
        let mut value = 0.0;
        for tau in 0..n {
            value += self.a[tau] / self.b[tau] * h[tau] * h[tau] - 2.0 * self.zeta[tau] * h[tau];
        }
        let smooth: f64 = h.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
        value + self.lambda * smooth
    }

    /// Minimizes the surrogate over `h ≥ 0` by projected Gauss-Seidel, starting
    /// from whichever of `candidates` scores lower. Never returns a point scoring
    /// worse than the best candidate.
    pub fn nonnegative_minimizer(&self, candidates: &[&[f64]]) -> Vec<f64> {
        let n = self.len();
        let mut h: Vec<f64> = candidates
            .iter()
            .map(|c| c.iter().map(|v| v.max(0.0)).collect::<Vec<_>>())
            .min_by(|x, y| self.surrogate(x).total_cmp(&self.surrogate(y)))
            .unwrap_or_else(|| vec![0.0; n]);
        // symmetric Hessian (halved): diag a/b + λ·d, off-diagonal −λ
        for _ in 0..500 {
            let mut change = 0.0_f64;
            let mut scale = 0.0_f64;
            for tau in 0..n {
                let curvature = self.a[tau] / self.b[tau]
                    + self.lambda * second_difference_diag(tau, n);
                if curvature <= 0.0 || !curvature.is_finite() {
                    continue;
                }
                let mut coupling = 0.0;
                if tau > 0 {
                    coupling += h[tau - 1];
                }
                if tau + 1 < n {
                    coupling += h[tau + 1];
                }
                let target = ((self.zeta[tau] + self.lambda * coupling) / curvature).max(0.0);
                change = change.max((target - h[tau]).abs());
                scale = scale.max(target.abs());
                h[tau] = target;
            }
            if change <= 1e-13 * scale.max(f64::MIN_POSITIVE) {
                break;
            }
        }
        h
    }
}

/// Thomas elimination. Returns `None` on a (near-)zero pivot or non-finite output.
pub fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    if n == 0 {
        return Some(Vec::new());
    }
    let scale = diag.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let tiny = 1e-14 * scale;
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() <= tiny || pivot == 0.0 {
        return None;
    }
    c[0] = sup[0] / pivot;
    d[0] = rhs[0] / pivot;
    for i in 1..n {
        pivot = diag[i] - sub[i] * c[i - 1];
        if pivot.abs() <= tiny || pivot == 0.0 {
            return None;
        }
        c[i] = sup[i] / pivot;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / pivot;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Minimum-norm least-squares solution via a truncated SVD pseudo-inverse.
pub fn least_squares(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Vec<f64> {
    let n = diag.len();
    let m = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if j + 1 == i {
            sub[i]
        } else if i + 1 == j {
            sup[i]
        } else {
            0.0
        }
    });
    let svd = m.svd(true, true);
    let largest = svd.singular_values.iter().fold(0.0_f64, |a, &b| a.max(b));
    let cutoff = largest * n as f64 * f64::EPSILON;
    svd.solve(&DVector::from_column_slice(rhs), cutoff)
        .map(|v| v.iter().map(|x| if x.is_finite() { *x } else { 0.0 }).collect())
        .unwrap_or_else(|_| vec![0.0; n])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_system(rng: &mut impl Rng, n: usize, lambda: f64) -> BandSystem {
        BandSystem {
            a: (0..n).map(|_| rng.random_range(0.1..2.0)).collect(),
            b: (0..n).map(|_| rng.random_range(0.1..2.0)).collect(),
            zeta: (0..n).map(|_| rng.random_range(0.0..2.0)).collect(),
            lambda,
        }
    }

    fn norm(v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    #[test]
    fn thomas_residual_is_tiny() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let lambda = rng.random_range(0.0..10.0);
            let sys = random_system(&mut rng, 15, lambda);
            let (h, method) = sys.solve();
            assert_eq!(method, SolveMethod::Thomas);
            assert!(norm(&sys.residual(&h)) <= 1e-10 * norm(&sys.rhs()));
        }
    }

    #[test]
    fn zero_lambda_is_a_diagonal_solve() {
        let sys = BandSystem {
            a: vec![2.0, 4.0, 0.5],
            b: vec![1.0, 0.5, 0.25],
            zeta: vec![1.0, 2.0, 3.0],
            lambda: 0.0,
        };
        let (h, _) = sys.solve();
        for i in 0..3 {
            assert!((h[i] - sys.b[i] * sys.zeta[i] / sys.a[i]).abs() < 1e-15);
        }
    }

    #[test]
    fn heavy_smoothing_flattens_the_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let base = random_system(&mut rng, 8, 0.0);
        let spread = |lambda: f64| {
            let (h, _) = BandSystem { lambda, ..base.clone() }.solve();
            let max = h.iter().cloned().fold(f64::MIN, f64::max);
            let min = h.iter().cloned().fold(f64::MAX, f64::min);
            (max - min) / max.abs()
        };
        let (s0, s6, s9) = (spread(0.0), spread(1e6), spread(1e9));
        assert!(s6 < s0);
        assert!(s9 < s6);
        assert!(s9 < 1e-6);
    }

    #[test]
    fn singular_system_falls_back_to_minimum_norm_least_squares() {
        // A = 0: the matrix is λ·B·LᵀL, singular along constants
        let sys = BandSystem {
            a: vec![0.0; 4],
            b: vec![1.0; 4],
            zeta: vec![1.0, -1.0, 1.0, -1.0],
            lambda: 1.0,
        };
        let (h, method) = sys.solve();
        assert_eq!(method, SolveMethod::LeastSquares);
        // the minimum-norm solution is orthogonal to the nullspace (constants)
        assert!(h.iter().sum::<f64>().abs() < 1e-10);
        // and satisfies the normal equations
        let (sub, diag, sup) = sys.tridiagonal();
        let r = sys.residual(&h);
        for j in 0..4 {
            let mut col_dot = diag[j] * r[j];
            if j > 0 {
                col_dot += sup[j - 1] * r[j - 1];
            }
            if j + 1 < 4 {
                col_dot += sub[j + 1] * r[j + 1];
            }
            assert!(col_dot.abs() < 1e-10);
        }
    }

    #[test]
    fn thomas_rejects_zero_pivot() {
        assert!(thomas(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn nonnegative_minimizer_never_worsens_and_stays_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let lambda = rng.random_range(0.0..5.0);
            let mut sys = random_system(&mut rng, 10, lambda);
            // push some unconstrained optima negative
            for z in sys.zeta.iter_mut() {
                *z -= rng.random_range(0.0..1.5);
            }
            let (free, _) = sys.solve();
            let prev: Vec<f64> = (0..10).map(|_| rng.random_range(0.0..1.0)).collect();
            let h = sys.nonnegative_minimizer(&[&free, &prev]);
            assert!(h.iter().all(|&v| v >= 0.0));
            assert!(sys.surrogate(&h) <= sys.surrogate(&prev) + 1e-12);
            if free.iter().all(|&v| v >= 0.0) {
                for (a, b) in h.iter().zip(&free) {
                    assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
                }
            }
        }
    }
}
