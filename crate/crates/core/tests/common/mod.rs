#![allow(dead_code, clippy::needless_range_loop)]

use etnes::linalg::Matrix;
use etnes::QuadraticGame;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random game whose pseudo-gradient matrix is strictly diagonally dominant
/// with a negative diagonal. Every H^i is symmetric.
pub fn random_game(rng: &mut ChaCha8Rng, n: usize) -> QuadraticGame<f64> {
    let mut mats = Vec::with_capacity(n);
    for i in 0..n {
        let mut m = vec![vec![0.0f64; n]; n];
        for r in 0..n {
            for c in r..n {
                let v = rng.gen_range(-1.0..1.0);
                m[r][c] = v;
                m[c][r] = v;
            }
        }
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| m[i][j].abs()).sum();
        m[i][i] = -(off + rng.gen_range(0.1..1.0));
        mats.push(Matrix::from_rows(&m));
    }
    let vecs = (0..n).map(|_| (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).collect();
    let offsets = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
    QuadraticGame::new(mats, vecs, offsets).unwrap()
}

/// `J_i(θ)` from the definition, without the library's evaluator.
pub fn payoff(game: &QuadraticGame<f64>, i: usize, theta: &[f64]) -> f64 {
    let n = theta.len();
    let h = game.payoff_matrix(i);
    let mut quad = 0.0;
    for j in 0..n {
        for k in 0..n {
            quad += theta[j] * h[(j, k)] * theta[k];
        }
    }
    let lin: f64 = (0..n).map(|j| game.payoff_vector(i)[j] * theta[j]).sum();
    0.5 * quad + lin + game.offset(i)
}

/// `∂J_i/∂θ_i` from the definition.
pub fn own_gradient(game: &QuadraticGame<f64>, i: usize, theta: &[f64]) -> f64 {
    let h = game.payoff_matrix(i);
    (0..theta.len()).map(|j| h[(i, j)] * theta[j]).sum::<f64>() + game.payoff_vector(i)[i]
}

/// Cholesky attempt; true iff the symmetric matrix is positive definite.
pub fn is_spd(m: &Matrix<f64>) -> bool {
    let n = m.rows();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = m[(i, i)] - s;
                if d <= 0.0 {
                    return false;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (m[(i, j)] - s) / l[j][j];
            }
        }
    }
    true
}

/// `‖(HK)ᵀP + P(HK) + Q‖∞` with plain loops.
pub fn lyapunov_residual(h: &Matrix<f64>, k: &[f64], p: &Matrix<f64>, q: &Matrix<f64>) -> f64 {
    let n = h.rows();
    let a = |r: usize, c: usize| h[(r, c)] * k[c];
    let mut worst = 0.0f64;
    for r in 0..n {
        for c in 0..n {
            let mut v = q[(r, c)];
            for m in 0..n {
                v += a(m, r) * p[(m, c)] + p[(r, m)] * a(m, c);
            }
            worst = worst.max(v.abs());
        }
    }
    worst
}

/// Two-player game with `θ* = (1, 1)` and `J(θ*) = 0`, so the estimate
/// carries no large offset and the original loop tracks its average.
pub fn well_separated_game() -> QuadraticGame<f64> {
    QuadraticGame::new(
        vec![Matrix::from_rows(&[[-2.0, 1.0], [1.0, 0.0]]), Matrix::from_rows(&[[0.0, 1.0], [1.0, -2.0]])],
        vec![vec![1.0, 0.0], vec![0.0, 1.0]],
        vec![-1.0, -1.0],
    )
    .unwrap()
}
