//! N-player games with quadratic payoffs
//! `J_i(θ) = ½ θᵀ H^i θ + (h^i)ᵀ θ + c_i`.

use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm_inf, Matrix};
use crate::scalar::Scalar;

/// Relative tolerance for the per-player symmetry check `H^i = (H^i)ᵀ`.
pub const SYMMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticGame<T> {
    payoff_matrices: Vec<Matrix<T>>,
    payoff_vectors: Vec<Vec<T>>,
    offsets: Vec<T>,
}

impl<T: Scalar> QuadraticGame<T> {
    /// Checks dimensions only. Structural assumptions (symmetry, concavity,
    /// diagonal dominance) are reported by [`QuadraticGame::validate`].
    pub fn new(payoff_matrices: Vec<Matrix<T>>, payoff_vectors: Vec<Vec<T>>, offsets: Vec<T>) -> Result<Self> {
        let n = payoff_matrices.len();
        if payoff_vectors.len() != n || offsets.len() != n {
            return Err(Error::Dimension(format!(
                "{n} payoff matrices, {} payoff vectors, {} offsets",
                payoff_vectors.len(),
                offsets.len()
            )));
        }
        for (i, m) in payoff_matrices.iter().enumerate() {
            if m.rows() != n || m.cols() != n {
                return Err(Error::Dimension(format!(
                    "payoff matrix of player {} is {}x{}, expected {n}x{n}",
                    i + 1,
                    m.rows(),
                    m.cols()
                )));
            }
        }
        for (i, v) in payoff_vectors.iter().enumerate() {
            if v.len() != n {
                return Err(Error::Dimension(format!(
                    "payoff vector of player {} has length {}, expected {n}",
                    i + 1,
                    v.len()
                )));
            }
        }
        Ok(Self { payoff_matrices, payoff_vectors, offsets })
    }

    pub fn players(&self) -> usize {
        self.payoff_matrices.len()
    }

    pub fn payoff_matrix(&self, i: usize) -> &Matrix<T> {
        &self.payoff_matrices[i]
    }

    pub fn payoff_vector(&self, i: usize) -> &[T] {
        &self.payoff_vectors[i]
    }

    pub fn offset(&self, i: usize) -> T {
        self.offsets[i]
    }

    pub fn payoff_matrices(&self) -> &[Matrix<T>] {
        &self.payoff_matrices
    }

    pub fn payoff_vectors(&self) -> &[Vec<T>] {
        &self.payoff_vectors
    }

    pub fn offsets(&self) -> &[T] {
        &self.offsets
    }

    /// Same game with every offset shifted by `delta[i]`.
    pub fn with_offsets(&self, offsets: Vec<T>) -> Result<Self> {
        Self::new(self.payoff_matrices.clone(), self.payoff_vectors.clone(), offsets)
    }

    pub fn validate(&self) -> ValidationReport {
        validate_game(self)
    }

    /// Payoff of a single player.
    pub fn payoff(&self, i: usize, theta: &[T]) -> T {
        let half = T::lit(0.5);
        half * self.payoff_matrices[i].quadratic_form(theta) + dot(&self.payoff_vectors[i], theta) + self.offsets[i]
    }

    pub fn payoffs(&self, theta: &[T]) -> Vec<T> {
        payoffs(self, theta)
    }
}

/// A single failed structural assumption. Player and row indices are 0-based;
/// `Display` prints them 1-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    TooFewPlayers { n: usize },
    Asymmetric { player: usize, row: usize, col: usize },
    NotConcave { player: usize, diagonal: f64 },
    NotDiagonallyDominant { row: usize, diagonal: f64, off_diagonal_sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::TooFewPlayers { n } => write!(f, "game has {n} player(s), at least 2 required"),
            Violation::Asymmetric { player, row, col } => write!(
                f,
                "player {}: payoff matrix not symmetric at ({}, {})",
                player + 1,
                row + 1,
                col + 1
            ),
            Violation::NotConcave { player, diagonal } => {
                write!(f, "player {}: own-action curvature H^i_ii = {diagonal} is not negative", player + 1)
            }
            Violation::NotDiagonallyDominant { row, diagonal, off_diagonal_sum } => write!(
                f,
                "row {}: pseudo-gradient matrix not strictly diagonally dominant (|diag| = {diagonal}, off-diagonal sum = {off_diagonal_sum})",
                row + 1
            ),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let msg = self.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
            Err(Error::InvalidGame(msg))
        }
    }
}

pub fn validate_game<T: Scalar>(game: &QuadraticGame<T>) -> ValidationReport {
    let n = game.players();
    let mut violations = Vec::new();
    if n < 2 {
        violations.push(Violation::TooFewPlayers { n });
    }
    let tol = T::lit(SYMMETRY_TOL);
    for (player, m) in game.payoff_matrices.iter().enumerate() {
        let scale = m.max_abs().max(T::one());
        for row in 0..n {
            for col in (row + 1)..n {
                if (m[(row, col)] - m[(col, row)]).abs() > tol * scale {
                    violations.push(Violation::Asymmetric { player, row, col });
                }
            }
        }
        let diag = m[(player, player)];
        if !(diag < T::zero()) {
            violations.push(Violation::NotConcave { player, diagonal: diag.to_f64_lossy() });
        }
    }
    let pg = pseudo_gradient_matrix(game);
    for row in 0..n {
        let diag = pg.matrix[(row, row)].abs();
        let off: T = (0..n).filter(|&c| c != row).fold(T::zero(), |s, c| s + pg.matrix[(row, c)].abs());
        if !(off < diag) {
            violations.push(Violation::NotDiagonallyDominant {
                row,
                diagonal: diag.to_f64_lossy(),
                off_diagonal_sum: off.to_f64_lossy(),
            });
        }
    }
    ValidationReport { violations }
}

/// The matrix `H` (row i = row i of `H^i`) and vector `h` (`h_i = h^i_i`)
/// whose root `Hθ = −h` is the Nash equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct PseudoGradientMatrix<T> {
    pub matrix: Matrix<T>,
    pub vector: Vec<T>,
}

impl<T: Scalar> PseudoGradientMatrix<T> {
    pub fn players(&self) -> usize {
        self.vector.len()
    }

    /// Pseudo-gradient `Hθ + h` at an action profile.
    pub fn evaluate(&self, theta: &[T]) -> Vec<T> {
        self.matrix.mul_vec(theta).into_iter().zip(&self.vector).map(|(a, &b)| a + b).collect()
    }
}

pub fn pseudo_gradient_matrix<T: Scalar>(game: &QuadraticGame<T>) -> PseudoGradientMatrix<T> {
    let n = game.players();
    let matrix = Matrix::from_fn(n, n, |i, j| game.payoff_matrices[i][(i, j)]);
    let vector = (0..n).map(|i| game.payoff_vectors[i][i]).collect();
    PseudoGradientMatrix { matrix, vector }
}

/// Unique Nash equilibrium `θ* = −H⁻¹h` by dense LU.
pub fn nash_equilibrium<T: Scalar>(pg: &PseudoGradientMatrix<T>) -> Result<Vec<T>> {
    let rhs: Vec<T> = pg.vector.iter().map(|&x| -x).collect();
    let theta = pg.matrix.solve(&rhs)?;
    if theta.iter().any(|x| !x.is_finite()) {
        return Err(Error::Singular { pivot: 0 });
    }
    Ok(theta)
}

pub fn payoffs<T: Scalar>(game: &QuadraticGame<T>, theta: &[T]) -> Vec<T> {
    (0..game.players()).map(|i| game.payoff(i, theta)).collect()
}

/// Residual `‖Hθ + h‖∞` of the first-order conditions.
pub fn first_order_residual<T: Scalar>(pg: &PseudoGradientMatrix<T>, theta: &[T]) -> T {
    norm_inf(&pg.evaluate(theta))
}

/// Price-competition oligopoly: firm i sets price θ_i, has marginal cost
/// `m_i` and consumer resistance `R_i`, with total demand `S_d`.
///
/// With `Π_{¬S}` the product of all resistances outside the index set S and
/// `D = Σ_i Π_{¬i}`, firm i's payoff has
/// `H^i_ii = −2 Σ_{j≠i} Π_{¬ij} / D`, `H^i_ij = H^i_ji = Π_{¬ij} / D`,
/// `h^i_i = (m_i Σ_{j≠i} Π_{¬ij} + S_d Π_{¬i}) / D`, `h^i_j = −m_i Π_{¬ij} / D`
/// and `c_i = −m_i S_d Π_{¬i} / D`; all other entries are zero.
pub fn oligopoly_game<T: Scalar>(demand: T, resistances: &[T], marginal_costs: &[T]) -> Result<QuadraticGame<T>> {
    let n = resistances.len();
    if marginal_costs.len() != n {
        return Err(Error::Dimension(format!(
            "{n} resistances but {} marginal costs",
            marginal_costs.len()
        )));
    }
    for (i, &r) in resistances.iter().enumerate() {
        if !(r > T::zero()) || !r.is_finite() {
            return Err(Error::config(format!("resistances[{i}]"), format!("must be positive, got {r}")));
        }
    }
    let product_except = |skip: &[usize]| -> T {
        resistances
            .iter()
            .enumerate()
            .filter(|(k, _)| !skip.contains(k))
            .fold(T::one(), |p, (_, &r)| p * r)
    };
    let denom = (0..n).fold(T::zero(), |s, i| s + product_except(&[i]));

    let mut matrices = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    let mut offsets = Vec::with_capacity(n);
    for i in 0..n {
        let mut m = Matrix::zeros(n, n);
        let mut v = vec![T::zero(); n];
        let mut pair_sum = T::zero();
        for j in (0..n).filter(|&j| j != i) {
            let p = product_except(&[i, j]);
            pair_sum = pair_sum + p;
            m[(i, j)] = p / denom;
            m[(j, i)] = p / denom;
            v[j] = -marginal_costs[i] * p / denom;
        }
        let others = product_except(&[i]);
        m[(i, i)] = T::lit(-2.0) * pair_sum / denom;
        v[i] = (marginal_costs[i] * pair_sum + demand * others) / denom;
        matrices.push(m);
        vectors.push(v);
        offsets.push(-marginal_costs[i] * demand * others / denom);
    }
    QuadraticGame::new(matrices, vectors, offsets)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_player() -> QuadraticGame<f64> {
        QuadraticGame::new(
            vec![
                Matrix::from_rows(&[[-2.0, 1.0], [1.0, 0.0]]),
                Matrix::from_rows(&[[0.0, 1.0], [1.0, -2.0]]),
            ],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
        )
        .unwrap()
    }

    fn four_firm_oligopoly() -> QuadraticGame<f64> {
        oligopoly_game(100.0, &[0.15, 0.30, 0.60, 1.0], &[30.0, 30.0, 25.0, 20.0]).unwrap()
    }

    #[test]
    fn two_player_game_is_valid() {
        assert!(two_player().validate().is_valid());
    }

    #[test]
    fn dominance_violation_names_row() {
        let g = QuadraticGame::new(
            vec![
                Matrix::from_rows(&[[-2.0, 3.0], [3.0, 0.0]]),
                Matrix::from_rows(&[[0.0, 1.0], [1.0, -2.0]]),
            ],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let report = g.validate();
        assert_eq!(report.violations.len(), 1);
        assert!(matches!(report.violations[0], Violation::NotDiagonallyDominant { row: 0, .. }));
        assert!(report.violations[0].to_string().starts_with("row 1"));
    }

    #[test]
    fn asymmetry_and_convexity_reported() {
        let g = QuadraticGame::new(
            vec![
                Matrix::from_rows(&[[1.0, 0.1], [0.0, 0.0]]),
                Matrix::from_rows(&[[0.0, 0.0], [0.0, -2.0]]),
            ],
            vec![vec![0.0; 2], vec![0.0; 2]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let v = g.validate().violations;
        assert!(v.contains(&Violation::Asymmetric { player: 0, row: 0, col: 1 }));
        assert!(v.iter().any(|x| matches!(x, Violation::NotConcave { player: 0, .. })));
    }

    #[test]
    fn dimension_mismatch_is_structural() {
        let err = QuadraticGame::new(
            vec![Matrix::<f64>::zeros(2, 2), Matrix::zeros(2, 3)],
            vec![vec![0.0; 2], vec![0.0; 2]],
            vec![0.0, 0.0],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Dimension(_)));
    }

    #[test]
    fn single_player_flagged() {
        let g = QuadraticGame::new(vec![Matrix::from_rows(&[[-1.0]])], vec![vec![1.0]], vec![0.0]).unwrap();
        assert!(g.validate().violations.contains(&Violation::TooFewPlayers { n: 1 }));
    }

    #[test]
    fn pseudo_gradient_rows() {
        let pg = pseudo_gradient_matrix(&two_player());
        assert_eq!(pg.matrix, Matrix::from_rows(&[[-2.0, 1.0], [1.0, -2.0]]));
        assert_eq!(pg.vector, vec![1.0, 1.0]);
    }

    #[test]
    fn diagonal_game_gives_diagonal_h() {
        let g = QuadraticGame::new(
            vec![Matrix::from_diag(&[-1.0, 5.0]), Matrix::from_diag(&[7.0, -3.0])],
            vec![vec![0.0; 2], vec![0.0; 2]],
            vec![0.0; 2],
        )
        .unwrap();
        assert_eq!(pseudo_gradient_matrix(&g).matrix, Matrix::from_diag(&[-1.0, -3.0]));
    }

    #[test]
    fn nash_of_two_player_game() {
        let theta = nash_equilibrium(&pseudo_gradient_matrix(&two_player())).unwrap();
        assert!((theta[0] - 1.0).abs() < 1e-14 && (theta[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nash_with_negative_identity() {
        let pg = PseudoGradientMatrix { matrix: Matrix::from_diag(&[-1.0, -1.0]), vector: vec![3.0, 4.0] };
        assert_eq!(nash_equilibrium(&pg).unwrap(), vec![3.0, 4.0]);
    }

    #[test]
    fn singular_h_is_an_error() {
        let pg = PseudoGradientMatrix { matrix: Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0]]), vector: vec![1.0, 0.0] };
        assert!(matches!(nash_equilibrium(&pg), Err(Error::Singular { .. })));
    }

    #[test]
    fn payoff_hand_values() {
        let g = two_player();
        assert_eq!(g.payoffs(&[1.0, 1.0]), vec![1.0, 1.0]);
        let shifted = g.with_offsets(vec![2.5, -1.0]).unwrap();
        assert_eq!(shifted.payoffs(&[0.0, 0.0]), vec![2.5, -1.0]);
    }

    #[test]
    fn oligopoly_matches_displayed_matrices() {
        let (r1, r2, r3, r4) = (0.15, 0.30, 0.60, 1.0);
        let (m1, sd) = (30.0, 100.0);
        let d = r2 * r3 * r4 + r1 * r3 * r4 + r1 * r2 * r4 + r1 * r2 * r3;
        let g = four_firm_oligopoly();
        let h1 = g.payoff_matrix(0);
        let expect_h1 = [
            [-2.0 * (r3 * r4 + r2 * r4 + r2 * r3), r3 * r4, r2 * r4, r2 * r3],
            [r3 * r4, 0.0, 0.0, 0.0],
            [r2 * r4, 0.0, 0.0, 0.0],
            [r2 * r3, 0.0, 0.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert!((h1[(i, j)] - expect_h1[i][j] / d).abs() < 1e-12);
            }
        }
        let expect_v1 = [m1 * (r3 * r4 + r2 * r4 + r2 * r3) + sd * r2 * r3 * r4, -m1 * r3 * r4, -m1 * r2 * r4, -m1 * r2 * r3];
        for (got, want) in g.payoff_vector(0).iter().zip(expect_v1) {
            assert!((got - want / d).abs() < 1e-12);
        }
        assert!((g.offset(0) + m1 * sd * r2 * r3 * r4 / d).abs() < 1e-9);

        let h4 = g.payoff_matrix(3);
        assert!((h4[(3, 3)] + 2.0 * (r2 * r3 + r1 * r3 + r1 * r2) / d).abs() < 1e-12);
        assert!((h4[(0, 3)] - r2 * r3 / d).abs() < 1e-12);
        assert!((h4[(2, 3)] - r1 * r2 / d).abs() < 1e-12);
        assert_eq!(h4[(0, 1)], 0.0);
    }

    #[test]
    fn oligopoly_is_valid_and_potential() {
        let g = four_firm_oligopoly();
        assert!(g.validate().is_valid());
        let pg = pseudo_gradient_matrix(&g);
        for i in 0..4 {
            for j in 0..4 {
                assert!((g.payoff_matrix(i)[(i, j)] - g.payoff_matrix(j)[(j, i)]).abs() < 1e-15);
            }
        }
        assert!(pg.matrix.symmetric_eigenvalues().iter().all(|&e| e < 0.0));
    }

    #[test]
    fn oligopoly_equal_resistances_uniform_off_diagonal() {
        let g = oligopoly_game(10.0, &[0.5; 4], &[1.0; 4]).unwrap();
        let h = pseudo_gradient_matrix(&g).matrix;
        for i in 0..4 {
            let off: Vec<f64> = (0..4).filter(|&j| j != i).map(|j| h[(i, j)]).collect();
            assert!(off.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-15));
        }
    }

    #[test]
    fn oligopoly_rejects_nonpositive_resistance() {
        let err = oligopoly_game(100.0, &[0.15, 0.0, 0.6, 1.0], &[30.0; 4]).unwrap_err();
        assert!(matches!(err, Error::InvalidConfig { ref field, .. } if field == "resistances[1]"));
    }

    #[test]
    fn generic_over_f32() {
        let g: QuadraticGame<f32> = oligopoly_game(100.0, &[0.15, 0.30, 0.60, 1.0], &[30.0, 30.0, 25.0, 20.0]).unwrap();
        let theta = nash_equilibrium(&pseudo_gradient_matrix(&g)).unwrap();
        assert!((theta[0] - 42.8818).abs() < 5e-3);
    }
}
