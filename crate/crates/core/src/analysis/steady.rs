use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::TransitionMatrix;

/// Largest chain solved directly; bigger ones use power iteration.
pub const DIRECT_SOLVE_LIMIT: usize = 2000;
pub const POWER_TOLERANCE: f64 = 1e-12;
pub const POWER_MAX_ITERATIONS: usize = 1_000_000;

const PIVOT_FLOOR: f64 = 1e-12;

/// Stationary distribution over the states of a chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub pi: Vec<f64>,
}

impl SteadyState {
    /// `max_j |(pi P)_j - pi_j|`.
    pub fn residual(&self, p: &TransitionMatrix) -> f64 {
        p.left_multiply(&self.pi)
            .iter()
            .zip(&self.pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Solve `pi P = pi`, `sum pi = 1`.
pub fn solve_steady_state(p: &TransitionMatrix) -> Result<SteadyState> {
    let y = p.size();
    if y == 0 {
        return Err(Error::Singular("empty matrix".into()));
    }
    if y <= DIRECT_SOLVE_LIMIT {
        solve_direct(p)
    } else {
        solve_power(p, POWER_TOLERANCE, POWER_MAX_ITERATIONS)
    }
}

/// LU solve of `(P^T - I) pi = 0` with the last equation replaced by the
/// normalization.
pub fn solve_direct(p: &TransitionMatrix) -> Result<SteadyState> {
    let y = p.size();
    let mut a = DMatrix::<f64>::from_fn(y, y, |i, j| p.get(j, i) - if i == j { 1.0 } else { 0.0 });
    for j in 0..y {
        a[(y - 1, j)] = 1.0;
    }
    let mut rhs = nalgebra::DVector::<f64>::zeros(y);
    rhs[y - 1] = 1.0;

    let lu = a.lu();
    let u = lu.u();
    let scale = u.diagonal().iter().fold(0.0f64, |m, d| m.max(d.abs())).max(1.0);
    let smallest = u.diagonal().iter().fold(f64::INFINITY, |m, d| m.min(d.abs()));
    if smallest < PIVOT_FLOOR * scale {
        return Err(Error::Singular(format!(
            "pivot {smallest:e}: the chain has more than one closed class"
        )));
    }
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("LU solve failed".into()))?;
    let mut pi: Vec<f64> = x.iter().copied().collect();
    if pi.iter().any(|v| !v.is_finite() || *v < -1e-9) {
        return Err(Error::Singular("solution is not a probability vector".into()));
    }
    for v in &mut pi {
        *v = v.max(0.0);
    }
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= total);
    Ok(SteadyState { pi })
}

/// Power iteration from the uniform vector, stopping when successive iterates
/// differ by at most `tolerance` in the infinity norm.
pub fn solve_power(p: &TransitionMatrix, tolerance: f64, max_iterations: usize) -> Result<SteadyState> {
    let y = p.size();
    let mut pi = vec![1.0 / y as f64; y];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iterations {
        let mut next = p.left_multiply(&pi);
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        residual = next
            .iter()
            .zip(&pi)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        pi = next;
        if residual <= tolerance {
            return Ok(SteadyState { pi });
        }
    }
    Err(Error::Convergence {
        iterations: max_iterations,
        residual,
    })
}
