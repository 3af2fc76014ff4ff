//! Closed-form optimal-control motion primitives.
//!
//! Two solvers: the input-constrained minimum-time double integrator
//! ([`min_time_1d`], [`min_time_3d`]), whose bang-bang solution provides
//! edge costs for the velocity graph, and the jerk-penalized
//! minimum-effort/minimum-time triple integrator ([`lqmt_fixed_t`],
//! [`lqmt_optimal`]), whose quintic solution is the trajectory segment the
//! vehicle actually flies. Both are pure and thread-safe.

mod bang_bang;
mod lqmt;

pub use bang_bang::{min_time_1d, min_time_3d, AxisBangBang, BangBangSolution};
pub use lqmt::{lqmt_fixed_t, lqmt_optimal, LqmtSolution};

use crate::math::{polyder, polymul, polyval};
use crate::Vec3;

#[derive(Debug, thiserror::Error)]
pub enum PrimitiveError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("ill-conditioned solve: duration {t_final} below 1e-6 s")]
    IllConditioned { t_final: f64 },
    #[error("root finding produced no positive real duration")]
    RootFailure,
    #[error("evaluation time {t} outside [0, {duration}]")]
    OutOfDomain { t: f64, duration: f64 },
}

/// Boundary condition of a primitive: position, velocity and optionally
/// acceleration. A missing acceleration means the solver leaves it free.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Option<Vec3>,
}

impl BoundaryState {
    pub fn new(position: Vec3, velocity: Vec3) -> Self {
        BoundaryState {
            position,
            velocity,
            acceleration: None,
        }
    }

    pub fn with_acceleration(position: Vec3, velocity: Vec3, acceleration: Vec3) -> Self {
        BoundaryState {
            position,
            velocity,
            acceleration: Some(acceleration),
        }
    }

    pub fn at_rest(position: Vec3) -> Self {
        BoundaryState::with_acceleration(position, Vec3::zeros(), Vec3::zeros())
    }

    pub fn accel_or_zero(&self) -> Vec3 {
        self.acceleration.unwrap_or_else(Vec3::zeros)
    }

    pub fn is_finite(&self) -> bool {
        self.position.iter().all(|c| c.is_finite())
            && self.velocity.iter().all(|c| c.is_finite())
            && self.accel_or_zero().iter().all(|c| c.is_finite())
    }
}

/// Piecewise-polynomial trajectory over three axes with a shared time grid.
///
/// Piece `k` covers `[start_k, start_{k+1}]` and stores ascending-power
/// coefficients in the piece-local time `t - start_k`. Breakpoints are the
/// interior piece boundaries; single-piece trajectories have none.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialTrajectory {
    breakpoints: Vec<f64>,
    duration: f64,
    /// axes[axis][piece] -> coefficient vector
    axes: [Vec<Vec<f64>>; 3],
}

impl PolynomialTrajectory {
    /// Single polynomial piece per axis over `[0, duration]`.
    pub fn single_piece(duration: f64, coeffs: [Vec<f64>; 3]) -> Self {
        assert!(duration >= 0.0);
        PolynomialTrajectory {
            breakpoints: Vec::new(),
            duration,
            axes: coeffs.map(|c| vec![c]),
        }
    }

    /// Piecewise trajectory; `breakpoints` are interior boundaries, strictly
    /// increasing inside `(0, duration)`, and every axis must provide
    /// `breakpoints.len() + 1` pieces.
    pub fn piecewise(breakpoints: Vec<f64>, duration: f64, axes: [Vec<Vec<f64>>; 3]) -> Self {
        assert!(duration >= 0.0);
        assert!(
            breakpoints.windows(2).all(|w| w[0] < w[1]),
            "breakpoints must be strictly increasing"
        );
        assert!(
            breakpoints.iter().all(|&b| b > 0.0 && b < duration),
            "breakpoints must lie inside (0, duration)"
        );
        for a in &axes {
            assert_eq!(a.len(), breakpoints.len() + 1, "piece count mismatch");
        }
        PolynomialTrajectory {
            breakpoints,
            duration,
            axes,
        }
    }

    /// Constant (zero-duration) trajectory pinned at `position`.
    pub fn stationary(position: Vec3) -> Self {
        PolynomialTrajectory::single_piece(
            0.0,
            [vec![position.x], vec![position.y], vec![position.z]],
        )
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn piece_count(&self) -> usize {
        self.breakpoints.len() + 1
    }

    /// Coefficients of `piece` on `axis`, ascending powers of local time.
    pub fn piece_coeffs(&self, axis: usize, piece: usize) -> &[f64] {
        &self.axes[axis][piece]
    }

    /// Start time of `piece`.
    pub fn piece_start(&self, piece: usize) -> f64 {
        if piece == 0 {
            0.0
        } else {
            self.breakpoints[piece - 1]
        }
    }

    // Left-continuous piece lookup: an interior breakpoint belongs to the
    // piece that ends there.
    fn piece_index(&self, t: f64) -> usize {
        self.breakpoints.partition_point(|&b| b < t)
    }

    /// Value of the `order`-th derivative (0 = position .. 3 = jerk) at `t`.
    pub fn evaluate(&self, t: f64, order: usize) -> Result<Vec3, PrimitiveError> {
        assert!(order <= 3, "supported derivative orders are 0..3");
        let slack = 1e-12 * (1.0 + self.duration);
        if t < -slack || t > self.duration + slack {
            return Err(PrimitiveError::OutOfDomain {
                t,
                duration: self.duration,
            });
        }
        let t = t.clamp(0.0, self.duration);
        let piece = self.piece_index(t);
        let tau = t - self.piece_start(piece);
        let mut out = Vec3::zeros();
        for axis in 0..3 {
            let mut c = self.axes[axis][piece].clone();
            for _ in 0..order {
                c = polyder(&c);
            }
            out[axis] = polyval(&c, tau);
        }
        Ok(out)
    }

    pub fn position(&self, t: f64) -> Result<Vec3, PrimitiveError> {
        self.evaluate(t, 0)
    }

    /// Position/velocity/acceleration sampled at `t` as a boundary state.
    pub fn state_at(&self, t: f64) -> Result<BoundaryState, PrimitiveError> {
        Ok(BoundaryState::with_acceleration(
            self.evaluate(t, 0)?,
            self.evaluate(t, 1)?,
            self.evaluate(t, 2)?,
        ))
    }

    /// Analytic integral of the squared jerk norm over the whole trajectory.
    pub fn jerk_cost(&self) -> f64 {
        let mut total = 0.0;
        for piece in 0..self.piece_count() {
            let len = if piece == self.piece_count() - 1 {
                self.duration - self.piece_start(piece)
            } else {
                self.breakpoints[piece] - self.piece_start(piece)
            };
            for axis in 0..3 {
                let jerk = polyder(&polyder(&polyder(&self.axes[axis][piece])));
                if jerk.is_empty() {
                    continue;
                }
                let sq = polymul(&jerk, &jerk);
                // integrate ascending-power sq over [0, len]
                total += sq
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| c * len.powi(k as i32 + 1) / (k as f64 + 1.0))
                    .sum::<f64>();
            }
        }
        total
    }

    /// Largest seam discontinuity across interior breakpoints for derivative
    /// orders `0..=max_order`.
    pub fn max_seam_jump(&self, max_order: usize) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, &b) in self.breakpoints.iter().enumerate() {
            let left_tau = b - self.piece_start(k);
            for axis in 0..3 {
                for order in 0..=max_order {
                    let mut cl = self.axes[axis][k].clone();
                    let mut cr = self.axes[axis][k + 1].clone();
                    for _ in 0..order {
                        cl = polyder(&cl);
                        cr = polyder(&cr);
                    }
                    let jump = (polyval(&cl, left_tau) - polyval(&cr, 0.0)).abs();
                    worst = worst.max(jump);
                }
            }
        }
        worst
    }
}
