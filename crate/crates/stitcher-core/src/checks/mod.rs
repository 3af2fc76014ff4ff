//! Stage-3 feasibility pruning: sampled flat-output constraint checks and
//! adaptive time-of-collision checks backed by a safe-sphere cache.
//!
//! Candidate primitives are kept only when every time sample satisfies the
//! vehicle envelope (thrust magnitude, tilt, speed, angular rate) and the
//! swept path is certified obstacle-free. Constraint checking must run
//! before collision checking: the adaptive collision stepper advances by
//! clearance divided by the speed limit, which is only a sound bound once
//! the speed limit is known to hold.

mod collision;

pub use collision::{check_collision, SafeSphere, SafeSphereCache};

use serde::{Deserialize, Serialize};

use crate::primitives::PolynomialTrajectory;
use crate::Vec3;

/// Below this mass-normalized thrust norm the thrust direction, and with it
/// the vehicle attitude, is undefined (free fall).
pub const SINGULAR_THRUST_EPS: f64 = 1e-9;

/// Vehicle envelope: mass-normalized thrust bounds, tilt, speed, and body
/// angular-rate limits, plus the gravity used to map acceleration to thrust.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstraintLimits {
    /// Minimum mass-normalized thrust, m/s².
    pub f_min: f64,
    /// Maximum mass-normalized thrust, m/s².
    pub f_max: f64,
    /// Maximum tilt of the thrust axis from vertical, degrees.
    pub theta_max_deg: f64,
    /// Maximum speed, m/s.
    pub v_max: f64,
    /// Maximum body angular rate, rad/s.
    pub omega_max: f64,
    /// Gravitational acceleration, m/s², with +z up.
    pub gravity: f64,
}

impl Default for ConstraintLimits {
    /// Benchmark vehicle envelope used throughout the test and benchmark
    /// suites.
    fn default() -> Self {
        ConstraintLimits {
            f_min: 0.85,
            f_max: 18.75,
            theta_max_deg: 60.0,
            v_max: 10.0,
            omega_max: 6.0,
            gravity: 9.81,
        }
    }
}

/// Rejection reason produced by [`ConstraintLimits::validate`].
#[derive(Debug, thiserror::Error)]
#[error("invalid constraint limits: {reason}")]
pub struct InvalidLimits {
    pub reason: String,
}

impl ConstraintLimits {
    pub fn validate(&self) -> Result<(), InvalidLimits> {
        let fail = |reason: &str| {
            Err(InvalidLimits {
                reason: reason.to_string(),
            })
        };
        let all = [
            self.f_min,
            self.f_max,
            self.theta_max_deg,
            self.v_max,
            self.omega_max,
            self.gravity,
        ];
        if !all.iter().all(|x| x.is_finite()) {
            return fail("all limits must be finite");
        }
        if self.f_min < 0.0 || self.f_max <= 0.0 || self.f_min > self.f_max {
            return fail("thrust bounds must satisfy 0 <= f_min <= f_max, f_max > 0");
        }
        if self.theta_max_deg <= 0.0 || self.theta_max_deg >= 90.0 {
            return fail("tilt limit must lie strictly between 0 and 90 degrees");
        }
        if self.v_max <= 0.0 {
            return fail("speed limit must be positive");
        }
        if self.omega_max <= 0.0 {
            return fail("angular-rate limit must be positive");
        }
        if self.gravity <= 0.0 {
            return fail("gravity must be positive");
        }
        if self.axis_accel_bounds().z <= 0.0 {
            return fail("thrust envelope allows no vertical acceleration");
        }
        Ok(())
    }

    /// Symmetric per-axis acceleration bounds containing every acceleration
    /// the thrust envelope can realize: horizontally the largest lateral
    /// thrust component (full thrust at maximum tilt), vertically the larger
    /// of maximum climb and maximum drop authority. The box over-approximates
    /// the nonconvex envelope, so minimum-time costs computed under it are
    /// optimistic — exactly what the stage-2 heuristic requires.
    pub fn axis_accel_bounds(&self) -> Vec3 {
        let theta = self.theta_max_deg.to_radians();
        let horizontal = self.f_max * theta.sin();
        let vertical = (self.f_max - self.gravity).max(self.gravity - self.f_min);
        Vec3::new(horizontal, horizontal, vertical)
    }
}

/// Thrust vector and body angular-rate magnitude implied by a flat-output
/// sample under the zero-yaw-rate convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlatOutputs {
    /// Mass-normalized thrust f = a + g·ẑ, m/s².
    pub thrust: Vec3,
    /// ‖ω‖ of the attitude trajectory, rad/s.
    pub omega_norm: f64,
}

/// Maps acceleration and jerk to thrust and angular-rate magnitude. With
/// zero yaw rate the body rate is the rotation of the thrust axis, so
/// ‖ω‖ = ‖j − (j·ẑ_B)ẑ_B‖ / ‖f‖. Returns `None` at the free-fall
/// singularity (‖f‖ < [`SINGULAR_THRUST_EPS`]), where the thrust direction
/// is undefined.
pub fn flat_outputs(accel: &Vec3, jerk: &Vec3, gravity: f64) -> Option<FlatOutputs> {
    let thrust = accel + Vec3::new(0.0, 0.0, gravity);
    let f_norm = thrust.norm();
    if f_norm < SINGULAR_THRUST_EPS {
        return None;
    }
    let z_b = thrust / f_norm;
    let lateral_jerk = jerk - z_b * jerk.dot(&z_b);
    Some(FlatOutputs {
        thrust,
        omega_norm: lateral_jerk.norm() / f_norm,
    })
}

/// Constraint families a sampled state can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    Thrust,
    Tilt,
    Velocity,
    Omega,
    Collision,
    Singular,
}

/// Earliest detected violation along a trajectory, with the offending value
/// and the limit it broke (JSON: `{time_s, kind, value, limit}`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub time_s: f64,
    pub kind: ViolationKind,
    pub value: f64,
    pub limit: f64,
}

/// Samples the trajectory at t ∈ {0, dt, 2dt, ...} plus always the final
/// time, and returns the earliest envelope violation, if any. At a given
/// sample the checks run in a fixed order: thrust singularity, thrust
/// magnitude, tilt, speed, angular rate.
pub fn check_constraints(
    traj: &PolynomialTrajectory,
    limits: &ConstraintLimits,
    dt: f64,
) -> Option<Violation> {
    assert!(dt > 0.0 && dt.is_finite(), "sample spacing must be positive");
    let t_final = traj.duration();
    let mut k = 0u64;
    loop {
        let t = k as f64 * dt;
        let at_end = t >= t_final - 1e-12 * (1.0 + t_final);
        let t = if at_end { t_final } else { t };
        if let Some(v) = check_state_sample(traj, limits, t) {
            return Some(v);
        }
        if at_end {
            return None;
        }
        k += 1;
    }
}

fn check_state_sample(
    traj: &PolynomialTrajectory,
    limits: &ConstraintLimits,
    t: f64,
) -> Option<Violation> {
    let sample = |order| traj.evaluate(t, order).expect("sample time within domain");
    let velocity = sample(1);
    let accel = sample(2);
    let jerk = sample(3);

    let Some(FlatOutputs { thrust, omega_norm }) = flat_outputs(&accel, &jerk, limits.gravity)
    else {
        let f_norm = (accel + Vec3::new(0.0, 0.0, limits.gravity)).norm();
        return Some(Violation {
            time_s: t,
            kind: ViolationKind::Singular,
            value: f_norm,
            limit: SINGULAR_THRUST_EPS,
        });
    };
    let f_norm = thrust.norm();
    if f_norm > limits.f_max {
        return Some(Violation {
            time_s: t,
            kind: ViolationKind::Thrust,
            value: f_norm,
            limit: limits.f_max,
        });
    }
    if f_norm < limits.f_min {
        return Some(Violation {
            time_s: t,
            kind: ViolationKind::Thrust,
            value: f_norm,
            limit: limits.f_min,
        });
    }
    // tilt test in the robust form ‖f‖·cos(θ_max) ≤ f_z; the reported value
    // is the equivalent angle from vertical
    if thrust.z < f_norm * limits.theta_max_deg.to_radians().cos() {
        let angle_deg = (thrust.z / f_norm).clamp(-1.0, 1.0).acos().to_degrees();
        return Some(Violation {
            time_s: t,
            kind: ViolationKind::Tilt,
            value: angle_deg,
            limit: limits.theta_max_deg,
        });
    }
    let speed = velocity.norm();
    if speed > limits.v_max {
        return Some(Violation {
            time_s: t,
            kind: ViolationKind::Velocity,
            value: speed,
            limit: limits.v_max,
        });
    }
    if omega_norm > limits.omega_max {
        return Some(Violation {
            time_s: t,
            kind: ViolationKind::Omega,
            value: omega_norm,
            limit: limits.omega_max,
        });
    }
    None
}
