//! Minimum-time double integrator under symmetric input bounds.
//!
//! The time-optimal control is bang-bang with at most one switch: accelerate
//! at `sigma * u_max`, then at `-sigma * u_max`. For each switch ordering the
//! arc durations solve a quadratic in closed form; the minimum feasible
//! candidate over both orderings is the answer. The 3D problem decouples per
//! axis and is decided by the slowest one.

use super::{BoundaryState, PolynomialTrajectory, PrimitiveError};
use crate::Vec3;

/// One-axis bang-bang profile: accelerate at `u_first` for `t_switch`
/// seconds, then at `-u_first` until `t_final`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisBangBang {
    pub s0: f64,
    pub v0: f64,
    /// Signed first-arc acceleration, `sigma * u_max`.
    pub u_first: f64,
    pub t_switch: f64,
    pub t_final: f64,
}

impl AxisBangBang {
    /// Position and velocity at `t` (clamped to `[0, t_final]`).
    pub fn evaluate(&self, t: f64) -> (f64, f64) {
        let t = t.clamp(0.0, self.t_final);
        let u = self.u_first;
        if t <= self.t_switch {
            (
                self.s0 + self.v0 * t + 0.5 * u * t * t,
                self.v0 + u * t,
            )
        } else {
            let ts = self.t_switch;
            let s1 = self.s0 + self.v0 * ts + 0.5 * u * ts * ts;
            let v1 = self.v0 + u * ts;
            let dt = t - ts;
            (s1 + v1 * dt - 0.5 * u * dt * dt, v1 - u * dt)
        }
    }

}

/// Full 3D record: per-axis profiles plus the binding duration
/// `t_final = max_axis t_final_axis`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BangBangSolution {
    pub axes: [AxisBangBang; 3],
    pub t_final: f64,
}

impl BangBangSolution {
    /// Piecewise-quadratic trajectory for visualization and tests. Axes
    /// finishing before `t_final` coast at their terminal velocity, keeping
    /// position and velocity continuous (acceleration jumps at switches).
    pub fn trajectory(&self) -> PolynomialTrajectory {
        // union of all axis switch/final times strictly inside (0, t_final)
        let mut cuts: Vec<f64> = Vec::new();
        for ax in &self.axes {
            for &t in &[ax.t_switch, ax.t_final] {
                if t > 1e-12 && t < self.t_final - 1e-12 {
                    cuts.push(t);
                }
            }
        }
        cuts.sort_by(|a, b| a.total_cmp(b));
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-12);

        let mut axes: [Vec<Vec<f64>>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        let mut starts = vec![0.0];
        starts.extend_from_slice(&cuts);
        for (axis, ax) in self.axes.iter().enumerate() {
            for &start in &starts {
                let (s, v, acc) = if start >= ax.t_final {
                    let (sf, vf) = ax.evaluate(ax.t_final);
                    (sf + vf * (start - ax.t_final), vf, 0.0)
                } else {
                    let (s, v) = ax.evaluate(start);
                    let acc = if start < ax.t_switch { ax.u_first } else { -ax.u_first };
                    (s, v, acc)
                };
                axes[axis].push(vec![s, v, 0.5 * acc]);
            }
        }
        PolynomialTrajectory::piecewise(cuts, self.t_final, axes)
    }
}

// Forgive tiny negative arc durations from floating-point cancellation.
const ARC_EPS: f64 = 1e-9;

/// Minimum time to drive one double-integrator axis from `(s0, v0)` to
/// `(sf, vf)` with `|u| <= u_max`.
pub fn min_time_1d(
    s0: f64,
    v0: f64,
    sf: f64,
    vf: f64,
    u_max: f64,
) -> Result<AxisBangBang, PrimitiveError> {
    if !(u_max > 0.0) || !u_max.is_finite() {
        return Err(PrimitiveError::InvalidParameter(format!(
            "u_max must be positive and finite, got {u_max}"
        )));
    }
    for (name, v) in [("s0", s0), ("v0", v0), ("sf", sf), ("vf", vf)] {
        if !v.is_finite() {
            return Err(PrimitiveError::InvalidParameter(format!(
                "{name} must be finite, got {v}"
            )));
        }
    }
    if s0 == sf && v0 == vf {
        return Ok(AxisBangBang {
            s0,
            v0,
            u_first: u_max,
            t_switch: 0.0,
            t_final: 0.0,
        });
    }

    let ds = sf - s0;
    let dv = vf - v0;
    let mut best: Option<AxisBangBang> = None;
    for sigma in [1.0, -1.0] {
        let a = sigma * u_max;
        // First-arc duration t1 solves a*t1^2 + 2*v0*t1 - (disc - v0^2)/a = 0,
        // i.e. t1 = (-v0 +/- sqrt(disc)) / a with
        // disc = (v0^2 + vf^2)/2 + a*ds.
        let disc = 0.5 * (v0 * v0 + vf * vf) + a * ds;
        if disc < 0.0 {
            continue;
        }
        let sq = disc.sqrt();
        // Evaluate both roots, using the conjugate form for whichever
        // numerator suffers cancellation.
        let (num_plus, num_minus) = if v0 >= 0.0 {
            let plus = if sq + v0 > 0.0 { (disc - v0 * v0) / (sq + v0) } else { 0.0 };
            (plus, -(v0 + sq))
        } else {
            let minus = if sq - v0 > 0.0 { (v0 * v0 - disc) / (sq - v0) } else { 0.0 };
            (sq - v0, minus)
        };
        for num in [num_plus, num_minus] {
            let t1 = num / a;
            let t2 = t1 - dv / a;
            if t1 < -ARC_EPS || t2 < -ARC_EPS {
                continue;
            }
            let t1 = t1.max(0.0);
            let t2 = t2.max(0.0);
            let t_final = t1 + t2;
            if best.as_ref().map_or(true, |b| t_final < b.t_final) {
                best = Some(AxisBangBang {
                    s0,
                    v0,
                    u_first: a,
                    t_switch: t1,
                    t_final,
                });
            }
        }
    }
    // At least one ordering always admits a non-negative-duration solution.
    best.ok_or(PrimitiveError::RootFailure)
}

/// Minimum time for the 3D double integrator with per-axis bounds `u_max`;
/// the answer is the slowest axis since axes decouple. Boundary states are
/// double-integrator states and must not carry accelerations.
pub fn min_time_3d(
    x0: &BoundaryState,
    xf: &BoundaryState,
    u_max: &Vec3,
) -> Result<BangBangSolution, PrimitiveError> {
    if x0.acceleration.is_some() || xf.acceleration.is_some() {
        return Err(PrimitiveError::InvalidParameter(
            "double-integrator boundary states must not carry acceleration".into(),
        ));
    }
    let (p0, v0, pf, vf) = (&x0.position, &x0.velocity, &xf.position, &xf.velocity);
    let axes = [
        min_time_1d(p0.x, v0.x, pf.x, vf.x, u_max.x)?,
        min_time_1d(p0.y, v0.y, pf.y, vf.y, u_max.y)?,
        min_time_1d(p0.z, v0.z, pf.z, vf.z, u_max.z)?,
    ];
    let t_final = axes.iter().map(|a| a.t_final).fold(0.0, f64::max);
    Ok(BangBangSolution { axes, t_final })
}
