//! Jerk-penalized minimum-effort / minimum-time triple integrator.
//!
//! For a fixed duration `T` the optimal jerk is quadratic in time, so each
//! axis is the unique quintic through `p(0), v(0), a(0), p(T), v(T)` with the
//! free-terminal-acceleration transversality condition `jerk(T) = 0`. The
//! total cost `J(T) = rho*T + sum_axes \int_0^T j^2 dt` has a control term
//! that is rational in `T`, so `dJ/dT = 0` clears to a degree-6 polynomial
//! whose real positive roots are the candidate durations.

use super::{BoundaryState, PolynomialTrajectory, PrimitiveError};
use crate::math::{polyder, polymul, polynomial_roots, polyval};

/// Output of [`lqmt_optimal`]: the minimizing duration, the quintic flown
/// over it, and the achieved cost `rho*T* + \int |j|^2`.
#[derive(Debug, Clone)]
pub struct LqmtSolution {
    pub t_final: f64,
    pub trajectory: PolynomialTrajectory,
    pub cost: f64,
}

/// Durations below this are refused as ill-conditioned: the quintic
/// coefficients scale as `T^-5` and lose all accuracy.
const T_MIN_CONDITIONED: f64 = 1e-6;

/// Optimal durations are clamped up to this floor; far below it the
/// stationarity polynomial itself is no longer trustworthy.
const T_STAR_FLOOR: f64 = 1e-3;

fn validate_boundaries(x0: &BoundaryState, xf: &BoundaryState) -> Result<(), PrimitiveError> {
    if !x0.is_finite() || !xf.is_finite() {
        return Err(PrimitiveError::InvalidParameter(
            "boundary states must be finite".into(),
        ));
    }
    if xf.acceleration.is_some() {
        return Err(PrimitiveError::InvalidParameter(
            "terminal acceleration is free and must be absent".into(),
        ));
    }
    Ok(())
}

/// Quintic connecting `x0` (position, velocity, acceleration — absent means
/// zero) to `xf` (position, velocity; terminal acceleration free) in exactly
/// `t_final` seconds.
pub fn lqmt_fixed_t(
    x0: &BoundaryState,
    xf: &BoundaryState,
    t_final: f64,
) -> Result<PolynomialTrajectory, PrimitiveError> {
    validate_boundaries(x0, xf)?;
    if !(t_final > 0.0) || !t_final.is_finite() {
        return Err(PrimitiveError::InvalidParameter(format!(
            "duration must be positive and finite, got {t_final}"
        )));
    }
    if t_final < T_MIN_CONDITIONED {
        return Err(PrimitiveError::IllConditioned { t_final });
    }

    let t = t_final;
    let a0 = x0.accel_or_zero();
    let mut coeffs: [Vec<f64>; 3] = Default::default();
    for axis in 0..3 {
        let (p0, v0, acc0) = (x0.position[axis], x0.velocity[axis], a0[axis]);
        let (pf, vf) = (xf.position[axis], xf.velocity[axis]);
        // residuals after removing the zero-jerk continuation of x0
        let p = (pf - p0) - v0 * t - 0.5 * acc0 * t * t;
        let y = (vf - v0 - acc0 * t) * t;
        let t3 = t * t * t;
        let c3 = (20.0 * p - 6.0 * y) / (3.0 * t3);
        let c4 = (9.0 * y - 25.0 * p) / (3.0 * t3 * t);
        let c5 = (8.0 * p - 3.0 * y) / (3.0 * t3 * t * t);
        coeffs[axis] = vec![p0, v0, 0.5 * acc0, c3, c4, c5];
    }
    Ok(PolynomialTrajectory::single_piece(t_final, coeffs))
}

// Stationarity ingredients for one axis: the control cost is
// C(T) = N(T) / T^5 with N = 320 P^2 - 240 P Y + 48 Y^2, where
// P(T) = dp - v0 T - a0/2 T^2 and Y(T) = dv T - a0 T^2 are the boundary
// residuals as polynomials in T.
fn axis_numerator(x0: &BoundaryState, xf: &BoundaryState, axis: usize) -> Vec<f64> {
    let a0 = x0.accel_or_zero();
    let dp = xf.position[axis] - x0.position[axis];
    let dv = xf.velocity[axis] - x0.velocity[axis];
    let p = [dp, -x0.velocity[axis], -0.5 * a0[axis]];
    let y = [0.0, dv, -a0[axis]];
    let pp = polymul(&p, &p);
    let py = polymul(&p, &y);
    let yy = polymul(&y, &y);
    let mut n = vec![0.0; 5];
    for k in 0..5 {
        n[k] = 320.0 * pp[k] - 240.0 * py[k] + 48.0 * yy[k];
    }
    n
}

/// Jointly optimal duration and quintic for the jerk-penalized minimum-time
/// problem with time penalty `rho > 1`.
///
/// `d(rho*T + C(T))/dT = 0` multiplied by `T^6` gives
/// `rho T^6 + sum_axes sum_k (k-5) n_k T^k = 0`; the real positive roots are
/// found via companion-matrix eigenvalues, polished by safeguarded Newton,
/// and the one with smallest `J` wins. Identical boundaries at rest return a
/// zero-duration stationary trajectory with zero cost.
pub fn lqmt_optimal(
    x0: &BoundaryState,
    xf: &BoundaryState,
    rho: f64,
) -> Result<LqmtSolution, PrimitiveError> {
    validate_boundaries(x0, xf)?;
    if !(rho > 1.0) || !rho.is_finite() {
        return Err(PrimitiveError::InvalidParameter(format!(
            "time penalty rho must exceed 1, got {rho}"
        )));
    }
    if x0.position == xf.position
        && x0.velocity == xf.velocity
        && x0.velocity == crate::Vec3::zeros()
        && x0.accel_or_zero() == crate::Vec3::zeros()
    {
        return Ok(LqmtSolution {
            t_final: 0.0,
            trajectory: PolynomialTrajectory::stationary(x0.position),
            cost: 0.0,
        });
    }

    // total control-cost numerator N(T) = C(T) * T^5, degree <= 4
    let mut numerator = vec![0.0; 5];
    for axis in 0..3 {
        for (k, nk) in axis_numerator(x0, xf, axis).into_iter().enumerate() {
            numerator[k] += nk;
        }
    }
    // stationarity polynomial G(T) = rho T^6 + sum_k (k-5) n_k T^k
    let mut g = vec![0.0; 7];
    g[6] = rho;
    for (k, &nk) in numerator.iter().enumerate() {
        g[k] += (k as f64 - 5.0) * nk;
    }
    let dg = polyder(&g);
    let cost_at = |t: f64| rho * t + polyval(&numerator, t) / t.powi(5);

    let mut best: Option<(f64, f64)> = None;
    for z in polynomial_roots(&g) {
        if z.im.abs() >= 1e-8 * (1.0 + z.re.abs()) || z.re <= 0.0 {
            continue;
        }
        let t = polish_root(&g, &dg, z.re);
        let j = cost_at(t);
        if j.is_finite() && best.map_or(true, |(_, jb)| j < jb) {
            best = Some((t, j));
        }
    }
    let (t_star, _) = best.ok_or(PrimitiveError::RootFailure)?;
    let t_star = t_star.max(T_STAR_FLOOR);
    let trajectory = lqmt_fixed_t(x0, xf, t_star)?;
    let cost = rho * t_star + trajectory.jerk_cost();
    Ok(LqmtSolution {
        t_final: t_star,
        trajectory,
        cost,
    })
}

// Newton refinement of an eigenvalue root of `g`, damped so iterates stay
// positive and never increase |g|.
fn polish_root(g: &[f64], dg: &[f64], mut t: f64) -> f64 {
    for _ in 0..20 {
        let f = polyval(g, t);
        if f == 0.0 {
            break;
        }
        let d = polyval(dg, t);
        if d == 0.0 {
            break;
        }
        let mut step = f / d;
        while t - step <= 0.0 || step.abs() > 0.5 * t.abs() {
            step *= 0.5;
            if step.abs() < f64::MIN_POSITIVE {
                return t;
            }
        }
        let next = t - step;
        if polyval(g, next).abs() > f.abs() {
            break;
        }
        t = next;
        if step.abs() <= 1e-14 * (1.0 + t) {
            break;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vec3;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pair(rng: &mut ChaCha8Rng) -> (BoundaryState, BoundaryState) {
        let dir = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let dir = if dir.norm() < 1e-6 { Vec3::x() } else { dir.normalize() };
        let x0 = BoundaryState::with_acceleration(
            Vec3::from_fn(|_, _| rng.gen_range(-10.0..10.0)),
            dir * rng.gen_range(0.0..10.0),
            Vec3::from_fn(|_, _| rng.gen_range(-5.0..5.0)),
        );
        let dir = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
        let dir = if dir.norm() < 1e-6 { Vec3::y() } else { dir.normalize() };
        let xf = BoundaryState::new(
            Vec3::from_fn(|_, _| rng.gen_range(-10.0..10.0)),
            dir * rng.gen_range(0.0..10.0),
        );
        (x0, xf)
    }

    #[test]
    fn fixed_t_stationary_boundary_has_zero_cost() {
        let x = BoundaryState::at_rest(Vec3::new(1.0, -2.0, 0.5));
        let xf = BoundaryState::new(x.position, Vec3::zeros());
        let tr = lqmt_fixed_t(&x, &xf, 3.0).unwrap();
        assert_eq!(tr.jerk_cost(), 0.0);
        assert_eq!(tr.evaluate(1.5, 0).unwrap(), x.position);
        assert_eq!(tr.evaluate(1.5, 1).unwrap(), Vec3::zeros());
    }

    #[test]
    fn fixed_t_matches_boundary_conditions_and_transversality() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let (x0, xf) = random_pair(&mut rng);
            let t = rng.gen_range(0.3..8.0);
            let tr = lqmt_fixed_t(&x0, &xf, t).unwrap();
            assert!((tr.evaluate(0.0, 0).unwrap() - x0.position).norm() < 1e-9);
            assert!((tr.evaluate(0.0, 1).unwrap() - x0.velocity).norm() < 1e-9);
            assert!((tr.evaluate(0.0, 2).unwrap() - x0.accel_or_zero()).norm() < 1e-9);
            let p_err = (tr.evaluate(t, 0).unwrap() - xf.position).norm();
            let v_err = (tr.evaluate(t, 1).unwrap() - xf.velocity).norm();
            assert!(p_err < 1e-9 && v_err < 1e-9, "endpoint miss {p_err} {v_err}");
            // free terminal acceleration <=> zero terminal jerk
            let j_end = tr.evaluate(t, 3).unwrap().norm();
            let j_scale = 1.0 + tr.evaluate(0.0, 3).unwrap().norm();
            assert!(j_end < 1e-7 * j_scale, "transversality violated: {j_end}");
        }
    }

    #[test]
    fn fixed_t_cost_matches_quadrature_oracle() {
        // 1D rest-to-rest 0 -> 1 over T = 2
        let x0 = BoundaryState::at_rest(Vec3::zeros());
        let xf = BoundaryState::new(Vec3::new(1.0, 0.0, 0.0), Vec3::zeros());
        let tr = lqmt_fixed_t(&x0, &xf, 2.0).unwrap();
        let n = 40_000;
        let h = 2.0 / n as f64;
        let f = |t: f64| tr.evaluate(t, 3).unwrap().norm_squared();
        let mut sum = f(0.0) + f(2.0);
        for i in 1..n {
            sum += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        let quad = sum * h / 3.0;
        assert_relative_eq!(tr.jerk_cost(), quad, max_relative = 1e-9);
        // closed form for rest-to-rest: 320 dp^2 / T^5
        assert_relative_eq!(tr.jerk_cost(), 320.0 / 32.0, max_relative = 1e-12);
    }

    #[test]
    fn fixed_t_rejects_bad_durations_and_boundaries() {
        let x0 = BoundaryState::at_rest(Vec3::zeros());
        let xf = BoundaryState::new(Vec3::x(), Vec3::zeros());
        assert!(matches!(
            lqmt_fixed_t(&x0, &xf, 0.0),
            Err(PrimitiveError::InvalidParameter(_))
        ));
        assert!(matches!(
            lqmt_fixed_t(&x0, &xf, -1.0),
            Err(PrimitiveError::InvalidParameter(_))
        ));
        assert!(matches!(
            lqmt_fixed_t(&x0, &xf, 1e-7),
            Err(PrimitiveError::IllConditioned { .. })
        ));
        let xf_acc = BoundaryState::at_rest(Vec3::x());
        assert!(matches!(
            lqmt_fixed_t(&x0, &xf_acc, 1.0),
            Err(PrimitiveError::InvalidParameter(_))
        ));
    }

    #[test]
    fn optimal_degenerate_rest_boundary() {
        let x = BoundaryState::at_rest(Vec3::new(2.0, 2.0, 2.0));
        let xf = BoundaryState::new(x.position, Vec3::zeros());
        let sol = lqmt_optimal(&x, &xf, 1000.0).unwrap();
        assert_eq!(sol.t_final, 0.0);
        assert_eq!(sol.cost, 0.0);
        assert_eq!(sol.trajectory.duration(), 0.0);
    }

    #[test]
    fn optimal_rejects_bad_rho() {
        let x0 = BoundaryState::at_rest(Vec3::zeros());
        let xf = BoundaryState::new(Vec3::x(), Vec3::zeros());
        assert!(lqmt_optimal(&x0, &xf, 1.0).is_err());
        assert!(lqmt_optimal(&x0, &xf, 0.5).is_err());
    }

    #[test]
    fn optimal_unit_step_matches_analytic_minimum() {
        // rest-to-rest 0 -> 1: J(T) = rho T + 320/T^5, minimized at
        // T* = (1600/rho)^(1/6)
        let x0 = BoundaryState::at_rest(Vec3::zeros());
        let xf = BoundaryState::new(Vec3::x(), Vec3::zeros());
        let sol = lqmt_optimal(&x0, &xf, 1000.0).unwrap();
        let t_expected = (1600.0_f64 / 1000.0).powf(1.0 / 6.0);
        assert_relative_eq!(sol.t_final, t_expected, max_relative = 1e-9);
        let j_expected = 1000.0 * t_expected + 320.0 / t_expected.powi(5);
        assert_relative_eq!(sol.cost, j_expected, max_relative = 1e-9);
    }

    #[test]
    fn optimal_matches_grid_search_oracle() {
        let x0 = BoundaryState::at_rest(Vec3::zeros());
        let xf = BoundaryState::new(Vec3::x(), Vec3::zeros());
        for rho in [100.0, 1000.0] {
            let sol = lqmt_optimal(&x0, &xf, rho).unwrap();
            // coarse scan of J over (0, 10], then refine around the best cell
            let eval = |t: f64| rho * t + lqmt_fixed_t(&x0, &xf, t).unwrap().jerk_cost();
            let coarse = 1e-2;
            let mut best_t = coarse;
            let mut best_j = f64::INFINITY;
            for i in 1..=1000 {
                let t = coarse * i as f64;
                let j = eval(t);
                if j < best_j {
                    best_j = j;
                    best_t = t;
                }
            }
            let lo = (best_t - coarse).max(1e-4);
            let mut t = lo;
            while t <= best_t + coarse {
                best_j = best_j.min(eval(t));
                t += 1e-4;
            }
            assert!(
                (sol.cost - best_j).abs() <= 1e-3 * best_j,
                "rho={rho}: analytic {} vs oracle {best_j}",
                sol.cost
            );
        }
    }

    #[test]
    fn optimal_duration_shrinks_with_larger_rho() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let (x0, xf) = random_pair(&mut rng);
            let t_lo = lqmt_optimal(&x0, &xf, 200.0).unwrap().t_final;
            let t_hi = lqmt_optimal(&x0, &xf, 400.0).unwrap().t_final;
            assert!(t_hi <= t_lo + 1e-9, "T*({}) vs T*({})", t_lo, t_hi);
        }
    }

    #[test]
    fn optimal_is_stationary_by_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let (x0, xf) = random_pair(&mut rng);
            let sol = lqmt_optimal(&x0, &xf, 1000.0).unwrap();
            if sol.t_final <= T_STAR_FLOOR {
                continue;
            }
            let j = |t: f64| 1000.0 * t + lqmt_fixed_t(&x0, &xf, t).unwrap().jerk_cost();
            let h = 1e-6 * sol.t_final;
            let dj = (j(sol.t_final + h) - j(sol.t_final - h)) / (2.0 * h);
            assert!(
                dj.abs() <= 1e-6 * (1.0 + sol.cost.abs()),
                "dJ/dT = {dj} at T* = {}",
                sol.t_final
            );
        }
    }

    #[test]
    fn admissibility_kernel_bounds_cost_from_below() {
        // per-axis peak accelerations achievable inside the thrust/tilt set:
        // lateral f_max sin(theta_max), vertical max(f_max - g, g - f_min)
        let f_max = 18.75;
        let f_min = 0.85;
        let g = 9.81;
        let theta_max = 60.0_f64.to_radians();
        let u = Vec3::new(
            f_max * theta_max.sin(),
            f_max * theta_max.sin(),
            (f_max - g).max(g - f_min),
        );
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for rho in [100.0, 1000.0] {
            for _ in 0..500 {
                let (x0, xf) = random_pair(&mut rng);
                let j_star = lqmt_optimal(&x0, &xf, rho).unwrap().cost;
                let t_d = crate::primitives::min_time_3d(
                    &BoundaryState::new(x0.position, x0.velocity),
                    &BoundaryState::new(xf.position, xf.velocity),
                    &u,
                )
                .unwrap()
                .t_final;
                assert!(
                    rho * t_d <= j_star * (1.0 + 1e-9),
                    "rho={rho}: rho*T_d = {} exceeds J* = {j_star}",
                    rho * t_d
                );
            }
        }
    }
}
