//! Small numeric helpers shared across modules.

use crate::Vec3;

/// Half the diagonal of a cube with the given edge length.
pub fn half_diagonal(edge: f64) -> f64 {
    0.5 * 3.0f64.sqrt() * edge
}

/// Returns an arbitrary unit vector orthogonal to `v` (`v` must be nonzero).
///
/// The seed axis is the coordinate axis along which `v` has the smallest
/// magnitude, so the result is deterministic and well conditioned.
pub fn orthonormal_to(v: &Vec3) -> Vec3 {
    let a = [v.x.abs(), v.y.abs(), v.z.abs()];
    let k = if a[0] <= a[1] && a[0] <= a[2] {
        0
    } else if a[1] <= a[2] {
        1
    } else {
        2
    };
    let mut e = Vec3::zeros();
    e[k] = 1.0;
    let vn = v.normalize();
    let u = e - vn * vn.dot(&e);
    u.normalize()
}

/// Evaluates a polynomial given ascending-power coefficients (Horner).
pub fn polyval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Ascending-power coefficients of the derivative.
pub fn polyder(coeffs: &[f64]) -> Vec<f64> {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, &c)| k as f64 * c)
        .collect()
}

/// Product of two ascending-power coefficient slices.
pub fn polymul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, &ai) in a.iter().enumerate() {
        for (j, &bj) in b.iter().enumerate() {
            out[i + j] += ai * bj;
        }
    }
    out
}

/// All complex roots of the polynomial with ascending-power `coeffs`, as the
/// eigenvalues of its companion matrix. Leading coefficients that are
/// negligible relative to the largest magnitude are dropped first; constant
/// or zero polynomials have no roots.
///
/// The QR iteration is run with a bounded iteration budget because it can
/// cycle indefinitely when all eigenvalues share one modulus (companion of
/// `x^n - c`, which arises for every single-axis rest-to-rest boundary); on
/// non-convergence a Durand-Kerner sweep takes over.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<nalgebra::Complex<f64>> {
    let max_mag = coeffs.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if max_mag == 0.0 {
        return Vec::new();
    }
    let mut len = coeffs.len();
    while len > 0 && coeffs[len - 1].abs() <= 1e-14 * max_mag {
        len -= 1;
    }
    if len <= 1 {
        return Vec::new();
    }
    let lead = coeffs[len - 1];
    let monic: Vec<f64> = coeffs[..len - 1].iter().map(|c| c / lead).collect();
    let n = monic.len();
    let companion = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        if c == n - 1 {
            -monic[r]
        } else if r == c + 1 {
            1.0
        } else {
            0.0
        }
    });
    if let Some(schur) = nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 500) {
        return schur.complex_eigenvalues().iter().copied().collect();
    }
    durand_kerner(&monic)
}

// Simultaneous root iteration for a monic polynomial given by its lower
// coefficients `a_0..a_{n-1}` (leading 1 implied). The standard asymmetric
// starting points avoid the real-axis symmetry that stalls the update.
fn durand_kerner(monic: &[f64]) -> Vec<nalgebra::Complex<f64>> {
    type C = nalgebra::Complex<f64>;
    let n = monic.len();
    let eval = |z: C| {
        let mut acc = C::new(1.0, 0.0);
        for &a in monic.iter().rev() {
            acc = acc * z + a;
        }
        acc
    };
    let seed = C::new(0.4, 0.9);
    let mut z: Vec<C> = std::iter::successors(Some(seed), |p| Some(p * seed))
        .take(n)
        .collect();
    for _ in 0..1000 {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let mut denom = C::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= z[i] - z[j];
                }
            }
            if denom.norm() == 0.0 {
                z[i] += C::new(1e-8, 1e-8);
                worst = f64::INFINITY;
                continue;
            }
            let delta = eval(z[i]) / denom;
            z[i] -= delta;
            worst = worst.max(delta.norm() / (1.0 + z[i].norm()));
        }
        if worst < 1e-14 {
            break;
        }
    }
    z
}
