//! Chord distances, the power-law potential and its derivatives, the
//! interaction matrix, and the centredness diagnostics.
//!
//! For bodies at angles `θ_j`, `θ_k` on the unit circle the chord is
//! `r_jk = |2 sin((θ_j − θ_k)/2)|`, and the potential is
//! `U_α = Σ_{i<j} m_i m_j r_ij^(−α)`. Differentiating the chord formula gives
//!
//! ```text
//! ∂U_α/∂θ_k = −(α/2) m_k Σ_{j≠k} m_j r_jk^(−α) cot((θ_k − θ_j)/2)
//! ```
//!
//! and each pair term `f(d) = m_i m_j r^(−α)` of `d = θ_i − θ_j` has
//! `f''(d) = (α/4) m_i m_j r^(−α) (α cot²(d/2) + csc²(d/2)) > 0`, so `U_α` is
//! strictly convex on the gauge-fixed configuration space.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sum::{self, Compensated};
use crate::types::{AngleConfig, MassVector};

/// Chords shorter than this are treated as collisions.
pub const COLLISION_THRESHOLD: f64 = 1e-13;

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidExponent(alpha))
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Half-angle sine of the separation, with the collision check applied.
#[inline]
fn half_sine(angles: &[f64], i: usize, j: usize) -> Result<(f64, f64)> {
    let half = 0.5 * (angles[i] - angles[j]);
    let s = half.sin();
    let r = 2.0 * s.abs();
    if r < COLLISION_THRESHOLD || !r.is_finite() {
        return Err(Error::Collision {
            i: i + 1,
            j: j + 1,
            distance: r,
        });
    }
    Ok((half, s))
}

/// `|2 sin((θ_j − θ_k)/2)|`, the chord between two points of the unit circle.
pub fn chord_distance(theta_j: f64, theta_k: f64) -> Result<f64> {
    half_sine(&[theta_j, theta_k], 0, 1).map(|(_, s)| 2.0 * s.abs())
}

/// Cartesian positions `(cos θ_i, sin θ_i)`. The pinned `θ_n = 2π` maps to
/// exactly `(1, 0)`.
pub fn positions(theta: &AngleConfig) -> Vec<[f64; 2]> {
    theta
        .as_slice()
        .iter()
        .map(|&t| {
            if t == std::f64::consts::TAU {
                return [1.0, 0.0];
            }
            let (s, c) = t.sin_cos();
            [c, s]
        })
        .collect()
}

pub fn potential(m: &MassVector, theta: &AngleConfig, alpha: f64) -> Result<f64> {
    check_len(m.len(), theta.len())?;
    potential_raw(m.as_slice(), theta.as_slice(), alpha)
}

/// Potential on raw angles; only requires distinct points, not the gauge.
pub(crate) fn potential_raw(masses: &[f64], angles: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let n = masses.len();
    let mut acc = Compensated::default();
    for i in 0..n {
        for j in i + 1..n {
            let (_, s) = half_sine(angles, i, j)?;
            acc.add(masses[i] * masses[j] * (2.0 * s.abs()).powf(-alpha));
        }
    }
    Ok(acc.value())
}

/// Analytic `∂U_α/∂θ_k` for every body, including the pinned last one.
pub fn potential_gradient(m: &MassVector, theta: &AngleConfig, alpha: f64) -> Result<Vec<f64>> {
    check_len(m.len(), theta.len())?;
    gradient_raw(m.as_slice(), theta.as_slice(), alpha)
}

pub(crate) fn gradient_raw(masses: &[f64], angles: &[f64], alpha: f64) -> Result<Vec<f64>> {
    check_alpha(alpha)?;
    let n = masses.len();
    let mut acc = vec![Compensated::default(); n];
    for i in 0..n {
        for j in i + 1..n {
            let (half, s) = half_sine(angles, i, j)?;
            let r_pow = (2.0 * s.abs()).powf(-alpha);
            let t = 0.5 * alpha * masses[i] * masses[j] * r_pow * half.cos() / s;
            acc[i].add(-t);
            acc[j].add(t);
        }
    }
    Ok(acc.iter().map(Compensated::value).collect())
}

/// `U_α(trial) − U_α(angles)` evaluated pair by pair from the angle
/// increments, so that changes far below the round-off of `U_α` itself keep
/// their sign. Both configurations must have the same cyclic order.
pub(crate) fn potential_change(masses: &[f64], angles: &[f64], trial: &[f64], alpha: f64) -> Result<f64> {
    let n = masses.len();
    let delta: Vec<f64> = trial.iter().zip(angles).map(|(t, a)| t - a).collect();
    let mut acc = Compensated::default();
    for i in 0..n {
        for j in i + 1..n {
            let (half, s) = half_sine(angles, i, j)?;
            half_sine(trial, i, j)?;
            let eps = 0.5 * (delta[i] - delta[j]);
            let ds = 2.0 * (half + 0.5 * eps).cos() * (0.5 * eps).sin();
            let r_pow = (2.0 * s.abs()).powf(-alpha);
            acc.add(masses[i] * masses[j] * r_pow * (-alpha * (ds / s).ln_1p()).exp_m1());
        }
    }
    Ok(acc.value())
}

/// Hessian of `U_α` restricted to the free angles `θ_1..θ_{n-1}`.
pub(crate) fn free_hessian(masses: &[f64], angles: &[f64], alpha: f64) -> Result<DMatrix<f64>> {
    let n = masses.len();
    let mut h = DMatrix::<f64>::zeros(n - 1, n - 1);
    for i in 0..n {
        for j in i + 1..n {
            let (half, s) = half_sine(angles, i, j)?;
            let r_pow = (2.0 * s.abs()).powf(-alpha);
            let cot = half.cos() / s;
            let csc2 = 1.0 / (s * s);
            let w = 0.25 * alpha * masses[i] * masses[j] * r_pow * (alpha * cot * cot + csc2);
            if i < n - 1 {
                h[(i, i)] += w;
            }
            if j < n - 1 {
                h[(j, j)] += w;
            }
            if i < n - 1 && j < n - 1 {
                h[(i, j)] -= w;
                h[(j, i)] -= w;
            }
        }
    }
    Ok(h)
}

/// Symmetric matrix of inverse chord powers `r_ij^(−α)` with zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionMatrix {
    n: usize,
    alpha: f64,
    entries: Vec<f64>,
}

impl InteractionMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Entry at zero-based `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    /// Entry for one-based body labels, as written in proofs (`r_{l,n-l}` etc.).
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.get(i - 1, j - 1)
    }

    pub fn max_off_diagonal(&self) -> f64 {
        self.entries.iter().copied().fold(0.0, f64::max)
    }
}

pub fn interaction_matrix(theta: &AngleConfig, alpha: f64) -> Result<InteractionMatrix> {
    check_alpha(alpha)?;
    let angles = theta.as_slice();
    let n = angles.len();
    let mut entries = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let (_, s) = half_sine(angles, i, j)?;
            let v = (2.0 * s.abs()).powf(-alpha);
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(InteractionMatrix { n, alpha, entries })
}

/// `vᵀ H v`.
pub fn quadratic_form(h: &InteractionMatrix, v: &[f64]) -> Result<f64> {
    bilinear_form(h, v, v)
}

/// `uᵀ H v`.
pub fn bilinear_form(h: &InteractionMatrix, u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(h.n, u.len())?;
    check_len(h.n, v.len())?;
    let n = h.n;
    Ok(sum::sum((0..n).flat_map(|i| {
        (0..n)
            .filter(move |&j| j != i)
            .map(move |j| u[i] * h.get(i, j) * v[j])
    })))
}

/// How far a configuration is from satisfying both centred co-circular
/// conditions: zero angular gradient and equal weighted row sums.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentrednessDiagnostics {
    pub center_of_mass: [f64; 2],
    pub com_norm: f64,
    /// `S_k = Σ_{j≠k} m_j r_jk^(−α)`.
    pub row_sums: Vec<f64>,
    pub row_spread: f64,
    /// `(α/2)·mean(S_k)`; a diagnostic convention for the multiplier `λ`.
    pub lambda_estimate: f64,
    /// `max_k |∂U_α/∂θ_k|`.
    pub grad_norm: f64,
}

pub fn centredness_diagnostics(
    m: &MassVector,
    theta: &AngleConfig,
    alpha: f64,
) -> Result<CentrednessDiagnostics> {
    check_len(m.len(), theta.len())?;
    check_alpha(alpha)?;
    let masses = m.as_slice();
    let angles = theta.as_slice();
    let n = masses.len();

    let mut rows = vec![Compensated::default(); n];
    let mut grad = vec![Compensated::default(); n];
    for i in 0..n {
        for j in i + 1..n {
            let (half, s) = half_sine(angles, i, j)?;
            let r_pow = (2.0 * s.abs()).powf(-alpha);
            rows[i].add(masses[j] * r_pow);
            rows[j].add(masses[i] * r_pow);
            let t = 0.5 * alpha * masses[i] * masses[j] * r_pow * half.cos() / s;
            grad[i].add(-t);
            grad[j].add(t);
        }
    }
    let row_sums: Vec<f64> = rows.iter().map(Compensated::value).collect();
    let (lo, hi) = row_sums
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mean = sum::sum(row_sums.iter().copied()) / n as f64;

    let total = m.total();
    let pos = positions(theta);
    let cx = sum::sum(masses.iter().zip(&pos).map(|(m, q)| m * q[0])) / total;
    let cy = sum::sum(masses.iter().zip(&pos).map(|(m, q)| m * q[1])) / total;

    Ok(CentrednessDiagnostics {
        center_of_mass: [cx, cy],
        com_norm: cx.hypot(cy),
        row_spread: hi - lo,
        lambda_estimate: 0.5 * alpha * mean,
        grad_norm: grad.iter().map(|g| g.value().abs()).fold(0.0, f64::max),
        row_sums,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};

    use super::*;

    fn square() -> AngleConfig {
        AngleConfig::new(vec![FRAC_PI_2, PI, 3.0 * FRAC_PI_2, TAU]).unwrap()
    }

    #[test]
    fn chord_examples() {
        assert!((chord_distance(0.0, PI).unwrap() - 2.0).abs() < 1e-15);
        assert!((chord_distance(0.0, FRAC_PI_2).unwrap() - SQRT_2).abs() < 1e-15);
        assert!((chord_distance(0.0, TAU / 3.0).unwrap() - 3f64.sqrt()).abs() < 1e-15);
        assert!(matches!(chord_distance(1.0, 1.0), Err(Error::Collision { .. })));
        assert!(matches!(chord_distance(0.0, TAU), Err(Error::Collision { .. })));
    }

    #[test]
    fn positions_of_square() {
        let q = positions(&square());
        let want = [[0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0]];
        for (a, b) in q.iter().zip(want) {
            assert!((a[0] - b[0]).abs() < 1e-15 && (a[1] - b[1]).abs() < 1e-15);
        }
        assert_eq!(q[3], [1.0, 0.0]);
    }

    #[test]
    fn potential_examples() {
        let tri = AngleConfig::regular(3).unwrap();
        let u = potential(&MassVector::equal(3).unwrap(), &tri, 1.0).unwrap();
        assert!((u - 3f64.sqrt()).abs() < 1e-14);

        let u = potential(&MassVector::equal(4).unwrap(), &square(), 2.0).unwrap();
        assert!((u - 2.5).abs() < 1e-14);
    }

    #[test]
    fn potential_matches_direct_summation() {
        // Positions-based pairwise sum, independent of the half-angle path.
        let m = MassVector::new(vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let theta = square();
        let q = positions(&theta);
        let mut want = 0.0;
        for i in 0..4 {
            for j in i + 1..4 {
                let r = (q[i][0] - q[j][0]).hypot(q[i][1] - q[j][1]);
                want += m[i] * m[j] / r;
            }
        }
        let got = potential(&m, &theta, 1.0).unwrap();
        assert!((got - want).abs() < 1e-13 * want);
    }

    #[test]
    fn rejects_bad_inputs() {
        let m = MassVector::equal(4).unwrap();
        assert!(matches!(
            potential(&m, &AngleConfig::regular(5).unwrap(), 1.0),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(potential(&m, &square(), 0.0), Err(Error::InvalidExponent(_))));
        assert!(matches!(potential(&m, &square(), -1.0), Err(Error::InvalidExponent(_))));
        let close = AngleConfig::new(vec![1.0, 1.0 + 1e-14, 3.0, TAU]).unwrap();
        assert!(matches!(potential(&m, &close, 1.0), Err(Error::Collision { i: 1, j: 2, .. })));
        assert!(potential_gradient(&m, &close, 1.0).is_err());
        assert!(interaction_matrix(&close, 1.0).is_err());
        assert!(centredness_diagnostics(&m, &close, 1.0).is_err());
    }

    #[test]
    fn gradient_vanishes_at_regular_polygon() {
        for n in 3..=12 {
            for alpha in [0.5, 1.0, 2.0, 3.0] {
                let g = potential_gradient(
                    &MassVector::equal(n).unwrap(),
                    &AngleConfig::regular(n).unwrap(),
                    alpha,
                )
                .unwrap();
                assert!(g.iter().all(|x| x.abs() < 1e-12), "n={n} α={alpha} {g:?}");
            }
        }
    }

    #[test]
    fn interaction_matrix_of_square() {
        let h = interaction_matrix(&square(), 1.0).unwrap();
        for i in 0..4 {
            assert_eq!(h.get(i, i), 0.0);
            for j in 0..4 {
                assert_eq!(h.get(i, j), h.get(j, i));
                if i != j {
                    let want = if (i + j) % 2 == 1 { 1.0 / SQRT_2 } else { 0.5 };
                    assert!((h.get(i, j) - want).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn regular_polygon_matrix_is_circulant() {
        let n = 7;
        let h = interaction_matrix(&AngleConfig::regular(n).unwrap(), 1.5).unwrap();
        for i in 0..n {
            for j in 0..n {
                let k = (j + n - i) % n;
                assert!((h.get(i, j) - h.get(0, k)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn quadratic_form_examples() {
        let h = interaction_matrix(&square(), 1.0).unwrap();
        assert_eq!(quadratic_form(&h, &[0.0; 4]).unwrap(), 0.0);
        let q = quadratic_form(&h, &[1.0, 0.0, -1.0, 0.0]).unwrap();
        assert!((q + 1.0).abs() < 1e-15);
        assert!(matches!(
            quadratic_form(&h, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn diagnostics_examples() {
        let d = centredness_diagnostics(
            &MassVector::new(vec![2.0, 1.0, 1.0, 1.0]).unwrap(),
            &square(),
            1.0,
        )
        .unwrap();
        assert!((d.com_norm - 0.2).abs() < 1e-15);
        assert!((d.center_of_mass[1] - 0.2).abs() < 1e-15);

        for n in 3..=12 {
            let d = centredness_diagnostics(
                &MassVector::equal(n).unwrap(),
                &AngleConfig::regular(n).unwrap(),
                1.0,
            )
            .unwrap();
            assert!(d.com_norm <= 1e-12 && d.row_spread <= 1e-12, "n={n} {d:?}");
            let mean = d.row_sums[0];
            assert!((d.lambda_estimate - 0.5 * mean).abs() < 1e-12);
        }
    }

    #[test]
    fn hessian_matches_gradient_differences() {
        let masses = [1.0, 2.5, 0.7, 1.3, 3.0];
        let angles = [0.9, 1.7, 3.1, 4.4, TAU];
        let alpha = 1.3;
        let h = free_hessian(&masses, &angles, alpha).unwrap();
        let step = 1e-6;
        for k in 0..4 {
            let mut up = angles;
            let mut dn = angles;
            up[k] += step;
            dn[k] -= step;
            let gu = gradient_raw(&masses, &up, alpha).unwrap();
            let gd = gradient_raw(&masses, &dn, alpha).unwrap();
            for i in 0..4 {
                let fd = (gu[i] - gd[i]) / (2.0 * step);
                assert!((fd - h[(i, k)]).abs() < 1e-5 * (1.0 + fd.abs()), "{i},{k}");
            }
        }
    }
}
