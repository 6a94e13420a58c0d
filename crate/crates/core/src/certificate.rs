//! Quadratic-form nonexistence certificates.
//!
//! At the minimizer `θ_m`, a group element `g` with `H_m(gm − m) < 0` rules
//! out a centred co-circular central configuration for `m`. The converse does
//! not hold: an all-nonnegative table proves nothing, so the strongest label
//! [`classify`] can give an unrefuted instance is `CENTERED_CANDIDATE`, an
//! empirical observation at the chosen tolerances.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::energy::{
    centredness_diagnostics, chord_distance, interaction_matrix, quadratic_form,
    CentrednessDiagnostics, InteractionMatrix,
};
use crate::error::{Error, Result};
use crate::optimizer::{minimize_potential, MinimizeOptions, MinimizeResult};
use crate::symmetry::{enumerate_group, DihedralElement, SpecialMassPattern, DEFAULT_UNIT_TOL, DEFAULT_VALUE_TOL};
use crate::types::{AngleConfig, MassVector};

/// Numerical thresholds shared by classification and scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Bound on both `com_norm` and `row_spread` for a centred candidate.
    pub center_tol: f64,
    /// Relative margin; a certificate counts as negative below
    /// `−neg_margin·(1 + max_ij H_ij)`.
    pub neg_margin: f64,
    pub unit_tol: f64,
    pub value_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            grad_tol: 1e-12,
            max_iters: 10_000,
            center_tol: 1e-8,
            neg_margin: 1e-10,
            unit_tol: DEFAULT_UNIT_TOL,
            value_tol: DEFAULT_VALUE_TOL,
        }
    }
}

impl Tolerances {
    pub fn minimize_options(&self) -> MinimizeOptions {
        MinimizeOptions {
            grad_tol: self.grad_tol,
            max_iters: self.max_iters,
            initial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateResult {
    pub best_element: DihedralElement,
    pub best_value: f64,
    /// One value per element, in [`enumerate_group`] order.
    pub all_values: Vec<f64>,
    /// The absolute threshold the best value was compared against.
    pub threshold: f64,
    pub is_negative: bool,
}

impl CertificateResult {
    pub fn value_of(&self, g: &DihedralElement) -> f64 {
        let idx = if g.reflected { g.n + g.rotation } else { g.rotation };
        self.all_values[idx]
    }
}

/// `H_m(gm − m)` for every `g ∈ D_n`, paired with the elements.
pub fn certificate_table(
    m: &MassVector,
    theta: &AngleConfig,
    alpha: f64,
) -> Result<(InteractionMatrix, Vec<(DihedralElement, f64)>)> {
    if m.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: m.len(),
            found: theta.len(),
        });
    }
    let h = interaction_matrix(theta, alpha)?;
    let masses = m.as_slice();
    let table = enumerate_group(m.len())
        .into_iter()
        .map(|g| {
            let v: Vec<f64> = g
                .permute(masses)?
                .iter()
                .zip(masses)
                .map(|(gm, m)| gm - m)
                .collect();
            Ok((g, quadratic_form(&h, &v)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((h, table))
}

/// Certificate search at an arbitrary configuration. The result is only
/// meaningful at the minimizer; [`certificate_search`] enforces that.
pub fn certificate_search_at(
    m: &MassVector,
    theta: &AngleConfig,
    alpha: f64,
    neg_margin: f64,
) -> Result<CertificateResult> {
    let (h, table) = certificate_table(m, theta, alpha)?;
    let (best_element, best_value) = table
        .iter()
        .copied()
        .fold(table[0], |best, cur| if cur.1 < best.1 { cur } else { best });
    let threshold = neg_margin * (1.0 + h.max_off_diagonal());
    Ok(CertificateResult {
        best_element,
        best_value,
        all_values: table.into_iter().map(|(_, v)| v).collect(),
        threshold,
        is_negative: best_value < -threshold,
    })
}

/// Evaluates every group element at a converged minimizer.
pub fn certificate_search(
    m: &MassVector,
    minimizer: &MinimizeResult,
    alpha: f64,
    neg_margin: f64,
) -> Result<CertificateResult> {
    if !minimizer.converged {
        return Err(Error::Unconverged {
            grad_norm: minimizer.final_grad_norm,
        });
    }
    certificate_search_at(m, &minimizer.theta_min, alpha, neg_margin)
}

/// Brings a pattern with an antipodal special pair into the form where that
/// pair sits at positions `n/2` and `n`, returning the rotation used.
pub fn align_antipodal(p: &SpecialMassPattern) -> Option<(SpecialMassPattern, DihedralElement)> {
    let n = p.n;
    let half = n / 2;
    let pairs = p.antipodal_pairs();
    let (a, b) = *pairs.first()?;
    // Rotate the pair's far member onto position n.
    let h = if pairs.contains(&(p.pos_s, n)) {
        0
    } else if b == n {
        a
    } else {
        b
    };
    if h == 0 {
        return Some((p.clone(), DihedralElement::identity(n)));
    }
    let mut placed: Vec<(usize, f64)> = p
        .positions()
        .into_iter()
        .zip(p.values())
        .map(|(pos, v)| ((pos + n - h - 1) % n + 1, v))
        .collect();
    placed.sort_by_key(|(pos, _)| *pos);
    let mut out = SpecialMassPattern::new(n, placed[0].0, placed[1].0, [placed[0].1, placed[1].1, placed[2].1]).ok()?;
    out.rotation = (p.rotation + h) % n;
    debug_assert_eq!(out.pos_s, half);
    Some((out, DihedralElement::rotation(n, h)))
}

/// `−2(1 − m_l)² r_{l,n−l}^(−α)`, the reflection certificate for a pattern
/// whose specials at `s = n/2` and `n` are antipodal.
pub fn antipodal_certificate_value(p: &SpecialMassPattern, theta_m: &AngleConfig, alpha: f64) -> Result<f64> {
    let n = p.n;
    if n % 2 != 0 || p.pos_s != n / 2 {
        return Err(Error::NotApplicable(format!(
            "need even n with the special at s = n/2 (n={n}, l={}, s={})",
            p.pos_l, p.pos_s
        )));
    }
    if theta_m.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: theta_m.len(),
        });
    }
    let l = p.pos_l;
    let r = chord_distance(theta_m[l - 1], theta_m[n - l - 1])?;
    let d = 1.0 - p.val_l;
    Ok(-2.0 * d * d * r.powf(-alpha))
}

fn chord_power(a: f64, b: f64, alpha: f64) -> Result<f64> {
    Ok(chord_distance(a, b)?.powf(-alpha))
}

/// `1/AC^α + 1/BD^α − (1/AD^α + 1/BC^α)` for points at the given angles,
/// which must run counterclockwise: `a < b < c < d < a + 2π` after
/// unwrapping.
pub fn quadrilateral_gap_angles(angles: [f64; 4], alpha: f64) -> Result<f64> {
    crate::energy::check_alpha(alpha)?;
    let base = angles[0];
    let unwrapped = angles.map(|t| (t - base).rem_euclid(std::f64::consts::TAU));
    if !(unwrapped[0] < unwrapped[1] && unwrapped[1] < unwrapped[2] && unwrapped[2] < unwrapped[3]) {
        return Err(Error::Ordering([0, 1, 2, 3]));
    }
    let [a, b, c, d] = angles;
    Ok(chord_power(a, c, alpha)? + chord_power(b, d, alpha)? - chord_power(a, d, alpha)? - chord_power(b, c, alpha)?)
}

/// [`quadrilateral_gap_angles`] for four bodies of a configuration, given by
/// zero-based index in counterclockwise circular order.
pub fn quadrilateral_gap(theta: &AngleConfig, idx: [usize; 4], alpha: f64) -> Result<f64> {
    let n = theta.len();
    if idx.iter().any(|&i| i >= n) {
        return Err(Error::Ordering(idx));
    }
    let offs = idx.map(|i| (i + n - idx[0]) % n);
    if !(offs[0] < offs[1] && offs[1] < offs[2] && offs[2] < offs[3]) {
        return Err(Error::Ordering(idx));
    }
    quadrilateral_gap_angles(idx.map(|i| theta[i]), alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum VerdictTag {
    CertifiedNotCc,
    NotCentered,
    CenteredCandidate,
    Unconverged,
}

impl VerdictTag {
    pub const ALL: [VerdictTag; 4] = [
        VerdictTag::CertifiedNotCc,
        VerdictTag::NotCentered,
        VerdictTag::CenteredCandidate,
        VerdictTag::Unconverged,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            VerdictTag::CertifiedNotCc => "CERTIFIED_NOT_CC",
            VerdictTag::NotCentered => "NOT_CENTERED",
            VerdictTag::CenteredCandidate => "CENTERED_CANDIDATE",
            VerdictTag::Unconverged => "UNCONVERGED",
        }
    }
}

impl fmt::Display for VerdictTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub tag: VerdictTag,
    pub minimizer: MinimizeResult,
    pub diagnostics: CentrednessDiagnostics,
    /// Absent only for `UNCONVERGED`.
    pub certificate: Option<CertificateResult>,
}

/// Minimizes, measures centredness, searches for a certificate, and labels
/// the outcome. `CENTERED_CANDIDATE` is never a proof of existence.
pub fn classify(m: &MassVector, alpha: f64, tols: &Tolerances) -> Result<Verdict> {
    let minimizer = minimize_potential(m, alpha, &tols.minimize_options())?;
    let diagnostics = centredness_diagnostics(m, &minimizer.theta_min, alpha)?;
    if !minimizer.converged {
        return Ok(Verdict {
            tag: VerdictTag::Unconverged,
            minimizer,
            diagnostics,
            certificate: None,
        });
    }
    let certificate = certificate_search(m, &minimizer, alpha, tols.neg_margin)?;
    let tag = if certificate.is_negative {
        VerdictTag::CertifiedNotCc
    } else if diagnostics.com_norm <= tols.center_tol && diagnostics.row_spread <= tols.center_tol {
        VerdictTag::CenteredCandidate
    } else {
        VerdictTag::NotCentered
    };
    Ok(Verdict {
        tag,
        minimizer,
        diagnostics,
        certificate: Some(certificate),
    })
}
