//! The dihedral group `D_n` acting on mass labelings and on gauge-fixed angle
//! configurations.
//!
//! The generators act on masses by `(Pm)_i = m_{i+1 mod n}` and
//! `(Sm)_i = m_{n-i}` for `i < n`, `(Sm)_n = m_n`. On angles,
//! `(𝒫θ)_i = θ_{i+1} − θ_1` and `(𝒮θ)_i = θ_n − θ_{n-i}` for `i < n`, with
//! `θ_n` fixed. An element `g = P^h S^e` acts as the matrix product, so the
//! reflection is applied first. Both actions are stored as a rotation count
//! and a reflection flag and applied as index permutations.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AngleConfig, MassVector, MIN_BODIES};

/// Default tolerance for deciding that a mass differs from the unit mass.
pub const DEFAULT_UNIT_TOL: f64 = 1e-9;
/// Default tolerance for deciding that two special masses are equal.
pub const DEFAULT_VALUE_TOL: f64 = 1e-9;

/// `P^rotation S^reflected` in `D_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DihedralElement {
    pub n: usize,
    pub rotation: usize,
    pub reflected: bool,
}

impl DihedralElement {
    pub fn new(n: usize, rotation: usize, reflected: bool) -> Self {
        assert!(n >= MIN_BODIES, "D_n needs n >= {MIN_BODIES}");
        DihedralElement {
            n,
            rotation: rotation % n,
            reflected,
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, 0, false)
    }

    pub fn rotation(n: usize, h: usize) -> Self {
        Self::new(n, h, false)
    }

    pub fn reflection(n: usize) -> Self {
        Self::new(n, 0, true)
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == 0 && !self.reflected
    }

    /// Matrix product `self · other`, using `S P^b = P^{-b} S`.
    pub fn compose(&self, other: &DihedralElement) -> DihedralElement {
        assert_eq!(self.n, other.n, "composing elements of different groups");
        let n = self.n;
        let b = if self.reflected {
            (n - other.rotation) % n
        } else {
            other.rotation
        };
        DihedralElement::new(n, self.rotation + b, self.reflected ^ other.reflected)
    }

    pub fn inverse(&self) -> DihedralElement {
        if self.reflected {
            *self
        } else {
            DihedralElement::new(self.n, self.n - self.rotation, false)
        }
    }

    /// Zero-based source index: `(g m)[j] = m[self.source(j)]`.
    pub fn source(&self, j: usize) -> usize {
        let n = self.n;
        let k = (j + self.rotation) % n;
        if self.reflected {
            (2 * n - 2 - k) % n
        } else {
            k
        }
    }

    fn check(&self, len: usize) -> Result<()> {
        if len == self.n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.n,
                found: len,
            })
        }
    }

    /// Permutes an arbitrary vector the way `act_on_masses` permutes masses.
    pub fn permute(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check(v.len())?;
        Ok((0..self.n).map(|j| v[self.source(j)]).collect())
    }
}

impl fmt::Display for DihedralElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.rotation, self.reflected) {
            (0, false) => f.write_str("I"),
            (0, true) => f.write_str("S"),
            (h, false) => write!(f, "P^{h}"),
            (h, true) => write!(f, "P^{h} S"),
        }
    }
}

/// Parses `I`, `S`, `P`, `P^h`, `P S` and `P^h S` for a given `n`.
pub fn parse_element(text: &str, n: usize) -> Result<DihedralElement> {
    let err = || Error::ParseElement(text.to_string());
    if n < MIN_BODIES {
        return Err(err());
    }
    let t = text.trim();
    if t == "I" {
        return Ok(DihedralElement::identity(n));
    }
    let (rot, reflected) = match t.strip_suffix('S') {
        Some(rest) => (rest.trim_end(), true),
        None => (t, false),
    };
    let h = if rot.is_empty() {
        0
    } else if rot == "P" {
        1
    } else {
        let h: usize = rot.strip_prefix("P^").ok_or_else(err)?.parse().map_err(|_| err())?;
        if h >= n {
            return Err(err());
        }
        h
    };
    Ok(DihedralElement::new(n, h, reflected))
}

/// Parsing needs `n`; the `FromStr` form reads `"<n>:<element>"`.
impl FromStr for DihedralElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, g) = s.split_once(':').ok_or_else(|| Error::ParseElement(s.to_string()))?;
        let n = n.trim().parse().map_err(|_| Error::ParseElement(s.to_string()))?;
        parse_element(g, n)
    }
}

pub fn act_on_masses(g: &DihedralElement, m: &MassVector) -> Result<MassVector> {
    MassVector::new(g.permute(m.as_slice())?)
}

fn reflect_angles(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut out: Vec<f64> = (0..n - 1).map(|j| TAU - x[n - 2 - j]).collect();
    out.push(TAU);
    out
}

fn rotate_angles(x: &[f64], h: usize) -> Vec<f64> {
    if h == 0 {
        return x.to_vec();
    }
    let n = x.len();
    let base = x[h - 1];
    let mut out: Vec<f64> = (0..n - 1)
        .map(|j| {
            let k = j + h;
            if k < n {
                x[k] - base
            } else {
                x[k - n] + (TAU - base)
            }
        })
        .collect();
    out.push(TAU);
    out
}

/// `ĝθ = 𝒫^h 𝒮^e θ`.
pub fn act_on_angles(g: &DihedralElement, theta: &AngleConfig) -> Result<AngleConfig> {
    g.check(theta.len())?;
    let reflected = if g.reflected {
        reflect_angles(theta.as_slice())
    } else {
        theta.as_slice().to_vec()
    };
    AngleConfig::new(rotate_angles(&reflected, g.rotation))
}

/// All `2n` elements: the rotations `P^0..P^{n-1}`, then `P^0 S..P^{n-1} S`.
pub fn enumerate_group(n: usize) -> Vec<DihedralElement> {
    assert!(n >= MIN_BODIES, "D_n needs n >= {MIN_BODIES}");
    [false, true]
        .into_iter()
        .flat_map(|e| (0..n).map(move |h| DihedralElement::new(n, h, e)))
        .collect()
}

/// Three masses that differ from the common unit value, at one-based
/// positions `l < s < n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpecialMassPattern {
    pub n: usize,
    pub pos_l: usize,
    pub pos_s: usize,
    pub val_l: f64,
    pub val_s: f64,
    pub val_n: f64,
    /// Power of `P` applied to the original masses to bring the last special
    /// mass to position `n`.
    pub rotation: usize,
}

impl SpecialMassPattern {
    pub fn new(n: usize, pos_l: usize, pos_s: usize, values: [f64; 3]) -> Result<Self> {
        if !(1 <= pos_l && pos_l < pos_s && pos_s < n) || n < MIN_BODIES {
            return Err(Error::InvalidPositions { l: pos_l, s: pos_s, n });
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0) || **v == 1.0) {
            return Err(Error::InvalidMasses(format!(
                "special mass {v} must be positive and different from 1"
            )));
        }
        Ok(SpecialMassPattern {
            n,
            pos_l,
            pos_s,
            val_l: values[0],
            val_s: values[1],
            val_n: values[2],
            rotation: 0,
        })
    }

    /// One-based positions `[l, s, n]`.
    pub fn positions(&self) -> [usize; 3] {
        [self.pos_l, self.pos_s, self.n]
    }

    pub fn values(&self) -> [f64; 3] {
        [self.val_l, self.val_s, self.val_n]
    }

    /// `sign(val − 1)` for `l`, `s`, `n`.
    pub fn signs(&self) -> [i8; 3] {
        self.values().map(|v| if v > 1.0 { 1 } else { -1 })
    }

    /// The mass vector `(1,…,1,m_l,1,…,1,m_s,1,…,1,m_n)`.
    pub fn masses(&self) -> MassVector {
        let mut m = vec![1.0; self.n];
        m[self.pos_l - 1] = self.val_l;
        m[self.pos_s - 1] = self.val_s;
        m[self.n - 1] = self.val_n;
        MassVector::new(m).expect("pattern values are positive")
    }

    /// Pairs of special positions separated by exactly `n/2 − 1` bodies.
    pub fn antipodal_pairs(&self) -> Vec<(usize, usize)> {
        if self.n % 2 != 0 {
            return Vec::new();
        }
        let p = self.positions();
        let half = self.n / 2;
        [(0, 1), (0, 2), (1, 2)]
            .into_iter()
            .map(|(a, b)| (p[a], p[b]))
            .filter(|(a, b)| b - a == half)
            .collect()
    }
}

/// Finds the three non-unit masses, rotating by a power of `P` if the last
/// of them is not at position `n`. Returns `None` unless exactly three exist.
pub fn special_positions(m: &MassVector, unit_tol: f64) -> Option<SpecialMassPattern> {
    let specials: Vec<usize> = (0..m.len()).filter(|&i| (m[i] - 1.0).abs() > unit_tol).collect();
    if specials.len() != 3 {
        return None;
    }
    let n = m.len();
    let h = (specials[2] + 1) % n;
    let rotated = DihedralElement::rotation(n, h).permute(m.as_slice()).ok()?;
    let pos: Vec<usize> = (0..n).filter(|&i| (rotated[i] - 1.0).abs() > unit_tol).collect();
    debug_assert_eq!(pos[2], n - 1);
    Some(SpecialMassPattern {
        n,
        pos_l: pos[0] + 1,
        pos_s: pos[1] + 1,
        val_l: rotated[pos[0]],
        val_s: rotated[pos[1]],
        val_n: rotated[pos[2]],
        rotation: h,
    })
}

/// Steps from `a` to `b` walking up the circle of `n` positions.
fn forward(a: usize, b: usize, n: usize) -> usize {
    (b + n - a) % n
}

/// Bodies strictly between `a` and `c` on the arc that avoids `b`.
fn gap_away(a: usize, b: usize, c: usize, n: usize) -> usize {
    if forward(a, b, n) < forward(a, c, n) {
        forward(c, a, n) - 1
    } else {
        forward(a, c, n) - 1
    }
}

/// Bodies strictly between `a` and `c` on the shorter arc.
fn gap_shortest(a: usize, c: usize, n: usize) -> usize {
    forward(a, c, n).min(forward(c, a, n)) - 1
}

/// Outcome of the symmetric-ordering test under both gap-count conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingCheck {
    /// Gap counted walking from each equal mass away from the other one.
    pub away_walk: bool,
    /// Gap counted along the shorter arc to the third mass.
    pub shortest_arc: bool,
}

impl OrderingCheck {
    pub fn conventions_agree(&self) -> bool {
        self.away_walk == self.shortest_arc
    }
}

pub fn ordering_check(p: &SpecialMassPattern, value_tol: f64) -> OrderingCheck {
    let pos = p.positions();
    let val = p.values();
    let mut out = OrderingCheck {
        away_walk: false,
        shortest_arc: false,
    };
    for (a, b, c) in [(0, 1, 2), (0, 2, 1), (1, 2, 0)] {
        if (val[a] - val[b]).abs() > value_tol {
            continue;
        }
        let (pa, pb, pc) = (pos[a], pos[b], pos[c]);
        out.away_walk |= gap_away(pa, pb, pc, p.n) == gap_away(pb, pa, pc, p.n);
        out.shortest_arc |= gap_shortest(pa, pc, p.n) == gap_shortest(pb, pc, p.n);
    }
    out
}

/// Two special values agree within `value_tol` and the third mass sits the
/// same number of bodies away from each of them, counted walking away from
/// the other equal mass.
pub fn is_ordered_symmetrically(p: &SpecialMassPattern, value_tol: f64) -> bool {
    ordering_check(p, value_tol).away_walk
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mv(v: &[f64]) -> MassVector {
        MassVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn generator_actions_on_masses() {
        let m = mv(&[1.0, 2.0, 3.0, 4.0]);
        let p = act_on_masses(&DihedralElement::rotation(4, 1), &m).unwrap();
        assert_eq!(p.as_slice(), &[2.0, 3.0, 4.0, 1.0]);
        let s = act_on_masses(&DihedralElement::reflection(4), &m).unwrap();
        assert_eq!(s.as_slice(), &[3.0, 2.0, 1.0, 4.0]);
        let i = act_on_masses(&DihedralElement::identity(4), &m).unwrap();
        assert_eq!(i, m);
    }

    #[test]
    fn angle_actions_fix_regular_polygon() {
        for n in 3..10 {
            let reg = AngleConfig::regular(n).unwrap();
            for g in enumerate_group(n) {
                let t = act_on_angles(&g, &reg).unwrap();
                assert!(t.max_abs_diff(&reg) < 1e-14, "{g}");
            }
        }
    }

    #[test]
    fn reflection_is_an_involution_on_angles() {
        use std::f64::consts::{FRAC_PI_2, PI};
        let theta = AngleConfig::new(vec![FRAC_PI_2, PI, 3.0 * FRAC_PI_2, TAU]).unwrap();
        let s = DihedralElement::reflection(4);
        let twice = act_on_angles(&s, &act_on_angles(&s, &theta).unwrap()).unwrap();
        assert!(twice.max_abs_diff(&theta) < 1e-15);
    }

    #[test]
    fn group_sizes_and_fingerprints() {
        assert_eq!(enumerate_group(3).len(), 6);
        let g5 = enumerate_group(5);
        assert_eq!(g5.len(), 10);
        assert!(g5[0].is_identity());
        let v: Vec<f64> = (1..=5).map(|x| x as f64).collect();
        let mut prints: Vec<Vec<f64>> = g5.iter().map(|g| g.permute(&v).unwrap()).collect();
        prints.sort_by(|a, b| a.partial_cmp(b).unwrap());
        prints.dedup();
        assert_eq!(prints.len(), 10);
        for g in &g5 {
            let back = g.inverse().permute(&g.permute(&v).unwrap()).unwrap();
            assert_eq!(back, v);
            assert!(g.compose(&g.inverse()).is_identity());
        }
    }

    #[test]
    fn rendering_round_trips() {
        for n in [3, 4, 7] {
            for g in enumerate_group(n) {
                assert_eq!(parse_element(&g.to_string(), n).unwrap(), g);
            }
        }
        assert_eq!(DihedralElement::reflection(4).to_string(), "S");
        assert_eq!(DihedralElement::new(5, 2, true).to_string(), "P^2 S");
        assert_eq!(parse_element("P", 5).unwrap(), DihedralElement::rotation(5, 1));
        assert!(parse_element("P^5", 5).is_err());
        assert!(parse_element("Q", 5).is_err());
        assert_eq!("6:P^3 S".parse::<DihedralElement>().unwrap(), DihedralElement::new(6, 3, true));
    }

    #[test]
    fn special_positions_examples() {
        let p = special_positions(&mv(&[1.0, 1.0, 2.0, 1.0, 3.0, 0.5]), 1e-9).unwrap();
        assert_eq!((p.pos_l, p.pos_s, p.n, p.rotation), (3, 5, 6, 0));
        assert_eq!(p.values(), [2.0, 3.0, 0.5]);
        assert_eq!(p.signs(), [1, 1, -1]);
        assert!(special_positions(&mv(&[1.0; 5]), 1e-9).is_none());
        assert!(special_positions(&mv(&[1.0, 2.0, 1.0, 3.0]), 1e-9).is_none());
    }

    #[test]
    fn special_positions_rotates_last_special_to_n() {
        let m = mv(&[2.0, 1.0, 3.0, 0.5, 1.0, 1.0]);
        let p = special_positions(&m, 1e-9).unwrap();
        assert_eq!(p.rotation, 4);
        assert_eq!((p.pos_l, p.pos_s), (3, 5));
        assert_eq!(p.values(), [2.0, 3.0, 0.5]);
        let rotated = act_on_masses(&DihedralElement::rotation(6, p.rotation), &m).unwrap();
        assert_eq!(rotated, p.masses());
    }

    #[test]
    fn flanked_five_body_pattern_is_symmetric() {
        let p = SpecialMassPattern::new(5, 2, 3, [2.0, 2.0, 3.0]).unwrap();
        assert!(is_ordered_symmetrically(&p, 1e-9));
        assert!(ordering_check(&p, 1e-9).conventions_agree());
    }

    #[test]
    fn distinct_values_never_symmetric() {
        let p = SpecialMassPattern::new(5, 2, 3, [2.0, 2.5, 3.0]).unwrap();
        assert!(!is_ordered_symmetrically(&p, 1e-9));
    }

    #[test]
    fn unequal_gaps_are_not_symmetric() {
        // From 1 walking down to 6: no bodies. From 3 walking up to 6: bodies 4, 5.
        let p = SpecialMassPattern::new(6, 1, 3, [2.0, 2.0, 0.5]).unwrap();
        assert_eq!(gap_away(1, 3, 6, 6), 0);
        assert_eq!(gap_away(3, 1, 6, 6), 2);
        assert!(!is_ordered_symmetrically(&p, 1e-9));
    }

    #[test]
    fn gap_conventions_agree_exhaustively() {
        for n in 3..=40 {
            for l in 1..n {
                for s in l + 1..n {
                    for vals in [[2.0, 2.0, 3.0], [2.0, 3.0, 2.0], [3.0, 2.0, 2.0]] {
                        let p = SpecialMassPattern::new(n, l, s, vals).unwrap();
                        assert!(ordering_check(&p, 1e-9).conventions_agree(), "{p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn pattern_validation() {
        assert!(SpecialMassPattern::new(6, 3, 3, [2.0, 3.0, 4.0]).is_err());
        assert!(SpecialMassPattern::new(6, 1, 6, [2.0, 3.0, 4.0]).is_err());
        assert!(SpecialMassPattern::new(6, 1, 2, [1.0, 3.0, 4.0]).is_err());
    }

    #[test]
    fn antipodal_pairs() {
        let p = SpecialMassPattern::new(4, 1, 2, [2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.antipodal_pairs(), vec![(2, 4)]);
        let p = SpecialMassPattern::new(6, 1, 2, [2.0, 3.0, 4.0]).unwrap();
        assert!(p.antipodal_pairs().is_empty());
        let p = SpecialMassPattern::new(7, 1, 4, [2.0, 3.0, 4.0]).unwrap();
        assert!(p.antipodal_pairs().is_empty());
    }
}
