//! Sign calculus for three special masses.
//!
//! With unit masses everywhere except positions `l < s < n`, each pairwise
//! product of `(m − 1)` signs forces the sign of one position predicate at a
//! centred configuration:
//!
//! | mass product          | predicate                              |
//! |-----------------------|----------------------------------------|
//! | `(m_l−1)(m_s−1)`      | `p1 = (l − n/2)(s − n/2)`              |
//! | `(m_s−1)(m_n−1)`      | `p2 = (s − l − n/2)(n − l − n/2)`      |
//! | `(m_l−1)(m_n−1)`      | `p3 = (l + n − s − n/2)(n − s − n/2)`  |
//!
//! The three mass products multiply to a square, so the required signs
//! multiply to `+1`, while `p1·p2·p3 = −[(l−n/2)(s−n/2)(s−l−n/2)]² < 0`
//! whenever no factor vanishes. The full system is therefore never
//! satisfiable; [`exhaustive_theorem_check`] confirms this by enumeration.
//! A vanishing factor means two specials are antipodal, which the reflection
//! certificate handles directly.

use std::fmt;
use std::ops::RangeInclusive;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::certificate::{certificate_search, quadrilateral_gap, Tolerances};
use crate::energy::{interaction_matrix, InteractionMatrix};
use crate::error::{Error, Result};
use crate::optimizer::minimize_potential;
use crate::symmetry::{is_ordered_symmetrically, DihedralElement, SpecialMassPattern, DEFAULT_VALUE_TOL};
use crate::types::MassVector;

pub type Rational = Ratio<i64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RequiredSign {
    Positive,
    Negative,
}

impl RequiredSign {
    pub fn holds(&self, x: &Rational) -> bool {
        let zero = Rational::from_integer(0);
        match self {
            RequiredSign::Positive => *x > zero,
            RequiredSign::Negative => *x < zero,
        }
    }
}

impl fmt::Display for RequiredSign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RequiredSign::Positive => "> 0",
            RequiredSign::Negative => "< 0",
        })
    }
}

/// `4·p_i`, which is always an integer.
fn scaled_predicates(l: usize, s: usize, n: usize) -> [i64; 3] {
    let (l, s, n) = (l as i64, s as i64, n as i64);
    [
        (2 * l - n) * (2 * s - n),
        (2 * (s - l) - n) * (n - 2 * l),
        (2 * (l - s) + n) * (n - 2 * s),
    ]
}

/// The three position predicates, exactly.
pub fn side_predicates(l: usize, s: usize, n: usize) -> Result<[Rational; 3]> {
    if !(1 <= l && l < s && s < n) {
        return Err(Error::InvalidPositions { l, s, n });
    }
    Ok(scaled_predicates(l, s, n).map(|q| Rational::new(q, 4)))
}

/// Maps `sign(m_l − 1)`, `sign(m_s − 1)`, `sign(m_n − 1)` to the signs the
/// predicates must take at a centred configuration.
pub fn required_signs(signs: [i8; 3]) -> Result<[RequiredSign; 3]> {
    if signs.contains(&0) {
        return Err(Error::ZeroSign);
    }
    let req = |a: i8, b: i8| {
        if a.signum() * b.signum() > 0 {
            RequiredSign::Positive
        } else {
            RequiredSign::Negative
        }
    };
    let [l, s, n] = signs;
    Ok([req(l, s), req(s, n), req(l, n)])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignConstraintSystem {
    pub predicates: [Rational; 3],
    pub required: [RequiredSign; 3],
    /// One-based indices of the constraints that fail.
    pub violated: Vec<usize>,
}

impl SignConstraintSystem {
    pub fn new(l: usize, s: usize, n: usize, signs: [i8; 3]) -> Result<Self> {
        let predicates = side_predicates(l, s, n)?;
        let required = required_signs(signs)?;
        let violated = (0..3).filter(|&i| !required[i].holds(&predicates[i])).map(|i| i + 1).collect();
        Ok(SignConstraintSystem {
            predicates,
            required,
            violated,
        })
    }

    pub fn is_satisfiable(&self) -> bool {
        self.violated.is_empty()
    }

    /// A factor vanishes exactly when two specials are antipodal.
    pub fn has_zero_factor(&self) -> bool {
        self.predicates.iter().any(|p| *p == Rational::from_integer(0))
    }

    pub fn describe_violation(&self) -> String {
        self.violated
            .iter()
            .map(|&i| format!("p{i} = {} but must be {}", self.predicates[i - 1], self.required[i - 1]))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PredictionTag {
    AntipodalCertificate,
    LemmaChainInfeasible,
    HypothesesNotMet,
}

impl PredictionTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            PredictionTag::AntipodalCertificate => "ANTIPODAL_CERTIFICATE",
            PredictionTag::LemmaChainInfeasible => "LEMMA_CHAIN_INFEASIBLE",
            PredictionTag::HypothesesNotMet => "HYPOTHESES_NOT_MET",
        }
    }

    /// Predictions that claim nonexistence.
    pub fn rules_out(&self) -> bool {
        !matches!(self, PredictionTag::HypothesesNotMet)
    }
}

impl fmt::Display for PredictionTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionVerdict {
    pub tag: PredictionTag,
    pub witness: String,
    /// The sign system for the pattern's own labeling, when it was evaluated.
    pub system: Option<SignConstraintSystem>,
}

pub fn predict_nonexistence(p: &SpecialMassPattern) -> PredictionVerdict {
    predict_nonexistence_with(p, DEFAULT_VALUE_TOL)
}

/// Routes a pattern to the antipodal certificate, the infeasible lemma chain,
/// or reports that the nonexistence hypotheses do not hold.
pub fn predict_nonexistence_with(p: &SpecialMassPattern, value_tol: f64) -> PredictionVerdict {
    let system = |v: [f64; 3]| {
        SignConstraintSystem::new(p.pos_l, p.pos_s, p.n, signs_of(v)).expect("pattern positions are valid")
    };
    match route(p, value_tol) {
        Route::Antipodal => {
            let (a, b) = p.antipodal_pairs()[0];
            PredictionVerdict {
                tag: PredictionTag::AntipodalCertificate,
                witness: format!("positions {a} and {b} are separated by n/2 - 1 = {} bodies", p.n / 2 - 1),
                system: None,
            }
        }
        Route::Symmetric => PredictionVerdict {
            tag: PredictionTag::HypothesesNotMet,
            witness: "special masses are ordered symmetrically".to_string(),
            system: None,
        },
        Route::Satisfiable(v) => PredictionVerdict {
            tag: PredictionTag::HypothesesNotMet,
            witness: format!("sign system satisfiable: {:?}", system(v).predicates),
            system: Some(system(p.values())),
        },
        Route::Infeasible => {
            let sys = system(p.values());
            PredictionVerdict {
                tag: PredictionTag::LemmaChainInfeasible,
                witness: sys.describe_violation(),
                system: Some(sys),
            }
        }
    }
}

fn signs_of(vals: [f64; 3]) -> [i8; 3] {
    vals.map(|x| if x > 1.0 { 1 } else { -1 })
}

/// Bit `i` is set when constraint `i + 1` fails.
fn violated_mask(q: &[i64; 3], signs: [i8; 3]) -> u8 {
    let [l, s, n] = signs;
    let products = [l * s, s * n, l * n];
    (0..3)
        .filter(|&i| !(if products[i] > 0 { q[i] > 0 } else { q[i] < 0 }))
        .fold(0, |m, i| m | 1 << i)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Route {
    Antipodal,
    Symmetric,
    /// Some labeling, given by its values, satisfies every constraint.
    Satisfiable([f64; 3]),
    Infeasible,
}

fn has_antipodal_pair(l: usize, s: usize, n: usize) -> bool {
    n % 2 == 0 && !antipodal_free(l, s, n)
}

fn route(p: &SpecialMassPattern, value_tol: f64) -> Route {
    if has_antipodal_pair(p.pos_l, p.pos_s, p.n) {
        return Route::Antipodal;
    }
    if is_ordered_symmetrically(p, value_tol) {
        return Route::Symmetric;
    }
    // When two specials share a value, either may play either role; the
    // chain must fail under every such labeling.
    let q = scaled_predicates(p.pos_l, p.pos_s, p.n);
    let vals = p.values();
    if violated_mask(&q, signs_of(vals)) == 0 {
        return Route::Satisfiable(vals);
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        if (vals[a] - vals[b]).abs() <= value_tol {
            let mut swapped = vals;
            swapped.swap(a, b);
            if violated_mask(&q, signs_of(swapped)) == 0 {
                return Route::Satisfiable(swapped);
            }
        }
    }
    Route::Infeasible
}

/// Counts from [`exhaustive_theorem_check`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub n_max: usize,
    pub patterns: u64,
    pub antipodal: u64,
    pub symmetric_skipped: u64,
    pub infeasible: u64,
    /// Hypothesis-satisfying patterns whose full sign system is satisfiable
    /// or which were not ruled out. Must stay empty.
    pub counterexamples: Vec<String>,
    /// Antipodal patterns that reached the sign system. Must stay empty.
    pub misrouted: Vec<String>,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty() && self.misrouted.is_empty()
    }

    fn merge(mut self, other: TheoremReport) -> TheoremReport {
        self.patterns += other.patterns;
        self.antipodal += other.antipodal;
        self.symmetric_skipped += other.symmetric_skipped;
        self.infeasible += other.infeasible;
        self.counterexamples.extend(other.counterexamples);
        self.misrouted.extend(other.misrouted);
        self
    }
}

const SIGN_TRIPLES: [[i8; 3]; 8] = [
    [1, 1, 1],
    [1, 1, -1],
    [1, -1, 1],
    [1, -1, -1],
    [-1, 1, 1],
    [-1, 1, -1],
    [-1, -1, 1],
    [-1, -1, -1],
];

/// Representative special values with the given signs: all distinct, or
/// with one same-signed pair made equal.
fn value_classes(signs: [i8; 3]) -> Vec<[f64; 3]> {
    let distinct: [f64; 3] = [0, 1, 2].map(|i| {
        let k = 2.0 + i as f64;
        if signs[i] > 0 {
            k
        } else {
            1.0 / k
        }
    });
    let mut out = vec![distinct];
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        if signs[a] == signs[b] {
            let mut v = distinct;
            v[b] = v[a];
            out.push(v);
        }
    }
    out
}

fn check_one_n(n: usize, classes: &[Vec<[f64; 3]>]) -> TheoremReport {
    let mut rep = TheoremReport::default();
    for l in 1..n {
        for s in l + 1..n {
            let antipodal = has_antipodal_pair(l, s, n);
            let zero_factor = scaled_predicates(l, s, n).contains(&0);
            for vals in classes.iter().flatten() {
                let p = SpecialMassPattern::new(n, l, s, *vals).expect("valid by construction");
                rep.patterns += 1;
                let routed = route(&p, DEFAULT_VALUE_TOL);
                if antipodal {
                    if routed == Route::Antipodal {
                        rep.antipodal += 1;
                    } else {
                        rep.misrouted.push(format!("n={n} l={l} s={s}"));
                    }
                    continue;
                }
                if routed == Route::Symmetric {
                    rep.symmetric_skipped += 1;
                    continue;
                }
                if routed == Route::Infeasible && !zero_factor {
                    rep.infeasible += 1;
                } else {
                    let verdict = predict_nonexistence(&p);
                    rep.counterexamples.push(format!(
                        "n={n} l={l} s={s} values={vals:?}: {} ({})",
                        verdict.tag, verdict.witness
                    ));
                }
            }
        }
    }
    rep
}

/// Enumerates every `n ≤ n_max`, every `1 ≤ l < s < n`, every sign pattern
/// and every equal-pair class, and checks that each hypothesis-satisfying
/// pattern has a violated constraint.
pub fn exhaustive_theorem_check(n_max: usize) -> TheoremReport {
    let classes: Vec<Vec<[f64; 3]>> = SIGN_TRIPLES.iter().map(|&s| value_classes(s)).collect();
    let rep = (3..=n_max)
        .into_par_iter()
        .map(|n| check_one_n(n, &classes))
        .reduce(TheoremReport::default, TheoremReport::merge);
    TheoremReport { n_max, ..rep }
}

/// Which lemma construction a trial exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LemmaCase {
    /// Opposite-signed `m_l`, `m_s` on the same half of the circle.
    OneSide,
    /// Same-signed `m_l ≠ m_s` with `l + s = n`.
    MirrorPair,
    /// Same-signed `m_l`, `m_s` on opposite halves with `l + s ≠ n`.
    Straddle,
    /// Equal masses; every certificate is exactly zero.
    Control,
}

impl LemmaCase {
    const ALL: [LemmaCase; 4] = [LemmaCase::OneSide, LemmaCase::MirrorPair, LemmaCase::Straddle, LemmaCase::Control];
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LemmaSuiteReport {
    pub trials: usize,
    pub one_side: usize,
    pub mirror_pair: usize,
    pub straddle: usize,
    pub control: usize,
    pub unconverged: usize,
    /// Largest `|H(Sm − m) − expansion| / |H(Sm − m)|`.
    pub max_relative_mismatch: f64,
    /// Least negative reflection certificate over non-control trials.
    pub max_reflection_value: f64,
    pub failures: Vec<String>,
}

impl LemmaSuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.unconverged == 0
    }
}

/// Per-trial seed; keeps trials independent of scheduling.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    let mut z = seed ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_special(rng: &mut ChaCha8Rng, sign: i8) -> f64 {
    if sign > 0 {
        rng.gen_range(1.2..4.0)
    } else {
        rng.gen_range(0.2..0.8)
    }
}

struct Trial {
    case: LemmaCase,
    n: usize,
    alpha: f64,
    l: usize,
    s: usize,
    masses: MassVector,
}

fn antipodal_free(l: usize, s: usize, n: usize) -> bool {
    2 * l != n && 2 * s != n && 2 * (s - l) != n
}

fn sample_positions(rng: &mut ChaCha8Rng, case: LemmaCase, n: usize) -> Option<(usize, usize)> {
    let candidates: Vec<(usize, usize)> = (1..n)
        .flat_map(|l| (l + 1..n).map(move |s| (l, s)))
        .filter(|&(l, s)| antipodal_free(l, s, n))
        .filter(|&(l, s)| {
            let (l2, s2) = (2 * l, 2 * s);
            match case {
                LemmaCase::OneSide => s2 < n || l2 > n,
                LemmaCase::MirrorPair => l + s == n,
                LemmaCase::Straddle => l2 < n && s2 > n && l + s != n,
                LemmaCase::Control => true,
            }
        })
        .collect();
    if candidates.is_empty() {
        None
    } else {
        Some(candidates[rng.gen_range(0..candidates.len())])
    }
}

fn build_trial(seed: u64, trial: u64, n_range: &RangeInclusive<usize>, alphas: &[f64]) -> Result<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, trial));
    let case = LemmaCase::ALL[(trial % 4) as usize];
    let alpha = alphas[rng.gen_range(0..alphas.len())];
    let ns: Vec<usize> = n_range.clone().filter(|&n| n >= 5).collect();
    for _ in 0..64 {
        let n = ns[rng.gen_range(0..ns.len())];
        let Some((l, s)) = sample_positions(&mut rng, case, n) else { continue };
        let mut m = vec![1.0; n];
        if case != LemmaCase::Control {
            let sl: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
            let ss = if case == LemmaCase::OneSide { -sl } else { sl };
            let sn: i8 = if rng.gen_bool(0.5) { 1 } else { -1 };
            m[l - 1] = random_special(&mut rng, sl);
            m[s - 1] = random_special(&mut rng, ss);
            while case == LemmaCase::MirrorPair && (m[l - 1] - m[s - 1]).abs() < 0.05 {
                m[s - 1] = random_special(&mut rng, ss);
            }
            m[n - 1] = random_special(&mut rng, sn);
        }
        return Ok(Trial {
            case,
            n,
            alpha,
            l,
            s,
            masses: MassVector::new(m)?,
        });
    }
    Err(Error::NotApplicable(format!("no admissible placement for {case:?} with n in {n_range:?}")))
}

/// The reflection certificate expanded over the four bodies it moves:
/// two negative squares plus the cross term times the chord bracket, or the
/// single square when `l + s = n`. Returns `(value, bracket)`.
pub fn reflection_expansion(h: &InteractionMatrix, l: usize, s: usize, ml: f64, ms: f64) -> (f64, Option<f64>) {
    let n = h.n();
    let pw = |i: usize, j: usize| h.at(i, j);
    if l + s == n {
        return (-2.0 * (ml - ms).powi(2) * pw(l, s), None);
    }
    let bracket = -pw(l, s) + pw(l, n - s) + pw(s, n - l) - pw(n - s, n - l);
    let value = -2.0 * (1.0 - ml).powi(2) * pw(l, n - l) - 2.0 * (1.0 - ms).powi(2) * pw(s, n - s)
        + 2.0 * (1.0 - ml) * (ms - 1.0) * bracket;
    (value, Some(bracket))
}

/// The counterclockwise quadruple whose chord gap equals `sign · bracket`.
fn bracket_quadruple(l: usize, s: usize, n: usize) -> ([usize; 4], f64) {
    let (l2, s2) = (2 * l, 2 * s);
    if s2 < n {
        ([s, n - s, n - l, l], 1.0)
    } else if l2 > n {
        ([n - l, l, s, n - s], 1.0)
    } else if l + s < n {
        ([n - s, s, n - l, l], -1.0)
    } else {
        ([l, n - l, s, n - s], -1.0)
    }
}

fn run_trial(trial_idx: u64, t: &Trial, tols: &Tolerances) -> std::result::Result<(f64, f64), String> {
    let tag = format!("trial {trial_idx} {:?} n={} α={} l={} s={}", t.case, t.n, t.alpha, t.l, t.s);
    let res = minimize_potential(&t.masses, t.alpha, &tols.minimize_options()).map_err(|e| format!("{tag}: {e}"))?;
    if !res.converged {
        return Err(format!("{tag}: unconverged"));
    }
    let cert = certificate_search(&t.masses, &res, t.alpha, tols.neg_margin).map_err(|e| format!("{tag}: {e}"))?;
    let s_val = cert.value_of(&DihedralElement::reflection(t.n));
    if t.case == LemmaCase::Control {
        return if cert.all_values.iter().all(|&v| v == 0.0) {
            Ok((0.0, f64::NEG_INFINITY))
        } else {
            Err(format!("{tag}: control certificates not all zero"))
        };
    }
    let h = interaction_matrix(&res.theta_min, t.alpha).map_err(|e| format!("{tag}: {e}"))?;
    let (expansion, bracket) = reflection_expansion(&h, t.l, t.s, t.masses[t.l - 1], t.masses[t.s - 1]);
    let rel = (s_val - expansion).abs() / s_val.abs();
    if !(s_val < -cert.threshold) {
        return Err(format!("{tag}: reflection certificate {s_val:e} not negative"));
    }
    if !(rel <= 1e-10) {
        return Err(format!("{tag}: expansion mismatch {rel:e}"));
    }
    if let Some(bracket) = bracket {
        let (quad, sign) = bracket_quadruple(t.l, t.s, t.n);
        let gap = quadrilateral_gap(&res.theta_min, quad.map(|i| i - 1), t.alpha).map_err(|e| format!("{tag}: {e}"))?;
        if !(gap < 0.0) || (sign * gap - bracket).abs() > 1e-12 * (1.0 + bracket.abs()) {
            return Err(format!("{tag}: bracket {bracket:e} does not match chord gap {gap:e}"));
        }
    }
    Ok((rel, s_val))
}

/// Builds random instances that violate a lemma's position conclusion and
/// checks that the reflection `S` certifies each, matching the explicit
/// expansion of `H_m(Sm − m)`.
pub fn run_lemma_suite(
    seed: u64,
    trials: usize,
    n_range: RangeInclusive<usize>,
    alphas: &[f64],
    tols: &Tolerances,
) -> Result<LemmaSuiteReport> {
    if alphas.is_empty() || alphas.iter().any(|a| !(*a > 0.0)) || !n_range.clone().any(|n| n >= 5) {
        return Err(Error::NotApplicable("lemma suite needs n >= 5 and positive exponents".into()));
    }
    let built: Vec<Trial> = (0..trials as u64)
        .map(|i| build_trial(seed, i, &n_range, alphas))
        .collect::<Result<_>>()?;
    let outcomes: Vec<_> = built
        .par_iter()
        .enumerate()
        .map(|(i, t)| run_trial(i as u64, t, tols))
        .collect();

    let mut rep = LemmaSuiteReport {
        trials,
        max_reflection_value: f64::NEG_INFINITY,
        ..Default::default()
    };
    for (t, out) in built.iter().zip(outcomes) {
        match t.case {
            LemmaCase::OneSide => rep.one_side += 1,
            LemmaCase::MirrorPair => rep.mirror_pair += 1,
            LemmaCase::Straddle => rep.straddle += 1,
            LemmaCase::Control => rep.control += 1,
        }
        match out {
            Ok((rel, s_val)) => {
                rep.max_relative_mismatch = rep.max_relative_mismatch.max(rel);
                rep.max_reflection_value = rep.max_reflection_value.max(s_val);
            }
            Err(msg) => {
                if msg.ends_with("unconverged") {
                    rep.unconverged += 1;
                }
                rep.failures.push(msg);
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(p: [Rational; 3]) -> [i64; 3] {
        p.map(|x| {
            assert!(x.is_integer());
            x.to_integer()
        })
    }

    #[test]
    fn predicate_examples() {
        assert_eq!(ints(side_predicates(1, 2, 6).unwrap()), [2, -4, 2]);
        assert_eq!(ints(side_predicates(4, 5, 6).unwrap()), [2, 2, -4]);
        let odd = side_predicates(1, 2, 5).unwrap();
        assert_eq!(odd[0], Rational::new(3, 4));
        assert!(side_predicates(2, 2, 6).is_err());
        assert!(side_predicates(0, 2, 6).is_err());
        assert!(side_predicates(1, 6, 6).is_err());
    }

    #[test]
    fn zero_factor_means_antipodal() {
        for n in 3..30 {
            for l in 1..n {
                for s in l + 1..n {
                    let sys = SignConstraintSystem::new(l, s, n, [1, 1, 1]).unwrap();
                    let p = SpecialMassPattern::new(n, l, s, [2.0, 3.0, 4.0]).unwrap();
                    assert_eq!(sys.has_zero_factor(), !p.antipodal_pairs().is_empty(), "n={n} l={l} s={s}");
                }
            }
        }
    }

    #[test]
    fn required_sign_cases() {
        use RequiredSign::*;
        assert_eq!(required_signs([1, 1, 1]).unwrap(), [Positive, Positive, Positive]);
        assert_eq!(required_signs([-1, 1, 1]).unwrap(), [Negative, Positive, Negative]);
        assert_eq!(required_signs([-1, -1, 1]).unwrap(), [Positive, Negative, Negative]);
        assert!(matches!(required_signs([1, 0, 1]), Err(Error::ZeroSign)));
    }

    #[test]
    fn predictions() {
        let p = SpecialMassPattern::new(6, 1, 2, [2.0, 3.0, 4.0]).unwrap();
        let v = predict_nonexistence(&p);
        assert_eq!(v.tag, PredictionTag::LemmaChainInfeasible);
        assert_eq!(v.system.unwrap().violated, vec![2]);
        assert!(v.witness.starts_with("p2 = -4"));

        let p = SpecialMassPattern::new(4, 1, 2, [2.0, 3.0, 4.0]).unwrap();
        assert_eq!(predict_nonexistence(&p).tag, PredictionTag::AntipodalCertificate);

        let p = SpecialMassPattern::new(5, 2, 3, [2.0, 2.0, 3.0]).unwrap();
        assert_eq!(predict_nonexistence(&p).tag, PredictionTag::HypothesesNotMet);
    }

    /// Hand table for n = 6: the non-antipodal placements and their
    /// predicate signs.
    #[test]
    fn manual_table_for_six_bodies() {
        let table: [((usize, usize), [i64; 3]); 4] = [
            ((1, 2), [2, -4, 2]),
            ((1, 5), [-4, 2, 2]),
            ((2, 4), [-1, -1, -1]),
            ((4, 5), [2, 2, -4]),
        ];
        let mut non_antipodal = vec![];
        for l in 1..6 {
            for s in l + 1..6 {
                let p = SpecialMassPattern::new(6, l, s, [2.0, 3.0, 4.0]).unwrap();
                if p.antipodal_pairs().is_empty() {
                    non_antipodal.push((l, s));
                }
            }
        }
        assert_eq!(non_antipodal, table.iter().map(|(ls, _)| *ls).collect::<Vec<_>>());
        for ((l, s), want) in table {
            assert_eq!(ints(side_predicates(l, s, 6).unwrap()), want);
            for signs in SIGN_TRIPLES {
                let sys = SignConstraintSystem::new(l, s, 6, signs).unwrap();
                assert!(!sys.is_satisfiable());
            }
        }
        let rep = exhaustive_theorem_check(6);
        assert!(rep.passed());
        // n=3..6 distinct-value patterns alone: 8 sign triples per placement.
        assert!(rep.infeasible >= 8 * (1 + 4));
    }

    #[test]
    fn exhaustive_small() {
        let rep = exhaustive_theorem_check(40);
        assert!(rep.passed(), "{:?}", &rep.counterexamples[..rep.counterexamples.len().min(5)]);
        assert!(rep.antipodal > 0 && rep.symmetric_skipped > 0 && rep.infeasible > 0);
        assert_eq!(rep.patterns, rep.antipodal + rep.symmetric_skipped + rep.infeasible);
    }

    #[test]
    fn lemma_suite_small() {
        let rep = run_lemma_suite(7, 24, 5..=8, &[0.5, 1.0, 2.0], &Tolerances::default()).unwrap();
        assert!(rep.passed(), "{:?}", rep.failures);
        assert_eq!(rep.one_side + rep.mirror_pair + rep.straddle + rep.control, 24);
        assert!(rep.max_reflection_value < 0.0);
        let again = run_lemma_suite(7, 24, 5..=8, &[0.5, 1.0, 2.0], &Tolerances::default()).unwrap();
        assert_eq!(rep, again);
    }

    #[test]
    fn lemma_suite_rejects_small_n() {
        assert!(run_lemma_suite(1, 4, 3..=4, &[1.0], &Tolerances::default()).is_err());
    }
}
