//! Batch classification over grids of mass vectors, with CSV and JSON
//! report encodings.
//!
//! Rows are computed in parallel and assembled in grid order, so a fixed
//! seed and fixed tolerances always produce byte-identical reports.

use std::collections::BTreeMap;
use std::io::{self, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::{predict_nonexistence_with, trial_seed};
use crate::certificate::{classify, Tolerances, VerdictTag};
use crate::error::{Error, Result};
use crate::symmetry::{is_ordered_symmetrically, special_positions, SpecialMassPattern};
use crate::types::MassVector;

/// Label used when a row's masses are not a three-special pattern.
pub const NOT_APPLICABLE: &str = "NOT_APPLICABLE";

/// How special-mass values are chosen for each placement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ValueSource {
    /// One fixed triple `(m_l, m_s, m_n)`.
    Fixed([f64; 3]),
    /// Every triple from `count` evenly spaced values in `[lo, hi]`, skipping 1.
    Grid { lo: f64, hi: f64, count: usize },
    /// `count` uniform triples from `[lo, hi]`.
    Random { lo: f64, hi: f64, count: usize },
    /// For each of the 8 sign patterns, `per_case` triples of distinct values
    /// (heavy in `[1.2, 4]`, light in `[0.2, 0.8]`); optionally also
    /// `per_case` triples with one equal pair that is not ordered
    /// symmetrically.
    SignCases { per_case: usize, two_equal: bool },
}

/// Where the grid's mass vectors come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternSource {
    /// Explicit mass vectors; `n_list` is ignored.
    Explicit(Vec<Vec<f64>>),
    /// Three special masses at `(l, s, n)`; all placements when `positions`
    /// is `None`.
    ThreeSpecial {
        positions: Option<(usize, usize)>,
        values: ValueSource,
    },
    /// `count` random vectors with `n − 2` unit masses and two specials.
    TwoSpecials { count: usize },
    /// `count` random vectors with two groups of equal masses.
    TwoGroups { count: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSpec {
    pub n_list: Vec<usize>,
    pub alpha_list: Vec<f64>,
    pub source: PatternSource,
    /// Adds an equal-mass control row for every `(n, α)`.
    #[serde(default)]
    pub controls: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        let explicit = matches!(self.source, PatternSource::Explicit(_));
        if self.alpha_list.is_empty() || (!explicit && self.n_list.is_empty()) {
            return Err(Error::NotApplicable("scan needs nonempty n and alpha lists".into()));
        }
        if let Some(a) = self.alpha_list.iter().find(|a| !(a.is_finite() && **a > 0.0)) {
            return Err(Error::InvalidExponent(*a));
        }
        if !explicit {
            if let Some(n) = self.n_list.iter().find(|&&n| n < 3) {
                return Err(Error::InvalidMasses(format!("n = {n} is below 3")));
            }
        }
        Ok(())
    }
}

/// One classified grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub alpha: f64,
    pub masses: Vec<f64>,
    pub l: Option<usize>,
    pub s: Option<usize>,
    pub theta: Vec<f64>,
    pub grad_norm: f64,
    pub com_norm: f64,
    pub row_spread: f64,
    pub lambda_estimate: f64,
    pub best_g: Option<String>,
    pub cert_value: Option<f64>,
    pub prediction_tag: String,
    pub verdict_tag: String,
}

pub const CSV_HEADER: [&str; 14] = [
    "n",
    "alpha",
    "masses",
    "l",
    "s",
    "theta",
    "grad_norm",
    "com_norm",
    "row_spread",
    "lambda_estimate",
    "best_g",
    "cert_value",
    "prediction_tag",
    "verdict_tag",
];

impl ReportRow {
    /// A prediction that rules the pattern out must not meet a centred
    /// candidate verdict.
    pub fn is_consistent(&self) -> bool {
        let rules_out = self.prediction_tag == "ANTIPODAL_CERTIFICATE" || self.prediction_tag == "LEMMA_CHAIN_INFEASIBLE";
        !(rules_out && self.verdict_tag == VerdictTag::CenteredCandidate.as_str())
    }

    /// A negative certificate at an apparently centred point would contradict
    /// the certificate's soundness.
    pub fn violates_soundness(&self, tols: &Tolerances) -> bool {
        self.cert_value.is_some_and(|c| c < -tols.neg_margin)
            && self.com_norm <= tols.center_tol
            && self.row_spread <= tols.center_tol
    }
}

/// Classifies one mass vector into a report row.
pub fn evaluate(masses: &MassVector, alpha: f64, tols: &Tolerances) -> Result<ReportRow> {
    let verdict = classify(masses, alpha, tols)?;
    let pattern = special_positions(masses, tols.unit_tol);
    let prediction = pattern
        .as_ref()
        .map(|p| predict_nonexistence_with(p, tols.value_tol).tag.as_str().to_string())
        .unwrap_or_else(|| NOT_APPLICABLE.to_string());
    let d = &verdict.diagnostics;
    Ok(ReportRow {
        n: masses.len(),
        alpha,
        masses: masses.as_slice().to_vec(),
        l: pattern.as_ref().map(|p| p.pos_l),
        s: pattern.as_ref().map(|p| p.pos_s),
        theta: verdict.minimizer.theta_min.as_slice().to_vec(),
        grad_norm: d.grad_norm,
        com_norm: d.com_norm,
        row_spread: d.row_spread,
        lambda_estimate: d.lambda_estimate,
        best_g: verdict.certificate.as_ref().map(|c| c.best_element.to_string()),
        cert_value: verdict.certificate.as_ref().map(|c| c.best_value),
        prediction_tag: prediction,
        verdict_tag: verdict.tag.as_str().to_string(),
    })
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => vec![],
        1 => vec![lo],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}

fn draw_signed(rng: &mut ChaCha8Rng, sign: i8) -> f64 {
    if sign > 0 {
        rng.gen_range(1.2..4.0)
    } else {
        rng.gen_range(0.2..0.8)
    }
}

fn draw_distinct(rng: &mut ChaCha8Rng, signs: [i8; 3]) -> [f64; 3] {
    loop {
        let v = signs.map(|s| draw_signed(rng, s));
        if (v[0] - v[1]).abs() > 1e-3 && (v[0] - v[2]).abs() > 1e-3 && (v[1] - v[2]).abs() > 1e-3 {
            return v;
        }
    }
}

fn point_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(seed, |acc, &p| trial_seed(acc, p))
}

fn value_triples(values: &ValueSource, n: usize, l: usize, s: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(point_seed(seed, &[n as u64, l as u64, s as u64]));
    match values {
        ValueSource::Fixed(v) => vec![*v],
        ValueSource::Grid { lo, hi, count } => {
            let axis: Vec<f64> = linspace(*lo, *hi, *count).into_iter().filter(|v| *v != 1.0 && *v > 0.0).collect();
            let mut out = Vec::with_capacity(axis.len().pow(3));
            for &a in &axis {
                for &b in &axis {
                    for &c in &axis {
                        out.push([a, b, c]);
                    }
                }
            }
            out
        }
        ValueSource::Random { lo, hi, count } => (0..*count)
            .map(|_| {
                [0; 3].map(|_| loop {
                    let v = rng.gen_range(*lo..=*hi);
                    if (v - 1.0).abs() > 1e-6 && v > 0.0 {
                        break v;
                    }
                })
            })
            .collect(),
        ValueSource::SignCases { per_case, two_equal } => {
            let signs_all: Vec<[i8; 3]> = (0..8)
                .map(|b| [0, 1, 2].map(|i| if b >> (2 - i) & 1 == 0 { 1 } else { -1 }))
                .collect();
            let mut out = Vec::new();
            for &signs in &signs_all {
                for _ in 0..*per_case {
                    out.push(draw_distinct(&mut rng, signs));
                }
            }
            if *two_equal {
                // Equal pairs that are not ordered symmetrically at this placement.
                let pairs: Vec<(usize, usize)> = [(0, 1), (0, 2), (1, 2)]
                    .into_iter()
                    .filter(|&(a, b)| {
                        let mut v = [2.0, 3.0, 4.0];
                        v[b] = v[a];
                        let p = SpecialMassPattern::new(n, l, s, v).expect("valid placement");
                        !is_ordered_symmetrically(&p, 1e-9)
                    })
                    .collect();
                if !pairs.is_empty() {
                    for _ in 0..*per_case {
                        let (a, b) = *pairs.choose(&mut rng).expect("nonempty");
                        let signs = [0; 3].map(|_| if rng.gen_bool(0.5) { 1 } else { -1 });
                        let mut v = draw_distinct(&mut rng, signs);
                        v[b] = v[a];
                        out.push(v);
                    }
                }
            }
            out
        }
    }
}

fn two_specials(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut m = vec![1.0; n];
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    for &i in &idx[..2] {
        let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
        m[i] = draw_signed(rng, sign);
    }
    m
}

fn two_groups(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let sign = if rng.gen_bool(0.5) { 1 } else { -1 };
    let other = draw_signed(rng, sign);
    let k = rng.gen_range(1..n);
    let mut m: Vec<f64> = (0..n).map(|i| if i < k { other } else { 1.0 }).collect();
    m.shuffle(rng);
    m
}

/// The scan's grid points in report order.
pub fn grid_points(spec: &ScanSpec) -> Result<Vec<(MassVector, f64)>> {
    spec.validate()?;
    let mut vectors: Vec<Vec<f64>> = Vec::new();
    let mut controls_for: Vec<usize> = Vec::new();
    match &spec.source {
        PatternSource::Explicit(list) => {
            vectors.extend(list.iter().cloned());
            if spec.controls {
                controls_for.extend(list.iter().map(Vec::len));
            }
        }
        PatternSource::ThreeSpecial { positions, values } => {
            for &n in &spec.n_list {
                if spec.controls {
                    vectors.push(vec![1.0; n]);
                }
                let placements: Vec<(usize, usize)> = match positions {
                    Some((l, s)) => {
                        SpecialMassPattern::new(n, *l, *s, [2.0, 3.0, 4.0])?;
                        vec![(*l, *s)]
                    }
                    None => (1..n).flat_map(|l| (l + 1..n).map(move |s| (l, s))).collect(),
                };
                for (l, s) in placements {
                    for v in value_triples(values, n, l, s, spec.seed) {
                        vectors.push(SpecialMassPattern::new(n, l, s, v)?.masses().into_inner());
                    }
                }
            }
        }
        PatternSource::TwoSpecials { count } | PatternSource::TwoGroups { count } => {
            let groups = matches!(spec.source, PatternSource::TwoGroups { .. });
            for &n in &spec.n_list {
                if spec.controls {
                    vectors.push(vec![1.0; n]);
                }
                let mut rng = ChaCha8Rng::seed_from_u64(point_seed(spec.seed, &[n as u64, groups as u64]));
                for _ in 0..*count {
                    vectors.push(if groups { two_groups(&mut rng, n) } else { two_specials(&mut rng, n) });
                }
            }
        }
    }
    for n in controls_for {
        vectors.push(vec![1.0; n]);
    }
    let masses = vectors.into_iter().map(MassVector::new).collect::<Result<Vec<_>>>()?;
    Ok(masses
        .iter()
        .flat_map(|m| spec.alpha_list.iter().map(move |&a| (m.clone(), a)))
        .collect())
}

/// Tallies over a finished scan.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScanSummary {
    pub rows: usize,
    pub verdicts: BTreeMap<String, usize>,
    pub predictions: BTreeMap<String, usize>,
    /// Rows where a ruling-out prediction met a centred candidate verdict.
    pub inconsistent_rows: usize,
    /// Rows with a negative certificate at an apparently centred point.
    pub soundness_violations: usize,
    /// Smallest `com_norm` over rows with unequal masses.
    pub min_com_norm: Option<f64>,
    /// Smallest `com_norm` among unequal-mass rows without a negative
    /// certificate.
    pub min_com_norm_uncertified: Option<f64>,
}

impl ScanSummary {
    pub fn from_rows(rows: &[ReportRow], tols: &Tolerances) -> Self {
        let mut sum = ScanSummary {
            rows: rows.len(),
            ..Default::default()
        };
        for tag in VerdictTag::ALL {
            sum.verdicts.insert(tag.as_str().to_string(), 0);
        }
        for r in rows {
            *sum.verdicts.entry(r.verdict_tag.clone()).or_default() += 1;
            *sum.predictions.entry(r.prediction_tag.clone()).or_default() += 1;
            sum.inconsistent_rows += usize::from(!r.is_consistent());
            sum.soundness_violations += usize::from(r.violates_soundness(tols));
            if r.masses.iter().all(|m| (m - 1.0).abs() <= tols.unit_tol) {
                continue;
            }
            sum.min_com_norm = Some(sum.min_com_norm.map_or(r.com_norm, |c| c.min(r.com_norm)));
            if r.verdict_tag != VerdictTag::CertifiedNotCc.as_str() {
                let cur = sum.min_com_norm_uncertified.unwrap_or(f64::INFINITY);
                sum.min_com_norm_uncertified = Some(cur.min(r.com_norm));
            }
        }
        sum
    }

    pub fn count(&self, tag: VerdictTag) -> usize {
        self.verdicts.get(tag.as_str()).copied().unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub rows: Vec<ReportRow>,
    pub summary: ScanSummary,
}

pub fn run_scan(spec: &ScanSpec) -> Result<ScanReport> {
    let points = grid_points(spec)?;
    let rows = points
        .par_iter()
        .map(|(m, a)| evaluate(m, *a, &spec.tolerances))
        .collect::<Result<Vec<_>>>()?;
    let summary = ScanSummary::from_rows(&rows, &spec.tolerances);
    Ok(ScanReport { rows, summary })
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn join_floats(v: &[f64]) -> String {
    v.iter().map(|&x| format_float(x)).collect::<Vec<_>>().join(";")
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(report: &ScanReport, out: W) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.n.to_string(),
            format_float(r.alpha),
            join_floats(&r.masses),
            opt(r.l),
            opt(r.s),
            join_floats(&r.theta),
            format_float(r.grad_norm),
            format_float(r.com_norm),
            format_float(r.row_spread),
            format_float(r.lambda_estimate),
            r.best_g.clone().unwrap_or_default(),
            r.cert_value.map(format_float).unwrap_or_default(),
            r.prediction_tag.clone(),
            r.verdict_tag.clone(),
        ])?;
    }
    w.flush()?;
    let mut out = w.into_inner().map_err(|e| e.into_error())?;
    let s = &report.summary;
    writeln!(out, "# summary rows={}", s.rows)?;
    for (tag, count) in &s.verdicts {
        writeln!(out, "# verdict {tag}={count}")?;
    }
    for (tag, count) in &s.predictions {
        writeln!(out, "# prediction {tag}={count}")?;
    }
    writeln!(out, "# inconsistent_rows={}", s.inconsistent_rows)?;
    writeln!(out, "# soundness_violations={}", s.soundness_violations)?;
    if let Some(c) = s.min_com_norm {
        writeln!(out, "# min_com_norm={}", format_float(c))?;
    }
    if let Some(c) = s.min_com_norm_uncertified {
        writeln!(out, "# min_com_norm_uncertified={}", format_float(c))?;
    }
    out.flush()
}

pub fn write_json<W: Write>(report: &ScanReport, mut out: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)
}

fn parse_floats(field: &str) -> std::result::Result<Vec<f64>, String> {
    if field.is_empty() {
        return Ok(vec![]);
    }
    field.split(';').map(|x| x.parse::<f64>().map_err(|e| e.to_string())).collect()
}

/// Reads the rows of a CSV report; summary comment lines are skipped.
pub fn read_csv<R: io::Read>(input: R) -> std::result::Result<Vec<ReportRow>, String> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let get = |i: usize| rec.get(i).unwrap_or("");
        let num = |i: usize| get(i).parse::<f64>().map_err(|e| format!("column {}: {e}", CSV_HEADER[i]));
        let opt_usize = |i: usize| -> std::result::Result<Option<usize>, String> {
            match get(i) {
                "" => Ok(None),
                v => v.parse().map(Some).map_err(|e: std::num::ParseIntError| e.to_string()),
            }
        };
        rows.push(ReportRow {
            n: get(0).parse().map_err(|e: std::num::ParseIntError| e.to_string())?,
            alpha: num(1)?,
            masses: parse_floats(get(2))?,
            l: opt_usize(3)?,
            s: opt_usize(4)?,
            theta: parse_floats(get(5))?,
            grad_norm: num(6)?,
            com_norm: num(7)?,
            row_spread: num(8)?,
            lambda_estimate: num(9)?,
            best_g: Some(get(10).to_string()).filter(|g| !g.is_empty()),
            cert_value: if get(11).is_empty() { None } else { Some(num(11)?) },
            prediction_tag: get(12).to_string(),
            verdict_tag: get(13).to_string(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_spec() -> ScanSpec {
        ScanSpec {
            n_list: vec![5, 6],
            alpha_list: vec![1.0],
            source: PatternSource::ThreeSpecial {
                positions: Some((1, 2)),
                values: ValueSource::Random {
                    lo: 0.3,
                    hi: 3.0,
                    count: 2,
                },
            },
            controls: true,
            seed: 11,
            tolerances: Tolerances::default(),
        }
    }

    #[test]
    fn grid_order_and_controls() {
        let pts = grid_points(&small_spec()).unwrap();
        assert_eq!(pts.len(), 2 * (1 + 2));
        assert!(pts[0].0.as_slice().iter().all(|&m| m == 1.0));
        assert_eq!(pts[3].0.len(), 6);
    }

    #[test]
    fn sign_cases_cover_all_patterns() {
        let v = value_triples(
            &ValueSource::SignCases {
                per_case: 2,
                two_equal: true,
            },
            7,
            1,
            3,
            5,
        );
        assert_eq!(v.len(), 8 * 2 + 2);
        for signs in 0..8usize {
            let chunk = &v[2 * signs..2 * signs + 2];
            let s0 = chunk[0].map(|x| x > 1.0);
            assert!(chunk.iter().all(|t| t.map(|x| x > 1.0) == s0));
        }
        for t in &v[16..] {
            let p = SpecialMassPattern::new(7, 1, 3, *t).unwrap();
            assert!(!is_ordered_symmetrically(&p, 1e-9));
        }
    }

    #[test]
    fn grid_values_skip_unit_mass() {
        let v = value_triples(&ValueSource::Grid { lo: 0.5, hi: 1.5, count: 3 }, 5, 1, 2, 0);
        assert_eq!(v.len(), 8);
    }

    #[test]
    fn rejects_empty_lists() {
        let mut spec = small_spec();
        spec.alpha_list.clear();
        assert!(run_scan(&spec).is_err());
        let mut spec = small_spec();
        spec.n_list = vec![2];
        assert!(run_scan(&spec).is_err());
    }

    #[test]
    fn csv_round_trip_preserves_values() {
        let rep = run_scan(&small_spec()).unwrap();
        let mut buf = Vec::new();
        write_csv(&rep, &mut buf).unwrap();
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, rep.rows);
    }
}
