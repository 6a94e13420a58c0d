//! Mass vectors and gauge-fixed angle configurations.

use std::f64::consts::TAU;
use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest number of bodies the crate accepts.
pub const MIN_BODIES: usize = 3;

/// Ordered positive masses; entry `i` sits at the `i`-th angle of a configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.len() < MIN_BODIES {
            return Err(Error::InvalidMasses(format!(
                "need at least {MIN_BODIES} bodies, got {}",
                masses.len()
            )));
        }
        if let Some((i, m)) = masses
            .iter()
            .enumerate()
            .find(|(_, m)| !(m.is_finite() && **m > 0.0))
        {
            return Err(Error::InvalidMasses(format!(
                "mass {} is {m}, must be positive and finite",
                i + 1
            )));
        }
        Ok(MassVector(masses))
    }

    /// `n` unit masses.
    pub fn equal(n: usize) -> Result<Self> {
        Self::new(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        crate::sum::sum(self.0.iter().copied())
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Index<usize> for MassVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for MassVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        MassVector::new(v)
    }
}

impl From<MassVector> for Vec<f64> {
    fn from(m: MassVector) -> Vec<f64> {
        m.0
    }
}

/// Strictly increasing angles `0 < θ_1 < … < θ_n = 2π` on the unit circle.
///
/// Pinning the last body at `2π` removes the rotational symmetry, so every
/// co-circular arrangement of an ordered mass vector has exactly one
/// representative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AngleConfig(Vec<f64>);

impl AngleConfig {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        check_angles(&angles)?;
        Ok(AngleConfig(angles))
    }

    /// The regular `n`-gon `θ_k = 2πk/n`.
    pub fn regular(n: usize) -> Result<Self> {
        if n < MIN_BODIES {
            return Err(Error::InvalidAngles(format!(
                "need at least {MIN_BODIES} bodies, got {n}"
            )));
        }
        let mut angles: Vec<f64> = (1..=n).map(|k| TAU * k as f64 / n as f64).collect();
        angles[n - 1] = TAU;
        Ok(AngleConfig(angles))
    }

    /// Builds a configuration from the free angles `θ_1..θ_{n-1}`, appending the gauge `2π`.
    pub fn from_free(free: &[f64]) -> Result<Self> {
        let mut angles = Vec::with_capacity(free.len() + 1);
        angles.extend_from_slice(free);
        angles.push(TAU);
        Self::new(angles)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// `θ_1..θ_{n-1}`, the coordinates the optimizer moves.
    pub fn free(&self) -> &[f64] {
        &self.0[..self.0.len() - 1]
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    /// Largest componentwise difference to another configuration.
    pub fn max_abs_diff(&self, other: &AngleConfig) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Index<usize> for AngleConfig {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for AngleConfig {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        AngleConfig::new(v)
    }
}

impl From<AngleConfig> for Vec<f64> {
    fn from(t: AngleConfig) -> Vec<f64> {
        t.0
    }
}

fn check_angles(angles: &[f64]) -> Result<()> {
    let n = angles.len();
    if n < MIN_BODIES {
        return Err(Error::InvalidAngles(format!(
            "need at least {MIN_BODIES} bodies, got {n}"
        )));
    }
    if angles[n - 1] != TAU {
        return Err(Error::InvalidAngles(format!(
            "last angle must be exactly 2π, got {}",
            angles[n - 1]
        )));
    }
    if !(angles[0].is_finite() && angles[0] > 0.0) {
        return Err(Error::InvalidAngles(format!(
            "first angle must be positive, got {}",
            angles[0]
        )));
    }
    if let Some(k) = angles.windows(2).position(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidAngles(format!(
            "angles {} and {} are not strictly increasing",
            k + 1,
            k + 2
        )));
    }
    Ok(())
}
