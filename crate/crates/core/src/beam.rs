//! First-mode frequency of a clamped-free beam carrying a tip mass.
//!
//! Euler-Bernoulli bending about the thin axis gives the tip stiffness
//! `k = 3 E I / L^3` with `I = w t^3 / 12`. The distributed beam mass is lumped
//! at the tip with the usual first-mode weight of 33/140.

use std::f64::consts::PI;

use crate::error::{require_positive, Error, Result};

/// Fraction of the beam mass that acts at the tip in the first mode.
pub const EFFECTIVE_MASS_FRACTION: f64 = 33.0 / 140.0;

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialProps {
    pub name: String,
    pub youngs_modulus_pa: f64,
    pub density_kg_m3: f64,
}

impl MaterialProps {
    pub fn new(name: impl Into<String>, youngs_modulus_pa: f64, density_kg_m3: f64) -> Result<Self> {
        require_positive("youngs_modulus_pa", youngs_modulus_pa)?;
        require_positive("density_kg_m3", density_kg_m3)?;
        Ok(Self {
            name: name.into(),
            youngs_modulus_pa,
            density_kg_m3,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamSpec {
    pub length_m: f64,
    pub width_m: f64,
    pub thickness_m: f64,
    pub material: MaterialProps,
    pub tip_mass_kg: f64,
}

impl BeamSpec {
    pub fn validate(&self) -> Result<()> {
        require_positive("length_m", self.length_m)?;
        require_positive("width_m", self.width_m)?;
        require_positive("thickness_m", self.thickness_m)?;
        require_positive("tip_mass_kg", self.tip_mass_kg)?;
        require_positive("youngs_modulus_pa", self.material.youngs_modulus_pa)?;
        require_positive("density_kg_m3", self.material.density_kg_m3)?;
        if self.thickness_m > self.width_m {
            return Err(Error::invalid(
                "thickness_m",
                self.thickness_m,
                "must not exceed width (bending is about the thin axis)",
            ));
        }
        Ok(())
    }

    pub fn second_moment_m4(&self) -> f64 {
        self.width_m * self.thickness_m.powi(3) / 12.0
    }

    /// Tip stiffness `3 E I / L^3` in N/m.
    pub fn stiffness_n_per_m(&self) -> f64 {
        3.0 * self.material.youngs_modulus_pa * self.second_moment_m4() / self.length_m.powi(3)
    }

    pub fn beam_mass_kg(&self) -> f64 {
        self.material.density_kg_m3 * self.length_m * self.width_m * self.thickness_m
    }

    pub fn effective_mass_kg(&self) -> f64 {
        self.tip_mass_kg + EFFECTIVE_MASS_FRACTION * self.beam_mass_kg()
    }
}

pub fn resonant_frequency(b: &BeamSpec) -> Result<f64> {
    b.validate()?;
    Ok((b.stiffness_n_per_m() / b.effective_mass_kg()).sqrt() / (2.0 * PI))
}

/// Resonant frequencies over a thickness/material grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTable {
    pub thicknesses_m: Vec<f64>,
    pub materials: Vec<String>,
    /// `cells_hz[i][j]`: thickness `i`, material `j`.
    pub cells_hz: Vec<Vec<f64>>,
}

/// Evaluates `base` at every thickness for every material; length, width and
/// tip mass come from `base`.
pub fn frequency_table(base: &BeamSpec, thicknesses_m: &[f64], materials: &[MaterialProps]) -> Result<FrequencyTable> {
    if thicknesses_m.is_empty() || materials.is_empty() {
        return Err(Error::InvalidSweep("thickness and material lists must be non-empty".into()));
    }
    if thicknesses_m.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidSweep("thicknesses must be strictly increasing".into()));
    }
    let cells_hz = thicknesses_m
        .iter()
        .map(|&t| {
            materials
                .iter()
                .map(|mat| {
                    resonant_frequency(&BeamSpec {
                        thickness_m: t,
                        material: mat.clone(),
                        ..base.clone()
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FrequencyTable {
        thicknesses_m: thicknesses_m.to_vec(),
        materials: materials.iter().map(|m| m.name.clone()).collect(),
        cells_hz,
    })
}
