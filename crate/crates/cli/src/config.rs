//! Config file loading.
//!
//! A config is a TOML document with `[[device]]`, `[[material]]` and
//! `[[scenario]]` arrays plus an optional `[beam]` table. Names are resolved
//! and units validated here, so commands only see core types.

use std::f64::consts::PI;
use std::path::Path;

use harvester_core::analysis::DeviceRecord;
use harvester_core::beam::{BeamSpec, MaterialProps};
use harvester_core::model::{Acceleration, AmplitudeConvention, CoilCircuit, Excitation, GeneratorParams};
use serde::Deserialize;

use crate::error::CliError;

pub const BUNDLED: &str = include_str!("../data/devices.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AccelTag {
    Peak,
    Rms,
}

impl From<AccelTag> for AmplitudeConvention {
    fn from(t: AccelTag) -> Self {
        match t {
            AccelTag::Peak => AmplitudeConvention::Peak,
            AccelTag::Rms => AmplitudeConvention::Rms,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub device: Vec<DeviceEntry>,
    #[serde(default)]
    pub material: Vec<MaterialEntry>,
    #[serde(default)]
    pub scenario: Vec<ScenarioEntry>,
    pub beam: Option<BeamEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceEntry {
    pub name: String,
    pub volume_mm3: f64,
    pub active_mass_kg: f64,
    pub resonant_frequency_hz: f64,
    pub measured_power_w: f64,
    pub measured_at_acceleration_m_s2: f64,
    pub acceleration_tag: Option<AccelTag>,
    pub flux_density_t: Option<f64>,
    pub r_coil_ohm: Option<f64>,
    pub q_open_circuit: Option<f64>,
    pub displacement_limit_m: Option<f64>,
    pub coil_turns: Option<u32>,
    #[serde(default)]
    pub notes: String,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialEntry {
    pub name: String,
    pub youngs_modulus_pa: f64,
    pub density_kg_m3: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamEntry {
    pub length_m: f64,
    pub width_m: f64,
    pub tip_mass_kg: f64,
    pub thicknesses_m: Vec<f64>,
    /// Material names to tabulate; all materials when absent.
    pub materials: Option<Vec<String>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioEntry {
    pub name: String,
    pub device: String,
    pub acceleration_m_s2: f64,
    pub acceleration_tag: AccelTag,
    pub frequency_hz: Option<f64>,
    pub zeta_parasitic: Option<f64>,
    pub coil: CoilEntry,
    pub frequency_sweep: Option<FrequencySweepEntry>,
    pub load_sweep: Option<LoadSweepEntry>,
    #[serde(default)]
    pub simulation: SimulationEntry,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoilEntry {
    pub turns: Option<u32>,
    pub side_length_m: f64,
    pub flux_density_t: Option<f64>,
    pub r_coil_ohm: Option<f64>,
    #[serde(default)]
    pub l_coil_h: f64,
    pub r_load_ohm: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencySweepEntry {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub points: usize,
    #[serde(default)]
    pub open_circuit: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSweepEntry {
    pub start_ohm: f64,
    pub stop_ohm: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationEntry {
    pub steps_per_period: Option<f64>,
    pub duration_s: Option<f64>,
    pub settle_fraction: Option<f64>,
    pub trace_every: Option<usize>,
}

pub fn load(path: Option<&Path>) -> Result<ConfigFile, CliError> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", p.display())))?,
        None => BUNDLED.to_string(),
    };
    parse(&text)
}

pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))
}

fn config_err(context: &str, err: harvester_core::Error) -> CliError {
    CliError::Config(format!("{context}: {err}"))
}

impl DeviceEntry {
    pub fn record(&self) -> Result<DeviceRecord, CliError> {
        let record = DeviceRecord {
            name: self.name.clone(),
            volume_mm3: self.volume_mm3,
            active_mass_kg: self.active_mass_kg,
            resonant_frequency_hz: self.resonant_frequency_hz,
            measured_power_w: self.measured_power_w,
            measured_at_acceleration_m_s2: self.measured_at_acceleration_m_s2,
            flux_density_t: self.flux_density_t,
            r_coil_ohm: self.r_coil_ohm,
            notes: self.notes.clone(),
        };
        record
            .validate()
            .map_err(|e| config_err(&format!("device '{}'", self.name), e))?;
        Ok(record)
    }
}

impl ConfigFile {
    pub fn device(&self, name: &str) -> Result<&DeviceEntry, CliError> {
        self.device
            .iter()
            .find(|d| d.name == name)
            .ok_or_else(|| CliError::Config(format!("unknown device '{name}'")))
    }

    pub fn records(&self) -> Result<Vec<DeviceRecord>, CliError> {
        self.device.iter().map(DeviceEntry::record).collect()
    }

    pub fn materials(&self, names: Option<&[String]>) -> Result<Vec<MaterialProps>, CliError> {
        let build = |m: &MaterialEntry| {
            MaterialProps::new(m.name.clone(), m.youngs_modulus_pa, m.density_kg_m3)
                .map_err(|e| config_err(&format!("material '{}'", m.name), e))
        };
        match names {
            None => self.material.iter().map(build).collect(),
            Some(names) => names
                .iter()
                .map(|n| {
                    self.material
                        .iter()
                        .find(|m| &m.name == n)
                        .ok_or_else(|| CliError::Config(format!("unknown material '{n}'")))
                        .and_then(build)
                })
                .collect(),
        }
    }

    /// Scenario by name, or the only scenario when no name is given.
    pub fn scenario(&self, name: Option<&str>) -> Result<&ScenarioEntry, CliError> {
        match name {
            Some(n) => self
                .scenario
                .iter()
                .find(|s| s.name == n)
                .ok_or_else(|| CliError::Config(format!("unknown scenario '{n}'"))),
            None => match self.scenario.as_slice() {
                [only] => Ok(only),
                [] => Err(CliError::Config("config defines no scenario".into())),
                _ => Err(CliError::Config(
                    "config defines several scenarios; pick one with --scenario".into(),
                )),
            },
        }
    }

    pub fn resolve(&self, name: Option<&str>, tag: Option<AccelTag>) -> Result<Scenario, CliError> {
        let entry = self.scenario(name)?;
        Scenario::resolve(self, entry, tag)
    }

    pub fn beam_base(&self) -> Result<(BeamSpec, Vec<f64>, Vec<MaterialProps>), CliError> {
        let beam = self
            .beam
            .as_ref()
            .ok_or_else(|| CliError::Config("config has no [beam] table".into()))?;
        let materials = self.materials(beam.materials.as_deref())?;
        let first = materials
            .first()
            .cloned()
            .ok_or_else(|| CliError::Config("no materials defined".into()))?;
        let spec = BeamSpec {
            length_m: beam.length_m,
            width_m: beam.width_m,
            thickness_m: beam.thicknesses_m.first().copied().unwrap_or(f64::NAN),
            material: first,
            tip_mass_kg: beam.tip_mass_kg,
        };
        spec.validate().map_err(|e| config_err("[beam]", e))?;
        Ok((spec, beam.thicknesses_m.clone(), materials))
    }
}

/// A scenario with its device resolved into model inputs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub device: DeviceEntry,
    pub generator: GeneratorParams,
    pub coil: CoilCircuit,
    pub acceleration: Acceleration,
    pub excitation: Excitation,
    pub frequency_sweep: Option<FrequencySweepEntry>,
    pub load_sweep: Option<LoadSweepEntry>,
    pub simulation: SimulationEntry,
}

impl Scenario {
    fn resolve(cfg: &ConfigFile, s: &ScenarioEntry, tag: Option<AccelTag>) -> Result<Self, CliError> {
        let ctx = format!("scenario '{}'", s.name);
        let device = cfg.device(&s.device)?.clone();
        device.record()?;

        let zeta_p = match (s.zeta_parasitic, device.q_open_circuit) {
            (Some(z), _) => z,
            (None, Some(q)) if q > 0.0 => 0.5 / q,
            (None, Some(q)) => {
                return Err(CliError::Config(format!("device '{}': q_open_circuit {q} must be > 0", device.name)))
            }
            (None, None) => {
                return Err(CliError::Config(format!(
                    "{ctx}: needs zeta_parasitic or a device q_open_circuit"
                )))
            }
        };
        let mut generator = GeneratorParams::from_resonance(device.active_mass_kg, device.resonant_frequency_hz, zeta_p)
            .map_err(|e| config_err(&ctx, e))?;
        if let Some(limit) = device.displacement_limit_m {
            generator = generator
                .with_displacement_limit(limit)
                .map_err(|e| config_err(&ctx, e))?;
        }

        let c = &s.coil;
        let turns = c
            .turns
            .or(device.coil_turns)
            .ok_or_else(|| CliError::Config(format!("{ctx}: coil turns not given")))?;
        let flux = c
            .flux_density_t
            .or(device.flux_density_t)
            .ok_or_else(|| CliError::Config(format!("{ctx}: flux_density_t not given")))?;
        let r_coil = c
            .r_coil_ohm
            .or(device.r_coil_ohm)
            .ok_or_else(|| CliError::Config(format!("{ctx}: r_coil_ohm not given")))?;
        let coil = CoilCircuit::new(turns, c.side_length_m, flux, r_coil, c.l_coil_h, c.r_load_ohm)
            .map_err(|e| config_err(&ctx, e))?;

        let tag = tag.unwrap_or(s.acceleration_tag);
        let acceleration =
            Acceleration::new(s.acceleration_m_s2, tag.into()).map_err(|e| config_err(&ctx, e))?;
        let f_hz = s.frequency_hz.unwrap_or(device.resonant_frequency_hz);
        if !(f_hz > 0.0 && f_hz.is_finite()) {
            return Err(CliError::Config(format!("{ctx}: frequency_hz {f_hz} must be > 0")));
        }
        let excitation = Excitation::from_acceleration(acceleration, 2.0 * PI * f_hz).map_err(|e| config_err(&ctx, e))?;

        Ok(Self {
            name: s.name.clone(),
            device,
            generator,
            coil,
            acceleration,
            excitation,
            frequency_sweep: s.frequency_sweep.clone(),
            load_sweep: s.load_sweep.clone(),
            simulation: s.simulation.clone(),
        })
    }
}
