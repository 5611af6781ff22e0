//! Closed-form steady-state model of a base-excited resonant generator.
//!
//! The proof mass `m` on stiffness `k` is driven through its frame by
//! `y(t) = Y sin(wt)`; the relative displacement `z` obeys
//! `m z'' + c_T z' + k z = -m y''`. Damping is carried as dimensionless
//! ratios (`zeta = c / (2 m w_n)`); coefficients are derived on demand.
//!
//! Every closed form here takes the *peak* base amplitude. RMS figures are
//! converted at the boundary through [`Acceleration`] / [`BaseAmplitude`].

use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{require_finite, require_non_negative, require_positive, Error, Result};

/// Lumped mechanical model of the generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorParams {
    mass_kg: f64,
    stiffness_n_per_m: f64,
    zeta_parasitic: f64,
    displacement_limit_m: Option<f64>,
}

impl GeneratorParams {
    pub fn new(mass_kg: f64, stiffness_n_per_m: f64, zeta_parasitic: f64) -> Result<Self> {
        require_positive("mass_kg", mass_kg)?;
        require_positive("stiffness_n_per_m", stiffness_n_per_m)?;
        require_non_negative("zeta_parasitic", zeta_parasitic)?;
        if zeta_parasitic >= 1.0 {
            return Err(Error::invalid("zeta_parasitic", zeta_parasitic, "must be < 1"));
        }
        Ok(Self {
            mass_kg,
            stiffness_n_per_m,
            zeta_parasitic,
            displacement_limit_m: None,
        })
    }

    /// Builds the model from a mass and a resonant frequency in Hz, with `k = m (2 pi f)^2`.
    pub fn from_resonance(mass_kg: f64, resonant_frequency_hz: f64, zeta_parasitic: f64) -> Result<Self> {
        require_positive("mass_kg", mass_kg)?;
        require_positive("resonant_frequency_hz", resonant_frequency_hz)?;
        let omega_n = 2.0 * PI * resonant_frequency_hz;
        Self::new(mass_kg, mass_kg * omega_n * omega_n, zeta_parasitic)
    }

    pub fn with_displacement_limit(mut self, limit_m: f64) -> Result<Self> {
        require_positive("displacement_limit_m", limit_m)?;
        self.displacement_limit_m = Some(limit_m);
        Ok(self)
    }

    pub fn mass_kg(&self) -> f64 {
        self.mass_kg
    }

    pub fn stiffness_n_per_m(&self) -> f64 {
        self.stiffness_n_per_m
    }

    pub fn zeta_parasitic(&self) -> f64 {
        self.zeta_parasitic
    }

    pub fn displacement_limit_m(&self) -> Option<f64> {
        self.displacement_limit_m
    }

    pub fn natural_frequency(&self) -> f64 {
        (self.stiffness_n_per_m / self.mass_kg).sqrt()
    }

    /// Parasitic damping coefficient `c_p = 2 m w_n zeta_p` in N s/m.
    pub fn parasitic_damping_coefficient(&self) -> f64 {
        damping_coefficient_from_ratio(self.zeta_parasitic, self)
    }
}

/// Electromagnetic transduction parameters of the coil and its load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoilCircuit {
    pub turns: u32,
    /// Effective side length of the (square) coil.
    pub side_length_m: f64,
    pub flux_density_t: f64,
    pub r_coil_ohm: f64,
    pub l_coil_h: f64,
    pub r_load_ohm: f64,
}

impl CoilCircuit {
    pub fn new(
        turns: u32,
        side_length_m: f64,
        flux_density_t: f64,
        r_coil_ohm: f64,
        l_coil_h: f64,
        r_load_ohm: f64,
    ) -> Result<Self> {
        let coil = Self {
            turns,
            side_length_m,
            flux_density_t,
            r_coil_ohm,
            l_coil_h,
            r_load_ohm,
        };
        coil.validate()?;
        Ok(coil)
    }

    pub fn validate(&self) -> Result<()> {
        require_non_negative("side_length_m", self.side_length_m)?;
        require_non_negative("flux_density_t", self.flux_density_t)?;
        require_non_negative("r_coil_ohm", self.r_coil_ohm)?;
        require_non_negative("l_coil_h", self.l_coil_h)?;
        require_positive("r_load_ohm", self.r_load_ohm)?;
        Ok(())
    }

    pub fn with_load(self, r_load_ohm: f64) -> Result<Self> {
        let coil = Self { r_load_ohm, ..self };
        coil.validate()?;
        Ok(coil)
    }

    /// Flux-linkage gradient `N l B` in V s/m (EMF per unit relative velocity).
    pub fn coupling(&self) -> f64 {
        f64::from(self.turns) * self.side_length_m * self.flux_density_t
    }

    /// `|R_L + R_coil + j w L_coil|`.
    pub fn impedance_magnitude(&self, omega_rad_per_s: f64) -> f64 {
        (self.r_load_ohm + self.r_coil_ohm).hypot(omega_rad_per_s * self.l_coil_h)
    }

    /// Fraction of the electrical power that reaches the load (resistive divider).
    pub fn load_fraction(&self) -> f64 {
        self.r_load_ohm / (self.r_load_ohm + self.r_coil_ohm)
    }
}

/// Whether a vibration amplitude is quoted as a peak or an RMS value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AmplitudeConvention {
    Peak,
    Rms,
}

impl AmplitudeConvention {
    /// Multiplier that turns a value in this convention into a peak value.
    pub fn to_peak_factor(self) -> f64 {
        match self {
            AmplitudeConvention::Peak => 1.0,
            AmplitudeConvention::Rms => std::f64::consts::SQRT_2,
        }
    }
}

/// A sinusoidal acceleration level with its quoting convention.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Acceleration {
    pub value_m_s2: f64,
    pub convention: AmplitudeConvention,
}

impl Acceleration {
    pub fn new(value_m_s2: f64, convention: AmplitudeConvention) -> Result<Self> {
        require_non_negative("acceleration_m_s2", value_m_s2)?;
        Ok(Self {
            value_m_s2,
            convention,
        })
    }

    pub fn peak(&self) -> f64 {
        self.value_m_s2 * self.convention.to_peak_factor()
    }
}

/// A base displacement amplitude carrying the convention of the acceleration it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseAmplitude {
    pub value_m: f64,
    pub convention: AmplitudeConvention,
}

impl BaseAmplitude {
    pub fn peak(&self) -> f64 {
        self.value_m * self.convention.to_peak_factor()
    }
}

/// `Y = A / w^2`. The result is quoted in the same convention as `a`.
pub fn base_amplitude_from_acceleration(
    a_m_s2: f64,
    omega_rad_per_s: f64,
    convention: AmplitudeConvention,
) -> Result<BaseAmplitude> {
    require_non_negative("acceleration_m_s2", a_m_s2)?;
    require_positive("omega_rad_per_s", omega_rad_per_s)?;
    Ok(BaseAmplitude {
        value_m: a_m_s2 / (omega_rad_per_s * omega_rad_per_s),
        convention,
    })
}

/// Sinusoidal base vibration `y(t) = Y sin(w t)` with peak amplitude `Y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excitation {
    amplitude_m: f64,
    omega_rad_per_s: f64,
}

impl Excitation {
    pub fn new(amplitude_m: f64, omega_rad_per_s: f64) -> Result<Self> {
        require_non_negative("amplitude_m", amplitude_m)?;
        require_positive("omega_rad_per_s", omega_rad_per_s)?;
        Ok(Self {
            amplitude_m,
            omega_rad_per_s,
        })
    }

    /// Excitation producing acceleration `a` at `omega`, converted to a peak amplitude.
    pub fn from_acceleration(a: Acceleration, omega_rad_per_s: f64) -> Result<Self> {
        let y = base_amplitude_from_acceleration(a.value_m_s2, omega_rad_per_s, a.convention)?;
        Self::new(y.peak(), omega_rad_per_s)
    }

    pub fn amplitude_m(&self) -> f64 {
        self.amplitude_m
    }

    pub fn omega_rad_per_s(&self) -> f64 {
        self.omega_rad_per_s
    }

    pub fn frequency_hz(&self) -> f64 {
        self.omega_rad_per_s / (2.0 * PI)
    }

    /// Peak acceleration `A = w^2 Y`.
    pub fn acceleration_m_s2(&self) -> f64 {
        self.omega_rad_per_s * self.omega_rad_per_s * self.amplitude_m
    }
}

/// Relative displacement amplitude and phase lag behind the base motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementResponse {
    pub z_amplitude_m: f64,
    pub phase_rad: f64,
}

/// Steady-state outputs at one frequency and load.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponsePoint {
    pub omega_rad_per_s: f64,
    pub zeta_electrical: f64,
    pub zeta_total: f64,
    pub z_amplitude_m: f64,
    pub phase_rad: f64,
    pub p_dissipated_w: f64,
    pub p_load_w: f64,
    pub p_total_electrical_w: f64,
    pub v_load_rms_v: f64,
}

/// Quality factors and damping ratios of a loaded generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingDecomposition {
    pub q_total: f64,
    pub q_open_circuit: f64,
    pub q_electrical: f64,
    pub zeta_p: f64,
    pub zeta_e: f64,
    pub zeta_t: f64,
}

/// Any two of the three quality factors; the third is solved by [`compose_q_factors`].
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct QFactors {
    pub q_total: Option<f64>,
    pub q_open_circuit: Option<f64>,
    pub q_electrical: Option<f64>,
}

/// Outcome of comparing a predicted amplitude with the generator's travel limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DisplacementCheck {
    pub passed: bool,
    /// `limit - predicted`; `None` when the generator has no limit.
    pub margin_m: Option<f64>,
}

pub fn natural_frequency(g: &GeneratorParams) -> f64 {
    g.natural_frequency()
}

pub fn damping_ratio_from_coefficient(c_damp: f64, g: &GeneratorParams) -> f64 {
    c_damp / (2.0 * g.mass_kg * g.natural_frequency())
}

pub fn damping_coefficient_from_ratio(zeta: f64, g: &GeneratorParams) -> f64 {
    2.0 * g.mass_kg * g.natural_frequency() * zeta
}

fn check_zeta_total(zeta_total: f64) -> Result<f64> {
    require_non_negative("zeta_total", zeta_total)?;
    if zeta_total >= 1.0 {
        return Err(Error::invalid("zeta_total", zeta_total, "must be < 1"));
    }
    Ok(zeta_total)
}

/// Steady-state relative displacement amplitude and phase.
///
/// The phase is `atan2(c_T w, k - w^2 m)`, which stays in `[0, pi]` and passes
/// continuously through `pi/2` at resonance.
pub fn displacement_response(
    g: &GeneratorParams,
    zeta_total: f64,
    e: &Excitation,
) -> Result<DisplacementResponse> {
    check_zeta_total(zeta_total)?;
    let m = g.mass_kg;
    let k = g.stiffness_n_per_m;
    let w = e.omega_rad_per_s;
    let c_t = damping_coefficient_from_ratio(zeta_total, g);

    let denom = (k / m - w * w).hypot(c_t * w / m);
    if denom == 0.0 {
        return Err(Error::Singular("undamped excitation at resonance"));
    }
    Ok(DisplacementResponse {
        z_amplitude_m: w * w * e.amplitude_m / denom,
        phase_rad: (c_t * w).atan2(k - w * w * m),
    })
}

/// Mean power dissipated in the total damper.
pub fn dissipated_power(g: &GeneratorParams, zeta_total: f64, e: &Excitation) -> Result<f64> {
    check_zeta_total(zeta_total)?;
    if zeta_total == 0.0 {
        return Err(Error::invalid("zeta_total", zeta_total, "must be > 0"));
    }
    let w = e.omega_rad_per_s;
    let r = w / g.natural_frequency();
    let y = e.amplitude_m;
    let num = g.mass_kg * zeta_total * y * y * r.powi(3) * w.powi(3);
    let den = (1.0 - r * r).powi(2) + (2.0 * zeta_total * r).powi(2);
    Ok(num / den)
}

/// Power dissipated at resonance, `m Y^2 w_n^3 / (4 zeta_T)`.
pub fn max_resonant_power(g: &GeneratorParams, zeta_total: f64, amplitude_m: f64) -> Result<f64> {
    check_zeta_total(zeta_total)?;
    if zeta_total == 0.0 {
        return Err(Error::invalid("zeta_total", zeta_total, "must be > 0"));
    }
    require_non_negative("amplitude_m", amplitude_m)?;
    let wn = g.natural_frequency();
    Ok(g.mass_kg * amplitude_m * amplitude_m * wn.powi(3) / (4.0 * zeta_total))
}

/// Power taken by the electrical damping at resonance,
/// `m zeta_e Y^2 w_n^3 / (4 (zeta_p + zeta_e)^2)`.
pub fn load_power(g: &GeneratorParams, zeta_p: f64, zeta_e: f64, amplitude_m: f64) -> Result<f64> {
    require_non_negative("zeta_p", zeta_p)?;
    require_non_negative("zeta_e", zeta_e)?;
    require_non_negative("amplitude_m", amplitude_m)?;
    let zeta_t = zeta_p + zeta_e;
    if zeta_t == 0.0 {
        return Err(Error::Singular("zeta_p + zeta_e = 0"));
    }
    let wn = g.natural_frequency();
    Ok(g.mass_kg * zeta_e * amplitude_m * amplitude_m * wn.powi(3) / (4.0 * zeta_t * zeta_t))
}

/// Electromagnetic damping `(N l B)^2 / |R_L + R_coil + j w L_coil|` in N s/m.
pub fn em_damping_coefficient(c: &CoilCircuit, omega_rad_per_s: f64) -> Result<f64> {
    require_non_negative("omega_rad_per_s", omega_rad_per_s)?;
    let z = c.impedance_magnitude(omega_rad_per_s);
    if z == 0.0 {
        return Err(Error::Singular("zero total coil impedance"));
    }
    let nlb = c.coupling();
    Ok(nlb * nlb / z)
}

/// Load resistance maximising delivered power, `R_coil + (N l B)^2 / c_p`.
pub fn optimal_load(c: &CoilCircuit, c_parasitic: f64) -> Result<f64> {
    require_positive("c_parasitic", c_parasitic)?;
    let nlb = c.coupling();
    Ok(c.r_coil_ohm + nlb * nlb / c_parasitic)
}

/// Average load power at the optimum load,
/// `(m w_n^3 Y^2 / (16 zeta_p)) (1 - R_coil / R_load)`.
pub fn max_avg_load_power(
    g: &GeneratorParams,
    zeta_p: f64,
    amplitude_m: f64,
    r_coil_ohm: f64,
    r_load_ohm: f64,
) -> Result<f64> {
    require_positive("zeta_p", zeta_p)?;
    require_non_negative("amplitude_m", amplitude_m)?;
    require_non_negative("r_coil_ohm", r_coil_ohm)?;
    require_positive("r_load_ohm", r_load_ohm)?;
    let wn = g.natural_frequency();
    Ok(g.mass_kg * wn.powi(3) * amplitude_m * amplitude_m / (16.0 * zeta_p)
        * (1.0 - r_coil_ohm / r_load_ohm))
}

fn check_q(name: &'static str, q: f64) -> Result<f64> {
    if !q.is_finite() {
        return Err(Error::invalid(name, q, "must be finite"));
    }
    require_positive(name, q)
}

/// Completes a damping decomposition from any two quality factors using
/// `1/Q_T = 1/Q_OC + 1/Q_E`, then fills every ratio as `zeta = 1/(2Q)`.
pub fn compose_q_factors(partial: QFactors) -> Result<DampingDecomposition> {
    let given = [partial.q_total, partial.q_open_circuit, partial.q_electrical]
        .iter()
        .filter(|q| q.is_some())
        .count();
    if given != 2 {
        return Err(Error::Inconsistent(format!(
            "exactly two quality factors are required, got {given}"
        )));
    }

    let (q_total, q_open_circuit, q_electrical) =
        match (partial.q_total, partial.q_open_circuit, partial.q_electrical) {
            (Some(qt), Some(qoc), None) => {
                let qt = check_q("q_total", qt)?;
                let qoc = check_q("q_open_circuit", qoc)?;
                if qt >= qoc {
                    return Err(Error::Inconsistent(format!(
                        "loaded Q ({qt}) must be below open-circuit Q ({qoc})"
                    )));
                }
                (qt, qoc, 1.0 / (1.0 / qt - 1.0 / qoc))
            }
            (Some(qt), None, Some(qe)) => {
                let qt = check_q("q_total", qt)?;
                let qe = check_q("q_electrical", qe)?;
                if qt >= qe {
                    return Err(Error::Inconsistent(format!(
                        "loaded Q ({qt}) must be below electrical Q ({qe})"
                    )));
                }
                (qt, 1.0 / (1.0 / qt - 1.0 / qe), qe)
            }
            (None, Some(qoc), Some(qe)) => {
                let qoc = check_q("q_open_circuit", qoc)?;
                let qe = check_q("q_electrical", qe)?;
                (1.0 / (1.0 / qoc + 1.0 / qe), qoc, qe)
            }
            _ => unreachable!("exactly two present"),
        };

    Ok(DampingDecomposition {
        q_total,
        q_open_circuit,
        q_electrical,
        zeta_p: 0.5 / q_open_circuit,
        zeta_e: 0.5 / q_electrical,
        zeta_t: 0.5 / q_total,
    })
}

/// RMS load voltage `sqrt(P R_L)` for a mean load power `P`.
pub fn load_voltage_from_power(p_load_w: f64, r_load_ohm: f64) -> Result<f64> {
    require_non_negative("p_load_w", p_load_w)?;
    require_positive("r_load_ohm", r_load_ohm)?;
    Ok((p_load_w * r_load_ohm).sqrt())
}

pub fn check_displacement_limit(g: &GeneratorParams, predicted_z_m: f64) -> DisplacementCheck {
    match g.displacement_limit_m {
        Some(limit) => DisplacementCheck {
            passed: predicted_z_m <= limit,
            margin_m: Some(limit - predicted_z_m),
        },
        None => DisplacementCheck {
            passed: true,
            margin_m: None,
        },
    }
}

/// Full steady-state evaluation with the coil loaded by `coil.r_load_ohm`.
///
/// The electrical share of the dissipated power is `zeta_e / zeta_T`; the load
/// receives the `R_L / (R_L + R_coil)` part of it.
pub fn evaluate_response(g: &GeneratorParams, coil: &CoilCircuit, e: &Excitation) -> Result<ResponsePoint> {
    let w = e.omega_rad_per_s;
    let zeta_e = damping_ratio_from_coefficient(em_damping_coefficient(coil, w)?, g);
    let zeta_t = g.zeta_parasitic + zeta_e;
    require_finite("zeta_total", zeta_t)?;
    let disp = displacement_response(g, zeta_t, e)?;

    // All-zero block for an unexcited or undamped generator.
    let (p_d, p_e) = if zeta_t == 0.0 {
        (0.0, 0.0)
    } else {
        let p_d = dissipated_power(g, zeta_t, e)?;
        (p_d, p_d * zeta_e / zeta_t)
    };
    let p_load = p_e * coil.load_fraction();
    Ok(ResponsePoint {
        omega_rad_per_s: w,
        zeta_electrical: zeta_e,
        zeta_total: zeta_t,
        z_amplitude_m: disp.z_amplitude_m,
        phase_rad: disp.phase_rad,
        p_dissipated_w: p_d,
        p_load_w: p_load,
        p_total_electrical_w: p_e,
        v_load_rms_v: load_voltage_from_power(p_load, coil.r_load_ohm)?,
    })
}

/// Phase lag at resonance.
pub const RESONANT_PHASE_RAD: f64 = FRAC_PI_2;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit_generator(zeta_p: f64) -> GeneratorParams {
        GeneratorParams::new(1.0, 1.0, zeta_p).unwrap()
    }

    // Ratio-form Eq. for |z|/Y, written independently of the k/m form above.
    fn amplitude_ratio_oracle(zeta: f64, r: f64) -> f64 {
        r * r / ((1.0 - r * r).powi(2) + (2.0 * zeta * r).powi(2)).sqrt()
    }

    #[test]
    fn natural_frequency_cases() {
        assert_eq!(natural_frequency(&unit_generator(0.0)), 1.0);
        let g = GeneratorParams::new(4.0, 1.0, 0.0).unwrap();
        assert_eq!(natural_frequency(&g), 0.5);
        let g = GeneratorParams::new(4.4e-4, 2127.0, 0.0).unwrap();
        assert_relative_eq!(natural_frequency(&g), 2199.0, max_relative = 1e-3);
        assert_relative_eq!(natural_frequency(&g), 2.0 * PI * 350.0, max_relative = 1e-3);
    }

    #[test]
    fn generator_rejects_bad_values() {
        assert!(GeneratorParams::new(0.0, 1.0, 0.0).is_err());
        assert!(GeneratorParams::new(1.0, -1.0, 0.0).is_err());
        assert!(GeneratorParams::new(1.0, 1.0, 1.0).is_err());
        assert!(GeneratorParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(unit_generator(0.0).with_displacement_limit(0.0).is_err());
    }

    #[test]
    fn resonance_closed_form() {
        let g = GeneratorParams::new(2e-3, 2e-3 * 500.0f64.powi(2), 0.0).unwrap();
        let e = Excitation::new(3e-6, 500.0).unwrap();
        let d = displacement_response(&g, 0.02, &e).unwrap();
        assert_relative_eq!(d.z_amplitude_m, 3e-6 / 0.04, max_relative = 1e-12);
        assert_relative_eq!(d.phase_rad, RESONANT_PHASE_RAD, max_relative = 1e-12);
    }

    #[test]
    fn half_resonance_amplitude() {
        let g = unit_generator(0.0);
        let e = Excitation::new(1.0, 0.5).unwrap();
        let d = displacement_response(&g, 0.01, &e).unwrap();
        assert_relative_eq!(d.z_amplitude_m, amplitude_ratio_oracle(0.01, 0.5), max_relative = 1e-12);
        assert_relative_eq!(d.z_amplitude_m, 0.333_304, max_relative = 1e-5);
    }

    #[test]
    fn cantilever_displacement() {
        // Loaded Q of 350 with a 0.62 um base amplitude at resonance.
        let g = GeneratorParams::from_resonance(4.4e-4, 350.0, 0.0).unwrap();
        let e = Excitation::new(0.62e-6, g.natural_frequency()).unwrap();
        let d = displacement_response(&g, 1.0 / 700.0, &e).unwrap();
        assert_relative_eq!(d.z_amplitude_m, 217e-6, max_relative = 2e-3);
    }

    #[test]
    fn undamped_resonance_is_singular() {
        let g = unit_generator(0.0);
        let e = Excitation::new(1.0, 1.0).unwrap();
        assert_eq!(
            displacement_response(&g, 0.0, &e),
            Err(Error::Singular("undamped excitation at resonance"))
        );
        // Off resonance an undamped system is fine, phase sits on a branch end.
        let below = displacement_response(&g, 0.0, &Excitation::new(1.0, 0.5).unwrap()).unwrap();
        let above = displacement_response(&g, 0.0, &Excitation::new(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(below.phase_rad, 0.0);
        assert_eq!(above.phase_rad, PI);
        assert!(displacement_response(&g, 1.0, &Excitation::new(1.0, 0.5).unwrap()).is_err());
    }

    #[test]
    fn dissipated_power_cases() {
        let g = GeneratorParams::from_resonance(1e-3, 100.0, 0.0).unwrap();
        let wn = g.natural_frequency();
        let e = Excitation::new(1e-6, 0.9 * wn).unwrap();
        let p = dissipated_power(&g, 0.01, &e).unwrap();
        // Mean of c z'^2 = c w^2 Z^2 / 2, from the amplitude oracle.
        let c = 2.0 * 1e-3 * wn * 0.01;
        let z = 1e-6 * amplitude_ratio_oracle(0.01, 0.9);
        let oracle = 0.5 * c * (0.9 * wn).powi(2) * z * z;
        assert_relative_eq!(p, oracle, max_relative = 1e-12);
        assert_relative_eq!(p, 3.619_153_675_654_56e-8, max_relative = 1e-12);

        let at_wn = Excitation::new(1e-6, wn).unwrap();
        assert_relative_eq!(
            dissipated_power(&g, 0.01, &at_wn).unwrap(),
            max_resonant_power(&g, 0.01, 1e-6).unwrap(),
            max_relative = 1e-12
        );

        let slow = Excitation::new(1e-6, 1e-6 * wn).unwrap();
        assert!(dissipated_power(&g, 0.01, &slow).unwrap() < 1e-40);
        assert!(dissipated_power(&g, 0.0, &e).is_err());
    }

    #[test]
    fn resonant_power_scaling() {
        let g1 = GeneratorParams::from_resonance(1e-3, 100.0, 0.0).unwrap();
        let g2 = GeneratorParams::from_resonance(2e-3, 100.0, 0.0).unwrap();
        let g3 = GeneratorParams::from_resonance(1e-3, 200.0, 0.0).unwrap();
        let p1 = max_resonant_power(&g1, 0.01, 1e-6).unwrap();
        assert_relative_eq!(max_resonant_power(&g2, 0.01, 1e-6).unwrap(), 2.0 * p1, max_relative = 1e-12);
        assert_relative_eq!(max_resonant_power(&g3, 0.01, 1e-6).unwrap(), 8.0 * p1, max_relative = 1e-12);

        let g = GeneratorParams::new(4.4e-4, 4.4e-4 * 2199.0f64.powi(2), 0.0).unwrap();
        let p = max_resonant_power(&g, 1.0 / 362.0, 6.2e-7).unwrap();
        assert_relative_eq!(p, 1.627_647_377_414_66e-4, max_relative = 1e-12);
        assert!(max_resonant_power(&g, 0.0, 6.2e-7).is_err());
    }

    #[test]
    fn load_power_cases() {
        let g = GeneratorParams::from_resonance(1e-3, 50.0, 0.0).unwrap();
        assert_eq!(load_power(&g, 0.01, 0.0, 1e-6).unwrap(), 0.0);
        assert!(load_power(&g, 0.0, 0.0, 1e-6).is_err());
        let wn = g.natural_frequency();
        let matched = load_power(&g, 0.01, 0.01, 1e-6).unwrap();
        assert_relative_eq!(matched, 1e-3 * 1e-12 * wn.powi(3) / (16.0 * 0.01), max_relative = 1e-12);
        assert_relative_eq!(
            matched,
            max_avg_load_power(&g, 0.01, 1e-6, 0.0, 10.0).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn em_damping_cases() {
        let mut coil = CoilCircuit::new(0, 2.4e-3, 0.29, 100.0, 0.0, 110.0).unwrap();
        assert_eq!(em_damping_coefficient(&coil, 100.0).unwrap(), 0.0);
        coil.turns = 600;
        let c = em_damping_coefficient(&coil, 2.0 * PI * 9500.0).unwrap();
        assert_relative_eq!(c, (600.0 * 2.4e-3 * 0.29f64).powi(2) / 210.0, max_relative = 1e-12);
        assert_relative_eq!(c, 8.304_274_285_714_285e-4, max_relative = 1e-12);

        let inductive = CoilCircuit { l_coil_h: 1e-3, ..coil };
        assert!(em_damping_coefficient(&inductive, 1.0).unwrap() < c);

        let shorted = CoilCircuit {
            r_coil_ohm: 0.0,
            r_load_ohm: 0.0,
            ..coil
        };
        assert!(em_damping_coefficient(&shorted, 0.0).is_err());
        assert!(CoilCircuit::new(1, 1.0, 1.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn damping_ratio_conversions() {
        let g = GeneratorParams::new(4.4e-4, 4.4e-4 * 2199.0f64.powi(2), 0.0).unwrap();
        assert_eq!(damping_ratio_from_coefficient(0.0, &g), 0.0);
        assert_relative_eq!(damping_ratio_from_coefficient(4.45e-3, &g), 0.0023, max_relative = 1e-3);
        let zeta = 0.0123;
        let back = damping_ratio_from_coefficient(damping_coefficient_from_ratio(zeta, &g), &g);
        assert_relative_eq!(back, zeta, max_relative = 1e-12);
    }

    #[test]
    fn optimal_load_cases() {
        let coil = CoilCircuit::new(1, 0.1, 1.0, 93.0, 0.0, 100.0).unwrap();
        assert_relative_eq!(optimal_load(&coil, 4.45e-3).unwrap(), 93.0 + 0.01 / 4.45e-3, max_relative = 1e-12);
        assert_relative_eq!(optimal_load(&coil, 4.45e-3).unwrap(), 95.2, max_relative = 1e-3);
        let uncoupled = CoilCircuit { turns: 0, ..coil };
        assert_eq!(optimal_load(&uncoupled, 4.45e-3).unwrap(), 93.0);
        // sqrt(2) N l B doubles the added term.
        let strong = CoilCircuit {
            side_length_m: 0.1 * std::f64::consts::SQRT_2,
            ..coil
        };
        assert_relative_eq!(
            optimal_load(&strong, 1e-3).unwrap() - 93.0,
            2.0 * (optimal_load(&coil, 1e-3).unwrap() - 93.0),
            max_relative = 1e-12
        );
        assert!(optimal_load(&coil, 0.0).is_err());
    }

    #[test]
    fn max_avg_load_power_cases() {
        let g = GeneratorParams::from_resonance(1e-3, 50.0, 0.0).unwrap();
        assert_eq!(max_avg_load_power(&g, 0.01, 2e-6, 20.0, 20.0).unwrap(), 0.0);
        assert_relative_eq!(
            max_avg_load_power(&g, 0.01, 2e-6, 5.0, 20.0).unwrap(),
            5.813_676_877_556_216e-7,
            max_relative = 1e-12
        );
        assert!(max_avg_load_power(&g, 0.01, 2e-6, 5.0, 0.0).is_err());
    }

    #[test]
    fn compose_cantilever_decomposition() {
        let d = compose_q_factors(QFactors {
            q_total: Some(181.0),
            q_open_circuit: Some(216.0),
            q_electrical: None,
        })
        .unwrap();
        assert_relative_eq!(d.q_electrical, 1117.0, max_relative = 1e-3);
        assert!((d.zeta_e - 0.00045).abs() < 1e-5);
        assert!((d.zeta_p - 0.0023).abs() < 5e-5);
    }

    #[test]
    fn compose_rejects_bad_partials() {
        let only_oc = QFactors {
            q_open_circuit: Some(216.0),
            ..QFactors::default()
        };
        assert!(compose_q_factors(only_oc).is_err());
        let infinite = QFactors {
            q_open_circuit: Some(216.0),
            q_electrical: Some(f64::INFINITY),
            ..QFactors::default()
        };
        assert!(compose_q_factors(infinite).is_err());
        let inverted = QFactors {
            q_total: Some(216.0),
            q_open_circuit: Some(181.0),
            ..QFactors::default()
        };
        assert!(matches!(compose_q_factors(inverted), Err(Error::Inconsistent(_))));
        let all = QFactors {
            q_total: Some(100.0),
            q_open_circuit: Some(200.0),
            q_electrical: Some(200.0),
        };
        assert!(compose_q_factors(all).is_err());
    }

    #[test]
    fn base_amplitude_cases() {
        let y = base_amplitude_from_acceleration(3.0, 2.0 * PI * 350.0, AmplitudeConvention::Rms).unwrap();
        assert_relative_eq!(y.value_m, 0.62e-6, max_relative = 2e-3);
        assert_eq!(y.convention, AmplitudeConvention::Rms);
        assert_relative_eq!(y.peak(), y.value_m * 2f64.sqrt(), max_relative = 1e-15);
        let y = base_amplitude_from_acceleration(3.5, 2.0 * PI * 9500.0, AmplitudeConvention::Peak).unwrap();
        assert_relative_eq!(y.value_m, 0.98e-9, max_relative = 5e-3);
        let y = base_amplitude_from_acceleration(0.0, 7.0, AmplitudeConvention::Peak).unwrap();
        assert_eq!(y.value_m, 0.0);
        assert!(base_amplitude_from_acceleration(1.0, 0.0, AmplitudeConvention::Peak).is_err());
    }

    #[test]
    fn excitation_acceleration_is_derived() {
        let a = Acceleration::new(3.0, AmplitudeConvention::Rms).unwrap();
        let e = Excitation::from_acceleration(a, 2.0 * PI * 350.0).unwrap();
        assert_relative_eq!(e.acceleration_m_s2(), 3.0 * 2f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(e.frequency_hz(), 350.0, max_relative = 1e-14);
    }

    #[test]
    fn load_voltage_cases() {
        assert_relative_eq!(load_voltage_from_power(2.85e-6, 100.0).unwrap(), 16.88e-3, max_relative = 1e-3);
        assert_eq!(load_voltage_from_power(0.0, 50.0).unwrap(), 0.0);
        assert_eq!(load_voltage_from_power(1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn displacement_limit_cases() {
        let limited = unit_generator(0.0).with_displacement_limit(240e-6).unwrap();
        let check = check_displacement_limit(&limited, 164e-9);
        assert!(check.passed);
        assert_relative_eq!(check.margin_m.unwrap(), 240e-6 - 164e-9);
        assert!(!check_displacement_limit(&limited, 241e-6).passed);
        let free = check_displacement_limit(&unit_generator(0.0), 1e3);
        assert!(free.passed);
        assert_eq!(free.margin_m, None);
    }

    #[test]
    fn response_point_invariants_and_zero_excitation() {
        let g = GeneratorParams::from_resonance(4.4e-4, 350.0, 1.0 / 432.0).unwrap();
        let coil = CoilCircuit::new(1000, 1e-3, 0.41, 93.0, 0.0, 100.0).unwrap();
        let e = Excitation::new(0.0, g.natural_frequency()).unwrap();
        let r = evaluate_response(&g, &coil, &e).unwrap();
        assert_eq!(r.z_amplitude_m, 0.0);
        assert_eq!(r.p_load_w, 0.0);
        assert_eq!(r.v_load_rms_v, 0.0);

        let e = Excitation::new(0.62e-6, g.natural_frequency()).unwrap();
        let r = evaluate_response(&g, &coil, &e).unwrap();
        assert!(r.p_load_w <= r.p_total_electrical_w);
        assert!(r.p_total_electrical_w <= r.p_dissipated_w);
        assert_relative_eq!(
            r.p_total_electrical_w,
            load_power(&g, g.zeta_parasitic(), r.zeta_electrical, 0.62e-6).unwrap(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn eq10_matches_eq7_load_share_at_optimum() {
        let g = GeneratorParams::from_resonance(4.4e-4, 350.0, 1.0 / 432.0).unwrap();
        let base = CoilCircuit::new(1000, 1e-3, 0.41, 93.0, 0.0, 100.0).unwrap();
        let r_opt = optimal_load(&base, g.parasitic_damping_coefficient()).unwrap();
        let coil = base.with_load(r_opt).unwrap();
        let wn = g.natural_frequency();
        let zeta_e = damping_ratio_from_coefficient(em_damping_coefficient(&coil, wn).unwrap(), &g);
        let electrical = load_power(&g, g.zeta_parasitic(), zeta_e, 1e-6).unwrap();
        let eq10 = max_avg_load_power(&g, g.zeta_parasitic(), 1e-6, 93.0, r_opt).unwrap();
        assert_relative_eq!(electrical * coil.load_fraction(), eq10, max_relative = 1e-9);
    }

    #[test]
    fn amplitude_peak_sits_above_resonance() {
        // |z|/Y peaks at w_n / sqrt(1 - 2 zeta^2), i.e. about zeta^2 w_n above w_n.
        let g = unit_generator(0.0);
        for &zeta in &[0.005, 0.02, 0.05] {
            let step = 1e-6;
            let (mut best_w, mut best_z) = (0.0, 0.0);
            let mut w = 1.0 - 0.01;
            while w < 1.0 + 0.01 {
                let z = displacement_response(&g, zeta, &Excitation::new(1.0, w).unwrap())
                    .unwrap()
                    .z_amplitude_m;
                if z > best_z {
                    best_z = z;
                    best_w = w;
                }
                w += step;
            }
            let expected = 1.0 / (1.0 - 2.0 * zeta * zeta).sqrt();
            assert!((best_w - expected).abs() <= 2.0 * step, "zeta {zeta}: {best_w} vs {expected}");
            assert!(best_w - 1.0 <= 1.01 * zeta * zeta / (1.0 - 2.0 * zeta * zeta));
        }
    }

    proptest! {
        #[test]
        fn resonance_consistency(m in 1e-5f64..10.0, f in 1.0f64..1e4, zeta in 1e-4f64..0.9, y in 1e-9f64..1e-2) {
            let g = GeneratorParams::from_resonance(m, f, 0.0).unwrap();
            let e = Excitation::new(y, g.natural_frequency()).unwrap();
            let pd = dissipated_power(&g, zeta, &e).unwrap();
            let p6 = max_resonant_power(&g, zeta, y).unwrap();
            prop_assert!((pd - p6).abs() <= 1e-12 * p6);
        }

        #[test]
        fn load_power_peaks_at_matched_damping(exp in -4.0f64..-1.0) {
            let zeta_p = 10f64.powf(exp);
            let g = unit_generator(0.0);
            let step = zeta_p * 1e-3;
            let mut best = (0.0, f64::MIN);
            for i in 1..=3000 {
                let zeta_e = step * i as f64;
                let p = load_power(&g, zeta_p, zeta_e, 1.0).unwrap();
                if p > best.1 {
                    best = (zeta_e, p);
                }
            }
            prop_assert!((best.0 - zeta_p).abs() <= step);
        }

        #[test]
        fn q_duality(a in 1.0f64..1e4, b in 1.0f64..1e4, which in 0usize..3) {
            let partial = match which {
                0 => QFactors { q_open_circuit: Some(a), q_electrical: Some(b), ..Default::default() },
                1 => QFactors { q_total: Some(a.min(b) * 0.9), q_open_circuit: Some(a.max(b)), ..Default::default() },
                _ => QFactors { q_total: Some(a.min(b) * 0.9), q_electrical: Some(a.max(b)), ..Default::default() },
            };
            let d = compose_q_factors(partial).unwrap();
            let lhs = 1.0 / d.q_total;
            let rhs = 1.0 / d.q_open_circuit + 1.0 / d.q_electrical;
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs);
            prop_assert_eq!(d.zeta_p, 0.5 / d.q_open_circuit);
            prop_assert_eq!(d.zeta_e, 0.5 / d.q_electrical);
            prop_assert_eq!(d.zeta_t, 0.5 / d.q_total);
            prop_assert!(d.q_electrical >= d.q_total && d.q_open_circuit >= d.q_total);
        }

        #[test]
        fn phase_is_monotone(zeta in 1e-3f64..0.9, r1 in 0.01f64..10.0, r2 in 0.01f64..10.0) {
            let g = unit_generator(0.0);
            let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
            let p_lo = displacement_response(&g, zeta, &Excitation::new(1.0, lo).unwrap()).unwrap().phase_rad;
            let p_hi = displacement_response(&g, zeta, &Excitation::new(1.0, hi).unwrap()).unwrap().phase_rad;
            prop_assert!(p_lo <= p_hi);
            prop_assert!((0.0..=PI).contains(&p_lo) && (0.0..=PI).contains(&p_hi));
        }

        #[test]
        fn eq7_eq10_coherence(turns in 1u32..5000, r_coil in 0.0f64..500.0, zeta_p in 1e-4f64..0.1, b in 0.01f64..1.0) {
            let g = GeneratorParams::from_resonance(1e-3, 120.0, zeta_p).unwrap();
            let base = CoilCircuit::new(turns, 1e-3, b, r_coil, 0.0, 1.0).unwrap();
            let r_opt = optimal_load(&base, g.parasitic_damping_coefficient()).unwrap();
            let coil = base.with_load(r_opt).unwrap();
            let zeta_e = damping_ratio_from_coefficient(em_damping_coefficient(&coil, 0.0).unwrap(), &g);
            let p7 = load_power(&g, zeta_p, zeta_e, 1e-6).unwrap() * coil.load_fraction();
            let p10 = max_avg_load_power(&g, zeta_p, 1e-6, r_coil, r_opt).unwrap();
            prop_assert!((p7 - p10).abs() <= 1e-9 * p10.max(f64::MIN_POSITIVE));
        }
    }
}
