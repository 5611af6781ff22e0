use std::f64::consts::{PI, SQRT_2};
use std::path::Path;

use harvester_core::analysis::{
    compare_catalog, extract_q_half_power, find_optimal_load, model_load_sweep, LoadSweep, SweepCurve,
};
use harvester_core::beam::frequency_table;
use harvester_core::model::{
    check_displacement_limit, damping_ratio_from_coefficient, displacement_response, em_damping_coefficient,
    evaluate_response, load_voltage_from_power, max_avg_load_power, optimal_load, Acceleration,
    AmplitudeConvention, Excitation,
};
use harvester_core::transient::{
    frequency_sweep_sim, simulate, ElectricalMode, SimConfig, SimOutput, SweepDrive,
};

use crate::config::{ConfigFile, FrequencySweepEntry, LoadSweepEntry, Scenario};
use crate::error::CliError;
use crate::output::{sci, Csv, Report};

fn tag_name(c: AmplitudeConvention) -> &'static str {
    match c {
        AmplitudeConvention::Peak => "peak",
        AmplitudeConvention::Rms => "rms",
    }
}

pub fn model(s: &Scenario) -> Result<String, CliError> {
    let g = &s.generator;
    let e = &s.excitation;
    let wn = g.natural_frequency();
    let mut r = Report::default();

    r.section("scenario");
    r.text("name", &s.name);
    r.text("device", &s.device.name);

    r.section("excitation");
    r.value("frequency_hz", e.frequency_hz());
    r.value("omega_rad_s", e.omega_rad_per_s());
    r.text("acceleration_tag", tag_name(s.acceleration.convention));
    r.value("acceleration_m_s2", s.acceleration.value_m_s2);
    r.value("base_amplitude_m", e.amplitude_m() / s.acceleration.convention.to_peak_factor());
    r.value("base_amplitude_peak_m", e.amplitude_m());

    let point = evaluate_response(g, &s.coil, e)?;
    r.section("generator");
    r.value("omega_n_rad_s", wn);
    r.value("f_n_hz", wn / (2.0 * PI));
    r.value("stiffness_n_per_m", g.stiffness_n_per_m());
    r.value("zeta_parasitic", g.zeta_parasitic());
    r.value("zeta_electrical", point.zeta_electrical);
    r.value("zeta_total", point.zeta_total);
    r.value("q_loaded", 0.5 / point.zeta_total);

    r.section("response");
    r.value("z_amplitude_m", point.z_amplitude_m);
    r.value("phase_rad", point.phase_rad);
    r.value("p_dissipated_w", point.p_dissipated_w);
    r.value("p_total_electrical_w", point.p_total_electrical_w);
    r.value("p_load_w", point.p_load_w);
    r.value("v_load_rms_v", point.v_load_rms_v);

    r.section("load_matching");
    let c_p = g.parasitic_damping_coefficient();
    if c_p > 0.0 {
        let r_opt = optimal_load(&s.coil, c_p)?;
        let y_at_wn = Excitation::from_acceleration(s.acceleration, wn)?.amplitude_m();
        r.value("optimal_load_ohm", r_opt);
        r.value(
            "p_load_max_avg_w",
            max_avg_load_power(g, g.zeta_parasitic(), y_at_wn, s.coil.r_coil_ohm, r_opt)?,
        );
    } else {
        r.text("optimal_load_ohm", "undefined (no parasitic damping)");
    }

    r.section("displacement_limit");
    let check = check_displacement_limit(g, point.z_amplitude_m);
    match (g.displacement_limit_m(), check.margin_m) {
        (Some(limit), Some(margin)) => {
            r.value("limit_m", limit);
            r.value("margin_m", margin);
        }
        _ => r.text("limit_m", "none"),
    }
    r.text("verdict", if check.passed { "pass" } else { "fail" });

    r.section("measured");
    r.value("measured_power_w", s.device.measured_power_w);
    r.value("measured_at_acceleration_m_s2", s.device.measured_at_acceleration_m_s2);
    r.value(
        "measured_v_load_rms_v",
        load_voltage_from_power(s.device.measured_power_w, s.coil.r_load_ohm)?,
    );
    Ok(r.into_string())
}

fn range_error(what: &str, msg: &str) -> CliError {
    CliError::Config(format!("{what}: {msg}"))
}

fn checked_range(what: &str, start: f64, stop: f64, points: usize) -> Result<(), CliError> {
    if points == 0 {
        return Err(range_error(what, "empty range (points = 0)"));
    }
    if !(start > 0.0 && start.is_finite() && stop.is_finite()) {
        return Err(range_error(what, "start and stop must be finite and > 0"));
    }
    if points > 1 && stop <= start {
        return Err(range_error(what, "stop must exceed start"));
    }
    Ok(())
}

pub fn linear_range(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    (0..points)
        .map(|i| start + (stop - start) * i as f64 / (points - 1) as f64)
        .collect()
}

pub fn log_range(start: f64, stop: f64, points: usize) -> Vec<f64> {
    if points == 1 {
        return vec![start];
    }
    let ratio = (stop / start).ln();
    (0..points)
        .map(|i| start * (ratio * i as f64 / (points - 1) as f64).exp())
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepKind {
    Frequency,
    Load,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum SweepMethod {
    /// Closed-form steady state.
    Model,
    /// Transient simulation per point.
    Sim,
}

fn frequency_sweep_spec(s: &Scenario) -> Result<&FrequencySweepEntry, CliError> {
    s.frequency_sweep
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("scenario '{}' has no [frequency_sweep]", s.name)))
}

fn load_sweep_spec(s: &Scenario) -> Result<&LoadSweepEntry, CliError> {
    s.load_sweep
        .as_ref()
        .ok_or_else(|| CliError::Config(format!("scenario '{}' has no [load_sweep]", s.name)))
}

pub fn sweep(s: &Scenario, kind: SweepKind, method: SweepMethod) -> Result<String, CliError> {
    match kind {
        SweepKind::Frequency => frequency_sweep(s, method),
        SweepKind::Load => load_sweep(s),
    }
}

fn frequency_sweep(s: &Scenario, method: SweepMethod) -> Result<String, CliError> {
    let spec = frequency_sweep_spec(s)?;
    checked_range("frequency_sweep", spec.start_hz, spec.stop_hz, spec.points)?;
    let freqs = linear_range(spec.start_hz, spec.stop_hz, spec.points);
    let omegas: Vec<f64> = freqs.iter().map(|f| 2.0 * PI * f).collect();
    let a_peak = s.acceleration.peak();
    let g = &s.generator;
    let coupling = s.coil.coupling();
    let mode = if spec.open_circuit {
        ElectricalMode::OpenCircuit
    } else {
        ElectricalMode::Loaded
    };

    let mut csv = Csv::new(&["freq_hz", "z_amp_m", "emf_rms_v", "p_load_w"]);
    match method {
        SweepMethod::Model => {
            for (&f, &w) in freqs.iter().zip(&omegas) {
                let e = Excitation::from_acceleration(s.acceleration, w)?;
                let (z, p_load) = match mode {
                    ElectricalMode::OpenCircuit => {
                        (displacement_response(g, g.zeta_parasitic(), &e)?.z_amplitude_m, 0.0)
                    }
                    ElectricalMode::Loaded => {
                        let pt = evaluate_response(g, &s.coil, &e)?;
                        (pt.z_amplitude_m, pt.p_load_w)
                    }
                };
                csv.row(&[f, z, coupling * w * z / SQRT_2, p_load]);
            }
        }
        SweepMethod::Sim => {
            let w_max = omegas[omegas.len() - 1];
            let zeta_t = match mode {
                ElectricalMode::OpenCircuit => g.zeta_parasitic(),
                ElectricalMode::Loaded => {
                    g.zeta_parasitic() + damping_ratio_from_coefficient(em_damping_coefficient(&s.coil, w_max)?, g)
                }
            };
            let cfg = sim_config(s, zeta_t, w_max)?;
            let runs = frequency_sweep_sim(g, &s.coil, SweepDrive::Acceleration(a_peak), &omegas, &cfg, mode)?;
            for (f, (_, out)) in freqs.iter().zip(runs) {
                let sum = out.summary;
                csv.row(&[*f, sum.z_amp_m, sum.emf_rms_v, sum.p_load_avg_w]);
            }
        }
    }
    Ok(csv.as_str().to_string())
}

fn load_sweep(s: &Scenario) -> Result<String, CliError> {
    let spec = load_sweep_spec(s)?;
    checked_range("load_sweep", spec.start_ohm, spec.stop_ohm, spec.points)?;
    let loads = log_range(spec.start_ohm, spec.stop_ohm, spec.points);
    let ls = model_load_sweep(&s.generator, &s.coil, &s.excitation, &loads)?;
    let mut csv = Csv::new(&["r_load_ohm", "p_load_w", "p_total_w"]);
    for p in ls.points() {
        csv.row(&[p.r_load_ohm, p.p_load_w, p.p_total_w]);
    }
    Ok(csv.as_str().to_string())
}

fn sim_config(s: &Scenario, zeta_total: f64, omega: f64) -> Result<SimConfig, CliError> {
    let sim = &s.simulation;
    let steps = sim.steps_per_period.unwrap_or(100.0);
    let mut cfg = SimConfig::for_response(&s.generator, zeta_total, omega, steps)
        .map_err(|e| CliError::Config(format!("[simulation]: {e}")))?;
    if let Some(d) = sim.duration_s {
        cfg.duration_s = d;
    }
    if let Some(f) = sim.settle_fraction {
        cfg.settle_fraction = f;
    }
    if let Some(every) = sim.trace_every {
        cfg = cfg.with_trace(every);
    }
    cfg.validate()
        .map_err(|e| CliError::Config(format!("[simulation]: {e}")))?;
    Ok(cfg)
}

/// Runs the scenario through the transient simulator. Returns the report and
/// the trace CSV when the scenario asks for a trace.
pub fn simulate_scenario(s: &Scenario) -> Result<(String, Option<String>), CliError> {
    let g = &s.generator;
    let w = s.excitation.omega_rad_per_s();
    let zeta_t = g.zeta_parasitic() + damping_ratio_from_coefficient(em_damping_coefficient(&s.coil, w)?, g);
    let cfg = sim_config(s, zeta_t, w)?;
    let SimOutput {
        summary,
        trace,
        warnings,
    } = simulate(g, &s.coil, &s.excitation, &cfg)?;

    let mut r = Report::default();
    r.section("simulation");
    r.text("scenario", &s.name);
    r.value("dt_s", cfg.dt_s);
    r.value("duration_s", cfg.duration_s);
    r.value("settle_fraction", cfg.settle_fraction);
    r.section("summary");
    r.value("z_amp_m", summary.z_amp_m);
    r.value("z_fit_amp_m", summary.z_fit_amp_m);
    r.value("phase_rad", summary.phase_rad);
    r.value("v_rel_rms_m_per_s", summary.v_rel_rms_m_per_s);
    r.value("emf_rms_v", summary.emf_rms_v);
    r.value("p_load_avg_w", summary.p_load_avg_w);
    r.value("p_parasitic_avg_w", summary.p_parasitic_avg_w);
    r.value("energy_balance_residual", summary.energy_balance_residual);
    for w in &warnings {
        r.text("warning", w);
    }

    let trace_csv = trace.map(|t| {
        let mut csv = Csv::new(&["t_s", "z_m", "zdot_m_s", "emf_v", "p_load_w"]);
        for i in 0..t.len() {
            csv.row(&[t.t_s[i], t.z_m[i], t.zdot_m_s[i], t.emf_v[i], t.p_load_w[i]]);
        }
        csv.as_str().to_string()
    });
    Ok((r.into_string(), trace_csv))
}

pub fn beam(cfg: &ConfigFile) -> Result<String, CliError> {
    let (base, thicknesses, materials) = cfg.beam_base()?;
    let table = frequency_table(&base, &thicknesses, &materials)
        .map_err(|e| CliError::Config(format!("[beam]: {e}")))?;
    let header: Vec<String> = std::iter::once("thickness_m".to_string())
        .chain(table.materials.iter().map(|m| format!("{m}_hz")))
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header_refs);
    for (t, row) in table.thicknesses_m.iter().zip(&table.cells_hz) {
        let values: Vec<f64> = std::iter::once(*t).chain(row.iter().copied()).collect();
        csv.row(&values);
    }
    Ok(csv.as_str().to_string())
}

pub fn compare(cfg: &ConfigFile, target_accel: f64) -> Result<String, CliError> {
    let records = cfg.records()?;
    if records.is_empty() {
        return Err(CliError::Config("device catalog is empty".into()));
    }
    if !(target_accel > 0.0 && target_accel.is_finite()) {
        return Err(CliError::Config(format!("--target-accel {target_accel} must be > 0")));
    }
    let rows = compare_catalog(&records, target_accel)?;
    let tag_of = |name: &str| {
        cfg.device
            .iter()
            .find(|d| d.name == name)
            .and_then(|d| d.acceleration_tag)
            .map_or("unspecified", |t| tag_name(AmplitudeConvention::from(t)))
    };
    let mut csv = Csv::new(&[
        "rank",
        "name",
        "measured_power_w",
        "measured_at_acceleration_m_s2",
        "acceleration_tag",
        "normalized_power_w",
        "volume_mm3",
        "power_density_nw_per_mm3",
    ]);
    for (i, row) in rows.iter().enumerate() {
        csv.text_row(&[
            (i + 1).to_string(),
            row.name.clone(),
            sci(row.measured_power_w),
            sci(row.measured_at_acceleration_m_s2),
            tag_of(&row.name).to_string(),
            sci(row.normalized_power_w),
            sci(row.volume_mm3),
            sci(row.power_density_nw_per_mm3),
        ]);
    }
    Ok(csv.as_str().to_string())
}

/// Q from a frequency-sweep CSV, or the optimum load from a load-sweep CSV,
/// chosen by the header.
pub fn analyze(path: &Path, column: &str, excitation: Acceleration) -> Result<String, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let header = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let mut r = Report::default();
    if header.split(',').any(|h| h.trim() == "r_load_ohm") {
        let ls = LoadSweep::from_csv(&text)?;
        let opt = find_optimal_load(&ls)?;
        r.section("load_optimum");
        r.value("r_opt_ohm", opt.r_opt_ohm);
        r.value("p_max_w", opt.p_max_w);
    } else {
        let curve = SweepCurve::from_csv(&text, column, excitation)?;
        let q = extract_q_half_power(&curve)?;
        r.section("half_power");
        r.value("q", q.q);
        r.value("f_res_hz", q.f_res_hz);
        r.value("f_lower_hz", q.f_lower_hz);
        r.value("f_upper_hz", q.f_upper_hz);
        r.value("peak", q.peak);
    }
    Ok(r.into_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(linear_range(1.0, 3.0, 3), vec![1.0, 2.0, 3.0]);
        assert_eq!(linear_range(5.0, 9.0, 1), vec![5.0]);
        let l = log_range(10.0, 1000.0, 3);
        assert!((l[1] - 100.0).abs() < 1e-9 && (l[2] - 1000.0).abs() < 1e-9);
        assert!(checked_range("x", 1.0, 2.0, 0).is_err());
        assert!(checked_range("x", 2.0, 1.0, 5).is_err());
        assert!(checked_range("x", 2.0, 1.0, 1).is_ok());
    }
}
