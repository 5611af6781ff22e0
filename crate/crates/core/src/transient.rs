//! Time-domain integration of the base-excited equation of motion.
//!
//! `m z'' + (c_p + c_e) z' + k z = -m y''` with `y = Y sin(w t)` is stepped
//! from rest with classical fixed-step RK4. The state is augmented with the
//! running input work and the two dissipated energies so the energy balance
//! is integrated to the same order as the motion itself.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{require_positive, Error, Result};
use crate::model::{em_damping_coefficient, CoilCircuit, Excitation, GeneratorParams};

/// Steps per period required at the fastest of the drive and natural frequencies.
pub const MIN_STEPS_PER_PERIOD: f64 = 50.0;
/// Maximum accepted relative energy-balance residual.
pub const ENERGY_BALANCE_LIMIT: f64 = 1e-3;
/// Maximum relative change between the last two detected peaks.
pub const SETTLE_DRIFT_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub dt_s: f64,
    pub duration_s: f64,
    /// Leading fraction of the run discarded before steady-state statistics.
    pub settle_fraction: f64,
    /// Keep every n-th step in the returned trace; `None` keeps no trace.
    pub trace_every: Option<usize>,
}

impl SimConfig {
    pub fn new(dt_s: f64, duration_s: f64) -> Result<Self> {
        let cfg = Self {
            dt_s,
            duration_s,
            settle_fraction: 0.8,
            trace_every: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// A configuration sized for a generator with total damping `zeta_total`
    /// driven at `omega`: `steps_per_period` steps per shortest period and a
    /// settle window long enough for the free transient to decay by `e^-15`.
    pub fn for_response(g: &GeneratorParams, zeta_total: f64, omega_rad_per_s: f64, steps_per_period: f64) -> Result<Self> {
        require_positive("zeta_total", zeta_total)?;
        require_positive("omega_rad_per_s", omega_rad_per_s)?;
        require_positive("steps_per_period", steps_per_period)?;
        let wn = g.natural_frequency();
        let fastest = omega_rad_per_s.max(wn);
        let slowest = omega_rad_per_s.min(wn);
        let dt = 2.0 * PI / fastest / steps_per_period;
        let settle = 15.0 / (zeta_total * wn);
        // At least 20 drive periods in the statistics window.
        let window = (settle / 4.0).max(20.0 * 2.0 * PI / slowest);
        Self::new(dt, settle + window).map(|c| Self {
            settle_fraction: settle / (settle + window),
            ..c
        })
    }

    pub fn with_trace(mut self, every: usize) -> Self {
        self.trace_every = Some(every.max(1));
        self
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("dt_s", self.dt_s)?;
        require_positive("duration_s", self.duration_s)?;
        if self.duration_s <= 10.0 * self.dt_s {
            return Err(Error::invalid("duration_s", self.duration_s, "must exceed 10 time steps"));
        }
        if !(0.0..1.0).contains(&self.settle_fraction) {
            return Err(Error::invalid("settle_fraction", self.settle_fraction, "must be in [0, 1)"));
        }
        Ok(())
    }
}

/// How the coil is terminated during a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElectricalMode {
    /// Coil drives `r_load_ohm`; electrical damping from the coil circuit.
    Loaded,
    /// No current flows: no electrical damping, EMF still reported.
    OpenCircuit,
}

/// Steady-state statistics from the post-settle window.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TraceSummary {
    /// Amplitude from peak detection with 3-point parabolic refinement.
    pub z_amp_m: f64,
    /// Amplitude of the least-squares fundamental at the drive frequency.
    pub z_fit_amp_m: f64,
    /// Phase lag of `z` behind the base motion, from the same fit.
    pub phase_rad: f64,
    pub v_rel_rms_m_per_s: f64,
    pub emf_rms_v: f64,
    pub p_load_avg_w: f64,
    pub p_parasitic_avg_w: f64,
    pub energy_balance_residual: f64,
}

/// Sampled time series; all vectors have equal length.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub t_s: Vec<f64>,
    pub z_m: Vec<f64>,
    pub zdot_m_s: Vec<f64>,
    pub emf_v: Vec<f64>,
    pub p_load_w: Vec<f64>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.t_s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t_s.is_empty()
    }

    fn push(&mut self, t: f64, z: f64, v: f64, emf: f64, p: f64) {
        self.t_s.push(t);
        self.z_m.push(z);
        self.zdot_m_s.push(v);
        self.emf_v.push(emf);
        self.p_load_w.push(p);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimOutput {
    pub summary: TraceSummary,
    pub trace: Option<Trace>,
    pub warnings: Vec<String>,
}

const STATE_LEN: usize = 5;
// z, z', input work, parasitic loss, electrical loss
type State = [f64; STATE_LEN];

fn rk4_step(f: impl Fn(f64, &State) -> State, t: f64, y: &State, h: f64) -> State {
    let add = |a: &State, k: &State, s: f64| -> State {
        let mut out = *a;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += s * ki;
        }
        out
    };
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &add(y, &k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, &add(y, &k2, 0.5 * h));
    let k4 = f(t + h, &add(y, &k3, h));
    let mut out = *y;
    for i in 0..STATE_LEN {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Vertex of the parabola through three equally spaced samples.
fn parabolic_vertex(y0: f64, y1: f64, y2: f64) -> f64 {
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature == 0.0 {
        return y1;
    }
    let offset = 0.5 * (y0 - y2) / curvature;
    y1 - 0.25 * (y0 - y2) * offset
}

fn refined_maxima(samples: &[f64]) -> Vec<f64> {
    samples
        .windows(3)
        .filter(|w| w[0] < w[1] && w[1] >= w[2])
        .map(|w| parabolic_vertex(w[0], w[1], w[2]))
        .collect()
}

/// Least-squares fit of `a sin(wt) + b cos(wt) + d`; returns `(a, b)`.
fn fit_fundamental(t: &[f64], z: &[f64], omega: f64) -> (f64, f64) {
    let mut ata = [[0.0; 3]; 3];
    let mut atz = [0.0; 3];
    for (&ti, &zi) in t.iter().zip(z) {
        let row = [(omega * ti).sin(), (omega * ti).cos(), 1.0];
        for r in 0..3 {
            atz[r] += row[r] * zi;
            for c in 0..3 {
                ata[r][c] += row[r] * row[c];
            }
        }
    }
    let sol = solve3(ata, atz);
    (sol[0], sol[1])
}

// Gaussian elimination with partial pivoting on a 3x3 system.
fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        b.swap(col, pivot);
        if a[col][col] == 0.0 {
            continue;
        }
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let mut s = b[row];
        for k in row + 1..3 {
            s -= a[row][k] * x[k];
        }
        x[row] = if a[row][row] == 0.0 { 0.0 } else { s / a[row][row] };
    }
    x
}

/// Simulates the loaded generator.
pub fn simulate(g: &GeneratorParams, c: &CoilCircuit, e: &Excitation, cfg: &SimConfig) -> Result<SimOutput> {
    simulate_with_mode(g, c, e, cfg, ElectricalMode::Loaded)
}

pub fn simulate_with_mode(
    g: &GeneratorParams,
    c: &CoilCircuit,
    e: &Excitation,
    cfg: &SimConfig,
    mode: ElectricalMode,
) -> Result<SimOutput> {
    cfg.validate()?;
    c.validate()?;
    let m = g.mass_kg();
    let k = g.stiffness_n_per_m();
    let wn = g.natural_frequency();
    let w = e.omega_rad_per_s();
    let y_amp = e.amplitude_m();

    let fastest_period = 2.0 * PI / w.max(wn);
    if cfg.dt_s > fastest_period / MIN_STEPS_PER_PERIOD {
        return Err(Error::invalid(
            "dt_s",
            cfg.dt_s,
            "fewer than 50 steps per drive or natural period",
        ));
    }

    let c_p = g.parasitic_damping_coefficient();
    let c_e = match mode {
        ElectricalMode::Loaded => em_damping_coefficient(c, w)?,
        ElectricalMode::OpenCircuit => 0.0,
    };
    let zeta_t = (c_p + c_e) / (2.0 * m * wn);
    if !(zeta_t > 0.0 && zeta_t < 1.0) {
        return Err(Error::invalid("zeta_total", zeta_t, "must be in (0, 1)"));
    }

    let mut warnings = Vec::new();
    let q_t = 0.5 / zeta_t;
    if q_t > 200.0 && cfg.duration_s < 10.0 * 2.0 * q_t / wn {
        warnings.push(format!(
            "Q = {q_t:.1}: duration {:.4e} s is below 10 * 2Q/w_n = {:.4e} s",
            cfg.duration_s,
            20.0 * q_t / wn
        ));
    }

    let coupling = c.coupling();
    let load_gain = match mode {
        ElectricalMode::Loaded => c.r_load_ohm / (c.r_load_ohm + c.r_coil_ohm).powi(2),
        ElectricalMode::OpenCircuit => 0.0,
    };

    let rhs = |t: f64, s: &State| -> State {
        let base_accel = -w * w * y_amp * (w * t).sin();
        let v = s[1];
        let accel = (-(c_p + c_e) * v - k * s[0]) / m - base_accel;
        [v, accel, -m * base_accel * v, c_p * v * v, c_e * v * v]
    };

    let steps = (cfg.duration_s / cfg.dt_s).round() as usize;
    let settle_step = (cfg.settle_fraction * steps as f64).floor() as usize;
    let window_len = steps + 1 - settle_step;
    let mut win_t = Vec::with_capacity(window_len);
    let mut win_z = Vec::with_capacity(window_len);
    let mut win_v = Vec::with_capacity(window_len);
    let mut trace = cfg.trace_every.map(|_| Trace::default());

    let mut state: State = [0.0; STATE_LEN];
    for i in 0..=steps {
        let t = i as f64 * cfg.dt_s;
        if i >= settle_step {
            win_t.push(t);
            win_z.push(state[0]);
            win_v.push(state[1]);
        }
        if let (Some(tr), Some(every)) = (trace.as_mut(), cfg.trace_every) {
            if i % every == 0 {
                let emf = coupling * state[1];
                tr.push(t, state[0], state[1], emf, emf * emf * load_gain);
            }
        }
        if i < steps {
            state = rk4_step(rhs, t, &state, cfg.dt_s);
        }
    }

    let [z_end, v_end, work_in, loss_p, loss_e] = state;
    let stored = 0.5 * m * v_end * v_end + 0.5 * k * z_end * z_end;
    let scale = work_in.abs().max(loss_p + loss_e + stored);
    let residual = if scale > 0.0 {
        (work_in - loss_p - loss_e - stored).abs() / scale
    } else {
        0.0
    };
    if residual >= ENERGY_BALANCE_LIMIT {
        return Err(Error::EnergyBalance { residual });
    }

    if y_amp == 0.0 {
        return Ok(SimOutput {
            summary: TraceSummary::default(),
            trace,
            warnings,
        });
    }

    let maxima = refined_maxima(&win_z);
    let neg: Vec<f64> = win_z.iter().map(|z| -z).collect();
    let minima = refined_maxima(&neg);
    if maxima.len() < 2 || minima.is_empty() {
        return Err(Error::NotSettled { drift_percent: 100.0 });
    }
    let last = maxima[maxima.len() - 1];
    let prev = maxima[maxima.len() - 2];
    let drift = (last - prev).abs() / last.abs().max(prev.abs());
    if !(drift <= SETTLE_DRIFT_LIMIT) {
        return Err(Error::NotSettled {
            drift_percent: 100.0 * drift,
        });
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let z_amp = 0.5 * (mean(&maxima) + mean(&minima));

    let (a, b) = fit_fundamental(&win_t, &win_z, w);
    let mut phase = (-b).atan2(a);
    if phase < -0.5 * PI {
        phase += 2.0 * PI;
    }
    let phase = phase.clamp(0.0, PI);

    let mean_sq_v = stats_window_mean_sq(&win_t, &win_v, w);
    let v_rms = mean_sq_v.sqrt();
    let emf_rms = coupling * v_rms;
    Ok(SimOutput {
        summary: TraceSummary {
            z_amp_m: z_amp,
            z_fit_amp_m: a.hypot(b),
            phase_rad: phase,
            v_rel_rms_m_per_s: v_rms,
            emf_rms_v: emf_rms,
            p_load_avg_w: emf_rms * emf_rms * load_gain,
            p_parasitic_avg_w: c_p * mean_sq_v,
            energy_balance_residual: residual,
        },
        trace,
        warnings,
    })
}

/// Mean of `x^2` over the largest whole number of drive periods that ends at
/// the last sample, by the trapezoid rule.
fn stats_window_mean_sq(t: &[f64], x: &[f64], omega: f64) -> f64 {
    let period = 2.0 * PI / omega;
    let t_end = t[t.len() - 1];
    let periods = ((t_end - t[0]) / period).floor();
    let start = if periods >= 1.0 {
        let t_start = t_end - periods * period;
        t.partition_point(|&ti| ti < t_start)
    } else {
        0
    };
    let (t, x) = (&t[start..], &x[start..]);
    if t.len() < 2 {
        return x.first().map_or(0.0, |v| v * v);
    }
    let integral: f64 = t
        .windows(2)
        .zip(x.windows(2))
        .map(|(tw, xw)| 0.5 * (tw[1] - tw[0]) * (xw[0] * xw[0] + xw[1] * xw[1]))
        .sum();
    integral / (t[t.len() - 1] - t[0])
}

/// What is held fixed while the drive frequency changes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SweepDrive {
    /// Constant peak base displacement, m.
    Amplitude(f64),
    /// Constant peak base acceleration, m/s^2 (shaker-style sweep).
    Acceleration(f64),
}

impl SweepDrive {
    pub fn excitation(&self, omega_rad_per_s: f64) -> Result<Excitation> {
        match *self {
            SweepDrive::Amplitude(y) => Excitation::new(y, omega_rad_per_s),
            SweepDrive::Acceleration(a) => {
                require_positive("omega_rad_per_s", omega_rad_per_s)?;
                Excitation::new(a / (omega_rad_per_s * omega_rad_per_s), omega_rad_per_s)
            }
        }
    }
}

/// Runs one simulation per drive frequency, in parallel, returning results
/// in input order.
pub fn frequency_sweep_sim(
    g: &GeneratorParams,
    c: &CoilCircuit,
    drive: SweepDrive,
    omegas: &[f64],
    cfg: &SimConfig,
    mode: ElectricalMode,
) -> Result<Vec<(f64, SimOutput)>> {
    if omegas.is_empty() {
        return Err(Error::InvalidSweep("no frequencies".into()));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidSweep("frequencies must be strictly increasing".into()));
    }
    let runs: Vec<Result<(f64, SimOutput)>> = omegas
        .par_iter()
        .map(|&omega| {
            let run = drive
                .excitation(omega)
                .and_then(|e| simulate_with_mode(g, c, &e, cfg, mode));
            run.map(|out| (omega, out)).map_err(|err| Error::SweepPoint {
                omega_rad_per_s: omega,
                source: Box::new(err),
            })
        })
        .collect();
    // First failure in frequency order, independent of scheduling.
    runs.into_iter().collect()
}
