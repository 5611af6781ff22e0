//! Post-processing of measured (or synthesised) harvester data.
//!
//! Covers quality-factor extraction from a frequency sweep, splitting the
//! loaded Q into parasitic and electrical parts, locating the optimum load on
//! a resistance sweep, and comparing devices by power density normalised to
//! a common excitation acceleration.

use crate::error::{require_non_negative, require_positive, Error, Result};
use crate::model::{
    compose_q_factors, evaluate_response, Acceleration, CoilCircuit, DampingDecomposition, Excitation,
    GeneratorParams, QFactors,
};

/// Minimum number of points in a frequency sweep.
pub const MIN_SWEEP_POINTS: usize = 5;

/// What the response column of a sweep measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseQuantity {
    Volts,
    Meters,
}

/// Frequency response samples: `(frequency_hz, magnitude)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepCurve {
    points: Vec<(f64, f64)>,
    quantity: ResponseQuantity,
    excitation: Acceleration,
}

impl SweepCurve {
    pub fn new(points: Vec<(f64, f64)>, quantity: ResponseQuantity, excitation: Acceleration) -> Result<Self> {
        if points.len() < MIN_SWEEP_POINTS {
            return Err(Error::InvalidSweep(format!(
                "{} points, at least {MIN_SWEEP_POINTS} required",
                points.len()
            )));
        }
        if points.iter().any(|(f, y)| !f.is_finite() || !y.is_finite() || *y < 0.0) {
            return Err(Error::InvalidSweep("non-finite or negative sample".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidSweep("frequencies must be strictly increasing".into()));
        }
        Ok(Self {
            points,
            quantity,
            excitation,
        })
    }

    /// Parses a comma-separated table with a header row. `freq_hz` supplies
    /// the frequencies and `column` the magnitudes; a `_v` suffix on the
    /// column name marks volts, anything else meters.
    pub fn from_csv(text: &str, column: &str, excitation: Acceleration) -> Result<Self> {
        let table = parse_csv(text)?;
        let f = table.column("freq_hz")?;
        let y = table.column(column)?;
        let quantity = if column.ends_with("_v") {
            ResponseQuantity::Volts
        } else {
            ResponseQuantity::Meters
        };
        Self::new(f.into_iter().zip(y).collect(), quantity, excitation)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn quantity(&self) -> ResponseQuantity {
        self.quantity
    }

    pub fn excitation(&self) -> Acceleration {
        self.excitation
    }
}

/// One row of a load-resistance sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadPoint {
    pub r_load_ohm: f64,
    pub p_load_w: f64,
    pub p_total_w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadSweep {
    points: Vec<LoadPoint>,
}

impl LoadSweep {
    pub fn new(points: Vec<LoadPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidSweep("empty load sweep".into()));
        }
        for p in &points {
            if !(p.r_load_ohm > 0.0) || !p.r_load_ohm.is_finite() {
                return Err(Error::InvalidSweep(format!("load resistance {} must be > 0", p.r_load_ohm)));
            }
            if !(p.p_load_w >= 0.0 && p.p_load_w <= p.p_total_w && p.p_total_w.is_finite()) {
                return Err(Error::InvalidSweep(format!(
                    "at {} ohm: need 0 <= p_load ({}) <= p_total ({})",
                    p.r_load_ohm, p.p_load_w, p.p_total_w
                )));
            }
        }
        if points.windows(2).any(|w| !(w[1].r_load_ohm > w[0].r_load_ohm)) {
            return Err(Error::InvalidSweep("resistances must be strictly increasing".into()));
        }
        Ok(Self { points })
    }

    /// Parses a table with `r_load_ohm`, `p_load_w` and `p_total_w` columns.
    pub fn from_csv(text: &str) -> Result<Self> {
        let table = parse_csv(text)?;
        let r = table.column("r_load_ohm")?;
        let pl = table.column("p_load_w")?;
        let pt = table.column("p_total_w")?;
        Self::new(
            r.into_iter()
                .zip(pl)
                .zip(pt)
                .map(|((r_load_ohm, p_load_w), p_total_w)| LoadPoint {
                    r_load_ohm,
                    p_load_w,
                    p_total_w,
                })
                .collect(),
        )
    }

    pub fn points(&self) -> &[LoadPoint] {
        &self.points
    }
}

struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvTable {
    fn column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self
            .header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::InvalidSweep(format!("missing column '{name}'")))?;
        Ok(self.rows.iter().map(|r| r[idx]).collect())
    }
}

fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InvalidSweep("missing header row".into()))?
        .split(',')
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::InvalidSweep(format!("data row {}: {e}", n + 1)))?;
        if row.len() != header.len() {
            return Err(Error::InvalidSweep(format!(
                "data row {} has {} fields, header has {}",
                n + 1,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

/// Device figures used for catalog comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceRecord {
    pub name: String,
    pub volume_mm3: f64,
    pub active_mass_kg: f64,
    pub resonant_frequency_hz: f64,
    pub measured_power_w: f64,
    pub measured_at_acceleration_m_s2: f64,
    pub flux_density_t: Option<f64>,
    pub r_coil_ohm: Option<f64>,
    pub notes: String,
}

impl DeviceRecord {
    pub fn validate(&self) -> Result<()> {
        require_positive("volume_mm3", self.volume_mm3)?;
        require_positive("active_mass_kg", self.active_mass_kg)?;
        require_positive("resonant_frequency_hz", self.resonant_frequency_hz)?;
        require_positive("measured_at_acceleration_m_s2", self.measured_at_acceleration_m_s2)?;
        require_non_negative("measured_power_w", self.measured_power_w)?;
        if let Some(b) = self.flux_density_t {
            require_non_negative("flux_density_t", b)?;
        }
        if let Some(r) = self.r_coil_ohm {
            require_non_negative("r_coil_ohm", r)?;
        }
        Ok(())
    }
}

/// Resonance estimate from a swept response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QEstimate {
    pub q: f64,
    pub f_res_hz: f64,
    pub peak: f64,
    pub f_lower_hz: f64,
    pub f_upper_hz: f64,
}

/// Vertex of the parabola through three points with arbitrary spacing.
/// Falls back to the middle point when the parabola does not open downward.
fn parabola_peak((x0, y0): (f64, f64), (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> (f64, f64) {
    let s01 = (y1 - y0) / (x1 - x0);
    let s12 = (y2 - y1) / (x2 - x1);
    let a = (s12 - s01) / (x2 - x0);
    if !(a < 0.0) {
        return (x1, y1);
    }
    // p(x) = y0 + s01 (x - x0) + a (x - x0)(x - x1)
    let xv = (0.5 * (x0 + x1) - s01 / (2.0 * a)).clamp(x0, x2);
    let yv = y0 + s01 * (xv - x0) + a * (xv - x0) * (xv - x1);
    (xv, yv)
}

/// Index range `[start, end]` of the widest run of samples equal to the
/// maximum (the earliest on ties).
fn widest_peak_run(y: &[f64]) -> (usize, usize) {
    let max = y.iter().copied().fold(f64::MIN, f64::max);
    let mut best = (0, 0);
    let mut best_len = 0;
    let mut i = 0;
    while i < y.len() {
        if y[i] == max {
            let start = i;
            while i + 1 < y.len() && y[i + 1] == max {
                i += 1;
            }
            if i - start + 1 > best_len {
                best_len = i - start + 1;
                best = (start, i);
            }
        }
        i += 1;
    }
    best
}

/// Half-power (-3 dB) bandwidth quality factor.
///
/// The resonance is the vertex of a parabola through the three samples around
/// the maximum; a flat-topped peak uses the midpoint of its widest plateau.
/// Each half-power crossing is linearly interpolated between the bracketing
/// samples, and `Q = f_res / (f_upper - f_lower)`.
pub fn extract_q_half_power(s: &SweepCurve) -> Result<QEstimate> {
    let pts = &s.points;
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let (start, end) = widest_peak_run(&y);
    let max = y[start];
    let n = y.len();
    if !(max > y[0] && max > y[n - 1]) {
        return Err(Error::InvalidSweep(
            "peak response must exceed both sweep endpoints".into(),
        ));
    }

    let (f_res, peak) = if start == end {
        parabola_peak(pts[start - 1], pts[start], pts[start + 1])
    } else {
        (0.5 * (pts[start].0 + pts[end].0), max)
    };
    let level = peak / std::f64::consts::SQRT_2;

    let crossing = |lo: usize, hi: usize| {
        let (f0, y0) = pts[lo];
        let (f1, y1) = pts[hi];
        f0 + (level - y0) * (f1 - f0) / (y1 - y0)
    };
    let f_lower = (0..start)
        .rev()
        .find(|&j| y[j] <= level)
        .map(|j| crossing(j, j + 1))
        .ok_or(Error::BandwidthNotBracketed { side: "lower" })?;
    let f_upper = (end + 1..n)
        .find(|&j| y[j] <= level)
        .map(|j| crossing(j - 1, j))
        .ok_or(Error::BandwidthNotBracketed { side: "upper" })?;

    Ok(QEstimate {
        q: f_res / (f_upper - f_lower),
        f_res_hz: f_res,
        peak,
        f_lower_hz: f_lower,
        f_upper_hz: f_upper,
    })
}

/// Splits a loaded Q into parasitic and electrical parts given the open-circuit Q.
pub fn decompose_damping(q_loaded: f64, q_open: f64) -> Result<DampingDecomposition> {
    require_positive("q_loaded", q_loaded)?;
    require_positive("q_open", q_open)?;
    if q_loaded >= q_open {
        return Err(Error::Inconsistent(format!(
            "loaded Q ({q_loaded}) must be below open-circuit Q ({q_open}); electrical damping cannot be zero or negative"
        )));
    }
    compose_q_factors(QFactors {
        q_total: Some(q_loaded),
        q_open_circuit: Some(q_open),
        q_electrical: None,
    })
}

/// Proof-mass amplitude at resonance, `z = Q Y`.
pub fn estimate_mass_displacement(q_loaded: f64, y_base_m: f64) -> Result<f64> {
    require_positive("q_loaded", q_loaded)?;
    require_non_negative("y_base_m", y_base_m)?;
    Ok(q_loaded * y_base_m)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoadOptimum {
    pub r_opt_ohm: f64,
    pub p_max_w: f64,
}

/// Load resistance that maximises delivered power.
///
/// The discrete maximum (lowest resistance on ties) is refined with a parabola
/// in `ln R` through it and its two neighbours.
pub fn find_optimal_load(ls: &LoadSweep) -> Result<LoadOptimum> {
    let pts = &ls.points;
    if pts.len() < 3 {
        return Err(Error::InvalidSweep(format!("{} load points, at least 3 required", pts.len())));
    }
    let mut best = 0;
    for (i, p) in pts.iter().enumerate() {
        if p.p_load_w > pts[best].p_load_w {
            best = i;
        }
    }
    if best == 0 || best == pts.len() - 1 {
        return Err(Error::OptimumNotBracketed {
            r_load_ohm: pts[best].r_load_ohm,
        });
    }
    let at = |i: usize| (pts[i].r_load_ohm.ln(), pts[i].p_load_w);
    let (x, p) = parabola_peak(at(best - 1), at(best), at(best + 1));
    Ok(LoadOptimum {
        r_opt_ohm: x.exp(),
        p_max_w: p,
    })
}

/// Closed-form load sweep of a generator at a fixed excitation.
pub fn model_load_sweep(g: &GeneratorParams, coil: &CoilCircuit, e: &Excitation, loads_ohm: &[f64]) -> Result<LoadSweep> {
    let points = loads_ohm
        .iter()
        .map(|&r| {
            let r_pt = evaluate_response(g, &coil.with_load(r)?, e)?;
            Ok(LoadPoint {
                r_load_ohm: r,
                p_load_w: r_pt.p_load_w,
                p_total_w: r_pt.p_total_electrical_w,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    LoadSweep::new(points)
}

/// Rescales a power measured at `a_measured` to `a_target`, `P (A_t / A_m)^2`.
pub fn normalize_power(p_w: f64, a_measured: f64, a_target: f64) -> Result<f64> {
    require_non_negative("p_w", p_w)?;
    require_positive("a_measured", a_measured)?;
    require_positive("a_target", a_target)?;
    let ratio = a_target / a_measured;
    Ok(p_w * ratio * ratio)
}

/// Acceleration-normalised power density in nW/mm^3.
pub fn power_density(d: &DeviceRecord, a_target: f64) -> Result<f64> {
    d.validate()?;
    let p = normalize_power(d.measured_power_w, d.measured_at_acceleration_m_s2, a_target)?;
    Ok(p * 1e9 / d.volume_mm3)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CatalogRow {
    pub name: String,
    pub measured_power_w: f64,
    pub measured_at_acceleration_m_s2: f64,
    pub normalized_power_w: f64,
    pub volume_mm3: f64,
    pub power_density_nw_per_mm3: f64,
}

/// Devices ranked by descending normalised power density, ties by name.
pub fn compare_catalog(records: &[DeviceRecord], a_target: f64) -> Result<Vec<CatalogRow>> {
    if records.is_empty() {
        return Err(Error::Inconsistent("empty device catalog".into()));
    }
    let mut rows = records
        .iter()
        .map(|d| {
            Ok(CatalogRow {
                name: d.name.clone(),
                measured_power_w: d.measured_power_w,
                measured_at_acceleration_m_s2: d.measured_at_acceleration_m_s2,
                normalized_power_w: normalize_power(d.measured_power_w, d.measured_at_acceleration_m_s2, a_target)?,
                volume_mm3: d.volume_mm3,
                power_density_nw_per_mm3: power_density(d, a_target)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| {
        b.power_density_nw_per_mm3
            .total_cmp(&a.power_density_nw_per_mm3)
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(rows)
}
