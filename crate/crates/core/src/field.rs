//! Narrowband double-path channel through a planar RIS.
//!
//! Each element contributes `a / (d1 * d2) * exp(-i 2π (d1 + d2) / λ)` where
//! `d1` is the transmitter-to-element distance and `d2` the element-to-receiver
//! distance. There is no direct path and no element pattern.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::codebook::Codebook;
use crate::error::{Error, Result};

pub type Point3 = [f64; 3];

pub(crate) fn sub(a: Point3, b: Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot(a: Point3, b: Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: Point3) -> f64 {
    dot(a, a).sqrt()
}

fn cross(a: Point3, b: Point3) -> Point3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

/// Raw scenario parameters as they appear in config files. SI units,
/// right-handed coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeometryConfig {
    pub tx_position: Point3,
    pub ris_center: Point3,
    /// Direction in which the row index grows.
    pub row_axis: Point3,
    /// Direction in which the column index grows.
    pub col_axis: Point3,
    pub rows: usize,
    pub cols: usize,
    pub element_spacing: f64,
    pub wavelength: f64,
    pub amplitude_scale: f64,
    pub min_distance: f64,
}

impl Default for GeometryConfig {
    /// A 10x10 half-wavelength panel at 3.5 GHz mounted on the `y = 0` wall,
    /// with the source off to one side in front of the wall.
    fn default() -> Self {
        let wavelength = 0.0857;
        GeometryConfig {
            tx_position: [-3.0, 4.0, 1.5],
            ris_center: [0.0, 0.0, 1.5],
            row_axis: [0.0, 0.0, -1.0],
            col_axis: [1.0, 0.0, 0.0],
            rows: 10,
            cols: 10,
            element_spacing: wavelength / 2.0,
            wavelength,
            amplitude_scale: 1.0,
            min_distance: 1e-6,
        }
    }
}

/// A validated scenario. Element positions and transmitter-side distances are
/// cached at construction.
#[derive(Clone, Debug)]
pub struct ScenarioGeometry {
    config: GeometryConfig,
    elements: Vec<Point3>,
    tx_distances: Vec<f64>,
}

impl PartialEq for ScenarioGeometry {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
    }
}

const AXIS_TOLERANCE: f64 = 1e-9;

impl ScenarioGeometry {
    pub fn new(config: GeometryConfig) -> Result<Self> {
        let bad = |msg: String| Err(Error::InvalidGeometry(msg));
        if config.rows == 0 || config.cols == 0 {
            return bad(format!("panel must be at least 1x1, got {}x{}", config.rows, config.cols));
        }
        if !(config.element_spacing > 0.0 && config.element_spacing.is_finite()) {
            return bad(format!("element_spacing must be positive, got {}", config.element_spacing));
        }
        if !(config.wavelength > 0.0 && config.wavelength.is_finite()) {
            return bad(format!("wavelength must be positive, got {}", config.wavelength));
        }
        if !(config.amplitude_scale > 0.0 && config.amplitude_scale.is_finite()) {
            return bad(format!("amplitude_scale must be positive, got {}", config.amplitude_scale));
        }
        if !(config.min_distance > 0.0) {
            return bad(format!("min_distance must be positive, got {}", config.min_distance));
        }
        let points = [config.tx_position, config.ris_center, config.row_axis, config.col_axis];
        if points.iter().flatten().any(|c| !c.is_finite()) {
            return bad("non-finite coordinate".into());
        }
        for (name, axis) in [("row_axis", config.row_axis), ("col_axis", config.col_axis)] {
            if (norm(axis) - 1.0).abs() > AXIS_TOLERANCE {
                return bad(format!("{name} must be unit length, has norm {}", norm(axis)));
            }
        }
        if dot(config.row_axis, config.col_axis).abs() > AXIS_TOLERANCE {
            return bad("row_axis and col_axis must be orthogonal".into());
        }
        let normal = cross(config.row_axis, config.col_axis);
        if dot(normal, sub(config.tx_position, config.ris_center)).abs() < config.min_distance {
            return Err(Error::DegenerateGeometry(
                "transmitter lies in the panel plane".into(),
            ));
        }

        let elements = element_positions(&config);
        let tx_distances = elements
            .iter()
            .map(|&p| norm(sub(config.tx_position, p)))
            .collect();
        Ok(ScenarioGeometry {
            config,
            elements,
            tx_distances,
        })
    }

    pub fn config(&self) -> &GeometryConfig {
        &self.config
    }

    pub fn rows(&self) -> usize {
        self.config.rows
    }

    pub fn cols(&self) -> usize {
        self.config.cols
    }

    /// Row-major element centers.
    pub fn element_positions(&self) -> &[Point3] {
        &self.elements
    }

    /// Signed distance of `v` from the panel plane along `row_axis x col_axis`.
    pub fn plane_offset(&self, v: Point3) -> f64 {
        let normal = cross(self.config.row_axis, self.config.col_axis);
        dot(normal, sub(v, self.config.ris_center))
    }

    pub fn channel_gains(&self, v: Point3) -> Result<GainMatrix> {
        let c = &self.config;
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateGeometry(format!("non-finite receiver {v:?}")));
        }
        if self.plane_offset(v).abs() < c.min_distance {
            return Err(Error::DegenerateGeometry(format!(
                "receiver {v:?} lies in the panel plane"
            )));
        }
        let k = 2.0 * std::f64::consts::PI / c.wavelength;
        let mut entries = Vec::with_capacity(self.elements.len());
        for (&p, &d1) in self.elements.iter().zip(&self.tx_distances) {
            let d2 = norm(sub(v, p));
            if d1 < c.min_distance || d2 < c.min_distance {
                return Err(Error::DegenerateGeometry(format!(
                    "distance {} below minimum {}",
                    d1.min(d2),
                    c.min_distance
                )));
            }
            entries.push(Complex64::from_polar(c.amplitude_scale / (d1 * d2), -k * (d1 + d2)));
        }
        Ok(GainMatrix {
            rows: c.rows,
            cols: c.cols,
            entries,
        })
    }

    pub fn received_power(&self, v: Point3, cb: &Codebook) -> Result<Power> {
        self.channel_gains(v)?.power(cb)
    }
}

/// Element (m, n) at `center + (m - (M+1)/2) s row_axis + (n - (N+1)/2) s col_axis`,
/// 1-indexed, returned in row-major order.
pub fn element_positions(config: &GeometryConfig) -> Vec<Point3> {
    let (m_off, n_off) = ((config.rows as f64 - 1.0) / 2.0, (config.cols as f64 - 1.0) / 2.0);
    let s = config.element_spacing;
    let mut out = Vec::with_capacity(config.rows * config.cols);
    for m in 0..config.rows {
        for n in 0..config.cols {
            let (a, b) = ((m as f64 - m_off) * s, (n as f64 - n_off) * s);
            out.push(std::array::from_fn(|i| {
                config.ris_center[i] + a * config.row_axis[i] + b * config.col_axis[i]
            }));
        }
    }
    out
}

/// Per-element complex field contribution for one receiver position, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct GainMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl GainMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.cols + col]
    }

    /// `(Σ |h_mn|)²`, the power reached if every term were phase aligned.
    pub fn coherent_bound(&self) -> f64 {
        let s: f64 = self.entries.iter().map(|h| h.norm()).sum();
        s * s
    }

    pub fn field(&self, cb: &Codebook) -> Result<Complex64> {
        if cb.rows() != self.rows || cb.cols() != self.cols {
            return Err(Error::DimensionMismatch {
                context: "codebook vs panel elements",
                expected: self.entries.len(),
                actual: cb.rows() * cb.cols(),
            });
        }
        Ok(self.field_of(cb.entries()))
    }

    pub(crate) fn field_of(&self, signs: &[i8]) -> Complex64 {
        self.entries
            .iter()
            .zip(signs)
            .fold(Complex64::new(0.0, 0.0), |acc, (h, &s)| {
                if s > 0 {
                    acc + h
                } else {
                    acc - h
                }
            })
    }

    pub(crate) fn linear_power_of(&self, signs: &[i8]) -> f64 {
        self.field_of(signs).norm_sqr()
    }

    pub fn power(&self, cb: &Codebook) -> Result<Power> {
        Ok(Power::from_linear(self.field(cb)?.norm_sqr()))
    }
}

/// Received power, linear (`|E|²`) and in dBm.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Power {
    pub linear: f64,
    pub dbm: f64,
}

impl Power {
    pub fn from_linear(linear: f64) -> Self {
        Power {
            linear,
            dbm: to_dbm(linear),
        }
    }
}

pub fn to_dbm(linear: f64) -> f64 {
    10.0 * linear.log10()
}
