use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Point3;

/// Fourier feature map `v -> (sin(π c^l v_i), cos(π c^l v_i))` for
/// `l = 0..levels`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PeConfig {
    pub base_freq: f64,
    pub levels: usize,
}

impl Default for PeConfig {
    fn default() -> Self {
        PeConfig {
            base_freq: 1.35,
            levels: 40,
        }
    }
}

impl PeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.base_freq > 1.0 && self.base_freq.is_finite()) {
            return Err(Error::InvalidConfig(format!("base_freq must exceed 1, got {}", self.base_freq)));
        }
        if self.levels == 0 {
            return Err(Error::InvalidConfig("levels must be positive".into()));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        6 * self.levels
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.levels).map(|l| self.base_freq.powi(l as i32)).collect()
    }

    /// Layout: all sines then all cosines, each block ordered by level and
    /// then by axis (`x, y, z`).
    pub fn encode_into(&self, v: Point3, out: &mut [f64]) {
        let half = 3 * self.levels;
        debug_assert_eq!(out.len(), 2 * half);
        for (l, f) in self.frequencies().into_iter().enumerate() {
            for (i, &x) in v.iter().enumerate() {
                let (s, c) = (std::f64::consts::PI * f * x).sin_cos();
                out[3 * l + i] = s;
                out[half + 3 * l + i] = c;
            }
        }
    }

    pub fn encode(&self, v: Point3) -> Vec<f64> {
        let mut out = vec![0.0; self.output_dim()];
        self.encode_into(v, &mut out);
        out
    }
}

pub fn positional_encoding(v_norm: Point3, cfg: &PeConfig) -> Vec<f64> {
    cfg.encode(v_norm)
}
