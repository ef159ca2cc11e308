//! Model checkpoint file.
//!
//! ```text
//! ris-inr-model v1
//! begin config
//! <ModelHeader as TOML>
//! end config
//! params <count>
//! <one value per line: for each layer, weights (fan_in x fan_out, row-major) then bias>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{InrModel, LabelMode, Mlp, MlpConfig, PeConfig};
use crate::error::{Error, Result};

pub const FORMAT_TAG: &str = "ris-inr-model v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelHeader {
    rows: usize,
    cols: usize,
    labels: LabelMode,
    mlp: MlpConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pe: Option<PeConfig>,
}

impl InrModel {
    pub fn to_text(&self) -> String {
        let header = ModelHeader {
            rows: self.rows,
            cols: self.cols,
            labels: self.labels,
            mlp: self.net.config().clone(),
            pe: self.pe,
        };
        let params = self.net.flat_params();
        let mut out = format!("{FORMAT_TAG}\nbegin config\n");
        out.push_str(&toml::to_string(&header).expect("header serializes"));
        out.push_str("end config\n");
        writeln!(out, "params {}", params.len()).unwrap();
        for p in params {
            writeln!(out, "{p:?}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let err = |line: usize, message: String| Error::Parse { line, message };
        let tag = lines.next().map(|(_, l)| l.trim()).unwrap_or_default();
        if tag != FORMAT_TAG {
            return Err(Error::VersionMismatch {
                expected: FORMAT_TAG.into(),
                found: tag.into(),
            });
        }
        if !matches!(lines.next(), Some((_, "begin config"))) {
            return Err(err(2, "expected `begin config`".into()));
        }
        let mut header_text = String::new();
        let mut closed = false;
        let mut line_no = 2;
        for (n, line) in lines.by_ref() {
            line_no = n;
            if line == "end config" {
                closed = true;
                break;
            }
            header_text.push_str(line);
            header_text.push('\n');
        }
        if !closed {
            return Err(err(line_no, "unterminated config header".into()));
        }
        let header: ModelHeader = toml::from_str(&header_text).map_err(|e| err(3, format!("config: {}", e.message())))?;
        let (n, count_line) = lines.next().ok_or_else(|| err(line_no + 1, "missing parameter count".into()))?;
        let count: usize = count_line
            .strip_prefix("params ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| err(n, "expected `params <count>`".into()))?;
        let mut flat = Vec::with_capacity(count);
        let mut last = n;
        for k in 0..count {
            let (n, line) = lines
                .next()
                .ok_or_else(|| err(last + 1, format!("parameter {k}: missing (file truncated)")))?;
            last = n;
            flat.push(
                line.trim()
                    .parse::<f64>()
                    .map_err(|_| err(n, format!("parameter {k}: bad number {line:?}")))?,
            );
        }
        let net = Mlp::from_flat(header.mlp, &flat)?;
        InrModel::new(header.rows, header.cols, header.labels, header.pe, net)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}
