//! Grid-sampled `(coordinate, label)` datasets and their text file format.
//!
//! File layout (version `ris-dataset v1`):
//!
//! ```text
//! ris-dataset v1
//! begin meta
//! <DatasetMeta as TOML>
//! end meta
//! samples <K>
//! <x> <y> <z> <label bits> <power dBm>     (K lines)
//! ```
//!
//! Floats are written in shortest round-trip form, so loading a saved file
//! reproduces it exactly. Normalized coordinates are not stored; they are
//! recomputed from the grid box.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::codebook::{label_len, parse_bits, EncodedLabel};
use crate::exec::Execution;
use crate::error::{Error, Result};
use crate::field::{GeometryConfig, Point3, ScenarioGeometry};
use crate::oracle::greedy_traversal;

pub const FORMAT_TAG: &str = "ris-dataset v1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub box_min: Point3,
    pub box_max: Point3,
    pub counts: [usize; 3],
}

impl Default for GridSpec {
    /// A 2.5 m x 1.5 m x 2 m room region in front of the default panel,
    /// sampled 20 x 15 x 15.
    fn default() -> Self {
        GridSpec {
            box_min: [0.25, 2.0, 0.0],
            box_max: [2.75, 3.5, 2.0],
            counts: [20, 15, 15],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        for i in 0..3 {
            if !(self.box_max[i] > self.box_min[i]) {
                return Err(Error::InvalidConfig(format!("grid box_max must exceed box_min on axis {i}")));
            }
            if self.counts[i] == 0 {
                return Err(Error::InvalidConfig(format!("grid count on axis {i} must be positive")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Maps a point of the box onto `[-1, 1]^3`.
    pub fn normalize(&self, v: Point3) -> Point3 {
        std::array::from_fn(|i| 2.0 * (v[i] - self.box_min[i]) / (self.box_max[i] - self.box_min[i]) - 1.0)
    }

    pub fn denormalize(&self, u: Point3) -> Point3 {
        std::array::from_fn(|i| self.box_min[i] + (u[i] + 1.0) / 2.0 * (self.box_max[i] - self.box_min[i]))
    }

    fn axis_value(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi, n) = (self.box_min[axis], self.box_max[axis], self.counts[axis]);
        if n == 1 {
            return 0.5 * (lo + hi);
        }
        let t = i as f64 / (n - 1) as f64;
        lo * (1.0 - t) + hi * t
    }

    /// Lattice points including both box faces, `x` varying fastest.
    pub fn points(&self) -> Vec<Point3> {
        let [nx, ny, nz] = self.counts;
        let mut out = Vec::with_capacity(self.len());
        for iz in 0..nz {
            for iy in 0..ny {
                for ix in 0..nx {
                    out.push([self.axis_value(0, ix), self.axis_value(1, iy), self.axis_value(2, iz)]);
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitFractions {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            train: 0.7,
            val: 0.15,
            test: 0.15,
        }
    }
}

impl SplitFractions {
    pub fn validate(&self) -> Result<()> {
        let f = [self.train, self.val, self.test];
        if f.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidConfig("split fractions must lie in [0, 1]".into()));
        }
        if (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("split fractions must sum to 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetMeta {
    pub seed: u64,
    pub geometry: GeometryConfig,
    pub grid: GridSpec,
    pub split: SplitFractions,
}

impl DatasetMeta {
    pub fn validate(&self) -> Result<ScenarioGeometry> {
        self.grid.validate()?;
        self.split.validate()?;
        ScenarioGeometry::new(self.geometry.clone())
    }

    pub fn label_len(&self) -> usize {
        label_len(self.geometry.rows, self.geometry.cols)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub coord_raw: Point3,
    pub coord_norm: Point3,
    pub label: EncodedLabel,
    pub power_dbm: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub samples: Vec<Sample>,
}

/// Labels every grid point with the greedy traversal.
pub fn generate(meta: &DatasetMeta, exec: Execution) -> Result<Dataset> {
    let geom = meta.validate()?;
    let points = meta.grid.points();
    let samples = exec.try_map(points.len(), |index| {
        let v = points[index];
        let at = |e: Error| Error::AtPoint {
            index,
            source: Box::new(e),
        };
        let r = greedy_traversal(&geom, v).map_err(at)?;
        Ok::<_, Error>(Sample {
            coord_raw: v,
            coord_norm: meta.grid.normalize(v),
            label: r.codebook.encode().map_err(at)?,
            power_dbm: r.power.dbm,
        })
    })?;
    Ok(Dataset {
        meta: meta.clone(),
        samples,
    })
}

/// Index partition of a dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Splits {
    pub train: Vec<Sample>,
    pub val: Vec<Sample>,
    pub test: Vec<Sample>,
}

/// Seeded shuffle then partition; train and val sizes are rounded, test
/// takes the remainder.
pub fn split_indices(n: usize, fractions: &SplitFractions, seed: u64) -> Result<SplitIndices> {
    fractions.validate()?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = ((n as f64 * fractions.train).round() as usize).min(n);
    let n_val = ((n as f64 * fractions.val).round() as usize).min(n - n_train);
    let n_test = n - n_train - n_val;
    for (name, frac, count) in [
        ("train", fractions.train, n_train),
        ("val", fractions.val, n_val),
        ("test", fractions.test, n_test),
    ] {
        if frac > 0.0 && count == 0 {
            return Err(Error::EmptyPartition(name));
        }
    }
    let test = order.split_off(n_train + n_val);
    let val = order.split_off(n_train);
    Ok(SplitIndices {
        train: order,
        val,
        test,
    })
}

pub fn split(dataset: &Dataset) -> Result<Splits> {
    let idx = split_indices(dataset.samples.len(), &dataset.meta.split, dataset.meta.seed)?;
    let pick = |ix: &[usize]| ix.iter().map(|&i| dataset.samples[i].clone()).collect();
    Ok(Splits {
        train: pick(&idx.train),
        val: pick(&idx.val),
        test: pick(&idx.test),
    })
}

impl Dataset {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(FORMAT_TAG);
        out.push('\n');
        out.push_str("begin meta\n");
        out.push_str(&toml::to_string(&self.meta).expect("meta serializes"));
        out.push_str("end meta\n");
        writeln!(out, "samples {}", self.samples.len()).unwrap();
        for s in &self.samples {
            let [x, y, z] = s.coord_raw;
            writeln!(out, "{x:?} {y:?} {z:?} {} {:?}", s.label, s.power_dbm).unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let parse_err = |line: usize, message: String| Error::Parse { line, message };

        let (_, tag) = lines.next().ok_or_else(|| parse_err(1, "empty file".into()))?;
        if tag.trim() != FORMAT_TAG {
            return Err(Error::VersionMismatch {
                expected: FORMAT_TAG.into(),
                found: tag.trim().into(),
            });
        }
        match lines.next() {
            Some((_, "begin meta")) => {}
            Some((n, _)) => return Err(parse_err(n, "expected `begin meta`".into())),
            None => return Err(parse_err(2, "missing meta header".into())),
        }
        let mut meta_text = String::new();
        let mut meta_start = 3;
        let mut closed = false;
        for (n, line) in lines.by_ref() {
            if line == "end meta" {
                closed = true;
                break;
            }
            if meta_text.is_empty() {
                meta_start = n;
            }
            meta_text.push_str(line);
            meta_text.push('\n');
        }
        if !closed {
            return Err(parse_err(meta_start, "unterminated meta header".into()));
        }
        let meta: DatasetMeta =
            toml::from_str(&meta_text).map_err(|e| parse_err(meta_start, format!("meta: {}", e.message())))?;
        meta.validate()?;

        let (n, count_line) = lines.next().ok_or_else(|| parse_err(0, "missing sample count".into()))?;
        let count: usize = count_line
            .strip_prefix("samples ")
            .and_then(|c| c.trim().parse().ok())
            .ok_or_else(|| parse_err(n, "expected `samples <count>`".into()))?;

        let (rows, cols) = (meta.geometry.rows, meta.geometry.cols);
        let mut samples = Vec::with_capacity(count);
        let mut last_line = n;
        for record in 0..count {
            let (n, line) = lines
                .next()
                .ok_or_else(|| parse_err(last_line + 1, format!("record {record}: missing (file truncated)")))?;
            last_line = n;
            let rec_err = |m: String| parse_err(n, format!("record {record}: {m}"));
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 5 {
                return Err(rec_err(format!("expected 5 fields, found {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| rec_err(format!("bad number {s:?}")));
            let coord_raw = [num(fields[0])?, num(fields[1])?, num(fields[2])?];
            let bits = parse_bits(fields[3]).map_err(|e| rec_err(e.to_string()))?;
            let label = EncodedLabel::new(rows, cols, bits).map_err(|e| rec_err(e.to_string()))?;
            samples.push(Sample {
                coord_raw,
                coord_norm: meta.grid.normalize(coord_raw),
                label,
                power_dbm: num(fields[4])?,
            });
        }
        if let Some((n, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(parse_err(n, format!("unexpected trailing content {line:?}")));
        }
        Ok(Dataset { meta, samples })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::exhaustive_rank1;

    fn unit_grid(counts: [usize; 3]) -> GridSpec {
        GridSpec {
            box_min: [0.0; 3],
            box_max: [1.0; 3],
            counts,
        }
    }

    fn small_meta(rows: usize, cols: usize, counts: [usize; 3]) -> DatasetMeta {
        DatasetMeta {
            seed: 3,
            geometry: GeometryConfig {
                rows,
                cols,
                ..GeometryConfig::default()
            },
            grid: GridSpec {
                counts,
                ..GridSpec::default()
            },
            split: SplitFractions::default(),
        }
    }

    #[test]
    fn grid_endpoints_and_collapsed_axes() {
        assert_eq!(unit_grid([2, 1, 1]).points(), vec![[0.0, 0.5, 0.5], [1.0, 0.5, 0.5]]);
        let g = GridSpec {
            box_max: [2.0, 1.0, 1.0],
            ..unit_grid([3, 1, 1])
        };
        let xs: Vec<f64> = g.points().iter().map(|p| p[0]).collect();
        assert_eq!(xs, vec![0.0, 1.0, 2.0]);
        assert_eq!(GridSpec::default().points().len(), 4500);
    }

    #[test]
    fn x_varies_fastest() {
        let p = unit_grid([2, 2, 2]).points();
        assert_eq!(p[1], [1.0, 0.0, 0.0]);
        assert_eq!(p[2], [0.0, 1.0, 0.0]);
        assert_eq!(p[4], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn normalization_round_trips() {
        let g = GridSpec::default();
        assert_eq!(g.normalize(g.box_min), [-1.0; 3]);
        assert_eq!(g.normalize(g.box_max), [1.0; 3]);
        for p in g.points().iter().step_by(37) {
            let back = g.denormalize(g.normalize(*p));
            for i in 0..3 {
                assert!((back[i] - p[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_bad_grid_and_fractions() {
        assert!(GridSpec {
            box_max: [0.0, 1.0, 1.0],
            ..unit_grid([1, 1, 1])
        }
        .validate()
        .is_err());
        assert!(unit_grid([0, 1, 1]).validate().is_err());
        let bad = SplitFractions {
            train: 0.5,
            val: 0.2,
            test: 0.2,
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn split_sizes() {
        let all = SplitFractions {
            train: 1.0,
            val: 0.0,
            test: 0.0,
        };
        let s = split_indices(10, &all, 1).unwrap();
        assert_eq!((s.train.len(), s.val.len(), s.test.len()), (10, 0, 0));

        let f = SplitFractions {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        };
        let a = split_indices(100, &f, 7).unwrap();
        assert_eq!((a.train.len(), a.val.len(), a.test.len()), (80, 10, 10));
        assert_eq!(a, split_indices(100, &f, 7).unwrap());
        assert_ne!(a, split_indices(100, &f, 8).unwrap());
        let mut everything: Vec<usize> = a.train.iter().chain(&a.val).chain(&a.test).copied().collect();
        everything.sort();
        assert_eq!(everything, (0..100).collect::<Vec<_>>());

        assert!(matches!(split_indices(3, &f, 7), Err(Error::EmptyPartition(_))));
    }

    #[test]
    fn single_point_dataset() {
        let meta = small_meta(3, 4, [1, 1, 1]);
        let d = generate(&meta, Execution::Sequential).unwrap();
        assert_eq!(d.samples.len(), 1);
        let geom = ScenarioGeometry::new(meta.geometry.clone()).unwrap();
        let greedy = greedy_traversal(&geom, d.samples[0].coord_raw).unwrap();
        assert_eq!(d.samples[0].label.decode(), greedy.codebook);
        assert_eq!(d.samples[0].coord_norm, [0.0; 3]);
    }

    #[test]
    fn greedy_labels_against_rank1_optimum() {
        let meta = small_meta(2, 2, [2, 2, 2]);
        let geom = ScenarioGeometry::new(meta.geometry.clone()).unwrap();
        let d = generate(&meta, Execution::Sequential).unwrap();
        let optimal = d
            .samples
            .iter()
            .filter(|s| {
                let best = exhaustive_rank1(&geom, s.coord_raw, 24, Execution::Sequential).unwrap();
                s.power_dbm == best.power.dbm
            })
            .count();
        // Measured: on a 2x2 panel the traversal reaches the optimum at all 8 points.
        assert_eq!(optimal, 8);
    }

    #[test]
    fn stored_power_matches_recomputation() {
        let meta = small_meta(4, 3, [3, 2, 2]);
        let geom = ScenarioGeometry::new(meta.geometry.clone()).unwrap();
        let d = generate(&meta, Execution::Parallel).unwrap();
        for s in &d.samples {
            let p = geom.received_power(s.coord_raw, &s.label.decode()).unwrap();
            assert!((p.dbm - s.power_dbm).abs() < 1e-9);
        }
        assert_eq!(d, generate(&meta, Execution::Sequential).unwrap());
    }

    #[test]
    fn file_round_trip_and_determinism() {
        let meta = small_meta(3, 3, [3, 2, 2]);
        let d = generate(&meta, Execution::Parallel).unwrap();
        let text = d.to_text();
        assert_eq!(Dataset::from_text(&text).unwrap(), d);
        assert_eq!(generate(&meta, Execution::Parallel).unwrap().to_text(), text);
    }

    #[test]
    fn truncated_file_names_the_record() {
        let meta = small_meta(3, 3, [3, 2, 1]);
        let text = generate(&meta, Execution::Sequential).unwrap().to_text();
        let cut: Vec<&str> = text.lines().collect();
        let truncated = cut[..cut.len() - 2].join("\n");
        match Dataset::from_text(&truncated) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("record 4"), "{message}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn version_and_record_errors() {
        let meta = small_meta(2, 2, [1, 1, 1]);
        let text = generate(&meta, Execution::Sequential).unwrap().to_text();
        let wrong = text.replacen(FORMAT_TAG, "ris-dataset v9", 1);
        assert!(matches!(Dataset::from_text(&wrong), Err(Error::VersionMismatch { .. })));
        let last = text.lines().last().unwrap().to_string();
        let bad_len = text.replace(&last, "0.1 2.0 0.5 0101 -3.0");
        match Dataset::from_text(&bad_len) {
            Err(Error::Parse { message, .. }) => assert!(message.contains("record 0")),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn external_file_loads() {
        let text = "ris-dataset v1
begin meta
seed = 11

[geometry]
tx_position = [-3.0, 4.0, 1.5]
ris_center = [0.0, 0.0, 1.5]
row_axis = [0.0, 0.0, -1.0]
col_axis = [1.0, 0.0, 0.0]
rows = 2
cols = 3
element_spacing = 0.01
wavelength = 0.02
amplitude_scale = 1.0

[grid]
box_min = [0.0, 1.0, 0.0]
box_max = [0.9, 1.6, 1.4]
counts = [10, 7, 15]

[split]
train = 0.8
val = 0.1
test = 0.1
end meta
samples 2
0.0 1.0 0.0 0110 -26.4
0.9 1.6 1.4 1111 -27.125
";
        let d = Dataset::from_text(text).unwrap();
        assert_eq!(d.samples.len(), 2);
        assert_eq!(d.samples[1].coord_norm, [1.0; 3]);
        assert_eq!(d.samples[0].label.bits(), &[0, 1, 1, 0]);
        assert_eq!(d.meta.geometry.min_distance, 1e-6);
    }
}
