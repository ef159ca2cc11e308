//! Ground-truth codebook labels.
//!
//! [`greedy_traversal`] is the labeler used for datasets. The two exhaustive
//! searches are reference optima over the row/column-flip set and over all
//! `2^(MN)` codebooks.

use crate::codebook::{label_len, Codebook, EncodedLabel};
use crate::exec::Execution;
use crate::error::{Error, Result};
use crate::field::{GainMatrix, Point3, Power, ScenarioGeometry};

pub const DEFAULT_RANK1_BUDGET: usize = 24;
pub const DEFAULT_FULL_BUDGET: usize = 20;

#[derive(Clone, Debug, PartialEq)]
pub struct OracleResult {
    pub codebook: Codebook,
    pub power: Power,
    /// Full row+column sweeps executed, including the final unchanged one.
    pub passes: usize,
    pub evaluations: u64,
    /// Whether `codebook` is a row/column-flip codebook (always true for the
    /// greedy and rank-1 searches).
    pub rank1: bool,
}

impl OracleResult {
    pub fn label(&self) -> Result<EncodedLabel> {
        self.codebook.encode()
    }
}

/// Row-then-column flip traversal from the all `-1` codebook. A flip is kept
/// only if linear power strictly increases; stops after a sweep with no kept
/// flip.
pub fn greedy_traversal(geom: &ScenarioGeometry, v: Point3) -> Result<OracleResult> {
    greedy_traced(geom, v).map(|(r, _)| r)
}

/// Same as [`greedy_traversal`], also returning the linear power of every
/// accepted state, starting with the initial codebook.
pub fn greedy_traced(geom: &ScenarioGeometry, v: Point3) -> Result<(OracleResult, Vec<f64>)> {
    let gains = geom.channel_gains(v)?;
    Ok(greedy_on_gains(&gains))
}

pub(crate) fn greedy_on_gains(gains: &GainMatrix) -> (OracleResult, Vec<f64>) {
    let (rows, cols) = (gains.rows(), gains.cols());
    let mut cb = Codebook::initial(rows, cols);
    let mut best = gains.linear_power_of(cb.entries());
    let mut evaluations = 1u64;
    let mut trace = vec![best];
    let mut passes = 0usize;
    loop {
        passes += 1;
        debug_assert!(
            rows + cols >= 127 || passes as u128 <= 1u128 << (rows + cols),
            "traversal failed to converge"
        );
        let mut changed = false;
        for line in (0..rows).map(Line::Row).chain((0..cols).map(Line::Col)) {
            line.flip(&mut cb);
            let p = gains.linear_power_of(cb.entries());
            evaluations += 1;
            if p > best {
                best = p;
                trace.push(p);
                changed = true;
            } else {
                line.flip(&mut cb);
            }
        }
        if !changed {
            break;
        }
    }
    let result = OracleResult {
        codebook: cb,
        power: Power::from_linear(best),
        passes,
        evaluations,
        rank1: true,
    };
    (result, trace)
}

#[derive(Clone, Copy)]
enum Line {
    Row(usize),
    Col(usize),
}

impl Line {
    fn flip(self, cb: &mut Codebook) {
        match self {
            Line::Row(i) => cb.flip_row(i),
            Line::Col(j) => cb.flip_col(j),
        }
    }
}

/// Best row/column-flip codebook by enumerating all `2^(M+N-1)` labels.
/// Ties go to the smallest label index.
pub fn exhaustive_rank1(geom: &ScenarioGeometry, v: Point3, budget: usize, exec: Execution) -> Result<OracleResult> {
    let gains = geom.channel_gains(v)?;
    let (rows, cols) = (geom.rows(), geom.cols());
    let bits = label_len(rows, cols);
    check_budget(bits, budget)?;
    let (index, linear) = search(1u64 << bits, exec, |idx, buf| {
        let cb = EncodedLabel::from_index(rows, cols, idx).decode();
        buf.copy_from_slice(cb.entries());
        gains.linear_power_of(buf)
    }, rows * cols);
    Ok(OracleResult {
        codebook: EncodedLabel::from_index(rows, cols, index).decode(),
        power: Power::from_linear(linear),
        passes: 0,
        evaluations: 1u64 << bits,
        rank1: true,
    })
}

/// Best codebook over all `2^(MN)` sign patterns. Ties go to the smallest
/// row-major index (see [`Codebook::from_index`]).
pub fn exhaustive_full(geom: &ScenarioGeometry, v: Point3, budget: usize, exec: Execution) -> Result<OracleResult> {
    let gains = geom.channel_gains(v)?;
    let (rows, cols) = (geom.rows(), geom.cols());
    let bits = rows * cols;
    check_budget(bits, budget)?;
    let (index, linear) = search(1u64 << bits, exec, |idx, buf| {
        for (k, e) in buf.iter_mut().enumerate() {
            *e = if (idx >> (bits - 1 - k)) & 1 == 1 { 1 } else { -1 };
        }
        gains.linear_power_of(buf)
    }, bits);
    let codebook = Codebook::from_index(rows, cols, index);
    Ok(OracleResult {
        rank1: codebook.factor().is_ok(),
        codebook,
        power: Power::from_linear(linear),
        passes: 0,
        evaluations: 1u64 << bits,
    })
}

fn check_budget(bits: usize, budget: usize) -> Result<()> {
    if bits > budget || bits >= 64 {
        Err(Error::BudgetExceeded { bits, budget })
    } else {
        Ok(())
    }
}

const CHUNK: u64 = 1 << 12;

/// Argmax of `score` over `0..count`, earliest index on ties. Chunks are
/// scanned independently and reduced in index order, so the answer does not
/// depend on `exec`.
fn search<F>(count: u64, exec: Execution, score: F, width: usize) -> (u64, f64)
where
    F: Fn(u64, &mut [i8]) -> f64 + Sync + Send,
{
    let chunks = count.div_ceil(CHUNK) as usize;
    let best = exec.map(chunks, |c| {
        let mut buf = vec![0i8; width];
        let start = c as u64 * CHUNK;
        let end = (start + CHUNK).min(count);
        let mut best = (start, f64::NEG_INFINITY);
        for idx in start..end {
            let p = score(idx, &mut buf);
            if p > best.1 {
                best = (idx, p);
            }
        }
        best
    });
    best.into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one candidate")
}
