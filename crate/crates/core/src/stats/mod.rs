//! Probability tables over ordered dichotomic variables, seeded multinomial
//! sampling, and the CSV form used by the CLI.
//!
//! Flattening convention: axes are ordered, each axis takes +1 before -1, and
//! the first axis is the most significant digit. Index
//! `sum_i slot(v_i) * 2^(n-1-i)` with `slot(+1) = 0`, `slot(-1) = 1`.

mod rng;

pub use rng::SplitMix64;

use std::fmt::Write as _;

use thiserror::Error;

use crate::qcore::{expectation_two, tensor, QubitOperator, Sign, TwoQubitState};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("unknown axis {name:?}")]
    UnknownAxis { name: String },
    #[error("duplicate axis {name:?}")]
    DuplicateAxis { name: String },
    #[error("invalid axis name {name:?}")]
    InvalidAxisName { name: String },
    #[error("tables have different axes")]
    AxisMismatch,
    #[error("expected {expected} entries for {axes} axes, got {got}")]
    WrongLength {
        expected: usize,
        axes: usize,
        got: usize,
    },
    #[error("entries sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("entry {index} is {value}, negative beyond tolerance (table not marked quasi)")]
    NegativeEntry { index: usize, value: f64 },
    #[error("marginal must keep at least one axis")]
    EmptyKeep,
    #[error("conditioning event {event} has non-positive probability ({mass})")]
    ZeroProbabilityEvent { event: String, mass: f64 },
    #[error("refusing to sample from a quasi-probability table")]
    QuasiRejected,
    #[error("outcome labels of a four-element POVM must cover all sign pairs")]
    IncompleteLabeling,
    #[error("cannot form empirical frequencies from zero draws")]
    NoDraws,
    #[error("csv line {line}: {msg}")]
    Csv { line: usize, msg: String },
}

/// Entries may dip this far below zero before a non-quasi table is rejected;
/// covers round-off in traces of positive operators.
const NEG_TOL: f64 = 1e-12;

/// Sum-to-one tolerance for table construction.
const SUM_TOL: f64 = 1e-12;

/// A joint distribution over `n` named dichotomic variables. `quasi` marks
/// tables produced by noise inversion, where negative entries are
/// meaningful and preserved.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbTable {
    axes: Vec<String>,
    entries: Vec<f64>,
    quasi: bool,
}

fn validate_axes(axes: &[String]) -> Result<(), StatsError> {
    for (i, name) in axes.iter().enumerate() {
        if name.is_empty() || name.contains(',') || name.contains(char::is_whitespace) {
            return Err(StatsError::InvalidAxisName { name: name.clone() });
        }
        if axes[..i].contains(name) {
            return Err(StatsError::DuplicateAxis { name: name.clone() });
        }
    }
    Ok(())
}

impl ProbTable {
    pub fn new(
        axes: Vec<String>,
        entries: Vec<f64>,
        quasi: bool,
    ) -> Result<ProbTable, StatsError> {
        validate_axes(&axes)?;
        let expected = 1usize << axes.len();
        if entries.len() != expected {
            return Err(StatsError::WrongLength {
                expected,
                axes: axes.len(),
                got: entries.len(),
            });
        }
        let sum: f64 = entries.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(StatsError::NotNormalized { sum });
        }
        if !quasi {
            for (index, &value) in entries.iter().enumerate() {
                if value < -NEG_TOL {
                    return Err(StatsError::NegativeEntry { index, value });
                }
            }
        }
        Ok(ProbTable {
            axes,
            entries,
            quasi,
        })
    }

    /// Builds a table by evaluating `f` on every outcome tuple.
    pub fn from_fn<F>(axes: Vec<String>, quasi: bool, mut f: F) -> Result<ProbTable, StatsError>
    where
        F: FnMut(&[Sign]) -> f64,
    {
        let n = axes.len();
        let entries = (0..1usize << n)
            .map(|i| f(&index_to_values(i, n)))
            .collect();
        ProbTable::new(axes, entries, quasi)
    }

    pub fn uniform(axes: Vec<String>) -> Result<ProbTable, StatsError> {
        let n = axes.len();
        let p = 1.0 / (1usize << n) as f64;
        ProbTable::new(axes, vec![p; 1 << n], false)
    }

    pub fn axes(&self) -> &[String] {
        &self.axes
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn is_quasi(&self) -> bool {
        self.quasi
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn axis_position(&self, name: &str) -> Result<usize, StatsError> {
        self.axes
            .iter()
            .position(|a| a == name)
            .ok_or_else(|| StatsError::UnknownAxis {
                name: name.to_string(),
            })
    }

    pub fn index_of(&self, values: &[Sign]) -> usize {
        assert_eq!(values.len(), self.axes.len(), "tuple arity mismatch");
        values_to_index(values)
    }

    pub fn get(&self, values: &[Sign]) -> f64 {
        self.entries[self.index_of(values)]
    }

    /// Probability of a partial assignment, summing over unnamed axes.
    pub fn event_mass(&self, given: &[(&str, Sign)]) -> Result<f64, StatsError> {
        let mut fixed: Vec<(usize, Sign)> = Vec::with_capacity(given.len());
        for &(name, v) in given {
            let pos = self.axis_position(name)?;
            if fixed.iter().any(|&(p, _)| p == pos) {
                return Err(StatsError::DuplicateAxis {
                    name: name.to_string(),
                });
            }
            fixed.push((pos, v));
        }
        let n = self.axes.len();
        let mut mass = 0.0;
        for i in 0..self.entries.len() {
            let vals = index_to_values(i, n);
            if fixed.iter().all(|&(p, v)| vals[p] == v) {
                mass += self.entries[i];
            }
        }
        Ok(mass)
    }

    /// Sums out every axis not named in `keep`; kept axes stay in table order.
    pub fn marginalize(&self, keep: &[&str]) -> Result<ProbTable, StatsError> {
        if keep.is_empty() {
            return Err(StatsError::EmptyKeep);
        }
        let mut positions = Vec::with_capacity(keep.len());
        for name in keep {
            let pos = self.axis_position(name)?;
            if positions.contains(&pos) {
                return Err(StatsError::DuplicateAxis {
                    name: name.to_string(),
                });
            }
            positions.push(pos);
        }
        positions.sort_unstable();
        let n = self.axes.len();
        let m = positions.len();
        let mut entries = vec![0.0; 1 << m];
        for i in 0..self.entries.len() {
            let vals = index_to_values(i, n);
            let kept: Vec<Sign> = positions.iter().map(|&p| vals[p]).collect();
            entries[values_to_index(&kept)] += self.entries[i];
        }
        let axes = positions.iter().map(|&p| self.axes[p].clone()).collect();
        ProbTable::new(axes, entries, self.quasi)
    }

    /// Conditions on a partial assignment and renormalizes the rest.
    /// Conditioning on every axis yields the zero-axis table with entry 1.
    pub fn condition(&self, given: &[(&str, Sign)]) -> Result<ProbTable, StatsError> {
        let mut fixed: Vec<(usize, Sign)> = Vec::with_capacity(given.len());
        for &(name, v) in given {
            let pos = self.axis_position(name)?;
            if fixed.iter().any(|&(p, _)| p == pos) {
                return Err(StatsError::DuplicateAxis {
                    name: name.to_string(),
                });
            }
            fixed.push((pos, v));
        }
        let n = self.axes.len();
        let keep: Vec<usize> = (0..n)
            .filter(|p| !fixed.iter().any(|&(fp, _)| fp == *p))
            .collect();
        let mut entries = vec![0.0; 1 << keep.len()];
        let mut mass = 0.0;
        for i in 0..self.entries.len() {
            let vals = index_to_values(i, n);
            if fixed.iter().all(|&(p, v)| vals[p] == v) {
                let kept: Vec<Sign> = keep.iter().map(|&p| vals[p]).collect();
                entries[values_to_index(&kept)] += self.entries[i];
                mass += self.entries[i];
            }
        }
        if mass <= 0.0 {
            let event = given
                .iter()
                .map(|(name, v)| format!("{name}={v}"))
                .collect::<Vec<_>>()
                .join(",");
            return Err(StatsError::ZeroProbabilityEvent { event, mass });
        }
        for e in entries.iter_mut() {
            *e /= mass;
        }
        let axes = keep.iter().map(|&p| self.axes[p].clone()).collect();
        ProbTable::new(axes, entries, self.quasi)
    }

    /// Replaces one axis by `new_p(kappa) = sum_k' kernel(kappa, k') p(k')`,
    /// leaving the others untouched. `allow_negative` marks the result quasi,
    /// for kernels (like exact noise inversion) that can leave the simplex.
    pub fn transform_axis<F>(
        &self,
        axis: &str,
        allow_negative: bool,
        kernel: F,
    ) -> Result<ProbTable, StatsError>
    where
        F: Fn(Sign, Sign) -> f64,
    {
        let pos = self.axis_position(axis)?;
        let n = self.axes.len();
        let mut entries = vec![0.0; self.entries.len()];
        for (i, out) in entries.iter_mut().enumerate() {
            let mut vals = index_to_values(i, n);
            let target = vals[pos];
            let mut acc = 0.0;
            for source in Sign::BOTH {
                vals[pos] = source;
                acc += kernel(target, source) * self.entries[values_to_index(&vals)];
            }
            *out = acc;
        }
        ProbTable::new(
            self.axes.clone(),
            entries,
            self.quasi || allow_negative,
        )
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// `max(0, -min entry)`: zero exactly when the table is a true
    /// probability distribution.
    pub fn negativity(&self) -> f64 {
        (-self.min_entry()).max(0.0)
    }

    /// Half the L1 distance. Requires identical axes in identical order.
    pub fn total_variation(&self, other: &ProbTable) -> Result<f64, StatsError> {
        if self.axes != other.axes {
            return Err(StatsError::AxisMismatch);
        }
        let d: f64 = self
            .entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| (a - b).abs())
            .sum();
        Ok(0.5 * d)
    }

    /// Outcome tuples in flattening order.
    pub fn outcomes(&self) -> impl Iterator<Item = Vec<Sign>> + '_ {
        let n = self.axes.len();
        (0..self.entries.len()).map(move |i| index_to_values(i, n))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if self.quasi {
            out.push_str("# quasi=true\n");
        }
        out.push_str(&self.axes.join(","));
        if !self.axes.is_empty() {
            out.push(',');
        }
        out.push_str("p\n");
        for (vals, &p) in self.outcomes().zip(self.entries.iter()) {
            for v in &vals {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{}", fmt_g17(p));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<ProbTable, StatsError> {
        let mut quasi = false;
        let mut header: Option<(Vec<String>, usize)> = None;
        let mut entries: Vec<Option<f64>> = Vec::new();
        let mut axes: Vec<String> = Vec::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(meta) = line.strip_prefix('#') {
                for kv in meta.split_whitespace() {
                    if let Some(("quasi", v)) = kv.split_once('=') {
                        quasi = v == "true";
                    }
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            match &header {
                None => {
                    if fields.last() != Some(&"p") {
                        return Err(StatsError::Csv {
                            line: lineno + 1,
                            msg: "header must end with column 'p'".into(),
                        });
                    }
                    axes = fields[..fields.len() - 1]
                        .iter()
                        .map(|s| s.to_string())
                        .collect();
                    validate_axes(&axes).map_err(|e| StatsError::Csv {
                        line: lineno + 1,
                        msg: e.to_string(),
                    })?;
                    entries = vec![None; 1 << axes.len()];
                    header = Some((axes.clone(), axes.len()));
                }
                Some((_, n)) => {
                    if fields.len() != n + 1 {
                        return Err(StatsError::Csv {
                            line: lineno + 1,
                            msg: format!("expected {} fields, got {}", n + 1, fields.len()),
                        });
                    }
                    let mut vals = Vec::with_capacity(*n);
                    for f in &fields[..*n] {
                        vals.push(f.parse::<Sign>().map_err(|msg| StatsError::Csv {
                            line: lineno + 1,
                            msg,
                        })?);
                    }
                    let p: f64 = fields[*n].parse().map_err(|e| StatsError::Csv {
                        line: lineno + 1,
                        msg: format!("bad probability: {e}"),
                    })?;
                    let idx = values_to_index(&vals);
                    if entries[idx].is_some() {
                        return Err(StatsError::Csv {
                            line: lineno + 1,
                            msg: "duplicate outcome tuple".into(),
                        });
                    }
                    entries[idx] = Some(p);
                }
            }
        }
        if header.is_none() {
            return Err(StatsError::Csv {
                line: 0,
                msg: "missing header".into(),
            });
        }
        let mut flat = Vec::with_capacity(entries.len());
        for (i, e) in entries.iter().enumerate() {
            match e {
                Some(v) => flat.push(*v),
                None => {
                    return Err(StatsError::Csv {
                        line: 0,
                        msg: format!("missing outcome tuple at flat index {i}"),
                    })
                }
            }
        }
        ProbTable::new(axes, flat, quasi)
    }
}

/// 17 significant digits: enough to reproduce any f64 exactly on re-parse.
pub fn fmt_g17(x: f64) -> String {
    format!("{x:.16e}")
}

fn values_to_index(values: &[Sign]) -> usize {
    let mut idx = 0usize;
    for v in values {
        idx = (idx << 1) | v.index();
    }
    idx
}

fn index_to_values(index: usize, n: usize) -> Vec<Sign> {
    (0..n)
        .map(|i| Sign::from_index((index >> (n - 1 - i)) & 1))
        .collect()
}

/// Four POVM elements labeled by a pair of named dichotomic variables.
/// Space-1 arms label the detectors by (outcome, setting); space-2 arms by
/// two outcomes. Either way the table machinery only sees this form.
#[derive(Debug, Clone)]
pub struct LabeledPovm {
    axes: [String; 2],
    elements: Vec<([Sign; 2], QubitOperator)>,
}

impl LabeledPovm {
    pub fn new(
        axes: [String; 2],
        elements: Vec<([Sign; 2], QubitOperator)>,
    ) -> Result<LabeledPovm, StatsError> {
        let names: Vec<String> = axes.to_vec();
        validate_axes(&names)?;
        if elements.len() != 4 {
            return Err(StatsError::IncompleteLabeling);
        }
        for a in Sign::BOTH {
            for b in Sign::BOTH {
                if elements.iter().filter(|(l, _)| *l == [a, b]).count() != 1 {
                    return Err(StatsError::IncompleteLabeling);
                }
            }
        }
        Ok(LabeledPovm { axes, elements })
    }

    pub fn axes(&self) -> &[String; 2] {
        &self.axes
    }

    pub fn element(&self, values: [Sign; 2]) -> &QubitOperator {
        &self
            .elements
            .iter()
            .find(|(l, _)| *l == values)
            .expect("all sign pairs present by construction")
            .1
    }
}

/// Joint outcome table `tr[rho (A (x) B)]` over the four labeled variables,
/// axes ordered A then B.
pub fn joint_table(
    rho: &TwoQubitState,
    a: &LabeledPovm,
    b: &LabeledPovm,
) -> Result<ProbTable, StatsError> {
    let axes: Vec<String> = a
        .axes
        .iter()
        .chain(b.axes.iter())
        .cloned()
        .collect();
    validate_axes(&axes)?;
    ProbTable::from_fn(axes, false, |vals| {
        let ea = a.element([vals[0], vals[1]]);
        let eb = b.element([vals[2], vals[3]]);
        expectation_two(rho, &tensor(ea, eb))
    })
}

/// Outcome counts from a seeded multinomial draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClickCounts {
    pub axes: Vec<String>,
    pub counts: Vec<u64>,
    pub n_total: u64,
    pub seed: u64,
}

impl ClickCounts {
    pub fn empirical(&self) -> Result<ProbTable, StatsError> {
        if self.n_total == 0 {
            return Err(StatsError::NoDraws);
        }
        let entries = self
            .counts
            .iter()
            .map(|&c| c as f64 / self.n_total as f64)
            .collect();
        ProbTable::new(self.axes.clone(), entries, false)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# n={} seed={}", self.n_total, self.seed);
        out.push_str(&self.axes.join(","));
        if !self.axes.is_empty() {
            out.push(',');
        }
        out.push_str("count\n");
        let n = self.axes.len();
        for (i, c) in self.counts.iter().enumerate() {
            for v in index_to_values(i, n) {
                let _ = write!(out, "{v},");
            }
            let _ = writeln!(out, "{c}");
        }
        out
    }
}

/// Draws `n` outcomes by inverse CDF over the flattened table: each uniform
/// lands in the first slot whose running sum strictly exceeds it. The stream
/// is the SplitMix64 sequence of `seed`, one uniform per draw.
pub fn sample_counts(table: &ProbTable, n: u64, seed: u64) -> Result<ClickCounts, StatsError> {
    if table.is_quasi() {
        return Err(StatsError::QuasiRejected);
    }
    let m = table.len();
    let mut cdf = Vec::with_capacity(m);
    let mut acc = 0.0;
    for &p in table.entries() {
        acc += p;
        cdf.push(acc);
    }
    // fallback for uniforms beyond the accumulated sum (round-off shortfall):
    // the last outcome with nonzero probability
    let fallback = table
        .entries()
        .iter()
        .rposition(|&p| p > 0.0)
        .unwrap_or(m - 1);

    let mut counts = vec![0u64; m];
    let mut rng = SplitMix64::new(seed);
    for _ in 0..n {
        let u = rng.next_f64();
        let k = cdf
            .iter()
            .position(|&c| u < c)
            .unwrap_or(fallback);
        counts[k] += 1;
    }
    Ok(ClickCounts {
        axes: table.axes().to_vec(),
        counts,
        n_total: n,
        seed,
    })
}
