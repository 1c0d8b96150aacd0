use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};

use super::{apply, Channel};
use crate::error::{Error, Result};
use crate::qmath::{c, DensityMatrix, Operator, StateVector};

/// Completeness tolerance for a measurement context.
const COMPLETE_TOL: f64 = 1e-9;
/// Rounding noise removed from Born probabilities.
const SNAP_TOL: f64 = 1e-14;

pub(crate) fn valid_tag(s: &str) -> bool {
    !s.is_empty()
        && s
            .chars()
            .all(|ch| ch.is_ascii_alphanumeric() || matches!(ch, '_' | '+' | '-' | '.'))
}

fn check_tag(kind: &str, s: &str) -> Result<()> {
    if valid_tag(s) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{kind} `{s}` must be nonempty and use only [A-Za-z0-9_+-.]"
        )))
    }
}

/// One measurement setting: rank-one effects `weight * |v><v|`, one per
/// outcome. Incomplete contexts leave a "no click" remainder.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementContext {
    id: String,
    labels: Vec<String>,
    vectors: Vec<StateVector>,
    weight: f64,
}

impl MeasurementContext {
    pub fn projective(id: impl Into<String>, labels: Vec<String>, vectors: Vec<StateVector>) -> Result<Self> {
        Self::povm(id, labels, vectors, 1.0)
    }

    pub fn povm(
        id: impl Into<String>,
        labels: Vec<String>,
        vectors: Vec<StateVector>,
        weight: f64,
    ) -> Result<Self> {
        let id = id.into();
        check_tag("context id", &id)?;
        if labels.len() != vectors.len() || vectors.is_empty() {
            return Err(Error::Malformed(format!(
                "context `{id}` has {} labels for {} vectors",
                labels.len(),
                vectors.len()
            )));
        }
        for l in &labels {
            check_tag("outcome label", l)?;
        }
        let dim = vectors[0].dim();
        for v in &vectors {
            if v.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: v.dim(),
                });
            }
            if !v.is_normalized() {
                return Err(Error::NotNormalized(v.norm_sqr()));
            }
        }
        if !(weight > 0.0 && weight <= 1.0) {
            return Err(Error::InvalidParameter(format!("POVM weight {weight}")));
        }
        let ctx = Self {
            id,
            labels,
            vectors,
            weight,
        };
        let sum = ctx.effect_sum();
        let min = crate::qmath::eig_min_hermitian(&Operator::identity(dim).add(&sum.scale(c(-1.0, 0.0)))?)?;
        if min < -COMPLETE_TOL {
            return Err(Error::InvalidParameter(format!(
                "context `{}` effects exceed the identity",
                ctx.id
            )));
        }
        Ok(ctx)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].dim()
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn effect(&self, k: usize) -> Operator {
        self.vectors[k].projector().scale(c(self.weight, 0.0))
    }

    fn effect_sum(&self) -> Operator {
        let mut sum = Operator::zeros(self.dim());
        for k in 0..self.len() {
            sum = sum.add(&self.effect(k)).expect("same dimension");
        }
        sum
    }

    pub fn is_complete(&self) -> bool {
        self.effect_sum().max_abs_diff(&Operator::identity(self.dim())) < COMPLETE_TOL
    }

    /// Outcome probabilities Tr(E_k rho). Values within `SNAP_TOL` of 0 or 1
    /// are snapped so exact cases stay exact.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.vectors
            .iter()
            .map(|v| {
                let p = self.weight * rho.overlap(v)?;
                Ok(if p < SNAP_TOL {
                    0.0
                } else if p > 1.0 - SNAP_TOL {
                    1.0
                } else {
                    p
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    Analytic,
    Sampled { shots: u64, seed: u64 },
}

/// Column group of a detection matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextColumns {
    pub id: String,
    pub labels: Vec<String>,
    pub complete: bool,
}

/// Prepare-vs-measure probabilities: one row per prepared state, columns
/// grouped by measurement context.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionMatrix {
    dim: usize,
    protocol: String,
    mode: SamplingMode,
    row_labels: Vec<String>,
    contexts: Vec<ContextColumns>,
    entries: Vec<Vec<f64>>,
}

impl DetectionMatrix {
    pub fn new(
        dim: usize,
        protocol: impl Into<String>,
        mode: SamplingMode,
        row_labels: Vec<String>,
        contexts: Vec<ContextColumns>,
        entries: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let protocol = protocol.into();
        check_tag("protocol tag", &protocol)?;
        if let SamplingMode::Sampled { shots: 0, .. } = mode {
            return Err(Error::InvalidParameter("sampled mode needs shots > 0".into()));
        }
        if row_labels.len() != entries.len() || row_labels.is_empty() {
            return Err(Error::Malformed(format!(
                "{} row labels for {} rows",
                row_labels.len(),
                entries.len()
            )));
        }
        for l in &row_labels {
            check_tag("row label", l)?;
        }
        let mut seen = std::collections::HashSet::new();
        for ctx in &contexts {
            check_tag("context id", &ctx.id)?;
            if !seen.insert(ctx.id.as_str()) {
                return Err(Error::Malformed(format!("duplicate context `{}`", ctx.id)));
            }
            if ctx.labels.is_empty() {
                return Err(Error::Malformed(format!("context `{}` has no columns", ctx.id)));
            }
            for l in &ctx.labels {
                check_tag("column label", l)?;
            }
        }
        let n_cols: usize = contexts.iter().map(|c| c.labels.len()).sum();
        let dm = Self {
            dim,
            protocol,
            mode,
            row_labels,
            contexts,
            entries,
        };
        for (r, row) in dm.entries.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::Malformed(format!(
                    "row `{}` has {} entries, expected {n_cols}",
                    dm.row_labels[r],
                    row.len()
                )));
            }
            if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::InvalidDistribution(format!(
                    "entry {bad} in row `{}` outside [0, 1]",
                    dm.row_labels[r]
                )));
            }
            for k in 0..dm.contexts.len() {
                let s = dm.context_sum(r, k);
                if s > 1.0 + 1e-9 {
                    return Err(Error::InvalidDistribution(format!(
                        "row `{}` context `{}` sums to {s}",
                        dm.row_labels[r], dm.contexts[k].id
                    )));
                }
            }
        }
        Ok(dm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn protocol(&self) -> &str {
        &self.protocol
    }

    pub fn mode(&self) -> SamplingMode {
        self.mode
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn contexts(&self) -> &[ContextColumns] {
        &self.contexts
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn n_rows(&self) -> usize {
        self.entries.len()
    }

    pub fn n_cols(&self) -> usize {
        self.contexts.iter().map(|c| c.labels.len()).sum()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row][col]
    }

    /// Column index range of context `k`.
    pub fn context_range(&self, k: usize) -> std::ops::Range<usize> {
        let start: usize = self.contexts[..k].iter().map(|c| c.labels.len()).sum();
        start..start + self.contexts[k].labels.len()
    }

    pub fn context_index(&self, id: &str) -> Option<usize> {
        self.contexts.iter().position(|c| c.id == id)
    }

    pub fn row_index(&self, label: &str) -> Option<usize> {
        self.row_labels.iter().position(|l| l == label)
    }

    /// Entries of row `row` within context `k`.
    pub fn context_entries(&self, row: usize, k: usize) -> &[f64] {
        &self.entries[row][self.context_range(k)]
    }

    pub fn context_sum(&self, row: usize, k: usize) -> f64 {
        self.context_entries(row, k).iter().sum()
    }
}

/// Probability-of-detection matrix of `prepared` states sent through `ch`
/// and measured in each context. Sampled mode draws one multinomial sample of
/// `shots` per (row, context) from a ChaCha8 generator seeded with `seed`,
/// walking rows then contexts in order.
pub fn detection_matrix(
    protocol: &str,
    prepared: &[(String, StateVector)],
    contexts: &[MeasurementContext],
    ch: &Channel,
    mode: SamplingMode,
) -> Result<DetectionMatrix> {
    if prepared.is_empty() {
        return Err(Error::EmptyInput("prepared states"));
    }
    if contexts.is_empty() {
        return Err(Error::EmptyInput("measurement contexts"));
    }
    let d = ch.dim();
    for (_, s) in prepared {
        if s.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.dim(),
            });
        }
    }
    for ctx in contexts {
        if ctx.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: ctx.dim(),
            });
        }
    }
    let mut rng = match mode {
        SamplingMode::Analytic => None,
        SamplingMode::Sampled { shots: 0, .. } => {
            return Err(Error::InvalidParameter("sampled mode needs shots > 0".into()))
        }
        SamplingMode::Sampled { seed, .. } => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut entries = Vec::with_capacity(prepared.len());
    for (_, state) in prepared {
        let out = apply(ch, &DensityMatrix::from_pure(state)?)?;
        let mut row = Vec::new();
        for ctx in contexts {
            let probs = ctx.probabilities(&out)?;
            match (&mut rng, mode) {
                (Some(rng), SamplingMode::Sampled { shots, .. }) => {
                    let counts = multinomial(rng, shots, &probs)?;
                    row.extend(counts.iter().map(|&n| n as f64 / shots as f64));
                }
                _ => row.extend(probs),
            }
        }
        entries.push(row);
    }
    DetectionMatrix::new(
        d,
        protocol,
        mode,
        prepared.iter().map(|(l, _)| l.clone()).collect(),
        contexts
            .iter()
            .map(|ctx| ContextColumns {
                id: ctx.id.clone(),
                labels: ctx.labels.clone(),
                complete: ctx.is_complete(),
            })
            .collect(),
        entries,
    )
}

/// Multinomial draw over `probs` plus an implicit remainder category, via
/// sequential conditional binomials.
fn multinomial(rng: &mut ChaCha8Rng, shots: u64, probs: &[f64]) -> Result<Vec<u64>> {
    let mut remaining_n = shots;
    let mut remaining_p = 1.0f64;
    let mut counts = Vec::with_capacity(probs.len());
    for &p in probs {
        if remaining_n == 0 || remaining_p <= 0.0 {
            counts.push(0);
            continue;
        }
        let q = (p / remaining_p).clamp(0.0, 1.0);
        let k = Binomial::new(remaining_n, q)
            .map_err(|e| Error::InvalidParameter(format!("binomial({remaining_n}, {q}): {e}")))?
            .sample(rng);
        counts.push(k);
        remaining_n -= k;
        remaining_p -= p;
    }
    Ok(counts)
}
