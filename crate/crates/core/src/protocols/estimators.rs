use std::fmt;

use super::{ProtocolSpec, RoundRecord};
use crate::channel::DetectionMatrix;
use crate::error::{Error, Result};

/// Sifted-key error: per preparation group, the fraction of kept rounds
/// where Bob's symbol is an error, then the mean over groups with data.
pub fn qber_from_rounds(spec: &ProtocolSpec, sifted: &[RoundRecord]) -> Result<f64> {
    let mut errors = vec![0u32; spec.n_groups()];
    let mut totals = vec![0u32; spec.n_groups()];
    for r in sifted {
        if let Some((a, b)) = r.key {
            totals[r.alice_group] += 1;
            errors[r.alice_group] += u32::from(spec.is_error(a, b));
        }
    }
    mean_ratio(&errors, &totals).ok_or(Error::EmptyInput("sifted rounds"))
}

fn mean_ratio<T: Copy + Into<f64>>(num: &[T], den: &[T]) -> Option<f64> {
    let rates: Vec<f64> = num
        .iter()
        .zip(den)
        .filter(|(_, d)| (**d).into() > 0.0)
        .map(|(n, d)| (*n).into() / (*d).into())
        .collect();
    if rates.is_empty() {
        None
    } else {
        Some(rates.iter().sum::<f64>() / rates.len() as f64)
    }
}

/// Detection-matrix counterpart of `qber_from_rounds`: for each group, the
/// error mass over the total mass in the matching context, averaged over
/// groups.
pub fn qber_from_matrix(spec: &ProtocolSpec, dm: &DetectionMatrix) -> Result<f64> {
    if dm.n_rows() != spec.preparations().len() || dm.contexts().len() != spec.n_groups() {
        return Err(Error::Malformed(format!(
            "matrix shape {}x{} contexts does not match the {} table",
            dm.n_rows(),
            dm.contexts().len(),
            spec.family()
        )));
    }
    let mut errors = vec![0.0; spec.n_groups()];
    let mut totals = vec![0.0; spec.n_groups()];
    for (row, prep) in spec.preparations().iter().enumerate() {
        let g = prep.group;
        for (col, p) in dm.context_entries(row, g).iter().enumerate() {
            totals[g] += p;
            if spec.is_error(prep.symbol, col) {
                errors[g] += p;
            }
        }
    }
    mean_ratio(&errors, &totals).ok_or(Error::EmptyInput("detection mass"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextRates {
    pub id: String,
    pub e_b: f64,
    pub e_d: f64,
}

/// Chau15 error summary.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRates {
    /// Sign error of the sifted raw key, weighted by detection mass.
    pub e_raw: f64,
    /// Mean over states of the wrong-sign share of the matching block.
    pub e_b: f64,
    /// Mean over states of the mass missing from the matching block.
    pub e_d: f64,
    pub per_context: Vec<ContextRates>,
}

impl fmt::Display for ErrorRates {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "e_raw={}", self.e_raw)?;
        writeln!(f, "e_b={}", self.e_b)?;
        writeln!(f, "e_d={}", self.e_d)?;
        for c in &self.per_context {
            writeln!(f, "e_b[{}]={}", c.id, c.e_b)?;
            writeln!(f, "e_d[{}]={}", c.id, c.e_d)?;
        }
        Ok(())
    }
}

/// Rows labelled `<i>-<j><+|->`, contexts `<i>-<j>` with columns `+` and `-`.
/// For a row, the matching block is its pair's context: e_b(row) is the
/// opposite-sign entry over the block mass and e_d(row) is one minus the
/// block mass. Both are averaged uniformly over rows (equivalently over
/// pairs, each pair contributing both signs).
pub fn chau_error_rates(dm: &DetectionMatrix) -> Result<ErrorRates> {
    let mut per: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    let mut wrong_total = 0.0;
    let mut mass_total = 0.0;
    let mut eb = Vec::new();
    let mut ed = Vec::new();
    for (row, label) in dm.row_labels().iter().enumerate() {
        let (pair, sign) = match label.char_indices().last() {
            Some((i, '+')) => (&label[..i], 0usize),
            Some((i, '-')) => (&label[..i], 1usize),
            _ => return Err(Error::Malformed(format!("row `{label}` does not end in a sign"))),
        };
        let k = dm
            .context_index(pair)
            .ok_or_else(|| Error::Malformed(format!("no context `{pair}` for row `{label}`")))?;
        if dm.contexts()[k].labels != ["+", "-"] {
            return Err(Error::Malformed(format!("context `{pair}` must have columns +,-")));
        }
        let block = dm.context_entries(row, k);
        let mass = block[0] + block[1];
        let wrong = block[1 - sign];
        let e_b = if mass > 0.0 { wrong / mass } else { 0.0 };
        let e_d = (1.0 - mass).clamp(0.0, 1.0);
        wrong_total += wrong;
        mass_total += mass;
        eb.push(e_b);
        ed.push(e_d);
        match per.iter_mut().find(|(id, _)| id == pair) {
            Some((_, v)) => v.push((e_b, e_d)),
            None => per.push((pair.to_string(), vec![(e_b, e_d)])),
        }
    }
    if eb.is_empty() {
        return Err(Error::EmptyInput("detection matrix rows"));
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    Ok(ErrorRates {
        e_raw: if mass_total > 0.0 { wrong_total / mass_total } else { 0.0 },
        e_b: mean(&eb),
        e_d: mean(&ed),
        per_context: per
            .into_iter()
            .map(|(id, v)| ContextRates {
                id,
                e_b: v.iter().map(|x| x.0).sum::<f64>() / v.len() as f64,
                e_d: v.iter().map(|x| x.1).sum::<f64>() / v.len() as f64,
            })
            .collect(),
    })
}
