use std::fmt;
use std::str::FromStr;

use super::optimize::MleConfig;
use super::process::{fit_process, ProcessMatrix};
use super::singapore::JointProbMatrix;
use crate::channel::{Channel, ContextColumns, DetectionMatrix, MeasurementContext, SamplingMode};
use crate::error::{Error, Result};
use crate::protocols::{ProtocolFamily, ProtocolSpec};
use crate::qmath::{hermitian_basis, StateVector};

/// Which prepare-and-measure table drives a process reconstruction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TomographyMethod {
    /// Every state of a complete MUB set, measured in every basis.
    Mub,
    /// The Singapore table: anti-SIC preparations, SIC-POVM measurement.
    Sic,
}

impl TomographyMethod {
    pub fn tag(self) -> &'static str {
        match self {
            TomographyMethod::Mub => "mub",
            TomographyMethod::Sic => "sic",
        }
    }

    pub fn protocol(self, d: usize) -> Result<ProtocolSpec> {
        match self {
            TomographyMethod::Mub => ProtocolSpec::new(ProtocolFamily::MubFull, d),
            TomographyMethod::Sic => ProtocolSpec::new(ProtocolFamily::Singapore, d),
        }
    }

    /// Detection matrix of `ch` under this method's table.
    pub fn simulate(self, ch: &Channel, mode: SamplingMode) -> Result<DetectionMatrix> {
        self.protocol(ch.dim())?.detection_matrix(ch, mode)
    }
}

impl fmt::Display for TomographyMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for TomographyMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mub" => Ok(TomographyMethod::Mub),
            "sic" => Ok(TomographyMethod::Sic),
            _ => Err(Error::InvalidParameter(format!("unknown tomography method `{s}` (mub|sic)"))),
        }
    }
}

/// Fits chi to `dm`, matching its rows and contexts to the method's table by
/// label. Rows or contexts the table does not know are rejected by name; a
/// matrix covering too few of them fails the completeness check.
pub fn reconstruct(
    dm: &DetectionMatrix,
    method: TomographyMethod,
    cfg: &MleConfig,
    trace_preserving: bool,
) -> Result<ProcessMatrix> {
    let spec = method.protocol(dm.dim())?;
    let prepared = dm
        .row_labels()
        .iter()
        .map(|label| {
            spec.preparations()
                .iter()
                .find(|p| &p.label == label)
                .map(|p| p.state.clone())
                .ok_or_else(|| Error::Malformed(format!("row `{label}` is not a {method} preparation")))
        })
        .collect::<Result<Vec<StateVector>>>()?;
    let contexts = dm
        .contexts()
        .iter()
        .map(|cols| {
            let ctx = spec
                .contexts()
                .iter()
                .find(|c| c.id() == cols.id)
                .ok_or_else(|| Error::Malformed(format!("context `{}` is not a {method} measurement", cols.id)))?;
            if ctx.labels() != cols.labels.as_slice() {
                return Err(Error::Malformed(format!("context `{}` has unexpected outcome labels", cols.id)));
            }
            Ok(ctx.clone())
        })
        .collect::<Result<Vec<MeasurementContext>>>()?;
    fit_process(dm, &prepared, &contexts, &hermitian_basis(dm.dim())?, cfg, trace_preserving)
}

/// Singapore-table detection matrix of a d = 2 joint matrix. Alice's outcome
/// k heralds the anti-state of SIC vector k at Bob, so row k is p_k. / p_k.
pub fn joint_to_detection(p: &JointProbMatrix) -> Result<DetectionMatrix> {
    let spec = TomographyMethod::Sic.protocol(p.dim())?;
    let ctx = &spec.contexts()[0];
    let mut entries = Vec::with_capacity(p.size());
    for (k, row) in p.rows().iter().enumerate() {
        let m: f64 = row.iter().sum();
        if !(m > 0.0) {
            return Err(Error::InvalidDistribution(format!("row {k} has no mass")));
        }
        entries.push(row.iter().map(|x| x / m).collect());
    }
    DetectionMatrix::new(
        p.dim(),
        spec.family().tag(),
        SamplingMode::Analytic,
        spec.preparations().iter().map(|q| q.label.clone()).collect(),
        vec![ContextColumns {
            id: ctx.id().to_string(),
            labels: ctx.labels().to_vec(),
            complete: true,
        }],
        entries,
    )
}

/// Joint matrix of a Singapore-table detection matrix, with every
/// preparation equally likely. Rows are matched to the table by label.
pub fn detection_to_joint(dm: &DetectionMatrix) -> Result<JointProbMatrix> {
    let spec = TomographyMethod::Sic.protocol(dm.dim())?;
    let k = dm
        .context_index(spec.contexts()[0].id())
        .ok_or_else(|| Error::Malformed("no `sic` context in the detection matrix".into()))?;
    let n = spec.preparations().len() as f64;
    let rows = spec
        .preparations()
        .iter()
        .map(|q| {
            let r = dm
                .row_index(&q.label)
                .ok_or_else(|| Error::Malformed(format!("missing row `{}`", q.label)))?;
            Ok(dm.context_entries(r, k).iter().map(|x| x / n).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    JointProbMatrix::from_unnormalized(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::identity_channel;

    #[test]
    fn method_tags() {
        for m in [TomographyMethod::Mub, TomographyMethod::Sic] {
            assert_eq!(m.tag().parse::<TomographyMethod>().unwrap(), m);
        }
        assert!("gellmann".parse::<TomographyMethod>().is_err());
        assert!(TomographyMethod::Sic.protocol(4).is_err());
    }

    #[test]
    fn joint_detection_round_trip() {
        let p = crate::tomography::appendix_pexp();
        let dm = joint_to_detection(&p).unwrap();
        for r in 0..4 {
            assert!((dm.context_sum(r, 0) - 1.0).abs() < 1e-12);
        }
        let ideal = TomographyMethod::Sic.simulate(&identity_channel(2).unwrap(), SamplingMode::Analytic).unwrap();
        let q = detection_to_joint(&ideal).unwrap();
        for k in 0..4 {
            for l in 0..4 {
                let want = if k == l { 0.0 } else { 1.0 / 12.0 };
                assert!((q.get(k, l) - want).abs() < 1e-12);
            }
        }
        let back = detection_to_joint(&joint_to_detection(&q).unwrap()).unwrap();
        assert!((0..16).all(|i| (back.get(i / 4, i % 4) - q.get(i / 4, i % 4)).abs() < 1e-15));
    }

    #[test]
    fn unknown_rows_are_named() {
        let dm = ProtocolSpec::new(ProtocolFamily::Bb84, 2)
            .unwrap()
            .detection_matrix(&identity_channel(2).unwrap(), SamplingMode::Analytic)
            .unwrap();
        let err = reconstruct(&dm, TomographyMethod::Sic, &MleConfig::default(), false).unwrap_err();
        assert!(err.to_string().contains("row `"), "{err}");
    }
}
