//! Quantum channel models in Kraus form and the Born-rule detection engine.

mod csv;
mod detection;

pub use csv::{load_csv, parse_csv, save_csv, to_csv};
pub use detection::{
    detection_matrix, ContextColumns, DetectionMatrix, MeasurementContext, SamplingMode,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::gf2n::{op_xz, FieldSpec};
use crate::qmath::{c, hermitian_basis, unitary_exp, DensityMatrix, HermitianBasis, Operator, C64};
use crate::states::displacement;
use crate::tomography::ProcessMatrix;

/// A completely positive trace-preserving map rho -> sum_m K_m rho K_m^dagger.
#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    dim: usize,
    label: String,
    kraus: Vec<Operator>,
}

impl Channel {
    /// Checks completeness sum K^dagger K = I to 1e-10.
    pub fn new(label: impl Into<String>, kraus: Vec<Operator>) -> Result<Self> {
        let dim = kraus.first().map(|k| k.dim()).ok_or(Error::EmptyInput("Kraus operators"))?;
        let mut sum = Operator::zeros(dim);
        for k in &kraus {
            if k.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: k.dim(),
                });
            }
            sum = sum.add(&(&k.adjoint() * k))?;
        }
        let dev = sum.max_abs_diff(&Operator::identity(dim));
        if dev > 1e-10 {
            return Err(Error::InvalidParameter(format!(
                "Kraus operators are not trace preserving (deviation {dev:e})"
            )));
        }
        Ok(Self {
            dim,
            label: label.into(),
            kraus,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kraus_ops(&self) -> &[Operator] {
        &self.kraus
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        apply(self, rho)
    }
}

pub fn identity_channel(d: usize) -> Result<Channel> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    Channel::new("identity", vec![Operator::identity(d)])
}

/// rho -> (1 - p) rho + p I/d, written with the d^2 Weyl displacements so
/// that for d = 2 it is the Pauli channel {1 - 3p/4, p/4, p/4, p/4}.
pub fn depolarizing_channel(d: usize, p: f64) -> Result<Channel> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("depolarizing strength {p} outside [0, 1]")));
    }
    let d2 = (d * d) as f64;
    let mut kraus = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            let weight = if j == 0 && k == 0 { 1.0 - p + p / d2 } else { p / d2 };
            if weight == 0.0 {
                continue;
            }
            kraus.push(displacement(d, j, k)?.scale(c(weight.sqrt(), 0.0)));
        }
    }
    Channel::new(format!("depolarizing:{p}"), kraus)
}

/// Kraus operators sqrt(p_uv) X_u Z_v over GF(d); `probs[u * d + v]` = p_uv.
pub fn pauli_channel(spec: FieldSpec, probs: &[f64]) -> Result<Channel> {
    let d = spec.order();
    if probs.len() != d * d {
        return Err(Error::InvalidDistribution(format!(
            "expected {} probabilities, got {}",
            d * d,
            probs.len()
        )));
    }
    if let Some(bad) = probs.iter().find(|p| !(**p >= 0.0)) {
        return Err(Error::InvalidDistribution(format!("negative probability {bad}")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidDistribution(format!("probabilities sum to {total}")));
    }
    let mut kraus = Vec::new();
    for u in spec.elements() {
        for v in spec.elements() {
            let p = probs[u.value() * d + v.value()];
            if p > 0.0 {
                kraus.push(op_xz(&u, &v)?.scale(c(p.sqrt(), 0.0)));
            }
        }
    }
    Channel::new("pauli", kraus)
}

/// Nearest-neighbour coupling generator: ones on the first off-diagonals.
pub fn rotation_generator(d: usize) -> Operator {
    Operator::from_fn(d, |i, j| {
        if i.abs_diff(j) == 1 {
            c(1.0, 0.0)
        } else {
            c(0.0, 0.0)
        }
    })
}

/// Unitary misalignment exp(-i theta G) with G the tridiagonal coupling matrix.
pub fn rotation_channel(d: usize, theta: f64) -> Result<Channel> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if !theta.is_finite() {
        return Err(Error::InvalidParameter(format!("rotation angle {theta}")));
    }
    let u = unitary_exp(&rotation_generator(d), theta)?;
    Channel::new(format!("rotation:{theta}"), vec![u])
}

/// sum_m K_m rho K_m^dagger
pub fn apply(ch: &Channel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if ch.dim != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: ch.dim,
            actual: rho.dim(),
        });
    }
    let mut out = nalgebra::DMatrix::<C64>::zeros(ch.dim, ch.dim);
    for k in &ch.kraus {
        out += k.matrix() * rho.matrix() * k.matrix().adjoint();
    }
    // remove rounding asymmetry
    let out = (&out + out.adjoint()) / c(2.0, 0.0);
    Ok(DensityMatrix::from_matrix_unchecked(out))
}

/// Exact process matrix: expand each Kraus operator K_m = sum_i a_mi B_i and
/// set chi_ij = sum_m a_mi conj(a_mj), then scale to unit trace.
pub fn chi_of_channel(ch: &Channel, basis: &HermitianBasis) -> Result<ProcessMatrix> {
    if ch.dim != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            actual: ch.dim,
        });
    }
    let n = basis.len();
    let mut chi = nalgebra::DMatrix::<C64>::zeros(n, n);
    for k in &ch.kraus {
        let a = basis.expand(k)?;
        for i in 0..n {
            for j in 0..n {
                chi[(i, j)] += a[i] * a[j].conj();
            }
        }
    }
    let tr = chi.trace().re;
    chi /= c(tr, 0.0);
    ProcessMatrix::new(ch.dim, chi)
}

/// Synthetic channel description, `name:param:param...` on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    None,
    Depolarizing(f64),
    Rotation(f64),
    /// p_uv over GF(d) in u-major order.
    Pauli(Vec<f64>),
}

impl NoiseModel {
    pub fn build(&self, d: usize) -> Result<Channel> {
        match self {
            NoiseModel::None => identity_channel(d),
            NoiseModel::Depolarizing(p) => depolarizing_channel(d, *p),
            NoiseModel::Rotation(theta) => rotation_channel(d, *theta),
            NoiseModel::Pauli(probs) => pauli_channel(FieldSpec::for_dim(d)?, probs),
        }
    }
}

impl fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NoiseModel::None => write!(f, "none"),
            NoiseModel::Depolarizing(p) => write!(f, "depolarizing:{p}"),
            NoiseModel::Rotation(t) => write!(f, "rotation:{t}"),
            NoiseModel::Pauli(ps) => {
                write!(f, "pauli")?;
                for p in ps {
                    write!(f, ":{p}")?;
                }
                Ok(())
            }
        }
    }
}

impl FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let params = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::InvalidParameter(format!("noise parameter `{p}` in `{s}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        let one = |params: &[f64]| -> Result<f64> {
            match params {
                [x] => Ok(*x),
                _ => Err(Error::InvalidParameter(format!("`{name}` takes exactly one parameter"))),
            }
        };
        match name {
            "none" | "identity" if params.is_empty() => Ok(NoiseModel::None),
            "depolarizing" => Ok(NoiseModel::Depolarizing(one(&params)?)),
            "rotation" => Ok(NoiseModel::Rotation(one(&params)?)),
            "pauli" if !params.is_empty() => Ok(NoiseModel::Pauli(params)),
            _ => Err(Error::InvalidParameter(format!("unknown noise model `{s}`"))),
        }
    }
}

/// Gell-Mann process basis of the right size for `ch`.
pub fn process_basis_for(ch: &Channel) -> Result<HermitianBasis> {
    hermitian_basis(ch.dim)
}
