use std::fmt;

use nalgebra::DVector;

use super::optimize::{minimize, MleConfig};
use crate::error::{Error, Result};
use crate::qmath::{c, inner, DensityMatrix, StateVector, C64};
use crate::states::{sic_set, SicSet};

/// Measured d = 2 SIC joint distribution shipped with the crate.
pub const PEXP_CSV: &str = include_str!("../../data/appendix_pexp.csv");

/// Ideal SIC-singlet mutual information (bits) for d = 2, 3, 4. Only d = 2 is
/// computed here; the others are reference values.
pub const SIC_MI_LADDER: [(usize, f64); 3] = [(2, 0.415), (3, 0.170), (4, 0.093)];

/// (1/sqrt d) sum_m (-1)^(d-m) |m>|d-m-1>.
pub fn singlet_state(d: usize) -> Result<DensityMatrix> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    let amp = 1.0 / (d as f64).sqrt();
    let mut v = vec![c(0.0, 0.0); d * d];
    for m in 0..d {
        let sign = if (d - m) % 2 == 0 { 1.0 } else { -1.0 };
        v[m * d + (d - m - 1)] = c(sign * amp, 0.0);
    }
    DensityMatrix::from_pure(&StateVector::new(v)?)
}

/// Joint outcome distribution p_kl over d^2 x d^2 SIC outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct JointProbMatrix {
    dim: usize,
    p: Vec<Vec<f64>>,
}

impl JointProbMatrix {
    /// Entries must be nonnegative and sum to 1 within 1e-9.
    pub fn new(p: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self::shape_checked(p)?;
        let total = m.total();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        Ok(m)
    }

    /// Divides by the total, for measured data whose rows do not quite sum to 1.
    pub fn from_unnormalized(p: Vec<Vec<f64>>) -> Result<Self> {
        let mut m = Self::shape_checked(p)?;
        let total = m.total();
        if !(total > 0.0) {
            return Err(Error::InvalidDistribution(format!("entries sum to {total}")));
        }
        for row in &mut m.p {
            for x in row.iter_mut() {
                *x /= total;
            }
        }
        Ok(m)
    }

    fn shape_checked(p: Vec<Vec<f64>>) -> Result<Self> {
        let n = p.len();
        let d = (n as f64).sqrt().round() as usize;
        if n == 0 || d * d != n || d < 2 {
            return Err(Error::Malformed(format!("{n} rows is not d^2 for d >= 2")));
        }
        for (k, row) in p.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Malformed(format!("row {k} has {} entries, expected {n}", row.len())));
            }
            if let Some(x) = row.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
                return Err(Error::InvalidDistribution(format!("entry {x} in row {k}")));
            }
        }
        Ok(Self { dim: d, p })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of outcomes per party, d^2.
    pub fn size(&self) -> usize {
        self.p.len()
    }

    pub fn get(&self, k: usize, l: usize) -> f64 {
        self.p[k][l]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.p
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    pub fn row_marginals(&self) -> Vec<f64> {
        self.p.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        (0..self.size()).map(|l| self.p.iter().map(|r| r[l]).sum()).collect()
    }

    /// Comma-separated rows; lines starting with `#` are comments.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let t = line.trim_end();
            if t.starts_with('#') || t.is_empty() {
                continue;
            }
            let mut col = 1;
            let mut row = Vec::new();
            for cell in t.split(',') {
                row.push(cell.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: i + 1,
                    column: col,
                    message: format!("invalid probability `{cell}`"),
                })?);
                col += cell.len() + 1;
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::EmptyInput("joint probability rows"));
        }
        Self::from_unnormalized(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in &self.p {
            let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for JointProbMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.p {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.6}")).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// The shipped measured matrix, globally renormalized.
pub fn appendix_pexp() -> JointProbMatrix {
    JointProbMatrix::parse_csv(PEXP_CSV).expect("bundled data parses")
}

/// p_kl = Tr[rho_AB (E_k x E_l)] with E_k = (1/d)|psi_k><psi_k|.
pub fn sic_joint_probs(rho_ab: &DensityMatrix, sic: &SicSet) -> Result<JointProbMatrix> {
    let d = sic.dim();
    if rho_ab.dim() != d * d {
        return Err(Error::DimensionMismatch {
            expected: d * d,
            actual: rho_ab.dim(),
        });
    }
    let w = 1.0 / (d * d) as f64;
    let p = sic
        .states()
        .iter()
        .map(|a| {
            sic.states()
                .iter()
                .map(|b| Ok(w * rho_ab.overlap(&a.kron(b))?))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    JointProbMatrix::new(p)
}

/// The symmetric d = 2 matrix ((4 - eps)/48)(1 - delta_kl) + (eps/16) delta_kl.
pub fn twirled_matrix(epsilon: f64) -> Result<JointProbMatrix> {
    if !(0.0..=4.0).contains(&epsilon) {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} outside [0, 4]")));
    }
    let off = (4.0 - epsilon) / 48.0;
    let diag = epsilon / 16.0;
    JointProbMatrix::new(
        (0..4)
            .map(|k| (0..4).map(|l| if k == l { diag } else { off }).collect())
            .collect(),
    )
}

/// Symmetrizes a d = 2 matrix with eps = 16 * mean(diagonal).
pub fn twirl(p: &JointProbMatrix) -> Result<(JointProbMatrix, f64)> {
    if p.dim() != 2 {
        return Err(Error::Malformed(format!("twirl needs a 4x4 matrix, got {0}x{0}", p.size())));
    }
    let mean_diag = (0..4).map(|k| p.get(k, k)).sum::<f64>() / 4.0;
    let eps = 16.0 * mean_diag;
    Ok((twirled_matrix(eps)?, eps))
}

/// I = sum p_kl log2(p_kl / (p_k p_l)), skipping zero entries.
pub fn mutual_information(p: &JointProbMatrix) -> f64 {
    let rows = p.row_marginals();
    let cols = p.col_marginals();
    let mut mi = 0.0;
    for (k, row) in p.rows().iter().enumerate() {
        for (l, &x) in row.iter().enumerate() {
            if x > 0.0 {
                mi += x * (x / (rows[k] * cols[l])).log2();
            }
        }
    }
    mi.max(0.0)
}

pub fn twirled_mi(epsilon: f64) -> Result<f64> {
    Ok(mutual_information(&twirled_matrix(epsilon)?))
}

/// Result of fitting Alice's and Bob's qubit SIC states to a joint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SicFit {
    pub alice: Vec<StateVector>,
    pub bob: Vec<StateVector>,
    pub residual: f64,
    /// Residual of the ideal SIC states against the same data.
    pub initial_residual: f64,
}

impl SicFit {
    /// |<A_m|B_n>|^2 for the fitted states.
    pub fn overlaps(&self) -> Vec<Vec<f64>> {
        overlap_matrix(&self.alice, &self.bob)
    }
}

fn overlap_matrix(a: &[StateVector], b: &[StateVector]) -> Vec<Vec<f64>> {
    a.iter()
        .map(|x| b.iter().map(|y| inner(x, y).expect("qubits").norm_sqr()).collect())
        .collect()
}

fn bloch_state(theta: f64, phi: f64) -> StateVector {
    StateVector::from_dvector(DVector::from_vec(vec![
        c((theta / 2.0).cos(), 0.0),
        C64::from_polar((theta / 2.0).sin(), phi),
    ]))
}

fn bloch_angles(s: &StateVector) -> (f64, f64) {
    let a = s.amplitudes();
    let theta = 2.0 * a[0].norm().clamp(0.0, 1.0).acos();
    let phi = a[1].arg() - a[0].arg();
    (theta, phi)
}

fn states_from_params(x: &[f64]) -> (Vec<StateVector>, Vec<StateVector>) {
    let all: Vec<StateVector> = x.chunks(2).map(|p| bloch_state(p[0], p[1])).collect();
    let (a, b) = all.split_at(4);
    (a.to_vec(), b.to_vec())
}

fn residual(targets: &[Vec<f64>], a: &[StateVector], b: &[StateVector]) -> f64 {
    overlap_matrix(a, b)
        .iter()
        .flatten()
        .zip(targets.iter().flatten())
        .map(|(o, t)| (o - t).powi(2))
        .sum()
}

/// Fits four Alice and four Bob qubit states so that |<A_m|B_n>|^2 matches
/// the overlaps implied by the singlet model, 1 - 8 p_mn, by minimizing
/// f = sum_mn (|<A_m|B_n>|^2 - (1 - 8 p_mn))^2 over Bloch angles.
/// The search starts at the ideal SIC set.
pub fn fit_sic_states(p: &JointProbMatrix, cfg: &MleConfig) -> Result<SicFit> {
    if p.dim() != 2 {
        return Err(Error::Malformed("SIC state fit needs a d = 2 (4x4) matrix".into()));
    }
    let targets: Vec<Vec<f64>> = p
        .rows()
        .iter()
        .map(|r| r.iter().map(|x| 1.0 - 8.0 * x).collect())
        .collect();
    let sic = sic_set(2)?;
    let mut x0 = Vec::with_capacity(16);
    for _party in 0..2 {
        for s in sic.states() {
            let (t, f) = bloch_angles(s);
            x0.push(t);
            x0.push(f);
        }
    }
    let f = |x: &[f64]| {
        let (a, b) = states_from_params(x);
        residual(&targets, &a, &b)
    };
    let initial_residual = f(&x0);
    let best = minimize(&f, &x0, cfg)?;
    if !best.converged {
        return Err(Error::NonConvergence {
            restarts: cfg.restarts,
            best: best.value,
        });
    }
    let params = if best.value <= initial_residual { best.params } else { x0 };
    let (alice, bob) = states_from_params(&params);
    Ok(SicFit {
        residual: residual(&targets, &alice, &bob),
        alice: alice.iter().map(|s| s.with_canonical_phase()).collect(),
        bob: bob.iter().map(|s| s.with_canonical_phase()).collect(),
        initial_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::sic_set;

    #[test]
    fn singlet_examples() {
        let rho = singlet_state(2).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-15);
        // (|01> - |10>)/sqrt 2
        let m = rho.matrix();
        assert!((m[(1, 1)].re - 0.5).abs() < 1e-15);
        assert!((m[(2, 2)].re - 0.5).abs() < 1e-15);
        assert!((m[(1, 2)].re + 0.5).abs() < 1e-15);
        for d in [2, 3, 4] {
            let rho = singlet_state(d).unwrap();
            let mixed = DensityMatrix::maximally_mixed(d);
            let a = rho.partial_trace_second(d, d).unwrap();
            let b = rho.partial_trace_first(d, d).unwrap();
            assert!(a.as_operator().max_abs_diff(&mixed.as_operator()) < 1e-15);
            assert!(b.as_operator().max_abs_diff(&mixed.as_operator()) < 1e-15);
        }
    }

    #[test]
    fn ideal_singlet_joint_probabilities() {
        let p = sic_joint_probs(&singlet_state(2).unwrap(), &sic_set(2).unwrap()).unwrap();
        for k in 0..4 {
            for l in 0..4 {
                let expected = if k == l { 0.0 } else { 1.0 / 12.0 };
                assert!((p.get(k, l) - expected).abs() < 1e-10);
            }
        }
        let mixed = sic_joint_probs(&DensityMatrix::maximally_mixed(4), &sic_set(2).unwrap()).unwrap();
        assert!(mixed.rows().iter().flatten().all(|x| (x - 1.0 / 16.0).abs() < 1e-12));
        assert!((mutual_information(&p) - 0.415).abs() < 1e-3);
    }

    #[test]
    fn twirl_examples() {
        let ideal = sic_joint_probs(&singlet_state(2).unwrap(), &sic_set(2).unwrap()).unwrap();
        let (t, eps) = twirl(&ideal).unwrap();
        assert!(eps.abs() < 1e-12);
        for k in 0..4 {
            for l in 0..4 {
                assert!((t.get(k, l) - ideal.get(k, l)).abs() < 1e-12);
            }
        }
        let m = twirled_matrix(0.0137).unwrap();
        assert!((m.get(0, 0) - 8.5625e-4).abs() < 1e-12);
        assert!((m.get(0, 1) - (4.0 - 0.0137) / 48.0).abs() < 1e-15);
        assert!((m.total() - 1.0).abs() < 1e-12);
        assert!((twirled_mi(0.0137).unwrap() - 0.388).abs() < 1e-3);
        assert!(twirled_mi(1.0).unwrap().abs() < 1e-12);
        assert!(twirled_mi(4.5).is_err());
    }

    #[test]
    fn pexp_matrix_parses() {
        let p = appendix_pexp();
        assert_eq!(p.size(), 4);
        assert!((p.total() - 1.0).abs() < 1e-12);
        let (_, eps) = twirl(&p).unwrap();
        assert!((eps - 0.0137).abs() < 1e-4);
    }

    #[test]
    fn csv_errors() {
        assert!(matches!(JointProbMatrix::parse_csv("0.5,x\n"), Err(Error::Parse { line: 1, column: 5, .. })));
        assert!(JointProbMatrix::parse_csv("# only comments\n").is_err());
        assert!(JointProbMatrix::parse_csv("0.5,0.5\n0.5,0.5\n").is_err());
        assert!(JointProbMatrix::new(vec![vec![0.1; 4]; 4]).is_err());
    }

    #[test]
    fn fit_on_ideal_data_is_a_fixed_point() {
        let sic = sic_set(2).unwrap();
        let p = sic_joint_probs(&singlet_state(2).unwrap(), &sic).unwrap();
        let fit = fit_sic_states(&p, &MleConfig::default()).unwrap();
        assert!(fit.residual < 1e-10);
        // Alice's fitted states form a SIC: pairwise overlaps 1/3
        let gram = overlap_matrix(&fit.alice, &fit.alice);
        for m in 0..4 {
            for n in 0..4 {
                let expected = if m == n { 1.0 } else { 1.0 / 3.0 };
                assert!((gram[m][n] - expected).abs() < 1e-5);
            }
        }
    }
}
