use nalgebra::{DMatrix, DVector};

use super::optimize::{minimize, MleConfig};
use crate::channel::{DetectionMatrix, MeasurementContext};
use crate::error::{Error, Result};
use crate::qmath::{c, hermitian_basis, hermitian_eigen, hermitian_function, HermitianBasis, Operator, StateVector, C64};

/// Floor on predicted probabilities in the likelihood denominator.
const PRED_FLOOR: f64 = 1e-12;
/// Weight of the trace-preserving penalty.
const TP_WEIGHT: f64 = 10.0;

/// Process matrix chi in the Gell-Mann basis of dimension `dim`, so that
/// E(rho) is proportional to sum_ij chi_ij B_i rho B_j. Stored at unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    dim: usize,
    labels: Vec<String>,
    chi: DMatrix<C64>,
}

impl ProcessMatrix {
    /// Validates shape, Hermiticity (1e-10), positivity (-1e-9) and unit trace.
    pub fn new(dim: usize, chi: DMatrix<C64>) -> Result<Self> {
        let basis = hermitian_basis(dim)?;
        let n = basis.len();
        if chi.nrows() != n || chi.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: chi.nrows().max(chi.ncols()),
            });
        }
        let op = Operator::from_matrix(chi.clone())?;
        let dev = op.hermitian_deviation();
        if dev > 1e-10 {
            return Err(Error::NotHermitian(dev));
        }
        let tr = chi.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidDensity(format!("process matrix trace {tr}")));
        }
        let pm = Self {
            dim,
            labels: basis.labels().to_vec(),
            chi,
        };
        let min = pm.min_eigenvalue();
        if min < -1e-9 {
            return Err(Error::InvalidDensity(format!("process matrix eigenvalue {min:e}")));
        }
        Ok(pm)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn chi(&self) -> &DMatrix<C64> {
        &self.chi
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigen(&Operator::from_matrix(self.chi.clone()).expect("square"))
            .map(|(v, _)| v[0])
            .unwrap_or(f64::NAN)
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigen(&Operator::from_matrix(self.chi.clone()).expect("square"))
            .map(|(v, _)| v)
            .unwrap_or_default()
    }

    /// `# chi dim=<d>`, a header `basis,<l>.re,<l>.im,...`, then one row per
    /// basis element.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# chi dim={}\nbasis", self.dim);
        for l in &self.labels {
            out.push_str(&format!(",{l}.re,{l}.im"));
        }
        out.push('\n');
        for (i, l) in self.labels.iter().enumerate() {
            out.push_str(l);
            for j in 0..self.labels.len() {
                let z = self.chi[(i, j)];
                out.push_str(&format!(",{},{}", z.re, z.im));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let perr = |line: usize, column: usize, message: String| Error::Parse { line, column, message };
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| perr(1, 1, "missing `# chi dim=` header".into()))?;
        let dim: usize = head
            .strip_prefix("# chi dim=")
            .ok_or_else(|| perr(1, 1, "missing `# chi dim=` header".into()))?
            .parse()
            .map_err(|_| perr(1, 11, format!("invalid dim in `{head}`")))?;
        let basis = hermitian_basis(dim)?;
        let n = basis.len();
        let mut expected = String::from("basis");
        for l in basis.labels() {
            expected.push_str(&format!(",{l}.re,{l}.im"));
        }
        match lines.next() {
            Some(h) if h == expected => {}
            _ => return Err(perr(2, 1, format!("expected header `{expected}`"))),
        }
        let mut chi = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            let line_no = i + 3;
            let line = lines
                .next()
                .ok_or_else(|| perr(line_no, 1, format!("missing row `{}`", basis.labels()[i])))?;
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != 2 * n + 1 || cells[0] != basis.labels()[i] {
                return Err(perr(line_no, 1, format!("row must be `{}` and {} numbers", basis.labels()[i], 2 * n)));
            }
            let mut col = cells[0].len() + 2;
            let mut vals = Vec::with_capacity(2 * n);
            for cell in &cells[1..] {
                vals.push(
                    cell.parse::<f64>()
                        .map_err(|_| perr(line_no, col, format!("invalid number `{cell}`")))?,
                );
                col += cell.len() + 1;
            }
            for j in 0..n {
                chi[(i, j)] = c(vals[2 * j], vals[2 * j + 1]);
            }
        }
        if let Some((k, _)) = lines.enumerate().find(|(_, l)| !l.is_empty()) {
            return Err(perr(n + 3 + k, 1, "trailing content".into()));
        }
        Self::new(dim, chi)
    }
}

/// Tr[chi_a chi_b], the process fidelity against an ideal (pure) process.
pub fn process_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            actual: b.dim,
        });
    }
    Ok((a.chi() * b.chi()).trace().re)
}

/// (Tr sqrt(sqrt(a) b sqrt(a)))^2, which equals `process_fidelity` whenever
/// one argument is pure and stays meaningful when both are mixed.
pub fn uhlmann_fidelity(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch {
            expected: a.dim,
            actual: b.dim,
        });
    }
    let sa = hermitian_function(&Operator::from_matrix(a.chi.clone())?, |x| x.max(0.0).sqrt())?;
    let inner = &(&sa * &Operator::from_matrix(b.chi.clone())?) * &sa;
    let inner = Operator::from_matrix((inner.matrix() + inner.matrix().adjoint()) / c(2.0, 0.0))?;
    let root = hermitian_function(&inner, |x| x.max(0.0).sqrt())?;
    Ok(root.trace().re.powi(2).min(1.0))
}

/// Linear model p_ab = sum_ij chi_ij Tr[E_b B_i rho_a B_j] over every
/// (prepared state, outcome) pair, with chi flattened row-major.
struct ProcessModel {
    n: usize,
    coeffs: DMatrix<C64>,
    freqs: Vec<f64>,
    tp_terms: Vec<Operator>,
    dim: usize,
}

impl ProcessModel {
    fn build(
        dm: &DetectionMatrix,
        prepared: &[StateVector],
        contexts: &[MeasurementContext],
        basis: &HermitianBasis,
    ) -> Result<Self> {
        let d = basis.dim();
        if dm.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, actual: dm.dim() });
        }
        if prepared.len() != dm.n_rows() {
            return Err(Error::Malformed(format!(
                "{} prepared states for {} matrix rows",
                prepared.len(),
                dm.n_rows()
            )));
        }
        if contexts.len() != dm.contexts().len() {
            return Err(Error::Malformed(format!(
                "{} measurement contexts for {} matrix contexts",
                contexts.len(),
                dm.contexts().len()
            )));
        }
        for (k, (ctx, cols)) in contexts.iter().zip(dm.contexts()).enumerate() {
            if ctx.len() != cols.labels.len() {
                return Err(Error::Malformed(format!(
                    "context {k} has {} effects but {} columns",
                    ctx.len(),
                    cols.labels.len()
                )));
            }
            if ctx.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: ctx.dim() });
            }
        }
        let n = basis.len();
        let effects: Vec<Operator> = contexts
            .iter()
            .flat_map(|ctx| (0..ctx.len()).map(move |k| ctx.effect(k)))
            .collect();
        let mut coeffs = DMatrix::<C64>::zeros(prepared.len() * effects.len(), n * n);
        let mut freqs = Vec::with_capacity(coeffs.nrows());
        for (a, psi) in prepared.iter().enumerate() {
            if psi.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: psi.dim() });
            }
            let rho = psi.projector();
            let right: Vec<Operator> = basis.elements().iter().map(|bj| &rho * bj).collect();
            for (b, e) in effects.iter().enumerate() {
                let row = a * effects.len() + b;
                for i in 0..n {
                    let ebi = e * basis.element(i);
                    for j in 0..n {
                        // Tr[E B_i rho B_j]
                        coeffs[(row, i * n + j)] = (ebi.matrix() * right[j].matrix()).trace();
                    }
                }
                freqs.push(dm.entry(a, b));
            }
        }
        let tp_terms = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| basis.element(j) * basis.element(i))
            .collect();
        Ok(Self { n, coeffs, freqs, tp_terms, dim: d })
    }

    fn check_complete(&self) -> Result<()> {
        let sv = self.coeffs.clone().singular_values();
        let max = sv.max();
        let rank = sv.iter().filter(|&&s| s > 1e-9 * max.max(1.0)).count();
        let need = self.n * self.n;
        if rank < need {
            return Err(Error::NotInformationallyComplete(format!(
                "prepared states and measurements determine {rank} of {need} process parameters"
            )));
        }
        Ok(())
    }

    fn predictions(&self, chi: &DMatrix<C64>) -> Vec<f64> {
        let flat = DVector::from_iterator(self.n * self.n, (0..self.n).flat_map(|i| (0..self.n).map(move |j| chi[(i, j)])));
        (&self.coeffs * flat).iter().map(|z| z.re).collect()
    }

    fn objective(&self, chi: &DMatrix<C64>, trace_preserving: bool) -> f64 {
        let mut f: f64 = self
            .predictions(chi)
            .iter()
            .zip(&self.freqs)
            .map(|(p, q)| (q - p).powi(2) / (2.0 * p.max(PRED_FLOOR)))
            .sum();
        if trace_preserving {
            let mut sum = DMatrix::<C64>::zeros(self.dim, self.dim);
            for (k, term) in self.tp_terms.iter().enumerate() {
                sum += term.matrix() * chi[(k / self.n, k % self.n)];
            }
            sum -= DMatrix::<C64>::identity(self.dim, self.dim);
            f += TP_WEIGHT * sum.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        f
    }

    /// Least-squares solution of the linear model, Hermitized and clipped to
    /// the positive cone.
    fn linear_inversion(&self) -> Result<DMatrix<C64>> {
        let rhs = DVector::from_iterator(self.freqs.len(), self.freqs.iter().map(|&f| c(f, 0.0)));
        let x = self
            .coeffs
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-12)
            .map_err(|e| Error::Malformed(format!("linear inversion failed: {e}")))?;
        let n = self.n;
        let m = DMatrix::from_fn(n, n, |i, j| x[i * n + j]);
        let h = (&m + m.adjoint()) / c(2.0, 0.0);
        Ok(hermitian_function(&Operator::from_matrix(h)?, |v| v.max(0.0))?.into_matrix())
    }
}

/// chi = T^dagger T with T upper triangular with real diagonal; parameters
/// are the diagonal then (re, im) of the strict upper triangle row by row.
fn chi_from_params(n: usize, t: &[f64]) -> DMatrix<C64> {
    let mut tm = DMatrix::<C64>::zeros(n, n);
    let mut k = n;
    for i in 0..n {
        tm[(i, i)] = c(t[i], 0.0);
        for j in (i + 1)..n {
            tm[(i, j)] = c(t[k], t[k + 1]);
            k += 2;
        }
    }
    tm.adjoint() * tm
}

fn params_from_chi(chi: &DMatrix<C64>) -> Result<Vec<f64>> {
    let n = chi.nrows();
    let reg = chi + DMatrix::<C64>::identity(n, n) * c(1e-10, 0.0);
    let l = nalgebra::Cholesky::new(reg)
        .ok_or_else(|| Error::InvalidDensity("initial process matrix is not positive definite".into()))?
        .l();
    // chi = L L^dagger = T^dagger T with T = L^dagger
    let t = l.adjoint();
    let mut p = Vec::with_capacity(n * n);
    for i in 0..n {
        p.push(t[(i, i)].re);
    }
    for i in 0..n {
        for j in (i + 1)..n {
            p.push(t[(i, j)].re);
            p.push(t[(i, j)].im);
        }
    }
    Ok(p)
}

/// Maximum-likelihood process matrix for the prepare-and-measure data in
/// `dm`. Rows of `dm` correspond to `prepared`, column groups to `contexts`.
/// Starts from linear inversion, then minimizes the weighted squared
/// residual sum_ab (f_ab - p_ab)^2 / (2 p_ab) over chi = T^dagger T.
/// With `trace_preserving`, sum_ij chi_ij B_j B_i = I is added as a penalty.
pub fn fit_process(
    dm: &DetectionMatrix,
    prepared: &[StateVector],
    contexts: &[MeasurementContext],
    basis: &HermitianBasis,
    cfg: &MleConfig,
    trace_preserving: bool,
) -> Result<ProcessMatrix> {
    let model = ProcessModel::build(dm, prepared, contexts, basis)?;
    model.check_complete()?;
    let n = model.n;
    let start = params_from_chi(&model.linear_inversion()?)?;
    let f = |t: &[f64]| model.objective(&chi_from_params(n, t), trace_preserving);
    let start_value = f(&start);
    let best = minimize(&f, &start, cfg)?;
    if !best.converged {
        return Err(Error::NonConvergence {
            restarts: cfg.restarts,
            best: best.value,
        });
    }
    let params = if best.value <= start_value { best.params } else { start };
    let chi = chi_from_params(n, &params);
    let tr = chi.trace().re;
    if !(tr > 0.0) {
        return Err(Error::InvalidDensity("fitted process matrix vanishes".into()));
    }
    let chi = chi / c(tr, 0.0);
    let chi = (&chi + chi.adjoint()) / c(2.0, 0.0);
    ProcessMatrix::new(basis.dim(), chi)
}
