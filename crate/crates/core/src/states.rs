//! State families: computational and Fourier bases, complete sets of mutually
//! unbiased bases for d = 2, 4, 8, the qubit SIC-POVM generated by
//! Weyl-Heisenberg displacements, the two-level Chau15 states, and the OAM
//! labels attached to basis indices.
//!
//! Every constructed vector uses the same global-phase convention: the first
//! nonzero amplitude is real and nonnegative.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::gf2n::{field_trace, FieldElem, FieldSpec};
use crate::qmath::{c, inner, Operator, StateVector, C64};

pub const SUPPORTED_DIMS: [usize; 3] = [2, 4, 8];

fn check_supported(d: usize) -> Result<()> {
    if SUPPORTED_DIMS.contains(&d) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(d))
    }
}

/// An orthonormal basis of d vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    dim: usize,
    label: String,
    vectors: Vec<StateVector>,
}

impl Basis {
    pub fn new(label: impl Into<String>, vectors: Vec<StateVector>) -> Result<Self> {
        let dim = vectors.first().map(|v| v.dim()).ok_or(Error::EmptyInput("basis vectors"))?;
        if vectors.len() != dim {
            return Err(Error::Malformed(format!(
                "basis needs {dim} vectors, got {}",
                vectors.len()
            )));
        }
        let basis = Self {
            dim,
            label: label.into(),
            vectors: vectors.iter().map(|v| v.with_canonical_phase()).collect(),
        };
        let dev = basis.orthonormality_deviation()?;
        if dev > 1e-10 {
            return Err(Error::Malformed(format!(
                "basis `{}` is not orthonormal (deviation {dev:e})",
                basis.label
            )));
        }
        Ok(basis)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn vectors(&self) -> &[StateVector] {
        &self.vectors
    }

    pub fn vector(&self, i: usize) -> &StateVector {
        &self.vectors[i]
    }

    /// Max |<v_i|v_j> - delta_ij|.
    pub fn orthonormality_deviation(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for (i, a) in self.vectors.iter().enumerate() {
            for (j, b) in self.vectors.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(a, b)? - target).norm());
            }
        }
        Ok(worst)
    }
}

/// A collection of mutually unbiased bases.
#[derive(Debug, Clone, PartialEq)]
pub struct MubSet {
    dim: usize,
    bases: Vec<Basis>,
}

impl MubSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bases(&self) -> &[Basis] {
        &self.bases
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Max over cross-basis pairs of | |<e|f>|^2 - 1/d |.
    pub fn unbiasedness_deviation(&self) -> Result<f64> {
        let target = 1.0 / self.dim as f64;
        let mut worst = 0.0f64;
        for (a, ba) in self.bases.iter().enumerate() {
            for bb in &self.bases[a + 1..] {
                for e in ba.vectors() {
                    for f in bb.vectors() {
                        worst = worst.max((inner(e, f)?.norm_sqr() - target).abs());
                    }
                }
            }
        }
        Ok(worst)
    }
}

pub fn computational_basis(d: usize) -> Result<Basis> {
    check_supported(d)?;
    let vectors = (0..d).map(|i| StateVector::basis(d, i)).collect::<Result<_>>()?;
    Basis::new("z", vectors)
}

/// Cyclic discrete Fourier basis |phi_i> = d^(-1/2) sum_j w^(ij) |j>, w = exp(2 pi i / d).
pub fn fourier_basis(d: usize) -> Result<Basis> {
    check_supported(d)?;
    let norm = 1.0 / (d as f64).sqrt();
    let vectors = (0..d)
        .map(|i| {
            let amps = (0..d)
                .map(|j| C64::from_polar(norm, 2.0 * PI * ((i * j) % d) as f64 / d as f64))
                .collect();
            StateVector::new(amps)
        })
        .collect::<Result<_>>()?;
    Basis::new("f", vectors)
}

/// Z4-valued quadratic form whose polarization is 2 Tr(a x y); built on the
/// monomial basis e_k = x^k of GF(2^n).
fn quadratic_form(a: &FieldElem, x: &FieldElem) -> u32 {
    let spec = a.spec();
    let n = spec.degree() as usize;
    let e = |k: usize| spec.elem(1 << k).expect("monomial");
    let bits: Vec<bool> = (0..n).map(|k| x.value() >> k & 1 == 1).collect();
    let mut q = 0u32;
    for k in 0..n {
        if !bits[k] {
            continue;
        }
        q += field_trace(&a.mul(&e(k).square()).expect("same field")) as u32;
        for l in (k + 1)..n {
            if bits[l] {
                let ekl = e(k).mul(&e(l)).expect("same field");
                q += 2 * field_trace(&a.mul(&ekl).expect("same field")) as u32;
            }
        }
    }
    q % 4
}

/// Joint eigenbasis of the commuting class {X_u Z_(a u)}: vector b has
/// amplitudes i^q_a(x) (-1)^Tr(b x) / sqrt(d). Slope a = 0 is the Fourier
/// transform over the additive group of the field.
fn galois_basis(spec: FieldSpec, a: &FieldElem) -> Result<Basis> {
    let d = spec.order();
    let norm = 1.0 / (d as f64).sqrt();
    let i_pow = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
    let vectors = spec
        .elements()
        .map(|b| {
            let amps = spec
                .elements()
                .map(|x| {
                    let sign = if field_trace(&b.mul(&x).expect("same field")) == 0 { 1.0 } else { -1.0 };
                    i_pow[quadratic_form(a, &x) as usize] * (sign * norm)
                })
                .collect();
            StateVector::new(amps)
        })
        .collect::<Result<_>>()?;
    let label = if a.value() == 0 { "w".to_string() } else { format!("g{}", a.value()) };
    Basis::new(label, vectors)
}

/// `m` mutually unbiased bases in dimension `d`: m = 2 gives the computational
/// and cyclic Fourier pair; m = d + 1 gives a complete set. For d = 2 the
/// complete set is {Z, X, Y} eigenbases. For d = 4, 8 the complete set is the
/// Galois-field construction, whose second basis is the Fourier transform over
/// the additive group of GF(d) (the cyclic pair does not extend to a complete
/// set in these dimensions).
pub fn mub_set(d: usize, m: usize) -> Result<MubSet> {
    check_supported(d)?;
    let bases = if m == 2 {
        vec![computational_basis(d)?, fourier_basis(d)?]
    } else if m == d + 1 && d == 2 {
        let h = 1.0 / 2f64.sqrt();
        let y = Basis::new(
            "y",
            vec![
                StateVector::new(vec![c(h, 0.0), c(0.0, h)])?,
                StateVector::new(vec![c(h, 0.0), c(0.0, -h)])?,
            ],
        )?;
        vec![computational_basis(2)?, fourier_basis(2)?, y]
    } else if m == d + 1 {
        let spec = FieldSpec::for_dim(d)?;
        let mut bases = vec![computational_basis(d)?];
        for a in spec.elements() {
            bases.push(galois_basis(spec, &a)?);
        }
        bases
    } else {
        return Err(Error::Unsupported(format!("{m} mutually unbiased bases in dimension {d}")));
    };
    Ok(MubSet { dim: d, bases })
}

/// Weyl-Heisenberg displacement D_jk = w^(jk/2) sum_m w^(jm) |k + m> <m|.
pub fn displacement(d: usize, j: usize, k: usize) -> Result<Operator> {
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    if j >= d || k >= d {
        return Err(Error::IndexOutOfRange(format!("displacement ({j},{k}) in dimension {d}")));
    }
    let omega_exp = |num: f64| C64::from_polar(1.0, 2.0 * PI * num / d as f64);
    let prefactor = omega_exp((j * k) as f64 / 2.0);
    Ok(Operator::from_fn(d, |row, col| {
        if row == (k + col) % d {
            prefactor * omega_exp(((j * col) % d) as f64)
        } else {
            c(0.0, 0.0)
        }
    }))
}

/// Exact qubit SIC fiducial: |a0|^2 = (3 + sqrt 3)/6, relative phase e^(-i pi/4).
pub fn sic_fiducial(d: usize) -> Result<StateVector> {
    if d != 2 {
        return Err(Error::Unsupported(format!("SIC fiducial in dimension {d}")));
    }
    let s3 = 3f64.sqrt();
    let a0 = ((3.0 + s3) / 6.0).sqrt();
    let a1 = ((3.0 - s3) / 6.0).sqrt();
    StateVector::new(vec![c(a0, 0.0), C64::from_polar(a1, -PI / 4.0)])
}

/// The d^2 states D_jk |f>, stored at index j * d + k.
#[derive(Debug, Clone, PartialEq)]
pub struct SicSet {
    dim: usize,
    states: Vec<StateVector>,
}

impl SicSet {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn state(&self, j: usize, k: usize) -> &StateVector {
        &self.states[j * self.dim + k]
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        (0..self.dim)
            .flat_map(|j| (0..self.dim).map(move |k| format!("s{j}{k}")))
            .collect()
    }

    /// Max deviation of |<psi_a|psi_b>|^2 from 1 (a = b) or 1/(d+1) (a != b).
    pub fn overlap_deviation(&self) -> Result<f64> {
        let off = 1.0 / (self.dim as f64 + 1.0);
        let mut worst = 0.0f64;
        for (a, x) in self.states.iter().enumerate() {
            for (b, y) in self.states.iter().enumerate() {
                let target = if a == b { 1.0 } else { off };
                worst = worst.max((inner(x, y)?.norm_sqr() - target).abs());
            }
        }
        Ok(worst)
    }
}

pub fn sic_set(d: usize) -> Result<SicSet> {
    let fiducial = sic_fiducial(d)?;
    let mut states = Vec::with_capacity(d * d);
    for j in 0..d {
        for k in 0..d {
            states.push(displacement(d, j, k)?.apply(&fiducial)?.with_canonical_phase());
        }
    }
    Ok(SicSet { dim: d, states })
}

/// Relative sign of a Chau15 qubit-like state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn bit(self) -> u32 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_bit(bit: u32) -> Self {
        if bit & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// (|i> + (-1)^s |j>) / sqrt 2 with i != j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChauState {
    pub i: FieldElem,
    pub j: FieldElem,
    pub sign: Sign,
}

impl ChauState {
    pub fn new(i: FieldElem, j: FieldElem, sign: Sign) -> Result<Self> {
        if i.spec() != j.spec() {
            return Err(Error::FieldMismatch(i.spec().order(), j.spec().order()));
        }
        if i == j {
            return Err(Error::InvalidParameter(format!("Chau15 state needs i != j (both {i})")));
        }
        Ok(Self { i, j, sign })
    }

    pub fn vector(&self) -> StateVector {
        let d = self.i.spec().order();
        let h = 1.0 / 2f64.sqrt();
        let s = match self.sign {
            Sign::Plus => h,
            Sign::Minus => -h,
        };
        let mut amps = vec![c(0.0, 0.0); d];
        amps[self.i.value()] = c(h, 0.0);
        amps[self.j.value()] = c(s, 0.0);
        StateVector::new(amps).expect("nonempty")
    }
}

pub fn chau_state(i: FieldElem, j: FieldElem, sign: Sign) -> Result<StateVector> {
    Ok(ChauState::new(i, j, sign)?.vector())
}

/// All unordered pairs {i, j} with i < j in bit-pattern order.
pub fn chau_pairs(spec: FieldSpec) -> Vec<(FieldElem, FieldElem)> {
    let elems: Vec<FieldElem> = spec.elements().collect();
    let mut pairs = Vec::new();
    for (a, i) in elems.iter().enumerate() {
        for j in &elems[a + 1..] {
            pairs.push((*i, *j));
        }
    }
    pairs
}

/// OAM value attached to each computational-basis index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OamMap {
    labels: Vec<i32>,
}

impl OamMap {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> Option<i32> {
        self.labels.get(index).copied()
    }

    pub fn index_of(&self, ell: i32) -> Option<usize> {
        self.labels.iter().position(|&l| l == ell)
    }
}

/// Symmetric OAM labels with l = 0 omitted, ascending: d = 4 gives -2, -1, 1, 2.
pub fn oam_map(d: usize) -> Result<OamMap> {
    check_supported(d)?;
    let half = (d / 2) as i32;
    let labels = (-half..=half).filter(|&l| l != 0).collect();
    Ok(OamMap { labels })
}

/// One state per line: `label,re_0,im_0,re_1,im_1,...` after a header row.
pub fn states_to_csv(labels: &[String], states: &[StateVector]) -> Result<String> {
    if labels.len() != states.len() {
        return Err(Error::Malformed(format!(
            "{} labels for {} states",
            labels.len(),
            states.len()
        )));
    }
    let d = states.first().map(|s| s.dim()).unwrap_or(0);
    let mut out = String::from("label");
    for k in 0..d {
        write!(out, ",re_{k},im_{k}").unwrap();
    }
    out.push('\n');
    for (label, s) in labels.iter().zip(states) {
        if s.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: s.dim(),
            });
        }
        out.push_str(label);
        for a in s.amplitudes() {
            write!(out, ",{},{}", a.re, a.im).unwrap();
        }
        out.push('\n');
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::DensityMatrix;

    #[test]
    fn computational_basis_is_identity() {
        for d in SUPPORTED_DIMS {
            let b = computational_basis(d).unwrap();
            assert_eq!(b.vectors().len(), d);
            assert!(b.orthonormality_deviation().unwrap() < 1e-15);
        }
        let b = computational_basis(2).unwrap();
        assert_eq!(b.vector(0).amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(computational_basis(3).is_err());
    }

    #[test]
    fn fourier_examples() {
        let h = 1.0 / 2f64.sqrt();
        let f2 = fourier_basis(2).unwrap();
        assert!((f2.vector(1).amplitudes()[1] - c(-h, 0.0)).norm() < 1e-15);
        let f4 = fourier_basis(4).unwrap();
        let expected = [c(0.5, 0.0), c(0.0, 0.5), c(-0.5, 0.0), c(0.0, -0.5)];
        for (a, e) in f4.vector(1).amplitudes().iter().zip(expected) {
            assert!((a - e).norm() < 1e-15);
        }
        for d in SUPPORTED_DIMS {
            let set = MubSet {
                dim: d,
                bases: vec![computational_basis(d).unwrap(), fourier_basis(d).unwrap()],
            };
            assert!(set.unbiasedness_deviation().unwrap() < 1e-12);
        }
    }

    #[test]
    fn complete_mub_sets_are_unbiased() {
        for d in SUPPORTED_DIMS {
            let set = mub_set(d, d + 1).unwrap();
            assert_eq!(set.len(), d + 1);
            assert!(set.unbiasedness_deviation().unwrap() < 1e-8, "d={d}");
            for b in set.bases() {
                assert!(b.orthonormality_deviation().unwrap() < 1e-10);
            }
        }
        assert_eq!(mub_set(4, 2).unwrap().bases()[1], fourier_basis(4).unwrap());
        assert!(mub_set(4, 3).is_err());
        assert!(mub_set(6, 2).is_err());
    }

    #[test]
    fn displacement_examples() {
        assert_eq!(displacement(2, 0, 0).unwrap(), Operator::identity(2));
        let x = displacement(2, 0, 1).unwrap();
        assert!((x.get(0, 1) - c(1.0, 0.0)).norm() < 1e-15);
        assert!((x.get(1, 0) - c(1.0, 0.0)).norm() < 1e-15);
        assert!(x.get(0, 0).norm() < 1e-15);
        for d in SUPPORTED_DIMS {
            for j in 0..d {
                for k in 0..d {
                    assert!(displacement(d, j, k).unwrap().unitary_deviation() < 1e-12);
                }
            }
        }
        assert!(displacement(2, 2, 0).is_err());
    }

    #[test]
    fn fiducial_matches_printed_amplitudes() {
        let f = sic_fiducial(2).unwrap();
        assert!((f.norm_sqr() - 1.0).abs() < 1e-12);
        assert!((f.amplitudes()[0].re - 0.888).abs() < 1e-3);
        assert!((f.amplitudes()[1].re - 0.325).abs() < 1e-3);
        assert!((f.amplitudes()[1].im + 0.325).abs() < 1e-3);
        assert!(sic_fiducial(3).is_err());
    }

    #[test]
    fn sic_overlaps_and_completeness() {
        let sic = sic_set(2).unwrap();
        assert_eq!(sic.len(), 4);
        assert!(sic.overlap_deviation().unwrap() < 1e-8);
        let o = inner(sic.state(0, 0), sic.state(1, 0)).unwrap().norm_sqr();
        assert!((o - 1.0 / 3.0).abs() < 1e-8);
        let mut sum = Operator::zeros(2);
        for s in sic.states() {
            sum = sum.add(&s.projector()).unwrap();
        }
        assert!(sum.max_abs_diff(&Operator::identity(2).scale(c(2.0, 0.0))) < 1e-12);
    }

    #[test]
    fn chau_state_examples() {
        let f4 = FieldSpec::gf4();
        let (e0, e1, e2) = (f4.elem(0).unwrap(), f4.elem(1).unwrap(), f4.elem(2).unwrap());
        let plus = chau_state(e0, e1, Sign::Plus).unwrap();
        let h = 1.0 / 2f64.sqrt();
        assert_eq!(plus.amplitudes(), &[c(h, 0.0), c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        let minus = chau_state(e0, e1, Sign::Minus).unwrap();
        assert!(inner(&plus, &minus).unwrap().norm() < 1e-15);
        let other = chau_state(e0, e2, Sign::Plus).unwrap();
        assert!((inner(&plus, &other).unwrap() - c(0.5, 0.0)).norm() < 1e-15);
        assert!(chau_state(e1, e1, Sign::Plus).is_err());
        assert_eq!(chau_pairs(f4).len(), 6);
        assert_eq!(chau_pairs(FieldSpec::gf8()).len(), 28);
    }

    #[test]
    fn oam_examples() {
        assert_eq!(oam_map(4).unwrap().label(0), Some(-2));
        assert_eq!(oam_map(4).unwrap().labels(), &[-2, -1, 1, 2]);
        let m8 = oam_map(8).unwrap();
        assert_eq!(m8.dim(), 8);
        assert!(m8.index_of(0).is_none());
        assert_eq!(m8.labels(), &[-4, -3, -2, -1, 1, 2, 3, 4]);
        assert_eq!(oam_map(2).unwrap().labels(), &[-1, 1]);
        assert!(oam_map(5).is_err());
    }

    #[test]
    fn csv_dump_layout() {
        let b = computational_basis(2).unwrap();
        let csv = states_to_csv(&["a".into(), "b".into()], b.vectors()).unwrap();
        assert_eq!(csv, "label,re_0,im_0,re_1,im_1\na,1,0,0,0\nb,0,0,1,0\n");
    }

    #[test]
    fn canonical_phase_is_applied() {
        let sic = sic_set(2).unwrap();
        for s in sic.states() {
            let lead = s.amplitudes().iter().find(|a| a.norm() > 1e-12).unwrap();
            assert!(lead.im == 0.0 && lead.re > 0.0);
            assert!(DensityMatrix::from_pure(s).is_ok());
        }
    }
}
