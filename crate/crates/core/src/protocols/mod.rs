//! Protocol engines: state tables, seeded sessions, sifting, error-rate
//! estimators and photon-source statistics.

mod estimators;
mod session;
mod source;

pub use estimators::{chau_error_rates, qber_from_matrix, qber_from_rounds, ContextRates, ErrorRates};
pub use session::{run_session, sift, RoundRecord, SessionTranscript};
pub use source::{
    g2_estimate, multiphoton_delta, SourceStats, REFERENCE_DELTA, REFERENCE_G2, REFERENCE_GAIN,
    REFERENCE_MU,
};

use std::fmt;
use std::str::FromStr;

use crate::channel::{detection_matrix, Channel, DetectionMatrix, MeasurementContext, SamplingMode};
use crate::error::{Error, Result};
use crate::gf2n::FieldSpec;
use crate::qmath::StateVector;
use crate::states::{chau_pairs, mub_set, sic_set, ChauState, Sign};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProtocolFamily {
    Bb84,
    MubFull,
    Singapore,
    Chau15,
}

impl ProtocolFamily {
    pub fn tag(self) -> &'static str {
        match self {
            ProtocolFamily::Bb84 => "bb84",
            ProtocolFamily::MubFull => "mub",
            ProtocolFamily::Singapore => "singapore",
            ProtocolFamily::Chau15 => "chau15",
        }
    }

    pub fn supported_dims(self) -> &'static [usize] {
        match self {
            ProtocolFamily::Bb84 => &[2, 4, 8],
            ProtocolFamily::MubFull => &[2, 4],
            ProtocolFamily::Singapore => &[2],
            ProtocolFamily::Chau15 => &[4, 8],
        }
    }
}

impl fmt::Display for ProtocolFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for ProtocolFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bb84" => Ok(ProtocolFamily::Bb84),
            "mub" | "mub_full" | "six-state" => Ok(ProtocolFamily::MubFull),
            "singapore" | "sic" => Ok(ProtocolFamily::Singapore),
            "chau15" => Ok(ProtocolFamily::Chau15),
            _ => Err(Error::InvalidParameter(format!(
                "unknown protocol `{s}` (expected bb84, mub, singapore or chau15)"
            ))),
        }
    }
}

/// One state Alice can send.
#[derive(Debug, Clone, PartialEq)]
pub struct Preparation {
    pub label: String,
    /// Basis index (BB84, MUB), pair index (Chau15), or 0 (Singapore).
    pub group: usize,
    /// Key symbol carried by the state: basis index of the vector, sign bit
    /// (Chau15) or SIC index (Singapore).
    pub symbol: usize,
    pub state: StateVector,
}

/// A protocol family in a fixed dimension with its preparation table and
/// Bob's measurement contexts. Context `k` belongs to preparation group `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolSpec {
    family: ProtocolFamily,
    dim: usize,
    preparations: Vec<Preparation>,
    contexts: Vec<MeasurementContext>,
}

impl ProtocolSpec {
    pub fn new(family: ProtocolFamily, dim: usize) -> Result<Self> {
        if !family.supported_dims().contains(&dim) {
            return Err(Error::InvalidParameter(format!(
                "{family} is defined for d in {:?}, not d = {dim}",
                family.supported_dims()
            )));
        }
        let mut preparations = Vec::new();
        let mut contexts = Vec::new();
        match family {
            ProtocolFamily::Bb84 | ProtocolFamily::MubFull => {
                let m = if family == ProtocolFamily::Bb84 { 2 } else { dim + 1 };
                let set = mub_set(dim, m)?;
                for (g, basis) in set.bases().iter().enumerate() {
                    let labels: Vec<String> = (0..dim).map(|i| i.to_string()).collect();
                    for (i, v) in basis.vectors().iter().enumerate() {
                        preparations.push(Preparation {
                            label: format!("{}{}", basis.label(), i),
                            group: g,
                            symbol: i,
                            state: v.clone(),
                        });
                    }
                    contexts.push(MeasurementContext::projective(basis.label(), labels, basis.vectors().to_vec())?);
                }
            }
            ProtocolFamily::Singapore => {
                // Alice sends the state orthogonal to SIC vector k; Bob
                // measures the SIC POVM, so outcome l = k is the error event.
                let sic = sic_set(dim)?;
                for (k, (label, v)) in sic.labels().iter().zip(sic.states()).enumerate() {
                    preparations.push(Preparation {
                        label: format!("n{}", &label[1..]),
                        group: 0,
                        symbol: k,
                        state: v.qubit_complement()?,
                    });
                }
                contexts.push(MeasurementContext::povm(
                    "sic",
                    sic.labels(),
                    sic.states().to_vec(),
                    1.0 / dim as f64,
                )?);
            }
            ProtocolFamily::Chau15 => {
                let spec = FieldSpec::for_dim(dim)?;
                for (g, (i, j)) in chau_pairs(spec).into_iter().enumerate() {
                    let id = format!("{}-{}", i.value(), j.value());
                    let mut vectors = Vec::new();
                    for sign in [Sign::Plus, Sign::Minus] {
                        let v = ChauState::new(i, j, sign)?.vector();
                        preparations.push(Preparation {
                            label: format!("{id}{}", sign.symbol()),
                            group: g,
                            symbol: sign.bit() as usize,
                            state: v.clone(),
                        });
                        vectors.push(v);
                    }
                    contexts.push(MeasurementContext::projective(id, vec!["+".into(), "-".into()], vectors)?);
                }
            }
        }
        Ok(Self {
            family,
            dim,
            preparations,
            contexts,
        })
    }

    pub fn family(&self) -> ProtocolFamily {
        self.family
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn preparations(&self) -> &[Preparation] {
        &self.preparations
    }

    pub fn contexts(&self) -> &[MeasurementContext] {
        &self.contexts
    }

    /// Number of preparation groups, equal to the number of contexts.
    pub fn n_groups(&self) -> usize {
        self.contexts.len()
    }

    /// Preparations belonging to group `g`, in table order.
    pub fn group_members(&self, g: usize) -> impl Iterator<Item = (usize, &Preparation)> {
        self.preparations.iter().enumerate().filter(move |(_, p)| p.group == g)
    }

    pub fn prepared_states(&self) -> Vec<(String, StateVector)> {
        self.preparations
            .iter()
            .map(|p| (p.label.clone(), p.state.clone()))
            .collect()
    }

    /// Whether Bob's symbol counts as an error against Alice's. For the
    /// Singapore protocol the ideal outcome never equals Alice's index.
    pub fn is_error(&self, alice: usize, bob: usize) -> bool {
        match self.family {
            ProtocolFamily::Singapore => alice == bob,
            _ => alice != bob,
        }
    }

    /// Whether a round is kept: matching basis (BB84, MUB), matching pair and
    /// a detection (Chau15), always (Singapore).
    pub fn sift_decision(&self, alice_group: usize, bob_context: usize, clicked: bool) -> bool {
        match self.family {
            ProtocolFamily::Singapore => clicked,
            ProtocolFamily::Chau15 => alice_group == bob_context && clicked,
            _ => alice_group == bob_context,
        }
    }

    /// Probability-of-detection matrix of every preparation in every context.
    pub fn detection_matrix(&self, ch: &Channel, mode: SamplingMode) -> Result<DetectionMatrix> {
        detection_matrix(self.family.tag(), &self.prepared_states(), &self.contexts, ch, mode)
    }
}

/// Exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rational {
    pub num: u64,
    pub den: u64,
}

impl Rational {
    pub fn new(num: u64, den: u64) -> Self {
        let g = gcd(num, den).max(1);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn value(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Expected kept fraction under uniform choices: 1/2, 1/(d+1), 2/(d^2-d), 1.
pub fn sifting_rate(spec: &ProtocolSpec) -> Rational {
    let d = spec.dim as u64;
    match spec.family {
        ProtocolFamily::Bb84 => Rational::new(1, 2),
        ProtocolFamily::MubFull => Rational::new(1, d + 1),
        ProtocolFamily::Chau15 => Rational::new(2, d * d - d),
        ProtocolFamily::Singapore => Rational::new(1, 1),
    }
}
