//! Secret key rates per sifted photon, error thresholds and the
//! protocol-comparison table.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocols::{sifting_rate, ProtocolFamily, ProtocolSpec};

/// Binary Shannon entropy in bits, with 0 log 0 = 0.
pub fn binary_entropy(x: f64) -> f64 {
    let t = |p: f64| if p <= 0.0 { 0.0 } else { -p * p.log2() };
    t(x) + t(1.0 - x)
}

/// h^(d)(x) = -x log2(x/(d-1)) - (1-x) log2(1-x).
pub fn entropy_hd(x: f64, d: usize) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidParameter(format!("entropy argument {x} outside [0, 1]")));
    }
    if d < 2 {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(hd(x, d))
}

fn hd(x: f64, d: usize) -> f64 {
    if !(0.0..=1.0).contains(&x) {
        return f64::NAN;
    }
    let a = if x <= 0.0 { 0.0 } else { -x * (x / (d as f64 - 1.0)).log2() };
    let b = if x >= 1.0 { 0.0 } else { -(1.0 - x) * (1.0 - x).log2() };
    a + b
}

/// log2 d - 2 h^(d)(e). NaN outside e in [0, 1].
pub fn rate_bb84(d: usize, e: f64) -> f64 {
    (d as f64).log2() - 2.0 * hd(e, d)
}

/// log2 d - h^(d)(x) - x log2(d+1) with x = (d+1) e / d. NaN when x > 1.
pub fn rate_mub(d: usize, e: f64) -> f64 {
    let x = (d as f64 + 1.0) * e / d as f64;
    (d as f64).log2() - hd(x, d) - x * (d as f64 + 1.0).log2()
}

/// Qubit BB84 with a multiphoton fraction delta:
/// (1 - delta)(1 - h(e / (1 - delta))) - h(e).
pub fn rate_bb84_multiphoton(e: f64, delta: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::InvalidParameter(format!("multiphoton rate {delta} outside [0, 1)")));
    }
    if !(0.0..=1.0).contains(&e) {
        return Err(Error::InvalidParameter(format!("error rate {e} outside [0, 1]")));
    }
    let x = e / (1.0 - delta);
    if x > 1.0 {
        return Err(Error::InvalidParameter(format!("e / (1 - delta) = {x} exceeds 1")));
    }
    Ok((1.0 - delta) * (1.0 - binary_entropy(x)) - binary_entropy(e))
}

/// Iterative Singapore extraction reaches 0.4 bits per 0.415 bits of mutual
/// information; the rate scales linearly.
pub fn rate_singapore_from_mi(mi: f64) -> f64 {
    0.4 * mi / 0.415
}

/// Root of `rate(e) = 0` on [0, (d-1)/d] by bisection to 1e-8.
pub fn threshold(rate: impl Fn(f64) -> f64, d: usize) -> Result<f64> {
    let mut lo = 0.0;
    let mut hi = (d as f64 - 1.0) / d as f64;
    let (flo, fhi) = (rate(lo), rate(hi));
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::NoSignChange { lo, hi });
    }
    while hi - lo > 1e-8 {
        let mid = 0.5 * (lo + hi);
        if rate(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Error threshold of a computable protocol.
pub fn protocol_threshold(family: ProtocolFamily, d: usize) -> Result<f64> {
    match family {
        ProtocolFamily::Bb84 => threshold(|e| rate_bb84(d, e), d),
        ProtocolFamily::MubFull => threshold(|e| rate_mub(d, e), d),
        other => Err(Error::Unsupported(format!("{other} rate formula"))),
    }
}

/// Reference thresholds outside the implemented formulas.
pub const SINGAPORE_THRESHOLD: f64 = 0.3893;
pub const CHAU15_THRESHOLD: f64 = 0.5;
/// Reference Chau15 key rates for d = 4 and d = 8.
pub const CHAU15_RATES: [(usize, f64); 2] = [(4, 0.8170), (8, 0.8172)];
/// Error-free Singapore rate.
pub const SINGAPORE_R0: f64 = 0.4;

/// One protocol row. `computed = false` marks values echoed from reference
/// constants rather than derived here.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateReport {
    pub protocol: String,
    pub dim: usize,
    pub e_b_max: f64,
    pub e_b_max_computed: bool,
    pub e_b: f64,
    pub r0: f64,
    pub rate: f64,
    pub rate_computed: bool,
    pub sifting: String,
    pub sifting_value: f64,
    pub rate_x_sifting: f64,
    /// Rate with sifting efficiency 1 (biased basis choice, infinite key).
    pub rate_x_sifting_biased: Option<f64>,
}

/// Measured inputs by name: `<protocol>.d<d>.eb` for each row and
/// `singapore.d2.mi` for the Singapore mutual information.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table1Inputs {
    pub values: BTreeMap<String, f64>,
}

const TABLE_ROWS: [(ProtocolFamily, usize); 8] = [
    (ProtocolFamily::Chau15, 4),
    (ProtocolFamily::Chau15, 8),
    (ProtocolFamily::Bb84, 2),
    (ProtocolFamily::Bb84, 4),
    (ProtocolFamily::Bb84, 8),
    (ProtocolFamily::MubFull, 2),
    (ProtocolFamily::MubFull, 4),
    (ProtocolFamily::Singapore, 2),
];

impl Table1Inputs {
    /// The measured error rates and mutual information of the reference run.
    pub fn reference() -> Self {
        let mut values = BTreeMap::new();
        for (k, v) in [
            ("chau15.d4.eb", 0.00778),
            ("chau15.d8.eb", 0.0311),
            ("bb84.d2.eb", 0.00628),
            ("bb84.d4.eb", 0.0351),
            ("bb84.d8.eb", 0.109),
            ("mub.d2.eb", 0.00923),
            ("mub.d4.eb", 0.0387),
            ("singapore.d2.eb", 0.0123),
            ("singapore.d2.mi", 0.388),
        ] {
            values.insert(k.to_string(), v);
        }
        Self { values }
    }

    pub fn set(&mut self, key: &str, value: f64) {
        self.values.insert(key.to_string(), value);
    }

    fn required() -> Vec<String> {
        let mut keys: Vec<String> = TABLE_ROWS
            .iter()
            .map(|(f, d)| format!("{}.d{d}.eb", f.tag()))
            .collect();
        keys.push("singapore.d2.mi".into());
        keys
    }
}

/// Builds one row per (protocol, d) in table order.
pub fn table1_report(inputs: &Table1Inputs) -> Result<Vec<RateReport>> {
    let missing: Vec<String> = Table1Inputs::required()
        .into_iter()
        .filter(|k| !inputs.values.contains_key(k))
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingInputs(missing.join(", ")));
    }
    let get = |k: String| inputs.values[&k];
    let mut rows = Vec::new();
    for (family, d) in TABLE_ROWS {
        let spec = ProtocolSpec::new(family, d)?;
        let sift = sifting_rate(&spec);
        let e_b = get(format!("{}.d{d}.eb", family.tag()));
        let log_d = (d as f64).log2();
        let (e_b_max, max_computed, r0, rate, rate_computed) = match family {
            ProtocolFamily::Bb84 => (protocol_threshold(family, d)?, true, log_d, rate_bb84(d, e_b), true),
            ProtocolFamily::MubFull => (protocol_threshold(family, d)?, true, log_d, rate_mub(d, e_b), true),
            ProtocolFamily::Singapore => (
                SINGAPORE_THRESHOLD,
                false,
                SINGAPORE_R0,
                rate_singapore_from_mi(get("singapore.d2.mi".into())),
                true,
            ),
            ProtocolFamily::Chau15 => {
                let r = CHAU15_RATES.iter().find(|(dd, _)| *dd == d).map(|x| x.1).unwrap_or(f64::NAN);
                (CHAU15_THRESHOLD, false, 1.0, r, false)
            }
        };
        let biased = matches!(family, ProtocolFamily::Bb84 | ProtocolFamily::MubFull).then_some(rate);
        rows.push(RateReport {
            protocol: family.tag().to_string(),
            dim: d,
            e_b_max,
            e_b_max_computed: max_computed,
            e_b,
            r0,
            rate,
            rate_computed,
            sifting: sift.to_string(),
            sifting_value: sift.value(),
            rate_x_sifting: rate * sift.value(),
            rate_x_sifting_biased: biased,
        });
    }
    Ok(rows)
}

fn mark(computed: bool) -> &'static str {
    if computed {
        ""
    } else {
        "*"
    }
}

/// Aligned plain-text table. `*` marks reference constants.
pub fn report_text(rows: &[RateReport]) -> String {
    let mut out = format!(
        "{:<10} {:>2} {:>9} {:>8} {:>5} {:>8} {:>8} {:>16}\n",
        "protocol", "d", "e_b_max", "e_b", "R(0)", "R", "sifting", "R x sifting"
    );
    for r in rows {
        let rs = match r.rate_x_sifting_biased {
            Some(b) => format!("{:.4} - {:.4}", r.rate_x_sifting, b),
            None => format!("{:.4}", r.rate_x_sifting),
        };
        let sifting = if r.rate_x_sifting_biased.is_some() {
            format!("{} - 1", r.sifting)
        } else {
            r.sifting.clone()
        };
        let _ = writeln!(
            out,
            "{:<10} {:>2} {:>9} {:>8} {:>5} {:>8} {:>8} {:>16}",
            r.protocol,
            r.dim,
            format!("{:.2}%{}", 100.0 * r.e_b_max, mark(r.e_b_max_computed)),
            format!("{:.3}%", 100.0 * r.e_b),
            format!("{}", r.r0),
            format!("{:.4}{}", r.rate, mark(r.rate_computed)),
            sifting,
            rs
        );
    }
    out.push_str("* reference value, not computed\n");
    out
}

pub const REPORT_CSV_HEADER: &str =
    "protocol,dim,e_b_max,e_b_max_computed,e_b,r0,rate,rate_computed,sifting,sifting_value,rate_x_sifting,rate_x_sifting_biased";

/// CSV with full-precision numbers.
pub fn report_csv(rows: &[RateReport]) -> String {
    let mut out = format!("{REPORT_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.protocol,
            r.dim,
            r.e_b_max,
            r.e_b_max_computed,
            r.e_b,
            r.r0,
            r.rate,
            r.rate_computed,
            r.sifting,
            r.sifting_value,
            r.rate_x_sifting,
            r.rate_x_sifting_biased.map_or(String::new(), |b| b.to_string())
        );
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    pub protocol: String,
    pub dim: usize,
    pub e_b_max: f64,
    pub computed: bool,
}

/// The five computed thresholds followed by the Singapore and Chau15
/// reference values.
pub fn threshold_report() -> Result<Vec<ThresholdRow>> {
    let mut rows = Vec::new();
    for (family, d) in [
        (ProtocolFamily::Bb84, 2),
        (ProtocolFamily::Bb84, 4),
        (ProtocolFamily::Bb84, 8),
        (ProtocolFamily::MubFull, 2),
        (ProtocolFamily::MubFull, 4),
    ] {
        rows.push(ThresholdRow {
            protocol: family.tag().into(),
            dim: d,
            e_b_max: protocol_threshold(family, d)?,
            computed: true,
        });
    }
    rows.push(ThresholdRow { protocol: "singapore".into(), dim: 2, e_b_max: SINGAPORE_THRESHOLD, computed: false });
    for d in [4, 8] {
        rows.push(ThresholdRow { protocol: "chau15".into(), dim: d, e_b_max: CHAU15_THRESHOLD, computed: false });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_examples() {
        assert!((entropy_hd(0.5, 2).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(entropy_hd(0.0, 4).unwrap(), 0.0);
        assert!((entropy_hd(0.75, 4).unwrap() - 2.0).abs() < 1e-14);
        assert!(entropy_hd(1.5, 2).is_err());
        assert!(entropy_hd(-0.1, 2).is_err());
    }

    #[test]
    fn entropy_bounded_by_log_d() {
        for d in [2usize, 3, 4, 8] {
            let top = (d as f64 - 1.0) / d as f64;
            assert!((entropy_hd(top, d).unwrap() - (d as f64).log2()).abs() < 1e-14);
            for i in 0..=1000 {
                let x = i as f64 / 1000.0;
                let h = entropy_hd(x, d).unwrap();
                assert!(h <= (d as f64).log2() + 1e-14);
                if (x - top).abs() > 1e-3 {
                    assert!(h < (d as f64).log2());
                }
            }
        }
    }

    #[test]
    fn rates_at_zero_and_monotone() {
        for d in [2usize, 4, 8] {
            assert!((rate_bb84(d, 0.0) - (d as f64).log2()).abs() < 1e-15);
            let max = protocol_threshold(ProtocolFamily::Bb84, d).unwrap();
            let mut prev = f64::INFINITY;
            let mut e = 0.0;
            while e <= max {
                let r = rate_bb84(d, e);
                assert!(r < prev);
                prev = r;
                e += 1e-3;
            }
        }
        for d in [2usize, 4] {
            assert!((rate_mub(d, 0.0) - (d as f64).log2()).abs() < 1e-15);
            let max = protocol_threshold(ProtocolFamily::MubFull, d).unwrap();
            let mut prev = f64::INFINITY;
            let mut e = 0.0;
            while e <= max {
                let r = rate_mub(d, e);
                assert!(r < prev);
                prev = r;
                e += 1e-3;
            }
        }
    }

    #[test]
    fn multiphoton_reduces_to_bb84() {
        for e in [0.0, 0.01, 0.05, 0.1] {
            assert!((rate_bb84_multiphoton(e, 0.0).unwrap() - rate_bb84(2, e)).abs() < 1e-15);
        }
        assert!((rate_bb84_multiphoton(0.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        assert!(rate_bb84_multiphoton(0.9, 0.5).is_err());
        assert!(rate_bb84_multiphoton(0.1, 1.0).is_err());
    }

    #[test]
    fn singapore_scaling() {
        assert!((rate_singapore_from_mi(0.415) - 0.4).abs() < 1e-15);
        assert_eq!(rate_singapore_from_mi(0.0), 0.0);
    }

    #[test]
    fn threshold_errors() {
        assert!(matches!(threshold(|_| 1.0, 2), Err(Error::NoSignChange { .. })));
        assert!(protocol_threshold(ProtocolFamily::Chau15, 4).is_err());
    }

    #[test]
    fn report_rows() {
        let rows = table1_report(&Table1Inputs::reference()).unwrap();
        assert_eq!(rows.len(), 8);
        let bb84_4 = rows.iter().find(|r| r.protocol == "bb84" && r.dim == 4).unwrap();
        assert!((bb84_4.rate_x_sifting - 0.7250).abs() < 5e-4);
        let mub4 = rows.iter().find(|r| r.protocol == "mub" && r.dim == 4).unwrap();
        assert_eq!(mub4.sifting, "1/5");
        assert!((mub4.rate - 1.5316).abs() < 5e-4);
        let chau8 = rows.iter().find(|r| r.protocol == "chau15" && r.dim == 8).unwrap();
        assert!(!chau8.rate_computed);
        assert!((chau8.rate_x_sifting - 0.0292).abs() < 5e-5);
        let mut partial = Table1Inputs::reference();
        partial.values.remove("bb84.d4.eb");
        partial.values.remove("singapore.d2.mi");
        match table1_report(&partial) {
            Err(Error::MissingInputs(names)) => {
                assert!(names.contains("bb84.d4.eb") && names.contains("singapore.d2.mi"));
            }
            other => panic!("{other:?}"),
        }
        let text = report_text(&rows);
        assert_eq!(text.lines().count(), 10);
        assert_eq!(report_csv(&rows).lines().count(), 9);
    }
}
