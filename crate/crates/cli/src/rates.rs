use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use hdqkd::keyrate::{
    rate_bb84, rate_mub, rate_singapore_from_mi, report_csv, report_text, table1_report, threshold_report,
    Table1Inputs,
};
use hdqkd::protocols::ProtocolFamily;

use crate::output::{print, render_record, render_rows, Format};
use crate::Common;

#[derive(Args)]
pub struct RatesArgs {
    /// Print the full protocol comparison table.
    #[arg(long, conflicts_with_all = ["protocol", "eb", "mi"])]
    pub table1: bool,
    /// Override a table input, e.g. `bb84.d2.eb=0.01` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", requires = "table1")]
    pub overrides: Vec<String>,
    #[arg(long, required_unless_present = "table1")]
    pub protocol: Option<String>,
    #[arg(long, required_unless_present = "table1")]
    pub dim: Option<usize>,
    /// Measured error rate (bb84, mub).
    #[arg(long)]
    pub eb: Option<f64>,
    /// Measured mutual information in bits (singapore).
    #[arg(long)]
    pub mi: Option<f64>,
}

#[derive(Serialize)]
struct SingleRate {
    protocol: String,
    dim: usize,
    e_b: Option<f64>,
    mutual_information: Option<f64>,
    rate: f64,
}

pub fn cmd_rates(args: &RatesArgs, common: &Common) -> Result<()> {
    if args.table1 {
        let mut inputs = Table1Inputs::reference();
        for kv in &args.overrides {
            let (k, v) = kv.split_once('=').with_context(|| format!("`{kv}` is not KEY=VALUE"))?;
            let v: f64 = v.parse().with_context(|| format!("`{v}` is not a number"))?;
            inputs.set(k, v);
        }
        let rows = table1_report(&inputs)?;
        let text = match common.format {
            Format::Text => report_text(&rows),
            Format::Csv => report_csv(&rows),
            Format::Json => render_rows(&rows, Format::Json)?,
        };
        return print(&text);
    }
    let family: ProtocolFamily = args.protocol.as_deref().unwrap_or_default().parse()?;
    let d = args.dim.context("--dim is required")?;
    hdqkd::protocols::ProtocolSpec::new(family, d)?;
    let rate = match family {
        ProtocolFamily::Bb84 | ProtocolFamily::MubFull => {
            let e = args.eb.with_context(|| format!("{family} needs --eb"))?;
            if !(0.0..=1.0).contains(&e) {
                bail!("--eb {e} outside [0, 1]");
            }
            if family == ProtocolFamily::Bb84 {
                rate_bb84(d, e)
            } else {
                rate_mub(d, e)
            }
        }
        ProtocolFamily::Singapore => rate_singapore_from_mi(args.mi.context("singapore needs --mi")?),
        ProtocolFamily::Chau15 => {
            bail!("chau15 rates are reference values only; see `rates --table1`")
        }
    };
    if !rate.is_finite() {
        bail!("rate undefined at this error rate");
    }
    let row = SingleRate {
        protocol: family.tag().into(),
        dim: d,
        e_b: args.eb,
        mutual_information: args.mi,
        rate,
    };
    print(&render_record(&row, common.format)?)
}

pub fn cmd_thresholds(common: &Common) -> Result<()> {
    let rows = threshold_report()?;
    let text = match common.format {
        Format::Text => {
            let mut out = String::new();
            for r in &rows {
                let mark = if r.computed { "" } else { "*" };
                let _ = writeln!(out, "{:<10} d={} e_b_max={:.2}%{mark}", r.protocol, r.dim, 100.0 * r.e_b_max);
            }
            out.push_str("* reference value, not computed\n");
            out
        }
        f => render_rows(&rows, f)?,
    };
    print(&text)
}
