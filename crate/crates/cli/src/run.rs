use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use hdqkd::channel::{save_csv, NoiseModel, SamplingMode};
use hdqkd::keyrate::{rate_bb84, rate_mub, rate_singapore_from_mi};
use hdqkd::protocols::{
    chau_error_rates, qber_from_matrix, qber_from_rounds, run_session, sift, sifting_rate, ProtocolFamily,
    ProtocolSpec,
};
use hdqkd::tomography::{detection_to_joint, mutual_information};
use hdqkd::transport::inproc_pair;

use crate::output::{ensure_dir, print, render_record, write_file};
use crate::Common;

#[derive(Args)]
pub struct RunArgs {
    /// bb84, mub, singapore or chau15.
    #[arg(long)]
    pub protocol: String,
    #[arg(long)]
    pub dim: usize,
    /// none, depolarizing:p, rotation:theta or pauli:p00:p01:...
    #[arg(long, default_value = "none")]
    pub noise: String,
    #[arg(long, default_value_t = 10_000)]
    pub rounds: u64,
    /// Shots per row and context for the detection matrix; 0 gives the
    /// analytic matrix.
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Validated `run` parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: ProtocolSpec,
    pub noise: NoiseModel,
    pub rounds: u64,
    pub mode: SamplingMode,
    pub seed: u64,
}

impl RunConfig {
    pub fn from_args(args: &RunArgs) -> Result<Self> {
        let family: ProtocolFamily = args.protocol.parse()?;
        let spec = ProtocolSpec::new(family, args.dim)?;
        let noise: NoiseModel = args.noise.parse()?;
        if args.rounds == 0 {
            bail!("--rounds must be positive");
        }
        let mode = if args.shots == 0 {
            SamplingMode::Analytic
        } else {
            SamplingMode::Sampled {
                shots: args.shots,
                seed: args.seed,
            }
        };
        Ok(Self {
            spec,
            noise,
            rounds: args.rounds,
            mode,
            seed: args.seed,
        })
    }
}

#[derive(Serialize)]
struct RunSummary {
    protocol: String,
    dim: usize,
    noise: String,
    rounds: u64,
    shots: u64,
    seed: u64,
    sifted: usize,
    sifted_fraction: f64,
    sifting_expected: String,
    /// Error rate of the sifted session key.
    e_b: Option<f64>,
    /// Error rate read off the detection matrix.
    e_b_matrix: f64,
    e_d: Option<f64>,
    e_raw: Option<f64>,
    mutual_information: Option<f64>,
    key_rate: Option<f64>,
}

pub fn cmd_run(args: &RunArgs, common: &Common) -> Result<()> {
    let cfg = RunConfig::from_args(args)?;
    let spec = &cfg.spec;
    let d = spec.dim();
    let ch = cfg.noise.build(d)?;
    let dm = spec.detection_matrix(&ch, cfg.mode)?;

    let (mut alice, mut bob) = inproc_pair();
    let transcript = run_session(spec, &ch, cfg.rounds, cfg.seed, &mut alice, &mut bob)?;
    let kept = sift(spec, &transcript.rounds);
    let e_b = qber_from_rounds(spec, &kept).ok();

    let mut summary = RunSummary {
        protocol: spec.family().tag().into(),
        dim: d,
        noise: cfg.noise.to_string(),
        rounds: cfg.rounds,
        shots: args.shots,
        seed: cfg.seed,
        sifted: transcript.n_sifted(),
        sifted_fraction: transcript.sifted_fraction(),
        sifting_expected: sifting_rate(spec).to_string(),
        e_b,
        e_b_matrix: f64::NAN,
        e_d: None,
        e_raw: None,
        mutual_information: None,
        key_rate: None,
    };
    match spec.family() {
        ProtocolFamily::Chau15 => {
            let r = chau_error_rates(&dm)?;
            summary.e_b_matrix = r.e_b;
            summary.e_d = Some(r.e_d);
            summary.e_raw = Some(r.e_raw);
        }
        ProtocolFamily::Singapore => {
            summary.e_b_matrix = qber_from_matrix(spec, &dm)?;
            let mi = mutual_information(&detection_to_joint(&dm)?);
            summary.mutual_information = Some(mi);
            summary.key_rate = Some(rate_singapore_from_mi(mi));
        }
        ProtocolFamily::Bb84 | ProtocolFamily::MubFull => {
            summary.e_b_matrix = qber_from_matrix(spec, &dm)?;
            let e = e_b.context("no sifted rounds to estimate the error rate")?;
            let rate = if spec.family() == ProtocolFamily::Bb84 { rate_bb84(d, e) } else { rate_mub(d, e) };
            summary.key_rate = rate.is_finite().then_some(rate);
        }
    }

    let dir = &common.out_dir;
    ensure_dir(dir)?;
    save_csv(&dm, dir.join("detection.csv")).context("writing detection.csv")?;
    write_file(dir, "transcript.txt", &transcript.export(spec))?;
    write_file(dir, "messages.log", &transcript.message_log())?;
    let report = render_record(&summary, common.format)?;
    write_file(dir, &format!("summary.{}", common.format.extension()), &report)?;
    print(&report)
}
