use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use hdqkd::channel::{chi_of_channel, identity_channel, parse_csv, save_csv, DetectionMatrix, NoiseModel, SamplingMode};
use hdqkd::keyrate::rate_singapore_from_mi;
use hdqkd::qmath::hermitian_basis;
use hdqkd::tomography::{
    detection_to_joint, joint_to_detection, mutual_information, process_fidelity, reconstruct, twirl,
    uhlmann_fidelity, JointProbMatrix, MleConfig, ProcessMatrix, TomographyMethod,
};

use crate::output::{ensure_dir, print, render_record, write_file};
use crate::Common;

#[derive(Args)]
pub struct TomographyArgs {
    /// Detection-matrix CSV, or a d = 2 SIC joint probability matrix.
    #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
    pub input: Option<PathBuf>,
    /// Simulate a channel instead: none, depolarizing:p, rotation:theta, pauli:...
    #[arg(long)]
    pub synthetic: Option<String>,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    /// mub or sic. Defaults to the table named in the input, else mub.
    #[arg(long)]
    pub method: Option<String>,
    /// Shots per row and context for synthetic data; 0 is analytic.
    #[arg(long, default_value_t = 0)]
    pub shots: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Add the trace-preserving penalty to the fit.
    #[arg(long)]
    pub trace_preserving: bool,
    /// Report mutual information only, without a process fit.
    #[arg(long)]
    pub mi: bool,
    #[arg(long, default_value_t = MleConfig::default().max_iters)]
    pub max_iters: u64,
    #[arg(long, default_value_t = MleConfig::default().restarts)]
    pub restarts: usize,
}

#[derive(Serialize)]
struct MiReport {
    source: String,
    mutual_information: f64,
    epsilon: f64,
    twirled_mi: f64,
    key_rate: f64,
}

impl MiReport {
    fn new(source: &str, p: &JointProbMatrix) -> Result<Self> {
        let mi = mutual_information(p);
        let (twirled, eps) = twirl(p)?;
        Ok(Self {
            source: source.into(),
            mutual_information: mi,
            epsilon: eps,
            twirled_mi: mutual_information(&twirled),
            key_rate: rate_singapore_from_mi(mi),
        })
    }
}

#[derive(Serialize)]
struct ChiReport {
    source: String,
    method: String,
    dim: usize,
    trace_preserving: bool,
    /// Tr[chi chi_identity].
    fidelity: f64,
    /// Fidelity to the simulated channel's chi.
    fidelity_truth: Option<f64>,
    min_eigenvalue: f64,
    mutual_information: Option<f64>,
    epsilon: Option<f64>,
    twirled_mi: Option<f64>,
}

enum Source {
    Matrix(DetectionMatrix),
    Joint(JointProbMatrix),
}

fn load(path: &PathBuf) -> Result<Source> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if text.starts_with("# dim=") {
        Ok(Source::Matrix(parse_csv(&text).with_context(|| format!("parsing {}", path.display()))?))
    } else {
        let p = JointProbMatrix::parse_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
        Ok(Source::Joint(p))
    }
}

pub fn cmd_tomography(args: &TomographyArgs, common: &Common) -> Result<()> {
    let explicit: Option<TomographyMethod> = args.method.as_deref().map(str::parse).transpose()?;
    let cfg = MleConfig {
        max_iters: args.max_iters,
        restarts: args.restarts,
        ..MleConfig::default()
    };
    let dir = &common.out_dir;

    let (source, dm, method, truth, joint) = match (&args.input, &args.synthetic) {
        (Some(path), _) => {
            let name = path.display().to_string();
            match load(path)? {
                Source::Joint(p) => {
                    if explicit == Some(TomographyMethod::Mub) {
                        bail!("{name} is a SIC joint matrix; it needs --method sic");
                    }
                    let dm = joint_to_detection(&p)?;
                    (name, dm, TomographyMethod::Sic, None, Some(p))
                }
                Source::Matrix(dm) => {
                    let method = match explicit {
                        Some(m) => m,
                        None => match dm.protocol() {
                            "mub" => TomographyMethod::Mub,
                            "singapore" => TomographyMethod::Sic,
                            other => bail!("cannot infer a tomography method for `{other}` data; pass --method"),
                        },
                    };
                    let joint = match method {
                        TomographyMethod::Sic => Some(detection_to_joint(&dm)?),
                        TomographyMethod::Mub => None,
                    };
                    (name, dm, method, None, joint)
                }
            }
        }
        (None, Some(noise)) => {
            let method = explicit.unwrap_or(TomographyMethod::Mub);
            let model: NoiseModel = noise.parse()?;
            let ch = model.build(args.dim)?;
            let mode = if args.shots == 0 {
                SamplingMode::Analytic
            } else {
                SamplingMode::Sampled {
                    shots: args.shots,
                    seed: args.seed,
                }
            };
            let dm = method.simulate(&ch, mode)?;
            ensure_dir(dir)?;
            save_csv(&dm, dir.join("detection.csv")).context("writing detection.csv")?;
            let truth = chi_of_channel(&ch, &hermitian_basis(args.dim)?)?;
            let joint = match method {
                TomographyMethod::Sic => Some(detection_to_joint(&dm)?),
                TomographyMethod::Mub => None,
            };
            (format!("synthetic:{model}"), dm, method, Some(truth), joint)
        }
        (None, None) => bail!("pass --input or --synthetic"),
    };

    if args.mi {
        let p = joint.context("mutual information needs SIC data (--method sic)")?;
        return print(&render_record(&MiReport::new(&source, &p)?, common.format)?);
    }

    let chi = reconstruct(&dm, method, &cfg, args.trace_preserving)?;
    let ideal = chi_of_channel(&identity_channel(dm.dim())?, &hermitian_basis(dm.dim())?)?;
    let mi = joint.as_ref().map(|p| MiReport::new(&source, p)).transpose()?;
    let report = ChiReport {
        source,
        method: method.tag().into(),
        dim: dm.dim(),
        trace_preserving: args.trace_preserving,
        fidelity: process_fidelity(&chi, &ideal)?,
        fidelity_truth: truth.as_ref().map(|t: &ProcessMatrix| uhlmann_fidelity(&chi, t)).transpose()?,
        min_eigenvalue: chi.min_eigenvalue(),
        mutual_information: mi.as_ref().map(|m| m.mutual_information),
        epsilon: mi.as_ref().map(|m| m.epsilon),
        twirled_mi: mi.as_ref().map(|m| m.twirled_mi),
    };
    ensure_dir(dir)?;
    write_file(dir, "chi.csv", &chi.to_csv())?;
    let text = render_record(&report, common.format)?;
    write_file(dir, &format!("tomography.{}", common.format.extension()), &text)?;
    print(&text)
}
