//! Singapore-protocol analysis and quantum process tomography.

mod design;
mod optimize;
mod process;
mod singapore;

pub use design::{detection_to_joint, joint_to_detection, reconstruct, TomographyMethod};
pub use optimize::{minimize, MleConfig, Minimum};
pub use process::{fit_process, process_fidelity, uhlmann_fidelity, ProcessMatrix};
pub use singapore::{
    appendix_pexp, fit_sic_states, mutual_information, sic_joint_probs, singlet_state, twirl,
    twirled_matrix, twirled_mi, JointProbMatrix, SicFit, PEXP_CSV, SIC_MI_LADDER,
};
