//! Exoskeleton control network: a deterministic MLP from a short joint
//! history to normalized hip and knee torques, its supervised loss with
//! regularization and bilateral symmetry terms, training, and file format.

mod dataset;
mod io;
mod loss;
mod mlp;
mod state;
mod train;

pub use dataset::{generate_dataset, DatasetConfig, TORQUE_NORM};
pub use io::{
    decode_params, encode_params, load_params, params_checksum, read_dataset_csv, save_params,
    write_dataset_csv,
};
pub use loss::{
    data_term, gradient, loss, loss_from_outputs, loss_terms, LossTerms, LossWeights,
    TrainingSample,
};
pub use mlp::{Layer, MlpParams};
pub use state::{
    build_state, JointSample, ANGLE_SCALE, HISTORY, JOINT_NAMES, SAMPLE_DIM, STATE_DIM,
    VELOCITY_SCALE,
};
pub use train::{train, train_with_progress, EpochStats, TrainConfig, TrainReport, MIN_DATASET};

/// Deployed layer widths.
pub const ECN_DIMS: [usize; 5] = [STATE_DIM, 64, 64, 64, 4];
