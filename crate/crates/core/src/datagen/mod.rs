//! Excitation signals and the train/validation/test data collection protocol.

mod build;
mod excitation;
mod io;
mod trajectory;

pub use build::{
    build_dataset, build_tvera_experiments, rollout_dataset, DatasetConfig, DatasetSplits, SplitFrequencies,
};
pub use excitation::{chirp, ExcitationSpec};
pub(crate) use io::seed_str;
pub use io::{load_dataset, save_dataset, write_trajectory_csv, read_trajectory_csv};
pub use trajectory::{Dataset, ExcitationMeta, Split, Trajectory};
