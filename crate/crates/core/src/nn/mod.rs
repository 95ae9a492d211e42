//! Layer kernels with explicit backward passes, plus Adam and a
//! checkpoint archive.

pub mod activation;
pub mod adam;
pub mod batchnorm;
pub mod checkpoint;
pub mod conv;
pub mod linear;
pub mod lstm;
pub mod param;
pub mod pool;
pub mod tensor;

pub use activation::{dropout, dropout_backward_inplace, log_softmax, relu_backward_inplace, relu_inplace, softmax};
pub use adam::Adam;
pub use batchnorm::{BatchNorm, BnCache, BN_EPS, BN_MOMENTUM};
pub use checkpoint::{Checkpoint, NamedTensor, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use conv::{conv1d, conv1d_backward, conv1d_cm, conv1d_cm_backward, Conv1d};
pub use linear::{fully_connected, fully_connected_backward, Linear};
pub use lstm::{Lstm, LstmCache, LstmInputGrads};
pub use param::Param;
pub use pool::{max_pool1d, max_pool1d_backward};
pub use tensor::{Scalar, Tensor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Train,
    Infer,
}
