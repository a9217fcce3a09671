//! Small dense-matrix neural network toolkit: parameters, a reverse-mode
//! tape, LSTM cells, optimizers and finite-difference checks.

pub mod gradcheck;
pub mod lstm;
pub mod optim;
pub mod params;
pub mod tape;

pub use lstm::{BiLstm, LstmCell};
pub use optim::{Optimizer, OptimizerKind};
pub use params::{Gradients, Param, ParamId, ParamStore};
pub use tape::{softmax_row, Activation, Tape, Var};
