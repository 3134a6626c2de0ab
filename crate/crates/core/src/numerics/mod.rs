//! Dense arithmetic, layer passes and losses the rest of the crate is built on.
//!
//! Every function here is pure; callers own all buffers.

mod gradcheck;
mod layers;
mod loss;
mod tensor;

pub use gradcheck::grad_check;
pub use layers::{
    affine_backward, affine_forward, relu, relu_backward, sigmoid, sigmoid_backward,
    sigmoid_scalar, AffineGrads,
};
pub(crate) use layers::{affine_input_grad, affine_param_grads};
pub use loss::{l1_loss, softmax, softmax_ce_loss, LossValue};
pub use tensor::{argmax, matmul, Tensor2D};
