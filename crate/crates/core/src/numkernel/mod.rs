//! Dense numeric kernel: tensors, convolution, pooling, linear maps,
//! activations, loss, Adam, Xavier init and a finite-difference oracle.

pub mod activation;
pub mod adam;
pub mod conv;
pub mod gradcheck;
pub mod init;
pub mod linear;
pub mod loss;
pub mod params;
pub mod pool;
pub mod tensor;

pub use activation::{relu, relu_backward, relu_vec};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{conv2d, conv2d_backward, conv2d_relu, conv_out_dim, ConvGrads};
pub use gradcheck::{finite_diff_grad, relative_error};
pub use init::{xavier_bound, xavier_uniform_init, xavier_uniform_seeded};
pub use linear::{linear, linear_backward, LinearGrads};
pub use loss::{mse_grad, mse_loss};
pub use params::{AdamGroup, ParamGroup};
pub use pool::{adaptive_avg_pool_1x1, adaptive_avg_pool_1x1_backward, maxpool2d, maxpool2d_backward, maxpool2d_indexed};
pub use tensor::Tensor;
