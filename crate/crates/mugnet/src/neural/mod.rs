//! Differentiable numerical kernel: 64-bit dense tensors, a recording tape
//! with exact reverse-mode gradients, the layer primitives the model is
//! assembled from, finite-difference verification, and the parameter
//! checkpoint format.

pub mod checkpoint;
pub mod gradcheck;
pub mod layers;
pub mod tape;
pub mod tensor;

pub use checkpoint::{GradientSet, NamedTensors};
pub use gradcheck::{finite_difference_check, CoordSelection};
pub use layers::{
    apply_activation, cross_entropy_loss, dense_affine, gat_layer_forward, mlp2_forward,
    Activation, GatHeadParams, GatLayerParams, MlpParams, DEFAULT_LEAKY_SLOPE,
};
pub use tape::{NodeId, Tape};
pub use tensor::Tensor;
