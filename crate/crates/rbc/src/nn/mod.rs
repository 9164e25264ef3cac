//! Minimal deterministic neural-network stack: hand-rolled conv/FC layers
//! with explicit backward passes, AdamW, triplet loss, and the two model
//! architectures used for information-set weighting.

pub mod checkpoint;
pub mod layers;
pub mod loss;
pub mod model;
pub mod optim;
pub mod scalar;
pub mod train;

pub use layers::{Grads, ParamStore, Planes};
pub use loss::{bce_with_logit, euclidean_distance, triplet_loss};
pub use model::{CnnModel, NetworkConfig, SiameseModel};
pub use optim::{AdamW, AdamWConfig};
pub use scalar::Scalar;
pub use train::{TrainConfig, TrainReport, TripletSource};
