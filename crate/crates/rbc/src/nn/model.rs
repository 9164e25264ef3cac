//! The Siamese embedding network (two encoders + shared trunk) and the CNN
//! binary-classification baseline.

use super::layers::{
    add_planes, elu_backward, elu_planes, sigmoid, Conv, Fc, Grads, ParamStore, Planes,
};
use super::scalar::Scalar;
use crate::encoding::{BOARD_CHANNELS, HISTORY_CHANNELS, PAIR_CHANNELS};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("no encoder accepts {0} input channels")]
    UnsupportedChannels(usize),
}

/// Architecture hyperparameters. `paper()` is the published configuration;
/// `desk()` is a scaled-down preset that trains in minutes on a CPU.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub encoder_layers: usize,
    pub encoder_filters: usize,
    pub trunk_layers: usize,
    pub trunk_filters: usize,
    pub embedding_dim: usize,
    pub margin: f64,
}

impl NetworkConfig {
    pub fn paper() -> NetworkConfig {
        NetworkConfig {
            encoder_layers: 5,
            encoder_filters: 64,
            trunk_layers: 10,
            trunk_filters: 128,
            embedding_dim: 512,
            margin: 1.0,
        }
    }

    pub fn desk() -> NetworkConfig {
        NetworkConfig {
            encoder_layers: 2,
            encoder_filters: 8,
            trunk_layers: 3,
            trunk_filters: 16,
            embedding_dim: 32,
            margin: 1.0,
        }
    }

    pub fn preset(name: &str) -> Option<NetworkConfig> {
        match name {
            "paper" => Some(NetworkConfig::paper()),
            "desk" => Some(NetworkConfig::desk()),
            _ => None,
        }
    }

    fn validate(&self) {
        assert!(self.encoder_layers >= 1);
        assert!(self.encoder_filters >= 1);
        assert!(self.trunk_layers >= 1);
        assert!(self.trunk_filters >= 1);
        assert!(self.embedding_dim >= 1);
    }
}

/// Convolutional stack mapping an input representation to the trunk's
/// feature shape (trunk_filters x 8 x 8); ELU after every layer.
#[derive(Debug, Clone)]
pub struct Encoder {
    convs: Vec<Conv>,
}

pub struct EncoderTape<S> {
    /// Input followed by every post-ELU activation.
    acts: Vec<Planes<S>>,
}

impl Encoder {
    fn new<S: Scalar>(
        store: &mut ParamStore<S>,
        rng: &mut ChaCha12Rng,
        name: &str,
        in_c: usize,
        cfg: &NetworkConfig,
    ) -> Encoder {
        let mut convs = Vec::new();
        let mut prev = in_c;
        for i in 0..cfg.encoder_layers {
            let out = if i + 1 == cfg.encoder_layers {
                cfg.trunk_filters
            } else {
                cfg.encoder_filters
            };
            convs.push(Conv::new(store, rng, &format!("{name}.conv{i}"), prev, out, 3));
            prev = out;
        }
        Encoder { convs }
    }

    pub fn in_channels(&self) -> usize {
        self.convs[0].in_c
    }

    fn forward<S: Scalar>(&self, store: &ParamStore<S>, x: Planes<S>) -> EncoderTape<S> {
        let mut acts = Vec::with_capacity(self.convs.len() + 1);
        acts.push(x);
        for conv in &self.convs {
            let y = elu_planes(&conv.forward(store, acts.last().unwrap()));
            acts.push(y);
        }
        EncoderTape { acts }
    }

    fn backward<S: Scalar>(
        &self,
        store: &ParamStore<S>,
        tape: &EncoderTape<S>,
        mut dy: Planes<S>,
        grads: &mut Grads<S>,
    ) {
        for (i, conv) in self.convs.iter().enumerate().rev() {
            let y = &tape.acts[i + 1];
            let x = &tape.acts[i];
            let dpre = elu_backward(y, &dy);
            // The first layer sits on the data; its input grads are unused.
            match conv.backward(store, x, &dpre, grads, i > 0) {
                Some(dx) => dy = dx,
                None => break,
            }
        }
    }
}

/// Final activation of the trunk head.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum HeadActivation {
    Tanh,
    /// Raw logit; the loss applies the sigmoid.
    Identity,
}

/// Shared convolutional trunk: `trunk_layers` 3x3 convs with identity skip
/// connections every two layers, an output block (3x3 then 1x1 down to one
/// plane), and a fully-connected head.
#[derive(Debug, Clone)]
pub struct Trunk {
    convs: Vec<Conv>,
    out3: Conv,
    out1: Conv,
    fc: Fc,
    head: HeadActivation,
}

pub struct TrunkTape<S> {
    /// Per trunk layer: (input, post-ELU pre-skip output, post-skip output).
    layer_io: Vec<(Planes<S>, Planes<S>, Planes<S>)>,
    out3_in: Planes<S>,
    out3_elu: Planes<S>,
    out1_elu: Planes<S>,
    head_out: Vec<S>,
}

impl<S: Scalar> TrunkTape<S> {
    pub fn output(&self) -> &[S] {
        &self.head_out
    }
}

impl Trunk {
    fn new<S: Scalar>(
        store: &mut ParamStore<S>,
        rng: &mut ChaCha12Rng,
        name: &str,
        cfg: &NetworkConfig,
        out_dim: usize,
        head: HeadActivation,
    ) -> Trunk {
        let f = cfg.trunk_filters;
        let convs = (0..cfg.trunk_layers)
            .map(|i| Conv::new(store, rng, &format!("{name}.conv{i}"), f, f, 3))
            .collect();
        let out3 = Conv::new(store, rng, &format!("{name}.out3"), f, f, 3);
        let out1 = Conv::new(store, rng, &format!("{name}.out1"), f, 1, 1);
        let fc = Fc::new(store, rng, &format!("{name}.fc"), 64, out_dim);
        Trunk {
            convs,
            out3,
            out1,
            fc,
            head,
        }
    }

    fn skip_at(i: usize) -> bool {
        i % 2 == 1
    }

    fn forward<S: Scalar>(&self, store: &ParamStore<S>, x: Planes<S>) -> TrunkTape<S> {
        let mut layer_io: Vec<(Planes<S>, Planes<S>, Planes<S>)> =
            Vec::with_capacity(self.convs.len());
        let mut cur = x;
        for (i, conv) in self.convs.iter().enumerate() {
            let pre_skip = elu_planes(&conv.forward(store, &cur));
            let post = if Self::skip_at(i) {
                // Identity skip from the input of the previous layer.
                add_planes(&pre_skip, &layer_io[i - 1].0)
            } else {
                pre_skip.clone()
            };
            layer_io.push((cur, pre_skip, post.clone()));
            cur = post;
        }
        let out3_in = cur;
        let out3_elu = elu_planes(&self.out3.forward(store, &out3_in));
        let out1_elu = elu_planes(&self.out1.forward(store, &out3_elu));
        let pre_head = self.fc.forward(store, &out1_elu.data);
        let head_out = match self.head {
            HeadActivation::Tanh => pre_head.iter().map(|&v| v.tanh()).collect(),
            HeadActivation::Identity => pre_head,
        };
        TrunkTape {
            layer_io,
            out3_in,
            out3_elu,
            out1_elu,
            head_out,
        }
    }

    /// Returns the gradient w.r.t. the trunk's input feature stack.
    fn backward<S: Scalar>(
        &self,
        store: &ParamStore<S>,
        tape: &TrunkTape<S>,
        dhead: &[S],
        grads: &mut Grads<S>,
    ) -> Planes<S> {
        let dpre_head: Vec<S> = match self.head {
            HeadActivation::Tanh => tape
                .head_out
                .iter()
                .zip(dhead)
                .map(|(&y, &g)| g * (S::ONE - y * y))
                .collect(),
            HeadActivation::Identity => dhead.to_vec(),
        };
        let dflat = self.fc.backward(store, &tape.out1_elu.data, &dpre_head, grads);
        let dout1 = elu_backward(
            &tape.out1_elu,
            &Planes {
                channels: 1,
                data: dflat,
            },
        );
        let dout3_elu = self
            .out1
            .backward(store, &tape.out3_elu, &dout1, grads, true)
            .unwrap();
        let dout3 = elu_backward(&tape.out3_elu, &dout3_elu);
        let mut dcur = self
            .out3
            .backward(store, &tape.out3_in, &dout3, grads, true)
            .unwrap();
        // dcur holds the gradient w.r.t. the post-skip output of the layer
        // being processed. A skip at layer i adds the input of layer i-1
        // (the post-skip output of layer i-2, or the trunk input for i = 1),
        // so its gradient is parked until the walk reaches that tensor.
        let n = self.convs.len();
        let mut parked: Vec<Option<Planes<S>>> = (0..n).map(|_| None).collect();
        let mut input_skip: Option<Planes<S>> = None;
        for (i, conv) in self.convs.iter().enumerate().rev() {
            if let Some(skip) = parked[i].take() {
                dcur = add_planes(&dcur, &skip);
            }
            if Self::skip_at(i) {
                if i >= 2 {
                    parked[i - 2] = Some(dcur.clone());
                } else {
                    input_skip = Some(dcur.clone());
                }
            }
            let (input, pre_skip, _) = &tape.layer_io[i];
            let dpre = elu_backward(pre_skip, &dcur);
            dcur = conv.backward(store, input, &dpre, grads, true).unwrap();
        }
        if let Some(skip) = input_skip {
            dcur = add_planes(&dcur, &skip);
        }
        dcur
    }
}

/// The embedding function F: boards and observation histories map into a
/// shared space where distance to the anchor models likelihood.
#[derive(Debug, Clone)]
pub struct SiameseModel<S> {
    pub store: ParamStore<S>,
    pub config: NetworkConfig,
    board_encoder: Encoder,
    observation_encoder: Encoder,
    trunk: Trunk,
}

pub struct EmbedTape<S> {
    encoder_is_board: bool,
    enc: EncoderTape<S>,
    trunk: TrunkTape<S>,
}

impl<S: Scalar> EmbedTape<S> {
    pub fn embedding(&self) -> &[S] {
        self.trunk.output()
    }
}

impl<S: Scalar> SiameseModel<S> {
    pub fn new(config: NetworkConfig, seed: u64) -> SiameseModel<S> {
        config.validate();
        let mut store = ParamStore::new();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let board_encoder = Encoder::new(&mut store, &mut rng, "board_enc", BOARD_CHANNELS, &config);
        let observation_encoder =
            Encoder::new(&mut store, &mut rng, "obs_enc", HISTORY_CHANNELS, &config);
        let trunk = Trunk::new(
            &mut store,
            &mut rng,
            "trunk",
            &config,
            config.embedding_dim,
            HeadActivation::Tanh,
        );
        SiameseModel {
            store,
            config,
            board_encoder,
            observation_encoder,
            trunk,
        }
    }

    fn encoder_for(&self, channels: usize) -> Result<(&Encoder, bool), ModelError> {
        if channels == BOARD_CHANNELS {
            Ok((&self.board_encoder, true))
        } else if channels == HISTORY_CHANNELS {
            Ok((&self.observation_encoder, false))
        } else {
            Err(ModelError::UnsupportedChannels(channels))
        }
    }

    pub fn embed_tape(&self, input: &crate::encoding::PlaneStack) -> Result<EmbedTape<S>, ModelError> {
        let (encoder, is_board) = self.encoder_for(input.channels)?;
        let enc = encoder.forward(&self.store, Planes::from_stack(input));
        let trunk = self.trunk.forward(&self.store, enc.acts.last().unwrap().clone());
        Ok(EmbedTape {
            encoder_is_board: is_board,
            enc,
            trunk,
        })
    }

    /// Deterministic D-vector with every coordinate in (-1, 1).
    pub fn embed(&self, input: &crate::encoding::PlaneStack) -> Result<Vec<S>, ModelError> {
        Ok(self.embed_tape(input)?.trunk.head_out)
    }

    /// Backpropagate a gradient w.r.t. one embedding through trunk and the
    /// encoder that produced it.
    pub fn backward(&self, tape: &EmbedTape<S>, dembed: &[S], grads: &mut Grads<S>) {
        let dfeat = self.trunk.backward(&self.store, &tape.trunk, dembed, grads);
        let encoder = if tape.encoder_is_board {
            &self.board_encoder
        } else {
            &self.observation_encoder
        };
        encoder.backward(&self.store, &tape.enc, dfeat, grads);
    }
}

/// CNN baseline: one network over the concatenated history+board input,
/// trained as a binary classifier of "is this the true board".
#[derive(Debug, Clone)]
pub struct CnnModel<S> {
    pub store: ParamStore<S>,
    pub config: NetworkConfig,
    encoder: Encoder,
    trunk: Trunk,
}

pub struct CnnTape<S> {
    enc: EncoderTape<S>,
    trunk: TrunkTape<S>,
}

impl<S: Scalar> CnnTape<S> {
    pub fn logit(&self) -> S {
        self.trunk.head_out[0]
    }

    pub fn probability(&self) -> S {
        sigmoid(self.logit())
    }
}

impl<S: Scalar> CnnModel<S> {
    pub fn new(config: NetworkConfig, seed: u64) -> CnnModel<S> {
        config.validate();
        let mut store = ParamStore::new();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let encoder = Encoder::new(&mut store, &mut rng, "pair_enc", PAIR_CHANNELS, &config);
        let trunk = Trunk::new(
            &mut store,
            &mut rng,
            "trunk",
            &config,
            1,
            HeadActivation::Identity,
        );
        CnnModel {
            store,
            config,
            encoder,
            trunk,
        }
    }

    pub fn forward_tape(&self, input: &crate::encoding::PlaneStack) -> Result<CnnTape<S>, ModelError> {
        if input.channels != PAIR_CHANNELS {
            return Err(ModelError::UnsupportedChannels(input.channels));
        }
        let enc = self.encoder.forward(&self.store, Planes::from_stack(input));
        let trunk = self.trunk.forward(&self.store, enc.acts.last().unwrap().clone());
        Ok(CnnTape { enc, trunk })
    }

    /// Predicted probability that the pair contains the true board; always
    /// in (0, 1).
    pub fn predict(&self, input: &crate::encoding::PlaneStack) -> Result<S, ModelError> {
        Ok(self.forward_tape(input)?.probability())
    }

    pub fn backward(&self, tape: &CnnTape<S>, dlogit: S, grads: &mut Grads<S>) {
        let dfeat = self.trunk.backward(&self.store, &tape.trunk, &[dlogit], grads);
        self.encoder.backward(&self.store, &tape.enc, dfeat, grads);
    }
}
