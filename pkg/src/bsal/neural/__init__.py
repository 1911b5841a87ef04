"""Learnable stack: autodiff, GCN layers, attention fusion, joint loss,
training loop and gradient checking."""

from .autodiff import Parameter, Tensor
from .gradcheck import grad_check
from .layers import (FusionParams, GcnLayer, PairEmbedding, Readout,
                     attention_fuse, bce_with_logits, gcn_forward, joint_loss,
                     normalized_adjacency, readout)
from .model import (CHANNELS, Batch, GnnChannel, LinkPredictor, ModelConfig,
                    PreparedExample, make_batch, prepare_dataset, prepare_example)
from .training import Adam, EpochStats, TrainConfig, TrainResult, train

__all__ = [
    "Adam", "Batch", "CHANNELS", "EpochStats", "FusionParams", "GcnLayer",
    "GnnChannel", "LinkPredictor", "ModelConfig", "PairEmbedding", "Parameter",
    "PreparedExample", "Readout", "Tensor", "TrainConfig", "TrainResult",
    "attention_fuse", "bce_with_logits", "gcn_forward", "grad_check",
    "joint_loss", "make_batch", "normalized_adjacency", "prepare_dataset",
    "prepare_example", "readout", "train",
]
