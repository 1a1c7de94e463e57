from pinnlab.autodiff.tape import (
    Jet2,
    NodeRef,
    Tape,
    backward,
    jet_activation,
    jet_affine,
    jet_seed,
    node_binary,
    node_unary,
)
from pinnlab.autodiff.arrays import ArrayNode, ArrayTape, BatchJet, JetLayout

__all__ = [
    "ArrayNode",
    "ArrayTape",
    "BatchJet",
    "Jet2",
    "JetLayout",
    "NodeRef",
    "Tape",
    "backward",
    "jet_activation",
    "jet_affine",
    "jet_seed",
    "node_binary",
    "node_unary",
]
