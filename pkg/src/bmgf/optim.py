"""Adam with an L2 penalty folded into the gradient, and global-norm clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError
from .tensor import Tensor


def decays(name: str) -> bool:
    """L2 applies to every trainable weight except biases."""
    return not name.endswith("bias")


@dataclass
class OptimizerState:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0005
    step: int = 0
    first_moment: dict[str, np.ndarray] = field(default_factory=dict)
    second_moment: dict[str, np.ndarray] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "lr": self.lr, "beta1": self.beta1, "beta2": self.beta2, "eps": self.eps,
            "weight_decay": self.weight_decay, "step": self.step,
            "first_moment": {k: {"shape": list(v.shape), "values": v.ravel().tolist()} for k, v in self.first_moment.items()},
            "second_moment": {k: {"shape": list(v.shape), "values": v.ravel().tolist()} for k, v in self.second_moment.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "OptimizerState":
        def arrays(entries):
            return {k: np.array(v["values"], dtype=np.float64).reshape(v["shape"]) for k, v in entries.items()}

        return cls(d["lr"], d["beta1"], d["beta2"], d["eps"], d["weight_decay"], d["step"],
                   arrays(d["first_moment"]), arrays(d["second_moment"]))


def adam_step(params: dict[str, Tensor], state: OptimizerState) -> None:
    """One bias-corrected Adam update in place.  ``.grad`` is left untouched."""
    for name, p in params.items():
        if p.grad is None:
            raise ContractError(f"adam_step: parameter {name} has no gradient")
        m = state.first_moment.get(name)
        if m is not None and m.shape != p.shape:
            raise ContractError(f"adam_step: moment shape {m.shape} does not match parameter {name} {p.shape}")
    state.step += 1
    t = state.step
    correction1 = 1.0 - state.beta1 ** t
    correction2 = 1.0 - state.beta2 ** t
    for name, p in params.items():
        g = p.grad
        if state.weight_decay and decays(name):
            g = g + state.weight_decay * p.data
        m = state.first_moment.setdefault(name, np.zeros_like(p.data))
        v = state.second_moment.setdefault(name, np.zeros_like(p.data))
        m *= state.beta1
        m += (1.0 - state.beta1) * g
        v *= state.beta2
        v += (1.0 - state.beta2) * g * g
        p.data -= state.lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)


def global_norm(params) -> float:
    tensors = params.values() if isinstance(params, dict) else params
    return float(np.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in tensors if p.grad is not None)))


def clip_grad_l2(params, threshold: float) -> float:
    """Rescale all gradients so their global L2 norm is at most ``threshold``.

    Returns the norm before clipping.
    """
    if not threshold > 0:
        raise ContractError(f"clip_grad_l2: threshold must be > 0, got {threshold}")
    norm = global_norm(params)
    if norm > threshold:
        scale = threshold / norm
        for p in (params.values() if isinstance(params, dict) else params):
            if p.grad is not None:
                p.grad *= scale
    return norm
