"""Generator and discriminator MLPs.

The discriminator is a shared trunk with an adversarial head and, when the
recognition heads are enabled, extra heads predicting the categorical logits
and continuous code means from the trunk features.

Initialisation is Glorot-uniform for weights and zero for biases, drawn
layer by layer (generator first, then discriminator trunk, then heads) so a
seed pins every parameter.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autodiff import Parameter, Tensor, add, concat_cols, leaky_relu, matmul, tanh
from .latents import LatentBatch, LatentSpec, Rng

GEN_HIDDEN = (256, 512)
DISC_HIDDEN = (512, 256)
LEAKY_SLOPE = 0.2


def glorot_uniform(rng: Rng, fan_in: int, fan_out: int) -> np.ndarray:
    a = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-a, a, (fan_in, fan_out))


class Linear:
    def __init__(self, name: str, fan_in: int, fan_out: int, rng: Rng):
        self.w = Parameter(f"{name}.w", Tensor(glorot_uniform(rng, fan_in, fan_out)))
        self.b = Parameter(f"{name}.b", Tensor(np.zeros(fan_out)))

    def forward(self, x: Tensor) -> Tensor:
        return add(matmul(x, self.w.value), self.b.value)

    def parameters(self) -> list[Parameter]:
        return [self.w, self.b]


class Mlp:
    """Fully connected stack, leaky-relu hidden units, configurable last layer."""

    def __init__(self, name: str, widths: list[int], rng: Rng,
                 out_activation: str = "linear", alpha: float = LEAKY_SLOPE):
        if len(widths) < 3:
            raise ValueError(f"need at least one hidden layer, got widths {widths}")
        if min(widths) < 1:
            raise ValueError(f"widths must be positive, got {widths}")
        if out_activation not in ("linear", "tanh", "leaky_relu"):
            raise ValueError(f"unknown output activation {out_activation!r}")
        self.layers = [Linear(f"{name}.{i}", widths[i], widths[i + 1], rng)
                       for i in range(len(widths) - 1)]
        self.out_activation = out_activation
        self.alpha = alpha

    def forward(self, x: Tensor) -> Tensor:
        for layer in self.layers[:-1]:
            x = leaky_relu(layer.forward(x), self.alpha)
        x = self.layers[-1].forward(x)
        if self.out_activation == "tanh":
            return tanh(x)
        if self.out_activation == "leaky_relu":
            return leaky_relu(x, self.alpha)
        return x

    def parameters(self) -> list[Parameter]:
        return [p for layer in self.layers for p in layer.parameters()]


class Generator:
    """Maps (z, one-hot code, continuous code) to tanh-bounded flat images."""

    def __init__(self, spec: LatentSpec, image_dim: int, rng: Rng,
                 hidden: tuple[int, ...] = GEN_HIDDEN):
        self.spec = spec
        self.image_dim = image_dim
        self.net = Mlp("g", [spec.input_dim, *hidden, image_dim], rng, out_activation="tanh")

    def forward(self, batch: LatentBatch) -> Tensor:
        x = concat_cols([Tensor(batch.z), Tensor(batch.c_cat), Tensor(batch.c_cont)])
        if x.shape[1] != self.spec.input_dim:
            raise ValueError(f"latent width {x.shape[1]} != expected {self.spec.input_dim}")
        return self.net.forward(x)

    def parameters(self) -> list[Parameter]:
        return self.net.parameters()


@dataclass
class QOutput:
    cat_logits: Tensor   # (m, cat_classes)
    cont_means: Tensor   # (m, cont_dim)


class Discriminator:
    """Trunk + adversarial logit head, with optional recognition heads.

    The adversarial head emits a raw logit; losses apply the sigmoid in
    stable fused form. Recognition heads exist only when `recognition` is a
    LatentSpec, and then `forward` returns their outputs as well.
    """

    def __init__(self, image_dim: int, rng: Rng, hidden: tuple[int, ...] = DISC_HIDDEN,
                 recognition: LatentSpec | None = None):
        self.image_dim = image_dim
        self.trunk = Mlp("d.trunk", [image_dim, *hidden], rng, out_activation="leaky_relu")
        self.adv = Linear("d.adv", hidden[-1], 1, rng)
        if recognition is not None:
            self.q_cat = Linear("d.q_cat", hidden[-1], recognition.cat_classes, rng)
            self.q_cont = Linear("d.q_cont", hidden[-1], recognition.cont_dim, rng)
        else:
            self.q_cat = None
            self.q_cont = None

    @property
    def has_recognition(self) -> bool:
        return self.q_cat is not None

    def forward(self, images: Tensor) -> tuple[Tensor, QOutput | None]:
        if images.shape[1] != self.image_dim:
            raise ValueError(f"image width {images.shape[1]} != expected {self.image_dim}")
        h = self.trunk.forward(images)
        logit = self.adv.forward(h)
        if not self.has_recognition:
            return logit, None
        return logit, QOutput(self.q_cat.forward(h), self.q_cont.forward(h))

    def trunk_and_adv_parameters(self) -> list[Parameter]:
        return self.trunk.parameters() + self.adv.parameters()

    def recognition_parameters(self) -> list[Parameter]:
        if not self.has_recognition:
            return []
        return self.q_cat.parameters() + self.q_cont.parameters()

    def parameters(self) -> list[Parameter]:
        return self.trunk_and_adv_parameters() + self.recognition_parameters()


def count_params(params: list[Parameter]) -> int:
    return sum(p.value.data.size for p in params)
