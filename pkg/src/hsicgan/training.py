"""Adversarial training objectives and the alternating optimisation loop.

Three model kinds share one loop: a plain adversarial game, the variant with
recognition heads trained by a latent-regression loss, and the variant that
instead maximises the kernel dependence between generated images and their
codes. The generator loss defaults to the non-saturating form -E[log D(fake)];
the literal E[log(1 - D(fake))] form stays available behind `saturating`.

Update order per step (and per-step draw order): sample latents, one Adam
step on the discriminator with detached fakes, resample latents, one Adam
step on the generator (plus recognition heads and trunk when they exist).
The dependence penalty never touches the discriminator: it is a function of
generated images and codes only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .autodiff import (Adam, Parameter, Tensor, add, backward_into, mean_all,
                       negate, scale, softmax_cross_entropy, softplus, square, sub)
from .dataio import ImageDataset
from .hsic import HsicConfig, hsic_biased
from .latents import LatentBatch, LatentSpec, Rng, concat_code, sample_latents
from .networks import DISC_HIDDEN, GEN_HIDDEN, Discriminator, Generator, QOutput

MODEL_KINDS = ("gan", "infogan", "hsic-infogan")


@dataclass(frozen=True)
class TrainConfig:
    """All knobs of a run; the defaults are the reference configuration
    (batch 100, 100 epochs, Adam at 2e-4 / 1e-3)."""

    model_kind: str = "gan"
    lam: float = 1.0            # weight of the dependence penalty
    lambda_info: float = 1.0    # weight of the latent-regression loss
    sigma_x: float = 5.0        # image-side kernel bandwidth
    sigma_c: float | None = None  # code-side bandwidth; defaults to sigma_x
    lr_d: float = 2e-4
    lr_g: float = 1e-3
    batch: int = 100
    epochs: int = 100
    seed: int = 0
    dataset: str = "mnist"
    z_prior: str = "uniform"
    saturating: bool = False    # literal min log(1-D) generator loss
    split_hsic: bool = False    # separate categorical/continuous penalty terms

    def __post_init__(self):
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.lam < 0.0 or self.lambda_info < 0.0:
            raise ValueError("loss weights must be non-negative")
        if self.lr_d <= 0.0 or self.lr_g <= 0.0:
            raise ValueError("learning rates must be positive")
        if self.batch < 1 or self.epochs < 0:
            raise ValueError("batch must be >= 1 and epochs >= 0")

    @property
    def hsic_config(self) -> HsicConfig:
        return HsicConfig(self.sigma_x, self.sigma_c)

    def latent_spec(self) -> LatentSpec:
        return LatentSpec(z_prior=self.z_prior)


@dataclass
class LossReport:
    """Per-step scalar diagnostics; fields not applicable to the model kind
    stay None."""

    step: int
    d_loss: float
    g_adv_loss: float
    hsic_value: float | None = None
    aux_loss: float | None = None
    magnitude_ratio: float | None = None


class TrainingDiverged(RuntimeError):
    """A loss went non-finite; carries the offending report."""

    def __init__(self, report: LossReport):
        super().__init__(f"non-finite loss at step {report.step}: {report}")
        self.report = report


# ---------------------------------------------------------------------------
# objectives

def _adv_loss_from_logit(logit: Tensor, saturating: bool) -> Tensor:
    if saturating:
        # minimises E[log(1 - D(fake))] directly
        return negate(mean_all(softplus(logit)))
    return mean_all(softplus(negate(logit)))


def d_loss(d: Discriminator, real: Tensor, fake: Tensor) -> Tensor:
    """-E[log D(real)] - E[log(1 - D(fake))] in stable logit form.

    `fake` must be detached: the discriminator update must not move the
    generator.
    """
    logit_real, _ = d.forward(real)
    logit_fake, _ = d.forward(fake)
    return add(mean_all(softplus(negate(logit_real))), mean_all(softplus(logit_fake)))


def g_loss_adv(d: Discriminator, fake: Tensor, saturating: bool = False) -> Tensor:
    """Generator's adversarial term, -E[log D(fake)] by default."""
    logit, _ = d.forward(fake)
    return _adv_loss_from_logit(logit, saturating)


def infogan_aux_loss(q_out: QOutput | None, batch: LatentBatch) -> Tensor:
    """Cross entropy on the categorical code plus MSE on the continuous code.

    The MSE term is the fixed-unit-variance Gaussian log-likelihood up to
    constants. Minimised jointly by the generator and the recognition heads.
    """
    if q_out is None:
        raise ValueError("latent-regression loss needs recognition heads on the discriminator")
    ce = softmax_cross_entropy(q_out.cat_logits, Tensor(batch.c_cat))
    mse = mean_all(square(sub(q_out.cont_means, Tensor(batch.c_cont))))
    return add(ce, mse)


def hsic_penalty(fake: Tensor, batch: LatentBatch, cfg: HsicConfig,
                 split: bool = False) -> Tensor:
    """Dependence between generated images and their latent codes.

    The generator *maximises* this (its loss subtracts the weighted value).
    With `split`, the categorical and continuous codes get separate terms
    summed instead of one concatenated code matrix.
    """
    if split:
        return add(hsic_biased(fake, batch.c_cat, cfg),
                   hsic_biased(fake, batch.c_cont, cfg))
    return hsic_biased(fake, concat_code(batch), cfg)


# ---------------------------------------------------------------------------
# the loop

class Trainer:
    """Owns the models, optimisers and the random stream of one run.

    Draw order, fixed for reproducibility: generator init, discriminator
    init, then per epoch one index permutation, then per step the
    discriminator's latent batch followed by the generator's.
    """

    def __init__(self, cfg: TrainConfig, dataset: ImageDataset,
                 latent: LatentSpec | None = None,
                 g_hidden: tuple[int, ...] = GEN_HIDDEN,
                 d_hidden: tuple[int, ...] = DISC_HIDDEN):
        self.cfg = cfg
        self.latent = cfg.latent_spec() if latent is None else latent
        self.rng = Rng(cfg.seed)
        recognition = self.latent if cfg.model_kind == "infogan" else None
        self.g = Generator(self.latent, dataset.image_dim, self.rng, hidden=g_hidden)
        self.d = Discriminator(dataset.image_dim, self.rng, hidden=d_hidden,
                               recognition=recognition)
        self.opt_d = Adam(self.d.trunk_and_adv_parameters(), lr=cfg.lr_d)
        g_side = list(self.g.parameters())
        if cfg.model_kind == "infogan":
            # recognition heads and the shared trunk also descend the
            # generator-side objective
            g_side += self.d.recognition_parameters() + self.d.trunk.parameters()
        self.opt_g = Adam(g_side, lr=cfg.lr_g)
        self.step_count = 0

    def all_parameters(self) -> list[Parameter]:
        return self.g.parameters() + self.d.parameters()

    def train_step(self, real: np.ndarray) -> LossReport:
        cfg = self.cfg
        m = real.shape[0]

        latents_d = sample_latents(self.latent, m, self.rng)
        fake_detached = self.g.forward(latents_d).detach()
        dl = d_loss(self.d, Tensor(real), fake_detached)
        backward_into(dl, self.opt_d.params)
        self.opt_d.step()

        latents_g = sample_latents(self.latent, m, self.rng)
        fake = self.g.forward(latents_g)
        logit, q_out = self.d.forward(fake)
        g_adv = _adv_loss_from_logit(logit, cfg.saturating)
        total = g_adv
        hsic_value = aux_value = ratio = None
        if cfg.model_kind == "hsic-infogan":
            if cfg.lam > 0.0:
                penalty = hsic_penalty(fake, latents_g, cfg.hsic_config, cfg.split_hsic)
                total = add(g_adv, scale(penalty, -cfg.lam))
                hsic_value = penalty.item()
            else:
                # report-only; with zero weight the update graph must be the
                # plain adversarial one, bit for bit
                hsic_value = hsic_penalty(fake.detach(), latents_g, cfg.hsic_config,
                                          cfg.split_hsic).item()
        elif cfg.model_kind == "infogan":
            aux = infogan_aux_loss(q_out, latents_g)
            total = add(g_adv, scale(aux, cfg.lambda_info))
            aux_value = aux.item()
        backward_into(total, self.opt_g.params)
        self.opt_g.step()

        if cfg.model_kind == "hsic-infogan" and cfg.lam > 0.0 and hsic_value > 0.0:
            ratio = abs(g_adv.item()) / (cfg.lam * hsic_value)
        report = LossReport(self.step_count, dl.item(), g_adv.item(),
                            hsic_value, aux_value, ratio)
        self.step_count += 1
        values = [report.d_loss, report.g_adv_loss, report.hsic_value, report.aux_loss]
        if not all(np.isfinite(v) for v in values if v is not None):
            raise TrainingDiverged(report)
        return report

    def run(self, dataset: ImageDataset,
            on_epoch: Callable[["Trainer", int], None] | None = None) -> list[LossReport]:
        history: list[LossReport] = []
        n = len(dataset)
        for epoch in range(self.cfg.epochs):
            order = self.rng.permutation(n)
            for start in range(0, n, self.cfg.batch):
                batch = dataset.images[order[start:start + self.cfg.batch]]
                history.append(self.train_step(batch))
            if on_epoch is not None:
                on_epoch(self, epoch)
        return history


def train(cfg: TrainConfig, dataset: ImageDataset,
          on_epoch: Callable[[Trainer, int], None] | None = None
          ) -> tuple[list[Parameter], list[LossReport]]:
    """Run a full training; returns the final parameters and the history."""
    trainer = Trainer(cfg, dataset)
    history = trainer.run(dataset, on_epoch)
    return trainer.all_parameters(), history


def calibrate_lambda(cfg: TrainConfig, dataset: ImageDataset,
                     latent: LatentSpec | None = None,
                     g_hidden: tuple[int, ...] = GEN_HIDDEN,
                     d_hidden: tuple[int, ...] = DISC_HIDDEN) -> float:
    """Penalty weight that puts the initial magnitude ratio at exactly 1.

    Probes a freshly initialised run: one latent batch against the first
    `batch` images, then lambda = |adversarial loss| / dependence value.
    """
    probe = Trainer(cfg, dataset, latent=latent, g_hidden=g_hidden, d_hidden=d_hidden)
    m = min(cfg.batch, len(dataset))
    latents = sample_latents(probe.latent, m, probe.rng)
    fake = probe.g.forward(latents)
    g_adv = g_loss_adv(probe.d, fake, cfg.saturating).item()
    value = hsic_penalty(fake.detach(), latents, cfg.hsic_config, cfg.split_hsic).item()
    if value <= 0.0:
        raise ValueError(f"cannot calibrate against dependence value {value}")
    return abs(g_adv) / value


# ---------------------------------------------------------------------------
# magnitude diagnostics

@dataclass
class EpochMagnitude:
    epoch: int
    median_abs_g_adv: float
    median_weighted_hsic: float
    ratio: float
    flagged: bool


@dataclass
class MagnitudeSummary:
    rows: list[EpochMagnitude] = field(default_factory=list)

    @property
    def flagged_epochs(self) -> list[int]:
        return [r.epoch for r in self.rows if r.flagged]


def magnitude_report(history: list[LossReport], lam: float,
                     steps_per_epoch: int) -> MagnitudeSummary:
    """Per-epoch medians of |adversarial loss| and weighted dependence value.

    An epoch is flagged when the two differ by more than a factor of 10,
    the same-order-of-magnitude rule used for tuning.
    """
    if lam <= 0.0:
        raise ValueError("magnitude report needs a positive penalty weight")
    if steps_per_epoch < 1:
        raise ValueError("steps_per_epoch must be positive")
    if any(r.hsic_value is None for r in history):
        raise ValueError("magnitude report needs dependence values in every step report")
    summary = MagnitudeSummary()
    for start in range(0, len(history), steps_per_epoch):
        chunk = history[start:start + steps_per_epoch]
        med_g = float(np.median([abs(r.g_adv_loss) for r in chunk]))
        med_h = lam * float(np.median([r.hsic_value for r in chunk]))
        ratio = med_g / med_h if med_h > 0.0 else float("inf")
        flagged = not (0.1 <= ratio <= 10.0)
        summary.rows.append(EpochMagnitude(start // steps_per_epoch, med_g, med_h,
                                           ratio, flagged))
    return summary
