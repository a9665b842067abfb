import pytest

from hsicgan.dataio import ImageDataset
from hsicgan.latents import LatentSpec, Rng
from hsicgan.training import TrainConfig, Trainer

TINY_SPEC = LatentSpec(z_dim=4, cat_classes=3, cont_dim=2)
TINY_IMAGE_DIM = 6


def tiny_dataset(n: int = 30, dim: int = TINY_IMAGE_DIM, seed: int = 0) -> ImageDataset:
    images = Rng(seed).uniform(-1.0, 1.0, (n, dim))
    return ImageDataset(images, None, 1, dim)


def tiny_config(model_kind: str = "gan", **overrides) -> TrainConfig:
    base = dict(model_kind=model_kind, batch=10, epochs=1, seed=11,
                sigma_x=1.0, dataset="squares")
    base.update(overrides)
    return TrainConfig(**base)


def tiny_trainer(cfg: TrainConfig, dataset: ImageDataset) -> Trainer:
    return Trainer(cfg, dataset, latent=TINY_SPEC, g_hidden=(8, 8), d_hidden=(8, 8))


@pytest.fixture
def make_tiny_trainer():
    def factory(model_kind: str = "gan", n: int = 30, **overrides):
        dataset = tiny_dataset(n=n)
        return tiny_trainer(tiny_config(model_kind, **overrides), dataset), dataset
    return factory


def snapshot(params) -> dict[str, bytes]:
    return {p.name: p.value.data.tobytes() for p in params}
