import os
from pathlib import Path

import numpy as np
import pytest
import torch

import askpaint.reference as reference
from askpaint.checkpoint import load_checkpoint
from askpaint.model import ModelConfig, build_model

CACHE_DIR = Path(os.environ.get("ASKPAINT_TEST_CACHE", Path(__file__).resolve().parent.parent / ".cache" / "askpaint-tests"))


@pytest.fixture
def tiny_config() -> ModelConfig:
    return ModelConfig(image_size=(16, 16), color_channels=2, depth=2, base_width=8, seed=3)


@pytest.fixture
def tiny_model(tiny_config):
    return build_model(tiny_config)


@pytest.fixture(scope="session")
def reference_checkpoint_path() -> Path:
    """The trained toy checkpoint (noise-injected); trains once, then cached."""
    return reference.ensure_reference_checkpoint(CACHE_DIR, noise_enabled=True, verbose=True)


@pytest.fixture(scope="session")
def nonoise_checkpoint_path() -> Path:
    """Same setup trained with answer noise disabled."""
    return reference.ensure_reference_checkpoint(CACHE_DIR, noise_enabled=False, verbose=True)


@pytest.fixture(scope="session")
def reference_model(reference_checkpoint_path):
    model = load_checkpoint(reference_checkpoint_path)
    model.eval()
    return model


@pytest.fixture(scope="session")
def nonoise_model(nonoise_checkpoint_path):
    model = load_checkpoint(nonoise_checkpoint_path)
    model.eval()
    return model


@pytest.fixture(scope="session")
def heldout_items():
    return reference.heldout_items(500)


@pytest.fixture
def rng():
    return np.random.default_rng(0)


@pytest.fixture
def torch_gen():
    return torch.Generator().manual_seed(0)
