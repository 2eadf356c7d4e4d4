import json
from pathlib import Path

import numpy as np
import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA


@pytest.fixture(scope="session")
def toycorpus_dir() -> Path:
    return DATA / "toycorpus"


@pytest.fixture(scope="session")
def quality_tiles() -> list[np.ndarray]:
    from hqcrop import imaging

    paths = sorted((DATA / "quality50").glob("tile_*.png"))
    assert len(paths) == 50
    return [imaging.load_image(p) for p in paths]


@pytest.fixture(scope="session")
def pristine_images() -> list[np.ndarray]:
    from hqcrop import imaging

    paths = sorted((DATA / "pristine").glob("*.png"))
    assert len(paths) == 10
    return [imaging.load_image(p) for p in paths]


@pytest.fixture()
def toy_config(toycorpus_dir, tmp_path):
    """Pipeline config over the committed toy corpus, tmp output dirs."""
    from hqcrop.annotations import DatasetOrigin
    from hqcrop.orchestrator import InputSpec, PipelineConfig

    def make(**overrides):
        kwargs = dict(
            inputs=[
                InputSpec(
                    origin=DatasetOrigin.COCO,
                    annotations=str(toycorpus_dir / "annotations.json"),
                    images_dir=str(toycorpus_dir / "images"),
                )
            ],
            output_dir=str(tmp_path / "out"),
            checkpoint_dir=None,
        )
        kwargs.update(overrides)
        return PipelineConfig(**kwargs)

    return make


@pytest.fixture(scope="session")
def expected_funnel(toycorpus_dir) -> dict:
    with open(toycorpus_dir / "expected_funnel.json") as f:
        return json.load(f)
