import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO_ROOT))  # makes tools.make_fixtures importable

FIXTURES = REPO_ROOT / "fixtures"
NOTEBOOK_DIR = FIXTURES / "notebooks"
DATASET_PATH = FIXTURES / "labeled_cells.json"

TRAIN_SEED = 7


@pytest.fixture(scope="session")
def notebook_dir() -> Path:
    return NOTEBOOK_DIR


@pytest.fixture(scope="session")
def notebook_paths() -> list[Path]:
    return sorted(NOTEBOOK_DIR.glob("*.ipynb"))


@pytest.fixture(scope="session")
def labeled_dataset():
    from jupylabel.evalkit import load_dataset
    return load_dataset(DATASET_PATH)


@pytest.fixture(scope="session")
def train_config():
    from jupylabel.evalkit import SplitSpec
    from jupylabel.gbdt import Hyperparams
    from jupylabel.training import TrainConfig
    return TrainConfig(split=SplitSpec(seed=TRAIN_SEED),
                       hyperparams=Hyperparams(seed=TRAIN_SEED))


@pytest.fixture(scope="session")
def trained(labeled_dataset, train_config):
    """(ActivityModelSet, training report) trained once per session."""
    from jupylabel.training import train_model_set
    return train_model_set(labeled_dataset, train_config)


@pytest.fixture(scope="session")
def model_set(trained):
    return trained[0]


@pytest.fixture(scope="session")
def artifact_path(tmp_path_factory, model_set) -> Path:
    from jupylabel.gbdt import save_model_set
    path = tmp_path_factory.mktemp("artifact") / "models.json"
    save_model_set(model_set, path)
    return path
