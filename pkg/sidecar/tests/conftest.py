import os
import shutil

import pytest
from PIL import Image

DATA_DIR = os.path.join(os.path.dirname(__file__), "data")


@pytest.fixture
def data_dir() -> str:
    return DATA_DIR


@pytest.fixture
def frames_workdir(tmp_path):
    """A working directory holding decodable frames plus the stub table."""
    frames = tmp_path / "frames"
    frames.mkdir()
    for name in ("m_0.jpg", "m_2.jpg", "m_4.jpg"):
        Image.new("RGB", (640, 480), (20, 120, 40)).save(frames / name)
    (frames / "not_an_image.jpg").write_text("plain text, not jpeg bytes")
    shutil.copy(os.path.join(DATA_DIR, "stub_table.tsv"), tmp_path / "stub_table.tsv")
    return tmp_path
