import numpy as np
import pytest
from PIL import Image


def write_noise_png(path, seed, size=(48, 48)):
    rng = np.random.default_rng(seed)
    pixels = rng.integers(0, 256, size=(size[1], size[0], 3), dtype=np.uint8)
    Image.fromarray(pixels, "RGB").save(path)


@pytest.fixture
def image_tree(tmp_path):
    """10 deterministic noise images split over 3 synset subdirectories."""
    layout = {"n01440764": 4, "n02084071": 3, "n03000134": 3}
    seed = 0
    for synset_id, count in layout.items():
        subdir = tmp_path / "images" / synset_id
        subdir.mkdir(parents=True)
        for k in range(count):
            write_noise_png(subdir / f"img_{k:02d}.png", seed)
            seed += 1
    return tmp_path / "images"
