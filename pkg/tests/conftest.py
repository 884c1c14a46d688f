import numpy as np
import pytest

from hdrsteg import image_io

from scenes import hdr_luminance, hdr_rgb


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def small_scene():
    """64x64 HDR luminance with n_x >= 10."""
    return hdr_luminance((64, 64), seed=7)


@pytest.fixture(scope="session")
def tile_corpus(tmp_path_factory):
    """>= 20 float-TIFF 512x512 tiles with n_x >= 10, produced the same way as
    `hdrsteg prep`: RGB HDR source -> luminance -> tiles -> capacity filter."""
    root = tmp_path_factory.mktemp("corpus")
    paths = []
    for seed in range(4):
        rgb = hdr_rgb((1024, 1536), seed=100 + seed, stops=16.0, floor=0.02)
        lum = image_io.extract_luminance(rgb)
        # each tile gets its own exposure so the min pixel sits at 0.02..0.03
        for idx, t in enumerate(image_io.tile(lum, 512)):
            t = (t * np.float32(0.02 + 0.01 * (idx % 2)) / t.min()).astype(np.float32)
            if not image_io.filter_by_capacity([t], 10):
                continue
            p = root / f"scene{seed}_{idx}.tif"
            image_io.write_cover(t, p)
            paths.append(p)
    return paths


_ACCEPTANCE = pytest.StashKey[list]()


@pytest.fixture
def acceptance_log(request):
    return request.config.stash.setdefault(_ACCEPTANCE, [])


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_ACCEPTANCE, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
