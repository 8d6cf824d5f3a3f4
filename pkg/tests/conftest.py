import sys

import numpy as np
import pytest

from eyeglass_synth.assets import eyeglass_assets, make_face, render_face_image


@pytest.fixture(scope="session")
def assets():
    return eyeglass_assets()


@pytest.fixture(scope="session")
def face():
    return make_face(roll_deg=4.0)


@pytest.fixture(scope="session")
def face_image(face):
    return render_face_image(face)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
