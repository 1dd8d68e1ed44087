import pytest

from softjig.sim import ContactSpec, JigGeometry, StereoRig, generate_scene


@pytest.fixture(scope="session")
def geom():
    return JigGeometry()


@pytest.fixture(scope="session")
def rig():
    return StereoRig()


@pytest.fixture(scope="session")
def clean_scene(geom, rig):
    """Noiseless contact: D = 60 mm, alpha = 10 deg, theta = 30 deg."""
    return generate_scene(geom, rig, ContactSpec(60, 10, 30, 10), blur_sigma=2.0, noise_sigma=0.0, seed=0)


ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[k]
        terminalreporter.write_line(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {detail}")
