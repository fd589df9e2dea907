from __future__ import annotations

import pytest

from sca_eval import kernels


def _backend_params():
    params = ["numpy"]
    if kernels._numba_available():
        params.append("numba")
    return params


@pytest.fixture(params=_backend_params())
def backend(request):
    """Run the test once per available compute backend."""
    prev = kernels.active_backend()
    kernels.set_backend(request.param)
    yield request.param
    kernels.set_backend(prev)


def pytest_runtest_logreport(report):
    # One visible pass/fail line per acceptance criterion.
    if "test_acceptance.py" not in report.nodeid:
        return
    if report.when == "call":
        status = "PASS" if report.passed else "FAIL"
        print(f"\n[{status}] {report.nodeid.split('::', 1)[1]}")
    elif report.when == "setup" and report.failed:
        print(f"\n[FAIL] {report.nodeid.split('::', 1)[1]} (setup error)")
