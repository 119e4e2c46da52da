import math
import os
import sys
from functools import lru_cache

import hypothesis
import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(__file__))

from subfinsler.geodesics import GeodesicState, IntegratorSettings, integrate_geodesic, theta_period_arclength
from subfinsler.indicatrix import IndicatrixProfile

hypothesis.settings.register_profile("default", max_examples=30, deadline=None)
hypothesis.settings.register_profile("thorough", max_examples=300, deadline=None)
hypothesis.settings.register_profile("fast", max_examples=5, deadline=None)
hypothesis.settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

BUILTINS = {
    "flat": IndicatrixProfile.flat(),
    "randers": IndicatrixProfile.randers(0.5),
    "limacon": IndicatrixProfile.limacon(),
    "fourier": IndicatrixProfile.fourier([1.0, 0.0, 0.05, 0.02], [0.03, 0.0, 0.01]),
}


@pytest.fixture(params=sorted(BUILTINS))
def builtin(request):
    return BUILTINS[request.param]


@lru_cache(maxsize=None)
def period_trace(kind: str, theta0: float, lam0: float, margin: float = 0.5):
    profile = BUILTINS[kind]
    L = theta_period_arclength(profile, theta0, lam0)
    return integrate_geodesic(profile, GeodesicState(theta=theta0, lam=lam0), IntegratorSettings(max_arclength=L + margin))


@lru_cache(maxsize=None)
def trace_of_length(kind: str, theta0: float, lam0: float, length: float):
    profile = BUILTINS[kind]
    return integrate_geodesic(profile, GeodesicState(theta=theta0, lam=lam0), IntegratorSettings(max_arclength=length))


HALF_PI = math.pi / 2
np.seterr(all="raise", under="ignore")


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
