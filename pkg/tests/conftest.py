import math
import sys

import numpy as np
import pytest

from ltvkit.catalog import load_catalog
from ltvkit.system import ExprMatrix, LtvSystem, TransitionEvaluator


@pytest.fixture(scope="session")
def catalog():
    return {e.id: e for e in load_catalog()}


@pytest.fixture(scope="session")
def s1(catalog):
    return TransitionEvaluator(catalog["S1"].system)


@pytest.fixture(scope="session")
def s2(catalog):
    return TransitionEvaluator(catalog["S2"].system)


@pytest.fixture(scope="session")
def s0(catalog):
    return TransitionEvaluator(catalog["S0"].system)


def scalar(a, b=None, c=None, domain=(-10.0, 10.0), name="x"):
    m = lambda x: None if x is None else ExprMatrix.parse([[x]])
    return TransitionEvaluator(LtvSystem(name, m(a), B=m(b), C=m(c), domain=domain))


def s1_phi(t, s):
    F = lambda x: x * math.cos(x) - math.sin(x)
    return math.exp(F(t) - F(s))


def rel(a, b):
    a, b = np.asarray(a, float), np.asarray(b, float)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
