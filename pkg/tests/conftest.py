"""Shared fixtures: small hand-built panels and random generators.

Also collects the acceptance-criterion result lines and echoes them in the
terminal summary, where pytest's output capture cannot swallow them.
"""

import numpy as np
import pytest

from paneldiag.panel import CovariateSchema, load_panel

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def make_panel_csv(n=40, T=3, P=2, seed=0, drop_rate=0.2, year0=2001):
    """Random imbalanced panel CSV text plus the schema used to read it."""
    rng = np.random.default_rng(seed)
    names = tuple(f"x{j}" for j in range(1, P + 1))
    schema = CovariateSchema.all_continuous(names)
    lines = ["subject_id,year,z," + ",".join(names)]
    for t in range(T):
        for i in range(n):
            if rng.random() < drop_rate and not (t == 0 and i < 3):
                continue
            x = rng.normal(size=P)
            z = int(rng.random() < 1.0 / (1.0 + np.exp(-(0.3 * x.sum() - 0.5))))
            lines.append(f"s{i},{year0 + t},{z}," +
                         ",".join(repr(float(v)) for v in x))
    return "\n".join(lines) + "\n", schema


@pytest.fixture
def small_panel():
    text, schema = make_panel_csv(n=60, T=3, P=2, seed=7)
    return load_panel(text, schema)


@pytest.fixture
def two_year_panel():
    text, schema = make_panel_csv(n=200, T=2, P=2, seed=11, drop_rate=0.1)
    return load_panel(text, schema)
