import json

import pytest

from cdrleak import make_scenario, replace_param

# canonical parametrization used across the suite; e_max=15 keeps the
# market solver inside its bracket at the points the examples probe
BASELINE_PARAMS = dict(
    fa=10.0, fb=0.5, g1=0.01, g2=0.001, c1=1.0, c2=0.2,
    h1=0.5, h2=0.3, lam=0.5, e_max=15.0,
)


@pytest.fixture
def baseline():
    return make_scenario(**BASELINE_PARAMS)


@pytest.fixture
def baseline_opt(baseline):
    # the planner optimum needs more emissions headroom than e_max=15
    # allows (gross energy at the optimum is ~15.4), so optimizer-facing
    # tests run with the cap raised to 18 (still below fa/fb = 20)
    return replace_param(baseline, "e_max", 18.0)


@pytest.fixture
def scenario_file(tmp_path):
    def write(name="scenario.json", **overrides):
        params = {
            "fa": 10.0, "fb": 0.5, "g1": 0.01, "g2": 0.001,
            "c1": 1.0, "c2": 0.2, "h1": 0.5, "h2": 0.3,
            "lambda": 0.5, "e_max": 18.0,
        }
        params.update(overrides)
        path = tmp_path / name
        path.write_text(json.dumps(params), encoding="utf-8")
        return str(path)

    return write
