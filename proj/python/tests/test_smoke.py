import json
import math
from pathlib import Path

import pytest

import vortctl

FOUR = [(1, 0), (-1, 0), (1, 1), (-1, -1)]
CONFIGS = Path(__file__).resolve().parents[2] / "configs"


def test_saturation():
    chain = vortctl.saturation_chain(FOUR, 10)
    assert chain["status"] == "covered"
    assert len(chain["levels"]) <= 20
    assert vortctl.is_saturating_symmetric(FOUR)
    unit = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    assert vortctl.saturation_chain(unit, 10)["status"] == "stationary"


def test_state_and_invariants():
    s = vortctl.random_decaying_state(5, 0.5, 1)
    n = vortctl.nonlinear_term(s)
    assert abs(vortctl.inner(n, s)) < 1e-12
    end = vortctl.free_run(s, 0.5)
    assert vortctl.enstrophy(end) == pytest.approx(vortctl.enstrophy(s), rel=1e-9)
    assert vortctl.SpectralState.from_json(s.to_json()) == s


def test_linear_decay():
    s = vortctl.SpectralState(1)
    s.set((1, 0), 0.7 - 0.2j)
    end = vortctl.free_run(s, 1.0, nu=1.0)
    assert abs(end.coeff((1, 0)) - math.exp(-1) * (0.7 - 0.2j)) < 1e-12


def test_simulate_with_program():
    program = {
        "support": [[1, 0], [-1, 0]],
        "segments": [{"kind": "constant", "duration": 0.1, "values": {"1,0": [1.0, 0.0], "-1,0": [1.0, 0.0]}}],
    }
    times, states = vortctl.simulate(vortctl.SpectralState(3), program, record_stride=10)
    assert times[-1] == pytest.approx(0.1)
    assert states[-1].coeff((1, 0)).real == pytest.approx(0.1, rel=1e-6)


def test_relaxation_law():
    zero = {"support": [[1, 0], [-1, 0]], "segments": [{"kind": "zero", "duration": 1.0}]}
    w = 100.0
    f = {
        "support": [[1, 0], [-1, 0]],
        "segments": [{"kind": "oscillatory", "duration": 1.0, "omega": w, "pairs": [{"mode": [1, 0], "amp": w**-0.5}]}],
    }
    assert vortctl.relaxation_distance(f, zero) == pytest.approx(w**-0.5, abs=1e-6)


def test_steering_m1():
    rep = vortctl.steer_to_target([0.1, 0.0, -0.05, 0.0], FOUR, FOUR, vortctl.SpectralState(5), tau=0.02)
    assert rep["converged"]
    assert rep["error"] <= 1e-3


def test_errors_carry_codes():
    with pytest.raises(vortctl.VortctlError) as info:
        vortctl.l1_grid(2, 1.0, 1)
    assert info.value.code == "invalid argument"


def test_run_experiment(tmp_path):
    rc, out, err = vortctl.run_experiment(
        "saturate", {"k1": "data/four_mode.txt", "radius": 6, "output_dir": str(tmp_path)}, str(CONFIGS)
    )
    assert rc == 0, err
    manifest = json.loads((tmp_path / "manifest.json").read_text())
    assert manifest["status"] == "ok"
    rc, _, err = vortctl.run_experiment("saturate", {"k1": "data/four_mode.txt", "radiuss": 3}, str(CONFIGS))
    assert rc == 1
    assert "radiuss" in err
