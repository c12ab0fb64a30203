"""The pure-Python fallback must give the same numbers as the compiled kernels."""

import importlib.util
import json
import os
import subprocess
import sys

import numpy as np
import pytest

from pvtele import _accel, _kernels

SNIPPET = r"""
import json
import numpy as np
from pvtele._accel import backend
from pvtele.gaussian_states import SqueezingParam, tmsc
from pvtele.hermite import HermiteParams, MultiIndex, hermite_general
from pvtele.pv_ops import GeneralizedPVSpec, PVSpec, photon_varied, response_ratio, tmsv_pv
from pvtele.fock_oracle import oracle_state, oracle_apply, oracle_cf

r = SqueezingParam.from_db(8)
xs = np.linspace(0.1, 3, 9)
out = {"backend": backend()}
out["ps2"] = response_ratio(tmsv_pv(r, PVSpec.symmetric(-1, 2)), xs).tolist()
out["gen"] = response_ratio(tmsv_pv(r, GeneralizedPVSpec(3, (0.5, -0.2, 0.7, 0.4))), xs).tolist()
st = photon_varied(tmsc(r, 0.4, 0.4), PVSpec.symmetric(1, 1))
out["tmsc"] = response_ratio(st, xs).tolist()
M = np.array([[0.3, 0.1j, 0.2], [0.1j, -0.4, 0.05], [0.2, 0.05, 0.6]])
h = hermite_general(HermiteParams(M, np.array([0.5, -0.2j, 1.1])), MultiIndex((3, 2, 4)))
out["hermite"] = [h.real, h.imag]
o = oracle_apply(oracle_state("tmsv", SqueezingParam(0.5), 60), PVSpec.symmetric(-1, 1))
v = oracle_cf(o, [[1.2 + 0.3j, 1.2 - 0.3j]])[0]
out["oracle"] = [v.real, v.imag]
print(json.dumps(out))
"""


def run_snippet(disable):
    env = dict(os.environ)
    env.pop("PVTELE_DISABLE_NUMBA", None)
    if disable:
        env["PVTELE_DISABLE_NUMBA"] = "1"
    out = subprocess.run([sys.executable, "-c", SNIPPET], capture_output=True, text=True, env=env, check=True)
    return json.loads(out.stdout)


@pytest.fixture(scope="module")
def both():
    return run_snippet(False), run_snippet(True)


def test_fallback_selected_by_environment(both):
    fast, slow = both
    assert slow["backend"] == "python"
    assert fast["backend"] == ("numba" if importlib.util.find_spec("numba") else "python")


@pytest.mark.parametrize("key", ["ps2", "gen", "tmsc", "hermite", "oracle"])
def test_fallback_matches_compiled(both, key):
    fast, slow = both
    assert np.allclose(fast[key], slow[key], rtol=1e-12, atol=1e-15)


@pytest.mark.parametrize("value,expected", [("", False), ("0", False), ("false", False), ("1", True), ("yes", True)])
def test_flag_parsing(monkeypatch, value, expected):
    monkeypatch.setenv("PVTELE_DISABLE_NUMBA", value)
    assert _accel._disabled() is expected


def test_py_func_available():
    # the benchmark times both paths through this attribute
    D = _kernels.displacement_matrix.py_func(0.5 + 0.1j, 12)
    assert np.allclose(D, _kernels.displacement_matrix(0.5 + 0.1j, 12), atol=1e-15)
