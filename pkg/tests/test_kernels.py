"""The jitted and pure-numpy transport kernels must agree."""

import os
import subprocess
import sys

import numpy as np
import pytest

from gaugetrace import _kernels
from gaugetrace.lie import random_skew


def _random_coeffs(rng, batch, steps, m):
    out = np.empty((batch, 2 * steps + 1, m, m))
    for b in range(batch):
        base = random_skew(rng, m)
        drift = random_skew(rng, m, scale=0.3)
        ts = np.linspace(1.0, 0.0, 2 * steps + 1)
        for j, t in enumerate(ts):
            out[b, j] = base + np.sin(2.5 * t) * drift
    return out


@pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba disabled or missing")
def test_paths_agree():
    rng = np.random.default_rng(0)
    for m in (2, 3):
        coeffs = _random_coeffs(rng, 5, 32, m)
        jit_out, jit_smin = _kernels.transport_stack_numba(coeffs, True)
        np_out, np_smin = _kernels.transport_stack_numpy(coeffs, True)
        assert np.abs(jit_out - np_out).max() < 1e-12
        assert abs(jit_smin - np_smin) < 1e-12


def test_endpoint_only_matches_samples():
    rng = np.random.default_rng(1)
    coeffs = _random_coeffs(rng, 3, 16, 2)
    full, _ = _kernels.transport_stack_numpy(coeffs, True)
    endpoint, _ = _kernels.transport_stack_numpy(coeffs, False)
    assert np.array_equal(full[:, 0], endpoint[:, 0])


def test_final_sample_is_identity():
    rng = np.random.default_rng(2)
    coeffs = _random_coeffs(rng, 2, 16, 3)
    full, _ = _kernels.transport_stack_numpy(coeffs, True)
    assert np.array_equal(full[:, -1], np.broadcast_to(np.eye(3), (2, 3, 3)))


def test_env_flag_disables_jit():
    env = dict(os.environ, GAUGETRACE_DISABLE_JIT="1")
    code = "from gaugetrace import _kernels; print(_kernels.HAVE_NUMBA)"
    out = subprocess.run([sys.executable, "-c", code], env=env,
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "False"
