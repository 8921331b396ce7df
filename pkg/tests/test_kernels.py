import os
import subprocess
import sys

import numpy as np
import pytest

from nomasim import kernels
from nomasim.sic import DecodingPolicy, decode, decode_cluster

BACKENDS = sorted(kernels.BACKENDS)
needs_compiled = pytest.mark.skipif("compiled" not in kernels.BACKENDS, reason="extension not built")


def _pair_inputs(seed, n=20000):
    rng = np.random.default_rng(seed)
    alpha = rng.exponential(size=(n, 2)) * 10.0 ** rng.uniform(-2, 4, size=(n, 1))
    # exact ties and boundary values
    alpha[:200, 1] = alpha[:200, 0]
    alpha[200:400] = [[4.0, 3.0]]
    eps = 2.0 ** rng.uniform(0.1, 3.0, size=(n, 2)) - 1.0
    eps[200:400] = [[1.0, 1.0]]
    return alpha, eps


def _orb_inputs(seed, slots=3000, k=12, m=4, levels=3):
    rng = np.random.default_rng(seed)
    orb = rng.integers(0, m, size=(slots, k))
    level = rng.integers(-1, levels, size=(slots, k))
    alpha = np.where(level >= 0, rng.choice([1.0, 3.0, 9.0, 27.0], size=(slots, k)) * rng.uniform(0.5, 2, (slots, k)), 0.0)
    alpha[:500] = np.round(alpha[:500])
    alpha_gb = rng.exponential(20.0, size=(slots, m))
    eps_gb = np.array([1.0, 3.0, 0.5, 1.0])[:m]
    return orb, level, alpha, alpha_gb, eps_gb, 1.0


@needs_compiled
@pytest.mark.parametrize("policy", list(DecodingPolicy))
@pytest.mark.parametrize("seed", [0, 1])
def test_decode_pairs_backends_agree(policy, seed):
    alpha, eps = _pair_inputs(seed)
    py = kernels.get_backend("python").decode_pairs(alpha, eps, policy.code)
    cc = kernels.get_backend("compiled").decode_pairs(alpha, eps, policy.code)
    assert py.dtype == cc.dtype
    assert np.array_equal(py, cc)


@needs_compiled
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_orb_slots_backends_agree(seed):
    args = _orb_inputs(seed)
    py = kernels.get_backend("python").orb_slots(*args)
    cc = kernels.get_backend("compiled").orb_slots(*args)
    assert np.array_equal(py, cc)


@pytest.mark.parametrize("backend", BACKENDS)
@pytest.mark.parametrize("policy", list(DecodingPolicy))
def test_decode_pairs_matches_scalar_decode(backend, policy):
    alpha, eps = _pair_inputs(7, n=3000)
    out = kernels.get_backend(backend).decode_pairs(alpha, eps, policy.code)
    for row in range(alpha.shape[0]):
        ref = decode_cluster(policy, list(alpha[row]), list(eps[row]))
        assert list(out[row, :2]) == [int(s) for s in ref.success], row
        assert out[row, 2] == int(ref.stage_success[0])


def _orb_reference(orb, level, alpha, alpha_gb, eps_gb, eps_gf):
    """Per-ORB rule evaluated with scalar decode()."""
    slots, m = alpha_gb.shape
    out = np.zeros((slots, 3), dtype=np.int64)
    for s in range(slots):
        for j in range(m):
            users = [i for i in range(orb.shape[1]) if orb[s, i] == j and level[s, i] >= 0]
            agb = alpha_gb[s, j]
            if not users:
                out[s, 0] += decode([0], [agb], [eps_gb[j]]).success[0]
                continue
            top = min(level[s, i] for i in users)
            at_top = [i for i in users if level[s, i] == top]
            if len(at_top) > 1:
                total = sum(alpha[s, i] for i in users)
                out[s, 0] += decode([0], [agb], [eps_gb[j]], background=total).success[0]
                out[s, 2] += 1
                continue
            bg = sum(alpha[s, i] for i in users if level[s, i] != top)
            res = decode_cluster("hybrid", [agb, alpha[s, at_top[0]]], [eps_gb[j], eps_gf], background=bg)
            out[s, 0] += res.success[0]
            out[s, 1] += res.success[1]
    return out


@pytest.mark.parametrize("backend", BACKENDS)
def test_orb_slots_matches_scalar_reference(backend):
    args = _orb_inputs(11, slots=800)
    assert np.array_equal(kernels.get_backend(backend).orb_slots(*args), _orb_reference(*args))


@pytest.mark.parametrize("backend", BACKENDS)
def test_orb_slots_hand_traces(backend):
    orb_slots = kernels.get_backend(backend).orb_slots
    agb = np.array([[4.0]])
    eps_gb = np.array([1.0])
    # no GF arrivals: GB alone
    assert orb_slots([[0]], [[-1]], [[0.0]], agb, eps_gb, 1.0).tolist() == [[1, 0, 0]]
    # two arrivals on the same level: collision, GB 4/(1+2) >= 1 still decoded
    assert orb_slots([[0, 0]], [[0, 0]], [[1.0, 1.0]], agb, eps_gb, 1.0).tolist() == [[1, 0, 1]]
    # collision with heavy interference: GB 4/(1+6) < 1
    assert orb_slots([[0, 0]], [[0, 0]], [[3.0, 3.0]], agb, eps_gb, 1.0).tolist() == [[0, 0, 1]]
    # distinct levels 18 and 2: survivor 18 decoded first over GB 4 and background 2,
    # then GB 4/(1+2) >= 1
    assert orb_slots([[0, 0]], [[0, 2]], [[18.0, 2.0]], agb, eps_gb, 1.0).tolist() == [[1, 1, 0]]
    # single arrival tolerated by GB: GB first 4/(1+3) = 1, then GF 3 >= 1
    assert orb_slots([[0]], [[0]], [[3.0]], agb, eps_gb, 1.0).tolist() == [[1, 1, 0]]


@pytest.mark.parametrize("backend", BACKENDS)
def test_orb_slots_respect_cluster_capacity(backend):
    args = _orb_inputs(5)
    out = kernels.get_backend(backend).orb_slots(*args)
    m = args[3].shape[1]
    assert np.all(out[:, 0] + out[:, 1] <= 2 * m)
    assert np.all(out[:, 1] <= m) and np.all(out[:, 0] <= m)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def test_unknown_policy_code_rejected():
    with pytest.raises(ValueError):
        kernels.get_backend("python").decode_pairs(np.ones((2, 2)), [1.0, 1.0], 9)


def test_pure_python_switch_selects_fallback():
    env = dict(os.environ, NOMASIM_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from nomasim import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
