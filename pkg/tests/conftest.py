import numpy as np
import pytest

from hmm_entropy.model import HmmModel, SubseqConstraint, random_model

# Frozen by exhaustive enumeration of the 4 state sequences of E1 with o = (0, 0):
# p(s, o) = 0.3645, 0.0045, 0.0045, 0.0045; p(o) = 0.378.
E1_EVIDENCE = 0.378
E1_POSTERIOR = {(0, 0): 0.3645 / 0.378, (0, 1): 0.0045 / 0.378,
                (1, 0): 0.0045 / 0.378, (1, 1): 0.0045 / 0.378}
E1_ENTROPY = 0.19331225683774766
# s_1 = 0: conditional over s_0 is (0.3645, 0.0045) / 0.369
E1_P_S1_0 = 0.369 / 0.378
E1_H_S0_GIVEN_S1_0 = 0.06586093594147827


def e1_model():
    return HmmModel(pi=[0.5, 0.5], a=[[0.9, 0.1], [0.1, 0.9]], b=[[0.9, 0.1], [0.1, 0.9]])


@pytest.fixture
def e1():
    return e1_model(), np.array([0, 0])


def deterministic_model(n=2):
    pi = np.zeros(n)
    pi[0] = 1
    return HmmModel(pi=pi, a=np.eye(n), b=np.eye(n))


def uniform_model(n, m):
    return HmmModel(pi=np.full(n, 1 / n), a=np.full((n, n), 1 / n), b=np.full((n, m), 1 / m))


def sample_obs(model, length, rng):
    """Simulate the HMM, so the sequence is always feasible."""
    s = rng.choice(model.num_states, p=model.pi)
    obs = []
    for t in range(length):
        if t:
            s = rng.choice(model.num_states, p=model.a[s])
        obs.append(rng.choice(model.num_symbols, p=model.b[s]))
    return np.array(obs)


def sparse_model(n, m, rng, keep=0.6):
    """Random model with structural zeros; each row keeps at least one entry."""

    def rows(shape):
        x = rng.random(shape) * (rng.random(shape) < keep)
        x = np.atleast_2d(x)
        for row in x:
            if not row.any():
                row[rng.integers(row.size)] = 1.0
        x = x / x.sum(axis=1, keepdims=True)
        return x[0] if len(shape) == 1 else x

    return HmmModel(pi=rows((n,)), a=rows((n, n)), b=rows((n, m)))


def random_suite(count=100, base=0):
    """Seeded instances with N in {2, 3} and T in {1..7} (length T + 1)."""
    for k in range(count):
        seed = base + k
        rng = np.random.default_rng(10_000 + seed)
        n = 2 + k % 2
        t_last = 1 + (k // 2) % 7
        m = int(rng.integers(2, 5))
        model = random_model(n, m, seed)
        yield seed, model, rng.integers(0, m, t_last + 1)


def sparse_suite(count=60, base=0):
    for k in range(count):
        rng = np.random.default_rng(20_000 + base + k)
        n = 2 + k % 2
        m = int(rng.integers(2, 4))
        model = sparse_model(n, m, rng)
        yield k, model, sample_obs(model, 1 + k % 7 + 1, rng)


def random_constraints(n, length, rng, count=10, max_span=3):
    """Random constraints with r - l <= max_span (not necessarily feasible)."""
    out = []
    for _ in range(count):
        l = int(rng.integers(0, length))
        r = min(length - 1, l + int(rng.integers(0, max_span + 1)))
        out.append(SubseqConstraint(l, r, rng.integers(0, n, r - l + 1)))
    return out


# -- acceptance reporting ---------------------------------------------------

_ACCEPTANCE = []


@pytest.fixture
def acceptance():
    def record(key, description, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] {key}: {description}"
        if detail:
            line += f" ({detail})"
        _ACCEPTANCE.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
