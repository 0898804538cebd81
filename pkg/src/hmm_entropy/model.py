"""Discrete HMM container, validation, JSON persistence and the
brute-force enumeration oracle.

Model JSON::

    {"num_states": N, "num_symbols": M,
     "pi": [...N...], "a": [[...N...] x N], "b": [[...M...] x N]}

Observation JSON::

    {"obs": [o_0, ..., o_T]}

All state and symbol indices are 0-based.
"""

import json
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple, Sequence

import numpy as np

SUM_TOL = 1e-9
ORACLE_CAP = 10**7


class ModelError(ValueError):
    """Malformed, inconsistent or non-stochastic model/observation input."""


class ImpossibleObservation(ValueError):
    """The observation sequence has zero probability under the model."""

    def __init__(self, t=None):
        self.t = t
        where = "" if t is None else f" at step {t}"
        super().__init__(f"impossible observation sequence{where}")


class ImpossibleConstraint(ValueError):
    """The state constraint has zero posterior probability."""


class EnumerationCapExceeded(RuntimeError):
    """Brute-force enumeration refused because the table would be too large."""


class Violation(NamedTuple):
    field: str
    index: int | None
    message: str

    def as_dict(self):
        return {"field": self.field, "index": self.index, "message": self.message}


def _frozen(x, ndim, name):
    arr = np.array(x, dtype=float)
    if arr.ndim != ndim:
        raise ModelError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class HmmModel:
    """Discrete-emission HMM.

    ``a[i, j] = P(S_t = j | S_{t-1} = i)``, ``b[i, o] = P(O_t = o | S_t = i)``,
    ``pi[i] = P(S_0 = i)``.  Shapes are checked on construction; the
    stochasticity invariants are checked by :func:`validate`.
    """

    pi: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        pi = _frozen(self.pi, 1, "pi")
        a = _frozen(self.a, 2, "a")
        b = _frozen(self.b, 2, "b")
        n = pi.shape[0]
        if n < 1:
            raise ModelError("model needs at least one state")
        if a.shape != (n, n):
            raise ModelError(f"a must have shape ({n}, {n}), got {a.shape}")
        if b.shape[0] != n or b.shape[1] < 1:
            raise ModelError(f"b must have shape ({n}, M>=1), got {b.shape}")
        object.__setattr__(self, "pi", pi)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def num_states(self) -> int:
        return self.pi.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.b.shape[1]

    @cached_property
    def emission_weighted(self) -> np.ndarray:
        """``w[o, i, j] = a[i, j] * b[j, o]``, the unnormalized transition kernel."""
        w = self.a[None, :, :] * self.b.T[:, None, :]
        w.setflags(write=False)
        return w

    @cached_property
    def log_emission_weighted(self) -> np.ndarray:
        # 0 where the kernel is 0; such entries always carry zero weight
        w = self.emission_weighted
        out = np.zeros_like(w)
        np.log(w, out=out, where=w > 0)
        out.setflags(write=False)
        return out


@dataclass(frozen=True)
class SubseqConstraint:
    """Fixed states ``values`` on the closed interval ``[l, r]``."""

    l: int
    r: int
    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", tuple(int(v) for v in self.values))
        if self.l < 0 or self.r < self.l:
            raise ValueError(f"invalid interval [{self.l}, {self.r}]")
        if len(self.values) != self.r - self.l + 1:
            raise ValueError(
                f"expected {self.r - self.l + 1} state values, got {len(self.values)}")

    def check(self, num_states: int, length: int):
        if self.r >= length:
            raise ValueError(f"constraint end {self.r} beyond last index {length - 1}")
        bad = [v for v in self.values if not 0 <= v < num_states]
        if bad:
            raise ValueError(f"state values {bad} outside [0, {num_states})")


def validate(model: HmmModel) -> list[Violation]:
    """Return every violated stochasticity invariant (empty list = valid)."""
    out = []
    for name, arr in (("pi", model.pi), ("a", model.a), ("b", model.b)):
        if not np.all(np.isfinite(arr)):
            out.append(Violation(name, None, f"{name} has non-finite entries"))
            continue
        bad = np.argwhere((arr < 0) | (arr > 1))
        for idx in bad:
            idx = tuple(int(k) for k in idx)
            out.append(Violation(
                name, idx[0] if arr.ndim == 2 else None,
                f"{name}{list(idx)} = {arr[idx]!r} outside [0, 1]"))
    if np.all(np.isfinite(model.pi)):
        s = float(model.pi.sum())
        if abs(s - 1) > SUM_TOL:
            out.append(Violation("pi", None, f"pi sums to {s:.12g}"))
    for name, mat in (("a", model.a), ("b", model.b)):
        if not np.all(np.isfinite(mat)):
            continue
        for i, s in enumerate(mat.sum(axis=1)):
            if abs(s - 1) > SUM_TOL:
                out.append(Violation(name, i, f"{name} row {i} sums to {s:.12g}"))
    return out


def check_obs(model: HmmModel, obs: Sequence[int]) -> np.ndarray:
    """Return ``obs`` as an int array, raising ModelError if out of range."""
    arr = np.asarray(obs)
    if arr.ndim != 1 or arr.size == 0:
        raise ModelError("observation sequence must be a non-empty 1-D list")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ModelError("observation symbols must be integers")
        arr = arr.astype(np.int64)
    bad = np.flatnonzero((arr < 0) | (arr >= model.num_symbols))
    if bad.size:
        t = int(bad[0])
        raise ModelError(
            f"observation o[{t}] = {int(arr[t])} outside [0, {model.num_symbols})")
    return arr


def random_model(n: int, m: int, seed: int, eps: float = 1e-3) -> HmmModel:
    """Seeded model with strictly positive entries.

    Each row is drawn uniformly from ``(eps, 1]`` and then normalized.
    """
    if n < 1 or m < 1:
        raise ValueError("n and m must be positive")
    rng = np.random.default_rng(seed)

    def rows(shape):
        x = 1.0 - rng.random(shape) * (1.0 - eps)
        return x / x.sum(axis=-1, keepdims=True)

    return HmmModel(pi=rows(n), a=rows((n, n)), b=rows((n, m)))


# -- JSON ------------------------------------------------------------------

def model_to_dict(model: HmmModel) -> dict:
    return {
        "num_states": model.num_states,
        "num_symbols": model.num_symbols,
        "pi": model.pi.tolist(),
        "a": model.a.tolist(),
        "b": model.b.tolist(),
    }


def save_model(model: HmmModel) -> str:
    # float repr is the shortest string that round-trips (at most 17 digits)
    return json.dumps(model_to_dict(model))


def _parse_json(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ModelError(f"malformed JSON: {e}") from None


def model_from_dict(d, check=True) -> HmmModel:
    if not isinstance(d, dict):
        raise ModelError("model JSON must be an object")
    missing = [k for k in ("num_states", "num_symbols", "pi", "a", "b") if k not in d]
    if missing:
        raise ModelError(f"model JSON missing keys: {', '.join(missing)}")
    n, m = d["num_states"], d["num_symbols"]
    if not (isinstance(n, int) and isinstance(m, int)) or n < 1 or m < 1:
        raise ModelError("num_states and num_symbols must be positive integers")

    def matrix(key, rows, cols):
        val = d[key]
        if not isinstance(val, list) or len(val) != rows:
            raise ModelError(f"'{key}' must have {rows} rows")
        for i, row in enumerate(val):
            if not isinstance(row, list) or len(row) != cols:
                raise ModelError(f"'{key}' row {i} must have {cols} entries")
        try:
            return np.array(val, dtype=float)
        except (TypeError, ValueError):
            raise ModelError(f"'{key}' must contain numbers") from None

    if not isinstance(d["pi"], list) or len(d["pi"]) != n:
        raise ModelError(f"'pi' must have {n} entries")
    try:
        pi = np.array(d["pi"], dtype=float)
    except (TypeError, ValueError):
        raise ModelError("'pi' must contain numbers") from None
    model = HmmModel(pi=pi, a=matrix("a", n, n), b=matrix("b", n, m))
    if check:
        problems = validate(model)
        if problems:
            raise ModelError("invalid model: " + "; ".join(v.message for v in problems))
    return model


def load_model(text: str, check: bool = True) -> HmmModel:
    return model_from_dict(_parse_json(text), check=check)


def load_obs(text: str, model: HmmModel | None = None) -> np.ndarray:
    d = _parse_json(text)
    if not isinstance(d, dict) or "obs" not in d:
        raise ModelError("observation JSON must be an object with key 'obs'")
    obs = d["obs"]
    if not isinstance(obs, list) or not obs:
        raise ModelError("'obs' must be a non-empty list")
    if not all(isinstance(o, int) and not isinstance(o, bool) for o in obs):
        raise ModelError("'obs' entries must be integers")
    if any(o < 0 for o in obs):
        raise ModelError("'obs' entries must be nonnegative")
    arr = np.array(obs, dtype=np.int64)
    if model is not None:
        arr = check_obs(model, arr)
    return arr


def save_obs(obs) -> str:
    return json.dumps({"obs": [int(o) for o in obs]})


# -- brute-force oracle ----------------------------------------------------

def joint_prob(model: HmmModel, states: Sequence[int], obs: Sequence[int]) -> float:
    """p(s, o) as the direct product of initial, transition and emission terms."""
    if len(states) != len(obs):
        raise ValueError(f"state sequence length {len(states)} != observation length {len(obs)}")
    s0, o0 = states[0], obs[0]
    p = model.pi[s0] * model.b[s0, o0]
    for t in range(1, len(obs)):
        p *= model.a[states[t - 1], states[t]] * model.b[states[t], obs[t]]
    return float(p)


class Posterior(NamedTuple):
    """Enumerated posterior: row k of ``states`` has probability ``probs[k]``."""

    states: np.ndarray
    probs: np.ndarray
    evidence: float

    def as_dict(self) -> dict:
        return {tuple(int(s) for s in row): float(p) for row, p in zip(self.states, self.probs)}


def oracle_posterior(model: HmmModel, obs, cap: int = ORACLE_CAP) -> Posterior:
    """p(s | o) for every one of the N**(T+1) state sequences."""
    obs = check_obs(model, obs)
    n, length = model.num_states, obs.size
    count = n ** length
    if count > cap:
        raise EnumerationCapExceeded(
            f"{n}**{length} = {count} sequences exceeds enumeration cap {cap}")
    states = np.stack(np.unravel_index(np.arange(count), (n,) * length), axis=1)
    joint = model.pi[states[:, 0]] * model.b[states[:, 0], obs[0]]
    for t in range(1, length):
        joint = joint * model.a[states[:, t - 1], states[:, t]] * model.b[states[:, t], obs[t]]
    evidence = float(joint.sum())
    if evidence <= 0:
        raise ImpossibleObservation()
    return Posterior(states, joint / evidence, evidence)


def _entropy(p):
    p = p[p > 0]
    return float(-(p * np.log(p)).sum()) + 0.0


def oracle_entropy(model: HmmModel, obs, cap: int = ORACLE_CAP) -> float:
    """H(S | o) in nats by full enumeration."""
    return _entropy(oracle_posterior(model, obs, cap).probs)


class SubseqOracle(NamedTuple):
    h_cond: float
    p_constraint: float


def oracle_subseq_entropy(model: HmmModel, obs, constraint: SubseqConstraint,
                          cap: int = ORACLE_CAP, posterior: Posterior | None = None) -> SubseqOracle:
    """Entropy of the states outside ``[l, r]`` given the constrained states and o.

    A previously enumerated ``posterior`` for the same model and
    observations may be passed to avoid repeating the enumeration.
    """
    post = posterior if posterior is not None else oracle_posterior(model, obs, cap)
    constraint.check(model.num_states, post.states.shape[1])
    window = post.states[:, constraint.l:constraint.r + 1]
    mask = np.all(window == np.array(constraint.values), axis=1)
    p_c = float(post.probs[mask].sum())
    if p_c <= 0:
        raise ImpossibleConstraint("impossible constraint")
    return SubseqOracle(_entropy(post.probs[mask] / p_c), p_c)
