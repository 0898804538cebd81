"""State-sequence entropy of an HMM given an observation sequence.

Three algorithms, all in nats:

* ESRFB: forward (and, for subsequence constraints, backward) recursion
  over the entropy semiring.  The forward-only form keeps one column of
  ``(z, h)`` values, so memory does not depend on the sequence length.
* Hernando et al.: forward recursion on intermediate entropies
  ``H_t(j) = H(S_{0:t-1} | s_t = j, o_{0:t})``; also O(N) state.
* Mann-McCallum: forward/backward entropies computed from a stored
  forward-backward lattice; O(NT) memory.

Sign convention: internal h-parts hold ``sum p log p`` (<= 0); every
public entropy is reported as a nonnegative number.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .forward_backward import (ScaledFbResult, forward_backward, pairwise_marginal,
                               range_marginal, log_likelihood)
from .model import (HmmModel, ImpossibleConstraint, ImpossibleObservation, ModelError,
                    SubseqConstraint, check_obs)

CLAMP_TOL = 1e-12
ENUMERATION_CAP = 10**6


def _clamp(h: float) -> float:
    if -CLAMP_TOL <= h < 0:
        return 0.0
    return h + 0.0


def _symbols(model: HmmModel, obs):
    """Yield observation symbols as ints; iterators are checked lazily."""
    if hasattr(obs, "__len__"):
        yield from check_obs(model, obs).tolist()
        return
    m = model.num_symbols
    for t, o in enumerate(obs):
        o = int(o)
        if not 0 <= o < m:
            raise ModelError(f"observation o[{t}] = {o} outside [0, {m})")
        yield o


@dataclass(frozen=True)
class EntropyResult:
    entropy: float
    log_likelihood: float
    peak_state_elems: int
    length: int


@dataclass(frozen=True)
class SubseqResult:
    """Conditional entropy of the states outside ``[l, r]``.

    ``h_joint_term`` is ``sum p(s|o) log p(s|o)`` over the unconstrained
    states.  ``h_cond`` is None only for enumerated zero-probability rows.
    """

    h_cond: float | None
    p_constraint: float
    h_joint_term: float
    log_likelihood: float
    peak_state_elems: int = 0


# -- ESRFB forward ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EsrForwardState:
    """One column of the entropy-semiring forward vector.

    alpha_z[j] = p(s_t = j | o_{0:t});
    alpha_h[j] = sum over s_{0:t-1} of p(s_{0:t} | o_{0:t}) log p(s_{0:t} | o_{0:t}).
    """

    t: int
    alpha_z: np.ndarray
    alpha_h: np.ndarray
    loglik: float

    @property
    def state_elems(self) -> int:
        return self.alpha_z.size + self.alpha_h.size + 1


def esrfb_init(model: HmmModel, o0: int) -> EsrForwardState:
    first = model.pi * model.b[:, o0]
    c0 = first.sum()
    if not c0 > 0:
        raise ImpossibleObservation(0)
    z = first / c0
    logz = np.zeros_like(z)
    np.log(z, out=logz, where=z > 0)
    return EsrForwardState(0, z, z * logz, math.log(c0))


def esrfb_step(state: EsrForwardState, model: HmmModel, o_t: int) -> EsrForwardState:
    """Advance the forward column by one observation.

    The kernel is ``a_ij b_j(o_t) / c_t``; entries with zero kernel weight
    contribute nothing to either part.
    """
    w = model.emission_weighted[o_t]
    weighted = state.alpha_z[:, None] * w
    col = weighted.sum(axis=0)
    c = col.sum()
    t = state.t + 1
    if not c > 0:
        raise ImpossibleObservation(t)
    log_c = math.log(c)
    h = (state.alpha_h @ w + (weighted * model.log_emission_weighted[o_t]).sum(axis=0)
         - log_c * col) / c
    return EsrForwardState(t, col / c, h, state.loglik + log_c)


def esrfb_entropy(model: HmmModel, obs) -> EntropyResult:
    """H(S | o) from the forward pass only.

    ``obs`` may be any iterable of symbols; only the current column is kept.
    """
    symbols = _symbols(model, obs)
    try:
        state = esrfb_init(model, next(symbols))
    except StopIteration:
        raise ModelError("observation sequence must be non-empty") from None
    peak = state.state_elems
    for o in symbols:
        state = esrfb_step(state, model, o)
        peak = max(peak, state.state_elems)
    return EntropyResult(_clamp(-float(state.alpha_h.sum())), state.loglik, peak,
                         state.t + 1)


# -- Hernando et al. -------------------------------------------------------

@dataclass(frozen=True, eq=False)
class HernandoState:
    """alpha_hat[j] = p(s_t = j | o_{0:t}); H[j] = H(S_{0:t-1} | s_t = j, o_{0:t})."""

    t: int
    alpha_hat: np.ndarray
    H: np.ndarray
    loglik: float

    @property
    def state_elems(self) -> int:
        return self.alpha_hat.size + self.H.size + 1


def _backward_conditional(alpha_prev: np.ndarray, a: np.ndarray) -> np.ndarray:
    """``p[i, j] = p(s_{t-1} = i | s_t = j, o_{0:t})``; zero columns for unreachable j."""
    joint = alpha_prev[:, None] * a
    norm = joint.sum(axis=0)
    return np.divide(joint, norm, out=np.zeros_like(joint), where=norm > 0)


def _conditional_entropy_step(p: np.ndarray, prev: np.ndarray) -> np.ndarray:
    """``sum_i p[i, j] (prev[i] - log p[i, j])`` with ``0 log 0 = 0``."""
    logp = np.zeros_like(p)
    np.log(p, out=logp, where=p > 0)
    return (p * (prev[:, None] - logp)).sum(axis=0)


def hernando_init(model: HmmModel, o0: int) -> HernandoState:
    first = model.pi * model.b[:, o0]
    c0 = first.sum()
    if not c0 > 0:
        raise ImpossibleObservation(0)
    return HernandoState(0, first / c0, np.zeros(model.num_states), math.log(c0))


def hernando_step(state: HernandoState, model: HmmModel, o_t: int) -> HernandoState:
    t = state.t + 1
    p = _backward_conditional(state.alpha_hat, model.a)
    H = _conditional_entropy_step(p, state.H)
    col = state.alpha_hat @ model.emission_weighted[o_t]
    c = col.sum()
    if not c > 0:
        raise ImpossibleObservation(t)
    return HernandoState(t, col / c, H, state.loglik + math.log(c))


def _terminal_entropy(marginal: np.ndarray, H: np.ndarray) -> float:
    """sum_j p_j (H_j - log p_j) over states with p_j > 0."""
    live = marginal > 0
    p = marginal[live]
    return float((p * (H[live] - np.log(p))).sum())


def hernando_entropy(model: HmmModel, obs) -> EntropyResult:
    symbols = _symbols(model, obs)
    try:
        state = hernando_init(model, next(symbols))
    except StopIteration:
        raise ModelError("observation sequence must be non-empty") from None
    peak = state.state_elems
    for o in symbols:
        state = hernando_step(state, model, o)
        peak = max(peak, state.state_elems)
    return EntropyResult(_clamp(_terminal_entropy(state.alpha_hat, state.H)),
                         state.loglik, peak, state.t + 1)


# -- Mann-McCallum ---------------------------------------------------------

@dataclass(frozen=True, eq=False)
class MmEntropies:
    """H_alpha[t, j] = H(S_{0:t-1} | s_t = j, o); H_beta[t, j] = H(S_{t+1:T} | s_t = j, o)."""

    H_alpha: np.ndarray
    H_beta: np.ndarray | None

    @property
    def state_elems(self) -> int:
        return self.H_alpha.size + (0 if self.H_beta is None else self.H_beta.size)


def _mm_forward(model, obs, fb: ScaledFbResult) -> np.ndarray:
    H = np.zeros_like(fb.alpha_hat)
    for t in range(1, fb.length):
        xi = pairwise_marginal(model, obs, fb, t)
        gamma = fb.alpha_hat[t] * fb.beta_hat[t]
        p = np.divide(xi, gamma[None, :], out=np.zeros_like(xi), where=gamma[None, :] > 0)
        H[t] = _conditional_entropy_step(p, H[t - 1])
    return H


def _mm_backward(model, obs, fb: ScaledFbResult) -> np.ndarray:
    H = np.zeros_like(fb.alpha_hat)
    for t in range(fb.length - 1, 0, -1):
        xi = pairwise_marginal(model, obs, fb, t)
        gamma = fb.alpha_hat[t - 1] * fb.beta_hat[t - 1]
        # p[j, i] = p(s_t = j | s_{t-1} = i, o)
        p = np.divide(xi.T, gamma[None, :], out=np.zeros_like(xi), where=gamma[None, :] > 0)
        H[t - 1] = _conditional_entropy_step(p, H[t])
    return H


def mann_mccallum_entropies(model: HmmModel, obs, fb: ScaledFbResult) -> MmEntropies:
    obs = check_obs(model, obs)
    return MmEntropies(_mm_forward(model, obs, fb), _mm_backward(model, obs, fb))


def mm_entropy(model: HmmModel, obs) -> EntropyResult:
    """H(S | o) = H(S_T | o) + sum_j p(s_T = j | o) H_T^alpha(j)."""
    obs = check_obs(model, obs)
    fb = forward_backward(model, obs)
    H_alpha = _mm_forward(model, obs, fb)
    h = _terminal_entropy(fb.alpha_hat[-1] * fb.beta_hat[-1], H_alpha[-1])
    return EntropyResult(_clamp(h), log_likelihood(fb), fb.state_elems + H_alpha.size,
                         obs.size)


def _mm_termination(p: float, h_cond: float, loglik: float, elems: int) -> SubseqResult:
    return SubseqResult(h_cond, p, p * (-h_cond + math.log(p)), loglik, elems)


def mann_mccallum_subseq(model: HmmModel, obs, constraint: SubseqConstraint) -> SubseqResult:
    obs = check_obs(model, obs)
    constraint.check(model.num_states, obs.size)
    fb = forward_backward(model, obs)
    ent = mann_mccallum_entropies(model, obs, fb)
    p = range_marginal(model, obs, fb, constraint)
    if not p > 0:
        raise ImpossibleConstraint("impossible constraint")
    h = ent.H_alpha[constraint.l, constraint.values[0]] + ent.H_beta[constraint.r, constraint.values[-1]]
    return _mm_termination(p, float(h), log_likelihood(fb), fb.state_elems + ent.state_elems)


# -- ESRFB subsequence-constrained -----------------------------------------

@dataclass(frozen=True, eq=False)
class EsrBackwardColumn:
    beta_z: np.ndarray
    beta_h: np.ndarray


def esr_backward(model: HmmModel, obs, c, down_to: int) -> EsrBackwardColumn:
    """Entropy-semiring backward column at ``down_to``.

    ``c`` maps step ``t`` to its normalization constant for every
    ``down_to < t <= T`` (an array of all constants, or a dict).
    """
    obs = check_obs(model, obs)
    n = model.num_states
    beta_z, beta_h = np.ones(n), np.zeros(n)
    for t in range(obs.size - 2, down_to - 1, -1):
        o = obs[t + 1]
        ct = c[t + 1]
        k = model.emission_weighted[o] / ct
        logk = model.log_emission_weighted[o] - math.log(ct)
        beta_z, beta_h = k @ beta_z, k @ beta_h + (k * logk) @ beta_z
    return EsrBackwardColumn(beta_z, beta_h)


class _ConstrainedPasses:
    """Forward column at l, tail normalization constants and backward column at r."""

    def __init__(self, model: HmmModel, obs, l: int, r: int):
        obs = check_obs(model, obs)
        if not 0 <= l <= r < obs.size:
            raise ValueError(f"invalid interval [{l}, {r}] for length {obs.size}")
        self.model, self.l, self.r = model, l, r
        self.obs = obs
        fwd = esrfb_init(model, obs[0])
        for t in range(1, l + 1):
            fwd = esrfb_step(fwd, model, obs[t])
        self.forward = fwd
        # z-part only beyond l; keep c_t for t in (l, T]
        self.c_tail = np.empty(obs.size - 1 - l)
        z = fwd.alpha_z
        w = model.emission_weighted
        for t in range(l + 1, obs.size):
            col = z @ w[obs[t]]
            ct = col.sum()
            if not ct > 0:
                raise ImpossibleObservation(t)
            self.c_tail[t - l - 1] = ct
            z = col / ct
        self.loglik = fwd.loglik + float(np.log(self.c_tail).sum())
        self.backward = esr_backward(model, obs, _Offset(self.c_tail, l + 1), r)
        self.state_elems = (fwd.state_elems + self.c_tail.size + z.size
                            + self.backward.beta_z.size + self.backward.beta_h.size)

    def c(self, t):
        return self.c_tail[t - self.l - 1]

    def terminate(self, values) -> tuple[float, float]:
        """Return ``(p(s_{l:r} | o), sum over the rest of p log p)``."""
        fwd, bwd, w = self.forward, self.backward, self.model.emission_weighted
        z_prod, log_sum = 1.0, 0.0
        for k in range(1, len(values)):
            t = self.l + k
            zt = w[self.obs[t], values[k - 1], values[k]] / self.c(t)
            if zt == 0:
                return 0.0, 0.0
            z_prod *= zt
            log_sum += math.log(zt)
        az, ah = fwd.alpha_z[values[0]], fwd.alpha_h[values[0]]
        bz, bh = bwd.beta_z[values[-1]], bwd.beta_h[values[-1]]
        p = az * bz * z_prod
        h = z_prod * (az * bh + ah * bz + az * bz * log_sum)
        return float(p), float(h)

    def result(self, values) -> SubseqResult | None:
        p, h = self.terminate(values)
        if not p > 0:
            return None
        return SubseqResult(_clamp(-h / p + math.log(p)), p, h, self.loglik, self.state_elems)


class _Offset:
    __slots__ = ("arr", "start")

    def __init__(self, arr, start):
        self.arr, self.start = arr, start

    def __getitem__(self, t):
        return self.arr[t - self.start]


def esrfb_subseq_entropy(model: HmmModel, obs, constraint: SubseqConstraint) -> SubseqResult:
    obs = check_obs(model, obs)
    constraint.check(model.num_states, obs.size)
    passes = _ConstrainedPasses(model, obs, constraint.l, constraint.r)
    res = passes.result(constraint.values)
    if res is None:
        raise ImpossibleConstraint("impossible constraint")
    return res


def constraint_assignments(n, l, r, cap):
    count = n ** (r - l + 1)
    if count > cap:
        raise ValueError(f"{count} assignments exceed enumeration cap {cap}")
    return itertools.product(range(n), repeat=r - l + 1)


def esrfb_subseq_enumerate(model: HmmModel, obs, l: int, r: int,
                           cap: int = ENUMERATION_CAP) -> list[tuple[tuple, SubseqResult]]:
    """Subsequence entropies for every assignment of ``s_{l:r}`` from one pair of passes.

    Zero-probability assignments are reported with ``h_cond=None``.
    """
    assignments = constraint_assignments(model.num_states, l, r, cap)
    passes = _ConstrainedPasses(model, obs, l, r)
    rows = []
    for values in assignments:
        res = passes.result(values)
        if res is None:
            res = SubseqResult(None, 0.0, 0.0, passes.loglik, passes.state_elems)
        rows.append((values, res))
    return rows


def mann_mccallum_subseq_enumerate(model: HmmModel, obs, l: int, r: int,
                                   cap: int = ENUMERATION_CAP):
    obs = check_obs(model, obs)
    assignments = constraint_assignments(model.num_states, l, r, cap)
    SubseqConstraint(l, r, (0,) * (r - l + 1)).check(model.num_states, obs.size)
    fb = forward_backward(model, obs)
    ent = mann_mccallum_entropies(model, obs, fb)
    elems = fb.state_elems + ent.state_elems
    loglik = log_likelihood(fb)
    rows = []
    for values in assignments:
        p = range_marginal(model, obs, fb, SubseqConstraint(l, r, values))
        if p > 0:
            h = float(ent.H_alpha[l, values[0]] + ent.H_beta[r, values[-1]])
            res = _mm_termination(p, h, loglik, elems)
        else:
            res = SubseqResult(None, 0.0, 0.0, loglik, elems)
        rows.append((values, res))
    return rows


# -- ESRFB / Hernando correspondence ---------------------------------------

def esrfb_hernando_bridge_check(model: HmmModel, obs) -> float:
    """Largest deviation from the identities linking the two forward recursions.

    Checks ``alpha_h = alpha_z log alpha_z - alpha_z H`` at every step and,
    wherever ``alpha_z[t-1](i) > 0``, that the normalized kernel
    ``a_ij b_j(o_t) / c_t`` equals ``p(i | j) alpha_z[t](j) / alpha_z[t-1](i)``.
    """
    obs = check_obs(model, obs)
    esr = esrfb_init(model, obs[0])
    her = hernando_init(model, obs[0])

    def relation_gap():
        z = esr.alpha_z
        logz = np.zeros_like(z)
        np.log(z, out=logz, where=z > 0)
        return float(np.max(np.abs(esr.alpha_h - (z * logz - z * her.H))))

    dev = relation_gap()
    for t in range(1, obs.size):
        o = obs[t]
        prev_z = esr.alpha_z
        p = _backward_conditional(her.alpha_hat, model.a)
        esr = esrfb_step(esr, model, o)
        her = hernando_step(her, model, o)
        kernel = model.emission_weighted[o] / float((prev_z @ model.emission_weighted[o]).sum())
        live = prev_z > 0
        rhs = p[live] * esr.alpha_z[None, :] / prev_z[live][:, None]
        dev = max(dev, float(np.max(np.abs(kernel[live] - rhs))), relation_gap())
    return dev

