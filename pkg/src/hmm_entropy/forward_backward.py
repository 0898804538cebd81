"""Scaled HMM forward-backward and forward-backward over a commutative semiring.

Observations are indexed ``0..T``.  The scaled recursion keeps

* ``alpha_hat[t, j] = p(S_t = j | o_{0:t})``
* ``beta_hat[t, i] = p(o_{t+1:T} | S_t = i) / p(o_{t+1:T} | o_{0:t})``
* ``c[0] = p(o_0)``, ``c[t] = p(o_t | o_{0:t-1})``

so that ``p(o) = prod(c)`` and every posterior marginal is a product of
``alpha_hat``, normalized kernels ``a_ij b_j(o_t) / c_t`` and ``beta_hat``.
"""

from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .model import HmmModel, ImpossibleObservation, SubseqConstraint, check_obs
from .semiring import REAL, Semiring, esr_lift


@dataclass(frozen=True, eq=False)
class ScaledFbResult:
    alpha_hat: np.ndarray
    beta_hat: np.ndarray
    c: np.ndarray

    @property
    def length(self) -> int:
        return self.c.shape[0]

    @property
    def state_elems(self) -> int:
        """Number of floating-point cells retained by the stored lattice."""
        return self.alpha_hat.size + self.beta_hat.size + self.c.size


def scaled_forward(model: HmmModel, obs) -> tuple[np.ndarray, np.ndarray]:
    """Return ``(alpha_hat, c)``; raises ImpossibleObservation if any c_t = 0."""
    obs = check_obs(model, obs)
    w = model.emission_weighted
    alpha = np.empty((obs.size, model.num_states))
    c = np.empty(obs.size)
    first = model.pi * model.b[:, obs[0]]
    c[0] = first.sum()
    if not c[0] > 0:
        raise ImpossibleObservation(0)
    alpha[0] = first / c[0]
    for t in range(1, obs.size):
        col = alpha[t - 1] @ w[obs[t]]
        c[t] = col.sum()
        if not c[t] > 0:
            raise ImpossibleObservation(t)
        alpha[t] = col / c[t]
    return alpha, c


def scaled_backward(model: HmmModel, obs, c: np.ndarray) -> np.ndarray:
    obs = check_obs(model, obs)
    if c.shape != obs.shape:
        raise ValueError(f"expected {obs.size} normalization constants, got {c.shape[0]}")
    w = model.emission_weighted
    beta = np.empty((obs.size, model.num_states))
    beta[-1] = 1.0
    for t in range(obs.size - 2, -1, -1):
        beta[t] = w[obs[t + 1]] @ beta[t + 1] / c[t + 1]
    return beta


def forward_backward(model: HmmModel, obs) -> ScaledFbResult:
    alpha, c = scaled_forward(model, obs)
    beta = scaled_backward(model, obs, c)
    for arr in (alpha, beta, c):
        arr.setflags(write=False)
    return ScaledFbResult(alpha, beta, c)


def state_marginal(fb: ScaledFbResult, t: int) -> np.ndarray:
    """p(S_t = j | o) for every j."""
    return fb.alpha_hat[t] * fb.beta_hat[t]


def pairwise_marginal(model: HmmModel, obs, fb: ScaledFbResult, t: int) -> np.ndarray:
    """``xi[i, j] = p(S_{t-1} = i, S_t = j | o)`` for ``1 <= t <= T``."""
    if not 1 <= t < fb.length:
        raise IndexError(f"pairwise marginal needs 1 <= t <= {fb.length - 1}, got {t}")
    w = model.emission_weighted[obs[t]]
    return fb.alpha_hat[t - 1][:, None] * w * fb.beta_hat[t][None, :] / fb.c[t]


def range_marginal(model: HmmModel, obs, fb: ScaledFbResult,
                   constraint: SubseqConstraint) -> float:
    """p(s_{l:r} | o); zero for constraints through a zero-probability kernel."""
    constraint.check(model.num_states, fb.length)
    l, s = constraint.l, constraint.values
    w = model.emission_weighted
    p = fb.alpha_hat[l, s[0]]
    for k in range(1, len(s)):
        t = l + k
        p *= w[obs[t], s[k - 1], s[k]] / fb.c[t]
    return float(p * fb.beta_hat[constraint.r, s[-1]])


def log_likelihood(fb: ScaledFbResult) -> float:
    """ln p(o) = sum_t ln c_t."""
    return float(np.log(fb.c).sum())


# -- generic layer ---------------------------------------------------------

@dataclass(frozen=True)
class ChainKernels:
    """Local kernels of a chain: ``u0[s0]`` and ``u[t-1][s_{t-1}][s_t]`` for t = 1..T."""

    u0: Sequence[Any]
    u: Sequence[Sequence[Sequence[Any]]]

    def __post_init__(self):
        n = len(self.u0)
        for t, mat in enumerate(self.u, start=1):
            if len(mat) != n or any(len(row) != n for row in mat):
                raise ValueError(f"kernel u_{t} is not {n}x{n}")

    @property
    def num_states(self) -> int:
        return len(self.u0)

    @property
    def length(self) -> int:
        return len(self.u) + 1

    def kernel(self, t: int):
        return self.u[t - 1]


def generic_forward(kernels: ChainKernels, ops: Semiring) -> list[list]:
    n = kernels.num_states
    alpha = [list(kernels.u0)]
    for t in range(1, kernels.length):
        u, prev = kernels.kernel(t), alpha[-1]
        alpha.append([ops.sum(ops.times(u[i][j], prev[i]) for i in range(n))
                      for j in range(n)])
    return alpha


def generic_backward(kernels: ChainKernels, ops: Semiring) -> list[list]:
    n = kernels.num_states
    beta = [[ops.one] * n]
    for t in range(kernels.length - 2, -1, -1):
        u, nxt = kernels.kernel(t + 1), beta[0]
        beta.insert(0, [ops.sum(ops.times(u[i][j], nxt[j]) for j in range(n))
                        for i in range(n)])
    return beta


def generic_marginal(kernels: ChainKernels, ops: Semiring, alpha, beta,
                     constraint: SubseqConstraint):
    """``alpha_l(s_l) (x) prod u_i(s_{i-1}, s_i) (x) beta_r(s_r)``."""
    constraint.check(kernels.num_states, kernels.length)
    l, s = constraint.l, constraint.values
    acc = alpha[l][s[0]]
    for k in range(1, len(s)):
        acc = ops.times(acc, kernels.kernel(l + k)[s[k - 1]][s[k]])
    return ops.times(acc, beta[constraint.r][s[-1]])


def generic_normalize(alpha_last, ops: Semiring):
    return ops.sum(alpha_last)


def hmm_kernels(model: HmmModel, obs, ops: Semiring = REAL) -> ChainKernels:
    """Normalized HMM kernels ``z0 = pi b / c_0`` and ``z_t = a b / c_t``.

    Their chain product is p(s | o).  For the entropy semiring each weight
    is lifted to ``(z, z log z)``.
    """
    obs = check_obs(model, obs)
    _, c = scaled_forward(model, obs)
    if ops.name == "real":
        lift = float
    elif ops.name == "entropy":
        lift = esr_lift
    else:
        raise ValueError(f"no HMM kernel lifting for semiring {ops.name!r}")
    z0 = model.pi * model.b[:, obs[0]] / c[0]
    u = [(model.emission_weighted[obs[t]] / c[t]).tolist() for t in range(1, obs.size)]
    return ChainKernels(
        u0=[lift(x) for x in z0],
        u=[[[lift(x) for x in row] for row in mat] for mat in u],
    )
