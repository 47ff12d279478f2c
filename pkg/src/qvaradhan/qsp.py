"""Jump-process representation of ``Tr e^{f(X) - H}``.

In the eigenbasis of ``X`` write ``-H = -diag(H_D) + Gamma * phase`` where
``Gamma`` is the symmetric Q-matrix with off-diagonal rates ``|H_jk|`` and
``phase_jk = -H_jk / |H_jk|``. A Feynman-Kac expansion then gives::

    Tr e^{f(X) - H} = m * E[ 1{xi(1) = xi(0)} * prod(phases)
                             * exp(int f(lambda_xi) - int H_D(xi)) ]

for the continuous-time chain ``xi`` generated by ``Gamma`` with a uniform
initial state.

Paths are simulated in blocks of ``BLOCK`` paths, vectorized across the
block. Block ``b`` draws from its own child stream of the seed, so results
do not depend on how blocks are spread over workers.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .linalg import as_hermitian, child_rng

BLOCK = 4096


@dataclass(frozen=True, eq=False)
class GammaGenerator:
    diagonal_shift: np.ndarray
    rates: np.ndarray
    phases: np.ndarray  # nan where the rate is zero

    @property
    def dim(self) -> int:
        return len(self.diagonal_shift)

    @property
    def matrix(self) -> np.ndarray:
        """The Q-matrix: off-diagonal rates, rows summing to zero."""
        G = self.rates.copy()
        G[np.diag_indices(self.dim)] = -self.rates.sum(axis=1)
        return G

    @property
    def exit_rates(self) -> np.ndarray:
        """Total rate out of each state, ``sum_j rates(j, i)``."""
        return self.rates.sum(axis=0)


@dataclass(frozen=True)
class JumpPath:
    initial_state: int
    jump_times: tuple
    states_after_jump: tuple

    def __post_init__(self):
        if len(self.jump_times) != len(self.states_after_jump):
            raise ValueError("one state per jump time is required")
        times = np.asarray(self.jump_times, dtype=float)
        if times.size and (np.any(np.diff(times) <= 0) or times[0] <= 0 or times[-1] >= 1):
            raise ValueError("jump times must be strictly increasing inside (0, 1)")
        states = (self.initial_state,) + tuple(self.states_after_jump)
        if any(a == b for a, b in zip(states, states[1:])):
            raise ValueError("consecutive states must differ")

    @property
    def final_state(self) -> int:
        return self.states_after_jump[-1] if self.states_after_jump else self.initial_state

    def state_at(self, t: float) -> int:
        """Right-continuous value of the path at time ``t``."""
        k = int(np.searchsorted(np.asarray(self.jump_times, dtype=float), t, side="right"))
        return self.initial_state if k == 0 else self.states_after_jump[k - 1]


@dataclass(frozen=True)
class PathWeight:
    phase: complex
    diagonal_action: float
    observable_action: float

    @property
    def value(self) -> complex:
        return self.phase * math.exp(self.observable_action - self.diagonal_action)


def build_generator(H) -> GammaGenerator:
    """Generator for ``H`` given as a matrix in the eigenbasis of ``X``."""
    H = as_hermitian(H)
    m = H.shape[0]
    off = H.copy()
    off[np.diag_indices(m)] = 0
    rates = np.abs(off)
    with np.errstate(invalid="ignore", divide="ignore"):
        phases = np.where(rates > 0, -off / np.where(rates > 0, rates, 1.0), np.nan + 0j)
    shift = np.diag(H).real - rates.sum(axis=1)
    rates.setflags(write=False)
    phases.setflags(write=False)
    shift.setflags(write=False)
    return GammaGenerator(shift, rates, phases)


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ValueError("at least one time is required")
    if np.any(times < 0) or np.any(times > 1):
        raise ValueError("times must lie in [0, 1]")
    if np.any(np.diff(times) <= 0):
        raise ValueError("times must be strictly increasing")
    return times


def _propagator(w, V, s):
    return (V * np.exp(-s * w)) @ V.conj().T


def kappa_marginal(H, X, times: Sequence[float], sets: Sequence[Sequence[int]]) -> complex:
    """``Tr[e^{-(1-t_N)H} P_N e^{-(t_N - t_{N-1})H} ... P_1 e^{-t_1 H}]``.

    ``P_k`` projects onto the eigenvectors of ``X`` with indices ``sets[k]``
    (ascending eigenvalue order).
    """
    H = as_hermitian(H)
    X = as_hermitian(X)
    times = _check_times(times)
    if len(sets) != len(times):
        raise ValueError("need one index set per time")
    _, U = np.linalg.eigh(X)
    Hx = U.conj().T @ H @ U
    w, V = np.linalg.eigh((Hx + Hx.conj().T) / 2)
    m = H.shape[0]
    M = np.eye(m, dtype=complex)
    prev = 0.0
    for t, A in zip(times, sets):
        M = _propagator(w, V, t - prev) @ M
        mask = np.zeros(m, bool)
        mask[list(A)] = True
        M = M * mask[:, None]
        prev = t
    M = _propagator(w, V, 1.0 - prev) @ M
    return complex(np.trace(M))


# -- simulation --------------------------------------------------------------

def _jump_table(g: GammaGenerator) -> np.ndarray:
    """``table[i]`` is the cumulative target distribution out of state ``i``."""
    exit = g.exit_rates
    cols = g.rates.T / np.where(exit > 0, exit, 1.0)[:, None]
    cum = np.cumsum(cols, axis=1)
    cum[exit > 0] /= cum[exit > 0, -1:]
    return cum


def _simulate(g: GammaGenerator, rng: np.random.Generator, count: int,
              fvals: np.ndarray | None = None, horizon: float = 1.0, record: bool = False):
    """Simulate ``count`` paths on ``[0, horizon]`` and accumulate their weights."""
    m = g.dim
    exit = g.exit_rates
    table = _jump_table(g)
    fvals = np.zeros(m) if fvals is None else fvals
    start = rng.integers(m, size=count)
    state = start.copy()
    t = np.zeros(count)
    phase = np.ones(count, dtype=complex)
    dact = np.zeros(count)
    oact = np.zeros(count)
    jumps = np.zeros(count, dtype=int)
    log = [([], []) for _ in range(count)] if record else None
    active = np.arange(count)
    while active.size:
        s = state[active]
        e = rng.standard_exponential(active.size)
        with np.errstate(divide="ignore"):
            tau = np.where(exit[s] > 0, e / np.where(exit[s] > 0, exit[s], 1.0), np.inf)
        tnext = t[active] + tau
        seg = np.minimum(tnext, horizon) - t[active]
        dact[active] += seg * g.diagonal_shift[s]
        oact[active] += seg * fvals[s]
        hop = tnext < horizon
        idx = active[hop]
        u = rng.random(idx.size)
        src = s[hop]
        dst = np.minimum((u[:, None] >= table[src]).sum(axis=1), m - 1)
        phase[idx] *= g.phases[dst, src]
        state[idx] = dst
        t[idx] = tnext[hop]
        jumps[idx] += 1
        if record:
            for p, tt, d in zip(idx, tnext[hop], dst):
                log[p][0].append(float(tt))
                log[p][1].append(int(d))
        active = idx
    out = dict(start=start, end=state, phase=phase, dact=dact, oact=oact, jumps=jumps)
    if record:
        out["paths"] = [JumpPath(int(s0), tuple(ts), tuple(ss)) for s0, (ts, ss) in zip(start, log)]
    return out


def sample_path(g: GammaGenerator, rng: np.random.Generator) -> JumpPath:
    """One path on ``[0, 1]`` with a uniform initial state."""
    return _simulate(g, rng, 1, record=True)["paths"][0]


def path_weight(p: JumpPath, g: GammaGenerator, eigenvalues, f: Callable) -> PathWeight:
    states = (p.initial_state,) + tuple(p.states_after_jump)
    times = (0.0,) + tuple(p.jump_times) + (1.0,)
    if any(not 0 <= s < g.dim for s in states):
        raise ValueError("path leaves the state space")
    fv = np.asarray(f(np.asarray(eigenvalues, dtype=float)), dtype=float)
    phase = 1.0 + 0j
    for a, b in zip(states, states[1:]):
        if g.rates[b, a] == 0:
            raise ValueError(f"jump {a} -> {b} has zero rate")
        phase *= g.phases[b, a]
    dact = oact = 0.0
    for k, s in enumerate(states):
        seg = times[k + 1] - times[k]
        dact += seg * g.diagonal_shift[s]
        oact += seg * fv[s]
    return PathWeight(complex(phase), float(dact), float(oact))


def _blocks(samples: int):
    return [(b, min(BLOCK, samples - b * BLOCK)) for b in range(-(-samples // BLOCK))]


def _run_blocks(task, samples: int, workers: int):
    blocks = _blocks(samples)
    if workers <= 1 or len(blocks) == 1:
        return [task(b, n) for b, n in blocks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda bn: task(*bn), blocks))


def path_estimates(H, X, f: Callable, samples: int, seed: int, workers: int = 1) -> np.ndarray:
    """Per-path complex estimator values, in path order."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    H = as_hermitian(H)
    X = as_hermitian(X)
    lam, U = np.linalg.eigh(X)
    g = build_generator(U.conj().T @ H @ U)
    fvals = np.asarray(f(lam), dtype=float) * np.ones(g.dim)
    m = g.dim

    def task(b, n):
        r = _simulate(g, child_rng(seed, b), n, fvals)
        closed = r["end"] == r["start"]
        return m * closed * r["phase"] * np.exp(r["oact"] - r["dact"])

    return np.concatenate(_run_blocks(task, samples, workers))


def estimate_trace(H, X, f: Callable, samples: int, seed: int, workers: int = 1):
    """Monte Carlo estimate of ``Tr e^{f(X) - H}`` and the standard error of its real part."""
    w = path_estimates(H, X, f, samples, seed, workers)
    est = complex(w.mean())
    stderr = float(w.real.std(ddof=1) / math.sqrt(len(w))) if len(w) > 1 else 0.0
    return est, stderr


def imaginary_stderr(w: np.ndarray) -> float:
    return float(w.imag.std(ddof=1) / math.sqrt(len(w))) if len(w) > 1 else 0.0


def jump_excess_probability(g: GammaGenerator, delta: float, samples: int, seed: int,
                            workers: int = 1) -> float:
    """Probability that the chain jumps at least twice in a window of length ``delta``.

    The chain starts uniformly, which is stationary for a symmetric
    generator, so the window is taken as ``[0, delta]``.
    """
    if not 0 < delta <= 1:
        raise ValueError("delta must lie in (0, 1]")
    if samples < 1:
        raise ValueError("samples must be at least 1")

    def task(b, n):
        r = _simulate(g, child_rng(seed, b), n, horizon=delta)
        return int(np.count_nonzero(r["jumps"] >= 2))

    return sum(_run_blocks(task, samples, workers)) / samples


def jump_excess_bound(g: GammaGenerator, delta: float) -> float:
    """``||Gamma||^2 delta^2 / 2``; dominates the two-jump probability since
    every exit rate is at most the operator norm of ``Gamma``."""
    return float(np.linalg.norm(g.matrix, 2)) ** 2 * delta**2 / 2
