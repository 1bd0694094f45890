"""
Exact statevector simulation of depth-p MaxCut QAOA.

Basis index ``z`` encodes the spin of vertex ``i`` in bit ``i``. Angle vectors
are flat arrays ordered ``(gamma_1..gamma_p, beta_1..beta_p)``.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .graphs import MAX_VERTICES, Edge, Graph
from .utils import derive_seed, make_rng

FD_STEP = 1e-5
FINAL_MEASUREMENT_SHOTS = 256
NORM_ATOL = 1e-9


@dataclass(frozen=True)
class AngleVector:
    """
    QAOA parameters in radians.

    Parameters
    ----------
    gammas : tuple of float
        Cost-layer angles, one per layer.
    betas : tuple of float
        Mixer angles, one per layer.
    """

    gammas: tuple[float, ...]
    betas: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.gammas) != len(self.betas) or not self.gammas:
            raise ValueError(
                f"Need p >= 1 gammas and betas of equal length, got "
                f"{len(self.gammas)} and {len(self.betas)}"
            )
        if not np.all(np.isfinite(self.gammas + self.betas)):
            raise ValueError("Angles must be finite")

    @property
    def p(self) -> int:
        return len(self.gammas)

    @classmethod
    def from_array(cls, theta: Sequence[float]) -> "AngleVector":
        arr = np.asarray(theta, dtype=np.float64).ravel()
        if arr.size % 2:
            raise ValueError(f"Flat angle vector must have even length, got {arr.size}")
        p = arr.size // 2
        return cls(gammas=tuple(arr[:p].tolist()), betas=tuple(arr[p:].tolist()))

    def as_array(self) -> np.ndarray:
        return np.array(self.gammas + self.betas, dtype=np.float64)


ThetaLike = Union[AngleVector, Sequence[float], np.ndarray]


def as_theta(theta: ThetaLike) -> np.ndarray:
    """Validate and flatten an angle vector."""
    arr = theta.as_array() if isinstance(theta, AngleVector) else np.asarray(theta, dtype=np.float64).ravel()
    if arr.size == 0 or arr.size % 2:
        raise ValueError(f"Flat angle vector must have even positive length, got {arr.size}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"Angles must be finite, got {arr}")
    return arr


@dataclass(frozen=True)
class CutTable:
    """Cut value of every bitstring, ``costs[z] = C(z)``."""

    costs: np.ndarray

    @property
    def c_max(self) -> int:
        return int(self.costs.max())


@lru_cache(maxsize=512)
def _cost_vector(n: int, edges: tuple[Edge, ...]) -> np.ndarray:
    z = np.arange(2**n, dtype=np.int64)
    costs = np.zeros(2**n, dtype=np.int64)
    for i, j in edges:
        costs += ((z >> i) ^ (z >> j)) & 1
    costs.setflags(write=False)
    return costs


def cut_table(g: Graph) -> CutTable:
    """
    Exhaustive table of cut values.

    Raises
    ------
    ValueError
        If the graph has more than 24 vertices.
    """
    if g.n > MAX_VERTICES:
        raise ValueError(f"Cut table limited to n <= {MAX_VERTICES}, got n={g.n}")
    return CutTable(costs=_cost_vector(g.n, g.edges))


def brute_force_maxcut(g: Graph) -> tuple[int, np.ndarray]:
    """Optimal cut value and the indices of every optimal bitstring."""
    table = cut_table(g)
    return table.c_max, np.flatnonzero(table.costs == table.c_max)


def bitstring(z: int, n: int) -> str:
    """Spin string with vertex 0 first."""
    return "".join(str((int(z) >> i) & 1) for i in range(n))


def circuit_resources(g: Graph, p: int) -> dict[str, int]:
    """
    Gate counts of one objective evaluation of the depth-p circuit.

    Each ZZ term compiles to two CNOTs around one rotation, and each layer
    also applies one ``R_x`` per qubit.
    """
    return {"cnot": 4 * p * g.m + 2 * p * g.n, "rotations": 2 * p * g.m + 2 * p * g.n}


@dataclass(frozen=True)
class Statevector:
    amplitudes: np.ndarray

    @property
    def n(self) -> int:
        return int(self.amplitudes.size).bit_length() - 1

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.probabilities())))


@dataclass(frozen=True)
class NoiseModel:
    """
    Global depolarizing noise and optional finite-shot estimation.

    Parameters
    ----------
    epsilon : float
        Per-layer depolarizing strength in [0, 1].
    shots : int, optional
        Shots per objective evaluation; ``None`` means exact expectations.
    """

    epsilon: float = 0.0
    shots: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {self.epsilon}")
        if self.shots is not None and self.shots < 1:
            raise ValueError(f"shots must be positive, got {self.shots}")

    def nu(self, p: int) -> float:
        """Effective mixing weight ``1 - (1 - epsilon)^(2p)``."""
        return 1.0 - (1.0 - self.epsilon) ** (2 * p)


EXACT = NoiseModel()


def _apply_mixer(psi: np.ndarray, n: int, beta: float) -> None:
    c, s = np.cos(beta), np.sin(beta)
    for q in range(n):
        view = psi.reshape(2 ** (n - 1 - q), 2, 2**q)
        a0 = view[:, 0, :].copy()
        a1 = view[:, 1, :]
        view[:, 0, :] = c * a0 - 1j * s * a1
        view[:, 1, :] = -1j * s * a0 + c * a1


def evolve(g: Graph, theta: ThetaLike) -> Statevector:
    """
    Prepare the depth-p QAOA state from the uniform superposition.

    Parameters
    ----------
    g : Graph
    theta : AngleVector or array-like
        Flat ``(gammas, betas)`` vector.

    Returns
    -------
    Statevector
    """
    arr = as_theta(theta)
    p = arr.size // 2
    costs = cut_table(g).costs.astype(np.float64)
    psi = np.full(2**g.n, 2.0 ** (-g.n / 2), dtype=np.complex128)
    for layer in range(p):
        gamma, beta = arr[layer], arr[p + layer]
        if gamma != 0.0:
            psi *= np.exp(-1j * gamma * costs)
        if beta != 0.0:
            _apply_mixer(psi, g.n, beta)
    return Statevector(amplitudes=psi)


def expectation(g: Graph, theta: ThetaLike) -> float:
    """Expected cut value ``F(theta) = sum_z C(z) |a_z|^2``."""
    probs = evolve(g, theta).probabilities()
    return float(np.dot(cut_table(g).costs, probs))


def noisy_expectation(g: Graph, theta: ThetaLike, noise: NoiseModel) -> float:
    """Depolarized objective ``(1 - nu) F + nu m / 2``."""
    arr = as_theta(theta)
    nu = noise.nu(arr.size // 2)
    if nu == 0.0:
        return expectation(g, arr)
    return (1.0 - nu) * expectation(g, arr) + nu * g.m / 2.0


def output_distribution(g: Graph, theta: ThetaLike, noise: NoiseModel = EXACT) -> np.ndarray:
    """Measurement distribution, mixed with the uniform one under noise."""
    arr = as_theta(theta)
    probs = evolve(g, arr).probabilities()
    nu = noise.nu(arr.size // 2)
    if nu > 0.0:
        probs = (1.0 - nu) * probs + nu / probs.size
    return probs / probs.sum()


def sample_bitstrings(
    g: Graph, theta: ThetaLike, shots: int, seed: int, noise: NoiseModel = EXACT
) -> np.ndarray:
    """
    Draw measurement outcomes.

    Parameters
    ----------
    g : Graph
    theta : AngleVector or array-like
    shots : int
        Number of i.i.d. draws, at least 1.
    seed : int
        Seed of the draw sequence.
    noise : NoiseModel, optional
        Depolarizing strength applied to the distribution.

    Returns
    -------
    np.ndarray
        Basis-state indices; use :func:`bitstring` for the spin strings.
    """
    if shots < 1:
        raise ValueError(f"shots must be positive, got {shots}")
    probs = output_distribution(g, theta, noise)
    return make_rng(seed).choice(probs.size, size=shots, p=probs)


def shot_estimate(
    g: Graph, theta: ThetaLike, shots: int, seed: int, noise: NoiseModel = EXACT
) -> float:
    """Empirical mean cut over ``shots`` draws."""
    draws = sample_bitstrings(g, theta, shots, seed, noise)
    return float(cut_table(g).costs[draws].mean())


def shot_seed(seed: int, index: int) -> int:
    """Seed of the measurement batch taken at the ``index``-th evaluation."""
    return derive_seed(seed, "shots", index)


def best_sampled_ratio(
    trace: Sequence[ThetaLike],
    g: Graph,
    shots: int,
    seed: int,
    noise: NoiseModel = EXACT,
) -> float:
    """
    Best measured cut over a trace of angle vectors, divided by ``C_max``.

    The ``i``-th entry is measured ``shots`` times with seed
    ``shot_seed(seed, i)``.

    Raises
    ------
    ValueError
        If the trace is empty.
    """
    if len(trace) == 0:
        raise ValueError("Cannot compute a sampled ratio from an empty trace")
    table = cut_table(g)
    if table.c_max == 0:
        return 1.0
    best = 0
    for index, theta in enumerate(trace):
        draws = sample_bitstrings(g, theta, shots, shot_seed(seed, index), noise)
        best = max(best, int(table.costs[draws].max()))
    return best / table.c_max


def finite_diff_gradient(
    g: Graph, theta: ThetaLike, h: float = FD_STEP, noise: NoiseModel = EXACT
) -> np.ndarray:
    """Central-difference gradient of the (noisy) expectation."""
    if h <= 0:
        raise ValueError(f"Step must be positive, got {h}")
    arr = as_theta(theta)
    grad = np.empty_like(arr)
    for j in range(arr.size):
        step = np.zeros_like(arr)
        step[j] = h
        grad[j] = (noisy_expectation(g, arr + step, noise) - noisy_expectation(g, arr - step, noise)) / (2 * h)
    return grad


def finite_diff_hessian(g: Graph, theta: ThetaLike, h: float = 1e-4) -> np.ndarray:
    """Symmetric central-difference Hessian of the exact expectation."""
    if h <= 0:
        raise ValueError(f"Step must be positive, got {h}")
    arr = as_theta(theta)
    d = arr.size
    eye = np.eye(d) * h
    f0 = expectation(g, arr)
    hess = np.empty((d, d))
    for i in range(d):
        hess[i, i] = (expectation(g, arr + eye[i]) - 2 * f0 + expectation(g, arr - eye[i])) / h**2
        for j in range(i + 1, d):
            val = (
                expectation(g, arr + eye[i] + eye[j])
                - expectation(g, arr + eye[i] - eye[j])
                - expectation(g, arr - eye[i] + eye[j])
                + expectation(g, arr - eye[i] - eye[j])
            ) / (4 * h**2)
            hess[i, j] = hess[j, i] = val
    return hess


def _wrap(x: np.ndarray, period: float) -> np.ndarray:
    return (x + period / 2) % period - period / 2


def canonicalize_angles(theta: ThetaLike) -> np.ndarray:
    """
    Canonical representative of an angle vector under the landscape symmetries.

    ``F`` is unchanged by ``beta -> beta + pi``, ``gamma -> gamma + 2 pi`` and
    ``theta -> -theta``. The representative has gammas in ``[-pi, pi)``,
    betas in ``[-pi/2, pi/2)`` and a non-negative first gamma.
    """
    arr = as_theta(theta)
    p = arr.size // 2
    out = np.concatenate([_wrap(arr[:p], 2 * np.pi), _wrap(arr[p:], np.pi)])
    if out[0] < 0:
        out = -out
        out = np.concatenate([_wrap(out[:p], 2 * np.pi), _wrap(out[p:], np.pi)])
    return out


@dataclass
class MeteredObjective:
    """
    Objective wrapper that owns the evaluation counter of one optimization run.

    Every call is one objective evaluation: exact (possibly depolarized)
    expectation, or a shot estimate when ``noise.shots`` is set. Calls are
    recorded in ``trace`` in order.

    Parameters
    ----------
    graph : Graph
    noise : NoiseModel, optional
    seed : int, optional
        Seed of the per-evaluation measurement batches.
    """

    graph: Graph
    noise: NoiseModel = EXACT
    seed: int = 0
    trace: list[tuple[np.ndarray, float]] = field(default_factory=list, repr=False)
    best_measured_cut: int = 0

    def __call__(self, theta: ThetaLike) -> float:
        arr = as_theta(theta).copy()
        if self.noise.shots is None:
            value = noisy_expectation(self.graph, arr, self.noise)
        else:
            draws = sample_bitstrings(
                self.graph, arr, self.noise.shots, shot_seed(self.seed, len(self.trace)), self.noise
            )
            measured = cut_table(self.graph).costs[draws]
            value = float(measured.mean())
            self.best_measured_cut = max(self.best_measured_cut, int(measured.max()))
        if not np.isfinite(value):
            raise ValueError(f"Objective returned a non-finite value at {arr}")
        self.trace.append((arr, value))
        return value

    @property
    def evals(self) -> int:
        return len(self.trace)

    def best(self) -> tuple[np.ndarray, float]:
        """Best recorded ``(theta, value)``; the earliest wins ties."""
        if not self.trace:
            raise ValueError("No evaluations recorded")
        index = int(np.argmax([value for _, value in self.trace]))
        return self.trace[index]

    def sampled_ratio(self, theta: ThetaLike, final_shots: int = FINAL_MEASUREMENT_SHOTS) -> float:
        """
        Sampled approximation ratio of the run.

        With shots, every evaluation was already a measurement and the best
        measured cut is used. In exact mode ``final_shots`` draws are taken at
        ``theta``; they are not counted as evaluations.
        """
        c_max = cut_table(self.graph).c_max
        if c_max == 0:
            return 1.0
        if self.noise.shots is not None and self.trace:
            return self.best_measured_cut / c_max
        return best_sampled_ratio([theta], self.graph, final_shots, derive_seed(self.seed, "final"), self.noise)
