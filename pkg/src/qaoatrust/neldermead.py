from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

RHO = 1.0
CHI = 2.0
PSI = 0.5
SIGMA = 0.5

X_ATOL = 1e-4
F_ATOL = 1e-6
INITIAL_STEP = 0.1


@dataclass
class NelderMeadResult:
    """
    Outcome of one simplex search.

    Parameters
    ----------
    x : np.ndarray
        Best point evaluated.
    fun : float
        Objective value at ``x``.
    evals : int
        Objective calls made by the search.
    iterations : int
        Simplex iterations performed.
    converged : bool
        Whether both tolerances were met before the iteration cap.
    trace : list of (np.ndarray, float)
        Every evaluated point with its value, in call order.
    """

    x: np.ndarray
    fun: float
    evals: int
    iterations: int
    converged: bool
    trace: list[tuple[np.ndarray, float]] = field(repr=False)


def nelder_mead(
    objective: Callable[[np.ndarray], float],
    x0: np.ndarray,
    max_iters: int,
    projector: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    x_atol: float = X_ATOL,
    f_atol: float = F_ATOL,
    initial_step: Union[float, np.ndarray] = INITIAL_STEP,
    initial_value: Optional[float] = None,
) -> NelderMeadResult:
    """
    Maximize ``objective`` with the Nelder-Mead simplex method.

    Parameters
    ----------
    objective : callable
        Function to maximize.
    x0 : np.ndarray
        Starting vertex.
    max_iters : int
        Iteration cap (simplex iterations, not objective calls).
    projector : callable, optional
        Applied to every candidate vertex before it is evaluated.
    x_atol, f_atol : float, optional
        Stop once the simplex spread in position and value are both within
        tolerance.
    initial_step : float or np.ndarray, optional
        Per-axis offsets of the initial simplex.
    initial_value : float, optional
        Known objective value at ``x0``; skips re-evaluating the start.

    Returns
    -------
    NelderMeadResult

    Raises
    ------
    ValueError
        If the objective returns a non-finite value or ``x0`` is not finite.
    """
    x0 = np.asarray(x0, dtype=np.float64).ravel()
    if not np.all(np.isfinite(x0)):
        raise ValueError(f"Start point must be finite, got {x0}")
    dim = x0.size
    steps = np.broadcast_to(np.asarray(initial_step, dtype=np.float64), (dim,))
    project = projector if projector is not None else (lambda x: x)
    trace: list[tuple[np.ndarray, float]] = []

    def f(x: np.ndarray) -> float:
        value = float(objective(x))
        if not np.isfinite(value):
            raise ValueError(f"Objective returned a non-finite value at {x}")
        trace.append((x.copy(), value))
        # minimize the negation internally
        return -value

    start = project(x0)
    sim = np.empty((dim + 1, dim))
    fsim = np.empty(dim + 1)
    sim[0] = start
    if initial_value is not None and np.array_equal(start, x0):
        fsim[0] = -float(initial_value)
    else:
        fsim[0] = f(start)
    for i in range(dim):
        vertex = start.copy()
        vertex[i] += steps[i]
        sim[i + 1] = project(vertex)
        fsim[i + 1] = f(sim[i + 1])

    order = np.argsort(fsim, kind="stable")
    sim, fsim = sim[order], fsim[order]

    iterations = 0
    converged = False
    while iterations < max_iters:
        if (
            np.max(np.abs(sim[1:] - sim[0])) < x_atol
            and np.max(np.abs(fsim[1:] - fsim[0])) < f_atol
        ):
            converged = True
            break
        iterations += 1

        centroid = sim[:-1].mean(axis=0)
        xr = project(centroid + RHO * (centroid - sim[-1]))
        fr = f(xr)
        if fr < fsim[0]:
            xe = project(centroid + RHO * CHI * (centroid - sim[-1]))
            fe = f(xe)
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        else:
            shrink = False
            if fr < fsim[-1]:
                xc = project(centroid + PSI * RHO * (centroid - sim[-1]))
                fc = f(xc)
                if fc <= fr:
                    sim[-1], fsim[-1] = xc, fc
                else:
                    shrink = True
            else:
                xcc = project(centroid + PSI * (sim[-1] - centroid))
                fcc = f(xcc)
                if fcc < fsim[-1]:
                    sim[-1], fsim[-1] = xcc, fcc
                else:
                    shrink = True
            if shrink:
                for j in range(1, dim + 1):
                    sim[j] = project(sim[0] + SIGMA * (sim[j] - sim[0]))
                    fsim[j] = f(sim[j])

        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]

    if trace:
        best = int(np.argmax([value for _, value in trace]))
        x_best, f_best = trace[best]
        if initial_value is not None and initial_value > f_best:
            x_best, f_best = start, float(initial_value)
    else:
        x_best, f_best = start, float(initial_value)
    return NelderMeadResult(
        x=x_best.copy(),
        fun=f_best,
        evals=len(trace),
        iterations=iterations,
        converged=converged,
        trace=trace,
    )
