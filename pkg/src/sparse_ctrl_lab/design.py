"""Sparse steering inputs for ``x_k = Φ x_{k-1} + u_k``.

Over a horizon ``K`` the terminal state is

    x_K = Φ^K x_0 + Σ_{k=1}^{K} Φ^{K-k} u_k,

so finding admissible ``u_1..u_K`` is a sparse recovery problem against the
dictionary ``[Φ^{K-1}, ..., Φ, I]`` whose column blocks are the time steps.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .control import DEFAULT_POLICY, LinearSystem, RankPolicy, is_sparse_controllable
from .errors import InfeasibleError, ParameterError
from .sparsity import Support, SupportFamily


@dataclass
class SteeringProblem:
    phi: np.ndarray
    x0: np.ndarray
    xf: np.ndarray
    family: SupportFamily
    horizon: int | None = None  # defaults to n
    residual_tol: float = 1e-8

    def __post_init__(self):
        self.phi = np.asarray(getattr(self.phi, "a_bar", self.phi), dtype=float)
        self.x0 = np.asarray(self.x0, dtype=float).ravel()
        self.xf = np.asarray(self.xf, dtype=float).ravel()
        n = self.phi.shape[0]
        if self.phi.shape != (n, n):
            raise ParameterError(f"system matrix must be square, got {self.phi.shape}")
        if self.x0.size != n or self.xf.size != n:
            raise ParameterError(f"x0/xf must have length {n}")
        if self.family.n != n:
            raise ParameterError(f"family ambient dimension {self.family.n} != n={n}")
        if self.horizon is None:
            self.horizon = n
        if self.horizon < 1:
            raise ParameterError("horizon must be >= 1")

    @property
    def n(self) -> int:
        return self.phi.shape[0]


@dataclass
class ControlPlan:
    inputs: np.ndarray  # shape (K, n); row k-1 is u_k
    supports: list[Support]
    residual_norm: float
    # least-squares residual after each greedy selection
    history: list[float] = field(default_factory=list)

    @property
    def horizon(self) -> int:
        return self.inputs.shape[0]


def build_reachability_matrix(phi: np.ndarray, horizon: int) -> np.ndarray:
    """``[Φ^{K-1}, Φ^{K-2}, ..., Φ, I]`` as an ``n × K n`` matrix."""
    if horizon < 1:
        raise ParameterError("horizon must be >= 1")
    phi = np.asarray(phi, dtype=float)
    n = phi.shape[0]
    powers = [np.eye(n)]
    for _ in range(horizon - 1):
        powers.append(phi @ powers[-1])
    return np.hstack(powers[::-1])


def simulate(phi: np.ndarray, x0: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Trajectory ``x_0, ..., x_K`` of the recursion, one state per row."""
    phi = np.asarray(phi, dtype=float)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    traj = [np.asarray(x0, dtype=float).ravel()]
    for u in inputs:
        traj.append(phi @ traj[-1] + u)
    return np.vstack(traj)


def terminal_state(phi: np.ndarray, x0: np.ndarray, inputs: np.ndarray) -> np.ndarray:
    """Closed-form ``x_K`` via the reachability matrix (independent of :func:`simulate`)."""
    phi = np.asarray(phi, dtype=float)
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    horizon = inputs.shape[0]
    free = np.linalg.matrix_power(phi, horizon) @ np.asarray(x0, dtype=float).ravel()
    return free + build_reachability_matrix(phi, horizon) @ inputs.ravel()


def _plan_from(coef: np.ndarray, problem: SteeringProblem) -> ControlPlan:
    n, horizon = problem.n, problem.horizon
    inputs = coef.reshape(horizon, n)
    supports = [problem.family.complete(np.flatnonzero(u)) for u in inputs]
    x_final = simulate(problem.phi, problem.x0, inputs)[-1]
    return ControlPlan(inputs, supports, float(np.linalg.norm(problem.xf - x_final)))


def _pursuit(problem: SteeringProblem, dictionary: np.ndarray, target: np.ndarray,
             seed: Support = ()) -> tuple[np.ndarray, list[float]]:
    n, horizon, family = problem.n, problem.horizon, problem.family
    norms = np.linalg.norm(dictionary, axis=0)
    usable = norms > 1e-14 * max(1.0, norms.max(initial=0.0))

    step_support: list[set[int]] = [set() for _ in range(horizon)]
    selected = [(horizon - 1) * n + i for i in seed]
    step_support[-1].update(seed)
    coef_sel = np.zeros(0)
    residual = target.copy()
    if selected:
        coef_sel, *_ = np.linalg.lstsq(dictionary[:, selected], target, rcond=None)
        residual = target - dictionary[:, selected] @ coef_sel
    history = [float(np.linalg.norm(residual))]

    while history[-1] > problem.residual_tol:
        admissible = usable.copy()
        admissible[selected] = False
        for col in np.flatnonzero(admissible):
            k, i = divmod(int(col), n)
            if i not in step_support[k] and not family.is_extendable(step_support[k] | {i}):
                admissible[col] = False
        if not admissible.any():
            break
        scores = np.zeros(dictionary.shape[1])
        scores[admissible] = np.abs(dictionary[:, admissible].T @ residual) / norms[admissible]
        best = int(np.argmax(scores))
        if scores[best] <= 1e-14 * max(1.0, history[0]):
            break
        trial_sel = selected + [best]
        coef, *_ = np.linalg.lstsq(dictionary[:, trial_sel], target, rcond=None)
        new_residual = target - dictionary[:, trial_sel] @ coef
        new_norm = float(np.linalg.norm(new_residual))
        if new_norm >= history[-1]:
            break
        selected, coef_sel, residual = trial_sel, coef, new_residual
        k, i = divmod(best, n)
        step_support[k].add(i)
        history.append(new_norm)

    coef_full = np.zeros(horizon * n)
    coef_full[selected] = coef_sel
    return coef_full, history


def design_inputs(problem: SteeringProblem, policy: RankPolicy = DEFAULT_POLICY) -> ControlPlan:
    """Pattern-constrained orthogonal matching pursuit with full refit.

    Each iteration picks the dictionary column most correlated with the
    current residual (correlations normalized by column norm) among columns
    whose time step keeps an admissible support after adding it, then refits
    all selected coefficients by least squares. Stops when the residual is
    within ``residual_tol`` or no admissible column reduces it.

    Greedy choices in the last step can block the directions outside the
    range of ``Φ``. If the first pass stalls, the pursuit is rerun with the
    last step pre-loaded with the witness support of the controllability
    check, which spans those directions whenever the system is controllable.

    Raises:
        InfeasibleError: residual above tolerance at termination; carries the
            best plan and the controllability verdict.
    """
    horizon = problem.horizon
    dictionary = build_reachability_matrix(problem.phi, horizon)
    target = problem.xf - np.linalg.matrix_power(problem.phi, horizon) @ problem.x0

    coef, history = _pursuit(problem, dictionary, target)
    plan = _plan_from(coef, problem)
    plan.history = history
    if plan.residual_norm <= problem.residual_tol:
        return plan

    verdict = is_sparse_controllable(LinearSystem(problem.phi), problem.family, policy)
    if verdict.witness is not None:
        coef, history = _pursuit(problem, dictionary, target, seed=verdict.witness)
        seeded = _plan_from(coef, problem)
        seeded.history = history
        if seeded.residual_norm < plan.residual_norm:
            plan = seeded
    if plan.residual_norm > problem.residual_tol:
        raise InfeasibleError(
            f"residual {plan.residual_norm:.3e} above tolerance {problem.residual_tol:.1e}",
            plan=plan, residual=plan.residual_norm, verdict=verdict,
        )
    return plan
