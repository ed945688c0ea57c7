"""Flows, leaf exploration, and drift transport along leaf paths.

The driftless system dx/dt = sum_i u^i g_i(x) foliates the window into
leaves. This module integrates flows of the generators (both signs,
since the controls are unconstrained), walks leaves with random
piecewise-constant words, and transports drift vectors from visited
points back to the base by solving the variational equation along the
reversed word. The transported drift sets feed the convex-position
test.

Integration is a hand-rolled Dormand-Prince 5(4) pair. The per-call
overhead of a general-purpose solver dominates at the segment lengths
used here (thousands of integrations of duration under one time unit),
so the stepper is local and allocation-light.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .fields import Point, VectorField
from .lie import BracketFamily

__all__ = [
    "StepControl",
    "ControlWord",
    "Segment",
    "LeafSample",
    "FlowError",
    "WindowEscapeError",
    "StepUnderflowError",
    "inflate_window",
    "integrate_flow",
    "pushforward_along",
    "transport_word",
    "sample_leaf",
    "shift_drift_set",
]


class FlowError(RuntimeError):
    pass


class WindowEscapeError(FlowError):
    """Trajectory left the inflated analysis window."""


class StepUnderflowError(FlowError):
    """Step size collapsed below h_min; the field is too stiff here."""


@dataclass(frozen=True)
class StepControl:
    atol: float = 1e-9
    rtol: float = 1e-9
    h_init: float = 0.01
    h_min: float = 1e-12
    max_steps: int = 100_000
    window: tuple[tuple[float, float], ...] | None = None  # already inflated


def inflate_window(
    window: Sequence[tuple[float, float]], factor: float = 0.2
) -> tuple[tuple[float, float], ...]:
    """Expand a box about its center by `factor` of each half-width."""
    out = []
    for lo, hi in window:
        mid = 0.5 * (lo + hi)
        half = 0.5 * (hi - lo) * (1.0 + factor)
        out.append((mid - half, mid + half))
    return tuple(out)


def _in_box(x: np.ndarray, box: tuple[tuple[float, float], ...] | None) -> bool:
    if box is None:
        return bool(np.all(np.isfinite(x)))
    for v, (lo, hi) in zip(x, box):
        if not (lo <= v <= hi):
            return False
    return True


# Dormand-Prince 5(4) coefficients
_DP_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DP_A = [
    np.array([]),
    np.array([1 / 5]),
    np.array([3 / 40, 9 / 40]),
    np.array([44 / 45, -56 / 15, 32 / 9]),
    np.array([19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]),
    np.array([9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]),
    np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84]),
]
_DP_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DP_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


def _integrate(
    rhs: Callable[[np.ndarray], np.ndarray],
    y0: np.ndarray,
    t: float,
    ctrl: StepControl,
    guard_dim: int | None = None,
) -> np.ndarray:
    """Adaptive DP54 from 0 to t (t may be negative).

    guard_dim: when the state embeds extra variational columns, only the
    first guard_dim entries are subject to the window check.
    """
    if t == 0.0:
        return y0.copy()
    y = y0.astype(float).copy()
    direction = 1.0 if t > 0 else -1.0
    remaining = abs(t)
    h = min(ctrl.h_init, remaining)
    k = np.empty((7, y.size))
    k0 = rhs(y)
    for _ in range(ctrl.max_steps):
        if remaining <= 0.0:
            return y
        h = min(h, remaining)
        hs = direction * h
        k[0] = k0
        for i in range(1, 7):
            yi = y + hs * (_DP_A[i] @ k[:i])
            k[i] = rhs(yi)
        y5 = y + hs * (_DP_B5 @ k)
        y4 = y + hs * (_DP_B4 @ k)
        err_vec = y5 - y4
        scale = ctrl.atol + ctrl.rtol * np.maximum(np.abs(y), np.abs(y5))
        err = float(np.sqrt(np.mean((err_vec / scale) ** 2)))
        if not np.isfinite(err):
            err = np.inf
        if err <= 1.0:
            y = y5
            k0 = k[6]  # FSAL: last stage is evaluated at the accepted point
            remaining -= h
            probe = y if guard_dim is None else y[:guard_dim]
            if not np.all(np.isfinite(y)) or not _in_box(probe, ctrl.window):
                raise WindowEscapeError(
                    f"trajectory left the inflated window near {probe}"
                )
        # standard step resize with safety factor
        factor = 0.9 * (err + 1e-16) ** -0.2
        h *= min(5.0, max(0.2, factor))
        if h < ctrl.h_min and h < remaining:
            raise StepUnderflowError(f"step size underflow at h={h:.2e}")
    raise StepUnderflowError(f"exceeded {ctrl.max_steps} steps")


def integrate_flow(
    V: VectorField, x0: Sequence[float], t: float, step: StepControl | None = None
) -> np.ndarray:
    """Flow point psi^V_t(x0); t may be negative."""
    ctrl = step or StepControl()
    fn = V.compiled()
    x0 = np.asarray(x0, dtype=float)
    return _integrate(fn, x0, t, ctrl)


def pushforward_along(
    V: VectorField,
    y: Sequence[float],
    t: float,
    eta: np.ndarray,
    step: StepControl | None = None,
) -> np.ndarray:
    """Transport tangent data eta from y along the flow of V for time t.

    Jointly integrates the trajectory and dW/ds = DV(x(s)) W with
    W(0) = eta. eta may be a single n-vector or an (n, k) column stack;
    the result, W(t) expressed at psi^V_t(y), has the same shape.
    """
    ctrl = step or StepControl()
    x, W = _flow_with_frame(V, np.asarray(y, dtype=float), t, np.asarray(eta, dtype=float), ctrl)
    return W


def _flow_with_frame(
    V: VectorField, y: np.ndarray, t: float, eta: np.ndarray, ctrl: StepControl
) -> tuple[np.ndarray, np.ndarray]:
    n = V.dim
    single = eta.ndim == 1
    cols = eta.reshape(n, -1)
    k = cols.shape[1]
    fn = V.compiled()
    jac = V.compiled_jacobian()

    def rhs(state: np.ndarray) -> np.ndarray:
        x = state[:n]
        W = state[n:].reshape(n, k)
        dx = fn(x)
        dW = jac(x) @ W
        return np.concatenate([dx, dW.ravel()])

    state0 = np.concatenate([y, cols.ravel()])
    out = _integrate(rhs, state0, t, ctrl, guard_dim=n)
    x_end = out[:n]
    W_end = out[n:].reshape(n, k)
    return x_end, (W_end[:, 0] if single else W_end)


# a control word is a sequence of (field_index, sign, duration) segments
@dataclass(frozen=True)
class Segment:
    field_index: int
    sign: int
    duration: float


ControlWord = tuple[Segment, ...]


@dataclass(frozen=True)
class LeafSample:
    base: np.ndarray
    visits: tuple[tuple[np.ndarray, ControlWord], ...]
    discarded: int  # walk attempts that escaped the window
    shifted_drifts: tuple[np.ndarray, ...] = ()  # filled by shift_drift_set


def _signed_fields(generators: Sequence[VectorField]) -> list[VectorField]:
    return [g for g in generators] + [g.negate() for g in generators]


def apply_word(
    generators: Sequence[VectorField],
    x: np.ndarray,
    word: ControlWord,
    step: StepControl,
) -> np.ndarray:
    """Integrate a word segment by segment from x."""
    fields = list(generators)
    neg = [g.negate() for g in generators]
    y = np.asarray(x, dtype=float)
    for seg in word:
        V = fields[seg.field_index] if seg.sign > 0 else neg[seg.field_index]
        y = _integrate(V.compiled(), y, seg.duration, step)
    return y


def sample_leaf(
    family: BracketFamily,
    x: Sequence[float],
    budget: int = 16,
    max_duration: float = 1.0,
    rng_seed: int = 0,
    step: StepControl | None = None,
) -> LeafSample:
    """Random-walk exploration of the leaf through x.

    Runs `budget` independent walks from the base. Each walk draws a
    word of 1..8 segments with uniform field choice, sign, and duration
    in (0, max_duration]. Every segment endpoint is recorded as a visit
    with its prefix word. Segments that would leave the inflated window
    are discarded (the escaping point is dropped and counted) and the
    segment slot is redrawn up to three times before the walk gives up,
    so walks near the window boundary keep exploring inward.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    ctrl = step or StepControl()
    rng = np.random.default_rng(rng_seed)
    base = np.asarray(x, dtype=float)
    gens = family.generators
    neg = [g.negate() for g in gens]
    m = len(gens)
    visits: list[tuple[np.ndarray, ControlWord]] = []
    discarded = 0
    for _ in range(budget):
        length = int(rng.integers(1, 9))
        y = base
        word: list[Segment] = []
        dead = False
        for _ in range(length):
            for _ in range(3):
                idx = int(rng.integers(0, m))
                sign = 1 if rng.random() < 0.5 else -1
                # durations stay strictly positive
                tau = float(rng.uniform(0.0, max_duration))
                if tau == 0.0:
                    tau = max_duration * 0.5
                V = gens[idx] if sign > 0 else neg[idx]
                try:
                    y_next = _integrate(V.compiled(), y, tau, ctrl)
                except FlowError:
                    discarded += 1
                    continue
                y = y_next
                word.append(Segment(idx, sign, tau))
                visits.append((y, tuple(word)))
                break
            else:
                dead = True
            if dead:
                break
    return LeafSample(base=base, visits=tuple(visits), discarded=discarded)


def transport_word(
    generators: Sequence[VectorField],
    visit: np.ndarray,
    word: ControlWord,
    vectors: np.ndarray,
    step: StepControl,
) -> np.ndarray:
    """Transport tangent columns from a visit back to the word's origin.

    The visit satisfies visit = word(base); the inverse path applies the
    segments in reverse order with negated durations. Columns of
    `vectors` (shape (n, k)) are pushed through each stage's variational
    flow; the result is expressed at the base point.
    """
    y = np.asarray(visit, dtype=float)
    W = np.asarray(vectors, dtype=float)
    fields = list(generators)
    neg = [g.negate() for g in generators]
    for seg in reversed(word):
        V = fields[seg.field_index] if seg.sign > 0 else neg[seg.field_index]
        y, W = _flow_with_frame(V, y, -seg.duration, W, step)
    return W


def shift_drift_set(
    drifts: Sequence[VectorField],
    leaf: LeafSample,
    generators: Sequence[VectorField] | None = None,
    family: BracketFamily | None = None,
    step: StepControl | None = None,
) -> LeafSample:
    """Evaluate each drift at every visit and transport it to the base.

    Returns a new LeafSample whose shifted_drifts holds one n-vector per
    (visit, drift) pair, base-point drift values first (identity
    transport, empty word). Visits whose transport integration fails are
    skipped and counted in `discarded`.
    """
    if generators is None:
        if family is None:
            raise ValueError("need generators or a family")
        generators = family.generators
    ctrl = step or StepControl()
    shifted: list[np.ndarray] = [f(leaf.base) for f in drifts]
    failures = 0
    for y, word in leaf.visits:
        cols = np.column_stack([f(y) for f in drifts])
        try:
            moved = transport_word(generators, y, word, cols, ctrl)
        except FlowError:
            failures += 1
            continue
        for j in range(moved.shape[1]):
            shifted.append(moved[:, j])
    return LeafSample(
        base=leaf.base,
        visits=leaf.visits,
        discarded=leaf.discarded + failures,
        shifted_drifts=tuple(shifted),
    )
