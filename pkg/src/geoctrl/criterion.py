"""Controllability conditions on the quotient by the control distribution.

The decision pipeline at a base point x:

1. Build the control Lie algebra family and its rank r; the quotient
   R^n / G|_x has dimension k = n - r.
2. Walk the leaf through x, evaluate the drift(s) at visited points,
   and transport the vectors back to x along the reversed words.
3. Project the transported drifts to the quotient and ask whether 0
   lies in the interior of their convex hull. Since G|_x enters the
   hull as a full subspace, interiority in the quotient is equivalent
   to the full-space condition.

For codimension 1 with a global frame of the control span, the same
question reads off the sign of the determinant of the drift against the
frame at the visited points directly; both routes are computed when the
frame exists, and their agreement is recorded.

Verdicts are graded honestly: exhausting a sampling budget without the
condition is evidence of non-controllability, never a proof; the
Monte-Carlo reachability oracle corroborates separately.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np

from .fields import VectorField
from .flows import (
    FlowError,
    LeafSample,
    Segment,
    StepControl,
    _flow_with_frame,
    inflate_window,
    sample_leaf,
)
from .lie import (
    DEFAULT_RANK_TOL,
    BracketFamily,
    NotRegularError,
    RegularityReport,
    audit_regularity,
    generate_bracket_basis,
    matrix_rank,
    window_grid,
)
from .system import SystemSpec

__all__ = [
    "PointVerdict",
    "GlobalVerdict",
    "SupportReport",
    "STATUS_CONTROLLABLE",
    "STATUS_UNCONTROLLABLE",
    "STATUS_INCONCLUSIVE",
    "STATUS_NOT_REGULAR",
    "DEFAULT_MARGIN",
    "DEFAULT_EPS_SIGN",
    "criterion_value",
    "sign_change_on_leaf",
    "quotient_projection",
    "interior_convex_test",
    "check_condition",
    "switched_condition",
    "global_verdict",
    "verify_supporting_distribution",
]

STATUS_CONTROLLABLE = "CONTROLLABLE_CERTIFIED"
STATUS_UNCONTROLLABLE = "UNCONTROLLABLE_EVIDENCE"
STATUS_INCONCLUSIVE = "INCONCLUSIVE"
STATUS_NOT_REGULAR = "NOT_REGULAR"

DEFAULT_MARGIN = 1e-7
DEFAULT_EPS_SIGN = 1e-9


@dataclass(frozen=True)
class PointVerdict:
    base: np.ndarray
    condition_holds: bool
    witness: dict | None
    samples_used: int
    quotient_frame: np.ndarray  # (k, n) orthonormal rows spanning the quotient
    det_agrees: bool | None = None  # determinant-route cross-check, when available
    error: str | None = None


@dataclass(frozen=True)
class GlobalVerdict:
    status: str
    points: tuple[PointVerdict, ...]
    assumptions: dict
    regularity: RegularityReport | None
    oracle: dict | None = None  # agreement summary filled by the reach module


def criterion_value(
    f: VectorField, gtilde: Sequence[VectorField], x: Sequence[float]
) -> float:
    """det(f(x), g1(x), ..., g_{n-1}(x)) for a codimension-1 global frame."""
    x = np.asarray(x, dtype=float)
    n = f.dim
    if len(gtilde) != n - 1:
        raise ValueError(f"need {n - 1} frame fields, got {len(gtilde)}")
    M = np.column_stack([f(x)] + [g(x) for g in gtilde])
    return float(np.linalg.det(M))


def sign_change_on_leaf(
    leaf: LeafSample,
    C: Callable[[np.ndarray], float],
    eps_sign: float = DEFAULT_EPS_SIGN,
) -> PointVerdict:
    """Does the criterion evaluator change sign over the leaf sample?

    Values in [-eps_sign, eps_sign] are treated as zero and certify
    nothing. The base point participates alongside the visits.
    """
    points = [leaf.base] + [y for y, _ in leaf.visits]
    values = [float(C(p)) for p in points]
    best_pos = max(range(len(values)), key=lambda i: values[i])
    best_neg = min(range(len(values)), key=lambda i: values[i])
    holds = values[best_pos] > eps_sign and values[best_neg] < -eps_sign
    if holds:
        witness = {
            "kind": "sign_change",
            "y_pos": points[best_pos].tolist(),
            "y_neg": points[best_neg].tolist(),
            "value_pos": values[best_pos],
            "value_neg": values[best_neg],
        }
    else:
        witness = {
            "kind": "no_sign_change",
            "value_min": values[best_neg],
            "value_max": values[best_pos],
        }
    return PointVerdict(
        base=leaf.base,
        condition_holds=holds,
        witness=witness,
        samples_used=len(values),
        quotient_frame=np.zeros((0, len(leaf.base))),
    )


def quotient_projection(
    G_basis_at_x: np.ndarray | Sequence[Sequence[float]],
    tol: float = DEFAULT_RANK_TOL,
    expected_rank: int | None = None,
) -> np.ndarray:
    """Orthonormal rows spanning the complement of span(G|_x).

    Input is the evaluated family as a column matrix (n x N) or a list
    of n-vectors (stacked as columns). Returns Q of shape (k, n) with
    k = n - rank; the projection of v is Q @ v. Rows are sign-normalized
    (largest-magnitude entry positive) so repeated runs produce
    identical frames.
    """
    if isinstance(G_basis_at_x, np.ndarray):
        M = G_basis_at_x.astype(float)
        if M.ndim == 1:
            M = M[:, None]
    else:
        M = np.column_stack([np.asarray(v, dtype=float) for v in G_basis_at_x])
    n = M.shape[0]
    U, s, _ = np.linalg.svd(M, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        r = 0
    else:
        r = int(np.sum(s > tol * s[0]))
    if expected_rank is not None and r != expected_rank:
        raise NotRegularError(
            f"span rank {r} at this point contradicts the audited rank {expected_rank}"
        )
    Q = U[:, r:].T.copy()
    for i in range(Q.shape[0]):
        j = int(np.argmax(np.abs(Q[i])))
        if Q[i, j] < 0:
            Q[i] = -Q[i]
    return Q


def interior_convex_test(
    points: np.ndarray | Sequence[Sequence[float]],
    margin: float = DEFAULT_MARGIN,
) -> tuple[bool, np.ndarray | None]:
    """Is 0 interior to the convex hull of a finite point set in R^k?

    k=1 and k=2 are exact (extremes; sorted angular gaps). k>=3 scans a
    deterministic unit-direction design of at least 2k^2 directions and
    may report false "inside"; callers label that route approximate.
    Returns (inside, witness) where a non-None witness d is a unit
    covector with <d, p> >= -margin for every input point p.
    """
    P = np.atleast_2d(np.asarray(points, dtype=float))
    if P.size == 0:
        raise ValueError("empty point list")
    k = P.shape[1]
    if k == 1:
        vals = P[:, 0]
        inside = bool(vals.max() > margin and vals.min() < -margin)
        if inside:
            return True, None
        d = np.array([1.0]) if vals.min() >= -margin else np.array([-1.0])
        return False, d
    if k == 2:
        norms = np.linalg.norm(P, axis=1)
        big = P[norms > margin]
        if len(big) == 0:
            return False, np.array([1.0, 0.0])
        ang = np.sort(np.arctan2(big[:, 1], big[:, 0]))
        gaps = np.diff(ang, append=ang[0] + 2 * np.pi)
        j = int(np.argmax(gaps))
        if gaps[j] < np.pi:
            return True, None
        # witness points at the middle of the occupied arc, i.e. opposite
        # the midpoint of the largest empty gap
        alpha = ang[j]
        beta = ang[j + 1] if j + 1 < len(ang) else ang[0] + 2 * np.pi
        mu = 0.5 * (alpha + beta) + np.pi
        return False, np.array([np.cos(mu), np.sin(mu)])
    # k >= 3: finite direction design
    design = _direction_design(k)
    support = (P @ design.T).max(axis=0)
    bad = np.flatnonzero(support <= margin)
    if bad.size:
        # no point on the positive side of that direction, so its negation
        # has every point at inner product >= -margin
        return False, -design[bad[0]]
    return True, None


_design_cache: dict[int, np.ndarray] = {}


def _direction_design(k: int) -> np.ndarray:
    """Deterministic unit directions: +-axes plus a fixed seeded scatter."""
    cached = _design_cache.get(k)
    if cached is not None:
        return cached
    count = max(2 * k * k, 64)
    axes = np.vstack([np.eye(k), -np.eye(k)])
    rng = np.random.default_rng(12345)
    raw = rng.standard_normal((count - 2 * k, k))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    design = np.vstack([axes, raw])
    _design_cache[k] = design
    return design


# ---------------------------------------------------------------------------
# The shared per-point pipeline
# ---------------------------------------------------------------------------


def _walks(leaf: LeafSample) -> list[list[tuple[np.ndarray, tuple[Segment, ...]]]]:
    """Group flat visits back into their originating walks."""
    walks: list[list[tuple[np.ndarray, tuple[Segment, ...]]]] = []
    for y, word in leaf.visits:
        if len(word) == 1:
            walks.append([])
        walks[-1].append((y, word))
    return walks


def _transport_walk(
    generators: Sequence[VectorField],
    drifts: Sequence[VectorField],
    walk: list[tuple[np.ndarray, tuple[Segment, ...]]],
    step: StepControl,
) -> np.ndarray:
    """Shift the drift vectors of every visit in one walk to its origin.

    Works backward from the deepest visit so each flow segment is
    integrated once: undo segment j while carrying all columns picked up
    at visits deeper than j, inserting the drift values of visit j-1
    when passing through it. Returns an (n, len(walk)*len(drifts))
    column stack expressed at the walk origin.
    """
    fields = list(generators)
    negs = [g.negate() for g in generators]
    y, word = walk[-1]
    W = np.column_stack([f(y) for f in drifts])
    for j in range(len(word) - 1, -1, -1):
        seg = word[j]
        V = fields[seg.field_index] if seg.sign > 0 else negs[seg.field_index]
        y, W = _flow_with_frame(V, y, -seg.duration, W, step)
        if j >= 1:
            y_prev = walk[j - 1][0]
            W = np.column_stack([W] + [f(y_prev) for f in drifts])
    return W


def _condition_at_point(
    drifts: Sequence[VectorField],
    family: BracketFamily,
    rank: int,
    x: np.ndarray,
    leaf_budget: int,
    max_duration: float,
    seed: int,
    step: StepControl,
    margin: float = DEFAULT_MARGIN,
    eps_sign: float = DEFAULT_EPS_SIGN,
    det_frame: Sequence[VectorField] | None = None,
) -> PointVerdict:
    """Evaluate the interior condition at one base point, early-stopping."""
    n = family.dim
    k = n - rank
    try:
        Q = quotient_projection(family.evaluate_matrix(x), expected_rank=rank)
    except NotRegularError as exc:
        return PointVerdict(
            base=x,
            condition_holds=False,
            witness=None,
            samples_used=0,
            quotient_frame=np.zeros((0, n)),
            error=str(exc),
        )
    if k == 0:
        # control span is everything; the hull condition is vacuous
        return PointVerdict(
            base=x,
            condition_holds=True,
            witness={"kind": "full_span"},
            samples_used=0,
            quotient_frame=Q,
        )

    leaf = sample_leaf(
        family, x, budget=leaf_budget, max_duration=max_duration, rng_seed=seed, step=step
    )
    projected = [Q @ f(x) for f in drifts]
    collected = np.array(projected)
    inside, wit = interior_convex_test(collected, margin)
    transport_failures = 0
    if not inside:
        for walk in _walks(leaf):
            try:
                moved = _transport_walk(family.generators, drifts, walk, step)
            except FlowError:
                transport_failures += 1
                continue
            collected = np.vstack([collected, (Q @ moved).T])
            inside, wit = interior_convex_test(collected, margin)
            if inside:
                break

    samples = len(collected)
    if inside:
        witness = _interior_certificate(collected, margin)
    else:
        witness = {"kind": "separating", "covector": wit.tolist()}
    verdict = PointVerdict(
        base=x,
        condition_holds=inside,
        witness=witness,
        samples_used=samples,
        quotient_frame=Q,
    )
    if det_frame is not None and len(drifts) == 1:
        det_v = sign_change_on_leaf(
            leaf, lambda p: criterion_value(drifts[0], det_frame, p), eps_sign
        )
        verdict = replace(verdict, det_agrees=det_v.condition_holds == inside)
    return verdict


def _interior_certificate(collected: np.ndarray, margin: float) -> dict:
    k = collected.shape[1]
    if k == 1:
        vals = collected[:, 0]
        return {
            "kind": "interior",
            "value_pos": float(vals.max()),
            "value_neg": float(vals.min()),
        }
    if k == 2:
        norms = np.linalg.norm(collected, axis=1)
        big = collected[norms > margin]
        ang = np.sort(np.arctan2(big[:, 1], big[:, 0]))
        gaps = np.diff(ang, append=ang[0] + 2 * np.pi)
        return {"kind": "interior", "max_angular_gap": float(gaps.max())}
    design = _direction_design(k)
    support = (collected @ design.T).max(axis=0)
    return {
        "kind": "interior",
        "design_support_min": float(support.min()),
        "approximate": True,
    }


def _prepare(
    system: SystemSpec,
    family: BracketFamily | None,
    regularity: RegularityReport | None,
    grid_per_axis: int | None,
) -> tuple[BracketFamily, RegularityReport]:
    if family is None:
        # generic probes: a grid would sit on symmetry sets (x_i = 0)
        # where degenerate families look fuller than they are
        rng = np.random.default_rng(7)
        lo = np.array([w[0] for w in system.window])
        hi = np.array([w[1] for w in system.window])
        probes = [lo + rng.random(system.dim) * (hi - lo) for _ in range(8)]
        family = generate_bracket_basis(system.controls, probe_points=probes)
    if regularity is None:
        regularity = audit_regularity(
            family, system.window, grid_per_axis or system.grid_per_axis
        )
    return family, regularity


def _step_control(system: SystemSpec) -> StepControl:
    return StepControl(window=inflate_window(system.window))


def check_condition(
    system: SystemSpec,
    x: Sequence[float],
    leaf_budget: int | None = None,
    seed: int = 0,
    family: BracketFamily | None = None,
    regularity: RegularityReport | None = None,
    margin: float = DEFAULT_MARGIN,
    eps_sign: float = DEFAULT_EPS_SIGN,
) -> PointVerdict:
    """Interior condition at one point for a single-drift system."""
    if system.is_switched:
        raise ValueError("switched drift family: use switched_condition")
    return switched_condition(
        system,
        x,
        leaf_budget=leaf_budget,
        seed=seed,
        family=family,
        regularity=regularity,
        margin=margin,
        eps_sign=eps_sign,
    )


def switched_condition(
    system: SystemSpec,
    x: Sequence[float],
    leaf_budget: int | None = None,
    seed: int = 0,
    family: BracketFamily | None = None,
    regularity: RegularityReport | None = None,
    margin: float = DEFAULT_MARGIN,
    eps_sign: float = DEFAULT_EPS_SIGN,
) -> PointVerdict:
    """Interior condition with shifted vectors drawn from every drift."""
    family, regularity = _prepare(system, family, regularity, None)
    if not regularity.constant_rank:
        raise NotRegularError(regularity.note)
    det_frame = _global_frame(system, family, regularity)
    return _condition_at_point(
        drifts=system.drifts,
        family=family,
        rank=regularity.rank,
        x=np.asarray(x, dtype=float),
        leaf_budget=leaf_budget or system.leaf_budget,
        max_duration=system.walk_duration(),
        seed=seed,
        step=_step_control(system),
        margin=margin,
        eps_sign=eps_sign,
        det_frame=det_frame,
    )


def _global_frame(
    system: SystemSpec, family: BracketFamily, regularity: RegularityReport
) -> tuple[VectorField, ...] | None:
    """The family itself, when it is n-1 fields spanning rank n-1."""
    n = system.dim
    if regularity.rank == n - 1 and len(family.fields) == n - 1:
        return family.fields
    return None


def global_verdict(
    system: SystemSpec,
    grid_per_axis: int | None = None,
    leaf_budget: int | None = None,
    seed: int | None = None,
    family: BracketFamily | None = None,
    regularity: RegularityReport | None = None,
) -> GlobalVerdict:
    """Aggregate the per-point condition over a grid of base points.

    The condition is per-point, so every grid point is checked; this is
    redundant across a shared leaf but sound. Point seeds derive from
    the master seed, keeping reports reproducible.
    """
    family, regularity = _prepare(system, family, regularity, grid_per_axis)
    assumptions = {
        "regularity": regularity.note,
        "leaves_not_dense_asserted": system.assume_not_dense,
    }
    if not regularity.constant_rank:
        return GlobalVerdict(
            status=STATUS_NOT_REGULAR,
            points=(),
            assumptions=assumptions,
            regularity=regularity,
        )
    if seed is None:
        seed = system.seed
    pts = window_grid(system.window, grid_per_axis or system.grid_per_axis)
    children = np.random.SeedSequence(seed).spawn(len(pts))
    det_frame = _global_frame(system, family, regularity)
    step = _step_control(system)
    budget = leaf_budget or system.leaf_budget
    verdicts = []
    for p, child in zip(pts, children):
        verdicts.append(
            _condition_at_point(
                drifts=system.drifts,
                family=family,
                rank=regularity.rank,
                x=p,
                leaf_budget=budget,
                max_duration=system.walk_duration(),
                seed=int(child.generate_state(1, dtype=np.uint64)[0]),
                step=step,
                det_frame=det_frame,
            )
        )
    errored = [v for v in verdicts if v.error is not None]
    failed = [v for v in verdicts if v.error is None and not v.condition_holds]
    if failed:
        status = STATUS_UNCONTROLLABLE
    elif errored:
        status = STATUS_INCONCLUSIVE
    else:
        status = STATUS_CONTROLLABLE
    return GlobalVerdict(
        status=status,
        points=tuple(verdicts),
        assumptions=assumptions,
        regularity=regularity,
    )


# ---------------------------------------------------------------------------
# Non-controllability verifier for user-supplied confining distributions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SupportReport:
    accepted: bool
    clauses: dict
    failed_clause: str | None
    conclusion: str
    details: dict


def verify_supporting_distribution(
    system: SystemSpec,
    S_candidate: Sequence[VectorField],
    grid_per_axis: int = 5,
    tol: float = 1e-7,
    leaf_budget: int = 12,
    seed: int = 0,
    family: BracketFamily | None = None,
    regularity: RegularityReport | None = None,
) -> SupportReport:
    """Check a candidate confining distribution S of dimension k-1.

    Clauses, each checked numerically at grid points:
      complement_rank      S stays transverse to the control span (the
                           quotient projection preserves its pointwise
                           rank) and attains rank k-1 somewhere
      control_invariance   [g_i, S_j] stays in span(G family + S)
      one_sided_drift      all shifted drifts lie in one closed half-space
                           bounded by the projected S (side chosen per point)
      drift_outside_closure  the drift is outside the Lie closure of S

    If all four hold the system cannot be globally controllable: the
    leaves of the involutive span of G and S separate the space and
    trajectories never cross them. The ambient complement of the control
    span is taken as its orthogonal complement throughout. Odd grids
    include the window center, which is where degenerate candidates most
    often slip out of their own span.
    """
    family, regularity = _prepare(system, family, regularity, grid_per_axis)
    if not regularity.constant_rank:
        raise NotRegularError(regularity.note)
    n = system.dim
    k = n - regularity.rank
    if k < 2:
        raise ValueError(f"verifier needs codimension >= 2, audit found {k}")
    if len(S_candidate) != k - 1:
        raise ValueError(
            f"candidate has {len(S_candidate)} fields, need k-1 = {k - 1}"
        )
    for S in S_candidate:
        if S.dim != n:
            raise ValueError("candidate field dimension mismatch")

    pts = window_grid(system.window, grid_per_axis)
    clauses = {
        "complement_rank": True,
        "control_invariance": True,
        "one_sided_drift": True,
        "drift_outside_closure": True,
    }
    details: dict = {"points_checked": len(pts)}

    # (a) projecting to the quotient must not kill any candidate vector,
    # and the candidate must reach its nominal rank k-1 somewhere (it is
    # allowed to degenerate at isolated points; clause (b) polices those)
    generic_rank = 0
    for p in pts:
        Q = quotient_projection(family.evaluate_matrix(p), expected_rank=regularity.rank)
        S_cols = np.column_stack([S(p) for S in S_candidate])
        if matrix_rank(Q @ S_cols) != matrix_rank(S_cols):
            clauses["complement_rank"] = False
            details["complement_rank_failure"] = p.tolist()
            break
        generic_rank = max(generic_rank, matrix_rank(S_cols))
    if clauses["complement_rank"] and generic_rank != k - 1:
        clauses["complement_rank"] = False
        details["complement_rank_failure"] = (
            f"candidate rank {generic_rank} never reaches k-1 = {k - 1}"
        )

    # (b) bracket invariance: [g_i, S_j] in span(family + S) pointwise
    if clauses["complement_rank"]:
        from .fields import lie_bracket

        brackets = [
            lie_bracket(g, S) for g in family.generators for S in S_candidate
        ]
        for p in pts:
            span = np.column_stack(
                [f(p) for f in family.fields] + [S(p) for S in S_candidate]
            )
            for B, (gi, Sj) in zip(
                brackets,
                [(i, j) for i in range(len(family.generators)) for j in range(len(S_candidate))],
            ):
                b = B(p)
                resid = _span_residual(span, b)
                if resid > tol * max(1.0, float(np.linalg.norm(b))):
                    clauses["control_invariance"] = False
                    details["control_invariance_failure"] = {
                        "point": p.tolist(),
                        "control": gi,
                        "candidate": Sj,
                        "residual": resid,
                    }
                    break
            if not clauses["control_invariance"]:
                break

    # (c) shifted drifts confined to one side of the projected S
    if clauses["complement_rank"] and clauses["control_invariance"]:
        step = _step_control(system)
        children = np.random.SeedSequence(seed).spawn(len(pts))
        worst = np.inf
        skipped = 0
        for p, child in zip(pts, children):
            Q = quotient_projection(family.evaluate_matrix(p), expected_rank=regularity.rank)
            PS = np.column_stack([Q @ S(p) for S in S_candidate])
            try:
                normal = quotient_projection(PS, expected_rank=k - 1)[0]
            except NotRegularError:
                # isolated degeneration of the candidate; no hyperplane here
                skipped += 1
                continue
            leaf = sample_leaf(
                family,
                p,
                budget=leaf_budget,
                max_duration=system.walk_duration(),
                rng_seed=int(child.generate_state(1, dtype=np.uint64)[0]),
                step=step,
            )
            vecs = [Q @ f(p) for f in system.drifts]
            for walk in _walks(leaf):
                try:
                    moved = _transport_walk(family.generators, system.drifts, walk, step)
                except FlowError:
                    continue
                vecs.extend((Q @ moved).T)
            sides = np.array([float(normal @ v) for v in vecs])
            # orient the normal toward the drift majority at this point
            if sides.sum() < 0:
                sides = -sides
            low = float(sides.min())
            worst = min(worst, low)
            if low < -tol:
                clauses["one_sided_drift"] = False
                details["one_sided_failure"] = {"point": p.tolist(), "margin": low}
                break
        details["one_sided_worst_margin"] = None if np.isinf(worst) else worst
        if skipped:
            details["one_sided_skipped_degenerate"] = skipped

    # (d) the drift escapes the Lie closure of the candidate
    if all(clauses.values()):
        S_closed = generate_bracket_basis(S_candidate, probe_points=pts)
        for p in pts:
            M = S_closed.evaluate_matrix(p)
            base_rank = matrix_rank(M)
            for f in system.drifts:
                if matrix_rank(np.column_stack([M, f(p)])) == base_rank:
                    clauses["drift_outside_closure"] = False
                    details["drift_inside_closure_at"] = p.tolist()
                    break
            if not clauses["drift_outside_closure"]:
                break

    accepted = all(clauses.values())
    failed = None if accepted else next(k_ for k_, v in clauses.items() if not v)
    if accepted:
        conclusion = (
            "not globally controllable: the candidate distribution is control-"
            "invariant and confines all shifted drifts to one side of an "
            "invariant codimension-one foliation the trajectories cannot cross"
        )
    else:
        conclusion = f"candidate rejected: clause '{failed}' failed"
    return SupportReport(
        accepted=accepted,
        clauses=clauses,
        failed_clause=failed,
        conclusion=conclusion,
        details=details,
    )


def _span_residual(span: np.ndarray, b: np.ndarray) -> float:
    """Distance from b to the column span, via least squares."""
    if float(np.linalg.norm(b)) == 0.0:
        return 0.0
    sol, *_ = np.linalg.lstsq(span, b, rcond=None)
    return float(np.linalg.norm(span @ sol - b))
