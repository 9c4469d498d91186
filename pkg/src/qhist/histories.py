"""Time-graded history families, chain kets, probabilities, and the consistency check.

A family fixes an initial ket at t0, a unitary evolution per time interval,
and a projective decomposition per later time slot.  Each history picks one
outcome label per slot; its chain ket is the initial ket pushed through the
alternating evolve/project string, and its probability is the squared norm of
that chain ket.  The family supports classical probabilistic reasoning exactly
when all pairs of chain kets are orthogonal; ``consistency_check`` computes the
full Gram matrix as evidence either way.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    BadDecompositionError,
    BadTimesError,
    DimMismatchError,
    HistoryLimitError,
    NotAPartitionError,
    NotUnitaryError,
    UnknownHistoryError,
    UnknownLabelError,
)
from .framework import DISJUNCTION_JOINER, ProjectiveDecomposition, make_decomposition
from .linalg import (
    DEFAULT_TOL,
    Tolerance,
    as_ket,
    as_matrix,
    hermitian_eigenprojectors,
    identity,
    is_hermitian,
    is_projector,
    is_unitary,
    max_abs,
)

__all__ = [
    "DEFAULT_MAX_HISTORIES",
    "REST_LABEL",
    "TimeGrid",
    "Evolution",
    "History",
    "HistoryFamily",
    "ConsistencyReport",
    "build_family",
    "chain_ket",
    "history_probability",
    "consistency_check",
    "coarse_grain",
]

DEFAULT_MAX_HISTORIES = 10**6
REST_LABEL = "rest"


@dataclass(frozen=True)
class TimeGrid:
    """Ordered labels t0..tn; slots (measurement times) are t1..tn."""

    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) < 2:
            raise BadTimesError("a grid needs at least two times")
        if len(set(self.labels)) != len(self.labels):
            raise BadTimesError(f"duplicate time labels in {self.labels}")

    @property
    def slot_times(self) -> tuple[str, ...]:
        return self.labels[1:]

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise BadTimesError(f"time {label!r} not on grid {self.labels}") from None

    def slot_index(self, label: str) -> int:
        idx = self.index(label)
        if idx == 0:
            raise BadTimesError(f"time {label!r} is the initial time; it has no slot")
        return idx - 1


@dataclass(frozen=True, eq=False)
class Evolution:
    """Unitary carrying states from ``start`` to ``end``."""

    start: str
    end: str
    unitary: np.ndarray


@dataclass(frozen=True, eq=False)
class History:
    """One outcome label (and projector) per slot time t1..tn."""

    labels: tuple[str, ...]
    projectors: tuple[np.ndarray, ...]

    @property
    def label(self) -> str:
        return ",".join(self.labels)


@dataclass(frozen=True, eq=False)
class HistoryFamily:
    dim: int
    grid: TimeGrid
    initial_ket: np.ndarray
    evolutions: tuple[Evolution, ...]
    slot_decompositions: tuple[ProjectiveDecomposition, ...]
    histories: tuple[History, ...]
    _lookup: dict[tuple[str, ...], History] = field(repr=False, default_factory=dict)

    def __post_init__(self):
        self._lookup.update({h.labels: h for h in self.histories})

    @property
    def n_slots(self) -> int:
        return len(self.slot_decompositions)

    def history(self, labels: Iterable[str]) -> History:
        key = tuple(labels)
        try:
            return self._lookup[key]
        except KeyError:
            raise UnknownHistoryError(f"history {key!r} is not in this family") from None


@dataclass(frozen=True, eq=False)
class ConsistencyReport:
    """Gram-matrix evidence for the pairwise orthogonality of chain kets.

    ``probabilities`` is the Gram diagonal and is populated even when the
    family is inconsistent (flagged by ``consistent=False``); in that case the
    numbers are diagnostic only and not additive.
    """

    labels: tuple[tuple[str, ...], ...]
    gram: np.ndarray
    max_offdiag: float
    threshold: float
    consistent: bool
    probabilities: np.ndarray

    def probability(self, labels: Iterable[str]) -> float:
        key = tuple(labels)
        for i, row in enumerate(self.labels):
            if row == key:
                return float(self.probabilities[i])
        raise UnknownHistoryError(f"history {key!r} is not in this report")


def _coerce_slot(slot, dim: int, tol: Tolerance) -> ProjectiveDecomposition:
    """Accept a decomposition, a Hermitian observable, a single (labelled)
    projector, or a list of labelled projectors; pad to completeness."""
    if isinstance(slot, ProjectiveDecomposition):
        if slot.dim != dim:
            raise DimMismatchError(f"slot decomposition has dim {slot.dim}, expected {dim}")
        return slot
    if isinstance(slot, tuple) and len(slot) == 2 and isinstance(slot[0], str):
        return _pad_to_decomposition([slot], dim, tol)
    if isinstance(slot, (list,)):
        return _pad_to_decomposition(list(slot), dim, tol)
    m = as_matrix(slot)
    if m.shape != (dim, dim):
        raise DimMismatchError(f"slot operator has shape {m.shape}, expected ({dim}, {dim})")
    if is_projector(m, tol):
        return _pad_to_decomposition([("p", m)], dim, tol)
    if is_hermitian(m, tol):
        pairs = hermitian_eigenprojectors(m, tol)
        labels = [f"ev{k}={value:.6g}" for k, (value, _) in enumerate(pairs)]
        return make_decomposition([p for _, p in pairs], labels, tol)
    raise BadDecompositionError("slot operator is neither a projector nor Hermitian")


def _pad_to_decomposition(
    labelled: list[tuple[str, np.ndarray]], dim: int, tol: Tolerance
) -> ProjectiveDecomposition:
    labels = [lab for lab, _ in labelled]
    mats = [as_matrix(m) for _, m in labelled]
    rest = identity(dim) - sum(mats)
    if max_abs(rest) > tol.proj:
        if REST_LABEL in labels:
            raise BadDecompositionError(
                f"label {REST_LABEL!r} is reserved for the complement padding"
            )
        labels.append(REST_LABEL)
        mats.append(rest)
    try:
        return make_decomposition(mats, labels, tol)
    except Exception as exc:
        raise BadDecompositionError(f"slot is not a valid decomposition: {exc}") from exc


def build_family(
    initial_ket,
    grid,
    evolutions: Sequence,
    slots: Sequence,
    tol: Tolerance = DEFAULT_TOL,
    max_histories: int = DEFAULT_MAX_HISTORIES,
) -> HistoryFamily:
    """Assemble a history family from an initial ket, evolutions, and slots.

    Observables are converted to eigenprojector decompositions; incomplete
    slots are padded with the complement projector labelled "rest"; the full
    Cartesian product of outcome labels is enumerated eagerly (capped at
    ``max_histories``).
    """
    if not isinstance(grid, TimeGrid):
        grid = TimeGrid(tuple(grid))
    psi0 = as_ket(initial_ket, tol)
    dim = psi0.shape[0]
    n_intervals = len(grid.labels) - 1
    if len(evolutions) != n_intervals:
        raise DimMismatchError(f"expected {n_intervals} evolutions, got {len(evolutions)}")
    if len(slots) != n_intervals:
        raise DimMismatchError(f"expected {n_intervals} slots, got {len(slots)}")

    evs = []
    for k, ev in enumerate(evolutions):
        u = identity(dim) if ev is None else as_matrix(ev.unitary if isinstance(ev, Evolution) else ev)
        if u.shape != (dim, dim):
            raise DimMismatchError(f"evolution {k} has shape {u.shape}, expected ({dim}, {dim})")
        if not is_unitary(u, tol):
            raise NotUnitaryError(f"evolution {k} ({grid.labels[k]} -> {grid.labels[k + 1]}) is not unitary")
        u = u.copy()
        u.setflags(write=False)
        evs.append(Evolution(start=grid.labels[k], end=grid.labels[k + 1], unitary=u))

    decomps = tuple(_coerce_slot(slot, dim, tol) for slot in slots)

    count = 1
    for d in decomps:
        count *= len(d)
        if count > max_histories:
            raise HistoryLimitError(f"family would enumerate > {max_histories} histories")
    histories = tuple(
        History(labels=combo, projectors=tuple(d.projector_for(lab) for d, lab in zip(decomps, combo)))
        for combo in itertools.product(*(d.labels for d in decomps))
    )
    psi0 = psi0.copy()
    psi0.setflags(write=False)
    return HistoryFamily(
        dim=dim,
        grid=grid,
        initial_ket=psi0,
        evolutions=tuple(evs),
        slot_decompositions=decomps,
        histories=histories,
    )


def _resolve_history(family: HistoryFamily, history) -> History:
    if isinstance(history, History):
        return family.history(history.labels)
    return family.history(history)


def chain_ket(family: HistoryFamily, history) -> np.ndarray:
    """Pn T(tn,tn-1) ... P1 T(t1,t0) |psi0> as an unnormalized vector.

    The initial condition enters as the ket itself (its projector is implicit),
    so the operator string is composed slot by slot and applied once.
    """
    h = _resolve_history(family, history)
    op = None
    for ev, projector in zip(family.evolutions, h.projectors):
        step = projector @ ev.unitary
        op = step if op is None else step @ op
    return op @ family.initial_ket


def history_probability(family: HistoryFamily, history) -> float:
    """Squared norm of the chain ket."""
    ket = chain_ket(family, history)
    return float(np.vdot(ket, ket).real)


def consistency_check(family: HistoryFamily, tol: Tolerance = DEFAULT_TOL) -> ConsistencyReport:
    """Gram matrix of all pairwise chain-ket overlaps, and the verdict.

    The family is consistent when the largest off-diagonal magnitude does not
    exceed ``tol.cons`` relative to the largest diagonal entry (floored at 1),
    i.e. the criterion is the full complex overlap, not just its real part.
    """
    kets = np.array([chain_ket(family, h) for h in family.histories])
    gram = np.conjugate(kets) @ kets.T
    diag = gram.diagonal().real
    if len(family.histories) > 1:
        off = gram.copy()
        np.fill_diagonal(off, 0.0)
        max_offdiag = float(np.max(np.abs(off)))
    else:
        max_offdiag = 0.0
    scale = max(1.0, float(np.max(diag, initial=0.0)))
    threshold = tol.cons * scale
    gram = gram.copy()
    gram.setflags(write=False)
    return ConsistencyReport(
        labels=tuple(h.labels for h in family.histories),
        gram=gram,
        max_offdiag=max_offdiag,
        threshold=threshold,
        consistent=max_offdiag <= threshold,
        probabilities=diag.copy(),
    )


def coarse_grain(
    family: HistoryFamily,
    merges: Mapping[str, Sequence[Iterable[str]]],
    tol: Tolerance = DEFAULT_TOL,
    max_histories: int = DEFAULT_MAX_HISTORIES,
) -> HistoryFamily:
    """Merge outcome labels at named slots by summing their projectors.

    ``merges`` maps a slot time to label groups that must partition that
    slot's labels exactly; slots not mentioned are untouched.  Merged groups
    get the label "a∨b" in the slot's original label order.
    """
    new_slots: list[ProjectiveDecomposition] = []
    for time, decomp in zip(family.grid.slot_times, family.slot_decompositions):
        if time not in merges:
            new_slots.append(decomp)
            continue
        groups = [tuple(g) for g in merges[time]]
        flat = [lab for g in groups for lab in g]
        if sorted(flat) != sorted(decomp.labels):
            raise NotAPartitionError(
                f"groups {groups} do not partition slot {time!r} labels {decomp.labels}"
            )
        order = {lab: i for i, lab in enumerate(decomp.labels)}
        projectors = []
        labels = []
        for group in sorted(groups, key=lambda g: min(order[lab] for lab in g)):
            members = sorted(group, key=lambda lab: order[lab])
            projectors.append(sum(decomp.projector_for(lab) for lab in members))
            labels.append(DISJUNCTION_JOINER.join(members))
        new_slots.append(make_decomposition(projectors, labels, tol))
    unknown = set(merges) - set(family.grid.slot_times)
    if unknown:
        raise UnknownLabelError(f"merge times {sorted(unknown)} are not slot times")
    return build_family(
        family.initial_ket,
        family.grid,
        [ev.unitary for ev in family.evolutions],
        new_slots,
        tol,
        max_histories,
    )
