"""Independent brute-force verifier for history probabilities.

``sequential_probability`` reimplements the Born rule as a plain state
propagation: evolve the vector, project it, never normalize, and read the
final squared norm.  It deliberately shares no code with the chain-ket path
in ``histories`` (which composes the operator string instead); agreement
between the two is the suite's strongest cross-check.

``exhaustive_additivity_scan`` probes the operational meaning of consistency:
for every pairwise merge of two outcomes at one slot it compares the merged
history's probability (computed in the coarse-grained family) against the sum
of the fine-grained ones.  Consistent families show no discrepancy; an
inconsistent family betrays itself whenever some off-diagonal overlap has a
real part (a purely imaginary overlap is invisible to additivity yet still
counts as inconsistent, a distinction the tests document).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import SizeCapError, UnknownLabelError
from .framework import DISJUNCTION_JOINER
from .histories import HistoryFamily, coarse_grain
from .linalg import DEFAULT_TOL, Tolerance

__all__ = [
    "OutcomeSequence",
    "AdditivityViolation",
    "sequential_probability",
    "exhaustive_additivity_scan",
]

OutcomeSequence = tuple[str, ...]

MAX_MERGE_LABELS = 12


def sequential_probability(family: HistoryFamily, seq: Sequence[str]) -> float:
    """Probability of an outcome sequence by stepwise evolve-and-project."""
    labels = tuple(seq)
    if len(labels) != family.n_slots:
        raise UnknownLabelError(
            f"sequence has {len(labels)} labels, family has {family.n_slots} slots"
        )
    state = np.array(family.initial_ket, dtype=complex)
    for decomp, ev, label in zip(family.slot_decompositions, family.evolutions, labels):
        projector = decomp.projector_for(label)
        state = projector @ (ev.unitary @ state)
    return float(np.vdot(state, state).real)


@dataclass(frozen=True)
class AdditivityViolation:
    """One slot merge whose probability is not the sum of its parts."""

    time: str
    merged: tuple[str, str]
    context: tuple[str, ...]  # labels of the other slots, in slot order
    coarse_probability: float
    fine_sum: float

    @property
    def discrepancy(self) -> float:
        return abs(self.coarse_probability - self.fine_sum)


def exhaustive_additivity_scan(
    family: HistoryFamily, tol: Tolerance = DEFAULT_TOL
) -> list[AdditivityViolation]:
    """All single-slot pairwise merges whose probability fails additivity.

    A merge is reported when |P(merged) - sum of fine P| > 10 * tol.cons,
    with P(merged) evaluated in the coarse-grained family itself.  Empty for
    consistent families.
    """
    slot_times = family.grid.slot_times
    decomps = family.slot_decompositions
    for time, decomp in zip(slot_times, decomps):
        if len(decomp) > MAX_MERGE_LABELS:
            raise SizeCapError(
                f"slot {time!r} has {len(decomp)} outcomes; merge scan capped at {MAX_MERGE_LABELS}"
            )
    bound = 10.0 * tol.cons
    violations: list[AdditivityViolation] = []
    for s, (time, decomp) in enumerate(zip(slot_times, decomps)):
        other_labels = [d.labels for k, d in enumerate(decomps) if k != s]
        for l1, l2 in itertools.combinations(decomp.labels, 2):
            groups = [(l1, l2)] + [(lab,) for lab in decomp.labels if lab not in (l1, l2)]
            coarse = coarse_grain(family, {time: groups}, tol)
            # coarse_grain joins merged labels in the slot's original order
            merged_label = DISJUNCTION_JOINER.join(
                sorted((l1, l2), key=decomp.labels.index)
            )
            for context in itertools.product(*other_labels):
                coarse_seq = context[:s] + (merged_label,) + context[s:]
                fine_a = context[:s] + (l1,) + context[s:]
                fine_b = context[:s] + (l2,) + context[s:]
                coarse_p = sequential_probability(coarse, coarse_seq)
                fine_sum = sequential_probability(family, fine_a) + sequential_probability(
                    family, fine_b
                )
                if abs(coarse_p - fine_sum) > bound:
                    violations.append(
                        AdditivityViolation(
                            time=time,
                            merged=(l1, l2),
                            context=context,
                            coarse_probability=coarse_p,
                            fine_sum=fine_sum,
                        )
                    )
    return violations
