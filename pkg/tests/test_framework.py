import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qhist.errors import (
    DimMismatchError,
    DuplicateLabelError,
    IncompatibleFrameworksError,
    NotAProjectorError,
    NotCompleteError,
    NotOrthogonalError,
)
from qhist.framework import (
    UNDEFINED,
    conjunction,
    decompositions_compatible,
    make_decomposition,
    negation,
    refine,
    refine_all,
)
from qhist.linalg import SIGMA_X, SIGMA_Y, SIGMA_Z, identity, max_abs, tensor_product

from helpers import pauli_decomposition, random_decomposition

I2 = identity(2)
P_UP = np.diag([1.0, 0.0]).astype(complex)
P_DOWN = np.diag([0.0, 1.0]).astype(complex)


class TestMakeDecomposition:
    def test_sigma_z_pair(self):
        d = make_decomposition([(I2 + SIGMA_Z) / 2, (I2 - SIGMA_Z) / 2], ["+z", "-z"])
        assert d.dim == 2 and d.labels == ("+z", "-z")

    def test_trivial_sample_space(self):
        d = make_decomposition([I2], ["any"])
        assert len(d) == 1

    def test_non_orthogonal_pair_rejected(self):
        # (1+sz)/2 + (1+sx)/2 is neither orthogonal nor complete
        with pytest.raises((NotOrthogonalError, NotCompleteError)):
            make_decomposition([(I2 + SIGMA_Z) / 2, (I2 + SIGMA_X) / 2], ["a", "b"])

    def test_incomplete_rejected(self):
        with pytest.raises(NotCompleteError):
            make_decomposition([P_UP], ["up"])

    def test_non_projector_rejected_with_index(self):
        with pytest.raises(NotAProjectorError, match="1"):
            make_decomposition([P_UP, SIGMA_X], ["a", "b"])

    def test_duplicate_label_rejected(self):
        with pytest.raises(DuplicateLabelError):
            make_decomposition([P_UP, P_DOWN], ["same", "same"])

    def test_projectors_are_frozen(self):
        d = make_decomposition([P_UP, P_DOWN], ["a", "b"])
        with pytest.raises(ValueError):
            d.projectors[0][0, 0] = 0.0


class TestConjunction:
    def test_with_identity(self):
        p = (I2 + SIGMA_Z) / 2
        assert np.allclose(conjunction(p, I2), p)

    def test_non_commuting_is_undefined(self):
        # the conjunction of non-commuting properties is meaningless, not false
        result = conjunction((I2 + SIGMA_Z) / 2, (I2 + SIGMA_X) / 2)
        assert result is UNDEFINED

    def test_disjoint_subsystems_commute(self):
        p = tensor_product(P_UP, I2)
        q = tensor_product(I2, P_UP)
        got = conjunction(p, q)
        assert np.allclose(got, np.diag([1, 0, 0, 0]))

    def test_non_projector_rejected(self):
        with pytest.raises(NotAProjectorError):
            conjunction(SIGMA_X, I2)

    def test_symmetric_when_defined(self, rng):
        for _ in range(20):
            d = int(rng.integers(2, 6))
            decomp = random_decomposition(rng, d)
            idx = rng.integers(0, len(decomp), size=2)
            p, q = decomp.projectors[idx[0]], decomp.projectors[idx[1]]
            left = conjunction(p, q)
            right = conjunction(q, p)
            assert left is not UNDEFINED and right is not UNDEFINED
            assert max_abs(left - right) <= 1e-9


class TestNegation:
    def test_identity_negates_to_zero(self):
        assert max_abs(negation(I2)) == 0.0

    def test_basis_projector(self):
        assert np.array_equal(negation(P_UP), P_DOWN)

    def test_pauli_eigenprojector(self):
        assert np.allclose(negation((I2 + SIGMA_X) / 2), (I2 - SIGMA_X) / 2)

    @given(st.integers(min_value=0, max_value=2 ** 32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_double_negation_on_dyadic_projectors(self, seed):
        # exact bit-level round trip for projectors whose entries are dyadic
        # (Pauli eigenprojectors and their tensor products)
        rng = np.random.default_rng(seed)
        ops = [I2, SIGMA_X, SIGMA_Y, SIGMA_Z]
        a = (I2 + ops[rng.integers(0, 4)]) / 2
        b = (I2 + ops[rng.integers(0, 4)]) / 2
        p = tensor_product(a, b)
        assert np.array_equal(negation(negation(p)), p)

    def test_double_negation_on_generic_projectors(self, rng):
        # generic diagonal entries can round through 1-(1-p) with an ulp of
        # error, so only float-faithful equality is required here
        for _ in range(10):
            p = random_decomposition(rng, 5).projectors[0]
            assert max_abs(negation(negation(p)) - p) < 1e-15


class TestCompatibility:
    def test_sigma_z_vs_sigma_y(self):
        check = decompositions_compatible(pauli_decomposition("z"), pauli_decomposition("y"))
        assert not check.compatible
        assert check.max_residual == pytest.approx(0.5, abs=1e-12)
        assert check.worst_pair is not None

    def test_anything_vs_trivial(self, rng):
        trivial = make_decomposition([identity(4)], ["any"])
        check = decompositions_compatible(random_decomposition(rng, 4), trivial)
        assert check.compatible

    def test_disjoint_subsystems(self):
        a = pauli_decomposition("z", factor=1, dims=(2, 2))
        b = pauli_decomposition("x", factor=2, dims=(2, 2))
        check = decompositions_compatible(a, b)
        assert check.compatible and check.max_residual < 1e-15

    def test_dim_mismatch(self):
        with pytest.raises(DimMismatchError):
            decompositions_compatible(pauli_decomposition("z"), random_decomposition(np.random.default_rng(0), 3))


class TestRefine:
    def test_refine_with_trivial_is_identity(self):
        d = pauli_decomposition("z")
        trivial = make_decomposition([I2], ["any"])
        refined = refine(d, trivial)
        assert len(refined) == len(d)
        for p, q in zip(refined.projectors, d.projectors):
            assert max_abs(p - q) < 1e-12

    def test_product_basis(self):
        a = pauli_decomposition("z", factor=1, dims=(2, 2))
        b = pauli_decomposition("z", factor=2, dims=(2, 2))
        refined = refine(a, b)
        assert len(refined) == 4
        for p in refined.projectors:
            assert abs(np.trace(p) - 1.0) < 1e-12  # all rank one
        assert refined.labels == ("+z∧+z", "+z∧-z", "-z∧+z", "-z∧-z")

    def test_incompatible_rejected(self):
        with pytest.raises(IncompatibleFrameworksError):
            refine(pauli_decomposition("z"), pauli_decomposition("x"))

    def test_size_bounds_and_parenthood(self, rng):
        for _ in range(10):
            d = int(rng.integers(2, 7))
            u_diag = random_decomposition(rng, d)
            # conjugate a coarser diagonal split by the same unitary: commuting
            base = u_diag.projectors
            a = u_diag
            half = max(1, len(base) // 2)
            b = make_decomposition(
                [sum(base[:half]), sum(base[half:])] if len(base) > 1 else [identity(d)],
                ["lo", "hi"] if len(base) > 1 else ["any"],
            )
            refined = refine(a, b)
            assert max(len(a), len(b)) <= len(refined) <= len(a) * len(b)
            for label, r in refined.items():
                parent_label = label.split("∧")[0]
                parent = a.projector_for(parent_label)
                assert max_abs(parent @ r - r) < 1e-9

    def test_fold_order_does_not_change_projector_set(self):
        a = pauli_decomposition("z", factor=1, dims=(2, 2))
        b = pauli_decomposition("z", factor=2, dims=(2, 2))
        c = make_decomposition(
            [np.diag([1, 1, 0, 0]).astype(complex), np.diag([0, 0, 1, 1]).astype(complex)],
            ["top", "bottom"],
        )
        first = refine_all([a, b, c])
        second = refine_all([c, b, a])
        assert len(first) == len(second)
        for p in first.projectors:
            assert any(max_abs(p - q) < 1e-12 for q in second.projectors)
