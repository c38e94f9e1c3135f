import numpy as np
import pytest

from projeq import linalg


def triple_loop_matmul(a, b):
    """Naive O(n^3) reference product, independent of numpy's @."""
    m, k = a.shape
    k2, n = b.shape
    assert k == k2
    out = np.zeros((m, n), dtype=np.result_type(a, b))
    for i in range(m):
        for j in range(n):
            acc = 0.0
            for t in range(k):
                acc = acc + a[i, t] * b[t, j]
            out[i, j] = acc
    return out


class TestMatmul:
    def test_identity(self):
        rng = np.random.default_rng(0)
        m = rng.normal(size=(2, 2))
        assert np.array_equal(linalg.matmul(np.eye(2), m), m)

    def test_involution(self):
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        assert np.array_equal(linalg.matmul(swap, swap), np.eye(2))

    def test_against_triple_loop(self):
        rng = np.random.default_rng(1)
        a = rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3))
        assert np.max(np.abs(linalg.matmul(a, b) - triple_loop_matmul(a, b))) < 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(linalg.DimensionError):
            linalg.matmul(np.zeros((2, 3)), np.zeros((2, 3)))

    def test_field_mismatch(self):
        with pytest.raises(linalg.FieldMismatchError):
            linalg.matmul(np.zeros((2, 2)), np.zeros((2, 2), dtype=complex))


class TestKron:
    def test_identity(self):
        assert np.array_equal(linalg.kron(np.eye(2), np.eye(3)), np.eye(6))

    def test_index_arithmetic(self):
        # e0 e0^T (2x2) kron e1 e1^T (2x2): single 1 at (0*2+1, 0*2+1)
        a = np.zeros((2, 2))
        a[0, 0] = 1.0
        b = np.zeros((2, 2))
        b[1, 1] = 1.0
        k = linalg.kron(a, b)
        expected = np.zeros((4, 4))
        expected[1, 1] = 1.0
        assert np.array_equal(k, expected)

    def test_mixed_product(self):
        rng = np.random.default_rng(2)
        a, b, c, d = (rng.normal(size=(2, 2)) for _ in range(4))
        lhs = linalg.matmul(linalg.kron(a, b), linalg.kron(c, d))
        rhs = linalg.kron(linalg.matmul(a, c), linalg.matmul(b, d))
        assert np.max(np.abs(lhs - rhs)) < 1e-12

    def test_mixed_product_complex(self):
        rng = np.random.default_rng(3)
        mats = [rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3)) for _ in range(4)]
        a, b, c, d = mats
        lhs = linalg.kron(a, b) @ linalg.kron(c, d)
        rhs = linalg.kron(a @ c, b @ d)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestConjTranspose:
    def test_real_is_transpose(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(3, 2))
        assert np.array_equal(linalg.conj_transpose(a), a.T)

    def test_conjugates(self):
        assert linalg.conj_transpose(np.array([[1j]]))[0, 0] == -1j

    def test_product_rule(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        lhs = linalg.conj_transpose(a @ b)
        rhs = linalg.conj_transpose(b) @ linalg.conj_transpose(a)
        assert np.max(np.abs(lhs - rhs)) < 1e-12


class TestNullspace:
    def test_zero_matrix(self):
        basis = linalg.rref_nullspace(np.zeros((3, 3)))
        assert len(basis) == 3
        gram = np.array([[np.vdot(u, v) for v in basis] for u in basis])
        assert np.max(np.abs(gram - np.eye(3))) < 1e-10

    def test_identity(self):
        assert linalg.rref_nullspace(np.eye(4)) == []

    def test_rank_one(self):
        rng = np.random.default_rng(6)
        u = rng.normal(size=4)
        v = rng.normal(size=4)
        basis = linalg.rref_nullspace(np.outer(u, v))
        assert len(basis) == 3
        for w in basis:
            assert abs(np.vdot(w, v)) < 1e-10

    def test_complex(self):
        a = np.array([[1.0, 1j]], dtype=complex)
        basis = linalg.rref_nullspace(a)
        assert len(basis) == 1
        assert np.linalg.norm(a @ basis[0]) < 1e-12


class TestColumnSpace:
    def test_identity(self):
        assert len(linalg.column_space_basis(np.eye(4))) == 4

    def test_all_ones(self):
        basis = linalg.column_space_basis(np.ones((3, 3)))
        assert len(basis) == 1
        target = np.ones(3) / np.sqrt(3.0)
        assert min(np.linalg.norm(basis[0] - target), np.linalg.norm(basis[0] + target)) < 1e-12

    def test_projector_range(self):
        # build P = QQ^T from a random orthonormal frame, then P @ basis == basis
        rng = np.random.default_rng(7)
        frame = linalg.orthonormalize([rng.normal(size=6) for _ in range(3)])
        q = np.stack(frame, axis=1)
        p = q @ q.T
        basis = linalg.column_space_basis(p)
        assert len(basis) == 3
        for v in basis:
            assert np.linalg.norm(p @ v - v) < 1e-10


class TestSubspaceEqual:
    def test_rotated_basis(self):
        e1 = np.array([1.0, 0.0])
        e2 = np.array([0.0, 1.0])
        assert linalg.subspace_equal([e1, e2], [(e1 + e2) / np.sqrt(2), (e1 - e2) / np.sqrt(2)])

    def test_different_lines(self):
        e1 = np.array([1.0, 0.0])
        e2 = np.array([0.0, 1.0])
        assert not linalg.subspace_equal([e1], [e2])

    def test_random_rotation_of_subspace(self):
        rng = np.random.default_rng(8)
        basis = linalg.orthonormalize([rng.normal(size=6) for _ in range(3)])
        # rotate the basis inside its own span by a random orthogonal mix
        mix = linalg.orthonormalize([rng.normal(size=3) for _ in range(3)])
        m = np.stack(mix, axis=1)
        b = np.stack(basis, axis=1)
        rotated = [(b @ m)[:, j] for j in range(3)]
        assert linalg.subspace_equal(basis, rotated)

    def test_dimension_mismatch(self):
        with pytest.raises(linalg.DimensionError):
            linalg.subspace_equal([np.ones(3)], [np.ones(4)])


class TestProperties:
    def test_gram_schmidt_orthonormality(self):
        rng = np.random.default_rng(9)
        for trial in range(20):
            vecs = [rng.normal(size=5) for _ in range(rng.integers(1, 6))]
            basis = linalg.orthonormalize(vecs)
            for i, u in enumerate(basis):
                for j, v in enumerate(basis):
                    target = 1.0 if i == j else 0.0
                    assert abs(np.vdot(u, v) - target) < 1e-10

    def test_rank_nullity(self):
        rng = np.random.default_rng(10)
        for trial in range(20):
            m = int(rng.integers(1, 6))
            n = int(rng.integers(1, 6))
            rank = int(rng.integers(0, min(m, n) + 1))
            a = np.zeros((m, n))
            for _ in range(rank):
                a += np.outer(rng.normal(size=m), rng.normal(size=n))
            nullity = len(linalg.rref_nullspace(a))
            colrank = len(linalg.column_space_basis(a.T))
            assert nullity + colrank == n

    def test_canonical_phase(self):
        v = np.array([0.0, -1j, 1.0]) / np.sqrt(2)
        w = linalg.canonical_phase(v)
        assert w[1].imag == pytest.approx(0.0, abs=1e-15)
        assert w[1].real > 0
