""" Dense complex matrix kernel: density matrices, inner products, norms and
PSD repair

Matrices are plain ``numpy`` complex arrays checked by ``as_cmatrix``;
density matrices are wrapped in ``QuantumState``. Every function here is
pure, so it's safe to call from concurrent trajectory workers.
"""
import numpy as np
import scipy.linalg

from .exceptions import DimensionError, InvalidStateError, NullStateError
from .util import repr_str


MAX_DIM = 32
STATE_TOL = 1e-10
REPAIR_TOL = 1e-12
NULL_TRACE_TOL = 1e-12


def as_cmatrix(mat, dim=None, name='matrix'):
    """ Coerce ``mat`` to a finite square complex array

    :param mat: anything ``numpy.asarray`` accepts
    :param int dim: required dimension, if any
    :param str name: used in error messages

    :raises DimensionError: If not square, wrong dimension, or larger than
      ``MAX_DIM``
    :raises ValueError: If any entry is NaN or infinite

    Examples:

      >>> as_cmatrix([[1, 0], [0, 1]]).dtype
      dtype('complex128')

      >>> as_cmatrix([[1, 0]])
      Traceback (most recent call last):
      ...
      dqtraj.exceptions.DimensionError: [matrixcore] matrix must be square, got shape (1, 2)

      >>> as_cmatrix(np.eye(2), dim=3)
      Traceback (most recent call last):
      ...
      dqtraj.exceptions.DimensionError: [matrixcore] matrix must be 3x3, got 2x2

      >>> as_cmatrix([[float('nan')]])
      Traceback (most recent call last):
      ...
      ValueError: matrix has non-finite entries
    """
    arr = np.asarray(mat, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise DimensionError(
            "%s must be square, got shape %s" % (name, arr.shape)
        )
    if dim is not None and arr.shape[0] != dim:
        raise DimensionError("%s must be %dx%d, got %dx%d" % (
            name, dim, dim, arr.shape[0], arr.shape[0],
        ))
    if arr.shape[0] < 1 or arr.shape[0] > MAX_DIM:
        raise DimensionError("%s dimension must be in [1, %d], got %d" % (
            name, MAX_DIM, arr.shape[0],
        ))
    if not np.all(np.isfinite(arr)):
        raise ValueError("%s has non-finite entries" % name)
    return arr


def dagger(mat):
    """ Conjugate transpose """
    return np.conjugate(np.transpose(mat))


def _check_same_dim(first, second):
    if first.shape != second.shape:
        raise DimensionError("dimension mismatch: %s vs %s" % (
            first.shape, second.shape,
        ))


def hs_inner(first, second):
    """ Hilbert-Schmidt inner product Tr(M^dagger L), conjugate-linear in the
    first argument

    :raises DimensionError: If the matrices differ in shape

    Examples:

      >>> hs_inner(np.eye(2), np.eye(2))
      (2+0j)
      >>> hs_inner([[0, 1], [1, 0]], [[1, 0], [0, -1]]) == 0
      True
      >>> hs_inner(np.eye(2), np.eye(3))
      Traceback (most recent call last):
      ...
      dqtraj.exceptions.DimensionError: [matrixcore] dimension mismatch: (2, 2) vs (3, 3)
    """
    first = np.asarray(first, dtype=complex)
    second = np.asarray(second, dtype=complex)
    _check_same_dim(first, second)
    return complex(np.vdot(first, second))


def trace_norm(mat):
    """ Schatten 1-norm: the sum of singular values

    Examples:

      >>> round(trace_norm(np.eye(3)), 12)
      3.0
      >>> round(trace_norm(np.diag([1, -2])), 12)
      3.0
    """
    return float(np.sum(scipy.linalg.svdvals(np.asarray(mat, dtype=complex))))


def trace_distance(first, second):
    """ Trace norm of the difference of two states or matrices """
    first = first.mat if isinstance(first, QuantumState) else first
    second = second.mat if isinstance(second, QuantumState) else second
    return trace_norm(np.asarray(first) - np.asarray(second))


def state_violations(mat, tol=STATE_TOL):
    """ Density matrix invariants that ``mat`` breaks, as messages

    Examples:

      >>> state_violations(np.eye(2) / 2)
      []
      >>> state_violations(np.diag([1.5, -0.5]))
      ['min eigenvalue -0.5 below -1e-10']
      >>> state_violations(np.eye(2))
      ['trace 2 differs from 1 by more than 1e-10']
    """
    problems = []
    herm_residual = trace_norm(mat - dagger(mat))
    if herm_residual > tol:
        problems.append(
            'not Hermitian (residual %.3g above %.3g)' % (herm_residual, tol)
        )
    min_eig = float(np.min(np.linalg.eigvalsh((mat + dagger(mat)) / 2)))
    if min_eig < -tol:
        problems.append('min eigenvalue %.3g below %.3g' % (min_eig, -tol))
    trace = complex(np.trace(mat))
    if abs(trace - 1) > tol:
        problems.append('trace %.6g differs from 1 by more than %.3g' % (
            trace.real, tol,
        ))
    return problems


class QuantumState(object):
    """ Density matrix: Hermitian, positive semi-definite, unit trace

    The wrapped matrix is read-only so states can be shared freely
    """
    def __init__(self, mat, validate=True, tol=STATE_TOL):
        """
        :param mat: d x d complex matrix
        :param bool validate: check the density matrix invariants
        :param float tol: tolerance for the invariant checks

        :raises InvalidStateError: If ``validate`` and an invariant fails

        Examples:

          >>> QuantumState(np.eye(2) / 2)
          <QuantumState: dim=2, purity=0.5>

          >>> QuantumState(np.eye(2))
          Traceback (most recent call last):
          ...
          dqtraj.exceptions.InvalidStateError: [matrixcore] invalid quantum state: trace 2 differs from 1 by more than 1e-10
        """
        mat = np.array(as_cmatrix(mat, name='state'), copy=True)
        if validate:
            problems = state_violations(mat, tol)
            if problems:
                raise InvalidStateError(
                    'invalid quantum state: %s' % '; '.join(problems)
                )
        mat.setflags(write=False)
        self._mat = mat

    def __repr__(self):
        return repr_str(self, ('dim', 'purity'))

    @property
    def mat(self):
        """ Read-only density matrix """
        return self._mat

    @property
    def dim(self):
        """ Hilbert space dimension d """
        return self._mat.shape[0]

    @property
    def purity(self):
        """ Tr(rho^2)

        Examples:

          >>> QuantumState.pure(3, 1).purity
          1.0
        """
        return float(np.real(np.vdot(self._mat, self._mat)))

    def distance(self, other):
        """ Trace-norm distance to ``other``

        Examples:

          >>> QuantumState.pure(2, 0).distance(QuantumState.pure(2, 1))
          2.0
        """
        return trace_distance(self, other)

    @classmethod
    def maximally_mixed(cls, dim):
        """ I/d """
        return cls(np.eye(dim, dtype=complex) / dim, validate=False)

    @classmethod
    def pure(cls, dim, index):
        """ Basis projector |index><index|

        :raises ValueError: If ``index`` is out of range

        Examples:

          >>> QuantumState.pure(2, 2)
          Traceback (most recent call last):
          ...
          ValueError: Basis index 2 out of range for dimension 2
        """
        if not 0 <= index < dim:
            raise ValueError(
                "Basis index %s out of range for dimension %s" % (index, dim)
            )
        mat = np.zeros((dim, dim), dtype=complex)
        mat[index, index] = 1
        return cls(mat, validate=False)

    @classmethod
    def from_vector(cls, psi):
        """ Pure state |psi><psi| of a (normalized on the way) vector """
        psi = np.asarray(psi, dtype=complex).reshape(-1)
        norm = np.linalg.norm(psi)
        if norm == 0:
            raise ValueError("Can't build a state from the zero vector")
        psi = psi / norm
        return cls(np.outer(psi, np.conjugate(psi)))


def random_state(dim, rng, rank=None):
    """ Random density matrix G G^dagger / Tr(G G^dagger) with complex Gaussian
    G of shape (dim, rank)

    Examples:

      >>> state = random_state(3, np.random.default_rng(0))
      >>> state_violations(state.mat)
      []
    """
    rank = dim if rank is None else rank
    gauss = rng.standard_normal((dim, rank)) + 1j * rng.standard_normal(
        (dim, rank)
    )
    mat = gauss @ dagger(gauss)
    return psd_repair(mat / np.real(np.trace(mat)))


def psd_repair(raw):
    """ Project an almost-state back onto the density matrices

    Symmetrizes, clips negative eigenvalues to 0 and renormalizes the trace.
    Inputs that are exactly Hermitian (to ``REPAIR_TOL``), PSD and unit
    trace (to ``REPAIR_TOL``) come back unchanged

    :raises NullStateError: If nothing is left after clipping

    Examples:

      >>> clipped = psd_repair(np.diag([1 + 1e-13, -1e-13]))
      >>> bool(np.allclose(clipped.mat, np.diag([1, 0]), atol=1e-15))
      True
      >>> rescaled = psd_repair(np.diag([0.6, 0.6]))
      >>> bool(np.allclose(rescaled.mat, np.eye(2) / 2, atol=1e-15))
      True

      >>> psd_repair(np.diag([-1.0, 0.0]))
      Traceback (most recent call last):
      ...
      dqtraj.exceptions.NullStateError: [matrixcore] numerically null state
    """
    raw = as_cmatrix(raw, name='state')
    herm = (raw + dagger(raw)) / 2
    eigvals, eigvecs = np.linalg.eigh(herm)

    if (
            trace_norm(raw - herm) <= REPAIR_TOL and
            eigvals[0] >= 0 and
            abs(np.trace(raw) - 1) <= REPAIR_TOL
    ):
        return QuantumState(raw, validate=False)

    eigvals = np.clip(eigvals, 0, None)
    total = float(np.sum(eigvals))
    if total < NULL_TRACE_TOL:
        raise NullStateError()

    mat = (eigvecs * (eigvals / total)) @ dagger(eigvecs)
    return QuantumState((mat + dagger(mat)) / 2, validate=False)


def project_action(kraus_op, state, tol=NULL_TRACE_TOL):
    """ State conditioned on Kraus operator ``kraus_op``:
    M rho M^dagger / Tr(M rho M^dagger), or I/d when that trace is ``<= tol``

    :param kraus_op: d x d matrix M
    :param QuantumState state: rho
    :param float tol: degenerate-normalization threshold

    :raises DimensionError: If dimensions differ

    Examples:

      >>> half = QuantumState.maximally_mixed(2)
      >>> proj0 = np.diag([1, 0])
      >>> bool(np.allclose(project_action(proj0, half).mat, proj0))
      True

      Fallback when the branch has no weight:

      >>> project_action(proj0, QuantumState.pure(2, 1)).mat.real.tolist()
      [[0.5, 0.0], [0.0, 0.5]]
    """
    if tol <= 0:
        raise ValueError("tol must be positive, got %s" % tol)
    kraus_op = as_cmatrix(kraus_op, dim=state.dim, name='Kraus operator')
    raw = kraus_op @ state.mat @ dagger(kraus_op)
    weight = float(np.real(np.trace(raw)))
    if weight <= tol:
        return QuantumState.maximally_mixed(state.dim)
    return psd_repair(raw / weight)


def vec(mat):
    """ Row-major vectorization, matching ``SuperOp`` matrices """
    return np.asarray(mat, dtype=complex).reshape(-1)


def unvec(vector, dim):
    """ Inverse of ``vec`` """
    return np.asarray(vector, dtype=complex).reshape(dim, dim)
