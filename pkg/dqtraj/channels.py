""" Kraus ensembles, the single-outcome maps T_a, and channels as
super-operators

Super-operators act on row-major vectorized matrices, so the single-outcome
map M -> v M v^dagger is ``kron(v, conj(v))``.
"""
import logging

import numpy as np
import scipy.linalg

from .exceptions import DimensionError, InvalidKrausError, UnknownLabelError
from .matrixcore import (
    as_cmatrix,
    dagger,
    psd_repair,
    trace_norm,
    unvec,
    vec,
)
from .util import repr_str


KRAUS_TOL = 1e-10
COMPOSED_TOL = 1e-9
UNIT_EIGENVALUE_TOL = 1e-8


class KrausSet(object):
    """ Finite ordered family of Kraus operators {v_a}, one per outcome label

    Construction checks shapes and labels only; the stochasticity condition
    is checked by ``kraus_validate`` (report) or ``channel_of`` (raises)
    """
    def __init__(self, ops, labels=None, name=None):
        """
        :param ops: list of d x d matrices, or ordered mapping of label to
          matrix
        :param labels: outcome labels, in order; defaults to '0', '1', ...
        :param str name: human readable name, used in messages

        :raises ValueError: If no operators, or labels are duplicated or
          don't match the operators
        :raises DimensionError: If operators differ in dimension

        Examples:

          >>> KrausSet([np.eye(2)])
          <KrausSet: dim=2, alphabet=0>
          >>> KrausSet({'up': np.diag([1, 0]), 'down': np.diag([0, 1])},
          ...          name='z')
          <KrausSet: name=z, dim=2, alphabet=up|down>

          >>> KrausSet([np.eye(2), np.eye(2)], labels=['a', 'a'])
          Traceback (most recent call last):
          ...
          ValueError: Labels must be unique, got ['a', 'a']
          >>> KrausSet([np.eye(2), np.eye(3)])
          Traceback (most recent call last):
          ...
          dqtraj.exceptions.DimensionError: [channels] Kraus operator '1' must be 2x2, got 3x3
        """
        if hasattr(ops, 'items'):
            if labels is not None:
                raise ValueError("Must give labels either as keys or labels")
            labels = list(ops.keys())
            ops = list(ops.values())
        else:
            ops = list(ops)

        if not ops:
            raise ValueError("Must give at least one Kraus operator")
        if labels is None:
            labels = [str(idx) for idx in range(len(ops))]
        labels = [str(label) for label in labels]
        if len(labels) != len(ops):
            raise ValueError("Got %d labels for %d Kraus operators" % (
                len(labels), len(ops),
            ))
        if len(set(labels)) != len(labels):
            raise ValueError("Labels must be unique, got %s" % labels)

        matrices = [
            as_cmatrix(op, name="Kraus operator '%s'" % label)
            for label, op in zip(labels, ops)
        ]
        dim = matrices[0].shape[0]
        for label, mat in zip(labels, matrices):
            if mat.shape[0] != dim:
                raise DimensionError(
                    "Kraus operator '%s' must be %dx%d, got %dx%d" % (
                        label, dim, dim, mat.shape[0], mat.shape[0],
                    ),
                    module='channels',
                )

        self.name = name
        self.dim = dim
        self.alphabet = tuple(labels)
        self._index = {label: idx for idx, label in enumerate(labels)}
        self._ops = np.array(matrices)
        self._ops.setflags(write=False)
        self._effects = np.array([dagger(mat) @ mat for mat in matrices])
        self._effects.setflags(write=False)
        self._superop = None

    def __repr__(self):
        def updater(props):
            """ Render the alphabet compactly """
            props.append(('alphabet', '|'.join(self.alphabet)))
            return props
        return repr_str(self, ('name', 'dim'), updater)

    def __len__(self):
        return len(self.alphabet)

    @property
    def ops(self):
        """ Stacked Kraus operators, shape (|A|, d, d), alphabet order """
        return self._ops

    @property
    def effects(self):
        """ Stacked effects v_a^dagger v_a, alphabet order """
        return self._effects

    def index(self, label):
        """ Position of ``label`` in the alphabet

        :raises UnknownLabelError: If ``label`` isn't in the alphabet

        Examples:

          >>> KrausSet([np.eye(2)], labels=['I']).index('X')
          Traceback (most recent call last):
          ...
          dqtraj.exceptions.UnknownLabelError: [channels] unknown label 'X' (alphabet: I)
        """
        try:
            return self._index[str(label)]
        except KeyError:
            raise UnknownLabelError("unknown label '%s' (alphabet: %s)" % (
                label, ', '.join(self.alphabet),
            ))

    def op(self, label):
        """ Kraus operator v_a for ``label`` """
        return self._ops[self.index(label)]

    def born_probabilities(self, state):
        """ Tr(v_a rho v_a^dagger) for every label, alphabet order

        Examples:

          >>> from .matrixcore import QuantumState
          >>> proj = KrausSet([np.diag([1, 0]), np.diag([0, 1])])
          >>> rho = QuantumState(np.diag([0.3, 0.7]))
          >>> proj.born_probabilities(rho).round(12).tolist()
          [0.3, 0.7]
        """
        mat = state.mat if hasattr(state, 'mat') else np.asarray(state)
        # Tr(E rho) = sum_ij conj(E_ij) rho_ij since E is Hermitian
        return np.real(
            np.einsum('kij,ij->k', np.conjugate(self._effects), mat)
        )

    @property
    def residual(self):
        """ Stochasticity residual: trace norm of sum_a v_a^dagger v_a - I """
        return trace_norm(
            np.sum(self._effects, axis=0) - np.eye(self.dim, dtype=complex)
        )

    @property
    def superop_matrix(self):
        """ d^2 x d^2 matrix of sum_a T_a, computed once """
        if self._superop is None:
            total = np.zeros((self.dim ** 2, self.dim ** 2), dtype=complex)
            for mat in self._ops:
                total += np.kron(mat, np.conjugate(mat))
            total.setflags(write=False)
            self._superop = total
        return self._superop

    def premultiply(self, unitary, name=None):
        """ New set {U v_a} with the same labels

        :raises DimensionError: If ``unitary`` has the wrong dimension
        """
        unitary = as_cmatrix(unitary, dim=self.dim, name='unitary')
        return KrausSet(
            [unitary @ mat for mat in self._ops],
            labels=self.alphabet,
            name=name if name is not None else self.name,
        )


class KrausReport(object):
    """ Outcome of ``kraus_validate`` """
    def __init__(self, passed, residual, tol, name=None):
        self.passed = passed
        self.residual = residual
        self.tol = tol
        self.name = name

    def __repr__(self):
        return repr_str(self, ('name', 'passed', 'residual', 'tol'))

    def __bool__(self):
        return self.passed


def kraus_validate(kraus, tol=KRAUS_TOL):
    """ Check the stochasticity condition sum_a v_a^dagger v_a = I

    :rtype: KrausReport

    Examples:

      >>> kraus_validate(KrausSet([np.eye(2)]))
      <KrausReport: passed=True, residual=0, tol=1e-10>
      >>> kraus_validate(KrausSet([np.diag([1, 0]), np.diag([0, 1])])).passed
      True
      >>> report = kraus_validate(KrausSet([np.eye(2), np.eye(2)]))
      >>> report.passed, round(report.residual, 12)
      (False, 2.0)
    """
    residual = kraus.residual
    return KrausReport(
        passed=residual <= tol,
        residual=residual,
        tol=tol,
        name=kraus.name,
    )


def _check_operand(kraus, mat):
    mat = np.asarray(mat.mat if hasattr(mat, 'mat') else mat, dtype=complex)
    if mat.shape != (kraus.dim, kraus.dim):
        raise DimensionError("operand must be %dx%d, got %s" % (
            kraus.dim, kraus.dim, mat.shape,
        ), module='channels')
    return mat


def apply_T(kraus, label, mat):  # pylint:disable=invalid-name
    """ Single-outcome map T_a(M) = v_a M v_a^dagger

    :raises UnknownLabelError: If ``label`` isn't in the alphabet

    Examples:

      >>> proj = KrausSet([np.diag([1, 0]), np.diag([0, 1])])
      >>> apply_T(proj, '0', np.eye(2) / 2).real.tolist()
      [[0.5, 0.0], [0.0, 0.0]]
    """
    op = kraus.op(label)
    return op @ _check_operand(kraus, mat) @ dagger(op)


def apply_T_adjoint(kraus, label, mat):  # pylint:disable=invalid-name
    """ Adjoint single-outcome map T_a^dagger(M) = v_a^dagger M v_a

    :raises UnknownLabelError: If ``label`` isn't in the alphabet

    Examples:

      >>> proj = KrausSet([np.diag([1, 0]), np.diag([0, 1])])
      >>> apply_T_adjoint(proj, '0', np.eye(2)).real.tolist()
      [[1.0, 0.0], [0.0, 0.0]]
    """
    op = kraus.op(label)
    return dagger(op) @ _check_operand(kraus, mat) @ op


class SuperOp(object):
    """ Linear map on d x d matrices, stored as a d^2 x d^2 matrix over
    row-major vectorized inputs
    """
    def __init__(self, matrix, dim, cptp=False):
        """
        :param matrix: d^2 x d^2 representation
        :param int dim: d
        :param bool cptp: whether the map is known to be a channel

        :raises DimensionError: If ``matrix`` isn't d^2 x d^2
        """
        matrix = np.array(matrix, dtype=complex, copy=True)
        if matrix.shape != (dim ** 2, dim ** 2):
            raise DimensionError(
                "super-operator for d=%d must be %dx%d, got %s" % (
                    dim, dim ** 2, dim ** 2, matrix.shape,
                ),
                module='channels',
            )
        matrix.setflags(write=False)
        self.matrix = matrix
        self.dim = dim
        self.cptp = cptp

    def __repr__(self):
        return repr_str(self, ('dim', 'cptp'))

    @classmethod
    def identity(cls, dim):
        """ Identity map on d x d matrices """
        return cls(np.eye(dim ** 2, dtype=complex), dim, cptp=True)

    def apply(self, mat):
        """ Image of a matrix (or the matrix of a ``QuantumState``)

        Examples:

          >>> SuperOp.identity(2).apply(np.eye(2)).real.tolist()
          [[1.0, 0.0], [0.0, 1.0]]
        """
        mat = mat.mat if hasattr(mat, 'mat') else mat
        mat = np.asarray(mat, dtype=complex)
        if mat.shape != (self.dim, self.dim):
            raise DimensionError("operand must be %dx%d, got %s" % (
                self.dim, self.dim, mat.shape,
            ), module='channels')
        return unvec(self.matrix @ vec(mat), self.dim)

    def apply_state(self, state):
        """ Image of a state, repaired back onto the density matrices """
        return psd_repair(self.apply(state))

    def adjoint(self):
        """ Hilbert-Schmidt adjoint; the adjoint of a channel is unital """
        return SuperOp(dagger(self.matrix), self.dim)

    def compose(self, other):
        """ ``self`` after ``other`` (``other`` is applied first)

        :raises DimensionError: If dimensions differ
        """
        if other.dim != self.dim:
            raise DimensionError("can't compose d=%d with d=%d" % (
                self.dim, other.dim,
            ), module='channels')
        return SuperOp(
            self.matrix @ other.matrix,
            self.dim,
            cptp=self.cptp and other.cptp,
        )

    def power(self, exponent):
        """ ``exponent``-fold composition with itself """
        return SuperOp(
            np.linalg.matrix_power(self.matrix, exponent),
            self.dim,
            cptp=self.cptp,
        )

    def trace_preservation_residual(self):
        """ Trace norm of (adjoint applied to I) - I

        Examples:

          >>> SuperOp.identity(3).trace_preservation_residual()
          0.0
        """
        ident = np.eye(self.dim, dtype=complex)
        return trace_norm(self.adjoint().apply(ident) - ident)

    def eigenvalues(self):
        """ Eigenvalues of the d^2 x d^2 representation """
        return scipy.linalg.eigvals(self.matrix)

    def unit_eigenvalue_count(self, tol=UNIT_EIGENVALUE_TOL):
        """ Multiplicity of eigenvalues within ``tol`` of 1; a channel has a
        unique fixed state only if this is 1

        Examples:

          >>> SuperOp.identity(2).unit_eigenvalue_count()
          4
        """
        return int(np.sum(np.abs(self.eigenvalues() - 1) < tol))

    def spectral_gap(self, tol=UNIT_EIGENVALUE_TOL):
        """ 1 minus the largest modulus among eigenvalues away from 1 """
        eigvals = self.eigenvalues()
        rest = np.abs(eigvals[np.abs(eigvals - 1) >= tol])
        if rest.size == 0:
            return 1.0
        return float(1 - np.max(rest))

    def fixed_point(self):
        """ State spanning the eigenvalue-1 eigenspace, normalized to unit
        trace; among several candidates, the one with the largest trace

        :raises ValueError: If no eigenvector has a usable trace
        """
        eigvals, eigvecs = scipy.linalg.eig(self.matrix)
        order = np.argsort(np.abs(eigvals - 1), kind='stable')
        candidates = [
            idx for idx in order
            if abs(eigvals[idx] - 1) < UNIT_EIGENVALUE_TOL
        ] or [order[0]]
        traces = [abs(np.trace(unvec(eigvecs[:, idx], self.dim)))
                  for idx in candidates]
        best = candidates[int(np.argmax(traces))]
        mat = unvec(eigvecs[:, best], self.dim)
        trace = np.trace(mat)
        if abs(trace) < 1e-12:
            raise ValueError("No fixed point with non-zero trace")
        return psd_repair(mat / trace)


def channel_of(kraus, tol=KRAUS_TOL):
    """ Channel sum_a T_a of a valid Kraus set

    :raises InvalidKrausError: If the set fails ``kraus_validate``

    Examples:

      >>> np.array_equal(channel_of(KrausSet([np.eye(2)])).matrix, np.eye(4))
      True

      >>> channel_of(KrausSet([np.eye(2), np.eye(2)], name='double'))
      Traceback (most recent call last):
      ...
      dqtraj.exceptions.InvalidKrausError: [channels] Kraus set 'double' is not stochastic (residual 2 above 1e-10)
    """
    report = kraus_validate(kraus, tol)
    if not report.passed:
        raise InvalidKrausError(
            "Kraus set '%s' is not stochastic (residual %.3g above %.3g)" % (
                kraus.name or '?', report.residual, tol,
            )
        )
    return SuperOp(kraus.superop_matrix, kraus.dim, cptp=True)


def _chain_dim(chain, dim):
    dims = set(kraus.dim for kraus in chain)
    if dim is not None:
        dims.add(dim)
    if not dims:
        raise ValueError("Must give dim for an empty chain")
    if len(dims) != 1:
        raise DimensionError(
            "chain mixes dimensions %s" % sorted(dims), module='channels',
        )
    return dims.pop()


def compose_forward(chain, dim=None):
    """ phi_N o ... o phi_1 for ``chain`` = [K_1, ..., K_N]: the first
    element is applied first; the empty chain is the identity

    :raises DimensionError: If dimensions differ
    :raises ValueError: If ``chain`` is empty and ``dim`` isn't given

    Examples:

      >>> np.array_equal(compose_forward([], dim=2).matrix, np.eye(4))
      True
    """
    chain = list(chain)
    dim = _chain_dim(chain, dim)
    result = np.eye(dim ** 2, dtype=complex)
    for kraus in chain:
        result = channel_of(kraus).matrix @ result
    result = SuperOp(result, dim, cptp=True)
    residual = result.trace_preservation_residual()
    if residual > COMPOSED_TOL * max(1, len(chain)):
        logging.warning("Composed channel drifted from trace preservation "
                        "by %.3g", residual)
    return result


def compose_backward(chain, dim=None):
    """ phi_0 o phi_1 o ... o phi_(N-1) for ``chain`` = [K_0, ..., K_(N-1)]:
    the last element is applied first. With K_k the fiber at theta^-k(omega)
    this is the backward-orbit composition used by the stationary solver
    """
    chain = list(chain)
    return compose_forward(chain[::-1], dim=dim)


def word_operator(chain, word):
    """ V = v_(b_n) ... v_(b_1), the n-th chain element's operator leftmost

    :raises ValueError: If ``chain`` and ``word`` differ in length
    :raises UnknownLabelError: If a letter isn't in its step's alphabet

    Examples:

      >>> proj = KrausSet([np.diag([1, 0]), np.diag([0, 1])])
      >>> word_operator([proj, proj], ['0', '0']).real.tolist()
      [[1.0, 0.0], [0.0, 0.0]]

      >>> word_operator([proj], ['0', '0'])
      Traceback (most recent call last):
      ...
      ValueError: Chain has 1 steps but word has 2 letters
    """
    chain = list(chain)
    word = list(word)
    if len(chain) != len(word):
        raise ValueError("Chain has %d steps but word has %d letters" % (
            len(chain), len(word),
        ))
    if not chain:
        raise ValueError("Must give at least one step")
    dim = _chain_dim(chain, None)
    result = np.eye(dim, dtype=complex)
    for kraus, label in zip(chain, word):
        result = kraus.op(label) @ result
    return result
