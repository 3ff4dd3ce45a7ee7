"""Exception hierarchy shared by all geoduio modules."""


class GeoDuioError(Exception):
    """Base class for every error raised by geoduio."""


class DimensionError(GeoDuioError, ValueError):
    """Operands have incompatible shapes or ambient dimensions."""


class ValidationError(GeoDuioError, ValueError):
    """A model, graph or configuration violates a structural requirement."""


class NotInvariant(GeoDuioError):
    """A subspace is not invariant in the sense the caller required.

    Usually means a numerical-rank decision went the wrong way upstream;
    retrying with a different ``tol_rank`` is the standard remedy.
    """


class StabilizationFailed(GeoDuioError):
    """No output injection placed the quotient spectrum in the good region."""


class NotPositiveDefinite(GeoDuioError):
    """The coupling Gram matrix has a zero (or negative) eigenvalue."""


class JointConditionViolated(GeoDuioError):
    """The node subspaces intersect nontrivially; the network cannot
    reconstruct the full state."""


class NumericalBlowup(GeoDuioError):
    """A simulated state left the admissible magnitude range."""
