"""Exception hierarchy.

Every numerical-domain failure derives from :class:`DiracWeylError`; the CLI
maps those to exit status 3 and :class:`ConfigInvalid` to exit status 2.
"""


class DiracWeylError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(DiracWeylError, ValueError):
    pass


class NotHermitian(DiracWeylError):
    pass


class NegativeEigenvalue(DiracWeylError):
    pass


class IdentityViolated(DiracWeylError):
    """The GBDT parameters do not satisfy a Sigma0 - Sigma0 a^* = i(t1 t1^* - t2 t2^*)."""


class SigmaNotPositive(DiracWeylError):
    pass


class ZNearSpectrum(DiracWeylError):
    """A resolvent was requested too close to the spectrum to be trusted."""


class SingularNormalization(DiracWeylError):
    pass


class BlockNotPositive(DiracWeylError):
    """-A22 is not positive definite, so no matrix ball exists."""


class OmegaNotContractive(DiracWeylError):
    pass


class PoleInUpperHalfPlane(DiracWeylError):
    pass


class ExpansiveOnRealAxis(DiracWeylError):
    pass


class NoHermitianSolution(DiracWeylError):
    pass


class ResidualTooLarge(DiracWeylError):
    pass


class ConsequenceViolated(DiracWeylError):
    """An (almost) real eigenvalue of theta whose eigenvector fails the orthogonality relations."""


class PropagationOverflow(DiracWeylError):
    pass


class NonFiniteOutput(DiracWeylError):
    """A result contained NaN or Inf and was not written."""


class ConfigInvalid(DiracWeylError):
    def __init__(self, message, line=None, field=None):
        self.line = line
        self.field = field
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)
