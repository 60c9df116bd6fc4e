"""Exception hierarchy shared by all freqlift modules."""


class FreqliftError(Exception):
    """Base class for all library errors."""


class ConfigError(FreqliftError):
    """Malformed configuration, spec string, or parameter set."""


# -- circle ------------------------------------------------------------------

class AntipodalInput(FreqliftError):
    """Two circle points are (within tolerance) exactly opposite, so the
    short arc between them is not unique."""


# -- primes ------------------------------------------------------------------

class RangeTooLarge(FreqliftError):
    """Requested sieve or evaluation range exceeds the configured budget."""


# -- multfn ------------------------------------------------------------------

class IndexOutOfRange(FreqliftError):
    """Character index outside [0, phi(q))."""


# -- expsum ------------------------------------------------------------------

class PrimeTooLarge(FreqliftError):
    """Prime exceeds the interval length in a mean-comparison test."""


# -- gluing ------------------------------------------------------------------

class Incompatible(FreqliftError):
    """Cross relation between two phased primes exceeds the allowed bound."""


class AmbiguousLifts(FreqliftError):
    """Two lift pairs tie at the maximal distance 1/(2*p1*p2); only
    detectable in exact mode."""


class PreconditionViolated(FreqliftError):
    """A caller-checkable hypothesis of a phase-relation operation fails."""


class InsufficientPairs(FreqliftError):
    """Compatibility graph has too few edges for concentration."""


class NoCommonNeighbors(FreqliftError):
    """No prime pair shares at least two compatible neighbours."""


# -- approx ------------------------------------------------------------------

class HypothesisFails(FreqliftError):
    """Not enough near-integer multiples for rational approximation."""


class NoDenominatorInRange(FreqliftError):
    """No continued-fraction convergent has a small enough denominator."""


# -- lifting -----------------------------------------------------------------

class NoQualifyingScale(FreqliftError):
    """No dyadic prime block qualifies any configuration entry."""


class DensityCollapse(FreqliftError):
    """A constructed configuration fell below its density floor."""


class ConcentrationFailed(FreqliftError):
    """Frequency concentration failed at a specific grid point."""

    def __init__(self, z, reason=""):
        self.z = z
        super().__init__(f"concentration failed at z={z}: {reason}")


class TooManyTuples(FreqliftError):
    """Prime-product enumeration would exceed the tuple budget."""


class VinogradovFailed(FreqliftError):
    """Rational approximation of the top frequency failed."""


class NoAnchor(FreqliftError):
    """No anchor point carries at least two prime products."""


class StageError(FreqliftError):
    """Wraps an error raised inside a named pipeline stage."""

    def __init__(self, stage, cause):
        self.stage = stage
        self.cause = cause
        super().__init__(f"[{stage}] {cause}")


# -- pretend -----------------------------------------------------------------

class CutoffTooLarge(FreqliftError):
    """Prime cutoff of the distance sum exceeds the enumeration budget."""
