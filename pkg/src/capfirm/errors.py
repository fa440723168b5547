"""Exception hierarchy shared by all capfirm modules.

Every error raised on purpose by this package derives from
:class:`CapacityFirmingError`, so callers (CLI, HTTP service) can map the
whole family to a diagnostic exit code / 422 response in one place.
"""


class CapacityFirmingError(Exception):
    """Base class for all capfirm domain errors."""


# --- configuration / domain validation ---------------------------------


class NonPositivePeriod(CapacityFirmingError):
    """Market period duration is zero or negative."""


class PeriodNotDividingDay(CapacityFirmingError):
    """24 h is not an integer multiple of the market period duration."""


class NegativeParameter(CapacityFirmingError):
    """A parameter that must be non-negative is negative."""


class LengthMismatch(CapacityFirmingError):
    """A series does not have the expected number of periods."""


class EmptyScenarioSet(CapacityFirmingError):
    """A scenario set with zero scenarios was supplied."""


# --- trace ingestion ----------------------------------------------------


class TraceParseError(CapacityFirmingError):
    """A PV CSV row could not be parsed; message carries the line number."""


class NonUniformTimestep(CapacityFirmingError):
    """Consecutive timestamps in a PV CSV are not equally spaced."""


class NegativePower(CapacityFirmingError):
    """A PV power reading is negative (rejected, never clamped)."""


class PartialDay(CapacityFirmingError):
    """A PV trace does not cover whole market days."""


# --- optimization model / solver ----------------------------------------


class UnknownVariable(CapacityFirmingError):
    """A constraint references a variable that was never registered."""


class DuplicateName(CapacityFirmingError):
    """A variable or constraint name was registered twice."""


class DimensionMismatch(CapacityFirmingError):
    """Vector lengths do not match the problem dimensions."""


class InfeasibleProblem(CapacityFirmingError):
    """The QP has no feasible point; message lists the worst constraints."""


# --- planning / evaluation ----------------------------------------------


class NotOptimal(CapacityFirmingError):
    """A result was requested from a solve that did not reach optimality."""


class InvalidNominations(CapacityFirmingError):
    """A nomination schedule violates sign or export-cap limits."""


class RampViolation(InvalidNominations):
    """Consecutive nominations exceed the ramp limit; names the period."""


# --- metrics -------------------------------------------------------------


class DayMismatch(CapacityFirmingError):
    """A report and a trace do not cover the same days."""


class MissingBaseline(CapacityFirmingError):
    """A storage sweep has no zero-capacity baseline case."""


class DegenerateFit(CapacityFirmingError):
    """The marginal-value fit shows no diminishing returns (a >= 0)."""
