"""Exception hierarchy shared across the package."""


class PanelDiagError(Exception):
    """Base class for all errors raised by paneldiag."""


# --- data loading / validation ---

class MalformedRow(PanelDiagError):
    """A CSV row has the wrong arity or an unparseable field."""

    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"line {line_no}: {message}")


class DuplicateCell(PanelDiagError):
    """The same (subject, year) appears more than once."""


class EmptyYear(PanelDiagError):
    """A calendar year between min and max has zero rows."""


# --- logistic fitting ---

class FitError(PanelDiagError):
    """Base class for logistic-fit failures."""


class Separation(FitError):
    """The MLE diverges: (quasi-)complete separation detected."""


class NoConvergence(FitError):
    """Newton iteration hit the cap without meeting the tolerance."""


class SingularHessian(FitError):
    """The negative Hessian is numerically singular."""


# --- bootstrap ---

class TooManyFailures(PanelDiagError):
    """More than the allowed fraction of bootstrap replicates failed."""


# --- diagnostic tests ---

class EmptyIntersection(PanelDiagError):
    """A pair of years shares fewer than two subjects."""


class DegenerateMarginal(PanelDiagError):
    """A claim-indicator marginal is constant on the pair intersection."""


class DegenerateResiduals(PanelDiagError):
    """Residual series are constant; a correlation cannot be formed."""


class ZeroVariance(PanelDiagError):
    """Bootstrap replicates of a correlation show zero spread."""


class SingularCovariance(PanelDiagError):
    """A bootstrap scatter matrix is numerically singular."""

    def __init__(self, message, condition=None):
        self.condition = condition
        super().__init__(message)


# --- numerics ---

class NotPositiveDefinite(PanelDiagError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot_index, message=None):
        self.pivot_index = pivot_index
        super().__init__(message or f"non-positive pivot at index {pivot_index}")


class DomainError(PanelDiagError, ValueError):
    """An argument is outside the mathematical domain of a function."""
