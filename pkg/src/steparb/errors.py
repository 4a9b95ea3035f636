"""Exception hierarchy. Every error carries a stable ``code`` string used by the CLI."""


class StepArbError(Exception):
    """Base class for all package errors."""

    code = "ERROR"


class SharpeGapZeroError(StepArbError):
    """The two assets have equal market prices of risk; the two-asset hedge does not exist."""

    code = "SHARPE_GAP_ZERO"


class NoSolutionError(StepArbError):
    """Observed price lies outside the no-arbitrage bounds; no implied volatility exists."""

    code = "NO_SOLUTION"


class IterLimitError(StepArbError):
    """Root search exhausted its iteration budget."""

    code = "ITER_LIMIT"


class PicardDivergedError(StepArbError):
    """Inner nonlinear iteration failed to contract within the configured cap."""

    code = "PICARD_DIVERGED"


class NonFiniteError(StepArbError):
    """Solution values overflowed or became NaN during time marching."""

    code = "NONFINITE"


class NotConvergedError(StepArbError):
    """Long-time marching hit its time cap before reaching stationarity."""

    code = "NOT_CONVERGED"


class OutOfCorridorError(StepArbError):
    """Requested price point lies outside the contract corridor."""

    code = "OUT_OF_CORRIDOR"


class NoCrossingError(StepArbError):
    """Profile never crosses the unstable middle level; no transition point to locate."""

    code = "NO_CROSSING"


class EmptyCurveError(StepArbError):
    """No implied-volatility point on the curve could be computed."""

    code = "EMPTY_CURVE"


class ConfigError(StepArbError):
    """Aggregated experiment-config validation failure."""

    code = "CONFIG"

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid config:\n" + "\n".join(f"  - {p}" for p in self.problems))
