import logging
from dataclasses import dataclass

import numpy as np

logger = logging.getLogger(__name__)

ERROR_FLOOR = 1e-14


@dataclass(frozen=True)
class RateSummary:
    """Pairwise rates (None where either error is at the floor) and the log-log fit."""
    pair_rates: tuple
    fit: float | None
    at_floor: tuple

    @property
    def all_at_floor(self) -> bool:
        return all(self.at_floor)


def observed_rate(errors, hs, floor: float = ERROR_FLOOR, min_fit_points: int = 2) -> RateSummary:
    """
    rate_i = log(e_i / e_{i+1}) / log(h_i / h_{i+1}); fit = least-squares slope
    of log e against log h over the errors above ``floor``.
    """
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if errors.shape != hs.shape or errors.ndim != 1 or len(errors) < 2:
        raise ValueError("errors and hs must be vectors of the same length >= 2")
    if np.any(hs <= 0.0) or np.any(np.diff(hs) >= 0.0):
        raise ValueError("hs must be positive and strictly decreasing")
    if np.any(errors < 0.0) or not np.all(np.isfinite(errors)):
        raise ValueError("errors must be finite and non-negative")

    at_floor = errors < floor
    rates = []
    for i in range(len(errors) - 1):
        if at_floor[i] or at_floor[i + 1]:
            rates.append(None)
        else:
            rates.append(float(np.log(errors[i] / errors[i + 1]) / np.log(hs[i] / hs[i + 1])))

    keep = ~at_floor
    fit = None
    if keep.sum() >= min_fit_points:
        fit = float(np.polyfit(np.log(hs[keep]), np.log(errors[keep]), 1)[0])
    elif at_floor.any():
        logger.debug("%d of %d errors at the floor %.1e; no fit", int(at_floor.sum()), len(errors), floor)
    return RateSummary(tuple(rates), fit, tuple(bool(b) for b in at_floor))
