"""Unbiased PV scenario generation from a moving-average error model.

A forecast issued at the day-ahead gate relates to the true signal through
a multiplicative error, ``forecast = truth * (1 + eps_k)``, where ``k`` is
the lead time in market periods.  The error path follows a moving-average
process driven by i.i.d. normal innovations with standard deviation
``sigma`` and geometrically decaying coefficients ``p^i``, which makes the
error variance grow with lead time and then plateau at
``sigma^2 / (1 - p^2)``.

With the default 15-minute periods and a 16:00 gate, the first delivery
period of the next day is lead 33 and the last is lead 128, so a day of 96
periods maps exactly onto leads 33..128.

Randomness is counter-based (Philox): every scenario draws from its own
substream keyed by ``(seed, scenario_index)``, so increasing the scenario
count never reshuffles earlier scenarios and paths can be generated in
parallel.
"""

from __future__ import annotations

from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy.signal import lfilter

from .domain import MarketDay, ScenarioSet
from .errors import EmptyScenarioSet, LengthMismatch, NegativeParameter

DEFAULT_MAX_LEAD = 128
DEFAULT_LEAD_OFFSET = 33


class ErrorModelParams(BaseModel):
    """Parameters of the multiplicative prediction-error model."""

    model_config = ConfigDict(frozen=True)

    p: float = 0.9
    sigma: float = 0.0363
    max_lead: int = DEFAULT_MAX_LEAD
    lead_offset: int = DEFAULT_LEAD_OFFSET

    @model_validator(mode="after")
    def _check(self) -> "ErrorModelParams":
        if not (0.0 <= self.p < 1.0):
            raise NegativeParameter(f"p must be in [0, 1), got {self.p}")
        if self.sigma < 0.0:
            raise NegativeParameter(f"sigma must be >= 0, got {self.sigma}")
        if not (1 <= self.lead_offset <= self.max_lead):
            raise NegativeParameter(
                f"need 1 <= lead_offset <= max_lead, got "
                f"{self.lead_offset}/{self.max_lead}"
            )
        return self

    @classmethod
    def from_eps_max(cls, eps_max: float, p: float = 0.9, **kwargs) -> "ErrorModelParams":
        """Calibrate sigma so |eps| stays below ``eps_max`` w.p. ~0.997."""
        return cls(p=p, sigma=sigma_from_eps_max(eps_max, p), **kwargs)


def sigma_from_eps_max(eps_max: float, p: float) -> float:
    """Innovation std that caps the plateau error at ``eps_max`` (3-sigma)."""
    if eps_max < 0.0:
        raise NegativeParameter(f"eps_max must be >= 0, got {eps_max}")
    if not (0.0 <= p < 1.0):
        raise NegativeParameter(f"p must be in [0, 1), got {p}")
    return eps_max * np.sqrt(1.0 - p * p) / 3.0


def variance_profile(p: float, sigma: float, k_max: int) -> np.ndarray:
    """Var(eps_k) for k = 1..k_max: sigma^2 (1 - p^(2k)) / (1 - p^2)."""
    if not (0.0 <= p < 1.0):
        raise NegativeParameter(f"p must be in [0, 1), got {p}")
    k = np.arange(1, k_max + 1, dtype=float)
    p2 = p * p
    if p2 == 0.0:
        amps = np.ones(k_max)
    else:
        amps = (1.0 - p2 ** k) / (1.0 - p2)
    return sigma * sigma * amps


SeedLike = int | tuple[int, ...]


def _substream(seed: SeedLike, index: int) -> np.random.Generator:
    base = tuple(int(s) for s in seed) if isinstance(seed, tuple) else (int(seed),)
    seq = np.random.SeedSequence(entropy=(*base, int(index)))
    return np.random.Generator(np.random.Philox(seq))


def ma_error_path(params: ErrorModelParams, rng_seed: SeedLike,
                  substream: int = 0) -> np.ndarray:
    """One error path eps_1..eps_K; deterministic in (rng_seed, substream)."""
    rng = _substream(rng_seed, substream)
    eta = rng.normal(0.0, params.sigma, params.max_lead)
    if params.sigma == 0.0:
        return np.zeros(params.max_lead)
    # eps_k = eta_k + sum_i p^i eta_{k-i} is the AR recursion
    # eps_k = eta_k + p eps_{k-1}
    return lfilter([1.0], [1.0, -params.p], eta)


def ma_error_paths(params: ErrorModelParams, n_paths: int,
                   rng_seed: SeedLike) -> np.ndarray:
    """(n_paths, K) error paths; row i uses substream (rng_seed, i)."""
    eta = np.empty((n_paths, params.max_lead))
    for i in range(n_paths):
        eta[i] = _substream(rng_seed, i).normal(0.0, params.sigma,
                                                params.max_lead)
    if params.sigma == 0.0:
        return np.zeros_like(eta)
    return lfilter([1.0], [1.0, -params.p], eta, axis=1)


def generate_scenarios(truth: MarketDay | Sequence[float],
                       params: ErrorModelParams,
                       n_scenarios: int,
                       rng_seed: SeedLike,
                       capacity_kwp: float,
                       leads: Sequence[int] | None = None) -> ScenarioSet:
    """Build an unbiased day-ahead scenario set around a true PV profile.

    Each scenario multiplies the truth by ``1 + eps_k`` along its own error
    path, with lead ``k`` running over the delivery-day window
    ``lead_offset..max_lead`` (or an explicit ``leads`` mapping), then
    clips to ``[0, capacity_kwp]``.  Periods where the truth is zero stay
    exactly zero.  Probabilities are uniform.
    """
    values = np.asarray(truth.values if isinstance(truth, MarketDay) else truth,
                        dtype=float)
    t = values.size
    if n_scenarios < 1:
        raise EmptyScenarioSet(f"need at least one scenario, got {n_scenarios}")
    if leads is None:
        expected = params.max_lead - params.lead_offset + 1
        if t != expected:
            raise LengthMismatch(
                f"day has {t} periods but leads {params.lead_offset}.."
                f"{params.max_lead} cover {expected}; pass an explicit "
                f"lead mapping for other layouts"
            )
        lead_idx = np.arange(params.lead_offset - 1, params.max_lead)
    else:
        lead_arr = np.asarray(leads, dtype=int)
        if lead_arr.size != t:
            raise LengthMismatch(
                f"lead mapping has {lead_arr.size} entries for {t} periods"
            )
        if lead_arr.min() < 1 or lead_arr.max() > params.max_lead:
            raise LengthMismatch(
                f"leads must lie in 1..{params.max_lead}"
            )
        lead_idx = lead_arr - 1

    eps = ma_error_paths(params, n_scenarios, rng_seed)[:, lead_idx]
    paths = np.clip(values[None, :] * (1.0 + eps), 0.0, capacity_kwp)
    prob = 1.0 / n_scenarios
    return ScenarioSet(
        scenarios=tuple(tuple(float(v) for v in row) for row in paths),
        probabilities=tuple(prob for _ in range(n_scenarios)),
    )
