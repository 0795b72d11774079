"""Distributed link scheduling and the utility-maximizing outer loop.

Three greedy priority-pass schedulers (an SIR-threshold baseline, a margin
test on signal and interference levels, and the refined variant that
normalizes by running per-link minimum interference), the independent-set
test they approximate, and a drift-plus-penalty loop that alternates weighted
sum-GDoF solves with closed-form virtual arrivals.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ShapeError
from .matching import _check_subset
from .model import ChannelMatrix, GdofTuple
from .optimize import max_weighted_gdof_exact, max_weighted_gdof_lp

__all__ = [
    "SchedulerParams",
    "ScheduleResult",
    "NumState",
    "NumTrajectory",
    "itis_plus_check",
    "itlinq_plus_schedule",
    "itlinq_schedule",
    "flashlinq_schedule",
    "num_step",
    "num_run",
]

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class SchedulerParams:
    """Scheduler knobs: exponents for the normalized-interference tests, the
    margin for the simpler level test (dB), the SIR acceptance threshold of
    the baseline (dB), and an optional priority permutation (None = index
    order)."""

    eta: float = 0.9
    gamma: float = 0.1
    itlinq_m_db: float = 25.0
    flashlinq_sir_db: float = 9.0
    priority: tuple | None = None

    def __post_init__(self):
        if not (0.0 <= self.eta <= 1.0 and 0.0 <= self.gamma <= 1.0):
            raise ShapeError("exponents must lie in [0, 1]")
        if not (math.isfinite(self.itlinq_m_db) and math.isfinite(self.flashlinq_sir_db)):
            raise ShapeError("thresholds must be finite")


@dataclass(frozen=True)
class ScheduleResult:
    """Outcome of one greedy pass: selected link indices in admission order,
    the per-link running minimum interference tables (into the link's
    receiver / caused by its transmitter; empty for schedulers that keep no
    tables), and a message tally (two pilot rounds plus one table broadcast
    per admission)."""

    selected: tuple
    min_in: dict
    min_out: dict
    messages: int


def _validate_levels(snr, inr):
    snr = np.asarray(snr, dtype=float).reshape(-1)
    inr = np.asarray(inr, dtype=float)
    n = snr.size
    if inr.shape != (n, n):
        raise ShapeError(f"interference table {inr.shape} does not match {n} links")
    if np.any(snr <= 0) or not np.all(np.isfinite(snr)):
        raise ShapeError("link SNRs must be positive and finite")
    off = ~np.eye(n, dtype=bool)
    if np.any(inr[off] <= 0) or not np.all(np.isfinite(inr[off])):
        raise ShapeError("cross INRs must be positive and finite")
    return snr, inr, n


def _order(n: int, priority) -> list:
    if priority is None:
        return list(range(n))
    order = [int(i) for i in priority]
    if sorted(order) != list(range(n)):
        raise ShapeError("priority must be a permutation of all links")
    return order


def itis_plus_check(alpha: ChannelMatrix, subset) -> bool:
    """Relaxed independent-set test on a subnetwork: each member's direct
    strength covers its worst incoming-plus-outgoing cross pair discounted by
    the strongest path between the partners."""
    idx = _check_subset(alpha, subset)
    a = alpha.alpha
    ap = alpha.alpha_prime()
    for k in idx:
        others = [i for i in idx if i != k]
        if not others:
            continue
        worst = max(a[i, k] + a[k, j] - ap[i, j] for i in others for j in others)
        if a[k, k] < worst - DEFAULT_TOL:
            return False
    return True


def itlinq_plus_schedule(snr, inr, params: SchedulerParams | None = None) -> ScheduleResult:
    """Greedy priority pass with running minimum-interference normalization.

    Candidate k is admitted iff, against every already-selected link j,

        snr[k]**eta >= inr[k, j] / min_in[j]**gamma   (caused interference)
        snr[k]**eta >= inr[j, k] / min_out[j]**gamma  (received interference)

    where min_in[j] / min_out[j] track the smallest cross interference into
    j's receiver / caused by j's transmitter among selected links, start at 1,
    and are re-broadcast after every admission.
    """
    if params is None:
        params = SchedulerParams()
    snr, inr, n = _validate_levels(snr, inr)
    order = _order(n, params.priority)
    eta, gamma = params.eta, params.gamma

    selected: list = []
    min_in = {}
    min_out = {}
    messages = 2 * n  # pilot rounds
    for k in order:
        lhs = snr[k] ** eta
        ok = all(
            lhs >= inr[k, j] / min_in[j] ** gamma
            and lhs >= inr[j, k] / min_out[j] ** gamma
            for j in selected
        )
        if not ok:
            continue
        min_in[k] = 1.0
        min_out[k] = 1.0
        for j in selected:
            min_in[j] = min(min_in[j], inr[k, j])
            min_out[j] = min(min_out[j], inr[j, k])
            min_in[k] = min(min_in[k], inr[j, k])
            min_out[k] = min(min_out[k], inr[k, j])
        selected.append(k)
        messages += 1  # table broadcast
    return ScheduleResult(tuple(selected), min_in, min_out, messages)


def itlinq_schedule(snr, inr, eta: float = 0.7, m_db: float = 25.0,
                    priority=None) -> ScheduleResult:
    """Greedy priority pass with a fixed-margin level test: candidate k is
    admitted iff m * snr[k]**eta covers both cross interference levels
    against every already-selected link."""
    snr, inr, n = _validate_levels(snr, inr)
    order = _order(n, priority)
    m = 10.0 ** (m_db / 10.0)
    selected: list = []
    for k in order:
        lhs = m * snr[k] ** eta
        if all(lhs >= inr[k, j] and lhs >= inr[j, k] for j in selected):
            selected.append(k)
    return ScheduleResult(tuple(selected), {}, {}, 2 * n + len(selected))


def flashlinq_schedule(snr, inr, sir_db: float = 9.0, priority=None) -> ScheduleResult:
    """Greedy priority pass admitting a candidate iff both signal-to-single-
    interference ratios against every already-selected link clear the
    threshold: snr[k]/inr[k, j] and snr[j]/inr[j, k]."""
    snr, inr, n = _validate_levels(snr, inr)
    order = _order(n, priority)
    theta = 10.0 ** (sir_db / 10.0)
    selected: list = []
    for k in order:
        if all(
            snr[k] / inr[k, j] >= theta and snr[j] / inr[j, k] >= theta
            for j in selected
        ):
            selected.append(k)
    return ScheduleResult(tuple(selected), {}, {}, 2 * n + len(selected))


@dataclass(frozen=True)
class NumState:
    """Drift-plus-penalty state: per-user virtual queue weights, the utility
    control parameter v, the arrival cap, the fairness exponent of the
    utility family (0 = linear, 1 = logarithmic), and the per-slot history
    of (service, arrival) pairs."""

    weights: np.ndarray
    v: float
    a_max: float
    fairness: float = 1.0
    history: tuple = ()

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float).reshape(-1).copy()
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise ShapeError("weights must be finite and nonnegative")
        if not (self.v > 0 and self.a_max > 0 and self.fairness >= 0):
            raise ShapeError("v, a_max must be positive and fairness nonnegative")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def K(self) -> int:
        return self.weights.size


def _arrivals(state: NumState) -> np.ndarray:
    """Closed-form maximizer of v*U(a) - w.a over [0, a_max]^K for the
    fairness family U(a) = sum a^(1-f)/(1-f) (f=1: log, f=0: linear)."""
    w, v, cap, f = state.weights, state.v, state.a_max, state.fairness
    a = np.empty_like(w)
    for k, wk in enumerate(w):
        if wk == 0:
            a[k] = cap
        elif f == 0:
            a[k] = cap if v >= wk else 0.0
        elif f == 1:
            a[k] = min(max(v / wk, 0.0), cap)
        else:
            a[k] = min(max((v / wk) ** (1.0 / f), 0.0), cap)
    return a


def utility_value(d, fairness: float) -> float:
    """Fairness-family utility of a GDoF vector (log(0) yields -inf)."""
    d = np.asarray(d, dtype=float)
    if fairness == 0:
        return float(d.sum())
    with np.errstate(divide="ignore"):
        if fairness == 1:
            return float(np.sum(np.log(d)))
        if fairness > 1 and np.any(d == 0):
            return -np.inf
        return float(np.sum(d ** (1.0 - fairness)) / (1.0 - fairness))


def _solve_service(alpha: ChannelMatrix, w: np.ndarray, solver: str,
                   ref_power: float, params: SchedulerParams | None) -> np.ndarray:
    # The update max(0, w - d + a) can leave float residue where the true
    # backlog is zero; residue-scale weights also lose solver tie-breaks
    # against the zero point, so snap them before testing for idleness.
    w = np.where(w > 1e-9, w, 0.0)
    if not np.any(w > 0):
        # Zero backlog everywhere makes every feasible point optimal for the
        # weighted sum, so break the tie toward the uniform-weight optimum
        # instead of idling (K = 1 then serves alpha_11 every slot).
        w = np.ones(alpha.K)
    if solver == "exact":
        d, _, _ = max_weighted_gdof_exact(alpha, w)
        return d.d
    if solver == "lp":
        d, _ = max_weighted_gdof_lp(alpha, None, w)
        return d.d
    if solver == "itlinq+":
        # Candidates are positively weighted links in descending-weight order;
        # levels realized at the reference power.
        cand = [k for k in range(alpha.K) if w[k] > 0]
        cand.sort(key=lambda k: (-w[k], k))
        a = alpha.alpha
        snr = np.array([ref_power ** a[k, k] for k in cand])
        inr = ref_power ** a[np.ix_(cand, cand)]
        res = itlinq_plus_schedule(snr, inr, params or SchedulerParams())
        chosen = tuple(cand[i] for i in res.selected)
        d, _ = max_weighted_gdof_lp(alpha, chosen, w)
        return d.d
    raise ValueError(f"unknown solver {solver!r}")


def num_step(state: NumState, alpha: ChannelMatrix, solver: str = "exact",
             ref_power: float = 1e6, params: SchedulerParams | None = None,
             ) -> tuple[GdofTuple, np.ndarray, NumState]:
    """One slot: serve the weighted sum-GDoF optimum, admit the closed-form
    arrivals, and update each weight by max(0, w - service + arrival)."""
    if alpha.K != state.K:
        raise ShapeError(f"state has {state.K} users, network has {alpha.K}")
    d_star = _solve_service(alpha, state.weights, solver, ref_power, params)
    a_star = _arrivals(state)
    new_w = np.maximum(0.0, state.weights - d_star + a_star)
    new_state = dataclasses.replace(
        state, weights=new_w,
        history=state.history + ((tuple(d_star), tuple(a_star)),),
    )
    return GdofTuple(d_star), a_star, new_state


@dataclass(frozen=True)
class NumTrajectory:
    """Per-slot services and arrivals, the running time-averaged GDoF after
    each slot, the utility of each running average, and the final weights."""

    d_star: np.ndarray
    a_star: np.ndarray
    avg_d: np.ndarray
    utility: np.ndarray
    final_weights: np.ndarray

    @property
    def final_avg_d(self) -> np.ndarray:
        return self.avg_d[-1]

    @property
    def final_utility(self) -> float:
        return float(self.utility[-1])


def num_run(alpha: ChannelMatrix, fairness: float = 1.0, v: float = 10.0,
            a_max: float = 1.0, t_slots: int = 1000, solver: str = "exact",
            ref_power: float = 1e6, params: SchedulerParams | None = None,
            ) -> NumTrajectory:
    """Run the drift-plus-penalty loop for t_slots from unit weights."""
    if t_slots < 1:
        raise ShapeError("need at least one slot")
    state = NumState(np.ones(alpha.K), v=v, a_max=a_max, fairness=fairness)
    ds = np.zeros((t_slots, alpha.K))
    as_ = np.zeros((t_slots, alpha.K))
    avg = np.zeros((t_slots, alpha.K))
    util = np.zeros(t_slots)
    running = np.zeros(alpha.K)
    for t in range(t_slots):
        d, a, state = num_step(state, alpha, solver, ref_power, params)
        ds[t] = d.d
        as_[t] = a
        running += (d.d - running) / (t + 1)
        avg[t] = running
        util[t] = utility_value(running, fairness)
    return NumTrajectory(ds, as_, avg, util, state.weights.copy())
