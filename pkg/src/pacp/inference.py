"""Estimation and testing on observed attachment logs: window scores, the
two-window maximum-likelihood estimator, the known-parameter and plug-in
likelihood-ratio tests, and single-pass change-point localization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from .errors import DomainError, NoInteriorRoot
from .graph import AttachmentLog, degree_tail_counts, substep_degrees
from .likelihood import log_likelihood, log_lr, log_s_sum
from .simulation import DeltaProfile
from .theory import asymptotic_variance

__all__ = [
    "MleResult",
    "TestVerdict",
    "WindowFit",
    "localize_tau",
    "lr_test",
    "mle",
    "plugin_lr_test",
    "score",
]

SCORE_TOL = 1e-10
MAX_BISECT = 200
DELTA_MAX = 1e6
GUARD_FACTOR = 1e-9  # admissible deltas start at -m + GUARD_FACTOR * m


def _window_tail_diff(g: AttachmentLog, lo: int, hi: int) -> np.ndarray:
    """Tail-count increments N_{>k}(g_hi) - N_{>k}(g_{lo-1}), k = m, m+1, ..."""
    tail_hi = degree_tail_counts(g, upto=hi).tail
    out = tail_hi.astype(np.float64).copy()
    if lo > 1:
        tail_lo = degree_tail_counts(g, upto=lo - 1).tail
        out[: len(tail_lo)] -= tail_lo
    return out


def score(g: AttachmentLog, window: tuple[int, int], delta: float) -> float:
    """Derivative in delta of the window's log-likelihood block.

    ``window`` is an inclusive arrival range (lo, hi); (1, tau) and
    (tau+1, n) are the two blocks of the step factorization.
    """
    lo, hi = window
    if not 1 <= lo <= hi <= g.n:
        raise DomainError(f"window {window} out of range 1..{g.n}")
    if delta <= -g.m:
        raise DomainError(f"delta must be > -m = {-g.m}")
    diff = _window_tail_diff(g, lo, hi)
    k = np.arange(g.m, g.m + len(diff), dtype=np.float64)
    lead = float((diff / (k + delta)).sum())
    m = g.m
    t = np.arange(max(lo, 2), hi + 1, dtype=np.float64)
    if len(t):
        s = (2 * m + delta) * t[:, None] - 2 * m + np.arange(m, dtype=np.float64)[None, :]
        lead -= float((t[:, None] / s).sum())
    return lead


@dataclass(frozen=True)
class WindowFit:
    """Root-finding outcome for one window's score."""

    window: tuple[int, int]
    status: str  # "converged" | "no_interior_root" | "max_iterations"
    delta_hat: float | None
    score_at_estimate: float | None
    bracket: tuple[float, float] | None
    bracket_scores: tuple[float, float] | None
    iterations: int
    stderr: float | None = None

    @property
    def converged(self) -> bool:
        return self.status == "converged"


@dataclass(frozen=True)
class MleResult:
    pre: WindowFit
    post: WindowFit

    @property
    def delta0_hat(self) -> float | None:
        return self.pre.delta_hat

    @property
    def delta1_hat(self) -> float | None:
        return self.post.delta_hat

    @property
    def converged(self) -> bool:
        return self.pre.converged and self.post.converged

    def confidence_intervals(self, level: float = 0.95):
        """Plug-in normal intervals delta_hat +- z * stderr per window."""
        z = norm.ppf(0.5 + level / 2.0)
        out = []
        for fit in (self.pre, self.post):
            if fit.converged and fit.stderr is not None:
                out.append((fit.delta_hat - z * fit.stderr, fit.delta_hat + z * fit.stderr))
            else:
                out.append(None)
        return tuple(out)


def _solve_window(score_fn, m: int, window: tuple[int, int]) -> WindowFit:
    """Expanding-bracket + bisection root search on (-m + guard, DELTA_MAX].

    The score need not be globally monotone, but it is continuous; failure to
    find a sign change is reported as no_interior_root, never forced.
    """
    guard = -m + GUARD_FACTOR * m
    s0 = score_fn(0.0)
    if s0 == 0.0:
        return WindowFit(window, "converged", 0.0, 0.0, (0.0, 0.0), (0.0, 0.0), 0)
    if s0 > 0:
        a, sa = 0.0, s0
        b = 1.0
        while True:
            sb = score_fn(b)
            if sb <= 0:
                break
            if b >= DELTA_MAX:
                return WindowFit(window, "no_interior_root", None, None, (a, b), (s0, sb), 0)
            a, sa = b, sb
            b = min(b * 2.0, DELTA_MAX)
    else:
        b, sb = 0.0, s0
        gap = m / 2.0
        while True:
            a = -m + gap
            if a < guard:
                a = guard
            sa = score_fn(a)
            if sa >= 0:
                break
            if a <= guard:
                return WindowFit(window, "no_interior_root", None, None, (a, b), (sa, s0), 0)
            b, sb = a, sa
            gap /= 2.0
    # invariant: score(a) >= 0 >= score(b), a < b or a > b handled by signs
    lo, s_lo, hi, s_hi = (a, sa, b, sb) if a < b else (b, sb, a, sa)
    for it in range(1, MAX_BISECT + 1):
        mid = 0.5 * (lo + hi)
        sm = score_fn(mid)
        if abs(sm) <= SCORE_TOL:
            return WindowFit(window, "converged", mid, sm, (lo, hi), (s_lo, s_hi), it)
        if (sm > 0) == (s_lo > 0):
            lo, s_lo = mid, sm
        else:
            hi, s_hi = mid, sm
        if lo == hi or math.nextafter(lo, hi) == hi:
            best = lo if abs(s_lo) <= abs(s_hi) else hi
            sb_ = s_lo if best == lo else s_hi
            status = "converged" if abs(sb_) <= SCORE_TOL else "max_iterations"
            return WindowFit(window, status, best, sb_, (lo, hi), (s_lo, s_hi), it)
    best = lo if abs(s_lo) <= abs(s_hi) else hi
    sb_ = s_lo if best == lo else s_hi
    status = "converged" if abs(sb_) <= SCORE_TOL else "max_iterations"
    return WindowFit(window, status, best, sb_, (lo, hi), (s_lo, s_hi), MAX_BISECT)


def mle(g: AttachmentLog, tau: int) -> MleResult:
    """Independent score root-finds on the two windows split at tau.

    A window whose score never changes sign on the admissible interval (a
    degenerate sample, e.g. no minimal-degree attachment after the change)
    reports no_interior_root rather than a forced estimate.
    """
    n, m = g.n, g.m
    if not 1 <= tau < n:
        raise DomainError(f"tau must lie in 1..{n - 1}, got {tau}")

    fits = []
    for window in ((1, tau), (tau + 1, n)):
        lo, hi = window
        diff = _window_tail_diff(g, lo, hi)
        k = np.arange(m, m + len(diff), dtype=np.float64)
        t = np.arange(max(lo, 2), hi + 1, dtype=np.float64)
        i = np.arange(m, dtype=np.float64)

        def score_fn(delta, diff=diff, k=k, t=t, i=i):
            lead = float((diff / (k + delta)).sum())
            if len(t):
                s = (2 * m + delta) * t[:, None] - 2 * m + i[None, :]
                lead -= float((t[:, None] / s).sum())
            return lead

        fits.append(_solve_window(score_fn, m, window))

    pre, post = fits
    if pre.converged:
        nu0 = asymptotic_variance(0, pre.delta_hat, pre.delta_hat, m).value
        pre = _with_stderr(pre, tau, nu0)
        if post.converged:
            nu1 = asymptotic_variance(1, pre.delta_hat, post.delta_hat, m).value
            post = _with_stderr(post, n - tau, nu1)
    return MleResult(pre=pre, post=post)


def _with_stderr(fit: WindowFit, length: int, nu: float) -> WindowFit:
    stderr = 1.0 / math.sqrt(length * nu) if nu > 0 else None
    return WindowFit(
        window=fit.window,
        status=fit.status,
        delta_hat=fit.delta_hat,
        score_at_estimate=fit.score_at_estimate,
        bracket=fit.bracket,
        bracket_scores=fit.bracket_scores,
        iterations=fit.iterations,
        stderr=stderr,
    )


@dataclass(frozen=True)
class TestVerdict:
    """Outcome of a likelihood-ratio test; reject iff statistic > 0 (strict)."""

    statistic: float
    reject: bool
    mode: str  # "known" | "plugin"

    def __post_init__(self):
        if self.reject != (self.statistic > 0):
            raise AssertionError("reject flag inconsistent with statistic")


def lr_test(g: AttachmentLog, tau: int, delta0: float, delta1: float) -> TestVerdict:
    """Known-parameter test: reject when the step-vs-constant LR exceeds one."""
    stat = log_lr(g, tau, delta0, delta1)
    return TestVerdict(statistic=stat, reject=stat > 0, mode="known")


def plugin_lr_test(g: AttachmentLog, tau: int) -> TestVerdict:
    """Plug-in test with both deltas estimated; the statistic compares the
    fitted step profile against the constant profile at the fitted delta0.

    Raises NoInteriorRoot when either window's estimate does not exist, which
    campaign drivers record as an abstention.
    """
    fit = mle(g, tau)
    if not fit.pre.converged:
        raise NoInteriorRoot("pre")
    if not fit.post.converged:
        raise NoInteriorRoot("post")
    stat = log_lr(g, tau, fit.delta0_hat, fit.delta1_hat)
    return TestVerdict(statistic=stat, reject=stat > 0, mode="plugin")


def localize_tau(g: AttachmentLog, delta0: float, delta1: float):
    """Argmax over tau in 0..n of the step-profile log-likelihood, in one pass.

    Moving tau -> tau+1 re-prices only arrival tau+1, so the profile is a
    cumulative sum of per-arrival increments on top of the all-changed
    (tau = 0) likelihood.  Ties break toward the smallest tau.
    """
    n, m = g.n, g.m
    if delta0 <= -m or delta1 <= -m:
        raise DomainError(f"deltas must be > -m = {-m}")
    if delta0 == delta1:
        raise DomainError("localization needs delta0 != delta1")
    base = log_likelihood(g, DeltaProfile.constant(delta1)).value
    profile = np.full(n + 1, base, dtype=np.float64)  # arrival 1 is deterministic
    if n >= 2:
        d = substep_degrees(g, 2).astype(np.float64)
        deg_inc = (np.log(d + delta0) - np.log(d + delta1)).reshape(n - 1, m).sum(axis=1)
        t = np.arange(2, n + 1, dtype=np.float64)
        s0 = (2 * m + delta0) * t[:, None] - 2 * m + np.arange(m, dtype=np.float64)[None, :]
        s1 = (2 * m + delta1) * t[:, None] - 2 * m + np.arange(m, dtype=np.float64)[None, :]
        s_inc = (np.log(s1) - np.log(s0)).sum(axis=1)
        profile[2:] = base + np.cumsum(deg_inc + s_inc)
    tau_hat = int(np.argmax(profile))
    return tau_hat, profile
