"""Label-permutation reduction machinery: the uniform kernel over relabelable
late vertices, the "enough bold vertices" event, the exact permuted
likelihood-ratio via elementary symmetric polynomials, and Monte Carlo probes
of the second-moment / event-failure / martingale-tail bounds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, PreconditionViolated, UndefinedWeight, UnsupportedRegime
from .graph import AttachmentLog, BoldSet, bold_vertices, substep_degrees
from .likelihood import log_s_sum
from .simulation import DeltaProfile, simulate
from .theory import mean_weight_mn
from . import campaign

__all__ = [
    "McResult",
    "ReductionContext",
    "event_bn",
    "event_bn_failure_probe",
    "kernel_sample",
    "log_esp",
    "log_permuted_lr",
    "martingale_tail_probe",
    "permuted_lr",
    "second_moment_probe",
]


def kernel_sample(g: AttachmentLog, tau_prime: int, rng: np.random.Generator, bold: BoldSet | None = None) -> np.ndarray:
    """Uniform draw from the permutations fixing every label outside the
    relabelable late-vertex set; returned as a full permutation of 0..n."""
    if bold is None:
        bold = bold_vertices(g, tau_prime)
    perm = np.arange(g.n + 1, dtype=np.int64)
    if bold.size > 1:
        perm[bold.members] = rng.permutation(bold.members)
    return perm


@dataclass(frozen=True)
class ReductionContext:
    """Everything the permuted-LR computation needs, bound to one graph.

    ``log_weights[j]`` is the log of the per-arrival ratio
    prod_i (d+delta1)/(d+delta0) for arrival k = tau_prime + 1 + j, replayed
    from the log; ``r`` counts post-change arrivals that are relabelable.
    """

    n: int
    m: int
    tau: int
    tau_prime: int
    alpha: float
    delta0: float
    delta1: float
    bold: BoldSet
    log_weights: np.ndarray = field(repr=False)

    @classmethod
    def build(
        cls,
        g: AttachmentLog,
        tau: int,
        tau_prime: int,
        alpha: float,
        delta0: float,
        delta1: float,
    ) -> "ReductionContext":
        n, m = g.n, g.m
        if not 0 <= tau_prime < tau <= n:
            raise DomainError(f"need 0 <= tau_prime < tau <= n, got {tau_prime}, {tau}, {n}")
        if alpha <= 0:
            raise DomainError(f"alpha must be positive, got {alpha}")
        if delta0 <= -m or delta1 <= -m:
            raise DomainError(f"deltas must be > -m = {-m}")
        bold = bold_vertices(g, tau_prime)
        d = substep_degrees(g, tau_prime + 1).astype(np.float64)
        denom = d + delta0
        if (denom <= 0).any():
            raise UndefinedWeight("attachment degree + delta0 must stay positive")
        log_w = (np.log(d + delta1) - np.log(denom)).reshape(n - tau_prime, m).sum(axis=1)
        return cls(
            n=n,
            m=m,
            tau=tau,
            tau_prime=tau_prime,
            alpha=alpha,
            delta0=delta0,
            delta1=delta1,
            bold=bold,
            log_weights=log_w,
        )

    @property
    def width(self) -> int:
        return self.n - self.tau

    @property
    def width_prime(self) -> int:
        return self.n - self.tau_prime

    @property
    def r(self) -> int:
        """Number of post-change arrivals inside the relabelable set."""
        return self.bold.size - int(np.searchsorted(self.bold.members, self.tau + 1))

    def log_weight_of(self, k) -> np.ndarray:
        """log weight of arrival(s) k in (tau_prime, n]."""
        return self.log_weights[np.asarray(k) - self.tau_prime - 1]


def event_bn(ctx: ReductionContext) -> bool:
    """True when the relabelable set is large enough and contains every
    post-change arrival."""
    dp = ctx.width_prime
    threshold = dp * (1.0 - ctx.alpha * dp / ctx.tau_prime) if ctx.tau_prime > 0 else -np.inf
    return ctx.bold.size >= threshold and ctx.r == ctx.width


def log_esp(log_values: np.ndarray, r: int) -> float:
    """log of the order-r elementary symmetric polynomial of positive values.

    Values are pre-scaled by their geometric mean (exponent tracked apart) and
    the running table is renormalized whenever it grows too large, so the
    result stays finite far beyond the naive overflow point.
    """
    k = len(log_values)
    if not 0 <= r <= k:
        raise ValueError(f"order {r} out of range 0..{k}")
    if r == 0:
        return 0.0
    mu = float(log_values.mean())
    w = np.exp(log_values - mu)
    e = np.zeros(r + 1, dtype=np.float64)
    e[0] = 1.0
    shift = 0.0
    for x in w.tolist():
        e[1:] = e[1:] + x * e[:-1]
        top = e.max()
        if top > 1e250:
            e /= top
            shift += math.log(top)
    return math.log(e[r]) + shift + r * mu


def _log_binom(k: int, r: int) -> float:
    return math.lgamma(k + 1) - math.lgamma(r + 1) - math.lgamma(k - r + 1)


def log_permuted_lr(ctx: ReductionContext) -> float:
    """log of the likelihood ratio of the kernel-permuted observation.

    The kernel average over permutations reduces to fixed per-arrival factors
    for post-change arrivals outside the relabelable set, times the mean of a
    symmetric product over distinct relabelable arrivals, which is exactly
    e_r(weights) / C(#relabelable, r).
    """
    n, tau = ctx.n, ctx.tau
    if tau == n:
        return 0.0
    total = log_s_sum(tau + 1, n, ctx.delta0, ctx.m) - log_s_sum(tau + 1, n, ctx.delta1, ctx.m)
    members = ctx.bold.members
    late = np.arange(tau + 1, n + 1, dtype=np.int64)
    fixed = late[~np.isin(late, members)]
    if len(fixed):
        total += float(ctx.log_weight_of(fixed).sum())
    r = ctx.r
    if r:
        lw = ctx.log_weight_of(members)
        total += log_esp(lw, r) - _log_binom(len(members), r)
    return total


def permuted_lr(ctx: ReductionContext) -> float:
    return math.exp(log_permuted_lr(ctx))


# ---------------------------------------------------------------------------
# Monte Carlo probes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class McResult:
    """Point estimate with its standard error and probe-specific extras."""

    estimate: float
    stderr: float
    replicates: int
    seed: int
    auxiliaries: dict
    per_replicate: dict = field(repr=False, default_factory=dict)


def _mean_se(x: np.ndarray) -> tuple[float, float]:
    x = np.asarray(x, dtype=np.float64)
    n = len(x)
    se = float(x.std(ddof=1) / math.sqrt(n)) if n > 1 else float("nan")
    return float(x.mean()), se


def _check_regime(delta0: float) -> None:
    if delta0 < 0:
        raise UnsupportedRegime("the probed statements cover delta0 >= 0 only")


def second_moment_bound_log_rhs(
    m: int, tau_prime: int, width: int, width_prime: int, alpha: float, c1: float, c2: float
) -> float:
    """log of the second-moment bound's right-hand side for given constants."""
    ratio = width * width / width_prime
    return (
        4.0 * alpha * width * width_prime / tau_prime
        + 22.0 * m * width * width / tau_prime
        + 2.0 / (3.0 * width_prime)
        + math.sqrt(c1 * ratio) * math.exp(c2 * ratio)
    )


def _second_moment_replicate(r, n, m, delta0, delta1, tau, tau_prime, alpha, seed):
    g = simulate(n, m, DeltaProfile.constant(delta0), (seed, r))
    ctx = ReductionContext.build(g, tau, tau_prime, alpha, delta0, delta1)
    y = permuted_lr(ctx)
    b = event_bn(ctx)
    return {"y": y, "bn": bool(b), "y2_bn": y * y if b else 0.0, "y_bn": y if b else 0.0}


def second_moment_probe(
    n: int,
    m: int,
    delta0: float,
    delta1: float,
    tau: int,
    tau_prime: int,
    alpha: float,
    replicates: int,
    seed: int,
    *,
    c1: float = 1.0,
    c2: float = 1.0,
    threads: int = 1,
) -> McResult:
    """Estimate E0[Y^2 1_B] under the constant law and evaluate the analytic
    bound's right-hand side for caller-supplied constants.

    The probed statement's hypotheses are enforced: n >= 4, 3 <= tau' < tau,
    alpha width'/tau' <= 1/2 and width/width' <= 1/4.
    """
    _check_regime(delta0)
    width = n - tau
    width_prime = n - tau_prime
    failures = []
    if n < 4:
        failures.append(f"n >= 4 required, got {n}")
    if tau_prime < 3:
        failures.append(f"tau_prime >= 3 required, got {tau_prime}")
    if not tau_prime < tau <= n:
        failures.append(f"tau_prime < tau <= n required, got {tau_prime}, {tau}, {n}")
    elif alpha * width_prime / tau_prime > 0.5:
        failures.append(
            f"alpha*width'/tau' <= 1/2 required, got {alpha * width_prime / tau_prime:.4f}"
        )
    if tau_prime < tau and width_prime > 0 and width / width_prime > 0.25:
        failures.append(f"width/width' <= 1/4 required, got {width / width_prime:.4f}")
    if failures:
        raise PreconditionViolated(failures)

    rows = campaign.run_replicates(
        _second_moment_replicate,
        replicates,
        args=(n, m, delta0, delta1, tau, tau_prime, alpha, seed),
        threads=threads,
    )
    y2 = np.array([row["y2_bn"] for row in rows])
    est, se = _mean_se(y2)
    y_bn_mean, y_bn_se = _mean_se(np.array([row["y_bn"] for row in rows]))
    log_rhs = second_moment_bound_log_rhs(m, tau_prime, width, width_prime, alpha, c1, c2)
    return McResult(
        estimate=est,
        stderr=se,
        replicates=replicates,
        seed=seed,
        auxiliaries={
            "bound_log_rhs": log_rhs,
            "bound_rhs": math.exp(log_rhs) if log_rhs < 700 else float("inf"),
            "p0_bn": float(np.mean([row["bn"] for row in rows])),
            "mean_y_bn": y_bn_mean,
            "stderr_y_bn": y_bn_se,
            "c1": c1,
            "c2": c2,
        },
        per_replicate={
            "y": np.array([row["y"] for row in rows]),
            "bn": np.array([row["bn"] for row in rows]),
            "y2_bn": y2,
        },
    )


def _event_bn_replicate(r, n, m, delta0, delta1, tau, tau_prime, alpha, seed):
    g = simulate(n, m, DeltaProfile.step(delta0, delta1, tau), (seed, r))
    ctx = ReductionContext.build(g, tau, tau_prime, alpha, delta0, delta1)
    return {"bn_fail": not event_bn(ctx), "bold": ctx.bold.size, "bold_late": ctx.r}


def event_bn_failure_probe(
    n: int,
    m: int,
    delta0: float,
    delta1: float,
    tau: int,
    tau_prime: int,
    alpha: float,
    replicates: int,
    seed: int,
    *,
    c_const: float = 1.0,
    threads: int = 1,
) -> McResult:
    """Estimate P1(B^c) under the step law, together with the expected sizes
    of the relabelable set and of its post-change part, and the analytic
    failure bound's shape for a caller-supplied constant."""
    _check_regime(delta0)
    if tau_prime < 2:
        raise PreconditionViolated([f"tau_prime >= 2 required, got {tau_prime}"])
    rows = campaign.run_replicates(
        _event_bn_replicate,
        replicates,
        args=(n, m, delta0, delta1, tau, tau_prime, alpha, seed),
        threads=threads,
    )
    fail = np.array([row["bn_fail"] for row in rows], dtype=np.float64)
    est, se = _mean_se(fail)
    bold_mean, bold_se = _mean_se(np.array([row["bold"] for row in rows]))
    late_mean, late_se = _mean_se(np.array([row["bold_late"] for row in rows]))
    width = n - tau
    width_prime = n - tau_prime
    log_factor = math.log(tau_prime) if delta0 == 0 else 1.0
    bound = (c_const / alpha) * (1.0 + alpha * width * width_prime / tau_prime) * log_factor
    return McResult(
        estimate=est,
        stderr=se,
        replicates=replicates,
        seed=seed,
        auxiliaries={
            "bound_rhs": bound,
            "c_const": c_const,
            "mean_bold": bold_mean,
            "stderr_bold": bold_se,
            "mean_bold_late": late_mean,
            "stderr_bold_late": late_se,
            "width_prime": width_prime,
        },
        per_replicate={
            "bn_fail": fail,
            "bold": np.array([row["bold"] for row in rows]),
            "bold_late": np.array([row["bold_late"] for row in rows]),
        },
    )


def azuma_rate(m: int, delta0: float, delta1: float) -> float:
    """Exponential rate c in the tail bound exp(-c width' x^2), derived from
    the martingale increment bound 2 max(1, (m+d1)/(m+d0))^m."""
    b = 2.0 * max(1.0, (m + delta1) / (m + delta0)) ** m
    return 1.0 / (2.0 * b * b)


def _martingale_replicate(r, n, m, delta0, delta1, tau_prime, seed):
    g = simulate(n, m, DeltaProfile.constant(delta0), (seed, r))
    d = substep_degrees(g, tau_prime + 1).astype(np.float64)
    log_w = (np.log(d + delta1) - np.log(d + delta0)).reshape(n - tau_prime, m).sum(axis=1)
    return {"z": float(np.exp(log_w).mean())}


def martingale_tail_probe(
    n: int,
    m: int,
    delta0: float,
    delta1: float,
    tau_prime: int,
    replicates: int,
    seed: int,
    *,
    c: float | None = None,
    x_grid=None,
    threads: int = 1,
) -> McResult:
    """Empirical upper-tail frequencies of the averaged weight ratio around
    its conditional mean, compared with exp(-c width' x^2) on a grid of x.

    The estimate is the fraction of grid points whose empirical frequency
    exceeds the bound (0.0 means the bound held everywhere).
    """
    if tau_prime < 3:
        raise PreconditionViolated([f"tau_prime >= 3 required, got {tau_prime}"])
    if c is None:
        c = azuma_rate(m, delta0, delta1)
    width_prime = n - tau_prime
    if x_grid is None:
        x_max = math.sqrt(math.log(1e6) / (c * width_prime))
        x_grid = np.linspace(0.0, x_max, 201)
    x_grid = np.asarray(x_grid, dtype=np.float64)
    mn = mean_weight_mn(tau_prime, n, delta0, delta1, m).value
    rows = campaign.run_replicates(
        _martingale_replicate,
        replicates,
        args=(n, m, delta0, delta1, tau_prime, seed),
        threads=threads,
    )
    z = np.array([row["z"] for row in rows])
    excess = z - mn
    freq = (excess[None, :] >= x_grid[:, None]).mean(axis=1)
    bound = np.exp(-c * width_prime * x_grid**2)
    violations = freq > bound
    return McResult(
        estimate=float(violations.mean()),
        stderr=float("nan"),
        replicates=replicates,
        seed=seed,
        auxiliaries={
            "c": c,
            "m_n": mn,
            "x_grid": x_grid.tolist(),
            "tail_freq": freq.tolist(),
            "bound": bound.tolist(),
            "all_below": bool(not violations.any()),
            "mean_z": float(z.mean()),
            "sd_z": float(z.std(ddof=1)) if len(z) > 1 else float("nan"),
        },
        per_replicate={"z": z},
    )
