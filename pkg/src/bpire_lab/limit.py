"""The limiting objects: stable Lévy paths, glued conditioned
environments, martingale-limit proxies, and the ratio law driving the
limit process.

The limit process is built from two independent ingredients: the level
(running infimum) of a strictly stable Lévy process, and an i.i.d.
sequence of ratios gamma = Sigma2/Sigma1 of two random series over a
two-sided environment. The two-sided environment glues an independent
pair of conditioned walks: a nonnegative one indexed forward and a
negative one indexed backward (with flipped sign), each carrying its own
immigration rates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bpire import branch_generation
from .conditioned import resample_by_weight, sample_conditioned_batch
from .env import EnvironmentModel
from .ladder import LadderTables

__all__ = [
    "LevyPath",
    "LevelPath",
    "TwoSidedEnvironment",
    "TwoSidedBatch",
    "GammaSample",
    "GammaBatch",
    "LimitFdd",
    "check_stable_params",
    "stable_standard",
    "simulate_levy",
    "level_of",
    "sample_two_sided_batch",
    "sample_two_sided_environment",
    "series_terms",
    "estimate_zeta",
    "sample_gamma",
    "sample_gamma_batch",
    "sample_limit_fdd",
    "sample_limit_fdd_batch",
    "estimate_level_change_prob",
    "export_gamma_csv",
    "export_fdd_csv",
]


def check_stable_params(alpha: float, rho: float) -> None:
    """Reject (alpha, rho) pairs with no two-sided strictly stable law.

    For alpha in (1, 2) the positivity parameter is constrained to
    [1 - 1/alpha, 1/alpha]; alpha = 2 forces rho = 1/2; rho in the open
    interval (0, 1) excludes one-sided laws throughout.
    """
    if not 0.0 < alpha <= 2.0:
        raise ValueError(f"alpha must lie in (0,2], got {alpha}")
    if not 0.0 < rho < 1.0:
        raise ValueError(f"rho must lie in (0,1), got {rho}")
    if alpha == 2.0 and rho != 0.5:
        raise ValueError("alpha=2 admits only rho=1/2")
    if 1.0 < alpha < 2.0 and not (1.0 - 1.0 / alpha <= rho <= 1.0 / alpha):
        raise ValueError(
            f"alpha={alpha} requires rho in [{1 - 1/alpha:.4f}, {1/alpha:.4f}]"
        )


def stable_standard(alpha: float, rho: float, size, rng: np.random.Generator) -> np.ndarray:
    """Standard strictly stable variates with P(X > 0) = rho.

    Uniform-exponential transform: with U uniform on (-pi/2, pi/2), E a
    unit exponential and t = pi (rho - 1/2),

        X = sin(alpha (U + t)) / (cos(alpha t) cos U)^{1/alpha}
            * (cos(alpha t + (alpha-1) U) / E)^{(1-alpha)/alpha}

    for alpha != 1, and X = tan(U) + tan(pi (rho - 1/2)) at alpha = 1.
    The symmetric case has characteristic function exp(-|s|^alpha); at
    alpha = 2 this is Normal(0, 2).
    """
    check_stable_params(alpha, rho)
    u = rng.uniform(-np.pi / 2.0, np.pi / 2.0, size)
    if alpha == 1.0:
        return np.tan(u) + math.tan(np.pi * (rho - 0.5))
    e = rng.exponential(1.0, size)
    t = np.pi * (rho - 0.5)
    a = alpha
    num = np.sin(a * (u + t))
    den = (math.cos(a * t) * np.cos(u)) ** (1.0 / a)
    fac = (np.cos(a * t + (a - 1.0) * u) / e) ** ((1.0 - a) / a)
    return num / den * fac


@dataclass(frozen=True)
class LevyPath:
    """A strictly stable Lévy path sampled on a uniform grid."""

    t: np.ndarray
    w: np.ndarray
    alpha: float
    rho: float


@dataclass(frozen=True)
class LevelPath:
    """Running infimum of a Lévy path on its grid."""

    t: np.ndarray
    l: np.ndarray


def simulate_levy(alpha: float, rho: float, grid, rng: np.random.Generator) -> LevyPath:
    """Simulate W on a uniform grid starting at t=0 with W(0)=0.

    Increments over cells of width delta are independent standard stable
    variates scaled by delta^{1/alpha}.
    """
    t = np.asarray(grid, dtype=float)
    if len(t) < 2 or t[0] != 0.0:
        raise ValueError("grid must start at 0 and have at least two points")
    deltas = np.diff(t)
    if not np.allclose(deltas, deltas[0], rtol=1e-9, atol=1e-12):
        raise ValueError("grid must be uniform")
    if deltas[0] <= 0:
        raise ValueError("grid step must be positive")
    inc = deltas[0] ** (1.0 / alpha) * stable_standard(alpha, rho, len(deltas), rng)
    w = np.concatenate([[0.0], np.cumsum(inc)])
    return LevyPath(t=t, w=w, alpha=alpha, rho=rho)


def level_of(path: LevyPath) -> LevelPath:
    """Discretized running infimum of the path."""
    return LevelPath(t=path.t, l=np.minimum.accumulate(path.w))


@dataclass
class TwoSidedBatch:
    """Replica batch of glued two-sided environments.

    Positive side: ``s_pos`` rows are S*_0..S*_{hp} (nonnegative walk),
    ``mu_pos`` the rates mu*_1..mu*_{hp}. Negative side: ``s_neg`` rows
    are the negative-conditioned walk S^-_0..S^-_{hn} (negative from
    index 1), ``mu_neg`` its rates mu^-_1..mu^-_{hn}; the glued values
    at i <= 0 are S*_i = -S^-_{-i} and mu*_i = mu^-_{-i+1}.
    """

    s_pos: np.ndarray
    mu_pos: np.ndarray
    s_neg: np.ndarray
    mu_neg: np.ndarray
    meta: dict = field(default_factory=dict)

    @property
    def reps(self) -> int:
        return self.s_pos.shape[0]

    def s_star(self, i: int) -> np.ndarray:
        return self.s_pos[:, i] if i >= 0 else -self.s_neg[:, -i]

    def mu_star(self, i: int) -> np.ndarray:
        return self.mu_pos[:, i - 1] if i >= 1 else self.mu_neg[:, -i]

    def x_star(self, j: int) -> np.ndarray:
        """Step S*_j - S*_{j-1} of the glued walk."""
        if j >= 1:
            return self.s_pos[:, j] - self.s_pos[:, j - 1]
        return self.s_neg[:, -j + 1] - self.s_neg[:, -j]


@dataclass(frozen=True)
class TwoSidedEnvironment:
    """One glued environment covering indices -half_width..half_width."""

    half_width: int
    batch: TwoSidedBatch
    row: int = 0

    def s_star(self, i: int) -> float:
        return float(self.batch.s_star(i)[self.row])

    def mu_star(self, i: int) -> float:
        return float(self.batch.mu_star(i)[self.row])


def sample_two_sided_batch(model: EnvironmentModel, I: int, method: str,
                           reps: int, rng: np.random.Generator,
                           tables: LadderTables | None = None,
                           pos_extra: int = 0,
                           face: str = "tilt") -> TwoSidedBatch:
    """Draw glued environments at series half-width ``I``.

    The positive side is sampled to horizon I + ``pos_extra`` (cohort
    evolution beyond the series needs the extra steps), the negative side
    to horizon I; the two sides are independent. With ``face='tilt'``
    (the default) both sides are drawn from the renewal-reweighted
    measure that the limiting environment obeys: rejection paths are
    importance-resampled by their terminal renewal weight, h-transform
    paths already carry that law. ``face='conditional'`` keeps the plain
    finite-horizon conditional laws.
    """
    if I < 1:
        raise ValueError("I must be >= 1")
    hp = I + max(pos_extra, 0)
    hn = I
    sides = {}
    for side, horizon in (("positive", hp), ("negative", hn)):
        batch = sample_conditioned_batch(model, horizon, method, reps, rng,
                                         side, tables)
        s = batch.s
        if face == "tilt":
            if batch.tilt_weights is None:
                raise ValueError("tilt face requires ladder tables")
            if batch.method == "rejection":
                s = resample_by_weight(s, batch.tilt_weights, reps, rng)
        elif face == "conditional":
            if batch.method == "h-transform":
                s = resample_by_weight(s, batch.cond_weights, reps, rng)
        else:
            raise ValueError(f"unknown face {face!r}")
        sides[side] = s
    mu_pos = np.asarray(model.draw_rate(rng, (reps, hp)), dtype=float)
    mu_neg = np.asarray(model.draw_rate(rng, (reps, hn)), dtype=float)
    return TwoSidedBatch(
        s_pos=sides["positive"], mu_pos=mu_pos,
        s_neg=sides["negative"], mu_neg=mu_neg,
        meta={"I": I, "method": method, "face": face, "pos_extra": pos_extra},
    )


def sample_two_sided_environment(model: EnvironmentModel, I: int, method: str,
                                 rng: np.random.Generator,
                                 tables: LadderTables | None = None,
                                 pos_extra: int = 0) -> TwoSidedEnvironment:
    """One glued environment (batch machinery with an internal pool).

    Cohort evolution beyond the series half-width must be declared via
    ``pos_extra`` at sampling time (the reweighted law is not extended
    after the fact).
    """
    batch = sample_two_sided_batch(model, I, method, 256, rng, tables,
                                   pos_extra=pos_extra,
                                   face="tilt" if tables is not None else "conditional")
    return TwoSidedEnvironment(half_width=I, batch=batch, row=0)


def series_terms(env: TwoSidedBatch, I: int):
    """Per-index terms mu*_{i+1} e^{-S*_i} of the first series.

    Returns (pos, neg): ``pos[:, j]`` is the term at i = j for
    j = 0..I-1; ``neg[:, j]`` the term at i = -(j+1) for j = 0..I-1,
    which in the negative side's own coordinates is mu^-_{j+1} e^{S^-_{j+1}}.
    """
    pos = env.mu_pos[:, :I] * np.exp(-env.s_pos[:, :I])
    neg = env.mu_neg[:, :I] * np.exp(env.s_neg[:, 1:I + 1])
    return pos, neg


def _zeta_log_batch(env: TwoSidedBatch, i: int, J: int,
                    rng: np.random.Generator) -> np.ndarray:
    """ln of the cohort martingale value a*_{i,i+J} Z*_{i,i+J} per replica.

    The cohort starts from a Poisson immigrant draw with rate mu*_{i+1}
    and branches through the glued environment for J generations; the
    result approximates the almost-sure martingale limit for the cohort.
    Returns -inf where the cohort died.
    """
    eta = rng.poisson(env.mu_star(i + 1)).astype(float)
    with np.errstate(divide="ignore"):
        z_log = np.where(eta > 0, np.log(np.maximum(eta, 1.0)), -np.inf)
    z_lin = eta
    for j in range(i + 1, i + J + 1):
        z_lin, z_log = branch_generation(z_lin, z_log, env.x_star(j), rng)
    return z_log - (env.s_star(i + J) - env.s_star(i))


def estimate_zeta(env: TwoSidedEnvironment, i: int, J: int,
                  rng: np.random.Generator) -> float:
    """Martingale-limit proxy for cohort i at depth J in one environment."""
    if J < 1:
        raise ValueError("J must be >= 1")
    one = TwoSidedBatch(
        s_pos=env.batch.s_pos[env.row:env.row + 1],
        mu_pos=env.batch.mu_pos[env.row:env.row + 1],
        s_neg=env.batch.s_neg[env.row:env.row + 1],
        mu_neg=env.batch.mu_neg[env.row:env.row + 1],
    )
    if i + J > one.s_pos.shape[1] - 1:
        raise ValueError("environment horizon too short; resample with pos_extra")
    return float(np.exp(_zeta_log_batch(one, i, J, rng)[0]))


@dataclass(frozen=True)
class GammaSample:
    """One truncated realization of the series pair and their ratio."""

    sigma1: float
    sigma2: float
    gamma: float
    trunc_i: int
    trunc_j: int
    method: str


@dataclass
class GammaBatch:
    sigma1: np.ndarray
    sigma2: np.ndarray
    gamma: np.ndarray
    trunc_i: int
    trunc_j: int
    method: str


def sample_gamma_batch(model: EnvironmentModel, I: int, J: int, method: str,
                       reps: int, rng: np.random.Generator,
                       tables: LadderTables | None = None,
                       face: str = "tilt") -> GammaBatch:
    """Draw ``reps`` truncated (Sigma1, Sigma2, gamma) realizations.

    Sigma1 sums mu*_{i+1} e^{-S*_i} and Sigma2 sums zeta*_i e^{-S*_i}
    over i in [-I, I-1], with zeta proxies at martingale depth J.
    """
    if J < 1:
        raise ValueError("J must be >= 1")
    env = sample_two_sided_batch(model, I, method, reps, rng, tables,
                                 pos_extra=J, face=face)
    pos, neg = series_terms(env, I)
    sigma1 = pos.sum(axis=1) + neg.sum(axis=1)
    sigma2 = np.zeros(reps)
    for i in range(-I, I):
        zl = _zeta_log_batch(env, i, J, rng)
        sigma2 += np.where(np.isfinite(zl), np.exp(zl - env.s_star(i)), 0.0)
    return GammaBatch(sigma1=sigma1, sigma2=sigma2, gamma=sigma2 / sigma1,
                      trunc_i=I, trunc_j=J, method=method)


def sample_gamma(model: EnvironmentModel, I: int, J: int, method: str,
                 rng: np.random.Generator,
                 tables: LadderTables | None = None) -> GammaSample:
    """One gamma realization (internally batched for the resampling face)."""
    batch = sample_gamma_batch(model, I, J, method, 64, rng, tables,
                               face="tilt" if tables is not None else "conditional")
    return GammaSample(sigma1=float(batch.sigma1[0]), sigma2=float(batch.sigma2[0]),
                       gamma=float(batch.gamma[0]), trunc_i=I, trunc_j=J,
                       method=method)


@dataclass(frozen=True)
class LimitFdd:
    """One finite-dimensional draw of the limit process."""

    ts: np.ndarray
    y: np.ndarray
    gammas: np.ndarray
    level_changed: np.ndarray


def _fdd_from_levels(levels: np.ndarray, gammas: np.ndarray):
    """Map per-time levels (reps x m) and gamma pools (reps x m) to values.

    The first coordinate takes the first gamma; each strict level
    decrease advances to the next unused gamma.
    """
    changed = levels[:, 1:] < levels[:, :-1]
    idx = np.concatenate([np.zeros((len(levels), 1), dtype=int),
                          np.cumsum(changed, axis=1)], axis=1)
    y = np.take_along_axis(gammas, idx, axis=1)
    return y, changed


def sample_limit_fdd_batch(ts, model: EnvironmentModel, I: int, J: int,
                           delta: float | None, reps: int,
                           rng: np.random.Generator,
                           tables: LadderTables | None = None,
                           gamma_pool: np.ndarray | None = None,
                           method: str = "rejection"):
    """Draw ``reps`` finite-dimensional vectors of the limit process.

    The Lévy path (level source) and the gamma stream are independent:
    they must be fed from distinct random streams by the caller or drawn
    here from one stream in a fixed order (path first, gammas second).
    ``gamma_pool`` may supply pre-drawn gamma variates (at least reps * m,
    consumed row-wise without reuse).
    """
    ts = np.asarray(ts, dtype=float)
    if len(ts) < 1 or np.any(np.diff(ts) <= 0) or ts[0] <= 0:
        raise ValueError("need strictly increasing positive times")
    m = len(ts)
    if delta is None:
        delta = 1e-3 * ts[-1]
    n_grid = int(np.ceil(ts[-1] / delta))
    g_idx = np.minimum((np.ceil(ts / delta - 1e-9)).astype(int), n_grid)

    check_stable_params(model.alpha, model.rho)
    levels = np.empty((reps, m))
    chunk = max(1, int(2e7 // max(n_grid, 1)))
    done = 0
    while done < reps:
        b = min(chunk, reps - done)
        inc = delta ** (1.0 / model.alpha) * stable_standard(
            model.alpha, model.rho, (b, n_grid), rng)
        w = np.cumsum(inc, axis=1)
        run = np.minimum.accumulate(w, axis=1)
        run = np.minimum(run, 0.0)  # W(0) = 0 participates in the infimum
        levels[done:done + b] = run[:, g_idx - 1]
        done += b

    if gamma_pool is None:
        gamma_pool = sample_gamma_batch(model, I, J, method, reps * m, rng,
                                        tables).gamma
    if len(gamma_pool) < reps * m:
        raise ValueError("gamma pool too small")
    gammas = np.asarray(gamma_pool[: reps * m]).reshape(reps, m)
    y, changed = _fdd_from_levels(levels, gammas)
    return y, changed, gammas


def sample_limit_fdd(ts, model: EnvironmentModel, I: int, J: int,
                     delta: float | None, rng: np.random.Generator,
                     tables: LadderTables | None = None,
                     gamma_pool: np.ndarray | None = None) -> LimitFdd:
    """One finite-dimensional draw of the limit process."""
    y, changed, gammas = sample_limit_fdd_batch(
        ts, model, I, J, delta, 1, rng, tables, gamma_pool)
    return LimitFdd(ts=np.asarray(ts, dtype=float), y=y[0],
                    gammas=gammas[0], level_changed=changed[0])


def export_gamma_csv(batch: GammaBatch, path: str) -> None:
    """Write a gamma batch as CSV with sampler settings in the header."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# trunc_i = {batch.trunc_i}\n")
        fh.write(f"# trunc_j = {batch.trunc_j}\n")
        fh.write(f"# method = {batch.method}\n")
        fh.write("sigma1,sigma2,gamma\n")
        for s1, s2, g in zip(batch.sigma1, batch.sigma2, batch.gamma):
            fh.write(f"{float(s1)!r},{float(s2)!r},{float(g)!r}\n")


def export_fdd_csv(ts, y: np.ndarray, changed: np.ndarray, path: str,
                   settings: dict | None = None) -> None:
    """Write finite-dimensional draws as CSV, one replica per row."""
    ts = np.asarray(ts, dtype=float)
    with open(path, "w", encoding="utf-8") as fh:
        for key, val in sorted((settings or {}).items()):
            fh.write(f"# {key} = {val}\n")
        fh.write(f"# t_values = {ts.tolist()}\n")
        cols = [f"y{k+1}" for k in range(y.shape[1])]
        cols += [f"changed{k+1}{k+2}" for k in range(changed.shape[1])]
        fh.write(",".join(cols) + "\n")
        for row in range(y.shape[0]):
            vals = [repr(float(v)) for v in y[row]]
            vals += [str(int(c)) for c in changed[row]]
            fh.write(",".join(vals) + "\n")


def estimate_level_change_prob(alpha: float, rho: float, t1: float, t2: float,
                               delta: float, reps: int,
                               rng: np.random.Generator) -> float:
    """Fraction of Lévy paths whose level strictly decreases on (t1, t2]."""
    n_grid = int(np.ceil(t2 / delta))
    i1 = int(np.ceil(t1 / delta - 1e-9))
    count = 0
    chunk = max(1, int(2e7 // n_grid))
    done = 0
    while done < reps:
        b = min(chunk, reps - done)
        inc = delta ** (1.0 / alpha) * stable_standard(alpha, rho, (b, n_grid), rng)
        w = np.cumsum(inc, axis=1)
        l1 = np.minimum(w[:, :i1].min(axis=1), 0.0)
        l2 = w[:, i1:].min(axis=1)
        count += int((l2 < l1).sum())
        done += b
    return count / reps
