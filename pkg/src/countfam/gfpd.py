"""Generalized fractional Poisson family of count distributions.

The family is indexed by (alpha, beta, delta, mu) and driven by the
three-parameter Mittag-Leffler function at negative argument; the classical
fractional law is the beta = delta = 1 slice, with the standard Poisson at
alpha = 1 and a geometric law in the alpha -> 0 limit.

Probabilities come from three routes that cross-check each other:

* the defining series (log-space, compensated, cancellation-guarded), with a
  transparent high-precision re-summation for parameter corners where float64
  loses the race against alternation;
* a positive-integrand mixture quadrature over the inverse-stable density
  (classical fractional case), immune to cancellation and cheap enough for
  grid fitting;
* Monte Carlo over one-sided stable variates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath as mp
import numpy as np
from scipy import special as sc
from scipy.integrate import quad

from .errors import CancellationError, ConvergenceError, DomainError, EvaluationError
from .moments import FactorialMomentSequence, SummaryStats, skewness_from_factorial
from .special import MAX_DPS, m_wright, prabhakar_ml, wright_phi

# Above this log-magnitude of the largest series term, a float64 row of the
# pmf table is recomputed in high precision (absolute noise ~ e^6 * 1e-15).
_F64_MAXLOG = 6.0
_TAIL_TOL = 1e-14
_TAIL_RUN = 10


@dataclass(frozen=True)
class GfpdParams:
    """Parameters (alpha, beta, delta, mu) of the generalized fractional Poisson law.

    alpha, beta in (0, 1], delta in (0, beta/alpha], mu > 0.  The alpha -> 0
    geometric limit sits outside the open parameter box and is admitted only
    through the explicit ``geometric_limit`` flag (with beta = delta = 1).
    """

    alpha: float
    beta: float = 1.0
    delta: float = 1.0
    mu: float = 1.0
    geometric_limit: bool = False

    def __post_init__(self):
        a, b, d, u = self.alpha, self.beta, self.delta, self.mu
        if not all(math.isfinite(v) for v in (a, b, d, u)):
            raise DomainError("parameters must be finite")
        if not u > 0:
            raise DomainError(f"mu must be > 0, got {u}")
        if self.geometric_limit:
            if a != 0.0 or b != 1.0 or d != 1.0:
                raise DomainError(
                    "geometric_limit requires alpha = 0 and beta = delta = 1"
                )
            return
        if not (0.0 < a <= 1.0):
            raise DomainError(f"alpha must lie in (0, 1], got {a}")
        if not (0.0 < b <= 1.0):
            raise DomainError(f"beta must lie in (0, 1], got {b}")
        if not (0.0 < d <= b / a * (1.0 + 1e-12)):
            raise DomainError(f"delta must lie in (0, beta/alpha], got {d}")

    @classmethod
    def fpd(cls, alpha: float, mu: float) -> "GfpdParams":
        """Classical fractional law (beta = delta = 1); alpha = 0 gives the geometric limit."""
        if alpha == 0.0:
            return cls(0.0, 1.0, 1.0, mu, geometric_limit=True)
        return cls(alpha, 1.0, 1.0, mu)

    @classmethod
    def aa1(cls, alpha: float, mu: float) -> "GfpdParams":
        """The (alpha, alpha, 1, mu) slice."""
        return cls(alpha, alpha, 1.0, mu)

    @property
    def is_fpd(self) -> bool:
        return self.beta == 1.0 and self.delta == 1.0


# ---------------------------------------------------------------------------
# series engines
# ---------------------------------------------------------------------------

def _row_logmag(p: GfpdParams, xs: np.ndarray, js: np.ndarray) -> np.ndarray:
    """log |T_{x,j}| of the full pmf series term, shape (len(xs), len(js))."""
    a, b, d, u = p.alpha, p.beta, p.delta, p.mu
    m = xs[:, None] + js[None, :]
    return (
        sc.gammaln(b)
        + sc.gammaln(d + m)
        - sc.gammaln(d)
        - sc.gammaln(xs + 1.0)[:, None]
        - sc.gammaln(js + 1.0)[None, :]
        + m * math.log(u)
        - sc.gammaln(a * m + b)
    )


def _rows_f64(p: GfpdParams, xs: np.ndarray, jcap: int):
    """Float64 series sums per x. Returns (pmf, maxlog, decayed)."""
    js = np.arange(jcap, dtype=float)
    logmag = _row_logmag(p, xs.astype(float), js)
    signs = np.where(js.astype(int) % 2 == 0, 1.0, -1.0)
    maxlog = logmag.max(axis=1)
    pk = logmag.argmax(axis=1)
    decayed = (logmag[:, -1] < maxlog - 46.0) & (pk < jcap - 1)
    shifted = np.exp(np.clip(logmag - maxlog[:, None], -746.0, 0.0)) * signs[None, :]
    sums = np.array([math.fsum(row) for row in shifted])
    pmf = np.exp(np.clip(maxlog, -746.0, 700.0)) * sums
    pmf[maxlog < -745.0] = 0.0
    return pmf, maxlog, decayed


# per-(alpha, beta, dps) arrays of high-precision log-gamma values and
# consecutive gamma ratios, grown on demand
_MP_GAMMA_CACHE: dict = {}


def _mp_gamma_arrays(alpha: float, beta: float, dps: int, mtot: int):
    key = (alpha, beta, dps)
    ent = _MP_GAMMA_CACHE.get(key)
    with mp.workdps(dps):
        a = mp.mpf(alpha)
        b = mp.mpf(beta)
        if ent is None:
            ent = {"lgA": [], "RA": []}
            _MP_GAMMA_CACHE[key] = ent
        lgA, RA = ent["lgA"], ent["RA"]
        for k in range(len(lgA), mtot + 2):
            lgA.append(mp.loggamma(a * k + b))
        for k in range(len(RA), mtot + 1):
            RA.append(mp.exp(lgA[k] - lgA[k + 1]))
    return ent["lgA"], ent["RA"]


def _rows_mp(p: GfpdParams, xs, jend, dps: int) -> np.ndarray:
    """High-precision per-x series sums; ``jend[i]`` terms after the zeroth."""
    a, b, d, u = p.alpha, p.beta, p.delta, p.mu
    mtot = int(max(x + je for x, je in zip(xs, jend)))
    lgA, RA = _mp_gamma_arrays(a, b, dps, mtot)
    out = np.zeros(len(xs))
    with mp.workdps(dps):
        dd = mp.mpf(d)
        uu = mp.mpf(u)
        logu = mp.log(uu)
        lgb = mp.loggamma(mp.mpf(b))
        lgd = mp.loggamma(dd)
        for i, x in enumerate(xs):
            x = int(x)
            t = mp.exp(lgb + mp.loggamma(dd + x) - lgd - mp.loggamma(x + 1) + x * logu - lgA[x])
            acc = t
            for j in range(int(jend[i])):
                t = -t * ((dd + x + j) * uu / (j + 1)) * RA[x + j]
                acc += t
            out[i] = float(acc)
    return out


def _mp_plan(p: GfpdParams, xs, probe_cap=60_000):
    """Size the high-precision pass: per-x term counts and working digits."""
    jcap = 2048
    while True:
        logmag = _row_logmag(p, np.asarray(xs, dtype=float), np.arange(jcap, dtype=float))
        maxlog = logmag.max(axis=1)
        pk = logmag.argmax(axis=1)
        done = (logmag[:, -1] < -45.0) & (pk < jcap - 1)
        if done.all() or jcap >= probe_cap:
            break
        jcap *= 2
    if not done.all():
        raise EvaluationError(
            "pmf series needs too many terms even in high precision; "
            "use the Monte Carlo representation"
        )
    jend = np.empty(len(xs), dtype=int)
    dps = np.empty(len(xs), dtype=int)
    for i in range(len(xs)):
        below = np.nonzero(logmag[i, pk[i]:] < -45.0)[0]
        jend[i] = int(pk[i]) + int(below[0])
        # bucket the per-row precision so rows and table chunks share the
        # cached gamma arrays
        need = int(max(maxlog[i], 0.0) / math.log(10)) + 30
        dps[i] = 64 * math.ceil(need / 64)
    if dps.max() > MAX_DPS:
        raise EvaluationError(
            f"pmf series would need ~{dps.max()} digits to survive cancellation; "
            "use the Monte Carlo representation"
        )
    return jend, dps


def _pmf_rows(p: GfpdParams, xs: np.ndarray, method: str = "auto") -> np.ndarray:
    """pmf at the given x values via series, escalating precision per row."""
    xs = np.asarray(xs, dtype=int)
    pmf, maxlog, decayed = _rows_f64(p, xs, 1024)
    # rows over the precision threshold go to high precision regardless, so
    # only rows that merely need more terms get the longer float64 sweep
    retry = (~decayed) & (maxlog <= _F64_MAXLOG)
    if retry.any():
        pmf2, maxlog2, decayed2 = _rows_f64(p, xs[retry], 8192)
        pmf[retry], maxlog[retry] = pmf2, maxlog2
        dec = decayed.copy()
        dec[np.nonzero(retry)[0][decayed2]] = True
        decayed = dec
    # a float64 row is kept only when its cancellation noise floor
    # (~1e-14 times the largest term) sits at least 1e8 below the value,
    # otherwise moment-grade accuracy is lost in the deep tail
    noise = np.exp(np.clip(maxlog, -700.0, 700.0) - 32.2)
    hostile = (~decayed) | (maxlog > _F64_MAXLOG) | (pmf < noise * 1e8)
    if hostile.any():
        if method == "series":
            raise CancellationError(
                "pmf series is cancellation-dominated in float64 at x = "
                f"{xs[hostile].tolist()}; use method='auto' or the Monte Carlo path"
            )
        xh = xs[hostile]
        jend, dps = _mp_plan(p, xh)
        vals = np.empty(len(xh))
        for d in np.unique(dps):
            grp = dps == d
            vals[grp] = _rows_mp(p, xh[grp], jend[grp], int(d))
        pmf[hostile] = vals
    return np.clip(pmf, 0.0, 1.0)


# ---------------------------------------------------------------------------
# public pmf / cdf
# ---------------------------------------------------------------------------

def gfpd_pmf(p: GfpdParams, x: int, method: str = "auto") -> float:
    """P(X = x) for the generalized fractional Poisson law.

    ``method='series'`` refuses (raises) when float64 cancellation would
    corrupt the answer; the default transparently re-sums those rows in high
    precision.  At alpha = 1 (with beta = delta = 1) this is the Poisson law,
    and the geometric-limit flag gives the geometric law exactly.
    """
    if x < 0 or x != int(x):
        raise DomainError(f"x must be a non-negative integer, got {x!r}")
    x = int(x)
    if p.geometric_limit:
        q = p.mu / (1.0 + p.mu)
        return math.exp(math.log1p(-q) + x * math.log(q)) if q > 0 else (1.0 if x == 0 else 0.0)
    if p.alpha == 1.0:
        if p.is_fpd:
            return math.exp(-p.mu + x * math.log(p.mu) - math.lgamma(x + 1))
        # alpha = 1 collapses to a confluent-hypergeometric (Kummer) weighting
        lognum = (
            math.lgamma(p.beta)
            + math.lgamma(p.delta + x)
            - math.lgamma(p.delta)
            - math.lgamma(x + 1)
            + x * math.log(p.mu)
            - math.lgamma(x + p.beta)
        )
        m = float(sc.hyp1f1(p.delta + x, x + p.beta, -p.mu))
        return float(np.clip(math.exp(lognum) * m, 0.0, 1.0))
    return float(_pmf_rows(p, np.array([x]), method=method)[0])


_TABLE_CACHE: dict = {}


def gfpd_pmf_table(
    p: GfpdParams,
    x_max: int | None = None,
    method: str = "auto",
    tail_tol: float = _TAIL_TOL,
    tail_run: int = _TAIL_RUN,
) -> np.ndarray:
    """pmf on 0..x_max as a read-only array (tables are cached per parameter set).

    With ``x_max=None`` the support is extended adaptively until the pmf has
    stayed below ``tail_tol`` for ``tail_run`` consecutive points.
    """
    key = (p, x_max, method, tail_tol, tail_run)
    hit = _TABLE_CACHE.get(key)
    if hit is not None:
        return hit
    table = _build_pmf_table(p, x_max, method, tail_tol, tail_run)
    table.setflags(write=False)
    if len(_TABLE_CACHE) > 1024:
        _TABLE_CACHE.clear()
    _TABLE_CACHE[key] = table
    return table


def _build_pmf_table(p, x_max, method, tail_tol, tail_run) -> np.ndarray:
    if p.geometric_limit or p.alpha == 1.0:
        evaluate = lambda xs: np.array([gfpd_pmf(p, int(x)) for x in xs])
    elif method == "auto" and abs(p.beta - p.alpha * p.delta) < 1e-12:
        # the Wright density factor collapses onto the inverse-stable density
        # when beta = alpha delta, giving a cancellation-free positive
        # quadrature for the whole table
        pref = math.gamma(p.beta) * p.alpha / math.gamma(p.delta)
        evaluate = lambda xs: pref * _mixture_pmf(
            p.alpha, p.mu, xs, y_power=p.delta, n_panels=4, n_nodes=80
        )
    else:
        evaluate = lambda xs: _pmf_rows(p, xs, method=method)
    try:
        return _run_adaptive(evaluate, x_max, tail_tol, tail_run)
    except EvaluationError:
        if method == "auto" and p.is_fpd and 0.0 < p.alpha < 1.0:
            # series route infeasible even in high precision (small alpha,
            # larger mu): the positive mixture quadrature still applies
            ev = lambda xs: fpd_pmf_quadrature(p.alpha, p.mu, xs)
            return _run_adaptive(ev, x_max, tail_tol, tail_run)
        raise


def _run_adaptive(evaluate, x_max, tail_tol, tail_run) -> np.ndarray:
    if x_max is not None:
        return evaluate(np.arange(int(x_max) + 1))
    chunks = []
    start = 0
    run = 0
    size = 64
    while start < 100_000:
        xs = np.arange(start, start + size)
        vals = evaluate(xs)
        for v in vals:
            run = run + 1 if v < tail_tol else 0
        chunks.append(vals)
        if run >= tail_run:
            break
        start += size
        size = min(2 * size, 1024)
    return np.concatenate(chunks)


def fpd_pmf(alpha: float, mu: float, x: int, method: str = "auto") -> float:
    """Classical fractional-Poisson pmf; alpha = 0 is the geometric limit."""
    return gfpd_pmf(GfpdParams.fpd(alpha, mu), x, method=method)


def fpd_cdf(alpha: float, mu: float, x: int) -> float:
    """P(X <= x) for the classical fractional law, by pmf summation."""
    if x < 0:
        return 0.0
    p = GfpdParams.fpd(alpha, mu)
    table = gfpd_pmf_table(p, x_max=int(x))
    return float(min(table.sum(), 1.0))


def fpd_cdf_series(alpha: float, mu: float, x: int, max_terms: int = 500) -> float:
    """Inverse-power-of-mu series representation of the fractional CDF.

    This is an asymptotic-type expansion summed to its smallest term.  It is
    a secondary representation only: it is known to disagree with pmf
    summation outside a poorly characterised regime, so callers must
    cross-validate against :func:`fpd_cdf` before trusting it.
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError("fpd_cdf_series requires alpha in (0, 1)")
    if x < 0:
        raise DomainError("x must be >= 0")
    if x == 0:
        # the indicator in the series form excludes x = 0
        return fpd_pmf(alpha, mu, 0)
    terms = []
    best = math.inf
    logmu = math.log(mu)
    for r in range(max_terms):
        rg = float(sc.rgamma(1.0 - alpha * (r + 1)))
        c = math.comb(x + r - 1, x) if r >= 1 else 0
        t = c * (-1.0) ** r * math.exp(-(r + 1) * logmu) * rg
        mag = abs(t)
        if r >= 2 and mag > best and best < math.inf:
            break
        terms.append(t)
        if mag > 0:
            best = min(best, mag)
    total = math.fsum(terms)
    if not (best <= 1e-6 * max(abs(total), 1e-12)):
        raise ConvergenceError(
            "inverse-mu CDF series did not reach a small enough term; "
            "use pmf summation (fpd_cdf) instead"
        )
    return total


# ---------------------------------------------------------------------------
# Monte Carlo / quadrature representations
# ---------------------------------------------------------------------------

def gfpd_pmf_mc(p: GfpdParams, x: int, n: int, rng) -> tuple[float, float]:
    """Independent pmf estimate with its standard error.

    For the classical slice (beta = delta = 1) this is the unbiased Monte
    Carlo average of exp(-mu Y) (mu Y)^x / x! over inverse-stable variates
    Y; for general parameters the mixture integral over the Wright density
    factor is evaluated by adaptive quadrature (the reported error is then
    the quadrature error estimate).
    """
    from .sampling import sample_stable

    if x < 0:
        raise DomainError("x must be >= 0")
    if p.geometric_limit or p.alpha == 1.0:
        # degenerate mixing variable: the estimate is the exact pmf
        return gfpd_pmf(p, x), 0.0
    if p.is_fpd:
        if n < 1:
            raise DomainError("n must be >= 1")
        s = sample_stable(p.alpha, n, rng)
        y = s ** (-p.alpha)
        logv = x * (math.log(p.mu) + np.log(y)) - p.mu * y - math.lgamma(x + 1)
        v = np.exp(logv)
        est = float(v.mean())
        se = float(v.std(ddof=1) / math.sqrt(n)) if n > 1 else math.inf
        return est, se
    # general parameters: mixture over the Wright density factor.  The
    # density decays like a stretched exponential, so the integral is cut at
    # the point where its tail bound is far below any usable tolerance.
    a, b, d, u = p.alpha, p.beta, p.delta, p.mu
    omega = b - a * d
    lpref = math.lgamma(b) - math.lgamma(d) - math.lgamma(x + 1) + x * math.log(u)
    c = (1.0 - a) * a ** (a / (1.0 - a))
    y_hi = max((46.0 / c) ** (1.0 - a), 3.0 * (x + 10) / u, 4.0)

    def integrand(y):
        if y <= 0.0 or y >= y_hi:
            return 0.0
        try:
            w = wright_phi(-a, omega, -y).value
        except EvaluationError:
            # beyond float64+guard reach the density is negligible here
            return 0.0
        return math.exp(lpref - u * y + (d + x - 1.0) * math.log(y)) * w

    val, err = quad(integrand, 0.0, y_hi, limit=400)
    return float(val), float(err)


def gfpd_aa1_pmf(
    alpha: float, mu: float, x: int, n: int = 0, rng=None, method: str = "auto"
) -> float:
    """pmf of the (alpha, alpha, 1, mu) member.

    Series evaluation when it is stable; with ``n`` and ``rng`` given, falls
    back to the stable-expectation Monte Carlo form
    Gamma(alpha+1) mu^x / x! E[S^(-alpha(x+1)) e^(-mu S^(-alpha))].
    """
    from .sampling import sample_stable

    if not (0.0 < alpha <= 1.0):
        raise DomainError("alpha must lie in (0, 1]")
    try:
        return gfpd_pmf(GfpdParams.aa1(alpha, mu), x, method=method)
    except EvaluationError:
        if n < 1 or rng is None:
            raise
    s = sample_stable(alpha, n, rng)
    logv = -alpha * (x + 1) * np.log(s) - mu * s ** (-alpha)
    v = np.exp(logv)
    lpref = math.lgamma(alpha + 1.0) + x * math.log(mu) - math.lgamma(x + 1)
    return float(math.exp(lpref) * v.mean())


def fpd_pmf_quadrature(alpha: float, mu: float, xs, n_panels: int = 4, n_nodes: int = 80) -> np.ndarray:
    """Classical fractional pmf on an array of x values by mixture quadrature.

    Positive integrand (Poisson kernel times the inverse-stable density), so
    there is no cancellation at any parameter point; used as the workhorse of
    grid fitting and as an independent cross-check on the series.
    """
    return _mixture_pmf(alpha, mu, xs, y_power=0, n_panels=n_panels, n_nodes=n_nodes)


def aa1_pmf_quadrature(alpha: float, mu: float, xs, n_panels: int = 4, n_nodes: int = 80) -> np.ndarray:
    """(alpha, alpha, 1) pmf by mixture quadrature.

    The mixing density is Gamma(alpha + 1) y times the inverse-stable
    density, which integrates to one.
    """
    return math.gamma(alpha + 1.0) * _mixture_pmf(
        alpha, mu, xs, y_power=1, n_panels=n_panels, n_nodes=n_nodes
    )


def _mixture_pmf(alpha, mu, xs, y_power, n_panels, n_nodes):
    if not (0.0 < alpha < 1.0):
        raise DomainError("mixture quadrature requires alpha in (0, 1)")
    xs = np.asarray(xs, dtype=int)
    ys, wm = _mixture_nodes(alpha, mu, int(xs.max()), n_panels, n_nodes)
    logk = (
        xs[:, None] * np.log(mu * ys)[None, :]
        - mu * ys[None, :]
        - sc.gammaln(xs + 1.0)[:, None]
    )
    w = wm * ys**y_power if y_power else wm
    return np.exp(logk) @ w


_MIXTURE_CACHE: dict = {}


def _mixture_nodes(alpha, mu, x_max, n_panels, n_nodes):
    """Gauss-Legendre panels on the mixing variable with cached density values."""
    c = (1.0 - alpha) * alpha ** (alpha / (1.0 - alpha))
    y_hi = max((46.0 / c) ** (1.0 - alpha), 3.0 * (x_max + 10) / mu, 4.0)
    # quantize the cut-off so nearby (mu, x_max) requests share one node set
    y_hi = 1.3 ** math.ceil(math.log(y_hi) / math.log(1.3))
    key = (round(alpha, 12), round(y_hi, 6), n_panels, n_nodes)
    hit = _MIXTURE_CACHE.get(key)
    if hit is not None:
        return hit
    gx, gw = np.polynomial.legendre.leggauss(n_nodes)
    edges = np.concatenate([[0.0], np.geomspace(0.25, y_hi, n_panels)])
    ys, ws = [], []
    # cube-graded first panel: fractional powers y^delta in the mixing
    # weight have a cusp at 0 that plain Gauss-Legendre resolves poorly
    u = 0.5 * gx + 0.5
    ys.append(edges[1] * u**3)
    ws.append(edges[1] * 3.0 * u**2 * 0.5 * gw)
    for lo, hi in zip(edges[1:-1], edges[2:]):
        ys.append(0.5 * (hi - lo) * gx + 0.5 * (hi + lo))
        ws.append(0.5 * (hi - lo) * gw)
    ys = np.concatenate(ys)
    ws = np.concatenate(ws)
    my = np.array([m_wright(alpha, y) for y in ys])
    out = (ys, ws * my)
    if len(_MIXTURE_CACHE) > 512:
        _MIXTURE_CACHE.clear()
    _MIXTURE_CACHE[key] = out
    return out


# ---------------------------------------------------------------------------
# moments and shape
# ---------------------------------------------------------------------------

def gfpd_factorial_moments(p: GfpdParams, K: int) -> FactorialMomentSequence:
    """a_k = Gamma(beta) Gamma(delta+k) mu^k / (Gamma(alpha k + beta) Gamma(delta))."""
    if K < 0:
        raise DomainError("K must be >= 0")
    a = [1.0]
    for k in range(1, K + 1):
        logak = (
            math.lgamma(p.beta)
            + math.lgamma(p.delta + k)
            - math.lgamma(p.alpha * k + p.beta)
            - math.lgamma(p.delta)
            + k * math.log(p.mu)
        )
        if logak > 700.0:
            raise EvaluationError(f"factorial moment of order {k} overflows")
        a.append(math.exp(logak))
    return FactorialMomentSequence(tuple(a))


def gfpd_summary(p: GfpdParams) -> SummaryStats:
    """Mean, variance (closed forms), skewness and Fisher index."""
    a, b, d, u = p.alpha, p.beta, p.delta, p.mu
    gb = math.gamma(b)
    mean = gb * d * u / math.gamma(b + a)
    var = mean + gb * d * u * u * (
        (d + 1.0) / math.gamma(b + 2.0 * a) - gb * d / math.gamma(b + a) ** 2
    )
    fm = gfpd_factorial_moments(p, 3)
    skew = skewness_from_factorial(fm[1], fm[2], fm[3])
    return SummaryStats(mean, var, skew, var / mean)


def fpd_skewness(alpha: float, mu: float) -> float:
    """Skewness of the classical fractional law (closed form in gamma values)."""
    g1 = math.gamma(1.0 + alpha)
    g2 = math.gamma(1.0 + 2.0 * alpha)
    g3 = math.gamma(1.0 + 3.0 * alpha)
    num = (
        1.0 / (mu * mu * g1)
        + 6.0 / (mu * g2)
        + 6.0 / g3
        - 3.0 / (mu * g1 * g1)
        - 6.0 / (g1 * g2)
        + 2.0 / g1**3
    )
    den = (1.0 / (mu * g1) + 2.0 / g2 - 1.0 / (g1 * g1)) ** 1.5
    return num / den


def fpd_skewness_limit(alpha: float, case: str = "fpd") -> float:
    """Large-mu limit of the skewness; vanishes at alpha = 1 (Poisson-like).

    ``case='fpd'`` is the classical slice, ``case='aa1'`` the
    (alpha, alpha, 1) member.  Both are the limits of the cumulant ratio
    built from the leading factorial-moment coefficients A_k = a_k / mu^k:
    (A3 - 3 A1 A2 + 2 A1^3) / (A2 - A1^2)^(3/2), which is 0/0 at exactly
    alpha = 1 with limiting value 0.
    """
    if not (0.0 < alpha <= 1.0):
        raise DomainError("alpha must lie in (0, 1]")
    if alpha == 1.0:
        return 0.0
    if case == "fpd":
        a1 = 1.0 / math.gamma(1.0 + alpha)
        a2 = 2.0 / math.gamma(1.0 + 2.0 * alpha)
        a3 = 6.0 / math.gamma(1.0 + 3.0 * alpha)
    elif case == "aa1":
        g = math.gamma(alpha)
        a1 = g / math.gamma(2.0 * alpha)
        a2 = 2.0 * g / math.gamma(3.0 * alpha)
        a3 = 6.0 * g / math.gamma(4.0 * alpha)
    else:
        raise DomainError(f"unknown case {case!r}")
    return (a3 - 3.0 * a1 * a2 + 2.0 * a1**3) / (a2 - a1 * a1) ** 1.5


def overdispersion_delta_bound(alpha: float, beta: float) -> float:
    """Largest delta for which overdispersion is guaranteed by the moment bound.

    Always exceeds beta/alpha on (0, 1]^2, which is why the whole family is
    overdispersed.
    """
    if not (0.0 < alpha <= 1.0 and 0.0 < beta <= 1.0):
        raise DomainError("alpha, beta must lie in (0, 1]")

    def log_beta_fn(x, y):
        return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)

    b1 = math.exp(log_beta_fn(alpha + beta, alpha))
    b0 = math.exp(log_beta_fn(beta, alpha))
    return b1 / (b0 - b1)
