"""Linear estimation core for sentiment-coefficient inference.

Mean side: OLS with Newey-West standard errors, cyclic coordinate
descent lasso with a plug-in penalty, and post-double-selection
inference for a single regressor of interest.  Quantile side: exact
check-loss minimization via linear programming, its penalized variant,
and density-weighted double selection.

Everything is deterministic given the inputs; no RNG is consumed here.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats
from scipy.optimize import linprog

log = logging.getLogger(__name__)


class EstimationError(RuntimeError):
    """Raised on rank deficiency or solver non-convergence."""


@dataclass(frozen=True)
class CoefficientEstimate:
    name: str
    beta: float
    std_error: float
    t_stat: float
    p_value: float


@dataclass
class OlsFit:
    names: list[str]
    beta: np.ndarray
    cov: np.ndarray
    residuals: np.ndarray
    fitted: np.ndarray
    hac_lags: int

    def estimate(self, name: str) -> CoefficientEstimate:
        j = self.names.index(name)
        se = float(np.sqrt(self.cov[j, j]))
        b = float(self.beta[j])
        if se == 0.0:
            t = np.inf if b != 0.0 else 0.0
            p = 0.0 if b != 0.0 else 1.0
        else:
            t = b / se
            p = 2.0 * (1.0 - stats.norm.cdf(abs(t)))
        return CoefficientEstimate(name, b, se, float(t), float(p))

    def estimates(self) -> list[CoefficientEstimate]:
        return [self.estimate(n) for n in self.names]


@dataclass
class SelectionResult:
    stage1_selected: set[str]
    stage2_selected: set[str]
    union: set[str]
    estimate: CoefficientEstimate
    details: dict = field(default_factory=dict)


def hac_lag_default(n: int) -> int:
    """Bartlett truncation floor(4 (n/100)^(2/9))."""
    return int(np.floor(4.0 * (n / 100.0) ** (2.0 / 9.0)))


def newey_west_cov(X: np.ndarray, residuals: np.ndarray, lags: int) -> np.ndarray:
    """HAC covariance of OLS coefficients with Bartlett weights."""
    n = X.shape[0]
    scores = X * residuals[:, None]
    S = scores.T @ scores / n
    for j in range(1, lags + 1):
        w = 1.0 - j / (lags + 1.0)
        gamma = scores[j:].T @ scores[:-j] / n
        S += w * (gamma + gamma.T)
    xtx_inv = np.linalg.inv(X.T @ X / n)
    return xtx_inv @ S @ xtx_inv / n


def ols_hac(
    X: np.ndarray,
    y: np.ndarray,
    hac_lags: int | None = None,
    names: list[str] | None = None,
) -> OlsFit:
    """OLS of y on X (X includes any intercept column) with HAC errors."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if n <= p:
        raise EstimationError(f"need n > p, got n={n}, p={p}")
    if np.linalg.matrix_rank(X) < p:
        raise EstimationError("design matrix is rank deficient")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    fitted = X @ beta
    residuals = y - fitted
    lags = hac_lag_default(n) if hac_lags is None else int(hac_lags)
    cov = newey_west_cov(X, residuals, lags)
    # guard tiny negative diagonals from finite arithmetic
    d = np.diag(cov).copy()
    d[d < 0] = 0.0
    cov = cov.copy()
    np.fill_diagonal(cov, d)
    if names is None:
        names = [f"x{j}" for j in range(p)]
    return OlsFit(list(names), beta, cov, residuals, fitted, lags)


def soft_threshold(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


@dataclass
class LassoFit:
    intercept: float
    coef: np.ndarray  # original scale
    lam: float
    n_sweeps: int
    # solution on the standardized scale, for KKT checks
    coef_std: np.ndarray
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.intercept + X @ self.coef

    def selected(self) -> list[int]:
        return [j for j, b in enumerate(self.coef) if b != 0.0]


def lasso(
    X: np.ndarray,
    y: np.ndarray,
    lam: float,
    weights: np.ndarray | None = None,
    tol: float = 1e-7,
    max_sweeps: int = 100_000,
) -> LassoFit:
    """Cyclic coordinate descent for (1/2n) sum w (y - b0 - Xb)^2 + lam |b|_1.

    Columns are standardized internally (weighted mean 0, variance 1)
    and the intercept is unpenalized; coefficients are returned on the
    original scale.  Convergence is declared on the KKT conditions.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights, dtype=float)
        if np.any(w < 0):
            raise EstimationError("weights must be nonnegative")
        w = w * n / w.sum()
    if lam < 0:
        raise EstimationError("lambda must be nonnegative")

    x_mean = np.average(X, axis=0, weights=w) if p else np.zeros(0)
    y_mean = float(np.average(y, weights=w))
    Xc = X - x_mean
    x_scale = np.sqrt(np.average(Xc**2, axis=0, weights=w)) if p else np.zeros(0)
    live = x_scale > 0
    Xs = np.zeros_like(Xc)
    if p:
        Xs[:, live] = Xc[:, live] / x_scale[live]
    sw = np.sqrt(w)
    Xt = Xs * sw[:, None]
    yt = (y - y_mean) * sw

    b = np.zeros(p)
    if p == 0 or lam == 0.0 and p:
        if lam == 0.0 and p:
            sol, *_ = np.linalg.lstsq(Xt[:, live], yt, rcond=None)
            b[live] = sol
        coef = np.zeros(p)
        coef[live] = b[live] / x_scale[live]
        return LassoFit(
            intercept=y_mean - float(coef @ x_mean) if p else y_mean,
            coef=coef,
            lam=lam,
            n_sweeps=0,
            coef_std=b,
            x_mean=x_mean,
            x_scale=x_scale,
            y_mean=y_mean,
        )

    r = yt - Xt @ b
    col_idx = np.arange(p)[live]
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in col_idx:
            old = b[j]
            rho = (Xt[:, j] @ r) / n + old  # column norm is 1 by construction
            new = soft_threshold(rho, lam)
            if new != old:
                r += Xt[:, j] * (old - new)
                b[j] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta < tol:
            grad = Xt.T @ r / n
            ok = True
            for j in col_idx:
                if b[j] != 0.0:
                    if abs(grad[j] - lam * np.sign(b[j])) > 10 * tol:
                        ok = False
                        break
                elif abs(grad[j]) > lam + 10 * tol:
                    ok = False
                    break
            if ok:
                coef = np.zeros(p)
                coef[live] = b[live] / x_scale[live]
                return LassoFit(
                    intercept=y_mean - float(coef @ x_mean),
                    coef=coef,
                    lam=lam,
                    n_sweeps=sweep,
                    coef_std=b,
                    x_mean=x_mean,
                    x_scale=x_scale,
                    y_mean=y_mean,
                )
    raise EstimationError(f"lasso did not converge in {max_sweeps} sweeps")


def lasso_lambda_max(X: np.ndarray, y: np.ndarray,
                     weights: np.ndarray | None = None) -> float:
    """Smallest lambda with an all-zero slope solution."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    w = np.ones(n) if weights is None else np.asarray(weights) * n / np.sum(weights)
    x_mean = np.average(X, axis=0, weights=w)
    y_mean = np.average(y, weights=w)
    Xc = X - x_mean
    scale = np.sqrt(np.average(Xc**2, axis=0, weights=w))
    scale[scale == 0] = np.inf
    corr = (Xc / scale).T @ (w * (y - y_mean)) / n
    return float(np.max(np.abs(corr))) if corr.size else 0.0


def plugin_lambda_value(
    sigma: float, n: int, p: int, gamma: float = 0.05, c: float = 1.1
) -> float:
    """Plug-in penalty 2 c sigma Phi^-1(1 - gamma/(2p)) / sqrt(n)."""
    q = stats.norm.ppf(1.0 - gamma / (2.0 * max(p, 1)))
    return 2.0 * c * sigma * q / np.sqrt(n)


def plugin_lambda(
    X: np.ndarray,
    y: np.ndarray,
    gamma: float = 0.05,
    c: float = 1.1,
    refinements: int = 2,
    weights: np.ndarray | None = None,
) -> float:
    """Plug-in lambda with the noise level refined from lasso residuals."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    if weights is None:
        w = np.ones(n)
    else:
        w = np.asarray(weights) * n / np.sum(weights)
    y_mean = np.average(y, weights=w)
    sigma = float(np.sqrt(np.average((y - y_mean) ** 2, weights=w)))
    lam = plugin_lambda_value(sigma, n, p, gamma, c)
    for _ in range(refinements):
        fit = lasso(X, y, lam, weights=weights)
        resid = y - fit.predict(X)
        sigma = float(np.sqrt(np.average(resid**2, weights=w)))
        lam = plugin_lambda_value(sigma, n, p, gamma, c)
    return lam


def double_lasso(
    X: np.ndarray,
    y: np.ndarray,
    s: np.ndarray,
    names: list[str] | None = None,
    s_name: str = "S",
    hac_lags: int | None = None,
    gamma: float = 0.05,
) -> SelectionResult:
    """Post-double-selection inference on the coefficient of `s`.

    Two lasso selections (outcome on controls, regressor of interest on
    controls; `s` is never a selection candidate), then OLS of y on the
    intercept, s, and the union of selected controls with HAC errors.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.asarray(s, dtype=float)
    n, p = X.shape
    if names is None:
        names = [f"x{j}" for j in range(p)]

    if p > 0:
        fit_y = lasso(X, y, plugin_lambda(X, y, gamma=gamma))
        fit_s = lasso(X, s, plugin_lambda(X, s, gamma=gamma))
        sel1 = {names[j] for j in fit_y.selected()}
        sel2 = {names[j] for j in fit_s.selected()}
    else:
        sel1, sel2 = set(), set()
    union = sel1 | sel2
    keep = [j for j, nm in enumerate(names) if nm in union]

    Z = np.column_stack([np.ones(n), s] + [X[:, j] for j in keep])
    z_names = ["const", s_name] + [names[j] for j in keep]
    fit = ols_hac(Z, y, hac_lags=hac_lags, names=z_names)
    return SelectionResult(
        stage1_selected=sel1,
        stage2_selected=sel2,
        union=union,
        estimate=fit.estimate(s_name),
        details={"ols": fit},
    )


def check_loss(residuals: np.ndarray, tau: float,
               weights: np.ndarray | None = None) -> float:
    """Sum of pinball losses rho_tau(r) = r (tau - 1{r<0})."""
    r = np.asarray(residuals, dtype=float)
    rho = r * (tau - (r < 0))
    if weights is not None:
        rho = rho * weights
    return float(np.sum(rho))


def _qr_lp(
    X: np.ndarray,
    y: np.ndarray,
    tau: float,
    penalty: np.ndarray,
    weights: np.ndarray | None,
) -> np.ndarray:
    """Exact LP solve of sum_i w_i rho_tau(y - [1 X] b) + penalty' |b_slopes|."""
    n, p = X.shape
    A = np.column_stack([np.ones(n), X])
    k = p + 1
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    cost = np.concatenate(
        [
            np.concatenate([[0.0], penalty]),  # beta+
            np.concatenate([[0.0], penalty]),  # beta-
            tau * w,                           # u+
            (1.0 - tau) * w,                   # u-
        ]
    )
    A_eq = np.hstack([A, -A, np.eye(n), -np.eye(n)])
    res = linprog(cost, A_eq=A_eq, b_eq=y, bounds=(0, None),
                  method="highs-ipm")
    if not res.success:
        res = linprog(cost, A_eq=A_eq, b_eq=y, bounds=(0, None),
                      method="highs")
    if not res.success:
        raise EstimationError(f"quantile LP failed: {res.message}")
    z = res.x
    return z[:k] - z[k : 2 * k]


def qr_subgradient_gap(
    X: np.ndarray,
    y: np.ndarray,
    beta: np.ndarray,
    tau: float,
    penalty: np.ndarray | None = None,
    weights: np.ndarray | None = None,
) -> float:
    """Largest violation of the check-loss stationarity conditions.

    Zero-residual observations contribute any value in [tau-1, tau];
    the gap is the distance from the feasible subgradient interval.
    """
    n, p = X.shape
    A = np.column_stack([np.ones(n), X])
    w = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    if penalty is None:
        penalty = np.zeros(p)
    pen = np.concatenate([[0.0], penalty])
    r = y - A @ beta
    zero = np.abs(r) <= 1e-9 * max(1.0, float(np.max(np.abs(y))))
    psi = np.where(r < 0, tau - 1.0, tau)
    psi[zero] = 0.0
    base = A.T @ (w * psi)  # gradient of -loss wrt beta, up to sign
    worst = 0.0
    for j in range(p + 1):
        a = A[zero, j] * w[zero]
        lo = base[j] + np.sum(np.minimum(a * (tau - 1.0), a * tau))
        hi = base[j] + np.sum(np.maximum(a * (tau - 1.0), a * tau))
        if beta[j] != 0.0 or pen[j] == 0.0:
            # stationarity: sum w a psi must equal pen_j sign(beta_j)
            target = pen[j] * np.sign(beta[j]) if pen[j] else 0.0
            gap = max(lo - target, target - hi, 0.0)
        else:
            # inactive penalized column: [lo, hi] must meet [-pen, pen]
            gap = max(lo - pen[j], -pen[j] - hi, 0.0)
        worst = max(worst, gap)
    return float(worst)


def quantile_regression(
    X: np.ndarray,
    y: np.ndarray,
    tau: float,
    weights: np.ndarray | None = None,
) -> np.ndarray:
    """Exact tau-quantile regression of y on (intercept, X).

    Returns beta of length p+1 with the intercept first.  Optimality is
    verified against the subgradient condition within 1e-6 n.
    """
    if not 0.0 < tau < 1.0:
        raise EstimationError(f"tau must be in (0, 1), got {tau}")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    beta = _qr_lp(X, y, tau, np.zeros(p), weights)
    gap = qr_subgradient_gap(X, y, beta, tau, weights=weights)
    if gap > 1e-6 * n * max(1.0, float(np.max(np.abs(X), initial=1.0))):
        raise EstimationError(f"quantile solution fails optimality: gap={gap}")
    return beta


def penalized_qr(
    X: np.ndarray,
    y: np.ndarray,
    tau: float,
    lam: float,
    weights: np.ndarray | None = None,
    penalize: np.ndarray | None = None,
) -> np.ndarray:
    """L1-penalized quantile regression; the intercept is unpenalized.

    Per-column penalties are scaled by the column standard deviation so
    the solution is equivariant to regressor units.  `penalize` can
    exempt columns (e.g. the regressor of interest) from the penalty.
    """
    if not 0.0 < tau < 1.0:
        raise EstimationError(f"tau must be in (0, 1), got {tau}")
    if lam < 0:
        raise EstimationError("lambda must be nonnegative")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    pen = lam * scale
    if penalize is not None:
        pen = pen * np.asarray(penalize, dtype=float)
    beta = _qr_lp(X, y, tau, pen, weights)
    gap = qr_subgradient_gap(X, y, beta, tau, penalty=pen, weights=weights)
    if gap > 1e-6 * n * max(1.0, float(np.max(np.abs(X), initial=1.0))):
        raise EstimationError(f"penalized quantile fails optimality: gap={gap}")
    return beta


def qr_plugin_lambda(
    n: int, p: int, tau: float, gamma: float = 0.05, c: float = 1.1
) -> float:
    """Penalty level for the quantile lasso on standardized columns."""
    q = stats.norm.ppf(1.0 - gamma / (2.0 * max(p, 1)))
    return c * q * np.sqrt(tau * (1.0 - tau) * n)


def density_bandwidth(y: np.ndarray, tau: float, n: int) -> float:
    """Quantile-space bandwidth n^(-1/5) min(1, IQR spread), kept feasible."""
    iqr = float(np.subtract(*np.percentile(y, [75, 25])))
    h = n ** (-0.2) * min(1.0, iqr / 1.349) if iqr > 0 else n ** (-0.2)
    return float(min(h, 0.5 * min(tau, 1.0 - tau)))


def weighted_double_selection(
    X: np.ndarray,
    y: np.ndarray,
    s: np.ndarray,
    tau: float,
    bandwidth: float | None = None,
    names: list[str] | None = None,
    s_name: str = "S",
    gamma: float = 0.05,
    weight_clip: tuple[float, float] = (0.01, 100.0),
) -> SelectionResult:
    """Density-weighted double selection for a quantile coefficient.

    Steps: (1) penalized quantile regression of y on the controls and
    `s` (unpenalized) selects controls; (2) fitted quantiles at
    tau +/- h estimate the conditional error density at zero, giving
    weights; (3) a density-weighted lasso of s on the controls selects a
    second set; (4) weighted quantile regression on the union yields the
    estimate, with a weighted-sandwich standard error.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    s = np.asarray(s, dtype=float)
    n, p = X.shape
    if names is None:
        names = [f"x{j}" for j in range(p)]
    h_f = density_bandwidth(y, tau, n) if bandwidth is None else float(bandwidth)
    if not 0.0 < tau - h_f < tau + h_f < 1.0:
        raise EstimationError(f"bandwidth {h_f} infeasible at tau={tau}")

    Xs = np.column_stack([X, s]) if p else s[:, None]
    penalize = np.ones(p + 1)
    penalize[-1] = 0.0  # the regressor of interest is never penalized

    lam_qr = qr_plugin_lambda(n, max(p, 1), tau, gamma=gamma)
    beta_mid = penalized_qr(Xs, y, tau, lam_qr, penalize=penalize)
    sel1 = {names[j] for j in range(p) if beta_mid[1 + j] != 0.0}

    lam_hi = qr_plugin_lambda(n, max(p, 1), tau + h_f, gamma=gamma)
    lam_lo = qr_plugin_lambda(n, max(p, 1), tau - h_f, gamma=gamma)
    A = np.column_stack([np.ones(n), Xs])
    q_hi = A @ penalized_qr(Xs, y, tau + h_f, lam_hi, penalize=penalize)
    q_lo = A @ penalized_qr(Xs, y, tau - h_f, lam_lo, penalize=penalize)
    spread = q_hi - q_lo
    raw_weights = np.full(n, weight_clip[1])
    positive = spread > 0
    raw_weights[positive] = 2.0 * h_f / spread[positive]
    clipped = np.count_nonzero(
        (raw_weights <= weight_clip[0]) | (raw_weights >= weight_clip[1])
        | ~positive
    )
    if clipped:
        log.warning("density weights clipped for %d of %d observations",
                    clipped, n)
    f_hat = np.clip(raw_weights, weight_clip[0], weight_clip[1])

    if p > 0:
        lam_s = plugin_lambda(X, s, gamma=gamma, weights=f_hat)
        fit_s = lasso(X, s, lam_s, weights=f_hat)
        sel2 = {names[j] for j in fit_s.selected()}
    else:
        sel2 = set()
    union = sel1 | sel2
    keep = [j for j, nm in enumerate(names) if nm in union]

    Z = np.column_stack([s] + [X[:, j] for j in keep]) if keep else s[:, None]
    z_names = [s_name] + [names[j] for j in keep]
    beta = quantile_regression(Z, y, tau, weights=f_hat)

    Zfull = np.column_stack([np.ones(n), Z])
    Aw = (Zfull * (f_hat**2)[:, None]).T @ Zfull / n
    try:
        A_inv = np.linalg.inv(Aw)
    except np.linalg.LinAlgError as exc:
        raise EstimationError("weighted design is singular") from exc
    V = tau * (1.0 - tau) * A_inv / n
    j_s = 1  # position of s in (intercept, s, controls)
    se = float(np.sqrt(max(V[j_s, j_s], 0.0)))
    b = float(beta[j_s])
    t = b / se if se > 0 else (np.inf if b else 0.0)
    pval = 2.0 * (1.0 - stats.norm.cdf(abs(t)))
    estimate = CoefficientEstimate(s_name, b, se, float(t), float(pval))
    return SelectionResult(
        stage1_selected=sel1,
        stage2_selected=sel2,
        union=union,
        estimate=estimate,
        details={
            "beta": beta,
            "names": ["const"] + z_names,
            "weights": f_hat,
            "bandwidth": h_f,
            "clipped": int(clipped),
        },
    )
