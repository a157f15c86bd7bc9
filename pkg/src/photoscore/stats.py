"""Regression and test statistics: ordered (proportional-odds) logistic
regression, binary logistic regression with odds ratios and AIC, Pearson
chi-squared tests, Pearson correlation, stratified k-fold accuracy, and a
small model-formula parser.

Both regressions are fit by Newton-Raphson on the exact log-likelihood
with step halving. The ordinal model is parameterized as
logit P(y <= j | x) = theta_j - x.beta, so positive coefficients push
toward higher categories. Standard errors come from the inverse observed
information at the optimum; p-values are two-sided Wald.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, gammaincc

from .errors import FitError, FormulaError, PhotoscoreError

GRAD_TOL = 1e-8
MAX_ITER = 100


@dataclass
class DesignMatrix:
    columns: list[str]
    X: np.ndarray  # (n, d)
    y: np.ndarray  # (n,) integer response

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise ValueError("X must be (n, d) aligned with y")
        if len(self.columns) != self.X.shape[1]:
            raise ValueError("column names must match X columns")
        if not np.all(np.isfinite(self.X)):
            raise ValueError("design matrix contains absent or non-finite values")


@dataclass
class OrdinalFit:
    columns: list[str]
    beta: np.ndarray
    cutpoints: np.ndarray  # (theta_01, theta_12)
    se: np.ndarray  # aligned with [beta, cutpoints]
    loglik: float
    aic: float
    n: int
    converged: bool
    diagnostic: str = ""

    @property
    def p_values(self):
        params = np.concatenate([self.beta, self.cutpoints])
        return wald_p_values(params, self.se)


@dataclass
class LogisticFit:
    columns: list[str]  # includes "(Intercept)" first
    beta: np.ndarray
    se: np.ndarray
    loglik: float
    aic: float
    n: int
    converged: bool
    diagnostic: str = ""

    @property
    def odds_ratios(self):
        return np.exp(self.beta)

    @property
    def p_values(self):
        return wald_p_values(self.beta, self.se)


def wald_p_values(params, se):
    """Two-sided normal p-values for params/se; nan where se is not finite."""
    params = np.asarray(params, dtype=np.float64)
    se = np.asarray(se, dtype=np.float64)
    p = np.full(params.shape, np.nan)
    ok = np.isfinite(se) & (se > 0)
    z = np.abs(params[ok] / se[ok])
    p[ok] = np.array([math.erfc(v / math.sqrt(2.0)) for v in z])
    return p


def significance_stars(p):
    if not np.isfinite(p):
        return ""
    if p < 0.001:
        return "***"
    if p < 0.01:
        return "**"
    if p < 0.05:
        return "*"
    return ""


# ---------------------------------------------------------------------------
# Formula mini-grammar:  FORMULA := ident "~" TERM ("+" TERM)*
#                        TERM    := ident | "log(" ident ")"
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Formula:
    response: str
    terms: tuple  # of (variable, transform) with transform in {identity, log}


def parse_formula(text: str) -> Formula:
    pos = 0
    n = len(text)

    def skip_ws(p):
        while p < n and text[p].isspace():
            p += 1
        return p

    def read_ident(p):
        p = skip_ws(p)
        start = p
        if p < n and (text[p].isalpha() or text[p] == "_"):
            p += 1
            while p < n and (text[p].isalnum() or text[p] == "_"):
                p += 1
            return text[start:p], p
        raise FormulaError("expected identifier", offset=p)

    def expect(p, ch):
        p = skip_ws(p)
        if p < n and text[p] == ch:
            return p + 1
        raise FormulaError(f"expected {ch!r}", offset=p)

    response, pos = read_ident(pos)
    pos = expect(pos, "~")

    terms = []
    seen = set()
    while True:
        pos = skip_ws(pos)
        term_start = pos
        name, after = read_ident(pos)
        if name == "log":
            peek = skip_ws(after)
            if peek < n and text[peek] == "(":
                var, after = read_ident(peek + 1)
                after = expect(after, ")")
                name, transform = var, "log"
            else:
                transform = "identity"
        else:
            transform = "identity"
        if name == response:
            raise FormulaError(f"response {response!r} reused as term",
                               offset=term_start)
        if name in seen:
            raise FormulaError(f"duplicate term {name!r}", offset=term_start)
        seen.add(name)
        terms.append((name, transform))
        pos = skip_ws(after)
        if pos >= n:
            break
        if text[pos] != "+":
            raise FormulaError("expected '+'", offset=pos)
        pos += 1
    return Formula(response=response, terms=tuple(terms))


#: count-valued covariates transform as log(1 + x) so zeros stay defined;
#: everything else under log() must be strictly positive.
COUNT_COLUMNS = ("days", "views")


def evaluate_formula(formula: Formula, rows,
                     count_columns=COUNT_COLUMNS) -> DesignMatrix:
    """Build a DesignMatrix from a formula over a list of row mappings."""
    if not rows:
        raise PhotoscoreError("no rows to evaluate formula on")
    columns = []
    data = []
    for var, transform in formula.terms:
        try:
            values = np.array([float(r[var]) for r in rows], dtype=np.float64)
        except KeyError:
            raise PhotoscoreError(f"formula variable {var!r} missing from data")
        except (TypeError, ValueError):
            raise PhotoscoreError(f"formula variable {var!r} has non-numeric values")
        if transform == "log":
            if var in count_columns:
                if np.any(values < 0):
                    raise PhotoscoreError(f"log({var}): negative count values")
                values = np.log1p(values)
                columns.append(f"log1p({var})")
            else:
                if np.any(values <= 0):
                    raise PhotoscoreError(f"log({var}): values must be positive")
                values = np.log(values)
                columns.append(f"log({var})")
        else:
            columns.append(var)
        data.append(values)
    try:
        y = np.array([int(r[formula.response]) for r in rows], dtype=np.int64)
    except KeyError:
        raise PhotoscoreError(f"response {formula.response!r} missing from data")
    X = np.column_stack(data) if data else np.empty((len(rows), 0))
    return DesignMatrix(columns, X, y)


# ---------------------------------------------------------------------------
# Proportional-odds ordinal regression (3 classes)
# ---------------------------------------------------------------------------

def _ordinal_parts(w, X, y):
    """Log-likelihood, gradient and Hessian of the 3-class ordered logit.

    w = [beta (d), theta0, theta1]. Returns (loglik, grad, hess) with the
    Hessian of the log-likelihood (negative definite near the optimum).
    """
    d = X.shape[1]
    beta, th0, th1 = w[:d], w[d], w[d + 1]
    eta = X @ beta
    u0, u1, u2 = y == 0, y == 1, y == 2

    # a: upper cutpoint argument (inf for y=2); b: lower (-inf for y=0)
    a = np.where(u0, th0 - eta, th1 - eta)
    b = np.where(u2, th1 - eta, th0 - eta)
    Fa = np.where(u2, 1.0, expit(a))
    Fb = np.where(u0, 0.0, expit(b))
    fa = np.where(u2, 0.0, Fa * (1.0 - Fa))
    fb = np.where(u0, 0.0, Fb * (1.0 - Fb))
    fpa = fa * (1.0 - 2.0 * np.where(u2, 0.0, Fa))
    fpb = fb * (1.0 - 2.0 * np.where(u0, 0.0, Fb))

    L = Fa - Fb
    if np.any(L <= 0):
        return -np.inf, None, None
    loglik = float(np.sum(np.log(L)))

    ga, gb = fa / L, fb / L
    diff = ga - gb
    grad_beta = -X.T @ diff
    g0 = float(np.sum(u0 * ga - u1 * gb))
    g1 = float(np.sum(u1 * ga - u2 * gb))
    grad = np.concatenate([grad_beta, [g0, g1]])

    h_eta = (fpa - fpb) / L - diff ** 2
    H_bb = X.T @ (X * h_eta[:, None])
    Ca = -fpa / L + ga * diff  # upper-cutpoint cross term
    Cb = fpb / L - gb * diff   # lower-cutpoint cross term
    c0 = u0 * Ca + u1 * Cb
    c1 = u1 * Ca + u2 * Cb
    H_t0b = X.T @ c0
    H_t1b = X.T @ c1
    A = fpa / L - ga ** 2
    B = -fpb / L - gb ** 2
    H_00 = float(np.sum(u0 * A + u1 * B))
    H_11 = float(np.sum(u1 * A + u2 * B))
    H_01 = float(np.sum(u1 * ga * gb))

    hess = np.zeros((d + 2, d + 2))
    hess[:d, :d] = H_bb
    hess[:d, d] = hess[d, :d] = H_t0b
    hess[:d, d + 1] = hess[d + 1, :d] = H_t1b
    hess[d, d] = H_00
    hess[d + 1, d + 1] = H_11
    hess[d, d + 1] = hess[d + 1, d] = H_01
    return loglik, grad, hess


def fit_ordinal(dm: DesignMatrix) -> OrdinalFit:
    """Fit logit P(y <= j | x) = theta_j - x.beta for y in {0, 1, 2}."""
    X, y = dm.X, dm.y
    n, d = X.shape
    classes = np.unique(y)
    if not np.array_equal(classes, [0, 1, 2]):
        missing = sorted(set([0, 1, 2]) - set(classes.tolist()))
        raise FitError(f"ordinal fit needs all three classes; missing {missing}")
    k = d + 2
    if n <= k:
        raise FitError(f"need n > {k} observations for {d} predictors, got {n}")

    # Start at beta = 0, cutpoints at the empirical cumulative logits.
    p0 = float(np.mean(y == 0))
    p01 = float(np.mean(y <= 1))
    w = np.concatenate([np.zeros(d),
                        [math.log(p0 / (1 - p0)), math.log(p01 / (1 - p01))]])

    loglik, grad, hess = _ordinal_parts(w, X, y)
    converged = False
    diagnostic = ""
    for _ in range(MAX_ITER):
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            break
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            diagnostic = "singular information matrix (separation or collinearity)"
            break
        new_w = w - step
        new_ll, new_grad, new_hess = _ordinal_parts(new_w, X, y)
        halvings = 0
        while (not np.isfinite(new_ll) or new_ll < loglik
               or new_w[d] >= new_w[d + 1]) and halvings < 50:
            step *= 0.5
            new_w = w - step
            new_ll, new_grad, new_hess = _ordinal_parts(new_w, X, y)
            halvings += 1
        if halvings >= 50:
            diagnostic = "step halving failed to improve the likelihood"
            break
        w, loglik, grad, hess = new_w, new_ll, new_grad, new_hess
    else:
        diagnostic = f"no convergence in {MAX_ITER} iterations"
    if converged and np.max(np.abs(grad)) >= GRAD_TOL:
        converged = False
    if converged and loglik > -1e-6:
        converged = False
        diagnostic = "perfect separation: likelihood at the boundary"

    info = -hess  # observed information
    try:
        cov = np.linalg.inv(info)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se = np.full(k, np.nan)
        converged = False
        diagnostic = diagnostic or "singular information matrix at optimum"
    return OrdinalFit(
        columns=list(dm.columns), beta=w[:d], cutpoints=w[d:],
        se=se, loglik=loglik, aic=2 * k - 2 * loglik, n=n,
        converged=converged, diagnostic=diagnostic)


def ordinal_class_probs(fit: OrdinalFit, X) -> np.ndarray:
    """Class probabilities (n, 3) under a fitted proportional-odds model."""
    eta = np.asarray(X, dtype=np.float64) @ fit.beta
    c0 = expit(fit.cutpoints[0] - eta)
    c1 = expit(fit.cutpoints[1] - eta)
    return np.column_stack([c0, c1 - c0, 1.0 - c1])


# ---------------------------------------------------------------------------
# Binary logistic regression
# ---------------------------------------------------------------------------

def _logistic_loglik(beta, X1, y):
    eta = X1 @ beta
    # log sigma(eta) for y=1 plus log sigma(-eta) for y=0, stably
    return float(-np.sum(np.logaddexp(0.0, np.where(y == 1, -eta, eta))))


def fit_logistic(dm: DesignMatrix) -> LogisticFit:
    """Maximum-likelihood logistic fit with an intercept prepended."""
    X, y = dm.X, dm.y
    n, d = X.shape
    if not set(np.unique(y).tolist()) <= {0, 1} or len(np.unique(y)) < 2:
        raise FitError("logistic fit needs both response classes 0 and 1")
    k = d + 1
    if n <= k:
        raise FitError(f"need n > {k} observations for {d} predictors, got {n}")
    X1 = np.column_stack([np.ones(n), X])
    names = ["(Intercept)"] + list(dm.columns)

    beta = np.zeros(k)
    loglik = _logistic_loglik(beta, X1, y)
    converged = False
    diagnostic = ""
    hess = None
    for _ in range(MAX_ITER):
        p = expit(X1 @ beta)
        grad = X1.T @ (y - p)
        wgt = p * (1.0 - p)
        hess = -(X1.T @ (X1 * wgt[:, None]))
        if np.max(np.abs(grad)) < GRAD_TOL:
            converged = True
            break
        try:
            step = np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            diagnostic = "singular information matrix (separation or collinearity)"
            break
        new_beta = beta - step
        new_ll = _logistic_loglik(new_beta, X1, y)
        halvings = 0
        while (not np.isfinite(new_ll) or new_ll < loglik) and halvings < 50:
            step *= 0.5
            new_beta = beta - step
            new_ll = _logistic_loglik(new_beta, X1, y)
            halvings += 1
        if halvings >= 50:
            diagnostic = "step halving failed to improve the likelihood"
            break
        beta, loglik = new_beta, new_ll
    else:
        diagnostic = f"no convergence in {MAX_ITER} iterations (separation?)"
    if converged and loglik > -1e-6:
        # zero deviance: the likelihood is at its boundary and the MLE
        # does not exist (perfectly separated classes)
        converged = False
        diagnostic = "perfect separation: likelihood at the boundary"

    try:
        cov = np.linalg.inv(-hess)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se = np.full(k, np.nan)
        converged = False
        diagnostic = diagnostic or "singular information matrix at optimum"
    return LogisticFit(
        columns=names, beta=beta, se=se, loglik=loglik,
        aic=2 * k - 2 * loglik, n=n, converged=converged, diagnostic=diagnostic)


def logistic_predict(fit: LogisticFit, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    X1 = np.column_stack([np.ones(X.shape[0]), X])
    return expit(X1 @ fit.beta)


# ---------------------------------------------------------------------------
# Chi-squared, Pearson correlation, cross-validated accuracy
# ---------------------------------------------------------------------------

def chi_squared_tail(statistic: float, dof: int) -> float:
    """Upper-tail chi-square probability Q(dof/2, x/2)."""
    if statistic < 0 or dof < 1:
        raise ValueError("need statistic >= 0 and dof >= 1")
    return float(gammaincc(dof / 2.0, statistic / 2.0))


def chi_squared(table) -> tuple[float, int, float]:
    """Pearson chi-squared test of independence on a contingency table."""
    obs = np.asarray(table, dtype=np.float64)
    if obs.ndim != 2 or obs.shape[0] < 2 or obs.shape[1] < 2:
        raise PhotoscoreError("contingency table must be at least 2x2")
    if np.any(obs < 0):
        raise PhotoscoreError("counts must be non-negative")
    row = obs.sum(axis=1)
    col = obs.sum(axis=0)
    if np.any(row == 0) or np.any(col == 0):
        raise PhotoscoreError("zero row or column sum in contingency table")
    expected = np.outer(row, col) / obs.sum()
    stat = float(np.sum((obs - expected) ** 2 / expected))
    dof = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return stat, dof, chi_squared_tail(stat, dof)


def pearson(x, y) -> float:
    """Sample Pearson correlation; errors on constant input."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1 or x.size < 2:
        raise PhotoscoreError("pearson needs two equal-length vectors (n >= 2)")
    xd = x - x.mean()
    yd = y - y.mean()
    sx = math.sqrt(float(xd @ xd))
    sy = math.sqrt(float(yd @ yd))
    if sx == 0.0 or sy == 0.0:
        raise PhotoscoreError("undefined correlation: constant vector")
    return float((xd @ yd) / (sx * sy))


def _stratified_folds(y, k, rng):
    folds = [[] for _ in range(k)]
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        rng.shuffle(idx)
        for i, j in enumerate(idx):
            folds[i % k].append(int(j))
    return [np.array(sorted(f), dtype=np.int64) for f in folds]


def kfold_accuracy(X, y, k: int = 10, seed: int = 0, columns=None) -> float:
    """Mean accuracy of a logistic model over stratified k folds.

    Folds are built from a seeded shuffle; classification threshold is
    p > 0.5. If some training partition loses a class, the data is
    refolded once with seed + 1 before giving up.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    n = y.shape[0]
    if n < k:
        raise PhotoscoreError(f"need at least k={k} rows, got {n}")
    if len(np.unique(y)) < 2:
        raise PhotoscoreError("both classes required for cross-validation")
    if columns is None:
        columns = [f"x{j}" for j in range(X.shape[1])]

    for attempt_seed in (seed, seed + 1):
        rng = np.random.default_rng(attempt_seed)
        folds = _stratified_folds(y, k, rng)
        train_ok = all(
            len(np.unique(y[np.setdiff1d(np.arange(n), f)])) == 2 for f in folds)
        if train_ok:
            break
    else:
        raise PhotoscoreError("could not build folds with both classes in training")

    accuracies = []
    for fold in folds:
        train = np.setdiff1d(np.arange(n), fold)
        fit = fit_logistic(DesignMatrix(columns, X[train], y[train]))
        pred = (logistic_predict(fit, X[fold]) > 0.5).astype(np.int64)
        accuracies.append(float(np.mean(pred == y[fold])))
    return float(np.mean(accuracies))


# ---------------------------------------------------------------------------
# JSON reporting
# ---------------------------------------------------------------------------

def _round_sig(x, digits=4):
    if x is None or not np.isfinite(x):
        return None
    return float(f"{x:.{digits}g}")


def fit_to_json(fit) -> dict:
    """Serialize a fit per the fixed output schema."""
    if isinstance(fit, OrdinalFit):
        coef = {}
        names = list(fit.columns) + ["0|1", "1|2"]
        params = np.concatenate([fit.beta, fit.cutpoints])
        pvals = fit.p_values
        for i, name in enumerate(names):
            coef[name] = {"estimate": float(params[i]), "se": float(fit.se[i]),
                          "p": _round_sig(pvals[i])}
        return {
            "model": "ordinal",
            "coefficients": coef,
            "cutpoints": {"0|1": float(fit.cutpoints[0]),
                          "1|2": float(fit.cutpoints[1])},
            "loglik": fit.loglik, "aic": fit.aic, "n": fit.n,
            "converged": fit.converged,
        }
    if isinstance(fit, LogisticFit):
        coef = {}
        pvals = fit.p_values
        for i, name in enumerate(fit.columns):
            coef[name] = {"estimate": float(fit.beta[i]), "se": float(fit.se[i]),
                          "p": _round_sig(pvals[i])}
        odds = {name: float(v) for name, v in zip(fit.columns, fit.odds_ratios)}
        return {
            "model": "logistic",
            "coefficients": coef,
            "odds_ratios": odds,
            "loglik": fit.loglik, "aic": fit.aic, "n": fit.n,
            "converged": fit.converged,
        }
    raise TypeError(f"not a fit object: {type(fit)!r}")
