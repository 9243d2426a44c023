"""Recovery and convergence certificates at desk scale.

Everything here is exact or exhaustively enumerated where feasible:
RIP constants by support enumeration, lambda_A and the constrained
eigenvalue minimum v_min by column-subset enumeration, recovery
thresholds and stable-recovery constants by closed formulas, and
Euclidean projection onto the dual solution set by an active-set
method certified through its KKT residual. Operations refuse inputs
beyond their enumeration caps instead of silently approximating.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from ._rng import normals, philox
from .linalg import as_matrix, as_vector, lambda_min_pp, spectral_norm, svd
from .models import dual_gradient, dual_objective

RIP_SUPPORT_CAP = 2_000_000
SUBSET_CAP = 16
EPS_SUPP_FACTOR = 1e-10
KKT_TOL = 1e-9


@dataclass(frozen=True)
class RipReport:
    """Restricted isometry constant of one sparsity level.

    extremal_supports holds the supports attaining the largest and the
    smallest Gram eigenvalue, in that order.
    """

    k: int
    delta_k: float
    extremal_supports: tuple


@dataclass(frozen=True)
class RecoveryThresholds:
    """Exact and stable recovery constants derived from a RIP bound.

    alpha_multiplier and alpha_required are None when theta >= 1; the
    stable constants C1, C2, C1bar, C2bar are None when C3*theta >= 1.
    """

    delta: float
    theta: float
    alpha_multiplier: float | None
    alpha_required: float | None
    C3: float
    C4: float
    C1: float | None
    C2: float | None
    C1bar: float | None
    C2bar: float | None


@dataclass(frozen=True)
class NspReport:
    """Null-space margin; nonnegative margin certifies the inequality."""

    margin: float
    passed: bool


@dataclass(frozen=True)
class SspBounds:
    """Measurement counts demanded by the spherical-section bounds."""

    m: int
    exact_m_needed: float
    stable_m_needed: float


@dataclass(frozen=True)
class RiplessReport:
    """The four dual-certificate conditions and their joint verdict."""

    cond_op: float
    cond_coh: float
    cond_sign: float
    cond_off: float
    passed: bool


@dataclass(frozen=True)
class StrongConvexityReport:
    """Restricted strong convexity constant nu and derived quantities."""

    lambda_A: float
    nu: float
    L: float
    h_star: float
    decay_factor: float
    omega: float
    kappa: float


@dataclass(frozen=True, eq=False)
class SolutionSet:
    """Dual solution set of an equality-constrained vector model.

    Coordinates are partitioned by the sign of x*: S_plus and S_minus
    pin a'_i y to 1 + x*_i/alpha and -1 + x*_i/alpha respectively,
    while S_zero contributes the box -1 <= a'_i y <= 1. The generating
    model is kept for convergence verification.
    """

    S_plus: tuple
    S_minus: tuple
    S_zero: tuple
    rhs_plus: np.ndarray
    rhs_minus: np.ndarray
    x_star: np.ndarray
    alpha: float
    model: object


@dataclass(frozen=True)
class ProjectionResult:
    """Euclidean projection onto the dual solution set."""

    y_proj: np.ndarray
    dist: float


@dataclass(frozen=True)
class ConvergenceCheck:
    """Outcome of checking the linear convergence bounds on a trace.

    worst_slack is the most negative margin (bound minus observed)
    across all checked inequalities; ok flags allow 1e-8 slack.
    """

    dyk_ok: bool
    dyk2_ok: bool
    dyk3_ok: bool
    rescvx_ok: bool
    worst_slack: float


def rip_constant(A, k, cap=RIP_SUPPORT_CAP):
    """Exact RIP constant of order k by support enumeration.

    Parameters
    ----------
    A : ndarray
        Sensing matrix, m by n.
    k : int
        Sparsity level, 1 <= k <= n.
    cap : int, optional
        Maximum number of supports to enumerate.

    Returns
    -------
    RipReport
        delta_k is the smallest delta with (1-delta)||x||^2 <=
        ||A x||^2 <= (1+delta)||x||^2 for all k-sparse x.
    """
    A = as_matrix(A, "sensing matrix")
    n = A.shape[1]
    if not 1 <= k <= n:
        raise ValueError(f"k={k} outside 1..{n}")
    count = math.comb(n, k)
    if count > cap:
        raise ValueError(
            f"{count} supports exceed the enumeration cap {cap}; use a "
            f"randomized estimate instead")
    G = A.T @ A
    hi_val, lo_val = -np.inf, np.inf
    hi_sup = lo_sup = None
    for S in itertools.combinations(range(n), k):
        w = np.linalg.eigvalsh(G[np.ix_(S, S)])
        if w[-1] > hi_val:
            hi_val, hi_sup = w[-1], S
        if w[0] < lo_val:
            lo_val, lo_sup = w[0], S
    delta = max(hi_val - 1.0, 1.0 - lo_val)
    return RipReport(k=k, delta_k=float(delta),
                     extremal_supports=(hi_sup, lo_sup))


def recovery_thresholds(delta, alpha, xS_inf=0.0, xZ_inf=0.0, x_inf=None):
    """Recovery thresholds and stable-recovery constants for a RIP bound.

    Parameters
    ----------
    delta : float
        RIP constant (of twice the sparsity level), 0 <= delta < 1.
    alpha : float
        Augmentation weight; must exceed xZ_inf.
    xS_inf, xZ_inf : float, optional
        Largest magnitudes of the signal on and off its head support.
    x_inf : float, optional
        Overall largest magnitude; defaults to xS_inf.

    Returns
    -------
    RecoveryThresholds
        theta = sqrt(4(1+5d-4d^2)/((1-d)(32-25d))); when theta < 1 the
        exact-recovery condition is alpha >= alpha_multiplier * x_inf
        with alpha_multiplier = (theta^-1 - 1)^-1. C3, C4 and, when
        C3*theta < 1, the stable constants C1, C2, C1bar, C2bar.
    """
    if not 0.0 <= delta < 1.0:
        raise ValueError("delta must lie in [0, 1)")
    if not alpha > xZ_inf:
        raise ValueError("alpha must exceed the off-support magnitude")
    if x_inf is None:
        x_inf = xS_inf
    theta = math.sqrt(4.0 * (1.0 + 5.0 * delta - 4.0 * delta ** 2)
                      / ((1.0 - delta) * (32.0 - 25.0 * delta)))
    if theta < 1.0:
        multiplier = theta / (1.0 - theta)
        alpha_required = multiplier * x_inf
    else:
        multiplier = None
        alpha_required = None
    C3 = (alpha + xS_inf) / (alpha - xZ_inf)
    C4 = 2.0 * alpha / (alpha - xZ_inf)
    if C3 * theta < 1.0:
        den = 1.0 - C3 * theta
        root = math.sqrt((2.0 - delta) / ((1.0 - delta) * (32.0 - 25.0 * delta)))
        C1 = 2.0 * math.sqrt(2.0) * (1.0 + C3) / (math.sqrt(1.0 - delta) * den)
        C2 = (1.0 + theta) * C4 / den
        C1bar = 2.0 / math.sqrt(1.0 - delta) * (4.0 * C3 / den * root + 1.0)
        C2bar = 2.0 * C4 / den * math.sqrt(2.0) * root
    else:
        C1 = C2 = C1bar = C2bar = None
    return RecoveryThresholds(delta=float(delta), theta=theta,
                              alpha_multiplier=multiplier,
                              alpha_required=alpha_required,
                              C3=C3, C4=C4, C1=C1, C2=C2,
                              C1bar=C1bar, C2bar=C2bar)


def nsp_check(h, S_or_r, alpha, x_scale=0.0):
    """Augmented null-space margin of a single vector or matrix.

    Parameters
    ----------
    h : ndarray
        Candidate null-space element; 1-D for the vector variant, 2-D
        for the matrix variant.
    S_or_r : set or int
        Support set (vector) or rank r (matrix).
    alpha : float
        Augmentation weight.
    x_scale : float, optional
        ||x0||_inf for vectors, ||X0||_2 for matrices.

    Returns
    -------
    NspReport
        Vector margin ||h_{S^c}||_1 - (1 + x_scale/alpha)||h_S||_1;
        matrix margin uses head/tail singular values at rank r.
        passed means margin >= 0.
    """
    h = np.asarray(h, dtype=np.float64)
    if not np.any(h):
        raise ValueError("h must be nonzero")
    weight = 1.0 + x_scale / alpha
    if h.ndim == 2:
        r = int(S_or_r)
        sig = svd(h).sigma
        margin = float(sig[r:].sum() - weight * sig[:r].sum())
    else:
        S = sorted(int(i) for i in S_or_r)
        mask = np.zeros(h.shape[0], dtype=bool)
        mask[S] = True
        margin = float(np.abs(h[~mask]).sum() - weight * np.abs(h[mask]).sum())
    return NspReport(margin=margin, passed=margin >= 0.0)


def ssp_bounds(m, k_or_r, Delta, alpha, x_inf, C3):
    """Measurement counts required by the spherical-section condition.

    Parameters
    ----------
    m : int
        Available measurements (echoed back; comparison is the
        caller's).
    k_or_r : int
        Sparsity level or rank.
    Delta : float
        Spherical-section constant.
    alpha, x_inf : float
        Augmentation weight and the signal's largest magnitude.
    C3 : float
        Stable-recovery coefficient.

    Returns
    -------
    SspBounds
        exact_m_needed = (2 + x_inf/alpha)^2 k Delta and
        stable_m_needed = 4 (1 + C3)^2 k Delta.
    """
    if not Delta > 0:
        raise ValueError("Delta must be positive")
    exact = (2.0 + x_inf / alpha) ** 2 * k_or_r * Delta
    stable = 4.0 * (1.0 + C3) ** 2 * k_or_r * Delta
    return SspBounds(m=int(m), exact_m_needed=float(exact),
                     stable_m_needed=float(stable))


def ssp_ratio_estimate(A, samples=1000, seed=0):
    """Sampled minimum of ||h||_1/||h||_2 over the null space of A.

    Draws unit vectors in an orthonormal null-space basis; the result
    is an upper bound on the true null-space minimum (sampling cannot
    certify it).

    Parameters
    ----------
    A : ndarray
    samples : int, optional
    seed : int, optional

    Returns
    -------
    float
    """
    A = as_matrix(A, "sensing matrix")
    Z = null_space(A)
    if Z.shape[1] == 0:
        raise ValueError("null space of A is trivial")
    gen = philox(seed)
    best = np.inf
    for _ in range(samples):
        u = normals(gen, Z.shape[1])
        norm_u = np.linalg.norm(u)
        if norm_u == 0.0:
            continue
        h = Z @ (u / norm_u)
        best = min(best, np.abs(h).sum() / np.linalg.norm(h))
    return float(best)


def ripless_check(A, S, signs, y):
    """Evaluate the four dual-certificate conditions for a support.

    Parameters
    ----------
    A : ndarray
    S : sequence of int
        Support of the signal; A_S must have full column rank.
    signs : ndarray
        Sign pattern of the signal on S.
    y : ndarray
        Candidate dual certificate; v = A'y is tested.

    Returns
    -------
    RiplessReport
        cond_op = ||(A_S' A_S)^-1||_2 (threshold 2), cond_coh =
        max_{i not in S} ||A_S' a_i||_2 (threshold 1), cond_sign =
        ||v_S - signs||_2 (threshold 1/4), cond_off = ||v_{S^c}||_inf
        (threshold 1/4).
    """
    A = as_matrix(A, "sensing matrix")
    S = [int(i) for i in S]
    signs = as_vector(signs, "signs")
    y = as_vector(y, "dual certificate")
    A_S = A[:, S]
    gram = A_S.T @ A_S
    w = np.linalg.eigvalsh(gram)
    if w[0] <= 1e-12 * max(w[-1], 1e-300):
        raise ValueError("A_S is rank deficient")
    cond_op = float(1.0 / w[0])
    mask = np.zeros(A.shape[1], dtype=bool)
    mask[S] = True
    off = A[:, ~mask]
    cond_coh = float(np.max(np.linalg.norm(A_S.T @ off, axis=0))) \
        if off.shape[1] else 0.0
    v = A.T @ y
    cond_sign = float(np.linalg.norm(v[S] - signs))
    cond_off = float(np.max(np.abs(v[~mask]))) if off.shape[1] else 0.0
    passed = (cond_op <= 2.0 and cond_coh <= 1.0 and cond_sign <= 0.25
              and cond_off <= 0.25)
    return RiplessReport(cond_op=cond_op, cond_coh=cond_coh,
                         cond_sign=cond_sign, cond_off=cond_off,
                         passed=passed)


def lambda_A(A, cap=SUBSET_CAP):
    """Exact minimum of lambda_min_pp(C C') over nonzero column subsets.

    Parameters
    ----------
    A : ndarray
        Nonzero matrix with at most `cap` columns.
    cap : int, optional

    Returns
    -------
    float
    """
    A = as_matrix(A, "sensing matrix")
    m, n = A.shape
    if n > cap:
        raise ValueError(f"{n} columns exceed the subset enumeration cap "
                         f"{cap}")
    cols = [j for j in range(n) if A[:, j].any()]
    if not cols:
        raise ValueError("A must be nonzero")
    best = np.inf
    for size in range(1, len(cols) + 1):
        for S in itertools.combinations(cols, size):
            C = A[:, S]
            # the two Grams share their nonzero spectrum; use the
            # smaller one
            gram = C.T @ C if size <= m else C @ C.T
            best = min(best, lambda_min_pp(gram))
    return float(best)


def nu_constant(A, x_star, alpha):
    """Restricted strong convexity constant of the dual and companions.

    Parameters
    ----------
    A : ndarray
    x_star : ndarray
        Solution of the augmented model; must be nonzero.
    alpha : float

    Returns
    -------
    StrongConvexityReport
        nu = lambda_A * min over the support of alpha|x*_i| /
        (|x*_i| + 2 alpha); omega, kappa, L = alpha ||A||^2, h_star =
        nu/(alpha^2 ||A||^4), decay_factor = 1 - omega^2 kappa^2.
    """
    A = as_matrix(A, "sensing matrix")
    x = as_vector(x_star, "x_star")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    scale = np.abs(x).max() if x.size else 0.0
    if scale == 0.0:
        raise ValueError("x_star must be nonzero")
    supp = np.abs(x) > EPS_SUPP_FACTOR * scale
    ratios = np.abs(x[supp]) / alpha
    omega = float(np.min(ratios / (2.0 + ratios)))
    lam = lambda_A(A)
    na2 = spectral_norm(A) ** 2
    nu = lam * alpha * omega
    kappa = lam / na2
    return StrongConvexityReport(
        lambda_A=lam,
        nu=nu,
        L=alpha * na2,
        h_star=nu / (alpha ** 2 * na2 ** 2),
        decay_factor=1.0 - omega ** 2 * kappa ** 2,
        omega=omega,
        kappa=kappa,
    )


def v_min(A_bar, B_bar, D, cap=SUBSET_CAP):
    """Exact minimum of lambda_min_pp(A D A' + C C') over submatrices.

    C ranges over column subsets of B_bar of size p with r <= p <=
    ell, where r = rank([A_bar B_bar]) - rank(A_bar); p = 0 drops the
    C C' term.

    Parameters
    ----------
    A_bar : ndarray
        Nonzero m-by-n matrix.
    B_bar : ndarray
        m-by-ell matrix; ell <= cap.
    D : ndarray
        Positive diagonal, given as a length-n vector.

    Returns
    -------
    float
    """
    A_bar = as_matrix(A_bar, "A_bar")
    if not A_bar.any():
        raise ValueError("A_bar must be nonzero")
    B_bar = np.asarray(B_bar, dtype=np.float64)
    if B_bar.ndim != 2 or B_bar.shape[0] != A_bar.shape[0]:
        raise ValueError("B_bar must have the same number of rows as A_bar")
    d = as_vector(D, "diagonal")
    if d.shape[0] != A_bar.shape[1] or np.any(d <= 0):
        raise ValueError("D must be a positive diagonal of matching size")
    ell = B_bar.shape[1]
    if ell > cap:
        raise ValueError(f"{ell} columns exceed the subset enumeration cap "
                         f"{cap}")
    if ell:
        r = (np.linalg.matrix_rank(np.hstack([A_bar, B_bar]))
             - np.linalg.matrix_rank(A_bar))
    else:
        r = 0
    ADA = (A_bar * d) @ A_bar.T
    best = np.inf
    for p in range(r, ell + 1):
        for S in itertools.combinations(range(ell), p):
            M = ADA if p == 0 else ADA + B_bar[:, S] @ B_bar[:, S].T
            best = min(best, lambda_min_pp(M))
    return float(best)


def polish_primal(model, support, signs):
    """Refit a solved sparse solution to machine precision.

    Given the converged support and sign pattern, the on-support
    values solve the overdetermined system A_S x_S = b exactly (least
    squares via the full-rank factorization), which removes the
    solver's tolerance-level error.

    Parameters
    ----------
    model : Model
        Vector model with sigma = 0.
    support : sequence of int
    signs : ndarray
        Sign of x* on the support.

    Returns
    -------
    (x, y) : ndarray pair
        x is the refit primal point; y solves the support equalities
        A_S' y = signs + x_S/alpha with minimum norm (the off-support
        box is not checked here).
    """
    if model.is_matrix or model.sigma > 0:
        raise ValueError("refit needs an equality-constrained vector model")
    A, b, alpha = model.op.A, model.b, model.alpha
    S = [int(i) for i in support]
    s = as_vector(signs, "signs")
    A_S = A[:, S]
    x_S, _, rank, _ = np.linalg.lstsq(A_S, b, rcond=None)
    if rank < len(S):
        raise ValueError("support columns are rank deficient")
    if np.linalg.norm(A_S @ x_S - b) > 1e-8 * (1.0 + np.linalg.norm(b)):
        raise ValueError("support does not reproduce the measurements")
    if np.any(x_S * s <= 0):
        raise ValueError("refit values contradict the given signs")
    x = np.zeros(A.shape[1])
    x[S] = x_S
    y, *_ = np.linalg.lstsq(A_S.T, s + x_S / alpha, rcond=None)
    return x, y


def solution_set(model, x_star, tol=1e-6):
    """Build the dual solution set description from a solved x*.

    Parameters
    ----------
    model : Model
        Vector model with sigma = 0.
    x_star : ndarray
        Primal optimum; ||A x* - b|| <= tol (1 + ||b||) is required.
    tol : float, optional

    Returns
    -------
    SolutionSet
    """
    if model.is_matrix or model.sigma > 0:
        raise ValueError(
            "the solution set is described for equality-constrained vector "
            "models")
    x = as_vector(x_star, "x_star")
    A, b, alpha = model.op.A, model.b, model.alpha
    if x.shape[0] != A.shape[1]:
        raise ValueError("x_star length does not match the operator")
    if np.linalg.norm(A @ x - b) > tol * (1.0 + np.linalg.norm(b)):
        raise ValueError("x_star does not satisfy A x = b at the given "
                         "tolerance")
    eps = EPS_SUPP_FACTOR * (np.abs(x).max() if x.size else 0.0)
    plus = tuple(int(i) for i in np.flatnonzero(x > eps))
    minus = tuple(int(i) for i in np.flatnonzero(x < -eps))
    zero = tuple(int(i) for i in range(x.shape[0])
                 if i not in plus and i not in minus)
    return SolutionSet(
        S_plus=plus,
        S_minus=minus,
        S_zero=zero,
        rhs_plus=1.0 + x[list(plus)] / alpha,
        rhs_minus=-1.0 + x[list(minus)] / alpha,
        x_star=x.copy(),
        alpha=alpha,
        model=model,
    )


def _nnls(A, b, tol=None, max_iter=None):
    """Lawson-Hanson nonnegative least squares.

    Solves min ||A x - b|| over x >= 0 by the classic active-set
    method, with the passive-set subproblems solved by lstsq. Written
    here because the projection certificate needs true KKT points and
    library implementations have terminated early on our inputs.

    Candidates whose trial coefficient comes out nonpositive (possible
    when the passive columns go rank deficient) are rejected and masked
    for the rest of that search, as in the original algorithm.

    Returns
    -------
    (x, rnorm) : ndarray and float
        The solution and ||A x - b||.
    """
    A = np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    m, n = A.shape
    x = np.zeros(n)
    if n == 0:
        return x, float(np.linalg.norm(b))
    if tol is None:
        tol = 1e-12 * max(1.0, float(np.abs(A.T @ b).max()))
    if max_iter is None:
        max_iter = 30 * max(n, 10)
    passive = np.zeros(n, dtype=bool)
    resid = b.copy()
    for _ in range(max_iter):
        w = A.T @ resid
        w[passive] = -np.inf
        while True:
            j = int(np.argmax(w))
            if w[j] <= tol:
                return x, float(np.linalg.norm(resid))
            trial = np.append(np.flatnonzero(passive), j)
            z, *_ = np.linalg.lstsq(A[:, trial], b, rcond=None)
            if z[-1] > 0.0:
                break
            w[j] = -np.inf
        passive[j] = True
        while True:
            if np.all(z > 0.0):
                x[:] = 0.0
                x[trial] = z
                break
            hit = np.flatnonzero(z <= 0.0)
            xi = x[trial[hit]]
            denom = np.where(xi - z[hit] > 0.0, xi - z[hit], 1.0)
            steps = np.where(xi - z[hit] > 0.0, xi / denom, 0.0)
            cut = int(np.argmin(steps))
            alpha = float(steps[cut])
            x[trial] += alpha * (z - x[trial])
            x[trial[hit[cut]]] = 0.0
            np.maximum(x, 0.0, out=x)
            keep = x[trial] > 0.0
            passive[trial[~keep]] = False
            trial = trial[keep]
            if trial.size == 0:
                x[:] = 0.0
                break
            z, *_ = np.linalg.lstsq(A[:, trial], b, rcond=None)
        resid = b - A @ x
    raise RuntimeError("nonnegative least squares failed to terminate")


def _ldp_box(G, c):
    """min ||u|| subject to -1 <= G u + c <= 1, by the least-distance
    reduction to one nonnegative least-squares solve."""
    q, d = G.shape
    H = np.vstack([-G, G])
    k = np.concatenate([c - 1.0, -1.0 - c])
    if np.all(k <= 0.0):
        return np.zeros(d)
    E = np.vstack([H.T, k[None, :]])
    f = np.zeros(d + 1)
    f[d] = 1.0
    r, _ = _nnls(E, f)
    rho = E @ r - f
    if abs(rho[d]) < 1e-14:
        raise RuntimeError("projection subproblem is infeasible")
    return -rho[:d] / rho[d]


def _kkt_residual(ss, A, y, w):
    """KKT residual of w as the projection of y onto the solution set.

    Stationarity asks for y - w in the cone spanned by the equality
    gradients (free sign) and the active box gradients (nonnegative).
    The free part is eliminated by projecting onto the orthogonal
    complement of the equality span before the cone fit.
    """
    eq_cols = list(ss.S_plus) + list(ss.S_minus)
    rhs = np.concatenate([ss.rhs_plus, ss.rhs_minus])
    feas = 0.0
    g = y - w
    Q = None
    if eq_cols:
        E = A[:, eq_cols]
        feas = float(np.max(np.abs(E.T @ w - rhs)))
        Q, _ = np.linalg.qr(E)
        g = g - Q @ (Q.T @ g)
    cone = []
    if ss.S_zero:
        F = A[:, list(ss.S_zero)]
        t = F.T @ w
        feas = max(feas, float(np.max(np.maximum(np.abs(t) - 1.0, 0.0))))
        act_u = np.flatnonzero(t >= 1.0 - 1e-8)
        act_l = np.flatnonzero(t <= -1.0 + 1e-8)
        if act_u.size:
            cone.append(F[:, act_u])
        if act_l.size:
            cone.append(-F[:, act_l])
    if cone:
        N = np.hstack(cone)
        if Q is not None:
            N = N - Q @ (Q.T @ N)
        _, stat = _nnls(N, g)
    else:
        stat = np.linalg.norm(g)
    return max(feas, float(stat))


def project_Ystar(ss, A, y):
    """Euclidean projection onto the dual solution set.

    Splits the polyhedron into its equality part (projected in closed
    form) and the box part (a least-distance program in the null space
    of the equalities). The result is certified by its KKT residual.

    Parameters
    ----------
    ss : SolutionSet
    A : ndarray
        The model's sensing matrix.
    y : ndarray

    Returns
    -------
    ProjectionResult

    Raises
    ------
    RuntimeError
        If the KKT residual exceeds 1e-9.
    """
    A = as_matrix(A, "sensing matrix")
    y = as_vector(y, "y")
    eq_cols = list(ss.S_plus) + list(ss.S_minus)
    rhs = np.concatenate([ss.rhs_plus, ss.rhs_minus])
    if eq_cols:
        E = A[:, eq_cols]
        gamma, *_ = np.linalg.lstsq(E.T @ E, rhs - E.T @ y, rcond=None)
        y_hat = y + E @ gamma
        if np.max(np.abs(E.T @ y_hat - rhs)) > 1e-9 * (1.0 + np.abs(rhs).max()):
            raise RuntimeError("equality system of the solution set is "
                               "inconsistent")
        Z = null_space(E.T)
    else:
        y_hat = y.copy()
        Z = np.eye(y.shape[0])
    if ss.S_zero and Z.shape[1]:
        F = A[:, list(ss.S_zero)]
        G = F.T @ Z
        c = F.T @ y_hat
        u = _ldp_box(G, c)
        y_proj = y_hat + Z @ u
    else:
        y_proj = y_hat
    kkt = _kkt_residual(ss, A, y, y_proj)
    if kkt > KKT_TOL:
        raise RuntimeError(f"projection stalled with KKT residual {kkt:.3e}")
    return ProjectionResult(y_proj=y_proj,
                            dist=float(np.linalg.norm(y - y_proj)))


def verify_convergence(trace, ss, report, h, slack=1e-8):
    """Check the linear convergence bounds on a fixed-step trace.

    Verifies, at every recorded iterate k: the dual distance bound
    dist(y^(k)) <= factor^(k/2) dist(y^(0)) with factor = 1 - 2 h nu +
    h^2 alpha^2 ||A||^4; the objective bound f(y^(k)) - f* <= (L/2)
    factor^k dist^2(y^(0)); the primal bound ||x - x*|| <= alpha
    ||A|| dist(y^(k)); and the restricted strong convexity inequality
    <y - P(y), grad f(y)> >= nu ||y - P(y)||^2.

    Parameters
    ----------
    trace : Trace
        From the fixed-step solver with step h, carrying iterates.
    ss : SolutionSet
    report : StrongConvexityReport
    h : float
        Must satisfy 0 < h < 2 nu / (alpha^2 ||A||^4).
    slack : float, optional
        Absolute tolerance on each inequality.

    Returns
    -------
    ConvergenceCheck
    """
    model = ss.model
    A = model.op.A
    alpha = model.alpha
    na = spectral_norm(A)
    h_hi = 2.0 * report.nu / (alpha ** 2 * na ** 4)
    if not 0.0 < h < h_hi:
        raise ValueError(f"step size h={h:g} outside the admissible range "
                         f"(0, {h_hi:g})")
    recs = trace.records
    if not recs or recs[0].y is None:
        raise ValueError("trace must carry iterates (record_iterates=True)")
    factor = 1.0 - 2.0 * h * report.nu + h * h * alpha ** 2 * na ** 4
    projs = [project_Ystar(ss, A, rec.y) for rec in recs]
    d0 = projs[0].dist
    f_star = dual_objective(model, projs[0].y_proj)
    dyk_ok = dyk2_ok = dyk3_ok = rescvx_ok = True
    worst = np.inf
    for rec, pr in zip(recs, projs):
        s1 = factor ** (rec.k / 2.0) * d0 - pr.dist
        s2 = 0.5 * report.L * factor ** rec.k * d0 ** 2 - (rec.f - f_star)
        s3 = alpha * na * pr.dist - np.linalg.norm(rec.x - ss.x_star)
        w = rec.y - pr.y_proj
        s4 = float(w @ dual_gradient(model, rec.y)) \
            - report.nu * float(w @ w)
        dyk_ok &= s1 >= -slack
        dyk2_ok &= s2 >= -slack
        dyk3_ok &= s3 >= -slack
        rescvx_ok &= s4 >= -slack
        worst = min(worst, s1, s2, s3, s4)
    return ConvergenceCheck(dyk_ok=bool(dyk_ok), dyk2_ok=bool(dyk2_ok),
                            dyk3_ok=bool(dyk3_ok), rescvx_ok=bool(rescvx_ok),
                            worst_slack=float(worst))
