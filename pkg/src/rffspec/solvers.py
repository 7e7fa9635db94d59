"""Kernel ridge regression: exact, in random-feature space, and by preconditioned CG.

Also provides :func:`spectral_delta`, which measures how well
``G + lam I`` approximates ``K + lam I`` in the spectral (Loewner) sense.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg
from scipy.sparse.linalg import LinearOperator, eigsh

from .errors import InvalidArgumentError, NonConvergenceError, NumericalError
from .features import FeatureMap
from .kernelspace import KernelModel, as_points, kernel_matrix

SOLVE_TOL = 1e-10
DENSE_LIMIT = 2000


def _check_lam(lam):
    if not (np.isfinite(lam) and lam > 0):
        raise InvalidArgumentError(f"lambda must be positive, got {lam}")


def _cho(M, what):
    try:
        return linalg.cho_factor(M, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise NumericalError(f"{what}: {exc}", condition=float(np.linalg.cond(M))) from exc


@dataclass(frozen=True, eq=False)
class KrrEstimator:
    alpha: np.ndarray
    X: np.ndarray
    sigma: float
    lam: float


@dataclass(frozen=True, eq=False)
class RffEstimator:
    w: np.ndarray
    feature_map: FeatureMap
    lam: float


def krr_fit(X, y, model: KernelModel):
    """Solve ``(K + lam I) alpha = y`` by Cholesky."""
    X = as_points(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.shape[0] != X.shape[0]:
        raise InvalidArgumentError("X and y have different lengths")
    _check_lam(model.lam)
    M = kernel_matrix(X, model.sigma) + model.lam * np.eye(X.shape[0])
    alpha = linalg.cho_solve(_cho(M, "K + lam I is not positive definite"), y, check_finite=False)
    res = np.linalg.norm(M @ alpha - y)
    if res > SOLVE_TOL * max(np.linalg.norm(y), 1e-300) and res > 1e-300:
        raise NumericalError(f"KRR residual {res:.3e} exceeds tolerance")
    return KrrEstimator(alpha, X, model.sigma, model.lam)


def krr_predict(est: KrrEstimator, x_new):
    """``sum_j k(x_j, x) alpha_j`` at each new point (a float for a single point)."""
    x_arr = np.asarray(x_new, dtype=float)
    single = x_arr.ndim == 0 or (x_arr.ndim == 1 and est.X.shape[1] > 1)
    Xn = x_arr.reshape(1, -1) if single else as_points(x_arr)
    out = kernel_matrix(Xn, est.sigma, est.X) @ est.alpha
    return float(out[0]) if single else out


def rff_fit(fm: FeatureMap, y, lam):
    """Primal weights ``w = (Z^* Z + lam I_s)^{-1} Z^* y``."""
    _check_lam(lam)
    y = np.asarray(y, dtype=float).reshape(-1)
    Z = fm.Z
    if y.shape[0] != Z.shape[0]:
        raise InvalidArgumentError("y length does not match the feature map")
    ZhZ = Z.conj().T @ Z
    M = 0.5 * (ZhZ + ZhZ.conj().T) + lam * np.eye(Z.shape[1])
    rhs = Z.conj().T @ y
    w = linalg.cho_solve(_cho(M, "Z^*Z + lam I is not positive definite"), rhs, check_finite=False)
    return RffEstimator(w, fm, float(lam))


def _real(values, scale):
    values = np.asarray(values)
    if np.any(np.abs(values.imag) > 1e-8 * np.abs(values.real) + 1e-12 * max(scale, 1.0)):
        raise NumericalError(f"prediction has imaginary residue {np.max(np.abs(values.imag)):.3e}")
    return values.real


def rff_predict(est: RffEstimator, x_new, check_imag=False):
    """``Re(phi(x)^* w)`` at each new point (a float for a single point).

    ``Z Z^*`` is complex Hermitian, so ``phi(x)^* w`` has a non-zero
    imaginary part unless the frequencies come in conjugate pairs; it
    vanishes only in expectation. ``check_imag`` asserts it is negligible
    for maps where it should be (e.g. symmetrized frequency sets).
    """
    x_arr = np.asarray(x_new, dtype=float)
    d = est.feature_map.d
    single = x_arr.ndim == 0 or (x_arr.ndim == 1 and d > 1)
    Xn = x_arr.reshape(1, -1) if single else as_points(x_arr)
    vals = est.feature_map.features(Xn) @ est.w
    out = _real(vals, float(np.max(np.abs(vals), initial=0.0))) if check_imag else vals.real
    return float(out[0]) if single else out


def rff_in_sample(est: RffEstimator):
    """``Re(Z w)``, the fitted values at the training points."""
    return (est.feature_map.Z @ est.w).real


# ---------------------------------------------------------------------------
# Preconditioned CG


class WoodburyPreconditioner:
    """Applies ``Re((Z Z^* + lam I)^{-1} v)`` through the ``s x s`` system.

    ``(Z Z^* + lam I)^{-1} v = lam^{-1} (v - Z (Z^* Z + lam I)^{-1} Z^* v)``.
    The real part of a Hermitian positive definite matrix is symmetric
    positive definite with the same Loewner bounds, so CG stays valid.
    """

    def __init__(self, fm: FeatureMap, lam):
        _check_lam(lam)
        self.Z = fm.Z
        self.lam = float(lam)
        ZhZ = self.Z.conj().T @ self.Z
        M = 0.5 * (ZhZ + ZhZ.conj().T) + self.lam * np.eye(self.Z.shape[1])
        self.factor = _cho(M, "Z^*Z + lam I is not positive definite")

    def apply_complex(self, v):
        inner = linalg.cho_solve(self.factor, self.Z.conj().T @ v, check_finite=False)
        return (v - self.Z @ inner) / self.lam

    def __call__(self, v):
        return self.apply_complex(v).real


@dataclass(frozen=True, eq=False)
class PcgResult:
    alpha: np.ndarray
    iterations: int
    residuals: list


def pcg_solve(K, lam, y, fm: FeatureMap = None, tol=1e-8, max_iter=500, x0=None):
    """Conjugate gradients on ``(K + lam I) alpha = y``.

    With ``fm`` the Woodbury preconditioner built from its ``Z`` is used;
    without it the iteration is plain CG. Stops when the true relative
    residual ``|y - (K + lam I) alpha| / |y|`` drops to ``tol``.

    Raises
    ------
    NonConvergenceError
        After ``max_iter`` iterations; carries the residual history.
    """
    if not tol > 0:
        raise InvalidArgumentError(f"tol must be positive, got {tol}")
    _check_lam(lam)
    K = np.asarray(K, dtype=float)
    y = np.asarray(y, dtype=float).reshape(-1)
    n = y.shape[0]
    prec = WoodburyPreconditioner(fm, lam) if fm is not None else (lambda v: v)

    def matvec(v):
        return K @ v + lam * v

    ynorm = np.linalg.norm(y)
    alpha = np.zeros(n) if x0 is None else np.array(x0, dtype=float)
    if ynorm == 0:
        return PcgResult(np.zeros(n), 0, [0.0])
    r = y - matvec(alpha)
    residuals = [np.linalg.norm(r) / ynorm]
    if residuals[-1] <= tol:
        return PcgResult(alpha, 0, residuals)
    zr = prec(r)
    p = zr.copy()
    rz = r @ zr
    for it in range(1, max_iter + 1):
        Ap = matvec(p)
        step = rz / (p @ Ap)
        alpha = alpha + step * p
        r = r - step * Ap
        # recompute the true residual periodically to avoid drift
        if it % 50 == 0:
            r = y - matvec(alpha)
        residuals.append(np.linalg.norm(r) / ynorm)
        if residuals[-1] <= tol:
            true_res = np.linalg.norm(y - matvec(alpha)) / ynorm
            if true_res <= tol:
                residuals[-1] = true_res
                return PcgResult(alpha, it, residuals)
            r = y - matvec(alpha)
        zr = prec(r)
        rz_new = r @ zr
        p = zr + (rz_new / rz) * p
        rz = rz_new
    raise NonConvergenceError(
        f"PCG did not reach relative residual {tol:g} in {max_iter} iterations "
        f"(last {residuals[-1]:.3e})",
        residuals,
    )


def cg_iteration_bound(delta, tol, c=1.0):
    """``ceil(c sqrt((1 + delta)/(1 - delta)) ln(1/tol))``."""
    if not 0 <= delta < 1:
        raise InvalidArgumentError(f"delta must lie in [0, 1), got {delta}")
    return int(math.ceil(c * math.sqrt((1 + delta) / (1 - delta)) * math.log(1.0 / tol)))


# ---------------------------------------------------------------------------
# Spectral approximation quality


@dataclass(frozen=True)
class SpectralReport:
    delta: float
    lam_min_whitened: float
    lam_max_whitened: float
    kappa: float


def spectral_delta(K, G, lam):
    """Extreme eigenvalues of ``L^{-1}(G + lam I)L^{-*}`` where ``K + lam I = L L^*``.

    ``delta`` is the smallest value with
    ``(1 - delta)(K + lam I) <= G + lam I <= (1 + delta)(K + lam I)``.
    """
    _check_lam(lam)
    K = np.asarray(K)
    G = np.asarray(G)
    n = K.shape[0]
    if G.shape != (n, n):
        raise InvalidArgumentError("K and G must have the same square shape")
    L = linalg.cholesky(K + lam * np.eye(n), lower=True, check_finite=False)
    Gl = G + lam * np.eye(n)
    if n <= DENSE_LIMIT:
        W = linalg.solve_triangular(L, Gl, lower=True, check_finite=False)
        W = linalg.solve_triangular(L, W.conj().T, lower=True, check_finite=False)
        W = 0.5 * (W + W.conj().T)
        ev = linalg.eigvalsh(W, check_finite=False)
        lo, hi = float(ev[0]), float(ev[-1])
    else:
        def mv(v):
            u = linalg.solve_triangular(L, v, lower=True, trans="C", check_finite=False)
            return linalg.solve_triangular(L, Gl @ u, lower=True, check_finite=False)

        op = LinearOperator((n, n), matvec=mv, dtype=np.result_type(G.dtype, float))
        hi = float(eigsh(op, k=1, which="LA", return_eigenvectors=False)[0].real)
        lo = float(eigsh(op, k=1, which="SA", return_eigenvectors=False)[0].real)
    if not lo > 0:
        raise NumericalError(f"whitened surrogate is not positive definite (min eig {lo:.3e})")
    return SpectralReport(max(1.0 - lo, hi - 1.0), lo, hi, hi / lo)


# ---------------------------------------------------------------------------
# Persistence

_EST_HEADER = "# rffspec estimator v1"


def save_estimator(est, path, feature_map_path=None):
    """Write estimator coefficients as text.

    KRR files hold ``alpha`` next to the training points; RFF files hold
    ``Re w, Im w`` and the path of the saved feature map they belong to.
    """
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(_EST_HEADER + "\n")
        if isinstance(est, KrrEstimator):
            d = est.X.shape[1]
            fh.write(f"# kind=krr\n# sigma={est.sigma!r}\n# lambda={est.lam!r}\n# d={d}\n")
            fh.write(",".join([f"x_{k + 1}" for k in range(d)] + ["alpha"]) + "\n")
            for row, a in zip(est.X, est.alpha):
                fh.write(",".join(format(float(v), ".17g") for v in (*row, a)) + "\n")
        elif isinstance(est, RffEstimator):
            if feature_map_path is None:
                raise InvalidArgumentError("feature_map_path is required for RFF estimators")
            fh.write(f"# kind=rff\n# lambda={est.lam!r}\n# feature_map={feature_map_path}\n")
            fh.write("w_re,w_im\n")
            for v in est.w:
                fh.write(f"{v.real:.17g},{v.imag:.17g}\n")
        else:
            raise InvalidArgumentError(f"cannot save {type(est).__name__}")


def load_estimator(path, feature_map=None):
    """Read an estimator written by :func:`save_estimator`.

    RFF estimators need the matching ``feature_map`` (see
    :func:`rffspec.features.load_feature_map`).
    """
    meta, rows = {}, []
    with open(path, encoding="ascii") as fh:
        if fh.readline().rstrip("\n") != _EST_HEADER:
            raise InvalidArgumentError(f"{path} is not an estimator file")
        header_seen = False
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key] = value
            elif not header_seen:
                header_seen = True
            elif line:
                rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=float)
    if meta.get("kind") == "krr":
        d = int(meta["d"])
        return KrrEstimator(data[:, d].copy(), data[:, :d].copy(), float(meta["sigma"]),
                            float(meta["lambda"]))
    if meta.get("kind") == "rff":
        if feature_map is None:
            raise InvalidArgumentError("an RFF estimator needs its feature map")
        return RffEstimator(data[:, 0] + 1j * data[:, 1], feature_map, float(meta["lambda"]))
    raise InvalidArgumentError(f"unknown estimator kind {meta.get('kind')!r}")


def write_residuals_csv(residuals, path, comment=None):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        if comment:
            for line in comment.splitlines():
                fh.write(f"# {line}\n")
        fh.write("iteration,relative_residual\n")
        for k, r in enumerate(residuals):
            fh.write(f"{k},{float(r):.17g}\n")
