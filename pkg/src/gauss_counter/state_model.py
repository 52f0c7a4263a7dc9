"""Gaussian state representations and their normal-parameter invariants.

Phase-space coordinates are ordered ``(q_1, p_1, ..., q_S, p_S)`` and the
covariance convention puts the vacuum at the identity matrix.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClusterAmbiguity,
    DimensionMismatch,
    InvalidParameters,
    LambdaPrimeOutOfRange,
    NonFiniteInput,
    NotPositiveDefinite,
    NotSymmetric,
    NumericalInstability,
    OddLength,
    Unphysical,
)

TOL_SYM = 1e-10
TOL_SYMPLECTIC = 1e-9
TOL_DISTINCT = 1e-8
TOL_PURITY = 1e-6
EIG_RESIDUAL = 1e-10


def _frozen(values, dtype=float):
    arr = np.array(values, dtype=dtype)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class GaussianStateSpec:
    """Covariance matrix and displacement of an S-mode Gaussian state."""

    covariance: np.ndarray
    displacement: np.ndarray
    mode_count: int = None

    def __post_init__(self):
        cov = np.atleast_2d(np.array(self.covariance, dtype=float))
        disp = np.atleast_1d(np.array(self.displacement, dtype=float))
        mode_count = self.mode_count
        if mode_count is None:
            mode_count = cov.shape[0] // 2
        if mode_count < 1:
            raise DimensionMismatch("mode_count must be positive")
        dim = 2 * int(mode_count)
        if cov.shape != (dim, dim):
            raise DimensionMismatch(
                f"covariance has shape {cov.shape}, expected ({dim}, {dim})"
            )
        if disp.shape != (dim,):
            raise DimensionMismatch(f"displacement has shape {disp.shape}, expected ({dim},)")
        if not (np.all(np.isfinite(cov)) and np.all(np.isfinite(disp))):
            raise NonFiniteInput("covariance and displacement must be finite")
        object.__setattr__(self, "covariance", _frozen(cov))
        object.__setattr__(self, "displacement", _frozen(disp))
        object.__setattr__(self, "mode_count", int(mode_count))

    def rotated(self, orthogonal):
        """The state after the phase-space rotation ``orthogonal``."""
        o = np.asarray(orthogonal, dtype=float)
        return GaussianStateSpec(o @ self.covariance @ o.T, o @ self.displacement, self.mode_count)

    def to_dict(self):
        return {
            "mode_count": self.mode_count,
            "covariance": self.covariance.tolist(),
            "displacement": self.displacement.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            covariance=data["covariance"],
            displacement=data["displacement"],
            mode_count=data.get("mode_count"),
        )


@dataclass(frozen=True)
class NormalParameters:
    """Distinct covariance eigenvalues (decreasing), their multiplicities and
    the norm of the displacement inside each eigenspace."""

    eigenvalues: np.ndarray
    multiplicities: np.ndarray
    displacement_norms: np.ndarray
    tol_distinct: float = field(default=TOL_DISTINCT, compare=False)

    def __post_init__(self):
        lam = np.atleast_1d(np.array(self.eigenvalues, dtype=float))
        mult_raw = np.atleast_1d(np.array(self.multiplicities))
        c = np.atleast_1d(np.array(self.displacement_norms, dtype=float))
        if not (lam.ndim == mult_raw.ndim == c.ndim == 1 and len(lam) == len(mult_raw) == len(c)):
            raise InvalidParameters("eigenvalues, multiplicities and displacement_norms differ in length")
        if len(lam) == 0:
            raise InvalidParameters("at least one eigenvalue is required")
        if not (np.all(np.isfinite(lam)) and np.all(np.isfinite(c))):
            raise NonFiniteInput("normal parameters must be finite")
        if np.any(mult_raw != np.round(mult_raw)) or np.any(mult_raw < 1):
            raise InvalidParameters("multiplicities must be positive integers")
        mult = mult_raw.astype(int)
        if mult.sum() % 2:
            raise InvalidParameters("multiplicities must sum to an even number 2S")
        if np.any(lam <= 0):
            raise InvalidParameters("eigenvalues must be positive")
        if np.any(c < 0):
            raise InvalidParameters("displacement norms must be non-negative")
        if len(lam) > 1:
            gaps = (lam[:-1] - lam[1:]) / lam[:-1]
            if np.any(gaps <= self.tol_distinct):
                raise InvalidParameters("eigenvalues must be strictly decreasing and distinct")
        object.__setattr__(self, "eigenvalues", _frozen(lam))
        object.__setattr__(self, "multiplicities", _frozen(mult, dtype=int))
        object.__setattr__(self, "displacement_norms", _frozen(c))

    @property
    def mode_count(self):
        return int(self.multiplicities.sum()) // 2

    @property
    def distinct_count(self):
        return len(self.eigenvalues)

    def spectrum(self):
        """Full covariance spectrum, non-increasing, eigenvalues repeated by multiplicity."""
        return np.repeat(self.eigenvalues, self.multiplicities)

    def mean_photon_number(self):
        lam, m, c = self.eigenvalues, self.multiplicities, self.displacement_norms
        return float(np.sum(m * (lam - 1.0) / 4.0 + c**2 / 2.0))

    def photon_number_variance(self):
        # from the log-derivative of the photon-number generating function at z = 1
        lam, m, c = self.eigenvalues, self.multiplicities, self.displacement_norms
        beta = (lam - 1.0) / (lam + 1.0)
        omega = (c / (1.0 + lam)) ** 2
        gap = 1.0 - beta
        d1 = np.sum(m * beta / (2 * gap) + 2 * omega / gap**2)
        d2 = np.sum(m * beta**2 / (2 * gap**2) + 4 * omega * beta / gap**3)
        return float(d1 + d2)

    def to_dict(self):
        return {
            "mode_count": self.mode_count,
            "eigenvalues": self.eigenvalues.tolist(),
            "multiplicities": self.multiplicities.tolist(),
            "displacement_norms": self.displacement_norms.tolist(),
        }

    @classmethod
    def from_dict(cls, data):
        out = cls(data["eigenvalues"], data["multiplicities"], data["displacement_norms"])
        if "mode_count" in data and int(data["mode_count"]) != out.mode_count:
            raise DimensionMismatch("mode_count disagrees with the multiplicities")
        return out


@dataclass(frozen=True)
class ModifiedNormalParameters:
    lambda_prime: np.ndarray
    c_prime: np.ndarray
    multiplicities: np.ndarray

    def __post_init__(self):
        lp = np.atleast_1d(np.array(self.lambda_prime, dtype=float))
        cp = np.atleast_1d(np.array(self.c_prime, dtype=float))
        m = np.atleast_1d(np.array(self.multiplicities, dtype=int))
        if not (len(lp) == len(cp) == len(m)):
            raise InvalidParameters("field lengths differ")
        if np.any(cp < 0):
            raise InvalidParameters("c_prime must be non-negative")
        object.__setattr__(self, "lambda_prime", _frozen(lp))
        object.__setattr__(self, "c_prime", _frozen(cp))
        object.__setattr__(self, "multiplicities", _frozen(m, dtype=int))

    @property
    def mode_count(self):
        return int(self.multiplicities.sum()) // 2


@dataclass(frozen=True)
class CanonicalParameters:
    thermal: np.ndarray
    squeezing: np.ndarray

    def is_pure(self, tol=TOL_PURITY):
        return bool(np.all(np.abs(self.thermal - 1.0) <= tol))


@dataclass(frozen=True)
class ValidationReport:
    mode: str
    symmetry_defect: float
    min_eigenvalue: float
    min_symplectic_eigenvalue: float
    failure: str = None
    message: str = ""

    @property
    def passed(self):
        return self.failure is None

    def raise_if_failed(self):
        if self.failure is None:
            return self
        exc = {
            "NotSymmetric": NotSymmetric,
            "NotPositiveDefinite": NotPositiveDefinite,
            "Unphysical": Unphysical,
        }[self.failure]
        raise exc(self.message)


def symplectic_form(mode_count):
    return np.kron(np.eye(mode_count), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def symplectic_eigenvalues(covariance):
    cov = np.asarray(covariance, dtype=float)
    omega = symplectic_form(cov.shape[0] // 2)
    vals = np.sort(np.abs(np.linalg.eigvals(1j * omega @ cov)))
    return vals[::2]


def validate_state(spec, mode="mathematical"):
    """Check symmetry, positive definiteness and (in ``"physical"`` mode) the
    uncertainty principle. Returns a report; call ``raise_if_failed`` to turn
    a failure into an exception."""
    if mode not in ("mathematical", "physical"):
        raise ValueError(f"unknown validation mode {mode!r}")
    cov = spec.covariance
    defect = float(np.max(np.abs(cov - cov.T)))
    sym = 0.5 * (cov + cov.T)
    min_eig = float(np.linalg.eigvalsh(sym).min())
    min_sympl = float(symplectic_eigenvalues(sym).min()) if min_eig > 0 else float("nan")
    failure, message = None, ""
    if defect > TOL_SYM:
        failure, message = "NotSymmetric", f"max |G_kl - G_lk| = {defect:.3e} exceeds {TOL_SYM:g}"
    elif min_eig <= 0:
        failure, message = "NotPositiveDefinite", f"minimum eigenvalue {min_eig:.6g} is not positive"
    elif mode == "physical" and min_sympl < 1 - TOL_SYMPLECTIC:
        failure, message = "Unphysical", f"minimum symplectic eigenvalue {min_sympl:.6g} < 1"
    return ValidationReport(mode, defect, min_eig, min_sympl, failure, message)


def _cluster_bounds(values, tol):
    """Split a decreasing sequence where the relative gap exceeds ``tol``."""
    bounds = [0]
    for i in range(1, len(values)):
        gap = (values[i - 1] - values[i]) / max(abs(values[i - 1]), abs(values[i]))
        if tol / 2 <= gap <= 2 * tol:
            raise ClusterAmbiguity(
                f"relative eigenvalue gap {gap:.3e} lies within a factor 2 of tol_distinct={tol:g}"
            )
        if gap > tol:
            bounds.append(i)
    bounds.append(len(values))
    return list(zip(bounds[:-1], bounds[1:]))


def extract_normal_parameters(spec, tol_distinct=TOL_DISTINCT):
    validate_state(spec, "mathematical").raise_if_failed()
    cov = 0.5 * (spec.covariance + spec.covariance.T)
    vals, vecs = np.linalg.eigh(cov)
    residual = np.linalg.norm(cov @ vecs - vecs * vals)
    if residual > EIG_RESIDUAL * max(np.linalg.norm(cov), 1.0):
        raise NumericalInstability(f"eigendecomposition residual {residual:.3e} too large")
    order = np.argsort(vals)[::-1]
    vals, vecs = vals[order], vecs[:, order]
    projected = vecs.T @ spec.displacement
    lam, mult, norms = [], [], []
    for lo, hi in _cluster_bounds(vals, tol_distinct):
        lam.append(vals[lo:hi].mean())
        mult.append(hi - lo)
        norms.append(np.linalg.norm(projected[lo:hi]))
    return NormalParameters(lam, mult, norms, tol_distinct=tol_distinct)


def to_modified(params):
    lam = params.eigenvalues
    return ModifiedNormalParameters(
        lambda_prime=lam / (1.0 + lam),
        c_prime=(params.displacement_norms / lam) ** 2,
        multiplicities=params.multiplicities,
    )


def from_modified(modified):
    lp = modified.lambda_prime
    if np.any(~np.isfinite(lp)) or np.any(lp <= 0) or np.any(lp >= 1):
        raise LambdaPrimeOutOfRange(f"lambda' values {lp.tolist()} must lie in (0, 1)")
    lam = lp / (1.0 - lp)
    return NormalParameters(lam, modified.multiplicities, lam * np.sqrt(modified.c_prime))


def canonical_parameters(spectrum):
    """Canonical thermal and squeezing parameters, pairing the k-th largest
    eigenvalue with the k-th smallest.

    A mode with thermal parameter tau squeezed by exp(xi * sigma_z) on both
    sides has covariance eigenvalues tau * exp(+-2 xi), hence
    ``tau = sqrt(g_big * g_small)`` and ``xi = log(g_big / g_small) / 4``.
    """
    gam = np.asarray(spectrum, dtype=float)
    if gam.ndim != 1 or len(gam) % 2:
        raise OddLength(f"spectrum length {gam.size} is not even")
    if np.any(gam <= 0):
        raise InvalidParameters("spectrum entries must be positive")
    if np.any(np.diff(gam) > 0):
        raise InvalidParameters("spectrum must be sorted non-increasing")
    s = len(gam) // 2
    big, small = gam[:s], gam[::-1][:s]
    return CanonicalParameters(thermal=np.sqrt(big * small), squeezing=0.25 * np.log(big / small))


def random_orthogonal(dim, rng):
    q, r = np.linalg.qr(rng.standard_normal((dim, dim)))
    return q * np.sign(np.diag(r))
