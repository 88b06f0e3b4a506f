"""Odd polynomial approximation to sgn on [-2,2] and the shifted step filter.

Construction: Chebyshev series of erf(kappa*x), with kappa chosen so the
erf is within eps'/2 of sgn outside (-delta', delta'), truncated at the
smallest odd degree whose coefficient tail is <= eps'/10, rescaled so the
grid maximum of |P| is 1 - 1e-7, then certified on a dense grid. The
construction retries deterministically (degree bumps, then a kappa bump)
if certification fails, and gives up past the degree cap.

Monomial conversion is exponentially ill-conditioned in the degree, so it
runs in mpmath extended precision and self-checks by reconstruction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import mpmath
import numpy as np

from .errors import DegreeOverflow, DomainError, PrecisionError, ValidationError

DEGREE_CAP_DEFAULT = 200
GRID_POINTS_DEFAULT = 100_000
CERT_MARGIN = 1e-8
NORM_TARGET = 1.0 - 1e-7
C_CAP = 10.0
_COEFF_NODES = 2048


def _erfinv(y: float) -> float:
    """Inverse of math.erf on (0, 1) by bisection."""
    if not 0.0 < y < 1.0:
        raise DomainError(f"erfinv argument must be in (0,1), got {y}")
    lo, hi = 0.0, 8.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if math.erf(mid) < y:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _cheb_series_erf(kappa: float, n_coeffs: int) -> np.ndarray:
    """Chebyshev coefficients (basis T_j(x/2) on [-2,2]) of erf(kappa*x)."""
    k = np.arange(_COEFF_NODES)
    theta = (k + 0.5) * math.pi / _COEFF_NODES
    y = np.cos(theta)
    fy = np.array([math.erf(2.0 * kappa * yi) for yi in y])
    j = np.arange(n_coeffs)
    basis = np.cos(np.outer(j, theta))
    c = (2.0 / _COEFF_NODES) * basis @ fy
    c[0] *= 0.5
    c[::2] = 0.0  # erf is odd; kill quadrature dust on even terms
    return c


def _chebval2(x, coeffs) -> np.ndarray:
    """Evaluate sum_j coeffs[j] T_j(x/2) by Clenshaw in extended precision."""
    y = np.asarray(x, dtype=np.longdouble) * 0.5
    c = np.asarray(coeffs, dtype=np.longdouble)
    b1 = np.zeros_like(y)
    b2 = np.zeros_like(y)
    for j in range(len(c) - 1, 0, -1):
        b1, b2 = c[j] + 2.0 * y * b1 - b2, b1
    return np.asarray(c[0] + y * b1 - b2, dtype=float)


def _cert_grid(grid_points: int) -> np.ndarray:
    uniform = np.linspace(-2.0, 2.0, grid_points)
    cheb = 2.0 * np.cos(np.pi * np.arange(grid_points) / (grid_points - 1))
    return np.concatenate([uniform, cheb])


@dataclass(frozen=True, eq=False)
class SignPolynomial:
    """Odd degree-d polynomial with |P| <= 1 on [-2,2], P ~ sgn outside (-delta', delta')."""

    delta_p: float
    eps_p: float
    degree: int
    cheb: np.ndarray  # coefficients of T_j(x/2), even entries exactly 0
    kappa: float
    c_constant: float  # achieved C in d <= C*log(1/eps')/delta'
    certificate: dict = field(default_factory=dict)

    def __call__(self, x):
        return _chebval2(x, self.cheb)

    def monomial_coefficients(self):
        """Monomial coefficients a_0..a_d as mpmath values, reconstruction-checked."""
        cached = getattr(self, "_monomials", None)
        if cached is not None:
            return cached
        d = self.degree
        with mpmath.workdps(max(60, 2 * d)):
            # S_k(x) = T_k(x/2): S_0 = 1, S_1 = x/2, S_{k+1} = x*S_k - S_{k-1}
            s_prev = [mpmath.mpf(1)]
            s_cur = [mpmath.mpf(0), mpmath.mpf("0.5")]
            acc = [mpmath.mpf(c) for c in np.zeros(d + 1)]
            acc[0] += mpmath.mpf(float(self.cheb[0]))
            if d >= 1:
                for i, v in enumerate(s_cur):
                    acc[i] += mpmath.mpf(float(self.cheb[1])) * v
            for k in range(2, d + 1):
                s_next = [mpmath.mpf(0)] + s_cur  # multiply by x
                for i, v in enumerate(s_prev):
                    s_next[i] -= v
                cj = float(self.cheb[k])
                if cj != 0.0:
                    for i, v in enumerate(s_next):
                        acc[i] += mpmath.mpf(cj) * v
                s_prev, s_cur = s_cur, s_next
            xs = np.linspace(-2.0, 2.0, 501)
            direct = self(xs)
            worst = 0.0
            for xv, dv in zip(xs, direct):
                mono = mpmath.polyval(list(reversed(acc)), mpmath.mpf(float(xv)))
                worst = max(worst, abs(float(mono) - float(dv)))
            if worst > 1e-8:
                raise PrecisionError(
                    f"monomial reconstruction error {worst:.3e} exceeds 1e-8"
                )
            result = list(acc)
        object.__setattr__(self, "_monomials", result)
        return result


def monomial_coefficients(poly: SignPolynomial):
    return poly.monomial_coefficients()


def _certify(coeffs: np.ndarray, delta_p: float, eps_p: float, grid_points: int) -> tuple[bool, dict]:
    grid = _cert_grid(grid_points)
    vals = _chebval2(grid, coeffs)
    max_abs = float(np.max(np.abs(vals)))
    outside = np.abs(grid) >= delta_p
    err = float(np.max(np.abs(vals[outside] - np.sign(grid[outside]))))
    ok = (max_abs <= 1.0 - CERT_MARGIN) and (err <= eps_p - CERT_MARGIN)
    return ok, {
        "grid_points": int(grid.size),
        "max_abs": max_abs,
        "max_sign_error_outside": err,
        "margin": CERT_MARGIN,
    }


def build_sign_poly(
    delta_p: float,
    eps_p: float,
    grid_points: int = GRID_POINTS_DEFAULT,
    degree_cap: int = DEGREE_CAP_DEFAULT,
) -> SignPolynomial:
    """Construct and certify the sign polynomial for (delta', eps')."""
    if not (delta_p > 0.0):
        raise DomainError(f"delta' must be positive, got {delta_p}")
    if not (0.0 < eps_p < 0.5):
        raise DomainError(f"eps' must lie in (0, 1/2), got {eps_p}")

    kappa = _erfinv(1.0 - eps_p / 2.0) / delta_p
    for kappa_bump in range(4):
        n_coeffs = min(2 * degree_cap + 1, _COEFF_NODES // 4)
        series = _cheb_series_erf(kappa, n_coeffs)
        abs_tail = np.cumsum(np.abs(series[::-1]))[::-1]  # abs_tail[j] = sum_{i>=j} |c_i|
        base_d = None
        for d in range(1, degree_cap + 1, 2):
            if d + 1 < len(abs_tail) and abs_tail[d + 1] <= eps_p / 10.0:
                base_d = d
                break
        if base_d is None:
            raise DegreeOverflow(
                f"no odd degree <= {degree_cap} reaches coefficient tail <= eps'/10"
            )
        for d_bump in range(3):
            d = base_d + 2 * d_bump
            if d > degree_cap:
                raise DegreeOverflow(f"degree {d} exceeds cap {degree_cap}")
            coeffs = series[: d + 1].copy()
            grid = _cert_grid(grid_points)
            max_abs = float(np.max(np.abs(_chebval2(grid, coeffs))))
            if max_abs > NORM_TARGET:
                coeffs *= NORM_TARGET / max_abs
            ok, cert = _certify(coeffs, delta_p, eps_p, grid_points)
            if ok:
                c_const = d * delta_p / math.log(1.0 / eps_p)
                if c_const > C_CAP:
                    raise ValidationError(
                        f"achieved degree constant C={c_const:.2f} exceeds the asserted cap {C_CAP}"
                    )
                cert.update(tail=float(abs_tail[d + 1]), kappa=kappa, normalized=max_abs > NORM_TARGET)
                return SignPolynomial(
                    delta_p=float(delta_p),
                    eps_p=float(eps_p),
                    degree=d,
                    cheb=coeffs,
                    kappa=kappa,
                    c_constant=c_const,
                    certificate=cert,
                )
        kappa *= 1.05
    raise DegreeOverflow(
        f"certification failed for (delta'={delta_p}, eps'={eps_p}) within the retry ladder"
    )


@dataclass(frozen=True, eq=False)
class ShiftedFilter:
    """Q_alpha(x) = (1 - P(x - alpha))/2: ~1 below alpha-delta', ~0 above alpha+delta'."""

    alpha: float
    poly: SignPolynomial

    def __post_init__(self):
        if not -1.0 <= self.alpha <= 1.0:
            raise DomainError(f"alpha must lie in [-1,1], got {self.alpha}")

    def eval(self, x: float) -> float:
        t = x - self.alpha
        if not -2.0 <= t <= 2.0:
            raise DomainError(f"x - alpha = {t} outside [-2,2]")
        return float(0.5 * (1.0 - self.poly(t)))

    def eval_array(self, xs: np.ndarray) -> np.ndarray:
        ts = np.asarray(xs, dtype=float) - self.alpha
        if np.any(ts < -2.0) or np.any(ts > 2.0):
            raise DomainError("filter argument outside [-2,2] after shift")
        return 0.5 * (1.0 - self.poly(ts))

    def square_monomials(self):
        """Monomial coefficients (mpmath) of Q_alpha(x)^2, degree 2d, in x."""
        a = self.poly.monomial_coefficients()
        d = self.poly.degree
        with mpmath.workdps(max(60, 2 * d)):
            # q(t) = (1 - P(t))/2 in t, then substitute t = x - alpha by Horner
            q_t = [-ai / 2 for ai in a]
            q_t[0] += mpmath.mpf("0.5")
            alpha = mpmath.mpf(float(self.alpha))
            q_x = [q_t[-1]]
            for j in range(d - 1, -1, -1):
                shifted = [mpmath.mpf(0)] + q_x  # multiply by x
                for i in range(len(q_x)):
                    shifted[i] -= alpha * q_x[i]
                shifted[0] += q_t[j]
                q_x = shifted
            out = [mpmath.mpf(0)] * (2 * d + 1)
            for i, qi in enumerate(q_x):
                if qi == 0:
                    continue
                for j, qj in enumerate(q_x):
                    out[i + j] += qi * qj
        return out


def eval_filter(filt: ShiftedFilter, x: float) -> float:
    return filt.eval(x)
