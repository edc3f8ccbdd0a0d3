"""Bessel functions of integer order and the complex log-gamma function.

Both are evaluated directly rather than through a special-function library so
the stability range is explicit: Miller's downward recurrence covers
|order| <= 200 and |x| <= 100, and the Lanczos approximation covers the strip
used by the Stokes phase.
"""
from __future__ import annotations

import cmath
import math
import numbers

import numpy as np
import numpy.typing as npt

from app.errors import DomainError

MAX_ORDER = 200
MAX_ARGUMENT = 100.0

# ascending series is used below this |x|
_SERIES_LIMIT = 0.5
_RESCALE = 1e250

_LANCZOS_G = 7
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _check_order(order) -> int:
    if isinstance(order, bool) or not isinstance(order, numbers.Integral):
        if isinstance(order, numbers.Real) and float(order).is_integer():
            order = int(order)
        else:
            raise DomainError(f"Bessel order must be an integer, got {order!r}")
    order = int(order)
    if abs(order) > MAX_ORDER:
        raise DomainError(f"Bessel order {order} outside |order| <= {MAX_ORDER}")
    return order


def _check_argument(x) -> float:
    x = float(x)
    if not math.isfinite(x) or abs(x) > MAX_ARGUMENT:
        raise DomainError(f"Bessel argument {x} outside |x| <= {MAX_ARGUMENT}")
    return x


def _series_orders(n_max: int, ax: float) -> npt.NDArray[np.float64]:
    half = 0.5 * ax
    q = half * half
    log_half = math.log(half)
    out = np.zeros(n_max + 1)
    for n in range(n_max + 1):
        log_first = n * log_half - math.lgamma(n + 1)
        if log_first < -745.0:
            break  # every higher order underflows as well
        term = math.exp(log_first)
        total = term
        for k in range(1, 40):
            term *= -q / (k * (n + k))
            total += term
            if abs(term) < 1e-17 * abs(total):
                break
        out[n] = total
    return out


def _miller_orders(n_max: int, ax: float) -> npt.NDArray[np.float64]:
    top = max(n_max, int(ax))
    start = top + 30 + int(math.sqrt(40.0 * top))
    start += start % 2
    vals = np.zeros(start + 2)
    vals[start] = 1.0
    for k in range(start, 0, -1):
        vals[k - 1] = (2.0 * k / ax) * vals[k] - vals[k + 1]
        if abs(vals[k - 1]) > _RESCALE:
            vals[k - 1:] /= _RESCALE
    norm = vals[0] + 2.0 * vals[2:start + 1:2].sum()
    return vals[: n_max + 1] / norm


def bessel_j_orders(n_max: int, x: float) -> npt.NDArray[np.float64]:
    """J_0(x) .. J_{n_max}(x) from one recurrence pass."""
    n_max = _check_order(n_max)
    if n_max < 0:
        raise DomainError("n_max must be non-negative")
    x = _check_argument(x)
    ax = abs(x)
    if ax == 0.0:
        out = np.zeros(n_max + 1)
        out[0] = 1.0
        return out
    vals = _series_orders(n_max, ax) if ax < _SERIES_LIMIT else _miller_orders(n_max, ax)
    if x < 0:
        vals = vals * np.where(np.arange(n_max + 1) % 2 == 0, 1.0, -1.0)
    return vals


def bessel_j(order: int, x: float) -> float:
    """Bessel function of the first kind J_order(x) for integer order.

    Negative orders use J_{-n}(x) = (-1)^n J_n(x).

    Raises
    ------
    DomainError
        If |order| > 200, |x| > 100, or the order is not an integer.
    """
    order = _check_order(order)
    x = _check_argument(x)
    n = abs(order)
    value = float(bessel_j_orders(n, x)[n])
    if order < 0 and n % 2 == 1:
        value = -value
    return value


def bessel_j_range(orders: npt.ArrayLike, x: float) -> npt.NDArray[np.float64]:
    """J_k(x) for an array of signed integer orders, sharing one recurrence pass."""
    orders = np.asarray(orders, dtype=int)
    if orders.size == 0:
        return np.zeros(0)
    n_max = int(np.abs(orders).max())
    table = bessel_j_orders(n_max, x)
    vals = table[np.abs(orders)]
    odd_negative = (orders < 0) & (np.abs(orders) % 2 == 1)
    return np.where(odd_negative, -vals, vals)


def log_gamma_complex(z: complex) -> complex:
    """Principal branch of log Gamma(z) via the Lanczos approximation (g=7, 9 terms).

    Re z < 0.5 goes through one reflection, Gamma(z)Gamma(1-z) = pi/sin(pi z).
    """
    z = complex(z)
    if z.imag == 0.0 and z.real <= 0.0 and float(z.real).is_integer():
        raise DomainError(f"log Gamma has a pole at z={z.real:g}")
    if z.real < 0.5:
        return cmath.log(math.pi) - cmath.log(cmath.sin(math.pi * z)) - log_gamma_complex(1.0 - z)
    z -= 1.0
    acc = _LANCZOS_COEF[0]
    for i, coef in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += coef / (z + i)
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * cmath.log(t) - t + cmath.log(acc)


def arg_gamma(z: complex) -> float:
    """arg Gamma(z), taken continuously from log Gamma."""
    return log_gamma_complex(z).imag
