"""Measurement-error density abstraction.

The contamination law enters every estimator only through its density, the
density's low-order derivatives, and its characteristic function, so those
three evaluations are the whole surface here. Built-in families (Gaussian,
Laplace, Uniform) carry closed forms; custom densities supply callables and
are validated eagerly (normalization, symmetry, nonnegativity).

Characteristic-function convention: cf(t) integrates density(u) * exp(i t u)
over u, which is real and even for the symmetric densities handled here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import quad

from .errors import MissingCFError, UnsupportedDerivativeError

_SQRT_2PI = math.sqrt(2.0 * math.pi)

# Custom densities are validated by quadrature over [-VALIDATION_SPAN*scale,
# +VALIDATION_SPAN*scale]; the mass outside must be below the tolerance.
_VALIDATION_SPAN = 50.0
_VALIDATION_TOL = 1e-6


@dataclass(frozen=True)
class ErrorDensity:
    """A symmetric contamination density with optional derivatives and CF.

    Construct through the classmethods :meth:`gaussian`, :meth:`laplace`,
    :meth:`uniform` or :meth:`custom`; the raw constructor is not part of
    the public surface.

    Attributes
    ----------
    kind : str
        One of ``"gaussian"``, ``"laplace"``, ``"uniform"``, ``"custom"``.
    scale : float
        sigma, the Laplace scale, or the uniform half-width; for custom
        densities a characteristic length used in validation windows.
    cf_decay : float or None
        Polynomial decay exponent of the CF (|cf(t)| ~ |t|**-cf_decay), when
        that decay model applies. Laplace carries 2.0; Gaussian decays
        faster than any polynomial and Uniform's CF oscillates through
        zero, so both carry None.
    """

    kind: str
    scale: float
    cf_decay: Optional[float] = None
    _pdf: Optional[Callable] = None
    _pdf_deriv: Optional[Callable] = None
    _cf: Optional[Callable] = None

    # -- constructors ------------------------------------------------------

    @classmethod
    def gaussian(cls, sigma: float) -> "ErrorDensity":
        if not sigma > 0:
            raise ValueError(f"sigma must be positive, got {sigma}")
        return cls(kind="gaussian", scale=float(sigma))

    @classmethod
    def laplace(cls, b: float) -> "ErrorDensity":
        if not b > 0:
            raise ValueError(f"scale must be positive, got {b}")
        return cls(kind="laplace", scale=float(b), cf_decay=2.0)

    @classmethod
    def uniform(cls, half_width: float) -> "ErrorDensity":
        if not half_width > 0:
            raise ValueError(f"half-width must be positive, got {half_width}")
        return cls(kind="uniform", scale=float(half_width))

    @classmethod
    def custom(
        cls,
        pdf: Callable,
        *,
        deriv: Optional[Callable] = None,
        cf: Optional[Callable] = None,
        cf_decay: Optional[float] = None,
        scale: float = 1.0,
    ) -> "ErrorDensity":
        """Wrap a user density.

        Parameters
        ----------
        pdf : callable
            Vectorized density ``pdf(u)``.
        deriv : callable, optional
            Derivative evaluator ``deriv(u, order)`` for order >= 1.
        cf : callable, optional
            Characteristic function ``cf(t)`` (real-valued).
        cf_decay : float, optional
            Polynomial CF decay exponent; required for the density to
            participate in Fourier-cutoff selection.
        scale : float
            Characteristic length; validation integrates over
            ``50 * scale`` on each side.
        """
        if not scale > 0:
            raise ValueError(f"scale must be positive, got {scale}")
        d = cls(
            kind="custom",
            scale=float(scale),
            cf_decay=cf_decay,
            _pdf=pdf,
            _pdf_deriv=deriv,
            _cf=cf,
        )
        d._validate_custom()
        return d

    def _validate_custom(self):
        span = _VALIDATION_SPAN * self.scale
        probe = np.linspace(-span, span, 257)
        vals = np.asarray(self._pdf(probe), dtype=float)
        if np.any(vals < 0):
            raise ValueError("custom density takes negative values")
        if not np.allclose(vals, np.asarray(self._pdf(-probe), dtype=float)):
            raise ValueError("custom density is not symmetric")
        mass, _ = quad(self._pdf, -span, span, limit=400)
        if abs(mass - 1.0) > _VALIDATION_TOL:
            raise ValueError(
                f"custom density integrates to {mass:.8f}, not 1 within {_VALIDATION_TOL}"
            )

    # -- evaluation --------------------------------------------------------

    def pdf(self, u):
        """Density value at ``u`` (scalar or array). Total function.

        The uniform density takes the boundary value 1/(2a) at |u| == a, so
        ratio estimators stay well-defined when an offset lands exactly on
        the support edge.
        """
        u = np.asarray(u, dtype=float)
        if self.kind == "gaussian":
            s = self.scale
            out = np.exp(-0.5 * (u / s) ** 2) / (s * _SQRT_2PI)
        elif self.kind == "laplace":
            b = self.scale
            out = np.exp(-np.abs(u) / b) / (2.0 * b)
        elif self.kind == "uniform":
            a = self.scale
            out = np.where(np.abs(u) <= a, 1.0 / (2.0 * a), 0.0)
        else:
            out = np.asarray(self._pdf(u), dtype=float)
        return out if out.ndim else float(out)

    def pdf_derivative(self, u, order: int = 1):
        """Derivative of the density at ``u``, order in {0, 1, 2}.

        The Laplace first derivative at u == 0 is defined as 0 (midpoint of
        the one-sided limits); the value is excluded from gradient checks.

        Raises
        ------
        UnsupportedDerivativeError
            For the uniform density with order >= 1, or a custom density
            without a supplied derivative.
        """
        if order not in (0, 1, 2):
            raise UnsupportedDerivativeError(f"order must be 0, 1 or 2, got {order}")
        if order == 0:
            return self.pdf(u)
        u = np.asarray(u, dtype=float)
        if self.kind == "gaussian":
            s2 = self.scale**2
            f = np.asarray(self.pdf(u))
            out = -(u / s2) * f if order == 1 else (u**2 / s2 - 1.0) / s2 * f
        elif self.kind == "laplace":
            b = self.scale
            f = np.asarray(self.pdf(u))
            if order == 1:
                out = np.where(u == 0, 0.0, -np.sign(u) * f / b)
            else:
                out = f / b**2
        elif self.kind == "uniform":
            raise UnsupportedDerivativeError("uniform density is not differentiable")
        else:
            if self._pdf_deriv is None:
                raise UnsupportedDerivativeError(
                    "custom density was built without a derivative"
                )
            out = np.asarray(self._pdf_deriv(u, order), dtype=float)
        return out if out.ndim else float(out)

    def cf(self, t):
        """Characteristic function at ``t`` (real-valued, even, cf(0) == 1).

        Raises
        ------
        MissingCFError
            For a custom density built without a CF.
        """
        t = np.asarray(t, dtype=float)
        if self.kind == "gaussian":
            out = np.exp(-0.5 * (self.scale * t) ** 2)
        elif self.kind == "laplace":
            out = 1.0 / (1.0 + (self.scale * t) ** 2)
        elif self.kind == "uniform":
            # sin(at)/(at) with the t == 0 limit; np.sinc(x) = sin(pi x)/(pi x)
            out = np.sinc(self.scale * t / np.pi)
        else:
            if self._cf is None:
                raise MissingCFError("custom density was built without a CF")
            out = np.asarray(self._cf(t), dtype=float)
        return out if out.ndim else float(out)

    @property
    def variance(self) -> float:
        """Variance of the error law (built-in kinds only)."""
        if self.kind == "gaussian":
            return self.scale**2
        if self.kind == "laplace":
            return 2.0 * self.scale**2
        if self.kind == "uniform":
            return self.scale**2 / 3.0
        raise ValueError("variance is not tracked for custom densities")

    def describe(self) -> str:
        return f"{self.kind}:{self.scale:g}"
