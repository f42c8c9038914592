"""Flux models, entropy pairs and closed-form reference solutions.

A :class:`FluxModel` bundles the flux ``f``, its derivative ``f'`` and a few
oracles the solver and the audits need: extrema of the directional flux
``f(u) . n`` over a state interval (exact Godunov fluxes), interval bounds
on the wave speed ``|f'(u) . n|`` (stability and dissipation coefficients)
and the monotone/antitone antiderivative split of ``f' . n`` (flux
splitting).  Shipped fluxes provide closed forms; hand-built models fall
back to sampling plus vectorized golden-section refinement.

Sign convention: ``sgn(0) = 0`` throughout, which ``np.sign`` honors.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "FluxModel",
    "EntropyPair",
    "ReferenceSolution",
    "make_flux",
    "kruzkov_pair",
    "reference",
]

FLUX_NAMES = ("burgers", "linear_advection", "buckley_leverett", "rotated_burgers_2d")
CONVEXITY_CLASSES = ("strictly-convex", "linear", "nonconvex")

_GOLDEN_SAMPLES = 33
_GOLDEN_ITERS = 70  # shrinks a bracket by ~0.618**70 ~ 4e-15 of its width


def _dot_normals(vec: np.ndarray, n: np.ndarray) -> np.ndarray:
    """Contract a (..., d) field with normals, broadcasting trailing axes.

    ``vec`` has shape S + (d,), ``n`` has shape B + (d,) where B is a prefix
    of S; missing axes of ``n`` are inserted before the component axis.
    """
    n = np.asarray(n, dtype=float)
    while n.ndim < vec.ndim:
        n = np.expand_dims(n, -2)
    return (vec * n).sum(axis=-1)


def _golden_min(fun, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Vectorized golden-section minimum of ``fun`` on brackets [lo, hi]."""
    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    a, b = lo.astype(float).copy(), hi.astype(float).copy()
    for _ in range(_GOLDEN_ITERS):
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        shrink_right = fun(c) < fun(d)
        b = np.where(shrink_right, d, b)
        a = np.where(shrink_right, a, c)
    mid = 0.5 * (a + b)
    return np.minimum(fun(mid), np.minimum(fun(lo), fun(hi)))


def _aligned_normals(n, like: np.ndarray) -> np.ndarray:
    """Broadcast normals against a state array, flattened to (N, dim)."""
    n = np.asarray(n, dtype=float)
    like = np.asarray(like)
    while n.ndim < like.ndim + 1:
        n = np.expand_dims(n, -2)
    n = np.broadcast_to(n, like.shape + n.shape[-1:])
    return n.reshape(-1, n.shape[-1])


def _sampled_extremum(f_vec, nf: np.ndarray, lo: np.ndarray, hi: np.ndarray,
                      which: str) -> np.ndarray:
    """Extremum of ``f_vec(.) . n`` on [lo, hi], elementwise.

    Samples each interval, brackets every interior local extremum and
    polishes it by golden-section search.  ``f_vec`` maps states of shape S
    to vectors of shape S + (dim,); ``nf`` holds one normal per flattened
    element of ``lo``.
    """
    sign = 1.0 if which == "min" else -1.0
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    shape = lo.shape
    lo_f, hi_f = lo.ravel(), hi.ravel()
    tau = np.linspace(0.0, 1.0, _GOLDEN_SAMPLES)
    grid = lo_f[:, None] + (hi_f - lo_f)[:, None] * tau[None, :]
    vals = sign * (f_vec(grid) * nf[:, None, :]).sum(axis=-1)
    best = vals.min(axis=1)

    interior = vals[:, 1:-1]
    is_dip = (interior <= vals[:, :-2]) & (interior <= vals[:, 2:])
    rows, cols = np.nonzero(is_dip)
    bl = grid[rows, cols]      # sample left of the dip
    bh = grid[rows, cols + 2]  # sample right of the dip
    # a minimum can also hide in an edge subinterval without forming a
    # sampled dip; always polish both edges
    edges = np.arange(lo_f.size)
    rows = np.concatenate([rows, edges, edges])
    bl = np.concatenate([bl, grid[:, 0], grid[:, -2]])
    bh = np.concatenate([bh, grid[:, 1], grid[:, -1]])
    nd = nf[rows]
    refined = _golden_min(
        lambda x: sign * (f_vec(x) * nd).sum(axis=-1), bl, bh)
    np.minimum.at(best, rows, refined)
    return (sign * best).reshape(shape)


@dataclass(frozen=True)
class FluxModel:
    """Scalar conservation law flux with solver-facing oracles.

    ``f`` maps states of shape S to flux vectors of shape S + (dim,);
    ``df`` is its componentwise derivative with the same shape contract.
    The three optional callables install closed forms for the oracles;
    when absent, generic sampled routines are used (``split_fn`` has no
    generic fallback because flux splitting must be exact to keep the
    entropy audits honest).
    """

    name: str
    dim: int
    convexity_class: str
    f: Callable
    df: Callable
    extremum_fn: Callable | None = None   # (lo, hi, n, which) -> extremum of f.n
    speed_fn: Callable | None = None      # (lo, hi, n) -> max |f'.n| on [lo, hi]
    split_fn: Callable | None = None      # (u, n) -> (F_plus, F_minus)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("flux dimension must be at least 1")
        if self.convexity_class not in CONVEXITY_CLASSES:
            raise ValueError(f"unknown convexity class {self.convexity_class!r}")

    def fn(self, u, n) -> np.ndarray:
        """Directional flux ``f(u) . n``."""
        return _dot_normals(self.f(np.asarray(u, dtype=float)), n)

    def dfn(self, u, n) -> np.ndarray:
        """Directional wave speed ``f'(u) . n``."""
        return _dot_normals(self.df(np.asarray(u, dtype=float)), n)

    def interval_extremum(self, a, b, n, which: str = "min") -> np.ndarray:
        """Extremum of ``f(.) . n`` over the closed interval between a and b."""
        if which not in ("min", "max"):
            raise ValueError("which must be 'min' or 'max'")
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        if self.extremum_fn is not None:
            return self.extremum_fn(lo, hi, n, which)
        return _sampled_extremum(self.f, _aligned_normals(n, lo), lo, hi,
                                 which)

    def max_wave_speed(self, a, b, n) -> np.ndarray:
        """Upper bound (sharp) of ``|f'(.) . n|`` over the interval hull."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        lo, hi = np.minimum(a, b), np.maximum(a, b)
        if self.speed_fn is not None:
            return self.speed_fn(lo, hi, n)
        nf = _aligned_normals(n, lo)
        top = _sampled_extremum(self.df, nf, lo, hi, "max")
        bot = _sampled_extremum(self.df, nf, lo, hi, "min")
        return np.maximum(np.abs(top), np.abs(bot))

    def split_fluxes(self, u, n) -> tuple[np.ndarray, np.ndarray]:
        """Antiderivatives from 0 of the positive/negative parts of f'.n."""
        if self.split_fn is None:
            raise NotImplementedError(
                f"flux {self.name!r} has no exact flux splitting; "
                "engquist_osher needs one")
        return self.split_fn(np.asarray(u, dtype=float), n)


def _outer(u: np.ndarray, vec: np.ndarray) -> np.ndarray:
    return np.asarray(u, dtype=float)[..., None] * vec


def _direction_component(n, vec) -> np.ndarray:
    n = np.asarray(n, dtype=float)
    return (n * vec).sum(axis=-1)


def _match_trailing(c: np.ndarray, like: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=float)
    while c.ndim < np.ndim(like):
        c = np.expand_dims(c, -1)
    return c


def _quadratic_flux(name: str, direction: np.ndarray) -> FluxModel:
    direction = np.asarray(direction, dtype=float)

    def f(u):
        return _outer(0.5 * np.asarray(u, dtype=float) ** 2, direction)

    def df(u):
        return _outer(u, direction)

    def extremum(lo, hi, n, which):
        c = _match_trailing(_direction_component(n, direction), lo)
        straddles = (lo <= 0.0) & (hi >= 0.0)
        m2 = np.where(straddles, 0.0, np.minimum(lo * lo, hi * hi))
        big2 = np.maximum(lo * lo, hi * hi)
        fmin = 0.5 * np.where(c >= 0.0, c * m2, c * big2)
        fmax = 0.5 * np.where(c >= 0.0, c * big2, c * m2)
        return fmin if which == "min" else fmax

    def speed(lo, hi, n):
        c = _match_trailing(_direction_component(n, direction), lo)
        return np.abs(c) * np.maximum(np.abs(lo), np.abs(hi))

    def split(u, n):
        c = _match_trailing(_direction_component(n, direction), u)
        cp, cm = np.maximum(c, 0.0), np.minimum(c, 0.0)
        up2 = np.maximum(u, 0.0) ** 2
        um2 = np.minimum(u, 0.0) ** 2
        return 0.5 * (cp * up2 + cm * um2), 0.5 * (cm * up2 + cp * um2)

    return FluxModel(
        name=name, dim=len(direction), convexity_class="strictly-convex",
        f=f, df=df, extremum_fn=extremum, speed_fn=speed, split_fn=split,
    )


def _linear_flux(velocity: np.ndarray) -> FluxModel:
    velocity = np.asarray(velocity, dtype=float)

    def f(u):
        return _outer(u, velocity)

    def df(u):
        u = np.asarray(u, dtype=float)
        return np.broadcast_to(velocity, u.shape + velocity.shape).copy()

    def extremum(lo, hi, n, which):
        s = _match_trailing(_direction_component(n, velocity), lo)
        fmin = np.where(s >= 0.0, s * lo, s * hi)
        fmax = np.where(s >= 0.0, s * hi, s * lo)
        return fmin if which == "min" else fmax

    def speed(lo, hi, n):
        s = _direction_component(n, velocity)
        return np.broadcast_to(np.abs(_match_trailing(s, lo)), np.shape(lo)).copy()

    def split(u, n):
        s = _match_trailing(_direction_component(n, velocity), u)
        return np.maximum(s, 0.0) * u, np.minimum(s, 0.0) * u

    return FluxModel(
        name="linear_advection", dim=len(velocity), convexity_class="linear",
        f=f, df=df, extremum_fn=extremum, speed_fn=speed, split_fn=split,
    )


def _buckley_leverett_flux() -> FluxModel:
    def frac(u):
        u = np.asarray(u, dtype=float)
        return u * u / (u * u + (1.0 - u) ** 2)

    def dfrac(u):
        u = np.asarray(u, dtype=float)
        den = u * u + (1.0 - u) ** 2
        return 2.0 * u * (1.0 - u) / (den * den)

    def f(u):
        return frac(u)[..., None]

    def df(u):
        return dfrac(u)[..., None]

    def split(u, n):
        # the derivative is positive exactly on (0, 1), so the monotone part
        # of the flux is frac clamped to [0, 1] (frac(0) = 0)
        c = _match_trailing(_direction_component(n, np.ones(1)), u)
        cp, cm = np.maximum(c, 0.0), np.minimum(c, 0.0)
        rising = frac(np.clip(u, 0.0, 1.0))
        falling = frac(u) - rising
        return cp * rising + cm * falling, cm * rising + cp * falling

    return FluxModel(
        name="buckley_leverett", dim=1, convexity_class="nonconvex",
        f=f, df=df, split_fn=split,
    )


def make_flux(name: str, **params) -> FluxModel:
    """Construct a shipped flux model by name.

    * ``burgers``: f(u) = u^2 / 2 in one dimension.
    * ``linear_advection``: f(u) = a u; pass ``a`` as a scalar or sequence.
    * ``buckley_leverett``: the nonconvex two-phase fractional flow flux.
    * ``rotated_burgers_2d``: f(u) = (cos angle, sin angle) u^2 / 2;
      pass ``angle`` in radians.
    """
    if name == "burgers":
        _reject_params(name, params)
        return _quadratic_flux("burgers", np.ones(1))
    if name == "linear_advection":
        a = params.pop("a", 1.0)
        _reject_params(name, params)
        a = np.atleast_1d(np.asarray(a, dtype=float))
        return _linear_flux(a)
    if name == "buckley_leverett":
        _reject_params(name, params)
        return _buckley_leverett_flux()
    if name == "rotated_burgers_2d":
        angle = float(params.pop("angle", np.pi / 6.0))
        _reject_params(name, params)
        return _quadratic_flux(
            "rotated_burgers_2d", np.array([np.cos(angle), np.sin(angle)]))
    raise ValueError(f"unknown flux {name!r}; shipped fluxes: {FLUX_NAMES}")


def _reject_params(name, params):
    if params:
        raise ValueError(f"flux {name!r} does not accept {sorted(params)}")


# ---------------------------------------------------------------------------
# entropy pairs

@dataclass(frozen=True)
class EntropyPair:
    """Convex entropy with its compatible flux, q' = eta' f'."""

    eta: Callable   # states -> entropy values, same shape
    q: Callable     # states -> entropy flux, shape + (dim,)
    k: float | None = None


def kruzkov_pair(flux: FluxModel, k: float) -> EntropyPair:
    """The entropy |u - k| with flux sgn(u - k) (f(u) - f(k))."""
    k = float(k)
    fk = flux.f(np.asarray(k))

    def eta(u):
        return np.abs(np.asarray(u, dtype=float) - k)

    def q(u):
        u = np.asarray(u, dtype=float)
        return np.sign(u - k)[..., None] * (flux.f(u) - fk)

    return EntropyPair(eta=eta, q=q, k=k)


# ---------------------------------------------------------------------------
# reference solutions

@dataclass(frozen=True)
class ReferenceSolution:
    """Exact solution u(t, x) with an explicit validity horizon."""

    name: str
    flux: FluxModel
    t_max: float
    evaluate: Callable  # (t, x: (m, dim)) -> (m,)

    def __call__(self, t: float, x: np.ndarray) -> np.ndarray:
        t = float(t)
        if t < 0.0 or t > self.t_max * (1.0 + 1e-12):
            raise ValueError(
                f"reference {self.name!r} is valid on [0, {self.t_max}], got t={t}")
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            x = x[:, None]
        return self.evaluate(t, x)

    def initial(self, x: np.ndarray) -> np.ndarray:
        return self(0.0, x)


def _require(cond: bool, msg: str):
    if not cond:
        raise ValueError(msg)


def reference(name: str, flux: FluxModel, **params) -> ReferenceSolution:
    """Closed-form references, validated against the flux they solve.

    * ``riemann_shock``: entropy shock for 1-D Burgers (default states 1, 0).
    * ``riemann_rarefaction``: centered fan for 1-D Burgers (default -1, 1).
    * ``smooth_sine_preshock``: smooth Burgers solution by characteristics,
      valid strictly before gradient blowup.
    * ``advected_profile``: translation of a profile by a linear flux.
    """
    if name == "riemann_shock":
        _require(flux.name in ("burgers",) and flux.dim == 1,
                 "riemann_shock needs the 1-D burgers flux")
        ul = float(params.pop("ul", 1.0))
        ur = float(params.pop("ur", 0.0))
        x0 = float(params.pop("x0", 0.0))
        _reject_params(name, params)
        _require(ul > ur, "riemann_shock needs ul > ur")
        s = float(flux.fn(ul, np.ones(1)) - flux.fn(ur, np.ones(1))) / (ul - ur)

        def evaluate(t, x):
            return np.where(x[:, 0] < x0 + s * t, ul, ur)

        return ReferenceSolution(name, flux, np.inf, evaluate)

    if name == "riemann_rarefaction":
        _require(flux.name in ("burgers",) and flux.dim == 1,
                 "riemann_rarefaction needs the 1-D burgers flux")
        ul = float(params.pop("ul", -1.0))
        ur = float(params.pop("ur", 1.0))
        x0 = float(params.pop("x0", 0.0))
        _reject_params(name, params)
        _require(ul < ur, "riemann_rarefaction needs ul < ur")

        def evaluate(t, x):
            xi = x[:, 0] - x0
            if t <= 0.0:
                return np.where(xi < 0.0, ul, ur)
            return np.clip(xi / t, ul, ur)

        return ReferenceSolution(name, flux, np.inf, evaluate)

    if name == "smooth_sine_preshock":
        _require(flux.name in ("burgers",) and flux.dim == 1,
                 "smooth_sine_preshock needs the 1-D burgers flux")
        mean = float(params.pop("mean", 0.5))
        amplitude = float(params.pop("amplitude", 0.25))
        _reject_params(name, params)
        _require(amplitude > 0.0, "amplitude must be positive")
        t_star = 1.0 / (2.0 * np.pi * amplitude)

        def u0(y):
            return mean + amplitude * np.sin(2.0 * np.pi * y)

        def du0(y):
            return 2.0 * np.pi * amplitude * np.cos(2.0 * np.pi * y)

        def evaluate(t, x):
            # solve u = u0(x - u t) by Newton; safe before blowup
            y = x[:, 0]
            u = u0(y)
            for _ in range(100):
                g = u - u0(y - u * t)
                dg = 1.0 + t * du0(y - u * t)
                du = g / dg
                u = u - du
                if np.abs(du).max() < 1e-15:
                    break
            return u

        return ReferenceSolution(name, flux, 0.95 * t_star, evaluate)

    if name == "advected_profile":
        _require(flux.convexity_class == "linear",
                 "advected_profile needs a linear flux")
        velocity = flux.df(np.zeros(()))
        profile = params.pop("profile", None)
        _reject_params(name, params)
        if profile is None:
            def profile(x):
                return np.sin(2.0 * np.pi * x[..., 0])

        def evaluate(t, x):
            return profile(x - velocity * t)

        return ReferenceSolution(name, flux, np.inf, evaluate)

    raise ValueError(f"unknown reference {name!r}")
