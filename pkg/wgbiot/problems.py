"""Manufactured Biot problems on the unit square.

Model (Biot-Willis coefficient 1):

  -(lam + mu) grad(div u) - mu lap u + grad p = f
  d/dt (c0 p + div u) - div(kappa grad p)     = g
  u = 0 on the boundary, p = 0 on DP edges, kappa grad p . n = gamma on NP edges

Fields take points of shape (n, 2) and a time t. Vector fields return
(n, 2), gradients of vector fields return (n, 2, 2) with [.., r, s] the
derivative of component r along x_s.
"""

from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .forms import check_coefficients

Field = Callable[[np.ndarray, float], np.ndarray]
Flux = Callable[[np.ndarray, np.ndarray, float], np.ndarray]

PI = np.pi


@dataclass(frozen=True)
class ProblemSpec:
    name: str
    lam: float
    mu: float
    kappa: float
    c0: float
    u: Field
    grad_u: Field
    p: Field
    grad_p: Field
    f: Field
    g: Field
    gamma: Optional[Flux] = None
    final_time: float = 1.0
    pressure_tag: str = "DP"

    def with_final_time(self, final_time: float) -> "ProblemSpec":
        if not final_time > 0.0:
            raise ValueError(f"final time must be positive, got {final_time}")
        return replace(self, final_time=float(final_time))


def _xy(x):
    x = np.asarray(x, dtype=float).reshape(-1, 2)
    return x[:, 0], x[:, 1]


def _vector(a, b):
    return np.stack(np.broadcast_arrays(a, b), axis=-1)


def _matrix(a11, a12, a21, a22):
    return np.stack([_vector(a11, a12), _vector(a21, a22)], axis=-2)


def _flux_from(grad_p: Field, kappa: float) -> Flux:
    def gamma(x, normals, t):
        return kappa * np.einsum("qs,qs->q", grad_p(x, t), np.asarray(normals).reshape(-1, 2))
    return gamma


def problem_poly(lam: float = 1.0, mu: float = 1.0, kappa: float = 1.0, c0: float = 1.0,
                 final_time: float = 1.0) -> ProblemSpec:
    """Polynomial-in-space solution with separate decay rates.

    u = (10 x^2(1-x)^2 y(1-y)(1-2y) e^-t, -10 x(1-x)(1-2x) y^2(1-y)^2 e^-2t)
    p = 10 x^2(1-x)^2 y(1-y)(1-2y) e^-3t
    """
    check_coefficients(lam, mu, kappa, c0)

    def factors(x):
        xs, ys = _xy(x)
        big_x = xs ** 2 * (1 - xs) ** 2
        a = xs * (1 - xs) * (1 - 2 * xs)
        y = ys * (1 - ys) * (1 - 2 * ys)
        big_b = ys ** 2 * (1 - ys) ** 2
        da = 1 - 6 * xs + 6 * xs ** 2
        dy = 1 - 6 * ys + 6 * ys ** 2
        d2a = -6 + 12 * xs
        d2y = -6 + 12 * ys
        return big_x, a, y, big_b, da, dy, d2a, d2y

    def u(x, t):
        big_x, a, y, big_b, *_ = factors(x)
        return _vector(10 * big_x * y * np.exp(-t), -10 * a * big_b * np.exp(-2 * t))

    def grad_u(x, t):
        big_x, a, y, big_b, da, dy, *_ = factors(x)
        e1, e2 = np.exp(-t), np.exp(-2 * t)
        return _matrix(20 * a * y * e1, 10 * big_x * dy * e1,
                       -10 * da * big_b * e2, -20 * a * y * e2)

    def p(x, t):
        big_x, _, y, *_ = factors(x)
        return 10 * big_x * y * np.exp(-3 * t)

    def grad_p(x, t):
        big_x, a, y, _, _, dy, *_ = factors(x)
        e3 = np.exp(-3 * t)
        return _vector(20 * a * y * e3, 10 * big_x * dy * e3)

    def f(x, t):
        big_x, a, y, big_b, da, dy, d2a, d2y = factors(x)
        e1, e2, e3 = np.exp(-t), np.exp(-2 * t), np.exp(-3 * t)
        lm = lam + mu
        f1 = (-lm * 20 * (e1 - e2) * da * y - mu * 10 * e1 * (2 * da * y + big_x * d2y)
              + 20 * e3 * a * y)
        f2 = (-lm * 20 * (e1 - e2) * a * dy + mu * 10 * e2 * (d2a * big_b + 2 * a * dy)
              + 10 * e3 * big_x * dy)
        return _vector(f1, f2)

    def g(x, t):
        big_x, a, y, _, da, _, _, d2y = factors(x)
        e1, e2, e3 = np.exp(-t), np.exp(-2 * t), np.exp(-3 * t)
        return (-30 * c0 * e3 * big_x * y + 20 * a * y * (-e1 + 2 * e2)
                - kappa * 10 * e3 * (2 * da * y + big_x * d2y))

    return ProblemSpec("poly", float(lam), float(mu), float(kappa), float(c0), u, grad_u, p,
                       grad_p, f, g, _flux_from(grad_p, kappa), float(final_time))


def problem_locking(lam: float, mu: float = 1.0, kappa: float = 1.0, c0: float = 1.0,
                    final_time: float = 1.0) -> ProblemSpec:
    """Trigonometric solution whose divergence is O(1/(lam + mu)).

    u = e^-t (sin 2pi y (cos 2pi x - 1) + k sin pi x sin pi y,
              sin 2pi x (1 - cos 2pi y) + k sin pi x sin pi y),  k = 1/(mu + lam)
    p = e^-t sin pi x sin pi y
    """
    check_coefficients(lam, mu, kappa, c0)
    k = 1.0 / (mu + lam)

    def trig(x):
        xs, ys = _xy(x)
        return (np.sin(PI * xs), np.cos(PI * xs), np.sin(PI * ys), np.cos(PI * ys),
                np.sin(2 * PI * xs), np.cos(2 * PI * xs), np.sin(2 * PI * ys), np.cos(2 * PI * ys),
                xs + ys)

    def u(x, t):
        sx, _, sy, _, s2x, c2x, s2y, c2y, _ = trig(x)
        e = np.exp(-t)
        return _vector(e * (s2y * (c2x - 1) + k * sx * sy), e * (s2x * (1 - c2y) + k * sx * sy))

    def grad_u(x, t):
        sx, cx, sy, cy, s2x, c2x, s2y, c2y, _ = trig(x)
        e = np.exp(-t)
        return _matrix(e * (-2 * PI * s2y * s2x + k * PI * cx * sy),
                       e * (2 * PI * c2y * (c2x - 1) + k * PI * sx * cy),
                       e * (2 * PI * c2x * (1 - c2y) + k * PI * cx * sy),
                       e * (2 * PI * s2x * s2y + k * PI * sx * cy))

    def p(x, t):
        sx, _, sy, *_ = trig(x)
        return np.exp(-t) * sx * sy

    def grad_p(x, t):
        sx, cx, sy, cy, *_ = trig(x)
        e = np.exp(-t)
        return _vector(e * PI * cx * sy, e * PI * sx * cy)

    def f(x, t):
        sx, cx, sy, cy, s2x, c2x, s2y, c2y, xy = trig(x)
        e = np.exp(-t)
        s = sx * sy
        grad_div = -PI ** 2 * np.cos(PI * xy)
        f1 = e * (grad_div + mu * (4 * PI ** 2 * s2y * (2 * c2x - 1) + 2 * PI ** 2 * k * s)
                  + PI * cx * sy)
        f2 = e * (grad_div - mu * (4 * PI ** 2 * s2x * (2 * c2y - 1) - 2 * PI ** 2 * k * s)
                  + PI * sx * cy)
        return _vector(f1, f2)

    def g(x, t):
        sx, _, sy, _, _, _, _, _, xy = trig(x)
        return np.exp(-t) * ((2 * kappa * PI ** 2 - c0) * sx * sy - k * PI * np.sin(PI * xy))

    return ProblemSpec("locking", float(lam), float(mu), float(kappa), float(c0), u, grad_u, p,
                       grad_p, f, g, _flux_from(grad_p, kappa), float(final_time))


def steady_linear(lam: float = 1.0, mu: float = 1.0, kappa: float = 1.0, c0: float = 1.0,
                  final_time: float = 1.0) -> ProblemSpec:
    """u = 0, p = x with flux data on the whole boundary.

    The exact solution lies in the discrete spaces for every j >= 1, so the
    scheme must reproduce its interpolant at every step.
    """
    check_coefficients(lam, mu, kappa, c0)

    def u(x, t):
        return np.zeros((len(_xy(x)[0]), 2))

    def grad_u(x, t):
        return np.zeros((len(_xy(x)[0]), 2, 2))

    def p(x, t):
        return _xy(x)[0].copy()

    def grad_p(x, t):
        xs, _ = _xy(x)
        return _vector(np.ones_like(xs), np.zeros_like(xs))

    def g(x, t):
        return np.zeros(len(_xy(x)[0]))

    return ProblemSpec("steady_linear", float(lam), float(mu), float(kappa), float(c0), u, grad_u,
                       p, grad_p, grad_p, g, _flux_from(grad_p, kappa), float(final_time),
                       pressure_tag="NP")


PROBLEMS = {
    "poly": problem_poly,
    "locking": problem_locking,
    "steady_linear": steady_linear,
}


def make_problem(name: str, lam: float = 1.0, mu: float = 1.0, kappa: float = 1.0,
                 c0: float = 1.0, final_time: float = 1.0) -> ProblemSpec:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ValueError(f"unknown problem {name!r}, expected one of {', '.join(PROBLEMS)}") from None
    return factory(lam, mu=mu, kappa=kappa, c0=c0, final_time=final_time)


def _d1(fn, h):
    return (-fn(2 * h) + 8 * fn(h) - 8 * fn(-h) + fn(-2 * h)) / (12 * h)


def _d2(fn, h):
    return (-fn(2 * h) + 16 * fn(h) - 30 * fn(0.0) + 16 * fn(-h) - fn(-2 * h)) / (12 * h * h)


@dataclass
class PdeResidual:
    momentum: float
    mass: float

    @property
    def worst(self) -> float:
        return max(self.momentum, self.mass)


def manufactured_residual(problem: ProblemSpec, points: np.ndarray, times: np.ndarray,
                          step: float = 1e-3) -> PdeResidual:
    """Max PDE residual of (u, p, f, g) with derivatives by 4th-order differences.

    The default step is 1e-3, not 1e-4. Second differences carry rounding of
    about eps / step**2 per unit of (lam + mu), so the momentum residual is
    divided by max(1, lam + mu), and the larger step keeps the remaining
    rounding two orders below a 1e-6 tolerance; the 4th-order stencil keeps
    the truncation error at step**4.
    """
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    ts = np.broadcast_to(np.asarray(times, dtype=float), (len(pts),))
    ex = np.array([1.0, 0.0])
    ey = np.array([0.0, 1.0])
    h = step
    mom = mass = 0.0
    for x, t in zip(pts, ts):
        x = x[None, :]

        def u_at(d, tt=t):
            return problem.u(x + d, tt)[0]

        def p_at(d, tt=t):
            return problem.p(x + d, tt)[0]

        uxx = _d2(lambda a: u_at(a * ex), h)
        uyy = _d2(lambda a: u_at(a * ey), h)
        uxy = _d1(lambda a: _d1(lambda b: u_at(a * ex + b * ey), h), h)
        grad_div = np.array([uxx[0] + uxy[1], uxy[0] + uyy[1]])
        lap_u = uxx + uyy
        grad_p = np.array([_d1(lambda a: p_at(a * ex), h), _d1(lambda a: p_at(a * ey), h)])
        r_mom = (-(problem.lam + problem.mu) * grad_div - problem.mu * lap_u + grad_p
                 - problem.f(x, t)[0])
        mom = max(mom, float(np.abs(r_mom).max()) / max(1.0, problem.lam + problem.mu))

        def storage(dt):
            tt = t + dt
            div = (_d1(lambda a: u_at(a * ex, tt=tt)[0], h)
                   + _d1(lambda a: u_at(a * ey, tt=tt)[1], h))
            return problem.c0 * p_at(np.zeros(2), tt) + div

        lap_p = _d2(lambda a: p_at(a * ex), h) + _d2(lambda a: p_at(a * ey), h)
        r_mass = _d1(storage, h) - problem.kappa * lap_p - problem.g(x, t)[0]
        mass = max(mass, abs(float(r_mass)))
    return PdeResidual(mom, mass)
