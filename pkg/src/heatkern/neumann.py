"""Heat kernel construction by starter kernel plus convolution series.

Writing f = L_x H for the heat image of a validated starter, the exact
kernel is K = H + H * F with F = sum_{l>=1} (-1)^l f^{*l}, the alternating
sum of time-convolution powers.  Each fold picks up a factor t/l from the
time integral, so the series converges factorially once enough terms are
taken; the tail is certified a priori from the envelope |f| <= C t^k and
the row-mass norm of f.

Stiff spaces (large generator norm against the horizon) would overflow
the alternating partial sums long before the factorial decay kicks in, so
the series is built on a short base horizon and the result is extended by
semigroup squaring K(2t) = K(t) . W . K(t).  Squaring doubles the sup
error at each level (kernel mass stays near one), which the certificate
accounts for before construction starts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np

from .errors import (
    DimensionMismatch,
    HorizonExceeded,
    InvalidParametrix,
    NoConvergenceBudget,
)
from .space import Conductance, PointSpace, generator
from .parametrix import Parametrix, ParametrixReport, validate
from .timekernel import (
    ChebKernel,
    ClosedFormKernel,
    DEFAULT_QUAD,
    FoldCache,
    QuadratureConfig,
    SemigroupKernel,
    TimeKernel,
    convolve,
    lobatto_nodes,
    series_tail_bound,
)

# Largest admissible (stiffness) x (base horizon) before the series is
# rebuilt on a halved horizon.  Stiffness is the larger of the series
# row-mass scale and the generator's row-sum rate: the first keeps the
# alternating partial sums near unit scale, the second keeps e^{-tA}
# resolvable by the base Chebyshev grid.
THETA = 4.0


@dataclass
class NeumannSum:
    """One evaluation of the correction series F(x, y; t)."""

    matrix: np.ndarray
    tail_bound: float
    terms_used: int


@dataclass
class HeatKernelResult:
    """A constructed heat kernel with its convergence certificate."""

    K: TimeKernel
    terms_used: int
    truncation_bound: float
    parametrix_family: str
    space: PointSpace
    conductance: Conductance
    kind: str
    generator_matrix: np.ndarray
    weight: np.ndarray
    horizon: float
    base_horizon: float
    squarings: int
    tol: float
    report: ParametrixReport | None = field(default=None, repr=False)
    diagnostics: object = field(default=None, repr=False)


def _operator_rate(A: np.ndarray) -> float:
    return float(np.max(np.sum(np.abs(A), axis=1)))


def _row_mass_norm(f: TimeKernel, weight: np.ndarray, ts: np.ndarray) -> float:
    """sup_t max_x sum_z |f(x, z; t)| paired against the weight."""
    worst = 0.0
    absw = np.abs(weight)
    for t in ts:
        M = np.abs(f.at(t))
        mass = M @ absw if absw.ndim == 1 else np.max(np.sum(M @ absw, axis=1))
        worst = max(worst, float(np.max(mass)))
    return worst


def _sample_grid(horizon: float, m: int = 48) -> np.ndarray:
    dense = lobatto_nodes(m, horizon)
    small = np.geomspace(max(horizon * 1e-6, 1e-12), horizon / m, 8)
    return np.unique(np.concatenate([dense, small]))


def neumann_series(f: TimeKernel, t: float, tol: float,
                   envelope: tuple | None = None, max_terms: int = 64,
                   quad: QuadratureConfig | None = None) -> NeumannSum:
    """Sum the alternating fold series of f at time t to tolerance tol.

    The envelope (C, k) certifying |f| <= C s^k for s <= t is read off the
    kernel when not passed explicitly.  Raises when no admissible number
    of terms brings the certified tail under tol.
    """
    quad = quad or DEFAULT_QUAD
    if envelope is None:
        envelope = getattr(f, "envelope", None)
    if envelope is None:
        raise DimensionMismatch(
            "the series needs an envelope (C, k) for its integrand"
        )
    C, k = float(envelope[0]), int(envelope[1])
    norm1 = _row_mass_norm(f, f.weight, _sample_grid(t))
    terms = None
    for L in range(1, max_terms + 1):
        tail = series_tail_bound(C, norm1, k, L, t)
        if tail + L * quad.target_tol < tol:
            terms = L
            break
    if terms is None:
        raise NoConvergenceBudget(
            f"correction series needs more than {max_terms} terms at t={t} "
            f"(row-mass norm {norm1:.3g}); shorten the horizon or raise tol"
        )
    cache = FoldCache(f, quad, horizon=t)
    total = np.zeros((f.n, f.n))
    for ell in range(1, terms + 1):
        total += ((-1) ** ell) * cache.fold(ell).at(t)
    bound = series_tail_bound(C, norm1, k, terms, t) + terms * quad.target_tol
    return NeumannSum(total, bound, terms)


def build_heat_kernel(parametrix: Parametrix, T: float, tol: float = 1e-8,
                      max_terms: int = 64, quad: QuadratureConfig | None = None,
                      force: bool = False) -> HeatKernelResult:
    """Construct the heat kernel on [0, T] from a validated starter.

    Validates the starter first (unless a cached report already passed, or
    force is set), picks a base horizon short enough for the alternating
    series to stay well scaled, sums the folds on a shared Chebyshev grid,
    assembles K = H + H * F there, and wraps the grid in a semigroup
    extension that reaches T by repeated squaring.  The certified sup
    error at T is stored as `truncation_bound`; construction refuses to
    start when that certificate cannot be brought under tol.
    """
    if T <= 0.0:
        raise HorizonExceeded(f"horizon must be positive, got {T}")
    if T > parametrix.H.horizon * (1.0 + 1e-9):
        raise HorizonExceeded(
            f"starter was built for horizon {parametrix.H.horizon}, "
            f"cannot construct out to T={T}"
        )
    report = parametrix.report
    if report is None:
        report = validate(parametrix)
    if not report.passed and not force:
        raise InvalidParametrix(
            f"starter family {parametrix.family!r} failed validation "
            f"(dirac residual {report.dirac_residual:.3g}, fitted order "
            f"{report.fitted_order:.3g} vs declared {parametrix.order_k}); "
            f"pass force=True to build on it anyway"
        )

    f = parametrix.heat_image
    weight = parametrix.weight
    C = float(parametrix.envelope["C"])
    k = int(parametrix.order_k)
    norm1 = _row_mass_norm(f, weight, _sample_grid(T))
    rate = max(norm1, _operator_rate(parametrix.generator_matrix),
               float(parametrix.envelope.get("rate", 0.0)))
    if quad is None:
        # Charge the certificate a per-fold resampling slop scaled to the
        # requested tolerance.  The grid is spectrally accurate and exact
        # on polynomial folds, so tightening the budget costs nothing; the
        # floor keeps the claim above roundoff.
        target = min(DEFAULT_QUAD.target_tol, max(tol * 1e-3, 1e-15))
        quad = QuadratureConfig(nodes_per_panel=DEFAULT_QUAD.nodes_per_panel,
                                cheb_degree=DEFAULT_QUAD.cheb_degree,
                                target_tol=target)

    # Base horizon: halve until both the series and the kernel are tame.
    # Each extra squaring doubles the error amplification but shrinks the
    # series tail superexponentially, so keep halving while the tolerance
    # is out of reach and the amplified slop still leaves room.
    squarings = 0
    if rate * T > THETA:
        squarings = math.ceil(math.log2(rate * T / THETA))
    slop = quad.target_tol
    terms = None
    while True:
        T_base = T / (2 ** squarings)
        grow = 2.0 ** squarings
        massH = _row_mass_norm(parametrix.H, weight, _sample_grid(T_base))
        for L in range(1, max_terms + 1):
            tail = series_tail_bound(C, norm1, k, L, T_base)
            cert = (tail * (1.0 + T_base * massH) + L * slop) * grow
            if cert < tol:
                terms, bound = L, cert
                break
        if terms is not None:
            break
        if 2.0 * grow * slop >= tol:
            raise NoConvergenceBudget(
                f"no certificate below tol={tol} within {max_terms} terms: "
                f"base horizon {T_base:.3g}, row-mass norm {norm1:.3g}, "
                f"{squarings} squarings amplify by {grow:.0f}; raise tol, "
                f"raise max_terms, or tighten the quadrature target"
            )
        squarings += 1

    def assemble(q):
        nodes = lobatto_nodes(q.cheb_degree, T_base)
        cache = FoldCache(f, q, horizon=T_base)
        Fvals = np.zeros((nodes.shape[0], f.n, f.n))
        for ell in range(1, terms + 1):
            Fvals += ((-1) ** ell) * cache.fold(ell).at_many(nodes)
        Fker = ChebKernel(parametrix.space, T_base, weight, Fvals)
        Kvals = np.empty_like(Fvals)
        Kvals[0] = parametrix.H.at(0.0)
        for j in range(1, nodes.shape[0]):
            t = nodes[j]
            Kvals[j] = parametrix.H.at(t) + convolve(parametrix.H, Fker, t, q)
        return nodes, Kvals

    nodes, Kvals = assemble(quad)
    if not parametrix.analytic_in_time:
        # The charged per-fold slop assumes spectral quadrature accuracy.
        # Starters that are merely smooth at t = 0 converge only
        # root-exponentially, so the assumption is unsound for them:
        # assemble once more on a doubled grid, charge twice the observed
        # refinement delta (an upper bound for the finer grid's own
        # error), and keep the finer kernel.
        fine_quad = QuadratureConfig(nodes_per_panel=2 * quad.nodes_per_panel,
                                     cheb_degree=2 * quad.cheb_degree,
                                     target_tol=quad.target_tol)
        fnodes, fKvals = assemble(fine_quad)
        coarse = ChebKernel(parametrix.space, T_base, weight, Kvals)
        measured = max(
            float(np.max(np.abs(coarse.at(t) - fKvals[j])))
            for j, t in enumerate(fnodes)
        )
        tail = series_tail_bound(C, norm1, k, terms, T_base)
        slop_term = max(terms * slop, 2.0 * measured)
        bound = (tail * (1.0 + T_base * massH) + slop_term) * grow
        if bound >= tol:
            raise NoConvergenceBudget(
                f"measured quadrature error {measured:.3g} on the base grid "
                f"lifts the certificate to {bound:.3g}, above tol={tol}; "
                f"this starter family is not analytic at t=0, so tight "
                f"tolerances need a finer QuadratureConfig"
            )
        nodes, Kvals = fnodes, fKvals
    base = ChebKernel(parametrix.space, T_base, weight, Kvals)

    gram = parametrix.gram
    K = SemigroupKernel(base, horizon=T, generator=parametrix.generator_matrix,
                        weight_inv=gram)
    return HeatKernelResult(
        K=K, terms_used=terms, truncation_bound=bound,
        parametrix_family=parametrix.family, space=parametrix.space,
        conductance=parametrix.conductance, kind=parametrix.kind,
        generator_matrix=parametrix.generator_matrix, weight=weight,
        horizon=T, base_horizon=T_base, squarings=squarings, tol=tol,
        report=report,
    )


def heat_residual(K, space: PointSpace | None = None,
                  conductance: Conductance | None = None,
                  kind: str = "combinatorial", n_check: int = 9) -> float:
    """max |d/dt K + A K| over the kernel's grid, by spectral differentiation.

    Accepts either a build result (which carries its own generator) or a
    bare time kernel together with the space and conductance it lives on.
    """
    if isinstance(K, HeatKernelResult):
        A = K.generator_matrix
        K = K.K
    else:
        if space is None or conductance is None:
            raise DimensionMismatch(
                "a bare kernel needs the space and conductance it acts on"
            )
        A, _ = generator(space, conductance, kind)
    base = K.base if isinstance(K, SemigroupKernel) else K
    if not isinstance(base, ChebKernel):
        base = ChebKernel.from_kernel(base, DEFAULT_QUAD.cheb_degree)
    dvals = base.dvalues
    worst = 0.0
    idx = np.linspace(0, base.nodes.shape[0] - 1, n_check).astype(int)
    for j in idx:
        worst = max(worst, float(np.max(np.abs(dvals[j] + A @ base.values[j]))))
    return worst


def cross_parametrix_build(result: HeatKernelResult,
                           conductance: Conductance | None = None,
                           lam: np.ndarray | None = None,
                           tol: float = 1e-8, T: float | None = None,
                           max_terms: int = 64,
                           quad: QuadratureConfig | None = None) -> HeatKernelResult:
    """Rebuild the heat kernel after changing conductances or the measure.

    The previously built kernel, rescaled column-wise to the new measure,
    is itself an order-zero starter for the perturbed space: its heat
    image under the new generator is exactly (A_new - A_old) H, with no
    time-derivative error at all.  Small perturbations therefore converge
    in very few terms.
    """
    if result.weight.ndim != 1:
        raise InvalidParametrix(
            "cross builds need a measure-paired kernel, not a Hilbert pairing"
        )
    old_space = result.space
    if lam is None:
        new_space = old_space
    else:
        lam = np.asarray(lam, dtype=float)
        if lam.shape != (old_space.n,):
            raise DimensionMismatch("new measure does not match the space")
        if np.any(lam <= 0.0):
            raise InvalidParametrix("new measure must stay strictly positive")
        new_space = PointSpace(old_space.points, lam)
    cond = conductance if conductance is not None else result.conductance
    if cond.matrix.shape != (old_space.n, old_space.n):
        raise DimensionMismatch("new conductance does not match the space")
    A_new, mu_new = generator(new_space, cond, result.kind)
    A_old = result.generator_matrix
    mu_old = result.weight
    scale = mu_old / mu_new
    Kp = result.K
    horizon = Kp.horizon if T is None else float(T)
    if T is not None and not isinstance(Kp, SemigroupKernel) \
            and T > Kp.horizon * (1.0 + 1e-9):
        raise HorizonExceeded("previous kernel does not reach the new horizon")
    diff = A_new - A_old

    def H_at(t):
        return Kp.at(t) * scale[None, :]

    H = ClosedFormKernel(new_space, horizon, mu_new, H_at,
                         dt_evaluator=lambda t: -(A_old @ H_at(t)),
                         name="imported")
    image = ClosedFormKernel(new_space, horizon, mu_new,
                             evaluator=lambda t: diff @ H_at(t),
                             name="imported-image")
    ts = _sample_grid(horizon)
    Cimg = max(float(np.max(np.abs(image.at(t)))) for t in ts)
    Cimg = Cimg * (1.0 + 1e-6) + 1e-300
    image.envelope = (Cimg, 0)
    # The imported starter varies on the old kernel's time scale even when
    # the perturbation (and hence the series norm) is tiny.
    envelope = {"C": Cimg, "k": 0, "h": None, "rate": _operator_rate(A_old)}
    p = Parametrix(H, image, 0, "imported", envelope,
                   new_space, cond, result.kind, A_new, mu_new)
    rep = validate(p)
    if not rep.passed:
        raise InvalidParametrix(
            f"imported starter failed validation after the perturbation "
            f"(dirac residual {rep.dirac_residual:.3g}); the two spaces are "
            f"too far apart, build from a fresh starter instead"
        )
    return build_heat_kernel(p, horizon, tol=tol, max_terms=max_terms, quad=quad)
