"""End-to-end best-of call pricing: parameters, circuits, oracles, post-processing.

Return-space pipeline.  Asset ``i`` has log-return
``R_i = mu_i + sum_k L_ik * xi_k`` with ``xi_k`` on a discretised standard
normal grid and ``L = chol(Cov) * sqrt(horizon)``.  Everything is rescaled
to the first asset,

    z_i = (R_i + log S0_i - mu_0 - log S0_0 - x_min * l_00) / (dx * l_00),

so ``z_0`` is the first Gaussian index itself.  The maximum ``z`` is stored
as an unsigned integer ``x = round(2**P z) - offset``; the price of the best
asset is then ``exp(a * x + b')`` with ``a = dx * l_00 / 2**P`` and ``b'``
absorbing the offset.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .arithmetic import AffineSpec, FixedPointSpec, maximum, round_half_even, weighted_affine_sum
from .distributions import DiscreteDistribution, gaussian_grid, load_distribution
from .estimation import AmplitudeProblem, EstimationResult, exact_amplitude, iqae
from .payoff import PayoffBlockSpec, PayoffMethod, build_payoff_block
from .statevector import Circuit, Register, allocate

log = logging.getLogger(__name__)

__all__ = [
    "ConfigurationError",
    "MarketModel",
    "PricingConfig",
    "PricingParams",
    "PricingReport",
    "derive_params",
    "build_state_preparation",
    "build_pricing_operator",
    "post_process",
    "price_interval",
    "payoff_affine_map",
    "classical_oracle_expectation",
    "OracleResult",
    "monte_carlo_price",
    "quadrature_price",
    "price_option",
]

ENUMERATION_BUDGET = 2**22


class ConfigurationError(ValueError):
    """Inputs that cannot produce a valid pricing circuit."""


@dataclass(frozen=True)
class MarketModel:
    s0: tuple[float, ...]
    mu_daily: tuple[float, ...]
    covariance: tuple[tuple[float, ...], ...]
    strike: float
    horizon_days: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "s0", tuple(float(v) for v in self.s0))
        object.__setattr__(self, "mu_daily", tuple(float(v) for v in self.mu_daily))
        object.__setattr__(
            self, "covariance", tuple(tuple(float(v) for v in row) for row in self.covariance)
        )
        n = len(self.s0)
        if n == 0:
            raise ConfigurationError("at least one asset is required")
        if len(self.mu_daily) != n:
            raise ConfigurationError("mu_daily needs one entry per asset")
        cov = np.array(self.covariance) if self.covariance else np.zeros((0, 0))
        if cov.shape != (n, n):
            raise ConfigurationError(f"covariance must be {n}x{n}, got shape {cov.shape}")
        if not np.allclose(cov, cov.T, atol=1e-15):
            raise ConfigurationError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min() < -1e-14:
            raise ConfigurationError("covariance is not positive semi-definite")
        if min(self.s0) <= 0 or self.strike <= 0 or self.horizon_days <= 0:
            raise ConfigurationError("S0, strike and horizon must be positive")

    @property
    def num_assets(self) -> int:
        return len(self.s0)

    @property
    def mu(self) -> np.ndarray:
        return self.horizon_days * np.array(self.mu_daily)

    def cholesky(self) -> np.ndarray:
        """``L = C * sqrt(horizon)``; PSD matrices with zero pivots are allowed."""
        cov = np.array(self.covariance)
        n = len(cov)
        c = np.zeros_like(cov)
        for i in range(n):
            for j in range(i + 1):
                s = cov[i, j] - c[i, :j] @ c[j, :j]
                if i == j:
                    c[i, i] = math.sqrt(max(s, 0.0))
                else:
                    c[i, j] = s / c[j, j] if c[j, j] > 0 else 0.0
        return c * math.sqrt(self.horizon_days)


@dataclass(frozen=True)
class PricingConfig:
    """Circuit sizes and estimation settings.

    ``width=None`` sizes the payoff register from the derived ``x`` range.
    """

    m: int = 2
    frac_bits: int = 1
    width: int | None = None
    truncation: float = 3.0
    grid: str = "points"
    method: PayoffMethod = PayoffMethod.DIRECT
    epsilon: float = 0.01
    alpha: float = 0.05
    shots: int = 1000
    seed: int = 0
    max_power: int | None = None
    mc_paths: int = 100_000

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", PayoffMethod(self.method))
        if self.m < 1:
            raise ConfigurationError("m must be >= 1")
        if self.frac_bits < 0:
            raise ConfigurationError("frac_bits must be >= 0")
        if self.width is not None and self.width < 1:
            raise ConfigurationError("width must be >= 1")
        if not 0 < self.epsilon < 0.5:
            raise ConfigurationError(f"epsilon must lie in (0, 0.5), got {self.epsilon}")
        if not 0 < self.alpha < 1:
            raise ConfigurationError(f"alpha must lie in (0, 1), got {self.alpha}")
        if self.shots < 1:
            raise ConfigurationError("shots must be >= 1")
        if self.truncation <= 0:
            raise ConfigurationError("truncation must be positive")
        if self.grid not in ("points", "left-bins"):
            raise ConfigurationError("grid must be 'points' or 'left-bins'")
        if self.max_power is not None and self.max_power < 0:
            raise ConfigurationError("max_power must be >= 0")
        if self.mc_paths < 1:
            raise ConfigurationError("mc_paths must be >= 1")


@dataclass(frozen=True)
class PricingParams:
    """Classical constants shared by the circuits, the oracles and post-processing."""

    market: MarketModel
    dist: DiscreteDistribution
    cholesky: np.ndarray
    mu: np.ndarray
    b: float
    b_prime_raw: float
    offset: int
    width: int
    frac_bits: int
    affine: tuple[AffineSpec, ...]
    saturation: tuple[int, ...]

    @property
    def dx(self) -> float:
        return self.dist.dx

    @property
    def x_min(self) -> float:
        return self.dist.x_min

    @property
    def l00(self) -> float:
        return float(self.cholesky[0, 0])

    @property
    def strike(self) -> float:
        return self.market.strike

    @property
    def a(self) -> float:
        return self.b / 2**self.frac_bits

    @property
    def b_prime(self) -> float:
        """``b'`` including the unsigned offset of the ``x`` register."""
        return self.b_prime_raw + self.a * self.offset

    @property
    def x_max(self) -> int:
        return 2**self.width - 1

    @property
    def threshold(self) -> float:
        """``(log K - b') / b`` in units of the fixed-point register."""
        return (math.log(self.strike) - self.b_prime) / self.b

    @property
    def c(self) -> float:
        return math.expm1(self.a * (self.x_max + 1)) / math.exp(self.a)

    @property
    def s_max(self) -> float:
        return math.exp(self.b_prime + self.a * self.x_max)

    def h_tilde(self, method: PayoffMethod | str) -> float:
        if PayoffMethod(method) is PayoffMethod.DIRECT:
            return self.strike * math.exp(-(self.b_prime + self.a * self.x_max))
        return (self.strike * math.exp(-self.b_prime) - math.exp(-self.a)) / self.c

    def payoff_spec(self, method: PayoffMethod | str) -> PayoffBlockSpec:
        return PayoffBlockSpec(
            a=self.a,
            threshold=self.threshold,
            h_tilde=self.h_tilde(method),
            width=self.width,
            method=PayoffMethod(method),
            frac_bits=self.frac_bits,
        )

    def summary(self) -> dict:
        return {
            "dx": self.dx,
            "x_min": self.x_min,
            "l00": self.l00,
            "mu": [float(v) for v in self.mu],
            "b": self.b,
            "b_prime": self.b_prime,
            "b_prime_unshifted": self.b_prime_raw,
            "offset": self.offset,
            "a": self.a,
            "threshold": self.threshold,
            "width": self.width,
            "frac_bits": self.frac_bits,
            "x_max": self.x_max,
            "c": self.c,
            "s_max": self.s_max,
            "h_tilde_direct": self.h_tilde(PayoffMethod.DIRECT),
            "h_tilde_integration": self.h_tilde(PayoffMethod.INTEGRATION),
        }


def _scaled_return_coefficients(market: MarketModel, dist: DiscreteDistribution):
    """Coefficients and constants of ``z_i`` as affine functions of the Gaussian indices."""
    L = market.cholesky()
    mu = market.mu
    l00 = L[0, 0]
    if l00 <= 0:
        raise ConfigurationError("the first asset needs positive variance")
    scale = dist.dx * l00
    log_s0 = np.log(market.s0)
    coeffs = L * dist.dx / scale
    consts = (mu + dist.x_min * L.sum(axis=1) + log_s0 - mu[0] - log_s0[0] - dist.x_min * l00) / scale
    return L, mu, coeffs, consts


def derive_params(market: MarketModel, config: PricingConfig) -> PricingParams:
    """Cholesky factor, rescaling constants and register sizing.

    Raises:
        ConfigurationError: for a register too small for the ``x`` range or a
            constant-branch amplitude outside ``[0, 1]``.
    """
    dist = gaussian_grid(config.m, config.truncation, config.grid)
    L, mu, coeffs, consts = _scaled_return_coefficients(market, dist)
    n = market.num_assets
    if n * config.m > 16:
        raise ConfigurationError("the lookup-table arithmetic supports at most 16 Gaussian qubits")
    P = config.frac_bits
    grid = np.arange(2**config.m)
    # integer-scaled z_i for every joint sample; the max over i is the x register
    zs_int = []
    for i in range(n):
        spec = AffineSpec(coeffs[i, : i + 1], consts[i], FixedPointSpec(62, P, signed=True))
        vals = np.array(
            [spec.raw(v) for v in np.ndindex(*(len(grid),) * (i + 1))], dtype=np.int64
        )
        zs_int.append(vals)
    x_by_d = _joint_max(zs_int, n, config.m)
    offset = int(x_by_d.min())
    span = int(x_by_d.max()) - offset
    needed = max(1, span.bit_length())
    width = needed if config.width is None else config.width
    if width < needed:
        raise ConfigurationError(
            f"register width {width} cannot hold the x range [0, {span}] (needs {needed} bits)"
        )
    if width < P:
        raise ConfigurationError("register width must be at least frac_bits")
    out = FixedPointSpec(width, P)
    affine = tuple(
        AffineSpec(coeffs[i, : i + 1], consts[i] - offset / 2**P, out) for i in range(n)
    )
    saturation = tuple(int(np.sum(z - offset < 0)) for z in zs_int)
    b = L[0, 0] * dist.dx
    b_prime_raw = mu[0] + math.log(market.s0[0]) + dist.x_min * L[0, 0]
    params = PricingParams(
        market, dist, L, mu, b, b_prime_raw, offset, width, P, affine, saturation
    )
    h = params.h_tilde(config.method)
    if not 0.0 <= h <= 1.0:
        raise ConfigurationError(
            f"constant-branch amplitude {h:.6g} for method {config.method.value!r} is outside [0, 1];"
            " the strike must lie between the smallest and largest representable prices"
        )
    return params


def _joint_max(zs_int: list[np.ndarray], n: int, m: int) -> np.ndarray:
    """``max_i z_i`` over all joint samples, indexed with d_0 as the most significant digit."""
    size = 2**m
    best = None
    for i, z in enumerate(zs_int):
        full = np.broadcast_to(z.reshape((size,) * (i + 1) + (1,) * (n - i - 1)), (size,) * n)
        best = full if best is None else np.maximum(best, full)
    return np.asarray(best).reshape(-1)


@dataclass(frozen=True)
class _Layout:
    circuit: Circuit
    d: tuple[Register, ...]
    z: tuple[Register, ...]
    x: Register
    r: Register
    work: tuple[int, ...]
    carry: int
    flag: int
    target: int


def _layout(params: PricingParams, config: PricingConfig) -> _Layout:
    n = params.market.num_assets
    R = params.width
    widths = [(f"d{k}", config.m) for k in range(n)]
    widths += [(f"z{i}", R) for i in range(n)]
    widths.append(("x", R))
    n_flags = n - 1
    n_tmp = max(n - 2, 0)
    if n_flags:
        widths.append(("max_flags", n_flags))
    widths += [(f"max_tmp{i}", R) for i in range(n_tmp)]
    widths += [("carry", 1), ("cmp", 1), ("target", 1)]
    c = allocate(widths)
    work = (
        (tuple(c["max_flags"]) if n_flags else ())
        + tuple(q for i in range(n_tmp) for q in c[f"max_tmp{i}"])
        + (c["carry"][0],)
    )
    # the r register reuses z0 once the z registers are uncomputed
    r = Register("r", c["z0"].qubits)
    return _Layout(
        c.with_metadata(r_aliases="z0"),
        tuple(c[f"d{k}"] for k in range(n)),
        tuple(c[f"z{i}"] for i in range(n)),
        c["x"],
        r,
        work,
        c["carry"][0],
        c["cmp"][0],
        c["target"][0],
    )


def _state_prep(params: PricingParams, config: PricingConfig) -> tuple[Circuit, _Layout]:
    lay = _layout(params, config)
    n = params.market.num_assets
    circuit = lay.circuit
    for reg in lay.d:
        circuit += load_distribution(params.dist, reg)
    affine = Circuit.from_gates([])
    for i in range(n):
        affine += weighted_affine_sum(lay.d[: i + 1], params.affine[i], lay.z[i])
    circuit += affine
    circuit += maximum(lay.z, lay.x, work=lay.work, fxp=FixedPointSpec(params.width, params.frac_bits))
    # z registers are functions of D alone and untouched by the maximum
    circuit += affine.inverse()
    return circuit.with_metadata(saturated_samples=list(params.saturation)), lay


def build_state_preparation(params: PricingParams, config: PricingConfig) -> Circuit:
    """Gaussian loading, affine rescaling and the maximum: ``sum_D sqrt(p(D)) |D>|x(D)>``."""
    return _state_prep(params, config)[0]


def build_pricing_operator(
    params: PricingParams,
    config: PricingConfig,
    method: PayoffMethod | str | None = None,
    *,
    angle_error: float = 0.0,
) -> AmplitudeProblem:
    """The full ``A`` operator; its target qubit reads 1 with probability ``E[f~]``."""
    method = PayoffMethod(method or config.method)
    circuit, lay = _state_prep(params, config)
    circuit += build_payoff_block(
        params.payoff_spec(method), lay.x, lay.r, lay.target, lay.flag,
        ancilla=lay.carry, angle_error=angle_error,
    )
    return AmplitudeProblem(circuit.with_metadata(method=method.value), lay.target)


def payoff_affine_map(params: PricingParams, method: PayoffMethod | str) -> tuple[float, float]:
    """``(scale, shift)`` with ``price = amplitude * scale + shift``."""
    if PayoffMethod(method) is PayoffMethod.DIRECT:
        return math.exp(params.b_prime + params.a * params.x_max), -params.strike
    return params.c * math.exp(params.b_prime), math.exp(params.b_prime - params.a) - params.strike


def post_process(
    estimate: EstimationResult | float, params: PricingParams, method: PayoffMethod | str
) -> float:
    """Expected payoff from an estimate of ``E[f~]``."""
    amp = estimate.estimation if isinstance(estimate, EstimationResult) else float(estimate)
    scale, shift = payoff_affine_map(params, method)
    return amp * scale + shift


def price_interval(
    estimate: EstimationResult, params: PricingParams, method: PayoffMethod | str
) -> tuple[float, float]:
    lo, hi = estimate.confidence_interval
    return post_process(lo, params, method), post_process(hi, params, method)


@dataclass(frozen=True)
class OracleResult:
    f_tilde_direct: float
    f_tilde_integration: float
    payoff: float
    payoff_unrounded: float
    argmax_consistent: bool
    x_values: np.ndarray = field(repr=False)
    probabilities: np.ndarray = field(repr=False)

    def f_tilde(self, method: PayoffMethod | str) -> float:
        if PayoffMethod(method) is PayoffMethod.DIRECT:
            return self.f_tilde_direct
        return self.f_tilde_integration


def classical_oracle_expectation(
    params: PricingParams, config: PricingConfig, budget: int = ENUMERATION_BUDGET
) -> OracleResult:
    """Exhaustive expectation over the joint Gaussian grid.

    Recomputes each asset's log-return and price from the grid values (not
    from the circuit tables) and applies the same round-half-even fixed-point
    rule to the rescaled maximum.
    """
    market = params.market
    n = market.num_assets
    size = 2**config.m
    if size**n > budget:
        raise ConfigurationError(f"{size**n} joint samples exceed the enumeration budget {budget}")
    grid = params.dist.grid
    p1 = params.dist.probabilities
    idx = np.array(list(np.ndindex(*(size,) * n)), dtype=np.int64).reshape(-1, n)
    xi = grid[idx]
    prob = np.prod(p1[idx], axis=1)
    L = params.cholesky
    R = params.mu + xi @ L.T
    log_s0 = np.log(market.s0)
    log_prices = log_s0 + R
    argmax_ok = bool(np.all(np.argmax(np.exp(log_prices), axis=1) == np.argmax(log_prices, axis=1)))
    scale = params.dx * params.l00
    z = (log_prices - params.mu[0] - log_s0[0] - params.x_min * params.l00) / scale
    x_int = np.array(
        [max(max(round_half_even(v * 2**params.frac_bits) - params.offset, 0) for v in row) for row in z]
    )
    if x_int.max() > params.x_max:
        raise ConfigurationError("x register overflow in the oracle")
    K = params.strike
    payoff = np.maximum(np.exp(params.a * x_int + params.b_prime) - K, 0.0)
    payoff_exact = np.maximum(np.exp(log_prices.max(axis=1)) - K, 0.0)
    spec_d = params.payoff_spec(PayoffMethod.DIRECT)
    spec_i = PayoffBlockSpec(
        params.a, params.threshold, params.h_tilde(PayoffMethod.INTEGRATION),
        params.width, PayoffMethod.INTEGRATION, params.frac_bits,
    ) if 0 <= params.h_tilde(PayoffMethod.INTEGRATION) <= 1 else None
    fd = float(np.sum(prob * spec_d.f_tilde(x_int))) if 0 <= params.h_tilde("direct") <= 1 else math.nan
    fi = float(np.sum(prob * spec_i.f_tilde(x_int))) if spec_i is not None else math.nan
    return OracleResult(
        fd, fi, float(np.sum(prob * payoff)), float(np.sum(prob * payoff_exact)),
        argmax_ok, x_int, prob,
    )


def _mc_chunk(args) -> tuple[float, float, int]:
    seed_seq, count, L, mu, s0, strike = args
    rng = np.random.default_rng(seed_seq)
    xi = rng.standard_normal((count, len(s0)))
    prices = s0 * np.exp(mu + xi @ L.T)
    pay = np.maximum(prices.max(axis=1) - strike, 0.0)
    return float(pay.sum()), float((pay**2).sum()), count


def monte_carlo_price(
    market: MarketModel,
    paths: int = 1_000_000,
    seed: int = 0,
    *,
    chunk: int = 250_000,
    workers: int = 1,
) -> tuple[float, float]:
    """Continuous-distribution Monte Carlo price and its standard error.

    Chunks get their own spawned seed streams, so the result depends on
    ``seed`` and ``chunk`` but not on ``workers``.
    """
    if paths < 1:
        raise ValueError("paths must be >= 1")
    L = market.cholesky()
    counts = [min(chunk, paths - i) for i in range(0, paths, chunk)]
    seeds = np.random.SeedSequence(seed).spawn(len(counts))
    jobs = [(s, c, L, market.mu, np.array(market.s0), market.strike) for s, c in zip(seeds, counts)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(_mc_chunk, jobs))
    else:
        parts = [_mc_chunk(j) for j in jobs]
    total = math.fsum(p[0] for p in parts)
    total_sq = math.fsum(p[1] for p in parts)
    mean = total / paths
    var = max(total_sq / paths - mean**2, 0.0)
    stderr = math.sqrt(var / max(paths - 1, 1))
    return mean, stderr


def quadrature_price(market: MarketModel, width: float = 9.0, tol: float = 1e-8) -> float:
    """Best-of call price by adaptive quadrature over the Gaussian drivers (one or two assets)."""
    from scipy import integrate
    from scipy.stats import norm

    L = market.cholesky()
    mu = market.mu
    s0 = np.array(market.s0)
    K = market.strike
    if market.num_assets == 1:
        f = lambda u: max(s0[0] * math.exp(mu[0] + L[0, 0] * u) - K, 0.0) * norm.pdf(u)
        kink = (math.log(K / s0[0]) - mu[0]) / L[0, 0] if L[0, 0] > 0 else None
        pts = [kink] if kink is not None and -width < kink < width else None
        return integrate.quad(f, -width, width, points=pts, epsabs=tol, limit=500)[0]
    if market.num_assets != 2:
        raise ValueError("quadrature oracle supports one or two assets")

    def inner(u):
        # payoff along v for fixed u; the kinks are where either price crosses K or they cross
        def g(v):
            p = s0 * np.exp(mu + L @ np.array([u, v]))
            return max(p.max() - K, 0.0) * norm.pdf(v)

        pts = []
        if L[1, 1] > 0:
            pts.append((math.log(K / s0[1]) - mu[1] - L[1, 0] * u) / L[1, 1])
            cross = (math.log(s0[0] / s0[1]) + mu[0] - mu[1] + (L[0, 0] - L[1, 0]) * u) / L[1, 1]
            pts.append(cross)
        pts = sorted(p for p in pts if -width < p < width) or None
        return integrate.quad(g, -width, width, points=pts, epsabs=tol, limit=200)[0] * norm.pdf(u)

    kink_u = None
    if L[0, 0] > 0:
        kink_u = (math.log(K / s0[0]) - mu[0]) / L[0, 0]
    pts = [kink_u] if kink_u is not None and -width < kink_u < width else None
    return integrate.quad(inner, -width, width, points=pts, epsabs=tol, limit=200)[0]


@dataclass
class PricingReport:
    method: str
    amplitude: float
    amplitude_interval: tuple[float, float]
    price: float
    price_interval: tuple[float, float]
    oracle_amplitude: float
    oracle_price: float
    exact_amplitude: float | None
    mc_price: float
    mc_stderr: float
    num_qubits: int
    num_gates: int
    depth: int
    oracle_queries: int
    rounds: int
    params: dict
    config: dict
    market: dict
    oracle_price_unrounded: float = math.nan
    rounds_log: list = field(default_factory=list)
    elapsed_seconds: float = 0.0

    @property
    def oracle_in_interval(self) -> bool:
        lo, hi = self.price_interval
        return lo <= self.oracle_price <= hi

    def to_dict(self) -> dict:
        d = asdict(self)
        d["oracle_in_interval"] = self.oracle_in_interval
        d["price_error"] = self.price - self.oracle_price
        d["discretisation_bias"] = self.oracle_price - self.mc_price
        return d


def price_option(
    market: MarketModel,
    config: PricingConfig,
    *,
    exact_check: bool = True,
    mc_workers: int = 1,
) -> PricingReport:
    """Build ``A``, run IQAE, post-process, and attach the classical baselines."""
    start = time.perf_counter()
    params = derive_params(market, config)
    problem = build_pricing_operator(params, config)
    oracle = classical_oracle_expectation(params, config)
    exact = exact_amplitude(problem) if exact_check else None
    result = iqae(
        problem, config.epsilon, config.alpha, config.shots, config.seed, max_power=config.max_power
    )
    method = config.method
    mc, se = monte_carlo_price(market, config.mc_paths, config.seed, workers=mc_workers)
    circuit = problem.circuit
    return PricingReport(
        method=method.value,
        amplitude=result.estimation,
        amplitude_interval=result.confidence_interval,
        price=post_process(result, params, method),
        price_interval=price_interval(result, params, method),
        oracle_amplitude=oracle.f_tilde(method),
        oracle_price=oracle.payoff,
        exact_amplitude=exact,
        mc_price=mc,
        mc_stderr=se,
        num_qubits=circuit.num_qubits,
        num_gates=len(circuit),
        depth=circuit.depth(),
        oracle_queries=result.oracle_queries,
        rounds=len(result.rounds),
        params=params.summary(),
        config={k: (v.value if isinstance(v, PayoffMethod) else v) for k, v in asdict(config).items()},
        market=asdict(market),
        oracle_price_unrounded=oracle.payoff_unrounded,
        rounds_log=[asdict(r) for r in result.rounds],
        elapsed_seconds=time.perf_counter() - start,
    )
