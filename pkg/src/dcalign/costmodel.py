"""Analytic FLOP, peak-memory, traffic and transfer-time estimates.

Two quantities share the letter q in the literature: the bit width of a
transmitted scalar and ``max(a, c*l)`` in the FLOP counts. Here they are
``bits_per_scalar`` and ``qmax`` respectively.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

from .alignment import Method
from .errors import ValidationError

GB = 1e9  # decimal


@dataclass(frozen=True)
class CostParams:
    a: int
    m: int
    ell: int
    c: int
    n_bar: float
    N: float
    bits_per_scalar: int = 32
    gamma: float = 0.0
    R: float = 1
    p: float = 1.0
    beta: float = 1e9
    tau: float = 0.0

    def __post_init__(self):
        for name in ("a", "m", "ell", "c", "bits_per_scalar"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                raise ValidationError(f"{name} must be a positive integer, got {value!r}")
        if self.n_bar <= 0 or self.N <= 0:
            raise ValidationError("n_bar and N must be positive")
        if not 0.0 < self.p <= 1.0:
            raise ValidationError(f"p must lie in (0, 1], got {self.p}")
        if self.gamma < 0 or self.R < 0 or self.tau < 0:
            raise ValidationError("gamma, R and tau must be non-negative")
        if self.beta <= 0:
            raise ValidationError("beta must be positive")

    _ALIASES = {"q": "bits_per_scalar", "l": "ell", "ℓ": "ell", "γ": "gamma", "β": "beta", "τ": "tau"}

    @classmethod
    def from_dict(cls, d: dict) -> "CostParams":
        d = {cls._ALIASES.get(k, k): v for k, v in d.items()}
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ValidationError(f"unknown CostParams fields: {sorted(unknown)}")
        for key in ("a", "m", "ell", "c", "bits_per_scalar"):
            if isinstance(d.get(key), float) and d[key].is_integer():
                d[key] = int(d[key])
        try:
            return cls(**d)
        except TypeError as exc:
            raise ValidationError(str(exc)) from exc

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def healthcare(cls, **overrides) -> "CostParams":
        """100 hospitals, 1000 samples each, 784 features, l=100, a ResNet-50 sized model."""
        base = dict(a=1000, m=784, ell=100, c=100, n_bar=1000, N=2.5e7,
                    bits_per_scalar=32, gamma=100, R=1, p=1.0)
        base.update(overrides)
        return cls(**base)


@dataclass(frozen=True)
class FlopBreakdown:
    method: Method
    terms: tuple[tuple[str, float], ...]
    pmin: int | None = None
    qmax: int | None = None

    @property
    def total(self) -> float:
        return sum(value for _, value in self.terms)

    def to_dict(self) -> dict:
        return {"method": self.method.value, "total": self.total,
                "terms": dict(self.terms), "pmin": self.pmin, "qmax": self.qmax}


def _check_dims(a: int, ell: int, c: int) -> None:
    if not (a > ell >= 1 and c >= 1):
        raise ValidationError(f"need a > l >= 1 and c >= 1, got a={a}, l={ell}, c={c}")


def flops_imakura(a: int, ell: int, c: int) -> FlopBreakdown:
    """``4 qmax pmin^2 + 8 pmin^3 + (6c + 2) a l^2 + 8 c l^3``."""
    _check_dims(a, ell, c)
    pmin, qmax = min(a, c * ell), max(a, c * ell)
    terms = (
        ("svd_concatenated_anchor", 4 * qmax * pmin**2 + 8 * pmin**3),
        ("form_target", 2 * a * ell**2),
        ("pinv_and_multiply", c * (6 * a * ell**2 + 8 * ell**3)),
    )
    return FlopBreakdown(Method.IMAKURA, tuple((k, float(v)) for k, v in terms), pmin, qmax)


def flops_kawakami(a: int, ell: int, c: int) -> FlopBreakdown:
    """``4 qmax pmin^2 + 8 pmin^3 + c (2 a l^2 + 2/3 l^3)`` (explicit triangular inverse)."""
    _check_dims(a, ell, c)
    pmin, qmax = min(a, c * ell), max(a, c * ell)
    terms = (
        ("qr", c * (2 * a * ell**2 - 2 * ell**3 / 3)),
        ("svd_stacked_q", float(4 * qmax * pmin**2 + 8 * pmin**3)),
        ("triangular_recovery", 4 * c * ell**3 / 3),
    )
    return FlopBreakdown(Method.KAWAKAMI, tuple((k, float(v)) for k, v in terms), pmin, qmax)


def flops_odc(a: int, ell: int, c: int) -> FlopBreakdown:
    """``2 c a l^2 + 16 c l^3``."""
    _check_dims(a, ell, c)
    terms = (
        ("cross_products", 2 * c * a * ell**2),
        ("apply_target", 2 * c * ell**3),
        ("small_svds", 12 * c * ell**3),
        ("polar_factors", 2 * c * ell**3),
    )
    return FlopBreakdown(Method.ODC, tuple((k, float(v)) for k, v in terms))


def flops(method, a: int, ell: int, c: int) -> FlopBreakdown:
    method = Method(method)
    return {Method.IMAKURA: flops_imakura, Method.KAWAKAMI: flops_kawakami,
            Method.ODC: flops_odc}[method](a, ell, c)


def peak_mem(method, a: int, ell: int, c: int) -> float:
    """Leading-order peak memory in scalars (retained terms of each derivation)."""
    _check_dims(a, ell, c)
    method = Method(method)
    if method is Method.IMAKURA:
        return float(a * c * ell + a * ell + c * ell**2)
    if method is Method.KAWAKAMI:
        return float(a * c * ell + c * ell**2)
    return float(a * c * ell + c * ell**2 + 2 * ell**2)


def dc_traffic(params: CostParams) -> dict:
    """One-shot DC traffic in bytes, with uplink/downlink/anchor parts."""
    bytes_per = params.bits_per_scalar / 8
    uplink = params.c * (params.n_bar + params.a) * params.ell * bytes_per
    downlink = params.c * (params.ell**2 + params.N) * bytes_per
    anchor = params.gamma * params.a * params.m * bytes_per
    return {"uplink": uplink, "downlink": downlink, "anchor": anchor,
            "total": uplink + downlink + anchor}


def fl_traffic(params: CostParams) -> float:
    """Cumulative FL traffic ``2 R p c N q / 8`` in bytes."""
    return 2 * params.R * params.p * params.c * params.N * params.bits_per_scalar / 8


def break_even_rounds(params: CostParams) -> float:
    """Real-valued R* at which FL traffic equals DC traffic; independent of the bit width."""
    two_p_n = 2 * params.p * params.N
    return ((params.n_bar + params.a) * params.ell / two_p_n
            + (params.ell**2 + params.N) / two_p_n
            + params.gamma * params.a * params.m / (two_p_n * params.c))


def transfer_time(params: CostParams, which: str) -> float:
    """Seconds: payload over the bottleneck plus one RTT per DC phase (3) or two per FL round."""
    which = which.upper()
    if which == "DC":
        return 8 * dc_traffic(params)["total"] / params.beta + 3 * params.tau
    if which == "FL":
        return 8 * fl_traffic(params) / params.beta + 2 * params.R * params.tau
    raise ValidationError(f"which must be 'DC' or 'FL', got {which!r}")


def format_gb(n_bytes: float) -> str:
    return f"{n_bytes / GB:.3f} GB"


def cost_report(params: CostParams) -> dict:
    dc = dc_traffic(params)
    fl = fl_traffic(params)
    r_star = break_even_rounds(params)
    report = {
        "params": params.to_dict(),
        "dc_traffic_bytes": dc,
        "fl_traffic_bytes": fl,
        "dc_traffic": format_gb(dc["total"]),
        "fl_traffic": format_gb(fl),
        "break_even_rounds": r_star,
        "break_even_rounds_ceil": math.ceil(r_star),
        "transfer_time_s": {"DC": transfer_time(params, "DC"), "FL": transfer_time(params, "FL")},
    }
    if params.a > params.ell:
        report["flops"] = {m.value: flops(m, params.a, params.ell, params.c).to_dict() for m in Method}
        report["peak_mem_scalars"] = {m.value: peak_mem(m, params.a, params.ell, params.c) for m in Method}
    return report


def rstar_grid(params: CostParams, n_bars, model_sizes, participations) -> list[dict]:
    """R* over an (n_bar, N, p) grid, as rows for CSV export."""
    rows = []
    for p in participations:
        for n in model_sizes:
            for n_bar in n_bars:
                point = dataclasses.replace(params, n_bar=n_bar, N=n, p=p)
                rows.append({"p": p, "N": n, "n_bar": n_bar, "r_star": break_even_rounds(point)})
    return rows
