"""Seeded instance generator for the six-echelon experiment.

Sites are placed uniformly at random in a square region and every arc
parameter is derived from the Euclidean distance between its end points.
Random draws come from ``numpy.random.Generator(PCG64(seed))`` in this
fixed order:

1. coordinates (x, y) of plants, distribution centres, customers,
   recycling centres, disposal centres;
2. customer demands (integers, inclusive range);
3. fixed opening costs for P, W, C, D;
4. fixed opening emissions for P, W, C, D;
5. capacities CPF, CPR, CWF, CWR, CRC, CDS.

Integer-valued draws use ``Generator.integers`` with an inclusive upper
end; coordinates use ``Generator.uniform``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from .domain import EchelonSizes, Instance

KG_PER_SHORT_TON = 907.18474
KG_PER_TONNE = 1000.0
KM_PER_MILE = 1.609344


@dataclass(frozen=True)
class TransportMode:
    name: str
    cost_per_ton_mile: float                   # $ per short ton-mile
    co2_g_per_tonne_km: float
    risk_per_product_mile: tuple[float, float, float, float]   # accident, psychosocial, physical, mental


RAIL = TransportMode("rail", 0.03, 22.0, (0.000005, 0.005, 0.005, 0.005))
ROAD = TransportMode("road", 0.25, 62.0, (0.00005, 0.0025, 0.0025, 0.0025))
AIR = TransportMode("air", 0.59, 602.0, (0.00001, 0.0005, 0.0005, 0.0005))
DEFAULT_MODES = (RAIL, ROAD, AIR)

REFERENCE_SIZES = EchelonSizes(plants=5, dist_centers=8, customers=20, recycles=3, disposals=3, modes=3)
TINY_SIZES = EchelonSizes(plants=2, dist_centers=2, customers=3, recycles=1, disposals=1, modes=2)


def _default_capacity():
    return {
        "CPF": (800, 1200),
        "CPR": (80, 120),
        "CWF": (400, 600),
        "CWR": (80, 120),
        "CRC": (160, 240),
        "CDS": (160, 240),
    }


def _default_fixed_cost():
    return {"P": (400000, 600000), "W": (250000, 350000), "C": (150000, 250000), "D": (150000, 250000)}


def _default_emission():
    return {"P": (4000, 8000), "W": (3000, 5000), "C": (2000, 4000), "D": (2000, 4000)}


def _default_facility_risk():
    return {"P": (3, 6, 6, 4), "W": (2, 4, 4, 3), "C": (2, 4, 4, 3), "D": (2, 4, 4, 3)}


@dataclass(frozen=True)
class GenConfig:
    seed: int = 0
    sizes: EchelonSizes = REFERENCE_SIZES
    demand_range: tuple[int, int] = (100, 150)
    capacity_ranges: dict = field(default_factory=_default_capacity)
    fixed_cost_ranges: dict = field(default_factory=_default_fixed_cost)
    emission_ranges: dict = field(default_factory=_default_emission)
    modes: tuple[TransportMode, ...] = DEFAULT_MODES
    facility_risks: dict = field(default_factory=_default_facility_risk)
    theta: tuple[float, float, float, float] = (0.4, 0.2, 0.2, 0.2)
    alpha: float = 0.2
    beta: float = 0.4
    delta: float = 0.3
    product_mass_kg: float = 50.0
    region_side_miles: float = 500.0
    inflation_factor: float = 1.0

    def __post_init__(self):
        ranges = [self.demand_range, *self.capacity_ranges.values(),
                  *self.fixed_cost_ranges.values(), *self.emission_ranges.values()]
        for lo, hi in ranges:
            if lo > hi or lo < 0:
                raise ValueError(f"invalid range [{lo}, {hi}]")
        if self.product_mass_kg <= 0:
            raise ValueError("product_mass_kg must be positive")
        if self.inflation_factor <= 0:
            raise ValueError("inflation_factor must be positive")
        if self.region_side_miles <= 0:
            raise ValueError("region_side_miles must be positive")
        if self.sizes.modes > len(self.modes):
            raise ValueError(f"{self.sizes.modes} modes requested but only {len(self.modes)} defined")

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "sizes": self.sizes.as_dict(),
            "demand_range": list(self.demand_range),
            "capacity_ranges": {k: list(v) for k, v in self.capacity_ranges.items()},
            "fixed_cost_ranges": {k: list(v) for k, v in self.fixed_cost_ranges.items()},
            "emission_ranges": {k: list(v) for k, v in self.emission_ranges.items()},
            "modes": [
                {
                    "name": m.name,
                    "cost_per_ton_mile": m.cost_per_ton_mile,
                    "co2_g_per_tonne_km": m.co2_g_per_tonne_km,
                    "risk_per_product_mile": list(m.risk_per_product_mile),
                }
                for m in self.modes
            ],
            "facility_risks": {k: list(v) for k, v in self.facility_risks.items()},
            "theta": list(self.theta),
            "alpha": self.alpha,
            "beta": self.beta,
            "delta": self.delta,
            "product_mass_kg": self.product_mass_kg,
            "region_side_miles": self.region_side_miles,
            "inflation_factor": self.inflation_factor,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GenConfig":
        d = dict(d)
        d["sizes"] = EchelonSizes(**d["sizes"])
        d["modes"] = tuple(
            TransportMode(m["name"], m["cost_per_ton_mile"], m["co2_g_per_tonne_km"],
                          tuple(m["risk_per_product_mile"]))
            for m in d["modes"]
        )
        for key in ("demand_range", "theta"):
            d[key] = tuple(d[key])
        for key in ("capacity_ranges", "fixed_cost_ranges", "emission_ranges", "facility_risks"):
            d[key] = {k: tuple(v) for k, v in d[key].items()}
        return cls(**d)


def per_product_cost(mode: TransportMode, miles, mass_kg: float = 50.0, inflation: float = 1.0):
    return mode.cost_per_ton_mile * inflation * (mass_kg / KG_PER_SHORT_TON) * np.asarray(miles)


def per_product_emission(mode: TransportMode, miles, mass_kg: float = 50.0):
    return mode.co2_g_per_tonne_km * (mass_kg / KG_PER_TONNE) * np.asarray(miles) * KM_PER_MILE


def per_product_risk(mode: TransportMode, miles):
    """Worker counts per product, trailing axis = four risk categories."""
    return np.asarray(miles)[..., None] * np.asarray(mode.risk_per_product_mile)


def _distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.sqrt(((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2))


def generate(config: GenConfig) -> Instance:
    sz = config.sizes
    rng = np.random.Generator(np.random.PCG64(config.seed))
    side = config.region_side_miles
    sites = {
        name: rng.uniform(0.0, side, size=(getattr(sz, name), 2))
        for name in ("plants", "dist_centers", "customers", "recycles", "disposals")
    }
    lo, hi = config.demand_range
    demand = rng.integers(lo, hi, endpoint=True, size=sz.customers).astype(float)

    counts = {"P": sz.plants, "W": sz.dist_centers, "C": sz.recycles, "D": sz.disposals}

    def draw(ranges):
        return {code: rng.integers(*ranges[code], endpoint=True, size=counts[code]).astype(float)
                for code in ("P", "W", "C", "D")}

    fixed_cost = draw(config.fixed_cost_ranges)
    fixed_emission = draw(config.emission_ranges)
    cap_size = {"CPF": sz.plants, "CPR": sz.plants, "CWF": sz.dist_centers, "CWR": sz.dist_centers,
                "CRC": sz.recycles, "CDS": sz.disposals}
    capacity = {
        key: rng.integers(*config.capacity_ranges[key], endpoint=True, size=cap_size[key]).astype(float)
        for key in ("CPF", "CPR", "CWF", "CWR", "CRC", "CDS")
    }

    pw = _distances(sites["plants"], sites["dist_centers"])
    wc = _distances(sites["dist_centers"], sites["customers"])
    wr = _distances(sites["dist_centers"], sites["recycles"])
    wd = _distances(sites["dist_centers"], sites["disposals"])
    miles = {"PW": pw, "WC": wc, "CW": wc.T, "WP": pw.T, "WR": wr, "WD": wd}

    modes = config.modes[: sz.modes]
    mass = config.product_mass_kg
    transport_cost = {
        code: np.stack([per_product_cost(m, d, mass, config.inflation_factor) for m in modes], axis=-1)
        for code, d in miles.items()
    }
    transport_emission = {
        code: np.stack([per_product_emission(m, d, mass) for m in modes], axis=-1)
        for code, d in miles.items()
    }
    transport_risk = {
        code: np.stack([per_product_risk(m, d) for m in modes], axis=-2)
        for code, d in miles.items()
    }
    facility_risk = {
        code: np.tile(np.asarray(config.facility_risks[code], dtype=float), (counts[code], 1))
        for code in ("P", "W", "C", "D")
    }

    if capacity["CPF"].sum() < demand.sum():
        warnings.warn("total manufacturing capacity is below total demand; instance is infeasible",
                      stacklevel=2)

    return Instance(
        sizes=sz,
        demand=demand,
        fixed_cost=fixed_cost,
        transport_cost=transport_cost,
        fixed_emission=fixed_emission,
        transport_emission=transport_emission,
        theta=config.theta,
        facility_risk=facility_risk,
        transport_risk=transport_risk,
        capacity=capacity,
        alpha=config.alpha,
        beta=config.beta,
        delta=config.delta,
        mode_names=tuple(m.name for m in modes),
    )


def reference_instance(seed: int) -> Instance:
    """Full-size experiment: 5 plants, 8 DCs, 20 customers, 3 recyclers, 3 disposals, rail/road/air."""
    return generate(GenConfig(seed=seed))


def tiny_config(seed: int, **overrides) -> GenConfig:
    return replace(GenConfig(seed=seed, sizes=TINY_SIZES), **overrides)


def tiny_instance(seed: int, **overrides) -> Instance:
    """2 plants, 2 DCs, 3 customers, 1 recycler, 1 disposal, rail/road; six binaries."""
    return generate(tiny_config(seed, **overrides))
