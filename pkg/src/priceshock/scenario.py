"""Configuration-driven scenario runs.

Builds consumer price changes from observed inflation, carbon pricing and
indirect-tax schedules, prices them through each household's budget,
values the welfare cost with the calibrated demand system, recycles any
collected revenue, and aggregates the distributional tables. Runs are
deterministic under their seed; repeated runs emit byte-identical files.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._version import __version__
from .data import (
    CategorySet,
    DEFAULT_REPORT_GROUPS,
    BridgingMatrix,
    FuelTable,
    MrioTable,
    PriceScenario,
    load_bridge,
    load_fuels,
    load_household_survey,
    load_income_survey,
    load_mrio,
    load_price_relatives,
    read_table,
)
from .demand import (
    budget_elasticity,
    compensating_variation,
    equivalent_income,
    frisch_parameter,
    les_calibrate_frisch,
    les_demand,
    price_elasticities,
    LesParameters,
)
from .errors import DataValidationError, InfeasibleBudgetError
from .imputation import impute_expenditure_patterns, wls_fit
from .inputoutput import (
    bridge_to_categories,
    cost_passthrough,
    direct_fuel_intensity,
    embodied_intensity,
    leontief_inverse,
    sector_intensity,
    technology_matrix,
)
from .metrics import (
    atkinson,
    equivalise,
    progressivity_table,
    weighted_quantile_groups,
    welfare_decomposition,
)

RECYCLING_SCHEMES = ("none", "lump_sum_per_household", "per_capita", "targeted_bottom_q")

# Estimated group elasticities are clamped to an economically sane range
# before calibration; fits on small noisy groups can otherwise explode.
BUDGET_ELASTICITY_BOUNDS = (0.02, 4.0)
OWN_PRICE_BOUNDS = (-4.0, -1e-3)
MIN_GROUP_OBS = 10


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    """Resolved run configuration (paths already anchored to the config dir)."""

    files: dict[str, Path]
    carbon_tax: float = 0.0
    pass_through: float = 1.0
    border_adjustment: bool = False
    recycling: str = "none"
    recycling_quantile: int = 1
    impute: bool = False
    fuel_map: dict[str, str] = field(default_factory=dict)
    taxes: dict[str, dict[str, float]] = field(default_factory=dict)
    exchange_rate: float = 1.0
    months_per_period: float = 1.0
    frisch_level: float = 9.2
    frisch_slope: float = 0.973
    frisch_shift: float = 7000.0
    frisch_cap: float = -1.3
    size_bands: tuple[int, int] = (2, 5)
    engel_scale: str = "household_total"
    imputation_link: str = "logit"
    epsilon: float = 1.0
    atkinson_epsilon: float = 2.0
    scale: str = "sqrt"
    groups: int = 5
    skip_empty_categories: bool = False
    seed: int = 0
    raw: dict[str, str] = field(default_factory=dict)

    def config_hash(self) -> str:
        text = "\n".join(f"{k}={v}" for k, v in sorted(self.raw.items()))
        return hashlib.sha256(text.encode()).hexdigest()


def parse_config(path) -> RunConfig:
    """Read a flat key-value config file (dotted section prefixes, # comments)."""
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"config file not found: {path}")
    raw: dict[str, str] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise DataValidationError(f"{path}: line {lineno}: expected 'key = value'")
        key, _, value = stripped.partition("=")
        key = key.strip()
        if key in raw:
            raise DataValidationError(f"{path}: duplicate key {key!r}")
        raw[key] = value.strip()
    return build_config(raw, path.parent)


def _as_bool(value: str, key: str) -> bool:
    if value.lower() in ("true", "1", "yes"):
        return True
    if value.lower() in ("false", "0", "no"):
        return False
    raise DataValidationError(f"config key {key!r}: expected a boolean, got {value!r}")


def _as_float(value: str, key: str) -> float:
    try:
        return float(value)
    except ValueError:
        raise DataValidationError(f"config key {key!r}: expected a number, got {value!r}") from None


def build_config(raw: dict[str, str], base_dir) -> RunConfig:
    base_dir = Path(base_dir)
    cfg = RunConfig(files={}, raw=dict(raw))
    for key, value in raw.items():
        if key.startswith("files."):
            cfg.files[key[len("files."):]] = (base_dir / value).resolve()
        elif key.startswith("fuel_map."):
            cfg.fuel_map[key[len("fuel_map."):]] = value
        elif key.startswith("tax."):
            _, cat, field_name = key.split(".", 2)
            if field_name not in ("vat", "advalorem", "excise", "base_price"):
                raise DataValidationError(f"unknown tax field in config key {key!r}")
            cfg.taxes.setdefault(cat, {})[field_name] = _as_float(value, key)
        elif key == "scenario.carbon_tax":
            cfg.carbon_tax = _as_float(value, key)
        elif key == "scenario.pass_through":
            cfg.pass_through = _as_float(value, key)
        elif key == "scenario.border_adjustment":
            cfg.border_adjustment = _as_bool(value, key)
        elif key == "scenario.recycling":
            cfg.recycling = value
        elif key == "scenario.recycling_quantile":
            cfg.recycling_quantile = int(_as_float(value, key))
        elif key == "scenario.impute":
            cfg.impute = _as_bool(value, key)
        elif key == "elasticity.exchange_rate":
            cfg.exchange_rate = _as_float(value, key)
        elif key == "elasticity.months_per_period":
            cfg.months_per_period = _as_float(value, key)
        elif key == "elasticity.frisch_level":
            cfg.frisch_level = _as_float(value, key)
        elif key == "elasticity.frisch_slope":
            cfg.frisch_slope = _as_float(value, key)
        elif key == "elasticity.frisch_shift":
            cfg.frisch_shift = _as_float(value, key)
        elif key == "elasticity.frisch_cap":
            cfg.frisch_cap = _as_float(value, key)
        elif key == "elasticity.size_bands":
            parts = [int(p) for p in value.split(",")]
            if len(parts) != 2 or parts[0] >= parts[1]:
                raise DataValidationError("elasticity.size_bands must be two increasing cuts")
            cfg.size_bands = (parts[0], parts[1])
        elif key == "elasticity.engel_scale":
            if value not in ("household_total", "per_capita_month"):
                raise DataValidationError(f"unknown engel scale {value!r}")
            cfg.engel_scale = value
        elif key == "imputation.link":
            if value not in ("logit", "probit"):
                raise DataValidationError(f"unknown imputation link {value!r}")
            cfg.imputation_link = value
        elif key == "distribution.epsilon":
            cfg.epsilon = _as_float(value, key)
        elif key == "distribution.atkinson_epsilon":
            cfg.atkinson_epsilon = _as_float(value, key)
        elif key == "distribution.scale":
            cfg.scale = value
        elif key == "distribution.groups":
            cfg.groups = int(_as_float(value, key))
        elif key == "distribution.skip_empty_categories":
            cfg.skip_empty_categories = _as_bool(value, key)
        elif key == "seed":
            cfg.seed = int(_as_float(value, key))
        else:
            raise DataValidationError(f"unknown config key {key!r}")
    validate_config(cfg)
    return cfg


def validate_config(cfg: RunConfig) -> None:
    if "households" not in cfg.files:
        raise DataValidationError("config must name files.households")
    for name, p in cfg.files.items():
        if not p.exists():
            raise DataValidationError(f"configured file files.{name} does not exist: {p}")
    if cfg.epsilon < 0 or cfg.atkinson_epsilon < 0:
        raise DataValidationError("inequality aversion must be nonnegative")
    if cfg.groups < 2:
        raise DataValidationError("distribution.groups must be at least 2")
    if cfg.carbon_tax < 0:
        raise DataValidationError("carbon tax must be nonnegative")
    if cfg.recycling not in RECYCLING_SCHEMES:
        raise DataValidationError(f"unknown recycling scheme {cfg.recycling!r}")
    if cfg.exchange_rate <= 0:
        raise DataValidationError("elasticity.exchange_rate must be positive")
    if cfg.carbon_tax > 0:
        for required in ("mrio_z", "mrio_d", "mrio_x", "mrio_f", "bridge"):
            if required not in cfg.files:
                raise DataValidationError(f"carbon tax scenarios require files.{required}")


# ---------------------------------------------------------------------------
# Price formation
# ---------------------------------------------------------------------------


def consumer_price(producer_relative: float, vat: float = 0.0, advalorem: float = 0.0,
                   excise_per_unit: float = 0.0, base_price: float = 1.0) -> float:
    """Consumer price relative implied by a producer price relative.

    The consumer price is (producer + excise) * (1 + advalorem) * (1 + vat);
    the relative compares the same formula before and after the producer
    change, so purely multiplicative taxes leave relatives untouched while
    a per-unit excise dampens them.
    """
    if vat < 0 or advalorem < 0 or excise_per_unit < 0:
        raise DataValidationError("tax rates must be nonnegative")
    if base_price <= 0:
        raise DataValidationError("base price must be positive")
    before = (base_price + excise_per_unit) * (1.0 + advalorem) * (1.0 + vat)
    after = (base_price * (1.0 + producer_relative) + excise_per_unit) * (1.0 + advalorem) * (1.0 + vat)
    return after / before - 1.0


def compose_relatives(*relatives: np.ndarray) -> np.ndarray:
    """Multiplicative composition of price relatives: prod(1 + r) - 1."""
    out = None
    for r in relatives:
        r = np.asarray(r, dtype=float)
        out = r.copy() if out is None else (1.0 + out) * (1.0 + r) - 1.0
    return out


@dataclass(frozen=True)
class CarbonTaxResult:
    category_relatives: np.ndarray
    indirect_relatives: np.ndarray
    direct_relatives: np.ndarray
    producer_relatives: np.ndarray


def carbon_tax_scenario(
    rate: float,
    mrio: MrioTable,
    bridge: BridgingMatrix,
    *,
    pass_through: float = 1.0,
    border_adjustment: bool = False,
    fuels: FuelTable | None = None,
    fuel_map: dict[int, str] | None = None,
    n_categories: int | None = None,
) -> CarbonTaxResult:
    """Per-category consumer price relatives from a carbon tax.

    Sector cost shocks are the tax rate times each sector's emission
    intensity (domestic sectors only unless border adjustment is on),
    passed through the supply chain and bridged to categories. Purchased
    fuels in ``fuel_map`` additionally carry the tax on their combustion
    content directly.
    """
    if rate < 0:
        raise DataValidationError("carbon tax rate must be nonnegative")
    if tuple(bridge.products) != tuple(mrio.sectors):
        raise DataValidationError("bridge products do not match the inter-industry sectors")
    k = n_categories or bridge.shares.shape[0]
    intensity = sector_intensity(mrio)
    shock = rate * (intensity.total if border_adjustment else intensity.domestic)
    inv = leontief_inverse(technology_matrix(mrio))
    producer = cost_passthrough(inv, shock, pass_through)
    indirect = bridge_to_categories(bridge, producer)
    direct = np.zeros(k)
    for cat_index, fuel in (fuel_map or {}).items():
        if fuels is None:
            raise DataValidationError("fuel map supplied without a fuel table")
        direct[cat_index] = rate * direct_fuel_intensity(fuels, fuel)
    return CarbonTaxResult(
        category_relatives=compose_relatives(indirect, direct),
        indirect_relatives=indirect,
        direct_relatives=direct,
        producer_relatives=producer,
    )


def recycle_revenue(revenue: float, scheme: str, weights: np.ndarray,
                    sizes: np.ndarray | None = None,
                    target_mask: np.ndarray | None = None) -> np.ndarray:
    """Per-household transfers whose weighted sum reproduces the revenue.

    The last recipient absorbs any floating-point remainder so that
    conservation holds exactly.
    """
    if revenue < 0:
        raise DataValidationError("revenue must be nonnegative")
    weights = np.asarray(weights, dtype=float)
    transfers = np.zeros(len(weights))
    if revenue == 0:
        return transfers
    if scheme == "none":
        return transfers
    if scheme == "lump_sum_per_household":
        transfers[:] = revenue / weights.sum()
        recipients = weights > 0
    elif scheme == "per_capita":
        if sizes is None:
            raise DataValidationError("per-capita recycling needs household sizes")
        sizes = np.asarray(sizes, dtype=float)
        transfers = revenue * sizes / float(np.dot(weights, sizes))
        recipients = weights > 0
    elif scheme == "targeted_bottom_q":
        if target_mask is None or not np.any(target_mask):
            raise DataValidationError("targeted recycling has an empty target group")
        mass = float(weights[target_mask].sum())
        if mass <= 0:
            raise DataValidationError("targeted recycling group has zero weight")
        transfers[target_mask] = revenue / mass
        recipients = target_mask & (weights > 0)
    else:
        raise DataValidationError(f"unknown recycling scheme {scheme!r}")
    # absorb fp remainder deterministically on the last positive-weight recipient
    idx = np.nonzero(recipients)[0]
    if len(idx):
        last = idx[-1]
        for _ in range(2):
            residual = revenue - float(np.dot(weights, transfers))
            transfers[last] += residual / weights[last]
    return transfers


# ---------------------------------------------------------------------------
# Group elasticity estimation
# ---------------------------------------------------------------------------


@dataclass
class GroupDemand:
    budget: np.ndarray
    own_price: np.ndarray
    mean_shares: np.ndarray
    xi: float
    n_obs: int
    clamped: int


def _engel_fit(exp: np.ndarray, totals: np.ndarray, weights: np.ndarray,
               cfg: RunConfig, sizes: np.ndarray) -> GroupDemand:
    """Per-category quadratic Engel curves -> budget and own-price elasticities."""
    k = exp.shape[1]
    if cfg.engel_scale == "per_capita_month":
        scale_total = totals / sizes / cfg.months_per_period
    else:
        scale_total = totals
    ln_x = np.log(scale_total)
    design = np.column_stack([np.ones(len(totals)), ln_x, ln_x**2])
    names = ["const", "ln_x", "ln_x_sq"]
    shares = exp / totals[:, np.newaxis]
    w_total = float(weights.sum())
    mean_shares = weights @ shares / w_total
    ln_c = float(np.dot(weights, ln_x)) / w_total
    budget = np.ones(k)
    clamped = 0
    for j in range(k):
        if mean_shares[j] <= 0:
            budget[j] = 0.0
            continue
        fit = wls_fit(design, shares[:, j], weights, names)
        beta, curvature = fit.coefficients[1], fit.coefficients[2]
        eta = float(budget_elasticity(mean_shares[j], beta, curvature, ln_c))
        lo, hi = BUDGET_ELASTICITY_BOUNDS
        if eta < lo or eta > hi:
            clamped += 1
        budget[j] = min(max(eta, lo), hi)
    consumption_pc_month = float(np.dot(weights, totals / sizes)) / w_total / cfg.months_per_period
    xi = frisch_parameter(
        consumption_pc_month, cfg.exchange_rate,
        level=cfg.frisch_level, slope=cfg.frisch_slope,
        shift=cfg.frisch_shift, cap=cfg.frisch_cap,
    )
    matrix = price_elasticities(budget, mean_shares, xi)
    own = np.diag(matrix).copy()
    lo, hi = OWN_PRICE_BOUNDS
    clamped += int(np.sum((own < lo) | (own > hi)))
    own = np.clip(own, lo, hi)
    return GroupDemand(budget=budget, own_price=own, mean_shares=mean_shares,
                       xi=xi, n_obs=len(totals), clamped=clamped)


def estimate_demand_groups(
    exp: np.ndarray, totals: np.ndarray, weights: np.ndarray, sizes: np.ndarray,
    quintiles: np.ndarray, cfg: RunConfig,
) -> tuple[list[GroupDemand], list[str], np.ndarray, int]:
    """One demand-system parameterisation per quintile x size-band cell.

    Cells with too few households fall back to their quintile, then to the
    whole sample, so estimation never fails on sparse cells.
    """
    lo, hi = cfg.size_bands
    band = np.where(sizes <= lo, 0, np.where(sizes <= hi, 1, 2))
    pooled = _engel_fit(exp, totals, weights, cfg, sizes)
    groups: list[GroupDemand] = []
    labels: list[str] = []
    assignment = np.zeros(len(totals), dtype=int)
    n_fallback = 0
    quintile_fits: dict[int, GroupDemand] = {}
    for q in sorted(set(quintiles.tolist())):
        q_sel = quintiles == q
        if int(q_sel.sum()) >= MIN_GROUP_OBS:
            quintile_fits[q] = _engel_fit(exp[q_sel], totals[q_sel], weights[q_sel], cfg, sizes[q_sel])
        for b in sorted(set(band[q_sel].tolist())):
            sel = q_sel & (band == b)
            if int(sel.sum()) >= MIN_GROUP_OBS:
                fit = _engel_fit(exp[sel], totals[sel], weights[sel], cfg, sizes[sel])
            elif q in quintile_fits:
                fit = quintile_fits[q]
                n_fallback += 1
            else:
                fit = pooled
                n_fallback += 1
            assignment[sel] = len(groups)
            groups.append(fit)
            labels.append(f"q{q + 1}_band{b + 1}")
    return groups, labels, assignment, n_fallback


# ---------------------------------------------------------------------------
# Scenario run
# ---------------------------------------------------------------------------


@dataclass
class ScenarioResult:
    categories: CategorySet
    group_names: tuple[str, ...]
    relatives_total: np.ndarray
    relatives_inflation: np.ndarray
    relatives_carbon: np.ndarray
    relatives_tax: np.ndarray
    household: dict[str, np.ndarray]
    tables: dict[str, tuple[list[str], list[list]]]
    revenue: float
    seed: int
    config_hash: str
    scenario: PriceScenario | None = None
    elasticities: list[list] = field(default_factory=list)
    diagnostics: dict[str, float] = field(default_factory=dict)


def run_scenario(cfg: RunConfig) -> ScenarioResult:
    """Execute the full pipeline described in the module docstring."""
    categories = CategorySet.default()
    survey = load_household_survey(cfg.files["households"], categories)
    records = survey.records

    if cfg.impute:
        if "income" not in cfg.files:
            raise DataValidationError("scenario.impute requires files.income")
        income = load_income_survey(cfg.files["income"])
        result = impute_expenditure_patterns(
            records, income.records, categories, seed=cfg.seed, link=cfg.imputation_link
        )
        records = result.records

    mrio = bridge = fuels = None
    if all(k in cfg.files for k in ("mrio_z", "mrio_d", "mrio_x", "mrio_f")):
        mrio = load_mrio(cfg.files["mrio_z"], cfg.files["mrio_d"],
                         cfg.files["mrio_x"], cfg.files["mrio_f"])
    if "bridge" in cfg.files:
        bridge = load_bridge(cfg.files["bridge"], categories)
    if "fuels" in cfg.files:
        fuels = load_fuels(cfg.files["fuels"])

    k = len(categories)
    rel_inflation = np.zeros(k)
    if "prices" in cfg.files:
        rel_inflation = load_price_relatives(cfg.files["prices"], categories)

    fuel_map_idx = {categories.index(c): f for c, f in cfg.fuel_map.items()}
    rel_carbon = np.zeros(k)
    carbon = None
    if cfg.carbon_tax > 0:
        if mrio is None or bridge is None:
            raise DataValidationError("carbon tax scenarios need the inter-industry inputs")
        carbon = carbon_tax_scenario(
            cfg.carbon_tax, mrio, bridge,
            pass_through=cfg.pass_through, border_adjustment=cfg.border_adjustment,
            fuels=fuels, fuel_map=fuel_map_idx if fuels is not None else None,
            n_categories=k,
        )
        # producer-side component runs through the indirect-tax schedule;
        # the combustion component is already a consumer-level change
        taxed = np.array([
            consumer_price(
                carbon.indirect_relatives[j],
                vat=cfg.taxes.get(c, {}).get("vat", 0.0),
                advalorem=cfg.taxes.get(c, {}).get("advalorem", 0.0),
                excise_per_unit=cfg.taxes.get(c, {}).get("excise", 0.0),
                base_price=cfg.taxes.get(c, {}).get("base_price", 1.0),
            )
            for j, c in enumerate(categories)
        ])
        rel_carbon = compose_relatives(taxed, carbon.direct_relatives)
    rel_tax = np.zeros(k)  # reserved for schedule-change scenarios
    rel_total = compose_relatives(rel_inflation, rel_carbon, rel_tax)
    # the typed scenario record re-validates the composed prices
    scenario = PriceScenario(
        category_relatives=rel_total,
        carbon_tax=cfg.carbon_tax,
        vat=np.array([cfg.taxes.get(c, {}).get("vat", 0.0) for c in categories]),
        advalorem=np.array([cfg.taxes.get(c, {}).get("advalorem", 0.0) for c in categories]),
        excise_per_unit=np.array([cfg.taxes.get(c, {}).get("excise", 0.0) for c in categories]),
        base_prices=np.array([cfg.taxes.get(c, {}).get("base_price", 1.0) for c in categories]),
        recycling=cfg.recycling,
        border_adjustment=cfg.border_adjustment,
    )

    n = len(records)
    weights = np.array([r.weight for r in records])
    sizes = np.array([r.size for r in records])
    exp = np.vstack([r.expenditure for r in records])
    totals = exp.sum(axis=1)
    shares = exp / totals[:, np.newaxis]

    eq = equivalise(totals, sizes, cfg.scale)
    quintiles = weighted_quantile_groups(eq, weights, cfg.groups)

    pi_h = shares @ rel_total
    burden_h = pi_h * totals

    # carbon revenue and recycling
    carbon_burden_h = exp @ rel_carbon
    revenue = float(np.dot(weights, carbon_burden_h)) if cfg.carbon_tax > 0 else 0.0
    target_mask = quintiles < cfg.recycling_quantile
    transfers = recycle_revenue(
        revenue if cfg.recycling != "none" else 0.0,
        cfg.recycling, weights, sizes=sizes, target_mask=target_mask,
    )

    groups, group_labels, assignment, n_fallback = estimate_demand_groups(
        exp, totals, weights, sizes, quintiles, cfg
    )

    p0 = np.ones(k)
    p1 = 1.0 + rel_total
    cv = np.zeros(n)
    ye = np.zeros(n)
    ye_net = np.zeros(n)
    fp_before = np.zeros(n)
    fp_after = np.zeros(n)
    n_cobb_douglas = 0

    unit_emissions = np.zeros(k)
    if mrio is not None and bridge is not None:
        inv = leontief_inverse(technology_matrix(mrio))
        embodied = embodied_intensity(inv, sector_intensity(mrio))
        unit_emissions = bridge.shares @ embodied["total"]
        for cat_index, fuel in fuel_map_idx.items():
            if fuels is not None:
                unit_emissions[cat_index] += direct_fuel_intensity(fuels, fuel)

    for i in range(n):
        g = groups[assignment[i]]
        try:
            params = les_calibrate_frisch(g.budget, g.xi, shares[i], exp[i], totals[i])
        except (InfeasibleBudgetError, DataValidationError):
            active = exp[i] > 0
            phi = np.where(active, shares[i], 0.0)
            params = LesParameters(gamma=np.zeros(k), phi=phi / phi.sum())
            n_cobb_douglas += 1
        try:
            cv[i] = compensating_variation(p0, p1, totals[i], params)
            ye[i] = equivalent_income(p0, p1, totals[i], params)
            ye_net[i] = equivalent_income(p0, p1, totals[i] + transfers[i], params)
            if np.any(unit_emissions > 0):
                fp_before[i] = float(np.dot(unit_emissions, exp[i]))
                q1 = les_demand(p1, totals[i] + transfers[i], params)
                fp_after[i] = float(np.dot(unit_emissions, q1))
        except InfeasibleBudgetError as exc:
            raise InfeasibleBudgetError(
                f"household {records[i].id!r}: {exc} (price change too large for the "
                "committed bundle)"
            ) from None

    cv_net = cv - transfers

    group_names = tuple(DEFAULT_REPORT_GROUPS.keys())
    group_cols = [
        [categories.index(c) for c in DEFAULT_REPORT_GROUPS[g]] for g in group_names
    ]
    share_g = np.column_stack([shares[:, cols].sum(axis=1) for cols in group_cols])
    burden_g = np.column_stack(
        [(exp[:, cols] * rel_total[cols]).sum(axis=1) for cols in group_cols]
    )

    household = {
        "id": np.array([r.id for r in records]),
        "weight": weights,
        "size": sizes,
        "quintile": quintiles,
        "x": totals,
        "equivalised": eq,
        "pi": pi_h,
        "burden": burden_h,
        "cv": cv,
        "transfer": transfers,
        "cv_net": cv_net,
        "ye": ye,
        "ye_net": ye_net,
        "fp_before": fp_before,
        "fp_after": fp_after,
    }
    for j, g in enumerate(group_names):
        household[f"share_{g}"] = share_g[:, j]
        household[f"burden_{g}"] = burden_g[:, j]

    # group-level demand parameters: calibrated at the group mean basket,
    # expressed per currency unit of total expenditure
    elasticity_rows: list[list] = []
    for label, g in zip(group_labels, groups):
        try:
            gp = les_calibrate_frisch(g.budget, g.xi, g.mean_shares, g.mean_shares, 1.0)
            phi_g, gamma_g = gp.phi, gp.gamma
        except DataValidationError:
            phi_g = np.zeros(k)
            gamma_g = np.zeros(k)
        for j, cat in enumerate(categories):
            if cfg.skip_empty_categories and g.mean_shares[j] <= 0:
                continue
            elasticity_rows.append([
                label, cat, g.mean_shares[j], g.budget[j], g.own_price[j],
                phi_g[j], gamma_g[j], g.xi,
            ])

    tables = build_tables(household, group_names, cfg)
    return ScenarioResult(
        categories=categories,
        group_names=group_names,
        relatives_total=rel_total,
        relatives_inflation=rel_inflation,
        relatives_carbon=rel_carbon,
        relatives_tax=rel_tax,
        household=household,
        tables=tables,
        revenue=revenue,
        seed=cfg.seed,
        config_hash=cfg.config_hash(),
        scenario=scenario,
        elasticities=elasticity_rows,
        diagnostics={
            "cobb_douglas_fallbacks": n_cobb_douglas,
            "group_fallbacks": n_fallback,
            "elasticity_clamps": sum(g.clamped for g in groups),
            "dropped_zero_total": survey.report.n_dropped_zero_total,
        },
    )


# ---------------------------------------------------------------------------
# Tables
# ---------------------------------------------------------------------------


def build_tables(hh: dict[str, np.ndarray], group_names, cfg: RunConfig):
    """Aggregate tables from the per-household frame (also used by `report`)."""
    w = hh["weight"]
    x = hh["x"]
    eq = hh["equivalised"]
    quintiles = hh["quintile"].astype(int)
    n_groups = int(quintiles.max()) + 1
    agg_x = float(np.dot(w, x))

    share_g = np.column_stack([hh[f"share_{g}"] for g in group_names])
    burden_g = np.column_stack([hh[f"burden_{g}"] for g in group_names])

    # t2: aggregate budget shares, group rates, contribution decomposition
    t2_rows = []
    for j, g in enumerate(group_names):
        exp_g = float(np.dot(w, x * share_g[:, j]))
        b_g = float(np.dot(w, burden_g[:, j]))
        share = exp_g / agg_x
        rate = b_g / exp_g if exp_g > 0 else 0.0
        t2_rows.append([g, share, rate, b_g / agg_x])
    total_rate = float(np.dot(w, hh["burden"])) / agg_x
    t2_rows.append(["total", 1.0, total_rate, total_rate])
    t2 = (["group", "budget_share", "avg_rate", "contribution"], t2_rows)

    # t3: budget shares by quintile plus relative expenditure
    mean_eq = float(np.dot(w, eq)) / float(w.sum())
    t3_rows = []
    for q in range(n_groups):
        sel = quintiles == q
        wq = w[sel]
        exp_q = float(np.dot(wq, x[sel]))
        row = [f"q{q + 1}"]
        row += [float(np.dot(wq, x[sel] * share_g[sel, j])) / exp_q for j in range(len(group_names))]
        row.append((float(np.dot(wq, eq[sel])) / float(wq.sum())) / mean_eq)
        t3_rows.append(row)
    avg_row = ["average"]
    avg_row += [float(np.dot(w, x * share_g[:, j])) / agg_x for j in range(len(group_names))]
    avg_row.append(1.0)
    t3_rows.append(avg_row)
    t3 = (["quintile", *group_names, "relative_expenditure"], t3_rows)

    # t5: household-weighted group contributions to inflation by quintile
    rate_contrib = burden_g / x[:, np.newaxis]
    t5_rows = []
    for q in range(n_groups):
        sel = quintiles == q
        wq_sum = float(w[sel].sum())
        cells = [float(np.dot(w[sel], rate_contrib[sel, j])) / wq_sum for j in range(len(group_names))]
        t5_rows.append([f"q{q + 1}", *cells, sum(cells)])
    cells = [float(np.dot(w, rate_contrib[:, j])) / float(w.sum()) for j in range(len(group_names))]
    t5_rows.append(["average", *cells, sum(cells)])
    t5 = (["quintile", *group_names, "average"], t5_rows)

    # t6: progressivity decomposition on equivalised values (burdens scaled
    # by the same equivalence factor as expenditure)
    scale_factor = eq / x
    rows = progressivity_table(eq, w, burden_g * scale_factor[:, np.newaxis], list(group_names))
    t6_rows = [
        [r.name, r.ci_pre, r.ci_burden, r.ci_adjusted, r.rs, r.kakwani,
         r.avg_rate, r.reranking, r.contribution_to_k]
        for r in rows
    ]
    t6 = (
        ["group", "ci_pre", "ci_burden", "ci_adjusted", "rs", "kakwani",
         "avg_rate", "reranking", "contribution_to_k"],
        t6_rows,
    )

    # t7: welfare loss decomposition into fixed-basket and behavioural parts
    t7_rows = []
    for q in range(n_groups):
        sel = quintiles == q
        xq = float(np.dot(w[sel], x[sel]))
        infl = float(np.dot(w[sel], hh["burden"][sel])) / xq
        rel_cv = float(np.dot(w[sel], hh["cv"][sel])) / xq
        t7_rows.append([f"q{q + 1}", infl, rel_cv, rel_cv - infl])
    infl = float(np.dot(w, hh["burden"])) / agg_x
    rel_cv = float(np.dot(w, hh["cv"])) / agg_x
    t7_rows.append(["total", infl, rel_cv, rel_cv - infl])
    t7 = (["quintile", "inflation", "relative_cv", "behaviour"], t7_rows)

    # t8/t9: Atkinson welfare before and after, on equivalised equivalent income
    ye_eq = equivalise(hh["ye_net"], hh["size"], cfg.scale)
    pre = atkinson(eq, w, cfg.atkinson_epsilon)
    post = atkinson(ye_eq, w, cfg.atkinson_epsilon)
    t8 = (
        ["state", "atkinson", "mean_ye", "yede"],
        [
            ["pre", pre.index, pre.mean, pre.yede],
            ["post", post.index, post.mean, post.yede],
            ["relative_change", (post.index - pre.index) / pre.index if pre.index != 0 else 0.0,
             post.mean / pre.mean - 1.0, post.yede / pre.yede - 1.0],
        ],
    )
    decomp = welfare_decomposition(pre, post)
    t9 = (
        ["component", "value"],
        [
            ["equity", decomp["equity"]],
            ["efficiency", decomp["efficiency"]],
            ["interaction", decomp["interaction"]],
            ["total", decomp["total"]],
        ],
    )
    return {
        "t2_inflation_drivers": t2,
        "t3_budget_shares": t3,
        "t5_incidence": t5,
        "t6_progressivity": t6,
        "t7_welfare": t7,
        "t8_atkinson": t8,
        "t9_decomposition": t9,
    }


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

MONEY_COLUMNS = {"x", "equivalised", "burden", "cv", "transfer", "cv_net", "ye", "ye_net"}


def _format_cell(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return f"{float(value):.6g}"


def _format_money(value) -> str:
    return f"{float(value):.6f}"


def emit_reports(result: ScenarioResult, outdir) -> dict[str, Path]:
    """Write the aggregate tables, the per-household frame and a run manifest."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    paths: dict[str, Path] = {}
    for name, (header, rows) in result.tables.items():
        p = outdir / f"{name}.csv"
        with open(p, "w") as fh:
            fh.write(",".join(header) + "\n")
            for row in rows:
                fh.write(",".join(_format_cell(c) for c in row) + "\n")
        paths[name] = p

    hh = result.household
    p = outdir / "households.csv"
    columns = list(hh.keys())
    with open(p, "w") as fh:
        fh.write(",".join(columns) + "\n")
        for i in range(len(hh["id"])):
            cells = []
            for c in columns:
                v = hh[c][i]
                if c == "id":
                    cells.append(str(v))
                elif c == "quintile":
                    cells.append(str(int(v)))
                elif c in MONEY_COLUMNS or c.startswith("burden_"):
                    cells.append(_format_money(v))
                else:
                    cells.append(_format_cell(v))
            fh.write(",".join(cells) + "\n")
    paths["households"] = p

    p = outdir / "consumer_prices.csv"
    with open(p, "w") as fh:
        fh.write("category,relative,inflation,carbon,tax\n")
        for j, c in enumerate(result.categories):
            fh.write(
                f"{c},{result.relatives_total[j]:.12g},{result.relatives_inflation[j]:.12g},"
                f"{result.relatives_carbon[j]:.12g},{result.relatives_tax[j]:.12g}\n"
            )
    paths["consumer_prices"] = p

    p = outdir / "elasticities.csv"
    with open(p, "w") as fh:
        fh.write("group,category,share,eta,eta_own,phi,gamma,xi\n")
        for row in result.elasticities:
            fh.write(row[0] + "," + row[1] + ","
                     + ",".join(_format_cell(v) for v in row[2:]) + "\n")
    paths["elasticities"] = p

    p = outdir / "run_manifest.json"
    manifest = {
        "config_sha256": result.config_hash,
        "seed": result.seed,
        "package_version": __version__,
        "revenue": f"{result.revenue:.6f}",
        "diagnostics": {k: int(v) for k, v in result.diagnostics.items()},
    }
    p.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    paths["manifest"] = p
    return paths


def rebuild_tables_from_csv(households_csv, cfg: RunConfig):
    """Recompute every aggregate table from a stored per-household frame."""
    header, rows = read_table(households_csv)
    idx = {c: j for j, c in enumerate(header)}
    needed = {"weight", "size", "quintile", "x", "equivalised", "pi", "burden", "cv", "ye_net"}
    missing = needed - set(header)
    if missing:
        raise DataValidationError(f"{households_csv}: missing columns {sorted(missing)}")
    hh: dict[str, np.ndarray] = {}
    for c in header:
        if c == "id":
            hh[c] = np.array([r[idx[c]] for r in rows])
        else:
            hh[c] = np.array([float(r[idx[c]]) for r in rows])
    group_names = tuple(
        c[len("share_"):] for c in header if c.startswith("share_")
    )
    return build_tables(hh, group_names, cfg), group_names
