"""Domain types and CSV ingestion.

All inputs arrive as CSV files with a header row, one file per matrix or
vector. Loaders are strict: labels must match the registry exactly
(case-sensitive), cells must parse, and nothing is repaired silently --
every mutation a loader performs (dropping a zero-expenditure household)
is counted in its load report.

Normative schemas
-----------------
households.csv   id, weight, size, inc?, demo_*..., exp_<category>...
mrio_z.csv       sector, <sector labels...>   (row i = flows from sector i)
mrio_d.csv       sector, d
mrio_x.csv       sector, x, origin?           (origin: domestic | imported)
mrio_f.csv       sector, f
bridge.csv       category, <product labels...>
prices.csv       category, pi
fuels.csv        fuel, price, kgco2_per_unit

Rows of keyed files may appear in any order; the full label set must match
the registry with no duplicates. Values are written back with at most 12
significant digits, which round-trips bit-for-bit through the loaders.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import DataValidationError

# Canonical 19-way expenditure classification. Alcohol and childcare may
# carry no recorded spending in a survey; they stay in the registry with
# all-zero columns so that vector layouts are fixed for a run.
DEFAULT_CATEGORY_IDS = (
    "food",
    "alcohol",
    "tobacco",
    "clothing",
    "domestic_energy",
    "electricity",
    "rents",
    "household_services",
    "health",
    "private_transport",
    "public_transport",
    "communication",
    "recreation",
    "education",
    "restaurants",
    "other",
    "childcare",
    "motor_fuels",
    "durables",
)

CATEGORY_LABELS = {
    "food": "Food and non-alcoholic beverages",
    "alcohol": "Alcoholic beverages",
    "tobacco": "Tobacco",
    "clothing": "Clothing and footwear",
    "domestic_energy": "Domestic energy",
    "electricity": "Electricity",
    "rents": "Rents",
    "household_services": "Household services",
    "health": "Health",
    "private_transport": "Private transport",
    "public_transport": "Public transport",
    "communication": "Communication",
    "recreation": "Recreation and culture",
    "education": "Education",
    "restaurants": "Restaurants and hotels",
    "other": "Other goods and services",
    "childcare": "Childcare costs",
    "motor_fuels": "Motor fuels",
    "durables": "Durables",
}

# Default four-way reporting aggregation used by the incidence tables.
DEFAULT_REPORT_GROUPS: dict[str, tuple[str, ...]] = {
    "food": ("food",),
    "motor_fuels": ("motor_fuels",),
    "domestic_energy_electricity": ("domestic_energy", "electricity"),
    "other": (
        "alcohol",
        "tobacco",
        "clothing",
        "rents",
        "household_services",
        "health",
        "private_transport",
        "public_transport",
        "communication",
        "recreation",
        "education",
        "restaurants",
        "other",
        "childcare",
        "durables",
    ),
}

EXPENDITURE_PREFIX = "exp_"
DEMOGRAPHIC_PREFIX = "demo_"

BRIDGE_ROW_TOL = 1e-9
MRIO_IDENTITY_RTOL = 1e-6


def format_value(v: float) -> str:
    """Canonical decimal text: up to 12 significant digits.

    Distinct 12-digit decimals map to distinct doubles, so text written
    here reloads to the exact same float.
    """
    return f"{float(v):.12g}"


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class CategorySet:
    """Ordered registry of expenditure-category identifiers.

    The order is fixed for a run; every per-category vector in the package
    is indexed in this order.
    """

    ids: tuple[str, ...]

    def __post_init__(self):
        if not self.ids:
            raise DataValidationError("category set is empty")
        if any(not c for c in self.ids):
            raise DataValidationError("category identifiers must be non-empty")
        if len(set(self.ids)) != len(self.ids):
            raise DataValidationError("category identifiers must be unique")

    @classmethod
    def default(cls) -> "CategorySet":
        return cls(DEFAULT_CATEGORY_IDS)

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self):
        return iter(self.ids)

    def index(self, category: str) -> int:
        try:
            return self.ids.index(category)
        except ValueError:
            raise DataValidationError(f"unknown category {category!r}") from None


@dataclass(frozen=True)
class HouseholdRecord:
    """One survey household.

    ``expenditure`` is currency per survey period, indexed by the run's
    CategorySet. Total expenditure is the category sum and must be
    strictly positive; zero-total rows are dropped at load time, never
    constructed.
    """

    id: str
    weight: float
    size: float
    expenditure: np.ndarray
    demographics: Mapping[str, float] = field(default_factory=dict)
    disposable_income: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "expenditure", _freeze(self.expenditure))
        if self.weight < 0:
            raise DataValidationError(f"household {self.id}: negative weight {self.weight}")
        if self.size < 1:
            raise DataValidationError(f"household {self.id}: size {self.size} < 1")
        if np.any(self.expenditure < 0):
            raise DataValidationError(f"household {self.id}: negative expenditure")
        if self.total <= 0:
            raise DataValidationError(f"household {self.id}: zero total expenditure")

    @property
    def total(self) -> float:
        return float(self.expenditure.sum())

    def budget_shares(self) -> np.ndarray:
        return self.expenditure / self.total


@dataclass(frozen=True)
class MrioTable:
    """Inter-industry accounts: flows Z, final demand d, output x, emissions f.

    Row identity: x_i = sum_j Z_ij + d_i within ``identity_rtol`` relative
    to x_i. ``origin`` flags each sector domestic or imported, which
    controls whether it is exposed to domestic carbon pricing.
    """

    sectors: tuple[str, ...]
    flows: np.ndarray
    final_demand: np.ndarray
    output: np.ndarray
    emissions: np.ndarray
    origin: tuple[str, ...]
    identity_rtol: float = MRIO_IDENTITY_RTOL

    def __post_init__(self):
        n = len(self.sectors)
        object.__setattr__(self, "flows", _freeze(self.flows))
        object.__setattr__(self, "final_demand", _freeze(self.final_demand))
        object.__setattr__(self, "output", _freeze(self.output))
        object.__setattr__(self, "emissions", _freeze(self.emissions))
        if self.flows.shape != (n, n):
            raise DataValidationError(
                f"flow matrix is {self.flows.shape}, expected ({n}, {n})"
            )
        for name, vec in (
            ("final demand", self.final_demand),
            ("output", self.output),
            ("emissions", self.emissions),
        ):
            if vec.shape != (n,):
                raise DataValidationError(f"{name} vector has length {vec.shape}, expected {n}")
        if len(self.origin) != n:
            raise DataValidationError("origin flags do not cover all sectors")
        bad = set(self.origin) - {"domestic", "imported"}
        if bad:
            raise DataValidationError(f"unknown origin flags {sorted(bad)}")
        if np.any(self.flows < 0) or np.any(self.final_demand < 0) or np.any(self.emissions < 0):
            raise DataValidationError("flows, final demand and emissions must be nonnegative")
        if np.any(self.output <= 0):
            i = int(np.argmin(self.output))
            raise DataValidationError(f"sector {self.sectors[i]!r}: output must be strictly positive")
        resid = self.output - (self.flows.sum(axis=1) + self.final_demand)
        rel = np.abs(resid) / self.output
        worst = int(np.argmax(rel))
        if rel[worst] > self.identity_rtol:
            raise DataValidationError(
                "accounting identity violated: sector "
                f"{self.sectors[worst]!r} residual {resid[worst]:.6g} "
                f"({rel[worst]:.3g} relative, tolerance {self.identity_rtol:g})"
            )

    @property
    def n(self) -> int:
        return len(self.sectors)

    def domestic_mask(self) -> np.ndarray:
        return np.array([o == "domestic" for o in self.origin])


@dataclass(frozen=True)
class BridgingMatrix:
    """Row-stochastic map from consumption categories to industry products."""

    categories: tuple[str, ...]
    products: tuple[str, ...]
    shares: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "shares", _freeze(self.shares))
        if self.shares.shape != (len(self.categories), len(self.products)):
            raise DataValidationError("bridging matrix shape does not match its labels")
        if np.any(self.shares < 0):
            raise DataValidationError("bridging shares must be nonnegative")
        rows = self.shares.sum(axis=1)
        bad = np.abs(rows - 1.0) > BRIDGE_ROW_TOL
        if np.any(bad):
            i = int(np.argmax(np.abs(rows - 1.0)))
            raise DataValidationError(
                f"bridging row {self.categories[i]!r} sums to {rows[i]:.12g}, expected 1"
            )


@dataclass(frozen=True)
class FuelTable:
    """Prices per physical unit and carbon content (kg CO2 per unit) by fuel."""

    fuels: tuple[str, ...]
    price: np.ndarray
    carbon_kg_per_unit: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "price", _freeze(self.price))
        object.__setattr__(self, "carbon_kg_per_unit", _freeze(self.carbon_kg_per_unit))
        if len(set(self.fuels)) != len(self.fuels):
            raise DataValidationError("duplicate fuel names")
        if self.price.shape != (len(self.fuels),) or self.carbon_kg_per_unit.shape != (len(self.fuels),):
            raise DataValidationError("fuel table vectors do not match the fuel list")
        if np.any(self.price <= 0):
            raise DataValidationError("fuel prices must be strictly positive")
        if np.any(self.carbon_kg_per_unit <= 0):
            raise DataValidationError("fuel carbon contents must be strictly positive")

    def index(self, fuel: str) -> int:
        try:
            return self.fuels.index(fuel)
        except ValueError:
            raise DataValidationError(f"unknown fuel {fuel!r}") from None


@dataclass(frozen=True)
class PriceScenario:
    """A priced shock: category price relatives plus policy instruments.

    ``category_relatives`` are proportional consumer-price changes
    (0.4289 means +42.89%). Indirect-tax rates are per category; excises
    are per physical unit and interact with ``base_prices``.
    """

    category_relatives: np.ndarray
    carbon_tax: float = 0.0
    vat: np.ndarray | None = None
    advalorem: np.ndarray | None = None
    excise_per_unit: np.ndarray | None = None
    base_prices: np.ndarray | None = None
    recycling: str = "none"
    border_adjustment: bool = False

    def __post_init__(self):
        object.__setattr__(self, "category_relatives", _freeze(self.category_relatives))
        n = self.category_relatives.shape[0]
        if np.any(self.category_relatives <= -1.0):
            raise DataValidationError("price relatives must exceed -1 (prices stay positive)")
        if self.carbon_tax < 0:
            raise DataValidationError("carbon tax must be nonnegative")
        for name in ("vat", "advalorem", "excise_per_unit", "base_prices"):
            v = getattr(self, name)
            if v is None:
                continue
            v = _freeze(v)
            object.__setattr__(self, name, v)
            if v.shape != (n,):
                raise DataValidationError(f"{name} must have one entry per category")
            if name == "base_prices":
                if np.any(v <= 0):
                    raise DataValidationError("base prices must be strictly positive")
            elif np.any(v < 0):
                raise DataValidationError(f"{name} rates must be nonnegative")


@dataclass(frozen=True)
class IncomeRecord:
    """One row of the imputation target: income and covariates, no basket."""

    id: str
    weight: float
    size: float
    disposable_income: float
    demographics: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.weight < 0:
            raise DataValidationError(f"record {self.id}: negative weight {self.weight}")
        if self.size < 1:
            raise DataValidationError(f"record {self.id}: size {self.size} < 1")


@dataclass
class LoadReport:
    """What a loader did: rows seen, records kept, mutations performed."""

    source: str
    n_rows: int = 0
    n_loaded: int = 0
    n_dropped_zero_total: int = 0
    notes: list[str] = field(default_factory=list)


@dataclass
class HouseholdSurvey:
    records: list[HouseholdRecord]
    report: LoadReport


@dataclass
class IncomeSurvey:
    records: list[IncomeRecord]
    report: LoadReport


# ---------------------------------------------------------------------------
# CSV plumbing
# ---------------------------------------------------------------------------


def read_table(path) -> tuple[list[str], list[list[str]]]:
    """Read a CSV file into (header, rows), rejecting ragged or headerless files."""
    path = Path(path)
    if not path.exists():
        raise DataValidationError(f"file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataValidationError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise DataValidationError(
                    f"{path}: row {lineno} has {len(row)} cells, header has {len(header)}"
                )
            rows.append(row)
    if len(set(header)) != len(header):
        dupes = sorted({c for c in header if header.count(c) > 1})
        raise DataValidationError(f"{path}: duplicate columns {dupes}")
    return header, rows


def _parse_cell(text: str, path, lineno: int, column: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DataValidationError(
            f"{path}: row {lineno}, column {column!r}: non-numeric value {text!r}"
        ) from None


def _keyed_rows(path, key_column: str, expected: Sequence[str]) -> dict[str, tuple[int, list[str]]]:
    """Rows of a keyed file, validated against the expected label set."""
    header, rows = read_table(path)
    if header[0] != key_column:
        raise DataValidationError(f"{path}: first column must be {key_column!r}, got {header[0]!r}")
    seen: dict[str, tuple[int, list[str]]] = {}
    for lineno, row in enumerate(rows, start=2):
        key = row[0]
        if key in seen:
            raise DataValidationError(f"{path}: duplicate {key_column} {key!r}")
        seen[key] = (lineno, row)
    missing = [k for k in expected if k not in seen]
    extra = [k for k in seen if k not in set(expected)]
    if missing or extra:
        raise DataValidationError(
            f"{path}: {key_column} labels do not match the registry"
            + (f"; missing {missing}" if missing else "")
            + (f"; unexpected {extra}" if extra else "")
        )
    return seen


# ---------------------------------------------------------------------------
# Loaders
# ---------------------------------------------------------------------------


def load_household_survey(path, categories: CategorySet) -> HouseholdSurvey:
    """Load households.csv, dropping (and counting) zero-expenditure rows.

    A missing ``inc`` column is legal; operations that require income must
    fail loudly when it is absent rather than default it here.
    """
    path = Path(path)
    header, rows = read_table(path)
    required = ["id", "weight", "size"]
    missing = [c for c in required if c not in header]
    if missing:
        raise DataValidationError(f"{path}: missing required columns {missing}")
    exp_cols = {c[len(EXPENDITURE_PREFIX):]: c for c in header if c.startswith(EXPENDITURE_PREFIX)}
    missing_cats = [c for c in categories if c not in exp_cols]
    if missing_cats:
        raise DataValidationError(f"{path}: missing expenditure columns for {missing_cats}")
    unknown = [exp_cols[c] for c in exp_cols if c not in set(categories.ids)]
    if unknown:
        raise DataValidationError(f"{path}: unknown expenditure columns {sorted(unknown)}")
    demo_cols = [c for c in header if c.startswith(DEMOGRAPHIC_PREFIX)]
    has_income = "inc" in header
    idx = {c: header.index(c) for c in header}

    report = LoadReport(source=str(path), n_rows=len(rows))
    records: list[HouseholdRecord] = []
    seen_ids: set[str] = set()
    for lineno, row in enumerate(rows, start=2):
        hid = row[idx["id"]]
        if hid in seen_ids:
            raise DataValidationError(f"{path}: row {lineno}: duplicate household id {hid!r}")
        seen_ids.add(hid)
        weight = _parse_cell(row[idx["weight"]], path, lineno, "weight")
        size = _parse_cell(row[idx["size"]], path, lineno, "size")
        if weight < 0:
            raise DataValidationError(f"{path}: row {lineno}, column 'weight': negative value {weight}")
        if size < 1:
            raise DataValidationError(f"{path}: row {lineno}, column 'size': value {size} < 1")
        exp = np.empty(len(categories))
        for j, cat in enumerate(categories):
            col = exp_cols[cat]
            v = _parse_cell(row[idx[col]], path, lineno, col)
            if v < 0:
                raise DataValidationError(
                    f"{path}: row {lineno}, column {col!r}: negative expenditure {v}"
                )
            exp[j] = v
        if exp.sum() <= 0:
            report.n_dropped_zero_total += 1
            continue
        demo = {c[len(DEMOGRAPHIC_PREFIX):]: _parse_cell(row[idx[c]], path, lineno, c) for c in demo_cols}
        income = None
        if has_income:
            income = _parse_cell(row[idx["inc"]], path, lineno, "inc")
        records.append(
            HouseholdRecord(
                id=hid, weight=weight, size=size, expenditure=exp,
                demographics=demo, disposable_income=income,
            )
        )
    report.n_loaded = len(records)
    if report.n_dropped_zero_total:
        report.notes.append(
            f"dropped {report.n_dropped_zero_total} household(s) with zero total expenditure"
        )
    if not records:
        raise DataValidationError(f"{path}: no usable household rows")
    return HouseholdSurvey(records=records, report=report)


def load_income_survey(path) -> IncomeSurvey:
    """Load the imputation target: id, weight, size, inc, demo_* columns.

    Expenditure columns, if present, are ignored (and noted in the report);
    the dataset's own incomes define the calibration targets.
    """
    path = Path(path)
    header, rows = read_table(path)
    required = ["id", "weight", "size", "inc"]
    missing = [c for c in required if c not in header]
    if missing:
        raise DataValidationError(f"{path}: missing required columns {missing}")
    demo_cols = [c for c in header if c.startswith(DEMOGRAPHIC_PREFIX)]
    ignored = [c for c in header if c.startswith(EXPENDITURE_PREFIX)]
    idx = {c: header.index(c) for c in header}
    report = LoadReport(source=str(path), n_rows=len(rows))
    if ignored:
        report.notes.append(f"ignored {len(ignored)} expenditure column(s) in the income dataset")
    records: list[IncomeRecord] = []
    seen: set[str] = set()
    for lineno, row in enumerate(rows, start=2):
        rid = row[idx["id"]]
        if rid in seen:
            raise DataValidationError(f"{path}: row {lineno}: duplicate id {rid!r}")
        seen.add(rid)
        records.append(
            IncomeRecord(
                id=rid,
                weight=_parse_cell(row[idx["weight"]], path, lineno, "weight"),
                size=_parse_cell(row[idx["size"]], path, lineno, "size"),
                disposable_income=_parse_cell(row[idx["inc"]], path, lineno, "inc"),
                demographics={
                    c[len(DEMOGRAPHIC_PREFIX):]: _parse_cell(row[idx[c]], path, lineno, c)
                    for c in demo_cols
                },
            )
        )
    report.n_loaded = len(records)
    if not records:
        raise DataValidationError(f"{path}: no income rows")
    return IncomeSurvey(records=records, report=report)


def write_household_survey(path, records: Sequence[HouseholdRecord], categories: CategorySet,
                           extra_columns: Mapping[str, Sequence] | None = None) -> None:
    """Write records in the households.csv schema (12-significant-digit text)."""
    path = Path(path)
    demo_keys = sorted({k for r in records for k in r.demographics})
    has_income = any(r.disposable_income is not None for r in records)
    header = ["id", "weight", "size"]
    if has_income:
        header.append("inc")
    header += [DEMOGRAPHIC_PREFIX + k for k in demo_keys]
    header += [EXPENDITURE_PREFIX + c for c in categories]
    extras = dict(extra_columns or {})
    header += list(extras)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i, r in enumerate(records):
            row = [r.id, format_value(r.weight), format_value(r.size)]
            if has_income:
                row.append("" if r.disposable_income is None else format_value(r.disposable_income))
            row += [format_value(r.demographics.get(k, 0.0)) for k in demo_keys]
            row += [format_value(v) for v in r.expenditure]
            row += [str(extras[c][i]) for c in extras]
            writer.writerow(row)


def load_mrio(z_path, d_path, x_path, f_path, *, identity_rtol: float = MRIO_IDENTITY_RTOL) -> MrioTable:
    """Load the four MRIO files and verify the accounting identity."""
    z_path = Path(z_path)
    header, rows = read_table(z_path)
    if len(header) < 2:
        raise DataValidationError(f"{z_path}: flow matrix needs at least one sector column")
    col_sectors = header[1:]
    row_sectors = [r[0] for r in rows]
    if len(set(row_sectors)) != len(row_sectors):
        raise DataValidationError(f"{z_path}: duplicate sector rows")
    if set(col_sectors) != set(row_sectors) or len(col_sectors) != len(row_sectors):
        raise DataValidationError(f"{z_path}: row and column sector labels differ")
    sectors = tuple(row_sectors)
    col_pos = {s: j + 1 for j, s in enumerate(col_sectors)}
    n = len(sectors)
    Z = np.empty((n, n))
    for i, (lineno, row) in enumerate(zip(range(2, 2 + n), rows)):
        for j, s in enumerate(sectors):
            Z[i, j] = _parse_cell(row[col_pos[s]], z_path, lineno, s)

    def vector(path, value_col):
        keyed = _keyed_rows(path, "sector", sectors)
        header_v, _ = read_table(path)
        if value_col not in header_v:
            raise DataValidationError(f"{path}: missing column {value_col!r}")
        vi = header_v.index(value_col)
        out = np.empty(n)
        for k, s in enumerate(sectors):
            lineno, row = keyed[s]
            out[k] = _parse_cell(row[vi], path, lineno, value_col)
        return out, keyed, header_v

    d, _, _ = vector(d_path, "d")
    x, x_keyed, x_header = vector(x_path, "x")
    f, _, _ = vector(f_path, "f")
    origin = tuple("domestic" for _ in sectors)
    if "origin" in x_header:
        oi = x_header.index("origin")
        flags = []
        for s in sectors:
            lineno, row = x_keyed[s]
            flag = row[oi] or "domestic"
            if flag not in ("domestic", "imported"):
                raise DataValidationError(
                    f"{x_path}: row {lineno}, column 'origin': expected domestic/imported, got {flag!r}"
                )
            flags.append(flag)
        origin = tuple(flags)
    return MrioTable(
        sectors=sectors, flows=Z, final_demand=d, output=x, emissions=f,
        origin=origin, identity_rtol=identity_rtol,
    )


def load_bridge(path, categories: CategorySet) -> BridgingMatrix:
    path = Path(path)
    header, _ = read_table(path)
    products = tuple(header[1:])
    if not products:
        raise DataValidationError(f"{path}: bridging matrix needs product columns")
    keyed = _keyed_rows(path, "category", categories.ids)
    B = np.empty((len(categories), len(products)))
    for i, cat in enumerate(categories):
        lineno, row = keyed[cat]
        for j, p in enumerate(products):
            B[i, j] = _parse_cell(row[j + 1], path, lineno, p)
    return BridgingMatrix(categories=categories.ids, products=products, shares=B)


def load_price_relatives(path, categories: CategorySet) -> np.ndarray:
    """prices.csv -> per-category price relatives in registry order."""
    path = Path(path)
    header, _ = read_table(path)
    if "pi" not in header:
        raise DataValidationError(f"{path}: missing column 'pi'")
    vi = header.index("pi")
    keyed = _keyed_rows(path, "category", categories.ids)
    out = np.empty(len(categories))
    for i, cat in enumerate(categories):
        lineno, row = keyed[cat]
        out[i] = _parse_cell(row[vi], path, lineno, "pi")
    if np.any(out <= -1.0):
        raise DataValidationError(f"{path}: price relatives must exceed -1")
    return out


def load_fuels(path) -> FuelTable:
    path = Path(path)
    header, rows = read_table(path)
    for col in ("fuel", "price", "kgco2_per_unit"):
        if col not in header:
            raise DataValidationError(f"{path}: missing column {col!r}")
    fi, pi, ci = header.index("fuel"), header.index("price"), header.index("kgco2_per_unit")
    names, prices, carbon = [], [], []
    for lineno, row in enumerate(rows, start=2):
        names.append(row[fi])
        prices.append(_parse_cell(row[pi], path, lineno, "price"))
        carbon.append(_parse_cell(row[ci], path, lineno, "kgco2_per_unit"))
    return FuelTable(fuels=tuple(names), price=np.array(prices), carbon_kg_per_unit=np.array(carbon))
