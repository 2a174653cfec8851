"""Billing of realized timelines and cross-configuration comparison.

Sign convention: ``net_cost_usd`` positive means the site pays. Export
revenue enters ``energy_cost_usd`` with a negative sign, so
``net_cost = energy_cost + demand_charge`` always holds. Energy totals are
reported in MWh; everything internal stays in kW/kWh.
"""

from __future__ import annotations

import json
from typing import Optional

import numpy as np

from .types import (
    DispatchTimeline,
    RetailTariff,
    SettlementReport,
    TimeGrid,
    WholesaleTariff,
)

#: Reference amortized investment for a 150 MW renewable plant, USD/month.
REFERENCE_AMORTIZED_USD = 2.46e6
REFERENCE_CAPACITY_KW = 150_000.0


def default_amortized_cost(renewable_capacity_kw: float) -> float:
    """Amortized monthly renewable investment, scaled linearly from the
    150 MW / $2.46M-per-month reference point."""
    return REFERENCE_AMORTIZED_USD * renewable_capacity_kw / REFERENCE_CAPACITY_KW


def _energy_totals(timeline: DispatchTimeline, grid: TimeGrid) -> tuple:
    dt = grid.interval_hours
    imported_mwh = float(timeline.import_kw.sum()) * dt / 1000.0
    exported_mwh = float(timeline.export_kw.sum()) * dt / 1000.0
    self_mwh = (
        float(np.minimum(timeline.dc_power_kw, timeline.renewable_kw).sum()) * dt / 1000.0
    )
    return imported_mwh, exported_mwh, self_mwh


def settle_wholesale(
    timeline: DispatchTimeline,
    tariff: WholesaleTariff,
    grid: TimeGrid,
    configuration: str = "",
) -> SettlementReport:
    """Bill every kWh exchanged at the nodal price; no demand charge."""
    lmp = tariff.lmp_usd_per_kwh
    if len(lmp) != timeline.num_intervals:
        raise ValueError(
            f"lmp length {len(lmp)} != timeline length {timeline.num_intervals}"
        )
    dt = grid.interval_hours
    energy = float(np.sum(lmp * (timeline.import_kw - timeline.export_kw)) * dt)
    imported_mwh, exported_mwh, self_mwh = _energy_totals(timeline, grid)
    return SettlementReport(
        market="wholesale",
        configuration=configuration,
        imported_mwh=imported_mwh,
        exported_mwh=exported_mwh,
        self_consumed_mwh=self_mwh,
        peak_import_kw=timeline.peak_import_kw,
        energy_cost_usd=energy,
        demand_charge_usd=0.0,
        net_cost_usd=energy,
    )


def settle_retail(
    timeline: DispatchTimeline,
    tariff: RetailTariff,
    grid: TimeGrid,
    configuration: str = "",
    peak_window_intervals: int = 1,
) -> SettlementReport:
    """Bill at split import/export rates plus a peak demand charge.

    The demand charge applies to the maximum import averaged over a
    rolling window of ``peak_window_intervals`` (default one interval,
    i.e. a peak window equal to the settlement interval).
    """
    imp, exp = tariff.import_rate_usd_per_kwh, tariff.export_rate_usd_per_kwh
    if len(imp) != timeline.num_intervals or len(exp) != timeline.num_intervals:
        raise ValueError(
            f"rate length {len(imp)}/{len(exp)} != timeline length "
            f"{timeline.num_intervals}"
        )
    if peak_window_intervals < 1 or peak_window_intervals > timeline.num_intervals:
        raise ValueError("peak_window_intervals out of range")
    dt = grid.interval_hours
    energy = float(
        np.sum(imp * timeline.import_kw - exp * timeline.export_kw) * dt
    )
    if peak_window_intervals == 1:
        peak = timeline.peak_import_kw
    else:
        kernel = np.ones(peak_window_intervals) / peak_window_intervals
        peak = float(np.convolve(timeline.import_kw, kernel, mode="valid").max())
    demand = tariff.demand_charge_usd_per_kw * peak
    imported_mwh, exported_mwh, self_mwh = _energy_totals(timeline, grid)
    return SettlementReport(
        market="retail",
        configuration=configuration,
        imported_mwh=imported_mwh,
        exported_mwh=exported_mwh,
        self_consumed_mwh=self_mwh,
        peak_import_kw=peak,
        energy_cost_usd=energy,
        demand_charge_usd=demand,
        net_cost_usd=energy + demand,
    )


def compare_configurations(
    reports: list,
    amortized_renewable_cost_usd: float,
    baseline: str = "no-colocation",
) -> list:
    """Fill savings columns relative to the named baseline configuration.

    pct savings = 100 * (baseline net cost - config net cost) / baseline
    net cost; investment-adjusted savings = dollar savings minus the
    amortized renewable investment. The baseline row keeps 0% savings and
    no investment adjustment (it made no renewable investment). Reports
    must share one market; comparing across markets is a caller bug.
    """
    if not reports:
        raise ValueError("no reports to compare")
    markets = {r.market for r in reports}
    if len(markets) > 1:
        raise ValueError(f"reports mix markets {sorted(markets)}")
    base = [r for r in reports if r.configuration == baseline]
    if not base:
        raise ValueError(
            f"no {baseline!r} baseline among configurations "
            f"{[r.configuration for r in reports]}"
        )
    base_cost = base[0].net_cost_usd
    out = []
    for r in reports:
        updated = SettlementReport(**{k: getattr(r, k) for k in r.field_order})
        if r.configuration == baseline:
            updated.pct_savings_vs_baseline = 0.0
            updated.investment_adjusted_savings_usd = None
        else:
            savings = base_cost - r.net_cost_usd
            updated.pct_savings_vs_baseline = (
                100.0 * savings / base_cost if base_cost != 0 else None
            )
            updated.investment_adjusted_savings_usd = (
                savings - amortized_renewable_cost_usd
            )
        out.append(updated)
    return out


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def reports_to_csv(reports: list) -> str:
    """One row per report, columns in SettlementReport.field_order."""
    lines = [",".join(SettlementReport.field_order)]
    for r in reports:
        lines.append(",".join(_cell(getattr(r, name)) for name in r.field_order))
    return "\n".join(lines) + "\n"


def reports_from_csv(text: str) -> list:
    header, *rows = [line for line in text.splitlines() if line.strip()]
    names = header.split(",")
    if tuple(names) != SettlementReport.field_order:
        raise ValueError(f"unexpected report columns {names}")
    out = []
    for row in rows:
        cells = row.split(",")
        kwargs = {}
        for name, cell in zip(names, cells):
            if name in ("market", "configuration"):
                kwargs[name] = cell
            else:
                kwargs[name] = None if cell == "" else float(cell)
        out.append(SettlementReport(**kwargs))
    return out


def reports_to_json(reports: list) -> str:
    """Nested ``{market: {configuration: {field: value}}}`` rendering."""
    tree: dict = {}
    for r in reports:
        row = r.as_row()
        row.pop("market")
        row.pop("configuration")
        tree.setdefault(r.market, {})[r.configuration] = row
    return json.dumps(tree, indent=2) + "\n"


def reports_from_json(text: str) -> list:
    tree = json.loads(text)
    out = []
    for market, configs in tree.items():
        for configuration, row in configs.items():
            out.append(SettlementReport(market=market, configuration=configuration, **row))
    return out
