"""Data-driven downlink link budget.

A budget is a list of signed line items. Transmit-side gains and losses
build the EIRP. Receive-side items (gains, losses, margins) move the NRSRP
the UE needs for the target throughput:

    sensitivity   = noise floor(bandwidth, NF) + required SINR
    required NRSRP = sensitivity + margins + rx losses - rx gains
                     - 10*log10(subcarrier_count)
    MAPL          = EIRP - sensitivity - margins - rx losses + rx gains

NRSRP is per resource element, MAPL is wideband: the two differ exactly by
the per-RE offset.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

from .radio import CarrierConfig, required_sinr_for_throughput, thermal_noise


class ItemKind(str, enum.Enum):
    TX_POWER = "TxPower_dBm"
    GAIN = "Gain_dB"
    LOSS = "Loss_dB"
    MARGIN = "Margin_dB"


class Side(str, enum.Enum):
    TX = "tx"
    RX = "rx"


@dataclass(frozen=True)
class BudgetLineItem:
    name: str
    value: float
    kind: ItemKind
    side: Side = Side.RX

    def __post_init__(self):
        try:
            kind = ItemKind(self.kind)
        except ValueError:
            raise ValueError(f"line item {self.name!r}: unknown kind {self.kind!r}") from None
        try:
            side = Side(self.side)
        except ValueError:
            raise ValueError(f"line item {self.name!r}: unknown side {self.side!r}") from None
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "side", side)
        if kind in (ItemKind.LOSS, ItemKind.MARGIN) and self.value < 0:
            raise ValueError(f"line item {self.name!r}: {kind.value} must be nonnegative")
        if kind is ItemKind.TX_POWER:
            object.__setattr__(self, "side", Side.TX)


@dataclass(frozen=True)
class LinkBudget:
    items: tuple[BudgetLineItem, ...]
    carrier: CarrierConfig
    target_throughput: float  # Mbps
    layers: int = 1
    efficiency: float = 0.75
    ue_noise_figure: float = 7.0  # dB

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        if not self.items:
            raise ValueError("link budget has no line items")
        if not self.target_throughput > 0:
            raise ValueError("target_throughput must be positive")
        n_tx = sum(1 for it in self.items if it.kind is ItemKind.TX_POWER)
        if n_tx == 0:
            raise ValueError("link budget has no TxPower_dBm item")
        if n_tx > 1:
            raise ValueError(f"link budget has {n_tx} TxPower_dBm items, expected exactly one")

    @classmethod
    def from_dict(cls, d: dict) -> "LinkBudget":
        items = []
        for i, raw in enumerate(d["items"]):
            try:
                items.append(BudgetLineItem(raw["name"], float(raw["value_db"]),
                                            raw["kind"], raw.get("side", "rx")))
            except KeyError as exc:
                raise ValueError(f"items[{i}]: missing field {exc.args[0]!r}") from None
        return cls(
            items=tuple(items),
            carrier=CarrierConfig.from_dict(d["carrier"]),
            target_throughput=float(d["target_throughput_mbps"]),
            layers=int(d.get("layers", 1)),
            efficiency=float(d.get("efficiency", 0.75)),
            ue_noise_figure=float(d.get("ue_noise_figure_db", 7.0)),
        )

    @classmethod
    def load(cls, path) -> "LinkBudget":
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self) -> dict:
        return {
            "carrier": self.carrier.to_dict(),
            "target_throughput_mbps": self.target_throughput,
            "layers": self.layers,
            "efficiency": self.efficiency,
            "ue_noise_figure_db": self.ue_noise_figure,
            "items": [
                {"name": it.name, "kind": it.kind.value, "side": it.side.value, "value_db": it.value}
                for it in self.items
            ],
        }


@dataclass(frozen=True)
class BudgetResult:
    eirp: float
    required_sinr: float
    receiver_sensitivity: float
    mapl: float
    required_nrsrp: float
    rx_margin_total: float = 0.0
    rx_gain_total: float = 0.0
    per_re_offset: float = 0.0
    notes: tuple[str, ...] = field(default=())

    def to_dict(self) -> dict:
        return {
            "eirp_dbm": self.eirp,
            "required_sinr_db": self.required_sinr,
            "receiver_sensitivity_dbm": self.receiver_sensitivity,
            "mapl_db": self.mapl,
            "required_nrsrp_dbm": self.required_nrsrp,
            "rx_margin_total_db": self.rx_margin_total,
            "rx_gain_total_db": self.rx_gain_total,
            "per_re_offset_db": self.per_re_offset,
            "mapl_convention": "wideband: eirp - (required_nrsrp + per_re_offset)",
        }


def evaluate_budget(budget: LinkBudget) -> BudgetResult:
    tx_power = 0.0
    # sorted sums make the result independent of item order
    tx_gains, tx_losses, rx_gains, rx_pens = [], [], [], []
    for it in budget.items:
        if it.kind is ItemKind.TX_POWER:
            tx_power = it.value
        elif it.kind is ItemKind.GAIN:
            (tx_gains if it.side is Side.TX else rx_gains).append(it.value)
        elif it.kind is ItemKind.LOSS:
            (tx_losses if it.side is Side.TX else rx_pens).append(it.value)
        else:
            # margins always belong to the receive side of the budget
            rx_pens.append(it.value)
    tx_gain, tx_loss = sum(sorted(tx_gains)), sum(sorted(tx_losses))
    rx_gain, rx_penalty = sum(sorted(rx_gains)), sum(sorted(rx_pens))

    eirp = tx_power + tx_gain - tx_loss
    sinr = required_sinr_for_throughput(budget.target_throughput, budget.carrier.bandwidth,
                                        budget.layers, budget.efficiency)
    sens = thermal_noise(budget.carrier.bandwidth, budget.ue_noise_figure) + sinr
    per_re = budget.carrier.per_re_offset_db
    required_nrsrp = sens + rx_penalty - rx_gain - per_re
    mapl = eirp - sens - rx_penalty + rx_gain
    return BudgetResult(eirp, sinr, sens, mapl, required_nrsrp, rx_penalty, rx_gain, per_re)


def required_nrsrp_for_throughput(budget: LinkBudget, throughput: float) -> float:
    return evaluate_budget(replace(budget, target_throughput=throughput)).required_nrsrp


def format_budget(budget: LinkBudget, result: BudgetResult) -> str:
    """Aligned plain-text table of the items and derived figures."""
    width = max(len(it.name) for it in budget.items)
    width = max(width, 26)
    lines = [f"{'item':<{width}}  {'side':<4}  {'kind':<11}  {'value':>9}"]
    for it in budget.items:
        lines.append(f"{it.name:<{width}}  {it.side.value:<4}  {it.kind.value:<11}  {it.value:>9.2f}")
    lines.append("-" * len(lines[0]))
    rows = [
        ("EIRP (dBm)", result.eirp),
        ("required SINR (dB)", result.required_sinr),
        ("receiver sensitivity (dBm)", result.receiver_sensitivity),
        ("per-RE offset (dB)", result.per_re_offset),
        ("MAPL (dB)", result.mapl),
        ("required NRSRP (dBm)", result.required_nrsrp),
    ]
    for label, v in rows:
        lines.append(f"{label:<{width}}  {'':<4}  {'':<11}  {v:>9.2f}")
    return "\n".join(lines)
