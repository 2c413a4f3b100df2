"""Scan the two-sided and decay estimates for e_{alpha,beta}(-z; q) over a grid.

Writes two_sided.csv and decay.csv to the output directory and prints a
short summary of pass rates and worst margins.

    python scripts/bounds_scan.py --out reports/bounds --points 15
"""

from __future__ import annotations

import argparse
import json
from dataclasses import dataclass, field
from pathlib import Path

from qfrac import bounds


@dataclass
class ScanConfig:
    alphas: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9])
    betas: list[float] = field(default_factory=lambda: [0.5, 1.0, 1.5])
    qs: list[float] = field(default_factory=lambda: [0.3, 0.5, 0.7, 0.9])
    points: int = 15
    lo: float = 1e-3
    hi: float = 0.95
    out: Path = Path("reports/bounds")


def run(cfg):
    zs = bounds.default_radius_grid(cfg.points, cfg.lo, cfg.hi)
    cfg.out.mkdir(parents=True, exist_ok=True)
    results = {}
    for kind, name in (("two-sided", "two_sided"), ("decay", "decay")):
        rows = bounds.bounds_scan(cfg.alphas, cfg.betas, cfg.qs, zs, kind=kind)
        (cfg.out / f"{name}.csv").write_text(bounds.to_csv(rows))
        summary = bounds.summarize(rows)
        (cfg.out / f"{name}_summary.json").write_text(json.dumps(summary, indent=1, default=str))
        results[name] = summary
    return results


def _floats(text):
    return [float(v) for v in text.split(",")]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alphas", type=_floats)
    p.add_argument("--betas", type=_floats)
    p.add_argument("--qs", type=_floats)
    p.add_argument("--points", type=int)
    p.add_argument("--out", type=Path)
    args = p.parse_args(argv)
    cfg = ScanConfig(**{k: v for k, v in vars(args).items() if v is not None})

    for name, s in run(cfg).items():
        rates = ", ".join(
            f"{k.removeprefix('holds_')} {v:.3f}" for k, v in s["pass_rate"].items() if v is not None
        )
        worst = s["worst_margin"]
        print(f"{name}: {s['rows']} rows, {len(s['errors'])} errors; pass rates: {rates}")
        if worst["margin_lower"] is not None:
            print(f"  worst margins: lower {worst['margin_lower']:.3e}, upper {worst['margin_upper']:.3e}")
        print(f"  rows using the empirical decay constant: {len(s['empirical_constant_rows'])}")
    print(f"written to {cfg.out}")


if __name__ == "__main__":
    main()
