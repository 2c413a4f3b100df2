"""Residual of the direct solvers across the fractional order.

Each row solves a single mode with phi = 1 (and rho = 1 above order one),
then reports the worst Caputo residual on the positive grid nodes and the
number of grid levels used.
"""

from __future__ import annotations

import argparse
from dataclasses import dataclass, field

from qfrac import (
    CoefficientField,
    QContext,
    SpectralModel,
    TimeGrid,
    direct_solve_superorder,
    direct_solve_suborder,
    residual_check,
)


@dataclass
class ResidualConfig:
    alphas: list[float] = field(default_factory=lambda: [0.1, 0.3, 0.5, 0.7, 0.9, 1.0, 1.2, 1.5, 1.8])
    q: float = 0.5
    T: float = 1.0
    lam: float = 1.0  # lambda + m of the single mode


def residual(alpha, cfg):
    ctx = QContext(cfg.q)
    model = SpectralModel([0.0], mass_shift=cfg.lam)
    grid = TimeGrid.for_order(cfg.T, cfg.q, alpha)
    one = CoefficientField([1.0])
    if alpha <= 1:
        b = direct_solve_suborder(alpha, one, None, model, grid, ctx)
    else:
        b = direct_solve_superorder(alpha, one, one, None, model, grid, ctx)
    return residual_check(b, alpha, model, ctx), len(grid.positive_nodes), b.diagnostics[0]["status"]


def _floats(text):
    return [float(v) for v in text.split(",")]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--alphas", type=_floats)
    p.add_argument("--q", type=float)
    p.add_argument("--T", type=float)
    p.add_argument("--lam", type=float)
    args = p.parse_args(argv)
    cfg = ResidualConfig(**{k: v for k, v in vars(args).items() if v is not None})

    print(f"{'alpha':>6} {'nodes':>6} {'residual':>10}  status")
    for alpha in cfg.alphas:
        res, nodes, status = residual(alpha, cfg)
        print(f"{alpha:>6.2f} {nodes:>6d} {res:>10.2e}  {status}")


if __name__ == "__main__":
    main()
