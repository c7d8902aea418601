"""Bridge-builder epsilon of the Fejer smoothing over N, plus the Lip contraction ratio."""

import argparse
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from ncsolenoid import (CocycleSpec, FejerSpec, TruncationSpec, ball, bridge_builder_epsilon,
                        fejer_lip_contraction_check)
from ncsolenoid.twisted import random_self_adjoint


@dataclass
class Config:
    theta: float = 0.3
    n: int = 0
    m: int = 1
    radius: float = 3.0
    support_radius: float = 2.0
    samples: int = 10
    seed: int = 0
    Ns: list = field(default_factory=lambda: [2, 4, 8, 16, 32])


def run(cfg: Config) -> dict:
    cs = CocycleSpec.rotation(2, cfg.theta)
    T = TruncationSpec(2, 2, cfg.m, cfg.radius)
    rng = np.random.default_rng(cfg.seed)
    f = random_self_adjoint(cs, ball(2, 2, cfg.n, cfg.support_radius).elements, rng)
    rows = []
    for N in cfg.Ns:
        rep = bridge_builder_epsilon(cfg.n, FejerSpec(cfg.n, N), T, cfg.samples, cfg.seed,
                                     cfg.support_radius, cs)
        con = fejer_lip_contraction_check(f, FejerSpec(cfg.n, N), T)
        rows.append({"N": N, "eps_max": rep.eps_max, "eps_mean": rep.eps_mean,
                     "lip_ratio": con.lip_smoothed / con.lip_original})
    return {"config": asdict(cfg), "rows": rows}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--samples", type=int, default=Config.samples)
    args = ap.parse_args()
    print(json.dumps(run(Config(seed=args.seed, samples=args.samples)), indent=2, sort_keys=True))
