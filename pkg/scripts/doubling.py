"""Ball growth |ball(n, r)| and doubling ratios |ball(n, 2r)| / |ball(n, r)| over a radius sweep."""

import argparse
import json
from dataclasses import asdict, dataclass, field

from ncsolenoid import ball, doubling_ratio


@dataclass
class Config:
    p: int = 2
    d: int = 2
    levels: list = field(default_factory=lambda: [0, 1, 2])
    radii: list = field(default_factory=lambda: [1.0, 2.0, 4.0, 8.0, 16.0])


def run(cfg: Config) -> dict:
    rows = []
    for n in cfg.levels:
        for r in cfg.radii:
            rows.append({"n": n, "r": r, "count": len(ball(cfg.p, cfg.d, n, r)),
                         "ratio": doubling_ratio(cfg.p, cfg.d, n, r)})
    return {"config": asdict(cfg), "rows": rows}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=Config.p)
    ap.add_argument("--d", type=int, default=Config.d)
    args = ap.parse_args()
    print(json.dumps(run(Config(p=args.p, d=args.d)), indent=2, sort_keys=True))
