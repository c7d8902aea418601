"""Compressed Lip(delta_g) against its closed form as the truncation radius grows."""

import argparse
import json
from dataclasses import asdict, dataclass, field

from ncsolenoid import CocycleSpec, FourierPolynomial, TruncationSpec, lip, lip_exact_generator, parse_element


@dataclass
class Config:
    p: int = 2
    theta: float = 0.3
    generators: list = field(default_factory=lambda: ["1,0", "1/2,0", "1/2,1/2", "1/4,3/4"])
    radii: list = field(default_factory=lambda: [1.5, 2.0, 3.0, 4.5, 6.0])


def run(cfg: Config) -> dict:
    cs = CocycleSpec.rotation(cfg.p, cfg.theta)
    rows = []
    for text in cfg.generators:
        g = parse_element(text, cfg.p)
        f = FourierPolynomial.delta(cs, g)
        trace = [lip(f, TruncationSpec(cfg.p, 2, g.level, R)) for R in cfg.radii]
        rows.append({"generator": text, "exact": lip_exact_generator(g), "lip": trace})
    return {"config": asdict(cfg), "rows": rows}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--p", type=int, default=Config.p)
    ap.add_argument("--theta", type=float, default=Config.theta)
    args = ap.parse_args()
    print(json.dumps(run(Config(p=args.p, theta=args.theta)), indent=2, sort_keys=True))
