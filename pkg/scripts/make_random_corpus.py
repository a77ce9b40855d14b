"""Write a directory of random hypergraphs for widthsearch/analyze experiments.

    python3 scripts/make_random_corpus.py --out corpus/ --count 50 --edges 12 --vertices 15
"""
from __future__ import annotations

import argparse
import random
from dataclasses import dataclass
from pathlib import Path

from hyperwidth.core import Hypergraph, serialize_hypergraph


@dataclass
class CorpusConfig:
    out: Path
    count: int = 50
    edges: int = 12
    vertices: int = 15
    min_arity: int = 2
    max_arity: int = 4
    seed: int = 0


def random_instance(rng: random.Random, cfg: CorpusConfig, name: str) -> Hypergraph:
    verts = [f"v{i}" for i in range(cfg.vertices)]
    raw = [
        (f"e{j}", rng.sample(verts, rng.randint(cfg.min_arity, min(cfg.max_arity, cfg.vertices))))
        for j in range(cfg.edges)
    ]
    return Hypergraph.from_edges(raw, name=name)


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--count", type=int, default=50)
    p.add_argument("--edges", type=int, default=12)
    p.add_argument("--vertices", type=int, default=15)
    p.add_argument("--min-arity", type=int, default=2)
    p.add_argument("--max-arity", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    cfg = CorpusConfig(**vars(p.parse_args()))

    cfg.out.mkdir(parents=True, exist_ok=True)
    rng = random.Random(cfg.seed)
    for i in range(cfg.count):
        name = f"rand{i:04d}"
        h = random_instance(rng, cfg, name)
        (cfg.out / f"{name}.hg").write_text(serialize_hypergraph(h) + "\n")
    print(f"wrote {cfg.count} instances to {cfg.out}")


if __name__ == "__main__":
    main()
