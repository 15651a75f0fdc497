"""Helpers shared by the experiment scripts."""

import argparse
import dataclasses
import json
import sys
import time
from pathlib import Path


def parse_into(cfg_cls, description):
    """Build a parser with one ``--field`` flag per dataclass field and return the filled config."""
    ap = argparse.ArgumentParser(description=description)
    for f in dataclasses.fields(cfg_cls):
        default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
        if isinstance(default, (list, tuple)):
            kind = type(default[0]) if default else float
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=kind, nargs="+", default=default)
        else:
            ap.add_argument(f"--{f.name.replace('_', '-')}", type=type(default), default=default)
    args = ap.parse_args()
    return cfg_cls(**{f.name: getattr(args, f.name) for f in dataclasses.fields(cfg_cls)})


def emit(rows, header, out: str | None):
    cells = [[f"{v:.6g}" if isinstance(v, float) else str(v) for v in r] for r in rows]
    widths = [max([len(str(h)), 10] + [len(c[i]) for c in cells]) for i, h in enumerate(header)]
    print("  ".join(str(h).rjust(w) for h, w in zip(header, widths)))
    for c in cells:
        print("  ".join(v.rjust(w) for v, w in zip(c, widths)))
    if out:
        from emcel.io import write_csv

        write_csv(Path(out), header, rows)
        print(f"wrote {out}", file=sys.stderr)


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def dump_config(cfg):
    print("# " + json.dumps(dataclasses.asdict(cfg)))
