"""Command-line front end.

Subcommands: ``count`` (functional count), ``simulate`` (one timed run),
``sweep`` (the optimization ladder) and ``gen`` (synthetic graphs).

Settings come from an optional ``--config`` file of flat ``key = value`` lines
whose keys are the long flag names (``sample-ratio`` or ``sample_ratio``);
explicit flags override it.  ``--topo`` takes the same format with
``PimTopology`` field names.  Exit codes: 0 ok, 1 runtime error, 2 usage error.

CSV columns of ``simulate --emit csv`` are ``CSV_COLUMNS``; ``sweep`` prefixes
them with ``stage``.  JSON reports hold every ``SimReport`` field plus the
resolved ``config``.
"""

from __future__ import annotations

import argparse
import csv
import io
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

from .enumerate import reference_count
from .graph import (CsrGraph, GraphFormatError, gen_circulant_graph, gen_er_graph, gen_skewed_graph,
                    load_csr_binary, load_edge_list, normalize_degree_order, write_csr, write_edge_list)
from .memory import PimTopology
from .patterns import INDUCED, cached_plan, parse_semantics
from .simulator import SimOptions, SimReport, simulate, simulate_group

PATTERNS = ("3cc", "4cc", "5cc", "3mc", "4di", "4cl", "wedge")
MOTIF_PARTS = {"3mc": ("3cc", "wedge")}
LADDER = ("baseline", "filter", "remap", "duplication", "stealing")

CSV_COLUMNS = (
    "pattern", "semantics", "pattern_count", "exe_cycles", "avg_cycles", "exe_avg_ratio",
    "near_fraction", "intra_fraction", "inter_fraction", "local_access_ratio", "transferred_blocks",
    "filtered_payload_blocks", "filtered_ratio", "steal_events", "sampled_roots", "work_ratio_r",
    "estimated_exe_cycles", "dup_boundary", "duplicated_bytes",
)

_CONFIG_KEYS = ("graph", "format", "pattern", "semantics", "mapping", "filter", "duplication",
                "stealing", "sample_ratio", "seed", "topo", "out", "emit")


class UsageError(ValueError):
    pass


@dataclass
class RunConfig:
    graph: Optional[str] = None
    format: str = "edgelist"
    pattern: str = "3cc"
    semantics: str = INDUCED
    options: SimOptions = field(default_factory=SimOptions)
    topo_overrides: dict = field(default_factory=dict)
    emit: str = "json"
    out: Optional[str] = None

    def topology(self) -> PimTopology:
        return PimTopology(**self.topo_overrides)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["options"] = asdict(self.options)
        return d


def parse_kv_file(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            s = line.split("#", 1)[0].strip()
            if not s:
                continue
            if "=" not in s:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            k, v = (x.strip() for x in s.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _parse_bool(name, v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).lower()
    if s in ("on", "true", "1", "yes"):
        return True
    if s in ("off", "false", "0", "no"):
        return False
    raise UsageError(f"{name} must be on or off, got {v!r}")


def _parse_duplication(v):
    if v is None or v == "none":
        return None
    if v == "auto":
        return "auto"
    try:
        b = int(v)
    except (TypeError, ValueError):
        raise UsageError(f"duplication must be none, auto or a byte count, got {v!r}") from None
    if b < 0:
        raise UsageError("duplication byte budget must be >= 0")
    return b


def _topo_overrides(path: str) -> dict:
    raw = parse_kv_file(path)
    types = {f.name: f.type for f in fields(PimTopology)}
    out = {}
    for k, v in raw.items():
        if k not in types:
            raise UsageError(f"unknown topology key {k!r}")
        t = types[k]
        try:
            if t in ("bool", bool):
                out[k] = _parse_bool(k, v)
            elif t in ("float", float):
                out[k] = float(v)
            else:
                out[k] = int(v)
        except ValueError:
            raise UsageError(f"bad value for topology key {k!r}: {v!r}") from None
    return out


def resolve_config(ns: argparse.Namespace) -> RunConfig:
    """Merge the config file with explicit flags and validate everything."""
    raw = parse_kv_file(ns.config) if getattr(ns, "config", None) else {}
    unknown = set(raw) - set(_CONFIG_KEYS)
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    for k in _CONFIG_KEYS:
        v = getattr(ns, k, None)
        if v is not None:
            raw[k] = v
    fmt = raw.get("format", "edgelist")
    if fmt not in ("edgelist", "csr"):
        raise UsageError(f"format must be edgelist or csr, got {fmt!r}")
    pattern = raw.get("pattern", "3cc")
    if pattern not in PATTERNS:
        raise UsageError(f"unknown pattern {pattern!r}")
    try:
        semantics = parse_semantics(raw.get("semantics", INDUCED))
    except ValueError as e:
        raise UsageError(str(e)) from None
    mapping = str(raw.get("mapping", "default")).replace("-", "_")
    if mapping not in ("default", "local_first"):
        raise UsageError(f"mapping must be default or local-first, got {raw['mapping']!r}")
    try:
        ratio = float(raw.get("sample_ratio", 1.0))
        seed = int(raw.get("seed", 0))
    except ValueError as e:
        raise UsageError(str(e)) from None
    if not 0.0 < ratio <= 1.0:
        raise UsageError("sample-ratio must lie in (0, 1]")
    if seed < 0:
        raise UsageError("seed must be >= 0")
    opts = SimOptions(mapping, _parse_bool("filter", raw.get("filter", "off")),
                      _parse_duplication(raw.get("duplication")),
                      _parse_bool("stealing", raw.get("stealing", "off")), ratio, seed)
    emit = raw.get("emit", "json")
    if emit not in ("json", "csv"):
        raise UsageError(f"emit must be json or csv, got {emit!r}")
    topo = _topo_overrides(raw["topo"]) if raw.get("topo") else {}
    cfg = RunConfig(raw.get("graph"), fmt, pattern, semantics, opts, topo, emit, raw.get("out"))
    try:
        cfg.topology()
    except (TypeError, ValueError) as e:
        raise UsageError(f"invalid topology: {e}") from None
    return cfg


def load_graph(cfg: RunConfig) -> CsrGraph:
    if not cfg.graph:
        raise UsageError("--graph is required")
    if cfg.format == "csr":
        with open(cfg.graph, "rb") as fh:
            g = load_csr_binary(fh)
    else:
        with open(cfg.graph) as fh:
            g = load_edge_list(fh)
    return normalize_degree_order(g)[0]


def _parts(cfg: RunConfig) -> list[tuple[str, str]]:
    """(pattern, semantics) runs behind one requested pattern."""
    if cfg.pattern in MOTIF_PARTS:
        return [(p, INDUCED) for p in MOTIF_PARTS[cfg.pattern]]
    return [(cfg.pattern, cfg.semantics)]


def run_simulation(g: CsrGraph, cfg: RunConfig) -> SimReport:
    plans = [cached_plan(p, s) for p, s in _parts(cfg)]
    topo = cfg.topology()
    if len(plans) == 1:
        return simulate(g, plans[0], topo, opts=cfg.options)
    return simulate_group(g, plans, topo, cfg.options, name=cfg.pattern)


def csv_row(rep: SimReport) -> dict:
    d = rep.to_dict()
    fr = d["tier_fractions"]
    d["near_fraction"], d["intra_fraction"], d["inter_fraction"] = fr["near"], fr["intra"], fr["inter"]
    return {k: d[k] for k in CSV_COLUMNS}


def _csv_text(rows: Sequence[dict], columns: Sequence[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def render_report(rep: SimReport, cfg: RunConfig) -> str:
    if cfg.emit == "csv":
        return _csv_text([csv_row(rep)], CSV_COLUMNS)
    return rep.to_json({"config": cfg.to_dict()}) + "\n"


def _write(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_count(cfg: RunConfig) -> int:
    g = load_graph(cfg)
    parts = _parts(cfg)
    for name, sem in parts:
        n, _ = reference_count(cached_plan(name, sem), g)
        if len(parts) > 1:
            print(f"{'triangle' if name == '3cc' else name} {n}")
        else:
            print(n)
    return 0


def cmd_simulate(cfg: RunConfig) -> int:
    g = load_graph(cfg)
    rep = run_simulation(g, cfg)
    _write(render_report(rep, cfg), cfg.out)
    if cfg.out:
        fr = rep.tier_fractions
        print(f"pattern_count {rep.pattern_count}")
        print(f"exe_cycles {rep.exe_cycles}")
        print(f"tiers near {fr['near']:.4f} intra {fr['intra']:.4f} inter {fr['inter']:.4f}")
    return 0


def ladder_options(base: SimOptions) -> list[SimOptions]:
    """Cumulative stages: each one switches on one more optimization."""
    dup = base.duplication_budget if base.duplication_budget is not None else "auto"
    s0 = SimOptions(sample_ratio=base.sample_ratio, seed=base.seed)
    s1 = replace(s0, filter_on=True)
    s2 = replace(s1, mapping_kind="local_first")
    s3 = replace(s2, duplication_budget=dup)
    s4 = replace(s3, stealing_on=True)
    return [s0, s1, s2, s3, s4]


def run_sweep(g: CsrGraph, cfg: RunConfig, workers: int = len(LADDER)) -> list[SimReport]:
    cfgs = [replace(cfg, options=o) for o in ladder_options(cfg.options)]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        reps = list(pool.map(lambda c: run_simulation(g, c), cfgs))
    counts = {r.pattern_count for r in reps}
    if len(counts) != 1:
        raise RuntimeError(f"ladder stages disagree on the count: {sorted(counts)}")
    return reps


def cmd_sweep(cfg: RunConfig, workers: int) -> int:
    g = load_graph(cfg)
    reps = run_sweep(g, cfg, workers)
    rows = [{"stage": s, **csv_row(r)} for s, r in zip(LADDER, reps)]
    _write(_csv_text(rows, ("stage",) + CSV_COLUMNS), cfg.out)
    return 0


def cmd_gen(ns: argparse.Namespace) -> int:
    if ns.kind == "er":
        g = gen_er_graph(ns.n, ns.p, ns.seed)
    elif ns.kind == "skewed":
        g = gen_skewed_graph(ns.n, ns.hub_degree, ns.seed)
    else:
        g = normalize_degree_order(gen_circulant_graph(ns.n, ns.half_degree))[0]
    if ns.format == "csr":
        if not ns.out:
            raise UsageError("--out is required for csr output")
        with open(ns.out, "wb") as fh:
            write_csr(g, fh)
    elif ns.out:
        with open(ns.out, "w") as fh:
            write_edge_list(g, fh)
    else:
        write_edge_list(g, sys.stdout)
    return 0


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--graph")
    p.add_argument("--format", choices=["edgelist", "csr"])
    p.add_argument("--pattern", choices=PATTERNS)
    p.add_argument("--semantics", choices=["induced", "noninduced"])
    p.add_argument("--mapping", choices=["default", "local-first"])
    p.add_argument("--filter", choices=["on", "off"])
    p.add_argument("--duplication", metavar="{none,auto,BYTES}")
    p.add_argument("--stealing", choices=["on", "off"])
    p.add_argument("--sample-ratio", dest="sample_ratio", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--topo", help="flat key = value topology overrides")
    p.add_argument("--out")
    p.add_argument("--emit", choices=["json", "csv"])


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="pimgraph", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name, text in (("count", "count embeddings"), ("simulate", "simulate one run"),
                       ("sweep", "run the optimization ladder")):
        p = sub.add_parser(name, help=text)
        _add_run_flags(p)
        if name == "sweep":
            p.add_argument("--workers", type=int, default=len(LADDER))
    p = sub.add_parser("gen", help="write a synthetic graph")
    p.add_argument("kind", choices=["er", "skewed", "circulant"])
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, default=0.1)
    p.add_argument("--hub-degree", type=int, default=32)
    p.add_argument("--half-degree", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", choices=["edgelist", "csr"], default="edgelist")
    p.add_argument("--out")
    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    ns = ap.parse_args(argv)
    try:
        if ns.cmd == "gen":
            return cmd_gen(ns)
        cfg = resolve_config(ns)
        if ns.cmd == "count":
            return cmd_count(cfg)
        if ns.cmd == "simulate":
            return cmd_simulate(cfg)
        return cmd_sweep(cfg, ns.workers)
    except UsageError as e:
        print(f"pimgraph: usage error: {e}", file=sys.stderr)
        return 2
    except (OSError, GraphFormatError, RuntimeError, ValueError) as e:
        print(f"pimgraph: error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
