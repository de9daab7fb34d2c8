"""Command-line front end: enroll, query, eval, calibrate, inspect.

Exit codes: 0 success, 1 a file or run failed, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from jpegid import __version__
from jpegid.dc_feature import FeatureParams, extract
from jpegid.errors import JpegIdError, NotFound, ParamsMismatch
from jpegid.experiments import Manifest, ManifestError, run_calibration, run_eval
from jpegid.feature_store import FeatureRecord, FeatureStore, digest_of
from jpegid.jpeg_parse import dc_plane, read_frame
from jpegid.matcher import SIGN_POLICIES, MatchParams, identify

JSON_SCHEMA = 1
EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2

_ENV = {
    "store": "JPEGID_STORE",
    "th": "JPEGID_TH",
    "delta": "JPEGID_DELTA",
    "d_enrolled": "JPEGID_D_ENROLLED",
    "d_query": "JPEGID_D_QUERY",
    "sign_policy": "JPEGID_SIGN_POLICY",
    "sampling": "JPEGID_SAMPLING",
}


class UsageError(Exception):
    pass


@dataclass
class CliConfig:
    store_path: str | None = None
    th: int = 14
    delta: int = 50
    d_enrolled: float = 4.0
    d_query: float = 4.0
    sign_policy: str = "zero_wildcard"
    sampling: str = "420"
    json: bool = False
    force: bool = False
    # Which feature params the user set explicitly (flag or env).
    explicit: frozenset = frozenset()

    @classmethod
    def resolve(cls, args, env=None) -> "CliConfig":
        env = os.environ if env is None else env
        cfg = cls(json=args.json, force=args.force)
        explicit = set()
        casts = {"store": str, "th": int, "delta": int, "d_enrolled": float,
                 "d_query": float, "sign_policy": str, "sampling": str}
        for key, cast in casts.items():
            value = getattr(args, key, None)
            if value is None and env.get(_ENV[key]):
                try:
                    value = cast(env[_ENV[key]])
                except ValueError:
                    raise UsageError(f"bad value for {_ENV[key]}: {env[_ENV[key]]!r}") from None
            if value is None:
                continue
            explicit.add(key)
            setattr(cfg, "store_path" if key == "store" else key, value)
        if cfg.sign_policy not in SIGN_POLICIES:
            raise UsageError(f"sign policy must be one of {SIGN_POLICIES}")
        if cfg.sampling not in ("444", "422", "420"):
            raise UsageError("sampling must be 444, 422 or 420")
        try:
            cfg.feature_params()
            cfg.match_params()
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        cfg.explicit = frozenset(explicit)
        return cfg

    def feature_params(self) -> FeatureParams:
        return FeatureParams(self.th, self.delta)

    def match_params(self) -> MatchParams:
        return MatchParams(self.d_enrolled, self.d_query, self.sign_policy)


def _emit(cfg: CliConfig, kind: str, payload: dict, text_lines: list[str]):
    if cfg.json:
        doc = {"schema": f"jpegid.{kind}/{JSON_SCHEMA}", **payload}
        print(json.dumps(doc, sort_keys=True, indent=2))
    else:
        for line in text_lines:
            print(line)


def _err(msg: str):
    print(f"jpegid: {msg}", file=sys.stderr)


def _open_store(cfg: CliConfig, create: bool) -> FeatureStore:
    if not cfg.store_path:
        raise UsageError("no store given (use --store or JPEGID_STORE)")
    try:
        store = FeatureStore(cfg.store_path, params=cfg.feature_params() if create else None,
                             create=create)
    except ParamsMismatch:
        store = FeatureStore(cfg.store_path, create=False)
    except NotFound as exc:
        raise UsageError(str(exc)) from None
    wanted = cfg.feature_params()
    if {"th", "delta"} & cfg.explicit and wanted != store.params and not cfg.force:
        raise UsageError(
            f"store was enrolled with th={store.params.th} delta={store.params.delta}; "
            f"got th={wanted.th} delta={wanted.delta} (use --force to override)"
        )
    return store


def cmd_enroll(args, cfg: CliConfig) -> int:
    store = _open_store(cfg, create=True)
    results = []
    failed = False
    for name in args.files:
        path = Path(name)
        image_id = path.stem
        entry = {"file": name, "id": image_id}
        try:
            data = path.read_bytes()
            plane = dc_plane(read_frame(data))
            feature = extract(plane, store.params)
            store.put(FeatureRecord(image_id, feature, digest_of(data)), overwrite=args.overwrite)
            entry.update(status="ok", width=plane.width_px, height=plane.height_px,
                         blocks=plane.num_blocks)
        except (JpegIdError, OSError) as exc:
            failed = True
            entry.update(status="error", error=type(exc).__name__, message=str(exc))
        results.append(entry)
    lines = []
    for e in results:
        if e["status"] == "ok":
            lines.append(f"{e['id']}\t{e['width']}x{e['height']}\tM={e['blocks']}\tok")
        else:
            lines.append(f"{e['id']}\terror\t{e['error']}: {e['message']}")
    _emit(cfg, "enroll", {"results": results}, lines)
    return EXIT_FAIL if failed else EXIT_OK


def cmd_query(args, cfg: CliConfig) -> int:
    store = _open_store(cfg, create=False)
    params = cfg.feature_params() if cfg.force and {"th", "delta"} & cfg.explicit else store.params
    try:
        data = Path(args.file).read_bytes()
        plane = dc_plane(read_frame(data))
    except (JpegIdError, OSError) as exc:
        _err(f"{args.file}: {type(exc).__name__}: {exc}")
        return EXIT_FAIL
    query = extract(plane, params)
    hits = identify(query, store, cfg.match_params(), force=True)
    _emit(cfg, "query", {"file": args.file, "width": plane.width_px,
                         "height": plane.height_px, "matches": hits}, hits)
    return EXIT_OK


def _load_manifest(path) -> Manifest:
    try:
        return Manifest.load(path)
    except ManifestError as exc:
        raise UsageError(f"manifest {path}: {exc}") from None


def cmd_eval(args, cfg: CliConfig) -> int:
    manifest = _load_manifest(args.manifest)
    if "sampling" in cfg.explicit:
        manifest.sampling = cfg.sampling
    try:
        reports = run_eval(manifest, cfg.feature_params(), cfg.match_params())
    except ManifestError as exc:
        raise UsageError(f"manifest {args.manifest}: {exc}") from None
    dbs = [{"enroll_qf": qf, **r.as_dict()} for qf, r in reports]
    lines = [
        f"DB{k + 1}\tqf={d['enroll_qf']}\ttp={d['tp']}\tfp={d['fp']}\tfn={d['fn']}\ttn={d['tn']}"
        f"\tprecision={d['precision']:.4f}\trecall={d['recall']:.4f}"
        for k, d in enumerate(dbs)
    ]
    params = {"th": cfg.th, "delta": cfg.delta, "d_enrolled": cfg.d_enrolled,
              "d_query": cfg.d_query, "sign_policy": cfg.sign_policy}
    _emit(cfg, "eval", {"databases": dbs, "params": params}, lines)
    return EXIT_OK


def cmd_calibrate(args, cfg: CliConfig) -> int:
    manifest = _load_manifest(args.manifest)
    try:
        th, delta = run_calibration(manifest)
    except ManifestError as exc:
        raise UsageError(f"manifest {args.manifest}: {exc}") from None
    _emit(cfg, "calibrate", {"th": th, "delta": delta, "delta_mode": manifest.delta_mode},
          [f"th={th}", f"delta={delta}"])
    return EXIT_OK


def cmd_inspect(args, cfg: CliConfig) -> int:
    try:
        frame = read_frame(Path(args.file).read_bytes())
    except (JpegIdError, OSError) as exc:
        _err(f"{args.file}: {type(exc).__name__}: {exc}")
        return EXIT_FAIL
    plane = dc_plane(frame)
    params = cfg.feature_params()
    v = extract(plane, params).v
    values, counts = np.unique(plane.dc, return_counts=True)
    hist = {str(int(a)): int(c) for a, c in zip(values, counts)}
    small = (np.abs(v) <= cfg.d_query)
    feature = {
        "th": params.th, "delta": params.delta,
        "zero": int((v == 0).sum()), "positive": int((v > 0).sum()),
        "negative": int((v < 0).sum()), "min": int(v.min()), "max": int(v.max()),
        "within_d": int(small.sum()),
    }
    info = {
        "file": args.file, "width": plane.width_px, "height": plane.height_px,
        "sampling": frame.sampling, "components": len(frame.components),
        "restart_interval": frame.restart_interval, "q_dc": plane.q_dc,
        "blocks": plane.num_blocks, "blocks_x": plane.blocks_x, "blocks_y": plane.blocks_y,
        "dc_histogram": hist, "feature": feature,
    }
    lines = [
        f"file: {args.file}",
        f"size: {plane.width_px}x{plane.height_px}  sampling: {frame.sampling}"
        f"  restart: {frame.restart_interval}",
        f"q_dc: {plane.q_dc}  M: {plane.num_blocks} ({plane.blocks_x}x{plane.blocks_y} blocks)",
        f"dc range: [{int(plane.dc.min())}, {int(plane.dc.max())}]  distinct: {len(hist)}",
        "dc histogram: " + " ".join(f"{k}:{c}" for k, c in hist.items()),
        f"feature (th={params.th}, delta={params.delta}): zero={feature['zero']} "
        f"pos={feature['positive']} neg={feature['negative']} "
        f"range=[{feature['min']}, {feature['max']}] |v|<={cfg.d_query:g}: {feature['within_d']}",
    ]
    _emit(cfg, "inspect", info, lines)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--store", help="feature store directory (env JPEGID_STORE)")
    common.add_argument("--th", type=int, help="dead-zone threshold on quantized DC (default 14)")
    common.add_argument("--delta", type=int, help="feature step size (default 50)")
    common.add_argument("--d-enrolled", dest="d_enrolled", type=float,
                        help="skip enrolled components with larger magnitude (default 4)")
    common.add_argument("--d-query", dest="d_query", type=float,
                        help="skip query components with larger magnitude (default 4)")
    common.add_argument("--sign-policy", dest="sign_policy", choices=SIGN_POLICIES)
    common.add_argument("--sampling", choices=("444", "422", "420"),
                        help="chroma sampling for generated JPEGs (default 420)")
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--force", action="store_true",
                        help="proceed even if th/delta differ from the store's")

    parser = argparse.ArgumentParser(prog="jpegid", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"jpegid {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("enroll", parents=[common], help="extract and store features")
    p.add_argument("files", nargs="+")
    p.add_argument("--overwrite", action="store_true", help="replace existing ids")
    p.set_defaults(func=cmd_enroll)

    p = sub.add_parser("query", parents=[common], help="list enrolled ids sharing the query's original")
    p.add_argument("file")
    p.set_defaults(func=cmd_query)

    p = sub.add_parser("eval", parents=[common], help="run a precision/recall experiment manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("calibrate", parents=[common], help="estimate th and delta from a manifest")
    p.add_argument("manifest")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("inspect", parents=[common], help="dump DC plane diagnostics")
    p.add_argument("file")
    p.set_defaults(func=cmd_inspect)
    return parser


def main(argv=None, env=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = CliConfig.resolve(args, env)
        return args.func(args, cfg)
    except UsageError as exc:
        _err(str(exc))
        return EXIT_USAGE
    except JpegIdError as exc:
        _err(f"{type(exc).__name__}: {exc}")
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
