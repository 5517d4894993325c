"""Command-line front end: compress, decompress, rank x QP sweeps, RD reports.

The sweep CSV schema is versioned (`# rdcsv v1`) with columns
scene,space,preset,qp,path,bits_latent,bits_backend,bits_total,psnr_left,psnr_right,error.
Rows are written in canonical grid order so repeated runs are byte-stable,
and finished cells (keyed by a hash of the cell configuration) are skipped on
rerun.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .codec import (
    BackendConfig,
    BackendConfigRequired,
    CodecError,
    EncodeConfig,
    PATH_FRAMES,
    PATH_LATENT,
    decode_stream,
    encode_stream,
    parse_stream,
    serialize_stream,
)
from .color import SPACE_IPT, SPACE_YCBCR
from .frames import BackendError
from .metrics import RDPoint, scene_psnr
from .sceneio import load_scene, write_scene

__all__ = ["main", "SweepSpec", "cell_id", "CSV_HEADER", "CSV_VERSION"]

CSV_VERSION = "# rdcsv v1"
CSV_HEADER = (
    "scene,space,preset,qp,path,bits_latent,bits_backend,bits_total,psnr_left,psnr_right,error"
)
_N_COLUMNS = 11

_DEFAULT_QPS = (5, 10, 15, 20)
_DEFAULT_PRESETS = (1, 2, 3, 4, 5)


@dataclass
class SweepSpec:
    """One rank x QP grid over a scene."""

    scene: Path
    spaces: tuple[str, ...] = (SPACE_YCBCR, SPACE_IPT)
    presets: tuple[int, ...] = _DEFAULT_PRESETS
    qps: tuple[int, ...] = _DEFAULT_QPS
    path: str = PATH_LATENT
    backend: BackendConfig = field(default_factory=BackendConfig)
    out: Path = Path("sweep-out")
    jobs: int = 1
    seed: int = 0
    max_sweeps: int = 50

    def validate(self) -> None:
        if not self.spaces or not self.presets or not self.qps:
            raise ValueError("spaces, presets and qps must be non-empty")
        for qp in self.qps:
            if not 0 <= qp <= 51:
                raise ValueError(f"qp {qp} out of range [0, 51]")


def cell_id(scene: str, space: str, preset: int | None, qp: int, path: str, backend_kind: str) -> str:
    key = f"{scene}|{space}|{preset}|{qp}|{path}|{backend_kind}"
    return hashlib.sha1(key.encode("utf-8")).hexdigest()[:12]


def _fmt_db(v: float) -> str:
    if math.isinf(v):
        return "inf"
    return f"{v:.4f}"


def _point_row(p: RDPoint) -> str:
    preset = "" if p.preset is None else str(p.preset)
    err = p.error.replace(",", ";").replace("\n", " ")
    return (
        f"{p.scene},{p.space},{preset},{p.qp},{p.path},{p.bits_latent},"
        f"{p.bits_backend},{p.bits_total},{_fmt_db(p.psnr_left)},{_fmt_db(p.psnr_right)},{err}"
    )


def _parse_backend(text: str) -> BackendConfig:
    if text == "builtin":
        return BackendConfig(kind="builtin")
    if text.startswith("cmd:"):
        return BackendConfig(kind="external", template=text[4:])
    raise ValueError(f"backend must be 'builtin' or 'cmd:<template>', got {text!r}")


def _parse_ranks(text: str) -> dict:
    """--ranks value for compress: 'full', 'preset:K', or 'r1,r2,r3,r4'."""
    if text == "full":
        return {"ranks": None, "preset": None}
    if text.startswith("preset:"):
        return {"ranks": None, "preset": int(text.split(":", 1)[1])}
    parts = [int(x) for x in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"--ranks needs 4 comma-separated ranks, got {text!r}")
    return {"ranks": tuple(parts), "preset": None}


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x != "")


def _space_list(text: str) -> tuple[str, ...]:
    out = tuple(s.strip().lower() for s in text.split(",") if s.strip())
    for s in out:
        if s not in (SPACE_YCBCR, SPACE_IPT):
            raise ValueError(f"sweep spaces must be from {{ycbcr, ipt}}, got {s!r}")
    return out


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tmcodec", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compress", help="compress one scene directory to a stream file")
    c.add_argument("scene", type=Path, help="scene directory ({left,right}_{e}.png)")
    c.add_argument("--out", type=Path, required=True, help="output stream path")
    c.add_argument("--space", default=SPACE_YCBCR, type=str.lower, choices=["ycbcr", "ipt", "rgb"])
    c.add_argument("--ranks", default="full", help="'full', 'preset:K', or r1,r2,r3,r4")
    c.add_argument("--qp", type=int, default=10)
    c.add_argument("--path", default=PATH_LATENT, choices=[PATH_LATENT, PATH_FRAMES])
    c.add_argument("--backend", default="builtin", help="builtin | cmd:<template>")
    c.add_argument("--decode-cmd", default=None, help="decode template for external backends")
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--max-sweeps", type=int, default=50)
    c.set_defaults(func=cmd_compress)

    d = sub.add_parser("decompress", help="decode a stream file back to images")
    d.add_argument("stream", type=Path)
    d.add_argument("--out", type=Path, required=True, help="output directory")
    d.add_argument("--backend", default=None, help="cmd:<decode template> for external streams")
    d.add_argument("--format", default="png", choices=["png", "ppm"])
    d.set_defaults(func=cmd_decompress)

    s = sub.add_parser("sweep", help="run the preset x QP grid and write rd.csv")
    s.add_argument("scene", type=Path)
    s.add_argument("--out", type=Path, required=True)
    s.add_argument("--space", default="ycbcr,ipt", help="comma list of coding spaces")
    s.add_argument("--ranks", default="1,2,3,4,5", help="comma list of rank presets")
    s.add_argument("--qps", default="5,10,15,20", help="comma list of QPs")
    s.add_argument("--path", default=PATH_LATENT, choices=[PATH_LATENT, PATH_FRAMES])
    s.add_argument("--backend", default="builtin", help="builtin | cmd:<template>")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--max-sweeps", type=int, default=50)
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="merge rd CSVs into bitrate-vs-PSNR series")
    r.add_argument("csvs", nargs="+", type=Path)
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:  # argparse exits 2 on bad arguments
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CodecError, BackendError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


# ---------------------------------------------------------------------------
# compress / decompress
# ---------------------------------------------------------------------------


def _measure(scene, stream_bytes: bytes, decode_backend: BackendConfig | None) -> tuple:
    stream = parse_stream(stream_bytes)
    h = stream.header
    payload_bits = sum(len(b) for b in stream.blocks) * 8
    bits_latent = payload_bits if h.path == PATH_LATENT else 0
    bits_backend = payload_bits if h.path == PATH_FRAMES else 0
    bits_total = len(stream_bytes) * 8
    try:
        decoded = decode_stream(stream, backend=decode_backend, name=scene.name)
        ps = scene_psnr(scene, decoded)
        left, right, per_exp = ps.left, ps.right, ps.per_exposure
    except BackendConfigRequired:
        # externally coded stream with no decode command: bits only
        left = right = math.nan
        per_exp = []
    return bits_latent, bits_backend, bits_total, left, right, per_exp


def cmd_compress(args) -> int:
    if not args.scene.is_dir():
        print(f"error: scene directory not found: {args.scene}", file=sys.stderr)
        return 2
    try:
        rank_sel = _parse_ranks(args.ranks)
        backend = _parse_backend(args.backend)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    scene = load_scene(args.scene)
    cfg = EncodeConfig(
        space=args.space,
        path=args.path,
        qp=args.qp,
        preset=rank_sel["preset"],
        ranks=rank_sel["ranks"],
        backend=backend,
        seed=args.seed,
        max_sweeps=args.max_sweeps,
    )
    stream = encode_stream(scene, cfg)
    data = serialize_stream(stream)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    args.out.write_bytes(data)

    decode_backend = None
    if backend.kind == "external" and args.decode_cmd is not None:
        decode_backend = BackendConfig(
            kind="external", template=backend.template, decode_template=args.decode_cmd
        )
    bits_latent, bits_backend, bits_total, left, right, per_exp = _measure(
        scene, data, decode_backend
    )
    point = RDPoint(
        scene=scene.name,
        space=cfg.space,
        preset=cfg.preset,
        qp=cfg.qp,
        path=cfg.path,
        bits_latent=bits_latent,
        bits_backend=bits_backend,
        bits_total=bits_total,
        psnr_left=left,
        psnr_right=right,
        per_exposure=per_exp,
    )
    print(_point_row(point))
    return 0


def cmd_decompress(args) -> int:
    if not args.stream.is_file():
        print(f"error: stream file not found: {args.stream}", file=sys.stderr)
        return 2
    backend = None
    if args.backend is not None:
        cfgtext = args.backend
        if not cfgtext.startswith("cmd:"):
            print("error: --backend must be cmd:<decode template>", file=sys.stderr)
            return 2
        backend = BackendConfig(kind="external", template="-", decode_template=cfgtext[4:])
    stream = parse_stream(args.stream.read_bytes())
    scene = decode_stream(stream, backend=backend, name=args.stream.stem)
    write_scene(scene, args.out, fmt=args.format)
    return 0


# ---------------------------------------------------------------------------
# sweep
# ---------------------------------------------------------------------------


def _run_cell(scene_path: str, space: str, preset: int, qp: int, path: str,
              backend_kind: str, template: str | None, seed: int, max_sweeps: int) -> RDPoint:
    scene = load_scene(scene_path)
    backend = BackendConfig(
        kind=backend_kind, template=template if backend_kind == "external" else None
    )
    cfg = EncodeConfig(
        space=space, path=path, qp=qp, preset=preset,
        backend=backend, seed=seed, max_sweeps=max_sweeps,
    )
    stream = encode_stream(scene, cfg)
    data = serialize_stream(stream)
    bits_latent, bits_backend, bits_total, left, right, per_exp = _measure(scene, data, None)
    return RDPoint(
        scene=scene.name, space=space, preset=preset, qp=qp, path=path,
        bits_latent=bits_latent, bits_backend=bits_backend, bits_total=bits_total,
        psnr_left=left, psnr_right=right, per_exposure=per_exp,
    )


def _cell_worker(cell_args: tuple) -> tuple[str, RDPoint]:
    cid, call = cell_args
    try:
        return cid, _run_cell(*call)
    except Exception as exc:  # recorded in the CSV error column
        scene_path, space, preset, qp, path = call[:5]
        return cid, RDPoint(
            scene=Path(scene_path).name, space=space, preset=preset, qp=qp, path=path,
            bits_latent=0, bits_backend=0, bits_total=0,
            psnr_left=math.nan, psnr_right=math.nan, error=str(exc),
        )


def _read_rows(csv_path: Path) -> list[list[str]]:
    rows = []
    for lineno, line in enumerate(csv_path.read_text().splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        if line == CSV_HEADER:
            continue
        parts = line.split(",")
        if len(parts) != _N_COLUMNS:
            raise ValueError(f"{csv_path}:{lineno}: expected {_N_COLUMNS} columns, got {len(parts)}")
        rows.append(parts)
    return rows


def cmd_sweep(args) -> int:
    if not args.scene.is_dir():
        print(f"error: scene directory not found: {args.scene}", file=sys.stderr)
        return 2
    try:
        spec = SweepSpec(
            scene=args.scene,
            spaces=_space_list(args.space),
            presets=_int_list(args.ranks),
            qps=_int_list(args.qps),
            path=args.path,
            backend=_parse_backend(args.backend),
            out=args.out,
            jobs=max(1, args.jobs),
            seed=args.seed,
            max_sweeps=args.max_sweeps,
        )
        spec.validate()
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return run_sweep(spec)


def run_sweep(spec: SweepSpec) -> int:
    spec.out.mkdir(parents=True, exist_ok=True)
    csv_path = spec.out / "rd.csv"
    scene_name = spec.scene.name

    cells = [
        (space, preset, qp)
        for space in spec.spaces
        for preset in spec.presets
        for qp in spec.qps
    ]
    existing: dict[str, str] = {}
    if csv_path.exists():
        for parts in _read_rows(csv_path):
            preset = int(parts[2]) if parts[2] else None
            cid = cell_id(parts[0], parts[1], preset, int(parts[3]), parts[4], spec.backend.kind)
            existing[cid] = ",".join(parts)

    pending = []
    for space, preset, qp in cells:
        cid = cell_id(scene_name, space, preset, qp, spec.path, spec.backend.kind)
        if cid not in existing:
            call = (
                str(spec.scene), space, preset, qp, spec.path,
                spec.backend.kind, spec.backend.template, spec.seed, spec.max_sweeps,
            )
            pending.append((cid, call))

    results: dict[str, str] = dict(existing)
    if pending:
        if spec.jobs > 1:
            with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
                for cid, point in pool.map(_cell_worker, pending):
                    results[cid] = _point_row(point)
        else:
            for item in pending:
                cid, point = _cell_worker(item)
                results[cid] = _point_row(point)

    # single writer, canonical grid order, byte-stable across reruns
    lines = [CSV_VERSION, CSV_HEADER]
    ok_count = 0
    series: dict[str, dict[int, list[tuple[int, str, str]]]] = {}
    for space, preset, qp in cells:
        cid = cell_id(scene_name, space, preset, qp, spec.path, spec.backend.kind)
        row = results.get(cid)
        if row is None:
            continue
        lines.append(row)
        parts = row.split(",")
        if parts[10] == "":
            ok_count += 1
            series.setdefault(space, {}).setdefault(preset, []).append(
                (int(parts[7]), parts[8], parts[9])
            )
    csv_path.write_text("\n".join(lines) + "\n")

    for space, by_preset in series.items():
        out = [f"# rd series scene={scene_name} space={space}", "# bits_total psnr_left psnr_right"]
        for preset in sorted(by_preset):
            out.append(f"# preset {preset}")
            for bits, left, right in sorted(by_preset[preset]):
                out.append(f"{bits} {left} {right}")
            out.append("")
        (spec.out / f"rd_{space}.dat").write_text("\n".join(out) + "\n")

    return 0 if ok_count > 0 else 1


# ---------------------------------------------------------------------------
# report
# ---------------------------------------------------------------------------


def cmd_report(args) -> int:
    rows: dict[tuple, list[str]] = {}
    order: list[tuple] = []
    for csv_path in args.csvs:
        if not csv_path.is_file():
            print(f"error: {csv_path}: no such file", file=sys.stderr)
            return 1
        try:
            parsed = _read_rows(csv_path)
        except ValueError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        for parts in parsed:
            key = tuple(parts[:5])  # duplicate cells: keep last
            if key not in rows:
                order.append(key)
            rows[key] = parts

    groups: dict[tuple, list[list[str]]] = {}
    for key in order:
        parts = rows[key]
        groups.setdefault((parts[0], parts[1], parts[2]), []).append(parts)

    for (scene, space, preset), members in groups.items():
        members.sort(key=lambda p: int(p[7]))
        print(f"# scene={scene} space={space} preset={preset or '-'}")
        for parts in members:
            print(f"{parts[7]} {parts[8]} {parts[9]}")
        print()
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
