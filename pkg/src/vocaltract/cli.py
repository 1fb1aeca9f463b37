"""Command-line front end: ``vocaltract {mesh,solve,formants,compare,synth}``.

All quantities are SI (m, s, m/s, kg/m^3) and frequencies are Hz. Every
subcommand takes ``--config FILE`` with ``key = value`` lines whose keys are
the long option names (dashes or underscores); explicit flags win.

Exit codes: 0 success, 1 input/validation error, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .comparison import build_report, semitone
from .eigensolver import EigenSolverError, SolverConfig, solve_resonances
from .fem import AssemblyError, GlottisBC, MaterialParams, assemble_pencil, write_matrix_market
from .formants import (
    AnalysisConfig,
    AudioClip,
    AudioError,
    LpcError,
    extract_formants_protocol,
    read_wav,
    synth_vowel,
    write_wav,
)
from .geometry import (
    AreaFunction,
    MeshError,
    Region,
    extract_area_function,
    gen_horn,
    gen_tube,
    load_mesh,
    read_area_function,
    tetgen_paths,
    validate,
    write_area_function,
    write_gmsh,
    write_tetgen,
)
from .tables import TableError, format_report_text, format_report_tsv, read_wide, write_wide
from .webster import WebsterProblem, webster_resonances

log = logging.getLogger("vocaltract")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2


class InputError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def __init__(self, *args, **kwargs):
        kwargs.setdefault("allow_abbrev", False)
        super().__init__(*args, **kwargs)

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive(s):
    v = float(s)
    if not (v > 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be a positive number, got {s}")
    return v


def _nonneg(s):
    v = float(s)
    if not (v >= 0 and math.isfinite(v)):
        raise argparse.ArgumentTypeError(f"must be >= 0, got {s}")
    return v


def _posint(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {s}")
    return v


def _pair(s, sep=":"):
    try:
        a, b = (float(x) for x in s.split(sep))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected A{sep}B, got {s!r}") from None
    return a, b


def _notch(s):
    c, w = _pair(s)
    if not (c > 0 and w > 0):
        raise argparse.ArgumentTypeError("notch center and width must be positive")
    return c, w


def _formant_spec(s):
    out = []
    for item in s.split(","):
        f, b = _pair(item) if ":" in item else (float(item), 80.0)
        if not (f > 0 and b > 0):
            raise argparse.ArgumentTypeError("formant frequency and bandwidth must be positive")
        out.append((f, b))
    return out


def _markers(s):
    out = {}
    for item in s.split(","):
        k, _, v = item.partition("=")
        try:
            out[int(k)] = Region[v.strip().upper()]
        except (ValueError, KeyError):
            raise argparse.ArgumentTypeError(f"bad marker mapping {item!r}; use e.g. 1=mouth") from None
    return out


def read_config(path) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment."""
    cfg = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InputError(f"{path}:{lineno}: expected key = value")
            cfg[key.strip().replace("-", "_")] = value.strip()
    return cfg


def _apply_config(parser, sub, argv):
    """Re-parse ``argv`` with config-file values as defaults."""
    pre = argparse.ArgumentParser(add_help=False, allow_abbrev=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    cfg = read_config(known.config)
    actions = {a.dest: a for a in sub._actions}
    defaults = {}
    for key, value in cfg.items():
        if key not in actions or key in ("help", "config"):
            raise InputError(f"{known.config}: unknown key {key!r}")
        act = actions[key]
        if act.nargs in ("*", "+") or isinstance(act, argparse._AppendAction):
            items = value.split()
            defaults[key] = [act.type(v) if act.type else v for v in items]
        elif isinstance(act, argparse._StoreTrueAction):
            defaults[key] = value.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[key] = act.type(value) if act.type else value
            except (argparse.ArgumentTypeError, ValueError) as e:
                raise InputError(f"{known.config}: {key}: {e}") from None
            if act.choices is not None and defaults[key] not in act.choices:
                raise InputError(f"{known.config}: {key} must be one of {list(act.choices)}")
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def _material_opts(p):
    p.add_argument("--c", type=_positive, default=350.0, help="speed of sound, m/s")
    p.add_argument("--rho0", type=_positive, default=1.225, help="air density, kg/m^3")


def build_parser():
    parser = _Parser(prog="vocaltract", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    top = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}

    mesh = top.add_parser("mesh", help="generate, inspect and slice meshes")
    msub = mesh.add_subparsers(dest="mesh_command", required=True, parser_class=_Parser)

    p = msub.add_parser("gen-tube", help="straight circular tube along x")
    p.add_argument("--length", type=_positive, required=True)
    p.add_argument("--radius", type=_positive, required=True)
    p.add_argument("--h", type=_positive, required=True, help="target element size, m")
    p.add_argument("-o", "--output", required=True, help="output basename")
    p.add_argument("--gmsh", action="store_true", help="also write <output>.msh")
    p.add_argument("--config")
    subs["mesh gen-tube"] = p

    p = msub.add_parser("gen-horn", help="axisymmetric horn from an area function file")
    p.add_argument("--area", required=True, help="two-column text file: x_m A_m2")
    p.add_argument("--h", type=_positive, required=True)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--gmsh", action="store_true")
    p.add_argument("--config")
    subs["mesh gen-horn"] = p

    p = msub.add_parser("inspect", help="print diagnostics; exit 1 on defects")
    p.add_argument("mesh", help="TetGen basename (or one of its files) or a .msh file")
    p.add_argument("--markers", type=_markers, help="TetGen marker map, e.g. 1=mouth,2=wall,3=glottis")
    p.add_argument("--config")
    subs["mesh inspect"] = p

    p = msub.add_parser("area", help="area function by slicing along the glottis-mouth axis")
    p.add_argument("mesh")
    p.add_argument("--stations", type=int, default=20)
    p.add_argument("-o", "--output", help="write the table here instead of stdout")
    p.add_argument("--markers", type=_markers)
    p.add_argument("--config")
    subs["mesh area"] = p

    p = top.add_parser("solve", help="resonances of one or more meshes")
    p.add_argument("mesh", nargs="+")
    p.add_argument("--glottis", choices=["robin", "neumann"], default="robin")
    _material_opts(p)
    p.add_argument("--n-modes", dest="n_modes", type=_posint, default=4)
    p.add_argument("--shift-hz", dest="shift_hz", type=_positive, default=300.0,
                   help="shift sigma = 2 pi i * shift_hz")
    p.add_argument("--tol", type=_positive, default=1e-8)
    p.add_argument("--floor", type=_nonneg, default=50.0, help="frequency floor, Hz")
    p.add_argument("--max-krylov", dest="max_krylov", type=_posint)
    p.add_argument("--oracle", choices=["webster"], help="also solve the 1D Webster model")
    p.add_argument("--webster-cells", dest="webster_cells", type=int, default=400)
    p.add_argument("--webster-stations", dest="webster_stations", type=int, default=41)
    p.add_argument("--label", action="append", help="row label (default: mesh name)")
    p.add_argument("--markers", type=_markers)
    p.add_argument("--mtx", help="dump K, C, M in Matrix Market format with this prefix")
    p.add_argument("-o", "--output", help="write the resonance table here too")
    p.add_argument("--jobs", type=_posint, default=1)
    p.add_argument("--config")
    subs["solve"] = p

    p = top.add_parser("formants", help="formants from WAV files (begin/end protocol)")
    p.add_argument("wav", nargs="+")
    p.add_argument("--begin", nargs=2, type=float, metavar=("T0", "T1"),
                   help="beginning segment in s (negative counts from the end)")
    p.add_argument("--end", nargs=2, type=float, metavar=("T0", "T1"))
    p.add_argument("--order", type=_posint, default=18, help="LPC order")
    p.add_argument("--window", type=_posint, default=1024, help="FFT window length (power of two)")
    p.add_argument("--rate", type=_posint, default=16000, help="analysis sample rate, Hz")
    p.add_argument("--band", nargs=2, type=_positive, default=[90.0, 5000.0], metavar=("LO", "HI"))
    p.add_argument("--max-bandwidth", dest="max_bandwidth", type=_positive, default=500.0)
    p.add_argument("--notch", action="append", type=_notch, default=[], metavar="HZ:WIDTH")
    p.add_argument("--exclude", action="append", type=_positive, default=[], metavar="HZ",
                   help="drop the candidate nearest this frequency (manual outlier removal)")
    p.add_argument("--merge-double", dest="merge_double", action="store_true",
                   help="report flagged double peaks by their mean")
    p.add_argument("--no-refine", dest="no_refine", action="store_true",
                   help="plain autocorrelation LPC, no harmonic-peak refit")
    p.add_argument("--n-formants", dest="n_formants", type=_posint, default=4)
    p.add_argument("--label", action="append")
    p.add_argument("-o", "--output")
    p.add_argument("--jobs", type=_posint, default=1)
    p.add_argument("--config")
    subs["formants"] = p

    p = top.add_parser("compare", help="semitone discrepancy report")
    p.add_argument("resonances", help="resonance table (label R1_Hz R2_Hz ...)")
    p.add_argument("formants", help="formant table (label F1_Hz F2_Hz ...)")
    p.add_argument("--tsv", help="write the full-precision TSV report here")
    p.add_argument("--config")
    subs["compare"] = p

    p = top.add_parser("synth", help="write a synthetic vowel WAV")
    p.add_argument("--formants", type=_formant_spec, required=True, metavar="F:B,F:B,...")
    p.add_argument("--f0", type=_positive, default=110.0)
    p.add_argument("--duration", type=_positive, default=1.0)
    p.add_argument("--rate", type=_posint, default=16000)
    p.add_argument("--bits", type=int, choices=[16, 24], default=16)
    p.add_argument("-o", "--output", required=True)
    p.add_argument("--config")
    subs["synth"] = p
    return parser, subs


def _sub_for(subs, argv):
    words = [a for a in argv if not a.startswith("-")]
    for n in (2, 1):
        key = " ".join(words[:n])
        if key in subs:
            return subs[key]
    return None


def _print_diag(diag, out):
    for line in diag.as_lines():
        print(line, file=out)


def cmd_mesh(args, out):
    if args.mesh_command in ("gen-tube", "gen-horn"):
        if args.mesh_command == "gen-tube":
            mesh = gen_tube(args.length, args.radius, args.h)
        else:
            mesh = gen_horn(read_area_function(args.area), args.h)
        paths = write_tetgen(mesh, args.output)
        if args.gmsh:
            write_gmsh(mesh, f"{args.output}.msh")
        diag = validate(mesh)
        print("# " + " ".join(str(p) for p in paths), file=out)
        _print_diag(diag, out)
        return EXIT_OK if diag.watertight else EXIT_INPUT
    if args.mesh_command == "inspect":
        _require_mesh_files(args.mesh)
        mesh = load_mesh(args.mesh, strict=False, markers=args.markers)
        diag = validate(mesh)
        _print_diag(diag, out)
        if not diag.watertight or diag.n_duplicate_vertices:
            for d in diag.defects:
                print(f"error: {d}", file=sys.stderr)
            return EXIT_INPUT
        return EXIT_OK
    if args.mesh_command == "area":
        if args.stations < 2:
            raise InputError("--stations must be >= 2")
        _require_mesh_files(args.mesh)
        mesh = load_mesh(args.mesh, markers=args.markers)
        af = extract_area_function(mesh, args.stations)
        if args.output:
            write_area_function(af, args.output)
        else:
            print("# x_m\tA_m2", file=out)
            for x, a in af.stations:
                print(f"{x:.9e}\t{a:.9e}", file=out)
        for note in af.notes:
            print(f"warning: {note}", file=sys.stderr)
        return EXIT_OK
    raise InputError(f"unknown mesh command {args.mesh_command}")


def _require_mesh_files(path):
    files = [Path(path)] if str(path).endswith(".msh") else tetgen_paths(path)
    missing = [str(p) for p in files if not p.exists()]
    if missing:
        raise InputError(f"missing mesh file(s): {', '.join(missing)}")


def _solve_one(path, args):
    mesh = load_mesh(path, markers=args.markers)
    params = MaterialParams(args.c, args.rho0)
    bc = GlottisBC.parse(args.glottis)
    if bc is GlottisBC.ROBIN and not mesh.has_region(Region.GLOTTIS):
        raise InputError(f"{path}: --glottis robin needs GLOTTIS-tagged faces")
    pencil = assemble_pencil(mesh, params, bc)
    if args.mtx:
        write_matrix_market(pencil, f"{args.mtx}_{Path(path).stem}" if len(args.mesh) > 1 else args.mtx)
    cfg = SolverConfig(n_wanted=args.n_modes, shift=2j * math.pi * args.shift_hz, tol=args.tol,
                       frequency_floor=args.floor, max_krylov=args.max_krylov)
    res = solve_resonances(pencil, cfg, provenance=f"{path} glottis={bc.value}")
    web = None
    if args.oracle == "webster":
        af = extract_area_function(mesh, args.webster_stations)
        web = webster_resonances(WebsterProblem(af, params, bc, args.webster_cells), args.n_modes,
                                 args.floor)
    return mesh, res, web


def cmd_solve(args, out):
    labels = args.label or []
    if labels and len(labels) != len(args.mesh):
        raise InputError("give one --label per mesh")
    for m in args.mesh:
        _require_mesh_files(m)
    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as ex:
            results = list(ex.map(lambda m: _solve_one(m, args), args.mesh))
    else:
        results = [_solve_one(m, args) for m in args.mesh]
    rows, comments = [], []
    for i, (path, (mesh, res, web)) in enumerate(zip(args.mesh, results)):
        label = labels[i] if labels else Path(path).stem
        rows.append((label, list(res.frequencies), {"n_elements": mesh.n_tets}))
        comments.append(f"{label}: {res.provenance}, {mesh.n_tets} elements, {res.n_dofs} dofs")
        comments.append(f"{label}: mode\tR_Hz\tdamping_1/s\tresidual")
        for j, m in enumerate(res.modes, start=1):
            comments.append(f"{label}: {j}\t{m.frequency:.6f}\t{m.damping:.6g}\t{m.residual:.3e}")
        if web is not None:
            comments.append(f"{label}: webster mode\tR3d_Hz\tR1d_Hz\tgap_st")
            for j, (m, (_, r1)) in enumerate(zip(res.modes, web), start=1):
                comments.append(f"{label}: {j}\t{m.frequency:.6f}\t{r1:.6f}\t{semitone(m.frequency, r1):+.4f}")
        if len(res.modes) < args.n_modes:
            comments.append(f"{label}: warning: only {len(res.modes)} of {args.n_modes} modes found")
    text = write_wide(out, "R", rows, extra_cols=("n_elements",), comments=comments)
    if args.output:
        Path(args.output).write_text(text)
    return EXIT_OK


def _segments(clip: AudioClip, args):
    half = clip.duration / 2
    b = args.begin or [0.0, half]
    e = args.end or [half, clip.duration]
    return clip.segment(*b), clip.segment(*e)


def _formants_one(path, args, config):
    clip = read_wav(path)
    begin, end = _segments(clip, args)
    fs = extract_formants_protocol(begin, end, config=config)
    if args.merge_double:
        fs = fs.merged_double_peaks()
    return fs


def cmd_formants(args, out):
    labels = args.label or []
    if labels and len(labels) != len(args.wav):
        raise InputError("give one --label per WAV file")
    for w in args.wav:
        if not Path(w).exists():
            raise InputError(f"missing WAV file {w}")
    if args.window & (args.window - 1):
        raise InputError("--window must be a power of two")
    if args.order >= args.window // 2:
        raise InputError("--order must be smaller than half the window length")
    config = AnalysisConfig(
        lpc_order=args.order, analysis_rate=args.rate, window_len=args.window,
        band=tuple(args.band), max_bandwidth=args.max_bandwidth,
        notches=tuple(args.notch), exclude=tuple(args.exclude), refine=not args.no_refine,
    )
    if args.jobs > 1:
        with ThreadPoolExecutor(args.jobs) as ex:
            sets = list(ex.map(lambda w: _formants_one(w, args, config), args.wav))
    else:
        sets = [_formants_one(w, args, config) for w in args.wav]
    rows, comments = [], ["S<i>_Hz = (begin - end) / 2"]
    k = args.n_formants
    for i, (path, fs) in enumerate(zip(args.wav, sets)):
        label = labels[i] if labels else Path(path).stem
        forms = fs.formants[:k]
        extras = {f"S{j}_Hz": repr(f.signed_spread) for j, f in enumerate(forms, start=1)}
        rows.append((label, [f.frequency for f in forms], extras))
        comments.append(f"{label}: " + "  ".join(f"F{j}={f.display()}" for j, f in enumerate(forms, start=1)))
        for dp in fs.double_peaks:
            comments.append(f"{label}: double peak {dp.low:.1f}/{dp.high:.1f} Hz, mean {dp.mean:.1f} Hz")
        for fl in fs.flags:
            comments.append(f"{label}: note: {fl}")
        if len(fs.formants) > k:
            comments.append(f"{label}: note: {len(fs.formants) - k} further candidate(s) above F{k}")
    extra_cols = [f"S{j}_Hz" for j in range(1, k + 1)]
    text = write_wide(out, "F", rows, extra_cols=extra_cols, comments=comments)
    if args.output:
        Path(args.output).write_text(text)
    return EXIT_OK


def cmd_compare(args, out):
    for p in (args.resonances, args.formants):
        if not Path(p).exists():
            raise InputError(f"missing table {p}")
    R = read_wide(args.resonances, "R")
    F = read_wide(args.formants, "F")
    common = [k for k in R if k in F]
    if not common:
        raise InputError("no labels in common between the resonance and formant tables")
    reports = [build_report(R[k]["values"], F[k]["values"], name=k) for k in common]
    text = format_report_text(reports)
    out.write(text)
    for k in R:
        if k not in F:
            print(f"warning: {k}: no formants", file=sys.stderr)
    for k in F:
        if k not in R:
            print(f"warning: {k}: no resonances", file=sys.stderr)
    if any(r.partial for r in reports):
        for r in reports:
            for fl in r.flags:
                print(f"warning: {r.name}: {fl}", file=sys.stderr)
    if args.tsv:
        Path(args.tsv).write_text(format_report_tsv(reports))
    return EXIT_OK


def cmd_synth(args, out):
    clip = synth_vowel(args.formants, args.f0, args.duration, args.rate)
    write_wav(clip, args.output, bits=args.bits)
    print(f"# wrote {args.output}: {len(clip.samples)} samples at {args.rate} Hz", file=out)
    return EXIT_OK


def main(argv=None, out=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = out or sys.stdout
    parser, subs = build_parser()
    try:
        sub = _sub_for(subs, argv)
        args = _apply_config(parser, sub, argv) if sub is not None else parser.parse_args(argv)
    except InputError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    handler = {"mesh": cmd_mesh, "solve": cmd_solve, "formants": cmd_formants,
               "compare": cmd_compare, "synth": cmd_synth}[args.command]
    try:
        return handler(args, out)
    except (InputError, MeshError, AudioError, TableError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (EigenSolverError, LpcError, np.linalg.LinAlgError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
