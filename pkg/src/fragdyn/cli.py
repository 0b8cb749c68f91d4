"""Command line interface.

Every command prints JSON (or writes an image) to ``--out`` or stdout.
Failures exit nonzero with ``{code, message, context}`` on stderr.
"""
from __future__ import annotations

import json
import sys
from fractions import Fraction

import click
import numpy as np

from . import circle_markov as cm
from . import contact_tree as ct
from . import fuchsian as fx
from . import intervals as iv
from . import puzzles as pz
from . import render as rd
from . import schwarz as sw
from .errors import FragdynError


# ---------------------------------------------------------------- helpers

def read_config(path) -> dict:
    """``key = value`` lines; blank lines and # comments ignored."""
    out = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise click.BadParameter(f"line {n}: expected key = value", param_hint="--config")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def _default_map(cmd, cfg: dict) -> dict:
    if isinstance(cmd, click.Group):
        return {name: _default_map(sub, cfg) for name, sub in cmd.commands.items()}
    # keys may name the parameter or its long option (without dashes)
    names = {}
    for p in cmd.params:
        names[p.name] = p.name
        for o in getattr(p, "opts", []):
            names[o.lstrip("-").replace("-", "_")] = p.name
    return {names[k]: v for k, v in cfg.items() if k in names}


def _frac(s: str) -> Fraction:
    return Fraction(s.strip())


def _interval(s: str):
    a, b = s.split("..")
    return _frac(a), _frac(b)


def _complex(s: str) -> complex:
    s = s.strip()
    if "," in s:
        a, b = s.split(",")
        return complex(float(a), float(b))
    return complex(s.replace(" ", "").replace("i", "j"))


def _jsonable(x):
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, set)):
        return [_jsonable(v) for v in x]
    return x


def emit(obj):
    ctx = click.get_current_context()
    text = json.dumps(_jsonable(obj), indent=1, sort_keys=True) + "\n"
    out = ctx.obj.get("out")
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        click.echo(text, nl=False)


def emit_image(grid: rd.ImageGrid):
    ctx = click.get_current_context()
    fmt = ctx.obj["format"]
    if fmt == "json":
        return emit(grid.to_json())
    out = ctx.obj.get("out")
    data = grid.to_ppm() if fmt == "ppm" else grid.to_png()
    if out:
        with open(out, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)


def _viewport(center, width, size) -> rd.Viewport:
    nx, _, ny = size.partition("x")
    return rd.Viewport(_complex(center), float(width), int(nx), int(ny or nx))


def _fmap(d: int, coeffs: str | None) -> sw.SigmaStarMap:
    if coeffs is None:
        return sw.cubic_example() if d == 3 else sw.make_f(d)
    cs = [_complex(c) if ("j" in c or "i" in c) else complex(float(_frac(c))) for c in coeffs.split(";")]
    return sw.make_f(d, cs)


MARKOV_EXAMPLES = {
    "sigma2": lambda: cm.sigma2_halves(),
    "sigma3": lambda: cm.sigma_system(3, [0, Fraction(1, 3), Fraction(2, 3)]),
    "blaschke": cm.blaschke_system,
    "prop34": cm.prop34_system,
    "rotation": cm.rotation_system,
}

CONJUGACY_EXAMPLES = {
    "dyadic-to-5adic": lambda: (cm.prop34_system(),
                                cm.sigma_system(5, [Fraction(k, 5) for k in range(5)])),
    "sigma2-to-blaschke": lambda: (cm.sigma2_halves(), cm.blaschke_system()),
}


def _system(example, path) -> cm.MarkovSystem:
    if path:
        with open(path) as fh:
            return cm.MarkovSystem.from_json(json.load(fh))
    if example in MARKOV_EXAMPLES:
        return MARKOV_EXAMPLES[example]()
    if example and example.startswith("bowen-series:"):
        return fx.bowen_series_system(fx.core_polygon(fx.Signature.parse(example.split(":", 1)[1])))
    raise click.BadParameter(f"unknown system {example!r}; choose from {sorted(MARKOV_EXAMPLES)} "
                             "or bowen-series:<signature>")


# ---------------------------------------------------------------- root

@click.group()
@click.option("--out", type=click.Path(dir_okay=False), default=None, help="Output file.")
@click.option("--format", "fmt", type=click.Choice(["json", "ppm", "png"]), default=None)
@click.option("--config", type=click.Path(exists=True, dir_okay=False), default=None,
              help="File of key = value defaults.")
@click.option("--seed", type=int, default=0, help="Seed for randomized screens.")
@click.option("--threads", type=int, default=None, help="Worker threads for the pixel kernels.")
@click.pass_context
def main(ctx, out, fmt, config, seed, threads):
    """Basilica-type fractals: circle systems, puzzles, groups, reflections, trees."""
    if config:
        ctx.default_map = _default_map(ctx.command, read_config(config))
    if threads:
        try:
            import numba
            numba.set_num_threads(min(threads, numba.config.NUMBA_NUM_THREADS))
        except ImportError:
            pass
    if fmt is None:
        fmt = out.rsplit(".", 1)[-1].lower() if out and out.rsplit(".", 1)[-1].lower() in ("ppm", "png") else "json"
    ctx.obj = {"out": out, "format": fmt, "seed": seed,
               "rng": np.random.default_rng(seed)}


# ---------------------------------------------------------------- render

@main.group()
def render():
    """Raster images."""


@render.command("julia")
@click.argument("model_id")
@click.option("--center", default="0,0")
@click.option("--width", type=float, default=3.2)
@click.option("--size", default="512", help="NX or NXxNY pixels.")
@click.option("--maxiter", type=int, default=500)
@click.option("--ray", "rays", multiple=True, help="External angle p/q, repeatable.")
@click.option("--equipotential", "levels", multiple=True, type=int, help="m for the level 1/2^m.")
def render_julia(model_id, center, width, size, maxiter, rays, levels):
    """Filled Julia set of a registered model."""
    grid = rd.render_julia(model_id, _viewport(center, width, size), maxiter,
                           rays=[_frac(r) for r in rays], equipotentials=levels)
    emit_image(grid)


@render.command("schwarz")
@click.option("--d", "d", type=int, default=3)
@click.option("--coeffs", default=None, help="a_1;...;a_{d-1} (default: the d = 3 example).")
@click.option("--center", default="0,0")
@click.option("--width", type=float, default=4.0)
@click.option("--size", default="512")
@click.option("--maxiter", type=int, default=60)
def render_schwarz(d, coeffs, center, width, size, maxiter):
    """Tiling set and basin of infinity of a Schwarz reflection."""
    emit_image(rd.render_schwarz(_fmap(d, coeffs), _viewport(center, width, size), maxiter))


@main.command()
@click.argument("source")
@click.option("--z", "z", required=True, help="Zoom point re,im.")
@click.option("--radii", required=True, help="Comma-separated r_k.")
@click.option("--width", type=float, default=2.0, help="Frame width in rescaled units.")
@click.option("--size", default="128")
@click.option("--maxiter", type=int, default=1000)
@click.option("--frames", "prefix", default=None, help="Write frame k to PREFIX_k.ppm.")
def blowup(source, z, radii, width, size, maxiter, prefix):
    """Frames of (set - z)/r_k; SOURCE is a model id or schwarz:<d>."""
    src = _fmap(int(source.split(":")[1]), None) if source.startswith("schwarz:") else source
    frame = _viewport("0,0", width, size)
    frames = rd.blowup_sequence(src, _complex(z), [float(r) for r in radii.split(",")], frame, maxiter)
    if prefix:
        for k, g in enumerate(frames):
            g.save(f"{prefix}_{k}.ppm", "ppm")
    emit({"radii": [g.meta["radius"] for g in frames],
          "flatness": [rd.flatness(g) for g in frames],
          "filled": [int(rd.filled_mask(g).sum()) for g in frames]})


# ---------------------------------------------------------------- decompose

@main.group()
def decompose():
    """Interval decompositions."""


def _pieces_json(dec):
    return {"pieces": [[str(a), str(b)] for a, b in dec.pieces],
            "ratio_plus": str(dec.ratio("+")), "ratio_minus": str(dec.ratio("-")),
            "alternating": dec.alternating, "admissible": dec.admissible}


@decompose.command("dyadic")
@click.option("--interval", default="0/1..1/1")
@click.option("--m", "M", type=int, required=True)
@click.option("--ratio", default=None, help="First-piece ratio 1/2^j; omit to list all.")
def decompose_dyadic(interval, M, ratio):
    A = _interval(interval)
    if ratio is None:
        decs = iv.enumerate_dyadic_decompositions(A, M)
        emit({"count": len(decs), "ratios": sorted({str((d[0][1] - d[0][0]) / (A[1] - A[0])) for d in decs}),
              "decompositions": [[[str(a), str(b)] for a, b in d] for d in decs]})
    else:
        emit(_pieces_json(iv.dyadic_decompose(A, M, _frac(ratio))))


@decompose.command("gd")
@click.option("--colors", required=True, help="Colors around the circle, e.g. red,blue,blue.")
def decompose_gd(colors):
    pts = iv.gd_circle_decomposition([c.strip() for c in colors.split(",")])
    arcs = []
    for k, s in enumerate(pts):
        t = pts[(k + 1) % len(pts)]
        t = t if t > s else t + 1
        g = iv.gd_classify(s, t)
        arcs.append({"arc": [str(s), str(t)], "type": [str(x) for x in g.type], "m": g.m})
    emit({"points": [str(p) for p in pts], "arcs": arcs})


@decompose.command("r")
@click.option("--interval", required=True, help="s..t, or a subtype name A1, A2, B, C.")
@click.option("--m", "M", type=int, required=True)
@click.option("--side", type=click.Choice(["+", "-"]), default="+")
@click.option("--ratio", default=None, help="Target ratio; omit to list the ratio set.")
@click.option("--admissible", is_flag=True)
def decompose_r(interval, M, side, ratio, admissible):
    I = _interval(interval) if ".." in interval else interval
    if ratio is None:
        emit({"ratios": sorted(str(r) for r in iv.r_ratio_set(I, M, side, admissible))})
    else:
        emit(_pieces_json(iv.r_alternating_decompose(I, M, side, _frac(ratio), admissible)))


# ---------------------------------------------------------------- markov

@main.group()
def markov():
    """Markov systems on circles."""


_sys_opts = [click.option("--example", default=None), click.option("--system", "path", default=None,
                                                                      type=click.Path(exists=True))]


def _with_system(f):
    for opt in reversed(_sys_opts):
        f = opt(f)
    return f


@markov.command("validate")
@_with_system
def markov_validate(example, path):
    S = _system(example, path)
    emit({"name": S.name, "pieces": len(S), "matrix": cm.validate_markov(S)})


@markov.command("classify")
@_with_system
@click.option("--n", type=int, default=400)
def markov_classify(example, path, n):
    S = _system(example, path)
    out = []
    for (c, x), b in cm.classify_breakpoints(S, n).items():
        out.append({"circle": c, "point": cm.angle_str(x), "kind": b.kind,
                    "lambda_plus": b.lam_plus, "lambda_minus": b.lam_minus,
                    "N_plus": b.n_plus, "N_minus": b.n_minus})
    emit({"name": S.name, "breakpoints": out})


def _conj(example, depth):
    if example not in CONJUGACY_EXAMPLES:
        raise click.BadParameter(f"unknown example {example!r}; choose from {sorted(CONJUGACY_EXAMPLES)}")
    F, G = CONJUGACY_EXAMPLES[example]()
    return cm.pullback_conjugacy(F, G, depth=depth)


@markov.command("conjugate")
@click.option("--example", required=True)
@click.option("--depth", type=int, default=12)
@click.option("--samples", type=int, default=1000)
def markov_conjugate(example, depth, samples):
    h = _conj(example, depth)
    rng = click.get_current_context().obj["rng"]
    xs = rng.random(samples)
    out = h.to_json()
    out["example"] = example
    out["residual"] = float(h.residual(xs))
    emit(out)


@markov.command("distortion")
@click.option("--example", required=True)
@click.option("--depth", type=int, default=12)
@click.option("--scales", default="4..12", help="Exponent range a..b for t = 2^-k.")
def markov_distortion(example, depth, scales):
    a, b = map(int, scales.split(".."))
    h = _conj(example, depth)
    prof = cm.distortion_profile(h, [2.0 ** -k for k in range(a, b + 1)])
    emit({"example": example, "scales": prof.scales, "values": prof.values,
          "alpha": prof.alpha, "verdict": prof.verdict})


# ---------------------------------------------------------------- groups

@main.command("bowen-series")
@click.argument("signature")
@click.option("--classify/--no-classify", default=False)
def bowen_series(signature, classify):
    """Core polygon and Bowen-Series system of a signature like 1,1;inf."""
    poly = fx.core_polygon(fx.Signature.parse(signature))
    S = fx.bowen_series_system(poly)
    out = {"polygon": poly.to_json(), "system": S.to_json(),
           "cusp_words": {k: {"word": fx.word_str(w), "trace_defect": e}
                          for k, (w, _, e) in fx.cusp_words(poly).items()}}
    if classify:
        out["breakpoints"] = sorted({b.kind for b in cm.classify_breakpoints(S).values()})
    emit(out)


# ---------------------------------------------------------------- puzzles

PUZZLE_TARGETS = {"genus2": pz.genus2_target, "cusp": pz.cusp_target}


def _qmap(name):
    if name not in PUZZLE_TARGETS:
        raise click.BadParameter(f"unknown model {name!r}; choose from {sorted(PUZZLE_TARGETS)}")
    return pz.model_from_target(PUZZLE_TARGETS[name]())


@main.group()
def puzzle():
    """Basilica puzzles and their q-maps."""


@puzzle.command("build")
@click.argument("kernel")
@click.option("--chain", default="-=0",
              help="Components ADDR=CUTS separated by ';'. ADDR is '-' for U0 or angles "
                   "joined by '>'; CUTS are comma-separated angles.")
def puzzle_build(kernel, chain):
    comps, parts = [], {}
    for item in chain.split(";"):
        if not item.strip():
            continue
        addr, _, cuts = item.partition("=")
        addr = addr.strip()
        a = () if addr in ("-", "") else tuple(_frac(x) for x in addr.split(">"))
        comps.append(a)
        parts[a] = [_frac(x) for x in cuts.split(",")] if cuts.strip() else [Fraction(0)]
    emit(pz.build_puzzle(kernel, comps, parts).to_json())


@puzzle.command("symmetrize")
@click.argument("name", default="genus2")
def puzzle_symmetrize(name):
    q = pz.symmetrize(_qmap(name))
    meta = {k: v for k, v in q.meta.items() if k != "refined_input"}
    emit({"meta": meta, "verification": pz.verify_symmetrization(q)})


@puzzle.command("model-from")
@click.argument("name")
def puzzle_model_from(name):
    """Q-map realizing a named target: genus2, cusp, or bs:<nodal> (fig11, chain:<g>)."""
    if name.startswith("bs:"):
        nod = name[3:]
        nodal = fx.fig11_nodal() if nod == "fig11" else fx.chain_nodal(int(nod.split(":")[1]))
        bs = fx.basilica_bs_map(fx.pinched_core_polygon(nodal))
        q = pz.model_from_target(bs.to_target())
        emit({"bs_map": bs.to_json(), "level0": len(q.P0.pieces), "level1": len(q.P1.pieces)})
        return
    emit(_qmap(name).to_json())


# ---------------------------------------------------------------- trees

@main.group()
def tree():
    """Bi-colored ribbon contact trees."""


@tree.command("build")
@click.option("--chain", "g", type=int, default=None, help="Genus of a 2-puncture chain.")
@click.option("--rational-chain", "d", type=int, default=None, help="Length of a polynomial chain.")
@click.option("--depth", type=int, default=8)
@click.option("--copies", type=int, default=2)
@click.option("--invariant", is_flag=True, help="Print the white-distance invariant instead.")
def tree_build(g, d, depth, copies, invariant):
    if (g is None) == (d is None):
        raise click.UsageError("give exactly one of --chain and --rational-chain")
    if g is not None:
        T = ct.tree_from_nodal(fx.chain_nodal(g, punctured=True), depth, copies)
    else:
        colors, slots = ct.chain_contact_data(d, copies)
        T = ct.tree_from_contact_graph(colors, slots, depth)
    emit(ct.white_distance_invariant(T).to_json() if invariant else T.to_json())


@tree.command("compare")
@click.argument("a", type=click.Path(exists=True))
@click.argument("b", type=click.Path(exists=True))
def tree_compare(a, b):
    """Exit 0 if the trees are ribbon isomorphic, 1 if not."""
    with open(a) as fa, open(b) as fb:
        T1 = ct.BicoloredRibbonTree.from_json(json.load(fa))
        T2 = ct.BicoloredRibbonTree.from_json(json.load(fb))
    same = ct.ribbon_isomorphic(T1, T2)
    emit({"isomorphic": same})
    click.get_current_context().exit(0 if same else 1)


# ---------------------------------------------------------------- entry

def _fail(code: str, message: str, context=None, status: int = 2) -> int:
    sys.stderr.write(json.dumps({"code": code, "message": message, "context": context or {}}) + "\n")
    return status


def cli_main(argv=None) -> int:
    try:
        rv = main.main(args=argv, prog_name="fragdyn", standalone_mode=False)
        return rv if isinstance(rv, int) else 0
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.exceptions.Abort:
        return _fail("aborted", "aborted", status=130)
    except click.ClickException as e:
        return _fail("usage_error", e.format_message(), status=e.exit_code or 2)
    except FragdynError as e:
        d = e.as_dict()
        return _fail(d["code"], d["message"], d["context"])
    except (ValueError, KeyError, OSError) as e:
        return _fail("invalid_input", str(e), {"type": type(e).__name__})


def run():
    sys.exit(cli_main())
