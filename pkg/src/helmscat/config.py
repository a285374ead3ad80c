"""JSON experiment configurations with strict, field-level validation."""
import json
import math
from dataclasses import asdict, dataclass, field

from .geometry2d import DEFAULT_RADIUS_FACTOR, SHAPE_KINDS, _DEFAULTS as SHAPE_DEFAULTS_2D
from .geometry3d import SURFACE_KINDS, _DEFAULTS as SHAPE_DEFAULTS_3D
from .errors import ConfigError

SCHEMES = {
    "smooth": {"required": ("N", "d"), "optional": {}},
    "panels": {"required": ("m_panels", "d"), "optional": {"p_panel": 16, "n_refine": 0}},
    "surface": {"required": ("n_u", "n_v", "d"), "optional": {}},
}
INCOMING_TYPES = ("plane_wave", "monopoles", "manufactured")
REFERENCE_MODES = ("manufactured", "self")

_TOP_KEYS = {
    "name", "description", "kernel", "scatterers", "eps", "gmres_tol", "max_iter", "incoming",
    "reference", "outputs", "seed", "proxy_radius_factor", "rel_cutoff",
}
_OUTPUT_KEYS = {"table", "grid", "condition_number", "timings"}
_GRID_KEYS = ("xmin", "xmax", "ymin", "ymax", "nx", "ny")


@dataclass(frozen=True)
class GridSpec:
    xmin: float
    xmax: float
    ymin: float
    ymax: float
    nx: int
    ny: int

    @classmethod
    def parse(cls, text):
        """``"xmin,xmax,ymin,ymax,nx,ny"`` as given on the command line."""
        parts = [p.strip() for p in str(text).split(",")]
        if len(parts) != 6:
            raise ConfigError(f"grid: expected xmin,xmax,ymin,ymax,nx,ny, got {text!r}")
        errs = []
        vals = {}
        for key, raw in zip(_GRID_KEYS, parts):
            try:
                vals[key] = int(raw) if key in ("nx", "ny") else float(raw)
            except ValueError:
                errs.append(f"grid.{key}: not a number: {raw!r}")
        if errs:
            raise ConfigError(errs)
        return _grid_from_dict(vals, "grid")


@dataclass(frozen=True)
class ScattererConfig:
    shape: str
    center: tuple
    discretization: dict
    params: dict = field(default_factory=dict)
    rotation: object = 0.0
    proxy_points: int = None


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    dim: int
    kappa: float
    scatterers: tuple
    eps: float
    incoming: dict
    gmres_tol: float
    max_iter: int = 500
    reference: dict = None
    table: str = "results.csv"
    grid: GridSpec = None
    condition_number: bool = False
    timings: bool = False
    seed: int = 0
    proxy_radius_factor: float = DEFAULT_RADIUS_FACTOR
    rel_cutoff: float = 1e-13
    description: str = ""


class _Errors:
    def __init__(self):
        self.items = []

    def add(self, path, msg):
        self.items.append(f"{path}: {msg}")


def _is_num(x):
    return isinstance(x, (int, float)) and not isinstance(x, bool) and math.isfinite(x)


def _is_int(x):
    return isinstance(x, int) and not isinstance(x, bool)


def _positive(errs, path, x):
    if not _is_num(x) or x <= 0:
        errs.add(path, f"must be a positive finite number, got {x!r}")
        return False
    return True


def _unit_interval(errs, path, x):
    if not _is_num(x) or not 0 < x < 1:
        errs.add(path, f"must lie in (0, 1), got {x!r}")
        return False
    return True


def _int_at_least(errs, path, x, lo, even=False):
    if not _is_int(x) or x < lo or (even and x % 2):
        kind = "an even integer" if even else "an integer"
        errs.add(path, f"must be {kind} >= {lo}, got {x!r}")
        return False
    return True


def _unknown(errs, path, obj, allowed):
    for key in sorted(set(obj) - set(allowed)):
        errs.add(f"{path}.{key}" if path else key, "unknown key")


def _vector(errs, path, x, dim):
    if not isinstance(x, (list, tuple)) or len(x) != dim or not all(_is_num(v) for v in x):
        errs.add(path, f"must be a list of {dim} finite numbers, got {x!r}")
        return None
    return tuple(float(v) for v in x)


def _complex(errs, path, x):
    if _is_num(x):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(_is_num(v) for v in x):
        return complex(x[0], x[1])
    errs.add(path, f"must be a number or a [re, im] pair, got {x!r}")
    return None


def _grid_from_dict(obj, path):
    errs = _Errors()
    _unknown(errs, path, obj, _GRID_KEYS)
    for key in _GRID_KEYS:
        if key not in obj:
            errs.add(f"{path}.{key}", "missing required key")
    if not errs.items:
        for key in ("xmin", "xmax", "ymin", "ymax"):
            if not _is_num(obj[key]):
                errs.add(f"{path}.{key}", f"must be a finite number, got {obj[key]!r}")
        for key in ("nx", "ny"):
            _int_at_least(errs, f"{path}.{key}", obj[key], 1)
        if not errs.items:
            if obj["xmax"] < obj["xmin"]:
                errs.add(f"{path}.xmax", "must be >= xmin")
            if obj["ymax"] < obj["ymin"]:
                errs.add(f"{path}.ymax", "must be >= ymin")
    if errs.items:
        raise ConfigError(errs.items)
    return GridSpec(*(float(obj[k]) for k in _GRID_KEYS[:4]), int(obj["nx"]), int(obj["ny"]))


def _parse_discretization(errs, path, obj, dim):
    if not isinstance(obj, dict):
        errs.add(path, "must be an object")
        return None
    scheme = obj.get("scheme")
    if scheme not in SCHEMES:
        errs.add(f"{path}.scheme", f"unknown scheme {scheme!r}; allowed: {', '.join(SCHEMES)}")
        return None
    if (scheme == "surface") != (dim == 3):
        errs.add(f"{path}.scheme", f"scheme {scheme!r} does not apply to {dim}D problems")
        return None
    spec = SCHEMES[scheme]
    _unknown(errs, path, obj, ("scheme",) + spec["required"] + tuple(spec["optional"]))
    out = {"scheme": scheme}
    for key in spec["required"]:
        if key not in obj:
            errs.add(f"{path}.{key}", "missing required key")
    out.update({k: v for k, v in spec["optional"].items()})
    out.update({k: v for k, v in obj.items() if k != "scheme"})
    for key, val in out.items():
        p = f"{path}.{key}"
        if key == "d":
            if _positive(errs, p, val):
                out[key] = float(val)
        elif key == "N":
            _int_at_least(errs, p, val, 4, even=True)
        elif key in ("n_u", "n_v", "p_panel"):
            _int_at_least(errs, p, val, 2, even=True)
        elif key == "m_panels":
            _int_at_least(errs, p, val, 2)
        elif key == "n_refine":
            _int_at_least(errs, p, val, 0)
    return out


def _parse_scatterer(errs, path, obj, dim):
    if not isinstance(obj, dict):
        errs.add(path, "must be an object")
        return None
    _unknown(errs, path, obj, ("shape", "params", "center", "rotation", "discretization", "proxy_points"))
    for key in ("shape", "center", "discretization"):
        if key not in obj:
            errs.add(f"{path}.{key}", "missing required key")
    kinds, defaults = (SHAPE_KINDS, SHAPE_DEFAULTS_2D) if dim == 2 else (SURFACE_KINDS, SHAPE_DEFAULTS_3D)
    shape = obj.get("shape")
    if shape is not None and shape not in kinds:
        errs.add(f"{path}.shape", f"unknown shape kind {shape!r}; allowed: {', '.join(kinds)}")
    params = obj.get("params", {})
    if not isinstance(params, dict):
        errs.add(f"{path}.params", "must be an object")
        params = {}
    elif shape in kinds:
        _unknown(errs, f"{path}.params", params, defaults[shape])
        for key, val in params.items():
            if not _is_num(val) or (key != "half_opening" and val <= 0):
                errs.add(f"{path}.params.{key}", f"must be a positive finite number, got {val!r}")
    center = _vector(errs, f"{path}.center", obj["center"], dim) if "center" in obj else None
    if dim == 2:
        rotation = obj.get("rotation", 0.0)
        if not _is_num(rotation):
            errs.add(f"{path}.rotation", f"must be a finite number (radians), got {rotation!r}")
        rotation = float(rotation) if _is_num(rotation) else 0.0
    else:
        rotation = _vector(errs, f"{path}.rotation", obj.get("rotation", [0.0, 0.0, 0.0]), 3)
    disc = _parse_discretization(errs, f"{path}.discretization", obj["discretization"], dim) if "discretization" in obj else None
    proxy = obj.get("proxy_points")
    if proxy is not None:
        _int_at_least(errs, f"{path}.proxy_points", proxy, 3 if dim == 2 else 32)
    return ScattererConfig(
        shape=shape,
        center=center,
        discretization=disc,
        params={k: float(v) for k, v in params.items() if _is_num(v)},
        rotation=rotation,
        proxy_points=proxy,
    )


def _parse_incoming(errs, obj, dim, n_scatterers):
    path = "incoming"
    if not isinstance(obj, dict):
        errs.add(path, "must be an object")
        return None
    kind = obj.get("type")
    if kind not in INCOMING_TYPES:
        errs.add(f"{path}.type", f"unknown incoming type {kind!r}; allowed: {', '.join(INCOMING_TYPES)}")
        return None
    if kind == "plane_wave":
        _unknown(errs, path, obj, ("type", "direction"))
        if "direction" not in obj:
            errs.add(f"{path}.direction", "missing required key")
            return None
        d = _vector(errs, f"{path}.direction", obj["direction"], dim)
        if d is not None and not any(d):
            errs.add(f"{path}.direction", "must be nonzero")
        return {"type": kind, "direction": d}
    if kind == "monopoles":
        _unknown(errs, path, obj, ("type", "locations", "strengths"))
        locs = obj.get("locations")
        strengths = obj.get("strengths")
        if not isinstance(locs, list) or not isinstance(strengths, list):
            errs.add(path, "needs 'locations' and 'strengths' lists")
            return None
        if len(locs) != len(strengths):
            errs.add(f"{path}.strengths", f"need one strength per location ({len(locs)}), got {len(strengths)}")
        locs = tuple(_vector(errs, f"{path}.locations[{i}]", x, dim) for i, x in enumerate(locs))
        strengths = tuple(_complex(errs, f"{path}.strengths[{i}]", c) for i, c in enumerate(strengths))
        return {"type": kind, "locations": locs, "strengths": strengths}
    _unknown(errs, path, obj, ("type", "strengths", "jitter"))
    out = {"type": kind, "strengths": None, "jitter": 0.0}
    if obj.get("strengths") is not None:
        s = obj["strengths"]
        if not isinstance(s, list) or len(s) != n_scatterers:
            errs.add(f"{path}.strengths", f"must list one strength per scatterer ({n_scatterers})")
        else:
            out["strengths"] = tuple(_complex(errs, f"{path}.strengths[{i}]", c) for i, c in enumerate(s))
    if "jitter" in obj:
        j = obj["jitter"]
        if not _is_num(j) or j < 0:
            errs.add(f"{path}.jitter", f"must be a finite number >= 0, got {j!r}")
        else:
            out["jitter"] = float(j)
    return out


def _parse_reference(errs, obj, dim):
    path = "reference"
    if obj is None:
        return None
    if not isinstance(obj, dict):
        errs.add(path, "must be an object or null")
        return None
    mode = obj.get("mode")
    if mode not in REFERENCE_MODES:
        errs.add(f"{path}.mode", f"unknown reference mode {mode!r}; allowed: {', '.join(REFERENCE_MODES)}")
        return None
    if mode == "manufactured":
        _unknown(errs, path, obj, ("mode",))
        return {"mode": mode}
    _unknown(errs, path, obj, ("mode", "discretization", "eps", "proxy_points"))
    if "discretization" not in obj:
        errs.add(f"{path}.discretization", "missing required key")
        return None
    out = {"mode": mode, "discretization": _parse_discretization(errs, f"{path}.discretization", obj["discretization"], dim)}
    out["eps"] = obj.get("eps")
    if out["eps"] is not None and _unit_interval(errs, f"{path}.eps", out["eps"]):
        out["eps"] = float(out["eps"])
    out["proxy_points"] = obj.get("proxy_points")
    if out["proxy_points"] is not None:
        _int_at_least(errs, f"{path}.proxy_points", out["proxy_points"], 3 if dim == 2 else 32)
    return out


def config_from_dict(doc):
    errs = _Errors()
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    _unknown(errs, "", doc, _TOP_KEYS)
    missing = [key for key in ("name", "kernel", "scatterers", "eps", "incoming") if key not in doc]
    for key in missing:
        errs.add(key, "missing required key")
    if missing:
        raise ConfigError(errs.items)

    name = doc["name"]
    if not isinstance(name, str) or not name:
        errs.add("name", "must be a non-empty string")
    kernel = doc["kernel"]
    dim, kappa = 2, 1.0
    if not isinstance(kernel, dict):
        errs.add("kernel", "must be an object")
    else:
        _unknown(errs, "kernel", kernel, ("dim", "kappa"))
        dim = kernel.get("dim")
        if dim not in (2, 3) or isinstance(dim, bool):
            errs.add("kernel.dim", f"must be 2 or 3, got {dim!r}")
            dim = 2
        kappa = kernel.get("kappa")
        if _positive(errs, "kernel.kappa", kappa):
            kappa = float(kappa)

    scat = doc["scatterers"]
    if not isinstance(scat, list) or not scat:
        errs.add("scatterers", "must be a non-empty list")
        scat = []
    scatterers = tuple(_parse_scatterer(errs, f"scatterers[{i}]", s, dim) for i, s in enumerate(scat))

    eps = doc["eps"]
    if _unit_interval(errs, "eps", eps):
        eps = float(eps)
    gmres_tol = doc.get("gmres_tol", eps / 10 if _is_num(eps) else None)
    if _unit_interval(errs, "gmres_tol", gmres_tol):
        gmres_tol = float(gmres_tol)
    max_iter = doc.get("max_iter", 500)
    _int_at_least(errs, "max_iter", max_iter, 1)
    incoming = _parse_incoming(errs, doc["incoming"], dim, len(scatterers))
    reference = _parse_reference(errs, doc.get("reference"), dim)
    if reference and reference["mode"] == "manufactured" and incoming and incoming["type"] == "plane_wave":
        errs.add("reference.mode", "manufactured reference needs monopole or manufactured incoming data")

    outputs = doc.get("outputs", {})
    grid = None
    if not isinstance(outputs, dict):
        errs.add("outputs", "must be an object")
        outputs = {}
    _unknown(errs, "outputs", outputs, _OUTPUT_KEYS)
    table = outputs.get("table", "results.csv")
    if not isinstance(table, str) or not table:
        errs.add("outputs.table", "must be a non-empty file name")
    if outputs.get("grid") is not None:
        if dim != 2:
            errs.add("outputs.grid", "field grids are only available in 2D")
        elif not isinstance(outputs["grid"], dict):
            errs.add("outputs.grid", "must be an object")
        else:
            try:
                grid = _grid_from_dict(outputs["grid"], "outputs.grid")
            except ConfigError as exc:
                errs.items.extend(exc.errors)
    flags = {}
    for key in ("condition_number", "timings"):
        flags[key] = outputs.get(key, False)
        if not isinstance(flags[key], bool):
            errs.add(f"outputs.{key}", f"must be true or false, got {flags[key]!r}")

    seed = doc.get("seed", 0)
    _int_at_least(errs, "seed", seed, 0)
    factor = doc.get("proxy_radius_factor", DEFAULT_RADIUS_FACTOR)
    if not _is_num(factor) or factor <= 1:
        errs.add("proxy_radius_factor", f"must be a finite number > 1, got {factor!r}")
    cutoff = doc.get("rel_cutoff", 1e-13)
    _unit_interval(errs, "rel_cutoff", cutoff)
    desc = doc.get("description", "")
    if not isinstance(desc, str):
        errs.add("description", "must be a string")

    if errs.items:
        raise ConfigError(errs.items)
    return ExperimentConfig(
        name=name,
        dim=dim,
        kappa=kappa,
        scatterers=scatterers,
        eps=eps,
        incoming=incoming,
        gmres_tol=gmres_tol,
        max_iter=max_iter,
        reference=reference,
        table=table,
        grid=grid,
        condition_number=flags["condition_number"],
        timings=flags["timings"],
        seed=seed,
        proxy_radius_factor=float(factor),
        rel_cutoff=float(cutoff),
        description=desc,
    )


def parse_config(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return config_from_dict(doc)


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def _complex_json(c):
    return [c.real, c.imag]


def config_to_dict(cfg):
    scat = []
    for s in cfg.scatterers:
        d = {"shape": s.shape, "center": list(s.center), "discretization": dict(s.discretization)}
        if s.params:
            d["params"] = dict(s.params)
        d["rotation"] = list(s.rotation) if isinstance(s.rotation, tuple) else s.rotation
        if s.proxy_points is not None:
            d["proxy_points"] = s.proxy_points
        scat.append(d)
    inc = dict(cfg.incoming)
    if inc["type"] == "plane_wave":
        inc["direction"] = list(inc["direction"])
    elif inc["type"] == "monopoles":
        inc["locations"] = [list(x) for x in inc["locations"]]
        inc["strengths"] = [_complex_json(c) for c in inc["strengths"]]
    elif inc["strengths"] is None:
        del inc["strengths"]
    else:
        inc["strengths"] = [_complex_json(c) for c in inc["strengths"]]
    outputs = {"table": cfg.table, "condition_number": cfg.condition_number, "timings": cfg.timings}
    if cfg.grid is not None:
        outputs["grid"] = asdict(cfg.grid)
    doc = {
        "name": cfg.name,
        "description": cfg.description,
        "kernel": {"dim": cfg.dim, "kappa": cfg.kappa},
        "scatterers": scat,
        "eps": cfg.eps,
        "gmres_tol": cfg.gmres_tol,
        "max_iter": cfg.max_iter,
        "incoming": inc,
        "outputs": outputs,
        "seed": cfg.seed,
        "proxy_radius_factor": cfg.proxy_radius_factor,
        "rel_cutoff": cfg.rel_cutoff,
    }
    if cfg.reference is not None:
        ref = {k: v for k, v in cfg.reference.items() if v is not None}
        doc["reference"] = ref
    return doc


def serialize(cfg):
    return json.dumps(config_to_dict(cfg), indent=2)
