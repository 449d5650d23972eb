"""File formats: PMT1 tensors, PGM label masks, key = value configs,
tracker-state snapshots and the evaluation CSV.

PMT1 layout (all little-endian)::

    b"PMT1" | u32 C | u32 H | u32 W | C*H*W float32, (channel, row, column)

Every write goes to a temporary file in the target directory which is then
renamed over the destination.
"""
import os
import re
import struct
import tempfile
from contextlib import contextmanager

import numpy as np

from .errors import (
    BadMagicError,
    ConfigError,
    FormatError,
    LabelRangeError,
    NonFiniteError,
    TruncatedPayloadError,
)
from .fusion import FusionParams
from .grid import ProbabilityField
from .synth import Disk, SynthSpec
from .templates import MedialTemplate, TemplateBank, WeightedTemplate
from .tracker import TrackerState

MAGIC = b"PMT1"
_HEADER = struct.Struct("<4sIII")


@contextmanager
def _atomic(path):
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "wb") as fh:
            yield fh
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- tensors ----------------------------------------------------------------

def write_tensor(path, data):
    arr = np.asarray(data)
    if arr.ndim == 2:
        arr = arr[None]
    if arr.ndim != 3:
        raise FormatError(f"tensor must be 3-d, got shape {arr.shape}")
    arr = np.ascontiguousarray(arr, dtype="<f4")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError("refusing to write non-finite values")
    with _atomic(path) as fh:
        fh.write(_HEADER.pack(MAGIC, *arr.shape))
        fh.write(arr.tobytes())


def read_tensor(path):
    """(C, H, W) float32 array."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise BadMagicError(f"{path}: not a PMT1 tensor file")
    if len(raw) < _HEADER.size:
        raise TruncatedPayloadError(f"{path}: header is truncated")
    _, c, h, w = _HEADER.unpack_from(raw)
    expected = _HEADER.size + 4 * c * h * w
    if len(raw) < expected:
        raise TruncatedPayloadError(f"{path}: payload has {len(raw) - _HEADER.size} bytes, expected {4 * c * h * w}")
    if len(raw) > expected:
        raise FormatError(f"{path}: {len(raw) - expected} trailing bytes")
    arr = np.frombuffer(raw, dtype="<f4", offset=_HEADER.size).reshape(c, h, w).astype(np.float32)
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(f"{path}: payload contains non-finite values")
    return arr


# -- masks ------------------------------------------------------------------

def write_mask(path, labels, num_objects=None):
    """Binary PGM; the header's maxval records the declared object count."""
    arr = np.asarray(labels)
    if arr.ndim != 2:
        raise FormatError("mask must be 2-d")
    if arr.size and (arr.min() < 0 or arr.max() > 255):
        raise LabelRangeError("labels must lie in 0..255")
    declared = int(num_objects) if num_objects is not None else max(1, int(arr.max(initial=0)))
    if not 1 <= declared <= 255:
        raise LabelRangeError(f"declared object count {declared} outside 1..255")
    if arr.size and arr.max() > declared:
        raise LabelRangeError(f"label {int(arr.max())} exceeds declared object count {declared}")
    h, w = arr.shape
    with _atomic(path) as fh:
        fh.write(f"P5\n{w} {h}\n{declared}\n".encode("ascii"))
        fh.write(arr.astype(np.uint8).tobytes())


_PGM_TOKEN = re.compile(rb"(?:\s|#[^\n]*\n)*(\S+)")


def read_mask(path, num_objects=None):
    """(H, W) int64 labels; checks labels against ``num_objects`` or the header maxval."""
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[:2] != b"P5":
        raise BadMagicError(f"{path}: not a binary PGM (P5)")
    pos = 2
    fields = []
    for _ in range(3):
        m = _PGM_TOKEN.match(raw, pos)
        if not m:
            raise TruncatedPayloadError(f"{path}: header is truncated")
        try:
            fields.append(int(m.group(1)))
        except ValueError:
            raise FormatError(f"{path}: malformed header") from None
        pos = m.end()
    w, h, maxval = fields
    if maxval < 1 or maxval > 255:
        raise FormatError(f"{path}: only 8-bit PGM is supported")
    pos += 1  # single whitespace byte after maxval
    payload = raw[pos:pos + w * h]
    if len(payload) < w * h:
        raise TruncatedPayloadError(f"{path}: payload has {len(payload)} bytes, expected {w * h}")
    labels = np.frombuffer(payload, dtype=np.uint8).reshape(h, w).astype(np.int64)
    declared = maxval if num_objects is None else int(num_objects)
    if labels.size and labels.max() > declared:
        raise LabelRangeError(f"{path}: label {int(labels.max())} exceeds declared object count {declared}")
    return labels


# -- key = value configs ------------------------------------------------------

def parse_config(text):
    """Ordered ``{key: value-string}`` from ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key or key in out:
            raise ConfigError(f"line {lineno}: empty or duplicate key {key!r}")
        out[key] = value
    return out


def _floats(value, key, n=None):
    try:
        vals = [float(v) for v in value.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"{key}: expected numbers, got {value!r}") from None
    if n is not None and len(vals) != n:
        raise ConfigError(f"{key}: expected {n} numbers, got {len(vals)}")
    return vals


def _int(value, key):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"{key}: expected an integer, got {value!r}") from None


_SCALARS = {"height": int, "width": int, "channels": int, "frames": int,
            "noise": float, "drift": float, "seed": int}
_DISK_KEY = re.compile(r"^(object|occluder)\.(\d+)\.(center|velocity|radius|signature)$")


def synth_spec_from_config(text):
    """Build a :class:`SynthSpec`; unknown keys are errors.

    Example::

        height = 24
        width = 24
        object.1.center = 8, 8
        object.1.velocity = 0, 1
        object.1.radius = 4
    """
    cfg = parse_config(text)
    kwargs = {}
    disks = {"object": {}, "occluder": {}}
    for key, value in cfg.items():
        if key in _SCALARS:
            kwargs[key] = _int(value, key) if _SCALARS[key] is int else _floats(value, key, 1)[0]
        elif key == "background.signature":
            kwargs["background"] = np.array(_floats(value, key))
        elif key == "objects":
            kwargs["_count"] = _int(value, key)
        else:
            m = _DISK_KEY.match(key)
            if not m:
                raise ConfigError(f"unknown key {key!r}")
            kind, idx, attr = m.group(1), int(m.group(2)), m.group(3)
            entry = disks[kind].setdefault(idx, {})
            if attr in ("center", "velocity"):
                entry[attr] = tuple(_floats(value, key, 2))
            elif attr == "radius":
                entry[attr] = _floats(value, key, 1)[0]
            else:
                entry[attr] = np.array(_floats(value, key))
    count = kwargs.pop("_count", None)
    built = {}
    for kind, entries in disks.items():
        built[kind] = []
        for idx in sorted(entries):
            if "center" not in entries[idx]:
                raise ConfigError(f"{kind}.{idx}.center is required")
            built[kind].append(Disk(**entries[idx]))
    if count is not None and count != len(built["object"]):
        raise ConfigError(f"objects = {count} but {len(built['object'])} objects are described")
    return SynthSpec(objects=built["object"], occluders=built["occluder"], **kwargs)


def synth_spec_to_config(spec):
    def fmt(vals):
        return ", ".join(repr(float(v)) for v in vals)

    lines = [f"height = {spec.height}", f"width = {spec.width}", f"channels = {spec.channels}",
             f"frames = {spec.frames}", f"noise = {spec.noise!r}", f"drift = {spec.drift!r}",
             f"seed = {spec.seed}", f"objects = {len(spec.objects)}"]
    if spec.background is not None:
        lines.append(f"background.signature = {fmt(spec.background)}")
    for kind, disks in (("object", spec.objects), ("occluder", spec.occluders)):
        for i, d in enumerate(disks, 1):
            lines += [f"{kind}.{i}.center = {fmt(d.center)}",
                      f"{kind}.{i}.velocity = {fmt(d.velocity)}",
                      f"{kind}.{i}.radius = {float(d.radius)!r}"]
            if d.signature is not None:
                lines.append(f"{kind}.{i}.signature = {fmt(d.signature)}")
    return "\n".join(lines) + "\n"


def fusion_params_from_config(text):
    cfg = parse_config(text)
    allowed = {"weights.bg", "weights.fg", "bias.bg", "bias.fg"}
    unknown = set(cfg) - allowed
    if unknown:
        raise ConfigError(f"unknown keys {sorted(unknown)}")
    missing = allowed - set(cfg)
    if missing:
        raise ConfigError(f"missing keys {sorted(missing)}")
    wb, wf = _floats(cfg["weights.bg"], "weights.bg"), _floats(cfg["weights.fg"], "weights.fg")
    if len(wb) != len(wf):
        raise ConfigError("weights.bg and weights.fg differ in length")
    return FusionParams(np.array([wb, wf]),
                        np.array([_floats(cfg["bias.bg"], "bias.bg", 1)[0],
                                  _floats(cfg["bias.fg"], "bias.fg", 1)[0]]))


def fusion_params_to_config(params):
    def fmt(vals):
        return ", ".join(repr(float(v)) for v in vals)

    return (f"weights.bg = {fmt(params.weights[0])}\n"
            f"weights.fg = {fmt(params.weights[1])}\n"
            f"bias.bg = {float(params.bias[0])!r}\n"
            f"bias.fg = {float(params.bias[1])!r}\n")


def write_text(path, text):
    with _atomic(path) as fh:
        fh.write(text.encode("utf-8"))


# -- tracker state ------------------------------------------------------------

def save_state(path, state):
    """Exact (float64) snapshot of a :class:`TrackerState` as an ``.npz`` archive."""
    bank = state.bank
    with _atomic(path) as fh:
        np.savez(
            fh,
            global_=bank.global_.data,
            local=bank.local.data,
            local_frame=bank.local.source_frame,
            medial=bank.medial.vectors,
            medial_alpha=bank.medial.alpha,
            medial_initialized=bank.medial.initialized,
            prev_probs=state.prev_probs.data,
            frame_index=state.frame_index,
            weights=state.params.weights,
            bias=state.params.bias,
        )


def load_state(path):
    try:
        with np.load(path, allow_pickle=False) as z:
            bank = TemplateBank(
                global_=WeightedTemplate(z["global_"], 0),
                local=WeightedTemplate(z["local"], int(z["local_frame"])),
                medial=MedialTemplate(z["medial"], float(z["medial_alpha"]), bool(z["medial_initialized"])),
            )
            return TrackerState(
                bank=bank,
                prev_probs=ProbabilityField(z["prev_probs"]),
                frame_index=int(z["frame_index"]),
                params=FusionParams(z["weights"], z["bias"]),
            )
    except (OSError, ValueError, KeyError) as exc:
        if isinstance(exc, FormatError):
            raise
        raise FormatError(f"{path}: not a tracker state snapshot ({exc})") from exc


# -- evaluation report --------------------------------------------------------

def report_to_csv(report):
    """Rows sorted by (sequence, object, frame), then a ``#``-prefixed summary block."""
    lines = ["sequence,object,frame,J,F"]
    for r in sorted(report.rows, key=lambda r: (r.sequence, r.object, r.frame)):
        lines.append(f"{r.sequence},{r.object},{r.frame},{r.J:.6f},{r.F:.6f}")
    lines.append("")
    for seq in sorted(report.sequence_J):
        lines.append(f"# sequence {seq}: J = {report.sequence_J[seq]:.6f}, F = {report.sequence_F[seq]:.6f}")
    lines.append(f"# J_mean = {report.J:.6f}")
    lines.append(f"# F_mean = {report.F:.6f}")
    lines.append(f"# JF_mean = {report.JF:.6f}")
    return "\n".join(lines) + "\n"
