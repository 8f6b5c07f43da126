"""On-disk formats: raw float64 grids, complex stacks, PBM masks, PGM views.

Every data file gets a JSON sidecar at `<file>.json`:

* real image `<name>.f64`: raw little-endian float64, row-major;
  sidecar {height, width, dtype, scale}.
* complex stack `<name>.c128`: interleaved (re, im) little-endian float64
  per entry, coil-major then row-major; sidecar {height, width, coils}.
  K-space files store one value per kept mask location (row-major order
  of the mask) and add {mask_file, sigma, count}.
* mask `<name>.pbm`: binary PBM (P4), bit 1 = sampled location;
  sidecar {height, width, ratio, scheme, seed}.
* 16-bit PGM view `<name>.pgm` (P5, maxval 65535, big-endian samples):
  values clipped to [0, scale] and mapped linearly; sidecar {scale}.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import InputError
from .forward_model import KSpaceData, SamplingMask


def _write_sidecar(path: Path, meta: dict) -> None:
    path.with_name(path.name + ".json").write_text(
        json.dumps(meta, indent=2, sort_keys=True) + "\n"
    )


def _read_sidecar(path: Path) -> dict:
    sidecar = path.with_name(path.name + ".json")
    if not sidecar.exists():
        raise InputError(f"missing sidecar {sidecar}")
    return json.loads(sidecar.read_text())


def write_image(path, img: np.ndarray, scale: float = 1.0) -> None:
    path = Path(path)
    arr = np.ascontiguousarray(img, dtype="<f8")
    path.write_bytes(arr.tobytes())
    _write_sidecar(
        path,
        {
            "height": arr.shape[0],
            "width": arr.shape[1],
            "dtype": "float64-le",
            "scale": scale,
        },
    )


def read_image(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise InputError(f"missing image file {path}")
    meta = _read_sidecar(path)
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    return data.reshape(meta["height"], meta["width"]).astype(np.float64)


def write_complex_stack(path, stack: np.ndarray, extra: dict | None = None) -> None:
    path = Path(path)
    arr = np.asarray(stack, dtype=np.complex128)
    if arr.ndim == 2:
        arr = arr[None]
    inter = np.empty(arr.shape + (2,), dtype="<f8")
    inter[..., 0] = arr.real
    inter[..., 1] = arr.imag
    path.write_bytes(np.ascontiguousarray(inter).tobytes())
    meta = {"height": arr.shape[1], "width": arr.shape[2], "coils": arr.shape[0]}
    meta.update(extra or {})
    _write_sidecar(path, meta)


def read_complex_stack(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise InputError(f"missing complex file {path}")
    meta = _read_sidecar(path)
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    data = data.reshape(meta["coils"], meta["height"], meta["width"], 2)
    return (data[..., 0] + 1j * data[..., 1]).astype(np.complex128)


def write_kspace(path, ks: KSpaceData, mask_file: str) -> None:
    path = Path(path)
    inter = np.empty(ks.values.shape + (2,), dtype="<f8")
    inter[..., 0] = ks.values.real
    inter[..., 1] = ks.values.imag
    path.write_bytes(np.ascontiguousarray(inter).tobytes())
    _write_sidecar(
        path,
        {
            "height": ks.mask.height,
            "width": ks.mask.width,
            "coils": ks.L,
            "count": ks.mask.count,
            "mask_file": mask_file,
            "sigma": ks.sigma,
        },
    )


def read_kspace(path, mask: SamplingMask) -> KSpaceData:
    path = Path(path)
    if not path.exists():
        raise InputError(f"missing k-space file {path}")
    meta = _read_sidecar(path)
    if meta["count"] != mask.count:
        raise InputError(
            f"k-space sample count {meta['count']} does not match mask {mask.count}"
        )
    data = np.frombuffer(path.read_bytes(), dtype="<f8")
    data = data.reshape(meta["coils"], meta["count"], 2)
    values = (data[..., 0] + 1j * data[..., 1]).astype(np.complex128)
    return KSpaceData(values, mask, float(meta["sigma"]))


def write_mask(path, mask: SamplingMask, meta: dict | None = None) -> None:
    path = Path(path)
    h, w = mask.height, mask.width
    bits = np.packbits(mask.keep.astype(np.uint8), axis=1)
    header = f"P4\n{w} {h}\n".encode("ascii")
    path.write_bytes(header + bits.tobytes())
    sidecar = {"height": h, "width": w}
    sidecar.update(meta or {})
    _write_sidecar(path, sidecar)


def read_mask(path) -> SamplingMask:
    path = Path(path)
    if not path.exists():
        raise InputError(f"missing mask file {path}")
    raw = path.read_bytes()
    if not raw.startswith(b"P4"):
        raise InputError(f"{path} is not a binary PBM file")
    # header: magic, whitespace-separated width and height, single whitespace
    fields: list[bytes] = []
    pos = 2
    while len(fields) < 2:
        while pos < len(raw) and raw[pos : pos + 1].isspace():
            pos += 1
        if raw[pos : pos + 1] == b"#":  # comment line
            while pos < len(raw) and raw[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(raw) and not raw[pos : pos + 1].isspace():
            pos += 1
        fields.append(raw[start:pos])
    pos += 1  # single whitespace after the header
    w, h = int(fields[0]), int(fields[1])
    row_bytes = (w + 7) // 8
    bits = np.frombuffer(raw[pos : pos + h * row_bytes], dtype=np.uint8)
    keep = np.unpackbits(bits.reshape(h, row_bytes), axis=1)[:, :w].astype(bool)
    return SamplingMask(keep)


def write_pgm16(path, img: np.ndarray, scale: float | None = None) -> None:
    path = Path(path)
    arr = np.asarray(img, dtype=np.float64)
    if scale is None:
        top = float(np.max(arr))
        scale = top if top > 0 else 1.0
    levels = np.clip(arr / scale, 0.0, 1.0) * 65535.0
    samples = np.round(levels).astype(">u2")
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii")
    path.write_bytes(header + np.ascontiguousarray(samples).tobytes())
    _write_sidecar(path, {"height": arr.shape[0], "width": arr.shape[1], "scale": scale})


def write_csv(path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join("" if v is None else str(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
