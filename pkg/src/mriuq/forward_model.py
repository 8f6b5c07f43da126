"""Acquisition operator y = S F Phi x + w, its adjoints, and a simulator.

* Phi multiplies the image by each coil sensitivity map (L complex planes).
* F is the unitary 2-D DFT per coil plane.
* S selects the kept k-space locations of a binary mask, identical for
  every coil; measured data is stored in compact form, one complex value
  per kept location per coil, so the likelihood never sees unsampled
  locations. S^T is the zero-filling embed and S^T S the 0/1 projector.

The adjoint of Phi restricted to real images takes the real part:
Re(sum_l conj(phi_l) * e_l). Noise is circular complex Gaussian with
E|w_k|^2 = sigma^2 (real/imag parts each have std sigma/sqrt(2)).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grids import CoilStack, ImageGrid, as_image, dft2


@dataclass(frozen=True)
class SamplingMask:
    """Binary k-space sampling pattern; kept locations in row-major order."""

    keep: np.ndarray

    def __post_init__(self):
        keep = np.asarray(self.keep, dtype=bool)
        if keep.ndim != 2:
            raise ValueError(f"mask must be 2-D, got shape {keep.shape}")
        idx = np.flatnonzero(keep)
        if idx.size < 1:
            raise ValueError("mask must keep at least one location")
        object.__setattr__(self, "keep", keep)
        object.__setattr__(self, "_idx", idx)

    @property
    def height(self) -> int:
        return self.keep.shape[0]

    @property
    def width(self) -> int:
        return self.keep.shape[1]

    @property
    def count(self) -> int:
        return self._idx.size

    def select(self, stack: np.ndarray) -> np.ndarray:
        """Apply S: gather kept locations. (H,W)->(M,), (L,H,W)->(L,M)."""
        a = np.asarray(stack)
        if a.shape[-2:] != self.keep.shape:
            raise ValueError(
                f"stack shape {a.shape} does not match mask {self.keep.shape}"
            )
        flat = a.reshape(a.shape[:-2] + (-1,))
        return flat[..., self._idx]

    def embed(self, values: np.ndarray) -> np.ndarray:
        """Apply S^T: scatter compact values back, zeros elsewhere."""
        v = np.asarray(values)
        if v.shape[-1] != self.count:
            raise ValueError(
                f"expected {self.count} values per coil, got {v.shape[-1]}"
            )
        flat = np.zeros(v.shape[:-1] + (self.height * self.width,), dtype=v.dtype)
        flat[..., self._idx] = v
        return flat.reshape(v.shape[:-1] + self.keep.shape)


@dataclass(frozen=True)
class CoilSensitivities:
    """L complex sensitivity maps phi_l with per-pixel sum |phi_l|^2 > 0."""

    maps: np.ndarray
    sos: np.ndarray = field(init=False)  # sum-of-squares Phi^H Phi diagonal

    def __post_init__(self):
        maps = np.asarray(self.maps, dtype=np.complex128)
        if maps.ndim != 3:
            raise ValueError(f"coil maps must be (L, H, W), got shape {maps.shape}")
        if not np.all(np.isfinite(maps.real)) or not np.all(np.isfinite(maps.imag)):
            raise ValueError("coil maps contain non-finite entries")
        sos = np.sum(np.abs(maps) ** 2, axis=0)
        if np.any(sos <= 0.0):
            raise ValueError("coil sensitivities vanish at some pixel")
        object.__setattr__(self, "maps", maps)
        object.__setattr__(self, "sos", sos)

    @property
    def L(self) -> int:
        return self.maps.shape[0]

    @property
    def height(self) -> int:
        return self.maps.shape[1]

    @property
    def width(self) -> int:
        return self.maps.shape[2]


@dataclass(frozen=True)
class KSpaceData:
    """Measured k-space in compact form: one row of values per coil."""

    values: np.ndarray  # complex (L, M), M = mask.count
    mask: SamplingMask
    sigma: float = 0.0

    def __post_init__(self):
        values = np.atleast_2d(np.asarray(self.values, dtype=np.complex128))
        if values.ndim != 2:
            raise ValueError(f"values must be (L, M), got shape {values.shape}")
        if values.shape[1] != self.mask.count:
            raise ValueError(
                f"per-coil sample count {values.shape[1]} != mask.count {self.mask.count}"
            )
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "values", values)

    @property
    def L(self) -> int:
        return self.values.shape[0]


def _check_coil_shapes(shape: tuple[int, int], coils: CoilSensitivities):
    if (coils.height, coils.width) != shape:
        raise ValueError(
            f"coil maps {(coils.height, coils.width)} do not match grid {shape}"
        )


def apply_phi(x: ImageGrid, coils: CoilSensitivities) -> CoilStack:
    """Coil weighting e = Phi x: plane l is phi_l * x pointwise."""
    x = np.asarray(x, dtype=np.float64)
    _check_coil_shapes(x.shape, coils)
    return coils.maps * x[None, :, :]


def apply_phi_adjoint(e: CoilStack, coils: CoilSensitivities) -> ImageGrid:
    """Real-restricted adjoint of Phi: Re(sum_l conj(phi_l) * e_l)."""
    e = np.asarray(e, dtype=np.complex128)
    if e.ndim != 3 or e.shape[0] != coils.L:
        raise ValueError(f"stack shape {e.shape} does not match {coils.L} coils")
    _check_coil_shapes(e.shape[1:], coils)
    return np.real(np.sum(np.conj(coils.maps) * e, axis=0))


def apply_mask(d: CoilStack, mask: SamplingMask, sigma: float = 0.0) -> KSpaceData:
    """Selection c = S d: compact values at kept locations, per coil."""
    d = np.asarray(d, dtype=np.complex128)
    if d.ndim == 2:
        d = d[None, :, :]
    return KSpaceData(mask.select(d), mask, sigma)


def mask_adjoint(y: KSpaceData, mask: SamplingMask | None = None) -> CoilStack:
    """Zero-filling embed S^T y: values at kept locations, zeros elsewhere."""
    if mask is not None and not np.array_equal(mask.keep, y.mask.keep):
        raise ValueError("mask does not match the one stored in the k-space data")
    return y.mask.embed(y.values)


def simulate(
    x: ImageGrid,
    coils: CoilSensitivities,
    mask: SamplingMask,
    sigma: float,
    seed: int,
) -> KSpaceData:
    """Simulate y = S F Phi x + w with circular complex Gaussian noise.

    Real and imaginary noise parts each have std sigma/sqrt(2), so the
    per-sample complex variance E|w_k|^2 equals sigma^2. Deterministic
    for a fixed seed.
    """
    x = as_image(x)
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    if (mask.height, mask.width) != x.shape:
        raise ValueError(
            f"mask {(mask.height, mask.width)} does not match image {x.shape}"
        )
    clean = mask.select(dft2(apply_phi(x, coils)))
    rng = np.random.default_rng(seed)
    part_std = sigma / np.sqrt(2.0)
    noise = part_std * (
        rng.standard_normal(clean.shape) + 1j * rng.standard_normal(clean.shape)
    )
    return KSpaceData(clean + noise, mask, sigma)
