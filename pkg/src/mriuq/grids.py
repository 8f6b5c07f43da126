"""Core grid types and the two linear transforms everything else composes.

Conventions used throughout the package:

* an image is a real float64 array of shape (H, W) with H, W >= 2;
* a complex grid is a complex128 array of shape (H, W); a coil stack adds
  a leading coil axis, shape (L, H, W);
* ``dft2``/``idft2`` are unitary (norm="ortho") and act on the trailing
  two axes, so the inverse is the exact adjoint and Parseval holds:
  ||dft2(v)||_2 = ||v||_2;
* ``grad`` uses forward differences with a Neumann boundary (the last
  column of gx and last row of gy are zero); ``div`` is -grad^T, so
  <grad x, p> = <x, -div p> holds to round-off for arbitrary fields p.

All functions are pure and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

ImageGrid = np.ndarray
ComplexGrid = np.ndarray
CoilStack = np.ndarray


def as_image(a, name: str = "image") -> np.ndarray:
    """Validate and return ``a`` as a float64 (H, W) image, H, W >= 2."""
    arr = np.asarray(a, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 2 or arr.shape[1] < 2:
        raise ValueError(f"{name} must be at least 2x2, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


def as_complex_grid(a, name: str = "grid") -> np.ndarray:
    """Validate and return ``a`` as a complex128 (H, W) grid."""
    arr = np.asarray(a, dtype=np.complex128)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr.real)) or not np.all(np.isfinite(arr.imag)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class GradientField:
    """Forward-difference gradient of an image: per-pixel (gx, gy)."""

    gx: np.ndarray
    gy: np.ndarray

    def __post_init__(self):
        gx = np.asarray(self.gx, dtype=np.float64)
        gy = np.asarray(self.gy, dtype=np.float64)
        if gx.ndim != 2 or gx.shape != gy.shape:
            raise ValueError(
                f"gx and gy must be 2-D with equal shapes, got {gx.shape} and {gy.shape}"
            )
        object.__setattr__(self, "gx", gx)
        object.__setattr__(self, "gy", gy)

    @property
    def shape(self) -> tuple[int, int]:
        return self.gx.shape


def dft2(img: np.ndarray) -> np.ndarray:
    """Unitary 2-D DFT over the trailing two axes."""
    return np.fft.fft2(np.asarray(img, dtype=np.complex128), norm="ortho")


def idft2(img: np.ndarray) -> np.ndarray:
    """Unitary inverse 2-D DFT; exact adjoint and inverse of ``dft2``."""
    return np.fft.ifft2(np.asarray(img, dtype=np.complex128), norm="ortho")


def grad(img: np.ndarray) -> GradientField:
    """Forward-difference gradient with Neumann boundary.

    gx(i, j) = x(i, j+1) - x(i, j) for j < W-1, else 0;
    gy(i, j) = x(i+1, j) - x(i, j) for i < H-1, else 0.
    """
    x = np.asarray(img, dtype=np.float64)
    gx = np.zeros_like(x)
    gy = np.zeros_like(x)
    gx[:, :-1] = x[:, 1:] - x[:, :-1]
    gy[:-1, :] = x[1:, :] - x[:-1, :]
    return GradientField(gx, gy)


def div(field: GradientField) -> np.ndarray:
    """Discrete divergence, defined as the negative adjoint of ``grad``.

    The last column of gx and last row of gy do not enter (they are the
    Neumann ghost entries), so the adjoint identity holds for arbitrary
    fields. ``div(grad(x))`` is the 5-point Neumann Laplacian.
    """
    gx, gy = field.gx, field.gy
    out = np.zeros_like(gx)
    out[:, :-1] += gx[:, :-1]
    out[:, 1:] -= gx[:, :-1]
    out[:-1, :] += gy[:-1, :]
    out[1:, :] -= gy[:-1, :]
    return out
