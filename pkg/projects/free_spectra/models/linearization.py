"""Affine matrix pencils L = b_0 ⊗ 1 + Σ_j b_j ⊗ X_j."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np

from projects.free_spectra.errors import DimensionMismatchError


@dataclass(frozen=True)
class BlockLayout:
    """Bookkeeping of the (corner, u, v, Q) partition and the parts that were stacked."""

    dim: int
    parts: Tuple[int, ...] = ()
    method: str = "monomial"

    @property
    def u_shape(self) -> Tuple[int, int]:
        return (1, self.dim - 1)

    @property
    def v_shape(self) -> Tuple[int, int]:
        return (self.dim - 1, 1)

    @property
    def q_shape(self) -> Tuple[int, int]:
        return (self.dim - 1, self.dim - 1)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "dim": self.dim,
            "method": self.method,
            "parts": list(self.parts),
            "u": list(self.u_shape),
            "v": list(self.v_shape),
            "Q": list(self.q_shape),
        }


@dataclass(frozen=True, eq=False)
class Linearization:
    """Coefficients ``coeffs[j]`` = b_j, j = 0..n_vars, each N×N complex."""

    coeffs: np.ndarray
    layout: BlockLayout = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=complex)
        if coeffs.ndim != 3 or coeffs.shape[1] != coeffs.shape[2] or coeffs.shape[0] < 2:
            raise DimensionMismatchError(f"coefficients must have shape (n+1, N, N), got {coeffs.shape}")
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)
        if self.layout is None:
            object.__setattr__(self, "layout", BlockLayout(coeffs.shape[1], (coeffs.shape[1],)))

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    @property
    def n_vars(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def b0(self) -> np.ndarray:
        return self.coeffs[0]

    def b(self, j: int) -> np.ndarray:
        return self.coeffs[j]

    @property
    def u(self) -> np.ndarray:
        return self.coeffs[:, 0, 1:]

    @property
    def v(self) -> np.ndarray:
        return self.coeffs[:, 1:, 0]

    @property
    def Q(self) -> np.ndarray:
        return self.coeffs[:, 1:, 1:]

    @property
    def corner(self) -> np.ndarray:
        return self.coeffs[:, 0, 0]

    def is_selfadjoint(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self.coeffs - np.conj(np.swapaxes(self.coeffs, 1, 2)))) <= tol)

    def pencil(self, mats: Sequence[np.ndarray]) -> np.ndarray:
        """L evaluated at matrices X_j: b_0 ⊗ I + Σ b_j ⊗ X_j (size N·d)."""
        if len(mats) != self.n_vars:
            raise DimensionMismatchError(f"expected {self.n_vars} matrices, got {len(mats)}")
        d = np.asarray(mats[0]).shape[0]
        out = np.kron(self.b0, np.eye(d, dtype=complex))
        for j, x in enumerate(mats, start=1):
            if np.any(self.coeffs[j]):
                out = out + np.kron(self.coeffs[j], np.asarray(x, dtype=complex))
        return out

    def scalar_pencil(self, values: Sequence[complex]) -> np.ndarray:
        """L at scalar values of the variables."""
        values = np.concatenate([[1.0], np.asarray(values, dtype=complex)])
        return np.tensordot(values, self.coeffs, axes=1)

    def to_dict(self) -> Dict[str, Any]:
        pairs = np.stack([self.coeffs.real, self.coeffs.imag], axis=-1)
        return {
            "dimension": self.dim,
            "n_vars": self.n_vars,
            "layout": self.layout.to_dict(),
            "coefficients": pairs.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Linearization":
        pairs = np.asarray(data["coefficients"], dtype=float)
        layout = data.get("layout") or {}
        return cls(
            pairs[..., 0] + 1j * pairs[..., 1],
            BlockLayout(int(data["dimension"]), tuple(layout.get("parts", ())), layout.get("method", "monomial")),
        )
