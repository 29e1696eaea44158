import dataclasses
import hashlib
import json
import math
from enum import Enum
from typing import Any, Iterable

import numpy as np
from pydantic import BaseModel

# ordering (a, b, a+, b+)
_SYMPLECTIC_FORM = np.array(
    [[0, 0, 1, 0],
     [0, 0, 0, 1],
     [-1, 0, 0, 0],
     [0, -1, 0, 0]], dtype=complex)

_EXCHANGE = np.array(
    [[0, 0, 1, 0],
     [0, 0, 0, 1],
     [1, 0, 0, 0],
     [0, 1, 0, 0]], dtype=complex)


class helper_method:
    @staticmethod
    def symplectic_form() -> np.ndarray:
        return _SYMPLECTIC_FORM.copy()

    @staticmethod
    def exchange_matrix() -> np.ndarray:
        return _EXCHANGE.copy()

    @staticmethod
    def conjugation_image(matrix: np.ndarray) -> np.ndarray:
        """Swap the annihilation and creation blocks and conjugate. Fixed point: drift and Hamiltonian matrices."""
        return _EXCHANGE @ np.conj(matrix) @ _EXCHANGE

    @staticmethod
    def correlation_image(matrix: np.ndarray) -> np.ndarray:
        """E C^dagger E. Fixed point: second moments C_ij = <v_i v_j>, since conj<v_i v_j> = <v_j+ v_i+>."""
        return _EXCHANGE @ np.conj(matrix).T @ _EXCHANGE

    @staticmethod
    def symplectic_inverse(transform: np.ndarray) -> np.ndarray:
        return -_SYMPLECTIC_FORM @ transform.T @ _SYMPLECTIC_FORM

    @staticmethod
    def lyapunov_operator(drift: np.ndarray) -> np.ndarray:
        # row-major vec: vec(M C + C M^T) = (M (x) 1 + 1 (x) M) vec(C)
        identity = np.eye(drift.shape[0], dtype=complex)
        return np.kron(drift, identity) + np.kron(identity, drift)

    @staticmethod
    def max_abs(matrix: np.ndarray) -> float:
        return float(np.max(np.abs(matrix))) if np.size(matrix) else 0.0

    @staticmethod
    def frozen(matrix: np.ndarray) -> np.ndarray:
        out = np.array(matrix, dtype=complex, copy=True)
        out.setflags(write=False)
        return out

    @staticmethod
    def halve_doubled_keys(data: Any, names: Iterable[str]) -> Any:
        """Accept `2kappa_c = 0.1` style keys and store the halved value under `kappa_c`."""
        if not isinstance(data, dict):
            return data
        out = dict(data)
        for name in names:
            doubled = f"2{name}"
            if doubled not in out:
                continue
            if name in out:
                raise ValueError(f"give either '{name}' or '{doubled}', not both")
            value = out.pop(doubled)
            out[name] = float(value) / 2.0 if value is not None else None
        return out

    @staticmethod
    def to_jsonable(value: Any) -> Any:
        if isinstance(value, BaseModel):
            return helper_method.to_jsonable(value.model_dump(mode="python"))
        if dataclasses.is_dataclass(value) and not isinstance(value, type):
            return {f.name: helper_method.to_jsonable(getattr(value, f.name)) for f in dataclasses.fields(value)}
        if isinstance(value, Enum):
            return value.value
        if isinstance(value, dict):
            return {str(k): helper_method.to_jsonable(v) for k, v in value.items()}
        if isinstance(value, (list, tuple)):
            return [helper_method.to_jsonable(v) for v in value]
        if isinstance(value, np.ndarray):
            if np.iscomplexobj(value):
                return {"real": helper_method.to_jsonable(value.real.tolist()),
                        "imag": helper_method.to_jsonable(value.imag.tolist())}
            return helper_method.to_jsonable(value.tolist())
        if isinstance(value, (np.bool_, bool)):
            return bool(value)
        if isinstance(value, (np.integer,)):
            return int(value)
        if isinstance(value, (np.floating, float)):
            value = float(value)
            return value if math.isfinite(value) else None
        if isinstance(value, complex):
            return {"real": helper_method.to_jsonable(value.real), "imag": helper_method.to_jsonable(value.imag)}
        return value

    @staticmethod
    def cache_key(namespace: str, payload: Any) -> str:
        text = json.dumps(helper_method.to_jsonable(payload), sort_keys=True, separators=(",", ":"))
        return f"{namespace}:{hashlib.sha1(text.encode('utf-8')).hexdigest()}"
