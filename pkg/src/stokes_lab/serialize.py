"""JSON wire formats.

Complex matrices serialize as nested [re, im] pairs.  Tensor entries are
flattened with the leftmost subscript slowest, matching the in-memory
layout.  All writers sort keys so identical inputs give identical bytes.
"""

from __future__ import annotations

import json

import numpy as np

from .moments import MomentComponents, PolarizationTensor, component_classes
from .states import BlockDiagonalState, ManifoldState
from .tomography import (
    ManifoldReconstruction,
    MeasurementRecord,
    MeasurementSetting,
    ReconstructionResult,
)
from .fock import Direction


def _complex_matrix(values) -> list:
    arr = np.asarray(values, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in arr]


def _complex_vector(values) -> list:
    return [[float(z.real), float(z.imag)] for z in np.asarray(values, dtype=complex)]


def _matrix_back(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def _vector_back(pairs) -> np.ndarray:
    return np.array([complex(re, im) for re, im in pairs])


def operator_to_json(operator, n_photons: int) -> dict:
    return {"N": int(n_photons), "rows": _complex_matrix(operator)}


def operator_from_json(payload) -> tuple[np.ndarray, int]:
    return _matrix_back(payload["rows"]), int(payload["N"])


def _block_to_json(n_photons: int, probability: float, state: ManifoldState) -> dict:
    block = {"N": int(n_photons), "pN": float(probability)}
    if state.is_pure:
        block["vector"] = _complex_vector(state.amplitudes)
    else:
        block["matrix"] = _complex_matrix(state.matrix)
    return block


def state_to_json(state, family: str | None = None, params: dict | None = None) -> dict:
    """Serialize any supported state as its block decomposition.

    family/params are descriptive metadata echoed back to the reader.
    """
    from .states import as_block_diagonal

    block = as_block_diagonal(state)
    return {
        "type": family or "custom",
        "params": params or {},
        "truncation_deficit": block.truncation_deficit,
        "blocks": [_block_to_json(n, p, s) for n, p, s in block.blocks],
    }


def state_from_json(payload) -> BlockDiagonalState:
    blocks = []
    for entry in payload["blocks"]:
        n = int(entry["N"])
        if "vector" in entry:
            state = ManifoldState.pure(n, _vector_back(entry["vector"]))
        else:
            state = ManifoldState.mixed(n, _matrix_back(entry["matrix"]))
        blocks.append((n, float(entry["pN"]), state))
    return BlockDiagonalState(tuple(blocks), truncation_deficit=float(payload.get("truncation_deficit", 0.0)))


def tensor_to_json(tensor: PolarizationTensor) -> dict:
    flat = tensor.values.reshape(-1)
    return {
        "order": tensor.order,
        "N": tensor.n_photons,
        "index_convention": "leftmost subscript slowest",
        "entries": _complex_vector(flat),
    }


def tensor_from_json(payload) -> PolarizationTensor:
    order = int(payload["order"])
    values = _vector_back(payload["entries"]).reshape((3,) * order)
    n = payload.get("N")
    return PolarizationTensor(order, None if n is None else int(n), values)


def components_to_json(components: MomentComponents) -> dict:
    return {
        "order": components.order,
        "N": components.n_photons,
        "values": {f"{k},{l}": components.values[(k, l)] for k, l in component_classes(components.order)},
    }


def components_from_json(payload) -> MomentComponents:
    values = {}
    for key, v in payload["values"].items():
        k, l = key.split(",")
        values[(int(k), int(l))] = float(v)
    n = payload.get("N")
    return MomentComponents(int(payload["order"]), None if n is None else int(n), values)


def record_to_json(record: MeasurementRecord) -> dict:
    d = record.setting.direction
    return {
        "direction": [d.x, d.y, d.z],
        "shots": record.setting.shots,
        "seed": record.setting.seed,
        "counts": [
            {"N": n, "s": s, "count": c}
            for (n, s), c in sorted(record.counts.items())
        ],
    }


def record_from_json(payload) -> MeasurementRecord:
    setting = MeasurementSetting(
        Direction.from_vector(payload["direction"]),
        int(payload["shots"]),
        int(payload["seed"]),
    )
    counts = {(int(e["N"]), int(e["s"])): int(e["count"]) for e in payload["counts"]}
    return MeasurementRecord(setting, counts)


def manifold_reconstruction_to_json(rec: ManifoldReconstruction) -> dict:
    solve = {
        str(order): {
            "condition_number": diag.condition_number,
            "residual": diag.residual,
            "rank": diag.rank,
        }
        for order, diag in rec.solve_diagnostics.items()
    }
    return {
        "N": rec.n_photons,
        "pN": rec.probability,
        "pN_error": rec.probability_error,
        "moment_components": {str(r): components_to_json(c) for r, c in rec.components.items()},
        "tensors": {str(r): tensor_to_json(t) for r, t in rec.tensors.items()},
        "rho": _complex_matrix(rec.state.density()),
        "diagnostics": {
            "condition_number": max(
                (d.condition_number for d in rec.solve_diagnostics.values()), default=1.0
            ),
            "projection_distance": rec.reconstruction.projection_distance,
            "residual": rec.reconstruction.lstsq_residual,
            "per_order": solve,
        },
    }


def result_to_json(result: ReconstructionResult, include_records: bool = False) -> dict:
    payload = {
        "shots": result.shots,
        "seed": result.seed,
        "manifolds": [manifold_reconstruction_to_json(rec) for _, rec in sorted(result.manifolds.items())],
        "skipped": {str(n): reason for n, reason in sorted(result.skipped.items())},
    }
    if include_records:
        payload["records"] = [record_to_json(r) for r in result.records]
    return payload


def dumps(payload) -> str:
    """Canonical byte-stable JSON encoding."""
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), allow_nan=False)
