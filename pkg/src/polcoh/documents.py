"""JSON documents exchanged between polcoh commands.

Every document is an object with ``schema_version``, ``kind`` and
``payload``. Complex numbers are ``[re, im]`` pairs and angles are radians.
"""

import json
import sys
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterator, Optional, Union

import numpy as np

from .errors import DocumentError, PolcohError
from .fock import CoherenceTensor, FixedNState, make_fixed_n_state, mixed_state
from .gadget import EulerAngles, MeasurementSetting, PlateAngles, TableRow
from .recipe import GroupDiagnostics, MeasurementRecord, SettingsPlan
from .tomography import DensityEstimate, StokesCovariance, StokesVector

SCHEMA_VERSION = "1"
KINDS = ("state", "plan", "records", "tensor", "density", "table", "stokes")


@dataclass
class Document:
    kind: str
    payload: dict[str, Any] = field(default_factory=dict)
    schema_version: str = SCHEMA_VERSION

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Any) -> "Document":
        if not isinstance(data, dict):
            raise DocumentError("document must be a JSON object")
        for key in ("schema_version", "kind", "payload"):
            if key not in data:
                raise DocumentError(f"document has no {key!r}")
        if data["schema_version"] != SCHEMA_VERSION:
            raise DocumentError(f"unsupported schema version {data['schema_version']!r}")
        if data["kind"] not in KINDS:
            raise DocumentError(f"unknown document kind {data['kind']!r}")
        if not isinstance(data["payload"], dict):
            raise DocumentError("document payload must be a JSON object")
        return cls(kind=data["kind"], payload=data["payload"], schema_version=data["schema_version"])

    def expect(self, kind: str) -> dict[str, Any]:
        """Return the payload, failing unless the document has the given kind."""
        if self.kind != kind:
            raise DocumentError(f"expected a {kind} document, got {self.kind}")
        return self.payload


def dumps(doc: Document, indent: Optional[int] = 2) -> str:
    """Serialize to strict JSON; NaN and infinities are refused."""
    try:
        return json.dumps(doc.to_dict(), indent=indent, allow_nan=False)
    except ValueError as exc:
        raise DocumentError(f"{doc.kind} document has a non-finite number: {exc}") from exc


def loads(text: str) -> Document:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid JSON: {exc}") from exc
    return Document.from_dict(data)


def read_document(path: Union[str, Path]) -> Document:
    """Read a document from a file, or from stdin when path is ``-``.

    Args:
        path: File path or ``-``

    Returns:
        The parsed document
    """
    if str(path) == "-":
        return loads(sys.stdin.read())
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise DocumentError(f"cannot read {path}: {exc.strerror or exc}") from exc
    return loads(text)


def write_document(doc: Document, path: Optional[Path] = None, indent: Optional[int] = 2) -> None:
    """Write a document to a file, or to stdout when no path is given."""
    text = dumps(doc, indent=indent)
    if path is None or str(path) == "-":
        print(text)
        return
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding="utf-8")


@contextmanager
def _malformed(kind: str) -> Iterator[None]:
    try:
        yield
    except PolcohError:
        raise
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise DocumentError(f"malformed {kind} payload: {exc!r}") from exc


def encode_complex(values: np.ndarray) -> list:
    """Nested lists with every complex number as ``[re, im]``."""
    array = np.asarray(values, dtype=complex)
    return np.stack([array.real, array.imag], axis=-1).tolist()


def decode_complex(data: Any) -> np.ndarray:
    array = np.asarray(data, dtype=float)
    if array.ndim == 0 or array.shape[-1] != 2:
        raise ValueError("complex numbers must be [re, im] pairs")
    return array[..., 0] + 1j * array[..., 1]


def state_to_payload(state: FixedNState) -> dict[str, Any]:
    if state.kind == "pure":
        return {"N": state.N, "form": "pure", "amplitudes": encode_complex(state.amplitudes)}
    return {"N": state.N, "form": "mixed", "density": encode_complex(state.density)}


def state_from_payload(payload: dict[str, Any]) -> FixedNState:
    """Rebuild and validate a state."""
    with _malformed("state"):
        N = int(payload["N"])
        form = payload["form"]
        if form == "pure":
            return make_fixed_n_state(N, decode_complex(payload["amplitudes"]))
        if form == "mixed":
            state = mixed_state(decode_complex(payload["density"]))
            if state.N != N:
                raise DocumentError(f"density is for N={state.N}, payload says N={N}")
            return state
        raise DocumentError(f"unknown state form {form!r}")


def plan_to_payload(plan: SettingsPlan) -> dict[str, Any]:
    return {
        "N": plan.N,
        "parity": plan.parity,
        "thetas": list(plan.thetas),
        "phis": list(plan.phis),
        "extra": None if plan.extra is None else [plan.extra.theta, plan.extra.phi],
        "theta_fractions_of_pi": [str(f) for f in plan.theta_fractions],
        "phi_fractions_of_pi": [str(f) for f in plan.phi_fractions],
        "settings": [[s.theta, s.phi] for s in plan.settings],
    }


def plan_from_payload(payload: dict[str, Any]) -> SettingsPlan:
    with _malformed("plan"):
        extra = payload.get("extra")
        return SettingsPlan(
            N=int(payload["N"]),
            parity=payload["parity"],
            thetas=tuple(float(t) for t in payload["thetas"]),
            phis=tuple(float(p) for p in payload["phis"]),
            extra=None if extra is None else MeasurementSetting(float(extra[0]), float(extra[1])),
        )


def records_to_payload(
    records: list[MeasurementRecord], N: int, rng: Optional[dict[str, Any]] = None
) -> dict[str, Any]:
    payload: dict[str, Any] = {"N": N, "records": [r.to_dict() for r in records]}
    if rng is not None:
        payload["rng"] = rng
    return payload


def records_from_payload(payload: dict[str, Any]) -> tuple[int, list[MeasurementRecord]]:
    """Return the moment order and the records."""
    with _malformed("records"):
        return int(payload["N"]), [MeasurementRecord.from_dict(r) for r in payload["records"]]


def tensor_to_payload(
    tensor: CoherenceTensor, conditions: Optional[dict[int, float]] = None
) -> dict[str, Any]:
    payload: dict[str, Any] = {
        "N": tensor.N,
        "values": encode_complex(tensor.values),
        "stderr": None if tensor.stderr is None else tensor.stderr.tolist(),
        "diagnostics": [
            {"m": d.m, "betas": list(d.betas), "condition": d.condition, "residual": d.residual}
            for d in tensor.diagnostics
        ],
    }
    if conditions is not None:
        payload["condition_report"] = {str(m): c for m, c in conditions.items()}
    return payload


def tensor_from_payload(payload: dict[str, Any]) -> CoherenceTensor:
    with _malformed("tensor"):
        stderr = payload.get("stderr")
        return CoherenceTensor(
            N=int(payload["N"]),
            values=decode_complex(payload["values"]),
            stderr=None if stderr is None else np.asarray(stderr, dtype=float),
            diagnostics=tuple(
                GroupDiagnostics(
                    m=int(d["m"]),
                    betas=tuple(int(b) for b in d["betas"]),
                    condition=float(d["condition"]),
                    residual=float(d["residual"]),
                )
                for d in payload.get("diagnostics", [])
            ),
        )


def density_to_payload(estimate: DensityEstimate, project_psd: bool = False) -> dict[str, Any]:
    return {
        "N": estimate.state.N,
        "density": encode_complex(estimate.state.density),
        "trace": estimate.trace,
        "min_eigenvalue": estimate.min_eigenvalue,
        "warnings": [f"{type(w).__name__}: {w}" for w in estimate.warnings],
        "project_psd": project_psd,
    }


def density_from_payload(payload: dict[str, Any]) -> FixedNState:
    """The estimated density as an unvalidated mixed state."""
    with _malformed("density"):
        return FixedNState(
            N=int(payload["N"]), kind="mixed", density=decode_complex(payload["density"])
        )


def table_to_payload(rows: list[TableRow]) -> dict[str, Any]:
    return {
        "rows": [
            {
                "theta": row.setting.theta,
                "phi": row.setting.phi,
                "euler": list(row.euler.as_tuple()),
                "plates": list(row.plates.as_tuple()),
                "printed_euler": None if row.printed_euler is None else list(row.printed_euler),
                "printed_plates": None if row.printed_plates is None else list(row.printed_plates),
                "euler_match": row.euler_match,
                "plates_match": row.plates_match,
                "note": row.note,
            }
            for row in rows
        ]
    }


def _optional_angles(values: Any) -> Optional[tuple[float, ...]]:
    return None if values is None else tuple(float(v) for v in values)


def table_from_payload(payload: dict[str, Any]) -> list[TableRow]:
    with _malformed("table"):
        return [
            TableRow(
                setting=MeasurementSetting(float(r["theta"]), float(r["phi"])),
                euler=EulerAngles(*(float(v) for v in r["euler"])),
                plates=PlateAngles(*(float(v) for v in r["plates"])),
                printed_euler=_optional_angles(r.get("printed_euler")),
                printed_plates=_optional_angles(r.get("printed_plates")),
                euler_match=r.get("euler_match"),
                plates_match=r.get("plates_match"),
                note=r.get("note"),
            )
            for r in payload["rows"]
        ]


def stokes_to_payload(means: StokesVector, covariance: StokesCovariance) -> dict[str, Any]:
    return {"means": means.as_array().tolist(), "covariance": covariance.v.tolist()}


def stokes_from_payload(payload: dict[str, Any]) -> tuple[StokesVector, StokesCovariance]:
    with _malformed("stokes"):
        return (
            StokesVector(*(float(v) for v in payload["means"])),
            StokesCovariance(np.asarray(payload["covariance"], dtype=float)),
        )
