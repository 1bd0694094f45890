"""
Model checkpoints: a ``key = value`` text header followed by the parameters as
a flat little-endian float32 array.
"""

from pathlib import Path
from typing import Optional, Union

import numpy as np
import torch

from .calibration import CalibrationConstants
from .predictor import DTYPE, LOGVAR_MAX, LOGVAR_MIN, GINModel

MAGIC = "QAOATRUST-CHECKPOINT"
VERSION = 1
HEADER_END = "END"


class CheckpointError(ValueError):
    """Raised for malformed, truncated or incompatible checkpoints."""


def _header(model: GINModel, calibration: Optional[CalibrationConstants], count: int) -> str:
    lines = [
        f"{MAGIC} {VERSION}",
        f"k = {model.k}",
        f"p = {model.p}",
        f"hidden = {model.hidden}",
        f"layers = {model.num_layers}",
        f"gaussian = {int(model.gaussian)}",
        f"logvar_min = {LOGVAR_MIN!r}",
        f"logvar_max = {LOGVAR_MAX!r}",
        f"params = {count}",
    ]
    if calibration is not None:
        lines.extend(calibration.to_text().strip().splitlines())
    lines.append(HEADER_END)
    return "\n".join(lines) + "\n"


def save_checkpoint(
    path: Union[str, Path],
    model: GINModel,
    calibration: Optional[CalibrationConstants] = None,
) -> None:
    """
    Write a model (and optionally its calibration constants) to ``path``.

    Parameters are stored as float32; models returned by training are already
    float32-exact, so loading reproduces their outputs bit for bit.
    """
    flat = torch.cat([t.detach().reshape(-1) for t in model.state_dict().values()])
    payload = flat.to(torch.float32).numpy().astype("<f4").tobytes()
    header = _header(model, calibration, flat.numel()).encode("utf-8")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_bytes(header + payload)


def _parse_header(raw: bytes) -> tuple[dict[str, str], int]:
    marker = f"\n{HEADER_END}\n".encode("utf-8")
    end = raw.find(marker)
    if end < 0:
        raise CheckpointError("Checkpoint header is missing its END line")
    lines = raw[:end].decode("utf-8", errors="replace").splitlines()
    if not lines or lines[0].split()[:1] != [MAGIC]:
        raise CheckpointError("Not a qaoatrust checkpoint")
    if lines[0] != f"{MAGIC} {VERSION}":
        raise CheckpointError(f"Unsupported checkpoint version line {lines[0]!r}")
    fields = {}
    for line in lines[1:]:
        key, sep, value = line.partition("=")
        if not sep:
            raise CheckpointError(f"Malformed header line {line!r}")
        fields[key.strip()] = value.strip()
    return fields, end + len(marker)


def load_checkpoint(
    path: Union[str, Path], k: Optional[int] = None
) -> tuple[GINModel, Optional[CalibrationConstants]]:
    """
    Load a model and its embedded calibration constants.

    Parameters
    ----------
    path : str or Path
    k : int, optional
        Spectral encoding dimension the caller will feed; must match the header.

    Returns
    -------
    tuple
        The model in eval mode and the calibration constants, or ``None`` when
        the checkpoint has not been calibrated.

    Raises
    ------
    CheckpointError
        On a malformed header, a ``k`` mismatch, clamp bounds that differ from
        this build, or a payload of the wrong length.
    """
    raw = Path(path).read_bytes()
    fields, offset = _parse_header(raw)
    try:
        model = GINModel(
            k=int(fields["k"]),
            p=int(fields["p"]),
            hidden=int(fields["hidden"]),
            layers=int(fields["layers"]),
            gaussian=bool(int(fields["gaussian"])),
        )
        count = int(fields["params"])
        bounds = (float(fields["logvar_min"]), float(fields["logvar_max"]))
    except (KeyError, ValueError) as exc:
        raise CheckpointError(f"Invalid checkpoint header: {exc}") from None

    if k is not None and k != model.k:
        raise CheckpointError(f"Checkpoint was trained with k={model.k}, features use k={k}")
    if bounds != (LOGVAR_MIN, LOGVAR_MAX):
        raise CheckpointError(f"Checkpoint clamp bounds {bounds} differ from {(LOGVAR_MIN, LOGVAR_MAX)}")

    state = model.state_dict()
    expected = sum(t.numel() for t in state.values())
    if count != expected:
        raise CheckpointError(f"Header declares {count} parameters, architecture needs {expected}")
    payload = raw[offset:]
    if len(payload) != 4 * count:
        raise CheckpointError(
            f"Payload has {len(payload)} bytes, expected {4 * count}; file is truncated or corrupted"
        )

    flat = torch.as_tensor(np.frombuffer(payload, dtype="<f4").astype(np.float64), dtype=DTYPE)
    position = 0
    loaded = {}
    for name, tensor in state.items():
        size = tensor.numel()
        loaded[name] = flat[position : position + size].reshape(tensor.shape)
        position += size
    model.load_state_dict(loaded)
    model.eval()

    calibration = None
    if "u_med" in fields:
        try:
            calibration = CalibrationConstants.from_text(
                "\n".join(f"{key} = {fields[key]}" for key in ("u_med", "u_iqr", "conformal_scores") if key in fields)
            )
        except ValueError as exc:
            raise CheckpointError(f"Invalid calibration block: {exc}") from None
    return model, calibration
