"""
The module reads and writes `model.bin` checkpoints.

Layout (all little-endian): 8-byte magic 'SCABMODL', u32 format version, u32 reserved; u32 fields D, d,
conditioning kind (0 none, 1 discrete, 2 continuous), conditioning width, output head (0 identity, 1 sigmoid),
hidden layer count H and the H hidden widths; then every parameter tensor in registration order as raw f32.
"""

import numpy as np
import torch

from app.networks.model import (
    CONDITION_DISCRETE,
    CONDITION_KINDS,
    OUTPUT_HEADS,
    ScabNetwork,
)
from app.utils.exceptions import FormatError

MAGIC = b"SCABMODL"
VERSION = 1
HEADER_BYTES = 16


def save_model(network: ScabNetwork, path: str) -> None:
    """
    Writes the network architecture and parameters.

    Args:
        network (ScabNetwork): The network to persist.
        path (str): The checkpoint file.
    """
    fields = [
        network.d_input,
        network.latent_dim,
        CONDITION_KINDS.index(network.condition_kind),
        network.condition_width,
        OUTPUT_HEADS.index(network.output_head),
        len(network.hidden_dims),
        *network.hidden_dims,
    ]
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(np.array([VERSION, 0], dtype="<u4").tobytes())
        f.write(np.array(fields, dtype="<u4").tobytes())
        for parameter in network.parameters():
            f.write(parameter.detach().cpu().numpy().astype("<f4").tobytes())


def load_model(path: str) -> ScabNetwork:
    """
    Rebuilds a network from a checkpoint.

    Args:
        path (str): The checkpoint file.

    Returns:
        ScabNetwork: A float32 network holding the stored parameters.

    Raises:
        FormatError: If the magic, version, header or payload size is wrong.
    """
    with open(path, "rb") as f:
        blob = f.read()
    if len(blob) < HEADER_BYTES + 24 or blob[:8] != MAGIC:
        raise FormatError(path, "not a model checkpoint (bad magic or truncated header)")
    version = int(np.frombuffer(blob, dtype="<u4", count=1, offset=8)[0])
    if version != VERSION:
        raise FormatError(path, f"unsupported checkpoint version {version}")
    d_input, latent_dim, kind, width, head, n_hidden = (
        int(v) for v in np.frombuffer(blob, dtype="<u4", count=6, offset=HEADER_BYTES)
    )
    offset = HEADER_BYTES + 24
    if kind >= len(CONDITION_KINDS) or head >= len(OUTPUT_HEADS):
        raise FormatError(path, "unknown conditioning kind or output head")
    if len(blob) < offset + 4 * n_hidden:
        raise FormatError(path, "truncated header")
    hidden_dims = [int(v) for v in np.frombuffer(blob, dtype="<u4", count=n_hidden, offset=offset)]
    offset += 4 * n_hidden

    condition_kind = CONDITION_KINDS[kind]
    network = ScabNetwork(
        d_input=d_input,
        latent_dim=latent_dim,
        hidden_dims=hidden_dims,
        condition_kind=condition_kind,
        g_categories=width if condition_kind == CONDITION_DISCRETE else None,
        output_head=OUTPUT_HEADS[head],
    )
    expected = offset + 4 * sum(p.numel() for p in network.parameters())
    if len(blob) != expected:
        raise FormatError(path, f"size mismatch: expected {expected} bytes, found {len(blob)}")
    with torch.no_grad():
        for parameter in network.parameters():
            count = parameter.numel()
            values = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
            parameter.copy_(torch.from_numpy(values.astype(np.float32).reshape(parameter.shape)))
            offset += 4 * count
    return network
