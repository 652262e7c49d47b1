"""Deterministic parameter initialization keyed by parameter name.

Each parameter draws from its own generator seeded by (seed, qualified
name), so a module's initial values depend only on the seed and the names
of its own parameters. Two model variants built with the same seed then
agree exactly on every parameter they share, no matter which extra heads
one of them carries. Ablation comparisons rely on this.

Scheme: matrices ~ N(0, 0.02); one-dimensional ``*.weight`` (normalization
gains) = 1; biases and scalar offsets = 0; any other vector ~ N(0, 0.02).
"""

from __future__ import annotations

import hashlib

import torch
from torch import nn


def derive_seed(seed: int, name: str) -> int:
    digest = hashlib.sha256(f"{seed}:{name}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "little")


def seed_parameters(module: nn.Module, seed: int, prefix: str = "",
                    skip: tuple[str, ...] = ()) -> None:
    """Re-initialize parameters of ``module`` in place.

    Parameters whose qualified name starts with an entry of ``skip`` are
    left untouched (used to protect loaded encoder weights).
    """
    with torch.no_grad():
        for name, param in module.named_parameters():
            if any(name.startswith(s) for s in skip):
                continue
            qualified = f"{prefix}{name}"
            generator = torch.Generator().manual_seed(derive_seed(seed, qualified))
            base = name.rsplit(".", 1)[-1]
            if base == "bias" or base == "c" or param.ndim == 0:
                param.zero_()
            elif base == "weight" and param.ndim == 1:
                param.fill_(1.0)
            else:
                param.normal_(0.0, 0.02, generator=generator)
        # Re-zero embedding padding rows the normal fill overwrote.
        for name, submodule in module.named_modules():
            if any(f"{name}.".startswith(s) for s in skip):
                continue
            if isinstance(submodule, nn.Embedding) and submodule.padding_idx is not None:
                submodule.weight[submodule.padding_idx].zero_()
