"""
Persistência de checkpoints em diretório.

Formato:
    <dir>/manifest.json     nomes, formatos, dtype, versão do formato, hash da configuração
    <dir>/tensors/NNNN.bin  um blob float32 little-endian por tensor
"""

import hashlib
import json
from collections import OrderedDict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Mapping, Optional

import numpy as np
import torch
from torch import nn

from latent_camo.core.exceptions import NotReadyError
from latent_camo.utils.logger import get_logger

FORMAT_VERSION = 1
MANIFEST_NAME = "manifest.json"
_BLOB_DTYPE = np.dtype("<f4")

logger = get_logger(__name__)


@dataclass
class Checkpoint:
    """Conteúdo carregado de um checkpoint."""

    tensors: "OrderedDict[str, torch.Tensor]"
    kind: str
    config_hash: str
    model_config: Dict[str, Any] = field(default_factory=dict)
    metadata: Dict[str, Any] = field(default_factory=dict)


def save_checkpoint(
    directory: Path,
    state: Mapping[str, torch.Tensor],
    kind: str,
    config_hash: str,
    model_config: Optional[Dict[str, Any]] = None,
    metadata: Optional[Dict[str, Any]] = None,
) -> Path:
    """
    Salva um state dict como blobs float32 + manifesto.

    Args:
        directory: Diretório de destino (criado se necessário)
        state: Tensores nomeados (parâmetros e buffers)
        kind: Tipo do modelo ("autoencoder", "denoiser", "critic", "detector")
        config_hash: Hash da configuração que produziu o modelo
        model_config: Hiperparâmetros de arquitetura para reconstrução
        metadata: Informações adicionais (passo, métricas etc.)

    Returns:
        Path: O diretório do checkpoint
    """
    directory = Path(directory)
    blob_dir = directory / "tensors"
    blob_dir.mkdir(parents=True, exist_ok=True)

    entries = []
    for index, (name, tensor) in enumerate(state.items()):
        array = tensor.detach().cpu().to(torch.float32).numpy().astype(_BLOB_DTYPE, copy=False)
        filename = f"tensors/{index:04d}.bin"
        (directory / filename).write_bytes(np.ascontiguousarray(array).tobytes())
        entries.append(
            {"name": name, "shape": list(tensor.shape), "dtype": "float32", "file": filename}
        )

    manifest = {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config_hash": config_hash,
        "model_config": model_config or {},
        "metadata": metadata or {},
        "tensors": entries,
    }
    (directory / MANIFEST_NAME).write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    logger.debug(f"Checkpoint '{kind}' salvo em {directory} ({len(entries)} tensores)")
    return directory


def load_checkpoint(directory: Path, expected_kind: Optional[str] = None) -> Checkpoint:
    """
    Carrega um checkpoint salvo por `save_checkpoint`.

    Raises:
        NotReadyError: Se o diretório, o manifesto ou algum blob estiver ausente ou inválido
    """
    directory = Path(directory)
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise NotReadyError(f"Checkpoint não encontrado: {manifest_path}")
    try:
        manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise NotReadyError(f"Manifesto inválido em {manifest_path}: {e}") from e

    if manifest.get("format_version") != FORMAT_VERSION:
        raise NotReadyError(
            f"Versão de formato não suportada em {manifest_path}: {manifest.get('format_version')}"
        )
    kind = manifest.get("kind", "")
    if expected_kind is not None and kind != expected_kind:
        raise NotReadyError(f"Checkpoint em {directory} é '{kind}', esperado '{expected_kind}'")

    tensors: "OrderedDict[str, torch.Tensor]" = OrderedDict()
    for entry in manifest["tensors"]:
        path = directory / entry["file"]
        if not path.exists():
            raise NotReadyError(f"Blob ausente no checkpoint: {path}")
        shape = tuple(entry["shape"])
        array = np.frombuffer(path.read_bytes(), dtype=_BLOB_DTYPE)
        if array.size != int(np.prod(shape, dtype=np.int64)):
            raise NotReadyError(f"Blob com tamanho inesperado: {path}")
        tensors[entry["name"]] = torch.from_numpy(array.astype(np.float32).reshape(shape))

    return Checkpoint(
        tensors=tensors,
        kind=kind,
        config_hash=manifest.get("config_hash", ""),
        model_config=manifest.get("model_config", {}),
        metadata=manifest.get("metadata", {}),
    )


def restore_module(module: nn.Module, checkpoint: Checkpoint) -> nn.Module:
    """
    Copia os tensores de um checkpoint para um módulo já construído.

    Raises:
        NotReadyError: Se os nomes ou formatos não coincidirem
    """
    own = module.state_dict()
    missing = sorted(set(own) - set(checkpoint.tensors))
    unexpected = sorted(set(checkpoint.tensors) - set(own))
    if missing or unexpected:
        raise NotReadyError(
            f"Checkpoint incompatível: faltando {missing}, inesperados {unexpected}"
        )
    converted = OrderedDict()
    for name, value in own.items():
        loaded = checkpoint.tensors[name]
        if tuple(loaded.shape) != tuple(value.shape):
            raise NotReadyError(
                f"Formato incompatível para {name}: {tuple(loaded.shape)} vs {tuple(value.shape)}"
            )
        converted[name] = loaded.to(dtype=value.dtype)
    module.load_state_dict(converted)
    return module


def checkpoint_hash(directory: Path) -> str:
    """SHA-256 do manifesto e de todos os blobs de um checkpoint (proveniência)."""
    directory = Path(directory)
    digest = hashlib.sha256()
    manifest_path = directory / MANIFEST_NAME
    if not manifest_path.exists():
        raise NotReadyError(f"Checkpoint não encontrado: {manifest_path}")
    digest.update(manifest_path.read_bytes())
    for blob in sorted((directory / "tensors").glob("*.bin")):
        digest.update(blob.read_bytes())
    return digest.hexdigest()


def parameter_hash(module: nn.Module) -> str:
    """SHA-256 dos parâmetros e buffers de um módulo (detecção de mutação)."""
    digest = hashlib.sha256()
    for name, tensor in module.state_dict().items():
        digest.update(name.encode("utf-8"))
        digest.update(tensor.detach().cpu().contiguous().numpy().tobytes())
    return digest.hexdigest()
